//! Synthetic traffic generation and packet traces.
//!
//! Trace files hold one packet per line, `<cycle> <src> <dst> <size>`, with
//! `#` starting a comment.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selector::TrafficMatrix;
use crate::topology::{MeshSpec, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TracePacket {
    pub cycle: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub packets: Vec<TracePacket>,
}

impl Trace {
    pub fn parse(text: &str) -> Result<Self> {
        let mut packets = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let num = |k: usize, name: &str| -> Result<u64> {
                fields[k].parse::<u64>().map_err(|_| {
                    err(format!(
                        "{name} `{}` is not a non-negative integer",
                        fields[k]
                    ))
                })
            };
            let size = num(3, "size")?;
            if size == 0 || size > u64::from(u32::MAX) {
                return Err(err(format!(
                    "size {size} must be between 1 and {}",
                    u32::MAX
                )));
            }
            packets.push(TracePacket {
                cycle: num(0, "cycle")?,
                src: num(1, "src")? as NodeId,
                dst: num(2, "dst")? as NodeId,
                size: size as u32,
            });
        }
        Ok(Self { packets })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# cycle src dst size\n");
        for p in &self.packets {
            writeln!(out, "{} {} {} {}", p.cycle, p.src, p.dst, p.size)
                .expect("writing to a String");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn total_flits(&self) -> u64 {
        self.packets.iter().map(|p| u64::from(p.size)).sum()
    }

    /// Rejects packets naming routers outside the mesh or sending to themselves.
    pub fn validate(&self, mesh: &MeshSpec) -> Result<()> {
        for (i, p) in self.packets.iter().enumerate() {
            if !mesh.contains(p.src) || !mesh.contains(p.dst) {
                return Err(Error::Ingestion(format!(
                    "packet {i} ({} -> {}) names a router outside the {}x{} mesh",
                    p.src, p.dst, mesh.width, mesh.height
                )));
            }
            if p.src == p.dst {
                return Err(Error::Ingestion(format!(
                    "packet {i} loops back to router {}",
                    p.src
                )));
            }
        }
        Ok(())
    }

    /// Packets ordered by injection cycle; ties keep file order.
    pub fn sorted(&self) -> Self {
        let mut packets = self.packets.clone();
        packets.sort_by_key(|p| p.cycle);
        Self { packets }
    }

    /// Every packet twice, at its original cycle.
    pub fn densified(&self) -> Self {
        let packets = self.packets.iter().flat_map(|&p| [p, p]).collect();
        Self { packets }
    }
}

/// Per-pair flit volume of a trace.
pub fn trace_to_matrix(trace: &Trace, mesh: &MeshSpec) -> Result<TrafficMatrix> {
    trace.validate(mesh)?;
    let mut m = TrafficMatrix::zeros(mesh.nodes());
    for p in &trace.packets {
        m.add(p.src, p.dst, f64::from(p.size))?;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// Frequently communicating pairs over a uniform background.
    Fcp,
    /// Many-to-few-to-many: requests to a few memory nodes, replies back.
    Mfm,
    Uniform,
    NearestNeighbor,
    Transpose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Side,
    Center,
    Corner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub placement: Placement,
    /// Pair count (FCP) or memory-node count (MFM).
    pub endpoints: usize,
    /// Mean flits offered per node per cycle. For MFM it is the request
    /// probability of each non-memory node.
    pub injection_rate: f64,
    pub duration: u64,
    pub seed: u64,
    pub packet_size: u32,
    /// Fraction of FCP flits exchanged inside the pairs.
    pub pair_share: f64,
    pub reply_size: u32,
    /// Cycles between an MFM request and its reply.
    pub service_delay: u64,
}

impl Default for PatternSpec {
    fn default() -> Self {
        Self {
            kind: PatternKind::Uniform,
            placement: Placement::Center,
            endpoints: 8,
            injection_rate: 0.03,
            duration: 5000,
            seed: 1,
            packet_size: 1,
            pair_share: 0.9,
            reply_size: 4,
            service_delay: 10,
        }
    }
}

impl PatternSpec {
    pub fn fcp(placement: Placement) -> Self {
        Self {
            kind: PatternKind::Fcp,
            placement,
            ..Self::default()
        }
    }

    pub fn mfm(placement: Placement) -> Self {
        Self {
            kind: PatternKind::Mfm,
            placement,
            endpoints: 4,
            injection_rate: 0.01,
            ..Self::default()
        }
    }

    pub fn of_kind(kind: PatternKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Short label such as `fcp-center` or `uniform`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            PatternKind::Fcp => "fcp",
            PatternKind::Mfm => "mfm",
            PatternKind::Uniform => return "uniform".into(),
            PatternKind::NearestNeighbor => return "nearest-neighbor".into(),
            PatternKind::Transpose => return "transpose".into(),
        };
        let place = match self.placement {
            Placement::Side => "side",
            Placement::Center => "center",
            Placement::Corner => "corner",
        };
        format!("{kind}-{place}")
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.injection_rate) {
            return Err(Error::invalid(format!(
                "injection rate {} outside [0, 1]",
                self.injection_rate
            )));
        }
        if self.packet_size == 0 || self.reply_size == 0 {
            return Err(Error::invalid("packet sizes must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.pair_share) {
            return Err(Error::invalid("pair_share must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Frequently communicating pairs; each pair talks in both directions.
pub fn fcp_pairs(
    mesh: &MeshSpec,
    placement: Placement,
    pairs: usize,
) -> Result<Vec<(NodeId, NodeId)>> {
    let (w, h) = (mesh.width, mesh.height);
    if pairs == 0 || pairs > h {
        return Err(Error::invalid(format!(
            "FCP needs 1..={h} pairs, got {pairs}"
        )));
    }
    let rows = (0..h).take(pairs);
    match placement {
        // Opposite edges through the center: (0, y) with (w-1, h-1-y).
        Placement::Center => Ok(rows
            .map(|y| (mesh.node(0, y), mesh.node(w - 1, h - 1 - y)))
            .collect()),
        Placement::Side => Ok(rows
            .map(|y| (mesh.node(0, y), mesh.node(w - 1, y)))
            .collect()),
        Placement::Corner => Err(Error::invalid(
            "FCP supports side and center placement only",
        )),
    }
}

/// Memory nodes for a placement, at most four.
pub fn memory_nodes(mesh: &MeshSpec, placement: Placement, count: usize) -> Result<Vec<NodeId>> {
    let (w, h) = (mesh.width, mesh.height);
    let all = match placement {
        Placement::Corner => vec![
            mesh.node(0, 0),
            mesh.node(w - 1, 0),
            mesh.node(0, h - 1),
            mesh.node(w - 1, h - 1),
        ],
        Placement::Center => {
            let (cx, cy) = (w / 2, h / 2);
            if cx == 0 || cy == 0 {
                return Err(Error::invalid("mesh too small for central memory nodes"));
            }
            vec![
                mesh.node(cx - 1, cy - 1),
                mesh.node(cx, cy - 1),
                mesh.node(cx - 1, cy),
                mesh.node(cx, cy),
            ]
        }
        Placement::Side => vec![
            mesh.node(w / 2, 0),
            mesh.node(0, h / 2),
            mesh.node(w - 1, h / 2),
            mesh.node(w / 2, h - 1),
        ],
    };
    let mut all_unique = all.clone();
    all_unique.sort_unstable();
    all_unique.dedup();
    if count == 0 || count > all.len() || all_unique.len() != all.len() {
        return Err(Error::invalid(format!(
            "{count} memory nodes cannot be placed at {placement:?} on a {w}x{h} mesh"
        )));
    }
    Ok(all.into_iter().take(count).collect())
}

/// Trace plus the generator's own flit bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub trace: Trace,
    pub volume: TrafficMatrix,
    /// Requests sent to each memory node during the few phase (MFM only).
    pub requests_per_destination: Vec<u64>,
}

pub fn generate(spec: &PatternSpec, mesh: &MeshSpec) -> Result<Trace> {
    Ok(generate_counted(spec, mesh)?.trace)
}

pub fn generate_counted(spec: &PatternSpec, mesh: &MeshSpec) -> Result<Generated> {
    spec.validate()?;
    mesh.validate()?;
    let n = mesh.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut packets = Vec::new();
    let mut volume = TrafficMatrix::zeros(n);
    let mut requests = vec![0u64; n];
    let size = spec.packet_size;
    let prob = spec.injection_rate / f64::from(size);
    let mut emit = |packets: &mut Vec<TracePacket>, cycle, src, dst, size: u32| -> Result<()> {
        volume.add(src, dst, f64::from(size))?;
        packets.push(TracePacket {
            cycle,
            src,
            dst,
            size,
        });
        Ok(())
    };
    let uniform_dst = |rng: &mut ChaCha8Rng, src: NodeId| {
        let d = rng.gen_range(0..n - 1);
        if d >= src {
            d + 1
        } else {
            d
        }
    };

    match spec.kind {
        PatternKind::Uniform | PatternKind::NearestNeighbor | PatternKind::Transpose => {
            if prob > 1.0 {
                return Err(Error::invalid(
                    "injection rate exceeds one packet per cycle",
                ));
            }
            for cycle in 0..spec.duration {
                for src in 0..n {
                    if !rng.gen_bool(prob) {
                        continue;
                    }
                    let dst = match spec.kind {
                        PatternKind::Uniform => uniform_dst(&mut rng, src),
                        PatternKind::NearestNeighbor => {
                            let (x, y) = mesh.coord(src);
                            let mut nbrs = Vec::with_capacity(4);
                            if x + 1 < mesh.width {
                                nbrs.push(mesh.node(x + 1, y));
                            }
                            if x > 0 {
                                nbrs.push(mesh.node(x - 1, y));
                            }
                            if y + 1 < mesh.height {
                                nbrs.push(mesh.node(x, y + 1));
                            }
                            if y > 0 {
                                nbrs.push(mesh.node(x, y - 1));
                            }
                            *nbrs
                                .choose(&mut rng)
                                .expect("a 2x2 or larger mesh has neighbours")
                        }
                        _ => {
                            let (x, y) = mesh.coord(src);
                            if x == y || x >= mesh.height || y >= mesh.width {
                                continue;
                            }
                            mesh.node(y, x)
                        }
                    };
                    emit(&mut packets, cycle, src, dst, size)?;
                }
            }
        }
        PatternKind::Fcp => {
            let pairs = fcp_pairs(mesh, spec.placement, spec.endpoints)?;
            let mut partner = vec![None; n];
            for &(a, b) in &pairs {
                partner[a] = Some(b);
                partner[b] = Some(a);
            }
            let endpoints = (2 * pairs.len()) as f64;
            let pair_prob = spec.pair_share * prob * n as f64 / endpoints;
            let background_prob = (1.0 - spec.pair_share) * prob;
            if pair_prob > 1.0 {
                return Err(Error::invalid(format!(
                    "pair injection probability {pair_prob:.3} exceeds 1; lower the rate or add pairs"
                )));
            }
            for cycle in 0..spec.duration {
                for src in 0..n {
                    if let Some(dst) = partner[src] {
                        if rng.gen_bool(pair_prob) {
                            emit(&mut packets, cycle, src, dst, size)?;
                        }
                    }
                    if rng.gen_bool(background_prob) {
                        let dst = uniform_dst(&mut rng, src);
                        emit(&mut packets, cycle, src, dst, size)?;
                    }
                }
            }
        }
        PatternKind::Mfm => {
            let memory = memory_nodes(mesh, spec.placement, spec.endpoints)?;
            let mut is_memory = vec![false; n];
            for &m in &memory {
                is_memory[m] = true;
            }
            for cycle in 0..spec.duration {
                for src in 0..n {
                    if is_memory[src] || !rng.gen_bool(spec.injection_rate) {
                        continue;
                    }
                    let mem = *memory.choose(&mut rng).expect("at least one memory node");
                    requests[mem] += 1;
                    emit(&mut packets, cycle, src, mem, 1)?;
                    emit(
                        &mut packets,
                        cycle + spec.service_delay,
                        mem,
                        src,
                        spec.reply_size,
                    )?;
                }
            }
        }
    }
    packets.sort_by_key(|p| p.cycle);
    Ok(Generated {
        trace: Trace { packets },
        volume,
        requests_per_destination: requests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> MeshSpec {
        MeshSpec::default()
    }

    #[test]
    fn zero_rate_is_empty() {
        for kind in [
            PatternKind::Uniform,
            PatternKind::Fcp,
            PatternKind::Mfm,
            PatternKind::Transpose,
            PatternKind::NearestNeighbor,
        ] {
            let spec = PatternSpec {
                injection_rate: 0.0,
                ..PatternSpec::of_kind(kind)
            };
            let spec = if kind == PatternKind::Mfm {
                PatternSpec {
                    endpoints: 4,
                    ..spec
                }
            } else {
                spec
            };
            assert!(
                generate(&spec, &mesh()).unwrap().packets.is_empty(),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = PatternSpec::fcp(Placement::Center);
        let a = generate(&spec, &mesh()).unwrap().render();
        let b = generate(&spec, &mesh()).unwrap().render();
        assert_eq!(a, b);
        let c = generate(&spec.clone().with_seed(2), &mesh())
            .unwrap()
            .render();
        assert_ne!(a, c);
    }

    #[test]
    fn mfm_corner_requests_hit_corners() {
        let m = mesh();
        let g = generate_counted(&PatternSpec::mfm(Placement::Corner), &m).unwrap();
        let corners = [0, 7, 56, 63];
        let requests: Vec<_> = g.trace.packets.iter().filter(|p| p.size == 1).collect();
        assert!(!requests.is_empty());
        assert!(requests.iter().all(|p| corners.contains(&p.dst)));
        let to_corners: u64 = corners.iter().map(|&c| g.requests_per_destination[c]).sum();
        assert_eq!(to_corners as usize, requests.len());
        // Every reply returns to a requester from a corner.
        assert!(g
            .trace
            .packets
            .iter()
            .filter(|p| p.size == 4)
            .all(|p| corners.contains(&p.src)));
    }

    #[test]
    fn fcp_pairs_carry_the_bulk() {
        let m = mesh();
        let pairs = fcp_pairs(&m, Placement::Center, 8).unwrap();
        assert_eq!(pairs[0], (m.node(0, 0), m.node(7, 7)));
        let t = generate(&PatternSpec::fcp(Placement::Center), &m).unwrap();
        let in_pairs = t
            .packets
            .iter()
            .filter(|p| {
                pairs
                    .iter()
                    .any(|&(a, b)| (p.src, p.dst) == (a, b) || (p.src, p.dst) == (b, a))
            })
            .count() as f64;
        let share = in_pairs / t.packets.len() as f64;
        assert!((share - 0.9).abs() < 0.02, "pair share {share}");
        // Offered load per node per cycle close to the requested rate.
        let rate = t.total_flits() as f64 / (64.0 * 5000.0);
        assert!((rate - 0.03).abs() < 0.003, "rate {rate}");
    }

    #[test]
    fn invalid_placements() {
        assert!(fcp_pairs(&mesh(), Placement::Corner, 4).is_err());
        assert!(fcp_pairs(&mesh(), Placement::Side, 9).is_err());
        assert!(memory_nodes(&mesh(), Placement::Side, 5).is_err());
        assert!(memory_nodes(&MeshSpec::new(2, 2), Placement::Side, 4).is_err());
    }

    #[test]
    fn transpose_and_neighbor_destinations() {
        let m = mesh();
        let t = generate(&PatternSpec::of_kind(PatternKind::Transpose), &m).unwrap();
        for p in &t.packets {
            let (x, y) = m.coord(p.src);
            assert_eq!(p.dst, m.node(y, x));
        }
        let t = generate(&PatternSpec::of_kind(PatternKind::NearestNeighbor), &m).unwrap();
        assert!(t.packets.iter().all(|p| m.manhattan(p.src, p.dst) == 1));
    }

    #[test]
    fn matrix_from_trace() {
        let m = mesh();
        assert_eq!(trace_to_matrix(&Trace::default(), &m).unwrap().total(), 0.0);
        let t = Trace::parse("0 0 5 3\n4 0 5 2 # again\n").unwrap();
        assert_eq!(trace_to_matrix(&t, &m).unwrap().get(0, 5), 5.0);
    }

    #[test]
    fn round_trip_matches_generator_counters() {
        let m = mesh();
        for spec in [
            PatternSpec::fcp(Placement::Side),
            PatternSpec::mfm(Placement::Center),
            PatternSpec::of_kind(PatternKind::Uniform),
        ] {
            let g = generate_counted(&spec, &m).unwrap();
            let parsed = Trace::parse(&g.trace.render()).unwrap();
            assert_eq!(parsed, g.trace);
            assert_eq!(trace_to_matrix(&parsed, &m).unwrap(), g.volume);
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("0 1 2 1\n0 1 2\n", 2),
            ("# header\n\n0 1 x 1\n", 3),
            ("0 1 2 0\n", 1),
            ("0 -1 2 1\n", 1),
        ];
        for (text, line) in cases {
            match Trace::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn ingestion_rejects_foreign_routers() {
        let t = Trace::parse("0 0 64 1\n").unwrap();
        assert!(matches!(t.validate(&mesh()), Err(Error::Ingestion(_))));
        let t = Trace::parse("0 3 3 1\n").unwrap();
        assert!(matches!(t.validate(&mesh()), Err(Error::Ingestion(_))));
    }

    #[test]
    fn densified_doubles_volume() {
        let t = generate(&PatternSpec::of_kind(PatternKind::Uniform), &mesh()).unwrap();
        let d = t.densified();
        assert_eq!(d.total_flits(), 2 * t.total_flits());
        assert_eq!(
            d.packets.last().unwrap().cycle,
            t.packets.last().unwrap().cycle
        );
    }
}
