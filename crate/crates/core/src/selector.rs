//! Greedy activation of logical links under a traffic matrix.
//!
//! Latency is estimated analytically as the volume-weighted mean path cost
//! over the hybrid graph: one unit per mesh hop and a fixed cost per
//! photonic traversal. Candidates are activated one at a time in order of
//! decreasing gain, with gains recomputed after every activation.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{candidates, LogicalLinkCandidate, MeshSpec, NodeId, SnakeLayout};

/// Flits exchanged between every ordered router pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    n: usize,
    volume: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct MatrixRecord {
    src: NodeId,
    dst: NodeId,
    volume: f64,
}

impl TrafficMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            volume: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, src: NodeId, dst: NodeId) -> f64 {
        self.volume[src * self.n + dst]
    }

    /// Adds `volume` to `src -> dst`. Self traffic and negative volumes are rejected.
    pub fn add(&mut self, src: NodeId, dst: NodeId, volume: f64) -> Result<()> {
        if src >= self.n || dst >= self.n {
            return Err(Error::Ingestion(format!(
                "pair {src}->{dst} outside a {}-router matrix",
                self.n
            )));
        }
        if src == dst {
            return Err(Error::Ingestion(format!("self traffic at router {src}")));
        }
        if !(volume >= 0.0 && volume.is_finite()) {
            return Err(Error::Ingestion(format!(
                "volume {volume} for {src}->{dst} must be >= 0"
            )));
        }
        self.volume[src * self.n + dst] += volume;
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.volume.iter().sum()
    }

    /// Non-zero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.volume
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| (i / self.n, i % self.n, v))
    }

    /// Reads `src,dst,volume` rows with a header line.
    pub fn read_csv<R: Read>(reader: R, n: usize) -> Result<Self> {
        let mut m = Self::zeros(n);
        let mut rdr = csv::Reader::from_reader(reader);
        for (i, rec) in rdr.deserialize::<MatrixRecord>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            m.add(rec.src, rec.dst, rec.volume)
                .map_err(|e| Error::Parse {
                    line: i + 2,
                    message: e.to_string(),
                })?;
        }
        Ok(m)
    }

    pub fn load_csv(path: &Path, n: usize) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f, n)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (src, dst, volume) in self.entries() {
            w.serialize(MatrixRecord { src, dst, volume })?;
        }
        w.flush().map_err(|e| Error::io("<matrix csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConstraints {
    /// Links active across the whole network.
    pub total_links: usize,
    /// Outgoing links per router, and separately incoming links per router.
    pub per_node: usize,
}

impl Default for SelectionConstraints {
    fn default() -> Self {
        Self {
            total_links: 32,
            per_node: 4,
        }
    }
}

impl SelectionConstraints {
    pub fn per_snake(&self, snakes: usize) -> usize {
        self.total_links / snakes.max(1)
    }

    pub fn validate(&self, snakes: usize) -> Result<()> {
        if snakes == 0 || self.total_links % snakes != 0 {
            return Err(Error::invalid(format!(
                "total link budget {} is not divisible by {snakes} snakes",
                self.total_links
            )));
        }
        if self.per_node == 0 {
            return Err(Error::invalid("per-node link budget must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingPolicy {
    /// A route uses at most one photonic link.
    SingleSegment,
    /// Routes may chain any number of photonic links.
    Unrestricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    pub hop_cycles: u32,
    pub ingress_cycles: u32,
    pub photonic_cycles: u32,
    pub egress_cycles: u32,
    pub policy: RoutingPolicy,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            hop_cycles: 1,
            ingress_cycles: 1,
            photonic_cycles: 1,
            egress_cycles: 1,
            policy: RoutingPolicy::SingleSegment,
        }
    }
}

impl SelectorConfig {
    pub fn photonic_edge_cost(&self) -> u32 {
        self.ingress_cycles + self.photonic_cycles + self.egress_cycles
    }
}

/// Volume-weighted mean mesh path cost.
pub fn base_latency(mesh: &MeshSpec, traffic: &TrafficMatrix, cfg: &SelectorConfig) -> Result<f64> {
    weighted(traffic, |s, d| mesh.manhattan(s, d) * cfg.hop_cycles)
}

fn weighted(traffic: &TrafficMatrix, cost: impl Fn(NodeId, NodeId) -> u32) -> Result<f64> {
    let total = traffic.total();
    if !(total > 0.0) {
        return Err(Error::UndefinedLatency);
    }
    let sum: f64 = traffic
        .entries()
        .map(|(s, d, v)| v * f64::from(cost(s, d)))
        .sum();
    Ok(sum / total)
}

/// Path costs over the hybrid graph for a set of active links.
#[derive(Debug, Clone)]
pub struct CostModel {
    mesh: MeshSpec,
    cfg: SelectorConfig,
    /// `cost[s * n + d]`.
    cost: Vec<u32>,
}

impl CostModel {
    pub fn new(mesh: &MeshSpec, cfg: &SelectorConfig) -> Self {
        let n = mesh.nodes();
        let mut cost = vec![0; n * n];
        for s in 0..n {
            for d in 0..n {
                cost[s * n + d] = mesh.manhattan(s, d) * cfg.hop_cycles;
            }
        }
        Self {
            mesh: *mesh,
            cfg: *cfg,
            cost,
        }
    }

    pub fn with_links(
        mesh: &MeshSpec,
        cfg: &SelectorConfig,
        links: &[LogicalLinkCandidate],
    ) -> Self {
        let mut m = Self::new(mesh, cfg);
        for l in links {
            m.activate(l.src, l.dst);
        }
        m
    }

    pub fn cost(&self, s: NodeId, d: NodeId) -> u32 {
        self.cost[s * self.mesh.nodes() + d]
    }

    /// Cost of reaching the link's entry and of leaving its exit.
    fn legs(&self, s: NodeId, a: NodeId, b: NodeId, d: NodeId) -> (u32, u32) {
        match self.cfg.policy {
            RoutingPolicy::SingleSegment => (
                self.mesh.manhattan(s, a) * self.cfg.hop_cycles,
                self.mesh.manhattan(b, d) * self.cfg.hop_cycles,
            ),
            RoutingPolicy::Unrestricted => (self.cost(s, a), self.cost(b, d)),
        }
    }

    fn via(&self, s: NodeId, a: NodeId, b: NodeId, d: NodeId) -> u32 {
        let (to, from) = self.legs(s, a, b, d);
        to + self.cfg.photonic_edge_cost() + from
    }

    /// Weighted latency reduction from adding link `a -> b`.
    pub fn gain(&self, a: NodeId, b: NodeId, traffic: &TrafficMatrix) -> f64 {
        let total = traffic.total();
        if !(total > 0.0) {
            return 0.0;
        }
        let mut saved = 0.0;
        for (s, d, v) in traffic.entries() {
            let cur = self.cost(s, d);
            let via = self.via(s, a, b, d);
            if via < cur {
                saved += v * f64::from(cur - via);
            }
        }
        saved / total
    }

    pub fn activate(&mut self, a: NodeId, b: NodeId) {
        let n = self.mesh.nodes();
        // Both policies are exact under a single edge insertion: the new
        // cost is the better of the old path and one through the new edge.
        let mut next = self.cost.clone();
        for s in 0..n {
            for d in 0..n {
                let via = self.via(s, a, b, d);
                if via < next[s * n + d] {
                    next[s * n + d] = via;
                }
            }
        }
        self.cost = next;
    }

    pub fn weighted_latency(&self, traffic: &TrafficMatrix) -> Result<f64> {
        weighted(traffic, |s, d| self.cost(s, d))
    }
}

/// One iteration of the greedy loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub candidate: LogicalLinkCandidate,
    pub gain: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSelection {
    /// Active links in activation order.
    pub links: Vec<LogicalLinkCandidate>,
    pub per_snake: Vec<usize>,
    pub outgoing: Vec<usize>,
    pub incoming: Vec<usize>,
    pub log: Vec<SelectionStep>,
    pub constraints: SelectionConstraints,
}

impl LinkSelection {
    pub fn empty(layout: &SnakeLayout, constraints: SelectionConstraints) -> Self {
        let n = layout.mesh.nodes();
        Self {
            links: Vec::new(),
            per_snake: vec![0; layout.snakes.len()],
            outgoing: vec![0; n],
            incoming: vec![0; n],
            log: Vec::new(),
            constraints,
        }
    }

    /// Whether `c` could be activated without breaking any budget.
    pub fn admits(&self, c: &LogicalLinkCandidate) -> bool {
        let snakes = self.per_snake.len();
        self.links.len() < self.constraints.total_links
            && self.per_snake[c.snake] < self.constraints.per_snake(snakes)
            && self.outgoing[c.src] < self.constraints.per_node
            && self.incoming[c.dst] < self.constraints.per_node
    }

    fn push(&mut self, c: LogicalLinkCandidate) {
        self.per_snake[c.snake] += 1;
        self.outgoing[c.src] += 1;
        self.incoming[c.dst] += 1;
        self.links.push(c);
    }

    /// Checks every budget; used after selection and in audits.
    pub fn within_budgets(&self) -> bool {
        let per_snake = self.constraints.per_snake(self.per_snake.len());
        self.links.len() <= self.constraints.total_links
            && self.per_snake.iter().all(|&c| c <= per_snake)
            && self
                .outgoing
                .iter()
                .all(|&c| c <= self.constraints.per_node)
            && self
                .incoming
                .iter()
                .all(|&c| c <= self.constraints.per_node)
    }
}

/// Greedy link activation.
///
/// Each round takes the highest-gain remaining candidate (ties by
/// `(snake, src, dst)`). Positive-gain candidates that fit the budgets are
/// activated and all gains recomputed; candidates that no longer fit are
/// dropped, since budgets only tighten. The loop ends once the best
/// remaining gain is zero.
pub fn select(
    layout: &SnakeLayout,
    traffic: &TrafficMatrix,
    constraints: &SelectionConstraints,
    cfg: &SelectorConfig,
) -> Result<LinkSelection> {
    constraints.validate(layout.snakes.len())?;
    if traffic.size() != layout.mesh.nodes() {
        return Err(Error::invalid(format!(
            "traffic matrix covers {} routers, mesh has {}",
            traffic.size(),
            layout.mesh.nodes()
        )));
    }
    let mut selection = LinkSelection::empty(layout, *constraints);
    let mut model = CostModel::new(&layout.mesh, cfg);
    let mut remaining: Vec<(LogicalLinkCandidate, f64)> =
        candidates(layout).into_iter().map(|c| (c, 0.0)).collect();
    let mut stale = true;
    while !remaining.is_empty() {
        if stale {
            for (c, g) in remaining.iter_mut() {
                *g = model.gain(c.src, c.dst, traffic);
            }
            stale = false;
        }
        // Candidates are sorted, so the first maximum wins ties.
        let (idx, &(cand, gain)) = remaining
            .iter()
            .enumerate()
            .fold(
                None,
                |best: Option<(usize, &(LogicalLinkCandidate, f64))>, (i, e)| match best {
                    Some((_, b)) if e.1 <= b.1 => best,
                    _ => Some((i, e)),
                },
            )
            .expect("remaining is not empty");
        if gain <= 0.0 {
            break;
        }
        remaining.remove(idx);
        let accepted = selection.admits(&cand);
        selection.log.push(SelectionStep {
            candidate: cand,
            gain,
            accepted,
        });
        if accepted {
            selection.push(cand);
            model.activate(cand.src, cand.dst);
            stale = true;
        }
    }
    Ok(selection)
}

/// What a router does with a packet for a given destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hop {
    Eject,
    Mesh(NodeId),
    /// Index into [`RoutingTables::links`].
    Photonic(usize),
}

/// Next hop per `(router, destination)`.
///
/// Packets that have not yet used a photonic link follow `fresh`; the
/// others follow `post`, which is plain XY under the single-segment policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingTables {
    pub n: usize,
    pub links: Vec<LogicalLinkCandidate>,
    pub fresh: Vec<Hop>,
    pub post: Vec<Hop>,
    /// Cost-to-go of a fresh packet.
    pub cost: Vec<u32>,
    pub policy: RoutingPolicy,
}

impl RoutingTables {
    pub fn next(&self, at: NodeId, dst: NodeId, used_photonic: bool) -> Hop {
        let t = if used_photonic {
            &self.post
        } else {
            &self.fresh
        };
        t[at * self.n + dst]
    }

    pub fn path_cost(&self, s: NodeId, d: NodeId) -> u32 {
        self.cost[s * self.n + d]
    }

    /// Walks the tables from `s` to `d`, returning the visited hops.
    pub fn trace(&self, s: NodeId, d: NodeId) -> Vec<Hop> {
        let mut hops = Vec::new();
        let mut at = s;
        let mut used = false;
        for _ in 0..=4 * self.n {
            let h = self.next(at, d, used);
            hops.push(h);
            match h {
                Hop::Eject => return hops,
                Hop::Mesh(n) => at = n,
                Hop::Photonic(i) => {
                    at = self.links[i].dst;
                    used = true;
                }
            }
        }
        panic!("routing tables loop between {s} and {d}");
    }
}

/// Builds next-hop tables for the active links.
///
/// Mesh segments follow XY order; a photonic link is taken only when it
/// strictly lowers the cost-to-go, with ties among links going to the
/// earliest-activated one.
pub fn routing_tables(
    layout: &SnakeLayout,
    links: &[LogicalLinkCandidate],
    cfg: &SelectorConfig,
) -> RoutingTables {
    let mesh = &layout.mesh;
    let n = mesh.nodes();
    let model = CostModel::with_links(mesh, cfg, links);
    let mut fresh = vec![Hop::Eject; n * n];
    let mut post = vec![Hop::Eject; n * n];
    let c = cfg.photonic_edge_cost();
    for x in 0..n {
        for d in 0..n {
            if x == d {
                continue;
            }
            let xy = Hop::Mesh(mesh.xy_next(x, d).expect("x != d"));
            let target = model.cost(x, d);
            let hop = match cfg.policy {
                RoutingPolicy::SingleSegment => {
                    if target == mesh.manhattan(x, d) * cfg.hop_cycles {
                        xy
                    } else {
                        let (i, l) = links
                            .iter()
                            .enumerate()
                            .find(|(_, l)| {
                                mesh.manhattan(x, l.src) * cfg.hop_cycles
                                    + c
                                    + mesh.manhattan(l.dst, d) * cfg.hop_cycles
                                    == target
                            })
                            .expect("an improved cost comes from some link");
                        if x == l.src {
                            Hop::Photonic(i)
                        } else {
                            Hop::Mesh(mesh.xy_next(x, l.src).expect("x is not the entry"))
                        }
                    }
                }
                RoutingPolicy::Unrestricted => unrestricted_hop(mesh, &model, links, cfg, x, d),
            };
            fresh[x * n + d] = hop;
            post[x * n + d] = match cfg.policy {
                RoutingPolicy::SingleSegment => xy,
                RoutingPolicy::Unrestricted => hop,
            };
        }
    }
    RoutingTables {
        n,
        links: links.to_vec(),
        fresh,
        post,
        cost: (0..n * n).map(|i| model.cost(i / n, i % n)).collect(),
        policy: cfg.policy,
    }
}

fn unrestricted_hop(
    mesh: &MeshSpec,
    model: &CostModel,
    links: &[LogicalLinkCandidate],
    cfg: &SelectorConfig,
    x: NodeId,
    d: NodeId,
) -> Hop {
    let target = model.cost(x, d);
    let (px, py) = mesh.coord(x);
    let (dx, dy) = mesh.coord(d);
    // Mesh neighbours, X moves first, those heading toward the destination
    // ahead of the others.
    let mut nbrs = Vec::with_capacity(4);
    let toward_x = if dx > px {
        [px + 1, px.wrapping_sub(1)]
    } else {
        [px.wrapping_sub(1), px + 1]
    };
    let toward_y = if dy > py {
        [py + 1, py.wrapping_sub(1)]
    } else {
        [py.wrapping_sub(1), py + 1]
    };
    nbrs.push((toward_x[0], py));
    nbrs.push((px, toward_y[0]));
    nbrs.push((toward_x[1], py));
    nbrs.push((px, toward_y[1]));
    for (nx, ny) in nbrs {
        if nx < mesh.width && ny < mesh.height {
            let nb = mesh.node(nx, ny);
            if cfg.hop_cycles + model.cost(nb, d) == target {
                return Hop::Mesh(nb);
            }
        }
    }
    links
        .iter()
        .position(|l| l.src == x && cfg.photonic_edge_cost() + model.cost(l.dst, d) == target)
        .map(Hop::Photonic)
        .expect("shortest path leaves through a mesh or photonic edge")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build, Direction};

    fn mesh8() -> MeshSpec {
        MeshSpec::default()
    }

    fn single_pair(n: usize, s: NodeId, d: NodeId, v: f64) -> TrafficMatrix {
        let mut m = TrafficMatrix::zeros(n);
        m.add(s, d, v).unwrap();
        m
    }

    #[test]
    fn base_latency_cases() {
        let cfg = SelectorConfig::default();
        let m = mesh8();
        assert_eq!(
            base_latency(&m, &single_pair(64, 0, 63, 1.0), &cfg).unwrap(),
            14.0
        );
        let mut nn = TrafficMatrix::zeros(64);
        for x in 0..7 {
            nn.add(x, x + 1, 1.0).unwrap();
            nn.add(x + 1, x, 1.0).unwrap();
        }
        assert_eq!(base_latency(&m, &nn, &cfg).unwrap(), 1.0);
        // Volumes 3 and 1 at costs 10 and 2.
        let mut t = TrafficMatrix::zeros(64);
        t.add(m.node(0, 0), m.node(5, 5), 3.0).unwrap();
        t.add(m.node(0, 0), m.node(1, 1), 1.0).unwrap();
        assert_eq!(base_latency(&m, &t, &cfg).unwrap(), 8.0);
        assert!(matches!(
            base_latency(&m, &TrafficMatrix::zeros(64), &cfg),
            Err(Error::UndefinedLatency)
        ));
    }

    #[test]
    fn express_gain() {
        let cfg = SelectorConfig::default();
        let model = CostModel::new(&mesh8(), &cfg);
        let t = single_pair(64, 0, 63, 2.0);
        assert_eq!(model.gain(0, 63, &t), 11.0);
        assert_eq!(model.gain(8, 16, &t), 0.0);
        let mut after = model.clone();
        after.activate(0, 63);
        assert_eq!(after.gain(0, 63, &t), 0.0);
    }

    #[test]
    fn single_candidate_selected() {
        let layout = build(&MeshSpec::new(2, 2), 1, 2).unwrap();
        // Sites are routers 0 and 3.
        let t = single_pair(4, 0, 3, 1.0);
        let cfg = SelectorConfig {
            photonic_cycles: 0,
            ingress_cycles: 0,
            egress_cycles: 1,
            ..Default::default()
        };
        let sel = select(&layout, &t, &SelectionConstraints::default(), &cfg).unwrap();
        assert_eq!(sel.links.len(), 1);
        assert_eq!((sel.links[0].src, sel.links[0].dst), (0, 3));
        assert_eq!(sel.links[0].direction, Direction::Forward);
    }

    #[test]
    fn zero_traffic_selects_nothing() {
        let layout = build(&mesh8(), 1, 1).unwrap();
        let sel = select(
            &layout,
            &TrafficMatrix::zeros(64),
            &SelectionConstraints::default(),
            &SelectorConfig::default(),
        )
        .unwrap();
        assert!(sel.links.is_empty());
    }

    #[test]
    fn node_budget_binds() {
        let layout = build(&mesh8(), 1, 1).unwrap();
        let m = layout.mesh;
        let mut t = TrafficMatrix::zeros(64);
        for (i, &(x, y)) in [(7, 7), (7, 0), (0, 7), (4, 7), (7, 4)].iter().enumerate() {
            t.add(0, m.node(x, y), 10.0 + i as f64).unwrap();
        }
        let sel = select(
            &layout,
            &t,
            &SelectionConstraints::default(),
            &SelectorConfig::default(),
        )
        .unwrap();
        assert_eq!(sel.outgoing[0], 4);
        assert!(sel.within_budgets());
    }

    #[test]
    fn tables_without_links_are_xy() {
        let layout = build(&mesh8(), 2, 2).unwrap();
        let t = routing_tables(&layout, &[], &SelectorConfig::default());
        for s in 0..64 {
            for d in 0..64 {
                let hop = t.next(s, d, false);
                if s == d {
                    assert_eq!(hop, Hop::Eject);
                } else {
                    assert_eq!(hop, Hop::Mesh(layout.mesh.xy_next(s, d).unwrap()));
                }
            }
        }
    }

    #[test]
    fn express_route_uses_link() {
        let layout = build(&mesh8(), 1, 1).unwrap();
        let link = candidates(&layout)
            .into_iter()
            .find(|c| c.src == 0 && c.dst == 63)
            .unwrap();
        let t = routing_tables(&layout, &[link], &SelectorConfig::default());
        assert_eq!(t.path_cost(0, 63), 3);
        assert_eq!(t.trace(0, 63), vec![Hop::Photonic(0), Hop::Eject]);
        // One hop away from the entry, the detour still pays.
        assert_eq!(t.path_cost(1, 63), 4);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let mut m = TrafficMatrix::zeros(4);
        m.add(0, 3, 5.0).unwrap();
        m.add(2, 1, 1.5).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = TrafficMatrix::read_csv(buf.as_slice(), 4).unwrap();
        assert_eq!(back, m);
        let bad = "src,dst,volume\n0,1,2\n0,9,1\n";
        match TrafficMatrix::read_csv(bad.as_bytes(), 4) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn indivisible_budget_is_rejected() {
        let layout = build(&mesh8(), 8, 1).unwrap();
        let c = SelectionConstraints {
            total_links: 30,
            per_node: 4,
        };
        assert!(select(
            &layout,
            &TrafficMatrix::zeros(64),
            &c,
            &SelectorConfig::default()
        )
        .is_err());
    }
}
