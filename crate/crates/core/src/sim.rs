//! Trace-driven cycle-level simulation of the hybrid mesh.
//!
//! Routers are single-stage: a flit at the head of an input VC is routed,
//! granted and switched in one cycle, and appears in the downstream buffer
//! `hop_cycles` later. Each input port has four VCs with fixed roles:
//!
//! * VC0, VC1: packets that have not yet crossed a photonic link;
//! * VC2: packets whose next hop at this router is a photonic link;
//! * VC3: packets that have crossed a photonic link.
//!
//! The main 5×5 crossbar serves VC0, VC1 and VC3; the add-on crossbar
//! connects the VC2 lanes of all five inputs to up to four outgoing logical
//! links, so photonic-bound flits never compete with mesh traffic. A logical
//! link delivers into the Local input VC3 of its exit router after
//! `photonic_cycles`. Flow control is credit based on start-of-cycle
//! occupancy plus flits in flight, and a packet holds each VC from head
//! allocation until its tail has been sent into it (wormhole with
//! non-atomic VC reuse): a VC may queue several packets back to back, but
//! their flits never interleave.
//!
//! Every cycle runs in two phases: grants are computed from the state at the
//! start of the cycle, then all moves are committed together.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selector::{Hop, RoutingTables};
use crate::topology::{MeshSpec, NodeId};
use crate::traffic::Trace;

pub const PORTS: usize = 5;
pub const VCS: usize = 4;
pub const MAX_LINKS_PER_NODE: usize = 4;

const LOCAL: usize = 0;
const X_PLUS: usize = 1;
const X_MINUS: usize = 2;
const Y_PLUS: usize = 3;
const Y_MINUS: usize = 4;
const VC_OUTBOUND: usize = 2;
const VC_INBOUND: usize = 3;
const MAIN_VCS: [usize; 3] = [0, 1, VC_INBOUND];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub clock_hz: f64,
    pub hop_cycles: u32,
    /// Entry stage, optical flight and exit stage of one photonic link.
    pub photonic_cycles: u32,
    pub ejection_cycles: u32,
    pub flit_bits: u32,
    pub buffer_depth: usize,
    pub hop_length_mm: f64,
    /// Packets injected before this cycle are simulated but not measured.
    pub warmup_cycles: u64,
    /// The run fails if packets are still in flight at this cycle.
    pub max_cycles: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            clock_hz: 1e9,
            hop_cycles: 1,
            photonic_cycles: 3,
            ejection_cycles: 1,
            flit_bits: 128,
            buffer_depth: 4,
            hop_length_mm: 2.5,
            warmup_cycles: 0,
            max_cycles: 10_000_000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop_cycles == 0
            || self.photonic_cycles == 0
            || self.buffer_depth == 0
            || self.flit_bits == 0
        {
            return Err(Error::invalid(
                "cycle counts, buffer depth and flit width must be >= 1",
            ));
        }
        if !(self.clock_hz > 0.0) {
            return Err(Error::invalid("clock must be > 0"));
        }
        Ok(())
    }
}

/// Relative crossbar area, proportional to crosspoints.
pub fn crossbar_area_model(n_in: usize, n_out: usize) -> usize {
    n_in * n_out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u32,
    pub inject_cycle: u64,
    pub eject_cycle: u64,
    pub latency: u64,
    pub mesh_hops: u32,
    pub photonic_hops: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub packets: Vec<PacketRecord>,
    /// Packets counted in the latency statistics.
    pub measured_packets: usize,
    pub mean_latency: f64,
    pub p50_latency: u64,
    pub p95_latency: u64,
    pub p99_latency: u64,
    pub max_latency: u64,
    /// Cycles from zero until the last ejection.
    pub cycles: u64,
    /// Flits switched by a main crossbar onto a mesh link.
    pub router_traversals: u64,
    pub link_traversals: u64,
    pub link_length_mm: f64,
    /// Flits carried by each logical link, in routing-table order.
    pub photonic_flits: Vec<u64>,
    pub photonic_bits: u64,
    pub injected_flits: u64,
    pub ejected_flits: u64,
    /// Flits found in a VC reserved for another traffic class.
    pub role_violations: u64,
    pub flit_bits: u32,
    pub clock_hz: f64,
}

impl SimReport {
    pub fn total_photonic_flits(&self) -> u64 {
        self.photonic_flits.iter().sum()
    }

    pub fn simulated_seconds(&self) -> f64 {
        self.cycles as f64 / self.clock_hz
    }

    pub fn write_latency_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.packets {
            w.serialize(p)?;
        }
        w.flush().map_err(|e| Error::io("<latency csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Flit {
    packet: u32,
    head: bool,
    tail: bool,
    photonic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Out { port: usize, vc: usize },
    Eject,
    Link(usize),
}

#[derive(Debug, Clone, Default)]
struct Vc {
    buf: VecDeque<Flit>,
    /// Packet allowed to send into this VC; cleared once its tail is sent.
    owner: Option<u32>,
    /// Route of the packet whose head is at the front.
    route: Option<Route>,
    inflight: usize,
}

#[derive(Debug, Clone)]
struct Router {
    inputs: Vec<Vc>,
    /// Next VC slot to favour at each input port.
    vc_rr: [usize; PORTS],
    /// Next input port to favour at each main-crossbar output.
    out_rr: [usize; PORTS],
}

impl Router {
    fn new() -> Self {
        Self {
            inputs: vec![Vc::default(); PORTS * VCS],
            vc_rr: [0; PORTS],
            out_rr: [0; PORTS],
        }
    }

    fn vc(&self, port: usize, vc: usize) -> &Vc {
        &self.inputs[port * VCS + vc]
    }

    fn vc_mut(&mut self, port: usize, vc: usize) -> &mut Vc {
        &mut self.inputs[port * VCS + vc]
    }
}

#[derive(Debug, Clone, Copy)]
struct Arrival {
    router: NodeId,
    port: usize,
    vc: usize,
    flit: Flit,
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Main {
        router: NodeId,
        port: usize,
        vc: usize,
    },
    Link {
        router: NodeId,
        port: usize,
        vc: usize,
        link: usize,
    },
}

struct PacketState {
    src: NodeId,
    dst: NodeId,
    size: u32,
    inject: u64,
    eject: Option<u64>,
    mesh_hops: u32,
    photonic_hops: u32,
}

struct Injector {
    packet: u32,
    vc: usize,
    sent: u32,
}

fn out_port(mesh: &MeshSpec, from: NodeId, to: NodeId) -> usize {
    let (fx, fy) = mesh.coord(from);
    let (tx, ty) = mesh.coord(to);
    match (tx as isize - fx as isize, ty as isize - fy as isize) {
        (1, 0) => X_PLUS,
        (-1, 0) => X_MINUS,
        (0, 1) => Y_PLUS,
        (0, -1) => Y_MINUS,
        _ => panic!("routers {from} and {to} are not mesh neighbours"),
    }
}

fn opposite(port: usize) -> usize {
    match port {
        X_PLUS => X_MINUS,
        X_MINUS => X_PLUS,
        Y_PLUS => Y_MINUS,
        Y_MINUS => Y_PLUS,
        _ => LOCAL,
    }
}

struct Sim<'a> {
    mesh: MeshSpec,
    tables: &'a RoutingTables,
    cfg: SimConfig,
    routers: Vec<Router>,
    outgoing: Vec<Vec<usize>>,
    link_rr: Vec<usize>,
    packets: Vec<PacketState>,
    /// Arrivals bucketed by cycle modulo the ring length.
    ring: Vec<Vec<Arrival>>,
    in_flight: usize,
    queues: Vec<VecDeque<u32>>,
    injectors: Vec<Option<Injector>>,
    ejected: usize,
    last_eject: u64,
    report: SimReport,
}

impl<'a> Sim<'a> {
    /// VCs a packet may take at `router`'s input, by traffic class.
    fn vc_class(&self, router: NodeId, dst: NodeId, photonic: bool) -> &'static [usize] {
        if matches!(self.tables.next(router, dst, photonic), Hop::Photonic(_)) {
            &[VC_OUTBOUND]
        } else if photonic {
            &[VC_INBOUND]
        } else {
            &[0, 1]
        }
    }

    fn audit(&mut self, router: NodeId, vc: usize, flit: &Flit) {
        let dst = self.packets[flit.packet as usize].dst;
        let ok = match vc {
            VC_INBOUND => flit.photonic,
            VC_OUTBOUND => matches!(
                self.tables.next(router, dst, flit.photonic),
                Hop::Photonic(_)
            ),
            _ => {
                !flit.photonic && !matches!(self.tables.next(router, dst, false), Hop::Photonic(_))
            }
        };
        if !ok {
            self.report.role_violations += 1;
        }
    }

    fn occupancy(&self, router: NodeId, port: usize, vc: usize) -> usize {
        let v = self.routers[router].vc(port, vc);
        v.buf.len() + v.inflight
    }

    fn deliver(&mut self, cycle: u64) {
        let slot = (cycle % self.ring.len() as u64) as usize;
        let arrivals = std::mem::take(&mut self.ring[slot]);
        for a in arrivals {
            self.audit(a.router, a.vc, &a.flit);
            let v = self.routers[a.router].vc_mut(a.port, a.vc);
            v.inflight -= 1;
            v.buf.push_back(a.flit);
            self.in_flight -= 1;
        }
    }

    fn schedule(&mut self, arrive: u64, a: Arrival) {
        let slot = (arrive % self.ring.len() as u64) as usize;
        self.routers[a.router].vc_mut(a.port, a.vc).inflight += 1;
        self.ring[slot].push(a);
        self.in_flight += 1;
    }

    fn inject(&mut self) {
        for node in 0..self.mesh.nodes() {
            if self.injectors[node].is_none() {
                let Some(&pid) = self.queues[node].front() else {
                    continue;
                };
                let dst = self.packets[pid as usize].dst;
                let class = self.vc_class(node, dst, false);
                let free = class
                    .iter()
                    .copied()
                    .find(|&v| self.routers[node].vc(LOCAL, v).owner.is_none());
                let Some(vc) = free else {
                    continue;
                };
                self.queues[node].pop_front();
                self.routers[node].vc_mut(LOCAL, vc).owner = Some(pid);
                self.injectors[node] = Some(Injector {
                    packet: pid,
                    vc,
                    sent: 0,
                });
            }
            let inj = self.injectors[node].as_ref().expect("set above");
            let (pid, vc, sent) = (inj.packet, inj.vc, inj.sent);
            if self.occupancy(node, LOCAL, vc) >= self.cfg.buffer_depth {
                continue;
            }
            let size = self.packets[pid as usize].size;
            let flit = Flit {
                packet: pid,
                head: sent == 0,
                tail: sent + 1 == size,
                photonic: false,
            };
            self.audit(node, vc, &flit);
            self.routers[node].vc_mut(LOCAL, vc).buf.push_back(flit);
            self.report.injected_flits += 1;
            if flit.tail {
                self.routers[node].vc_mut(LOCAL, vc).owner = None;
                self.injectors[node] = None;
            } else {
                self.injectors[node].as_mut().expect("set above").sent += 1;
            }
        }
    }

    fn allocate(&mut self, cycle: u64) {
        let n = self.mesh.nodes();
        let slots = PORTS * VCS;
        for i in 0..n {
            let r = (i + cycle as usize) % n;
            for j in 0..slots {
                let s = (j + cycle as usize) % slots;
                let (port, vc) = (s / VCS, s % VCS);
                let v = self.routers[r].vc(port, vc);
                if v.route.is_some() {
                    continue;
                }
                let Some(&flit) = v.buf.front() else {
                    continue;
                };
                debug_assert!(flit.head, "a routed VC is released only after a tail");
                let dst = self.packets[flit.packet as usize].dst;
                let route = match self.tables.next(r, dst, flit.photonic) {
                    Hop::Eject => Some(Route::Eject),
                    Hop::Mesh(nb) => {
                        let p = out_port(&self.mesh, r, nb);
                        let inport = opposite(p);
                        let class = self.vc_class(nb, dst, flit.photonic);
                        class
                            .iter()
                            .copied()
                            .find(|&c| self.routers[nb].vc(inport, c).owner.is_none())
                            .map(|c| {
                                self.routers[nb].vc_mut(inport, c).owner = Some(flit.packet);
                                Route::Out { port: p, vc: c }
                            })
                    }
                    Hop::Photonic(li) => {
                        let exit = self.tables.links[li].dst;
                        let target = self.routers[exit].vc_mut(LOCAL, VC_INBOUND);
                        if target.owner.is_none() {
                            target.owner = Some(flit.packet);
                            Some(Route::Link(li))
                        } else {
                            None
                        }
                    }
                };
                self.routers[r].vc_mut(port, vc).route = route;
            }
        }
    }

    fn downstream(&self, r: NodeId, port: usize) -> NodeId {
        let (x, y) = self.mesh.coord(r);
        match port {
            X_PLUS => self.mesh.node(x + 1, y),
            X_MINUS => self.mesh.node(x - 1, y),
            Y_PLUS => self.mesh.node(x, y + 1),
            Y_MINUS => self.mesh.node(x, y - 1),
            _ => r,
        }
    }

    fn ready(&self, r: NodeId, route: Route) -> bool {
        match route {
            Route::Eject => true,
            Route::Out { port, vc } => {
                self.occupancy(self.downstream(r, port), opposite(port), vc) < self.cfg.buffer_depth
            }
            Route::Link(li) => {
                self.occupancy(self.tables.links[li].dst, LOCAL, VC_INBOUND) < self.cfg.buffer_depth
            }
        }
    }

    fn grants(&mut self) -> Vec<Move> {
        let mut moves = Vec::new();
        for r in 0..self.mesh.nodes() {
            // Main crossbar: one VC per input, then one input per output.
            let mut requests: [Option<(usize, usize)>; PORTS] = [None; PORTS];
            for (port, request) in requests.iter_mut().enumerate() {
                let start = self.routers[r].vc_rr[port];
                for k in 0..MAIN_VCS.len() {
                    let slot = (start + k) % MAIN_VCS.len();
                    let vc = MAIN_VCS[slot];
                    let v = self.routers[r].vc(port, vc);
                    let Some(route) = v.route else { continue };
                    if v.buf.is_empty() || matches!(route, Route::Link(_)) || !self.ready(r, route)
                    {
                        continue;
                    }
                    let out = match route {
                        Route::Out { port, .. } => port,
                        _ => LOCAL,
                    };
                    *request = Some((slot, out));
                    break;
                }
            }
            for out in 0..PORTS {
                let start = self.routers[r].out_rr[out];
                for k in 0..PORTS {
                    let port = (start + k) % PORTS;
                    if let Some((slot, o)) = requests[port] {
                        if o == out {
                            moves.push(Move::Main {
                                router: r,
                                port,
                                vc: MAIN_VCS[slot],
                            });
                            let router = &mut self.routers[r];
                            router.out_rr[out] = (port + 1) % PORTS;
                            router.vc_rr[port] = (slot + 1) % MAIN_VCS.len();
                            break;
                        }
                    }
                }
            }
            // Add-on crossbar: per outgoing link, one input port.
            for k in 0..self.outgoing[r].len() {
                let li = self.outgoing[r][k];
                let start = self.link_rr[li];
                for step in 0..PORTS {
                    let port = (start + step) % PORTS;
                    let granted = [VC_OUTBOUND, VC_INBOUND].into_iter().find(|&vc| {
                        let v = self.routers[r].vc(port, vc);
                        v.route == Some(Route::Link(li)) && !v.buf.is_empty()
                    });
                    if let Some(vc) = granted {
                        if self.ready(r, Route::Link(li)) {
                            moves.push(Move::Link {
                                router: r,
                                port,
                                vc,
                                link: li,
                            });
                            self.link_rr[li] = (port + 1) % PORTS;
                        }
                        break;
                    }
                }
            }
        }
        moves
    }

    fn release_if_tail(&mut self, r: NodeId, port: usize, vc: usize, flit: &Flit) {
        if flit.tail {
            self.routers[r].vc_mut(port, vc).route = None;
        }
    }

    fn commit(&mut self, cycle: u64, moves: Vec<Move>) {
        for m in moves {
            match m {
                Move::Main { router, port, vc } => {
                    let v = self.routers[router].vc_mut(port, vc);
                    let route = v.route.expect("granted VCs are routed");
                    let flit = v.buf.pop_front().expect("granted VCs hold a flit");
                    self.release_if_tail(router, port, vc, &flit);
                    match route {
                        Route::Eject => {
                            self.report.ejected_flits += 1;
                            if flit.tail {
                                let done = cycle + u64::from(self.cfg.ejection_cycles);
                                self.packets[flit.packet as usize].eject = Some(done);
                                self.ejected += 1;
                                self.last_eject = self.last_eject.max(done);
                            }
                        }
                        Route::Out { port: out, vc: dvc } => {
                            if flit.head {
                                self.packets[flit.packet as usize].mesh_hops += 1;
                            }
                            self.report.router_traversals += 1;
                            self.report.link_traversals += 1;
                            let next = self.downstream(router, out);
                            if flit.tail {
                                self.routers[next].vc_mut(opposite(out), dvc).owner = None;
                            }
                            self.schedule(
                                cycle + u64::from(self.cfg.hop_cycles),
                                Arrival {
                                    router: next,
                                    port: opposite(out),
                                    vc: dvc,
                                    flit,
                                },
                            );
                        }
                        Route::Link(_) => unreachable!("links are served by the add-on crossbar"),
                    }
                }
                Move::Link {
                    router,
                    port,
                    vc,
                    link,
                } => {
                    let v = self.routers[router].vc_mut(port, vc);
                    let mut flit = v.buf.pop_front().expect("granted VCs hold a flit");
                    self.release_if_tail(router, port, vc, &flit);
                    if flit.head {
                        self.packets[flit.packet as usize].photonic_hops += 1;
                    }
                    flit.photonic = true;
                    self.report.photonic_flits[link] += 1;
                    let exit = self.tables.links[link].dst;
                    if flit.tail {
                        self.routers[exit].vc_mut(LOCAL, VC_INBOUND).owner = None;
                    }
                    self.schedule(
                        cycle + u64::from(self.cfg.photonic_cycles),
                        Arrival {
                            router: exit,
                            port: LOCAL,
                            vc: VC_INBOUND,
                            flit,
                        },
                    );
                }
            }
        }
    }

    fn network_empty(&self) -> bool {
        self.in_flight == 0
            && self.injectors.iter().all(Option::is_none)
            && self.queues.iter().all(VecDeque::is_empty)
            && self
                .routers
                .iter()
                .all(|r| r.inputs.iter().all(|v| v.buf.is_empty()))
    }
}

impl<'a> Sim<'a> {
    fn new(
        mesh: &MeshSpec,
        tables: &'a RoutingTables,
        trace: &Trace,
        cfg: &SimConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        trace.validate(mesh)?;
        let n = mesh.nodes();
        if tables.n != n {
            return Err(Error::invalid(format!(
                "routing tables cover {} routers, mesh has {n}",
                tables.n
            )));
        }
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![0usize; n];
        for (i, l) in tables.links.iter().enumerate() {
            outgoing[l.src].push(i);
            incoming[l.dst] += 1;
        }
        if let Some(r) = (0..n)
            .find(|&r| outgoing[r].len() > MAX_LINKS_PER_NODE || incoming[r] > MAX_LINKS_PER_NODE)
        {
            return Err(Error::invalid(format!(
                "router {r} has more than {MAX_LINKS_PER_NODE} photonic links in one direction"
            )));
        }

        let sorted = trace.sorted();
        let packets: Vec<PacketState> = sorted
            .packets
            .iter()
            .map(|p| PacketState {
                src: p.src,
                dst: p.dst,
                size: p.size,
                inject: p.cycle,
                eject: None,
                mesh_hops: 0,
                photonic_hops: 0,
            })
            .collect();
        let ring_len = cfg.hop_cycles.max(cfg.photonic_cycles) as usize + 1;
        Ok(Sim {
            mesh: *mesh,
            tables,
            cfg: *cfg,
            routers: (0..n).map(|_| Router::new()).collect(),
            outgoing,
            link_rr: vec![0; tables.links.len()],
            packets,
            ring: vec![Vec::new(); ring_len],
            in_flight: 0,
            queues: vec![VecDeque::new(); n],
            injectors: (0..n).map(|_| None).collect(),
            ejected: 0,
            last_eject: 0,
            report: SimReport {
                packets: Vec::new(),
                measured_packets: 0,
                mean_latency: 0.0,
                p50_latency: 0,
                p95_latency: 0,
                p99_latency: 0,
                max_latency: 0,
                cycles: 0,
                router_traversals: 0,
                link_traversals: 0,
                link_length_mm: 0.0,
                photonic_flits: vec![0; tables.links.len()],
                photonic_bits: 0,
                injected_flits: 0,
                ejected_flits: 0,
                role_violations: 0,
                flit_bits: cfg.flit_bits,
                clock_hz: cfg.clock_hz,
            },
        })
    }
}

/// Simulates `trace` over `tables` until every packet is ejected.
pub fn run(
    mesh: &MeshSpec,
    tables: &RoutingTables,
    trace: &Trace,
    cfg: &SimConfig,
) -> Result<SimReport> {
    let mut sim = Sim::new(mesh, tables, trace, cfg)?;
    let total = sim.packets.len();
    let mut next_packet = 0usize;
    let mut ejected = 0usize;
    let mut cycle = 0u64;
    while ejected < total {
        if cycle >= cfg.max_cycles {
            return Err(Error::Livelock {
                cycles: cycle,
                in_flight: total - ejected,
            });
        }
        if sim.network_empty() && next_packet < total {
            cycle = cycle.max(sim.packets[next_packet].inject);
        }
        while next_packet < total && sim.packets[next_packet].inject <= cycle {
            sim.queues[sim.packets[next_packet].src].push_back(next_packet as u32);
            next_packet += 1;
        }
        sim.deliver(cycle);
        sim.inject();
        sim.allocate(cycle);
        let moves = sim.grants();
        sim.commit(cycle, moves);
        ejected = sim.ejected;
        cycle += 1;
    }

    let mut report = sim.report;
    report.cycles = sim.last_eject;
    report.link_length_mm = report.link_traversals as f64 * cfg.hop_length_mm;
    report.photonic_bits = report.total_photonic_flits() * u64::from(cfg.flit_bits);
    report.packets = sim
        .packets
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let eject = p.eject.expect("all packets drained");
            PacketRecord {
                id,
                src: p.src,
                dst: p.dst,
                size: p.size,
                inject_cycle: p.inject,
                eject_cycle: eject,
                latency: eject - p.inject,
                mesh_hops: p.mesh_hops,
                photonic_hops: p.photonic_hops,
            }
        })
        .collect();
    let mut lat: Vec<u64> = report
        .packets
        .iter()
        .filter(|p| p.inject_cycle >= cfg.warmup_cycles)
        .map(|p| p.latency)
        .collect();
    lat.sort_unstable();
    report.measured_packets = lat.len();
    if !lat.is_empty() {
        let pct = |q: f64| lat[((q * lat.len() as f64).ceil() as usize).clamp(1, lat.len()) - 1];
        report.mean_latency = lat.iter().sum::<u64>() as f64 / lat.len() as f64;
        report.p50_latency = pct(0.50);
        report.p95_latency = pct(0.95);
        report.p99_latency = pct(0.99);
        report.max_latency = *lat.last().expect("non-empty");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::{routing_tables, select, SelectionConstraints, SelectorConfig};
    use crate::topology::{build, candidates, LogicalLinkCandidate, SnakeLayout};
    use crate::traffic::{
        generate, trace_to_matrix, PatternKind, PatternSpec, Placement, TracePacket,
    };

    fn mesh() -> MeshSpec {
        MeshSpec::default()
    }

    fn plain_tables() -> RoutingTables {
        let layout = build(&mesh(), 1, 1).unwrap();
        routing_tables(&layout, &[], &SelectorConfig::default())
    }

    fn link(layout: &SnakeLayout, src: NodeId, dst: NodeId) -> LogicalLinkCandidate {
        candidates(layout)
            .into_iter()
            .find(|c| c.src == src && c.dst == dst)
            .unwrap()
    }

    fn single(src: NodeId, dst: NodeId, size: u32) -> Trace {
        Trace {
            packets: vec![TracePacket {
                cycle: 5,
                src,
                dst,
                size,
            }],
        }
    }

    fn latency(tables: &RoutingTables, src: NodeId, dst: NodeId, size: u32) -> u64 {
        let r = run(
            &mesh(),
            tables,
            &single(src, dst, size),
            &SimConfig::default(),
        )
        .unwrap();
        r.packets[0].latency
    }

    #[test]
    fn idle_mesh_latency() {
        let t = plain_tables();
        assert_eq!(latency(&t, 0, 1, 1), 2);
        assert_eq!(latency(&t, 0, 63, 1), 15);
        assert_eq!(latency(&t, 63, 0, 4), 18);
    }

    #[test]
    fn idle_latency_matches_path_cost_everywhere() {
        let layout = build(&mesh(), 2, 2).unwrap();
        let m = mesh();
        let links = vec![
            link(&layout, m.node(0, 0), m.node(7, 3)),
            link(&layout, m.node(7, 3), m.node(0, 0)),
            link(&layout, m.node(0, 4), m.node(1, 7)),
            link(&layout, m.node(2, 2), m.node(5, 1)),
        ];
        let t = routing_tables(&layout, &links, &SelectorConfig::default());
        for s in 0..64 {
            for d in 0..64 {
                if s == d {
                    continue;
                }
                for size in [1, 3] {
                    let want = u64::from(t.path_cost(s, d)) + 1 + u64::from(size - 1);
                    assert_eq!(latency(&t, s, d, size), want, "{s}->{d} size {size}");
                }
            }
        }
    }

    #[test]
    fn express_link_latency() {
        let layout = build(&mesh(), 1, 1).unwrap();
        let l = link(&layout, 0, 7);
        let t = routing_tables(&layout, &[l], &SelectorConfig::default());
        let r = run(&mesh(), &t, &single(0, 7, 1), &SimConfig::default()).unwrap();
        assert_eq!(r.packets[0].latency, 4);
        assert_eq!(r.packets[0].photonic_hops, 1);
        assert_eq!(r.photonic_flits, vec![1]);
        assert_eq!(r.router_traversals, 0);
    }

    fn loaded(kind: PatternKind, rate: f64) -> (RoutingTables, Trace) {
        let m = mesh();
        let layout = build(&m, 1, 1).unwrap();
        let mut spec = PatternSpec::of_kind(kind);
        spec.injection_rate = rate;
        spec.duration = 2000;
        spec.packet_size = 2;
        let trace = generate(&spec, &m).unwrap();
        let matrix = trace_to_matrix(&trace, &m).unwrap();
        let cfg = SelectorConfig::default();
        let sel = select(&layout, &matrix, &SelectionConstraints::default(), &cfg).unwrap();
        (routing_tables(&layout, &sel.links, &cfg), trace)
    }

    #[test]
    fn loaded_run_conserves_flits_and_roles() {
        let (t, trace) = loaded(PatternKind::Fcp, 0.05);
        assert!(!t.links.is_empty());
        let r = run(&mesh(), &t, &trace, &SimConfig::default()).unwrap();
        assert_eq!(r.injected_flits, trace.total_flits());
        assert_eq!(r.ejected_flits, trace.total_flits());
        assert_eq!(r.role_violations, 0);
        assert!(r.total_photonic_flits() > 0);
        assert!(r.packets.iter().all(|p| p.photonic_hops <= 1));
        assert!(r.p50_latency <= r.p95_latency && r.p95_latency <= r.max_latency);
    }

    #[test]
    fn runs_are_deterministic() {
        let (t, trace) = loaded(PatternKind::Uniform, 0.05);
        let a = run(&mesh(), &t, &trace, &SimConfig::default()).unwrap();
        let b = run(&mesh(), &t, &trace, &SimConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn latency_grows_with_load() {
        let t = plain_tables();
        let mean = |rate: f64| {
            let mut spec = PatternSpec::of_kind(PatternKind::Uniform);
            spec.injection_rate = rate;
            spec.duration = 2000;
            let trace = generate(&spec, &mesh()).unwrap();
            run(&mesh(), &t, &trace, &SimConfig::default())
                .unwrap()
                .mean_latency
        };
        let (low, high) = (mean(0.01), mean(0.3));
        assert!(low < high, "{low} vs {high}");
    }

    #[test]
    fn outbound_and_fresh_lanes_share_an_input_in_one_cycle() {
        let layout = build(&mesh(), 1, 1).unwrap();
        let t = routing_tables(&layout, &[link(&layout, 0, 7)], &SelectorConfig::default());
        let trace = Trace {
            packets: vec![
                TracePacket {
                    cycle: 0,
                    src: 0,
                    dst: 7,
                    size: 1,
                },
                TracePacket {
                    cycle: 0,
                    src: 0,
                    dst: 8,
                    size: 1,
                },
            ],
        };
        let mut sim = Sim::new(&mesh(), &t, &trace, &SimConfig::default()).unwrap();
        let flit = |packet| Flit {
            packet,
            head: true,
            tail: true,
            photonic: false,
        };
        let r = &mut sim.routers[0];
        r.vc_mut(LOCAL, VC_OUTBOUND).buf.push_back(flit(0));
        r.vc_mut(LOCAL, VC_OUTBOUND).route = Some(Route::Link(0));
        r.vc_mut(LOCAL, 0).buf.push_back(flit(1));
        r.vc_mut(LOCAL, 0).route = Some(Route::Out {
            port: Y_PLUS,
            vc: 0,
        });
        let moves = sim.grants();
        assert_eq!(moves.len(), 2);
        assert!(moves.iter().any(|m| matches!(
            m,
            Move::Link {
                port: LOCAL,
                vc: VC_OUTBOUND,
                ..
            }
        )));
        assert!(moves.iter().any(|m| matches!(
            m,
            Move::Main {
                port: LOCAL,
                vc: 0,
                ..
            }
        )));
    }

    #[test]
    fn add_on_arbiter_rotates_between_inputs() {
        let layout = build(&mesh(), 1, 1).unwrap();
        let t = routing_tables(&layout, &[link(&layout, 1, 6)], &SelectorConfig::default());
        let mut sim = Sim::new(&mesh(), &t, &single(1, 6, 1), &SimConfig::default()).unwrap();
        let flit = Flit {
            packet: 0,
            head: true,
            tail: false,
            photonic: false,
        };
        for port in [LOCAL, X_MINUS] {
            let v = sim.routers[1].vc_mut(port, VC_OUTBOUND);
            v.buf.push_back(flit);
            v.route = Some(Route::Link(0));
        }
        let winner = |moves: Vec<Move>| match moves.as_slice() {
            [Move::Link { port, .. }] => *port,
            other => panic!("expected one link grant, got {other:?}"),
        };
        let first = winner(sim.grants());
        let second = winner(sim.grants());
        let third = winner(sim.grants());
        assert_ne!(first, second);
        assert_eq!(first, third);
    }

    #[test]
    fn cycle_budget_exhaustion_is_reported() {
        let cfg = SimConfig {
            max_cycles: 8,
            ..SimConfig::default()
        };
        let err = run(&mesh(), &plain_tables(), &single(0, 63, 1), &cfg).unwrap_err();
        assert!(matches!(err, Error::Livelock { in_flight: 1, .. }));
    }

    #[test]
    fn malformed_traces_are_rejected() {
        let t = plain_tables();
        let cfg = SimConfig::default();
        assert!(matches!(
            run(&mesh(), &t, &single(0, 64, 1), &cfg),
            Err(Error::Ingestion(_))
        ));
        assert!(matches!(
            run(&mesh(), &t, &single(3, 3, 1), &cfg),
            Err(Error::Ingestion(_))
        ));
    }

    #[test]
    fn too_many_links_per_router_are_rejected() {
        let layout = build(&mesh(), 1, 1).unwrap();
        let links: Vec<_> = (1..=5).map(|d| link(&layout, 0, d * 8)).collect();
        let t = routing_tables(&layout, &links, &SelectorConfig::default());
        assert!(run(&mesh(), &t, &single(0, 1, 1), &SimConfig::default()).is_err());
    }

    #[test]
    fn split_crossbars_are_smaller() {
        let split = crossbar_area_model(5, 5) + crossbar_area_model(5, 4);
        assert_eq!(split, 45);
        assert!(split < crossbar_area_model(9, 9));
        assert_eq!(crossbar_area_model(1, 1), 1);
        assert_eq!(crossbar_area_model(3, 7), crossbar_area_model(7, 3));
    }

    #[test]
    fn latency_csv_has_one_row_per_packet() {
        let r = run(
            &mesh(),
            &plain_tables(),
            &single(0, 9, 2),
            &SimConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_latency_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("id,src,dst,size"));
    }

    #[test]
    fn memory_traffic_drains() {
        let m = mesh();
        let layout = build(&m, 2, 2).unwrap();
        let spec = PatternSpec::mfm(Placement::Center);
        let trace = generate(&spec, &m).unwrap();
        let matrix = trace_to_matrix(&trace, &m).unwrap();
        let cfg = SelectorConfig::default();
        let sel = select(&layout, &matrix, &SelectionConstraints::default(), &cfg).unwrap();
        let t = routing_tables(&layout, &sel.links, &cfg);
        let r = run(&m, &t, &trace, &SimConfig::default()).unwrap();
        assert_eq!(r.ejected_flits, trace.total_flits());
        assert_eq!(r.role_violations, 0);
    }
}
