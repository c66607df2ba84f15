//! Sum degrees-of-freedom classification.
//!
//! Every layered two-unicast network with generic gains lands in exactly one
//! of a short list of structural cases, and the case pins the sum
//! degrees-of-freedom:
//!
//! * a stream is disconnected — only the other stream counts;
//! * a single choke node, or a choke edge whose two ends each throttle one
//!   side, bottlenecks both streams — sum 1;
//! * a disjoint route pair whose interference can be made manageable, or a
//!   shared-trunk ("butterfly") or snaking-route ("grail") structure — sum 2;
//! * everything else — sum 3/2, split into two finer shapes (`C1`, `C2`)
//!   that also determine the achievable rate region.
//!
//! Every positive answer carries a witness that can be re-certified against
//! the network with direct graph predicates. Negative answers are either
//! exhaustive or reported as indeterminate; capped searches fall back to the
//! brute-force scanner on small networks and otherwise fail loudly rather
//! than guess.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::interference::{
    find_manageable_subset, interference_profile, InterfererWitness, ManageableMode,
};
use crate::netmodel::{LayeredNetwork, NodeSet, Path, Terminals};
use crate::oracle;

/// Cap on the number of disjoint route pairs collected per network.
pub const PAIR_ENUM_CAP: usize = 50_000;

/// Cap on the number of single-stream routes listed per endpoint pair.
pub const PATH_ENUM_CAP: usize = 1_024;

/// Budget for pairwise shared-trunk scans (route pairs examined).
const INTERSECT_BUDGET: usize = 250_000;

/// Candidate cap for rerouted-route and feeder enumerations during witness
/// certification. The lexicographically least choice usually certifies;
/// later candidates cover networks where it happens not to.
const CERT_ENUM_CAP: usize = 32;

// ---------------------------------------------------------------------------
// Cases and sums
// ---------------------------------------------------------------------------

/// The structural case a network falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumDofCase {
    /// At least one stream has no route at all.
    Disconnected,
    /// A single node throttles one destination against both sources and the
    /// opposite source against both destinations.
    A,
    /// An edge whose head throttles a destination and whose tail throttles
    /// the opposite source.
    APrime,
    /// A disjoint route pair with manageable interference exists.
    B,
    /// No manageable pair, but a shared-trunk or snaking-route structure
    /// still supports both streams at full rate.
    BPrime,
    /// Neither of the above; one stream leaks twice into the other (once
    /// from the companion route) while suffering exactly one off-route leak.
    C1,
    /// Neither of the above; the remaining interference funnels through a
    /// single direct cross edge.
    C2,
}

impl fmt::Display for SumDofCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SumDofCase::Disconnected => "disconnected",
            SumDofCase::A => "A",
            SumDofCase::APrime => "A'",
            SumDofCase::B => "B",
            SumDofCase::BPrime => "B'",
            SumDofCase::C1 => "C1",
            SumDofCase::C2 => "C2",
        };
        f.write_str(s)
    }
}

/// The sum degrees-of-freedom values a two-unicast layered network can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumDof {
    Zero,
    One,
    ThreeHalves,
    Two,
}

impl SumDof {
    pub fn as_f64(&self) -> f64 {
        match self {
            SumDof::Zero => 0.0,
            SumDof::One => 1.0,
            SumDof::ThreeHalves => 1.5,
            SumDof::Two => 2.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SumDof::Zero => "0",
            SumDof::One => "1",
            SumDof::ThreeHalves => "3/2",
            SumDof::Two => "2",
        }
    }
}

impl fmt::Display for SumDof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

// ---------------------------------------------------------------------------
// Witnesses
// ---------------------------------------------------------------------------

/// A single node whose removal throttles both streams at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutNodeWitness {
    pub node: usize,
    /// The stream index i whose destination the node cuts off (the node also
    /// cuts the opposite source from both destinations).
    pub pair_index: usize,
}

impl CutNodeWitness {
    /// Re-check the defining predicates against the network.
    pub fn holds(&self, net: &LayeredNetwork) -> bool {
        cut_node_qualifies(net, self.node, self.pair_index)
    }
}

/// An edge whose head cuts off destination i and whose tail cuts off the
/// opposite source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutEdgeWitness {
    pub tail: usize,
    pub head: usize,
    pub pair_index: usize,
}

impl CutEdgeWitness {
    pub fn holds(&self, net: &LayeredNetwork) -> bool {
        net.has_edge(self.tail, self.head)
            && cut_edge_qualifies(net, self.tail, self.head, self.pair_index)
    }
}

/// A disjoint route pair together with an induced subset in which neither
/// stream suffers exactly one leak.
#[derive(Debug, Clone)]
pub struct ManageablePairWitness {
    pub p11: Path,
    pub p22: Path,
    pub subset: NodeSet,
}

impl ManageablePairWitness {
    pub fn holds(&self, net: &LayeredNetwork) -> bool {
        let t = net.terminals();
        if !path_ok(net, &self.p11, t.s1, t.d1)
            || !path_ok(net, &self.p22, t.s2, t.d2)
            || !self.p11.disjoint(&self.p22)
        {
            return false;
        }
        let union = self.p11.node_set().union(&self.p22.node_set());
        if !union.is_subset_of(&self.subset) {
            return false;
        }
        match interference_profile(net, &self.subset, &self.p11, &self.p22) {
            Ok(p) => p.n1 != 1 && p.n2 != 1,
            Err(_) => false,
        }
    }
}

/// Two stream routes overlapping in exactly one contiguous shared stretch,
/// plus a disjoint cross pair that avoids the stretch.
#[derive(Debug, Clone)]
pub struct ButterflyWitness {
    /// First (earliest-layer) shared node.
    pub u0: usize,
    /// Last (latest-layer) shared node.
    pub u1: usize,
    /// The shared stretch u0 ⇝ u1, a sub-path of both routes.
    pub shared: Path,
    pub p11: Path,
    pub p22: Path,
    /// Cross route s1 ⇝ d2 avoiding the stretch.
    pub p12: Path,
    /// Cross route s2 ⇝ d1 avoiding the stretch; disjoint from `p12`.
    pub p21: Path,
}

impl ButterflyWitness {
    pub fn holds(&self, net: &LayeredNetwork) -> bool {
        let t = net.terminals();
        if !path_ok(net, &self.p11, t.s1, t.d1)
            || !path_ok(net, &self.p22, t.s2, t.d2)
            || !path_ok(net, &self.p12, t.s1, t.d2)
            || !path_ok(net, &self.p21, t.s2, t.d1)
            || !path_ok(net, &self.shared, self.u0, self.u1)
        {
            return false;
        }
        let shared_set = self.shared.node_set();
        let inter = self.p11.node_set().intersect(&self.p22.node_set());
        if inter != shared_set {
            return false;
        }
        let seg1 = self.p11.slice(self.u0, self.u1);
        let seg2 = self.p22.slice(self.u0, self.u1);
        match (seg1, seg2) {
            (Ok(a), Ok(b)) => {
                a.node_set() == shared_set
                    && b.node_set() == shared_set
                    && self.p12.disjoint(&self.p21)
                    && self.p12.node_set().is_disjoint_from(&shared_set)
                    && self.p21.node_set().is_disjoint_from(&shared_set)
            }
            _ => false,
        }
    }
}

/// A disjoint cross pair plus a snaking connection: a node on one cross
/// route fed by the same-side source, reaching a node on the other cross
/// route that still reaches the same-side destination.
#[derive(Debug, Clone)]
pub struct GrailWitness {
    pub p12: Path,
    pub p21: Path,
    /// The early snake node. On `p12` when `exchanged` is false, else `p21`.
    pub wa: usize,
    /// The late snake node, on the other cross route.
    pub wb: usize,
    /// False: s2 feeds `wa` and `wb` reaches d2. True: the mirrored reading
    /// with s1 and d1.
    pub exchanged: bool,
    /// A route from the feeding source to `wa`.
    pub feed: Path,
    /// A route from `wa` to `wb`.
    pub bridge: Path,
    /// A route from `wb` to the reached destination.
    pub drain: Path,
}

impl GrailWitness {
    pub fn holds(&self, net: &LayeredNetwork) -> bool {
        let t = net.terminals();
        if !path_ok(net, &self.p12, t.s1, t.d2)
            || !path_ok(net, &self.p21, t.s2, t.d1)
            || !self.p12.disjoint(&self.p21)
        {
            return false;
        }
        let (host_a, host_b, src, dst) = if self.exchanged {
            (&self.p21, &self.p12, t.s1, t.d1)
        } else {
            (&self.p12, &self.p21, t.s2, t.d2)
        };
        host_a.contains(self.wa)
            && host_b.contains(self.wb)
            && path_ok(net, &self.feed, src, self.wa)
            && path_ok(net, &self.bridge, self.wa, self.wb)
            && path_ok(net, &self.drain, self.wb, dst)
    }
}

/// Witness for the first 3/2 shape: in role space, stream a suffers two
/// leaks (exactly one from the companion route) and stream b exactly one,
/// coming from a node on the detour `suffix`.
#[derive(Debug, Clone)]
pub struct C1Witness {
    /// Actual stream-1 route.
    pub p1: Path,
    /// Actual stream-2 route.
    pub p2: Path,
    /// False: role a is stream 1. True: role a is stream 2.
    pub swapped: bool,
    /// p_a ∪ p_b ∪ suffix — the certified working subset.
    pub subset: NodeSet,
    /// The detour from `vm` (on the role-b route) to `v1`.
    pub suffix: Path,
    /// Last role-b node on role-b's feeder to `v1`.
    pub vm: usize,
    /// Head of `v2`'s edge into the role-b route.
    pub v0: usize,
    /// The off-route leak into role-a's route (end of the detour).
    pub v1: usize,
    /// The unique leak into role-b's route inside the subset; on the detour.
    pub v2: usize,
    /// The unique companion-route leak into role-a's route.
    pub v3: usize,
    /// Head of `v3`'s edge into the role-a route.
    pub v4: usize,
    /// Last role-a node on role-a's feeder to `v2`.
    pub v5: usize,
    /// Successor of `v5` on that feeder; lies on the detour.
    pub v6: usize,
}

/// Witness for the second 3/2 shape, in normalized role space: `q1` and
/// `z1` are role-a routes around the single cross edge (`v2`,`v1`), `p2` is
/// the role-b route, and (`v3`,`v4`) is the unique leak `q1` throws back.
#[derive(Debug, Clone)]
pub struct C2Witness {
    /// Role-b route (from the role-b source to its destination).
    pub p2: Path,
    /// Role-a route avoiding `v1`; leaks into `p2` only via (`v3`,`v4`).
    pub q1: Path,
    /// Role-a route through `v1` avoiding `v3`; absorbs the (`v2`,`v1`)
    /// leak and throws none back.
    pub z1: Path,
    /// Head of the single cross edge, on `z1`.
    pub v1: usize,
    /// Tail of the single cross edge, on `p2`.
    pub v2: usize,
    /// The node of `q1` leaking into `p2`.
    pub v3: usize,
    /// Head of `v3`'s edge into `p2`.
    pub v4: usize,
    /// False: role a is stream 1. True: role a is stream 2.
    pub swapped: bool,
}

/// The witness attached to a classification.
#[derive(Debug, Clone)]
pub enum CaseWitness {
    Disconnected {
        pair1_connected: bool,
        pair2_connected: bool,
    },
    CutNode(CutNodeWitness),
    CutEdge(CutEdgeWitness),
    Manageable(ManageablePairWitness),
    Butterfly(ButterflyWitness),
    Grail(GrailWitness),
    C1(C1Witness),
    C2(C2Witness),
    /// The case was settled by the exhaustive scanner; no compact witness.
    ExhaustiveScan,
}

impl CaseWitness {
    /// One-token rendering with comma-joined routes, suitable for key=value
    /// output lines.
    pub fn render(&self, net: &LayeredNetwork) -> String {
        match self {
            CaseWitness::Disconnected {
                pair1_connected,
                pair2_connected,
            } => match (pair1_connected, pair2_connected) {
                (false, true) => "missing-route:s1~d1".into(),
                (true, false) => "missing-route:s2~d2".into(),
                (false, false) => "missing-route:s1~d1;s2~d2".into(),
                (true, true) => "none".into(),
            },
            CaseWitness::CutNode(w) => net.name(w.node).to_string(),
            CaseWitness::CutEdge(w) => {
                format!("{}->{}", net.name(w.tail), net.name(w.head))
            }
            CaseWitness::Manageable(w) => format!(
                "p11:{}|p22:{}|subset:{}",
                w.p11.display(net),
                w.p22.display(net),
                render_set(net, &w.subset)
            ),
            CaseWitness::Butterfly(w) => format!(
                "butterfly|u0:{}|u1:{}|shared:{}|p11:{}|p22:{}|p12:{}|p21:{}",
                net.name(w.u0),
                net.name(w.u1),
                w.shared.display(net),
                w.p11.display(net),
                w.p22.display(net),
                w.p12.display(net),
                w.p21.display(net)
            ),
            CaseWitness::Grail(w) => format!(
                "grail|wa:{}|wb:{}|exchanged:{}|p12:{}|p21:{}|feed:{}|bridge:{}|drain:{}",
                net.name(w.wa),
                net.name(w.wb),
                w.exchanged,
                w.p12.display(net),
                w.p21.display(net),
                w.feed.display(net),
                w.bridge.display(net),
                w.drain.display(net)
            ),
            CaseWitness::C1(w) => format!(
                "p1:{}|p2:{}|swapped:{}|subset:{}|suffix:{}|vm:{}|v0:{}|v1:{}|v2:{}|v3:{}|v4:{}|v5:{}|v6:{}",
                w.p1.display(net),
                w.p2.display(net),
                w.swapped,
                render_set(net, &w.subset),
                w.suffix.display(net),
                net.name(w.vm),
                net.name(w.v0),
                net.name(w.v1),
                net.name(w.v2),
                net.name(w.v3),
                net.name(w.v4),
                net.name(w.v5),
                net.name(w.v6)
            ),
            CaseWitness::C2(w) => format!(
                "p2:{}|q1:{}|z1:{}|v1:{}|v2:{}|v3:{}|v4:{}|swapped:{}",
                w.p2.display(net),
                w.q1.display(net),
                w.z1.display(net),
                net.name(w.v1),
                net.name(w.v2),
                net.name(w.v3),
                net.name(w.v4),
                w.swapped
            ),
            CaseWitness::ExhaustiveScan => "exhaustive-scan".into(),
        }
    }
}

/// A settled classification: the case, the sum it pins, and the evidence.
#[derive(Debug, Clone)]
pub struct Classification {
    pub case: SumDofCase,
    pub sum_dof: SumDof,
    pub witness: CaseWitness,
}

/// Outcome of one structure detector: a witness if found, and whether the
/// search space was fully covered when it was not.
#[derive(Debug, Clone)]
pub struct StructureScan<T> {
    pub witness: Option<T>,
    pub complete: bool,
}

/// Outcome of the manageable-pair search.
#[derive(Debug, Clone)]
pub struct PairSearch {
    pub witness: Option<ManageablePairWitness>,
    /// True when the absence of a witness is conclusive: every disjoint
    /// route pair was enumerated and each subset search was exhaustive.
    pub definitive: bool,
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn path_ok(net: &LayeredNetwork, p: &Path, from: usize, to: usize) -> bool {
    p.first() == from
        && p.last() == to
        && p.nodes().windows(2).all(|w| net.has_edge(w[0], w[1]))
}

fn render_set(net: &LayeredNetwork, set: &NodeSet) -> String {
    let mut names: Vec<&str> = set.iter().map(|ix| net.name(ix)).collect();
    names.sort_unstable();
    names.join(",")
}

/// True iff every route u ⇝ v dies once the given nodes are removed
/// (vacuously true when an endpoint itself is removed).
fn cut(net: &LayeredNetwork, removed: &[usize], u: usize, v: usize) -> bool {
    let rm = NodeSet::from_iter(removed.iter().copied());
    !net.reachable_without(&rm, u, v)
}

/// Destination and opposite source for a stream index.
fn stream_roles(t: &Terminals, i: usize) -> (usize, usize) {
    if i == 1 {
        (t.d1, t.s2)
    } else {
        (t.d2, t.s1)
    }
}

fn cut_node_qualifies(net: &LayeredNetwork, v: usize, i: usize) -> bool {
    let t = net.terminals();
    let (di, s_bar) = stream_roles(&t, i);
    cut(net, &[v], t.s1, di)
        && cut(net, &[v], t.s2, di)
        && cut(net, &[v], s_bar, t.d1)
        && cut(net, &[v], s_bar, t.d2)
}

fn cut_edge_qualifies(net: &LayeredNetwork, tail: usize, head: usize, i: usize) -> bool {
    let t = net.terminals();
    let (di, s_bar) = stream_roles(&t, i);
    cut(net, &[head], t.s1, di)
        && cut(net, &[head], t.s2, di)
        && cut(net, &[tail], s_bar, t.d1)
        && cut(net, &[tail], s_bar, t.d2)
}

/// Interference counts and witnesses mapped into role space: role a is the
/// stream under the `swapped` flag, and `pa`/`pb` are the role-a/role-b
/// routes (actual stream routes, possibly exchanged).
struct RoleProfile {
    na: usize,
    nb: usize,
    na_direct: usize,
    nb_direct: usize,
    wit_a: Vec<InterfererWitness>,
    wit_b: Vec<InterfererWitness>,
    dir_a: Vec<InterfererWitness>,
    dir_b: Vec<InterfererWitness>,
}

fn role_profile(
    net: &LayeredNetwork,
    subset: &NodeSet,
    pa: &Path,
    pb: &Path,
    swapped: bool,
) -> Result<RoleProfile> {
    // The profile always counts leaks fed by the actual stream-2 source
    // against its first slot, so the actual stream-1 route must sit there.
    let p = if swapped {
        interference_profile(net, subset, pb, pa)?
    } else {
        interference_profile(net, subset, pa, pb)?
    };
    Ok(if swapped {
        RoleProfile {
            na: p.n2,
            nb: p.n1,
            na_direct: p.n2_direct,
            nb_direct: p.n1_direct,
            wit_a: p.witnesses2,
            wit_b: p.witnesses1,
            dir_a: p.direct_witnesses2,
            dir_b: p.direct_witnesses1,
        }
    } else {
        RoleProfile {
            na: p.n1,
            nb: p.n2,
            na_direct: p.n1_direct,
            nb_direct: p.n2_direct,
            wit_a: p.witnesses1,
            wit_b: p.witnesses2,
            dir_a: p.direct_witnesses1,
            dir_b: p.direct_witnesses2,
        }
    })
}

/// Role-space terminals: (source a, dest a, source b, dest b).
fn role_terminals(t: &Terminals, swapped: bool) -> (usize, usize, usize, usize) {
    if swapped {
        (t.s2, t.d2, t.s1, t.d1)
    } else {
        (t.s1, t.d1, t.s2, t.d2)
    }
}

/// All disjoint route pairs (s1⇝d1, s2⇝d2) up to the cap, plus whether the
/// enumeration ran to completion.
fn disjoint_pairs_capped(net: &LayeredNetwork) -> (Vec<(Path, Path)>, bool) {
    let t = net.terminals();
    let full = net.full_set();
    let mut pairs = Vec::new();
    let complete = net.for_each_disjoint_pair_in(
        &full,
        t.s1,
        t.d1,
        t.s2,
        t.d2,
        PAIR_ENUM_CAP,
        &mut |p, q| {
            pairs.push((p.clone(), q.clone()));
            true
        },
    );
    (pairs, complete)
}

/// All routes u ⇝ v up to the cap, plus a completeness flag.
fn stream_paths_capped(net: &LayeredNetwork, u: usize, v: usize) -> (Vec<Path>, bool) {
    let full = net.full_set();
    let mut paths = net.enumerate_paths(&full, u, v, PATH_ENUM_CAP + 1);
    let complete = paths.len() <= PATH_ENUM_CAP;
    paths.truncate(PATH_ENUM_CAP);
    (paths, complete)
}

// ---------------------------------------------------------------------------
// Choke detection (cases A and A')
// ---------------------------------------------------------------------------

/// Scan for a single choke node, in (layer, index) order, streams in order.
pub fn detect_case_a(net: &LayeredNetwork) -> Option<CutNodeWitness> {
    let mut nodes: Vec<usize> = (0..net.len()).collect();
    nodes.sort_by_key(|&v| (net.layer_of(v), v));
    for v in nodes {
        for i in [1, 2] {
            if cut_node_qualifies(net, v, i) {
                return Some(CutNodeWitness { node: v, pair_index: i });
            }
        }
    }
    None
}

/// Scan for a choke edge, in (tail layer, tail, head) order.
pub fn detect_case_a_prime(net: &LayeredNetwork) -> Option<CutEdgeWitness> {
    let mut edges: Vec<(usize, usize)> = net.edges().iter().map(|e| (e.tail, e.head)).collect();
    edges.sort_by_key(|&(tail, head)| (net.layer_of(tail), tail, head));
    for (tail, head) in edges {
        for i in [1, 2] {
            if cut_edge_qualifies(net, tail, head, i) {
                return Some(CutEdgeWitness {
                    tail,
                    head,
                    pair_index: i,
                });
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Manageable pairs (case B)
// ---------------------------------------------------------------------------

/// Walk disjoint route pairs in lexicographic order and return the first
/// with a manageable subset.
pub fn find_manageable_pair(net: &LayeredNetwork) -> Result<PairSearch> {
    let (pairs, complete) = disjoint_pairs_capped(net);
    let mut definitive = complete;
    for (p11, p22) in &pairs {
        let search = find_manageable_subset(net, p11, p22, ManageableMode::Both)?;
        if let Some(subset) = search.subset {
            return Ok(PairSearch {
                witness: Some(ManageablePairWitness {
                    p11: p11.clone(),
                    p22: p22.clone(),
                    subset,
                }),
                definitive: true,
            });
        }
        definitive &= search.exhaustive;
    }
    Ok(PairSearch {
        witness: None,
        definitive,
    })
}

// ---------------------------------------------------------------------------
// Shared-trunk detection (butterfly)
// ---------------------------------------------------------------------------

/// Look for two stream routes whose intersection is one contiguous shared
/// stretch, with a disjoint cross pair avoiding the stretch. Among all
/// hits, returns one whose stretch ends in the latest possible layer.
pub fn detect_butterfly(net: &LayeredNetwork) -> StructureScan<ButterflyWitness> {
    if net.num_layers() < 3 {
        return StructureScan {
            witness: None,
            complete: true,
        };
    }
    let t = net.terminals();
    let (p1s, c1) = stream_paths_capped(net, t.s1, t.d1);
    let (p2s, c2) = stream_paths_capped(net, t.s2, t.d2);
    let mut complete = c1 && c2;
    let full = net.full_set();
    let mut best: Option<ButterflyWitness> = None;
    let mut budget = INTERSECT_BUDGET;
    'outer: for p11 in &p1s {
        let set1 = p11.node_set();
        for p22 in &p2s {
            if budget == 0 {
                complete = false;
                break 'outer;
            }
            budget -= 1;
            let inter = set1.intersect(&p22.node_set());
            if inter.is_empty() {
                continue;
            }
            let u0 = inter.iter().min_by_key(|&v| net.layer_of(v)).unwrap();
            let u1 = inter.iter().max_by_key(|&v| net.layer_of(v)).unwrap();
            let (Ok(seg1), Ok(seg2)) = (p11.slice(u0, u1), p22.slice(u0, u1)) else {
                continue;
            };
            if seg1.node_set() != inter || seg2.node_set() != inter {
                continue; // intersection is not one contiguous common stretch
            }
            let mask = full.minus(&inter);
            let Some((p12, p21)) = net.find_disjoint_pair_in(&mask, t.s1, t.d2, t.s2, t.d1)
            else {
                continue;
            };
            let better = best
                .as_ref()
                .is_none_or(|b| net.layer_of(u1) > net.layer_of(b.u1));
            if better {
                best = Some(ButterflyWitness {
                    u0,
                    u1,
                    shared: seg1,
                    p11: p11.clone(),
                    p22: p22.clone(),
                    p12,
                    p21,
                });
            }
        }
    }
    StructureScan {
        witness: best,
        complete,
    }
}

// ---------------------------------------------------------------------------
// Snaking-route detection (grail)
// ---------------------------------------------------------------------------

/// Look for a disjoint cross pair with a snaking connection, trying the
/// plain reading first and the mirrored one second on every pair.
pub fn detect_grail(net: &LayeredNetwork) -> StructureScan<GrailWitness> {
    let t = net.terminals();
    let full = net.full_set();
    let mut found: Option<GrailWitness> = None;
    let complete = net.for_each_disjoint_pair_in(
        &full,
        t.s1,
        t.d2,
        t.s2,
        t.d1,
        PAIR_ENUM_CAP,
        &mut |p12, p21| {
            if let Some(w) = grail_on_pair(net, p12, p21) {
                found = Some(w);
                return false;
            }
            true
        },
    );
    let complete = complete || found.is_some();
    StructureScan {
        witness: found,
        complete,
    }
}

fn grail_on_pair(net: &LayeredNetwork, p12: &Path, p21: &Path) -> Option<GrailWitness> {
    let t = net.terminals();
    for exchanged in [false, true] {
        let (host_a, host_b, src, dst) = if exchanged {
            (p21, p12, t.s1, t.d1)
        } else {
            (p12, p21, t.s2, t.d2)
        };
        for &wa in host_a.nodes() {
            if !net.reachable(src, wa) {
                continue;
            }
            for &wb in host_b.nodes() {
                if net.layer_of(wb) <= net.layer_of(wa) {
                    continue;
                }
                if !net.reachable(wa, wb) || !net.reachable(wb, dst) {
                    continue;
                }
                let full = net.full_set();
                let feed = net.some_path(&full, src, wa)?;
                let bridge = net.some_path(&full, wa, wb)?;
                let drain = net.some_path(&full, wb, dst)?;
                return Some(GrailWitness {
                    p12: p12.clone(),
                    p21: p21.clone(),
                    wa,
                    wb,
                    exchanged,
                    feed,
                    bridge,
                    drain,
                });
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// C1 extraction and certification
// ---------------------------------------------------------------------------

/// Search all disjoint route pairs, both role orientations, for the first
/// certified C1 witness.
pub fn extract_c1(net: &LayeredNetwork) -> Result<StructureScan<C1Witness>> {
    let (pairs, complete) = disjoint_pairs_capped(net);
    for (p1, p2) in &pairs {
        for swapped in [false, true] {
            if let Some(w) = certify_c1(net, p1, p2, swapped)? {
                return Ok(StructureScan {
                    witness: Some(w),
                    complete: true,
                });
            }
        }
    }
    Ok(StructureScan {
        witness: None,
        complete,
    })
}

fn certify_c1(
    net: &LayeredNetwork,
    p1: &Path,
    p2: &Path,
    swapped: bool,
) -> Result<Option<C1Witness>> {
    let (pa, pb) = if swapped { (p2, p1) } else { (p1, p2) };
    let (sa, _, sb, _) = role_terminals(&net.terminals(), swapped);
    let full = net.full_set();
    let prof = role_profile(net, &full, pa, pb, swapped)?;
    if !(prof.na >= 2 && prof.na_direct == 1 && prof.nb == 1 && prof.nb_direct == 0) {
        return Ok(None);
    }
    let v3 = prof.dir_a[0].interferer;
    let pa_set = pa.node_set();
    let pb_set = pb.node_set();
    let v4s = edge_heads_into(net, v3, &pa_set);
    for wit in prof.wit_a.iter().filter(|w| !w.direct) {
        let v1 = wit.interferer;
        // Candidate detours: role-b-source routes to v1 avoiding role a's
        // route, each cut back to its last role-b node.
        let feeders = net.enumerate_paths(&full.minus(&pa_set), sb, v1, CERT_ENUM_CAP);
        let mut seen = HashSet::new();
        for feeder in &feeders {
            let Some(&vm) = feeder.nodes().iter().rev().find(|n| pb.contains(**n)) else {
                continue;
            };
            let Ok(suffix) = feeder.slice(vm, v1) else {
                continue;
            };
            if !seen.insert(suffix.nodes().to_vec()) {
                continue;
            }
            let subset = pa_set.union(&pb_set).union(&suffix.node_set());
            let star = role_profile(net, &subset, pa, pb, swapped)?;
            if !(star.na >= 2 && star.nb == 1) {
                continue;
            }
            let v2 = star.wit_b[0].interferer;
            if !suffix.contains(v2) || v2 == vm {
                continue;
            }
            let v0s = edge_heads_into(net, v2, &pb_set);
            // Candidate exits: where role a's in-subset feeders to v2 leave
            // its route. The successor lands on the detour automatically,
            // since the subset offers nothing else off the two routes.
            let mut exits: Vec<(usize, usize)> = Vec::new();
            for f2 in net.enumerate_paths(&subset.minus(&pb_set), sa, v2, CERT_ENUM_CAP) {
                let Some(pos5) = f2.nodes().iter().rposition(|n| pa.contains(*n)) else {
                    continue;
                };
                if pos5 + 1 >= f2.len() {
                    continue;
                }
                let exit = (f2.nodes()[pos5], f2.nodes()[pos5 + 1]);
                if !exits.contains(&exit) {
                    exits.push(exit);
                }
            }
            for &(v5, v6) in &exits {
                if !suffix.contains(v6) {
                    continue;
                }
                for &v0 in &v0s {
                    for &v4 in &v4s {
                        let cand = C1Witness {
                            p1: p1.clone(),
                            p2: p2.clone(),
                            swapped,
                            subset,
                            suffix: suffix.clone(),
                            vm,
                            v0,
                            v1,
                            v2,
                            v3,
                            v4,
                            v5,
                            v6,
                        };
                        if verify_c1_properties(net, &cand)? {
                            return Ok(Some(cand));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

fn edge_heads_into(net: &LayeredNetwork, tail: usize, targets: &NodeSet) -> Vec<usize> {
    let mut heads: Vec<usize> = net
        .edges()
        .iter()
        .filter(|e| e.tail == tail && targets.contains(e.head))
        .map(|e| e.head)
        .collect();
    heads.sort_unstable();
    heads
}

/// Re-certify every claim of a C1 witness: route shapes, leak counts in the
/// full network and in the working subset, and the eight cut predicates the
/// rate region rests on.
pub fn verify_c1_properties(net: &LayeredNetwork, w: &C1Witness) -> Result<bool> {
    let t = net.terminals();
    let (sa, da, sb, db) = role_terminals(&t, w.swapped);
    let (pa, pb) = if w.swapped {
        (&w.p2, &w.p1)
    } else {
        (&w.p1, &w.p2)
    };
    // Structural shape.
    let shape = path_ok(net, pa, sa, da)
        && path_ok(net, pb, sb, db)
        && pa.disjoint(pb)
        && pb.contains(w.vm)
        && path_ok(net, &w.suffix, w.vm, w.v1)
        && w.suffix.contains(w.v2)
        && w.v2 != w.vm
        && w.suffix.contains(w.v6)
        && pa.contains(w.v5)
        && pb.contains(w.v3)
        && pa.contains(w.v4)
        && pb.contains(w.v0)
        && net.has_edge(w.v5, w.v6)
        && net.has_edge(w.v2, w.v0)
        && net.has_edge(w.v3, w.v4)
        && pa
            .node_set()
            .union(&pb.node_set())
            .union(&w.suffix.node_set())
            == w.subset;
    if !shape {
        return Ok(false);
    }
    // Leak counts over the full network and inside the working subset.
    let full = net.full_set();
    let prof = role_profile(net, &full, pa, pb, w.swapped)?;
    if !(prof.na >= 2
        && prof.na_direct == 1
        && prof.dir_a[0].interferer == w.v3
        && prof.nb == 1
        && prof.nb_direct == 0
        && prof.wit_b[0].interferer == w.v2)
    {
        return Ok(false);
    }
    let star = role_profile(net, &w.subset, pa, pb, w.swapped)?;
    if !(star.na >= 2 && star.nb == 1 && star.wit_b[0].interferer == w.v2) {
        return Ok(false);
    }
    // The working subset keeps exactly three nodes in v2's layer.
    let v2_layer = net.layer_of(w.v2);
    if w.subset.iter().filter(|&v| net.layer_of(v) == v2_layer).count() != 3 {
        return Ok(false);
    }
    // Cut predicates.
    let p1 = cut(net, &[w.v2], sa, db) && cut(net, &[w.v0], sa, db);
    let p2 = cut(net, &[w.v5], sa, db) && cut(net, &[w.v6], sa, db);
    let p3 = [w.v6, w.v2].iter().all(|&x| {
        [w.v3, w.v4]
            .iter()
            .all(|&y| cut(net, &[x, y], sb, da))
    });
    let p4 = cut(net, &[w.v0], sa, db) && cut(net, &[w.v0], sb, db);
    let p5 = cut(net, &[w.v5], sa, da) && cut(net, &[w.v5], sa, db);
    let p6 = cut(net, &[w.v2, w.v3], sa, db) && cut(net, &[w.v2, w.v3], sb, db);
    let p7 = cut(net, &[w.v2, w.v4], sa, da) && cut(net, &[w.v2, w.v4], sb, da);
    let p8 = cut(net, &[w.v6], sa, w.v2) && cut(net, &[w.v6], sb, w.v2);
    Ok(p1 && p2 && p3 && p4 && p5 && p6 && p7 && p8)
}

// ---------------------------------------------------------------------------
// C2 extraction and certification
// ---------------------------------------------------------------------------

/// Search all disjoint route pairs, both role orientations, for the first
/// certified C2 witness.
pub fn extract_c2(net: &LayeredNetwork) -> Result<StructureScan<C2Witness>> {
    let (pairs, complete) = disjoint_pairs_capped(net);
    for (p1, p2) in &pairs {
        for swapped in [false, true] {
            if let Some(w) = certify_c2(net, p1, p2, swapped)? {
                return Ok(StructureScan {
                    witness: Some(w),
                    complete: true,
                });
            }
        }
    }
    Ok(StructureScan {
        witness: None,
        complete,
    })
}

fn certify_c2(
    net: &LayeredNetwork,
    p1: &Path,
    p2: &Path,
    swapped: bool,
) -> Result<Option<C2Witness>> {
    let (pa, pb) = if swapped { (p2, p1) } else { (p1, p2) };
    let (sa, da, sb, db) = role_terminals(&net.terminals(), swapped);
    let full = net.full_set();
    let prof = role_profile(net, &full, pa, pb, swapped)?;
    if !(prof.na == 1 && prof.na_direct == 1) {
        return Ok(None);
    }
    let v2 = prof.dir_a[0].interferer;
    let pa_set = pa.node_set();
    let pb_set = pb.node_set();
    for &v1 in &edge_heads_into(net, v2, &pa_set) {
        // First reading: reroute role a around v1.
        let mask_q = full.minus(&pb_set).without(v1);
        for q1 in net.enumerate_paths(&mask_q, sa, da, CERT_ENUM_CAP) {
            let qprof = role_profile(net, &full, &q1, pb, swapped)?;
            if !(qprof.na_direct == 0 && qprof.nb_direct == 1) {
                continue;
            }
            let v3 = qprof.dir_b[0].interferer;
            let mask_z = full.minus(&pb_set).without(v3);
            for z1 in net.enumerate_paths(&mask_z, sa, da, CERT_ENUM_CAP) {
                if !z1.contains(v1) {
                    continue;
                }
                let zprof = role_profile(net, &full, &z1, pb, swapped)?;
                if !(zprof.na_direct == 1
                    && zprof.dir_a[0].interferer == v2
                    && zprof.nb_direct == 0)
                {
                    continue;
                }
                for &v4 in &edge_heads_into(net, v3, &pb_set) {
                    let cand = C2Witness {
                        p2: pb.clone(),
                        q1: q1.clone(),
                        z1: z1.clone(),
                        v1,
                        v2,
                        v3,
                        v4,
                        swapped,
                    };
                    if verify_c2_properties(net, &cand)? {
                        return Ok(Some(cand));
                    }
                }
            }
        }
        // Second reading: reroute role b around v2 and renormalize, so the
        // emitted witness is in the opposite role orientation.
        let mask_q2 = full.minus(&pa_set).without(v2);
        for q2 in net.enumerate_paths(&mask_q2, sb, db, CERT_ENUM_CAP) {
            let q2prof = role_profile(net, &full, pa, &q2, swapped)?;
            if !(q2prof.na_direct == 0 && q2prof.nb_direct == 1) {
                continue;
            }
            let v3b = q2prof.dir_b[0].interferer;
            for &v4b in &edge_heads_into(net, v3b, &q2.node_set()) {
                let mask_z2 = full.minus(&pa_set).without(v4b);
                for z2 in net.enumerate_paths(&mask_z2, sb, db, CERT_ENUM_CAP) {
                    if !z2.contains(v2) {
                        continue;
                    }
                    let z2prof = role_profile(net, &full, pa, &z2, swapped)?;
                    if !(z2prof.na_direct == 1
                        && z2prof.dir_a[0].interferer == v2
                        && z2prof.nb_direct == 0)
                    {
                        continue;
                    }
                    let cand = C2Witness {
                        p2: pa.clone(),
                        q1: z2.clone(),
                        z1: q2.clone(),
                        v1: v4b,
                        v2: v3b,
                        v3: v2,
                        v4: v1,
                        swapped: !swapped,
                    };
                    if verify_c2_properties(net, &cand)? {
                        return Ok(Some(cand));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Re-certify every claim of a C2 witness: route shapes, the leak profiles
/// of both role-a routes against the role-b route, the cut predicates, and
/// the absence of a forward connection from `v1` to `v3` (whose presence
/// would mean a snaking-route structure instead).
pub fn verify_c2_properties(net: &LayeredNetwork, w: &C2Witness) -> Result<bool> {
    let t = net.terminals();
    let (sa, da, sb, db) = role_terminals(&t, w.swapped);
    // Structural shape, covering the route re-validations.
    let shape = path_ok(net, &w.p2, sb, db)
        && path_ok(net, &w.q1, sa, da)
        && path_ok(net, &w.z1, sa, da)
        && w.q1.disjoint(&w.p2)
        && w.z1.disjoint(&w.p2)
        && !w.q1.contains(w.v1)
        && w.z1.contains(w.v1)
        && w.q1.contains(w.v3)
        && !w.z1.contains(w.v3)
        && w.p2.contains(w.v2)
        && w.p2.contains(w.v4)
        && net.has_edge(w.v2, w.v1)
        && net.has_edge(w.v3, w.v4);
    if !shape {
        return Ok(false);
    }
    let full = net.full_set();
    // The detour route leaks exactly once into the role-b route and takes
    // nothing back from it.
    let qprof = role_profile(net, &full, &w.q1, &w.p2, w.swapped)?;
    let p3 = qprof.na_direct == 0
        && qprof.nb_direct == 1
        && qprof.dir_b[0].interferer == w.v3;
    // The through route absorbs exactly the single cross edge and leaks
    // nothing back.
    let zprof = role_profile(net, &full, &w.z1, &w.p2, w.swapped)?;
    let p6 = zprof.na_direct == 1
        && zprof.dir_a[0].interferer == w.v2
        && zprof.nb_direct == 0;
    if !(p3 && p6) {
        return Ok(false);
    }
    // Cut predicates.
    let p1 = cut(net, &[w.v2], sb, da) && cut(net, &[w.v1], sb, da);
    let p4 = cut(net, &[w.v3], sa, db) && cut(net, &[w.v4], sa, db);
    let p7 = cut(net, &[w.v4], sa, db) && cut(net, &[w.v4], sb, db);
    let p8 = cut(net, &[w.v2], sb, da) && cut(net, &[w.v2], sb, db);
    let p9 = cut(net, &[w.v1, w.v3], sa, da) && cut(net, &[w.v1, w.v3], sb, da);
    // A forward connection v1 ⇝ v3 would assemble a snaking-route structure
    // out of the two role-a routes, contradicting this case.
    let p10 = !net.reachable(w.v1, w.v3);
    Ok(p1 && p4 && p7 && p8 && p9 && p10)
}

// ---------------------------------------------------------------------------
// Top-level classification
// ---------------------------------------------------------------------------

/// Classify the network, attaching a re-certifiable witness.
///
/// Detection order: disconnection, choke node, choke edge, manageable pair,
/// shared trunk, snaking route, C1, C2. Searches that hit their caps fall
/// back to the exhaustive scanner on small networks and otherwise surface
/// [`Error::Indeterminate`] — the answer is never guessed.
pub fn classify_sum_dof(net: &LayeredNetwork) -> Result<Classification> {
    let t = net.terminals();
    let conn1 = net.reachable(t.s1, t.d1);
    let conn2 = net.reachable(t.s2, t.d2);
    if !conn1 || !conn2 {
        let sum = if conn1 != conn2 {
            SumDof::One
        } else {
            SumDof::Zero
        };
        return Ok(Classification {
            case: SumDofCase::Disconnected,
            sum_dof: sum,
            witness: CaseWitness::Disconnected {
                pair1_connected: conn1,
                pair2_connected: conn2,
            },
        });
    }
    if let Some(w) = detect_case_a(net) {
        return Ok(Classification {
            case: SumDofCase::A,
            sum_dof: SumDof::One,
            witness: CaseWitness::CutNode(w),
        });
    }
    if let Some(w) = detect_case_a_prime(net) {
        return Ok(Classification {
            case: SumDofCase::APrime,
            sum_dof: SumDof::One,
            witness: CaseWitness::CutEdge(w),
        });
    }
    let search = find_manageable_pair(net)?;
    if let Some(w) = search.witness {
        return Ok(Classification {
            case: SumDofCase::B,
            sum_dof: SumDof::Two,
            witness: CaseWitness::Manageable(w),
        });
    }
    if !search.definitive {
        return capped_fallback(net, "manageable-pair search hit its enumeration caps");
    }
    let bf = detect_butterfly(net);
    if let Some(w) = bf.witness {
        return Ok(Classification {
            case: SumDofCase::BPrime,
            sum_dof: SumDof::Two,
            witness: CaseWitness::Butterfly(w),
        });
    }
    let gr = detect_grail(net);
    if let Some(w) = gr.witness {
        return Ok(Classification {
            case: SumDofCase::BPrime,
            sum_dof: SumDof::Two,
            witness: CaseWitness::Grail(w),
        });
    }
    if !bf.complete || !gr.complete {
        return capped_fallback(net, "structure scans hit their enumeration caps");
    }
    let c1 = extract_c1(net)?;
    if let Some(w) = c1.witness {
        return Ok(Classification {
            case: SumDofCase::C1,
            sum_dof: SumDof::ThreeHalves,
            witness: CaseWitness::C1(w),
        });
    }
    let c2 = extract_c2(net)?;
    if let Some(w) = c2.witness {
        return Ok(Classification {
            case: SumDofCase::C2,
            sum_dof: SumDof::ThreeHalves,
            witness: CaseWitness::C2(w),
        });
    }
    if !c1.complete || !c2.complete {
        return capped_fallback(net, "witness extraction hit its enumeration caps");
    }
    Err(Error::Indeterminate(
        "network fits no structural case although every detector ran to completion".into(),
    ))
}

fn capped_fallback(net: &LayeredNetwork, why: &str) -> Result<Classification> {
    if net.len() <= oracle::CLASSIFY_NODE_LIMIT {
        return oracle::brute_force_classify(net);
    }
    Err(Error::Indeterminate(format!(
        "{why}, and the network is too large for the exhaustive fallback"
    )))
}

// ---------------------------------------------------------------------------
// Rate regions
// ---------------------------------------------------------------------------

/// The five polygonal degrees-of-freedom regions, keyed by structural case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    I,
    II,
    III,
    IV,
    V,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
            Region::V => "V",
        };
        f.write_str(s)
    }
}

/// A classified region: its label, its nontrivial corner points, and the
/// classification that produced it.
#[derive(Debug, Clone)]
pub struct RegionReport {
    pub region: Region,
    /// Corner points (D1, D2) of the region beyond the origin and axes'
    /// implicit constraints, in conventional listing order.
    pub vertices: Vec<(f64, f64)>,
    pub classification: Classification,
}

impl RegionReport {
    /// Largest D1 + D2 over the corner points.
    pub fn max_sum(&self) -> f64 {
        self.vertices
            .iter()
            .map(|(a, b)| a + b)
            .fold(0.0, f64::max)
    }

    /// Corner points rendered as `(1,0.5),(0.5,1),…`.
    pub fn render_vertices(&self) -> String {
        self.vertices
            .iter()
            .map(|&(a, b)| format!("({},{})", fmt_coord(a), fmt_coord(b)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn fmt_coord(x: f64) -> String {
    if (x - 0.5).abs() < 1e-9 {
        "0.5".into()
    } else {
        format!("{}", x.round() as i64)
    }
}

/// Map a classification to its degrees-of-freedom region.
///
/// Errors with [`Error::InvalidArgument`] on disconnected networks: the
/// region taxonomy presumes both streams are connected.
pub fn classify_region(net: &LayeredNetwork) -> Result<RegionReport> {
    let classification = classify_sum_dof(net)?;
    let (region, vertices) = match (&classification.case, &classification.witness) {
        (SumDofCase::Disconnected, _) => {
            return Err(Error::InvalidArgument(
                "region classification requires both streams connected".into(),
            ));
        }
        (SumDofCase::A | SumDofCase::APrime, _) => {
            (Region::I, vec![(1.0, 0.0), (0.0, 1.0)])
        }
        (SumDofCase::B | SumDofCase::BPrime, _) => {
            (Region::II, vec![(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)])
        }
        (SumDofCase::C1, _) => (
            Region::III,
            vec![(1.0, 0.5), (0.5, 1.0), (1.0, 0.0), (0.0, 1.0)],
        ),
        (SumDofCase::C2, CaseWitness::C2(w)) => {
            if w.swapped {
                (Region::V, vec![(0.5, 1.0), (1.0, 0.0), (0.0, 1.0)])
            } else {
                (Region::IV, vec![(1.0, 0.5), (1.0, 0.0), (0.0, 1.0)])
            }
        }
        (SumDofCase::C2, _) => {
            return Err(Error::Invariant(
                "C2 classification lacks its witness".into(),
            ));
        }
    };
    Ok(RegionReport {
        region,
        vertices,
        classification,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netmodel::NetworkBuilder;

    fn z_network() -> LayeredNetwork {
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("a", 2)
            .node("b", 2)
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "a", 1.0)
            .edge("a", "d1", 1.0)
            .edge("s2", "b", 1.0)
            .edge("b", "d2", 1.0)
            .edge("b", "d1", 1.0)
            .pairs("s1", "d1", "s2", "d2");
        b.build().unwrap()
    }

    fn one_sided() -> LayeredNetwork {
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("a", 2)
            .node("b", 2)
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "a", 1.0)
            .edge("a", "d1", 1.0)
            .edge("s2", "a", 1.0)
            .edge("s1", "b", 1.0)
            .edge("b", "d2", 1.0)
            .pairs("s1", "d1", "s2", "d2");
        b.build().unwrap()
    }

    #[test]
    fn bottleneck_is_case_a_with_node_witness() {
        let net = fixtures::bottleneck();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::A);
        assert_eq!(c.sum_dof, SumDof::One);
        assert_eq!(c.witness.render(&net), "m");
        match c.witness {
            CaseWitness::CutNode(w) => assert!(w.holds(&net)),
            other => panic!("expected a choke-node witness, got {other:?}"),
        }
    }

    #[test]
    fn z_network_is_case_a_prime() {
        let net = z_network();
        assert!(detect_case_a(&net).is_none());
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::APrime);
        assert_eq!(c.sum_dof, SumDof::One);
        assert_eq!(c.witness.render(&net), "b->d1");
        match c.witness {
            CaseWitness::CutEdge(w) => assert!(w.holds(&net)),
            other => panic!("expected a choke-edge witness, got {other:?}"),
        }
    }

    #[test]
    fn disconnected_network_counts_connected_streams() {
        let net = one_sided();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::Disconnected);
        assert_eq!(c.sum_dof, SumDof::One);
        assert_eq!(c.witness.render(&net), "missing-route:s2~d2");
        assert!(classify_region(&net).is_err());
    }

    #[test]
    fn manageable_fixtures_are_case_b() {
        for net in [
            fixtures::parallel(),
            fixtures::two_relay_full(),
            fixtures::interference_demo(),
        ] {
            let c = classify_sum_dof(&net).unwrap();
            assert_eq!(c.case, SumDofCase::B, "{net:?}");
            assert_eq!(c.sum_dof, SumDof::Two);
            match c.witness {
                CaseWitness::Manageable(w) => assert!(w.holds(&net)),
                other => panic!("expected a manageable-pair witness, got {other:?}"),
            }
        }
    }

    #[test]
    fn butterfly_hub_has_single_node_trunk() {
        let net = fixtures::butterfly_hub();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::BPrime);
        assert_eq!(c.sum_dof, SumDof::Two);
        match c.witness {
            CaseWitness::Butterfly(w) => {
                assert!(w.holds(&net));
                assert_eq!(net.name(w.u0), "m");
                assert_eq!(net.name(w.u1), "m");
                assert_eq!(w.shared.len(), 1);
            }
            other => panic!("expected a shared-trunk witness, got {other:?}"),
        }
    }

    #[test]
    fn butterfly_span_has_two_node_trunk() {
        let net = fixtures::butterfly_span();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::BPrime);
        match c.witness {
            CaseWitness::Butterfly(w) => {
                assert!(w.holds(&net));
                assert_eq!(net.name(w.u0), "m1");
                assert_eq!(net.name(w.u1), "m2");
                assert_eq!(w.shared.len(), 2);
            }
            other => panic!("expected a shared-trunk witness, got {other:?}"),
        }
    }

    #[test]
    fn grail_ladder_detects_plain_snake() {
        let net = fixtures::grail_ladder();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::BPrime);
        assert_eq!(c.sum_dof, SumDof::Two);
        match c.witness {
            CaseWitness::Grail(w) => {
                assert!(w.holds(&net));
                assert!(!w.exchanged);
                assert_eq!(net.name(w.wa), "u1");
                assert_eq!(net.name(w.wb), "v2");
            }
            other => panic!("expected a snaking-route witness, got {other:?}"),
        }
    }

    #[test]
    fn crosslink_grail_detects_exchanged_snake() {
        let net = fixtures::crosslink_grail();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::BPrime);
        match c.witness {
            CaseWitness::Grail(w) => {
                assert!(w.holds(&net));
                assert!(w.exchanged);
                assert_eq!(net.name(w.wa), "a2");
                assert_eq!(net.name(w.wb), "x4");
            }
            other => panic!("expected a snaking-route witness, got {other:?}"),
        }
    }

    #[test]
    fn funnel_shallow_is_c1_with_expected_anatomy() {
        let net = fixtures::funnel_shallow();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::C1);
        assert_eq!(c.sum_dof, SumDof::ThreeHalves);
        match c.witness {
            CaseWitness::C1(w) => {
                assert!(verify_c1_properties(&net, &w).unwrap());
                assert!(!w.swapped);
                assert_eq!(net.name(w.v1), "x");
                assert_eq!(net.name(w.v2), "w");
                assert_eq!(net.name(w.v3), "b2");
                assert_eq!(net.name(w.v4), "a3");
                assert_eq!(net.name(w.v5), "a1");
                assert_eq!(net.name(w.v6), "w");
                assert_eq!(net.name(w.vm), "b1");
                assert_eq!(net.name(w.v0), "b3");
            }
            other => panic!("expected a C1 witness, got {other:?}"),
        }
    }

    #[test]
    fn funnel_deep_is_c1_with_deeper_waist() {
        let net = fixtures::funnel_deep();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::C1);
        match c.witness {
            CaseWitness::C1(w) => {
                assert!(verify_c1_properties(&net, &w).unwrap());
                assert_eq!(net.name(w.v2), "w2");
                assert_eq!(net.name(w.v3), "b2");
                assert_eq!(net.name(w.v5), "a2");
                // The companion-route leak lands before the waist here.
                assert!(net.layer_of(w.v3) < net.layer_of(w.v2));
            }
            other => panic!("expected a C1 witness, got {other:?}"),
        }
    }

    #[test]
    fn crosslink_even_is_c2() {
        let net = fixtures::crosslink_even();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::C2);
        assert_eq!(c.sum_dof, SumDof::ThreeHalves);
        match c.witness {
            CaseWitness::C2(w) => {
                assert!(verify_c2_properties(&net, &w).unwrap());
                assert!(!w.swapped);
                assert_eq!(net.name(w.v1), "a3");
                assert_eq!(net.name(w.v2), "b2");
                assert_eq!(net.name(w.v3), "q");
                assert_eq!(net.name(w.v4), "d2");
                assert_eq!(net.layer_of(w.v3), net.layer_of(w.v1));
            }
            other => panic!("expected a C2 witness, got {other:?}"),
        }
    }

    #[test]
    fn crosslink_deep_is_c2_with_early_leak() {
        let net = fixtures::crosslink_deep();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::C2);
        match c.witness {
            CaseWitness::C2(w) => {
                assert!(verify_c2_properties(&net, &w).unwrap());
                assert!(!w.swapped);
                assert_eq!(net.name(w.v1), "a4");
                assert_eq!(net.name(w.v2), "b3");
                assert_eq!(net.name(w.v3), "w3");
                assert_eq!(net.name(w.v4), "b3");
                assert!(net.layer_of(w.v3) < net.layer_of(w.v1));
            }
            other => panic!("expected a C2 witness, got {other:?}"),
        }
    }

    #[test]
    fn crosslink_swapped_flips_roles() {
        let net = fixtures::crosslink_even_swapped();
        let c = classify_sum_dof(&net).unwrap();
        assert_eq!(c.case, SumDofCase::C2);
        match c.witness {
            CaseWitness::C2(w) => {
                assert!(verify_c2_properties(&net, &w).unwrap());
                assert!(w.swapped);
            }
            other => panic!("expected a C2 witness, got {other:?}"),
        }
    }

    #[test]
    fn regions_follow_cases() {
        let cases = [
            (fixtures::bottleneck(), Region::I, "(1,0),(0,1)"),
            (fixtures::parallel(), Region::II, "(1,1),(1,0),(0,1)"),
            (fixtures::butterfly_hub(), Region::II, "(1,1),(1,0),(0,1)"),
            (
                fixtures::funnel_shallow(),
                Region::III,
                "(1,0.5),(0.5,1),(1,0),(0,1)",
            ),
            (
                fixtures::crosslink_even(),
                Region::IV,
                "(1,0.5),(1,0),(0,1)",
            ),
            (
                fixtures::crosslink_even_swapped(),
                Region::V,
                "(0.5,1),(1,0),(0,1)",
            ),
        ];
        for (net, region, rendered) in cases {
            let report = classify_region(&net).unwrap();
            assert_eq!(report.region, region, "{net:?}");
            assert_eq!(report.render_vertices(), rendered);
            assert_eq!(
                report.max_sum(),
                report.classification.sum_dof.as_f64(),
                "region peak must match the classified sum"
            );
        }
    }

    #[test]
    fn condensable_fixture_classifies_cleanly() {
        let net = fixtures::five_layer_condensable();
        let c = classify_sum_dof(&net).unwrap();
        assert!(matches!(
            c.sum_dof,
            SumDof::One | SumDof::ThreeHalves | SumDof::Two
        ));
    }

    #[test]
    fn case_labels_render() {
        assert_eq!(SumDofCase::APrime.to_string(), "A'");
        assert_eq!(SumDofCase::BPrime.to_string(), "B'");
        assert_eq!(SumDof::ThreeHalves.to_string(), "3/2");
        assert_eq!(SumDof::Two.label(), "2");
        assert_eq!(Region::IV.to_string(), "IV");
    }
}
