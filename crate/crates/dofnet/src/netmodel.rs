//! Layered two-unicast network representation and graph machinery.
//!
//! - [`LayeredNetwork`]: immutable directed graph whose vertices partition
//!   into ordered layers V_1..V_r with edges only between consecutive
//!   layers; V_1 holds the two sources, V_r the two destinations.
//! - [`Path`]: strictly layer-increasing node sequence with slice and
//!   concatenation algebra.
//! - Vertex-disjoint path search for ordered endpoint pairs (synchronized
//!   layer-by-layer product walk), exhaustive path/pair enumeration with
//!   explicit caps, and a node-split max-flow value for Menger checks.
//! - The layer-doubling extension that turns vertex-disjointness into
//!   edge-disjointness.
//! - Text format parsing/serialization and seeded random generation with
//!   generic gains.
//!
//! Networks are immutable after construction; every operation here is pure.

use std::collections::HashMap;
use std::fmt;

use rand::rngs::SmallRng;
use rand::{Rng, RngExt, SeedableRng};

use crate::{Error, Result};

/// Maximum node count supported by [`NodeSet`] (u128 bitset).
pub const MAX_NODES: usize = 128;

/// Lower bound of the generic gain magnitude distribution.
pub const GAIN_LO: f64 = 0.5;
/// Upper bound of the generic gain magnitude distribution.
pub const GAIN_HI: f64 = 2.0;

/// Draw a generic channel gain: magnitude uniform in [0.5, 2.0], random sign.
///
/// The magnitude band keeps draws away from zero so that probability-one
/// non-vanishing statements stay numerically robust.
pub fn generic_gain<R: Rng>(rng: &mut R) -> f64 {
    let mag = rng.random_range(GAIN_LO..=GAIN_HI);
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

// ---------------------------------------------------------------------------
// Node sets
// ---------------------------------------------------------------------------

/// Small bitset over node indices (capacity [`MAX_NODES`]).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct NodeSet(u128);

impl NodeSet {
    /// Empty set.
    pub const EMPTY: NodeSet = NodeSet(0);

    /// Set containing all indices `0..n`.
    pub fn full(n: usize) -> NodeSet {
        assert!(n <= MAX_NODES, "node set capacity exceeded");
        if n == MAX_NODES {
            NodeSet(u128::MAX)
        } else {
            NodeSet((1u128 << n) - 1)
        }
    }

    /// Singleton set.
    pub fn singleton(ix: usize) -> NodeSet {
        NodeSet(0).with(ix)
    }

    /// Build from an iterator of indices.
    pub fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> NodeSet {
        let mut s = NodeSet(0);
        for ix in iter {
            s.insert(ix);
        }
        s
    }

    pub fn contains(&self, ix: usize) -> bool {
        debug_assert!(ix < MAX_NODES);
        self.0 >> ix & 1 == 1
    }

    pub fn insert(&mut self, ix: usize) {
        assert!(ix < MAX_NODES, "node set capacity exceeded");
        self.0 |= 1 << ix;
    }

    pub fn remove(&mut self, ix: usize) {
        self.0 &= !(1u128 << ix);
    }

    /// Copy with `ix` inserted.
    pub fn with(mut self, ix: usize) -> NodeSet {
        self.insert(ix);
        self
    }

    /// Copy with `ix` removed.
    pub fn without(mut self, ix: usize) -> NodeSet {
        self.remove(ix);
        self
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0 | other.0)
    }

    pub fn intersect(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0 & other.0)
    }

    pub fn minus(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_subset_of(&self, other: &NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint_from(&self, other: &NodeSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Iterate member indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.0;
        (0..MAX_NODES).filter(move |i| bits >> i & 1 == 1)
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

// ---------------------------------------------------------------------------
// Core types
// ---------------------------------------------------------------------------

/// A vertex: display name plus its layer index ℓ(v) (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub layer: usize,
}

/// A directed link between consecutive layers carrying a real channel gain.
///
/// Absent links are simply not stored; every stored gain is finite and
/// nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub gain: f64,
}

/// The four terminals, as node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terminals {
    pub s1: usize,
    pub d1: usize,
    pub s2: usize,
    pub d2: usize,
}

impl Terminals {
    /// Source of pair `i` (1 or 2).
    pub fn src(&self, i: usize) -> usize {
        match i {
            1 => self.s1,
            2 => self.s2,
            _ => panic!("pair index must be 1 or 2"),
        }
    }

    /// Destination of pair `i` (1 or 2).
    pub fn dst(&self, i: usize) -> usize {
        match i {
            1 => self.d1,
            2 => self.d2,
            _ => panic!("pair index must be 1 or 2"),
        }
    }
}

/// Immutable layered two-unicast network.
#[derive(Clone)]
pub struct LayeredNetwork {
    nodes: Vec<Node>,
    /// `layers[j]` lists the node indices of layer j+1, ascending.
    layers: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// Outgoing edge indices per node, sorted by head index.
    out_adj: Vec<Vec<usize>>,
    /// Incoming edge indices per node, sorted by tail index.
    in_adj: Vec<Vec<usize>>,
    terminals: Terminals,
}

impl fmt::Debug for LayeredNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LayeredNetwork({} layers, {} nodes, {} edges)",
            self.layers.len(),
            self.nodes.len(),
            self.edges.len()
        )
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Gain declaration: an explicit value or a seeded generic draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainSpec {
    Fixed(f64),
    Random,
}

/// Mutable accumulator for building a [`LayeredNetwork`].
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    n_layers: Option<usize>,
    nodes: Vec<(String, usize)>,
    edges: Vec<(String, String, GainSpec)>,
    pairs: Option<[String; 4]>,
    seed: Option<u64>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare the layer count r.
    pub fn layers(&mut self, r: usize) -> &mut Self {
        self.n_layers = Some(r);
        self
    }

    /// Declare a node with its 1-based layer.
    pub fn node(&mut self, name: &str, layer: usize) -> &mut Self {
        self.nodes.push((name.to_string(), layer));
        self
    }

    /// Declare an edge with an explicit gain.
    pub fn edge(&mut self, tail: &str, head: &str, gain: f64) -> &mut Self {
        self.edges
            .push((tail.to_string(), head.to_string(), GainSpec::Fixed(gain)));
        self
    }

    /// Declare an edge whose gain is drawn from the generic distribution.
    pub fn edge_rand(&mut self, tail: &str, head: &str) -> &mut Self {
        self.edges
            .push((tail.to_string(), head.to_string(), GainSpec::Random));
        self
    }

    /// Declare the two unicast pairs: (s1,d1) and (s2,d2).
    pub fn pairs(&mut self, s1: &str, d1: &str, s2: &str, d2: &str) -> &mut Self {
        self.pairs = Some([
            s1.to_string(),
            d1.to_string(),
            s2.to_string(),
            d2.to_string(),
        ]);
        self
    }

    /// Seed governing `rand` gains.
    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    /// Validate the declarations and build the immutable network.
    pub fn build(&self) -> Result<LayeredNetwork> {
        let malformed = |msg: String| Error::Malformed(msg);
        if self.nodes.len() > MAX_NODES {
            return Err(Error::SizeGuard(format!(
                "{} nodes exceeds the supported maximum of {MAX_NODES}",
                self.nodes.len()
            )));
        }
        let r = self
            .n_layers
            .or_else(|| self.nodes.iter().map(|(_, l)| *l).max())
            .ok_or_else(|| malformed("network has no nodes".into()))?;
        if r < 2 {
            return Err(malformed(format!("need at least 2 layers, got {r}")));
        }

        let mut index: HashMap<String, usize> = HashMap::new();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (name, layer) in &self.nodes {
            if index.insert(name.clone(), nodes.len()).is_some() {
                return Err(malformed(format!("duplicate node id `{name}`")));
            }
            if *layer < 1 || *layer > r {
                return Err(malformed(format!(
                    "node `{name}` has layer {layer} outside [1, {r}]"
                )));
            }
            nodes.push(Node {
                name: name.clone(),
                layer: *layer,
            });
        }

        let pairs = self
            .pairs
            .as_ref()
            .ok_or_else(|| malformed("missing `pairs` declaration".into()))?;
        let look = |name: &String| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownNode(name.clone()))
        };
        let terminals = Terminals {
            s1: look(&pairs[0])?,
            d1: look(&pairs[1])?,
            s2: look(&pairs[2])?,
            d2: look(&pairs[3])?,
        };
        let term_ixs = [terminals.s1, terminals.d1, terminals.s2, terminals.d2];
        for (a, ia) in term_ixs.iter().enumerate() {
            for ib in term_ixs.iter().skip(a + 1) {
                if ia == ib {
                    return Err(malformed("terminals must be four distinct nodes".into()));
                }
            }
        }

        let mut layers = vec![Vec::new(); r];
        for (ix, node) in nodes.iter().enumerate() {
            layers[node.layer - 1].push(ix);
        }
        // First and last layers consist of exactly the terminals.
        let first_ok = layers[0].len() == 2
            && layers[0].contains(&terminals.s1)
            && layers[0].contains(&terminals.s2);
        let last_ok = layers[r - 1].len() == 2
            && layers[r - 1].contains(&terminals.d1)
            && layers[r - 1].contains(&terminals.d2);
        if !first_ok {
            return Err(malformed("layer 1 must be exactly {s1, s2}".into()));
        }
        if !last_ok {
            return Err(malformed(format!("layer {r} must be exactly {{d1, d2}}")));
        }

        let mut rng = SmallRng::seed_from_u64(self.seed.unwrap_or(0));
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut seen = HashMap::new();
        for (tail, head, spec) in &self.edges {
            let t = look(tail)?;
            let h = look(head)?;
            if nodes[h].layer != nodes[t].layer + 1 {
                return Err(malformed(format!(
                    "edge {tail}->{head} must join consecutive layers \
                     (got {} -> {})",
                    nodes[t].layer, nodes[h].layer
                )));
            }
            if seen.insert((t, h), ()).is_some() {
                return Err(malformed(format!("duplicate edge {tail}->{head}")));
            }
            let gain = match spec {
                GainSpec::Fixed(g) => *g,
                GainSpec::Random => generic_gain(&mut rng),
            };
            if !gain.is_finite() || gain == 0.0 {
                return Err(malformed(format!(
                    "edge {tail}->{head} must carry a finite nonzero gain (got {gain})"
                )));
            }
            edges.push(Edge {
                tail: t,
                head: h,
                gain,
            });
        }

        let mut out_adj = vec![Vec::new(); nodes.len()];
        let mut in_adj = vec![Vec::new(); nodes.len()];
        for (eix, e) in edges.iter().enumerate() {
            out_adj[e.tail].push(eix);
            in_adj[e.head].push(eix);
        }
        for list in &mut out_adj {
            list.sort_by_key(|&e| edges[e].head);
        }
        for list in &mut in_adj {
            list.sort_by_key(|&e| edges[e].tail);
        }

        Ok(LayeredNetwork {
            nodes,
            layers,
            edges,
            out_adj,
            in_adj,
            terminals,
        })
    }
}

// ---------------------------------------------------------------------------
// Accessors
// ---------------------------------------------------------------------------

impl LayeredNetwork {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of layers r.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn node(&self, ix: usize) -> &Node {
        &self.nodes[ix]
    }

    pub fn name(&self, ix: usize) -> &str {
        &self.nodes[ix].name
    }

    /// Layer index ℓ(v), 1-based.
    pub fn layer_of(&self, ix: usize) -> usize {
        self.nodes[ix].layer
    }

    /// Node indices of the given 1-based layer, ascending.
    pub fn layer(&self, j: usize) -> &[usize] {
        &self.layers[j - 1]
    }

    /// Look a node up by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Look a node up by name, erroring on misses.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn terminals(&self) -> Terminals {
        self.terminals
    }

    /// All node indices as a set.
    pub fn full_set(&self) -> NodeSet {
        NodeSet::full(self.nodes.len())
    }

    /// Out-neighbors of `v` within `mask`, ascending.
    pub fn out_neighbors<'a>(
        &'a self,
        mask: &'a NodeSet,
        v: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        self.out_adj[v]
            .iter()
            .map(|&e| self.edges[e].head)
            .filter(move |&h| mask.contains(h))
    }

    /// In-neighbors of `v` within `mask`, ascending. These are the input
    /// nodes feeding `v`.
    pub fn in_neighbors<'a>(
        &'a self,
        mask: &'a NodeSet,
        v: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        self.in_adj[v]
            .iter()
            .map(|&e| self.edges[e].tail)
            .filter(move |&t| mask.contains(t))
    }

    /// Gain of the stored edge u→v, if present.
    pub fn gain(&self, u: usize, v: usize) -> Option<f64> {
        self.out_adj[u]
            .iter()
            .map(|&e| &self.edges[e])
            .find(|e| e.head == v)
            .map(|e| e.gain)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.gain(u, v).is_some()
    }

    /// Comma-joined node names, the standard witness rendering.
    pub fn render_nodes(&self, ixs: &[usize]) -> String {
        ixs.iter()
            .map(|&ix| self.name(ix).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Product of layer widths: an upper bound on the number of paths
    /// between any two nodes, hence a completeness threshold for caps.
    pub fn layered_path_bound(&self) -> u128 {
        self.layers
            .iter()
            .map(|l| l.len().max(1) as u128)
            .fold(1u128, |acc, w| acc.saturating_mul(w))
    }
}

// ---------------------------------------------------------------------------
// Reachability
// ---------------------------------------------------------------------------

impl LayeredNetwork {
    /// Forward reachability closure of `from` within `mask` (includes `from`
    /// when it is in `mask`).
    pub fn reach_set_in(&self, mask: &NodeSet, from: usize) -> NodeSet {
        let mut seen = NodeSet::EMPTY;
        if !mask.contains(from) {
            return seen;
        }
        let mut stack = vec![from];
        seen.insert(from);
        while let Some(v) = stack.pop() {
            for h in self.out_neighbors(mask, v) {
                if !seen.contains(h) {
                    seen.insert(h);
                    stack.push(h);
                }
            }
        }
        seen
    }

    /// Backward reachability closure of `to` within `mask`.
    pub fn coreach_set_in(&self, mask: &NodeSet, to: usize) -> NodeSet {
        let mut seen = NodeSet::EMPTY;
        if !mask.contains(to) {
            return seen;
        }
        let mut stack = vec![to];
        seen.insert(to);
        while let Some(v) = stack.pop() {
            for t in self.in_neighbors(mask, v) {
                if !seen.contains(t) {
                    seen.insert(t);
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// True iff a directed path u⇝v exists within `mask`; every node reaches
    /// itself.
    pub fn reachable_in(&self, mask: &NodeSet, u: usize, v: usize) -> bool {
        self.reach_set_in(mask, u).contains(v)
    }

    /// True iff a directed path u⇝v exists in the full network.
    pub fn reachable(&self, u: usize, v: usize) -> bool {
        self.reachable_in(&self.full_set(), u, v)
    }

    /// True iff u⇝v survives the removal of the nodes in `removed`.
    /// Removing an endpoint disconnects it by convention.
    pub fn reachable_without(&self, removed: &NodeSet, u: usize, v: usize) -> bool {
        self.reachable_in(&self.full_set().minus(removed), u, v)
    }
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

/// A directed path: consecutive stored edges, strictly increasing layers.
///
/// A single node is a valid (zero-length) path.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<usize>,
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Path{:?}", self.nodes)
    }
}

impl Path {
    /// Build a path, checking that every hop is a stored edge. Strictly
    /// increasing layers follow from the layering of edges.
    pub fn new(net: &LayeredNetwork, nodes: Vec<usize>) -> Result<Path> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("empty path".into()));
        }
        for w in nodes.windows(2) {
            if !net.has_edge(w[0], w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "no edge {} -> {}",
                    net.name(w[0]),
                    net.name(w[1])
                )));
            }
        }
        Ok(Path { nodes })
    }

    /// Internal constructor for node sequences already known to be valid.
    pub(crate) fn from_valid(nodes: Vec<usize>) -> Path {
        Path { nodes }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn first(&self) -> usize {
        self.nodes[0]
    }

    pub fn last(&self) -> usize {
        *self.nodes.last().unwrap()
    }

    /// Number of nodes (not hops).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, ix: usize) -> bool {
        self.nodes.contains(&ix)
    }

    pub fn node_set(&self) -> NodeSet {
        NodeSet::from_iter(self.nodes.iter().copied())
    }

    /// True iff the two paths share no node.
    pub fn disjoint(&self, other: &Path) -> bool {
        self.node_set().is_disjoint_from(&other.node_set())
    }

    /// The sub-path from `from` to `to`; both must lie on the path in order.
    pub fn slice(&self, from: usize, to: usize) -> Result<Path> {
        let a = self
            .nodes
            .iter()
            .position(|&n| n == from)
            .ok_or_else(|| Error::InvalidArgument("slice start not on path".into()))?;
        let b = self
            .nodes
            .iter()
            .position(|&n| n == to)
            .ok_or_else(|| Error::InvalidArgument("slice end not on path".into()))?;
        if a > b {
            return Err(Error::InvalidArgument(
                "slice bounds out of path order".into(),
            ));
        }
        Ok(Path {
            nodes: self.nodes[a..=b].to_vec(),
        })
    }

    /// Concatenate `self ⊕ other`; the last node of `self` must equal the
    /// first node of `other`.
    pub fn concat(&self, other: &Path) -> Result<Path> {
        if self.last() != other.first() {
            return Err(Error::InvalidArgument(
                "concatenation endpoints mismatch".into(),
            ));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes[1..]);
        Ok(Path { nodes })
    }

    /// Comma-joined node names.
    pub fn display(&self, net: &LayeredNetwork) -> String {
        net.render_nodes(&self.nodes)
    }
}

impl LayeredNetwork {
    /// Enumerate directed paths u⇝v inside `mask` in lexicographic node
    /// order, stopping after `limit` paths. Pass a limit at or above
    /// [`LayeredNetwork::layered_path_bound`] for completeness.
    pub fn enumerate_paths(
        &self,
        mask: &NodeSet,
        u: usize,
        v: usize,
        limit: usize,
    ) -> Vec<Path> {
        let mut out = Vec::new();
        if !mask.contains(u) || !mask.contains(v) {
            return out;
        }
        // Only walk nodes that can still reach v.
        let useful = self.coreach_set_in(mask, v);
        if !useful.contains(u) {
            return out;
        }
        let mut stack = vec![u];
        self.enumerate_paths_rec(&useful, v, limit, &mut stack, &mut out);
        out
    }

    fn enumerate_paths_rec(
        &self,
        useful: &NodeSet,
        v: usize,
        limit: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Path>,
    ) {
        if out.len() >= limit {
            return;
        }
        let cur = *stack.last().unwrap();
        if cur == v {
            out.push(Path::from_valid(stack.clone()));
            return;
        }
        let next: Vec<usize> = self.out_neighbors(useful, cur).collect();
        for h in next {
            stack.push(h);
            self.enumerate_paths_rec(useful, v, limit, stack, out);
            stack.pop();
            if out.len() >= limit {
                return;
            }
        }
    }

    /// One (lexicographically least) path u⇝v inside `mask`.
    pub fn some_path(&self, mask: &NodeSet, u: usize, v: usize) -> Option<Path> {
        self.enumerate_paths(mask, u, v, 1).into_iter().next()
    }
}

// ---------------------------------------------------------------------------
// Vertex-disjoint path pairs
// ---------------------------------------------------------------------------

/// State of the synchronized two-path walk: positions of both paths, where
/// `None` means the path has not started or has already ended.
type PairState = (Option<usize>, Option<usize>);

impl LayeredNetwork {
    /// Find vertex-disjoint paths a⇝c and b⇝d (ordered pairing) inside
    /// `mask`.
    ///
    /// Both walks advance one layer per step in lockstep over the union of
    /// their layer spans, so two paths collide only when they occupy the
    /// same node in the same layer; the breadth-first product walk below is
    /// exact for ordered pairings, unlike flow value alone.
    pub fn find_disjoint_pair_in(
        &self,
        mask: &NodeSet,
        a: usize,
        c: usize,
        b: usize,
        d: usize,
    ) -> Option<(Path, Path)> {
        let mut found = None;
        self.for_each_disjoint_pair_in(mask, a, c, b, d, 1, &mut |p, q| {
            found = Some((p.clone(), q.clone()));
            false
        });
        found
    }

    /// Ordered disjoint pair over the full node set.
    pub fn find_disjoint_pair(&self, a: usize, c: usize, b: usize, d: usize) -> Option<(Path, Path)> {
        self.find_disjoint_pair_in(&self.full_set(), a, c, b, d)
    }

    /// Try the ordered pairing (a⇝c, b⇝d) first and the swapped pairing
    /// (a⇝d, b⇝c) second; the flag reports whether the result is swapped.
    pub fn find_disjoint_pair_either(
        &self,
        mask: &NodeSet,
        srcs: (usize, usize),
        dsts: (usize, usize),
    ) -> Option<(Path, Path, bool)> {
        let (a, b) = srcs;
        let (c, d) = dsts;
        if let Some((p, q)) = self.find_disjoint_pair_in(mask, a, c, b, d) {
            return Some((p, q, false));
        }
        self.find_disjoint_pair_in(mask, a, d, b, c)
            .map(|(p, q)| (p, q, true))
    }

    /// Enumerate ordered vertex-disjoint pairs (a⇝c, b⇝d) inside `mask` in
    /// lexicographic order, invoking `visit` for each; `visit` returns
    /// `false` to stop. `limit` caps the number of visited pairs. Returns
    /// `true` iff the enumeration ran to completion (no cap, no early stop).
    pub fn for_each_disjoint_pair_in(
        &self,
        mask: &NodeSet,
        a: usize,
        c: usize,
        b: usize,
        d: usize,
        limit: usize,
        visit: &mut dyn FnMut(&Path, &Path) -> bool,
    ) -> bool {
        for &v in &[a, b, c, d] {
            if !mask.contains(v) {
                return true;
            }
        }
        if a == b || c == d {
            return true; // endpoints shared: no disjoint pair can exist
        }
        // Prune to nodes that can still reach the respective targets.
        let useful1 = self
            .coreach_set_in(mask, c)
            .intersect(&self.reach_set_in(mask, a));
        let useful2 = self
            .coreach_set_in(mask, d)
            .intersect(&self.reach_set_in(mask, b));
        if !useful1.contains(a) || !useful2.contains(b) {
            return true;
        }
        let lo = self.layer_of(a).min(self.layer_of(b));
        let hi = self.layer_of(c).max(self.layer_of(d));
        let mut count = 0usize;
        let mut p1 = Vec::new();
        let mut p2 = Vec::new();
        self.pair_dfs(
            (
                (self.layer_of(a) == lo).then_some(a),
                (self.layer_of(b) == lo).then_some(b),
            ),
            lo,
            hi,
            (a, c, &useful1),
            (b, d, &useful2),
            &mut p1,
            &mut p2,
            &mut count,
            limit,
            visit,
        )
        .is_some()
    }

    /// Depth-first walk over the product of the two path spaces; returns
    /// `None` when the walk was cut short (cap or visitor stop).
    #[allow(clippy::too_many_arguments)]
    fn pair_dfs(
        &self,
        state: PairState,
        t: usize,
        hi: usize,
        walk1: (usize, usize, &NodeSet),
        walk2: (usize, usize, &NodeSet),
        p1: &mut Vec<usize>,
        p2: &mut Vec<usize>,
        count: &mut usize,
        limit: usize,
        visit: &mut dyn FnMut(&Path, &Path) -> bool,
    ) -> Option<()> {
        let (x, y) = state;
        if let (Some(x), Some(y)) = (x, y) {
            if x == y {
                return Some(());
            }
        }
        if let Some(x) = x {
            p1.push(x);
        }
        if let Some(y) = y {
            p2.push(y);
        }
        let done = t == hi;
        let ok = if done {
            // Both walks must have arrived.
            debug_assert!(p1.last() == Some(&walk1.1) || p1.is_empty());
            if p1.last() == Some(&walk1.1) && p2.last() == Some(&walk2.1) {
                *count += 1;
                let keep = visit(&Path::from_valid(p1.clone()), &Path::from_valid(p2.clone()));
                if !keep || *count >= limit {
                    None
                } else {
                    Some(())
                }
            } else {
                Some(())
            }
        } else {
            self.pair_dfs_step(state, t, hi, walk1, walk2, p1, p2, count, limit, visit)
        };
        if x.is_some() {
            p1.pop();
        }
        if y.is_some() {
            p2.pop();
        }
        ok
    }

    #[allow(clippy::too_many_arguments)]
    fn pair_dfs_step(
        &self,
        state: PairState,
        t: usize,
        hi: usize,
        walk1: (usize, usize, &NodeSet),
        walk2: (usize, usize, &NodeSet),
        p1: &mut Vec<usize>,
        p2: &mut Vec<usize>,
        count: &mut usize,
        limit: usize,
        visit: &mut dyn FnMut(&Path, &Path) -> bool,
    ) -> Option<()> {
        let (x, y) = state;
        let (a1, c1, useful1) = walk1;
        let (a2, c2, useful2) = walk2;
        // Successor positions of each walk at layer t+1.
        let next1: Vec<Option<usize>> = match x {
            Some(x) if x == c1 => vec![None], // finished
            Some(x) => self.out_neighbors(useful1, x).map(Some).collect(),
            None if self.layer_of(a1) == t + 1 => vec![Some(a1)],
            None => vec![None],
        };
        let next2: Vec<Option<usize>> = match y {
            Some(y) if y == c2 => vec![None],
            Some(y) => self.out_neighbors(useful2, y).map(Some).collect(),
            None if self.layer_of(a2) == t + 1 => vec![Some(a2)],
            None => vec![None],
        };
        for &nx in &next1 {
            if x.is_some() && nx.is_none() && x != Some(c1) {
                continue; // dead end for walk 1
            }
            for &ny in &next2 {
                if y.is_some() && ny.is_none() && y != Some(c2) {
                    continue;
                }
                self.pair_dfs(
                    (nx, ny),
                    t + 1,
                    hi,
                    walk1,
                    walk2,
                    p1,
                    p2,
                    count,
                    limit,
                    visit,
                )?;
            }
        }
        Some(())
    }
}

// ---------------------------------------------------------------------------
// Node-split max flow
// ---------------------------------------------------------------------------

impl LayeredNetwork {
    /// Maximum number of vertex-disjoint paths from `sources` to `sinks`
    /// inside `mask` (endpoints shared between the two sides not supported).
    ///
    /// Classic node-splitting: each node v becomes v_in → v_out with unit
    /// capacity, each edge gets unit capacity, and a unit-capacity
    /// super-source/sink feeds the endpoint sets.
    pub fn vertex_disjoint_flow(&self, mask: &NodeSet, sources: &[usize], sinks: &[usize]) -> usize {
        let n = self.nodes.len();
        // Vertices: 2n split nodes + super source (2n) + super sink (2n+1).
        let size = 2 * n + 2;
        let sup_s = 2 * n;
        let sup_t = 2 * n + 1;
        let mut graph: Vec<Vec<(usize, usize)>> = vec![Vec::new(); size]; // (to, cap ix)
        let mut caps: Vec<i32> = Vec::new();
        let add = |graph: &mut Vec<Vec<(usize, usize)>>, caps: &mut Vec<i32>, u: usize, v: usize| {
            graph[u].push((v, caps.len()));
            caps.push(1);
            graph[v].push((u, caps.len()));
            caps.push(0);
        };
        for v in mask.iter().filter(|&v| v < n) {
            add(&mut graph, &mut caps, 2 * v, 2 * v + 1);
        }
        for e in &self.edges {
            if mask.contains(e.tail) && mask.contains(e.head) {
                add(&mut graph, &mut caps, 2 * e.tail + 1, 2 * e.head);
            }
        }
        for &s in sources {
            if mask.contains(s) {
                add(&mut graph, &mut caps, sup_s, 2 * s);
            }
        }
        for &t in sinks {
            if mask.contains(t) {
                add(&mut graph, &mut caps, 2 * t + 1, sup_t);
            }
        }

        // Ford-Fulkerson; each augmentation adds one unit.
        let mut flow = 0usize;
        loop {
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; size];
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(sup_s);
            parent[sup_s] = Some((sup_s, usize::MAX));
            while let Some(u) = queue.pop_front() {
                for &(v, ce) in &graph[u] {
                    if parent[v].is_none() && caps[ce] > 0 {
                        parent[v] = Some((u, ce));
                        queue.push_back(v);
                    }
                }
            }
            if parent[sup_t].is_none() {
                return flow;
            }
            let mut v = sup_t;
            while v != sup_s {
                let (u, ce) = parent[v].unwrap();
                caps[ce] -= 1;
                caps[ce ^ 1] += 1;
                v = u;
            }
            flow += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Validation and induced subnetworks
// ---------------------------------------------------------------------------

/// Outcome of validating a network.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Indices (in the validated network) of nodes lying on no
    /// source-to-destination path; they carry no traffic and are pruned.
    pub off_path: Vec<usize>,
    /// The network with off-path nodes removed.
    pub pruned: LayeredNetwork,
    /// Whether s1 ⇝ d1 holds.
    pub pair1_connected: bool,
    /// Whether s2 ⇝ d2 holds.
    pub pair2_connected: bool,
    /// Human-readable notes (one per finding).
    pub warnings: Vec<String>,
}

impl ValidationReport {
    /// True iff nothing was pruned and both unicast pairs are connected.
    pub fn is_clean(&self) -> bool {
        self.off_path.is_empty() && self.pair1_connected && self.pair2_connected
    }
}

impl LayeredNetwork {
    /// Check the network-level invariants: reports (and prunes) nodes on no
    /// s_i ⇝ d_j path and missing in-pair connectivity. Structural defects
    /// (bad layering, duplicate ids) are hard errors at construction and
    /// cannot occur here.
    pub fn validate(&self) -> ValidationReport {
        let full = self.full_set();
        let t = self.terminals;
        let from_src = self
            .reach_set_in(&full, t.s1)
            .union(&self.reach_set_in(&full, t.s2));
        let to_dst = self
            .coreach_set_in(&full, t.d1)
            .union(&self.coreach_set_in(&full, t.d2));
        let mut on_path = from_src.intersect(&to_dst);
        // Terminals stay regardless.
        for ix in [t.s1, t.d1, t.s2, t.d2] {
            on_path.insert(ix);
        }
        let off_path: Vec<usize> = (0..self.len()).filter(|&v| !on_path.contains(v)).collect();
        let mut warnings: Vec<String> = off_path
            .iter()
            .map(|&v| {
                format!(
                    "node `{}` lies on no source-to-destination path; pruned",
                    self.name(v)
                )
            })
            .collect();
        let pruned = self
            .induced_subnetwork(&on_path)
            .expect("on-path set always contains the terminals");
        let pair1_connected = self.reachable(t.s1, t.d1);
        let pair2_connected = self.reachable(t.s2, t.d2);
        if !pair1_connected {
            warnings.push("s1 cannot reach d1".into());
        }
        if !pair2_connected {
            warnings.push("s2 cannot reach d2".into());
        }
        ValidationReport {
            off_path,
            pruned,
            pair1_connected,
            pair2_connected,
            warnings,
        }
    }

    /// The subnetwork induced by `keep` (same pairs, edges restricted to
    /// `keep` × `keep`), together with the map from new to old indices.
    pub fn induced_with_map(&self, keep: &NodeSet) -> Result<(LayeredNetwork, Vec<usize>)> {
        let t = self.terminals;
        for ix in [t.s1, t.d1, t.s2, t.d2] {
            if !keep.contains(ix) {
                return Err(Error::InvalidArgument(format!(
                    "induced node set must contain terminal `{}`",
                    self.name(ix)
                )));
            }
        }
        let old_ixs: Vec<usize> = (0..self.len()).filter(|&v| keep.contains(v)).collect();
        let mut builder = NetworkBuilder::new();
        builder.layers(self.num_layers());
        for &ix in &old_ixs {
            builder.node(self.name(ix), self.layer_of(ix));
        }
        for e in &self.edges {
            if keep.contains(e.tail) && keep.contains(e.head) {
                builder.edge(self.name(e.tail), self.name(e.head), e.gain);
            }
        }
        builder.pairs(
            self.name(t.s1),
            self.name(t.d1),
            self.name(t.s2),
            self.name(t.d2),
        );
        Ok((builder.build()?, old_ixs))
    }

    /// The subnetwork induced by `keep`; see [`LayeredNetwork::induced_with_map`].
    pub fn induced_subnetwork(&self, keep: &NodeSet) -> Result<LayeredNetwork> {
        self.induced_with_map(keep).map(|(net, _)| net)
    }
}

// ---------------------------------------------------------------------------
// Extension (layer doubling)
// ---------------------------------------------------------------------------

/// A layer-doubled network plus provenance back to the source network.
#[derive(Debug, Clone)]
pub struct ExtendedNetwork {
    pub net: LayeredNetwork,
    /// Map from extended node index to the originating node index.
    pub origin: Vec<usize>,
}

impl LayeredNetwork {
    /// Build the 2r-layer extension: every layer V_j is followed by a copy
    /// layer V_j′, each node v links to its copy v′ with gain 1, and each
    /// original edge (u, w) is re-hung as (u′, w). Edge-disjoint path sets in
    /// the extension correspond to vertex-disjoint path sets here.
    pub fn extend_network(&self) -> ExtendedNetwork {
        let mut builder = NetworkBuilder::new();
        let r = self.num_layers();
        builder.layers(2 * r);
        let mut origin = Vec::new();
        let copy_name = |name: &str| format!("{name}'");
        // Interleave originals (layer 2j-1) and copies (layer 2j), keeping
        // the source index order so provenance is easy to follow.
        for (ix, node) in self.nodes.iter().enumerate() {
            builder.node(&node.name, 2 * node.layer - 1);
            origin.push(ix);
        }
        for (ix, node) in self.nodes.iter().enumerate() {
            builder.node(&copy_name(&node.name), 2 * node.layer);
            origin.push(ix);
        }
        for node in &self.nodes {
            builder.edge(&node.name, &copy_name(&node.name), 1.0);
        }
        for e in &self.edges {
            builder.edge(
                &copy_name(self.name(e.tail)),
                self.name(e.head),
                e.gain,
            );
        }
        let t = self.terminals;
        builder.pairs(
            self.name(t.s1),
            &copy_name(self.name(t.d1)),
            self.name(t.s2),
            &copy_name(self.name(t.d2)),
        );
        let net = builder
            .build()
            .expect("extension of a valid network is valid");
        ExtendedNetwork { net, origin }
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

impl LayeredNetwork {
    /// Parse the line-oriented network text format:
    ///
    /// ```text
    /// layers <r>
    /// node <id> <layer>
    /// edge <tail> <head> <gain|rand>
    /// pairs <s1> <d1> <s2> <d2>
    /// seed <u64>        # optional, governs `rand` gains
    /// ```
    ///
    /// `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<LayeredNetwork> {
        let mut builder = NetworkBuilder::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let tok: Vec<&str> = body.split_whitespace().collect();
            let parse_err = |msg: String| Error::Parse { line, msg };
            match tok[0] {
                "layers" => {
                    if tok.len() != 2 {
                        return Err(parse_err("expected `layers <r>`".into()));
                    }
                    let r: usize = tok[1]
                        .parse()
                        .map_err(|_| parse_err(format!("bad layer count `{}`", tok[1])))?;
                    builder.layers(r);
                }
                "node" => {
                    if tok.len() != 3 {
                        return Err(parse_err("expected `node <id> <layer>`".into()));
                    }
                    let layer: usize = tok[2]
                        .parse()
                        .map_err(|_| parse_err(format!("bad layer `{}`", tok[2])))?;
                    builder.node(tok[1], layer);
                }
                "edge" => {
                    if tok.len() != 4 {
                        return Err(parse_err("expected `edge <tail> <head> <gain|rand>`".into()));
                    }
                    if tok[3] == "rand" {
                        builder.edge_rand(tok[1], tok[2]);
                    } else {
                        let gain: f64 = tok[3]
                            .parse()
                            .map_err(|_| parse_err(format!("bad gain `{}`", tok[3])))?;
                        builder.edge(tok[1], tok[2], gain);
                    }
                }
                "pairs" => {
                    if tok.len() != 5 {
                        return Err(parse_err("expected `pairs <s1> <d1> <s2> <d2>`".into()));
                    }
                    builder.pairs(tok[1], tok[2], tok[3], tok[4]);
                }
                "seed" => {
                    if tok.len() != 2 {
                        return Err(parse_err("expected `seed <u64>`".into()));
                    }
                    let seed: u64 = tok[1]
                        .parse()
                        .map_err(|_| parse_err(format!("bad seed `{}`", tok[1])))?;
                    builder.seed(seed);
                }
                other => {
                    return Err(parse_err(format!("unknown directive `{other}`")));
                }
            }
        }
        builder.build()
    }

    /// Serialize to the text format with explicit gains. `{:?}` prints the
    /// shortest decimal that round-trips, so parse(serialize(n)) == n.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("layers {}\n", self.num_layers()));
        for node in &self.nodes {
            out.push_str(&format!("node {} {}\n", node.name, node.layer));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "edge {} {} {:?}\n",
                self.name(e.tail),
                self.name(e.head),
                e.gain
            ));
        }
        let t = self.terminals;
        out.push_str(&format!(
            "pairs {} {} {} {}\n",
            self.name(t.s1),
            self.name(t.d1),
            self.name(t.s2),
            self.name(t.d2)
        ));
        out
    }

    /// Same topology with freshly drawn generic gains (seeded).
    pub fn with_generic_gains(&self, seed: u64) -> LayeredNetwork {
        let mut rng = SmallRng::seed_from_u64(seed);
        let mut net = self.clone();
        for e in &mut net.edges {
            e.gain = generic_gain(&mut rng);
        }
        net
    }

    /// Same topology with the gain of edge (u, v) replaced.
    pub fn with_gain(&self, u: usize, v: usize, gain: f64) -> Result<LayeredNetwork> {
        assert!(gain.is_finite() && gain != 0.0, "gains must be finite nonzero");
        let mut net = self.clone();
        let edge = net
            .edges
            .iter_mut()
            .find(|e| e.tail == u && e.head == v)
            .ok_or_else(|| Error::InvalidArgument("no such edge".into()))?;
        edge.gain = gain;
        Ok(net)
    }
}

impl PartialEq for LayeredNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.terminals == other.terminals
            && self.layers == other.layers
    }
}

// ---------------------------------------------------------------------------
// Random generation
// ---------------------------------------------------------------------------

/// Parameters for seeded random network generation.
#[derive(Debug, Clone)]
pub struct RandomNetConfig {
    /// Inclusive range of layer counts.
    pub min_layers: usize,
    pub max_layers: usize,
    /// Maximum width of the interior layers (≥ 1).
    pub max_width: usize,
    /// Inclusive range from which the per-network edge density is drawn.
    pub density_lo: f64,
    pub density_hi: f64,
    /// Re-draw until both unicast pairs are connected (best effort).
    pub require_connected: bool,
}

impl Default for RandomNetConfig {
    fn default() -> Self {
        RandomNetConfig {
            min_layers: 3,
            max_layers: 6,
            max_width: 4,
            density_lo: 0.3,
            density_hi: 0.85,
            require_connected: true,
        }
    }
}

/// Generate a seeded random layered network with generic gains. Off-path
/// nodes are pruned; when connectivity is required the draw is retried a
/// bounded number of times and the last attempt is returned regardless.
pub fn random_network(seed: u64, cfg: &RandomNetConfig) -> LayeredNetwork {
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut last = None;
    for _ in 0..64 {
        let net = random_network_once(&mut rng, cfg);
        let report = net.validate();
        let net = report.pruned;
        if !cfg.require_connected || (report.pair1_connected && report.pair2_connected) {
            return net;
        }
        last = Some(net);
    }
    last.expect("at least one attempt was made")
}

fn random_network_once<R: Rng>(rng: &mut R, cfg: &RandomNetConfig) -> LayeredNetwork {
    let r = rng.random_range(cfg.min_layers..=cfg.max_layers);
    let density: f64 = rng.random_range(cfg.density_lo..=cfg.density_hi);
    let mut builder = NetworkBuilder::new();
    builder.layers(r);
    builder.node("s1", 1).node("s2", 1);
    let mut names: Vec<Vec<String>> = vec![vec!["s1".into(), "s2".into()]];
    let mut counter = 0usize;
    for j in 2..r {
        let width = rng.random_range(1..=cfg.max_width.max(1));
        let mut layer = Vec::new();
        for _ in 0..width {
            counter += 1;
            let name = format!("v{counter}");
            builder.node(&name, j);
            layer.push(name);
        }
        names.push(layer);
    }
    builder.node("d1", r).node("d2", r);
    names.push(vec!["d1".into(), "d2".into()]);
    for j in 0..r - 1 {
        let (left, right) = (names[j].clone(), names[j + 1].clone());
        for t in &left {
            for h in &right {
                if rng.random::<f64>() < density {
                    builder.edge(t, h, generic_gain(rng));
                }
            }
        }
    }
    builder.pairs("s1", "d1", "s2", "d2");
    builder
        .build()
        .expect("generated declarations are structurally valid")
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parallel_fixture_validates_clean() {
        let net = fixtures::parallel();
        let report = net.validate();
        assert!(report.is_clean());
        assert_eq!(net.num_layers(), 3);
        assert_eq!(net.len(), 6);
    }

    #[test]
    fn off_path_node_is_pruned() {
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("a", 2)
            .node("b", 2)
            .node("x", 2) // no edges at all
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "a", 1.0)
            .edge("a", "d1", 1.0)
            .edge("s2", "b", 1.0)
            .edge("b", "d2", 1.0)
            .pairs("s1", "d1", "s2", "d2");
        let net = b.build().unwrap();
        let report = net.validate();
        assert_eq!(report.off_path.len(), 1);
        assert_eq!(net.name(report.off_path[0]), "x");
        assert_eq!(report.pruned.len(), 6);
        assert!(report.pruned.validate().is_clean());
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn zero_gain_edge_rejected() {
        let mut b = NetworkBuilder::new();
        b.layers(2)
            .node("s1", 1)
            .node("s2", 1)
            .node("d1", 2)
            .node("d2", 2)
            .edge("s1", "d1", 0.0)
            .pairs("s1", "d1", "s2", "d2");
        assert!(matches!(b.build(), Err(Error::Malformed(_))));
    }

    #[test]
    fn non_consecutive_edge_rejected() {
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("a", 2)
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "d1", 1.0)
            .pairs("s1", "d1", "s2", "d2");
        assert!(matches!(b.build(), Err(Error::Malformed(_))));
    }

    #[test]
    fn reachability_on_parallel() {
        let net = fixtures::parallel();
        let t = net.terminals();
        assert!(net.reachable(t.s1, t.d1));
        assert!(!net.reachable(t.s1, t.d2));
        assert!(net.reachable(t.s1, t.s1)); // every node reaches itself
    }

    #[test]
    fn reachability_on_full_relay_pair() {
        let net = fixtures::two_relay_full();
        let t = net.terminals();
        assert!(net.reachable(t.s1, t.d2));
        assert!(net.reachable(t.s2, t.d1));
    }

    #[test]
    fn removal_convention_disconnects_endpoint() {
        let net = fixtures::bottleneck();
        let t = net.terminals();
        let m = net.require("m").unwrap();
        assert!(!net.reachable_without(&NodeSet::singleton(m), t.s1, t.d1));
        assert!(!net.reachable_without(&NodeSet::singleton(t.d1), t.s1, t.d1));
    }

    #[test]
    fn path_slice_and_concat() {
        let net = fixtures::parallel();
        let s1 = net.require("s1").unwrap();
        let a = net.require("a").unwrap();
        let d1 = net.require("d1").unwrap();
        let p = Path::new(&net, vec![s1, a, d1]).unwrap();
        let tail = p.slice(a, d1).unwrap();
        assert_eq!(tail.nodes(), &[a, d1]);
        let head = Path::new(&net, vec![s1, a]).unwrap();
        let glued = head.concat(&tail).unwrap();
        assert_eq!(glued.nodes(), p.nodes());
        // Mismatched endpoints refuse to concatenate.
        assert!(tail.concat(&head).is_err());
        // Out-of-order slice bounds refuse.
        assert!(p.slice(d1, a).is_err());
    }

    #[test]
    fn path_requires_stored_edges() {
        let net = fixtures::parallel();
        let s1 = net.require("s1").unwrap();
        let b = net.require("b").unwrap();
        assert!(Path::new(&net, vec![s1, b]).is_err());
    }

    #[test]
    fn enumerate_paths_complete_on_full_relay_pair() {
        let net = fixtures::two_relay_full();
        let t = net.terminals();
        let paths = net.enumerate_paths(&net.full_set(), t.s1, t.d1, 100);
        assert_eq!(paths.len(), 2); // via u1 and via u2
        let capped = net.enumerate_paths(&net.full_set(), t.s1, t.d1, 1);
        assert_eq!(capped.len(), 1);
    }

    #[test]
    fn disjoint_pair_found_on_parallel() {
        let net = fixtures::parallel();
        let t = net.terminals();
        let (p, q) = net
            .find_disjoint_pair(t.s1, t.d1, t.s2, t.d2)
            .expect("parallel chains are disjoint");
        assert!(p.disjoint(&q));
        assert_eq!(p.display(&net), "s1,a,d1");
        assert_eq!(q.display(&net), "s2,b,d2");
    }

    #[test]
    fn disjoint_pair_absent_on_bottleneck() {
        let net = fixtures::bottleneck();
        let t = net.terminals();
        assert!(net.find_disjoint_pair(t.s1, t.d1, t.s2, t.d2).is_none());
        assert_eq!(
            net.vertex_disjoint_flow(&net.full_set(), &[t.s1, t.s2], &[t.d1, t.d2]),
            1
        );
    }

    #[test]
    fn ordered_pairing_is_exact_not_flow_based() {
        // Both orderings exist as flows, but a fixed max-flow decomposition
        // could pair the endpoints the wrong way; the ordered search must
        // still find the requested pairing.
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("x", 2)
            .node("y", 2)
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "x", 1.0)
            .edge("s2", "y", 1.0)
            .edge("x", "d1", 1.0)
            .edge("x", "d2", 1.0)
            .edge("y", "d1", 1.0)
            .edge("y", "d2", 1.0)
            .pairs("s1", "d1", "s2", "d2");
        let net = b.build().unwrap();
        let t = net.terminals();
        let (p, q) = net.find_disjoint_pair(t.s1, t.d1, t.s2, t.d2).unwrap();
        assert_eq!(p.display(&net), "s1,x,d1");
        assert_eq!(q.display(&net), "s2,y,d2");
        // Swapped-only topology: ordered pairing absent, either-pairing finds it.
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("x", 2)
            .node("y", 2)
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "x", 1.0)
            .edge("s2", "y", 1.0)
            .edge("x", "d2", 1.0)
            .edge("y", "d1", 1.0)
            .pairs("s1", "d1", "s2", "d2");
        let net = b.build().unwrap();
        let t = net.terminals();
        assert!(net.find_disjoint_pair(t.s1, t.d1, t.s2, t.d2).is_none());
        let (_, _, swapped) = net
            .find_disjoint_pair_either(&net.full_set(), (t.s1, t.s2), (t.d1, t.d2))
            .unwrap();
        assert!(swapped);
    }

    #[test]
    fn pair_enumeration_matches_product_of_choices() {
        let net = fixtures::two_relay_full();
        let t = net.terminals();
        let mut pairs = Vec::new();
        let complete = net.for_each_disjoint_pair_in(
            &net.full_set(),
            t.s1,
            t.d1,
            t.s2,
            t.d2,
            1000,
            &mut |p, q| {
                pairs.push((p.clone(), q.clone()));
                true
            },
        );
        assert!(complete);
        // Two relays, each path picks one, they must differ: 2 ordered pairs.
        assert_eq!(pairs.len(), 2);
        for (p, q) in &pairs {
            assert!(p.disjoint(q));
        }
    }

    #[test]
    fn extension_counts_and_cut_edge() {
        let net = fixtures::parallel();
        let ext = net.extend_network();
        assert_eq!(ext.net.num_layers(), 6);
        assert_eq!(ext.net.len(), 12);
        // 6 copy edges + 4 original edges.
        assert_eq!(ext.net.edges().len(), 10);
        assert!(ext.net.validate().is_clean());

        let bottle = fixtures::bottleneck();
        let ext = bottle.extend_network();
        let m = ext.net.require("m").unwrap();
        let mp = ext.net.require("m'").unwrap();
        assert_eq!(ext.origin[m], ext.origin[mp]);
        // m -> m' is a cut edge: dropping m' kills all traffic.
        let t = ext.net.terminals();
        let removed = NodeSet::singleton(mp);
        assert!(!ext.net.reachable_without(&removed, t.s1, t.d1));
        assert!(!ext.net.reachable_without(&removed, t.s2, t.d2));
    }

    #[test]
    fn parse_serialize_round_trip() {
        let text = "# demo\nlayers 3\nnode s1 1\nnode s2 1\nnode a 2\nnode b 2\n\
                    node d1 3\nnode d2 3\nedge s1 a 1.25\nedge a d1 -0.75\n\
                    edge s2 b 0.5\nedge b d2 2.0\npairs s1 d1 s2 d2\n";
        let net = LayeredNetwork::parse(text).unwrap();
        assert_eq!(net.gain(net.require("s1").unwrap(), net.require("a").unwrap()), Some(1.25));
        let again = LayeredNetwork::parse(&net.serialize()).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "layers 3\nnode s1 1\nbogus directive\n";
        match LayeredNetwork::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rand_gains_are_seed_deterministic() {
        let text = "layers 2\nnode s1 1\nnode s2 1\nnode d1 2\nnode d2 2\n\
                    seed 7\nedge s1 d1 rand\nedge s2 d2 rand\npairs s1 d1 s2 d2\n";
        let a = LayeredNetwork::parse(text).unwrap();
        let b = LayeredNetwork::parse(text).unwrap();
        assert_eq!(a, b);
        let g = a
            .gain(a.require("s1").unwrap(), a.require("d1").unwrap())
            .unwrap();
        assert!((GAIN_LO..=GAIN_HI).contains(&g.abs()));
    }

    #[test]
    fn random_networks_are_deterministic_and_valid() {
        let cfg = RandomNetConfig::default();
        for seed in 0..20 {
            let a = random_network(seed, &cfg);
            let b = random_network(seed, &cfg);
            assert_eq!(a, b);
            assert!(a.validate().off_path.is_empty(), "generator must pre-prune");
            assert!(a.num_layers() >= 3 && a.num_layers() <= 6);
        }
    }

    #[test]
    fn flow_value_matches_disjoint_search_small() {
        let cfg = RandomNetConfig::default();
        for seed in 100..140 {
            let net = random_network(seed, &cfg);
            let t = net.terminals();
            let flow = net.vertex_disjoint_flow(&net.full_set(), &[t.s1, t.s2], &[t.d1, t.d2]);
            let either = net
                .find_disjoint_pair_either(&net.full_set(), (t.s1, t.s2), (t.d1, t.d2))
                .is_some();
            assert_eq!(flow >= 2, either, "seed {seed}");
        }
    }
}
