//! Two-mode buffering schemes: three symbols delivered over two slots.
//!
//! The half-integer classifications pin a structure in which one stream can
//! run at full rate only while the other stands back, yet a single relay
//! sits where it can hold a signal from the first slot and deliver it in
//! the second.  Every synthesis here follows that pattern: pick the holding
//! relay, drive the network in a first mode that charges it with a clean
//! copy of one message, then drive a second mode in which it releases the
//! copy while the rest of the network serves a fresh message.
//!
//! Whenever a mode needs interference cancelled inside it, the mode is
//! designed on a scratch network: a copy of the relevant nodes in which the
//! holding relay's onward delivery is replaced by a unit-gain virtual chain
//! to a stand-in terminal.  The one-shot diagonalizers from [`af`] then
//! solve that scratch network, and the resulting scale factors are carried
//! back onto the real nodes.  The chain itself maps to the buffer: scales
//! the solver assigned to chain nodes either collapse into the replay
//! factor (when the chain feeds the holding relay) or are irrelevant (when
//! the chain only rescales the stand-in terminal's own signal) and are
//! dropped.

use crate::classifier::{
    classify_sum_dof, C1Witness, C2Witness, CaseWitness, ManageablePairWitness,
};
use crate::error::{Error, Result};
use crate::netmodel::{LayeredNetwork, NetworkBuilder, NodeSet, Path};

use super::verify::{propagate, verify_scheme};
use super::{
    af, DecodeSpec, ModePrograms, RelayProgram, Scheme, SchemeKind, SymbolSpec, TwoModeVariant,
};

/// Smallest stored-signal coefficient the cancellation scale may divide by.
const STORED_COEFF_FLOOR: f64 = 1e-9;

/// Terminals in role order: (source a, dest a, source b, dest b).
fn role_ends(net: &LayeredNetwork, swapped: bool) -> (usize, usize, usize, usize) {
    let t = net.terminals();
    if swapped {
        (t.s2, t.d2, t.s1, t.d1)
    } else {
        (t.s1, t.d1, t.s2, t.d2)
    }
}

/// Stream numbers (1 or 2) of role a and role b.
fn role_streams(swapped: bool) -> (usize, usize) {
    if swapped {
        (2, 1)
    } else {
        (1, 2)
    }
}

/// Reorder a (role a, role b) degrees-of-freedom pair into stream order.
fn stream_dof(swapped: bool, role_a: f64, role_b: f64) -> (f64, f64) {
    if swapped {
        (role_b, role_a)
    } else {
        (role_a, role_b)
    }
}

/// The node of `path` sitting on `layer`; a route hits every layer it
/// spans exactly once.
fn node_at_layer(net: &LayeredNetwork, path: &Path, layer: usize) -> Result<usize> {
    path.nodes()
        .iter()
        .copied()
        .find(|&v| net.layer_of(v) == layer)
        .ok_or_else(|| Error::invariant("route does not reach the handoff layer"))
}

/// Fresh-node declarations for a unit-gain chain from a real node up to a
/// stand-in terminal on the last layer.  Returns the chain nodes (not
/// including the real one), the chain edges, and the stand-in's name.
fn chain_to_sink(
    net: &LayeredNetwork,
    from: usize,
) -> (Vec<(String, usize)>, Vec<(String, String)>, String) {
    let r = net.num_layers();
    let mut names = vec![net.name(from).to_string()];
    let mut nodes = Vec::new();
    for l in net.layer_of(from) + 1..r {
        let name = format!("~c{l}");
        names.push(name.clone());
        nodes.push((name, l));
    }
    names.push("~t".to_string());
    nodes.push(("~t".to_string(), r));
    let edges = names
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    (nodes, edges, "~t".to_string())
}

/// Fresh-node declarations for a unit-gain chain from a stand-in source on
/// the first layer down into a real node.  Returns the chain nodes, the
/// chain edges, and the stand-in's name.
fn chain_from_feed(
    net: &LayeredNetwork,
    to: usize,
) -> (Vec<(String, usize)>, Vec<(String, String)>, String) {
    let mut names = vec!["~s".to_string()];
    let mut nodes = vec![("~s".to_string(), 1)];
    for l in 2..net.layer_of(to) {
        let name = format!("~c{l}");
        names.push(name.clone());
        nodes.push((name, l));
    }
    names.push(net.name(to).to_string());
    let edges = names
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    (nodes, edges, "~s".to_string())
}

/// Build a scratch network: the chosen real nodes keep their names, layers,
/// gains, and mutual edges — except that `sever_out`'s out-edges are
/// dropped — and the given fresh nodes and unit-gain edges are spliced in.
/// Fresh names start with `~`, which no real node uses, so membership in
/// the real network is decidable from the name alone.
fn scratch_net(
    net: &LayeredNetwork,
    include: &NodeSet,
    sever_out: Option<usize>,
    extra_nodes: &[(String, usize)],
    extra_edges: &[(String, String)],
    pairs: [&str; 4],
) -> Result<LayeredNetwork> {
    let mut b = NetworkBuilder::new();
    b.layers(net.num_layers());
    for v in include.iter() {
        b.node(net.name(v), net.layer_of(v));
    }
    for (name, layer) in extra_nodes {
        b.node(name, *layer);
    }
    for e in net.edges() {
        if include.contains(e.tail) && include.contains(e.head) && Some(e.tail) != sever_out {
            b.edge(net.name(e.tail), net.name(e.head), e.gain);
        }
    }
    for (tail, head) in extra_edges {
        b.edge(tail, head, 1.0);
    }
    b.pairs(pairs[0], pairs[1], pairs[2], pairs[3]);
    b.build()
}

/// Carry a real route into a scratch network by node name.
fn scratch_path(scr: &LayeredNetwork, net: &LayeredNetwork, p: &Path) -> Result<Path> {
    let nodes = p
        .nodes()
        .iter()
        .map(|&v| scr.require(net.name(v)))
        .collect::<Result<Vec<_>>>()?;
    Path::new(scr, nodes)
}

/// Program map with every relay silent.
fn silent_base(net: &LayeredNetwork) -> ModePrograms {
    let t = net.terminals();
    let mut out = ModePrograms::new();
    for v in 0..net.len() {
        if v != t.s1 && v != t.s2 && v != t.d1 && v != t.d2 {
            out.insert(v, RelayProgram::Silent);
        }
    }
    out
}

/// Switch the listed nodes to unit forwarding, skipping terminals.
fn forward_along<I: IntoIterator<Item = usize>>(
    programs: &mut ModePrograms,
    net: &LayeredNetwork,
    nodes: I,
) {
    let t = net.terminals();
    for v in nodes {
        if v != t.s1 && v != t.s2 && v != t.d1 && v != t.d2 {
            programs.insert(v, RelayProgram::ScaleForward(1.0));
        }
    }
}

/// Carry the one-mode program map of a scratch solution back onto the real
/// network: real nodes are matched by name, chain nodes are dropped, and
/// everything the scratch network never saw stays silent.
fn remap_programs(
    scr: &LayeredNetwork,
    solved: &Scheme,
    net: &LayeredNetwork,
) -> Result<ModePrograms> {
    let t = net.terminals();
    let mut out = silent_base(net);
    for (&sv, &prog) in &solved.modes[0] {
        let name = scr.name(sv);
        if name.starts_with('~') {
            continue;
        }
        let rv = net.require(name)?;
        if rv != t.s1 && rv != t.s2 && rv != t.d1 && rv != t.d2 {
            out.insert(rv, prog);
        }
    }
    Ok(out)
}

/// Aggregate scale the scratch solution put on the chain and its real
/// anchor node; this is the factor the buffer replay must apply.
fn chain_scale(scr: &LayeredNetwork, solved: &Scheme, anchor: usize) -> f64 {
    let mut x = 1.0;
    for (&sv, &prog) in &solved.modes[0] {
        if scr.name(sv).starts_with('~') || sv == anchor {
            if let Some(s) = prog.scale() {
                x *= s;
            }
        }
    }
    x
}

/// Seal a scheme: take the power margin from verification and run the
/// structural check.
fn finish(net: &LayeredNetwork, mut scheme: Scheme) -> Result<Scheme> {
    scheme.power_margin = verify_scheme(net, &scheme).power.alpha;
    scheme.check(net)?;
    Ok(scheme)
}

/// Synthesize the buffering scheme for the detour-fed half-integer shape.
///
/// Role a's route suffers two leaks, role b's exactly one, coming from a
/// node `v2` on a detour that role b itself feeds.  Cutting role b's route
/// at the layer of `v2` severs the lone leak, so one mode can run role a at
/// full rate with a one-shot cancellation while half of role b's route
/// runs interference-free; the relay at the cut holds role b's signal
/// across the mode boundary.  Which half depends on where role b's direct
/// leak `v3` into role a lands:
///
/// - `v3` before the cut layer: the cancellation mode uses role b's route
///   only up to the cut, and the held signal is delivered afterwards
///   ([`TwoModeVariant::SecondPathBuffer`]).
/// - `v3` at or past the cut layer: role a's route is the one truncated;
///   its source-side half charges the buffer first, and the cancellation
///   mode replays it into the destination-side half
///   ([`TwoModeVariant::FirstPathBuffer`]).
pub fn synth_two_mode_c1(net: &LayeredNetwork, w: &C1Witness) -> Result<Scheme> {
    if net.layer_of(w.v3) < net.layer_of(w.v2) {
        c1_second_path(net, w)
    } else {
        c1_first_path(net, w)
    }
}

/// Buffer on role b's route: mode 0 cancels cross-talk into role a while
/// charging the buffer, mode 1 forwards a fresh role-a symbol and delivers
/// the buffered role-b symbol.
fn c1_second_path(net: &LayeredNetwork, w: &C1Witness) -> Result<Scheme> {
    let (sa, da, sb, db) = role_ends(net, w.swapped);
    let (pa, pb) = if w.swapped { (&w.p2, &w.p1) } else { (&w.p1, &w.p2) };
    let hold = node_at_layer(net, pb, net.layer_of(w.v2))?;
    let prefix = pb.slice(sb, hold)?;

    // Scratch network: role a's full route, role b's route up to the
    // holding relay, and the detour; the holding relay hands off to the
    // chain instead of its own route.
    let include = pa
        .node_set()
        .union(&prefix.node_set())
        .union(&w.suffix.node_set());
    let (cn, ce, sink) = chain_to_sink(net, hold);
    let scr = scratch_net(
        net,
        &include,
        Some(hold),
        &cn,
        &ce,
        [net.name(sa), net.name(da), net.name(sb), &sink],
    )?;
    let p11 = scratch_path(&scr, net, pa)?;
    let p22 = {
        let mut nodes = prefix
            .nodes()
            .iter()
            .map(|&v| scr.require(net.name(v)))
            .collect::<Result<Vec<_>>>()?;
        for (name, _) in &cn {
            nodes.push(scr.require(name)?);
        }
        Path::new(&scr, nodes)?
    };
    let wit = ManageablePairWitness { p11, p22, subset: scr.full_set() };
    let solved = af::af_scheme_from_pair(&scr, &wit)?;

    let mut mode0 = remap_programs(&scr, &solved, net)?;
    mode0.insert(hold, RelayProgram::BufferStore);
    let mut mode1 = silent_base(net);
    forward_along(&mut mode1, net, pa.nodes().iter().copied());
    forward_along(&mut mode1, net, pb.slice(hold, db)?.nodes().iter().copied());
    mode1.insert(hold, RelayProgram::BufferForward(1.0));

    let (stream_a, stream_b) = role_streams(w.swapped);
    let scheme = Scheme {
        kind: SchemeKind::TwoMode { variant: TwoModeVariant::SecondPathBuffer },
        modes: vec![mode0, mode1],
        symbols: vec![
            SymbolSpec { source: stream_a, inject_modes: vec![0] },
            SymbolSpec { source: stream_a, inject_modes: vec![1] },
            SymbolSpec { source: stream_b, inject_modes: vec![0] },
        ],
        decodes: vec![
            DecodeSpec { symbol: 0, dest: stream_a, mode: 0 },
            DecodeSpec { symbol: 1, dest: stream_a, mode: 1 },
            DecodeSpec { symbol: 2, dest: stream_b, mode: 1 },
        ],
        predicted_dof: stream_dof(w.swapped, 1.0, 0.5),
        power_margin: 0.5,
        ia: None,
        ia222: None,
    };
    finish(net, scheme)
}

/// Buffer on role a's route: mode 0 charges the buffer over the clean
/// source-side half while role b runs free, mode 1 replays it through the
/// destination-side half under a one-shot cancellation of role b's leaks.
fn c1_first_path(net: &LayeredNetwork, w: &C1Witness) -> Result<Scheme> {
    let (sa, da, sb, db) = role_ends(net, w.swapped);
    let (pa, pb) = if w.swapped { (&w.p2, &w.p1) } else { (&w.p1, &w.p2) };
    let hold = node_at_layer(net, pa, net.layer_of(w.v2))?;
    let head = pa.slice(sa, hold)?;
    let tail = pa.slice(hold, da)?;

    // Scratch network for the replay mode: a stand-in source feeds the
    // buffered signal into the holding relay; role b's full route and the
    // detour provide the leaks the solver must cancel.
    let include = tail
        .node_set()
        .union(&pb.node_set())
        .union(&w.suffix.node_set());
    let (cn, ce, feed) = chain_from_feed(net, hold);
    let scr = scratch_net(
        net,
        &include,
        None,
        &cn,
        &ce,
        [&feed, net.name(da), net.name(sb), net.name(db)],
    )?;
    let p11 = {
        let mut nodes = cn
            .iter()
            .map(|(name, _)| scr.require(name))
            .collect::<Result<Vec<_>>>()?;
        for &v in tail.nodes() {
            nodes.push(scr.require(net.name(v))?);
        }
        Path::new(&scr, nodes)?
    };
    let p22 = scratch_path(&scr, net, pb)?;
    let wit = ManageablePairWitness { p11, p22, subset: scr.full_set() };
    let solved = af::af_scheme_from_pair(&scr, &wit)?;

    let mut mode0 = silent_base(net);
    forward_along(&mut mode0, net, head.nodes().iter().copied());
    forward_along(&mut mode0, net, pb.nodes().iter().copied());
    mode0.insert(hold, RelayProgram::BufferStore);
    let mut mode1 = remap_programs(&scr, &solved, net)?;
    let anchor = scr.require(net.name(hold))?;
    mode1.insert(hold, RelayProgram::BufferForward(chain_scale(&scr, &solved, anchor)));

    let (stream_a, stream_b) = role_streams(w.swapped);
    let scheme = Scheme {
        kind: SchemeKind::TwoMode { variant: TwoModeVariant::FirstPathBuffer },
        modes: vec![mode0, mode1],
        symbols: vec![
            SymbolSpec { source: stream_a, inject_modes: vec![0] },
            SymbolSpec { source: stream_b, inject_modes: vec![0] },
            SymbolSpec { source: stream_b, inject_modes: vec![1] },
        ],
        decodes: vec![
            DecodeSpec { symbol: 1, dest: stream_b, mode: 0 },
            DecodeSpec { symbol: 0, dest: stream_a, mode: 1 },
            DecodeSpec { symbol: 2, dest: stream_b, mode: 1 },
        ],
        predicted_dof: stream_dof(w.swapped, 0.5, 1.0),
        power_margin: 0.5,
        ia: None,
        ia222: None,
    };
    finish(net, scheme)
}

/// Synthesize the buffering scheme for the single-cross-edge half-integer
/// shape.
///
/// Role a owns two routes around the one edge (`v2`,`v1`) that role b's
/// route throws across: `q1` avoids the edge's head `v1` entirely, `z1`
/// runs through it.  Role a's only leak back into role b is the edge
/// (`v3`,`v4`).  Where that leak lands decides the buffering:
///
/// - `v3` at or past `v1`'s layer: the leak lands beyond the relay of
///   role b's route level with `v1`, so that relay can hold a clean copy
///   of role b's signal while `q1` runs, then deliver it while `z1` runs
///   ([`TwoModeVariant::DetourBuffer`]).  No cancellation is needed in
///   either mode.
/// - `v3` before `v1`'s layer: the leak pollutes everything downstream on
///   role b's route, so the hold happens at `v1` itself: a scratch-network
///   cancellation charges `v1` with a leak-free copy of role b's signal,
///   and in the second mode `v1` adds the held copy, scaled to annihilate
///   the fresh cross-talk arriving over (`v2`,`v1`)
///   ([`TwoModeVariant::DetourCancel`]).
pub fn synth_two_mode_c2(net: &LayeredNetwork, w: &C2Witness) -> Result<Scheme> {
    if net.layer_of(w.v3) >= net.layer_of(w.v1) {
        c2_detour_buffer(net, w)
    } else {
        c2_detour_cancel(net, w)
    }
}

/// Hold role b's signal on its own route, level with the cross edge's
/// head: both modes are pure forwarding.
fn c2_detour_buffer(net: &LayeredNetwork, w: &C2Witness) -> Result<Scheme> {
    let (_, _, sb, db) = role_ends(net, w.swapped);
    let hold = node_at_layer(net, &w.p2, net.layer_of(w.v1))?;

    let mut mode0 = silent_base(net);
    forward_along(&mut mode0, net, w.q1.nodes().iter().copied());
    forward_along(&mut mode0, net, w.p2.slice(sb, hold)?.nodes().iter().copied());
    mode0.insert(hold, RelayProgram::BufferStore);
    let mut mode1 = silent_base(net);
    forward_along(&mut mode1, net, w.z1.nodes().iter().copied());
    forward_along(&mut mode1, net, w.p2.slice(hold, db)?.nodes().iter().copied());
    mode1.insert(hold, RelayProgram::BufferForward(1.0));

    let (stream_a, stream_b) = role_streams(w.swapped);
    let scheme = Scheme {
        kind: SchemeKind::TwoMode { variant: TwoModeVariant::DetourBuffer },
        modes: vec![mode0, mode1],
        symbols: vec![
            SymbolSpec { source: stream_a, inject_modes: vec![0] },
            SymbolSpec { source: stream_a, inject_modes: vec![1] },
            SymbolSpec { source: stream_b, inject_modes: vec![0] },
        ],
        decodes: vec![
            DecodeSpec { symbol: 0, dest: stream_a, mode: 0 },
            DecodeSpec { symbol: 1, dest: stream_a, mode: 1 },
            DecodeSpec { symbol: 2, dest: stream_b, mode: 1 },
        ],
        predicted_dof: stream_dof(w.swapped, 1.0, 0.5),
        power_margin: 0.5,
        ia: None,
        ia222: None,
    };
    finish(net, scheme)
}

/// Hold at the cross edge's head `v1`: mode 0 charges it with a leak-free
/// copy of role b's signal by a scratch-network cancellation, mode 1 runs
/// both full routes and has `v1` add the held copy scaled to cancel the
/// fresh cross-talk.
fn c2_detour_cancel(net: &LayeredNetwork, w: &C2Witness) -> Result<Scheme> {
    let (sa, da, sb, db) = role_ends(net, w.swapped);

    // Scratch network: everything but role b's destination, with v1's
    // onward delivery replaced by the chain.  Role b's only remaining
    // outlet is through v1, so the classifier reduces the scratch network
    // to a manageable disjoint pair whose solution stores a clean copy at
    // v1.
    let include = net.full_set().without(db);
    let (cn, ce, sink) = chain_to_sink(net, w.v1);
    let scr = scratch_net(
        net,
        &include,
        Some(w.v1),
        &cn,
        &ce,
        [net.name(sa), net.name(da), net.name(sb), &sink],
    )?;
    let cls = classify_sum_dof(&scr)?;
    let wit = match &cls.witness {
        CaseWitness::Manageable(m) => m,
        _ => {
            return Err(Error::invariant(
                "cross-edge reduction did not yield a manageable disjoint pair",
            ))
        }
    };
    let solved = af::af_scheme_from_pair(&scr, wit)?;

    let mut mode0 = remap_programs(&scr, &solved, net)?;
    mode0.insert(w.v1, RelayProgram::BufferStore);
    let mut mode1 = silent_base(net);
    forward_along(&mut mode1, net, w.z1.nodes().iter().copied());
    forward_along(&mut mode1, net, w.p2.nodes().iter().copied());
    mode1.insert(w.v1, RelayProgram::CombineForward(0.0));

    let (stream_a, stream_b) = role_streams(w.swapped);
    let mut scheme = Scheme {
        kind: SchemeKind::TwoMode { variant: TwoModeVariant::DetourCancel },
        modes: vec![mode0, mode1],
        symbols: vec![
            SymbolSpec { source: stream_a, inject_modes: vec![0] },
            SymbolSpec { source: stream_a, inject_modes: vec![1] },
            SymbolSpec { source: stream_b, inject_modes: vec![0, 1] },
        ],
        decodes: vec![
            DecodeSpec { symbol: 0, dest: stream_a, mode: 0 },
            DecodeSpec { symbol: 1, dest: stream_a, mode: 1 },
            DecodeSpec { symbol: 2, dest: stream_b, mode: 1 },
        ],
        predicted_dof: stream_dof(w.swapped, 1.0, 0.5),
        power_margin: 0.5,
        ia: None,
        ia222: None,
    };

    // The cancellation scale: v1 stored `c` units of role b's symbol in
    // mode 0 and receives `e` fresh units in mode 1; adding the store
    // scaled by -e/c makes its mode-1 output carry role a's signal alone.
    let prop = propagate(net, &scheme);
    let stored = prop.rx[0][w.v1].sym[2];
    let fresh = prop.rx[1][w.v1].sym[2];
    if stored.abs() < STORED_COEFF_FLOOR {
        return Err(Error::invariant(
            "held cross signal vanished; no cancellation scale exists",
        ));
    }
    scheme.modes[1].insert(w.v1, RelayProgram::CombineForward(-fresh / stored));
    finish(net, scheme)
}
