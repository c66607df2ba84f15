//! Canonical test networks.
//!
//! Each fixture is a small layered two-unicast network with a hand-checked
//! structure; the brute-force oracles re-certify the interesting ones in the
//! test suites. Fixtures with generic gains draw them from the default
//! distribution under a fixed seed, so they are bit-for-bit reproducible.

use crate::netmodel::{LayeredNetwork, NetworkBuilder};

/// Two disjoint unit-gain chains: s1→a→d1 and s2→b→d2, no cross edges.
///
/// The simplest interference-free network; both streams ride through
/// untouched, so the sum degrees-of-freedom is 2.
pub fn parallel() -> LayeredNetwork {
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
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// All four terminal connections squeezed through the single relay m.
///
/// Removing m disconnects everything from everything, so the sum
/// degrees-of-freedom collapses to 1.
pub fn bottleneck() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(3)
        .node("s1", 1)
        .node("s2", 1)
        .node("m", 2)
        .node("d1", 3)
        .node("d2", 3)
        .edge("s1", "m", 1.0)
        .edge("s2", "m", 1.0)
        .edge("m", "d1", 1.0)
        .edge("m", "d2", 1.0)
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Fully connected two-relay network: both sources see both relays, both
/// relays see both destinations. Generic gains under a fixed seed.
///
/// This is the 2×2×2 interference channel; every source interferes with the
/// opposite stream at both relays.
pub fn two_relay_full() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(3)
        .node("s1", 1)
        .node("s2", 1)
        .node("u1", 2)
        .node("u2", 2)
        .node("d1", 3)
        .node("d2", 3)
        .seed(222)
        .edge_rand("s1", "u1")
        .edge_rand("s1", "u2")
        .edge_rand("s2", "u1")
        .edge_rand("s2", "u2")
        .edge_rand("u1", "d1")
        .edge_rand("u1", "d2")
        .edge_rand("u2", "d1")
        .edge_rand("u2", "d2")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Named edge list of [`five_layer_condensable`], in gain-index order
/// h1..h12; `condensable_gain(k)` looks the values up by that index.
pub const CONDENSABLE_EDGES: [(&str, &str); 12] = [
    ("s1", "a"),  // h1
    ("s2", "a"),  // h2
    ("s2", "b"),  // h3
    ("b", "v1"),  // h4
    ("b", "v2"),  // h5
    ("v1", "e"),  // h6
    ("a", "v3"),  // h7
    ("b", "v3"),  // h8
    ("v2", "c"),  // h9
    ("v3", "c"),  // h10
    ("c", "d1"),  // h11
    ("e", "d2"),  // h12
];

/// Five-layer network that condenses onto its middle layer {v1,v2,v3}.
///
/// Routes: s1→a→v3→c→d1 carries stream 1 and s2→b→v1→e→d2 carries
/// stream 2, with b and v2 leaking into the stream-1 side but nothing
/// leaking into the stream-2 side. Two handy closed forms follow from the
/// topology alone: the effective gain from s2 to v3 is h2·h7 + h3·h8 (two
/// forwarding routes through a and b), and the effective gain from v2 to d2
/// is exactly 0 (v2 only reaches d1). Generic gains under a fixed seed.
pub fn five_layer_condensable() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(5)
        .node("s1", 1)
        .node("s2", 1)
        .node("a", 2)
        .node("b", 2)
        .node("v1", 3)
        .node("v2", 3)
        .node("v3", 3)
        .node("c", 4)
        .node("e", 4)
        .node("d1", 5)
        .node("d2", 5)
        .seed(6);
    for (tail, head) in CONDENSABLE_EDGES {
        b.edge_rand(tail, head);
    }
    b.pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Gain h<k> (1-based) of a network sharing [`five_layer_condensable`]'s
/// topology, looked up through [`CONDENSABLE_EDGES`].
pub fn condensable_gain(net: &LayeredNetwork, k: usize) -> f64 {
    let (tail, head) = CONDENSABLE_EDGES[k - 1];
    let t = net.require(tail).expect("condensable topology");
    let h = net.require(head).expect("condensable topology");
    net.gain(t, h).expect("condensable topology")
}

/// Five-layer network with one leak into each stream's path.
///
/// Stream routes: s1→v1→v2→v3→d1 and s2→v7→v8→v9→d2. Cross structure:
/// - v5 leaks into v3, fed from s2 via v4 (off both routes);
/// - v7 (on the stream-2 route) leaks into v2;
/// - v6 leaks into v9, fed from s1 via v1.
///
/// So stream 1 suffers two leaks (v5, v7) and stream 2 exactly one (v6);
/// dropping v6 removes the only stream-2 leak while keeping both stream-1
/// leaks alive. Generic gains under a fixed seed.
pub fn interference_demo() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(5)
        .node("s1", 1)
        .node("s2", 1)
        .node("v1", 2)
        .node("v4", 2)
        .node("v7", 2)
        .node("v2", 3)
        .node("v5", 3)
        .node("v6", 3)
        .node("v8", 3)
        .node("v3", 4)
        .node("v9", 4)
        .node("d1", 5)
        .node("d2", 5)
        .seed(41)
        .edge_rand("s1", "v1")
        .edge_rand("v1", "v2")
        .edge_rand("v2", "v3")
        .edge_rand("v3", "d1")
        .edge_rand("s2", "v7")
        .edge_rand("v7", "v8")
        .edge_rand("v8", "v9")
        .edge_rand("v9", "d2")
        .edge_rand("s2", "v4")
        .edge_rand("v4", "v5")
        .edge_rand("v5", "v3")
        .edge_rand("v7", "v2")
        .edge_rand("v1", "v6")
        .edge_rand("v6", "v9")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Both streams share the single hub m while each source also owns a private
/// lane to the opposite destination (s1→e→d2, s2→f→d1).
///
/// No two fully separate direct routes exist — every s1→d1 and s2→d2 path
/// meets at m — yet the crossed lanes let both streams through at full rate.
/// Generic gains under a fixed seed.
pub fn butterfly_hub() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(3)
        .node("s1", 1)
        .node("s2", 1)
        .node("m", 2)
        .node("e", 2)
        .node("f", 2)
        .node("d1", 3)
        .node("d2", 3)
        .seed(71)
        .edge_rand("s1", "m")
        .edge_rand("s1", "e")
        .edge_rand("s2", "m")
        .edge_rand("s2", "f")
        .edge_rand("m", "d1")
        .edge_rand("m", "d2")
        .edge_rand("e", "d2")
        .edge_rand("f", "d1")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Like [`butterfly_hub`], but the shared trunk spans two relays m1→m2, so
/// the merge and split points differ. Generic gains under a fixed seed.
pub fn butterfly_span() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(4)
        .node("s1", 1)
        .node("s2", 1)
        .node("m1", 2)
        .node("e1", 2)
        .node("f1", 2)
        .node("m2", 3)
        .node("e2", 3)
        .node("f2", 3)
        .node("d1", 4)
        .node("d2", 4)
        .seed(72)
        .edge_rand("s1", "m1")
        .edge_rand("s1", "e1")
        .edge_rand("s2", "m1")
        .edge_rand("s2", "f1")
        .edge_rand("m1", "m2")
        .edge_rand("e1", "e2")
        .edge_rand("f1", "f2")
        .edge_rand("m2", "d1")
        .edge_rand("m2", "d2")
        .edge_rand("e2", "d2")
        .edge_rand("f2", "d1")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Ladder where stream 1's only direct route snakes across both lanes:
/// s1 feeds u1 on the cross lane to d2, s2 feeds both u1 and u2, and v2
/// serves d1 as well as d2.
///
/// There is no pair of fully separate direct routes, no single choke node,
/// and no shared trunk; the u1→v2 rung is what carries stream 1 home.
/// Generic gains under a fixed seed.
pub fn grail_ladder() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(4)
        .node("s1", 1)
        .node("s2", 1)
        .node("u1", 2)
        .node("u2", 2)
        .node("v1", 3)
        .node("v2", 3)
        .node("d1", 4)
        .node("d2", 4)
        .seed(73)
        .edge_rand("s1", "u1")
        .edge_rand("s2", "u1")
        .edge_rand("s2", "u2")
        .edge_rand("u1", "v1")
        .edge_rand("u1", "v2")
        .edge_rand("u2", "v2")
        .edge_rand("v1", "d2")
        .edge_rand("v2", "d1")
        .edge_rand("v2", "d2")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Five-layer network with a narrow detour waist w.
///
/// Stream 1 rides s1→a1→a2→a3→d1 and suffers two leaks: a direct one from
/// b2 on the companion path and an indirect one from x, fed through the
/// detour b1→w→x. Stream 2 rides s2→b1→b2→b3→d2 and suffers exactly one
/// leak, from the off-path waist w. Every stream-1 route to d2 squeezes
/// through w, which pins the classification between the 1-DoF and 2-DoF
/// regimes. Generic gains under a fixed seed.
pub fn funnel_shallow() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(5)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("w", 3)
        .node("a3", 4)
        .node("b3", 4)
        .node("x", 4)
        .node("d1", 5)
        .node("d2", 5)
        .seed(74)
        .edge_rand("s1", "a1")
        .edge_rand("s2", "b1")
        .edge_rand("a1", "a2")
        .edge_rand("a1", "w")
        .edge_rand("b1", "b2")
        .edge_rand("b1", "w")
        .edge_rand("a2", "a3")
        .edge_rand("b2", "a3")
        .edge_rand("b2", "b3")
        .edge_rand("w", "b3")
        .edge_rand("w", "x")
        .edge_rand("a3", "d1")
        .edge_rand("b3", "d2")
        .edge_rand("x", "d1")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Six-layer variant of [`funnel_shallow`] whose waist w2 sits one layer
/// beyond the companion-path leak b2→a3, so the buffering handoff lands on
/// the opposite side. Generic gains under a fixed seed.
pub fn funnel_deep() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(6)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("w1", 3)
        .node("a3", 4)
        .node("b3", 4)
        .node("w2", 4)
        .node("a4", 5)
        .node("b4", 5)
        .node("x", 5)
        .node("d1", 6)
        .node("d2", 6)
        .seed(75)
        .edge_rand("s1", "a1")
        .edge_rand("s2", "b1")
        .edge_rand("a1", "a2")
        .edge_rand("b1", "b2")
        .edge_rand("b1", "w1")
        .edge_rand("a2", "a3")
        .edge_rand("a2", "w2")
        .edge_rand("b2", "a3")
        .edge_rand("b2", "b3")
        .edge_rand("w1", "w2")
        .edge_rand("a3", "a4")
        .edge_rand("b3", "b4")
        .edge_rand("w2", "b4")
        .edge_rand("w2", "x")
        .edge_rand("a4", "d1")
        .edge_rand("b4", "d2")
        .edge_rand("x", "d1")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Five-layer network where the streams interact through one cross edge
/// b2→a3 plus a single alternate-route leak q→d2, with the leak sitting
/// level with the cross edge's head. Stream 1 has a detour a2→q→d1 around
/// a3; stream 2 has no detour at all. Generic gains under a fixed seed.
pub fn crosslink_even() -> LayeredNetwork {
    crosslink_even_with("s1", "d1", "s2", "d2")
}

/// Mirror-terminal variant of [`crosslink_even`]: the same nodes, edges and
/// gains, with the stream roles exchanged.
pub fn crosslink_even_swapped() -> LayeredNetwork {
    crosslink_even_with("s2", "d2", "s1", "d1")
}

fn crosslink_even_with(s1: &str, d1: &str, s2: &str, d2: &str) -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(5)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("a3", 4)
        .node("b3", 4)
        .node("q", 4)
        .node("d1", 5)
        .node("d2", 5)
        .seed(76)
        .edge_rand("s1", "a1")
        .edge_rand("s2", "b1")
        .edge_rand("a1", "a2")
        .edge_rand("b1", "b2")
        .edge_rand("a2", "a3")
        .edge_rand("a2", "q")
        .edge_rand("b2", "b3")
        .edge_rand("b2", "a3")
        .edge_rand("a3", "d1")
        .edge_rand("q", "d1")
        .edge_rand("q", "d2")
        .edge_rand("b3", "d2")
        .pairs(s1, d1, s2, d2);
    b.build().expect("fixture is valid")
}

/// Six-layer variant of [`crosslink_even`] whose alternate-route leak w3→b3
/// comes two layers before the cross edge's head a4, so the handoff must
/// buffer across modes at a4 itself. Stream 1's detour runs
/// s1→a1→w3→x4→p5→d1. Generic gains under a fixed seed.
pub fn crosslink_deep() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(6)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("w3", 3)
        .node("a3", 4)
        .node("b3", 4)
        .node("x4", 4)
        .node("a4", 5)
        .node("b4", 5)
        .node("p5", 5)
        .node("d1", 6)
        .node("d2", 6)
        .seed(77)
        .edge_rand("s1", "a1")
        .edge_rand("s2", "b1")
        .edge_rand("a1", "a2")
        .edge_rand("a1", "w3")
        .edge_rand("b1", "b2")
        .edge_rand("a2", "a3")
        .edge_rand("w3", "x4")
        .edge_rand("w3", "b3")
        .edge_rand("b2", "b3")
        .edge_rand("a3", "a4")
        .edge_rand("x4", "p5")
        .edge_rand("b3", "b4")
        .edge_rand("b3", "a4")
        .edge_rand("a4", "d1")
        .edge_rand("p5", "d1")
        .edge_rand("b4", "d2")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Looks like a single-cross-edge network at first glance, but the early
/// cross edge b1→a2 and the late one x4→b4 are joined by the forward link
/// a2→x4, letting stream 2 snake across both lanes and back.
///
/// That snaking route restores full rate for both streams, so this sits on
/// the 2-DoF side of the boundary. Generic gains under a fixed seed.
pub fn crosslink_grail() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(6)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("w3", 3)
        .node("a3", 4)
        .node("b3", 4)
        .node("x4", 4)
        .node("a4", 5)
        .node("b4", 5)
        .node("p5", 5)
        .node("d1", 6)
        .node("d2", 6)
        .seed(78)
        .edge_rand("s1", "a1")
        .edge_rand("s2", "b1")
        .edge_rand("a1", "a2")
        .edge_rand("a1", "w3")
        .edge_rand("b1", "b2")
        .edge_rand("b1", "a2")
        .edge_rand("a2", "a3")
        .edge_rand("a2", "x4")
        .edge_rand("w3", "x4")
        .edge_rand("b2", "b3")
        .edge_rand("a3", "a4")
        .edge_rand("x4", "p5")
        .edge_rand("x4", "b4")
        .edge_rand("b3", "b4")
        .edge_rand("a4", "d1")
        .edge_rand("p5", "d1")
        .edge_rand("b4", "d2")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Four-layer network where stream 2 leaks into stream 1 twice (b1→a2 and
/// the spur s2→w1→a2) while nothing leaks the other way.
///
/// Removing a2 cuts d1 off from s2, so a2's input layer {a1,b1,w1} is
/// where a single scaled layer can null the leak. Each two-node solve
/// there zeroes the other stream's through-gain exactly, so the ladder
/// must climb all the way to the summed candidate. Generic gains under a
/// fixed seed.
pub fn one_sided_leaks() -> LayeredNetwork {
    one_sided_leaks_with("s1", "d1", "s2", "d2")
}

/// Mirror-terminal variant of [`one_sided_leaks`]: the same nodes, edges
/// and gains, with the stream roles exchanged, so the leaks run 1→2.
pub fn one_sided_leaks_swapped() -> LayeredNetwork {
    one_sided_leaks_with("s2", "d2", "s1", "d1")
}

fn one_sided_leaks_with(s1: &str, d1: &str, s2: &str, d2: &str) -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(4)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("w1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("d1", 4)
        .node("d2", 4)
        .seed(81)
        .edge_rand("s1", "a1")
        .edge_rand("a1", "a2")
        .edge_rand("a2", "d1")
        .edge_rand("s2", "b1")
        .edge_rand("b1", "b2")
        .edge_rand("b2", "d2")
        .edge_rand("b1", "a2")
        .edge_rand("s2", "w1")
        .edge_rand("w1", "a2")
        .pairs(s1, d1, s2, d2);
    b.build().expect("fixture is valid")
}

/// Six-layer network where both streams leak into each other, with the
/// choke points on different layers: every route from s1 into stream 2
/// funnels through b3 (layer 4), and every route from s2 into stream 1
/// funnels through a4 (layer 5, once the y-lane's last hop is dropped).
///
/// The smallest working subset keeps x1 (a second leak into stream 2) and
/// y1→y2→y3 (a second leak into stream 1) but drops x2 and y4, so the
/// layer-3 trio {a2,b2,y2} nulls s1's aggregate into b3 and the layer-4
/// trio {a3,b3,y3} then separates the streams. Generic gains under a
/// fixed seed.
pub fn staggered_crossings() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(6)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("x1", 2)
        .node("y1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("x2", 3)
        .node("y2", 3)
        .node("a3", 4)
        .node("b3", 4)
        .node("y3", 4)
        .node("a4", 5)
        .node("b4", 5)
        .node("y4", 5)
        .node("d1", 6)
        .node("d2", 6)
        .seed(82)
        .edge_rand("s1", "a1")
        .edge_rand("a1", "a2")
        .edge_rand("a2", "a3")
        .edge_rand("a3", "a4")
        .edge_rand("a4", "d1")
        .edge_rand("s2", "b1")
        .edge_rand("b1", "b2")
        .edge_rand("b2", "b3")
        .edge_rand("b3", "b4")
        .edge_rand("b4", "d2")
        .edge_rand("s1", "x1")
        .edge_rand("x1", "b2")
        .edge_rand("x1", "x2")
        .edge_rand("x2", "b3")
        .edge_rand("s2", "y1")
        .edge_rand("y1", "y2")
        .edge_rand("y2", "y3")
        .edge_rand("y3", "a4")
        .edge_rand("y3", "y4")
        .edge_rand("y4", "d1")
        .edge_rand("b3", "a4")
        .edge_rand("a2", "b3")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

/// Five-layer network where both streams' choke points a3 and b3 share
/// layer 4, each hit by two leaks: b2 and the w-spur into a3, x2 and a2
/// into b3.
///
/// The whole network is needed for a working subset, so the scaled layer
/// is the width-four trio-breaker {a2,b2,w2,x2}. Each three-node solve
/// zeroes the other stream's through-gain structurally (the two systems
/// share no full-rank triple), forcing the summed candidate across
/// different triples. Generic gains under a fixed seed.
pub fn level_crossings() -> LayeredNetwork {
    let mut b = NetworkBuilder::new();
    b.layers(5)
        .node("s1", 1)
        .node("s2", 1)
        .node("a1", 2)
        .node("b1", 2)
        .node("w1", 2)
        .node("x1", 2)
        .node("a2", 3)
        .node("b2", 3)
        .node("w2", 3)
        .node("x2", 3)
        .node("a3", 4)
        .node("b3", 4)
        .node("d1", 5)
        .node("d2", 5)
        .seed(83)
        .edge_rand("s1", "a1")
        .edge_rand("a1", "a2")
        .edge_rand("a2", "a3")
        .edge_rand("a3", "d1")
        .edge_rand("s2", "b1")
        .edge_rand("b1", "b2")
        .edge_rand("b2", "b3")
        .edge_rand("b3", "d2")
        .edge_rand("b2", "a3")
        .edge_rand("a2", "b3")
        .edge_rand("s2", "w1")
        .edge_rand("w1", "w2")
        .edge_rand("w2", "a3")
        .edge_rand("s1", "x1")
        .edge_rand("x1", "x2")
        .edge_rand("x2", "b3")
        .pairs("s1", "d1", "s2", "d2");
    b.build().expect("fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build_and_validate() {
        for net in [
            parallel(),
            bottleneck(),
            two_relay_full(),
            five_layer_condensable(),
            interference_demo(),
            butterfly_hub(),
            butterfly_span(),
            grail_ladder(),
            funnel_shallow(),
            funnel_deep(),
            crosslink_even(),
            crosslink_even_swapped(),
            crosslink_deep(),
            crosslink_grail(),
            one_sided_leaks(),
            one_sided_leaks_swapped(),
            staggered_crossings(),
            level_crossings(),
        ] {
            let report = net.validate();
            assert!(report.is_clean(), "{net:?}: {:?}", report.warnings);
        }
    }

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(two_relay_full(), two_relay_full());
        assert_eq!(five_layer_condensable(), five_layer_condensable());
        assert_eq!(interference_demo(), interference_demo());
        assert_eq!(funnel_deep(), funnel_deep());
        assert_eq!(crosslink_deep(), crosslink_deep());
    }

    #[test]
    fn swapped_crosslink_shares_gains_but_not_roles() {
        let plain = crosslink_even();
        let flipped = crosslink_even_swapped();
        assert_eq!(plain.edges().len(), flipped.edges().len());
        for (a, b) in plain.edges().iter().zip(flipped.edges()) {
            assert_eq!(a.gain, b.gain);
        }
        let pt = plain.terminals();
        let ft = flipped.terminals();
        assert_eq!(plain.name(pt.s1), flipped.name(ft.s2));
        assert_eq!(plain.name(pt.d1), flipped.name(ft.d2));
    }

    #[test]
    fn condensable_gain_lookup_is_total() {
        let net = five_layer_condensable();
        assert_eq!(net.edges().len(), 12);
        for k in 1..=12 {
            let g = condensable_gain(&net, k);
            assert!(g != 0.0 && g.is_finite());
        }
    }
}
