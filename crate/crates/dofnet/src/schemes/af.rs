//! Diagonalizing amplify-and-forward synthesis.
//!
//! Given a disjoint route pair whose interference profile is manageable —
//! or one of the two shared-topology layouts that replace such a pair —
//! these routines choose per-node scaling factors for one or two interior
//! layers so that the end-to-end transfer matrix becomes diagonal: each
//! destination hears only its own stream, plus noise.
//!
//! Every scaling vector comes out of a small exact linear solve over
//! effective gains.  When the first solve leaves the other stream's
//! diagonal entry at zero, a second solve targets that entry instead, and
//! the sum of the two solutions settles the case where each vanishes on
//! the other's diagonal.  Superposition makes the sum exact: the pinned
//! entries of the two systems add without cross-talk.
//!
//! All candidates are normalized so their largest magnitude is 1, then
//! accepted or rejected with the same thresholds the verifier applies.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::classifier::{ButterflyWitness, GrailWitness, ManageablePairWitness};
use crate::condense::{build_condensed, CondensedNetwork};
use crate::error::{Error, Result};
use crate::interference::{find_key_node, interference_profile};
use crate::netmodel::{LayeredNetwork, NodeSet};
use crate::schemes::verify::{verify_scheme, DIAG_ABS_FLOOR, OFFDIAG_REL_TOL, RANK_ABS_TOL};
use crate::schemes::{
    AfShape, DecodeSpec, Ia222Info, ModePrograms, RelayProgram, Scheme, SchemeKind, SymbolSpec,
};

/// Effective-gain products below this are treated as structurally absent
/// routes when a solver checks its zero-pattern precondition.
pub(crate) const STRUCT_ZERO_TOL: f64 = 1e-7;

/// Smallest pivot determinant a scaling solve accepts.
pub(crate) const SING_TOL: f64 = 1e-9;

/// Orientation of a solver call: which terminals play the first and second
/// stream roles.
///
/// The one-layer solver requires that no route from `src[0]` to `dst[1]`
/// survives the condensation; pipelines pick whichever orientation makes
/// that hold and the solved transfer is diagonal in either reading.
#[derive(Debug, Clone, Copy)]
pub struct StreamFrame {
    pub src: [usize; 2],
    pub dst: [usize; 2],
}

impl StreamFrame {
    /// Natural orientation: stream 1 in the first slot.
    pub fn straight(net: &LayeredNetwork) -> StreamFrame {
        let t = net.terminals();
        StreamFrame { src: [t.s1, t.s2], dst: [t.d1, t.d2] }
    }

    /// Mirrored orientation: stream 2 in the first slot.
    pub fn crossed(net: &LayeredNetwork) -> StreamFrame {
        let t = net.terminals();
        StreamFrame { src: [t.s2, t.s1], dst: [t.d2, t.d1] }
    }
}

/// Scale a candidate so its largest magnitude is exactly 1.  All-zero
/// input is returned unchanged.
pub(crate) fn normalized(x: &[f64]) -> Vec<f64> {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        x.iter().map(|v| v / m).collect()
    } else {
        x.to_vec()
    }
}

/// Gains from the frame's two sources into the first condensed key layer:
/// rows follow the layer's node order, column 0 is `frame.src[0]`.
fn source_columns(cond: &CondensedNetwork, frame: &StreamFrame) -> Result<DMatrix<f64>> {
    let stage = &cond.stages[0];
    let rows = stage.to.len();
    let mut m = DMatrix::zeros(rows, 2);
    for (c, &s) in frame.src.iter().enumerate() {
        let col = stage
            .from
            .iter()
            .position(|&n| n == s)
            .ok_or_else(|| Error::invariant("frame source missing from the condensation"))?;
        for r in 0..rows {
            m[(r, c)] = stage.gain[(r, col)];
        }
    }
    Ok(m)
}

/// Gains from the last condensed key layer into the frame's destinations:
/// row 0 is `frame.dst[0]`, columns follow the layer's node order.
fn dest_rows(cond: &CondensedNetwork, frame: &StreamFrame) -> Result<DMatrix<f64>> {
    let stage = cond.stages.last().expect("condensation has stages");
    let cols = stage.from.len();
    let mut m = DMatrix::zeros(2, cols);
    for (r, &d) in frame.dst.iter().enumerate() {
        let row = stage
            .to
            .iter()
            .position(|&n| n == d)
            .ok_or_else(|| Error::invariant("frame destination missing from the condensation"))?;
        for c in 0..cols {
            m[(r, c)] = stage.gain[(row, c)];
        }
    }
    Ok(m)
}

/// End-to-end 2×2 transfer through one scaled layer, in frame order.
fn frame_transfer(h_src: &DMatrix<f64>, h_dst: &DMatrix<f64>, x: &[f64]) -> [[f64; 2]; 2] {
    let mut t = [[0.0f64; 2]; 2];
    for (i, &xi) in x.iter().enumerate() {
        for r in 0..2 {
            for c in 0..2 {
                t[r][c] += h_dst[(r, i)] * xi * h_src[(i, c)];
            }
        }
    }
    t
}

/// Whether a transfer matrix counts as diagonal under the verifier's
/// thresholds: both diagonal entries above the absolute floor, both
/// off-diagonal entries small relative to the matrix norm.
fn diagonal_ok(t: &[[f64; 2]; 2]) -> bool {
    let fro = t.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    t[0][0].abs() >= DIAG_ABS_FLOOR
        && t[1][1].abs() >= DIAG_ABS_FLOOR
        && t[0][1].abs() <= OFFDIAG_REL_TOL * fro
        && t[1][0].abs() <= OFFDIAG_REL_TOL * fro
}

/// Solve a two-unknown system over the best column pair: pick indices
/// (a, b) maximizing the pivot determinant of rows `(r0, r1)`, then solve
/// `[r0; r1]·x = rhs` for `x[a], x[b]` (all other components zero).
/// Returns `None` when every pair is singular.
fn solve_pair(r0: &[f64], r1: &[f64], rhs: [f64; 2]) -> Option<Vec<f64>> {
    let n = r0.len();
    let mut best: Option<(usize, usize, f64)> = None;
    for a in 0..n {
        for b in (a + 1)..n {
            let det = r0[a] * r1[b] - r0[b] * r1[a];
            if best.is_none_or(|(_, _, d)| det.abs() > d.abs()) {
                best = Some((a, b, det));
            }
        }
    }
    let (a, b, det) = best?;
    if det.abs() < SING_TOL {
        return None;
    }
    let mut x = vec![0.0; n];
    x[a] = (rhs[0] * r1[b] - rhs[1] * r0[b]) / det;
    x[b] = (r0[a] * rhs[1] - r1[a] * rhs[0]) / det;
    Some(x)
}

/// Scaling for a single interior layer that diagonalizes the 2×2 transfer.
///
/// `h_src` holds each node's gains from the two frame sources (n×2) and
/// `h_dst` each node's gains into the two frame destinations (2×n).
/// Requires that no column routes the first source to the second
/// destination; that entry stays (numerically) zero under any scaling, so
/// three solves control the rest:
///
/// 1. all-ones, accepted when the transfer happens to be diagonal already;
/// 2. a pair solve pinning (first destination ← first source) = 1 and
///    (first destination ← second source) = 0;
/// 3. a pair solve pinning (first destination ← second source) = 0 and
///    (second destination ← second source) = 1;
///
/// and when each of the last two leaves the other stream's diagonal entry
/// at zero, their sum restores both diagonals exactly.
pub(crate) fn diagonalize_one_layer(
    h_src: &DMatrix<f64>,
    h_dst: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let n = h_src.nrows();
    if n == 0 || h_src.ncols() != 2 || h_dst.nrows() != 2 || h_dst.ncols() != n {
        return Err(Error::invariant("scaling layer matrices have mismatched shapes"));
    }
    for i in 0..n {
        if (h_src[(i, 0)] * h_dst[(1, i)]).abs() > STRUCT_ZERO_TOL {
            return Err(Error::invariant(
                "a route from the first source to the second destination survives; \
                 a one-layer scaling cannot null it",
            ));
        }
    }
    let accept = |x: &[f64]| -> Option<Vec<f64>> {
        let x = normalized(x);
        diagonal_ok(&frame_transfer(h_src, h_dst, &x)).then_some(x)
    };
    if let Some(x) = accept(&vec![1.0; n]) {
        return Ok(x);
    }
    let own1: Vec<f64> = (0..n).map(|i| h_src[(i, 0)] * h_dst[(0, i)]).collect();
    let cross: Vec<f64> = (0..n).map(|i| h_src[(i, 1)] * h_dst[(0, i)]).collect();
    let own2: Vec<f64> = (0..n).map(|i| h_src[(i, 1)] * h_dst[(1, i)]).collect();
    let first = solve_pair(&own1, &cross, [1.0, 0.0])
        .ok_or_else(|| Error::invariant("the first destination's scaling system is singular"))?;
    if let Some(x) = accept(&first) {
        return Ok(x);
    }
    let second = solve_pair(&cross, &own2, [0.0, 1.0])
        .ok_or_else(|| Error::invariant("the second destination's scaling system is singular"))?;
    if let Some(x) = accept(&second) {
        return Ok(x);
    }
    let both: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a + b).collect();
    accept(&both)
        .ok_or_else(|| Error::invariant("scaling ladder exhausted without a diagonal transfer"))
}

/// Scaling for the layer feeding an early key node: null the opposite
/// source's aggregate gain into the key while keeping the own source's
/// alive, with every component nonzero so the layer keeps forwarding
/// everything else.
///
/// `c_null[i]` and `c_keep[i]` are each node's products (source gain into
/// the node) × (node gain into the key), for the source being nulled and
/// the source being kept respectively.
pub(crate) fn solve_y_stage(c_null: &[f64], c_keep: &[f64]) -> Result<Vec<f64>> {
    let n = c_null.len();
    if n == 0 || c_keep.len() != n {
        return Err(Error::invariant("feeding-layer coefficients have mismatched shapes"));
    }
    let null_scale = c_null.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let keep_scale = c_keep.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if keep_scale == 0.0 {
        return Err(Error::invariant("the kept source does not reach the key node"));
    }
    let keep_floor = 1e-9 * keep_scale;
    let support: Vec<usize> = (0..n)
        .filter(|&i| c_null[i].abs() > 1e-9 * null_scale.max(1e-300))
        .collect();
    let dot = |c: &[f64], y: &[f64]| c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    if null_scale == 0.0 || support.is_empty() {
        // Nothing to null; keep the whole layer forwarding.
        let y = vec![1.0; n];
        return if dot(c_keep, &y).abs() >= keep_floor {
            Ok(y)
        } else {
            Err(Error::invariant("the kept source cancels across the feeding layer"))
        };
    }
    if support.len() == 1 {
        return Err(Error::invariant(
            "a single node carries the nulled source; zeroing it would silence the layer",
        ));
    }
    let (ci, di) = (support[0], support[1]);
    let mut primary: Option<Vec<f64>> = None;
    for yd in [1.0, 2.0] {
        let mut y = vec![1.0; n];
        y[di] = yd;
        let partial: f64 = (0..n).filter(|&i| i != ci).map(|i| c_null[i] * y[i]).sum();
        let yc = -partial / c_null[ci];
        if yc.abs() > 1e-9 {
            y[ci] = yc;
            primary = Some(y);
            break;
        }
    }
    let primary =
        primary.ok_or_else(|| Error::invariant("nulling scale collapses to zero on both tries"))?;
    if dot(c_keep, &primary).abs() >= keep_floor {
        return Ok(primary);
    }
    // The kept source cancelled under the primary choice.  Solve the joint
    // pair system (null = 0, keep = 1) and blend a shrinking amount of the
    // primary back in until no component is left at zero.
    let pair = solve_pair(c_null, c_keep, [0.0, 1.0]).ok_or_else(|| {
        Error::invariant("null and keep coefficient rows are jointly singular")
    })?;
    for k in 0..=60 {
        let t = 0.5f64.powi(k);
        let y: Vec<f64> = pair.iter().zip(&primary).map(|(a, b)| a + t * b).collect();
        let m = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if y.iter().all(|v| v.abs() > 1e-9 * m) {
            return Ok(y);
        }
    }
    Err(Error::invariant("could not keep every feeding node active"))
}

/// Scaling for the single scaled layer of a one-key condensation
/// (sources, one interior layer, destinations).
pub fn synth_af_single_key(cond: &CondensedNetwork, frame: &StreamFrame) -> Result<Vec<f64>> {
    if cond.layers.len() != 3 {
        return Err(Error::invariant("one-key synthesis expects exactly one interior layer"));
    }
    let src = source_columns(cond, frame)?;
    let dst = dest_rows(cond, frame)?;
    diagonalize_one_layer(&src, &dst)
}

/// Scalings for the two key layers of a both-streams-keyed condensation
/// (sources, early layer, late layer, destinations).
///
/// The early layer nulls `frame.src[0]`'s aggregate into the early key
/// node; `into_key` gives each early-layer node's direct gain into that
/// key, in layer order.  The late layer then diagonalizes the effective
/// 2×2 transfer that remains.  Returned vectors follow the condensation's
/// layer orders; the early one is not normalized.
pub fn synth_af_two_key(
    cond: &CondensedNetwork,
    into_key: &[f64],
    frame: &StreamFrame,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if cond.layers.len() != 4 {
        return Err(Error::invariant("two-key synthesis expects exactly two interior layers"));
    }
    let w1 = cond.width(1);
    let w2 = cond.width(2);
    if into_key.len() != w1 {
        return Err(Error::invariant("into-key gains must cover the early layer"));
    }
    let src = source_columns(cond, frame)?;
    let c_null: Vec<f64> = (0..w1).map(|i| src[(i, 0)] * into_key[i]).collect();
    let c_keep: Vec<f64> = (0..w1).map(|i| src[(i, 1)] * into_key[i]).collect();
    let y = solve_y_stage(&c_null, &c_keep)?;
    // Effective source gains into the late layer, through the scaled early
    // layer.
    let mid = &cond.stages[1].gain;
    let mut eff_src = DMatrix::zeros(w2, 2);
    for r in 0..w2 {
        for c in 0..2 {
            eff_src[(r, c)] = (0..w1).map(|i| mid[(r, i)] * y[i] * src[(i, c)]).sum();
        }
    }
    let dst = dest_rows(cond, frame)?;
    let x = diagonalize_one_layer(&eff_src, &dst)?;
    Ok((y, x))
}

/// Outcome of a width-three-or-wider scaling attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum ThreeColumnOutcome {
    /// A scaling vector (over the condensation's scaled layer, in layer
    /// order) with a diagonal transfer.
    Scaling(Vec<f64>),
    /// No column triple diagonalizes, but this column pair has invertible
    /// source-side and destination-side blocks: hand the network over to
    /// the width-two bottleneck treatment on these nodes.
    Reduce222 { keep: [usize; 2] },
}

/// 3×3 determinant by cofactor expansion.
fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Solve a three-unknown system over the best column triple: among
/// `triples`, pick the one maximizing the determinant of rows `rows`, then
/// solve for the three components (all others zero).  Returns `None` when
/// every listed triple is singular.
fn solve_triple(rows: [&[f64]; 3], triples: &[[usize; 3]], rhs: [f64; 3]) -> Option<Vec<f64>> {
    let n = rows[0].len();
    let mut best: Option<([usize; 3], f64)> = None;
    for &t in triples {
        let m = [
            [rows[0][t[0]], rows[0][t[1]], rows[0][t[2]]],
            [rows[1][t[0]], rows[1][t[1]], rows[1][t[2]]],
            [rows[2][t[0]], rows[2][t[1]], rows[2][t[2]]],
        ];
        let d = det3(&m);
        if best.is_none_or(|(_, bd)| d.abs() > bd.abs()) {
            best = Some((t, d));
        }
    }
    let (t, d) = best?;
    if d.abs() < SING_TOL {
        return None;
    }
    let m = [
        [rows[0][t[0]], rows[0][t[1]], rows[0][t[2]]],
        [rows[1][t[0]], rows[1][t[1]], rows[1][t[2]]],
        [rows[2][t[0]], rows[2][t[1]], rows[2][t[2]]],
    ];
    let mut x = vec![0.0; n];
    for k in 0..3 {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = rhs[r];
        }
        x[t[k]] = det3(&mk) / d;
    }
    Some(x)
}

/// Diagonalize through one layer by pinning three transfer entries at a
/// time.  The primary system pins (own₁, cross-into-1, cross-into-2) =
/// (1, 0, 0) over some triple from `first`; if the leftover second
/// diagonal lands below the floor, a secondary system pins the mirrored
/// targets over some triple from `second` (the triples may differ), and
/// the sum of the two solutions covers the case where each leaves the
/// other diagonal at zero.
fn triple_ladder(
    h_src: &DMatrix<f64>,
    h_dst: &DMatrix<f64>,
    first: &[[usize; 3]],
    second: &[[usize; 3]],
) -> Option<Vec<f64>> {
    let n = h_src.nrows();
    let own1: Vec<f64> = (0..n).map(|i| h_src[(i, 0)] * h_dst[(0, i)]).collect();
    let cross1: Vec<f64> = (0..n).map(|i| h_src[(i, 1)] * h_dst[(0, i)]).collect();
    let cross2: Vec<f64> = (0..n).map(|i| h_src[(i, 0)] * h_dst[(1, i)]).collect();
    let own2: Vec<f64> = (0..n).map(|i| h_src[(i, 1)] * h_dst[(1, i)]).collect();
    let accept = |x: &[f64]| -> Option<Vec<f64>> {
        let x = normalized(x);
        diagonal_ok(&frame_transfer(h_src, h_dst, &x)).then_some(x)
    };
    let x1 = solve_triple([&own1, &cross1, &cross2], first, [1.0, 0.0, 0.0]);
    if let Some(x) = x1.as_deref().and_then(accept) {
        return Some(x);
    }
    let x2 = solve_triple([&own2, &cross2, &cross1], second, [1.0, 0.0, 0.0]);
    if let Some(x) = x2.as_deref().and_then(accept) {
        return Some(x);
    }
    match (x1, x2) {
        (Some(a), Some(b)) => {
            let both: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
            accept(&both)
        }
        _ => None,
    }
}

/// Best column pair whose source-side and destination-side 2×2 blocks are
/// both invertible (maximizing the smaller determinant magnitude), or
/// `None` when no pair clears the rank threshold.  These are exactly the
/// rank conditions the width-two bottleneck scheme needs.
fn best_rank_pair(
    h_src: &DMatrix<f64>,
    h_dst: &DMatrix<f64>,
    allowed: &[usize],
) -> Option<[usize; 2]> {
    let mut best: Option<([usize; 2], f64)> = None;
    for (i, &a) in allowed.iter().enumerate() {
        for &b in &allowed[i + 1..] {
            let ds = h_src[(a, 0)] * h_src[(b, 1)] - h_src[(b, 0)] * h_src[(a, 1)];
            let dd = h_dst[(0, a)] * h_dst[(1, b)] - h_dst[(0, b)] * h_dst[(1, a)];
            let score = ds.abs().min(dd.abs());
            if score > RANK_ABS_TOL && best.is_none_or(|(_, s)| score > s) {
                best = Some(([a, b], score));
            }
        }
    }
    best.map(|(pair, _)| pair)
}

/// All column triples of a width-`n` layer, in layer order.
fn all_triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Diagonalize through a one-interior-layer condensation using exactly the
/// three given layer nodes, or report the width-two reduction over the
/// best pair of them.  `columns` are node indices of the condensation's
/// interior layer; so is the returned `keep` pair.
pub fn synth_af_three_column(
    cond: &CondensedNetwork,
    columns: [usize; 3],
    frame: &StreamFrame,
) -> Result<ThreeColumnOutcome> {
    if cond.layers.len() != 3 {
        return Err(Error::invariant("three-column synthesis expects one interior layer"));
    }
    let layer = &cond.layers[1];
    let pos: Vec<usize> = columns
        .iter()
        .map(|&c| {
            layer
                .iter()
                .position(|&n| n == c)
                .ok_or_else(|| Error::invariant("chosen column is not on the scaled layer"))
        })
        .collect::<Result<_>>()?;
    let triple = [[pos[0], pos[1], pos[2]]];
    let src = source_columns(cond, frame)?;
    let dst = dest_rows(cond, frame)?;
    if let Some(x) = triple_ladder(&src, &dst, &triple, &triple) {
        return Ok(ThreeColumnOutcome::Scaling(x));
    }
    match best_rank_pair(&src, &dst, &[pos[0], pos[1], pos[2]]) {
        Some([a, b]) => Ok(ThreeColumnOutcome::Reduce222 { keep: [layer[a], layer[b]] }),
        None => Err(Error::invariant(
            "neither a diagonalizing triple nor a full-rank pair exists",
        )),
    }
}

/// Standard two-symbol payload: each source owns one fresh symbol in the
/// single mode.
fn stream_symbols() -> Vec<SymbolSpec> {
    vec![
        SymbolSpec { source: 1, inject_modes: vec![0] },
        SymbolSpec { source: 2, inject_modes: vec![0] },
    ]
}

/// Standard decode slots for [`stream_symbols`]: each destination decodes
/// its own stream in the single mode.
fn stream_decodes() -> Vec<DecodeSpec> {
    vec![
        DecodeSpec { symbol: 0, dest: 1, mode: 0 },
        DecodeSpec { symbol: 1, dest: 2, mode: 0 },
    ]
}

/// Assemble a one-mode amplify-and-forward scheme: scaled nodes apply
/// their factors, other relays in the active set forward unscaled,
/// everything else (and anything explicitly silenced) stays silent.  The
/// power margin is taken from the verifier's power report.
fn assemble_af(
    net: &LayeredNetwork,
    active: &NodeSet,
    scaled: &BTreeMap<usize, f64>,
    silenced: &[usize],
    shape: AfShape,
) -> Result<Scheme> {
    let t = net.terminals();
    let mut programs = ModePrograms::new();
    for v in 0..net.len() {
        if v == t.s1 || v == t.s2 || v == t.d1 || v == t.d2 {
            continue;
        }
        let prog = if silenced.contains(&v) {
            RelayProgram::Silent
        } else if let Some(&x) = scaled.get(&v) {
            RelayProgram::ScaleForward(x)
        } else if active.contains(v) {
            RelayProgram::ScaleForward(1.0)
        } else {
            RelayProgram::Silent
        };
        programs.insert(v, prog);
    }
    let mut scheme = Scheme {
        kind: SchemeKind::AfDiagonal { shape },
        modes: vec![programs],
        symbols: stream_symbols(),
        decodes: stream_decodes(),
        predicted_dof: (1.0, 1.0),
        power_margin: 0.5,
        ia: None,
        ia222: None,
    };
    scheme.power_margin = verify_scheme(net, &scheme).power.alpha;
    scheme.check(net)?;
    Ok(scheme)
}

/// Assemble the width-two bottleneck directive: the active set forwards
/// unscaled (minus explicit silences) and verification is rank-only over
/// the two middle nodes.
fn assemble_ia222(
    net: &LayeredNetwork,
    active: &NodeSet,
    middle: [usize; 2],
    silenced: Vec<usize>,
) -> Result<Scheme> {
    let t = net.terminals();
    let mut programs = ModePrograms::new();
    for v in 0..net.len() {
        if v == t.s1 || v == t.s2 || v == t.d1 || v == t.d2 {
            continue;
        }
        let prog = if active.contains(v) && !silenced.contains(&v) {
            RelayProgram::ScaleForward(1.0)
        } else {
            RelayProgram::Silent
        };
        programs.insert(v, prog);
    }
    let mut scheme = Scheme {
        kind: SchemeKind::Ia222,
        modes: vec![programs],
        symbols: stream_symbols(),
        decodes: Vec::new(),
        predicted_dof: (1.0, 1.0),
        power_margin: 0.5,
        ia: None,
        ia222: Some(Ia222Info { middle, silenced }),
    };
    scheme.power_margin = verify_scheme(net, &scheme).power.alpha;
    scheme.check(net)?;
    Ok(scheme)
}

/// Build the full scheme for a manageable disjoint route pair, dispatching
/// on the interference profile of the witness subset: all-forward when
/// neither stream is interfered, a one-layer scaling when exactly one is,
/// a two-layer scaling when the severing nodes sit on different layers,
/// and the wide-layer or width-two treatments when they share a layer.
pub fn af_scheme_from_pair(net: &LayeredNetwork, w: &ManageablePairWitness) -> Result<Scheme> {
    let prof = interference_profile(net, &w.subset, &w.p11, &w.p22)?;
    if prof.n1 == 1 || prof.n2 == 1 {
        return Err(Error::invariant("witness subset leaves a lone interferer"));
    }
    match (prof.n1, prof.n2) {
        (0, 0) => assemble_af(net, &w.subset, &BTreeMap::new(), &[], AfShape::Trivial),
        (_, 0) => single_key_scheme(net, w, 1),
        (0, _) => single_key_scheme(net, w, 2),
        _ => double_key_scheme(net, w),
    }
}

/// Position of a full-network node inside an induced subnetwork's node
/// map.
fn sub_index(map: &[usize], node: usize) -> Result<usize> {
    map.iter()
        .position(|&o| o == node)
        .ok_or_else(|| Error::invariant("witness node missing from the induced subnetwork"))
}

/// One interfered stream: condense onto the layer feeding its severing
/// node and diagonalize there.  The frame is oriented so the uninterfered
/// stream is the one the solver must (and structurally can) null.
fn single_key_scheme(
    net: &LayeredNetwork,
    w: &ManageablePairWitness,
    pair_index: usize,
) -> Result<Scheme> {
    let path = if pair_index == 1 { &w.p11 } else { &w.p22 };
    let key = find_key_node(net, &w.subset, path, pair_index)
        .ok_or_else(|| Error::invariant("interfered route has no severing node"))?;
    if key.input_layer < 2 {
        return Err(Error::invariant("severing node sits on the source layer's heels"));
    }
    let (sub, map) = net.induced_with_map(&w.subset)?;
    let frame = if pair_index == 1 {
        StreamFrame::straight(&sub)
    } else {
        StreamFrame::crossed(&sub)
    };
    let cond = build_condensed(&sub, &[key.input_layer])?;
    let x = synth_af_single_key(&cond, &frame)?;
    let scaled: BTreeMap<usize, f64> = cond.layers[1]
        .iter()
        .zip(&x)
        .map(|(&sub_ix, &v)| (map[sub_ix], v))
        .collect();
    assemble_af(net, &w.subset, &scaled, &[], AfShape::SingleKey)
}

/// Both streams interfered, severing nodes on different layers: scale the
/// two feeding layers.  The earlier key's stream is the one whose feeding
/// layer nulls the opposite source, so the frame puts that opposite
/// source in the first slot.
fn double_key_scheme(net: &LayeredNetwork, w: &ManageablePairWitness) -> Result<Scheme> {
    let k1 = find_key_node(net, &w.subset, &w.p11, 1)
        .ok_or_else(|| Error::invariant("first route has no severing node"))?;
    let k2 = find_key_node(net, &w.subset, &w.p22, 2)
        .ok_or_else(|| Error::invariant("second route has no severing node"))?;
    let l1 = net.layer_of(k1.node);
    let l2 = net.layer_of(k2.node);
    if l1 == l2 {
        return same_layer_scheme(net, w, l1);
    }
    let (early, late) = if l1 < l2 { (&k1, &k2) } else { (&k2, &k1) };
    let le = net.layer_of(early.node);
    let ll = net.layer_of(late.node);
    if le < 3 {
        return Err(Error::invariant("early severing node sits on the source layer's heels"));
    }
    let (sub, map) = net.induced_with_map(&w.subset)?;
    let frame = if early.pair_index == 2 {
        StreamFrame::straight(&sub)
    } else {
        StreamFrame::crossed(&sub)
    };
    let cond = build_condensed(&sub, &[le - 1, ll - 1])?;
    let early_sub = sub_index(&map, early.node)?;
    let into_key: Vec<f64> = cond.layers[1]
        .iter()
        .map(|&u| sub.gain(u, early_sub).unwrap_or(0.0))
        .collect();
    let (y, x) = synth_af_two_key(&cond, &into_key, &frame)?;
    let y = normalized(&y);
    let mut scaled: BTreeMap<usize, f64> = BTreeMap::new();
    for (&sub_ix, &v) in cond.layers[1].iter().zip(&y) {
        scaled.insert(map[sub_ix], v);
    }
    for (&sub_ix, &v) in cond.layers[2].iter().zip(&x) {
        scaled.insert(map[sub_ix], v);
    }
    assemble_af(net, &w.subset, &scaled, &[], AfShape::TwoKey)
}

/// Both severing nodes on one layer: the layer feeding them is the
/// bottleneck.  Width two is a genuine 2×2×2 interference channel (hand it
/// to the width-two treatment); wider layers get the triple ladder after
/// pruning off-route nodes at and beyond the key layer, whose only effect
/// at this point would be to smear the transfer.
fn same_layer_scheme(
    net: &LayeredNetwork,
    w: &ManageablePairWitness,
    key_layer: usize,
) -> Result<Scheme> {
    let input_layer = key_layer - 1;
    if input_layer < 2 {
        return Err(Error::invariant("severing layer sits on the source layer's heels"));
    }
    let inputs: Vec<usize> = net
        .layer(input_layer)
        .iter()
        .copied()
        .filter(|&v| w.subset.contains(v))
        .collect();
    if inputs.len() < 2 {
        return Err(Error::invariant("severing layer has a starved feed"));
    }
    if inputs.len() == 2 {
        return assemble_ia222(net, &w.subset, [inputs[0], inputs[1]], Vec::new());
    }
    // Prune off-route nodes at and beyond the key layer.
    let mut pruned = w.subset;
    for v in 0..net.len() {
        if pruned.contains(v)
            && net.layer_of(v) >= key_layer
            && !w.p11.contains(v)
            && !w.p22.contains(v)
        {
            pruned.remove(v);
        }
    }
    let (sub, map) = net.induced_with_map(&pruned)?;
    let frame = StreamFrame::straight(&sub);
    let cond = build_condensed(&sub, &[input_layer])?;
    let src = source_columns(&cond, &frame)?;
    let dst = dest_rows(&cond, &frame)?;
    let triples = all_triples(cond.width(1));
    if let Some(x) = triple_ladder(&src, &dst, &triples, &triples) {
        let scaled: BTreeMap<usize, f64> = cond.layers[1]
            .iter()
            .zip(&x)
            .map(|(&sub_ix, &v)| (map[sub_ix], v))
            .collect();
        return assemble_af(net, &pruned, &scaled, &[], AfShape::ThreeColumn);
    }
    let allowed: Vec<usize> = (0..cond.width(1)).collect();
    match best_rank_pair(&src, &dst, &allowed) {
        Some([a, b]) => {
            let keep = [map[cond.layers[1][a]], map[cond.layers[1][b]]];
            let silenced: Vec<usize> = cond.layers[1]
                .iter()
                .map(|&s| map[s])
                .filter(|v| !keep.contains(v))
                .collect();
            assemble_ia222(net, &pruned, keep, silenced)
        }
        None => Err(Error::invariant(
            "wide severing layer admits neither a scaling nor a full-rank pair",
        )),
    }
}

/// Build the scheme for a shared-trunk layout: the four routes' nodes are
/// the active set, the trunk's last node and the two cross routes' nodes
/// level with it form the scaled trio.  A surviving cross gain around the
/// trio's edge nodes short-circuits the layout down to the width-two
/// bottleneck instead.
pub fn butterfly_scheme(net: &LayeredNetwork, w: &ButterflyWitness) -> Result<Scheme> {
    let active = w
        .p11
        .node_set()
        .union(&w.p22.node_set())
        .union(&w.p12.node_set())
        .union(&w.p21.node_set());
    let key_layer = net.layer_of(w.u1);
    let on_layer = |p: &crate::netmodel::Path| -> Result<usize> {
        p.nodes()
            .iter()
            .copied()
            .find(|&v| net.layer_of(v) == key_layer)
            .ok_or_else(|| Error::invariant("cross route skips the trunk's last layer"))
    };
    let v1 = on_layer(&w.p12)?;
    let v3 = on_layer(&w.p21)?;
    let v2 = w.u1;
    let (sub, map) = net.induced_with_map(&active)?;
    let cond = build_condensed(&sub, &[key_layer])?;
    if cond.width(1) != 3 {
        return Err(Error::invariant("shared-trunk layout must have exactly three mid nodes"));
    }
    let st = sub.terminals();
    let s_v1 = sub_index(&map, v1)?;
    let s_v2 = sub_index(&map, v2)?;
    let s_v3 = sub_index(&map, v3)?;
    let eff = |a: usize, b: usize| cond.eff_gain(a, b).unwrap_or(0.0);
    // Cross gains around the trio's edges decide the reductions: if the
    // first cross node also hears the second source and reaches the first
    // destination, it forms a full-rank pair with the trunk node (and
    // mirrored for the other side).
    if (eff(st.s2, s_v1) * eff(s_v1, st.d1)).abs() > STRUCT_ZERO_TOL {
        return assemble_ia222(net, &active, [v1, v2], vec![v3]);
    }
    if (eff(st.s1, s_v3) * eff(s_v3, st.d2)).abs() > STRUCT_ZERO_TOL {
        return assemble_ia222(net, &active, [v2, v3], vec![v1]);
    }
    let frame = StreamFrame::straight(&sub);
    match synth_af_three_column(&cond, [s_v1, s_v2, s_v3], &frame)? {
        ThreeColumnOutcome::Scaling(x) => {
            let scaled: BTreeMap<usize, f64> = cond.layers[1]
                .iter()
                .zip(&x)
                .map(|(&sub_ix, &v)| (map[sub_ix], v))
                .collect();
            assemble_af(net, &active, &scaled, &[], AfShape::Butterfly)
        }
        ThreeColumnOutcome::Reduce222 { keep } => {
            let keep = [map[keep[0]], map[keep[1]]];
            let silenced: Vec<usize> = [v1, v2, v3]
                .into_iter()
                .filter(|v| !keep.contains(v))
                .collect();
            assemble_ia222(net, &active, keep, silenced)
        }
    }
}

/// Outcome of the snake-layout synthesis.
#[derive(Debug, Clone, PartialEq)]
pub enum GrailOutcome {
    /// Node-keyed scalar pairs for the early and late key layers.
    Scalars {
        early: [(usize, f64); 2],
        late: [(usize, f64); 2],
    },
    /// A cross gain short-circuits the snake; run the width-two bottleneck
    /// over this node pair instead.
    Reduce222 { keep: [usize; 2] },
}

/// Scalar pairs for the two width-two key layers of a snake condensation
/// (sources, early pair, late pair, destinations).
///
/// Requires the snake zero pattern: the first frame source reaches exactly
/// one early node, and exactly one late node reaches the first frame
/// destination.  When both nodes of a pair carry the route, that pair is
/// already a full-rank 2×2 bottleneck and the width-two directive is
/// returned.  Otherwise the early pair nulls the second source's
/// aggregate into the carrying late node, and the late pair nulls the
/// first stream's leak into the second destination; the remaining two
/// entries are the surviving diagonal.
pub fn synth_grail(cond: &CondensedNetwork, frame: &StreamFrame) -> Result<GrailOutcome> {
    if cond.layers.len() != 4 || cond.width(1) != 2 || cond.width(2) != 2 {
        return Err(Error::invariant("snake synthesis expects two width-two interior layers"));
    }
    let u = [cond.layers[1][0], cond.layers[1][1]];
    let v = [cond.layers[2][0], cond.layers[2][1]];
    let g = |a: usize, b: usize| cond.eff_gain(a, b).unwrap_or(0.0);
    let [fs1, fs2] = frame.src;
    let [fd1, fd2] = frame.dst;
    let s1u = [g(fs1, u[0]), g(fs1, u[1])];
    if s1u[0].abs() > STRUCT_ZERO_TOL && s1u[1].abs() > STRUCT_ZERO_TOL {
        return Ok(GrailOutcome::Reduce222 { keep: u });
    }
    let (u1, u2) = if s1u[0].abs() >= s1u[1].abs() { (u[0], u[1]) } else { (u[1], u[0]) };
    if g(fs1, u1).abs() <= SING_TOL {
        return Err(Error::invariant("first stream does not reach the early layer"));
    }
    let vd = [g(v[0], fd1), g(v[1], fd1)];
    if vd[0].abs() > STRUCT_ZERO_TOL && vd[1].abs() > STRUCT_ZERO_TOL {
        return Ok(GrailOutcome::Reduce222 { keep: v });
    }
    let (v2, v1) = if vd[0].abs() >= vd[1].abs() { (v[0], v[1]) } else { (v[1], v[0]) };
    if g(v2, fd1).abs() <= SING_TOL {
        return Err(Error::invariant("first destination is unreachable from the late layer"));
    }
    // Early pair: null the second source's aggregate into the carrier v2.
    let denom = g(fs2, u2) * g(u2, v2);
    if denom.abs() <= SING_TOL {
        return Err(Error::invariant("second source's own route into the carrier vanishes"));
    }
    let y2 = -(g(fs2, u1) * g(u1, v2)) / denom;
    if y2.abs() <= SING_TOL {
        return Err(Error::invariant("second source does not feed the snake's early node"));
    }
    // Late pair: null the first stream's leak into the second destination.
    let f11 = g(fs1, u1) * g(u1, v1);
    let f21 = g(fs1, u1) * g(u1, v2);
    if f21.abs() <= SING_TOL {
        return Err(Error::invariant("the snake's bridge gain vanishes"));
    }
    let dv2 = g(v2, fd2);
    if dv2.abs() <= SING_TOL {
        return Err(Error::invariant("the snake's drain gain vanishes"));
    }
    let x2 = -(g(v1, fd2) * f11) / (dv2 * f21);
    if x2.abs() <= SING_TOL {
        return Err(Error::invariant("late-layer scaling collapses to zero"));
    }
    Ok(GrailOutcome::Scalars {
        early: [(u1, 1.0), (u2, y2)],
        late: [(v1, 1.0), (v2, x2)],
    })
}

/// Build the scheme for a snake layout: the two cross routes plus the
/// feed, bridge and drain segments are the active set, and the two
/// width-two layers holding the snake's turn nodes carry the scalars.
pub fn grail_scheme(net: &LayeredNetwork, w: &GrailWitness) -> Result<Scheme> {
    let active = w
        .p12
        .node_set()
        .union(&w.p21.node_set())
        .union(&w.feed.node_set())
        .union(&w.bridge.node_set())
        .union(&w.drain.node_set());
    let la = net.layer_of(w.wa);
    let lb = net.layer_of(w.wb);
    if la >= lb || la < 2 || lb >= net.num_layers() {
        return Err(Error::invariant("snake turn nodes must sit on distinct interior layers"));
    }
    let (sub, map) = net.induced_with_map(&active)?;
    let frame = if w.exchanged {
        StreamFrame::crossed(&sub)
    } else {
        StreamFrame::straight(&sub)
    };
    let cond = build_condensed(&sub, &[la, lb])?;
    if cond.width(1) != 2 || cond.width(2) != 2 {
        return Err(Error::invariant("snake layout must have width-two turn layers"));
    }
    match synth_grail(&cond, &frame)? {
        GrailOutcome::Scalars { early, late } => {
            let mut scaled: BTreeMap<usize, f64> = BTreeMap::new();
            for layer in [early, late] {
                let m = layer[0].1.abs().max(layer[1].1.abs());
                for (sub_ix, x) in layer {
                    scaled.insert(map[sub_ix], x / m);
                }
            }
            assemble_af(net, &active, &scaled, &[], AfShape::Grail)
        }
        GrailOutcome::Reduce222 { keep } => {
            assemble_ia222(net, &active, [map[keep[0]], map[keep[1]]], Vec::new())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{classify_sum_dof, SumDofCase};
    use crate::fixtures;
    use crate::netmodel::NetworkBuilder;
    use crate::schemes::synthesize;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn y_stage_primary_solution_nulls_and_keeps() {
        let c_null = [1.0, 2.0, 3.0];
        let c_keep = [4.0, 5.0, 6.0];
        let y = solve_y_stage(&c_null, &c_keep).unwrap();
        assert_eq!(y, vec![-5.0, 1.0, 1.0]);
        assert_eq!(dot(&c_null, &y), 0.0);
        assert!(dot(&c_keep, &y).abs() > 1.0);
    }

    #[test]
    fn y_stage_falls_back_when_kept_source_cancels() {
        // The primary candidate (-5, 1, 1) also nulls the kept row, so the
        // joint pair system plus a blend of the primary must take over.
        let c_null = [1.0, 2.0, 3.0];
        let c_keep = [1.0, 2.5, 2.5];
        let y = solve_y_stage(&c_null, &c_keep).unwrap();
        assert!(dot(&c_null, &y).abs() < 1e-12);
        assert!((dot(&c_keep, &y) - 1.0).abs() < 1e-9);
        let m = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(y.iter().all(|v| v.abs() > 1e-9 * m), "{y:?}");
    }

    #[test]
    fn y_stage_rejects_lone_interfering_column() {
        assert!(solve_y_stage(&[1.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn one_layer_ladder_reaches_the_exact_sum_on_the_condensable_net() {
        // Both pair solves leave the other diagonal at exactly zero here,
        // so the accepted candidate is their sum and the transfer is the
        // identity up to normalization.
        let net = fixtures::five_layer_condensable();
        let cond = build_condensed(&net, &[3]).unwrap();
        let frame = StreamFrame::straight(&net);
        let x = synth_af_single_key(&cond, &frame).unwrap();
        assert_eq!(x.len(), 3);
        assert!(x.iter().all(|v| v.abs() > 0.0), "sum candidate fills every slot: {x:?}");
        let src = source_columns(&cond, &frame).unwrap();
        let dst = dest_rows(&cond, &frame).unwrap();
        let t = frame_transfer(&src, &dst, &x);
        assert!(t[0][1].abs() < 1e-12 && t[1][0].abs() < 1e-12, "{t:?}");
        assert!((t[0][0] - t[1][1]).abs() < 1e-12 * t[0][0].abs());
    }

    #[test]
    fn one_layer_ladder_rejects_a_surviving_cross_route() {
        let net = fixtures::two_relay_full();
        let cond = build_condensed(&net, &[2]).unwrap();
        let frame = StreamFrame::straight(&net);
        assert!(synth_af_single_key(&cond, &frame).is_err());
    }

    fn three_column_net(d1_gains: [f64; 3], d2_gains: [f64; 3]) -> crate::netmodel::LayeredNetwork {
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("m1", 2)
            .node("m2", 2)
            .node("m3", 2)
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "m1", 1.0)
            .edge("s1", "m2", 1.0)
            .edge("s1", "m3", 1.0)
            .edge("s2", "m1", 1.0)
            .edge("s2", "m2", 2.0)
            .edge("s2", "m3", 3.0)
            .edge("m1", "d1", d1_gains[0])
            .edge("m2", "d1", d1_gains[1])
            .edge("m3", "d1", d1_gains[2])
            .edge("m1", "d2", d2_gains[0])
            .edge("m2", "d2", d2_gains[1])
            .edge("m3", "d2", d2_gains[2])
            .pairs("s1", "d1", "s2", "d2");
        b.build().unwrap()
    }

    #[test]
    fn triple_solve_pins_three_entries_and_keeps_the_diagonal() {
        let net = three_column_net([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]);
        let cond = build_condensed(&net, &[2]).unwrap();
        let frame = StreamFrame::straight(&net);
        let mids: [usize; 3] = cond.layers[1].clone().try_into().unwrap();
        match synth_af_three_column(&cond, mids, &frame).unwrap() {
            ThreeColumnOutcome::Scaling(x) => {
                let src = source_columns(&cond, &frame).unwrap();
                let dst = dest_rows(&cond, &frame).unwrap();
                let t = frame_transfer(&src, &dst, &x);
                assert!(t[0][1].abs() < 1e-9 && t[1][0].abs() < 1e-9, "{t:?}");
                assert!(t[0][0].abs() > 1e-6 && t[1][1].abs() > 1e-6, "{t:?}");
            }
            other => panic!("expected a scaling, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_triple_reduces_to_a_full_rank_pair() {
        // With the third column deaf to d2 and the structural zeros of a
        // hub layout, the primary solve leaves the second diagonal at
        // exactly zero and no secondary triple exists; the full-rank pair
        // fallback must fire.
        let mut b = NetworkBuilder::new();
        b.layers(3)
            .node("s1", 1)
            .node("s2", 1)
            .node("e", 2)
            .node("m", 2)
            .node("f", 2)
            .node("d1", 3)
            .node("d2", 3)
            .edge("s1", "e", 1.0)
            .edge("s1", "m", 1.0)
            .edge("s2", "m", 1.0)
            .edge("s2", "f", 1.0)
            .edge("m", "d1", 1.0)
            .edge("f", "d1", 1.0)
            .edge("e", "d2", 1.0)
            .pairs("s1", "d1", "s2", "d2");
        let net = b.build().unwrap();
        let cond = build_condensed(&net, &[2]).unwrap();
        let frame = StreamFrame::straight(&net);
        let e = net.require("e").unwrap();
        let m = net.require("m").unwrap();
        let f = net.require("f").unwrap();
        match synth_af_three_column(&cond, [e, m, f], &frame).unwrap() {
            ThreeColumnOutcome::Reduce222 { keep } => {
                assert!(keep.contains(&e), "the pair must span both streams: {keep:?}");
            }
            other => panic!("expected the width-two reduction, got {other:?}"),
        }
    }

    fn classify_and_synthesize(net: &crate::netmodel::LayeredNetwork) -> Scheme {
        let cls = classify_sum_dof(net).unwrap();
        synthesize(net, &cls).unwrap()
    }

    fn assert_verified(net: &crate::netmodel::LayeredNetwork, scheme: &Scheme) {
        let report = verify_scheme(net, scheme);
        assert!(report.pass, "failures: {:?}", report.failures);
    }

    #[test]
    fn parallel_pair_needs_no_scaling() {
        let net = fixtures::parallel();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::Trivial });
        assert_verified(&net, &scheme);
    }

    #[test]
    fn condensable_net_gets_a_single_scaled_layer() {
        let net = fixtures::five_layer_condensable();
        let cls = classify_sum_dof(&net).unwrap();
        assert_eq!(cls.case, SumDofCase::B);
        let scheme = synthesize(&net, &cls).unwrap();
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::SingleKey });
        // The smallest working subset is the bare route union (v2 stays
        // out), and the severing node v3 puts the scaled pair on layer 2.
        let a = net.require("a").unwrap();
        let b = net.require("b").unwrap();
        assert!(scheme.program(0, a).scale().is_some());
        assert_ne!(scheme.program(0, b).scale(), Some(1.0));
        assert_eq!(scheme.program(0, net.require("v2").unwrap()), RelayProgram::Silent);
        for name in ["v1", "v3", "c", "e"] {
            let v = net.require(name).unwrap();
            assert_eq!(scheme.program(0, v), RelayProgram::ScaleForward(1.0));
        }
        assert_verified(&net, &scheme);
    }

    #[test]
    fn full_diamond_becomes_a_width_two_bottleneck() {
        let net = fixtures::two_relay_full();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::Ia222);
        let info = scheme.ia222.as_ref().unwrap();
        let u1 = net.require("u1").unwrap();
        let u2 = net.require("u2").unwrap();
        assert_eq!(info.middle, [u1, u2]);
        let report = verify_scheme(&net, &scheme);
        assert!(report.pass, "failures: {:?}", report.failures);
        assert!(report.alignment_only);
    }

    #[test]
    fn hub_layout_scales_its_middle_trio() {
        let net = fixtures::butterfly_hub();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::Butterfly });
        assert_verified(&net, &scheme);
    }

    #[test]
    fn two_relay_trunk_scales_the_later_layer() {
        let net = fixtures::butterfly_span();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::Butterfly });
        // The trunk's last node m2 sits on layer 3 with the cross relays.
        let m2 = net.require("m2").unwrap();
        assert!(scheme.program(0, m2).scale().is_some());
        let m1 = net.require("m1").unwrap();
        assert_eq!(scheme.program(0, m1), RelayProgram::ScaleForward(1.0));
        assert_verified(&net, &scheme);
    }

    #[test]
    fn snake_layout_gets_its_two_scalar_pairs() {
        let net = fixtures::grail_ladder();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::Grail });
        assert_verified(&net, &scheme);
    }

    #[test]
    fn exchanged_snake_layout_also_diagonalizes() {
        let net = fixtures::crosslink_grail();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::Grail });
        assert_verified(&net, &scheme);
    }

    #[test]
    fn one_sided_leaks_use_the_full_single_key_ladder() {
        let net = fixtures::one_sided_leaks();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::SingleKey });
        assert_verified(&net, &scheme);
    }

    #[test]
    fn mirrored_one_sided_leaks_use_the_crossed_frame() {
        let net = fixtures::one_sided_leaks_swapped();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::SingleKey });
        assert_verified(&net, &scheme);
    }

    #[test]
    fn staggered_severing_nodes_scale_two_layers() {
        let net = fixtures::staggered_crossings();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::TwoKey });
        assert_verified(&net, &scheme);
    }

    #[test]
    fn level_severing_nodes_scale_one_wide_layer() {
        let net = fixtures::level_crossings();
        let scheme = classify_and_synthesize(&net);
        assert_eq!(scheme.kind, SchemeKind::AfDiagonal { shape: AfShape::ThreeColumn });
        assert_verified(&net, &scheme);
    }
}

