//! Condensed networks: collapse forwarding layers into effective gains.
//!
//! When every node outside a few chosen layers simply forwards its received
//! signal, the network behaves like a shallow one whose link gains are
//! path-sums of gain products (the effective gains ĥ) and whose additive
//! noises are correlated across nodes — each forwarding relay's unit noise
//! rides every route downstream of it. This module computes:
//!
//! - [`effective_gain`]: ĥ(u, v) by dynamic programming over layers;
//! - [`build_condensed`]: a staged condensed network (2–4 layers) with
//!   exact per-stage noise covariance;
//! - [`TransferMatrix`] products through per-layer scaling vectors;
//! - [`generically_nonzero`]: whether a gain polynomial survives generic
//!   gain re-draws (used for invertibility arguments).

use nalgebra::DMatrix;

use crate::netmodel::{LayeredNetwork, NodeSet};
use crate::{Error, Result};

/// Number of independent gain re-draws for [`generically_nonzero`].
pub const REDRAW_COUNT: u64 = 8;

/// Relative tolerance (against the monomial scale) below which an evaluated
/// gain polynomial counts as zero.
pub const NONZERO_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Effective gains
// ---------------------------------------------------------------------------

/// Gain accumulated from `u` to every node, assuming all mask nodes forward.
fn forward_values(net: &LayeredNetwork, mask: &NodeSet, u: usize, signed: bool) -> Vec<f64> {
    let mut value = vec![0.0; net.len()];
    value[u] = 1.0;
    let (lu, r) = (net.layer_of(u), net.num_layers());
    for j in lu..r {
        for &t in net.layer(j) {
            if value[t] == 0.0 || (t != u && !mask.contains(t)) {
                continue;
            }
            for e in net.edges().iter().filter(|e| e.tail == t) {
                if !mask.contains(e.head) {
                    continue;
                }
                let g = if signed { e.gain } else { e.gain.abs() };
                value[e.head] += value[t] * g;
            }
        }
    }
    value
}

/// Effective gain ĥ(u, v): the sum over all u⇝v paths through `forwarders`
/// of the product of edge gains. Within one layer, ĥ(u, u) = 1 and
/// ĥ(u, v) = 0 for u ≠ v.
pub fn effective_gain(
    net: &LayeredNetwork,
    forwarders: &NodeSet,
    u: usize,
    v: usize,
) -> Result<f64> {
    if net.layer_of(u) > net.layer_of(v) {
        return Err(Error::InvalidArgument(format!(
            "effective gain endpoints out of layer order: `{}` (layer {}) to `{}` (layer {})",
            net.name(u),
            net.layer_of(u),
            net.name(v),
            net.layer_of(v)
        )));
    }
    if net.layer_of(u) == net.layer_of(v) {
        return Ok(if u == v { 1.0 } else { 0.0 });
    }
    let mask = forwarders.with(u).with(v);
    Ok(forward_values(net, &mask, u, true)[v])
}

/// Like [`effective_gain`] but with all gains replaced by their absolute
/// values: the natural magnitude scale of the path-sum polynomial.
pub fn effective_gain_scale(
    net: &LayeredNetwork,
    forwarders: &NodeSet,
    u: usize,
    v: usize,
) -> Result<f64> {
    if net.layer_of(u) > net.layer_of(v) {
        return Err(Error::InvalidArgument(
            "effective gain endpoints out of layer order".into(),
        ));
    }
    if net.layer_of(u) == net.layer_of(v) {
        return Ok(if u == v { 1.0 } else { 0.0 });
    }
    let mask = forwarders.with(u).with(v);
    Ok(forward_values(net, &mask, u, false)[v])
}

// ---------------------------------------------------------------------------
// Condensed networks
// ---------------------------------------------------------------------------

/// One hop of a condensed network: effective gains and accumulated noise
/// between two consecutive condensed layers.
#[derive(Debug, Clone)]
pub struct Stage {
    /// Source-network node indices of the input layer (matrix columns).
    pub from: Vec<usize>,
    /// Source-network node indices of the output layer (matrix rows).
    pub to: Vec<usize>,
    /// gain[(r, c)] = ĥ(from[c], to[r]).
    pub gain: DMatrix<f64>,
    /// Covariance of the noise entering `to`, accumulated from every
    /// forwarding relay strictly between the two layers plus each receiving
    /// node's own unit noise. Positive semidefinite by construction.
    pub noise_cov: DMatrix<f64>,
}

/// A 2–4 layer condensed view of a layered network. Layer node lists hold
/// indices into the source network, so scaling programs synthesized here
/// re-expand directly onto original nodes.
#[derive(Debug, Clone)]
pub struct CondensedNetwork {
    /// Condensed layers: sources, the chosen key layers, destinations.
    pub layers: Vec<Vec<usize>>,
    /// 1-based layer indices in the source network, parallel to `layers`.
    pub source_layers: Vec<usize>,
    pub stages: Vec<Stage>,
}

impl CondensedNetwork {
    /// Effective gain from `u` to `v` across one condensed stage; `None`
    /// when the two nodes do not sit on consecutive condensed layers.
    pub fn eff_gain(&self, u: usize, v: usize) -> Option<f64> {
        for stage in &self.stages {
            if let (Some(c), Some(r)) = (
                stage.from.iter().position(|&n| n == u),
                stage.to.iter().position(|&n| n == v),
            ) {
                return Some(stage.gain[(r, c)]);
            }
        }
        None
    }

    /// Width of condensed layer `k` (0-based).
    pub fn width(&self, k: usize) -> usize {
        self.layers[k].len()
    }

    /// End-to-end transfer matrix when each key layer applies the given
    /// scaling vector (one vector per key layer, in layer order) and the
    /// destinations simply receive.
    pub fn transfer_through(&self, scalings: &[Vec<f64>]) -> Result<TransferMatrix> {
        if scalings.len() + 2 != self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} scaling vectors, got {}",
                self.layers.len() - 2,
                scalings.len()
            )));
        }
        let mut acc = self.stages[0].gain.clone();
        for (k, x) in scalings.iter().enumerate() {
            if x.len() != self.width(k + 1) {
                return Err(Error::InvalidArgument(format!(
                    "scaling vector {} has length {}, layer width is {}",
                    k,
                    x.len(),
                    self.width(k + 1)
                )));
            }
            let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(x));
            acc = &self.stages[k + 1].gain * diag * acc;
        }
        Ok(TransferMatrix {
            rows: self.layers[self.layers.len() - 1].clone(),
            cols: self.layers[0].clone(),
            entries: acc,
        })
    }
}

/// A labeled real matrix of end-to-end (or layer-to-layer) coefficients.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    /// Node indices labeling the rows (receivers).
    pub rows: Vec<usize>,
    /// Node indices labeling the columns (transmitters).
    pub cols: Vec<usize>,
    pub entries: DMatrix<f64>,
}

impl TransferMatrix {
    /// Entry addressed by node indices.
    pub fn at(&self, row_node: usize, col_node: usize) -> Option<f64> {
        let r = self.rows.iter().position(|&n| n == row_node)?;
        let c = self.cols.iter().position(|&n| n == col_node)?;
        Some(self.entries[(r, c)])
    }

    /// Frobenius norm of the matrix.
    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Build the condensed network over the given key layers (each strictly
/// between the first and last layer; at most two, ascending). All nodes
/// outside the kept layers forward with unit scale.
pub fn build_condensed(net: &LayeredNetwork, key_layers: &[usize]) -> Result<CondensedNetwork> {
    let r = net.num_layers();
    if key_layers.len() > 2 {
        return Err(Error::InvalidArgument(
            "at most two key layers are supported".into(),
        ));
    }
    for w in key_layers.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidArgument(
                "key layers must be strictly ascending".into(),
            ));
        }
    }
    for &k in key_layers {
        if k <= 1 || k >= r {
            return Err(Error::InvalidArgument(format!(
                "key layer {k} must lie strictly between 1 and {r}"
            )));
        }
    }
    let mut source_layers = vec![1];
    source_layers.extend_from_slice(key_layers);
    source_layers.push(r);

    let layers: Vec<Vec<usize>> = source_layers.iter().map(|&j| net.layer(j).to_vec()).collect();
    let has_input = |v: usize| net.edges().iter().any(|e| e.head == v);

    let mut stages = Vec::new();
    for w in source_layers.windows(2) {
        let (la, lb) = (w[0], w[1]);
        let from = net.layer(la).to_vec();
        let to = net.layer(lb).to_vec();
        // Forwarders for this hop: everything strictly between the layers.
        let mut forwarders = NodeSet::EMPTY;
        for j in la + 1..lb {
            for &v in net.layer(j) {
                forwarders.insert(v);
            }
        }
        let mut gain = DMatrix::zeros(to.len(), from.len());
        for (c, &u) in from.iter().enumerate() {
            for (r_ix, &v) in to.iter().enumerate() {
                gain[(r_ix, c)] = effective_gain(net, &forwarders, u, v)?;
            }
        }
        // Noise: every receiving relay strictly between the layers injects
        // unit noise that rides its forward gains into `to`; each receiving
        // `to` node adds its own unit noise.
        let mut noise_cov = DMatrix::zeros(to.len(), to.len());
        for src in forwarders.iter().filter(|&v| has_input(v)) {
            let coeff: Vec<f64> = to
                .iter()
                .map(|&v| effective_gain(net, &forwarders, src, v))
                .collect::<Result<_>>()?;
            let col = nalgebra::DVector::from_vec(coeff);
            noise_cov += &col * col.transpose();
        }
        for (r_ix, &v) in to.iter().enumerate() {
            if has_input(v) {
                noise_cov[(r_ix, r_ix)] += 1.0;
            }
        }
        stages.push(Stage {
            from,
            to,
            gain,
            noise_cov,
        });
    }
    Ok(CondensedNetwork {
        layers,
        source_layers,
        stages,
    })
}

// ---------------------------------------------------------------------------
// Gain polynomials and generic non-vanishing
// ---------------------------------------------------------------------------

/// A polynomial in the network's edge gains, built from effective-gain
/// queries. Evaluating against re-drawn gains decides whether the
/// polynomial is identically zero or only incidentally small.
#[derive(Debug, Clone)]
pub enum GainExpr {
    /// ĥ(u, v) through the evaluation mask.
    Gain(usize, usize),
    Const(f64),
    Neg(Box<GainExpr>),
    Sum(Vec<GainExpr>),
    Prod(Vec<GainExpr>),
    /// Determinant of a square matrix of sub-expressions.
    Det(Vec<Vec<GainExpr>>),
}

impl GainExpr {
    /// Evaluate against the given network's gains.
    pub fn eval(&self, net: &LayeredNetwork, forwarders: &NodeSet) -> Result<f64> {
        Ok(match self {
            GainExpr::Gain(u, v) => effective_gain(net, forwarders, *u, *v)?,
            GainExpr::Const(c) => *c,
            GainExpr::Neg(e) => -e.eval(net, forwarders)?,
            GainExpr::Sum(es) => {
                let mut s = 0.0;
                for e in es {
                    s += e.eval(net, forwarders)?;
                }
                s
            }
            GainExpr::Prod(es) => {
                let mut p = 1.0;
                for e in es {
                    p *= e.eval(net, forwarders)?;
                }
                p
            }
            GainExpr::Det(rows) => {
                let n = rows.len();
                let mut m = DMatrix::zeros(n, n);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::InvalidArgument(
                            "determinant matrix must be square".into(),
                        ));
                    }
                    for (j, e) in row.iter().enumerate() {
                        m[(i, j)] = e.eval(net, forwarders)?;
                    }
                }
                m.determinant()
            }
        })
    }

    /// Magnitude scale of the polynomial: all monomials taken with positive
    /// sign (determinants become permanents), so cancellation cannot hide
    /// the natural size of the expression.
    pub fn scale(&self, net: &LayeredNetwork, forwarders: &NodeSet) -> Result<f64> {
        Ok(match self {
            GainExpr::Gain(u, v) => effective_gain_scale(net, forwarders, *u, *v)?,
            GainExpr::Const(c) => c.abs(),
            GainExpr::Neg(e) => e.scale(net, forwarders)?,
            GainExpr::Sum(es) => {
                let mut s = 0.0;
                for e in es {
                    s += e.scale(net, forwarders)?;
                }
                s
            }
            GainExpr::Prod(es) => {
                let mut p = 1.0;
                for e in es {
                    p *= e.scale(net, forwarders)?;
                }
                p
            }
            GainExpr::Det(rows) => {
                let n = rows.len();
                let mut m = vec![vec![0.0; n]; n];
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        m[i][j] = e.scale(net, forwarders)?;
                    }
                }
                permanent(&m)
            }
        })
    }
}

/// Permanent of a small square matrix (row-expansion).
fn permanent(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for j in 0..n {
        if m[0][j] == 0.0 {
            continue;
        }
        let minor: Vec<Vec<f64>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, &x)| x)
                    .collect()
            })
            .collect();
        total += m[0][j] * permanent(&minor);
    }
    total
}

/// Whether `expr` is nonzero as a polynomial in the edge gains: evaluates
/// it under [`REDRAW_COUNT`] independent generic gain re-draws and reports
/// true iff any evaluation clears [`NONZERO_TOL`] relative to the
/// expression's monomial scale. A structurally zero polynomial always
/// reports false; a nonzero polynomial fails only on a measure-zero event.
pub fn generically_nonzero(net: &LayeredNetwork, forwarders: &NodeSet, expr: &GainExpr) -> bool {
    for k in 0..REDRAW_COUNT {
        let redrawn = net.with_generic_gains(0x9E37_79B9_7F4A_7C15 ^ (k + 1));
        let value = match expr.eval(&redrawn, forwarders) {
            Ok(v) => v,
            Err(_) => return false,
        };
        let scale = expr.scale(&redrawn, forwarders).unwrap_or(0.0);
        if scale == 0.0 {
            return false; // no monomials at all
        }
        if value.abs() > NONZERO_TOL * scale {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netmodel::{random_network, RandomNetConfig};
    use crate::oracle;

    #[test]
    fn condensable_fixture_identities() {
        let net = fixtures::five_layer_condensable();
        let full = net.full_set();
        let s2 = net.require("s2").unwrap();
        let v2 = net.require("v2").unwrap();
        let v3 = net.require("v3").unwrap();
        let d2 = net.require("d2").unwrap();
        let expect = fixtures::condensable_gain(&net, 2) * fixtures::condensable_gain(&net, 7)
            + fixtures::condensable_gain(&net, 3) * fixtures::condensable_gain(&net, 8);
        let got = effective_gain(&net, &full, s2, v3).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect.abs());
        assert_eq!(effective_gain(&net, &full, v2, d2).unwrap(), 0.0);

        let par = fixtures::parallel();
        let t = par.terminals();
        assert_eq!(effective_gain(&par, &par.full_set(), t.s1, t.d1).unwrap(), 1.0);
    }

    #[test]
    fn condensable_fixture_builds_three_layer_view() {
        let net = fixtures::five_layer_condensable();
        let cond = build_condensed(&net, &[3]).unwrap();
        assert_eq!(cond.layers.len(), 3);
        let names: Vec<&str> = cond.layers[1].iter().map(|&v| net.name(v)).collect();
        assert_eq!(names, ["v1", "v2", "v3"]);
        let ix = |n: &str| net.require(n).unwrap();
        // Zero pattern of the condensed hops.
        for (u, v) in [("s1", "v1"), ("s1", "v2"), ("v1", "d1"), ("v2", "d2"), ("v3", "d2")] {
            assert_eq!(cond.eff_gain(ix(u), ix(v)), Some(0.0), "{u}->{v}");
        }
        for (u, v) in [
            ("s1", "v3"),
            ("s2", "v1"),
            ("s2", "v2"),
            ("s2", "v3"),
            ("v1", "d2"),
            ("v2", "d1"),
            ("v3", "d1"),
        ] {
            assert!(cond.eff_gain(ix(u), ix(v)).unwrap() != 0.0, "{u}->{v}");
        }
    }

    #[test]
    fn relay_layer_condensation_is_identity() {
        let net = fixtures::two_relay_full();
        let cond = build_condensed(&net, &[2]).unwrap();
        for stage in &cond.stages {
            for (c, &u) in stage.from.iter().enumerate() {
                for (r, &v) in stage.to.iter().enumerate() {
                    assert_eq!(stage.gain[(r, c)], net.gain(u, v).unwrap_or(0.0));
                }
            }
            // No intermediate relays: noise is each receiver's own unit.
            for i in 0..stage.to.len() {
                for j in 0..stage.to.len() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(stage.noise_cov[(i, j)], expect);
                }
            }
        }
    }

    #[test]
    fn effective_gain_matches_path_sum_oracle() {
        let cfg = RandomNetConfig::default();
        for seed in 0..50u64 {
            let net = random_network(seed, &cfg);
            let full = net.full_set();
            let t = net.terminals();
            for (u, v) in [(t.s1, t.d1), (t.s1, t.d2), (t.s2, t.d1), (t.s2, t.d2)] {
                let dp = effective_gain(&net, &full, u, v).unwrap();
                let reference = oracle::effective_gain(&net, &full, u, v).unwrap();
                let scale = effective_gain_scale(&net, &full, u, v).unwrap().max(1.0);
                assert!((dp - reference).abs() <= 1e-12 * scale, "seed {seed}");
            }
        }
    }

    #[test]
    fn effective_gain_matches_chained_matrix_product() {
        let cfg = RandomNetConfig::default();
        for seed in 100..200u64 {
            let net = random_network(seed, &cfg);
            let r = net.num_layers();
            // Product of per-hop adjacency-gain matrices.
            let mut acc = DMatrix::<f64>::identity(net.layer(1).len(), net.layer(1).len());
            for j in 1..r {
                let (rows, cols) = (net.layer(j + 1), net.layer(j));
                let mut a = DMatrix::zeros(rows.len(), cols.len());
                for (ri, &h) in rows.iter().enumerate() {
                    for (ci, &t) in cols.iter().enumerate() {
                        a[(ri, ci)] = net.gain(t, h).unwrap_or(0.0);
                    }
                }
                acc = a * acc;
            }
            let full = net.full_set();
            for (ci, &u) in net.layer(1).iter().enumerate() {
                for (ri, &v) in net.layer(r).iter().enumerate() {
                    let dp = effective_gain(&net, &full, u, v).unwrap();
                    let scale = effective_gain_scale(&net, &full, u, v).unwrap().max(1.0);
                    assert!((dp - acc[(ri, ci)]).abs() <= 1e-12 * scale, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn condensed_noise_is_psd_with_unit_floor() {
        let cfg = RandomNetConfig::default();
        for seed in 0..40u64 {
            let net = random_network(seed, &cfg);
            let r = net.num_layers();
            if r < 3 {
                continue;
            }
            let key = (r + 1) / 2;
            let cond = build_condensed(&net, &[key]).unwrap();
            for stage in &cond.stages {
                let eig = stage.noise_cov.clone().symmetric_eigen();
                for ev in eig.eigenvalues.iter() {
                    assert!(*ev >= -1e-9, "seed {seed}: eigenvalue {ev}");
                }
                for (i, &v) in stage.to.iter().enumerate() {
                    if net.edges().iter().any(|e| e.head == v) {
                        assert!(stage.noise_cov[(i, i)] >= 1.0, "seed {seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_structure_matches_reachability() {
        let cfg = RandomNetConfig::default();
        for seed in 0..100u64 {
            let net = random_network(seed, &cfg);
            let full = net.full_set();
            let t = net.terminals();
            for (u, v) in [(t.s1, t.d1), (t.s1, t.d2), (t.s2, t.d1), (t.s2, t.d2)] {
                let nonzero = generically_nonzero(&net, &full, &GainExpr::Gain(u, v));
                assert_eq!(nonzero, net.reachable(u, v), "seed {seed}");
            }
        }
    }

    #[test]
    fn disjoint_paths_imply_invertible_transfer() {
        let cfg = RandomNetConfig::default();
        let mut checked = 0;
        for seed in 0..80u64 {
            let net = random_network(seed, &cfg);
            let t = net.terminals();
            if net
                .find_disjoint_pair_either(&net.full_set(), (t.s1, t.s2), (t.d1, t.d2))
                .is_none()
            {
                continue;
            }
            let det = GainExpr::Det(vec![
                vec![GainExpr::Gain(t.s1, t.d1), GainExpr::Gain(t.s2, t.d1)],
                vec![GainExpr::Gain(t.s1, t.d2), GainExpr::Gain(t.s2, t.d2)],
            ]);
            assert!(
                generically_nonzero(&net, &net.full_set(), &det),
                "seed {seed}: disjoint paths exist but transfer determinant vanished"
            );
            checked += 1;
        }
        assert!(checked >= 25);
    }

    #[test]
    fn generic_nonzero_examples() {
        let net = fixtures::two_relay_full();
        let t = net.terminals();
        let det = GainExpr::Det(vec![
            vec![
                GainExpr::Gain(t.s1, net.require("u1").unwrap()),
                GainExpr::Gain(t.s2, net.require("u1").unwrap()),
            ],
            vec![
                GainExpr::Gain(t.s1, net.require("u2").unwrap()),
                GainExpr::Gain(t.s2, net.require("u2").unwrap()),
            ],
        ]);
        assert!(generically_nonzero(&net, &net.full_set(), &det));

        let par = fixtures::parallel();
        let tp = par.terminals();
        assert!(!generically_nonzero(
            &par,
            &par.full_set(),
            &GainExpr::Gain(tp.s1, tp.d2)
        ));

        let cond = fixtures::five_layer_condensable();
        let v2 = cond.require("v2").unwrap();
        let d2 = cond.require("d2").unwrap();
        assert!(!generically_nonzero(
            &cond,
            &cond.full_set(),
            &GainExpr::Gain(v2, d2)
        ));
    }

    #[test]
    fn transfer_through_scalings() {
        let net = fixtures::two_relay_full();
        let cond = build_condensed(&net, &[2]).unwrap();
        let t = net.terminals();
        let tm = cond.transfer_through(&[vec![1.0, 1.0]]).unwrap();
        // With unit scaling the end-to-end entry is the two-path sum.
        let u1 = net.require("u1").unwrap();
        let u2 = net.require("u2").unwrap();
        let expect = net.gain(t.s1, u1).unwrap() * net.gain(u1, t.d1).unwrap()
            + net.gain(t.s1, u2).unwrap() * net.gain(u2, t.d1).unwrap();
        let got = tm.at(t.d1, t.s1).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect.abs());
        // Wrong arity is rejected.
        assert!(cond.transfer_through(&[]).is_err());
        assert!(cond.transfer_through(&[vec![1.0]]).is_err());
    }
}
