//! Brute-force reference implementations.
//!
//! Every nontrivial search in this crate has a definitional counterpart
//! here: path enumeration by layer-wise sequence building, disjoint pairs by
//! cartesian product and filtering, leak counts by enumerating all feeder
//! paths, manageability by trying every superset subnetwork outright, and
//! effective gains by summing gain products over all paths.
//!
//! These are deliberately naive — exponential where the definition is
//! exponential — and guarded by explicit size checks. The test suites hold
//! the production implementations to 100% agreement with them.

use crate::classifier::{CaseWitness, Classification, SumDof, SumDofCase};
use crate::interference::ManageableMode;
use crate::netmodel::{LayeredNetwork, NodeSet, Path};
use crate::{Error, Result};

/// Refuse path enumerations beyond this many raw layer-wise sequences.
const PATH_GUARD: u128 = 2_000_000;

/// Refuse subset enumerations beyond this complement size.
const SUBSET_GUARD: usize = 20;

/// Every directed path u⇝v inside `mask`, built layer by layer from raw
/// node sequences (no pruning beyond edge existence).
pub fn all_paths(net: &LayeredNetwork, mask: &NodeSet, u: usize, v: usize) -> Result<Vec<Path>> {
    if net.layered_path_bound() > PATH_GUARD {
        return Err(Error::SizeGuard(format!(
            "layered path bound {} exceeds the oracle limit",
            net.layered_path_bound()
        )));
    }
    if !mask.contains(u) || !mask.contains(v) {
        return Ok(Vec::new());
    }
    let (lu, lv) = (net.layer_of(u), net.layer_of(v));
    if lu > lv {
        return Ok(Vec::new());
    }
    let mut seqs: Vec<Vec<usize>> = vec![vec![u]];
    for _ in lu..lv {
        let mut next = Vec::new();
        for seq in &seqs {
            let tail = *seq.last().unwrap();
            for h in net.out_neighbors(mask, tail) {
                let mut ext = seq.clone();
                ext.push(h);
                next.push(ext);
            }
        }
        seqs = next;
    }
    Ok(seqs
        .into_iter()
        .filter(|s| *s.last().unwrap() == v)
        .map(Path::from_valid)
        .collect())
}

/// Every ordered vertex-disjoint pair (a⇝c, b⇝d) inside `mask`, by
/// filtering the cartesian product of the two path sets.
pub fn all_disjoint_pairs(
    net: &LayeredNetwork,
    mask: &NodeSet,
    a: usize,
    c: usize,
    b: usize,
    d: usize,
) -> Result<Vec<(Path, Path)>> {
    let ps = all_paths(net, mask, a, c)?;
    let qs = all_paths(net, mask, b, d)?;
    let mut out = Vec::new();
    for p in &ps {
        for q in &qs {
            if p.disjoint(q) {
                out.push((p.clone(), q.clone()));
            }
        }
    }
    Ok(out)
}

/// True iff some path u⇝v inside `mask` avoids every node of `avoid`.
fn reachable_avoiding(
    net: &LayeredNetwork,
    mask: &NodeSet,
    u: usize,
    v: usize,
    avoid: &NodeSet,
) -> Result<bool> {
    Ok(all_paths(net, &mask.minus(avoid), u, v)?
        .iter()
        .any(|p| p.node_set().is_disjoint_from(avoid)))
}

/// Definitional leak counts for a disjoint pair within `G[subset]`:
/// (n1, n2, n1_direct, n2_direct). Each candidate's feeder paths are
/// enumerated outright and tested for disjointness from the target path.
pub fn leak_counts(
    net: &LayeredNetwork,
    subset: &NodeSet,
    p11: &Path,
    p22: &Path,
) -> Result<(usize, usize, usize, usize)> {
    let t = net.terminals();
    let full = net.full_set();
    let count = |target: &Path, companion: &Path, src: usize, mask: &NodeSet| -> Result<(usize, usize)> {
        let target_set = target.node_set();
        let mut n = 0;
        let mut n_direct = 0;
        for va in mask.iter() {
            if target_set.contains(va) {
                continue;
            }
            let has_edge = net
                .edges()
                .iter()
                .any(|e| e.tail == va && target_set.contains(e.head));
            if !has_edge {
                continue;
            }
            let fed = all_paths(net, mask, src, va)?
                .iter()
                .any(|f| f.node_set().is_disjoint_from(&target_set));
            if fed {
                n += 1;
                if companion.contains(va) {
                    n_direct += 1;
                }
            }
        }
        Ok((n, n_direct))
    };
    let (n1, _) = count(p11, p22, t.s2, subset)?;
    let (n2, _) = count(p22, p11, t.s1, subset)?;
    let (_, n1_direct) = count(p11, p22, t.s2, &full)?;
    let (_, n2_direct) = count(p22, p11, t.s1, &full)?;
    Ok((n1, n2, n1_direct, n2_direct))
}

/// Whether any superset of the two paths satisfies `mode`, by enumerating
/// every subset of the complement.
pub fn manageable_exists(
    net: &LayeredNetwork,
    p11: &Path,
    p22: &Path,
    mode: ManageableMode,
) -> Result<bool> {
    Ok(minimal_manageable(net, p11, p22, mode)?.is_some())
}

/// The smallest qualifying superset (lexicographically least at that size),
/// or `None` — definitive, since every superset is tried.
pub fn minimal_manageable(
    net: &LayeredNetwork,
    p11: &Path,
    p22: &Path,
    mode: ManageableMode,
) -> Result<Option<NodeSet>> {
    let base = p11.node_set().union(&p22.node_set());
    let complement: Vec<usize> = net.full_set().minus(&base).iter().collect();
    if complement.len() > SUBSET_GUARD {
        return Err(Error::SizeGuard(format!(
            "complement of {} nodes exceeds the oracle subset limit",
            complement.len()
        )));
    }
    let mut best: Option<NodeSet> = None;
    for bits in 0u32..(1u32 << complement.len()) {
        let mut s = base;
        for (i, &node) in complement.iter().enumerate() {
            if bits >> i & 1 == 1 {
                s.insert(node);
            }
        }
        let (n1, n2, _, _) = leak_counts(net, &s, p11, p22)?;
        if mode.accepts(n1, n2) {
            let better = match &best {
                None => true,
                Some(b) => s.len() < b.len(),
            };
            if better {
                best = Some(s);
            }
        }
    }
    Ok(best)
}

/// Definitional key node: the first node of `p` whose removal leaves no
/// opposite-source-to-destination path inside `G[subset]`.
pub fn key_node(
    net: &LayeredNetwork,
    subset: &NodeSet,
    p: &Path,
    pair_index: usize,
) -> Result<Option<usize>> {
    let t = net.terminals();
    let src = t.src(3 - pair_index);
    let dst = t.dst(pair_index);
    if all_paths(net, subset, src, dst)?.is_empty() {
        return Ok(None);
    }
    for &v in p.nodes() {
        if !reachable_avoiding(net, subset, src, dst, &NodeSet::singleton(v))? {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Largest network the exhaustive case classifier accepts.
pub const CLASSIFY_NODE_LIMIT: usize = 14;

/// Definitional structural classification, with every search spelled out as
/// plain enumeration: connectivity and choke scans over all nodes and
/// edges, manageability over every disjoint route pair, shared trunks over
/// the full product of stream routes, snaking connections over every cross
/// pair, and the two 3/2 shapes read straight off the leak-count patterns
/// of every pair in both role orientations.
pub fn brute_force_case(net: &LayeredNetwork) -> Result<(SumDofCase, SumDof)> {
    if net.len() > CLASSIFY_NODE_LIMIT {
        return Err(Error::SizeGuard(format!(
            "{} nodes exceed the exhaustive classification limit of {CLASSIFY_NODE_LIMIT}",
            net.len()
        )));
    }
    let t = net.terminals();
    let full = net.full_set();
    let conn1 = !all_paths(net, &full, t.s1, t.d1)?.is_empty();
    let conn2 = !all_paths(net, &full, t.s2, t.d2)?.is_empty();
    if !conn1 || !conn2 {
        let sum = if conn1 != conn2 {
            SumDof::One
        } else {
            SumDof::Zero
        };
        return Ok((SumDofCase::Disconnected, sum));
    }
    let cut = |removed: &[usize], u: usize, v: usize| -> Result<bool> {
        let avoid = NodeSet::from_iter(removed.iter().copied());
        Ok(!reachable_avoiding(net, &full, u, v, &avoid)?)
    };
    // Choke node.
    for v in 0..net.len() {
        for i in [1usize, 2] {
            let di = t.dst(i);
            let sbar = t.src(3 - i);
            if cut(&[v], t.s1, di)?
                && cut(&[v], t.s2, di)?
                && cut(&[v], sbar, t.d1)?
                && cut(&[v], sbar, t.d2)?
            {
                return Ok((SumDofCase::A, SumDof::One));
            }
        }
    }
    // Choke edge.
    for e in net.edges() {
        for i in [1usize, 2] {
            let di = t.dst(i);
            let sbar = t.src(3 - i);
            if cut(&[e.head], t.s1, di)?
                && cut(&[e.head], t.s2, di)?
                && cut(&[e.tail], sbar, t.d1)?
                && cut(&[e.tail], sbar, t.d2)?
            {
                return Ok((SumDofCase::APrime, SumDof::One));
            }
        }
    }
    // Manageable pair. The full node set is itself a candidate superset,
    // so check it first; only pairs failing there need the subset scan.
    let pairs = all_disjoint_pairs(net, &full, t.s1, t.d1, t.s2, t.d2)?;
    for (p11, p22) in &pairs {
        let (n1, n2, _, _) = leak_counts(net, &full, p11, p22)?;
        if ManageableMode::Both.accepts(n1, n2) {
            return Ok((SumDofCase::B, SumDof::Two));
        }
    }
    for (p11, p22) in &pairs {
        if manageable_exists(net, p11, p22, ManageableMode::Both)? {
            return Ok((SumDofCase::B, SumDof::Two));
        }
    }
    // Shared trunk: two stream routes meeting in one contiguous stretch,
    // with a disjoint cross pair that avoids it.
    let p1s = all_paths(net, &full, t.s1, t.d1)?;
    let p2s = all_paths(net, &full, t.s2, t.d2)?;
    for p11 in &p1s {
        let set1 = p11.node_set();
        for p22 in &p2s {
            let inter = set1.intersect(&p22.node_set());
            if inter.is_empty() {
                continue;
            }
            let u0 = inter.iter().min_by_key(|&v| net.layer_of(v)).unwrap();
            let u1 = inter.iter().max_by_key(|&v| net.layer_of(v)).unwrap();
            let (Ok(a), Ok(b)) = (p11.slice(u0, u1), p22.slice(u0, u1)) else {
                continue;
            };
            if a.node_set() != inter || b.node_set() != inter {
                continue;
            }
            let mask = full.minus(&inter);
            if !all_disjoint_pairs(net, &mask, t.s1, t.d2, t.s2, t.d1)?.is_empty() {
                return Ok((SumDofCase::BPrime, SumDof::Two));
            }
        }
    }
    // Snaking connection across a disjoint cross pair, either reading.
    let crosses = all_disjoint_pairs(net, &full, t.s1, t.d2, t.s2, t.d1)?;
    for (p12, p21) in &crosses {
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
                    if net.reachable(wa, wb) && net.reachable(wb, dst) {
                        return Ok((SumDofCase::BPrime, SumDof::Two));
                    }
                }
            }
        }
    }
    // 3/2 shapes, read off role-space leak patterns. The first shape is
    // scanned across every pair before the second is considered.
    let role_patterns = |p1: &Path, p2: &Path| -> Result<[(usize, usize, usize, usize); 2]> {
        let (n1, n2, n1d, n2d) = leak_counts(net, &full, p1, p2)?;
        Ok([(n1, n1d, n2, n2d), (n2, n2d, n1, n1d)])
    };
    for (p1, p2) in &pairs {
        for (na, nad, nb, nbd) in role_patterns(p1, p2)? {
            if na >= 2 && nad == 1 && nb == 1 && nbd == 0 {
                return Ok((SumDofCase::C1, SumDof::ThreeHalves));
            }
        }
    }
    for (p1, p2) in &pairs {
        for (na, nad, _, _) in role_patterns(p1, p2)? {
            if na == 1 && nad == 1 {
                return Ok((SumDofCase::C2, SumDof::ThreeHalves));
            }
        }
    }
    Err(Error::Indeterminate(
        "exhaustive scan fits the network to no structural case".into(),
    ))
}

/// [`brute_force_case`] packaged as a [`Classification`]; the witness slot
/// records only that the exhaustive scanner settled the case.
pub fn brute_force_classify(net: &LayeredNetwork) -> Result<Classification> {
    let (case, sum_dof) = brute_force_case(net)?;
    Ok(Classification {
        case,
        sum_dof,
        witness: CaseWitness::ExhaustiveScan,
    })
}

/// Effective end-to-end gain from u to v with all intermediate nodes
/// forwarding: the sum over all u⇝v paths of the product of edge gains.
pub fn effective_gain(net: &LayeredNetwork, mask: &NodeSet, u: usize, v: usize) -> Result<f64> {
    if net.layer_of(u) == net.layer_of(v) {
        return Ok(if u == v { 1.0 } else { 0.0 });
    }
    let mut sum = 0.0;
    for p in all_paths(net, mask, u, v)? {
        let mut prod = 1.0;
        for w in p.nodes().windows(2) {
            prod *= net.gain(w[0], w[1]).expect("enumerated paths use stored edges");
        }
        sum += prod;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::interference;
    use crate::netmodel::{random_network, RandomNetConfig};

    #[test]
    fn path_enumeration_agrees_with_production() {
        let cfg = RandomNetConfig::default();
        for seed in 0..40u64 {
            let net = random_network(seed, &cfg);
            let t = net.terminals();
            let full = net.full_set();
            for (u, v) in [(t.s1, t.d1), (t.s1, t.d2), (t.s2, t.d1), (t.s2, t.d2)] {
                let reference = all_paths(&net, &full, u, v).unwrap();
                let bound = net.layered_path_bound() as usize;
                let production = net.enumerate_paths(&full, u, v, bound);
                let mut a: Vec<Vec<usize>> =
                    reference.iter().map(|p| p.nodes().to_vec()).collect();
                let mut b: Vec<Vec<usize>> =
                    production.iter().map(|p| p.nodes().to_vec()).collect();
                a.sort();
                b.sort();
                assert_eq!(a, b, "seed {seed}");
            }
        }
    }

    #[test]
    fn disjoint_pair_search_agrees_with_product_filter() {
        let cfg = RandomNetConfig::default();
        for seed in 0..60u64 {
            let net = random_network(seed, &cfg);
            let t = net.terminals();
            let full = net.full_set();
            let reference = all_disjoint_pairs(&net, &full, t.s1, t.d1, t.s2, t.d2).unwrap();
            let found = net.find_disjoint_pair(t.s1, t.d1, t.s2, t.d2);
            assert_eq!(reference.is_empty(), found.is_none(), "seed {seed}");
            if let Some((p, q)) = found {
                assert!(p.disjoint(&q));
            }
            // Enumerator completeness: counts agree too.
            let mut count = 0usize;
            let complete = net.for_each_disjoint_pair_in(
                &full,
                t.s1,
                t.d1,
                t.s2,
                t.d2,
                usize::MAX,
                &mut |_, _| {
                    count += 1;
                    true
                },
            );
            assert!(complete);
            assert_eq!(count, reference.len(), "seed {seed}");
        }
    }

    #[test]
    fn leak_counts_agree_with_production() {
        let cfg = RandomNetConfig::default();
        let mut checked = 0;
        for seed in 0..80u64 {
            let net = random_network(seed, &cfg);
            let t = net.terminals();
            let Some((p11, p22)) = net.find_disjoint_pair(t.s1, t.d1, t.s2, t.d2) else {
                continue;
            };
            let full = net.full_set();
            let (n1, n2, n1d, n2d) = leak_counts(&net, &full, &p11, &p22).unwrap();
            let prof = interference::interference_profile(&net, &full, &p11, &p22).unwrap();
            assert_eq!((n1, n2, n1d, n2d), (prof.n1, prof.n2, prof.n1_direct, prof.n2_direct));
            // Also cross-check a proper subset: the bare pair.
            let base = p11.node_set().union(&p22.node_set());
            let (m1, m2, _, _) = leak_counts(&net, &base, &p11, &p22).unwrap();
            let fast = interference::leak_counts(&net, &base, &p11, &p22);
            assert_eq!((m1, m2), fast, "seed {seed}");
            checked += 1;
        }
        assert!(checked >= 25);
    }

    #[test]
    fn manageable_search_agrees_with_subset_enumeration() {
        let cfg = RandomNetConfig {
            max_layers: 5,
            max_width: 3,
            ..RandomNetConfig::default()
        };
        let mut checked = 0;
        for seed in 0..80u64 {
            let net = random_network(seed, &cfg);
            if net.len() > 12 {
                continue;
            }
            let t = net.terminals();
            let Some((p11, p22)) = net.find_disjoint_pair(t.s1, t.d1, t.s2, t.d2) else {
                continue;
            };
            for mode in [
                ManageableMode::Both,
                ManageableMode::Pair1Only,
                ManageableMode::Pair2Only,
            ] {
                let reference = manageable_exists(&net, &p11, &p22, mode).unwrap();
                let search =
                    interference::find_manageable_subset(&net, &p11, &p22, mode).unwrap();
                assert!(search.exhaustive);
                assert_eq!(reference, search.subset.is_some(), "seed {seed} {mode:?}");
                if let (Some(found), Some(min)) = (
                    search.subset,
                    minimal_manageable(&net, &p11, &p22, mode).unwrap(),
                ) {
                    assert_eq!(found.len(), min.len(), "seed {seed} {mode:?}");
                }
            }
            checked += 1;
        }
        assert!(checked >= 20);
    }

    #[test]
    fn key_node_agrees_with_removal_scan() {
        let cfg = RandomNetConfig::default();
        let mut checked = 0;
        for seed in 0..60u64 {
            let net = random_network(seed, &cfg);
            let t = net.terminals();
            let Some((p11, p22)) = net.find_disjoint_pair(t.s1, t.d1, t.s2, t.d2) else {
                continue;
            };
            let full = net.full_set();
            for (p, i) in [(&p11, 1), (&p22, 2)] {
                let reference = key_node(&net, &full, p, i).unwrap();
                let production = interference::find_key_node(&net, &full, p, i).map(|k| k.node);
                assert_eq!(reference, production, "seed {seed} pair {i}");
            }
            checked += 1;
        }
        assert!(checked >= 25);
    }

    #[test]
    fn exhaustive_classification_agrees_on_fixtures() {
        let nets = [
            fixtures::bottleneck(),
            fixtures::parallel(),
            fixtures::two_relay_full(),
            fixtures::interference_demo(),
            fixtures::five_layer_condensable(),
            fixtures::butterfly_hub(),
            fixtures::butterfly_span(),
            fixtures::grail_ladder(),
            fixtures::funnel_shallow(),
            fixtures::crosslink_even(),
            fixtures::crosslink_even_swapped(),
        ];
        for net in nets {
            assert!(net.len() <= CLASSIFY_NODE_LIMIT);
            let (case, sum) = brute_force_case(&net).unwrap();
            let c = crate::classifier::classify_sum_dof(&net).unwrap();
            assert_eq!((case, sum), (c.case, c.sum_dof), "{net:?}");
        }
    }

    #[test]
    fn exhaustive_classification_agrees_on_random_networks() {
        let cfg = RandomNetConfig {
            max_layers: 5,
            max_width: 3,
            ..RandomNetConfig::default()
        };
        let mut checked = 0;
        for seed in 1000..1080u64 {
            let net = random_network(seed, &cfg);
            if net.len() > 12 {
                continue;
            }
            let (case, sum) = brute_force_case(&net).unwrap();
            let c = crate::classifier::classify_sum_dof(&net).unwrap();
            assert_eq!((case, sum), (c.case, c.sum_dof), "seed {seed}");
            checked += 1;
        }
        assert!(checked >= 30, "only {checked} networks were small enough");
    }

    #[test]
    fn effective_gain_closed_forms() {
        let par = fixtures::parallel();
        let full = par.full_set();
        let t = par.terminals();
        assert_eq!(effective_gain(&par, &full, t.s1, t.d1).unwrap(), 1.0);
        assert_eq!(effective_gain(&par, &full, t.s1, t.d2).unwrap(), 0.0);

        let net = fixtures::five_layer_condensable();
        let full = net.full_set();
        let s2 = net.require("s2").unwrap();
        let v3 = net.require("v3").unwrap();
        let v2 = net.require("v2").unwrap();
        let d2 = net.require("d2").unwrap();
        let expect = fixtures::condensable_gain(&net, 2) * fixtures::condensable_gain(&net, 7)
            + fixtures::condensable_gain(&net, 3) * fixtures::condensable_gain(&net, 8);
        let got = effective_gain(&net, &full, s2, v3).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect.abs());
        assert_eq!(effective_gain(&net, &full, v2, d2).unwrap(), 0.0);
    }
}
