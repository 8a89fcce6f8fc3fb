//! Exhaustive stopping-time enumeration on small full trees: the
//! independent oracle for the backward recursion.
//!
//! A tree-adapted stopping time is encoded as the set of nodes where it
//! stops; along any root-to-leaf path the first flagged node is the stop,
//! and paths reaching a leaf stop there by force.  Enumeration walks the
//! tree once per subtree: either stop at the node, or continue and pick a
//! stopping time independently in every child subtree.

use super::ScenarioTree;
use crate::error::CoreError;
use crate::model::PayoffPair;
use crate::Result;
use serde::Serialize;

/// A stopping time as per-level stop flags on a full tree.
#[derive(Clone, Debug)]
pub struct StoppingTime {
    pub flags: Vec<Vec<bool>>,
}

impl StoppingTime {
    fn blank(tree: &ScenarioTree) -> Self {
        StoppingTime {
            flags: (0..=tree.depth())
                .map(|l| vec![false; tree.level_count(l)])
                .collect(),
        }
    }

    pub fn stops_at(&self, level: usize, idx: usize) -> bool {
        self.flags[level][idx]
    }
}

/// Number of tree-adapted stopping times on a full tree.
pub fn count_stopping_times(tree: &ScenarioTree) -> u128 {
    fn count_at(tree: &ScenarioTree, level: usize) -> u128 {
        // All nodes of one level of a full tree have isomorphic subtrees.
        if level == tree.depth() {
            return 1;
        }
        let per_child = count_at(tree, level + 1);
        let mut product = 1u128;
        for _ in 0..tree.branching() {
            product = product.saturating_mul(per_child);
        }
        product.saturating_add(1)
    }
    count_at(tree, 0)
}

/// Enumerates every tree-adapted stopping time, failing when the count
/// exceeds `budget`.  Requires a full (non-recombined) tree: merged nodes
/// conflate innovation histories, so per-node labelings on them do not
/// enumerate all adapted stopping times.
pub fn enumerate_stopping_times(tree: &ScenarioTree, budget: u64) -> Result<Vec<StoppingTime>> {
    if tree.is_recombined() {
        return Err(CoreError::UnsupportedTree {
            reason: "stopping-time enumeration needs a full tree".into(),
        });
    }
    let count = count_stopping_times(tree);
    if count > budget as u128 {
        return Err(CoreError::EnumerationBudget {
            count,
            budget,
        });
    }

    // Stop-node sets per subtree, combined by cartesian products.
    fn subtree_sets(tree: &ScenarioTree, level: usize, idx: usize) -> Vec<Vec<(usize, usize)>> {
        if level == tree.depth() {
            return vec![vec![(level, idx)]];
        }
        let mut sets = vec![vec![(level, idx)]];
        let mut continued: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        for a in 0..tree.branching() {
            let (cl, ci) = tree.child((level, idx), a);
            let child_sets = subtree_sets(tree, cl, ci);
            let mut grown = Vec::with_capacity(continued.len() * child_sets.len());
            for base in &continued {
                for cs in &child_sets {
                    let mut v = base.clone();
                    v.extend_from_slice(cs);
                    grown.push(v);
                }
            }
            continued = grown;
        }
        sets.extend(continued);
        sets
    }

    let sets = subtree_sets(tree, 0, 0);
    debug_assert_eq!(sets.len() as u128, count);
    Ok(sets
        .into_iter()
        .map(|nodes| {
            let mut st = StoppingTime::blank(tree);
            for (l, i) in nodes {
                st.flags[l][i] = true;
            }
            st
        })
        .collect())
}

/// Exact expected game payoff `E R_N(zeta/N, eta/N)` for a pair of
/// stopping times, by probability-weighted tree walk: the canceller pays
/// `G` when stopping strictly first, otherwise the exerciser receives `F`;
/// leaves force the terminal payment.
pub fn expected_payoff(
    tree: &ScenarioTree,
    f_values: &[Vec<f64>],
    g_values: &[Vec<f64>],
    canceller: &StoppingTime,
    exerciser: &StoppingTime,
) -> f64 {
    fn walk(
        tree: &ScenarioTree,
        f: &[Vec<f64>],
        g: &[Vec<f64>],
        zeta: &StoppingTime,
        eta: &StoppingTime,
        level: usize,
        idx: usize,
    ) -> f64 {
        if level == tree.depth() || eta.stops_at(level, idx) {
            return f[level][idx];
        }
        if zeta.stops_at(level, idx) {
            return g[level][idx];
        }
        let mut acc = 0.0;
        for (a, &p) in tree.atom_probs().iter().enumerate() {
            let (cl, ci) = tree.child((level, idx), a);
            acc += p * walk(tree, f, g, zeta, eta, cl, ci);
        }
        acc
    }
    walk(tree, f_values, g_values, canceller, exerciser, 0, 0)
}

/// Both orders of the exhaustive optimisation, witnessing that the game
/// has a value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BruteForceReport {
    /// `inf` over canceller times of `sup` over exerciser times.
    pub inf_sup: f64,
    /// `sup` over exerciser times of `inf` over canceller times.
    pub sup_inf: f64,
    /// Stopping times enumerated per player.
    pub n_stopping_times: usize,
}

/// Exhaustive inf–sup and sup–inf over all pairs of tree-adapted stopping
/// times, with expectations computed by exact probability sums.
pub fn brute_force_value(
    tree: &ScenarioTree,
    pair: &PayoffPair,
    budget: u64,
) -> Result<BruteForceReport> {
    let times = enumerate_stopping_times(tree, budget)?;
    let (f_values, g_values) = tree.payoff_tables(pair)?;
    let n = times.len();

    let mut payoff = vec![0.0; n * n];
    for (zi, zeta) in times.iter().enumerate() {
        for (ei, eta) in times.iter().enumerate() {
            payoff[zi * n + ei] = expected_payoff(tree, &f_values, &g_values, zeta, eta);
        }
    }

    let inf_sup = (0..n)
        .map(|zi| {
            (0..n)
                .map(|ei| payoff[zi * n + ei])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let sup_inf = (0..n)
        .map(|ei| {
            (0..n)
                .map(|zi| payoff[zi * n + ei])
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(BruteForceReport {
        inf_sup,
        sup_inf,
        n_stopping_times: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynkin::{backward_value, build_tree, extract_strategies, Recombine};
    use crate::model::{BasePayoff, DiffusionModel, InnovationLaw, PayoffPair, Penalty};

    fn small_tree(sigma: f64, depth: usize) -> ScenarioTree {
        let m = DiffusionModel::scalar(move |x| sigma * (1.0 + 0.3 * x.tanh()), |_| 0.0, 1.0, 0.0)
            .unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        build_tree(&m, &law, depth, 1 << 12, Recombine::Off).unwrap()
    }

    #[test]
    fn stopping_time_counts() {
        // Binary depth-d counts: S(leaf) = 1, S = 1 + S(child)^2.
        assert_eq!(count_stopping_times(&small_tree(0.3, 0)), 1);
        assert_eq!(count_stopping_times(&small_tree(0.3, 1)), 2);
        assert_eq!(count_stopping_times(&small_tree(0.3, 2)), 5);
        assert_eq!(count_stopping_times(&small_tree(0.3, 3)), 26);
        assert_eq!(count_stopping_times(&small_tree(0.3, 4)), 677);
    }

    #[test]
    fn enumeration_matches_count() {
        let tree = small_tree(0.4, 3);
        let times = enumerate_stopping_times(&tree, 1000).unwrap();
        assert_eq!(times.len(), 26);
    }

    #[test]
    fn budget_exceeded_is_an_error() {
        let tree = small_tree(0.4, 4);
        assert!(matches!(
            enumerate_stopping_times(&tree, 100),
            Err(CoreError::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn depth_zero_value_is_the_forced_terminal_payment() {
        let m = DiffusionModel::scalar(|_| 0.5, |_| 0.0, 1.0, 0.2).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let tree = build_tree(&m, &law, 0, 10, Recombine::Off).unwrap();
        let pair = PayoffPair::game(BasePayoff::call(1.0), Penalty::Constant(0.3));
        let report = brute_force_value(&tree, &pair, 10).unwrap();
        let expected = (0.2f64.exp() - 1.0).max(0.0);
        assert!((report.inf_sup - expected).abs() < 1e-15);
        assert_eq!(report.inf_sup, report.sup_inf);
    }

    #[test]
    fn equal_payoffs_value_is_f_at_time_zero() {
        let tree = small_tree(0.5, 3);
        let pair = PayoffPair::equal(BasePayoff::put(1.2));
        let report = brute_force_value(&tree, &pair, 1000).unwrap();
        let (f_values, _) = tree.payoff_tables(&pair).unwrap();
        assert!((report.inf_sup - f_values[0][0]).abs() < 1e-15);
        assert!((report.sup_inf - f_values[0][0]).abs() < 1e-15);
    }

    #[test]
    fn oracle_agrees_with_backward_recursion() {
        for (depth, strike, penalty) in
            [(1, 1.0, 0.05), (2, 1.1, 0.3), (3, 0.95, 0.1), (4, 1.05, 0.02)]
        {
            let tree = small_tree(0.45, depth);
            let pair = PayoffPair::game(BasePayoff::put(strike), Penalty::LinearDecay(penalty));
            let dp = backward_value(&tree, &pair).unwrap().value;
            let bf = brute_force_value(&tree, &pair, 1000).unwrap();
            assert!((bf.inf_sup - dp).abs() <= 1e-12, "depth {depth}: {bf:?} vs {dp}");
            assert!((bf.sup_inf - dp).abs() <= 1e-12, "depth {depth}: {bf:?} vs {dp}");
        }
    }

    #[test]
    fn saddle_against_all_enumerated_opponents() {
        let tree = small_tree(0.5, 3);
        let pair = PayoffPair::game(BasePayoff::put(1.05), Penalty::LinearDecay(0.08));
        let report = backward_value(&tree, &pair).unwrap();
        let strategies = extract_strategies(&tree, &report);
        let star_c = StoppingTime {
            flags: strategies.canceller_stop.clone(),
        };
        let star_e = StoppingTime {
            flags: strategies.exerciser_stop.clone(),
        };
        let (f_values, g_values) = tree.payoff_tables(&pair).unwrap();
        let v = report.value;
        for opponent in enumerate_stopping_times(&tree, 1000).unwrap() {
            let vs_exerciser = expected_payoff(&tree, &f_values, &g_values, &star_c, &opponent);
            let vs_canceller = expected_payoff(&tree, &f_values, &g_values, &opponent, &star_e);
            assert!(vs_exerciser <= v + 1e-12, "{vs_exerciser} > {v}");
            assert!(vs_canceller >= v - 1e-12, "{vs_canceller} < {v}");
        }
    }
}
