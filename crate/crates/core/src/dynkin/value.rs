//! Backward recursion for the game value, coarse-grid variants, and the
//! independent single-player recursions used as ordering references.

use super::ScenarioTree;
use crate::model::{Payoff, PayoffPair};
use crate::scheme::BlockPartition;
use crate::error::CoreError;
use crate::Result;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Level size above which node values are computed in parallel.  The split
/// is by node index, so results are identical for any worker count.
const PAR_LEVEL_THRESHOLD: usize = 4096;

/// Game value, per-node values and payoff tables of one backward recursion.
#[derive(Clone, Debug, Serialize)]
pub struct GameValueReport {
    /// Root value `V_N`.
    pub value: f64,
    pub n_steps: usize,
    pub law_id: String,
    pub payoff_id: String,
    /// Per-level node values `V_{Nn}`.
    pub node_values: Vec<Vec<f64>>,
    /// Per-level exercise payoffs `F_{n/N}`.
    pub f_values: Vec<Vec<f64>>,
    /// Per-level cancellation payoffs `G_{n/N}`.
    pub g_values: Vec<Vec<f64>>,
    /// Wall time of the recursion; excluded from serialized value files,
    /// reported through run manifests instead.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl GameValueReport {
    /// Per-level `(min, mean, max)` of the node values.
    pub fn level_summaries(&self) -> Vec<(f64, f64, f64)> {
        self.node_values
            .iter()
            .map(|row| {
                let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mean = row.iter().sum::<f64>() / row.len() as f64;
                (min, mean, max)
            })
            .collect()
    }
}

/// Result of the independent node-sandwich audit `F <= V <= G`.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichAudit {
    pub ok: bool,
    /// Worst violation of `V >= F` (positive = violated).
    pub max_lower_violation: f64,
    /// Worst violation of `V <= G` (positive = violated).
    pub max_upper_violation: f64,
    /// Worst violation of `G >= F`.
    pub max_order_violation: f64,
    pub nodes_checked: usize,
}

impl SandwichAudit {
    /// Audits a report with zero tolerance.
    pub fn run(report: &GameValueReport) -> SandwichAudit {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::NEG_INFINITY;
        let mut order = f64::NEG_INFINITY;
        let mut nodes = 0;
        for level in 0..report.node_values.len() {
            for idx in 0..report.node_values[level].len() {
                let v = report.node_values[level][idx];
                let f = report.f_values[level][idx];
                let g = report.g_values[level][idx];
                lower = lower.max(f - v);
                upper = upper.max(v - g);
                order = order.max(f - g);
                nodes += 1;
            }
        }
        SandwichAudit {
            ok: lower <= 0.0 && upper <= 0.0 && order <= 0.0,
            max_lower_violation: lower,
            max_upper_violation: upper,
            max_order_violation: order,
            nodes_checked: nodes,
        }
    }
}

fn continuation_values(
    tree: &ScenarioTree,
    level: usize,
    next: &[f64],
) -> Vec<f64> {
    let count = tree.level_count(level);
    let probs = tree.atom_probs();
    let one = |idx: usize| -> f64 {
        let mut acc = 0.0;
        for (a, &p) in probs.iter().enumerate() {
            let (_, c) = tree.child((level, idx), a);
            acc += p * next[c];
        }
        acc
    };
    if count >= PAR_LEVEL_THRESHOLD {
        (0..count).into_par_iter().map(one).collect()
    } else {
        (0..count).map(one).collect()
    }
}

/// Backward recursion for the game value:
/// `V_N = F_1` at the leaves and
/// `V_n = min(G_n, max(F_n, E[V_{n+1} | node]))` inside, where the
/// conditional expectation is the probability-weighted child average.
pub fn backward_value(tree: &ScenarioTree, pair: &PayoffPair) -> Result<GameValueReport> {
    let start = Instant::now();
    let (f_values, g_values) = tree.payoff_tables(pair)?;
    let n = tree.depth();
    let mut node_values: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    node_values[n] = f_values[n].clone();
    for level in (0..n).rev() {
        let cont = continuation_values(tree, level, &node_values[level + 1]);
        let row: Vec<f64> = cont
            .iter()
            .enumerate()
            .map(|(idx, &c)| g_values[level][idx].min(f_values[level][idx].max(c)))
            .collect();
        node_values[level] = row;
    }
    Ok(GameValueReport {
        value: node_values[0][0],
        n_steps: n,
        law_id: tree.law_id().to_string(),
        payoff_id: pair.id().to_string(),
        node_values,
        f_values,
        g_values,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Coarse-grid game value: min/max decisions are applied only at block
/// boundaries of `partition` (and at the forced terminal step); inside
/// blocks values propagate as pure expectations.
pub fn coarse_value(
    tree: &ScenarioTree,
    pair: &PayoffPair,
    partition: &BlockPartition,
) -> Result<f64> {
    if partition.n_steps() != tree.depth() {
        return Err(CoreError::shape(
            "partition length",
            tree.depth(),
            partition.n_steps(),
        ));
    }
    let (f_values, g_values) = tree.payoff_tables(pair)?;
    let n = tree.depth();
    let mut values = f_values[n].clone();
    for level in (0..n).rev() {
        let cont = continuation_values(tree, level, &values);
        values = if partition.is_decision_step(level) {
            cont.iter()
                .enumerate()
                .map(|(idx, &c)| g_values[level][idx].min(f_values[level][idx].max(c)))
                .collect()
        } else {
            cont
        };
    }
    Ok(values[0])
}

/// Single-player optimal stopping value of a payoff on the tree:
/// `max(F_n, E[V_{n+1}])` with terminal value `F_1`.  Kept independent of
/// the game recursion so it can serve as an ordering reference.
pub fn american_value(tree: &ScenarioTree, payoff: &Payoff) -> Result<f64> {
    let pair = PayoffPair::new(payoff.clone(), payoff.clone());
    let (f_values, _) = tree.payoff_tables(&pair)?;
    let n = tree.depth();
    let mut values = f_values[n].clone();
    for level in (0..n).rev() {
        let cont = continuation_values(tree, level, &values);
        values = cont
            .iter()
            .enumerate()
            .map(|(idx, &c)| f_values[level][idx].max(c))
            .collect();
    }
    Ok(values[0])
}

/// Expected terminal payoff `E[F_1]` (no early decisions).
pub fn european_value(tree: &ScenarioTree, payoff: &Payoff) -> Result<f64> {
    let pair = PayoffPair::new(payoff.clone(), payoff.clone());
    let (f_values, _) = tree.payoff_tables(&pair)?;
    let probs = tree.node_probabilities();
    let n = tree.depth();
    Ok(f_values[n]
        .iter()
        .zip(&probs[n])
        .map(|(f, p)| f * p)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynkin::{build_tree, Recombine};
    use crate::model::{BasePayoff, DiffusionModel, InnovationLaw, Payoff, PayoffPair, Penalty};

    fn tree(sigma: f64, drift: f64, depth: usize) -> ScenarioTree {
        let m = DiffusionModel::scalar(move |_| sigma, move |_| drift, 1.0, 0.0).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        build_tree(&m, &law, depth, 1 << 20, Recombine::Off).unwrap()
    }

    #[test]
    fn constant_equal_payoffs_give_the_constant() {
        let t = tree(0.5, 0.0, 4);
        let pair = PayoffPair::equal(BasePayoff::Constant { value: 2.5 });
        let report = backward_value(&t, &pair).unwrap();
        assert_eq!(report.value, 2.5);
        assert!(SandwichAudit::run(&report).ok);
    }

    #[test]
    fn deterministic_timetable_recursion_by_hand() {
        // sigma = 0, b = 0, N = 2; F at times (0, 1/2, 1) = (0, 1, 2),
        // G = (3, 3, 2).  V_2 = 2, V_1 = min(3, max(1, 2)) = 2,
        // V_0 = min(3, max(0, 2)) = 2.
        let t = tree(0.0, 0.0, 2);
        let f = Payoff::new(BasePayoff::TimeTable {
            times: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 1.0, 2.0],
        });
        let g = Payoff::new(BasePayoff::TimeTable {
            times: vec![0.0, 0.5, 1.0],
            values: vec![3.0, 3.0, 2.0],
        });
        let report = backward_value(&t, &PayoffPair::new(f, g)).unwrap();
        assert_eq!(report.value, 2.0);
        assert_eq!(report.node_values[1], vec![2.0, 2.0]);
    }

    #[test]
    fn equal_payoffs_collapse_to_time_zero_value() {
        // F = G forces the immediate-stop saddle V = F_0.
        let t = tree(0.4, -0.08, 5);
        let pair = PayoffPair::equal(BasePayoff::put(1.2));
        let report = backward_value(&t, &pair).unwrap();
        let f0 = report.f_values[0][0];
        assert_eq!(report.value, f0);
    }

    #[test]
    fn huge_penalty_degenerates_to_american() {
        let t = tree(0.3, -0.045, 8);
        let base = BasePayoff::put(1.1);
        let pair = PayoffPair::game(base.clone(), Penalty::Constant(1e9));
        let game = backward_value(&t, &pair).unwrap().value;
        let american = american_value(&t, &Payoff::new(base)).unwrap();
        assert!((game - american).abs() < 1e-12);
    }

    #[test]
    fn european_below_game_below_american_for_generous_penalty() {
        let t = tree(0.35, -0.06125, 6);
        let base = BasePayoff::put(1.05);
        let pair = PayoffPair::game(base.clone(), Penalty::Constant(2.0));
        let game = backward_value(&t, &pair).unwrap().value;
        let eur = european_value(&t, &Payoff::new(base.clone())).unwrap();
        let amer = american_value(&t, &Payoff::new(base)).unwrap();
        assert!(eur <= game + 1e-12, "eur {eur} > game {game}");
        assert!(game <= amer + 1e-12, "game {game} > amer {amer}");
    }

    #[test]
    fn coarse_value_with_unit_blocks_equals_game_value() {
        let t = tree(0.4, -0.08, 10);
        let pair = PayoffPair::game(BasePayoff::put(1.0), Penalty::LinearDecay(0.05));
        let part = crate::scheme::block_partition(10).unwrap();
        assert_eq!(part.q(), 1);
        let full = backward_value(&t, &pair).unwrap().value;
        let coarse = coarse_value(&t, &pair, &part).unwrap();
        assert_eq!(full, coarse);
    }

    #[test]
    fn coarse_value_on_deterministic_tree_restricts_decision_times() {
        // sigma = 0, b = 0: the tree is a single deterministic path, and
        // the coarse game is the min-max over the restricted time set.
        let t = tree(0.0, 0.0, 16);
        let f = Payoff::new(BasePayoff::TimeTable {
            times: (0..=16).map(|k| k as f64 / 16.0).collect(),
            values: (0..=16).map(|k| ((k * 7) % 5) as f64).collect(),
        });
        let g_vals: Vec<f64> = (0..=16)
            .map(|k| ((k * 7) % 5) as f64 + if k < 16 { 1.5 } else { 0.0 })
            .collect();
        let g = Payoff::new(BasePayoff::TimeTable {
            times: (0..=16).map(|k| k as f64 / 16.0).collect(),
            values: g_vals.clone(),
        });
        let pair = PayoffPair::new(f, g);
        let part = crate::scheme::block_partition(16).unwrap();
        let coarse = coarse_value(&t, &pair, &part).unwrap();

        // Independent min-max over decision times: on a deterministic path
        // the game value is min over canceller times of max over exerciser
        // times of R(s, t), restricted to block boundaries.
        let f_at = |k: usize| ((k * 7) % 5) as f64;
        let ends: Vec<usize> = part.ends().to_vec();
        let mut best = f64::INFINITY;
        for &s in &ends {
            let mut worst = f64::NEG_INFINITY;
            for &t_idx in &ends {
                let r = if s < t_idx { g_vals[s] } else { f_at(t_idx) };
                worst = worst.max(r);
            }
            best = best.min(worst);
        }
        assert_eq!(coarse, best);
    }

    #[test]
    fn sandwich_holds_on_a_generic_instance() {
        let t = tree(0.45, -0.10125, 7);
        let pair = PayoffPair::game(BasePayoff::put(1.0), Penalty::LinearDecay(0.07));
        let report = backward_value(&t, &pair).unwrap();
        let audit = SandwichAudit::run(&report);
        assert!(audit.ok, "{audit:?}");
        assert_eq!(audit.nodes_checked, 255);
    }

    #[test]
    fn depth_zero_tree_pays_terminal_value() {
        let m = DiffusionModel::scalar(|_| 0.5, |_| 0.0, 1.0, -0.3).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let t = build_tree(&m, &law, 0, 10, Recombine::Off).unwrap();
        let pair = PayoffPair::game(BasePayoff::put(1.0), Penalty::Constant(0.5));
        let report = backward_value(&t, &pair).unwrap();
        let expected = (1.0 - (-0.3f64).exp()).max(0.0);
        assert!((report.value - expected).abs() < 1e-15);
    }
}
