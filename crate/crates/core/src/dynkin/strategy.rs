//! Optimal strategy extraction and Monte Carlo evaluation of strategy
//! pairs against simulated chains.

use super::{GameValueReport, ScenarioTree};
use crate::error::CoreError;
use crate::model::{DiffusionModel, InnovationLaw, PayoffPair, StateSeq};
use crate::scheme::simulate_path;
use crate::stats::mean_and_se;
use crate::Result;
use rayon::prelude::*;
use serde::Serialize;

/// Per-node stop flags of the saddle strategies.  Along any path the
/// stopping time is the first flagged node; the terminal step is always a
/// forced stop.
#[derive(Clone, Debug, Serialize)]
pub struct StrategyPair {
    /// Canceller (minimizer) flags: stop where `V = G`.
    pub canceller_stop: Vec<Vec<bool>>,
    /// Exerciser (maximizer) flags: stop where `V = F`.
    pub exerciser_stop: Vec<Vec<bool>>,
}

impl StrategyPair {
    /// First stop level per player along an atom-index path, terminal
    /// forced.
    pub fn stop_levels(&self, tree: &ScenarioTree, atoms: &[usize]) -> (usize, usize) {
        let n = tree.depth();
        let mut node = (0usize, 0usize);
        let mut canceller = n;
        let mut exerciser = n;
        for step in 0..=n {
            if step > 0 {
                node = tree.child(node, atoms[step - 1]);
            }
            if canceller == n && step < n && self.canceller_stop[step][node.1] {
                canceller = step;
            }
            if exerciser == n && step < n && self.exerciser_stop[step][node.1] {
                exerciser = step;
            }
            if canceller < n && exerciser < n {
                break;
            }
        }
        (canceller, exerciser)
    }

    /// Fraction of nodes per level where each player stops.
    pub fn stop_fractions(&self) -> Vec<(f64, f64)> {
        self.canceller_stop
            .iter()
            .zip(&self.exerciser_stop)
            .map(|(c, e)| {
                let nc = c.iter().filter(|&&b| b).count() as f64 / c.len() as f64;
                let ne = e.iter().filter(|&&b| b).count() as f64 / e.len() as f64;
                (nc, ne)
            })
            .collect()
    }
}

/// Reads the saddle strategies off a backward-recursion report: the
/// canceller stops at the first node where the value has been clipped to
/// `G`, the exerciser where it equals `F`.  Equalities are exact because
/// the recursion assigns node values from these very numbers.
pub fn extract_strategies(tree: &ScenarioTree, report: &GameValueReport) -> StrategyPair {
    let mut canceller = Vec::with_capacity(report.node_values.len());
    let mut exerciser = Vec::with_capacity(report.node_values.len());
    for level in 0..report.node_values.len() {
        let v = &report.node_values[level];
        let f = &report.f_values[level];
        let g = &report.g_values[level];
        let terminal = level == tree.depth();
        canceller.push(
            (0..v.len())
                .map(|i| terminal || v[i] == g[i])
                .collect::<Vec<bool>>(),
        );
        exerciser.push(
            (0..v.len())
                .map(|i| terminal || v[i] == f[i])
                .collect::<Vec<bool>>(),
        );
    }
    StrategyPair {
        canceller_stop: canceller,
        exerciser_stop: exerciser,
    }
}

/// What a stopping rule sees when deciding at a step: the path prefix and,
/// for finite-support laws, the innovation atom indices drawn so far.
pub struct PathView<'a> {
    pub step: usize,
    pub n_steps: usize,
    pub atoms: &'a [usize],
    pub states: StateSeq<'a>,
}

/// Adapted stopping rule: the decision at step `n` may depend only on the
/// path prefix up to `n`.  Stopping at the terminal step is forced by the
/// game and need not be signalled.
pub trait StoppingRule: Sync {
    fn decide(&self, view: &PathView) -> bool;

    /// True when the rule needs innovation atom indices (tree lookups).
    fn needs_atoms(&self) -> bool {
        false
    }
}

/// Never stops early; the game ends at the terminal time.
pub struct NeverStop;

impl StoppingRule for NeverStop {
    fn decide(&self, _view: &PathView) -> bool {
        false
    }
}

/// Stops at a fixed step.
pub struct StopAtStep(pub usize);

impl StoppingRule for StopAtStep {
    fn decide(&self, view: &PathView) -> bool {
        view.step >= self.0
    }
}

/// Tree-strategy rule: follows the path's atom indices through the tree
/// and stops at the first flagged node.
pub struct TreeRule<'a> {
    tree: &'a ScenarioTree,
    flags: &'a [Vec<bool>],
}

impl<'a> TreeRule<'a> {
    pub fn canceller(tree: &'a ScenarioTree, strategies: &'a StrategyPair) -> Self {
        TreeRule {
            tree,
            flags: &strategies.canceller_stop,
        }
    }

    pub fn exerciser(tree: &'a ScenarioTree, strategies: &'a StrategyPair) -> Self {
        TreeRule {
            tree,
            flags: &strategies.exerciser_stop,
        }
    }
}

impl StoppingRule for TreeRule<'_> {
    fn decide(&self, view: &PathView) -> bool {
        let node = self.tree.node_at(&view.atoms[..view.step]);
        self.flags[view.step][node.1]
    }

    fn needs_atoms(&self) -> bool {
        true
    }
}

/// Monte Carlo estimate with its CLT standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Monte Carlo estimate of the expected game payoff
/// `E R_N(s/N, t/N) = E[G_s 1(s < t) + F_t 1(t <= s)]`
/// under a pair of adapted stopping rules.  Replication `r` runs on stream
/// `r`; replications fan out across workers and reduce by pairwise
/// summation, so the result is independent of worker count.
pub fn mc_payoff(
    model: &DiffusionModel,
    law: &InnovationLaw,
    canceller: &dyn StoppingRule,
    exerciser: &dyn StoppingRule,
    pair: &PayoffPair,
    n_steps: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if reps == 0 {
        return Err(CoreError::param("reps", "must be >= 1"));
    }
    if law.is_gaussian() && (canceller.needs_atoms() || exerciser.needs_atoms()) {
        return Err(CoreError::UnsupportedLaw {
            operation: "mc_payoff with tree strategies",
            required: "finite-support",
        });
    }
    let values: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let path = simulate_path(model, law, n_steps, seed, r)?;
            let atoms = path.atom_indices().unwrap_or(&[]);
            let full = path.seq();
            let mut cancel_at = n_steps;
            let mut exercise_at = n_steps;
            for step in 0..n_steps {
                let view = PathView {
                    step,
                    n_steps,
                    atoms,
                    states: full.prefix(step),
                };
                if cancel_at == n_steps && canceller.decide(&view) {
                    cancel_at = step;
                }
                if exercise_at == n_steps && exerciser.decide(&view) {
                    exercise_at = step;
                }
                if cancel_at < n_steps && exercise_at < n_steps {
                    break;
                }
            }
            let r_value = if exercise_at <= cancel_at {
                pair.f_prefix(&full.prefix(exercise_at))
            } else {
                pair.g_prefix(&full.prefix(cancel_at))
            };
            Ok(r_value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (estimate, std_error) = mean_and_se(&values);
    Ok(McEstimate {
        estimate,
        std_error,
        reps,
    })
}
