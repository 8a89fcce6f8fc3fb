//! Scenario trees over the chain's innovation filtration and the Dynkin
//! game machinery on top of them: backward recursion, coarse-grid variants,
//! optimal strategies, brute-force oracles and Monte Carlo strategy
//! evaluation.

mod brute;
mod strategy;
mod value;

pub use brute::{brute_force_value, count_stopping_times, enumerate_stopping_times, BruteForceReport, StoppingTime};
pub use strategy::{
    extract_strategies, mc_payoff, McEstimate, NeverStop, PathView, StopAtStep, StoppingRule,
    StrategyPair, TreeRule,
};
pub use value::{
    american_value, backward_value, coarse_value, european_value, GameValueReport, SandwichAudit,
};

use crate::error::CoreError;
use crate::model::{DiffusionModel, InnovationLaw, PayoffPair, StatKind, StateSeq};
use crate::scheme::step;
use crate::Result;
use std::collections::HashMap;

/// Default quantization resolution for recombination keys.
///
/// States reached along different paths that should coincide analytically
/// differ by rounding noise; keys are state (and statistic) components
/// rounded to this grid, which merges them while keeping genuinely distinct
/// lattice states apart.
pub const DEFAULT_MERGE_RESOLUTION: f64 = 1e-9;

/// One level of the tree, stored flat.
#[derive(Clone, Debug, Default)]
struct TreeLevel {
    /// `count * dim` states.
    states: Vec<f64>,
    /// `count * n_extras` statistic slots (recombined trees only).
    extras: Vec<f64>,
    /// `count * branching` child indices into the next level
    /// (recombined trees only; implicit for full trees).
    children: Vec<u32>,
    count: usize,
}

/// Probability-weighted tree of chain states: depth `N`, one branch per
/// innovation atom, i.i.d. transition probabilities at every node.
///
/// Full trees enumerate every innovation history (`m^n` nodes at level
/// `n`); recombined trees merge nodes sharing the same quantized sufficient
/// statistic and are valid only for payoffs that declare one.
#[derive(Clone, Debug)]
pub struct ScenarioTree {
    dim: usize,
    depth: usize,
    branching: usize,
    atom_probs: Vec<f64>,
    levels: Vec<TreeLevel>,
    recombined: bool,
    stat_kind: StatKind,
    merge_resolution: f64,
    node_count: usize,
    law_id: String,
}

/// Node reference: `(level, index within level)`.
pub type NodeRef = (usize, usize);

impl ScenarioTree {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Tree depth `N` (number of steps; levels run `0..=N`).
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of innovation atoms.
    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn atom_probs(&self) -> &[f64] {
        &self.atom_probs
    }

    pub fn is_recombined(&self) -> bool {
        self.recombined
    }

    /// Statistic used for merging (recombined trees).
    pub fn stat_kind(&self) -> StatKind {
        self.stat_kind
    }

    /// Quantization resolution of the merge keys (0 for full trees).
    pub fn merge_resolution(&self) -> f64 {
        self.merge_resolution
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn law_id(&self) -> &str {
        &self.law_id
    }

    pub fn level_count(&self, level: usize) -> usize {
        self.levels[level].count
    }

    /// Grid time of a level.  A depth-0 tree is terminal at its root.
    pub fn level_time(&self, level: usize) -> f64 {
        if self.depth == 0 {
            1.0
        } else {
            level as f64 / self.depth as f64
        }
    }

    pub fn state(&self, node: NodeRef) -> &[f64] {
        let lvl = &self.levels[node.0];
        &lvl.states[node.1 * self.dim..(node.1 + 1) * self.dim]
    }

    fn extras(&self, node: NodeRef) -> &[f64] {
        let ne = self.stat_kind.n_extras();
        let lvl = &self.levels[node.0];
        &lvl.extras[node.1 * ne..(node.1 + 1) * ne]
    }

    /// Child of `node` along innovation atom `a`.
    pub fn child(&self, node: NodeRef, atom: usize) -> NodeRef {
        debug_assert!(node.0 < self.depth);
        if self.recombined {
            let lvl = &self.levels[node.0];
            (node.0 + 1, lvl.children[node.1 * self.branching + atom] as usize)
        } else {
            (node.0 + 1, node.1 * self.branching + atom)
        }
    }

    /// Parent of a full-tree node (recombined nodes have many parents).
    pub fn parent(&self, node: NodeRef) -> Option<NodeRef> {
        if self.recombined || node.0 == 0 {
            None
        } else {
            Some((node.0 - 1, node.1 / self.branching))
        }
    }

    /// Node reached from the root by a sequence of atom indices.
    pub fn node_at(&self, atoms: &[usize]) -> NodeRef {
        let mut node = (0usize, 0usize);
        for &a in atoms {
            node = self.child(node, a);
        }
        node
    }

    /// Human-readable node address: the innovation-index string for full
    /// trees, `L<level>#<index>` for recombined ones.
    pub fn address(&self, node: NodeRef) -> String {
        if self.recombined {
            format!("L{}#{}", node.0, node.1)
        } else {
            let (level, mut idx) = node;
            let mut digits = vec![0usize; level];
            for d in (0..level).rev() {
                digits[d] = idx % self.branching;
                idx /= self.branching;
            }
            if digits.is_empty() {
                "root".to_string()
            } else {
                digits
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(".")
            }
        }
    }

    /// States along the root-to-node path of a full tree, flat.
    fn prefix_states(&self, node: NodeRef, out: &mut Vec<f64>) {
        debug_assert!(!self.recombined);
        out.clear();
        let mut chain = Vec::with_capacity(node.0 + 1);
        let mut cur = node;
        chain.push(cur);
        while let Some(p) = self.parent(cur) {
            chain.push(p);
            cur = p;
        }
        for n in chain.iter().rev() {
            out.extend_from_slice(self.state(*n));
        }
    }

    /// Forward node probabilities per level (they sum to one per level).
    pub fn node_probabilities(&self) -> Vec<Vec<f64>> {
        let mut probs: Vec<Vec<f64>> = Vec::with_capacity(self.depth + 1);
        probs.push(vec![1.0]);
        for level in 0..self.depth {
            let mut next = vec![0.0; self.level_count(level + 1)];
            for idx in 0..self.level_count(level) {
                let p = probs[level][idx];
                for (a, &pa) in self.atom_probs.iter().enumerate() {
                    let (_, c) = self.child((level, idx), a);
                    next[c] += p * pa;
                }
            }
            probs.push(next);
        }
        probs
    }

    /// Per-node payoff tables `(F, G)` for a pair, level by level.
    ///
    /// Recombined trees evaluate from the stored statistic (the pair's
    /// declared statistic must be no finer than the tree's); full trees
    /// evaluate from the exact path prefix.
    pub fn payoff_tables(&self, pair: &PayoffPair) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let mut f_vals = Vec::with_capacity(self.depth + 1);
        let mut g_vals = Vec::with_capacity(self.depth + 1);
        if self.recombined {
            let pair_kind = pair.stat_kind().ok_or_else(|| CoreError::RecombineUnsupported {
                reason: format!(
                    "payoff {} declares no sufficient statistic but the tree is recombined",
                    pair.id()
                ),
            })?;
            if StatKind::join(pair_kind, self.stat_kind) != Some(self.stat_kind) {
                return Err(CoreError::RecombineUnsupported {
                    reason: format!(
                        "payoff statistic {:?} is incompatible with tree statistic {:?}",
                        pair_kind, self.stat_kind
                    ),
                });
            }
            for level in 0..=self.depth {
                let t = self.level_time(level);
                let count = self.level_count(level);
                let mut f_row = Vec::with_capacity(count);
                let mut g_row = Vec::with_capacity(count);
                for idx in 0..count {
                    let node = (level, idx);
                    let f = pair.f_state(t, self.state(node), self.extras(node));
                    let g = pair.g_state(t, self.state(node), self.extras(node));
                    self.check_finite(f, node)?;
                    self.check_finite(g, node)?;
                    f_row.push(f);
                    g_row.push(g);
                }
                f_vals.push(f_row);
                g_vals.push(g_row);
            }
        } else {
            match pair.stat_kind() {
                Some(kind) => {
                    // Forward pass carrying the statistic, no prefix walks.
                    let ne = kind.n_extras();
                    let mut scratch = Vec::new();
                    kind.init_extras(self.state((0, 0)), &mut scratch);
                    let inv_n = if self.depth > 0 { 1.0 / self.depth as f64 } else { 0.0 };
                    let mut level_extras: Vec<f64> = scratch.clone();
                    for level in 0..=self.depth {
                        let t = self.level_time(level);
                        let count = self.level_count(level);
                        let mut f_row = Vec::with_capacity(count);
                        let mut g_row = Vec::with_capacity(count);
                        for idx in 0..count {
                            let node = (level, idx);
                            let e = &level_extras[idx * ne..(idx + 1) * ne];
                            let f = pair.f_state(t, self.state(node), e);
                            let g = pair.g_state(t, self.state(node), e);
                            self.check_finite(f, node)?;
                            self.check_finite(g, node)?;
                            f_row.push(f);
                            g_row.push(g);
                        }
                        f_vals.push(f_row);
                        g_vals.push(g_row);
                        if level < self.depth {
                            let next_count = self.level_count(level + 1);
                            let mut next_extras = vec![0.0; next_count * ne];
                            for idx in 0..count {
                                let e = &level_extras[idx * ne..(idx + 1) * ne];
                                for a in 0..self.branching {
                                    let (_, c) = self.child((level, idx), a);
                                    kind.update_extras(
                                        e,
                                        self.state((level, idx)),
                                        self.state((level + 1, c)),
                                        inv_n,
                                        &mut scratch,
                                    );
                                    next_extras[c * ne..(c + 1) * ne].copy_from_slice(&scratch);
                                }
                            }
                            level_extras = next_extras;
                        }
                    }
                }
                None => {
                    if self.depth == 0 {
                        return Err(CoreError::UnsupportedTree {
                            reason: "custom payoffs need a tree of depth >= 1".into(),
                        });
                    }
                    let mut prefix = Vec::new();
                    for level in 0..=self.depth {
                        let count = self.level_count(level);
                        let mut f_row = Vec::with_capacity(count);
                        let mut g_row = Vec::with_capacity(count);
                        for idx in 0..count {
                            let node = (level, idx);
                            self.prefix_states(node, &mut prefix);
                            let seq = StateSeq::new(&prefix, self.dim, self.depth);
                            let f = pair.f_prefix(&seq);
                            let g = pair.g_prefix(&seq);
                            self.check_finite(f, node)?;
                            self.check_finite(g, node)?;
                            f_row.push(f);
                            g_row.push(g);
                        }
                        f_vals.push(f_row);
                        g_vals.push(g_row);
                    }
                }
            }
        }
        Ok((f_vals, g_vals))
    }

    fn check_finite(&self, v: f64, node: NodeRef) -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(CoreError::PayoffEvaluation {
                address: self.address(node),
                value: v,
            })
        }
    }

    /// Total node count of a full tree with branching `m` and depth `n`.
    pub fn full_node_count(branching: usize, depth: usize) -> u128 {
        let m = branching as u128;
        let mut total = 0u128;
        let mut level = 1u128;
        for _ in 0..=depth {
            total = total.saturating_add(level);
            level = level.saturating_mul(m);
        }
        total
    }
}

/// Recombination request for [`build_tree`].
#[derive(Clone, Copy, Debug)]
pub enum Recombine {
    Off,
    /// Merge nodes sharing the quantized statistic.
    On {
        kind: StatKind,
        resolution: f64,
    },
}

impl Recombine {
    /// Recombination keyed on the payoff's declared statistic; errors when
    /// the payoff does not declare one.
    pub fn for_pair(pair: &PayoffPair) -> Result<Self> {
        match pair.stat_kind() {
            Some(kind) => Ok(Recombine::On {
                kind,
                resolution: DEFAULT_MERGE_RESOLUTION,
            }),
            None => Err(CoreError::RecombineUnsupported {
                reason: format!(
                    "payoff {} is path-dependent without a declared sufficient statistic",
                    pair.id()
                ),
            }),
        }
    }
}

fn quantize_key(values: &[f64], resolution: f64, out: &mut Vec<i64>) {
    out.clear();
    for v in values {
        out.push((v / resolution).round() as i64);
    }
}

/// Builds the scenario tree of the chain under a finite-support law.
///
/// Construction fails (rather than truncating) when the node count would
/// exceed `node_cap`.
pub fn build_tree(
    model: &DiffusionModel,
    law: &InnovationLaw,
    depth: usize,
    node_cap: u64,
    recombine: Recombine,
) -> Result<ScenarioTree> {
    if law.is_gaussian() {
        return Err(CoreError::UnsupportedLaw {
            operation: "build_tree",
            required: "finite-support",
        });
    }
    if law.dim() != model.dim() {
        return Err(CoreError::shape("law dimension", model.dim(), law.dim()));
    }
    let d = model.dim();
    let m = law.n_atoms();
    let n_for_step = depth.max(1);

    match recombine {
        Recombine::Off => {
            let required = ScenarioTree::full_node_count(m, depth);
            if required > node_cap as u128 {
                return Err(CoreError::TreeTooLarge {
                    required,
                    cap: node_cap,
                });
            }
            let mut levels = Vec::with_capacity(depth + 1);
            levels.push(TreeLevel {
                states: model.x0().to_vec(),
                count: 1,
                ..Default::default()
            });
            for level in 0..depth {
                let prev = &levels[level];
                let mut states = Vec::with_capacity(prev.count * m * d);
                for idx in 0..prev.count {
                    let x = &prev.states[idx * d..(idx + 1) * d];
                    for a in 0..m {
                        let child = step(x, law.atom(a), model, n_for_step)?;
                        states.extend_from_slice(&child);
                    }
                }
                levels.push(TreeLevel {
                    count: states.len() / d,
                    states,
                    ..Default::default()
                });
            }
            let node_count = levels.iter().map(|l| l.count).sum();
            Ok(ScenarioTree {
                dim: d,
                depth,
                branching: m,
                atom_probs: law.probs().to_vec(),
                levels,
                recombined: false,
                stat_kind: StatKind::State,
                merge_resolution: 0.0,
                node_count,
                law_id: law.id().to_string(),
            })
        }
        Recombine::On { kind, resolution } => {
            if !(resolution > 0.0) {
                return Err(CoreError::param("resolution", "must be > 0"));
            }
            let ne = kind.n_extras();
            let inv_n = 1.0 / n_for_step as f64;
            let mut levels: Vec<TreeLevel> = Vec::with_capacity(depth + 1);
            let mut root_extras = Vec::new();
            kind.init_extras(model.x0(), &mut root_extras);
            levels.push(TreeLevel {
                states: model.x0().to_vec(),
                extras: root_extras,
                count: 1,
                ..Default::default()
            });
            let mut node_count: u64 = 1;
            let mut key = Vec::new();
            let mut key_values = Vec::with_capacity(d + ne);
            let mut scratch = Vec::new();
            for level in 0..depth {
                let prev_count = levels[level].count;
                let mut next = TreeLevel::default();
                let mut lookup: HashMap<Vec<i64>, u32> = HashMap::new();
                let mut children = vec![0u32; prev_count * m];
                for idx in 0..prev_count {
                    let x =
                        levels[level].states[idx * d..(idx + 1) * d].to_vec();
                    let extras =
                        levels[level].extras[idx * ne..(idx + 1) * ne].to_vec();
                    for a in 0..m {
                        let child_state = step(&x, law.atom(a), model, n_for_step)?;
                        kind.update_extras(&extras, &x, &child_state, inv_n, &mut scratch);
                        key_values.clear();
                        key_values.extend_from_slice(&child_state);
                        key_values.extend_from_slice(&scratch);
                        quantize_key(&key_values, resolution, &mut key);
                        let child_idx = match lookup.get(&key) {
                            Some(&i) => i,
                            None => {
                                let i = next.count as u32;
                                lookup.insert(key.clone(), i);
                                next.states.extend_from_slice(&child_state);
                                next.extras.extend_from_slice(&scratch);
                                next.count += 1;
                                node_count += 1;
                                if node_count > node_cap {
                                    return Err(CoreError::TreeTooLarge {
                                        required: node_count as u128,
                                        cap: node_cap,
                                    });
                                }
                                i
                            }
                        };
                        children[idx * m + a] = child_idx;
                    }
                }
                levels[level].children = children;
                levels.push(next);
            }
            Ok(ScenarioTree {
                dim: d,
                depth,
                branching: m,
                atom_probs: law.probs().to_vec(),
                levels,
                recombined: true,
                stat_kind: kind,
                merge_resolution: resolution,
                node_count: node_count as usize,
                law_id: law.id().to_string(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BasePayoff, InnovationLaw, PayoffPair, Penalty};

    fn const_model(sigma: f64, drift: f64) -> DiffusionModel {
        DiffusionModel::scalar(move |_| sigma, move |_| drift, 1.0, 0.0).unwrap()
    }

    #[test]
    fn full_tree_node_counts() {
        assert_eq!(ScenarioTree::full_node_count(2, 3), 15);
        assert_eq!(ScenarioTree::full_node_count(2, 0), 1);
        assert_eq!(ScenarioTree::full_node_count(3, 3), 40);
    }

    #[test]
    fn full_tree_depth3_has_15_nodes() {
        let m = const_model(1.0, 0.0);
        let law = InnovationLaw::rademacher(1).unwrap();
        let tree = build_tree(&m, &law, 3, 1000, Recombine::Off).unwrap();
        assert_eq!(tree.node_count(), 15);
        assert!(!tree.is_recombined());
        assert_eq!(tree.level_count(3), 8);
    }

    #[test]
    fn recombined_constant_lattice_has_10_nodes() {
        let m = const_model(1.0, 0.0);
        let law = InnovationLaw::rademacher(1).unwrap();
        let tree = build_tree(
            &m,
            &law,
            3,
            1000,
            Recombine::On {
                kind: StatKind::State,
                resolution: DEFAULT_MERGE_RESOLUTION,
            },
        )
        .unwrap();
        assert_eq!(tree.node_count(), 10);
        for level in 0..=3 {
            assert_eq!(tree.level_count(level), level + 1);
        }
    }

    #[test]
    fn state_dependent_sigma_keeps_full_tree_distinct() {
        // The tanh shift breaks the odd symmetry around x0 that would
        // otherwise recombine the lattice exactly.
        let m =
            DiffusionModel::scalar(|x| 0.5 + 0.25 * (x + 0.3).tanh(), |_| 0.0, 1.0, 0.0).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let tree = build_tree(&m, &law, 3, 1000, Recombine::Off).unwrap();
        assert_eq!(tree.node_count(), 15);
        // Level-3 states are pairwise distinct (no accidental merging).
        let mut states: Vec<f64> = (0..8).map(|i| tree.state((3, i))[0]).collect();
        states.sort_by(f64::total_cmp);
        for w in states.windows(2) {
            assert!(w[1] - w[0] > 1e-12);
        }
    }

    #[test]
    fn cap_exceeded_is_an_error() {
        let m = const_model(1.0, 0.0);
        let law = InnovationLaw::rademacher(1).unwrap();
        let err = build_tree(&m, &law, 25, 1_000_000, Recombine::Off).unwrap_err();
        assert!(matches!(err, CoreError::TreeTooLarge { .. }));
    }

    #[test]
    fn gaussian_law_is_rejected() {
        let m = const_model(1.0, 0.0);
        let law = InnovationLaw::gaussian(1).unwrap();
        assert!(matches!(
            build_tree(&m, &law, 2, 100, Recombine::Off),
            Err(CoreError::UnsupportedLaw { .. })
        ));
    }

    #[test]
    fn recombine_for_custom_payoff_is_an_error() {
        use crate::model::{Payoff, PrefixFunctional, StateSeq};
        struct Weird;
        impl PrefixFunctional for Weird {
            fn eval(&self, seq: &StateSeq) -> f64 {
                seq.last()[0]
            }
        }
        let pair = PayoffPair::new(
            Payoff::new(BasePayoff::Custom(std::sync::Arc::new(Weird))),
            Payoff::new(BasePayoff::Custom(std::sync::Arc::new(Weird))),
        );
        assert!(matches!(
            Recombine::for_pair(&pair),
            Err(CoreError::RecombineUnsupported { .. })
        ));
    }

    #[test]
    fn addresses_follow_innovation_indices() {
        let m = const_model(1.0, 0.0);
        let law = InnovationLaw::rademacher(1).unwrap();
        let tree = build_tree(&m, &law, 3, 1000, Recombine::Off).unwrap();
        assert_eq!(tree.address((0, 0)), "root");
        assert_eq!(tree.address((3, 5)), "1.0.1");
        assert_eq!(tree.node_at(&[1, 0, 1]), (3, 5));
    }

    #[test]
    fn child_probabilities_sum_to_one_per_level() {
        let m = const_model(0.5, -0.1);
        let law = InnovationLaw::rademacher(1).unwrap();
        let tree = build_tree(
            &m,
            &law,
            6,
            10_000,
            Recombine::On {
                kind: StatKind::State,
                resolution: DEFAULT_MERGE_RESOLUTION,
            },
        )
        .unwrap();
        for level in tree.node_probabilities() {
            let total: f64 = level.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn payoff_tables_agree_between_full_and_recombined() {
        let m = const_model(0.4, -0.08);
        let law = InnovationLaw::rademacher(1).unwrap();
        let pair = PayoffPair::game(BasePayoff::lookback_call(1.0), Penalty::LinearDecay(0.1));
        let full = build_tree(&m, &law, 5, 1000, Recombine::Off).unwrap();
        let rec = build_tree(&m, &law, 5, 1000, Recombine::for_pair(&pair).unwrap()).unwrap();
        let (ff, fg) = full.payoff_tables(&pair).unwrap();
        let (rf, rg) = rec.payoff_tables(&pair).unwrap();
        // Spot-check: every full-tree path lands on a recombined node with
        // matching payoffs.
        for leaf in 0..full.level_count(5) {
            let mut atoms = Vec::new();
            let mut idx = leaf;
            for _ in 0..5 {
                atoms.push(idx % 2);
                idx /= 2;
            }
            atoms.reverse();
            let rn = rec.node_at(&atoms);
            assert!((ff[5][leaf] - rf[5][rn.1]).abs() < 1e-9);
            assert!((fg[5][leaf] - rg[5][rn.1]).abs() < 1e-9);
        }
    }
}
