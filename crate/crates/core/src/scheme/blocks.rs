//! Block partition of the time grid and the block-coarse chain.
//!
//! Steps are grouped into blocks of length `q = floor(N^(1/4))`; the coarse
//! chain reuses the innovations of a fine path but freezes both coefficients
//! at the fine chain's block-start states.

use super::{em_kernel, DiscretePath, StepBuffers};
use crate::error::CoreError;
use crate::model::DiffusionModel;
use crate::Result;

/// Partition of `{0, ..., N}` into blocks `[n_k, n_{k+1})` with
/// `n_k = k * q`, plus a tail block ending at `N` when `q` does not divide
/// `N`.  All fields come from exact integer arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    n_steps: usize,
    q: usize,
    /// Block boundaries `n_0 = 0 < n_1 < ... <= N`, including the tail end.
    ends: Vec<usize>,
    k_n: usize,
    k_max: usize,
    has_tail: bool,
}

impl BlockPartition {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Block length `q = floor(N^(1/4))`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Index of the last full-block boundary, `k_N = floor(N / q)`.
    pub fn k_n(&self) -> usize {
        self.k_n
    }

    /// Index of the final boundary (equals `k_N`, or `k_N + 1` with a tail).
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn has_tail(&self) -> bool {
        self.has_tail
    }

    /// Boundary `n_k`.
    pub fn end(&self, k: usize) -> usize {
        self.ends[k]
    }

    /// All boundaries `n_0, ..., n_{k_max}`.
    pub fn ends(&self) -> &[usize] {
        &self.ends
    }

    /// Block time scale `Delta(N) = q / N`.
    pub fn delta(&self) -> f64 {
        self.q as f64 / self.n_steps as f64
    }

    /// The block-start boundary governing step `n`, i.e. the largest `n_k <= n`.
    pub fn block_start_of_step(&self, n: usize) -> usize {
        (n / self.q) * self.q
    }

    /// True when min/max decisions are taken at step `n` in the coarse game
    /// (block boundaries and the terminal step).
    pub fn is_decision_step(&self, n: usize) -> bool {
        n == self.n_steps || (n % self.q == 0 && n / self.q <= self.k_n)
    }
}

/// Integer fourth root: the largest `q` with `q^4 <= n`.
pub(crate) fn floor_fourth_root(n: usize) -> usize {
    let mut q = (n as f64).powf(0.25) as usize;
    while (q + 1).checked_pow(4).map_or(false, |p| p as u128 <= n as u128) {
        q += 1;
    }
    while q > 1 && (q as u128).pow(4) > n as u128 {
        q -= 1;
    }
    q.max(1)
}

pub fn block_partition(n_steps: usize) -> Result<BlockPartition> {
    if n_steps == 0 {
        return Err(CoreError::param("n_steps", "must be >= 1"));
    }
    let q = floor_fourth_root(n_steps);
    let k_n = n_steps / q;
    let mut ends: Vec<usize> = (0..=k_n).map(|k| k * q).collect();
    let has_tail = k_n * q < n_steps;
    if has_tail {
        ends.push(n_steps);
    }
    let k_max = ends.len() - 1;
    Ok(BlockPartition {
        n_steps,
        q,
        ends,
        k_n,
        k_max,
        has_tail,
    })
}

/// Builds the block-coarse path from a fine path's recorded innovations,
/// with `sigma` and `b` evaluated at the fine chain's block-start states.
pub fn coarse_path(
    path: &DiscretePath,
    model: &DiffusionModel,
    partition: &BlockPartition,
) -> Result<DiscretePath> {
    let inn = path.innovations_flat().ok_or(CoreError::MissingInnovations)?;
    if path.n_steps() != partition.n_steps() {
        return Err(CoreError::shape("partition length", path.n_steps(), partition.n_steps()));
    }
    if path.dim() != model.dim() {
        return Err(CoreError::shape("path dimension", model.dim(), path.dim()));
    }
    let d = model.dim();
    let n = path.n_steps();
    let inv_sqrt = 1.0 / (n as f64).sqrt();
    let inv_n = 1.0 / n as f64;

    let mut buf = StepBuffers::new(d);
    let mut states = Vec::with_capacity((n + 1) * d);
    let mut x = path.state(0).to_vec();
    states.extend_from_slice(&x);
    let mut frozen_at = usize::MAX;
    for step in 0..n {
        let start = partition.block_start_of_step(step);
        if start != frozen_at {
            model.sigma_into(path.state(start), &mut buf.sigma);
            model.drift_into(path.state(start), &mut buf.drift);
            frozen_at = start;
        }
        let xi = &inn[step * d..(step + 1) * d];
        for (w, v) in buf.dw.iter_mut().zip(xi) {
            *w = inv_sqrt * v;
        }
        em_kernel(&mut x, &buf.sigma, &buf.drift, &buf.dw, inv_n);
        states.extend_from_slice(&x);
    }
    DiscretePath::from_parts(d, n, states, Some(inn.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_preset, DiffusionModel, InnovationLaw};
    use crate::scheme::simulate_path;

    #[test]
    fn partition_n16() {
        let p = block_partition(16).unwrap();
        assert_eq!(p.q(), 2);
        assert_eq!(p.ends(), &[0, 2, 4, 6, 8, 10, 12, 14, 16]);
        assert_eq!(p.k_n(), 8);
        assert_eq!(p.k_max(), 8);
        assert!(!p.has_tail());
        assert_eq!(p.delta(), 0.125);
    }

    #[test]
    fn partition_n17_has_tail() {
        let p = block_partition(17).unwrap();
        assert_eq!(p.q(), 2);
        assert_eq!(p.k_n(), 8);
        assert!(p.has_tail());
        assert_eq!(p.k_max(), 9);
        assert_eq!(p.end(9), 17);
    }

    #[test]
    fn partition_small_n_is_unit_blocks() {
        for n in 1..16 {
            let p = block_partition(n).unwrap();
            assert_eq!(p.q(), 1, "n = {n}");
            assert!(!p.has_tail());
            assert_eq!(p.k_max(), n);
        }
        assert_eq!(block_partition(10).unwrap().q(), 1);
    }

    #[test]
    fn fourth_root_is_exact_at_powers() {
        assert_eq!(floor_fourth_root(1), 1);
        assert_eq!(floor_fourth_root(15), 1);
        assert_eq!(floor_fourth_root(16), 2);
        assert_eq!(floor_fourth_root(80), 2);
        assert_eq!(floor_fourth_root(81), 3);
        assert_eq!(floor_fourth_root(4096), 8);
        assert_eq!(floor_fourth_root(6560), 8);
        assert_eq!(floor_fourth_root(6561), 9);
    }

    #[test]
    fn unit_blocks_reproduce_the_path_exactly() {
        let m = model_preset("sin-coef-1d").unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let path = simulate_path(&m, &law, 10, 4, 2).unwrap();
        let part = block_partition(10).unwrap();
        let coarse = coarse_path(&path, &m, &part).unwrap();
        assert_eq!(path.states_flat(), coarse.states_flat());
    }

    #[test]
    fn constant_coefficients_make_coarsening_identity() {
        let m = DiffusionModel::scalar(|_| 0.7, |_| -0.1, 1.0, 0.2).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        for n in [16, 81, 100] {
            let path = simulate_path(&m, &law, n, 5, 3).unwrap();
            let part = block_partition(n).unwrap();
            let coarse = coarse_path(&path, &m, &part).unwrap();
            assert_eq!(path.states_flat(), coarse.states_flat(), "n = {n}");
        }
    }

    #[test]
    fn missing_innovations_is_an_error() {
        let p = DiscretePath::from_parts(1, 2, vec![0.0, 0.1, 0.2], None).unwrap();
        let m = model_preset("gbm-1d").unwrap();
        let part = block_partition(2).unwrap();
        assert!(matches!(
            coarse_path(&p, &m, &part),
            Err(CoreError::MissingInnovations)
        ));
    }

    #[test]
    fn decision_steps_cover_boundaries_and_terminal() {
        let p = block_partition(17).unwrap();
        let steps: Vec<usize> = (0..=17).filter(|&n| p.is_decision_step(n)).collect();
        assert_eq!(steps, vec![0, 2, 4, 6, 8, 10, 12, 14, 16, 17]);
    }
}
