//! Monte Carlo estimators of the two pathwise approximation errors: the
//! chain against its coupled diffusion reference, and the chain against its
//! block-coarse variant.

use super::TheoreticalBounds;
use crate::error::CoreError;
use crate::model::{effective_lip, DiffusionModel, InnovationLaw};
use crate::scheme::{block_partition, coarse_path, coupled_pair, simulate_path};
use crate::stats::{dist_sq, mean_and_se};
use crate::Result;
use rayon::prelude::*;
use serde::Serialize;

/// Plain Monte Carlo estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Estimate paired with the exact theoretical bound.  Compliance allows a
/// two-standard-error slack on the Monte Carlo side only; the bound itself
/// is exact.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundedEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
    pub bound: f64,
    pub compliant: bool,
}

/// Empirical strong approximation error
/// `E sup_t |X_N(t) - Xi(t)|^2` from Gaussian-coupled pairs, with the sup
/// evaluated on the fine reference grid.
pub fn strong_error(
    model: &DiffusionModel,
    law: &InnovationLaw,
    n_steps: usize,
    m_fine: usize,
    reps: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    if !law.is_gaussian() {
        return Err(CoreError::UnsupportedLaw {
            operation: "strong_error",
            required: "gaussian (the exact coupling needs Gaussian innovations)",
        });
    }
    if reps < 30 {
        return Err(CoreError::param("reps", "needs >= 30 replications"));
    }
    let values: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| coupled_pair(model, n_steps, m_fine, seed, r).map(|p| p.sup_sq_discrepancy()))
        .collect::<Result<Vec<f64>>>()?;
    let (estimate, std_error) = mean_and_se(&values);
    Ok(ErrorEstimate {
        estimate,
        std_error,
        reps,
    })
}

/// Empirical block-coarsening error `E sup_t |X_N(t) - X_coarse(t)|^2`
/// against the exact bound `136 L^8 N^{-1/2}`.  Both processes jump at the
/// same grid times, so the sup over the chain grid is exact.
pub fn coarse_error(
    model: &DiffusionModel,
    law: &InnovationLaw,
    n_steps: usize,
    reps: usize,
    seed: u64,
) -> Result<BoundedEstimate> {
    if reps == 0 {
        return Err(CoreError::param("reps", "must be >= 1"));
    }
    let partition = block_partition(n_steps)?;
    let values: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let path = simulate_path(model, law, n_steps, seed, r)?;
            let coarse = coarse_path(&path, model, &partition)?;
            let mut worst = 0.0_f64;
            for k in 0..=n_steps {
                worst = worst.max(dist_sq(path.state(k), coarse.state(k)));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (estimate, std_error) = mean_and_se(&values);
    let bounds = TheoreticalBounds::new(effective_lip(model, law), model.dim());
    let bound = bounds.coarse_bound(n_steps);
    Ok(BoundedEstimate {
        estimate,
        std_error,
        reps,
        bound,
        compliant: estimate - 2.0 * std_error <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::model_preset;

    #[test]
    fn zero_coefficients_give_exactly_zero_strong_error() {
        let m = DiffusionModel::scalar(|_| 0.0, |_| 0.0, 1.0, 0.4).unwrap();
        let law = InnovationLaw::gaussian(1).unwrap();
        let e = strong_error(&m, &law, 32, 32 * 4, 30, 1).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn pure_drift_strong_error_is_the_squared_lag() {
        let m = DiffusionModel::scalar(|_| 0.0, |_| 1.0, 1.0, 0.0).unwrap();
        let law = InnovationLaw::gaussian(1).unwrap();
        let n = 64;
        let e = strong_error(&m, &law, n, 64 * n, 30, 1).unwrap();
        let expected = (1.0 / n as f64).powi(2);
        assert_eq!(e.estimate, expected);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn finite_law_is_rejected() {
        let m = model_preset("gbm-1d").unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        assert!(matches!(
            strong_error(&m, &law, 16, 64, 30, 0),
            Err(CoreError::UnsupportedLaw { .. })
        ));
    }

    #[test]
    fn constant_coefficients_give_zero_coarse_error() {
        let m = model_preset("gbm-1d").unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let e = coarse_error(&m, &law, 64, 50, 3).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(e.compliant);
    }

    #[test]
    fn unit_blocks_give_zero_coarse_error() {
        let m = model_preset("sin-coef-1d").unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let e = coarse_error(&m, &law, 12, 50, 3).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn state_dependent_sigma_complies_with_the_bound() {
        // sigma(x) = 1/(1 + x^2) + 1 is bounded by 2 with Lipschitz
        // constant below 2, so L = 2 and the bound is 136 * 2^8 / 32.
        let m = DiffusionModel::scalar(|x| 1.0 / (1.0 + x * x) + 1.0, |_| 0.0, 2.0, 0.0).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let e = coarse_error(&m, &law, 1024, 500, 9).unwrap();
        let expected_bound = 136.0 * 256.0 / 32.0;
        assert!((e.bound - expected_bound).abs() < 1e-9);
        assert!(e.compliant, "{e:?}");
        assert!(e.estimate < expected_bound / 100.0, "loose bound expected: {e:?}");
    }
}
