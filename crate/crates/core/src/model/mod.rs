//! Diffusion coefficients, innovation laws and payoff functionals, together
//! with probe-based validation of the standing assumptions.

mod law;
mod payoff;
mod presets;
mod validate;

pub use law::{InnovationLaw, LawKind};
pub use payoff::{BasePayoff, Payoff, PayoffPair, Penalty, PrefixFunctional, StatKind, StateSeq};
pub use presets::{law_preset, model_preset, payoff_preset, LAW_PRESETS, MODEL_PRESETS, PAYOFF_PRESETS};
pub use validate::{validate_innovations, validate_model, validate_payoffs, CheckResult, ValidationReport};

use crate::error::CoreError;
use crate::Result;
use std::fmt;
use std::sync::Arc;

/// Matrix-valued coefficient: writes the row-major `dim x dim` diffusion
/// matrix at `x` into `out`.
pub type MatrixFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Vector-valued coefficient: writes the drift at `x` into `out`.
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Bounded Lipschitz diffusion dynamics `d Xi = sigma(Xi) dW + b(Xi) dt`.
///
/// `lip_bound` is the single constant `L >= 1` that is required to bound
/// both coefficients and both Lipschitz moduli (Euclidean norm for the
/// drift, Frobenius norm for the matrix).  The bound cannot be proven for
/// black-box coefficients; [`validate_model`] certifies it empirically on a
/// recorded probe set.
#[derive(Clone)]
pub struct DiffusionModel {
    dim: usize,
    sigma: MatrixFn,
    drift: VectorFn,
    lip_bound: f64,
    x0: Vec<f64>,
    id: String,
}

impl DiffusionModel {
    pub fn new(
        dim: usize,
        sigma: MatrixFn,
        drift: VectorFn,
        lip_bound: f64,
        x0: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::param("dim", "must be positive"));
        }
        if x0.len() != dim {
            return Err(CoreError::shape("initial state", dim, x0.len()));
        }
        if !(lip_bound >= 1.0) {
            return Err(CoreError::param("lip_bound", format!("L = {lip_bound} must be >= 1")));
        }
        Ok(DiffusionModel {
            dim,
            sigma,
            drift,
            lip_bound,
            x0,
            id: "custom".to_string(),
        })
    }

    /// Scalar model from plain closures, the common case in tests.
    pub fn scalar(
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lip_bound: f64,
        x0: f64,
    ) -> Result<Self> {
        DiffusionModel::new(
            1,
            Arc::new(move |x, out| out[0] = sigma(x[0])),
            Arc::new(move |x, out| out[0] = drift(x[0])),
            lip_bound,
            vec![x0],
        )
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lip_bound(&self) -> f64 {
        self.lip_bound
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Evaluates the diffusion matrix into `out` (row-major, `dim * dim`).
    pub fn sigma_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim * self.dim);
        (self.sigma)(x, out);
    }

    /// Evaluates the drift into `out`.
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.drift)(x, out);
    }

    pub fn sigma_at(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        self.sigma_into(x, &mut out);
        out
    }

    pub fn drift_at(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.drift_into(x, &mut out);
        out
    }

    /// Covariance `A(x) = sigma(x) sigma*(x)`, row-major.
    pub fn covariance_at(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let s = self.sigma_at(x);
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += s[i * d + k] * s[j * d + k];
                }
                a[i * d + j] = acc;
            }
        }
        a
    }

    /// Replaces the drift with the martingale-measure drift derived from
    /// the current diffusion matrix; see [`martingale_drift`].
    pub fn with_martingale_drift(mut self) -> Self {
        self.drift = martingale_drift(self.sigma.clone(), self.dim);
        self
    }
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionModel")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("lip_bound", &self.lip_bound)
            .field("x0", &self.x0)
            .finish()
    }
}

/// Drift making the exponential asset prices `exp(X^(i))` local martingales:
/// `b_i(x) = -1/2 sum_j sigma_ij(x)^2`.
pub fn martingale_drift(sigma: MatrixFn, dim: usize) -> VectorFn {
    Arc::new(move |x, out| {
        let mut s = vec![0.0; dim * dim];
        (sigma)(x, &mut s);
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += s[i * dim + j] * s[i * dim + j];
            }
            out[i] = -0.5 * acc;
        }
    })
}

/// The single bound constant that the approximation theory uses: the model's
/// `L` must also dominate the innovation norm bound, so bound computations
/// take the maximum of the two.
pub fn effective_lip(model: &DiffusionModel, law: &InnovationLaw) -> f64 {
    match law.norm_bound() {
        Some(lxi) => model.lip_bound().max(lxi),
        None => model.lip_bound(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_constructor_and_accessors() {
        let m = DiffusionModel::scalar(|x| x.sin(), |_| 0.0, 1.0, 0.5).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.x0(), &[0.5]);
        assert!((m.sigma_at(&[1.0])[0] - 1.0f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_lip_bound() {
        assert!(DiffusionModel::scalar(|_| 1.0, |_| 0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let r = DiffusionModel::new(
            2,
            Arc::new(|_, out| out.fill(0.0)),
            Arc::new(|_, out| out.fill(0.0)),
            1.0,
            vec![0.0],
        );
        assert!(matches!(r, Err(CoreError::Shape { .. })));
    }

    #[test]
    fn martingale_drift_constant_sigma() {
        // d=1, sigma = s: b = -s^2/2.
        let sigma: MatrixFn = Arc::new(|_, out| out[0] = 0.2);
        let b = martingale_drift(sigma, 1);
        let mut out = [0.0];
        (b)(&[3.0], &mut out);
        assert!((out[0] + 0.02).abs() < 1e-15);
    }

    #[test]
    fn martingale_drift_identity_2d() {
        let sigma: MatrixFn = Arc::new(|_, out| {
            out.fill(0.0);
            out[0] = 1.0;
            out[3] = 1.0;
        });
        let b = martingale_drift(sigma, 2);
        let mut out = [0.0, 0.0];
        (b)(&[0.0, 0.0], &mut out);
        assert_eq!(out, [-0.5, -0.5]);
    }

    #[test]
    fn covariance_of_identity_is_identity() {
        let m = model_preset("identity-2d").unwrap();
        let a = m.covariance_at(&[0.3, -0.7]);
        assert_eq!(a, vec![1.0, 0.0, 0.0, 1.0]);
    }
}
