//! Exact bound constants of the approximation theory, as pure functions of
//! `(L, d)` and auxiliary parameters.
//!
//! The constants are reported alongside the empirical estimates; several of
//! them (notably the strong-approximation constant and its threshold grid
//! size) are astronomically large at desk scale, so they are computed in
//! exact integer or log-space arithmetic and never gate execution.

use crate::scheme::floor_fourth_root;
use crate::stats::log1p_exp;
use num_bigint::BigUint;

/// Bound constants for a model with joint bound/Lipschitz constant `L >= 1`
/// in dimension `d`.
#[derive(Clone, Copy, Debug)]
pub struct TheoreticalBounds {
    l: f64,
    dim: usize,
}

impl TheoreticalBounds {
    pub fn new(l: f64, dim: usize) -> Self {
        TheoreticalBounds { l, dim }
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Characteristic-function exponent: deviations decay like `n^(-1/6)`.
    pub fn cf_exponent(&self) -> f64 {
        1.0 / 6.0
    }

    /// Characteristic-function constant `C1 = (3/2) L^6`.
    pub fn cf_constant(&self) -> f64 {
        1.5 * self.l.powi(6)
    }

    /// Bound on the cf deviation at sum length `n`.
    pub fn cf_bound(&self, n: usize) -> f64 {
        self.cf_constant() * (n as f64).powf(-self.cf_exponent())
    }

    /// Radius of validity of the cf bound: `|w| <= n^(1/12)`.
    pub fn cf_radius(&self, n: usize) -> f64 {
        (n as f64).powf(self.cf_exponent() / 2.0)
    }

    /// Constant of the block-coarsening error bound, `136 L^8`.
    pub fn coarse_constant(&self) -> f64 {
        136.0 * self.l.powi(8)
    }

    /// Bound on `E sup |X - X_coarse|^2`: `136 L^8 N^(-1/2)`.
    pub fn coarse_bound(&self, n: usize) -> f64 {
        self.coarse_constant() / (n as f64).sqrt()
    }

    /// Log of the single-time exponential moment constant
    /// `D^X_M = 2 d exp(d^4 L^4 / 2 + L + M^3 d^6 L^6 e^{M d^2 L^2} / 6)`.
    pub fn ln_exp_moment_const(&self, m: f64) -> f64 {
        let d = self.dim as f64;
        let l = self.l;
        let inner = m * d * d * l * l;
        let tail = m.powi(3) * d.powi(6) * l.powi(6) * inner.exp() / 6.0;
        (2.0 * d).ln() + 0.5 * d.powi(4) * l.powi(4) + l + tail
    }

    /// `D^X_M` itself; infinite when it overflows f64.
    pub fn exp_moment_const(&self, m: f64) -> f64 {
        self.ln_exp_moment_const(m).exp()
    }

    /// Log of the diffusion exponential moment constant
    /// `D^Xi_M = 2 exp(L + M L^2 d^2 / 2)`.
    pub fn ln_diffusion_moment_const(&self, m: f64) -> f64 {
        let d = self.dim as f64;
        2f64.ln() + self.l + 0.5 * m * self.l * self.l * d * d
    }

    /// Log of the max-over-grid moment constant
    /// `D^X_{M,delta} = 1 + sqrt(D^X_{2M/delta} D^X_{2M})`.
    pub fn ln_max_moment_const(&self, m: f64, delta: f64) -> f64 {
        let s = 0.5 * (self.ln_exp_moment_const(2.0 * m / delta) + self.ln_exp_moment_const(2.0 * m));
        log1p_exp(s)
    }

    /// Log of the bound on `E exp(M max_n |X_N(n/N)|)`:
    /// `D^X_M e^{M |x0|} N^delta`.
    pub fn ln_exp_moment_bound(&self, m: f64, x0_norm: f64, n: usize, delta: f64) -> f64 {
        self.ln_exp_moment_const(m) + m * x0_norm + delta * (n as f64).ln()
    }

    /// Log of the coarse-game budget
    /// `D^X_{K,delta} K e^{K|x0|} N^{delta - 1/4} (1 + L + L^2)`
    /// bounding `|V_N - V_N^block|`.
    pub fn ln_coarse_value_budget(&self, reg_const: f64, x0_norm: f64, n: usize, delta: f64) -> f64 {
        self.ln_max_moment_const(reg_const, delta)
            + reg_const.ln()
            + reg_const * x0_norm
            + (delta - 0.25) * (n as f64).ln()
            + (1.0 + self.l + self.l * self.l).ln()
    }

    /// Threshold grid size `N0 = ((10^8 d)^{24 d} + 1)^4` above which the
    /// strong-approximation theorem applies, in exact integer arithmetic.
    pub fn n0(&self) -> BigUint {
        let base = BigUint::from(100_000_000u64) * BigUint::from(self.dim);
        let inner = base.pow(24 * self.dim as u32) + BigUint::from(1u8);
        inner.pow(4)
    }

    /// Decimal digit count of `N0`.
    pub fn n0_digits(&self) -> usize {
        self.n0().to_string().len()
    }

    /// Strong-error exponent on the block count: the squared L2 error is
    /// bounded by `C0 [N^(1/4)]^(-1/(50 d))`.
    pub fn strong_exponent(&self) -> f64 {
        -1.0 / (50.0 * self.dim as f64)
    }

    /// Game-value exponent: `|V - V_N| <= C_delta [N^(1/4)]^(delta - 1/(100 d))`.
    pub fn value_exponent(&self, delta: f64) -> f64 {
        delta - 1.0 / (100.0 * self.dim as f64)
    }

    /// Prokhorov-distance exponent `-1/(150 d)` on `[N^(1/4)]`.
    pub fn prokhorov_exponent(&self) -> f64 {
        -1.0 / (150.0 * self.dim as f64)
    }

    /// `C4 = L^2 (16 d + 4)`.
    pub fn c4(&self) -> f64 {
        self.l * self.l * (16.0 * self.dim as f64 + 4.0)
    }

    /// `C2`: the martingale-coupling constant.  Its leading factor is a
    /// supremum over all grid sizes, evaluated here by numeric maximization
    /// (the maximizer sits at astronomically large `N`, where the integer
    /// constraint on `[N^(1/4)]` is immaterial).
    pub fn c2(&self) -> f64 {
        let d = self.dim as f64;
        let l = self.l;
        // g(y) = -y/(480 d) + ln sqrt(ln N) with ln N = 4 ln(e^y + 1).
        let g = |y: f64| -> f64 {
            let ln_n = 4.0 * log1p_exp(y);
            -y / (480.0 * d) + 0.5 * ln_n.max(f64::MIN_POSITIVE).ln()
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0e6 * d);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if g(m1) < g(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let mut sup = g(0.5 * (lo + hi)).exp();
        // Exact small-N scan for completeness.
        for n in 2..=10_000usize {
            let q = floor_fourth_root(n) as f64;
            let v = q.powf(-1.0 / (480.0 * d)) * (n as f64).ln().sqrt();
            sup = sup.max(v);
        }
        sup * (1.0 + 4.0 * l * l * (l * l + d) + 2.0 * l * l * d)
            * (1.0 + (2.0 * self.cf_constant().sqrt()).sqrt() + 2.0 * (l * d.sqrt()).sqrt())
    }

    /// `C3 = 408 L^8 + 6 C2 + 96`.
    pub fn c3(&self) -> f64 {
        408.0 * self.l.powi(8) + 6.0 * self.c2() + 96.0
    }

    /// `C0 = C3 e^{C4} + 2 L^2 (L^2 + 1) + 40 L^2`; may be infinite in f64,
    /// see [`ln_c0`](Self::ln_c0).
    pub fn c0(&self) -> f64 {
        self.c3() * self.c4().exp() + 2.0 * self.l.powi(2) * (self.l.powi(2) + 1.0)
            + 40.0 * self.l.powi(2)
    }

    /// `ln C0` in overflow-safe form.
    pub fn ln_c0(&self) -> f64 {
        let a = self.c3().ln() + self.c4();
        let b = (2.0 * self.l.powi(2) * (self.l.powi(2) + 1.0) + 40.0 * self.l.powi(2)).ln();
        a + log1p_exp(b - a)
    }

    /// Per-block coupling tolerance
    /// `rho(N) = [N^(1/4)]^(-1/(24 d)) (ln N + 2 sqrt(C1) + 4 L sqrt(d))`.
    pub fn rho(&self, n: usize) -> f64 {
        let q = floor_fourth_root(n) as f64;
        let d = self.dim as f64;
        q.powf(-1.0 / (24.0 * d))
            * ((n as f64).ln() + 2.0 * self.cf_constant().sqrt() + 4.0 * self.l * d.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_constants_match_hand_computation() {
        let b = TheoreticalBounds::new(1.0, 1);
        assert_eq!(b.cf_exponent(), 1.0 / 6.0);
        assert!((b.cf_constant() - 1.5).abs() < 1e-12);
        assert!((b.coarse_constant() - 136.0).abs() < 1e-12);
        // D^X_1 = 2 exp(1/2 + 1 + e/6).
        let expected = 2.0 * (0.5 + 1.0 + std::f64::consts::E / 6.0).exp();
        assert!((b.exp_moment_const(1.0) - expected).abs() < 1e-12 * expected);
        // D^Xi_1 = 2 exp(1 + 1/2).
        assert!((b.ln_diffusion_moment_const(1.0) - (2f64.ln() + 1.5)).abs() < 1e-12);
        assert!((b.c4() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn n0_is_ten_to_the_768_for_d1() {
        let b = TheoreticalBounds::new(1.0, 1);
        assert_eq!(b.n0_digits(), 769);
        // ((10^8)^24 + 1)^4 starts with 1 followed by zeros until the
        // cross terms: leading digit is 1.
        assert!(b.n0().to_string().starts_with('1'));
    }

    #[test]
    fn coarse_bound_values() {
        let b = TheoreticalBounds::new(2.0, 1);
        // 136 * 2^8 / sqrt(4096) = 136 * 256 / 64 = 544.
        assert!((b.coarse_bound(4096) - 544.0).abs() < 1e-12);
    }

    #[test]
    fn cf_bound_spot_value() {
        let b = TheoreticalBounds::new(1.0, 1);
        // 1.5 * 16^(-1/6) = 1.5 / 2^(2/3) ~ 0.9449.
        assert!((b.cf_bound(16) - 1.5 / 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn exponents() {
        let b = TheoreticalBounds::new(1.0, 1);
        assert!((b.strong_exponent() + 0.02).abs() < 1e-15);
        assert!((b.value_exponent(0.001) - (0.001 - 0.01)).abs() < 1e-15);
        assert!((b.prokhorov_exponent() + 1.0 / 150.0).abs() < 1e-15);
    }

    #[test]
    fn c_chain_is_finite_and_ordered() {
        let b = TheoreticalBounds::new(1.0, 1);
        let c2 = b.c2();
        // Continuum maximizer: e^{-1/2} sqrt(960) times the two factors.
        let lead = (-0.5f64).exp() * 960f64.sqrt();
        let factors = (1.0 + 4.0 * 2.0 + 2.0) * (1.0 + (2.0 * 1.5f64.sqrt()).sqrt() + 2.0);
        assert!((c2 - lead * factors).abs() < 1e-6 * c2, "c2 = {c2}");
        let c3 = b.c3();
        assert!((c3 - (408.0 + 6.0 * c2 + 96.0)).abs() < 1e-9);
        let c0 = b.c0();
        assert!(c0.is_finite() && c0 > c3);
        assert!((b.ln_c0() - c0.ln()).abs() < 1e-9);
    }

    #[test]
    fn log_space_constants_survive_extreme_parameters() {
        let b = TheoreticalBounds::new(2.0, 1);
        // 2K/delta = 40 with L = 2: the plain constant overflows f64 by
        // hundreds of orders of magnitude, the log does not.
        assert!(!b.exp_moment_const(40.0).is_finite());
        let ln = b.ln_max_moment_const(2.0, 0.1);
        assert!(ln.is_finite() && ln > 1e10, "ln = {ln}");
        let budget = b.ln_coarse_value_budget(2.0, 0.0, 1 << 20, 0.1);
        assert!(budget.is_finite());
    }

    #[test]
    fn rho_spot_value() {
        let b = TheoreticalBounds::new(1.0, 1);
        // q = 8 at N = 4096: 8^(-1/24) (ln 4096 + 2 sqrt(1.5) + 4).
        let expected =
            8f64.powf(-1.0 / 24.0) * (4096f64.ln() + 2.0 * 1.5f64.sqrt() + 4.0);
        assert!((b.rho(4096) - expected).abs() < 1e-12);
        assert!(b.rho(4096) > 0.0);
    }
}
