//! Payoff functionals on path prefixes.
//!
//! A payoff pair `(F, G)` with `G >= F` and `G_1 = F_1` defines the game:
//! the exerciser receives `F_t` when stopping first, the canceller pays
//! `G_s` when stopping strictly first.  Payoffs are functionals of the
//! piecewise-constant path prefix; the built-in catalog evaluates either
//! from the full prefix or incrementally from a small sufficient statistic,
//! which is what makes recombining lattices possible.

use std::fmt;
use std::sync::Arc;

/// Read-only view of a path prefix on the uniform grid `{k/n_total}`.
///
/// Holds the first `len` states (so the prefix time is `(len-1)/n_total`).
#[derive(Clone, Copy)]
pub struct StateSeq<'a> {
    data: &'a [f64],
    dim: usize,
    n_total: usize,
}

impl<'a> StateSeq<'a> {
    pub fn new(data: &'a [f64], dim: usize, n_total: usize) -> Self {
        debug_assert!(!data.is_empty() && data.len() % dim == 0);
        StateSeq { data, dim, n_total }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid denominator `N` of the underlying path.
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn state(&self, k: usize) -> &'a [f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &'a [f64] {
        self.state(self.len() - 1)
    }

    /// Time of the prefix end.
    pub fn t(&self) -> f64 {
        (self.len() - 1) as f64 / self.n_total as f64
    }

    /// Sub-prefix holding the first `k + 1` states.
    pub fn prefix(&self, k: usize) -> StateSeq<'a> {
        StateSeq::new(&self.data[..(k + 1) * self.dim], self.dim, self.n_total)
    }

    pub fn iter_states(&self) -> impl Iterator<Item = &'a [f64]> + '_ {
        (0..self.len()).map(|k| self.state(k))
    }
}

/// User-defined payoff evaluated on the full path prefix.
pub trait PrefixFunctional: Send + Sync {
    fn eval(&self, seq: &StateSeq) -> f64;
    fn describe(&self) -> &str {
        "custom"
    }
}

/// Sufficient path statistic a payoff depends on, used as the recombination
/// key of scenario trees.  Merging is valid only when the payoff declares
/// one of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatKind {
    /// Current state only.
    State,
    /// Current state plus the running maximum of `exp(x[component])`.
    StateAndMax { component: usize },
    /// Current state plus the running integral of `exp(x[component]) dt`
    /// over the piecewise-constant path.
    StateAndIntegral { component: usize },
}

impl StatKind {
    /// Number of extra statistic slots beyond the state.
    pub fn n_extras(&self) -> usize {
        match self {
            StatKind::State => 0,
            _ => 1,
        }
    }

    pub fn init_extras(&self, x0: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match *self {
            StatKind::State => {}
            StatKind::StateAndMax { component } => out.push(x0[component].exp()),
            StatKind::StateAndIntegral { .. } => out.push(0.0),
        }
    }

    /// One-step update when moving from `prev_state` to `new_state` over a
    /// grid step of length `inv_n`.
    pub fn update_extras(
        &self,
        prev_extras: &[f64],
        prev_state: &[f64],
        new_state: &[f64],
        inv_n: f64,
        out: &mut Vec<f64>,
    ) {
        out.clear();
        match *self {
            StatKind::State => {}
            StatKind::StateAndMax { component } => {
                out.push(prev_extras[0].max(new_state[component].exp()));
            }
            StatKind::StateAndIntegral { component } => {
                out.push(prev_extras[0] + prev_state[component].exp() * inv_n);
            }
        }
    }

    /// Finest common statistic of two payoffs, if one exists.
    pub fn join(a: StatKind, b: StatKind) -> Option<StatKind> {
        use StatKind::*;
        match (a, b) {
            (State, x) | (x, State) => Some(x),
            (StateAndMax { component: c1 }, StateAndMax { component: c2 }) if c1 == c2 => Some(a),
            (StateAndIntegral { component: c1 }, StateAndIntegral { component: c2 })
                if c1 == c2 =>
            {
                Some(a)
            }
            _ => None,
        }
    }
}

/// Built-in payoff catalog plus an escape hatch for custom functionals.
///
/// All asset-linked payoffs treat `exp(x[component])` as the asset price.
#[derive(Clone)]
pub enum BasePayoff {
    /// `(strike - exp(x))^+` at the current state.
    Put { strike: f64, component: usize },
    /// `(exp(x) - strike)^+` at the current state.
    Call { strike: f64, component: usize },
    /// `(running max of exp(x) - strike)^+`.
    LookbackCall { strike: f64, component: usize },
    /// Put on the projected running average: with `I_t` the integral of
    /// `exp(x)` over `[0, t]`, pays `(strike - I_t - (1-t) exp(x_t))^+`.
    /// At `t = 1` this is an average-price (Asian) put.
    AveragePut { strike: f64, component: usize },
    /// Constant value, independent of path and time.
    Constant { value: f64 },
    /// Deterministic step function of time: value `values[i]` on
    /// `[times[i], times[i+1])`.  Test scaffolding.
    TimeTable { times: Vec<f64>, values: Vec<f64> },
    /// Arbitrary prefix functional; declares no sufficient statistic.
    Custom(Arc<dyn PrefixFunctional>),
}

impl BasePayoff {
    pub fn put(strike: f64) -> Self {
        BasePayoff::Put { strike, component: 0 }
    }

    pub fn call(strike: f64) -> Self {
        BasePayoff::Call { strike, component: 0 }
    }

    pub fn lookback_call(strike: f64) -> Self {
        BasePayoff::LookbackCall { strike, component: 0 }
    }

    pub fn average_put(strike: f64) -> Self {
        BasePayoff::AveragePut { strike, component: 0 }
    }

    pub fn stat_kind(&self) -> Option<StatKind> {
        match self {
            BasePayoff::Put { .. }
            | BasePayoff::Call { .. }
            | BasePayoff::Constant { .. }
            | BasePayoff::TimeTable { .. } => Some(StatKind::State),
            BasePayoff::LookbackCall { component, .. } => {
                Some(StatKind::StateAndMax { component: *component })
            }
            BasePayoff::AveragePut { component, .. } => {
                Some(StatKind::StateAndIntegral { component: *component })
            }
            BasePayoff::Custom(_) => None,
        }
    }

    /// Evaluation from `(t, state, extras)`.  `extras` must follow the
    /// layout of a statistic at least as fine as `self.stat_kind()`;
    /// callers guarantee this via [`StatKind::join`].
    pub fn eval_state(&self, t: f64, state: &[f64], extras: &[f64]) -> f64 {
        match self {
            BasePayoff::Put { strike, component } => (strike - state[*component].exp()).max(0.0),
            BasePayoff::Call { strike, component } => (state[*component].exp() - strike).max(0.0),
            BasePayoff::LookbackCall { strike, .. } => (extras[0] - strike).max(0.0),
            BasePayoff::AveragePut { strike, component } => {
                let projected = extras[0] + (1.0 - t) * state[*component].exp();
                (strike - projected).max(0.0)
            }
            BasePayoff::Constant { value } => *value,
            BasePayoff::TimeTable { times, values } => {
                let mut v = values[0];
                for (ti, vi) in times.iter().zip(values) {
                    if *ti <= t {
                        v = *vi;
                    }
                }
                v
            }
            BasePayoff::Custom(_) => {
                unreachable!("custom payoffs evaluate from prefixes only")
            }
        }
    }

    /// Evaluation from a full path prefix.
    pub fn eval_prefix(&self, seq: &StateSeq) -> f64 {
        let t = seq.t();
        match self {
            BasePayoff::LookbackCall { strike, component } => {
                let m = seq
                    .iter_states()
                    .map(|s| s[*component].exp())
                    .fold(f64::NEG_INFINITY, f64::max);
                (m - strike).max(0.0)
            }
            BasePayoff::AveragePut { component, .. } => {
                let inv_n = 1.0 / seq.n_total() as f64;
                let mut integral = 0.0;
                for k in 0..seq.len() - 1 {
                    integral += seq.state(k)[*component].exp() * inv_n;
                }
                self.eval_state(t, seq.last(), &[integral])
            }
            BasePayoff::Custom(f) => f.eval(seq),
            _ => self.eval_state(t, seq.last(), &[]),
        }
    }

    /// Contribution to the regularity constant of Eqs. for spatial and
    /// temporal payoff continuity; probe-checked, not proven.
    fn k_bound(&self) -> f64 {
        match self {
            BasePayoff::Put { .. } | BasePayoff::Call { .. } | BasePayoff::LookbackCall { .. } => {
                1.0
            }
            BasePayoff::AveragePut { .. } => 2.0,
            BasePayoff::Constant { .. } => 0.0,
            BasePayoff::TimeTable { times, values } => {
                let mut k = 0.0_f64;
                for i in 1..times.len() {
                    let dt = times[i] - times[i - 1];
                    if dt > 0.0 {
                        k = k.max((values[i] - values[i - 1]).abs() / dt);
                    }
                }
                k
            }
            BasePayoff::Custom(_) => 1.0,
        }
    }

    fn describe(&self) -> String {
        match self {
            BasePayoff::Put { strike, .. } => format!("put(k={strike})"),
            BasePayoff::Call { strike, .. } => format!("call(k={strike})"),
            BasePayoff::LookbackCall { strike, .. } => format!("lookback-call(k={strike})"),
            BasePayoff::AveragePut { strike, .. } => format!("average-put(k={strike})"),
            BasePayoff::Constant { value } => format!("const({value})"),
            BasePayoff::TimeTable { .. } => "timetable".to_string(),
            BasePayoff::Custom(f) => f.describe().to_string(),
        }
    }
}

impl fmt::Debug for BasePayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

/// Cancellation penalty added on top of a base payoff.  Both shapes vanish
/// at `t = 1`, forcing the terminal equality `G_1 = F_1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Penalty {
    None,
    /// Constant penalty at interior times, zero at `t = 1`.  Discontinuous
    /// at maturity, so it does not satisfy the temporal regularity bound
    /// near `t = 1`; use `LinearDecay` where regularity matters.
    Constant(f64),
    /// Penalty `delta * (1 - t)`, continuous down to zero at maturity.
    LinearDecay(f64),
}

impl Penalty {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Penalty::None => 0.0,
            Penalty::Constant(d) => {
                if t < 1.0 {
                    d
                } else {
                    0.0
                }
            }
            Penalty::LinearDecay(d) => d * (1.0 - t),
        }
    }

    fn slope(&self) -> f64 {
        match *self {
            Penalty::None => 0.0,
            Penalty::Constant(d) => d,
            Penalty::LinearDecay(d) => d,
        }
    }
}

/// One side of a payoff pair: a catalog payoff plus an optional penalty.
#[derive(Clone, Debug)]
pub struct Payoff {
    base: BasePayoff,
    penalty: Penalty,
}

impl Payoff {
    pub fn new(base: BasePayoff) -> Self {
        Payoff { base, penalty: Penalty::None }
    }

    pub fn with_penalty(base: BasePayoff, penalty: Penalty) -> Self {
        Payoff { base, penalty }
    }

    pub fn base(&self) -> &BasePayoff {
        &self.base
    }

    pub fn stat_kind(&self) -> Option<StatKind> {
        self.base.stat_kind()
    }

    pub fn eval_state(&self, t: f64, state: &[f64], extras: &[f64]) -> f64 {
        let v = self.base.eval_state(t, state, extras);
        match self.penalty {
            Penalty::None => v,
            p => v + p.value(t),
        }
    }

    pub fn eval_prefix(&self, seq: &StateSeq) -> f64 {
        let v = self.base.eval_prefix(seq);
        match self.penalty {
            Penalty::None => v,
            p => v + p.value(seq.t()),
        }
    }

    fn k_bound(&self) -> f64 {
        self.base.k_bound() + self.penalty.slope()
    }

    fn describe(&self) -> String {
        match self.penalty {
            Penalty::None => self.base.describe(),
            Penalty::Constant(d) => format!("{}+{d}", self.base.describe()),
            Penalty::LinearDecay(d) => format!("{}+{d}(1-t)", self.base.describe()),
        }
    }
}

/// Exercise/cancellation payoff pair `(F, G)` with its regularity constant.
#[derive(Clone, Debug)]
pub struct PayoffPair {
    lower: Payoff,
    upper: Payoff,
    reg_const: f64,
    id: String,
}

impl PayoffPair {
    pub fn new(lower: Payoff, upper: Payoff) -> Self {
        let reg_const = (lower.k_bound() + upper.k_bound()).max(1.0);
        let id = format!("{}|{}", lower.describe(), upper.describe());
        PayoffPair { lower, upper, reg_const, id }
    }

    /// The standard game-option pair: `F` is the base payoff, `G = F` plus
    /// a penalty vanishing at maturity.
    pub fn game(base: BasePayoff, penalty: Penalty) -> Self {
        PayoffPair::new(Payoff::new(base.clone()), Payoff::with_penalty(base, penalty))
    }

    /// Degenerate pair `F = G` (forced immediate-saddle value `F_0`).
    pub fn equal(base: BasePayoff) -> Self {
        PayoffPair::game(base, Penalty::None)
    }

    pub fn with_reg_const(mut self, k: f64) -> Self {
        self.reg_const = k;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn lower(&self) -> &Payoff {
        &self.lower
    }

    pub fn upper(&self) -> &Payoff {
        &self.upper
    }

    pub fn reg_const(&self) -> f64 {
        self.reg_const
    }

    /// Common sufficient statistic of both sides, if any.
    pub fn stat_kind(&self) -> Option<StatKind> {
        match (self.lower.stat_kind(), self.upper.stat_kind()) {
            (Some(a), Some(b)) => StatKind::join(a, b),
            _ => None,
        }
    }

    pub fn f_prefix(&self, seq: &StateSeq) -> f64 {
        self.lower.eval_prefix(seq)
    }

    pub fn g_prefix(&self, seq: &StateSeq) -> f64 {
        self.upper.eval_prefix(seq)
    }

    pub fn f_state(&self, t: f64, state: &[f64], extras: &[f64]) -> f64 {
        self.lower.eval_state(t, state, extras)
    }

    pub fn g_state(&self, t: f64, state: &[f64], extras: &[f64]) -> f64 {
        self.upper.eval_state(t, state, extras)
    }
}
