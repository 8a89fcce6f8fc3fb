//! Game values across a ladder of grid sizes with successive differences.
//!
//! The theoretical convergence rate of `V_N` to the continuous game value
//! carries an exponent near `1/(100 d)` and a threshold grid size far
//! beyond reach, so the rate itself is not measurable at desk scale.  The
//! measurable deliverable is the Cauchy behaviour of `V_N` along a grid
//! ladder: the successive differences and their decay.

use crate::dynkin::{backward_value, build_tree, Recombine};
use crate::model::{DiffusionModel, InnovationLaw, PayoffPair};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceEntry {
    pub n: usize,
    /// Game value, or the per-grid failure that prevented it.
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub entries: Vec<ConvergenceEntry>,
    /// `|V_{N'} - V_N|` over consecutive successful entries.
    pub differences: Vec<f64>,
}

impl ConvergenceTable {
    pub fn values(&self) -> Vec<(usize, f64)> {
        self.entries
            .iter()
            .filter_map(|e| e.value.map(|v| (e.n, v)))
            .collect()
    }
}

/// Computes `V_N` for each grid size in `n_list` (recombining the tree on
/// the payoff's sufficient statistic when `recombine` is set) and tabulates
/// successive differences.  Per-grid failures are recorded as rows and do
/// not abort the remaining grids.
pub fn value_convergence(
    model: &DiffusionModel,
    law: &InnovationLaw,
    pair: &PayoffPair,
    n_list: &[usize],
    node_cap: u64,
    recombine: bool,
) -> ConvergenceTable {
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let result = (|| -> crate::Result<f64> {
            let mode = if recombine {
                Recombine::for_pair(pair)?
            } else {
                Recombine::Off
            };
            let tree = build_tree(model, law, n, node_cap, mode)?;
            Ok(backward_value(&tree, pair)?.value)
        })();
        entries.push(match result {
            Ok(v) => ConvergenceEntry {
                n,
                value: Some(v),
                error: None,
            },
            Err(e) => ConvergenceEntry {
                n,
                value: None,
                error: Some(e.to_string()),
            },
        });
    }
    let values: Vec<f64> = entries.iter().filter_map(|e| e.value).collect();
    let differences = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    ConvergenceTable {
        entries,
        differences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BasePayoff, PayoffPair, Penalty};

    #[test]
    fn equal_payoffs_have_zero_differences() {
        let m = DiffusionModel::scalar(|_| 0.3, |_| -0.045, 1.0, 0.0).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let pair = PayoffPair::equal(BasePayoff::put(1.0));
        let table = value_convergence(&m, &law, &pair, &[4, 8, 16], 1 << 20, true);
        let f0 = (1.0f64 - 1.0).max(0.0);
        for (_, v) in table.values() {
            assert_eq!(v, f0);
        }
        assert!(table.differences.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn deterministic_payoffs_stabilize_once_kinks_are_on_the_grid() {
        // sigma = 0, b = 0: deterministic tree; timetable payoffs with the
        // kink at t = 1/2 give the same min-max once every grid contains
        // t = 1/2.
        let m = DiffusionModel::scalar(|_| 0.0, |_| 0.0, 1.0, 0.0).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let f = crate::model::Payoff::new(BasePayoff::TimeTable {
            times: vec![0.0, 0.5, 1.0],
            values: vec![0.2, 0.9, 0.4],
        });
        let g = crate::model::Payoff::new(BasePayoff::TimeTable {
            times: vec![0.0, 0.5, 1.0],
            values: vec![1.2, 1.9, 0.4],
        });
        let pair = PayoffPair::new(f, g);
        let table = value_convergence(&m, &law, &pair, &[2, 4, 8, 16], 1 << 20, true);
        let values = table.values();
        assert_eq!(values.len(), 4);
        for w in values.windows(2) {
            assert_eq!(w[0].1, w[1].1);
        }
    }

    #[test]
    fn infeasible_grids_are_recorded_not_fatal() {
        let m = DiffusionModel::scalar(|_| 0.4, |_| 0.0, 1.0, 0.0).unwrap();
        let law = InnovationLaw::rademacher(1).unwrap();
        let pair = PayoffPair::game(BasePayoff::put(1.0), Penalty::LinearDecay(0.1));
        let table = value_convergence(&m, &law, &pair, &[4, 40], 2_000, false);
        assert!(table.entries[0].value.is_some());
        assert!(table.entries[1].value.is_none());
        assert!(table.entries[1].error.as_deref().unwrap().contains("cap"));
    }
}
