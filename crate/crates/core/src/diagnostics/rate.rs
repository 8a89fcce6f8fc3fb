//! Log–log convergence-rate regression over `(N, error)` measurements.

use crate::error::CoreError;
use crate::Result;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RatePoint {
    pub n: f64,
    pub error: f64,
    pub std_error: f64,
}

/// Ordinary least squares fit of `ln error` against `ln N`.
#[derive(Clone, Debug, Serialize)]
pub struct RateStudy {
    /// Points used in the fit.
    pub points: Vec<RatePoint>,
    /// Indices of refused input points (error within two standard errors
    /// of zero, so its logarithm carries no information).
    pub excluded: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `error ~ C * N^slope` by least squares on log–log axes.
///
/// Points whose error is within two standard errors of zero are refused;
/// at least three points must survive.
pub fn rate_regression(points: &[(f64, f64, f64)]) -> Result<RateStudy> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for (i, &(n, error, std_error)) in points.iter().enumerate() {
        if !(n > 0.0) {
            return Err(CoreError::DegenerateRegression {
                reason: format!("point {i}: grid size {n} must be positive"),
            });
        }
        if error - 2.0 * std_error <= 0.0 {
            excluded.push(i);
        } else {
            used.push(RatePoint {
                n,
                error,
                std_error,
            });
        }
    }
    if used.len() < 3 {
        return Err(CoreError::DegenerateRegression {
            reason: format!(
                "{} usable points after refusing {}; need at least 3",
                used.len(),
                excluded.len()
            ),
        });
    }
    let xs: Vec<f64> = used.iter().map(|p| p.n.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.error.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(CoreError::DegenerateRegression {
            reason: "all grid sizes coincide".into(),
        });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit) * (y - fit)
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateStudy {
        points: used,
        excluded,
        slope,
        intercept,
        r_squared,
    })
}
