//! Named presets addressable from configuration files.

use super::{BasePayoff, DiffusionModel, InnovationLaw, PayoffPair, Penalty};
use crate::error::CoreError;
use crate::Result;
use std::sync::Arc;

pub const MODEL_PRESETS: &[&str] = &["gbm-1d", "tanh-1d", "sin-coef-1d", "identity-2d"];
pub const LAW_PRESETS: &[&str] = &["rademacher-1d", "rademacher-2d", "gaussian-1d", "gaussian-2d"];
pub const PAYOFF_PRESETS: &[&str] = &["put", "call", "lookback-call", "average-put", "constant"];

/// Built-in diffusion models.
///
/// * `gbm-1d` — constant volatility 0.2 with the martingale drift -0.02;
///   `exp(X)` is then a driftless asset price.  L = 1.
/// * `tanh-1d` — state-dependent volatility `0.4 + 0.2 tanh(x)`, zero
///   drift.  L = 1.
/// * `sin-coef-1d` — `sigma(x) = 1 + sin(x)/2`, `b(x) = cos(x)/4`.  L = 2.
/// * `identity-2d` — identity diffusion matrix, zero drift.  L = sqrt(2).
pub fn model_preset(id: &str) -> Result<DiffusionModel> {
    match id {
        "gbm-1d" => Ok(DiffusionModel::scalar(|_| 0.2, |_| -0.02, 1.0, 0.0)?.with_id(id)),
        "tanh-1d" => {
            Ok(DiffusionModel::scalar(|x| 0.4 + 0.2 * x.tanh(), |_| 0.0, 1.0, 0.0)?.with_id(id))
        }
        "sin-coef-1d" => Ok(DiffusionModel::scalar(
            |x| 1.0 + 0.5 * x.sin(),
            |x| 0.25 * x.cos(),
            2.0,
            0.0,
        )?
        .with_id(id)),
        "identity-2d" => Ok(DiffusionModel::new(
            2,
            Arc::new(|_, out| {
                out.fill(0.0);
                out[0] = 1.0;
                out[3] = 1.0;
            }),
            Arc::new(|_, out| out.fill(0.0)),
            2.0_f64.sqrt(),
            vec![0.0, 0.0],
        )?
        .with_id(id)),
        _ => Err(CoreError::param("model preset", format!("unknown id {id:?}"))),
    }
}

pub fn law_preset(id: &str) -> Result<InnovationLaw> {
    match id {
        "rademacher-1d" => InnovationLaw::rademacher(1),
        "rademacher-2d" => InnovationLaw::rademacher(2),
        "gaussian-1d" => InnovationLaw::gaussian(1),
        "gaussian-2d" => InnovationLaw::gaussian(2),
        _ => Err(CoreError::param("law preset", format!("unknown id {id:?}"))),
    }
}

/// Built-in payoff pairs.  `strike` and `penalty` parametrise the catalog;
/// `penalty_shape` selects between a linearly decaying penalty (regular)
/// and a constant interior penalty (discontinuous at maturity).
pub fn payoff_preset(
    id: &str,
    strike: f64,
    penalty: f64,
    linear_decay: bool,
) -> Result<PayoffPair> {
    let pen = if penalty == 0.0 {
        Penalty::None
    } else if linear_decay {
        Penalty::LinearDecay(penalty)
    } else {
        Penalty::Constant(penalty)
    };
    let base = match id {
        "put" => BasePayoff::put(strike),
        "call" => BasePayoff::call(strike),
        "lookback-call" => BasePayoff::lookback_call(strike),
        "average-put" => BasePayoff::average_put(strike),
        "constant" => BasePayoff::Constant { value: strike },
        _ => return Err(CoreError::param("payoff preset", format!("unknown id {id:?}"))),
    };
    Ok(PayoffPair::game(base, pen).with_id(id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_construct() {
        for id in MODEL_PRESETS {
            model_preset(id).unwrap();
        }
        for id in LAW_PRESETS {
            law_preset(id).unwrap();
        }
        for id in PAYOFF_PRESETS {
            payoff_preset(id, 1.0, 0.1, true).unwrap();
        }
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(model_preset("nope").is_err());
        assert!(law_preset("nope").is_err());
        assert!(payoff_preset("nope", 1.0, 0.0, true).is_err());
    }
}
