//! Large-`N` scaling `I_q ∝ N^a` of the summed moments for the power-law and
//! exponential profile families.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Extended,
    FrozenQuasiExtended,
    FrozenQuasiLocalized,
    Localized,
    MarginalLog,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Extended => "extended",
            Regime::FrozenQuasiExtended => "frozen_quasi_extended",
            Regime::FrozenQuasiLocalized => "frozen_quasi_localized",
            Regime::Localized => "localized",
            Regime::MarginalLog => "marginal_log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingFamily {
    PowerLaw(f64),
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingLaw {
    pub regime: Regime,
    /// `a` in `I_q ∝ N^a` (times `ln N` when `log_correction` is set).
    pub exponent: f64,
    pub log_correction: bool,
    /// Fractal dimension; `None` where `−a/(q−1)` is undefined.
    pub d_q: Option<f64>,
}

// Relative tolerance for deciding q == −1/p.
const MARGINAL_TOL: f64 = 1e-12;

pub fn scaling_regime(family: ScalingFamily, q: f64) -> Result<ScalingLaw> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidMomentOrder(q));
    }
    let law = |regime, exponent: f64, log_correction, d_q: Option<f64>| ScalingLaw {
        regime,
        exponent,
        log_correction,
        d_q,
    };
    let p = match family {
        ScalingFamily::Exponential => return Ok(law(Regime::Localized, 0.0, false, Some(0.0))),
        ScalingFamily::PowerLaw(p) => p,
    };
    if !p.is_finite() {
        return Err(Error::InvalidArgument("power-law exponent must be finite"));
    }
    if p == -1.0 {
        return Err(Error::MarginalExponent);
    }
    let extended = law(Regime::Extended, 1.0 - q, false, Some(1.0));
    if p >= 0.0 {
        return Ok(extended);
    }
    let threshold = -1.0 / p;
    let marginal = (q - threshold).abs() <= MARGINAL_TOL * threshold;
    let dimension = |a: f64| if q == 1.0 { None } else { Some(-a / (q - 1.0)) };
    Ok(if p > -1.0 {
        if marginal {
            law(Regime::MarginalLog, 1.0 - q, true, Some(1.0))
        } else if q < threshold {
            extended
        } else {
            let a = -q * (p + 1.0);
            law(Regime::FrozenQuasiExtended, a, false, dimension(a))
        }
    } else if marginal {
        law(Regime::MarginalLog, 0.0, true, Some(0.0))
    } else if q < threshold {
        let a = p * q + 1.0;
        law(Regime::FrozenQuasiLocalized, a, false, dimension(a))
    } else {
        law(Regime::Localized, 0.0, false, Some(0.0))
    })
}
