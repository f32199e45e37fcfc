use serde::{Deserialize, Serialize};

use super::profile::StationaryProfile;
use super::reduced::EigenData;
use crate::error::{Error, Result};
use crate::gas::RegimeKind;

/// Minimum amplitude ratio the exponential tail must span (two decades).
pub const MIN_TAIL_DECADES: f64 = 2.0;
/// Minimum span of `(1 + δx)` over the tail for an algebraic fit.
pub const MIN_ALGEBRAIC_SPAN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    Exponential,
    Algebraic,
    Constant,
}

/// `|ũ − u₊| ≈ amplitude·e^{−rate·x}` (exponential) or
/// `amplitude·(1 + δx)^{−rate}` (algebraic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub rate: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub model: DecayModel,
    pub rate: f64,
    pub amplitude: f64,
    /// Relative mismatch against the linearization (exponential) or against
    /// exponent 1 (algebraic). Zero for constant profiles.
    pub mismatch: f64,
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(a, b)`.
pub fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Fit an exponential tail to samples `(x, |d|)` over `[x_from, ∞)`.
pub fn fit_exponential(x: &[f64], dev: &[f64], x_from: f64, floor: f64) -> Result<DecayFit> {
    let (xs, ys) = tail_samples(x, dev, x_from, floor)?;
    let span = (ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min))
        / std::f64::consts::LN_10;
    if span < MIN_TAIL_DECADES {
        return Err(Error::InsufficientTail(format!(
            "tail spans {span:.2} decades above the noise floor, need {MIN_TAIL_DECADES}"
        )));
    }
    let (a, b) = least_squares_line(&xs, &ys);
    Ok(DecayFit {
        model: DecayModel::Exponential,
        rate: -b,
        amplitude: a.exp(),
    })
}

/// Fit `|d| ≈ C(1 + δx)^{−p}` over `[x_from, ∞)` by a log-log line.
pub fn fit_algebraic(x: &[f64], dev: &[f64], delta: f64, x_from: f64, floor: f64) -> Result<DecayFit> {
    let (xs, ys) = tail_samples(x, dev, x_from, floor)?;
    let first = 1.0 + delta * xs[0];
    let last = 1.0 + delta * xs[xs.len() - 1];
    if last / first < MIN_ALGEBRAIC_SPAN {
        return Err(Error::InsufficientTail(format!(
            "tail spans a factor {:.3} in (1 + δx), need {MIN_ALGEBRAIC_SPAN}",
            last / first
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|v| (1.0 + delta * v).ln()).collect();
    let (a, b) = least_squares_line(&lx, &ys);
    Ok(DecayFit {
        model: DecayModel::Algebraic,
        rate: -b,
        amplitude: a.exp(),
    })
}

fn tail_samples(x: &[f64], dev: &[f64], x_from: f64, floor: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (xi, di) in x.iter().zip(dev) {
        if *xi < x_from {
            continue;
        }
        if !(di.abs() > floor) {
            break;
        }
        xs.push(*xi);
        ys.push(di.abs().ln());
    }
    if xs.len() < 8 {
        return Err(Error::InsufficientTail(format!(
            "only {} tail samples above the noise floor {floor:e}",
            xs.len()
        )));
    }
    Ok((xs, ys))
}

/// Fit the decay of `ũ − u₊` over the tail `[L/2, L]` with the model the
/// regime calls for.
pub fn fit_decay(profile: &StationaryProfile) -> Result<DecayFit> {
    if profile.is_constant() {
        return Ok(DecayFit {
            model: DecayModel::Constant,
            rate: 0.0,
            amplitude: 0.0,
        });
    }
    let from = 0.5 * profile.length();
    match profile.regime.kind {
        RegimeKind::Transonic => fit_algebraic(
            &profile.grid_x,
            &profile.du,
            profile.delta,
            from,
            profile.deviation_floor,
        ),
        _ => fit_exponential(&profile.grid_x, &profile.du, from, profile.deviation_floor),
    }
}

/// Compare the fitted tail against the far-field linearization.
pub fn verify_decay(profile: &StationaryProfile, eigen: Option<&EigenData>) -> Result<DecayReport> {
    let fit = fit_decay(profile)?;
    let mismatch = match fit.model {
        DecayModel::Constant => 0.0,
        DecayModel::Algebraic => (fit.rate - 1.0).abs(),
        DecayModel::Exponential => {
            let rate = eigen.and_then(|e| e.slowest_stable_rate()).ok_or_else(|| {
                Error::InvalidParameter("exponential decay check needs a stable eigenvalue".into())
            })?;
            (fit.rate - rate).abs() / rate
        }
    };
    Ok(DecayReport {
        model: fit.model,
        rate: fit.rate,
        amplitude: fit.amplitude,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_exponential_recovered() {
        let x: Vec<f64> = (0..400).map(|k| k as f64 * 0.1).collect();
        let dev: Vec<f64> = x.iter().map(|v| 0.3 * (-0.75 * v).exp()).collect();
        let fit = fit_exponential(&x, &dev, 20.0, 1e-300).unwrap();
        assert!((fit.rate - 0.75).abs() / 0.75 < 0.01);
        assert!((fit.amplitude - 0.3).abs() / 0.3 < 0.01);
    }

    #[test]
    fn synthetic_algebraic_recovered() {
        let delta = 0.01;
        let x: Vec<f64> = (0..=400).map(|k| k as f64 * 50.0).collect();
        let dev: Vec<f64> = x.iter().map(|v| -2e-3 / (1.0 + delta * v)).collect();
        let fit = fit_algebraic(&x, &dev, delta, 10000.0, 1e-300).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noise_floor_limits_tail() {
        let x: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let dev: Vec<f64> = x.iter().map(|v| 1e-14 * (-0.1 * v).exp()).collect();
        assert!(matches!(
            fit_exponential(&x, &dev, 5.0, 1e-13),
            Err(Error::InsufficientTail(_))
        ));
        // above the floor but too flat to span two decades
        assert!(matches!(
            fit_exponential(&x, &dev, 5.0, 0.0),
            Err(Error::InsufficientTail(_))
        ));
    }
}
