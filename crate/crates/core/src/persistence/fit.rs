//! Decay exponents: weighted least squares of `-ln p_hat` on `psi(T)`.

use serde::{Deserialize, Serialize};

use super::estimate::PersistenceEstimate;
use crate::error::{Error, Result};

/// Ladder points with fewer survivors are dropped from a fit.
pub const MIN_SURVIVORS: u64 = 10;
/// Fewest usable points a fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PsiModel {
    /// `ln T`.
    LogT,
    /// `(ln T)^2`.
    LogTSq,
    /// `T`.
    LinearT,
    /// `T^2`.
    SquareT,
}

impl PsiModel {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            PsiModel::LogT => t.ln(),
            PsiModel::LogTSq => t.ln().powi(2),
            PsiModel::LinearT => t,
            PsiModel::SquareT => t * t,
        }
    }
}

impl std::str::FromStr for PsiModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LOG_T" => Ok(PsiModel::LogT),
            "LOG_T_SQ" => Ok(PsiModel::LogTSq),
            "LINEAR_T" => Ok(PsiModel::LinearT),
            "SQUARE_T" => Ok(PsiModel::SquareT),
            other => Err(Error::InvalidArgument(format!("unknown psi model {other:?}"))),
        }
    }
}

/// `(T, survivors, trials)` for one ladder point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitInput {
    pub t: f64,
    pub n_survive: u64,
    pub n_trials: usize,
}

impl From<&PersistenceEstimate> for FitInput {
    fn from(e: &PersistenceEstimate) -> Self {
        FitInput { t: e.t, n_survive: e.n_survive, n_trials: e.n_trials }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub psi: PsiModel,
    pub theta_hat: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub n_used: usize,
    /// Horizons left out for having fewer than [`MIN_SURVIVORS`] survivors.
    pub dropped: Vec<f64>,
    /// Weighted residual sum of squares.
    pub chi2: f64,
}

pub fn fit_exponent(estimates: &[PersistenceEstimate], psi: PsiModel) -> Result<ExponentFit> {
    let pts: Vec<FitInput> = estimates.iter().map(FitInput::from).collect();
    fit_counts(&pts, psi)
}

/// Weights are inverse delta-method variances `n p / (1 - p)` of `-ln p_hat`.
/// The slope error uses those variances, inflated by `chi2 / (m - 2)` when
/// the residuals are larger than they allow.
pub fn fit_counts(pts: &[FitInput], psi: PsiModel) -> Result<ExponentFit> {
    let mut dropped = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for p in pts {
        if p.n_survive < MIN_SURVIVORS {
            dropped.push(p.t);
            continue;
        }
        let n = p.n_trials as f64;
        let ph = p.n_survive as f64 / n;
        let var = ((1.0 - ph) / (n * ph)).max(1.0 / (n * n));
        xs.push(psi.eval(p.t));
        ys.push(-ph.ln());
        ws.push(1.0 / var);
    }
    if !dropped.is_empty() {
        log::warn!("fit drops {} ladder point(s) with < {MIN_SURVIVORS} survivors: T = {dropped:?}", dropped.len());
    }
    let m = xs.len();
    if m < MIN_FIT_POINTS {
        return Err(Error::InsufficientSurvivors { usable: m, needed: MIN_FIT_POINTS });
    }
    let sw: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("fit needs at least two distinct psi(T)".into()));
    }
    let sxy: f64 = (0..m).map(|i| ws[i] * (xs[i] - xbar) * (ys[i] - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let chi2: f64 = (0..m).map(|i| ws[i] * (ys[i] - intercept - slope * xs[i]).powi(2)).sum();
    let inflate = (chi2 / (m - 2) as f64).max(1.0);
    Ok(ExponentFit { psi, theta_hat: slope, stderr: (inflate / sxx).sqrt(), intercept, n_used: m, dropped, chi2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(theta: f64, c: f64, psi: PsiModel, ts: &[f64], n: usize) -> Vec<FitInput> {
        ts.iter()
            .map(|&t| {
                let p = (-c - theta * psi.eval(t)).exp();
                FitInput { t, n_survive: (p * n as f64).round() as u64, n_trials: n }
            })
            .collect()
    }

    #[test]
    fn recovers_planted_slopes() {
        let ts = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
        for psi in [PsiModel::LogT, PsiModel::LogTSq] {
            let f = fit_counts(&planted(0.3, 0.2, psi, &ts, 1 << 40), psi).unwrap();
            assert!((f.theta_hat - 0.3).abs() < 1e-6, "{psi:?}: {}", f.theta_hat);
            assert!((f.intercept - 0.2).abs() < 1e-5);
        }
        let ts = [0.5, 1.0, 1.5, 2.0, 2.5];
        let f = fit_counts(&planted(0.7, 0.0, PsiModel::SquareT, &ts, 1 << 40), PsiModel::SquareT).unwrap();
        assert!((f.theta_hat - 0.7).abs() < 1e-6);
    }

    #[test]
    fn drops_sparse_points_and_requires_four() {
        let mut pts = planted(0.5, 0.0, PsiModel::LinearT, &[1.0, 2.0, 3.0, 4.0, 5.0], 1_000_000);
        pts.push(FitInput { t: 30.0, n_survive: 3, n_trials: 1_000_000 });
        let f = fit_counts(&pts, PsiModel::LinearT).unwrap();
        assert_eq!(f.dropped, vec![30.0]);
        assert_eq!(f.n_used, 5);
        pts.truncate(3);
        assert!(matches!(
            fit_counts(&pts, PsiModel::LinearT),
            Err(Error::InsufficientSurvivors { usable: 3, needed: 4 })
        ));
    }

    #[test]
    fn parses_models() {
        assert_eq!("log_t_sq".parse::<PsiModel>().unwrap(), PsiModel::LogTSq);
        assert!("cubic".parse::<PsiModel>().is_err());
    }
}
