//! Named experiments: ladders, fits and the predicates each one is judged by.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::domain::{DomainSpec, Exclude, Shape};
use super::estimate::{estimate_ladder, PersistenceEstimate};
use super::fit::{fit_exponent, ExponentFit, PsiModel};
use super::ladder::{Event, Ladder, LadderPoint};
use crate::error::{Error, Result};
use crate::kernels::{dual_ifbm_corr, verify_cosh_bound};
use crate::normal;
use crate::rng::derive_seed;
use crate::{Hurst, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Sinai,
    IfbmTheta0Scan,
    IfbmThetaMinus1Scan,
    FbsSquare,
    FbsCone,
    FbsTriangleDual,
    SechEta,
    SlepianPair,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Sinai,
        Preset::IfbmTheta0Scan,
        Preset::IfbmThetaMinus1Scan,
        Preset::FbsSquare,
        Preset::FbsCone,
        Preset::FbsTriangleDual,
        Preset::SechEta,
        Preset::SlepianPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Sinai => "sinai",
            Preset::IfbmTheta0Scan => "ifbm_theta0_scan",
            Preset::IfbmThetaMinus1Scan => "ifbm_theta_minus1_scan",
            Preset::FbsSquare => "fbs_square",
            Preset::FbsCone => "fbs_cone",
            Preset::FbsTriangleDual => "fbs_triangle_dual",
            Preset::SechEta => "sech_eta",
            Preset::SlepianPair => "slepian_pair",
        }
    }

    /// Parameters used when a field is not overridden.
    pub fn defaults(self) -> PresetParams {
        let geo = |a: i32, b: i32| (a..=b).map(|k| 2f64.powi(k)).collect::<Vec<_>>();
        let (hurst, n_trials, ladder, n_grid) = match self {
            Preset::Sinai => (vec![0.5], 100_000, geo(4, 12), 8),
            Preset::IfbmTheta0Scan => (vec![0.3, 0.5, 0.7], 20_000, geo(4, 11), 2),
            Preset::IfbmThetaMinus1Scan => (vec![0.5, 0.7], 50_000, geo(4, 10), 2),
            Preset::FbsSquare => (vec![0.3, 0.5, 0.7], 500_000, geo(3, 7), 1),
            Preset::FbsCone => (vec![0.5], 20_000, geo(3, 8), 2),
            Preset::FbsTriangleDual => (vec![0.5], 20_000, vec![0.5, 1.0, 1.5, 2.0, 2.5], 4),
            Preset::SechEta => (vec![], 100_000, (1..=8).map(|k| 4.0 * k as f64).collect(), 8),
            Preset::SlepianPair => (vec![0.5, 0.7], 100_000, (1..=7).map(|k| 4.0 * k as f64).collect(), 8),
        };
        PresetParams { hurst: Some(hurst), n_trials: Some(n_trials), ladder: Some(ladder), n_grid: Some(n_grid) }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset {s:?}")))
    }
}

/// Overrides for a preset; `None` keeps the preset default.
///
/// `n_grid` is the resolution: steps per unit time for intervals, lattice
/// points per doubling of `s` for sheets, per unit length for the dual sheet.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresetParams {
    pub hurst: Option<Vec<f64>>,
    pub n_trials: Option<usize>,
    pub ladder: Option<Vec<f64>>,
    pub n_grid: Option<usize>,
}

impl PresetParams {
    fn resolve(&self, preset: Preset) -> Result<Resolved> {
        let d = preset.defaults();
        let hurst = self.hurst.clone().or(d.hurst).unwrap_or_default();
        let hurst = hurst.into_iter().map(Hurst::new).collect::<Result<Vec<_>>>()?;
        let n_trials = self.n_trials.or(d.n_trials).unwrap_or(10_000);
        let ladder = self.ladder.clone().or(d.ladder).unwrap_or_default();
        let n_grid = self.n_grid.or(d.n_grid).unwrap_or(4);
        if n_trials < 1000 {
            return Err(Error::InvalidArgument(format!("n_trials must be >= 1000, got {n_trials}")));
        }
        if ladder.len() < 4 || ladder.windows(2).any(|w| !(w[0] < w[1])) || ladder[0] <= 0.0 {
            return Err(Error::InvalidArgument("ladder must be positive, strictly increasing, length >= 4".into()));
        }
        if n_grid == 0 {
            return Err(Error::InvalidArgument("n_grid must be >= 1".into()));
        }
        if preset != Preset::SechEta && hurst.is_empty() {
            return Err(Error::InvalidArgument(format!("{preset} needs at least one H")));
        }
        Ok(Resolved { hurst, n_trials, ladder, n_grid })
    }
}

struct Resolved {
    hurst: Vec<Hurst>,
    n_trials: usize,
    ladder: Vec<f64>,
    n_grid: usize,
}

impl Resolved {
    fn as_params(&self) -> PresetParams {
        PresetParams {
            hurst: Some(self.hurst.iter().map(|h| h.value()).collect()),
            n_trials: Some(self.n_trials),
            ladder: Some(self.ladder.clone()),
            n_grid: Some(self.n_grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Predicate {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Predicate { name: name.into(), passed, detail: detail.into() }
    }
}

/// One fitted ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRun {
    pub label: String,
    pub kernel: KernelSpec,
    pub event: Event,
    pub method: String,
    pub ladder: Vec<PersistenceEstimate>,
    pub fit: ExponentFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetReport {
    pub preset: Preset,
    pub seed: u64,
    pub params: PresetParams,
    pub runs: Vec<PresetRun>,
    pub predicates: Vec<Predicate>,
    /// Reported quantities that are not gated.
    pub notes: Vec<String>,
    pub passed: bool,
}

impl PresetReport {
    pub fn run(&self, label: &str) -> Option<&PresetRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

/// `T * [lo, hi]` at a fixed step `1 / per_unit` for every `T` of the ladder.
pub fn interval_ladder(
    lo: f64,
    hi: f64,
    ts: &[f64],
    per_unit: usize,
    level: f64,
    u0: Option<Exclude>,
) -> Result<Vec<LadderPoint>> {
    ts.iter()
        .map(|&t| {
            let steps = t * (hi - lo) * per_unit as f64;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "T = {t} is not a whole number of steps 1/{per_unit} on [{lo}, {hi}]"
                )));
            }
            let domain = DomainSpec::new(Shape::Interval { lo, hi }, t, steps.round() as usize, u0)?;
            Ok(LadderPoint { t, domain, level })
        })
        .collect()
}

/// Same shape and resolution at every `T`.
pub fn shape_ladder(
    shape: Shape,
    ts: &[f64],
    n_grid: usize,
    level: f64,
    u0: Option<Exclude>,
) -> Result<Vec<LadderPoint>> {
    ts.iter().map(|&t| Ok(LadderPoint { t, domain: DomainSpec::new(shape, t, n_grid, u0)?, level })).collect()
}

fn fitted_run(
    label: &str,
    kernel: KernelSpec,
    points: Vec<LadderPoint>,
    psi: PsiModel,
    n_trials: usize,
    seed: u64,
) -> Result<PresetRun> {
    let ladder = Ladder::new(kernel, points)?;
    let est = estimate_ladder(&ladder, &[Event::SupBelow], n_trials, derive_seed(seed, label))?;
    let ladder_est = est.get(Event::SupBelow).expect("requested").to_vec();
    let fit = fit_exponent(&ladder_est, psi).map_err(|e| match e {
        Error::InsufficientSurvivors { .. } => {
            let sparse: Vec<f64> =
                ladder_est.iter().filter(|p| p.n_survive < super::MIN_SURVIVORS).map(|p| p.t).collect();
            log::error!("{label}: ladder points with too few survivors at T = {sparse:?}");
            e
        }
        other => other,
    })?;
    log::info!("{label}: theta_hat = {} +- {} ({:?})", fit.theta_hat, fit.stderr, psi);
    Ok(PresetRun {
        label: label.to_string(),
        kernel,
        event: Event::SupBelow,
        method: est.method,
        ladder: ladder_est,
        fit,
    })
}

pub fn run_preset(preset: Preset, params: &PresetParams, seed: u64) -> Result<PresetReport> {
    let r = params.resolve(preset)?;
    let mut runs = Vec::new();
    let mut predicates = Vec::new();
    let mut notes = Vec::new();
    let n = r.n_trials;
    match preset {
        Preset::Sinai => {
            let h = r.hurst[0];
            let pts = interval_ladder(0.0, 1.0, &r.ladder, r.n_grid, 1.0, None)?;
            let run = fitted_run(&format!("ifbm_h{h}_delta0"), KernelSpec::ifbm(h), pts, PsiModel::LogT, n, seed)?;
            let th = run.fit.theta_hat;
            predicates.push(Predicate::new(
                "theta_within_0.05_of_0.25",
                (th - 0.25).abs() <= 0.05,
                format!("theta_hat = {th} +- {}", run.fit.stderr),
            ));
            runs.push(run);
        }
        Preset::IfbmTheta0Scan => {
            for &h in &r.hurst {
                let pts = interval_ladder(0.0, 1.0, &r.ladder, r.n_grid, 1.0, None)?;
                let run = fitted_run(&format!("ifbm_h{h}_delta0"), KernelSpec::ifbm(h), pts, PsiModel::LogT, n, seed)?;
                let (th, se) = (run.fit.theta_hat, run.fit.stderr);
                predicates.push(Predicate::new(
                    format!("theta0_positive_h{h}"),
                    th > 3.0 * se,
                    format!("theta_hat = {th} +- {se}"),
                ));
                let conj = h.value() * h.complement();
                notes.push(format!("H = {h}: |theta_hat - H(1-H)| = {} (H(1-H) = {conj})", (th - conj).abs()));
                runs.push(run);
            }
        }
        Preset::IfbmThetaMinus1Scan => {
            for &h in &r.hurst {
                let pts = interval_ladder(-1.0, 1.0, &r.ladder, r.n_grid, 1.0, None)?;
                let run =
                    fitted_run(&format!("ifbm_h{h}_delta_minus1"), KernelSpec::ifbm(h), pts, PsiModel::LogT, n, seed)?;
                let (th, se) = (run.fit.theta_hat, run.fit.stderr);
                let bound = h.complement() + 0.05;
                predicates.push(Predicate::new(
                    format!("theta_minus1_below_1mH_h{h}"),
                    th <= bound,
                    format!("theta_hat = {th} +- {se}, bound {bound}"),
                ));
                runs.push(run);
            }
        }
        Preset::FbsSquare => {
            for &h in &r.hurst {
                let pts = shape_ladder(Shape::Square, &r.ladder, r.n_grid, 1.0, None)?;
                let run = fitted_run(&format!("fbs_h{h}_square"), KernelSpec::fbs(h), pts, PsiModel::LogTSq, n, seed)?;
                let stab = ratio_stability(&run.ladder, PsiModel::LogTSq);
                predicates.push(Predicate::new(
                    format!("ratio_stable_h{h}"),
                    stab.variation <= 0.3,
                    format!(
                        "-ln p / (ln T)^2 = {:?} over T = {:?}, variation {}",
                        stab.ratios, stab.ts, stab.variation
                    ),
                ));
                runs.push(run);
            }
        }
        Preset::FbsCone => {
            for &h in &r.hurst {
                let pts = shape_ladder(Shape::Cone { a: 0.5 }, &r.ladder, r.n_grid, 1.0, None)?;
                let run = fitted_run(&format!("fbs_h{h}_cone_a0.5"), KernelSpec::fbs(h), pts, PsiModel::LogT, n, seed)?;
                let (th, se) = (run.fit.theta_hat, run.fit.stderr);
                predicates.push(Predicate::new(
                    format!("theta_cone_positive_finite_h{h}"),
                    th > 3.0 * se && th.is_finite(),
                    format!("theta_hat = {th} +- {se}"),
                ));
                runs.push(run);
            }
        }
        Preset::FbsTriangleDual => {
            for &h in &r.hurst {
                let pts = shape_ladder(Shape::Triangle, &r.ladder, r.n_grid, 0.0, None)?;
                let run = fitted_run(
                    &format!("dual_fbs_h{h}_triangle"),
                    KernelSpec::dual_fbs(h),
                    pts,
                    PsiModel::SquareT,
                    n,
                    seed,
                )?;
                let (th, se) = (run.fit.theta_hat, run.fit.stderr);
                predicates.push(Predicate::new(
                    format!("theta_triangle_positive_h{h}"),
                    th > 3.0 * se && th.is_finite(),
                    format!("theta_hat = {th} +- {se}"),
                ));
                runs.push(run);
            }
        }
        Preset::SechEta => {
            let run = sech_run(&r.ladder, r.n_grid, n, seed)?;
            let (th, se) = (run.fit.theta_hat, run.fit.stderr);
            predicates.push(Predicate::new(
                "two_theta_eta_at_least_0.2",
                2.0 * th >= 0.2 - 3.0 * se,
                format!("2 theta_hat = {} (stderr of theta_hat {se})", 2.0 * th),
            ));
            runs.push(run);
        }
        Preset::SlepianPair => {
            for &h in &r.hurst {
                let rep = slepian_pair_experiment(h, &r.ladder, r.n_trials, r.n_grid, seed)?;
                predicates.extend(rep.predicates.iter().cloned());
                notes.push(format!(
                    "H = {h}: a(H) = {}, theta_xi = {} +- {}, 2a theta_eta = {} +- {}",
                    rep.a, rep.xi.fit.theta_hat, rep.xi.fit.stderr, rep.two_a_theta_eta, rep.two_a_theta_eta_stderr
                ));
                runs.push(rep.xi);
                runs.push(rep.eta);
            }
        }
    }
    let passed = predicates.iter().all(|p| p.passed);
    Ok(PresetReport { preset, seed, params: r.as_params(), runs, predicates, notes, passed })
}

fn sech_run(ts: &[f64], per_unit: usize, n_trials: usize, seed: u64) -> Result<PresetRun> {
    let pts = interval_ladder(0.0, 1.0, ts, per_unit, 0.0, None)?;
    fitted_run("sech_half", KernelSpec::sech(0.5)?, pts, PsiModel::LinearT, n_trials, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioStability {
    pub ts: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max |r - mean| / mean` over the top half of the ladder.
    pub variation: f64,
}

/// `-ln p_hat / psi(T)` over the top half (rounded up) of the ladder.
pub fn ratio_stability(ladder: &[PersistenceEstimate], psi: PsiModel) -> RatioStability {
    let half = ladder.len() / 2;
    let top = &ladder[half..];
    let ts: Vec<f64> = top.iter().map(|e| e.t).collect();
    let ratios: Vec<f64> = top.iter().map(|e| -e.p_hat.ln() / psi.eval(e.t)).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let variation = ratios.iter().map(|r| (r - mean).abs() / mean).fold(0.0, f64::max);
    let variation = if variation.is_finite() { variation } else { f64::INFINITY };
    RatioStability { ts, ratios, variation }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlepianPairReport {
    pub hurst: f64,
    /// From `verify_cosh_bound` on `(0, 50]`.
    pub rho_star_cosh: f64,
    /// The same infimum over the lags of the experiment's grid.
    pub rho_star_lags: f64,
    pub a: f64,
    pub xi: PresetRun,
    /// Fitted against the `xi` horizons `T`, so its slope is `2a theta_eta`.
    pub eta: PresetRun,
    pub two_a_theta_eta: f64,
    pub two_a_theta_eta_stderr: f64,
    /// `p_xi - p_eta` in units of the combined binomial sd, per ladder point.
    pub z_scores: Vec<f64>,
    pub predicates: Vec<Predicate>,
}

/// `P(xi < 0 on [0, T]) <= P(eta < 0 on [0, 2a T])` on matched grids: the
/// dual of integrated fBm at lags `k dt` against the sech process at lags
/// `2a k dt`, where `1/cosh(a k dt)` dominates the dual correlation.
pub fn slepian_pair_experiment(
    h: Hurst,
    ladder: &[f64],
    n_trials: usize,
    per_unit: usize,
    seed: u64,
) -> Result<SlepianPairReport> {
    let hh = h.value() * h.complement();
    let cosh = verify_cosh_bound(h, 50.0, 50_000)?;
    if !cosh.passed {
        return Err(Error::Hypothesis(format!("cosh bound has no positive rho* for H = {h}")));
    }
    let dt = 1.0 / per_unit as f64;
    let t_max = *ladder.last().ok_or_else(|| Error::InvalidArgument("empty ladder".into()))?;
    let n_lags = (t_max * per_unit as f64).round() as usize;
    let rho_lags = (1..=n_lags)
        .filter_map(|k| {
            let t = k as f64 * dt;
            let b = dual_ifbm_corr(h, t);
            (b > 0.0).then(|| (1.0 / b).acosh() / (hh * t))
        })
        .fold(f64::INFINITY, f64::min);
    let rho = cosh.rho_star.min(rho_lags);
    let a = rho * hh;
    let label = format!("dual_ifbm_h{h}");
    let xi_pts = interval_ladder(0.0, 1.0, ladder, per_unit, 0.0, None)?;
    let xi = fitted_run(&label, KernelSpec::dual_ifbm(h), xi_pts, PsiModel::LinearT, n_trials, seed)?;
    // eta on [0, 2aT] with the same number of points: step 2a dt
    let eta_kernel = KernelSpec::sech(0.5)?;
    let eta_pts = ladder
        .iter()
        .map(|&t| {
            let steps = (t * per_unit as f64).round() as usize;
            let domain = DomainSpec::new(Shape::Interval { lo: 0.0, hi: 1.0 }, 2.0 * a * t, steps, None)?;
            Ok(LadderPoint { t, domain, level: 0.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let eta = fitted_run(&format!("sech_half_matched_h{h}"), eta_kernel, eta_pts, PsiModel::LinearT, n_trials, seed)?;
    let mut predicates = Vec::new();
    let mut z_scores = Vec::new();
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for (x, e) in xi.ladder.iter().zip(&eta.ladder) {
        let sd = (x.sd().powi(2) + e.sd().powi(2)).sqrt();
        let margin = x.p_hat - e.p_hat - 3.0 * sd;
        z_scores.push(if sd > 0.0 { (x.p_hat - e.p_hat) / sd } else { 0.0 });
        if margin > worst.0 {
            worst = (margin, x.t);
        }
    }
    predicates.push(Predicate::new(
        format!("slepian_order_h{h}"),
        worst.0 <= 0.0,
        format!("max over T of p_xi - p_eta - 3 sd = {} at T = {}", worst.0, worst.1),
    ));
    let (tx, sx) = (xi.fit.theta_hat, xi.fit.stderr);
    let (te, se) = (eta.fit.theta_hat, eta.fit.stderr);
    let comb = (sx * sx + se * se).sqrt();
    predicates.push(Predicate::new(
        format!("theta_xi_dominates_h{h}"),
        tx >= te - 3.0 * comb,
        format!("theta_xi = {tx} +- {sx}, 2a theta_eta = {te} +- {se}"),
    ));
    Ok(SlepianPairReport {
        hurst: h.value(),
        rho_star_cosh: cosh.rho_star,
        rho_star_lags: rho_lags,
        a,
        xi,
        eta,
        two_a_theta_eta: te,
        two_a_theta_eta_stderr: se,
        z_scores,
        predicates,
    })
}

/// Brownian motion against the reflection principle `P(sup_[0,T] b < 1) = 2 Phi(1/sqrt T) - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionCheck {
    pub n_grid: usize,
    pub rows: Vec<ReflectionRow>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionRow {
    pub t: f64,
    pub exact: f64,
    pub p_hat: f64,
    pub p_hat_refined: f64,
    pub wilson_half_width: f64,
    /// `|p_n - p_2n| / (1 - 2^{-1/2})`: the refinement gap extrapolated with
    /// the `n^{-1/2}` rate of the grid-maximum deficit.
    pub grid_bias_bound: f64,
    pub passed: bool,
}

/// By self-similarity `P(sup_{T grid} b < 1) = P(sup_{unit grid} b < T^{-1/2})`,
/// so every `T` comes from one ensemble on `[0, 1]` with `2 n_grid` steps; the
/// even-indexed points give the `n_grid` run on the same paths.
pub fn reflection_check(ts: &[f64], n_grid: usize, n_trials: usize, seed: u64) -> Result<ReflectionCheck> {
    let kernel = KernelSpec::fbm(Hurst::new(0.5)?);
    let coarse = DomainSpec::interval(0.0, 1.0, 1.0, n_grid)?;
    let fine = DomainSpec::interval(0.0, 1.0, 1.0, 2 * n_grid)?;
    let mut pts: Vec<LadderPoint> =
        ts.iter().map(|&t| LadderPoint { t, domain: coarse, level: t.powf(-0.5) }).collect();
    pts.extend(ts.iter().map(|&t| LadderPoint { t, domain: fine, level: t.powf(-0.5) }));
    let ladder = Ladder::new(kernel, pts)?;
    let est = estimate_ladder(&ladder, &[Event::SupBelow], n_trials, seed)?;
    let all = est.get(Event::SupBelow).expect("requested");
    let k = ts.len();
    let rows: Vec<ReflectionRow> = (0..k)
        .map(|i| {
            let (c, f) = (&all[i], &all[i + k]);
            let exact = 2.0 * normal::cdf(1.0 / ts[i].sqrt()) - 1.0;
            let bias = (c.p_hat - f.p_hat).abs() / (1.0 - 0.5f64.sqrt());
            let half = c.ci_half_width();
            ReflectionRow {
                t: ts[i],
                exact,
                p_hat: c.p_hat,
                p_hat_refined: f.p_hat,
                wilson_half_width: half,
                grid_bias_bound: bias,
                passed: (c.p_hat - exact).abs() <= 3.0 * half + bias,
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.passed);
    Ok(ReflectionCheck { n_grid, rows, passed })
}

/// An `estimate_events` ladder with a zero-variance point inside `U_0`.
#[derive(Debug, Clone)]
pub struct EventExperiment {
    pub name: &'static str,
    pub kernel: KernelSpec,
    pub points: Vec<LadderPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventReport {
    pub name: String,
    pub n_trials: usize,
    pub ts: Vec<f64>,
    pub p_sup: Vec<f64>,
    pub p_z: Vec<f64>,
    pub p_g: Vec<f64>,
    pub inclusion_violations: u64,
    pub passed: bool,
}

impl EventExperiment {
    pub fn run(&self, n_trials: usize, seed: u64) -> Result<EventReport> {
        let ladder = Ladder::new(self.kernel, self.points.clone())?;
        let est = estimate_ladder(&ladder, &Event::ALL, n_trials, derive_seed(seed, self.name))?;
        let ps = |e| est.get(e).expect("all events").iter().map(|x| x.p_hat).collect::<Vec<_>>();
        Ok(EventReport {
            name: self.name.to_string(),
            n_trials,
            ts: self.points.iter().map(|p| p.t).collect(),
            p_sup: ps(Event::SupBelow),
            p_z: ps(Event::NegOutsideU0),
            p_g: ps(Event::ArgmaxInU0),
            inclusion_violations: est.inclusion_violations,
            passed: est.inclusion_violations == 0,
        })
    }
}

pub fn bundled_event_experiments() -> Vec<EventExperiment> {
    let h = |v: f64| Hurst::new(v).expect("valid H");
    let unit = Some(Exclude::Interval { lo: 0.0, hi: 1.0 });
    let sym = Some(Exclude::Interval { lo: -1.0, hi: 1.0 });
    let ts = [2.0, 4.0, 8.0, 16.0, 32.0];
    let iv = |lo, hi, u0| interval_ladder(lo, hi, &ts, 8, 1.0, u0).expect("valid ladder");
    let sh = |shape, u0| shape_ladder(shape, &ts, 3, 1.0, Some(u0)).expect("valid ladder");
    vec![
        EventExperiment { name: "fbm_h0.5_delta0", kernel: KernelSpec::fbm(h(0.5)), points: iv(0.0, 1.0, unit) },
        EventExperiment { name: "fbm_h0.3_delta0", kernel: KernelSpec::fbm(h(0.3)), points: iv(0.0, 1.0, unit) },
        EventExperiment { name: "ifbm_h0.7_delta0", kernel: KernelSpec::ifbm(h(0.7)), points: iv(0.0, 1.0, unit) },
        EventExperiment { name: "fbm_h0.5_delta_minus1", kernel: KernelSpec::fbm(h(0.5)), points: iv(-1.0, 1.0, sym) },
        EventExperiment {
            name: "fbs_h0.5_square",
            kernel: KernelSpec::fbs(h(0.5)),
            points: sh(Shape::Square, Exclude::ProductBelowOne),
        },
        EventExperiment {
            name: "fbs_h0.4_cone_a0.5",
            kernel: KernelSpec::fbs(h(0.4)),
            points: sh(Shape::Cone { a: 0.5 }, Exclude::UnitSquare),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert!(p.defaults().resolve(p).is_ok(), "{p}");
        }
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn params_validation() {
        let bad = PresetParams { ladder: Some(vec![1.0, 2.0, 2.0, 4.0]), ..Default::default() };
        assert!(bad.resolve(Preset::Sinai).is_err());
        let few = PresetParams { n_trials: Some(10), ..Default::default() };
        assert!(few.resolve(Preset::Sinai).is_err());
        let h = PresetParams { hurst: Some(vec![1.2]), ..Default::default() };
        assert!(matches!(h.resolve(Preset::Sinai), Err(Error::InvalidHurst(_))));
        assert!(interval_ladder(0.0, 1.0, &[0.3], 4, 1.0, None).is_err());
    }

    #[test]
    fn bundled_event_ladders_build() {
        for e in bundled_event_experiments() {
            let lad = Ladder::new(e.kernel, e.points.clone()).unwrap();
            assert!(lad.u0_points() > 0, "{}", e.name);
        }
    }

    #[test]
    fn small_sech_preset_runs() {
        let p = PresetParams {
            n_trials: Some(4000),
            ladder: Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            n_grid: Some(4),
            ..Default::default()
        };
        let rep = run_preset(Preset::SechEta, &p, 1).unwrap();
        assert_eq!(rep.runs.len(), 1);
        assert_eq!(rep.runs[0].ladder.len(), 5);
        assert!(rep.runs[0].fit.theta_hat > 0.0);
    }
}
