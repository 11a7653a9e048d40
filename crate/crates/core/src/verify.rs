//! Verification suites: each runs a family of checks and reports every one.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    dual_fbm_corr, dual_fbs_corr, dual_ifbm_corr, f_drift, fbm_cov, fbs_cov, ifbm_cov, psi_drift, r_poly, sech_corr,
    verify_cosh_bound, verify_monotone, verify_r_nonneg,
};
use crate::oracle::{dual_ifbm_by_quadrature_tol, ifbm_cov_by_quadrature};
use crate::orthant::bundled_parquets;
use crate::rng::derive_seed;
use crate::samplers::{
    empirical_cov_report, gram, product_grid, CholeskySampler, FbmPath, Grid, Grid1D, KronSheet, PathEnsemble,
    PathSampler, StationaryCirculant,
};
use crate::{Family, Hurst, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kernels,
    Lemma2,
    Prop1,
    Duality,
    Samplers,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Kernels, Suite::Lemma2, Suite::Prop1, Suite::Duality, Suite::Samplers];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Lemma2 => "lemma2",
            Suite::Prop1 => "prop1",
            Suite::Duality => "duality",
            Suite::Samplers => "samplers",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown verification suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity (an error, a minimum, a z-score).
    pub value: f64,
    /// What `value` was compared against.
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed: value <= limit, value, limit, detail: detail.into() }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed: value >= limit, value, limit, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        SuiteReport { suite, checks, passed }
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Trials per sampler ensemble.
    pub n_trials: usize,
    /// Lattice points per orthant probability.
    pub n_qmc: usize,
    /// Points of the `t` grid for the duality sweep.
    pub duality_points: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { n_trials: 100_000, n_qmc: 1 << 15, duality_points: 1000, seed: 2024 }
    }
}

/// `H = 0.05, 0.10, ..., 0.95`.
pub fn hurst_grid() -> Vec<Hurst> {
    (1..=19).map(|k| Hurst::new(0.05 * k as f64).expect("inside (0,1)")).collect()
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Kernels => kernel_checks()?,
        Suite::Lemma2 => lemma2_checks()?,
        Suite::Prop1 => prop1_checks(opts)?,
        Suite::Duality => vec![duality_check(&hurst_grid(), opts.duality_points)],
        Suite::Samplers => sampler_checks(opts)?,
    };
    Ok(SuiteReport::new(suite, checks))
}

/// Per-level quadrature tolerance of the duality sweep, two orders below its threshold.
pub const DUALITY_QUAD_TOL: f64 = 1e-10;

/// Closed-form dual correlation against `(2H+2) e^{-(1+H)t}` times the
/// double-integral oracle, on `points` equally spaced `t` in `[0, 10]`.
pub fn duality_check(hs: &[Hurst], points: usize) -> Check {
    let mut worst = (0.0f64, 0.0, 0.0);
    for &h in hs {
        for i in 0..points {
            let t = 10.0 * i as f64 / (points - 1).max(1) as f64;
            let err = (dual_ifbm_corr(h, t) - dual_ifbm_by_quadrature_tol(h.value(), t, DUALITY_QUAD_TOL)).abs();
            if !(err <= worst.0) {
                worst = (err, h.value(), t);
            }
        }
    }
    Check::at_most(
        "dual_ifbm_closed_form_vs_quadrature",
        worst.0,
        1e-8,
        format!("max |error| over {} H x {points} t at H = {}, t = {}", hs.len(), worst.1, worst.2),
    )
}

fn min_eigen_ratio(k: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, k);
    let eig = m.symmetric_eigenvalues();
    let norm = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if norm > 0.0 {
        min / norm
    } else {
        0.0
    }
}

fn psd_grid(fam: Family) -> Grid {
    match fam {
        Family::Fbm | Family::Ifbm => {
            Grid::OneD(Grid1D::new(vec![-3.0, -1.7, -0.4, 0.0, 0.25, 0.9, 1.3, 2.2, 3.1, 4.5, 6.0, 8.0]).unwrap())
        }
        Family::DualFbm | Family::DualIfbm | Family::Sech => Grid::OneD(Grid1D::uniform(0.0, 6.0, 16).unwrap()),
        Family::Fbs => {
            let ax = Grid1D::new(vec![0.0, 0.3, 1.1, 2.0]).unwrap();
            Grid::TwoD(product_grid(&ax, &ax, None).unwrap())
        }
        Family::DualFbs => {
            let ax = Grid1D::new(vec![-2.0, -0.5, 0.4, 1.5]).unwrap();
            Grid::TwoD(product_grid(&ax, &ax, None).unwrap())
        }
    }
}

fn families() -> [Family; 7] {
    [Family::Fbm, Family::Fbs, Family::Ifbm, Family::DualFbm, Family::DualIfbm, Family::DualFbs, Family::Sech]
}

fn kernel_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for fam in families() {
        let grid = psd_grid(fam);
        let hs: Vec<Option<Hurst>> =
            if fam == Family::Sech { vec![None] } else { hurst_grid().into_iter().map(Some).collect() };
        let mut worst = (f64::INFINITY, 0.0);
        for h in hs {
            let kernel = match h {
                Some(h) => KernelSpec::with_hurst(fam, h),
                None => KernelSpec::sech(0.5)?,
            };
            let r = min_eigen_ratio(&gram(&kernel, &grid)?, grid.len());
            if r < worst.0 {
                worst = (r, h.map_or(f64::NAN, |h| h.value()));
            }
        }
        checks.push(Check::at_least(
            format!("psd_{}", fam.name()),
            worst.0,
            -1e-10,
            format!("min eigenvalue / norm over the H grid on {} points (worst H = {})", grid.len(), worst.1),
        ));
    }

    let mut worst = (0.0f64, String::new());
    for &hv in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let h = Hurst::new(hv)?;
        for &(s, t) in &[(1.0, 1.0), (0.3, 2.5), (2.5, -1.2), (-0.7, -1.9), (4.0, 0.5)] {
            let exact = ifbm_cov(h, s, t);
            let err = (exact - ifbm_cov_by_quadrature(hv, s, t)).abs() / exact.abs().max(1.0);
            if err > worst.0 {
                worst = (err, format!("H = {hv}, s = {s}, t = {t}"));
            }
        }
    }
    checks.push(Check::at_most("ifbm_closed_form_vs_quadrature", worst.0, 1e-10, worst.1));

    let mut dual_fbm_err = 0.0f64;
    for h in hurst_grid() {
        for i in 0..=40 {
            let t = 0.25 * i as f64;
            let via_cov = (-h.value() * t).exp() * fbm_cov(h, 1.0, t.exp());
            dual_fbm_err = dual_fbm_err.max((dual_fbm_corr(h, t) - via_cov).abs());
        }
    }
    checks.push(Check::at_most("dual_fbm_vs_scaled_fbm_cov", dual_fbm_err, 1e-10, "e^{-Ht} B(1, e^t) on t in [0, 10]"));

    let h = |v| Hurst::new(v).expect("valid");
    let e = std::f64::consts::E;
    let examples: Vec<(&str, f64, f64)> = vec![
        ("fbm_cov(0.75, 1, 2) = sqrt 2", fbm_cov(h(0.75), 1.0, 2.0), 2f64.sqrt()),
        ("fbm_cov(0.5, 2, 3) = 2", fbm_cov(h(0.5), 2.0, 3.0), 2.0),
        ("fbs_cov(0.5, (2,3), (3,2)) = 4", fbs_cov(h(0.5), [2.0, 3.0], [3.0, 2.0]), 4.0),
        ("fbs_cov on the axis = 0", fbs_cov(h(0.3), [1.7, 0.0], [2.0, 5.0]), 0.0),
        ("ifbm_cov(0.5, 1, 1) = 1/3", ifbm_cov(h(0.5), 1.0, 1.0), 1.0 / 3.0),
        ("ifbm_cov(0.2, 1, 1) = 1/2.4", ifbm_cov(h(0.2), 1.0, 1.0), 1.0 / 2.4),
        ("dual_ifbm_corr(H, 0) = 1", dual_ifbm_corr(h(0.37), 0.0), 1.0),
        ("dual_fbm_corr(0.5, 3) = e^{-3/2}", dual_fbm_corr(h(0.5), 3.0), (-1.5f64).exp()),
        ("dual_fbs_corr(0.5, 1, 1) = e^{-1}", dual_fbs_corr(h(0.5), 1.0, 1.0), 1.0 / e),
        ("sech_corr(2, 1/2) = 2/(e + 1/e)", sech_corr(2.0, 0.5), 2.0 / (e + 1.0 / e)),
        ("f_drift(H, 1/2) = 1", f_drift(h(0.8), 0.5), 1.0),
        ("f_drift(0.5, 3) = 2", f_drift(h(0.5), 3.0), 2.0),
        ("psi_drift(H, a, (a/2, 1/(2a))) = 1", psi_drift(h(0.3), 1.7, [0.85, 1.0 / 3.4])?, 1.0),
        ("r_poly(H, 0) = 0", r_poly(h(0.4), 0.0)?, 0.0),
        ("r_poly(H, 1) = 0", r_poly(h(0.4), 1.0)?, 0.0),
        ("r_poly(0.5, 0.5) = 1/4", r_poly(h(0.5), 0.5)?, 0.25),
    ];
    for (name, got, want) in examples {
        checks.push(Check::at_most(name, (got - want).abs(), 1e-12, format!("got {got}, expected {want}")));
    }
    Ok(checks)
}

fn lemma2_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for h in hurst_grid() {
        let r = verify_r_nonneg(h, 2001)?;
        checks.push(Check::at_least(
            format!("r_nonneg_h{h}"),
            r.min_value,
            -1e-12,
            format!("min R = {} at x = {}", r.min_value, r.argmin),
        ));
        let m = verify_monotone(h, 20.0, 4000)?;
        checks.push(Check::at_most(
            format!("b_nonincreasing_h{h}"),
            m.max_increase,
            1e-12,
            format!("{} violations on [0, 20]", m.violations.len()),
        ));
        let c = verify_cosh_bound(h, 50.0, 20_000)?;
        checks.push(Check::at_least(
            format!("rho_star_positive_h{h}"),
            c.rho_star,
            f64::MIN_POSITIVE,
            format!("rho* = {} attained at t = {}", c.rho_star, c.argmin_t),
        ));
        let t_star = c.t_star.unwrap_or(f64::INFINITY);
        checks.push(Check::at_most(
            format!("cosh_bound_tail_h{h}"),
            t_star,
            c.tmax,
            format!("B_H(t) <= 1/cosh(H(1-H)t) for every grid t >= T* = {t_star}"),
        ));
    }
    Ok(checks)
}

fn prop1_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let parquets = bundled_parquets();
    let mut checks = Vec::new();
    for p in &parquets {
        let rep = p.check(opts.n_qmc, derive_seed(opts.seed, &p.name))?;
        let tol = 3.0 * (rep.whole_err + rep.product_err);
        checks.push(Check {
            name: format!("supermultiplicative_{}", p.name),
            passed: rep.passed,
            value: rep.product - rep.whole,
            limit: tol,
            detail: format!(
                "P(whole) = {} +- {}, prod P(cell) = {} +- {} over {} cells of {} points",
                rep.whole, rep.whole_err, rep.product, rep.product_err, rep.n_cells, rep.n_points
            ),
        });
    }
    let triangles = parquets.iter().filter(|p| p.grid.dim() == 2 && p.cells.len() == 4).count();
    checks.push(Check::at_least(
        "triangle_partition_n2_present",
        triangles as f64,
        1.0,
        "n^2 = 4 cell triangle parquets",
    ));
    checks.push(Check::at_least("bundled_instances", parquets.len() as f64, 6.0, "parquet count"));
    Ok(checks)
}

/// A named kernel on a grid, with the sampler that draws it.
pub type SamplerCase = (String, KernelSpec, Grid, Box<dyn PathSampler>);

/// One small grid per family and the sampler it is drawn with.
pub fn bundled_sampler_cases() -> Result<Vec<SamplerCase>> {
    let h = |v| Hurst::new(v).expect("valid");
    let mut out: Vec<SamplerCase> = Vec::new();
    let chol = |name: &str, k: KernelSpec, g: Grid| -> Result<SamplerCase> {
        let s = CholeskySampler::new(&k, &g)?;
        Ok((name.to_string(), k, g, Box::new(s)))
    };
    let two_sided =
        Grid::OneD(Grid1D::new(vec![-2.0, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.5, 7.0, 9.0]).unwrap());
    let sheet_ax = Grid1D::new(vec![0.0, 0.5, 1.2, 2.0]).unwrap();
    let dual_ax = Grid1D::new(vec![0.0, 0.4, 1.0, 1.8]).unwrap();
    out.push(chol("fbm_h0.3_cholesky", KernelSpec::fbm(h(0.3)), two_sided.clone())?);
    out.push(chol("ifbm_h0.7_cholesky", KernelSpec::ifbm(h(0.7)), two_sided)?);
    out.push(chol("dual_fbm_h0.2_cholesky", KernelSpec::dual_fbm(h(0.2)), Grid::OneD(Grid1D::uniform(0.0, 4.0, 15)?))?);
    out.push(chol(
        "dual_ifbm_h0.6_cholesky",
        KernelSpec::dual_ifbm(h(0.6)),
        Grid::OneD(Grid1D::uniform(0.0, 6.0, 15)?),
    )?);
    out.push(chol("sech_cholesky", KernelSpec::sech(0.5)?, Grid::OneD(Grid1D::uniform(0.0, 8.0, 15)?))?);
    out.push(chol(
        "fbs_h0.4_cholesky",
        KernelSpec::fbs(h(0.4)),
        Grid::TwoD(product_grid(&sheet_ax, &sheet_ax, None)?),
    )?);
    out.push(chol(
        "dual_fbs_h0.7_cholesky",
        KernelSpec::dual_fbs(h(0.7)),
        Grid::TwoD(product_grid(&dual_ax, &dual_ax, None)?),
    )?);

    let fbm = FbmPath::new(h(0.3), 16, 0.25, 4)?;
    out.push(("fbm_h0.3_circulant".into(), KernelSpec::fbm(h(0.3)), Grid::OneD(fbm.grid()), Box::new(fbm)));
    let k = KernelSpec::dual_fbm(h(0.8));
    let circ = StationaryCirculant::new(15, &|j| dual_fbm_corr(h(0.8), 0.3 * j as f64))
        .map_err(|w| Error::Hypothesis(format!("circulant embedding eigenvalue {w}")))?;
    out.push(("dual_fbm_h0.8_circulant".into(), k, Grid::OneD(Grid1D::stepped(0.0, 0.3, 15)?), Box::new(circ)));
    for (name, k, ax) in [
        ("fbs_h0.6_kronecker", KernelSpec::fbs(h(0.6)), &sheet_ax),
        ("dual_fbs_h0.3_kronecker", KernelSpec::dual_fbs(h(0.3)), &dual_ax),
    ] {
        let s = KronSheet::new(&k, ax, ax, None)?;
        out.push((name.into(), k, Grid::TwoD(product_grid(ax, ax, None)?), Box::new(s)));
    }
    Ok(out)
}

fn sampler_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, kernel, grid, sampler) in bundled_sampler_cases()? {
        let ens = PathEnsemble::generate(sampler.as_ref(), kernel, grid, opts.n_trials, derive_seed(opts.seed, &name))?;
        let rep = empirical_cov_report(&ens)?;
        checks.push(Check::at_most(
            format!("covariance_{name}"),
            rep.worst_z,
            crate::samplers::COV_Z_LIMIT,
            format!(
                "worst z at {:?} over {} points, {} trials; max |dev| {}",
                rep.worst_entry, rep.n_points, rep.n_trials, rep.max_abs_dev
            ),
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn kernels_suite_passes() {
        let rep = run_suite(Suite::Kernels, &VerifyOptions::default()).unwrap();
        assert!(rep.passed, "{:?}", rep.first_failure());
    }

    #[test]
    fn lemma2_suite_passes() {
        let rep = run_suite(Suite::Lemma2, &VerifyOptions::default()).unwrap();
        assert!(rep.passed, "{:?}", rep.first_failure());
    }

    #[test]
    fn coarse_duality_sweep() {
        let c = duality_check(&[Hurst::new(0.25).unwrap(), Hurst::new(0.8).unwrap()], 11);
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn bundled_sampler_grids_are_small() {
        let cases = bundled_sampler_cases().unwrap();
        assert!(cases.len() >= 7);
        for (name, _, g, s) in &cases {
            assert!(g.len() <= 20, "{name}");
            assert_eq!(g.len(), s.n_points(), "{name}");
        }
    }

    #[test]
    fn all_zero_ensemble_fails_the_report() {
        let g = Grid::OneD(Grid1D::uniform(0.5, 2.0, 4).unwrap());
        let k = KernelSpec::fbm(Hurst::new(0.5).unwrap());
        let ens = PathEnsemble {
            kernel: k,
            grid: g,
            n_trials: 1000,
            values: vec![0.0; 4000],
            seed: 0,
            generator_id: "zeros".into(),
        };
        assert!(!empirical_cov_report(&ens).unwrap().passed);
    }
}
