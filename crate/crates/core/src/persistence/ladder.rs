//! Monte Carlo survival counts over a ladder of nested domains.
//!
//! All ladder points share one ensemble on the union grid (common random
//! numbers). Each grid point carries the index of the first ladder domain that
//! contains it; per trial the running maxima over those ranks decide survival
//! at every ladder point at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::{grid_point, DomainSpec, Point, Shape};
use crate::error::{Error, Result};
use crate::kernels::Family;
use crate::linalg::MAX_DENSE;
use crate::rng::{trial_rng, GENERATOR_ID};
use crate::samplers::{
    product_grid, CholeskySampler, FbmPath, Grid, IfbmPath, KronSheet, PathEnsemble, PathSampler, StationaryCirculant,
};
use crate::KernelSpec;

pub const MAX_LADDER: usize = 64;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Event {
    /// `x < level` on the whole domain.
    SupBelow,
    /// `x < 0` on the domain outside `U_0` (the event `Z`).
    NegOutsideU0,
    /// `max over U_0 > max outside U_0` (the event `G`).
    ArgmaxInU0,
}

impl Event {
    pub const ALL: [Event; 3] = [Event::SupBelow, Event::NegOutsideU0, Event::ArgmaxInU0];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    /// The horizon reported for this point (may differ from the sampled
    /// domain's scale when a level rescaling stands in for it).
    pub t: f64,
    pub domain: DomainSpec,
    pub level: f64,
}

/// Survivor counts, `survive[k][event]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderCounts {
    pub n_trials: usize,
    pub survive: Vec<[u64; 3]>,
    /// Trials where `Z` held but `G` did not, summed over ladder points.
    pub inclusion_violations: u64,
    pub seed: u64,
    pub generator_id: String,
}

/// The union grid, its sampler and per-point ranks.
pub struct Ladder {
    kernel: KernelSpec,
    points: Vec<LadderPoint>,
    grid: Grid,
    rank: Vec<u32>,
    in_u0: Vec<bool>,
    sampler: Box<dyn PathSampler>,
    monotone: bool,
    /// `max_{j >= k} level_j`.
    suffix_level: Vec<f64>,
}

impl std::fmt::Debug for Ladder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ladder")
            .field("kernel", &self.kernel)
            .field("n_points", &self.grid.len())
            .field("ladder", &self.points.len())
            .field("method", &self.sampler.method())
            .finish()
    }
}

impl Ladder {
    /// `points` must be nested: every domain's grid is contained in the last
    /// one's and the domains grow along the ladder.
    pub fn new(kernel: KernelSpec, points: Vec<LadderPoint>) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::InvalidArgument("empty ladder".into()));
        }
        if k > MAX_LADDER {
            return Err(Error::Budget { what: "ladder points", requested: k, limit: MAX_LADDER });
        }
        let u0 = points[0].domain.exclude;
        if points.iter().any(|p| p.domain.exclude != u0) {
            return Err(Error::InvalidArgument("ladder points must share U_0".into()));
        }
        if points.iter().any(|p| !p.level.is_finite()) {
            return Err(Error::InvalidArgument("levels must be finite".into()));
        }
        let outer = points[k - 1].domain;
        let (grid, sampler) = design(&kernel, &outer)?;
        let n = grid.len();
        let mut rank = vec![NONE; n];
        let mut in_u0 = vec![false; n];
        for i in 0..n {
            let p = grid_point(&grid, i);
            in_u0[i] = outer.in_u0(p);
            if let Some(r) = points.iter().position(|lp| lp.domain.contains(p)) {
                rank[i] = r as u32;
            }
        }
        for (j, lp) in points.iter().enumerate() {
            let own = lp.domain.grid()?.len();
            let covered = rank.iter().filter(|&&r| r != NONE && r as usize <= j).count();
            if own != covered {
                return Err(Error::InvalidArgument(format!(
                    "ladder point {j} ({}) has {own} grid points but the union grid covers {covered}; \
                     domains must be nested and share a lattice",
                    lp.domain
                )));
            }
        }
        let monotone = rank.windows(2).all(|w| w[0] <= w[1]);
        let mut suffix_level = vec![f64::NEG_INFINITY; k];
        let mut m = f64::NEG_INFINITY;
        for j in (0..k).rev() {
            m = m.max(points[j].level);
            suffix_level[j] = m;
        }
        Ok(Ladder { kernel, points, grid, rank, in_u0, sampler, monotone, suffix_level })
    }

    /// One domain, several levels (every grid point has rank 0).
    pub fn levels(kernel: KernelSpec, domain: DomainSpec, ts_levels: &[(f64, f64)]) -> Result<Self> {
        let pts = ts_levels.iter().map(|&(t, level)| LadderPoint { t, domain, level }).collect();
        Ladder::new(kernel, pts)
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn points(&self) -> &[LadderPoint] {
        &self.points
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn method(&self) -> &'static str {
        self.sampler.method()
    }

    pub fn u0_points(&self) -> usize {
        self.in_u0.iter().zip(&self.rank).filter(|(u, r)| **u && **r != NONE).count()
    }

    pub fn run(&self, events: &[Event], n_trials: usize, seed: u64) -> Result<LadderCounts> {
        if n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
        }
        let wants_u0 = events.iter().any(|e| *e != Event::SupBelow);
        if wants_u0 && self.points[0].domain.exclude.is_none() {
            return Err(Error::InvalidArgument("events Z and G need a U_0".into()));
        }
        let k = self.points.len();
        let early_stop = self.monotone && !wants_u0;
        let levels: Vec<f64> = self.points.iter().map(|p| p.level).collect();
        let check_inclusion = events.contains(&Event::NegOutsideU0) && events.contains(&Event::ArgmaxInU0);

        struct Acc {
            survive: Vec<[u64; 3]>,
            violations: u64,
            buf: Vec<f64>,
            m: [Vec<f64>; 3],
        }
        let fresh = || Acc {
            survive: vec![[0; 3]; k],
            violations: 0,
            buf: Vec::new(),
            m: [vec![0.0; k], vec![0.0; k], vec![0.0; k]],
        };
        let acc = (0..n_trials as u64)
            .into_par_iter()
            .fold(fresh, |mut acc, trial| {
                let [m_all, m_in, m_out] = &mut acc.m;
                for m in [&mut *m_all, &mut *m_in, &mut *m_out] {
                    m.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
                }
                let mut rng = trial_rng(seed, trial);
                self.sampler.walk(&mut rng, &mut acc.buf, &mut |i, v| {
                    let r = self.rank[i];
                    if r == NONE {
                        return true;
                    }
                    let r = r as usize;
                    m_all[r] = m_all[r].max(v);
                    let side = if self.in_u0[i] { &mut m_in[r] } else { &mut m_out[r] };
                    *side = side.max(v);
                    !(early_stop && v >= self.suffix_level[r])
                });
                for j in 1..k {
                    m_all[j] = m_all[j].max(m_all[j - 1]);
                    m_in[j] = m_in[j].max(m_in[j - 1]);
                    m_out[j] = m_out[j].max(m_out[j - 1]);
                }
                for j in 0..k {
                    let sup = m_all[j] < levels[j];
                    let z = m_out[j] < 0.0;
                    let g = m_in[j] > m_out[j];
                    let s = &mut acc.survive[j];
                    s[Event::SupBelow.slot()] += sup as u64;
                    s[Event::NegOutsideU0.slot()] += z as u64;
                    s[Event::ArgmaxInU0.slot()] += g as u64;
                    if check_inclusion && z && !g {
                        acc.violations += 1;
                    }
                }
                acc
            })
            .map(|a| (a.survive, a.violations))
            .reduce(
                || (vec![[0; 3]; k], 0),
                |(mut s, v), (t, w)| {
                    for (a, b) in s.iter_mut().zip(&t) {
                        for e in 0..3 {
                            a[e] += b[e];
                        }
                    }
                    (s, v + w)
                },
            );
        let mut survive = acc.0;
        for s in survive.iter_mut() {
            for e in Event::ALL {
                if !events.contains(&e) {
                    s[e.slot()] = 0;
                }
            }
        }
        Ok(LadderCounts {
            n_trials,
            survive,
            inclusion_violations: acc.1,
            seed,
            generator_id: format!("{GENERATOR_ID}/{}", self.sampler.method()),
        })
    }
}

impl LadderCounts {
    pub fn count(&self, k: usize, e: Event) -> u64 {
        self.survive[k][e.slot()]
    }
}

/// Union grid and sampler for the outermost domain.
/// Paths of `kernel` on the grid of `domain`, drawn with the sampler a ladder
/// ending in `domain` would use.
pub fn sample_domain(kernel: KernelSpec, domain: &DomainSpec, n_trials: usize, seed: u64) -> Result<PathEnsemble> {
    domain.validate()?;
    let (grid, sampler) = design(&kernel, domain)?;
    PathEnsemble::generate(sampler.as_ref(), kernel, grid, n_trials, seed)
}

fn design(kernel: &KernelSpec, d: &DomainSpec) -> Result<(Grid, Box<dyn PathSampler>)> {
    let fam = kernel.family();
    if fam.dim() != d.dim() {
        return Err(Error::DimensionMismatch { kernel: kernel.to_string(), dim: d.dim() });
    }
    let grid = d.grid()?;
    match (d.shape, grid) {
        (Shape::Interval { .. }, Grid::OneD(g)) => {
            let step = d.step().expect("interval step");
            let n = g.len();
            let origin = g.points().iter().position(|x| x.abs() <= 1e-9 * step);
            let h = kernel.hurst();
            let sampler: Box<dyn PathSampler> = match (fam, origin, h) {
                (Family::Fbm, Some(o), Some(h)) => Box::new(FbmPath::new(h, n - 1, step, o)?),
                (Family::Ifbm, Some(o), Some(h)) => Box::new(IfbmPath::new(h, n - 1, step, o)?),
                _ if fam.is_stationary() => {
                    let acov = |k: usize| kernel.cov_1d(0.0, k as f64 * step).expect("1d kernel");
                    match StationaryCirculant::new(n, &acov) {
                        Ok(c) => Box::new(c),
                        Err(worst) => {
                            log::warn!("circulant embedding for {kernel} on {n} points has eigenvalue {worst:e}; using cholesky");
                            dense(kernel, &Grid::OneD(g.clone()))?
                        }
                    }
                }
                _ => dense(kernel, &Grid::OneD(g.clone()))?,
            };
            // sampler grids are rebuilt from (origin, step); keep the domain's own points
            Ok((Grid::OneD(g), sampler))
        }
        (_, Grid::TwoD(_)) => {
            let ax = d.axis_grid()?;
            let na = ax.len();
            let mask: Vec<usize> = (0..na * na)
                .filter(|&ij| d.contains(Point::Two([ax.points()[ij / na], ax.points()[ij % na]])))
                .collect();
            let sheet = KronSheet::new(kernel, &ax, &ax, Some(mask.clone()))?;
            let g = product_grid(&ax, &ax, Some(&mask))?;
            Ok((Grid::TwoD(g), Box::new(sheet)))
        }
        _ => Err(Error::InvalidArgument(format!("cannot discretize {d}"))),
    }
}

fn dense(kernel: &KernelSpec, grid: &Grid) -> Result<Box<dyn PathSampler>> {
    if grid.len() > MAX_DENSE {
        return Err(Error::Budget { what: "dense covariance size", requested: grid.len(), limit: MAX_DENSE });
    }
    Ok(Box::new(CholeskySampler::new(kernel, grid)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::domain::Exclude;
    use crate::Hurst;

    fn h(v: f64) -> Hurst {
        Hurst::new(v).unwrap()
    }

    #[test]
    fn rejects_non_nested_ladders() {
        let k = KernelSpec::fbm(h(0.5));
        let a = DomainSpec::interval(0.0, 1.0, 1.0, 8).unwrap();
        let b = DomainSpec::interval(0.0, 1.0, 2.0, 8).unwrap(); // step 1/4 vs 1/8: not on one lattice
        let pts = vec![LadderPoint { t: 2.0, domain: b, level: 1.0 }, LadderPoint { t: 1.0, domain: a, level: 1.0 }];
        assert!(Ladder::new(k, pts).is_err());
    }

    #[test]
    fn fixed_step_ladder_is_monotone_in_t() {
        let k = KernelSpec::fbm(h(0.5));
        let pts: Vec<_> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&t| LadderPoint {
                t,
                domain: DomainSpec::interval(0.0, 1.0, t, (16.0 * t) as usize).unwrap(),
                level: 1.0,
            })
            .collect();
        let lad = Ladder::new(k, pts).unwrap();
        assert!(lad.monotone);
        let c = lad.run(&[Event::SupBelow], 4000, 3).unwrap();
        let p: Vec<u64> = (0..3).map(|j| c.count(j, Event::SupBelow)).collect();
        // common random numbers: survival is pathwise nonincreasing
        assert!(p[0] >= p[1] && p[1] >= p[2], "{p:?}");
        assert!(p[2] > 0);
    }

    #[test]
    fn early_stop_agrees_with_full_scan() {
        let k = KernelSpec::ifbm(h(0.5));
        let d = |t: f64| DomainSpec::interval(0.0, 1.0, t, (8.0 * t) as usize).unwrap();
        let pts: Vec<_> = [2.0, 4.0, 8.0].iter().map(|&t| LadderPoint { t, domain: d(t), level: 1.0 }).collect();
        let lad = Ladder::new(k, pts.clone()).unwrap();
        let fast = lad.run(&[Event::SupBelow], 3000, 9).unwrap();
        // with U_0 attached the walk never stops early; SUP counts must agree
        let pts_u: Vec<_> = pts
            .into_iter()
            .map(|mut p| {
                p.domain = p.domain.with_exclude(Exclude::Interval { lo: 0.0, hi: 1.0 });
                p
            })
            .collect();
        let slow = Ladder::new(k, pts_u).unwrap().run(&Event::ALL, 3000, 9).unwrap();
        for j in 0..3 {
            assert_eq!(fast.count(j, Event::SupBelow), slow.count(j, Event::SupBelow));
        }
    }

    #[test]
    fn z_implies_g_pathwise() {
        let k = KernelSpec::fbm(h(0.7));
        let u0 = Exclude::Interval { lo: 0.0, hi: 1.0 };
        let pts: Vec<_> = [2.0, 4.0]
            .iter()
            .map(|&t| LadderPoint {
                t,
                domain: DomainSpec::interval(0.0, 1.0, t, (8.0 * t) as usize).unwrap().with_exclude(u0),
                level: 1.0,
            })
            .collect();
        let c = Ladder::new(k, pts).unwrap().run(&Event::ALL, 2000, 1).unwrap();
        assert_eq!(c.inclusion_violations, 0);
        for j in 0..2 {
            assert!(c.count(j, Event::NegOutsideU0) <= c.count(j, Event::ArgmaxInU0));
            assert!(c.count(j, Event::NegOutsideU0) > 0);
        }
    }

    #[test]
    fn sheet_ladder_builds() {
        let k = KernelSpec::fbs(h(0.5));
        let pts: Vec<_> = [2.0, 4.0]
            .iter()
            .map(|&t| LadderPoint {
                t,
                domain: DomainSpec::new(Shape::Square, t, 2, Some(Exclude::ProductBelowOne)).unwrap(),
                level: 1.0,
            })
            .collect();
        let lad = Ladder::new(k, pts).unwrap();
        assert!(lad.u0_points() > 0);
        let c = lad.run(&Event::ALL, 500, 2).unwrap();
        assert_eq!(c.inclusion_violations, 0);
        assert!(c.count(0, Event::SupBelow) >= c.count(1, Event::SupBelow));
    }

    #[test]
    fn dual_triangle_ladder_builds() {
        let k = KernelSpec::dual_fbs(h(0.5));
        let pts: Vec<_> = [0.5, 1.0, 1.5]
            .iter()
            .map(|&t| LadderPoint { t, domain: DomainSpec::new(Shape::Triangle, t, 4, None).unwrap(), level: 0.0 })
            .collect();
        let c = Ladder::new(k, pts).unwrap().run(&[Event::SupBelow], 2000, 4).unwrap();
        assert!(c.count(0, Event::SupBelow) > c.count(2, Event::SupBelow));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let k = KernelSpec::dual_fbm(h(0.3));
        let d = DomainSpec::interval(0.0, 1.0, 4.0, 64).unwrap();
        let lad = Ladder::levels(k, d, &[(4.0, 0.0), (4.0, 0.5)]).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| lad.run(&[Event::SupBelow], 1500, 11).unwrap());
        let b = three.install(|| lad.run(&[Event::SupBelow], 1500, 11).unwrap());
        assert_eq!(a, b);
    }
}
