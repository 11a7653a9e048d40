//! Survival probability estimates with Wilson intervals.

use serde::{Deserialize, Serialize};

use super::domain::DomainSpec;
use super::ladder::{Event, Ladder, LadderCounts, LadderPoint};
use crate::error::Result;
use crate::KernelSpec;

/// `Phi^{-1}(0.975)`.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceEstimate {
    pub kernel: KernelSpec,
    pub event: Event,
    pub t: f64,
    pub domain: DomainSpec,
    pub level: f64,
    pub n_trials: usize,
    pub n_survive: u64,
    pub p_hat: f64,
    pub ci95: (f64, f64),
    /// Set when no trial survived; `p_hat` is then only an upper bound.
    pub low_information: bool,
    pub seed: u64,
    pub generator_id: String,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

impl PersistenceEstimate {
    pub fn from_counts(kernel: KernelSpec, lp: &LadderPoint, event: Event, counts: &LadderCounts, k: usize) -> Self {
        let n = counts.n_trials;
        let s = counts.count(k, event);
        PersistenceEstimate {
            kernel,
            event,
            t: lp.t,
            domain: lp.domain,
            level: lp.level,
            n_trials: n,
            n_survive: s,
            p_hat: s as f64 / n as f64,
            ci95: wilson(s, n, Z95),
            low_information: s == 0,
            seed: counts.seed,
            generator_id: counts.generator_id.clone(),
        }
    }

    /// Binomial standard deviation of `p_hat` (plug-in).
    pub fn sd(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n_trials as f64).sqrt()
    }

    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci95.1 - self.ci95.0)
    }
}

/// `P(x < level on domain)`.
pub fn estimate_persistence(
    kernel: KernelSpec,
    domain: DomainSpec,
    level: f64,
    n_trials: usize,
    seed: u64,
) -> Result<PersistenceEstimate> {
    let lp = LadderPoint { t: domain.t_scale, domain, level };
    let ladder = Ladder::new(kernel, vec![lp])?;
    let c = ladder.run(&[Event::SupBelow], n_trials, seed)?;
    Ok(PersistenceEstimate::from_counts(kernel, &lp, Event::SupBelow, &c, 0))
}

/// Estimates for every ladder point and requested event, in ladder order.
pub fn estimate_ladder(ladder: &Ladder, events: &[Event], n_trials: usize, seed: u64) -> Result<LadderEstimates> {
    let counts = ladder.run(events, n_trials, seed)?;
    let per_event = events
        .iter()
        .map(|&e| {
            let v = ladder
                .points()
                .iter()
                .enumerate()
                .map(|(k, lp)| PersistenceEstimate::from_counts(ladder.kernel(), lp, e, &counts, k))
                .collect();
            (e, v)
        })
        .collect();
    Ok(LadderEstimates {
        per_event,
        inclusion_violations: counts.inclusion_violations,
        method: ladder.method().to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderEstimates {
    pub per_event: Vec<(Event, Vec<PersistenceEstimate>)>,
    pub inclusion_violations: u64,
    pub method: String,
}

impl LadderEstimates {
    pub fn get(&self, e: Event) -> Option<&[PersistenceEstimate]> {
        self.per_event.iter().find(|(x, _)| *x == e).map(|(_, v)| v.as_slice())
    }
}

/// `Z`, `G` and `x < level` on one domain with a `U_0`, from one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventEstimates {
    pub sup_below: PersistenceEstimate,
    pub z: PersistenceEstimate,
    pub g: PersistenceEstimate,
    /// Trials with `Z` but not `G`; zero whenever `U_0` holds a zero-variance point.
    pub inclusion_violations: u64,
}

pub fn estimate_events(
    kernel: KernelSpec,
    domain: DomainSpec,
    level: f64,
    n_trials: usize,
    seed: u64,
) -> Result<EventEstimates> {
    let lp = LadderPoint { t: domain.t_scale, domain, level };
    let ladder = Ladder::new(kernel, vec![lp])?;
    let c = ladder.run(&Event::ALL, n_trials, seed)?;
    let est = |e| PersistenceEstimate::from_counts(kernel, &lp, e, &c, 0);
    Ok(EventEstimates {
        sup_below: est(Event::SupBelow),
        z: est(Event::NegOutsideU0),
        g: est(Event::ArgmaxInU0),
        inclusion_violations: c.inclusion_violations,
    })
}
