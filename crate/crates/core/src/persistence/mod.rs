//! Persistence probabilities `P(x < level on T * Delta)` and their decay
//! exponents.

mod domain;
mod estimate;
mod fit;
mod ladder;
mod presets;

pub use domain::{DomainSpec, Exclude, Point, Shape};
pub use estimate::{
    estimate_events, estimate_ladder, estimate_persistence, wilson, EventEstimates, LadderEstimates,
    PersistenceEstimate, Z95,
};
pub use fit::{fit_counts, fit_exponent, ExponentFit, FitInput, PsiModel, MIN_FIT_POINTS, MIN_SURVIVORS};
pub use ladder::{sample_domain, Event, Ladder, LadderCounts, LadderPoint, MAX_LADDER};
pub use presets::{
    bundled_event_experiments, interval_ladder, ratio_stability, reflection_check, run_preset, shape_ladder,
    slepian_pair_experiment, EventExperiment, EventReport, Predicate, Preset, PresetParams, PresetReport, PresetRun,
    RatioStability, ReflectionCheck, ReflectionRow, SlepianPairReport,
};
