//! Run configuration: one TOML file per run, with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use fbmlab::persistence::{DomainSpec, Event, Exclude, Preset, PresetParams, PsiModel, Shape};
use fbmlab::verify::Suite;
use fbmlab::KernelSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Verify,
    Persist,
    Sample,
    Fit,
    Report,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandKind::Verify => "verify",
            CommandKind::Persist => "persist",
            CommandKind::Sample => "sample",
            CommandKind::Fit => "fit",
            CommandKind::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qmc: Option<usize>,
}

/// An ad-hoc ladder: the same base shape scaled by each `T`.
///
/// For intervals `n_grid` is steps per unit time, so every rung shares one
/// step; for sheets it is the resolution passed to the shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub shape: Shape,
    pub t: Vec<f64>,
    pub n_grid: usize,
    #[serde(default)]
    pub level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude: Option<Exclude>,
    #[serde(default = "default_event")]
    pub event: Event,
    #[serde(default = "default_psi")]
    pub psi: PsiModel,
}

fn default_event() -> Event {
    Event::SupBelow
}

fn default_psi() -> PsiModel {
    PsiModel::LogT
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Binary,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleOptions {
    #[serde(default)]
    pub check_cov: bool,
    #[serde(default)]
    pub format: ExportFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    pub input: PathBuf,
    #[serde(default = "default_psi")]
    pub psi: PsiModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub command: CommandKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Suite for `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PresetParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderConfig>,
    /// Sampling domain for `sample`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub budgets: Budgets,
    #[serde(default, skip_serializing_if = "is_default")]
    pub sample: SampleOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitOptions>,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        RunConfig {
            format_version: FORMAT_VERSION,
            command,
            seed: DEFAULT_SEED,
            output_dir: None,
            target: None,
            preset: None,
            params: None,
            kernel: None,
            ladder: None,
            domain: None,
            budgets: Budgets::default(),
            sample: SampleOptions::default(),
            fit: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                cfg.format_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The file `load` reads back into an equal config.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("config cannot be written as TOML: {e}")))
    }

    /// Load `path` if given, else start from defaults; either way the result
    /// must be for `command`.
    pub fn load_for(path: Option<&Path>, command: CommandKind) -> Result<Self, CliError> {
        let cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::new(command),
        };
        if cfg.command != command {
            return Err(CliError::Config(format!("config is for `{}`, not `{command}`", cfg.command)));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg_err = |m: String| Err(CliError::Config(m));
        if self.seed > i64::MAX as u64 {
            return cfg_err(format!("seed {} does not fit a TOML integer", self.seed));
        }
        if let Some(d) = &self.domain {
            d.validate().map_err(CliError::from)?;
        }
        if let Some(l) = &self.ladder {
            if l.t.is_empty() {
                return cfg_err("ladder.t is empty".into());
            }
        }
        match self.command {
            CommandKind::Verify if self.target.is_none() => cfg_err("verify needs a target suite".into()),
            CommandKind::Persist => match (&self.preset, &self.kernel, &self.ladder) {
                (Some(_), None, None) => Ok(()),
                (None, Some(_), Some(_)) if self.params.is_none() => Ok(()),
                (Some(_), _, _) => cfg_err("persist takes either a preset or a kernel with a ladder, not both".into()),
                _ => cfg_err("persist needs a preset, or a kernel and a ladder".into()),
            },
            CommandKind::Sample if self.kernel.is_none() => cfg_err("sample needs a kernel".into()),
            CommandKind::Fit if self.fit.is_none() => cfg_err("fit needs an input ladder".into()),
            _ => Ok(()),
        }
    }
}

/// Output directory: the flag, then the config, then `FBMLAB_OUT`, then `./fbmlab-out`.
pub fn output_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os("FBMLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fbmlab-out"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fbmlab::Hurst;

    fn full() -> RunConfig {
        let mut c = RunConfig::new(CommandKind::Persist);
        c.seed = 77;
        c.output_dir = Some("runs/a".into());
        c.kernel = Some(KernelSpec::ifbm(Hurst::new(0.3).unwrap()));
        c.ladder = Some(LadderConfig {
            shape: Shape::Interval { lo: -1.0, hi: 1.0 },
            t: vec![16.0, 32.0, 64.0, 128.0],
            n_grid: 2,
            level: 0.1,
            exclude: Some(Exclude::Interval { lo: -1.0, hi: 1.0 }),
            event: Event::NegOutsideU0,
            psi: PsiModel::LogT,
        });
        c.budgets.n_trials = Some(12345);
        c
    }

    #[test]
    fn round_trips_through_toml() {
        for c in [full(), RunConfig::new(CommandKind::Report)] {
            let text = c.to_toml().unwrap();
            assert_eq!(RunConfig::parse(&text).unwrap(), c, "{text}");
        }
        let mut p = RunConfig::new(CommandKind::Persist);
        p.preset = Some(Preset::Sinai);
        p.params = Some(PresetParams { hurst: Some(vec![0.5]), n_trials: Some(2000), ladder: None, n_grid: Some(4) });
        assert_eq!(RunConfig::parse(&p.to_toml().unwrap()).unwrap(), p);
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let ok = "format_version = 1\ncommand = \"verify\"\ntarget = \"kernels\"\n";
        assert!(RunConfig::parse(ok).is_ok());
        assert!(RunConfig::parse(&format!("{ok}colour = 3\n")).is_err());
        assert!(RunConfig::parse("format_version = 2\ncommand = \"verify\"\n").is_err());
        assert!(RunConfig::parse("format_version = 1\ncommand = \"verify\"\n[budgets]\nn_trails = 5\n").is_err());
    }

    #[test]
    fn persist_needs_exactly_one_source() {
        let mut c = full();
        assert!(c.validate().is_ok());
        c.preset = Some(Preset::Sinai);
        assert!(c.validate().is_err());
        c.kernel = None;
        c.ladder = None;
        assert!(c.validate().is_ok());
    }
}
