use std::path::{Path, PathBuf};

use fbmlab::persistence::{
    estimate_ladder, fit_counts, fit_exponent, interval_ladder, run_preset, sample_domain, shape_ladder, DomainSpec,
    Event, FitInput, Ladder, PresetParams, Shape,
};
use fbmlab::rng::GENERATOR_ID;
use fbmlab::samplers::empirical_cov_report;
use fbmlab::verify::{run_suite, VerifyOptions};
use fbmlab::{Family, Hurst, KernelSpec};
use serde_json::json;

use crate::config::{output_dir, CommandKind, ExportFormat, FitOptions, LadderConfig, RunConfig};
use crate::output::{self, FitRow, LadderRow, Manifest, Outputs, Versions};
use crate::{CliError, FitArgs, PersistArgs, ReportArgs, SampleArgs, VerifyArgs};

pub const DEFAULT_TRIALS: usize = 10_000;

pub struct Context {
    pub out: Option<PathBuf>,
    pub threads: usize,
}

struct Finished {
    outputs: Outputs,
    passed: bool,
    first_failure: Option<String>,
    summary: serde_json::Value,
    generator_id: String,
}

fn finish(ctx: &Context, cfg: &RunConfig, done: Finished) -> Result<(), CliError> {
    let Finished { mut outputs, passed, first_failure, summary, generator_id } = done;
    let (text, hash) = output::config_artifact(cfg)?;
    outputs.add("config.toml", text.into_bytes());
    let mut names = outputs.names();
    names.push("run.json".into());
    let manifest = Manifest {
        command: cfg.command.to_string(),
        argv: std::env::args().collect(),
        config_sha256: hash,
        seed: cfg.seed,
        threads: ctx.threads,
        versions: Versions::current(),
        generator_id,
        passed,
        exit_code: if passed { 0 } else { 1 },
        outputs: names,
        summary,
    };
    outputs.add("run.json", output::json(&manifest)?);
    let dir = output_dir(ctx.out.as_deref(), cfg);
    outputs.commit(&dir)?;
    println!("outputs in {}", dir.display());
    if passed {
        Ok(())
    } else {
        Err(CliError::Assertion(first_failure.unwrap_or_else(|| "run did not pass".into())))
    }
}

fn kernel_from_flags(family: Family, hurst: Option<f64>, scale: Option<f64>) -> Result<KernelSpec, CliError> {
    let h = hurst.map(Hurst::new).transpose()?;
    Ok(KernelSpec::new(family, h, scale)?)
}

fn mark(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn verify(ctx: &Context, a: &VerifyArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load_for(a.config.as_deref(), CommandKind::Verify)?;
    if a.target.is_some() {
        cfg.target = a.target;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.n_trials.is_some() {
        cfg.budgets.n_trials = a.n_trials;
    }
    if a.n_qmc.is_some() {
        cfg.budgets.n_qmc = a.n_qmc;
    }
    cfg.validate()?;
    let target = cfg.target.expect("validated");
    let d = VerifyOptions::default();
    let opts = VerifyOptions {
        n_trials: cfg.budgets.n_trials.unwrap_or(d.n_trials),
        n_qmc: cfg.budgets.n_qmc.unwrap_or(d.n_qmc),
        seed: cfg.seed,
        ..d
    };
    let rep = run_suite(target, &opts)?;
    for c in &rep.checks {
        println!("{} {}: {} (limit {}) {}", mark(c.passed), c.name, c.value, c.limit, c.detail);
    }
    let failed = rep.checks.iter().filter(|c| !c.passed).count();
    println!("{target}: {} of {} checks passed", rep.checks.len() - failed, rep.checks.len());
    let first_failure =
        rep.first_failure().map(|c| format!("{}: value {} vs limit {} ({})", c.name, c.value, c.limit, c.detail));
    let mut outputs = Outputs::default();
    outputs.add("verify.json", output::json(&rep)?);
    finish(
        ctx,
        &cfg,
        Finished {
            outputs,
            passed: rep.passed,
            first_failure,
            summary: json!({ "suite": target, "checks": rep.checks.len(), "failed": failed }),
            generator_id: GENERATOR_ID.to_string(),
        },
    )
}

fn apply_preset_flags(cfg: &mut RunConfig, a: &PersistArgs) {
    let p = cfg.params.get_or_insert_with(PresetParams::default);
    if a.hurst.is_some() {
        p.hurst = a.hurst.clone();
    }
    if a.n_trials.is_some() {
        p.n_trials = a.n_trials;
    }
    if a.ladder.is_some() {
        p.ladder = a.ladder.clone();
    }
    if a.n_grid.is_some() {
        p.n_grid = a.n_grid;
    }
    if *p == PresetParams::default() {
        cfg.params = None;
    }
}

fn apply_ladder_flags(cfg: &mut RunConfig, a: &PersistArgs) -> Result<(), CliError> {
    if let Some(fam) = a.kernel {
        let h = match a.hurst.as_deref() {
            None => None,
            Some([h]) => Some(*h),
            Some(_) => return Err(CliError::Config("an ad-hoc ladder takes a single --H".into())),
        };
        cfg.kernel = Some(kernel_from_flags(fam, h, a.scale)?);
    }
    if cfg.ladder.is_none() {
        if let (Some(k), Some(t)) = (&cfg.kernel, &a.ladder) {
            let (shape, n_grid) =
                if k.dim() == 1 { (Shape::Interval { lo: 0.0, hi: 1.0 }, 8) } else { (Shape::Square, 2) };
            cfg.ladder = Some(LadderConfig {
                shape,
                t: t.clone(),
                n_grid,
                level: 1.0,
                exclude: None,
                event: Event::SupBelow,
                psi: fbmlab::persistence::PsiModel::LogT,
            });
        }
    }
    if let Some(l) = cfg.ladder.as_mut() {
        if let Some(t) = &a.ladder {
            l.t = t.clone();
        }
        if let Some(n) = a.n_grid {
            l.n_grid = n;
        }
        if let Some(v) = a.level {
            l.level = v;
        }
        if let Some(p) = a.psi {
            l.psi = p;
        }
        if let Some(e) = a.event {
            l.event = e;
        }
    }
    if a.n_trials.is_some() {
        cfg.budgets.n_trials = a.n_trials;
    }
    Ok(())
}

pub fn persist(ctx: &Context, a: &PersistArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load_for(a.config.as_deref(), CommandKind::Persist)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.preset.is_some() {
        cfg.preset = a.preset;
    }
    if cfg.preset.is_some() {
        if a.kernel.is_some() || a.level.is_some() || a.psi.is_some() || a.event.is_some() || a.scale.is_some() {
            return Err(CliError::Config(
                "--kernel, --scale, --level, --psi and --event apply to ad-hoc ladders only".into(),
            ));
        }
        apply_preset_flags(&mut cfg, a);
    } else {
        apply_ladder_flags(&mut cfg, a)?;
    }
    cfg.validate()?;
    if let Some(preset) = cfg.preset {
        let params = cfg.params.clone().unwrap_or_default();
        let rep = run_preset(preset, &params, cfg.seed)?;
        let mut rows = Vec::new();
        let mut fits = Vec::new();
        for r in &rep.runs {
            println!(
                "{}: theta_hat = {} +- {} ({:?}, {} points)",
                r.label, r.fit.theta_hat, r.fit.stderr, r.fit.psi, r.fit.n_used
            );
            rows.extend(r.ladder.iter().map(|e| LadderRow::new(&r.label, r.fit.psi, e)));
            fits.push(FitRow::new(&r.label, r.event, &r.fit));
        }
        for p in &rep.predicates {
            println!("{} {}: {}", mark(p.passed), p.name, p.detail);
        }
        for n in &rep.notes {
            println!("note: {n}");
        }
        let first_failure = rep.predicates.iter().find(|p| !p.passed).map(|p| format!("{}: {}", p.name, p.detail));
        let generator_id = rep
            .runs
            .first()
            .and_then(|r| r.ladder.first())
            .map_or(GENERATOR_ID.to_string(), |e| e.generator_id.clone());
        let mut outputs = Outputs::default();
        outputs.add("ladder.csv", output::ladder_csv(&rows)?);
        outputs.add("fits.csv", output::fits_csv(&fits)?);
        outputs.add("report.json", output::json(&rep)?);
        let summary = json!({ "preset": preset, "fits": fits, "predicates": rep.predicates });
        return finish(ctx, &cfg, Finished { outputs, passed: rep.passed, first_failure, summary, generator_id });
    }

    let kernel = cfg.kernel.expect("validated");
    let l = cfg.ladder.clone().expect("validated");
    let n_trials = cfg.budgets.n_trials.unwrap_or(DEFAULT_TRIALS);
    let points = match l.shape {
        Shape::Interval { lo, hi } => interval_ladder(lo, hi, &l.t, l.n_grid, l.level, l.exclude)?,
        shape => shape_ladder(shape, &l.t, l.n_grid, l.level, l.exclude)?,
    };
    let ladder = Ladder::new(kernel, points)?;
    log::info!("{} points on the union grid, sampler {}", ladder.grid().len(), ladder.method());
    let est = estimate_ladder(&ladder, &[l.event], n_trials, cfg.seed)?;
    let ladder_est = est.get(l.event).expect("requested");
    let label = kernel.to_string();
    let rows: Vec<LadderRow> = ladder_est.iter().map(|e| LadderRow::new(&label, l.psi, e)).collect();
    for r in &rows {
        println!("T = {}: p_hat = {} [{}, {}] ({} / {})", r.t, r.p_hat, r.ci_lo, r.ci_hi, r.n_survive, r.n_trials);
    }
    let fit = fit_exponent(ladder_est, l.psi)?;
    println!("{label}: theta_hat = {} +- {} ({:?}, {} points)", fit.theta_hat, fit.stderr, fit.psi, fit.n_used);
    let fits = vec![FitRow::new(&label, l.event, &fit)];
    let mut outputs = Outputs::default();
    outputs.add("ladder.csv", output::ladder_csv(&rows)?);
    outputs.add("fits.csv", output::fits_csv(&fits)?);
    let summary = json!({ "method": est.method, "fits": fits, "inclusion_violations": est.inclusion_violations });
    let generator_id = ladder_est[0].generator_id.clone();
    finish(ctx, &cfg, Finished { outputs, passed: true, first_failure: None, summary, generator_id })
}

pub fn sample(ctx: &Context, a: &SampleArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load_for(a.config.as_deref(), CommandKind::Sample)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(fam) = a.kernel {
        cfg.kernel = Some(kernel_from_flags(fam, a.hurst, a.scale)?);
    } else if a.hurst.is_some() || a.scale.is_some() {
        return Err(CliError::Config("--H and --scale need --kernel".into()));
    }
    if a.n_trials.is_some() {
        cfg.budgets.n_trials = a.n_trials;
    }
    cfg.sample.check_cov |= a.check_cov;
    if a.csv {
        cfg.sample.format = ExportFormat::Csv;
    }
    if let Some(k) = &cfg.kernel {
        let mut d = match cfg.domain {
            Some(d) => d,
            None if k.dim() == 1 => DomainSpec::new(Shape::Interval { lo: 0.0, hi: 1.0 }, 1.0, 16, None)?,
            None => DomainSpec::new(Shape::Square, 2.0, 2, None)?,
        };
        if let Some(t) = a.t {
            d.t_scale = t;
        }
        if let Some(n) = a.n_grid {
            d.n_grid = n;
        }
        cfg.domain = Some(d);
    }
    cfg.validate()?;
    let kernel = cfg.kernel.expect("validated");
    let domain = cfg.domain.expect("set with the kernel");
    let n_trials = cfg.budgets.n_trials.unwrap_or(DEFAULT_TRIALS);
    let ens = sample_domain(kernel, &domain, n_trials, cfg.seed)?;
    println!("{} trials of {kernel} on {} points of {domain} ({})", ens.n_trials, ens.n_points(), ens.generator_id);

    let mut outputs = Outputs::default();
    let io = |e: fbmlab::Error| CliError::Other(e.to_string());
    match cfg.sample.format {
        ExportFormat::Binary => {
            let mut data = Vec::with_capacity(8 * ens.values.len());
            ens.encode_binary(&mut data).map_err(io)?;
            outputs.add("ensemble.bin", data);
            outputs.add("ensemble.bin.json", output::json(&ens.sidecar("ensemble.bin"))?);
        }
        ExportFormat::Csv => {
            let mut data = Vec::new();
            ens.encode_csv(&mut data).map_err(io)?;
            outputs.add("ensemble.csv", data);
            outputs.add("ensemble.csv.json", output::json(&ens.sidecar("ensemble.csv"))?);
        }
    }
    let mut passed = true;
    let mut first_failure = None;
    let mut summary =
        json!({ "kernel": kernel, "domain": domain, "n_trials": ens.n_trials, "n_points": ens.n_points() });
    if cfg.sample.check_cov {
        let rep = empirical_cov_report(&ens)?;
        println!(
            "{} covariance: worst z = {} at {:?}, max |dev| = {}",
            mark(rep.passed),
            rep.worst_z,
            rep.worst_entry,
            rep.max_abs_dev
        );
        passed = rep.passed;
        if !passed {
            first_failure = Some(format!("empirical covariance z = {} at {:?}", rep.worst_z, rep.worst_entry));
        }
        summary["cov_report"] = serde_json::to_value(&rep).map_err(|e| CliError::Other(e.to_string()))?;
        outputs.add("cov_report.json", output::json(&rep)?);
    }
    let generator_id = ens.generator_id.clone();
    finish(ctx, &cfg, Finished { outputs, passed, first_failure, summary, generator_id })
}

pub fn fit(ctx: &Context, a: &FitArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load_for(a.config.as_deref(), CommandKind::Fit)?;
    if let Some(input) = &a.input {
        let psi = cfg.fit.as_ref().map_or(fbmlab::persistence::PsiModel::LogT, |f| f.psi);
        cfg.fit = Some(FitOptions { input: input.clone(), psi });
    }
    let explicit_psi = a.psi.or(a.config.as_ref().and_then(|_| cfg.fit.as_ref().map(|f| f.psi)));
    if let (Some(p), Some(f)) = (a.psi, cfg.fit.as_mut()) {
        f.psi = p;
    }
    cfg.validate()?;
    let input = cfg.fit.as_ref().expect("validated").input.clone();
    let rows = output::read_ladder_csv(&input)?;
    if rows.is_empty() {
        return Err(CliError::Config(format!("{} has no ladder rows", input.display())));
    }
    let mut groups: Vec<((String, Event), Vec<&LadderRow>)> = Vec::new();
    for r in &rows {
        let key = (r.label.clone(), r.event);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut fits = Vec::new();
    for ((label, event), g) in &groups {
        let psi = explicit_psi.unwrap_or(g[0].psi_model);
        let pts: Vec<FitInput> =
            g.iter().map(|r| FitInput { t: r.t, n_survive: r.n_survive, n_trials: r.n_trials }).collect();
        let f = fit_counts(&pts, psi)?;
        println!("{label} {event:?}: theta_hat = {} +- {} ({psi:?}, {} points)", f.theta_hat, f.stderr, f.n_used);
        fits.push(FitRow::new(label, *event, &f));
    }
    let mut outputs = Outputs::default();
    outputs.add("fits.csv", output::fits_csv(&fits)?);
    let summary = json!({ "input": input, "fits": fits });
    finish(
        ctx,
        &cfg,
        Finished { outputs, passed: true, first_failure: None, summary, generator_id: GENERATOR_ID.to_string() },
    )
}

/// Prints a finished run; writes nothing.
pub fn report(ctx: &Context, a: &ReportArgs) -> Result<(), CliError> {
    let dir = match &a.dir {
        Some(d) => d.clone(),
        None => output_dir(ctx.out.as_deref(), &RunConfig::new(CommandKind::Report)),
    };
    let read = |name: &str| -> Result<String, CliError> {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
    };
    let manifest: Manifest =
        serde_json::from_str(&read("run.json")?).map_err(|e| CliError::Config(format!("run.json: {e}")))?;
    println!("command    {}", manifest.command);
    println!("seed       {}", manifest.seed);
    println!("threads    {}", manifest.threads);
    println!("generator  {}", manifest.generator_id);
    println!(
        "versions   fbmlab {} / cli {} on {}-{}",
        manifest.versions.fbmlab, manifest.versions.fbmlab_cli, manifest.versions.os, manifest.versions.arch
    );
    let hash_ok = read("config.toml").map(|t| output::sha256_hex(t.as_bytes()) == manifest.config_sha256);
    match hash_ok {
        Ok(true) => println!("config     {} (matches config.toml)", manifest.config_sha256),
        Ok(false) => println!("config     {} (config.toml was modified)", manifest.config_sha256),
        Err(_) => println!("config     {} (config.toml missing)", manifest.config_sha256),
    }
    println!("status     {}", mark(manifest.passed));
    let ladder = dir.join("ladder.csv");
    if ladder.exists() {
        print_ladder(&ladder)?;
    }
    let fits = dir.join("fits.csv");
    if fits.exists() {
        let mut r = csv::Reader::from_path(&fits).map_err(|e| CliError::Config(e.to_string()))?;
        println!();
        println!("{:<32} {:<16} {:>12} {:>12} {:>6}", "label", "psi", "theta_hat", "stderr", "used");
        for row in r.deserialize::<FitRow>() {
            let f = row.map_err(|e| CliError::Config(format!("fits.csv: {e}")))?;
            println!(
                "{:<32} {:<16} {:>12.6} {:>12.6} {:>6}",
                f.label,
                format!("{:?}", f.psi_model),
                f.theta_hat,
                f.stderr,
                f.n_used
            );
        }
    }
    Ok(())
}

fn print_ladder(path: &Path) -> Result<(), CliError> {
    let rows = output::read_ladder_csv(path)?;
    println!();
    println!("{:<32} {:>10} {:>12} {:>12} {:>12} {:>10}", "label", "T", "p_hat", "ci_lo", "ci_hi", "survivors");
    for r in rows {
        println!(
            "{:<32} {:>10} {:>12.4e} {:>12.4e} {:>12.4e} {:>10}",
            r.label, r.t, r.p_hat, r.ci_lo, r.ci_hi, r.n_survive
        );
    }
    Ok(())
}
