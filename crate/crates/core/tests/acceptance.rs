//! Acceptance criteria, one line each. Run with
//! `cargo test -p fbmlab --test acceptance`; extra arguments `1 3 10` select
//! criteria by number.

use std::time::{Duration, Instant};

use fbmlab::persistence::{
    bundled_event_experiments, ratio_stability, reflection_check, run_preset, Preset, PresetParams, PsiModel,
};
use fbmlab::rng::derive_seed;
use fbmlab::verify::{run_suite, Suite, SuiteReport, VerifyOptions};
use fbmlab::Result;

const SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn suite_outcome(rep: &SuiteReport, elapsed: Duration, limit: Option<Duration>) -> Outcome {
    let slow = limit.is_some_and(|l| elapsed > l);
    let failed = rep.checks.iter().filter(|c| !c.passed).count();
    let mut detail = format!("{} checks, {failed} failed", rep.checks.len());
    if let Some(c) = rep.first_failure() {
        detail.push_str(&format!("; first: {} = {} (limit {})", c.name, c.value, c.limit));
    }
    if slow {
        detail.push_str(&format!("; over the {:?} budget", limit.unwrap()));
    }
    Outcome { passed: rep.passed && !slow, detail }
}

fn c1_duality() -> Result<Outcome> {
    let t = Instant::now();
    let rep = run_suite(Suite::Duality, &VerifyOptions::default())?;
    let mut o = suite_outcome(&rep, t.elapsed(), Some(Duration::from_secs(60)));
    let c = &rep.checks[0];
    o.detail = format!("{} = {:e} (limit {:e}); {}", c.detail, c.value, c.limit, o.detail);
    Ok(o)
}

fn c2_lemma2() -> Result<Outcome> {
    let t = Instant::now();
    let rep = run_suite(Suite::Lemma2, &VerifyOptions::default())?;
    Ok(suite_outcome(&rep, t.elapsed(), Some(Duration::from_secs(60))))
}

fn c3_reflection() -> Result<Outcome> {
    let rc = reflection_check(&[1.0, 4.0, 16.0], 4096, 100_000, derive_seed(SEED, "reflection"))?;
    let rows: Vec<String> = rc
        .rows
        .iter()
        .map(|r| {
            format!(
                "T={}: |{:.5} - {:.5}| = {:.5} vs {:.5}",
                r.t,
                r.p_hat,
                r.exact,
                (r.p_hat - r.exact).abs(),
                3.0 * r.wilson_half_width + r.grid_bias_bound
            )
        })
        .collect();
    Ok(Outcome { passed: rc.passed, detail: rows.join("; ") })
}

fn c4_sinai() -> Result<Outcome> {
    let rep = run_preset(Preset::Sinai, &PresetParams::default(), SEED)?;
    let f = &rep.runs[0].fit;
    Ok(Outcome {
        passed: (f.theta_hat - 0.25).abs() <= 0.05,
        detail: format!("theta_hat = {:.4} +- {:.4} on {} points", f.theta_hat, f.stderr, f.n_used),
    })
}

fn c5_ifbm_bounds() -> Result<Outcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    let minus1 = run_preset(Preset::IfbmThetaMinus1Scan, &PresetParams::default(), SEED)?;
    for r in &minus1.runs {
        let h = r.kernel.hurst().expect("ifbm").value();
        let ok = r.fit.theta_hat <= (1.0 - h) + 0.05;
        passed &= ok;
        parts.push(format!("theta_-1({h}) = {:.4} <= {:.2}", r.fit.theta_hat, 1.05 - h));
    }
    let zero = run_preset(Preset::IfbmTheta0Scan, &PresetParams::default(), SEED)?;
    for r in &zero.runs {
        let h = r.kernel.hurst().expect("ifbm").value();
        let ok = r.fit.theta_hat > 3.0 * r.fit.stderr;
        passed &= ok;
        parts.push(format!(
            "theta_0({h}) = {:.4} +- {:.4} (H(1-H) = {:.4}, not gated)",
            r.fit.theta_hat,
            r.fit.stderr,
            h * (1.0 - h)
        ));
    }
    Ok(Outcome { passed, detail: parts.join("; ") })
}

fn c6_slepian() -> Result<Outcome> {
    let pair = run_preset(Preset::SlepianPair, &PresetParams::default(), SEED)?;
    let order: Vec<_> = pair.predicates.iter().filter(|p| p.name.starts_with("slepian_order")).collect();
    let mut passed = !order.is_empty() && order.iter().all(|p| p.passed);
    let mut parts: Vec<String> =
        order.iter().map(|p| format!("{}: {}", p.name, if p.passed { "ok" } else { "violated" })).collect();
    let sech = run_preset(Preset::SechEta, &PresetParams::default(), SEED)?;
    let f = &sech.runs[0].fit;
    let ok = 2.0 * f.theta_hat >= 0.2 - 3.0 * f.stderr;
    passed &= ok;
    parts.push(format!("2 theta_eta = {:.4} (stderr {:.4})", 2.0 * f.theta_hat, f.stderr));
    Ok(Outcome { passed, detail: parts.join("; ") })
}

fn c7_prop1() -> Result<Outcome> {
    let rep = run_suite(Suite::Prop1, &VerifyOptions::default())?;
    let instances = rep.checks.iter().filter(|c| c.name.starts_with("supermultiplicative_")).count();
    let held = rep.checks.iter().filter(|c| c.name.starts_with("supermultiplicative_") && c.passed).count();
    let mut o = suite_outcome(&rep, Duration::ZERO, None);
    o.passed &= held >= 6;
    o.detail = format!("{held} of {instances} parquets supermultiplicative; {}", o.detail);
    Ok(o)
}

fn c8_events() -> Result<Outcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for ex in bundled_event_experiments() {
        let rep = ex.run(20_000, derive_seed(SEED, ex.name))?;
        passed &= rep.inclusion_violations == 0;
        parts.push(format!("{}: {}", rep.name, rep.inclusion_violations));
    }
    Ok(Outcome { passed, detail: format!("trials with Z but not G: {}", parts.join(", ")) })
}

fn c9_samplers() -> Result<Outcome> {
    let rep = run_suite(Suite::Samplers, &VerifyOptions::default())?;
    let worst = rep.checks.iter().map(|c| c.value).fold(0.0, f64::max);
    let mut o = suite_outcome(&rep, Duration::ZERO, None);
    o.detail = format!("worst z = {worst:.3}; {}", o.detail);
    Ok(o)
}

fn c10_fbs_square() -> Result<Outcome> {
    let rep = run_preset(Preset::FbsSquare, &PresetParams::default(), SEED)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for r in &rep.runs {
        let s = ratio_stability(&r.ladder, PsiModel::LogTSq);
        passed &= s.variation <= 0.3;
        parts.push(format!("H={}: {:.1}%", r.kernel.hurst().expect("fbs").value(), 100.0 * s.variation));
    }
    Ok(Outcome { passed, detail: format!("variation over the top half: {}", parts.join(", ")) })
}

type Criterion = (u32, &'static str, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "duality identity", c1_duality),
        (2, "lemma 2 suite", c2_lemma2),
        (3, "brownian closed form", c3_reflection),
        (4, "sinai landmark", c4_sinai),
        (5, "integrated fbm exponent bounds", c5_ifbm_bounds),
        (6, "slepian pair and sech exponent", c6_slepian),
        (7, "supermultiplicativity oracle", c7_prop1),
        (8, "event ordering", c8_events),
        (9, "sampler exactness", c9_samplers),
        (10, "fbs scaling stability", c10_fbs_square),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.trim_start_matches('C').parse().ok()).collect();
    let mut failures = 0;
    for (k, name, run) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} C{k:<2} {name}: {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
