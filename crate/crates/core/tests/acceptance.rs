//! Acceptance run: one pass/fail line per criterion. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use distlab::fixtures::DEFAULT_SEED;
use distlab::verify::{self, ClaimResult};
use distlab::Result;

struct Outcome {
    pass: bool,
    summary: String,
}

fn claims(rs: &[ClaimResult]) -> Outcome {
    let pass = rs.iter().all(|r| r.holds);
    let summary = rs
        .iter()
        .map(|r| format!("{} {}/{} violations", r.claim, r.violations, r.checked))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome { pass, summary }
}

fn run(no: u32, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let (pass, summary) = match out {
        Ok(o) => {
            let slow = limit.is_some_and(|l| took > l);
            let mut s = o.summary;
            if slow {
                s.push_str(&format!("; over the {:?} limit", limit.unwrap()));
            }
            (o.pass && !slow, s)
        }
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {no:>2} {}: {title} [{:.1}s] {summary}", if pass { "PASS" } else { "FAIL" }, took.as_secs_f64());
    pass
}

fn reports_4_6_9(seed: u64) -> Result<String> {
    let (_, owp) = verify::owp_completeness_claim(500, seed)?;
    let (_, ag) = verify::agnostic_claim(200, seed)?;
    let (_, prg) = verify::prg_breaker_claim(500, 16, seed)?;
    Ok(serde_json::to_string(&serde_json::json!({ "owp": owp, "agnostic": ag, "prg": prg })).unwrap())
}

fn main() {
    let seed = DEFAULT_SEED;
    let secs = Duration::from_secs;
    let mut first_reports = String::new();
    let results = [
        run(1, "SD/KL axioms on 1000 random pairs", Some(secs(10)), || {
            Ok(claims(&[verify::sd_axioms(1000, seed)?, verify::kl_axioms(1000, seed)?]))
        }),
        run(2, "tensor amplification on 200 pairs", Some(secs(60)), || {
            Ok(claims(&[verify::probabilistic_argument(200, seed)?]))
        }),
        run(3, "likelihood-test mass exceeds the SD threshold", None, || {
            Ok(claims(&[verify::sd_threshold_claim(200, seed)?]))
        }),
        run(4, "puzzle completeness on biased k=4, t=64", Some(secs(30)), || {
            let (c, r) = verify::owp_completeness_claim(500, seed)?;
            Ok(Outcome { pass: c.holds, summary: format!("rate {} over {} trials (need 0.99)", r.rate.rate, r.rate.trials) })
        }),
        run(5, "distinguisher inequality, exact and noisy", None, || {
            let s = verify::distinguisher_scan(&verify::SuiteConfig::default())?;
            Ok(claims(&[s.np_distinguish(), s.distinguish_well(), s.not_fooled()]))
        }),
        run(6, "agnostic SD learner on 5 fixtures, 200 runs", Some(secs(300)), || {
            let (c, rows) = verify::agnostic_claim(200, seed)?;
            let summary = rows
                .iter()
                .map(|r| format!("{} {:.3}", r.fixture, r.within.rate))
                .collect::<Vec<_>>()
                .join(", ");
            Ok(Outcome { pass: c.holds, summary: format!("within-bound fraction: {summary} (need 0.9)") })
        }),
        run(7, "KL/likelihood identity and smoothing ratio", None, || {
            Ok(claims(&[verify::kl_identity()?, verify::kl_learner(seed)?, verify::smoothing_ratio()?]))
        }),
        run(8, "postselection decisions on 50 promise + 10 gap machines", None, || {
            Ok(claims(&[verify::postselect_decision(seed)?, verify::gadget_monotone(seed)?]))
        }),
        run(9, "generator breaker advantage", None, || {
            let (c, r) = verify::prg_breaker_claim(500, 16, seed)?;
            Ok(Outcome { pass: c.holds, summary: format!("advantage {:.3} (need 0.9)", r.advantage) })
        }),
        run(10, "reports of criteria 4, 6, 9 reproduce byte for byte", None, || {
            first_reports = reports_4_6_9(seed)?;
            let again = reports_4_6_9(seed)?;
            Ok(Outcome { pass: first_reports == again, summary: format!("{} bytes compared", again.len()) })
        }),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
