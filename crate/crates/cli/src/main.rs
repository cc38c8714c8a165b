//! `distlab`: batch front-end for the distlab experiments.
//!
//! Every report is a JSON object `{"tool", "version", "config", "result"}`
//! (or a flattened CSV table). The seed defaults to
//! [`distlab::fixtures::DEFAULT_SEED`] and can be overridden by the
//! `DISTLAB_SEED` environment variable or `--seed`.
//!
//! Exit codes: 0 success, 1 claim or bound failure, 2 usage or input error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use distlab::dist::{kl_divergence, Distribution};
use distlab::family::{dist_vector, draw_samples, is_fully_supported, min_prob_exponent, CircuitFamily, Family, SampleSet};
use distlab::fixtures::DEFAULT_SEED;
use distlab::instance::{LearnParams, LearningInstance};
use distlab::learner::{agnostic_hypothesis, learn_kl, learn_proper_avg_benchmark, learn_report, learn_sd_agnostic, DisMode};
use distlab::mle::eval_mle;
use distlab::owpuzz::{owp_best_attack, owp_completeness};
use distlab::reductions::mle_learner;
use distlab::report::{TOOL_NAME, TOOL_VERSION};
use distlab::rng::{derive_seed, stream};
use distlab::verify::{run_suite, SuiteConfig};
use distlab::{BitString, Error};

#[derive(Parser, Debug)]
#[command(name = "distlab", version, about = "Exact-oracle distribution-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a family circuit and print its output distributions.
    Compile {
        #[arg(long)]
        family: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Draw samples of D(param) in the sample-file format.
    Sample {
        #[arg(long)]
        family: PathBuf,
        /// Parameter bits, MSB first.
        #[arg(long)]
        param: String,
        #[arg(long)]
        t: u64,
        #[arg(long, env = "DISTLAB_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a learner.
    Learn {
        #[arg(long, value_enum, default_value_t = Mode::Sd)]
        mode: Mode,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        samples: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        trials: Option<u64>,
        /// Use the exact estimator inside the distinguisher.
        #[arg(long)]
        exact_dis: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Puzzle experiment: honest completeness and the best attack.
    Owpuzz {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the claim suite on the built-in corpora.
    Verify {
        /// Claim ids to run; repeat or comma-separate. Default: all.
        #[arg(long, value_delimiter = ',')]
        claim: Vec<String>,
        /// Overrides the trial and run counts of the Monte Carlo claims.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, env = "DISTLAB_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    #[arg(long)]
    eps: Option<u64>,
    #[arg(long)]
    delta: Option<u64>,
    #[arg(long)]
    t: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Sd,
    Kl,
    Proper,
    Mle,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Fault {
    BrokenDis,
}

/// An input or usage problem; reported on stderr with exit code 2.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

struct Outcome {
    config: Value,
    result: Value,
    ok: bool,
    common: Common,
}

const DEFAULT_EPS: u64 = 4;

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_family(path: &PathBuf) -> Result<CircuitFamily, Failure> {
    CircuitFamily::from_json(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_instance(path: &PathBuf, p: ParamArgs) -> Result<LearningInstance, Failure> {
    let mut inst =
        LearningInstance::from_json(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    inst.params = LearnParams::new(
        p.eps.unwrap_or(inst.params.eps),
        p.delta.unwrap_or(inst.params.delta),
        p.t.unwrap_or(inst.params.t),
    )?;
    Ok(inst)
}

fn load_samples(path: &PathBuf) -> Result<SampleSet, Failure> {
    Ok(SampleSet::read(path)?)
}

fn path_str(p: &Option<PathBuf>) -> Value {
    p.as_ref().map_or(Value::Null, |p| p.display().to_string().into())
}

fn compile(family: PathBuf, common: Common) -> Result<Outcome, Failure> {
    let fam = load_family(&family)?;
    let k = fam.param_bits();
    let dists: Vec<Value> = BitString::all(k)
        .map(|z| Ok(json!({ "param": z, "distribution": dist_vector(&fam, z)? })))
        .collect::<Result<_, Error>>()?;
    Ok(Outcome {
        config: json!({ "subcommand": "compile", "family": family.display().to_string() }),
        result: json!({
            "param_bits": k,
            "rand_bits": fam.rand_bits(),
            "out_bits": fam.out_bits(),
            "gates": fam.circuit().desc().gates.len(),
            "fully_supported": is_fully_supported(&fam),
            "min_prob_exponent": min_prob_exponent(&fam),
            "distributions": dists,
        }),
        ok: true,
        common,
    })
}

fn learn(
    mode: Mode,
    family: Option<PathBuf>,
    instance: Option<PathBuf>,
    samples: Option<PathBuf>,
    p: ParamArgs,
    trials: Option<u64>,
    exact_dis: bool,
    common: Common,
) -> Result<Outcome, Failure> {
    let seed = common.seed;
    let dis_mode = if exact_dis { DisMode::Exact } else { DisMode::default() };
    let mut config = json!({
        "subcommand": "learn",
        "mode": format!("{mode:?}").to_lowercase(),
        "family": path_str(&family),
        "instance": path_str(&instance),
        "samples": path_str(&samples),
        "seed": seed,
    });
    if mode == Mode::Sd {
        config["dis"] = json!(dis_mode);
    }
    let inst = instance.as_ref().map(|i| load_instance(i, p)).transpose()?;
    let fam = match (&inst, &family) {
        (Some(i), None) => i.family.clone(),
        (None, Some(f)) => load_family(f)?,
        _ => return Err(Failure("give exactly one of --family and --instance".into())),
    };
    let (result, ok) = match mode {
        Mode::Proper => {
            let inst = inst.ok_or_else(|| Failure("--mode proper needs --instance".into()))?;
            let trials = trials.unwrap_or(200);
            config["params"] = json!(inst.params);
            config["trials"] = trials.into();
            let learner = mle_learner(&inst.family);
            let rate = learn_proper_avg_benchmark(&inst, &learner, trials, seed)?;
            let required = 1.0 - 1.0 / inst.params.delta as f64;
            (json!({ "learner": "maximum_likelihood", "success": rate, "required": required }), rate.rate >= required)
        }
        Mode::Sd if samples.is_none() => {
            let inst = inst.ok_or_else(|| Failure("--mode sd needs --samples or an instance with a target".into()))?;
            let target = inst.target.clone().ok_or_else(|| Failure("the instance names no target".into()))?;
            config["params"] = json!(inst.params);
            let s = derive_seed(seed, stream::TARGET, 0);
            let drawn = SampleSet { samples: target.sample(inst.params.t as usize, s, stream::TARGET), seed: s };
            let r = learn_sd_agnostic(&inst.family, &target, &drawn, &inst.params, dis_mode, seed)?;
            let ok = r.within_bound;
            (json!(r), ok)
        }
        Mode::Sd => {
            let s = load_samples(samples.as_ref().unwrap())?;
            let eps = p.eps.or(inst.as_ref().map(|i| i.params.eps)).unwrap_or(DEFAULT_EPS);
            config["params"] = json!({ "eps": eps, "t": s.t() });
            let h = agnostic_hypothesis(&fam, &s, eps, dis_mode, seed)?;
            // scored against the empirical distribution of the samples
            let emp = Distribution::empirical(fam.out_bits(), &s.samples)?;
            let r = learn_report(&fam, &emp, h, eps)?;
            let ok = r.within_bound;
            (json!({ "scored_against": "empirical", "report": r }), ok)
        }
        Mode::Kl => {
            let s = load_samples(samples.as_ref().ok_or_else(|| Failure("--mode kl needs --samples".into()))?)?;
            let eps = p.eps.unwrap_or(DEFAULT_EPS);
            config["params"] = json!({ "eps": eps, "t": s.t() });
            let h = learn_kl(&fam, &s, eps)?;
            let emp = Distribution::empirical(fam.out_bits(), &s.samples)?;
            let kl = kl_divergence(&emp, &dist_vector(&fam, h)?)?;
            (json!({ "h": h, "empirical_kl": kl, "log_base": 2 }), true)
        }
        Mode::Mle => {
            let s = load_samples(samples.as_ref().ok_or_else(|| Failure("--mode mle needs --samples".into()))?)?;
            config["params"] = json!({ "t": s.t() });
            (json!(eval_mle(&fam, &s)?), true)
        }
    };
    Ok(Outcome { config, result, ok, common })
}

fn owpuzz(instance: PathBuf, p: ParamArgs, trials: u64, common: Common) -> Result<Outcome, Failure> {
    let inst = load_instance(&instance, p)?;
    let seed = common.seed;
    let completeness = owp_completeness(&inst, trials, seed)?;
    let attack = owp_best_attack(&inst, Some((trials, derive_seed(seed, stream::TRIAL, 1))))?;
    Ok(Outcome {
        config: json!({
            "subcommand": "owpuzz",
            "instance": instance.display().to_string(),
            "params": inst.params,
            "trials": trials,
            "seed": seed,
        }),
        result: json!({ "t": inst.params.t, "completeness": completeness, "best_attack": attack }),
        ok: true,
        common,
    })
}

fn verify(
    claim: Vec<String>,
    trials: Option<u64>,
    reps: Option<u64>,
    fault: Option<Fault>,
    common: Common,
) -> Result<Outcome, Failure> {
    let mut cfg = SuiteConfig { seed: common.seed, broken_dis: fault == Some(Fault::BrokenDis), ..SuiteConfig::default() };
    if let Some(n) = trials {
        cfg.owp_trials = n;
        cfg.agnostic_runs = n;
        cfg.breaker_trials = n;
    }
    if let Some(r) = reps {
        cfg.breaker_reps = r;
    }
    let results = run_suite(&claim, &cfg)?;
    let ok = results.iter().all(|r| r.holds);
    let failed: Vec<&str> = results.iter().filter(|r| !r.holds).map(|r| r.claim.as_str()).collect();
    Ok(Outcome {
        config: json!({ "subcommand": "verify", "claims": claim, "suite": cfg }),
        result: json!({ "all_hold": ok, "failed": failed, "claims": results }),
        ok,
        common,
    })
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }, v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).unwrap() + "\n",
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", report, &mut rows);
            let mut s = String::from("field,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{},{}\n", csv_escape(&k), csv_escape(&v)));
            }
            s
        }
    }
}

fn emit(o: Outcome) -> Result<bool, Failure> {
    let mut config = o.config;
    config["seed"] = o.common.seed.into();
    config["format"] = format!("{:?}", o.common.format).to_lowercase().into();
    config["out"] = path_str(&o.common.out);
    let report = json!({ "tool": TOOL_NAME, "version": TOOL_VERSION, "config": config, "result": o.result });
    let text = render(&report, o.common.format);
    match &o.common.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(o.ok)
}

fn sample(family: PathBuf, param: String, t: u64, seed: u64, out: Option<PathBuf>) -> Result<bool, Failure> {
    let fam = load_family(&family)?;
    let z: BitString = param.parse()?;
    let s = draw_samples(&fam, z, t as usize, seed)?;
    let text = s.to_text();
    match out {
        Some(p) => fs::write(&p, text).map_err(|e| Failure(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn dispatch(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Compile { family, common } => emit(compile(family, common)?),
        Command::Sample { family, param, t, seed, out } => sample(family, param, t, seed, out),
        Command::Learn { mode, family, instance, samples, params, trials, exact_dis, common } => {
            emit(learn(mode, family, instance, samples, params, trials, exact_dis, common)?)
        }
        Command::Owpuzz { instance, params, trials, common } => emit(owpuzz(instance, params, trials, common)?),
        Command::Verify { claim, trials, reps, inject_fault, common } => {
            emit(verify(claim, trials, reps, inject_fault, common)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("distlab: {msg}");
            ExitCode::from(2)
        }
    }
}
