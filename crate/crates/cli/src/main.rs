use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use gtm_core::generator::{self, GeneratorConfig, Link};
use gtm_core::harness::{self, Mode};
use gtm_core::io::{self, KvConfig};
use gtm_core::noisy::NoisyParams;
use gtm_core::types::{RecoveryResult, SampleSet, TopicModel};
use gtm_core::{eval, linalg, noisefree, noisy, selftest, GtmError};

#[derive(Parser)]
#[command(name = "gtm", version, about = "Topic-simplex recovery from two-view samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a model and sample sets from a key-value config.
    Generate(GenerateArgs),
    /// Recover the topic vectors from sample-set directories.
    Recover(RecoverArgs),
    /// Compare a recovery against the true model.
    Eval(EvalArgs),
    /// Run a grid of seeded trials and write one CSV row per trial.
    Sweep(SweepArgs),
    /// Consistency experiment on the adversarial lower-bound construction.
    Lowerbound(LowerboundArgs),
    /// Check the geometric kernels against brute-force references.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct Common {
    /// `key = value` file supplying any flag not given on the command line.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` setting, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> anyhow::Result<KvConfig> {
        let mut cfg = match &self.config {
            Some(p) => KvConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => KvConfig::default(),
        };
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {s:?}"))?;
            cfg.set(k.trim(), v.trim());
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Phase-1 sample count.
    #[arg(long)]
    m: Option<usize>,
    /// Fresh sample count (0 skips the fresh set).
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    common: Common,
    /// noisefree, noisy or generallink.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    phase1_in: Option<PathBuf>,
    /// Fresh sample set for the noisy mode.
    #[arg(long)]
    fresh_in: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of topics; defaults to the model's.
    #[arg(long)]
    k: Option<usize>,
    /// Hull tolerance of the noise-free modes.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p0gamma: Option<f64>,
    /// Take r, alpha and p0 gamma from the model and generator metadata.
    #[arg(long)]
    auto_from_meta: bool,
    /// Model config; defaults to `model.cfg` next to the phase-1 directory.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    recovery: Option<PathBuf>,
    /// Sample set with latent weights for the subspace and weight errors.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Compare unit directions, as for a general-link recovery.
    #[arg(long)]
    unit: bool,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Preset used for unset keys: noisefree, noisy or generallink.
    #[arg(long)]
    preset: Option<String>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "GTM_JOBS")]
    jobs: Option<usize>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    emit_gnuplot_data: Option<PathBuf>,
    /// Append the wall-clock runtime column.
    #[arg(long)]
    with_runtime: bool,
}

#[derive(Args)]
struct LowerboundArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

/// A run that finished but produced rows or results carrying error codes.
struct Partial;

fn pick<T: FromStr>(flag: Option<T>, cfg: &KvConfig, key: &str) -> anyhow::Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    cfg.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("{key} = {v}: {e}")))
        .transpose()
}

fn pick_path(flag: Option<PathBuf>, cfg: &KvConfig, key: &str) -> Option<PathBuf> {
    flag.or_else(|| cfg.path(key))
}

fn pick_bool(flag: bool, cfg: &KvConfig, key: &str) -> bool {
    flag || cfg.get(key) == Some("true")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Recover(a) => recover(a),
        Command::Eval(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Lowerbound(a) => lowerbound(a),
        Command::Selftest(a) => run_selftest(a),
    };
    match res {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Partial)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn generate(a: GenerateArgs) -> anyhow::Result<Option<Partial>> {
    let cfg = a.common.load()?;
    let out = pick_path(a.out, &cfg, "out").ok_or_else(|| anyhow!("--out is required"))?;
    let n = pick(a.n, &cfg, "n")?.ok_or_else(|| anyhow!("n is required"))?;
    let k = pick(a.k, &cfg, "k")?.ok_or_else(|| anyhow!("k is required"))?;
    let m = pick(a.m, &cfg, "m")?.ok_or_else(|| anyhow!("m is required"))?;
    let m2 = pick(a.m2, &cfg, "m2")?.unwrap_or(0);
    let seed = pick(a.seed, &cfg, "seed")?.unwrap_or(0);
    let alpha = cfg.f64_or("alpha", 1.0)?;
    let model_seed = harness::role_seed(seed, 0);
    let model = match cfg.get("model").unwrap_or("random") {
        "random" => TopicModel::random(n, k, alpha, model_seed)?,
        "equilateral" => TopicModel::equilateral(n, k, alpha, model_seed)?,
        _ => io::read_model(&cfg.path("model").expect("key present"))?,
    };
    let link = match cfg.get("link").unwrap_or("identity") {
        "identity" => Link::Identity,
        "square" => Link::Square,
        other => bail!("unknown link {other:?}"),
    };
    let mixture = io::mixture_from_config(&cfg, k)?;
    let noise = io::noise_from_config(&cfg)?;
    let views = io::views_from_config(&cfg)?;
    std::fs::create_dir_all(&out)?;
    io::write_model(&out.join("model.cfg"), &model)?;
    let gen = |role: u64| GeneratorConfig {
        model: model.clone(),
        mixture: mixture.clone(),
        views,
        noise,
        seed: harness::role_seed(seed, role),
    };
    let first = generator::generate_with_link(&gen(1), m, link)?;
    io::write_sample_set(&out.join("phase1"), &first)?;
    if m2 > 0 {
        let fresh = generator::generate_with_link(&gen(2), m2, link)?;
        io::write_sample_set(&out.join("fresh"), &fresh)?;
    }
    let mut record = KvConfig::default();
    for (key, val) in [("n", n), ("k", k), ("m", m), ("m2", m2)] {
        record.set(key, val);
    }
    record.set("seed", seed);
    record.set("alpha", format!("{alpha:?}"));
    record.set("link", if link == Link::Square { "square" } else { "identity" });
    io::specs_to_config(&mut record, &mixture, &noise, &views);
    std::fs::write(out.join("generate.cfg"), record.to_text())?;
    println!(
        "model r = {:.6}, alpha = {:.6}; wrote {} phase-1 and {m2} fresh samples to {}",
        model.r(),
        model.alpha(),
        m,
        out.display()
    );
    Ok(None)
}

fn default_model_path(phase1: &Path) -> PathBuf {
    phase1.parent().unwrap_or(Path::new(".")).join("model.cfg")
}

fn topic_count(flag: Option<usize>, model: Option<&TopicModel>, samples: &SampleSet) -> anyhow::Result<usize> {
    flag.or_else(|| model.map(TopicModel::k))
        .or_else(|| samples.latent_w.as_ref().map(|w| w.nrows()))
        .ok_or_else(|| anyhow!("cannot infer k; pass --k"))
}

fn noisy_params(a: &RecoverArgs, cfg: &KvConfig, model: Option<&TopicModel>, set: &SampleSet, k: usize) -> anyhow::Result<NoisyParams> {
    let eps = pick(a.eps, cfg, "eps")?.ok_or_else(|| anyhow!("--eps is required in noisy mode"))?;
    if pick_bool(a.auto_from_meta, cfg, "auto_from_meta") {
        let model = model.ok_or_else(|| anyhow!("--auto-from-meta needs a model config"))?;
        let meta = set.meta.as_ref().ok_or_else(|| anyhow!("phase-1 samples carry no metadata"))?;
        let r = pick(a.r, cfg, "r")?.unwrap_or(model.r());
        let alpha = pick(a.alpha, cfg, "alpha")?.unwrap_or(model.alpha());
        let base = NoisyParams::from_mixture(eps, r, alpha, k, meta.noise.p0, &meta.mixture)?;
        let params = match pick(a.p0gamma, cfg, "p0gamma")? {
            Some(pg) => NoisyParams::new(eps, r, alpha, pg)?,
            None => base,
        };
        return Ok(params.with_noise_info(meta.noise.sigma, meta.views.delta0));
    }
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| anyhow!("--{name} is required without --auto-from-meta"));
    let r = need(pick(a.r, cfg, "r")?, "r")?;
    let alpha = need(pick(a.alpha, cfg, "alpha")?, "alpha")?;
    let pg = need(pick(a.p0gamma, cfg, "p0gamma")?, "p0gamma")?;
    let mut params = NoisyParams::new(eps, r, alpha, pg)?;
    if let Some(meta) = &set.meta {
        params = params.with_noise_info(meta.noise.sigma, meta.views.delta0);
    }
    Ok(params)
}

fn recover(a: RecoverArgs) -> anyhow::Result<Option<Partial>> {
    let cfg = a.common.load()?;
    let mode = Mode::parse(&pick::<String>(a.mode.clone(), &cfg, "mode")?.unwrap_or_else(|| "noisefree".into()))?;
    let phase1 = pick_path(a.phase1_in.clone(), &cfg, "phase1_in").ok_or_else(|| anyhow!("--phase1-in is required"))?;
    let out = pick_path(a.out.clone(), &cfg, "out").ok_or_else(|| anyhow!("--out is required"))?;
    let set = io::read_sample_set(&phase1).with_context(|| format!("reading {}", phase1.display()))?;
    let model_path = pick_path(a.model.clone(), &cfg, "model").unwrap_or_else(|| default_model_path(&phase1));
    let model = if model_path.exists() { Some(io::read_model(&model_path)?) } else { None };
    let k = topic_count(pick(a.k, &cfg, "k")?, model.as_ref(), &set)?;
    let tol = pick(a.tol, &cfg, "tol")?.unwrap_or(noisefree::DEFAULT_TOL);
    let res: Result<RecoveryResult, GtmError> = match mode {
        Mode::NoiseFree => noisefree::recover(&set, k, tol),
        Mode::GeneralLink => noisefree::recover_general_link(&set, k, tol),
        Mode::Noisy => {
            let fresh_dir = pick_path(a.fresh_in.clone(), &cfg, "fresh_in").ok_or_else(|| anyhow!("--fresh-in is required in noisy mode"))?;
            let fresh = io::read_sample_set(&fresh_dir).with_context(|| format!("reading {}", fresh_dir.display()))?;
            let params = noisy_params(&a, &cfg, model.as_ref(), &set, k)?;
            noisy::recover_noisy(&set, &fresh, k, &params)
        }
    };
    match res {
        Ok(res) => {
            io::write_recovery(&out, &res)?;
            println!("{}", serde_json::to_string(&res.diagnostics)?);
            Ok(None)
        }
        Err(e) if matches!(e, GtmError::Io(_) | GtmError::Parse(_) | GtmError::Json(_)) => Err(e.into()),
        Err(e) => {
            std::fs::create_dir_all(&out)?;
            let report = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            std::fs::write(out.join("error.json"), serde_json::to_string_pretty(&report)?)?;
            eprintln!("recovery failed: {e}");
            Ok(Some(Partial))
        }
    }
}

fn evaluate(a: EvalArgs) -> anyhow::Result<Option<Partial>> {
    let cfg = a.common.load()?;
    let model_path = pick_path(a.model, &cfg, "model").ok_or_else(|| anyhow!("--model is required"))?;
    let rec_dir = pick_path(a.recovery, &cfg, "recovery").ok_or_else(|| anyhow!("--recovery is required"))?;
    let model = io::read_model(&model_path)?;
    let rec = io::read_recovery(&rec_dir)?;
    let unit = pick_bool(a.unit, &cfg, "unit");
    let (a_true, v_true) = if unit {
        let au = eval::unit_columns(model.a());
        let vu = linalg::pseudoinverse(au.view());
        (au, vu)
    } else {
        (model.a().clone(), model.v().clone())
    };
    let matching = eval::match_permutation(a_true.view(), rec.a_hat.view())?;
    let dual = eval::dual_error(v_true.view(), rec.v_hat.view(), &matching.perm);
    let mut report = serde_json::json!({
        "perm": matching.perm,
        "vertex_error": matching.max_error,
        "vertex_error_sum": matching.sum_error,
        "dual_error": dual,
    });
    if !unit {
        let b = eval::dual_bound(a_true.view(), v_true.view(), rec.a_hat.view(), rec.v_hat.view(), &matching.perm)?;
        report["dual_bound"] = serde_json::to_value(&b)?;
    }
    if let Some(dir) = pick_path(a.samples, &cfg, "samples") {
        let set = io::read_sample_set(&dir)?;
        let est = linalg::last_k_left_projection(set.difference().view(), model.k())?;
        let diff = &model.projection() - &est.p_hat;
        report["subspace_error"] = serde_json::json!(linalg::spectral_norm(diff.view())?);
        if let (Some(w), false) = (&set.latent_w, unit) {
            let inferred = eval::infer_all(rec.v_hat.view(), set.x1.view(), &matching.perm);
            let worst = (&inferred - w).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            report["weight_error_max"] = serde_json::json!(worst);
        }
    }
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(out) = pick_path(a.out, &cfg, "eval_out") {
        std::fs::write(out, &text)?;
    }
    println!("{text}");
    Ok(None)
}

fn sweep(a: SweepArgs) -> anyhow::Result<Option<Partial>> {
    let mut cfg = a.common.load()?;
    if let Some(p) = &a.preset {
        cfg.set("preset", p);
    }
    let mut exp = harness::experiment_from_config(&cfg)?;
    if let Some(out) = a.out {
        exp.output = Some(out);
    }
    exp.include_runtime |= a.with_runtime;
    let jobs = pick(a.jobs, &cfg, "jobs")?.unwrap_or(0);
    let rows = harness::run_sweep(&exp, jobs)?;
    if exp.output.is_none() {
        print!("{}", harness::rows_to_csv(&rows, exp.include_runtime));
    }
    if let Some(path) = pick_path(a.emit_gnuplot_data, &cfg, "emit_gnuplot_data") {
        std::fs::write(path, harness::gnuplot_table(&rows))?;
    }
    let failed = rows.iter().filter(|r| !r.ok()).count();
    eprintln!("{} of {} trials succeeded", rows.len() - failed, rows.len());
    Ok((failed > 0).then_some(Partial))
}

fn lowerbound(a: LowerboundArgs) -> anyhow::Result<Option<Partial>> {
    let cfg = a.common.load()?;
    let n = pick(a.n, &cfg, "n")?.ok_or_else(|| anyhow!("--n is required"))?;
    let k = pick(a.k, &cfg, "k")?.unwrap_or(1);
    let trials = pick(a.trials, &cfg, "trials")?.unwrap_or(50);
    let report = harness::lower_bound_experiment(n, k, trials)?;
    if let Some(out) = pick_path(a.out, &cfg, "out") {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    let min_surv = report.outcomes.iter().map(|o| o.survivors.len()).min().unwrap_or(0);
    println!(
        "n = {n}, k = {k}, trials = {trials}: min survivors per block {min_surv}, all ambiguous {}, survivors at sqrt 2 {}",
        report.all_ambiguous, report.survivors_separated
    );
    Ok((!report.all_ambiguous || !report.survivors_separated).then_some(Partial))
}

fn run_selftest(a: SelftestArgs) -> anyhow::Result<Option<Partial>> {
    let cfg = a.common.load()?;
    let instances = pick(a.instances, &cfg, "instances")?.unwrap_or(200);
    let seed = pick(a.seed, &cfg, "seed")?.unwrap_or(0);
    let mut all = true;
    for r in selftest::run_all(instances, seed) {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} {} {}/{} {:?}", r.name, r.agreed, r.instances, r.failures);
        all &= r.passed();
    }
    Ok((!all).then_some(Partial))
}
