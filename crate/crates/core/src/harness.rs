//! Experiment orchestration: seeded trials over a grid of `(n, k, m, sigma)`,
//! one metrics row per trial, deterministic CSV output.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GtmError, Result};
use crate::eval;
use crate::generator::{self, GeneratorConfig, Link};
use crate::io::{self, KvConfig};
use crate::linalg;
use crate::noisefree;
use crate::noisy::{self, NoisyParams};
use crate::types::{MixtureSpec, NoiseSpec, RecoveryResult, SampleSet, TopicModel, ViewSpec};

pub use crate::lower_bound::{lower_bound_experiment, LowerBoundReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    NoiseFree,
    Noisy,
    GeneralLink,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::NoiseFree => "noisefree",
            Mode::Noisy => "noisy",
            Mode::GeneralLink => "generallink",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "noisefree" => Ok(Mode::NoiseFree),
            "noisy" => Ok(Mode::Noisy),
            "generallink" | "general_link" => Ok(Mode::GeneralLink),
            _ => Err(GtmError::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Gaussian columns rescaled to longest norm `alpha`.
    Random,
    /// `alpha` times orthonormal columns: a regular simplex.
    Equilateral,
}

/// Everything about a trial except the swept coordinates.
#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub mode: Mode,
    pub model_kind: ModelKind,
    pub alpha: f64,
    pub mixture: MixtureSpec,
    pub views: ViewSpec,
    pub p0: f64,
    /// Target accuracy for the noisy pipeline.
    pub eps: f64,
    /// Hull tolerance for the noise-free pipelines.
    pub tol: f64,
    /// Fresh-sample count for the noisy pipeline; `None` uses `m`.
    pub m2: Option<usize>,
    /// Swap the roles of the phase-1 and fresh sample sets.
    pub swap_sets: bool,
}

#[derive(Clone, Debug)]
pub struct SweepAxes {
    pub m: Vec<usize>,
    pub sigma: Vec<f64>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub trial: TrialSpec,
    pub axes: SweepAxes,
    pub output: Option<PathBuf>,
    pub include_runtime: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialPoint {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsRow {
    pub mode: &'static str,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub m2: usize,
    pub sigma: f64,
    pub seed: u64,
    /// `ok` or an error code.
    pub status: String,
    pub vertex_error: Option<f64>,
    pub dual_error: Option<f64>,
    pub subspace_error: Option<f64>,
    pub dual_bound_ok: Option<bool>,
    pub clusters: Option<usize>,
    pub survivors: Option<usize>,
    pub warnings: Vec<String>,
    pub runtime_s: f64,
}

impl MetricsRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

pub const CSV_HEADER: &str =
    "mode,n,k,m,m2,sigma,seed,status,vertex_error,dual_error,subspace_error,dual_bound_ok,clusters,survivors,warnings";

/// Derived seed for one role (model, phase-1 data, fresh data) of a trial.
pub fn role_seed(seed: u64, role: u64) -> u64 {
    let mut z = seed ^ role.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `ceil(c ((n - k)/zeta ln(1/delta) + (1/xi) ln(k/delta)))`.
pub fn noisefree_sample_size(n: usize, k: usize, zeta: f64, xi: f64, delta: f64, c: f64) -> usize {
    let v = c * ((n - k) as f64 / zeta * (1.0 / delta).ln() + (1.0 / xi) * (k as f64 / delta).ln());
    v.ceil() as usize
}

pub fn build_model(spec: &TrialSpec, n: usize, k: usize, seed: u64) -> Result<TopicModel> {
    let s = role_seed(seed, 0);
    match spec.model_kind {
        ModelKind::Random => TopicModel::random(n, k, spec.alpha, s),
        ModelKind::Equilateral => TopicModel::equilateral(n, k, spec.alpha, s),
    }
}

pub fn generator_config(spec: &TrialSpec, model: &TopicModel, sigma: f64, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        model: model.clone(),
        mixture: spec.mixture.clone(),
        views: spec.views,
        noise: NoiseSpec { sigma, p0: spec.p0 },
        seed,
    }
}

/// Phase-1 and fresh sample sets for a trial.
pub fn trial_samples(spec: &TrialSpec, model: &TopicModel, point: &TrialPoint) -> Result<(SampleSet, SampleSet)> {
    let link = if spec.mode == Mode::GeneralLink { Link::Square } else { Link::Identity };
    let first = generator::generate_with_link(&generator_config(spec, model, point.sigma, role_seed(point.seed, 1)), point.m, link)?;
    let m2 = spec.m2.unwrap_or(point.m);
    let second = if spec.mode == Mode::Noisy {
        generator::generate(&generator_config(spec, model, point.sigma, role_seed(point.seed, 2)), m2)?
    } else {
        SampleSet::new(ndarray::Array2::zeros((point.n, 0)), ndarray::Array2::zeros((point.n, 0)))?
    };
    Ok(if spec.swap_sets { (second, first) } else { (first, second) })
}

pub fn noisy_params(spec: &TrialSpec, model: &TopicModel, sigma: f64) -> Result<NoisyParams> {
    Ok(
        NoisyParams::from_mixture(spec.eps, model.r(), model.alpha(), model.k(), spec.p0, &spec.mixture)?
            .with_noise_info(sigma, spec.views.delta0),
    )
}

fn warning_codes(res: &RecoveryResult) -> Vec<String> {
    let d = &res.diagnostics;
    let mut out = Vec::new();
    if d.capped_solves > 0 {
        out.push("capped_solver".to_string());
    }
    if d.gap_condition == Some(false) {
        out.push("gap_condition".to_string());
    }
    if d.regime_ok == Some(false) {
        out.push("regime".to_string());
    }
    if d.skipped_points > 0 {
        out.push("skipped_points".to_string());
    }
    if d.warnings.iter().any(|w| w.contains("tie")) {
        out.push("singular_tie".to_string());
    }
    out
}

fn unit_rows(v: &ndarray::Array2<f64>) -> ndarray::Array2<f64> {
    eval::unit_columns(&v.t().to_owned()).t().to_owned()
}

/// Runs one trial. Failures become rows with an error code.
pub fn run_trial(spec: &TrialSpec, point: &TrialPoint) -> MetricsRow {
    let start = Instant::now();
    let m2 = if spec.mode == Mode::Noisy { spec.m2.unwrap_or(point.m) } else { 0 };
    let mut row = MetricsRow {
        mode: spec.mode.name(),
        n: point.n,
        k: point.k,
        m: point.m,
        m2,
        sigma: point.sigma,
        seed: point.seed,
        status: "ok".into(),
        vertex_error: None,
        dual_error: None,
        subspace_error: None,
        dual_bound_ok: None,
        clusters: None,
        survivors: None,
        warnings: Vec::new(),
        runtime_s: 0.0,
    };
    if let Err(e) = trial_body(spec, point, &mut row) {
        row.status = e.code().to_string();
    }
    row.runtime_s = start.elapsed().as_secs_f64();
    row
}

fn trial_body(spec: &TrialSpec, point: &TrialPoint, row: &mut MetricsRow) -> Result<()> {
    let model = build_model(spec, point.n, point.k, point.seed)?;
    let (set1, set2) = trial_samples(spec, &model, point)?;
    if let Some(meta) = &set1.meta {
        if let Some(gap) = meta.empirical_gap {
            let sigma = meta.noise.sigma;
            if spec.mode == Mode::Noisy && gap <= 6.0 * sigma * sigma + meta.views.delta0 {
                row.warnings.push("empirical_gap".into());
            }
        }
    }
    if let Ok(est) = linalg::last_k_left_projection(set1.difference().view(), point.k) {
        let diff = &model.projection() - &est.p_hat;
        row.subspace_error = Some(linalg::spectral_norm(diff.view())?);
    }
    let res = match spec.mode {
        Mode::NoiseFree => noisefree::recover(&set1, point.k, spec.tol),
        Mode::GeneralLink => noisefree::recover_general_link(&set1, point.k, spec.tol),
        Mode::Noisy => {
            let params = noisy_params(spec, &model, point.sigma)?;
            noisy::recover_noisy(&set1, &set2, point.k, &params)
        }
    }?;
    row.warnings.extend(warning_codes(&res));
    if spec.mode == Mode::Noisy {
        row.clusters = Some(res.clusters.len());
        row.survivors = Some(res.diagnostics.survivors);
    }
    let (a_true, v_true) = if spec.mode == Mode::GeneralLink {
        (eval::unit_columns(model.a()), unit_rows(model.v()))
    } else {
        (model.a().clone(), model.v().clone())
    };
    let matching = eval::match_permutation(a_true.view(), res.a_hat.view())?;
    row.vertex_error = Some(matching.max_error);
    row.dual_error = Some(eval::dual_error(v_true.view(), res.v_hat.view(), &matching.perm));
    if spec.mode != Mode::GeneralLink {
        let b = eval::dual_bound(a_true.view(), v_true.view(), res.a_hat.view(), res.v_hat.view(), &matching.perm)?;
        row.dual_bound_ok = Some(b.holds);
    }
    Ok(())
}

pub fn sweep_points(axes: &SweepAxes) -> Vec<TrialPoint> {
    let mut out = Vec::new();
    for &n in &axes.n {
        for &k in &axes.k {
            for &m in &axes.m {
                for &sigma in &axes.sigma {
                    for &seed in &axes.seeds {
                        out.push(TrialPoint { n, k, m, sigma, seed });
                    }
                }
            }
        }
    }
    out
}

fn validate_axes(axes: &SweepAxes) -> Result<()> {
    if axes.m.is_empty() || axes.sigma.is_empty() || axes.n.is_empty() || axes.k.is_empty() || axes.seeds.is_empty() {
        return Err(GtmError::InvalidArgument("every sweep axis needs at least one value".into()));
    }
    let mut seeds = axes.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() != axes.seeds.len() {
        return Err(GtmError::InvalidArgument("seeds must be distinct".into()));
    }
    Ok(())
}

/// All trials of the grid, sorted by `(n, k, m, sigma, seed)`. `jobs = 0`
/// uses the default thread count.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<MetricsRow>> {
    validate_axes(&cfg.axes)?;
    let points = sweep_points(&cfg.axes);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| GtmError::InvalidArgument(e.to_string()))?;
    let mut rows: Vec<MetricsRow> = pool.install(|| points.par_iter().map(|p| run_trial(&cfg.trial, p)).collect());
    rows.sort_by(|a, b| {
        (a.n, a.k, a.m)
            .cmp(&(b.n, b.k, b.m))
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.seed.cmp(&b.seed))
    });
    if let Some(path) = &cfg.output {
        std::fs::write(path, rows_to_csv(&rows, cfg.include_runtime))?;
    }
    Ok(rows)
}

fn opt<T: std::fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref().map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Fixed header, one line per row. The runtime column is only present when
/// requested because it is the one non-deterministic field.
pub fn rows_to_csv(rows: &[MetricsRow], include_runtime: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    if include_runtime {
        out.push_str(",runtime_s");
    }
    out.push('\n');
    for r in rows {
        let mut line = format!(
            "{},{},{},{},{},{:?},{},{},{},{},{},{},{},{},{}",
            r.mode,
            r.n,
            r.k,
            r.m,
            r.m2,
            r.sigma,
            r.seed,
            r.status,
            opt(&r.vertex_error),
            opt(&r.dual_error),
            opt(&r.subspace_error),
            opt(&r.dual_bound_ok),
            opt(&r.clusters),
            opt(&r.survivors),
            r.warnings.join(";"),
        );
        if include_runtime {
            line.push_str(&format!(",{:.6}", r.runtime_s));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Per grid point: `n k m sigma success_rate mean_vertex_error mean_subspace_error`.
pub fn gnuplot_table(rows: &[MetricsRow]) -> String {
    let mut out = String::from("# n k m sigma success_rate mean_vertex_error mean_subspace_error\n");
    let mut i = 0;
    while i < rows.len() {
        let key = (rows[i].n, rows[i].k, rows[i].m, rows[i].sigma.to_bits());
        let mut j = i;
        while j < rows.len() && (rows[j].n, rows[j].k, rows[j].m, rows[j].sigma.to_bits()) == key {
            j += 1;
        }
        let group = &rows[i..j];
        let ok = group.iter().filter(|r| r.ok()).count();
        let mean = |f: &dyn Fn(&MetricsRow) -> Option<f64>| {
            let v: Vec<f64> = group.iter().filter_map(f).collect();
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        out.push_str(&format!(
            "{} {} {} {:?} {:?} {:?} {:?}\n",
            key.0,
            key.1,
            key.2,
            rows[i].sigma,
            ok as f64 / group.len() as f64,
            mean(&|r| r.vertex_error),
            mean(&|r| r.subspace_error),
        ));
        i = j;
    }
    out
}

fn parse_seeds(cfg: &KvConfig) -> Result<Vec<u64>> {
    match cfg.get("sweep.seeds") {
        Some(v) if v.contains("..") => {
            let (a, b) = v.split_once("..").expect("checked");
            let a: u64 = a.trim().parse().map_err(|e| GtmError::Parse(format!("sweep.seeds: {e}")))?;
            let b: u64 = b.trim().parse().map_err(|e| GtmError::Parse(format!("sweep.seeds: {e}")))?;
            Ok((a..b).collect())
        }
        _ => cfg.list("sweep.seeds", vec![0]),
    }
}

/// Reads an experiment from `key = value` text. Unset keys take the values of
/// the preset named by `preset` (default: the noise-free preset).
pub fn experiment_from_config(cfg: &KvConfig) -> Result<ExperimentConfig> {
    let base = match cfg.get("preset").unwrap_or("noisefree") {
        "noisefree" => presets::noisefree_exact(),
        "noisy" => presets::noisy_desk(),
        "generallink" => presets::general_link(),
        other => return Err(GtmError::Parse(format!("unknown preset {other:?}"))),
    };
    let mode = cfg.get("mode").map(Mode::parse).transpose()?.unwrap_or(base.trial.mode);
    let model_kind = match cfg.get("model") {
        None => base.trial.model_kind,
        Some("random") => ModelKind::Random,
        Some("equilateral") => ModelKind::Equilateral,
        Some(o) => return Err(GtmError::Parse(format!("unknown model kind {o:?}"))),
    };
    let k_axis = cfg.list("sweep.k", base.axes.k.clone())?;
    let mixture = if cfg.keys().any(|k| k.starts_with("mixture.")) {
        let mut merged = cfg.clone();
        for (key, val) in [
            ("mixture.xi", base.trial.mixture.xi),
            ("mixture.near_pure_mass", base.trial.mixture.near_pure_mass),
            ("mixture.eps_pure", base.trial.mixture.eps_pure),
        ] {
            if merged.get(key).is_none() {
                merged.set(key, format!("{val:?}"));
            }
        }
        io::mixture_from_config(&merged, k_axis.iter().copied().max().unwrap_or(1))?
    } else {
        base.trial.mixture.clone()
    };
    let views = ViewSpec {
        zeta: cfg.f64_or("views.zeta", base.trial.views.zeta)?,
        m_bound: cfg.f64_or("views.m_bound", base.trial.views.m_bound)?,
        delta0: cfg.f64_or("views.delta0", base.trial.views.delta0)?,
        spread: cfg.f64_or("views.spread", base.trial.views.spread)?,
    };
    views.validate()?;
    let m2 = match cfg.usize_or("m2", base.trial.m2.unwrap_or(0))? {
        0 => None,
        v => Some(v),
    };
    let trial = TrialSpec {
        mode,
        model_kind,
        alpha: cfg.f64_or("alpha", base.trial.alpha)?,
        mixture,
        views,
        p0: cfg.f64_or("noise.p0", base.trial.p0)?,
        eps: cfg.f64_or("eps", base.trial.eps)?,
        tol: cfg.f64_or("tol", base.trial.tol)?,
        m2,
        swap_sets: cfg.get("swap_sets").map(|v| v == "true").unwrap_or(false),
    };
    let axes = SweepAxes {
        m: cfg.list("sweep.m", base.axes.m.clone())?,
        sigma: cfg.list("sweep.sigma", base.axes.sigma.clone())?,
        n: cfg.list("sweep.n", base.axes.n.clone())?,
        k: k_axis,
        seeds: if cfg.get("sweep.seeds").is_some() { parse_seeds(cfg)? } else { base.axes.seeds.clone() },
    };
    validate_axes(&axes)?;
    Ok(ExperimentConfig {
        trial,
        axes,
        output: cfg.path("output"),
        include_runtime: cfg.get("include_runtime").map(|v| v == "true").unwrap_or(false),
    })
}

/// Frozen desk-scale configurations.
pub mod presets {
    use super::*;

    /// Noise-free exact recovery: `n = 12`, `k = 3`, `xi = 0.2`, `delta = 0.01`
    /// and the sample-size multiplier 5.
    pub fn noisefree_exact() -> ExperimentConfig {
        let (n, k) = (12, 3);
        ExperimentConfig {
            trial: TrialSpec {
                mode: Mode::NoiseFree,
                model_kind: ModelKind::Random,
                alpha: 1.0,
                mixture: MixtureSpec {
                    xi: 0.2,
                    near_pure_mass: 0.0,
                    eps_pure: 0.01,
                    interior_conc: vec![],
                },
                views: ViewSpec {
                    zeta: 1.0,
                    m_bound: 10.0,
                    delta0: 0.1,
                    spread: 0.5,
                },
                p0: 1.0,
                eps: 0.1,
                tol: noisefree::DEFAULT_TOL,
                m2: None,
                swap_sets: false,
            },
            axes: SweepAxes {
                m: vec![noisefree_sample_size(n, k, 1.0, 0.2, 0.01, 5.0)],
                sigma: vec![0.0],
                n: vec![n],
                k: vec![k],
                seeds: (0..20).collect(),
            },
            output: None,
            include_runtime: false,
        }
    }

    /// Noisy recovery: `n = 15`, `k = 3`, `sigma = 0.05`, `p0 = 0.3`, regular
    /// simplex with `alpha = 1`, `eps = 0.15`, `m1 = m2 = 20000`.
    pub fn noisy_desk() -> ExperimentConfig {
        ExperimentConfig {
            trial: TrialSpec {
                mode: Mode::Noisy,
                model_kind: ModelKind::Equilateral,
                alpha: 1.0,
                mixture: MixtureSpec {
                    xi: 0.1,
                    near_pure_mass: 0.05,
                    eps_pure: 0.002,
                    interior_conc: vec![],
                },
                views: ViewSpec {
                    zeta: 1.0,
                    m_bound: 8.0,
                    delta0: 1.0,
                    spread: 1.0,
                },
                p0: 0.3,
                eps: 0.15,
                tol: noisefree::DEFAULT_TOL,
                m2: Some(20_000),
                swap_sets: false,
            },
            axes: SweepAxes {
                m: vec![20_000],
                sigma: vec![0.05],
                n: vec![15],
                k: vec![3],
                seeds: (0..10).collect(),
            },
            output: None,
            include_runtime: false,
        }
    }

    /// Squared link, noise-free: `n = 10`, `k = 3`, pure mass `0.2` per topic.
    pub fn general_link() -> ExperimentConfig {
        let (n, k) = (10, 3);
        let mut cfg = noisefree_exact();
        cfg.trial.mode = Mode::GeneralLink;
        cfg.axes.n = vec![n];
        cfg.axes.k = vec![k];
        cfg.axes.m = vec![noisefree_sample_size(n, k, 1.0, 0.2, 0.01, 5.0)];
        cfg
    }
}
