//! File formats: the `GTMM` binary matrix, CSV export, `key = value` configs
//! and JSON sidecars for sample sets and recovery results.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{GtmError, Result};
use crate::types::{Diagnostics, MixtureSpec, NoiseSpec, RecoveryResult, SampleMeta, SampleSet, TopicModel, ViewSpec};

pub const MAGIC: &[u8; 4] = b"GTMM";

/// `GTMM`, u32 rows, u32 cols (little endian), then row-major f64 LE.
pub fn encode_matrix(m: &Array2<f64>) -> Result<Vec<u8>> {
    let (r, c) = m.dim();
    let r32 = u32::try_from(r).map_err(|_| GtmError::Shape(format!("{r} rows exceed u32")))?;
    let c32 = u32::try_from(c).map_err(|_| GtmError::Shape(format!("{c} cols exceed u32")))?;
    let mut out = Vec::with_capacity(12 + 8 * r * c);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&r32.to_le_bytes());
    out.extend_from_slice(&c32.to_le_bytes());
    for i in 0..r {
        for j in 0..c {
            out.extend_from_slice(&m[[i, j]].to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(GtmError::Parse("missing GTMM header".into()));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (r, c) = (word(4), word(8));
    let body = &bytes[12..];
    if body.len() != 8 * r * c {
        return Err(GtmError::Parse(format!(
            "{r}x{c} matrix needs {} payload bytes, found {}",
            8 * r * c,
            body.len()
        )));
    }
    let vals: Vec<f64> = body
        .chunks_exact(8)
        .map(|ch| f64::from_le_bytes(ch.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((r, c), vals).map_err(|e| GtmError::Shape(e.to_string()))
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    fs::write(path, encode_matrix(m)?)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    decode_matrix(&fs::read(path)?)
}

/// One row per matrix row, shortest round-trip float formatting.
pub fn matrix_to_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Array2<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| GtmError::Parse(format!("{c:?}: {e}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(GtmError::Parse("ragged CSV rows".into()));
    }
    Array2::from_shape_vec((rows.len(), cols), rows.concat()).map_err(|e| GtmError::Shape(e.to_string()))
}

/// Flat `key = value` configuration. `#` starts a comment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
    /// Directory that relative file references resolve against.
    pub base: PathBuf,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GtmError::Parse(format!("line {}: expected key = value", no + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self {
            entries,
            base: PathBuf::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&fs::read_to_string(path)?)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| GtmError::Parse(format!("{key} = {v}: {e}"))))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.parsed(key)?
            .ok_or_else(|| GtmError::Parse(format!("missing key {key}")))
    }

    /// Comma-separated list; absent keys give `default`.
    pub fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) if v.is_empty() => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<T>().map_err(|e| GtmError::Parse(format!("{key}: {s:?}: {e}"))))
                .collect(),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.base.join(v))
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

pub fn mixture_from_config(cfg: &KvConfig, k: usize) -> Result<MixtureSpec> {
    let spec = MixtureSpec {
        xi: cfg.f64_or("mixture.xi", 0.2)?,
        near_pure_mass: cfg.f64_or("mixture.near_pure_mass", 0.0)?,
        eps_pure: cfg.f64_or("mixture.eps_pure", 0.01)?,
        interior_conc: cfg.list("mixture.interior_conc", Vec::new())?,
    };
    spec.validate(k)?;
    Ok(spec)
}

pub fn noise_from_config(cfg: &KvConfig) -> Result<NoiseSpec> {
    let spec = NoiseSpec {
        sigma: cfg.f64_or("noise.sigma", 0.0)?,
        p0: cfg.f64_or("noise.p0", 1.0)?,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn views_from_config(cfg: &KvConfig) -> Result<ViewSpec> {
    let spec = ViewSpec {
        zeta: cfg.f64_or("views.zeta", 1.0)?,
        m_bound: cfg.f64_or("views.m_bound", 10.0)?,
        delta0: cfg.f64_or("views.delta0", 0.1)?,
        spread: cfg.f64_or("views.spread", 0.5)?,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn specs_to_config(cfg: &mut KvConfig, mixture: &MixtureSpec, noise: &NoiseSpec, views: &ViewSpec) {
    cfg.set("mixture.xi", format!("{:?}", mixture.xi));
    cfg.set("mixture.near_pure_mass", format!("{:?}", mixture.near_pure_mass));
    cfg.set("mixture.eps_pure", format!("{:?}", mixture.eps_pure));
    let conc: Vec<String> = mixture.interior_conc.iter().map(|c| format!("{c:?}")).collect();
    cfg.set("mixture.interior_conc", conc.join(","));
    cfg.set("noise.sigma", format!("{:?}", noise.sigma));
    cfg.set("noise.p0", format!("{:?}", noise.p0));
    cfg.set("views.zeta", format!("{:?}", views.zeta));
    cfg.set("views.m_bound", format!("{:?}", views.m_bound));
    cfg.set("views.delta0", format!("{:?}", views.delta0));
    cfg.set("views.spread", format!("{:?}", views.spread));
}

/// Writes `A` and `V` next to `config_path` and the scalar fields into it.
pub fn write_model(config_path: &Path, model: &TopicModel) -> Result<()> {
    let dir = config_path.parent().unwrap_or(Path::new("."));
    let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let a_name = format!("{stem}.a.gtmm");
    let v_name = format!("{stem}.v.gtmm");
    write_matrix(&dir.join(&a_name), model.a())?;
    write_matrix(&dir.join(&v_name), model.v())?;
    let mut cfg = KvConfig::default();
    cfg.set("n", model.n());
    cfg.set("k", model.k());
    cfg.set("alpha", format!("{:?}", model.alpha()));
    cfg.set("r", format!("{:?}", model.r()));
    cfg.set("reference_eps", format!("{:?}", model.reference_eps()));
    cfg.set("a", a_name);
    cfg.set("v", v_name);
    fs::write(config_path, cfg.to_text())?;
    Ok(())
}

pub fn read_model(config_path: &Path) -> Result<TopicModel> {
    let cfg = KvConfig::load(config_path)?;
    let a = read_matrix(&cfg.path("a").ok_or_else(|| GtmError::Parse("model config lacks a".into()))?)?;
    let v = match cfg.path("v") {
        Some(p) => read_matrix(&p)?,
        None => crate::linalg::pseudoinverse(a.view()),
    };
    let alpha = cfg.require_f64("alpha")?;
    let r = cfg.require_f64("r")?;
    let eps = cfg.require_f64("reference_eps")?;
    Ok(TopicModel::from_parts(a, v, alpha, r, eps))
}

#[derive(Serialize, Deserialize)]
struct SampleSidecar {
    n: usize,
    m: usize,
    noisy_flags: Option<Vec<bool>>,
    meta: Option<SampleMeta>,
    has_latent_w: bool,
}

/// `x1.gtmm`, `x2.gtmm`, optional `w.gtmm` and `meta.json` under `dir`.
pub fn write_sample_set(dir: &Path, set: &SampleSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("x1.gtmm"), &set.x1)?;
    write_matrix(&dir.join("x2.gtmm"), &set.x2)?;
    if let Some(w) = &set.latent_w {
        write_matrix(&dir.join("w.gtmm"), w)?;
    }
    let side = SampleSidecar {
        n: set.n(),
        m: set.m(),
        noisy_flags: set.noisy_flags.clone(),
        meta: set.meta.clone(),
        has_latent_w: set.latent_w.is_some(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_sample_set(dir: &Path) -> Result<SampleSet> {
    let x1 = read_matrix(&dir.join("x1.gtmm"))?;
    let x2 = read_matrix(&dir.join("x2.gtmm"))?;
    let mut set = SampleSet::new(x1, x2)?;
    let meta_path = dir.join("meta.json");
    if meta_path.exists() {
        let side: SampleSidecar = serde_json::from_str(&fs::read_to_string(meta_path)?)?;
        set.noisy_flags = side.noisy_flags;
        set.meta = side.meta;
        if side.has_latent_w {
            set.latent_w = Some(read_matrix(&dir.join("w.gtmm"))?);
        }
    }
    Ok(set)
}

#[derive(Serialize, Deserialize)]
struct RecoverySidecar {
    clusters: Vec<Vec<usize>>,
    diagnostics: Diagnostics,
}

/// `a_hat.gtmm`, `v_hat.gtmm` and `diagnostics.json` under `dir`.
pub fn write_recovery(dir: &Path, res: &RecoveryResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("a_hat.gtmm"), &res.a_hat)?;
    write_matrix(&dir.join("v_hat.gtmm"), &res.v_hat)?;
    let side = RecoverySidecar {
        clusters: res.clusters.clone(),
        diagnostics: res.diagnostics.clone(),
    };
    fs::write(dir.join("diagnostics.json"), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_recovery(dir: &Path) -> Result<RecoveryResult> {
    let a_hat = read_matrix(&dir.join("a_hat.gtmm"))?;
    let v_hat = read_matrix(&dir.join("v_hat.gtmm"))?;
    let side: RecoverySidecar = serde_json::from_str(&fs::read_to_string(dir.join("diagnostics.json"))?)?;
    Ok(RecoveryResult {
        a_hat,
        v_hat,
        clusters: side.clusters,
        diagnostics: side.diagnostics,
    })
}
