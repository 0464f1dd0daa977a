//! Adversarial instance family showing that any learner needs a number of
//! samples linear in `n`.
//!
//! Coordinates split into `k` blocks of `n/k`. Candidate `j` (1-based) of
//! block `i` puts `1/sqrt 2` on the block positions `2j-1, 2j`. Sample `j` of
//! block `i` is `1/sqrt 2` across the block with one sign flipped: position
//! `2j-1` in the first view and `2j` in the second. It scores 0 under
//! candidate `j` and 1 under every other candidate of the block.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{GtmError, Result};
use crate::types::SampleSet;

#[derive(Clone, Debug)]
pub struct LowerBoundInstance {
    n: usize,
    k: usize,
    hidden_js: Vec<usize>,
}

/// One emitted document: its block, its index and the two views.
#[derive(Clone, Debug)]
pub struct LbSample {
    pub block: usize,
    pub j: usize,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl LowerBoundInstance {
    /// `hidden_js[i]` (1-based) selects the true vector of block `i`.
    pub fn new(n: usize, k: usize, hidden_js: Vec<usize>) -> Result<Self> {
        if k == 0 || n % k != 0 {
            return Err(GtmError::InvalidArgument(format!("n = {n} is not a multiple of k = {k}")));
        }
        if (n / k) % 2 != 0 {
            return Err(GtmError::InvalidArgument(format!(
                "block size n/k = {} must be even",
                n / k
            )));
        }
        if hidden_js.len() != k {
            return Err(GtmError::InvalidArgument(format!("{} hidden indices for k = {k}", hidden_js.len())));
        }
        let per = n / (2 * k);
        if let Some(&bad) = hidden_js.iter().find(|&&j| j == 0 || j > per) {
            return Err(GtmError::InvalidArgument(format!("hidden index {bad} outside 1..={per}")));
        }
        Ok(Self { n, k, hidden_js })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn hidden_js(&self) -> &[usize] {
        &self.hidden_js
    }

    /// Candidates per block, `n / (2k)`.
    pub fn per_block(&self) -> usize {
        self.n / (2 * self.k)
    }

    fn offset(&self, block: usize) -> usize {
        block * (self.n / self.k)
    }

    pub fn candidate(&self, block: usize, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        let base = self.offset(block) + 2 * (j - 1);
        v[base] = std::f64::consts::FRAC_1_SQRT_2;
        v[base + 1] = std::f64::consts::FRAC_1_SQRT_2;
        v
    }

    /// Candidate set of every block.
    pub fn candidates(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.k)
            .map(|b| (1..=self.per_block()).map(|j| self.candidate(b, j)).collect())
            .collect()
    }

    pub fn true_vector(&self, block: usize) -> Vec<f64> {
        self.candidate(block, self.hidden_js[block])
    }

    /// Sample `j` of `block` regardless of whether it is withheld.
    pub fn raw_sample(&self, block: usize, j: usize) -> LbSample {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut x1 = vec![0.0; self.n];
        let start = self.offset(block);
        for t in start..start + self.n / self.k {
            x1[t] = h;
        }
        let mut x2 = x1.clone();
        x1[start + 2 * (j - 1)] = -h;
        x2[start + 2 * (j - 1) + 1] = -h;
        LbSample { block, j, x1, x2 }
    }

    /// Indices the adversary is willing to reveal for `block`, in order.
    pub fn emittable(&self, block: usize) -> Vec<usize> {
        (1..=self.per_block()).filter(|&j| j != self.hidden_js[block]).collect()
    }

    /// The first `count` revealed samples of `block`.
    pub fn samples(&self, block: usize, count: usize) -> Vec<LbSample> {
        self.emittable(block)
            .into_iter()
            .take(count)
            .map(|j| self.raw_sample(block, j))
            .collect()
    }

    /// Revealed samples as a two-view sample set (columns in emission order).
    pub fn sample_set(&self, samples: &[LbSample]) -> Result<SampleSet> {
        let mut x1 = Array2::zeros((self.n, samples.len()));
        let mut x2 = Array2::zeros((self.n, samples.len()));
        for (c, s) in samples.iter().enumerate() {
            for t in 0..self.n {
                x1[[t, c]] = s.x1[t];
                x2[[t, c]] = s.x2[t];
            }
        }
        SampleSet::new(x1, x2)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Whether candidate `v` for block `i` explains `sample`: both views must
/// score 1 when the sample comes from block `i` and 0 otherwise.
pub fn consistent(v: &[f64], block: usize, sample: &LbSample) -> bool {
    let want = if sample.block == block { 1.0 } else { 0.0 };
    (dot(v, &sample.x1) - want).abs() <= 1e-12 && (dot(v, &sample.x2) - want).abs() <= 1e-12
}

/// 1-based indices of the candidates of `block` consistent with every sample.
pub fn surviving(inst: &LowerBoundInstance, block: usize, samples: &[LbSample]) -> Vec<usize> {
    (1..=inst.per_block())
        .filter(|&j| {
            let v = inst.candidate(block, j);
            samples.iter().all(|s| consistent(&v, block, s))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockOutcome {
    pub trial: usize,
    pub block: usize,
    pub samples_seen: usize,
    pub survivors: Vec<usize>,
    pub min_pairwise_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub outcomes: Vec<BlockOutcome>,
    /// Every block kept at least two candidates.
    pub all_ambiguous: bool,
    /// Every pair of survivors sits at distance `sqrt 2`.
    pub survivors_separated: bool,
}

/// For each trial, hides a candidate per block, reveals `n/(2k) - 2` samples
/// from every block (all blocks pooled) and counts the surviving candidates.
pub fn lower_bound_experiment(n: usize, k: usize, trials: usize) -> Result<LowerBoundReport> {
    if k == 0 || n % k != 0 {
        return Err(GtmError::InvalidArgument(format!("n = {n} is not a multiple of k = {k}")));
    }
    let per = n / (2 * k).max(1);
    let mut outcomes = Vec::new();
    for trial in 0..trials {
        let hidden: Vec<usize> = (0..k).map(|b| 1 + (trial * 7 + b * 3) % per.max(1)).collect();
        let inst = LowerBoundInstance::new(n, k, hidden)?;
        let reveal = per.saturating_sub(2);
        let pooled: Vec<LbSample> = (0..k).flat_map(|b| inst.samples(b, reveal)).collect();
        for block in 0..k {
            let surv = surviving(&inst, block, &pooled);
            let mut min_d = f64::INFINITY;
            for (a, &ja) in surv.iter().enumerate() {
                for &jb in &surv[a + 1..] {
                    let va = inst.candidate(block, ja);
                    let vb = inst.candidate(block, jb);
                    let d = va.iter().zip(&vb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                    min_d = min_d.min(d);
                }
            }
            outcomes.push(BlockOutcome {
                trial,
                block,
                samples_seen: pooled.len(),
                survivors: surv,
                min_pairwise_distance: min_d,
            });
        }
    }
    let all_ambiguous = outcomes.iter().all(|o| o.survivors.len() >= 2);
    let survivors_separated = outcomes
        .iter()
        .all(|o| o.survivors.len() < 2 || (o.min_pairwise_distance - 2f64.sqrt()).abs() <= 1e-12);
    Ok(LowerBoundReport {
        n,
        k,
        trials,
        outcomes,
        all_ambiguous,
        survivors_separated,
    })
}
