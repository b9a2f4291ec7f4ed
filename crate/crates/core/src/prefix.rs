//! Similarity between prefixes of real vectors under the best position matching.

use serde::{Deserialize, Serialize};

use crate::encoding::{PrefixEncoding, Row, STATE_CAPACITY};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::symbols::SymbolTable;

pub const DEFAULT_TEMPERATURE: f64 = 0.02;
pub const DEFAULT_SINKHORN_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrefixWire", into = "PrefixWire")]
pub struct Prefix {
    vectors: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PrefixWire {
    Object { vectors: Vec<Vec<f64>> },
    Rows(Vec<Vec<f64>>),
}

impl TryFrom<PrefixWire> for Prefix {
    type Error = Error;
    fn try_from(w: PrefixWire) -> Result<Self> {
        match w {
            PrefixWire::Object { vectors } | PrefixWire::Rows(vectors) => Prefix::new(vectors),
        }
    }
}

impl From<Prefix> for PrefixWire {
    fn from(p: Prefix) -> Self {
        PrefixWire::Object { vectors: p.vectors }
    }
}

impl Prefix {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = vectors.first() {
            let d = first.len();
            for (i, v) in vectors.iter().enumerate() {
                if v.len() != d {
                    return Err(Error::Dimension(format!(
                        "vector {i} has dimension {} instead of {d}",
                        v.len()
                    )));
                }
                if norm(v) == 0.0 || !v.iter().all(|x| x.is_finite()) {
                    return Err(Error::ZeroNorm(i));
                }
            }
        }
        Ok(Prefix { vectors })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn truncated(&self, n: usize) -> Prefix {
        Prefix {
            vectors: self.vectors.iter().take(n).cloned().collect(),
        }
    }

    /// Reads a JSON prefix (`{"vectors": [...]}` or a bare array of rows),
    /// falling back to whitespace-separated numbers, one vector per line.
    pub fn parse(text: &str) -> Result<Prefix> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') || trimmed.starts_with('[') {
            return Ok(serde_json::from_str(text)?);
        }
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: format!("{t:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Prefix::new(rows)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Drops tail vectors of the longer prefix so both have the same length.
pub fn truncate_pair(p: &Prefix, q: &Prefix) -> (Prefix, Prefix) {
    let n = p.len().min(q.len());
    (p.truncated(n), q.truncated(n))
}

/// `m[i][j] = cos(p_i, q_j)`.
pub fn cosine_matrix(p: &Prefix, q: &Prefix) -> Result<Vec<Vec<f64>>> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if !p.is_empty() && p.dim() != q.dim() {
        return Err(Error::Dimension(format!("{} vs {}", p.dim(), q.dim())));
    }
    let qn: Vec<f64> = q.vectors.iter().map(|v| norm(v)).collect();
    Ok(p.vectors
        .iter()
        .map(|a| {
            let an = norm(a);
            q.vectors
                .iter()
                .zip(&qn)
                .map(|(b, bn)| {
                    (a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (an * bn)).clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub score: f64,
    /// `permutation[i]` is the position of `q` matched to position `i` of `p`.
    pub permutation: Vec<usize>,
}

fn matching_score(m: &[Vec<f64>], perm: &[usize]) -> f64 {
    if perm.is_empty() {
        return 1.0;
    }
    perm.iter().enumerate().map(|(i, &j)| m[i][j]).sum::<f64>() / perm.len() as f64
}

/// Maximum-weight perfect matching on a square matrix (Hungarian method with
/// potentials, O(n^3)).
pub fn max_weight_assignment(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| -w[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = none)
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

pub fn prefix_similarity_exact(p: &Prefix, q: &Prefix) -> Result<Similarity> {
    let m = cosine_matrix(p, q)?;
    let permutation = max_weight_assignment(&m);
    Ok(Similarity {
        score: matching_score(&m, &permutation),
        permutation,
    })
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn sinkhorn_rounds(log_k: &mut [Vec<f64>], rows: &[usize], cols: &[usize], iters: usize) {
    for _ in 0..iters {
        for &i in rows {
            let z = log_sum_exp(cols.iter().map(|&j| log_k[i][j]));
            cols.iter().for_each(|&j| log_k[i][j] -= z);
        }
        for &j in cols {
            let z = log_sum_exp(rows.iter().map(|&i| log_k[i][j]));
            rows.iter().for_each(|&i| log_k[i][j] -= z);
        }
    }
}

fn best_free(row: &[f64], cols: &[usize]) -> usize {
    cols.iter()
        .copied()
        .fold(None, |best: Option<usize>, j| match best {
            Some(b) if row[b] >= row[j] => Some(b),
            _ => Some(j),
        })
        .expect("a free column remains")
}

fn sinkhorn_greedy(
    p: &Prefix,
    q: &Prefix,
    temperature: f64,
    iters: usize,
    rebalance: bool,
) -> Result<Similarity> {
    if temperature.is_nan() || temperature <= 0.0 || iters == 0 {
        return Err(Error::Config(format!(
            "need temperature > 0 and iters >= 1, got {temperature} and {iters}"
        )));
    }
    let m = cosine_matrix(p, q)?;
    let n = m.len();
    let mut log_k: Vec<Vec<f64>> = m
        .iter()
        .map(|r| r.iter().map(|c| c / temperature).collect())
        .collect();
    let mut cols: Vec<usize> = (0..n).collect();
    sinkhorn_rounds(&mut log_k, &(0..n).collect::<Vec<_>>(), &cols, iters);
    let mut permutation = Vec::with_capacity(n);
    for i in 0..n {
        let j = best_free(&log_k[i], &cols);
        cols.retain(|&c| c != j);
        permutation.push(j);
        if rebalance && cols.len() > 1 {
            sinkhorn_rounds(&mut log_k, &((i + 1)..n).collect::<Vec<_>>(), &cols, iters);
        }
    }
    Ok(Similarity {
        score: matching_score(&m, &permutation),
        permutation,
    })
}

/// Soft assignment by log-domain Sinkhorn scaling of `exp(cos / temperature)`,
/// hardened by letting each position of `p` in turn take its best free
/// position of `q`. After every pick the remaining rows and columns are
/// rescaled, so later picks follow the assignment already committed to.
pub fn prefix_similarity_sinkhorn(
    p: &Prefix,
    q: &Prefix,
    temperature: f64,
    iters: usize,
) -> Result<Similarity> {
    sinkhorn_greedy(p, q, temperature, iters, true)
}

/// Single Sinkhorn pass followed by plain sequential greedy selection.
pub fn prefix_similarity_sinkhorn_plain(
    p: &Prefix,
    q: &Prefix,
    temperature: f64,
    iters: usize,
) -> Result<Similarity> {
    sinkhorn_greedy(p, q, temperature, iters, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sinkhorn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub method: Method,
    pub temperature: f64,
    pub iters: usize,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            method: Method::Exact,
            temperature: DEFAULT_TEMPERATURE,
            iters: DEFAULT_SINKHORN_ITERS,
        }
    }
}

impl SimilarityConfig {
    /// Truncates to equal length, then applies the configured method.
    pub fn similarity(&self, p: &Prefix, q: &Prefix) -> Result<Similarity> {
        let (p, q) = truncate_pair(p, q);
        match self.method {
            Method::Exact => prefix_similarity_exact(&p, &q),
            Method::Sinkhorn => prefix_similarity_sinkhorn(&p, &q, self.temperature, self.iters),
        }
    }
}

/// Linear transition embedder exported by the trainer: each row becomes
/// `W [E_state(src); E_sym(in); E_sym(out); E_state(dst); E_final(flag)] + bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearEmbedder {
    pub state: Vec<Vec<f64>>,
    pub symbol: Vec<Vec<f64>>,
    pub final_flag: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    #[serde(default)]
    pub bias: Option<Vec<f64>>,
}

impl LinearEmbedder {
    pub fn from_json(text: &str) -> Result<Self> {
        let e: LinearEmbedder = serde_json::from_str(text)?;
        e.validate()?;
        Ok(e)
    }

    fn table_dim(name: &str, t: &[Vec<f64>], min_rows: usize) -> Result<usize> {
        if t.len() < min_rows {
            return Err(Error::Dimension(format!(
                "{name} table has {} rows, need {min_rows}",
                t.len()
            )));
        }
        let d = t[0].len();
        if t.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension(format!(
                "{name} table rows differ in width"
            )));
        }
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ds = Self::table_dim("state", &self.state, STATE_CAPACITY as usize)?;
        let dy = Self::table_dim(
            "symbol",
            &self.symbol,
            SymbolTable::global().capacity() as usize,
        )?;
        let df = Self::table_dim("final", &self.final_flag, 3)?;
        let width = 2 * ds + 2 * dy + df;
        let out = Self::table_dim("w", &self.w, 1)?;
        if out != width {
            return Err(Error::Dimension(format!(
                "w has {out} columns, concatenated embedding has {width}"
            )));
        }
        if let Some(b) = &self.bias {
            if b.len() != self.w.len() {
                return Err(Error::Dimension(format!(
                    "bias has {} entries, w has {} rows",
                    b.len(),
                    self.w.len()
                )));
            }
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.w.len()
    }

    pub fn embed_row(&self, row: &Row) -> Vec<f64> {
        let [src, input, output, dst, fin] = row.map(|x| x as usize);
        let concat: Vec<f64> = [
            &self.state[src],
            &self.symbol[input],
            &self.symbol[output],
            &self.state[dst],
            &self.final_flag[fin],
        ]
        .into_iter()
        .flatten()
        .copied()
        .collect();
        self.w
            .iter()
            .enumerate()
            .map(|(k, wr)| {
                wr.iter().zip(&concat).map(|(a, b)| a * b).sum::<f64>()
                    + self.bias.as_ref().map_or(0.0, |b| b[k])
            })
            .collect()
    }

    pub fn embed(&self, enc: &PrefixEncoding) -> Result<Prefix> {
        Prefix::new(enc.content().iter().map(|r| self.embed_row(r)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub gold_score: f64,
    pub best_distractor_score: f64,
    pub best_distractor: Option<usize>,
    pub distractor_scores: Vec<f64>,
    /// Strictly more similar to the gold encoding than to every distractor.
    pub gold_wins: bool,
    /// Number of distractors scoring at least as high as the gold encoding.
    pub rank: usize,
}

/// Compares a learned prefix with the embedded gold encoding and with every
/// distractor encoding.
pub fn distractor_discrimination<F>(
    learned: &Prefix,
    gold: &PrefixEncoding,
    distractors: &[PrefixEncoding],
    embed: F,
    cfg: &SimilarityConfig,
    exec: Execution,
) -> Result<DiscriminationReport>
where
    F: Fn(&PrefixEncoding) -> Result<Prefix> + Sync + Send,
{
    let gold_score = cfg.similarity(learned, &embed(gold)?)?.score;
    let distractor_scores = exec.try_map(distractors.len(), |i| {
        Ok::<_, Error>(cfg.similarity(learned, &embed(&distractors[i])?)?.score)
    })?;
    let best = distractor_scores.iter().enumerate().fold(
        None,
        |b: Option<(usize, f64)>, (i, &s)| match b {
            Some((_, bs)) if bs >= s => b,
            _ => Some((i, s)),
        },
    );
    let rank = distractor_scores
        .iter()
        .filter(|&&s| s >= gold_score)
        .count();
    Ok(DiscriminationReport {
        gold_score,
        best_distractor_score: best.map_or(f64::NEG_INFINITY, |b| b.1),
        best_distractor: best.map(|b| b.0),
        gold_wins: best.is_none_or(|b| gold_score > b.1),
        rank,
        distractor_scores,
    })
}
