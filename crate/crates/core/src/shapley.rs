//! Model-agnostic Shapley attribution.
//!
//! Convention: a coalition vector `z` marks with `z_j = 1` the features that
//! have been REPLACED by their background value (here: ground-truth-quality
//! data), not the features that are present. Under this convention
//! `phi0 = f(x)` (nothing replaced) and `phi0 + Σ phi_j = f(fully replaced)`.
//!
//! Three modes are provided: exact enumeration over all `2^M` coalitions,
//! the kernel-weighted least-squares estimator (whose full enumeration
//! provably reproduces the exact values), and an ordinary least-squares fit
//! over continuous perturbation levels in `[0,1]^M`. The kernel weight is not
//! defined off the hypercube corners, so the continuous mode deliberately uses
//! uniform weights.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::solve_dense;

#[derive(Debug, Error, PartialEq)]
pub enum ShapleyError {
    #[error(
        "coalition of size {size} of {m} features has infinite weight; handle it as a constraint"
    )]
    DegenerateCoalition { size: usize, m: usize },
    #[error("need at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("{0} features exceed the exact-enumeration limit of 20")]
    TooManyFeatures(usize),
    #[error("weighted least-squares system is singular (sampled coalitions are rank-deficient)")]
    SingularSystem,
    #[error("regression is rank-deficient")]
    RankDeficient,
    #[error("dataset rows must be unique on the level vector")]
    DuplicateRows,
    #[error("need at least {needed} rows, got {got}")]
    NotEnoughRows { needed: usize, got: usize },
    #[error("feature/background length mismatch")]
    LengthMismatch,
    #[error("unknown output column `{0}`")]
    UnknownOutput(String),
}

/// SHAP kernel weight for a coalition of size `s` out of `m` features:
/// `(m-1) / (C(m,s) * s * (m-s))`. Sizes 0 and `m` have infinite weight and
/// must be routed to equality constraints instead.
pub fn shap_kernel_weight(m: usize, s: usize) -> Result<f64, ShapleyError> {
    if m < 2 {
        return Err(ShapleyError::TooFewFeatures(m));
    }
    if s == 0 || s >= m {
        return Err(ShapleyError::DegenerateCoalition { size: s, m });
    }
    let binom = binomial(m, s);
    Ok((m as f64 - 1.0) / (binom * s as f64 * (m - s) as f64))
}

fn binomial(m: usize, s: usize) -> f64 {
    let s = s.min(m - s);
    let mut acc = 1.0f64;
    for i in 0..s {
        acc = acc * (m - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExplanationMode {
    ExactEnum,
    KernelWls,
    ContinuousFit,
}

/// Attribution of one model output to the input features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapleyExplanation {
    /// Model value with nothing replaced (original input).
    pub phi0: f64,
    pub phi: Vec<f64>,
    pub output_name: String,
    pub mode: ExplanationMode,
}

impl ShapleyExplanation {
    /// Predicted model value at coalition/level vector `z`.
    pub fn predict(&self, z: &[f64]) -> f64 {
        self.phi0 + self.phi.iter().zip(z).map(|(p, z)| p * z).sum::<f64>()
    }
}

/// One weighted regression row: which features are replaced, the model value
/// at the corresponding hybrid input, and the kernel weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoalitionSample {
    pub z: Vec<bool>,
    pub f_value: f64,
    pub weight: f64,
}

fn hybrid(x: &[f64], b: &[f64], mask: u32) -> Vec<f64> {
    x.iter()
        .zip(b)
        .enumerate()
        .map(|(j, (&xj, &bj))| if mask >> j & 1 == 1 { bj } else { xj })
        .collect()
}

/// Classical Shapley values over the replacement game by full enumeration of
/// all `2^M` coalitions (M <= 20).
pub fn exact_shapley(
    model: impl Fn(&[f64]) -> f64,
    x: &[f64],
    b: &[f64],
    output_name: &str,
) -> Result<ShapleyExplanation, ShapleyError> {
    let m = x.len();
    if m < 2 {
        return Err(ShapleyError::TooFewFeatures(m));
    }
    if m > 20 {
        return Err(ShapleyError::TooManyFeatures(m));
    }
    if b.len() != m {
        return Err(ShapleyError::LengthMismatch);
    }
    let n_masks = 1usize << m;
    let mut values = Vec::with_capacity(n_masks);
    for mask in 0..n_masks as u32 {
        values.push(model(&hybrid(x, b, mask)));
    }
    // w(s) = s! (m-s-1)! / m!, computed exactly in u128 and converted once.
    let mut fact = vec![1u128; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as u128;
    }
    let weight_for: Vec<f64> = (0..m)
        .map(|s| (fact[s] * fact[m - 1 - s]) as f64 / fact[m] as f64)
        .collect();

    let mut phi = vec![0.0f64; m];
    for (j, phi_j) in phi.iter_mut().enumerate() {
        let bit = 1u32 << j;
        for mask in 0..n_masks as u32 {
            if mask & bit != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            *phi_j += weight_for[s] * (values[(mask | bit) as usize] - values[mask as usize]);
        }
    }
    Ok(ShapleyExplanation {
        phi0: values[0],
        phi,
        output_name: output_name.to_string(),
        mode: ExplanationMode::ExactEnum,
    })
}

/// Coalition enumeration strategy for [`kernel_shap`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum CoalitionEnumeration {
    Full,
    Sampled { n: usize, seed: u64 },
}

/// Kernel SHAP: weighted least squares over non-degenerate coalitions with the
/// two degenerate coalitions imposed as equality constraints
/// (`g(all-0) = f(x)`, `g(all-1) = f(fully replaced)`).
///
/// With full enumeration the solution equals [`exact_shapley`]. Sampled
/// enumeration draws coalition sizes from the aggregated kernel distribution
/// and subsets uniformly within each size, weighting duplicates by count.
pub fn kernel_shap(
    model: impl Fn(&[f64]) -> f64,
    x: &[f64],
    b: &[f64],
    enumeration: CoalitionEnumeration,
    output_name: &str,
) -> Result<ShapleyExplanation, ShapleyError> {
    let m = x.len();
    if m < 2 {
        return Err(ShapleyError::TooFewFeatures(m));
    }
    if b.len() != m {
        return Err(ShapleyError::LengthMismatch);
    }

    let f_x = model(x);
    let f_replaced = model(b);
    let delta = f_replaced - f_x;

    // Collect (mask, weight) pairs.
    let rows: Vec<(u32, f64)> = match enumeration {
        CoalitionEnumeration::Full => {
            if m > 20 {
                return Err(ShapleyError::TooManyFeatures(m));
            }
            let full = (1u32 << m) - 1;
            (1..full)
                .map(|mask| {
                    let s = mask.count_ones() as usize;
                    Ok((mask, shap_kernel_weight(m, s)?))
                })
                .collect::<Result<_, ShapleyError>>()?
        }
        CoalitionEnumeration::Sampled { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Draw coalition sizes from the aggregated kernel distribution
            // (total size-s weight is proportional to (m-1)/(s(m-s))), then a
            // uniform subset of that size. Distinct masks enter the regression
            // once, carrying their exact kernel weight, so the estimator
            // reduces to the full enumeration as coverage completes.
            let size_weights: Vec<f64> = (1..m)
                .map(|s| (m as f64 - 1.0) / (s as f64 * (m - s) as f64))
                .collect();
            let total: f64 = size_weights.iter().sum();
            let mut seen = std::collections::HashSet::new();
            let mut rows: Vec<(u32, f64)> = Vec::new();
            let mut indices: Vec<usize> = (0..m).collect();
            for _ in 0..n {
                let mut pick = rng.random_range(0.0..total);
                let mut s = 1usize;
                for (i, w) in size_weights.iter().enumerate() {
                    if pick < *w {
                        s = i + 1;
                        break;
                    }
                    pick -= w;
                }
                indices.shuffle(&mut rng);
                let mut mask = 0u32;
                for &j in indices.iter().take(s) {
                    mask |= 1 << j;
                }
                if seen.insert(mask) {
                    rows.push((mask, shap_kernel_weight(m, s)?));
                }
            }
            rows.sort_by_key(|(mask, _)| *mask);
            rows
        }
    };

    if rows.len() < m.saturating_sub(1) {
        return Err(ShapleyError::SingularSystem);
    }

    // Eliminate the constraints: phi0 = f(x) and phi_{m-1} = delta - sum(u).
    // Unknowns u_j = phi_j for j < m-1. Row residual:
    //   f(z) - phi0 - delta*z_last - sum_j u_j (z_j - z_last)
    let n_unknown = m - 1;
    let mut ata = vec![0.0f64; n_unknown * n_unknown];
    let mut atb = vec![0.0f64; n_unknown];
    for &(mask, w) in &rows {
        let f_z = model(&hybrid(x, b, mask));
        let z_last = (mask >> (m - 1) & 1) as f64;
        let y = f_z - f_x - delta * z_last;
        let a_row: Vec<f64> = (0..n_unknown)
            .map(|j| ((mask >> j & 1) as f64) - z_last)
            .collect();
        for i in 0..n_unknown {
            if a_row[i] == 0.0 {
                continue;
            }
            for k in 0..n_unknown {
                ata[i * n_unknown + k] += w * a_row[i] * a_row[k];
            }
            atb[i] += w * a_row[i] * y;
        }
    }
    let u = solve_dense(&ata, &atb, n_unknown).map_err(|_| ShapleyError::SingularSystem)?;
    let mut phi = u;
    let tail = delta - phi.iter().sum::<f64>();
    phi.push(tail);

    Ok(ShapleyExplanation {
        phi0: f_x,
        phi,
        output_name: output_name.to_string(),
        mode: ExplanationMode::KernelWls,
    })
}

/// One perturbation observation: quality levels per channel and the resulting
/// output metrics (stored min-max normalized; see [`PerturbationDataset`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRow {
    pub levels: Vec<f64>,
    pub outputs: Vec<f64>,
}

/// Perturbation-level dataset with per-output normalization constants.
///
/// Output values in `rows` are min-max normalized; `norm` records the raw
/// (min, max) per output column so fits can report raw-scale coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationDataset {
    pub channels: Vec<String>,
    pub outputs: Vec<String>,
    pub rows: Vec<DatasetRow>,
    pub norm: Vec<(f64, f64)>,
}

impl PerturbationDataset {
    /// Assemble a dataset from raw observations, deduplicating rows on the
    /// level vector and normalizing each output column to [0, 1].
    pub fn from_raw(
        channels: Vec<String>,
        outputs: Vec<String>,
        raw_rows: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self, ShapleyError> {
        let mut seen = std::collections::HashSet::new();
        let mut uniq: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(raw_rows.len());
        for (levels, outs) in raw_rows {
            if levels.len() != channels.len() || outs.len() != outputs.len() {
                return Err(ShapleyError::LengthMismatch);
            }
            let key: Vec<u64> = levels.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                uniq.push((levels, outs));
            }
        }
        if uniq.is_empty() {
            return Err(ShapleyError::NotEnoughRows { needed: 1, got: 0 });
        }
        let n_out = outputs.len();
        let mut norm = vec![(f64::INFINITY, f64::NEG_INFINITY); n_out];
        for (_, outs) in &uniq {
            for (k, v) in outs.iter().enumerate() {
                norm[k].0 = norm[k].0.min(*v);
                norm[k].1 = norm[k].1.max(*v);
            }
        }
        let rows = uniq
            .into_iter()
            .map(|(levels, outs)| DatasetRow {
                levels,
                outputs: outs
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let (lo, hi) = norm[k];
                        if hi > lo {
                            (v - lo) / (hi - lo)
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            })
            .collect();
        Ok(PerturbationDataset {
            channels,
            outputs,
            rows,
            norm,
        })
    }

    pub fn output_index(&self, name: &str) -> Result<usize, ShapleyError> {
        self.outputs
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| ShapleyError::UnknownOutput(name.to_string()))
    }

    /// Raw-scale value of one normalized cell.
    pub fn denormalize(&self, output_idx: usize, v: f64) -> f64 {
        let (lo, hi) = self.norm[output_idx];
        lo + v * (hi - lo)
    }
}

/// Ordinary least squares of the named output against the level channels with
/// intercept and uniform weights (the SHAP kernel is undefined off the
/// hypercube corners, so continuous levels get no kernel weighting).
///
/// The fit runs on the normalized column; the returned coefficients are mapped
/// back to the raw output scale using the recorded normalization constants, so
/// `phi0` is the raw predicted output at level 0 and downstream allocation can
/// compare against raw-rate requirements.
pub fn fit_perturbation_linear(
    ds: &PerturbationDataset,
    output_name: &str,
) -> Result<ShapleyExplanation, ShapleyError> {
    let m = ds.channels.len();
    let needed = m + 1;
    if ds.rows.len() < needed {
        return Err(ShapleyError::NotEnoughRows {
            needed,
            got: ds.rows.len(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for row in &ds.rows {
        let key: Vec<u64> = row.levels.iter().map(|v| v.to_bits()).collect();
        if !seen.insert(key) {
            return Err(ShapleyError::DuplicateRows);
        }
    }
    let out_idx = ds.output_index(output_name)?;

    let n_unknown = m + 1;
    let mut ata = vec![0.0f64; n_unknown * n_unknown];
    let mut atb = vec![0.0f64; n_unknown];
    for row in &ds.rows {
        let mut design = Vec::with_capacity(n_unknown);
        design.push(1.0);
        design.extend_from_slice(&row.levels);
        let y = row.outputs[out_idx];
        for i in 0..n_unknown {
            for k in 0..n_unknown {
                ata[i * n_unknown + k] += design[i] * design[k];
            }
            atb[i] += design[i] * y;
        }
    }
    let coefs = solve_dense(&ata, &atb, n_unknown).map_err(|_| ShapleyError::RankDeficient)?;

    let (lo, hi) = ds.norm[out_idx];
    let span = hi - lo;
    let phi0 = lo + coefs[0] * span;
    let phi = coefs[1..].iter().map(|c| c * span).collect();
    Ok(ShapleyExplanation {
        phi0,
        phi,
        output_name: output_name.to_string(),
        mode: ExplanationMode::ContinuousFit,
    })
}
