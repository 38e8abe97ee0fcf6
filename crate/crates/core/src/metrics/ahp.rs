//! Analytic Hierarchy Process: principal-eigenvector weights from a
//! pairwise comparison matrix, with Saaty's consistency check.

use crate::error::{Error, Result};

/// Saaty's random consistency index for matrix orders 1..=10.
pub const RANDOM_INDEX: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];

/// Matrices with a consistency ratio above this are rejected.
pub const MAX_CONSISTENCY_RATIO: f64 = 0.1;

/// Criterion weights for (PV_CL, N_CLS, A_RoS, p_m, N_HC) when no
/// pairwise matrix is supplied.
pub const DEFAULT_WEIGHTS: [f64; 5] = [0.2, 0.3, 0.15, 0.2, 0.15];

#[derive(Debug, Clone, PartialEq)]
pub struct AhpWeights {
    pub weights: Vec<f64>,
    pub lambda_max: f64,
    pub consistency_index: f64,
    pub consistency_ratio: f64,
}

impl AhpWeights {
    /// Wraps fixed weights, checking positivity and unit sum.
    pub fn fixed(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::domain("weights must be positive"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("weights must sum to 1, got {sum}")));
        }
        Ok(AhpWeights {
            weights: weights.to_vec(),
            lambda_max: weights.len() as f64,
            consistency_index: 0.0,
            consistency_ratio: 0.0,
        })
    }
}

impl Default for AhpWeights {
    fn default() -> Self {
        AhpWeights::fixed(&DEFAULT_WEIGHTS).expect("default weights are valid")
    }
}

fn validate(matrix: &[Vec<f64>]) -> Result<usize> {
    let n = matrix.len();
    if n == 0 || n > RANDOM_INDEX.len() {
        return Err(Error::domain(format!(
            "pairwise matrix order {n} not in 1..=10"
        )));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::domain(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        for (j, &a) in row.iter().enumerate() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::domain(format!(
                    "entry ({}, {}) must be positive",
                    i + 1,
                    j + 1
                )));
            }
            if i == j && (a - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!("diagonal entry {} must be 1", i + 1)));
            }
            if (a * matrix[j][i] - 1.0).abs() > 1e-6 {
                return Err(Error::domain(format!(
                    "entries ({0}, {1}) and ({1}, {0}) are not reciprocal",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(n)
}

/// Principal eigenvector by power iteration, normalized to sum 1.
pub fn ahp_weights(matrix: &[Vec<f64>]) -> Result<AhpWeights> {
    let n = validate(matrix)?;
    let mut w = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..10_000 {
        for (i, row) in matrix.iter().enumerate() {
            next[i] = row.iter().zip(&w).map(|(a, x)| a * x).sum();
        }
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= sum);
        let delta = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut w, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    let lambda_max = matrix
        .iter()
        .zip(&w)
        .map(|(row, wi)| row.iter().zip(&w).map(|(a, x)| a * x).sum::<f64>() / wi)
        .sum::<f64>()
        / n as f64;
    let consistency_index = if n > 1 {
        ((lambda_max - n as f64) / (n as f64 - 1.0)).max(0.0)
    } else {
        0.0
    };
    let ri = RANDOM_INDEX[n - 1];
    let consistency_ratio = if ri > 0.0 {
        consistency_index / ri
    } else {
        0.0
    };
    if consistency_ratio > MAX_CONSISTENCY_RATIO {
        return Err(Error::Inconsistent {
            ratio: consistency_ratio,
        });
    }
    Ok(AhpWeights {
        weights: w,
        lambda_max,
        consistency_index,
        consistency_ratio,
    })
}

fn parse_rational(tok: &str) -> Option<f64> {
    match tok.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.parse().ok()?, b.parse().ok()?);
            (b != 0.0).then(|| a / b)
        }
        None => tok.parse().ok(),
    }
}

/// Whitespace-separated rows of positive rationals (`3`, `1/3`, `0.25`).
pub fn parse_pairwise(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let row = content
            .split_whitespace()
            .map(|t| {
                parse_rational(t).ok_or_else(|| Error::parse(idx + 1, format!("bad entry `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
