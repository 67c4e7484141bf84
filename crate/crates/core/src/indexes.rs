//! Binary segregation indexes over per-unit minority/total counts.
//!
//! Notation: unit `i` has population `t_i` of which `m_i` belong to the
//! minority; `T = Σ t_i`, `M = Σ m_i`, `P = M / T`, `p_i = m_i / t_i`.
//! Every index is defined only when `0 < M < T`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ATKINSON_B: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndexKind {
    /// Dissimilarity.
    #[serde(rename = "D")]
    Dissimilarity,
    #[serde(rename = "G")]
    Gini,
    /// Information (entropy) index.
    #[serde(rename = "H")]
    Information,
    #[serde(rename = "ISO")]
    Isolation,
    #[serde(rename = "INT")]
    Interaction,
    #[serde(rename = "ATK")]
    Atkinson,
}

impl IndexKind {
    pub const ALL: [IndexKind; 6] = [
        IndexKind::Dissimilarity,
        IndexKind::Gini,
        IndexKind::Information,
        IndexKind::Isolation,
        IndexKind::Interaction,
        IndexKind::Atkinson,
    ];

    pub fn code(self) -> &'static str {
        match self {
            IndexKind::Dissimilarity => "D",
            IndexKind::Gini => "G",
            IndexKind::Information => "H",
            IndexKind::Isolation => "ISO",
            IndexKind::Interaction => "INT",
            IndexKind::Atkinson => "ATK",
        }
    }

    /// Parses a comma-separated list such as `D,G,ATK` into canonical order.
    pub fn parse_list(s: &str) -> Result<Vec<IndexKind>, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            out.push(part.parse()?);
        }
        if out.is_empty() {
            return Err("empty index list".to_string());
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for IndexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.code() == s)
            .ok_or_else(|| format!("unknown index `{s}` (expected one of D,G,H,ISO,INT,ATK)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IndexError {
    /// `M = 0` or `M = T`: no minority/majority contrast to measure.
    #[error("index undefined: minority is empty or the whole population")]
    UndefinedCell,
    #[error("Atkinson shape parameter must lie strictly between 0 and 1, got {0}")]
    InvalidShape(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountsError {
    #[error("unit {unit}: minority count {minority} exceeds total {total}")]
    MinorityExceedsTotal { unit: usize, minority: u64, total: u64 },
    #[error("length mismatch: {0} totals vs {1} minority counts")]
    LengthMismatch(usize, usize),
    #[error("total population is zero")]
    EmptyPopulation,
}

/// Per-unit counts; units with zero population are dropped on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsVector {
    totals: Vec<u64>,
    minority: Vec<u64>,
    total: u64,
    minority_total: u64,
}

impl CountsVector {
    pub fn new(totals: &[u64], minority: &[u64]) -> Result<Self, CountsError> {
        if totals.len() != minority.len() {
            return Err(CountsError::LengthMismatch(totals.len(), minority.len()));
        }
        let mut t = Vec::with_capacity(totals.len());
        let mut m = Vec::with_capacity(totals.len());
        for (unit, (&ti, &mi)) in totals.iter().zip(minority).enumerate() {
            if mi > ti {
                return Err(CountsError::MinorityExceedsTotal {
                    unit,
                    minority: mi,
                    total: ti,
                });
            }
            if ti > 0 {
                t.push(ti);
                m.push(mi);
            }
        }
        let total: u64 = t.iter().sum();
        if total == 0 {
            return Err(CountsError::EmptyPopulation);
        }
        let minority_total = m.iter().sum();
        Ok(CountsVector {
            totals: t,
            minority: m,
            total,
            minority_total,
        })
    }

    pub fn units(&self) -> usize {
        self.totals.len()
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn minority(&self) -> &[u64] {
        &self.minority
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn minority_total(&self) -> u64 {
        self.minority_total
    }

    pub fn minority_share(&self) -> f64 {
        self.minority_total as f64 / self.total as f64
    }

    pub fn is_defined(&self) -> bool {
        self.minority_total > 0 && self.minority_total < self.total
    }

    fn require_defined(&self) -> Result<(), IndexError> {
        if self.is_defined() {
            Ok(())
        } else {
            Err(IndexError::UndefinedCell)
        }
    }

    fn pairs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.totals.iter().copied().zip(self.minority.iter().copied())
    }
}

/// `½ Σ |m_i/M − (t_i−m_i)/(T−M)|`.
pub fn dissimilarity(c: &CountsVector) -> Result<f64, IndexError> {
    c.require_defined()?;
    let big_m = c.minority_total as f64;
    let majority = (c.total - c.minority_total) as f64;
    let sum: f64 = c
        .pairs()
        .map(|(t, m)| (m as f64 / big_m - (t - m) as f64 / majority).abs())
        .sum();
    Ok((sum / 2.0).clamp(0.0, 1.0))
}

/// `Σ_i Σ_j t_i t_j |p_i − p_j| / (2 T² P (1−P))`.
///
/// Evaluated in O(n log n): with units sorted by `p`, the pair sum equals
/// `Σ_{i<j} (m_j t_i − m_i t_j)`, which is an exact integer, and the
/// denominator reduces to `M (T − M)`.
pub fn gini(c: &CountsVector) -> Result<f64, IndexError> {
    c.require_defined()?;
    let mut units: Vec<(u64, u64)> = c.pairs().collect();
    units.sort_unstable_by(|&(ta, ma), &(tb, mb)| {
        (ma as u128 * tb as u128).cmp(&(mb as u128 * ta as u128))
    });
    let mut numerator: u128 = 0;
    let (mut t_before, mut m_before) = (0u128, 0u128);
    for (t, m) in units {
        let (t, m) = (t as u128, m as u128);
        // sorted order makes every term non-negative
        numerator += m * t_before - t * m_before;
        t_before += t;
        m_before += m;
    }
    let denominator = c.minority_total as u128 * (c.total - c.minority_total) as u128;
    Ok(numerator as f64 / denominator as f64)
}

fn binary_entropy(p: f64, q: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(q)
}

/// `Σ t_i (E − E_i) / (T E)` with binary entropies `E` and `E_i`.
pub fn information(c: &CountsVector) -> Result<f64, IndexError> {
    c.require_defined()?;
    let total = c.total as f64;
    let e = binary_entropy(
        c.minority_total as f64 / total,
        (c.total - c.minority_total) as f64 / total,
    );
    let sum: f64 = c
        .pairs()
        .map(|(t, m)| {
            let tf = t as f64;
            let ei = binary_entropy(m as f64 / tf, (t - m) as f64 / tf);
            tf * (e - ei)
        })
        .sum();
    Ok((sum / (total * e)).clamp(0.0, 1.0))
}

/// `Σ (m_i/M)(m_i/t_i)`.
pub fn isolation(c: &CountsVector) -> Result<f64, IndexError> {
    c.require_defined()?;
    let big_m = c.minority_total as f64;
    let sum: f64 = c
        .pairs()
        .map(|(t, m)| (m as f64 / big_m) * (m as f64 / t as f64))
        .sum();
    Ok(sum.clamp(0.0, 1.0))
}

/// `Σ (m_i/M)((t_i−m_i)/t_i)`.
pub fn interaction(c: &CountsVector) -> Result<f64, IndexError> {
    c.require_defined()?;
    let big_m = c.minority_total as f64;
    let sum: f64 = c
        .pairs()
        .map(|(t, m)| (m as f64 / big_m) * ((t - m) as f64 / t as f64))
        .sum();
    Ok(sum.clamp(0.0, 1.0))
}

/// `1 − (P/(1−P)) [Σ (1−p_i)^{1−b} p_i^b t_i / (P T)]^{1/(1−b)}`.
pub fn atkinson(c: &CountsVector, b: f64) -> Result<f64, IndexError> {
    if !(b > 0.0 && b < 1.0) {
        return Err(IndexError::InvalidShape(b));
    }
    c.require_defined()?;
    let total = c.total as f64;
    let big_m = c.minority_total as f64;
    let share = big_m / total;
    let rest = (c.total - c.minority_total) as f64 / total;
    let sum: f64 = c
        .pairs()
        .map(|(t, m)| {
            let tf = t as f64;
            let p = m as f64 / tf;
            let q = (t - m) as f64 / tf;
            q.powf(1.0 - b) * p.powf(b) * tf
        })
        .sum();
    let bracket = sum / big_m;
    let value = 1.0 - (share / rest) * bracket.powf(1.0 / (1.0 - b));
    Ok(value.clamp(0.0, 1.0))
}

pub fn compute(kind: IndexKind, c: &CountsVector, atkinson_b: f64) -> Result<f64, IndexError> {
    match kind {
        IndexKind::Dissimilarity => dissimilarity(c),
        IndexKind::Gini => gini(c),
        IndexKind::Information => information(c),
        IndexKind::Isolation => isolation(c),
        IndexKind::Interaction => interaction(c),
        IndexKind::Atkinson => atkinson(c, atkinson_b),
    }
}

/// Total order on index values used for ranking; undefined sorts last.
pub(crate) fn cmp_desc(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}
