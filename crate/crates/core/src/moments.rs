//! Frequency-moment ground truth.

use std::collections::HashMap;
use std::fmt;

use crate::error::{LabError, Result};

/// A finite stream of element identifiers, each at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    elements: Vec<u32>,
}

impl Stream {
    pub fn new(elements: Vec<u32>) -> Result<Self> {
        if elements.is_empty() {
            return Err(LabError::InvalidParams("stream must be nonempty".into()));
        }
        if elements.contains(&0) {
            return Err(LabError::InvalidParams("element identifiers start at 1".into()));
        }
        Ok(Self { elements })
    }

    /// A stream whose identifiers must all lie in `[2n]`.
    pub fn with_universe(elements: Vec<u32>, n: u64) -> Result<Self> {
        let stream = Self::new(elements)?;
        if let Some(&bad) = stream.elements.iter().find(|&&e| u64::from(e) > 2 * n) {
            return Err(LabError::InvalidParams(format!("element {bad} outside [2n] = [{}]", 2 * n)));
        }
        Ok(stream)
    }

    pub fn elements(&self) -> &[u32] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn max_element(&self) -> u32 {
        self.elements.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyVector {
    counts: HashMap<u32, u64>,
    total: u64,
}

impl FrequencyVector {
    pub fn count(&self, element: u32) -> u64 {
        self.counts.get(&element).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counts.iter().map(|(&e, &c)| (e, c))
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }
}

pub fn frequency_vector(stream: &Stream) -> FrequencyVector {
    let mut counts = HashMap::with_capacity(stream.len());
    for &e in stream.elements() {
        *counts.entry(e).or_insert(0u64) += 1;
    }
    FrequencyVector {
        counts,
        total: stream.len() as u64,
    }
}

/// `f^k` with overflow detection.
pub fn checked_power(f: u64, k: u32) -> Option<u128> {
    u128::from(f).checked_pow(k)
}

pub fn fk_of_counts(counts: impl IntoIterator<Item = u64>, k: u32) -> Result<u128> {
    counts.into_iter().try_fold(0u128, |acc, f| {
        checked_power(f, k)
            .and_then(|p| acc.checked_add(p))
            .ok_or_else(|| LabError::Overflow(format!("{f}^{k} does not fit in 128 bits")))
    })
}

/// `F_k = Σ f_i^k`.
pub fn exact_fk(stream: &Stream, k: u32) -> Result<u128> {
    if k < 1 {
        return Err(LabError::InvalidParams("k must be at least 1".into()));
    }
    let max = stream.max_element() as usize;
    if max <= 4 * stream.len() {
        let mut counts = vec![0u64; max + 1];
        for &e in stream.elements() {
            counts[e as usize] += 1;
        }
        return fk_of_counts(counts.into_iter().filter(|&c| c > 0), k);
    }
    fk_of_counts(frequency_vector(stream).counts.into_values(), k)
}

/// `m · (r^k − (r−1)^k)` for a sample whose tracked element has been seen
/// `r ≥ 1` times since (and including) the sampled position.
pub fn basic_term(stream_len: u64, r: u64, k: u32) -> Result<u128> {
    debug_assert!(r >= 1);
    let hi = checked_power(r, k);
    let lo = checked_power(r - 1, k);
    match (hi, lo) {
        (Some(hi), Some(lo)) => (hi - lo)
            .checked_mul(u128::from(stream_len))
            .ok_or_else(|| LabError::Overflow(format!("m·(r^k−(r−1)^k) with m={stream_len}, r={r}"))),
        _ => Err(LabError::Overflow(format!("{r}^{k} does not fit in 128 bits"))),
    }
}

/// The basic AMS estimate for a fixed 0-based start position.
///
/// Quadratic-time reference evaluation; used by tests as the oracle.
pub fn basic_estimate_at(stream: &Stream, k: u32, start: usize) -> Result<u128> {
    let elems = stream.elements();
    let target = elems[start];
    let r = elems[start..].iter().filter(|&&e| e == target).count() as u64;
    basic_term(elems.len() as u64, r, k)
}

/// A nonnegative rational estimate `sum / samples`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Estimate {
    pub sum: u128,
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: u128) -> Self {
        Self { sum: value, samples: 1 }
    }

    pub fn as_f64(&self) -> f64 {
        self.sum as f64 / self.samples as f64
    }

    /// Exact comparison `sum / samples > bound`.
    pub fn exceeds(&self, bound: u128) -> bool {
        match bound.checked_mul(u128::from(self.samples)) {
            Some(scaled) => self.sum > scaled,
            None => false,
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.samples == 1 {
            write!(f, "{}", self.sum)
        } else {
            write!(f, "{}", self.as_f64())
        }
    }
}
