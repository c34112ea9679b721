//! Scale constants and the quantities derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Relative tolerance used when rounding real-valued scales up to integers.
///
/// `10^6^(1/3)` evaluates to `99.99999999999997` in binary floating point; a
/// plain `ceil` would turn it into 100 here and 101 elsewhere.
const SNAP_TOLERANCE: f64 = 1e-9;

/// Ceiling that treats values within floating-point noise of an integer as
/// that integer.
pub fn snapped_ceil(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= SNAP_TOLERANCE * nearest.abs().max(1.0) {
        nearest.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// `n^e` for a real exponent.
pub fn real_pow(n: u64, exponent: f64) -> f64 {
    (n as f64).powf(exponent)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u64,
    pub k: u32,
    /// Disjointness density constant, in (0, 1].
    pub c: f64,
    /// Interval-width constant, in (0, 1).
    pub c1: f64,
    /// Block-width constant, in (0, 1).
    pub c2: f64,
    pub t_factor: u32,
    /// Number of players / intervals, `⌈t_factor · n^{1/k}⌉`.
    pub t: u64,
    /// Interval width and set size, `⌈c1 · n^{1-3/(2k)}⌉`.
    pub w: u64,
    /// Disjointness universe size, `⌈t·w/c⌉`.
    pub big_n: u64,
    /// Shared-randomness block width, `⌈c2 · n^{1-2/k}⌉`.
    pub w2: u64,
    pub num_blocks: u64,
}

impl Params {
    pub fn derive(n: u64, k: u32, c: f64, c1: f64, c2: f64, t_factor: u32) -> Result<Self> {
        if n < 16 {
            return Err(LabError::InvalidParams(format!("n = {n} must be at least 16")));
        }
        if k < 2 {
            return Err(LabError::InvalidParams(format!("k = {k} must be at least 2")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(LabError::InvalidParams(format!("c = {c} must be positive")));
        }
        if !(c1 > 0.0 && c1 < 1.0) {
            return Err(LabError::InvalidParams(format!("c1 = {c1} must lie in (0, 1)")));
        }
        if !(c2 > 0.0 && c2 < 1.0) {
            return Err(LabError::InvalidParams(format!("c2 = {c2} must lie in (0, 1)")));
        }
        if t_factor == 0 {
            return Err(LabError::InvalidParams("t_factor must be positive".into()));
        }

        let kf = f64::from(k);
        let t = snapped_ceil(f64::from(t_factor) * real_pow(n, 1.0 / kf));
        let w = snapped_ceil(c1 * real_pow(n, 1.0 - 3.0 / (2.0 * kf))).max(1);
        let big_n = snapped_ceil((t * w) as f64 / c);
        let w2 = snapped_ceil(c2 * real_pow(n, 1.0 - 2.0 / kf)).max(1);
        let num_blocks = n.div_ceil(w2);

        if t > n {
            return Err(LabError::InvalidScale(format!("t = {t} exceeds n = {n}")));
        }
        if w > n {
            return Err(LabError::InvalidScale(format!("w = {w} exceeds n = {n}")));
        }
        if big_n > n {
            return Err(LabError::InvalidScale(format!(
                "N = ceil(t*w/c) = {big_n} exceeds n = {n} (t = {t}, w = {w}, c = {c})"
            )));
        }
        if t * w > big_n {
            return Err(LabError::InvalidScale(format!(
                "t·w ≤ N violated: t·w = {} but N = {big_n} (c = {c} > 1)",
                t * w
            )));
        }
        if w2 > n {
            return Err(LabError::InvalidScale(format!("w2 = {w2} exceeds n = {n}")));
        }

        Ok(Self {
            n,
            k,
            c,
            c1,
            c2,
            t_factor,
            t,
            w,
            big_n,
            w2,
            num_blocks,
        })
    }

    /// Defaults for the end-to-end reduction at desk scale.
    ///
    /// `t_factor = 100` with `c1 = 0.05` aborts on essentially every draw at
    /// `n = 10^6` (thousands of triple overlaps among 10^4 intervals), so the
    /// defaults trade a smaller `t` and narrower intervals for a low abort rate
    /// while keeping the heavy element far above `(2n)^{1/k}`.
    pub fn reduction_defaults() -> Self {
        Self::derive(1_000_000, 3, 0.5, 0.002, 0.005, 15).expect("default params are feasible")
    }

    /// `n^{1/k}` as a real number.
    pub fn root(&self) -> f64 {
        real_pow(self.n, 1.0 / f64::from(self.k))
    }

    /// 1-based index of the shared-randomness block containing position `j`.
    pub fn block_of(&self, j: u64) -> u64 {
        (j - 1) / self.w2 + 1
    }
}
