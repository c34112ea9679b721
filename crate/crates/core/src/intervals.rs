//! The `Cycle_{n,w}` interval family: sampling, intersection structure, the
//! segment decomposition of `[n]`, and the Monte-Carlo check of the overlap
//! lemma.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::params::{real_pow, snapped_ceil, Params};
use crate::seed::{rng_for, SeedTag};

/// A width-`w` interval of the cycle `[n]`, starting at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicInterval {
    pub start: u64,
    pub width: u64,
    pub modulus: u64,
}

impl CyclicInterval {
    pub fn new(start: u64, width: u64, modulus: u64) -> Result<Self> {
        if modulus == 0 || start == 0 || start > modulus || width == 0 || width > modulus {
            return Err(LabError::InvalidParams(format!(
                "interval (a={start}, w={width}, n={modulus}) out of range"
            )));
        }
        Ok(Self { start, width, modulus })
    }

    /// `b = ((a + w − 2) mod n) + 1`.
    pub fn end(&self) -> u64 {
        (self.start + self.width - 2) % self.modulus + 1
    }

    pub fn wraps(&self) -> bool {
        self.end() < self.start
    }

    pub fn contains(&self, j: u64) -> bool {
        j >= 1 && j <= self.modulus && (j + self.modulus - self.start) % self.modulus < self.width
    }

    /// Members in traversal order starting at `start`.
    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.width).map(move |o| (self.start - 1 + o) % self.modulus + 1)
    }

    /// 1-based rank of `j` in traversal order.
    pub fn rank(&self, j: u64) -> Result<u64> {
        if !self.contains(j) {
            return Err(LabError::NotMember {
                position: j,
                start: self.start,
                width: self.width,
                modulus: self.modulus,
            });
        }
        Ok((j + self.modulus - self.start) % self.modulus + 1)
    }
}

/// Why the protocol stopped before any communication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbortReason {
    WrappedInterval,
    TripleIntersection,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbortReason::WrappedInterval => "wrapped_interval",
            AbortReason::TripleIntersection => "triple_intersection",
        })
    }
}

/// Non-wrapping equal-width intervals ordered by end, then start, then draw
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortedIntervals {
    intervals: Vec<CyclicInterval>,
    modulus: u64,
    width: u64,
}

impl SortedIntervals {
    /// Sorts the intervals with the given starts; aborts if the smallest end
    /// is below `w`, which happens exactly when some interval wraps.
    pub fn from_starts(starts: &[u64], width: u64, modulus: u64) -> Result<std::result::Result<Self, AbortReason>> {
        let mut drawn = starts
            .iter()
            .enumerate()
            .map(|(i, &a)| CyclicInterval::new(a, width, modulus).map(|iv| (iv.end(), a, i, iv)))
            .collect::<Result<Vec<_>>>()?;
        drawn.sort_unstable_by_key(|&(b, a, i, _)| (b, a, i));
        if let Some(&(b1, ..)) = drawn.first() {
            if b1 < width {
                return Ok(Err(AbortReason::WrappedInterval));
            }
        }
        Ok(Ok(Self {
            intervals: drawn.into_iter().map(|(.., iv)| iv).collect(),
            modulus,
            width,
        }))
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn as_slice(&self) -> &[CyclicInterval] {
        &self.intervals
    }

    /// 1-based access, matching player indices.
    pub fn player(&self, i: usize) -> &CyclicInterval {
        &self.intervals[i - 1]
    }
}

/// Draws `t` independent uniform starts in `[n]`.
pub fn draw_starts(n: u64, t: u64, rng: &mut impl Rng) -> Vec<u64> {
    (0..t).map(|_| rng.gen_range(1..=n)).collect()
}

pub fn sample_intervals(params: &Params, seed: u64) -> std::result::Result<SortedIntervals, AbortReason> {
    let mut rng = rng_for(seed, SeedTag::Intervals, 0);
    let starts = draw_starts(params.n, params.t, &mut rng);
    SortedIntervals::from_starts(&starts, params.w, params.n).expect("starts drawn from [n]")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionStats {
    pub triple_exists: bool,
    pub overlapping_pair_count: u64,
    /// 1-based indices into the sorted order, `i1 < i2`.
    pub pairs: Vec<(usize, usize)>,
}

/// Intersection structure of sorted non-wrapping equal-width intervals.
///
/// With equal widths, order by end is order by start, so `I_i` meets `I_j`
/// (`i < j`) iff `a_j ≤ b_i`, and a point lies in three intervals iff
/// `a_{i+2} ≤ b_i` for some `i`.
pub fn intersection_stats(sorted: &SortedIntervals) -> IntersectionStats {
    let iv = sorted.as_slice();
    let mut pairs = Vec::new();
    for (i, left) in iv.iter().enumerate() {
        let b = left.end();
        for (j, right) in iv.iter().enumerate().skip(i + 1) {
            if right.start > b {
                break;
            }
            pairs.push((i + 1, j + 1));
        }
    }
    let triple_exists = iv.windows(3).any(|w| w[2].start <= w[0].end());
    IntersectionStats {
        triple_exists,
        overlapping_pair_count: pairs.len() as u64,
        pairs,
    }
}

/// An inclusive range `[lo, hi]`; empty when `lo == hi + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub lo: u64,
    pub hi: u64,
}

impl Span {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn contains(&self, j: u64) -> bool {
        self.lo <= j && j <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapClass {
    Easy,
    Doubled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    /// `A_i`, `0 ≤ i ≤ t`.
    Gap { index: usize, class: GapClass },
    /// `B_i`, `1 ≤ i ≤ t`.
    Solo { index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub span: Span,
}

/// `A_0, B_1, A_1, …, B_t, A_t` in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub n: u64,
    pub segments: Vec<Segment>,
}

impl Decomposition {
    pub fn gap(&self, i: usize) -> &Segment {
        &self.segments[2 * i]
    }

    pub fn solo(&self, i: usize) -> &Segment {
        &self.segments[2 * i - 1]
    }

    pub fn doubled_count(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| matches!(s.kind, SegmentKind::Gap { class: GapClass::Doubled, .. }))
            .count()
    }
}

/// Splits `[n]` into the gap segments `A_i` and solo segments `B_i`.
///
/// `A_i` is doubled when `b_i ≥ a_{i+1}`, so an endpoint shared by two
/// consecutive intervals is contested rather than lost.
pub fn decompose(sorted: &SortedIntervals) -> Result<Decomposition> {
    let n = sorted.modulus();
    let iv = sorted.as_slice();
    let t = iv.len();
    if iv.iter().any(CyclicInterval::wraps) {
        return Err(LabError::DecompositionGap("wrapping interval".into()));
    }
    // sentinels b_0 = 0, a_{t+1} = n + 1
    let a = |i: usize| if i == t + 1 { n + 1 } else { iv[i - 1].start };
    let b = |i: usize| if i == 0 { 0 } else { iv[i - 1].end() };

    let mut segments = Vec::with_capacity(2 * t + 1);
    for i in 0..=t {
        if i > 0 {
            let lo = a(i).max(b(i - 1) + 1);
            let hi = b(i).min(a(i + 1) - 1);
            segments.push(Segment {
                kind: SegmentKind::Solo { index: i },
                span: Span { lo, hi },
            });
        }
        let (class, span) = if b(i) >= a(i + 1) {
            (GapClass::Doubled, Span { lo: a(i + 1), hi: b(i) })
        } else {
            (GapClass::Easy, Span { lo: b(i) + 1, hi: a(i + 1) - 1 })
        };
        segments.push(Segment {
            kind: SegmentKind::Gap { index: i, class },
            span,
        });
    }
    let decomposition = Decomposition { n, segments };
    validate(&decomposition, sorted)?;
    Ok(decomposition)
}

fn validate(d: &Decomposition, sorted: &SortedIntervals) -> Result<()> {
    let iv = sorted.as_slice();
    for (i, w) in iv.windows(3).enumerate() {
        if w[2].start <= w[0].end() {
            return Err(LabError::DecompositionGap(format!(
                "intervals {} and {} intersect non-consecutively",
                i + 1,
                i + 3
            )));
        }
    }
    let mut next = 1u64;
    for seg in &d.segments {
        if seg.span.lo > seg.span.hi + 1 {
            return Err(LabError::DecompositionGap(format!(
                "segment {:?} has inverted span {:?}",
                seg.kind, seg.span
            )));
        }
        if seg.span.is_empty() {
            continue;
        }
        if seg.span.lo != next {
            return Err(LabError::DecompositionGap(format!(
                "segment {:?} starts at {} but position {next} is next",
                seg.kind, seg.span.lo
            )));
        }
        next = seg.span.hi + 1;
    }
    if next != d.n + 1 {
        return Err(LabError::DecompositionGap(format!(
            "positions {next}..={} uncovered",
            d.n
        )));
    }
    for seg in &d.segments {
        if let SegmentKind::Gap { index, class: GapClass::Doubled } = seg.kind {
            let (left, right) = (&iv[index - 1], &iv[index]);
            if seg.span.lo != right.start || seg.span.hi != left.end() {
                return Err(LabError::DecompositionGap(format!(
                    "doubled A_{index} is not I_{index} ∩ I_{}",
                    index + 1
                )));
            }
        }
    }
    Ok(())
}

/// Statistics of one draw of `t` cyclic intervals (wrapping allowed).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CyclicDraw {
    pub triple_exists: bool,
    pub overlapping_pairs: u64,
    pub blocks_hit_twice: u64,
    pub blocks_hit_thrice: u64,
}

fn count_in_sorted(sorted: &[u64], lo: u64, hi: u64) -> u64 {
    if lo > hi {
        return 0;
    }
    (sorted.partition_point(|&x| x <= hi) - sorted.partition_point(|&x| x < lo)) as u64
}

/// Number of starts in the cyclic window `[center − r, center + r]`.
fn count_in_window(sorted: &[u64], n: u64, center: u64, r: u64) -> u64 {
    if 2 * r + 1 >= n {
        return sorted.len() as u64;
    }
    let lo = center as i64 - r as i64;
    let hi = center + r;
    let mut total = 0;
    if lo < 1 {
        total += count_in_sorted(sorted, 1, hi);
        total += count_in_sorted(sorted, (lo + n as i64) as u64, n);
    } else if hi > n {
        total += count_in_sorted(sorted, lo as u64, n);
        total += count_in_sorted(sorted, 1, hi - n);
    } else {
        total += count_in_sorted(sorted, lo as u64, hi);
    }
    total
}

/// Overlap structure of arbitrary starts on the cycle, in `O(t log t)`.
pub fn cyclic_draw_stats(starts: &[u64], w: u64, n: u64) -> CyclicDraw {
    let mut s = starts.to_vec();
    s.sort_unstable();
    let t = s.len();

    // Three arcs share a point iff three starts fit in a window of w
    // consecutive positions; the tightest triples are cyclically consecutive.
    let triple_exists = t >= 3
        && (0..t).any(|i| {
            let j = i + 2;
            let spread = if j < t { s[j] - s[i] } else { s[j - t] + n - s[i] };
            spread < w
        });

    // Two arcs meet iff their starts are within cyclic distance w − 1.
    let neighbours: u64 = s
        .iter()
        .map(|&x| count_in_window(&s, n, x, w - 1) - 1)
        .sum();
    let overlapping_pairs = neighbours / 2;

    // Blocks J_b = [(b−1)w + 1, bw], the last possibly short.
    let mut hits: HashMap<u64, u64> = HashMap::new();
    let block = |p: u64| (p - 1) / w;
    let last = block(n);
    for &a in &s {
        let b = (a + w - 2) % n + 1;
        let (first, final_block) = (block(a), block(b));
        let mut touched = Vec::with_capacity(3);
        if b >= a {
            touched.extend(first..=final_block);
        } else {
            touched.extend(first..=last);
            touched.extend(0..=final_block);
        }
        touched.sort_unstable();
        touched.dedup();
        for blk in touched {
            *hits.entry(blk).or_insert(0) += 1;
        }
    }
    CyclicDraw {
        triple_exists,
        overlapping_pairs,
        blocks_hit_twice: hits.values().filter(|&&c| c >= 2).count() as u64,
        blocks_hit_thrice: hits.values().filter(|&&c| c >= 3).count() as u64,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub n: u64,
    pub k: u32,
    pub c1: f64,
    pub trials: u64,
    pub t: u64,
    pub w: u64,
    pub empirical_triple_prob: f64,
    pub mean_overlap_pairs: f64,
    /// Sample standard deviation of the per-trial pair count.
    pub sd_overlap_pairs: f64,
    /// `n^{1/(2k)}`.
    pub pair_threshold: f64,
    pub empirical_pair_exceed_prob: f64,
    /// `8 c1²`.
    pub analytic_triple_bound: f64,
    /// `4 c1 n^{1/(2k)}`.
    pub analytic_pair_bound: f64,
    pub mean_blocks_hit_twice: f64,
    pub mean_blocks_hit_thrice: f64,
}

impl Lemma1Report {
    pub const CSV_HEADER: &'static str = "n,k,c1,trials,empirical_triple_prob,analytic_triple_bound,mean_overlap_pairs,analytic_pair_bound,empirical_pair_exceed_prob";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.c1,
            self.trials,
            self.empirical_triple_prob,
            self.analytic_triple_bound,
            self.mean_overlap_pairs,
            self.analytic_pair_bound,
            self.empirical_pair_exceed_prob
        )
    }

    /// Binomial standard error of the triple frequency at the analytic bound.
    pub fn triple_standard_error(&self) -> f64 {
        let p = self.analytic_triple_bound.min(1.0);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn pair_mean_standard_error(&self) -> f64 {
        self.sd_overlap_pairs / (self.trials as f64).sqrt()
    }
}

/// Repeats [`cyclic_draw_stats`] over independent trials with `t` intervals
/// of width `w`. Trial `i` uses `mix(seed, Trial, i)`.
pub fn run_cyclic_trials(n: u64, t: u64, w: u64, trials: u64, seed: u64) -> Vec<CyclicDraw> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, SeedTag::Trial, i);
            let starts = draw_starts(n, t, &mut rng);
            cyclic_draw_stats(&starts, w, n)
        })
        .collect()
}

/// Monte-Carlo check of the overlap lemma with `t = ⌈n^{1/k}⌉` and
/// `w = ⌈c1 n^{1−3/(2k)}⌉`.
pub fn verify_lemma1(n: u64, k: u32, c1: f64, trials: u64, seed: u64) -> Result<Lemma1Report> {
    if trials < 100 {
        return Err(LabError::InvalidParams(format!("trials = {trials} must be at least 100")));
    }
    if n < 16 || k < 2 || !(c1 > 0.0 && c1 < 1.0) {
        return Err(LabError::InvalidParams(format!("need n ≥ 16, k ≥ 2, c1 ∈ (0,1); got n={n}, k={k}, c1={c1}")));
    }
    let kf = f64::from(k);
    let t = snapped_ceil(real_pow(n, 1.0 / kf));
    let w = snapped_ceil(c1 * real_pow(n, 1.0 - 3.0 / (2.0 * kf))).clamp(1, n);
    let draws = run_cyclic_trials(n, t, w, trials, seed);

    let pair_threshold = real_pow(n, 1.0 / (2.0 * kf));
    let tf = trials as f64;
    let triples = draws.iter().filter(|d| d.triple_exists).count() as f64;
    let pair_counts: Vec<f64> = draws.iter().map(|d| d.overlapping_pairs as f64).collect();
    let mean_pairs = pair_counts.iter().sum::<f64>() / tf;
    let var = pair_counts.iter().map(|p| (p - mean_pairs).powi(2)).sum::<f64>() / (tf - 1.0);
    let exceed = pair_counts.iter().filter(|&&p| p > pair_threshold).count() as f64;

    Ok(Lemma1Report {
        n,
        k,
        c1,
        trials,
        t,
        w,
        empirical_triple_prob: triples / tf,
        mean_overlap_pairs: mean_pairs,
        sd_overlap_pairs: var.sqrt(),
        pair_threshold,
        empirical_pair_exceed_prob: exceed / tf,
        analytic_triple_bound: 8.0 * c1 * c1,
        analytic_pair_bound: 4.0 * c1 * pair_threshold,
        mean_blocks_hit_twice: draws.iter().map(|d| d.blocks_hit_twice as f64).sum::<f64>() / tf,
        mean_blocks_hit_thrice: draws.iter().map(|d| d.blocks_hit_thrice as f64).sum::<f64>() / tf,
    })
}
