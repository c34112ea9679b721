//! One-pass estimators with serializable state, and the segmented runner that
//! simulates handing the state from one stream writer to the next.
//!
//! # State layout
//!
//! Every state is `u32 LE payload length` followed by the payload. All integers
//! are little-endian. The payload starts with a kind byte and a layout byte.
//!
//! AMS sampler (`kind = b'A'`, layout 1):
//!
//! | field | type |
//! |---|---|
//! | k | u32 |
//! | sample count S | u32 |
//! | items processed | u64 |
//! | rng seed | 32 bytes |
//! | rng stream | u64 |
//! | rng word position | u128 |
//! | S × (element, r, next) | u32, u64, u64 |
//!
//! `element = 0, r = 0` marks a sample not yet filled; otherwise `r ≥ 1` is the
//! number of occurrences of `element` from the sampled position onward.
//!
//! Exact oracle (`kind = b'X'`, layout 1):
//!
//! | field | type |
//! |---|---|
//! | k | u32 |
//! | items processed | u64 |
//! | distinct | u64 |
//! | bitset word count W | u32 |
//! | W seen-bitset words | u64 each, bit `e` marks element `e` |
//! | repeat count R | u32 |
//! | R × (element, multiplicity ≥ 2) | u32, u64, ascending by element |

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::moments::{basic_term, checked_power, Estimate};

const KIND_AMS: u8 = b'A';
const KIND_EXACT: u8 = b'X';
const LAYOUT_VERSION: u8 = 1;

/// Serialized estimator memory, exactly as it would travel in one message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimatorState {
    bytes: Vec<u8>,
}

impl EstimatorState {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(LabError::MalformedState("missing length prefix".into()));
        }
        let declared = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        if declared != bytes.len() - 4 {
            return Err(LabError::MalformedState(format!(
                "length prefix {declared} but payload has {} bytes",
                bytes.len() - 4
            )));
        }
        Ok(Self { bytes })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn size_bits(&self) -> u64 {
        self.bytes.len() as u64 * 8
    }

    fn payload(&self) -> &[u8] {
        &self.bytes[4..]
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn new(kind: u8) -> Self {
        Writer(vec![0, 0, 0, 0, kind, LAYOUT_VERSION])
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn raw(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn finish(mut self) -> EstimatorState {
        let len = (self.0.len() - 4) as u32;
        self.0[..4].copy_from_slice(&len.to_le_bytes());
        EstimatorState { bytes: self.0 }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn open(state: &'a EstimatorState, kind: u8) -> Result<Self> {
        let buf = state.payload();
        if buf.len() < 2 || buf[0] != kind {
            return Err(LabError::MalformedState(format!("expected kind {:?}", kind as char)));
        }
        if buf[1] != LAYOUT_VERSION {
            return Err(LabError::MalformedState(format!("unsupported layout {}", buf[1])));
        }
        Ok(Reader { buf, at: 2 })
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at + n;
        if end > self.buf.len() {
            return Err(LabError::MalformedState("truncated payload".into()));
        }
        let out = &self.buf[self.at..end];
        self.at = end;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn done(&self) -> Result<()> {
        if self.at == self.buf.len() {
            Ok(())
        } else {
            Err(LabError::MalformedState("trailing bytes".into()))
        }
    }
}

/// A single-pass streaming algorithm whose whole memory can be shipped as
/// an [`EstimatorState`].
pub trait StreamEstimator: Sized {
    fn update(&mut self, element: u32);
    fn estimate(&self) -> Result<Estimate>;
    fn encode(&self) -> EstimatorState;
    fn decode(state: &EstimatorState) -> Result<Self>;
}

#[derive(Clone, Copy, Debug)]
struct Sample {
    /// 0 until the first replacement.
    element: u32,
    /// Occurrences of `element` counted before the sampled position.
    base: u64,
    /// Position at which this sample is next replaced.
    next: u64,
}

#[derive(Clone, Copy, Debug)]
struct Tracked {
    occurrences: u64,
    refs: u32,
}

/// The AMS sampling estimator.
///
/// Each sample holds a uniformly random position of the stream seen so far,
/// maintained by reservoir sampling with geometric skips: after position `p`
/// the next replacement lands at `⌊p/u⌋ + 1` for `u ~ U(0,1]`. Occurrence
/// counts are shared between samples tracking the same element, so an update
/// costs O(1) plus the replacements due at that position.
#[derive(Clone, Debug)]
pub struct AmsEstimator {
    k: u32,
    processed: u64,
    rng: ChaCha8Rng,
    samples: Vec<Sample>,
    tracked: FxHashMap<u32, Tracked>,
    due: BinaryHeap<Reverse<(u64, u32)>>,
}

impl AmsEstimator {
    pub fn new(k: u32, sample_count: u32, seed: u64) -> Self {
        assert!(sample_count >= 1, "sample_count must be positive");
        let samples = vec![
            Sample {
                element: 0,
                base: 0,
                next: 1,
            };
            sample_count as usize
        ];
        let mut est = Self {
            k,
            processed: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            samples,
            tracked: FxHashMap::default(),
            due: BinaryHeap::new(),
        };
        est.rebuild_schedule();
        est
    }

    fn rebuild_schedule(&mut self) {
        self.due = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| Reverse((s.next, i as u32)))
            .collect();
    }

    fn next_replacement(&mut self, position: u64) -> u64 {
        let u = 1.0 - self.rng.gen::<f64>();
        let skip = (position as f64 / u).floor();
        if skip >= u64::MAX as f64 {
            u64::MAX
        } else {
            skip as u64 + 1
        }
    }

    fn release(&mut self, element: u32) {
        if element == 0 {
            return;
        }
        if let Some(t) = self.tracked.get_mut(&element) {
            t.refs -= 1;
            if t.refs == 0 {
                self.tracked.remove(&element);
            }
        }
    }

    /// Current `r` values, one per sample, for inspection in tests.
    pub fn sample_counts(&self) -> Vec<(u32, u64)> {
        self.samples
            .iter()
            .map(|s| {
                let occ = self.tracked.get(&s.element).map_or(0, |t| t.occurrences);
                (s.element, occ - s.base)
            })
            .collect()
    }
}

impl StreamEstimator for AmsEstimator {
    fn update(&mut self, element: u32) {
        let position = self.processed + 1;
        if let Some(t) = self.tracked.get_mut(&element) {
            t.occurrences += 1;
        }
        while let Some(&Reverse((next, idx))) = self.due.peek() {
            if next != position {
                break;
            }
            self.due.pop();
            let old = self.samples[idx as usize].element;
            self.release(old);
            let entry = self.tracked.entry(element).or_insert(Tracked {
                occurrences: 1,
                refs: 0,
            });
            entry.refs += 1;
            let base = entry.occurrences - 1;
            let next = self.next_replacement(position);
            self.samples[idx as usize] = Sample { element, base, next };
            self.due.push(Reverse((next, idx)));
        }
        self.processed = position;
    }

    fn estimate(&self) -> Result<Estimate> {
        if self.processed == 0 {
            return Ok(Estimate {
                sum: 0,
                samples: self.samples.len() as u64,
            });
        }
        let mut sum = 0u128;
        for s in &self.samples {
            let occ = self.tracked[&s.element].occurrences;
            let term = basic_term(self.processed, occ - s.base, self.k)?;
            sum = sum
                .checked_add(term)
                .ok_or_else(|| LabError::Overflow("AMS sum".into()))?;
        }
        Ok(Estimate {
            sum,
            samples: self.samples.len() as u64,
        })
    }

    fn encode(&self) -> EstimatorState {
        let mut w = Writer::new(KIND_AMS);
        w.u32(self.k);
        w.u32(self.samples.len() as u32);
        w.u64(self.processed);
        w.raw(&self.rng.get_seed());
        w.u64(self.rng.get_stream());
        w.u128(self.rng.get_word_pos());
        for s in &self.samples {
            let r = self.tracked.get(&s.element).map_or(0, |t| t.occurrences - s.base);
            w.u32(s.element);
            w.u64(r);
            w.u64(s.next);
        }
        w.finish()
    }

    fn decode(state: &EstimatorState) -> Result<Self> {
        let mut r = Reader::open(state, KIND_AMS)?;
        let k = r.u32()?;
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(LabError::MalformedState("zero samples".into()));
        }
        let processed = r.u64()?;
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(r.u64()?);
        rng.set_word_pos(r.u128()?);
        // only r = occurrences − base matters, so each element's shared count
        // is rebuilt as the largest r among its samples
        let mut raw = Vec::with_capacity(count);
        let mut tracked: FxHashMap<u32, Tracked> = FxHashMap::default();
        for _ in 0..count {
            let (element, r_value, next) = (r.u32()?, r.u64()?, r.u64()?);
            if (element == 0) != (r_value == 0) || r_value > processed || next <= processed {
                return Err(LabError::MalformedState(format!(
                    "sample ({element}, r = {r_value}, next = {next}) after {processed} items"
                )));
            }
            if element != 0 {
                let t = tracked.entry(element).or_insert(Tracked { occurrences: 0, refs: 0 });
                t.occurrences = t.occurrences.max(r_value);
                t.refs += 1;
            }
            raw.push((element, r_value, next));
        }
        r.done()?;
        let samples = raw
            .into_iter()
            .map(|(element, r_value, next)| Sample {
                element,
                base: tracked.get(&element).map_or(0, |t| t.occurrences - r_value),
                next,
            })
            .collect();
        let mut est = Self {
            k,
            processed,
            rng,
            samples,
            tracked,
            due: BinaryHeap::new(),
        };
        est.rebuild_schedule();
        Ok(est)
    }
}

/// Exact `F_k` with a seen-bitset over the identifier universe plus a map of
/// repeated elements. Linear space; serves as the oracle estimator.
#[derive(Clone, Debug)]
pub struct ExactEstimator {
    k: u32,
    processed: u64,
    distinct: u64,
    seen: Vec<u64>,
    repeats: FxHashMap<u32, u64>,
}

impl ExactEstimator {
    /// `universe` is the largest identifier expected; larger ones grow the bitset.
    pub fn new(k: u32, universe: u32) -> Self {
        Self {
            k,
            processed: 0,
            distinct: 0,
            seen: vec![0; universe as usize / 64 + 1],
            repeats: FxHashMap::default(),
        }
    }
}

impl StreamEstimator for ExactEstimator {
    fn update(&mut self, element: u32) {
        let (word, bit) = (element as usize / 64, element % 64);
        if word >= self.seen.len() {
            self.seen.resize(word + 1, 0);
        }
        let mask = 1u64 << bit;
        if self.seen[word] & mask == 0 {
            self.seen[word] |= mask;
            self.distinct += 1;
        } else {
            *self.repeats.entry(element).or_insert(1) += 1;
        }
        self.processed += 1;
    }

    fn estimate(&self) -> Result<Estimate> {
        let mut total = u128::from(self.distinct - self.repeats.len() as u64);
        for &f in self.repeats.values() {
            let p = checked_power(f, self.k)
                .ok_or_else(|| LabError::Overflow(format!("{f}^{}", self.k)))?;
            total = total
                .checked_add(p)
                .ok_or_else(|| LabError::Overflow("F_k sum".into()))?;
        }
        Ok(Estimate::exact(total))
    }

    fn encode(&self) -> EstimatorState {
        let mut w = Writer::new(KIND_EXACT);
        w.u32(self.k);
        w.u64(self.processed);
        w.u64(self.distinct);
        w.u32(self.seen.len() as u32);
        w.0.reserve(self.seen.len() * 8);
        for &word in &self.seen {
            w.u64(word);
        }
        let mut repeats: Vec<(u32, u64)> = self.repeats.iter().map(|(&e, &c)| (e, c)).collect();
        repeats.sort_unstable();
        w.u32(repeats.len() as u32);
        for (e, c) in repeats {
            w.u32(e);
            w.u64(c);
        }
        w.finish()
    }

    fn decode(state: &EstimatorState) -> Result<Self> {
        let mut r = Reader::open(state, KIND_EXACT)?;
        let k = r.u32()?;
        let processed = r.u64()?;
        let distinct = r.u64()?;
        let words = r.u32()? as usize;
        let raw = r.take(words * 8)?;
        let seen: Vec<u64> = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let count = r.u32()? as usize;
        let mut repeats = FxHashMap::with_capacity_and_hasher(count, Default::default());
        for _ in 0..count {
            let e = r.u32()?;
            let c = r.u64()?;
            if c < 2 {
                return Err(LabError::MalformedState(format!("repeat count {c} for {e}")));
            }
            repeats.insert(e, c);
        }
        r.done()?;
        Ok(Self {
            k,
            processed,
            distinct,
            seen,
            repeats,
        })
    }
}

/// Which algorithm the players run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// Exact `F_k`.
    Exact,
    /// AMS sampling with this many concurrent samples.
    Ams { samples: u32 },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Exact => "exact",
            EstimatorKind::Ams { .. } => "ams",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentedRun {
    pub estimate: Estimate,
    pub max_state_bits: u64,
    /// Number of state transfers, including the final report.
    pub handoffs: u64,
}

/// Feeds `stream` to `estimator`, serializing and restoring its state after
/// every segment. `cuts` are the 0-based indices at which a new segment
/// starts; they must be strictly increasing and inside `(0, len)`.
pub fn run_segmented<E: StreamEstimator>(
    mut estimator: E,
    stream: &[u32],
    cuts: &[usize],
) -> Result<SegmentedRun> {
    let mut prev = 0usize;
    for &c in cuts {
        if c <= prev || c >= stream.len() {
            return Err(LabError::InvalidBoundaries(format!(
                "cut {c} not strictly inside ({prev}, {})",
                stream.len()
            )));
        }
        prev = c;
    }

    let mut max_state_bits = 0;
    let mut handoffs = 0;
    let mut start = 0usize;
    for end in cuts.iter().copied().chain(std::iter::once(stream.len())) {
        for &e in &stream[start..end] {
            estimator.update(e);
        }
        let state = estimator.encode();
        max_state_bits = max_state_bits.max(state.size_bits());
        handoffs += 1;
        estimator = E::decode(&state)?;
        start = end;
    }
    Ok(SegmentedRun {
        estimate: estimator.estimate()?,
        max_state_bits,
        handoffs,
    })
}

pub fn run_unsegmented<E: StreamEstimator>(mut estimator: E, stream: &[u32]) -> Result<Estimate> {
    for &e in stream {
        estimator.update(e);
    }
    estimator.estimate()
}

/// Single-pass AMS estimate of `F_k`.
pub fn ams_estimate(stream: &[u32], k: u32, sample_count: u32, seed: u64) -> Result<Estimate> {
    run_unsegmented(AmsEstimator::new(k, sample_count, seed), stream)
}

/// AMS estimate with a state handoff at every cut.
pub fn estimator_run_segmented(
    stream: &[u32],
    k: u32,
    sample_count: u32,
    seed: u64,
    cuts: &[usize],
) -> Result<SegmentedRun> {
    run_segmented(AmsEstimator::new(k, sample_count, seed), stream, cuts)
}

/// Runs the chosen estimator over `stream` with handoffs at `cuts`.
pub fn run_kind_segmented(
    kind: EstimatorKind,
    k: u32,
    seed: u64,
    stream: &[u32],
    cuts: &[usize],
) -> Result<SegmentedRun> {
    match kind {
        EstimatorKind::Exact => {
            let universe = stream.iter().copied().max().unwrap_or(0);
            run_segmented(ExactEstimator::new(k, universe), stream, cuts)
        }
        EstimatorKind::Ams { samples } => {
            run_segmented(AmsEstimator::new(k, samples, seed), stream, cuts)
        }
    }
}
