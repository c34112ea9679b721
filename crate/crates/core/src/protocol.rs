//! The set-disjointness → `F_k` reduction: public randomness, player strings,
//! stream assembly, message accounting and the end-to-end decision.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disjointness::{gen_instance, DisjInstance, Kind};
use crate::error::{LabError, Result};
use crate::estimator::{run_kind_segmented, EstimatorKind};
use crate::intervals::{
    decompose, intersection_stats, sample_intervals, AbortReason, Decomposition, GapClass, SegmentKind,
    SortedIntervals,
};
use crate::moments::{exact_fk, Estimate, Stream};
use crate::params::Params;
use crate::seed::{derive_seed, rng_for, SeedTag};

/// A permutation of `[size]`, stored 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<u32>,
}

impl Permutation {
    pub fn identity(size: u64) -> Self {
        Self {
            image: (0..=size as u32).collect(),
        }
    }

    /// Uniform permutation; sizes from 2^16 up use [`Self::bucketed`].
    pub fn random(size: u64, rng: &mut impl Rng) -> Self {
        if size < 1 << 16 {
            let mut image: Vec<u32> = (0..=size as u32).collect();
            image[1..].shuffle(rng);
            return Self { image };
        }
        Self::bucketed(size, 6, rng)
    }

    /// Scatters the values into `2^bits` random buckets and shuffles each one.
    /// Conditioned on the bucket sizes every arrangement is equally likely, so
    /// the result is uniform, and each bucket shuffle stays in cache.
    pub fn bucketed(size: u64, bits: u32, rng: &mut impl Rng) -> Self {
        assert!((1..=16).contains(&bits));
        let buckets = 1usize << bits;
        let mut parts: Vec<Vec<u32>> = (0..buckets)
            .map(|_| Vec::with_capacity(size as usize / buckets * 9 / 8))
            .collect();
        let mut word = 0u64;
        let mut left = 0;
        for v in 1..=size as u32 {
            if left == 0 {
                word = rng.gen();
                left = 64 / bits;
            }
            parts[(word & (buckets as u64 - 1)) as usize].push(v);
            word >>= bits;
            left -= 1;
        }
        let mut image = Vec::with_capacity(size as usize + 1);
        image.push(0);
        for mut part in parts {
            part.shuffle(rng);
            image.extend_from_slice(&part);
        }
        Self { image }
    }

    pub fn size(&self) -> u64 {
        (self.image.len() - 1) as u64
    }

    pub fn apply(&self, x: u64) -> u32 {
        self.image[x as usize]
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.image.len()];
        self.image[0] == 0
            && self.image[1..].iter().all(|&y| {
                let y = y as usize;
                y >= 1 && y < seen.len() && !std::mem::replace(&mut seen[y], true)
            })
    }
}

/// Random objects shared by every player before communication starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicRandomness {
    pub intervals: SortedIntervals,
    /// Permutation of `[2n]`.
    pub sigma: Permutation,
    /// One bit per shared-randomness block, packed little-endian.
    pub block_bits: Vec<u64>,
    pub num_blocks: u64,
    /// Number of intersecting interval pairs.
    pub overlapping_pairs: u64,
}

impl PublicRandomness {
    /// `r_m` for the 1-based block `m`.
    pub fn bit(&self, m: u64) -> bool {
        let i = m - 1;
        self.block_bits[(i / 64) as usize] >> (i % 64) & 1 == 1
    }
}

/// Picks the intervals, `σ` and `r`, or reports the failure event.
pub fn draw_public_randomness(params: &Params, seed: u64) -> std::result::Result<PublicRandomness, AbortReason> {
    let intervals = sample_intervals(params, seed)?;
    let stats = intersection_stats(&intervals);
    if stats.triple_exists {
        return Err(AbortReason::TripleIntersection);
    }
    let sigma = Permutation::random(2 * params.n, &mut rng_for(seed, SeedTag::Sigma, 0));
    let mut bits_rng = rng_for(seed, SeedTag::BlockBits, 0);
    let words = params.num_blocks.div_ceil(64) as usize;
    let mut block_bits: Vec<u64> = (0..words).map(|_| bits_rng.gen()).collect();
    if params.num_blocks % 64 != 0 {
        let last = block_bits.len() - 1;
        block_bits[last] &= (1u64 << (params.num_blocks % 64)) - 1;
    }
    Ok(PublicRandomness {
        intervals,
        sigma,
        block_bits,
        num_blocks: params.num_blocks,
        overlapping_pairs: stats.overlapping_pair_count,
    })
}

/// `s_i`: the elements of `S_i` in a private uniformly random order, mapped
/// through `σ`. Entry `ℓ − 1` is `s^i_ℓ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayerString {
    pub player: usize,
    pub seq: Vec<u32>,
}

/// `i` is 1-based.
pub fn build_player_string(instance: &DisjInstance, i: usize, sigma: &Permutation, seed: u64) -> PlayerString {
    let mut order = instance.sets[i - 1].clone();
    order.shuffle(&mut rng_for(seed, SeedTag::PlayerOrder, i as u64));
    PlayerString {
        player: i,
        seq: order.into_iter().map(|e| sigma.apply(u64::from(e))).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// `σ(n + j)`.
    Filler,
    /// `s^player_rank`.
    SetElement { player: u32, rank: u32 },
}

/// The `n`-position stream with the writer and origin of every position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamAssembly {
    pub n: u64,
    pub elements: Vec<u32>,
    /// 1-based player index per position.
    pub writer: Vec<u32>,
    pub provenance: Vec<Provenance>,
}

impl StreamAssembly {
    /// 0-based indices where the writer changes: the handoff points.
    pub fn handoff_cuts(&self) -> Vec<usize> {
        (1..self.writer.len())
            .filter(|&j| self.writer[j] != self.writer[j - 1])
            .collect()
    }

    pub fn stream(&self) -> Result<Stream> {
        Stream::with_universe(self.elements.clone(), self.n)
    }
}

/// Writes every position of `[n]` according to the four assembly rules.
///
/// * easy `A_{i−1}`: player `i` writes the filler `σ(n+j)`; the final easy gap
///   `A_t` belongs to player `t`;
/// * `B_i`: player `i` writes `s^i_ℓ` or the filler on a private fair coin;
/// * doubled `A_i = I_i ∩ I_{i+1}` in block `C_m`: `r_m = 1` gives the position
///   to player `i` (`s^i_ℓ`), `r_m = 0` to player `i+1` (`s^{i+1}_ℓ`).
///
/// `ℓ` is always the rank of `j` inside the writer's own interval.
pub fn assemble_stream(
    instance: &DisjInstance,
    randomness: &PublicRandomness,
    params: &Params,
    seed: u64,
) -> Result<StreamAssembly> {
    let t = params.t as usize;
    if instance.sets.len() != t || randomness.intervals.len() != t {
        return Err(LabError::InvalidParams(format!(
            "instance has {} sets and randomness {} intervals, params say t = {t}",
            instance.sets.len(),
            randomness.intervals.len()
        )));
    }
    if instance.sets.iter().any(|s| s.len() as u64 != params.w) {
        return Err(LabError::InvalidParams(format!("every set must have w = {} elements", params.w)));
    }
    let decomposition = decompose(&randomness.intervals)?;
    let strings: Vec<PlayerString> = (1..=t)
        .map(|i| build_player_string(instance, i, &randomness.sigma, seed))
        .collect();
    Ok(fill_positions(&decomposition, randomness, &strings, params, seed)?)
}

fn fill_positions(
    decomposition: &Decomposition,
    randomness: &PublicRandomness,
    strings: &[PlayerString],
    params: &Params,
    seed: u64,
) -> Result<StreamAssembly> {
    let n = params.n;
    let t = params.t as usize;
    let sigma = &randomness.sigma;
    let intervals = &randomness.intervals;
    let mut elements = vec![0u32; n as usize];
    let mut writer = vec![0u32; n as usize];
    let mut provenance = vec![Provenance::Filler; n as usize];

    let set_element = |player: usize, j: u64| -> (u32, Provenance) {
        let rank = j - intervals.player(player).start + 1;
        (
            strings[player - 1].seq[(rank - 1) as usize],
            Provenance::SetElement {
                player: player as u32,
                rank: rank as u32,
            },
        )
    };

    for seg in &decomposition.segments {
        if seg.span.is_empty() {
            continue;
        }
        match seg.kind {
            SegmentKind::Gap { index, class: GapClass::Easy } => {
                let player = (index + 1).min(t) as u32;
                for j in seg.span.lo..=seg.span.hi {
                    let at = (j - 1) as usize;
                    elements[at] = sigma.apply(n + j);
                    writer[at] = player;
                    provenance[at] = Provenance::Filler;
                }
            }
            SegmentKind::Solo { index } => {
                let mut coins = rng_for(seed, SeedTag::PlayerCoins, index as u64);
                for j in seg.span.lo..=seg.span.hi {
                    let at = (j - 1) as usize;
                    writer[at] = index as u32;
                    if coins.gen::<bool>() {
                        (elements[at], provenance[at]) = set_element(index, j);
                    } else {
                        elements[at] = sigma.apply(n + j);
                        provenance[at] = Provenance::Filler;
                    }
                }
            }
            SegmentKind::Gap { index, class: GapClass::Doubled } => {
                for j in seg.span.lo..=seg.span.hi {
                    let at = (j - 1) as usize;
                    let player = if randomness.bit(params.block_of(j)) { index } else { index + 1 };
                    writer[at] = player as u32;
                    (elements[at], provenance[at]) = set_element(player, j);
                }
            }
        }
    }

    if let Some(hole) = writer.iter().position(|&w| w == 0) {
        return Err(LabError::AssemblyIncomplete(format!("position {} unassigned", hole + 1)));
    }
    Ok(StreamAssembly {
        n,
        elements,
        writer,
        provenance,
    })
}

/// One message per writer change plus the final report.
pub fn count_messages(writer: &[u32]) -> u64 {
    if writer.is_empty() {
        return 0;
    }
    1 + writer.windows(2).filter(|p| p[0] != p[1]).count() as u64
}

/// `4(t+1) + P·(⌈w/w2⌉ + 2)`.
pub fn message_bound(params: &Params, overlapping_pairs: u64) -> u64 {
    4 * (params.t + 1) + overlapping_pairs * (params.w.div_ceil(params.w2) + 2)
}

/// YES iff the estimate exceeds `2n`.
pub fn decide(estimate: &Estimate, n: u64) -> Kind {
    if estimate.exceeds(2 * u128::from(n)) {
        Kind::Yes
    } else {
        Kind::No
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOutcome {
    pub seed: u64,
    pub kind: Kind,
    pub decision: Option<Kind>,
    pub aborted: Option<AbortReason>,
    pub estimate: Option<Estimate>,
    pub exact_fk: Option<u128>,
    pub messages: u64,
    pub max_state_bits: u64,
    pub total_bits: u64,
    /// `N / (t · log₂ N)`, reported for comparison only.
    pub reference_budget: f64,
    pub overlapping_pairs: u64,
}

impl ProtocolOutcome {
    pub const CSV_HEADER: &'static str = "seed,kind,decision,correct,aborted,abort_reason,exact_fk,estimate,messages,max_state_bits,total_bits,reference_budget";

    pub fn correct(&self) -> bool {
        self.decision == Some(self.kind)
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.kind,
            opt(self.decision.map(|d| d.to_string())),
            self.correct(),
            self.aborted.is_some(),
            opt(self.aborted.map(|a| a.to_string())),
            opt(self.exact_fk.map(|f| f.to_string())),
            opt(self.estimate.map(|e| e.to_string())),
            self.messages,
            self.max_state_bits,
            self.total_bits,
            self.reference_budget
        )
    }
}

pub fn reference_budget(params: &Params) -> f64 {
    let big_n = params.big_n as f64;
    big_n / (params.t as f64 * big_n.log2())
}

/// Runs the whole reduction on one instance.
pub fn run_protocol(
    instance: &DisjInstance,
    params: &Params,
    estimator: EstimatorKind,
    seed: u64,
) -> Result<ProtocolOutcome> {
    let mut outcome = ProtocolOutcome {
        seed,
        kind: instance.kind,
        decision: None,
        aborted: None,
        estimate: None,
        exact_fk: None,
        messages: 0,
        max_state_bits: 0,
        total_bits: 0,
        reference_budget: reference_budget(params),
        overlapping_pairs: 0,
    };
    let randomness = match draw_public_randomness(params, seed) {
        Ok(r) => r,
        Err(reason) => {
            outcome.aborted = Some(reason);
            return Ok(outcome);
        }
    };
    outcome.overlapping_pairs = randomness.overlapping_pairs;
    let assembly = assemble_stream(instance, &randomness, params, seed)?;
    let cuts = assembly.handoff_cuts();
    let run = run_kind_segmented(
        estimator,
        params.k,
        derive_seed(seed, SeedTag::Estimator, 0),
        &assembly.elements,
        &cuts,
    )?;
    let messages = count_messages(&assembly.writer);
    debug_assert_eq!(messages, run.handoffs);

    outcome.exact_fk = Some(exact_fk(&assembly.stream()?, params.k)?);
    outcome.decision = Some(decide(&run.estimate, params.n));
    outcome.estimate = Some(run.estimate);
    outcome.messages = messages;
    outcome.max_state_bits = run.max_state_bits;
    outcome.total_bits = messages * run.max_state_bits;
    Ok(outcome)
}

/// Everything produced by one seeded end-to-end assembly.
#[derive(Clone, Debug)]
pub struct SeededAssembly {
    pub instance: DisjInstance,
    pub randomness: PublicRandomness,
    pub assembly: StreamAssembly,
}

/// Generates an instance of `kind` and assembles its stream, all from `seed`.
pub fn assemble_from_seed(
    params: &Params,
    kind: Kind,
    seed: u64,
) -> Result<std::result::Result<SeededAssembly, AbortReason>> {
    let instance = gen_instance(params, kind, seed)?;
    let randomness = match draw_public_randomness(params, seed) {
        Ok(r) => r,
        Err(reason) => return Ok(Err(reason)),
    };
    let assembly = assemble_stream(&instance, &randomness, params, seed)?;
    Ok(Ok(SeededAssembly {
        instance,
        randomness,
        assembly,
    }))
}

pub const STREAM_MAGIC: &[u8; 4] = b"ROML";
pub const STREAM_FORMAT_VERSION: u32 = 1;

/// Binary export: `"ROML"`, then version, `n`, `k` as u32 LE, then one u32 LE
/// element id per position.
pub fn write_stream_binary(assembly: &StreamAssembly, k: u32, out: &mut impl Write) -> io::Result<()> {
    let mut buf = Vec::with_capacity(16 + 4 * assembly.elements.len());
    buf.extend_from_slice(STREAM_MAGIC);
    buf.extend_from_slice(&STREAM_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(assembly.n as u32).to_le_bytes());
    buf.extend_from_slice(&k.to_le_bytes());
    for &e in &assembly.elements {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Parses a binary stream file into `(n, k, elements)`.
pub fn read_stream_binary(bytes: &[u8]) -> Result<(u64, u32, Vec<u32>)> {
    if bytes.len() < 16 || &bytes[..4] != STREAM_MAGIC {
        return Err(LabError::InvalidParams("not a ROML stream file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (version, n, k) = (word(4), word(8), word(12));
    if version != STREAM_FORMAT_VERSION {
        return Err(LabError::InvalidParams(format!("unsupported stream version {version}")));
    }
    let body = &bytes[16..];
    if body.len() != 4 * n as usize {
        return Err(LabError::InvalidParams(format!("expected {n} elements, found {} bytes", body.len())));
    }
    let elements = body
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((u64::from(n), k, elements))
}
