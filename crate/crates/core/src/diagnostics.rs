//! Spacing lemma verification and statistical checks that the assembled
//! stream is close to random order.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disjointness::Kind;
use crate::error::{LabError, Result};
use crate::params::{real_pow, snapped_ceil, Params};
use crate::protocol::{assemble_from_seed, Permutation, StreamAssembly};
use crate::seed::{derive_seed, rng_for, SeedTag};
use crate::stats::{chi_square_binomial, ks_two_sample};

/// Smallest `|j − i|` over distinct members; `n` when there is a single member.
pub fn min_pairwise_gap(set: &[u64], n: u64) -> u64 {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).map(|w| w[1] - w[0]).min().unwrap_or(n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: u64,
    pub k: u32,
    pub c2: f64,
    pub trials: u64,
    pub subset_size: u64,
    /// `⌈c2 · n^{1−2/k}⌉`.
    pub threshold: u64,
    pub empirical_fail_prob: f64,
    /// `C(|S|, 2) · 2·threshold / n`.
    pub expected_close_pairs: f64,
}

impl GapReport {
    pub const CSV_HEADER: &'static str =
        "n,k,c2,trials,subset_size,threshold,empirical_fail_prob,expected_close_pairs";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.c2,
            self.trials,
            self.subset_size,
            self.threshold,
            self.empirical_fail_prob,
            self.expected_close_pairs
        )
    }

    /// Binomial standard error at the birthday-bound probability.
    pub fn standard_error(&self) -> f64 {
        let p = self.expected_close_pairs.min(1.0);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

pub fn verify_lemma2(n: u64, k: u32, c2: f64, trials: u64, seed: u64) -> Result<GapReport> {
    if trials < 100 {
        return Err(LabError::InvalidParams(format!("trials = {trials} must be at least 100")));
    }
    if k < 2 || !(c2 > 0.0 && c2 < 1.0) {
        return Err(LabError::InvalidParams(format!("need k ≥ 2 and c2 ∈ (0,1); got k={k}, c2={c2}")));
    }
    let kf = f64::from(k);
    let size = snapped_ceil(real_pow(n, 1.0 / kf));
    if size < 2 || size > n {
        return Err(LabError::InvalidParams(format!("subset size {size} must lie in [2, n]")));
    }
    let threshold = snapped_ceil(c2 * real_pow(n, 1.0 - 2.0 / kf)).max(1);
    let failures = (0..trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = rng_for(seed, SeedTag::Subset, i);
            let set: Vec<u64> = sample(&mut rng, n as usize, size as usize)
                .into_iter()
                .map(|x| x as u64 + 1)
                .collect();
            min_pairwise_gap(&set, n) < threshold
        })
        .count();
    let pairs = (size * (size - 1) / 2) as f64;
    Ok(GapReport {
        n,
        k,
        c2,
        trials,
        subset_size: size,
        threshold,
        empirical_fail_prob: failures as f64 / trials as f64,
        expected_close_pairs: pairs * 2.0 * threshold as f64 / n as f64,
    })
}

/// 1-based positions holding `σ(witness)`, increasing.
pub fn heavy_positions(assembly: &StreamAssembly, witness: u32, sigma: &Permutation) -> Vec<u64> {
    let target = sigma.apply(u64::from(witness));
    assembly
        .elements
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e == target)
        .map(|(j, _)| j as u64 + 1)
        .collect()
}

/// `t` distinct uniform positions of `[n]`, each kept with probability 1/2.
pub fn thinned_uniform_sample(t: u64, n: u64, seed: u64) -> Vec<u64> {
    let mut rng = rng_for(seed, SeedTag::Thinned, 0);
    let mut picked: Vec<u64> = sample(&mut rng, n as usize, t as usize)
        .into_iter()
        .map(|x| x as u64 + 1)
        .collect();
    picked.sort_unstable();
    picked.into_iter().filter(|_| rng.gen::<bool>()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub batches: u64,
    pub completed: u64,
    pub aborted: u64,
    pub t: u64,
    pub mean_survivors: f64,
    pub chi_square: f64,
    pub chi_square_dof: u64,
    pub chi_square_p: f64,
    pub chi_square_pass: bool,
    pub ks_statistic: f64,
    pub ks_p: f64,
    pub ks_pass: bool,
    /// Frequency of assemblies whose heavy positions are pairwise ≥ w2 apart.
    pub spacing_ok_frequency: f64,
    pub alpha: f64,
}

impl UniformityReport {
    pub const CSV_HEADER: &'static str = "batches,completed,aborted,t,mean_survivors,chi_square,chi_square_dof,chi_square_p,chi_square_pass,ks_statistic,ks_p,ks_pass,spacing_ok_frequency,alpha";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.batches,
            self.completed,
            self.aborted,
            self.t,
            self.mean_survivors,
            self.chi_square,
            self.chi_square_dof,
            self.chi_square_p,
            self.chi_square_pass,
            self.ks_statistic,
            self.ks_p,
            self.ks_pass,
            self.spacing_ok_frequency,
            self.alpha
        )
    }
}

pub const ALPHA: f64 = 0.01;

/// Observation from one YES assembly.
#[derive(Clone, Debug)]
pub struct HeavyObservation {
    pub positions: Vec<u64>,
    pub reference: Vec<u64>,
}

pub fn observe_heavy(params: &Params, seed: u64) -> Result<Option<HeavyObservation>> {
    let Ok(s) = assemble_from_seed(params, Kind::Yes, seed)? else {
        return Ok(None);
    };
    let witness = s.instance.witness.expect("yes instances carry a witness");
    Ok(Some(HeavyObservation {
        positions: heavy_positions(&s.assembly, witness, &s.randomness.sigma),
        reference: thinned_uniform_sample(params.t, params.n, derive_seed(seed, SeedTag::Thinned, 0)),
    }))
}

/// Summarizes heavy-element observations against the thinned-uniform model.
pub fn summarize_uniformity(params: &Params, batches: u64, observations: &[Option<HeavyObservation>]) -> UniformityReport {
    let done: Vec<&HeavyObservation> = observations.iter().flatten().collect();
    let completed = done.len() as u64;
    let mut histogram = vec![0u64; params.t as usize + 1];
    let mut spacing_ok = 0u64;
    let mut pooled = Vec::new();
    let mut reference = Vec::new();
    for obs in &done {
        let survivors = obs.positions.len();
        if survivors < histogram.len() {
            histogram[survivors] += 1;
        } else {
            histogram.resize(survivors + 1, 0);
            histogram[survivors] += 1;
        }
        if survivors < 2 || min_pairwise_gap(&obs.positions, params.n) >= params.w2 {
            spacing_ok += 1;
        }
        pooled.extend(obs.positions.iter().map(|&p| p as u32));
        reference.extend(obs.reference.iter().map(|&p| p as u32));
    }
    let chi = chi_square_binomial(&histogram, params.t, 0.5);
    let ks = ks_two_sample(&pooled, &reference);
    let denom = completed.max(1) as f64;
    UniformityReport {
        batches,
        completed,
        aborted: batches - completed,
        t: params.t,
        mean_survivors: done.iter().map(|o| o.positions.len() as f64).sum::<f64>() / denom,
        chi_square: chi.statistic,
        chi_square_dof: chi.dof,
        chi_square_p: chi.p_value,
        chi_square_pass: chi.p_value >= ALPHA,
        ks_statistic: ks.statistic,
        ks_p: ks.p_value,
        ks_pass: ks.p_value >= ALPHA,
        spacing_ok_frequency: spacing_ok as f64 / denom,
        alpha: ALPHA,
    }
}

/// Assembles `batches` YES streams and tests the heavy element's placement
/// against the thinned-uniform model. Batch `b` uses `mix(seed, Trial, b)`.
pub fn order_uniformity_test(params: &Params, batches: u64, seed: u64) -> Result<UniformityReport> {
    if batches < 30 {
        return Err(LabError::InvalidParams(format!("batches = {batches} must be at least 30")));
    }
    let observations = (0..batches)
        .into_par_iter()
        .map(|b| observe_heavy(params, derive_seed(seed, SeedTag::Trial, b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_uniformity(params, batches, &observations))
}
