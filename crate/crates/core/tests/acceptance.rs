//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::HashSet;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use roml::diagnostics::{heavy_positions, summarize_uniformity, thinned_uniform_sample, verify_lemma2, HeavyObservation};
use roml::disjointness::Kind;
use roml::estimator::{run_segmented, run_unsegmented, AmsEstimator, EstimatorKind, ExactEstimator};
use roml::harness::{protocol_trials, ProtocolSummary};
use roml::intervals::{intersection_stats, run_cyclic_trials, verify_lemma1, AbortReason, CyclicInterval, SortedIntervals};
use roml::moments::{basic_estimate_at, exact_fk, Stream};
use roml::protocol::{assemble_from_seed, count_messages, message_bound, Provenance, SeededAssembly};
use roml::seed::{derive_seed, rng_for, SeedTag};
use roml::Params;

const ROOT: u64 = 2024;
const ASSEMBLIES: u64 = 10_000;
const SUBSET: usize = 1_000;
/// Frozen ceiling on mean messages / n^{1/k} at the default parameters.
const MESSAGE_RATIO_CEILING: f64 = 500.0;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: u32, name: &'static str, pass: bool, detail: String) -> Verdict {
    let v = Verdict { id, name, pass, detail };
    println!(
        "criterion {:>2} [{}] {}: {}",
        v.id,
        if v.pass { "PASS" } else { "FAIL" },
        v.name,
        v.detail
    );
    v
}

fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

// ---------------------------------------------------------------- shared batch

/// What one seeded YES assembly at the default parameters tells us.
struct Record {
    aborted: Option<AbortReason>,
    partition: Result<(), String>,
    exact_fk: u128,
    multiplicity: u64,
    messages: u64,
    bound: u64,
    heavy: Option<HeavyObservation>,
}

/// Position-by-position check of an assembly against the interval layout,
/// independent of the segment decomposition used to build it.
fn check_partition(s: &SeededAssembly, params: &Params) -> Result<(), String> {
    let n = params.n as usize;
    let t = params.t as usize;
    let a = &s.assembly;
    if a.elements.len() != n || a.writer.len() != n || a.provenance.len() != n {
        return Err(format!("assembly has {} positions, expected {n}", a.elements.len()));
    }
    let iv = s.randomness.intervals.as_slice();
    if let Some(i) = iv.iter().position(CyclicInterval::wraps) {
        return Err(format!("interval {} wraps", i + 1));
    }
    let sigma = &s.randomness.sigma;
    let images: Vec<HashSet<u32>> = s
        .instance
        .sets
        .iter()
        .map(|set| set.iter().map(|&e| sigma.apply(u64::from(e))).collect())
        .collect();
    let mut used = HashSet::new();
    // equal widths: ends are sorted like starts, so the intervals covering j
    // are a contiguous run beginning at the first one not yet ended
    let mut first = 0usize;
    let mut covering: Vec<usize> = Vec::with_capacity(3);
    for j in 1..=n {
        let writer = a.writer[j - 1] as usize;
        if writer == 0 || writer > t {
            return Err(format!("position {j} written by player {writer}"));
        }
        while first < iv.len() && iv[first].end() < j as u64 {
            first += 1;
        }
        covering.clear();
        covering.extend((first..iv.len()).take_while(|&i| iv[i].start <= j as u64).map(|i| i + 1));
        if covering.len() > 2 {
            return Err(format!("position {j} lies in {} intervals", covering.len()));
        }
        match a.provenance[j - 1] {
            Provenance::Filler => {
                if a.elements[j - 1] != sigma.apply(params.n + j as u64) {
                    return Err(format!("filler at {j} is not sigma(n + j)"));
                }
                if covering.len() == 2 {
                    return Err(format!("shared position {j} holds a filler"));
                }
                if covering.len() == 1 && covering[0] != writer {
                    return Err(format!("position {j} in I_{} written by {writer}", covering[0]));
                }
            }
            Provenance::SetElement { player, rank } => {
                let p = player as usize;
                if p != writer || !covering.contains(&p) {
                    return Err(format!("position {j}: set element of player {p} outside its interval"));
                }
                let start = s.randomness.intervals.player(p).start;
                if u64::from(rank) != j as u64 - start + 1 {
                    return Err(format!("position {j}: rank {rank} inconsistent with I_{p}"));
                }
                if !images[p - 1].contains(&a.elements[j - 1]) {
                    return Err(format!("position {j}: element not in sigma(S_{p})"));
                }
                if !used.insert((p, rank)) {
                    return Err(format!("s^{p}_{rank} written twice"));
                }
            }
        }
    }
    Ok(())
}

fn yes_record(params: &Params, seed: u64) -> Record {
    let built = assemble_from_seed(params, Kind::Yes, seed).expect("assembly");
    let s = match built {
        Err(reason) => {
            return Record {
                aborted: Some(reason),
                partition: Ok(()),
                exact_fk: 0,
                multiplicity: 0,
                messages: 0,
                bound: 0,
                heavy: None,
            }
        }
        Ok(s) => s,
    };
    let witness = s.instance.witness.expect("yes witness");
    let positions = heavy_positions(&s.assembly, witness, &s.randomness.sigma);
    let stream = s.assembly.stream().expect("valid stream");
    Record {
        aborted: None,
        partition: check_partition(&s, params),
        exact_fk: exact_fk(&stream, params.k).expect("fk"),
        multiplicity: positions.len() as u64,
        messages: count_messages(&s.assembly.writer),
        bound: message_bound(params, s.randomness.overlapping_pairs),
        heavy: Some(HeavyObservation {
            positions,
            reference: thinned_uniform_sample(params.t, params.n, derive_seed(seed, SeedTag::Thinned, 0)),
        }),
    }
}

struct NoRecord {
    aborted: bool,
    partition: Result<(), String>,
    fk_equals_n: bool,
    within_bound: bool,
}

fn no_record(params: &Params, seed: u64) -> NoRecord {
    match assemble_from_seed(params, Kind::No, seed).expect("assembly") {
        Err(_) => NoRecord { aborted: true, partition: Ok(()), fk_equals_n: true, within_bound: true },
        Ok(s) => {
            let stream = s.assembly.stream().expect("valid stream");
            NoRecord {
                aborted: false,
                partition: check_partition(&s, params),
                fk_equals_n: exact_fk(&stream, params.k).expect("fk") == u128::from(params.n),
                within_bound: count_messages(&s.assembly.writer) <= message_bound(params, s.randomness.overlapping_pairs),
            }
        }
    }
}

// ---------------------------------------------------------------- criteria

fn criteria_1_2() -> Vec<Verdict> {
    let r = verify_lemma1(1_000_000, 3, 0.05, 10_000, derive_seed(ROOT, SeedTag::Trial, 1)).expect("lemma1");
    let triple_limit = r.analytic_triple_bound + 3.0 * binomial_se(r.analytic_triple_bound, r.trials);
    let mean_limit = r.analytic_pair_bound + 3.0 * r.pair_mean_standard_error();
    vec![
        verdict(
            1,
            "triple intersections (n=1e6, k=3, c1=0.05, 1e4 trials)",
            r.t == 100 && r.empirical_triple_prob <= triple_limit,
            format!(
                "t={} w={} empirical={:.4} limit={:.4} (bound {:.3})",
                r.t, r.w, r.empirical_triple_prob, triple_limit, r.analytic_triple_bound
            ),
        ),
        verdict(
            2,
            "overlapping pairs (same setting)",
            r.mean_overlap_pairs <= mean_limit && r.empirical_pair_exceed_prob <= 0.02,
            format!(
                "mean={:.4} limit={:.4}; P(pairs > {:.1})={:.4} limit=0.02",
                r.mean_overlap_pairs, mean_limit, r.pair_threshold, r.empirical_pair_exceed_prob
            ),
        ),
    ]
}

fn criterion_3() -> Verdict {
    let r = verify_lemma2(1_000_000, 4, 0.005, 10_000, derive_seed(ROOT, SeedTag::Trial, 3)).expect("lemma2");
    verdict(
        3,
        "birthday spacing (n=1e6, k=4, c2=0.005, 1e4 trials)",
        r.threshold == 5 && r.empirical_fail_prob <= 0.02,
        format!(
            "threshold={} empirical={:.4} limit=0.02 (predicted {:.4})",
            r.threshold, r.empirical_fail_prob, r.expected_close_pairs
        ),
    )
}

fn brute_force_stats(starts: &[u64], w: u64, n: u64) -> (bool, Vec<(usize, usize)>) {
    let arcs: Vec<CyclicInterval> = starts.iter().map(|&a| CyclicInterval::new(a, w, n).unwrap()).collect();
    let triple = (1..=n).any(|j| arcs.iter().filter(|a| a.contains(j)).count() >= 3);
    let mut pairs = Vec::new();
    for i in 0..arcs.len() {
        for k in i + 1..arcs.len() {
            if (1..=n).any(|j| arcs[i].contains(j) && arcs[k].contains(j)) {
                pairs.push((i + 1, k + 1));
            }
        }
    }
    (triple, pairs)
}

/// Every (n, t, w) with n ≤ 200, t ≤ 20 on a coarse grid, several random
/// placements each; returns the number of mismatches and of cases checked.
fn small_scale_oracle() -> (u64, u64) {
    let mut rng = rng_for(ROOT, SeedTag::Intervals, 4);
    let mut checked = 0u64;
    let mut mismatches = 0u64;
    for n in (10..=200u64).step_by(10) {
        for t in 1..=20u64 {
            for w in [1, 2, 3, 5, 8, 13] {
                if w > n {
                    continue;
                }
                for _ in 0..3 {
                    let starts: Vec<u64> = (0..t).map(|_| rng.gen_range(1..=n)).collect();
                    let Ok(sorted) = SortedIntervals::from_starts(&starts, w, n).unwrap() else {
                        continue;
                    };
                    let ordered: Vec<u64> = sorted.as_slice().iter().map(|i| i.start).collect();
                    let (triple, pairs) = brute_force_stats(&ordered, w, n);
                    let fast = intersection_stats(&sorted);
                    checked += 1;
                    if fast.triple_exists != triple || fast.pairs != pairs || fast.overlapping_pair_count != pairs.len() as u64 {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    (mismatches, checked)
}

fn criterion_4(records: &[Record], no: &[NoRecord]) -> Verdict {
    let completed = records.iter().filter(|r| r.aborted.is_none()).count();
    let mut violations: Vec<&String> = records.iter().filter_map(|r| r.partition.as_ref().err()).collect();
    violations.extend(no.iter().filter_map(|r| r.partition.as_ref().err()));
    let (mismatches, checked) = small_scale_oracle();
    verdict(
        4,
        "decomposition soundness",
        violations.is_empty() && mismatches == 0,
        format!(
            "{} partition violations over {completed} completed YES + {} completed NO assemblies{}; oracle mismatches {mismatches}/{checked}",
            violations.len(),
            no.iter().filter(|r| !r.aborted).count(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

fn criterion_5(params: &Params, records: &[Record], no: &[NoRecord]) -> Verdict {
    let no_done: Vec<&NoRecord> = no.iter().filter(|r| !r.aborted).collect();
    let no_ok = no_done.iter().all(|r| r.fk_equals_n);
    let threshold = (2.0 * params.n as f64).powf(1.0 / f64::from(params.k));
    let yes_done: Vec<&Record> = records[..SUBSET].iter().filter(|r| r.aborted.is_none()).collect();
    let good = yes_done
        .iter()
        .filter(|r| r.multiplicity as f64 > threshold && r.exact_fk >= 2 * u128::from(params.n))
        .count();
    let rate = good as f64 / yes_done.len().max(1) as f64;
    let min_mult = yes_done.iter().map(|r| r.multiplicity).min().unwrap_or(0);
    verdict(
        5,
        "F_k gap",
        no_ok && rate >= 0.99,
        format!(
            "NO: F_k = n on {}/{} completed; YES: {good}/{} completed have multiplicity > {threshold:.2} and F_k >= 2n (rate {rate:.4}, min multiplicity {min_mult})",
            no_done.iter().filter(|r| r.fk_equals_n).count(),
            no_done.len(),
            yes_done.len()
        ),
    )
}

fn criterion_6(params: &Params, records: &[Record], no: &[NoRecord]) -> Verdict {
    let over = records.iter().filter(|r| r.aborted.is_none() && r.messages > r.bound).count()
        + no.iter().filter(|r| !r.within_bound).count();
    let done: Vec<&Record> = records[..SUBSET].iter().filter(|r| r.aborted.is_none()).collect();
    let mean = done.iter().map(|r| r.messages as f64).sum::<f64>() / done.len().max(1) as f64;
    let ratio = mean / params.root();
    verdict(
        6,
        "message bound",
        over == 0 && ratio <= MESSAGE_RATIO_CEILING,
        format!(
            "{over} runs above 4(t+1)+P(ceil(w/w2)+2); mean messages {mean:.1} over {} runs, ratio to n^(1/k) = {ratio:.3} (ceiling {MESSAGE_RATIO_CEILING})",
            done.len()
        ),
    )
}

fn criterion_7(params: &Params, records: &[Record]) -> Verdict {
    let aborted = records.iter().filter(|r| r.aborted.is_some()).count();
    let rate = aborted as f64 / records.len() as f64;
    let draws = run_cyclic_trials(params.n, params.t, params.w, ASSEMBLIES, derive_seed(ROOT, SeedTag::Trial, 7));
    let triple_rate = draws.iter().filter(|d| d.triple_exists).count() as f64 / draws.len() as f64;
    let wrap_term = (params.w - 1) as f64 / params.n as f64;
    let limit = wrap_term + triple_rate + 0.01;
    verdict(
        7,
        "abort rate",
        rate <= limit,
        format!(
            "{aborted}/{} aborted (rate {rate:.4}); limit {limit:.4} = (w-1)/n {wrap_term:.2e} + triple rate {triple_rate:.4} + 0.01",
            records.len()
        ),
    )
}

fn criterion_8() -> Verdict {
    let params = Params::reduction_defaults();
    let started = Instant::now();
    let accuracy = |estimator| {
        let outcomes = protocol_trials(&params, &[Kind::Yes, Kind::No], estimator, 100, 3).expect("protocol");
        let all: Vec<_> = outcomes.iter().collect();
        ProtocolSummary::from_outcomes("all", &params, &all)
    };
    let exact = accuracy(EstimatorKind::Exact);
    let ams = accuracy(EstimatorKind::Ams { samples: 4096 });
    let secs = started.elapsed().as_secs_f64();
    verdict(
        8,
        "end-to-end decision (100 YES + 100 NO per estimator)",
        exact.accuracy >= 0.95 && ams.accuracy >= 0.90,
        format!(
            "exact accuracy {:.3} (abort {:.3}), ams/4096 accuracy {:.3} (abort {:.3}); {secs:.0}s",
            exact.accuracy, exact.abort_rate, ams.accuracy, ams.abort_rate
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = rng_for(ROOT, SeedTag::Trial, 9);
    let mut telescoping_failures = 0;
    for _ in 0..100 {
        let len = rng.gen_range(1..=50);
        let alphabet = rng.gen_range(1..=10u32);
        let k = rng.gen_range(1..=5u32);
        let stream = Stream::new((0..len).map(|_| rng.gen_range(1..=alphabet)).collect()).unwrap();
        let total: u128 = (0..len).map(|j| basic_estimate_at(&stream, k, j).unwrap()).sum();
        if total != len as u128 * exact_fk(&stream, k).unwrap() {
            telescoping_failures += 1;
        }
    }
    let mut segment_failures = 0;
    for case in 0..100u64 {
        let len = rng.gen_range(2..=400usize);
        let alphabet = rng.gen_range(1..=30u32);
        let k = rng.gen_range(2..=4u32);
        let stream: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=alphabet)).collect();
        let mut cuts: Vec<usize> = (0..rng.gen_range(1..=8)).map(|_| rng.gen_range(1..len)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let seed = derive_seed(ROOT, SeedTag::Estimator, case);
        let ams = AmsEstimator::new(k, 64, seed);
        let seg = run_segmented(ams.clone(), &stream, &cuts).unwrap();
        let whole = run_unsegmented(ams, &stream).unwrap();
        let ex_seg = run_segmented(ExactEstimator::new(k, alphabet), &stream, &cuts).unwrap();
        let ex_whole = run_unsegmented(ExactEstimator::new(k, alphabet), &stream).unwrap();
        if seg.estimate != whole || ex_seg.estimate != ex_whole {
            segment_failures += 1;
        }
    }
    verdict(
        9,
        "estimator identities",
        telescoping_failures == 0 && segment_failures == 0,
        format!("telescoping mismatches {telescoping_failures}/100; segmented vs whole mismatches {segment_failures}/100"),
    )
}

fn criterion_10(params: &Params, records: &[Record]) -> Verdict {
    let observations: Vec<Option<HeavyObservation>> = records.iter().map(|r| r.heavy.clone()).collect();
    let report = summarize_uniformity(params, records.len() as u64, &observations);
    verdict(
        10,
        "order diagnostics (1e4 YES assemblies)",
        report.chi_square_pass && report.spacing_ok_frequency >= 0.98,
        format!(
            "survivor chi-square {:.2} on {} dof, p={:.4} (alpha {}); spacing frequency {:.4}; KS p={:.4}",
            report.chi_square, report.chi_square_dof, report.chi_square_p, report.alpha, report.spacing_ok_frequency, report.ks_p
        ),
    )
}

fn criterion_11() -> Verdict {
    let exe = env!("CARGO_BIN_EXE_roml");
    let dir = tempfile::tempdir().expect("tempdir");
    let small = ["--n", "1e4", "--k", "3", "--c", "1/2", "--c1", "0.1", "--c2", "0.1", "--t-factor", "2"];
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen-instance", "--n", "1e6", "--k", "3", "--kind", "yes", "--seed", "7", "--format", "json"],
        vec!["gen-instance", "--kind", "no", "--seed", "7", "--format", "csv"],
        vec!["build-stream", "--kind", "yes", "--seed", "5"],
        vec!["lemma1", "--n", "1e6", "--k", "3", "--c1", "0.01,0.05,0.1", "--trials", "1000", "--seed", "1"],
        vec!["lemma2", "--n", "1e6", "--k", "4", "--c2", "0.005", "--trials", "1000", "--seed", "1"],
        vec!["protocol", "--trials", "20", "--estimator", "exact", "--seed", "3"],
        vec!["protocol", "--trials", "10", "--estimator", "ams", "--samples", "256", "--seed", "3", "--format", "json"],
        vec!["diagnose", "--batches", "30", "--seed", "2"],
        vec!["sweep", "--experiment", "protocol", "--t-factor", "1,2", "--trials", "5"],
    ];
    let mut differing = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("out-{i}-{run}"));
            let mut args: Vec<&str> = cmd.clone();
            if !args.contains(&"--n") {
                args.extend_from_slice(&small);
            }
            let status = Command::new(exe)
                .args(&args)
                .arg("--out")
                .arg(&path)
                .status()
                .expect("spawn roml");
            assert!(status.success(), "roml {} failed", cmd.join(" "));
            // the output path is part of the echoed config; normalize it away
            let text = std::fs::read_to_string(&path).expect("read output");
            outputs.push(text.replace(path.to_str().unwrap(), "OUT"));
        }
        if outputs[0] != outputs[1] {
            differing.push(cmd[0]);
        }
    }
    verdict(
        11,
        "reproducibility",
        differing.is_empty(),
        format!("{} commands rerun, {} differ {:?}", commands.len(), differing.len(), differing),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let params = Params::reduction_defaults();
    println!(
        "acceptance at default params: n={} k={} t={} w={} N={} w2={}",
        params.n, params.k, params.t, params.w, params.big_n, params.w2
    );

    let mut verdicts = criteria_1_2();
    verdicts.push(criterion_3());

    let records: Vec<Record> = (0..ASSEMBLIES)
        .into_par_iter()
        .map(|b| yes_record(&params, derive_seed(ROOT, SeedTag::Trial, b)))
        .collect();
    let no: Vec<NoRecord> = (0..SUBSET as u64)
        .into_par_iter()
        .map(|b| no_record(&params, derive_seed(ROOT, SeedTag::Instance, b)))
        .collect();

    verdicts.push(criterion_4(&records, &no));
    verdicts.push(criterion_5(&params, &records, &no));
    verdicts.push(criterion_6(&params, &records, &no));
    verdicts.push(criterion_7(&params, &records));
    drop(no);
    verdicts.push(criterion_8());
    verdicts.push(criterion_9());
    verdicts.push(criterion_10(&params, &records));
    verdicts.push(criterion_11());

    verdicts.sort_by_key(|v| v.id);
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!("acceptance summary ({:.0}s):", started.elapsed().as_secs_f64());
    for v in &verdicts {
        println!("  {:>2} {} {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.name);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
