//! Goodness-of-fit tests used by the order diagnostics.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts `0..=trials` against
/// `Binomial(trials, p)`. Adjacent values are pooled until every cell expects
/// at least 5 observations.
pub fn chi_square_binomial(observed: &[u64], trials: u64, p: f64) -> ChiSquareResult {
    let total: u64 = observed.iter().sum();
    let law = Binomial::new(p, trials).expect("valid binomial");
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
    for v in 0..=trials {
        obs_acc += observed.get(v as usize).copied().unwrap_or(0) as f64;
        exp_acc += total as f64 * law.pmf(v);
        if exp_acc >= 5.0 {
            cells.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    // observations beyond `trials` are impossible under the law
    let overflow: u64 = observed.iter().skip(trials as usize + 1).sum();
    obs_acc += overflow as f64;
    match cells.last_mut() {
        Some(last) => {
            last.0 += obs_acc;
            last.1 += exp_acc;
        }
        None => cells.push((obs_acc, exp_acc)),
    }

    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else { 0.0 })
        .sum();
    let dof = cells.len().saturating_sub(1) as u64;
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive dof");
        (1.0 - dist.cdf(statistic)).clamp(0.0, 1.0)
    };
    ChiSquareResult {
        statistic,
        dof,
        p_value,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{j−1} e^{−2 j² λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[u32], b: &[u32]) -> KsResult {
    if a.is_empty() || b.is_empty() {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let en = (n1 * n2 / (n1 + n2)).sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}
