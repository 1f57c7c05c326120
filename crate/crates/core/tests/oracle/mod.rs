//! Independent Friedman / post-hoc reference used by the oracle tests.
//!
//! Ranks come from scanning a sorted copy for equal values, the statistic is
//! the textbook `12/(nk(k+1)) sum R^2 - 3n(k+1)` divided by the tie
//! correction, and the chi-square tail is evaluated in closed form for integer
//! degrees of freedom.

#![allow(dead_code)]

use cogsa_core::stats::{friedman_statistic, pairwise_posthoc, PairedResults};

pub const TOL: f64 = 1e-10;

pub fn oracle_ranks(row: &[f64]) -> Vec<f64> {
    let mut sorted = row.to_vec();
    sorted.sort_by(f64::total_cmp);
    row.iter()
        .map(|v| {
            let positions: Vec<f64> = sorted
                .iter()
                .enumerate()
                .filter(|(_, s)| *s == v)
                .map(|(p, _)| (p + 1) as f64)
                .collect();
            positions.iter().sum::<f64>() / positions.len() as f64
        })
        .collect()
}

pub fn rank_sums(blocks: &[Vec<f64>]) -> Vec<f64> {
    let k = blocks[0].len();
    let mut sums = vec![0.0; k];
    for row in blocks {
        for (s, r) in sums.iter_mut().zip(oracle_ranks(row)) {
            *s += r;
        }
    }
    sums
}

/// Upper tail of chi-square with integer `dof`, by the finite series.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    let h = x / 2.0;
    if dof.is_multiple_of(2) {
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..dof / 2 {
            term *= h / i as f64;
            sum += term;
        }
        (-h).exp() * sum
    } else {
        let mut tail = libm::erfc(h.sqrt());
        // Q(m + 1/2) = Q(m - 1/2) + h^(m - 1/2) e^-h / Gamma(m + 1/2)
        let mut term = 2.0 * (h / std::f64::consts::PI).sqrt() * (-h).exp();
        for m in 1..=(dof - 1) / 2 {
            tail += term;
            term *= h / (m as f64 + 0.5);
        }
        tail
    }
}

pub struct Oracle {
    pub chi_square: f64,
    pub p_value: f64,
}

pub fn oracle_friedman(blocks: &[Vec<f64>]) -> Oracle {
    let n = blocks.len() as f64;
    let k = blocks[0].len() as f64;
    let sums = rank_sums(blocks);
    let classic =
        12.0 / (n * k * (k + 1.0)) * sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * n * (k + 1.0);
    let mut tie_terms = 0.0;
    for row in blocks {
        let mut seen: Vec<f64> = Vec::new();
        for v in row {
            if seen.contains(v) {
                continue;
            }
            seen.push(*v);
            let t = row.iter().filter(|w| *w == v).count() as f64;
            tie_terms += t * t * t - t;
        }
    }
    let correction = 1.0 - tie_terms / (n * (k * k * k - k));
    if correction.abs() < 1e-12 {
        return Oracle {
            chi_square: 0.0,
            p_value: 1.0,
        };
    }
    let chi_square = classic / correction;
    Oracle {
        chi_square,
        p_value: chi2_sf(chi_square, blocks[0].len() - 1),
    }
}

/// `(raw, adjusted)` p for reference `r` against every other column.
pub fn oracle_posthoc(blocks: &[Vec<f64>], r: usize) -> Vec<(f64, f64)> {
    let n = blocks.len() as f64;
    let k = blocks[0].len();
    let kf = k as f64;
    let sums = rank_sums(blocks);
    // rank-sum form of the same statistic
    let sd = (n * kf * (kf + 1.0) / 6.0).sqrt();
    (0..k)
        .filter(|&j| j != r)
        .map(|j| {
            let z = (sums[r] - sums[j]) / sd;
            let raw = libm::erfc(z.abs() / std::f64::consts::SQRT_2);
            (raw, (raw * (kf - 1.0)).min(1.0))
        })
        .collect()
}

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("a{i}")).collect()
}

pub fn check(blocks: &[Vec<f64>]) {
    let k = blocks[0].len();
    let data = PairedResults::new(names(k), blocks.to_vec()).unwrap();
    let got = friedman_statistic(&data);
    let want = oracle_friedman(blocks);
    assert!(
        (got.chi_square - want.chi_square).abs() <= TOL,
        "chi2 {} vs {} on {blocks:?}",
        got.chi_square,
        want.chi_square
    );
    assert!(
        (got.p_value - want.p_value).abs() <= TOL,
        "p {} vs {} on {blocks:?}",
        got.p_value,
        want.p_value
    );
    for r in 0..k {
        let post = pairwise_posthoc(&data, &format!("a{r}"), 0.01).unwrap();
        for (c, (raw, adjusted)) in post.iter().zip(oracle_posthoc(blocks, r)) {
            assert!((c.raw_p - raw).abs() <= TOL, "raw p on {blocks:?}");
            assert!(
                (c.p_value - adjusted).abs() <= TOL,
                "adjusted p on {blocks:?}"
            );
        }
    }
}

/// Every weak ordering of `k` items, as small integer scores.
pub fn weak_orderings(k: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let total = k.pow(k as u32);
    for code in 0..total {
        let mut row = Vec::with_capacity(k);
        let mut c = code;
        for _ in 0..k {
            row.push((c % k) as f64);
            c /= k;
        }
        let ranks = oracle_ranks(&row);
        if !out.iter().any(|o| oracle_ranks(o) == ranks) {
            out.push(row);
        }
    }
    out
}

/// Runs `check` on every sequence of `n` blocks drawn from `patterns`.
pub fn exhaust(patterns: &[Vec<f64>], n: usize) -> usize {
    let p = patterns.len();
    let total = p.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let blocks: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let row = patterns[c % p].clone();
                c /= p;
                row
            })
            .collect();
        check(&blocks);
    }
    total
}

/// `count` random instances with 4..=8 algorithms and 6..=30 blocks. A narrow
/// value range forces plenty of ties.
pub fn random_instances(seed: u64, count: usize) -> Vec<Vec<Vec<f64>>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(4..=8);
            let n = rng.gen_range(6..=30);
            let levels = rng.gen_range(2..=12);
            (0..n)
                .map(|_| {
                    (0..k)
                        .map(|_| rng.gen_range(0..levels) as f64 * 0.5)
                        .collect()
                })
                .collect()
        })
        .collect()
}
