//! Rank statistics: the one-sided Mann-Whitney U test.
//!
//! `U` counts, over all cross pairs, how often a value from the first group
//! beats one from the second (ties count half), so `U = n1 * n2` means
//! complete separation and `U = n1 * n2 / 2` means no tendency either way.
//! The p-value is exact by subset enumeration for small samples and a
//! tie-corrected normal approximation above [`EXACT_METHOD_MAX_TOTAL`].
//! Because the test only sees ranks, any strictly monotone transform of the
//! inputs leaves `U` (and the p-value) exactly unchanged.

use thiserror::Error;

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_METHOD_MAX_TOTAL: usize = 19;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("both groups must be non-empty (sizes {0} and {1})")]
    EmptyGroup(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    ExactEnumeration,
    NormalApproximation,
}

/// Result of the one-sided test with alternative "the first group tends to
/// be larger than the second".
#[derive(Debug, Clone, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first group: wins plus half-ties over all pairs.
    pub u: f64,
    /// One-sided p-value. The exact method uses the mid-p convention
    /// `P(U' > u) + P(U' = u) / 2`, which matches the continuity-corrected
    /// normal tail and yields exactly 0.5 when every value is tied.
    pub p_one_sided: f64,
    /// Rank-biserial effect size `2U / (n1 n2) - 1`, in `[-1, 1]`.
    pub rank_biserial: f64,
    pub method: PValueMethod,
}

/// Average ranks (1-based) of the pooled sample, ties sharing their mean
/// rank.
fn average_ranks(pooled: &[f64]) -> Vec<f64> {
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pooled[a].partial_cmp(&pooled[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let shared = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = shared;
        }
        i = j;
    }
    ranks
}

fn u_from_rank_sum(rank_sum: f64, n1: usize) -> f64 {
    rank_sum - (n1 * (n1 + 1)) as f64 / 2.0
}

/// Standard normal survival function via the complementary error function.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// One-sided Mann-Whitney U test of `first` against `second`, alternative:
/// values in `first` tend to be larger.
pub fn mann_whitney_one_sided(first: &[f64], second: &[f64]) -> Result<MannWhitney, StatsError> {
    let (n1, n2) = (first.len(), second.len());
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::EmptyGroup(n1, n2));
    }
    let mut pooled = Vec::with_capacity(n1 + n2);
    pooled.extend_from_slice(first);
    pooled.extend_from_slice(second);
    let ranks = average_ranks(&pooled);
    let rank_sum_first: f64 = ranks[..n1].iter().sum();
    let u = u_from_rank_sum(rank_sum_first, n1);
    let rank_biserial = 2.0 * u / (n1 * n2) as f64 - 1.0;

    let total = n1 + n2;
    let (p, method) = if total <= EXACT_METHOD_MAX_TOTAL {
        (exact_mid_p(&ranks, n1, u), PValueMethod::ExactEnumeration)
    } else {
        (
            normal_approx_p(&pooled, n1, n2, u),
            PValueMethod::NormalApproximation,
        )
    };
    Ok(MannWhitney {
        u,
        p_one_sided: p,
        rank_biserial,
        method,
    })
}

/// Exact null distribution by enumerating every size-`n1` subset of the
/// pooled ranks. Mid-p: strictly larger U counts fully, equal U half.
fn exact_mid_p(ranks: &[f64], n1: usize, u_observed: f64) -> f64 {
    let n = ranks.len();
    let mut greater = 0u64;
    let mut equal = 0u64;
    let mut total = 0u64;
    // Ranks are halves of integers, so U values are exact in f64; the
    // epsilon only guards the summation arithmetic.
    let eps = 1e-9;
    let mut subset: Vec<usize> = (0..n1).collect();
    loop {
        let rank_sum: f64 = subset.iter().map(|&i| ranks[i]).sum();
        let u = u_from_rank_sum(rank_sum, n1);
        total += 1;
        if u > u_observed + eps {
            greater += 1;
        } else if (u - u_observed).abs() <= eps {
            equal += 1;
        }
        // Advance to the next lexicographic combination.
        let mut i = n1;
        loop {
            if i == 0 {
                return (greater as f64 + equal as f64 / 2.0) / total as f64;
            }
            i -= 1;
            if subset[i] != i + n - n1 {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..n1 {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Tie-corrected normal approximation with continuity correction.
fn normal_approx_p(pooled: &[f64], n1: usize, n2: usize, u: f64) -> f64 {
    let n = (n1 + n2) as f64;
    let mean = (n1 * n2) as f64 / 2.0;

    // Tie correction: sum of t^3 - t over tie groups.
    let mut sorted = pooled.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let variance = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        // Every observation tied: no evidence either way.
        return 0.5;
    }
    let z = (u - mean - 0.5) / variance.sqrt();
    normal_sf(z)
}
