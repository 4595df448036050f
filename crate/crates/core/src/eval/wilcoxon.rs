use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;
use statrs::function::erf::erfc;

use super::{Dataset, EvalError, LikertRating};
use crate::par::Execution;

/// Largest effective sample size for which the exact p-value is reported.
pub const EXACT_MAX_N: usize = 12;

/// Treatment of zero differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Wilcox,
    /// Rank zeros with the rest, then leave their ranks out of both sums.
    Pratt,
}

impl FromStr for ZeroMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wilcox" => Ok(ZeroMethod::Wilcox),
            "pratt" => Ok(ZeroMethod::Pratt),
            other => Err(format!("unknown zero method {other:?} (expected wilcox or pratt)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Pairs with a nonzero difference.
    pub n_effective: usize,
    pub n_zero: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)`.
    #[serde(rename = "W")]
    pub w: f64,
    /// Normal approximation with tie and continuity corrections.
    #[serde(rename = "Z")]
    pub z: f64,
    /// Two-sided p from `z`.
    pub p: f64,
    /// Two-sided p by enumerating every sign assignment, for small samples.
    pub p_exact: Option<f64>,
}

/// Twice the average (1-based) ranks of `values`, so ties stay integral.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j share rank ((i+1) + (j+1)) / 2.
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided exact p-value: the share of the `2^n` sign assignments over
/// `ranks2` (doubled ranks) whose smaller rank sum is at most `w2` (the
/// doubled observed statistic).
pub fn exact_p_value(ranks2: &[u64], w2: u64, exec: Execution) -> f64 {
    let n = ranks2.len();
    assert!(n <= 40, "exact enumeration limited to 40 pairs");
    let total: u64 = ranks2.iter().sum();
    if 2 * w2 >= total {
        return 1.0;
    }
    // Split into a small low block tabulated once and a high block enumerated
    // per chunk; the two tails of the sum are disjoint because w2 < total / 2.
    let k = n.min(10);
    let (low, high) = ranks2.split_at(k);
    let mut low_sums: Vec<u64> = (0..1u64 << k)
        .map(|m| low.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, r)| r).sum())
        .collect();
    low_sums.sort_unstable();
    let upper = total - w2;
    let count = exec.sum_range(0..1u64 << high.len(), |m| {
        let h: u64 = high.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, r)| r).sum();
        let below = if h <= w2 { low_sums.partition_point(|&l| l <= w2 - h) } else { 0 };
        let above = low_sums.len() - low_sums.partition_point(|&l| h + l < upper);
        (below + above) as u64
    });
    count as f64 / (1u64 << n) as f64
}

/// Signed-rank test on `(a, b)` pairs with zeros dropped.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult, EvalError> {
    wilcoxon_with(pairs, ZeroMethod::Wilcox, Execution::Sequential)
}

pub fn wilcoxon_with(pairs: &[(f64, f64)], zero: ZeroMethod, exec: Execution) -> Result<WilcoxonResult, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let n_zero = diffs.iter().filter(|d| **d == 0.0).count();
    let ranked: Vec<f64> = match zero {
        ZeroMethod::Wilcox => diffs.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroMethod::Pratt => diffs.clone(),
    };
    if n_zero == diffs.len() {
        return Err(EvalError::AllZeroDifferences);
    }
    let ranks2 = doubled_ranks(&ranked.iter().map(|d| d.abs()).collect::<Vec<_>>());

    let mut effective = Vec::new();
    let (mut plus2, mut minus2) = (0u64, 0u64);
    for (d, r) in ranked.iter().zip(&ranks2) {
        if *d > 0.0 {
            plus2 += r;
        } else if *d < 0.0 {
            minus2 += r;
        } else {
            continue;
        }
        effective.push(*r);
    }
    let w2 = plus2.min(minus2);
    let total2 = plus2 + minus2;

    // Under the null each effective rank joins w_plus with probability 1/2,
    // so the mean is T/2 and the variance sum(r^2)/4. Without zeros these
    // reduce to n(n+1)/4 and n(n+1)(2n+1)/24 - sum(t^3 - t)/48.
    let mean = total2 as f64 / 4.0;
    let var = effective.iter().map(|&r| (r * r) as f64).sum::<f64>() / 16.0;
    let w = w2 as f64 / 2.0;
    let dev = w - mean;
    let corrected = (dev.abs() - 0.5).max(0.0).copysign(dev);
    let z = if var > 0.0 { corrected / var.sqrt() } else { 0.0 };
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);

    let n_effective = effective.len();
    let p_exact = (n_effective <= EXACT_MAX_N).then(|| exact_p_value(&effective, w2, exec));
    Ok(WilcoxonResult {
        n_effective,
        n_zero,
        w_plus: plus2 as f64 / 2.0,
        w_minus: minus2 as f64 / 2.0,
        w,
        z,
        p,
        p_exact,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingRow {
    pub metric: &'static str,
    pub result: Result<WilcoxonResult, EvalError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    pub rows: Vec<RatingRow>,
    pub pairs: usize,
    /// Records with no counterpart for the other tool, as `participant/story/tool`.
    pub unpaired: Vec<String>,
}

/// One test per rating, pairing `tool_a` and `tool_b` records by
/// (participant, story). Differences are `tool_a - tool_b`.
pub fn rating_table(dataset: &Dataset, tool_a: &str, tool_b: &str, zero: ZeroMethod, exec: Execution) -> RatingTable {
    let mut cells: BTreeMap<(&str, &str), (Option<&LikertRating>, Option<&LikertRating>)> = BTreeMap::new();
    let mut unpaired = Vec::new();
    for r in &dataset.records {
        let slot = cells.entry((&r.participant_id, &r.story_id)).or_default();
        if r.tool_id == tool_a {
            slot.0 = Some(&r.ratings);
        } else if r.tool_id == tool_b {
            slot.1 = Some(&r.ratings);
        }
    }
    let mut matched = Vec::new();
    for (&(participant, story), &(a, b)) in &cells {
        match (a, b) {
            (Some(a), Some(b)) => matched.push((a, b)),
            (Some(_), None) => unpaired.push(format!("{participant}/{story}/{tool_a}")),
            (None, Some(_)) => unpaired.push(format!("{participant}/{story}/{tool_b}")),
            (None, None) => {}
        }
    }
    let rows = LikertRating::METRICS
        .iter()
        .map(|&metric| {
            let pairs: Vec<(f64, f64)> = matched
                .iter()
                .map(|(a, b)| (f64::from(a.get(metric).unwrap_or(0)), f64::from(b.get(metric).unwrap_or(0))))
                .collect();
            RatingRow { metric, result: wilcoxon_with(&pairs, zero, exec) }
        })
        .collect();
    RatingTable { rows, pairs: matched.len(), unpaired }
}
