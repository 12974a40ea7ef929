//! Style scores: cross-sectional Value and Growth rankings.
//!
//! Each score is a weighted blend of five criteria. A criterion is measured
//! per stock, rank-normalized across the universe to [0, 1] (average ranks on
//! ties, undefined entries pinned to the neutral 0.5), then combined:
//!
//! * Value: price-to-projected-earnings (50%), price-to-book, price-to-sales,
//!   price-to-cash-flow, dividend yield (12.5% each). Price ratios count as
//!   better when lower; yield is better when higher.
//! * Growth: long-term projected earnings growth (50%) plus year-over-year
//!   growth of earnings, sales, cash flow, and book value (12.5% each), all
//!   better when higher.
//!
//! Flow quantities are annualized (4x the latest quarter) and divided by
//! shares outstanding to obtain per-share figures; book value is a level and
//! is only divided by shares. A ratio is undefined when its per-share
//! denominator is not strictly positive, and growth is undefined when the
//! base is zero or the needed history has not been announced yet.

use crate::data::{FundamentalsView, QUARTERS_PER_YEAR};

/// Criterion weights, headline criterion first. Sum to exactly 1.
pub const CRITERION_WEIGHTS: [f64; 5] = [0.5, 0.125, 0.125, 0.125, 0.125];

/// Quarters between a report and its year-ago comparison point.
pub const YOY_LAG: u32 = 4;

/// Whether larger raw values are better, per Value criterion.
pub const VALUE_HIGHER_IS_BETTER: [bool; 5] = [false, false, false, false, true];

/// Whether larger raw values are better, per Growth criterion (all of them).
pub const GROWTH_HIGHER_IS_BETTER: [bool; 5] = [true, true, true, true, true];

/// Both style scores for one day, one entry per stock, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub value: Vec<f64>,
    pub growth: Vec<f64>,
}

fn defined(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// price / (annualized per-share flow); undefined unless the per-share flow
/// is strictly positive.
fn price_to_flow(price: f64, quarterly: f64, shares: f64) -> Option<f64> {
    let per_share = QUARTERS_PER_YEAR * quarterly / shares;
    if per_share > 0.0 {
        defined(price / per_share)
    } else {
        None
    }
}

/// Raw Value criteria per stock, in weight order:
/// `[price/projected earnings, price/book, price/sales, price/cash flow, dividend yield]`.
pub fn value_criteria(view: &FundamentalsView<'_>, prices: &[f64]) -> [Vec<Option<f64>>; 5] {
    let n = view.n_stocks();
    assert_eq!(prices.len(), n, "one price per stock");
    let mut out: [Vec<Option<f64>>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
    for s in 0..n {
        let r = view.latest(s);
        let p = prices[s];
        out[0].push(price_to_flow(p, r.projected_earnings, r.shares_outstanding));
        let book_per_share = r.book_value / r.shares_outstanding;
        out[1].push(if book_per_share > 0.0 { defined(p / book_per_share) } else { None });
        out[2].push(price_to_flow(p, r.sales, r.shares_outstanding));
        out[3].push(price_to_flow(p, r.cash_flow, r.shares_outstanding));
        out[4].push(defined(QUARTERS_PER_YEAR * r.dividend_per_share / p));
    }
    out
}

/// Relative change against a signed base: `(x - base) / |base|`,
/// undefined when the base is zero.
fn growth_vs(x: f64, base: f64) -> Option<f64> {
    if base == 0.0 {
        None
    } else {
        defined((x - base) / base.abs())
    }
}

/// Raw Growth criteria per stock, in weight order:
/// `[projected earnings growth, earnings YoY, sales YoY, cash flow YoY, book value YoY]`.
///
/// Year-over-year entries compare the latest visible quarter with the report
/// four quarters earlier and are undefined until that history exists.
pub fn growth_criteria(view: &FundamentalsView<'_>) -> [Vec<Option<f64>>; 5] {
    let n = view.n_stocks();
    let mut out: [Vec<Option<f64>>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
    for s in 0..n {
        let latest = view.latest(s);
        out[0].push(growth_vs(latest.projected_earnings, latest.earnings));
        match view.lagged(s, YOY_LAG) {
            Some(base) => {
                out[1].push(growth_vs(latest.earnings, base.earnings));
                out[2].push(growth_vs(latest.sales, base.sales));
                out[3].push(growth_vs(latest.cash_flow, base.cash_flow));
                out[4].push(growth_vs(latest.book_value, base.book_value));
            }
            None => {
                for c in 1..5 {
                    out[c].push(None);
                }
            }
        }
    }
    out
}

/// Rank-normalizes one criterion to [0, 1].
///
/// Defined entries get average ranks (ties share the mean of the positions
/// they span), mapped as `(rank - 1) / (n_defined - 1)` so the worst entry
/// scores 0 and the best scores 1. When `higher_is_better` is false the
/// ranking is inverted. Undefined entries — and every entry when fewer than
/// two are defined — score the neutral 0.5.
pub fn rank_normalize(values: &[Option<f64>], higher_is_better: bool) -> Vec<f64> {
    let mut out = vec![0.5; values.len()];
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let m = idx.len();
    if m < 2 {
        return out;
    }
    idx.sort_by(|&a, &b| values[a].unwrap().total_cmp(&values[b].unwrap()));

    // Ascending average ranks, 1-based; ties share the mean rank of their run.
    let mut start = 0;
    while start < m {
        let v = values[idx[start]].unwrap();
        let mut end = start + 1;
        while end < m && values[idx[end]].unwrap() == v {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0; // mean of start+1 ..= end
        let score = (avg_rank - 1.0) / (m as f64 - 1.0);
        for &i in &idx[start..end] {
            out[i] = if higher_is_better { score } else { 1.0 - score };
        }
        start = end;
    }
    out
}

/// Weighted blend of rank-normalized criteria. Output is one score per stock
/// in [0, 1]; an all-undefined column contributes its weight times 0.5.
pub fn composite(criteria: &[Vec<Option<f64>>; 5], higher_is_better: &[bool; 5]) -> Vec<f64> {
    let n = criteria[0].len();
    let mut out = vec![0.0; n];
    for c in 0..5 {
        debug_assert_eq!(criteria[c].len(), n);
        let normalized = rank_normalize(&criteria[c], higher_is_better[c]);
        for (acc, x) in out.iter_mut().zip(normalized) {
            *acc += CRITERION_WEIGHTS[c] * x;
        }
    }
    out
}

/// Value and Growth composites for one day, priced at the previous close.
pub fn compute_scores(view: &FundamentalsView<'_>, prices: &[f64]) -> Scores {
    Scores {
        value: composite(&value_criteria(view, prices), &VALUE_HIGHER_IS_BETTER),
        growth: composite(&growth_criteria(view), &GROWTH_HIGHER_IS_BETTER),
    }
}
