//! Stylized-facts battery for price/volume series.
//!
//! Real equity markets show a stable set of statistical regularities:
//! daily returns are serially uncorrelated but their magnitudes are not
//! (volatility clusters), return distributions have heavy tails that wash
//! out under time aggregation, volatility correlates negatively with
//! returns (the leverage effect) and positively with trading volume.
//! This module computes those statistics on any price/volume history —
//! simulated or otherwise — and turns them into per-fact pass/fail
//! verdicts with explicit, overridable thresholds.
//!
//! All estimators are direct textbook formulas evaluated in one pass of
//! straightforward arithmetic, so they can be checked against brute-force
//! oracles to machine precision.

use crate::error::{Error, Result};
use crate::output::SeriesFrame;
use std::path::Path;

/// Trading-day aggregation horizons.
pub const MONTH_DAYS: usize = 21;
pub const YEAR_DAYS: usize = 252;

/// Below this many days the battery reports every fact as insufficient.
pub const MIN_DAYS: usize = 64;

/// Log returns of a positive price series at a given horizon in days.
///
/// Daily returns (`horizon = 1`) are `ln p(t) - ln p(t-1)` for every
/// consecutive pair. Longer horizons use non-overlapping windows aligned to
/// the series end of each window: anchor days `0, h-1, 2h-1, ...`, so a
/// series of `k*h` days yields `k` returns (the first spans `h-1` intervals,
/// the rest exactly `h`).
pub fn log_returns(prices: &[f64], horizon: usize) -> Result<Vec<f64>> {
    assert!(horizon >= 1, "horizon must be at least 1 day");
    if prices.len() <= horizon {
        return Err(Error::InsufficientData { needed: horizon + 1, got: prices.len() });
    }
    if let Some(i) = prices.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::BadValue {
            row: i,
            column: "price".into(),
            reason: format!("log return of non-positive price {}", prices[i]),
        });
    }
    let mut anchors = vec![0usize];
    let mut k = 1;
    while k * horizon - 1 < prices.len() {
        anchors.push(k * horizon - 1);
        k += 1;
    }
    anchors.dedup();
    Ok(anchors.windows(2).map(|w| (prices[w[1]] / prices[w[0]]).ln()).collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample autocorrelation up to `max_lag`, with the white-noise 95%
/// significance band `1.96 / sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Acf {
    /// `values[k - 1]` is the autocorrelation at lag `k`.
    pub values: Vec<f64>,
    pub band: f64,
}

/// Standard sample ACF: lag-k cross products of deviations over the total
/// sum of squares. `None` when the series is too short for `max_lag` or has
/// zero variance.
pub fn acf(series: &[f64], max_lag: usize) -> Option<Acf> {
    let n = series.len();
    if n <= max_lag + 1 {
        return None;
    }
    let m = mean(series);
    let denom: f64 = series.iter().map(|x| (x - m).powi(2)).sum();
    if denom == 0.0 {
        return None;
    }
    let values = (1..=max_lag)
        .map(|k| {
            let num: f64 = (k..n).map(|t| (series[t] - m) * (series[t - k] - m)).sum();
            num / denom
        })
        .collect();
    Some(Acf { values, band: 1.96 / (n as f64).sqrt() })
}

/// Excess kurtosis `E[((X - mean)/sd)^4] - 3` with population moments.
/// `None` below 4 points or at zero variance.
pub fn excess_kurtosis(series: &[f64]) -> Option<f64> {
    let n = series.len();
    if n < 4 {
        return None;
    }
    let m = mean(series);
    let m2 = series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    if m2 == 0.0 {
        return None;
    }
    let m4 = series.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
    Some(m4 / (m2 * m2) - 3.0)
}

/// Pearson correlation; `None` when either side is degenerate or lengths
/// mismatch or fewer than 2 points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Rolling sample standard deviation: `out[i]` covers
/// `series[i ..= i + window - 1]` (so `out` aligns to the window's last
/// day). Empty when the series is shorter than the window.
pub fn rolling_std(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 2, "a standard deviation needs at least 2 points");
    if series.len() < window {
        return Vec::new();
    }
    series
        .windows(window)
        .map(|w| {
            let m = mean(w);
            let ss: f64 = w.iter().map(|x| (x - m).powi(2)).sum();
            (ss / (window - 1) as f64).sqrt()
        })
        .collect()
}

/// Leverage effect: Pearson correlation between the day's return and the
/// volatility realized over the `window` days strictly after it. The day's
/// own return must stay out of the window — including it would correlate
/// every large move with its own contribution to the estimate.
pub fn leverage_effect(returns: &[f64], window: usize) -> Option<f64> {
    if returns.len() < 2 {
        return None;
    }
    let vol = rolling_std(&returns[1..], window);
    if vol.is_empty() {
        return None;
    }
    pearson(&returns[..vol.len()], &vol)
}

/// Volume correlations against (trailing rolling volatility, same-day
/// return). `volumes` must align 1:1 with `returns`.
pub fn volume_volatility(
    volumes: &[f64],
    returns: &[f64],
    window: usize,
) -> (Option<f64>, Option<f64>) {
    if volumes.len() != returns.len() {
        return (None, None);
    }
    let vol = rolling_std(returns, window);
    let vol_corr =
        if vol.is_empty() { None } else { pearson(&volumes[window - 1..], &vol) };
    (vol_corr, pearson(volumes, returns))
}

/// Count of volatility bursts: maximal runs of days whose trailing rolling
/// volatility exceeds twice the median volatility. Purely descriptive.
pub fn volatility_bursts(returns: &[f64], window: usize) -> Option<f64> {
    let vol = rolling_std(returns, window);
    if vol.is_empty() {
        return None;
    }
    let mut sorted = vol.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let threshold = 2.0 * median;
    let mut bursts = 0u32;
    let mut in_burst = false;
    for v in vol {
        if v > threshold {
            if !in_burst {
                bursts += 1;
            }
            in_burst = true;
        } else {
            in_burst = false;
        }
    }
    Some(bursts as f64)
}

/// Mean recovery duration over mean decline duration across completed
/// drawdown episodes (peak -> trough -> back to the peak). `None` when no
/// episode completes. Values above 1 mean recoveries take longer than the
/// falls that caused them. Purely descriptive.
pub fn drawdown_recovery_ratio(prices: &[f64]) -> Option<f64> {
    let mut peak = *prices.first()?;
    let mut peak_day = 0usize;
    let mut trough = peak;
    let mut trough_day = 0usize;
    let mut in_drawdown = false;
    let mut declines = Vec::new();
    let mut recoveries = Vec::new();
    for (day, &p) in prices.iter().enumerate().skip(1) {
        if p >= peak {
            if in_drawdown {
                declines.push((trough_day - peak_day) as f64);
                recoveries.push((day - trough_day) as f64);
                in_drawdown = false;
            }
            peak = p;
            peak_day = day;
        } else {
            if !in_drawdown {
                in_drawdown = true;
                trough = p;
                trough_day = day;
            } else if p < trough {
                trough = p;
                trough_day = day;
            }
        }
    }
    if declines.is_empty() {
        return None;
    }
    Some(mean(&recoveries) / mean(&declines))
}

/// Verdict thresholds; every cutoff the battery applies lives here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactThresholds {
    /// Fact 1 passes when at least this fraction of return autocorrelations
    /// in `acf_lag_range` sit inside the significance band.
    pub acf_fraction: f64,
    /// Inclusive lag range for fact 1 (short lags are allowed structure).
    pub acf_lag_range: (usize, usize),
    /// Fact 4 passes when at least this fraction of |return|
    /// autocorrelations over lags `1..=clustering_max_lag` sit above the
    /// band.
    pub clustering_fraction: f64,
    pub clustering_max_lag: usize,
    /// Rolling window, in days, for the volatility estimate used by the
    /// leverage and volume facts.
    pub vol_window: usize,
}

impl Default for FactThresholds {
    fn default() -> Self {
        FactThresholds {
            acf_fraction: 0.8,
            acf_lag_range: (6, 21),
            clustering_fraction: 0.5,
            clustering_max_lag: 63,
            vol_window: 21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Not enough data (or a degenerate series) to judge the fact.
    Insufficient,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Insufficient => "insufficient",
        }
    }
}

/// The six verdict-bearing facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactVerdicts {
    /// Raw returns are serially uncorrelated beyond short lags.
    pub no_autocorrelation: Verdict,
    /// Daily returns have positive excess kurtosis.
    pub heavy_tails: Verdict,
    /// Kurtosis shrinks under aggregation: daily > monthly > yearly.
    pub aggregational_gaussianity: Verdict,
    /// |returns| stay positively autocorrelated over long lags.
    pub volatility_clustering: Verdict,
    /// Returns correlate negatively with volatility.
    pub leverage_effect: Verdict,
    /// Volume correlates positively with volatility.
    pub volume_volatility: Verdict,
}

impl FactVerdicts {
    pub fn all(&self) -> [(&'static str, Verdict); 6] {
        [
            ("no_autocorrelation", self.no_autocorrelation),
            ("heavy_tails", self.heavy_tails),
            ("aggregational_gaussianity", self.aggregational_gaussianity),
            ("volatility_clustering", self.volatility_clustering),
            ("leverage_effect", self.leverage_effect),
            ("volume_volatility", self.volume_volatility),
        ]
    }

    /// True only when every fact is a hard pass — insufficient data never
    /// counts as success.
    pub fn all_pass(&self) -> bool {
        self.all().iter().all(|(_, v)| *v == Verdict::Pass)
    }
}

/// Everything the battery measured, plus the verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct StylizedFactsReport {
    pub n_days: usize,
    pub acf_returns: Option<Acf>,
    pub acf_abs_returns: Option<Acf>,
    /// Fraction of fact-1 lags inside the band.
    pub acf_within_fraction: Option<f64>,
    /// Fraction of fact-4 lags above the band.
    pub clustering_above_fraction: Option<f64>,
    pub kurtosis_daily: Option<f64>,
    pub kurtosis_monthly: Option<f64>,
    pub kurtosis_yearly: Option<f64>,
    pub leverage_corr: Option<f64>,
    pub volume_volatility_corr: Option<f64>,
    pub volume_return_corr: Option<f64>,
    pub volatility_bursts: Option<f64>,
    pub drawdown_recovery: Option<f64>,
    pub verdicts: FactVerdicts,
}

/// One row of `stylized_facts.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactRow {
    pub statistic: &'static str,
    pub value: Option<f64>,
    pub verdict: Option<Verdict>,
}

impl StylizedFactsReport {
    /// Flat rows for the CSV: verdict-bearing facts first, descriptive
    /// statistics after.
    pub fn rows(&self) -> Vec<FactRow> {
        let v = &self.verdicts;
        vec![
            FactRow {
                statistic: "acf_returns_within_band_fraction",
                value: self.acf_within_fraction,
                verdict: Some(v.no_autocorrelation),
            },
            FactRow {
                statistic: "excess_kurtosis_daily",
                value: self.kurtosis_daily,
                verdict: Some(v.heavy_tails),
            },
            FactRow {
                statistic: "kurtosis_daily_minus_yearly",
                value: match (self.kurtosis_daily, self.kurtosis_yearly) {
                    (Some(d), Some(y)) => Some(d - y),
                    _ => None,
                },
                verdict: Some(v.aggregational_gaussianity),
            },
            FactRow {
                statistic: "acf_abs_returns_above_band_fraction",
                value: self.clustering_above_fraction,
                verdict: Some(v.volatility_clustering),
            },
            FactRow {
                statistic: "leverage_corr",
                value: self.leverage_corr,
                verdict: Some(v.leverage_effect),
            },
            FactRow {
                statistic: "volume_volatility_corr",
                value: self.volume_volatility_corr,
                verdict: Some(v.volume_volatility),
            },
            FactRow {
                statistic: "excess_kurtosis_monthly",
                value: self.kurtosis_monthly,
                verdict: None,
            },
            FactRow {
                statistic: "excess_kurtosis_yearly",
                value: self.kurtosis_yearly,
                verdict: None,
            },
            FactRow {
                statistic: "volume_return_corr",
                value: self.volume_return_corr,
                verdict: None,
            },
            FactRow {
                statistic: "volatility_burst_count",
                value: self.volatility_bursts,
                verdict: None,
            },
            FactRow {
                statistic: "drawdown_recovery_ratio",
                value: self.drawdown_recovery,
                verdict: None,
            },
        ]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let wrap = |e| Error::Csv { path: path.display().to_string(), source: e };
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Csv { path: path.display().to_string(), source: e })?;
        w.write_record(["statistic", "value", "verdict"]).map_err(wrap)?;
        for row in self.rows() {
            w.write_record([
                row.statistic.to_string(),
                row.value.map(|v| v.to_string()).unwrap_or_default(),
                row.verdict.map(|v| v.as_str().to_string()).unwrap_or_default(),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        Ok(())
    }
}

/// Collapses a multi-stock market into one index: the level compounds the
/// cross-stock mean of daily log returns (a geometric equal-weight index,
/// base 1.0), and volume sums shares traded across stocks.
pub fn market_aggregate(
    prices: &[Vec<f64>],
    volumes: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if prices.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n_days = prices[0].len();
    if prices.iter().any(|p| p.len() != n_days)
        || volumes.len() != prices.len()
        || volumes.iter().any(|v| v.len() != n_days)
    {
        return Err(Error::Config("price/volume series must be rectangular".into()));
    }
    if n_days < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n_days });
    }
    let per_stock: Vec<Vec<f64>> =
        prices.iter().map(|p| log_returns(p, 1)).collect::<Result<_>>()?;
    let mut level = Vec::with_capacity(n_days);
    level.push(1.0);
    for t in 0..n_days - 1 {
        let r = per_stock.iter().map(|rs| rs[t]).sum::<f64>() / per_stock.len() as f64;
        level.push(level[t] * r.exp());
    }
    let volume: Vec<f64> =
        (0..n_days).map(|t| volumes.iter().map(|v| v[t]).sum()).collect();
    Ok((level, volume))
}

/// Runs the full battery on per-stock price and volume histories
/// (outer index = stock). Short or degenerate inputs yield
/// `Insufficient` verdicts rather than errors; only malformed shape is an
/// error.
pub fn stylized_report(
    prices: &[Vec<f64>],
    volumes: &[Vec<f64>],
    th: &FactThresholds,
) -> Result<StylizedFactsReport> {
    let (level, volume) = market_aggregate(prices, volumes)?;
    Ok(report_on_aggregate(&level, &volume, th))
}

/// The battery on an already-aggregated index level and volume series.
pub fn report_on_aggregate(
    level: &[f64],
    volume: &[f64],
    th: &FactThresholds,
) -> StylizedFactsReport {
    let n_days = level.len();
    let returns = log_returns(level, 1).unwrap_or_default();
    let abs_returns: Vec<f64> = returns.iter().map(|r| r.abs()).collect();

    let acf_returns = acf(&returns, th.acf_lag_range.1);
    let acf_abs_returns = acf(&abs_returns, th.clustering_max_lag);

    let acf_within_fraction = acf_returns.as_ref().map(|a| {
        let (lo, hi) = th.acf_lag_range;
        let lags = &a.values[lo - 1..hi];
        lags.iter().filter(|v| v.abs() <= a.band).count() as f64 / lags.len() as f64
    });
    let clustering_above_fraction = acf_abs_returns.as_ref().map(|a| {
        a.values.iter().filter(|v| **v > a.band).count() as f64 / a.values.len() as f64
    });

    let kurtosis_daily = excess_kurtosis(&returns);
    let kurtosis_monthly =
        log_returns(level, MONTH_DAYS).ok().and_then(|r| excess_kurtosis(&r));
    let kurtosis_yearly =
        log_returns(level, YEAR_DAYS).ok().and_then(|r| excess_kurtosis(&r));

    let leverage_corr = leverage_effect(&returns, th.vol_window);
    // Volume on day t pairs with the return from day t-1 to t; day 0's
    // volume has no return and is dropped.
    let (volume_volatility_corr, volume_return_corr) = if volume.len() == n_days && n_days >= 2
    {
        volume_volatility(&volume[1..], &returns, th.vol_window)
    } else {
        (None, None)
    };

    let enough = n_days >= MIN_DAYS;
    let judge = |stat: Option<f64>, pass: &dyn Fn(f64) -> bool| -> Verdict {
        match stat {
            Some(v) if enough => {
                if pass(v) {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
            _ => Verdict::Insufficient,
        }
    };

    let aggregational_gaussianity = match (kurtosis_daily, kurtosis_monthly, kurtosis_yearly) {
        (Some(d), Some(m), Some(y)) if enough => {
            if d > m && m > y {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        _ => Verdict::Insufficient,
    };

    let verdicts = FactVerdicts {
        no_autocorrelation: judge(acf_within_fraction, &|f| f >= th.acf_fraction),
        heavy_tails: judge(kurtosis_daily, &|k| k > 0.0),
        aggregational_gaussianity,
        volatility_clustering: judge(clustering_above_fraction, &|f| {
            f >= th.clustering_fraction
        }),
        leverage_effect: judge(leverage_corr, &|c| c <= 0.0),
        volume_volatility: judge(volume_volatility_corr, &|c| c > 0.0),
    };

    StylizedFactsReport {
        n_days,
        acf_returns,
        acf_abs_returns,
        acf_within_fraction,
        clustering_above_fraction,
        kurtosis_daily,
        kurtosis_monthly,
        kurtosis_yearly,
        leverage_corr,
        volume_volatility_corr,
        volume_return_corr,
        volatility_bursts: volatility_bursts(&returns, th.vol_window),
        drawdown_recovery: drawdown_recovery_ratio(level),
        verdicts,
    }
}

/// Battery entry point for frames read back from the output CSVs.
pub fn stylized_report_from_frames(
    prices: &SeriesFrame,
    volumes: &SeriesFrame,
    th: &FactThresholds,
) -> Result<StylizedFactsReport> {
    let p: Vec<Vec<f64>> =
        (0..prices.entities().len()).map(|i| prices.column_by_index(i)).collect();
    let v: Vec<Vec<f64>> =
        (0..volumes.entities().len()).map(|i| volumes.column_by_index(i)).collect();
    stylized_report(&p, &v, th)
}

/// Headline performance numbers for a NAV history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    /// `nav_end / nav_start - 1`.
    pub total_return: f64,
    /// Sample std of daily log returns, annualized by `sqrt(252)`.
    pub annualized_volatility: f64,
    /// Deepest peak-to-trough loss as a positive fraction.
    pub max_drawdown: f64,
}

pub fn summary_stats(nav: &[f64]) -> Option<SummaryStats> {
    if nav.len() < 2 || nav.iter().any(|x| !(*x > 0.0)) {
        return None;
    }
    let returns = log_returns(nav, 1).ok()?;
    let m = mean(&returns);
    let var = returns.iter().map(|r| (r - m).powi(2)).sum::<f64>()
        / (returns.len().max(2) - 1) as f64;
    let mut peak = nav[0];
    let mut max_dd = 0.0f64;
    for &x in nav {
        peak = peak.max(x);
        max_dd = max_dd.max(1.0 - x / peak);
    }
    Some(SummaryStats {
        total_return: nav[nav.len() - 1] / nav[0] - 1.0,
        annualized_volatility: var.sqrt() * (YEAR_DAYS as f64).sqrt(),
        max_drawdown: max_dd,
    })
}
