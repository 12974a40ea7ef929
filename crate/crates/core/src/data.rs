//! Quarterly fundamentals: storage, CSV ingestion, synthesis, and the
//! announcement calendar.
//!
//! A simulated year has 252 trading days and four fiscal quarters of 63 days.
//! Each stock files its quarter-`q` report on day `63*q + offset`, where the
//! offset staggers announcements across the quarter so roughly `n/63` stocks
//! report per day. Quarter 0 is the initialization snapshot and is visible to
//! everyone from day 0; it also carries the initial price and share count.
//!
//! The on-disk format is a single CSV with a fixed header:
//!
//! ```text
//! stock_id,fiscal_quarter,earnings,projected_earnings,sales,cash_flow,book_value,dividend_per_share,shares_outstanding,initial_price
//! ```
//!
//! `initial_price` is only meaningful on quarter-0 rows and is left empty on
//! the rest. Flow quantities (earnings, projected earnings, sales, cash flow,
//! dividend per share) are per quarter; book value and shares outstanding are
//! levels.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Trading days per fiscal quarter.
pub const QUARTER_DAYS: u32 = 63;

/// Quarters per year, used to annualize flow quantities.
pub const QUARTERS_PER_YEAR: f64 = 4.0;

/// Expected CSV header, in column order.
pub const CSV_HEADER: [&str; 10] = [
    "stock_id",
    "fiscal_quarter",
    "earnings",
    "projected_earnings",
    "sales",
    "cash_flow",
    "book_value",
    "dividend_per_share",
    "shares_outstanding",
    "initial_price",
];

/// One stock-quarter report. Flow fields are per quarter; `book_value` and
/// `shares_outstanding` are levels at the end of the quarter.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalsRecord {
    pub earnings: f64,
    pub projected_earnings: f64,
    pub sales: f64,
    pub cash_flow: f64,
    pub book_value: f64,
    pub dividend_per_share: f64,
    pub shares_outstanding: f64,
}

/// All fundamentals for one universe of stocks, quarter-contiguous per stock.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalsTable {
    stock_ids: Vec<String>,
    /// `records[stock][quarter]`; every stock has quarter 0.
    records: Vec<Vec<FundamentalsRecord>>,
    /// Day-0 price per stock, from the quarter-0 rows.
    initial_prices: Vec<f64>,
}

/// Latest-visible-quarter snapshot of a table as of a given day.
///
/// Participants only ever see fundamentals through a view; the underlying
/// table may extend further into the future than the view's day.
#[derive(Debug, Clone)]
pub struct FundamentalsView<'a> {
    table: &'a FundamentalsTable,
    day: u32,
    visible: Vec<u32>,
}

/// Configuration for the synthetic fundamentals generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_stocks: usize,
    pub n_quarters: u32,
    pub seed: u64,
}

/// Announcement offset for a stock: `floor(stock_index * 63 / n_stocks)`.
///
/// Offsets are fixed, monotone in the index, and spread the universe evenly
/// over the 63-day quarter.
pub fn announcement_offset(stock_index: usize, n_stocks: usize) -> u32 {
    assert!(n_stocks > 0, "announcement_offset: empty universe");
    assert!(stock_index < n_stocks, "announcement_offset: index out of range");
    (stock_index as u64 * QUARTER_DAYS as u64 / n_stocks as u64) as u32
}

/// Day on which quarter `q` becomes public for a stock with the given offset.
/// Quarter 0 is the initialization snapshot, public from day 0.
pub fn announcement_day(quarter: u32, offset: u32) -> u32 {
    if quarter == 0 {
        0
    } else {
        QUARTER_DAYS * quarter + offset
    }
}

/// Latest quarter visible on `day` for a stock with `offset`, capped at the
/// stock's last recorded quarter.
pub fn visible_quarter(day: u32, offset: u32, max_quarter: u32) -> u32 {
    if day < QUARTER_DAYS + offset {
        0
    } else {
        ((day - offset) / QUARTER_DAYS).min(max_quarter)
    }
}

impl FundamentalsTable {
    /// Builds a table from parallel vectors. Internal constructor shared by
    /// the loader and the generator; enforces the structural invariants.
    fn new(
        stock_ids: Vec<String>,
        records: Vec<Vec<FundamentalsRecord>>,
        initial_prices: Vec<f64>,
    ) -> Result<Self> {
        if stock_ids.is_empty() {
            return Err(Error::EmptyTable);
        }
        debug_assert_eq!(stock_ids.len(), records.len());
        debug_assert_eq!(stock_ids.len(), initial_prices.len());
        Ok(Self { stock_ids, records, initial_prices })
    }

    pub fn n_stocks(&self) -> usize {
        self.stock_ids.len()
    }

    pub fn stock_ids(&self) -> &[String] {
        &self.stock_ids
    }

    pub fn stock_index(&self, id: &str) -> Option<usize> {
        self.stock_ids.iter().position(|s| s == id)
    }

    /// Number of recorded quarters for a stock (at least 1).
    pub fn n_quarters(&self, stock: usize) -> u32 {
        self.records[stock].len() as u32
    }

    pub fn record(&self, stock: usize, quarter: u32) -> Option<&FundamentalsRecord> {
        self.records[stock].get(quarter as usize)
    }

    /// Day-0 price from the quarter-0 row.
    pub fn initial_price(&self, stock: usize) -> f64 {
        self.initial_prices[stock]
    }

    /// Fixed share supply: the quarter-0 share count.
    pub fn supply(&self, stock: usize) -> f64 {
        self.records[stock][0].shares_outstanding
    }

    pub fn offset(&self, stock: usize) -> u32 {
        announcement_offset(stock, self.n_stocks())
    }

    /// Snapshot of the latest visible quarter per stock as of `day`.
    pub fn view(&self, day: u32) -> FundamentalsView<'_> {
        let visible = (0..self.n_stocks())
            .map(|s| visible_quarter(day, self.offset(s), self.n_quarters(s) - 1))
            .collect();
        FundamentalsView { table: self, day, visible }
    }

    /// Stocks whose quarterly report lands exactly on `day`, with the quarter
    /// announced. Day 0 reports (quarter 0) are initialization data, not
    /// announcement events.
    pub fn announcements_on(&self, day: u32) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for s in 0..self.n_stocks() {
            let offset = self.offset(s);
            if day >= QUARTER_DAYS + offset && (day - offset) % QUARTER_DAYS == 0 {
                let q = (day - offset) / QUARTER_DAYS;
                if q < self.n_quarters(s) {
                    out.push((s, q));
                }
            }
        }
        out
    }

    /// Writes the table in the canonical CSV schema.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "{}", CSV_HEADER.join(",")).expect("write to vec");
        for (s, id) in self.stock_ids.iter().enumerate() {
            for (q, r) in self.records[s].iter().enumerate() {
                let initial = if q == 0 {
                    format!("{}", self.initial_prices[s])
                } else {
                    String::new()
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    id,
                    q,
                    r.earnings,
                    r.projected_earnings,
                    r.sales,
                    r.cash_flow,
                    r.book_value,
                    r.dividend_per_share,
                    r.shares_outstanding,
                    initial,
                )
                .expect("write to vec");
            }
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

impl<'a> FundamentalsView<'a> {
    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn n_stocks(&self) -> usize {
        self.table.n_stocks()
    }

    pub fn visible_quarter(&self, stock: usize) -> u32 {
        self.visible[stock]
    }

    /// The latest visible record for a stock.
    pub fn latest(&self, stock: usize) -> &FundamentalsRecord {
        self.table
            .record(stock, self.visible[stock])
            .expect("visible quarter always recorded")
    }

    /// The record `lag` quarters before the latest visible one, if recorded.
    pub fn lagged(&self, stock: usize, lag: u32) -> Option<&FundamentalsRecord> {
        let q = self.visible[stock];
        if q < lag {
            None
        } else {
            self.table.record(stock, q - lag)
        }
    }
}

/// Raw CSV row as deserialized; `initial_price` is empty on quarter > 0 rows.
#[derive(Debug, Deserialize)]
struct RawRow {
    stock_id: String,
    fiscal_quarter: u32,
    earnings: f64,
    projected_earnings: f64,
    sales: f64,
    cash_flow: f64,
    book_value: f64,
    dividend_per_share: f64,
    shares_outstanding: f64,
    initial_price: Option<f64>,
}

fn check_finite(row: usize, column: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::BadValue {
            row,
            column: column.to_string(),
            reason: format!("non-finite value {v}"),
        })
    }
}

/// Loads a fundamentals table from CSV, validating the schema:
/// exact header, finite numbers, `dividend_per_share >= 0`,
/// `shares_outstanding > 0`, no duplicate (stock, quarter) pairs, quarters
/// contiguous from 0, and a positive `initial_price` on every quarter-0 row.
///
/// Stocks keep their first-appearance order from the file.
pub fn load_fundamentals(path: &Path) -> Result<FundamentalsTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| Error::Csv { path: path.display().to_string(), source })?;

    let found: Vec<String> = rdr
        .headers()
        .map_err(|source| Error::Csv { path: path.display().to_string(), source })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if found != CSV_HEADER {
        return Err(Error::SchemaHeader {
            expected: CSV_HEADER.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }

    // (stock id order, rows per stock keyed by quarter)
    let mut stock_ids: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(u32, FundamentalsRecord, Option<f64>, usize)>> = Vec::new();

    for (i, result) in rdr.deserialize::<RawRow>().enumerate() {
        let row_no = i + 2; // 1-based, after the header line
        let raw = result.map_err(|source| Error::Csv { path: path.display().to_string(), source })?;

        check_finite(row_no, "earnings", raw.earnings)?;
        check_finite(row_no, "projected_earnings", raw.projected_earnings)?;
        check_finite(row_no, "sales", raw.sales)?;
        check_finite(row_no, "cash_flow", raw.cash_flow)?;
        check_finite(row_no, "book_value", raw.book_value)?;
        check_finite(row_no, "dividend_per_share", raw.dividend_per_share)?;
        check_finite(row_no, "shares_outstanding", raw.shares_outstanding)?;
        if raw.dividend_per_share < 0.0 {
            return Err(Error::BadValue {
                row: row_no,
                column: "dividend_per_share".into(),
                reason: format!("must be >= 0, got {}", raw.dividend_per_share),
            });
        }
        if raw.shares_outstanding <= 0.0 {
            return Err(Error::BadValue {
                row: row_no,
                column: "shares_outstanding".into(),
                reason: format!("must be > 0, got {}", raw.shares_outstanding),
            });
        }

        let idx = match stock_ids.iter().position(|s| *s == raw.stock_id) {
            Some(idx) => idx,
            None => {
                stock_ids.push(raw.stock_id.clone());
                rows.push(Vec::new());
                stock_ids.len() - 1
            }
        };
        if rows[idx].iter().any(|(q, ..)| *q == raw.fiscal_quarter) {
            return Err(Error::DuplicateRecord {
                stock_id: raw.stock_id,
                quarter: raw.fiscal_quarter,
            });
        }
        let record = FundamentalsRecord {
            earnings: raw.earnings,
            projected_earnings: raw.projected_earnings,
            sales: raw.sales,
            cash_flow: raw.cash_flow,
            book_value: raw.book_value,
            dividend_per_share: raw.dividend_per_share,
            shares_outstanding: raw.shares_outstanding,
        };
        rows[idx].push((raw.fiscal_quarter, record, raw.initial_price, row_no));
    }

    if stock_ids.is_empty() {
        return Err(Error::EmptyTable);
    }

    let mut records = Vec::with_capacity(stock_ids.len());
    let mut initial_prices = Vec::with_capacity(stock_ids.len());
    for (idx, id) in stock_ids.iter().enumerate() {
        let mut per_stock = std::mem::take(&mut rows[idx]);
        per_stock.sort_by_key(|(q, ..)| *q);
        if per_stock[0].0 != 0 {
            return Err(Error::MissingQuarterZero { stock_id: id.clone() });
        }
        for (expected, (q, ..)) in per_stock.iter().enumerate() {
            if *q != expected as u32 {
                return Err(Error::NonContiguousQuarters {
                    stock_id: id.clone(),
                    expected: expected as u32,
                    found: *q,
                });
            }
        }
        let (_, _, q0_price, q0_row) = (
            per_stock[0].0,
            (),
            per_stock[0].2,
            per_stock[0].3,
        );
        let price = match q0_price {
            Some(p) if p.is_finite() && p > 0.0 => p,
            Some(p) => {
                return Err(Error::BadValue {
                    row: q0_row,
                    column: "initial_price".into(),
                    reason: format!("must be finite and > 0, got {p}"),
                })
            }
            None => {
                return Err(Error::BadValue {
                    row: q0_row,
                    column: "initial_price".into(),
                    reason: "required on quarter-0 rows".into(),
                })
            }
        };
        initial_prices.push(price);
        records.push(per_stock.into_iter().map(|(_, r, ..)| r).collect());
    }

    FundamentalsTable::new(stock_ids, records, initial_prices)
}

/// Generates a deterministic synthetic universe.
///
/// Each stock draws from its own ChaCha stream (`set_stream(stock_index)`), so
/// a stock's fundamentals are identical regardless of how many other stocks
/// are in the universe. All series follow quarterly geometric random walks
/// with per-company base levels, so every generated table passes the loader's
/// validity checks by construction.
pub fn synthesize_fundamentals(config: &SynthConfig) -> Result<FundamentalsTable> {
    if config.n_stocks == 0 {
        return Err(Error::Config("synthetic universe needs at least one stock".into()));
    }
    if config.n_quarters == 0 {
        return Err(Error::Config("synthetic universe needs at least one quarter".into()));
    }

    let width = config.n_stocks.saturating_sub(1).to_string().len().max(2);
    let mut stock_ids = Vec::with_capacity(config.n_stocks);
    let mut all_records = Vec::with_capacity(config.n_stocks);
    let mut initial_prices = Vec::with_capacity(config.n_stocks);

    for s in 0..config.n_stocks {
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        rng.set_stream(s as u64);

        // Company base levels.
        let shares = 10f64.powf(rng.gen_range(6.0..9.0)).round();
        let sales0: f64 = LogNormal::new(2.0e8f64.ln(), 0.8).unwrap().sample(&mut rng);
        let margin = rng.gen_range(0.05..0.15);
        let earnings0 = margin * sales0;
        let cf0 = earnings0 * rng.gen_range(1.0..1.6);
        let book0 = sales0 * rng.gen_range(1.0..3.0);
        let payout = rng.gen_range(0.0..0.6);
        let proj_drift = rng.gen_range(0.0..0.10);
        let pe0 = rng.gen_range(10.0..30.0);
        let dps0 = payout * earnings0 / shares;

        let mut earnings = earnings0;
        let mut sales = sales0;
        let mut cash_flow = cf0;
        let mut book = book0;
        let mut dps = dps0;

        let mut records = Vec::with_capacity(config.n_quarters as usize);
        for q in 0..config.n_quarters {
            if q > 0 {
                // Quarter-over-quarter geometric steps, one draw per field.
                let e: f64 = StandardNormal.sample(&mut rng);
                earnings *= (0.01 + 0.10 * e).exp();
                let e: f64 = StandardNormal.sample(&mut rng);
                sales *= (0.01 + 0.04 * e).exp();
                let e: f64 = StandardNormal.sample(&mut rng);
                cash_flow *= (0.01 + 0.10 * e).exp();
                let e: f64 = StandardNormal.sample(&mut rng);
                book *= (0.01 + 0.02 * e).exp();
                let e: f64 = StandardNormal.sample(&mut rng);
                dps *= (0.01 + 0.05 * e).exp();
            }
            let e: f64 = StandardNormal.sample(&mut rng);
            let projected = earnings * (proj_drift + 0.08 * e).exp();
            records.push(FundamentalsRecord {
                earnings,
                projected_earnings: projected,
                sales,
                cash_flow,
                book_value: book,
                dividend_per_share: dps,
                shares_outstanding: shares,
            });
        }

        stock_ids.push(format!("S{s:0width$}"));
        all_records.push(records);
        initial_prices.push(pe0 * QUARTERS_PER_YEAR * earnings0 / shares);
    }

    FundamentalsTable::new(stock_ids, all_records, initial_prices)
}
