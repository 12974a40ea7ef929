//! The daily market loop: fundamentals → scores → signals → demand →
//! clearing → flows → cash → solvency, repeated for `t_max` days.
//!
//! The engine owns all mutable state. A run is a pure function of its
//! [`SimConfig`] (including the seed): every draw comes from named ChaCha
//! streams, per-stock clearing merges behind an order-preserving barrier,
//! and cash is applied in fixed roster-by-stock order, so output is
//! byte-identical whether or not the `parallel` knob is on.
//!
//! Two accounting invariants are enforced at every day's close, as hard
//! errors rather than debug assertions:
//!
//! * share conservation — active holdings of each stock sum to its supply
//!   within [`CONSERVATION_RTOL`] whenever the stock traded;
//! * cash closure — the change in total system cash equals interest +
//!   dividends + external flows + liquidation credits − free-float
//!   purchases, within [`CLOSURE_RTOL`] of total wealth.

use std::path::Path;

use rayon::prelude::*;

use crate::agents::{
    blend_signal, index_signal, top_k_signal, validate_signal, RetailState, StrategyContext,
    StrategyRule, ValidatedSignal,
};
use crate::clearing::{clear_stock, settle_stock, ClearingResult, DemandFunction, StockSettlement};
use crate::config::{ParticipantConfig, SimConfig};
use crate::data::{load_fundamentals, synthesize_fundamentals, FundamentalsTable};
use crate::error::{Error, Result};
use crate::flows::{accrue_interest, investment_flow, is_insolvent, liquidate, mark_wealth, FlowDecision};
use crate::output::{Event, EventKind, SeriesFrame};
use crate::scoring::compute_scores;

/// ChaCha stream id for the retail noise process. Data synthesis uses
/// streams `0..n_stocks` under the same root seed, so the retail stream
/// lives far outside any plausible universe size.
pub const RETAIL_STREAM: u64 = 1 << 32;

/// Relative tolerance on per-stock share conservation at the close.
pub const CONSERVATION_RTOL: f64 = 1e-9;

/// Relative tolerance (against total wealth) on daily cash closure.
pub const CLOSURE_RTOL: f64 = 1e-9;

/// Trading style of a participant, fixing how its daily signal is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// Top-k of the Value composite.
    Value,
    /// k/2 from each composite.
    Blend,
    /// Top-k of the Growth composite.
    Growth,
    /// Market-cap weights; mutual funds and ETFs combined.
    Index,
    /// Aggregated noise traders driven by a latent mean-reverting process.
    Retail,
    /// The user-programmed rule under test.
    Strategy,
}

/// One market participant's balance sheet.
#[derive(Debug, Clone)]
pub struct Participant {
    pub id: String,
    pub style: Style,
    pub cash: f64,
    /// Shares held, one entry per stock.
    pub positions: Vec<f64>,
    /// Outstanding fund units; unit NAV is wealth / units. Starts equal to
    /// initial wealth so every NAV series begins at 1.
    pub units: f64,
    /// Cleared false on insolvency; an inactive balance sheet is frozen.
    pub active: bool,
}

/// One day's system-cash accounting, kept so the closure check is a real
/// cross-check rather than a restatement of the additions performed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CashLedgerDay {
    pub day: u32,
    /// Interest credited (or charged) across all active cash balances.
    pub interest: f64,
    /// Dividends paid on announcement days.
    pub dividends: f64,
    /// Net external investor flows into funds.
    pub flows: f64,
    /// Sale proceeds credited to insolvent participants at liquidation;
    /// their shares leave the books until the market reabsorbs them.
    pub liquidation_credit: f64,
    /// Cash paid for free-float shares (supply not held by any active
    /// bidder), measured independently as Σ p*·(Q − H) over traded stocks.
    pub absorption_debit: f64,
    /// Δ(system cash) minus the five terms above; bounded by the closure
    /// check every day.
    pub closure_error: f64,
}

/// Everything a finished run produces. Series are daily and share one
/// length: `t_max`, or the termination day if everyone went insolvent.
#[derive(Debug)]
pub struct SimulationOutput {
    pub stock_ids: Vec<String>,
    pub participant_ids: Vec<String>,
    /// Clearing price per stock per day.
    pub prices: SeriesFrame,
    /// Shares changing hands per stock per day.
    pub volumes: SeriesFrame,
    /// Marked wealth per participant per day.
    pub wealth: SeriesFrame,
    /// Unit NAV per participant per day (wealth / outstanding units).
    pub nav: SeriesFrame,
    pub events: Vec<Event>,
    /// Daily (value, growth) composites per stock, when requested.
    pub scores: Option<(SeriesFrame, SeriesFrame)>,
    /// Daily solver (iterations, residuals) per stock, when requested.
    pub diagnostics: Option<(SeriesFrame, SeriesFrame)>,
    pub cash_ledger: Vec<CashLedgerDay>,
    /// Worst per-stock |Σ holdings − supply| / supply seen at any close.
    pub conservation_max_rel: f64,
    /// True when the run stopped early because no participant was solvent.
    pub terminated_early: bool,
}

impl SimulationOutput {
    pub fn n_days(&self) -> usize {
        self.prices.n_days()
    }

    /// Writes the standard CSV set into `dir` (created if missing):
    /// `prices.csv`, `volumes.csv`, `wealth.csv`, `nav.csv`, `events.csv`,
    /// plus score and solver-diagnostic files when those were emitted.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
        self.prices.write_csv(&dir.join("prices.csv"))?;
        self.volumes.write_csv(&dir.join("volumes.csv"))?;
        self.wealth.write_csv(&dir.join("wealth.csv"))?;
        self.nav.write_csv(&dir.join("nav.csv"))?;
        crate::output::write_events(&dir.join("events.csv"), &self.events)?;
        if let Some((value, growth)) = &self.scores {
            value.write_csv(&dir.join("scores_value.csv"))?;
            growth.write_csv(&dir.join("scores_growth.csv"))?;
        }
        if let Some((iters, residuals)) = &self.diagnostics {
            iters.write_csv(&dir.join("solver_iterations.csv"))?;
            residuals.write_csv(&dir.join("solver_residuals.csv"))?;
        }
        Ok(())
    }
}

/// How a participant's demand is funded.
enum Funding {
    /// Budget frozen at λ × wealth marked at the previous close.
    Frozen { budget: f64 },
    /// Budget re-marks the stock being cleared at its clearing price, so
    /// full reinvestment is exactly self-financing. Used by the strategy
    /// fund; `total_mark` is its wealth at the previous close.
    SelfFinancing { total_mark: f64 },
}

/// The simulation engine. Construct with [`Engine::new`], then either call
/// [`Engine::step`] day by day or let [`run`] / [`run_with`] drive it.
pub struct Engine {
    cfg: SimConfig,
    table: FundamentalsTable,
    supplies: Vec<f64>,
    participants: Vec<Participant>,
    retail: Option<RetailState>,
    strategy: Option<Box<dyn StrategyRule>>,
    /// Previous close per stock; day 0 sees the data's initial prices.
    prev_prices: Vec<f64>,
    day: u32,
    prices_frame: SeriesFrame,
    volumes_frame: SeriesFrame,
    wealth_frame: SeriesFrame,
    nav_frame: SeriesFrame,
    scores_frames: Option<(SeriesFrame, SeriesFrame)>,
    diag_frames: Option<(SeriesFrame, SeriesFrame)>,
    /// Per-participant unit-NAV history of completed days, for flow math.
    nav_history: Vec<Vec<f64>>,
    /// Total market cap (Σ price × supply) per completed day: the flow
    /// benchmark index.
    index_history: Vec<f64>,
    events: Vec<Event>,
    cash_ledger: Vec<CashLedgerDay>,
    conservation_max_rel: f64,
}

/// The roster in fixed order, with international's share folded one-third
/// each into Value, Blend, and Growth, and every share scaled down pro-rata
/// when a strategy fund joins.
fn roster_shares(pc: &ParticipantConfig, with_strategy: bool) -> Vec<(Style, &'static str, f64)> {
    let third = pc.international_share / 3.0;
    let scale = if with_strategy { 1.0 - pc.strategy_share } else { 1.0 };
    let mut roster = vec![
        (Style::Value, "value", (pc.value_share + third) * scale),
        (Style::Blend, "blend", (pc.blend_share + third) * scale),
        (Style::Growth, "growth", (pc.growth_share + third) * scale),
        (Style::Index, "index", pc.index_share * scale),
        (Style::Retail, "retail", pc.retail_share * scale),
    ];
    if with_strategy {
        roster.push((Style::Strategy, "strategy", pc.strategy_share));
    }
    roster
}

impl Engine {
    /// Builds a ready-to-step engine: validates the config, loads or
    /// synthesizes fundamentals, resolves the strategy rule (an injected
    /// `rule` wins over the config's rule string), and initializes every
    /// participant pro-rata so holdings sum to supply from day 0.
    pub fn new(cfg: SimConfig, rule: Option<Box<dyn StrategyRule>>) -> Result<Engine> {
        cfg.validate()?;
        let table = match (&cfg.data.csv, &cfg.data.synthetic) {
            (Some(path), None) => load_fundamentals(path)?,
            (None, Some(spec)) => synthesize_fundamentals(&spec.resolve(&cfg.run))?,
            // validate() enforced exactly one source.
            _ => unreachable!("config validation admits exactly one data source"),
        };

        let strategy = match (rule, &cfg.strategy.rule) {
            (Some(r), _) => Some(r),
            (None, Some(spec)) => Some(crate::agents::parse_builtin_strategy(spec, table.stock_ids())?),
            (None, None) => None,
        };
        if strategy.is_some() && cfg.participants.strategy_share <= 0.0 {
            return Err(Error::Config(
                "strategy_share must be positive when a strategy rule is set".into(),
            ));
        }

        let n_stocks = table.n_stocks();
        let supplies: Vec<f64> = (0..n_stocks).map(|s| table.supply(s)).collect();
        let initial_prices: Vec<f64> = (0..n_stocks).map(|s| table.initial_price(s)).collect();
        let market_value: f64 =
            initial_prices.iter().zip(&supplies).map(|(p, q)| p * q).sum();

        let pc = cfg.participants;
        let mut participants = Vec::new();
        let mut retail = None;
        for (style, id, share) in roster_shares(&pc, strategy.is_some()) {
            if share <= 0.0 {
                continue;
            }
            let positions: Vec<f64> = supplies.iter().map(|q| share * q).collect();
            let cash = pc.cash_buffer * share * market_value;
            let wealth = share * market_value * (1.0 + pc.cash_buffer);
            if style == Style::Retail {
                retail = Some(RetailState::new(
                    cfg.retail.process(),
                    cfg.retail.gamma,
                    n_stocks,
                    cfg.run.seed,
                    RETAIL_STREAM,
                ));
            }
            participants.push(Participant {
                id: id.to_string(),
                style,
                cash,
                positions,
                units: wealth,
                active: true,
            });
        }

        let participant_ids: Vec<String> = participants.iter().map(|p| p.id.clone()).collect();
        let stock_ids = table.stock_ids().to_vec();
        let scores_frames = cfg.output.emit_scores.then(|| {
            (SeriesFrame::new(stock_ids.clone()), SeriesFrame::new(stock_ids.clone()))
        });
        let diag_frames = cfg.output.emit_diagnostics.then(|| {
            (SeriesFrame::new(stock_ids.clone()), SeriesFrame::new(stock_ids.clone()))
        });
        let n_participants = participants.len();

        Ok(Engine {
            cfg,
            supplies,
            participants,
            retail,
            strategy,
            prev_prices: initial_prices,
            day: 0,
            prices_frame: SeriesFrame::new(stock_ids.clone()),
            volumes_frame: SeriesFrame::new(stock_ids),
            wealth_frame: SeriesFrame::new(participant_ids.clone()),
            nav_frame: SeriesFrame::new(participant_ids),
            scores_frames,
            diag_frames,
            nav_history: vec![Vec::new(); n_participants],
            index_history: Vec::new(),
            events: Vec::new(),
            cash_ledger: Vec::new(),
            conservation_max_rel: 0.0,
            table,
        })
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    /// Runs one full market day and advances the clock. Returns `false`
    /// when every participant has gone insolvent: the day is still recorded
    /// and the run should stop.
    pub fn step(&mut self) -> Result<bool> {
        let day = self.day;
        let n_stocks = self.supplies.len();
        let cash_start: f64 = self.participants.iter().map(|p| p.cash).sum();

        // Scores see the latest public reports and the previous close.
        let view = self.table.view(day);
        let scores = compute_scores(&view, &self.prev_prices);

        // Signals, in fixed roster order; retail's RNG draw happens exactly
        // once per day here.
        let mut phis: Vec<Vec<f64>> = Vec::with_capacity(self.participants.len());
        for i in 0..self.participants.len() {
            if !self.participants[i].active {
                phis.push(vec![0.0; n_stocks]);
                continue;
            }
            let phi = match self.participants[i].style {
                Style::Value => top_k_signal(&scores.value, self.cfg.participants.top_k),
                Style::Growth => top_k_signal(&scores.growth, self.cfg.participants.top_k),
                Style::Blend => {
                    blend_signal(&scores.value, &scores.growth, self.cfg.participants.blend_k)
                }
                Style::Index => index_signal(&self.prev_prices, &self.supplies),
                Style::Retail => {
                    self.retail.as_mut().expect("retail participant has a state").advance()
                }
                Style::Strategy => {
                    let p = &self.participants[i];
                    let ctx = StrategyContext {
                        day,
                        view: &view,
                        scores: &scores,
                        prices: &self.prev_prices,
                        cash: p.cash,
                        positions: &p.positions,
                    };
                    let rule = self.strategy.as_mut().expect("strategy participant has a rule");
                    match validate_signal(rule.signal(&ctx), n_stocks) {
                        ValidatedSignal::Ok(signal) => signal,
                        ValidatedSignal::Coerced { signal, .. } => {
                            self.events.push(Event {
                                day: day as usize,
                                entity: self.participants[i].id.clone(),
                                kind: EventKind::SignalCoerced,
                                amount: 0.0,
                            });
                            signal
                        }
                        ValidatedSignal::Invalid { .. } => {
                            self.events.push(Event {
                                day: day as usize,
                                entity: self.participants[i].id.clone(),
                                kind: EventKind::SignalInvalid,
                                amount: 0.0,
                            });
                            vec![0.0; n_stocks]
                        }
                    }
                }
            };
            phis.push(phi);
        }

        // Demand funding, fixed at the previous close.
        let active: Vec<usize> =
            (0..self.participants.len()).filter(|&i| self.participants[i].active).collect();
        let funding: Vec<Funding> = active
            .iter()
            .map(|&i| {
                let p = &self.participants[i];
                let mark = mark_wealth(p.cash, &p.positions, &self.prev_prices);
                if p.style == Style::Strategy {
                    Funding::SelfFinancing { total_mark: mark }
                } else {
                    // Active participants have positive wealth at the prior
                    // close (solvency ran there), so the clamp is purely
                    // defensive against external state surgery.
                    Funding::Frozen { budget: self.cfg.participants.lambda * mark.max(0.0) }
                }
            })
            .collect();

        // Clear every stock. The per-stock work is pure, so it can fan out
        // across threads; results merge in stock order either way.
        let participants = &self.participants;
        let supplies = &self.supplies;
        let prev = &self.prev_prices;
        let beta = self.cfg.participants.beta;
        let lambda = self.cfg.participants.lambda;
        let phis_ref = &phis;
        let active_ref = &active;
        let funding_ref = &funding;
        let clear_one = |s: usize| -> Result<(ClearingResult, Option<StockSettlement>, f64)> {
            let mut demands = Vec::with_capacity(active_ref.len());
            let mut held = Vec::with_capacity(active_ref.len());
            for (j, &i) in active_ref.iter().enumerate() {
                let shares = participants[i].positions[s];
                let phi = phis_ref[i][s];
                let d = match funding_ref[j] {
                    Funding::Frozen { budget } => {
                        DemandFunction { beta, phi, budget, position: shares }
                    }
                    Funding::SelfFinancing { total_mark } => {
                        // Resources available to this stock: everything else
                        // at the previous close — negative when cash is
                        // borrowed — plus the holding itself at the price
                        // being solved for. A fully invested fund (outside
                        // equal to or slightly below zero) must keep holding
                        // rather than liquidate, so only a nonpositive total
                        // mark stands the fund down.
                        if total_mark > 0.0 {
                            DemandFunction {
                                beta,
                                phi,
                                budget: lambda * (total_mark - shares * prev[s]),
                                position: (1.0 - beta * phi * lambda) * shares,
                            }
                        } else {
                            DemandFunction { beta, phi: 0.0, budget: 0.0, position: shares }
                        }
                    }
                };
                demands.push(d);
                held.push(shares);
            }
            let held_sum: f64 = held.iter().sum();
            let result = clear_stock(&demands, &held, supplies[s], prev[s], s)?;
            let settlement =
                (!result.no_trade).then(|| settle_stock(&demands, &held, result.price));
            Ok((result, settlement, held_sum))
        };
        let cleared: Vec<(ClearingResult, Option<StockSettlement>, f64)> =
            if self.cfg.run.parallel {
                (0..n_stocks).into_par_iter().map(clear_one).collect::<Result<_>>()?
            } else {
                (0..n_stocks).map(clear_one).collect::<Result<_>>()?
            };

        // Settle in stock order; cash accumulates identically no matter how
        // the clearing was scheduled.
        let mut today = vec![0.0; n_stocks];
        let mut volumes = vec![0.0; n_stocks];
        let mut absorption_debit = 0.0;
        for (s, (result, settlement, held_sum)) in cleared.iter().enumerate() {
            today[s] = result.price;
            match settlement {
                Some(st) => {
                    volumes[s] = st.volume;
                    for (j, &i) in active.iter().enumerate() {
                        self.participants[i].positions[s] = st.new_positions[j];
                        self.participants[i].cash += st.cash_deltas[j];
                    }
                    let total: f64 =
                        active.iter().map(|&i| self.participants[i].positions[s]).sum();
                    let error = (total - self.supplies[s]).abs();
                    let tolerance = CONSERVATION_RTOL * self.supplies[s];
                    if error > tolerance {
                        return Err(Error::ConservationViolated { stock: s, day, error, tolerance });
                    }
                    self.conservation_max_rel =
                        self.conservation_max_rel.max(error / self.supplies[s]);
                    // Shares nobody held going in were bought from the
                    // books of past liquidations; that cash leaves the
                    // system.
                    absorption_debit += result.price * (self.supplies[s] - held_sum);
                }
                None => {
                    self.events.push(Event {
                        day: day as usize,
                        entity: self.table.stock_ids()[s].clone(),
                        kind: EventKind::NoTrade,
                        amount: 0.0,
                    });
                }
            }
        }
        if let Some((iters, residuals)) = &mut self.diag_frames {
            iters.push_day(&cleared.iter().map(|(r, _, _)| r.iterations as f64).collect::<Vec<_>>());
            residuals.push_day(&cleared.iter().map(|(r, _, _)| r.residual).collect::<Vec<_>>());
        }

        // Performance-chasing flows, measured on completed days only.
        let mut flows_total = 0.0;
        if self.cfg.flows.enabled && self.cfg.flows.is_flow_day(day as usize) {
            for i in 0..self.participants.len() {
                let p = &self.participants[i];
                if !p.active || p.style == Style::Retail {
                    continue;
                }
                let wealth = mark_wealth(p.cash, &p.positions, &today);
                let decision = if wealth > 0.0 {
                    investment_flow(&self.nav_history[i], &self.index_history, wealth, &self.cfg.flows)
                } else {
                    // About to be liquidated; no investor would transact.
                    FlowDecision::InsufficientHistory
                };
                match decision {
                    FlowDecision::Applied { amount, .. } => {
                        let nav_per_unit = wealth / p.units;
                        let new_units = p.units + amount / nav_per_unit;
                        if new_units > 0.0 {
                            let p = &mut self.participants[i];
                            p.cash += amount;
                            p.units = new_units;
                            flows_total += amount;
                            self.events.push(Event {
                                day: day as usize,
                                entity: self.participants[i].id.clone(),
                                kind: EventKind::Flow,
                                amount,
                            });
                        } else {
                            // An outflow beyond the fund's whole book;
                            // unreachable under sane slopes but never let
                            // units go non-positive.
                            self.events.push(Event {
                                day: day as usize,
                                entity: self.participants[i].id.clone(),
                                kind: EventKind::FlowSkipped,
                                amount: 0.0,
                            });
                        }
                    }
                    FlowDecision::InsufficientHistory => {
                        self.events.push(Event {
                            day: day as usize,
                            entity: self.participants[i].id.clone(),
                            kind: EventKind::FlowSkipped,
                            amount: 0.0,
                        });
                    }
                }
            }
        }

        // Interest on cash, symmetric in sign.
        let mut interest_total = 0.0;
        for p in self.participants.iter_mut().filter(|p| p.active) {
            let new_cash = accrue_interest(p.cash, self.cfg.cash.interest_rate);
            interest_total += new_cash - p.cash;
            p.cash = new_cash;
        }

        // Quarterly dividends land on each stock's announcement day.
        let mut dividends_total = 0.0;
        for (s, quarter) in self.table.announcements_on(day) {
            let dps = self
                .table
                .record(s, quarter)
                .expect("announced quarter exists")
                .dividend_per_share;
            if dps == 0.0 {
                continue;
            }
            for p in self.participants.iter_mut().filter(|p| p.active) {
                let paid = p.positions[s] * dps;
                p.cash += paid;
                dividends_total += paid;
            }
        }

        // Solvency at the day's cleared prices.
        let mut liquidation_credit = 0.0;
        for p in self.participants.iter_mut() {
            if !p.active {
                continue;
            }
            let wealth = mark_wealth(p.cash, &p.positions, &today);
            if is_insolvent(wealth) {
                liquidation_credit += liquidate(&mut p.cash, &mut p.positions, &today);
                p.active = false;
                self.events.push(Event {
                    day: day as usize,
                    entity: p.id.clone(),
                    kind: EventKind::Insolvency,
                    amount: wealth,
                });
            }
        }
        let any_active = self.participants.iter().any(|p| p.active);

        // Record the close.
        let wealth_today: Vec<f64> = self
            .participants
            .iter()
            .map(|p| mark_wealth(p.cash, &p.positions, &today))
            .collect();
        let nav_today: Vec<f64> = self
            .participants
            .iter()
            .zip(&wealth_today)
            .map(|(p, w)| w / p.units)
            .collect();
        self.prices_frame.push_day(&today);
        self.volumes_frame.push_day(&volumes);
        self.wealth_frame.push_day(&wealth_today);
        self.nav_frame.push_day(&nav_today);
        if let Some((value, growth)) = &mut self.scores_frames {
            value.push_day(&scores.value);
            growth.push_day(&scores.growth);
        }
        for (history, nav) in self.nav_history.iter_mut().zip(&nav_today) {
            history.push(*nav);
        }
        self.index_history
            .push(today.iter().zip(&self.supplies).map(|(p, q)| p * q).sum());

        // Close the books: system cash moved only through the five tracked
        // channels. `absorption_debit` comes from supply minus pre-trade
        // holdings, not from the settlement sums, so this genuinely checks
        // that trading itself was zero-sum.
        let cash_end: f64 = self.participants.iter().map(|p| p.cash).sum();
        let expected =
            interest_total + dividends_total + flows_total + liquidation_credit - absorption_debit;
        let closure_error = (cash_end - cash_start) - expected;
        let scale = wealth_today.iter().map(|w| w.abs()).sum::<f64>().max(1.0);
        if closure_error.abs() > CLOSURE_RTOL * scale {
            return Err(Error::Engine {
                day,
                reason: format!(
                    "cash closure error {closure_error:.3e} exceeds {:.3e} \
                     (interest {interest_total:.6e}, dividends {dividends_total:.6e}, \
                     flows {flows_total:.6e}, liquidation {liquidation_credit:.6e}, \
                     absorption {absorption_debit:.6e})",
                    CLOSURE_RTOL * scale
                ),
            });
        }
        self.cash_ledger.push(CashLedgerDay {
            day,
            interest: interest_total,
            dividends: dividends_total,
            flows: flows_total,
            liquidation_credit,
            absorption_debit,
            closure_error,
        });

        self.prev_prices = today;
        self.day += 1;
        Ok(any_active)
    }

    /// Consumes the engine and assembles the output bundle.
    pub fn finish(self, terminated_early: bool) -> SimulationOutput {
        SimulationOutput {
            stock_ids: self.table.stock_ids().to_vec(),
            participant_ids: self.participants.iter().map(|p| p.id.clone()).collect(),
            prices: self.prices_frame,
            volumes: self.volumes_frame,
            wealth: self.wealth_frame,
            nav: self.nav_frame,
            events: self.events,
            scores: self.scores_frames,
            diagnostics: self.diag_frames,
            cash_ledger: self.cash_ledger,
            conservation_max_rel: self.conservation_max_rel,
            terminated_early,
        }
    }
}

/// Runs a full simulation from a config.
pub fn run(cfg: SimConfig) -> Result<SimulationOutput> {
    run_with(cfg, None)
}

/// Runs a full simulation with an injected strategy rule, which takes
/// precedence over any rule named in the config.
pub fn run_with(cfg: SimConfig, rule: Option<Box<dyn StrategyRule>>) -> Result<SimulationOutput> {
    let mut engine = Engine::new(cfg, rule)?;
    let t_max = engine.cfg.run.t_max;
    let mut terminated_early = false;
    for _ in 0..t_max {
        if !engine.step()? {
            terminated_early = true;
            break;
        }
    }
    Ok(engine.finish(terminated_early))
}
