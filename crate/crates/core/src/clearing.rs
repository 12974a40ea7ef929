//! Per-stock market clearing.
//!
//! Every participant's order for a stock is a hyperbolic excess demand
//!
//! `D(p) = beta * phi * budget / p - position`
//!
//! — it targets a position worth `beta * phi * budget` and sheds whatever it
//! holds beyond that. The day's price is the root of the aggregate imbalance
//!
//! `g(p) = sum_i D_i(p) - (Q - H)`
//!
//! where `Q` is the fixed share supply and `H` the shares currently held by
//! the bidding participants (`Q - H` is a free float that only appears
//! transiently, after an insolvency liquidation). At the root, demands absorb
//! exactly the available shares, so post-trade positions sum to `Q` by
//! construction.
//!
//! For sums of hyperbolas the root has a closed form,
//! `p = sum_i(beta_i phi_i budget_i) / (Q - H + sum_i position_i)`, but the
//! solver deliberately runs bracketed root-finding (bisection refined by
//! interpolated steps) so demand shapes beyond the hyperbola keep working;
//! the closed form is then used as an independent cross-check on every
//! clearing, with the run aborting on disagreement.
//!
//! Stocks clear independently: budgets are valued at the previous close and
//! frozen while prices are determined, so nothing couples the per-stock root
//! problems and they can run in parallel.

use crate::error::{Error, Result};

/// Relative tolerance for the solver-vs-closed-form cross-check.
pub const CLOSED_FORM_RTOL: f64 = 1e-10;

/// Residual tolerance as a fraction of supply: |g(p*)| <= 1e-9 * Q.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Initial bracket around the previous close, expanded geometrically on
/// failure up to [`MAX_BRACKET_EXPANSIONS`] times.
pub const BRACKET_SPAN: f64 = 1e3;
pub const MAX_BRACKET_EXPANSIONS: u32 = 10;

/// One participant's order book entry for one stock.
///
/// `budget` is the cash the participant could deploy (its leverage times its
/// wealth at the previous close, frozen during clearing); `phi` is the share
/// of that budget aimed at this stock; `beta` scales how aggressively the
/// target is pursued. `position` is the holding the demand is measured
/// against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandFunction {
    pub beta: f64,
    pub phi: f64,
    pub budget: f64,
    pub position: f64,
}

impl DemandFunction {
    /// Excess demand at a price: `beta * phi * budget / p - position`.
    pub fn excess_demand(&self, price: f64) -> f64 {
        self.coefficient() / price - self.position
    }

    /// The hyperbola's numerator, `beta * phi * budget` — the currency value
    /// of the targeted position.
    pub fn coefficient(&self) -> f64 {
        self.beta * self.phi * self.budget
    }
}

/// Outcome of clearing one stock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingResult {
    /// Market-clearing price, or the carried-over previous close on a
    /// no-trade day.
    pub price: f64,
    /// Root-finder iterations (0 on a no-trade day).
    pub iterations: u32,
    /// |g(price)| at the returned price (0.0 on a no-trade day).
    pub residual: f64,
    /// True when nobody bid (aggregate coefficient 0) and the price carried.
    pub no_trade: bool,
}

/// Scalar root finding on a bracket: bisection with secant / inverse
/// quadratic refinement. Returns `(root, iterations, converged)`, or `None`
/// when `[xa, xb]` does not bracket a sign change.
///
/// Iteration stops when the bracket shrinks below `xtol + rtol * |x|`;
/// `converged = false` means the iteration budget ran out first and the
/// caller must judge the residual itself.
pub fn brentq<F: Fn(f64) -> f64>(
    f: F,
    xa: f64,
    xb: f64,
    xtol: f64,
    rtol: f64,
    maxiter: u32,
) -> Option<(f64, u32, bool)> {
    let (mut xpre, mut xcur) = (xa, xb);
    let (mut fpre, mut fcur) = (f(xpre), f(xcur));
    let (mut xblk, mut fblk) = (0.0, 0.0);
    let (mut spre, mut scur) = (0.0, 0.0);

    if fpre * fcur > 0.0 {
        return None;
    }
    if fpre == 0.0 {
        return Some((xpre, 0, true));
    }
    if fcur == 0.0 {
        return Some((xcur, 0, true));
    }

    let mut iterations = 0;
    for _ in 0..maxiter {
        iterations += 1;
        if fpre * fcur < 0.0 {
            xblk = xpre;
            fblk = fpre;
            spre = xcur - xpre;
            scur = spre;
        }
        if fblk.abs() < fcur.abs() {
            xpre = xcur;
            xcur = xblk;
            xblk = xpre;
            fpre = fcur;
            fcur = fblk;
            fblk = fpre;
        }

        let delta = (xtol + rtol * xcur.abs()) / 2.0;
        let sbis = (xblk - xcur) / 2.0;
        if fcur == 0.0 || sbis.abs() < delta {
            return Some((xcur, iterations, true));
        }

        if spre.abs() > delta && fcur.abs() < fpre.abs() {
            let stry = if xpre == xblk {
                // Two points: secant step.
                -fcur * (xcur - xpre) / (fcur - fpre)
            } else {
                // Three points: inverse quadratic interpolation.
                let dpre = (fpre - fcur) / (xpre - xcur);
                let dblk = (fblk - fcur) / (xblk - xcur);
                -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            };
            if 2.0 * stry.abs() < spre.abs().min(3.0 * sbis.abs() - delta) {
                spre = scur;
                scur = stry;
            } else {
                spre = sbis;
                scur = sbis;
            }
        } else {
            spre = sbis;
            scur = sbis;
        }

        xpre = xcur;
        fpre = fcur;
        if scur.abs() > delta {
            xcur += scur;
        } else {
            xcur += if sbis > 0.0 { delta } else { -delta };
        }
        fcur = f(xcur);
    }
    Some((xcur, iterations, false))
}

/// Clears one stock: finds the price at which aggregate demand absorbs the
/// available shares.
///
/// `held` are the bidders' actual share holdings (they may differ from the
/// `position` fields when a demand is a re-parametrized form, and their sum
/// may fall short of `supply` right after a liquidation). `prev_price`
/// centers the initial bracket and is carried through no-trade days;
/// `stock` only labels errors.
pub fn clear_stock(
    demands: &[DemandFunction],
    held: &[f64],
    supply: f64,
    prev_price: f64,
    stock: usize,
) -> Result<ClearingResult> {
    debug_assert_eq!(demands.len(), held.len());
    debug_assert!(supply > 0.0 && prev_price > 0.0);

    let coeff_total: f64 = demands.iter().map(|d| d.coefficient()).sum();
    if coeff_total == 0.0 {
        // Nobody bid: the price carries over and no shares move.
        return Ok(ClearingResult { price: prev_price, iterations: 0, residual: 0.0, no_trade: true });
    }

    let held_total: f64 = held.iter().sum();
    let free_float = supply - held_total;
    let g = |p: f64| -> f64 {
        demands.iter().map(|d| d.excess_demand(p)).sum::<f64>() - free_float
    };

    // Bracket the root around the previous close, widening on failure.
    let mut lo = prev_price / BRACKET_SPAN;
    let mut hi = prev_price * BRACKET_SPAN;
    let mut expansions = 0;
    while g(lo) * g(hi) > 0.0 {
        if expansions >= MAX_BRACKET_EXPANSIONS {
            return Err(Error::BracketFailure {
                stock,
                lo,
                hi,
                g_lo: g(lo),
                g_hi: g(hi),
                expansions,
            });
        }
        lo /= 10.0;
        hi *= 10.0;
        expansions += 1;
    }

    let (price, iterations, _) = brentq(g, lo, hi, 1e-24, 4.0 * f64::EPSILON, 128)
        .expect("bracket was verified to straddle the root");

    let residual = g(price).abs();
    if residual > RESIDUAL_TOL * supply {
        return Err(Error::SolverDiverged { stock, residual, iterations });
    }

    // Cross-check against the closed form for a sum of hyperbolas:
    // p = sum(coefficients) / (free float + sum(positions)).
    let position_total: f64 = demands.iter().map(|d| d.position).sum();
    let closed_form = coeff_total / (free_float + position_total);
    let rel_err = (price - closed_form).abs() / closed_form.abs();
    if !rel_err.is_finite() || rel_err > CLOSED_FORM_RTOL {
        return Err(Error::ClosedFormMismatch { stock, solver: price, closed_form, rel_err });
    }

    Ok(ClearingResult { price, iterations, residual, no_trade: false })
}

/// Post-trade state of one stock after settling at the clearing price.
#[derive(Debug, Clone, PartialEq)]
pub struct StockSettlement {
    /// New holdings per participant: `D_i(p*) + held_i`.
    pub new_positions: Vec<f64>,
    /// Cash movement per participant: `-(new - old) * p*`.
    pub cash_deltas: Vec<f64>,
    /// Shares changing hands: `sum(|new - old|) / 2`.
    pub volume: f64,
}

/// Settles one stock at a cleared price: each participant moves to its
/// demanded position and pays for the difference at `price`.
pub fn settle_stock(demands: &[DemandFunction], held: &[f64], price: f64) -> StockSettlement {
    debug_assert_eq!(demands.len(), held.len());
    let mut new_positions = Vec::with_capacity(demands.len());
    let mut cash_deltas = Vec::with_capacity(demands.len());
    let mut traded = 0.0;
    for (d, &s) in demands.iter().zip(held) {
        let new_s = d.excess_demand(price) + s;
        let delta = new_s - s;
        traded += delta.abs();
        cash_deltas.push(-delta * price);
        new_positions.push(new_s);
    }
    StockSettlement { new_positions, cash_deltas, volume: traded / 2.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn frozen(budget: f64, position: f64) -> DemandFunction {
        DemandFunction { beta: 1.0, phi: 1.0, budget, position }
    }

    #[test]
    fn excess_demand_matches_hand_values() {
        let d = DemandFunction { beta: 1.0, phi: 0.5, budget: 200.0, position: 0.0 };
        assert_relative_eq!(d.excess_demand(10.0), 10.0);
        let d = DemandFunction { beta: 1.0, phi: 1.0, budget: 50.0, position: 10.0 };
        assert_relative_eq!(d.excess_demand(10.0), -5.0);
        let d = DemandFunction { beta: 0.8, phi: 0.5, budget: 400.0, position: 3.0 };
        assert_relative_eq!(d.excess_demand(10.0), 13.0);
    }

    #[test]
    fn brentq_finds_known_roots() {
        let (root, iters, conv) =
            brentq(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 4.0 * f64::EPSILON, 100).unwrap();
        assert!(conv);
        assert_relative_eq!(root, 2f64.sqrt(), epsilon = 1e-14);
        assert!(iters < 20);

        let (root, ..) = brentq(|x| x.cos() - x, 0.0, 1.0, 1e-15, 4.0 * f64::EPSILON, 100).unwrap();
        assert_relative_eq!(root, 0.7390851332151607, epsilon = 1e-13);
    }

    #[test]
    fn brentq_rejects_unbracketed_intervals() {
        assert!(brentq(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 1e-12, 100).is_none());
    }

    #[test]
    fn single_bidder_clears_at_budget_over_supply() {
        // One participant holding the full float re-prices it:
        // p = 1000 / 100 = 10.
        let demands = [frozen(1000.0, 100.0)];
        let held = [100.0];
        let r = clear_stock(&demands, &held, 100.0, 8.0, 0).unwrap();
        assert!(!r.no_trade);
        assert_relative_eq!(r.price, 10.0, epsilon = 1e-9);
        assert!(r.residual <= RESIDUAL_TOL * 100.0);
    }

    #[test]
    fn budgets_aggregate_additively() {
        // 600 + 400 of targeted value on 100 shares clears at the same price
        // as one bidder with 1000.
        let demands = [frozen(600.0, 40.0), frozen(400.0, 60.0)];
        let held = [40.0, 60.0];
        let r = clear_stock(&demands, &held, 100.0, 5.0, 0).unwrap();
        assert_relative_eq!(r.price, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn no_bids_carries_the_previous_price() {
        let demands = [
            DemandFunction { beta: 1.0, phi: 0.0, budget: 500.0, position: 30.0 },
            DemandFunction { beta: 1.0, phi: 0.5, budget: 0.0, position: 70.0 },
        ];
        let held = [30.0, 70.0];
        let r = clear_stock(&demands, &held, 100.0, 12.5, 3).unwrap();
        assert!(r.no_trade);
        assert_eq!(r.price, 12.5);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn rootless_markets_report_bracket_failure() {
        // Full float held but zero `position` terms: g(p) > 0 everywhere.
        let demands = [DemandFunction { beta: 1.0, phi: 1.0, budget: 100.0, position: 0.0 }];
        let held = [100.0];
        match clear_stock(&demands, &held, 100.0, 10.0, 7) {
            Err(Error::BracketFailure { stock, expansions, .. }) => {
                assert_eq!(stock, 7);
                assert_eq!(expansions, MAX_BRACKET_EXPANSIONS);
            }
            other => panic!("expected BracketFailure, got {other:?}"),
        }
    }

    #[test]
    fn far_initial_brackets_still_converge() {
        // Previous close far from the new root exercises bracket expansion.
        let demands = [frozen(1e9, 10.0)];
        let held = [10.0];
        let r = clear_stock(&demands, &held, 10.0, 1e-2, 0).unwrap();
        assert_relative_eq!(r.price, 1e8, max_relative = 1e-10);
    }

    #[test]
    fn settlement_moves_shares_and_cash_consistently() {
        // Bidder A targets 150 of value, B targets 850; price clears at 10.
        let demands = [frozen(150.0, 50.0), frozen(850.0, 50.0)];
        let held = [50.0, 50.0];
        let r = clear_stock(&demands, &held, 100.0, 9.0, 0).unwrap();
        let s = settle_stock(&demands, &held, r.price);
        assert_relative_eq!(s.new_positions[0], 15.0, epsilon = 1e-9);
        assert_relative_eq!(s.new_positions[1], 85.0, epsilon = 1e-9);
        // A sells 35 shares at 10: +350 cash; B pays the same.
        assert_relative_eq!(s.cash_deltas[0], 350.0, epsilon = 1e-6);
        assert_relative_eq!(s.cash_deltas[1], -350.0, epsilon = 1e-6);
        assert_relative_eq!(s.volume, 35.0, epsilon = 1e-9);
        // Trading is a pure swap: aggregate cash unchanged.
        assert!((s.cash_deltas.iter().sum::<f64>()).abs() < 1e-9);
    }

    /// Random all-hyperbolic instance: budgets, positions summing to supply.
    fn random_instance(
        rng: &mut ChaCha12Rng,
    ) -> (Vec<DemandFunction>, Vec<f64>, f64, f64) {
        let n = rng.gen_range(1..=50);
        let supply = 10f64.powf(rng.gen_range(1.0..6.0));
        // Random positive holdings scaled to sum exactly to the supply.
        let mut held: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = held.iter().sum();
        for h in held.iter_mut() {
            *h *= supply / total;
        }
        let demands: Vec<DemandFunction> = held
            .iter()
            .map(|&h| DemandFunction {
                beta: rng.gen_range(0.1..=1.0),
                phi: rng.gen_range(0.0..=1.0),
                budget: 10f64.powf(rng.gen_range(0.0..8.0)),
                position: h,
            })
            .collect();
        let prev_price = 10f64.powf(rng.gen_range(-2.0..4.0));
        (demands, held, supply, prev_price)
    }

    #[test]
    fn randomized_instances_match_the_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let mut cleared = 0;
        for case in 0..300 {
            let (demands, held, supply, prev_price) = random_instance(&mut rng);
            let r = clear_stock(&demands, &held, supply, prev_price, case).unwrap();
            if r.no_trade {
                continue;
            }
            cleared += 1;
            let coeff: f64 = demands.iter().map(|d| d.coefficient()).sum();
            let expected = coeff / supply; // held sums to supply
            assert_relative_eq!(r.price, expected, max_relative = CLOSED_FORM_RTOL);
            assert!(r.residual <= RESIDUAL_TOL * supply);

            // Settling at the root conserves shares exactly.
            let s = settle_stock(&demands, &held, r.price);
            let total: f64 = s.new_positions.iter().sum();
            assert!(
                (total - supply).abs() <= RESIDUAL_TOL * supply,
                "case {case}: positions sum {total} vs supply {supply}"
            );
            assert!((s.cash_deltas.iter().sum::<f64>()).abs() <= 1e-9 * coeff.max(supply));
        }
        assert!(cleared > 250, "almost all random instances should trade");
    }

    proptest! {
        /// Aggregate demand is strictly decreasing wherever someone bids.
        #[test]
        fn demand_is_strictly_decreasing(
            budget in 1.0f64..1e9,
            phi in 0.01f64..1.0,
            beta in 0.01f64..1.0,
            position in 0.0f64..1e6,
            p in 0.1f64..1e4,
        ) {
            let d = DemandFunction { beta, phi, budget, position };
            prop_assert!(d.excess_demand(p) > d.excess_demand(p * 1.5));
        }

        /// Doubling every budget doubles the clearing price (demand is
        /// homogeneous of degree one in budgets).
        #[test]
        fn price_is_linear_in_budgets(
            budgets in proptest::collection::vec(10.0f64..1e6, 1..8),
            supply in 10.0f64..1e4,
        ) {
            let held: Vec<f64> = vec![supply / budgets.len() as f64; budgets.len()];
            let demands: Vec<DemandFunction> =
                budgets.iter().zip(&held).map(|(&b, &h)| frozen(b, h)).collect();
            let doubled: Vec<DemandFunction> =
                budgets.iter().zip(&held).map(|(&b, &h)| frozen(2.0 * b, h)).collect();
            let p1 = clear_stock(&demands, &held, supply, 1.0, 0).unwrap().price;
            let p2 = clear_stock(&doubled, &held, supply, 1.0, 0).unwrap().price;
            prop_assert!((p2 / p1 - 2.0).abs() < 1e-9);
        }
    }
}
