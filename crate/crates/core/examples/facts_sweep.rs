//! Runs the stylized-facts battery across seeds and prints one verdict line
//! per seed. This is the calibration loop behind the default parameters:
//! tweak a knob, re-run, watch the pass count.
//!
//! Usage: facts_sweep [key=value ...]
//! Knobs: days seeds stocks burn buffer interest flows flow_b flow_freq
//!        flow_window theta mu sigma gamma top_k blend_k lambda beta
//!
//! Example: cargo run --release --example facts_sweep -- buffer=0.042 sigma=0.15

use std::time::Instant;

use mecosim::config::SimConfig;
use mecosim::validation::{log_returns, market_aggregate, stylized_report, FactThresholds, Verdict};
use rayon::prelude::*;

fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n / s2.powf(1.5)
}

fn main() {
    let mut days: usize = 5000;
    let mut seeds: u64 = 10;
    let mut seed0: u64 = 0;
    let mut stocks: usize = 21;
    let mut burn: usize = 252;
    let mut detail = false;
    let mut cfg = SimConfig::from_toml_str(
        "schema_version = 1\n[data.synthetic]\nn_stocks = 21\n",
    )
    .expect("base config");

    for arg in std::env::args().skip(1) {
        let (key, value) = arg.split_once('=').unwrap_or_else(|| {
            eprintln!("expected key=value, got `{arg}`");
            std::process::exit(2);
        });
        let f = || value.parse::<f64>().unwrap();
        match key {
            "days" => days = value.parse().unwrap(),
            "seeds" => seeds = value.parse().unwrap(),
            "seed0" => seed0 = value.parse().unwrap(),
            "stocks" => stocks = value.parse().unwrap(),
            "burn" => burn = value.parse().unwrap(),
            "detail" => detail = value == "1",
            "buffer" => cfg.participants.cash_buffer = f(),
            "interest" => cfg.cash.interest_rate = f(),
            "flows" => cfg.flows.enabled = value == "1",
            "flow_b" => cfg.flows.slope_b = f(),
            "flow_freq" => cfg.flows.frequency = value.parse().unwrap(),
            "flow_window" => cfg.flows.window = value.parse().unwrap(),
            "theta" => cfg.retail.theta = f(),
            "mu" => cfg.retail.mu = f(),
            "sigma" => cfg.retail.sigma = f(),
            "gamma" => cfg.retail.gamma = f(),
            "top_k" => cfg.participants.top_k = value.parse().unwrap(),
            "blend_k" => cfg.participants.blend_k = value.parse().unwrap(),
            "lambda" => cfg.participants.lambda = f(),
            "beta" => cfg.participants.beta = f(),
            // value,blend,growth,index,international,retail — must sum to 1.
            "shares" => {
                let s: Vec<f64> = value.split(',').map(|x| x.parse().unwrap()).collect();
                assert_eq!(s.len(), 6, "shares wants six comma-separated values");
                let p = &mut cfg.participants;
                p.value_share = s[0];
                p.blend_share = s[1];
                p.growth_share = s[2];
                p.index_share = s[3];
                p.international_share = s[4];
                p.retail_share = s[5];
            }
            other => {
                eprintln!("unknown knob `{other}`");
                std::process::exit(2);
            }
        }
    }
    cfg.run.t_max = days;
    cfg.data.synthetic.as_mut().unwrap().n_stocks = stocks;

    let started = Instant::now();
    let mut results: Vec<(u64, String, bool)> = (seed0..seed0 + seeds)
        .into_par_iter()
        .map(|seed| {
            let mut c = cfg.clone();
            c.run.seed = seed;
            let out = mecosim::engine::run(c).expect("run should not error");
            let p: Vec<Vec<f64>> = (0..out.stock_ids.len())
                .map(|i| out.prices.column_by_index(i)[burn.min(out.n_days() - 1)..].to_vec())
                .collect();
            let v: Vec<Vec<f64>> = (0..out.stock_ids.len())
                .map(|i| out.volumes.column_by_index(i)[burn.min(out.n_days() - 1)..].to_vec())
                .collect();
            let r = stylized_report(&p, &v, &FactThresholds::default()).expect("report");
            if detail && seed == seed0 {
                let (level, _) = market_aggregate(&p, &v).unwrap();
                let returns = log_returns(&level, 1).unwrap();
                let a = r.acf_returns.as_ref().unwrap();
                println!("band ±{:.4}", a.band);
                for (i, val) in a.values.iter().enumerate() {
                    let out = if val.abs() > a.band { " <-- out" } else { "" };
                    println!("acf lag {:2}: {:+.4}{}", i + 1, val, out);
                }
                println!("return skewness: {:+.3}", skewness(&returns));
                println!(
                    "level start {:.3} end {:.3} min {:.3} max {:.3}",
                    level[0],
                    level[level.len() - 1],
                    level.iter().cloned().fold(f64::INFINITY, f64::min),
                    level.iter().cloned().fold(0.0f64, f64::max),
                );
            }
            let mark = |v: Verdict| match v {
                Verdict::Pass => 'P',
                Verdict::Fail => 'F',
                Verdict::Insufficient => 'I',
            };
            let line = format!(
                "seed {seed:2}  [{}]  acf_in={:.2} clust={:.2} k_d={:7.2} k_m={:6.2} k_y={:6.2} lev={:+.3} volvol={:+.3}{}",
                r.verdicts.all().map(|(_, v)| mark(v)).iter().collect::<String>(),
                r.acf_within_fraction.unwrap_or(f64::NAN),
                r.clustering_above_fraction.unwrap_or(f64::NAN),
                r.kurtosis_daily.unwrap_or(f64::NAN),
                r.kurtosis_monthly.unwrap_or(f64::NAN),
                r.kurtosis_yearly.unwrap_or(f64::NAN),
                r.leverage_corr.unwrap_or(f64::NAN),
                r.volume_volatility_corr.unwrap_or(f64::NAN),
                if out.terminated_early { "  EARLY-STOP" } else { "" },
            );
            (seed, line, r.verdicts.all_pass())
        })
        .collect();
    results.sort_by_key(|(seed, ..)| *seed);

    let passed = results.iter().filter(|(.., ok)| *ok).count();
    println!("facts: [no-acf tails aggr clust lever volvol]");
    for (_, line, _) in &results {
        println!("{line}");
    }
    println!(
        "{passed}/{} seeds pass all facts  ({:.1}s total)",
        results.len(),
        started.elapsed().as_secs_f64()
    );
}
