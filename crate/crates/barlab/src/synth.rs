//! Deterministic synthetic daily bars for tests, examples and demo runs.

use std::io::Write;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{change_rate, Bar, ColumnMap};
use crate::error::Result;

fn next_weekday(mut date: NaiveDate) -> NaiveDate {
    loop {
        date = date.succ_opt().expect("date in range");
        if !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            return date;
        }
    }
}

fn walk(seed: u64, days: usize, drift: f64, volatility: f64) -> Vec<Bar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let daily = Normal::new(drift, volatility).expect("valid normal");
    let mut bars = Vec::with_capacity(days);
    let mut prev_close = 8.0 + 12.0 * rng.random::<f64>();
    let mut date = NaiveDate::from_ymd_opt(2015, 1, 5).expect("valid date");
    for _ in 0..days {
        let move_frac: f64 = daily.sample(&mut rng).clamp(-0.095, 0.095);
        let latest = prev_close * (1.0 + move_frac);
        let open = prev_close * (1.0 + 0.004 * (rng.random::<f64>() - 0.5));
        let spread = 1.0 + 0.01 * rng.random::<f64>();
        let high = latest.max(open).max(prev_close) * spread;
        let low = latest.min(open).min(prev_close) / spread;
        let volume = (2e5 + 6e5 * rng.random::<f64>()).round();
        let amount_rmb = (volume * (high + low) / 2.0).round();
        bars.push(Bar {
            trade_date: date,
            prev_close,
            open,
            high,
            low,
            latest,
            volume,
            amount_rmb,
            change_rate: change_rate(latest, prev_close).expect("positive close"),
        });
        prev_close = latest;
        date = next_weekday(date);
    }
    bars
}

/// A seeded random-walk stock history of `days` weekday bars.
pub fn synthetic_bars(seed: u64, days: usize) -> Vec<Bar> {
    walk(seed, days, 0.0004, 0.018)
}

/// Ten-stock style universe: (stock id, bars) pairs with per-stock drifts.
pub fn synthetic_universe(seed: u64, stocks: usize, days: usize) -> Vec<(String, Vec<Bar>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..stocks)
        .map(|i| {
            let stock_seed: u64 = rng.random();
            let drift = -0.0008 + 0.0004 * i as f64;
            let volatility = 0.012 + 0.002 * (i % 5) as f64;
            (
                format!("SYN{:03}", i + 1),
                walk(stock_seed, days, drift, volatility),
            )
        })
        .collect()
}

/// Steadily rising market: every open strictly above the previous one while
/// the close walk still dips every third day, so labels stay mixed.
pub fn monotone_bars(days: usize) -> Vec<Bar> {
    let mut bars = Vec::with_capacity(days);
    let mut prev_close = 10.0;
    let mut open = 10.0;
    let mut date = NaiveDate::from_ymd_opt(2015, 1, 5).expect("valid date");
    for i in 0..days {
        open *= 1.003;
        let wobble = if i % 3 == 2 { -0.002 } else { 0.005 };
        let latest = prev_close * (1.0 + wobble);
        bars.push(Bar {
            trade_date: date,
            prev_close,
            open,
            high: latest.max(open) * 1.003,
            low: open.min(latest) * 0.997,
            latest,
            volume: 1e5 + (i as f64) * 10.0,
            amount_rmb: latest * 1e5,
            change_rate: change_rate(latest, prev_close).expect("positive close"),
        });
        prev_close = latest;
        date = next_weekday(date);
    }
    bars
}

/// Write bars as a raw comma-separated table in the configured schema,
/// including a couple of unmapped columns.
pub fn write_raw_csv<W: Write>(
    mut writer: W,
    security_code: &str,
    bars: &[Bar],
    columns: &ColumnMap,
) -> Result<()> {
    writeln!(
        writer,
        "{},{},{},{},{},{},{},{},{},{},currency type,exchange",
        columns.security_code,
        columns.trade_date,
        columns.prev_close,
        columns.open,
        columns.volume,
        columns.high,
        columns.low,
        columns.latest,
        columns.amount_original,
        columns.amount_rmb,
    )?;
    for bar in bars {
        writeln!(
            writer,
            "{},{},{},{},{:.0},{},{},{},{},{},CNY,XSHG",
            security_code,
            bar.trade_date,
            bar.prev_close,
            bar.open,
            bar.volume,
            bar.high,
            bar.low,
            bar.latest,
            bar.amount_rmb,
            bar.amount_rmb,
        )?;
    }
    Ok(())
}
