//! Signal replay through the two decision rules: the naive signal follower
//! and the threshold-gated accumulator, plus flat-fee adjustment and
//! transaction counting.
//!
//! Both replays are faithful transcriptions of the decision procedures,
//! quirks included: the naive rule's buy branch fires on every signal-1 day
//! and overwrites any open position's cost basis, which is why its buy
//! counts far exceed its sell counts.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::Bar;
use crate::error::{Error, Result};

/// Per-day decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Buy,
    Sell,
    Hold,
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Action::Buy => "buy",
            Action::Sell => "sell",
            Action::Hold => "hold",
        })
    }
}

/// Which decision rule a backtest replays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Simple,
    Threshold,
}

impl StrategyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Simple => "simple",
            StrategyKind::Threshold => "threshold",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(StrategyKind::Simple),
            "threshold" => Ok(StrategyKind::Threshold),
            other => Err(Error::Usage(format!(
                "unknown strategy `{other}`; expected simple or threshold"
            ))),
        }
    }
}

/// Predicted {0,1} signals aligned one-to-one with the backtest bars.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries {
    dates: Vec<NaiveDate>,
    signals: Vec<u8>,
}

impl SignalSeries {
    pub fn new(dates: Vec<NaiveDate>, signals: Vec<u8>) -> Result<Self> {
        if dates.len() != signals.len() {
            return Err(Error::Shape(format!(
                "{} dates against {} signals",
                dates.len(),
                signals.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "signal dates must be strictly increasing".into(),
            ));
        }
        if signals.iter().any(|&s| s > 1) {
            return Err(Error::Domain("signals must be 0 or 1".into()));
        }
        Ok(Self { dates, signals })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn signals(&self) -> &[u8] {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }
}

/// Open-position bookkeeping: accumulated cost basis and lot count.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PositionState {
    pub buy_price: Option<f64>,
    pub buy_count: u32,
    pub buy_index: Option<usize>,
}

impl PositionState {
    fn clear(&mut self) {
        *self = PositionState::default();
    }
}

/// Gain gates for the accumulating strategy. The defaults are artifact
/// placeholders; no canonical values exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// Fractional gain an open position must exceed before adding a lot.
    pub buy_threshold: f64,
    /// Fractional gain below which a signal-0 day exits the position.
    pub sell_threshold: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            buy_threshold: 0.02,
            sell_threshold: 0.05,
        }
    }
}

/// Replay outcome: per-day actions and profits plus transaction counts and
/// revenue in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeLog {
    pub dates: Vec<NaiveDate>,
    pub actions: Vec<Action>,
    pub profits: Vec<f64>,
    pub buys: u32,
    pub sells: u32,
    pub total: u32,
    pub gross_revenue: f64,
    pub net_revenue: f64,
}

impl TradeLog {
    fn new(dates: Vec<NaiveDate>, actions: Vec<Action>, profits: Vec<f64>) -> Self {
        let buys = actions.iter().filter(|a| **a == Action::Buy).count() as u32;
        let sells = actions.iter().filter(|a| **a == Action::Sell).count() as u32;
        let gross_revenue = 100.0 * profits.iter().sum::<f64>();
        Self {
            dates,
            actions,
            profits,
            buys,
            sells,
            total: buys + sells,
            gross_revenue,
            net_revenue: gross_revenue,
        }
    }

    /// CSV plot data: date, action, profit and running return in percent.
    pub fn to_plot_csv(&self) -> String {
        let mut out = String::from("date,action,profit,cumulative_return\n");
        let mut cumulative = 0.0;
        for ((date, action), profit) in self.dates.iter().zip(&self.actions).zip(&self.profits) {
            cumulative += profit;
            out.push_str(&format!(
                "{date},{action},{profit},{}\n",
                100.0 * cumulative
            ));
        }
        out
    }

    /// JSON summary of counts and revenue.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary {
            buys: u32,
            sells: u32,
            total: u32,
            gross_revenue: f64,
            net_revenue: f64,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            buys: self.buys,
            sells: self.sells,
            total: self.total,
            gross_revenue: self.gross_revenue,
            net_revenue: self.net_revenue,
        })?)
    }
}

fn check_alignment(signals: &SignalSeries, bars: &[Bar]) -> Result<()> {
    if signals.len() != bars.len() {
        return Err(Error::Shape(format!(
            "{} signals against {} bars",
            signals.len(),
            bars.len()
        )));
    }
    for (date, bar) in signals.dates().iter().zip(bars) {
        if *date != bar.trade_date {
            return Err(Error::Shape(format!(
                "signal date {date} does not match bar date {}",
                bar.trade_date
            )));
        }
    }
    Ok(())
}

/// Naive signal follower: buy the open on every signal-1 day (resetting the
/// lot count to one), sell the whole position on the first signal-0 day,
/// hold otherwise.
pub fn run_simple(signals: &SignalSeries, bars: &[Bar]) -> Result<TradeLog> {
    check_alignment(signals, bars)?;
    let mut actions = Vec::with_capacity(bars.len());
    let mut profits = Vec::with_capacity(bars.len());
    let mut position = PositionState::default();
    for (i, (bar, &signal)) in bars.iter().zip(signals.signals()).enumerate() {
        if signal == 1 {
            position.buy_price = Some(bar.open);
            position.buy_count = 1;
            position.buy_index = Some(i);
            profits.push(0.0);
            actions.push(Action::Buy);
        } else if let Some(basis) = position.buy_price {
            let profit = (bar.open * f64::from(position.buy_count) - basis) / basis;
            profits.push(profit);
            actions.push(Action::Sell);
            position.clear();
        } else {
            profits.push(0.0);
            actions.push(Action::Hold);
        }
    }
    Ok(TradeLog::new(signals.dates().to_vec(), actions, profits))
}

/// Threshold-gated accumulator: signal-1 days open a position or add a lot
/// once the running gain exceeds `buy_threshold`; signal-0 days exit only
/// when the running gain falls below `sell_threshold`.
pub fn run_threshold(
    signals: &SignalSeries,
    bars: &[Bar],
    thresholds: &ThresholdConfig,
) -> Result<TradeLog> {
    check_alignment(signals, bars)?;
    let mut actions = Vec::with_capacity(bars.len());
    let mut profits = Vec::with_capacity(bars.len());
    let mut position = PositionState::default();
    for (i, (bar, &signal)) in bars.iter().zip(signals.signals()).enumerate() {
        if signal == 1 {
            match position.buy_price {
                None => {
                    position.buy_price = Some(bar.open);
                    position.buy_count = 1;
                    position.buy_index = Some(i);
                    profits.push(0.0);
                    actions.push(Action::Buy);
                }
                Some(basis) => {
                    let gain = (bar.open * f64::from(position.buy_count) - basis) / basis;
                    if gain > thresholds.buy_threshold {
                        position.buy_price = Some(basis + bar.open);
                        position.buy_count += 1;
                        position.buy_index = Some(i);
                        profits.push(0.0);
                        actions.push(Action::Buy);
                    } else {
                        profits.push(0.0);
                        actions.push(Action::Hold);
                    }
                }
            }
        } else if let Some(basis) = position.buy_price {
            let gain = (bar.open * f64::from(position.buy_count) - basis) / basis;
            if gain < thresholds.sell_threshold {
                profits.push(gain);
                actions.push(Action::Sell);
                position.clear();
            } else {
                profits.push(0.0);
                actions.push(Action::Hold);
            }
        } else {
            profits.push(0.0);
            actions.push(Action::Hold);
        }
    }
    Ok(TradeLog::new(signals.dates().to_vec(), actions, profits))
}

/// Total flat fees for a transaction count.
pub fn total_fees(transactions: u32, fee_per_transaction: f64) -> f64 {
    fee_per_transaction * f64::from(transactions)
}

/// Deduct a flat per-transaction fee from the gross revenue, normalized by
/// the notional position size. Counts and per-day entries are unchanged.
/// Requires `fee_per_transaction >= 0` and `notional_per_trade > 0`.
pub fn apply_fees(log: &TradeLog, fee_per_transaction: f64, notional_per_trade: f64) -> TradeLog {
    assert!(
        fee_per_transaction >= 0.0 && notional_per_trade > 0.0,
        "fee must be nonnegative and notional positive"
    );
    let mut out = log.clone();
    out.net_revenue =
        log.gross_revenue - 100.0 * total_fees(log.total, fee_per_transaction) / notional_per_trade;
    out
}

/// Buy, sell and total transaction counts of a replay.
pub fn count_transactions(log: &TradeLog) -> (u32, u32, u32) {
    (log.buys, log.sells, log.total)
}
