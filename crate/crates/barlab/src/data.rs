//! Daily-bar ingestion: table parsing, cleaning, change-rate labeling and
//! standardized train/test dataset construction.

use std::io::Read;

use chrono::NaiveDate;
use ndarray::{s, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header names binding a raw table to bar fields. Defaults follow the
/// translated schema of daily A-share exports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub security_code: String,
    pub trade_date: String,
    pub prev_close: String,
    pub open: String,
    pub volume: String,
    pub high: String,
    pub low: String,
    pub latest: String,
    pub amount_original: String,
    pub amount_rmb: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            security_code: "security code".into(),
            trade_date: "trading date".into(),
            prev_close: "yesterday's closing price".into(),
            open: "today's opening price".into(),
            volume: "transaction volume".into(),
            high: "highest transaction price".into(),
            low: "lowest transaction price".into(),
            latest: "latest transaction price".into(),
            amount_original: "transaction amount in original currency".into(),
            amount_rmb: "transaction amount in RMB".into(),
        }
    }
}

/// One row of the raw table. Numeric cells may be empty; `extra_columns`
/// keeps every unmapped column verbatim, in source header order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBar {
    pub security_code: String,
    pub trade_date: NaiveDate,
    pub prev_close: Option<f64>,
    pub open: Option<f64>,
    pub volume: Option<f64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub latest: Option<f64>,
    pub amount_original: Option<f64>,
    pub amount_rmb: Option<f64>,
    pub extra_columns: Vec<(String, String)>,
}

/// A cleaned daily record with its day-over-day change rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub trade_date: NaiveDate,
    pub prev_close: f64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub latest: f64,
    pub volume: f64,
    pub amount_rmb: f64,
    pub change_rate: f64,
}

impl Bar {
    pub const FEATURE_NAMES: [&'static str; 7] = [
        "prev_close",
        "open",
        "high",
        "low",
        "latest",
        "volume",
        "amount_rmb",
    ];

    /// Model features of this day, in `FEATURE_NAMES` order.
    pub fn features(&self) -> [f64; 7] {
        [
            self.prev_close,
            self.open,
            self.high,
            self.low,
            self.latest,
            self.volume,
            self.amount_rmb,
        ]
    }
}

impl From<&Bar> for RawBar {
    fn from(bar: &Bar) -> Self {
        RawBar {
            security_code: String::new(),
            trade_date: bar.trade_date,
            prev_close: Some(bar.prev_close),
            open: Some(bar.open),
            volume: Some(bar.volume),
            high: Some(bar.high),
            low: Some(bar.low),
            latest: Some(bar.latest),
            amount_original: None,
            amount_rmb: Some(bar.amount_rmb),
            extra_columns: Vec::new(),
        }
    }
}

/// Parse a delimited text table into raw bars. The header row must contain
/// every mandatory configured column; unmapped columns land in
/// `extra_columns`. Lines starting with `#` are skipped.
pub fn parse_table<R: Read>(reader: R, columns: &ColumnMap) -> Result<Vec<RawBar>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));

    let idx_date = require(&columns.trade_date)?;
    let idx_prev_close = require(&columns.prev_close)?;
    let idx_open = require(&columns.open)?;
    let idx_volume = require(&columns.volume)?;
    let idx_high = require(&columns.high)?;
    let idx_low = require(&columns.low)?;
    let idx_latest = require(&columns.latest)?;
    let idx_amount_rmb = require(&columns.amount_rmb)?;
    let idx_code = find(&columns.security_code);
    let idx_amount_original = find(&columns.amount_original);

    let mut mapped = vec![false; headers.len()];
    for idx in [
        idx_date,
        idx_prev_close,
        idx_open,
        idx_volume,
        idx_high,
        idx_low,
        idx_latest,
        idx_amount_rmb,
    ] {
        mapped[idx] = true;
    }
    if let Some(i) = idx_code {
        mapped[i] = true;
    }
    if let Some(i) = idx_amount_original {
        mapped[i] = true;
    }

    let mut bars = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row_no + 1;
        let cell = |idx: usize| record.get(idx).unwrap_or("").trim();
        let number = |idx: usize, name: &str| -> Result<Option<f64>> {
            let text = cell(idx);
            if text.is_empty() {
                return Ok(None);
            }
            let value: f64 = text.parse().map_err(|_| Error::Row {
                row,
                message: format!("column {name}: cannot parse number `{text}`"),
            })?;
            if !value.is_finite() {
                return Err(Error::Row {
                    row,
                    message: format!("column {name}: non-finite value `{text}`"),
                });
            }
            Ok(Some(value))
        };

        let date_text = cell(idx_date);
        let trade_date =
            NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|_| Error::Row {
                row,
                message: format!("invalid date `{date_text}`"),
            })?;

        let extra_columns = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !mapped[*i])
            .map(|(i, name)| (name.clone(), record.get(i).unwrap_or("").to_string()))
            .collect();

        bars.push(RawBar {
            security_code: idx_code.map(|i| cell(i).to_string()).unwrap_or_default(),
            trade_date,
            prev_close: number(idx_prev_close, &columns.prev_close)?,
            open: number(idx_open, &columns.open)?,
            volume: number(idx_volume, &columns.volume)?,
            high: number(idx_high, &columns.high)?,
            low: number(idx_low, &columns.low)?,
            latest: number(idx_latest, &columns.latest)?,
            amount_original: idx_amount_original
                .map(|i| number(i, &columns.amount_original))
                .transpose()?
                .flatten(),
            amount_rmb: number(idx_amount_rmb, &columns.amount_rmb)?,
            extra_columns,
        });
    }
    Ok(bars)
}

/// Row counts observed at each cleaning stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CleanSummary {
    pub input_rows: usize,
    pub after_dedup: usize,
    pub after_forward_fill: usize,
    pub after_volume_filter: usize,
}

/// Clean raw bars: sort by date, drop exact duplicates, forward-fill missing
/// numeric cells, drop negative-volume rows and compute the change rate.
pub fn clean(raw: &[RawBar]) -> Result<Vec<Bar>> {
    clean_with_summary(raw).map(|(bars, _)| bars)
}

pub fn clean_with_summary(raw: &[RawBar]) -> Result<(Vec<Bar>, CleanSummary)> {
    let input_rows = raw.len();
    let mut rows = raw.to_vec();
    rows.sort_by_key(|r| r.trade_date);

    // Exact duplicates share a trade date, so equality is checked within the
    // date group; a stable sort cannot separate them further.
    let mut deduped: Vec<RawBar> = Vec::with_capacity(rows.len());
    let mut group_start = 0;
    for row in rows {
        if deduped
            .last()
            .is_some_and(|last| last.trade_date != row.trade_date)
        {
            group_start = deduped.len();
        }
        if !deduped[group_start..].contains(&row) {
            deduped.push(row);
        }
    }
    let after_dedup = deduped.len();

    // Forward fill from the previous filled row; leading rows with a gap and
    // no predecessor are dropped.
    let mut filled: Vec<RawBar> = Vec::with_capacity(deduped.len());
    for mut row in deduped {
        if let Some(prev) = filled.last() {
            row.prev_close = row.prev_close.or(prev.prev_close);
            row.open = row.open.or(prev.open);
            row.volume = row.volume.or(prev.volume);
            row.high = row.high.or(prev.high);
            row.low = row.low.or(prev.low);
            row.latest = row.latest.or(prev.latest);
            row.amount_original = row.amount_original.or(prev.amount_original);
            row.amount_rmb = row.amount_rmb.or(prev.amount_rmb);
        } else if !is_complete(&row) {
            continue;
        }
        filled.push(row);
    }
    let after_forward_fill = filled.len();

    filled.retain(|row| row.volume.is_some_and(|v| v >= 0.0));
    let after_volume_filter = filled.len();

    let mut bars = Vec::with_capacity(filled.len());
    for (i, row) in filled.iter().enumerate() {
        bars.push(to_bar(row, i + 1)?);
    }
    if bars.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((
        bars,
        CleanSummary {
            input_rows,
            after_dedup,
            after_forward_fill,
            after_volume_filter,
        },
    ))
}

fn is_complete(row: &RawBar) -> bool {
    row.prev_close.is_some()
        && row.open.is_some()
        && row.volume.is_some()
        && row.high.is_some()
        && row.low.is_some()
        && row.latest.is_some()
        && row.amount_rmb.is_some()
}

fn to_bar(row: &RawBar, ordinal: usize) -> Result<Bar> {
    let field = |value: Option<f64>, name: &str| {
        value.ok_or_else(|| Error::Row {
            row: ordinal,
            message: format!("{}: column {name} is missing", row.trade_date),
        })
    };
    let prev_close = field(row.prev_close, "prev_close")?;
    let open = field(row.open, "open")?;
    let high = field(row.high, "high")?;
    let low = field(row.low, "low")?;
    let latest = field(row.latest, "latest")?;
    let volume = field(row.volume, "volume")?;
    let amount_rmb = field(row.amount_rmb, "amount_rmb")?;
    if prev_close <= 0.0 || open <= 0.0 {
        return Err(Error::Row {
            row: ordinal,
            message: format!("{}: prices must be positive", row.trade_date),
        });
    }
    if low > high {
        return Err(Error::Row {
            row: ordinal,
            message: format!("{}: low above high", row.trade_date),
        });
    }
    Ok(Bar {
        trade_date: row.trade_date,
        prev_close,
        open,
        high,
        low,
        latest,
        volume,
        amount_rmb,
        change_rate: change_rate(latest, prev_close)?,
    })
}

/// Fractional day-over-day move: (latest - prev_close) / prev_close.
pub fn change_rate(latest: f64, prev_close: f64) -> Result<f64> {
    if prev_close <= 0.0 {
        return Err(Error::Domain(format!(
            "change rate needs a positive previous close, got {prev_close}"
        )));
    }
    Ok((latest - prev_close) / prev_close)
}

/// Mean and population standard deviation used to standardize one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: f64,
    pub std: f64,
}

/// Standardize a column to mean 0 and unit population variance.
pub fn standardize(column: &[f64]) -> Result<(Vec<f64>, StandardizationParams)> {
    if column.len() < 2 {
        return Err(Error::DegenerateFeature);
    }
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let var = column
        .iter()
        .map(|x| {
            let d = x - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    if var == 0.0 || !var.is_finite() {
        return Err(Error::DegenerateFeature);
    }
    let std = var.sqrt();
    let standardized = column.iter().map(|x| (x - mean) / std).collect();
    Ok((standardized, StandardizationParams { mean, std }))
}

/// How the window rows are split into train and test portions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Chronological,
    Shuffled { seed: u64 },
}

/// Standardized features with binary labels over one training window.
///
/// Rows are chronological under [`SplitMode::Chronological`]; the shuffled
/// mode permutes rows with the seeded generator before splitting, and the
/// `dates` vector carries the permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub raw_change: Vec<f64>,
    pub dates: Vec<NaiveDate>,
    pub window: usize,
    pub split_index: usize,
    /// Indices into `Bar::FEATURE_NAMES` for the retained features.
    pub feature_indices: Vec<usize>,
    pub params: Vec<StandardizationParams>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn train_features(&self) -> ArrayView2<'_, f64> {
        self.features.slice(s![..self.split_index, ..])
    }

    pub fn test_features(&self) -> ArrayView2<'_, f64> {
        self.features.slice(s![self.split_index.., ..])
    }

    pub fn train_labels(&self) -> &[u8] {
        &self.labels[..self.split_index]
    }

    pub fn test_labels(&self) -> &[u8] {
        &self.labels[self.split_index..]
    }

    pub fn train_raw_change(&self) -> &[f64] {
        &self.raw_change[..self.split_index]
    }

    pub fn feature_names(&self) -> Vec<&'static str> {
        self.feature_indices
            .iter()
            .map(|&i| Bar::FEATURE_NAMES[i])
            .collect()
    }

    /// Standardize one bar with the fitted parameters, in dataset column order.
    pub fn standardize_bar(&self, bar: &Bar) -> Vec<f64> {
        let raw = bar.features();
        self.feature_indices
            .iter()
            .zip(&self.params)
            .map(|(&i, p)| (raw[i] - p.mean) / p.std)
            .collect()
    }
}

/// Build a dataset from the trailing `window` bars. Labels follow the sign of
/// the change rate; standardization parameters are fitted on the training
/// rows only and applied to both portions. Constant features are dropped.
pub fn build_dataset(
    bars: &[Bar],
    window: usize,
    split_fraction: f64,
    split_mode: SplitMode,
) -> Result<Dataset> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "split fraction must be in (0, 1), got {split_fraction}"
        )));
    }
    if bars.len() <= window + 10 {
        return Err(Error::InsufficientData {
            required: window + 11,
            got: bars.len(),
        });
    }
    let tail = &bars[bars.len() - window..];

    let mut order: Vec<usize> = (0..window).collect();
    if let SplitMode::Shuffled { seed } = split_mode {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    let split_index = (split_fraction * window as f64).floor() as usize;
    if split_index == 0 || split_index >= window {
        return Err(Error::Domain(format!(
            "window {window} leaves no rows on one side of the {split_fraction} split"
        )));
    }

    let raw_rows: Vec<[f64; 7]> = order.iter().map(|&i| tail[i].features()).collect();
    let raw_change: Vec<f64> = order.iter().map(|&i| tail[i].change_rate).collect();
    let labels: Vec<u8> = raw_change.iter().map(|&c| u8::from(c > 0.0)).collect();
    let dates: Vec<NaiveDate> = order.iter().map(|&i| tail[i].trade_date).collect();

    let mut feature_indices = Vec::new();
    let mut params = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for j in 0..Bar::FEATURE_NAMES.len() {
        let train_col: Vec<f64> = raw_rows[..split_index].iter().map(|r| r[j]).collect();
        match standardize(&train_col) {
            Ok((_, p)) => {
                feature_indices.push(j);
                columns.push(raw_rows.iter().map(|r| (r[j] - p.mean) / p.std).collect());
                params.push(p);
            }
            Err(Error::DegenerateFeature) => continue,
            Err(e) => return Err(e),
        }
    }
    if feature_indices.is_empty() {
        return Err(Error::Domain(
            "all features are constant on the training rows".into(),
        ));
    }

    let mut features = Array2::zeros((window, feature_indices.len()));
    for (j, column) in columns.iter().enumerate() {
        for (i, &v) in column.iter().enumerate() {
            features[[i, j]] = v;
        }
    }

    Ok(Dataset {
        features,
        labels,
        raw_change,
        dates,
        window,
        split_index,
        feature_indices,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "security code,trading date,yesterday's closing price,today's opening price,transaction volume,highest transaction price,lowest transaction price,latest transaction price,transaction amount in original currency,transaction amount in RMB,currency type";

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn raw(
        day: &str,
        prev_close: Option<f64>,
        open: Option<f64>,
        volume: Option<f64>,
        latest: Option<f64>,
    ) -> RawBar {
        RawBar {
            security_code: "600000".into(),
            trade_date: date(day),
            prev_close,
            open,
            volume,
            high: latest.map(|l| l + 0.5),
            low: latest.map(|l| l - 0.5),
            latest,
            amount_original: None,
            amount_rmb: volume.map(|v| v * 10.0),
            extra_columns: Vec::new(),
        }
    }

    fn bars_from_changes(changes: &[f64]) -> Vec<Bar> {
        let mut prev_close = 10.0;
        let mut day = date("2020-01-01");
        changes
            .iter()
            .map(|&c| {
                let latest = prev_close * (1.0 + c);
                let bar = Bar {
                    trade_date: day,
                    prev_close,
                    open: prev_close * 1.001,
                    high: latest.max(prev_close) * 1.01,
                    low: latest.min(prev_close) * 0.99,
                    latest,
                    volume: 1000.0,
                    amount_rmb: 1000.0 * latest,
                    change_rate: change_rate(latest, prev_close).unwrap(),
                };
                prev_close = latest;
                day = day.succ_opt().unwrap();
                bar
            })
            .collect()
    }

    fn varied_bars(n: usize) -> Vec<Bar> {
        let changes: Vec<f64> = (0..n)
            .map(|i| 0.02 * ((i as f64 * 0.7).sin() + 0.1 * ((i % 3) as f64 - 1.0)))
            .collect();
        let mut bars = bars_from_changes(&changes);
        for (i, bar) in bars.iter_mut().enumerate() {
            bar.volume = 1000.0 + (i as f64 * 13.0) % 500.0;
            bar.amount_rmb = bar.volume * bar.latest;
        }
        bars
    }

    #[test]
    fn parse_single_valid_row() {
        let text = format!(
            "{HEADER}\n600793,2020-01-02,10.0,10.1,120000,10.4,9.9,10.2,1224000,1224000,CNY\n"
        );
        let rows = parse_table(text.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.security_code, "600793");
        assert_eq!(row.trade_date, date("2020-01-02"));
        assert_eq!(row.prev_close, Some(10.0));
        assert_eq!(row.open, Some(10.1));
        assert_eq!(row.volume, Some(120000.0));
        assert_eq!(row.high, Some(10.4));
        assert_eq!(row.low, Some(9.9));
        assert_eq!(row.latest, Some(10.2));
        assert_eq!(row.amount_rmb, Some(1224000.0));
        assert_eq!(
            row.extra_columns,
            vec![("currency type".to_string(), "CNY".to_string())]
        );
    }

    #[test]
    fn parse_missing_open_column_is_schema_error() {
        let text = "trading date,yesterday's closing price\n2020-01-02,10.0\n";
        let err = parse_table(text.as_bytes(), &ColumnMap::default()).unwrap_err();
        match err {
            Error::MissingColumn(name) => assert_eq!(name, "today's opening price"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn parse_malformed_date_cites_row_two() {
        let text = format!(
            "{HEADER}\n\
             600793,2020-01-02,10.0,10.1,1000,10.4,9.9,10.2,1,1,CNY\n\
             600793,not-a-date,10.2,10.3,1000,10.6,10.0,10.4,1,1,CNY\n\
             600793,2020-01-04,10.4,10.5,1000,10.8,10.2,10.6,1,1,CNY\n"
        );
        let err = parse_table(text.as_bytes(), &ColumnMap::default()).unwrap_err();
        match err {
            Error::Row { row, .. } => assert_eq!(row, 2),
            other => panic!("expected row error, got {other}"),
        }
    }

    #[test]
    fn parse_empty_cell_is_missing_not_error() {
        let text =
            format!("{HEADER}\n600793,2020-01-02,10.0,10.1,120000,10.4,9.9,,1224000,1224000,CNY\n");
        let rows = parse_table(text.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(rows[0].latest, None);
    }

    #[test]
    fn clean_removes_exact_duplicates() {
        let a = raw(
            "2020-01-02",
            Some(10.0),
            Some(10.1),
            Some(1000.0),
            Some(10.2),
        );
        let out = clean(&[a.clone(), a]).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn clean_keeps_distinct_rows_on_same_date() {
        let a = raw(
            "2020-01-02",
            Some(10.0),
            Some(10.1),
            Some(1000.0),
            Some(10.2),
        );
        let mut b = a.clone();
        b.volume = Some(2000.0);
        let out = clean(&[a, b]).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn clean_drops_negative_volume_rows() {
        let rows = vec![
            raw(
                "2020-01-02",
                Some(10.0),
                Some(10.1),
                Some(1000.0),
                Some(10.2),
            ),
            raw(
                "2020-01-03",
                Some(10.2),
                Some(10.3),
                Some(-100.0),
                Some(10.4),
            ),
            raw(
                "2020-01-04",
                Some(10.4),
                Some(10.5),
                Some(1200.0),
                Some(10.6),
            ),
        ];
        let out = clean(&rows).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|b| b.volume >= 0.0));
    }

    #[test]
    fn clean_forward_fills_missing_latest() {
        let rows = vec![
            raw(
                "2020-01-02",
                Some(10.0),
                Some(10.1),
                Some(1000.0),
                Some(10.0),
            ),
            raw("2020-01-03", Some(10.0), Some(10.2), Some(1100.0), None),
        ];
        let out = clean(&rows).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].latest, 10.0);
    }

    #[test]
    fn clean_drops_leading_row_with_gap() {
        let rows = vec![
            raw("2020-01-02", None, Some(10.1), Some(1000.0), Some(10.2)),
            raw(
                "2020-01-03",
                Some(10.2),
                Some(10.3),
                Some(1100.0),
                Some(10.4),
            ),
        ];
        let out = clean(&rows).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].trade_date, date("2020-01-03"));
    }

    #[test]
    fn clean_of_nothing_is_empty_dataset_error() {
        let rows = vec![raw(
            "2020-01-02",
            Some(10.0),
            Some(10.1),
            Some(-1.0),
            Some(10.2),
        )];
        assert!(matches!(clean(&rows), Err(Error::EmptyDataset)));
        assert!(matches!(clean(&[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn clean_sorts_by_date() {
        let rows = vec![
            raw(
                "2020-01-03",
                Some(10.2),
                Some(10.3),
                Some(1100.0),
                Some(10.4),
            ),
            raw(
                "2020-01-02",
                Some(10.0),
                Some(10.1),
                Some(1000.0),
                Some(10.2),
            ),
        ];
        let out = clean(&rows).unwrap();
        assert!(out[0].trade_date < out[1].trade_date);
    }

    #[test]
    fn clean_is_idempotent() {
        let rows = vec![
            raw(
                "2020-01-02",
                Some(10.0),
                Some(10.1),
                Some(1000.0),
                Some(10.2),
            ),
            raw(
                "2020-01-02",
                Some(10.0),
                Some(10.1),
                Some(1000.0),
                Some(10.2),
            ),
            raw("2020-01-03", Some(10.2), Some(10.3), None, Some(10.4)),
            raw("2020-01-06", Some(10.4), Some(10.5), Some(-5.0), Some(10.6)),
            raw(
                "2020-01-07",
                Some(10.6),
                Some(10.7),
                Some(1300.0),
                Some(10.8),
            ),
        ];
        let once = clean(&rows).unwrap();
        let again = clean(&once.iter().map(RawBar::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(once, again);
    }

    #[test]
    fn change_rate_matches_hand_arithmetic() {
        assert_eq!(change_rate(10.5, 10.0).unwrap(), 0.05);
        assert_eq!(change_rate(9.0, 10.0).unwrap(), -0.1);
        assert_eq!(change_rate(7.25, 7.25).unwrap(), 0.0);
    }

    #[test]
    fn change_rate_rejects_nonpositive_prev_close() {
        assert!(matches!(change_rate(10.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(change_rate(10.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn standardize_three_values() {
        // mean 2, population std sqrt(2/3)
        let (z, p) = standardize(&[1.0, 2.0, 3.0]).unwrap();
        let expected = 1.224744871391589;
        assert!((z[0] + expected).abs() < 1e-12);
        assert!(z[1].abs() < 1e-12);
        assert!((z[2] - expected).abs() < 1e-12);
        assert_eq!(p.mean, 2.0);
        assert!((p.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn standardize_constant_column_is_degenerate() {
        assert!(matches!(
            standardize(&[5.0, 5.0, 5.0]),
            Err(Error::DegenerateFeature)
        ));
        assert!(matches!(standardize(&[5.0]), Err(Error::DegenerateFeature)));
    }

    #[test]
    fn build_dataset_window_and_split_index() {
        let bars = varied_bars(1000);
        let ds = build_dataset(&bars, 366, 0.8, SplitMode::Chronological).unwrap();
        assert_eq!(ds.rows(), 366);
        assert_eq!(ds.split_index, 292);
        assert_eq!(ds.dates.len(), 366);
        assert_eq!(ds.labels.len(), 366);
    }

    #[test]
    fn build_dataset_insufficient_rows() {
        let bars = varied_bars(100);
        let err = build_dataset(&bars, 100, 0.8, SplitMode::Chronological).unwrap_err();
        match err {
            Error::InsufficientData { required, got } => {
                assert_eq!(required, 111);
                assert_eq!(got, 100);
            }
            other => panic!("expected insufficient data, got {other}"),
        }
    }

    #[test]
    fn build_dataset_all_positive_changes_label_one() {
        let bars = bars_from_changes(&vec![0.01; 60]);
        let ds = build_dataset(&bars, 40, 0.8, SplitMode::Chronological).unwrap();
        assert!(ds.labels.iter().all(|&l| l == 1));
    }

    #[test]
    fn build_dataset_drops_constant_feature() {
        // constant volume, so the volume column must disappear
        let mut bars = varied_bars(80);
        for bar in &mut bars {
            bar.volume = 500.0;
        }
        let ds = build_dataset(&bars, 50, 0.8, SplitMode::Chronological).unwrap();
        assert!(!ds.feature_names().contains(&"volume"));
        assert_eq!(ds.features.ncols(), 6);
    }

    #[test]
    fn build_dataset_params_fit_on_training_rows_only() {
        let bars = varied_bars(200);
        let ds = build_dataset(&bars, 100, 0.8, SplitMode::Chronological).unwrap();
        for j in 0..ds.features.ncols() {
            let train: Vec<f64> = ds.train_features().column(j).to_vec();
            let n = train.len() as f64;
            let mean = train.iter().sum::<f64>() / n;
            let var = train.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "column {j} train mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "column {j} train var {var}");
        }
    }

    #[test]
    fn build_dataset_shuffled_is_seed_deterministic() {
        let bars = varied_bars(200);
        let a = build_dataset(&bars, 100, 0.8, SplitMode::Shuffled { seed: 9 }).unwrap();
        let b = build_dataset(&bars, 100, 0.8, SplitMode::Shuffled { seed: 9 }).unwrap();
        let c = build_dataset(&bars, 100, 0.8, SplitMode::Shuffled { seed: 10 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.dates, c.dates);
    }

    #[test]
    fn chronological_split_keeps_test_after_train() {
        let bars = varied_bars(200);
        let ds = build_dataset(&bars, 120, 0.8, SplitMode::Chronological).unwrap();
        let last_train = ds.dates[ds.split_index - 1];
        let first_test = ds.dates[ds.split_index];
        assert!(last_train < first_test);
        assert!(ds.dates.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn standardized_output_has_zero_mean_unit_variance(
            values in proptest::collection::vec(-1e4f64..1e4, 3..200)
        ) {
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let (z, _) = standardize(&values).unwrap();
            let n = z.len() as f64;
            let mean = z.iter().sum::<f64>() / n;
            let var = z.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }

        #[test]
        fn change_rate_is_scale_invariant(
            latest in 0.01f64..1e3,
            prev in 0.01f64..1e3,
            scale in 0.01f64..1e3
        ) {
            let base = change_rate(latest, prev).unwrap();
            let scaled = change_rate(scale * latest, scale * prev).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-9 * base.abs().max(1.0));
        }

        #[test]
        fn labels_follow_change_sign(changes in proptest::collection::vec(-0.09f64..0.09, 60..120)) {
            let bars = bars_from_changes(&changes);
            let window = bars.len() - 11;
            prop_assume!(window > 2);
            let ds = build_dataset(&bars, window, 0.8, SplitMode::Chronological).unwrap();
            for (label, change) in ds.labels.iter().zip(&ds.raw_change) {
                prop_assert_eq!(*label == 1, *change > 0.0);
            }
        }
    }
}
