//! Parse a raw daily-bar table and clean it: dedup, forward fill, drop
//! negative volumes, compute change rates.
//!
//! Run with: cargo run --example ingest_and_clean

use barlab::data::{clean_with_summary, parse_table, ColumnMap};

fn main() -> barlab::Result<()> {
    // a raw table with a duplicated row, a missing cell and a bad volume
    let raw = "\
security code,trading date,yesterday's closing price,today's opening price,transaction volume,highest transaction price,lowest transaction price,latest transaction price,transaction amount in original currency,transaction amount in RMB,currency type
600793,2020-01-02,10.00,10.05,120000,10.40,9.90,10.20,1224000,1224000,CNY
600793,2020-01-02,10.00,10.05,120000,10.40,9.90,10.20,1224000,1224000,CNY
600793,2020-01-03,10.20,10.25,130000,10.60,10.10,,1326000,1326000,CNY
600793,2020-01-06,10.20,10.30,-500,10.70,10.20,10.55,0,0,CNY
600793,2020-01-07,10.55,10.60,90000,10.90,10.40,10.80,972000,972000,CNY
";

    let columns = ColumnMap::default();
    let rows = parse_table(raw.as_bytes(), &columns)?;
    println!("parsed {} raw rows", rows.len());
    println!("first row extras: {:?}", rows[0].extra_columns);

    let (bars, summary) = clean_with_summary(&rows)?;
    println!(
        "cleaning: {} in, {} after dedup, {} after forward fill, {} after volume filter",
        summary.input_rows,
        summary.after_dedup,
        summary.after_forward_fill,
        summary.after_volume_filter
    );
    for bar in &bars {
        println!(
            "{}  open {:>6.2}  latest {:>6.2}  change {:+.4}",
            bar.trade_date, bar.open, bar.latest, bar.change_rate
        );
    }
    // the 2020-01-03 row inherited its missing latest price from the
    // previous day, so its change rate is exactly zero
    Ok(())
}
