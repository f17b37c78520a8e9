//! CSV output.

use std::io::Write;

use serde::Serialize;

use super::experiment::{ResultRecord, TrialRecord};
use crate::Result;

/// Column order of the aggregated results.
pub const RESULT_COLUMNS: [&str; 11] = [
    "power_dbm",
    "scheme",
    "attack",
    "tau_bs",
    "tau_attacker",
    "mean_sum_rate",
    "std_sum_rate",
    "mean_common_rate",
    "mean_private_rate_sum",
    "mean_alpha_common",
    "trials",
];

fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes aggregated records with a header row.
pub fn write_records<W: Write>(writer: W, records: &[ResultRecord]) -> Result<()> {
    if records.is_empty() {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(RESULT_COLUMNS)?;
        csv.flush()?;
        return Ok(());
    }
    write_rows(writer, records)
}

/// Writes per-trial rows with a header row.
pub fn write_trials<W: Write>(writer: W, trials: &[TrialRecord]) -> Result<()> {
    write_rows(writer, trials)
}

/// Reads aggregated records back.
pub fn read_records<R: std::io::Read>(reader: R) -> Result<Vec<ResultRecord>> {
    let mut csv = csv::Reader::from_reader(reader);
    Ok(csv.deserialize().collect::<std::result::Result<_, _>>()?)
}
