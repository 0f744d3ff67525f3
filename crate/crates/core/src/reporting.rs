//! Cross-run aggregation and CSV / JSON output.
//!
//! Per-round CSV columns:
//! `round,alive,dead,ch_count,packets_to_bs,packets_to_ch,total_residual_j`
//! where both packet counters are cumulative.
//!
//! Summary CSV columns:
//! `protocol,scenario,seed,first_death,tenth_death,last_death,total_packets`
//! with an empty cell for a death round that never occurred.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{RoundMetrics, RunSummary};
use crate::error::{Error, Result};

pub const ROUND_HEADER: [&str; 7] = [
    "round",
    "alive",
    "dead",
    "ch_count",
    "packets_to_bs",
    "packets_to_ch",
    "total_residual_j",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "protocol",
    "scenario",
    "seed",
    "first_death",
    "tenth_death",
    "last_death",
    "total_packets",
];

/// One simulated run, reduced to its headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub scenario: String,
    pub seed: u64,
    pub first_death: Option<u64>,
    pub tenth_death: Option<u64>,
    pub last_death: Option<u64>,
    pub total_packets: u64,
}

impl From<&RunSummary> for SummaryRow {
    fn from(run: &RunSummary) -> Self {
        SummaryRow {
            protocol: run.protocol.protocol.name().to_owned(),
            scenario: run.scenario.clone(),
            seed: run.seed,
            first_death: run.first_death_round,
            tenth_death: run.tenth_death_round,
            last_death: run.last_death_round,
            total_packets: run.total_packets_to_bs,
        }
    }
}

/// Median and interquartile range over the runs where a value is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    /// How many runs contributed a value.
    pub defined: usize,
    pub median: Option<f64>,
    pub iqr: Option<f64>,
}

impl Stat {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return Stat {
                defined: 0,
                median: None,
                iqr: None,
            };
        }
        Stat {
            defined: v.len(),
            median: Some(quantile(&v, 0.5)),
            iqr: Some(quantile(&v, 0.75) - quantile(&v, 0.25)),
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    Stat::from_values(values).median
}

/// Statistics over all seeds of one (protocol, scenario) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub protocol: String,
    pub scenario: String,
    pub runs: usize,
    pub first_death: Stat,
    pub tenth_death: Stat,
    pub last_death: Stat,
    /// Last minus first death round, over runs where both happened.
    pub instability: Stat,
    pub total_packets: Stat,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<SummaryRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl ComparisonTable {
    /// Builds the table from raw rows; aggregates are grouped by
    /// (protocol, scenario) in order of first appearance.
    pub fn from_rows(rows: Vec<SummaryRow>) -> Self {
        let mut keys: Vec<(String, String)> = Vec::new();
        for r in &rows {
            let key = (r.protocol.clone(), r.scenario.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let aggregates = keys
            .into_iter()
            .map(|(protocol, scenario)| {
                let group: Vec<&SummaryRow> = rows
                    .iter()
                    .filter(|r| r.protocol == protocol && r.scenario == scenario)
                    .collect();
                let stat = |f: fn(&SummaryRow) -> Option<u64>| {
                    Stat::from_values(group.iter().filter_map(|r| f(r)).map(|v| v as f64))
                };
                AggregateRow {
                    runs: group.len(),
                    first_death: stat(|r| r.first_death),
                    tenth_death: stat(|r| r.tenth_death),
                    last_death: stat(|r| r.last_death),
                    instability: stat(|r| Some(r.last_death? - r.first_death?)),
                    total_packets: stat(|r| Some(r.total_packets)),
                    protocol,
                    scenario,
                }
            })
            .collect();
        ComparisonTable { rows, aggregates }
    }

    pub fn aggregate(&self, protocol: &str, scenario: &str) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.protocol == protocol && a.scenario == scenario)
    }
}

pub fn summarize(runs: &[RunSummary]) -> ComparisonTable {
    ComparisonTable::from_rows(runs.iter().map(SummaryRow::from).collect())
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn cell(s: &Stat) -> String {
            match (s.median, s.iqr) {
                (Some(m), Some(i)) => format!("{m:.0} ({i:.0})"),
                _ => "-".to_owned(),
            }
        }
        writeln!(
            f,
            "{:<10} {:<8} {:>5} {:>16} {:>16} {:>16} {:>20}",
            "scenario",
            "protocol",
            "runs",
            "first death",
            "tenth death",
            "last death",
            "packets to BS"
        )?;
        for a in &self.aggregates {
            writeln!(
                f,
                "{:<10} {:<8} {:>5} {:>16} {:>16} {:>16} {:>20}",
                a.scenario,
                a.protocol,
                a.runs,
                cell(&a.first_death),
                cell(&a.tenth_death),
                cell(&a.last_death),
                cell(&a.total_packets),
            )?;
        }
        write!(f, "median (IQR) over seeds; '-' = not reached")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

fn write_records<T: Serialize>(path: &Path, header: &[&str], records: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(())
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_rounds_csv(per_round: &[RoundMetrics], path: &Path) -> Result<()> {
    write_records(path, &ROUND_HEADER, per_round)
}

pub fn read_rounds_csv(path: &Path) -> Result<Vec<RoundMetrics>> {
    read_records(path)
}

pub fn write_summary_csv(table: &ComparisonTable, path: &Path) -> Result<()> {
    write_records(path, &SUMMARY_HEADER, &table.rows)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_records(path)
}

/// Writes the full run summary as pretty-printed JSON.
pub fn write_run_json(run: &RunSummary, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, run)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_simulation;
    use crate::model::NetworkConfig;
    use crate::protocols::{Protocol, ProtocolKind};

    fn row(first: u64) -> SummaryRow {
        SummaryRow {
            protocol: "deec".into(),
            scenario: "s1".into(),
            seed: first,
            first_death: Some(first),
            tenth_death: Some(first + 5),
            last_death: Some(first + 100),
            total_packets: 1000,
        }
    }

    #[test]
    fn single_row_passthrough() {
        let t = ComparisonTable::from_rows(vec![row(10)]);
        let a = &t.aggregates[0];
        assert_eq!(a.runs, 1);
        assert_eq!(a.first_death.median, Some(10.0));
        assert_eq!(a.instability.median, Some(100.0));
        assert_eq!(a.first_death.iqr, Some(0.0));
    }

    #[test]
    fn identical_rows_have_zero_iqr() {
        let t = ComparisonTable::from_rows(vec![row(10), row(10)]);
        assert_eq!(t.aggregates[0].first_death.iqr, Some(0.0));
        assert_eq!(t.aggregates[0].total_packets.iqr, Some(0.0));
    }

    #[test]
    fn median_of_three() {
        let t = ComparisonTable::from_rows(vec![row(30), row(10), row(20)]);
        assert_eq!(t.aggregates[0].first_death.median, Some(20.0));
        assert_eq!(t.aggregates[0].first_death.iqr, Some(10.0));
        assert_eq!(median([4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(std::iter::empty()), None);
    }

    #[test]
    fn undefined_deaths_are_skipped() {
        let mut r = row(10);
        r.last_death = None;
        let t = ComparisonTable::from_rows(vec![r, row(20)]);
        let a = &t.aggregates[0];
        assert_eq!(a.last_death.defined, 1);
        assert_eq!(a.last_death.median, Some(120.0));
        assert_eq!(a.first_death.defined, 2);
    }

    #[test]
    fn empty_table_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        write_summary_csv(&ComparisonTable::default(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "protocol,scenario,seed,first_death,tenth_death,last_death,total_packets\n"
        );
        assert!(read_summary_csv(&path).unwrap().is_empty());

        let rounds = dir.path().join("rounds.csv");
        write_rounds_csv(&[], &rounds).unwrap();
        assert_eq!(
            std::fs::read_to_string(&rounds).unwrap(),
            "round,alive,dead,ch_count,packets_to_bs,packets_to_ch,total_residual_j\n"
        );
    }

    #[test]
    fn summary_row_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        let mut r = row(7);
        r.tenth_death = None;
        let t = ComparisonTable::from_rows(vec![r]);
        write_summary_csv(&t, &path).unwrap();
        assert_eq!(read_summary_csv(&path).unwrap(), t.rows);
        assert_eq!(
            ComparisonTable::from_rows(read_summary_csv(&path).unwrap()),
            t
        );
    }

    #[test]
    fn rounds_file_has_one_line_per_round_plus_header() {
        let config = NetworkConfig {
            n_nodes: 20,
            e_o: 0.05,
            rng_seed: 3,
            ..NetworkConfig::default()
        };
        let run = run_simulation(&config, ProtocolKind::new(Protocol::Deec)).unwrap();
        let last = run.last_death_round.unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_rounds_csv(&run.per_round, &path).unwrap();
        let lines = std::fs::read_to_string(&path).unwrap().lines().count() as u64;
        assert_eq!(lines, last + 1);
        let back = read_rounds_csv(&path).unwrap();
        assert_eq!(back, run.per_round);
        assert!(back.iter().all(|m| m.alive + m.dead == 20));
    }

    #[test]
    fn json_mirror_uses_summary_field_names() {
        let config = NetworkConfig {
            n_nodes: 5,
            max_rounds: 3,
            ..NetworkConfig::default()
        };
        let run = run_simulation(&config, ProtocolKind::new(Protocol::Edeec)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        write_run_json(&run, &path).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for key in [
            "first_death_round",
            "tenth_death_round",
            "last_death_round",
            "total_packets_to_bs",
            "per_round",
            "seed",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: RunSummary = serde_json::from_value(v).unwrap();
        assert_eq!(back, run);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_metrics_csv_round_trip(
                rows in prop::collection::vec(
                    (1u64..100_000, 0usize..1000, 0usize..1000, 0u64..1_000_000, 0u64..1_000_000, 0.0f64..1e3),
                    0..20,
                )
            ) {
                let per_round: Vec<RoundMetrics> = rows
                    .into_iter()
                    .map(|(round, alive, ch, bs, chp, res)| RoundMetrics {
                        round,
                        alive,
                        dead: 1000 - alive,
                        ch_count: ch,
                        packets_to_bs: bs,
                        packets_to_ch: chp,
                        total_residual: res,
                    })
                    .collect();
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("r.csv");
                write_rounds_csv(&per_round, &path).unwrap();
                prop_assert_eq!(read_rounds_csv(&path).unwrap(), per_round);
            }
        }
    }
}
