//! CSV and JSON output of sweep results.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{SweepPoint, SweepResult};
use crate::error::Result;

pub const CSV_COLUMNS: [&str; 7] = [
    "snr_db",
    "drops",
    "uncoded_ber",
    "coded_ber",
    "bler",
    "throughput",
    "n_d",
];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    snr_db: f64,
    drops: u64,
    uncoded_ber: f64,
    coded_ber: f64,
    bler: f64,
    throughput: f64,
    n_d: usize,
}

/// One row per SNR point. An empty sweep still writes the header.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for p in &result.points {
        w.serialize(CsvRow {
            snr_db: p.snr_db,
            drops: p.drops,
            uncoded_ber: p.uncoded_ber,
            coded_ber: p.coded_ber,
            bler: p.bler,
            throughput: p.throughput,
            n_d: p.n_d,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepPoint>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            Ok(SweepPoint {
                snr_db: row.snr_db,
                drops: row.drops,
                uncoded_ber: row.uncoded_ber,
                coded_ber: row.coded_ber,
                bler: row.bler,
                throughput: row.throughput,
                n_d: row.n_d,
                iteration_coded_ber: Vec::new(),
            })
        })
        .collect()
}

pub fn write_json<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, result)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<SweepResult> {
    Ok(serde_json::from_reader(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ReceiverKind;
    use crate::scenario::ScenarioConfig;

    fn sample() -> SweepResult {
        SweepResult {
            scenario: ScenarioConfig::default(),
            receiver: ReceiverKind::Iterative,
            power_ratio: Some(0.14),
            schedule: Some("12x14,6x14".into()),
            build: "abc".into(),
            points: vec![
                SweepPoint {
                    snr_db: 0.0,
                    drops: 100,
                    uncoded_ber: 0.125,
                    coded_ber: 0.0625,
                    bler: 0.5,
                    throughput: 1008.0,
                    n_d: 1008,
                    iteration_coded_ber: vec![0.1, 0.0625],
                },
                SweepPoint {
                    snr_db: 2.5,
                    drops: 100,
                    uncoded_ber: 0.01,
                    coded_ber: 0.0,
                    bler: 0.0,
                    throughput: 2016.0,
                    n_d: 1008,
                    iteration_coded_ber: vec![0.0, 0.0],
                },
            ],
        }
    }

    #[test]
    fn csv_matches_golden() {
        let mut buf = Vec::new();
        write_csv(&sample(), &mut buf).unwrap();
        let golden = "snr_db,drops,uncoded_ber,coded_ber,bler,throughput,n_d\n\
                      0.0,100,0.125,0.0625,0.5,1008.0,1008\n\
                      2.5,100,0.01,0.0,0.0,2016.0,1008\n";
        assert_eq!(String::from_utf8(buf).unwrap(), golden);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut r = sample();
        r.points.clear();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            format!("{}\n", CSV_COLUMNS.join(","))
        );
        assert!(read_csv(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn json_csv_json_preserves_numeric_fields() {
        let mut r = sample();
        r.points[0].uncoded_ber = 1.0 / 3.0;
        r.points[1].throughput = 2016.0 * (1.0 - 1.0 / 7.0);
        let mut json = Vec::new();
        write_json(&r, &mut json).unwrap();
        let from_json = read_json(json.as_slice()).unwrap();
        let mut csv = Vec::new();
        write_csv(&from_json, &mut csv).unwrap();
        let mut back = from_json.clone();
        back.points = read_csv(csv.as_slice()).unwrap();
        for (a, b) in back.points.iter().zip(&r.points) {
            assert_eq!(
                (
                    a.snr_db,
                    a.drops,
                    a.uncoded_ber,
                    a.coded_ber,
                    a.bler,
                    a.throughput,
                    a.n_d
                ),
                (
                    b.snr_db,
                    b.drops,
                    b.uncoded_ber,
                    b.coded_ber,
                    b.bler,
                    b.throughput,
                    b.n_d
                )
            );
            assert!(a.iteration_coded_ber.is_empty());
        }
        let mut again = Vec::new();
        write_json(&back, &mut again).unwrap();
        assert_eq!(read_json(again.as_slice()).unwrap().points[0].uncoded_ber, 1.0 / 3.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut r = sample();
        r.points[0].uncoded_ber = 1.0 / 3.0;
        let mut buf = Vec::new();
        write_json(&r, &mut buf).unwrap();
        assert_eq!(read_json(buf.as_slice()).unwrap(), r);
    }
}
