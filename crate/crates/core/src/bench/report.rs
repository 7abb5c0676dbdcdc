use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::bench::{BenchRecord, Op};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidArgument(format!(
                "unknown report format '{s}'"
            ))),
        }
    }
}

pub fn emit_report(records: &[BenchRecord], format: ReportFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to report".into()));
    }
    match format {
        ReportFormat::Csv => to_csv(records),
        ReportFormat::Markdown => Ok(to_markdown(records)),
    }
}

fn to_csv(records: &[BenchRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_records(text: &str) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != super::CSV_HEADER {
        return Err(Error::Format(format!(
            "unexpected header '{}'",
            header.join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Average over distinct params of each index's per-param mean latency.
pub fn mean_of_means(records: &[BenchRecord], op: Op) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.op == op) {
        let e = acc.entry(r.index.clone()).or_default();
        e.0 += r.mean_ns;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

fn ratio(value: f64, base: Option<f64>) -> String {
    match base {
        Some(b) if b > 0.0 => format!("{:.2}x", value / b),
        _ => "-".into(),
    }
}

fn to_markdown(records: &[BenchRecord]) -> String {
    let mut datasets: Vec<(String, usize, usize)> = Vec::new();
    for r in records {
        let key = (r.dist.clone(), r.n, r.d);
        if !datasets.contains(&key) {
            datasets.push(key);
        }
    }
    let mut out = String::new();
    for (dist, n, d) in datasets {
        let rows: Vec<&BenchRecord> = records
            .iter()
            .filter(|r| r.dist == dist && r.n == n && r.d == d)
            .collect();
        let baseline = |r: &BenchRecord| {
            rows.iter()
                .find(|b| {
                    b.index == "str" && b.op == r.op && (r.op == Op::Build || b.param == r.param)
                })
                .copied()
        };
        let _ = writeln!(out, "### {dist}, n = {n}, d = {d}\n");
        out.push_str("| index | op | param | mean ns | p50 ns | p99 ns | results | metadata bytes | time vs STR | memory vs STR |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
        for r in &rows {
            let base = baseline(r);
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.0} | {} | {} | {} | {} | {} | {} |",
                r.index,
                r.op,
                r.param,
                r.mean_ns,
                r.p50_ns,
                r.p99_ns,
                r.result_count,
                r.metadata_bytes,
                ratio(r.mean_ns, base.map(|b| b.mean_ns)),
                ratio(
                    r.metadata_bytes as f64,
                    base.map(|b| b.metadata_bytes as f64)
                ),
            );
        }
        out.push('\n');
    }
    out
}
