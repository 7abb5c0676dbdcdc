use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Dataset, KnnQuery, Point, RangeBox};
use crate::workload::{KnnWorkload, RangeQuery, RangeWorkload};

pub const DATASET_MAGIC: &[u8; 8] = b"MDLBENCH";
pub const DATASET_HEADER_BYTES: usize = 32;

/// Writes the binary dataset format: magic, `n`, `d`, a reserved zero word,
/// then the coordinates row-major, all little-endian.
pub fn write_dataset<W: Write>(ds: &Dataset, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    w.write_all(&(ds.dim() as u64).to_le_bytes())?;
    w.write_all(&0u64.to_le_bytes())?;
    for x in ds.as_flat() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut r = BufReader::new(r);
    let mut header = [0u8; DATASET_HEADER_BYTES];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("file shorter than the dataset header".into()))?;
    if &header[..8] != DATASET_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let word = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().expect("8 bytes"));
    let (n, d) = (word(8), word(16));
    if d == 0 {
        return Err(Error::Format("zero dimensions".into()));
    }
    let values = n
        .checked_mul(d)
        .and_then(|v| usize::try_from(v).ok())
        .filter(|v| v.checked_mul(8).is_some())
        .ok_or_else(|| Error::Format(format!("{n} x {d} coordinates overflow")))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != values * 8 {
        return Err(Error::Format(format!(
            "expected {} coordinate bytes, found {}",
            values * 8,
            body.len()
        )));
    }
    let coords = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Dataset::from_flat(d as usize, coords)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(ds, File::create(path)?)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}

/// One point per CSV row. A first row that does not parse as numbers is
/// taken as a header.
pub fn load_csv_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut dim = None;
    let mut coords = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match row {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Format(format!("row {}: {e}", i + 1))),
        };
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                })
            }
            _ => {}
        }
        coords.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::Format("no data rows".into()))?;
    Dataset::from_flat(dim, coords)
}

fn parse_field(s: &str, row: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|e| Error::Format(format!("row {row}: '{s}': {e}")))
}

/// CSV with header `lo_0..lo_{d-1},hi_0..hi_{d-1},selectivity`.
pub fn write_range_workload<W: Write>(wl: &RangeWorkload, w: W) -> Result<()> {
    let d = wl.dim();
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = (0..d)
        .map(|j| format!("lo_{j}"))
        .chain((0..d).map(|j| format!("hi_{j}")))
        .chain(std::iter::once("selectivity".to_string()))
        .collect();
    out.write_record(&header)?;
    for q in wl.queries() {
        let row: Vec<String> = q
            .range
            .lo()
            .iter()
            .chain(q.range.hi())
            .chain(std::iter::once(&q.selectivity))
            .map(f64::to_string)
            .collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_range_workload<R: Read>(r: R) -> Result<RangeWorkload> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    let cols = header.len();
    if cols < 3
        || cols % 2 == 0
        || &header[cols - 1] != "selectivity"
        || !header[0].starts_with("lo_")
    {
        return Err(Error::Format("not a range workload header".into()));
    }
    let d = (cols - 1) / 2;
    let mut queries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| parse_field(s, i + 1))
            .collect::<Result<Vec<_>>>()?;
        let range = RangeBox::new(
            Point::new(vals[..d].to_vec())?,
            Point::new(vals[d..2 * d].to_vec())?,
        )?;
        queries.push(RangeQuery {
            range,
            selectivity: vals[2 * d],
        });
    }
    RangeWorkload::new(d, queries)
}

/// CSV with header `q_0..q_{d-1},k`.
pub fn write_knn_workload<W: Write>(wl: &KnnWorkload, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = (0..wl.dim())
        .map(|j| format!("q_{j}"))
        .chain(std::iter::once("k".to_string()))
        .collect();
    out.write_record(&header)?;
    for q in wl.queries() {
        let row: Vec<String> = q
            .point()
            .iter()
            .map(f64::to_string)
            .chain(std::iter::once(q.k().to_string()))
            .collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_knn_workload<R: Read>(r: R) -> Result<KnnWorkload> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    let cols = header.len();
    if cols < 2 || &header[cols - 1] != "k" || !header[0].starts_with("q_") {
        return Err(Error::Format("not a knn workload header".into()));
    }
    let d = cols - 1;
    let mut queries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let p = (0..d)
            .map(|j| parse_field(&rec[j], i + 1))
            .collect::<Result<Vec<_>>>()?;
        let k: usize = rec[d]
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("row {}: k: {e}", i + 1)))?;
        queries.push(KnnQuery::new(Point::new(p)?, k)?);
    }
    KnnWorkload::new(d, queries)
}
