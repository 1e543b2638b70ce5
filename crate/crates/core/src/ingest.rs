//! Data ingestion and the text formats: aggregation of raw high-frequency
//! streams into 10-minute statistics, and headered comma-separated files
//! (`#`-prefixed metadata lines) for records, tables and results.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::extreme::QuantileResult;
use crate::{Error, Result, TenMinRecord};

/// One raw measurement: timestamp in seconds, instantaneous wind speed,
/// instantaneous load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub t: f64,
    pub v: f64,
    pub y: f64,
}

/// Aggregation output: the complete blocks and how many trailing blocks
/// were dropped as incomplete.
#[derive(Debug, Clone)]
pub struct AggregateOutcome {
    pub records: Vec<TenMinRecord>,
    pub dropped_blocks: usize,
}

/// Reduce a raw stream to per-block statistics: sample mean and sample
/// standard deviation (N-1 denominator) of the speed, maximum of the load.
/// Blocks are `floor(t / block_len)`; the trailing block cannot be known
/// complete and is dropped with its count reported. Timestamps must be
/// non-decreasing.
pub fn aggregate_raw(
    samples: impl IntoIterator<Item = RawSample>,
    block_len: f64,
) -> Result<AggregateOutcome> {
    if block_len <= 0.0 {
        return Err(Error::invalid_argument("block length must be positive"));
    }
    let mut records = Vec::new();
    let mut current_block: Option<i64> = None;
    let mut prev_t = f64::NEG_INFINITY;
    let mut vs: Vec<f64> = Vec::new();
    let mut y_max = f64::NEG_INFINITY;
    let mut blocks_seen = 0usize;

    let flush = |vs: &mut Vec<f64>, y_max: f64, records: &mut Vec<TenMinRecord>| {
        let n = vs.len() as f64;
        let mean = vs.iter().sum::<f64>() / n;
        let s = if vs.len() >= 2 {
            (vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        records.push(TenMinRecord {
            v: mean,
            s,
            y: y_max,
        });
        vs.clear();
    };

    for (pos, sample) in samples.into_iter().enumerate() {
        let line = pos + 1;
        if !(sample.t.is_finite() && sample.v.is_finite() && sample.y.is_finite()) {
            return Err(Error::Ingest {
                line,
                msg: format!(
                    "non-finite sample ({}, {}, {})",
                    sample.t, sample.v, sample.y
                ),
            });
        }
        if sample.t < prev_t {
            return Err(Error::Ingest {
                line,
                msg: format!("timestamp {} goes backwards (previous {prev_t})", sample.t),
            });
        }
        prev_t = sample.t;
        let block = (sample.t / block_len).floor() as i64;
        match current_block {
            Some(b) if b == block => {}
            Some(_) => {
                blocks_seen += 1;
                flush(&mut vs, y_max, &mut records);
                y_max = f64::NEG_INFINITY;
                current_block = Some(block);
            }
            None => current_block = Some(block),
        }
        vs.push(sample.v);
        if sample.y > y_max {
            y_max = sample.y;
        }
    }
    // the trailing block is incomplete by construction
    let dropped_blocks = if current_block.is_some() {
        blocks_seen += 1;
        1
    } else {
        0
    };
    let _ = blocks_seen;
    vs.clear();
    Ok(AggregateOutcome {
        records,
        dropped_blocks,
    })
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Ingest {
        line,
        msg: format!("cannot parse '{field}' as a number"),
    })
}

/// Read a raw `t,v,y` stream (header required, `#` lines ignored).
pub fn read_raw_samples(reader: impl Read) -> Result<Vec<RawSample>> {
    let reader = BufReader::new(reader);
    let mut out = Vec::new();
    let mut header_seen = false;
    for (pos, line) in reader.lines().enumerate() {
        let line_no = pos + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if trimmed != "t,v,y" {
                return Err(Error::Ingest {
                    line: line_no,
                    msg: format!("expected header 't,v,y', got '{trimmed}'"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Ingest {
                line: line_no,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        out.push(RawSample {
            t: parse_f64(fields[0], line_no)?,
            v: parse_f64(fields[1], line_no)?,
            y: parse_f64(fields[2], line_no)?,
        });
    }
    Ok(out)
}

fn write_metadata(w: &mut impl Write, metadata: &[(String, String)]) -> Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// Write the 10-minute record format: metadata lines, `v,s,y` header, one
/// row per record.
pub fn write_records(
    w: &mut impl Write,
    records: &[TenMinRecord],
    metadata: &[(String, String)],
) -> Result<()> {
    write_metadata(w, metadata)?;
    writeln!(w, "v,s,y")?;
    for r in records {
        writeln!(w, "{},{},{}", r.v, r.s, r.y)?;
    }
    Ok(())
}

/// `(key, value)` metadata pairs carried in a file header.
pub type Metadata = Vec<(String, String)>;

/// Read the 10-minute record format, returning the records and metadata.
pub fn read_records(reader: impl Read) -> Result<(Vec<TenMinRecord>, Metadata)> {
    let reader = BufReader::new(reader);
    let mut records = Vec::new();
    let mut metadata = Vec::new();
    let mut header_seen = false;
    for (pos, line) in reader.lines().enumerate() {
        let line_no = pos + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if !header_seen {
            header_seen = true;
            if trimmed != "v,s,y" {
                return Err(Error::Ingest {
                    line: line_no,
                    msg: format!("expected header 'v,s,y', got '{trimmed}'"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Ingest {
                line: line_no,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let record = TenMinRecord::new(
            parse_f64(fields[0], line_no)?,
            parse_f64(fields[1], line_no)?,
            parse_f64(fields[2], line_no)?,
        )
        .map_err(|e| Error::Ingest {
            line: line_no,
            msg: e.to_string(),
        })?;
        records.push(record);
    }
    if !header_seen {
        return Err(Error::Ingest {
            line: 0,
            msg: "no 'v,s,y' header found".into(),
        });
    }
    Ok((records, metadata))
}

/// Write a generic numeric table with metadata and a header row.
pub fn write_table(
    w: &mut impl Write,
    header: &[&str],
    rows: &[Vec<f64>],
    metadata: &[(String, String)],
) -> Result<()> {
    write_metadata(w, metadata)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Write the key-value result file for one extreme-load summary.
pub fn write_quantile_result(
    w: &mut impl Write,
    result: &QuantileResult,
    metadata: &[(String, String)],
) -> Result<()> {
    write_metadata(w, metadata)?;
    writeln!(w, "key,value")?;
    writeln!(w, "t_years,{}", result.t_years)?;
    writeln!(w, "p_t,{}", result.p_t)?;
    writeln!(w, "mean,{}", result.mean)?;
    writeln!(w, "median,{}", result.median)?;
    writeln!(w, "ci_lower,{}", result.ci_lower)?;
    writeln!(w, "ci_upper,{}", result.ci_upper)?;
    writeln!(w, "n_draws,{}", result.draws.len())?;
    writeln!(w, "warn_extreme_rank,{}", u8::from(result.warn_extreme))?;
    Ok(())
}

/// Write the raw extreme-load draws behind a summary.
pub fn write_quantile_draws(
    w: &mut impl Write,
    result: &QuantileResult,
    metadata: &[(String, String)],
) -> Result<()> {
    write_metadata(w, metadata)?;
    writeln!(w, "draw")?;
    for d in &result.draws {
        writeln!(w, "{d}")?;
    }
    Ok(())
}

/// Atomically write a file: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = path.to_path_buf();
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid_argument("path has no file name"))?
        .to_string_lossy()
        .to_string();
    tmp.set_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
