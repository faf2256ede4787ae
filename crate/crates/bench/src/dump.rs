//! Field output: CSV for values, binary PPM for space-time pictures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use swept_core::engines::Field;

use crate::error::BenchError;

fn column_names(arity: usize) -> Vec<String> {
    match arity {
        1 => vec!["u".into()],
        3 => vec!["rho".into(), "mom".into(), "ene".into()],
        _ => (0..arity).map(|k| format!("q{k}")).collect(),
    }
}

/// Writes `level,i,x,<variables>` rows. Values use the shortest decimal
/// form that parses back to the same bits.
pub fn write_field_csv(
    path: &Path,
    field: &Field,
    window_start: usize,
    dx: f64,
) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["level".to_string(), "i".into(), "x".into()];
    header.extend(column_names(field.arity));
    w.write_record(&header)?;
    for j in 0..field.points() {
        let i = window_start + j;
        let mut row = vec![field.level.to_string(), i.to_string(), (i as f64 * dx).to_string()];
        row.extend(field.point(j).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_field_csv`].
pub fn read_field_csv(path: &Path) -> Result<Field, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let arity = r.headers()?.len().saturating_sub(3);
    if arity == 0 {
        return Err(BenchError::Spec("field csv has no variable columns".into()));
    }
    let mut level = None;
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse_err = |what: &str| BenchError::Spec(format!("bad {what} in field csv"));
        let l: u64 = rec[0].parse().map_err(|_| parse_err("level"))?;
        if *level.get_or_insert(l) != l {
            return Err(parse_err("mixed levels"));
        }
        for k in 0..arity {
            values.push(rec[3 + k].parse::<f64>().map_err(|_| parse_err("value"))?);
        }
    }
    Ok(Field {
        level: level.unwrap_or(0),
        arity,
        values,
    })
}

/// Writes a P6 image with one row per snapshot and one column per point.
///
/// Fields of arity 3 or more color the first three variables red, green
/// and blue; others are grayscale in the first variable. Each channel is
/// min-max normalized over the whole history.
pub fn write_history_ppm(path: &Path, history: &[Field]) -> Result<(), BenchError> {
    let first = history
        .first()
        .ok_or_else(|| BenchError::Spec("no snapshots to draw".into()))?;
    let width = first.points();
    let rgb = first.arity >= 3;
    let channels: Vec<usize> = if rgb { vec![0, 1, 2] } else { vec![0, 0, 0] };

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for f in history {
        if f.points() != width || f.arity != first.arity {
            return Err(BenchError::Spec("snapshots differ in shape".into()));
        }
        for i in 0..width {
            for (c, &k) in channels.iter().enumerate() {
                let v = f.point(i)[k];
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }
    }

    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P6\n{} {}\n255\n", width, history.len())?;
    // latest time on top
    for f in history.iter().rev() {
        for i in 0..width {
            let mut px = [0u8; 3];
            for (c, &k) in channels.iter().enumerate() {
                let span = hi[c] - lo[c];
                let t = if span > 0.0 {
                    (f.point(i)[k] - lo[c]) / span
                } else {
                    0.5
                };
                px[c] = (t * 255.0).round().clamp(0.0, 255.0) as u8;
            }
            out.write_all(&px)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Decoded P6 image: width, height and RGB bytes.
pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<u8>), BenchError> {
    let bytes = std::fs::read(path)?;
    let bad = || BenchError::Spec("not a P6 image".into());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_string());
    }
    if fields[0] != "P6" || fields[3] != "255" {
        return Err(bad());
    }
    let width: usize = fields[1].parse().map_err(|_| bad())?;
    let height: usize = fields[2].parse().map_err(|_| bad())?;
    let data = bytes.get(pos + 1..).ok_or_else(bad)?.to_vec();
    if data.len() != width * height * 3 {
        return Err(bad());
    }
    Ok((width, height, data))
}
