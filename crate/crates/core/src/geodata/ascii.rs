//! ESRI-style ASCII grid reader and writer.
//!
//! ```text
//! ncols        3
//! nrows        2
//! xllcorner    0
//! yllcorner    0
//! cellsize     240
//! NODATA_value -9999
//! 1 2 3
//! 4 5 6
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::GridMap;
use crate::error::{Error, Result};
use crate::num::Real;

const HEADER_KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

pub fn load_ascii_grid<T: Real>(path: impl AsRef<Path>) -> Result<GridMap<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, &path.display().to_string())
}

/// Parses grid text; `source` only labels error messages.
pub fn parse_ascii_grid<T: Real>(text: &str, source: &str) -> Result<GridMap<T>> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };

    let mut header = [None::<f64>; 6];
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    for _ in 0..HEADER_KEYS.len() {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| err(text.lines().count(), "truncated header".into()))?;
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap_or_default().to_ascii_lowercase();
        let slot = HEADER_KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| err(ln, format!("unexpected header key `{key}`")))?;
        if header[slot].is_some() {
            return Err(err(ln, format!("duplicate header key `{key}`")));
        }
        let raw = tokens
            .next()
            .ok_or_else(|| err(ln, format!("missing value for `{key}`")))?;
        let v: f64 = raw
            .parse()
            .map_err(|_| err(ln, format!("non-numeric value `{raw}` for `{key}`")))?;
        if tokens.next().is_some() {
            return Err(err(ln, format!("trailing tokens after `{key}`")));
        }
        header[slot] = Some(v);
    }
    let [ncols, nrows, xll, yll, cellsize, nodata] = header.map(|v| v.unwrap());
    let as_count = |v: f64, key: &str| -> Result<usize> {
        if v.fract() != 0.0 || v < 1.0 {
            return Err(err(0, format!("`{key}` must be a positive integer, got {v}")));
        }
        Ok(v as usize)
    };
    let ncols = as_count(ncols, "ncols")?;
    let nrows = as_count(nrows, "nrows")?;

    let mut values = Vec::with_capacity(ncols * nrows);
    let mut rows_read = 0;
    for (ln, line) in lines {
        if rows_read == nrows {
            return Err(err(ln, format!("more than {nrows} data rows")));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(ln, format!("non-numeric token `{tok}`")))?;
            values.push(T::lit(v));
        }
        let n = values.len() - before;
        if n != ncols {
            return Err(err(ln, format!("row has {n} values, header says ncols={ncols}")));
        }
        rows_read += 1;
    }
    if rows_read != nrows {
        return Err(err(
            text.lines().count(),
            format!("found {rows_read} data rows, header says nrows={nrows}"),
        ));
    }

    GridMap::new(
        nrows,
        ncols,
        T::lit(cellsize),
        (T::lit(xll), T::lit(yll)),
        T::lit(nodata),
        values,
    )
    .map_err(|e| err(0, e.to_string()))
}

/// Renders a grid. Values use the shortest representation that parses
/// back to the same `f64`, so the format round-trips losslessly.
pub fn format_ascii_grid<T: Real>(grid: &GridMap<T>) -> String {
    let mut out = String::with_capacity(grid.values.len() * 8 + 128);
    let _ = writeln!(out, "ncols {}", grid.n_cols);
    let _ = writeln!(out, "nrows {}", grid.n_rows);
    let _ = writeln!(out, "xllcorner {}", grid.origin.0.as_f64());
    let _ = writeln!(out, "yllcorner {}", grid.origin.1.as_f64());
    let _ = writeln!(out, "cellsize {}", grid.cell_size.as_f64());
    let _ = writeln!(out, "NODATA_value {}", grid.nodata.as_f64());
    for row in grid.values.chunks(grid.n_cols) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{}", v.as_f64());
        }
        out.push('\n');
    }
    out
}

pub fn write_ascii_grid<T: Real>(grid: &GridMap<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_ascii_grid(grid)).map_err(|e| Error::io(path, e))
}
