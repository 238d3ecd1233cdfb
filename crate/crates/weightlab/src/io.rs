//! Plain-text file formats.
//!
//! * Functions and weights: whitespace-separated reals, row-major over
//!   `(cell, point)`; the length must be `N·M`.
//! * Symbols: one sample per line, either `re` or `re im`, at the
//!   frequencies `−N/2, …, N/2 − 1`.
//! * Sparse collections: one `level j` line per dyadic cube, optionally
//!   followed by `: c₁ c₂ …` listing the witness cells.
//!
//! Blank lines and text after `#` are ignored everywhere. The path `-`
//! reads standard input.

use std::io::Read;
use std::path::Path;

use weightlab_core::lattice::{DyadicGrid, Interval, LatticeFunction, MeasurePoints};
use weightlab_core::operators::SymbolSamples;
use weightlab_core::sparse::SparseCollection;
use weightlab_core::weights::Weight;

use crate::format::real;
use crate::Error;

/// Contents of `path`, or of standard input for `-`.
pub fn read_text(path: &Path) -> Result<String, Error> {
    let io = |source| Error::Io { path: path.display().to_string(), source };
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses a real, accepting `inf` and `-inf`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("not a real number: {s:?}"))
}

pub fn parse_reals(text: &str) -> Result<Vec<f64>, String> {
    content_lines(text)
        .flat_map(|(line, l)| l.split_whitespace().map(move |t| (line, t)))
        .map(|(line, t)| parse_real(t).map_err(|e| format!("line {line}: {e}")))
        .collect()
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), msg: msg.into() }
}

pub fn read_reals(path: &Path) -> Result<Vec<f64>, Error> {
    parse_reals(&read_text(path)?).map_err(|m| parse_err(path, m))
}

/// Grid with `cells` cells, checked against an explicit `--grid-log2`.
pub fn grid_for(cells: usize, grid_log2: Option<u32>, path: &Path) -> Result<DyadicGrid, Error> {
    let grid = DyadicGrid::from_cells(cells).map_err(|_| parse_err(path, format!("{cells} cells is not a power of two")))?;
    match grid_log2 {
        Some(k) if k != grid.level() => {
            Err(parse_err(path, format!("expected 2^{k} cells, found {cells}")))
        }
        _ => Ok(grid),
    }
}

pub fn read_weight(path: &Path, grid_log2: Option<u32>) -> Result<Weight, Error> {
    let values = read_reals(path)?;
    let grid = grid_for(values.len(), grid_log2, path)?;
    Ok(Weight::new(grid, values)?)
}

/// Reads an `N·M` array; `N` is inferred from the length when not given.
pub fn read_lattice(path: &Path, grid_log2: Option<u32>, points: &MeasurePoints) -> Result<LatticeFunction, Error> {
    let values = read_reals(path)?;
    let m = points.len();
    if values.len() % m != 0 {
        return Err(parse_err(path, format!("{} values do not split into {m} points per cell", values.len())));
    }
    let grid = grid_for(values.len() / m, grid_log2, path)?;
    Ok(LatticeFunction::new(grid, points.clone(), values)?)
}

pub fn parse_symbol(text: &str) -> Result<SymbolSamples, String> {
    let mut values = Vec::new();
    for (line, l) in content_lines(text) {
        let parts: Vec<&str> = l.split_whitespace().collect();
        let at = |e: String| format!("line {line}: {e}");
        let v = match parts.as_slice() {
            [re] => weightlab_core::operators::Complex64::new(parse_real(re).map_err(at)?, 0.0),
            [re, im] => weightlab_core::operators::Complex64::new(parse_real(re).map_err(at)?, parse_real(im).map_err(at)?),
            _ => return Err(at("expected `re` or `re im`".into())),
        };
        values.push(v);
    }
    SymbolSamples::new(values).map_err(|e| e.to_string())
}

pub fn read_symbol(path: &Path) -> Result<SymbolSamples, Error> {
    parse_symbol(&read_text(path)?).map_err(|m| parse_err(path, m))
}

/// Parses `level j` lines into dyadic intervals of `grid`.
pub fn parse_collection(text: &str, grid: DyadicGrid) -> Result<Vec<Interval>, String> {
    let mut cubes = Vec::new();
    for (line, l) in content_lines(text) {
        let head = l.split(':').next().unwrap_or("");
        let parts: Vec<&str> = head.split_whitespace().collect();
        let at = |e: &str| format!("line {line}: {e}");
        let [level, index] = parts.as_slice() else {
            return Err(at("expected `level j`"));
        };
        let level: u32 = level.parse().map_err(|_| at("bad level"))?;
        let index: usize = index.parse().map_err(|_| at("bad index"))?;
        cubes.push(Interval::dyadic(grid, level, index).map_err(|e| at(&e.to_string()))?);
    }
    Ok(cubes)
}

pub fn read_collection(path: &Path, grid: DyadicGrid) -> Result<Vec<Interval>, Error> {
    parse_collection(&read_text(path)?, grid).map_err(|m| parse_err(path, m))
}

/// `level j` lines, with `: cells` appended when witnesses are present.
pub fn format_collection(c: &SparseCollection) -> String {
    let mut out = String::new();
    for (i, q) in c.cubes.iter().enumerate() {
        let (level, index) = q.dyadic_coords(c.grid).expect("collections hold dyadic cubes");
        out.push_str(&format!("{level} {index}"));
        if let Some(w) = &c.witnesses {
            out.push(':');
            for cell in &w[i] {
                out.push_str(&format!(" {cell}"));
            }
        }
        out.push('\n');
    }
    out
}

/// One line per cell holding the `M` point values.
pub fn format_lattice(f: &LatticeFunction) -> String {
    let m = f.points().len();
    let mut out = String::new();
    for row in f.values().chunks(m) {
        let line: Vec<String> = row.iter().map(|&v| real(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
