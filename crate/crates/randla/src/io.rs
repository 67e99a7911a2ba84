//! Matrix Market and headerless CSV readers/writers, plus a plain edge-list
//! reader for weighted graphs. Values are written with 17 significant digits
//! so every f64 round-trips exactly.

use crate::error::{Error, Result};
use crate::leverage::WeightedGraph;
use crate::matrix::DenseMatrix;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Write in Matrix Market array format.
pub fn write_matrix_market<W: Write>(w: &mut W, a: &DenseMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    // array format is column-major
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{}", fmt_f64(a.get(i, j)))?;
        }
    }
    Ok(())
}

/// Read Matrix Market array or coordinate format (real, general or
/// symmetric) into a dense matrix.
pub fn read_matrix_market<R: Read>(r: R) -> Result<DenseMatrix> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix market file".into()))??;
    let header_lc = header.to_lowercase();
    if !header_lc.starts_with("%%matrixmarket matrix") {
        return Err(Error::Parse(format!("bad matrix market header: {header}")));
    }
    let coordinate = header_lc.contains("coordinate");
    if !header_lc.contains("real") && !header_lc.contains("integer") {
        return Err(Error::Parse("only real-valued matrices are supported".into()));
    }
    let symmetric = header_lc.contains("symmetric");

    let mut values: Vec<f64> = Vec::new();
    let mut dims: Option<(usize, usize, usize)> = None;
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if dims.is_none() {
            let m: usize = parse_tok(toks.first(), "rows")?;
            let n: usize = parse_tok(toks.get(1), "cols")?;
            let nnz = if coordinate { parse_tok(toks.get(2), "nnz")? } else { 0 };
            dims = Some((m, n, nnz));
            continue;
        }
        if coordinate {
            let i: usize = parse_tok(toks.first(), "row index")?;
            let j: usize = parse_tok(toks.get(1), "col index")?;
            let v: f64 = parse_tok(toks.get(2), "value")?;
            values.push(i as f64);
            values.push(j as f64);
            values.push(v);
        } else {
            for tok in toks {
                values.push(tok.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
            }
        }
    }

    let (m, n, nnz) = dims.ok_or_else(|| Error::Parse("missing size line".into()))?;
    if coordinate {
        if values.len() != 3 * nnz {
            return Err(Error::Parse(format!(
                "expected {nnz} coordinate entries, got {}",
                values.len() / 3
            )));
        }
        let mut out = DenseMatrix::zeros(m, n);
        for t in values.chunks_exact(3) {
            let (i, j, v) = (t[0] as usize, t[1] as usize, t[2]);
            if i < 1 || i > m || j < 1 || j > n {
                return Err(Error::Parse(format!("coordinate ({i}, {j}) out of range")));
            }
            out.set(i - 1, j - 1, v);
            if symmetric && i != j {
                out.set(j - 1, i - 1, v);
            }
        }
        DenseMatrix::new(m, n, out.entries().to_vec())
    } else {
        if values.len() != m * n {
            return Err(Error::Parse(format!(
                "expected {} array entries, got {}",
                m * n,
                values.len()
            )));
        }
        // stored column-major
        let mut entries = vec![0.0; m * n];
        for (idx, &v) in values.iter().enumerate() {
            let (j, i) = (idx / m, idx % m);
            entries[i * n + j] = v;
        }
        DenseMatrix::new(m, n, entries)
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

/// Write headerless CSV, one row per line.
pub fn write_csv<W: Write>(w: &mut W, a: &DenseMatrix) -> Result<()> {
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Read headerless CSV. Every row must have the same number of fields.
pub fn read_csv<R: Read>(r: R) -> Result<DenseMatrix> {
    let reader = BufReader::new(r);
    let mut entries = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {c}",
                    rows + 1,
                    fields.len()
                )))
            }
            _ => {}
        }
        for f in fields {
            entries.push(f.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("empty csv".into()))?;
    DenseMatrix::new(rows, cols, entries)
}

/// Read an edge list, one `u v [weight]` triple per line (0-based node ids,
/// weight defaults to 1). Node count is one past the largest id seen.
pub fn read_edge_list<R: Read>(r: R) -> Result<WeightedGraph> {
    let reader = BufReader::new(r);
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(Error::Parse(format!("bad edge line: {t}")));
        }
        let u: usize = parse_tok(toks.first(), "node id")?;
        let v: usize = parse_tok(toks.get(1), "node id")?;
        let w: f64 = if toks.len() == 3 { parse_tok(toks.get(2), "weight")? } else { 1.0 };
        max_node = max_node.max(u).max(v);
        edges.push((u, v, w));
    }
    if edges.is_empty() {
        return Err(Error::Parse("edge list contains no edges".into()));
    }
    WeightedGraph::new(max_node + 1, edges)
}

/// Load a matrix, dispatching on the file extension (`.mtx` / `.mm` for
/// Matrix Market, anything else as CSV).
pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    let file = std::fs::File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") | Some("mm") => read_matrix_market(file),
        _ => read_csv(file),
    }
}

/// Save a matrix, dispatching on the file extension as in [`load_matrix`].
pub fn save_matrix(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") | Some("mm") => write_matrix_market(&mut file, a),
        _ => write_csv(&mut file, a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_draws, SeedSpec};

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let draws = normal_draws(&mut SeedSpec::from(seed).rng(), m * n);
        DenseMatrix::from_parts(m, n, draws)
    }

    #[test]
    fn matrix_market_round_trip_is_exact() {
        let a = random_matrix(5, 3, 42);
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &a).unwrap();
        let b = read_matrix_market(&buf[..]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let a = random_matrix(4, 6, 7);
        let mut buf = Vec::new();
        write_csv(&mut buf, &a).unwrap();
        let b = read_csv(&buf[..]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coordinate_format_fills_missing_entries_with_zero() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n3 3 2\n1 1 2.5\n3 2 -1.0\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 0), 2.5);
        assert_eq!(a.get(2, 1), -1.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn symmetric_coordinate_mirrors() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 3.0\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.get(0, 1), 3.0);
    }

    #[test]
    fn ragged_csv_is_rejected() {
        assert!(read_csv("1.0,2.0\n3.0\n".as_bytes()).is_err());
    }

    #[test]
    fn edge_list_parses_with_default_weight() {
        let g = read_edge_list("0 1\n1 2 2.5\n".as_bytes()).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.edges()[1], (1, 2, 2.5));
        assert_eq!(g.edges()[0], (0, 1, 1.0));
    }
}
