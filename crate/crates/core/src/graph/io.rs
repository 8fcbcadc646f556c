//! Plain-text graph files.
//!
//! * edges: one `i j` pair of 0-based node indices per line
//! * features: header `N C`, then `node feature value` triplets; or header
//!   `DENSE N C` followed by `N` rows of `C` values
//! * labels: `N` lines, one integer class id each
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::linalg::DenseMatrix;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} `{tok}`")))
}

/// Loads a graph from edge, feature and optional label files. The node
/// count comes from the feature header.
pub fn load_graph(
    edges_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<Graph> {
    let features = read_features(features_path.as_ref())?;
    let n = features.rows();
    let edges = read_edges(edges_path.as_ref())?;
    if let Some((i, j)) = edges.iter().copied().find(|&(i, j)| i >= n || j >= n) {
        return Err(Error::Validation(format!(
            "{}: edge ({i}, {j}) references a node outside 0..{n}",
            edges_path.as_ref().display()
        )));
    }
    let labels = labels_path.map(read_labels).transpose()?;
    Graph::from_edges(n, edges, features, labels)
}

pub fn read_edges(path: &Path) -> Result<Vec<Edge>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (ln, line) in content_lines(&text) {
        let mut toks = line.split_whitespace();
        let i = field(path, ln, toks.next(), "source node")?;
        let j = field(path, ln, toks.next(), "target node")?;
        if toks.next().is_some() {
            return Err(parse_err(path, ln, "expected exactly two node indices"));
        }
        edges.push((i, j));
    }
    Ok(edges)
}

pub fn read_features(path: &Path) -> Result<DenseMatrix> {
    let text = read(path)?;
    let mut lines = content_lines(&text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let mut toks = header.split_whitespace().peekable();
    let dense = toks.peek() == Some(&"DENSE");
    if dense {
        toks.next();
    }
    let n: usize = field(path, hl, toks.next(), "node count")?;
    let c: usize = field(path, hl, toks.next(), "feature count")?;
    if toks.next().is_some() {
        return Err(parse_err(path, hl, "header has trailing fields"));
    }

    let mut x = DenseMatrix::zeros(n, c);
    if dense {
        let mut row = 0;
        for (ln, line) in lines {
            if row >= n {
                return Err(parse_err(path, ln, format!("more than {n} feature rows")));
            }
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| parse_err(path, ln, format!("invalid value `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != c {
                return Err(parse_err(path, ln, format!("{} values, expected {c}", vals.len())));
            }
            x.row_mut(row).copy_from_slice(&vals);
            row += 1;
        }
        if row != n {
            return Err(parse_err(path, text.lines().count(), format!("{row} feature rows, expected {n}")));
        }
    } else {
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            let i: usize = field(path, ln, toks.next(), "node index")?;
            let j: usize = field(path, ln, toks.next(), "feature index")?;
            let v: f64 = field(path, ln, toks.next(), "value")?;
            if toks.next().is_some() {
                return Err(parse_err(path, ln, "expected `node feature value`"));
            }
            if i >= n || j >= c {
                return Err(Error::Validation(format!(
                    "{}:{ln}: entry ({i}, {j}) outside {n}x{c}",
                    path.display()
                )));
            }
            x[(i, j)] = v;
        }
    }
    x.check_finite("feature file")?;
    Ok(x)
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(ln, line)| field(path, ln, Some(line), "class id"))
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_edges(path: &Path, edges: &[Edge]) -> Result<()> {
    let mut s = String::with_capacity(edges.len() * 12);
    for &(i, j) in edges {
        let _ = writeln!(s, "{i} {j}");
    }
    write(path, &s)
}

/// Writes the sparse-triplet feature format (zeros omitted).
pub fn write_features(path: &Path, x: &DenseMatrix) -> Result<()> {
    let mut s = format!("{} {}\n", x.rows(), x.cols());
    for i in 0..x.rows() {
        for (j, &v) in x.row(i).iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(s, "{i} {j} {v}");
            }
        }
    }
    write(path, &s)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(s, "{l}");
    }
    write(path, &s)
}
