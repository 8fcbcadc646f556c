//! Embedding files, loss logs and small JSON helpers.
//!
//! Text embeddings start with a `N e` header followed by `N` rows of `e`
//! floats, printed in shortest round-trip form so they reload bit-exactly.
//! The binary twin is `WEMB`, `N` and `e` as little-endian `u64`, then the
//! row-major values as little-endian `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use warga::linalg::DenseMatrix;
use warga::training::EpochRecord;

pub const VERSION: &str = env!("WARGA_VERSION");

const MAGIC: &[u8; 4] = b"WEMB";

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn embedding_text(z: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", z.rows(), z.cols());
    for i in 0..z.rows() {
        let row: Vec<String> = z.row(i).iter().map(f64::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn embedding_binary(z: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * z.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(z.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(z.cols() as u64).to_le_bytes());
    for v in z.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn parse_text(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("empty embedding file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad embedding header `{header}`"))?;
    let [n, e] = dims[..] else { bail!("embedding header must be `N e`, got `{header}`") };
    let mut values = Vec::with_capacity(n * e);
    for (i, line) in lines.enumerate() {
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().with_context(|| format!("row {}: bad value `{tok}`", i + 1))?);
        }
        ensure!(values.len() - before == e, "row {} has {} values, expected {e}", i + 1, values.len() - before);
    }
    ensure!(values.len() == n * e, "expected {n} rows, found {}", values.len() / e.max(1));
    Ok(DenseMatrix::from_vec(n, e, values)?)
}

fn parse_binary(bytes: &[u8]) -> Result<DenseMatrix> {
    ensure!(bytes.len() >= 20, "binary embedding is truncated");
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes")) as usize;
    let (n, e) = (word(4), word(12));
    let body = &bytes[20..];
    ensure!(body.len() == 8 * n * e, "binary embedding holds {} bytes for {n}x{e}", body.len());
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(DenseMatrix::from_vec(n, e, values)?)
}

/// Reads either embedding format, chosen by the leading magic bytes.
pub fn read_embedding(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let z = if bytes.starts_with(MAGIC) {
        parse_binary(&bytes)
    } else {
        parse_text(std::str::from_utf8(&bytes).context("embedding is neither text nor WEMB binary")?)
    };
    z.with_context(|| format!("parsing {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// One row per epoch; `NA` where a column does not apply.
pub fn loss_log(epochs: &[EpochRecord]) -> String {
    let mut out = String::from("epoch\treconstruction\tregularizer\ttotal\tcritic_estimate\tdiscriminator_loss\tval_auc\tval_ap\n");
    for r in epochs {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.epoch,
            r.loss.reconstruction,
            r.loss.regularizer,
            r.loss.total,
            opt(r.critic_estimate),
            opt(r.discriminator_loss),
            opt(r.val_auc),
            opt(r.val_ap)
        );
    }
    out
}
