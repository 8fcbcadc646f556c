//! Conversion of raw citation-network dumps into the plain-text graph format.
//!
//! Two layouts are understood:
//!
//! * `linqs`: `<name>.content` (`id f1 .. fC label` per line) and
//!   `<name>.cites` (`cited citing` per line), as distributed for Cora and
//!   Citeseer.
//! * `pubmed`: `Pubmed-Diabetes.NODE.paper.tab` and
//!   `Pubmed-Diabetes.DIRECTED.cites.tab`.
//!
//! Citations that mention an unknown paper are dropped and counted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use warga::graph::{canonical, write_edges, write_features, write_labels, Edge, Graph};
use warga::linalg::DenseMatrix;

pub const MANIFEST: &str = "manifest.json";
pub const EDGES: &str = "edges.txt";
pub const FEATURES: &str = "features.txt";
pub const LABELS: &str = "labels.txt";
pub const NODE_IDS: &str = "nodes.txt";

const PUBMED_NODES: &str = "Pubmed-Diabetes.NODE.paper.tab";
const PUBMED_CITES: &str = "Pubmed-Diabetes.DIRECTED.cites.tab";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub layout: String,
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub classes: usize,
    #[serde(default)]
    pub class_names: Vec<String>,
    #[serde(default)]
    pub dropped_edges: usize,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// A converted dataset before it is written out.
pub struct Converted {
    pub node_ids: Vec<String>,
    pub edges: Vec<Edge>,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub dropped_edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Linqs,
    Pubmed,
}

impl Layout {
    fn as_str(self) -> &'static str {
        match self {
            Self::Linqs => "linqs",
            Self::Pubmed => "pubmed",
        }
    }
}

fn single_with_extension(dir: &Path, ext: &str) -> Result<Option<PathBuf>> {
    let mut found: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    found.sort();
    match found.len() {
        0 => Ok(None),
        1 => Ok(found.pop()),
        _ => bail!("{} holds several .{ext} files; keep one dataset per directory", dir.display()),
    }
}

/// Picks the layout from the files present, or explains what is missing.
pub fn detect_layout(dir: &Path) -> Result<Layout> {
    if dir.join(PUBMED_NODES).exists() || dir.join(PUBMED_CITES).exists() {
        for f in [PUBMED_NODES, PUBMED_CITES] {
            if !dir.join(f).exists() {
                bail!("pubmed layout: missing {}", dir.join(f).display());
            }
        }
        return Ok(Layout::Pubmed);
    }
    let content = single_with_extension(dir, "content")?;
    let cites = single_with_extension(dir, "cites")?;
    match (content, cites) {
        (Some(_), Some(_)) => Ok(Layout::Linqs),
        (Some(c), None) => bail!("linqs layout: missing {}", c.with_extension("cites").display()),
        (None, Some(c)) => bail!("linqs layout: missing {}", c.with_extension("content").display()),
        (None, None) => bail!(
            "unknown layout in {}: expected <name>.content + <name>.cites, or {PUBMED_NODES} + {PUBMED_CITES}",
            dir.display()
        ),
    }
}

fn index_classes(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let names: Vec<String> = raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let lookup: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    (raw.iter().map(|r| lookup[r.as_str()]).collect(), names)
}

fn link(ids: &BTreeMap<String, usize>, pairs: Vec<(String, String)>) -> (Vec<Edge>, usize) {
    let mut edges = BTreeSet::new();
    let mut dropped = 0;
    for (a, b) in pairs {
        match (ids.get(&a), ids.get(&b)) {
            (Some(&i), Some(&j)) if i != j => {
                edges.insert(canonical(i, j));
            }
            (Some(_), Some(_)) => {}
            _ => dropped += 1,
        }
    }
    (edges.into_iter().collect(), dropped)
}

pub fn read_linqs(dir: &Path) -> Result<(String, Converted)> {
    let content = single_with_extension(dir, "content")?.ok_or_else(|| anyhow!("no .content file in {}", dir.display()))?;
    let cites = content.with_extension("cites");
    let name = content
        .file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();

    let text = fs::read_to_string(&content).with_context(|| format!("reading {}", content.display()))?;
    let mut node_ids = Vec::new();
    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            bail!("{}:{}: expected `id features.. label`", content.display(), ln + 1);
        }
        let feats = toks[1..toks.len() - 1]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| anyhow!("{}:{}: {e}", content.display(), ln + 1))?;
        if let Some(first) = rows.first() {
            if first.len() != feats.len() {
                bail!("{}:{}: {} features, expected {}", content.display(), ln + 1, feats.len(), first.len());
            }
        }
        node_ids.push(toks[0].to_string());
        raw_labels.push(toks[toks.len() - 1].to_string());
        rows.push(feats);
    }
    let ids = id_map(&node_ids)?;

    let text = fs::read_to_string(&cites).with_context(|| format!("reading {}", cites.display()))?;
    let mut pairs = Vec::new();
    for (ln, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut toks = line.split_whitespace();
        match (toks.next(), toks.next(), toks.next()) {
            (Some(a), Some(b), None) => pairs.push((a.to_string(), b.to_string())),
            _ => bail!("{}:{}: expected `cited citing`", cites.display(), ln + 1),
        }
    }
    let (edges, dropped_edges) = link(&ids, pairs);
    let (labels, class_names) = index_classes(&raw_labels);
    let features = DenseMatrix::from_rows(&rows).context("assembling feature matrix")?;
    Ok((
        name,
        Converted {
            node_ids,
            edges,
            features,
            labels,
            class_names,
            dropped_edges,
        },
    ))
}

fn id_map(node_ids: &[String]) -> Result<BTreeMap<String, usize>> {
    let mut ids = BTreeMap::new();
    for (i, id) in node_ids.iter().enumerate() {
        if ids.insert(id.clone(), i).is_some() {
            bail!("duplicate node id {id}");
        }
    }
    Ok(ids)
}

pub fn read_pubmed(dir: &Path) -> Result<Converted> {
    let nodes_path = dir.join(PUBMED_NODES);
    let text = fs::read_to_string(&nodes_path).with_context(|| format!("reading {}", nodes_path.display()))?;
    let mut lines = text.lines().enumerate();
    lines.next(); // NODE	paper
    let (_, decl) = lines
        .next()
        .ok_or_else(|| anyhow!("{}: missing feature declaration line", nodes_path.display()))?;
    // entries look like `numeric:w-rec:0.0`; the label declaration comes first
    let feature_names: Vec<&str> = decl
        .split('\t')
        .filter_map(|d| {
            let mut parts = d.split(':');
            match (parts.next(), parts.next()) {
                (Some("numeric"), Some(name)) => Some(name),
                _ => None,
            }
        })
        .collect();
    let column: BTreeMap<&str, usize> = feature_names.iter().enumerate().map(|(i, n)| (*n, i)).collect();

    let mut node_ids = Vec::new();
    let mut raw_labels = Vec::new();
    let mut rows = Vec::new();
    for (ln, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().trim().to_string();
        let mut label = None;
        let mut row = vec![0.0; feature_names.len()];
        for f in fields {
            let Some((key, value)) = f.split_once('=') else { continue };
            if key == "label" {
                label = Some(value.to_string());
            } else if let Some(&c) = column.get(key) {
                row[c] = value
                    .parse()
                    .map_err(|e| anyhow!("{}:{}: {key}={value}: {e}", nodes_path.display(), ln + 1))?;
            }
        }
        let label = label.ok_or_else(|| anyhow!("{}:{}: no label field", nodes_path.display(), ln + 1))?;
        node_ids.push(id);
        raw_labels.push(label);
        rows.push(row);
    }
    let ids = id_map(&node_ids)?;

    let cites_path = dir.join(PUBMED_CITES);
    let text = fs::read_to_string(&cites_path).with_context(|| format!("reading {}", cites_path.display()))?;
    let mut pairs = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(2).filter(|(_, l)| !l.trim().is_empty()) {
        // `edge_id  paper:A  |  paper:B`
        let toks: Vec<&str> = line.split('\t').collect();
        let strip = |t: &str| t.trim().strip_prefix("paper:").map(str::to_string);
        match (toks.get(1).and_then(|t| strip(t)), toks.get(3).and_then(|t| strip(t))) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            _ => bail!("{}:{}: expected `id paper:A | paper:B`", cites_path.display(), ln + 1),
        }
    }
    let (edges, dropped_edges) = link(&ids, pairs);
    let (labels, class_names) = index_classes(&raw_labels);
    let features = DenseMatrix::from_rows(&rows).context("assembling feature matrix")?;
    Ok(Converted {
        node_ids,
        edges,
        features,
        labels,
        class_names,
        dropped_edges,
    })
}

/// Writes the edge, feature, label, node-id and manifest files.
pub fn write_dataset(out: &Path, name: &str, layout: &str, data: &Converted) -> Result<Manifest> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let graph = Graph::from_edges(data.features.rows(), data.edges.iter().copied(), data.features.clone(), Some(data.labels.clone()))?;
    write_edges(&out.join(EDGES), &graph.edges())?;
    write_features(&out.join(FEATURES), &data.features)?;
    write_labels(&out.join(LABELS), &data.labels)?;
    let mut ids = String::new();
    for id in &data.node_ids {
        let _ = writeln!(ids, "{id}");
    }
    fs::write(out.join(NODE_IDS), ids)?;
    let manifest = Manifest {
        name: name.to_string(),
        layout: layout.to_string(),
        nodes: graph.n_nodes(),
        edges: graph.n_edges(),
        features: graph.n_features(),
        classes: data.class_names.len(),
        class_names: data.class_names.clone(),
        dropped_edges: data.dropped_edges,
    };
    fs::write(out.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn prepare(input: &Path, out: &Path, name: Option<&str>) -> Result<Manifest> {
    let layout = detect_layout(input)?;
    let (default_name, data) = match layout {
        Layout::Linqs => read_linqs(input)?,
        Layout::Pubmed => ("pubmed".to_string(), read_pubmed(input)?),
    };
    let name = name.map_or(default_name, str::to_string);
    let manifest = write_dataset(out, &name, layout.as_str(), &data)?;
    log::info!(
        "{name}: {} nodes, {} edges, {} features, {} classes ({} citations dropped)",
        manifest.nodes,
        manifest.edges,
        manifest.features,
        manifest.classes,
        manifest.dropped_edges
    );
    Ok(manifest)
}
