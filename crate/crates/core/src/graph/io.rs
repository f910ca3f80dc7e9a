//! Dataset files.
//!
//! The edge-list format is a directory of line-oriented text files with
//! 0-based integer ids. Blank lines and lines starting with `#` are ignored.
//!
//! * `labels.tsv`: `graph_id \t node \t label`, one line per node. The node
//!   set of each graph is `0..n`, where `n - 1` is the largest labelled id.
//! * `edges.tsv`: `graph_id \t u \t v`. Duplicate edges are merged and
//!   self-loops dropped, each with a warning.
//! * `features.csv` (optional): one comma-separated row per node, graphs in
//!   id order and nodes in id order within each graph. When absent, the
//!   degree-based default features are used.
//!
//! The packaged format is a single JSON document.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Graph, GraphStore};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    EdgeList,
    Packaged,
}

pub const EDGES_FILE: &str = "edges.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const FEATURES_FILE: &str = "features.csv";

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<GraphStore> {
    match format {
        DatasetFormat::Packaged => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })
        }
        DatasetFormat::EdgeList => load_edge_list(path),
    }
}

pub fn save_dataset(gs: &GraphStore, path: &Path, format: DatasetFormat) -> Result<()> {
    match format {
        DatasetFormat::Packaged => {
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let text = serde_json::to_string(gs).expect("graph store serializes");
            fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        DatasetFormat::EdgeList => save_edge_list(gs, path),
    }
}

fn save_edge_list(gs: &GraphStore, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut edges = String::new();
    let mut labels = String::new();
    let mut features = String::new();
    let explicit = gs.graphs().iter().any(|g| g.explicit_features().is_some());
    for (gi, g) in gs.graphs().iter().enumerate() {
        for (u, v) in g.edges() {
            writeln!(edges, "{gi}\t{u}\t{v}").unwrap();
        }
        for (u, l) in g.labels().iter().enumerate() {
            writeln!(labels, "{gi}\t{u}\t{l}").unwrap();
        }
        if explicit {
            for u in 0..g.num_nodes() as u32 {
                let row: Vec<String> = g.feature_row(u).iter().map(|x| x.to_string()).collect();
                writeln!(features, "{}", row.join(",")).unwrap();
            }
        }
    }
    write(dir.join(EDGES_FILE), &edges)?;
    write(dir.join(LABELS_FILE), &labels)?;
    let fpath = dir.join(FEATURES_FILE);
    if explicit {
        write(fpath, &features)?;
    } else if fpath.exists() {
        fs::remove_file(&fpath).map_err(|e| Error::io(&fpath, e))?;
    }
    Ok(())
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn parse_ids<const N: usize>(path: &Path, line: usize, text: &str) -> Result<[u32; N]> {
    let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
    if fields.len() != N {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("expected {N} tab-separated fields, found {}", fields.len()),
        });
    }
    let mut out = [0u32; N];
    for (o, f) in out.iter_mut().zip(&fields) {
        *o = f.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("not a non-negative integer id: {f:?}"),
        })?;
    }
    Ok(out)
}

fn load_edge_list(dir: &Path) -> Result<GraphStore> {
    let lpath = dir.join(LABELS_FILE);
    let mut labels: BTreeMap<u32, BTreeMap<u32, u32>> = BTreeMap::new();
    for (line, text) in data_lines(&lpath)? {
        let [g, u, l] = parse_ids::<3>(&lpath, line, &text)?;
        if labels.entry(g).or_default().insert(u, l).is_some() {
            return Err(Error::Parse {
                path: lpath.clone(),
                line,
                message: format!("node {u} of graph {g} labelled twice"),
            });
        }
    }
    let n_graphs = labels.len();
    let mut sizes = Vec::with_capacity(n_graphs);
    for (expected, (&g, nodes)) in labels.iter().enumerate() {
        if g as usize != expected {
            return Err(Error::Validation(format!(
                "graph ids must be contiguous from 0; graph {expected} has no labels"
            )));
        }
        let n = nodes.keys().next_back().map_or(0, |&u| u as usize + 1);
        if nodes.len() != n {
            let missing = (0..n as u32).find(|u| !nodes.contains_key(u)).unwrap();
            return Err(Error::Validation(format!(
                "node {missing} of graph {g} has no label"
            )));
        }
        sizes.push(n);
    }

    let epath = dir.join(EDGES_FILE);
    let mut edges: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_graphs];
    let mut seen: HashSet<(u32, u32, u32)> = HashSet::new();
    let (mut dups, mut loops) = (0usize, 0usize);
    for (line, text) in data_lines(&epath)? {
        let [g, u, v] = parse_ids::<3>(&epath, line, &text)?;
        let Some(&n) = sizes.get(g as usize) else {
            return Err(Error::Validation(format!(
                "{}:{line}: unknown graph id {g}",
                epath.display()
            )));
        };
        if u as usize >= n || v as usize >= n {
            return Err(Error::Validation(format!(
                "{}:{line}: dangling node id in edge ({u}, {v}) of graph {g} with {n} labelled nodes",
                epath.display()
            )));
        }
        if u == v {
            loops += 1;
            continue;
        }
        if !seen.insert((g, u.min(v), u.max(v))) {
            dups += 1;
            continue;
        }
        edges[g as usize].push((u, v));
    }
    if dups > 0 {
        log::warn!("{}: merged {dups} duplicate edges", epath.display());
    }
    if loops > 0 {
        log::warn!("{}: dropped {loops} self-loops", epath.display());
    }

    let fpath = dir.join(FEATURES_FILE);
    let mut features: Vec<Option<Matrix>> = vec![None; n_graphs];
    if fpath.exists() {
        let rows = data_lines(&fpath)?;
        let total: usize = sizes.iter().sum();
        if rows.len() != total {
            return Err(Error::Validation(format!(
                "{} has {} rows for {total} nodes",
                fpath.display(),
                rows.len()
            )));
        }
        let mut parsed = Vec::with_capacity(total);
        for (line, text) in &rows {
            let row = text
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse {
                    path: fpath.clone(),
                    line: *line,
                    message: format!("bad feature value: {e}"),
                })?;
            if let Some(first) = parsed.first().map(Vec::len) {
                if row.len() != first {
                    return Err(Error::Parse {
                        path: fpath.clone(),
                        line: *line,
                        message: format!("row has {} values, expected {first}", row.len()),
                    });
                }
            }
            parsed.push(row);
        }
        let mut offset = 0;
        for (gi, &n) in sizes.iter().enumerate() {
            let m = parsed.first().map_or(0, Vec::len);
            features[gi] = Some(if n == 0 {
                Matrix::zeros(0, m)
            } else {
                Matrix::from_rows(&parsed[offset..offset + n])?
            });
            offset += n;
        }
    }

    let mut graphs = Vec::with_capacity(n_graphs);
    for (gi, ((nodes, e), f)) in labels.values().zip(&edges).zip(features).enumerate() {
        let l: Vec<u32> = nodes.values().copied().collect();
        graphs.push(Graph::new(sizes[gi], e, f, l)?);
    }
    GraphStore::new(graphs)
}
