//! Text formats for views, multi-graph manifests, and label files.
//!
//! Edge list: one `i j w` triple per line, `#` comments and blank lines
//! skipped. Each undirected edge is listed once.
//!
//! Manifest:
//!
//! ```text
//! # comment
//! n 100
//! m 2
//! view g0.edges
//! view g1.edges
//! ```
//!
//! `view` paths are relative to the manifest's directory and appear in view
//! order. An optional `names <path>` line points at a file with one node name
//! per line.
//!
//! Labels: one `i +1` or `i -1` line per labeled node.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, GraphView, LabelVector, MultiGraph};

fn content_lines<R: Read>(source: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    BufReader::new(source)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} from {token:?}"),
    })
}

/// Parses an edge list into a symmetric adjacency on `n` nodes.
pub fn parse_edge_list<R: Read>(source: R, n: usize) -> Result<Adjacency> {
    let mut edges = Vec::new();
    for (lineno, line) in content_lines(source) {
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if is_skippable(&line) {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let i: usize = parse_field(tokens.next(), lineno, "source node")?;
        let j: usize = parse_field(tokens.next(), lineno, "target node")?;
        let w: f64 = parse_field(tokens.next(), lineno, "weight")?;
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                message: "expected exactly three fields".into(),
            });
        }
        edges.push((i, j, w));
    }
    Adjacency::from_edges(n, edges)
}

/// Parses an edge list and builds the view (id 0) with its Laplacian.
pub fn load_edge_list<R: Read>(source: R, n: usize) -> Result<GraphView> {
    Ok(GraphView::new(0, parse_edge_list(source, n)?))
}

pub fn write_edge_list<W: Write>(mut sink: W, adjacency: &Adjacency) -> std::io::Result<()> {
    for (i, j, w) in adjacency.edges() {
        writeln!(sink, "{i} {j} {w}")?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Reads a manifest and every edge list it references.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<MultiGraph> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut n: Option<usize> = None;
    let mut m: Option<usize> = None;
    let mut view_paths: Vec<PathBuf> = Vec::new();
    let mut names_path: Option<PathBuf> = None;
    for (lineno, line) in content_lines(open(path)?) {
        let line = line.map_err(|e| Error::io(path, e))?;
        if is_skippable(&line) {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("n") => n = Some(parse_field(tokens.next(), lineno, "node count")?),
            Some("m") => m = Some(parse_field(tokens.next(), lineno, "view count")?),
            Some("view") => {
                let p: String = parse_field(tokens.next(), lineno, "view path")?;
                view_paths.push(base.join(p));
            }
            Some("names") => {
                let p: String = parse_field(tokens.next(), lineno, "names path")?;
                names_path = Some(base.join(p));
            }
            Some(other) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unknown manifest key {other:?}"),
                })
            }
            None => unreachable!(),
        }
    }
    let n = n.ok_or_else(|| Error::Config(format!("{}: missing `n`", path.display())))?;
    if let Some(m) = m {
        if m != view_paths.len() {
            return Err(Error::Config(format!(
                "{}: declares m = {m} but lists {} views",
                path.display(),
                view_paths.len()
            )));
        }
    }
    let mut adjacencies = Vec::with_capacity(view_paths.len());
    for vp in &view_paths {
        let adj = parse_edge_list(open(vp)?, n).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", vp.display()),
            },
            other => other,
        })?;
        adjacencies.push(adj);
    }
    let mut mg = MultiGraph::new(adjacencies)?;
    if let Some(np) = names_path {
        let names: Vec<String> = BufReader::new(open(&np)?)
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(&np, e))?;
        mg = mg.with_node_names(names)?;
    }
    Ok(mg)
}

/// Writes `manifest.txt` plus one `view_<k>.edges` file per view into `dir`.
/// Returns the manifest path.
pub fn write_manifest(dir: impl AsRef<Path>, graph: &MultiGraph) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!("n {}\nm {}\n", graph.n(), graph.m());
    for view in graph.views() {
        let name = format!("view_{}.edges", view.id());
        let p = dir.join(&name);
        let file = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        let mut w = std::io::BufWriter::new(file);
        write_edge_list(&mut w, view.adjacency())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&p, e))?;
        manifest.push_str(&format!("view {name}\n"));
    }
    if let Some(names) = graph.node_names() {
        let p = dir.join("nodes.txt");
        fs::write(&p, names.join("\n") + "\n").map_err(|e| Error::io(&p, e))?;
        manifest.push_str("names nodes.txt\n");
    }
    let mp = dir.join("manifest.txt");
    fs::write(&mp, manifest).map_err(|e| Error::io(&mp, e))?;
    Ok(mp)
}

/// Parses `i ±1` lines. Nodes not listed are unlabeled.
pub fn parse_labels<R: Read>(source: R, n: usize) -> Result<LabelVector> {
    let mut values = vec![0i8; n];
    let mut seen = vec![false; n];
    for (lineno, line) in content_lines(source) {
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if is_skippable(&line) {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let i: usize = parse_field(tokens.next(), lineno, "node index")?;
        let label: i8 = parse_field(tokens.next(), lineno, "label")?;
        if i >= n {
            return Err(Error::OutOfBounds { index: i, n });
        }
        if label != 1 && label != -1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("label must be +1 or -1, got {label}"),
            });
        }
        if seen[i] {
            return Err(Error::Parse {
                line: lineno,
                message: format!("node {i} labeled twice"),
            });
        }
        seen[i] = true;
        values[i] = label;
    }
    LabelVector::new(values)
}

pub fn read_labels(path: impl AsRef<Path>, n: usize) -> Result<LabelVector> {
    let path = path.as_ref();
    parse_labels(open(path)?, n)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelVector) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in labels.labeled_set() {
        let l = labels.get(i);
        out.push_str(&format!("{i} {}\n", if l > 0 { "+1" } else { "-1" }));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let text = "# header\n0 1 2.0\n\n1 2 2.0\n";
        let adj = parse_edge_list(text.as_bytes(), 3).unwrap();
        assert_eq!(adj.edge_count(), 2);
        assert_eq!(adj.weight(1, 0), 2.0);
    }

    #[test]
    fn empty_stream() {
        let view = load_edge_list("".as_bytes(), 3).unwrap();
        assert_eq!(view.adjacency().edge_count(), 0);
        assert_eq!(view.laplacian().to_dense(), vec![vec![0.0; 3]; 3]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_edge_list("0 1 1.0\n0 x 1.0\n".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_edge_list("0 1\n".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(
            parse_edge_list("0 5 1.0".as_bytes(), 3),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 -2".as_bytes(), 3),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_edge_list("0 1 1\n1 0 1".as_bytes(), 3),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn labels_parse() {
        let y = parse_labels("0 +1\n2 -1\n".as_bytes(), 4).unwrap();
        assert_eq!(y.values(), &[1, 0, -1, 0]);
        assert!(parse_labels("0 2\n".as_bytes(), 4).is_err());
        assert!(parse_labels("7 1\n".as_bytes(), 4).is_err());
        assert!(parse_labels("0 1\n0 -1\n".as_bytes(), 4).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mg = MultiGraph::new(vec![
            Adjacency::from_edges(4, [(0, 1, 0.1), (2, 3, 1.0 / 3.0)]).unwrap(),
            Adjacency::empty(4),
        ])
        .unwrap();
        let path = write_manifest(dir.path(), &mg).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back.m(), 2);
        for k in 0..2 {
            assert_eq!(back.view(k).adjacency(), mg.view(k).adjacency());
        }
    }
}
