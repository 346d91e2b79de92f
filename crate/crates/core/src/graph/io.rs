//! Graph file formats.
//!
//! * Features CSV + edge list: the CSV has a header row, one row per node,
//!   one column per feature and an optional integer `label` column. The edge
//!   file holds one whitespace-separated `src dst` pair per line; blank lines
//!   and `#` comments are skipped. Edges are undirected and get expanded to
//!   both directions.
//! * JSON bundle: a single object holding features, edges, optional labels
//!   and optional split masks (see [`JsonBundle`]).

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Graph, Labels, SplitMasks};
use crate::error::{QgatError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case")]
pub enum GraphSource {
    EdgeListCsv { features: PathBuf, edges: PathBuf },
    JsonBundle { path: PathBuf },
}

pub fn load_graph(source: &GraphSource) -> Result<Graph> {
    match source {
        GraphSource::EdgeListCsv { features, edges } => load_csv(features, edges),
        GraphSource::JsonBundle { path } => load_json(path),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> QgatError {
    QgatError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| QgatError::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let line = valid.iter().filter(|b| **b == b'\n').count() + 1;
        parse_err(path, line, "file is not valid UTF-8")
    })
}

fn load_csv(features_path: &Path, edges_path: &Path) -> Result<Graph> {
    let text = read_utf8(features_path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(features_path, 1, e.to_string()))?
        .clone();
    let label_col = headers.iter().position(|h| h == "label");
    let n_feat = headers.len() - usize::from(label_col.is_some());
    if n_feat == 0 {
        return Err(parse_err(features_path, 1, "no feature columns in header"));
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut n_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(features_path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(parse_err(
                features_path,
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_col {
                let y: usize = field.parse().map_err(|_| {
                    parse_err(
                        features_path,
                        line,
                        format!("column `label`: `{field}` is not a class index"),
                    )
                })?;
                labels.push(y);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    parse_err(
                        features_path,
                        line,
                        format!(
                            "column {} (`{}`): `{field}` is not a number",
                            col + 1,
                            &headers[col]
                        ),
                    )
                })?;
                if !v.is_finite() {
                    return Err(parse_err(
                        features_path,
                        line,
                        format!("column {}: non-finite value", col + 1),
                    ));
                }
                data.push(v);
            }
        }
        n_rows += 1;
    }
    let features = Array2::from_shape_vec((n_rows, n_feat), data)
        .map_err(|e| QgatError::Dimension(e.to_string()))?;
    let labels = if label_col.is_some() {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Labels::Classes {
            n_classes,
            y: labels,
        }
    } else {
        Labels::None
    };

    let edge_text = read_utf8(edges_path)?;
    let mut pairs = Vec::new();
    for (idx, raw) in edge_text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(
                edges_path,
                line,
                format!("expected `src dst`, found `{content}`"),
            ));
        }
        let mut ends = [0usize; 2];
        for (slot, f) in ends.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| parse_err(edges_path, line, format!("`{f}` is not a node index")))?;
            if *slot >= n_rows {
                return Err(parse_err(
                    edges_path,
                    line,
                    format!("node {slot} does not exist (graph has {n_rows} nodes)"),
                ));
            }
        }
        pairs.push((ends[0], ends[1]));
    }
    Graph::from_undirected(features, &pairs, labels, SplitMasks::empty(n_rows))
}

/// On-disk JSON layout for a single graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonBundle {
    pub features: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    /// When false (the default) every edge is added in both directions.
    #[serde(default)]
    pub directed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_labels: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<SplitMasks>,
}

fn load_json(path: &Path) -> Result<Graph> {
    let text = read_utf8(path)?;
    let bundle: JsonBundle =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    let field = |msg: String| parse_err(path, 0, msg);
    let n = bundle.features.len();
    let d = bundle.features.first().map_or(0, Vec::len);
    if let Some(i) = bundle.features.iter().position(|r| r.len() != d) {
        return Err(field(format!(
            "features[{i}] has {} entries, expected {d}",
            bundle.features[i].len()
        )));
    }
    let features = Array2::from_shape_vec((n, d), bundle.features.into_iter().flatten().collect())
        .map_err(|e| QgatError::Dimension(e.to_string()))?;
    if let Some((k, (s, t))) = bundle
        .edges
        .iter()
        .enumerate()
        .find(|(_, (s, t))| *s >= n || *t >= n)
    {
        return Err(field(format!(
            "edges[{k}] = [{s}, {t}] references a node outside 0..{n}"
        )));
    }
    let labels = match (bundle.labels, bundle.multi_labels) {
        (Some(_), Some(_)) => {
            return Err(field(
                "`labels` and `multi_labels` are mutually exclusive".into(),
            ))
        }
        (Some(y), None) => {
            let n_classes = bundle
                .n_classes
                .unwrap_or_else(|| y.iter().max().map_or(0, |m| m + 1));
            Labels::Classes { n_classes, y }
        }
        (None, Some(rows)) => {
            let k = rows.first().map_or(0, Vec::len);
            if let Some(i) = rows
                .iter()
                .position(|r| r.len() != k || r.iter().any(|b| *b > 1))
            {
                return Err(field(format!(
                    "multi_labels[{i}] must hold {k} entries of 0 or 1"
                )));
            }
            Labels::MultiLabel {
                n_labels: k,
                y: rows.into_iter().flatten().map(|b| b == 1).collect(),
            }
        }
        (None, None) => Labels::None,
    };
    let masks = bundle.masks.unwrap_or_else(|| SplitMasks::empty(n));
    if bundle.directed {
        Graph::new(features, bundle.edges, labels, masks)
    } else {
        Graph::from_undirected(features, &bundle.edges, labels, masks)
    }
    .map_err(|e| field(e.to_string()))
}

/// Writes the graph as a directed JSON bundle including labels and masks.
pub fn save_graph_json(g: &Graph, path: &Path) -> Result<()> {
    let (labels, n_classes, multi_labels) = match g.labels() {
        Labels::None => (None, None, None),
        Labels::Classes { n_classes, y } => (Some(y.clone()), Some(*n_classes), None),
        Labels::MultiLabel { n_labels, y } => (
            None,
            None,
            Some(
                y.chunks(*n_labels)
                    .map(|r| r.iter().map(|b| u8::from(*b)).collect())
                    .collect(),
            ),
        ),
    };
    let bundle = JsonBundle {
        features: g
            .features()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect(),
        edges: g.edges().to_vec(),
        directed: true,
        labels,
        n_classes,
        multi_labels,
        masks: Some(g.masks().clone()),
    };
    let text = serde_json::to_string(&bundle).map_err(|e| QgatError::Input(e.to_string()))?;
    fs::write(path, text).map_err(|e| QgatError::io(path, e))
}

/// Writes the features CSV (with `label` when classes exist) and the
/// undirected edge list.
pub fn save_graph_csv(g: &Graph, features_path: &Path, edges_path: &Path) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..g.feature_dim()).map(|k| format!("f{k}")).collect();
    out.push_str(&header.join(","));
    let classes = match g.labels() {
        Labels::Classes { y, .. } => {
            out.push_str(",label");
            Some(y)
        }
        _ => None,
    };
    out.push('\n');
    for (i, row) in g.features().rows().into_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        if let Some(y) = classes {
            out.push_str(&format!(",{}", y[i]));
        }
        out.push('\n');
    }
    fs::write(features_path, out).map_err(|e| QgatError::io(features_path, e))?;
    let mut edges = String::from("# src dst (undirected)\n");
    for (u, v) in g.undirected_pairs() {
        edges.push_str(&format!("{u} {v}\n"));
    }
    fs::write(edges_path, edges).map_err(|e| QgatError::io(edges_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &[u8]) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(body).unwrap();
        p
    }

    #[test]
    fn path_graph_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "f.csv", b"a,b,label\n1,0,0\n0,1,1\n1,1,0\n");
        let e = write(dir.path(), "e.txt", b"# path\n0 1\n\n1 2\n");
        let g = load_graph(&GraphSource::EdgeListCsv {
            features: f,
            edges: e,
        })
        .unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.edges().len(), 4);
        assert_eq!(
            g.labels(),
            &Labels::Classes {
                n_classes: 2,
                y: vec![0, 1, 0]
            }
        );
    }

    #[test]
    fn empty_edge_file_gives_isolated_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "f.csv", b"x\n1\n2\n");
        let e = write(dir.path(), "e.txt", b"");
        let g = load_graph(&GraphSource::EdgeListCsv {
            features: f,
            edges: e,
        })
        .unwrap();
        assert_eq!((g.n_nodes(), g.edges().len()), (2, 0));
    }

    #[test]
    fn dangling_edge_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "f.csv", b"x\n1\n2\n3\n");
        let e = write(dir.path(), "e.txt", b"0 1\n1 3\n");
        let err = load_graph(&GraphSource::EdgeListCsv {
            features: f,
            edges: e,
        })
        .unwrap_err();
        match err {
            QgatError::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("node 3"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_csv_cell_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "f.csv", b"x,y\n1,2\n3,oops\n");
        let e = write(dir.path(), "e.txt", b"");
        let err = load_graph(&GraphSource::EdgeListCsv {
            features: f,
            edges: e,
        })
        .unwrap_err();
        let QgatError::Parse { line, msg, .. } = err else {
            panic!()
        };
        assert_eq!(line, 3);
        assert!(msg.contains("column 2"), "{msg}");
    }

    #[test]
    fn non_utf8_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(dir.path(), "f.csv", b"x\n1\n\xff\n");
        let e = write(dir.path(), "e.txt", b"");
        let err = load_graph(&GraphSource::EdgeListCsv {
            features: f,
            edges: e,
        })
        .unwrap_err();
        assert!(matches!(err, QgatError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn json_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let g = crate::graph::synth_sbm(&crate::graph::SbmParams::default(), 1).unwrap();
        let p = dir.path().join("g.json");
        save_graph_json(&g, &p).unwrap();
        assert_eq!(load_graph(&GraphSource::JsonBundle { path: p }).unwrap(), g);

        let bad = write(
            dir.path(),
            "bad.json",
            br#"{"features": [[1.0],[2.0]], "edges": [[0, 5]]}"#,
        );
        let err = load_graph(&GraphSource::JsonBundle { path: bad }).unwrap_err();
        assert!(err.to_string().contains("edges[0]"), "{err}");

        let unknown = write(
            dir.path(),
            "u.json",
            br#"{"features": [], "edges": [], "extra": 1}"#,
        );
        assert!(load_graph(&GraphSource::JsonBundle { path: unknown }).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = crate::graph::synth_sbm(&crate::graph::SbmParams::default(), 2).unwrap();
        let (f, e) = (dir.path().join("f.csv"), dir.path().join("e.txt"));
        save_graph_csv(&g, &f, &e).unwrap();
        let back = load_graph(&GraphSource::EdgeListCsv {
            features: f,
            edges: e,
        })
        .unwrap();
        assert_eq!(back.features(), g.features());
        assert_eq!(back.labels(), g.labels());
        assert_eq!(back.undirected_pairs(), g.undirected_pairs());
    }
}
