//! Edge-list and matrix file formats.
//!
//! Edge lists are UTF-8 text with one `source<TAB>target<TAB>cost` record per
//! line and an optional fourth column of comma-joined provenance ids. Lines
//! starting with `#` are comments; `@node <id>` declares a node.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRecord, Network};
use crate::matrix::Matrix;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid number {field:?}")))
}

pub fn parse_edge_list(text: &str) -> Result<Network> {
    let mut nodes: Vec<String> = Vec::new();
    let mut known = std::collections::HashSet::new();
    let mut records = Vec::new();
    let mut add = |id: &str, nodes: &mut Vec<String>| {
        if known.insert(id.to_string()) {
            nodes.push(id.to_string());
        }
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let l = raw.trim_end_matches('\r');
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        if let Some(rest) = l.strip_prefix("@node") {
            let id = rest.trim();
            if id.is_empty() || !rest.starts_with([' ', '\t']) {
                return Err(parse_err(line, "expected `@node <id>`"));
            }
            add(id, &mut nodes);
            continue;
        }
        let fields: Vec<&str> = l.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(parse_err(
                line,
                format!(
                    "expected 3 or 4 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let (source, target) = (fields[0].trim(), fields[1].trim());
        if source.is_empty() || target.is_empty() {
            return Err(parse_err(line, "empty node id"));
        }
        let cost = parse_f64(fields[2], line)?;
        if !cost.is_finite() {
            return Err(parse_err(
                line,
                format!("cost must be finite, got {}", fields[2].trim()),
            ));
        }
        add(source, &mut nodes);
        add(target, &mut nodes);
        let mut rec = EdgeRecord::new(source, target, cost);
        if let Some(p) = fields.get(3) {
            let ids: Vec<String> = p.split(',').map(|s| s.trim().to_string()).collect();
            if ids.iter().any(String::is_empty) {
                return Err(parse_err(line, "empty provenance id"));
            }
            rec.provenance = Some(ids);
        }
        records.push(rec);
    }
    Network::new(nodes, records)
}

pub fn read_edge_list(path: &Path) -> Result<Network> {
    parse_edge_list(&fs::read_to_string(path)?)
}

/// Every node is declared first so node order survives a round trip.
pub fn write_edge_list(net: &Network, with_provenance: bool) -> String {
    let mut out = String::new();
    for id in net.nodes() {
        out.push_str(&format!("@node {id}\n"));
    }
    for e in net.edges() {
        let (s, t) = (&net.nodes()[e.source], &net.nodes()[e.target]);
        out.push_str(&format!("{s}\t{t}\t{}", fmt_f64(e.cost)));
        if with_provenance {
            out.push('\t');
            out.push_str(&e.provenance.join(","));
        }
        out.push('\n');
    }
    out
}

/// Header row of node ids, then one labeled row per node.
pub fn write_matrix_tsv(nodes: &[String], m: &Matrix) -> String {
    let mut out = String::from("node");
    for id in nodes {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in nodes.iter().enumerate() {
        out.push_str(id);
        for x in m.row(i) {
            out.push('\t');
            out.push_str(&fmt_f64(*x));
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix_tsv(text: &str) -> Result<(Vec<String>, Matrix)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header row"))?;
    let nodes: Vec<String> = header
        .trim_end_matches('\r')
        .split('\t')
        .skip(1)
        .map(str::to_string)
        .collect();
    let mut rows = Vec::with_capacity(nodes.len());
    for (k, l) in lines {
        let fields: Vec<&str> = l.trim_end_matches('\r').split('\t').collect();
        if fields.len() != nodes.len() + 1 {
            return Err(parse_err(
                k + 1,
                format!(
                    "expected {} fields, found {}",
                    nodes.len() + 1,
                    fields.len()
                ),
            ));
        }
        let expected = nodes.get(rows.len()).map(String::as_str);
        if expected != Some(fields[0]) {
            return Err(parse_err(
                k + 1,
                format!("row label {:?} out of order", fields[0]),
            ));
        }
        let row = fields[1..]
            .iter()
            .map(|f| parse_f64(f, k + 1))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.len() != nodes.len() {
        return Err(Error::Dimension {
            expected: nodes.len(),
            got: rows.len(),
        });
    }
    Ok((nodes, Matrix::from_rows(&rows)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub nodes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn new(nodes: &[String], m: &Matrix) -> Self {
        MatrixJson {
            nodes: nodes.to_vec(),
            rows: m.to_rows(),
        }
    }

    pub fn matrix(&self) -> Result<Matrix> {
        if self.rows.len() != self.nodes.len()
            || self.rows.iter().any(|r| r.len() != self.nodes.len())
        {
            return Err(Error::Dimension {
                expected: self.nodes.len(),
                got: self.rows.len(),
            });
        }
        Ok(Matrix::from_rows(&self.rows))
    }
}

/// `node<TAB>rank`, highest rank first, ties in node order.
pub fn write_rank_tsv(nodes: &[String], values: &[f64]) -> String {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut out = String::from("node\trank\n");
    for i in order {
        out.push_str(&format!("{}\t{}\n", nodes[i], fmt_f64(values[i])));
    }
    out
}

pub fn parse_rank_tsv(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (k, l) in text.lines().enumerate().skip(1) {
        if l.trim().is_empty() {
            continue;
        }
        let (id, v) = l
            .split_once('\t')
            .ok_or_else(|| parse_err(k + 1, "expected `node<TAB>rank`"))?;
        out.push((id.to_string(), parse_f64(v, k + 1)?));
    }
    Ok(out)
}

/// A table with a header row and one labeled row per entry, one column
/// per slice in `columns`.
pub fn write_columns_tsv(header: &[&str], labels: &[String], columns: &[&[f64]]) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for (i, label) in labels.iter().enumerate() {
        out.push_str(label);
        for c in columns {
            out.push('\t');
            out.push_str(&fmt_f64(c[i]));
        }
        out.push('\n');
    }
    out
}

/// `(label, values)` row of a column table.
pub type LabelledRow = (String, Vec<f64>);

/// Header fields and rows of a table written by [`write_columns_tsv`].
pub fn parse_columns_tsv(text: &str) -> Result<(Vec<String>, Vec<LabelledRow>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header row"))?;
    let header: Vec<String> = header.split('\t').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, l) in lines {
        let fields: Vec<&str> = l.split('\t').collect();
        if fields.len() != header.len() {
            return Err(parse_err(
                k + 1,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let values = fields[1..]
            .iter()
            .map(|f| parse_f64(f, k + 1))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((fields[0].to_string(), values));
    }
    Ok((header, rows))
}

/// A personalization matrix in matrix TSV form, reordered to the node
/// order of `net`. Every node of `net` must appear.
pub fn parse_personalization(text: &str, net: &Network) -> Result<Matrix> {
    let (nodes, m) = parse_matrix_tsv(text)?;
    let n = net.node_count();
    if nodes.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: nodes.len(),
        });
    }
    let mut pos = vec![0; n];
    for (p, id) in nodes.iter().enumerate() {
        let i = net.node_index(id).ok_or_else(|| Error::UnknownNode {
            edge: "personalization".into(),
            node: id.clone(),
        })?;
        pos[i] = p;
    }
    Ok(Matrix::from_fn(n, n, |i, j| m[(pos[i], pos[j])]))
}
