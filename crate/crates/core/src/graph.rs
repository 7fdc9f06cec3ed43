//! Immutable CSR graphs, file ingestion, degree statistics, and the
//! matrix-free operators shared by every solver.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Undirected weighted graph in compressed sparse row form.
///
/// Every undirected edge is stored twice (once per endpoint). Rows are sorted
/// by neighbor id, carry no duplicates and no self-loops, and all weights are
/// strictly positive. `degrees[u]` is the row sum of row `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl Graph {
    /// Builds a graph on nodes `0..n` from an undirected edge list.
    ///
    /// Self-loops are dropped, `(u, v)` and `(v, u)` name the same edge, and
    /// a repeated edge keeps the weight of its last occurrence.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut dedup: HashMap<(usize, usize), f64> = HashMap::with_capacity(edges.len());
        for &(u, v, w) in edges {
            if u >= n {
                return Err(Error::NodeOutOfRange { node: u, n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, n });
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) has non-positive or non-finite weight {w}"
                )));
            }
            if u == v {
                continue;
            }
            dedup.insert((u.min(v), u.max(v)), w);
        }
        let mut counts = vec![0usize; n];
        for &(u, v) in dedup.keys() {
            counts[u] += 1;
            counts[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let nnz = *offsets.last().unwrap();
        let mut rows: Vec<Vec<(usize, f64)>> = counts.iter().map(|&c| Vec::with_capacity(c)).collect();
        for (&(u, v), &w) in &dedup {
            rows[u].push((v, w));
            rows[v].push((u, w));
        }
        let mut targets = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        let mut degrees = Vec::with_capacity(n);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(v, _)| v);
            let mut d = 0.0;
            for &(v, w) in row.iter() {
                targets.push(v);
                weights.push(w);
                d += w;
            }
            degrees.push(d);
        }
        Ok(Self {
            offsets,
            targets,
            weights,
            degrees,
        })
    }

    /// Unit-weight convenience constructor.
    pub fn from_unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let e: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_edges(n, &e)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Number of stored adjacency entries (twice the undirected edge count).
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn degree(&self, u: usize) -> f64 {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Number of neighbors of `u` (unweighted degree).
    #[inline]
    pub fn neighbor_count(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    #[inline]
    pub fn neighbor_ids(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn neighbor_weights(&self, u: usize) -> &[f64] {
        &self.weights[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.neighbor_ids(u)
            .iter()
            .copied()
            .zip(self.neighbor_weights(u).iter().copied())
    }

    /// Weight of edge `(u, v)`, or 0 when absent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        match self.neighbor_ids(u).binary_search(&v) {
            Ok(k) => self.neighbor_weights(u)[k],
            Err(_) => 0.0,
        }
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    /// Largest neighbor count over all nodes.
    pub fn max_neighbor_count(&self) -> usize {
        (0..self.node_count())
            .map(|u| self.neighbor_count(u))
            .max()
            .unwrap_or(0)
    }

    pub fn volume(&self, nodes: impl IntoIterator<Item = usize>) -> f64 {
        nodes.into_iter().map(|u| self.degrees[u]).sum()
    }

    /// True when every edge carries weight exactly 1.
    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn check_node(&self, u: usize) -> Result<()> {
        if u >= self.node_count() {
            Err(Error::NodeOutOfRange {
                node: u,
                n: self.node_count(),
            })
        } else {
            Ok(())
        }
    }

    /// Errors unless `u` exists and has positive degree.
    pub fn check_active_node(&self, u: usize) -> Result<()> {
        self.check_node(u)?;
        if self.degrees[u] > 0.0 {
            Ok(())
        } else {
            Err(Error::IsolatedNode(u))
        }
    }

    /// Connected component id per node, numbered in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in self.neighbor_ids(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// A graph read from disk together with the original node ids.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: IdMap,
}

/// Dense index ↔ original file id. Dense ids follow ascending original ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    original: Vec<u64>,
    dense: HashMap<u64, usize>,
}

impl IdMap {
    pub fn from_originals(mut original: Vec<u64>) -> Self {
        original.sort_unstable();
        original.dedup();
        let dense = original.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        Self { original, dense }
    }

    /// Identity map on `0..n`.
    pub fn identity(n: usize) -> Self {
        Self::from_originals((0..n as u64).collect())
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn original(&self, dense: usize) -> u64 {
        self.original[dense]
    }

    pub fn dense(&self, original: u64) -> Option<usize> {
        self.dense.get(&original).copied()
    }

    /// Writes the map as a two-column CSV `dense_id,original_id`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let io = |e| io_err(path, e);
        writeln!(w, "dense_id,original_id").map_err(io)?;
        for (i, o) in self.original.iter().enumerate() {
            writeln!(w, "{i},{o}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = open(path)?;
        let mut original = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let dense: usize = parse_field(parts.next(), path, idx + 1)?;
            let orig: u64 = parse_field(parts.next(), path, idx + 1)?;
            if dense != original.len() {
                return Err(parse_err(path, idx + 1, "dense ids must be consecutive"));
            }
            original.push(orig);
        }
        Ok(Self::from_originals(original))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, path: &Path, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let field = field.ok_or_else(|| parse_err(path, line, "missing field"))?;
    field
        .trim()
        .parse()
        .map_err(|e| parse_err(path, line, format!("cannot parse {field:?}: {e}")))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

/// Reads a whitespace-separated edge list (`u v` or `u v w`, `#` comments).
///
/// Node ids may be sparse; they are remapped to `0..n` in ascending order.
/// With `weighted == false` any third column is ignored and every edge gets
/// weight 1.
pub fn load_edge_list(path: &Path, weighted: bool) -> Result<LoadedGraph> {
    parse_edge_list(open(path)?, path, weighted)
}

pub fn parse_edge_list(reader: impl BufRead, path: &Path, weighted: bool) -> Result<LoadedGraph> {
    let mut raw: Vec<(u64, u64, f64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut cols = body.split_whitespace();
        let u: u64 = parse_field(cols.next(), path, lineno)?;
        let v: u64 = parse_field(cols.next(), path, lineno)?;
        let w = match (weighted, cols.next()) {
            (true, Some(tok)) => {
                let w: f64 = parse_field(Some(tok), path, lineno)?;
                if w < 0.0 {
                    return Err(Error::validation(format!(
                        "{}:{lineno}: negative edge weight {w}",
                        path.display()
                    )));
                }
                if !w.is_finite() || w == 0.0 {
                    return Err(Error::validation(format!(
                        "{}:{lineno}: edge weight must be positive and finite, got {w}",
                        path.display()
                    )));
                }
                w
            }
            _ => 1.0,
        };
        raw.push((u, v, w));
    }
    let ids = IdMap::from_originals(raw.iter().flat_map(|&(u, v, _)| [u, v]).collect());
    let edges: Vec<_> = raw
        .iter()
        .map(|&(u, v, w)| (ids.dense(u).unwrap(), ids.dense(v).unwrap(), w))
        .collect();
    let graph = Graph::from_edges(ids.len(), &edges)?;
    Ok(LoadedGraph { graph, ids })
}

/// Writes each undirected edge once as `u v w` using original ids.
pub fn write_edge_list(g: &Graph, ids: &IdMap, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| io_err(path, e);
    for (u, v, wt) in g.edges() {
        writeln!(w, "{} {} {}", ids.original(u), ids.original(v), wt).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Ground-truth class per node.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    labels: Vec<usize>,
    k: usize,
}

impl LabelSet {
    /// Labels must lie in `0..k` and `k >= 2`.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::validation(format!("need at least 2 classes, got {k}")));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::validation(format!("label {bad} outside 0..{k}")));
        }
        Ok(Self { labels, k })
    }

    /// Builds a label set using `k = max label + 1` (at least 2).
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(2, |&m| (m + 1).max(2));
        Self::new(labels, k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

/// Reads `node_id label` pairs. Distinct label values are mapped to class ids
/// in ascending order; every node of `ids` must receive exactly one label.
pub fn load_labels(path: &Path, ids: &IdMap) -> Result<LabelSet> {
    let reader = open(path)?;
    let mut raw: Vec<Option<i64>> = vec![None; ids.len()];
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut cols = body.split_whitespace();
        let node: u64 = parse_field(cols.next(), path, lineno)?;
        let label: i64 = parse_field(cols.next(), path, lineno)?;
        // labels for nodes absent from the graph are ignored
        if let Some(u) = ids.dense(node) {
            if raw[u].is_some() {
                return Err(parse_err(path, lineno, format!("node {node} labeled twice")));
            }
            raw[u] = Some(label);
        }
    }
    let mut values: Vec<i64> = raw.iter().flatten().copied().collect();
    values.sort_unstable();
    values.dedup();
    let mut labels = Vec::with_capacity(raw.len());
    for (u, l) in raw.iter().enumerate() {
        let l = l.ok_or_else(|| {
            Error::validation(format!("node {} has no label in {}", ids.original(u), path.display()))
        })?;
        labels.push(values.binary_search(&l).unwrap());
    }
    LabelSet::new(labels, values.len().max(2))
}

/// Summary of the degree distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub n: usize,
    /// Undirected edge count.
    pub m: usize,
    /// Stored adjacency entries, `2 m`.
    pub nnz: usize,
    pub avg_degree: f64,
    pub median_degree: f64,
    pub min_degree: f64,
    pub max_degree: f64,
    pub max_over_n: f64,
    pub max_over_avg: f64,
}

/// Exact degree statistics; the median of an even-length list is the lower median.
pub fn degree_stats(g: &Graph) -> Result<DegreeStats> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::validation("degree statistics need at least one node"));
    }
    let mut d = g.degrees().to_vec();
    d.sort_by(f64::total_cmp);
    let avg = d.iter().sum::<f64>() / n as f64;
    let max = d[n - 1];
    Ok(DegreeStats {
        n,
        m: g.edge_count(),
        nnz: g.nnz(),
        avg_degree: avg,
        median_degree: d[(n - 1) / 2],
        min_degree: d[0],
        max_degree: max,
        max_over_n: max / n as f64,
        max_over_avg: if avg > 0.0 { max / avg } else { f64::INFINITY },
    })
}

/// Histogram of degrees as sorted `(degree, count)` pairs.
pub fn degree_histogram(g: &Graph) -> Vec<(f64, usize)> {
    let mut d = g.degrees().to_vec();
    d.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for x in d {
        match out.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// Column `u` of the transition matrix `A D^{-1}`: `{v: A_{v,u} / d_u}`.
pub fn transition_column(g: &Graph, u: usize) -> Result<SparseVector> {
    g.check_active_node(u)?;
    let du = g.degree(u);
    Ok(g.neighbors(u).map(|(v, w)| (v, w / du)).collect())
}

/// `x^T L x` with `L = I - beta D^{-1/2} A D^{-1/2}`.
pub fn laplacian_quadratic(g: &Graph, x: &[f64], beta: f64) -> Result<f64> {
    laplacian_quadratic_with_degrees(g, g.degrees(), x, beta)
}

/// As [`laplacian_quadratic`], normalizing by an explicit degree vector.
///
/// Used to compare a sparsified graph against its parent under the parent's
/// degrees. Rows of zero degree contribute only their diagonal term.
pub fn laplacian_quadratic_with_degrees(
    g: &Graph,
    degrees: &[f64],
    x: &[f64],
    beta: f64,
) -> Result<f64> {
    let n = g.node_count();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if degrees.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: degrees.len(),
        });
    }
    let mut diag = 0.0;
    let mut off = 0.0;
    for u in 0..n {
        if x[u] == 0.0 {
            continue;
        }
        diag += x[u] * x[u];
        if degrees[u] <= 0.0 {
            continue;
        }
        let su = x[u] / degrees[u].sqrt();
        for (v, w) in g.neighbors(u) {
            if x[v] != 0.0 && degrees[v] > 0.0 {
                off += w * su * x[v] / degrees[v].sqrt();
            }
        }
    }
    Ok(diag - beta * off)
}

/// `D^{-1/2} A D^{-1/2} x` for a sparse `x` supported on non-isolated nodes.
pub fn normalized_adjacency_apply(g: &Graph, x: &SparseVector) -> SparseVector {
    let mut out = SparseVector::new();
    for (u, xu) in x.iter() {
        let du = g.degree(u);
        if xu == 0.0 || du <= 0.0 {
            continue;
        }
        let su = xu / du.sqrt();
        for (v, w) in g.neighbors(u) {
            out.add(v, w * su / g.degree(v).sqrt());
        }
    }
    out
}

/// `Q x` with `Q = I - beta D^{-1/2} A D^{-1/2}`, matrix-free.
pub fn q_apply(g: &Graph, x: &SparseVector, beta: f64) -> SparseVector {
    let mut out = x.clone();
    out.axpy(-beta, &normalized_adjacency_apply(g, x));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str, weighted: bool) -> Result<LoadedGraph> {
        parse_edge_list(Cursor::new(text), Path::new("test.txt"), weighted)
    }

    #[test]
    fn path_graph_from_text() {
        let lg = parse("0 1\n1 2", false).unwrap();
        let g = &lg.graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degrees(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn duplicate_edges_collapse_keeping_last_weight() {
        let g = parse("0 1\n0 1", false).unwrap().graph;
        assert_eq!(g.edge_count(), 1);
        let g = parse("0 1 2.0\n1 0 5.0\n", true).unwrap().graph;
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), 5.0);
        assert_eq!(g.weight(1, 0), 5.0);
    }

    #[test]
    fn comments_self_loops_and_sparse_ids() {
        let lg = parse("# header\n10 30\n30 30\n\n77 77\n", false).unwrap();
        assert_eq!(lg.graph.node_count(), 3);
        assert_eq!(lg.graph.edge_count(), 1);
        // node 77 only had a self-loop: retained, isolated
        let iso = lg.ids.dense(77).unwrap();
        assert_eq!(lg.graph.degree(iso), 0.0);
        assert_eq!(lg.ids.original(0), 10);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("0 1\n1 x\n", false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0\n", false), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn negative_weight_is_validation_error() {
        assert!(matches!(parse("0 1 -1.0\n", true), Err(Error::Validation(_))));
    }

    #[test]
    fn transition_columns() {
        let s3 = Graph::from_unweighted(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = transition_column(&s3, 0).unwrap();
        assert_eq!(c.sorted(), vec![(1, 1.0 / 3.0), (2, 1.0 / 3.0), (3, 1.0 / 3.0)]);
        assert_eq!(transition_column(&s3, 1).unwrap().sorted(), vec![(0, 1.0)]);

        let g = parse("0 1 2.0\n0 2 1.0", true).unwrap().graph;
        let c = transition_column(&g, 0).unwrap();
        assert!((c.get(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.get(2) - 1.0 / 3.0).abs() < 1e-15);

        let iso = Graph::from_unweighted(2, &[]).unwrap();
        assert!(matches!(transition_column(&iso, 0), Err(Error::IsolatedNode(0))));
    }

    #[test]
    fn laplacian_quadratic_examples() {
        let p3 = Graph::from_unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(laplacian_quadratic(&p3, &[0.0; 3], 0.5).unwrap(), 0.0);
        assert_eq!(laplacian_quadratic(&p3, &[1.0, 0.0, 0.0], 0.5).unwrap(), 1.0);
        let e = Graph::from_unweighted(2, &[(0, 1)]).unwrap();
        assert!(laplacian_quadratic(&e, &[1.0, 1.0], 1.0).unwrap().abs() < 1e-15);
        assert!(matches!(
            laplacian_quadratic(&p3, &[1.0], 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degree_stats_star() {
        let s3 = Graph::from_unweighted(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let st = degree_stats(&s3).unwrap();
        assert_eq!(st.avg_degree, 1.5);
        assert_eq!(st.median_degree, 1.0);
        assert_eq!(st.max_degree, 3.0);
        assert_eq!(st.m, 3);
        assert_eq!(st.nnz, 6);
        assert_eq!(degree_histogram(&s3), vec![(1.0, 3), (3.0, 1)]);
    }

    #[test]
    fn lower_median_for_even_length() {
        // degrees (1, 2, 2, 1) sorted (1, 1, 2, 2): lower median 1
        let p4 = Graph::from_unweighted(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(degree_stats(&p4).unwrap().median_degree, 1.0);
    }

    #[test]
    fn labels_and_id_map_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lg = parse("5 9\n9 12\n", false).unwrap();
        let lpath = dir.path().join("labels.txt");
        std::fs::write(&lpath, "5 -1\n9 1\n12 -1\n").unwrap();
        let labels = load_labels(&lpath, &lg.ids).unwrap();
        assert_eq!(labels.as_slice(), &[0, 1, 0]);
        assert_eq!(labels.classes(), 2);

        let mpath = dir.path().join("ids.csv");
        lg.ids.write_csv(&mpath).unwrap();
        assert_eq!(IdMap::read_csv(&mpath).unwrap(), lg.ids);

        std::fs::write(&lpath, "5 0\n9 1\n").unwrap();
        assert!(matches!(load_labels(&lpath, &lg.ids), Err(Error::Validation(_))));
    }

    #[test]
    fn edge_list_write_read() {
        let dir = tempfile::tempdir().unwrap();
        let lg = parse("3 4 0.5\n4 8 2\n", true).unwrap();
        let p = dir.path().join("e.txt");
        write_edge_list(&lg.graph, &lg.ids, &p).unwrap();
        let back = load_edge_list(&p, true).unwrap();
        assert_eq!(back.graph, lg.graph);
        assert_eq!(back.ids, lg.ids);
    }
}
