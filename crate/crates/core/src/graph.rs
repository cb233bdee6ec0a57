//! Undirected simple graphs whose edges are the bandit arms.

use std::collections::HashSet;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Arm index, `1..=d`.
    pub id: usize,
    pub u: usize,
    pub v: usize,
    /// Edge length, used as the base transmission time in congestion games.
    pub beta: f64,
}

/// An undirected simple graph with edges numbered `1..=d`, plus the optional
/// node roles carried by edge-list files.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
    pub start: Option<usize>,
    pub goal: Option<usize>,
    pub terminals: Vec<usize>,
}

impl Graph {
    /// Builds a graph from `(u, v, beta)` triples; edge `k` of the input
    /// becomes arm `k + 1`.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let edges = edges
            .into_iter()
            .enumerate()
            .map(|(k, (u, v, beta))| Edge { id: k + 1, u, v, beta })
            .collect();
        Self::from_edges(n_nodes, edges)
    }

    fn from_edges(n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut pairs = HashSet::new();
        for (k, e) in edges.iter().enumerate() {
            if e.id != k + 1 {
                return Err(Error::InvalidGraph(format!(
                    "edge ids must be 1..=d without gaps: expected {}, found {}",
                    k + 1,
                    e.id
                )));
            }
            if e.u >= n_nodes || e.v >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge {} references a node outside 0..{n_nodes}",
                    e.id
                )));
            }
            if e.u == e.v {
                return Err(Error::InvalidGraph(format!("edge {} is a self-loop", e.id)));
            }
            if !(e.beta >= 0.0 && e.beta.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} has invalid length {}",
                    e.id, e.beta
                )));
            }
            if !pairs.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} duplicates the pair ({}, {})",
                    e.id, e.u, e.v
                )));
            }
        }
        Ok(Graph {
            n_nodes,
            edges,
            start: None,
            goal: None,
            terminals: Vec::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge with arm index `id` (1-based).
    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id - 1]
    }

    /// Edge lengths indexed by arm (`betas()[i - 1]` is arm `i`).
    pub fn betas(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.beta).collect()
    }

    /// Incident edge ids per node, ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for e in &self.edges {
            adj[e.u].push(e.id);
            adj[e.v].push(e.id);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &e in &adj[x] {
                let y = self.other_end(e, x);
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub(crate) fn other_end(&self, edge: usize, x: usize) -> usize {
        let e = self.edge(edge);
        if e.u == x {
            e.v
        } else {
            e.u
        }
    }
}

/// An `rows × cols` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidGraph(format!(
                "grid must be at least 2x2, got {rows}x{cols}"
            )));
        }
        Ok(GridSpec { rows, cols })
    }

    pub fn node(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Top-left corner.
    pub fn start(&self) -> usize {
        0
    }

    /// Bottom-right corner, diagonal to [`GridSpec::start`].
    pub fn goal(&self) -> usize {
        self.rows * self.cols - 1
    }

    pub fn corners(&self) -> Vec<usize> {
        vec![
            self.node(0, 0),
            self.node(0, self.cols - 1),
            self.node(self.rows - 1, 0),
            self.node(self.rows - 1, self.cols - 1),
        ]
    }
}

/// Unit-length lattice. Nodes are numbered row-major; at each node the edge
/// to the right is numbered before the edge downwards.
pub fn build_grid(spec: GridSpec) -> Graph {
    let mut edges = Vec::with_capacity(2 * spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let v = spec.node(r, c);
            if c + 1 < spec.cols {
                edges.push((v, spec.node(r, c + 1), 1.0));
            }
            if r + 1 < spec.rows {
                edges.push((v, spec.node(r + 1, c), 1.0));
            }
        }
    }
    let mut g = Graph::new(spec.rows * spec.cols, edges).expect("lattice is a simple graph");
    g.start = Some(spec.start());
    g.goal = Some(spec.goal());
    g.terminals = spec.corners();
    g
}

/// Parses the edge-list format:
///
/// ```text
/// graph <n_nodes> <n_edges>
/// <edge_id> <u> <v> <beta>      (0-based nodes, edge ids 1..=d in order)
/// start <node> | goal <node> | terminal <node>   (optional)
/// ```
///
/// Lines starting with `#` are ignored.
pub fn read_graph<R: BufRead>(reader: R) -> Result<Graph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    let mut pairs = HashSet::new();
    let (mut start, mut goal, mut terminals) = (None, None, Vec::new());

    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let Some((n_nodes, n_edges, _)) = header else {
            match f.as_slice() {
                ["graph", n, m] => {
                    header = Some((num(n, lineno)?, num(m, lineno)?, lineno));
                    continue;
                }
                _ => return Err(Error::parse(lineno, "expected `graph <n_nodes> <n_edges>`")),
            }
        };
        let node = |s: &str| -> Result<usize> {
            let x = num(s, lineno)?;
            if x >= n_nodes {
                return Err(Error::parse(lineno, format!("node {x} outside 0..{n_nodes}")));
            }
            Ok(x)
        };
        match f.as_slice() {
            ["start", x] => start = Some(node(x)?),
            ["goal", x] => goal = Some(node(x)?),
            ["terminal", x] => terminals.push(node(x)?),
            [id, u, v, beta] => {
                let id = num(id, lineno)?;
                if id != edges.len() + 1 {
                    return Err(Error::parse(
                        lineno,
                        format!("expected edge id {}, found {id}", edges.len() + 1),
                    ));
                }
                if edges.len() == n_edges {
                    return Err(Error::parse(lineno, "more edges than declared"));
                }
                let (u, v) = (node(u)?, node(v)?);
                if u == v {
                    return Err(Error::parse(lineno, "self-loop"));
                }
                let beta: f64 = beta
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("`{beta}` is not a number")))?;
                if !(beta >= 0.0 && beta.is_finite()) {
                    return Err(Error::parse(lineno, "edge length must be finite and nonnegative"));
                }
                if !pairs.insert((u.min(v), u.max(v))) {
                    return Err(Error::InvalidGraph(format!(
                        "duplicate edge ({u}, {v}) at line {lineno}"
                    )));
                }
                edges.push(Edge { id, u, v, beta });
            }
            _ => return Err(Error::parse(lineno, format!("unrecognised line `{line}`"))),
        }
    }
    let Some((n_nodes, n_edges, hline)) = header else {
        return Err(Error::parse(1, "missing `graph` header"));
    };
    if edges.len() != n_edges {
        return Err(Error::parse(
            hline,
            format!("header declares {n_edges} edges, found {}", edges.len()),
        ));
    }
    let mut g = Graph::from_edges(n_nodes, edges)?;
    g.start = start;
    g.goal = goal;
    g.terminals = terminals;
    Ok(g)
}

fn num(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("`{s}` is not a nonnegative integer")))
}
