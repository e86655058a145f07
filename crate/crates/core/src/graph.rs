//! Graph and signal data model.
//!
//! A [`Graph`] is connected, undirected, weighted and simple. Everything
//! downstream works on the dense combinatorial Laplacian `L = D - W`, and
//! oscillation is measured by the Dirichlet form `fᵀLf`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: DMatrix<f64>,
    coords: Option<Vec<[f64; 2]>>,
}

impl Graph {
    /// Builds and validates a graph. Edges may be given in either
    /// orientation; they are stored with `i < j`, sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one vertex".into()));
        }
        let mut seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in edges {
            for idx in [e.i, e.j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            if e.i == e.j {
                return Err(Error::SelfLoop(e.i));
            }
            if !(e.w > 0.0) || !e.w.is_finite() {
                return Err(Error::NonPositiveWeight { i: e.i, j: e.j, weight: e.w });
            }
            let key = (e.i.min(e.j), e.i.max(e.j));
            if seen.insert(key, e.w).is_some() {
                return Err(Error::DuplicateEdge { i: key.0, j: key.1 });
            }
        }
        let edges: Vec<Edge> = seen.into_iter().map(|((i, j), w)| Edge { i, j, w }).collect();
        let mut adjacency = DMatrix::zeros(n, n);
        for e in &edges {
            adjacency[(e.i, e.j)] = e.w;
            adjacency[(e.j, e.i)] = e.w;
        }
        let g = Graph { n, edges, adjacency, coords: None };
        let components = g.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    pub fn with_coords(mut self, coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: coords.len() });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.adjacency.row(v).sum()
    }

    pub fn laplacian(&self) -> LaplacianMatrix {
        laplacian(self)
    }

    fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        uf.components()
    }
}

/// Simple disjoint-set forest, also used by the sparsifier's repair step.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    count: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), count: n }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        self.count -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.count
    }
}

/// A real value attached to every vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Signal(DVector<f64>);

impl From<Signal> for Vec<f64> {
    fn from(s: Signal) -> Self {
        s.0.as_slice().to_vec()
    }
}

impl Signal {
    pub fn new(values: DVector<f64>) -> Self {
        Signal(values)
    }

    pub fn zeros(n: usize) -> Self {
        Signal(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `‖self − other‖₂ / ‖self‖₂`.
    pub fn relative_error(&self, other: &Signal) -> f64 {
        let denom = self.norm();
        let diff = (&self.0 - &other.0).norm();
        if denom == 0.0 {
            diff
        } else {
            diff / denom
        }
    }

    pub fn rmse(&self, other: &Signal) -> f64 {
        ((&self.0 - &other.0).norm_squared() / self.len() as f64).sqrt()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: self.len() });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for Signal {
    fn from(v: Vec<f64>) -> Self {
        Signal(DVector::from_vec(v))
    }
}

impl From<DVector<f64>> for Signal {
    fn from(v: DVector<f64>) -> Self {
        Signal(v)
    }
}

/// Dense combinatorial Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(DMatrix<f64>);

impl LaplacianMatrix {
    /// Wraps a matrix after checking symmetry, zero row sums and the sign of
    /// the off-diagonal entries, each relative to `tol · max|L|`.
    pub fn from_matrix(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let scale = crate::linalg::max_abs(&m).max(f64::MIN_POSITIVE);
        let n = m.nrows();
        if crate::linalg::asymmetry(&m) > tol * scale {
            return Err(Error::InvalidMatrix("not symmetric".into()));
        }
        for i in 0..n {
            let row_sum: f64 = m.row(i).sum();
            if row_sum.abs() > tol * scale * (n as f64).max(1.0) {
                return Err(Error::InvalidMatrix(format!("row {i} sums to {row_sum}")));
            }
            for j in 0..n {
                if i != j && m[(i, j)] > tol * scale {
                    return Err(Error::PositiveOffDiagonal { i, j, value: m[(i, j)] });
                }
            }
        }
        Ok(LaplacianMatrix(m))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        LaplacianMatrix(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.0[(v, v)]
    }

    pub fn max_row_sum_residual(&self) -> f64 {
        (0..self.n()).map(|i| self.0.row(i).sum().abs()).fold(0.0, f64::max)
    }
}

pub fn laplacian(g: &Graph) -> LaplacianMatrix {
    let mut l = -g.adjacency.clone();
    for i in 0..g.n {
        l[(i, i)] = g.degree(i);
    }
    LaplacianMatrix(l)
}

/// `S₂(f) = fᵀLf`.
pub fn dirichlet_energy(l: &LaplacianMatrix, f: &Signal) -> Result<f64> {
    f.check_len(l.n())?;
    Ok(quadratic_form(l.matrix(), f.as_vector()))
}

pub(crate) fn quadratic_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x))
}

// ---------------------------------------------------------------------------
// edge-list text format

/// Parses the edge-list interchange format.
///
/// Each non-comment line is `i j [w]` with 0-based indices and a default
/// weight of 1. A line `%signal` switches to the attribute block, whose
/// lines are `i value`. `#` starts a comment. The vertex count is one more
/// than the largest index seen in the edge block.
pub fn parse_graph(text: &str) -> Result<(Graph, Option<Signal>)> {
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut attrs: BTreeMap<usize, f64> = BTreeMap::new();
    let mut in_signal = false;
    let mut n = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: lineno + 1, message };
        if line.eq_ignore_ascii_case("%signal") {
            in_signal = true;
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let index = |s: &str| s.parse::<usize>().map_err(|e| err(format!("bad index {s:?}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number {s:?}: {e}")));
        if in_signal {
            if fields.len() != 2 {
                return Err(err(format!("expected `i value`, got {line:?}")));
            }
            let i = index(fields[0])?;
            let v = real(fields[1])?;
            if attrs.insert(i, v).is_some() {
                return Err(err(format!("vertex {i} has two signal values")));
            }
        } else {
            if !(2..=3).contains(&fields.len()) {
                return Err(err(format!("expected `i j [w]`, got {line:?}")));
            }
            let i = index(fields[0])?;
            let j = index(fields[1])?;
            let w = if fields.len() == 3 { real(fields[2])? } else { 1.0 };
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !(w > 0.0) {
                return Err(Error::NonPositiveWeight { i, j, weight: w });
            }
            let key = (i.min(j), i.max(j));
            if let Some(&prev) = edges.get(&key) {
                if prev != w {
                    return Err(Error::ConflictingDuplicate { i: key.0, j: key.1, first: prev, second: w });
                }
            }
            edges.insert(key, w);
            n = n.max(key.1 + 1);
        }
    }
    if edges.is_empty() {
        return Err(Error::Parse { line: 0, message: "no edges".into() });
    }
    let graph = Graph::new(n, edges.into_iter().map(|((i, j), w)| Edge { i, j, w }))?;
    let signal = if attrs.is_empty() {
        None
    } else {
        let mut values = vec![0.0; n];
        for (&i, &v) in &attrs {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            values[i] = v;
        }
        if attrs.len() != n {
            let missing = (0..n).find(|i| !attrs.contains_key(i)).unwrap();
            return Err(Error::Parse { line: 0, message: format!("signal has no value for vertex {missing}") });
        }
        Some(Signal::from(values))
    };
    Ok((graph, signal))
}

pub fn write_edge_list(g: &Graph, signal: Option<&Signal>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} vertices, {} edges", g.n(), g.edges().len());
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {}", e.i, e.j, e.w);
    }
    if let Some(s) = signal {
        out.push_str("%signal\n");
        for (i, v) in s.values().iter().enumerate() {
            let _ = writeln!(out, "{i} {v}");
        }
    }
    out
}

// ---------------------------------------------------------------------------
// generators

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Ring { n: usize },
    Path { n: usize },
    Complete { n: usize },
    Grid { rows: usize, cols: usize },
    RandomGeometric { n: usize, radius: f64 },
}

/// Deterministic synthetic graph. Only the random geometric kind consumes
/// `seed`.
pub fn generate(kind: GraphKind, seed: u64) -> Result<Graph> {
    let unit = |i, j| Edge { i, j, w: 1.0 };
    match kind {
        GraphKind::Ring { n } => {
            if n < 3 {
                return Err(Error::InvalidParameter(format!("ring needs n >= 3, got {n}")));
            }
            Graph::new(n, (0..n).map(|i| unit(i, (i + 1) % n)))
        }
        GraphKind::Path { n } => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!("path needs n >= 2, got {n}")));
            }
            Graph::new(n, (0..n - 1).map(|i| unit(i, i + 1)))
        }
        GraphKind::Complete { n } => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!("complete graph needs n >= 2, got {n}")));
            }
            Graph::new(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| unit(i, j))))
        }
        GraphKind::Grid { rows, cols } => {
            if rows == 0 || cols == 0 || rows * cols < 2 {
                return Err(Error::InvalidParameter(format!("grid {rows}x{cols} has fewer than 2 vertices")));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push(unit(id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push(unit(id(r, c), id(r + 1, c)));
                    }
                }
            }
            let span = |k: usize, len: usize| if len > 1 { k as f64 / (len - 1) as f64 } else { 0.0 };
            let coords = (0..rows * cols).map(|v| [span(v % cols, cols), span(v / cols, rows)]).collect();
            Graph::new(rows * cols, edges)?.with_coords(coords)
        }
        GraphKind::RandomGeometric { n, radius } => random_geometric(n, radius, seed),
    }
}

/// Points uniform in the unit square, joined when closer than the radius,
/// with Gaussian-kernel weights `exp(-(d/r)²)`. The radius grows by 10%
/// until the graph is connected.
fn random_geometric(n: usize, radius: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("random geometric graph needs n >= 2, got {n}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let mut r = radius;
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
                if d < r {
                    edges.push(Edge { i, j, w: (-(d / r).powi(2)).exp() });
                }
            }
        }
        match Graph::new(n, edges) {
            Ok(g) => return g.with_coords(points),
            Err(Error::Disconnected { .. }) => r *= 1.1,
            Err(e) => return Err(e),
        }
    }
}
