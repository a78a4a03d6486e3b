//! Weighted graphs over integer-indexed vertices.
//!
//! Adjacency is stored row-sparse. Text input is one edge per line,
//! `from to weight`, with `#` comments; a JSON equivalent is also accepted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedGraph {
    vertex_count: usize,
    directed: bool,
    /// rows[x] = list of (target, weight), weight > 0.
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(vertex_count: usize, directed: bool) -> Self {
        Self {
            vertex_count,
            directed,
            rows: vec![Vec::new(); vertex_count],
        }
    }

    /// Insert an edge; undirected graphs store both orientations (a self-loop
    /// is stored once). Zero-weight edges are dropped, negative weights are
    /// rejected.
    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64) -> Result<()> {
        if from >= self.vertex_count || to >= self.vertex_count {
            return Err(Error::Structural(format!(
                "edge ({from}, {to}) out of range for {} vertices",
                self.vertex_count
            )));
        }
        if !(weight >= 0.0) {
            return Err(Error::Structural(format!(
                "edge ({from}, {to}) has invalid weight {weight}"
            )));
        }
        if weight == 0.0 {
            return Ok(());
        }
        self.rows[from].push((to, weight));
        if !self.directed && from != to {
            self.rows[to].push((from, weight));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Row sum V(x) = sum_y A(x, y).
    pub fn out_weight(&self, x: usize) -> f64 {
        self.rows[x].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.rows[from]
            .iter()
            .find(|&&(t, _)| t == to)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (xi, row) in y.iter_mut().zip(&self.rows) {
            *xi = row.iter().map(|&(j, w)| w * x[j]).sum();
        }
    }

    /// Multiply every weight by a constant c > 0.
    pub fn scaled(&self, c: f64) -> Self {
        let mut g = self.clone();
        for row in &mut g.rows {
            for e in row {
                e.1 *= c;
            }
        }
        g
    }

    /// Strong connectivity on the positive-weight support, checked by
    /// breadth-first reachability in both directions from vertex 0.
    pub fn is_irreducible(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let forward = self.reach(|x| self.rows[x].iter().map(|&(t, _)| t).collect());
        if !forward {
            return false;
        }
        let mut reverse = vec![Vec::new(); self.vertex_count];
        for (x, row) in self.rows.iter().enumerate() {
            for &(t, _) in row {
                reverse[t].push(x);
            }
        }
        self.reach(|x| reverse[x].clone())
    }

    fn reach<F: Fn(usize) -> Vec<usize>>(&self, neighbours: F) -> bool {
        let mut seen = vec![false; self.vertex_count];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for t in neighbours(x) {
                if !seen[t] {
                    seen[t] = true;
                    count += 1;
                    queue.push_back(t);
                }
            }
        }
        count == self.vertex_count
    }

    /// Parse the `from to weight` edge-list format. The vertex count is one
    /// plus the largest id mentioned unless given explicitly.
    pub fn from_edge_list(text: &str, directed: bool) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_id = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected `from to weight`, got {raw:?}",
                    lineno + 1
                )));
            }
            let from: usize = fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let to: usize = fields[1]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let w: f64 = fields[2]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            max_id = max_id.max(from).max(to);
            edges.push((from, to, w));
        }
        if edges.is_empty() {
            return Err(Error::Parse("edge list is empty".into()));
        }
        let mut g = WeightedGraph::new(max_id + 1, directed);
        for (from, to, w) in edges {
            g.add_edge(from, to, w)?;
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GraphJson = serde_json::from_str(text)?;
        let mut g = WeightedGraph::new(spec.vertex_count, spec.directed);
        for e in spec.edges {
            g.add_edge(e.0, e.1, e.2)?;
        }
        Ok(g)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    vertex_count: usize,
    #[serde(default)]
    directed: bool,
    edges: Vec<(usize, usize, f64)>,
}

// Builders used throughout the tests and the demos.

/// Path graph 0 - 1 - ... - (n-1) with unit weights.
pub fn path_graph(n: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new(n, false);
    for i in 0..n.saturating_sub(1) {
        g.add_edge(i, i + 1, 1.0).unwrap();
    }
    g
}

/// Cycle graph on n vertices with unit weights.
pub fn cycle_graph(n: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new(n, false);
    for i in 0..n {
        g.add_edge(i, (i + 1) % n, 1.0).unwrap();
    }
    g
}

/// The integer lattice truncated to [-half_width, half_width], with unit
/// nearest-neighbour edges and a unit self-loop at every site except the
/// origin. Vertex `x` maps to index `x + half_width`.
pub fn lattice_with_loops(half_width: usize) -> WeightedGraph {
    let n = 2 * half_width + 1;
    let mut g = WeightedGraph::new(n, false);
    for i in 0..n - 1 {
        g.add_edge(i, i + 1, 1.0).unwrap();
    }
    for i in 0..n {
        if i != half_width {
            g.add_edge(i, i, 1.0).unwrap();
        }
    }
    g
}

/// Half-line truncated to {0, ..., n_max} with origin self-loop weight gamma.
pub fn halfline_truncated(gamma: f64, n_max: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new(n_max + 1, false);
    for i in 0..n_max {
        g.add_edge(i, i + 1, 1.0).unwrap();
    }
    if gamma > 0.0 {
        g.add_edge(0, 0, gamma).unwrap();
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_roundtrip() {
        let text = "# a comment\n0 1 1.0\n1 2 2.5  # trailing comment\n";
        let g = WeightedGraph::from_edge_list(text, false).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.weight(1, 0), 1.0);
        assert_eq!(g.weight(1, 2), 2.5);
        assert_eq!(g.weight(2, 1), 2.5);
    }

    #[test]
    fn bad_edge_line_is_rejected() {
        assert!(WeightedGraph::from_edge_list("0 1\n", false).is_err());
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let ok = r#"{"vertex_count": 2, "edges": [[0, 1, 1.0]]}"#;
        assert!(WeightedGraph::from_json(ok).is_ok());
        let bad = r#"{"vertex_count": 2, "edges": [], "extra": 1}"#;
        assert!(WeightedGraph::from_json(bad).is_err());
    }

    #[test]
    fn path_graph_is_irreducible_but_split_graph_is_not() {
        assert!(path_graph(5).is_irreducible());
        let mut g = WeightedGraph::new(4, false);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(2, 3, 1.0).unwrap();
        assert!(!g.is_irreducible());
    }

    #[test]
    fn directed_one_way_pair_is_reducible() {
        let mut g = WeightedGraph::new(2, true);
        g.add_edge(0, 1, 1.0).unwrap();
        assert!(!g.is_irreducible());
        g.add_edge(1, 0, 1.0).unwrap();
        assert!(g.is_irreducible());
    }

    #[test]
    fn lattice_with_loops_has_no_loop_at_origin() {
        let g = lattice_with_loops(3);
        assert_eq!(g.weight(3, 3), 0.0); // origin index = half_width
        assert_eq!(g.weight(0, 0), 1.0);
        assert_eq!(g.weight(4, 4), 1.0);
        assert!(g.is_irreducible());
    }
}
