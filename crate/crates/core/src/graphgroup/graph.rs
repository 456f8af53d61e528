use std::collections::VecDeque;
use std::io::{self, Write};

use itertools::Itertools;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::space::{distance, enumerate_points, point_index, Point, SpaceSpec};

/// Points at max-metric distance exactly 1: every offset pattern in
/// `{-1, 0, 1}^d` except the zero pattern.
pub fn neighbors(spec: &SpaceSpec, point: &Point) -> Result<Vec<Point>> {
    spec.check_point(point)?;
    let q = spec.q;
    let base = point.to_vec();
    let mut out = Vec::new();
    for offsets in (0..spec.d).map(|_| [0u64, 1, q - 1]).multi_cartesian_product() {
        if offsets.iter().all(|&o| o == 0) {
            continue;
        }
        out.push(Point::dense(base.iter().zip(&offsets).map(|(&x, &o)| (x + o) % q).collect()));
    }
    Ok(out)
}

/// A finite simple undirected graph on `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::UnknownVertex(u.max(v)));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    /// `0 - 1 - … - (k-1) - 0`.
    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParameter(format!("cycle needs at least 3 vertices (got {k})")));
        }
        Self::from_edges(k, (0..k).map(|i| (i, (i + 1) % k)))
    }

    /// Unit-distance graph of a space; vertex `i` is `point_from_index(spec, i)`,
    /// so the zero point is vertex 0.
    pub fn unit_graph(spec: &SpaceSpec, budget: &Budget) -> Result<Self> {
        let mut adj = Vec::new();
        for p in enumerate_points(spec, budget)? {
            let mut list = neighbors(spec, &p)?
                .iter()
                .map(|x| point_index(spec, x))
                .collect::<Result<Vec<_>>>()?;
            list.sort_unstable();
            list.dedup();
            adj.push(list);
        }
        Ok(Self { adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges oriented from the smaller to the larger endpoint, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.adj.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// Hop distances from `source`; `None` for unreachable vertices.
    pub fn bfs(&self, source: usize) -> Result<Vec<Option<usize>>> {
        self.check_vertex(source)?;
        let mut dist = vec![None; self.adj.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            let next = dist[x].unwrap() + 1;
            for &y in &self.adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(next);
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    /// One `u v` line per oriented edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

pub fn bfs_distance(graph: &Graph, a: usize, b: usize) -> Result<usize> {
    graph.check_vertex(b)?;
    graph.bfs(a)?[b].ok_or(Error::Disconnected(b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricAgreement {
    pub pairs_checked: usize,
    pub mismatches: usize,
    /// First disagreeing pair as point indices, with BFS and max-metric values.
    pub first_mismatch: Option<(usize, usize, Option<usize>, u64)>,
    pub pass: bool,
}

/// Compares BFS distance in the unit-distance graph with the max metric on
/// every ordered pair of points.
pub fn metric_agreement(spec: &SpaceSpec, budget: &Budget) -> Result<MetricAgreement> {
    let graph = Graph::unit_graph(spec, budget)?;
    let points: Vec<Point> = enumerate_points(spec, budget)?.collect();
    Budget::check((points.len() as u128).checked_pow(2), budget.max_pairs, "pairs")?;
    let (mut mismatches, mut first_mismatch) = (0, None);
    for (i, a) in points.iter().enumerate() {
        let bfs = graph.bfs(i)?;
        for (j, b) in points.iter().enumerate() {
            let metric = distance(spec, a, b)?;
            if bfs[j] != Some(metric as usize) {
                mismatches += 1;
                first_mismatch.get_or_insert((i, j, bfs[j], metric));
            }
        }
    }
    let n = points.len();
    Ok(MetricAgreement { pairs_checked: n * n, mismatches, first_mismatch, pass: mismatches == 0 })
}

/// Finite wedge: components glued at their vertex 0.
///
/// The shared basepoint is global vertex 0; vertex `v > 0` of component `c`
/// becomes `offsets[c] + v - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WedgeGraph {
    pub graph: Graph,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
}

impl WedgeGraph {
    pub fn new(components: &[Graph]) -> Result<Self> {
        if components.iter().any(|g| g.vertex_count() == 0) {
            return Err(Error::InvalidParameter("empty wedge component".into()));
        }
        let mut offsets = Vec::with_capacity(components.len());
        let mut next = 1;
        for g in components {
            offsets.push(next);
            next += g.vertex_count() - 1;
        }
        let map = |c: usize, v: usize| if v == 0 { 0 } else { offsets[c] + v - 1 };
        let edges: Vec<(usize, usize)> = components
            .iter()
            .enumerate()
            .flat_map(|(c, g)| g.edges().map(move |(u, v)| (c, u, v)))
            .map(|(c, u, v)| (map(c, u), map(c, v)))
            .collect();
        Ok(Self {
            graph: Graph::from_edges(next, edges)?,
            offsets,
            sizes: components.iter().map(Graph::vertex_count).collect(),
        })
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn vertex(&self, component: usize, local: usize) -> Result<usize> {
        match self.sizes.get(component) {
            Some(&n) if local < n => Ok(if local == 0 { 0 } else { self.offsets[component] + local - 1 }),
            _ => Err(Error::UnknownVertex(local)),
        }
    }
}

/// Rooted spanning tree. Tree edges are oriented from smaller to larger
/// endpoint and numbered in lexicographic order; that number is the letter id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    root: usize,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl SpanningTree {
    /// BFS from `root`, visiting neighbors in increasing order.
    pub fn bfs(graph: &Graph, root: usize) -> Result<Self> {
        graph.check_vertex(root)?;
        let mut parent = vec![None; graph.vertex_count()];
        let mut seen = vec![false; graph.vertex_count()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in graph.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Disconnected(v));
        }
        Self::from_parents(graph, root, parent)
    }

    pub fn from_parents(graph: &Graph, root: usize, parent: Vec<Option<usize>>) -> Result<Self> {
        graph.check_vertex(root)?;
        let n = graph.vertex_count();
        if parent.len() != n {
            return Err(Error::InvalidTree(format!("{} parent entries for {n} vertices", parent.len())));
        }
        if parent[root].is_some() {
            return Err(Error::InvalidTree("root has a parent".into()));
        }
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        for (v, p) in parent.iter().enumerate() {
            match *p {
                None if v != root => return Err(Error::InvalidTree(format!("vertex {v} has no parent"))),
                None => {}
                Some(u) if !graph.has_edge(u, v) => return Err(Error::NotAnEdge(u, v)),
                Some(u) => edges.push((u.min(v), u.max(v))),
            }
        }
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        for v in 0..n {
            // climb until a vertex of known depth; a walk longer than n is a cycle
            let mut path = Vec::new();
            let mut x = v;
            while depth[x] == usize::MAX {
                path.push(x);
                if path.len() > n {
                    return Err(Error::InvalidTree(format!("cycle through vertex {v}")));
                }
                x = parent[x].expect("non-root has a parent");
            }
            let mut d = depth[x];
            for &y in path.iter().rev() {
                d += 1;
                depth[y] = d;
            }
        }
        edges.sort_unstable();
        Ok(Self { root, parent, depth, edges })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    /// Oriented tree edges; the index is the letter id.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn letter_of(&self, u: usize, v: usize) -> Option<u32> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok().map(|i| i as u32)
    }

    pub fn is_tree_edge(&self, u: usize, v: usize) -> bool {
        self.parent.get(v) == Some(&Some(u)) || self.parent.get(u) == Some(&Some(v))
    }

    /// Vertices on the tree path from `u` to `v`, both included.
    pub fn path(&self, u: usize, v: usize) -> Vec<usize> {
        let (mut a, mut b) = (u, v);
        let (mut left, mut right) = (vec![a], vec![b]);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a].unwrap();
                left.push(a);
            } else {
                b = self.parent[b].unwrap();
                right.push(b);
            }
        }
        right.pop();
        left.extend(right.into_iter().rev());
        left
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{distance, point_from_index};

    fn tiny() -> SpaceSpec {
        SpaceSpec::custom(8, 2, 2, 1).unwrap()
    }

    #[test]
    fn neighbor_counts() {
        let s = tiny();
        let origin = Point::zeros(2);
        let list = neighbors(&s, &origin).unwrap();
        assert_eq!(list.len(), 8);
        assert!(list.iter().all(|x| distance(&s, &origin, x).unwrap() == 1));
        let g = Graph::unit_graph(&s, &Budget::default()).unwrap();
        for u in 0..g.vertex_count() {
            assert_eq!(g.neighbors(u).len(), 8);
            for &v in g.neighbors(u) {
                assert!(g.has_edge(v, u));
            }
        }
        assert_eq!(g.edge_count(), 64 * 8 / 2);
        let s3 = SpaceSpec::custom(8, 4, 2, 2).unwrap();
        assert_eq!(neighbors(&s3, &Point::zeros(4)).unwrap().len(), 80);
    }

    #[test]
    fn bfs_matches_max_metric_example() {
        let s = tiny();
        let g = Graph::unit_graph(&s, &Budget::default()).unwrap();
        let b = point_index(&s, &Point::dense(vec![3, 7])).unwrap();
        assert_eq!(bfs_distance(&g, 0, b).unwrap(), 3);
        assert_eq!(point_from_index(&s, 0), Point::zeros(2));
    }

    #[test]
    fn wedge_distances_add_through_basepoint() {
        let w = WedgeGraph::new(&[Graph::cycle(4).unwrap(), Graph::cycle(6).unwrap()]).unwrap();
        assert_eq!(w.graph.vertex_count(), 1 + 3 + 5);
        let a = w.vertex(0, 2).unwrap();
        let b = w.vertex(1, 3).unwrap();
        assert_eq!(bfs_distance(&w.graph, a, b).unwrap(), 2 + 3);
        assert_eq!(w.vertex(1, 0).unwrap(), 0);
        assert!(w.vertex(2, 0).is_err());
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(bfs_distance(&g, 0, 3), Err(Error::Disconnected(3)));
        assert_eq!(SpanningTree::bfs(&g, 0), Err(Error::Disconnected(2)));
    }

    #[test]
    fn spanning_tree_shape() {
        let g = Graph::unit_graph(&tiny(), &Budget::default()).unwrap();
        let t = SpanningTree::bfs(&g, 0).unwrap();
        assert_eq!(t.parent(0), None);
        assert_eq!(t.edges().len(), g.vertex_count() - 1);
        assert_eq!(t.depth(point_index(&tiny(), &Point::dense(vec![4, 4])).unwrap()), 4);
        assert_eq!(t, SpanningTree::bfs(&g, 0).unwrap());
    }

    #[test]
    fn explicit_tree_validation() {
        let c = Graph::cycle(4).unwrap();
        let t = SpanningTree::from_parents(&c, 0, vec![None, Some(0), Some(1), Some(2)]).unwrap();
        assert_eq!(t.edges(), &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(t.path(3, 0), vec![3, 2, 1, 0]);
        assert_eq!(t.letter_of(3, 2), Some(2));
        assert!(t.is_tree_edge(2, 1));
        assert!(!t.is_tree_edge(3, 0));
        assert_eq!(
            SpanningTree::from_parents(&c, 0, vec![None, Some(2), Some(1), Some(2)]).unwrap_err(),
            Error::InvalidTree("cycle through vertex 1".into())
        );
        assert_eq!(SpanningTree::from_parents(&c, 0, vec![None, Some(0), Some(0), Some(2)]), Err(Error::NotAnEdge(0, 2)));
    }

    #[test]
    fn edge_list_export() {
        let mut out = Vec::new();
        Graph::cycle(4).unwrap().write_edge_list(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0 1\n0 3\n1 2\n2 3\n");
    }
}
