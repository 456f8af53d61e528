use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::Serialize;

use super::free_group::{free_reduce, GroupElement, Letter};
use super::graph::{Graph, SpanningTree};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Product of tree letters along the root-to-`v` path.
pub fn vertex_image(tree: &SpanningTree, v: usize) -> Result<GroupElement> {
    if v >= tree.vertex_count() {
        return Err(Error::UnknownVertex(v));
    }
    let mut letters = Vec::with_capacity(tree.depth(v));
    let mut x = v;
    while let Some(p) = tree.parent(x) {
        let id = tree.letter_of(p, x).expect("tree edge has a letter");
        // traversed p -> x; the letter is oriented small -> large
        letters.push(Letter::new(id, p > x));
        x = p;
    }
    letters.reverse();
    Ok(free_reduce(letters))
}

/// Image of the oriented edge `u -> v`: the tree path from `u` to `v`.
pub fn edge_image(graph: &Graph, tree: &SpanningTree, u: usize, v: usize) -> Result<GroupElement> {
    if !graph.has_edge(u, v) {
        return Err(Error::NotAnEdge(u, v));
    }
    Ok(vertex_image(tree, u)?.inverse().mul(&vertex_image(tree, v)?))
}

/// Every graph edge, oriented small to large, with its group element.
#[derive(Debug, Clone)]
pub struct GeneratorImage {
    pub edges: Vec<((usize, usize), GroupElement)>,
}

impl GeneratorImage {
    pub fn new(graph: &Graph, tree: &SpanningTree) -> Result<Self> {
        let images: Vec<GroupElement> = (0..graph.vertex_count()).map(|v| vertex_image(tree, v)).collect::<Result<_>>()?;
        let edges = graph
            .edges()
            .map(|(u, v)| ((u, v), images[u].inverse().mul(&images[v])))
            .collect();
        Ok(Self { edges })
    }

    /// Images and their inverses, deduplicated, identity removed.
    pub fn symmetric_set(&self) -> Vec<GroupElement> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (_, g) in &self.edges {
            for x in [g.clone(), g.inverse()] {
                if !x.is_identity() && seen.insert(x.clone()) {
                    out.push(x);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FundamentalCycle {
    /// The non-tree edge closing the cycle.
    pub edge: (usize, usize),
    /// Tree path from `edge.1` back to `edge.0`.
    pub vertices: Vec<usize>,
    /// The cycle visits no vertex twice and has at least three vertices.
    pub simple: bool,
    /// The product of edge images around the cycle reduces to the identity.
    pub image_is_identity: bool,
}

/// One cycle per non-tree edge: the edge followed by the tree path back.
pub fn fundamental_cycles(graph: &Graph, tree: &SpanningTree) -> Result<Vec<FundamentalCycle>> {
    let mut out = Vec::new();
    for (u, v) in graph.edges() {
        if tree.is_tree_edge(u, v) {
            continue;
        }
        let back = tree.path(v, u);
        let distinct: HashSet<usize> = back.iter().copied().collect();
        let simple = distinct.len() == back.len() && back.len() >= 3;
        let mut product = edge_image(graph, tree, u, v)?;
        for w in back.windows(2) {
            product = product.mul(&edge_image(graph, tree, w[0], w[1])?);
        }
        out.push(FundamentalCycle { edge: (u, v), vertices: back, simple, image_is_identity: product.is_identity() });
    }
    Ok(out)
}

/// Default cap on the number of cached ball elements.
pub const DEFAULT_MAX_BALL: usize = 2_000_000;

/// Word metric of a free group with respect to a finite symmetric generating set.
///
/// Lengths are decided by meet-in-the-middle: a geodesic of length `k` splits
/// into a prefix of length `r1` and a suffix of length `k - r1`, so `g` has
/// length `k` iff `g·b` lies in the sphere of radius `r1` for some `b` in the
/// sphere of radius `k - r1`. Spheres around the identity are cached and grown
/// lazily up to `max_elements`. Candidates start at the free-length lower
/// bound `ceil(|g| / max generator length)`.
#[derive(Debug, Clone)]
pub struct WordMetric {
    generators: Vec<GroupElement>,
    spheres: Vec<Vec<GroupElement>>,
    lengths: HashMap<GroupElement, usize>,
    max_elements: usize,
    max_generator_len: usize,
}

impl WordMetric {
    pub fn new(generators: impl IntoIterator<Item = GroupElement>, max_elements: usize) -> Self {
        let mut set: Vec<GroupElement> = Vec::new();
        let mut seen = HashSet::new();
        for g in generators {
            for x in [g.inverse(), g] {
                if !x.is_identity() && seen.insert(x.clone()) {
                    set.push(x);
                }
            }
        }
        set.sort();
        let max_generator_len = set.iter().map(GroupElement::len).max().unwrap_or(0);
        Self {
            generators: set,
            spheres: vec![vec![GroupElement::identity()]],
            lengths: HashMap::from([(GroupElement::identity(), 0)]),
            max_elements,
            max_generator_len,
        }
    }

    pub fn from_graph(graph: &Graph, tree: &SpanningTree, max_elements: usize) -> Result<Self> {
        Ok(Self::new(GeneratorImage::new(graph, tree)?.symmetric_set(), max_elements))
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn cached_radius(&self) -> usize {
        self.spheres.len() - 1
    }

    fn grow(&mut self) -> bool {
        let r = self.spheres.len();
        let mut next = Vec::new();
        let mut fresh = HashSet::new();
        for x in &self.spheres[r - 1] {
            for s in &self.generators {
                let y = x.mul(s);
                if !self.lengths.contains_key(&y) && fresh.insert(y.clone()) {
                    if self.lengths.len() + fresh.len() > self.max_elements {
                        return false;
                    }
                    next.push(y);
                }
            }
        }
        for y in &next {
            self.lengths.insert(y.clone(), r);
        }
        self.spheres.push(next);
        true
    }

    fn ensure_radius(&mut self, radius: usize) -> bool {
        while self.cached_radius() < radius {
            if self.spheres.last().is_some_and(Vec::is_empty) {
                // finite group: nothing further to cache
                return true;
            }
            if !self.grow() {
                return false;
            }
        }
        true
    }

    /// `Ok(Some(k))` for the word length `k <= budget`, `Ok(None)` when every
    /// product of at most `budget` generators differs from `g`, and
    /// `Err(SearchExhausted)` when the ball cache cannot decide.
    pub fn word_length(&mut self, g: &GroupElement, budget: usize) -> Result<Option<usize>> {
        if g.is_identity() {
            return Ok(Some(0));
        }
        if self.generators.is_empty() {
            return Ok(None);
        }
        let start = g.len().div_ceil(self.max_generator_len);
        for k in start..=budget {
            if !self.ensure_radius(k.div_ceil(2)) {
                return Err(Error::SearchExhausted(k));
            }
            let r1 = k.min(self.cached_radius());
            let r2 = k - r1;
            let Some(sphere) = self.spheres.get(r2) else { continue };
            if sphere.iter().any(|b| self.lengths.get(&g.mul(b)) == Some(&r1)) {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// All elements of length at most `radius`.
    pub fn ball(&mut self, radius: usize) -> Result<HashMap<GroupElement, usize>> {
        if !self.ensure_radius(radius) {
            return Err(Error::SearchExhausted(radius));
        }
        Ok(self.lengths.iter().filter(|(_, &l)| l <= radius).map(|(g, &l)| (g.clone(), l)).collect())
    }
}

pub fn word_length(generators: &GeneratorImage, g: &GroupElement, budget: usize) -> Result<Option<usize>> {
    WordMetric::new(generators.symmetric_set(), DEFAULT_MAX_BALL).word_length(g, budget)
}

/// Cayley ball of radius `radius` in the free group.
pub fn cayley_ball(generators: &[GroupElement], radius: usize) -> Result<HashMap<GroupElement, usize>> {
    WordMetric::new(generators.iter().cloned(), DEFAULT_MAX_BALL).ball(radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Match,
    Mismatch,
    OverBudget,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairCheck {
    pub u: usize,
    pub v: usize,
    pub graph_distance: usize,
    pub word_length: Option<usize>,
    pub status: PairStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    All,
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmbeddingCheckReport {
    pub vertices: usize,
    pub edges: usize,
    pub tree_edges: usize,
    pub generators: usize,
    pub budget: usize,
    pub injective: bool,
    pub cycles_checked: usize,
    pub cycles_ok: bool,
    pub pairs_checked: usize,
    pub mismatches: usize,
    pub inconclusive: usize,
    /// Only pairs that did not match.
    pub failures: Vec<PairCheck>,
    pub pass: bool,
}

/// Checks that `v -> vertex_image(v)` is an isometry from the graph metric to
/// the word metric given by the edge images.
pub fn isometric_embedding_check(
    graph: &Graph,
    tree: &SpanningTree,
    budget: usize,
    pairs: PairSelection,
) -> Result<EmbeddingCheckReport> {
    let n = graph.vertex_count();
    let images: Vec<GroupElement> = (0..n).map(|v| vertex_image(tree, v)).collect::<Result<_>>()?;
    let injective = images.iter().collect::<HashSet<_>>().len() == n;
    let cycles = fundamental_cycles(graph, tree)?;
    let cycles_ok = cycles.iter().all(|c| c.simple && c.image_is_identity);
    let generator_image = GeneratorImage::new(graph, tree)?;
    let mut metric = WordMetric::new(generator_image.symmetric_set(), DEFAULT_MAX_BALL);

    let selected: Vec<(usize, usize)> = match pairs {
        PairSelection::All => (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).collect(),
        PairSelection::Sample { count, seed } => {
            let mut rng = rng::stream(seed, tag::PAIRS, 0);
            (0..count).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
        }
    };
    let mut distances: HashMap<usize, Vec<Option<usize>>> = HashMap::new();
    let mut failures = Vec::new();
    let (mut mismatches, mut inconclusive) = (0, 0);
    for &(u, v) in &selected {
        if let std::collections::hash_map::Entry::Vacant(e) = distances.entry(u) {
            e.insert(graph.bfs(u)?);
        }
        let graph_distance = distances[&u][v].ok_or(Error::Disconnected(v))?;
        let g = images[u].inverse().mul(&images[v]);
        let (word_length, status) = match metric.word_length(&g, budget) {
            Ok(Some(k)) if k == graph_distance => (Some(k), PairStatus::Match),
            Ok(Some(k)) => (Some(k), PairStatus::Mismatch),
            Ok(None) if graph_distance > budget => (None, PairStatus::OverBudget),
            Ok(None) => (None, PairStatus::Mismatch),
            Err(Error::SearchExhausted(_)) => (None, PairStatus::Inconclusive),
            Err(e) => return Err(e),
        };
        match status {
            PairStatus::Match => continue,
            PairStatus::Mismatch => mismatches += 1,
            PairStatus::OverBudget | PairStatus::Inconclusive => inconclusive += 1,
        }
        failures.push(PairCheck { u, v, graph_distance, word_length, status });
    }
    Ok(EmbeddingCheckReport {
        vertices: n,
        edges: graph.edge_count(),
        tree_edges: tree.edges().len(),
        generators: metric.generators().len(),
        budget,
        injective,
        cycles_checked: cycles.len(),
        cycles_ok,
        pairs_checked: selected.len(),
        mismatches,
        inconclusive,
        failures,
        pass: injective && cycles_ok && mismatches == 0 && inconclusive == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DistortionRow {
    pub t: usize,
    /// Least `T`-length among ball elements of `S`-length at least `t`.
    pub rho1: usize,
}

/// `ρ1(t) = min { |w|_T : |w|_S >= t }` restricted to the elements of the
/// finite `S`-ball, so it only bounds the true modulus from above.
pub fn subgroup_distortion(
    ball_s: &HashMap<GroupElement, usize>,
    ball_t: &HashMap<GroupElement, usize>,
    t_max: usize,
) -> Result<Vec<DistortionRow>> {
    let radius = ball_s.values().copied().max().ok_or_else(|| Error::InsufficientRadius("empty S-ball".into()))?;
    if t_max > radius {
        return Err(Error::InsufficientRadius(format!("t_max = {t_max} exceeds S-ball radius {radius}")));
    }
    let mut best = vec![usize::MAX; radius + 1];
    for (w, &len_s) in ball_s {
        let len_t = *ball_t
            .get(w)
            .ok_or_else(|| Error::InsufficientRadius(format!("{w} is missing from the T-ball")))?;
        best[len_s] = best[len_s].min(len_t);
    }
    // suffix minimum: lengths >= t
    for t in (0..radius).rev() {
        best[t] = best[t].min(best[t + 1]);
    }
    Ok((1..=t_max).map(|t| DistortionRow { t, rho1: best[t] }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_cycle() -> (Graph, SpanningTree) {
        let g = Graph::cycle(4).unwrap();
        let t = SpanningTree::from_parents(&g, 0, vec![None, Some(0), Some(1), Some(2)]).unwrap();
        (g, t)
    }

    fn e(id: u32) -> Letter {
        Letter::new(id, false)
    }

    #[test]
    fn four_cycle_images() {
        let (g, t) = four_cycle();
        // e1, e2, e3 of the cycle are letters 0, 1, 2
        let img = edge_image(&g, &t, 3, 0).unwrap();
        assert_eq!(img.letters(), &[e(2).inverse(), e(1).inverse(), e(0).inverse()]);
        assert_eq!(vertex_image(&t, 2).unwrap().letters(), &[e(0), e(1)]);
        assert!(vertex_image(&t, 0).unwrap().is_identity());
        assert!(edge_image(&g, &t, 0, 2).is_err());
        let cycles = fundamental_cycles(&g, &t).unwrap();
        assert_eq!(cycles.len(), 1);
        assert!(cycles[0].simple && cycles[0].image_is_identity);
    }

    #[test]
    fn four_cycle_word_lengths() {
        let (g, t) = four_cycle();
        let gens = GeneratorImage::new(&g, &t).unwrap();
        let target = vertex_image(&t, 2).unwrap();
        assert_eq!(word_length(&gens, &target, 6).unwrap(), Some(2));
        assert_eq!(word_length(&gens, &GroupElement::identity(), 6).unwrap(), Some(0));
        for (_, x) in &gens.edges {
            assert_eq!(word_length(&gens, x, 6).unwrap(), Some(1));
        }
        // e4^-1 · e3^-1 = e1 e2 e3 · e3^-1
        let e4 = edge_image(&g, &t, 3, 0).unwrap();
        let e3 = edge_image(&g, &t, 2, 3).unwrap();
        assert_eq!(e4.inverse().mul(&e3.inverse()), target);
        // a long word is out of reach of a small budget
        let far = target.mul(&target).mul(&target);
        assert_eq!(word_length(&gens, &far, 2).unwrap(), None);
    }

    #[test]
    fn exhaustive_cycle_and_wedge_checks() {
        let (g, t) = four_cycle();
        let report = isometric_embedding_check(&g, &t, 6, PairSelection::All).unwrap();
        assert_eq!(report.pairs_checked, 16);
        assert!(report.pass, "{report:?}");
        let w = super::super::graph::WedgeGraph::new(&[Graph::cycle(4).unwrap(), Graph::cycle(4).unwrap()]).unwrap();
        let tree = SpanningTree::bfs(&w.graph, 0).unwrap();
        let report = isometric_embedding_check(&w.graph, &tree, 6, PairSelection::All).unwrap();
        assert_eq!(report.pairs_checked, 49);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn word_metric_axioms_on_sampled_elements() {
        let w = super::super::graph::WedgeGraph::new(&[Graph::cycle(5).unwrap(), Graph::cycle(4).unwrap()]).unwrap();
        let tree = SpanningTree::bfs(&w.graph, 0).unwrap();
        let mut metric = WordMetric::from_graph(&w.graph, &tree, DEFAULT_MAX_BALL).unwrap();
        let ball = metric.ball(2).unwrap();
        let elements: Vec<GroupElement> = {
            let mut v: Vec<_> = ball.keys().cloned().collect();
            v.sort();
            v.into_iter().step_by(7).take(20).collect()
        };
        for a in &elements {
            let la = metric.word_length(a, 8).unwrap().unwrap();
            assert_eq!(metric.word_length(&a.inverse(), 8).unwrap(), Some(la));
            for b in &elements {
                let lb = metric.word_length(b, 8).unwrap().unwrap();
                let lab = metric.word_length(&a.mul(b), 8).unwrap().unwrap();
                assert!(lab <= la + lb);
            }
        }
    }

    #[test]
    fn distortion_examples() {
        let (a, b) = (GroupElement::letter(0), GroupElement::letter(1));
        let s = vec![a.clone(), b.clone()];
        let ball_s = cayley_ball(&s, 3).unwrap();
        let same = subgroup_distortion(&ball_s, &ball_s, 3).unwrap();
        assert_eq!(same.iter().map(|r| r.rho1).collect::<Vec<_>>(), vec![1, 2, 3]);
        let t = vec![a.clone(), b.clone(), a.mul(&b)];
        let ball_t = cayley_ball(&t, 3).unwrap();
        let rows = subgroup_distortion(&ball_s, &ball_t, 3).unwrap();
        assert_eq!(rows[1], DistortionRow { t: 2, rho1: 1 });
        assert!(subgroup_distortion(&HashMap::new(), &ball_t, 1).is_err());
        assert!(subgroup_distortion(&ball_s, &ball_t, 4).is_err());
        let small_t = cayley_ball(&t, 1).unwrap();
        assert!(matches!(subgroup_distortion(&ball_s, &small_t, 2), Err(Error::InsufficientRadius(_))));
    }

    #[test]
    fn exhausted_cache_is_reported() {
        let gens: Vec<GroupElement> = (0..6).map(GroupElement::letter).collect();
        let mut metric = WordMetric::new(gens, 50);
        let far = free_reduce((0..6).map(e));
        assert!(matches!(metric.word_length(&far, 8), Err(Error::SearchExhausted(_))));
    }
}
