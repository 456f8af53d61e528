//! Brute-force references for tests and cross-checks.
//!
//! Nothing here calls the enumeration, classification, or averaging code in
//! the rest of the crate; every routine works from the definitions on plain
//! coordinate vectors.

use num_rational::BigRational;
use num_traits::Zero;

use crate::budget::Budget;
use crate::embeddings::EmbeddingMap;
use crate::error::{Error, Result};
use crate::space::{CycleMap, Isometry, Point, SpaceSpec};

pub type OracleBudget = Budget;

fn over(what: &'static str, needed: u128, budget: u64) -> Error {
    Error::BudgetExceeded { what, needed: needed.to_string(), budget }
}

/// All points, last coordinate fastest.
pub fn oracle_points(spec: &SpaceSpec, budget: &OracleBudget) -> Result<Vec<Vec<u64>>> {
    let mut total: u128 = 1;
    for _ in 0..spec.d {
        total = total.saturating_mul(u128::from(spec.q));
    }
    if total > u128::from(budget.max_points) {
        return Err(over("points", total, budget.max_points));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut current = vec![0u64; spec.d];
    loop {
        out.push(current.clone());
        let mut i = spec.d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            current[i] += 1;
            if current[i] < spec.q {
                break;
            }
            current[i] = 0;
        }
    }
}

fn is_m_segment(spec: &SpaceSpec, m: u32, a: &[u64], b: &[u64]) -> bool {
    let support = spec.d / spec.p.pow(m);
    let step = 1u64 << m;
    let mut differing = 0;
    for (&x, &y) in a.iter().zip(b) {
        if x == y {
            continue;
        }
        differing += 1;
        let diff = (x + spec.q - y) % spec.q;
        if diff != step && diff != spec.q - step {
            return false;
        }
    }
    differing == support
}

/// Filters all ordered point pairs by the `m`-segment definition. Empty when `m > L`.
pub fn oracle_segments(spec: &SpaceSpec, m: u32, budget: &OracleBudget) -> Result<Vec<(Vec<u64>, Vec<u64>)>> {
    let points = oracle_points(spec, budget)?;
    let pairs = (points.len() as u128).pow(2);
    if pairs > u128::from(budget.max_pairs) {
        return Err(over("pairs", pairs, budget.max_pairs));
    }
    if m > spec.levels {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for a in &points {
        for b in &points {
            if is_m_segment(spec, m, a, b) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    Ok(out)
}

/// Direct rational average of `|f(a) - f(b)|²` over `oracle_segments`.
pub fn oracle_mean(spec: &SpaceSpec, f: &EmbeddingMap, m: u32, budget: &OracleBudget) -> Result<BigRational> {
    let segments = oracle_segments(spec, m, budget)?;
    if segments.is_empty() {
        return Err(Error::LevelOutOfRange { level: m, max: spec.levels });
    }
    let mut total = BigRational::zero();
    for (a, b) in &segments {
        let fa = f.eval_exact(spec, &Point::dense(a.clone()))?;
        let fb = f.eval_exact(spec, &Point::dense(b.clone()))?;
        for (x, y) in fa.iter().zip(&fb) {
            total += (x - y) * (x - y);
        }
    }
    Ok(total / BigRational::from_integer(segments.len().into()))
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for smaller in permutations(d - 1) {
        for slot in 0..d {
            let mut p = smaller.clone();
            p.insert(slot, d - 1);
            out.push(p);
        }
    }
    out
}

/// Every coordinate permutation combined with every per-coordinate
/// reflection/rotation of the cycle: `d! (2q)^d` elements.
pub fn oracle_group(spec: &SpaceSpec, budget: &OracleBudget) -> Result<Vec<Isometry>> {
    let mut factorial: u128 = 1;
    for k in 1..=spec.d as u128 {
        factorial = factorial.saturating_mul(k);
    }
    let mut size = factorial;
    for _ in 0..spec.d {
        size = size.saturating_mul(2 * u128::from(spec.q));
    }
    if size > u128::from(budget.max_group) {
        return Err(over("group elements", size, budget.max_group));
    }
    let per_coord = 2 * spec.q;
    let mut out = Vec::with_capacity(size as usize);
    for perm in permutations(spec.d) {
        let combos = per_coord.pow(spec.d as u32);
        for mut code in 0..combos {
            let mut maps = Vec::with_capacity(spec.d);
            for _ in 0..spec.d {
                let c = code % per_coord;
                code /= per_coord;
                maps.push(CycleMap { flip: c % 2 == 1, shift: c / 2 });
            }
            out.push(Isometry::new(spec.q, perm.clone(), maps)?);
        }
    }
    Ok(out)
}

/// Floyd-Warshall on the unit-distance graph built from the adjacency
/// definition (every coordinate within cyclic distance 1, not all equal).
pub fn oracle_unit_distances(spec: &SpaceSpec, budget: &OracleBudget) -> Result<Vec<Vec<u32>>> {
    let points = oracle_points(spec, budget)?;
    let n = points.len();
    const INF: u32 = u32::MAX / 2;
    let mut dist = vec![vec![INF; n]; n];
    for i in 0..n {
        for j in 0..n {
            let adjacent = i != j
                && points[i].iter().zip(&points[j]).all(|(&x, &y)| {
                    let r = (x + spec.q - y) % spec.q;
                    r <= 1 || r == spec.q - 1
                });
            dist[i][j] = if i == j { 0 } else if adjacent { 1 } else { INF };
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SpaceSpec {
        SpaceSpec::custom(8, 2, 2, 1).unwrap()
    }

    #[test]
    fn tiny_counts() {
        let b = OracleBudget::default();
        assert_eq!(oracle_points(&tiny(), &b).unwrap().len(), 64);
        assert_eq!(oracle_segments(&tiny(), 1, &b).unwrap().len(), 256);
        assert_eq!(oracle_segments(&tiny(), 0, &b).unwrap().len(), 256);
        assert!(oracle_segments(&tiny(), 2, &b).unwrap().is_empty());
    }

    #[test]
    fn group_contains_identity() {
        let group = oracle_group(&tiny(), &OracleBudget::default()).unwrap();
        assert_eq!(group.len(), 512);
        assert!(group.contains(&Isometry::identity(&tiny())));
        let small = OracleBudget { max_group: 100, ..OracleBudget::default() };
        assert!(oracle_group(&tiny(), &small).is_err());
    }

    #[test]
    fn mean_scales_quadratically() {
        let s = tiny();
        let b = OracleBudget::default();
        let f = EmbeddingMap::CoordinateLift;
        let base = oracle_mean(&s, &f, 1, &b).unwrap();
        let EmbeddingMap::Tabulated { dim, table } = EmbeddingMap::random_integer_table(&s, 2, 3, 1, &b).unwrap() else {
            unreachable!()
        };
        let three = BigRational::from_integer(3.into());
        let tripled = EmbeddingMap::tabulated(
            dim,
            table.iter().map(|(p, v)| (p.clone(), v.iter().map(|x| x * &three).collect())).collect(),
        )
        .unwrap();
        let original = EmbeddingMap::Tabulated { dim, table };
        assert_eq!(
            oracle_mean(&s, &tripled, 0, &b).unwrap(),
            oracle_mean(&s, &original, 0, &b).unwrap() * BigRational::from_integer(9.into())
        );
        assert!(base > BigRational::zero());
    }
}
