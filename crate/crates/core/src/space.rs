//! Generalized modified Enflo spaces.
//!
//! A space is the product of `d` copies of the cycle `Z/q` with the max metric.
//! Segment classes are indexed by a level `m` in `0..=L`: an `m`-segment is an
//! ordered pair of points differing in exactly `support(m) = d / p^m`
//! coordinates, each by a cyclic difference of exactly `step(m) = 2^m`.

use std::fmt;
use std::hash::{Hash, Hasher};

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Parameters of a (generalized) modified Enflo space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpaceSpec {
    /// Cycle length.
    pub q: u64,
    /// Number of coordinates.
    pub d: usize,
    /// Branching parameter.
    pub p: usize,
    /// Highest segment level.
    pub levels: u32,
    supports: Vec<usize>,
}

impl SpaceSpec {
    /// The standard member of the family: `q = 2^(n+1)`, `d = 2 n^n`,
    /// `p = n`, `L = n - 1`.
    pub fn standard(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::ParameterTooSmall(n));
        }
        let q = 1u64
            .checked_shl(u32::try_from(n + 1).map_err(|_| Error::Overflow(format!("q = 2^{}", n + 1)))?)
            .filter(|_| n + 1 < 64)
            .ok_or_else(|| Error::Overflow(format!("q = 2^{}", n + 1)))?;
        let exp = u32::try_from(n).map_err(|_| Error::Overflow(format!("n = {n}")))?;
        let d = (n as usize)
            .checked_pow(exp)
            .and_then(|v| v.checked_mul(2))
            .ok_or_else(|| Error::Overflow(format!("d = 2*{n}^{n}")))?;
        Self::custom(q, d, n as usize, exp - 1)
    }

    pub fn custom(q: u64, d: usize, p: usize, levels: u32) -> Result<Self> {
        if q < 4 || !q.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("q must be even and >= 4 (got {q})")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        if p < 2 {
            return Err(Error::InvalidParameter(format!("p must be >= 2 (got {p})")));
        }
        if levels == 0 {
            return Err(Error::InvalidParameter("L must be >= 1".into()));
        }
        let top = p
            .checked_pow(levels)
            .filter(|pl| d.is_multiple_of(*pl))
            .ok_or(Error::Divisibility { d, p, levels })?;
        debug_assert!(d.is_multiple_of(top));
        let step_top = 1u64.checked_shl(levels).filter(|_| levels < 64);
        match step_top {
            Some(step) if step <= q / 2 => {}
            _ => {
                return Err(Error::StepTooLarge {
                    step: step_top.unwrap_or(u64::MAX),
                    half: q / 2,
                })
            }
        }
        let supports: Vec<usize> = (0..=levels).map(|m| d / p.pow(m)).collect();
        if p > 2 {
            if let Some((m, &s)) = supports.iter().enumerate().skip(1).find(|(_, s)| **s % 2 != 0) {
                return Err(Error::SupportParity { level: m as u32, support: s });
            }
        }
        Ok(Self { q, d, p, levels, supports })
    }

    /// Free sign choices of an `m`-segment: one per support coordinate, none
    /// when `step(m) = q/2` because `+step` and `-step` coincide.
    pub fn sign_bits(&self, m: u32) -> usize {
        if 2 * self.step(m) == self.q {
            0
        } else {
            self.support(m)
        }
    }

    /// Number of coordinates in which the endpoints of an `m`-segment differ.
    pub fn support(&self, m: u32) -> usize {
        self.supports[m as usize]
    }

    /// Cyclic difference along each differing coordinate of an `m`-segment.
    pub fn step(&self, m: u32) -> u64 {
        1u64 << m
    }

    pub fn check_level(&self, m: u32) -> Result<()> {
        if m > self.levels {
            Err(Error::LevelOutOfRange { level: m, max: self.levels })
        } else {
            Ok(())
        }
    }

    /// `q^d` when it fits in `u128`.
    pub fn point_count(&self) -> Option<u128> {
        u128::from(self.q).checked_pow(u32::try_from(self.d).ok()?)
    }

    /// `q^d` without overflow.
    pub fn point_count_big(&self) -> BigUint {
        BigUint::from(self.q).pow(self.d as u32)
    }

    pub fn check_point(&self, point: &Point) -> Result<()> {
        if point.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: point.dim() });
        }
        match point.nonzero().find(|&(_, v)| v >= self.q) {
            Some((index, value)) => Err(Error::CoordinateOutOfRange { index, value, q: self.q }),
            None => Ok(()),
        }
    }

    /// Order `d! * (2q)^d` of the permutation-by-dihedral isometry group.
    pub fn group_order(&self) -> BigUint {
        let fact: BigUint = (1..=self.d).map(BigUint::from).product();
        fact * BigUint::from(2 * self.q).pow(self.d as u32)
    }
}

/// Cyclic distance on `Z/q`.
pub fn cyclic_distance(x: u64, y: u64, q: u64) -> u64 {
    let r = x.abs_diff(y) % q;
    r.min(q - r)
}

/// A point of the space. Dense and sparse representations compare by value.
#[derive(Clone)]
pub struct Point {
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    Dense(Vec<u64>),
    // sorted by index, no zero values
    Sparse { dim: usize, entries: Vec<(usize, u64)> },
}

impl Point {
    pub fn dense(coords: Vec<u64>) -> Self {
        Self { repr: Repr::Dense(coords) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { repr: Repr::Sparse { dim, entries: Vec::new() } }
    }

    /// Builds a sparse point; later entries for the same index overwrite earlier ones.
    pub fn sparse(dim: usize, entries: impl IntoIterator<Item = (usize, u64)>) -> Result<Self> {
        let mut entries: Vec<(usize, u64)> = entries.into_iter().collect();
        if let Some(&(i, _)) = entries.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: i + 1 });
        }
        entries.reverse();
        entries.sort_by_key(|&(i, _)| i);
        entries.dedup_by_key(|&mut (i, _)| i);
        entries.retain(|&(_, v)| v != 0);
        Ok(Self { repr: Repr::Sparse { dim, entries } })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Dense(c) => c.len(),
            Repr::Sparse { dim, .. } => *dim,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.repr, Repr::Sparse { .. })
    }

    pub fn coord(&self, i: usize) -> u64 {
        match &self.repr {
            Repr::Dense(c) => c[i],
            Repr::Sparse { entries, .. } => entries
                .binary_search_by_key(&i, |&(j, _)| j)
                .map(|k| entries[k].1)
                .unwrap_or(0),
        }
    }

    pub fn coords(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.repr {
            Repr::Dense(c) => Box::new(c.iter().copied()),
            Repr::Sparse { dim, entries } => {
                let mut next = entries.iter().peekable();
                Box::new((0..*dim).map(move |i| match next.peek() {
                    Some(&&(j, v)) if j == i => {
                        next.next();
                        v
                    }
                    _ => 0,
                }))
            }
        }
    }

    /// Nonzero coordinates as `(index, value)`, in index order.
    pub fn nonzero(&self) -> Box<dyn Iterator<Item = (usize, u64)> + '_> {
        match &self.repr {
            Repr::Dense(c) => Box::new(c.iter().copied().enumerate().filter(|&(_, v)| v != 0)),
            Repr::Sparse { entries, .. } => Box::new(entries.iter().copied()),
        }
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.coords().collect()
    }

    pub fn to_dense(&self) -> Self {
        Self::dense(self.to_vec())
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => a == b,
            _ => self.dim() == other.dim() && self.nonzero().eq(other.nonzero()),
        }
    }
}

impl Eq for Point {}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dim().hash(state);
        for (i, v) in self.nonzero() {
            i.hash(state);
            v.hash(state);
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_vec())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.coords().join(","))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.coords())
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Vec::<u64>::deserialize(deserializer).map(Point::dense)
    }
}

/// Max-metric distance.
pub fn distance(spec: &SpaceSpec, a: &Point, b: &Point) -> Result<u64> {
    spec.check_point(a)?;
    spec.check_point(b)?;
    Ok(a.coords()
        .zip(b.coords())
        .map(|(x, y)| cyclic_distance(x, y, spec.q))
        .max()
        .unwrap_or(0))
}

/// Level `m` such that `(a, b)` is an `m`-segment, if any.
pub fn segment_level(spec: &SpaceSpec, a: &Point, b: &Point) -> Result<Option<u32>> {
    spec.check_point(a)?;
    spec.check_point(b)?;
    let mut count = 0usize;
    let mut common = None;
    for (x, y) in a.coords().zip(b.coords()) {
        let delta = cyclic_distance(x, y, spec.q);
        if delta == 0 {
            continue;
        }
        count += 1;
        match common {
            None => common = Some(delta),
            Some(c) if c != delta => return Ok(None),
            Some(_) => {}
        }
    }
    let Some(delta) = common else { return Ok(None) };
    Ok((0..=spec.levels).find(|&m| spec.support(m) == count && spec.step(m) == delta))
}

/// An ordered pair of points together with its segment level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub level: Option<u32>,
}

impl Segment {
    pub fn classify(spec: &SpaceSpec, a: Point, b: Point) -> Result<Self> {
        let level = segment_level(spec, &a, &b)?;
        Ok(Self { a, b, level })
    }

    fn require_level(&self) -> Result<u32> {
        self.level.ok_or(Error::Unclassified)
    }
}

/// The zero point joined to `step(m)` on the first `support(m)` coordinates.
pub fn canonical_segment(spec: &SpaceSpec, m: u32) -> Result<Segment> {
    spec.check_level(m)?;
    let step = spec.step(m);
    let b = Point::sparse(spec.d, (0..spec.support(m)).map(|i| (i, step)))?;
    Ok(Segment { a: Point::zeros(spec.d), b, level: Some(m) })
}

pub fn random_point<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Point {
    Point::dense((0..spec.d).map(|_| rng.random_range(0..spec.q)).collect())
}

/// Uniform base point, uniform support, independent signs.
pub fn sample_segment<R: Rng + ?Sized>(spec: &SpaceSpec, m: u32, rng: &mut R) -> Result<Segment> {
    spec.check_level(m)?;
    let a = random_point(spec, rng);
    let mut b = a.to_vec();
    let step = spec.step(m);
    for i in index::sample(rng, spec.d, spec.support(m)) {
        b[i] = if rng.random::<bool>() {
            (b[i] + step) % spec.q
        } else {
            (b[i] + spec.q - step) % spec.q
        };
    }
    Ok(Segment { a, b: Point::dense(b), level: Some(m) })
}

pub fn random_segment(spec: &SpaceSpec, m: u32, seed: u64) -> Result<Segment> {
    sample_segment(spec, m, &mut rng::stream(seed, tag::SEGMENT, 0))
}

/// `x -> flip ? -x + shift : x + shift (mod q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CycleMap {
    pub flip: bool,
    pub shift: u64,
}

impl CycleMap {
    pub fn apply(&self, x: u64, q: u64) -> u64 {
        let base = if self.flip { (q - x % q) % q } else { x % q };
        (base + self.shift) % q
    }
}

/// `h(x)_i = coord_maps[i](x[perm[i]])`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Isometry {
    q: u64,
    perm: Vec<usize>,
    coord_maps: Vec<CycleMap>,
}

impl Isometry {
    pub fn new(q: u64, perm: Vec<usize>, coord_maps: Vec<CycleMap>) -> Result<Self> {
        if perm.len() != coord_maps.len() {
            return Err(Error::DimensionMismatch { expected: perm.len(), got: coord_maps.len() });
        }
        let mut seen = vec![false; perm.len()];
        for &j in &perm {
            if j >= perm.len() || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
            }
        }
        if let Some(m) = coord_maps.iter().find(|m| m.shift >= q) {
            return Err(Error::InvalidParameter(format!("shift {} is not a residue mod {q}", m.shift)));
        }
        Ok(Self { q, perm, coord_maps })
    }

    pub fn identity(spec: &SpaceSpec) -> Self {
        Self {
            q: spec.q,
            perm: (0..spec.d).collect(),
            coord_maps: vec![CycleMap { flip: false, shift: 0 }; spec.d],
        }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn coord_maps(&self) -> &[CycleMap] {
        &self.coord_maps
    }

    fn check_compatible(&self, q: u64, d: usize) -> Result<()> {
        if self.perm.len() != d {
            return Err(Error::DimensionMismatch { expected: self.perm.len(), got: d });
        }
        if self.q != q {
            return Err(Error::InvalidParameter(format!("isometry acts on Z/{}, not Z/{q}", self.q)));
        }
        Ok(())
    }

    pub fn apply(&self, point: &Point) -> Result<Point> {
        self.check_compatible(self.q, point.dim())?;
        let src = point.to_vec();
        Ok(Point::dense(
            self.perm
                .iter()
                .zip(&self.coord_maps)
                .map(|(&j, map)| map.apply(src[j], self.q))
                .collect(),
        ))
    }

    pub fn apply_segment(&self, spec: &SpaceSpec, segment: &Segment) -> Result<Segment> {
        Segment::classify(spec, self.apply(&segment.a)?, self.apply(&segment.b)?)
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Isometry) -> Result<Isometry> {
        inner.check_compatible(self.q, self.perm.len())?;
        let mut perm = Vec::with_capacity(self.perm.len());
        let mut coord_maps = Vec::with_capacity(self.perm.len());
        for (&j, outer) in self.perm.iter().zip(&self.coord_maps) {
            let inner_map = inner.coord_maps[j];
            perm.push(inner.perm[j]);
            let carried = if outer.flip { (self.q - inner_map.shift) % self.q } else { inner_map.shift };
            coord_maps.push(CycleMap {
                flip: outer.flip != inner_map.flip,
                shift: (carried + outer.shift) % self.q,
            });
        }
        Ok(Isometry { q: self.q, perm, coord_maps })
    }

    pub fn inverse(&self) -> Isometry {
        let d = self.perm.len();
        let mut perm = vec![0; d];
        let mut coord_maps = vec![CycleMap { flip: false, shift: 0 }; d];
        for (i, (&j, map)) in self.perm.iter().zip(&self.coord_maps).enumerate() {
            // y_i = e x_j + t  =>  x_j = e y_i - e t
            perm[j] = i;
            let shift = if map.flip { map.shift } else { (self.q - map.shift) % self.q };
            coord_maps[j] = CycleMap { flip: map.flip, shift };
        }
        Isometry { q: self.q, perm, coord_maps }
    }
}

/// An isometry taking `s1` onto `s2` endpoint by endpoint. Differing
/// coordinates of `s1` are matched to those of `s2` in increasing order.
pub fn transitive_isometry(spec: &SpaceSpec, s1: &Segment, s2: &Segment) -> Result<Isometry> {
    let (l1, l2) = (s1.require_level()?, s2.require_level()?);
    if l1 != l2 {
        return Err(Error::LevelMismatch(l1, l2));
    }
    for p in [&s1.a, &s1.b, &s2.a, &s2.b] {
        spec.check_point(p)?;
    }
    let (a, b, a2, b2) = (s1.a.to_vec(), s1.b.to_vec(), s2.a.to_vec(), s2.b.to_vec());
    let (src_moved, src_fixed): (Vec<usize>, Vec<usize>) = (0..spec.d).partition(|&i| a[i] != b[i]);
    let (dst_moved, dst_fixed): (Vec<usize>, Vec<usize>) = (0..spec.d).partition(|&i| a2[i] != b2[i]);
    debug_assert_eq!(src_moved.len(), dst_moved.len());

    let q = spec.q;
    let mut perm = vec![0; spec.d];
    let mut coord_maps = vec![CycleMap { flip: false, shift: 0 }; spec.d];
    for (&i, &j) in dst_moved.iter().zip(&src_moved).chain(dst_fixed.iter().zip(&src_fixed)) {
        perm[i] = j;
        let delta_src = (b[j] + q - a[j]) % q;
        let delta_dst = (b2[i] + q - a2[i]) % q;
        let flip = delta_src != delta_dst;
        let moved = CycleMap { flip, shift: 0 }.apply(a[j], q);
        coord_maps[i] = CycleMap { flip, shift: (a2[i] + q - moved) % q };
    }
    Isometry::new(q, perm, coord_maps)
}

/// Which segment pairs a transitivity check visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairPlan {
    /// Every pair `(s_i, s_j)` with `i <= j` in enumeration order. The
    /// inverse of the constructed isometry covers the reversed pair.
    Exhaustive,
    Sampled { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitivityReport {
    pub level: u32,
    pub exhaustive: bool,
    pub pairs_checked: usize,
    pub probes_per_pair: usize,
    /// Pairs whose isometry (or its inverse) missed an endpoint.
    pub endpoint_failures: usize,
    /// Probe segments whose image changed level or length.
    pub probe_failures: usize,
    pub pass: bool,
}

/// Builds `transitive_isometry` for segment pairs of level `m` and checks it
/// on the endpoints and on `probes` random segments of random levels.
pub fn transitivity_check(
    spec: &SpaceSpec,
    m: u32,
    plan: PairPlan,
    probes: usize,
    probe_seed: u64,
    budget: &Budget,
) -> Result<TransitivityReport> {
    spec.check_level(m)?;
    let pairs: Vec<(Segment, Segment)> = match plan {
        PairPlan::Exhaustive => {
            let count = count_segments_formula(spec, m)?;
            Budget::check(u128::try_from(&count).ok(), budget.max_points, "segments")?;
            let all: Vec<Segment> = enumerate_segments(spec, m, budget)?.collect();
            let mut out = Vec::with_capacity(all.len() * (all.len() + 1) / 2);
            for (i, s1) in all.iter().enumerate() {
                for s2 in &all[i..] {
                    out.push((s1.clone(), s2.clone()));
                }
            }
            out
        }
        PairPlan::Sampled { trials, seed } => {
            let mut rng = rng::stream(seed, tag::SEGMENT, m);
            (0..trials)
                .map(|_| Ok((sample_segment(spec, m, &mut rng)?, sample_segment(spec, m, &mut rng)?)))
                .collect::<Result<_>>()?
        }
    };
    let mut probe_rng = rng::stream(probe_seed, tag::PROBE, m);
    let (mut endpoint_failures, mut probe_failures) = (0, 0);
    for (s1, s2) in &pairs {
        let h = transitive_isometry(spec, s1, s2)?;
        let back = h.inverse();
        let forward_ok = h.apply(&s1.a)? == s2.a && h.apply(&s1.b)? == s2.b;
        let backward_ok = back.apply(&s2.a)? == s1.a && back.apply(&s2.b)? == s1.b;
        if !(forward_ok && backward_ok) {
            endpoint_failures += 1;
        }
        for _ in 0..probes {
            let k = probe_rng.random_range(0..=spec.levels);
            let probe = sample_segment(spec, k, &mut probe_rng)?;
            let (a, b) = (h.apply(&probe.a)?, h.apply(&probe.b)?);
            if segment_level(spec, &a, &b)? != Some(k) || distance(spec, &a, &b)? != distance(spec, &probe.a, &probe.b)? {
                probe_failures += 1;
            }
        }
    }
    Ok(TransitivityReport {
        level: m,
        exhaustive: plan == PairPlan::Exhaustive,
        pairs_checked: pairs.len(),
        probes_per_pair: probes,
        endpoint_failures,
        probe_failures,
        pass: endpoint_failures == 0 && probe_failures == 0,
    })
}

/// Uniform element of the permutation-by-dihedral group.
pub fn sample_isometry<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Isometry {
    let mut perm: Vec<usize> = (0..spec.d).collect();
    perm.shuffle(rng);
    let coord_maps = (0..spec.d)
        .map(|_| CycleMap { flip: rng.random(), shift: rng.random_range(0..spec.q) })
        .collect();
    Isometry { q: spec.q, perm, coord_maps }
}

pub fn random_isometry(spec: &SpaceSpec, seed: u64) -> Isometry {
    sample_isometry(spec, &mut rng::stream(seed, tag::ISOMETRY, 0))
}

/// Every element of the permutation-by-dihedral group, permutation-major.
pub fn isometry_group(spec: &SpaceSpec, budget: &Budget) -> Result<Vec<Isometry>> {
    let order = spec.group_order();
    Budget::check(u128::try_from(&order).ok(), budget.max_group, "group elements")?;
    let maps: Vec<CycleMap> = (0..spec.q)
        .flat_map(|shift| [false, true].map(|flip| CycleMap { flip, shift }))
        .collect();
    let mut group = Vec::new();
    for perm in (0..spec.d).permutations(spec.d) {
        for coord_maps in (0..spec.d).map(|_| maps.iter().copied()).multi_cartesian_product() {
            group.push(Isometry { q: spec.q, perm: perm.clone(), coord_maps });
        }
    }
    Ok(group)
}

/// Index sets used to place the double simplex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Blueprint {
    /// Even supports: `I = [0, p*s/2)` split into `p` consecutive blocks of
    /// size `s/2`, with the shifted copy `I + |I|` carrying the lower step.
    Blocks { inner: (usize, usize), blocks: Vec<(usize, usize)> },
    /// `p = 2` with any support `s`: block `A = [0, s)` carries the upper step,
    /// block `B = [s, 2s)` separates the two `v` points by sign.
    Signed { upper: (usize, usize), lower: (usize, usize) },
}

/// `p` points `u` and `p` points `v`: same-letter pairs are edges, mixed pairs
/// are connecting lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DoubleSimplex {
    pub level: u32,
    pub u: Vec<Point>,
    pub v: Vec<Point>,
    pub blueprint: Option<Blueprint>,
}

impl DoubleSimplex {
    pub fn transport(&self, h: &Isometry) -> Result<DoubleSimplex> {
        Ok(DoubleSimplex {
            level: self.level,
            u: self.u.iter().map(|x| h.apply(x)).collect::<Result<_>>()?,
            v: self.v.iter().map(|x| h.apply(x)).collect::<Result<_>>()?,
            blueprint: None,
        })
    }

    /// Unordered edges as `(side, k, l)` with `k < l`; side 0 is `u`.
    pub fn edges(&self) -> impl Iterator<Item = (&Point, &Point)> + '_ {
        let p = self.u.len();
        [&self.u, &self.v]
            .into_iter()
            .flat_map(move |side| (0..p).tuple_combinations().map(move |(k, l)| (&side[k], &side[l])))
    }

    pub fn connecting_lines(&self) -> impl Iterator<Item = (&Point, &Point)> + '_ {
        self.u.iter().cartesian_product(self.v.iter())
    }
}

/// A double simplex whose edges are `m`-segments and whose connecting lines
/// are `(m-1)`-segments.
pub fn double_simplex(spec: &SpaceSpec, m: u32) -> Result<DoubleSimplex> {
    if m == 0 {
        return Err(Error::LevelOutOfRange { level: m, max: spec.levels });
    }
    spec.check_level(m)?;
    let (p, s) = (spec.p, spec.support(m));
    let (hi, lo) = (spec.step(m), spec.step(m - 1));
    let q = spec.q;
    if s % 2 == 0 {
        let half = s / 2;
        let width = p * half;
        let blocks: Vec<(usize, usize)> = (0..p).map(|k| (k * half, (k + 1) * half)).collect();
        let mut u = Vec::with_capacity(p);
        let mut v = Vec::with_capacity(p);
        for &(start, end) in &blocks {
            u.push(Point::sparse(
                spec.d,
                (start..end).map(|i| (i, hi)).chain((width..2 * width).map(|i| (i, lo))),
            )?);
            v.push(Point::sparse(
                spec.d,
                (0..width).map(|i| (i, lo)).chain((start + width..end + width).map(|i| (i, hi))),
            )?);
        }
        return Ok(DoubleSimplex {
            level: m,
            u,
            v,
            blueprint: Some(Blueprint::Blocks { inner: (0, width), blocks }),
        });
    }
    if p != 2 {
        return Err(Error::SupportParity { level: m, support: s });
    }
    let u = vec![Point::zeros(spec.d), Point::sparse(spec.d, (0..s).map(|i| (i, hi)))?];
    let v = [lo, q - lo]
        .into_iter()
        .map(|tail| Point::sparse(spec.d, (0..s).map(|i| (i, lo)).chain((s..2 * s).map(|i| (i, tail)))))
        .collect::<Result<_>>()?;
    Ok(DoubleSimplex {
        level: m,
        u,
        v,
        blueprint: Some(Blueprint::Signed { upper: (0, s), lower: (s, 2 * s) }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    U,
    V,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimplexViolation {
    pub first: (Side, usize),
    pub second: (Side, usize),
    pub expected: Option<u32>,
    pub found: Option<u32>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimplexVerdict {
    pub level: u32,
    pub pass: bool,
    pub edges_checked: usize,
    pub lines_checked: usize,
    pub violation: Option<SimplexViolation>,
}

/// Checks every edge at level `m` and every connecting line at level `m - 1`.
/// Stops at the first violation.
pub fn verify_double_simplex(spec: &SpaceSpec, ds: &DoubleSimplex) -> SimplexVerdict {
    let m = ds.level;
    let mut verdict = SimplexVerdict { level: m, pass: true, edges_checked: 0, lines_checked: 0, violation: None };
    let fail = |mut verdict: SimplexVerdict, violation| {
        verdict.pass = false;
        verdict.violation = Some(violation);
        verdict
    };
    if ds.u.len() != ds.v.len() || ds.u.len() < 2 || m == 0 {
        let detail = format!("need p >= 2 points per side and m >= 1 (|u| = {}, |v| = {}, m = {m})", ds.u.len(), ds.v.len());
        return fail(
            verdict,
            SimplexViolation { first: (Side::U, 0), second: (Side::V, 0), expected: None, found: None, detail: Some(detail) },
        );
    }
    let p = ds.u.len();
    let level = |a: &Point, b: &Point| segment_level(spec, a, b).map_err(|e| e.to_string());
    for (side, points) in [(Side::U, &ds.u), (Side::V, &ds.v)] {
        for (k, l) in (0..p).tuple_combinations() {
            verdict.edges_checked += 1;
            let found = level(&points[k], &points[l]);
            if found != Ok(Some(m)) {
                let violation = SimplexViolation {
                    first: (side, k),
                    second: (side, l),
                    expected: Some(m),
                    found: found.clone().ok().flatten(),
                    detail: found.err(),
                };
                return fail(verdict, violation);
            }
        }
    }
    for (k, l) in (0..p).cartesian_product(0..p) {
        verdict.lines_checked += 1;
        let found = level(&ds.u[k], &ds.v[l]);
        if found != Ok(Some(m - 1)) {
            let violation = SimplexViolation {
                first: (Side::U, k),
                second: (Side::V, l),
                expected: Some(m - 1),
                found: found.clone().ok().flatten(),
                detail: found.err(),
            };
            return fail(verdict, violation);
        }
    }
    verdict
}

/// Mixed-radix index of a point (coordinate 0 most significant).
pub fn point_index(spec: &SpaceSpec, point: &Point) -> Result<usize> {
    spec.check_point(point)?;
    point
        .coords()
        .try_fold(0usize, |acc, x| acc.checked_mul(spec.q as usize)?.checked_add(x as usize))
        .ok_or_else(|| Error::Overflow("point index".into()))
}

pub fn point_from_index(spec: &SpaceSpec, mut index: usize) -> Point {
    let q = spec.q as usize;
    let mut coords = vec![0u64; spec.d];
    for c in coords.iter_mut().rev() {
        *c = (index % q) as u64;
        index /= q;
    }
    Point::dense(coords)
}

/// All `q^d` points in index order.
pub fn enumerate_points<'a>(spec: &'a SpaceSpec, budget: &Budget) -> Result<impl Iterator<Item = Point> + 'a> {
    let count = spec.point_count();
    Budget::check(count, budget.max_points, "points")?;
    Ok((0..count.unwrap_or(0) as usize).map(move |i| point_from_index(spec, i)))
}

/// Every ordered `m`-segment exactly once: base points in index order, then
/// supports in lexicographic order, then sign patterns.
pub fn enumerate_segments<'a>(
    spec: &'a SpaceSpec,
    m: u32,
    budget: &Budget,
) -> Result<impl Iterator<Item = Segment> + 'a> {
    spec.check_level(m)?;
    let total = count_segments_formula(spec, m)?;
    Budget::check(u128::try_from(&total).ok(), budget.max_pairs, "segments")?;
    let (s, step, q) = (spec.support(m), spec.step(m), spec.q);
    let sign_bits = spec.sign_bits(m);
    let points = enumerate_points(spec, budget)?;
    Ok(points.flat_map(move |a| {
        let base = a.to_vec();
        (0..spec.d).combinations(s).flat_map(move |support| {
            let base = base.clone();
            (0..1u64 << sign_bits).map(move |signs| {
                let mut b = base.clone();
                for (bit, &i) in support.iter().enumerate() {
                    b[i] = if signs >> bit & 1 == 0 { (b[i] + step) % q } else { (b[i] + q - step) % q };
                }
                Segment { a: Point::dense(base.clone()), b: Point::dense(b), level: Some(m) }
            })
        })
    }))
}

/// `q^d * C(d, support(m)) * 2^support(m)` ordered `m`-segments, without the
/// sign factor when `step(m) = q/2`.
pub fn count_segments_formula(spec: &SpaceSpec, m: u32) -> Result<BigUint> {
    spec.check_level(m)?;
    let s = spec.support(m);
    let binom: BigUint = (0..s).fold(BigUint::one(), |acc, i| acc * BigUint::from(spec.d - i) / BigUint::from(i + 1));
    Ok(BigUint::from(spec.q).pow(spec.d as u32) * binom * (BigUint::one() << spec.sign_bits(m)))
}
