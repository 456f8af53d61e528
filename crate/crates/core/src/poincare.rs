//! The double-simplex inequality in Euclidean space and the averaged chain it
//! induces on segment-class means.
//!
//! For a map `f` and level `k`, `ḡ_k` is the mean of `|f(a) - f(b)|²` over all
//! ordered `k`-segments `(a, b)`. Averaging the double-simplex inequality over
//! the isometry-group orbit of a level-`m` double simplex gives
//! `p² ḡ_{m-1} >= p(p-1) ḡ_m`, i.e. `(1 + 1/(p-1)) ḡ_{m-1} >= ḡ_m`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::budget::Budget;
use crate::embeddings::{euclidean, EmbeddingMap};
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::space::{
    count_segments_formula, double_simplex, enumerate_points, enumerate_segments, isometry_group, point_index,
    sample_isometry, sample_segment, Point, SpaceSpec,
};
use crate::value::Value;

/// Relative tolerance for floating identity checks.
pub const FLOAT_REL_TOL: f64 = 1e-9;
/// Statistical gate, in standard errors.
pub const SIGMA_GATE: f64 = 4.0;

/// Two families of `p` vectors in a common `D`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanConfig<T> {
    pub u: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T> EuclideanConfig<T> {
    pub fn new(u: Vec<Vec<T>>, v: Vec<Vec<T>>) -> Result<Self> {
        if u.len() < 2 || u.len() != v.len() {
            return Err(Error::Config(format!("need p >= 2 vectors per side (got {} and {})", u.len(), v.len())));
        }
        let dim = u[0].len();
        if let Some(bad) = u.iter().chain(&v).find(|x| x.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(Self { u, v })
    }

    pub fn p(&self) -> usize {
        self.u.len()
    }

    pub fn dim(&self) -> usize {
        self.u[0].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gap<T> {
    /// Squared connecting-line lengths, summed.
    pub sum_c: T,
    /// Squared edge lengths, summed.
    pub sum_s: T,
    pub gap: T,
    /// `|Σu - Σv|²`.
    pub witness: T,
}

fn sq_dist<T: Clone + num_traits::Num>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| {
        let d = a.clone() - b.clone();
        acc + d.clone() * d
    })
}

pub fn double_simplex_gap<T: Clone + num_traits::Num>(cfg: &EuclideanConfig<T>) -> Gap<T> {
    let p = cfg.p();
    let mut sum_c = T::zero();
    for a in &cfg.u {
        for b in &cfg.v {
            sum_c = sum_c + sq_dist(a, b);
        }
    }
    let mut sum_s = T::zero();
    for side in [&cfg.u, &cfg.v] {
        for k in 0..p {
            for l in k + 1..p {
                sum_s = sum_s + sq_dist(&side[k], &side[l]);
            }
        }
    }
    let witness = (0..cfg.dim()).fold(T::zero(), |acc, i| {
        let su = cfg.u.iter().fold(T::zero(), |s, x| s + x[i].clone());
        let sv = cfg.v.iter().fold(T::zero(), |s, x| s + x[i].clone());
        let d = su - sv;
        acc + d.clone() * d
    });
    let gap = sum_c.clone() - sum_s.clone();
    Gap { sum_c, sum_s, gap, witness }
}

/// Coordinates `a/b` with `a` uniform in `-range..=range` and `b` uniform in
/// `1..=max_denom`.
pub fn random_rational_config<R: Rng + ?Sized>(
    rng: &mut R,
    p: usize,
    dim: usize,
    range: i64,
    max_denom: i64,
) -> EuclideanConfig<BigRational> {
    let vector = |rng: &mut R| -> Vec<BigRational> {
        (0..dim)
            .map(|_| BigRational::new(rng.random_range(-range..=range).into(), rng.random_range(1..=max_denom).into()))
            .collect()
    };
    let u = (0..p).map(|_| vector(rng)).collect();
    let v = (0..p).map(|_| vector(rng)).collect();
    EuclideanConfig { u, v }
}

/// Arithmetic for `gap_trials`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Rational,
    Float,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTrials {
    pub arithmetic: Arithmetic,
    pub trials: usize,
    /// Trials where `gap != |Σu - Σv|²` (beyond tolerance in float mode).
    pub identity_failures: usize,
    /// Trials where `gap < 0` (beyond tolerance in float mode).
    pub sign_failures: usize,
    pub min_gap: f64,
    pub pass: bool,
}

/// Random double simplices with `p` in `2..=6`, dimension in `1..=16` and
/// integer coordinates in `[-100, 100]`.
pub fn gap_trials(trials: usize, seed: u64, arithmetic: Arithmetic) -> GapTrials {
    let (mut identity_failures, mut sign_failures, mut min_gap) = (0, 0, f64::INFINITY);
    for t in 0..trials {
        let mut rng = rng::stream(seed, tag::CONFIG, t as u32);
        let p = rng.random_range(2..=6);
        let dim = rng.random_range(1..=16);
        let cfg = random_rational_config(&mut rng, p, dim, 100, 1);
        match arithmetic {
            Arithmetic::Rational => {
                let g = double_simplex_gap(&cfg);
                identity_failures += usize::from(g.gap != g.witness);
                sign_failures += usize::from(g.gap.is_negative());
                min_gap = min_gap.min(g.gap.to_f64().unwrap_or(f64::NAN));
            }
            Arithmetic::Float => {
                let to_f = |xs: &Vec<Vec<BigRational>>| -> Vec<Vec<f64>> {
                    xs.iter().map(|x| x.iter().map(|c| c.to_f64().unwrap()).collect()).collect()
                };
                let g = double_simplex_gap(&EuclideanConfig { u: to_f(&cfg.u), v: to_f(&cfg.v) });
                let tol = FLOAT_REL_TOL * (g.sum_c.abs() + g.sum_s.abs()).max(1.0);
                identity_failures += usize::from((g.gap - g.witness).abs() > tol);
                sign_failures += usize::from(g.gap < -tol);
                min_gap = min_gap.min(g.gap);
            }
        }
    }
    GapTrials {
        arithmetic,
        trials,
        identity_failures,
        sign_failures,
        min_gap,
        pass: identity_failures == 0 && sign_failures == 0,
    }
}

/// Images of every point, scaled to a common denominator when exact.
enum Images {
    Small { scaled: Vec<Vec<i64>>, denom: BigInt },
    Big { scaled: Vec<Vec<BigInt>>, denom: BigInt },
    Float(Vec<Vec<f64>>),
}

const SMALL_LIMIT: i64 = 1 << 31;

impl Images {
    fn build(spec: &SpaceSpec, f: &EmbeddingMap, exact: bool, budget: &Budget) -> Result<Self> {
        let points: Vec<Point> = enumerate_points(spec, budget)?.collect();
        if !exact {
            return Ok(Self::Float(points.iter().map(|p| f.eval(spec, p)).collect::<Result<_>>()?));
        }
        let raw: Vec<Vec<BigRational>> = points.iter().map(|p| f.eval_exact(spec, p)).collect::<Result<_>>()?;
        let denom = raw.iter().flatten().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let scaled: Vec<Vec<BigInt>> = raw
            .iter()
            .map(|v| v.iter().map(|r| r.numer() * (&denom / r.denom())).collect())
            .collect();
        let small = scaled.iter().flatten().all(|x| x.abs() < BigInt::from(SMALL_LIMIT));
        if small {
            let scaled = scaled.iter().map(|v| v.iter().map(|x| x.to_i64().unwrap()).collect()).collect();
            Ok(Self::Small { scaled, denom })
        } else {
            Ok(Self::Big { scaled, denom })
        }
    }

    fn is_exact(&self) -> bool {
        !matches!(self, Self::Float(_))
    }

    fn sum_sq(&self, pairs: impl Iterator<Item = (usize, usize)>) -> Value {
        match self {
            Self::Small { scaled, denom } => {
                let mut total: i128 = 0;
                let mut spill = BigInt::zero();
                for (i, j) in pairs {
                    let sq: i128 = scaled[i]
                        .iter()
                        .zip(&scaled[j])
                        .map(|(&a, &b)| {
                            let d = i128::from(a - b);
                            d * d
                        })
                        .sum();
                    total = match total.checked_add(sq) {
                        Some(t) => t,
                        None => {
                            spill += total;
                            sq
                        }
                    };
                }
                Value::Exact(BigRational::new(spill + total, denom * denom))
            }
            Self::Big { scaled, denom } => {
                let total = pairs.fold(BigInt::zero(), |acc, (i, j)| {
                    scaled[i].iter().zip(&scaled[j]).fold(acc, |acc, (a, b)| {
                        let d = a - b;
                        acc + &d * &d
                    })
                });
                Value::Exact(BigRational::new(total, denom * denom))
            }
            Self::Float(images) => Value::Approx(pairs.map(|(i, j)| sq(&images[i], &images[j])).sum()),
        }
    }

    fn sq(&self, i: usize, j: usize) -> Value {
        self.sum_sq(std::iter::once((i, j)))
    }
}

fn sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn segment_pairs<'a>(spec: &'a SpaceSpec, m: u32, budget: &Budget) -> Result<impl Iterator<Item = (usize, usize)> + 'a> {
    Ok(enumerate_segments(spec, m, budget)?.map(move |s| {
        (point_index(spec, &s.a).expect("enumerated point"), point_index(spec, &s.b).expect("enumerated point"))
    }))
}

fn class_size(spec: &SpaceSpec, m: u32) -> Result<BigInt> {
    Ok(BigInt::from(count_segments_formula(spec, m)?))
}

fn divide(total: Value, count: &BigInt) -> Value {
    match total {
        Value::Exact(t) => Value::Exact(t / BigRational::from_integer(count.clone())),
        Value::Approx(t) => Value::Approx(t / count.to_f64().unwrap_or(f64::NAN)),
    }
}

/// Exact mean of squared image distances over all ordered `m`-segments.
pub fn exact_mean_g(spec: &SpaceSpec, f: &EmbeddingMap, m: u32, budget: &Budget) -> Result<BigRational> {
    spec.check_level(m)?;
    if !f.is_exact() {
        return Err(Error::NotExact(format!("{} map in exact mode", f.kind())));
    }
    let images = Images::build(spec, f, true, budget)?;
    let total = images.sum_sq(segment_pairs(spec, m, budget)?);
    match divide(total, &class_size(spec, m)?) {
        Value::Exact(r) => Ok(r),
        Value::Approx(_) => unreachable!("exact images"),
    }
}

/// Mean over all ordered `m`-segments in floating arithmetic, summed in
/// enumeration order.
pub fn exhaustive_mean_g(spec: &SpaceSpec, f: &EmbeddingMap, m: u32, budget: &Budget) -> Result<f64> {
    spec.check_level(m)?;
    let images = Images::build(spec, f, false, budget)?;
    let total = images.sum_sq(segment_pairs(spec, m, budget)?);
    Ok(divide(total, &class_size(spec, m)?).to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledMean {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of `ḡ_m` from uniform `m`-segments.
pub fn sampled_mean_g(spec: &SpaceSpec, f: &EmbeddingMap, m: u32, samples: usize, seed: u64) -> Result<SampledMean> {
    spec.check_level(m)?;
    if samples < 2 {
        return Err(Error::TooFewSamples { min: 2, got: samples });
    }
    let mut rng = rng::stream(seed, tag::MEAN, m);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s = sample_segment(spec, m, &mut rng)?;
        values.push(sq(&f.eval(spec, &s.a)?, &f.eval(spec, &s.b)?));
    }
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok(SampledMean { estimate: mean, stderr: (var / n).sqrt(), samples })
}

/// How class means are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    /// Full enumeration; rational when the map allows it.
    Exact,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    /// Enumerated, rational arithmetic.
    Exact,
    /// Enumerated, floating arithmetic (irrational maps).
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEntry {
    pub level: u32,
    pub value: Value,
    pub stderr: Option<f64>,
    pub samples: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanTable {
    pub mode: MeanMode,
    pub entries: Vec<MeanEntry>,
}

impl MeanTable {
    pub fn value(&self, level: u32) -> &Value {
        &self.entries[level as usize].value
    }

    pub fn stderr(&self, level: u32) -> f64 {
        self.entries[level as usize].stderr.unwrap_or(0.0)
    }

    /// `level,value,stderr,samples` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,value,stderr,samples\n");
        for e in &self.entries {
            let stderr = e.stderr.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", e.level, e.value, stderr, e.samples));
        }
        out
    }
}

/// `ḡ_0 … ḡ_L`.
pub fn mean_table(spec: &SpaceSpec, f: &EmbeddingMap, evaluation: Evaluation, budget: &Budget) -> Result<MeanTable> {
    match evaluation {
        Evaluation::Exact => {
            let images = Images::build(spec, f, f.is_exact(), budget)?;
            let mode = if images.is_exact() { MeanMode::Exact } else { MeanMode::Exhaustive };
            let entries = (0..=spec.levels)
                .map(|m| {
                    let count = class_size(spec, m)?;
                    let value = divide(images.sum_sq(segment_pairs(spec, m, budget)?), &count);
                    Ok(MeanEntry { level: m, value, stderr: None, samples: count.to_string() })
                })
                .collect::<Result<_>>()?;
            Ok(MeanTable { mode, entries })
        }
        Evaluation::Sampled { samples, seed } => {
            let entries = (0..=spec.levels)
                .map(|m| {
                    let s = sampled_mean_g(spec, f, m, samples, seed)?;
                    Ok(MeanEntry {
                        level: m,
                        value: Value::Approx(s.estimate),
                        stderr: Some(s.stderr),
                        samples: samples.to_string(),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(MeanTable { mode: MeanMode::Sampled, entries })
        }
    }
}

/// `p / (p - 1)`.
pub fn chain_factor(p: usize) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(p - 1))
}

/// `(1 + 1/(p-1))^(p-1)`, the iterated factor at standard parameters; increases to `e`.
pub fn chain_constant(p: usize) -> f64 {
    let p = p as f64;
    (p / (p - 1.0)).powf(p - 1.0)
}

/// `sqrt((n/(n-1))^(n-1))`, the certificate bound at standard parameters.
pub fn standard_bound(n: u64) -> f64 {
    chain_constant(n as usize).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainLevel {
    pub m: u32,
    pub lower: Value,
    pub upper: Value,
    /// `(1 + 1/(p-1)) ḡ_{m-1} - ḡ_m`.
    pub slack: Value,
    pub slack_sigma: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EBound {
    /// `(1 + 1/(p-1))^L` with `L = p - 1`.
    pub factor: f64,
    pub factor_at_most_e: bool,
    /// `e ḡ_0 - ḡ_L`.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Degenerate,
    Illustration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub means: MeanTable,
    pub factor: Value,
    pub levels: Vec<ChainLevel>,
    /// `(1 + 1/(p-1))^L`.
    pub iterated_bound: Value,
    /// `(1 + 1/(p-1))^L ḡ_0 - ḡ_L`.
    pub iterated_slack: Value,
    pub iterated_pass: bool,
    pub e_bound: Option<EBound>,
    pub verdict: Verdict,
}

fn check_slack(slack: &Value, magnitude: f64, sigma: Option<f64>) -> (bool, Option<f64>) {
    match sigma {
        Some(s) if s > 0.0 => {
            let z = slack.to_f64() / s;
            (z >= -SIGMA_GATE, Some(z))
        }
        _ => (slack.is_nonnegative(FLOAT_REL_TOL, magnitude), None),
    }
}

pub fn chain_from_means(spec: &SpaceSpec, means: MeanTable) -> ChainReport {
    let factor = chain_factor(spec.p);
    let factor_f = factor.to_f64().unwrap();
    let sampled = means.mode == MeanMode::Sampled;
    let levels: Vec<ChainLevel> = (1..=spec.levels)
        .map(|m| {
            let lower = means.value(m - 1).clone();
            let upper = means.value(m).clone();
            let slack = lower.scale(&factor).sub(&upper);
            let sigma = sampled.then(|| {
                (factor_f * factor_f * means.stderr(m - 1).powi(2) + means.stderr(m).powi(2)).sqrt()
            });
            let magnitude = lower.to_f64() * factor_f + upper.to_f64();
            let (pass, slack_sigma) = check_slack(&slack, magnitude, sigma);
            ChainLevel { m, lower, upper, slack, slack_sigma, pass }
        })
        .collect();
    let bound = num_traits::pow(factor.clone(), spec.levels as usize);
    let bound_f = bound.to_f64().unwrap();
    let (g0, gl) = (means.value(0), means.value(spec.levels));
    let iterated_slack = g0.scale(&bound).sub(gl);
    let iter_sigma = sampled.then(|| (bound_f.powi(2) * means.stderr(0).powi(2) + means.stderr(spec.levels).powi(2)).sqrt());
    let (iterated_pass, _) = check_slack(&iterated_slack, g0.to_f64() * bound_f + gl.to_f64(), iter_sigma);
    let e_bound = (spec.levels as usize + 1 == spec.p).then(|| {
        let e = std::f64::consts::E;
        let slack = e * g0.to_f64() - gl.to_f64();
        let sigma = sampled.then(|| (e * e * means.stderr(0).powi(2) + means.stderr(spec.levels).powi(2)).sqrt());
        let (pass, _) = check_slack(&Value::Approx(slack), e * g0.to_f64() + gl.to_f64(), sigma);
        EBound { factor: bound_f, factor_at_most_e: bound_f <= e, slack, pass }
    });
    let ok = levels.iter().all(|l| l.pass) && iterated_pass && e_bound.as_ref().is_none_or(|e| e.pass);
    ChainReport {
        means,
        factor: Value::Exact(factor),
        levels,
        iterated_bound: Value::Exact(bound),
        iterated_slack,
        iterated_pass,
        e_bound,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    }
}

/// Evaluates `(1 + 1/(p-1)) ḡ_{m-1} >= ḡ_m` for `m = 1..=L`.
pub fn chain_check(spec: &SpaceSpec, f: &EmbeddingMap, evaluation: Evaluation, budget: &Budget) -> Result<ChainReport> {
    Ok(chain_from_means(spec, mean_table(spec, f, evaluation, budget)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regularity {
    /// Distinct ordered `m`-segments met as edges, and the class size.
    pub edge_classes_covered: String,
    pub edge_class_size: String,
    /// Multiplicity of each ordered edge (`None` if not uniform).
    pub edge_multiplicity: Option<u64>,
    pub line_classes_covered: String,
    pub line_class_size: String,
    pub line_multiplicity: Option<u64>,
    pub uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub mode: MeanMode,
    pub m: u32,
    /// Group order (exact) or number of sampled isometries.
    pub orbit_size: usize,
    /// Squared edge lengths summed over the orbit (exact mode).
    pub edge_sum: Option<Value>,
    pub line_sum: Option<Value>,
    /// Per-edge mean over the orbit.
    pub edge_mean: Value,
    pub edge_stderr: Option<f64>,
    /// Per-connecting-line mean over the orbit.
    pub line_mean: Value,
    pub line_stderr: Option<f64>,
    /// Class means from enumeration, for the identity check.
    pub class_mean_upper: Option<Value>,
    pub class_mean_lower: Option<Value>,
    /// `edge_sum == p(p-1)|G| ḡ_m` and `line_sum == p²|G| ḡ_{m-1}`.
    pub identity_holds: Option<bool>,
    pub regularity: Option<Regularity>,
    /// `edge_mean / line_mean`, compared with `p / (p - 1)`.
    pub ratio: Option<f64>,
    pub bound: f64,
    /// Orbit members whose own double-simplex inequality failed.
    pub inequality_violations: usize,
    pub verdict: Verdict,
}

fn uniform_count(counts: &HashMap<(usize, usize), u64>) -> Option<u64> {
    let mut values = counts.values();
    let first = *values.next()?;
    values.all(|&c| c == first).then_some(first)
}

/// Sums the double-simplex inequality over the orbit of `double_simplex(spec, m)`.
pub fn orbit_average_check(
    spec: &SpaceSpec,
    m: u32,
    f: &EmbeddingMap,
    evaluation: Evaluation,
    budget: &Budget,
) -> Result<OrbitReport> {
    if m == 0 {
        return Err(Error::LevelOutOfRange { level: 0, max: spec.levels });
    }
    let ds = double_simplex(spec, m)?;
    let p = spec.p;
    let edges_per = (p * (p - 1)) as u64;
    let lines_per = (p * p) as u64;
    let bound = chain_factor(p).to_f64().unwrap();
    match evaluation {
        Evaluation::Exact => {
            let group = isometry_group(spec, budget)?;
            let images = Images::build(spec, f, f.is_exact(), budget)?;
            let mode = if images.is_exact() { MeanMode::Exact } else { MeanMode::Exhaustive };
            let mut edge_counts: HashMap<(usize, usize), u64> = HashMap::new();
            let mut line_counts: HashMap<(usize, usize), u64> = HashMap::new();
            let mut edge_sum = Value::zero(images.is_exact());
            let mut line_sum = Value::zero(images.is_exact());
            let mut violations = 0;
            for h in &group {
                let moved = ds.transport(h)?;
                let idx = |x: &Point| point_index(spec, x);
                let u = moved.u.iter().map(idx).collect::<Result<Vec<_>>>()?;
                let v = moved.v.iter().map(idx).collect::<Result<Vec<_>>>()?;
                let mut local_e = Value::zero(images.is_exact());
                let mut local_c = Value::zero(images.is_exact());
                for side in [&u, &v] {
                    for k in 0..p {
                        for l in k + 1..p {
                            *edge_counts.entry((side[k], side[l])).or_default() += 1;
                            *edge_counts.entry((side[l], side[k])).or_default() += 1;
                            local_e = local_e.add(&images.sq(side[k], side[l]));
                        }
                    }
                }
                for &a in &u {
                    for &b in &v {
                        *line_counts.entry((a, b)).or_default() += 1;
                        local_c = local_c.add(&images.sq(a, b));
                    }
                }
                if !local_c.sub(&local_e).is_nonnegative(FLOAT_REL_TOL, local_c.to_f64()) {
                    violations += 1;
                }
                edge_sum = edge_sum.add(&local_e);
                line_sum = line_sum.add(&local_c);
            }
            let order = BigInt::from(group.len());
            let upper = divide(images.sum_sq(segment_pairs(spec, m, budget)?), &class_size(spec, m)?);
            let lower = divide(images.sum_sq(segment_pairs(spec, m - 1, budget)?), &class_size(spec, m - 1)?);
            // edges are counted once per unordered pair, hence p(p-1)/2 per side
            let edge_total = &order * BigInt::from(edges_per);
            let line_total = &order * BigInt::from(lines_per);
            let expect_e = upper.scale(&BigRational::from_integer(edge_total.clone()));
            let expect_c = lower.scale(&BigRational::from_integer(line_total.clone()));
            let close = |a: &Value, b: &Value| match (a, b) {
                (Value::Exact(x), Value::Exact(y)) => x == y,
                _ => (a.to_f64() - b.to_f64()).abs() <= FLOAT_REL_TOL * a.to_f64().abs().max(1.0),
            };
            let identity = close(&edge_sum, &expect_e) && close(&line_sum, &expect_c);
            let edge_class = class_size(spec, m)?;
            let line_class = class_size(spec, m - 1)?;
            let edge_multiplicity = uniform_count(&edge_counts);
            let line_multiplicity = uniform_count(&line_counts);
            let uniform = edge_multiplicity.is_some()
                && line_multiplicity.is_some()
                && BigInt::from(edge_counts.len()) == edge_class
                && BigInt::from(line_counts.len()) == line_class;
            let regularity = Regularity {
                edge_classes_covered: edge_counts.len().to_string(),
                edge_class_size: edge_class.to_string(),
                edge_multiplicity,
                line_classes_covered: line_counts.len().to_string(),
                line_class_size: line_class.to_string(),
                line_multiplicity,
                uniform,
            };
            let edge_mean = divide(edge_sum.clone(), &edge_total);
            let line_mean = divide(line_sum.clone(), &line_total);
            let ratio = (!line_mean.is_zero()).then(|| edge_mean.to_f64() / line_mean.to_f64());
            let degenerate = line_mean.is_zero() && edge_mean.is_zero();
            let ok = identity && uniform && violations == 0 && line_sum.sub(&edge_sum).is_nonnegative(FLOAT_REL_TOL, line_sum.to_f64());
            let verdict = match (ok, degenerate) {
                (false, _) => Verdict::Fail,
                (true, true) => Verdict::Degenerate,
                (true, false) => Verdict::Pass,
            };
            Ok(OrbitReport {
                mode,
                m,
                orbit_size: group.len(),
                edge_sum: Some(edge_sum),
                line_sum: Some(line_sum),
                edge_mean,
                edge_stderr: None,
                line_mean,
                line_stderr: None,
                class_mean_upper: Some(upper),
                class_mean_lower: Some(lower),
                identity_holds: Some(identity),
                regularity: Some(regularity),
                ratio,
                bound,
                inequality_violations: violations,
                verdict,
            })
        }
        Evaluation::Sampled { samples, seed } => {
            if samples < 2 {
                return Err(Error::TooFewSamples { min: 2, got: samples });
            }
            let mut rng = rng::stream(seed, tag::ORBIT, m);
            let (mut edge_vals, mut line_vals) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
            let mut violations = 0;
            for _ in 0..samples {
                let h = sample_isometry(spec, &mut rng);
                let moved = ds.transport(&h)?;
                let u = moved.u.iter().map(|x| f.eval(spec, x)).collect::<Result<Vec<_>>>()?;
                let v = moved.v.iter().map(|x| f.eval(spec, x)).collect::<Result<Vec<_>>>()?;
                let mut e = 0.0;
                for side in [&u, &v] {
                    for k in 0..p {
                        for l in k + 1..p {
                            e += sq(&side[k], &side[l]);
                        }
                    }
                }
                let c: f64 = u.iter().flat_map(|a| v.iter().map(move |b| sq(a, b))).sum();
                if c - e < -FLOAT_REL_TOL * c.abs().max(1.0) {
                    violations += 1;
                }
                edge_vals.push(e / edges_per as f64);
                line_vals.push(c / lines_per as f64);
            }
            let stats = |xs: &[f64]| {
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
                (mean, (var / n).sqrt())
            };
            let (edge_mean, edge_se) = stats(&edge_vals);
            let (line_mean, line_se) = stats(&line_vals);
            let ratio = (line_mean != 0.0).then(|| edge_mean / line_mean);
            let verdict = if violations > 0 {
                Verdict::Fail
            } else if line_mean == 0.0 && edge_mean == 0.0 {
                Verdict::Degenerate
            } else {
                Verdict::Illustration
            };
            Ok(OrbitReport {
                mode: MeanMode::Sampled,
                m,
                orbit_size: samples,
                edge_sum: None,
                line_sum: None,
                edge_mean: Value::Approx(edge_mean),
                edge_stderr: Some(edge_se),
                line_mean: Value::Approx(line_mean),
                line_stderr: Some(line_se),
                class_mean_upper: None,
                class_mean_lower: None,
                identity_holds: None,
                regularity: None,
                ratio,
                bound,
                inequality_violations: violations,
                verdict,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub mode: MeanMode,
    /// Squared minimum image length over top-level segments.
    pub inf_top_sq: Value,
    /// Squared maximum image length over 0-segments.
    pub sup_bottom_sq: Value,
    pub inf_top: f64,
    pub sup_bottom: f64,
    pub ratio: f64,
    /// `sqrt((p/(p-1))^L)`.
    pub bound: f64,
    /// Limit of the bound along the standard family.
    pub sqrt_e: f64,
    pub samples: Option<usize>,
    pub verdict: Verdict,
}

/// Compares the worst top-level image length with the best 0-segment image
/// length. Exact mode is a certificate; sampled mode only illustrates, since
/// sampling over-estimates the infimum and under-estimates the supremum.
pub fn enflo_certificate(
    spec: &SpaceSpec,
    f: &EmbeddingMap,
    evaluation: Evaluation,
    budget: &Budget,
) -> Result<CertificateReport> {
    let top = spec.levels;
    let factor_pow = num_traits::pow(chain_factor(spec.p), top as usize);
    let bound = factor_pow.to_f64().unwrap().sqrt();
    let sqrt_e = std::f64::consts::E.sqrt();
    let (mode, inf_sq, sup_sq, samples) = match evaluation {
        Evaluation::Exact => {
            let images = Images::build(spec, f, f.is_exact(), budget)?;
            let extreme = |m: u32, want_min: bool| -> Result<Value> {
                let mut best: Option<Value> = None;
                for (i, j) in segment_pairs(spec, m, budget)? {
                    let x = images.sq(i, j);
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            let diff = x.sub(b);
                            let below = match &diff {
                                Value::Exact(r) => r.is_negative(),
                                Value::Approx(d) => *d < 0.0,
                            };
                            let above = match &diff {
                                Value::Exact(r) => r.is_positive(),
                                Value::Approx(d) => *d > 0.0,
                            };
                            if want_min { below } else { above }
                        }
                    };
                    if better {
                        best = Some(x);
                    }
                }
                Ok(best.unwrap_or(Value::zero(images.is_exact())))
            };
            let mode = if images.is_exact() { MeanMode::Exact } else { MeanMode::Exhaustive };
            (mode, extreme(top, true)?, extreme(0, false)?, None)
        }
        Evaluation::Sampled { samples, seed } => {
            if samples < 1 {
                return Err(Error::TooFewSamples { min: 1, got: samples });
            }
            let mut rng = rng::stream(seed, tag::MEAN, u32::MAX);
            let mut draw = |m: u32| -> Result<Vec<f64>> {
                (0..samples)
                    .map(|_| {
                        let s = sample_segment(spec, m, &mut rng)?;
                        Ok(sq(&f.eval(spec, &s.a)?, &f.eval(spec, &s.b)?))
                    })
                    .collect()
            };
            let inf = draw(top)?.into_iter().fold(f64::INFINITY, f64::min);
            let sup = draw(0)?.into_iter().fold(0.0, f64::max);
            (MeanMode::Sampled, Value::Approx(inf), Value::Approx(sup), Some(samples))
        }
    };
    let (inf_top, sup_bottom) = (inf_sq.to_f64().sqrt(), sup_sq.to_f64().sqrt());
    let degenerate = sup_sq.is_zero() && inf_sq.is_zero();
    let ratio = if degenerate {
        0.0
    } else if sup_bottom == 0.0 {
        f64::INFINITY
    } else {
        inf_top / sup_bottom
    };
    let within = match (&inf_sq, &sup_sq) {
        // inf² <= (p/(p-1))^L sup², decided in rationals
        (Value::Exact(i), Value::Exact(s)) => i <= &(s * &factor_pow),
        _ => ratio <= bound * (1.0 + FLOAT_REL_TOL),
    };
    let verdict = if degenerate {
        Verdict::Degenerate
    } else if !within {
        Verdict::Fail
    } else if mode == MeanMode::Sampled {
        Verdict::Illustration
    } else {
        Verdict::Pass
    };
    Ok(CertificateReport {
        mode,
        inf_top_sq: inf_sq,
        sup_bottom_sq: sup_sq,
        inf_top,
        sup_bottom,
        ratio,
        bound,
        sqrt_e,
        samples,
        verdict,
    })
}

/// Exact squared image length of a segment, for callers that need single values.
pub fn segment_energy(spec: &SpaceSpec, f: &EmbeddingMap, a: &Point, b: &Point) -> Result<Value> {
    if f.is_exact() {
        let (x, y) = (f.eval_exact(spec, a)?, f.eval_exact(spec, b)?);
        Ok(Value::Exact(crate::embeddings::squared_distance_exact(&x, &y)))
    } else {
        Ok(Value::Approx(euclidean(&f.eval(spec, a)?, &f.eval(spec, b)?).powi(2)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn int(x: i64) -> BigRational {
        BigRational::from_integer(x.into())
    }

    fn cfg1(u: &[i64], v: &[i64]) -> EuclideanConfig<BigRational> {
        let wrap = |xs: &[i64]| xs.iter().map(|&x| vec![int(x)]).collect();
        EuclideanConfig::new(wrap(u), wrap(v)).unwrap()
    }

    fn tiny() -> SpaceSpec {
        SpaceSpec::custom(8, 2, 2, 1).unwrap()
    }

    #[test]
    fn gap_examples() {
        let g = double_simplex_gap(&cfg1(&[0, 2], &[1, 1]));
        assert_eq!((g.sum_c, g.sum_s, g.gap.clone(), g.witness), (int(4), int(4), int(0), int(0)));
        let g = double_simplex_gap(&cfg1(&[0, 0], &[1, 1]));
        assert_eq!((g.sum_c, g.sum_s, g.gap.clone(), g.witness), (int(4), int(0), int(4), int(4)));
        assert!(EuclideanConfig::new(vec![vec![int(0)]], vec![vec![int(0)]]).is_err());
        assert!(matches!(
            EuclideanConfig::new(vec![vec![int(0)], vec![int(0), int(1)]], vec![vec![int(0)], vec![int(0)]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn chain_factor_limit() {
        for p in 2..=10 {
            assert!(chain_constant(p) <= std::f64::consts::E + 1e-12);
        }
        assert!((standard_bound(2) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_map_means_vanish() {
        let s = tiny();
        let b = Budget::default();
        let f = EmbeddingMap::constant_table(&s, vec![int(3), int(-1)], &b).unwrap();
        for m in 0..=1 {
            assert!(exact_mean_g(&s, &f, m, &b).unwrap().is_zero());
        }
        let est = sampled_mean_g(&s, &f, 1, 50, 1).unwrap();
        assert_eq!((est.estimate, est.stderr), (0.0, 0.0));
        let report = chain_check(&s, &f, Evaluation::Exact, &b).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.levels.iter().all(|l| l.slack.is_zero()));
        let cert = enflo_certificate(&s, &f, Evaluation::Exact, &b).unwrap();
        assert_eq!(cert.verdict, Verdict::Degenerate);
        assert_eq!(cert.ratio, 0.0);
        let orbit = orbit_average_check(&s, 1, &f, Evaluation::Exact, &b).unwrap();
        assert!(orbit.edge_sum.unwrap().is_zero() && orbit.line_sum.unwrap().is_zero());
    }

    #[test]
    fn exact_mode_rejects_circle() {
        let s = tiny();
        assert!(matches!(
            exact_mean_g(&s, &EmbeddingMap::circle(1.0), 0, &Budget::default()),
            Err(Error::NotExact(_))
        ));
    }

    #[test]
    fn circle_chain_closed_form() {
        let s = tiny();
        let b = Budget::default();
        let report = chain_check(&s, &EmbeddingMap::circle(1.0), Evaluation::Exact, &b).unwrap();
        assert_eq!(report.means.mode, MeanMode::Exhaustive);
        let chord = |k: f64| 2.0 * (PI * k / 8.0).sin();
        let g0 = 2.0 * chord(1.0).powi(2);
        let g1 = chord(2.0).powi(2);
        assert!((report.means.value(0).to_f64() - g0).abs() < 1e-12);
        assert!((report.means.value(1).to_f64() - g1).abs() < 1e-12);
        assert!((g0 - 1.1716).abs() < 1e-4 && (g1 - 2.0).abs() < 1e-12);
        assert!((report.levels[0].slack.to_f64() - (2.0 * g0 - g1)).abs() < 1e-12);
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.e_bound.unwrap().pass);
    }

    #[test]
    fn circle_certificate() {
        let cert = enflo_certificate(&tiny(), &EmbeddingMap::circle(1.0), Evaluation::Exact, &Budget::default()).unwrap();
        assert!((cert.ratio - 1.3066).abs() < 1e-3, "{}", cert.ratio);
        assert!((cert.bound - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(cert.verdict, Verdict::Pass);
    }

    #[test]
    fn scaling_multiplies_means_by_square() {
        let s = SpaceSpec::custom(8, 4, 2, 2).unwrap();
        let b = Budget::default();
        let f = EmbeddingMap::random_integer_table(&s, 2, 5, 4, &b).unwrap();
        let EmbeddingMap::Tabulated { dim, table } = &f else { unreachable!() };
        let scaled = EmbeddingMap::tabulated(
            *dim,
            table.iter().map(|(p, v)| (p.clone(), v.iter().map(|x| x * int(3)).collect())).collect(),
        )
        .unwrap();
        let base = chain_check(&s, &f, Evaluation::Exact, &b).unwrap();
        let tripled = chain_check(&s, &scaled, Evaluation::Exact, &b).unwrap();
        for m in 0..=2 {
            let (x, y) = (base.means.value(m).as_exact().unwrap(), tripled.means.value(m).as_exact().unwrap());
            assert_eq!(x * int(9), *y);
        }
        assert_eq!(base.verdict, tripled.verdict);
    }

    #[test]
    fn mean_is_invariant_under_isometry_precomposition() {
        let s = tiny();
        let b = Budget::default();
        let f = EmbeddingMap::random_integer_table(&s, 3, 4, 8, &b).unwrap();
        let h = crate::space::random_isometry(&s, 17);
        let EmbeddingMap::Tabulated { dim, table } = &f else { unreachable!() };
        let composed = EmbeddingMap::tabulated(
            *dim,
            table.keys().map(|p| (p.clone(), table[&h.apply(p).unwrap()].clone())).collect(),
        )
        .unwrap();
        for m in 0..=1 {
            assert_eq!(exact_mean_g(&s, &f, m, &b).unwrap(), exact_mean_g(&s, &composed, m, &b).unwrap());
        }
    }

    #[test]
    fn sampled_mean_tracks_exact() {
        let s = SpaceSpec::custom(8, 4, 2, 2).unwrap();
        let b = Budget::default();
        let f = EmbeddingMap::random_integer_table(&s, 3, 6, 21, &b).unwrap();
        for m in 0..=2 {
            let exact = exact_mean_g(&s, &f, m, &b).unwrap().to_f64().unwrap();
            let small = sampled_mean_g(&s, &f, m, 4000, 5).unwrap();
            assert!((small.estimate - exact).abs() <= SIGMA_GATE * small.stderr, "m={m}");
            let large = sampled_mean_g(&s, &f, m, 8000, 5).unwrap();
            let ratio = large.stderr.powi(2) / small.stderr.powi(2);
            assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
        }
        assert!(sampled_mean_g(&s, &f, 0, 1, 0).is_err());
    }

    #[test]
    fn orbit_regularity_on_tiny_spec() {
        let s = tiny();
        let b = Budget::default();
        let f = EmbeddingMap::random_integer_table(&s, 3, 9, 2, &b).unwrap();
        let report = orbit_average_check(&s, 1, &f, Evaluation::Exact, &b).unwrap();
        assert_eq!(report.orbit_size, 512);
        assert_eq!(report.identity_holds, Some(true));
        let reg = report.regularity.unwrap();
        assert!(reg.uniform);
        // 512 * 2 ordered edges per side * 2 sides / 256 segments; 512 * 4 / 256
        assert_eq!(reg.edge_multiplicity, Some(8));
        assert_eq!(reg.line_multiplicity, Some(8));
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn sampled_orbit_on_circle() {
        let s = SpaceSpec::custom(8, 4, 2, 2).unwrap();
        let report = orbit_average_check(
            &s,
            2,
            &EmbeddingMap::circle(1.0),
            Evaluation::Sampled { samples: 200, seed: 1 },
            &Budget::default(),
        )
        .unwrap();
        let chord = |k: f64| 2.0 * (PI * k / 8.0).sin();
        assert!((report.edge_mean.to_f64() - chord(4.0).powi(2)).abs() < 1e-9);
        assert!((report.line_mean.to_f64() - 2.0 * chord(2.0).powi(2)).abs() < 1e-9);
        assert_eq!(report.verdict, Verdict::Illustration);
    }

    #[test]
    fn gap_trials_pass_in_both_arithmetics() {
        let exact = gap_trials(50, 9, Arithmetic::Rational);
        assert!(exact.pass && exact.min_gap >= 0.0);
        assert!(gap_trials(50, 9, Arithmetic::Float).pass);
    }

    proptest! {
        #[test]
        fn gap_equals_witness(seed in any::<u64>(), p in 2usize..=6, dim in 1usize..=16) {
            let mut rng = rng::stream(seed, tag::CONFIG, 0);
            let cfg = random_rational_config(&mut rng, p, dim, 50, 7);
            let g = double_simplex_gap(&cfg);
            prop_assert_eq!(&g.gap, &g.witness);
            prop_assert!(!g.gap.is_negative());
        }

        #[test]
        fn float_gap_is_nonnegative(u in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 4),
                                    v in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 4)) {
            let g = double_simplex_gap(&EuclideanConfig::new(u, v).unwrap());
            prop_assert!((g.gap - g.witness).abs() <= FLOAT_REL_TOL * g.sum_c.max(1.0));
            prop_assert!(g.gap >= -FLOAT_REL_TOL * g.sum_c.max(1.0));
        }

        #[test]
        fn chain_holds_for_arbitrary_maps(seed in any::<u64>(), range in 1i64..20) {
            let b = Budget::default();
            for spec in [tiny(), SpaceSpec::custom(8, 4, 2, 1).unwrap()] {
                let f = EmbeddingMap::random_integer_table(&spec, 2, range, seed, &b).unwrap();
                let report = chain_check(&spec, &f, Evaluation::Exact, &b).unwrap();
                prop_assert_eq!(report.verdict, Verdict::Pass);
                let cert = enflo_certificate(&spec, &f, Evaluation::Exact, &b).unwrap();
                prop_assert!(cert.verdict != Verdict::Fail);
            }
        }
    }
}
