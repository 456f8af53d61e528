//! Candidate maps from a space into Euclidean space, and empirical
//! compression/expansion moduli.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Read;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::space::{distance, enumerate_points, random_point, Point, SpaceSpec};

/// Entries of `RandomLinear` matrices are uniform on `-LINEAR_ENTRY_BOUND..=LINEAR_ENTRY_BOUND`.
pub const LINEAR_ENTRY_BOUND: i64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingMap {
    /// Each coordinate `x` goes to `scale * (cos 2πx/q, sin 2πx/q)`.
    CircleLift { scale: f64 },
    /// Canonical representative in `[0, q)`; ignores wrap-around.
    CoordinateLift,
    /// A seeded integer matrix applied to the coordinate lift.
    RandomLinear { seed: u64, matrix: Vec<Vec<i64>> },
    /// Explicit point-to-vector table.
    Tabulated { dim: usize, table: HashMap<Point, Vec<BigRational>> },
}

impl EmbeddingMap {
    pub fn circle(scale: f64) -> Self {
        Self::CircleLift { scale }
    }

    pub fn random_linear(spec: &SpaceSpec, target_dim: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, tag::LINEAR_MAP, 0);
        let matrix = (0..target_dim)
            .map(|_| (0..spec.d).map(|_| rng.random_range(-LINEAR_ENTRY_BOUND..=LINEAR_ENTRY_BOUND)).collect())
            .collect();
        Self::RandomLinear { seed, matrix }
    }

    pub fn tabulated(dim: usize, table: HashMap<Point, Vec<BigRational>>) -> Result<Self> {
        if let Some(bad) = table.values().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(Self::Tabulated { dim, table })
    }

    /// Independent uniform integers in `-range..=range` for every point.
    pub fn random_integer_table(spec: &SpaceSpec, dim: usize, range: i64, seed: u64, budget: &Budget) -> Result<Self> {
        let mut rng = rng::stream(seed, tag::TABLE, 0);
        let table = enumerate_points(spec, budget)?
            .map(|p| {
                let image = (0..dim).map(|_| BigRational::from_integer(rng.random_range(-range..=range).into())).collect();
                (p, image)
            })
            .collect();
        Ok(Self::Tabulated { dim, table })
    }

    pub fn constant_table(spec: &SpaceSpec, value: Vec<BigRational>, budget: &Budget) -> Result<Self> {
        let dim = value.len();
        let table = enumerate_points(spec, budget)?.map(|p| (p, value.clone())).collect();
        Ok(Self::Tabulated { dim, table })
    }

    /// CSV rows: `d` source coordinates followed by the image coordinates.
    /// Image cells may be integers, fractions `a/b`, or decimals. No header.
    pub fn from_csv<R: Read>(spec: &SpaceSpec, reader: R) -> Result<Self> {
        let mut rows = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut table = HashMap::new();
        let mut dim = None;
        for (line, record) in rows.records().enumerate() {
            let record = record.map_err(|e| Error::Table(e.to_string()))?;
            if record.len() <= spec.d {
                return Err(Error::Table(format!("row {}: expected more than {} columns", line + 1, spec.d)));
            }
            let coords = record
                .iter()
                .take(spec.d)
                .map(|c| c.parse::<u64>().map_err(|e| Error::Table(format!("row {}: {c:?}: {e}", line + 1))))
                .collect::<Result<Vec<_>>>()?;
            let point = Point::dense(coords);
            spec.check_point(&point)?;
            let image = record.iter().skip(spec.d).map(parse_rational).collect::<Result<Vec<_>>>()?;
            match dim {
                None => dim = Some(image.len()),
                Some(k) if k != image.len() => {
                    return Err(Error::Table(format!("row {}: image has {} columns, expected {k}", line + 1, image.len())))
                }
                Some(_) => {}
            }
            table.insert(point, image);
        }
        let dim = dim.ok_or_else(|| Error::Table("empty table".into()))?;
        Ok(Self::Tabulated { dim, table })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::CircleLift { .. } => "circle",
            Self::CoordinateLift => "coordinate",
            Self::RandomLinear { .. } => "random_linear",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    pub fn output_dim(&self, spec: &SpaceSpec) -> usize {
        match self {
            Self::CircleLift { .. } => 2 * spec.d,
            Self::CoordinateLift => spec.d,
            Self::RandomLinear { matrix, .. } => matrix.len(),
            Self::Tabulated { dim, .. } => *dim,
        }
    }

    /// Whether `eval_exact` is available.
    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::CircleLift { .. })
    }

    fn check_source(&self, spec: &SpaceSpec, point: &Point) -> Result<()> {
        spec.check_point(point)?;
        if let Self::RandomLinear { matrix, .. } = self {
            if let Some(row) = matrix.iter().find(|r| r.len() != spec.d) {
                return Err(Error::DimensionMismatch { expected: row.len(), got: spec.d });
            }
        }
        Ok(())
    }

    fn linear_image(matrix: &[Vec<i64>], point: &Point) -> Vec<i64> {
        let coords = point.to_vec();
        matrix
            .iter()
            .map(|row| row.iter().zip(&coords).map(|(&a, &x)| a * x as i64).sum())
            .collect()
    }

    fn lookup<'a>(table: &'a HashMap<Point, Vec<BigRational>>, point: &Point) -> Result<&'a Vec<BigRational>> {
        table.get(point).ok_or_else(|| Error::MissingTableEntry(point.to_string()))
    }

    pub fn eval(&self, spec: &SpaceSpec, point: &Point) -> Result<Vec<f64>> {
        self.check_source(spec, point)?;
        Ok(match self {
            Self::CircleLift { scale } => point
                .coords()
                .flat_map(|x| {
                    let angle = 2.0 * PI * x as f64 / spec.q as f64;
                    [scale * angle.cos(), scale * angle.sin()]
                })
                .collect(),
            Self::CoordinateLift => point.coords().map(|x| x as f64).collect(),
            Self::RandomLinear { matrix, .. } => Self::linear_image(matrix, point).into_iter().map(|x| x as f64).collect(),
            Self::Tabulated { table, .. } => Self::lookup(table, point)?
                .iter()
                .map(|r| r.to_f64().unwrap_or(f64::NAN))
                .collect(),
        })
    }

    pub fn eval_exact(&self, spec: &SpaceSpec, point: &Point) -> Result<Vec<BigRational>> {
        self.check_source(spec, point)?;
        let int = |x: i64| BigRational::from_integer(BigInt::from(x));
        match self {
            Self::CircleLift { .. } => Err(Error::NotExact("circle lift has irrational coordinates".into())),
            Self::CoordinateLift => Ok(point.coords().map(|x| BigRational::from_integer(x.into())).collect()),
            Self::RandomLinear { matrix, .. } => Ok(Self::linear_image(matrix, point).into_iter().map(int).collect()),
            Self::Tabulated { table, .. } => Self::lookup(table, point).cloned(),
        }
    }
}

fn parse_rational(cell: &str) -> Result<BigRational> {
    let bad = |e: &dyn std::fmt::Display| Error::Table(format!("{cell:?}: {e}"));
    if let Some((int, frac)) = cell.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
        let numer: BigInt = digits.parse().map_err(|e| bad(&e))?;
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let value = BigRational::new(numer, denom);
        return Ok(if negative { -value } else { value });
    }
    cell.parse::<BigRational>().map_err(|e| bad(&e))
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuliMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRow {
    pub t: u64,
    /// Pairs observed at source distance exactly `t`.
    pub pairs: u64,
    /// Minimum image distance over observed pairs at source distance `>= t`.
    pub rho1_hat: Option<f64>,
    /// Maximum image distance over observed pairs at source distance `<= t`.
    pub rho2_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuliReport {
    pub mode: ModuliMode,
    pub map: &'static str,
    pub seed: Option<u64>,
    pub scales: Vec<ScaleRow>,
    /// Scales with no observed pair; their cumulative values come only from other scales.
    pub unreachable: Vec<u64>,
}

impl ModuliReport {
    pub fn row(&self, t: u64) -> Option<&ScaleRow> {
        self.scales.iter().find(|r| r.t == t)
    }

    fn from_extremes(mode: ModuliMode, map: &'static str, seed: Option<u64>, per_scale: Vec<(u64, u64, f64, f64)>) -> Self {
        let mut scales: Vec<ScaleRow> = per_scale
            .iter()
            .map(|&(t, pairs, _, _)| ScaleRow { t, pairs, rho1_hat: None, rho2_hat: None })
            .collect();
        let mut running_max: Option<f64> = None;
        for (row, &(_, pairs, _, hi)) in scales.iter_mut().zip(&per_scale) {
            if pairs > 0 {
                running_max = Some(running_max.map_or(hi, |m| m.max(hi)));
            }
            row.rho2_hat = running_max;
        }
        let mut running_min: Option<f64> = None;
        for (row, &(_, pairs, lo, _)) in scales.iter_mut().zip(&per_scale).rev() {
            if pairs > 0 {
                running_min = Some(running_min.map_or(lo, |m| m.min(lo)));
            }
            row.rho1_hat = running_min;
        }
        let unreachable = scales.iter().filter(|r| r.pairs == 0).map(|r| r.t).collect();
        Self { mode, map, seed, scales, unreachable }
    }
}

/// Samples `samples_per_scale` pairs at every source distance `t = 1..=q/2`.
///
/// A pair is built from a uniform base point by offsetting one uniformly
/// chosen pivot coordinate by `±t` and every other coordinate by a uniform
/// offset in `[-t, t]`, so the source distance is exactly `t`. This is not
/// the uniform law on pairs at distance `t`, only an approximation to it.
pub fn empirical_moduli(spec: &SpaceSpec, map: &EmbeddingMap, samples_per_scale: usize, seed: u64) -> Result<ModuliReport> {
    if samples_per_scale == 0 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    let q = spec.q;
    let mut per_scale = Vec::new();
    for t in 1..=q / 2 {
        let mut rng = rng::stream(seed, tag::MODULI, t as u32);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..samples_per_scale {
            let a = random_point(spec, &mut rng);
            let pivot = rng.random_range(0..spec.d);
            let b: Vec<u64> = a
                .coords()
                .enumerate()
                .map(|(i, x)| {
                    let offset = if i == pivot {
                        if rng.random::<bool>() { t as i64 } else { -(t as i64) }
                    } else {
                        rng.random_range(-(t as i64)..=t as i64)
                    };
                    (x as i64 + offset).rem_euclid(q as i64) as u64
                })
                .collect();
            let b = Point::dense(b);
            debug_assert_eq!(distance(spec, &a, &b)?, t);
            let image = euclidean(&map.eval(spec, &a)?, &map.eval(spec, &b)?);
            lo = lo.min(image);
            hi = hi.max(image);
        }
        per_scale.push((t, samples_per_scale as u64, lo, hi));
    }
    Ok(ModuliReport::from_extremes(ModuliMode::Sampled, map.kind(), Some(seed), per_scale))
}

/// All ordered pairs of distinct points.
pub fn exhaustive_moduli(spec: &SpaceSpec, map: &EmbeddingMap, budget: &Budget) -> Result<ModuliReport> {
    let points: Vec<Point> = enumerate_points(spec, budget)?.collect();
    Budget::check((points.len() as u128).checked_pow(2), budget.max_pairs, "pairs")?;
    let images = points.iter().map(|p| map.eval(spec, p)).collect::<Result<Vec<_>>>()?;
    let half = (spec.q / 2) as usize;
    let mut per_scale: Vec<(u64, u64, f64, f64)> =
        (1..=half as u64).map(|t| (t, 0, f64::INFINITY, f64::NEG_INFINITY)).collect();
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            let t = distance(spec, a, b)? as usize;
            let image = euclidean(&images[i], &images[j]);
            let slot = &mut per_scale[t - 1];
            slot.1 += 2;
            slot.2 = slot.2.min(image);
            slot.3 = slot.3.max(image);
        }
    }
    Ok(ModuliReport::from_extremes(ModuliMode::Exhaustive, map.kind(), None, per_scale))
}

/// Whether every point has the same image.
pub fn is_constant(spec: &SpaceSpec, map: &EmbeddingMap, budget: &Budget) -> Result<bool> {
    let mut points = enumerate_points(spec, budget)?;
    let Some(first) = points.next() else { return Ok(true) };
    let reference = map.eval(spec, &first)?;
    for p in points {
        if euclidean(&map.eval(spec, &p)?, &reference) != 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn squared_distance_exact(x: &[BigRational], y: &[BigRational]) -> BigRational {
    x.iter().zip(y).fold(BigRational::zero(), |acc, (a, b)| {
        let diff = a - b;
        acc + &diff * &diff
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SpaceSpec {
        SpaceSpec::custom(8, 2, 2, 1).unwrap()
    }

    #[test]
    fn circle_lift_values() {
        let s = tiny();
        let image = EmbeddingMap::circle(1.0).eval(&s, &Point::zeros(2)).unwrap();
        assert_eq!(image, vec![1.0, 0.0, 1.0, 0.0]);
        let a = EmbeddingMap::circle(1.0).eval(&s, &Point::dense(vec![0, 0])).unwrap();
        let b = EmbeddingMap::circle(1.0).eval(&s, &Point::dense(vec![1, 1])).unwrap();
        let chord = 2.0 * (PI / 8.0).sin();
        assert!((euclidean(&a, &b) - 2f64.sqrt() * chord).abs() < 1e-12);
        assert!((euclidean(&a, &b) - 1.0824).abs() < 1e-4);
        assert!(EmbeddingMap::circle(1.0).eval_exact(&s, &Point::zeros(2)).is_err());
    }

    #[test]
    fn coordinate_lift_ignores_wraparound() {
        let s = tiny();
        let map = EmbeddingMap::CoordinateLift;
        let a = map.eval(&s, &Point::dense(vec![0, 0])).unwrap();
        let b = map.eval(&s, &Point::dense(vec![7, 0])).unwrap();
        assert_eq!(euclidean(&a, &b), 7.0);
        let report = exhaustive_moduli(&s, &map, &Budget::default()).unwrap();
        assert_eq!(report.row(1).unwrap().rho2_hat, Some(7.0 * 2f64.sqrt()));
    }

    #[test]
    fn moduli_of_circle_lift_are_positive_and_finite() {
        let s = tiny();
        let map = EmbeddingMap::circle(1.0);
        let report = empirical_moduli(&s, &map, 200, 3).unwrap();
        assert!(report.row(1).unwrap().rho1_hat.unwrap() > 0.0);
        assert!(report.row(4).unwrap().rho2_hat.unwrap().is_finite());
        assert!(report.unreachable.is_empty());
        for w in report.scales.windows(2) {
            assert!(w[0].rho1_hat <= w[1].rho1_hat);
            assert!(w[0].rho2_hat <= w[1].rho2_hat);
        }
        for row in &report.scales {
            let bound = 2.0 * (PI * row.t as f64 / s.q as f64).sin();
            assert!(row.rho1_hat.unwrap() >= bound - 1e-12);
            assert!(row.rho1_hat <= row.rho2_hat);
        }
    }

    #[test]
    fn constant_map_has_zero_moduli() {
        let s = tiny();
        let b = Budget::default();
        let map = EmbeddingMap::constant_table(&s, vec![BigRational::from_integer(5.into())], &b).unwrap();
        let report = exhaustive_moduli(&s, &map, &b).unwrap();
        assert!(report.scales.iter().all(|r| r.rho1_hat == Some(0.0)));
        assert!(is_constant(&s, &map, &b).unwrap());
        assert!(!is_constant(&s, &EmbeddingMap::circle(1.0), &b).unwrap());
    }

    #[test]
    fn sampled_moduli_approach_exhaustive() {
        let s = tiny();
        let map = EmbeddingMap::circle(2.0);
        let exact = exhaustive_moduli(&s, &map, &Budget::default()).unwrap();
        let sampled = empirical_moduli(&s, &map, 4000, 9).unwrap();
        for (e, x) in exact.scales.iter().zip(&sampled.scales) {
            assert!(x.rho1_hat.unwrap() >= e.rho1_hat.unwrap() - 1e-12);
            assert!(x.rho2_hat.unwrap() <= e.rho2_hat.unwrap() + 1e-12);
            assert!((x.rho1_hat.unwrap() - e.rho1_hat.unwrap()).abs() < 1e-9);
            assert!((x.rho2_hat.unwrap() - e.rho2_hat.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_table_round_trip() {
        let s = tiny();
        let text = "0,0, 1, 1/2\n0,1,-2,0.25\n";
        let map = EmbeddingMap::from_csv(&s, text.as_bytes()).unwrap();
        let image = map.eval_exact(&s, &Point::dense(vec![0, 1])).unwrap();
        assert_eq!(image, vec![BigRational::from_integer((-2).into()), BigRational::new(1.into(), 4.into())]);
        assert!(matches!(map.eval(&s, &Point::dense(vec![3, 3])), Err(Error::MissingTableEntry(_))));
        assert!(EmbeddingMap::from_csv(&s, "0,0,1\n0,1,1,2\n".as_bytes()).is_err());
        assert!(EmbeddingMap::from_csv(&s, "9,0,1\n".as_bytes()).is_err());
        assert!(EmbeddingMap::from_csv(&s, "".as_bytes()).is_err());
    }

    #[test]
    fn decimal_cells_are_exact() {
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("0.1").unwrap(), BigRational::new(1.into(), 10.into()));
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn random_linear_is_seeded() {
        let s = SpaceSpec::custom(8, 4, 2, 2).unwrap();
        let a = EmbeddingMap::random_linear(&s, 3, 1);
        assert_eq!(a, EmbeddingMap::random_linear(&s, 3, 1));
        assert_ne!(a, EmbeddingMap::random_linear(&s, 3, 2));
        let p = Point::dense(vec![1, 2, 3, 4]);
        let exact = a.eval_exact(&s, &p).unwrap();
        let approx = a.eval(&s, &p).unwrap();
        assert_eq!(exact.len(), 3);
        for (e, f) in exact.iter().zip(approx) {
            assert_eq!(e.to_f64().unwrap(), f);
        }
    }
}
