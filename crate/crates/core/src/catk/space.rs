use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    exponential_distance, exponential_geodesic_point, geodesic_distance_numeric, solve_geodesic, MetricPoint,
    WarpedMetric,
};
use crate::qcalc::QParam;

/// Which family a space belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceDescriptor {
    WarpedHyperbolic { t: f64, fiber_dim: usize },
    NumericWarped { dim: usize },
    Tree { vertices: usize, edges: usize },
    Lp { dim: usize, p: f64 },
}

/// A geodesic metric space the CAT(k) harness can sample.
///
/// `geodesic_point(a, b, s)` lies on one fixed geodesic from `a` to `b` at
/// arclength `s d(a, b)`. Spaces whose geodesics are not unique list the
/// others through `alternative_geodesic_points`.
pub trait GeodesicSpace: Sync {
    type Point: Clone + Send + Sync + std::fmt::Debug;

    fn descriptor(&self) -> SpaceDescriptor;
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> Result<f64>;
    fn geodesic_point(&self, a: &Self::Point, b: &Self::Point, s: f64) -> Result<Self::Point>;
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Self::Point;
    /// Coordinates used when reporting a point.
    fn coords(&self, p: &Self::Point) -> Vec<f64>;

    fn alternative_geodesic_points(&self, _a: &Self::Point, _b: &Self::Point, _s: f64) -> Result<Vec<Self::Point>> {
        Ok(Vec::new())
    }

    /// Whether distances and geodesic points are closed-form, so that a
    /// recomputation cannot change them.
    fn is_exact(&self) -> bool {
        true
    }

    /// Distance recomputed at a tighter solver tolerance.
    fn verify_distance(&self, a: &Self::Point, b: &Self::Point) -> Result<f64> {
        self.distance(a, b)
    }

    /// Geodesic point recomputed at a tighter solver tolerance.
    fn verify_geodesic_point(&self, a: &Self::Point, b: &Self::Point, s: f64) -> Result<Self::Point> {
        self.geodesic_point(a, b, s)
    }
}

fn check_fraction(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::domain(format!("geodesic fraction must lie in [0, 1], got {s}")));
    }
    Ok(())
}

fn check_len(dim: usize, p: &[f64]) -> Result<()> {
    if p.len() != dim {
        return Err(Error::Shape {
            expected: dim,
            got: p.len(),
        });
    }
    Ok(())
}

/// Default half-width of the sampling box.
pub const DEFAULT_SAMPLE_BOX: f64 = 3.0;

fn sample_box(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-half..=half)).collect()
}

/// `R x R^n` with `dx^2 + e^{-2tx}|dy|^2`, using the closed-form distance
/// and hyperboloid geodesics. Constant curvature `-t^2`.
#[derive(Debug, Clone)]
pub struct WarpedHyperbolicSpace {
    t: f64,
    fiber_dim: usize,
    half_width: f64,
}

impl WarpedHyperbolicSpace {
    pub fn new(t: f64, fiber_dim: usize) -> Result<Self> {
        if !(t.is_finite() && t != 0.0) {
            return Err(Error::domain(format!("twist must be finite and nonzero, got {t}")));
        }
        if fiber_dim == 0 {
            return Err(Error::domain("fiber dimension must be >= 1"));
        }
        Ok(WarpedHyperbolicSpace {
            t,
            fiber_dim,
            half_width: DEFAULT_SAMPLE_BOX,
        })
    }

    pub fn from_q(p: QParam, fiber_dim: usize) -> Result<Self> {
        if p.is_limit() {
            return Err(Error::domain("q = 1 gives the flat space; use lp_space(_, 2)"));
        }
        Self::new(p.twist(), fiber_dim)
    }

    /// Samples points uniformly in `[-h, h]^{1+n}`.
    pub fn with_sample_box(mut self, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::domain("sampling box half-width must be > 0"));
        }
        self.half_width = half_width;
        Ok(self)
    }

    pub fn curvature(&self) -> f64 {
        -self.t * self.t
    }
}

impl GeodesicSpace for WarpedHyperbolicSpace {
    type Point = Vec<f64>;

    fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::WarpedHyperbolic {
            t: self.t,
            fiber_dim: self.fiber_dim,
        }
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64> {
        check_len(self.fiber_dim + 1, a)?;
        check_len(self.fiber_dim + 1, b)?;
        Ok(exponential_distance(self.t, a, b))
    }

    fn geodesic_point(&self, a: &Vec<f64>, b: &Vec<f64>, s: f64) -> Result<Vec<f64>> {
        check_len(self.fiber_dim + 1, a)?;
        check_len(self.fiber_dim + 1, b)?;
        check_fraction(s)?;
        Ok(exponential_geodesic_point(self.t, a, b, s))
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        sample_box(rng, self.fiber_dim + 1, self.half_width)
    }

    fn coords(&self, p: &Vec<f64>) -> Vec<f64> {
        p.clone()
    }
}

/// Any warped metric, with geodesics from the shooting solver.
#[derive(Debug, Clone)]
pub struct NumericWarpedSpace {
    metric: WarpedMetric,
    tol: f64,
    half_width: f64,
}

impl NumericWarpedSpace {
    pub fn new(metric: WarpedMetric, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::domain(format!("solver tolerance must be > 0, got {tol}")));
        }
        Ok(NumericWarpedSpace {
            metric,
            tol,
            half_width: 1.5,
        })
    }

    pub fn with_sample_box(mut self, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::domain("sampling box half-width must be > 0"));
        }
        self.half_width = half_width;
        Ok(self)
    }

    fn point_at(&self, a: &[f64], b: &[f64], s: f64, tol: f64) -> Result<Vec<f64>> {
        check_fraction(s)?;
        if s == 0.0 || a == b {
            return Ok(a.to_vec());
        }
        if s == 1.0 {
            return Ok(b.to_vec());
        }
        let sol = solve_geodesic(&self.metric, &MetricPoint::new(a.to_vec()), &MetricPoint::new(b.to_vec()), tol)?;
        sol.point(s)
    }
}

impl GeodesicSpace for NumericWarpedSpace {
    type Point = Vec<f64>;

    fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::NumericWarped { dim: self.metric.dim() }
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64> {
        geodesic_distance_numeric(
            &self.metric,
            &MetricPoint::new(a.clone()),
            &MetricPoint::new(b.clone()),
            self.tol,
        )
    }

    fn geodesic_point(&self, a: &Vec<f64>, b: &Vec<f64>, s: f64) -> Result<Vec<f64>> {
        self.point_at(a, b, s, self.tol)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        sample_box(rng, self.metric.dim(), self.half_width)
    }

    fn coords(&self, p: &Vec<f64>) -> Vec<f64> {
        p.clone()
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn verify_distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64> {
        geodesic_distance_numeric(
            &self.metric,
            &MetricPoint::new(a.clone()),
            &MetricPoint::new(b.clone()),
            self.tol / 10.0,
        )
    }

    fn verify_geodesic_point(&self, a: &Vec<f64>, b: &Vec<f64>, s: f64) -> Result<Vec<f64>> {
        self.point_at(a, b, s, self.tol / 10.0)
    }
}

/// `R^dim` with the p-norm, `p >= 1`. Straight segments are geodesics for
/// every such p; for p = 1 the axis-aligned staircases are geodesics too.
#[derive(Debug, Clone)]
pub struct LpSpace {
    dim: usize,
    p: f64,
    half_width: f64,
}

pub fn lp_space(dim: usize, p: f64) -> Result<LpSpace> {
    if dim < 2 {
        return Err(Error::domain(format!("dimension must be >= 2, got {dim}")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::domain(format!(
            "p must be finite and >= 1 for the triangle inequality, got {p}"
        )));
    }
    Ok(LpSpace {
        dim,
        p,
        half_width: 1.0,
    })
}

impl LpSpace {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point at fraction `s` of the staircase that moves through the axes
    /// in the given order.
    fn staircase_point(&self, a: &[f64], b: &[f64], order: &[usize], s: f64) -> Vec<f64> {
        let total: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        let mut left = s * total;
        let mut out = a.to_vec();
        for &axis in order {
            let leg = (b[axis] - a[axis]).abs();
            if left >= leg {
                out[axis] = b[axis];
                left -= leg;
            } else {
                out[axis] = a[axis] + (b[axis] - a[axis]).signum() * left;
                break;
            }
        }
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

impl GeodesicSpace for LpSpace {
    type Point = Vec<f64>;

    fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::Lp { dim: self.dim, p: self.p }
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> Result<f64> {
        check_len(self.dim, a)?;
        check_len(self.dim, b)?;
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        Ok(if self.p == 1.0 {
            diffs.sum()
        } else if self.p == 2.0 {
            diffs.map(|d| d * d).sum::<f64>().sqrt()
        } else {
            diffs.map(|d| d.powf(self.p)).sum::<f64>().powf(1.0 / self.p)
        })
    }

    fn geodesic_point(&self, a: &Vec<f64>, b: &Vec<f64>, s: f64) -> Result<Vec<f64>> {
        check_len(self.dim, a)?;
        check_len(self.dim, b)?;
        check_fraction(s)?;
        Ok(a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect())
    }

    /// For p = 1, the points at fraction `s` on every axis-order staircase
    /// (all orders up to dimension 4, the two cyclic extremes beyond).
    fn alternative_geodesic_points(&self, a: &Vec<f64>, b: &Vec<f64>, s: f64) -> Result<Vec<Vec<f64>>> {
        if self.p != 1.0 {
            return Ok(Vec::new());
        }
        check_len(self.dim, a)?;
        check_len(self.dim, b)?;
        check_fraction(s)?;
        let orders = if self.dim <= 4 {
            permutations(self.dim)
        } else {
            vec![(0..self.dim).collect(), (0..self.dim).rev().collect()]
        };
        Ok(orders.iter().map(|o| self.staircase_point(a, b, o, s)).collect())
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        sample_box(rng, self.dim, self.half_width)
    }

    fn coords(&self, p: &Vec<f64>) -> Vec<f64> {
        p.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn check_geodesic_property<S: GeodesicSpace>(space: &S, seed: u64, tol: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let a = space.sample_point(&mut rng);
            let b = space.sample_point(&mut rng);
            let d = space.distance(&a, &b).unwrap();
            for s in [0.0, 0.3, 0.5, 1.0] {
                let w = space.geodesic_point(&a, &b, s).unwrap();
                assert!((space.distance(&a, &w).unwrap() - s * d).abs() < tol);
                for alt in space.alternative_geodesic_points(&a, &b, s).unwrap() {
                    assert!((space.distance(&a, &alt).unwrap() - s * d).abs() < tol);
                    assert!((space.distance(&alt, &b).unwrap() - (1.0 - s) * d).abs() < tol);
                }
            }
        }
    }

    #[test]
    fn geodesic_points_split_distances() {
        check_geodesic_property(&WarpedHyperbolicSpace::new(0.7, 2).unwrap(), 1, 1e-8);
        check_geodesic_property(&lp_space(2, 1.0).unwrap(), 2, 1e-12);
        check_geodesic_property(&lp_space(3, 1.0).unwrap(), 3, 1e-12);
        check_geodesic_property(&lp_space(3, 3.5).unwrap(), 4, 1e-12);
    }

    #[test]
    fn numeric_space_matches_closed_form() {
        let t = std::f64::consts::LN_2;
        let num = NumericWarpedSpace::new(WarpedMetric::exponential(t, 1).unwrap(), 1e-10).unwrap();
        let closed = WarpedHyperbolicSpace::new(t, 1).unwrap();
        let (a, b) = (vec![0.2, -0.4], vec![-0.5, 0.9]);
        let d = num.distance(&a, &b).unwrap();
        assert!((d - closed.distance(&a, &b).unwrap()).abs() < 1e-7);
        let w = num.geodesic_point(&a, &b, 0.4).unwrap();
        let wc = closed.geodesic_point(&a, &b, 0.4).unwrap();
        assert!((w[0] - wc[0]).abs() < 1e-7 && (w[1] - wc[1]).abs() < 1e-7);
    }

    #[test]
    fn lp_domain() {
        assert!(lp_space(2, 0.5).is_err());
        assert!(lp_space(1, 2.0).is_err());
        let l1 = lp_space(2, 1.0).unwrap();
        let alts = l1.alternative_geodesic_points(&vec![0.0, 0.0], &vec![1.0, 1.0], 0.5).unwrap();
        assert!(alts.contains(&vec![1.0, 0.0]) && alts.contains(&vec![0.0, 1.0]));
        let l2 = lp_space(2, 2.0).unwrap();
        assert!(l2.alternative_geodesic_points(&vec![0.0, 0.0], &vec![1.0, 1.0], 0.5).unwrap().is_empty());
        assert_eq!(l2.geodesic_point(&vec![0.0, 0.0], &vec![1.0, 1.0], 0.5).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn permutations_are_complete() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        let mut sorted = p.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
    }
}
