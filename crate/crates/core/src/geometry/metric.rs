use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{check_dim, MetricPoint};
use crate::error::{Error, Result};
use crate::qcalc::QParam;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A warp function scaling one fiber direction.
///
/// Built-in warps carry analytic derivatives. `Custom` warps depend on the
/// base coordinate only; without a second derivative they cannot feed the
/// analytic curvature formula.
#[derive(Clone)]
pub enum Warp {
    /// `e^{-t x}`
    Exponential { t: f64 },
    /// `cosh(x)`
    Cosh,
    /// `cosh(x) cosh(y)` with `y` the first fiber coordinate.
    CoshProduct,
    Custom {
        name: String,
        value: ScalarFn,
        first: Option<ScalarFn>,
        second: Option<ScalarFn>,
    },
}

impl fmt::Debug for Warp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warp::Exponential { t } => write!(f, "Exponential {{ t: {t} }}"),
            Warp::Cosh => write!(f, "Cosh"),
            Warp::CoshProduct => write!(f, "CoshProduct"),
            Warp::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Warp {
    pub fn custom<F>(name: impl Into<String>, value: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Warp::Custom {
            name: name.into(),
            value: Arc::new(value),
            first: None,
            second: None,
        }
    }

    /// Custom base-only warp with analytic first and second derivatives.
    pub fn custom_with_derivatives<F, G, H>(name: impl Into<String>, value: F, first: G, second: H) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Warp::Custom {
            name: name.into(),
            value: Arc::new(value),
            first: Some(Arc::new(first)),
            second: Some(Arc::new(second)),
        }
    }

    /// Whether the warp reads a fiber coordinate.
    pub fn depends_on_fiber(&self) -> bool {
        matches!(self, Warp::CoshProduct)
    }

    pub fn value(&self, coords: &[f64]) -> f64 {
        let x = coords[0];
        match self {
            Warp::Exponential { t } => (-t * x).exp(),
            Warp::Cosh => x.cosh(),
            Warp::CoshProduct => x.cosh() * coords[1].cosh(),
            Warp::Custom { value, .. } => value(x),
        }
    }

    /// Partial derivatives with respect to every chart coordinate, when known.
    fn gradient(&self, coords: &[f64], out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|v| *v = 0.0);
        let x = coords[0];
        match self {
            Warp::Exponential { t } => out[0] = -t * (-t * x).exp(),
            Warp::Cosh => out[0] = x.sinh(),
            Warp::CoshProduct => {
                let y = coords[1];
                out[0] = x.sinh() * y.cosh();
                out[1] = x.cosh() * y.sinh();
            }
            Warp::Custom { first, .. } => match first {
                Some(d) => out[0] = d(x),
                None => return false,
            },
        }
        true
    }

    /// `h'(x)` and `h''(x)` for base-only warps.
    fn base_derivatives(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            Warp::Exponential { t } => {
                let h = (-t * x).exp();
                Some((-t * h, t * t * h))
            }
            Warp::Cosh => Some((x.sinh(), x.cosh())),
            Warp::CoshProduct => None,
            Warp::Custom { first, second, .. } => match (first, second) {
                (Some(d1), Some(d2)) => Some((d1(x), d2(x))),
                _ => None,
            },
        }
    }
}

/// Which family a metric belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    /// Euclidean: the q = 1 collapse.
    Flat,
    /// `dx^2 + e^{-2tx} |dy|^2`
    Exponential { t: f64 },
    /// `dx^2 + e^{-2 t1 x} dy^2 + e^{-2 t2 x} dz^2`
    DoubleExponential { t1: f64, t2: f64 },
    /// `dx^2 + h1(x)^2 dy^2 + h2(x, y)^2 dz^2` with strictly convex warps.
    ConvexDouble,
    General,
}

/// Diagonal warped-product metric `dx^2 + sum_i h_i^2 dy_i^2` on `R^{1+n}`.
#[derive(Debug, Clone)]
pub struct WarpedMetric {
    warps: Vec<Warp>,
    kind: MetricKind,
}

// Grid on which warp positivity and convexity are sampled.
const SAMPLE_RANGE: f64 = 6.0;
const SAMPLE_COUNT: usize = 49;

fn sample_grid() -> impl Iterator<Item = f64> {
    (0..SAMPLE_COUNT).map(|i| -SAMPLE_RANGE + 2.0 * SAMPLE_RANGE * i as f64 / (SAMPLE_COUNT - 1) as f64)
}

impl WarpedMetric {
    pub fn flat(n: usize) -> Self {
        WarpedMetric {
            warps: vec![Warp::Exponential { t: 0.0 }; n],
            kind: MetricKind::Flat,
        }
    }

    /// `dx^2 + e^{-2tx}(dy_1^2 + ... + dy_n^2)`; flat when `t = 0`.
    pub fn exponential(t: f64, n: usize) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::domain(format!("twist must be finite, got {t}")));
        }
        if n == 0 {
            return Err(Error::domain("fiber dimension must be >= 1"));
        }
        if t == 0.0 {
            return Ok(Self::flat(n));
        }
        Ok(WarpedMetric {
            warps: vec![Warp::Exponential { t }; n],
            kind: MetricKind::Exponential { t },
        })
    }

    /// The metric induced by `q` on `R x R^n`, `t = ln(2 - q)`.
    pub fn from_q(p: QParam, n: usize) -> Result<Self> {
        if p.is_limit() {
            if n == 0 {
                return Err(Error::domain("fiber dimension must be >= 1"));
            }
            return Ok(Self::flat(n));
        }
        Self::exponential(p.twist(), n)
    }

    /// Two weakly interacting systems with their own twists.
    pub fn double_exponential(t1: f64, t2: f64) -> Result<Self> {
        if !(t1.is_finite() && t2.is_finite()) {
            return Err(Error::domain("twists must be finite"));
        }
        Ok(WarpedMetric {
            warps: vec![Warp::Exponential { t: t1 }, Warp::Exponential { t: t2 }],
            kind: MetricKind::DoubleExponential { t1, t2 },
        })
    }

    pub fn double_from_q(p1: QParam, p2: QParam) -> Result<Self> {
        Self::double_exponential(p1.twist(), p2.twist())
    }

    /// `dx^2 + h1(x)^2 dy^2 + h2(x, y)^2 dz^2`. Both warps must be strictly
    /// positive and strictly convex on the sampling grid.
    pub fn convex_double(h1: Warp, h2: Warp) -> Result<Self> {
        if h1.depends_on_fiber() {
            return Err(Error::domain("h1 must depend on the base coordinate only"));
        }
        let metric = WarpedMetric {
            warps: vec![h1, h2],
            kind: MetricKind::ConvexDouble,
        };
        metric.check_positive()?;
        for (i, w) in metric.warps.iter().enumerate() {
            check_convex(i, w)?;
        }
        Ok(metric)
    }

    /// Any list of strictly positive warps.
    pub fn general(warps: Vec<Warp>) -> Result<Self> {
        if warps.is_empty() {
            return Err(Error::domain("fiber dimension must be >= 1"));
        }
        if warps.first().is_some_and(Warp::depends_on_fiber) {
            return Err(Error::domain("the first warp cannot depend on a fiber coordinate"));
        }
        let metric = WarpedMetric {
            warps,
            kind: MetricKind::General,
        };
        metric.check_positive()?;
        Ok(metric)
    }

    /// `dx^2 + tau_q(x)^{-2} dy^2`. Always refused: the warp blows up at
    /// `x = 0`, where `tau_q` vanishes.
    pub fn naive_tau(p: QParam) -> Result<Self> {
        Self::general(vec![Warp::custom("1/tau_q", move |x| {
            let tau = if p.is_limit() {
                x
            } else {
                (x * p.twist()).exp_m1() / p.deformation()
            };
            1.0 / tau.abs()
        })])
    }

    fn check_positive(&self) -> Result<()> {
        let dim = self.dim();
        let mut coords = vec![0.0; dim];
        for x in sample_grid() {
            for y in sample_grid() {
                coords[0] = x;
                if dim > 1 {
                    coords[1] = y;
                }
                for (i, w) in self.warps.iter().enumerate() {
                    let h = w.value(&coords);
                    if !(h > 0.0) || !h.is_finite() {
                        return Err(Error::domain(format!(
                            "warp {i} ({w:?}) is {h} at {coords:?}; warps must be finite and > 0"
                        )));
                    }
                }
                if !self.warps.iter().any(Warp::depends_on_fiber) {
                    break;
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn warps(&self) -> &[Warp] {
        &self.warps
    }

    /// Chart dimension `1 + n`.
    pub fn dim(&self) -> usize {
        self.warps.len() + 1
    }

    pub fn fiber_dim(&self) -> usize {
        self.warps.len()
    }

    pub fn is_flat(&self) -> bool {
        self.kind == MetricKind::Flat
    }

    /// Diagonal components `(1, h_1^2, ..., h_n^2)`.
    pub fn components(&self, coords: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        if self.is_flat() {
            out[1..].iter_mut().for_each(|v| *v = 1.0);
            return;
        }
        for (o, w) in out[1..].iter_mut().zip(&self.warps) {
            let h = w.value(coords);
            *o = h * h;
        }
    }

    pub fn components_at(&self, p: &MetricPoint) -> Result<Vec<f64>> {
        check_dim(self.dim(), p.dim())?;
        let mut g = vec![0.0; self.dim()];
        self.components(p.coords(), &mut g);
        Ok(g)
    }

    /// Analytic `d_m g_cc`, as `out[m * dim + c]`, when every warp knows
    /// its gradient.
    pub(crate) fn component_derivatives(&self, coords: &[f64], out: &mut [f64]) -> bool {
        let dim = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        if self.is_flat() {
            return true;
        }
        let mut grad = vec![0.0; dim];
        for (i, w) in self.warps.iter().enumerate() {
            if !w.gradient(coords, &mut grad) {
                return false;
            }
            let h = w.value(coords);
            for m in 0..dim {
                out[m * dim + i + 1] = 2.0 * h * grad[m];
            }
        }
        true
    }

    /// Inner product `g(u, v)` at `coords`.
    pub fn inner(&self, coords: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.components(coords, &mut g);
        g.iter().zip(u).zip(v).map(|((g, a), b)| g * a * b).sum()
    }

    /// `ds^2` for the displacement `dv` at `at`.
    pub fn line_element(&self, at: &MetricPoint, dv: &[f64]) -> Result<f64> {
        check_dim(self.dim(), at.dim())?;
        check_dim(self.dim(), dv.len())?;
        Ok(self.inner(at.coords(), dv, dv))
    }

    /// Closed-form sectional curvature of coordinate planes.
    pub fn analytic_curvature(&self) -> Result<AnalyticCurvature> {
        match self.kind {
            MetricKind::Flat => return Ok(AnalyticCurvature::Constant(0.0)),
            MetricKind::Exponential { t } => return Ok(AnalyticCurvature::Constant(-t * t)),
            _ => {}
        }
        for w in &self.warps {
            if w.base_derivatives(0.0).is_none() {
                return Err(Error::Capability(format!(
                    "warp {w:?} has no analytic second derivative in the base coordinate"
                )));
            }
        }
        Ok(AnalyticCurvature::Variable(self.clone()))
    }
}

fn check_convex(index: usize, w: &Warp) -> Result<()> {
    let step = 1e-3;
    let mut c = [0.0, 0.0, 0.0];
    let f = |c: &[f64; 3]| w.value(c);
    for x in sample_grid() {
        for y in sample_grid() {
            c[0] = x;
            c[1] = y;
            let h0 = f(&c);
            let second = |i: usize, j: usize| {
                let mut pp = c;
                let mut pm = c;
                let mut mp = c;
                let mut mm = c;
                pp[i] += step;
                pp[j] += step;
                pm[i] += step;
                pm[j] -= step;
                mp[i] -= step;
                mp[j] += step;
                mm[i] -= step;
                mm[j] -= step;
                (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * step * step)
            };
            let hxx = second(0, 0);
            let convex = if w.depends_on_fiber() {
                let hyy = second(1, 1);
                let hxy = second(0, 1);
                hxx > 0.0 && hxx * hyy - hxy * hxy > 0.0
            } else {
                hxx > 0.0
            };
            if !convex {
                return Err(Error::domain(format!(
                    "warp {index} ({w:?}) is not strictly convex near ({x}, {y}); value {h0}"
                )));
            }
            if !w.depends_on_fiber() {
                break;
            }
        }
    }
    Ok(())
}

/// Analytic sectional curvature of a warped metric.
#[derive(Debug, Clone)]
pub enum AnalyticCurvature {
    Constant(f64),
    /// Base-only warps: `-h_i''/h_i` on `(x, y_i)` planes and
    /// `-h_i' h_j' / (h_i h_j)` on `(y_i, y_j)` planes.
    Variable(WarpedMetric),
}

impl AnalyticCurvature {
    pub fn constant(&self) -> Option<f64> {
        match self {
            AnalyticCurvature::Constant(k) => Some(*k),
            AnalyticCurvature::Variable(_) => None,
        }
    }

    /// Curvature of the coordinate plane `(i, j)` at base coordinate `x`.
    pub fn at(&self, x: f64, plane: (usize, usize)) -> Result<f64> {
        let (i, j) = if plane.0 <= plane.1 { plane } else { (plane.1, plane.0) };
        if i == j {
            return Err(Error::domain("a coordinate plane needs two distinct axes"));
        }
        match self {
            AnalyticCurvature::Constant(k) => Ok(*k),
            AnalyticCurvature::Variable(m) => {
                if j >= m.dim() {
                    return Err(Error::Shape {
                        expected: m.dim(),
                        got: j + 1,
                    });
                }
                let coords = [x, 0.0];
                let wj = &m.warps[j - 1];
                let (dj, ddj) = wj.base_derivatives(x).expect("checked at construction");
                let hj = wj.value(&coords);
                if i == 0 {
                    Ok(-ddj / hj)
                } else {
                    let wi = &m.warps[i - 1];
                    let (di, _) = wi.base_derivatives(x).expect("checked at construction");
                    Ok(-di * dj / (wi.value(&coords) * hj))
                }
            }
        }
    }
}

/// Inverse tensor of `dx^2 + tau_q(x)^{-2} dy^2`, i.e. `diag(1, tau_q(x)^2)`.
/// Its determinant vanishes exactly at `x = 0`.
pub fn naive_cometric(p: QParam, x: f64) -> Result<[[f64; 2]; 2]> {
    let tau = p.tau(x)?.value();
    Ok([[1.0, 0.0], [0.0, tau * tau]])
}
