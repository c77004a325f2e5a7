//! Geodesics of warped metrics: the closed form for the exponential family
//! (through the upper half-space model) and a shooting solver for the rest.

use super::diffgeo::{christoffel_exact, component_derivatives_fd};
use super::ode::Dopri5;
use super::{check_dim, MetricPoint, WarpedMetric, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::qcalc::QParam;

/// Distance between chart points of `dx^2 + e^{-2tx}|dy|^2`.
///
/// With `(xi, eta) = (t y, e^{tx})` the metric is `1/t^2` times the
/// half-space metric, so `d = arccosh(1 + z) / |t|` with
/// `z = t^2 |dy|^2 e^{-t(xa+xb)} / 2 + 2 sinh^2(t dx / 2)`.
pub fn exponential_distance(t: f64, a: &[f64], b: &[f64]) -> f64 {
    let dx = a[0] - b[0];
    let dy2: f64 = a[1..].iter().zip(&b[1..]).map(|(u, v)| (u - v) * (u - v)).sum();
    if dy2 == 0.0 {
        return dx.abs();
    }
    if t == 0.0 {
        return (dx * dx + dy2).sqrt();
    }
    let half = (0.5 * t * dx).sinh();
    let z = 0.5 * t * t * dy2 * (-t * (a[0] + b[0])).exp() + 2.0 * half * half;
    (z + (z * (z + 2.0)).sqrt()).ln_1p() / t.abs()
}

/// Closed-form distance for the metric induced by `p`; Euclidean at q = 1.
pub fn geodesic_distance_closed(p: QParam, a: &MetricPoint, b: &MetricPoint) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if a.dim() < 2 {
        return Err(Error::domain("points need a base and at least one fiber coordinate"));
    }
    let t = if p.is_limit() { 0.0 } else { p.twist() };
    Ok(exponential_distance(t, a.coords(), b.coords()))
}

/// Point at arclength fraction `s` along the geodesic from `a` to `b` of
/// `dx^2 + e^{-2tx}|dy|^2`, interpolated on the hyperboloid.
pub fn exponential_geodesic_point(t: f64, a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    if s == 0.0 {
        return a.to_vec();
    }
    if s == 1.0 {
        return b.to_vec();
    }
    let fiber_equal = a[1..] == b[1..];
    if t == 0.0 || fiber_equal {
        return a.iter().zip(b).map(|(u, v)| u + s * (v - u)).collect();
    }
    let big_d = t.abs() * exponential_distance(t, a, b);
    if big_d == 0.0 {
        return a.to_vec();
    }
    // Hyperboloid weights sinh((1-s)D)/sinh D and sinh(sD)/sinh D.
    let den = (-2.0 * big_d).exp_m1();
    let alpha = (-s * big_d).exp() * (-2.0 * (1.0 - s) * big_d).exp_m1() / den;
    let beta = (-(1.0 - s) * big_d).exp() * (-2.0 * s * big_d).exp_m1() / den;
    let excess = if big_d <= 1.0 {
        -4.0 * (0.5 * big_d).sinh() * (0.5 * (1.0 - s) * big_d).sinh() * (0.5 * s * big_d).sinh()
            / big_d.sinh()
    } else {
        alpha + beta - 1.0
    };
    let ea = (-t * a[0]).exp();
    let eb = (-t * b[0]).exp();
    // alpha e^{-t xa} + beta e^{-t xb} - 1, kept accurate for small t.
    let u = excess + alpha * (-t * a[0]).exp_m1() + beta * (-t * b[0]).exp_m1();
    let wa = alpha * ea;
    let wb = beta * eb;
    let mut out = Vec::with_capacity(a.len());
    out.push(-u.ln_1p() / t);
    for (ya, yb) in a[1..].iter().zip(&b[1..]) {
        out.push((wa * ya + wb * yb) / (wa + wb));
    }
    out
}

/// `a^k = Gamma^k_{ij} v^i v^j` for a diagonal metric with components `g`
/// and derivatives `dg[m * dim + c] = d_m g_cc`.
fn geodesic_accel(g: &[f64], dg: &[f64], v: &[f64], out: &mut [f64]) {
    let dim = g.len();
    for k in 0..dim {
        let mut along = 0.0;
        let mut across = 0.0;
        for i in 0..dim {
            along += dg[i * dim + k] * v[i];
            across += dg[k * dim + i] * v[i] * v[i];
        }
        out[k] = (v[k] * along - 0.5 * across) / g[k];
    }
}

/// Geodesic equation as a first-order system on `(x, v)`.
pub(crate) struct GeodesicField<'a> {
    metric: &'a WarpedMetric,
    analytic: bool,
    g: Vec<f64>,
    dg: Vec<f64>,
    failure: Option<Error>,
}

impl<'a> GeodesicField<'a> {
    pub(crate) fn new(metric: &'a WarpedMetric) -> Self {
        let dim = metric.dim();
        let probe = vec![0.0; dim];
        GeodesicField {
            metric,
            analytic: christoffel_exact(metric, &probe).is_some(),
            g: vec![0.0; dim],
            dg: vec![0.0; dim * dim],
            failure: None,
        }
    }

    pub(crate) fn eval(&mut self, y: &[f64], dy: &mut [f64]) {
        let dim = self.metric.dim();
        let (x, v) = y.split_at(dim);
        let (dx, dv) = dy.split_at_mut(dim);
        dx.copy_from_slice(v);
        self.metric.components(x, &mut self.g);
        if self.analytic {
            self.metric.component_derivatives(x, &mut self.dg);
        } else {
            match component_derivatives_fd(self.metric, x, DEFAULT_FD_STEP) {
                Ok(d) => self.dg.copy_from_slice(&d),
                Err(e) => {
                    self.failure.get_or_insert(e);
                    dv.iter_mut().for_each(|a| *a = f64::NAN);
                    return;
                }
            }
        }
        geodesic_accel(&self.g, &self.dg, v, dv);
        dv.iter_mut().for_each(|a| *a = -*a);
    }

    pub(crate) fn take_failure(&mut self) -> Option<Error> {
        self.failure.take()
    }
}

pub(crate) fn ode_tol(tol: f64) -> f64 {
    (tol * 1e-3).clamp(1e-13, 1e-8)
}

/// Integrates the geodesic from `start` with initial velocity `velocity`
/// to parameter `s`.
fn shoot(m: &WarpedMetric, start: &[f64], velocity: &[f64], s: f64, ode: f64) -> Result<Vec<f64>> {
    let dim = m.dim();
    let mut field = GeodesicField::new(m);
    let mut y = Vec::with_capacity(2 * dim);
    y.extend_from_slice(start);
    y.extend_from_slice(velocity);
    let mut stepper = Dopri5::new(ode, ode);
    let mut f = |_: f64, y: &[f64], dy: &mut [f64]| field.eval(y, dy);
    let outcome = stepper.advance(&mut f, 0.0, &mut y, s);
    if let Some(e) = field.failure.take() {
        return Err(e);
    }
    outcome?;
    y.truncate(dim);
    Ok(y)
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn solve_linear(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(pivot * n + c, col * n + c);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r * n + c] * b[c];
        }
        b[r] = acc / a[r * n + r];
    }
    Some(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A solved boundary-value problem: the geodesic `s -> exp_a(s v)`,
/// `s in [0, 1]`, ending within `residual` of the target.
#[derive(Debug, Clone)]
pub struct GeodesicSolution {
    metric: WarpedMetric,
    start: Vec<f64>,
    velocity: Vec<f64>,
    ode_tol: f64,
    /// Arclength, equal to the constant speed `|v|_g`.
    pub length: f64,
    /// Chart distance between the shot endpoint and the target.
    pub residual: f64,
    /// Residual after each accepted Newton step.
    pub residual_history: Vec<f64>,
}

impl GeodesicSolution {
    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Point at arclength fraction `s`.
    pub fn point(&self, s: f64) -> Result<Vec<f64>> {
        if s == 0.0 {
            return Ok(self.start.clone());
        }
        shoot(&self.metric, &self.start, &self.velocity, s, self.ode_tol)
    }
}

const NEWTON_ITERS: usize = 40;

struct Newton<'a> {
    m: &'a WarpedMetric,
    a: &'a [f64],
    ode: f64,
    tol: f64,
}

impl Newton<'_> {
    fn miss(&self, v: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        let end = shoot(self.m, self.a, v, 1.0, self.ode)?;
        Ok(end.iter().zip(target).map(|(e, b)| e - b).collect())
    }

    /// Damped Newton on `v -> exp_a(v) - target`. Returns the velocity,
    /// final residual and history, or the best attempt on failure.
    fn run(&self, target: &[f64], guess: Vec<f64>) -> std::result::Result<(Vec<f64>, f64, Vec<f64>), (Vec<f64>, f64)> {
        let n = self.a.len();
        let mut v = guess;
        let mut f = match self.miss(&v, target) {
            Ok(f) => f,
            Err(_) => return Err((v, f64::INFINITY)),
        };
        let mut r = norm(&f);
        let mut history = vec![r];
        for _ in 0..NEWTON_ITERS {
            if r <= self.tol {
                return Ok((v, r, history));
            }
            let mut jac = vec![0.0; n * n];
            for j in 0..n {
                let h = 1e-7 * v[j].abs().max(1.0);
                let mut vp = v.clone();
                vp[j] += h;
                let fp = match self.miss(&vp, target) {
                    Ok(fp) => fp,
                    Err(_) => return Err((v, r)),
                };
                for i in 0..n {
                    jac[i * n + j] = (fp[i] - f[i]) / h;
                }
            }
            let mut step: Vec<f64> = f.iter().map(|x| -x).collect();
            if solve_linear(&mut jac, &mut step, n).is_none() {
                return Err((v, r));
            }
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = v.iter().zip(&step).map(|(x, d)| x + lambda * d).collect();
                if let Ok(ft) = self.miss(&trial, target) {
                    let rt = norm(&ft);
                    if rt < r {
                        v = trial;
                        f = ft;
                        r = rt;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            history.push(r);
            if !accepted {
                break;
            }
        }
        if r <= self.tol {
            Ok((v, r, history))
        } else {
            Err((v, r))
        }
    }
}

/// Shooting solver for the geodesic boundary-value problem between `a`
/// and `b`. The endpoint residual is at most `tol` on success.
pub fn solve_geodesic(m: &WarpedMetric, a: &MetricPoint, b: &MetricPoint, tol: f64) -> Result<GeodesicSolution> {
    check_dim(m.dim(), a.dim())?;
    check_dim(m.dim(), b.dim())?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {tol}")));
    }
    let (pa, pb) = (a.coords(), b.coords());
    let ode = ode_tol(tol);
    let newton = Newton { m, a: pa, ode, tol };
    let direct: Vec<f64> = pb.iter().zip(pa).map(|(y, x)| y - x).collect();

    let mut outcome = newton.run(pb, direct.clone());
    // Continuation: walk the target out from `a` along the chart segment.
    for pieces in [4usize, 16] {
        if outcome.is_ok() {
            break;
        }
        let mut v: Vec<f64> = direct.iter().map(|d| d / pieces as f64).collect();
        let mut staged = Ok((v.clone(), 0.0, Vec::new()));
        for k in 1..=pieces {
            let frac = k as f64 / pieces as f64;
            let target: Vec<f64> = pa.iter().zip(&direct).map(|(x, d)| x + frac * d).collect();
            staged = newton.run(&target, v.clone());
            match &staged {
                Ok((vk, _, _)) => {
                    v = vk.iter().map(|x| x * (k + 1) as f64 / k as f64).collect();
                }
                Err(_) => break,
            }
        }
        if staged.is_ok() || matches!((&staged, &outcome), (Err((_, s)), Err((_, o))) if s < o) {
            outcome = staged;
        }
    }
    let mut g = vec![0.0; m.dim()];
    m.components(pa, &mut g);
    let speed = |v: &[f64]| g.iter().zip(v).map(|(g, v)| g * v * v).sum::<f64>().sqrt();
    match outcome {
        Ok((velocity, residual, residual_history)) => Ok(GeodesicSolution {
            metric: m.clone(),
            start: pa.to_vec(),
            length: speed(&velocity),
            velocity,
            ode_tol: ode,
            residual,
            residual_history,
        }),
        Err((v, residual)) => Err(Error::numerical(
            "geodesic shooting did not converge",
            speed(&v),
            residual,
        )),
    }
}

/// Arclength of the numerically solved geodesic between `a` and `b`.
pub fn geodesic_distance_numeric(m: &WarpedMetric, a: &MetricPoint, b: &MetricPoint, tol: f64) -> Result<f64> {
    check_dim(m.dim(), a.dim())?;
    check_dim(m.dim(), b.dim())?;
    if a == b {
        return Ok(0.0);
    }
    Ok(solve_geodesic(m, a, b, tol)?.length)
}
