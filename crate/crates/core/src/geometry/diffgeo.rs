//! Christoffel symbols and sectional curvature from central finite
//! differences with one Richardson level.

use super::{check_dim, MetricPoint, WarpedMetric};
use crate::error::{Error, Result};

/// Default finite-difference step in chart units.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

// Two Richardson levels disagreeing by more than 10x this (relative to the
// component scale) means the step is lost in cancellation.
const FD_TOL: f64 = 1e-6;

/// `Gamma^k_{ij}` stored as `[k][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let d = self.dim;
        self.data[(k * d + i) * d + j] = v;
    }

    /// Largest absolute difference from another symbol array.
    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Builds the symbols of a diagonal metric from `g_cc` and
    /// `dg[m * dim + c] = d_m g_cc`.
    pub(crate) fn from_diagonal(g: &[f64], dg: &[f64]) -> Self {
        let dim = g.len();
        let mut out = Christoffel::zeros(dim);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    let a = if k == j { dg[i * dim + k] } else { 0.0 };
                    let b = if k == i { dg[j * dim + k] } else { 0.0 };
                    let c = if i == j { dg[k * dim + i] } else { 0.0 };
                    out.set(k, i, j, 0.5 * (a + b - c) / g[k]);
                }
            }
        }
        out
    }

    /// `a^k = Gamma^k_{ij} u^i v^j`.
    pub fn contract(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (k, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = 0.0;
            for i in 0..d {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    acc += self.get(k, i, j) * u[i] * v[j];
                }
            }
            *o = acc;
        }
    }
}

/// Metric-component derivatives `d_m g_cc` by central differences with
/// Richardson extrapolation.
pub(crate) fn component_derivatives_fd(m: &WarpedMetric, at: &[f64], step: f64) -> Result<Vec<f64>> {
    let dim = m.dim();
    let mut out = vec![0.0; dim * dim];
    let mut g0 = vec![0.0; dim];
    m.components(at, &mut g0);
    let scale = g0.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    let mut x = at.to_vec();
    for axis in 0..dim {
        let mut central = |h: f64| {
            x[axis] = at[axis] + h;
            m.components(&x, &mut plus);
            x[axis] = at[axis] - h;
            m.components(&x, &mut minus);
            x[axis] = at[axis];
            plus.iter()
                .zip(&minus)
                .map(|(p, q)| (p - q) / (2.0 * h))
                .collect::<Vec<_>>()
        };
        let d1 = central(step);
        let d2 = central(step / 2.0);
        let d4 = central(step / 4.0);
        for c in 0..dim {
            let coarse = (4.0 * d2[c] - d1[c]) / 3.0;
            let fine = (4.0 * d4[c] - d2[c]) / 3.0;
            let gap = (coarse - fine).abs();
            if !fine.is_finite() || gap > 10.0 * FD_TOL * scale {
                return Err(Error::numerical(
                    format!(
                        "finite-difference step {step} loses d_{axis} g_{c}{c} to cancellation \
                         (Richardson levels differ by {gap:e})"
                    ),
                    fine,
                    gap,
                ));
            }
            out[axis * dim + c] = fine;
        }
    }
    Ok(out)
}

fn christoffel_raw(m: &WarpedMetric, at: &[f64], step: f64) -> Result<Christoffel> {
    let mut g = vec![0.0; m.dim()];
    m.components(at, &mut g);
    let dg = component_derivatives_fd(m, at, step)?;
    Ok(Christoffel::from_diagonal(&g, &dg))
}

/// Christoffel symbols of the second kind by finite differences of the
/// metric components.
pub fn christoffel(m: &WarpedMetric, at: &MetricPoint, step: f64) -> Result<Christoffel> {
    check_dim(m.dim(), at.dim())?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::domain(format!("finite-difference step must be > 0, got {step}")));
    }
    christoffel_raw(m, at.coords(), step)
}

/// Exact symbols when every warp carries analytic derivatives.
pub(crate) fn christoffel_exact(m: &WarpedMetric, at: &[f64]) -> Option<Christoffel> {
    let dim = m.dim();
    let mut g = vec![0.0; dim];
    m.components(at, &mut g);
    let mut dg = vec![0.0; dim * dim];
    if !m.component_derivatives(at, &mut dg) {
        return None;
    }
    Some(Christoffel::from_diagonal(&g, &dg))
}

/// `<R(U,V)V, U>` with the Riemann tensor assembled from central
/// differences (spacing `h`) of finite-difference Christoffel symbols.
fn curvature_form(
    m: &WarpedMetric,
    at: &[f64],
    u: &[f64],
    v: &[f64],
    h: f64,
    inner_step: f64,
) -> Result<f64> {
    let d = m.dim();
    let gamma = christoffel_raw(m, at, inner_step)?;
    // dgamma[c] = d_c Gamma
    let mut dgamma = Vec::with_capacity(d);
    let mut x = at.to_vec();
    for c in 0..d {
        x[c] = at[c] + h;
        let gp = christoffel_raw(m, &x, inner_step)?;
        x[c] = at[c] - h;
        let gm = christoffel_raw(m, &x, inner_step)?;
        x[c] = at[c];
        let mut diff = Christoffel::zeros(d);
        for (o, (p, q)) in diff.data.iter_mut().zip(gp.data.iter().zip(&gm.data)) {
            *o = (p - q) / (2.0 * h);
        }
        dgamma.push(diff);
    }
    let mut g = vec![0.0; d];
    m.components(at, &mut g);
    // R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    // contracted as g_ae R^a_{bcd} V^b U^c V^d U^e.
    let mut total = 0.0;
    for a in 0..d {
        if u[a] == 0.0 {
            continue;
        }
        let mut ra = 0.0;
        for b in 0..d {
            for c in 0..d {
                for dd in 0..d {
                    let w = v[b] * u[c] * v[dd];
                    if w == 0.0 {
                        continue;
                    }
                    let mut r = dgamma[c].get(a, dd, b) - dgamma[dd].get(a, c, b);
                    for e in 0..d {
                        r += gamma.get(a, c, e) * gamma.get(e, dd, b)
                            - gamma.get(a, dd, e) * gamma.get(e, c, b);
                    }
                    ra += r * w;
                }
            }
        }
        total += g[a] * u[a] * ra;
    }
    Ok(total)
}

/// Sectional curvature of the plane spanned by `u` and `v` at `at`.
pub fn sectional_curvature_numeric(
    m: &WarpedMetric,
    at: &MetricPoint,
    plane: (&[f64], &[f64]),
    step: f64,
) -> Result<f64> {
    let (u, v) = plane;
    check_dim(m.dim(), at.dim())?;
    check_dim(m.dim(), u.len())?;
    check_dim(m.dim(), v.len())?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::domain(format!("finite-difference step must be > 0, got {step}")));
    }
    let x = at.coords();
    let uu = m.inner(x, u, u);
    let vv = m.inner(x, v, v);
    let uv = m.inner(x, u, v);
    let area2 = uu * vv - uv * uv;
    if !(area2 > 1e-12 * uu * vv) {
        return Err(Error::domain("plane vectors are linearly dependent"));
    }
    let coarse = curvature_form(m, x, u, v, step, step)?;
    let fine = curvature_form(m, x, u, v, step / 2.0, step)?;
    Ok(((4.0 * fine - coarse) / 3.0) / area2)
}
