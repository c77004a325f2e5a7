//! Curvature from the area deficit of small geodesic disks.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::Serialize;

use super::geodesic::GeodesicField;
use super::ode::Dopri5;
use super::{check_dim, MetricPoint, WarpedMetric};
use crate::error::{Error, Result};
use crate::quadrature::kronrod_rule;

/// Azimuthal directions in the radial geodesic fan.
pub const BDP_DIRECTIONS: usize = 64;

/// Radii used when the caller gives none.
pub const DEFAULT_BDP_RADII: [f64; 3] = [0.2, 0.1, 0.05];

// Angular offset for the central difference giving the Jacobi field.
const ANGLE_STEP: f64 = 1e-4;
const ODE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BdpSample {
    pub radius: f64,
    pub area: f64,
    /// `12/r^2 (1 - A(r)/(pi r^2))`
    pub deficit_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BdpEstimate {
    /// Extrapolation to `r -> 0`.
    pub curvature: f64,
    pub samples: Vec<BdpSample>,
}

fn deficit(radius: f64, area: f64) -> f64 {
    let pi_r2 = std::f64::consts::PI * radius * radius;
    12.0 / (radius * radius) * ((pi_r2 - area) / pi_r2)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::domain("at least one radius is required"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::domain(format!("radii must be positive and finite, got {r}")));
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("radii must be distinct"));
    }
    Ok(())
}

/// Extrapolates the deficit curvature to `r = 0` from measured disk areas.
///
/// The deficit is even in `r`, so the three smallest radii are fitted with a
/// quadratic in `r^2`; fewer radii fall back to a linear fit or the raw value.
pub fn bdp_extrapolate(radii: &[f64], areas: &[f64]) -> Result<f64> {
    check_dim(radii.len(), areas.len())?;
    check_radii(radii)?;
    let mut pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(areas)
        .map(|(&r, &a)| (r * r, deficit(r, a)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.truncate(3);
    let mut total = 0.0;
    for (i, &(xi, ki)) in pts.iter().enumerate() {
        let mut weight = 1.0;
        for (j, &(xj, _)) in pts.iter().enumerate() {
            if i != j {
                weight *= xj / (xj - xi);
            }
        }
        total += weight * ki;
    }
    Ok(total)
}

/// Gram-Schmidt in the metric at `x`.
fn orthonormal_frame(m: &WarpedMetric, x: &[f64], u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let uu = m.inner(x, u, u);
    let vv = m.inner(x, v, v);
    let uv = m.inner(x, u, v);
    if !(uu * vv - uv * uv > 1e-12 * uu * vv) {
        return Err(Error::domain("plane vectors are linearly dependent"));
    }
    let e1: Vec<f64> = u.iter().map(|c| c / uu.sqrt()).collect();
    let proj = m.inner(x, v, &e1);
    let w: Vec<f64> = v.iter().zip(&e1).map(|(a, b)| a - proj * b).collect();
    let ww = m.inner(x, &w, &w).sqrt();
    Ok((e1, w.iter().map(|c| c / ww).collect()))
}

/// Radial fan around `at`: for each direction, the area-element integral
/// `int_0^r |d_s gamma ^ d_theta gamma| ds` at every radius.
fn radial_integrals(
    m: &WarpedMetric,
    at: &[f64],
    e1: &[f64],
    e2: &[f64],
    theta: f64,
    schedule: &[(f64, usize, f64)],
    n_radii: usize,
) -> Result<Vec<f64>> {
    let dim = m.dim();
    let block = 2 * dim;
    let mut y = vec![0.0; 3 * block];
    for (b, angle) in [theta - ANGLE_STEP, theta, theta + ANGLE_STEP].iter().enumerate() {
        let (c, s) = (angle.cos(), angle.sin());
        y[b * block..b * block + dim].copy_from_slice(at);
        for i in 0..dim {
            y[b * block + dim + i] = c * e1[i] + s * e2[i];
        }
    }
    let field = RefCell::new(GeodesicField::new(m));
    let mut f = |_: f64, y: &[f64], dy: &mut [f64]| {
        let mut field = field.borrow_mut();
        for b in 0..3 {
            field.eval(&y[b * block..(b + 1) * block], &mut dy[b * block..(b + 1) * block]);
        }
    };
    let mut stepper = Dopri5::new(ODE_TOL, ODE_TOL);
    let mut g = vec![0.0; dim];
    let mut jac = vec![0.0; dim];
    let mut out = vec![0.0; n_radii];
    let mut s_now = 0.0;
    for &(s, radius_index, weight) in schedule {
        let step = stepper.advance(&mut f, s_now, &mut y, s);
        if let Some(e) = field.borrow_mut().take_failure() {
            return Err(e);
        }
        step?;
        s_now = s;
        let mid = &y[block..2 * block];
        let (x, vel) = mid.split_at(dim);
        for i in 0..dim {
            jac[i] = (y[2 * block + i] - y[i]) / (2.0 * ANGLE_STEP);
        }
        m.components(x, &mut g);
        let dot = |a: &[f64], b: &[f64]| g.iter().zip(a).zip(b).map(|((g, a), b)| g * a * b).sum::<f64>();
        let area2 = dot(&jac, &jac) * dot(vel, vel) - dot(&jac, vel).powi(2);
        out[radius_index] += weight * area2.max(0.0).sqrt();
    }
    Ok(out)
}

/// Sectional curvature of the plane spanned by `plane` at `at`, estimated
/// from geodesic disk areas at each radius and extrapolated to `r = 0`.
pub fn bdp_curvature_estimate(
    m: &WarpedMetric,
    at: &MetricPoint,
    plane: (&[f64], &[f64]),
    radii: &[f64],
) -> Result<BdpEstimate> {
    check_dim(m.dim(), at.dim())?;
    check_dim(m.dim(), plane.0.len())?;
    check_dim(m.dim(), plane.1.len())?;
    check_radii(radii)?;
    let x = at.coords();
    let (e1, e2) = orthonormal_frame(m, x, plane.0, plane.1)?;

    // One pass per direction collects every radius: merge the Kronrod nodes
    // of all radii into a single increasing schedule.
    let mut schedule: Vec<(f64, usize, f64)> = Vec::with_capacity(15 * radii.len());
    for (i, &r) in radii.iter().enumerate() {
        schedule.extend(kronrod_rule(0.0, r).iter().map(|&(s, w)| (s, i, w)));
    }
    schedule.sort_by(|a, b| a.0.total_cmp(&b.0));

    let dtheta = 2.0 * std::f64::consts::PI / BDP_DIRECTIONS as f64;
    let per_direction: Vec<Result<Vec<f64>>> = (0..BDP_DIRECTIONS)
        .into_par_iter()
        .map(|j| radial_integrals(m, x, &e1, &e2, j as f64 * dtheta, &schedule, radii.len()))
        .collect();
    let mut areas = vec![0.0; radii.len()];
    for res in per_direction {
        let radial = res.map_err(|e| {
            Error::domain(format!(
                "radius too large: geodesic fan left the region where the metric is usable ({e})"
            ))
        })?;
        for (a, v) in areas.iter_mut().zip(radial) {
            *a += dtheta * v;
        }
    }
    let samples = radii
        .iter()
        .zip(&areas)
        .map(|(&radius, &area)| BdpSample {
            radius,
            area,
            deficit_curvature: deficit(radius, area),
        })
        .collect();
    Ok(BdpEstimate {
        curvature: bdp_extrapolate(radii, &areas)?,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Warp;

    const LN2: f64 = std::f64::consts::LN_2;
    const RADII: [f64; 3] = [0.2, 0.1, 0.05];

    #[test]
    fn constant_curvature_oracle_areas() {
        for k in [-0.48f64, -1.0, -4.0] {
            let c = (-k).sqrt();
            let areas: Vec<f64> = RADII
                .iter()
                .map(|r| 2.0 * std::f64::consts::PI / -k * ((c * r).cosh() - 1.0))
                .collect();
            let est = bdp_extrapolate(&RADII, &areas).unwrap();
            assert!((est - k).abs() < 1e-6 * k.abs(), "k {k} est {est}");
        }
    }

    #[test]
    fn flat_disk_has_no_deficit() {
        let m = WarpedMetric::flat(1);
        let est = bdp_curvature_estimate(&m, &MetricPoint::new(vec![0.3, 0.1]), (&[1.0, 0.0], &[0.0, 1.0]), &RADII)
            .unwrap();
        assert!(est.curvature.abs() < 1e-3);
    }

    #[test]
    fn exponential_metric_recovers_minus_t_squared() {
        let m = WarpedMetric::exponential(LN2, 1).unwrap();
        let est = bdp_curvature_estimate(&m, &MetricPoint::new(vec![0.5, -1.0]), (&[1.0, 0.0], &[0.0, 1.0]), &RADII)
            .unwrap();
        let k = -LN2 * LN2;
        assert!((est.curvature - k).abs() < 0.02 * k.abs(), "{}", est.curvature);
        assert_eq!(est.samples.len(), 3);
    }

    #[test]
    fn cosh_warp_is_minus_one() {
        let m = WarpedMetric::general(vec![Warp::Cosh]).unwrap();
        let est = bdp_curvature_estimate(&m, &MetricPoint::new(vec![0.2, 0.0]), (&[1.0, 0.0], &[0.0, 1.0]), &RADII)
            .unwrap();
        assert!((est.curvature + 1.0).abs() < 0.02);
    }

    #[test]
    fn bad_radii_are_rejected() {
        let m = WarpedMetric::flat(1);
        let at = MetricPoint::new(vec![0.0, 0.0]);
        let plane: (&[f64], &[f64]) = (&[1.0, 0.0], &[0.0, 1.0]);
        assert!(bdp_curvature_estimate(&m, &at, plane, &[]).is_err());
        assert!(bdp_curvature_estimate(&m, &at, plane, &[0.1, -0.1]).is_err());
        assert!(bdp_curvature_estimate(&m, &at, plane, &[0.1, 0.1]).is_err());
    }

    #[test]
    fn escaping_fan_is_a_domain_error() {
        // The chart metric under- and overflows long before r = 5000.
        let m = WarpedMetric::exponential(LN2, 1).unwrap();
        let r = bdp_curvature_estimate(&m, &MetricPoint::new(vec![0.0, 0.0]), (&[1.0, 0.0], &[0.0, 1.0]), &[5000.0]);
        assert!(matches!(r, Err(Error::Domain(_))), "{r:?}");
    }
}
