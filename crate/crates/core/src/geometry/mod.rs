//! Geometry induced by the q-deformation: the deformed distance, the twisted
//! translation group, warped-product metrics, geodesics and curvature.

mod bdp;
mod diffgeo;
mod geodesic;
mod group;
mod metric;
pub mod ode;

use serde::{Deserialize, Serialize};

pub use bdp::{bdp_curvature_estimate, bdp_extrapolate, BdpEstimate, BdpSample, BDP_DIRECTIONS, DEFAULT_BDP_RADII};
pub use diffgeo::{christoffel, sectional_curvature_numeric, Christoffel, DEFAULT_FD_STEP};
pub use geodesic::{
    exponential_distance, exponential_geodesic_point, geodesic_distance_closed,
    geodesic_distance_numeric, solve_geodesic, GeodesicSolution,
};
pub use group::GroupElement;
pub use metric::{naive_cometric, AnalyticCurvature, MetricKind, Warp, WarpedMetric};

use crate::error::{Error, Result};
use crate::qcalc::QParam;

/// A point in a warped chart: base coordinate first, then the fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricPoint {
    coords: Vec<f64>,
}

impl MetricPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        MetricPoint { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn base(&self) -> f64 {
        self.coords[0]
    }

    pub fn fiber(&self) -> &[f64] {
        &self.coords[1..]
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl From<Vec<f64>> for MetricPoint {
    fn from(coords: Vec<f64>) -> Self {
        MetricPoint::new(coords)
    }
}

/// `tau_q(d)`: a distance deformed through the field isomorphism.
///
/// The result is symmetric and vanishes only at `d = 0`. It satisfies the
/// deformed triangle inequality `D(x,z) <= D(x,y) (+)_q D(y,z)`; the plain
/// sum `D(x,y) + D(y,z)` can fall short of `D(x,z)` for `q < 1`, since
/// `tau_q` is strictly convex there.
///
/// Positive definiteness needs `q` in `[0, 1)`; the q = 1 limit branch is
/// admitted and returns `d` unchanged.
pub fn deformed_distance(p: QParam, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::domain(format!("distance must be >= 0, got {d}")));
    }
    if p.is_limit() {
        return Ok(d);
    }
    let q = p.q();
    if !(0.0..1.0).contains(&q) {
        return Err(Error::domain(format!(
            "deformed distance needs q in [0, 1), got {q}"
        )));
    }
    Ok(p.tau(d)?.value())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Shape { expected, got });
    }
    Ok(())
}
