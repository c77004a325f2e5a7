use serde::{Deserialize, Serialize};

use super::{check_dim, MetricPoint};
use crate::error::{Error, Result};

/// Element of the twisted translation group on `R x R^n`,
/// `(x, y) . (x', y') = (x + x', y + e^{t x} y')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub x0: f64,
    pub y: Vec<f64>,
    pub t: f64,
}

impl GroupElement {
    pub fn new(x0: f64, y: Vec<f64>, t: f64) -> Self {
        GroupElement { x0, y, t }
    }

    pub fn identity(n: usize, t: f64) -> Self {
        GroupElement {
            x0: 0.0,
            y: vec![0.0; n],
            t,
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.y.len()
    }

    fn check_compatible(&self, other: &GroupElement) -> Result<()> {
        if self.t != other.t {
            return Err(Error::domain(format!(
                "group elements with different twists {} and {}",
                self.t, other.t
            )));
        }
        check_dim(self.y.len(), other.y.len())
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        self.check_compatible(other)?;
        let scale = (self.t * self.x0).exp();
        Ok(GroupElement {
            x0: self.x0 + other.x0,
            y: self
                .y
                .iter()
                .zip(&other.y)
                .map(|(a, b)| scale.mul_add(*b, *a))
                .collect(),
            t: self.t,
        })
    }

    pub fn inverse(&self) -> GroupElement {
        let scale = (-self.t * self.x0).exp();
        GroupElement {
            x0: -self.x0,
            y: self.y.iter().map(|v| -scale * v).collect(),
            t: self.t,
        }
    }

    /// `a b a^-1 b^-1` in closed form; its base coordinate is exactly zero.
    pub fn commutator(&self, other: &GroupElement) -> Result<GroupElement> {
        self.check_compatible(other)?;
        let ea = (self.t * self.x0).exp_m1();
        let eb = (self.t * other.x0).exp_m1();
        Ok(GroupElement {
            x0: 0.0,
            y: self
                .y
                .iter()
                .zip(&other.y)
                .map(|(ya, yb)| yb * ea - ya * eb)
                .collect(),
            t: self.t,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.x0 == 0.0 && self.y.iter().all(|&v| v == 0.0)
    }

    /// Left translation of a chart point, an isometry of the exponential
    /// warped metric with the same twist.
    pub fn translate(&self, p: &MetricPoint) -> Result<MetricPoint> {
        check_dim(self.y.len() + 1, p.dim())?;
        let as_elem = GroupElement::new(p.base(), p.fiber().to_vec(), self.t);
        let moved = self.compose(&as_elem)?;
        let mut coords = Vec::with_capacity(p.dim());
        coords.push(moved.x0);
        coords.extend(moved.y);
        Ok(MetricPoint::new(coords))
    }
}
