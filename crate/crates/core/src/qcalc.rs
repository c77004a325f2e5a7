//! The deformed field R_q.
//!
//! `tau` maps the ordinary reals onto R_q, `tau(x) = ((2-q)^x - 1)/(1-q)`,
//! and carries `+` and `*` to the q-addition and the generalized product.
//! Every formula is written through `expm1`/`log1p` of the twist
//! `t = ln(2-q)` so that the q -> 1 neighbourhood does not cancel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from q = 1 below which the exact BGS branch is used.
pub const LIMIT_SWITCH: f64 = 1e-9;

/// Validated entropic parameter with its cached twist `t = ln(2 - q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QParam {
    q: f64,
    t: f64,
    limit: bool,
}

impl QParam {
    /// Accepts any finite `q < 2`. Values within [`LIMIT_SWITCH`] of 1 select
    /// the exact limit branch, in which `tau` is the identity.
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::domain(format!("q must be finite, got {q}")));
        }
        if q >= 2.0 {
            return Err(Error::domain(format!("q must be < 2 (base 2-q > 0), got {q}")));
        }
        let limit = (1.0 - q).abs() < LIMIT_SWITCH;
        let t = if limit { 0.0 } else { (1.0 - q).ln_1p() };
        Ok(QParam { q, t, limit })
    }

    /// The q = 1 (BGS) parameter.
    pub fn bgs() -> Self {
        QParam {
            q: 1.0,
            t: 0.0,
            limit: true,
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `t = ln(2 - q)`; zero on the limit branch.
    pub fn twist(&self) -> f64 {
        self.t
    }

    /// Whether the exact q = 1 branch is in force.
    pub fn is_limit(&self) -> bool {
        self.limit
    }

    /// `1 - q`, the deformation strength.
    pub fn deformation(&self) -> f64 {
        1.0 - self.q
    }

    /// Curvature `-t^2` of the metric induced by this parameter.
    pub fn curvature(&self) -> f64 {
        -self.t * self.t
    }

    /// `1 + (1-q) u`, the multiplicative coordinate of `u`; positive exactly
    /// on the range of `tau`.
    fn offset(&self, u: f64) -> f64 {
        self.deformation().mul_add(u, 1.0)
    }

    /// Wraps a raw value as an element of R_q, checking it lies in the range
    /// of `tau`.
    pub fn element(&self, value: f64) -> Result<DeformedReal> {
        if !value.is_finite() {
            return Err(Error::domain(format!("non-finite element {value}")));
        }
        if !self.limit && self.offset(value) <= 0.0 {
            return Err(Error::domain(format!(
                "{value} lies outside the range of tau_q (boundary -1/(1-q) = {}) for q = {}",
                -1.0 / self.deformation(),
                self.q
            )));
        }
        let log_offset = if self.limit {
            value
        } else {
            (self.deformation() * value).ln_1p()
        };
        Ok(DeformedReal {
            value,
            log_offset,
            qparam: *self,
        })
    }

    /// Maps `1 + (1-q) u = exp(e)` back to `u`. Errors when `exp(e)` leaves
    /// the normal f64 range; a value that merely rounds onto the range
    /// boundary is kept, since `e` still identifies it.
    fn from_log_offset(&self, e: f64) -> Result<DeformedReal> {
        let value = e.exp_m1() / self.deformation();
        if !value.is_finite() {
            return Err(Error::Range(format!(
                "exponent {e} overflows R_q for q = {}",
                self.q
            )));
        }
        if !(e >= f64::MIN_POSITIVE.ln()) {
            return Err(Error::Range(format!(
                "exponent {e} underflows to the range boundary of R_q for q = {}",
                self.q
            )));
        }
        Ok(DeformedReal {
            value,
            log_offset: e,
            qparam: *self,
        })
    }

    /// The field isomorphism `tau_q : R -> R_q`.
    pub fn tau(&self, x: f64) -> Result<DeformedReal> {
        if !x.is_finite() {
            return Err(Error::domain(format!("non-finite argument {x}")));
        }
        if self.limit {
            return self.element(x);
        }
        self.from_log_offset(x * self.t)
    }

    /// Inverse of [`QParam::tau`].
    pub fn tau_inv(&self, u: DeformedReal) -> Result<f64> {
        self.check_same(&u)?;
        if self.limit {
            return Ok(u.value);
        }
        Ok(u.log_offset / self.t)
    }

    /// Inverse of `tau` on a raw value; errors below the range boundary.
    pub fn tau_inv_value(&self, u: f64) -> Result<f64> {
        self.tau_inv(self.element(u)?)
    }

    fn check_same(&self, u: &DeformedReal) -> Result<()> {
        if u.qparam.q != self.q {
            return Err(Error::domain(format!(
                "element of R_q with q = {} used with q = {}",
                u.qparam.q, self.q
            )));
        }
        Ok(())
    }

    /// q-addition `u + v + (1-q) u v`.
    pub fn q_add(&self, u: f64, v: f64) -> f64 {
        if self.limit {
            u + v
        } else {
            u + v + self.deformation() * u * v
        }
    }

    /// q-addition of two elements of R_q, evaluated on their multiplicative
    /// coordinates: `1 + (1-q)(u + v + (1-q)uv) = (1 + (1-q)u)(1 + (1-q)v)`.
    /// Unlike [`QParam::q_add`] this keeps full relative accuracy when the
    /// sum nearly cancels.
    pub fn q_add_deformed(&self, u: DeformedReal, v: DeformedReal) -> Result<DeformedReal> {
        self.check_same(&u)?;
        self.check_same(&v)?;
        if self.limit {
            return self.element(u.value + v.value);
        }
        self.from_log_offset(u.log_offset + v.log_offset)
    }

    /// Inverse of q-addition: the unique `w` with `q_add(w, v) = u`.
    pub fn q_sub(&self, u: f64, v: f64) -> Result<f64> {
        if self.limit {
            return Ok(u - v);
        }
        let denom = self.offset(v);
        if denom == 0.0 {
            return Err(Error::Singularity(format!(
                "q-subtraction of v = {v} = -1/(1-q) for q = {}",
                self.q
            )));
        }
        Ok((u - v) / denom)
    }

    /// Generalized product, the pushforward of `*` through `tau`.
    pub fn q_mul(&self, u: DeformedReal, v: DeformedReal) -> Result<DeformedReal> {
        self.check_same(&u)?;
        self.check_same(&v)?;
        if self.limit {
            return self.element(u.value * v.value);
        }
        self.from_log_offset(u.log_offset * v.log_offset / self.t)
    }

    /// Generalized division, `tau(tau_inv(u) / tau_inv(v))`.
    pub fn q_div(&self, u: DeformedReal, v: DeformedReal) -> Result<DeformedReal> {
        self.check_same(&u)?;
        self.check_same(&v)?;
        if v.value == 0.0 {
            return Err(Error::Division);
        }
        if self.limit {
            return self.element(u.value / v.value);
        }
        self.from_log_offset(self.t * (u.log_offset / v.log_offset))
    }
}

impl TryFrom<f64> for QParam {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        QParam::new(q)
    }
}

impl From<QParam> for f64 {
    fn from(p: QParam) -> f64 {
        p.q
    }
}

/// An element of R_q: a value in the range of `tau_q`, tagged with its q.
///
/// Alongside the value it keeps `ln(1 + (1-q) value)`. Near the range
/// boundary `-1/(1-q)` the value alone rounds away most of the element;
/// the logarithm does not.
#[derive(Debug, Clone, Copy)]
pub struct DeformedReal {
    value: f64,
    log_offset: f64,
    qparam: QParam,
}

impl PartialEq for DeformedReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value && self.qparam == other.qparam
    }
}

impl DeformedReal {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn qparam(&self) -> QParam {
        self.qparam
    }
}
