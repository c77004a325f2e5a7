//! Tsallis and BGS entropy functionals, the composition law and the
//! q-logarithm form. Boltzmann's constant is set to 1 throughout.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcalc::QParam;
use crate::quadrature::{self, DEFAULT_MAX_SUBDIVISIONS};

/// Allowed deviation of a probability vector's sum from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default absolute tolerance for continuous entropy quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// A finite probability vector. Inputs are validated, never renormalized.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("distribution has no outcomes".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!(
                    "entry {i} is {p}; probabilities must be finite and >= 0"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        let deficit = 1.0 - sum;
        if deficit.abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "probabilities sum to {sum} (deficit {deficit:e}, tolerance {NORMALIZATION_TOL:e})"
            )));
        }
        Ok(DiscreteDistribution { probs })
    }

    /// Normalizes non-negative weights. Only for callers that explicitly
    /// want a distribution proportional to `weights`.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Validation(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(w: usize) -> Result<Self> {
        if w == 0 {
            return Err(Error::Validation("uniform distribution needs W >= 1".into()));
        }
        Self::new(vec![1.0 / w as f64; w])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Shannon (BGS) entropy with the `0 log 0 = 0` convention.
pub fn bgs(dist: &DiscreteDistribution) -> f64 {
    dist.probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Tsallis entropy `(1 - sum p_i^q) / (q - 1)`; the BGS entropy at q = 1.
pub fn tsallis_discrete(p: QParam, dist: &DiscreteDistribution) -> Result<f64> {
    if p.is_limit() {
        return Ok(bgs(dist));
    }
    let q = p.q();
    if q <= 0.0 && dist.probs.iter().any(|&x| x == 0.0) {
        return Err(Error::domain(format!(
            "zero-probability outcome with q = {q} <= 0 (0^q undefined)"
        )));
    }
    let power_sum: f64 = dist
        .probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x.powf(q))
        .sum();
    Ok((1.0 - power_sum) / (q - 1.0))
}

/// Outer product `p_ij = a_i b_j`, row-major.
pub fn product_distribution(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
) -> DiscreteDistribution {
    let probs = a
        .probs
        .iter()
        .flat_map(|&x| b.probs.iter().map(move |&y| x * y))
        .collect();
    // Products of two normalized vectors stay within rounding of 1.
    DiscreteDistribution { probs }
}

/// Residual of the composition law
/// `S(a x b) = S(a) + S(b) + (1-q) S(a) S(b)`.
pub fn check_composition(
    p: QParam,
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
) -> Result<f64> {
    let sa = tsallis_discrete(p, a)?;
    let sb = tsallis_discrete(p, b)?;
    let sab = tsallis_discrete(p, &product_distribution(a, b))?;
    Ok((sab - p.q_add(sa, sb)).abs())
}

/// q-logarithm `(1 - x^(1-q)) / (q - 1)`.
pub fn q_log(p: QParam, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("q-logarithm needs x > 0, got {x}")));
    }
    if p.is_limit() {
        return Ok(x.ln());
    }
    let d = p.deformation();
    Ok((d * x.ln()).exp_m1() / d)
}

/// `|sum p_i ln_q(1/p_i) - S_q|`: agreement of the q-logarithm form with
/// the direct power-sum form.
pub fn q_log_representation_residual(p: QParam, dist: &DiscreteDistribution) -> Result<f64> {
    if let Some(i) = dist.probs.iter().position(|&x| x == 0.0) {
        return Err(Error::domain(format!(
            "entry {i} is zero; ln_q(1/p) is undefined"
        )));
    }
    let mut expectation = 0.0;
    for &x in &dist.probs {
        expectation += x * q_log(p, 1.0 / x)?;
    }
    Ok((expectation - tsallis_discrete(p, dist)?).abs())
}

/// A probability density on a closed interval.
#[derive(Clone)]
pub struct DensityFunction {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support: (f64, f64),
}

impl fmt::Debug for DensityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityFunction")
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl DensityFunction {
    /// Checks that the density integrates to 1 on `[a, b]` within `quad_tol`
    /// (plus the quadrature's own error estimate).
    pub fn new<F>(density: F, a: f64, b: f64, quad_tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Validation(format!("bad support [{a}, {b}]")));
        }
        let mut negative = None;
        let mass = quadrature::integrate(
            |x| {
                let v = density(x);
                if v < 0.0 && negative.is_none() {
                    negative = Some(x);
                }
                v
            },
            a,
            b,
            quad_tol,
            DEFAULT_MAX_SUBDIVISIONS,
        )?;
        if let Some(x) = negative {
            return Err(Error::Validation(format!("density is negative at x = {x}")));
        }
        if (mass.value - 1.0).abs() > quad_tol + mass.error {
            return Err(Error::Validation(format!(
                "density integrates to {} on [{a}, {b}] (deficit {:e})",
                mass.value,
                1.0 - mass.value
            )));
        }
        Ok(DensityFunction {
            evaluator: Arc::new(density),
            support: (a, b),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }
}

/// Continuous Tsallis entropy `(1 - int p^q dx) / (q - 1)` on Lebesgue
/// measure over the density's support.
pub fn tsallis_continuous(p: QParam, f: &DensityFunction, quad_tol: f64) -> Result<f64> {
    let (a, b) = f.support;
    if p.is_limit() {
        let r = quadrature::integrate(
            |x| {
                let v = f.eval(x);
                if v > 0.0 {
                    -v * v.ln()
                } else {
                    0.0
                }
            },
            a,
            b,
            quad_tol,
            DEFAULT_MAX_SUBDIVISIONS,
        )?;
        return Ok(r.value);
    }
    let q = p.q();
    let r = quadrature::integrate(
        |x| {
            let v = f.eval(x);
            if v > 0.0 {
                v.powf(q)
            } else {
                0.0
            }
        },
        a,
        b,
        quad_tol,
        DEFAULT_MAX_SUBDIVISIONS,
    )?;
    Ok((1.0 - r.value) / (q - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(q: f64) -> QParam {
        QParam::new(q).unwrap()
    }

    fn dist(v: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(DiscreteDistribution::new(vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![f64::NAN, 1.0]).is_err());
        let e = DiscreteDistribution::new(vec![0.5, 0.5 - 2e-12]).unwrap_err();
        assert!(e.to_string().contains("deficit"));
        assert!(DiscreteDistribution::new(vec![0.5, 0.5 - 5e-13]).is_ok());
    }

    #[test]
    fn degenerate_has_zero_entropy() {
        let d = dist(&[1.0, 0.0, 0.0]);
        for q in [0.1, 0.5, 1.0, 1.7] {
            assert_eq!(tsallis_discrete(qp(q), &d).unwrap(), 0.0);
        }
    }

    #[test]
    fn uniform_two_at_half() {
        let s = tsallis_discrete(qp(0.5), &DiscreteDistribution::uniform(2).unwrap()).unwrap();
        assert!((s - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((s - 0.828427).abs() < 1e-6);
    }

    #[test]
    fn uniform_bgs_limit_is_log_w() {
        for w in [1usize, 2, 5, 64] {
            let s = tsallis_discrete(QParam::bgs(), &DiscreteDistribution::uniform(w).unwrap())
                .unwrap();
            assert!((s - (w as f64).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_entries_with_nonpositive_q() {
        let d = dist(&[0.5, 0.5, 0.0]);
        assert!(matches!(tsallis_discrete(qp(0.0), &d), Err(Error::Domain(_))));
        assert!(matches!(tsallis_discrete(qp(-0.5), &d), Err(Error::Domain(_))));
        // q = 0 counts the support: (1 - 2) / (0 - 1) = 1
        assert_eq!(tsallis_discrete(qp(0.0), &dist(&[0.5, 0.5])).unwrap(), 1.0);
    }

    #[test]
    fn product_examples() {
        let b = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(product_distribution(&dist(&[1.0]), &b), b);
        assert_eq!(
            product_distribution(&dist(&[0.5, 0.5]), &dist(&[0.5, 0.5])).probs(),
            &[0.25; 4]
        );
        let p = product_distribution(&dist(&[0.3, 0.7]), &dist(&[0.2, 0.8]));
        for (x, e) in p.probs().iter().zip([0.06, 0.24, 0.14, 0.56]) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn composition_uniform_two_by_two() {
        let u = DiscreteDistribution::uniform(2).unwrap();
        let p = qp(0.5);
        // brute force over the four product outcomes, each 1/4
        let sab = (1.0 - 4.0 * 0.25f64.powf(0.5)) / (0.5 - 1.0);
        assert!((sab - 2.0).abs() < 1e-15);
        assert!(check_composition(p, &u, &u).unwrap() < 1e-12);
    }

    #[test]
    fn composition_degenerate_factor() {
        let a = dist(&[1.0]);
        let b = dist(&[0.1, 0.2, 0.7]);
        assert!(check_composition(qp(0.3), &a, &b).unwrap() < 1e-15);
        let at_one = check_composition(QParam::bgs(), &b, &b).unwrap();
        assert!(at_one < 1e-14);
    }

    #[test]
    fn q_log_examples() {
        for q in [0.0, 0.5, 1.0, 1.5] {
            assert_eq!(q_log(qp(q), 1.0).unwrap(), 0.0);
        }
        assert!((q_log(qp(0.5), 2.0).unwrap() - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((q_log(QParam::bgs(), std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(q_log(qp(0.5), 0.0).is_err());
        assert!(q_log(qp(0.5), -1.0).is_err());
    }

    #[test]
    fn q_log_residual_examples() {
        let u = DiscreteDistribution::uniform(2).unwrap();
        assert!(q_log_representation_residual(qp(0.5), &u).unwrap() < 1e-14);
        let eps = 1e-6;
        let d = dist(&[1.0 - eps, eps]);
        assert!(q_log_representation_residual(qp(0.5), &d).unwrap() < 1e-12);
        assert!(q_log_representation_residual(QParam::bgs(), &d).unwrap() < 1e-15);
        assert!(q_log_representation_residual(qp(0.5), &dist(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn continuous_uniform_examples() {
        let unit = DensityFunction::new(|_| 1.0, 0.0, 1.0, 1e-10).unwrap();
        for q in [0.2, 0.5, 1.0, 1.4] {
            assert!(tsallis_continuous(qp(q), &unit, 1e-10).unwrap().abs() < 1e-12);
        }
        let wide = DensityFunction::new(|_| 0.5, 0.0, 2.0, 1e-10).unwrap();
        let s = tsallis_continuous(qp(0.5), &wide, 1e-10).unwrap();
        assert!((s - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn density_validation() {
        assert!(DensityFunction::new(|_| 1.0, 0.0, 2.0, 1e-8).is_err());
        assert!(DensityFunction::new(|x| 2.0 * x - 0.5, 0.0, 1.0, 1e-8).is_err());
        assert!(DensityFunction::new(|_| 1.0, 1.0, 0.0, 1e-8).is_err());
    }
}
