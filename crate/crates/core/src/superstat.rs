//! Superstatistics: a chi-squared (Gamma) distributed inverse temperature
//! whose Laplace transform is the q-exponential.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{self, Quadrature, DEFAULT_MAX_SUBDIVISIONS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperstatParams {
    q: f64,
    beta0: f64,
    energy: f64,
}

impl SuperstatParams {
    pub fn new(q: f64, beta0: f64, energy: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::domain(format!("superstatistics needs q > 1, got {q}")));
        }
        if !(beta0 > 0.0) || !beta0.is_finite() {
            return Err(Error::domain(format!("beta0 must be > 0, got {beta0}")));
        }
        if !(energy >= 0.0) || !energy.is_finite() {
            return Err(Error::domain(format!("energy must be >= 0, got {energy}")));
        }
        Ok(SuperstatParams { q, beta0, energy })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Gamma shape `1/(q-1)`.
    pub fn shape(&self) -> f64 {
        1.0 / (self.q - 1.0)
    }

    /// Gamma scale `(q-1) beta0`.
    pub fn scale(&self) -> f64 {
        (self.q - 1.0) * self.beta0
    }
}

/// Density of the fluctuating inverse temperature.
pub fn chi2_density(s: &SuperstatParams, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::domain(format!("beta must be > 0, got {beta}")));
    }
    Ok(log_density(s, beta).exp())
}

fn log_density(s: &SuperstatParams, beta: f64) -> f64 {
    let shape = s.shape();
    let scale = s.scale();
    // beta^{-(2-q)/(1-q)} = beta^{shape - 1}
    -ln_gamma(shape) - shape * scale.ln() + (shape - 1.0) * beta.ln() - beta / scale
}

/// The q-exponential `[1 + (q-1) beta0 E]^{1/(1-q)}`.
pub fn q_exponential(s: &SuperstatParams) -> Result<f64> {
    let z = (s.q - 1.0) * s.beta0 * s.energy;
    if !(1.0 + z > 0.0) {
        return Err(Error::domain(format!("1 + (q-1) beta0 E = {} <= 0", 1.0 + z)));
    }
    Ok((-z.ln_1p() / (s.q - 1.0)).exp())
}

/// `int_0^inf g(beta) f(beta) d beta` with the half-line map scaled by beta0.
fn integrate_against(
    s: &SuperstatParams,
    quad_tol: f64,
    g: impl Fn(f64) -> f64,
) -> Result<Quadrature> {
    quadrature::integrate_half_line(
        |beta| {
            if beta <= 0.0 {
                return 0.0;
            }
            (log_density(s, beta)).exp() * g(beta)
        },
        s.beta0,
        quad_tol,
        DEFAULT_MAX_SUBDIVISIONS,
    )
}

/// Total mass of the density by quadrature.
pub fn normalization(s: &SuperstatParams, quad_tol: f64) -> Result<f64> {
    Ok(integrate_against(s, quad_tol, |_| 1.0)?.value)
}

/// Mean inverse temperature by quadrature; equals beta0.
pub fn mean_beta(s: &SuperstatParams, quad_tol: f64) -> Result<f64> {
    Ok(integrate_against(s, quad_tol, |b| b)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceCheck {
    pub integral: f64,
    pub closed_form: f64,
    pub residual: f64,
}

/// Laplace transform of the density at the energy by quadrature, compared
/// with the closed-form q-exponential.
pub fn laplace_transform(s: &SuperstatParams, quad_tol: f64) -> Result<LaplaceCheck> {
    let e = s.energy;
    let integral = integrate_against(s, quad_tol, |b| (-b * e).exp())?.value;
    let closed_form = q_exponential(s)?;
    Ok(LaplaceCheck {
        integral,
        closed_form,
        residual: (integral - closed_form).abs(),
    })
}

/// Residual `|int f(beta) e^{-beta E} d beta - e_q|`.
pub fn laplace_check(s: &SuperstatParams, quad_tol: f64) -> Result<f64> {
    Ok(laplace_transform(s, quad_tol)?.residual)
}
