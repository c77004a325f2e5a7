//! The model surface of constant curvature `k < 0` in half-plane
//! coordinates `(xi, eta)`, `eta > 0`, with metric `(dxi^2 + deta^2) / (|k| eta^2)`.

use crate::error::{Error, Result};

/// A point of the model half-plane, `[xi, eta]`.
pub type ModelPoint = [f64; 2];

fn scale(k: f64) -> Result<f64> {
    if !(k < 0.0) || !k.is_finite() {
        return Err(Error::Unsupported(format!(
            "model spaces exist here only for finite k < 0, got {k}"
        )));
    }
    Ok((-k).sqrt())
}

/// `arccosh(1 + z)` without cancellation for small `z`.
fn acosh1p(z: f64) -> f64 {
    (z + (z * (z + 2.0)).sqrt()).ln_1p()
}

pub fn model_distance(k: f64, a: ModelPoint, b: ModelPoint) -> Result<f64> {
    let kappa = scale(k)?;
    if !(a[1] > 0.0 && b[1] > 0.0) {
        return Err(Error::domain("model points need eta > 0"));
    }
    let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    Ok(acosh1p(d2 / (2.0 * a[1] * b[1])) / kappa)
}

fn check_sides(a: f64, b: f64, c: f64) -> Result<()> {
    if !(a >= 0.0 && b >= 0.0 && c >= 0.0) || !(a + b + c).is_finite() {
        return Err(Error::domain(format!("side lengths must be finite and >= 0, got ({a}, {b}, {c})")));
    }
    let slack = 1e-12 * (a + b + c);
    if a > b + c + slack || b > a + c + slack || c > a + b + slack {
        return Err(Error::domain(format!("sides ({a}, {b}, {c}) violate the triangle inequality")));
    }
    Ok(())
}

/// Interior angle at the vertex opposite side `a` of a curvature -1
/// triangle, from the half-angle formula.
fn angle_opposite(a: f64, b: f64, c: f64) -> f64 {
    let s = 0.5 * (a + b + c);
    let num = ((s - b).max(0.0).sinh() * (s - c).max(0.0).sinh()).sqrt();
    let den = (s.sinh() * (s - a).max(0.0).sinh()).sqrt();
    2.0 * num.atan2(den)
}

/// Comparison triangle `[x, y, z]` for sides `a = d(y, z)`, `b = d(z, x)`,
/// `c = d(x, y)`. `x` sits at `(0, 1)`, `y` on the ray above it and `z` in
/// the half `xi >= 0`.
pub fn comparison_triangle(k: f64, a: f64, b: f64, c: f64) -> Result<[ModelPoint; 3]> {
    let kappa = scale(k)?;
    check_sides(a, b, c)?;
    let (ka, kb, kc) = (kappa * a, kappa * b, kappa * c);
    let x = [0.0, 1.0];
    let y = [0.0, kc.exp()];
    if kb == 0.0 {
        return Ok([x, y, x]);
    }
    let alpha = if kc == 0.0 { 0.0 } else { angle_opposite(ka, kb, kc) };
    // Disk point at hyperbolic radius kb and angle alpha from the y-ray,
    // sent to the half-plane by w -> i (1 + w) / (1 - w).
    let r = (0.5 * kb).tanh();
    let (wr, wi) = (r * alpha.cos(), -r * alpha.sin());
    let den = (1.0 - wr).powi(2) + wi * wi;
    let z = [-2.0 * wi / den, (1.0 - wr * wr - wi * wi) / den];
    Ok([x, y, z])
}

/// `(sign, ln|sinh x|)`
fn log_sinh(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let l = if ax > 20.0 {
        ax - std::f64::consts::LN_2 + (-(-2.0 * ax).exp()).ln_1p()
    } else {
        ax.sinh().ln()
    };
    (x.signum(), l)
}

/// Model distance from the comparison vertex `x` to the point `w` at
/// arclength fraction `s` along the side from `y` to `z`.
///
/// Hyperbolic Stewart relation, written in half-angle form so that short
/// distances keep their relative accuracy:
/// `2 sinh^2(d/2) sinh A = sinh((1-s)A) (cosh C - cosh sA) + sinh(sA) (cosh B - cosh (1-s)A)`
/// with every length in units of `1/sqrt(-k)`.
pub fn comparison_distance(k: f64, a: f64, b: f64, c: f64, s: f64) -> Result<f64> {
    let kappa = scale(k)?;
    check_sides(a, b, c)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::domain(format!("side fraction must lie in [0, 1], got {s}")));
    }
    let (ka, kb, kc) = (kappa * a, kappa * b, kappa * c);
    if ka == 0.0 || s == 0.0 {
        return Ok(c);
    }
    if s == 1.0 {
        return Ok(b);
    }
    let (sa, ra) = (s * ka, (1.0 - s) * ka);
    let half = if ka.max(kb).max(kc) < 300.0 {
        let t1 = ra.sinh() * 2.0 * (0.5 * (kc + sa)).sinh() * (0.5 * (kc - sa)).sinh();
        let t2 = sa.sinh() * 2.0 * (0.5 * (kb + ra)).sinh() * (0.5 * (kb - ra)).sinh();
        ((t1 + t2) / (2.0 * ka.sinh())).max(0.0).sqrt().asinh()
    } else {
        // Same relation in logarithms, for sides beyond the f64 range of sinh.
        let term = |p: f64, u: f64, v: f64| {
            let (_, l1) = log_sinh(p);
            let (s2, l2) = log_sinh(0.5 * (u + v));
            let (s3, l3) = log_sinh(0.5 * (u - v));
            (s2 * s3, l1 + l2 + l3 + std::f64::consts::LN_2)
        };
        let (sg1, l1) = term(ra, kc, sa);
        let (sg2, l2) = term(sa, kb, ra);
        let hi = l1.max(l2);
        let sum = sg1 * (l1 - hi).exp() + sg2 * (l2 - hi).exp();
        if sum <= 0.0 {
            0.0
        } else {
            let (_, la) = log_sinh(ka);
            // ln sinh^2(d/2)
            let l = hi + sum.ln() - la - std::f64::consts::LN_2;
            let h = 0.5 * l;
            if h > 20.0 {
                h + std::f64::consts::LN_2
            } else {
                h.exp().asinh()
            }
        }
    };
    Ok(2.0 * half / kappa)
}

/// Point at arclength fraction `s` on the model geodesic from `a` to `b`.
pub fn model_geodesic_point(a: ModelPoint, b: ModelPoint, s: f64) -> ModelPoint {
    // The half-plane is the exponential chart with t = 1: x = ln eta, y = xi.
    let p = crate::geometry::exponential_geodesic_point(1.0, &[a[1].ln(), a[0]], &[b[1].ln(), b[0]], s);
    [p[1], p[0].exp()]
}
