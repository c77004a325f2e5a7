//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default cap on the number of interval bisections.
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// The 15 Kronrod nodes and weights mapped onto `[a, b]`.
pub fn kronrod_rule(a: f64, b: f64) -> [(f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 15];
    for i in 0..7 {
        out[2 * i] = (c - h * XGK[i], h * WGK[i]);
        out[2 * i + 1] = (c + h * XGK[i], h * WGK[i]);
    }
    out[14] = (c, h * WGK[7]);
    out
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let fl = f(c - h * x);
        let fr = f(c + h * x);
        kronrod += w * (fl + fr);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (fl + fr);
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).abs();
    if !value.is_finite() {
        return Err(Error::numerical(
            format!("integrand is not finite on [{a}, {b}]"),
            value,
            f64::INFINITY,
        ));
    }
    Ok((value, error))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Fails with [`Error::Numerical`] carrying the partial estimate when the
/// subdivision budget runs out.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Quadrature> {
    if !(abs_tol > 0.0) {
        return Err(Error::domain(format!("quadrature tolerance must be > 0, got {abs_tol}")));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("quadrature bounds must be finite"));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = gk15(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut splits = 0;
    while total_err > abs_tol {
        if splits >= max_subdivisions {
            return Err(Error::numerical(
                format!("quadrature on [{a}, {b}] did not converge in {max_subdivisions} subdivisions"),
                total,
                total_err,
            ));
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::numerical(
                "quadrature interval collapsed below machine resolution",
                total,
                total_err,
            ));
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.b)?;
        evaluations += 30;
        splits += 1;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum instead of updating incrementally so rounding does not drift.
        total = heap.iter().map(|s| s.value).sum();
        total_err = heap.iter().map(|s| s.error).sum();
    }
    Ok(Quadrature {
        value: total,
        error: total_err,
        evaluations,
    })
}

/// Integrates over `(0, inf)` through `x = scale * u / (1 - u)`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(
    mut f: F,
    scale: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Quadrature> {
    if !(scale > 0.0) {
        return Err(Error::domain(format!("half-line scale must be > 0, got {scale}")));
    }
    integrate(
        |u| {
            let one_minus = 1.0 - u;
            let x = scale * u / one_minus;
            let jac = scale / (one_minus * one_minus);
            let fx = f(x);
            // The integrand must decay at infinity; exp underflow gives 0 * inf.
            if fx == 0.0 || !jac.is_finite() {
                0.0
            } else {
                fx * jac
            }
        },
        0.0,
        1.0,
        abs_tol,
        max_subdivisions,
    )
}
