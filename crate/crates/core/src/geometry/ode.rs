//! Adaptive Dormand–Prince 5(4) integrator.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Stateful stepper; keeps its last accepted step size between calls so a
/// trajectory can be advanced through a sequence of output times.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    h: Option<f64>,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            max_steps: 100_000,
            h: None,
            k: Vec::new(),
            tmp: Vec::new(),
            y_new: Vec::new(),
        }
    }

    /// Advances `y` from `t` to `t_end` in place.
    pub fn advance<F>(&mut self, f: &mut F, t: f64, y: &mut [f64], t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        if self.k.len() != 7 || self.k[0].len() != n {
            self.k = vec![vec![0.0; n]; 7];
            self.tmp = vec![0.0; n];
            self.y_new = vec![0.0; n];
        }
        let span = t_end - t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut t = t;
        let mut h = self.h.unwrap_or(span.abs() * 1e-2).min(span.abs());
        let mut steps = 0;
        f(t, y, &mut self.k[0]);
        while (t_end - t) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(Error::numerical(
                    format!("ODE step budget exhausted at t = {t}"),
                    t,
                    (t_end - t).abs(),
                ));
            }
            steps += 1;
            let last = h >= (t_end - t).abs();
            let step = if last { t_end - t } else { h * dir };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s].iter().take(s).enumerate() {
                        acc += step * a * self.k[j][i];
                    }
                    self.tmp[i] = acc;
                }
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                f(t + C[s] * step, &self.tmp, &mut tail[0]);
            }
            // Stage 7 is evaluated at the fifth-order solution (FSAL).
            self.y_new.copy_from_slice(&self.tmp);
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, w) in E.iter().enumerate() {
                    e += w * self.k[s][i];
                }
                e *= step;
                let sc = self.atol + self.rtol * y[i].abs().max(self.y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() || self.y_new.iter().any(|v| !v.is_finite()) {
                h *= 0.25;
                if h < 1e-14 * span.abs() {
                    return Err(Error::numerical(
                        format!("ODE solution left the representable range near t = {t}"),
                        t,
                        f64::INFINITY,
                    ));
                }
                continue;
            }
            if err <= 1.0 {
                t = if last { t_end } else { t + step };
                y.copy_from_slice(&self.y_new);
                let (first, rest) = self.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = step.abs() * grow;
                }
            } else {
                h = step.abs() * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if h < 1e-14 * span.abs() {
                    return Err(Error::numerical(
                        format!("ODE step size underflow near t = {t}"),
                        t,
                        err,
                    ));
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

/// One-shot integration from `t0` to `t1`.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, rtol: f64, atol: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut y = y0.to_vec();
    Dopri5::new(rtol, atol).advance(&mut f, t0, &mut y, t1)?;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_period() {
        let y = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            2.0 * std::f64::consts::PI,
            1e-12,
            1e-12,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn exponential_growth_through_outputs() {
        let mut stepper = Dopri5::new(1e-12, 1e-14);
        let mut y = [1.0];
        let mut f = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let mut t = 0.0;
        for t_next in [0.5, 1.0, 2.0] {
            stepper.advance(&mut f, t, &mut y, t_next).unwrap();
            t = t_next;
            assert!((y[0] - t.exp()).abs() < 1e-10 * t.exp());
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, 1e-10, 1e-10);
        assert!(matches!(r, Err(Error::Numerical { .. })));
    }
}
