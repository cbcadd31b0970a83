//! Dormand–Prince 5(4) for the autonomous linear system ẏ = M y.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::C64;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct Dopri5<'a> {
    m: &'a DMatrix<C64>,
    rtol: f64,
    atol: f64,
    h: f64,
    max_steps: usize,
    pub steps: usize,
    pub rejected: usize,
}

impl<'a> Dopri5<'a> {
    pub fn new(m: &'a DMatrix<C64>, rtol: f64, atol: f64, max_steps: usize) -> Self {
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max) * m.nrows() as f64;
        let h = if scale > 0.0 { 0.1 / scale } else { 1.0 };
        Self { m, rtol, atol, h, max_steps, steps: 0, rejected: 0 }
    }

    /// Advances `y` from `t` to `t_end`, landing exactly on `t_end`.
    pub fn advance(&mut self, y: &mut DVector<C64>, mut t: f64, t_end: f64) -> Result<()> {
        if self.m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Ok(());
        }
        let mut k: Vec<DVector<C64>> = vec![DVector::zeros(y.len()); 7];
        while t < t_end {
            if self.steps >= self.max_steps {
                return Err(Error::Numerical(format!("step budget of {} exhausted at t={t}", self.max_steps)));
            }
            let last = self.h >= t_end - t;
            let h = if last { t_end - t } else { self.h };
            if h < 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow { t, h });
            }
            for s in 0..7 {
                let mut stage = y.clone();
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        stage.axpy(C64::new(h * A[s][j], 0.0), kj, C64::new(1.0, 0.0));
                    }
                }
                k[s] = self.m * stage;
            }
            let mut y_new = y.clone();
            let mut err = DVector::<C64>::zeros(y.len());
            for s in 0..7 {
                if s < 6 && A[6][s] != 0.0 {
                    y_new.axpy(C64::new(h * A[6][s], 0.0), &k[s], C64::new(1.0, 0.0));
                }
                if E[s] != 0.0 {
                    err.axpy(C64::new(h * E[s], 0.0), &k[s], C64::new(1.0, 0.0));
                }
            }
            let ratio = err
                .iter()
                .zip(y.iter().zip(y_new.iter()))
                .map(|(e, (a, b))| e.norm() / (self.atol + self.rtol * a.norm().max(b.norm())))
                .fold(0.0, f64::max);
            self.steps += 1;
            if ratio <= 1.0 {
                t = if last { t_end } else { t + h };
                *y = y_new;
                let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                // Keep the natural step size when the last step was clipped.
                if !last || h * grow > self.h {
                    self.h = h * grow;
                }
            } else {
                self.rejected += 1;
                self.h = h * (0.9 * ratio.powf(-0.2)).clamp(0.2, 1.0);
                if self.h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, h: self.h });
                }
            }
        }
        Ok(())
    }
}
