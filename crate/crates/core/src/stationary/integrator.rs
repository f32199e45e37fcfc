//! Adaptive Dormand–Prince 5(4) stepper for small autonomous systems.

// Dormand–Prince tableau; the system is autonomous so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between 5th- and embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// Why an integration interval stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum Halt {
    /// The per-step guard rejected the state.
    Guard {
        x: f64,
        reason: String,
    },
    StepUnderflow {
        x: f64,
    },
    TooManySteps {
        x: f64,
    },
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Stateful integrator that carries its step-size guess across calls so
/// node-to-node integration does not restart the controller each time.
pub struct DormandPrince<F> {
    rhs: F,
    tol: Tolerances,
    h: f64,
    max_steps: usize,
    pub steps_taken: usize,
}

impl<F> DormandPrince<F>
where
    F: Fn(&State) -> State,
{
    pub fn new(rhs: F, tol: Tolerances, h0: f64, max_steps: usize) -> Self {
        Self {
            rhs,
            tol,
            h: h0,
            max_steps,
            steps_taken: 0,
        }
    }

    /// Advance `y` from `x0` to exactly `x1`. `guard` sees every accepted
    /// state and may halt the integration.
    pub fn advance<G>(&mut self, x0: f64, x1: f64, y: &mut State, mut guard: G) -> Result<(), Halt>
    where
        G: FnMut(f64, &State) -> Result<(), String>,
    {
        let mut x = x0;
        let mut k1 = (self.rhs)(y);
        while x < x1 {
            if self.steps_taken >= self.max_steps {
                return Err(Halt::TooManySteps { x });
            }
            let mut h = self.h.min(x1 - x);
            let last = h >= x1 - x;
            if h <= 1e-14 * x.abs().max(1.0) && !last {
                return Err(Halt::StepUnderflow { x });
            }
            let k2 = (self.rhs)(&axpy(y, h, &[(A21, &k1)]));
            let k3 = (self.rhs)(&axpy(y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = (self.rhs)(&axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = (self.rhs)(&axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = (self.rhs)(&axpy(
                y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y_new = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = (self.rhs)(&y_new);
            let mut err: f64 = 0.0;
            for i in 0..2 {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                // non-finite stage values: shrink hard and retry
                self.h = 0.1 * h;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.steps_taken += 1;
                x = if last { x1 } else { x + h };
                *y = y_new;
                k1 = k7;
                guard(x, y).map_err(|reason| Halt::Guard { x, reason })?;
                // keep the controller's guess when the step was truncated to hit x1
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                h *= factor.min(1.0);
                self.h = h;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_matches_exponential() {
        let tol = Tolerances {
            rtol: 1e-10,
            atol: 1e-14,
        };
        let mut dp = DormandPrince::new(|y: &State| [-y[0], -3.0 * y[1]], tol, 1e-3, 100_000);
        let mut y = [1.0, 2.0];
        dp.advance(0.0, 2.0, &mut y, |_, _| Ok(())).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
        assert!((y[1] - 2.0 * (-6.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rotation_preserves_norm() {
        let tol = Tolerances {
            rtol: 1e-11,
            atol: 1e-13,
        };
        let mut dp = DormandPrince::new(|y: &State| [y[1], -y[0]], tol, 1e-2, 100_000);
        let mut y = [1.0, 0.0];
        let mut x = 0.0;
        for k in 1..=10 {
            let x1 = k as f64 * 0.7;
            dp.advance(x, x1, &mut y, |_, _| Ok(())).unwrap();
            x = x1;
        }
        assert!((y[0] - 7.0f64.cos()).abs() < 1e-9);
        assert!((y[1] + 7.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn guard_halts() {
        let tol = Tolerances {
            rtol: 1e-8,
            atol: 1e-10,
        };
        let mut dp = DormandPrince::new(|y: &State| [y[0], 0.0], tol, 1e-3, 100_000);
        let mut y = [1.0, 0.0];
        let r = dp.advance(0.0, 10.0, &mut y, |_, s| {
            if s[0] > 5.0 {
                Err("too big".into())
            } else {
                Ok(())
            }
        });
        match r {
            Err(Halt::Guard { x, .. }) => assert!(x > 5f64.ln() - 0.5 && x < 5f64.ln() + 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
