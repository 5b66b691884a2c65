//! Classic fixed-step fourth-order Runge–Kutta.

use core::ops::{Add, Mul};

/// Advances `y` from `t` to `t + dt`. The right-hand side is sampled at
/// `t`, `t + dt/2` (twice) and `t + dt`.
pub fn rk4_step<T, const M: usize, E, F>(t: f64, y: &[T; M], dt: f64, mut f: F) -> Result<[T; M], E>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    F: FnMut(f64, &[T; M]) -> Result<[T; M], E>,
{
    let shift = |k: &[T; M], h: f64| -> [T; M] { core::array::from_fn(|i| y[i] + k[i] * h) };
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &shift(&k1, half))?;
    let k3 = f(t + half, &shift(&k2, half))?;
    let k4 = f(t + dt, &shift(&k3, dt))?;
    let sixth = dt / 6.0;
    Ok(core::array::from_fn(|i| {
        y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * sixth
    }))
}

/// Uniform step schedule covering `[0, t_final]`; the last step is shortened
/// when `t_final` is not a multiple of `dt`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StepSchedule {
    pub dt: f64,
    pub t_final: f64,
    pub n_steps: usize,
}

impl StepSchedule {
    pub fn new(dt: f64, t_final: f64) -> Self {
        let ratio = t_final / dt;
        let mut n_steps = libm::round(ratio) as usize;
        if (ratio - n_steps as f64).abs() > 1e-9 * ratio.max(1.0) {
            n_steps = libm::ceil(ratio) as usize;
        }
        Self { dt, t_final, n_steps }
    }

    pub fn time(&self, step: usize) -> f64 {
        if step >= self.n_steps {
            self.t_final
        } else {
            step as f64 * self.dt
        }
    }

    pub fn step_len(&self, step: usize) -> f64 {
        self.time(step + 1) - self.time(step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |dt: f64| {
            let sched = StepSchedule::new(dt, 1.0);
            let mut y = [1.0f64];
            for k in 0..sched.n_steps {
                y = rk4_step(sched.time(k), &y, sched.step_len(k), |_, y| {
                    Ok::<_, Infallible>([-y[0]])
                })
                .unwrap();
            }
            (y[0] - libm::exp(-1.0)).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn time_dependent_rhs_sampled_at_substeps() {
        // dy/dt = t² integrates exactly for a cubic.
        let y = rk4_step(1.0, &[0.0f64], 0.5, |t, _| Ok::<_, Infallible>([t * t])).unwrap();
        assert!((y[0] - (1.5f64.powi(3) - 1.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_lands_on_final_time() {
        let s = StepSchedule::new(0.3, 1.0);
        assert_eq!(s.n_steps, 4);
        assert_eq!(s.time(4), 1.0);
        assert!((s.step_len(3) - 0.1).abs() < 1e-12);
        let s = StepSchedule::new(1e-3, 1.0);
        assert_eq!(s.n_steps, 1000);
        let s = StepSchedule::new(0.1, 0.0);
        assert_eq!(s.n_steps, 0);
    }
}
