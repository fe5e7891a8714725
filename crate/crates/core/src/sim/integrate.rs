//! Time grid construction and the fixed-step RK4 integrator.

use crate::error::{Error, Result};
use crate::sim::signals::{CommandSignal, SwitchingSignal};

/// Builds a monotone grid on `[0, t_final]` with steps no larger than `dt`.
///
/// `0`, `t_final`, every switching time and every command step time appear
/// as exact grid points; between two consecutive required points the steps
/// are uniform.
pub fn make_time_grid(t_final: f64, dt: f64, switching: &SwitchingSignal, command: &CommandSignal) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!("t_final must be positive, got {t_final}")));
    }
    let mut required = vec![0.0, t_final];
    for &t in switching.switch_times() {
        if t > t_final {
            return Err(Error::InvalidArgument(format!("switching time {t} s lies beyond t_final = {t_final} s")));
        }
        required.push(t);
    }
    for &t in command.step_times() {
        if t > t_final {
            return Err(Error::InvalidArgument(format!("command step at {t} s lies beyond t_final = {t_final} s")));
        }
        if t < 0.0 {
            return Err(Error::InvalidArgument(format!("command step at negative time {t}")));
        }
        required.push(t);
    }
    required.sort_by(f64::total_cmp);
    required.dedup();

    let mut grid = vec![0.0];
    for w in required.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ratio = (b - a) / dt;
        let nearest = ratio.round();
        let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { ratio.ceil() };
        let steps = steps.max(1.0) as usize;
        let h = (b - a) / steps as f64;
        grid.extend((1..steps).map(|j| a + j as f64 * h));
        grid.push(b);
    }
    Ok(grid)
}

/// Reusable RK4 stepper over flat state slices.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self { k1: vec![0.0; dim], k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim], stage: vec![0.0; dim] }
    }

    /// Advances `state` from `t` to `t + h` in place. `derivative` writes
    /// `f(t, x)` into its output slice and may itself fail.
    pub fn step<F>(&mut self, mut derivative: F, t: f64, state: &mut [f64], h: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let half = 0.5 * h;
        eval(&mut derivative, t, state, &mut self.k1)?;
        axpy(&mut self.stage, state, half, &self.k1);
        eval(&mut derivative, t + half, &self.stage, &mut self.k2)?;
        axpy(&mut self.stage, state, half, &self.k2);
        eval(&mut derivative, t + half, &self.stage, &mut self.k3)?;
        axpy(&mut self.stage, state, h, &self.k3);
        eval(&mut derivative, t + h, &self.stage, &mut self.k4)?;
        let sixth = h / 6.0;
        for i in 0..state.len() {
            state[i] += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

fn eval<F>(f: &mut F, t: f64, x: &[f64], out: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    f(t, x, out)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: t, mode: None, what: "derivative".into() });
    }
    Ok(())
}

fn axpy(out: &mut [f64], x: &[f64], a: f64, k: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

/// One classical RK4 step of `ẋ = f(t, x)`.
pub fn rk4_step<F>(derivative: F, t: f64, state: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut x = state.to_vec();
    Rk4::new(x.len()).step(
        |t, x, out| {
            out.copy_from_slice(&derivative(t, x));
            Ok(())
        },
        t,
        &mut x,
        h,
    )?;
    Ok(x)
}
