use crate::controller::adaptive::{
    adaptation_derivatives, control_input_mu, matched_input, ControllerConfig, ControllerState,
};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::reference::simulate::{simulate_reference, ReferenceProblem, DIVERGENCE_CEILING};
use crate::sim::integrate::{make_time_grid, Rk4};
use crate::sim::signals::{CommandSignal, SwitchingSignal};
use crate::sim::system::LtiSubsystem;
use crate::sim::trace::Trace;
use crate::sim::uncertainty::{UncertaintyBounds, UncertaintyRealization};

/// Everything needed for one closed-loop run.
#[derive(Clone, Copy, Debug)]
pub struct SimulationSetup<'a> {
    pub family: &'a [LtiSubsystem],
    pub bounds: &'a UncertaintyBounds,
    pub realization: &'a UncertaintyRealization,
    pub switching: &'a SwitchingSignal,
    pub controller: &'a ControllerConfig,
    pub command: &'a CommandSignal,
    pub x0: &'a Vector,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationOptions {
    /// Keep every k-th sample; switching and command times are always kept.
    pub record_every: usize,
    pub divergence_ceiling: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { record_every: 1, divergence_ceiling: DIVERGENCE_CEILING }
    }
}

/// Maxima over every integration step, independent of decimation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunPeaks {
    pub x_tilde: f64,
    pub tracking_state: f64,
    pub tracking_input: f64,
    /// Largest `‖column‖ / θ_max` over θ̂, σ̂ and ω̂.
    pub projection_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub time_grid: Vec<f64>,
    pub mode: Vec<usize>,
    pub x: Trace,
    pub x_hat: Trace,
    pub x_ref: Trace,
    pub x_tilde: Trace,
    pub u: Trace,
    pub u_ref: Trace,
    /// θ̂ column-major.
    pub theta_hat: Trace,
    pub sigma_hat: Trace,
    /// ω̂ column-major.
    pub omega_hat: Trace,
    pub peaks: RunPeaks,
    /// Integration step count (full grid length minus one).
    pub steps: usize,
}

struct Layout {
    n: usize,
    m: usize,
    nf: usize,
}

impl Layout {
    fn x(&self) -> std::ops::Range<usize> {
        0..self.n
    }
    fn x_hat(&self) -> std::ops::Range<usize> {
        self.n..2 * self.n
    }
    fn theta(&self) -> std::ops::Range<usize> {
        let s = 2 * self.n;
        s..s + self.n * self.m
    }
    fn sigma(&self) -> std::ops::Range<usize> {
        let s = 2 * self.n + self.n * self.m;
        s..s + self.m
    }
    fn omega(&self) -> std::ops::Range<usize> {
        let s = self.sigma().end;
        s..s + self.m * self.m
    }
    fn x_f(&self) -> std::ops::Range<usize> {
        let s = self.omega().end;
        s..s + self.nf
    }
    fn x_i(&self) -> std::ops::Range<usize> {
        let s = self.x_f().end;
        s..s + self.m
    }
    fn dim(&self) -> usize {
        self.x_i().end
    }

    fn unpack(&self, s: &[f64]) -> (Vector, ControllerState) {
        let v = |r: std::ops::Range<usize>| Vector::from_column_slice(&s[r]);
        let x = v(self.x());
        let st = ControllerState {
            x_hat: v(self.x_hat()),
            theta_hat: Matrix::from_column_slice(self.n, self.m, &s[self.theta()]),
            sigma_hat: v(self.sigma()),
            omega_hat: Matrix::from_column_slice(self.m, self.m, &s[self.omega()]),
            x_f: v(self.x_f()),
            x_i: v(self.x_i()),
        };
        (x, st)
    }

    fn pack(&self, x: &Vector, st: &ControllerState, s: &mut [f64]) {
        s[self.x()].copy_from_slice(x.as_slice());
        s[self.x_hat()].copy_from_slice(st.x_hat.as_slice());
        s[self.theta()].copy_from_slice(st.theta_hat.as_slice());
        s[self.sigma()].copy_from_slice(st.sigma_hat.as_slice());
        s[self.omega()].copy_from_slice(st.omega_hat.as_slice());
        s[self.x_f()].copy_from_slice(st.x_f.as_slice());
        s[self.x_i()].copy_from_slice(st.x_i.as_slice());
    }
}

impl SimulationSetup<'_> {
    fn validate(&self) -> Result<Layout> {
        let cfg = self.controller;
        let n = self.x0.len();
        let m = cfg.filter().m();
        if self.family.is_empty() {
            return Err(Error::InvalidArgument("empty subsystem family".into()));
        }
        if self.family.iter().any(|s| s.n() != n || s.m() != m) {
            return Err(Error::Dimension("every mode must share the state and input sizes of x0 and the filter".into()));
        }
        if cfg.modes() != self.family.len() {
            return Err(Error::InvalidArgument(format!(
                "controller has {} modes, family has {}",
                cfg.modes(),
                self.family.len()
            )));
        }
        if self.bounds.n() != n || self.bounds.m() != m || self.command.dim() != m {
            return Err(Error::Dimension("bounds and command sizes disagree with the plant".into()));
        }
        self.switching.validate_modes(self.family.len())?;
        self.realization.validate(self.bounds, self.family.len())?;
        Ok(Layout { n, m, nf: cfg.filter().nf() })
    }
}

pub fn simulate_closed_loop(setup: &SimulationSetup) -> Result<SimulationResult> {
    simulate_closed_loop_with(setup, &SimulationOptions::default())
}

/// Integrates plant, predictor, adaptive laws and control filter with RK4
/// on the aligned grid, resetting `x̂` to `x` at every switching time, and
/// runs the reference loop on the same grid.
pub fn simulate_closed_loop_with(setup: &SimulationSetup, opts: &SimulationOptions) -> Result<SimulationResult> {
    let lay = setup.validate()?;
    let cfg = setup.controller;
    let grid = make_time_grid(setup.t_final, setup.dt, setup.switching, setup.command)?;
    let reference = simulate_reference(
        &ReferenceProblem {
            family: setup.family,
            filter: cfg.filter(),
            realization: setup.realization,
            switching: setup.switching,
            kp: cfg.kp_all(),
            command: setup.command,
            x0: setup.x0,
            divergence_ceiling: opts.divergence_ceiling,
        },
        &grid,
    )?;

    let mut keep: Vec<f64> = setup.switching.switch_times().iter().chain(setup.command.step_times()).copied().collect();
    keep.sort_by(f64::total_cmp);
    let every = opts.record_every.max(1);
    let last = grid.len() - 1;
    let is_kept = |k: usize| k % every == 0 || k == last || keep.binary_search_by(|v| v.total_cmp(&grid[k])).is_ok();

    let (n, m) = (lay.n, lay.m);
    let mut res = SimulationResult {
        time_grid: Vec::new(),
        mode: Vec::new(),
        x: Trace::new(n),
        x_hat: Trace::new(n),
        x_ref: Trace::new(n),
        x_tilde: Trace::new(n),
        u: Trace::new(m),
        u_ref: Trace::new(m),
        theta_hat: Trace::new(n * m),
        sigma_hat: Trace::new(m),
        omega_hat: Trace::new(m * m),
        peaks: RunPeaks::default(),
        steps: last,
    };

    let mut state = vec![0.0; lay.dim()];
    lay.pack(setup.x0, &ControllerState::initial(setup.x0, m, lay.nf), &mut state);
    observe(&lay, cfg, &state, 0, &grid, &reference, setup.switching, &mut res, is_kept(0))?;

    let switch_times = setup.switching.switch_times();
    let mut next_switch = 1;
    let mut rk = Rk4::new(lay.dim());
    for k in 0..last {
        let (t, h) = (grid[k], grid[k + 1] - grid[k]);
        let p = setup.switching.mode_at(t);
        let sys = &setup.family[p];
        let unc = setup.realization.for_mode(p);
        let r = setup.command.value_at(t);
        let kp = cfg.kp(p);
        rk.step(
            |ts, s, ds| {
                let (x, st) = lay.unpack(s);
                let u = st.control();
                // plant and predictor share one right-hand-side expression
                let dx = sys.a() * &x + sys.b() * matched_input(&unc.omega, &u, &unc.theta_at(ts), &x, &unc.sigma_at(ts));
                let dxh = sys.a() * &st.x_hat + sys.b() * matched_input(&st.omega_hat, &u, &st.theta_hat, &x, &st.sigma_hat);
                let x_tilde = &st.x_hat - &x;
                let (dth, dsg, dom) = adaptation_derivatives(&x_tilde, &x, &u, &st, p, sys, cfg);
                let mu = control_input_mu(&st, &x, &u, &r, kp);
                let (dxf, dxi) = cfg.filter().derivative(&st.x_f, &mu);
                ds[lay.x()].copy_from_slice(dx.as_slice());
                ds[lay.x_hat()].copy_from_slice(dxh.as_slice());
                ds[lay.theta()].copy_from_slice(dth.as_slice());
                ds[lay.sigma()].copy_from_slice(dsg.as_slice());
                ds[lay.omega()].copy_from_slice(dom.as_slice());
                ds[lay.x_f()].copy_from_slice(dxf.as_slice());
                ds[lay.x_i()].copy_from_slice(dxi.as_slice());
                Ok(())
            },
            t,
            &mut state,
            h,
        )
        .map_err(|e| match e {
            Error::NonFinite { time, what, .. } => Error::NonFinite { time, mode: Some(p), what },
            other => other,
        })?;
        let t_next = grid[k + 1];
        if next_switch < switch_times.len() && t_next == switch_times[next_switch] {
            let (xr, xh) = (lay.x(), lay.x_hat());
            let x_now = state[xr].to_vec();
            state[xh].copy_from_slice(&x_now);
            next_switch += 1;
        }
        let norm = state.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > opts.divergence_ceiling {
            return Err(Error::Divergence { time: t_next, norm });
        }
        observe(&lay, cfg, &state, k + 1, &grid, &reference, setup.switching, &mut res, is_kept(k + 1))?;
    }
    Ok(res)
}

#[allow(clippy::too_many_arguments)]
fn observe(
    lay: &Layout,
    cfg: &ControllerConfig,
    state: &[f64],
    k: usize,
    grid: &[f64],
    reference: &crate::reference::simulate::ReferenceTrace,
    switching: &SwitchingSignal,
    res: &mut SimulationResult,
    record: bool,
) -> Result<()> {
    let t = grid[k];
    let x = &state[lay.x()];
    let xh = &state[lay.x_hat()];
    let xt: Vec<f64> = xh.iter().zip(x).map(|(a, b)| a - b).collect();
    let u: Vec<f64> = state[lay.x_i()].iter().map(|v| -v).collect();
    let xr = reference.x.row(k);
    let ur = reference.u.row(k);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let pk = &mut res.peaks;
    pk.x_tilde = pk.x_tilde.max(xt.iter().map(|v| v * v).sum::<f64>().sqrt());
    pk.tracking_state = pk.tracking_state.max(dist(xr, x));
    pk.tracking_input = pk.tracking_input.max(dist(ur, &u));

    let proj = cfg.projections();
    let groups = [
        (&state[lay.theta()], lay.n, &proj.theta[..], "θ̂"),
        (&state[lay.sigma()], lay.m, std::slice::from_ref(&proj.sigma), "σ̂"),
        (&state[lay.omega()], lay.m, &proj.omega[..], "ω̂"),
    ];
    for (data, rows, cfgs, name) in groups {
        for (j, c) in cfgs.iter().enumerate() {
            let col = &data[j * rows..(j + 1) * rows];
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            pk.projection_ratio = pk.projection_ratio.max(norm / c.theta_max());
            if norm > c.inflated_radius() {
                return Err(Error::ProjectionEscape {
                    time: t,
                    what: format!("{name} column {j} has norm {norm:.6e} > {:.6e}", c.inflated_radius()),
                });
            }
        }
    }

    if record {
        res.time_grid.push(t);
        res.mode.push(switching.mode_at(t));
        res.x.push(x);
        res.x_hat.push(xh);
        res.x_tilde.push(&xt);
        res.x_ref.push(xr);
        res.u.push(&u);
        res.u_ref.push(ur);
        res.theta_hat.push(&state[lay.theta()]);
        res.sigma_hat.push(&state[lay.sigma()]);
        res.omega_hat.push(&state[lay.omega()]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::adaptive::ProjectionSet;
    use crate::controller::filter::FilterSpec;
    use crate::linalg;
    use crate::sim::uncertainty::ModeUncertainty;
    use std::f64::consts::PI;

    fn m(rows: &[&[f64]]) -> Matrix {
        linalg::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn family() -> Vec<LtiSubsystem> {
        vec![
            LtiSubsystem::without_output("162", m(&[&[-0.5301, 0.9273], &[-0.9106, -0.6871]]), m(&[&[-0.0009], &[-0.0168]]))
                .unwrap(),
            LtiSubsystem::without_output("137", m(&[&[-0.5147, 0.9357], &[-0.6219, -0.5309]]), m(&[&[-0.0006], &[-0.0115]]))
                .unwrap(),
        ]
    }

    fn controller(bounds: &UncertaintyBounds, gamma: f64) -> ControllerConfig {
        // a plain Lyapunov weight is enough for these checks
        let p = m(&[&[2.0, 0.3], &[0.3, 1.0]]);
        ControllerConfig::new(
            FilterSpec::constant(4.0 * PI, 1).unwrap(),
            gamma,
            vec![Matrix::identity(1, 1); 2],
            vec![p.clone(), p],
            ProjectionSet::for_bounds(bounds).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_uncertainty_keeps_prediction_exact() {
        let fam = family();
        let bounds = UncertaintyBounds::symmetric(2, 1, 50.0, 20.0, (0.5, 1.5)).unwrap();
        let real = UncertaintyRealization::nominal(2, 1);
        let sw = SwitchingSignal::periodic(2.0, vec![0, 1]).unwrap();
        let cmd = CommandSignal::new(1, vec![(1.0, Vector::from_element(1, 1.0)), (3.0, Vector::zeros(1))]).unwrap();
        let cfg = controller(&bounds, 1e4);
        let x0 = Vector::zeros(2);
        let setup = SimulationSetup {
            family: &fam,
            bounds: &bounds,
            realization: &real,
            switching: &sw,
            controller: &cfg,
            command: &cmd,
            x0: &x0,
            t_final: 4.0,
            dt: 1e-3,
        };
        let r = simulate_closed_loop(&setup).unwrap();
        assert_eq!(r.x_tilde.max_norm(), 0.0);
        assert!(r.u.max_distance(&r.u_ref) <= 1e-12);
        assert!(r.u.max_norm() > 0.1);
        assert!(r.time_grid.contains(&2.0));
        assert_eq!(r.mode[r.time_grid.iter().position(|&t| t == 2.0).unwrap()], 1);
    }

    #[test]
    fn predictor_resets_and_estimates_stay_bounded() {
        let fam = family();
        let bounds = UncertaintyBounds::symmetric(2, 1, 50.0, 20.0, (0.5, 1.5)).unwrap();
        let real = UncertaintyRealization::uniform(ModeUncertainty::constant(
            m(&[&[1.2]]),
            m(&[&[-40.0], &[-40.0]]),
            Vector::from_element(1, 1.0),
        ));
        let sw = SwitchingSignal::periodic(1.0, vec![0, 1]).unwrap();
        let cmd = CommandSignal::new(1, vec![(0.5, Vector::from_element(1, 1.0))]).unwrap();
        let cfg = controller(&bounds, 1e3);
        let x0 = Vector::zeros(2);
        let setup = SimulationSetup {
            family: &fam,
            bounds: &bounds,
            realization: &real,
            switching: &sw,
            controller: &cfg,
            command: &cmd,
            x0: &x0,
            t_final: 2.0,
            dt: 1e-3,
        };
        let r = simulate_closed_loop(&setup).unwrap();
        let k = r.time_grid.iter().position(|&t| t == 1.0).unwrap();
        assert_eq!(r.x_tilde.row(k), &[0.0, 0.0]);
        assert!(r.peaks.projection_ratio <= 1.0 + 1e-9);
        assert!(r.peaks.x_tilde > 0.0);
        let again = simulate_closed_loop(&setup).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn decimation_keeps_event_times() {
        let fam = family();
        let bounds = UncertaintyBounds::zero(2, 1);
        let real = UncertaintyRealization::nominal(2, 1);
        let sw = SwitchingSignal::new(vec![0.0, 0.37], vec![0, 1], 0.37).unwrap();
        let cmd = CommandSignal::zero(1);
        let cfg = controller(&bounds, 10.0);
        let x0 = Vector::from_column_slice(&[1.0, 0.0]);
        let setup = SimulationSetup {
            family: &fam,
            bounds: &bounds,
            realization: &real,
            switching: &sw,
            controller: &cfg,
            command: &cmd,
            x0: &x0,
            t_final: 1.0,
            dt: 1e-2,
        };
        let full = simulate_closed_loop(&setup).unwrap();
        let dec = simulate_closed_loop_with(&setup, &SimulationOptions { record_every: 10, ..Default::default() }).unwrap();
        assert!(dec.time_grid.contains(&0.37));
        assert_eq!(*dec.time_grid.last().unwrap(), 1.0);
        assert!(dec.time_grid.len() < full.time_grid.len());
        assert_eq!(dec.peaks, full.peaks);
    }
}
