use crate::controller::filter::FilterSpec;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::reference::augmented::{build_augmented, AugmentedSystem};
use crate::sim::integrate::Rk4;
use crate::sim::signals::{CommandSignal, SwitchingSignal};
use crate::sim::system::LtiSubsystem;
use crate::sim::trace::Trace;
use crate::sim::uncertainty::UncertaintyRealization;

/// Default state-norm ceiling beyond which the reference run is aborted.
pub const DIVERGENCE_CEILING: f64 = 1e8;

/// Inputs of the perfect-knowledge reference closed loop.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceProblem<'a> {
    pub family: &'a [LtiSubsystem],
    pub filter: &'a FilterSpec,
    pub realization: &'a UncertaintyRealization,
    pub switching: &'a SwitchingSignal,
    /// One per mode.
    pub kp: &'a [Matrix],
    pub command: &'a CommandSignal,
    pub x0: &'a Vector,
    pub divergence_ceiling: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTrace {
    pub x: Trace,
    pub u: Trace,
    /// `[x_f; x_I]` per sample.
    pub filter_state: Trace,
}

impl ReferenceProblem<'_> {
    fn check(&self) -> Result<(usize, usize, usize)> {
        let n = self.x0.len();
        let m = self.filter.m();
        self.switching.validate_modes(self.family.len())?;
        if self.kp.len() != self.family.len() {
            return Err(Error::InvalidArgument("need one k_p per mode".into()));
        }
        if self.family.iter().any(|s| s.n() != n || s.m() != m) || self.command.dim() != m {
            return Err(Error::Dimension("family, filter, command and x0 sizes disagree".into()));
        }
        Ok((n, self.filter.nf(), m))
    }
}

/// Integrates `ẋ̄ = Ā_p(θ_p(t), ω_p) x̄ + B̄_p σ_p(t) + Ē_p r` on `grid`.
/// Filter and integrator states carry over continuously across switches.
pub fn simulate_reference(problem: &ReferenceProblem, grid: &[f64]) -> Result<ReferenceTrace> {
    let (n, nf, m) = problem.check()?;
    let build = |p: usize, t: f64| -> Result<AugmentedSystem> {
        let unc = problem.realization.for_mode(p);
        build_augmented(&problem.family[p], problem.filter, &unc.theta_at(t), &unc.omega, &problem.kp[p])
    };
    // Ā only changes with time when θ is time varying
    let cached: Vec<Option<AugmentedSystem>> = (0..problem.family.len())
        .map(|p| problem.realization.for_mode(p).theta.is_constant().then(|| build(p, 0.0)).transpose())
        .collect::<Result<_>>()?;

    let dim = n + nf + m;
    let mut state = vec![0.0; dim];
    state[..n].copy_from_slice(problem.x0.as_slice());
    let mut out = ReferenceTrace {
        x: Trace::with_capacity(n, grid.len()),
        u: Trace::with_capacity(m, grid.len()),
        filter_state: Trace::with_capacity(nf + m, grid.len()),
    };
    let record = |out: &mut ReferenceTrace, s: &[f64]| {
        out.x.push(&s[..n]);
        out.filter_state.push(&s[n..]);
        let u: Vec<f64> = s[n + nf..].iter().map(|v| -v).collect();
        out.u.push(&u);
    };
    record(&mut out, &state);
    let mut rk = Rk4::new(dim);
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let p = problem.switching.mode_at(t);
        let r = problem.command.value_at(t);
        let unc = problem.realization.for_mode(p);
        rk.step(
            |ts, s, ds| {
                let owned;
                let aug = match &cached[p] {
                    Some(a) => a,
                    None => {
                        owned = build(p, ts)?;
                        &owned
                    }
                };
                let xs = Vector::from_column_slice(s);
                let d = &aug.a_bar * xs + &aug.b_bar * unc.sigma_at(ts) + &aug.e_bar * &r;
                ds.copy_from_slice(d.as_slice());
                Ok(())
            },
            t,
            &mut state,
            h,
        )
        .map_err(|e| tag_mode(e, p))?;
        check_divergence(&state, w[1], problem.divergence_ceiling)?;
        record(&mut out, &state);
    }
    Ok(out)
}

/// Same reference loop integrated directly from its cascade description:
/// plant `ẋ = A x + B(ω u + θᵀx + σ)`, `μ = ω u + θᵀx + σ − k_p r`, filter
/// `ẋ_f = A_f x_f + B_f μ`, `ẋ_I = C_f x_f + D_f μ`, `u = −x_I`.
/// Kept independent of [`simulate_reference`] so the two can be compared.
pub fn simulate_reference_filter_form(problem: &ReferenceProblem, grid: &[f64]) -> Result<ReferenceTrace> {
    let (n, nf, m) = problem.check()?;
    let dim = n + nf + m;
    let mut state = vec![0.0; dim];
    state[..n].copy_from_slice(problem.x0.as_slice());
    let mut out = ReferenceTrace {
        x: Trace::with_capacity(n, grid.len()),
        u: Trace::with_capacity(m, grid.len()),
        filter_state: Trace::with_capacity(nf + m, grid.len()),
    };
    let record = |out: &mut ReferenceTrace, s: &[f64]| {
        out.x.push(&s[..n]);
        out.filter_state.push(&s[n..]);
        let u: Vec<f64> = s[n + nf..].iter().map(|v| -v).collect();
        out.u.push(&u);
    };
    record(&mut out, &state);
    let mut rk = Rk4::new(dim);
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let p = problem.switching.mode_at(t);
        let sys = &problem.family[p];
        let unc = problem.realization.for_mode(p);
        let kr = &problem.kp[p] * problem.command.value_at(t);
        rk.step(
            |ts, s, ds| {
                let x = Vector::from_column_slice(&s[..n]);
                let xf = Vector::from_column_slice(&s[n..n + nf]);
                let u = -Vector::from_column_slice(&s[n + nf..]);
                let eta = &unc.omega * &u + unc.theta_at(ts).tr_mul(&x) + unc.sigma_at(ts);
                let dx = sys.a() * &x + sys.b() * &eta;
                let (dxf, dxi) = problem.filter.derivative(&xf, &(eta - &kr));
                ds[..n].copy_from_slice(dx.as_slice());
                ds[n..n + nf].copy_from_slice(dxf.as_slice());
                ds[n + nf..].copy_from_slice(dxi.as_slice());
                Ok(())
            },
            t,
            &mut state,
            h,
        )
        .map_err(|e| tag_mode(e, p))?;
        check_divergence(&state, w[1], problem.divergence_ceiling)?;
        record(&mut out, &state);
    }
    Ok(out)
}

fn tag_mode(e: Error, p: usize) -> Error {
    match e {
        Error::NonFinite { time, what, .. } => Error::NonFinite { time, mode: Some(p), what: format!("reference {what}") },
        other => other,
    }
}

fn check_divergence(state: &[f64], t: f64, ceiling: f64) -> Result<()> {
    let norm = state.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > ceiling {
        return Err(Error::Divergence { time: t, norm });
    }
    Ok(())
}
