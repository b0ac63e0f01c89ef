use std::io::{self, Write};

use log::debug;
use serde::{Deserialize, Serialize};

use super::energy::Evaluator;
use super::scaling::{equilibrate, Scaling};
use super::{GeneralFormLp, LpError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    Euler,
    Rk4,
    /// Euler steps taken from a Nesterov extrapolation of the last two
    /// accepted states; momentum restarts whenever a step is rejected.
    Accelerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Rate scale multiplying the flow.
    pub beta: f64,
    /// Initial integration step (time units).
    pub step_size: f64,
    /// Smallest step tried before the trajectory is declared stalled.
    pub min_step: f64,
    /// Step multiplier applied after each accepted step (1 keeps it fixed).
    pub step_growth: f64,
    /// Upper bound for the grown step.
    pub max_step: f64,
    pub max_steps: usize,
    pub kkt_tolerance: f64,
    pub integrator: Integrator,
    /// Ruiz equilibration passes applied before integrating; 0 integrates the
    /// problem as given.
    pub equilibrate: usize,
    /// Record `(step, energy, kkt)` every this many accepted steps; 0 disables.
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 1.0,
            step_size: 1e-3,
            min_step: 1e-14,
            step_growth: 1.05,
            max_step: 10.0,
            max_steps: 2_000_000,
            kkt_tolerance: 1e-6,
            integrator: Integrator::Accelerated,
            equilibrate: 10,
            trace_every: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), LpError> {
        if !(self.beta >= 0.0) {
            return Err(LpError::Config(format!("beta {} < 0", self.beta)));
        }
        if !(self.step_size > 0.0) {
            return Err(LpError::Config(format!("step_size {} must be positive", self.step_size)));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.step_size) {
            return Err(LpError::Config("need 0 < min_step <= step_size".into()));
        }
        if !(self.step_growth >= 1.0 && self.max_step >= self.step_size) {
            return Err(LpError::Config("need step_growth >= 1 and max_step >= step_size".into()));
        }
        if !(self.kkt_tolerance >= 0.0) {
            return Err(LpError::Config("kkt_tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxSteps,
    /// No step above `min_step` decreases the energy.
    Stalled,
    /// The state left the finite range.
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub energy: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub converged: bool,
    pub kkt_residual: f64,
    /// `|dᵀz − rᵀξ|`
    pub duality_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub energy: f64,
    /// Accepted integration steps.
    pub steps: usize,
    pub rejected_steps: usize,
    pub trace: Vec<TracePoint>,
}

impl SolveReport {
    /// Writes the energy trace as `step,energy,kkt_residual` CSV.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,energy,kkt_residual")?;
        for p in &self.trace {
            writeln!(out, "{},{},{}", p.step, p.energy, p.kkt_residual)?;
        }
        Ok(())
    }
}

/// Integrates `du/dt = -β ∇E(u)` from `u0` until the KKT residual drops to
/// the tolerance or the step budget runs out.
///
/// A trial step that raises the energy is discarded and the step halved, so
/// the accepted trajectory is monotone in energy. With `equilibrate > 0` the
/// flow runs on the equilibrated problem (the trace records that energy) while
/// convergence and the final report are judged on the original one.
pub fn integrate_flow<T: Scalar>(
    lp: &GeneralFormLp<T>,
    u0: &[T],
    config: &SolverConfig,
) -> Result<(Vec<T>, SolveReport), LpError> {
    config.validate()?;
    if u0.len() != lp.state_len() {
        return Err(LpError::Dimension(format!(
            "initial state has {} entries, expected {}",
            u0.len(),
            lp.state_len()
        )));
    }
    if config.equilibrate == 0 {
        return Ok(run_flow(lp, u0, config, None));
    }
    let (scaled, scaling) = equilibrate(lp, config.equilibrate);
    let (u, mut report) = run_flow(&scaled, &scaling.to_scaled(u0), config, Some((lp, &scaling)));
    let u = scaling.to_original(&u);
    let (e, kkt) = Evaluator::new(lp).eval(&u, None);
    report.kkt_residual = kkt.max().as_f64();
    report.duality_gap = kkt.gap.as_f64();
    report.primal_infeasibility = kkt.primal_infeasibility().as_f64();
    report.dual_infeasibility = kkt.dual_infeasibility().as_f64();
    report.energy = e.as_f64();
    Ok((u, report))
}

fn run_flow<T: Scalar>(
    lp: &GeneralFormLp<T>,
    u0: &[T],
    config: &SolverConfig,
    original: Option<(&GeneralFormLp<T>, &Scaling<T>)>,
) -> (Vec<T>, SolveReport) {
    let dim = u0.len();
    let beta = T::of(config.beta);
    let tol = T::of(config.kkt_tolerance);
    // Scaled-space threshold at which the original residual is checked.
    let mut check_at = tol;
    let mut orig_ev = original.map(|(o, s)| (Evaluator::new(o), s));
    let mut ev = Evaluator::new(lp);
    let mut u = u0.to_vec();
    let mut grad = vec![T::zero(); dim];
    let (mut e, mut kkt) = ev.eval(&u, Some(&mut grad));

    let mut trial = vec![T::zero(); dim];
    let mut trial_grad = vec![T::zero(); dim];
    let mut stages: Vec<Vec<T>> = match config.integrator {
        Integrator::Euler => Vec::new(),
        Integrator::Rk4 => vec![vec![T::zero(); dim]; 4],
        Integrator::Accelerated => vec![vec![T::zero(); dim]; 2],
    };
    // Accepted steps since the last momentum restart.
    let mut run = 0usize;
    let mut frozen = false;
    if config.integrator == Integrator::Accelerated {
        stages[0].copy_from_slice(&u);
    }
    let mut h = config.step_size;
    let mut steps = 0;
    let mut rejected = 0;
    let mut trace = Vec::new();
    let record = |trace: &mut Vec<TracePoint>, step: usize, e: T, k: T| {
        trace.push(TracePoint { step, energy: e.as_f64(), kkt_residual: k.as_f64() });
    };
    if config.trace_every > 0 {
        record(&mut trace, 0, e, kkt.max());
    }

    let status = loop {
        if !e.is_finite() || u.iter().any(|v| !v.is_finite()) {
            break SolveStatus::Diverged;
        }
        if kkt.max() <= check_at {
            match orig_ev.as_mut() {
                None => break SolveStatus::Converged,
                Some((oe, sc)) => {
                    let k = oe.eval(&sc.to_original(&u), None).1.max();
                    if k <= tol {
                        break SolveStatus::Converged;
                    }
                    check_at = kkt.max() * T::of(0.1);
                }
            }
        }
        if steps >= config.max_steps {
            break SolveStatus::MaxSteps;
        }
        let ht = T::of(h) * beta;
        match config.integrator {
            Integrator::Euler => {
                for i in 0..dim {
                    trial[i] = u[i] - ht * grad[i];
                }
            }
            Integrator::Rk4 => rk4_step(&mut ev, &u, &grad, ht, &mut stages, &mut trial),
            Integrator::Accelerated => {
                if run == 0 {
                    for i in 0..dim {
                        trial[i] = u[i] - ht * grad[i];
                    }
                } else {
                    let theta = T::of((run as f64 - 1.0) / (run as f64 + 2.0));
                    let (prev, rest) = stages.split_at_mut(1);
                    let (prev, yg) = (&prev[0], &mut rest[0]);
                    for i in 0..dim {
                        trial[i] = u[i] + theta * (u[i] - prev[i]);
                    }
                    ev.eval(&trial, Some(yg));
                    for i in 0..dim {
                        trial[i] -= ht * yg[i];
                    }
                }
            }
        }
        let (te, tk) = ev.eval(&trial, Some(&mut trial_grad));
        if te.is_finite() && te <= e {
            if config.integrator == Integrator::Accelerated {
                stages[0].copy_from_slice(&u);
                run += 1;
            }
            std::mem::swap(&mut u, &mut trial);
            std::mem::swap(&mut grad, &mut trial_grad);
            e = te;
            kkt = tk;
            steps += 1;
            if !frozen {
                h = (h * config.step_growth).min(config.max_step);
            }
            if config.trace_every > 0 && steps % config.trace_every == 0 {
                record(&mut trace, steps, e, kkt.max());
            }
        } else {
            rejected += 1;
            run = 0;
            // Momentum needs a steady step: stop growing once one is rejected.
            frozen = config.integrator == Integrator::Accelerated;
            h *= 0.5;
            if h < config.min_step {
                break SolveStatus::Stalled;
            }
        }
    };
    if config.trace_every > 0 && trace.last().map(|p| p.step) != Some(steps) {
        record(&mut trace, steps, e, kkt.max());
    }
    debug!(
        "flow finished: {status:?} after {steps} steps ({rejected} rejected), energy {e}, kkt {}",
        kkt.max()
    );
    let report = SolveReport {
        status,
        converged: status == SolveStatus::Converged,
        kkt_residual: kkt.max().as_f64(),
        duality_gap: kkt.gap.as_f64(),
        primal_infeasibility: kkt.primal_infeasibility().as_f64(),
        dual_infeasibility: kkt.dual_infeasibility().as_f64(),
        energy: e.as_f64(),
        steps,
        rejected_steps: rejected,
        trace,
    };
    (u, report)
}

fn rk4_step<T: Scalar>(
    ev: &mut Evaluator<'_, T>,
    u: &[T],
    grad: &[T],
    ht: T,
    stages: &mut [Vec<T>],
    out: &mut [T],
) {
    let dim = u.len();
    let half = T::of(0.5);
    let two = T::of(2.0);
    let six = T::of(6.0);
    stages[0].copy_from_slice(grad);
    for s in 1..4 {
        let scale = if s == 3 { ht } else { ht * half };
        for i in 0..dim {
            out[i] = u[i] - scale * stages[s - 1][i];
        }
        ev.eval(out, Some(&mut stages[s]));
    }
    for i in 0..dim {
        let k = stages[0][i] + two * stages[1][i] + two * stages[2][i] + stages[3][i];
        out[i] = u[i] - ht * k / six;
    }
}

/// Primal and dual parts of a solved state.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub z: Vec<T>,
    pub xi: Vec<T>,
    pub report: SolveReport,
}

impl<T: Scalar> LpSolution<T> {
    pub fn state(&self) -> Vec<T> {
        self.z.iter().chain(&self.xi).copied().collect()
    }
}

/// Solves from `initial_guess`, or from the zero state.
pub fn solve_lp<T: Scalar>(
    lp: &GeneralFormLp<T>,
    config: &SolverConfig,
    initial_guess: Option<&[T]>,
) -> Result<LpSolution<T>, LpError> {
    let zero;
    let u0 = match initial_guess {
        Some(u) => u,
        None => {
            zero = vec![T::zero(); lp.state_len()];
            &zero
        }
    };
    let (mut u, report) = integrate_flow(lp, u0, config)?;
    let xi = u.split_off(lp.n_vars());
    Ok(LpSolution { z: u, xi, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neurolp::LpBuilder;

    fn tiny() -> GeneralFormLp<f64> {
        let mut b = LpBuilder::new(1, 0);
        b.set_cost(0, 1.0);
        b.add_ge([(0, 1.0)], 1.0);
        b.build()
    }

    #[test]
    fn start_at_optimum_takes_no_steps() {
        let (u, r) = integrate_flow(&tiny(), &[1.0, 1.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.steps, 0);
        assert!(r.converged);
        assert_eq!(u, vec![1.0, 1.0]);
    }

    #[test]
    fn tiny_lp_from_zero() {
        let s = solve_lp(&tiny(), &SolverConfig::default(), None).unwrap();
        assert!(s.report.converged, "{:?}", s.report);
        assert!((s.z[0] - 1.0).abs() < 1e-5);
        assert!(s.report.duality_gap <= 1e-6);
    }

    #[test]
    fn rk4_and_f32_also_converge() {
        let cfg = SolverConfig { integrator: Integrator::Rk4, ..Default::default() };
        let s = solve_lp(&tiny(), &cfg, None).unwrap();
        assert!(s.report.converged);
        let lp32: GeneralFormLp<f32> = tiny().cast();
        let cfg32 = SolverConfig { kkt_tolerance: 1e-4, ..Default::default() };
        let s = solve_lp(&lp32, &cfg32, None).unwrap();
        assert!(s.report.converged, "{:?}", s.report);
        assert!((s.z[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn trace_is_monotone_and_exports() {
        let cfg = SolverConfig { trace_every: 1, ..Default::default() };
        let s = solve_lp(&tiny(), &cfg, None).unwrap();
        assert!(s.report.trace.windows(2).all(|w| w[1].energy <= w[0].energy));
        let mut buf = Vec::new();
        s.report.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,energy,kkt_residual\n0,"));
    }

    #[test]
    fn infeasible_lp_does_not_converge() {
        // x ≥ 1 and -x ≥ 0 with x ≥ 0
        let mut b = LpBuilder::new(1, 0);
        b.set_cost(0, 1.0);
        b.add_ge([(0, 1.0)], 1.0);
        b.add_ge([(0, -1.0)], 0.0);
        let cfg = SolverConfig { max_steps: 20_000, ..Default::default() };
        let s = solve_lp(&b.build(), &cfg, None).unwrap();
        assert!(!s.report.converged);
        assert!(s.report.energy > 0.0);
        assert!(s.report.primal_infeasibility > 0.1);
    }

    #[test]
    fn divergence_is_reported() {
        let lp = tiny();
        let r = integrate_flow(&lp, &[f64::NAN, 0.0], &SolverConfig::default()).unwrap().1;
        assert_eq!(r.status, SolveStatus::Diverged);
    }

    #[test]
    fn invalid_config() {
        let cfg = SolverConfig { step_size: 0.0, ..Default::default() };
        assert!(solve_lp(&tiny(), &cfg, None).is_err());
        let cfg = SolverConfig { beta: -1.0, ..Default::default() };
        assert!(solve_lp(&tiny(), &cfg, None).is_err());
    }
}
