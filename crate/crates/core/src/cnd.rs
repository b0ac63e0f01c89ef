//! Collective neurodynamic optimization: a particle swarm whose members each
//! run the gradient-flow solver between PSO exchanges.

use std::io::{self, Write};
use std::ops::Range;

use log::{debug, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::neurolp::{integrate_flow, solve_lp, GeneralFormLp, LpError, SolveStatus, SolverConfig};
use crate::rng::{self, streams, StreamRng};
use crate::scalar::Scalar;

/// Turns a relaxed primal vector into a usable discrete solution.
pub trait Rounder<T: Scalar>: Sync {
    type Solution: Clone + Send + Sync;

    /// Coordinates of the primal vector that relax 0/1 variables.
    fn relaxed(&self) -> Range<usize>;

    /// Rounded solution and its cost, or `None` when repair fails.
    fn round(&self, z: &[T]) -> Option<(Self::Solution, f64)>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CndConfig {
    pub swarm_size: usize,
    /// Inertia weight `w`.
    pub inertia: f64,
    /// Cognitive constant `c1`.
    pub c1: f64,
    /// Social constant `c2`.
    pub c2: f64,
    pub outer_rounds: usize,
    /// Stop after this many rounds without a strict gBest improvement.
    pub stall_rounds: usize,
    pub seed: u64,
}

impl Default for CndConfig {
    fn default() -> Self {
        CndConfig {
            swarm_size: 10,
            inertia: 0.7,
            c1: 1.5,
            c2: 1.5,
            outer_rounds: 30,
            stall_rounds: 5,
            seed: 0,
        }
    }
}

impl CndConfig {
    pub fn validate(&self) -> Result<(), LpError> {
        if self.swarm_size == 0 {
            return Err(LpError::Config("swarm_size must be at least 1".into()));
        }
        if !(self.inertia >= 0.0 && self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(LpError::Config("w, c1 and c2 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Velocity bound per coordinate.
pub const VELOCITY_CLAMP: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Particle<T, S> {
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    /// Dual part of the solver state, carried between refinements.
    pub dual: Vec<T>,
    pub best_position: Vec<T>,
    /// Rounded cost of `best_solution`; `+∞` until something rounds.
    pub best_fitness: f64,
    pub best_solution: Option<S>,
    /// Rounded cost after the latest refinement.
    pub fitness: f64,
    pub last_status: Option<SolveStatus>,
}

#[derive(Debug, Clone)]
pub struct Swarm<T, S> {
    pub particles: Vec<Particle<T, S>>,
    pub best_position: Option<Vec<T>>,
    pub best_fitness: f64,
    pub best_solution: Option<S>,
    relaxed: Range<usize>,
    rng: StreamRng,
}

impl<T: Scalar, S: Clone> Swarm<T, S> {
    pub fn relaxed(&self) -> Range<usize> {
        self.relaxed.clone()
    }

    /// Takes the best pBest as gBest if it strictly improves; returns whether it did.
    pub fn update_global(&mut self) -> bool {
        let mut improved = false;
        for p in &self.particles {
            if p.best_fitness < self.best_fitness {
                self.best_fitness = p.best_fitness;
                self.best_position = Some(p.best_position.clone());
                self.best_solution = p.best_solution.clone();
                improved = true;
            }
        }
        improved
    }
}

/// Particle 0 starts at the origin (the plain solver's start); the others
/// draw each relaxed coordinate uniformly from `[0, 1]`. Velocities start at
/// zero and no particle has been evaluated yet.
pub fn init_swarm<T: Scalar, S>(
    lp: &GeneralFormLp<T>,
    relaxed: Range<usize>,
    config: &CndConfig,
) -> Result<Swarm<T, S>, LpError> {
    config.validate()?;
    let n = lp.n_vars();
    if relaxed.end > n {
        return Err(LpError::Dimension(format!("relaxed range {relaxed:?} exceeds {n} variables")));
    }
    // Index 0 of the swarm stream drives the PSO draws; index 1 the start positions.
    let mut init_rng = rng::indexed_stream(config.seed, streams::SWARM, 1);
    let particles = (0..config.swarm_size)
        .map(|i| {
            let mut position = vec![T::zero(); n];
            if i > 0 {
                for x in &mut position[relaxed.clone()] {
                    *x = T::of(init_rng.gen::<f64>());
                }
            }
            Particle {
                velocity: vec![T::zero(); n],
                dual: vec![T::zero(); lp.n_ineq() + lp.n_eq()],
                best_position: position.clone(),
                position,
                best_fitness: f64::INFINITY,
                best_solution: None,
                fitness: f64::INFINITY,
                last_status: None,
            }
        })
        .collect();
    Ok(Swarm {
        particles,
        best_position: None,
        best_fitness: f64::INFINITY,
        best_solution: None,
        relaxed,
        rng: rng::stream(config.seed, streams::SWARM),
    })
}

/// Runs the flow from the particle's position with its dual warm start,
/// clamps relaxed coordinates, rounds, and updates pBest on strict improvement.
pub fn local_refine<T: Scalar, R: Rounder<T>>(
    particle: &mut Particle<T, R::Solution>,
    lp: &GeneralFormLp<T>,
    solver: &SolverConfig,
    rounder: &R,
) -> Result<(), LpError> {
    let u0: Vec<T> = particle.position.iter().chain(&particle.dual).copied().collect();
    let (mut u, report) = integrate_flow(lp, &u0, solver)?;
    particle.last_status = Some(report.status);
    if report.status == SolveStatus::Diverged {
        particle.fitness = f64::INFINITY;
        return Ok(());
    }
    particle.dual = u.split_off(lp.n_vars());
    particle.position = u;
    clamp_unit(&mut particle.position[rounder.relaxed()]);
    match rounder.round(&particle.position) {
        Some((sol, f)) => {
            particle.fitness = f;
            if f < particle.best_fitness {
                particle.best_fitness = f;
                particle.best_solution = Some(sol);
                particle.best_position = particle.position.clone();
            }
        }
        None => particle.fitness = f64::INFINITY,
    }
    Ok(())
}

fn clamp_unit<T: Scalar>(xs: &mut [T]) {
    for x in xs {
        *x = x.max(T::zero()).min(T::one());
    }
}

/// One PSO exchange. For each particle in order, `r1` then `r2` are drawn from
/// the swarm stream and
/// `V ← wV + c1 r1 (pBest − X) + c2 r2 (gBest − X)`, `X ← X + V`.
/// Velocities are clamped to `±1`; relaxed coordinates that leave `[0, 1]`
/// are clamped and their velocity zeroed. A missing gBest contributes nothing.
pub fn pso_step<T: Scalar, S>(swarm: &mut Swarm<T, S>, config: &CndConfig) {
    let w = T::of(config.inertia);
    let vmax = T::of(VELOCITY_CLAMP);
    let relaxed = swarm.relaxed.clone();
    for p in &mut swarm.particles {
        let r1 = T::of(swarm.rng.gen::<f64>());
        let r2 = T::of(swarm.rng.gen::<f64>());
        let a = T::of(config.c1) * r1;
        let b = T::of(config.c2) * r2;
        for d in 0..p.position.len() {
            let x = p.position[d];
            let mut v = w * p.velocity[d] + a * (p.best_position[d] - x);
            if let Some(g) = &swarm.best_position {
                v += b * (g[d] - x);
            }
            v = v.max(-vmax).min(vmax);
            let mut nx = x + v;
            if relaxed.contains(&d) && (nx < T::zero() || nx > T::one()) {
                nx = nx.max(T::zero()).min(T::one());
                v = T::zero();
            }
            p.position[d] = nx;
            p.velocity[d] = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub gbest: f64,
    /// Mean rounded cost over particles that produced one (`NaN` if none).
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CndReport {
    pub rounds: usize,
    pub trace: Vec<RoundRecord>,
    /// Set when every particle diverged and the plain solver was used instead.
    pub fallback: bool,
    pub diverged_refinements: usize,
}

impl CndReport {
    /// `round,gbest,mean` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "round,gbest,mean")?;
        for r in &self.trace {
            writeln!(out, "{},{},{}", r.round, r.gbest, r.mean)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CndOutcome<S> {
    pub solution: Option<S>,
    pub fitness: f64,
    pub report: CndReport,
}

/// Alternates parallel refinement with PSO exchange until `outer_rounds`
/// or until gBest stalls for `stall_rounds`.
pub fn cnd_solve<T: Scalar, R: Rounder<T>>(
    lp: &GeneralFormLp<T>,
    cnd: &CndConfig,
    solver: &SolverConfig,
    rounder: &R,
) -> Result<CndOutcome<R::Solution>, LpError> {
    solver.validate()?;
    let mut swarm = init_swarm(lp, rounder.relaxed(), cnd)?;
    let mut trace = Vec::new();
    let mut stall = 0;
    let mut diverged_refinements = 0;
    let mut all_diverged = true;
    let mut rounds = 0;
    for round in 1..=cnd.outer_rounds {
        rounds = round;
        swarm
            .particles
            .par_iter_mut()
            .map(|p| local_refine(p, lp, solver, rounder))
            .collect::<Result<Vec<()>, LpError>>()?;
        let diverged = swarm
            .particles
            .iter()
            .filter(|p| p.last_status == Some(SolveStatus::Diverged))
            .count();
        diverged_refinements += diverged;
        all_diverged &= diverged == swarm.particles.len();
        let improved = swarm.update_global();
        let finite: Vec<f64> = swarm.particles.iter().map(|p| p.fitness).filter(|f| f.is_finite()).collect();
        let mean = if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 };
        trace.push(RoundRecord { round, gbest: swarm.best_fitness, mean });
        debug!("cnd round {round}: gbest {} mean {mean}", swarm.best_fitness);
        stall = if improved { 0 } else { stall + 1 };
        if stall >= cnd.stall_rounds || round == cnd.outer_rounds {
            break;
        }
        pso_step(&mut swarm, cnd);
    }
    let mut report = CndReport { rounds, trace, fallback: false, diverged_refinements };
    if all_diverged && rounds > 0 {
        warn!("every particle diverged; falling back to a single solver run");
        report.fallback = true;
        let s = solve_lp(lp, solver, None)?;
        let mut z = s.z;
        clamp_unit(&mut z[rounder.relaxed()]);
        let (solution, fitness) = match rounder.round(&z) {
            Some((sol, f)) => (Some(sol), f),
            None => (None, f64::INFINITY),
        };
        return Ok(CndOutcome { solution, fitness, report });
    }
    Ok(CndOutcome { solution: swarm.best_solution, fitness: swarm.best_fitness, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neurolp::LpBuilder;

    /// Picks the cheaper of two items: min x0 + 2 x1 with x0 + x1 = 1.
    fn choice_lp() -> GeneralFormLp<f64> {
        let mut b = LpBuilder::new(2, 0);
        b.set_cost(0, 1.0).set_cost(1, 2.0);
        b.add_eq([(0, 1.0), (1, 1.0)], 1.0);
        b.build()
    }

    struct Argmax;

    impl Rounder<f64> for Argmax {
        type Solution = usize;
        fn relaxed(&self) -> Range<usize> {
            0..2
        }
        fn round(&self, z: &[f64]) -> Option<(usize, f64)> {
            let i = if z[0] >= z[1] { 0 } else { 1 };
            Some((i, (i + 1) as f64))
        }
    }

    #[test]
    fn finds_cheaper_item() {
        let out = cnd_solve(&choice_lp(), &CndConfig::default(), &SolverConfig::default(), &Argmax).unwrap();
        assert_eq!(out.solution, Some(0));
        assert_eq!(out.fitness, 1.0);
        assert!(out.report.trace.windows(2).all(|w| w[1].gbest <= w[0].gbest));
    }

    #[test]
    fn zero_coefficients_freeze_the_swarm() {
        let cfg = CndConfig { inertia: 0.0, c1: 0.0, c2: 0.0, swarm_size: 3, ..Default::default() };
        let mut s: Swarm<f64, usize> = init_swarm(&choice_lp(), 0..2, &cfg).unwrap();
        s.particles[1].best_position = vec![0.9, 0.1];
        s.best_position = Some(vec![1.0, 0.0]);
        let before: Vec<Vec<f64>> = s.particles.iter().map(|p| p.position.clone()).collect();
        pso_step(&mut s, &cfg);
        for (p, b) in s.particles.iter().zip(&before) {
            assert_eq!(&p.position, b);
            assert!(p.velocity.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hand_stepped_two_particles() {
        let cfg = CndConfig { swarm_size: 2, seed: 11, ..Default::default() };
        let lp = choice_lp();
        let mut s: Swarm<f64, usize> = init_swarm(&lp, 0..2, &cfg).unwrap();
        s.particles[0].position = vec![0.2, 0.6];
        s.particles[0].velocity = vec![0.1, -0.1];
        s.particles[0].best_position = vec![0.4, 0.4];
        s.particles[1].position = vec![0.9, 0.5];
        s.particles[1].best_position = vec![0.9, 0.5];
        s.best_position = Some(vec![0.4, 0.4]);
        let mut r = rng::stream(11, streams::SWARM);
        let draws: Vec<f64> = (0..4).map(|_| r.gen()).collect();
        pso_step(&mut s, &cfg);
        let (a, b) = (1.5 * draws[0], 1.5 * draws[1]);
        let (x0, v0, pb) = ([0.2, 0.6], [0.1, -0.1], [0.4, 0.4]);
        for d in 0..2 {
            let mut v = 0.7 * v0[d] + a * (pb[d] - x0[d]);
            v += b * (pb[d] - x0[d]);
            let v = v.clamp(-1.0, 1.0);
            let x = x0[d] + v;
            assert_eq!(s.particles[0].velocity[d], v);
            assert_eq!(s.particles[0].position[d], x);
        }
        let b1 = 1.5 * draws[3];
        let v1 = [0.0 + b1 * (0.4 - 0.9), 0.0 + b1 * (0.4 - 0.5)];
        assert_eq!(s.particles[1].velocity, v1.to_vec());
    }

    #[test]
    fn clamping_zeroes_velocity() {
        let cfg = CndConfig { swarm_size: 1, inertia: 1.0, c1: 0.0, c2: 0.0, ..Default::default() };
        let mut s: Swarm<f64, usize> = init_swarm(&choice_lp(), 0..1, &cfg).unwrap();
        s.particles[0].position = vec![0.9, 0.9];
        s.particles[0].velocity = vec![0.5, 0.5];
        pso_step(&mut s, &cfg);
        assert_eq!(s.particles[0].position[0], 1.0);
        assert_eq!(s.particles[0].velocity[0], 0.0);
        // Coordinate 1 is not relaxed, so it may leave the unit interval.
        assert_eq!(s.particles[0].position[1], 1.4);
        assert_eq!(s.particles[0].velocity[1], 0.5);
    }

    #[test]
    fn init_is_seeded_and_in_range() {
        let cfg = CndConfig { swarm_size: 5, seed: 3, ..Default::default() };
        let a: Swarm<f64, usize> = init_swarm(&choice_lp(), 0..1, &cfg).unwrap();
        let b: Swarm<f64, usize> = init_swarm(&choice_lp(), 0..1, &cfg).unwrap();
        for (p, q) in a.particles.iter().zip(&b.particles) {
            assert_eq!(p.position, q.position);
            assert!((0.0..=1.0).contains(&p.position[0]));
            assert_eq!(p.position[1], 0.0);
        }
        assert!(a.particles[0].position.iter().all(|&x| x == 0.0));
        assert!(init_swarm::<f64, usize>(&choice_lp(), 0..1, &CndConfig { swarm_size: 0, ..cfg }).is_err());
    }
}
