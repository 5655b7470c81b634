//! Replicator dynamics, single-population and two-population (bimatrix).
//!
//! Both integrators use fixed-step classical RK4. After every step each
//! population is clamped at zero and, when requested, renormalized onto the
//! simplex. A component below `-NEGATIVE_DRIFT_TOL` before clamping means the
//! step itself is broken and is reported as divergence.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::game::{Matrix, MixedStrategy, SIMPLEX_TOL};

/// Threshold on `max |dx/dt|` for a trajectory to count as converged.
pub const CONVERGENCE_TOL: f64 = 1e-9;

/// Largest negative share tolerated (and clamped) after a step.
pub const NEGATIVE_DRIFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub renormalize: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt: 0.01, t_end: 200.0, record_every: 10, renormalize: true }
    }
}

impl IntegratorConfig {
    pub fn with_horizon(t_end: f64) -> Self {
        IntegratorConfig { t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(param(format!("integrator dt must be > 0 (got {})", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(param(format!("integrator t_end must be >= dt (got {})", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(param("integrator record_every must be >= 1"));
        }
        Ok(())
    }

    /// Number of fixed steps covering `[0, t_end]`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Sampled solution of an integration run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Population `x` at each recorded time.
    pub x: Vec<MixedStrategy>,
    /// Population `y` for two-population runs.
    pub y: Option<Vec<MixedStrategy>>,
    pub converged: bool,
    /// `max |dx/dt|` (over both populations) at the final state.
    pub final_residual: f64,
}

impl Trajectory {
    pub fn final_x(&self) -> &MixedStrategy {
        self.x.last().expect("trajectory always holds the initial state")
    }

    pub fn final_y(&self) -> Option<&MixedStrategy> {
        self.y.as_ref().and_then(|y| y.last())
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds the initial time")
    }
}

fn check_square(a: &Matrix, n: usize) -> Result<()> {
    if !a.is_square() || a.rows() != n {
        return Err(Error::Dimension(format!(
            "{}x{} payoff matrix against a {}-strategy population",
            a.rows(),
            a.cols(),
            n
        )));
    }
    Ok(())
}

/// `x_i · (f_i - xᵀf)` for fitness vector `f`, written into `out`.
fn selection(x: &[f64], fitness: &[f64], out: &mut [f64]) {
    let mean: f64 = x.iter().zip(fitness).map(|(a, b)| a * b).sum();
    for ((o, xi), fi) in out.iter_mut().zip(x).zip(fitness) {
        *o = xi * (fi - mean);
    }
}

/// Replicator vector field `dx_i = x_i·((a·x)_i - xᵀ·a·x)`.
pub fn replicator_rhs(a: &Matrix, x: &MixedStrategy) -> Result<Vec<f64>> {
    check_square(a, x.len())?;
    let mut fitness = vec![0.0; x.len()];
    a.mul_vec_into(x.probs(), &mut fitness);
    let mut out = vec![0.0; x.len()];
    selection(x.probs(), &fitness, &mut out);
    Ok(out)
}

/// The state layout of a system: consecutive population blocks in one vector.
trait Field {
    fn blocks(&self) -> &[std::ops::Range<usize>];
    fn eval(&self, z: &[f64], out: &mut [f64], scratch: &mut [f64]);
}

struct SinglePopulation<'a> {
    a: &'a Matrix,
    blocks: [std::ops::Range<usize>; 1],
}

impl Field for SinglePopulation<'_> {
    fn blocks(&self) -> &[std::ops::Range<usize>] {
        &self.blocks
    }

    fn eval(&self, z: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.a.mul_vec_into(z, scratch);
        selection(z, scratch, out);
    }
}

struct TwoPopulation<'a> {
    a: &'a Matrix,
    bt: Matrix,
    blocks: [std::ops::Range<usize>; 2],
}

impl Field for TwoPopulation<'_> {
    fn blocks(&self) -> &[std::ops::Range<usize>] {
        &self.blocks
    }

    fn eval(&self, z: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let (rx, ry) = (self.blocks[0].clone(), self.blocks[1].clone());
        let (x, y) = (&z[rx.clone()], &z[ry.clone()]);
        let (fx, fy) = scratch.split_at_mut(rx.len());
        self.a.mul_vec_into(y, fx);
        self.bt.mul_vec_into(x, fy);
        let (ox, oy) = out.split_at_mut(rx.len());
        selection(x, fx, ox);
        selection(y, fy, oy);
    }
}

fn integrate<F: Field>(field: &F, z0: Vec<f64>, cfg: &IntegratorConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let n = z0.len();
    let steps = cfg.steps();
    let dt = cfg.dt;
    let mut z = z0;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut scratch = vec![0.0; n];

    let mut times = vec![0.0];
    let mut states = vec![z.clone()];

    for step in 1..=steps {
        field.eval(&z, &mut k1, &mut scratch);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * dt * k1[i];
        }
        field.eval(&tmp, &mut k2, &mut scratch);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * dt * k2[i];
        }
        field.eval(&tmp, &mut k3, &mut scratch);
        for i in 0..n {
            tmp[i] = z[i] + dt * k3[i];
        }
        field.eval(&tmp, &mut k4, &mut scratch);
        for i in 0..n {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        for block in field.blocks() {
            let pop = &mut z[block.clone()];
            for (i, v) in pop.iter_mut().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Divergence { step, reason: format!("share {i} became {v}") });
                }
                if *v < -NEGATIVE_DRIFT_TOL {
                    return Err(Error::Divergence {
                        step,
                        reason: format!("share {i} drifted to {v:e}; reduce dt"),
                    });
                }
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            if cfg.renormalize {
                let sum: f64 = pop.iter().sum();
                if sum.is_nan() || sum <= 0.0 {
                    return Err(Error::Divergence { step, reason: "population mass vanished".into() });
                }
                if sum != 1.0 {
                    pop.iter_mut().for_each(|v| *v /= sum);
                }
            }
        }

        if step % cfg.record_every == 0 || step == steps {
            times.push(step as f64 * dt);
            states.push(z.clone());
        }
    }

    field.eval(&z, &mut k1, &mut scratch);
    let residual = k1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok((times, states, residual))
}

fn check_start(x: &MixedStrategy, name: &str) -> Result<()> {
    let sum: f64 = x.probs().iter().sum();
    if x.probs().iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(param(format!("initial state {name} is not on the simplex")));
    }
    Ok(())
}

/// Integrates single-population replicator dynamics from `x0`.
pub fn integrate_replicator(a: &Matrix, x0: &MixedStrategy, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_square(a, x0.len())?;
    check_start(x0, "x0")?;
    #[allow(clippy::single_range_in_vec_init)]
    let field = SinglePopulation { a, blocks: [0..x0.len()] };
    let (times, states, residual) = integrate(&field, x0.probs().to_vec(), cfg)?;
    Ok(Trajectory {
        times,
        x: states.into_iter().map(MixedStrategy::from_vec_unchecked).collect(),
        y: None,
        converged: residual < CONVERGENCE_TOL,
        final_residual: residual,
    })
}

/// Integrates two coevolving populations: `x` plays rows of `a`, `y` plays
/// columns of `b`.
///
/// `dx_i = x_i·((a·y)_i - xᵀ·a·y)` and `dy_j = y_j·((bᵀ·x)_j - yᵀ·bᵀ·x)`.
pub fn integrate_bimatrix(
    a: &Matrix,
    b: &Matrix,
    x0: &MixedStrategy,
    y0: &MixedStrategy,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension("payoff tables differ in shape".into()));
    }
    if x0.len() != a.rows() || y0.len() != a.cols() {
        return Err(Error::Dimension(format!(
            "populations of size ({}, {}) against a {}x{} game",
            x0.len(),
            y0.len(),
            a.rows(),
            a.cols()
        )));
    }
    check_start(x0, "x0")?;
    check_start(y0, "y0")?;
    let (m, n) = (x0.len(), y0.len());
    let field = TwoPopulation { a, bt: b.transpose(), blocks: [0..m, m..m + n] };
    let mut z = x0.probs().to_vec();
    z.extend_from_slice(y0.probs());
    let (times, states, residual) = integrate(&field, z, cfg)?;
    let (xs, ys) = states
        .into_iter()
        .map(|s| {
            (
                MixedStrategy::from_vec_unchecked(s[..m].to_vec()),
                MixedStrategy::from_vec_unchecked(s[m..].to_vec()),
            )
        })
        .unzip();
    Ok(Trajectory { times, x: xs, y: Some(ys), converged: residual < CONVERGENCE_TOL, final_residual: residual })
}
