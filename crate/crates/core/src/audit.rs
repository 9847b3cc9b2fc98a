//! Independent checks on computed evolutions: closed-form 1D oracles,
//! discrete dissipation and energy-balance residuals, onset detection.

use serde::{Deserialize, Serialize};

use crate::energy::{strain, EnergyBreakdown, State};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionTrace, Problem};
use crate::material::MaterialParams;
use crate::scalar::{pairwise_sum, Real};
use crate::subsolvers::displacement_gradient;

/// Interior value of the uniform-strain phase field, `1/(1 + 2εK t²)`.
pub fn plateau_value<T: Real>(t: T, young: T, epsilon: T) -> T {
    T::one() / (T::one() + T::lit(2.0) * epsilon * young * t * t)
}

/// Decay rate of the phase-field boundary layer under uniform strain `t`.
pub fn boundary_layer_rate<T: Real>(t: T, young: T, epsilon: T) -> T {
    (T::one() / (T::lit(4.0) * epsilon * epsilon) + young * t * t / (T::lit(2.0) * epsilon)).sqrt()
}

/// Phase field of a bar `(0, L)` under the uniform strain `u = t x`, with
/// `v = 1` at both ends: the solution of
/// `v'' − (1/(4ε²) + K t²/(2ε)) v + 1/(4ε²) = 0`.
pub fn analytic_v_profile<T: Real>(x: T, t: T, length: T, young: T, epsilon: T) -> T {
    let vs = plateau_value(t, young, epsilon);
    let k = boundary_layer_rate(t, young, epsilon);
    let layers = ((-k * x).exp() + (-k * (length - x)).exp()) / (T::one() + (-k * length).exp());
    vs + (T::one() - vs) * layers
}

/// First-yield and first-crack times `(τ/K, √(2/(K L)))` of a homogeneous
/// bar of length `L`.
pub fn predicted_onset_times<T: Real>(params: &MaterialParams<T>, length: T) -> (T, T) {
    let k = params.young;
    (params.yield_stress / k, (T::lit(2.0) / (k * length)).sqrt())
}

/// First times at which `max |p| > p_threshold` and `min v < v_threshold`.
pub fn detect_onsets<T: Real>(
    trace: &EvolutionTrace<T>,
    v_threshold: T,
    p_threshold: T,
) -> (Option<T>, Option<T>) {
    let mut plastic = None;
    let mut crack = None;
    for s in &trace.steps {
        if plastic.is_none() && s.state.p.iter().any(|q| q.norm() > p_threshold) {
            plastic = Some(s.state.t);
        }
        if crack.is_none() && s.state.v.iter().any(|&v| v < v_threshold) {
            crack = Some(s.state.t);
        }
    }
    (plastic, crack)
}

/// Sup-norm distance between the phase field of a 1D state and the
/// uniform-strain closed form at the state's time.
pub fn profile_deviation<T: Real>(problem: &Problem<T>, state: &State<T>) -> Result<T> {
    let mesh = &problem.mesh;
    if mesh.dim() != 1 {
        return Err(Error::invalid(
            "mesh",
            "the closed-form profile applies to 1D bars only",
        ));
    }
    let p = problem.params();
    let length = mesh.extent()[0];
    Ok(mesh
        .nodes()
        .iter()
        .zip(&state.v)
        .map(|(x, &v)| (v - analytic_v_profile(x[0], state.t, length, p.young, p.epsilon)).abs())
        .fold(T::zero(), T::max))
}

fn free_energy<T: Real>(e: &EnergyBreakdown<T>) -> T {
    e.free_energy()
}

/// Stress power `∫σ_n : (Eu_n − Eu_{n−1})` with the end-of-step stress.
fn stress_power<T: Real>(problem: &Problem<T>, state: &State<T>, prev: &State<T>) -> Result<T> {
    let mesh = &problem.mesh;
    let params = problem.params();
    let h = problem.scenario.time_step;
    let elasticity = params.elasticity(mesh.dim())?;
    let beta1 = params.active_beta1();
    let terms: Vec<T> = (0..mesh.num_elements())
        .map(|e| {
            let eps = strain(mesh, &state.u, e);
            let deps = eps - strain(mesh, &prev.u, e);
            let a = crate::energy::element_stiffness_factor(mesh, &state.v, params.eta, e);
            let mut sigma = elasticity.apply(&(eps - state.p[e])).scale(a);
            if beta1 > T::zero() {
                sigma += deps.scale(beta1 / h);
            }
            mesh.measure(e) * sigma.dot(&deps)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

fn step_pair<T: Real>(trace: &EvolutionTrace<T>, n: usize) -> Result<()> {
    if n == 0 || n >= trace.steps.len() {
        return Err(Error::Index(format!(
            "step {n} has no predecessor in a trace of {} steps",
            trace.steps.len()
        )));
    }
    Ok(())
}

/// Discrete dissipation `D_n = ∫σ_n:ΔEu − ΔW`.
pub fn dissipation_per_step<T: Real>(trace: &EvolutionTrace<T>, n: usize) -> Result<T> {
    let problem = Problem::new(trace.scenario.clone())?;
    dissipation_with(&problem, trace, n)
}

fn dissipation_with<T: Real>(
    problem: &Problem<T>,
    trace: &EvolutionTrace<T>,
    n: usize,
) -> Result<T> {
    step_pair(trace, n)?;
    let (cur, prev) = (&trace.steps[n], &trace.steps[n - 1]);
    let power = stress_power(problem, &cur.state, &prev.state)?;
    Ok(power - (free_energy(&cur.energy) - free_energy(&prev.energy)))
}

/// Tolerance band `10 h (1 + |W_n|)` for the dissipation sign check.
pub fn dissipation_tolerance<T: Real>(h: T, free_energy: T) -> T {
    T::lit(10.0) * h * (T::one() + free_energy.abs())
}

/// Per-step and cumulative energy-balance residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResidual<T> {
    /// `ΔW + dissipated − boundary work` of each step (entry 0 is zero).
    pub per_step: Vec<T>,
    /// Running sum of `per_step`.
    pub cumulative: Vec<T>,
}

impl<T: Real> BalanceResidual<T> {
    pub fn max_abs(&self) -> T {
        self.cumulative
            .iter()
            .fold(T::zero(), |m, r| m.max(r.abs()))
    }
}

/// Discrete energy balance; the boundary work uses the variational
/// reaction at prescribed dofs times the prescribed increment.
pub fn energy_balance_residual<T: Real>(trace: &EvolutionTrace<T>) -> Result<BalanceResidual<T>> {
    let problem = Problem::new(trace.scenario.clone())?;
    balance_with(&problem, trace)
}

fn balance_with<T: Real>(
    problem: &Problem<T>,
    trace: &EvolutionTrace<T>,
) -> Result<BalanceResidual<T>> {
    let mesh = &problem.mesh;
    let params = problem.params();
    let h = problem.scenario.time_step;
    let two = T::lit(2.0);
    let mut per_step = vec![T::zero()];
    let mut cumulative = vec![T::zero()];
    let mut acc = T::zero();
    for n in 1..trace.steps.len() {
        let (cur, prev) = (&trace.steps[n], &trace.steps[n - 1]);
        let d_now = problem.dirichlet(cur.state.t)?;
        let d_prev = problem.dirichlet(prev.state.t)?;
        let grad = displacement_gradient(
            mesh,
            &cur.state.u,
            &cur.state.v,
            &cur.state.p,
            &prev.state.u,
            params,
            h,
        )?;
        let mut work = T::zero();
        for dof in 0..mesh.num_dofs() {
            if let (Some(w1), Some(w0)) = (d_now.value(dof), d_prev.value(dof)) {
                work += grad[dof] * (w1 - w0);
            }
        }
        let e = &cur.energy;
        // a viscous step dissipates twice its incremental pseudo-potential
        let dissipated =
            e.plastic_increment + two * (e.viscoelastic_increment + e.viscoplastic_increment);
        let r = free_energy(e) - free_energy(&prev.energy) + dissipated - work;
        acc += r;
        per_step.push(r);
        cumulative.push(acc);
    }
    Ok(BalanceResidual {
        per_step,
        cumulative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport<T> {
    pub times: Vec<T>,
    pub dissipation: Vec<T>,
    pub dissipation_tolerance: Vec<T>,
    pub balance: BalanceResidual<T>,
    pub plastic_onset: Option<T>,
    pub crack_onset: Option<T>,
    pub v_threshold: T,
    pub p_threshold: T,
    /// Sup-norm distance of the final 1D phase field to the closed form.
    pub profile_deviation: Option<T>,
    /// Steps with `D_n < −tol_n`.
    pub dissipation_violations: Vec<usize>,
    pub dissipation_ok: bool,
}

pub fn audit_trace<T: Real>(trace: &EvolutionTrace<T>) -> Result<AuditReport<T>> {
    let problem = Problem::new(trace.scenario.clone())?;
    let h = problem.scenario.time_step;
    let mut dissipation = vec![T::zero()];
    let mut tolerance = vec![dissipation_tolerance(h, T::zero())];
    let mut violations = Vec::new();
    for n in 1..trace.steps.len() {
        let d = dissipation_with(&problem, trace, n)?;
        let tol = dissipation_tolerance(h, free_energy(&trace.steps[n].energy));
        if d < -tol {
            violations.push(n);
        }
        dissipation.push(d);
        tolerance.push(tol);
    }
    let balance = balance_with(&problem, trace)?;
    let v_threshold = T::lit(0.1);
    let p_threshold = T::lit(1e-6);
    let (plastic_onset, crack_onset) = detect_onsets(trace, v_threshold, p_threshold);
    let profile_deviation = match (problem.mesh.dim(), trace.steps.last()) {
        (1, Some(last)) => Some(profile_deviation(&problem, &last.state)?),
        _ => None,
    };
    Ok(AuditReport {
        times: trace.times(),
        dissipation,
        dissipation_tolerance: tolerance,
        balance,
        plastic_onset,
        crack_onset,
        v_threshold,
        p_threshold,
        profile_deviation,
        dissipation_ok: violations.is_empty(),
        dissipation_violations: violations,
    })
}
