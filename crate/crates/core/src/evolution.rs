//! Discrete-time evolution: alternate minimization at each load step and
//! the backtracking repair that enforces energetic consistency with all
//! earlier steps under proportional loading.

use serde::{Deserialize, Serialize};

use crate::energy::{mass_weights, scalar_gradient, EnergyBreakdown, EnergyModel, State};
use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::scalar::Real;
use crate::subsolvers::phase::solve_phase_field_from;
use crate::subsolvers::{
    phase_dirichlet_mask, solve_displacement, solve_plastic_with, BoundaryLoad, DirichletData,
    PlasticMethod,
};
use crate::tensor::Sym2;

/// A boundary sub-segment carved out of a rectangle side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub tag: String,
    pub side: String,
    pub interval: [T; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeshSpec<T> {
    Interval {
        length: T,
        dx: T,
    },
    Rectangle {
        lx: T,
        ly: T,
        dx: T,
        segments: Vec<Segment<T>>,
    },
}

impl<T: Real> MeshSpec<T> {
    pub fn build(&self) -> Result<Mesh<T>> {
        match self {
            MeshSpec::Interval { length, dx } => Mesh::interval(*length, *dx),
            MeshSpec::Rectangle {
                lx,
                ly,
                dx,
                segments,
            } => {
                let mut mesh = Mesh::rectangle(*lx, *ly, *dx)?;
                for s in segments {
                    mesh = mesh.tag_boundary_segment(&s.side, s.interval, &s.tag)?;
                }
                Ok(mesh)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeshSpec::Interval { .. } => 1,
            MeshSpec::Rectangle { .. } => 2,
        }
    }

    /// Bar length (1D) or horizontal extent (2D).
    pub fn length(&self) -> T {
        match self {
            MeshSpec::Interval { length, .. } => *length,
            MeshSpec::Rectangle { lx, .. } => *lx,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<T> {
    /// Relative H¹ increment tolerance of the inner (u, p) loop.
    pub delta1: T,
    /// Relative H¹ increment tolerance of the outer v loop.
    pub delta2: T,
    /// Relative slack in the backtracking energy comparison.
    pub backtracking: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            delta1: T::lit(1e-5),
            delta2: T::lit(1e-5),
            backtracking: T::lit(1e-6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCaps {
    pub outer: usize,
    pub inner: usize,
    /// Restarts allowed into any single step.
    pub restart_budget: usize,
}

impl Default for IterationCaps {
    fn default() -> Self {
        IterationCaps {
            outer: 500,
            inner: 500,
            restart_budget: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario<T> {
    pub name: String,
    pub mesh: MeshSpec<T>,
    pub params: MaterialParams<T>,
    pub final_time: T,
    pub time_step: T,
    /// Proportional Dirichlet loads; listed order sets precedence.
    pub loads: Vec<BoundaryLoad<T>>,
    /// Tags on which `v = 1` is imposed.
    pub phase_dirichlet: Vec<String>,
    pub tolerances: Tolerances<T>,
    pub caps: IterationCaps,
    pub backtracking: bool,
    pub plastic_method: PlasticMethod,
}

impl<T: Real> Scenario<T> {
    pub fn num_steps(&self) -> Result<usize> {
        let h = self.time_step;
        let tf = self.final_time;
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::invalid(
                "h",
                format!("time step must be positive, got {h}"),
            ));
        }
        if !(tf > T::zero()) || !tf.is_finite() {
            return Err(Error::invalid(
                "t_final",
                format!("final time must be positive, got {tf}"),
            ));
        }
        let ratio = tf / h;
        let n = ratio.round();
        if (ratio - n).abs() > T::lit(1e-6) * ratio.max(T::one()) || n < T::one() {
            return Err(Error::invalid(
                "h",
                format!("final time {tf} is not an integer multiple of the time step {h}"),
            ));
        }
        Ok(n.to_usize().unwrap())
    }

    pub fn time(&self, n: usize) -> T {
        T::from_usize(n).unwrap() * self.time_step
    }

    pub fn validate(&self) -> Result<()> {
        self.num_steps()?;
        self.params.validate(self.mesh.dim())?;
        let t = &self.tolerances;
        for (name, x) in [
            ("delta1", t.delta1),
            ("delta2", t.delta2),
            ("backtracking_tol", t.backtracking),
        ] {
            if !(x > T::zero()) || !x.is_finite() {
                return Err(Error::invalid(name, format!("must be > 0, got {x}")));
            }
        }
        if self.caps.outer == 0 || self.caps.inner == 0 {
            return Err(Error::invalid(
                "max_outer",
                "iteration caps must be at least 1",
            ));
        }
        if self.loads.is_empty() {
            return Err(Error::invalid(
                "bc",
                "no displacement boundary condition given",
            ));
        }
        Ok(())
    }
}

/// `u` and `p` multiplied by `factor`, `v` kept; the time is scaled too.
pub fn rescale_state<T: Real>(state: &State<T>, factor: T) -> State<T> {
    State {
        t: state.t * factor,
        u: state.u.iter().map(|&x| x * factor).collect(),
        v: state.v.clone(),
        p: state.p.iter().map(|q| q.scale(factor)).collect(),
    }
}

/// H¹ norm of a P1 field with `components` interleaved components.
pub fn h1_norm<T: Real>(mesh: &Mesh<T>, field: &[T], components: usize) -> T {
    let (wd, wo) = mass_weights::<T>(mesh.dim());
    let mut acc = T::zero();
    let mut comp = vec![T::zero(); mesh.num_nodes()];
    for c in 0..components {
        for (i, x) in comp.iter_mut().enumerate() {
            *x = field[i * components + c];
        }
        for e in 0..mesh.num_elements() {
            let m = mesh.measure(e);
            let nodes = mesh.element(e);
            let mut l2 = T::zero();
            for (a, &i) in nodes.iter().enumerate() {
                for (b, &j) in nodes.iter().enumerate() {
                    l2 += if a == b { wd } else { wo } * comp[i] * comp[j];
                }
            }
            let g = scalar_gradient(mesh, &comp, e);
            acc += m * (l2 + g[0] * g[0] + g[1] * g[1]);
        }
    }
    acc.max(T::zero()).sqrt()
}

fn relative_increment<T: Real>(mesh: &Mesh<T>, new: &[T], old: &[T], components: usize) -> T {
    let diff: Vec<T> = new.iter().zip(old).map(|(a, b)| *a - *b).collect();
    h1_norm(mesh, &diff, components) / (h1_norm(mesh, new, components) + T::one())
}

/// Starting point of an alternate-minimization step.
#[derive(Debug, Clone, Default)]
pub struct StepInit<T> {
    pub u: Option<Vec<T>>,
    pub v: Option<Vec<T>>,
    pub p: Option<Vec<Sym2<T>>>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    pub state: State<T>,
    pub energy: EnergyBreakdown<T>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Total energy after every subsolver call, in order.
    pub energy_history: Vec<T>,
}

/// Failure of one alternate-minimization step, with the last iterate.
#[derive(Debug)]
pub struct AltMinFailure<T> {
    pub last: State<T>,
    pub energy_history: Vec<T>,
    pub error: Error,
}

impl<T> From<AltMinFailure<T>> for Error {
    fn from(f: AltMinFailure<T>) -> Error {
        f.error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub n: usize,
    pub state: State<T>,
    pub energy: EnergyBreakdown<T>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Set when this step was recomputed by a backtracking restart
    /// triggered at the given later step.
    pub backtracked_from: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BacktrackEvent {
    pub from_step: usize,
    pub to_step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace<T> {
    pub scenario: Scenario<T>,
    /// Steps `0..=N_f`; step 0 is the crack-free initial state.
    pub steps: Vec<StepRecord<T>>,
    /// Every restart performed, including those later superseded.
    pub restart_log: Vec<BacktrackEvent>,
    pub diagnostics: Vec<String>,
}

/// Running sums of the incremental dissipation terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DissipationTally<T> {
    pub plastic: T,
    pub viscoelastic: T,
    pub viscoplastic: T,
}

impl<T: Real> EvolutionTrace<T> {
    /// Backtracking events still reflected in the final steps.
    pub fn events(&self) -> Vec<BacktrackEvent> {
        self.steps
            .iter()
            .filter_map(|s| {
                s.backtracked_from.map(|from| BacktrackEvent {
                    from_step: from,
                    to_step: s.n,
                })
            })
            .collect()
    }

    /// Cumulative dissipation at every step.
    pub fn cumulative(&self) -> Vec<DissipationTally<T>> {
        let mut acc = DissipationTally {
            plastic: T::zero(),
            viscoelastic: T::zero(),
            viscoplastic: T::zero(),
        };
        self.steps
            .iter()
            .map(|s| {
                if s.n > 0 {
                    acc.plastic += s.energy.plastic_increment;
                    acc.viscoelastic += s.energy.viscoelastic_increment;
                    acc.viscoplastic += s.energy.viscoplastic_increment;
                }
                acc
            })
            .collect()
    }

    pub fn times(&self) -> Vec<T> {
        self.steps.iter().map(|s| s.state.t).collect()
    }
}

/// A scenario with its mesh and derived data resolved.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub scenario: Scenario<T>,
    pub mesh: Mesh<T>,
    pub phase_mask: Vec<bool>,
}

impl<T: Real> Problem<T> {
    pub fn new(scenario: Scenario<T>) -> Result<Self> {
        scenario.validate()?;
        let mesh = scenario.mesh.build()?;
        let phase_mask = phase_dirichlet_mask(&mesh, &scenario.phase_dirichlet)?;
        DirichletData::at_time(&mesh, &scenario.loads, T::one())?;
        Ok(Problem {
            scenario,
            mesh,
            phase_mask,
        })
    }

    pub fn params(&self) -> &MaterialParams<T> {
        &self.scenario.params
    }

    pub fn dirichlet(&self, t: T) -> Result<DirichletData<T>> {
        DirichletData::at_time(&self.mesh, &self.scenario.loads, t)
    }

    pub fn energy_model(&self) -> Result<EnergyModel<'_, T>> {
        EnergyModel::new(&self.mesh, &self.scenario.params, self.scenario.time_step)
    }

    pub fn energy(&self, state: &State<T>, prev: &State<T>) -> Result<EnergyBreakdown<T>> {
        self.energy_model()?.total(state, prev)
    }

    /// The crack-free, unloaded state at time 0.
    pub fn initial_state(&self) -> Result<State<T>> {
        let mut s = State::virgin(&self.mesh, T::zero());
        self.dirichlet(T::zero())?.impose(&mut s.u);
        Ok(s)
    }

    /// One load step of nested alternate minimization: an outer loop over
    /// `v`, an inner loop alternating `u` and `p`.
    #[allow(clippy::result_large_err)]
    pub fn altmin_step(
        &self,
        prev: &State<T>,
        t: T,
        init: StepInit<T>,
    ) -> std::result::Result<StepOutcome<T>, AltMinFailure<T>> {
        let sc = &self.scenario;
        let params = &sc.params;
        let h = sc.time_step;
        let mesh = &self.mesh;
        let dim = mesh.dim();
        let mut history = Vec::new();

        let mut state = State {
            t,
            u: init.u.unwrap_or_else(|| prev.u.clone()),
            v: init.v.unwrap_or_else(|| prev.v.clone()),
            p: init.p.unwrap_or_else(|| prev.p.clone()),
        };
        macro_rules! bail {
            ($err:expr) => {
                return Err(AltMinFailure {
                    last: state,
                    energy_history: history,
                    error: $err,
                })
            };
        }
        let dirichlet = match self.dirichlet(t) {
            Ok(d) => d,
            Err(e) => bail!(e),
        };
        let model = match self.energy_model() {
            Ok(m) => m,
            Err(e) => bail!(e),
        };
        dirichlet.impose(&mut state.u);

        let mut inner_total = 0;
        for m in 1..=sc.caps.outer {
            let v_old = state.v.clone();
            let mut inner_done = false;
            for _ in 0..sc.caps.inner {
                inner_total += 1;
                let u_new = match solve_displacement(
                    mesh, &state.v, &state.p, &prev.u, &dirichlet, params, h,
                ) {
                    Ok((u, _)) => u,
                    Err(e) => bail!(e),
                };
                let du = relative_increment(mesh, &u_new, &state.u, dim);
                state.u = u_new;
                match model.total(&state, prev) {
                    Ok(b) => history.push(b.total),
                    Err(e) => bail!(e),
                }
                match solve_plastic_with(
                    mesh,
                    &state.u,
                    &state.v,
                    &prev.p,
                    params,
                    h,
                    sc.plastic_method,
                ) {
                    Ok((p, _)) => state.p = p,
                    Err(e) => bail!(e),
                }
                match model.total(&state, prev) {
                    Ok(b) => history.push(b.total),
                    Err(e) => bail!(e),
                }
                if du <= sc.tolerances.delta1 {
                    inner_done = true;
                    break;
                }
            }
            if !inner_done {
                let err = Error::NonConvergence {
                    step: 0,
                    time: t.as_f64(),
                    reason: format!("inner (u, p) loop exceeded {} iterations", sc.caps.inner),
                    energy_history: history.iter().map(|x| x.as_f64()).collect(),
                };
                bail!(err);
            }
            match solve_phase_field_from(
                mesh,
                &state.u,
                &state.p,
                &prev.v,
                &self.phase_mask,
                params,
                &state.v,
            ) {
                Ok((v, _)) => state.v = v,
                Err(e) => bail!(e),
            }
            let energy = match model.total(&state, prev) {
                Ok(b) => b,
                Err(e) => bail!(e),
            };
            history.push(energy.total);
            if relative_increment(mesh, &state.v, &v_old, 1) <= sc.tolerances.delta2 {
                return Ok(StepOutcome {
                    state,
                    energy,
                    outer_iterations: m,
                    inner_iterations: inner_total,
                    energy_history: history,
                });
            }
        }
        let err = Error::NonConvergence {
            step: 0,
            time: t.as_f64(),
            reason: format!("outer v loop exceeded {} iterations", sc.caps.outer),
            energy_history: history.iter().map(|x| x.as_f64()).collect(),
        };
        bail!(err)
    }

    /// Smallest `j < n` whose stored energy exceeds that of the rescaled
    /// step-`n` state at time `t_j`.
    pub fn backtracking_scan(&self, steps: &[StepRecord<T>], n: usize) -> Result<Option<usize>> {
        if n < 2 || n >= steps.len() {
            return Ok(None);
        }
        let model = self.energy_model()?;
        let tol = self.scenario.tolerances.backtracking;
        let current = &steps[n].state;
        let tn = current.t;
        for j in 1..n {
            let stored = steps[j].energy.total;
            let candidate = rescale_state(current, steps[j].state.t / tn);
            let e = model.total(&candidate, &steps[j - 1].state)?.total;
            if stored > e + tol * (T::one() + stored.abs()) {
                return Ok(Some(j));
            }
        }
        Ok(None)
    }

    pub fn run(&self) -> Result<EvolutionTrace<T>> {
        let sc = &self.scenario;
        let nf = sc.num_steps()?;
        let initial = self.initial_state()?;
        let e0 = self.energy(&initial, &initial)?;
        let mut steps = vec![StepRecord {
            n: 0,
            state: initial,
            energy: e0,
            outer_iterations: 0,
            inner_iterations: 0,
            backtracked_from: None,
        }];
        let mut restart_log = Vec::new();
        let mut diagnostics = Vec::new();
        let mut restarts = vec![0usize; nf + 1];
        let mut pending: Option<(StepInit<T>, usize)> = None;
        let mut n = 1;
        while n <= nf {
            let t = sc.time(n);
            let (init, from) = match pending.take() {
                Some((init, from)) => (init, Some(from)),
                None => (StepInit::default(), None),
            };
            let outcome = self
                .altmin_step(&steps[n - 1].state, t, init)
                .map_err(|f| match f.error {
                    Error::NonConvergence {
                        time,
                        reason,
                        energy_history,
                        ..
                    } => Error::NonConvergence {
                        step: n,
                        time,
                        reason,
                        energy_history,
                    },
                    Error::Solver { .. } | Error::Constraint(_) => Error::NonConvergence {
                        step: n,
                        time: t.as_f64(),
                        reason: f.error.to_string(),
                        energy_history: f.energy_history.iter().map(|x| x.as_f64()).collect(),
                    },
                    other => other,
                })?;
            steps.truncate(n);
            steps.push(StepRecord {
                n,
                state: outcome.state,
                energy: outcome.energy,
                outer_iterations: outcome.outer_iterations,
                inner_iterations: outcome.inner_iterations,
                backtracked_from: from,
            });
            if sc.backtracking {
                if let Some(j) = self.backtracking_scan(&steps, n)? {
                    if restarts[j] < sc.caps.restart_budget {
                        restarts[j] += 1;
                        restart_log.push(BacktrackEvent {
                            from_step: n,
                            to_step: j,
                        });
                        let factor = steps[j].state.t / steps[n].state.t;
                        let scaled = rescale_state(&steps[n].state, factor);
                        pending = Some((
                            StepInit {
                                u: Some(scaled.u),
                                v: Some(steps[n].state.v.clone()),
                                p: Some(steps[j - 1].state.p.clone()),
                            },
                            n,
                        ));
                        n = j;
                        continue;
                    }
                    diagnostics.push(format!(
                        "restart budget exhausted: step {n} violates energetic consistency with step {j}"
                    ));
                }
            }
            n += 1;
        }
        Ok(EvolutionTrace {
            scenario: sc.clone(),
            steps,
            restart_log,
            diagnostics,
        })
    }
}

/// Alternate minimization of one step of `scenario` from `prev`.
pub fn altmin_step<T: Real>(
    prev: &State<T>,
    t: T,
    scenario: &Scenario<T>,
) -> Result<StepOutcome<T>> {
    let problem = Problem::new(scenario.clone())?;
    Ok(problem.altmin_step(prev, t, StepInit::default())?)
}

pub fn run_evolution<T: Real>(scenario: &Scenario<T>) -> Result<EvolutionTrace<T>> {
    Problem::new(scenario.clone())?.run()
}

/// First index `j < n` violating energetic consistency, if any.
pub fn backtracking_scan<T: Real>(trace: &EvolutionTrace<T>, n: usize) -> Result<Option<usize>> {
    Problem::new(trace.scenario.clone())?.backtracking_scan(&trace.steps, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Model;

    pub(crate) fn small_bar(tau: f64, backtracking: bool) -> Scenario<f64> {
        Scenario {
            name: "bar".into(),
            mesh: MeshSpec::Interval {
                length: 10.0,
                dx: 0.1,
            },
            params: MaterialParams::model0(4.0, tau, 0.094, 1e-6),
            final_time: 0.2,
            time_step: 0.05,
            loads: vec![
                BoundaryLoad::components("left", Some(0.0), None),
                BoundaryLoad::components("right", Some(10.0), None),
            ],
            phase_dirichlet: vec!["left".into(), "right".into()],
            tolerances: Tolerances::default(),
            caps: IterationCaps::default(),
            backtracking,
            plastic_method: PlasticMethod::Shrinkage,
        }
    }

    #[test]
    fn zero_load_is_a_fixed_point() {
        let sc = small_bar(1.5, false);
        let problem = Problem::new(sc).unwrap();
        let virgin = problem.initial_state().unwrap();
        let out = problem
            .altmin_step(&virgin, 0.0, StepInit::default())
            .unwrap();
        assert_eq!(out.outer_iterations, 1);
        assert_eq!(out.state.u, virgin.u);
        assert_eq!(out.state.v, virgin.v);
        assert_eq!(out.state.p, virgin.p);
    }

    #[test]
    fn elastic_step_matches_single_solves() {
        let sc = small_bar(1.5, false);
        let problem = Problem::new(sc).unwrap();
        let virgin = problem.initial_state().unwrap();
        let out = problem
            .altmin_step(&virgin, 0.1, StepInit::default())
            .unwrap();
        for (i, x) in problem.mesh.nodes().iter().enumerate() {
            assert!((out.state.u[i] - 0.1 * x[0]).abs() < 1e-3);
        }
        assert!(out.state.p.iter().all(|q| *q == Sym2::zero()));
        let vmin = out.state.v.iter().cloned().fold(1.0, f64::min);
        assert!(vmin < 1.0 && 1.0 - vmin < 1e-2);
        for w in out.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn rescale_examples() {
        let mesh = Mesh::interval(10.0, 1.0).unwrap();
        let mut s = State::virgin(&mesh, 2.0);
        for (i, x) in mesh.nodes().iter().enumerate() {
            s.u[i] = 2.0 * x[0];
        }
        s.p.iter_mut().for_each(|q| *q = Sym2::axial(0.3));
        s.v[4] = 0.2;
        assert_eq!(rescale_state(&s, 1.0), s);
        let z = rescale_state(&s, 0.0);
        assert!(z.u.iter().all(|&x| x == 0.0) && z.p.iter().all(|q| *q == Sym2::zero()));
        assert_eq!(z.v, s.v);
        let half = rescale_state(&s, 0.5);
        for (i, x) in mesh.nodes().iter().enumerate() {
            assert_eq!(half.u[i], x[0]);
        }
    }

    #[test]
    fn short_runs_are_deterministic_and_irreversible() {
        let sc = small_bar(1.5, true);
        let a = run_evolution(&sc).unwrap();
        let b = run_evolution(&sc).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps.len(), 5);
        for w in a.steps.windows(2) {
            for (x, y) in w[1].state.v.iter().zip(&w[0].state.v) {
                assert!(*x <= *y + 1e-14);
            }
        }
        assert_eq!(backtracking_scan(&a, 1).unwrap(), None);
    }

    #[test]
    fn scenario_validation() {
        let mut sc = small_bar(1.5, false);
        sc.time_step = 0.03;
        assert!(sc.validate().is_err());
        let mut sc = small_bar(1.5, false);
        sc.params.model = Model::Model1;
        assert!(sc.validate().is_err());
        let mut sc = small_bar(1.5, false);
        sc.loads.push(BoundaryLoad::clamped("bottom"));
        assert!(Problem::new(sc).is_err());
    }
}
