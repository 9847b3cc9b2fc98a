//! Discrete energy functionals on P1 (u, v) / P0 (p) fields.
//!
//! Strains, phase-field gradients and plastic strains are element-wise
//! constant. Terms quadratic in the phase field (`v²` in the degraded
//! stiffness and `(1 − v)²` in the surface energy) are integrated with a
//! symmetric rule whose element matrix is the average of the consistent and
//! lumped P1 mass matrices; all other integrands are constant per element.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{Elasticity, MaterialParams, Model};
use crate::mesh::Mesh;
use crate::scalar::{pairwise_sum, Real};
use crate::tensor::Sym2;

/// One time slice of the evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State<T> {
    pub t: T,
    /// Nodal displacement, `dim` interleaved components per node.
    pub u: Vec<T>,
    /// Nodal phase field in `[0, 1]`.
    pub v: Vec<T>,
    /// Element-wise plastic strain.
    pub p: Vec<Sym2<T>>,
}

impl<T: Real> State<T> {
    /// Crack-free, unstrained state at time `t`.
    pub fn virgin(mesh: &Mesh<T>, t: T) -> Self {
        State {
            t,
            u: vec![T::zero(); mesh.num_dofs()],
            v: vec![T::one(); mesh.num_nodes()],
            p: vec![Sym2::zero(); mesh.num_elements()],
        }
    }

    pub fn check_shape(&self, mesh: &Mesh<T>) -> Result<()> {
        if self.u.len() != mesh.num_dofs() {
            return Err(Error::Shape(format!(
                "displacement has {} entries, mesh has {} dofs",
                self.u.len(),
                mesh.num_dofs()
            )));
        }
        if self.v.len() != mesh.num_nodes() {
            return Err(Error::Shape(format!(
                "phase field has {} entries, mesh has {} nodes",
                self.v.len(),
                mesh.num_nodes()
            )));
        }
        if self.p.len() != mesh.num_elements() {
            return Err(Error::Shape(format!(
                "plastic strain has {} entries, mesh has {} elements",
                self.p.len(),
                mesh.num_elements()
            )));
        }
        Ok(())
    }

    /// Elastic strain `Eu − p` on element `e`.
    pub fn elastic_strain(&self, mesh: &Mesh<T>, e: usize) -> Sym2<T> {
        strain(mesh, &self.u, e) - self.p[e]
    }
}

/// Symmetric gradient of a P1 displacement on element `e`.
pub fn strain<T: Real>(mesh: &Mesh<T>, u: &[T], e: usize) -> Sym2<T> {
    let dim = mesh.dim();
    let mut eps = Sym2::zero();
    for (a, &node) in mesh.element(e).iter().enumerate() {
        let g = mesh.gradients(e)[a];
        let ua = if dim == 1 {
            [u[node], T::zero()]
        } else {
            [u[2 * node], u[2 * node + 1]]
        };
        eps += Sym2::sym_outer(ua, g);
    }
    eps
}

/// Gradient of a P1 scalar field on element `e`.
pub fn scalar_gradient<T: Real>(mesh: &Mesh<T>, v: &[T], e: usize) -> [T; 2] {
    let mut g = [T::zero(); 2];
    for (a, &node) in mesh.element(e).iter().enumerate() {
        let ga = mesh.gradients(e)[a];
        g[0] += ga[0] * v[node];
        g[1] += ga[1] * v[node];
    }
    g
}

/// Diagonal and off-diagonal entries (per unit measure) of the element
/// matrix used for integrals of products of P1 functions.
pub fn mass_weights<T: Real>(dim: usize) -> (T, T) {
    if dim == 1 {
        (T::lit(5.0 / 12.0), T::lit(1.0 / 12.0))
    } else {
        (T::lit(0.25), T::lit(1.0 / 24.0))
    }
}

/// `∫_e v²` with the phase-field quadrature rule.
pub fn square_integral<T: Real>(mesh: &Mesh<T>, v: &[T], e: usize) -> T {
    let (d, o) = mass_weights::<T>(mesh.dim());
    let nodes = mesh.element(e);
    let mut acc = T::zero();
    for (a, &i) in nodes.iter().enumerate() {
        for (b, &j) in nodes.iter().enumerate() {
            let w = if a == b { d } else { o };
            acc += w * v[i] * v[j];
        }
    }
    acc * mesh.measure(e)
}

/// Barycentric mean of a P1 field on element `e`.
pub fn mean_value<T: Real>(mesh: &Mesh<T>, v: &[T], e: usize) -> T {
    let nodes = mesh.element(e);
    let s: T = nodes.iter().map(|&i| v[i]).sum();
    s / T::from_usize(nodes.len()).unwrap()
}

/// Element average of the degraded stiffness `v² + η`.
pub fn element_stiffness_factor<T: Real>(mesh: &Mesh<T>, v: &[T], eta: T, e: usize) -> T {
    square_integral(mesh, v, e) / mesh.measure(e) + eta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub elastic: T,
    pub plastic_increment: T,
    pub hardening: T,
    pub viscoelastic_increment: T,
    pub viscoplastic_increment: T,
    pub surface: T,
    pub total: T,
    pub model: Model,
}

impl<T: Real> EnergyBreakdown<T> {
    pub fn zero(model: Model) -> Self {
        EnergyBreakdown {
            elastic: T::zero(),
            plastic_increment: T::zero(),
            hardening: T::zero(),
            viscoelastic_increment: T::zero(),
            viscoplastic_increment: T::zero(),
            surface: T::zero(),
            total: T::zero(),
            model,
        }
    }

    /// Sum of the components that belong to `model`.
    pub fn model_sum(&self) -> T {
        let base = self.elastic + self.plastic_increment + self.surface;
        match self.model {
            Model::Model0 => base,
            Model::Model1 => base + self.viscoelastic_increment,
            Model::Model2 => base + self.viscoplastic_increment,
            Model::Model3 => base + self.hardening,
        }
    }

    /// Stored (free) energy: elastic + surface, plus hardening for Model 3.
    pub fn free_energy(&self) -> T {
        let w = self.elastic + self.surface;
        if self.model.has_hardening() {
            w + self.hardening
        } else {
            w
        }
    }
}

fn check_len<T>(what: &str, xs: &[T], n: usize) -> Result<()> {
    if xs.len() != n {
        return Err(Error::Shape(format!(
            "{what} has {} entries, expected {n}",
            xs.len()
        )));
    }
    Ok(())
}

fn check_time_step<T: Real>(h: T) -> Result<()> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::invalid(
            "h",
            format!("time step must be positive, got {h}"),
        ));
    }
    Ok(())
}

/// Energy evaluator with the elasticity tensor resolved once.
#[derive(Debug, Clone)]
pub struct EnergyModel<'a, T> {
    pub mesh: &'a Mesh<T>,
    pub params: MaterialParams<T>,
    pub elasticity: Elasticity<T>,
    pub h: T,
}

impl<'a, T: Real> EnergyModel<'a, T> {
    pub fn new(mesh: &'a Mesh<T>, params: &MaterialParams<T>, h: T) -> Result<Self> {
        if params.model.has_viscoelasticity() || params.model.has_viscoplasticity() {
            check_time_step(h)?;
        }
        Ok(EnergyModel {
            mesh,
            params: *params,
            elasticity: params.elasticity(mesh.dim())?,
            h,
        })
    }

    pub fn elastic(&self, state: &State<T>) -> T {
        let mesh = self.mesh;
        let terms: Vec<T> = (0..mesh.num_elements())
            .map(|e| {
                let eps = state.elastic_strain(mesh, e);
                let a = element_stiffness_factor(mesh, &state.v, self.params.eta, e);
                T::half() * mesh.measure(e) * a * self.elasticity.energy_density(&eps)
            })
            .collect();
        pairwise_sum(&terms)
    }

    pub fn total(&self, state: &State<T>, prev: &State<T>) -> Result<EnergyBreakdown<T>> {
        state.check_shape(self.mesh)?;
        prev.check_shape(self.mesh)?;
        let p = &self.params;
        let mesh = self.mesh;
        let mut b = EnergyBreakdown::zero(p.model);
        b.elastic = self.elastic(state);
        b.plastic_increment =
            plastic_dissipation_increment(mesh, &state.p, &prev.p, p.yield_stress)?;
        b.surface = surface_energy(mesh, &state.v, p.epsilon)?;
        match p.model {
            Model::Model0 => {}
            Model::Model1 => {
                b.viscoelastic_increment =
                    viscoelastic_increment(mesh, &state.u, &prev.u, p.beta1, self.h)?
            }
            Model::Model2 => {
                b.viscoplastic_increment =
                    viscoplastic_increment(mesh, &state.p, &prev.p, p.beta2, self.h)?
            }
            Model::Model3 => b.hardening = hardening_energy(mesh, &state.p, p.hardening)?,
        }
        b.total = b.model_sum();
        Ok(b)
    }
}

/// `½ ∫ (v² + η) A(Eu − p) : (Eu − p)`.
pub fn elastic_energy<T: Real>(
    mesh: &Mesh<T>,
    params: &MaterialParams<T>,
    state: &State<T>,
) -> Result<T> {
    state.check_shape(mesh)?;
    let model = EnergyModel {
        mesh,
        params: *params,
        elasticity: params.elasticity(mesh.dim())?,
        h: T::one(),
    };
    Ok(model.elastic(state))
}

/// `∫ τ |p − p_prev|`.
pub fn plastic_dissipation_increment<T: Real>(
    mesh: &Mesh<T>,
    p: &[Sym2<T>],
    p_prev: &[Sym2<T>],
    tau: T,
) -> Result<T> {
    check_len("p", p, mesh.num_elements())?;
    check_len("p_prev", p_prev, mesh.num_elements())?;
    let terms: Vec<T> = (0..mesh.num_elements())
        .map(|e| {
            let n = (p[e] - p_prev[e]).norm();
            // guard against 0·∞ for an infinite yield stress
            if n == T::zero() {
                T::zero()
            } else {
                mesh.measure(e) * tau * n
            }
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `½ ∫ k |p|²`.
pub fn hardening_energy<T: Real>(mesh: &Mesh<T>, p: &[Sym2<T>], k: T) -> Result<T> {
    check_len("p", p, mesh.num_elements())?;
    let terms: Vec<T> = (0..mesh.num_elements())
        .map(|e| T::half() * mesh.measure(e) * k * p[e].norm_sq())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `(β₁ / 2h) ∫ |Eu − Eu_prev|²`.
pub fn viscoelastic_increment<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    u_prev: &[T],
    beta1: T,
    h: T,
) -> Result<T> {
    check_time_step(h)?;
    check_len("u", u, mesh.num_dofs())?;
    check_len("u_prev", u_prev, mesh.num_dofs())?;
    let terms: Vec<T> = (0..mesh.num_elements())
        .map(|e| mesh.measure(e) * (strain(mesh, u, e) - strain(mesh, u_prev, e)).norm_sq())
        .collect();
    Ok(beta1 / (T::lit(2.0) * h) * pairwise_sum(&terms))
}

/// `(β₂ / 2h) ∫ |p − p_prev|²`.
pub fn viscoplastic_increment<T: Real>(
    mesh: &Mesh<T>,
    p: &[Sym2<T>],
    p_prev: &[Sym2<T>],
    beta2: T,
    h: T,
) -> Result<T> {
    check_time_step(h)?;
    check_len("p", p, mesh.num_elements())?;
    check_len("p_prev", p_prev, mesh.num_elements())?;
    let terms: Vec<T> = (0..mesh.num_elements())
        .map(|e| mesh.measure(e) * (p[e] - p_prev[e]).norm_sq())
        .collect();
    Ok(beta2 / (T::lit(2.0) * h) * pairwise_sum(&terms))
}

/// `∫ ε |∇v|² + (1 − v)² / (4ε)`.
pub fn surface_energy<T: Real>(mesh: &Mesh<T>, v: &[T], epsilon: T) -> Result<T> {
    if !(epsilon > T::zero()) {
        return Err(Error::invalid(
            "epsilon",
            format!("must be > 0, got {epsilon}"),
        ));
    }
    check_len("v", v, mesh.num_nodes())?;
    let four_eps = T::lit(4.0) * epsilon;
    let terms: Vec<T> = (0..mesh.num_elements())
        .map(|e| {
            let m = mesh.measure(e);
            let g = scalar_gradient(mesh, v, e);
            let grad_sq = g[0] * g[0] + g[1] * g[1];
            // ∫(1-v)² = |e| - 2∫v + ∫v²
            let defect = m - T::lit(2.0) * m * mean_value(mesh, v, e) + square_integral(mesh, v, e);
            m * epsilon * grad_sq + defect.max(T::zero()) / four_eps
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Model-specific incremental energy of `state` given its predecessor.
pub fn total_energy<T: Real>(
    mesh: &Mesh<T>,
    params: &MaterialParams<T>,
    state: &State<T>,
    prev: &State<T>,
    h: T,
) -> Result<EnergyBreakdown<T>> {
    EnergyModel::new(mesh, params, h)?.total(state, prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bar() -> Mesh<f64> {
        Mesh::interval(10.0, 0.5).unwrap()
    }

    fn traction_params() -> MaterialParams<f64> {
        MaterialParams::model0(4.0, 1.5, 0.094, 1e-6)
    }

    fn affine_state(mesh: &Mesh<f64>, slope: f64) -> State<f64> {
        let mut s = State::virgin(mesh, slope);
        for (i, x) in mesh.nodes().iter().enumerate() {
            s.u[i] = slope * x[0];
        }
        s
    }

    #[test]
    fn elastic_energy_examples() {
        let mesh = bar();
        let params = traction_params();
        let zero = State::virgin(&mesh, 0.0);
        assert_eq!(elastic_energy(&mesh, &params, &zero).unwrap(), 0.0);

        let s = affine_state(&mesh, 1.0);
        assert_relative_eq!(
            elastic_energy(&mesh, &params, &s).unwrap(),
            20.00002,
            max_relative = 1e-12
        );

        let mut s = s;
        s.p.iter_mut().for_each(|p| *p = Sym2::axial(0.5));
        assert_relative_eq!(
            elastic_energy(&mesh, &params, &s).unwrap(),
            5.000005,
            max_relative = 1e-12
        );
    }

    #[test]
    fn plastic_dissipation_examples() {
        let mesh = bar();
        let p0 = vec![Sym2::axial(0.3); mesh.num_elements()];
        assert_eq!(
            plastic_dissipation_increment(&mesh, &p0, &p0, 1.5).unwrap(),
            0.0
        );
        let p1: Vec<_> = p0.iter().map(|p| *p + Sym2::axial(0.1)).collect();
        assert_relative_eq!(
            plastic_dissipation_increment(&mesh, &p1, &p0, 1.5).unwrap(),
            1.5,
            max_relative = 1e-12
        );

        let sq = Mesh::rectangle(1.0, 1.0, 0.25).unwrap();
        let q0 = vec![Sym2::zero(); sq.num_elements()];
        let q1 = vec![Sym2::new(0.1, 0.1, 0.0); sq.num_elements()];
        assert_relative_eq!(
            plastic_dissipation_increment(&sq, &q1, &q0, 1.0).unwrap(),
            0.02f64.sqrt(),
            max_relative = 1e-12
        );
        assert!(matches!(
            plastic_dissipation_increment(&sq, &q1[1..], &q0, 1.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn hardening_examples() {
        let mesh = bar();
        let p = vec![Sym2::axial(0.2); mesh.num_elements()];
        assert_relative_eq!(
            hardening_energy(&mesh, &p, 0.5).unwrap(),
            0.1,
            max_relative = 1e-12
        );
        let p2: Vec<_> = p.iter().map(|q| q.scale(2.0)).collect();
        assert_relative_eq!(
            hardening_energy(&mesh, &p2, 0.5).unwrap(),
            4.0 * hardening_energy(&mesh, &p, 0.5).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn viscous_increment_examples() {
        let mesh = bar();
        let u0 = affine_state(&mesh, 0.0).u;
        let u1 = affine_state(&mesh, 0.025).u;
        assert_eq!(
            viscoelastic_increment(&mesh, &u1, &u1, 0.01, 0.025).unwrap(),
            0.0
        );
        let e = viscoelastic_increment(&mesh, &u1, &u0, 0.01, 0.025).unwrap();
        assert_relative_eq!(e, 0.00125, max_relative = 1e-12);
        let e2 = viscoelastic_increment(&mesh, &u1, &u0, 0.01, 0.05).unwrap();
        assert_relative_eq!(e2, 0.5 * e, max_relative = 1e-12);
        assert!(viscoelastic_increment(&mesh, &u1, &u0, 0.01, 0.0).is_err());

        let p0 = vec![Sym2::zero(); mesh.num_elements()];
        let p1 = vec![Sym2::axial(0.01); mesh.num_elements()];
        let vp = viscoplastic_increment(&mesh, &p1, &p0, 0.1, 0.025).unwrap();
        assert_relative_eq!(vp, 0.002, max_relative = 1e-12);
        assert_eq!(
            vp,
            viscoplastic_increment(&mesh, &p0, &p1, 0.1, 0.025).unwrap()
        );
    }

    #[test]
    fn surface_energy_examples() {
        let mesh = bar();
        assert_eq!(
            surface_energy(&mesh, &vec![1.0; mesh.num_nodes()], 0.094).unwrap(),
            0.0
        );
        let cracked = surface_energy(&mesh, &vec![0.0; mesh.num_nodes()], 0.094).unwrap();
        assert_relative_eq!(cracked, 10.0 / (4.0 * 0.094), max_relative = 1e-12);
        assert!(surface_energy(&mesh, &vec![0.0; mesh.num_nodes()], 0.0).is_err());
    }

    #[test]
    fn optimal_profile_costs_unit_surface_energy() {
        let eps = 0.094;
        let length: f64 = 4.0;
        let mesh = Mesh::interval(length, eps / 6.0).unwrap();
        let x0: f64 = 0.5 * length;
        let v: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|x| 1.0 - (-(x[0] - x0).abs() / (2.0 * eps)).exp())
            .collect();
        let es = surface_energy(&mesh, &v, eps).unwrap();
        assert!((es - 1.0).abs() < 0.05, "E_S = {es}");
    }

    #[test]
    fn total_energy_examples() {
        let mesh = bar();
        let params = traction_params();
        let virgin = State::virgin(&mesh, 0.0);
        let b = total_energy(&mesh, &params, &virgin, &virgin, 0.025).unwrap();
        assert_eq!(b.total, 0.0);

        let s = affine_state(&mesh, 1.0);
        let b = total_energy(&mesh, &params, &s, &virgin, 0.025).unwrap();
        assert_eq!(b.total, b.elastic + b.plastic_increment + b.surface);

        let mut p3 = params;
        p3.model = Model::Model3;
        p3.hardening = 0.5;
        let b = total_energy(&mesh, &p3, &s, &virgin, 0.025).unwrap();
        assert_relative_eq!(b.total, 20.00002, max_relative = 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let mesh = Mesh::<f32>::interval(10.0, 0.5).unwrap();
        let params = MaterialParams::<f32>::model0(4.0, 1.5, 0.094, 1e-6);
        let mut s = State::virgin(&mesh, 1.0);
        for (i, x) in mesh.nodes().iter().enumerate() {
            s.u[i] = x[0];
        }
        let e = elastic_energy(&mesh, &params, &s).unwrap();
        assert!((e - 20.00002).abs() < 1e-4);
    }
}
