//! Plastic-strain subproblem. It decouples into one strictly convex problem
//! per element:
//!
//! `min_p ½a A(ε − p):(ε − p) + τ|p − p₀| + (γ/2)|p − p₀|² + (k/2)|p|²`
//!
//! With `d = p − p₀` the smooth part has Hessian `C = aA + (γ + k)I`, which
//! is diagonal in the deviatoric/spherical split. The minimizer is `d = 0`
//! when the driving force `s = aA(ε − p₀) − k p₀` lies in the yield ball and
//! otherwise solves `s − C d = τ d/|d|`, a scalar equation in `r = |d|`.

use serde::{Deserialize, Serialize};

use crate::energy::{element_stiffness_factor, strain};
use crate::error::{Error, Result};
use crate::material::{Elasticity, MaterialParams};
use crate::mesh::Mesh;
use crate::scalar::Real;
use crate::tensor::Sym2;

use super::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PlasticMethod {
    /// Closed-form radial return with a scalar Newton solve.
    #[default]
    Shrinkage,
    /// Proximal gradient iteration; slow, kept for cross-checking.
    GradientDescent,
}

/// Data of one element's plastic update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticElement<T> {
    /// Total strain `Eu`.
    pub strain: Sym2<T>,
    /// Plastic strain at the previous time step.
    pub p_prev: Sym2<T>,
    /// Degraded stiffness factor `v̄² + η`.
    pub stiffness: T,
    pub elasticity: Elasticity<T>,
    pub tau: T,
    /// Visco-plastic weight `β₂/h`.
    pub viscous: T,
    pub hardening: T,
}

impl<T: Real> PlasticElement<T> {
    fn moduli(&self) -> (T, T) {
        let gamma = self.viscous + self.hardening;
        (
            self.stiffness * self.elasticity.deviatoric_modulus() + gamma,
            self.stiffness * self.elasticity.spherical_modulus() + gamma,
        )
    }

    fn apply_c(&self, d: &Sym2<T>) -> Sym2<T> {
        let (c1, c2) = self.moduli();
        if self.elasticity.dim == 1 {
            return d.scale(c1);
        }
        d.deviator().scale(c1) + d.spherical().scale(c2)
    }

    /// Driving force at `d = 0`.
    pub fn trial_force(&self) -> Sym2<T> {
        self.elasticity
            .apply(&(self.strain - self.p_prev))
            .scale(self.stiffness)
            - self.p_prev.scale(self.hardening)
    }

    /// Element objective.
    pub fn objective(&self, p: &Sym2<T>) -> T {
        let e = self.strain - *p;
        let d = *p - self.p_prev;
        let half = T::half();
        let dn = d.norm();
        let diss = if dn == T::zero() {
            T::zero()
        } else {
            self.tau * dn
        };
        half * self.stiffness * self.elasticity.energy_density(&e)
            + diss
            + half * self.viscous * d.norm_sq()
            + half * self.hardening * p.norm_sq()
    }

    /// First-order optimality residual of `p`.
    pub fn kkt_residual(&self, p: &Sym2<T>) -> T {
        let d = *p - self.p_prev;
        let f = self.trial_force() - self.apply_c(&d);
        let dn = d.norm();
        if dn == T::zero() {
            (f.norm() - self.tau).max(T::zero())
        } else {
            (f - d.scale(self.tau / dn)).norm()
        }
    }
}

fn radial_return<T: Real>(el: &PlasticElement<T>) -> Result<(Sym2<T>, usize)> {
    let s = el.trial_force();
    let tau = el.tau;
    let sn = s.norm();
    if sn <= tau {
        return Ok((el.p_prev, 0));
    }
    let (c1, c2) = el.moduli();
    if !(c1 > T::zero()) || !(c2 > T::zero()) {
        return Err(Error::invalid(
            "stiffness",
            "plastic Hessian is not positive definite",
        ));
    }
    if el.elasticity.dim == 1 {
        let d = s.scale((sn - tau) / (c1 * sn));
        return Ok((el.p_prev + d, 0));
    }
    let (sdev, ssph) = (s.deviator(), s.spherical());
    let (a1, a2) = (sdev.norm_sq(), ssph.norm_sq());
    let phi = |r: T| {
        a1 / ((c1 * r + tau) * (c1 * r + tau)) + a2 / ((c2 * r + tau) * (c2 * r + tau)) - T::one()
    };
    let dphi = |r: T| {
        let two = T::lit(2.0);
        -two * c1 * a1 / (c1 * r + tau).powi(3) - two * c2 * a2 / (c2 * r + tau).powi(3)
    };
    // phi is convex and decreasing; Newton from a point left of the root
    // increases monotonically onto it.
    let mut r = ((sn - tau) / c1.max(c2)).max(T::zero());
    let mut iterations = 0;
    for it in 1..=100 {
        iterations = it;
        let f = phi(r);
        let step = f / dphi(r);
        let next = r - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - r).abs() <= T::epsilon() * T::lit(4.0) * next.abs();
        r = next.max(T::zero());
        if done || f <= T::zero() {
            break;
        }
    }
    let d = sdev.scale(r / (c1 * r + tau)) + ssph.scale(r / (c2 * r + tau));
    Ok((el.p_prev + d, iterations))
}

fn proximal_gradient<T: Real>(el: &PlasticElement<T>, tol: T, max_iter: usize) -> (Sym2<T>, usize) {
    let s = el.trial_force();
    let (c1, c2) = el.moduli();
    let step = T::one() / c1.max(c2);
    let mut d = Sym2::zero();
    for it in 0..max_iter {
        if el.kkt_residual(&(el.p_prev + d)) <= tol {
            return (el.p_prev + d, it);
        }
        let y = d + (s - el.apply_c(&d)).scale(step);
        let yn = y.norm();
        let thr = el.tau * step;
        d = if yn <= thr {
            Sym2::zero()
        } else {
            y.scale((yn - thr) / yn)
        };
    }
    (el.p_prev + d, max_iter)
}

/// Solves one element's plastic update; returns `(p, iterations, residual)`.
pub fn plastic_element_update<T: Real>(
    el: &PlasticElement<T>,
    method: PlasticMethod,
) -> Result<(Sym2<T>, usize, T)> {
    let tol = kkt_tolerance(el);
    let (p, it) = match method {
        PlasticMethod::Shrinkage => radial_return(el)?,
        PlasticMethod::GradientDescent => proximal_gradient(el, tol, 1_000_000),
    };
    Ok((p, it, el.kkt_residual(&p)))
}

fn kkt_tolerance<T: Real>(el: &PlasticElement<T>) -> T {
    let base = T::lit(1e-9).max(T::epsilon() * T::lit(1e3));
    base * (T::one() + el.tau + el.trial_force().norm())
}

/// Minimizes the total energy in `p` with `u` and `v` frozen.
pub fn solve_plastic<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    v: &[T],
    p_prev: &[Sym2<T>],
    params: &MaterialParams<T>,
    h: T,
) -> Result<(Vec<Sym2<T>>, SolveReport)> {
    solve_plastic_with(mesh, u, v, p_prev, params, h, PlasticMethod::Shrinkage)
}

pub fn solve_plastic_with<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    v: &[T],
    p_prev: &[Sym2<T>],
    params: &MaterialParams<T>,
    h: T,
    method: PlasticMethod,
) -> Result<(Vec<Sym2<T>>, SolveReport)> {
    if u.len() != mesh.num_dofs()
        || v.len() != mesh.num_nodes()
        || p_prev.len() != mesh.num_elements()
    {
        return Err(Error::Shape(
            "plastic solve: field sizes do not match the mesh".into(),
        ));
    }
    let beta2 = params.active_beta2();
    let viscous = if beta2 > T::zero() {
        if !(h > T::zero()) {
            return Err(Error::invalid(
                "h",
                "time step must be positive for visco-plastic models",
            ));
        }
        beta2 / h
    } else {
        T::zero()
    };
    let elasticity = params.elasticity(mesh.dim())?;
    let mut out = Vec::with_capacity(mesh.num_elements());
    let mut iterations = 0;
    let mut worst = (T::zero(), 0usize);
    let mut max_residual = T::zero();
    let mut failed = false;
    for e in 0..mesh.num_elements() {
        let el = PlasticElement {
            strain: strain(mesh, u, e),
            p_prev: p_prev[e],
            stiffness: element_stiffness_factor(mesh, v, params.eta, e),
            elasticity,
            tau: params.yield_stress,
            viscous,
            hardening: params.active_hardening(),
        };
        let (p, it, res) = plastic_element_update(&el, method)?;
        iterations = iterations.max(it);
        let scaled = res / kkt_tolerance(&el);
        if scaled > worst.0 || !res.is_finite() {
            worst = (scaled, e);
        }
        max_residual = max_residual.max(res);
        failed |= scaled > T::one() || !res.is_finite();
        out.push(p);
    }
    if failed {
        return Err(Error::Solver {
            solver: "plastic",
            iterations,
            residual: max_residual.as_f64(),
            element: Some(worst.1),
        });
    }
    Ok((
        out,
        SolveReport {
            iterations,
            residual: max_residual.as_f64(),
            converged: true,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bar_element(eu: f64, tau: f64, k: f64) -> PlasticElement<f64> {
        PlasticElement {
            strain: Sym2::axial(eu),
            p_prev: Sym2::zero(),
            stiffness: 1.0,
            elasticity: Elasticity::new(4.0, 0.0, 1).unwrap(),
            tau,
            viscous: 0.0,
            hardening: k,
        }
    }

    #[test]
    fn one_dimensional_examples() {
        for method in [PlasticMethod::Shrinkage, PlasticMethod::GradientDescent] {
            let (p, _, _) = plastic_element_update(&bar_element(0.3, 1.5, 0.0), method).unwrap();
            assert_eq!(p, Sym2::zero());
            let (p, _, _) = plastic_element_update(&bar_element(1.0, 1.5, 0.0), method).unwrap();
            assert_relative_eq!(p.xx, 0.625, max_relative = 1e-9);
            let (p, _, _) = plastic_element_update(&bar_element(1.0, 1.5, 0.5), method).unwrap();
            assert_relative_eq!(p.xx, 2.5 / 4.5, max_relative = 1e-9);
            assert_eq!((p.yy, p.xy), (0.0, 0.0));
        }
    }

    #[test]
    fn plane_strain_update_satisfies_flow_rule() {
        let el = PlasticElement {
            strain: Sym2::new(0.3, -0.1, 0.2),
            p_prev: Sym2::new(0.01, 0.0, -0.02),
            stiffness: 0.7,
            elasticity: Elasticity::new(10.0, 0.252, 2).unwrap(),
            tau: 1.0,
            viscous: 0.5,
            hardening: 2.0,
        };
        let (p, _, res) = plastic_element_update(&el, PlasticMethod::Shrinkage).unwrap();
        assert!(res < 1e-12, "residual {res}");
        let (q, _, _) = plastic_element_update(&el, PlasticMethod::GradientDescent).unwrap();
        assert!((p - q).norm() < 1e-8);
        // perturbations never decrease the objective
        let f0 = el.objective(&p);
        for dir in [
            Sym2::new(1.0, 0.0, 0.0),
            Sym2::new(0.0, 1.0, 0.0),
            Sym2::new(0.0, 0.0, 1.0),
        ] {
            for s in [-1e-4, 1e-4] {
                assert!(el.objective(&(p + dir.scale(s))) >= f0 - 1e-14);
            }
        }
    }

    #[test]
    fn zero_yield_stress_is_smooth_projection() {
        let mut el = bar_element(1.0, 0.0, 0.0);
        el.hardening = 1.0;
        let (p, _, _) = plastic_element_update(&el, PlasticMethod::Shrinkage).unwrap();
        assert_relative_eq!(p.xx, 0.8, max_relative = 1e-12);
    }

    #[test]
    fn field_solve_on_bar() {
        let mesh = Mesh::interval(10.0, 1.0).unwrap();
        let params = MaterialParams::model0(4.0, 1.5, 0.094, 1e-6);
        let u: Vec<f64> = mesh.nodes().iter().map(|x| x[0]).collect();
        let v = vec![1.0; mesh.num_nodes()];
        let (p, rep) =
            solve_plastic(&mesh, &u, &v, &vec![Sym2::zero(); 10], &params, 0.025).unwrap();
        assert!(rep.converged);
        for q in p {
            assert_relative_eq!(q.xx, 1.0 - 1.5 / (4.0 * (1.0 + 1e-6)), max_relative = 1e-12);
        }
    }
}
