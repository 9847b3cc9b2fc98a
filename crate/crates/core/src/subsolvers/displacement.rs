//! Displacement subproblem: a linear SPD solve with Dirichlet constraints.

use crate::energy::{element_stiffness_factor, strain};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, SymBand};
use crate::material::{Elasticity, MaterialParams};
use crate::mesh::Mesh;
use crate::scalar::Real;
use crate::tensor::Sym2;

use super::{DirichletData, SolveReport};

/// Unit strains of the element dofs, paired with their global indices.
fn element_modes<T: Real>(mesh: &Mesh<T>, e: usize) -> Vec<(usize, Sym2<T>)> {
    let dim = mesh.dim();
    let mut out = Vec::with_capacity(dim * 3);
    for (a, &node) in mesh.element(e).iter().enumerate() {
        let g = mesh.gradients(e)[a];
        for c in 0..dim {
            let mut unit = [T::zero(); 2];
            unit[c] = T::one();
            out.push((node * dim + c, Sym2::sym_outer(unit, g)));
        }
    }
    out
}

struct Coefficients<T> {
    elasticity: Elasticity<T>,
    /// Per-element degraded stiffness factor `v̄² + η`.
    stiffness: Vec<T>,
    /// Viscous weight `β₁ / h` (zero unless the model is visco-elastic).
    viscous: T,
}

impl<T: Real> Coefficients<T> {
    fn new(mesh: &Mesh<T>, v: &[T], params: &MaterialParams<T>, h: T) -> Result<Self> {
        let beta1 = params.active_beta1();
        let viscous = if beta1 > T::zero() {
            if !(h > T::zero()) {
                return Err(Error::invalid(
                    "h",
                    "time step must be positive for visco-elastic models",
                ));
            }
            beta1 / h
        } else {
            T::zero()
        };
        Ok(Coefficients {
            elasticity: params.elasticity(mesh.dim())?,
            stiffness: (0..mesh.num_elements())
                .map(|e| element_stiffness_factor(mesh, v, params.eta, e))
                .collect(),
            viscous,
        })
    }

    fn apply(&self, e: usize, x: &Sym2<T>) -> Sym2<T> {
        self.elasticity.apply(x).scale(self.stiffness[e]) + x.scale(self.viscous)
    }
}

fn check_inputs<T: Real>(mesh: &Mesh<T>, v: &[T], p: &[Sym2<T>], u_prev: &[T]) -> Result<()> {
    if v.len() != mesh.num_nodes()
        || p.len() != mesh.num_elements()
        || u_prev.len() != mesh.num_dofs()
    {
        return Err(Error::Shape(format!(
            "displacement solve: got v/p/u_prev of sizes {}/{}/{} for {} nodes, {} elements",
            v.len(),
            p.len(),
            u_prev.len(),
            mesh.num_nodes(),
            mesh.num_elements()
        )));
    }
    Ok(())
}

/// Gradient of the total energy with respect to every displacement dof.
/// At constrained dofs this is the energy-consistent reaction force.
pub fn displacement_gradient<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    v: &[T],
    p: &[Sym2<T>],
    u_prev: &[T],
    params: &MaterialParams<T>,
    h: T,
) -> Result<Vec<T>> {
    check_inputs(mesh, v, p, u_prev)?;
    if u.len() != mesh.num_dofs() {
        return Err(Error::Shape("displacement has wrong length".into()));
    }
    let coef = Coefficients::new(mesh, v, params, h)?;
    Ok(gradient_with(mesh, &coef, u, p, u_prev))
}

fn gradient_with<T: Real>(
    mesh: &Mesh<T>,
    coef: &Coefficients<T>,
    u: &[T],
    p: &[Sym2<T>],
    u_prev: &[T],
) -> Vec<T> {
    let mut grad = vec![T::zero(); mesh.num_dofs()];
    for e in 0..mesh.num_elements() {
        let eps = strain(mesh, u, e);
        let mut stress = coef
            .elasticity
            .apply(&(eps - p[e]))
            .scale(coef.stiffness[e]);
        if coef.viscous > T::zero() {
            stress += (eps - strain(mesh, u_prev, e)).scale(coef.viscous);
        }
        let m = mesh.measure(e);
        for (dof, mode) in element_modes(mesh, e) {
            grad[dof] += m * mode.dot(&stress);
        }
    }
    grad
}

/// Minimizes the total energy in `u` with `v` and `p` frozen.
#[allow(clippy::too_many_arguments)]
pub fn solve_displacement<T: Real>(
    mesh: &Mesh<T>,
    v: &[T],
    p: &[Sym2<T>],
    u_prev: &[T],
    dirichlet: &DirichletData<T>,
    params: &MaterialParams<T>,
    h: T,
) -> Result<(Vec<T>, SolveReport)> {
    check_inputs(mesh, v, p, u_prev)?;
    if dirichlet.len() != mesh.num_dofs() {
        return Err(Error::Shape(
            "Dirichlet data does not match the mesh".into(),
        ));
    }
    if dirichlet.num_constrained() == 0 {
        return Err(Error::Constraint(
            "displacement problem has no Dirichlet dofs; rigid motions are undetermined".into(),
        ));
    }
    let coef = Coefficients::new(mesh, v, params, h)?;

    let ndof = mesh.num_dofs();
    let mut free_index = vec![usize::MAX; ndof];
    let mut free = Vec::new();
    for dof in 0..ndof {
        if dirichlet.value(dof).is_none() {
            free_index[dof] = free.len();
            free.push(dof);
        }
    }
    let mut u = vec![T::zero(); ndof];
    dirichlet.impose(&mut u);
    if free.is_empty() {
        return Ok((
            u,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        ));
    }

    let modes: Vec<Vec<(usize, Sym2<T>)>> = (0..mesh.num_elements())
        .map(|e| element_modes(mesh, e))
        .collect();
    let mut bw = 0;
    for em in &modes {
        for &(a, _) in em {
            for &(b, _) in em {
                let (fa, fb) = (free_index[a], free_index[b]);
                if fa != usize::MAX && fb != usize::MAX {
                    bw = bw.max(fa.abs_diff(fb));
                }
            }
        }
    }
    let mut k = SymBand::zeros(free.len(), bw);
    for (e, em) in modes.iter().enumerate() {
        let m = mesh.measure(e);
        for &(a, ma) in em {
            let fa = free_index[a];
            if fa == usize::MAX {
                continue;
            }
            let ca = coef.apply(e, &ma);
            for &(b, mb) in em {
                let fb = free_index[b];
                if fb == usize::MAX || fb > fa {
                    continue;
                }
                k.add(fa, fb, m * ca.dot(&mb));
            }
        }
    }

    let rhs: Vec<T> = {
        let g0 = gradient_with(mesh, &coef, &u, p, u_prev);
        free.iter().map(|&d| -g0[d]).collect()
    };
    let norm = |x: &[T]| x.iter().fold(T::zero(), |s, &y| s + y * y).sqrt();
    let rhs_norm = norm(&rhs);
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(100.0));
    let residual_of = |x: &[T]| {
        let mut r = vec![T::zero(); x.len()];
        k.matvec(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&rhs) {
            *ri = *bi - *ri;
        }
        r
    };

    let mut iterations = 1;
    let mut x = match k.clone().cholesky() {
        Some(chol) => {
            let mut x = chol.solve(&rhs);
            // one step of iterative refinement
            let r = residual_of(&x);
            let dx = chol.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += *di;
            }
            iterations += 1;
            x
        }
        None => vec![T::zero(); free.len()],
    };
    let mut rel = norm(&residual_of(&x)) / rhs_norm.max(T::min_positive_value());
    if rhs_norm == T::zero() {
        rel = T::zero();
    }
    if rel > tol {
        let out = conjugate_gradient(
            |a, b| k.matvec(a, b),
            &k.diagonal(),
            &rhs,
            &mut x,
            tol,
            20 * free.len() + 100,
        );
        iterations += out.iterations;
        rel = T::from_f64(out.relative_residual).unwrap();
        if !out.converged {
            return Err(Error::Solver {
                solver: "displacement",
                iterations,
                residual: out.relative_residual,
                element: None,
            });
        }
    }
    for (i, &dof) in free.iter().enumerate() {
        u[dof] = x[i];
    }
    Ok((
        u,
        SolveReport {
            iterations,
            residual: rel.as_f64(),
            converged: true,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Model;
    use crate::subsolvers::BoundaryLoad;
    use approx::assert_relative_eq;

    fn bar_setup(dx: f64) -> (Mesh<f64>, MaterialParams<f64>, Vec<BoundaryLoad<f64>>) {
        let mesh = Mesh::interval(10.0, dx).unwrap();
        let params = MaterialParams::model0(4.0, 1.5, 0.094, 1e-6);
        let loads = vec![
            BoundaryLoad::components("left", Some(0.0), None),
            BoundaryLoad::components("right", Some(10.0), None),
        ];
        (mesh, params, loads)
    }

    #[test]
    fn homogeneous_bar_is_affine() {
        let (mesh, params, loads) = bar_setup(0.1);
        let zeros = vec![0.0; mesh.num_dofs()];
        let v = vec![1.0; mesh.num_nodes()];
        let t = 0.37;
        let d = DirichletData::at_time(&mesh, &loads, t).unwrap();
        let (u, rep) = solve_displacement(
            &mesh,
            &v,
            &vec![Sym2::zero(); mesh.num_elements()],
            &zeros,
            &d,
            &params,
            0.025,
        )
        .unwrap();
        assert!(rep.converged && rep.residual <= 1e-10);
        for (i, x) in mesh.nodes().iter().enumerate() {
            assert!((u[i] - t * x[0]).abs() < 1e-12);
        }

        let d = DirichletData::at_time(&mesh, &loads, 1.0).unwrap();
        let p = vec![Sym2::axial(0.2); mesh.num_elements()];
        let (u, _) = solve_displacement(&mesh, &v, &p, &zeros, &d, &params, 0.025).unwrap();
        for (i, x) in mesh.nodes().iter().enumerate() {
            assert!((u[i] - x[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn viscoelastic_bar_stays_affine() {
        let (mesh, mut params, loads) = bar_setup(0.1);
        params.model = Model::Model1;
        params.beta1 = 0.01;
        let d = DirichletData::at_time(&mesh, &loads, 0.025).unwrap();
        let zeros = vec![0.0; mesh.num_dofs()];
        let v = vec![1.0; mesh.num_nodes()];
        let (u, _) = solve_displacement(
            &mesh,
            &v,
            &vec![Sym2::zero(); mesh.num_elements()],
            &zeros,
            &d,
            &params,
            0.025,
        )
        .unwrap();
        assert_relative_eq!(u[mesh.num_nodes() - 1], 0.25);
        for e in 0..mesh.num_elements() {
            assert!((strain(&mesh, &u, e).xx - 0.025).abs() < 1e-13);
        }
    }

    #[test]
    fn graded_stiffness_gives_constant_stress() {
        let (mesh, params, loads) = bar_setup(0.5);
        let v: Vec<f64> = mesh.nodes().iter().map(|x| 0.3 + 0.07 * x[0]).collect();
        let d = DirichletData::at_time(&mesh, &loads, 0.2).unwrap();
        let zeros = vec![0.0; mesh.num_dofs()];
        let p = vec![Sym2::zero(); mesh.num_elements()];
        let (u, _) = solve_displacement(&mesh, &v, &p, &zeros, &d, &params, 0.025).unwrap();
        // independent oracle: series springs, σ = Δu / Σ h_e/(a_e K)
        let compliance: f64 = (0..mesh.num_elements())
            .map(|e| {
                let (a, b) = (v[e], v[e + 1]);
                let a_e = (5.0 * a * a + 2.0 * a * b + 5.0 * b * b) / 12.0 + 1e-6;
                mesh.measure(e) / (a_e * 4.0)
            })
            .sum();
        let sigma = 2.0 / compliance;
        for e in 0..mesh.num_elements() {
            let a_e = element_stiffness_factor(&mesh, &v, 1e-6, e);
            assert_relative_eq!(
                a_e * 4.0 * strain(&mesh, &u, e).xx,
                sigma,
                max_relative = 1e-10
            );
        }
        let g = displacement_gradient(&mesh, &u, &v, &p, &zeros, &params, 0.025).unwrap();
        assert_relative_eq!(g[mesh.num_nodes() - 1], sigma, max_relative = 1e-10);
        assert_relative_eq!(g[0], -sigma, max_relative = 1e-10);
    }

    #[test]
    fn plate_in_uniaxial_strain() {
        let mesh = Mesh::rectangle(2.0, 1.0, 0.25).unwrap();
        let mut params = MaterialParams::model0(10.0, 1.0, 0.25, 1e-6);
        params.poisson = 0.252;
        let loads = vec![
            BoundaryLoad::components("left", Some(0.0), Some(0.0)),
            BoundaryLoad::components("right", Some(0.1), Some(0.0)),
            BoundaryLoad::components("bottom", None, Some(0.0)),
            BoundaryLoad::components("top", None, Some(0.0)),
        ];
        let d = DirichletData::at_time(&mesh, &loads, 1.0).unwrap();
        let v = vec![1.0; mesh.num_nodes()];
        let zeros = vec![0.0; mesh.num_dofs()];
        let p = vec![Sym2::zero(); mesh.num_elements()];
        let (u, rep): (Vec<f64>, _) =
            solve_displacement(&mesh, &v, &p, &zeros, &d, &params, 0.1).unwrap();
        assert!(rep.converged);
        for (i, x) in mesh.nodes().iter().enumerate() {
            assert!((u[2 * i] - 0.05 * x[0]).abs() < 1e-12);
            assert!(u[2 * i + 1].abs() < 1e-12);
        }
    }

    #[test]
    fn missing_dirichlet_is_a_constraint_error() {
        let (mesh, params, _) = bar_setup(1.0);
        let d = DirichletData::none(mesh.num_dofs());
        let r = solve_displacement(
            &mesh,
            &vec![1.0; mesh.num_nodes()],
            &vec![Sym2::zero(); mesh.num_elements()],
            &vec![0.0; mesh.num_dofs()],
            &d,
            &params,
            0.025,
        );
        assert!(matches!(r, Err(Error::Constraint(_))));
    }
}
