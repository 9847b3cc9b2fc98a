//! Phase-field subproblem: a convex quadratic `½vᵀHv − gᵀv` over the box
//! `0 ≤ v ≤ v_prev`, with `v = 1` pinned on Dirichlet nodes. Solved by
//! projected successive over-relaxation.

use crate::energy::{mass_weights, strain};
use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::scalar::Real;
use crate::tensor::Sym2;

use super::SolveReport;

/// Sparse symmetric system in compressed row storage.
struct PhaseSystem<T> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    diag: Vec<T>,
    rhs: Vec<T>,
}

impl<T: Real> PhaseSystem<T> {
    fn assemble(
        mesh: &Mesh<T>,
        u: &[T],
        p: &[Sym2<T>],
        params: &MaterialParams<T>,
    ) -> Result<Self> {
        let n = mesh.num_nodes();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for el in mesh.elements() {
            for &a in el {
                for &b in el {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let mut vals = vec![T::zero(); cols.len()];
        let mut rhs = vec![T::zero(); n];

        let elasticity = params.elasticity(mesh.dim())?;
        let eps = params.epsilon;
        let two = T::lit(2.0);
        let inv4eps = T::one() / (T::lit(4.0) * eps);
        let (wd, wo) = mass_weights::<T>(mesh.dim());
        for e in 0..mesh.num_elements() {
            let nodes = mesh.element(e);
            let nn = T::from_usize(nodes.len()).unwrap();
            let m = mesh.measure(e);
            let elastic = strain(mesh, u, e) - p[e];
            let c = T::half() * elasticity.energy_density(&elastic);
            let grads = mesh.gradients(e);
            for (a, &i) in nodes.iter().enumerate() {
                rhs[i] += m / (two * eps * nn);
                for (b, &j) in nodes.iter().enumerate() {
                    let w = if a == b { wd } else { wo };
                    let gg = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                    let hij = two * ((c + inv4eps) * m * w + eps * m * gg);
                    let k =
                        row_ptr[i] + cols[row_ptr[i]..row_ptr[i + 1]].binary_search(&j).unwrap();
                    vals[k] += hij;
                }
            }
        }
        let diag = (0..n)
            .map(|i| {
                let k = row_ptr[i] + cols[row_ptr[i]..row_ptr[i + 1]].binary_search(&i).unwrap();
                vals[k]
            })
            .collect();
        Ok(PhaseSystem {
            row_ptr,
            cols,
            vals,
            diag,
            rhs,
        })
    }

    /// `(Hv)_i − g_i`.
    #[inline]
    fn gradient_at(&self, v: &[T], i: usize) -> T {
        let mut s = -self.rhs[i];
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.vals[k] * v[self.cols[k]];
        }
        s
    }

    fn kkt_residual(&self, v: &[T], lo: &[T], hi: &[T], fixed: &[bool]) -> T {
        let mut worst = T::zero();
        for i in 0..v.len() {
            if fixed[i] {
                continue;
            }
            let trial = (v[i] - self.gradient_at(v, i) / self.diag[i])
                .max(lo[i])
                .min(hi[i]);
            worst = worst.max((v[i] - trial).abs());
        }
        worst
    }

    /// Spectral radius estimate of the Jacobi iteration on free nodes.
    fn jacobi_radius(&self, fixed: &[bool]) -> T {
        let n = self.diag.len();
        let mut x: Vec<T> = (0..n)
            .map(|i| {
                if fixed[i] {
                    T::zero()
                } else {
                    T::one() + T::lit(0.1) * T::from_usize(i % 7).unwrap()
                }
            })
            .collect();
        let mut rho = T::zero();
        let mut y = vec![T::zero(); n];
        for _ in 0..30 {
            for i in 0..n {
                if fixed[i] {
                    continue;
                }
                let mut s = T::zero();
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.cols[k];
                    if j != i && !fixed[j] {
                        s += self.vals[k] * x[j];
                    }
                }
                y[i] = -s / self.diag[i];
            }
            let nx = x.iter().fold(T::zero(), |a, &b| a + b * b).sqrt();
            let ny = y.iter().fold(T::zero(), |a, &b| a + b * b).sqrt();
            if nx == T::zero() || ny == T::zero() {
                return T::zero();
            }
            rho = ny / nx;
            for i in 0..n {
                x[i] = y[i] / ny;
            }
        }
        rho.min(T::one())
    }
}

fn bounds<T: Real>(mesh: &Mesh<T>, v_prev: &[T], dirichlet_v: &[bool]) -> Result<(Vec<T>, Vec<T>)> {
    if v_prev.len() != mesh.num_nodes() || dirichlet_v.len() != mesh.num_nodes() {
        return Err(Error::Shape(
            "phase-field solve: field sizes do not match the mesh".into(),
        ));
    }
    let mut lo = vec![T::zero(); v_prev.len()];
    let mut hi = v_prev.to_vec();
    for i in 0..v_prev.len() {
        if !(v_prev[i] >= T::zero()) {
            return Err(Error::Constraint(format!(
                "phase-field upper bound {} at node {i} is negative",
                v_prev[i]
            )));
        }
        if dirichlet_v[i] {
            if v_prev[i] < T::one() {
                return Err(Error::Constraint(format!(
                    "Dirichlet node {i} requires v = 1 but the irreversibility bound is {}",
                    v_prev[i]
                )));
            }
            lo[i] = T::one();
            hi[i] = T::one();
        }
    }
    Ok((lo, hi))
}

fn tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(100.0))
}

/// Projected-Newton residual `max_i |v_i − Π(v_i − ∂_iF/H_ii)|` of `v`.
pub fn phase_kkt_residual<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    p: &[Sym2<T>],
    v_prev: &[T],
    dirichlet_v: &[bool],
    params: &MaterialParams<T>,
    v: &[T],
) -> Result<T> {
    let (lo, hi) = bounds(mesh, v_prev, dirichlet_v)?;
    let sys = PhaseSystem::assemble(mesh, u, p, params)?;
    Ok(sys.kkt_residual(v, &lo, &hi, dirichlet_v))
}

/// Minimizes the total energy in `v` with `u` and `p` frozen, starting
/// from `v_prev`.
pub fn solve_phase_field<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    p: &[Sym2<T>],
    v_prev: &[T],
    dirichlet_v: &[bool],
    params: &MaterialParams<T>,
) -> Result<(Vec<T>, SolveReport)> {
    solve_phase_field_from(mesh, u, p, v_prev, dirichlet_v, params, v_prev)
}

/// As [`solve_phase_field`], warm-started from `v_init`.
pub fn solve_phase_field_from<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    p: &[Sym2<T>],
    v_prev: &[T],
    dirichlet_v: &[bool],
    params: &MaterialParams<T>,
    v_init: &[T],
) -> Result<(Vec<T>, SolveReport)> {
    if u.len() != mesh.num_dofs()
        || p.len() != mesh.num_elements()
        || v_init.len() != mesh.num_nodes()
    {
        return Err(Error::Shape(
            "phase-field solve: field sizes do not match the mesh".into(),
        ));
    }
    if !(params.epsilon > T::zero()) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    let (lo, hi) = bounds(mesh, v_prev, dirichlet_v)?;
    let sys = PhaseSystem::assemble(mesh, u, p, params)?;
    let mut v: Vec<T> = v_init
        .iter()
        .enumerate()
        .map(|(i, &x)| x.max(lo[i]).min(hi[i]))
        .collect();
    let tol = tolerance::<T>();
    let rho = sys.jacobi_radius(dirichlet_v);
    let omega = (T::lit(2.0) / (T::one() + (T::one() - rho * rho).max(T::zero()).sqrt()))
        .max(T::one())
        .min(T::lit(1.9));

    let max_sweeps = 200_000;
    let mut residual = sys.kkt_residual(&v, &lo, &hi, dirichlet_v);
    let mut sweeps = 0;
    while residual > tol && sweeps < max_sweeps {
        for _ in 0..10 {
            for i in 0..v.len() {
                if dirichlet_v[i] {
                    continue;
                }
                let g = sys.gradient_at(&v, i);
                v[i] = (v[i] - omega * g / sys.diag[i]).max(lo[i]).min(hi[i]);
            }
        }
        sweeps += 10;
        residual = sys.kkt_residual(&v, &lo, &hi, dirichlet_v);
    }
    if residual > tol {
        return Err(Error::Solver {
            solver: "phase-field",
            iterations: sweeps,
            residual: residual.as_f64(),
            element: None,
        });
    }
    Ok((
        v,
        SolveReport {
            iterations: sweeps,
            residual: residual.as_f64(),
            converged: true,
        },
    ))
}
