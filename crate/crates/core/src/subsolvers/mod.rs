//! The three single-field minimizations used by alternate minimization.

pub mod displacement;
pub mod phase;
pub mod plastic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

pub use displacement::{displacement_gradient, solve_displacement};
pub use phase::{phase_kkt_residual, solve_phase_field};
pub use plastic::{
    plastic_element_update, solve_plastic, solve_plastic_with, PlasticElement, PlasticMethod,
};

/// How a boundary tag constrains the displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Prescription<T> {
    /// Per-component values reached at unit load time (`None` = free). The
    /// prescribed displacement at time `t` is `t` times these values.
    Components([Option<T>; 2]),
    /// Zero normal displacement, tangential component free.
    NormalZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLoad<T> {
    pub tag: String,
    pub prescription: Prescription<T>,
}

impl<T: Real> BoundaryLoad<T> {
    pub fn components(tag: &str, ux: Option<T>, uy: Option<T>) -> Self {
        BoundaryLoad {
            tag: tag.to_string(),
            prescription: Prescription::Components([ux, uy]),
        }
    }

    pub fn clamped(tag: &str) -> Self {
        Self::components(tag, Some(T::zero()), Some(T::zero()))
    }

    pub fn normal_zero(tag: &str) -> Self {
        BoundaryLoad {
            tag: tag.to_string(),
            prescription: Prescription::NormalZero,
        }
    }
}

/// Prescribed displacement values per degree of freedom at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletData<T> {
    values: Vec<Option<T>>,
}

impl<T: Real> DirichletData<T> {
    /// No constrained dofs.
    pub fn none(num_dofs: usize) -> Self {
        DirichletData {
            values: vec![None; num_dofs],
        }
    }

    /// Resolves `loads` at load time `t`. When two loads constrain the same
    /// component of a node, the one listed first wins.
    pub fn at_time(mesh: &Mesh<T>, loads: &[BoundaryLoad<T>], t: T) -> Result<Self> {
        let dim = mesh.dim();
        let mut values = vec![None; mesh.num_dofs()];
        for load in loads {
            if !mesh.has_tag(&load.tag) {
                return Err(Error::invalid(
                    "bc",
                    format!("unknown boundary tag `{}`", load.tag),
                ));
            }
            match load.prescription {
                Prescription::Components(comp) => {
                    for (c, w) in comp.iter().enumerate().take(dim) {
                        if let Some(w) = *w {
                            if !w.is_finite() {
                                return Err(Error::invalid(
                                    "bc",
                                    format!("non-finite value on `{}`", load.tag),
                                ));
                            }
                            for n in mesh.nodes_with_tag(&load.tag) {
                                values[n * dim + c].get_or_insert(t * w);
                            }
                        }
                    }
                }
                Prescription::NormalZero => {
                    for (side, n, tag) in mesh.boundary_entries() {
                        if tag != load.tag {
                            continue;
                        }
                        let normal = side.outward_normal();
                        let c = if normal[0] != 0 { 0 } else { 1 };
                        if c < dim {
                            values[n * dim + c].get_or_insert(T::zero());
                        }
                    }
                }
            }
        }
        Ok(DirichletData { values })
    }

    pub fn from_values(values: Vec<Option<T>>) -> Self {
        DirichletData { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, dof: usize) -> Option<T> {
        self.values[dof]
    }

    pub fn values(&self) -> &[Option<T>] {
        &self.values
    }

    pub fn num_constrained(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Writes the prescribed values into `u`.
    pub fn impose(&self, u: &mut [T]) {
        for (x, w) in u.iter_mut().zip(&self.values) {
            if let Some(w) = w {
                *x = *w;
            }
        }
    }
}

/// Nodal mask of the phase-field Dirichlet condition `v = 1`.
pub fn phase_dirichlet_mask<T: Real>(mesh: &Mesh<T>, tags: &[String]) -> Result<Vec<bool>> {
    let mut mask = vec![false; mesh.num_nodes()];
    for tag in tags {
        if !mesh.has_tag(tag) {
            return Err(Error::invalid(
                "phase_dirichlet",
                format!("unknown boundary tag `{tag}`"),
            ));
        }
        for n in mesh.nodes_with_tag(tag) {
            mask[n] = true;
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}
