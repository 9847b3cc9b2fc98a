//! Mechanical constants, the elasticity tensor `A`, the hardening tensor `B`
//! and the degraded stiffness `a = v² + η`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::Sym2;

/// Which dissipation mechanisms enter the incremental energy.
///
/// * `Model0`: elasticity, perfect plasticity, fracture.
/// * `Model1`: adds visco-elasticity.
/// * `Model2`: adds visco-plasticity.
/// * `Model3`: adds linear kinematic hardening.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    Model0,
    Model1,
    Model2,
    Model3,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Model0 => "model0",
            Model::Model1 => "model1",
            Model::Model2 => "model2",
            Model::Model3 => "model3",
        }
    }

    pub fn has_viscoelasticity(self) -> bool {
        self == Model::Model1
    }

    pub fn has_viscoplasticity(self) -> bool {
        self == Model::Model2
    }

    pub fn has_hardening(self) -> bool {
        self == Model::Model3
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "model0" | "0" => Ok(Model::Model0),
            "model1" | "1" => Ok(Model::Model1),
            "model2" | "2" => Ok(Model::Model2),
            "model3" | "3" => Ok(Model::Model3),
            other => Err(Error::invalid("model", format!("unknown model `{other}`"))),
        }
    }
}

/// Isotropic elasticity acting on symmetric strains: `Ae = 2μ e + λ tr(e) I`.
///
/// One-dimensional bars use `λ = 0, μ = K/2`, so that the axial component is
/// scaled by `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elasticity<T> {
    pub lambda: T,
    pub mu: T,
    pub dim: usize,
}

impl<T: Real> Elasticity<T> {
    /// Plane-strain Lamé coefficients in 2D, Young modulus alone in 1D.
    pub fn new(young: T, poisson: T, dim: usize) -> Result<Self> {
        if !(young > T::zero()) || !young.is_finite() {
            return Err(Error::invalid(
                "K",
                format!("Young modulus must be positive, got {young}"),
            ));
        }
        match dim {
            1 => Ok(Elasticity {
                lambda: T::zero(),
                mu: T::half() * young,
                dim,
            }),
            2 => {
                if !(poisson >= T::zero()) || !(poisson < T::half()) {
                    return Err(Error::invalid(
                        "nu",
                        format!("Poisson ratio must lie in [0, 0.5), got {poisson}"),
                    ));
                }
                let one = T::one();
                let two = T::lit(2.0);
                let lambda = young * poisson / ((one + poisson) * (one - two * poisson));
                let mu = young / (two * (one + poisson));
                Ok(Elasticity { lambda, mu, dim })
            }
            _ => Err(Error::invalid(
                "dim",
                format!("unsupported dimension {dim}"),
            )),
        }
    }

    pub fn apply(&self, e: &Sym2<T>) -> Sym2<T> {
        let two_mu = T::lit(2.0) * self.mu;
        let l = self.lambda * e.trace();
        Sym2::new(two_mu * e.xx + l, two_mu * e.yy + l, two_mu * e.xy)
    }

    /// `Ae : e`.
    pub fn energy_density(&self, e: &Sym2<T>) -> T {
        self.apply(e).dot(e)
    }

    /// Eigenvalues of `A` restricted to deviatoric and spherical strains.
    pub fn deviatoric_modulus(&self) -> T {
        T::lit(2.0) * self.mu
    }

    pub fn spherical_modulus(&self) -> T {
        if self.dim == 1 {
            T::lit(2.0) * self.mu
        } else {
            T::lit(2.0) * (self.mu + self.lambda)
        }
    }

    /// Constants `(α₁, α₂)` with `α₁|e|² ≤ Ae:e ≤ α₂|e|²`.
    pub fn ellipticity_bounds(&self) -> (T, T) {
        let d = self.deviatoric_modulus();
        let s = self.spherical_modulus();
        (d.min(s), d.max(s))
    }
}

/// Kinematic hardening `Bp = k p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hardening<T> {
    pub k: T,
}

impl<T: Real> Hardening<T> {
    pub fn new(k: T) -> Result<Self> {
        if !(k >= T::zero()) || !k.is_finite() {
            return Err(Error::invalid(
                "k",
                format!("hardening coefficient must be ≥ 0, got {k}"),
            ));
        }
        Ok(Hardening { k })
    }

    pub fn apply(&self, p: &Sym2<T>) -> Sym2<T> {
        p.scale(self.k)
    }
}

/// Degraded stiffness factor `a = v² + η`.
#[inline]
pub fn effective_stiffness<T: Real>(v: T, eta: T) -> T {
    v * v + eta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams<T> {
    /// Young modulus `K`.
    pub young: T,
    /// Poisson ratio (2D only).
    pub poisson: T,
    /// Yield threshold `τ`.
    pub yield_stress: T,
    /// Visco-elastic coefficient `β₁`.
    pub beta1: T,
    /// Visco-plastic coefficient `β₂`.
    pub beta2: T,
    /// Hardening coefficient `k`.
    pub hardening: T,
    /// Phase-field length `ε`.
    pub epsilon: T,
    /// Residual stiffness `η`.
    pub eta: T,
    pub model: Model,
}

impl<T: Real> MaterialParams<T> {
    /// Plain elastic-plastic-fracture parameters (`Model0`).
    pub fn model0(young: T, yield_stress: T, epsilon: T, eta: T) -> Self {
        MaterialParams {
            young,
            poisson: T::zero(),
            yield_stress,
            beta1: T::zero(),
            beta2: T::zero(),
            hardening: T::zero(),
            epsilon,
            eta,
            model: Model::Model0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let pos = |name: &str, x: T| -> Result<()> {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be > 0, got {x}")))
            }
        };
        let nonneg = |name: &str, x: T| -> Result<()> {
            if x >= T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be ≥ 0, got {x}")))
            }
        };
        pos("K", self.young)?;
        nonneg("tau", self.yield_stress)?;
        pos("epsilon", self.epsilon)?;
        pos("eta", self.eta)?;
        if self.eta >= T::one() {
            return Err(Error::invalid("eta", "residual stiffness must be ≪ 1"));
        }
        nonneg("beta1", self.beta1)?;
        nonneg("beta2", self.beta2)?;
        nonneg("k", self.hardening)?;
        if !(self.poisson >= T::zero() && self.poisson < T::half()) {
            return Err(Error::invalid(
                "nu",
                format!("must lie in [0, 0.5), got {}", self.poisson),
            ));
        }
        match self.model {
            Model::Model0 => {
                for (name, x) in [
                    ("beta1", self.beta1),
                    ("beta2", self.beta2),
                    ("k", self.hardening),
                ] {
                    if x != T::zero() {
                        return Err(Error::invalid(name, "must be 0 for model0"));
                    }
                }
            }
            Model::Model1 => pos("beta1", self.beta1)?,
            Model::Model2 => pos("beta2", self.beta2)?,
            Model::Model3 => pos("k", self.hardening)?,
        }
        Elasticity::new(self.young, self.poisson, dim)?;
        Ok(())
    }

    pub fn elasticity(&self, dim: usize) -> Result<Elasticity<T>> {
        Elasticity::new(self.young, self.poisson, dim)
    }

    /// `β₁` when the model carries visco-elasticity, zero otherwise.
    pub fn active_beta1(&self) -> T {
        if self.model.has_viscoelasticity() {
            self.beta1
        } else {
            T::zero()
        }
    }

    pub fn active_beta2(&self) -> T {
        if self.model.has_viscoplasticity() {
            self.beta2
        } else {
            T::zero()
        }
    }

    pub fn active_hardening(&self) -> T {
        if self.model.has_hardening() {
            self.hardening
        } else {
            T::zero()
        }
    }
}
