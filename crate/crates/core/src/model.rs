//! The dispersive spin-boson interaction and its conditional evolutions.
//!
//! The joint Hamiltonian is `σz ⊗ V` with
//! `V = α a† + α* a + β a†a + γ`. With `|0⟩` the `+1` eigenstate of `σz`,
//! the mode evolves under `w₀(t) = exp(-iVt)` when the qubit sits in `|0⟩`
//! and under `w₁(t) = exp(+iVt)` when it sits in `|1⟩`.

use core::f64::consts::PI;

use crate::fock::{self, phase, DensityOperator, HermitianSpectrum, Operator};
use crate::{Error, Result, C64};

/// Interaction parameters `(α, β, γ)` in units where `ħ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdParams {
    pub alpha: C64,
    pub beta: f64,
    pub gamma: f64,
}

impl PdParams {
    pub fn new(alpha: C64, beta: f64, gamma: f64) -> Result<Self> {
        let params = PdParams { alpha, beta, gamma };
        params.validate()?;
        Ok(params)
    }

    /// `α` given in units of `β`, with `γ = 0`.
    pub fn from_ratio(alpha_over_beta: C64, beta: f64) -> Result<Self> {
        Self::new(alpha_over_beta * beta, beta, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        if !self.beta.is_finite() || self.beta == 0.0 {
            return Err(Error::invalid("beta", "must be finite and nonzero"));
        }
        if !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        Ok(())
    }

    /// `ᾱ = α/β`, the displacement that diagonalizes `V`.
    pub fn reduced_alpha(&self) -> C64 {
        self.alpha / self.beta
    }

    /// `γ - |α|²/β`, the constant left after completing the square.
    pub fn energy_offset(&self) -> f64 {
        self.gamma - self.alpha.norm_sqr() / self.beta
    }

    /// `2π/|β|`, the period of the conditional environment states.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.beta.abs()
    }
}

/// Which qubit pointer state the mode's evolution is conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Zero,
    One,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Zero, Branch::One];

    /// `σz` eigenvalue of the pointer state.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Zero => 1.0,
            Branch::One => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Branch::Zero => 0,
            Branch::One => 1,
        }
    }
}

/// `V = α a† + α* a + β a†a + γ` on a `dim`-level truncation.
pub fn potential_operator(params: &PdParams, dim: usize) -> Result<Operator> {
    let a = fock::annihilation(dim)?;
    let adag = a.adjoint();
    let n = fock::number(dim)?;
    let mut v = &adag.scale(params.alpha) + &a.scale(params.alpha.conj());
    v = &v + &n.scale(C64::new(params.beta, 0.0));
    Ok(&v + &Operator::identity(dim).scale(C64::new(params.gamma, 0.0)))
}

/// Spectral route to the conditional evolutions: `V` is diagonalized once
/// and `w_i(t)` follows for any `t` without further eigensolves.
#[derive(Clone, Debug)]
pub struct ConditionalDynamics {
    params: PdParams,
    spectrum: HermitianSpectrum,
}

impl ConditionalDynamics {
    pub fn new(params: &PdParams, dim: usize) -> Result<Self> {
        params.validate()?;
        let spectrum = potential_operator(params, dim)?.spectrum()?;
        Ok(ConditionalDynamics {
            params: *params,
            spectrum,
        })
    }

    pub fn params(&self) -> &PdParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn spectrum(&self) -> &HermitianSpectrum {
        &self.spectrum
    }

    /// `w_branch(t) = exp(∓iVt)`.
    pub fn evolution(&self, branch: Branch, t: f64) -> Operator {
        self.spectrum.exp_minus_i(branch.sign() * t)
    }

    /// `R_ii(t) = w_i(t) R w_i(t)†`.
    pub fn prepare(&self, branch: Branch, t: f64, r0: &DensityOperator) -> Result<DensityOperator> {
        let w = self.evolution(branch, t);
        Ok(DensityOperator::new_unchecked(
            r0.operator().conjugated_by(&w)?,
        ))
    }
}

/// `w_branch(t)` through the eigendecomposition of `V`.
pub fn conditional_evolution(
    params: &PdParams,
    branch: Branch,
    t: f64,
    dim: usize,
) -> Result<Operator> {
    Ok(ConditionalDynamics::new(params, dim)?.evolution(branch, t))
}

/// `w_branch(t)` through the factorization
/// `V = β D(ᾱ)† a†a D(ᾱ) + (γ - |α|²/β)`:
///
/// `w₀(t) = e^{-i(γ-|α|²/β)t} D(ᾱ)† e^{-iβ a†a t} D(ᾱ)`, and `w₁` is the
/// same with `t → -t`. Uses only displacements and diagonal phases.
pub fn conditional_evolution_closed_form(
    params: &PdParams,
    branch: Branch,
    t: f64,
    dim: usize,
) -> Result<Operator> {
    if params.beta == 0.0 {
        return Err(Error::Unsupported(
            "closed-form evolution requires a nonzero dispersive shift",
        ));
    }
    params.validate()?;
    let signed_t = branch.sign() * t;
    let d = fock::displacement(params.reduced_alpha(), dim)?;
    let rotation =
        Operator::from_diagonal((0..dim).map(|n| phase(-params.beta * n as f64 * signed_t)));
    let global = phase(-params.energy_offset() * signed_t);
    Ok((&(&d.adjoint() * &rotation) * &d).scale(global))
}

/// Dimensionless temperature `θ = k_B T / ħΩ` of a Gibbs state of `Ω a†a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalSpec {
    pub theta: f64,
}

impl ThermalSpec {
    pub fn new(theta: f64) -> Result<Self> {
        let spec = ThermalSpec { theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn zero() -> Self {
        ThermalSpec { theta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() || self.theta < 0.0 {
            return Err(Error::invalid("theta", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `n̄ = 1/(e^{1/θ} - 1)` of the untruncated state.
    pub fn mean_occupation(&self) -> f64 {
        if self.theta == 0.0 {
            0.0
        } else {
            1.0 / libm::expm1(1.0 / self.theta)
        }
    }

    /// Probability mass at `n >= dim` of the untruncated state, `e^{-dim/θ}`.
    pub fn tail_mass(&self, dim: usize) -> f64 {
        if self.theta == 0.0 {
            0.0
        } else {
            libm::exp(-(dim as f64) / self.theta)
        }
    }
}

/// Gibbs state `p_n ∝ e^{-n/θ}`, renormalized on the truncated space.
/// `θ = 0` gives the vacuum.
pub fn thermal_state(spec: &ThermalSpec, dim: usize) -> Result<DensityOperator> {
    spec.validate()?;
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, min: 2 });
    }
    if spec.theta == 0.0 {
        return DensityOperator::fock(0, dim);
    }
    let weights: alloc::vec::Vec<f64> = (0..dim)
        .map(|n| libm::exp(-(n as f64) / spec.theta))
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(DensityOperator::new_unchecked(Operator::from_diagonal(
        weights.iter().map(|w| C64::new(w / total, 0.0)),
    )))
}
