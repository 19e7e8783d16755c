//! Two-phase witness circuit.
//!
//! 1. The qubit starts in pointer state `|i⟩` and the mode in `R(0)`. They
//!    interact for time `t` under the preparation parameters, leaving the
//!    mode in `R_ii(t) = w_i(t) R(0) w_i(t)†` and the qubit untouched.
//! 2. A Hadamard puts the qubit in `|+⟩` (for `i = 0`) or `|−⟩` (for
//!    `i = 1`), the coupling is switched to the measurement parameters, and
//!    the qubit coherence `ρ₀₁⁽ⁱ⁾(τ) = ±½ Tr[w'₀(τ) R_ii(t) w'₁(τ)†]` is
//!    read out.
//!
//! The signal `Δρ₀₁ = ρ₀₁⁽⁰⁾ + ρ₀₁⁽¹⁾` is nonzero only if `R₀₀(t) ≠ R₁₁(t)`,
//! which holds exactly when the preparation interaction entangles any
//! superposition of the qubit with `R(0)`.

use alloc::vec::Vec;

use crate::cutoff::{choose_cutoff, CutoffPolicy};
use crate::fock::{
    self, assemble_blocks, negativity, partial_trace_env, trace_distance, DensityOperator,
    HermitianSpectrum, JointState, Operator,
};
use crate::model::{
    potential_operator, thermal_state, Branch, ConditionalDynamics, PdParams, ThermalSpec,
};
use crate::{Error, Result, C64};

pub const DEFAULT_WITNESS_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_TAU_POINTS: usize = 400;
/// Below this trace distance the conditional states count as equal.
pub const GAP_TOLERANCE: f64 = 1e-8;
/// Below this negativity the joint state counts as PPT.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// Everything needed for one run of the circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub prep: PdParams,
    pub meas: PdParams,
    /// Preparation time.
    pub t: f64,
    /// Measurement times, strictly increasing.
    pub tau_grid: Vec<f64>,
    pub thermal: ThermalSpec,
    pub cutoff: CutoffPolicy,
    pub witness_threshold: f64,
}

impl ProtocolConfig {
    /// Defaults: 400-point τ grid over one measurement period, default
    /// cutoff policy and threshold.
    pub fn new(prep: PdParams, meas: PdParams, t: f64, thermal: ThermalSpec) -> Result<Self> {
        let config = ProtocolConfig {
            prep,
            meas,
            t,
            tau_grid: default_tau_grid(&meas),
            thermal,
            cutoff: CutoffPolicy::default(),
            witness_threshold: DEFAULT_WITNESS_THRESHOLD,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.prep.validate()?;
        self.meas.validate()?;
        self.thermal.validate()?;
        self.cutoff.validate()?;
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(Error::invalid("t", "must be finite and >= 0"));
        }
        if self.tau_grid.is_empty() {
            return Err(Error::invalid("tau", "grid is empty"));
        }
        if self.tau_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("tau", "grid has non-finite values"));
        }
        if self.tau_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("tau", "grid must be strictly increasing"));
        }
        if !(self.witness_threshold.is_finite() && self.witness_threshold > 0.0) {
            return Err(Error::invalid("threshold", "must be positive"));
        }
        Ok(())
    }
}

/// `points` samples from `start` to `stop`, both included.
pub fn uniform_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => alloc::vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points)
                .map(|k| {
                    if k == points - 1 {
                        stop
                    } else {
                        start + step * k as f64
                    }
                })
                .collect()
        }
    }
}

/// 400 samples over `[0, 2π/β']`.
pub fn default_tau_grid(meas: &PdParams) -> Vec<f64> {
    uniform_grid(0.0, meas.period(), DEFAULT_TAU_POINTS)
}

/// Sampled coherence curves of both branches and their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessCurve {
    pub tau: Vec<f64>,
    /// `ρ₀₁⁽⁰⁾(τ)`, qubit prepared in `|0⟩`.
    pub coh0: Vec<C64>,
    /// `ρ₀₁⁽¹⁾(τ)`, qubit prepared in `|1⟩`; carries the Hadamard minus sign.
    pub coh1: Vec<C64>,
    /// `coh0 + coh1`.
    pub signal: Vec<C64>,
    pub max_abs_signal: f64,
    pub argmax_tau: f64,
    /// Fock cutoff the curve was computed at.
    pub dim: usize,
}

impl WitnessCurve {
    fn assemble(tau: Vec<f64>, coh0: Vec<C64>, coh1: Vec<C64>, dim: usize) -> Self {
        let signal: Vec<C64> = coh0.iter().zip(&coh1).map(|(a, b)| a + b).collect();
        let (mut max_abs_signal, mut argmax_tau) = (0.0, tau[0]);
        for (s, &x) in signal.iter().zip(&tau) {
            if s.norm() > max_abs_signal {
                max_abs_signal = s.norm();
                argmax_tau = x;
            }
        }
        WitnessCurve {
            tau,
            coh0,
            coh1,
            signal,
            max_abs_signal,
            argmax_tau,
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn max_abs_re(&self) -> f64 {
        self.signal.iter().fold(0.0, |m, s| f64::max(m, s.re.abs()))
    }

    pub fn max_abs_im(&self) -> f64 {
        self.signal.iter().fold(0.0, |m, s| f64::max(m, s.im.abs()))
    }

    /// `½ Tr[w'₀ R_ii w'₁†]` without the Hadamard sign.
    pub fn unsigned(&self, branch: Branch) -> Vec<C64> {
        match branch {
            Branch::Zero => self.coh0.clone(),
            Branch::One => self.coh1.iter().map(|z| -z).collect(),
        }
    }

    /// Largest entrywise change against another curve on the same grid,
    /// over both branches.
    pub fn max_abs_diff(&self, other: &WitnessCurve) -> Result<f64> {
        if self.tau != other.tau {
            return Err(Error::invalid("tau", "curves sampled on different grids"));
        }
        Ok(self
            .coh0
            .iter()
            .zip(&other.coh0)
            .chain(self.coh1.iter().zip(&other.coh1))
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).norm())))
    }
}

/// Outcome of the witness together with the exact criteria.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessVerdict {
    pub witnessed: bool,
    pub max_abs_signal: f64,
    /// `½‖R₀₀(t) − R₁₁(t)‖₁`.
    pub separability_gap: f64,
    /// Negativity of the joint state; `None` when the cross-check was skipped.
    pub negativity_value: Option<f64>,
    /// `witnessed ⇒ gap > 0` (and negativity > 0 when computed).
    pub consistency: bool,
}

/// Readout of `½ Tr[w'₀(τ) R w'₁(τ)†]` for arbitrary `R` and `τ`.
///
/// Since `w'₁(τ)† = e^{-iV'τ} = w'₀(τ)`, the trace collapses to
/// `½ Σ_k p_k e^{-2iλ_k τ}` with `λ_k` the eigenvalues of `V'` and
/// `p_k = ⟨u_k|R|u_k⟩`.
#[derive(Clone, Debug)]
pub struct MeasurementProbe {
    spectrum: HermitianSpectrum,
}

impl MeasurementProbe {
    pub fn new(meas: &PdParams, dim: usize) -> Result<Self> {
        meas.validate()?;
        Ok(MeasurementProbe {
            spectrum: potential_operator(meas, dim)?.spectrum()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Populations of `R` in the eigenbasis of `V'`.
    pub fn weights(&self, r: &DensityOperator) -> Result<Vec<f64>> {
        Ok(self
            .spectrum
            .eigenbasis_diagonal(r.operator())?
            .into_iter()
            .map(|z| z.re)
            .collect())
    }

    pub fn coherence_from_weights(&self, weights: &[f64], tau: f64) -> C64 {
        if tau == 0.0 {
            // Both unitaries are the identity; Tr R = 1.
            return C64::new(0.5, 0.0);
        }
        let sum: C64 = weights
            .iter()
            .zip(self.spectrum.values())
            .map(|(&p, &lambda)| fock::phase(-2.0 * lambda * tau) * p)
            .sum();
        sum * 0.5
    }

    pub fn coherence(&self, r: &DensityOperator, tau: f64) -> Result<C64> {
        Ok(self.coherence_from_weights(&self.weights(r)?, tau))
    }
}

/// `R_ii(t) = w_i(t) R(0) w_i(t)†`.
pub fn prepare_conditional_environment(
    prep: &PdParams,
    branch: Branch,
    t: f64,
    r0: &DensityOperator,
) -> Result<DensityOperator> {
    ConditionalDynamics::new(prep, r0.dim())?.prepare(branch, t, r0)
}

/// Unsigned `½ Tr[w'₀(τ) R w'₁(τ)†]`.
pub fn measurement_coherence(meas: &PdParams, r: &DensityOperator, tau: f64) -> Result<C64> {
    MeasurementProbe::new(meas, r.dim())?.coherence(r, tau)
}

/// Witness curve at the cutoff chosen by `config.cutoff`.
pub fn witness_curve(config: &ProtocolConfig) -> Result<WitnessCurve> {
    config.validate()?;
    let choice = choose_cutoff(
        &config.prep,
        &config.meas,
        &config.thermal,
        config.t,
        &config.cutoff,
    )?;
    witness_curve_at_dim(config, choice.dim)
}

/// Witness curve at a fixed cutoff.
pub fn witness_curve_at_dim(config: &ProtocolConfig, dim: usize) -> Result<WitnessCurve> {
    config.validate()?;
    let r0 = thermal_state(&config.thermal, dim)?;
    let prep = ConditionalDynamics::new(&config.prep, dim)?;
    let probe = MeasurementProbe::new(&config.meas, dim)?;
    let w0 = probe.weights(&prep.prepare(Branch::Zero, config.t, &r0)?)?;
    let w1 = probe.weights(&prep.prepare(Branch::One, config.t, &r0)?)?;
    let coh0 = config
        .tau_grid
        .iter()
        .map(|&tau| probe.coherence_from_weights(&w0, tau))
        .collect();
    let coh1 = config
        .tau_grid
        .iter()
        .map(|&tau| -probe.coherence_from_weights(&w1, tau))
        .collect();
    Ok(WitnessCurve::assemble(
        config.tau_grid.clone(),
        coh0,
        coh1,
        dim,
    ))
}

/// Signed coherence `ρ₀₁⁽ⁱ⁾(τ)` from the full joint evolution: the qubit is
/// put in `|±⟩`, the pair evolves under `w'₀ ⊕ w'₁`, and the mode is traced
/// out. Returns the conjugate of the reduced state's `(1, 0)` element.
pub fn joint_readout_coherence(
    meas: &PdParams,
    r: &DensityOperator,
    prepared: Branch,
    tau: f64,
) -> Result<C64> {
    let dynamics = ConditionalDynamics::new(meas, r.dim())?;
    let s = 0.5
        * match prepared {
            Branch::Zero => 1.0,
            Branch::One => -1.0,
        };
    let qubit = Operator::from_rows(
        2,
        &[
            C64::new(0.5, 0.0),
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(0.5, 0.0),
        ],
    )?;
    let joint = JointState::product(&qubit, r)?.evolve_block_diagonal(
        &dynamics.evolution(Branch::Zero, tau),
        &dynamics.evolution(Branch::One, tau),
    )?;
    Ok(partial_trace_env(&joint).get(1, 0).conj())
}

/// Trace distance between `R₀₀(t)` and `R₁₁(t)`; zero iff the joint state
/// at time `t` is separable.
pub fn separability_gap(prep: &PdParams, t: f64, r0: &DensityOperator) -> Result<f64> {
    let dynamics = ConditionalDynamics::new(prep, r0.dim())?;
    let r00 = dynamics.prepare(Branch::Zero, t, r0)?;
    let r11 = dynamics.prepare(Branch::One, t, r0)?;
    trace_distance(&r00, &r11)
}

/// `σ(t) = U(t)(|ψ⟩⟨ψ| ⊗ R(0))U(t)†` with `|ψ⟩ = a|0⟩ + b|1⟩`, assembled
/// block-wise as `a_i a_j* w_i R(0) w_j†`.
pub fn joint_state(
    prep: &PdParams,
    t: f64,
    a: C64,
    b: C64,
    r0: &DensityOperator,
) -> Result<JointState> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(Error::invalid("amplitudes", "both a and b must be nonzero"));
    }
    let norm = a.norm_sqr() + b.norm_sqr();
    if (norm - 1.0).abs() > fock::TRACE_TOL {
        return Err(Error::invalid(
            "amplitudes",
            alloc::format!("|a|² + |b|² = {norm}, expected 1"),
        ));
    }
    let dynamics = ConditionalDynamics::new(prep, r0.dim())?;
    let amps = [a, b];
    let w = [
        dynamics.evolution(Branch::Zero, t),
        dynamics.evolution(Branch::One, t),
    ];
    let r = r0.operator();
    let block = |i: usize, j: usize| -> Operator {
        (&(&w[i] * r) * &w[j].adjoint()).scale(amps[i] * amps[j].conj())
    };
    let (b00, b01, b10, b11) = (block(0, 0), block(0, 1), block(1, 0), block(1, 1));
    JointState::new(assemble_blocks([[&b00, &b01], [&b10, &b11]])?)
}

/// Negativity of the qubit partial transpose of [`joint_state`].
pub fn joint_negativity(
    prep: &PdParams,
    t: f64,
    a: C64,
    b: C64,
    r0: &DensityOperator,
) -> Result<f64> {
    negativity(&joint_state(prep, t, a, b, r0)?)
}

/// Equal-weight amplitudes used for the negativity cross-check.
pub fn default_amplitudes() -> (C64, C64) {
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    (h, h)
}

/// Verdict with the negativity cross-check at `a = b = 1/√2`.
pub fn witness_verdict(
    curve: &WitnessCurve,
    prep: &PdParams,
    t: f64,
    r0: &DensityOperator,
    threshold: f64,
) -> Result<WitnessVerdict> {
    witness_verdict_with(curve, prep, t, r0, threshold, Some(default_amplitudes()))
}

/// Verdict; `amplitudes = None` skips the negativity cross-check.
pub fn witness_verdict_with(
    curve: &WitnessCurve,
    prep: &PdParams,
    t: f64,
    r0: &DensityOperator,
    threshold: f64,
    amplitudes: Option<(C64, C64)>,
) -> Result<WitnessVerdict> {
    let witnessed = curve.max_abs_signal > threshold;
    let separability_gap = separability_gap(prep, t, r0)?;
    let negativity_value = match amplitudes {
        Some((a, b)) => Some(joint_negativity(prep, t, a, b, r0)?),
        None => None,
    };
    let consistency = !witnessed
        || (separability_gap > GAP_TOLERANCE
            && negativity_value.is_none_or(|n| n > NEGATIVITY_TOLERANCE));
    Ok(WitnessVerdict {
        witnessed,
        max_abs_signal: curve.max_abs_signal,
        separability_gap,
        negativity_value,
        consistency,
    })
}
