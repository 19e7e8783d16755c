//! Adaptive Fock cutoff.
//!
//! Candidate cutoffs are `8, 16, 32, …` up to `n_max`. A cutoff is accepted
//! once doubling it moves every probed observable by less than `epsilon`
//! and the thermal tail beyond it carries less than `epsilon` mass.
//! Observables are the coherence curves of both branches and the
//! separability gap, probed over preparation times covering
//! `[0, min(t_max, 2π/β)]` (the conditional states are periodic in `t`)
//! and measurement times covering one measurement period.

use alloc::vec::Vec;

use crate::fock::trace_distance;
use crate::model::{thermal_state, Branch, ConditionalDynamics, PdParams, ThermalSpec};
use crate::protocol::{uniform_grid, MeasurementProbe};
use crate::{Error, Result};

pub const MIN_CUTOFF: usize = 8;
pub const GROWTH_FACTOR: usize = 2;

const PREP_PROBES: usize = 9;
const TAU_PROBES: usize = 33;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffPolicy {
    /// Tolerance on observable changes and thermal tail mass.
    pub epsilon: f64,
    /// Largest cutoff that may be returned.
    pub n_max: usize,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy {
            epsilon: 1e-10,
            n_max: 512,
        }
    }
}

impl CutoffPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-4) {
            return Err(Error::invalid("cutoff.epsilon", "must lie in (0, 1e-4]"));
        }
        if self.n_max < MIN_CUTOFF {
            return Err(Error::invalid("cutoff.n_max", "must be at least 8"));
        }
        Ok(())
    }

    /// `8, 16, 32, …` not exceeding `n_max`.
    pub fn schedule(&self) -> impl Iterator<Item = usize> + '_ {
        core::iter::successors(Some(MIN_CUTOFF), |d| Some(d * GROWTH_FACTOR))
            .take_while(move |&d| d <= self.n_max)
    }
}

/// Accepted cutoff and the observable change under one more doubling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffChoice {
    pub dim: usize,
    pub residual: f64,
}

struct Probe {
    prep_times: Vec<f64>,
    taus: Vec<f64>,
}

impl Probe {
    fn new(prep: &PdParams, meas: &PdParams, t_max: f64) -> Self {
        let span = t_max.min(prep.period());
        let mut prep_times = if span > 0.0 {
            uniform_grid(0.0, span, PREP_PROBES)
        } else {
            alloc::vec![0.0]
        };
        if t_max > span {
            prep_times.push(t_max);
        }
        Probe {
            prep_times,
            taus: uniform_grid(0.0, meas.period(), TAU_PROBES),
        }
    }

    fn observables(
        &self,
        prep: &PdParams,
        meas: &PdParams,
        thermal: &ThermalSpec,
        dim: usize,
    ) -> Result<Vec<f64>> {
        let r0 = thermal_state(thermal, dim)?;
        let dynamics = ConditionalDynamics::new(prep, dim)?;
        let readout = MeasurementProbe::new(meas, dim)?;
        let mut out = Vec::with_capacity(self.prep_times.len() * (4 * self.taus.len() + 1));
        for &t in &self.prep_times {
            let r00 = dynamics.prepare(Branch::Zero, t, &r0)?;
            let r11 = dynamics.prepare(Branch::One, t, &r0)?;
            for r in [&r00, &r11] {
                let weights = readout.weights(r)?;
                for &tau in &self.taus {
                    let c = readout.coherence_from_weights(&weights, tau);
                    out.push(c.re);
                    out.push(c.im);
                }
            }
            out.push(trace_distance(&r00, &r11)?);
        }
        Ok(out)
    }
}

fn max_abs_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

/// Smallest cutoff on the doubling schedule whose observables are stable
/// under one more doubling.
pub fn choose_cutoff(
    prep: &PdParams,
    meas: &PdParams,
    thermal: &ThermalSpec,
    t_max: f64,
    policy: &CutoffPolicy,
) -> Result<CutoffChoice> {
    policy.validate()?;
    prep.validate()?;
    meas.validate()?;
    thermal.validate()?;
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(Error::invalid("t_max", "must be finite and >= 0"));
    }
    let probe = Probe::new(prep, meas, t_max);
    let mut residual = f64::INFINITY;
    let mut previous: Option<Vec<f64>> = None;
    for dim in policy.schedule() {
        let current = match previous.take() {
            Some(obs) => obs,
            None => probe.observables(prep, meas, thermal, dim)?,
        };
        let doubled = probe.observables(prep, meas, thermal, dim * GROWTH_FACTOR)?;
        residual = max_abs_change(&current, &doubled).max(thermal.tail_mass(dim));
        if residual < policy.epsilon {
            return Ok(CutoffChoice { dim, residual });
        }
        previous = Some(doubled);
    }
    Err(Error::Convergence {
        n_max: policy.n_max,
        residual,
    })
}
