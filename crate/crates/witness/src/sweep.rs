//! Parameter sweeps over preparation time, temperature and couplings.
//!
//! Rows are independent tasks. The Fock cutoff is chosen once per
//! `(prep α, meas α, θ)` group over a full preparation period, so a row's
//! values do not depend on which other rows are in the spec. Every row is
//! then re-evaluated at twice its cutoff and must agree to within the
//! policy's `epsilon`.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use qee_core::cutoff::choose_cutoff;
use qee_core::model::thermal_state;
use qee_core::protocol::{joint_negativity, separability_gap, witness_curve_at_dim};
use qee_core::{ProtocolConfig, ThermalSpec, WitnessCurve, C64};

/// Environment variable capping the worker count; `0` means no cap.
pub const THREADS_ENV: &str = "QEE_WITNESS_THREADS";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: ProtocolConfig,
    pub t_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    /// Replacement values for the preparation `α`; empty keeps the base.
    pub prep_alpha: Vec<C64>,
    /// Replacement values for the measurement `α`; empty keeps the base.
    pub meas_alpha: Vec<C64>,
    /// Worker count hint, `0` for automatic.
    pub threads: usize,
    pub negativity: bool,
    pub amplitudes: (C64, C64),
    pub keep_curves: bool,
}

impl SweepSpec {
    pub fn new(base: ProtocolConfig, t_values: Vec<f64>, theta_values: Vec<f64>) -> Self {
        SweepSpec {
            base,
            t_values,
            theta_values,
            prep_alpha: Vec::new(),
            meas_alpha: Vec::new(),
            threads: 0,
            negativity: false,
            amplitudes: qee_core::protocol::default_amplitudes(),
            keep_curves: false,
        }
    }

    pub fn has_overrides(&self) -> bool {
        !self.prep_alpha.is_empty() || !self.meas_alpha.is_empty()
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.base.validate()?;
        if self.t_values.is_empty() || self.theta_values.is_empty() {
            return Err(SweepError::Invalid(
                "t and theta axes must be nonempty".into(),
            ));
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !finite(&self.t_values) || !finite(&self.theta_values) {
            return Err(SweepError::Invalid(
                "axis values must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    fn prep_axis(&self) -> Vec<C64> {
        axis_or(&self.prep_alpha, self.base.prep.alpha)
    }

    fn meas_axis(&self) -> Vec<C64> {
        axis_or(&self.meas_alpha, self.base.meas.alpha)
    }

    /// Groups sharing a cutoff, in output order.
    fn groups(&self) -> Vec<Group> {
        let mut thetas = self.theta_values.clone();
        thetas.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for &prep_alpha in &self.prep_axis() {
            for &meas_alpha in &self.meas_axis() {
                for &theta in &thetas {
                    out.push(Group {
                        prep_alpha,
                        meas_alpha,
                        theta,
                    });
                }
            }
        }
        out
    }

    fn sorted_times(&self) -> Vec<f64> {
        let mut ts = self.t_values.clone();
        ts.sort_by(f64::total_cmp);
        ts
    }

    fn row_config(&self, group: &Group, t: f64) -> ProtocolConfig {
        let mut config = self.base.clone();
        config.prep.alpha = group.prep_alpha;
        config.meas.alpha = group.meas_alpha;
        config.thermal = ThermalSpec { theta: group.theta };
        config.t = t;
        config
    }
}

fn axis_or(values: &[C64], base: C64) -> Vec<C64> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Group {
    prep_alpha: C64,
    meas_alpha: C64,
    theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub prep_alpha: C64,
    pub meas_alpha: C64,
    pub t: f64,
    pub theta: f64,
    pub max_abs_re: f64,
    pub max_abs_im: f64,
    pub gap: f64,
    pub negativity: Option<f64>,
    pub dim: usize,
    /// Max-norm change of the signal under one cutoff doubling.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Ordered by `(prep α, meas α, θ, t)`.
    pub rows: Vec<SweepRow>,
    pub curves: Option<Vec<WitnessCurve>>,
    pub has_overrides: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Invalid(String),

    #[error("cutoff search failed for theta={theta}: {source}")]
    Cutoff {
        theta: f64,
        #[source]
        source: qee_core::Error,
    },

    #[error("row t={t}, theta={theta} failed: {source}")]
    Row {
        t: f64,
        theta: f64,
        #[source]
        source: qee_core::Error,
    },

    #[error(
        "row t={t}, theta={theta} not converged at dim {dim}: residual {residual:e} >= {epsilon:e}"
    )]
    NotConverged {
        t: f64,
        theta: f64,
        dim: usize,
        residual: f64,
        epsilon: f64,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Core(#[from] qee_core::Error),
}

/// Worker count from the sweep's thread hint and the environment cap.
pub fn resolve_threads(hint: usize, cap: Option<usize>) -> usize {
    let auto = std::thread::available_parallelism().map_or(1, |n| n.get());
    let wanted = if hint == 0 { auto } else { hint };
    match cap {
        Some(c) if c > 0 => wanted.min(c),
        _ => wanted,
    }
}

fn env_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(threads, env_cap()))
        .build()
        .map_err(|e| SweepError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

fn group_cutoff(spec: &SweepSpec, group: &Group) -> Result<usize, qee_core::Error> {
    let config = spec.row_config(group, 0.0);
    choose_cutoff(
        &config.prep,
        &config.meas,
        &config.thermal,
        config.prep.period(),
        &config.cutoff,
    )
    .map(|c| c.dim)
}

struct RowOutcome {
    row: SweepRow,
    curve: WitnessCurve,
}

fn evaluate_row(
    spec: &SweepSpec,
    group: &Group,
    t: f64,
    dim: usize,
) -> Result<RowOutcome, SweepError> {
    let wrap = |source| SweepError::Row {
        t,
        theta: group.theta,
        source,
    };
    let config = spec.row_config(group, t);
    let curve = witness_curve_at_dim(&config, dim).map_err(wrap)?;
    let doubled = witness_curve_at_dim(&config, 2 * dim).map_err(wrap)?;
    let residual = signal_change(&curve, &doubled);
    if residual.is_nan() || residual >= config.cutoff.epsilon {
        return Err(SweepError::NotConverged {
            t,
            theta: group.theta,
            dim,
            residual,
            epsilon: config.cutoff.epsilon,
        });
    }
    let r0 = thermal_state(&config.thermal, dim).map_err(wrap)?;
    let gap = separability_gap(&config.prep, t, &r0).map_err(wrap)?;
    let negativity = if spec.negativity {
        let (a, b) = spec.amplitudes;
        Some(joint_negativity(&config.prep, t, a, b, &r0).map_err(wrap)?)
    } else {
        None
    };
    Ok(RowOutcome {
        row: SweepRow {
            prep_alpha: group.prep_alpha,
            meas_alpha: group.meas_alpha,
            t,
            theta: group.theta,
            max_abs_re: curve.max_abs_re(),
            max_abs_im: curve.max_abs_im(),
            gap,
            negativity,
            dim,
            residual,
        },
        curve,
    })
}

fn signal_change(a: &WitnessCurve, b: &WitnessCurve) -> f64 {
    a.signal
        .iter()
        .zip(&b.signal)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).norm()))
}

/// Runs every row; the first failure aborts the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let groups = spec.groups();
    let times = spec.sorted_times();
    let outcomes = with_pool(spec.threads, || -> Result<Vec<RowOutcome>, SweepError> {
        let dims: Vec<usize> = groups
            .par_iter()
            .map(|g| {
                group_cutoff(spec, g).map_err(|source| SweepError::Cutoff {
                    theta: g.theta,
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        let tasks: Vec<(usize, f64)> = (0..groups.len())
            .flat_map(|g| times.iter().map(move |&t| (g, t)))
            .collect();
        tasks
            .par_iter()
            .map(|&(g, t)| evaluate_row(spec, &groups[g], t, dims[g]))
            .collect()
    })??;
    let (rows, curves): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.row, o.curve)).unzip();
    Ok(SweepResult {
        rows,
        curves: spec.keep_curves.then_some(curves),
        has_overrides: spec.has_overrides(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceEntry {
    pub prep_alpha: C64,
    pub meas_alpha: C64,
    pub t: f64,
    pub theta: f64,
    pub dim: Option<usize>,
    pub residual: Option<f64>,
    pub wall_time: Duration,
    pub error: Option<String>,
}

impl ConvergenceEntry {
    pub fn converged(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub entries: Vec<ConvergenceEntry>,
    pub has_overrides: bool,
}

impl ConvergenceReport {
    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(ConvergenceEntry::converged)
    }
}

/// Per-row cutoff, residual and timing. Failures are recorded, not raised.
pub fn convergence_report(spec: &SweepSpec) -> ConvergenceReport {
    let has_overrides = spec.has_overrides();
    if let Err(e) = spec.validate() {
        return ConvergenceReport {
            entries: vec![ConvergenceEntry {
                prep_alpha: spec.base.prep.alpha,
                meas_alpha: spec.base.meas.alpha,
                t: spec.base.t,
                theta: spec.base.thermal.theta,
                dim: None,
                residual: None,
                wall_time: Duration::ZERO,
                error: Some(e.to_string()),
            }],
            has_overrides,
        };
    }
    let groups = spec.groups();
    let times = spec.sorted_times();
    let run = || -> Vec<ConvergenceEntry> {
        let dims: Vec<(Result<usize, String>, Duration)> = groups
            .par_iter()
            .map(|g| {
                let start = Instant::now();
                let dim = group_cutoff(spec, g).map_err(|e| e.to_string());
                (dim, start.elapsed())
            })
            .collect();
        let tasks: Vec<(usize, f64)> = (0..groups.len())
            .flat_map(|g| times.iter().map(move |&t| (g, t)))
            .collect();
        tasks
            .par_iter()
            .map(|&(g, t)| {
                let group = &groups[g];
                let (dim, cutoff_time) = &dims[g];
                let start = Instant::now();
                let (dim, residual, error) = match dim {
                    Err(e) => (None, None, Some(e.clone())),
                    Ok(dim) => match evaluate_row(spec, group, t, *dim) {
                        Ok(o) => (Some(*dim), Some(o.row.residual), None),
                        Err(SweepError::NotConverged { residual, .. }) => (
                            Some(*dim),
                            Some(residual),
                            Some("residual above epsilon".to_string()),
                        ),
                        Err(e) => (Some(*dim), None, Some(e.to_string())),
                    },
                };
                ConvergenceEntry {
                    prep_alpha: group.prep_alpha,
                    meas_alpha: group.meas_alpha,
                    t,
                    theta: group.theta,
                    dim,
                    residual,
                    wall_time: *cutoff_time + start.elapsed(),
                    error,
                }
            })
            .collect()
    };
    let entries = with_pool(spec.threads, run).unwrap_or_else(|e| {
        vec![ConvergenceEntry {
            prep_alpha: spec.base.prep.alpha,
            meas_alpha: spec.base.meas.alpha,
            t: spec.base.t,
            theta: spec.base.thermal.theta,
            dim: None,
            residual: None,
            wall_time: Duration::ZERO,
            error: Some(e.to_string()),
        }]
    });
    ConvergenceReport {
        entries,
        has_overrides,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qee_core::model::PdParams;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn base() -> ProtocolConfig {
        let mut cfg = ProtocolConfig::new(
            PdParams::from_ratio(C64::new(0.5, 0.5), 1.0).unwrap(),
            PdParams::from_ratio(C64::new(FRAC_1_SQRT_2, 0.0), 1.0).unwrap(),
            0.0,
            ThermalSpec::zero(),
        )
        .unwrap();
        cfg.tau_grid = qee_core::protocol::uniform_grid(0.0, cfg.meas.period(), 64);
        cfg
    }

    #[test]
    fn thread_resolution() {
        assert_eq!(resolve_threads(3, None), 3);
        assert_eq!(resolve_threads(3, Some(2)), 2);
        assert_eq!(resolve_threads(3, Some(0)), 3);
        assert!(resolve_threads(0, None) >= 1);
    }

    #[test]
    fn zero_time_rows_have_no_signal() {
        let spec = SweepSpec::new(base(), vec![0.0], vec![0.0, 0.5]);
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 2);
        for row in &result.rows {
            assert!(row.max_abs_re < 1e-12 && row.max_abs_im < 1e-12);
        }
    }

    #[test]
    fn rows_sorted_by_theta_then_t() {
        let spec = SweepSpec::new(base(), vec![2.0, 0.5], vec![0.5, 0.0]);
        let result = run_sweep(&spec).unwrap();
        let keys: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.theta, r.t)).collect();
        assert_eq!(keys, [(0.0, 0.5), (0.0, 2.0), (0.5, 0.5), (0.5, 2.0)]);
    }

    #[test]
    fn override_axes_multiply_rows() {
        let mut spec = SweepSpec::new(base(), vec![1.0], vec![0.0]);
        spec.meas_alpha = vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, 0.0)];
        let result = run_sweep(&spec).unwrap();
        assert!(result.has_overrides);
        assert_eq!(result.rows.len(), 2);
        assert!(result.rows[0].max_abs_re > 1e-3);
        assert!(result.rows[1].max_abs_re < 1e-9);
        assert!(result.rows[1].gap > 1e-3);
    }

    #[test]
    fn invalid_axes_rejected() {
        let spec = SweepSpec::new(base(), vec![], vec![0.0]);
        assert!(matches!(run_sweep(&spec), Err(SweepError::Invalid(_))));
        let spec = SweepSpec::new(base(), vec![1.0], vec![-1.0]);
        assert!(matches!(run_sweep(&spec), Err(SweepError::Invalid(_))));
    }

    #[test]
    fn failing_cutoff_aborts_sweep_but_is_reported() {
        let mut cfg = base();
        cfg.cutoff.n_max = 8;
        let spec = SweepSpec::new(cfg, vec![1.0, 2.0], vec![2.0]);
        match run_sweep(&spec) {
            Err(SweepError::Cutoff { theta, .. }) => assert_eq!(theta, 2.0),
            other => panic!("{other:?}"),
        }
        let report = convergence_report(&spec);
        assert_eq!(report.entries.len(), 2);
        assert!(!report.all_converged());
    }
}
