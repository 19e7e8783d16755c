//! CSV tables and the one-line verdict record.
//!
//! Numbers are rounded to a fixed count of significant digits and then
//! printed as plain decimals (no exponent, no locale). `-0` prints as `0`.
//! Lines end in `\n`.

use std::io::{self, Write};

use qee_core::{WitnessCurve, WitnessVerdict, C64};

use crate::sweep::{ConvergenceReport, SweepResult};

pub const DEFAULT_PRECISION: usize = 12;

pub const CURVE_HEADER: &str = "tau,re0,im0,re1,im1,dre,dim";
pub const SWEEP_HEADER: &str = "t,theta,max_abs_re,max_abs_im,gap,negativity,dim,residual";
pub const CONVERGENCE_HEADER: &str = "t,theta,dim,residual,wall_time_s,status";
const OVERRIDE_PREFIX: &str = "prep_alpha_re,prep_alpha_im,meas_alpha_re,meas_alpha_im,";

/// Exit status of the `verdict` mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictStatus {
    Witnessed = 0,
    NotWitnessed = 1,
    Fault = 2,
}

impl VerdictStatus {
    pub fn of(verdict: &WitnessVerdict) -> Self {
        if !verdict.consistency {
            VerdictStatus::Fault
        } else if verdict.witnessed {
            VerdictStatus::Witnessed
        } else {
            VerdictStatus::NotWitnessed
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// `x` rounded to `precision` significant digits, printed as a decimal.
pub fn format_number(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = precision.max(1);
    let rounded: f64 = format!("{:.*e}", digits - 1, x)
        .parse()
        .expect("formatted float parses");
    format!("{rounded}")
}

fn opt_number(x: Option<f64>, precision: usize) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format_number(v, precision))
}

fn complex_fields(z: C64, precision: usize) -> String {
    format!(
        "{},{}",
        format_number(z.re, precision),
        format_number(z.im, precision)
    )
}

pub fn write_curve_csv<W: Write>(
    curve: &WitnessCurve,
    out: &mut W,
    precision: usize,
) -> io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for k in 0..curve.len() {
        writeln!(
            out,
            "{},{},{},{}",
            format_number(curve.tau[k], precision),
            complex_fields(curve.coh0[k], precision),
            complex_fields(curve.coh1[k], precision),
            complex_fields(curve.signal[k], precision),
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(
    result: &SweepResult,
    out: &mut W,
    precision: usize,
) -> io::Result<()> {
    let prefix = if result.has_overrides {
        OVERRIDE_PREFIX
    } else {
        ""
    };
    writeln!(out, "{prefix}{SWEEP_HEADER}")?;
    for row in &result.rows {
        if result.has_overrides {
            write!(
                out,
                "{},{},",
                complex_fields(row.prep_alpha, precision),
                complex_fields(row.meas_alpha, precision)
            )?;
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_number(row.t, precision),
            format_number(row.theta, precision),
            format_number(row.max_abs_re, precision),
            format_number(row.max_abs_im, precision),
            format_number(row.gap, precision),
            opt_number(row.negativity, precision),
            row.dim,
            format_number(row.residual, precision),
        )?;
    }
    Ok(())
}

pub fn write_convergence_csv<W: Write>(
    report: &ConvergenceReport,
    out: &mut W,
    precision: usize,
) -> io::Result<()> {
    let prefix = if report.has_overrides {
        OVERRIDE_PREFIX
    } else {
        ""
    };
    writeln!(out, "{prefix}{CONVERGENCE_HEADER}")?;
    for e in &report.entries {
        if report.has_overrides {
            write!(
                out,
                "{},{},",
                complex_fields(e.prep_alpha, precision),
                complex_fields(e.meas_alpha, precision)
            )?;
        }
        let status = match &e.error {
            None => "ok".to_string(),
            // Keep the record on one CSV field.
            Some(msg) => format!("\"error: {}\"", msg.replace('"', "'")),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_number(e.t, precision),
            format_number(e.theta, precision),
            e.dim.map_or_else(|| "nan".to_string(), |d| d.to_string()),
            opt_number(e.residual, precision),
            format_number(e.wall_time.as_secs_f64(), 6),
            status,
        )?;
    }
    Ok(())
}

pub fn format_verdict(verdict: &WitnessVerdict, precision: usize) -> String {
    format!(
        "witnessed={} max_signal={} gap={} negativity={} consistent={}",
        verdict.witnessed,
        format_number(verdict.max_abs_signal, precision),
        format_number(verdict.separability_gap, precision),
        opt_number(verdict.negativity_value, precision),
        verdict.consistency,
    )
}

/// Writes the record and returns the exit status.
pub fn emit_verdict<W: Write>(
    verdict: &WitnessVerdict,
    out: &mut W,
    precision: usize,
) -> io::Result<VerdictStatus> {
    writeln!(out, "{}", format_verdict(verdict, precision))?;
    Ok(VerdictStatus::of(verdict))
}
