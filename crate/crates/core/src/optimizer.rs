//! Parameter sweeps and the two one-dimensional optimizations of the lower
//! bound: the interface count `r*` for a fixed bandwidth, and the bandwidth
//! `W*` for a fixed interface count. Both trade receive power against the
//! quantizer rate left per interface on a shared fiber.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::export::sig9;
use crate::model::{capacity_report_at_rate, CapacityReport, LinkConfig, QuantizerModel};

/// Exhaustive interface search is limited to this many candidates.
pub const MAX_INTERFACE_SEARCH: u64 = 10_000;
/// The bandwidth search starts where the quantizer rate reaches this many bits.
pub const BANDWIDTH_RATE_CAP: f64 = 1e4;
pub const COARSE_BANDWIDTH_POINTS: usize = 512;
pub const BANDWIDTH_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// `C_f`, bits/sec.
    FiberRate,
    /// `r`, with unit gains.
    Interfaces,
    /// `W`, Hz.
    Bandwidth,
    /// `P`, W.
    Power,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            Self::FiberRate => "fiber_rate",
            Self::Interfaces => "interfaces",
            Self::Bandwidth => "bandwidth",
            Self::Power => "power",
        }
    }

    fn apply(self, cfg: &LinkConfig, value: f64) -> Result<LinkConfig> {
        match self {
            Self::FiberRate => cfg.with_fiber_rate(value),
            Self::Bandwidth => cfg.with_bandwidth(value),
            Self::Power => cfg.with_power(value),
            Self::Interfaces => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(parameter(
                        "interfaces",
                        format!("must be a positive integer, got {value}"),
                    ));
                }
                cfg.with_unit_gains(value as usize)
            }
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fiber_rate" | "fiber-rate" | "fiber" => Ok(Self::FiberRate),
            "interfaces" => Ok(Self::Interfaces),
            "bandwidth" => Ok(Self::Bandwidth),
            "power" => Ok(Self::Power),
            other => Err(Error::UnknownVariable(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// `points` values from `lo` to `hi` inclusive. A single point requires `lo == hi`.
pub fn grid(lo: f64, hi: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(parameter("range", "bounds must be finite"));
    }
    match points {
        0 => return Err(parameter("points", "must be at least 1")),
        1 if lo == hi => return Ok(vec![lo]),
        1 => return Err(parameter("points", "a single point needs lo == hi")),
        _ if lo >= hi => {
            return Err(parameter(
                "range",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ))
        }
        _ => {}
    }
    if spacing == Spacing::Log && lo <= 0.0 {
        return Err(parameter("range", "log spacing needs lo > 0"));
    }
    let last = (points - 1) as f64;
    let mut values: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / last;
            match spacing {
                Spacing::Linear => lo + t * (hi - lo),
                Spacing::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
            }
        })
        .collect();
    values[0] = lo;
    values[points - 1] = hi;
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// Quantizer rate at or above the one-bit floor.
    pub admissible: bool,
    pub upper_bound: f64,
    pub report: CapacityReport,
}

/// Rows in ascending order of the swept value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str =
    "variable,value,upper_bound_bps,phi_bps,lower_bound_bps,quantizer_rate_bits,admissible";

impl SweepTable {
    /// Highest admissible lower bound; the first such row wins ties.
    pub fn best_row(&self) -> Option<&SweepRow> {
        let mut best: Option<&SweepRow> = None;
        for row in self.rows.iter().filter(|r| r.admissible) {
            if best.is_none_or(|b| row.report.lower_bound > b.report.lower_bound) {
                best = Some(row);
            }
        }
        best
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.report.lower_bound).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.variable.name(),
                sig9(row.value),
                sig9(row.upper_bound),
                sig9(row.report.phi),
                sig9(row.report.lower_bound),
                sig9(row.report.quantizer_rate),
                row.admissible
            );
        }
        out
    }
}

fn evaluate(
    variable: SweepVariable,
    cfg: &LinkConfig,
    q: &QuantizerModel,
    value: f64,
) -> Result<SweepRow> {
    let point = variable.apply(cfg, value)?;
    let report = capacity_report_at_rate(&point, q, point.quantizer_rate())?;
    Ok(SweepRow {
        value,
        admissible: point.is_admissible(),
        upper_bound: report.upper_bound,
        report,
    })
}

fn evaluate_all(
    variable: SweepVariable,
    cfg: &LinkConfig,
    q: &QuantizerModel,
    values: &[f64],
) -> Result<SweepTable> {
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        values
            .par_iter()
            .map(|&v| evaluate(variable, cfg, q, v))
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows = values
        .iter()
        .map(|&v| evaluate(variable, cfg, q, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { variable, rows })
}

/// Evaluates the bounds across `points` values of `variable`, holding the rest of `cfg` fixed.
///
/// Points past the one-bit floor are kept and marked inadmissible. For the
/// interface variable values are rounded to integers and deduplicated, and the
/// gain vector becomes all-ones.
pub fn sweep(
    variable: SweepVariable,
    lo: f64,
    hi: f64,
    points: usize,
    spacing: Spacing,
    cfg: &LinkConfig,
    q: &QuantizerModel,
) -> Result<SweepTable> {
    let mut values = grid(lo, hi, points, spacing)?;
    if variable == SweepVariable::Interfaces {
        values.iter_mut().for_each(|v| *v = v.round());
        values.dedup();
    }
    evaluate_all(variable, cfg, q, &values)
}

/// Location of an optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Argmax {
    Interfaces(u64),
    Bandwidth(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumResult {
    pub argmax: Argmax,
    /// Lower bound at the optimum, bits/sec.
    pub value: f64,
    /// The evaluations the search was based on.
    pub profile: SweepTable,
}

/// `r* = argmax over r in 1..=⌊C_f/W⌋` of the lower bound, with unit gains.
///
/// The search is exhaustive; ties go to the smaller `r`. The gain vector of `cfg` is ignored.
pub fn optimal_interfaces(cfg: &LinkConfig, q: &QuantizerModel) -> Result<OptimumResult> {
    let r_max = cfg.max_interfaces();
    if r_max < 1 {
        return Err(Error::Inadmissible {
            quantizer_rate: cfg.fiber_rate() / cfg.bandwidth(),
            floor: crate::model::RATE_FLOOR,
            r_max,
            w_max_hz: cfg.fiber_rate(),
        });
    }
    if r_max > MAX_INTERFACE_SEARCH {
        return Err(Error::Precondition(format!(
            "r_max = {r_max} exceeds the exhaustive search limit of {MAX_INTERFACE_SEARCH}"
        )));
    }
    let values: Vec<f64> = (1..=r_max).map(|r| r as f64).collect();
    let profile = evaluate_all(SweepVariable::Interfaces, cfg, q, &values)?;
    let best = profile
        .best_row()
        .ok_or_else(|| Error::Numerics("no admissible interface count".into()))?;
    Ok(OptimumResult {
        argmax: Argmax::Interfaces(best.value as u64),
        value: best.report.lower_bound,
        profile: profile.clone(),
    })
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `rel_tol` times its midpoint. Returns `(x, f(x))`.
pub fn golden_section_maximize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a) <= rel_tol * 0.5 * (a + b).abs() {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `W* = argmax over W in (0, C_f/r]` of the lower bound, for the unit-gain configuration `cfg`.
///
/// A 512-point log-spaced scan over `[C_f/(r·10⁴), C_f/r]` brackets the best
/// point; golden-section search then refines it to relative tolerance 10⁻⁴.
/// The bandwidth of `cfg` is ignored.
pub fn optimal_bandwidth(cfg: &LinkConfig, q: &QuantizerModel) -> Result<OptimumResult> {
    if !cfg.has_unit_gains() {
        return Err(Error::Precondition(
            "bandwidth optimization assumes unit gains".into(),
        ));
    }
    let hi = cfg.max_bandwidth();
    let lo = hi / BANDWIDTH_RATE_CAP;
    if !(hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::Inadmissible {
            quantizer_rate: cfg.quantizer_rate(),
            floor: crate::model::RATE_FLOOR,
            r_max: cfg.max_interfaces(),
            w_max_hz: hi,
        });
    }
    let values = grid(lo, hi, COARSE_BANDWIDTH_POINTS, Spacing::Log)?;
    let profile = evaluate_all(SweepVariable::Bandwidth, cfg, q, &values)?;
    let k = profile
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.admissible)
        .fold(None::<(usize, f64)>, |best, (i, r)| match best {
            Some((_, v)) if v >= r.report.lower_bound => best,
            _ => Some((i, r.report.lower_bound)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Numerics("no admissible bandwidth".into()))?;

    let coarse = (values[k], profile.rows[k].report.lower_bound);
    let a = values[k.saturating_sub(1)];
    let b = values[(k + 1).min(values.len() - 1)];
    let objective = |w: f64| {
        cfg.with_bandwidth(w)
            .and_then(|c| capacity_report_at_rate(&c, q, c.quantizer_rate()))
            .map_or(f64::NEG_INFINITY, |r| r.lower_bound)
    };
    let refined = if a < b {
        golden_section_maximize(objective, a, b, BANDWIDTH_REL_TOL)
    } else {
        coarse
    };
    let (w, value) = if refined.1 >= coarse.1 {
        refined
    } else {
        coarse
    };
    Ok(OptimumResult {
        argmax: Argmax::Bandwidth(w),
        value,
        profile,
    })
}
