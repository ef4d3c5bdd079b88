//! Browser bindings: a fiber-rate curve, the best interface count and the best bandwidth.
//!
//! Each export wraps a plain Rust function so the numbers can be checked without a browser.

use fawna_core::optimizer::{Spacing, SweepTable};
use fawna_core::{
    optimal_bandwidth, optimal_interfaces, sweep, Argmax, Error, LinkConfig, QuantizerModel,
    SweepVariable,
};
use wasm_bindgen::prelude::*;

/// A plotted curve and the point it peaks at.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    x: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
    argmax: f64,
    best: f64,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn upper(&self) -> Vec<f64> {
        self.upper.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn lower(&self) -> Vec<f64> {
        self.lower.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn argmax(&self) -> f64 {
        self.argmax
    }

    #[wasm_bindgen(getter)]
    pub fn best(&self) -> f64 {
        self.best
    }
}

impl Curve {
    fn from_table(table: &SweepTable, argmax: f64, best: f64) -> Self {
        let rows = table.rows.iter().filter(|r| r.admissible);
        Self {
            x: rows.clone().map(|r| r.value).collect(),
            upper: rows.clone().map(|r| r.upper_bound).collect(),
            lower: rows.map(|r| r.report.lower_bound).collect(),
            argmax,
            best,
        }
    }
}

fn quantizer(mb_product: f64) -> Result<QuantizerModel, Error> {
    QuantizerModel::from_mb_product(mb_product)
}

/// Bounds against fiber rate from one bit per sample up to `max_bits` bits.
pub fn fiber_rate_curve(
    power_over_n0: f64,
    bandwidth_hz: f64,
    interfaces: u32,
    mb_product: f64,
    max_bits: f64,
    points: u32,
) -> Result<Curve, Error> {
    let per_bit = interfaces as f64 * bandwidth_hz;
    let cfg = LinkConfig::unit_gains(power_over_n0, bandwidth_hz, interfaces as usize, per_bit)?;
    let table = sweep(
        SweepVariable::FiberRate,
        per_bit,
        max_bits * per_bit,
        points as usize,
        Spacing::Linear,
        &cfg,
        &quantizer(mb_product)?,
    )?;
    let best = table
        .best_row()
        .map_or((f64::NAN, f64::NAN), |r| (r.value, r.report.lower_bound));
    Ok(Curve::from_table(&table, best.0, best.1))
}

/// Lower bound for every feasible interface count and the best of them.
pub fn interface_curve(
    power_over_n0: f64,
    bandwidth_hz: f64,
    fiber_bps: f64,
    mb_product: f64,
) -> Result<Curve, Error> {
    let cfg = LinkConfig::unit_gains(power_over_n0, bandwidth_hz, 1, fiber_bps)?;
    let opt = optimal_interfaces(&cfg, &quantizer(mb_product)?)?;
    let Argmax::Interfaces(r) = opt.argmax else {
        unreachable!()
    };
    Ok(Curve::from_table(&opt.profile, r as f64, opt.value))
}

/// Lower bound against bandwidth and the refined optimum.
pub fn bandwidth_curve(
    power_over_n0: f64,
    interfaces: u32,
    fiber_bps: f64,
    mb_product: f64,
) -> Result<Curve, Error> {
    let r = interfaces as usize;
    let cfg = LinkConfig::unit_gains(power_over_n0, fiber_bps / r.max(1) as f64, r, fiber_bps)?;
    let opt = optimal_bandwidth(&cfg, &quantizer(mb_product)?)?;
    let Argmax::Bandwidth(w) = opt.argmax else {
        unreachable!()
    };
    Ok(Curve::from_table(&opt.profile, w, opt.value))
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = fiberRateCurve)]
pub fn fiber_rate_curve_js(
    power_over_n0: f64,
    bandwidth_hz: f64,
    interfaces: u32,
    mb_product: f64,
    max_bits: f64,
    points: u32,
) -> Result<Curve, JsError> {
    fiber_rate_curve(
        power_over_n0,
        bandwidth_hz,
        interfaces,
        mb_product,
        max_bits,
        points,
    )
    .map_err(js)
}

#[wasm_bindgen(js_name = interfaceCurve)]
pub fn interface_curve_js(
    power_over_n0: f64,
    bandwidth_hz: f64,
    fiber_bps: f64,
    mb_product: f64,
) -> Result<Curve, JsError> {
    interface_curve(power_over_n0, bandwidth_hz, fiber_bps, mb_product).map_err(js)
}

#[wasm_bindgen(js_name = bandwidthCurve)]
pub fn bandwidth_curve_js(
    power_over_n0: f64,
    interfaces: u32,
    fiber_bps: f64,
    mb_product: f64,
) -> Result<Curve, JsError> {
    bandwidth_curve(power_over_n0, interfaces, fiber_bps, mb_product).map_err(js)
}
