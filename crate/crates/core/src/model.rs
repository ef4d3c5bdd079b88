//! Closed-form capacity expressions for a quantize-and-forward SIMO link.
//!
//! A transmitter sends Gaussian symbols over a SIMO channel `y = a x + w` to `r`
//! wireless-optical interfaces. Each interface quantizes its samples at `l` bits
//! per complex sample and forwards them over a shared fiber of rate `C_f`, so
//! `l <= C_f / (r W)`. This module evaluates the wireless capacity (an upper
//! bound on the link), the quantization penalty `Φ` and the resulting
//! achievable-rate lower bound.
//!
//! All logarithms are base 2 and every rate is in bits/sec.

use std::f64::consts::{LN_2, LOG2_E};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::quantizer::ZadorGershoConstants;

/// Smallest admissible quantizer rate, in bits per complex sample.
pub const RATE_FLOOR: f64 = 1.0;

/// Relative slack applied when comparing a derived rate against [`RATE_FLOOR`],
/// so `W = C_f / r` is admissible despite rounding in `C_f / (r W)`.
const FLOOR_SLACK: f64 = 1e-12;

/// Full parameterization of one link.
///
/// Values are validated on construction and immutable afterwards; the
/// `with_*` methods return modified copies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkConfig {
    power: f64,
    noise_density: f64,
    bandwidth: f64,
    gains: Vec<Complex64>,
    fiber_rate: f64,
}

fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(parameter(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

impl LinkConfig {
    /// `power` in W, `noise_density` (N₀) in W/Hz, `bandwidth` in Hz, `fiber_rate` in bits/sec.
    pub fn new(
        power: f64,
        noise_density: f64,
        bandwidth: f64,
        gains: Vec<Complex64>,
        fiber_rate: f64,
    ) -> Result<Self> {
        if gains.is_empty() {
            return Err(parameter("gains", "at least one interface is required"));
        }
        if let Some(g) = gains
            .iter()
            .find(|g| !(g.re.is_finite() && g.im.is_finite()))
        {
            return Err(parameter("gains", format!("non-finite gain {g}")));
        }
        Ok(Self {
            power: positive("power", power)?,
            noise_density: positive("noise_density", noise_density)?,
            bandwidth: positive("bandwidth", bandwidth)?,
            gains,
            fiber_rate: positive("fiber_rate", fiber_rate)?,
        })
    }

    /// All-ones gain vector with `N₀ = 1`, so `power` is numerically `P/N₀` in s⁻¹.
    pub fn unit_gains(
        power_over_n0: f64,
        bandwidth: f64,
        interfaces: usize,
        fiber_rate: f64,
    ) -> Result<Self> {
        if interfaces == 0 {
            return Err(parameter("interfaces", "must be at least 1"));
        }
        Self::new(
            power_over_n0,
            1.0,
            bandwidth,
            vec![Complex64::new(1.0, 0.0); interfaces],
            fiber_rate,
        )
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_density(&self) -> f64 {
        self.noise_density
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn fiber_rate(&self) -> f64 {
        self.fiber_rate
    }

    /// Number of interfaces `r`.
    pub fn interfaces(&self) -> usize {
        self.gains.len()
    }

    pub fn power_over_n0(&self) -> f64 {
        self.power / self.noise_density
    }

    /// Per-unit-gain receive SNR `P / (N₀ W)`.
    pub fn snr(&self) -> f64 {
        self.power / (self.noise_density * self.bandwidth)
    }

    /// `‖a‖²`
    pub fn gain_norm_sq(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn has_unit_gains(&self) -> bool {
        self.gains.iter().all(|g| g.re == 1.0 && g.im == 0.0)
    }

    /// Largest quantizer rate the fiber supports, `C_f / (r W)` bits per complex sample.
    pub fn quantizer_rate(&self) -> f64 {
        self.fiber_rate / (self.interfaces() as f64 * self.bandwidth)
    }

    pub fn is_admissible(&self) -> bool {
        self.quantizer_rate() >= RATE_FLOOR * (1.0 - FLOOR_SLACK)
    }

    /// `⌊C_f / W⌋`: the most interfaces that keep the rate at or above one bit.
    pub fn max_interfaces(&self) -> u64 {
        (self.fiber_rate / (RATE_FLOOR * self.bandwidth) * (1.0 + FLOOR_SLACK)).floor() as u64
    }

    /// `C_f / r`: the widest bandwidth that keeps the rate at or above one bit.
    pub fn max_bandwidth(&self) -> f64 {
        self.fiber_rate / (RATE_FLOOR * self.interfaces() as f64)
    }

    /// `|a_i|² P / (N₀ W)` for each interface.
    pub fn per_interface_snr(&self) -> Vec<f64> {
        let snr = self.snr();
        self.gains.iter().map(|g| g.norm_sqr() * snr).collect()
    }

    /// Receive power `E[|y_i|²] = N₀ + |a_i|² P / W` at each interface.
    pub fn received_power(&self) -> Vec<f64> {
        self.gains
            .iter()
            .map(|g| self.noise_density + g.norm_sqr() * self.power / self.bandwidth)
            .collect()
    }

    pub fn with_power(&self, power: f64) -> Result<Self> {
        Ok(Self {
            power: positive("power", power)?,
            ..self.clone()
        })
    }

    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        Ok(Self {
            bandwidth: positive("bandwidth", bandwidth)?,
            ..self.clone()
        })
    }

    pub fn with_fiber_rate(&self, fiber_rate: f64) -> Result<Self> {
        Ok(Self {
            fiber_rate: positive("fiber_rate", fiber_rate)?,
            ..self.clone()
        })
    }

    pub fn with_gains(&self, gains: Vec<Complex64>) -> Result<Self> {
        Self::new(
            self.power,
            self.noise_density,
            self.bandwidth,
            gains,
            self.fiber_rate,
        )
    }

    pub fn with_unit_gains(&self, interfaces: usize) -> Result<Self> {
        if interfaces == 0 {
            return Err(parameter("interfaces", "must be at least 1"));
        }
        self.with_gains(vec![Complex64::new(1.0, 0.0); interfaces])
    }
}

/// Quantizer dimension `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Finite(u32),
    /// The `m → ∞` limit, where `M_m β_m = 1`.
    Asymptotic,
}

/// An analytical quantizer family, characterised by the Zador–Gersho product `M_m β_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizerModel {
    dimension: Option<Dimension>,
    mb_product: f64,
}

impl QuantizerModel {
    /// Fixed-rate scalar quantization of a Gaussian source: `M₁ β₁ᴳ = π√3/2`.
    pub fn scalar() -> Self {
        Self {
            dimension: Some(Dimension::Finite(1)),
            mb_product: ZadorGershoConstants::scalar_product(),
        }
    }

    pub fn asymptotic() -> Self {
        Self {
            dimension: Some(Dimension::Asymptotic),
            mb_product: ZadorGershoConstants::asymptotic_product(),
        }
    }

    pub fn new(dimension: u32, mb_product: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(parameter("dimension", "must be at least 1"));
        }
        Ok(Self {
            dimension: Some(Dimension::Finite(dimension)),
            mb_product: Self::check_product(mb_product)?,
        })
    }

    /// A model known only through its product, with no committed dimension.
    pub fn from_mb_product(mb_product: f64) -> Result<Self> {
        Ok(Self {
            dimension: None,
            mb_product: Self::check_product(mb_product)?,
        })
    }

    fn check_product(mb: f64) -> Result<f64> {
        let lo = ZadorGershoConstants::asymptotic_product();
        let hi = ZadorGershoConstants::scalar_product();
        if mb.is_finite() && mb >= lo * (1.0 - 1e-12) && mb <= hi * (1.0 + 1e-12) {
            Ok(mb.clamp(lo, hi))
        } else {
            Err(parameter(
                "mb_product",
                format!("must lie in [1, π√3/2 ≈ {hi:.6}], got {mb}"),
            ))
        }
    }

    pub fn dimension(&self) -> Option<Dimension> {
        self.dimension
    }

    pub fn mb_product(&self) -> f64 {
        self.mb_product
    }

    /// Normalized distortion `M_m β_m 2⁻ˡ`.
    pub fn relative_distortion(&self, rate: f64) -> f64 {
        self.mb_product * (-rate).exp2()
    }
}

/// Capacity bounds for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Wireless capacity `W log(1 + ‖a‖² P / N₀ W)`, bits/sec.
    pub upper_bound: f64,
    /// Quantization penalty `Φ`, bits/sec, saturated at `upper_bound`.
    pub phi: f64,
    /// `max(0, upper_bound − phi)`, bits/sec.
    pub lower_bound: f64,
    /// Quantizer rate, bits per complex sample.
    pub quantizer_rate: f64,
    pub per_interface_snr: Vec<f64>,
    /// Set when `Φ` exceeded the upper bound (or was unevaluable) and the lower bound was clamped to zero.
    pub clamped: bool,
}

impl CapacityReport {
    pub fn per_interface_snr_db(&self) -> Vec<f64> {
        self.per_interface_snr
            .iter()
            .map(|s| 10.0 * s.log10())
            .collect()
    }
}

/// `W log(1 + ‖a‖² P / (N₀ W))`, which also upper-bounds the end-to-end capacity.
pub fn wireless_capacity(cfg: &LinkConfig) -> f64 {
    cfg.bandwidth() * (cfg.gain_norm_sq() * cfg.snr()).ln_1p() / LN_2
}

fn check_rate(rate: f64) -> Result<f64> {
    if rate.is_nan() || rate < 0.0 {
        Err(parameter(
            "quantizer_rate",
            format!("must be >= 0, got {rate}"),
        ))
    } else {
        Ok(rate)
    }
}

/// SNR retention factor `ψ(l) = (1 − M_m β_m 2⁻ˡ) / (1 + P M_m β_m 2⁻ˡ / (N₀ W))`.
///
/// Negative when `M_m β_m 2⁻ˡ > 1`.
pub fn psi(cfg: &LinkConfig, q: &QuantizerModel, rate: f64) -> Result<f64> {
    let d = q.relative_distortion(check_rate(rate)?);
    Ok((1.0 - d) / (1.0 + cfg.snr() * d))
}

/// `1 − ψ(l)`, written as `d (1 + s) / (1 + s d)` so it stays accurate when `ψ → 1`.
fn psi_complement(snr: f64, d: f64) -> f64 {
    d * (1.0 + snr) / (1.0 + snr * d)
}

/// `x = r (1 − ψ) s / (1 + r ψ s)`, so that `Φ = W log(1 + x)` for unit gains.
fn unit_gain_excess(cfg: &LinkConfig, q: &QuantizerModel, rate: f64) -> Result<f64> {
    if !cfg.has_unit_gains() {
        return Err(Error::Precondition(
            "the unit-gain form requires every gain to equal 1".into(),
        ));
    }
    let psi = psi(cfg, q, rate)?;
    let s = cfg.snr();
    let r = cfg.interfaces() as f64;
    let d = q.relative_distortion(rate);
    let retained = 1.0 + r * psi * s;
    if !(retained > 0.0) {
        return Err(Error::Numerics(format!(
            "retained SNR term 1 + rψs = {retained} is not positive"
        )));
    }
    Ok(r * psi_complement(s, d) * s / retained)
}

/// Quantization penalty for an all-ones gain vector:
/// `W log(1 + r P / N₀ W) − W log(1 + r ψ(l) P / N₀ W)`.
///
/// Evaluated as the single logarithm `W log(1 + x)`, which equals the difference
/// above but does not cancel catastrophically at high rates.
pub fn phi_unit_gain(cfg: &LinkConfig, q: &QuantizerModel, rate: f64) -> Result<f64> {
    let x = unit_gain_excess(cfg, q, rate)?;
    Ok(cfg.bandwidth() * x.ln_1p() / LN_2)
}

/// `t = a† D⁻¹ a` and `1 + ρ t` for the matrix `D + ρ a a†`, with `D` diagonal.
///
/// By Sherman–Morrison, `a† (D + ρ a a†)⁻¹ a = t / (1 + ρ t)`, and the matrix is
/// singular exactly when `1 + ρ t = 0`.
#[derive(Debug, Clone, Copy)]
struct RankOneForm {
    t: f64,
    denom: f64,
}

impl RankOneForm {
    fn new(diag: &[f64], rho: f64, a: &[Complex64]) -> Result<Self> {
        let mut t = 0.0;
        for (d, ai) in diag.iter().zip(a) {
            if !(*d > 0.0) {
                return Err(Error::Numerics(format!(
                    "diagonal entry {d} is not positive"
                )));
            }
            t += ai.norm_sqr() / d;
        }
        let denom = 1.0 + rho * t;
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(Error::Numerics(format!(
                "rank-one update is singular or indefinite (1 + ρt = {denom})"
            )));
        }
        Ok(Self { t, denom })
    }

    fn quadratic_form(&self) -> f64 {
        self.t / self.denom
    }
}

/// Quantization penalty `Φ` for an arbitrary complex gain vector:
///
/// `Φ = W log(1 + ‖a‖² s) + W log(1 − ρ a† [ρ a a† + I + ρ' Diag{|a_i|²}]⁻¹ a)`
///
/// with `s = P / N₀ W`, `ρ = s (1 − M_m β_m 2⁻ˡ)` and `ρ' = s M_m β_m 2⁻ˡ`.
/// The inverse is never formed: the inner matrix is diagonal plus rank one.
pub fn phi_general(cfg: &LinkConfig, q: &QuantizerModel, rate: f64) -> Result<f64> {
    let d = q.relative_distortion(check_rate(rate)?);
    let s = cfg.snr();
    let rho = s * (1.0 - d);
    let rho_diag = s * d;
    let diag: Vec<f64> = cfg
        .gains()
        .iter()
        .map(|a| 1.0 + rho_diag * a.norm_sqr())
        .collect();
    let form = RankOneForm::new(&diag, rho, cfg.gains())?;
    debug_assert!((1.0 - rho * form.quadratic_form() - 1.0 / form.denom).abs() < 1e-9);

    // (1 + ‖a‖²s)(1 − ρ t/(1+ρt)) = 1 + (‖a‖²s − ρt)/(1+ρt), and
    // ‖a‖²s − ρt = Σ s|a_i|² d (1 + s|a_i|²) / D_ii has no cancellation.
    let excess: f64 = cfg
        .gains()
        .iter()
        .zip(&diag)
        .map(|(a, di)| {
            let g = a.norm_sqr();
            s * g * d * (1.0 + s * g) / di
        })
        .sum();
    Ok(cfg.bandwidth() * (excess / form.denom).ln_1p() / LN_2)
}

fn phi_auto(cfg: &LinkConfig, q: &QuantizerModel, rate: f64) -> Result<f64> {
    if cfg.has_unit_gains() {
        phi_unit_gain(cfg, q, rate)
    } else {
        phi_general(cfg, q, rate)
    }
}

/// Bounds at an explicit quantizer rate, without the admissibility floor.
///
/// Used by sweeps that probe past the floor; [`capacity_lower_bound`] is the checked entry point.
pub fn capacity_report_at_rate(
    cfg: &LinkConfig,
    q: &QuantizerModel,
    rate: f64,
) -> Result<CapacityReport> {
    let upper_bound = wireless_capacity(cfg);
    let (phi, unevaluable) = match phi_auto(cfg, q, rate) {
        Ok(phi) => (phi, false),
        // Coarse quantization can drive the retained SNR term non-positive; the whole rate is lost.
        Err(Error::Numerics(_)) => (upper_bound, true),
        Err(e) => return Err(e),
    };
    let clamped = unevaluable || phi > upper_bound;
    // A penalty beyond the whole wireless capacity is reported as the whole capacity.
    let phi = phi.min(upper_bound);
    Ok(CapacityReport {
        upper_bound,
        phi,
        lower_bound: upper_bound - phi,
        quantizer_rate: rate,
        per_interface_snr: cfg.per_interface_snr(),
        clamped,
    })
}

/// Achievable-rate lower bound at the largest rate the fiber allows, `l = C_f / (r W)`.
///
/// `Φ` decreases in `l`, so that rate minimizes the penalty.
pub fn capacity_lower_bound(cfg: &LinkConfig, q: &QuantizerModel) -> Result<CapacityReport> {
    let rate = cfg.quantizer_rate();
    if !cfg.is_admissible() {
        return Err(Error::Inadmissible {
            quantizer_rate: rate,
            floor: RATE_FLOOR,
            r_max: cfg.max_interfaces(),
            w_max_hz: cfg.max_bandwidth(),
        });
    }
    capacity_report_at_rate(cfg, q, rate)
}

/// Explicit envelope around `Φ` from `x − x²/2 <= ln(1 + x) <= x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayEnvelope {
    pub upper: f64,
    pub lower: f64,
}

/// Upper and lower envelopes of the unit-gain `Φ` at rate `l`. Both scale as `2⁻ˡ`.
pub fn phi_decay_envelope(
    cfg: &LinkConfig,
    q: &QuantizerModel,
    rate: f64,
) -> Result<DecayEnvelope> {
    let x = unit_gain_excess(cfg, q, rate)?;
    let w = cfg.bandwidth();
    Ok(DecayEnvelope {
        upper: w * x * LOG2_E,
        lower: w * (x - 0.5 * x * x) * LOG2_E,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2(fiber: f64) -> LinkConfig {
        LinkConfig::unit_gains(25e6, 1e6, 5, fiber).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn wireless_capacity_matches_hand_evaluation() {
        let c = wireless_capacity(&fig2(1e9));
        assert!(rel(c, 1e6 * 126f64.log2()) < 1e-14);
        assert!((c - 6.977e6).abs() < 1e3);
    }

    #[test]
    fn wireless_capacity_vanishes_without_signal() {
        assert!(wireless_capacity(&fig2(1e9).with_power(1e-300).unwrap()) < 1e-200);
        let dead = fig2(1e9)
            .with_gains(vec![Complex64::new(0.0, 0.0); 5])
            .unwrap();
        assert_eq!(wireless_capacity(&dead), 0.0);
    }

    #[test]
    fn config_rejects_bad_fields() {
        let e = LinkConfig::unit_gains(-1.0, 1e6, 2, 1e8).unwrap_err();
        assert!(matches!(e, Error::Parameter { field: "power", .. }));
        let e = LinkConfig::unit_gains(1.0, 0.0, 2, 1e8).unwrap_err();
        assert!(matches!(
            e,
            Error::Parameter {
                field: "bandwidth",
                ..
            }
        ));
        let e = LinkConfig::unit_gains(1.0, 1.0, 0, 1e8).unwrap_err();
        assert!(matches!(
            e,
            Error::Parameter {
                field: "interfaces",
                ..
            }
        ));
        let e = LinkConfig::new(1.0, 1.0, 1.0, vec![], 1.0).unwrap_err();
        assert!(matches!(e, Error::Parameter { field: "gains", .. }));
        let e =
            LinkConfig::new(1.0, f64::NAN, 1.0, vec![Complex64::new(1.0, 0.0)], 1.0).unwrap_err();
        assert!(matches!(
            e,
            Error::Parameter {
                field: "noise_density",
                ..
            }
        ));
    }

    #[test]
    fn quantizer_model_range() {
        assert!(QuantizerModel::from_mb_product(3.0).is_err());
        assert!(QuantizerModel::from_mb_product(0.99).is_err());
        assert!(QuantizerModel::new(0, 1.5).is_err());
        assert_eq!(QuantizerModel::asymptotic().mb_product(), 1.0);
        let s = QuantizerModel::scalar();
        assert!((s.mb_product() - std::f64::consts::PI * 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(QuantizerModel::from_mb_product(s.mb_product()).is_ok());
    }

    #[test]
    fn psi_reference_values() {
        let q = QuantizerModel::asymptotic();
        // P/(N0 W) = 1
        let cfg = LinkConfig::unit_gains(1.0, 1.0, 1, 10.0).unwrap();
        assert!((psi(&cfg, &q, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(psi(&cfg, &q, 0.0).unwrap(), 0.0);
        assert_eq!(psi(&cfg, &q, f64::INFINITY).unwrap(), 1.0);
        assert!(psi(&cfg, &q, -1.0).is_err());
    }

    #[test]
    fn phi_unit_gain_reference_values() {
        let q = QuantizerModel::asymptotic();
        let cfg = LinkConfig::unit_gains(1.0, 1.0, 1, 10.0).unwrap();
        // log2(2) - log2(1 + 1/3)
        let expected = 1.0 - (4.0f64 / 3.0).log2();
        assert!((phi_unit_gain(&cfg, &q, 1.0).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.585).abs() < 1e-3);

        let big = fig2(1e9);
        assert_eq!(phi_unit_gain(&big, &q, f64::INFINITY).unwrap(), 0.0);
        let at_zero = phi_unit_gain(&big, &q, 0.0).unwrap();
        assert!(rel(at_zero, wireless_capacity(&big)) < 1e-14);
    }

    #[test]
    fn phi_unit_gain_rejects_general_gains() {
        let cfg = fig2(1e9)
            .with_gains(vec![Complex64::new(0.5, 0.5); 3])
            .unwrap();
        assert!(matches!(
            phi_unit_gain(&cfg, &QuantizerModel::asymptotic(), 4.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn phi_general_limits() {
        let q = QuantizerModel::scalar();
        let cfg = fig2(1e9)
            .with_gains(vec![
                Complex64::new(0.3, -1.2),
                Complex64::new(2.0, 0.1),
                Complex64::new(0.0, 0.0),
            ])
            .unwrap();
        assert_eq!(phi_general(&cfg, &q, f64::INFINITY).unwrap(), 0.0);
        let quiet = cfg.with_power(1e-300).unwrap();
        assert!(phi_general(&quiet, &q, 4.0).unwrap() < 1e-200);
        assert!(phi_general(&cfg, &q, 4.0).unwrap() > 0.0);
    }

    /// Dense complex Gauss–Jordan solve, independent of the rank-one route.
    #[allow(clippy::needless_range_loop)]
    fn dense_quadratic_form(diag: &[f64], rho: f64, a: &[Complex64]) -> f64 {
        let n = a.len();
        let mut m: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut v = a[i] * a[j].conj() * rho;
                        if i == j {
                            v += diag[i];
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let mut b = a.to_vec();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
                .unwrap();
            m.swap(col, piv);
            b.swap(col, piv);
            let p = m[col][col];
            for k in 0..n {
                m[col][k] /= p;
            }
            b[col] /= p;
            for row in 0..n {
                if row != col {
                    let f = m[row][col];
                    for k in 0..n {
                        let v = m[col][k];
                        m[row][k] -= f * v;
                    }
                    let v = b[col];
                    b[row] -= f * v;
                }
            }
        }
        a.iter().zip(&b).map(|(ai, bi)| (ai.conj() * bi).re).sum()
    }

    #[test]
    fn sherman_morrison_matches_dense_inverse() {
        let a = [
            Complex64::new(0.3, -1.2),
            Complex64::new(2.0, 0.1),
            Complex64::new(-0.7, 0.4),
            Complex64::new(0.0, 1.0),
        ];
        let diag = [1.5, 1.1, 3.0, 1.01];
        for rho in [0.0, 0.2, 7.5, -0.05] {
            let form = RankOneForm::new(&diag, rho, &a).unwrap();
            let dense = dense_quadratic_form(&diag, rho, &a);
            assert!(rel(form.quadratic_form(), dense) < 1e-12, "rho={rho}");
        }
    }

    #[test]
    fn sherman_morrison_flags_singularity() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(
            RankOneForm::new(&[1.0, 1.0], -0.5, &a),
            Err(Error::Numerics(_))
        ));
    }

    #[test]
    fn fig2_lower_bound_converges() {
        let report = capacity_lower_bound(&fig2(1e9), &QuantizerModel::asymptotic()).unwrap();
        assert_eq!(report.quantizer_rate, 200.0);
        assert!(rel(report.lower_bound, report.upper_bound) < 1e-6);
        assert!(!report.clamped);
    }

    #[test]
    fn boundary_rate_is_admissible() {
        // W = C_f / r exactly
        let cfg = LinkConfig::unit_gains(1e8, 100e6 / 3.0, 3, 100e6).unwrap();
        let report = capacity_lower_bound(&cfg, &QuantizerModel::asymptotic()).unwrap();
        assert!((report.quantizer_rate - 1.0).abs() < 1e-12);
        assert_eq!(cfg.max_interfaces(), 3);
    }

    #[test]
    fn inadmissible_config_carries_hints() {
        let cfg = LinkConfig::unit_gains(1e8, 5e6, 30, 100e6).unwrap();
        match capacity_lower_bound(&cfg, &QuantizerModel::asymptotic()) {
            Err(Error::Inadmissible {
                r_max, w_max_hz, ..
            }) => {
                assert_eq!(r_max, 20);
                assert!(rel(w_max_hz, 100e6 / 30.0) < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coarse_scalar_quantization_clamps() {
        // mb = π√3/2 ≈ 2.72 at l = 1 gives mb·2^-l ≈ 1.36 > 1, so ψ < 0.
        let cfg = LinkConfig::unit_gains(1e6, 1e6, 1, 1e6).unwrap();
        let q = QuantizerModel::scalar();
        assert!(psi(&cfg, &q, 1.0).unwrap() < 0.0);
        let report = capacity_lower_bound(&cfg, &q).unwrap();
        assert_eq!(report.lower_bound, 0.0);
        assert!(report.clamped);
        assert_eq!(report.phi, report.upper_bound);
        assert!(phi_unit_gain(&cfg, &q, 1.0).unwrap() > report.upper_bound);
    }

    #[test]
    fn snr_db_of_fig3_levels() {
        let db: Vec<f64> = [20e6, 200e6, 2000e6]
            .iter()
            .map(|p| {
                let cfg = LinkConfig::unit_gains(*p, 5e6, 1, 100e6).unwrap();
                capacity_lower_bound(&cfg, &QuantizerModel::asymptotic())
                    .unwrap()
                    .per_interface_snr_db()[0]
            })
            .collect();
        for (got, want) in db.iter().zip([6.0206, 16.0206, 26.0206]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn envelope_ratio_halves() {
        let cfg = fig2(1e9);
        let q = QuantizerModel::asymptotic();
        for l in [20.0, 30.0, 45.0] {
            let a = phi_decay_envelope(&cfg, &q, l).unwrap().upper;
            let b = phi_decay_envelope(&cfg, &q, l + 1.0).unwrap().upper;
            assert!((b / a - 0.5).abs() < 1e-4, "l={l}: {}", b / a);
        }
        let far = phi_decay_envelope(&cfg, &q, 2000.0).unwrap();
        assert_eq!((far.upper, far.lower), (0.0, 0.0));
    }

    fn unit_cfg() -> impl Strategy<Value = (LinkConfig, QuantizerModel)> {
        (
            1e3f64..1e10,
            1e4f64..1e8,
            1usize..12,
            1.0f64..60.0,
            1.0f64..2.72,
        )
            .prop_map(|(p, w, r, l, mb)| {
                let cfg = LinkConfig::unit_gains(p, w, r, l * r as f64 * w).unwrap();
                (cfg, QuantizerModel::from_mb_product(mb).unwrap())
            })
    }

    proptest! {
        #[test]
        fn lower_bound_is_ordered((cfg, q) in unit_cfg()) {
            let rep = capacity_lower_bound(&cfg, &q).unwrap();
            prop_assert!(rep.lower_bound >= 0.0);
            prop_assert!(rep.lower_bound <= rep.upper_bound);
            prop_assert_eq!(rep.lower_bound, (rep.upper_bound - rep.phi).max(0.0));
        }

        #[test]
        fn only_the_power_ratio_matters((cfg, q) in unit_cfg(), k in 0.01f64..100.0) {
            let scaled = LinkConfig::new(
                cfg.power() * k,
                cfg.noise_density() * k,
                cfg.bandwidth(),
                cfg.gains().to_vec(),
                cfg.fiber_rate(),
            ).unwrap();
            let a = capacity_lower_bound(&cfg, &q).unwrap();
            let b = capacity_lower_bound(&scaled, &q).unwrap();
            prop_assert!(rel(b.upper_bound, a.upper_bound) < 1e-12);
            prop_assert!((b.phi - a.phi).abs() <= 1e-12 * a.upper_bound);
            prop_assert!((b.lower_bound - a.lower_bound).abs() <= 1e-12 * a.upper_bound);
            for (x, y) in a.per_interface_snr.iter().zip(&b.per_interface_snr) {
                prop_assert!(rel(*y, *x) < 1e-12);
            }
        }

        #[test]
        fn phi_sits_inside_its_envelope((cfg, q) in unit_cfg()) {
            let l = cfg.quantizer_rate();
            let phi = phi_unit_gain(&cfg, &q, l);
            if let Ok(phi) = phi {
                let env = phi_decay_envelope(&cfg, &q, l).unwrap();
                prop_assert!(phi <= env.upper * (1.0 + 1e-12));
                prop_assert!(phi >= env.lower - 1e-12 * env.upper.abs());
            }
        }
    }
}
