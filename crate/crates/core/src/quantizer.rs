//! Quantizer models: the analytical Zador–Gersho distortion-rate function and
//! trained Lloyd–Max scalar quantizers for Gaussian sources.
//!
//! A complex sample at `l` bits is quantized as two independent real samples
//! at `l / 2` bits each. For a Gaussian source of complex variance `σ²` the
//! total distortion approaches `σ² (π√3/2) 2⁻ˡ` at high rate, which is the
//! distortion-rate function with the scalar constant `M₁ β₁ᴳ`.

use std::f64::consts::{E, PI, SQRT_2};
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{parameter, Error, Result};
use crate::model::QuantizerModel;
use crate::rng::{complex_normal, stream, Purpose};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Gersho's constant and Zador's factor at the two ends of the dimension range.
#[derive(Debug, Clone, Copy)]
pub struct ZadorGershoConstants;

impl ZadorGershoConstants {
    /// `M₁`, Gersho's constant for scalar quantization.
    pub const M1: f64 = 1.0 / 12.0;
    /// `M∞ = 1 / (2πe)`.
    pub const M_INF: f64 = 1.0 / (2.0 * PI * E);
    /// `β₁ᴳ = 6√3π`, Zador's factor for an i.i.d. Gaussian source.
    pub const BETA1_GAUSS: f64 = 6.0 * SQRT_3 * PI;
    /// `β∞ = 2πe`.
    pub const BETA_INF: f64 = 2.0 * PI * E;

    /// `M₁ β₁ᴳ = π√3/2`, the largest product (fixed-rate scalar quantization).
    pub fn scalar_product() -> f64 {
        PI * SQRT_3 / 2.0
    }

    /// `M∞ β∞ = 1`, the smallest product (infinite-dimensional quantization).
    pub fn asymptotic_product() -> f64 {
        1.0
    }
}

/// High-resolution distortion `E[|q|²] = σ² M_m β_m 2⁻ˡ` of a source with complex variance `σ²`.
pub fn distortion_rate(variance_complex: f64, q: &QuantizerModel, rate: f64) -> f64 {
    debug_assert!(variance_complex >= 0.0 && rate >= 0.0);
    variance_complex * q.relative_distortion(rate)
}

pub const MAX_BITS: u32 = 12;
pub const TRAINING_SAMPLES: usize = 1_000_000;
pub const MAX_ITERATIONS: u32 = 10_000;
/// Stop once no codeword moves by more than this fraction of the source standard deviation.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;

/// Standard normal quantile function.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// A fixed-rate scalar quantizer for one real dimension.
///
/// Decision thresholds are the midpoints of adjacent codewords. A sample that
/// lands exactly on a threshold is assigned to the lower codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedQuantizer {
    bits_per_real_dim: u32,
    codebook: Vec<f64>,
    thresholds: Vec<f64>,
    source_variance: f64,
    converged: bool,
    iterations: u32,
}

fn check_bits(bits: u32) -> Result<u32> {
    if (1..=MAX_BITS).contains(&bits) {
        Ok(bits)
    } else {
        Err(parameter(
            "bits_per_real_dim",
            format!("must lie in 1..={MAX_BITS}, got {bits}"),
        ))
    }
}

fn midpoints(codebook: &[f64]) -> Vec<f64> {
    codebook.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Stratified, antithetic sample of `N(0, variance)`.
///
/// The lower half holds one inverse-CDF draw per equal-probability stratum
/// below the median; the upper half is its mirror image. The result is sorted
/// and exactly symmetric, so Lloyd iterations keep the codebook symmetric even
/// in sparsely populated tail cells.
fn training_set(variance: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Training, 0);
    let sigma = variance.sqrt();
    let n = TRAINING_SAMPLES as f64;
    let mut samples: Vec<f64> = (0..TRAINING_SAMPLES / 2)
        .map(|i| {
            let u: f64 = rng.sample(Open01);
            sigma * normal_quantile((i as f64 + u) / n)
        })
        .collect();
    let mirrored: Vec<f64> = samples.iter().rev().map(|x| -x).collect();
    samples.extend(mirrored);
    samples
}

/// Fits a Lloyd–Max quantizer with `2^bits` levels to `N(0, variance)`.
///
/// The training distribution is a seeded 10⁶-point stratified sample (see [`training_set`]). Starting
/// from the companded (`p^{1/3}` point density) codebook, nearest-neighbor and
/// centroid steps alternate until convergence or [`MAX_ITERATIONS`]. Lloyd
/// iterations never increase training distortion, so the last iterate is the
/// best one; [`TrainedQuantizer::converged`] reports whether the tolerance was met.
pub fn train_gaussian_quantizer(bits: u32, variance: f64, seed: u64) -> Result<TrainedQuantizer> {
    let bits = check_bits(bits)?;
    if !(variance.is_finite() && variance > 0.0) {
        return Err(parameter(
            "variance",
            format!("must be > 0, got {variance}"),
        ));
    }
    let sigma = variance.sqrt();
    let samples = training_set(variance, seed);
    let mut prefix = Vec::with_capacity(samples.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for x in &samples {
        acc += x;
        prefix.push(acc);
    }

    let levels = 1usize << bits;
    let mut codebook: Vec<f64> = (0..levels)
        .map(|k| sigma * SQRT_3 * normal_quantile((k as f64 + 0.5) / levels as f64))
        .collect();
    let mut bounds = vec![0usize; levels + 1];
    bounds[levels] = samples.len();

    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        for k in 1..levels {
            let t = 0.5 * (codebook[k - 1] + codebook[k]);
            bounds[k] = samples.partition_point(|&x| x <= t);
        }
        let mut movement = 0.0f64;
        for k in 0..levels {
            let (lo, hi) = (bounds[k], bounds[k + 1]);
            if hi > lo {
                let centroid = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
                movement = movement.max((centroid - codebook[k]).abs());
                codebook[k] = centroid;
            }
        }
        if movement < CONVERGENCE_TOLERANCE * sigma {
            converged = true;
            break;
        }
    }

    Ok(TrainedQuantizer {
        bits_per_real_dim: bits,
        thresholds: midpoints(&codebook),
        codebook,
        source_variance: variance,
        converged,
        iterations,
    })
}

impl TrainedQuantizer {
    /// Builds a quantizer from an explicit, strictly increasing codebook of `2^bits` entries.
    pub fn from_codebook(bits: u32, source_variance: f64, codebook: Vec<f64>) -> Result<Self> {
        let bits = check_bits(bits)?;
        if !(source_variance.is_finite() && source_variance > 0.0) {
            return Err(parameter(
                "variance",
                format!("must be > 0, got {source_variance}"),
            ));
        }
        if codebook.len() != 1 << bits {
            return Err(parameter(
                "codebook",
                format!("expected {} codewords, got {}", 1 << bits, codebook.len()),
            ));
        }
        if codebook.iter().any(|c| !c.is_finite()) || codebook.windows(2).any(|w| w[0] >= w[1]) {
            return Err(parameter(
                "codebook",
                "codewords must be finite and strictly increasing",
            ));
        }
        Ok(Self {
            bits_per_real_dim: bits,
            thresholds: midpoints(&codebook),
            codebook,
            source_variance,
            converged: true,
            iterations: 0,
        })
    }

    pub fn bits_per_real_dim(&self) -> u32 {
        self.bits_per_real_dim
    }

    /// Rate in bits per complex sample.
    pub fn rate(&self) -> u32 {
        2 * self.bits_per_real_dim
    }

    pub fn codebook(&self) -> &[f64] {
        &self.codebook
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Variance of the real Gaussian the codebook was fitted to.
    pub fn source_variance(&self) -> f64 {
        self.source_variance
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn index_of(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&t| t < x)
    }

    pub fn quantize_real(&self, x: f64) -> f64 {
        self.codebook[self.index_of(x)]
    }

    /// Quantizes real and imaginary parts independently, consuming [`rate`](Self::rate) bits.
    pub fn quantize_complex(&self, sample: Complex64) -> Complex64 {
        Complex64::new(self.quantize_real(sample.re), self.quantize_real(sample.im))
    }

    /// Mean squared error per real dimension on fresh `N(0, source_variance)` samples.
    pub fn held_out_distortion(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = stream(seed, Purpose::HeldOut, 0);
        let sigma = self.source_variance.sqrt();
        let sum: f64 = (0..samples)
            .map(|_| {
                let x = sigma * rng.sample::<f64, _>(StandardNormal);
                let e = self.quantize_real(x) - x;
                e * e
            })
            .sum();
        sum / samples as f64
    }

    /// Plain-text codebook: a `bits <b> variance <v>` header, then one codeword per line.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "bits {} variance {}\n",
            self.bits_per_real_dim, self.source_variance
        );
        for c in &self.codebook {
            let _ = writeln!(out, "{c}");
        }
        out
    }
}

impl FromStr for TrainedQuantizer {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty codebook file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (bits, variance) = match fields.as_slice() {
            ["bits", b, "variance", v] => (
                b.parse::<u32>()
                    .map_err(|e| Error::Parse(format!("bits `{b}`: {e}")))?,
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("variance `{v}`: {e}")))?,
            ),
            _ => {
                return Err(Error::Parse(format!(
                    "expected `bits <b> variance <v>` header, got `{header}`"
                )))
            }
        };
        let codebook = lines
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("codeword `{l}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_codebook(bits, variance, codebook)
    }
}

/// A sample mean (magnitude, normalized by the error power) and its standard error on the same scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub standard_error: f64,
}

impl MomentEstimate {
    /// True when the estimate is within `k` standard errors of zero.
    pub fn within(&self, k: f64) -> bool {
        self.value <= k * self.standard_error
    }
}

/// Empirical check of the optimal-quantizer moment identities
/// `E[q] = 0`, `E[z q*] = 0` and `E[y q*] = −E[|q|²]`, where `q = z − y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub trials: u64,
    /// `E[|y|²]`
    pub input_power: f64,
    /// `E[|z|²]`
    pub output_power: f64,
    /// `E[|q|²]`
    pub error_power: f64,
    /// `|E[q]| / E[|q|²]`
    pub mean_error: MomentEstimate,
    /// `|E[z q*]| / E[|q|²]`
    pub output_error_correlation: MomentEstimate,
    /// `|E[y q*] + E[|q|²]| / E[|q|²]`
    pub input_error_identity: MomentEstimate,
    /// `|E[|z|²] − (E[|y|²] − E[|q|²])| / E[|q|²]`
    pub power_identity: MomentEstimate,
}

impl MomentReport {
    pub fn all_within(&self, k: f64) -> bool {
        [
            self.mean_error,
            self.output_error_correlation,
            self.input_error_identity,
            self.power_identity,
        ]
        .iter()
        .all(|m| m.within(k))
    }
}

/// Running first and second moments of a complex statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct ComplexMoments {
    sum: Complex64,
    sum_sq_re: f64,
    sum_sq_im: f64,
}

impl ComplexMoments {
    fn push(&mut self, v: Complex64) {
        self.sum += v;
        self.sum_sq_re += v.re * v.re;
        self.sum_sq_im += v.im * v.im;
    }

    fn merge(&mut self, other: &Self) {
        self.sum += other.sum;
        self.sum_sq_re += other.sum_sq_re;
        self.sum_sq_im += other.sum_sq_im;
    }

    fn estimate(&self, n: f64, scale: f64) -> MomentEstimate {
        let mean = self.sum / n;
        let var = (self.sum_sq_re / n - mean.re * mean.re).max(0.0)
            + (self.sum_sq_im / n - mean.im * mean.im).max(0.0);
        MomentEstimate {
            value: mean.norm() / scale,
            standard_error: (var / n).sqrt() / scale,
        }
    }
}

/// Mergeable accumulator for [`MomentReport`]. Merging is plain summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct MomentAccumulator {
    n: u64,
    input_power: f64,
    output_power: f64,
    error_power: f64,
    error: ComplexMoments,
    output_error: ComplexMoments,
    input_error: ComplexMoments,
    power_gap: ComplexMoments,
}

impl MomentAccumulator {
    pub(crate) fn push(&mut self, y: Complex64, z: Complex64) {
        let q = z - y;
        let qq = q.norm_sqr();
        self.n += 1;
        self.input_power += y.norm_sqr();
        self.output_power += z.norm_sqr();
        self.error_power += qq;
        self.error.push(q);
        self.output_error.push(z * q.conj());
        self.input_error.push(y * q.conj() + qq);
        self.power_gap
            .push(Complex64::new(z.norm_sqr() - y.norm_sqr() + qq, 0.0));
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.input_power += other.input_power;
        self.output_power += other.output_power;
        self.error_power += other.error_power;
        self.error.merge(&other.error);
        self.output_error.merge(&other.output_error);
        self.input_error.merge(&other.input_error);
        self.power_gap.merge(&other.power_gap);
    }

    pub(crate) fn error_power(&self) -> f64 {
        self.error_power / self.n.max(1) as f64
    }

    pub(crate) fn finish(&self) -> MomentReport {
        let n = self.n.max(1) as f64;
        let error_power = self.error_power / n;
        let scale = if error_power > 0.0 { error_power } else { 1.0 };
        MomentReport {
            trials: self.n,
            input_power: self.input_power / n,
            output_power: self.output_power / n,
            error_power,
            mean_error: self.error.estimate(n, scale),
            output_error_correlation: self.output_error.estimate(n, scale),
            input_error_identity: self.input_error.estimate(n, scale),
            power_identity: self.power_gap.estimate(n, scale),
        }
    }
}

pub const MIN_MOMENT_TRIALS: u64 = 100_000;

/// Draws `y ~ CN(0, 2 σ²)` (σ² per real dimension), quantizes it and measures the moment identities.
pub fn verify_quantizer_moments(
    tq: &TrainedQuantizer,
    trials: u64,
    seed: u64,
) -> Result<MomentReport> {
    if trials < MIN_MOMENT_TRIALS {
        return Err(parameter(
            "trials",
            format!("need at least {MIN_MOMENT_TRIALS}, got {trials}"),
        ));
    }
    let mut rng = stream(seed, Purpose::Moments, 0);
    let variance = 2.0 * tq.source_variance;
    let mut acc = MomentAccumulator::default();
    for _ in 0..trials {
        let y = complex_normal(&mut rng, variance);
        acc.push(y, tq.quantize_complex(y));
    }
    Ok(acc.finish())
}
