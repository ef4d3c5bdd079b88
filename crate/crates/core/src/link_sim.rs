//! Monte Carlo simulation of the quantize-and-forward link.
//!
//! Each trial draws `x ~ CN(0, P/W)` and `w ~ CN(0, N₀ I)`, forms `y = a x + w`
//! and quantizes every `y_i` with its interface's trained scalar quantizer to
//! obtain `z = a x + w + q`. The receiver combines `z` with the linear-MMSE
//! filter built from the empirical second-order statistics, and the achievable
//! rate is estimated as `W log(1 + SINR)`.
//!
//! Trials are split into fixed-size chunks, each with its own random stream.
//! Chunk statistics are merged in chunk order, so results are bit-identical
//! regardless of how many worker threads run.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::model::{capacity_report_at_rate, wireless_capacity, LinkConfig, QuantizerModel};
use crate::quantizer::{
    distortion_rate, train_gaussian_quantizer, MomentAccumulator, MomentReport, TrainedQuantizer,
    MAX_BITS,
};
use crate::rng::{complex_normal, derive_seed, stream, Purpose};

pub const MIN_TRIALS: u64 = 10_000;
/// Smallest realizable rate: one bit per real dimension.
pub const MIN_EFFECTIVE_RATE: u32 = 2;
const CHUNK_TRIALS: u64 = 4096;
const BOOTSTRAP_REPLICAS: u64 = 200;

/// How interfaces forward their samples.
#[derive(Debug, Clone, PartialEq)]
pub enum Forwarding {
    /// One trained quantizer per interface.
    Quantized(Vec<TrainedQuantizer>),
    /// `z = y`, the infinite-rate limit.
    Unquantized,
}

/// A fully specified simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    cfg: LinkConfig,
    trials: u64,
    seed: u64,
    forwarding: Forwarding,
}

/// Realized rate for a configuration: `C_f / (r W)` floored to an even integer
/// (whole bits per real dimension), capped at `2 * MAX_BITS`.
pub fn effective_rate(cfg: &LinkConfig) -> Result<u32> {
    let nominal = cfg.quantizer_rate();
    let even = 2.0 * (nominal / 2.0 + 1e-12).floor();
    if even < MIN_EFFECTIVE_RATE as f64 {
        let floor = MIN_EFFECTIVE_RATE as f64;
        return Err(Error::Inadmissible {
            quantizer_rate: nominal,
            floor,
            r_max: (cfg.fiber_rate() / (floor * cfg.bandwidth())).floor() as u64,
            w_max_hz: cfg.fiber_rate() / (floor * cfg.interfaces() as f64),
        });
    }
    Ok((even as u32).min(2 * MAX_BITS))
}

fn check_trials(trials: u64) -> Result<u64> {
    if trials < MIN_TRIALS {
        Err(parameter(
            "trials",
            format!("need at least {MIN_TRIALS}, got {trials}"),
        ))
    } else {
        Ok(trials)
    }
}

impl SimRun {
    /// Trains one quantizer per interface at the effective rate, fitted to that
    /// interface's known input variance `N₀ + |a_i|² P / W`.
    ///
    /// Interfaces share a training seed, so equal input variances yield identical codebooks.
    pub fn new(cfg: LinkConfig, trials: u64, seed: u64) -> Result<Self> {
        check_trials(trials)?;
        let bits = effective_rate(&cfg)? / 2;
        let training_seed = derive_seed(seed, 0);
        let mut quantizers: Vec<TrainedQuantizer> = Vec::with_capacity(cfg.interfaces());
        for power in cfg.received_power() {
            let variance = 0.5 * power;
            let tq = match quantizers.iter().find(|t| t.source_variance() == variance) {
                Some(t) => t.clone(),
                None => train_gaussian_quantizer(bits, variance, training_seed)?,
            };
            quantizers.push(tq);
        }
        Self::with_quantizers(cfg, trials, seed, quantizers)
    }

    pub fn with_quantizers(
        cfg: LinkConfig,
        trials: u64,
        seed: u64,
        quantizers: Vec<TrainedQuantizer>,
    ) -> Result<Self> {
        check_trials(trials)?;
        if quantizers.len() != cfg.interfaces() {
            return Err(parameter(
                "quantizers",
                format!(
                    "expected one per interface ({}), got {}",
                    cfg.interfaces(),
                    quantizers.len()
                ),
            ));
        }
        if let Some(q) = quantizers.windows(2).find(|w| w[0].rate() != w[1].rate()) {
            return Err(parameter(
                "quantizers",
                format!("all interfaces must share one rate, found {}", q[1].rate()),
            ));
        }
        Ok(Self {
            cfg,
            trials,
            seed,
            forwarding: Forwarding::Quantized(quantizers),
        })
    }

    pub fn unquantized(cfg: LinkConfig, trials: u64, seed: u64) -> Result<Self> {
        check_trials(trials)?;
        Ok(Self {
            cfg,
            trials,
            seed,
            forwarding: Forwarding::Unquantized,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn forwarding(&self) -> &Forwarding {
        &self.forwarding
    }

    /// Bits per complex sample actually used, `None` when unquantized.
    pub fn effective_rate(&self) -> Option<u32> {
        match &self.forwarding {
            Forwarding::Quantized(qs) => qs.first().map(TrainedQuantizer::rate),
            Forwarding::Unquantized => None,
        }
    }
}

/// Result of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub seed: u64,
    pub interfaces: usize,
    /// `C_f / (r W)` as configured.
    pub nominal_rate: f64,
    /// Realized bits per complex sample, absent when unquantized.
    pub effective_rate: Option<u32>,
    /// `W log(1 + SINR)` of the linear-MMSE combiner, bits/sec.
    pub empirical_rate: f64,
    /// Bootstrap standard error of `empirical_rate` over trial chunks.
    pub bootstrap_standard_error: f64,
    pub post_combiner_sinr: f64,
    /// Wireless capacity, bits/sec.
    pub upper_bound: f64,
    /// Scalar-quantizer lower bound at the nominal rate.
    pub analytical_lower_bound: f64,
    /// Scalar-quantizer lower bound at the effective rate.
    pub effective_lower_bound: f64,
    /// Measured `E[|q_i|²]` per interface.
    pub distortion: Vec<f64>,
    /// `E[|y_i|²] (π√3/2) 2⁻ˡ` at the effective rate.
    pub predicted_distortion: Vec<f64>,
    pub moment_diagnostics: Vec<MomentReport>,
}

/// Summed second-order statistics of `(z, x)` for one group of trials.
#[derive(Debug, Clone, PartialEq)]
struct ChunkStats {
    n: u64,
    /// Row-major `Σ z_i z_j*`.
    zz: Vec<Complex64>,
    /// `Σ z_i x*`
    zx: Vec<Complex64>,
    xx: f64,
    moments: Vec<MomentAccumulator>,
}

impl ChunkStats {
    fn zeros(r: usize, with_moments: bool) -> Self {
        Self {
            n: 0,
            zz: vec![Complex64::default(); r * r],
            zx: vec![Complex64::default(); r],
            xx: 0.0,
            moments: if with_moments {
                vec![MomentAccumulator::default(); r]
            } else {
                Vec::new()
            },
        }
    }

    fn merge(&mut self, other: &Self) {
        self.n += other.n;
        for (a, b) in self.zz.iter_mut().zip(&other.zz) {
            *a += b;
        }
        for (a, b) in self.zx.iter_mut().zip(&other.zx) {
            *a += b;
        }
        self.xx += other.xx;
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            a.merge(b);
        }
    }

    /// Output SINR of the linear-MMSE estimate of `x` from `z`.
    fn mmse_sinr(&self) -> Result<f64> {
        let r = self.zx.len();
        let n = self.n as f64;
        let cov: Vec<Complex64> = self.zz.iter().map(|v| v / n).collect();
        let cross: Vec<Complex64> = self.zx.iter().map(|v| v / n).collect();
        let signal = self.xx / n;
        let filter = solve_hermitian(cov, r, &cross)?;
        let captured: f64 = cross
            .iter()
            .zip(&filter)
            .map(|(c, w)| (c.conj() * w).re)
            .sum();
        let mse = signal - captured;
        if !(mse > 0.0) {
            return Err(Error::Numerics(format!(
                "non-positive MMSE {mse}; too few trials for the estimated SINR"
            )));
        }
        Ok((captured / mse).max(0.0))
    }
}

/// Solves `A x = b` for Hermitian positive-definite row-major `A` by Cholesky.
fn solve_hermitian(mut a: Vec<Complex64>, n: usize, b: &[Complex64]) -> Result<Vec<Complex64>> {
    // In place: lower triangle becomes L with A = L L†.
    for j in 0..n {
        let mut diag = a[j * n + j].re;
        for k in 0..j {
            diag -= a[j * n + k].norm_sqr();
        }
        if !(diag > 0.0) {
            return Err(Error::Numerics(
                "observation covariance is not positive definite".into(),
            ));
        }
        let l_jj = diag.sqrt();
        a[j * n + j] = Complex64::new(l_jj, 0.0);
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = v / l_jj;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = a[i * n + k] * y[k];
            y[i] -= t;
        }
        y[i] /= a[i * n + i].re;
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = a[k * n + i].conj() * y[k];
            y[i] -= t;
        }
        y[i] /= a[i * n + i].re;
    }
    Ok(y)
}

fn run_chunk(run: &SimRun, chunk: u64) -> ChunkStats {
    let cfg = &run.cfg;
    let r = cfg.interfaces();
    let quantizers = match &run.forwarding {
        Forwarding::Quantized(qs) => Some(qs.as_slice()),
        Forwarding::Unquantized => None,
    };
    let mut stats = ChunkStats::zeros(r, quantizers.is_some());
    let start = chunk * CHUNK_TRIALS;
    let count = CHUNK_TRIALS.min(run.trials - start);
    let mut rng = stream(run.seed, Purpose::Trials, chunk);
    let signal_power = cfg.power() / cfg.bandwidth();
    let mut z = vec![Complex64::default(); r];

    for _ in 0..count {
        let x = complex_normal(&mut rng, signal_power);
        for (i, a) in cfg.gains().iter().enumerate() {
            let y = a * x + complex_normal(&mut rng, cfg.noise_density());
            z[i] = match quantizers {
                Some(qs) => {
                    let zi = qs[i].quantize_complex(y);
                    stats.moments[i].push(y, zi);
                    zi
                }
                None => y,
            };
        }
        for i in 0..r {
            for j in 0..r {
                stats.zz[i * r + j] += z[i] * z[j].conj();
            }
            stats.zx[i] += z[i] * x.conj();
        }
        stats.xx += x.norm_sqr();
    }
    stats.n = count;
    stats
}

fn run_chunks(run: &SimRun) -> Vec<ChunkStats> {
    let chunks = run.trials.div_ceil(CHUNK_TRIALS);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..chunks)
            .into_par_iter()
            .map(|c| run_chunk(run, c))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..chunks).map(|c| run_chunk(run, c)).collect()
    }
}

fn rate_from_sinr(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * sinr.ln_1p() / LN_2
}

/// Standard error of the rate, resampling whole chunks with replacement.
fn bootstrap_standard_error(chunks: &[ChunkStats], bandwidth: f64, seed: u64) -> Result<f64> {
    if chunks.len() < 2 {
        return Ok(0.0);
    }
    let r = chunks[0].zx.len();
    let with_moments = false;
    let mut rates = Vec::with_capacity(BOOTSTRAP_REPLICAS as usize);
    for b in 0..BOOTSTRAP_REPLICAS {
        let mut rng = stream(seed, Purpose::Bootstrap, b);
        let mut acc = ChunkStats::zeros(r, with_moments);
        for _ in 0..chunks.len() {
            let c = &chunks[rng.random_range(0..chunks.len())];
            acc.n += c.n;
            for (a, v) in acc.zz.iter_mut().zip(&c.zz) {
                *a += v;
            }
            for (a, v) in acc.zx.iter_mut().zip(&c.zx) {
                *a += v;
            }
            acc.xx += c.xx;
        }
        rates.push(rate_from_sinr(bandwidth, acc.mmse_sinr()?));
    }
    let m = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / m;
    let var = rates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(var.sqrt())
}

/// Runs the simulation and compares it against the analytical bounds.
pub fn simulate_link(run: &SimRun) -> Result<SimReport> {
    let cfg = &run.cfg;
    let r = cfg.interfaces();
    let chunks = run_chunks(run);
    let mut total = ChunkStats::zeros(r, matches!(run.forwarding, Forwarding::Quantized(_)));
    for c in &chunks {
        total.merge(c);
    }
    let sinr = total.mmse_sinr()?;
    let bandwidth = cfg.bandwidth();
    let empirical_rate = rate_from_sinr(bandwidth, sinr);
    let bootstrap_standard_error = bootstrap_standard_error(&chunks, bandwidth, run.seed)?;

    let upper_bound = wireless_capacity(cfg);
    let nominal_rate = cfg.quantizer_rate();
    let scalar = QuantizerModel::scalar();
    let effective = run.effective_rate();
    let (analytical_lower_bound, effective_lower_bound, predicted_distortion) = match effective {
        Some(l) => (
            capacity_report_at_rate(cfg, &scalar, nominal_rate)?.lower_bound,
            capacity_report_at_rate(cfg, &scalar, l as f64)?.lower_bound,
            cfg.received_power()
                .into_iter()
                .map(|p| distortion_rate(p, &scalar, l as f64))
                .collect(),
        ),
        None => (upper_bound, upper_bound, vec![0.0; r]),
    };
    let distortion = match effective {
        Some(_) => total
            .moments
            .iter()
            .map(MomentAccumulator::error_power)
            .collect(),
        None => vec![0.0; r],
    };

    Ok(SimReport {
        trials: run.trials,
        seed: run.seed,
        interfaces: r,
        nominal_rate,
        effective_rate: effective,
        empirical_rate,
        bootstrap_standard_error,
        post_combiner_sinr: sinr,
        upper_bound,
        analytical_lower_bound,
        effective_lower_bound,
        distortion,
        predicted_distortion,
        moment_diagnostics: total
            .moments
            .iter()
            .map(MomentAccumulator::finish)
            .collect(),
    })
}

/// Measured `E[|q_i|²]` per interface (all zero when unquantized).
pub fn empirical_distortion_vector(run: &SimRun) -> Result<Vec<f64>> {
    simulate_link(run).map(|rep| rep.distortion)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_solve_matches_known_system() {
        // A = [[4, 1+i], [1-i, 3]], x = [1, i]
        let a = vec![
            Complex64::new(4.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(3.0, 0.0),
        ];
        let x = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let b = [a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]];
        let got = solve_hermitian(a, 2, &b).unwrap();
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_solve_rejects_indefinite() {
        let a = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(solve_hermitian(a, 2, &[Complex64::new(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn effective_rate_floors_to_even() {
        let at = |l: f64| effective_rate(&LinkConfig::unit_gains(1e6, 1e6, 2, l * 2e6).unwrap());
        assert_eq!(at(16.0).unwrap(), 16);
        assert_eq!(at(17.9).unwrap(), 16);
        assert_eq!(at(2.0).unwrap(), 2);
        assert_eq!(at(40.0).unwrap(), 24);
        assert!(matches!(at(1.5), Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn run_preconditions() {
        let cfg = LinkConfig::unit_gains(1e6, 1e6, 2, 32e6).unwrap();
        assert!(SimRun::unquantized(cfg.clone(), 1_000, 0).is_err());
        let tq = train_gaussian_quantizer(2, 1.0, 0).unwrap();
        assert!(SimRun::with_quantizers(cfg.clone(), 20_000, 0, vec![tq.clone()]).is_err());
        let other = train_gaussian_quantizer(3, 1.0, 0).unwrap();
        assert!(SimRun::with_quantizers(cfg, 20_000, 0, vec![tq, other]).is_err());
    }

    #[test]
    fn chunk_merge_is_plain_summation() {
        let cfg = LinkConfig::unit_gains(1e6, 1e6, 2, 8e6).unwrap();
        let run = SimRun::new(cfg, 3 * CHUNK_TRIALS + 17, 5).unwrap();
        let chunks = run_chunks(&run);
        assert_eq!(chunks.len(), 4);
        assert_eq!(chunks[3].n, 17);
        let mut fwd = ChunkStats::zeros(2, true);
        chunks.iter().for_each(|c| fwd.merge(c));
        assert_eq!(fwd.n, run.trials());
        let direct = chunks[0].xx + chunks[1].xx + chunks[2].xx + chunks[3].xx;
        assert_eq!(fwd.xx, direct);
    }
}
