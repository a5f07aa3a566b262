//! Seeded synthesis of correlated quadrature traces.
//!
//! Each channel pair is built from three independent unit-PSD Gaussian
//! processes shaped in the frequency domain: a difference mode carrying the
//! squeezed joint variance, a sum mode carrying the excess noise, and a
//! low-frequency technical-noise mode common to both detectors. The probe and
//! conjugate outputs are
//!
//! ```text
//! probe     = (sum + diff)/sqrt(2) + tech
//! conjugate = (sum - diff)/sqrt(2) + tech
//! ```
//!
//! which makes the power spectral density of `(probe - conjugate)/sqrt(2)`
//! equal `v_minus` inside the squeeze band and that of the scaled sum equal
//! `v_plus`, exactly as a balanced-homodyne bench would report them.

use crate::error::{Error, Result};
use crate::gaussian::ChannelModel;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Which detector output a trace represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceRole {
    Probe,
    Conjugate,
    ShotNoise,
}

impl TraceRole {
    pub fn as_u8(self) -> u8 {
        match self {
            TraceRole::Probe => 0,
            TraceRole::Conjugate => 1,
            TraceRole::ShotNoise => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(TraceRole::Probe),
            1 => Ok(TraceRole::Conjugate),
            2 => Ok(TraceRole::ShotNoise),
            other => Err(Error::Format(format!("unknown trace role tag {other}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TraceRole::Probe => "probe",
            TraceRole::Conjugate => "conjugate",
            TraceRole::ShotNoise => "shot-noise",
        }
    }
}

/// A sampled homodyne-output voltage time series, shot-noise normalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureTrace {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub channel_id: u32,
    pub role: TraceRole,
    /// Master seed of the run that produced this trace.
    pub seed: u64,
    /// Index range unaffected by filter edge effects. Fresh traces are fully
    /// valid; filtering shrinks the range.
    pub valid: Range<usize>,
}

impl QuadratureTrace {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn valid_samples(&self) -> &[f64] {
        &self.samples[self.valid.clone()]
    }
}

/// Configuration for a synthesis run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub channels: Vec<ChannelModel>,
    pub master_seed: u64,
}

/// Default sample rate: comfortably above twice the 2 MHz band edge.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 16e6;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::Synth(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.channels.is_empty() {
            return Err(Error::Synth("at least one channel required".into()));
        }
        for (i, ch) in self.channels.iter().enumerate() {
            ch.validate()
                .map_err(|e| Error::Synth(format!("channel {}: {e}", i + 1)))?;
            if self.sample_rate_hz < 2.0 * ch.squeeze_band_hi_hz {
                return Err(Error::Synth(format!(
                    "sample rate {} Hz would alias channel {} (band edge {} Hz)",
                    self.sample_rate_hz,
                    i + 1,
                    ch.squeeze_band_hi_hz
                )));
            }
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).ceil() as usize
    }
}

// RNG substreams: one counter-indexed stream per generated process so that
// channels are independent and reproducible in isolation.
const STREAM_SHOT: u64 = 0;
const MODES_PER_CHANNEL: u64 = 4;

fn channel_stream(channel_id: u32, mode: u64) -> u64 {
    1 + u64::from(channel_id) * MODES_PER_CHANNEL + mode
}

/// Draws a real Gaussian trace whose discrete PSD follows `envelope`
/// (shot noise = 1). Shaping happens in the frequency domain: every DFT bin
/// gets an independent complex-Gaussian draw scaled to the envelope, and one
/// inverse FFT produces the time series.
fn synth_shaped(
    n: usize,
    sample_rate_hz: f64,
    envelope: impl Fn(f64) -> f64,
    rng: &mut ChaCha12Rng,
) -> Vec<f64> {
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let nf = n as f64;
    let bin_hz = sample_rate_hz / nf;

    let dc: f64 = StandardNormal.sample(rng);
    spectrum[0] = Complex::new((nf * envelope(0.0)).sqrt() * dc, 0.0);

    let half = n / 2;
    let paired_end = if n % 2 == 0 { half } else { half + 1 };
    for k in 1..paired_end {
        let sigma = (nf * envelope(k as f64 * bin_hz) / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        spectrum[k] = Complex::new(sigma * re, sigma * im);
        spectrum[n - k] = spectrum[k].conj();
    }
    if n % 2 == 0 {
        let nyq: f64 = StandardNormal.sample(rng);
        spectrum[half] = Complex::new((nf * envelope(half as f64 * bin_hz)).sqrt() * nyq, 0.0);
    }

    FftPlanner::new()
        .plan_fft_inverse(n)
        .process(&mut spectrum);
    spectrum.iter().map(|c| c.re / nf).collect()
}

/// Piecewise PSD envelope for a joint-quadrature mode: `v` across the squeeze
/// band, relaxing toward the vacuum level outside it.
fn joint_mode_envelope(model: &ChannelModel, v: f64, f: f64) -> f64 {
    let lo = model.squeeze_band_lo_hz;
    let hi = model.squeeze_band_hi_hz;
    if f < lo {
        1.0 + (v - 1.0) * (f / lo)
    } else if f <= hi {
        v
    } else {
        let ramp = (1.0 - (f - hi) / (hi / 2.0)).max(0.0);
        1.0 + (v - 1.0) * ramp
    }
}

/// Lorentzian low-frequency lobe for the correlated technical noise.
fn technical_envelope(model: &ChannelModel, f: f64) -> f64 {
    let level = 10f64.powf(model.technical_noise_db / 10.0);
    let x = f / model.technical_corner_hz;
    level / (1.0 + x * x)
}

/// Synthesizes one probe/conjugate pair for `channel_id`.
pub fn synth_pair(
    model: &ChannelModel,
    cfg: &SynthConfig,
    channel_id: u32,
) -> Result<(QuadratureTrace, QuadratureTrace)> {
    cfg.validate()?;
    model.validate()?;
    if cfg.sample_rate_hz < 2.0 * model.squeeze_band_hi_hz {
        return Err(Error::Synth(format!(
            "sample rate {} Hz would alias the squeeze band (edge {} Hz)",
            cfg.sample_rate_hz, model.squeeze_band_hi_hz
        )));
    }
    let n = cfg.num_samples();

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(channel_stream(channel_id, 0));
    let diff = synth_shaped(
        n,
        cfg.sample_rate_hz,
        |f| joint_mode_envelope(model, model.v_minus, f),
        &mut rng,
    );
    rng.set_stream(channel_stream(channel_id, 1));
    let sum = synth_shaped(
        n,
        cfg.sample_rate_hz,
        |f| joint_mode_envelope(model, model.v_plus, f),
        &mut rng,
    );
    rng.set_stream(channel_stream(channel_id, 2));
    let tech = synth_shaped(
        n,
        cfg.sample_rate_hz,
        |f| technical_envelope(model, f),
        &mut rng,
    );

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut probe = Vec::with_capacity(n);
    let mut conjugate = Vec::with_capacity(n);
    for i in 0..n {
        probe.push((sum[i] + diff[i]) * inv_sqrt2 + tech[i]);
        conjugate.push((sum[i] - diff[i]) * inv_sqrt2 + tech[i]);
    }

    let make = |samples: Vec<f64>, role| QuadratureTrace {
        samples,
        sample_rate_hz: cfg.sample_rate_hz,
        channel_id,
        role,
        seed: cfg.master_seed,
        valid: 0..n,
    };
    Ok((
        make(probe, TraceRole::Probe),
        make(conjugate, TraceRole::Conjugate),
    ))
}

/// Unit-PSD white Gaussian reference trace, independent of all channels.
pub fn synth_shot_noise(cfg: &SynthConfig) -> Result<QuadratureTrace> {
    cfg.validate()?;
    let n = cfg.num_samples();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(STREAM_SHOT);
    let samples = synth_shaped(n, cfg.sample_rate_hz, |_| 1.0, &mut rng);
    Ok(QuadratureTrace {
        samples,
        sample_rate_hz: cfg.sample_rate_hz,
        channel_id: u32::MAX,
        role: TraceRole::ShotNoise,
        seed: cfg.master_seed,
        valid: 0..n,
    })
}

/// Pearson correlation between two equal-length sample slices.
pub fn sample_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Synth(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Synth("need at least 2 samples".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Synth("zero-variance input".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Full cross-correlation matrix over a set of traces. Partner pairs should
/// show the model correlation; everything else should be statistically zero.
pub fn cross_channel_independence_check(traces: &[&QuadratureTrace]) -> Result<Vec<Vec<f64>>> {
    if traces.len() < 2 {
        return Err(Error::Synth("need at least 2 traces".into()));
    }
    let len = traces[0].samples.len();
    for t in traces {
        if t.samples.len() != len {
            return Err(Error::Synth(format!(
                "trace length mismatch: {} vs {len}",
                t.samples.len()
            )));
        }
    }
    let mut matrix = vec![vec![0.0; traces.len()]; traces.len()];
    for i in 0..traces.len() {
        matrix[i][i] = 1.0;
        for j in (i + 1)..traces.len() {
            let c = sample_correlation(&traces[i].samples, &traces[j].samples)?;
            matrix[i][j] = c;
            matrix[j][i] = c;
        }
    }
    Ok(matrix)
}
