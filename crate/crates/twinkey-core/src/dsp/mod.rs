//! Measurement post-processing chain: bandpass filtering, slice integration
//! with buffer gaps, sign binning, and spectrum-analyzer-style squeezing
//! estimation.

pub mod fir;

use crate::error::{Error, Result};
use crate::psd::{band_average, welch_psd};
use crate::synth::{QuadratureTrace, TraceRole};
use serde::{Deserialize, Serialize};

/// Role of a bit stream in the sharing protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamRole {
    Probe,
    Conjugate,
}

impl StreamRole {
    pub fn as_u8(self) -> u8 {
        match self {
            StreamRole::Probe => 0,
            StreamRole::Conjugate => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(StreamRole::Probe),
            1 => Ok(StreamRole::Conjugate),
            other => Err(Error::Format(format!("unknown stream role tag {other}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StreamRole::Probe => "probe",
            StreamRole::Conjugate => "conjugate",
        }
    }
}

/// Ordered bits with the slicing metadata that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitStream {
    /// Each element is 0 or 1.
    pub bits: Vec<u8>,
    pub slice_ns: f64,
    pub buffer_ns: f64,
    pub source_channel: u32,
    pub role: StreamRole,
}

impl BitStream {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            return 0.0;
        }
        self.bits.iter().map(|&b| b as usize).sum::<usize>() as f64 / self.bits.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits.is_empty() {
            return Err(Error::Dsp("empty bit stream".into()));
        }
        if let Some(bad) = self.bits.iter().find(|&&b| b > 1) {
            return Err(Error::Dsp(format!("bit value {bad} outside {{0,1}}")));
        }
        Ok(())
    }
}

/// Bandpass filter description. `f_lo_hz`/`f_hi_hz` are the 6-dB cutoffs;
/// the transition band straddles each edge, so full passband gain is reached
/// half a transition width inside the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub transition_width_hz: f64,
    pub stopband_attenuation_db: f64,
}

impl Default for FilterSpec {
    /// The measurement band used on the bench: 15 kHz to 2 MHz, sharp.
    fn default() -> Self {
        FilterSpec {
            f_lo_hz: 15e3,
            f_hi_hz: 2e6,
            transition_width_hz: 10e3,
            stopband_attenuation_db: 60.0,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        fir::design_bandpass(
            self.f_lo_hz,
            self.f_hi_hz,
            self.transition_width_hz,
            self.stopband_attenuation_db,
            sample_rate_hz,
        )
        .map(|_| ())
    }

    pub fn tap_count(&self, sample_rate_hz: f64) -> usize {
        fir::kaiser_tap_count(
            self.stopband_attenuation_db,
            self.transition_width_hz,
            sample_rate_hz,
        )
    }
}

/// Applies the linear-phase bandpass to a trace. Group delay is compensated,
/// so the output is aligned with the input timeline; one full filter length
/// at each end of the previously valid region is marked invalid.
pub fn bandpass(trace: &QuadratureTrace, spec: &FilterSpec) -> Result<QuadratureTrace> {
    let taps = fir::design_bandpass(
        spec.f_lo_hz,
        spec.f_hi_hz,
        spec.transition_width_hz,
        spec.stopband_attenuation_db,
        trace.sample_rate_hz,
    )?;
    if trace.samples.len() < 3 * taps.len() {
        return Err(Error::Dsp(format!(
            "trace of {} samples is shorter than 3 filter lengths ({} taps)",
            trace.samples.len(),
            taps.len()
        )));
    }
    let filtered = fir::filter_same(&trace.samples, &taps);
    let new_start = trace.valid.start + taps.len();
    let new_end = trace.valid.end.saturating_sub(taps.len());
    if new_start >= new_end {
        return Err(Error::Dsp(
            "no valid samples remain after filter edge discard".into(),
        ));
    }
    Ok(QuadratureTrace {
        samples: filtered,
        sample_rate_hz: trace.sample_rate_hz,
        channel_id: trace.channel_id,
        role: trace.role,
        seed: trace.seed,
        valid: new_start..new_end,
    })
}

/// Number of slices that fit in `valid_len` samples with the given slice and
/// buffer lengths: slices and buffers alternate, and a trailing buffer is not
/// required.
pub fn slice_count(valid_len: usize, slice_len: usize, buffer_len: usize) -> usize {
    if slice_len == 0 || valid_len < slice_len {
        return 0;
    }
    (valid_len + buffer_len) / (slice_len + buffer_len)
}

/// Splits the valid region into alternating `[slice, buffer]` windows and
/// returns the sum of samples inside each slice window. Buffer samples are
/// discarded, which is what decorrelates successive bits.
pub fn slice_integrate(
    trace: &QuadratureTrace,
    slice_ns: f64,
    buffer_ns: f64,
) -> Result<Vec<f64>> {
    if !(slice_ns > 0.0) {
        return Err(Error::Dsp(format!(
            "slice duration must be positive, got {slice_ns} ns"
        )));
    }
    if buffer_ns < 0.0 {
        return Err(Error::Dsp(format!(
            "buffer duration must be nonnegative, got {buffer_ns} ns"
        )));
    }
    let slice_len = (slice_ns * 1e-9 * trace.sample_rate_hz).round() as usize;
    let buffer_len = (buffer_ns * 1e-9 * trace.sample_rate_hz).round() as usize;
    if slice_len == 0 {
        return Err(Error::Dsp(format!(
            "slice of {slice_ns} ns is shorter than one sample at {} Hz",
            trace.sample_rate_hz
        )));
    }
    let valid = trace.valid_samples();
    let n_slices = slice_count(valid.len(), slice_len, buffer_len);
    if n_slices == 0 {
        return Err(Error::Dsp(format!(
            "valid region of {} samples holds no complete {slice_len}-sample slice",
            valid.len()
        )));
    }
    let period = slice_len + buffer_len;
    let mut integrals = Vec::with_capacity(n_slices);
    for k in 0..n_slices {
        let start = k * period;
        integrals.push(valid[start..start + slice_len].iter().sum());
    }
    Ok(integrals)
}

/// Sign binning: 1 if the integral is positive, 0 if it is zero or negative.
pub fn binarize(values: &[f64]) -> Result<Vec<u8>> {
    if values.is_empty() {
        return Err(Error::Dsp("cannot binarize an empty sequence".into()));
    }
    Ok(values.iter().map(|&v| u8::from(v > 0.0)).collect())
}

/// Floor reported when the difference spectrum is numerically empty,
/// e.g. when probe and conjugate are the identical trace.
pub const SQUEEZING_FLOOR_DB: f64 = -80.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingEstimate {
    pub db: f64,
    /// True when the ratio underflowed the measurement floor.
    pub floored: bool,
}

/// Band-averaged noise power of `(probe - conjugate)/sqrt(2)` around
/// `analysis_freq_hz`, normalized to the same band of the shot-noise
/// reference trace, in dB. Mirrors the bench's subtract-and-spectrum-analyze
/// path.
pub fn estimate_squeezing(
    probe: &QuadratureTrace,
    conjugate: &QuadratureTrace,
    shot: &QuadratureTrace,
    analysis_freq_hz: f64,
    bandwidth_hz: f64,
) -> Result<SqueezingEstimate> {
    if probe.samples.len() != conjugate.samples.len()
        || probe.samples.len() != shot.samples.len()
    {
        return Err(Error::Dsp(format!(
            "trace lengths differ: probe {}, conjugate {}, shot {}",
            probe.samples.len(),
            conjugate.samples.len(),
            shot.samples.len()
        )));
    }
    if probe.sample_rate_hz != conjugate.sample_rate_hz
        || probe.sample_rate_hz != shot.sample_rate_hz
    {
        return Err(Error::Dsp("trace sample rates differ".into()));
    }
    let fs = probe.sample_rate_hz;
    if !(bandwidth_hz > 0.0) || analysis_freq_hz - bandwidth_hz / 2.0 <= 0.0
        || analysis_freq_hz + bandwidth_hz / 2.0 >= fs / 2.0
    {
        return Err(Error::Dsp(format!(
            "analysis band {analysis_freq_hz} +- {}/2 Hz outside trace bandwidth",
            bandwidth_hz
        )));
    }

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let diff: Vec<f64> = probe
        .samples
        .iter()
        .zip(conjugate.samples.iter())
        .map(|(p, c)| (p - c) * inv_sqrt2)
        .collect();

    let mut nperseg = 8192usize;
    while nperseg > 64 && probe.samples.len() < 4 * nperseg {
        nperseg /= 2;
    }
    let psd_diff = welch_psd(&diff, fs, nperseg)?;
    let psd_shot = welch_psd(&shot.samples, fs, nperseg)?;

    let lo = analysis_freq_hz - bandwidth_hz / 2.0;
    let hi = analysis_freq_hz + bandwidth_hz / 2.0;
    let shot_power = band_average(&psd_shot, lo, hi)?;
    if shot_power <= 0.0 {
        return Err(Error::Dsp(
            "shot-noise reference has zero power in the analysis band".into(),
        ));
    }
    let diff_power = band_average(&psd_diff, lo, hi)?;
    let ratio = diff_power / shot_power;
    let floor = 10f64.powf(SQUEEZING_FLOOR_DB / 10.0);
    if ratio <= floor {
        return Ok(SqueezingEstimate {
            db: SQUEEZING_FLOOR_DB,
            floored: true,
        });
    }
    Ok(SqueezingEstimate {
        db: 10.0 * ratio.log10(),
        floored: false,
    })
}

/// Lag-1 Pearson correlation of a bit stream.
pub fn adjacent_bit_correlation(stream: &BitStream) -> Result<f64> {
    let bits = &stream.bits;
    if bits.len() < 1000 {
        return Err(Error::Dsp(format!(
            "need at least 1000 bits for a meaningful lag-1 estimate, got {}",
            bits.len()
        )));
    }
    let n = (bits.len() - 1) as f64;
    let xs = &bits[..bits.len() - 1];
    let ys = &bits[1..];
    let mx = xs.iter().map(|&b| b as f64).sum::<f64>() / n;
    let my = ys.iter().map(|&b| b as f64).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in xs.iter().zip(ys.iter()) {
        let da = a as f64 - mx;
        let db = b as f64 - my;
        cov += da * db;
        vx += da * da;
        vy += db * db;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Dsp(
            "lag-1 correlation undefined for a constant bit stream".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Full measurement chain for one trace: optional bandpass, slice
/// integration, sign binning, plus the summary statistics the reports need.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSpec {
    /// `None` runs the comparative unfiltered chain.
    pub filter: Option<FilterSpec>,
    pub slice_ns: f64,
    pub buffer_ns: f64,
    /// Truncate the stream to exactly this many bits; error if fewer emerge.
    pub bit_target: Option<usize>,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        PipelineSpec {
            filter: Some(FilterSpec::default()),
            slice_ns: 500.0,
            buffer_ns: 500.0,
            bit_target: Some(90_000),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub stream: BitStream,
    /// Slice integrals behind the bits (same truncation).
    pub integrals: Vec<f64>,
    pub ones_fraction: f64,
    pub lag1_bit_correlation: f64,
    /// Emitted bits divided by the source trace duration.
    pub realized_bit_rate_hz: f64,
}

pub fn process_trace(trace: &QuadratureTrace, spec: &PipelineSpec) -> Result<PipelineOutput> {
    let role = match trace.role {
        TraceRole::Probe => StreamRole::Probe,
        TraceRole::Conjugate => StreamRole::Conjugate,
        TraceRole::ShotNoise => {
            return Err(Error::Dsp(
                "shot-noise reference traces do not produce key bits".into(),
            ))
        }
    };
    let filtered;
    let working = match &spec.filter {
        Some(fspec) => {
            filtered = bandpass(trace, fspec)?;
            &filtered
        }
        None => trace,
    };
    let mut integrals = slice_integrate(working, spec.slice_ns, spec.buffer_ns)?;
    if let Some(target) = spec.bit_target {
        if integrals.len() < target {
            return Err(Error::Dsp(format!(
                "bit target {target} unreachable: pipeline produced {} slices",
                integrals.len()
            )));
        }
        integrals.truncate(target);
    }
    let bits = binarize(&integrals)?;
    let stream = BitStream {
        bits,
        slice_ns: spec.slice_ns,
        buffer_ns: spec.buffer_ns,
        source_channel: trace.channel_id,
        role,
    };
    let ones_fraction = stream.ones_fraction();
    let lag1_bit_correlation = adjacent_bit_correlation(&stream)?;
    let realized_bit_rate_hz = stream.len() as f64 / trace.duration_s();
    Ok(PipelineOutput {
        stream,
        integrals,
        ones_fraction,
        lag1_bit_correlation,
        realized_bit_rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_pair, synth_shot_noise, SynthConfig};
    use approx::assert_abs_diff_eq;

    fn tone_trace(freq_hz: f64, fs: f64, n: usize) -> QuadratureTrace {
        QuadratureTrace {
            samples: (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * freq_hz * i as f64 / fs).sin())
                .collect(),
            sample_rate_hz: fs,
            channel_id: 0,
            role: TraceRole::Probe,
            seed: 0,
            valid: 0..n,
        }
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    fn test_filter() -> FilterSpec {
        FilterSpec::default()
    }

    #[test]
    fn in_band_tone_preserved() {
        let fs = 8e6;
        let trace = tone_trace(1e6, fs, 60_000);
        let out = bandpass(&trace, &test_filter()).unwrap();
        let in_rms = rms(trace.valid_samples());
        let out_rms = rms(out.valid_samples());
        assert!(
            (out_rms / in_rms - 1.0).abs() < 0.01,
            "passband gain {}",
            out_rms / in_rms
        );
        // group delay is compensated: output tracks input sample-for-sample
        let a = &trace.samples[out.valid.clone()];
        let b = out.valid_samples();
        let max_err = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 0.02, "alignment error {max_err}");
    }

    #[test]
    fn out_of_band_tone_rejected() {
        let fs = 8e6;
        let trace = tone_trace(1e3, fs, 60_000);
        let out = bandpass(&trace, &test_filter()).unwrap();
        let atten = rms(out.valid_samples()) / rms(trace.valid_samples());
        assert!(
            atten < 0.01,
            "1 kHz tone only attenuated to {atten} (need >= 40 dB)"
        );
    }

    #[test]
    fn dc_offset_removed() {
        let fs = 8e6;
        let n = 60_000;
        let trace = QuadratureTrace {
            samples: vec![3.7; n],
            sample_rate_hz: fs,
            channel_id: 0,
            role: TraceRole::Probe,
            seed: 0,
            valid: 0..n,
        };
        let spec = test_filter();
        let out = bandpass(&trace, &spec).unwrap();
        let mean =
            out.valid_samples().iter().sum::<f64>() / out.valid_samples().len() as f64;
        // DC sits in the stopband, so the residual is bounded by the designed rejection
        let bound = 3.7 * 10f64.powf(-spec.stopband_attenuation_db / 20.0) * 2.0;
        assert!(mean.abs() < bound, "residual DC {mean} exceeds {bound}");
    }

    #[test]
    fn filter_is_linear() {
        let fs = 8e6;
        let n = 40_000;
        let mk = |seed: u64| {
            let cfg = SynthConfig {
                duration_s: n as f64 / fs,
                sample_rate_hz: fs,
                channels: vec![crate::gaussian::ChannelModel::new(1.0, 1.0).unwrap()],
                master_seed: seed,
            };
            synth_shot_noise(&cfg).unwrap()
        };
        let x = mk(1);
        let y = mk(2);
        let (a, b) = (1.7, -0.4);
        let combo = QuadratureTrace {
            samples: x
                .samples
                .iter()
                .zip(y.samples.iter())
                .map(|(p, q)| a * p + b * q)
                .collect(),
            ..x.clone()
        };
        let spec = test_filter();
        let fx = bandpass(&x, &spec).unwrap();
        let fy = bandpass(&y, &spec).unwrap();
        let fc = bandpass(&combo, &spec).unwrap();
        let scale = rms(fc.valid_samples());
        for i in fc.valid.clone() {
            let expect = a * fx.samples[i] + b * fy.samples[i];
            assert!(
                (fc.samples[i] - expect).abs() < 1e-9 * scale.max(1.0),
                "nonlinearity at {i}"
            );
        }
    }

    #[test]
    fn short_trace_rejected() {
        let fs = 8e6;
        let spec = test_filter();
        let taps = spec.tap_count(fs);
        let trace = tone_trace(1e6, fs, 3 * taps - 1);
        assert!(bandpass(&trace, &spec).is_err());
    }

    #[test]
    fn slice_integrate_constant_trace() {
        // 500 ns at 16 MS/s is exactly 8 samples
        let fs = 16e6;
        let n = 64;
        let c = 0.35;
        let trace = QuadratureTrace {
            samples: vec![c; n],
            sample_rate_hz: fs,
            channel_id: 0,
            role: TraceRole::Probe,
            seed: 0,
            valid: 0..n,
        };
        let ints = slice_integrate(&trace, 500.0, 500.0).unwrap();
        // 64 samples, 8-sample slices with 8-sample buffers: slices at 0, 16, 32, 48
        assert_eq!(ints.len(), 4);
        for v in &ints {
            assert_abs_diff_eq!(*v, 8.0 * c, epsilon = 1e-12);
        }
    }

    #[test]
    fn slice_count_formula_matches_hand_counts() {
        // hand-enumerated tiny layouts (valid_len, slice, buffer, expected)
        for &(v, s, b, expect) in &[
            (8usize, 8usize, 8usize, 1usize),
            (15, 8, 8, 1),
            (16, 8, 8, 1),
            (24, 8, 8, 2),
            (39, 8, 8, 2),
            (40, 8, 8, 3),
            (7, 8, 8, 0),
            (24, 8, 0, 3),
            (25, 8, 0, 3),
            (1, 1, 0, 1),
            (10, 3, 2, 2),
            (13, 3, 2, 3),
        ] {
            assert_eq!(
                slice_count(v, s, b),
                expect,
                "valid={v} slice={s} buffer={b}"
            );
        }
    }

    #[test]
    fn nyquist_alternation_integrates_to_zero() {
        let fs = 16e6;
        let n = 64;
        let trace = QuadratureTrace {
            samples: (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            sample_rate_hz: fs,
            channel_id: 0,
            role: TraceRole::Probe,
            seed: 0,
            valid: 0..n,
        };
        let ints = slice_integrate(&trace, 500.0, 500.0).unwrap();
        for v in &ints {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn slice_integrate_respects_valid_range() {
        let fs = 16e6;
        let n = 64;
        let mut samples = vec![1.0; n];
        // poison the region outside valid; it must not leak into integrals
        for v in samples.iter_mut().take(16) {
            *v = 1000.0;
        }
        for v in samples.iter_mut().skip(48) {
            *v = 1000.0;
        }
        let trace = QuadratureTrace {
            samples,
            sample_rate_hz: fs,
            channel_id: 0,
            role: TraceRole::Probe,
            seed: 0,
            valid: 16..48,
        };
        let ints = slice_integrate(&trace, 500.0, 500.0).unwrap();
        assert_eq!(ints.len(), 2);
        assert_abs_diff_eq!(ints[0], 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ints[1], 8.0, epsilon = 1e-12);
    }

    #[test]
    fn binarize_rule() {
        assert_eq!(binarize(&[0.3, -0.2, 0.0]).unwrap(), vec![1, 0, 0]);
        assert_eq!(binarize(&[5.0, 1e-300]).unwrap(), vec![1, 1]);
        assert!(binarize(&[]).is_err());
        // negation flips every bit produced from strictly nonzero values
        let vals = [0.4, -1.2, 3.0, -0.01];
        let a = binarize(&vals).unwrap();
        let negated: Vec<f64> = vals.iter().map(|v| -v).collect();
        let b = binarize(&negated).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x ^ y, 1);
        }
    }

    #[test]
    fn squeezing_estimate_on_calibrated_channel() {
        let model = crate::gaussian::ChannelModel::from_calibration(-2.3, 0.887).unwrap();
        let cfg = SynthConfig {
            duration_s: 0.05,
            sample_rate_hz: 8e6,
            channels: vec![model.clone()],
            master_seed: 12,
        };
        let (p, c) = synth_pair(&model, &cfg, 0).unwrap();
        let shot = synth_shot_noise(&cfg).unwrap();
        let est = estimate_squeezing(&p, &c, &shot, 1e6, 100e3).unwrap();
        assert!(!est.floored);
        assert!(
            (est.db - (-2.3)).abs() < 0.3,
            "estimated {} dB, expected -2.3 +- 0.3",
            est.db
        );
    }

    #[test]
    fn squeezing_estimate_vacuum_is_zero_db() {
        let mut model = crate::gaussian::ChannelModel::new(1.0, 1.0).unwrap();
        model.technical_noise_db = -400.0;
        let cfg = SynthConfig {
            duration_s: 0.05,
            sample_rate_hz: 8e6,
            channels: vec![model.clone()],
            master_seed: 13,
        };
        let (p, c) = synth_pair(&model, &cfg, 0).unwrap();
        let shot = synth_shot_noise(&cfg).unwrap();
        let est = estimate_squeezing(&p, &c, &shot, 1e6, 100e3).unwrap();
        assert!(est.db.abs() < 0.3, "vacuum estimated at {} dB", est.db);
    }

    #[test]
    fn squeezing_estimate_identical_traces_floors() {
        let cfg = SynthConfig {
            duration_s: 0.02,
            sample_rate_hz: 8e6,
            channels: vec![crate::gaussian::ChannelModel::new(1.0, 1.0).unwrap()],
            master_seed: 14,
        };
        let shot = synth_shot_noise(&cfg).unwrap();
        let est = estimate_squeezing(&shot, &shot, &shot, 1e6, 100e3).unwrap();
        assert!(est.floored);
        assert_eq!(est.db, SQUEEZING_FLOOR_DB);
    }

    #[test]
    fn squeezing_estimate_rejects_mismatch() {
        let cfg = SynthConfig {
            duration_s: 0.02,
            sample_rate_hz: 8e6,
            channels: vec![crate::gaussian::ChannelModel::new(1.0, 1.0).unwrap()],
            master_seed: 15,
        };
        let shot = synth_shot_noise(&cfg).unwrap();
        let mut short = shot.clone();
        short.samples.truncate(1000);
        assert!(estimate_squeezing(&short, &shot, &shot, 1e6, 100e3).is_err());
        // band outside trace bandwidth
        assert!(estimate_squeezing(&shot, &shot, &shot, 5e6, 100e3).is_err());
    }

    #[test]
    fn adjacent_bit_correlation_cases() {
        let mk = |bits: Vec<u8>| BitStream {
            bits,
            slice_ns: 500.0,
            buffer_ns: 500.0,
            source_channel: 0,
            role: StreamRole::Probe,
        };
        let alternating = mk((0..2000).map(|i| (i % 2) as u8).collect());
        assert_abs_diff_eq!(
            adjacent_bit_correlation(&alternating).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        let constant = mk(vec![1; 2000]);
        assert!(adjacent_bit_correlation(&constant).is_err());
        let short = mk(vec![0, 1, 0, 1]);
        assert!(adjacent_bit_correlation(&short).is_err());
    }

    #[test]
    fn pipeline_end_to_end_statistics() {
        let model = crate::gaussian::ChannelModel::from_calibration(-2.0, 0.869).unwrap();
        let cfg = SynthConfig {
            duration_s: 0.05,
            sample_rate_hz: 8e6,
            channels: vec![model.clone()],
            master_seed: 16,
        };
        let (p, c) = synth_pair(&model, &cfg, 0).unwrap();
        let spec = PipelineSpec {
            bit_target: Some(40_000),
            ..PipelineSpec::default()
        };
        let op = process_trace(&p, &spec).unwrap();
        let oc = process_trace(&c, &spec).unwrap();
        assert_eq!(op.stream.len(), 40_000);
        assert!((op.ones_fraction - 0.5).abs() < 0.01, "{}", op.ones_fraction);
        assert!((oc.ones_fraction - 0.5).abs() < 0.01);
        assert!(op.realized_bit_rate_hz > 0.5e6 && op.realized_bit_rate_hz <= 1.0e6);

        // probe/conjugate agreement lands near the sign-agreement prediction
        let agree = op
            .stream
            .bits
            .iter()
            .zip(oc.stream.bits.iter())
            .filter(|(a, b)| a == b)
            .count() as f64
            / op.stream.len() as f64;
        assert!(
            (agree - 0.869).abs() < 0.015,
            "pipeline agreement {agree} vs target 0.869"
        );
    }

    #[test]
    fn pipeline_bit_target_unreachable() {
        let model = crate::gaussian::ChannelModel::from_calibration(-2.0, 0.869).unwrap();
        let cfg = SynthConfig {
            duration_s: 0.02,
            sample_rate_hz: 8e6,
            channels: vec![model.clone()],
            master_seed: 17,
        };
        let (p, _) = synth_pair(&model, &cfg, 0).unwrap();
        let spec = PipelineSpec {
            bit_target: Some(90_000),
            ..PipelineSpec::default()
        };
        assert!(process_trace(&p, &spec).is_err());
    }
}
