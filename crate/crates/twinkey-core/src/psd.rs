//! Welch-averaged power spectral density estimation.
//!
//! Used by the squeezing estimator (emulating the bench's spectrum-analyzer
//! readout) and by tests that verify the synthesized spectra.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// One-sided power spectral density estimate.
#[derive(Debug, Clone)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    /// Density in units of input-power per Hz.
    pub power: Vec<f64>,
    pub resolution_hz: f64,
}

/// Welch's method: mean of Hann-windowed periodograms over 50%-overlapping
/// segments of length `nperseg`, one-sided density scaling.
pub fn welch_psd(samples: &[f64], sample_rate_hz: f64, nperseg: usize) -> Result<Psd> {
    if nperseg < 8 || nperseg % 2 != 0 {
        return Err(Error::Dsp(format!(
            "welch segment length must be even and >= 8, got {nperseg}"
        )));
    }
    if samples.len() < nperseg {
        return Err(Error::Dsp(format!(
            "welch needs at least one segment: {} samples < nperseg {nperseg}",
            samples.len()
        )));
    }
    if !(sample_rate_hz > 0.0) {
        return Err(Error::Dsp(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }

    // periodic Hann window
    let window: Vec<f64> = (0..nperseg)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / nperseg as f64).cos()))
        .collect();
    let win_sumsq: f64 = window.iter().map(|w| w * w).sum();

    let step = nperseg / 2;
    let n_segments = (samples.len() - nperseg) / step + 1;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nperseg);
    let n_bins = nperseg / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); nperseg];

    for s in 0..n_segments {
        let seg = &samples[s * step..s * step + nperseg];
        for (b, (&x, &w)) in buf.iter_mut().zip(seg.iter().zip(window.iter())) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
    }

    let scale = 1.0 / (sample_rate_hz * win_sumsq * n_segments as f64);
    let mut power: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    // one-sided: double everything except DC and Nyquist
    for p in power.iter_mut().take(n_bins - 1).skip(1) {
        *p *= 2.0;
    }

    let resolution_hz = sample_rate_hz / nperseg as f64;
    let freqs_hz = (0..n_bins).map(|k| k as f64 * resolution_hz).collect();
    Ok(Psd {
        freqs_hz,
        power,
        resolution_hz,
    })
}

/// Mean density over all bins whose center lies in `[lo_hz, hi_hz]`.
pub fn band_average(psd: &Psd, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (f, p) in psd.freqs_hz.iter().zip(psd.power.iter()) {
        if *f >= lo_hz && *f <= hi_hz {
            sum += p;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Dsp(format!(
            "no spectral bins inside [{lo_hz}, {hi_hz}] Hz (resolution {} Hz)",
            psd.resolution_hz
        )));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn sinusoid_power_lands_in_its_bin() {
        let fs = 1000.0;
        let f0 = 125.0;
        let n = 8192;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f0 * i as f64 / fs).sin())
            .collect();
        let psd = welch_psd(&x, fs, 512).unwrap();
        // total one-sided power integrates to the signal variance (1/2)
        let total: f64 = psd.power.iter().sum::<f64>() * psd.resolution_hz;
        assert_abs_diff_eq!(total, 0.5, epsilon = 0.01);
        // and concentrates at f0
        let peak_bin = psd
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_abs_diff_eq!(psd.freqs_hz[peak_bin], f0, epsilon = psd.resolution_hz);
    }

    #[test]
    fn white_noise_density_is_flat_at_two_over_fs() {
        let fs = 2000.0;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let psd = welch_psd(&x, fs, 1024).unwrap();
        let avg = band_average(&psd, 100.0, 900.0).unwrap();
        // unit-variance white noise has one-sided density 2/fs
        assert_abs_diff_eq!(avg, 2.0 / fs, epsilon = 0.05 * 2.0 / fs);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(welch_psd(&[0.0; 10], 100.0, 7).is_err());
        assert!(welch_psd(&[0.0; 10], 100.0, 16).is_err());
        assert!(welch_psd(&[0.0; 100], 0.0, 16).is_err());
        let psd = welch_psd(&[0.0; 100], 100.0, 16).unwrap();
        assert!(band_average(&psd, 200.0, 300.0).is_err());
    }
}
