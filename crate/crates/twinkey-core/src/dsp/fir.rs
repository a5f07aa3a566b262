//! Windowed-sinc FIR design (Kaiser window) and linear-phase FFT filtering.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < sum * 1e-18 {
            return sum;
        }
        k += 1.0;
    }
}

/// Kaiser shape parameter for a target stopband attenuation in dB.
fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Number of taps needed for the given attenuation and transition width
/// (Kaiser's empirical formula), forced odd for a type-I linear-phase filter.
pub fn kaiser_tap_count(atten_db: f64, transition_hz: f64, sample_rate_hz: f64) -> usize {
    let delta_omega = 2.0 * std::f64::consts::PI * transition_hz / sample_rate_hz;
    let m = ((atten_db - 7.95) / (2.285 * delta_omega)).ceil() as usize;
    let taps = m + 1;
    if taps % 2 == 0 {
        taps + 1
    } else {
        taps
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Kaiser-windowed sinc bandpass taps. `f_lo`/`f_hi` are the 6-dB cutoff
/// frequencies; the transition bands straddle them. The taps are normalized
/// to unit gain at the band center.
pub fn design_bandpass(
    f_lo_hz: f64,
    f_hi_hz: f64,
    transition_hz: f64,
    atten_db: f64,
    sample_rate_hz: f64,
) -> Result<Vec<f64>> {
    let nyquist = sample_rate_hz / 2.0;
    if !(f_lo_hz > 0.0 && f_lo_hz < f_hi_hz && f_hi_hz < nyquist) {
        return Err(Error::Dsp(format!(
            "band edges must satisfy 0 < {f_lo_hz} < {f_hi_hz} < {nyquist} Hz"
        )));
    }
    if !(transition_hz > 0.0) || f_lo_hz - transition_hz / 2.0 <= 0.0
        || f_hi_hz + transition_hz / 2.0 >= nyquist
    {
        return Err(Error::Dsp(format!(
            "transition width {transition_hz} Hz does not fit around [{f_lo_hz}, {f_hi_hz}]"
        )));
    }
    if !(atten_db > 0.0) {
        return Err(Error::Dsp(format!(
            "stopband attenuation must be positive, got {atten_db} dB"
        )));
    }

    let taps = kaiser_tap_count(atten_db, transition_hz, sample_rate_hz);
    let beta = kaiser_beta(atten_db);
    let center = (taps - 1) as f64 / 2.0;
    let i0_beta = bessel_i0(beta);
    let c_lo = 2.0 * f_lo_hz / sample_rate_hz;
    let c_hi = 2.0 * f_hi_hz / sample_rate_hz;

    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - center;
            let ideal = c_hi * sinc(c_hi * x) - c_lo * sinc(c_lo * x);
            let r = x / center;
            let window = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            ideal * window
        })
        .collect();

    // normalize to exactly unit gain at the geometric band center
    let f_center = (f_lo_hz * f_hi_hz).sqrt();
    let gain = frequency_response_magnitude(&h, f_center, sample_rate_hz);
    for v in h.iter_mut() {
        *v /= gain;
    }
    Ok(h)
}

/// Magnitude of the filter's frequency response at `f_hz` (direct evaluation;
/// exact for symmetric taps).
pub fn frequency_response_magnitude(taps: &[f64], f_hz: f64, sample_rate_hz: f64) -> f64 {
    let center = (taps.len() - 1) as f64 / 2.0;
    let omega = 2.0 * std::f64::consts::PI * f_hz / sample_rate_hz;
    let mut re = 0.0;
    let mut im = 0.0;
    for (i, &t) in taps.iter().enumerate() {
        let phase = omega * (i as f64 - center);
        re += t * phase.cos();
        im -= t * phase.sin();
    }
    (re * re + im * im).sqrt()
}

/// Smallest 5-smooth number >= n, to keep FFT lengths fast.
fn next_fast_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1usize;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut m = p35;
            while m < n {
                m *= 2;
            }
            if m < best {
                best = m;
            }
            match p35.checked_mul(3) {
                Some(v) => p35 = v,
                None => break,
            }
        }
        match p5.checked_mul(5) {
            Some(v) => p5 = v,
            None => break,
        }
    }
    best
}

/// Zero-phase-aligned FIR filtering: convolves with symmetric `taps` via FFT
/// and shifts by the group delay so the output shares the input's timeline.
/// Output has the same length as the input; the first and last
/// `(taps-1)/2` samples are contaminated by the edges and must be discarded
/// by the caller's validity bookkeeping.
pub fn filter_same(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len();
    let t = taps.len();
    let full = n + t - 1;
    let nfft = next_fast_len(full);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nfft);
    let ifft = planner.plan_fft_inverse(nfft);

    let mut xs = vec![Complex::new(0.0, 0.0); nfft];
    for (b, &v) in xs.iter_mut().zip(x.iter()) {
        *b = Complex::new(v, 0.0);
    }
    let mut hs = vec![Complex::new(0.0, 0.0); nfft];
    for (b, &v) in hs.iter_mut().zip(taps.iter()) {
        *b = Complex::new(v, 0.0);
    }
    fft.process(&mut xs);
    fft.process(&mut hs);
    for (a, b) in xs.iter_mut().zip(hs.iter()) {
        *a *= *b;
    }
    ifft.process(&mut xs);

    let delay = (t - 1) / 2;
    let scale = 1.0 / nfft as f64;
    xs[delay..delay + n].iter().map(|c| c.re * scale).collect()
}
