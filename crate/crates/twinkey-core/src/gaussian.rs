//! Gaussian two-mode squeezed vacuum model.
//!
//! Everything here is expressed in shot-noise units (vacuum variance = 1).
//! A channel is a probe/conjugate beam pair whose joint difference quadrature
//! `(X_p - X_c)/sqrt(2)` has variance `v_minus` (squeezed when < 1) and whose
//! joint sum quadrature has variance `v_plus`. These two numbers, together
//! with the spectral band over which they hold, fully determine the Gaussian
//! state and therefore every bit-level statistic downstream.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default band over which the squeezed joint variance holds, Hz.
pub const DEFAULT_SQUEEZE_BAND_HZ: (f64, f64) = (15e3, 2e6);
/// Default correlated technical-noise level above shot noise, dB.
pub const DEFAULT_TECHNICAL_NOISE_DB: f64 = 10.0;
/// Default corner frequency below which technical noise dominates, Hz.
pub const DEFAULT_TECHNICAL_CORNER_HZ: f64 = 15e3;

/// Per-pair Gaussian noise description for one probe/conjugate channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Variance of the joint difference quadrature `(X_p - X_c)/sqrt(2)`, SNL = 1.
    pub v_minus: f64,
    /// Variance of the joint sum quadrature `(X_p + X_c)/sqrt(2)`, SNL = 1.
    pub v_plus: f64,
    /// Lower edge of the band over which `v_minus`/`v_plus` hold, Hz.
    pub squeeze_band_lo_hz: f64,
    /// Upper edge of that band, Hz. Outside the band the spectra relax toward vacuum.
    pub squeeze_band_hi_hz: f64,
    /// Correlated classical noise level below the corner, dB above shot noise.
    pub technical_noise_db: f64,
    /// Corner frequency of the technical-noise lobe, Hz.
    pub technical_corner_hz: f64,
}

impl ChannelModel {
    /// Builds a model from the two joint variances with default band and
    /// technical-noise settings.
    pub fn new(v_minus: f64, v_plus: f64) -> Result<Self> {
        let model = ChannelModel {
            v_minus,
            v_plus,
            squeeze_band_lo_hz: DEFAULT_SQUEEZE_BAND_HZ.0,
            squeeze_band_hi_hz: DEFAULT_SQUEEZE_BAND_HZ.1,
            technical_noise_db: DEFAULT_TECHNICAL_NOISE_DB,
            technical_corner_hz: DEFAULT_TECHNICAL_CORNER_HZ,
        };
        model.validate()?;
        Ok(model)
    }

    /// Calibrates a channel to a measured squeezing level and a target
    /// probe/conjugate bit-agreement fraction.
    ///
    /// `v_minus` is fixed by the squeezing level; `v_plus` is solved so that
    /// the sign-agreement probability of the resulting X-quadrature
    /// correlation equals `agreement_target`.
    pub fn from_calibration(squeezing_db: f64, agreement_target: f64) -> Result<Self> {
        if squeezing_db >= 0.0 {
            return Err(Error::Model(format!(
                "calibration requires squeezing below shot noise, got {squeezing_db} dB"
            )));
        }
        if !(0.5..1.0).contains(&agreement_target) {
            return Err(Error::Model(format!(
                "agreement target must be in [0.5, 1), got {agreement_target}"
            )));
        }
        let v_minus = variance_from_db(squeezing_db);
        let rho = rho_for_agreement(agreement_target)?;
        // rho = (v_plus - v_minus)/(v_plus + v_minus), solved for v_plus
        let v_plus = v_minus * (1.0 + rho) / (1.0 - rho);
        ChannelModel::new(v_minus, v_plus)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_minus > 0.0) || !(self.v_plus > 0.0) {
            return Err(Error::Model(format!(
                "joint variances must be positive, got v_minus={}, v_plus={}",
                self.v_minus, self.v_plus
            )));
        }
        if self.v_minus * self.v_plus < 1.0 {
            return Err(Error::Model(format!(
                "unphysical state: v_minus*v_plus = {} < 1",
                self.v_minus * self.v_plus
            )));
        }
        if !(self.squeeze_band_lo_hz < self.squeeze_band_hi_hz) || self.squeeze_band_lo_hz <= 0.0 {
            return Err(Error::Model(format!(
                "invalid squeeze band [{}, {}] Hz",
                self.squeeze_band_lo_hz, self.squeeze_band_hi_hz
            )));
        }
        if self.technical_corner_hz <= 0.0 {
            return Err(Error::Model(format!(
                "technical corner must be positive, got {} Hz",
                self.technical_corner_hz
            )));
        }
        Ok(())
    }

    /// The two-mode covariance matrix of the in-band state.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        covariance_from_joint_variances(self.v_minus, self.v_plus)
    }
}

/// 4x4 covariance matrix over the ordered basis `(X_p, Y_p, X_c, Y_c)`,
/// shot-noise units. Constructed only through validated paths, so symmetry,
/// positive definiteness, and the uncertainty bound hold by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    m: [[f64; 4]; 4],
}

impl CovarianceMatrix {
    /// Identity matrix: two uncorrelated vacuum modes.
    pub fn vacuum() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        CovarianceMatrix { m }
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    pub fn as_array(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    /// Recovers `(v_minus, v_plus)` of the joint X quadratures.
    pub fn joint_variances(&self) -> (f64, f64) {
        let var_sum = (self.m[0][0] + self.m[2][2]) / 2.0;
        let v_minus = var_sum - self.m[0][2];
        let v_plus = var_sum + self.m[0][2];
        (v_minus, v_plus)
    }

    fn is_symmetric(&self) -> bool {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (self.m[i][j] - self.m[j][i]).abs() > 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    /// Cholesky-based positive definiteness check.
    fn is_positive_definite(&self) -> bool {
        let mut l = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..=i {
                let mut s = self.m[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= 0.0 {
                        return false;
                    }
                    l[i][j] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_symmetric() {
            return Err(Error::Model("covariance matrix is not symmetric".into()));
        }
        if !self.is_positive_definite() {
            return Err(Error::Model(
                "covariance matrix is not positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Converts a variance in shot-noise units to dB relative to the SNL.
/// Negative results mean noise below shot noise (squeezing).
pub fn squeezing_db(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Model(format!("variance must be positive, got {v}")));
    }
    Ok(10.0 * v.log10())
}

/// Inverse of [`squeezing_db`].
pub fn variance_from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Builds the symmetric two-mode covariance matrix from the joint
/// difference/sum variances.
///
/// `Var(X_p) = Var(X_c) = (v_plus + v_minus)/2` and
/// `Cov(X_p, X_c) = (v_plus - v_minus)/2`; the phase-quadrature block mirrors
/// the amplitude block with the sign of the cross term flipped (a squeezed
/// difference of X implies a squeezed sum of Y).
pub fn covariance_from_joint_variances(v_minus: f64, v_plus: f64) -> Result<CovarianceMatrix> {
    if !(v_minus > 0.0) || !(v_plus > 0.0) {
        return Err(Error::Model(format!(
            "joint variances must be positive, got ({v_minus}, {v_plus})"
        )));
    }
    if v_minus * v_plus < 1.0 {
        return Err(Error::Model(format!(
            "unphysical state: v_minus*v_plus = {} < 1",
            v_minus * v_plus
        )));
    }
    let a = (v_plus + v_minus) / 2.0;
    let c = (v_plus - v_minus) / 2.0;
    let m = [
        [a, 0.0, c, 0.0],
        [0.0, a, 0.0, -c],
        [c, 0.0, a, 0.0],
        [0.0, -c, 0.0, a],
    ];
    Ok(CovarianceMatrix { m })
}

/// Pearson correlation of the amplitude quadratures `X_p`, `X_c`.
pub fn pearson_correlation(cov: &CovarianceMatrix) -> f64 {
    cov.entry(0, 2) / (cov.entry(0, 0) * cov.entry(2, 2)).sqrt()
}

/// Probability that a zero-mean bivariate Gaussian pair with correlation
/// `rho` shares a sign: `1/2 + asin(rho)/pi` (the quadrant-count statistic).
pub fn sign_agreement(rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Model(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    Ok(0.5 + rho.asin() / std::f64::consts::PI)
}

/// Exact inverse of [`sign_agreement`]: the correlation that yields a given
/// same-sign probability.
pub fn rho_for_agreement(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Model(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    Ok((std::f64::consts::PI * (p - 0.5)).sin())
}

/// Probability that the XOR of `n` independently noisy bit streams matches
/// the XOR of the originals, given each stream's per-bit agreement.
///
/// The XOR survives iff an even number of streams flipped, which collapses to
/// `(1 + prod(2 p_i - 1)) / 2`.
pub fn xor_agreement(per_channel: &[f64]) -> Result<f64> {
    if per_channel.is_empty() {
        return Err(Error::Model("xor_agreement over an empty set".into()));
    }
    let mut prod = 1.0;
    for (i, &p) in per_channel.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Model(format!(
                "agreement probability {i} must lie in [0, 1], got {p}"
            )));
        }
        prod *= 2.0 * p - 1.0;
    }
    Ok((1.0 + prod) / 2.0)
}

/// Result of the two-mode inseparability test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub entangled: bool,
    /// `2 - S`, positive when the state violates the separability bound.
    pub margin: f64,
}

/// Duan-style inseparability sum
/// `S = Var((X_p - X_c)/sqrt(2)) + Var((Y_p + Y_c)/sqrt(2))`.
/// Separable Gaussian states satisfy `S >= 2`, so `S < 2` witnesses
/// entanglement.
pub fn entanglement_witness(cov: &CovarianceMatrix) -> Witness {
    let m = cov.as_array();
    let var_x_diff = (m[0][0] + m[2][2]) / 2.0 - m[0][2];
    let var_y_sum = (m[1][1] + m[3][3]) / 2.0 + m[1][3];
    let s = var_x_diff + var_y_sum;
    Witness {
        entangled: s < 2.0,
        margin: 2.0 - s,
    }
}
