//! Thermal coupling spectra G_i(ω) obeying the KMS relation.

use crate::error::{Error, Result};
use crate::model::{BathSpec, SpectrumShape};

/// G(ω) = γ(ω)(n̄(ω)+1) for ω > 0 and e^{−β|ω|}G(|ω|) for ω < 0.
pub fn coupling_spectrum(bath: &BathSpec, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let w = omega.abs();
    let gamma = bath.shape.rate(w);
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let bw = w / bath.temperature;
    Ok(if omega > 0.0 {
        // n̄ + 1 = 1 / (1 − e^{−βω})
        gamma / -(-bw).exp_m1()
    } else {
        // e^{−βω}(n̄ + 1) = n̄
        gamma / bw.exp_m1()
    })
}

/// Cold bath confined around ω₀, hot bath on a separate band above it.
///
/// The cold band is [ω₀ − a, ω₀ + a] and the hot band [ω₀ + 2a, ω₀ + b], so
/// for a modulation rate Ω ∈ [2a, b] with first-order sidebands only the
/// carrier couples to the cold bath and the q = +1 sideband to the hot bath.
pub fn separated_bands(omega0: f64, half_width: f64, hot_upper: f64, height: f64) -> (SpectrumShape, SpectrumShape) {
    let cold = SpectrumShape::FlatBand { lo: omega0 - half_width, hi: omega0 + half_width, height };
    let hot = SpectrumShape::FlatBand { lo: omega0 + 2.0 * half_width, hi: omega0 + hot_upper, height };
    (cold, hot)
}

/// Both baths share one flat band [lo, hi].
pub fn broadband(lo: f64, hi: f64, height: f64) -> (SpectrumShape, SpectrumShape) {
    let band = SpectrumShape::FlatBand { lo, hi, height };
    (band.clone(), band)
}
