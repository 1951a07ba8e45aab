use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{AudioError, SpectralFrame};

pub const FRAME_SIZE: usize = 4096;
pub const HOP_SIZE: usize = 2048;
/// Bins 0..=FRAME_SIZE/2 of the one-sided spectrum.
pub const SPECTRUM_BINS: usize = FRAME_SIZE / 2 + 1;
pub const BAND_COUNT: usize = 16;

/// Lower edges of the 16 log-spaced bands over bins 1..=2048, plus the final
/// inclusive upper edge. Edge k is round(2048^(k/16)).
pub const BAND_EDGES: [usize; BAND_COUNT + 1] =
    [1, 2, 3, 4, 7, 11, 17, 28, 45, 73, 117, 189, 304, 490, 790, 1272, 2048];

/// Inclusive bin range of band `k`.
pub fn band_range(k: usize) -> std::ops::RangeInclusive<usize> {
    let lo = BAND_EDGES[k];
    let hi = if k + 1 == BAND_COUNT { BAND_EDGES[BAND_COUNT] } else { BAND_EDGES[k + 1] - 1 };
    lo..=hi
}

fn plan() -> &'static Arc<dyn Fft<f64>> {
    static PLAN: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
    PLAN.get_or_init(|| FftPlanner::new().plan_fft_forward(FRAME_SIZE))
}

fn hann() -> &'static [f64] {
    static WINDOW: OnceLock<Vec<f64>> = OnceLock::new();
    WINDOW.get_or_init(|| {
        (0..FRAME_SIZE).map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / FRAME_SIZE as f64).cos()).collect()
    })
}

/// The periodic Hann window applied before the transform.
pub fn hann_window() -> &'static [f64] {
    hann()
}

/// Magnitudes of the DFT of the Hann-windowed frame at bins 0..=2048.
pub fn dft_magnitudes(frame: &[f64]) -> Result<Vec<f64>, AudioError> {
    if frame.len() != FRAME_SIZE {
        return Err(AudioError::ContractViolation(format!("frame has {} samples, expected {FRAME_SIZE}", frame.len())));
    }
    let mut buf: Vec<Complex<f64>> = frame.iter().zip(hann()).map(|(&x, &w)| Complex::new(x * w, 0.0)).collect();
    plan().process(&mut buf);
    Ok(buf[..SPECTRUM_BINS].iter().map(|c| c.norm()).collect())
}

/// Per-band argmax bin index; ties go to the lowest index.
pub fn extract_subscripts(magnitudes: &[f64]) -> Result<SpectralFrame, AudioError> {
    if magnitudes.len() != SPECTRUM_BINS {
        return Err(AudioError::ContractViolation(format!(
            "spectrum has {} bins, expected {SPECTRUM_BINS}",
            magnitudes.len()
        )));
    }
    let mut subscripts = [0u16; BAND_COUNT];
    for (k, slot) in subscripts.iter_mut().enumerate() {
        let range = band_range(k);
        let mut best = *range.start();
        for bin in range {
            if magnitudes[bin] > magnitudes[best] {
                best = bin;
            }
        }
        *slot = best as u16;
    }
    Ok(SpectralFrame { subscripts })
}
