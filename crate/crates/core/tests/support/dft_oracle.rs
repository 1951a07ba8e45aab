//! Direct-summation reference for the spectral pipeline. Shares no code with
//! the library: its own window, twiddles, band edges, gating and hashing.

#![allow(dead_code)]

use sha2::{Digest, Sha256};
use std::f64::consts::PI;

pub const N: usize = 4096;

/// O(n^2) DFT magnitudes at bins 0..=N/2 of the Hann-windowed frame.
pub fn naive_dft_magnitudes(frame: &[f64]) -> Vec<f64> {
    assert_eq!(frame.len(), N);
    let cos: Vec<f64> = (0..N).map(|k| (2.0 * PI * k as f64 / N as f64).cos()).collect();
    let sin: Vec<f64> = (0..N).map(|k| (2.0 * PI * k as f64 / N as f64).sin()).collect();
    let windowed: Vec<f64> = frame.iter().enumerate().map(|(n, x)| x * (0.5 - 0.5 * cos[n])).collect();
    (0..=N / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, x) in windowed.iter().enumerate() {
                let idx = (k * n) % N;
                re += x * cos[idx];
                im -= x * sin[idx];
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Band bounds as inclusive (lo, hi), from the geometric edge rule.
pub fn bands() -> Vec<(usize, usize)> {
    let edges: Vec<usize> = (0..=16).map(|k| 2048f64.powf(k as f64 / 16.0).round() as usize).collect();
    (0..16).map(|k| (edges[k], if k == 15 { 2048 } else { edges[k + 1] - 1 })).collect()
}

/// Exhaustive per-band scan; first maximum wins.
pub fn exhaustive_argmax(mags: &[f64]) -> Vec<u16> {
    bands()
        .into_iter()
        .map(|(lo, hi)| {
            let mut best = lo;
            for b in lo..=hi {
                if mags[b] > mags[best] {
                    best = b;
                }
            }
            best as u16
        })
        .collect()
}

/// Zero everything more than 60 dB under the strongest non-DC bin.
pub fn gate(mags: &mut [f64]) {
    let peak = mags[1..].iter().cloned().fold(0.0f64, f64::max);
    for m in mags.iter_mut() {
        if *m < peak * 1e-3 {
            *m = 0.0;
        }
    }
}

pub fn frames(samples: &[i16]) -> Vec<Vec<f64>> {
    let count = if samples.len() <= N { 1 } else { 1 + (samples.len() - N).div_ceil(2048) };
    (0..count)
        .map(|i| {
            let mut f = vec![0.0; N];
            for (j, slot) in f.iter_mut().enumerate() {
                if let Some(&s) = samples.get(i * 2048 + j) {
                    *slot = s as f64 / 32768.0;
                }
            }
            f
        })
        .collect()
}

pub fn oracle_subscripts(samples: &[i16]) -> Vec<Vec<u16>> {
    frames(samples)
        .iter()
        .map(|f| {
            let mut m = naive_dft_magnitudes(f);
            gate(&mut m);
            exhaustive_argmax(&m)
        })
        .collect()
}

pub fn oracle_fingerprint(samples: &[i16]) -> String {
    let mut h = Sha256::new();
    for frame in oracle_subscripts(samples) {
        for s in frame {
            h.update(s.to_be_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A real-valued sine quantized to 16 bits.
pub fn tone(freq: f64, amplitude: f64, seconds: f64, rate: u32) -> Vec<i16> {
    let len = (seconds * rate as f64) as usize;
    (0..len).map(|n| (amplitude * 32767.0 * (2.0 * PI * freq * n as f64 / rate as f64).sin()).round() as i16).collect()
}
