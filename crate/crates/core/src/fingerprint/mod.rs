//! Spectral band fingerprints for duplicate detection.
//!
//! Audio is cut into overlapping 4096-sample frames (hop 2048). Each frame is
//! Hann-windowed and transformed, and the argmax bin of each of 16 log-spaced
//! bands becomes that frame's code. The fingerprint is the SHA-256 of all frame
//! codes, so two uploads match only when their band structure matches exactly.

mod spectrum;
mod wav;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub use spectrum::{
    band_range, dft_magnitudes, extract_subscripts, hann_window, BAND_COUNT, BAND_EDGES, FRAME_SIZE, HOP_SIZE,
    SPECTRUM_BINS,
};
pub use wav::{encode_wav, read_wav};

/// Bins further than this ratio below the frame's strongest bin are treated as
/// silence (60 dB). Keeps quantization noise from choosing band winners.
pub const SILENCE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AudioError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

/// Mono 16-bit PCM. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcmAudio {
    samples: Vec<i16>,
    sample_rate: u32,
}

impl PcmAudio {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::InvalidInput("audio has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(AudioError::InvalidInput("sample rate must be positive".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Number of analysis frames: one for anything up to a frame long, then
    /// one more per started hop.
    pub fn frame_count(&self) -> usize {
        let n = self.samples.len();
        if n <= FRAME_SIZE {
            1
        } else {
            1 + (n - FRAME_SIZE).div_ceil(HOP_SIZE)
        }
    }

    /// Frame `i` scaled to [-1, 1), zero-padded past the end of the audio.
    pub fn frame(&self, i: usize) -> Vec<f64> {
        let start = i * HOP_SIZE;
        let mut out = vec![0.0; FRAME_SIZE];
        let end = (start + FRAME_SIZE).min(self.samples.len());
        if start < end {
            for (dst, &s) in out.iter_mut().zip(&self.samples[start..end]) {
                *dst = s as f64 / 32768.0;
            }
        }
        out
    }
}

/// Band-argmax bin indices of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralFrame {
    pub subscripts: [u16; BAND_COUNT],
}

impl SpectralFrame {
    /// 16 big-endian u16 values.
    pub fn code(&self) -> [u8; 2 * BAND_COUNT] {
        let mut out = [0u8; 2 * BAND_COUNT];
        for (chunk, s) in out.chunks_exact_mut(2).zip(self.subscripts) {
            chunk.copy_from_slice(&s.to_be_bytes());
        }
        out
    }
}

/// 64 lowercase hex characters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint(String);

impl Fingerprint {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.0)
    }
}

impl FromStr for Fingerprint {
    type Err = AudioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            Ok(Fingerprint(s.to_string()))
        } else {
            Err(AudioError::InvalidInput(format!("not a fingerprint: {s:?}")))
        }
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Zeroes every bin more than 60 dB below the strongest non-DC bin.
fn gate_silence(magnitudes: &mut [f64]) {
    let peak = magnitudes[1..].iter().copied().fold(0.0, f64::max);
    let floor = peak * SILENCE_FLOOR;
    for m in magnitudes.iter_mut() {
        if *m < floor {
            *m = 0.0;
        }
    }
}

/// Subscripts for every frame of `audio`.
pub fn spectral_frames(audio: &PcmAudio) -> Vec<SpectralFrame> {
    (0..audio.frame_count())
        .map(|i| {
            let mut mags = dft_magnitudes(&audio.frame(i)).expect("frames are FRAME_SIZE long");
            gate_silence(&mut mags);
            extract_subscripts(&mags).expect("spectrum has SPECTRUM_BINS bins")
        })
        .collect()
}

pub fn music_fingerprint(audio: &PcmAudio) -> Fingerprint {
    let mut hasher = Sha256::new();
    for frame in spectral_frames(audio) {
        hasher.update(frame.code());
    }
    Fingerprint(hex::encode(hasher.finalize()))
}

/// Parses WAV bytes and fingerprints them.
pub fn fingerprint_wav(bytes: &[u8]) -> Result<Fingerprint, AudioError> {
    Ok(music_fingerprint(&read_wav(bytes)?))
}
