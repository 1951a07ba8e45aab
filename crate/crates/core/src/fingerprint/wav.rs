//! Minimal RIFF/WAVE reader and writer for 16-bit integer PCM.

use super::{AudioError, PcmAudio};

const FORMAT_PCM: u16 = 1;

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    channels: u16,
    sample_rate: u32,
}

/// Parses a PCM WAV container into mono audio. Stereo input is downmixed by
/// the per-sample channel mean, rounded toward zero.
pub fn read_wav(bytes: &[u8]) -> Result<PcmAudio, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::UnsupportedFormat("missing RIFF/WAVE magic".into()));
    }

    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos < bytes.len() {
        if pos + 8 > bytes.len() {
            return Err(AudioError::MalformedFile(format!("truncated chunk header at byte {pos}")));
        }
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).filter(|&end| end <= bytes.len()).ok_or_else(|| {
            AudioError::MalformedFile(format!(
                "chunk {:?} declares {size} bytes but only {} remain",
                String::from_utf8_lossy(id),
                bytes.len() - body_start
            ))
        })?;
        let body = &bytes[body_start..body_end];

        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(AudioError::MalformedFile("fmt chunk shorter than 16 bytes".into()));
                }
                let code = le_u16(body, 0);
                let channels = le_u16(body, 2);
                let sample_rate = le_u32(body, 4);
                let bits = le_u16(body, 14);
                if code != FORMAT_PCM {
                    return Err(AudioError::UnsupportedFormat(format!("format code {code}, expected PCM (1)")));
                }
                if bits != 16 {
                    return Err(AudioError::UnsupportedFormat(format!("{bits}-bit samples, expected 16")));
                }
                if channels != 1 && channels != 2 {
                    return Err(AudioError::UnsupportedFormat(format!("{channels} channels, expected 1 or 2")));
                }
                if sample_rate == 0 {
                    return Err(AudioError::MalformedFile("sample rate is zero".into()));
                }
                format = Some(Format { channels, sample_rate });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let format = format.ok_or_else(|| AudioError::MalformedFile("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::MalformedFile("no data chunk".into()))?;
    let frame_bytes = 2 * format.channels as usize;
    if data.len() % frame_bytes != 0 {
        return Err(AudioError::MalformedFile(format!(
            "data length {} is not a multiple of the {frame_bytes}-byte frame",
            data.len()
        )));
    }

    let samples: Vec<i16> = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            if format.channels == 1 {
                i16::from_le_bytes([frame[0], frame[1]])
            } else {
                let left = i16::from_le_bytes([frame[0], frame[1]]) as i32;
                let right = i16::from_le_bytes([frame[2], frame[3]]) as i32;
                ((left + right) / 2) as i16
            }
        })
        .collect();

    PcmAudio::new(samples, format.sample_rate)
}

/// Encodes interleaved 16-bit samples as a canonical 44-byte-header WAV file.
pub fn encode_wav(samples: &[i16], channels: u16, sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let block_align = channels * 2;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_mono() {
        let bytes = encode_wav(&[1, -2, 3, -4], 1, 8000);
        let audio = read_wav(&bytes).unwrap();
        assert_eq!(audio.samples(), &[1, -2, 3, -4]);
        assert_eq!(audio.sample_rate(), 8000);
    }

    #[test]
    fn stereo_is_mean_downmixed_toward_zero() {
        let bytes = encode_wav(&[100, 300, -3, 0, 3, 0], 2, 44100);
        let audio = read_wav(&bytes).unwrap();
        assert_eq!(audio.samples(), &[200, -1, 1]);
    }

    #[test]
    fn truncated_data_is_malformed() {
        let mut bytes = encode_wav(&[1, 2, 3, 4], 1, 8000);
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(read_wav(&bytes), Err(AudioError::MalformedFile(_))));
    }

    #[test]
    fn rejects_non_wav_and_unsupported_codecs() {
        assert!(matches!(read_wav(b"ID3\x04 not a wav"), Err(AudioError::UnsupportedFormat(_))));

        let mut float = encode_wav(&[0, 0], 1, 8000);
        float[20] = 3; // IEEE float
        assert!(matches!(read_wav(&float), Err(AudioError::UnsupportedFormat(_))));

        let mut eight_bit = encode_wav(&[0, 0], 1, 8000);
        eight_bit[34] = 8;
        assert!(matches!(read_wav(&eight_bit), Err(AudioError::UnsupportedFormat(_))));
    }

    #[test]
    fn empty_data_is_invalid_input() {
        let bytes = encode_wav(&[], 1, 8000);
        assert!(matches!(read_wav(&bytes), Err(AudioError::InvalidInput(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = encode_wav(&[7, 8], 1, 8000);
        let mut bytes = plain[..12].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(b"abc\0");
        bytes.extend_from_slice(&plain[12..]);
        assert_eq!(read_wav(&bytes).unwrap().samples(), &[7, 8]);
    }
}
