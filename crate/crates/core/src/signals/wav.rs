//! Minimal RIFF/WAVE reader and writer: PCM, 16-bit, mono only.
//!
//! Samples map to and from `[-1, 1]` through a factor of 32768; on write,
//! values are rounded to the nearest integer and clamped to `[-32768, 32767]`,
//! so a full-scale `1.0` is stored as `32767`.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::Signal;
use crate::error::Result;
use crate::scalar::Real;

const PCM_SCALE: f64 = 32768.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WavError {
    #[error("malformed WAV file: {0}")]
    Malformed(String),
    #[error("unsupported WAV format: {0}")]
    Unsupported(String),
}

/// Outcome of an encode/write: how many samples were outside `[-1, 1]` and clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteStats {
    pub clipped: usize,
}

fn malformed(msg: impl Into<String>) -> WavError {
    WavError::Malformed(msg.into())
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn quantize<T: Real>(x: T) -> (i16, bool) {
    let scaled = (x.as_f64() * PCM_SCALE).round();
    let clamped = scaled.clamp(i16::MIN as f64, i16::MAX as f64);
    (clamped as i16, x.as_f64().abs() > 1.0)
}

pub fn encode_pcm16<T: Real>(signal: &Signal<T>) -> (Vec<u8>, WriteStats) {
    let data_len = signal.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&signal.sample_rate().to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());

    let mut stats = WriteStats::default();
    for &x in signal.samples() {
        let (q, clipped) = quantize(x);
        stats.clipped += clipped as usize;
        out.extend_from_slice(&q.to_le_bytes());
    }
    (out, stats)
}

pub fn decode_pcm16<T: Real>(bytes: &[u8]) -> std::result::Result<Signal<T>, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                malformed(format!(
                    "chunk `{}` claims {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed(format!("fmt chunk is {} bytes, need 16", body.len())));
                }
                fmt = Some((
                    u16_at(body, 0),
                    u16_at(body, 2),
                    u32_at(body, 4),
                    u16_at(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        at = body_end + (size & 1);
    }

    let (format, channels, sample_rate, bits) = fmt.ok_or_else(|| malformed("no fmt chunk"))?;
    match format {
        1 => {}
        3 => return Err(WavError::Unsupported("IEEE float samples (only PCM is supported)".into())),
        0xFFFE => {
            return Err(WavError::Unsupported(
                "WAVE_FORMAT_EXTENSIBLE (only plain PCM is supported)".into(),
            ))
        }
        other => {
            return Err(WavError::Unsupported(format!(
                "audio format {other} (only PCM = 1 is supported)"
            )))
        }
    }
    if channels != 1 {
        return Err(WavError::Unsupported(format!(
            "{channels} channels (only mono is supported)"
        )));
    }
    if bits != 16 {
        return Err(WavError::Unsupported(format!(
            "{bits}-bit samples (only 16-bit is supported)"
        )));
    }
    if sample_rate == 0 {
        return Err(malformed("sample rate is zero"));
    }
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(malformed(format!("data chunk has odd length {}", data.len())));
    }
    let samples = data
        .chunks_exact(2)
        .map(|c| T::of(i16::from_le_bytes([c[0], c[1]]) as f64 / PCM_SCALE))
        .collect();
    Signal::new(samples, sample_rate).map_err(|e| malformed(e.to_string()))
}

pub fn read_wav<T: Real>(path: impl AsRef<Path>) -> Result<Signal<T>> {
    let bytes = fs::read(path)?;
    Ok(decode_pcm16(&bytes)?)
}

pub fn write_wav<T: Real>(path: impl AsRef<Path>, signal: &Signal<T>) -> Result<WriteStats> {
    let (bytes, stats) = encode_pcm16(signal);
    fs::write(path, bytes)?;
    Ok(stats)
}
