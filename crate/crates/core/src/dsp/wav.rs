//! Mono 16-bit PCM WAV reading and writing.
//!
//! Reading normalizes samples to `[-1, 1)` by dividing by 32768; writing
//! clamps to `[-1, 1]` and quantizes with `round(x * 32767)`.

use std::fs;
use std::path::Path;

use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

const FMT_PCM: u16 = 1;

fn read_u16(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn read_u32(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

/// Reads a mono 16-bit PCM WAV file.
pub fn read_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<Waveform<T>> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.len() < 12 {
        return Err(Error::MalformedWav(format!(
            "{}: file too small for a RIFF header ({} bytes)",
            path.as_ref().display(),
            bytes.len()
        )));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav(format!(
            "{}: missing RIFF/WAVE magic",
            path.as_ref().display()
        )));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut off = 12;
    while off + 8 <= bytes.len() {
        let id = &bytes[off..off + 4];
        let size = read_u32(&bytes, off + 4) as usize;
        let body_start = off + 8;
        if body_start + size > bytes.len() {
            return Err(Error::MalformedWav(format!(
                "chunk {:?} claims {} bytes past end of file",
                String::from_utf8_lossy(id),
                size
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::MalformedWav("fmt chunk too small".into()));
                }
                fmt = Some((
                    read_u16(&bytes, body_start),
                    read_u16(&bytes, body_start + 2),
                    read_u32(&bytes, body_start + 4),
                    read_u16(&bytes, body_start + 14),
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_start + size]),
            _ => {}
        }
        // Chunks are word-aligned.
        off = body_start + size + size % 2;
    }

    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| Error::MalformedWav("missing fmt chunk".into()))?;
    if format != FMT_PCM {
        return Err(Error::MalformedWav(format!(
            "unsupported format code {format}, only PCM (1) is supported"
        )));
    }
    if channels != 1 {
        return Err(Error::MalformedWav(format!(
            "unsupported channel count {channels}, only mono is supported"
        )));
    }
    if bits != 16 {
        return Err(Error::MalformedWav(format!(
            "unsupported bit depth {bits}, only 16-bit is supported"
        )));
    }
    let data = data.ok_or_else(|| Error::MalformedWav("missing data chunk".into()))?;
    if data.is_empty() {
        return Err(Error::InputTooShort("WAV data chunk holds zero frames".into()));
    }
    if data.len() % 2 != 0 {
        return Err(Error::MalformedWav("data chunk length is odd".into()));
    }

    let samples = data
        .chunks_exact(2)
        .map(|c| lit::<T>(i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0))
        .collect();
    Ok(Waveform::new(samples, sample_rate))
}

/// Writes a mono 16-bit PCM WAV file.
pub fn write_wav<T: Scalar>(path: impl AsRef<Path>, wave: &Waveform<T>) -> Result<()> {
    wave.validate()?;
    let n = wave.samples.len();
    let data_size = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FMT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&wave.sample_rate.to_le_bytes());
    out.extend_from_slice(&(wave.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &s in &wave.samples {
        let x = s.to_f64().unwrap_or(0.0).clamp(-1.0, 1.0);
        let q = (x * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    fs::write(path.as_ref(), out)?;
    Ok(())
}
