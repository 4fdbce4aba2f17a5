//! Minimal PCM WAV reader/writer.
//!
//! Supports the two encodings used by the pipeline: 16-bit integer PCM and
//! 32-bit IEEE float, mono or stereo, at any sample rate. Unknown chunks are
//! skipped on read. Samples are exposed as `f64` in [-1, 1]; integer samples
//! round-trip exactly (scale 32768, clamped to the i16 range on write).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Int16,
    Float32,
}

/// Decoded WAV: one `Vec<f64>` per channel, equal lengths.
#[derive(Debug, Clone)]
pub struct WavData {
    pub sample_rate_hz: u32,
    pub format: SampleFormat,
    pub channels: Vec<Vec<f64>>,
}

impl WavData {
    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

struct FmtChunk {
    audio_format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::wav(path, format!("truncated {what}")))
}

fn parse_fmt(data: &[u8], path: &Path) -> Result<FmtChunk> {
    if data.len() < 16 {
        return Err(Error::wav(path, "fmt chunk too short"));
    }
    Ok(FmtChunk {
        audio_format: u16::from_le_bytes([data[0], data[1]]),
        channels: u16::from_le_bytes([data[2], data[3]]),
        sample_rate: u32::from_le_bytes([data[4], data[5], data[6], data[7]]),
        bits_per_sample: u16::from_le_bytes([data[14], data[15]]),
    })
}

fn read_header_and_chunks(path: &Path, want_data: bool) -> Result<(FmtChunk, Vec<u8>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut hdr = [0u8; 12];
    read_exact_or(&mut r, &mut hdr, path, "RIFF header")?;
    if &hdr[0..4] != b"RIFF" || &hdr[8..12] != b"WAVE" {
        return Err(Error::wav(path, "not a RIFF/WAVE file"));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Vec<u8> = Vec::new();
    let mut have_data = false;
    loop {
        let mut chunk_hdr = [0u8; 8];
        match r.read_exact(&mut chunk_hdr) {
            Ok(()) => {}
            Err(_) => break, // end of file
        }
        let id = [chunk_hdr[0], chunk_hdr[1], chunk_hdr[2], chunk_hdr[3]];
        let size =
            u32::from_le_bytes([chunk_hdr[4], chunk_hdr[5], chunk_hdr[6], chunk_hdr[7]]) as usize;
        match &id {
            b"fmt " => {
                let mut buf = vec![0u8; size];
                read_exact_or(&mut r, &mut buf, path, "fmt chunk")?;
                fmt = Some(parse_fmt(&buf, path)?);
            }
            b"data" => {
                if want_data {
                    let mut buf = vec![0u8; size];
                    read_exact_or(&mut r, &mut buf, path, "data chunk")?;
                    data = buf;
                } else {
                    std::io::copy(&mut r.by_ref().take(size as u64), &mut std::io::sink())
                        .map_err(|e| Error::io(path, e))?;
                }
                have_data = true;
            }
            _ => {
                std::io::copy(&mut r.by_ref().take(size as u64), &mut std::io::sink())
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        // chunks are word-aligned
        if size % 2 == 1 {
            let mut pad = [0u8; 1];
            let _ = r.read_exact(&mut pad);
        }
        if !want_data && fmt.is_some() {
            break;
        }
    }
    let fmt = fmt.ok_or_else(|| Error::wav(path, "missing fmt chunk"))?;
    if want_data && !have_data {
        return Err(Error::wav(path, "missing data chunk"));
    }
    Ok((fmt, data))
}

/// Channel count from the header only (cheap manifest validation).
pub fn channel_count(path: impl AsRef<Path>) -> Result<u16> {
    let path = path.as_ref();
    let (fmt, _) = read_header_and_chunks(path, false)?;
    Ok(fmt.channels)
}

/// Read a whole WAV file into per-channel `f64` buffers.
pub fn read(path: impl AsRef<Path>) -> Result<WavData> {
    let path = path.as_ref();
    let (fmt, data) = read_header_and_chunks(path, true)?;
    if fmt.channels == 0 {
        return Err(Error::wav(path, "zero channels"));
    }
    let format = match (fmt.audio_format, fmt.bits_per_sample) {
        (1, 16) => SampleFormat::Int16,
        (3, 32) => SampleFormat::Float32,
        (f, b) => {
            return Err(Error::wav(
                path,
                format!("unsupported encoding: format tag {f}, {b} bits per sample"),
            ))
        }
    };
    let bytes_per_sample = match format {
        SampleFormat::Int16 => 2,
        SampleFormat::Float32 => 4,
    };
    let stride = bytes_per_sample * fmt.channels as usize;
    let frames = data.len() / stride;
    let mut channels = vec![Vec::with_capacity(frames); fmt.channels as usize];
    for frame in 0..frames {
        for (ch, out) in channels.iter_mut().enumerate() {
            let off = frame * stride + ch * bytes_per_sample;
            let v = match format {
                SampleFormat::Int16 => {
                    i16::from_le_bytes([data[off], data[off + 1]]) as f64 / 32768.0
                }
                SampleFormat::Float32 => {
                    f32::from_le_bytes([data[off], data[off + 1], data[off + 2], data[off + 3]])
                        as f64
                }
            };
            out.push(v);
        }
    }
    Ok(WavData {
        sample_rate_hz: fmt.sample_rate,
        format,
        channels,
    })
}

/// Read a mono file, rejecting anything with more than one channel.
pub fn read_mono(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let path = path.as_ref();
    let wav = read(path)?;
    if wav.channels.len() != 1 {
        return Err(Error::NonMonoAudio {
            path: path.to_path_buf(),
            channels: wav.channels.len() as u16,
        });
    }
    let fs = wav.sample_rate_hz;
    Ok((wav.channels.into_iter().next().unwrap(), fs))
}

fn encode_sample(v: f64, format: SampleFormat, out: &mut Vec<u8>) {
    match format {
        SampleFormat::Int16 => {
            let scaled = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            out.extend_from_slice(&scaled.to_le_bytes());
        }
        SampleFormat::Float32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
    }
}

/// Write interleaved channels as a WAV file.
pub fn write(
    path: impl AsRef<Path>,
    sample_rate_hz: u32,
    channels: &[&[f64]],
    format: SampleFormat,
) -> Result<()> {
    let path = path.as_ref();
    let n_ch = channels.len();
    if n_ch == 0 {
        return Err(Error::wav(path, "no channels to write"));
    }
    let frames = channels[0].len();
    if channels.iter().any(|c| c.len() != frames) {
        return Err(Error::wav(path, "channel length mismatch"));
    }
    let (format_tag, bits) = match format {
        SampleFormat::Int16 => (1u16, 16u16),
        SampleFormat::Float32 => (3u16, 32u16),
    };
    let bytes_per_sample = bits as u32 / 8;
    let block_align = bytes_per_sample * n_ch as u32;
    let data_len = (frames as u32) * block_align;
    // fmt(24) + fact(12, float only) + data header(8)
    let fact_len: u32 = if format == SampleFormat::Float32 {
        12
    } else {
        0
    };
    let riff_len = 4 + 24 + fact_len + 8 + data_len;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(60);
    header.extend_from_slice(b"RIFF");
    header.extend_from_slice(&riff_len.to_le_bytes());
    header.extend_from_slice(b"WAVE");
    header.extend_from_slice(b"fmt ");
    header.extend_from_slice(&16u32.to_le_bytes());
    header.extend_from_slice(&format_tag.to_le_bytes());
    header.extend_from_slice(&(n_ch as u16).to_le_bytes());
    header.extend_from_slice(&sample_rate_hz.to_le_bytes());
    header.extend_from_slice(&(sample_rate_hz * block_align).to_le_bytes());
    header.extend_from_slice(&(block_align as u16).to_le_bytes());
    header.extend_from_slice(&bits.to_le_bytes());
    if format == SampleFormat::Float32 {
        header.extend_from_slice(b"fact");
        header.extend_from_slice(&4u32.to_le_bytes());
        header.extend_from_slice(&(frames as u32).to_le_bytes());
    }
    header.extend_from_slice(b"data");
    header.extend_from_slice(&data_len.to_le_bytes());
    w.write_all(&header).map_err(|e| Error::io(path, e))?;

    let mut body = Vec::with_capacity(data_len as usize);
    for frame in 0..frames {
        for ch in channels {
            encode_sample(ch[frame], format, &mut body);
        }
    }
    w.write_all(&body).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Convenience wrapper for mono buffers.
pub fn write_mono(
    path: impl AsRef<Path>,
    sample_rate_hz: u32,
    samples: &[f64],
    format: SampleFormat,
) -> Result<()> {
    write(path, sample_rate_hz, &[samples], format)
}
