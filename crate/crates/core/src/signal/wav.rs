use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{Signal, SignalError};

const MIN_RATE_HZ: u32 = 8_000;
const MAX_RATE_HZ: u32 = 96_000;

/// Sample encoding used when writing WAV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    #[default]
    Pcm16,
    Float32,
}

/// Reads a mono PCM16 or float32 WAV file, scaling samples to ±1.0.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Signal, SignalError> {
    let file = std::fs::File::open(path)?;
    read_wav(std::io::BufReader::new(file))
}

/// Same as [`load_wav`] for an in-memory file image.
pub fn decode_wav(bytes: &[u8]) -> Result<Signal, SignalError> {
    read_wav(Cursor::new(bytes))
}

fn read_wav<R: Read>(reader: R) -> Result<Signal, SignalError> {
    let mut reader = WavReader::new(reader).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(SignalError::UnsupportedFormat(format!("{} channels, expected mono", spec.channels)));
    }
    if !(MIN_RATE_HZ..=MAX_RATE_HZ).contains(&spec.sample_rate) {
        return Err(SignalError::UnsupportedFormat(format!("sample rate {} Hz", spec.sample_rate)));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => {
            reader.samples::<i16>().map(|s| s.map(|v| f64::from(v) / 32768.0)).collect::<Result<_, _>>().map_err(map_hound)?
        }
        (SampleFormat::Float, 32) => reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>().map_err(map_hound)?,
        (fmt, bits) => {
            return Err(SignalError::UnsupportedFormat(format!("{bits}-bit {fmt:?} samples")));
        }
    };
    Signal::new(samples, f64::from(spec.sample_rate)).map_err(|e| match e {
        SignalError::NonFinite(i) => SignalError::UnsupportedFormat(format!("non-finite sample at {i}")),
        other => other,
    })
}

fn map_hound(e: hound::Error) -> SignalError {
    match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => SignalError::CorruptHeader("truncated file".into()),
        hound::Error::IoError(io) => SignalError::Io(io),
        hound::Error::FormatError(msg) => SignalError::CorruptHeader(msg.into()),
        hound::Error::Unsupported => SignalError::UnsupportedFormat("compressed or extensible format".into()),
        other => SignalError::UnsupportedFormat(other.to_string()),
    }
}

/// Writes a mono WAV file. PCM16 clamps to the representable range.
pub fn write_wav(path: impl AsRef<Path>, sig: &Signal, encoding: WavEncoding) -> Result<(), SignalError> {
    let file = std::fs::File::create(path)?;
    write_to(std::io::BufWriter::new(file), sig, encoding)
}

/// In-memory counterpart of [`write_wav`].
pub fn encode_wav(sig: &Signal, encoding: WavEncoding) -> Result<Vec<u8>, SignalError> {
    let mut cursor = Cursor::new(Vec::new());
    write_to(&mut cursor, sig, encoding)?;
    Ok(cursor.into_inner())
}

fn write_to<W: Write + Seek>(out: W, sig: &Signal, encoding: WavEncoding) -> Result<(), SignalError> {
    let rate = sig.sample_rate_hz().round();
    if rate < 1.0 || rate > f64::from(u32::MAX) {
        return Err(SignalError::InvalidRate(sig.sample_rate_hz()));
    }
    let (bits, fmt) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec { channels: 1, sample_rate: rate as u32, bits_per_sample: bits, sample_format: fmt };
    let mut writer = WavWriter::new(out, spec).map_err(map_hound)?;
    for &s in sig.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q).map_err(map_hound)?;
            }
            WavEncoding::Float32 => writer.write_sample(s as f32).map_err(map_hound)?,
        }
    }
    writer.finalize().map_err(map_hound)
}
