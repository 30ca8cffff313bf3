//! Demo verification service over length-prefixed TCP frames.
//!
//! Each frame is a 4-byte big-endian length followed by that many bytes. A
//! session is one connection: the client sends the wake message (JSON), the
//! microphone WAV bytes, then the accelerometer CSV bytes; the server replies
//! with one verdict JSON frame, or an `{"error": ...}` frame, and closes.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::config::VerifyConfig;
use crate::preprocess::WakeMessage;
use crate::signal::{decode_wav, parse_accel_csv};
use crate::similarity::{verdict_json, verify};

/// Frames larger than this are refused.
pub const MAX_FRAME_BYTES: u32 = 64 << 20;

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&n| n <= MAX_FRAME_BYTES)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes exceeds limit")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub error: String,
}

/// Reads one session from `stream` and produces the reply payload.
fn session_reply<S: Read>(stream: &mut S, config: &VerifyConfig) -> Result<String, String> {
    let wake = read_frame(stream).map_err(|e| format!("reading wake frame: {e}"))?;
    let wake = std::str::from_utf8(&wake).map_err(|e| format!("wake frame: {e}"))?;
    WakeMessage::parse(wake).map_err(|e| e.to_string())?;
    let wav = read_frame(stream).map_err(|e| format!("reading audio frame: {e}"))?;
    let csv = read_frame(stream).map_err(|e| format!("reading accelerometer frame: {e}"))?;
    let mic = decode_wav(&wav).map_err(|e| e.to_string())?;
    let csv = std::str::from_utf8(&csv).map_err(|e| format!("accelerometer frame: {e}"))?;
    let accel = parse_accel_csv(csv).map_err(|e| e.to_string())?;
    let report = verify(&mic, &accel, config).map_err(|e| e.to_string())?;
    Ok(verdict_json(&report, config))
}

/// Serves one connection to completion.
pub fn handle_connection(mut stream: TcpStream, config: &VerifyConfig) -> io::Result<()> {
    let reply = match session_reply(&mut stream, config) {
        Ok(verdict) => verdict,
        Err(error) => serde_json::to_string(&ErrorFrame { error }).expect("error frame serializes"),
    };
    write_frame(&mut stream, reply.as_bytes())?;
    stream.shutdown(std::net::Shutdown::Both)
}

/// Accepts connections forever, one thread per connection.
pub fn serve(listener: TcpListener, config: Arc<VerifyConfig>) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let config = Arc::clone(&config);
        thread::spawn(move || {
            let _ = handle_connection(stream, &config);
        });
    }
    Ok(())
}

/// Client side of one session; returns the reply payload as text.
pub fn request_verdict(addr: impl ToSocketAddrs, wake: &WakeMessage, wav: &[u8], csv: &[u8]) -> io::Result<String> {
    let mut stream = TcpStream::connect(addr)?;
    write_frame(&mut stream, wake.to_line().as_bytes())?;
    write_frame(&mut stream, wav)?;
    write_frame(&mut stream, csv)?;
    let reply = read_frame(&mut stream)?;
    String::from_utf8(reply).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"hello").unwrap();
        write_frame(&mut buf, b"").unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 5]);
        let mut r = &buf[..];
        assert_eq!(read_frame(&mut r).unwrap(), b"hello");
        assert_eq!(read_frame(&mut r).unwrap(), b"");
        assert!(read_frame(&mut r).is_err());
    }

    #[test]
    fn oversized_frame_refused() {
        let bytes = (MAX_FRAME_BYTES + 1).to_be_bytes();
        assert!(read_frame(&mut &bytes[..]).is_err());
    }

    #[test]
    fn malformed_wake_is_an_error_reply() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"{\"type\":\"hello\"}").unwrap();
        let err = session_reply(&mut &buf[..], &VerifyConfig::default()).unwrap_err();
        assert!(err.contains("wake"), "{err}");
    }
}
