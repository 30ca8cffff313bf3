use std::fmt::Write as _;
use std::path::Path;

use super::{AccelTrace, SignalError};

const HEADER: &str = "t,x,y,z";

/// Reads a `t,x,y,z` accelerometer export.
pub fn load_accel_csv(path: impl AsRef<Path>) -> Result<AccelTrace, SignalError> {
    let text = std::fs::read_to_string(path)?;
    parse_accel_csv(&text)
}

/// Parses CSV text with header `t,x,y,z`. Line numbers in errors are 1-based
/// and count the header.
pub fn parse_accel_csv(text: &str) -> Result<AccelTrace, SignalError> {
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r').trim() == HEADER => {}
        Some((_, h)) if h.trim().is_empty() => return Err(SignalError::EmptyTrace),
        Some((_, h)) => return Err(SignalError::MalformedRow { line: 1, reason: format!("expected header `{HEADER}`, got `{h}`") }),
        None => return Err(SignalError::EmptyTrace),
    }

    let (mut t, mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(SignalError::MalformedRow { line: line_no, reason: format!("{} fields, expected 4", fields.len()) });
        }
        let mut vals = [0f64; 4];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SignalError::MalformedRow { line: line_no, reason: format!("bad number `{f}`") })?;
        }
        if let Some(&prev) = t.last() {
            if vals[0] < prev {
                return Err(SignalError::NonMonotonicTime { line: line_no });
            }
        }
        t.push(vals[0]);
        x.push(vals[1]);
        y.push(vals[2]);
        z.push(vals[3]);
    }
    if t.is_empty() {
        return Err(SignalError::EmptyTrace);
    }
    AccelTrace::new(t, x, y, z)
}

/// Renders a trace using shortest round-trip float formatting, so a
/// subsequent parse reproduces every value bit-exactly.
pub fn format_accel_csv(trace: &AccelTrace) -> String {
    let mut out = String::with_capacity(32 * trace.len() + 8);
    out.push_str(HEADER);
    out.push('\n');
    for i in 0..trace.len() {
        let _ = writeln!(out, "{},{},{},{}", trace.t[i], trace.x[i], trace.y[i], trace.z[i]);
    }
    out
}

pub fn write_accel_csv(path: impl AsRef<Path>, trace: &AccelTrace) -> Result<(), SignalError> {
    std::fs::write(path, format_accel_csv(trace))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn three_rows_at_5ms() {
        let tr = parse_accel_csv("t,x,y,z\n0,0.1,0.2,9.8\n0.005,0.1,0.2,9.8\n0.01,0.1,0.2,9.8\n").unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.nominal_rate_hz(), 200.0);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(parse_accel_csv("t,x,y,z\n"), Err(SignalError::EmptyTrace)));
        assert!(matches!(parse_accel_csv(""), Err(SignalError::EmptyTrace)));
    }

    #[test]
    fn malformed_rows_report_line() {
        let err = parse_accel_csv("t,x,y,z\n0,1,2,3\n0.005,1,2\n").unwrap_err();
        assert!(matches!(err, SignalError::MalformedRow { line: 3, .. }), "{err:?}");
        let err = parse_accel_csv("t,x,y,z\n0,1,2,3\n0.005,1,abc,3\n").unwrap_err();
        assert!(matches!(err, SignalError::MalformedRow { line: 3, .. }));
        let err = parse_accel_csv("time,ax,ay,az\n0,1,2,3\n").unwrap_err();
        assert!(matches!(err, SignalError::MalformedRow { line: 1, .. }));
    }

    #[test]
    fn non_monotonic_time() {
        let err = parse_accel_csv("t,x,y,z\n0,1,2,3\n0.01,1,2,3\n0.005,1,2,3\n").unwrap_err();
        assert!(matches!(err, SignalError::NonMonotonicTime { line: 4 }));
    }

    #[test]
    fn jittered_timestamps_still_give_200hz() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut text = String::from("t,x,y,z\n");
        for k in 0..500 {
            let t = (k as f64 + rng.random_range(-0.02..0.02)) * 0.005;
            text.push_str(&format!("{t},0,0,0\n"));
        }
        assert_eq!(parse_accel_csv(&text).unwrap().nominal_rate_hz(), 200.0);
    }

    #[test]
    fn crlf_is_tolerated() {
        let tr = parse_accel_csv("t,x,y,z\r\n0,1,2,3\r\n0.005,1,2,3\r\n").unwrap();
        assert_eq!(tr.x(), &[1.0, 1.0]);
    }
}
