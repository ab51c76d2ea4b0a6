//! Plain-text B-scan files.
//!
//! ```text
//! #sdi-bscan v1
//! n_positions <int>
//! n_freqs <int>
//! f_start_hz <decimal>
//! f_step_hz <decimal>
//! x_start_m <decimal>
//! x_step_m <decimal>
//! data
//! <pos_idx> <freq_idx> <re> <im>
//! ```
//!
//! One data row per sample, indices 0-based. Decimals are written with 17
//! significant digits so that a save/load cycle is bit-exact.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;

use crate::error::{Error, Result};
use crate::scan::{BScan, FrequencySweep, ScanLine, C64};

pub const MAGIC: &str = "#sdi-bscan v1";

const HEADER_KEYS: [&str; 6] = [
    "n_positions",
    "n_freqs",
    "f_start_hz",
    "f_step_hz",
    "x_start_m",
    "x_step_m",
];

/// Formats `v` with 17 significant digits and a signed two-digit (or wider) exponent,
/// e.g. `1.2000000000000000e+09`.
pub fn format_decimal(v: f64) -> String {
    let s = format!("{v:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn write_bscan<W: Write>(bscan: &BScan, out: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    let sweep = bscan.sweep();
    let line = bscan.scanline();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "n_positions {}", bscan.n_positions())?;
    writeln!(w, "n_freqs {}", bscan.n_freqs())?;
    writeln!(w, "f_start_hz {}", format_decimal(sweep.f_start()))?;
    writeln!(w, "f_step_hz {}", format_decimal(sweep.f_step()))?;
    writeln!(w, "x_start_m {}", format_decimal(line.x_start()))?;
    writeln!(w, "x_step_m {}", format_decimal(line.x_step()))?;
    writeln!(w, "data")?;
    for s in 0..bscan.n_positions() {
        for f in 0..bscan.n_freqs() {
            let v = bscan.get(s, f);
            writeln!(
                w,
                "{s} {f} {} {}",
                format_decimal(v.re),
                format_decimal(v.im)
            )?;
        }
    }
    w.flush()
}

pub fn save_bscan(bscan: &BScan, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_bscan(bscan, file).map_err(|e| Error::io(path, e))
}

pub fn load_bscan(path: impl AsRef<Path>) -> Result<BScan> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_bscan(file)
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

pub fn read_bscan<R: Read>(input: R) -> Result<BScan> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let mut next_line = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(text))) => Ok((n, text)),
            Some((n, Err(e))) => Err(format_err(n, format!("unreadable line: {e}"))),
            None => Err(format_err(0, format!("unexpected end of file, expected {expect}"))),
        }
    };

    let (n, magic) = next_line(MAGIC)?;
    if magic.trim_end() != MAGIC {
        return Err(format_err(n, format!("expected '{MAGIC}'")));
    }

    let mut header = [0.0f64; 6];
    let mut counts = [0usize; 2];
    for (k, key) in HEADER_KEYS.iter().enumerate() {
        let (n, text) = next_line(key)?;
        let mut parts = text.split_whitespace();
        if parts.next() != Some(*key) {
            return Err(format_err(n, format!("expected key '{key}'")));
        }
        let value = parts
            .next()
            .ok_or_else(|| format_err(n, format!("missing value for '{key}'")))?;
        if parts.next().is_some() {
            return Err(format_err(n, "trailing tokens"));
        }
        if k < 2 {
            counts[k] = value
                .parse()
                .map_err(|_| format_err(n, format!("'{value}' is not a count")))?;
        } else {
            header[k] = parse_decimal(value).ok_or_else(|| {
                format_err(n, format!("'{value}' is not a decimal number"))
            })?;
        }
    }
    let (ns, nf) = (counts[0], counts[1]);
    let (n_hdr, text) = next_line("data")?;
    if text.trim_end() != "data" {
        return Err(format_err(n_hdr, "expected 'data'"));
    }

    let sweep = FrequencySweep::new(header[2], header[3], nf)
        .map_err(|e| format_err(n_hdr, format!("invalid sweep: {e}")))?;
    let line = ScanLine::new(header[4], header[5], ns)
        .map_err(|e| format_err(n_hdr, format!("invalid scan line: {e}")))?;

    let mut data = Mat::<C64>::zeros(ns, nf);
    let mut seen = vec![false; ns * nf];
    let mut rows = 0usize;
    for (n, text) in lines {
        let text = text.map_err(|e| format_err(n, format!("unreadable line: {e}")))?;
        if text.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = text.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(format_err(n, format!("expected 4 fields, found {}", tok.len())));
        }
        let s: usize = tok[0]
            .parse()
            .map_err(|_| format_err(n, "bad position index"))?;
        let f: usize = tok[1]
            .parse()
            .map_err(|_| format_err(n, "bad frequency index"))?;
        let re = parse_decimal(tok[2]).ok_or_else(|| format_err(n, "bad real part"))?;
        let im = parse_decimal(tok[3]).ok_or_else(|| format_err(n, "bad imaginary part"))?;
        if s >= ns || f >= nf {
            return Err(Error::Dimension(format!(
                "line {n}: sample ({s},{f}) outside declared {ns}x{nf}"
            )));
        }
        if std::mem::replace(&mut seen[s * nf + f], true) {
            return Err(format_err(n, format!("duplicate sample ({s},{f})")));
        }
        data[(s, f)] = C64::new(re, im);
        rows += 1;
    }
    if rows != ns * nf {
        return Err(Error::Dimension(format!(
            "found {rows} data rows, header declares {ns}x{nf} = {}",
            ns * nf
        )));
    }
    BScan::new(sweep, line, data)
}

fn parse_decimal(token: &str) -> Option<f64> {
    // Rust's parser also accepts "inf"/"nan", which the format does not.
    if !token
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
    {
        return None;
    }
    token.parse::<f64>().ok().filter(|v| v.is_finite())
}
