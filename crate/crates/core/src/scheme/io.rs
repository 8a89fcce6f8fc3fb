//! Path export formats: a CSV layout for single paths and a compact
//! versioned binary batch format.  Both round-trip losslessly (CSV floats
//! use shortest round-trip formatting; the binary format stores raw bits).

use super::DiscretePath;
use crate::error::CoreError;
use crate::Result;
use std::io::{BufRead, Read, Write};

const CSV_HEADER_PREFIX: &str = "# dynkin-path v1";
const BINARY_MAGIC: &[u8; 4] = b"DGPB";
const BINARY_VERSION: u16 = 1;

/// Writes one path as CSV: a version comment line, a column header, then
/// one row per grid point with columns `step, time, s0, ..., s{d-1}`.
pub fn write_path_csv<W: Write>(path: &DiscretePath, mut w: W) -> Result<()> {
    let d = path.dim();
    writeln!(w, "{CSV_HEADER_PREFIX}, dim={d}, n_steps={}", path.n_steps())?;
    let cols: Vec<String> = (0..d).map(|i| format!("s{i}")).collect();
    writeln!(w, "step,time,{}", cols.join(","))?;
    for (n, t) in path.times().enumerate() {
        let state: Vec<String> = path.state(n).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{n},{t},{}", state.join(","))?;
    }
    Ok(())
}

/// Reads a path written by [`write_path_csv`].  The innovation record is
/// not part of the CSV format.
pub fn read_path_csv<R: BufRead>(r: R) -> Result<DiscretePath> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::PathIo("empty file".into()))??;
    if !header.starts_with(CSV_HEADER_PREFIX) {
        return Err(CoreError::PathIo(format!("unrecognized header {header:?}")));
    }
    let mut dim = 0usize;
    let mut n_steps = 0usize;
    for part in header.split(',').map(str::trim) {
        if let Some(v) = part.strip_prefix("dim=") {
            dim = v.parse().map_err(|_| CoreError::PathIo("bad dim".into()))?;
        }
        if let Some(v) = part.strip_prefix("n_steps=") {
            n_steps = v.parse().map_err(|_| CoreError::PathIo("bad n_steps".into()))?;
        }
    }
    if dim == 0 {
        return Err(CoreError::PathIo("missing dim".into()));
    }
    lines.next(); // column header
    let mut states = Vec::with_capacity((n_steps + 1) * dim);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(CoreError::PathIo(format!("bad row {line:?}")));
        }
        for f in &fields[2..] {
            let v: f64 = f
                .parse()
                .map_err(|_| CoreError::PathIo(format!("bad float {f:?}")))?;
            states.push(v);
        }
    }
    DiscretePath::from_parts(dim, n_steps, states, None)
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Serializes a batch of paths sharing one shape.  Layout: magic, version,
/// dim, n_steps, path count, flags (bit 0: innovations present), then per
/// path the states and, when flagged, the innovations, all little-endian
/// f64 bits.
pub fn write_batch_binary<W: Write>(paths: &[DiscretePath], mut w: W) -> Result<()> {
    let first = paths
        .first()
        .ok_or_else(|| CoreError::PathIo("empty batch".into()))?;
    let dim = first.dim();
    let n_steps = first.n_steps();
    let with_innovations = paths.iter().all(|p| p.innovations_flat().is_some());
    for p in paths {
        if p.dim() != dim || p.n_steps() != n_steps {
            return Err(CoreError::PathIo("batch paths must share one shape".into()));
        }
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(BINARY_MAGIC);
    put_u16(&mut buf, BINARY_VERSION);
    put_u16(&mut buf, dim as u16);
    put_u32(&mut buf, n_steps as u32);
    put_u32(&mut buf, paths.len() as u32);
    buf.push(u8::from(with_innovations));
    buf.extend_from_slice(&[0u8; 3]);
    for p in paths {
        for v in p.states_flat() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        if with_innovations {
            for v in p.innovations_flat().unwrap() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_batch_binary<R: Read>(mut r: R) -> Result<Vec<DiscretePath>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 17 || &buf[0..4] != BINARY_MAGIC {
        return Err(CoreError::PathIo("bad magic".into()));
    }
    let version = u16::from_le_bytes([buf[4], buf[5]]);
    if version != BINARY_VERSION {
        return Err(CoreError::PathIo(format!("unsupported version {version}")));
    }
    let dim = u16::from_le_bytes([buf[6], buf[7]]) as usize;
    let n_steps = u32::from_le_bytes([buf[8], buf[9], buf[10], buf[11]]) as usize;
    let count = u32::from_le_bytes([buf[12], buf[13], buf[14], buf[15]]) as usize;
    let with_innovations = buf[16] != 0;
    let mut off = 20;
    let state_len = (n_steps + 1) * dim;
    let inn_len = if with_innovations { n_steps * dim } else { 0 };
    let per_path = (state_len + inn_len) * 8;
    if buf.len() != 20 + count * per_path {
        return Err(CoreError::PathIo("truncated batch".into()));
    }
    let read_f64s = |buf: &[u8], off: usize, len: usize| -> Vec<f64> {
        (0..len)
            .map(|i| {
                let s = off + i * 8;
                f64::from_le_bytes(buf[s..s + 8].try_into().unwrap())
            })
            .collect()
    };
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        let states = read_f64s(&buf, off, state_len);
        off += state_len * 8;
        let innovations = if with_innovations {
            let inn = read_f64s(&buf, off, inn_len);
            off += inn_len * 8;
            Some(inn)
        } else {
            None
        };
        paths.push(DiscretePath::from_parts(dim, n_steps, states, innovations)?);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_preset, InnovationLaw};
    use crate::scheme::simulate_path;

    #[test]
    fn csv_round_trip_is_lossless() {
        let m = model_preset("tanh-1d").unwrap();
        let law = InnovationLaw::gaussian(1).unwrap();
        let p = simulate_path(&m, &law, 37, 123, 0).unwrap();
        let mut out = Vec::new();
        write_path_csv(&p, &mut out).unwrap();
        let q = read_path_csv(out.as_slice()).unwrap();
        assert_eq!(p.states_flat(), q.states_flat());
    }

    #[test]
    fn binary_round_trip_preserves_innovations() {
        let m = model_preset("identity-2d").unwrap();
        let law = InnovationLaw::rademacher(2).unwrap();
        let paths: Vec<_> = (0..5)
            .map(|s| simulate_path(&m, &law, 12, 9, s).unwrap())
            .collect();
        let mut out = Vec::new();
        write_batch_binary(&paths, &mut out).unwrap();
        let back = read_batch_binary(out.as_slice()).unwrap();
        assert_eq!(back.len(), paths.len());
        for (a, b) in paths.iter().zip(&back) {
            assert_eq!(a.states_flat(), b.states_flat());
            assert_eq!(a.innovations_flat(), b.innovations_flat());
        }
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let r = read_batch_binary(&b"NOPE\x01\x00"[..]);
        assert!(r.is_err());
    }
}
