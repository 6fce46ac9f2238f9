//! `MMCT` binary trace format.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "MMCT"
//!      4     4  version (u32 = 1)
//!      8    16  T, B, K, M (u32 each)
//!     24     4  sample period in microseconds (u32)
//!     28     8  carrier wavelength in meters (f64)
//!     36     …  T·B·K·M entries of (re f64, im f64), t-major then b, k, m
//! ```
//!
//! All integers and floats are little-endian.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use super::{ChannelTrace, TraceDims};

pub const MAGIC: [u8; 4] = *b"MMCT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;
const ENTRY_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}, expected \"MMCT\"")]
    BadMagic([u8; 4]),
    #[error("unsupported trace version {found}, expected {VERSION}")]
    VersionMismatch { found: u32 },
    #[error("truncated trace: expected {expected} bytes, got {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("non-finite value in entry {index}")]
    NonFinite { index: usize },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_trace<W: Write>(trace: &ChannelTrace, mut sink: W) -> Result<(), FormatError> {
    let d = trace.dims();
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    for n in [d.snapshots, d.blocks, d.users, d.antennas] {
        let n = u32::try_from(n)
            .map_err(|_| FormatError::InvalidHeader(format!("dimension {n} exceeds u32")))?;
        header.extend_from_slice(&n.to_le_bytes());
    }
    header.extend_from_slice(&trace.sample_period_us().to_le_bytes());
    header.extend_from_slice(&trace.wavelength().to_le_bytes());
    sink.write_all(&header)?;

    let mut payload = Vec::with_capacity(trace.as_slice().len() * ENTRY_LEN);
    for z in trace.as_slice() {
        payload.extend_from_slice(&z.re.to_le_bytes());
        payload.extend_from_slice(&z.im.to_le_bytes());
    }
    sink.write_all(&payload)?;
    sink.flush()?;
    Ok(())
}

/// Reads exactly one trace from `source`; trailing bytes are left unread.
pub fn read_trace<R: Read>(source: R) -> Result<ChannelTrace, FormatError> {
    let mut source = source;
    let mut header = Vec::with_capacity(HEADER_LEN);
    (&mut source)
        .take(HEADER_LEN as u64)
        .read_to_end(&mut header)?;
    if header.len() >= 4 && header[0..4] != MAGIC {
        return Err(FormatError::BadMagic(header[0..4].try_into().unwrap()));
    }
    if header.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN as u64,
            actual: header.len() as u64,
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(FormatError::VersionMismatch { found: version });
    }
    let dims = TraceDims {
        snapshots: u32_at(8) as usize,
        blocks: u32_at(12) as usize,
        users: u32_at(16) as usize,
        antennas: u32_at(20) as usize,
    };
    let sample_period_us = u32_at(24);
    let wavelength = f64::from_le_bytes(header[28..36].try_into().unwrap());
    if dims.is_empty() {
        return Err(FormatError::InvalidHeader(format!(
            "zero dimension in {dims:?}"
        )));
    }
    if sample_period_us == 0 {
        return Err(FormatError::InvalidHeader("sample period is zero".into()));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(FormatError::InvalidHeader(format!(
            "wavelength {wavelength} is not positive"
        )));
    }

    let entries = dims.len();
    let payload_len = (entries as u64)
        .checked_mul(ENTRY_LEN as u64)
        .ok_or_else(|| FormatError::InvalidHeader("payload size overflows".into()))?;
    let mut payload = Vec::new();
    source.take(payload_len).read_to_end(&mut payload)?;
    if (payload.len() as u64) < payload_len {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN as u64 + payload_len,
            actual: (HEADER_LEN + payload.len()) as u64,
        });
    }

    let mut data = Vec::with_capacity(entries);
    for (index, chunk) in payload.chunks_exact(ENTRY_LEN).enumerate() {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        if !re.is_finite() || !im.is_finite() {
            return Err(FormatError::NonFinite { index });
        }
        data.push(Complex64::new(re, im));
    }
    ChannelTrace::new(dims, sample_period_us, wavelength, data)
        .map_err(|e| FormatError::InvalidHeader(e.to_string()))
}
