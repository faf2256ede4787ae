//! Payload encodings shared by the classic and swept engines.
//!
//! All scalars are little-endian IEEE-754 doubles so fields survive any
//! transport bit for bit.
//!
//! Halo frame: `tag=1 u8 | level u64 | arity u16 | arity * f64`.
//!
//! Leading edge: `tag=2 u8 | side u8 | base_level u64 | levels u32 |
//! levels * arity u16 | values`, values in ascending level, then left to
//! right within a level.

use thiserror::Error;

pub(crate) const HALO_TAG: u8 = 1;
pub(crate) const EDGE_TAG: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("unexpected message tag {0}")]
    BadTag(u8),
    #[error("truncated message")]
    Truncated,
    #[error("trailing bytes after message")]
    Trailing,
    #[error("invalid side byte {0}")]
    BadSide(u8),
    #[error("expected level {expected}, got {got}")]
    LevelMismatch { expected: u64, got: u64 },
    #[error("arity mismatch at level {level}: expected {expected}, got {got}")]
    ArityMismatch {
        level: u64,
        expected: usize,
        got: usize,
    },
    #[error("edges must come from opposite sides")]
    SameSide,
    #[error("edge spans differ: {kept} levels kept, {received} received")]
    SpanMismatch { kept: usize, received: usize },
}

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            buf: Vec::with_capacity(n),
        }
    }
    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub(crate) fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    pub(crate) fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        if self.bytes.len() < n {
            return Err(ProtocolError::Truncated);
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }
    pub(crate) fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }
    pub(crate) fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    pub(crate) fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub(crate) fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub(crate) fn f64s_into(&mut self, count: usize, out: &mut Vec<f64>) -> Result<(), ProtocolError> {
        let raw = self.take(count.checked_mul(8).ok_or(ProtocolError::Truncated)?)?;
        out.extend(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
        Ok(())
    }
    pub(crate) fn finish(self) -> Result<(), ProtocolError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::Trailing)
        }
    }
}

pub(crate) fn encode_halo(level: u64, values: &[f64]) -> Vec<u8> {
    let mut w = Writer::with_capacity(11 + 8 * values.len());
    w.u8(HALO_TAG);
    w.u64(level);
    w.u16(values.len() as u16);
    w.f64s(values);
    w.finish()
}

/// Decodes a halo frame, checking it is at `level` with `arity` values.
pub(crate) fn decode_halo(
    bytes: &[u8],
    level: u64,
    arity: usize,
    out: &mut Vec<f64>,
) -> Result<(), ProtocolError> {
    let mut r = Reader::new(bytes);
    let tag = r.u8()?;
    if tag != HALO_TAG {
        return Err(ProtocolError::BadTag(tag));
    }
    let got = r.u64()?;
    if got != level {
        return Err(ProtocolError::LevelMismatch {
            expected: level,
            got,
        });
    }
    let got_arity = r.u16()? as usize;
    if got_arity != arity {
        return Err(ProtocolError::ArityMismatch {
            level,
            expected: arity,
            got: got_arity,
        });
    }
    r.f64s_into(arity, out)?;
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halo_round_trip_is_bit_exact() {
        let vals = [1.0, -0.0, f64::MIN_POSITIVE, 1.0 / 3.0];
        let bytes = encode_halo(17, &vals);
        let mut out = Vec::new();
        decode_halo(&bytes, 17, 4, &mut out).unwrap();
        let bits: Vec<u64> = out.iter().map(|v| v.to_bits()).collect();
        let want: Vec<u64> = vals.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, want);
    }

    #[test]
    fn halo_checks_level_arity_and_length() {
        let bytes = encode_halo(3, &[1.0, 2.0]);
        let mut out = Vec::new();
        assert_eq!(
            decode_halo(&bytes, 4, 2, &mut out),
            Err(ProtocolError::LevelMismatch {
                expected: 4,
                got: 3
            })
        );
        assert!(matches!(
            decode_halo(&bytes, 3, 1, &mut out),
            Err(ProtocolError::ArityMismatch { .. })
        ));
        assert_eq!(
            decode_halo(&bytes[..bytes.len() - 1], 3, 2, &mut out),
            Err(ProtocolError::Truncated)
        );
        assert_eq!(decode_halo(&[9], 3, 2, &mut out), Err(ProtocolError::BadTag(9)));
    }
}
