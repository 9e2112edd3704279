//! Little-endian framing shared by the dataset and checkpoint files:
//! a 4-byte magic, a `u16` version, a payload, and a CRC32 of everything
//! before the trailer.

use crate::error::{Error, Result};

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: u16) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u16(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks magic and version and positions the reader after them.
    pub fn open(data: &'a [u8], magic: &[u8; 4], version: u16) -> Result<Self> {
        let mut r = Self { data, pos: 0 };
        let found: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        if &found != magic {
            return Err(Error::BadMagic {
                expected: *magic,
                found,
            });
        }
        let v = r.u16()?;
        if v != version {
            return Err(Error::Version {
                found: v,
                supported: version,
            });
        }
        Ok(r)
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n,
                available: self.remaining(),
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Fails with a truncation error unless `count` items of `size` bytes
    /// (plus the CRC trailer) are still available.
    pub fn ensure(&self, count: u64, size: usize) -> Result<usize> {
        let needed = usize::try_from(count)
            .ok()
            .and_then(|c| c.checked_mul(size))
            .and_then(|b| b.checked_add(4));
        match needed {
            Some(n) if n <= self.remaining() => Ok(count as usize),
            _ => Err(Error::Truncated {
                offset: self.pos,
                needed: needed.unwrap_or(usize::MAX),
                available: self.remaining(),
            }),
        }
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        self.ensure(n as u64, 8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    /// Reads the CRC trailer, checks it and rejects trailing bytes.
    pub fn finish(mut self) -> Result<()> {
        let body_end = self.pos;
        let stored = self.u32()?;
        let computed = crc32fast::hash(&self.data[..body_end]);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        if self.remaining() != 0 {
            return Err(Error::Malformed(format!(
                "{} unexpected bytes after trailer",
                self.remaining()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let mut w = Writer::new(b"TEST", 3);
        w.u8(7);
        w.u32(0xdead_beef);
        w.f64(-1.5);
        let bytes = w.finish();

        let mut r = Reader::open(&bytes, b"TEST", 3).unwrap();
        assert_eq!(r.u8().unwrap(), 7);
        assert_eq!(r.u32().unwrap(), 0xdead_beef);
        assert_eq!(r.f64().unwrap(), -1.5);
        r.finish().unwrap();

        assert!(matches!(
            Reader::open(&bytes, b"NOPE", 3),
            Err(Error::BadMagic { .. })
        ));
        assert!(matches!(
            Reader::open(&bytes, b"TEST", 4),
            Err(Error::Version {
                found: 3,
                supported: 4
            })
        ));
        assert!(matches!(
            Reader::open(&bytes[..3], b"TEST", 3),
            Err(Error::Truncated { .. })
        ));

        let mut bad = bytes.clone();
        bad[6] ^= 1;
        let mut r = Reader::open(&bad, b"TEST", 3).unwrap();
        r.u8().unwrap();
        r.u32().unwrap();
        r.f64().unwrap();
        assert!(matches!(r.finish(), Err(Error::Checksum { .. })));
    }

    #[test]
    fn ensure_rejects_overflowing_counts() {
        let bytes = Writer::new(b"TEST", 1).finish();
        let r = Reader::open(&bytes, b"TEST", 1).unwrap();
        assert!(r.ensure(u64::MAX, 16).is_err());
        assert!(r.ensure(0, 16).is_ok());
    }
}
