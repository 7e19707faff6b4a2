//! Byte containers for oracle tables, input vectors, and encoding blobs.
//!
//! Every file opens with the 5-byte magic `LMPC1` and a 1-byte section id:
//!
//! * `0x01` oracle table: u32 LE `n`, then bit-packed answers, entry `i` at
//!   bit offset `i*n`, most-significant bit first within each entry
//! * `0x02` input vector: u32 LE `v`, u32 LE `u`, then bit-packed blocks
//! * `0x03` encoding blob: scheme byte, u16 LE section count, then per
//!   section: id byte, u32 LE payload bits, u32 LE header bits, the bits
//!   padded to a byte boundary

use std::fs;
use std::path::Path;

use crate::bits::{mask, BitString};
use crate::chain::InputVector;
use crate::compression::{EncodingBlob, Scheme, Section};
use crate::Error;

pub const MAGIC: &[u8; 5] = b"LMPC1";
pub const FILE_TABLE: u8 = 0x01;
pub const FILE_INPUT: u8 = 0x02;
pub const FILE_BLOB: u8 = 0x03;

struct ByteReader<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> ByteReader<'a> {
    fn new(data: &'a [u8]) -> ByteReader<'a> {
        ByteReader { data, at: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8], Error> {
        if self.data.len() - self.at < len {
            return Err(Error::Format("truncated file".into()));
        }
        let s = &self.data[self.at..self.at + len];
        self.at += len;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, Error> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, Error> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn done(&self) -> Result<(), Error> {
        if self.at != self.data.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.data.len() - self.at
            )));
        }
        Ok(())
    }
}

fn expect_header(rd: &mut ByteReader, id: u8) -> Result<(), Error> {
    if rd.take(MAGIC.len())? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let got = rd.u8()?;
    if got != id {
        return Err(Error::Format(format!(
            "expected section {id:#04x}, found {got:#04x}"
        )));
    }
    Ok(())
}

pub fn table_to_bytes(n: u32, table: &[u64]) -> Result<Vec<u8>, Error> {
    if n == 0 || n > 32 {
        return Err(Error::InvalidParams(format!("table width {n} out of range")));
    }
    if table.len() != 1usize << n {
        return Err(Error::LengthMismatch { expected: 1usize << n, got: table.len() });
    }
    let mut bits = BitString::new();
    for &e in table {
        if e & !mask(n) != 0 {
            return Err(Error::WidthMismatch("table entry wider than n"));
        }
        bits.push_bits(e, n);
    }
    let mut out = Vec::with_capacity(6 + bits.as_bytes().len() + 4);
    out.extend_from_slice(MAGIC);
    out.push(FILE_TABLE);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(bits.as_bytes());
    Ok(out)
}

pub fn table_from_bytes(data: &[u8]) -> Result<(u32, Vec<u64>), Error> {
    let mut rd = ByteReader::new(data);
    expect_header(&mut rd, FILE_TABLE)?;
    let n = rd.u32()?;
    if n == 0 || n > 32 {
        return Err(Error::Format(format!("table width {n} out of range")));
    }
    let nbits = (1usize << n) * n as usize;
    let body = rd.take(nbits.div_ceil(8))?;
    rd.done()?;
    let bits = BitString::from_bytes(body, nbits)?;
    let table = (0..1usize << n).map(|i| bits.get_bits(i * n as usize, n)).collect();
    Ok((n, table))
}

pub fn input_to_bytes(x: &InputVector) -> Vec<u8> {
    let bits = x.to_bits();
    let mut out = Vec::with_capacity(14 + bits.as_bytes().len());
    out.extend_from_slice(MAGIC);
    out.push(FILE_INPUT);
    out.extend_from_slice(&(x.len() as u32).to_le_bytes());
    out.extend_from_slice(&x.u().to_le_bytes());
    out.extend_from_slice(bits.as_bytes());
    out
}

pub fn input_from_bytes(data: &[u8]) -> Result<InputVector, Error> {
    let mut rd = ByteReader::new(data);
    expect_header(&mut rd, FILE_INPUT)?;
    let v = rd.u32()?;
    let u = rd.u32()?;
    if u == 0 || u > 63 {
        return Err(Error::Format(format!("block width {u} out of range")));
    }
    let nbits = v as usize * u as usize;
    let body = rd.take(nbits.div_ceil(8))?;
    rd.done()?;
    let bits = BitString::from_bytes(body, nbits)?;
    let blocks = (0..v as usize).map(|i| bits.get_bits(i * u as usize, u)).collect();
    InputVector::new(u, blocks)
}

pub fn blob_to_bytes(blob: &EncodingBlob) -> Result<Vec<u8>, Error> {
    if blob.sections.len() > u16::MAX as usize {
        return Err(Error::Format("too many sections".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(FILE_BLOB);
    out.push(blob.scheme.as_u8());
    out.extend_from_slice(&(blob.sections.len() as u16).to_le_bytes());
    for sec in &blob.sections {
        if sec.payload_bits + sec.header_bits != sec.bits.len() {
            return Err(Error::LengthMismatch {
                expected: sec.payload_bits + sec.header_bits,
                got: sec.bits.len(),
            });
        }
        if sec.payload_bits > u32::MAX as usize || sec.header_bits > u32::MAX as usize {
            return Err(Error::Format("section too large".into()));
        }
        out.push(sec.id);
        out.extend_from_slice(&(sec.payload_bits as u32).to_le_bytes());
        out.extend_from_slice(&(sec.header_bits as u32).to_le_bytes());
        out.extend_from_slice(sec.bits.as_bytes());
    }
    Ok(out)
}

pub fn blob_from_bytes(data: &[u8]) -> Result<EncodingBlob, Error> {
    let mut rd = ByteReader::new(data);
    expect_header(&mut rd, FILE_BLOB)?;
    let scheme = Scheme::from_u8(rd.u8()?)?;
    let count = rd.u16()?;
    let mut sections = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = rd.u8()?;
        let payload_bits = rd.u32()? as usize;
        let header_bits = rd.u32()? as usize;
        let nbits = payload_bits + header_bits;
        let body = rd.take(nbits.div_ceil(8))?;
        let bits = BitString::from_bytes(body, nbits)?;
        sections.push(Section { id, bits, payload_bits, header_bits });
    }
    rd.done()?;
    Ok(EncodingBlob { scheme, sections })
}

pub fn write_table_file<P: AsRef<Path>>(path: P, n: u32, table: &[u64]) -> Result<(), Error> {
    Ok(fs::write(path, table_to_bytes(n, table)?)?)
}

pub fn read_table_file<P: AsRef<Path>>(path: P) -> Result<(u32, Vec<u64>), Error> {
    table_from_bytes(&fs::read(path)?)
}

pub fn write_input_file<P: AsRef<Path>>(path: P, x: &InputVector) -> Result<(), Error> {
    Ok(fs::write(path, input_to_bytes(x))?)
}

pub fn read_input_file<P: AsRef<Path>>(path: P) -> Result<InputVector, Error> {
    input_from_bytes(&fs::read(path)?)
}

pub fn write_blob_file<P: AsRef<Path>>(path: P, blob: &EncodingBlob) -> Result<(), Error> {
    Ok(fs::write(path, blob_to_bytes(blob)?)?)
}

pub fn read_blob_file<P: AsRef<Path>>(path: P) -> Result<EncodingBlob, Error> {
    blob_from_bytes(&fs::read(path)?)
}
