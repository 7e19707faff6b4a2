//! MSB-first bit strings with exact bit lengths.
//!
//! All wire layouts in this crate (oracle words, machine memories, encoding
//! blobs, file payloads) are defined bit by bit, most significant first.

use crate::Error;

/// Low `width` bits set, `width <= 64`.
pub fn mask(width: u32) -> u64 {
    assert!(width <= 64);
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Ceiling of `log2(x)` for `x >= 1`; 0 for `x <= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// A bit string of arbitrary length, packed MSB-first into bytes.
///
/// Bit `i` lives in byte `i / 8` under mask `0x80 >> (i % 8)`. Trailing pad
/// bits in the last byte are kept zero so byte-level comparison is exact.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        BitString { bytes: Vec::new(), len: 0 }
    }

    /// An all-zero string of `len` bits.
    pub fn zeros(len: usize) -> Self {
        BitString { bytes: vec![0u8; len.div_ceil(8)], len }
    }

    /// Reinterprets `bytes` as a bit string of `len` bits. Pad bits beyond
    /// `len` in the last byte are cleared.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, Error> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::LengthMismatch { expected: len.div_ceil(8), got: bytes.len() });
        }
        let mut bytes = bytes.to_vec();
        if len % 8 != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xffu8 << (8 - len % 8);
            }
        }
        Ok(BitString { bytes, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn push_bit(&mut self, b: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if b {
            self.bytes[self.len / 8] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, MSB-first. `width` may be 0.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        assert!(width <= 64, "width {width} > 64");
        for k in (0..width).rev() {
            self.push_bit((value >> k) & 1 == 1);
        }
    }

    /// Appends all of `other`.
    pub fn push_str(&mut self, other: &BitString) {
        for i in 0..other.len {
            self.push_bit(other.bit(i));
        }
    }

    /// Extends with zero bits up to `len`. No-op if already at least `len`.
    pub fn pad_to(&mut self, len: usize) {
        while self.len < len {
            self.push_bit(false);
        }
    }

    /// Reads `width` bits starting at `offset`, MSB-first, as an integer.
    pub fn get_bits(&self, offset: usize, width: u32) -> u64 {
        assert!(width <= 64, "width {width} > 64");
        assert!(
            offset + width as usize <= self.len,
            "read [{offset}, {}) out of range {}",
            offset + width as usize,
            self.len
        );
        let mut v = 0u64;
        for i in 0..width as usize {
            v = (v << 1) | self.bit(offset + i) as u64;
        }
        v
    }

    pub fn count_ones(&self) -> usize {
        (0..self.len).filter(|&i| self.bit(i)).count()
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.bytes.len() * 2);
        for b in &self.bytes {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitString({} bits, {})", self.len, self.to_hex())
    }
}

/// Cursor over a [`BitString`] for sequential decoding.
pub struct BitReader<'a> {
    bits: &'a BitString,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitString) -> Self {
        BitReader { bits, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    /// Reads `width` bits; errors if the string is exhausted.
    pub fn read_bits(&mut self, width: u32) -> Result<u64, Error> {
        if self.pos + width as usize > self.bits.len() {
            return Err(Error::Format(format!(
                "truncated bit stream: need {width} bits at offset {}, have {}",
                self.pos,
                self.bits.len() - self.pos
            )));
        }
        let v = self.bits.get_bits(self.pos, width);
        self.pos += width as usize;
        Ok(v)
    }

    pub fn read_bit(&mut self) -> Result<bool, Error> {
        Ok(self.read_bits(1)? == 1)
    }
}
