//! Chain parameters, word layouts, and input vectors.
//!
//! Both chain functions walk `w` oracle nodes over an input of `v` blocks of
//! `u` bits. Query and answer words are `n`-bit values laid out MSB-first:
//!
//! * `Line` query: `[counter (n-2u) | block value (u) | salt (u)]`
//! * `Line` answer: `[next block index (ceil log2 v) | salt (u) | payload]`
//! * `SimLine` query: `[block value (u) | salt (u) | zero pad]`
//! * `SimLine` answer: `[salt (u) | payload (n-u)]`
//!
//! `Line` picks the next block from each answer; `SimLine` consumes blocks
//! cyclically, node `i` reading block `(i-1) mod v`.

use crate::bits::{ceil_log2, mask, BitString};
use crate::Error;

/// Which chain function is being evaluated.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Func {
    Line,
    SimLine,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Line => "line",
            Func::SimLine => "simline",
        }
    }

    pub fn from_name(s: &str) -> Result<Func, Error> {
        match s {
            "line" => Ok(Func::Line),
            "simline" => Ok(Func::SimLine),
            _ => Err(Error::Config(format!("unknown func '{s}'"))),
        }
    }
}

/// Instance and model parameters.
///
/// `n` is the oracle word size, `u` the block/salt size, `v` the number of
/// input blocks, `w` the chain length. `m`, `s`, `q` are the machine count,
/// per-machine memory in bits, and per-round query budget. `d` is the
/// lookahead depth used by the enumerative codec.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Params {
    pub n: u32,
    pub u: u32,
    pub v: u32,
    pub w: u32,
    pub m: u32,
    pub s: u32,
    pub q: u32,
    pub d: u32,
}

impl Params {
    /// A single-machine parameter set with the default block size `u = n/3`.
    pub fn new(n: u32, v: u32, w: u32) -> Params {
        let u = n / 3;
        Params { n, u, v, w, m: 1, s: 4 * n, q: w.max(1), d: 1 }
    }

    /// Counter field width in `Line` queries.
    pub fn c_bits(&self) -> u32 {
        self.n - 2 * self.u
    }

    /// Block index field width.
    pub fn ell_bits(&self) -> u32 {
        ceil_log2(self.v as u64)
    }

    /// Payload width of a `Line` answer.
    pub fn z_bits_line(&self) -> u32 {
        self.n - self.ell_bits() - self.u
    }

    /// Payload width of a `SimLine` answer.
    pub fn z_bits_simline(&self) -> u32 {
        self.n - self.u
    }

    /// Width of a chain position field in tokens. At least `c_bits`, widened
    /// when `w + 1` itself needs more (possible for `SimLine`, whose queries
    /// carry no counter).
    pub fn pos_bits(&self) -> u32 {
        self.c_bits().max(ceil_log2(self.w as u64 + 2))
    }

    /// Width of a query-index field (indices `0..q`).
    pub fn qidx_bits(&self) -> u32 {
        ceil_log2(self.q as u64)
    }

    /// Width of a query-count field (counts `0..=q`).
    pub fn qcount_bits(&self) -> u32 {
        ceil_log2(self.q as u64 + 1)
    }

    /// Width of a block-count field (counts `0..=v`).
    pub fn blockcount_bits(&self) -> u32 {
        ceil_log2(self.v as u64 + 1)
    }

    fn validate_common(&self) -> Result<(), Error> {
        let p = *self;
        if p.n < 1 || p.n > 63 {
            return Err(Error::InvalidParams(format!("n = {} out of range [1, 63]", p.n)));
        }
        if p.u < 1 {
            return Err(Error::InvalidParams("u must be at least 1".into()));
        }
        if 2 * p.u > p.n {
            return Err(Error::InvalidParams(format!("2u = {} exceeds n = {}", 2 * p.u, p.n)));
        }
        if p.v < 2 {
            return Err(Error::InvalidParams(format!("v = {} must be at least 2", p.v)));
        }
        if p.w < 1 {
            return Err(Error::InvalidParams("w must be at least 1".into()));
        }
        if p.m < 1 || p.s < 1 || p.q < 1 || p.d < 1 {
            return Err(Error::InvalidParams("m, s, q, d must be at least 1".into()));
        }
        Ok(())
    }

    /// Validates for `Line`: the counter field must hold every index `1..=w`
    /// plus one, and the answer layout must fit `ell` and the salt.
    pub fn validate_line(&self) -> Result<(), Error> {
        self.validate_common()?;
        let c = self.c_bits();
        if (self.w as u64 + 1) >= (1u64 << c) {
            return Err(Error::InvalidParams(format!(
                "w + 1 = {} does not fit in {c} counter bits",
                self.w + 1
            )));
        }
        if self.ell_bits() + self.u > self.n {
            return Err(Error::InvalidParams(format!(
                "answer layout needs {} bits, n = {}",
                self.ell_bits() + self.u,
                self.n
            )));
        }
        Ok(())
    }

    /// Validates for `SimLine`: queries carry no counter, so `w` is not
    /// constrained by `c_bits`.
    pub fn validate_simline(&self) -> Result<(), Error> {
        self.validate_common()
    }

    pub fn validate_for(&self, f: Func) -> Result<(), Error> {
        match f {
            Func::Line => self.validate_line(),
            Func::SimLine => self.validate_simline(),
        }
    }

    /// Whether the block size dominates the enumerative per-entry record
    /// cost, the regime where that codec's bound is a net compression.
    pub fn enum_bound_precondition_ok(&self) -> bool {
        self.u as u64 > (self.d as u64 + 2) * self.ell_bits() as u64 + self.qidx_bits() as u64
    }

    /// Derived window stride `s / (u - log q - log v) + 1`, when positive.
    pub fn h_derived(&self) -> Option<u64> {
        let denom = self.u as i64 - self.qidx_bits() as i64 - self.ell_bits() as i64;
        if denom <= 0 {
            None
        } else {
            Some(self.s as u64 / denom as u64 + 1)
        }
    }
}

/// The input: `v` blocks of `u` bits each.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InputVector {
    u: u32,
    blocks: Vec<u64>,
}

impl InputVector {
    pub fn new(u: u32, blocks: Vec<u64>) -> Result<InputVector, Error> {
        if u < 1 || u > 63 {
            return Err(Error::InvalidParams(format!("block size {u} out of range")));
        }
        if blocks.iter().any(|&b| b > mask(u)) {
            return Err(Error::WidthMismatch("input block"));
        }
        Ok(InputVector { u, blocks })
    }

    /// Samples `p.v` uniform blocks.
    pub fn random<R: rand::RngCore>(rng: &mut R, p: &Params) -> InputVector {
        let blocks = (0..p.v).map(|_| rng.next_u64() & mask(p.u)).collect();
        InputVector { u: p.u, blocks }
    }

    /// Parses a hex string holding exactly `v * u` bits, MSB-first, with any
    /// pad bits in the final nibbles required to be zero.
    pub fn from_hex(s: &str, p: &Params) -> Result<InputVector, Error> {
        let bytes = hex_to_bytes(s)?;
        Self::from_payload(&bytes, p)
    }

    /// Parses a byte payload as produced by [`InputVector::to_bits`].
    pub fn from_payload(bytes: &[u8], p: &Params) -> Result<InputVector, Error> {
        let total = p.v as usize * p.u as usize;
        let bits = BitString::from_bytes(bytes, total)?;
        // from_bytes clears pad bits; reject inputs where they were set
        let mut repacked = bytes.to_vec();
        if total % 8 != 0 {
            if let Some(last) = repacked.last_mut() {
                if *last != *bits.as_bytes().last().unwrap() {
                    return Err(Error::Format("nonzero pad bits in input payload".into()));
                }
            }
        }
        let blocks = (0..p.v)
            .map(|i| bits.get_bits(i as usize * p.u as usize, p.u))
            .collect();
        Ok(InputVector { u: p.u, blocks })
    }

    pub fn u(&self) -> u32 {
        self.u
    }

    pub fn len(&self) -> u32 {
        self.blocks.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block by 0-based index.
    pub fn get(&self, i: u32) -> u64 {
        self.blocks[i as usize]
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    pub fn to_bits(&self) -> BitString {
        let mut out = BitString::new();
        for &b in &self.blocks {
            out.push_bits(b, self.u);
        }
        out
    }

    pub fn to_hex(&self) -> String {
        self.to_bits().to_hex()
    }
}

pub(crate) fn hex_to_bytes(s: &str) -> Result<Vec<u8>, Error> {
    let s = s.trim();
    if s.len() % 2 != 0 {
        return Err(Error::Format("hex string has odd length".into()));
    }
    let mut out = Vec::with_capacity(s.len() / 2);
    let bytes = s.as_bytes();
    for i in (0..s.len()).step_by(2) {
        let hi = (bytes[i] as char).to_digit(16);
        let lo = (bytes[i + 1] as char).to_digit(16);
        match (hi, lo) {
            (Some(h), Some(l)) => out.push((h * 16 + l) as u8),
            _ => return Err(Error::Format(format!("bad hex at offset {i}"))),
        }
    }
    Ok(out)
}

/// One step of an evaluation trace. For node 1 the constants are
/// `ell = 0, r = 0, z = 0`; for later nodes the fields come from the
/// previous answer. `ell` is the 0-based block index the node consumes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NodeState {
    pub index: u32,
    pub ell: u32,
    pub r: u64,
    pub z: u64,
}

/// Packs a `Line` query word `[i | x | r]`.
pub fn pack_line_query(p: &Params, i: u32, x: u64, r: u64) -> Result<u64, Error> {
    if i as u64 >= (1u64 << p.c_bits()) {
        return Err(Error::CounterOverflow { index: i, c_bits: p.c_bits() });
    }
    if x > mask(p.u) {
        return Err(Error::WidthMismatch("line query block value"));
    }
    if r > mask(p.u) {
        return Err(Error::WidthMismatch("line query salt"));
    }
    Ok(((i as u64) << (2 * p.u)) | (x << p.u) | r)
}

/// Splits a `Line` answer into `(ell, r, z)`; the raw index field is reduced
/// mod `v`.
pub fn unpack_line_answer(p: &Params, a: u64) -> (u32, u64, u64) {
    let eb = p.ell_bits();
    let zb = p.z_bits_line();
    let ell_raw = (a >> (p.n - eb)) & mask(eb);
    let r = (a >> zb) & mask(p.u);
    let z = a & mask(zb);
    ((ell_raw % p.v as u64) as u32, r, z)
}

/// Counter field of a `Line` query word.
pub fn line_counter(p: &Params, q: u64) -> u32 {
    (q >> (2 * p.u)) as u32
}

/// Block value field of a `Line` query word.
pub fn line_x_field(p: &Params, q: u64) -> u64 {
    (q >> p.u) & mask(p.u)
}

/// Salt field of a `Line` query word.
pub fn line_r_field(p: &Params, q: u64) -> u64 {
    q & mask(p.u)
}

/// Salt field of a `Line` answer word, without reducing `ell`.
pub fn line_answer_r(p: &Params, a: u64) -> u64 {
    (a >> p.z_bits_line()) & mask(p.u)
}

/// Rewrites the block index field of a `Line` answer to exactly `ell`.
pub fn set_line_answer_ell(p: &Params, a: u64, ell: u32) -> u64 {
    let eb = p.ell_bits();
    let shifted = p.n - eb;
    let cleared = a & !(mask(eb) << shifted);
    cleared | ((ell as u64) << shifted)
}

/// Packs a `SimLine` query word `[x | r | 0 pad]`.
pub fn pack_simline_query(p: &Params, x: u64, r: u64) -> Result<u64, Error> {
    if x > mask(p.u) {
        return Err(Error::WidthMismatch("simline query block value"));
    }
    if r > mask(p.u) {
        return Err(Error::WidthMismatch("simline query salt"));
    }
    Ok((x << (p.n - p.u)) | (r << (p.n - 2 * p.u)))
}

/// Splits a `SimLine` answer into `(r, z)`.
pub fn unpack_simline_answer(p: &Params, a: u64) -> (u64, u64) {
    (a >> p.z_bits_simline(), a & mask(p.z_bits_simline()))
}

/// Block value field of a `SimLine` query word.
pub fn simline_x_field(p: &Params, q: u64) -> u64 {
    q >> (p.n - p.u)
}

/// Salt field of a `SimLine` query word.
pub fn simline_r_field(p: &Params, q: u64) -> u64 {
    (q >> (p.n - 2 * p.u)) & mask(p.u)
}

/// 0-based input block consumed by `SimLine` node `i` (1-based).
pub fn simline_block_index(p: &Params, i: u32) -> u32 {
    (i - 1) % p.v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p12() -> Params {
        Params { n: 12, u: 4, v: 4, w: 3, m: 1, s: 64, q: 8, d: 2 }
    }

    #[test]
    fn line_query_layout() {
        let p = p12();
        assert_eq!(pack_line_query(&p, 1, 0xA, 0x0).unwrap(), 0x1A0);
        assert_eq!(pack_line_query(&p, 3, 0xB, 0xF).unwrap(), 0x3BF);
        assert_eq!(line_counter(&p, 0x3BF), 3);
        assert_eq!(line_x_field(&p, 0x3BF), 0xB);
        assert_eq!(line_r_field(&p, 0x3BF), 0xF);
    }

    #[test]
    fn line_query_rejects_overflow() {
        let p = p12();
        assert!(matches!(
            pack_line_query(&p, 16, 0, 0),
            Err(Error::CounterOverflow { index: 16, c_bits: 4 })
        ));
        assert!(pack_line_query(&p, 1, 0x10, 0).is_err());
        assert!(pack_line_query(&p, 1, 0, 0x10).is_err());
    }

    #[test]
    fn line_answer_layout() {
        let p = p12();
        // 0x9C3 = 10 0111 000011: ell_raw 2, r 7, z 3
        assert_eq!(unpack_line_answer(&p, 0x9C3), (2, 0x7, 0x03));
        // 0xD55 = 11 0101 010101
        assert_eq!(unpack_line_answer(&p, 0xD55), (3, 0x5, 0x15));
        assert_eq!(line_answer_r(&p, 0x9C3), 0x7);
    }

    #[test]
    fn line_answer_ell_reduced_mod_v() {
        let p = Params { v: 3, ..p12() };
        // raw index field 3 reduces to 0 when v = 3
        assert_eq!(unpack_line_answer(&p, 0xFFF).0, 0);
    }

    #[test]
    fn set_ell_overwrites_only_index_field() {
        let p = p12();
        let a = 0x9C3;
        let b = set_line_answer_ell(&p, a, 1);
        assert_eq!(unpack_line_answer(&p, b), (1, 0x7, 0x03));
        assert_eq!(set_line_answer_ell(&p, b, 2), a);
    }

    #[test]
    fn simline_layouts() {
        let p = Params { n: 12, u: 4, v: 2, w: 16, m: 1, s: 64, q: 8, d: 1 };
        assert_eq!(pack_simline_query(&p, 0xA, 0x3).unwrap(), 0xA30);
        assert_eq!(simline_x_field(&p, 0xA30), 0xA);
        assert_eq!(simline_r_field(&p, 0xA30), 0x3);
        assert_eq!(unpack_simline_answer(&p, 0xA30), (0xA, 0x30));
        assert_eq!(simline_block_index(&p, 1), 0);
        assert_eq!(simline_block_index(&p, 2), 1);
        assert_eq!(simline_block_index(&p, 3), 0);
    }

    #[test]
    fn simline_pack_unpack_consistent() {
        let p = Params { n: 13, u: 4, v: 8, w: 5, m: 1, s: 64, q: 8, d: 1 };
        for x in 0..16 {
            for r in 0..16 {
                let word = pack_simline_query(&p, x, r).unwrap();
                assert_eq!(simline_x_field(&p, word), x);
                assert_eq!(simline_r_field(&p, word), r);
                assert_eq!(word & mask(p.n - 2 * p.u), 0, "pad bits must be zero");
            }
        }
    }

    #[test]
    fn line_pack_injective_exhaustive() {
        let p = p12();
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..16 {
            for x in 0..16u64 {
                for r in 0..16u64 {
                    assert!(seen.insert(pack_line_query(&p, i, x, r).unwrap()));
                }
            }
        }
        assert_eq!(seen.len(), 4096);
    }

    #[test]
    fn validation_line_counter_bound() {
        let mut p = p12();
        assert!(p.validate_line().is_ok());
        p.w = 15; // w + 1 = 16 needs 5 counter bits
        assert!(p.validate_line().is_err());
        assert!(p.validate_simline().is_ok());
    }

    #[test]
    fn validation_simline_allows_long_chains() {
        // the warm-up codec's reference parameters
        let p = Params { n: 12, u: 4, v: 8, w: 16, m: 1, s: 128, q: 8, d: 1 };
        assert!(p.validate_simline().is_ok());
        assert!(p.validate_line().is_err());
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        assert!(Params { n: 64, u: 4, v: 4, w: 3, m: 1, s: 1, q: 1, d: 1 }.validate_simline().is_err());
        assert!(Params { n: 12, u: 7, v: 4, w: 3, m: 1, s: 1, q: 1, d: 1 }.validate_simline().is_err());
        assert!(Params { n: 12, u: 4, v: 1, w: 3, m: 1, s: 1, q: 1, d: 1 }.validate_simline().is_err());
        assert!(Params { n: 12, u: 4, v: 4, w: 0, m: 1, s: 1, q: 1, d: 1 }.validate_simline().is_err());
    }

    #[test]
    fn derived_widths() {
        let p = Params { n: 24, u: 8, v: 16, w: 64, m: 4, s: 256, q: 4, d: 2 };
        assert_eq!(p.c_bits(), 8);
        assert_eq!(p.ell_bits(), 4);
        assert_eq!(p.z_bits_line(), 12);
        assert_eq!(p.z_bits_simline(), 16);
        assert_eq!(p.pos_bits(), 8);
        assert_eq!(p.qidx_bits(), 2);
        assert_eq!(p.qcount_bits(), 3);
        assert_eq!(p.blockcount_bits(), 5);
    }

    #[test]
    fn pos_bits_widens_for_long_simline() {
        let p = Params { n: 12, u: 4, v: 8, w: 16, m: 2, s: 128, q: 8, d: 1 };
        assert_eq!(p.c_bits(), 4);
        assert_eq!(p.pos_bits(), 5); // positions run up to w + 1 = 17
    }

    #[test]
    fn enum_precondition_flag() {
        let mut p = Params { n: 63, u: 21, v: 4, w: 8, m: 2, s: 128, q: 4, d: 2 };
        assert!(p.enum_bound_precondition_ok()); // 21 > (2+2)*2 + 2
        p.u = 10;
        assert!(!p.enum_bound_precondition_ok());
    }

    #[test]
    fn h_derived_matches_formula() {
        let p = Params { n: 24, u: 8, v: 4, w: 16, m: 1, s: 60, q: 4, d: 1 };
        // denom = 8 - 2 - 2 = 4, h = 60/4 + 1 = 16
        assert_eq!(p.h_derived(), Some(16));
        let tight = Params { u: 4, ..p };
        assert_eq!(tight.h_derived(), None);
    }

    #[test]
    fn input_vector_hex_roundtrip() {
        let p = Params { n: 12, u: 4, v: 2, w: 3, m: 1, s: 16, q: 1, d: 1 };
        let x = InputVector::from_hex("AB", &p).unwrap();
        assert_eq!(x.blocks(), &[0xA, 0xB]);
        assert_eq!(x.to_hex(), "ab");

        let p3 = Params { v: 3, ..p };
        let y = InputVector::from_hex("ABC0", &p3).unwrap();
        assert_eq!(y.blocks(), &[0xA, 0xB, 0xC]);
        // nonzero pad bits rejected
        assert!(InputVector::from_hex("ABC1", &p3).is_err());
        // wrong length rejected
        assert!(InputVector::from_hex("AB", &p3).is_err());
        assert!(InputVector::from_hex("ABC000", &p3).is_err());
    }

    #[test]
    fn input_vector_width_check() {
        assert!(InputVector::new(4, vec![0xF]).is_ok());
        assert!(InputVector::new(4, vec![0x10]).is_err());
    }
}
