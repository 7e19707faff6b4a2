//! Seeded random oracle over `n`-bit words, with patch overlays and a tagged
//! query log.
//!
//! An answer is the top `n` bits of `SHA-256(seed || be64(x))`. The same
//! function backs all three modes; `Eager` additionally materializes the full
//! table (for dumps and cheap patched clones), `KeyedHash` is the lazy mode
//! under its instantiation-flavored name.

use std::collections::BTreeMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::bits::mask;
use crate::chain::hex_to_bytes;
use crate::Error;

pub const SEED_BYTES: usize = 32;

/// Largest `n` for which a full table may be materialized or dumped.
pub const EAGER_MAX_N: u32 = 22;

/// 32-byte master seed for an oracle, tape, or experiment row.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleSeed(pub [u8; SEED_BYTES]);

impl OracleSeed {
    /// Seed whose last 8 bytes are `k`, big-endian; the rest zero.
    pub fn from_u64(k: u64) -> OracleSeed {
        let mut b = [0u8; SEED_BYTES];
        b[24..].copy_from_slice(&k.to_be_bytes());
        OracleSeed(b)
    }

    /// Parses 64 hex characters.
    pub fn from_hex(s: &str) -> Result<OracleSeed, Error> {
        let bytes = hex_to_bytes(s)?;
        if bytes.len() != SEED_BYTES {
            return Err(Error::LengthMismatch { expected: SEED_BYTES, got: bytes.len() });
        }
        let mut b = [0u8; SEED_BYTES];
        b.copy_from_slice(&bytes);
        Ok(OracleSeed(b))
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(64);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Derives an independent child seed: `SHA-256(seed || be64(idx))`.
    pub fn subseed(&self, idx: u64) -> OracleSeed {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update(idx.to_be_bytes());
        OracleSeed(h.finalize().into())
    }

    /// A deterministic generator seeded from this value.
    pub fn rng(&self) -> rand_chacha::ChaCha20Rng {
        use rand_chacha::rand_core::SeedableRng;
        rand_chacha::ChaCha20Rng::from_seed(self.0)
    }
}

impl std::fmt::Display for OracleSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl std::fmt::Debug for OracleSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OracleSeed({})", self.to_hex())
    }
}

/// 256-bit block `t` of the shared random tape: `SHA-256(seed || "tape" || be64(t))`.
pub fn tape_block(seed: &OracleSeed, t: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.0);
    h.update(b"tape");
    h.update(t.to_be_bytes());
    h.finalize().into()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    /// Answers computed on demand.
    Lazy,
    /// Full table materialized up front; permits dumps and shares the table
    /// across patched clones. Requires `n <= 22`.
    Eager,
    /// Same computation as `Lazy`; names the keyed-compression-function
    /// instantiation of the oracle.
    KeyedHash,
}

impl Mode {
    pub fn from_name(s: &str) -> Result<Mode, Error> {
        match s {
            "lazy" => Ok(Mode::Lazy),
            "eager" => Ok(Mode::Eager),
            "keyed-hash" => Ok(Mode::KeyedHash),
            _ => Err(Error::Config(format!("unknown oracle mode '{s}'"))),
        }
    }
}

/// Who issued an oracle query; kept in the audit log.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QueryTag {
    /// Reference evaluator.
    Eval,
    /// A machine inside an MPC run.
    Machine { id: u32, round: u32 },
    /// Experiment harness bookkeeping.
    Harness,
    /// Codec replay.
    Codec,
}

fn base_answer(seed: &OracleSeed, n: u32, x: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.0);
    h.update(x.to_be_bytes());
    let d = h.finalize();
    let word = u64::from_be_bytes(d[..8].try_into().unwrap());
    word >> (64 - n)
}

/// The random oracle. Clones made via [`Oracle::patched`] share the eager
/// table; each handle keeps its own patch overlay and query log.
#[derive(Clone, Debug)]
pub struct Oracle {
    seed: OracleSeed,
    n: u32,
    mode: Mode,
    table: Option<Arc<Vec<u64>>>,
    patches: BTreeMap<u64, u64>,
    log: Vec<(QueryTag, u64)>,
}

impl Oracle {
    pub fn new(seed: OracleSeed, n: u32, mode: Mode) -> Result<Oracle, Error> {
        if n < 1 || n > 63 {
            return Err(Error::InvalidParams(format!("oracle word size {n} out of range")));
        }
        let table = match mode {
            Mode::Eager => {
                if n > EAGER_MAX_N {
                    return Err(Error::ModeUnsupported("eager table for n > 22"));
                }
                let t = (0..1u64 << n).map(|x| base_answer(&seed, n, x)).collect();
                Some(Arc::new(t))
            }
            Mode::Lazy | Mode::KeyedHash => None,
        };
        Ok(Oracle { seed, n, mode, table, patches: BTreeMap::new(), log: Vec::new() })
    }

    /// Rebuilds an oracle from a dumped table. Patch state and seed are not
    /// part of a dump; the result answers exactly per the table.
    pub fn from_table(n: u32, table: Vec<u64>) -> Result<Oracle, Error> {
        if n < 1 || n > EAGER_MAX_N {
            return Err(Error::InvalidParams(format!("table word size {n} out of range")));
        }
        if table.len() != 1usize << n {
            return Err(Error::LengthMismatch { expected: 1usize << n, got: table.len() });
        }
        if table.iter().any(|&a| a > mask(n)) {
            return Err(Error::WidthMismatch("table entry"));
        }
        Ok(Oracle {
            seed: OracleSeed::from_u64(0),
            n,
            mode: Mode::Eager,
            table: Some(Arc::new(table)),
            patches: BTreeMap::new(),
            log: Vec::new(),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> &OracleSeed {
        &self.seed
    }

    /// The answer, without logging. Patches take precedence.
    pub fn answer(&self, x: u64) -> Result<u64, Error> {
        if x > mask(self.n) {
            return Err(Error::WidthMismatch("oracle query"));
        }
        if let Some(&a) = self.patches.get(&x) {
            return Ok(a);
        }
        match &self.table {
            Some(t) => Ok(t[x as usize]),
            None => Ok(base_answer(&self.seed, self.n, x)),
        }
    }

    /// The answer, recorded in the log under `tag`.
    pub fn query(&mut self, x: u64, tag: QueryTag) -> Result<u64, Error> {
        let a = self.answer(x)?;
        self.log.push((tag, x));
        Ok(a)
    }

    /// A handle answering like `self` except at `entries`, which win over
    /// existing patches. The eager table is shared, the log starts empty.
    pub fn patched(&self, entries: &BTreeMap<u64, u64>) -> Result<Oracle, Error> {
        let m = mask(self.n);
        if entries.iter().any(|(&x, &a)| x > m || a > m) {
            return Err(Error::WidthMismatch("patch entry"));
        }
        let mut patches = self.patches.clone();
        for (&x, &a) in entries {
            patches.insert(x, a);
        }
        Ok(Oracle {
            seed: self.seed,
            n: self.n,
            mode: self.mode,
            table: self.table.clone(),
            patches,
            log: Vec::new(),
        })
    }

    pub fn patch_count(&self) -> usize {
        self.patches.len()
    }

    /// The full answer table, patches applied. Needs `n <= 22`.
    pub fn dump_table(&self) -> Result<Vec<u64>, Error> {
        if self.n > EAGER_MAX_N {
            return Err(Error::ModeUnsupported("table dump for n > 22"));
        }
        (0..1u64 << self.n).map(|x| self.answer(x)).collect()
    }

    pub fn log(&self) -> &[(QueryTag, u64)] {
        &self.log
    }

    pub fn log_count(&self, tag: QueryTag) -> usize {
        self.log.iter().filter(|(t, _)| *t == tag).count()
    }

    /// Query words issued under `tag`, in issue order.
    pub fn queries_tagged(&self, tag: QueryTag) -> Vec<u64> {
        self.log.iter().filter(|(t, _)| *t == tag).map(|&(_, x)| x).collect()
    }

    pub fn clear_log(&mut self) {
        self.log.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed1() -> OracleSeed {
        OracleSeed::from_u64(1)
    }

    #[test]
    fn golden_answers() {
        let o16 = Oracle::new(seed1(), 16, Mode::Lazy).unwrap();
        assert_eq!(o16.answer(0).unwrap(), 0x2905);
        assert_eq!(o16.answer(1).unwrap(), 0x64af);
        let o24 = Oracle::new(seed1(), 24, Mode::Lazy).unwrap();
        assert_eq!(o24.answer(0).unwrap(), 0x2905e7);
        let o12 = Oracle::new(seed1(), 12, Mode::Lazy).unwrap();
        assert_eq!(o12.answer(0x1A0).unwrap(), 0x28b);
    }

    #[test]
    fn golden_subseeds_and_tape() {
        assert_eq!(
            seed1().subseed(0).to_hex(),
            "2905e7f7863ab6965a31a4af435917c7692a46b13526a0706c2274cab2470adf"
        );
        assert_eq!(
            seed1().subseed(7).to_hex(),
            "b0e58a4b4451c9e9b29707880dd49a4e77972646d824277feb296e18fb889810"
        );
        let block = tape_block(&seed1(), 0);
        let mut hex = String::new();
        for b in block {
            hex.push_str(&format!("{b:02x}"));
        }
        assert_eq!(hex, "d4eaed8bc992067ecacfb3b802c5acaa891333d0f567ea9934026866bda655de");
    }

    #[test]
    fn seed_hex_roundtrip() {
        let s = seed1();
        assert_eq!(OracleSeed::from_hex(&s.to_hex()).unwrap(), s);
        assert!(OracleSeed::from_hex("abcd").is_err());
        assert!(OracleSeed::from_hex(&"zz".repeat(32)).is_err());
    }

    #[test]
    fn answers_are_pure_and_logged() {
        let mut o = Oracle::new(seed1(), 16, Mode::Lazy).unwrap();
        let a = o.query(42, QueryTag::Eval).unwrap();
        let b = o.query(42, QueryTag::Harness).unwrap();
        assert_eq!(a, b);
        assert_eq!(o.log(), &[(QueryTag::Eval, 42), (QueryTag::Harness, 42)]);
        assert_eq!(o.log_count(QueryTag::Eval), 1);
        assert_eq!(o.queries_tagged(QueryTag::Harness), vec![42]);
    }

    #[test]
    fn lazy_eager_keyed_agree() {
        let lazy = Oracle::new(seed1(), 12, Mode::Lazy).unwrap();
        let eager = Oracle::new(seed1(), 12, Mode::Eager).unwrap();
        let keyed = Oracle::new(seed1(), 12, Mode::KeyedHash).unwrap();
        for x in 0..1u64 << 12 {
            let a = lazy.answer(x).unwrap();
            assert_eq!(a, eager.answer(x).unwrap());
            assert_eq!(a, keyed.answer(x).unwrap());
            assert!(a <= mask(12));
        }
    }

    #[test]
    fn eager_needs_small_n() {
        assert!(Oracle::new(seed1(), 23, Mode::Eager).is_err());
        assert!(Oracle::new(seed1(), 23, Mode::Lazy).is_ok());
    }

    #[test]
    fn patches_overlay_and_compose() {
        let base = Oracle::new(seed1(), 12, Mode::Eager).unwrap();
        let a0 = base.answer(0x100).unwrap();
        let mut p1 = BTreeMap::new();
        p1.insert(0x100u64, 0xabc_u64);
        p1.insert(0x200u64, 0xdef_u64);
        let o1 = base.patched(&p1).unwrap();
        assert_eq!(o1.answer(0x100).unwrap(), 0xabc);
        assert_eq!(o1.answer(0x200).unwrap(), 0xdef);
        assert_eq!(o1.answer(0x300).unwrap(), base.answer(0x300).unwrap());
        // base unaffected
        assert_eq!(base.answer(0x100).unwrap(), a0);
        // later patches win
        let mut p2 = BTreeMap::new();
        p2.insert(0x100u64, 0x111_u64);
        let o2 = o1.patched(&p2).unwrap();
        assert_eq!(o2.answer(0x100).unwrap(), 0x111);
        assert_eq!(o2.answer(0x200).unwrap(), 0xdef);
        assert_eq!(o2.patch_count(), 2);
    }

    #[test]
    fn patch_width_checked() {
        let base = Oracle::new(seed1(), 12, Mode::Lazy).unwrap();
        let mut bad = BTreeMap::new();
        bad.insert(0x1000u64, 0u64);
        assert!(base.patched(&bad).is_err());
        let mut bad2 = BTreeMap::new();
        bad2.insert(0u64, 0x1000u64);
        assert!(base.patched(&bad2).is_err());
    }

    #[test]
    fn query_width_checked() {
        let mut o = Oracle::new(seed1(), 12, Mode::Lazy).unwrap();
        assert!(o.query(0xfff, QueryTag::Eval).is_ok());
        assert!(o.query(0x1000, QueryTag::Eval).is_err());
        assert_eq!(o.log().len(), 1, "failed queries are not logged");
    }

    #[test]
    fn dump_restores_identically() {
        let base = Oracle::new(seed1(), 10, Mode::Eager).unwrap();
        let mut patch = BTreeMap::new();
        patch.insert(5u64, 0x3ff_u64);
        let o = base.patched(&patch).unwrap();
        let table = o.dump_table().unwrap();
        let restored = Oracle::from_table(10, table).unwrap();
        for x in 0..1u64 << 10 {
            assert_eq!(restored.answer(x).unwrap(), o.answer(x).unwrap());
        }
    }

    #[test]
    fn from_table_validates() {
        assert!(Oracle::from_table(10, vec![0u64; 100]).is_err());
        assert!(Oracle::from_table(10, vec![0x400u64; 1024]).is_err());
        assert!(Oracle::from_table(10, vec![0x3ffu64; 1024]).is_ok());
    }

    #[test]
    fn lazy_dump_allowed_for_small_n() {
        let o = Oracle::new(seed1(), 10, Mode::Lazy).unwrap();
        let t = o.dump_table().unwrap();
        assert_eq!(t.len(), 1024);
        assert_eq!(t[0], o.answer(0).unwrap());
        let big = Oracle::new(seed1(), 30, Mode::Lazy).unwrap();
        assert!(matches!(big.dump_table(), Err(Error::ModeUnsupported(_))));
    }

    #[test]
    fn distinct_seeds_diverge() {
        let a = Oracle::new(OracleSeed::from_u64(1), 16, Mode::Lazy).unwrap();
        let b = Oracle::new(OracleSeed::from_u64(2), 16, Mode::Lazy).unwrap();
        let diff = (0..256).filter(|&x| a.answer(x).unwrap() != b.answer(x).unwrap()).count();
        assert!(diff > 200, "only {diff} of 256 answers differ");
    }
}
