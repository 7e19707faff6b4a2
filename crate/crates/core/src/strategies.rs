//! Reference strategies and probe harnesses.
//!
//! Machine memories hold a sequence of framed messages. Each frame starts
//! with a 2-bit tag; tag 00 ends parsing, so zero padding is harmless:
//!
//! * `01` state: `[tag | has_answer (1) | answer (n) | count | count * (block index | block value)]`
//! * `10` token: `[tag | position (pos_bits) | block index (ell_bits) | salt (u)]`
//!
//! A token hands the walk frontier to the machine owning the next block.
//! Machines keep their state alive by sending it to themselves each round.

use std::collections::{BTreeMap, BTreeSet};

use crate::bits::{mask, BitReader, BitString};
use crate::chain::{
    pack_line_query, pack_simline_query, simline_block_index, unpack_line_answer,
    unpack_simline_answer, InputVector, NodeState, Params,
};
use crate::mpc::{DistPolicy, Envelope, Message, QueryScope, Strategy, StepOutput, Tape};
use crate::oracle::{Oracle, QueryTag};
use crate::Error;

pub const TAG_END: u64 = 0b00;
pub const TAG_STATE: u64 = 0b01;
pub const TAG_TOKEN: u64 = 0b10;

/// The walk frontier: the next chain position to query, the block it needs,
/// and the salt carried from the previous answer.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Token {
    pub pos: u32,
    pub ell: u32,
    pub r: u64,
}

/// Everything a machine can find in its memory.
#[derive(Clone, Debug, Default)]
pub struct ParsedMemory {
    pub blocks: BTreeMap<u32, u64>,
    pub answer: Option<u64>,
    pub token: Option<Token>,
}

/// Bits of a state frame holding `nblocks` blocks.
pub fn state_bits(p: &Params, nblocks: u32) -> usize {
    2 + 1
        + p.n as usize
        + p.blockcount_bits() as usize
        + nblocks as usize * (p.ell_bits() + p.u) as usize
}

/// Bits of a token frame.
pub fn token_bits(p: &Params) -> usize {
    2 + (p.pos_bits() + p.ell_bits() + p.u) as usize
}

/// Builds a state frame from an optional answer and owned blocks.
pub fn state_message(p: &Params, answer: Option<u64>, blocks: &BTreeMap<u32, u64>) -> BitString {
    let mut b = BitString::new();
    b.push_bits(TAG_STATE, 2);
    b.push_bits(answer.is_some() as u64, 1);
    b.push_bits(answer.unwrap_or(0), p.n);
    b.push_bits(blocks.len() as u64, p.blockcount_bits());
    for (&idx, &val) in blocks {
        b.push_bits(idx as u64, p.ell_bits());
        b.push_bits(val, p.u);
    }
    b
}

/// Builds a token frame.
pub fn token_message(p: &Params, t: Token) -> BitString {
    let mut b = BitString::new();
    b.push_bits(TAG_TOKEN, 2);
    b.push_bits(t.pos as u64, p.pos_bits());
    b.push_bits(t.ell as u64, p.ell_bits());
    b.push_bits(t.r, p.u);
    b
}

/// Walks the frames in a memory. State frames merge (an answer anywhere
/// wins); of multiple tokens the last wins. Stops at tag 00 or when fewer
/// than a tag's worth of bits remain.
pub fn parse_memory(p: &Params, mem: &BitString) -> Result<ParsedMemory, Error> {
    let mut out = ParsedMemory::default();
    let mut rd = BitReader::new(mem);
    while rd.remaining() >= 2 {
        match rd.read_bits(2)? {
            TAG_END => break,
            TAG_STATE => {
                let has_answer = rd.read_bit()?;
                let answer = rd.read_bits(p.n)?;
                if has_answer {
                    out.answer = Some(answer);
                }
                let count = rd.read_bits(p.blockcount_bits())?;
                if count > p.v as u64 {
                    return Err(Error::Format(format!("state frame claims {count} blocks")));
                }
                for _ in 0..count {
                    let idx = rd.read_bits(p.ell_bits())? as u32;
                    let val = rd.read_bits(p.u)?;
                    out.blocks.insert(idx, val);
                }
            }
            TAG_TOKEN => {
                let pos = rd.read_bits(p.pos_bits())? as u32;
                let ell = rd.read_bits(p.ell_bits())? as u32;
                let r = rd.read_bits(p.u)?;
                out.token = Some(Token { pos, ell, r });
            }
            tag => return Err(Error::Format(format!("unknown frame tag {tag:02b}"))),
        }
    }
    Ok(out)
}

/// Sequential `SimLine` walker over contiguous block segments.
///
/// Machine `i` owns blocks `[i*b, (i+1)*b)`. Whoever holds the token
/// advances up to `min(b, q)` nodes, then passes it on; the finisher holds
/// the answer one round and claims. With `v = m*b` and `q >= b` a run takes
/// exactly `ceil(w/b) + 1` rounds.
pub struct SegmentStrategy {
    pub b: u32,
}

impl SegmentStrategy {
    /// Segment size from the parameters: `ceil(v / m)`.
    pub fn for_params(p: &Params) -> SegmentStrategy {
        SegmentStrategy { b: p.v.div_ceil(p.m) }
    }

    /// Memory needed: one state frame of `b` blocks plus one token frame.
    pub fn required_bits(&self, p: &Params) -> usize {
        state_bits(p, self.b) + token_bits(p)
    }

    fn owner(&self, block: u32) -> u32 {
        block / self.b
    }
}

impl Strategy for SegmentStrategy {
    fn init(&self, p: &Params, x: &InputVector) -> Result<Vec<BitString>, Error> {
        if self.b < 1 {
            return Err(Error::InvalidParams("segment size must be at least 1".into()));
        }
        if self.b.checked_mul(p.m).map_or(true, |c| c < p.v) {
            return Err(Error::InvalidParams(format!(
                "{} machines with segments of {} cannot cover {} blocks",
                p.m, self.b, p.v
            )));
        }
        if (p.s as usize) < self.required_bits(p) {
            return Err(Error::InsufficientMemory);
        }
        let mut memories = Vec::with_capacity(p.m as usize);
        for i in 0..p.m {
            let mut blocks = BTreeMap::new();
            for blk in i * self.b..((i + 1) * self.b).min(p.v) {
                blocks.insert(blk, x.get(blk));
            }
            memories.push(state_message(p, None, &blocks));
        }
        Ok(memories)
    }

    fn step(
        &self,
        p: &Params,
        env: &Envelope,
        oracle: &mut QueryScope<'_>,
        _tape: &Tape,
    ) -> Result<StepOutput, Error> {
        let mem = parse_memory(p, &env.memory)?;
        let mut out = StepOutput::default();
        if mem.answer.is_some() {
            out.claim = mem.answer;
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, mem.answer, &mem.blocks),
            });
            return Ok(out);
        }
        let token = mem.token.or_else(|| {
            // the owner of block 0 starts the walk
            (env.round == 0 && mem.blocks.contains_key(&0))
                .then_some(Token { pos: 1, ell: 0, r: 0 })
        });
        let Some(tok) = token else {
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, None, &mem.blocks),
            });
            return Ok(out);
        };

        let mut pos = tok.pos;
        let mut r = tok.r;
        let mut last = None;
        let cap = self.b.min(p.q);
        while pos <= p.w && oracle.issued() < cap {
            let blk = simline_block_index(p, pos);
            let Some(&xv) = mem.blocks.get(&blk) else { break };
            let a = oracle.query(pack_simline_query(p, xv, r)?)?;
            r = unpack_simline_answer(p, a).0;
            last = Some(a);
            pos += 1;
        }

        if pos > p.w {
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, last, &mem.blocks),
            });
        } else {
            let blk = simline_block_index(p, pos);
            let next = Token { pos, ell: blk, r };
            let dst = if mem.blocks.contains_key(&blk) { env.machine } else { self.owner(blk) };
            out.messages.push(Message { dst, payload: token_message(p, next) });
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, None, &mem.blocks),
            });
        }
        Ok(out)
    }
}

/// Sequential `Line` walker under an arbitrary ownership policy.
///
/// The token holder advances while it owns the block each answer demands
/// (at most `q` queries), then forwards the token to the owner of the
/// demanded block. The finisher holds the answer one round and claims.
pub struct TokenStrategy {
    pub policy: DistPolicy,
}

impl TokenStrategy {
    /// Memory needed: a state frame of the largest share plus one token.
    pub fn required_bits(&self, p: &Params) -> usize {
        let mut counts = vec![0u32; p.m as usize];
        for blk in 0..p.v {
            counts[self.policy.owner(blk, p) as usize] += 1;
        }
        let max = counts.into_iter().max().unwrap_or(0);
        state_bits(p, max) + token_bits(p)
    }
}

impl Strategy for TokenStrategy {
    fn init(&self, p: &Params, x: &InputVector) -> Result<Vec<BitString>, Error> {
        self.policy.validate(p)?;
        if (p.s as usize) < self.required_bits(p) {
            return Err(Error::InsufficientMemory);
        }
        let mut per_machine = vec![BTreeMap::new(); p.m as usize];
        for blk in 0..p.v {
            per_machine[self.policy.owner(blk, p) as usize].insert(blk, x.get(blk));
        }
        Ok(per_machine.into_iter().map(|blocks| state_message(p, None, &blocks)).collect())
    }

    fn step(
        &self,
        p: &Params,
        env: &Envelope,
        oracle: &mut QueryScope<'_>,
        _tape: &Tape,
    ) -> Result<StepOutput, Error> {
        let mem = parse_memory(p, &env.memory)?;
        let mut out = StepOutput::default();
        if mem.answer.is_some() {
            out.claim = mem.answer;
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, mem.answer, &mem.blocks),
            });
            return Ok(out);
        }
        let token = mem.token.or_else(|| {
            (env.round == 0 && mem.blocks.contains_key(&0))
                .then_some(Token { pos: 1, ell: 0, r: 0 })
        });
        let Some(tok) = token else {
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, None, &mem.blocks),
            });
            return Ok(out);
        };

        let Token { mut pos, mut ell, mut r } = tok;
        let mut last = None;
        while pos <= p.w && oracle.issued() < p.q {
            let Some(&xv) = mem.blocks.get(&ell) else { break };
            let a = oracle.query(pack_line_query(p, pos, xv, r)?)?;
            let (e, rr, _) = unpack_line_answer(p, a);
            ell = e;
            r = rr;
            last = Some(a);
            pos += 1;
        }

        if pos > p.w {
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, last, &mem.blocks),
            });
        } else {
            let next = Token { pos, ell, r };
            let dst =
                if mem.blocks.contains_key(&ell) { env.machine } else { self.policy.owner(ell, p) };
            out.messages.push(Message { dst, payload: token_message(p, next) });
            out.messages.push(Message {
                dst: env.machine,
                payload: state_message(p, None, &mem.blocks),
            });
        }
        Ok(out)
    }
}

/// Advances a `Line` walk from `start` while the demanded block stays inside
/// `owned`, up to `max_steps` queries. Returns how far it got.
///
/// With blocks drawn uniformly, each continuation is an independent
/// `|owned| / v` event, so the advance count decays geometrically.
pub fn greedy_probe(
    p: &Params,
    oracle: &mut Oracle,
    x: &InputVector,
    owned: &BTreeSet<u32>,
    start: &NodeState,
    max_steps: u32,
) -> Result<u32, Error> {
    let mut node = *start;
    let mut k = 0;
    while k < max_steps && node.index <= p.w && owned.contains(&node.ell) {
        let word = pack_line_query(p, node.index, x.get(node.ell), node.r)?;
        let a = oracle.query(word, QueryTag::Harness)?;
        let (ell, r, z) = unpack_line_answer(p, a);
        node = NodeState { index: node.index + 1, ell, r, z };
        k += 1;
    }
    Ok(k)
}

/// One adversary trial guessing chain entries it has no right to know yet:
/// for each guess it picks the next position from `window` (cycling), keeps
/// the demanded block value, and draws the salt uniformly. Counts how often
/// the guess equals the true correct entry.
///
/// The salt is the only unknown, so each guess hits with probability
/// exactly `2^-u`.
pub fn jump_trial<R: rand::RngCore>(
    p: &Params,
    x: &InputVector,
    trace: &[NodeState],
    chain: &[u64],
    window: &[u32],
    guesses: u32,
    rng: &mut R,
) -> Result<u32, Error> {
    if window.is_empty() {
        return Err(Error::InvalidParams("empty guess window".into()));
    }
    for &pos in window {
        if pos < 1 || pos as usize > chain.len() {
            return Err(Error::InvalidParams(format!("window position {pos} off the chain")));
        }
    }
    let mut hits = 0;
    for g in 0..guesses {
        let pos = window[g as usize % window.len()];
        let st = trace[pos as usize - 1];
        let word = pack_line_query(p, pos, x.get(st.ell), rng.next_u64() & mask(p.u))?;
        if word == chain[pos as usize - 1] {
            hits += 1;
        }
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpc::{self, GroundTruth};
    use crate::oracle::{Mode, OracleSeed};
    use crate::Func;

    fn setup(
        p: &Params,
        f: Func,
        seed: u64,
    ) -> (Oracle, InputVector, Tape, GroundTruth) {
        let master = OracleSeed::from_u64(seed);
        let mut oracle = Oracle::new(master.subseed(0), p.n, Mode::Lazy).unwrap();
        let mut rng = master.subseed(1).rng();
        let x = InputVector::random(&mut rng, p);
        let tape = Tape::new(master.subseed(2));
        let truth = GroundTruth::compute(p, f, &mut oracle, &x).unwrap();
        oracle.clear_log();
        (oracle, x, tape, truth)
    }

    #[test]
    fn frames_roundtrip() {
        let p = Params { n: 24, u: 8, v: 16, w: 20, m: 4, s: 400, q: 4, d: 1 };
        let mut blocks = BTreeMap::new();
        blocks.insert(3u32, 0x55u64);
        blocks.insert(9u32, 0xaau64);
        let mut mem = state_message(&p, Some(0xbeef), &blocks);
        mem.push_str(&token_message(&p, Token { pos: 7, ell: 9, r: 0x12 }));
        assert_eq!(mem.len(), state_bits(&p, 2) + token_bits(&p));
        mem.pad_to(mem.len() + 13); // zero padding must be ignored
        let parsed = parse_memory(&p, &mem).unwrap();
        assert_eq!(parsed.answer, Some(0xbeef));
        assert_eq!(parsed.blocks, blocks);
        assert_eq!(parsed.token, Some(Token { pos: 7, ell: 9, r: 0x12 }));
    }

    #[test]
    fn parse_rejects_unknown_tag() {
        let p = Params { n: 12, u: 4, v: 4, w: 3, m: 1, s: 64, q: 1, d: 1 };
        let mut mem = BitString::new();
        mem.push_bits(0b11, 2);
        assert!(parse_memory(&p, &mem).is_err());
    }

    fn segment_params(w: u32, b: u32, m: u32) -> Params {
        let v = m * b;
        let mut p = Params { n: 24, u: 8, v, w, m, s: 0, q: b, d: 1 };
        let strat = SegmentStrategy { b };
        p.s = strat.required_bits(&p) as u32;
        p
    }

    #[test]
    fn segment_round_count_is_exact() {
        for (w, b, m) in [(1, 1, 2), (5, 2, 2), (16, 4, 4), (64, 8, 2), (7, 8, 1)] {
            let p = segment_params(w, b, m);
            let (mut oracle, x, tape, truth) = setup(&p, Func::SimLine, 100 + w as u64);
            let strat = SegmentStrategy::for_params(&p);
            assert_eq!(strat.b, b);
            let report =
                mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 2 * w + 4).unwrap();
            assert!(report.violations.is_empty(), "{:?}", report.violations);
            assert!(report.success, "w={w} b={b} m={m}");
            assert_eq!(report.rounds_used, w.div_ceil(b) + 1, "w={w} b={b} m={m}");
        }
    }

    #[test]
    fn segment_quota_splits_rounds() {
        // q = 1 forces one node per round regardless of segment size
        let mut p = segment_params(6, 3, 2);
        p.q = 1;
        let (mut oracle, x, tape, truth) = setup(&p, Func::SimLine, 7);
        let strat = SegmentStrategy::for_params(&p);
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 20).unwrap();
        assert!(report.success);
        assert_eq!(report.rounds_used, 7);
    }

    #[test]
    fn segment_rejects_uncoverable_input() {
        let p = Params { n: 24, u: 8, v: 8, w: 4, m: 2, s: 4000, q: 4, d: 1 };
        let strat = SegmentStrategy { b: 2 }; // 2 machines * 2 blocks < 8
        let mut rng = OracleSeed::from_u64(1).rng();
        let x = InputVector::random(&mut rng, &p);
        assert!(strat.init(&p, &x).is_err());
    }

    #[test]
    fn segment_memory_check() {
        let mut p = segment_params(8, 4, 2);
        p.s -= 1;
        let strat = SegmentStrategy::for_params(&p);
        let mut rng = OracleSeed::from_u64(2).rng();
        let x = InputVector::random(&mut rng, &p);
        assert!(matches!(strat.init(&p, &x), Err(Error::InsufficientMemory)));
    }

    fn token_params() -> Params {
        let mut p = Params { n: 24, u: 8, v: 16, w: 40, m: 2, s: 0, q: 64, d: 1 };
        let strat = TokenStrategy { policy: DistPolicy::RoundRobin };
        p.s = strat.required_bits(&p) as u32;
        p
    }

    #[test]
    fn token_walk_succeeds_and_matches_reference() {
        let p = token_params();
        let (mut oracle, x, tape, truth) = setup(&p, Func::Line, 31);
        let strat = TokenStrategy { policy: DistPolicy::RoundRobin };
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 200).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.success);
        // exactly the chain was queried, in order, across machines
        let mut all: Vec<u64> = Vec::new();
        for k in 0..report.rounds.len() as u32 {
            for i in 0..p.m {
                all.extend_from_slice(report.machine_queries(k, i));
            }
        }
        assert_eq!(all, truth.chain);
    }

    #[test]
    fn token_adversarial_patches_force_one_step_rounds() {
        // patch every answer to demand a block the current holder lacks:
        // machine 0 owns even blocks, so make each ell odd after an even, etc.
        let p = Params { n: 24, u: 8, v: 4, w: 6, m: 2, s: 400, q: 64, d: 1 };
        let master = OracleSeed::from_u64(77);
        let base = Oracle::new(master.subseed(0), p.n, Mode::Lazy).unwrap();
        let mut rng = master.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);
        // walk and patch alternately: owner of block at node i is i % 2, force
        // next block to the other machine (round robin: parity flips)
        let mut patches = BTreeMap::new();
        let mut ell = 0u32;
        let mut r = 0u64;
        for i in 1..=p.w {
            let word = pack_line_query(&p, i, x.get(ell), r).unwrap();
            let a = base.answer(word).unwrap();
            let cur_owner = ell % 2;
            let (raw_ell, _, _) = unpack_line_answer(&p, a);
            let forced = if raw_ell % 2 == cur_owner { (raw_ell + 1) % p.v } else { raw_ell };
            let patched = crate::chain::set_line_answer_ell(&p, a, forced);
            patches.insert(word, patched);
            let (e, rr, _) = unpack_line_answer(&p, patched);
            ell = e;
            r = rr;
        }
        let mut oracle = base.patched(&patches).unwrap();
        let truth = GroundTruth::compute(&p, Func::Line, &mut oracle, &x).unwrap();
        oracle.clear_log();
        let tape = Tape::new(master.subseed(2));
        let strat = TokenStrategy { policy: DistPolicy::RoundRobin };
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 50).unwrap();
        assert!(report.success);
        // every answer demands the other machine's block: one node per round
        assert_eq!(report.rounds_used, p.w + 1);
    }

    #[test]
    fn token_single_machine_one_round() {
        let mut p = token_params();
        p.m = 1;
        p.w = 10;
        let strat = TokenStrategy { policy: DistPolicy::Contiguous };
        p.s = strat.required_bits(&p) as u32;
        let (mut oracle, x, tape, truth) = setup(&p, Func::Line, 5);
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 10).unwrap();
        assert!(report.success);
        // all w queries in round 0, claim in round 1
        assert_eq!(report.rounds_used, 2);
        assert_eq!(report.machine_queries(0, 0).len(), p.w as usize);
    }

    #[test]
    fn greedy_probe_stops_at_ownership_border() {
        let p = Params { n: 24, u: 8, v: 8, w: 16, m: 1, s: 64, q: 16, d: 1 };
        let master = OracleSeed::from_u64(41);
        let mut oracle = Oracle::new(master.subseed(0), p.n, Mode::Lazy).unwrap();
        let mut rng = master.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);
        let res = crate::ram_eval::eval_line(&p, &mut oracle, &x, QueryTag::Harness).unwrap();
        let start = res.trace[1]; // node 2
        // owning everything: probe runs to max_steps
        let all: BTreeSet<u32> = (0..p.v).collect();
        let k = greedy_probe(&p, &mut oracle, &x, &all, &start, 5).unwrap();
        assert_eq!(k, 5);
        // owning nothing: probe cannot move
        let none = BTreeSet::new();
        let k0 = greedy_probe(&p, &mut oracle, &x, &none, &start, 5).unwrap();
        assert_eq!(k0, 0);
        // probe queries replicate the true chain
        let all_k = greedy_probe(&p, &mut oracle, &x, &all, &start, p.w).unwrap();
        assert_eq!(all_k, p.w - 1, "from node 2 only w - 1 nodes remain");
    }

    #[test]
    fn jump_trial_hit_predicate() {
        let p = Params { n: 24, u: 8, v: 8, w: 8, m: 1, s: 64, q: 8, d: 1 };
        let master = OracleSeed::from_u64(42);
        let mut oracle = Oracle::new(master.subseed(0), p.n, Mode::Lazy).unwrap();
        let mut rng = master.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);
        let res = crate::ram_eval::eval_line(&p, &mut oracle, &x, QueryTag::Harness).unwrap();

        // an rng that happens to emit the true salt guarantees a hit
        struct Fixed(u64);
        impl rand::RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                self.0 as u32
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, dest: &mut [u8]) {
                dest.fill(0);
            }
        }
        let pos = 5u32;
        let mut lucky = Fixed(res.trace[pos as usize - 1].r);
        let hits =
            jump_trial(&p, &x, &res.trace, &res.queries, &[pos], 1, &mut lucky).unwrap();
        assert_eq!(hits, 1);
        let mut unlucky = Fixed(res.trace[pos as usize - 1].r ^ 1);
        let none =
            jump_trial(&p, &x, &res.trace, &res.queries, &[pos], 3, &mut unlucky).unwrap();
        assert_eq!(none, 0);
        assert!(jump_trial(&p, &x, &res.trace, &res.queries, &[], 1, &mut lucky).is_err());
        assert!(
            jump_trial(&p, &x, &res.trace, &res.queries, &[99], 1, &mut lucky).is_err()
        );
    }
}
