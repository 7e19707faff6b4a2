//! The information-theoretic floor under every encoding scheme: an
//! injective code on N messages needs a string of at least ceil(log2 N) - 1
//! bits somewhere. Feeds an exhaustive family of (table, input) pairs
//! through the warm-up codec and checks injectivity against that floor.
//!
//!     cargo run --example counting_bound

use linempc::compression::{counting_bound_check, encode_warmup, warmup_window, MachineRoundContext};
use linempc::mpc::{self, GroundTruth, Tape};
use linempc::strategies::SegmentStrategy;
use linempc::{BitString, Error, Func, InputVector, Mode, Oracle, OracleSeed, Params};

fn main() -> Result<(), Error> {
    let mut p = Params { n: 8, u: 3, v: 2, w: 2, m: 1, s: 0, q: 2, d: 1 };
    let strat = SegmentStrategy::for_params(&p);
    p.s = strat.required_bits(&p) as u32;
    p.validate_for(Func::SimLine)?;

    // 2 table seeds x every input vector: 2 * 2^(v*u) = 128 distinct messages
    let mut messages = Vec::new();
    for table_seed in 0..2u64 {
        for xv in 0..1u64 << (p.v * p.u) {
            messages.push((table_seed, xv));
        }
    }

    let check = counting_bound_check(&messages, |&(table_seed, xv)| {
        let seed = OracleSeed::from_u64(table_seed);
        let mut oracle = Oracle::new(seed.subseed(0), p.n, Mode::Eager)?;
        let blocks = (0..p.v).map(|j| xv >> (j * p.u) & ((1 << p.u) - 1)).collect();
        let x = InputVector::new(p.u, blocks)?;
        let tape = Tape::new(seed.subseed(2));
        let truth = GroundTruth::compute(&p, Func::SimLine, &mut oracle, &x)?;
        let chain = truth.chain.clone();
        oracle.clear_log();
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 10)?;
        assert!(report.success);

        let ctx = MachineRoundContext { machine: 0, round: 0, frontier: 0, frontier_word: None };
        let targets = warmup_window(&p, &chain, 1, p.v.min(p.w));
        let blob = encode_warmup(&p, &strat, &oracle, &x, &report, &ctx, &tape, &targets, 1)?;

        // the message is the serialized blob, bit for bit
        let mut bits = BitString::new();
        for s in &blob.sections {
            bits.push_bits(s.id as u64, 8);
            bits.push_bits(s.bits.len() as u64, 32);
            bits.push_str(&s.bits);
        }
        Ok(bits)
    })?;

    println!(
        "{} messages, encoded lengths {}..{} bits",
        check.count, check.min_len, check.max_len
    );
    println!(
        "injective: yes   floor ceil(log2 {}) - 1 = {}   max_len >= floor: {}",
        check.count, check.floor, check.pass
    );
    assert!(check.pass);
    Ok(())
}
