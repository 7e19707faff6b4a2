//! Runs the warm-up compression argument once: an early machine-round that
//! queries chain entries gets its oracle table re-encoded with those
//! entries' input blocks squeezed out, and the decoder gets them back by
//! replaying the round.
//!
//!     cargo run --example compress_warmup

use linempc::compression::{
    decode_warmup, encode_warmup, warmup_bound_bits, warmup_window, MachineRoundContext,
    SEC_CONTEXT, SEC_INPUTS, SEC_MEMORY, SEC_RECORDS, SEC_TABLE,
};
use linempc::mpc::{self, GroundTruth, Tape};
use linempc::strategies::SegmentStrategy;
use linempc::{Error, Func, InputVector, Mode, Oracle, OracleSeed, Params};

fn section_name(id: u8) -> &'static str {
    match id {
        SEC_CONTEXT => "context",
        SEC_TABLE => "table",
        SEC_MEMORY => "memory",
        SEC_RECORDS => "records",
        SEC_INPUTS => "inputs",
        _ => "sequences",
    }
}

fn main() -> Result<(), Error> {
    let seed = OracleSeed::from_u64(29);
    // a record costs qidx + ell = 6 bits and replaces a u-bit block, so
    // u = 8 leaves an honest 2-bit profit per recovered block
    let mut p = Params { n: 16, u: 8, v: 8, w: 16, m: 2, s: 0, q: 8, d: 1 };
    let strat = SegmentStrategy::for_params(&p);
    p.s = strat.required_bits(&p) as u32;
    p.validate_for(Func::SimLine)?;

    // the table must be fully materialized: it is the thing being compressed
    let mut oracle = Oracle::new(seed.subseed(0), p.n, Mode::Eager)?;
    let mut rng = seed.subseed(1).rng();
    let x = InputVector::random(&mut rng, &p);
    let tape = Tape::new(seed.subseed(2));
    let truth = GroundTruth::compute(&p, Func::SimLine, &mut oracle, &x)?;
    let chain = truth.chain.clone();
    oracle.clear_log();
    let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 40)?;
    assert!(report.success);

    let ctx = MachineRoundContext { machine: 0, round: 0, frontier: 0, frontier_word: None };
    let targets = warmup_window(&p, &chain, 1, p.v.min(p.w));
    println!("{} warm-up targets in the opening window", targets.len());

    let blob = encode_warmup(&p, &strat, &oracle, &x, &report, &ctx, &tape, &targets, 1)?;
    println!("section   payload  header");
    for s in &blob.sections {
        println!("{:<9} {:>7}  {:>6}", section_name(s.id), s.payload_bits, s.header_bits);
    }
    let naive = (p.v * p.u) as usize + ((p.n as usize) << p.n) + p.s as usize;
    println!(
        "payload {} bits vs {} naive (table + all inputs + memory): {} bits saved",
        blob.payload_bits(),
        naive,
        naive - blob.payload_bits()
    );
    let queried: std::collections::BTreeSet<u64> =
        report.machine_queries(0, 0).iter().copied().collect();
    let hits = targets.iter().filter(|t| queried.contains(&t.word)).count() as u32;
    assert_eq!(blob.payload_bits(), warmup_bound_bits(&p, hits));
    assert!(blob.payload_bits() < naive, "the round's queries paid for themselves");

    let (table, x_back) = decode_warmup(&p, &strat, &tape, &blob)?;
    assert_eq!(x_back, x);
    assert_eq!(table, oracle.dump_table()?);
    println!("decode recovered the exact table and input vector");
    Ok(())
}
