//! Drives the segment strategy through the round engine: machines own
//! contiguous block segments of the interleaved chain, advance locally, and
//! hand the running state to the next owner. Finishes in ceil(w/b) + 1
//! rounds.
//!
//!     cargo run --example run_segment

use linempc::mpc::{self, GroundTruth, Tape};
use linempc::strategies::SegmentStrategy;
use linempc::{Error, Func, InputVector, Mode, Oracle, OracleSeed, Params};

fn main() -> Result<(), Error> {
    let seed = OracleSeed::from_u64(3);
    let mut p = Params { n: 16, u: 5, v: 12, w: 24, m: 3, s: 0, q: 8, d: 1 };
    let strat = SegmentStrategy::for_params(&p);
    p.s = strat.required_bits(&p) as u32;
    p.validate_for(Func::SimLine)?;
    println!(
        "simline with w={} nodes, {} machines x {} blocks, s={} bits, q={}",
        p.w, p.m, strat.b, p.s, p.q
    );

    let mut oracle = Oracle::new(seed.subseed(0), p.n, Mode::Lazy)?;
    let mut rng = seed.subseed(1).rng();
    let x = InputVector::random(&mut rng, &p);
    let tape = Tape::new(seed.subseed(2));
    let truth = GroundTruth::compute(&p, Func::SimLine, &mut oracle, &x)?;

    let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 40)?;
    println!("round  machine  queries  new_entries  bits_out  claim");
    for (k, round) in report.rounds.iter().enumerate() {
        for (i, mr) in round.iter().enumerate() {
            let claim = mr.claim.map(|c| format!("{c:x}")).unwrap_or_default();
            println!(
                "{:>5}  {:>7}  {:>7}  {:>11}  {:>8}  {}",
                k, i, mr.queries.len(), mr.new_correct, mr.messages_out_bits, claim
            );
        }
    }
    println!(
        "success={} rounds_used={} (expected {})",
        report.success,
        report.rounds_used,
        p.w.div_ceil(strat.b) + 1
    );
    assert!(report.success);
    assert_eq!(report.rounds_used, p.w.div_ceil(strat.b) + 1);
    Ok(())
}
