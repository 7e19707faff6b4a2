//! Runs the enumerative compression argument once: past a frontier the
//! machine cannot know the chain, yet a productive round betrays input
//! blocks under some guess sequence. Replaying the round against every
//! patched oracle recovers them, shaving bits off the naive encoding.
//!
//!     cargo run --example compress_enumerative

use linempc::compression::{
    compute_reachable_set, decode_enumerative, encode_enumerative, enum_bound_bits,
    pick_machine_round, SEC_INPUTS, SEC_SEQUENCES,
};
use linempc::mpc::{self, DistPolicy, GroundTruth, Tape};
use linempc::ram_eval;
use linempc::strategies::TokenStrategy;
use linempc::{Error, Func, InputVector, Mode, Oracle, OracleSeed, Params, QueryTag};

fn main() -> Result<(), Error> {
    let seed = OracleSeed::from_u64(31);
    let p = Params { n: 12, u: 4, v: 4, w: 8, m: 2, s: 64, q: 4, d: 2 };
    p.validate_for(Func::Line)?;

    let mut oracle = Oracle::new(seed.subseed(0), p.n, Mode::Eager)?;
    let mut rng = seed.subseed(1).rng();
    let x = InputVector::random(&mut rng, &p);
    let tape = Tape::new(seed.subseed(2));
    let truth = GroundTruth::compute(&p, Func::Line, &mut oracle, &x)?;
    oracle.clear_log();
    let report = mpc::run(&p, &strat(), &x, &mut oracle, &tape, &truth, 40)?;
    assert!(report.success);

    let chain = ram_eval::eval_line(&p, &mut oracle.clone(), &x, QueryTag::Codec)?.queries;
    let ctx = pick_machine_round(&report, &chain).expect("no productive round past the frontier");
    println!(
        "encoding machine {} at round {}, frontier {} (word {:03x?})",
        ctx.machine, ctx.round, ctx.frontier, ctx.frontier_word
    );

    let reach = compute_reachable_set(&p, &strat(), &oracle, &x, &report, &ctx, &tape, 1 << 16)?;
    println!(
        "reachable blocks within d={} of the frontier: {:?}",
        p.d, reach.members
    );
    for (seq, depth, blk) in reach.recoveries.iter().take(4) {
        println!("  sequence {seq:?} reveals block {blk} at depth {depth}");
    }

    let blob = encode_enumerative(&p, &strat(), &oracle, &x, &report, &ctx, &tape, 1 << 16)?;
    let spelled = blob.section(SEC_INPUTS)?.payload_bits as u32 / p.u;
    let recovered = p.v - spelled;
    println!(
        "sequence section {} payload bits, {} blocks recovered by replay, {} spelled out",
        blob.section(SEC_SEQUENCES)?.payload_bits,
        recovered,
        spelled
    );
    println!(
        "payload {} bits <= bound {} bits",
        blob.payload_bits(),
        enum_bound_bits(&p, recovered)
    );
    assert!(blob.payload_bits() <= enum_bound_bits(&p, recovered));

    let (table, x_back) = decode_enumerative(&p, &strat(), &tape, &blob)?;
    assert_eq!(x_back, x);
    assert_eq!(table, oracle.dump_table()?);
    println!("decode recovered the exact table and input vector");
    Ok(())
}

fn strat() -> TokenStrategy {
    TokenStrategy { policy: DistPolicy::RoundRobin }
}
