//! Drives the token strategy over the pseudorandom-access chain: whoever
//! owns the demanded block walks as far as its ownership allows, then
//! passes a compact token to the next owner.
//!
//!     cargo run --example run_token

use linempc::mpc::{self, DistPolicy, GroundTruth, Tape};
use linempc::strategies::TokenStrategy;
use linempc::{Error, Func, InputVector, Mode, Oracle, OracleSeed, Params};

fn main() -> Result<(), Error> {
    let seed = OracleSeed::from_u64(5);
    let p = Params { n: 18, u: 5, v: 8, w: 16, m: 4, s: 96, q: 16, d: 1 };
    p.validate_for(Func::Line)?;

    for policy in [DistPolicy::RoundRobin, DistPolicy::Contiguous] {
        let mut oracle = Oracle::new(seed.subseed(0), p.n, Mode::Lazy)?;
        let mut rng = seed.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);
        let tape = Tape::new(seed.subseed(2));
        let truth = GroundTruth::compute(&p, Func::Line, &mut oracle, &x)?;

        println!("{policy:?} ownership:");
        let strat = TokenStrategy { policy };
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 80)?;
        for (k, round) in report.rounds.iter().enumerate() {
            let active: Vec<String> = round
                .iter()
                .enumerate()
                .filter(|(_, mr)| !mr.queries.is_empty())
                .map(|(i, mr)| format!("machine {i} walked {}", mr.queries.len()))
                .collect();
            if !active.is_empty() {
                println!("  round {k}: {}", active.join(", "));
            }
        }
        println!(
            "  success={} rounds_used={} total_queries={} (chain length {})\n",
            report.success,
            report.rounds_used,
            report.total_queries(),
            p.w
        );
        assert!(report.success);
        // every chain node is queried exactly once across the whole run
        assert_eq!(report.total_queries(), p.w as usize);
    }
    Ok(())
}
