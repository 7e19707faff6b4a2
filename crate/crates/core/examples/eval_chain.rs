//! Evaluates both chain functions on one instance and prints the walk.
//!
//!     cargo run --example eval_chain

use linempc::ram_eval;
use linempc::{Error, Func, InputVector, Mode, Oracle, OracleSeed, Params, QueryTag};

fn main() -> Result<(), Error> {
    let seed = OracleSeed::from_u64(7);
    let p = Params { n: 16, u: 5, v: 6, w: 10, m: 1, s: 64, q: 10, d: 1 };

    for func in [Func::Line, Func::SimLine] {
        p.validate_for(func)?;
        let mut oracle = Oracle::new(seed.subseed(0), p.n, Mode::Lazy)?;
        let mut rng = seed.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);

        let res = ram_eval::eval(&p, func, &mut oracle, &x, QueryTag::Eval)?;
        println!("{} with n={} u={} v={} w={}", func.name(), p.n, p.u, p.v, p.w);
        println!("  node  block  salt  query  answer");
        for (i, q) in res.queries.iter().enumerate() {
            let st = res.trace[i];
            let a = oracle.answer(*q)?;
            println!(
                "  {:>4}  {:>5}  {:>4x}  {:>5x}  {:>6x}",
                st.index, st.ell, st.r, q, a
            );
        }
        println!("  output {:x} after {} queries, one per node\n", res.output, res.queries.len());
        assert_eq!(res.queries.len(), p.w as usize);
    }
    Ok(())
}
