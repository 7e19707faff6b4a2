//! Measures how far a machine owning a random rho-fraction of the blocks
//! can walk unaided. Each step continues only if the next demanded block is
//! owned, so the advance count decays geometrically with ratio rho.
//!
//!     cargo run --example decay_probe

use linempc::experiments::{run_decay, DecaySpec};
use linempc::{Error, OracleSeed, Params};

fn main() -> Result<(), Error> {
    let p = Params { n: 24, u: 8, v: 16, w: 16, m: 1, s: 64, q: 16, d: 1 };
    let spec = DecaySpec { p, owned: 8, trials: 20000, j_max: 5 };
    let master = OracleSeed::from_u64(17);

    let out = run_decay(&spec, &master)?;
    println!(
        "{} trials, {} of {} blocks owned (rho = {})",
        spec.trials,
        spec.owned,
        p.v,
        spec.owned as f64 / p.v as f64
    );
    println!("{}", out.csv.render());
    println!("max |z| = {:.3}, within 3 sigma: {}", out.max_abs_z, out.pass);
    assert!(out.pass);
    Ok(())
}
