//! An adversary tries to skip ahead by guessing unqueried chain entries.
//! The demanded block value is free, but the salt is an independent u-bit
//! draw, so each guess lands with probability exactly 2^-u.
//!
//!     cargo run --example jump_rate

use linempc::experiments::{run_jump, JumpMode, JumpSpec};
use linempc::{Error, OracleSeed, Params};

fn main() -> Result<(), Error> {
    let master = OracleSeed::from_u64(23);

    // small salts: measurable hit rate, checked against the binomial
    let p = Params { n: 12, u: 4, v: 4, w: 8, m: 1, s: 64, q: 8, d: 1 };
    let spec = JumpSpec {
        p,
        mode: JumpMode::Rate,
        window: (4..=8).collect(),
        guesses_per_trial: 5,
        trials: 10000,
    };
    let out = run_jump(&spec, &master)?;
    println!(
        "u={}: {} guesses, {} hits, rate {:.6} vs 2^-{} = {:.6}, z = {:.3}",
        p.u,
        out.guesses_total,
        out.hits_total,
        out.rate,
        p.u,
        0.5f64.powi(p.u as i32),
        out.z
    );
    assert!(out.pass);

    // realistic salts: hits all but vanish
    let p = Params { n: 48, u: 16, v: 4, w: 8, m: 1, s: 64, q: 8, d: 1 };
    let spec = JumpSpec {
        p,
        mode: JumpMode::Tail,
        window: (2..=8).collect(),
        guesses_per_trial: 64,
        trials: 2000,
    };
    let out = run_jump(&spec, &master)?;
    println!(
        "u={}: {} guesses, {} hits (expected {:.3})",
        p.u,
        out.guesses_total,
        out.hits_total,
        0.5f64.powi(p.u as i32) * out.guesses_total as f64
    );
    assert!(out.pass);
    Ok(())
}
