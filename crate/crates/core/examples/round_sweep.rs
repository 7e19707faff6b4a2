//! Sweeps the segment strategy over a (w, b, m) grid and checks every
//! finishing round count against the closed form ceil(w/b) + 1.
//!
//!     cargo run --example round_sweep

use linempc::experiments::{run_sweep, SweepSpec};
use linempc::{Error, OracleSeed};

fn main() -> Result<(), Error> {
    let spec = SweepSpec {
        n: 12,
        u: 4,
        w_list: vec![1, 2, 4, 8, 16, 32],
        b_list: vec![1, 2, 4, 8],
        m_list: vec![1, 2, 4],
        trials: 2,
        rounds_cap: None,
    };
    let master = OracleSeed::from_u64(13);

    let out = run_sweep(&spec, &master)?;
    for line in out.csv.render().lines() {
        println!("{line}");
    }
    println!("all cells match the closed form: {}", out.all_match);
    assert!(out.all_match);
    Ok(())
}
