//! Shows how a guess sequence patches the oracle past a frontier: the
//! frontier answer's block index field is rewritten, the path words chain
//! through the base salts, and every other word keeps its base answer.
//!
//!     cargo run --example oracle_patching

use std::collections::BTreeSet;

use linempc::chain::{line_answer_r, pack_line_query, unpack_line_answer};
use linempc::compression::{all_sequences, build_patched_oracle, path_words};
use linempc::ram_eval;
use linempc::{Error, Func, InputVector, Mode, Oracle, OracleSeed, Params, QueryTag};

fn main() -> Result<(), Error> {
    let seed = OracleSeed::from_u64(11);
    let p = Params { n: 12, u: 4, v: 4, w: 8, m: 1, s: 64, q: 8, d: 2 };
    p.validate_for(Func::Line)?;

    let mut oracle = Oracle::new(seed.subseed(0), p.n, Mode::Eager)?;
    let mut rng = seed.subseed(1).rng();
    let x = InputVector::random(&mut rng, &p);
    let chain = ram_eval::eval_line(&p, &mut oracle, &x, QueryTag::Eval)?.queries;

    let frontier = 3u32;
    let fw = chain[frontier as usize - 1];
    println!("frontier at position {frontier}, word {fw:03x}");

    let seq = vec![2u32, 1u32];
    let (patched, words) =
        build_patched_oracle(&p, &oracle, &x, frontier, Some(fw), &seq)?;
    println!("guess sequence {seq:?} lays path words {words:03x?}");

    // the frontier answer now claims the next node consumes block seq[0]
    let base_a = oracle.answer(fw)?;
    let patched_a = patched.answer(fw)?;
    let (ell_base, r_base, _) = unpack_line_answer(&p, base_a);
    let (ell_patched, r_patched, _) = unpack_line_answer(&p, patched_a);
    println!(
        "frontier answer {base_a:03x} (block {ell_base}) -> {patched_a:03x} (block {ell_patched})"
    );
    assert_eq!(ell_patched, seq[0]);
    assert_eq!(r_base, r_patched, "only the block index field moves");

    // walking the patched oracle from the frontier follows the guesses
    let mut pos = frontier + 1;
    let mut r = line_answer_r(&p, base_a);
    for (t, &blk) in seq.iter().enumerate() {
        let word = pack_line_query(&p, pos, x.get(blk), r)?;
        assert_eq!(word, words[t], "path word {t} matches the walk");
        let a = patched.answer(word)?;
        r = line_answer_r(&p, a);
        println!("  position {pos}: consume block {blk}, query {word:03x}, answer {a:03x}");
        pos += 1;
    }

    // off-path words are untouched
    let mut untouched = 0;
    for w in 0..1u64 << p.n {
        if w != fw && !words.contains(&w) && oracle.answer(w)? == patched.answer(w)? {
            untouched += 1;
        }
    }
    println!("{untouched} of {} words keep their base answer", 1u64 << p.n);
    assert_eq!(untouched, (1u64 << p.n) - 1 - seq.len() as u64);

    // every sequence lays its own path, all within d positions of the frontier
    let seqs = all_sequences(p.v, p.d, 1 << 16)?;
    let mut all_words = BTreeSet::new();
    for s in &seqs {
        for w in path_words(&p, &oracle, &x, frontier, Some(fw), s)? {
            all_words.insert(w);
        }
    }
    println!("{} sequences lay {} distinct path words", seqs.len(), all_words.len());
    Ok(())
}
