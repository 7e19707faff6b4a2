//! Reference single-machine evaluators for both chain functions.
//!
//! Each evaluator issues exactly `w` oracle queries and records the full
//! node trace, so harnesses can read off intermediate salts and block
//! indices without re-deriving them.

use crate::chain::{
    pack_line_query, pack_simline_query, simline_block_index, unpack_line_answer,
    unpack_simline_answer, Func, InputVector, NodeState, Params,
};
use crate::oracle::{Oracle, QueryTag};
use crate::Error;

/// Outcome of a chain evaluation.
#[derive(Clone, Debug)]
pub struct EvalResult {
    /// Full n-bit answer to the w-th query.
    pub output: u64,
    /// Node states 1 through w+1.
    pub trace: Vec<NodeState>,
    /// The w query words, in issue order.
    pub queries: Vec<u64>,
}

fn check_input(p: &Params, x: &InputVector) -> Result<(), Error> {
    if x.len() != p.v {
        return Err(Error::LengthMismatch { expected: p.v as usize, got: x.len() as usize });
    }
    if x.u() != p.u {
        return Err(Error::InvalidParams(format!(
            "input block size {} does not match u = {}",
            x.u(),
            p.u
        )));
    }
    Ok(())
}

/// Walks the `Line` chain: each answer names the next block to consume.
pub fn eval_line(
    p: &Params,
    oracle: &mut Oracle,
    x: &InputVector,
    tag: QueryTag,
) -> Result<EvalResult, Error> {
    p.validate_line()?;
    check_input(p, x)?;
    let mut trace = Vec::with_capacity(p.w as usize + 1);
    trace.push(NodeState { index: 1, ell: 0, r: 0, z: 0 });
    let (mut ell, mut r) = (0u32, 0u64);
    let mut queries = Vec::with_capacity(p.w as usize);
    let mut last = 0u64;
    for i in 1..=p.w {
        let word = pack_line_query(p, i, x.get(ell), r)?;
        queries.push(word);
        last = oracle.query(word, tag)?;
        let (e, rr, z) = unpack_line_answer(p, last);
        ell = e;
        r = rr;
        trace.push(NodeState { index: i + 1, ell: e, r: rr, z });
    }
    Ok(EvalResult { output: last, trace, queries })
}

/// Walks the `SimLine` chain: node `i` consumes block `(i-1) mod v`.
pub fn eval_simline(
    p: &Params,
    oracle: &mut Oracle,
    x: &InputVector,
    tag: QueryTag,
) -> Result<EvalResult, Error> {
    p.validate_simline()?;
    check_input(p, x)?;
    let mut trace = Vec::with_capacity(p.w as usize + 1);
    trace.push(NodeState { index: 1, ell: 0, r: 0, z: 0 });
    let mut r = 0u64;
    let mut queries = Vec::with_capacity(p.w as usize);
    let mut last = 0u64;
    for i in 1..=p.w {
        let blk = simline_block_index(p, i);
        let word = pack_simline_query(p, x.get(blk), r)?;
        queries.push(word);
        last = oracle.query(word, tag)?;
        let (rr, z) = unpack_simline_answer(p, last);
        r = rr;
        trace.push(NodeState { index: i + 1, ell: simline_block_index(p, i + 1), r: rr, z });
    }
    Ok(EvalResult { output: last, trace, queries })
}

pub fn eval(
    p: &Params,
    f: Func,
    oracle: &mut Oracle,
    x: &InputVector,
    tag: QueryTag,
) -> Result<EvalResult, Error> {
    match f {
        Func::Line => eval_line(p, oracle, x, tag),
        Func::SimLine => eval_simline(p, oracle, x, tag),
    }
}

/// The sequence of correct query words, the ground truth the simulator and
/// the codecs measure progress against.
pub fn correct_chain(
    p: &Params,
    f: Func,
    oracle: &mut Oracle,
    x: &InputVector,
    tag: QueryTag,
) -> Result<Vec<u64>, Error> {
    Ok(eval(p, f, oracle, x, tag)?.queries)
}
