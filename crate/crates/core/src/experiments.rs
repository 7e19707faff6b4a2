//! Batch experiment drivers.
//!
//! Every driver derives one sub-seed per row from the master seed, runs
//! rows in parallel, and emits rows sorted by index, so output is
//! byte-deterministic for a given (spec, master seed) regardless of thread
//! count. Aggregate rows carry the master seed; per-trial rows carry their
//! own sub-seed, enough to replay that row alone.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::chain::{Func, InputVector, NodeState, Params};
use crate::compression::{
    self, enum_bound_bits, pick_machine_round, warmup_bound_bits,
    warmup_window, EncodingBlob, MachineRoundContext, Scheme,
};
use crate::mpc::{self, DistPolicy, GroundTruth, RunReport, Strategy, Tape};
use crate::oracle::{Mode, Oracle, OracleSeed, QueryTag};
use crate::ram_eval::{self, EvalResult};
use crate::strategies::{greedy_probe, jump_trial, SegmentStrategy, TokenStrategy};
use crate::Error;

/// Column-checked CSV accumulator rendering with `\n` line endings.
pub struct Csv {
    cols: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(cols: &[&str]) -> Csv {
        Csv { cols: cols.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.cols.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.cols.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<(), Error> {
        Ok(fs::write(path, self.render())?)
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Per-trial seeds: (oracle, input rng, tape, auxiliary rng).
fn trial_seeds(master: &OracleSeed, t: u64) -> (OracleSeed, OracleSeed, OracleSeed, OracleSeed) {
    let ts = master.subseed(t);
    (ts.subseed(0), ts.subseed(1), ts.subseed(2), ts.subseed(3))
}

fn fresh_instance(
    p: &Params,
    seeds: &(OracleSeed, OracleSeed, OracleSeed, OracleSeed),
    mode: Mode,
) -> Result<(Oracle, InputVector, Tape), Error> {
    let oracle = Oracle::new(seeds.0, p.n, mode)?;
    let mut rng = seeds.1.rng();
    let x = InputVector::random(&mut rng, p);
    let tape = Tape::new(seeds.2);
    Ok((oracle, x, tape))
}

pub struct EvalSuite {
    pub csv: Csv,
    /// Every trial issued exactly `w` oracle queries.
    pub all_exact: bool,
}

/// Evaluates `trials` random instances, one row each.
pub fn eval_suite(
    p: &Params,
    func: Func,
    master: &OracleSeed,
    trials: u64,
    mode: Mode,
) -> Result<EvalSuite, Error> {
    p.validate_for(func)?;
    let rows: Vec<(u64, String, usize, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seeds = trial_seeds(master, t);
            let (mut oracle, x, _) = fresh_instance(p, &seeds, mode)?;
            let res = ram_eval::eval(p, func, &mut oracle, &x, QueryTag::Eval)?;
            Ok((t, master.subseed(t).to_hex(), res.queries.len(), res.output))
        })
        .collect::<Result<_, Error>>()?;
    let mut csv = Csv::new(&["trial", "seed", "queries", "output_hex"]);
    let mut all_exact = true;
    for (t, seed, queries, output) in rows {
        all_exact &= queries == p.w as usize;
        csv.push(vec![t.to_string(), seed, queries.to_string(), format!("{output:x}")]);
    }
    Ok(EvalSuite { csv, all_exact })
}

/// Node-by-node trace of one evaluation: the state each query was made
/// from, the query word, and its answer.
pub fn trace_csv(oracle: &Oracle, res: &EvalResult) -> Result<Csv, Error> {
    let mut csv = Csv::new(&["i", "ell", "r_hex", "z_hex", "query_hex", "answer_hex"]);
    for (i, &query) in res.queries.iter().enumerate() {
        let st: NodeState = res.trace[i];
        let answer = oracle.answer(query)?;
        csv.push(vec![
            st.index.to_string(),
            st.ell.to_string(),
            format!("{:x}", st.r),
            format!("{:x}", st.z),
            format!("{query:x}"),
            format!("{answer:x}"),
        ]);
    }
    Ok(csv)
}

/// Per machine-round accounting of a finished run.
pub fn mpc_report_csv(report: &RunReport) -> Csv {
    let mut csv = Csv::new(&[
        "round",
        "machine",
        "queries_issued",
        "new_correct_entries",
        "messages_out_bits",
        "output_claimed",
    ]);
    for (k, machines) in report.rounds.iter().enumerate() {
        for (i, mr) in machines.iter().enumerate() {
            csv.push(vec![
                k.to_string(),
                i.to_string(),
                mr.queries.len().to_string(),
                mr.new_correct.to_string(),
                mr.messages_out_bits.to_string(),
                mr.claim.map(|c| format!("{c:x}")).unwrap_or_default(),
            ]);
        }
    }
    csv
}

pub struct SweepSpec {
    pub n: u32,
    pub u: u32,
    pub w_list: Vec<u32>,
    pub b_list: Vec<u32>,
    pub m_list: Vec<u32>,
    pub trials: u64,
    /// Round cap; defaults to expected + 2 per cell.
    pub rounds_cap: Option<u32>,
}

pub struct SweepOutcome {
    pub csv: Csv,
    /// Every valid cell given enough rounds succeeded in exactly
    /// `ceil(w/b) + 1` rounds, every trial.
    pub all_match: bool,
}

struct SweepCell {
    row: u64,
    w: u32,
    b: u32,
    m: u32,
}

/// Segment-strategy round-count sweep over a (w, b, m) grid with
/// `v = m * b` and `q = b`.
pub fn run_sweep(spec: &SweepSpec, master: &OracleSeed) -> Result<SweepOutcome, Error> {
    let mut cells = Vec::new();
    for &w in &spec.w_list {
        for &b in &spec.b_list {
            for &m in &spec.m_list {
                cells.push(SweepCell { row: cells.len() as u64, w, b, m });
            }
        }
    }

    struct CellResult {
        p: Params,
        expected: u32,
        mean_rounds: f64,
        success_rate: f64,
        matched: bool,
        capped: bool,
        skipped: Option<String>,
    }

    let results: Vec<(u64, CellResult)> = cells
        .par_iter()
        .map(|cell| {
            let v = cell.m * cell.b;
            let mut p = Params {
                n: spec.n,
                u: spec.u,
                v,
                w: cell.w,
                m: cell.m,
                s: 0,
                q: cell.b,
                d: 1,
            };
            let strat = SegmentStrategy { b: cell.b };
            p.s = strat.required_bits(&p) as u32;
            let expected = cell.w.div_ceil(cell.b) + 1;
            let cap = spec.rounds_cap.unwrap_or(expected + 2);
            let base = CellResult {
                p,
                expected,
                mean_rounds: 0.0,
                success_rate: 0.0,
                matched: true,
                capped: cap < expected,
                skipped: None,
            };
            if let Err(e) = p.validate_simline() {
                let reason = e.to_string().replace(',', ";");
                return Ok((cell.row, CellResult { skipped: Some(reason), ..base }));
            }
            let row_seed = master.subseed(cell.row);
            let mut rounds_sum = 0u64;
            let mut successes = 0u64;
            let mut matched = true;
            for t in 0..spec.trials {
                let seeds = trial_seeds(&row_seed, t);
                let (mut oracle, x, tape) = fresh_instance(&p, &seeds, Mode::Lazy)?;
                let truth = GroundTruth::compute(&p, Func::SimLine, &mut oracle, &x)?;
                let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, cap)?;
                rounds_sum += report.rounds_used as u64;
                successes += report.success as u64;
                matched &= report.success && report.rounds_used == expected;
            }
            Ok((
                cell.row,
                CellResult {
                    mean_rounds: rounds_sum as f64 / spec.trials as f64,
                    success_rate: successes as f64 / spec.trials as f64,
                    matched,
                    ..base
                },
            ))
        })
        .collect::<Result<_, Error>>()?;

    let mut csv = Csv::new(&[
        "row", "w", "v", "u", "m", "b", "s", "q", "trials", "expected_rounds",
        "mean_rounds", "success_rate", "seed", "skipped_reason",
    ]);
    let mut all_match = true;
    for (row, r) in results {
        let seed_hex = master.subseed(row).to_hex();
        match r.skipped {
            Some(reason) => csv.push(vec![
                row.to_string(),
                r.p.w.to_string(),
                r.p.v.to_string(),
                r.p.u.to_string(),
                r.p.m.to_string(),
                (r.p.q).to_string(),
                r.p.s.to_string(),
                r.p.q.to_string(),
                spec.trials.to_string(),
                String::new(),
                String::new(),
                String::new(),
                seed_hex,
                reason,
            ]),
            None => {
                if !r.capped {
                    all_match &= r.matched;
                }
                csv.push(vec![
                    row.to_string(),
                    r.p.w.to_string(),
                    r.p.v.to_string(),
                    r.p.u.to_string(),
                    r.p.m.to_string(),
                    (r.p.q).to_string(),
                    r.p.s.to_string(),
                    r.p.q.to_string(),
                    spec.trials.to_string(),
                    r.expected.to_string(),
                    f6(r.mean_rounds),
                    f6(r.success_rate),
                    seed_hex,
                    String::new(),
                ]);
            }
        }
    }
    Ok(SweepOutcome { csv, all_match })
}

pub struct DecaySpec {
    pub p: Params,
    /// Blocks the probe machine owns; the geometric ratio is `owned / v`.
    pub owned: u32,
    pub trials: u64,
    pub j_max: u32,
}

pub struct DecayOutcome {
    pub csv: Csv,
    pub max_abs_z: f64,
    /// All z-scores within 3 sigma where the binomial variance is nonzero.
    pub pass: bool,
}

/// Greedy-probe advance distribution against the geometric law.
///
/// Each trial uses a fresh oracle, a uniformly drawn owned set, and starts
/// at node 2 (the first node whose demanded block is oracle-chosen).
pub fn run_decay(spec: &DecaySpec, master: &OracleSeed) -> Result<DecayOutcome, Error> {
    let p = &spec.p;
    p.validate_line()?;
    if spec.owned > p.v {
        return Err(Error::InvalidParams("owned exceeds v".into()));
    }
    if spec.j_max + 1 >= p.w {
        return Err(Error::InvalidParams("j_max needs w > j_max + 1".into()));
    }
    let ks: Vec<u32> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let seeds = trial_seeds(master, t);
            let (mut oracle, x, _) = fresh_instance(p, &seeds, Mode::Lazy)?;
            let mut aux = seeds.3.rng();
            let mut blocks: Vec<u32> = (0..p.v).collect();
            blocks.shuffle(&mut aux);
            let owned: BTreeSet<u32> = blocks[..spec.owned as usize].iter().copied().collect();
            let res = ram_eval::eval_line(p, &mut oracle, &x, QueryTag::Harness)?;
            greedy_probe(p, &mut oracle, &x, &owned, &res.trace[1], spec.j_max)
        })
        .collect::<Result<_, Error>>()?;

    let rho = spec.owned as f64 / p.v as f64;
    let n = spec.trials as f64;
    let mut csv = Csv::new(&["j", "p_emp", "p_exp", "z", "trials", "seed"]);
    let mut max_abs_z = 0.0f64;
    let mut pass = true;
    for j in 0..=spec.j_max {
        let hits = ks.iter().filter(|&&k| k >= j).count() as f64;
        let p_emp = hits / n;
        let p_exp = rho.powi(j as i32);
        let var = p_exp * (1.0 - p_exp) / n;
        let z = if var > 0.0 { (p_emp - p_exp) / var.sqrt() } else { 0.0 };
        if var > 0.0 {
            max_abs_z = max_abs_z.max(z.abs());
            pass &= z.abs() <= 3.0;
        }
        csv.push(vec![
            j.to_string(),
            f6(p_emp),
            f6(p_exp),
            f6(z),
            spec.trials.to_string(),
            master.to_hex(),
        ]);
    }
    Ok(DecayOutcome { csv, max_abs_z, pass })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum JumpMode {
    /// Small u: compare the empirical per-guess hit rate to `2^-u`.
    Rate,
    /// Large u: hits are rare; require the total under ten times its mean.
    Tail,
}

impl JumpMode {
    pub fn from_name(s: &str) -> Result<JumpMode, Error> {
        match s {
            "rate" => Ok(JumpMode::Rate),
            "tail" => Ok(JumpMode::Tail),
            _ => Err(Error::Config(format!("unknown jump mode '{s}'"))),
        }
    }
}

pub struct JumpSpec {
    pub p: Params,
    pub mode: JumpMode,
    pub window: Vec<u32>,
    pub guesses_per_trial: u32,
    pub trials: u64,
}

pub struct JumpOutcome {
    pub csv: Csv,
    pub guesses_total: u64,
    pub hits_total: u64,
    pub rate: f64,
    pub z: f64,
    pub pass: bool,
}

/// Jump-adversary hit statistics against the `2^-u` per-guess rate.
pub fn run_jump(spec: &JumpSpec, master: &OracleSeed) -> Result<JumpOutcome, Error> {
    let p = &spec.p;
    p.validate_line()?;
    let rows: Vec<(u64, u32)> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let seeds = trial_seeds(master, t);
            let (mut oracle, x, _) = fresh_instance(p, &seeds, Mode::Lazy)?;
            let res = ram_eval::eval_line(p, &mut oracle, &x, QueryTag::Harness)?;
            let mut aux = seeds.3.rng();
            let hits = jump_trial(
                p,
                &x,
                &res.trace,
                &res.queries,
                &spec.window,
                spec.guesses_per_trial,
                &mut aux,
            )?;
            Ok((t, hits))
        })
        .collect::<Result<_, Error>>()?;

    let mut csv = Csv::new(&["trial", "guesses", "hits", "seed"]);
    let mut hits_total = 0u64;
    for &(t, hits) in &rows {
        hits_total += hits as u64;
        csv.push(vec![
            t.to_string(),
            spec.guesses_per_trial.to_string(),
            hits.to_string(),
            master.subseed(t).to_hex(),
        ]);
    }
    let guesses_total = spec.trials * spec.guesses_per_trial as u64;
    let rate = hits_total as f64 / guesses_total as f64;
    let p_exp = 0.5f64.powi(p.u as i32);
    let var = p_exp * (1.0 - p_exp) / guesses_total as f64;
    let z = if var > 0.0 { (rate - p_exp) / var.sqrt() } else { 0.0 };
    let pass = match spec.mode {
        JumpMode::Rate => z.abs() <= 3.0,
        JumpMode::Tail => hits_total as f64 <= 10.0 * p_exp * guesses_total as f64,
    };
    Ok(JumpOutcome { csv, guesses_total, hits_total, rate, z, pass })
}

/// Instance family for warm-up codec trials: `SimLine` under the segment
/// strategy, two machines, window = the first `v` chain positions.
pub fn warmup_compress_setup() -> (Params, SegmentStrategy) {
    let mut p = Params { n: 12, u: 4, v: 8, w: 16, m: 2, s: 0, q: 8, d: 1 };
    let strat = SegmentStrategy::for_params(&p);
    p.s = strat.required_bits(&p) as u32;
    (p, strat)
}

/// Instance family for enumerative codec trials: `Line` under the token
/// strategy, two machines, sixteen sequences at depth 2.
pub fn enum_compress_setup() -> (Params, TokenStrategy) {
    let p = Params { n: 12, u: 4, v: 4, w: 8, m: 2, s: 64, q: 4, d: 2 };
    (p, TokenStrategy { policy: DistPolicy::RoundRobin })
}

pub struct CompressSpec {
    pub scheme: Scheme,
    pub trials: u64,
    pub alpha: u32,
    pub cap: u64,
}

pub struct CompressOutcome {
    pub csv: Csv,
    pub encoded: u64,
    pub skipped: u64,
    /// Every encoded trial stayed within its bound (roundtrips are verified
    /// inside the encoders).
    pub all_pass: bool,
    /// The last encoded blob, for file emission.
    pub last_blob: Option<EncodingBlob>,
}

struct CompressRow {
    trial: u64,
    intersect: u32,
    blob_bits: usize,
    bound_bits: usize,
    pass: bool,
    skipped: Option<String>,
    blob: Option<EncodingBlob>,
}

fn compress_trial(
    scheme: Scheme,
    p: &Params,
    strategy: &dyn Strategy,
    func: Func,
    master: &OracleSeed,
    t: u64,
    alpha: u32,
    cap: u64,
) -> Result<CompressRow, Error> {
    let seeds = trial_seeds(master, t);
    let (mut oracle, x, tape) = fresh_instance(p, &seeds, Mode::Eager)?;
    let truth = GroundTruth::compute(p, func, &mut oracle, &x)?;
    let chain = truth.chain.clone();
    oracle.clear_log();
    let report = mpc::run(p, strategy, &x, &mut oracle, &tape, &truth, 4 * p.w + 4)?;
    if !report.success {
        return Err(Error::PrecondFailed(format!("trial {t}: reference run failed")));
    }
    let empty = CompressRow {
        trial: t,
        intersect: 0,
        blob_bits: 0,
        bound_bits: 0,
        pass: false,
        skipped: None,
        blob: None,
    };
    match scheme {
        Scheme::Warmup => {
            let ctx = MachineRoundContext {
                machine: 0,
                round: 0,
                frontier: 0,
                frontier_word: None,
            };
            let targets = warmup_window(p, &chain, 1, p.v.min(p.w));
            match compression::encode_warmup(
                p, strategy, &oracle, &x, &report, &ctx, &tape, &targets, alpha,
            ) {
                Ok(blob) => {
                    let qs: BTreeSet<u64> = report
                        .machine_queries(ctx.round, ctx.machine)
                        .iter()
                        .copied()
                        .collect();
                    let intersect =
                        targets.iter().filter(|tg| qs.contains(&tg.word)).count() as u32;
                    let blob_bits = blob.payload_bits();
                    let bound_bits = warmup_bound_bits(p, intersect);
                    Ok(CompressRow {
                        intersect,
                        blob_bits,
                        bound_bits,
                        pass: blob_bits <= bound_bits,
                        blob: Some(blob),
                        ..empty
                    })
                }
                Err(Error::NoIntersection { .. }) => {
                    Ok(CompressRow { skipped: Some("no_intersection".into()), ..empty })
                }
                Err(e) => Err(e),
            }
        }
        Scheme::Enumerative => {
            let Some(ctx) = pick_machine_round(&report, &chain) else {
                return Ok(CompressRow { skipped: Some("no_frontier_round".into()), ..empty });
            };
            let blob = compression::encode_enumerative(
                p, strategy, &oracle, &x, &report, &ctx, &tape, cap,
            )?;
            let reach = compression::compute_reachable_set(
                p, strategy, &oracle, &x, &report, &ctx, &tape, cap,
            )?;
            let sound = reach
                .recoveries
                .iter()
                .all(|&(_, _, blk)| reach.members.contains(&blk));
            let blob_bits = blob.payload_bits();
            let spelled =
                blob.section(compression::SEC_INPUTS)?.payload_bits as u32 / p.u;
            let bound_bits = enum_bound_bits(p, p.v - spelled);
            Ok(CompressRow {
                intersect: reach.members.len() as u32,
                blob_bits,
                bound_bits,
                pass: blob_bits <= bound_bits && sound,
                blob: Some(blob),
                ..empty
            })
        }
    }
}

/// Codec conformance trials: encode, verify the roundtrip, and compare
/// payload bits against the scheme's bound.
pub fn run_compress(spec: &CompressSpec, master: &OracleSeed) -> Result<CompressOutcome, Error> {
    let rows: Vec<CompressRow> = match spec.scheme {
        Scheme::Warmup => {
            let (p, strat) = warmup_compress_setup();
            (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    compress_trial(
                        spec.scheme, &p, &strat, Func::SimLine, master, t, spec.alpha, spec.cap,
                    )
                })
                .collect::<Result<_, Error>>()?
        }
        Scheme::Enumerative => {
            let (p, strat) = enum_compress_setup();
            (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    compress_trial(
                        spec.scheme, &p, &strat, Func::Line, master, t, spec.alpha, spec.cap,
                    )
                })
                .collect::<Result<_, Error>>()?
        }
    };

    let mut csv = Csv::new(&[
        "trial", "intersect_size", "blob_bits", "bound_bits", "pass", "seed", "skipped_reason",
    ]);
    let mut encoded = 0u64;
    let mut skipped = 0u64;
    let mut all_pass = true;
    let mut last_blob = None;
    for row in rows {
        let seed_hex = master.subseed(row.trial).to_hex();
        match row.skipped {
            Some(reason) => {
                skipped += 1;
                csv.push(vec![
                    row.trial.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    seed_hex,
                    reason,
                ]);
            }
            None => {
                encoded += 1;
                all_pass &= row.pass;
                if row.blob.is_some() {
                    last_blob = row.blob;
                }
                csv.push(vec![
                    row.trial.to_string(),
                    row.intersect.to_string(),
                    row.blob_bits.to_string(),
                    row.bound_bits.to_string(),
                    row.pass.to_string(),
                    seed_hex,
                    String::new(),
                ]);
            }
        }
    }
    Ok(CompressOutcome { csv, encoded, skipped, all_pass: all_pass && encoded > 0, last_blob })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_renders_deterministically() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.push(vec!["1".into(), f6(0.5)]);
        csv.push(vec!["2".into(), String::new()]);
        assert_eq!(csv.render(), "a,b\n1,0.500000\n2,\n");
    }

    #[test]
    #[should_panic(expected = "row width mismatch")]
    fn csv_rejects_ragged_rows() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.push(vec!["1".into()]);
    }

    #[test]
    fn eval_suite_counts_queries() {
        let p = Params::new(24, 16, 8);
        let master = OracleSeed::from_u64(70);
        let suite = eval_suite(&p, Func::Line, &master, 10, Mode::Lazy).unwrap();
        assert!(suite.all_exact);
        assert_eq!(suite.csv.rows().len(), 10);
        // repeat run is byte-identical
        let again = eval_suite(&p, Func::Line, &master, 10, Mode::Lazy).unwrap();
        assert_eq!(suite.csv.render(), again.csv.render());
    }

    #[test]
    fn sweep_small_grid_matches_closed_form() {
        let spec = SweepSpec {
            n: 12,
            u: 4,
            w_list: vec![1, 6, 8],
            b_list: vec![1, 2],
            m_list: vec![1, 2],
            trials: 2,
            rounds_cap: None,
        };
        let master = OracleSeed::from_u64(71);
        let out = run_sweep(&spec, &master).unwrap();
        assert!(out.all_match);
        // cell (w, b=1, m=1) has v = 1: skipped with a reason
        let skipped: Vec<_> =
            out.csv.rows().iter().filter(|r| !r[13].is_empty()).collect();
        assert_eq!(skipped.len(), 3, "one v=1 cell per w");
        let out2 = run_sweep(&spec, &master).unwrap();
        assert_eq!(out.csv.render(), out2.csv.render());
    }

    #[test]
    fn sweep_under_capped_rounds_fails_cells() {
        let spec = SweepSpec {
            n: 12,
            u: 4,
            w_list: vec![8],
            b_list: vec![2],
            m_list: vec![2],
            trials: 2,
            rounds_cap: Some(2),
        };
        let master = OracleSeed::from_u64(72);
        let out = run_sweep(&spec, &master).unwrap();
        assert!(out.all_match, "capped cells are not counted as mismatches");
        let row = &out.csv.rows()[0];
        assert_eq!(row[11], f6(0.0), "success rate 0 with too few rounds");
    }

    #[test]
    fn decay_trivial_ratios() {
        let p = Params { n: 24, u: 8, v: 8, w: 16, m: 1, s: 64, q: 16, d: 1 };
        let master = OracleSeed::from_u64(73);
        // owning everything: P[k >= j] = 1 for all j
        let all = run_decay(&DecaySpec { p, owned: 8, trials: 50, j_max: 3 }, &master).unwrap();
        assert!(all.pass);
        for row in all.csv.rows() {
            assert_eq!(row[1], f6(1.0));
            assert_eq!(row[2], f6(1.0));
        }
        // owning nothing: k = 0 always
        let none = run_decay(&DecaySpec { p, owned: 0, trials: 50, j_max: 3 }, &master).unwrap();
        assert!(none.pass);
        assert_eq!(none.csv.rows()[1][1], f6(0.0));
        assert_eq!(none.csv.rows()[0][3], f6(0.0), "j = 0 pins z to 0");
    }

    #[test]
    fn jump_rate_small_sample() {
        let p = Params { n: 12, u: 4, v: 4, w: 8, m: 1, s: 64, q: 8, d: 1 };
        let spec = JumpSpec {
            p,
            mode: JumpMode::Rate,
            window: (4..=8).collect(),
            guesses_per_trial: 5,
            trials: 2000,
        };
        let master = OracleSeed::from_u64(74);
        let out = run_jump(&spec, &master).unwrap();
        assert_eq!(out.guesses_total, 10000);
        assert!(out.pass, "z = {}", out.z);
        let again = run_jump(&spec, &master).unwrap();
        assert_eq!(out.csv.render(), again.csv.render());
    }

    #[test]
    fn compress_trials_pass_both_schemes() {
        let master = OracleSeed::from_u64(75);
        let warm = run_compress(
            &CompressSpec { scheme: Scheme::Warmup, trials: 5, alpha: 1, cap: 1 << 16 },
            &master,
        )
        .unwrap();
        assert!(warm.all_pass);
        assert_eq!(warm.encoded + warm.skipped, 5);
        assert!(warm.last_blob.is_some());
        let en = run_compress(
            &CompressSpec { scheme: Scheme::Enumerative, trials: 5, alpha: 1, cap: 1 << 16 },
            &master,
        )
        .unwrap();
        assert!(en.all_pass);
        assert_eq!(en.encoded, 5);
    }
}
