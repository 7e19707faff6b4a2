//! Thin command-line front end over the library drivers.
//!
//! Exit codes: 0 all assertions passed, 1 assertion failure, 2
//! configuration error.

use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};

use linempc::compression::{Scheme, DEFAULT_ENUM_CAP};
use linempc::config::Config;
use linempc::experiments::{
    self, CompressSpec, DecaySpec, JumpMode, JumpSpec, SweepSpec,
};
use linempc::formats;
use linempc::mpc::{self, DistPolicy, GroundTruth, Strategy, Tape};
use linempc::ram_eval;
use linempc::strategies::{SegmentStrategy, TokenStrategy};
use linempc::{Error, Func, InputVector, Mode, Oracle, OracleSeed, Params, QueryTag};

fn cli() -> Command {
    Command::new("lmpc")
        .about("Hash-chain round-complexity simulator and compression codecs")
        .subcommand_required(true)
        .arg(
            Arg::new("params")
                .long("params")
                .value_name("FILE")
                .global(true)
                .help("key = value config file"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("HEX64")
                .global(true)
                .help("64-hex-char master seed (overrides config)"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("FILE")
                .global(true)
                .help("CSV output path"),
        )
        .arg(
            Arg::new("trials")
                .long("trials")
                .value_name("N")
                .global(true)
                .help("trial count (overrides config)"),
        )
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .value_name("N")
                .global(true)
                .help("worker threads (default: all cores)"),
        )
        .subcommand(
            Command::new("eval-ram")
                .about("Evaluate one chain instance")
                .arg(Arg::new("func").long("func").value_name("line|simline").required(true))
                .arg(
                    Arg::new("input")
                        .long("input")
                        .value_name("FILE|random")
                        .required(true),
                )
                .arg(Arg::new("trace").long("trace").value_name("CSV")),
        )
        .subcommand(
            Command::new("run-mpc")
                .about("Run one strategy through the round engine")
                .arg(
                    Arg::new("strategy")
                        .long("strategy")
                        .value_name("segment|token")
                        .required(true),
                )
                .arg(
                    Arg::new("input")
                        .long("input")
                        .value_name("FILE|random")
                        .default_value("random"),
                )
                .arg(Arg::new("rounds").long("rounds").value_name("R"))
                .arg(Arg::new("report").long("report").value_name("CSV")),
        )
        .subcommand(Command::new("sweep").about("Segment round-count grid"))
        .subcommand(Command::new("decay").about("Greedy-probe advance distribution"))
        .subcommand(Command::new("jump").about("Jump-adversary hit rate"))
        .subcommand(
            Command::new("compress-check")
                .about("Codec roundtrip and length-bound trials")
                .arg(
                    Arg::new("scheme")
                        .long("scheme")
                        .value_name("warmup|enum")
                        .required(true),
                )
                .arg(Arg::new("csv").long("csv").value_name("FILE"))
                .arg(
                    Arg::new("blob-out")
                        .long("blob-out")
                        .value_name("FILE")
                        .help("write the last encoded blob"),
                ),
        )
}

fn load_config(m: &ArgMatches) -> Result<Config, Error> {
    match m.get_one::<String>("params") {
        Some(path) => Config::from_file(path),
        None => Ok(Config::default()),
    }
}

fn load_seed(m: &ArgMatches, cfg: &Config) -> Result<OracleSeed, Error> {
    if let Some(hex) = m.get_one::<String>("seed") {
        return OracleSeed::from_hex(hex).map_err(|e| Error::Config(format!("--seed: {e}")));
    }
    cfg.get_seed()?
        .ok_or_else(|| Error::Config("seed required (--seed or config key 'seed')".into()))
}

fn flag_u64(m: &ArgMatches, name: &str) -> Result<Option<u64>, Error> {
    match m.get_one::<String>(name) {
        None => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("--{name}: '{s}' is not an integer"))),
    }
}

fn trials(m: &ArgMatches, cfg: &Config, default: u64) -> Result<u64, Error> {
    Ok(flag_u64(m, "trials")?
        .or(cfg.get_u64("trials")?)
        .unwrap_or(default))
}

fn out_path(m: &ArgMatches) -> Option<&String> {
    m.get_one::<String>("out")
}

fn load_input(
    m: &ArgMatches,
    p: &Params,
    seed: &OracleSeed,
) -> Result<InputVector, Error> {
    let spec = m.get_one::<String>("input").map(String::as_str).unwrap_or("random");
    if spec == "random" {
        let mut rng = seed.subseed(1).rng();
        return Ok(InputVector::random(&mut rng, p));
    }
    let x = formats::read_input_file(spec)?;
    if x.u() != p.u || x.len() != p.v {
        return Err(Error::Config(format!(
            "input file holds {} blocks of {} bits, params want {} of {}",
            x.len(),
            x.u(),
            p.v,
            p.u
        )));
    }
    Ok(x)
}

fn cmd_eval(m: &ArgMatches) -> Result<bool, Error> {
    let cfg = load_config(m)?;
    let seed = load_seed(m, &cfg)?;
    let func = Func::from_name(m.get_one::<String>("func").unwrap())
        .map_err(|e| Error::Config(e.to_string()))?;
    let p = cfg.params()?;
    p.validate_for(func)?;
    let mode = cfg.get_mode()?.unwrap_or(Mode::Lazy);
    let mut oracle = Oracle::new(seed.subseed(0), p.n, mode)?;
    let x = load_input(m, &p, &seed)?;
    let res = ram_eval::eval(&p, func, &mut oracle, &x, QueryTag::Eval)?;
    println!(
        "func={} output={:x} queries={}",
        func.name(),
        res.output,
        res.queries.len()
    );
    if let Some(path) = m.get_one::<String>("trace") {
        experiments::trace_csv(&oracle, &res)?.write_file(path)?;
    }
    Ok(true)
}

fn cmd_run_mpc(m: &ArgMatches) -> Result<bool, Error> {
    let cfg = load_config(m)?;
    let seed = load_seed(m, &cfg)?;
    let p = cfg.params()?;
    let name = m.get_one::<String>("strategy").unwrap().as_str();
    let segment;
    let token;
    let (strategy, func): (&dyn Strategy, Func) = match name {
        "segment" => {
            let b = cfg.get_u32("blocks_per_machine")?.unwrap_or(p.v.div_ceil(p.m));
            segment = SegmentStrategy { b };
            (&segment, Func::SimLine)
        }
        "token" => {
            let policy = match cfg.get("ownership_policy") {
                Some(s) => DistPolicy::from_name(s).map_err(|e| Error::Config(e.to_string()))?,
                None => DistPolicy::RoundRobin,
            };
            token = TokenStrategy { policy };
            (&token, Func::Line)
        }
        other => return Err(Error::Config(format!("unknown strategy '{other}'"))),
    };
    p.validate_for(func)?;
    let mode = cfg.get_mode()?.unwrap_or(Mode::Lazy);
    let mut oracle = Oracle::new(seed.subseed(0), p.n, mode)?;
    let x = load_input(m, &p, &seed)?;
    let tape = Tape::new(seed.subseed(2));
    let truth = GroundTruth::compute(&p, func, &mut oracle, &x)?;
    let rounds = flag_u64(m, "rounds")?
        .map(|r| r as u32)
        .or(cfg.get_u32("rounds")?)
        .unwrap_or(4 * p.w + 4);
    let report = mpc::run(&p, strategy, &x, &mut oracle, &tape, &truth, rounds)?;
    println!(
        "strategy={} success={} rounds_used={} queries={} violations={}",
        name,
        report.success,
        report.rounds_used,
        report.total_queries(),
        report.violations.len()
    );
    for v in &report.violations {
        println!("violation: {v}");
    }
    if let Some(path) = m.get_one::<String>("report") {
        experiments::mpc_report_csv(&report).write_file(path)?;
    }
    Ok(report.success)
}

fn cmd_sweep(m: &ArgMatches) -> Result<bool, Error> {
    let cfg = load_config(m)?;
    let seed = load_seed(m, &cfg)?;
    let spec = SweepSpec {
        n: cfg.get_u32("n")?.unwrap_or(12),
        u: cfg.get_u32("u")?.unwrap_or(4),
        w_list: cfg.get_list_u32("w_list")?.unwrap_or_else(|| (1..=16).collect()),
        b_list: cfg.get_list_u32("b_list")?.unwrap_or_else(|| vec![1, 2, 4, 8]),
        m_list: cfg.get_list_u32("m_list")?.unwrap_or_else(|| vec![1, 2, 4]),
        trials: trials(m, &cfg, 2)?,
        rounds_cap: cfg.get_u32("rounds")?,
    };
    let out = experiments::run_sweep(&spec, &seed)?;
    println!(
        "cells={} trials_per_cell={} all_match={}",
        out.csv.rows().len(),
        spec.trials,
        out.all_match
    );
    if let Some(path) = out_path(m) {
        out.csv.write_file(path)?;
    }
    Ok(out.all_match)
}

fn cmd_decay(m: &ArgMatches) -> Result<bool, Error> {
    let cfg = load_config(m)?;
    let seed = load_seed(m, &cfg)?;
    let p = if cfg.get("n").is_some() {
        cfg.params()?
    } else {
        Params { n: 24, u: 8, v: 16, w: 16, m: 1, s: 64, q: 16, d: 1 }
    };
    let spec = DecaySpec {
        p,
        owned: cfg.get_u32("owned")?.unwrap_or(p.v / 2),
        trials: trials(m, &cfg, 20000)?,
        j_max: cfg.get_u32("j_max")?.unwrap_or(5),
    };
    let out = experiments::run_decay(&spec, &seed)?;
    println!(
        "trials={} rho={:.6} max_abs_z={:.3} pass={}",
        spec.trials,
        spec.owned as f64 / p.v as f64,
        out.max_abs_z,
        out.pass
    );
    if let Some(path) = out_path(m) {
        out.csv.write_file(path)?;
    }
    Ok(out.pass)
}

fn cmd_jump(m: &ArgMatches) -> Result<bool, Error> {
    let cfg = load_config(m)?;
    let seed = load_seed(m, &cfg)?;
    let mode = match cfg.get("jump_mode") {
        Some(s) => JumpMode::from_name(s)?,
        None => JumpMode::Rate,
    };
    let p = if cfg.get("n").is_some() {
        cfg.params()?
    } else {
        match mode {
            JumpMode::Rate => Params { n: 12, u: 4, v: 4, w: 8, m: 1, s: 64, q: 8, d: 1 },
            JumpMode::Tail => Params { n: 48, u: 16, v: 4, w: 8, m: 1, s: 64, q: 64, d: 1 },
        }
    };
    let window = cfg
        .get_list_u32("guess_window")?
        .unwrap_or_else(|| (2..=p.w).collect());
    let guesses = cfg.get_u32("guesses")?.unwrap_or(match mode {
        JumpMode::Rate => window.len() as u32,
        JumpMode::Tail => 64,
    });
    let spec = JumpSpec {
        p,
        mode,
        window,
        guesses_per_trial: guesses,
        trials: trials(m, &cfg, 2000)?,
    };
    let out = experiments::run_jump(&spec, &seed)?;
    println!(
        "guesses={} hits={} rate={:.6} expected={:.6} z={:.3} pass={}",
        out.guesses_total,
        out.hits_total,
        out.rate,
        0.5f64.powi(p.u as i32),
        out.z,
        out.pass
    );
    if let Some(path) = out_path(m) {
        out.csv.write_file(path)?;
    }
    Ok(out.pass)
}

fn cmd_compress(m: &ArgMatches) -> Result<bool, Error> {
    let cfg = load_config(m)?;
    let seed = load_seed(m, &cfg)?;
    let scheme = Scheme::from_name(m.get_one::<String>("scheme").unwrap())?;
    let spec = CompressSpec {
        scheme,
        trials: trials(m, &cfg, 20)?,
        alpha: cfg.get_u32("alpha")?.unwrap_or(1),
        cap: cfg.get_u64("cap")?.unwrap_or(DEFAULT_ENUM_CAP),
    };
    let out = experiments::run_compress(&spec, &seed)?;
    println!(
        "scheme={} encoded={} skipped={} all_pass={}",
        m.get_one::<String>("scheme").unwrap(),
        out.encoded,
        out.skipped,
        out.all_pass
    );
    if let Some(path) = m.get_one::<String>("csv") {
        out.csv.write_file(path)?;
    }
    if let Some(path) = m.get_one::<String>("blob-out") {
        match &out.last_blob {
            Some(blob) => formats::write_blob_file(path, blob)?,
            None => return Err(Error::Config("no blob encoded, nothing to write".into())),
        }
    }
    Ok(out.all_pass)
}

fn dispatch() -> Result<bool, Error> {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    if let Some(jobs) = flag_u64(sub, "jobs")? {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global()
            .ok();
    }
    match name {
        "eval-ram" => cmd_eval(sub),
        "run-mpc" => cmd_run_mpc(sub),
        "sweep" => cmd_sweep(sub),
        "decay" => cmd_decay(sub),
        "jump" => cmd_jump(sub),
        "compress-check" => cmd_compress(sub),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_)
                | Error::InvalidParams(_)
                | Error::Format(_)
                | Error::Io(_)
                | Error::ModeUnsupported(_)
                | Error::InsufficientMemory => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
