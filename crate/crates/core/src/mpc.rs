//! Round-based MPC simulator.
//!
//! Machines hold `s`-bit memories, query the oracle up to `q` times per
//! round, and exchange messages at round barriers. Memory persists only via
//! self-messages: the engine replaces each memory wholesale with the
//! machine's inbox. Budget breaches are recorded as violations and abort the
//! run with `success = false`; over-budget queries are still answered so the
//! offending trace is visible in the log.

use std::collections::BTreeSet;

use crate::bits::BitString;
use crate::chain::{Func, InputVector, Params};
use crate::oracle::{tape_block, Oracle, OracleSeed, QueryTag};
use crate::ram_eval;
use crate::Error;

pub const DEFAULT_TAPE_CAP: u64 = 1 << 20;

/// Read-only shared random tape, derived from a seed in 256-bit blocks.
/// Reads do not consume anything; every machine sees the same bits.
#[derive(Clone, Debug)]
pub struct Tape {
    seed: OracleSeed,
    cap: u64,
}

impl Tape {
    pub fn new(seed: OracleSeed) -> Tape {
        Tape { seed, cap: DEFAULT_TAPE_CAP }
    }

    pub fn with_cap(seed: OracleSeed, cap: u64) -> Tape {
        Tape { seed, cap }
    }

    /// Reads `len` bits starting at absolute bit offset `offset`.
    pub fn read(&self, offset: u64, len: u64) -> Result<BitString, Error> {
        if len > self.cap {
            return Err(Error::CapExceeded { cap: self.cap, needed: len });
        }
        offset.checked_add(len).ok_or(Error::CapExceeded { cap: self.cap, needed: u64::MAX })?;
        let mut out = BitString::new();
        let mut pos = offset;
        while (out.len() as u64) < len {
            let block = tape_block(&self.seed, pos / 256);
            let within = (pos % 256) as usize;
            let take = (256 - within).min((len - out.len() as u64) as usize);
            for j in within..within + take {
                out.push_bit(block[j / 8] & (0x80 >> (j % 8)) != 0);
            }
            pos += take as u64;
        }
        Ok(out)
    }
}

/// A point-to-point message emitted during a step. The source is the
/// emitting machine; the engine fills it in.
#[derive(Clone, Debug)]
pub struct Message {
    pub dst: u32,
    pub payload: BitString,
}

/// What a machine sees when its round starts.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub machine: u32,
    pub round: u32,
    pub memory: BitString,
}

/// What a machine hands back: outgoing messages and at most one output claim.
#[derive(Clone, Debug, Default)]
pub struct StepOutput {
    pub messages: Vec<Message>,
    pub claim: Option<u64>,
}

/// Anything that can answer oracle queries. The engine passes the real
/// oracle; codecs substitute replay backends.
pub trait OracleLike {
    fn ask(&mut self, word: u64, tag: QueryTag) -> Result<u64, Error>;
}

impl OracleLike for Oracle {
    fn ask(&mut self, word: u64, tag: QueryTag) -> Result<u64, Error> {
        self.query(word, tag)
    }
}

/// Per-machine-round oracle access; records issued query words in order.
pub struct QueryScope<'a> {
    backend: &'a mut dyn OracleLike,
    tag: QueryTag,
    queries: Vec<u64>,
}

impl<'a> QueryScope<'a> {
    pub fn new(backend: &'a mut dyn OracleLike, tag: QueryTag) -> Self {
        QueryScope { backend, tag, queries: Vec::new() }
    }

    pub fn query(&mut self, word: u64) -> Result<u64, Error> {
        let a = self.backend.ask(word, self.tag)?;
        self.queries.push(word);
        Ok(a)
    }

    pub fn issued(&self) -> u32 {
        self.queries.len() as u32
    }

    pub fn queries(&self) -> &[u64] {
        &self.queries
    }

    pub fn into_queries(self) -> Vec<u64> {
        self.queries
    }
}

/// A strategy drives every machine. It must be stateless across calls: all
/// persistent state lives in the memory bit strings it emits.
pub trait Strategy {
    /// Initial memory contents for all `m` machines.
    fn init(&self, p: &Params, x: &InputVector) -> Result<Vec<BitString>, Error>;

    /// One machine executing one round.
    fn step(
        &self,
        p: &Params,
        env: &Envelope,
        oracle: &mut QueryScope<'_>,
        tape: &Tape,
    ) -> Result<StepOutput, Error>;
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Violation {
    /// Memory envelope exceeded `s` bits at a round boundary.
    MemoryOverflow { machine: u32, round: u32, bits: usize },
    /// More than `q` queries in one round.
    QueryBudget { machine: u32, round: u32, issued: u32 },
    /// Inbox exceeded `s` bits at routing.
    ReceiverOverflow { machine: u32, round: u32, bits: usize },
    /// Message addressed outside `0..m`.
    BadDestination { machine: u32, round: u32, dst: u32 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Violation::MemoryOverflow { machine, round, bits } => {
                write!(f, "round {round}: machine {machine} memory {bits} bits")
            }
            Violation::QueryBudget { machine, round, issued } => {
                write!(f, "round {round}: machine {machine} issued {issued} queries")
            }
            Violation::ReceiverOverflow { machine, round, bits } => {
                write!(f, "round {round}: machine {machine} would receive {bits} bits")
            }
            Violation::BadDestination { machine, round, dst } => {
                write!(f, "round {round}: machine {machine} addressed machine {dst}")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Claim {
    pub machine: u32,
    pub round: u32,
    pub value: u64,
}

/// Everything one machine did in one round.
#[derive(Clone, Debug)]
pub struct MachineRound {
    pub queries: Vec<u64>,
    pub messages_out_bits: usize,
    pub claim: Option<u64>,
    /// Correct chain entries this machine queried first, across the run.
    pub new_correct: u32,
}

/// The correct output and query chain, measured by the reference evaluator.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub output: u64,
    pub chain: Vec<u64>,
}

impl GroundTruth {
    pub fn compute(
        p: &Params,
        f: Func,
        oracle: &mut Oracle,
        x: &InputVector,
    ) -> Result<GroundTruth, Error> {
        let res = ram_eval::eval(p, f, oracle, x, QueryTag::Harness)?;
        Ok(GroundTruth { output: res.output, chain: res.queries })
    }
}

/// Full record of a run.
#[derive(Clone, Debug)]
pub struct RunReport {
    /// True when some claim matched the ground truth and no violation
    /// occurred first.
    pub success: bool,
    /// Rounds that began executing.
    pub rounds_used: u32,
    pub violations: Vec<Violation>,
    pub claims: Vec<Claim>,
    /// Per executed round, per machine.
    pub rounds: Vec<Vec<MachineRound>>,
    /// Start-of-round memories, `envelopes[k][i]` for round `k` machine `i`.
    pub envelopes: Vec<Vec<BitString>>,
}

impl RunReport {
    pub fn machine_queries(&self, round: u32, machine: u32) -> &[u64] {
        &self.rounds[round as usize][machine as usize].queries
    }

    pub fn envelope(&self, round: u32, machine: u32) -> &BitString {
        &self.envelopes[round as usize][machine as usize]
    }

    /// All query words issued in rounds `0..round`, in issue order.
    pub fn queries_before(&self, round: u32) -> Vec<u64> {
        let mut out = Vec::new();
        for k in 0..(round as usize).min(self.rounds.len()) {
            for mr in &self.rounds[k] {
                out.extend_from_slice(&mr.queries);
            }
        }
        out
    }

    pub fn total_queries(&self) -> usize {
        self.rounds.iter().flatten().map(|mr| mr.queries.len()).sum()
    }
}

/// Block ownership policies for splitting the input across machines.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DistPolicy {
    /// Block `j` to machine `j mod m`.
    RoundRobin,
    /// Blocks in chunks of `ceil(v / m)` consecutive indices.
    Contiguous,
    /// Explicit block-to-machine map of length `v`.
    Custom(Vec<u32>),
}

impl DistPolicy {
    pub fn from_name(s: &str) -> Result<DistPolicy, Error> {
        match s {
            "round_robin_blocks" => Ok(DistPolicy::RoundRobin),
            "contiguous_blocks" => Ok(DistPolicy::Contiguous),
            _ => Err(Error::Config(format!("unknown ownership policy '{s}'"))),
        }
    }

    /// Which machine owns block `j`.
    pub fn owner(&self, block: u32, p: &Params) -> u32 {
        match self {
            DistPolicy::RoundRobin => block % p.m,
            DistPolicy::Contiguous => block / p.v.div_ceil(p.m),
            DistPolicy::Custom(map) => map[block as usize],
        }
    }

    pub fn validate(&self, p: &Params) -> Result<(), Error> {
        if let DistPolicy::Custom(map) = self {
            if map.len() != p.v as usize {
                return Err(Error::LengthMismatch { expected: p.v as usize, got: map.len() });
            }
            if map.iter().any(|&o| o >= p.m) {
                return Err(Error::InvalidParams("ownership map names a missing machine".into()));
            }
        }
        Ok(())
    }
}

/// Splits the input into per-machine shares: each owned block is laid down
/// as `[index (ell_bits) | value (u)]`, indices ascending. Every block is
/// placed exactly once.
pub fn distribute_input(
    p: &Params,
    x: &InputVector,
    policy: &DistPolicy,
) -> Result<Vec<BitString>, Error> {
    policy.validate(p)?;
    if x.len() != p.v {
        return Err(Error::LengthMismatch { expected: p.v as usize, got: x.len() as usize });
    }
    let mut shares = vec![BitString::new(); p.m as usize];
    for j in 0..p.v {
        let o = policy.owner(j, p);
        let share = &mut shares[o as usize];
        share.push_bits(j as u64, p.ell_bits());
        share.push_bits(x.get(j), p.u);
    }
    for (i, share) in shares.iter().enumerate() {
        if share.len() > p.s as usize {
            return Err(Error::ShareOverflow { machine: i as u32, bits: share.len() });
        }
    }
    Ok(shares)
}

/// Concatenates message payloads into per-destination inboxes, ordered by
/// (source machine, emission order). Errors on the first inbox exceeding
/// `s` bits or a destination outside `0..m`.
pub fn route_messages(p: &Params, outboxes: &[Vec<Message>]) -> Result<Vec<BitString>, Error> {
    let mut inboxes = vec![BitString::new(); p.m as usize];
    for msgs in outboxes {
        for msg in msgs {
            if msg.dst >= p.m {
                return Err(Error::InvalidParams(format!(
                    "message destination {} out of range",
                    msg.dst
                )));
            }
            inboxes[msg.dst as usize].push_str(&msg.payload);
        }
    }
    for (i, inbox) in inboxes.iter().enumerate() {
        if inbox.len() > p.s as usize {
            return Err(Error::ReceiverOverflow { dst: i as u32, bits: inbox.len() });
        }
    }
    Ok(inboxes)
}

/// Runs `strategy` for up to `rounds_cap` rounds against `oracle` and
/// `tape`, measuring progress against `truth`.
pub fn run(
    p: &Params,
    strategy: &dyn Strategy,
    x: &InputVector,
    oracle: &mut Oracle,
    tape: &Tape,
    truth: &GroundTruth,
    rounds_cap: u32,
) -> Result<RunReport, Error> {
    let mut memories = strategy.init(p, x)?;
    if memories.len() != p.m as usize {
        return Err(Error::LengthMismatch { expected: p.m as usize, got: memories.len() });
    }
    let chain_set: BTreeSet<u64> = truth.chain.iter().copied().collect();
    let mut correct_seen: BTreeSet<u64> = BTreeSet::new();

    let mut report = RunReport {
        success: false,
        rounds_used: rounds_cap,
        violations: Vec::new(),
        claims: Vec::new(),
        rounds: Vec::new(),
        envelopes: Vec::new(),
    };

    for k in 0..rounds_cap {
        report.envelopes.push(memories.clone());
        for (i, mem) in memories.iter().enumerate() {
            if mem.len() > p.s as usize {
                report.violations.push(Violation::MemoryOverflow {
                    machine: i as u32,
                    round: k,
                    bits: mem.len(),
                });
            }
        }
        if !report.violations.is_empty() {
            // the offending round never starts
            report.rounds_used = k;
            return Ok(report);
        }

        let mut round_data = Vec::with_capacity(p.m as usize);
        let mut outboxes = Vec::with_capacity(p.m as usize);
        for i in 0..p.m {
            let env = Envelope { machine: i, round: k, memory: memories[i as usize].clone() };
            let mut scope =
                QueryScope::new(oracle, QueryTag::Machine { id: i, round: k });
            let out = strategy.step(p, &env, &mut scope, tape)?;
            let queries = scope.into_queries();
            if queries.len() > p.q as usize {
                report.violations.push(Violation::QueryBudget {
                    machine: i,
                    round: k,
                    issued: queries.len() as u32,
                });
            }
            let mut new_correct = 0;
            for &qw in &queries {
                if chain_set.contains(&qw) && correct_seen.insert(qw) {
                    new_correct += 1;
                }
            }
            let mut msg_bits = 0;
            for msg in &out.messages {
                msg_bits += msg.payload.len();
                if msg.dst >= p.m {
                    report.violations.push(Violation::BadDestination {
                        machine: i,
                        round: k,
                        dst: msg.dst,
                    });
                }
            }
            if let Some(value) = out.claim {
                report.claims.push(Claim { machine: i, round: k, value });
            }
            round_data.push(MachineRound {
                queries,
                messages_out_bits: msg_bits,
                claim: out.claim,
                new_correct,
            });
            outboxes.push(out.messages);
        }
        report.rounds.push(round_data);

        if !report.violations.is_empty() {
            report.rounds_used = k + 1;
            return Ok(report);
        }

        if report.claims.iter().any(|c| c.round == k && c.value == truth.output) {
            report.success = true;
            report.rounds_used = k + 1;
            return Ok(report);
        }

        match route_messages(p, &outboxes) {
            Ok(inboxes) => memories = inboxes,
            Err(Error::ReceiverOverflow { dst, bits }) => {
                report.violations.push(Violation::ReceiverOverflow {
                    machine: dst,
                    round: k,
                    bits,
                });
                report.rounds_used = k + 1;
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Re-executes one machine-round outside the engine: same envelope, fresh
/// scope, any oracle backend. Codecs use this to replay recorded rounds.
pub fn replay_machine_round(
    p: &Params,
    strategy: &dyn Strategy,
    memory: &BitString,
    machine: u32,
    round: u32,
    backend: &mut dyn OracleLike,
    tape: &Tape,
) -> Result<(Vec<u64>, StepOutput), Error> {
    let env = Envelope { machine, round, memory: memory.clone() };
    let mut scope = QueryScope::new(backend, QueryTag::Codec);
    let out = strategy.step(p, &env, &mut scope, tape)?;
    Ok((scope.into_queries(), out))
}
