//! Compression codecs over machine rounds.
//!
//! Both schemes encode the pair (oracle table, input) by replaying one
//! machine's round from its recorded memory: every input block the machine
//! demonstrably touched is replaced by a short (query index, block index)
//! record, and only the untouched blocks are spelled out. Decoding replays
//! the same round and reads the block values back out of the query words.
//!
//! Blob sections separate payload bits (compared against the length bounds)
//! from framing/header bits (counts, flags, context).

use std::collections::{BTreeMap, BTreeSet};

use crate::bits::{ceil_log2, BitReader, BitString};
use crate::chain::{
    line_answer_r, line_counter, line_x_field, pack_line_query, set_line_answer_ell,
    simline_block_index, simline_x_field, InputVector, Params,
};
use crate::mpc::{replay_machine_round, OracleLike, RunReport, Strategy, Tape};
use crate::oracle::{Oracle, QueryTag};
use crate::Error;

pub const SEC_CONTEXT: u8 = 0x00;
pub const SEC_TABLE: u8 = 0x01;
pub const SEC_MEMORY: u8 = 0x02;
pub const SEC_RECORDS: u8 = 0x03;
pub const SEC_INPUTS: u8 = 0x04;
pub const SEC_SEQUENCES: u8 = 0x05;

/// Enumeration guard for `v^d`.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 16;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Scheme {
    Warmup,
    Enumerative,
}

impl Scheme {
    pub fn as_u8(self) -> u8 {
        match self {
            Scheme::Warmup => 0x01,
            Scheme::Enumerative => 0x02,
        }
    }

    pub fn from_u8(b: u8) -> Result<Scheme, Error> {
        match b {
            0x01 => Ok(Scheme::Warmup),
            0x02 => Ok(Scheme::Enumerative),
            _ => Err(Error::Format(format!("unknown scheme byte {b:#04x}"))),
        }
    }

    pub fn from_name(s: &str) -> Result<Scheme, Error> {
        match s {
            "warmup" => Ok(Scheme::Warmup),
            "enum" | "enumerative" => Ok(Scheme::Enumerative),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// One framed slice of a blob. `payload_bits + header_bits == bits.len()`.
#[derive(Clone, Debug)]
pub struct Section {
    pub id: u8,
    pub bits: BitString,
    pub payload_bits: usize,
    pub header_bits: usize,
}

/// An encoding: ordered sections with payload/header accounting.
#[derive(Clone, Debug)]
pub struct EncodingBlob {
    pub scheme: Scheme,
    pub sections: Vec<Section>,
}

impl EncodingBlob {
    pub fn total_bits(&self) -> usize {
        self.sections.iter().map(|s| s.bits.len()).sum()
    }

    pub fn payload_bits(&self) -> usize {
        self.sections.iter().map(|s| s.payload_bits).sum()
    }

    pub fn header_bits(&self) -> usize {
        self.sections.iter().map(|s| s.header_bits).sum()
    }

    pub fn section(&self, id: u8) -> Result<&Section, Error> {
        self.sections
            .iter()
            .find(|s| s.id == id)
            .ok_or(Error::Format(format!("missing section {id:#04x}")))
    }
}

/// Which machine-round a blob encodes, and where the walk frontier stood
/// when that round began. Stored in the blob as framing.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MachineRoundContext {
    pub machine: u32,
    pub round: u32,
    /// Largest chain position queried in earlier rounds; 0 when none.
    pub frontier: u32,
    /// Chain word at the frontier, when `frontier >= 1`.
    pub frontier_word: Option<u64>,
}

impl MachineRoundContext {
    fn to_section(self, p: &Params) -> Section {
        let mut b = BitString::new();
        b.push_bits(self.machine as u64, 16);
        b.push_bits(self.round as u64, 16);
        b.push_bits(self.frontier as u64, 16);
        b.push_bits(self.frontier_word.is_some() as u64, 1);
        b.push_bits(self.frontier_word.unwrap_or(0), p.n);
        let len = b.len();
        Section { id: SEC_CONTEXT, bits: b, payload_bits: 0, header_bits: len }
    }

    fn from_section(p: &Params, sec: &Section) -> Result<MachineRoundContext, Error> {
        let mut rd = BitReader::new(&sec.bits);
        let machine = rd.read_bits(16)? as u32;
        let round = rd.read_bits(16)? as u32;
        let frontier = rd.read_bits(16)? as u32;
        let has_fw = rd.read_bit()?;
        let fw = rd.read_bits(p.n)?;
        Ok(MachineRoundContext {
            machine,
            round,
            frontier,
            frontier_word: has_fw.then_some(fw),
        })
    }
}

/// Reads the frontier off a run: the largest chain position queried in
/// rounds before `round`.
pub fn machine_round_context(
    report: &RunReport,
    chain: &[u64],
    machine: u32,
    round: u32,
) -> MachineRoundContext {
    let before: BTreeSet<u64> = report.queries_before(round).into_iter().collect();
    let mut frontier = 0;
    for (i, &word) in chain.iter().enumerate() {
        if before.contains(&word) {
            frontier = i as u32 + 1;
        }
    }
    MachineRoundContext {
        machine,
        round,
        frontier,
        frontier_word: (frontier >= 1).then(|| chain[frontier as usize - 1]),
    }
}

/// Picks the first round whose frontier has moved past position 0, and in
/// it the machine that queried the most (lowest id on ties). The natural
/// machine-round to encode.
pub fn pick_machine_round(report: &RunReport, chain: &[u64]) -> Option<MachineRoundContext> {
    for k in 1..report.rounds.len() as u32 {
        let probe = machine_round_context(report, chain, 0, k);
        if probe.frontier >= 1 {
            let mut best = 0u32;
            for i in 1..report.rounds[k as usize].len() as u32 {
                if report.machine_queries(k, i).len() > report.machine_queries(k, best).len() {
                    best = i;
                }
            }
            return Some(MachineRoundContext { machine: best, ..probe });
        }
    }
    None
}

/// The path words `W_1 .. W_d` one guess sequence lays out past the
/// frontier. From frontier `f >= 1` the first salt comes from the frontier
/// word's answer; from `f = 0` the path starts at position 1 with the
/// public zero salt. Salts chain through the base answers.
pub fn path_words(
    p: &Params,
    base: &Oracle,
    x: &InputVector,
    frontier: u32,
    frontier_word: Option<u64>,
    seq: &[u32],
) -> Result<Vec<u64>, Error> {
    if seq.is_empty() {
        return Err(Error::InvalidParams("empty guess sequence".into()));
    }
    if seq.iter().any(|&a| a >= p.v) {
        return Err(Error::InvalidParams("guess sequence names a missing block".into()));
    }
    let (mut pos, mut r) = if frontier >= 1 {
        let fw = frontier_word
            .ok_or_else(|| Error::InvalidParams("frontier word required".into()))?;
        (frontier + 1, line_answer_r(p, base.answer(fw)?))
    } else {
        (1, 0)
    };
    let mut words = Vec::with_capacity(seq.len());
    for (t, &at) in seq.iter().enumerate() {
        let word = pack_line_query(p, pos, x.get(at), r)?;
        words.push(word);
        if t + 1 < seq.len() {
            r = line_answer_r(p, base.answer(word)?);
        }
        pos += 1;
    }
    Ok(words)
}

/// Builds the oracle patched along one guess sequence, and the path words
/// `W_1 .. W_d` the patches lay out.
///
/// From frontier `f >= 1`, patch `t` (1-based) rewrites the block index
/// field of the answer at position `f + t - 1` to `seq[t-1]`; `W_t` then
/// sits at position `f + t`. From `f = 0` only positions `1 .. d-1` are
/// patched.
pub fn build_patched_oracle(
    p: &Params,
    base: &Oracle,
    x: &InputVector,
    frontier: u32,
    frontier_word: Option<u64>,
    seq: &[u32],
) -> Result<(Oracle, Vec<u64>), Error> {
    let words = path_words(p, base, x, frontier, frontier_word, seq)?;
    let mut patches = BTreeMap::new();
    if frontier >= 1 {
        let fw = frontier_word.expect("checked by path_words");
        patches.insert(fw, set_line_answer_ell(p, base.answer(fw)?, seq[0]));
    }
    for (t, &word) in words.iter().enumerate() {
        if t + 1 < seq.len() {
            patches.insert(word, set_line_answer_ell(p, base.answer(word)?, seq[t + 1]));
        }
    }
    Ok((base.patched(&patches)?, words))
}

/// Iterates `[v]^d` in lexicographic order.
pub fn all_sequences(v: u32, d: u32, cap: u64) -> Result<Vec<Vec<u32>>, Error> {
    let total = (v as u64).checked_pow(d).ok_or(Error::CapExceeded { cap, needed: u64::MAX })?;
    if total > cap {
        return Err(Error::CapExceeded { cap, needed: total });
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut cur = vec![0u32; d as usize];
    loop {
        out.push(cur.clone());
        let mut t = d as usize;
        loop {
            if t == 0 {
                return Ok(out);
            }
            t -= 1;
            cur[t] += 1;
            if cur[t] < v {
                break;
            }
            cur[t] = 0;
        }
    }
}

/// Everything a machine could query at most `d` positions past the
/// frontier: the frontier word itself plus every patched-path word, each
/// with the words that could precede it. Distinct sequences can lay the
/// same word down with different parents, so predecessors come as a set.
pub struct GuessableSet {
    pub frontier: u32,
    pub depth: u32,
    entries: BTreeMap<u64, BTreeSet<Option<u64>>>,
}

impl GuessableSet {
    pub fn build(
        p: &Params,
        base: &Oracle,
        x: &InputVector,
        chain: &[u64],
        frontier: u32,
        depth: u32,
        cap: u64,
    ) -> Result<GuessableSet, Error> {
        let mut entries: BTreeMap<u64, BTreeSet<Option<u64>>> = BTreeMap::new();
        let frontier_word = if frontier >= 1 {
            let fw = chain[frontier as usize - 1];
            let prev = (frontier >= 2).then(|| chain[frontier as usize - 2]);
            entries.entry(fw).or_default().insert(prev);
            Some(fw)
        } else {
            None
        };
        for seq in all_sequences(p.v, depth, cap)? {
            let words = path_words(p, base, x, frontier, frontier_word, &seq)?;
            let mut prev = frontier_word;
            for &w in &words {
                entries.entry(w).or_default().insert(prev);
                prev = Some(w);
            }
        }
        Ok(GuessableSet { frontier, depth, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: u64) -> bool {
        self.entries.contains_key(&word)
    }

    /// The words any one of which legitimizes querying `word`; `None` in
    /// the set means no prior query is required.
    pub fn predecessors(&self, word: u64) -> Option<&BTreeSet<Option<u64>>> {
        self.entries.get(&word)
    }

    /// Scans queries in issue order for a jump: a guessable word queried
    /// before every word that could have produced it. Returns the
    /// offending index.
    pub fn scan(&self, ordered_queries: &[u64]) -> Option<usize> {
        let mut seen = BTreeSet::new();
        for (i, &q) in ordered_queries.iter().enumerate() {
            if let Some(preds) = self.entries.get(&q) {
                let ok = preds.iter().any(|p| p.map_or(true, |w| seen.contains(&w)));
                if !ok {
                    return Some(i);
                }
            }
            seen.insert(q);
        }
        None
    }
}

/// Checks that the chain prefix grew contiguously through rounds
/// `0..=upto_round`: no chain position queried before its predecessor.
/// Returns the first offending position.
pub fn scan_chain_jumps(chain: &[u64], report: &RunReport, upto_round: u32) -> Option<u32> {
    let mut queried = BTreeSet::new();
    let chain_pos: BTreeMap<u64, u32> =
        chain.iter().enumerate().map(|(i, &w)| (w, i as u32 + 1)).collect();
    for k in 0..=(upto_round as usize).min(report.rounds.len().saturating_sub(1)) {
        for mr in &report.rounds[k] {
            for &q in &mr.queries {
                if let Some(&pos) = chain_pos.get(&q) {
                    if pos >= 2 && !queried.contains(&chain[pos as usize - 2]) {
                        return Some(pos);
                    }
                    queried.insert(q);
                }
            }
        }
    }
    None
}

/// Which blocks a machine-round can be made to reveal within `d` positions
/// past the frontier, measured by replaying the round against every patched
/// oracle.
pub struct ReachableSet {
    pub ctx: MachineRoundContext,
    pub members: BTreeSet<u32>,
    /// (sequence, depth, block) triples: replaying under `sequence` made the
    /// machine query the path word at `depth`, revealing `block`.
    pub recoveries: Vec<(Vec<u32>, u32, u32)>,
}

pub fn compute_reachable_set(
    p: &Params,
    strategy: &dyn Strategy,
    base: &Oracle,
    x: &InputVector,
    report: &RunReport,
    ctx: &MachineRoundContext,
    tape: &Tape,
    cap: u64,
) -> Result<ReachableSet, Error> {
    let memory = report.envelope(ctx.round, ctx.machine);
    let mut members = BTreeSet::new();
    let mut recoveries = Vec::new();
    for seq in all_sequences(p.v, p.d, cap)? {
        let (mut patched, words) =
            build_patched_oracle(p, base, x, ctx.frontier, ctx.frontier_word, &seq)?;
        let (queries, _) = replay_machine_round(
            p,
            strategy,
            memory,
            ctx.machine,
            ctx.round,
            &mut patched,
            tape,
        )?;
        let qset: BTreeSet<u64> = queries.into_iter().collect();
        for (t, &word) in words.iter().enumerate() {
            if qset.contains(&word) {
                members.insert(seq[t]);
                recoveries.push((seq.clone(), t as u32 + 1, seq[t]));
            }
        }
    }
    Ok(ReachableSet { ctx: *ctx, members, recoveries })
}

fn table_section(base: &Oracle, p: &Params) -> Result<Section, Error> {
    let table = base.dump_table()?;
    let mut bits = BitString::new();
    for &e in &table {
        bits.push_bits(e, p.n);
    }
    let len = bits.len();
    Ok(Section { id: SEC_TABLE, bits, payload_bits: len, header_bits: 0 })
}

fn parse_table_section(p: &Params, sec: &Section) -> Result<Oracle, Error> {
    let expect = (p.n as usize) << p.n;
    if sec.bits.len() != expect {
        return Err(Error::LengthMismatch { expected: expect, got: sec.bits.len() });
    }
    let table = (0..1usize << p.n)
        .map(|i| sec.bits.get_bits(i * p.n as usize, p.n))
        .collect();
    Oracle::from_table(p.n, table)
}

fn memory_section(p: &Params, memory: &BitString) -> Section {
    let mut bits = memory.clone();
    bits.pad_to(p.s as usize);
    Section { id: SEC_MEMORY, bits, payload_bits: p.s as usize, header_bits: 0 }
}

fn inputs_section(p: &Params, x: &InputVector, known: &BTreeSet<u32>) -> Section {
    let mut bits = BitString::new();
    for blk in 0..p.v {
        if !known.contains(&blk) {
            bits.push_bits(x.get(blk), p.u);
        }
    }
    let len = bits.len();
    Section { id: SEC_INPUTS, bits, payload_bits: len, header_bits: 0 }
}

/// A chain entry the warm-up scheme hopes to see queried, and the input
/// block inside it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct WarmupTarget {
    pub word: u64,
    pub block: u32,
}

/// The chain window `[start_pos, start_pos + len)` as warm-up targets,
/// clipped to the chain and deduplicated by block (first position wins).
pub fn warmup_window(p: &Params, chain: &[u64], start_pos: u32, len: u32) -> Vec<WarmupTarget> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for pos in start_pos..start_pos + len {
        if pos < 1 || pos as usize > chain.len() {
            continue;
        }
        let block = simline_block_index(p, pos);
        if seen.insert(block) {
            out.push(WarmupTarget { word: chain[pos as usize - 1], block });
        }
    }
    out
}

/// Upper bound on warm-up payload bits given `intersect` recovered blocks.
pub fn warmup_bound_bits(p: &Params, intersect: u32) -> usize {
    p.s as usize
        + intersect as usize * (p.qidx_bits() + p.ell_bits()) as usize
        + (p.v - intersect) as usize * p.u as usize
        + ((p.n as usize) << p.n)
}

/// Upper bound on enumerative payload bits given `reached` recovered blocks.
pub fn enum_bound_bits(p: &Params, reached: u32) -> usize {
    p.s as usize
        + reached as usize
            * ((p.d + 2) as usize * p.ell_bits() as usize + p.qidx_bits() as usize)
        + (p.v - reached) as usize * p.u as usize
        + ((p.n as usize) << p.n)
}

/// Encodes (table, input) through one `SimLine` machine-round: replays the
/// round against the real oracle, records where each target entry shows up
/// in the query stream, and spells out only the unrecovered blocks.
///
/// Errors with `NoIntersection` when fewer than `alpha` targets were
/// queried; the scheme only pays off past that threshold.
pub fn encode_warmup(
    p: &Params,
    strategy: &dyn Strategy,
    base: &Oracle,
    x: &InputVector,
    report: &RunReport,
    ctx: &MachineRoundContext,
    tape: &Tape,
    targets: &[WarmupTarget],
    alpha: u32,
) -> Result<EncodingBlob, Error> {
    let memory = report.envelope(ctx.round, ctx.machine);
    let mut replay_oracle = base.clone();
    let (queries, _) = replay_machine_round(
        p,
        strategy,
        memory,
        ctx.machine,
        ctx.round,
        &mut replay_oracle,
        tape,
    )?;
    if queries != report.machine_queries(ctx.round, ctx.machine) {
        return Err(Error::PrecondFailed("replay diverged from recorded round".into()));
    }

    let mut records: Vec<(u32, u32)> = Vec::new();
    let mut known = BTreeSet::new();
    for t in targets {
        if let Some(idx) = queries.iter().position(|&qw| qw == t.word) {
            if idx >= p.q as usize {
                return Err(Error::PrecondFailed("query index exceeds budget".into()));
            }
            if known.insert(t.block) {
                records.push((idx as u32, t.block));
            }
        }
    }
    if (records.len() as u32) < alpha {
        return Err(Error::NoIntersection { found: records.len() as u32, alpha });
    }

    let mut rec_bits = BitString::new();
    rec_bits.push_bits(records.len() as u64, p.qcount_bits());
    for &(idx, blk) in &records {
        rec_bits.push_bits(idx as u64, p.qidx_bits());
        rec_bits.push_bits(blk as u64, p.ell_bits());
    }
    let rec_payload = records.len() * (p.qidx_bits() + p.ell_bits()) as usize;
    let rec_header = p.qcount_bits() as usize;

    let blob = EncodingBlob {
        scheme: Scheme::Warmup,
        sections: vec![
            ctx.to_section(p),
            table_section(base, p)?,
            memory_section(p, memory),
            Section {
                id: SEC_RECORDS,
                bits: rec_bits,
                payload_bits: rec_payload,
                header_bits: rec_header,
            },
            inputs_section(p, x, &known),
        ],
    };

    let (table_back, x_back) = decode_warmup(p, strategy, tape, &blob)
        .map_err(|e| Error::PrecondFailed(format!("decode verification failed: {e}")))?;
    if x_back != *x || table_back != base.dump_table()? {
        return Err(Error::PrecondFailed("decode verification mismatch".into()));
    }
    Ok(blob)
}

/// Inverts [`encode_warmup`]: rebuilds the oracle from the table section,
/// replays the round, and reads recovered blocks out of the recorded
/// queries' block value fields.
pub fn decode_warmup(
    p: &Params,
    strategy: &dyn Strategy,
    tape: &Tape,
    blob: &EncodingBlob,
) -> Result<(Vec<u64>, InputVector), Error> {
    if blob.scheme != Scheme::Warmup {
        return Err(Error::Format("blob is not a warm-up encoding".into()));
    }
    let ctx = MachineRoundContext::from_section(p, blob.section(SEC_CONTEXT)?)?;
    let mut oracle = parse_table_section(p, blob.section(SEC_TABLE)?)?;
    let memory = blob.section(SEC_MEMORY)?.bits.clone();
    let (queries, _) = replay_machine_round(
        p,
        strategy,
        &memory,
        ctx.machine,
        ctx.round,
        &mut oracle,
        tape,
    )?;

    let rec = blob.section(SEC_RECORDS)?;
    let mut rd = BitReader::new(&rec.bits);
    let count = rd.read_bits(p.qcount_bits())?;
    let mut blocks: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..count {
        let idx = rd.read_bits(p.qidx_bits())? as usize;
        let blk = rd.read_bits(p.ell_bits())? as u32;
        if blk >= p.v {
            return Err(Error::Format(format!("record names missing block {blk}")));
        }
        let word = *queries
            .get(idx)
            .ok_or(Error::Format(format!("record points past query {idx}")))?;
        blocks.insert(blk, simline_x_field(p, word));
    }

    let inputs = blob.section(SEC_INPUTS)?;
    let mut ird = BitReader::new(&inputs.bits);
    for blk in 0..p.v {
        if !blocks.contains_key(&blk) {
            blocks.insert(blk, ird.read_bits(p.u)?);
        }
    }
    let x = InputVector::new(p.u, blocks.into_values().collect())?;
    Ok((oracle.dump_table()?, x))
}

struct SeqEntry {
    seq: Vec<u32>,
    records: Vec<(u32, u32)>,
}

/// Encodes (table, input) through one `Line` machine-round: replays the
/// round once per guess sequence, recording the query index at which each
/// newly revealed block's path word comes up. The replay backend mirrors
/// the decoder's knowledge exactly, so a recorded index means the decoder
/// will recognize the same query. Requires a jump-free run up to the
/// encoded round.
pub fn encode_enumerative(
    p: &Params,
    strategy: &dyn Strategy,
    base: &Oracle,
    x: &InputVector,
    report: &RunReport,
    ctx: &MachineRoundContext,
    tape: &Tape,
    cap: u64,
) -> Result<EncodingBlob, Error> {
    let chain = crate::ram_eval::eval_line(p, &mut base.clone(), x, QueryTag::Codec)?.queries;
    if let Some(pos) = scan_chain_jumps(&chain, report, ctx.round) {
        return Err(Error::PrecondFailed(format!("chain position {pos} queried by a jump")));
    }
    let guessable =
        GuessableSet::build(p, base, x, &chain, ctx.frontier, p.d, cap)?;
    let ordered = report.queries_before(ctx.round + 1);
    if let Some(i) = guessable.scan(&ordered) {
        return Err(Error::PrecondFailed(format!("query {i} jumped past the frontier")));
    }

    let memory = report.envelope(ctx.round, ctx.machine);
    let mut entries: Vec<SeqEntry> = Vec::new();
    let mut known_x: BTreeMap<u32, u64> = BTreeMap::new();
    for seq in all_sequences(p.v, p.d, cap)? {
        let words = path_words(p, base, x, ctx.frontier, ctx.frontier_word, &seq)?;
        let mut records: Vec<(u32, u32)> = Vec::new();
        let mut replay = SeqReplay::new(
            p,
            base,
            ctx,
            &seq,
            SeqSource::Recording { words: &words, out: &mut records },
            &mut known_x,
        )?;
        replay_machine_round(p, strategy, memory, ctx.machine, ctx.round, &mut replay, tape)?;
        if records.iter().any(|&(idx, _)| idx >= p.q) {
            return Err(Error::PrecondFailed("query index exceeds budget".into()));
        }
        if !records.is_empty() {
            entries.push(SeqEntry { seq, records });
        }
    }
    let known: BTreeSet<u32> = known_x.keys().copied().collect();

    let mut seq_bits = BitString::new();
    let mut seq_payload = 0usize;
    let mut seq_header = 0usize;
    for e in &entries {
        seq_bits.push_bits(1, 1);
        seq_header += 1;
        for &a in &e.seq {
            seq_bits.push_bits(a as u64, p.ell_bits());
        }
        seq_payload += (p.d * p.ell_bits()) as usize;
        seq_bits.push_bits(e.records.len() as u64, ceil_log2(p.d as u64 + 1));
        seq_header += ceil_log2(p.d as u64 + 1) as usize;
        for &(idx, blk) in &e.records {
            seq_bits.push_bits(idx as u64, p.qidx_bits());
            seq_bits.push_bits(blk as u64, p.ell_bits());
        }
        seq_payload += e.records.len() * (p.qidx_bits() + p.ell_bits()) as usize;
    }
    seq_bits.push_bits(0, 1);
    seq_header += 1;

    let blob = EncodingBlob {
        scheme: Scheme::Enumerative,
        sections: vec![
            ctx.to_section(p),
            table_section(base, p)?,
            memory_section(p, memory),
            Section {
                id: SEC_SEQUENCES,
                bits: seq_bits,
                payload_bits: seq_payload,
                header_bits: seq_header,
            },
            inputs_section(p, x, &known),
        ],
    };

    let (table_back, x_back) = decode_enumerative(p, strategy, tape, &blob)
        .map_err(|e| Error::PrecondFailed(format!("decode verification failed: {e}")))?;
    if x_back != *x || table_back != base.dump_table()? {
        return Err(Error::PrecondFailed("decode verification mismatch".into()));
    }
    Ok(blob)
}

/// Where one sequence replay takes its record hits from.
enum SeqSource<'a> {
    /// Decoding: query index to block index, read out of the blob.
    Records(&'a BTreeMap<u32, u32>),
    /// Encoding: the sequence's true path words, with records emitted as
    /// the replay walks into them.
    Recording { words: &'a [u64], out: &'a mut Vec<(u32, u32)> },
}

/// Replay backend for one guess sequence. Patches the frontier word and
/// every path word it can currently name, and learns unknown blocks the
/// moment a record hit comes up. The encoder drives this too, so both
/// sides see the identical answer stream by construction.
struct SeqReplay<'a> {
    p: &'a Params,
    base: &'a Oracle,
    ctx: &'a MachineRoundContext,
    seq: &'a [u32],
    source: SeqSource<'a>,
    known_x: &'a mut BTreeMap<u32, u64>,
    path: Vec<Option<u64>>,
    qcount: u32,
}

impl<'a> SeqReplay<'a> {
    fn new(
        p: &'a Params,
        base: &'a Oracle,
        ctx: &'a MachineRoundContext,
        seq: &'a [u32],
        source: SeqSource<'a>,
        known_x: &'a mut BTreeMap<u32, u64>,
    ) -> Result<SeqReplay<'a>, Error> {
        let mut s = SeqReplay {
            p,
            base,
            ctx,
            seq,
            source,
            known_x,
            path: vec![None; seq.len()],
            qcount: 0,
        };
        s.extend_path()?;
        Ok(s)
    }

    /// Salt feeding path word `t` (0-based): the base answer's salt field at
    /// the preceding word, or the public zero at position 1.
    fn salt_before(&self, t: usize) -> Result<Option<u64>, Error> {
        if t == 0 {
            match self.ctx.frontier_word {
                Some(fw) => Ok(Some(line_answer_r(self.p, self.base.answer(fw)?))),
                None if self.ctx.frontier == 0 => Ok(Some(0)),
                None => Err(Error::Format("context lacks frontier word".into())),
            }
        } else {
            match self.path[t - 1] {
                Some(w) => Ok(Some(line_answer_r(self.p, self.base.answer(w)?))),
                None => Ok(None),
            }
        }
    }

    fn extend_path(&mut self) -> Result<(), Error> {
        for t in 0..self.seq.len() {
            if self.path[t].is_some() {
                continue;
            }
            let Some(&xv) = self.known_x.get(&self.seq[t]) else { continue };
            let Some(r) = self.salt_before(t)? else { continue };
            let pos = self.ctx.frontier + t as u32 + 1;
            self.path[t] = Some(pack_line_query(self.p, pos, xv, r)?);
        }
        Ok(())
    }
}

impl OracleLike for SeqReplay<'_> {
    fn ask(&mut self, word: u64, _tag: QueryTag) -> Result<u64, Error> {
        let qidx = self.qcount;
        self.qcount += 1;
        let hit = match &mut self.source {
            SeqSource::Records(records) => match records.get(&qidx) {
                None => None,
                Some(&blk) => {
                    let t = line_counter(self.p, word)
                        .checked_sub(self.ctx.frontier + 1)
                        .ok_or(Error::Format("recorded query below the frontier".into()))?
                        as usize;
                    if t >= self.seq.len() || self.seq[t] != blk {
                        return Err(Error::Format("record does not match its sequence".into()));
                    }
                    Some(t)
                }
            },
            SeqSource::Recording { words, out } => {
                match words.iter().position(|&w| w == word) {
                    Some(t) if !self.known_x.contains_key(&self.seq[t]) => {
                        out.push((qidx, self.seq[t]));
                        Some(t)
                    }
                    _ => None,
                }
            }
        };
        if let Some(t) = hit {
            let xv = line_x_field(self.p, word);
            if let Some(&prev) = self.known_x.get(&self.seq[t]) {
                if prev != xv {
                    return Err(Error::Format("records disagree on a block value".into()));
                }
            }
            self.known_x.insert(self.seq[t], xv);
            match self.path[t] {
                Some(w) if w != word => {
                    return Err(Error::Format(
                        "recorded query is not on the patched path".into(),
                    ))
                }
                _ => self.path[t] = Some(word),
            }
            self.extend_path()?;
        }
        if self.ctx.frontier >= 1 && Some(word) == self.ctx.frontier_word {
            return Ok(set_line_answer_ell(self.p, self.base.answer(word)?, self.seq[0]));
        }
        for t in 0..self.seq.len() {
            if self.path[t] == Some(word) {
                return if t + 1 < self.seq.len() {
                    Ok(set_line_answer_ell(self.p, self.base.answer(word)?, self.seq[t + 1]))
                } else {
                    self.base.answer(word)
                };
            }
        }
        self.base.answer(word)
    }
}

/// Inverts [`encode_enumerative`]: replays the round once per recorded
/// sequence against a lazily patched oracle, learning block values from the
/// recorded query indices.
pub fn decode_enumerative(
    p: &Params,
    strategy: &dyn Strategy,
    tape: &Tape,
    blob: &EncodingBlob,
) -> Result<(Vec<u64>, InputVector), Error> {
    if blob.scheme != Scheme::Enumerative {
        return Err(Error::Format("blob is not an enumerative encoding".into()));
    }
    let ctx = MachineRoundContext::from_section(p, blob.section(SEC_CONTEXT)?)?;
    let base = parse_table_section(p, blob.section(SEC_TABLE)?)?;
    let memory = blob.section(SEC_MEMORY)?.bits.clone();

    let sec = blob.section(SEC_SEQUENCES)?;
    let mut rd = BitReader::new(&sec.bits);
    let mut entries: Vec<(Vec<u32>, BTreeMap<u32, u32>)> = Vec::new();
    while rd.read_bit()? {
        let seq: Vec<u32> =
            (0..p.d).map(|_| rd.read_bits(p.ell_bits()).map(|a| a as u32)).collect::<Result<_, _>>()?;
        if seq.iter().any(|&a| a >= p.v) {
            return Err(Error::Format("sequence names a missing block".into()));
        }
        let count = rd.read_bits(ceil_log2(p.d as u64 + 1))?;
        if count > p.d as u64 {
            return Err(Error::Format("sequence claims too many records".into()));
        }
        let mut records = BTreeMap::new();
        for _ in 0..count {
            let idx = rd.read_bits(p.qidx_bits())? as u32;
            let blk = rd.read_bits(p.ell_bits())? as u32;
            records.insert(idx, blk);
        }
        entries.push((seq, records));
    }

    let mut known_x: BTreeMap<u32, u64> = BTreeMap::new();
    for (seq, records) in &entries {
        let mut replay =
            SeqReplay::new(p, &base, &ctx, seq, SeqSource::Records(records), &mut known_x)?;
        replay_machine_round(p, strategy, &memory, ctx.machine, ctx.round, &mut replay, tape)?;
        let missing: Vec<u32> = records
            .values()
            .filter(|blk| !known_x.contains_key(blk))
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(Error::Format(format!("blocks {missing:?} were never recovered")));
        }
    }

    let inputs = blob.section(SEC_INPUTS)?;
    let mut ird = BitReader::new(&inputs.bits);
    let mut blocks: BTreeMap<u32, u64> = known_x;
    for blk in 0..p.v {
        if !blocks.contains_key(&blk) {
            blocks.insert(blk, ird.read_bits(p.u)?);
        }
    }
    let x = InputVector::new(p.u, blocks.into_values().collect())?;
    Ok((base.dump_table()?, x))
}

/// Result of checking a message family against the counting bound.
#[derive(Clone, Copy, Debug)]
pub struct CountingCheck {
    pub count: usize,
    pub max_len: usize,
    pub min_len: usize,
    /// `ceil(log2 count) - 1`: no injective encoding into shorter strings
    /// exists.
    pub floor: usize,
    pub pass: bool,
}

/// Encodes every message, verifies injectivity over (length, bits) pairs,
/// and checks the maximum length against `log2(count) - 1`.
pub fn counting_bound_check<T, F>(messages: &[T], mut encode: F) -> Result<CountingCheck, Error>
where
    F: FnMut(&T) -> Result<BitString, Error>,
{
    let mut seen: BTreeMap<(usize, Vec<u8>), usize> = BTreeMap::new();
    let mut max_len = 0usize;
    let mut min_len = usize::MAX;
    for (i, msg) in messages.iter().enumerate() {
        let bits = encode(msg)?;
        let key = (bits.len(), bits.as_bytes().to_vec());
        if let Some(&j) = seen.get(&key) {
            return Err(Error::InjectivityFailure { a: j, b: i });
        }
        seen.insert(key, i);
        max_len = max_len.max(bits.len());
        min_len = min_len.min(bits.len());
    }
    let floor = (ceil_log2(messages.len() as u64) as usize).saturating_sub(1);
    Ok(CountingCheck {
        count: messages.len(),
        max_len,
        min_len: if messages.is_empty() { 0 } else { min_len },
        floor,
        pass: max_len >= floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{unpack_line_answer, Func};
    use crate::mpc::{self, DistPolicy, GroundTruth};
    use crate::oracle::{Mode, OracleSeed};
    use crate::ram_eval;
    use crate::strategies::{SegmentStrategy, TokenStrategy};

    fn line_params() -> Params {
        Params { n: 12, u: 4, v: 4, w: 8, m: 2, s: 200, q: 4, d: 2 }
    }

    fn line_setup(seed: u64) -> (Params, Oracle, InputVector, Vec<u64>) {
        let p = line_params();
        let master = OracleSeed::from_u64(seed);
        let mut oracle = Oracle::new(master.subseed(0), p.n, Mode::Eager).unwrap();
        let mut rng = master.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);
        let chain = ram_eval::eval_line(&p, &mut oracle, &x, QueryTag::Harness).unwrap().queries;
        oracle.clear_log();
        (p, oracle, x, chain)
    }

    #[test]
    fn identity_sequence_patches_nothing_observable() {
        let (p, oracle, x, chain) = line_setup(21);
        let frontier = 3u32;
        let res = ram_eval::eval_line(&p, &mut oracle.clone(), &x, QueryTag::Harness).unwrap();
        // true block indices at positions frontier+1, frontier+2
        let seq: Vec<u32> =
            (0..p.d).map(|t| res.trace[(frontier + t) as usize].ell).collect();
        let (patched, words) =
            build_patched_oracle(&p, &oracle, &x, frontier, Some(chain[2]), &seq).unwrap();
        assert_eq!(words, &chain[3..5], "identity path words are the true chain");
        for &w in &chain {
            assert_eq!(patched.answer(w).unwrap(), oracle.answer(w).unwrap());
        }
    }

    #[test]
    fn patched_path_words_chain_salts() {
        let (p, oracle, x, chain) = line_setup(22);
        let frontier = 2u32;
        let seq = vec![3u32, 1];
        let (patched, words) =
            build_patched_oracle(&p, &oracle, &x, frontier, Some(chain[1]), &seq).unwrap();
        // frontier answer now demands block 3
        let (ell, r, _) = unpack_line_answer(&p, patched.answer(chain[1]).unwrap());
        assert_eq!(ell, 3);
        assert_eq!(words[0], pack_line_query(&p, 3, x.get(3), r).unwrap());
        // W_1's patched answer demands block 1, salt from its base answer
        let (ell1, r1, _) = unpack_line_answer(&p, patched.answer(words[0]).unwrap());
        assert_eq!(ell1, 1);
        assert_eq!(
            r1,
            line_answer_r(&p, oracle.answer(words[0]).unwrap()),
            "patches only rewrite the block index field"
        );
        assert_eq!(words[1], pack_line_query(&p, 4, x.get(1), r1).unwrap());
        // the deepest path word keeps its base answer
        assert_eq!(patched.answer(words[1]).unwrap(), oracle.answer(words[1]).unwrap());
        assert_eq!(patched.patch_count(), 2);
    }

    #[test]
    fn frontier_zero_uses_public_salt() {
        let (p, oracle, x, chain) = line_setup(23);
        let seq = vec![2u32, 0];
        let (patched, words) = build_patched_oracle(&p, &oracle, &x, 0, None, &seq).unwrap();
        assert_eq!(words[0], pack_line_query(&p, 1, x.get(2), 0).unwrap());
        assert_eq!(patched.patch_count(), 1, "only positions 1..d-1 are patched");
        // seq starting with the true first block reproduces chain[0]
        let (patched2, words2) = build_patched_oracle(&p, &oracle, &x, 0, None, &[0, 1]).unwrap();
        assert_eq!(words2[0], chain[0]);
        drop(patched2);
        drop(patched);
    }

    #[test]
    fn sequences_lex_order_and_cap() {
        let seqs = all_sequences(3, 2, 64).unwrap();
        assert_eq!(seqs.len(), 9);
        assert_eq!(seqs[0], vec![0, 0]);
        assert_eq!(seqs[1], vec![0, 1]);
        assert_eq!(seqs[8], vec![2, 2]);
        assert!(matches!(all_sequences(4, 8, 100), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn guessable_set_contents() {
        let (p, oracle, x, chain) = line_setup(24);
        let frontier = 3u32;
        let g = GuessableSet::build(&p, &oracle, &x, &chain, frontier, p.d, 1 << 16).unwrap();
        assert!(g.len() <= (p.d as usize) * 16 + 1);
        assert!(g.contains(chain[2]), "frontier word is guessable");
        assert!(g.predecessors(chain[2]).unwrap().contains(&Some(chain[1])));
        // every patched path word appears with its predecessor
        for seq in all_sequences(p.v, p.d, 1 << 16).unwrap() {
            let words =
                path_words(&p, &oracle, &x, frontier, Some(chain[2]), &seq).unwrap();
            assert!(g.predecessors(words[0]).unwrap().contains(&Some(chain[2])));
            assert!(g.predecessors(words[1]).unwrap().contains(&Some(words[0])));
        }
        // the true successor is on some path, hence guessable
        assert!(g.contains(chain[3]));
    }

    #[test]
    fn guessable_scan_flags_out_of_order_queries() {
        let (p, oracle, x, chain) = line_setup(25);
        let g = GuessableSet::build(&p, &oracle, &x, &chain, 2, p.d, 1 << 16).unwrap();
        // orderly: frontier's predecessor, frontier, successor
        assert_eq!(g.scan(&[chain[0], chain[1], chain[2]]), None);
        // jump: successor of the frontier before the frontier
        assert_eq!(g.scan(&[chain[0], chain[2]]), Some(1));
        // non-guessable noise is ignored
        assert_eq!(g.scan(&[0x123, chain[0], chain[1]]), None);
    }

    fn run_token(
        seed: u64,
    ) -> (Params, Oracle, InputVector, Vec<u64>, Tape, mpc::RunReport, TokenStrategy) {
        let p = line_params();
        let master = OracleSeed::from_u64(seed);
        let mut oracle = Oracle::new(master.subseed(0), p.n, Mode::Eager).unwrap();
        let mut rng = master.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);
        let tape = Tape::new(master.subseed(2));
        let truth = GroundTruth::compute(&p, Func::Line, &mut oracle, &x).unwrap();
        let chain = truth.chain.clone();
        oracle.clear_log();
        let strat = TokenStrategy { policy: DistPolicy::RoundRobin };
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 40).unwrap();
        assert!(report.success);
        (p, oracle, x, chain, tape, report, strat)
    }

    fn pick_round(report: &mpc::RunReport, chain: &[u64]) -> MachineRoundContext {
        pick_machine_round(report, chain).expect("no round past the frontier")
    }

    #[test]
    fn reachable_set_recovers_true_continuation() {
        let (p, oracle, x, chain, tape, report, strat) = run_token(30);
        let ctx = pick_round(&report, &chain);
        let reach =
            compute_reachable_set(&p, &strat, &oracle, &x, &report, &ctx, &tape, 1 << 16)
                .unwrap();
        let union: BTreeSet<u32> = reach.recoveries.iter().map(|&(_, _, b)| b).collect();
        assert_eq!(union, reach.members, "members are exactly the recovery union");
        // the machine really advanced, so the true next block is reachable
        let real = report.machine_queries(ctx.round, ctx.machine);
        if !real.is_empty() {
            assert!(!reach.members.is_empty());
        }
    }

    #[test]
    fn enumerative_roundtrip_and_bound() {
        for seed in 40..48 {
            let (p, oracle, x, chain, tape, report, strat) = run_token(seed);
            let ctx = pick_round(&report, &chain);
            let blob = encode_enumerative(
                &p, &strat, &oracle, &x, &report, &ctx, &tape, 1 << 16,
            )
            .unwrap();
            let (table, x_back) = decode_enumerative(&p, &strat, &tape, &blob).unwrap();
            assert_eq!(x_back, x, "seed {seed}");
            assert_eq!(table, oracle.dump_table().unwrap());
            let spelled =
                blob.section(SEC_INPUTS).unwrap().payload_bits as u32 / p.u;
            let recovered = p.v - spelled;
            assert!(
                blob.payload_bits() <= enum_bound_bits(&p, recovered),
                "seed {seed}: {} > {}",
                blob.payload_bits(),
                enum_bound_bits(&p, recovered)
            );
        }
    }

    fn simline_setup(
        seed: u64,
    ) -> (Params, Oracle, InputVector, Vec<u64>, Tape, mpc::RunReport, SegmentStrategy) {
        let mut p = Params { n: 12, u: 4, v: 8, w: 16, m: 2, s: 0, q: 8, d: 1 };
        let strat = SegmentStrategy::for_params(&p);
        p.s = strat.required_bits(&p) as u32;
        let master = OracleSeed::from_u64(seed);
        let mut oracle = Oracle::new(master.subseed(0), p.n, Mode::Eager).unwrap();
        let mut rng = master.subseed(1).rng();
        let x = InputVector::random(&mut rng, &p);
        let tape = Tape::new(master.subseed(2));
        let truth = GroundTruth::compute(&p, Func::SimLine, &mut oracle, &x).unwrap();
        let chain = truth.chain.clone();
        oracle.clear_log();
        let report = mpc::run(&p, &strat, &x, &mut oracle, &tape, &truth, 40).unwrap();
        assert!(report.success);
        (p, oracle, x, chain, tape, report, strat)
    }

    #[test]
    fn warmup_roundtrip_and_bound() {
        for seed in 50..58 {
            let (p, oracle, x, chain, tape, report, strat) = simline_setup(seed);
            let ctx = MachineRoundContext {
                machine: 0,
                round: 0,
                frontier: 0,
                frontier_word: None,
            };
            let targets = warmup_window(&p, &chain, 1, p.v.min(p.w));
            let blob = encode_warmup(
                &p, &strat, &oracle, &x, &report, &ctx, &tape, &targets, 1,
            )
            .unwrap();
            let (table, x_back) = decode_warmup(&p, &strat, &tape, &blob).unwrap();
            assert_eq!(x_back, x, "seed {seed}");
            assert_eq!(table, oracle.dump_table().unwrap());
            // machine 0 owns blocks 0..4 and advances min(b, q) = 4 nodes;
            // extra targets can match when block values and salts collide
            let qs: BTreeSet<u64> =
                report.machine_queries(0, 0).iter().copied().collect();
            assert_eq!(qs.len(), 4);
            let intersect =
                targets.iter().filter(|t| qs.contains(&t.word)).count() as u32;
            assert!(intersect >= 4);
            assert_eq!(blob.payload_bits(), warmup_bound_bits(&p, intersect));
        }
    }

    #[test]
    fn warmup_requires_intersection() {
        let (p, oracle, x, chain, tape, report, strat) = simline_setup(60);
        // machine 1 is idle in round 0: no targets hit
        let ctx =
            MachineRoundContext { machine: 1, round: 0, frontier: 0, frontier_word: None };
        let targets = warmup_window(&p, &chain, 1, p.v.min(p.w));
        let err = encode_warmup(&p, &strat, &oracle, &x, &report, &ctx, &tape, &targets, 1)
            .unwrap_err();
        assert!(matches!(err, Error::NoIntersection { found: 0, alpha: 1 }));
    }

    #[test]
    fn warmup_window_clips_and_dedups() {
        let p = Params { n: 12, u: 4, v: 4, w: 16, m: 1, s: 64, q: 8, d: 1 };
        let chain: Vec<u64> = (0..16).collect();
        let win = warmup_window(&p, &chain, 1, 6);
        // 6 positions but only 4 distinct blocks
        assert_eq!(win.len(), 4);
        assert_eq!(win[0], WarmupTarget { word: 0, block: 0 });
        assert_eq!(win[3], WarmupTarget { word: 3, block: 3 });
        let tail = warmup_window(&p, &chain, 15, 10);
        assert_eq!(tail.len(), 2, "window clipped at the chain end");
    }

    #[test]
    fn counting_bound_check_works() {
        let msgs: Vec<u64> = (0..256).collect();
        let check = counting_bound_check(&msgs, |&m| {
            let mut b = BitString::new();
            b.push_bits(m, 8);
            Ok(b)
        })
        .unwrap();
        assert!(check.pass);
        assert_eq!(check.max_len, 8);
        assert_eq!(check.floor, 7);

        // a lossy encoder is caught
        let err = counting_bound_check(&msgs, |&m| {
            let mut b = BitString::new();
            b.push_bits(m & 0x7f, 8);
            Ok(b)
        })
        .unwrap_err();
        assert!(matches!(err, Error::InjectivityFailure { a: 0, b: 128 }));

        // variable lengths: (len, bits) pairs are distinct codes
        let two: Vec<u64> = vec![0, 1];
        let check2 = counting_bound_check(&two, |&m| {
            let mut b = BitString::new();
            b.push_bits(0, if m == 0 { 1 } else { 2 });
            Ok(b)
        })
        .unwrap();
        assert!(check2.pass);
    }

    #[test]
    fn blob_accounting_is_consistent() {
        let (p, oracle, x, chain, tape, report, strat) = simline_setup(61);
        let ctx =
            MachineRoundContext { machine: 0, round: 0, frontier: 0, frontier_word: None };
        let targets = warmup_window(&p, &chain, 1, p.v.min(p.w));
        let blob =
            encode_warmup(&p, &strat, &oracle, &x, &report, &ctx, &tape, &targets, 1).unwrap();
        for sec in &blob.sections {
            assert_eq!(sec.bits.len(), sec.payload_bits + sec.header_bits);
        }
        assert_eq!(blob.total_bits(), blob.payload_bits() + blob.header_bits());
        let table = blob.section(SEC_TABLE).unwrap();
        assert_eq!(table.payload_bits, (p.n as usize) << p.n);
    }
}

