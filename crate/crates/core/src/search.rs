//! Exact A_N and A^- by depth-first enumeration of canonical state sequences.
//!
//! A candidate witness with `q` states is a restricted-growth sequence
//! `s_0 = 0, s_1, ..., s_n` using exactly `q` values; it induces the automaton
//! whose edges are the steps `s_{i-1} --w_i--> s_i` and whose only accept
//! state is `s_n`. The search tree is cut at a fixed prefix depth into
//! independent work items, and the items are scanned in lexicographic order so
//! the witness returned is the least one whatever the thread count.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::automata::{induce_from_sequence, is_deterministic_partial, is_unique_witness, StateSequence};
use crate::repetitions::{an_lower, LowerBound, PowerOccurrence};
use crate::words::Word;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search bounds: q_min = {q_min}, q_max = {q_max}, word length {n}")]
    BadBounds { q_min: usize, q_max: usize, n: usize },
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt checkpoint at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub q_min: usize,
    /// Defaults to `|w| + 1`.
    pub q_max: Option<usize>,
    pub deterministic: bool,
    pub parallel_split_depth: usize,
    pub checkpoint_path: Option<PathBuf>,
    pub time_budget: Option<Duration>,
    /// `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            q_min: 1,
            q_max: None,
            deterministic: false,
            parallel_split_depth: 4,
            checkpoint_path: None,
            time_budget: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "AN")]
    An,
    #[serde(rename = "AMINUS")]
    Aminus,
    #[serde(rename = "ANLOWER")]
    AnLower,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::An => "AN",
            Measure::Aminus => "AMINUS",
            Measure::AnLower => "ANLOWER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRecord {
    pub word: String,
    pub length: usize,
    pub measure: Measure,
    pub value: usize,
    pub witness: Option<Vec<usize>>,
    pub elapsed_ms: u64,
    pub method: String,
    #[serde(default = "yes")]
    pub complete: bool,
    /// Known interval for the true value when the search ran out of time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<PowerOccurrence>>,
}

fn yes() -> bool {
    true
}

impl ComplexityRecord {
    pub fn from_lower(w: &Word, lb: &LowerBound, elapsed: Duration) -> Self {
        ComplexityRecord {
            word: w.to_string(),
            length: w.len(),
            measure: Measure::AnLower,
            value: lb.value,
            witness: None,
            elapsed_ms: elapsed.as_millis() as u64,
            method: "power-family branch-and-bound".into(),
            complete: true,
            bracket: None,
            family: Some(lb.family.occurrences().to_vec()),
        }
    }

    pub fn witness_sequence(&self, w: &Word) -> Option<StateSequence> {
        self.witness.as_ref().and_then(|s| StateSequence::new(s.clone(), w.clone()).ok())
    }
}

/// Hex SHA-256 of the word's alphabet size and symbols.
pub fn word_digest(w: &Word) -> String {
    let mut h = Sha256::new();
    h.update([w.alphabet_size()]);
    h.update(w.symbols());
    hex::encode(h.finalize())
}

struct Dfs<'a> {
    word: &'a [u8],
    q: usize,
    k: usize,
    det: bool,
    states: Vec<usize>,
    maxes: Vec<usize>,
    uses: Vec<u32>,
    target: Vec<usize>,
    edges: Vec<(usize, usize)>,
    rows: Vec<Vec<u8>>,
    valid: usize,
    deadline: Option<Instant>,
    ticks: u32,
    out_of_time: bool,
}

enum Step {
    Ok,
    Rejected,
}

impl<'a> Dfs<'a> {
    fn new(word: &'a [u8], k: usize, q: usize, det: bool, deadline: Option<Instant>) -> Self {
        let n = word.len();
        let mut rows = vec![vec![0u8; q]; n + 1];
        rows[0][0] = 1;
        Dfs {
            word,
            q,
            k,
            det,
            states: vec![0],
            maxes: vec![0],
            uses: vec![0; q * k * q],
            target: vec![usize::MAX; q * k],
            edges: Vec::new(),
            rows,
            valid: 0,
            deadline,
            ticks: 0,
            out_of_time: false,
        }
    }

    fn n(&self) -> usize {
        self.word.len()
    }

    fn push(&mut self, v: usize) -> Step {
        let i = self.states.len();
        let u = self.states[i - 1];
        let a = self.word[i - 1] as usize;
        if self.det {
            let t = self.target[u * self.k + a];
            if t != usize::MAX && t != v {
                return Step::Rejected;
            }
        }
        let max = self.maxes[i - 1].max(v);
        if max + 1 + (self.n() - i) < self.q {
            return Step::Rejected;
        }
        let slot = (u * self.k + a) * self.q + v;
        self.uses[slot] += 1;
        if self.uses[slot] == 1 {
            self.edges.push((u, v));
            self.target[u * self.k + a] = v;
            self.valid = 0;
        }
        self.states.push(v);
        self.maxes.push(max);
        for j in self.valid + 1..=i {
            let (done, rest) = self.rows.split_at_mut(j);
            let prev = &done[j - 1];
            let row = &mut rest[0];
            row.iter_mut().for_each(|c| *c = 0);
            for &(from, to) in &self.edges {
                row[to] = (row[to] + prev[from]).min(2);
            }
        }
        self.valid = i;
        if self.rows[i][v] != 1 {
            self.pop();
            return Step::Rejected;
        }
        Step::Ok
    }

    fn pop(&mut self) {
        let i = self.states.len() - 1;
        let v = self.states.pop().unwrap();
        self.maxes.pop();
        let u = self.states[i - 1];
        let a = self.word[i - 1] as usize;
        let slot = (u * self.k + a) * self.q + v;
        self.uses[slot] -= 1;
        if self.uses[slot] == 0 {
            self.edges.pop();
            self.target[u * self.k + a] = usize::MAX;
            self.valid = 0;
        } else {
            self.valid = self.valid.min(i - 1);
        }
    }

    fn tick(&mut self) -> bool {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks.is_multiple_of(4096) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.out_of_time = true;
                }
            }
        }
        self.out_of_time
    }

    /// Least completion of the current prefix.
    fn explore(&mut self) -> Option<Vec<usize>> {
        if self.tick() {
            return None;
        }
        let i = self.states.len();
        let max = self.maxes[i - 1];
        if i == self.n() + 1 {
            return (max + 1 == self.q).then(|| self.states.clone());
        }
        for v in 0..=(max + 1).min(self.q - 1) {
            if let Step::Ok = self.push(v) {
                let found = self.explore();
                self.pop();
                if found.is_some() || self.out_of_time {
                    return found;
                }
            }
        }
        None
    }

    /// Replays `prefix` (which starts with 0) and explores below it.
    fn explore_from(&mut self, prefix: &[usize]) -> Option<Vec<usize>> {
        let mut pushed = 0;
        let mut result = None;
        let mut ok = true;
        for &v in &prefix[1..] {
            match self.push(v) {
                Step::Ok => pushed += 1,
                Step::Rejected => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            result = self.explore();
        }
        for _ in 0..pushed {
            self.pop();
        }
        result
    }
}

/// Canonical prefixes of length `min(depth, n + 1)` using fewer than `q + 1`
/// states, in lexicographic order.
pub fn frontier_prefixes(n: usize, q: usize, depth: usize) -> Vec<Vec<usize>> {
    let len = depth.clamp(1, n + 1);
    let mut out = Vec::new();
    let mut cur = vec![0usize];
    fn rec(cur: &mut Vec<usize>, len: usize, q: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let max = *cur.iter().max().unwrap();
        for v in 0..=(max + 1).min(q - 1) {
            cur.push(v);
            rec(cur, len, q, out);
            cur.pop();
        }
    }
    rec(&mut cur, len, q, &mut out);
    out
}

/// Saved state of one fixed-`q` search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub digest: String,
    pub q: usize,
    pub deterministic: bool,
    /// `Some(result)` once the search for this `q` has finished.
    pub done: Option<Option<Vec<usize>>>,
    pub frontier: Vec<Vec<usize>>,
}

fn join(s: &[usize]) -> String {
    s.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn split(line: &str, n: usize) -> Result<Vec<usize>, SearchError> {
    line.split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SearchError::Corrupt { line: n, reason: e.to_string() })
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mode = if self.deterministic { "aminus" } else { "an" };
        let mut out = format!("{} {} {}\n", self.digest, self.q, mode);
        match &self.done {
            Some(Some(s)) => out.push_str(&format!("done {}\n", join(s))),
            Some(None) => out.push_str("done none\n"),
            None => {}
        }
        for p in &self.frontier {
            out.push_str(&join(p));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SearchError> {
        let mut lines = text.lines().enumerate();
        let corrupt = |line: usize, reason: &str| SearchError::Corrupt { line: line + 1, reason: reason.into() };
        let (_, header) = lines.next().ok_or_else(|| corrupt(0, "empty file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0].len() != 64 || !parts[0].bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(corrupt(0, "header must be `digest q mode`"));
        }
        let q = parts[1].parse::<usize>().map_err(|_| corrupt(0, "bad q"))?;
        let deterministic = match parts[2] {
            "an" => false,
            "aminus" => true,
            _ => return Err(corrupt(0, "mode must be an or aminus")),
        };
        let mut done = None;
        let mut frontier = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("done ") {
                if done.is_some() || !frontier.is_empty() {
                    return Err(corrupt(i, "misplaced done line"));
                }
                done = Some(if rest.trim() == "none" { None } else { Some(split(rest, i + 1)?) });
            } else {
                let p = split(line, i + 1)?;
                if p.first() != Some(&0) {
                    return Err(corrupt(i, "prefix must start at state 0"));
                }
                frontier.push(p);
            }
        }
        Ok(Checkpoint { digest: parts[0].to_string(), q, deterministic, done, frontier })
    }
}

pub fn checkpoint_save(path: &Path, c: &Checkpoint) -> Result<(), SearchError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(c.to_text().as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn checkpoint_load(path: &Path) -> Result<Checkpoint, SearchError> {
    Checkpoint::from_text(&fs::read_to_string(path)?)
}

enum Outcome {
    Found(Vec<usize>),
    Exhausted,
    OutOfTime,
}

/// Result of a single fixed-`q` search that may be interrupted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixedQOutcome {
    Found(StateSequence),
    Exhausted,
    OutOfTime,
}

struct Run<'a> {
    word: &'a Word,
    q: usize,
    det: bool,
    deadline: Option<Instant>,
    checkpoint: Option<&'a Path>,
    chunk: usize,
}

impl Run<'_> {
    fn save(&self, done: Option<Option<Vec<usize>>>, frontier: &[Vec<usize>]) -> Result<(), SearchError> {
        if let Some(path) = self.checkpoint {
            let c = Checkpoint {
                digest: word_digest(self.word),
                q: self.q,
                deterministic: self.det,
                done,
                frontier: frontier.to_vec(),
            };
            checkpoint_save(path, &c)?;
        }
        Ok(())
    }

    fn go(&self, frontier: Vec<Vec<usize>>) -> Result<Outcome, SearchError> {
        let symbols = self.word.symbols();
        let k = self.word.alphabet_size() as usize;
        let mut rest: &[Vec<usize>] = &frontier;
        self.save(None, rest)?;
        while !rest.is_empty() {
            let take = self.chunk.min(rest.len());
            let results: Vec<(Option<Vec<usize>>, bool)> = rest[..take]
                .par_iter()
                .map(|p| {
                    let mut dfs = Dfs::new(symbols, k, self.q, self.det, self.deadline);
                    let r = dfs.explore_from(p);
                    (r, dfs.out_of_time)
                })
                .collect();
            for (j, (found, late)) in results.into_iter().enumerate() {
                if late {
                    self.save(None, &rest[j..])?;
                    return Ok(Outcome::OutOfTime);
                }
                if let Some(s) = found {
                    self.save(Some(Some(s.clone())), &[])?;
                    return Ok(Outcome::Found(s));
                }
            }
            rest = &rest[take..];
            self.save(None, rest)?;
            if self.deadline.is_some_and(|d| Instant::now() >= d) && !rest.is_empty() {
                return Ok(Outcome::OutOfTime);
            }
        }
        self.save(Some(None), &[])?;
        Ok(Outcome::Exhausted)
    }
}

fn run_q(
    w: &Word,
    q: usize,
    det: bool,
    depth: usize,
    deadline: Option<Instant>,
    checkpoint: Option<&Path>,
    frontier: Option<Vec<Vec<usize>>>,
) -> Result<Outcome, SearchError> {
    let run = Run {
        word: w,
        q,
        det,
        deadline,
        checkpoint,
        chunk: 2 * rayon::current_num_threads(),
    };
    let frontier = frontier.unwrap_or_else(|| frontier_prefixes(w.len(), q, depth));
    run.go(frontier)
}

fn to_sequence(w: &Word, s: Vec<usize>) -> StateSequence {
    StateSequence::new(s, w.clone()).expect("search emits canonical sequences")
}

/// Least canonical sequence with exactly `q` states inducing a unique witness
/// for `w` (deterministic when asked), if any.
pub fn search_fixed_q(w: &Word, q: usize, deterministic: bool) -> Option<StateSequence> {
    if q == 0 || q > w.len() + 1 {
        return None;
    }
    match run_q(w, q, deterministic, 4, None, None, None).expect("no checkpoint i/o") {
        Outcome::Found(s) => Some(to_sequence(w, s)),
        _ => None,
    }
}

/// [`search_fixed_q`] with the budget, thread count, split depth and
/// checkpoint of `cfg` (its bounds and mode are ignored). A checkpoint for the
/// same word, `q` and mode is resumed; anything else there is overwritten.
pub fn search_fixed_q_with(
    w: &Word,
    q: usize,
    deterministic: bool,
    cfg: &SearchConfig,
) -> Result<FixedQOutcome, SearchError> {
    if q == 0 || q > w.len() + 1 {
        return Err(SearchError::BadBounds { q_min: q, q_max: q, n: w.len() });
    }
    let deadline = cfg.time_budget.map(|b| Instant::now() + b);
    let path = cfg.checkpoint_path.as_deref();
    let mut frontier = None;
    if let Some(c) = path.and_then(|p| checkpoint_load(p).ok()) {
        if c.digest == word_digest(w) && c.q == q && c.deterministic == deterministic {
            match c.done {
                Some(Some(s)) => return Ok(FixedQOutcome::Found(to_sequence(w, s))),
                Some(None) => return Ok(FixedQOutcome::Exhausted),
                None => frontier = Some(c.frontier),
            }
        }
    }
    let depth = cfg.parallel_split_depth;
    with_pool(cfg.threads, || match run_q(w, q, deterministic, depth, deadline, path, frontier)? {
        Outcome::Found(s) => Ok(FixedQOutcome::Found(to_sequence(w, s))),
        Outcome::Exhausted => Ok(FixedQOutcome::Exhausted),
        Outcome::OutOfTime => Ok(FixedQOutcome::OutOfTime),
    })?
}

/// Same contract as [`search_fixed_q`] by brute force: every canonical
/// sequence is induced and checked, nothing is pruned.
pub fn search_fixed_q_exhaustive(w: &Word, q: usize, deterministic: bool) -> Option<StateSequence> {
    let n = w.len();
    if q == 0 || q > n + 1 {
        return None;
    }
    frontier_prefixes(n, q, n + 1).into_iter().find_map(|s| {
        if s.iter().max() != Some(&(q - 1)) {
            return None;
        }
        let seq = to_sequence(w, s);
        let a = induce_from_sequence(&seq);
        (is_unique_witness(&a, w) && (!deterministic || is_deterministic_partial(&a))).then_some(seq)
    })
}

/// Least `q` accepted by [`search_fixed_q_exhaustive`].
pub fn exhaustive_complexity(w: &Word, deterministic: bool) -> (usize, StateSequence) {
    (1..=w.len() + 1)
        .find_map(|q| search_fixed_q_exhaustive(w, q, deterministic).map(|s| (q, s)))
        .expect("the path automaton always witnesses")
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, SearchError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| SearchError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn exact(w: &Word, cfg: &SearchConfig, measure: Measure) -> Result<ComplexityRecord, SearchError> {
    let started = Instant::now();
    let n = w.len();
    let q_max = cfg.q_max.unwrap_or(n + 1);
    if cfg.q_min == 0 || q_max > n + 1 || cfg.q_min > q_max {
        return Err(SearchError::BadBounds { q_min: cfg.q_min, q_max, n });
    }
    let det = measure == Measure::Aminus;
    let deadline = cfg.time_budget.map(|b| started + b);
    let mut q = cfg.q_min.max(an_lower(w).value);
    let mut resume = None;
    if let Some(path) = cfg.checkpoint_path.as_deref() {
        // an unreadable or foreign checkpoint means a clean start
        if let Ok(c) = checkpoint_load(path) {
            if c.digest == word_digest(w) && c.deterministic == det && c.q >= q && c.q <= q_max {
                q = c.q;
                match c.done {
                    Some(Some(s)) => resume = Some(Err(s)),
                    Some(None) => q += 1,
                    None => resume = Some(Ok(c.frontier)),
                }
            }
        }
    }
    let record = |value: usize, witness: Option<Vec<usize>>, bracket: Option<(usize, usize)>| ComplexityRecord {
        word: w.to_string(),
        length: n,
        measure,
        value,
        witness,
        elapsed_ms: started.elapsed().as_millis() as u64,
        method: "canonical state-sequence search".into(),
        complete: bracket.is_none(),
        bracket,
        family: None,
    };
    if let Some(Err(s)) = resume {
        return Ok(record(q, Some(s), None));
    }
    let mut frontier = resume.map(|r| r.unwrap_or_default());
    let checkpoint = cfg.checkpoint_path.as_deref();
    let depth = cfg.parallel_split_depth;
    with_pool(cfg.threads, || {
        while q <= q_max {
            match run_q(w, q, det, depth, deadline, checkpoint, frontier.take())? {
                Outcome::Found(s) => return Ok(record(q, Some(s), None)),
                Outcome::Exhausted => q += 1,
                Outcome::OutOfTime => return Ok(record(n + 1, None, Some((q, n + 1)))),
            }
        }
        Ok(record(n + 1, None, Some((q_max + 1, n + 1))))
    })?
}

/// A_N(w): least `q` with a unique-witness sequence, ascending from
/// `max(q_min, A_N^lower(w))`.
pub fn an_exact(w: &Word, cfg: &SearchConfig) -> Result<ComplexityRecord, SearchError> {
    exact(w, cfg, Measure::An)
}

/// A^-(w): as [`an_exact`] with deterministic partial witnesses only.
pub fn aminus_exact(w: &Word, cfg: &SearchConfig) -> Result<ComplexityRecord, SearchError> {
    exact(w, cfg, Measure::Aminus)
}
