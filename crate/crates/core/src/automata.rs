//! Candidate witness automata.
//!
//! An [`Nfa`] always starts in state 0 and carries no epsilon moves. Witnesses
//! are normally induced from a [`StateSequence`], the list of states visited
//! by the unique accepting path; the induced automaton then has the single
//! accept state `s_n`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::words::{Word, WordError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomatonError {
    #[error("state {state} out of range for an automaton with {q} states")]
    StateOutOfRange { state: usize, q: usize },
    #[error("symbol {symbol} out of range for alphabet of size {k}")]
    SymbolOutOfRange { symbol: u8, k: u8 },
    #[error("an automaton needs at least one state")]
    NoStates,
    #[error("accept set must be nonempty")]
    NoAccept,
    #[error("operation requires exactly one accept state, found {0}")]
    NotSingleAccept(usize),
    #[error("state sequence has length {got}, expected {expected}")]
    SequenceLength { got: usize, expected: usize },
    #[error("state sequence must start at state 0")]
    SequenceStart,
    #[error("state sequence is not in restricted-growth form at position {0}")]
    NotCanonical(usize),
    #[error("malformed automaton text at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// A labeled edge `(from, symbol, to)`.
pub type Edge = (usize, u8, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    q: usize,
    k: u8,
    edges: BTreeSet<Edge>,
    accept: BTreeSet<usize>,
}

impl Nfa {
    pub fn new(
        q: usize,
        k: u8,
        edges: impl IntoIterator<Item = Edge>,
        accept: impl IntoIterator<Item = usize>,
    ) -> Result<Self, AutomatonError> {
        if q == 0 {
            return Err(AutomatonError::NoStates);
        }
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        let accept: BTreeSet<usize> = accept.into_iter().collect();
        for &(from, symbol, to) in &edges {
            for state in [from, to] {
                if state >= q {
                    return Err(AutomatonError::StateOutOfRange { state, q });
                }
            }
            if symbol >= k {
                return Err(AutomatonError::SymbolOutOfRange { symbol, k });
            }
        }
        if accept.is_empty() {
            return Err(AutomatonError::NoAccept);
        }
        if let Some(&state) = accept.iter().find(|&&s| s >= q) {
            return Err(AutomatonError::StateOutOfRange { state, q });
        }
        Ok(Nfa { q, k, edges, accept })
    }

    pub fn state_count(&self) -> usize {
        self.q
    }

    pub fn alphabet_size(&self) -> u8 {
        self.k
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn accept(&self) -> &BTreeSet<usize> {
        &self.accept
    }

    /// Serializes to the line format: `q k start`, one `from symbol to` per
    /// edge, then `accept: s1 s2 ..`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.q, self.k, self.start());
        for &(from, symbol, to) in &self.edges {
            let _ = writeln!(out, "{from} {symbol} {to}");
        }
        let accept: Vec<String> = self.accept.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "accept: {}", accept.join(" "));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AutomatonError> {
        let parse_err = |line: usize, reason: &str| AutomatonError::Parse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(hline, "header must be `q k start`")))
            .collect::<Result<_, _>>()?;
        let [q, k, start] = nums[..] else {
            return Err(parse_err(hline, "header must be `q k start`"));
        };
        if start != 0 {
            return Err(parse_err(hline, "start state must be 0"));
        }
        let mut edges = Vec::new();
        let mut accept = None;
        for (lineno, line) in lines {
            if let Some(rest) = line.strip_prefix("accept:") {
                let states = rest
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| parse_err(lineno, "bad accept state")))
                    .collect::<Result<Vec<_>, _>>()?;
                accept = Some(states);
                continue;
            }
            let parts: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(lineno, "edge must be `from symbol to`")))
                .collect::<Result<_, _>>()?;
            let [from, symbol, to] = parts[..] else {
                return Err(parse_err(lineno, "edge must be `from symbol to`"));
            };
            edges.push((from, symbol as u8, to));
        }
        let accept = accept.ok_or(AutomatonError::NoAccept)?;
        Nfa::new(q, k as u8, edges, accept)
    }
}

/// States visited by an accepting path, `s_0 = 0`, in restricted-growth form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSequence {
    states: Vec<usize>,
    word: Word,
}

impl StateSequence {
    pub fn new(states: Vec<usize>, word: Word) -> Result<Self, AutomatonError> {
        if states.len() != word.len() + 1 {
            return Err(AutomatonError::SequenceLength {
                got: states.len(),
                expected: word.len() + 1,
            });
        }
        if states[0] != 0 {
            return Err(AutomatonError::SequenceStart);
        }
        let mut max = 0;
        for (i, &s) in states.iter().enumerate().skip(1) {
            if s > max + 1 {
                return Err(AutomatonError::NotCanonical(i));
            }
            max = max.max(s);
        }
        Ok(StateSequence { states, word })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn distinct_states(&self) -> usize {
        self.states.iter().copied().max().unwrap_or(0) + 1
    }
}

/// The automaton whose edges are exactly the steps of `seq`, accepting `s_n`.
pub fn induce_from_sequence(seq: &StateSequence) -> Nfa {
    let symbols = seq.word.symbols();
    let edges = seq
        .states
        .windows(2)
        .zip(symbols)
        .map(|(pair, &a)| (pair[0], a, pair[1]));
    let last = *seq.states.last().expect("sequence has at least one state");
    Nfa::new(seq.distinct_states(), seq.word.alphabet_size(), edges, [last])
        .expect("canonical sequences induce valid automata")
}

#[inline]
fn sat_add(a: u64, b: u64, cap: u64) -> u64 {
    a.saturating_add(b).min(cap)
}

/// Number of length-`n` walks (over all labels) from the start state to any
/// accept state, saturating at `cap`.
pub fn count_accepting_walks(a: &Nfa, n: usize, cap: u64) -> u64 {
    let mut row = vec![0u64; a.q];
    row[0] = 1;
    let mut next = vec![0u64; a.q];
    for _ in 0..n {
        next.iter_mut().for_each(|c| *c = 0);
        for &(from, _, to) in &a.edges {
            if row[from] > 0 {
                next[to] = sat_add(next[to], row[from], cap);
            }
        }
        std::mem::swap(&mut row, &mut next);
    }
    a.accept.iter().fold(0, |acc, &s| sat_add(acc, row[s], cap))
}

/// Number of accepting walks labeled exactly `w`, saturating at 2.
pub fn spells_word(a: &Nfa, w: &Word) -> u64 {
    let mut by_symbol: BTreeMap<u8, Vec<(usize, usize)>> = BTreeMap::new();
    for &(from, symbol, to) in &a.edges {
        by_symbol.entry(symbol).or_default().push((from, to));
    }
    let mut row = vec![0u64; a.q];
    row[0] = 1;
    for symbol in w.symbols() {
        let mut next = vec![0u64; a.q];
        if let Some(moves) = by_symbol.get(symbol) {
            for &(from, to) in moves {
                if row[from] > 0 {
                    next[to] = sat_add(next[to], row[from], 2);
                }
            }
        }
        row = next;
    }
    a.accept.iter().fold(0, |acc, &s| sat_add(acc, row[s], 2))
}

/// `a` accepts `w` and has exactly one accepting walk of length `|w|`.
pub fn is_unique_witness(a: &Nfa, w: &Word) -> bool {
    spells_word(a, w) >= 1 && count_accepting_walks(a, w.len(), 2) == 1
}

/// No two edges share `(from, symbol)`; transitions may be partial.
pub fn is_deterministic_partial(a: &Nfa) -> bool {
    let mut seen = BTreeSet::new();
    a.edges.iter().all(|&(from, symbol, _)| seen.insert((from, symbol)))
}

/// Reverses every edge and swaps the roles of start and the single accept
/// state. States 0 and the old accept state trade labels so the new start is
/// again 0.
pub fn reverse(a: &Nfa) -> Result<Nfa, AutomatonError> {
    if a.accept.len() != 1 {
        return Err(AutomatonError::NotSingleAccept(a.accept.len()));
    }
    let acc = *a.accept.iter().next().unwrap();
    let swap = |s: usize| {
        if s == acc {
            0
        } else if s == 0 {
            acc
        } else {
            s
        }
    };
    let edges = a.edges.iter().map(|&(from, symbol, to)| (swap(to), symbol, swap(from)));
    Nfa::new(a.q, a.k, edges, [swap(0)])
}

/// Display name of a state: `q_0`..`q_9`, then `q_A`.. for 10 and up, falling
/// back to decimal past `q_Z`.
pub fn state_label(s: usize) -> String {
    match s {
        0..=9 => format!("q_{s}"),
        10..=35 => format!("q_{}", (b'A' + (s - 10) as u8) as char),
        _ => format!("q_{s}"),
    }
}

/// Graphviz rendering: the start state gets an arrow from an invisible point
/// node and accept states are drawn as double circles.
pub fn to_dot(a: &Nfa) -> String {
    let mut out = String::from("digraph nfa {\n    rankdir=LR;\n");
    out.push_str("    init [shape=point];\n");
    for s in 0..a.q {
        let shape = if a.accept.contains(&s) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "    {} [shape={shape}];", state_label(s));
    }
    let _ = writeln!(out, "    init -> {};", state_label(0));
    for &(from, symbol, to) in &a.edges {
        let _ = writeln!(
            out,
            "    {} -> {} [label=\"{}\"];",
            state_label(from),
            state_label(to),
            (b'0' + symbol) as char
        );
    }
    out.push_str("}\n");
    out
}
