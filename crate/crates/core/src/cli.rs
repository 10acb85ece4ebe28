//! Command-line front end: words, complexity records with a JSONL cache,
//! table reproduction, rate curves and witness export.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{induce_from_sequence, is_deterministic_partial, is_unique_witness};
use crate::constructions::{
    fibonacci_japan_witness, fibonacci_witness, tribonacci_witness, upper_rate, UpperRateKind, Witness,
};
use crate::repetitions::{
    an_lower, fibonacci_critical_exponent, rate_lower, sept6_bound, tribonacci_critical_exponent, LowerRateKind,
};
use crate::search::{aminus_exact, an_exact, word_digest, ComplexityRecord, Measure, SearchConfig};
use crate::words::{infinite_prefix, kbonacci_number, kbonacci_word, Word};

pub const CACHE_ENV: &str = "AUTOPLEX_CACHE";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("time budget exhausted; value lies in [{lo}, {hi}]")]
    Budget { lo: usize, hi: usize },
    #[error("cache inconsistency: {0}")]
    Cache(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Budget { .. } => 3,
            CliError::Cache(_) => 4,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "autoplex", version, about = "Automatic complexity of k-bonacci words")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a finite k-bonacci word or a prefix of the infinite one.
    Word {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, conflicts_with = "prefix", required_unless_present = "prefix")]
        n: Option<usize>,
        #[arg(long)]
        prefix: Option<usize>,
    },
    /// Compute A_N, A^- or A_N^lower of a word and print a JSON record.
    Complexity {
        word: Option<String>,
        #[arg(long, conflicts_with = "word")]
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MeasureArg::An)]
        measure: MeasureArg,
        /// Seconds.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Recompute even on a cache hit and compare.
        #[arg(long)]
        recompute: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = 4)]
        split_depth: usize,
    },
    /// Reproduce the tables for Tribonacci (1) and Fibonacci (2) words.
    Tables {
        #[arg(long)]
        which: Option<u8>,
        #[arg(long, default_value_t = 10)]
        max_n: usize,
        /// Also compute the expensive cells.
        #[arg(long)]
        slow: bool,
        /// Write CSV here (one file per table, suffixed when both are printed).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// CSV of A_N^lower rates of prefixes against the known asymptotic bounds.
    Rates {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify a witness automaton; print its record, optionally DOT.
    Witness {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    An,
    Aminus,
    Anlower,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Measure {
        match m {
            MeasureArg::An => Measure::An,
            MeasureArg::Aminus => Measure::Aminus,
            MeasureArg::Anlower => Measure::AnLower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Fib,
    FibJapan,
    Trib,
}

/// Parses `args` and runs the command, writing to stdout. Returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut out = String::new();
    let result = execute(&cli.command, &mut out);
    print!("{out}");
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command, appending its standard output to `out`.
pub fn execute(cmd: &Command, out: &mut String) -> Result<(), CliError> {
    match cmd {
        Command::Word { k, n, prefix } => {
            let w = match (n, prefix) {
                (Some(n), _) => kbonacci_word(*k, *n),
                (None, Some(len)) => infinite_prefix(*k, *len),
                (None, None) => return Err(domain("give --n or --prefix")),
            }
            .map_err(domain)?;
            let _ = writeln!(out, "{w}");
        }
        Command::Complexity { word, file, measure, budget, checkpoint, cache, recompute, threads, split_depth } => {
            let text = match (word, file) {
                (Some(w), _) => w.clone(),
                (None, Some(f)) => fs::read_to_string(f)?,
                (None, None) => return Err(domain("give a word or --file")),
            };
            let w: Word = text.trim().parse().map_err(domain)?;
            let cfg = SearchConfig {
                parallel_split_depth: *split_depth,
                checkpoint_path: checkpoint.clone(),
                time_budget: budget.map(Duration::from_secs),
                threads: *threads,
                ..SearchConfig::default()
            };
            let cache_path = std::env::var_os(CACHE_ENV).map(PathBuf::from).or_else(|| cache.clone());
            let record = complexity(&w, (*measure).into(), &cfg, cache_path.as_deref(), *recompute)?;
            out.push_str(&serde_json::to_string(&record).expect("records serialize"));
            out.push('\n');
            if let Some((lo, hi)) = record.bracket {
                return Err(CliError::Budget { lo, hi });
            }
        }
        Command::Tables { which, max_n, slow, csv } => {
            let which: Vec<u8> = match which {
                Some(t @ (1 | 2)) => vec![*t],
                Some(t) => return Err(domain(format!("no table {t}"))),
                None => vec![1, 2],
            };
            for (i, &t) in which.iter().enumerate() {
                let table = if t == 1 { tribonacci_table(*max_n, *slow) } else { fibonacci_table(*max_n) }?;
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&table.to_text());
                if let Some(path) = csv {
                    let path = if which.len() > 1 { suffixed(path, t) } else { path.clone() };
                    fs::write(path, table.to_csv())?;
                }
            }
        }
        Command::Rates { k, max_len, out: path } => {
            let csv = rates_csv(*k, *max_len)?;
            match path {
                Some(p) => fs::write(p, csv)?,
                None => out.push_str(&csv),
            }
        }
        Command::Witness { family, n, dot } => {
            let w = witness(*family, *n)?;
            out.push_str(&serde_json::to_string(&w.record).expect("records serialize"));
            out.push('\n');
            if let Some(p) = dot {
                fs::write(p, w.dot())?;
            }
        }
    }
    Ok(())
}

fn suffixed(path: &Path, table: u8) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}{table}.{ext}"))
}

/// Witness for the `n`-th word of the family. Tribonacci uses `T_n`
/// numbering, so `n >= 9`.
pub fn witness(family: Family, n: usize) -> Result<Witness, CliError> {
    match family {
        Family::Fib => fibonacci_witness(n),
        Family::FibJapan => fibonacci_japan_witness(n),
        Family::Trib => {
            if n < 9 {
                return Err(domain(format!("tribonacci witnesses start at T_9, got T_{n}")));
            }
            tribonacci_witness(n - 3)
        }
    }
    .map_err(domain)
}

/// One line of the JSONL results cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub digest: String,
    pub word: String,
    pub measure: Measure,
    pub value: usize,
    pub witness: Option<Vec<usize>>,
    pub version: String,
    pub timestamp: u64,
}

impl CacheEntry {
    fn from_record(w: &Word, r: &ComplexityRecord) -> Self {
        CacheEntry {
            digest: word_digest(w),
            word: r.word.clone(),
            measure: r.measure,
            value: r.value,
            witness: r.witness.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

/// Append-only JSONL cache of complete records.
pub struct Cache {
    path: PathBuf,
}

impl Cache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Cache { path: path.into() }
    }

    pub fn entries(&self) -> Result<Vec<CacheEntry>, CliError> {
        let file = match fs::File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(&line)
                .map_err(|e| CliError::Cache(format!("{} line {}: {e}", self.path.display(), i + 1)))?;
            out.push(e);
        }
        Ok(out)
    }

    /// The cached entry for `(w, measure)`. Entries that disagree on the
    /// value are an error.
    pub fn lookup(&self, w: &Word, measure: Measure) -> Result<Option<CacheEntry>, CliError> {
        let digest = word_digest(w);
        let word = w.to_string();
        let hits: Vec<CacheEntry> = self
            .entries()?
            .into_iter()
            .filter(|e| e.digest == digest && e.word == word && e.measure == measure)
            .collect();
        if let Some(first) = hits.first() {
            if let Some(bad) = hits.iter().find(|e| e.value != first.value) {
                return Err(CliError::Cache(format!(
                    "{} of {word} cached as both {} and {}",
                    measure.as_str(),
                    first.value,
                    bad.value
                )));
            }
        }
        Ok(hits.into_iter().next())
    }

    pub fn append(&self, e: &CacheEntry) -> Result<(), CliError> {
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{}", serde_json::to_string(e).expect("entries serialize"))?;
        Ok(())
    }
}

fn check_cached(w: &Word, e: &CacheEntry) -> Result<(), CliError> {
    let Some(states) = &e.witness else { return Ok(()) };
    let bad = |why: &str| CliError::Cache(format!("cached witness for {} {why}", e.word));
    let r = ComplexityRecord {
        word: e.word.clone(),
        length: w.len(),
        measure: e.measure,
        value: e.value,
        witness: Some(states.clone()),
        elapsed_ms: 0,
        method: String::new(),
        complete: true,
        bracket: None,
        family: None,
    };
    let seq = r.witness_sequence(w).ok_or_else(|| bad("is not a canonical state sequence"))?;
    if seq.distinct_states() != e.value {
        return Err(bad("has the wrong number of states"));
    }
    let a = induce_from_sequence(&seq);
    if !is_unique_witness(&a, w) || (e.measure == Measure::Aminus && !is_deterministic_partial(&a)) {
        return Err(bad("does not verify"));
    }
    Ok(())
}

fn compute(w: &Word, measure: Measure, cfg: &SearchConfig) -> Result<ComplexityRecord, CliError> {
    let started = Instant::now();
    match measure {
        Measure::An => an_exact(w, cfg).map_err(domain),
        Measure::Aminus => aminus_exact(w, &SearchConfig { deterministic: true, ..cfg.clone() }).map_err(domain),
        Measure::AnLower => Ok(ComplexityRecord::from_lower(w, &an_lower(w), started.elapsed())),
    }
}

/// The record for `(w, measure)`, served from and added to the cache at
/// `cache` when given.
pub fn complexity(
    w: &Word,
    measure: Measure,
    cfg: &SearchConfig,
    cache: Option<&Path>,
    recompute: bool,
) -> Result<ComplexityRecord, CliError> {
    let cache = cache.map(Cache::new);
    let hit = match &cache {
        Some(c) => c.lookup(w, measure)?,
        None => None,
    };
    if let Some(e) = &hit {
        check_cached(w, e)?;
        if !recompute {
            return Ok(ComplexityRecord {
                word: e.word.clone(),
                length: w.len(),
                measure,
                value: e.value,
                witness: e.witness.clone(),
                elapsed_ms: 0,
                method: "cache".into(),
                complete: true,
                bracket: None,
                family: None,
            });
        }
    }
    let record = compute(w, measure, cfg)?;
    if !record.complete {
        return Ok(record);
    }
    if let Some(e) = &hit {
        if e.value != record.value || e.witness != record.witness {
            return Err(CliError::Cache(format!(
                "{} of {}: cached {} but recomputed {}",
                measure.as_str(),
                e.word,
                e.value,
                record.value
            )));
        }
    } else if let Some(c) = &cache {
        c.append(&CacheEntry::from_record(w, &record))?;
    }
    Ok(record)
}

/// Header plus rows of preformatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|j| {
                std::iter::once(&self.header[j])
                    .chain(self.rows.iter().map(|r| &r[j]))
                    .map(|c| c.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }
}

/// One decimal, leading zero dropped below 1, and a bare `0` for zero.
pub fn format_scaled_short(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{x:.1}");
    s.strip_prefix('0').map(str::to_string).unwrap_or(s)
}

/// Two decimals below 2, one decimal from 2 on, `0` for zero.
pub fn format_scaled_upper(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x < 2.0 {
        format!("{x:.2}")
    } else {
        format!("{x:.1}")
    }
}

/// One decimal with the leading zero kept, `0` for zero.
pub fn format_scaled_plain(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.1}")
    }
}

/// `w` when it has at most `head + tail` letters, else its first `head` and
/// last `tail` letters around an ellipsis.
pub fn abbreviate(w: &Word, head: usize, tail: usize) -> String {
    let s = w.to_string();
    if s.len() <= head + tail {
        return s;
    }
    format!("{}\u{2026}{}", &s[..head], &s[s.len() - tail..])
}

fn length(k: usize, n: usize) -> Result<u64, CliError> {
    kbonacci_number(k, n).map_err(domain)
}

/// Tribonacci rows `n = 0..=max_n`: length, word, `0.313 t_n`, A_N^lower,
/// A^- (exact up to `T_8`, and `T_9` with `slow`), the deterministic
/// construction bound from `T_9` on, and `0.487 t_n`.
pub fn tribonacci_table(max_n: usize, slow: bool) -> Result<Table, CliError> {
    let header = ["n", "t_n", "T_n", ".313t_n", "A_N^lower", "A^-", "A^- constr", ".487t_n"];
    let mut rows = Vec::new();
    for n in 0..=max_n {
        let t = length(3, n)?;
        let w = kbonacci_word(3, n).map_err(domain)?;
        let word = if t <= 13 { w.to_string() } else { abbreviate(&w, 4, 7) };
        let lower = an_lower(&w).value;
        let exact_limit = if slow { 9 } else { 8 };
        let aminus = if n <= exact_limit {
            let cfg = SearchConfig { deterministic: true, ..SearchConfig::default() };
            aminus_exact(&w, &cfg).map_err(domain)?.value.to_string()
        } else {
            String::new()
        };
        let constr = if n >= 9 { tribonacci_witness(n - 3).map_err(domain)?.record.value.to_string() } else { String::new() };
        rows.push(vec![
            n.to_string(),
            t.to_string(),
            word,
            format_scaled_short(0.313 * t as f64),
            lower.to_string(),
            aminus,
            constr,
            format_scaled_upper(0.487 * t as f64),
        ]);
    }
    Ok(Table { header: header.map(String::from).to_vec(), rows })
}

/// Fibonacci rows `n = 0..=max_n`: length, word, `0.276 f_n`, A_N^lower and
/// `0.382 f_n`.
pub fn fibonacci_table(max_n: usize) -> Result<Table, CliError> {
    let header = ["n", "f_n", "F_n", ".276f_n", "A_N^lower", ".382f_n"];
    let mut rows = Vec::new();
    for n in 0..=max_n {
        let f = length(2, n)?;
        let w = kbonacci_word(2, n).map_err(domain)?;
        let word = match f {
            0..=21 => w.to_string(),
            22..=34 => abbreviate(&w, 21, 7),
            _ => abbreviate(&w, 4, 4),
        };
        rows.push(vec![
            n.to_string(),
            f.to_string(),
            word,
            format_scaled_short(0.276 * f as f64),
            an_lower(&w).value.to_string(),
            format_scaled_plain(0.382 * f as f64),
        ]);
    }
    Ok(Table { header: header.map(String::from).to_vec(), rows })
}

/// For each prefix length `1..=max_len` of the infinite k-bonacci word: the
/// value and rate of A_N^lower, the rate of the critical-exponent bound, and
/// the asymptotic lower and upper rates known for the word.
pub fn rates_csv(k: usize, max_len: usize) -> Result<String, CliError> {
    let (gamma, lower) = match k {
        2 => (fibonacci_critical_exponent(), rate_lower(LowerRateKind::Fibonacci)),
        3 => (tribonacci_critical_exponent(), rate_lower(LowerRateKind::Tribonacci)),
        _ => (4.0, rate_lower(LowerRateKind::KbonacciGeneric)),
    };
    let uppers: Vec<(&str, f64)> = match k {
        2 => vec![
            ("upper_fib_interm", upper_rate(UpperRateKind::FibInterm)),
            ("upper_fib_japan", upper_rate(UpperRateKind::FibJapan)),
        ],
        3 => vec![("upper_trib_aminus", upper_rate(UpperRateKind::TribAminus))],
        _ => vec![],
    };
    let inf = infinite_prefix(k, max_len).map_err(domain)?;
    let mut out = String::from("n,an_lower,an_lower_rate,critexp_bound_rate,lower_rate");
    for (name, _) in &uppers {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for n in 1..=max_len {
        let v = an_lower(&inf.prefix(n)).value;
        let _ = write!(
            out,
            "{n},{v},{:.6},{:.6},{:.9}",
            v as f64 / n as f64,
            sept6_bound(n, gamma) / n as f64,
            lower
        );
        for (_, u) in &uppers {
            let _ = write!(out, ",{u:.9}");
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_match_the_printed_tables() {
        assert_eq!(format_scaled_short(0.0), "0");
        assert_eq!(format_scaled_short(0.313), ".3");
        assert_eq!(format_scaled_short(25.353), "25.4");
        assert_eq!(format_scaled_upper(0.487), "0.49");
        assert_eq!(format_scaled_upper(1.948), "1.95");
        assert_eq!(format_scaled_upper(3.409), "3.4");
        assert_eq!(format_scaled_plain(0.382), "0.4");
        assert_eq!(format_scaled_plain(4.966), "5.0");
    }

    #[test]
    fn word_command() {
        let mut out = String::new();
        execute(&Command::Word { k: 3, n: Some(7), prefix: None }, &mut out).unwrap();
        execute(&Command::Word { k: 2, n: None, prefix: Some(8) }, &mut out).unwrap();
        execute(&Command::Word { k: 3, n: Some(0), prefix: None }, &mut out).unwrap();
        assert_eq!(out, "0102010010201\n01001010\n\n");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["autoplex", "word", "--k", "1", "--n", "3"]), 2);
        assert_eq!(run(["autoplex", "complexity", "01x"]), 2);
        assert_eq!(run(["autoplex", "witness", "--family", "trib", "--n", "5"]), 2);
        assert_eq!(run(["autoplex", "word", "--k", "2", "--n", "5"]), 0);
    }
}
