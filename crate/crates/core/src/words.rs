//! k-bonacci numbers and words, the defining morphisms, and the algebraic
//! constants used by the rate bounds.
//!
//! Symbols are small integers rendered as `'0'..='9'` in text. The k-bonacci
//! numbers follow the convention `w_n = |W_n|`: zero up to `n = k - 2`, one at
//! `n = k - 1`, then the sum of the previous `k` values.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest alphabet supported; symbols render as single decimal digits.
pub const MAX_ALPHABET: u8 = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WordError {
    #[error("k-bonacci order must be in 2..=9, got {0}")]
    BadOrder(usize),
    #[error("symbol {symbol} is outside the alphabet of size {k}")]
    SymbolOutOfRange { symbol: u8, k: u8 },
    #[error("invalid character {0:?} in word (expected '0'..'9')")]
    BadChar(char),
    #[error("alphabet size must be in 1..=10, got {0}")]
    BadAlphabet(usize),
    #[error("k-bonacci number overflows u64 at k={k}, n={n}")]
    Overflow { k: usize, n: usize },
    #[error("polynomial does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}

/// A finite word over `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<u8>,
    k: u8,
}

impl Word {
    pub fn new(symbols: Vec<u8>, k: u8) -> Result<Self, WordError> {
        if k == 0 || k > MAX_ALPHABET {
            return Err(WordError::BadAlphabet(k as usize));
        }
        if let Some(&symbol) = symbols.iter().find(|&&s| s >= k) {
            return Err(WordError::SymbolOutOfRange { symbol, k });
        }
        Ok(Word { symbols, k })
    }

    /// Word whose alphabet is the smallest one containing every symbol.
    pub fn from_symbols(symbols: Vec<u8>) -> Result<Self, WordError> {
        let k = symbols.iter().copied().max().map_or(1, |m| m + 1);
        Word::new(symbols, k)
    }

    pub fn empty(k: u8) -> Self {
        Word { symbols: Vec::new(), k }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.symbols
    }

    pub fn alphabet_size(&self) -> u8 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn reversed(&self) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.reverse();
        Word { symbols, k: self.k }
    }

    /// Relabels symbols through `perm`, which must be a permutation of `0..k`.
    pub fn permuted(&self, perm: &[u8]) -> Result<Word, WordError> {
        let symbols = self.symbols.iter().map(|&s| perm[s as usize]).collect();
        Word::new(symbols, self.k.max(perm.len() as u8))
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word {
            symbols: self.symbols[..len.min(self.len())].to_vec(),
            k: self.k,
        }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.symbols.starts_with(&self.symbols)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.symbols {
            write!(f, "{}", (b'0' + s) as char)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let symbols = s
            .trim()
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or(WordError::BadChar(c)))
            .collect::<Result<Vec<_>, _>>()?;
        Word::from_symbols(symbols)
    }
}

fn check_order(k: usize) -> Result<(), WordError> {
    if (2..=9).contains(&k) {
        Ok(())
    } else {
        Err(WordError::BadOrder(k))
    }
}

/// `|W_n^(k)|`.
pub fn kbonacci_number(k: usize, n: usize) -> Result<u64, WordError> {
    check_order(k)?;
    if n + 2 <= k {
        return Ok(0);
    }
    if n + 1 == k {
        return Ok(1);
    }
    // window holds w_{i-k} .. w_{i-1}
    let mut window = vec![0u64; k];
    window[k - 1] = 1;
    let mut sum = 1u64;
    for _ in k..=n {
        let next = sum;
        sum = sum
            .checked_add(next)
            .and_then(|s| s.checked_sub(window[0]))
            .ok_or(WordError::Overflow { k, n })?;
        window.rotate_left(1);
        window[k - 1] = next;
    }
    Ok(window[k - 1])
}

fn morph_into(k: u8, symbols: &[u8], out: &mut Vec<u8>) {
    for &s in symbols {
        out.push(0);
        if s + 1 < k {
            out.push(s + 1);
        }
    }
}

/// Image under `a_i -> a_0 a_{i+1}` (`i <= k-2`), `a_{k-1} -> a_0`.
pub fn apply_morphism(k: usize, w: &Word) -> Result<Word, WordError> {
    check_order(k)?;
    let k = k as u8;
    if let Some(&symbol) = w.symbols().iter().find(|&&s| s >= k) {
        return Err(WordError::SymbolOutOfRange { symbol, k });
    }
    let mut out = Vec::with_capacity(2 * w.len());
    morph_into(k, w.symbols(), &mut out);
    Word::new(out, k)
}

/// The finite k-bonacci word `W_n`.
pub fn kbonacci_word(k: usize, n: usize) -> Result<Word, WordError> {
    check_order(k)?;
    let kk = k as u8;
    if n + 2 <= k {
        return Ok(Word::empty(kk));
    }
    let mut symbols = vec![kk - 1];
    let mut scratch = Vec::new();
    for _ in k..=n {
        scratch.clear();
        morph_into(kk, &symbols, &mut scratch);
        std::mem::swap(&mut symbols, &mut scratch);
    }
    Word::new(symbols, kk)
}

/// First `len` symbols of the fixed point of the k-bonacci morphism.
pub fn infinite_prefix(k: usize, len: usize) -> Result<Word, WordError> {
    check_order(k)?;
    let kk = k as u8;
    let mut out: Vec<u8> = Vec::with_capacity(len + 1);
    out.push(0);
    // The fixed point is its own image: symbol i of the output expands into
    // the block that continues the output.
    let mut i = 0;
    while out.len() < len {
        let s = out[i];
        if i == 0 {
            // image of the leading 0 is 01 and its 0 is already present
            out.push(1);
        } else {
            out.push(0);
            if s + 1 < kk {
                out.push(s + 1);
            }
        }
        i += 1;
    }
    out.truncate(len);
    Word::new(out, kk)
}

/// Evaluates a polynomial given by coefficients in ascending degree order.
pub fn eval_poly(coeffs: &[i64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// Default bisection tolerance.
pub const ROOT_TOL: f64 = 1e-12;

/// Bisects `coeffs` (ascending degree) on `[lo, hi]` down to width `tol`.
///
/// The bracket must straddle a sign change; the caller is responsible for it
/// containing exactly one root.
pub fn refine_root(coeffs: &[i64], bracket: (f64, f64), tol: f64) -> Result<f64, WordError> {
    let (mut lo, mut hi) = bracket;
    let mut flo = eval_poly(coeffs, lo);
    let fhi = eval_poly(coeffs, hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(WordError::NoSignChange { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = eval_poly(coeffs, mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol && fmid.abs() <= tol {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstantName {
    /// Golden ratio, `x^2 = x + 1`.
    Phi,
    /// Tribonacci constant, `x^3 = x^2 + x + 1`.
    Xi,
    /// Reciprocal of the Tribonacci constant, `x^3 + x^2 + x = 1`.
    Theta,
    /// Critical exponent of the infinite Tribonacci word.
    TribCriticalExponent,
    /// Lower bound on the Tribonacci A_N rate.
    TribLowerRate,
    /// Lower bound on the Fibonacci A_N rate, `2 / (5 + sqrt 5)`.
    FibLowerRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: ConstantName,
    pub value: f64,
    /// Ascending-degree integer coefficients.
    pub polynomial: Vec<i64>,
    pub bracket: (f64, f64),
}

impl ConstantName {
    pub fn polynomial(self) -> (Vec<i64>, (f64, f64)) {
        match self {
            ConstantName::Phi => (vec![-1, -1, 1], (1.0, 2.0)),
            ConstantName::Xi => (vec![-1, -1, -1, 1], (1.0, 2.0)),
            ConstantName::Theta => (vec![-1, 1, 1, 1], (0.0, 1.0)),
            ConstantName::TribCriticalExponent => (vec![-13, 22, -12, 2], (3.0, 4.0)),
            ConstantName::TribLowerRate => (vec![-2, 12, -22, 13], (0.0, 1.0)),
            // (5 - sqrt 5) / 10 is the smaller root of 5x^2 - 5x + 1
            ConstantName::FibLowerRate => (vec![1, -5, 5], (0.0, 0.5)),
        }
    }
}

pub fn constant(name: ConstantName) -> Constant {
    let (polynomial, bracket) = name.polynomial();
    let value = refine_root(&polynomial, bracket, ROOT_TOL)
        .expect("built-in brackets straddle a sign change");
    Constant { name, value, polynomial, bracket }
}

pub fn phi() -> f64 {
    constant(ConstantName::Phi).value
}

pub fn xi() -> f64 {
    constant(ConstantName::Xi).value
}

pub fn theta() -> f64 {
    constant(ConstantName::Theta).value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn fibonacci_numbers_match_table() {
        let got: Vec<u64> = (0..=10).map(|n| kbonacci_number(2, n).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55]);
    }

    #[test]
    fn tribonacci_numbers() {
        assert_eq!(kbonacci_number(3, 10).unwrap(), 81);
        assert_eq!(kbonacci_number(5, 3).unwrap(), 0);
        assert_eq!(kbonacci_number(5, 4).unwrap(), 1);
        assert!(matches!(kbonacci_number(1, 3), Err(WordError::BadOrder(1))));
    }

    #[test]
    fn words_from_tables() {
        assert_eq!(kbonacci_word(3, 7).unwrap().to_string(), "0102010010201");
        assert_eq!(kbonacci_word(2, 6).unwrap().to_string(), "01001010");
        assert_eq!(kbonacci_word(2, 1).unwrap().to_string(), "1");
        assert_eq!(kbonacci_word(4, 3).unwrap().to_string(), "3");
        assert_eq!(kbonacci_word(3, 1).unwrap().to_string(), "");
    }

    #[test]
    fn morphism_examples() {
        assert_eq!(apply_morphism(2, &w("0")).unwrap().to_string(), "01");
        let x = Word::new(vec![1, 0, 2], 3).unwrap();
        assert_eq!(apply_morphism(3, &x).unwrap().to_string(), "02010");
        assert!(apply_morphism(3, &Word::empty(3)).unwrap().is_empty());
        assert!(apply_morphism(2, &w("2")).is_err());
    }

    #[test]
    fn infinite_prefixes() {
        assert_eq!(infinite_prefix(3, 13).unwrap().to_string(), "0102010010201");
        assert_eq!(infinite_prefix(2, 5).unwrap().to_string(), "01001");
        assert!(infinite_prefix(4, 0).unwrap().is_empty());
        let long = kbonacci_word(2, 15).unwrap();
        assert_eq!(infinite_prefix(2, long.len()).unwrap(), long);
    }

    #[test]
    fn roots() {
        let r = refine_root(&[-13, 22, -12, 2], (3.0, 4.0), ROOT_TOL).unwrap();
        assert!((r - 3.19148788).abs() < 1e-8);
        let r = refine_root(&[-2, 12, -22, 13], (0.0, 1.0), ROOT_TOL).unwrap();
        assert!((r - 0.313333478).abs() < 1e-9);
        let r = refine_root(&[-1, -1, -1, 1], (1.0, 2.0), ROOT_TOL).unwrap();
        assert!((r - 1.839286755).abs() < 1e-9);
        assert!(matches!(
            refine_root(&[1, 0, 1], (0.0, 1.0), ROOT_TOL),
            Err(WordError::NoSignChange { .. })
        ));
    }

    #[test]
    fn constants_satisfy_polynomials() {
        for name in [
            ConstantName::Phi,
            ConstantName::Xi,
            ConstantName::Theta,
            ConstantName::TribCriticalExponent,
            ConstantName::TribLowerRate,
            ConstantName::FibLowerRate,
        ] {
            let c = constant(name);
            assert!(eval_poly(&c.polynomial, c.value).abs() <= 1e-9, "{name:?}");
            assert!(c.bracket.0 <= c.value && c.value <= c.bracket.1);
        }
        let p = phi();
        assert!((p * p - p - 1.0).abs() < 1e-9);
        assert!((theta() - 1.0 / xi()).abs() < 1e-9);
    }

    #[test]
    fn parse_and_display() {
        let x = w("0120");
        assert_eq!(x.alphabet_size(), 3);
        assert_eq!(x.to_string(), "0120");
        assert!(matches!("01a".parse::<Word>(), Err(WordError::BadChar('a'))));
        assert!(Word::new(vec![3], 2).is_err());
    }
}
