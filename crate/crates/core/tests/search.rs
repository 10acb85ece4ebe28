use std::fs;
use std::time::Duration;

use autoplex::automata::{induce_from_sequence, is_deterministic_partial, is_unique_witness};
use autoplex::repetitions::an_lower;
use autoplex::search::{
    aminus_exact, an_exact, checkpoint_load, checkpoint_save, exhaustive_complexity, frontier_prefixes,
    search_fixed_q, search_fixed_q_exhaustive, search_fixed_q_with, word_digest, Checkpoint, FixedQOutcome,
    SearchConfig,
};
use autoplex::words::{kbonacci_word, Word};
use proptest::prelude::*;

fn word(k: u8, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..k, 0..=max_len).prop_map(move |s| Word::new(s, k).unwrap())
}

fn det(d: bool) -> SearchConfig {
    SearchConfig { deterministic: d, ..SearchConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pruned_search_matches_exhaustive(w in word(3, 7), q in 1usize..5, d in any::<bool>()) {
        let q = q.min(w.len() + 1);
        prop_assert_eq!(search_fixed_q(&w, q, d), search_fixed_q_exhaustive(&w, q, d));
    }

    #[test]
    fn squeeze(w in word(2, 10)) {
        let lo = an_lower(&w).value;
        let an = an_exact(&w, &det(false)).unwrap().value;
        let am = aminus_exact(&w, &det(true)).unwrap().value;
        prop_assert!(lo <= an && an <= am && am <= w.len() + 1, "{} {} {}", lo, an, am);
    }

    #[test]
    fn reversal_and_permutation(w in word(3, 8)) {
        let v = an_exact(&w, &det(false)).unwrap().value;
        prop_assert_eq!(an_exact(&w.reversed(), &det(false)).unwrap().value, v);
        prop_assert_eq!(an_exact(&w.permuted(&[2, 0, 1]).unwrap(), &det(false)).unwrap().value, v);
    }

    #[test]
    fn witnesses_verify(w in word(3, 12), d in any::<bool>()) {
        let r = if d { aminus_exact(&w, &det(true)) } else { an_exact(&w, &det(false)) }.unwrap();
        let seq = r.witness_sequence(&w).unwrap();
        prop_assert_eq!(seq.distinct_states(), r.value);
        let a = induce_from_sequence(&seq);
        prop_assert!(is_unique_witness(&a, &w));
        prop_assert!(!d || is_deterministic_partial(&a));
    }

    #[test]
    fn unary_words_have_complexity_one(len in 0usize..40) {
        let w = Word::new(vec![0; len], 1).unwrap();
        prop_assert_eq!(an_exact(&w, &det(false)).unwrap().value, 1);
    }
}

#[test]
fn thread_count_does_not_change_the_witness() {
    for w in [kbonacci_word(3, 8).unwrap(), kbonacci_word(2, 8).unwrap()] {
        let one = an_exact(&w, &SearchConfig { threads: Some(1), ..det(false) }).unwrap();
        let many = an_exact(&w, &SearchConfig { threads: Some(4), ..det(false) }).unwrap();
        assert_eq!(one.value, many.value);
        assert_eq!(one.witness, many.witness);
    }
}

#[test]
fn witness_is_the_least_sequence() {
    let w: Word = "0102010".parse().unwrap();
    let fast = search_fixed_q(&w, 4, false).unwrap();
    let slow = search_fixed_q_exhaustive(&w, 4, false).unwrap();
    assert_eq!(fast, slow);
    let (q, _) = exhaustive_complexity(&w, false);
    assert_eq!(q, 4);
}

#[test]
fn zero_budget_leaves_the_unexplored_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck");
    let w = kbonacci_word(3, 8).unwrap();
    let cfg = SearchConfig { checkpoint_path: Some(path.clone()), time_budget: Some(Duration::ZERO), ..det(false) };
    let out = search_fixed_q_with(&w, 13, false, &cfg).unwrap();
    assert_eq!(out, FixedQOutcome::OutOfTime);
    let c = checkpoint_load(&path).unwrap();
    assert_eq!(c.digest, word_digest(&w));
    assert_eq!(c.done, None);
    // prefixes that die at once are consumed even with no time left
    let full = frontier_prefixes(w.len(), 13, 4);
    assert_eq!(full.len(), 15);
    assert!(!c.frontier.is_empty());
    assert!(full.ends_with(&c.frontier));
}

#[test]
fn completed_checkpoint_records_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck");
    let w: Word = "0102010".parse().unwrap();
    let cfg = SearchConfig { checkpoint_path: Some(path.clone()), ..det(false) };
    let FixedQOutcome::Found(s) = search_fixed_q_with(&w, 4, false, &cfg).unwrap() else { panic!() };
    let c = checkpoint_load(&path).unwrap();
    assert!(c.frontier.is_empty());
    assert_eq!(c.done, Some(Some(s.states().to_vec())));
    search_fixed_q_with(&w, 3, false, &cfg).unwrap();
    assert_eq!(checkpoint_load(&path).unwrap().done, Some(None));
}

#[test]
fn interrupted_search_resumes_to_the_same_answer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck");
    let w = kbonacci_word(3, 8).unwrap();
    let plain = an_exact(&w, &det(false)).unwrap();
    let cfg = SearchConfig { checkpoint_path: Some(path.clone()), time_budget: Some(Duration::from_millis(20)), ..det(false) };
    let partial = an_exact(&w, &cfg).unwrap();
    assert!(!partial.complete);
    let (lo, hi) = partial.bracket.unwrap();
    assert!(lo <= plain.value && plain.value <= hi);
    let resumed = an_exact(&w, &SearchConfig { time_budget: None, ..cfg }).unwrap();
    assert!(resumed.complete);
    assert_eq!(resumed.value, plain.value);
    assert_eq!(resumed.witness, plain.witness);
}

#[test]
fn resuming_a_hand_made_frontier_explores_only_those_subtrees() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck");
    let w: Word = "0102010".parse().unwrap();
    let full = frontier_prefixes(w.len(), 4, 4);
    let want = search_fixed_q(&w, 4, false).unwrap();
    let owner = full.iter().position(|p| want.states().starts_with(p)).unwrap();
    // dropping the subtree holding the least witness must change the answer
    let mut rest = full.clone();
    rest.remove(owner);
    let c = Checkpoint { digest: word_digest(&w), q: 4, deterministic: false, done: None, frontier: rest.clone() };
    checkpoint_save(&path, &c).unwrap();
    let cfg = SearchConfig { checkpoint_path: Some(path.clone()), ..det(false) };
    match search_fixed_q_with(&w, 4, false, &cfg).unwrap() {
        FixedQOutcome::Found(s) => {
            assert_ne!(s, want);
            assert!(rest.iter().any(|p| s.states().starts_with(p)));
        }
        other => assert_eq!(other, FixedQOutcome::Exhausted),
    }
    let c = Checkpoint { frontier: full[owner..].to_vec(), ..c };
    checkpoint_save(&path, &c).unwrap();
    assert_eq!(search_fixed_q_with(&w, 4, false, &cfg).unwrap(), FixedQOutcome::Found(want));
}

#[test]
fn corrupt_checkpoint_restarts_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck");
    fs::write(&path, "not a checkpoint\n1,2,x\n").unwrap();
    assert!(checkpoint_load(&path).is_err());
    let w = kbonacci_word(3, 7).unwrap();
    let cfg = SearchConfig { checkpoint_path: Some(path.clone()), ..det(false) };
    assert_eq!(an_exact(&w, &cfg).unwrap().value, 7);
    assert!(checkpoint_load(&path).is_ok());
}

#[test]
fn bad_bounds_are_rejected() {
    let w: Word = "0101".parse().unwrap();
    assert!(an_exact(&w, &SearchConfig { q_min: 0, ..det(false) }).is_err());
    assert!(an_exact(&w, &SearchConfig { q_max: Some(9), ..det(false) }).is_err());
    assert!(search_fixed_q(&w, 6, false).is_none());
}

#[test]
fn capped_search_reports_a_bracket() {
    let w = kbonacci_word(3, 7).unwrap();
    let r = an_exact(&w, &SearchConfig { q_max: Some(6), ..det(false) }).unwrap();
    assert!(!r.complete);
    assert_eq!(r.bracket, Some((7, 14)));
}
