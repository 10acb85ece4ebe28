use std::collections::BTreeSet;

use autoplex::automata::{induce_from_sequence, is_deterministic_partial, is_unique_witness, state_label};
use autoplex::constructions::{
    build_from_schedule, fibonacci_japan_witness, fibonacci_schedule, fibonacci_witness, japan_sequence,
    tribonacci_schedule, tribonacci_witness, unique_sol_fib, unique_sol_trib, verify_also_prove, verify_circ_identity,
    verify_conclusion_decomposition, verify_length_identity, verify_prefix_theorem, verify_tail, LoopSchedule, Segment,
};
use autoplex::search::aminus_exact;
use autoplex::search::SearchConfig;
use autoplex::words::{kbonacci_number, kbonacci_word, Word};
use proptest::prelude::*;

/// Edges of the drawn automaton for the Fibonacci word of length 55. The
/// drawing labels q_3 -> q_8 with 0; the state sequence takes that edge on
/// letter 19 of the word, which is 1.
const FIGURE_EDGES: &str = "0 0 1, 1 1 2, 2 0 3, 3 0 4, 4 1 5, 5 0 6, 6 1 7, 7 0 0, 3 1 8, 8 0 9, 9 0 A, \
    A 1 B, B 0 C, C 0 D, D 1 E, E 0 F, F 1 G, G 0 H, H 0 I, I 1 J, J 0 K, K 0 L, L 1 9";

fn figure_edges() -> BTreeSet<(String, u8, String)> {
    FIGURE_EDGES
        .split(", ")
        .map(|e| {
            let p: Vec<&str> = e.split(' ').collect();
            (format!("q_{}", p[0]), p[1].parse().unwrap(), format!("q_{}", p[2]))
        })
        .collect()
}

#[test]
fn japan_sequence_matches_the_published_one() {
    let s = japan_sequence();
    assert_eq!(s.len(), 56);
    let text: Vec<String> = s.iter().map(|&x| state_label(x)[2..].to_string()).collect();
    assert_eq!(
        text.join(","),
        "0,1,2,3,4,5,6,7,0,1,2,3,4,5,6,7,0,1,2,3,8,9,A,B,C,D,E,F,G,H,\
         I,J,K,L,9,A,B,C,D,E,F,G,H,I,J,K,L,9,A,B,C,D,E,F,G,H"
    );
}

#[test]
fn japan_witness_draws_the_figure() {
    let w = fibonacci_japan_witness(10).unwrap();
    assert_eq!(w.record.value, 22);
    assert_eq!(w.sequence.word().to_string(), kbonacci_word(2, 10).unwrap().to_string());
    let edges: BTreeSet<(String, u8, String)> =
        w.automaton.edges().iter().map(|&(a, s, b)| (state_label(a), s, state_label(b))).collect();
    assert_eq!(edges.len(), 23);
    assert_eq!(edges, figure_edges());
    let accept: Vec<String> = w.automaton.accept().iter().map(|&s| state_label(s)).collect();
    assert_eq!(accept, ["q_H"]);
    assert_eq!(w.dot(), include_str!("golden/japan.dot"));
}

#[test]
fn japan_generalises_to_other_lengths() {
    for n in 8..=13 {
        let w = fibonacci_japan_witness(n).unwrap();
        let word = kbonacci_word(2, n).unwrap();
        assert!(is_unique_witness(&w.automaton, &word));
        assert_eq!(w.record.value, kbonacci_number(2, n - 4).unwrap() as usize + 1 + kbonacci_number(2, n - 3).unwrap() as usize);
    }
}

#[test]
fn fibonacci_schedule_counts() {
    for n in 9..=16 {
        let w = fibonacci_witness(n).unwrap();
        assert_eq!(w.record.value as u64, 2 * kbonacci_number(2, n - 3).unwrap(), "n = {n}");
        assert!(is_unique_witness(&w.automaton, &kbonacci_word(2, n).unwrap()));
    }
}

#[test]
fn fibonacci_schedule_is_too_tight_at_eight() {
    // the two cycles overlap in a way that admits a second accepting walk
    assert!(fibonacci_witness(8).is_err());
    assert!(build_from_schedule(&fibonacci_schedule(8).unwrap()).is_ok());
}

#[test]
fn tribonacci_witnesses_are_deterministic() {
    for n in 6..=12 {
        let w = tribonacci_witness(n).unwrap();
        assert!(is_deterministic_partial(&w.automaton), "n = {n}");
        assert!(is_unique_witness(&w.automaton, w.sequence.word()));
    }
}

#[test]
fn tribonacci_length_81_construction_and_a_smaller_witness() {
    let w = tribonacci_witness(7).unwrap();
    assert_eq!(w.sequence.word().len(), 81);
    assert_eq!(w.record.value, 41);
    // keep the last cycle at full length and shorten the path instead
    let mut s = tribonacci_schedule(7).unwrap();
    let Segment::Cycle { traverse, .. } = &mut s.segments[2] else { panic!() };
    *traverse += 1;
    let Segment::Path(len) = &mut s.segments[1] else { panic!() };
    *len -= 1;
    let (a, seq) = build_from_schedule(&s).unwrap();
    assert_eq!(a.state_count(), 40);
    assert!(is_deterministic_partial(&a));
    assert!(is_unique_witness(&a, seq.word()));
}

#[test]
#[ignore = "exact deterministic search on 44 letters, about three minutes"]
fn tribonacci_length_44_construction_is_optimal() {
    let w = tribonacci_witness(6).unwrap();
    let exact = aminus_exact(w.sequence.word(), &SearchConfig { deterministic: true, ..SearchConfig::default() }).unwrap();
    assert_eq!(exact.value, 22);
    assert_eq!(w.record.value, 22);
}

#[test]
fn identities_hold_across_their_ranges() {
    for n in 5..=22 {
        assert!(verify_prefix_theorem(n).unwrap(), "prefix n = {n}");
    }
    for n in 3..=22 {
        assert!(verify_length_identity(n).unwrap(), "length n = {n}");
    }
    // the words are too short for the factorisations below their onsets
    for n in 1..=4 {
        assert!(!verify_prefix_theorem(n).unwrap());
    }
    assert!(!verify_tail(3).unwrap() && !verify_tail(4).unwrap());
    for n in 5..=22 {
        assert!(verify_tail(n).unwrap(), "tail n = {n}");
    }
    for n in 8..=22 {
        assert!(verify_conclusion_decomposition(n).unwrap(), "conclusion n = {n}");
    }
    for n in 15..=22 {
        for m in 4..=(n / 3 - 1) {
            assert!(verify_circ_identity(n, m).unwrap(), "circ n = {n} m = {m}");
        }
    }
    for n in 13..=22 {
        for m in 4..=((n - 1) / 3) {
            assert!(verify_also_prove(n, m).unwrap(), "also n = {n} m = {m}");
        }
    }
}

#[test]
fn identity_spot_checks() {
    assert!(verify_circ_identity(15, 4).unwrap());
    assert!(verify_circ_identity(18, 5).unwrap());
    for m in 4..=6 {
        assert!(verify_also_prove(20, m).unwrap());
    }
    assert!(verify_tail(12).unwrap());
    assert!(verify_circ_identity(14, 4).is_err());
    assert!(verify_also_prove(12, 4).is_err());
    assert!(verify_tail(2).is_err());
}

#[test]
fn two_term_uniqueness() {
    for n in 6..=22 {
        assert!(unique_sol_fib(n).unwrap(), "fib n = {n}");
    }
    for n in 5..=22 {
        assert!(unique_sol_trib(n).unwrap(), "trib n = {n}");
    }
    assert!(!unique_sol_fib(5).unwrap());
    assert!(!unique_sol_trib(4).unwrap());
}

#[test]
fn schedule_tracks_states_as_documented() {
    let w: Word = "0010101".parse().unwrap();
    let s = LoopSchedule::new(vec![Segment::Path(1), Segment::Cycle { states: 2, traverse: 6 }], w);
    let seq = s.state_sequence().unwrap();
    assert_eq!(seq.states(), &[0, 1, 2, 1, 2, 1, 2, 1]);
    let (a, _) = build_from_schedule(&s).unwrap();
    assert!(is_unique_witness(&a, seq.word()));
}

proptest! {
    #[test]
    fn schedules_agree_with_the_induced_automaton(
        segs in prop::collection::vec((1usize..4, 0usize..8, any::<bool>()), 1..4),
        seed in prop::collection::vec(0u8..2, 64),
    ) {
        let segments: Vec<Segment> = segs
            .iter()
            .map(|&(a, b, cycle)| if cycle { Segment::Cycle { states: a, traverse: a + b } } else { Segment::Path(a) })
            .collect();
        let len: usize = segments.iter().map(|s| match *s { Segment::Path(l) => l, Segment::Cycle { traverse, .. } => traverse }).sum();
        let w = Word::new(seed[..len].to_vec(), 2).unwrap();
        let s = LoopSchedule::new(segments, w);
        let seq = s.state_sequence().unwrap();
        prop_assert_eq!(seq.states().len(), len + 1);
        if let Ok((a, built)) = build_from_schedule(&s) {
            prop_assert_eq!(&built, &seq);
            prop_assert_eq!(a, induce_from_sequence(&seq));
        }
    }
}
