use autoplex::repetitions::{
    an_lower, bound_from_gain, critical_exponent, critical_exponent_profile, find_power_candidates, satisfies_uniqueness,
    PowerFamily, PowerOccurrence,
};
use autoplex::words::{apply_morphism, infinite_prefix, kbonacci_number, kbonacci_word, Word};
use num_rational::Ratio;
use proptest::prelude::*;

fn word(k: u8, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..k, 0..=max_len).prop_map(move |s| Word::new(s, k).unwrap())
}

/// Does `w[start..start+extent]` have period `p`?
fn has_period(w: &[u8], start: usize, extent: usize, p: usize) -> bool {
    (start + p..start + extent).all(|i| w[i] == w[i - p])
}

/// Largest gain over all strongly disjoint families of candidates that pass
/// the uniqueness condition, by trying every subset.
fn brute_force_gain(w: &Word) -> usize {
    let cands = find_power_candidates(w);
    let mut best = 0;
    fn rec(cands: &[PowerOccurrence], i: usize, chosen: &mut Vec<PowerOccurrence>, best: &mut usize) {
        if i == cands.len() {
            if let Ok(f) = PowerFamily::new(chosen.clone()) {
                if satisfies_uniqueness(&f) {
                    *best = (*best).max(f.occurrences().iter().map(|o| o.gain()).sum());
                }
            }
            return;
        }
        rec(cands, i + 1, chosen, best);
        if chosen.last().is_none_or(|l| cands[i].start > l.end()) {
            chosen.push(cands[i]);
            rec(cands, i + 1, chosen, best);
            chosen.pop();
        }
    }
    rec(&cands, 0, &mut Vec::new(), &mut best);
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn display_parse_round_trip(w in word(10, 30)) {
        let back: Word = w.to_string().parse().unwrap();
        prop_assert_eq!(back.symbols(), w.symbols());
    }

    #[test]
    fn lengths_follow_the_recurrence(k in 2usize..=5, n in 0usize..30) {
        let len = kbonacci_number(k, n + k).unwrap();
        let sum: u64 = (n..n + k).map(|m| kbonacci_number(k, m).unwrap()).sum();
        prop_assert_eq!(len, sum);
    }

    #[test]
    fn words_are_morphic_images_and_prefixes(k in 2usize..=4, n in 0usize..14) {
        let w = kbonacci_word(k, n).unwrap();
        prop_assert_eq!(w.len() as u64, kbonacci_number(k, n).unwrap());
        if n + 1 >= k {
            let next = kbonacci_word(k, n + 1).unwrap();
            prop_assert_eq!(apply_morphism(k, &w).unwrap(), next);
        }
        if n >= k {
            prop_assert!(w.is_prefix_of(&infinite_prefix(k, w.len() + 5).unwrap()));
        }
    }

    #[test]
    fn candidates_are_exactly_the_periodic_factors(w in word(2, 14)) {
        let s = w.symbols();
        let found = find_power_candidates(&w);
        for o in &found {
            prop_assert!(o.extent >= 2 * o.period && has_period(s, o.start, o.extent, o.period));
        }
        let mut count = 0;
        for start in 0..s.len() {
            for p in 1..=s.len() {
                for extent in 2 * p..=s.len() - start {
                    if has_period(s, start, extent, p) {
                        count += 1;
                    }
                }
            }
        }
        prop_assert_eq!(found.len(), count);
    }

    #[test]
    fn profile_matches_direct_definition(w in word(3, 24)) {
        let prof = critical_exponent_profile(w.symbols());
        for len in 2..=w.len() {
            let s = &w.symbols()[..len];
            let mut best = Ratio::from_integer(1u64);
            for start in 0..len {
                for p in 1..len {
                    for extent in p..=len - start {
                        if has_period(s, start, extent, p) {
                            best = best.max(Ratio::new(extent as u64, p as u64));
                        }
                    }
                }
            }
            prop_assert_eq!(prof[len - 1], best);
        }
        prop_assert!(prof.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn branch_and_bound_matches_subset_enumeration(w in word(2, 11)) {
        let lb = an_lower(&w);
        prop_assert_eq!(lb.gain, brute_force_gain(&w));
        prop_assert_eq!(lb.value, bound_from_gain(w.len(), lb.gain));
        prop_assert!(satisfies_uniqueness(&lb.family));
        for o in lb.family.occurrences() {
            prop_assert!(o.occurs_in(w.symbols()));
        }
    }

    #[test]
    fn unary_lower_bound_is_one(len in 0usize..30) {
        let w = Word::new(vec![0; len], 1).unwrap();
        prop_assert_eq!(an_lower(&w).value, 1);
    }
}

#[test]
fn critical_exponent_of_small_words() {
    assert_eq!(critical_exponent(&"0".parse().unwrap()), Ratio::from_integer(0));
    assert_eq!(critical_exponent(&"01".parse().unwrap()), Ratio::from_integer(1));
    assert_eq!(critical_exponent(&"01010".parse().unwrap()), Ratio::new(5, 2));
    assert_eq!(critical_exponent(&"0000".parse().unwrap()), Ratio::from_integer(4));
}
