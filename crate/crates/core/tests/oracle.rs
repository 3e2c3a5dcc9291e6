//! Correspondence checking against exhaustive enumeration on small traces.

mod support;

use meshcop_core::queries::{check_correspondence, PTerm, Pattern};
use support::brute_force;
use meshcop_core::term::{Sort, Term};
use meshcop_core::{Event, EventTag};
use proptest::prelude::*;

const TAGS: [EventTag; 4] = [EventTag::Joinerrcvck, EventTag::Csrvsntck, EventTag::Bsrvssk, EventTag::Cclissk];
const VARS: [&str; 3] = ["x", "y", "z"];

fn value(i: u8) -> Term {
    Term::Name { label: "v".into(), index: u32::from(i % 3), sort: Sort::Bitstring }
}

fn event() -> impl Strategy<Value = (usize, Vec<u8>)> {
    (0..TAGS.len(), prop::collection::vec(0u8..3, 2))
}

fn pattern() -> impl Strategy<Value = Pattern> {
    (0..TAGS.len(), prop::collection::vec((any::<bool>(), 0u8..3), 2)).prop_map(|(t, args)| {
        let tag = TAGS[t];
        let args = args
            .into_iter()
            .take(tag.arity())
            .map(|(lit, i)| if lit { PTerm::Lit(value(i)) } else { PTerm::Var(VARS[i as usize].to_string()) })
            .collect();
        Pattern { tag, args }
    })
}

fn to_events(raw: &[(usize, Vec<u8>)]) -> Vec<Event> {
    raw.iter()
        .enumerate()
        .map(|(pos, (t, vs))| {
            let tag = TAGS[*t];
            Event { tag, args: vs.iter().take(tag.arity()).map(|v| value(*v)).collect(), pos }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn non_injective_agrees_with_enumeration(
        raw in prop::collection::vec(event(), 0..=5),
        conclusion in pattern(),
        premises in prop::collection::vec(pattern(), 1..=2),
    ) {
        let events = to_events(&raw);
        let refs: Vec<&Event> = events.iter().collect();
        let fast = check_correspondence(&conclusion, &premises, false, &refs).is_ok();
        prop_assert_eq!(fast, brute_force(&conclusion, &premises, false, &refs));
    }

    #[test]
    fn injective_agrees_with_enumeration(
        raw in prop::collection::vec(event(), 0..=5),
        conclusion in pattern(),
        premise in pattern(),
    ) {
        let events = to_events(&raw);
        let refs: Vec<&Event> = events.iter().collect();
        let premises = [premise];
        let inj = check_correspondence(&conclusion, &premises, true, &refs).is_ok();
        prop_assert_eq!(inj, brute_force(&conclusion, &premises, true, &refs));
        if inj {
            prop_assert!(check_correspondence(&conclusion, &premises, false, &refs).is_ok());
        }
    }
}

#[test]
fn injective_failure_names_the_competing_conclusions() {
    let a = value(0);
    let events = [
        Event { tag: EventTag::Csrvsntck, args: vec![a.clone()], pos: 0 },
        Event { tag: EventTag::Joinerrcvck, args: vec![a.clone()], pos: 1 },
        Event { tag: EventTag::Joinerrcvck, args: vec![a], pos: 2 },
    ];
    let refs: Vec<&Event> = events.iter().collect();
    let c = Pattern::new(EventTag::Joinerrcvck, &["x"]);
    let p = Pattern::new(EventTag::Csrvsntck, &["x"]);
    let f = check_correspondence(&c, &[p], true, &refs).unwrap_err();
    assert_eq!((f.conclusions, f.premises), (vec![1, 2], vec![0]));
}
