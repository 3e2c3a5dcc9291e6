//! Property tests over randomly built, well-sorted terms.

use meshcop_core::adversary::KnowledgeBase;
use meshcop_core::sample::{build, sort_of, ANY};
use meshcop_core::syntax::parse_term;
use meshcop_core::term::{
    apply, equal_mod_theory, is_group_base, is_normal, normalize, tuple, untuple, Ctor, Dtor, Expr, Signature, Sort,
    Term,
};
use proptest::prelude::*;

const CASES: u32 = 1000;

fn term_of(sort: Sort) -> impl Strategy<Value = Term> {
    prop::collection::vec(any::<u8>(), 1..48).prop_map(move |v| build(sort, &mut v.into_iter(), 4))
}

fn any_term() -> impl Strategy<Value = Term> {
    (0..ANY.len(), prop::collection::vec(any::<u8>(), 1..48))
        .prop_map(|(s, v)| build(ANY[s], &mut v.into_iter(), 4))
}

fn group_base() -> impl Strategy<Value = Term> {
    term_of(Sort::Element).prop_filter("group base", |t| {
        let (base, _) = meshcop_core::term::exp_tower(t);
        is_group_base(base)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn constructed_terms_are_normal_and_normalizing_is_idempotent(t in any_term()) {
        prop_assert!(is_normal(&t));
        let n = normalize(&t);
        prop_assert_eq!(normalize(&n), n);
    }

    #[test]
    fn text_syntax_round_trips(t in any_term()) {
        let parsed = parse_term(&t.to_string(), &sort_of).unwrap();
        prop_assert_eq!(parsed, t);
    }

    #[test]
    fn decryption_inverts_encryption_only_under_the_same_key(m in any_term(), k in any_term(), k2 in any_term()) {
        let c = apply(Ctor::Senc, vec![m.clone(), k.clone()]).unwrap();
        let open = |key: &Term| Expr::Dtor(Dtor::Sdec, vec![Expr::Term(c.clone()), Expr::Term(key.clone())]).eval();
        prop_assert_eq!(open(&k), Some(m.clone()));
        if !equal_mod_theory(&k, &k2) {
            prop_assert_eq!(open(&k2), None);
        }
        let s = apply(Ctor::Ssign, vec![m.clone(), k.clone()]).unwrap();
        prop_assert_eq!(Expr::Dtor(Dtor::OpenSign, vec![Expr::Term(s), Expr::Term(k)]).eval(), Some(m));
    }

    #[test]
    fn exponents_commute_over_group_bases(g in group_base(), a in term_of(Sort::Skey), b in term_of(Sort::Skey)) {
        let ab = apply(Ctor::Exp, vec![apply(Ctor::Exp, vec![g.clone(), a.clone()]).unwrap(), b.clone()]).unwrap();
        let ba = apply(Ctor::Exp, vec![apply(Ctor::Exp, vec![g, b]).unwrap(), a]).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn theory_equality_is_an_equivalence(a in any_term(), b in any_term()) {
        prop_assert!(equal_mod_theory(&a, &a));
        prop_assert_eq!(equal_mod_theory(&a, &b), equal_mod_theory(&b, &a));
        prop_assert_eq!(equal_mod_theory(&a, &b), normalize(&a) == normalize(&b));
    }

    #[test]
    fn tuples_split_back_into_their_parts(items in prop::collection::vec(any_term(), 1..6)) {
        let t = tuple(items.clone());
        prop_assert_eq!(untuple(&t, items.len()), Some(items));
    }

    #[test]
    fn converters_are_invertible(k in term_of(Sort::Key), i in term_of(Sort::Id)) {
        let e = apply(Ctor::KeyToElement, vec![k.clone()]).unwrap();
        let h = apply(Ctor::Hash, vec![k.clone()]).unwrap();
        prop_assert_eq!(Expr::Dtor(Dtor::Invert(Ctor::KeyToElement), vec![Expr::Term(e)]).eval(), Some(k));
        let b = apply(Ctor::IdToBitstring, vec![i.clone()]).unwrap();
        prop_assert_eq!(Expr::Dtor(Dtor::Invert(Ctor::IdToBitstring), vec![Expr::Term(b)]).eval(), Some(i));
        prop_assert_eq!(Expr::Dtor(Dtor::Invert(Ctor::Hash), vec![Expr::Term(h)]).eval(), None);
    }

    #[test]
    fn derivations_replay_to_their_goals(observed in prop::collection::vec(any_term(), 1..4), goal in any_term()) {
        let mut kb = KnowledgeBase::new(Signature::standard(), [Term::constant("G1", Sort::Element)]);
        for o in &observed {
            kb.observe(o);
        }
        for o in &observed {
            prop_assert!(kb.can_derive(o));
        }
        let mut goals: Vec<Term> = observed.iter().flat_map(|o| o.subterms().into_iter().cloned()).collect();
        goals.push(goal);
        for g in goals {
            let can = kb.can_derive(&g);
            let d = kb.derive(&g);
            prop_assert_eq!(can, d.is_some());
            if let Some(d) = d {
                prop_assert_eq!(d.replay(), Some(g.clone()));
                prop_assert!(!d.constructs(Ctor::Zk) && !d.constructs(Ctor::Sigr));
            }
        }
    }

    #[test]
    fn knowledge_only_grows(first in any_term(), second in any_term(), probe in any_term()) {
        let mut kb = KnowledgeBase::new(Signature::standard(), []);
        kb.observe(&first);
        let before = kb.can_derive(&probe);
        kb.observe(&second);
        prop_assert!(!before || kb.can_derive(&probe));
    }
}
