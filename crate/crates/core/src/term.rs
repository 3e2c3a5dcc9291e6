//! Sorted symbolic message algebra.
//!
//! Terms are closed: names, constants and constructor applications. The
//! only equations are exponent swaps over a group base (`G1`, `Gj1` or any
//! `gen_h(..)` application); they are decided by keeping every exponent
//! tower in a canonical order, so equality modulo the theory is plain
//! structural equality of normal forms.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    Bitstring,
    Key,
    Element,
    Random,
    Id,
    Skey,
    Pkey,
    Prf,
}

impl Sort {
    pub fn as_str(self) -> &'static str {
        match self {
            Sort::Bitstring => "bitstring",
            Sort::Key => "key",
            Sort::Element => "element",
            Sort::Random => "random",
            Sort::Id => "id",
            Sort::Skey => "skey",
            Sort::Pkey => "pkey",
            Sort::Prf => "prf",
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ctor {
    Senc,
    Ssign,
    Exp,
    GenH,
    Hash,
    Pkdf2,
    GetMs,
    Xx,
    Zk,
    Sigr,
    Fin,
    Pair,
    ElementToKey,
    KeyToElement,
    IdToBitstring,
    RandomToBitstring,
}

impl Ctor {
    pub const ALL: [Ctor; 16] = [
        Ctor::Senc,
        Ctor::Ssign,
        Ctor::Exp,
        Ctor::GenH,
        Ctor::Hash,
        Ctor::Pkdf2,
        Ctor::GetMs,
        Ctor::Xx,
        Ctor::Zk,
        Ctor::Sigr,
        Ctor::Fin,
        Ctor::Pair,
        Ctor::ElementToKey,
        Ctor::KeyToElement,
        Ctor::IdToBitstring,
        Ctor::RandomToBitstring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ctor::Senc => "senc",
            Ctor::Ssign => "ssign",
            Ctor::Exp => "exp",
            Ctor::GenH => "gen_h",
            Ctor::Hash => "hash",
            Ctor::Pkdf2 => "pkdf2",
            Ctor::GetMs => "get_ms",
            Ctor::Xx => "xx",
            Ctor::Zk => "zk",
            Ctor::Sigr => "sigr",
            Ctor::Fin => "fin",
            Ctor::Pair => "pair",
            Ctor::ElementToKey => "element_to_key",
            Ctor::KeyToElement => "key_to_element",
            Ctor::IdToBitstring => "ID_to_bitstring",
            Ctor::RandomToBitstring => "random_to_bitstring",
        }
    }

    pub fn from_name(s: &str) -> Option<Ctor> {
        Ctor::ALL.iter().copied().find(|c| c.name() == s)
    }

    pub fn is_converter(self) -> bool {
        matches!(
            self,
            Ctor::ElementToKey | Ctor::KeyToElement | Ctor::IdToBitstring | Ctor::RandomToBitstring
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dtor {
    /// `sdec(senc(m,k),k) -> m`
    Sdec,
    /// `open_sign(ssign(m,k),k) -> m`
    OpenSign,
    Proj1,
    Proj2,
    /// Inverse of a type converter (converters are data).
    Invert(Ctor),
}

impl Dtor {
    pub fn arity(self) -> usize {
        match self {
            Dtor::Sdec | Dtor::OpenSign => 2,
            Dtor::Proj1 | Dtor::Proj2 | Dtor::Invert(_) => 1,
        }
    }
}

/// Argument slot of a constructor signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortSpec {
    Exact(Sort),
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorSig {
    pub ctor: Ctor,
    pub args: Vec<SortSpec>,
    pub result: Sort,
    pub attacker_applicable: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("{ctor} expects {expected} arguments, got {got}")]
    Arity { ctor: &'static str, expected: usize, got: usize },
    #[error("{ctor} argument {position} must have sort {expected}, got {got}")]
    Sort { ctor: &'static str, position: usize, expected: Sort, got: Sort },
}

/// Constructor table. The zk-forging mutation flips `attacker_applicable`
/// on `zk` and `sigr`; everything else is fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    sigs: Vec<CtorSig>,
}

impl Signature {
    pub fn standard() -> Self {
        use SortSpec::{Any, Exact};
        use Sort::*;
        let entry = |ctor, args: Vec<SortSpec>, result, attacker_applicable| CtorSig {
            ctor,
            args,
            result,
            attacker_applicable,
        };
        let sigs = vec![
            entry(Ctor::Senc, vec![Any, Any], Bitstring, true),
            entry(Ctor::Ssign, vec![Any, Any], Bitstring, true),
            entry(Ctor::Exp, vec![Exact(Element), Exact(Skey)], Element, true),
            entry(Ctor::GenH, vec![Exact(Element); 4], Element, true),
            entry(Ctor::Hash, vec![Any], Id, true),
            entry(Ctor::Pkdf2, vec![Exact(Prf), Exact(Bitstring), Exact(Bitstring)], Key, true),
            entry(Ctor::GetMs, vec![Exact(Random), Exact(Random), Exact(Bitstring)], Key, true),
            entry(Ctor::Xx, vec![Exact(Skey), Exact(Key)], Key, true),
            entry(Ctor::Zk, vec![Exact(Skey), Exact(Skey), Exact(Bitstring)], Bitstring, false),
            entry(Ctor::Sigr, vec![Exact(Skey), Exact(Skey), Exact(Bitstring)], Bitstring, false),
            entry(Ctor::Fin, vec![Exact(Bitstring)], Bitstring, true),
            entry(Ctor::Pair, vec![Any, Any], Bitstring, true),
            entry(Ctor::ElementToKey, vec![Exact(Element)], Key, true),
            entry(Ctor::KeyToElement, vec![Exact(Key)], Element, true),
            entry(Ctor::IdToBitstring, vec![Exact(Id)], Bitstring, true),
            entry(Ctor::RandomToBitstring, vec![Exact(Random)], Bitstring, true),
        ];
        Signature { sigs }
    }

    /// Lifts the adversary restriction on proof generation.
    pub fn with_zk_forging(mut self) -> Self {
        for s in &mut self.sigs {
            if matches!(s.ctor, Ctor::Zk | Ctor::Sigr) {
                s.attacker_applicable = true;
            }
        }
        self
    }

    pub fn get(&self, ctor: Ctor) -> &CtorSig {
        self.sigs.iter().find(|s| s.ctor == ctor).expect("every constructor is declared")
    }

    pub fn attacker_applicable(&self, ctor: Ctor) -> bool {
        self.get(ctor).attacker_applicable
    }

    pub fn constructors(&self) -> impl Iterator<Item = &CtorSig> {
        self.sigs.iter()
    }
}

impl Default for Signature {
    fn default() -> Self {
        Signature::standard()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Name { label: Arc<str>, index: u32, sort: Sort },
    Const { label: Arc<str>, sort: Sort },
    App { ctor: Ctor, args: Arc<[Term]> },
}

impl Term {
    pub fn constant(label: &str, sort: Sort) -> Term {
        Term::Const { label: Arc::from(label), sort }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Name { sort, .. } | Term::Const { sort, .. } => *sort,
            Term::App { ctor, .. } => result_sort(*ctor),
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Term::Name { label, .. } | Term::Const { label, .. } => Some(label),
            Term::App { .. } => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        !matches!(self, Term::App { .. })
    }

    pub fn ctor(&self) -> Option<Ctor> {
        match self {
            Term::App { ctor, .. } => Some(*ctor),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App { args, .. } => args,
            _ => &[],
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    /// Whether `needle` occurs as a subterm.
    pub fn contains(&self, needle: &Term) -> bool {
        self == needle || self.args().iter().any(|a| a.contains(needle))
    }

    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let t = out[i];
            out.extend(t.args().iter());
            i += 1;
        }
        out
    }
}

fn result_sort(ctor: Ctor) -> Sort {
    match ctor {
        Ctor::Senc | Ctor::Ssign | Ctor::Zk | Ctor::Sigr | Ctor::Fin | Ctor::Pair => Sort::Bitstring,
        Ctor::IdToBitstring | Ctor::RandomToBitstring => Sort::Bitstring,
        Ctor::Exp | Ctor::GenH | Ctor::KeyToElement => Sort::Element,
        Ctor::Hash => Sort::Id,
        Ctor::Pkdf2 | Ctor::GetMs | Ctor::Xx | Ctor::ElementToKey => Sort::Key,
    }
}

/// Freshness counter backing `new a : T`.
#[derive(Debug, Clone, Default)]
pub struct NameCtx {
    next: u32,
}

impl NameCtx {
    pub fn new() -> Self {
        NameCtx::default()
    }

    pub fn make_name(&mut self, label: &str, sort: Sort) -> Term {
        assert!(!label.is_empty(), "name label must be nonempty");
        let index = self.next;
        self.next += 1;
        Term::Name { label: Arc::from(label), index, sort }
    }

    pub fn issued(&self) -> u32 {
        self.next
    }
}

/// Sort-checked constructor application, returned in normal form.
pub fn apply(ctor: Ctor, args: Vec<Term>) -> Result<Term, TermError> {
    check_sorts(&Signature::standard(), ctor, &args)?;
    Ok(normalize(&Term::App { ctor, args: args.into() }))
}

fn check_sorts(sig: &Signature, ctor: Ctor, args: &[Term]) -> Result<(), TermError> {
    let entry = sig.get(ctor);
    if entry.args.len() != args.len() {
        return Err(TermError::Arity { ctor: ctor.name(), expected: entry.args.len(), got: args.len() });
    }
    for (position, (spec, arg)) in entry.args.iter().zip(args).enumerate() {
        if let SortSpec::Exact(expected) = *spec {
            if arg.sort() != expected {
                return Err(TermError::Sort { ctor: ctor.name(), position, expected, got: arg.sort() });
            }
        }
    }
    Ok(())
}

/// Builds a right-nested tuple. A single element is returned unchanged.
pub fn tuple(items: Vec<Term>) -> Term {
    let mut it = items.into_iter().rev();
    let mut acc = it.next().expect("tuple of at least one element");
    for t in it {
        acc = Term::App { ctor: Ctor::Pair, args: vec![t, acc].into() };
    }
    acc
}

/// Splits a right-nested tuple into exactly `n` components.
pub fn untuple(t: &Term, n: usize) -> Option<Vec<Term>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = t.clone();
    for _ in 1..n {
        match cur {
            Term::App { ctor: Ctor::Pair, ref args } => {
                out.push(args[0].clone());
                let rest = args[1].clone();
                cur = rest;
            }
            _ => return None,
        }
    }
    out.push(cur);
    Some(out)
}

/// Shorthand for constructors whose sorts are already known to agree.
/// Panics on a sort error; used by role code on terms it built itself.
pub fn mk(ctor: Ctor, args: Vec<Term>) -> Term {
    apply(ctor, args).unwrap_or_else(|e| panic!("ill-sorted model term: {e}"))
}

pub fn is_group_base(t: &Term) -> bool {
    matches!(t, Term::Const { sort: Sort::Element, .. } | Term::App { ctor: Ctor::GenH, .. })
}

/// Splits an exponent tower into its base and exponents (innermost first).
pub fn exp_tower(t: &Term) -> (&Term, Vec<&Term>) {
    let mut exps = Vec::new();
    let mut cur = t;
    while let Term::App { ctor: Ctor::Exp, args } = cur {
        exps.push(&args[1]);
        cur = &args[0];
    }
    exps.reverse();
    (cur, exps)
}

pub fn build_tower(base: Term, exps: impl IntoIterator<Item = Term>) -> Term {
    exps.into_iter().fold(base, |acc, e| Term::App { ctor: Ctor::Exp, args: vec![acc, e].into() })
}

/// Canonical form: arguments normalized bottom-up, exponent towers over a
/// group base rebuilt with their exponents in ascending term order.
pub fn normalize(t: &Term) -> Term {
    match t {
        Term::App { ctor: Ctor::Exp, .. } => {
            let (base, exps) = exp_tower(t);
            let base = normalize(base);
            let mut exps: Vec<Term> = exps.into_iter().map(normalize).collect();
            if is_group_base(&base) {
                // a normalized base is never itself an exp, so flattening is complete
                exps.sort();
            }
            build_tower(base, exps)
        }
        Term::App { ctor, args } => {
            Term::App { ctor: *ctor, args: args.iter().map(normalize).collect::<Vec<_>>().into() }
        }
        _ => t.clone(),
    }
}

pub fn is_normal(t: &Term) -> bool {
    normalize(t) == *t
}

pub fn equal_mod_theory(a: &Term, b: &Term) -> bool {
    normalize(a) == normalize(b)
}

/// Destructor evaluation; `None` is the `fail` value of `let .. else`.
pub fn reduce_destructor(rule: Dtor, args: &[Term]) -> Option<Term> {
    if args.len() != rule.arity() {
        return None;
    }
    let subject = normalize(&args[0]);
    match (rule, &subject) {
        (Dtor::Sdec, Term::App { ctor: Ctor::Senc, args: inner })
        | (Dtor::OpenSign, Term::App { ctor: Ctor::Ssign, args: inner }) => {
            if inner[1] == normalize(&args[1]) {
                Some(inner[0].clone())
            } else {
                None
            }
        }
        (Dtor::Proj1, Term::App { ctor: Ctor::Pair, args: inner }) => Some(inner[0].clone()),
        (Dtor::Proj2, Term::App { ctor: Ctor::Pair, args: inner }) => Some(inner[1].clone()),
        (Dtor::Invert(c), Term::App { ctor, args: inner }) if c.is_converter() && *ctor == c => {
            Some(inner[0].clone())
        }
        _ => None,
    }
}

/// Expressions may contain destructor applications; evaluating one yields
/// a term in normal form or `fail`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Term(Term),
    Ctor(Ctor, Vec<Expr>),
    Dtor(Dtor, Vec<Expr>),
}

impl Expr {
    pub fn eval(&self) -> Option<Term> {
        match self {
            Expr::Term(t) => Some(normalize(t)),
            Expr::Ctor(c, args) => {
                let args = args.iter().map(Expr::eval).collect::<Option<Vec<_>>>()?;
                apply(*c, args).ok()
            }
            Expr::Dtor(d, args) => {
                let args = args.iter().map(Expr::eval).collect::<Option<Vec<_>>>()?;
                reduce_destructor(*d, &args)
            }
        }
    }
}
