//! Dolev-Yao attacker knowledge and the finite injection menu.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::roles::{ChannelId, Envelope, MessageKind, RoleId};
use crate::term::{apply, exp_tower, is_group_base, Ctor, Dtor, Signature, Term};

/// How a fact entered the knowledge base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Initial,
    Observed,
    Destructed(Dtor, Term),
}

/// A derivation of a goal from the knowledge base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derivation {
    Known(Term),
    Constructed(Ctor, Vec<Derivation>),
    /// A known exponent tower raised by further derivable exponents.
    Raised(Box<Derivation>, Vec<Derivation>),
}

impl Derivation {
    /// Rebuilds the derived term; used to audit witnesses.
    pub fn replay(&self) -> Option<Term> {
        match self {
            Derivation::Known(t) => Some(t.clone()),
            Derivation::Constructed(c, kids) => apply(*c, kids.iter().map(Derivation::replay).collect::<Option<_>>()?).ok(),
            Derivation::Raised(t, exps) => {
                let exps: Vec<Term> = exps.iter().map(Derivation::replay).collect::<Option<_>>()?;
                exps.into_iter().try_fold(t.replay()?, |acc, e| apply(Ctor::Exp, vec![acc, e]).ok())
            }
        }
    }

    pub fn constructs(&self, ctor: Ctor) -> bool {
        match self {
            Derivation::Known(_) => false,
            Derivation::Constructed(c, kids) => *c == ctor || kids.iter().any(|k| k.constructs(ctor)),
            Derivation::Raised(t, kids) => t.constructs(ctor) || kids.iter().any(|k| k.constructs(ctor)),
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Derivation::Known(t) => write!(f, "{t}"),
            Derivation::Constructed(c, kids) => {
                write!(f, "[{}", c.name())?;
                for k in kids {
                    write!(f, " {k}")?;
                }
                f.write_str("]")
            }
            Derivation::Raised(t, kids) => {
                write!(f, "[raise {t}")?;
                for k in kids {
                    write!(f, " {k}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    facts: BTreeSet<Term>,
    witnesses: BTreeMap<Term, Witness>,
    /// Ciphertexts and signatures whose key is not yet derivable.
    locked: BTreeSet<Term>,
    sig: Signature,
}

impl KnowledgeBase {
    pub fn new(sig: Signature, initial: impl IntoIterator<Item = Term>) -> Self {
        let mut kb = KnowledgeBase { facts: BTreeSet::new(), witnesses: BTreeMap::new(), locked: BTreeSet::new(), sig };
        for t in initial {
            kb.add(t, Witness::Initial);
        }
        kb.saturate();
        kb
    }

    pub fn facts(&self) -> &BTreeSet<Term> {
        &self.facts
    }

    pub fn witness(&self, t: &Term) -> Option<&Witness> {
        self.witnesses.get(t)
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.facts.contains(t)
    }

    pub fn observe(&mut self, payload: &Term) {
        if self.add(payload.clone(), Witness::Observed) {
            self.saturate();
        }
    }

    fn add(&mut self, t: Term, w: Witness) -> bool {
        if self.facts.contains(&t) {
            return false;
        }
        if matches!(t.ctor(), Some(Ctor::Senc | Ctor::Ssign)) {
            self.locked.insert(t.clone());
        }
        self.witnesses.insert(t.clone(), w);
        self.facts.insert(t);
        true
    }

    /// Destructor closure. Terminates because every destructor result is a
    /// strict subterm of a fact.
    pub fn saturate(&mut self) {
        loop {
            let mut fresh: Vec<(Term, Witness)> = Vec::new();
            for f in &self.facts {
                match f {
                    Term::App { ctor: Ctor::Pair, args } => {
                        fresh.push((args[0].clone(), Witness::Destructed(Dtor::Proj1, f.clone())));
                        fresh.push((args[1].clone(), Witness::Destructed(Dtor::Proj2, f.clone())));
                    }
                    Term::App { ctor, args } if ctor.is_converter() => {
                        fresh.push((args[0].clone(), Witness::Destructed(Dtor::Invert(*ctor), f.clone())));
                    }
                    _ => {}
                }
            }
            let mut opened = Vec::new();
            for c in &self.locked {
                let (rule, args) = match c {
                    Term::App { ctor: Ctor::Senc, args } => (Dtor::Sdec, args),
                    Term::App { args, .. } => (Dtor::OpenSign, args),
                    _ => continue,
                };
                if self.can_derive(&args[1]) {
                    opened.push(c.clone());
                    fresh.push((args[0].clone(), Witness::Destructed(rule, c.clone())));
                }
            }
            for c in opened {
                self.locked.remove(&c);
            }
            let mut grew = false;
            for (t, w) in fresh {
                grew |= self.add(t, w);
            }
            if !grew {
                return;
            }
        }
    }

    /// Goal-directed derivability modulo the exponent equations.
    pub fn can_derive(&self, goal: &Term) -> bool {
        if self.facts.contains(goal) {
            return true;
        }
        match goal {
            Term::App { ctor: Ctor::Exp, .. } => self.tower_split(goal).is_some(),
            Term::App { ctor, args } => self.sig.attacker_applicable(*ctor) && args.iter().all(|a| self.can_derive(a)),
            _ => false,
        }
    }

    /// As `can_derive`, returning the derivation.
    pub fn derive(&self, goal: &Term) -> Option<Derivation> {
        if self.facts.contains(goal) {
            return Some(Derivation::Known(goal.clone()));
        }
        match goal {
            Term::App { ctor: Ctor::Exp, args } => {
                let (base, _) = exp_tower(goal);
                if !is_group_base(base) {
                    return Some(Derivation::Constructed(Ctor::Exp, vec![self.derive(&args[0])?, self.derive(&args[1])?]));
                }
                let (start, rest) = self.tower_split(goal)?;
                let start = match start {
                    Some(t) => Derivation::Known(t),
                    None => self.derive(base)?,
                };
                let exps = rest.iter().map(|e| self.derive(e)).collect::<Option<Vec<_>>>()?;
                Some(Derivation::Raised(Box::new(start), exps))
            }
            Term::App { ctor, args } if self.sig.attacker_applicable(*ctor) => {
                Some(Derivation::Constructed(*ctor, args.iter().map(|a| self.derive(a)).collect::<Option<_>>()?))
            }
            _ => None,
        }
    }

    /// Finds a known prefix of the tower (or the bare base) such that every
    /// remaining exponent is derivable. Exponents over a group base commute,
    /// so any sub-multiset of exponents may serve as the known prefix.
    fn tower_split(&self, goal: &Term) -> Option<(Option<Term>, Vec<Term>)> {
        let (base, exps) = exp_tower(goal);
        let exps: Vec<Term> = exps.into_iter().cloned().collect();
        if !is_group_base(base) {
            // no equations apply: peel the outermost exponent only
            let Term::App { args, .. } = goal else { return None };
            return (self.can_derive(&args[0]) && self.can_derive(&args[1])).then_some((None, exps));
        }
        let rest_ok = |known: &[Term]| -> Option<Vec<Term>> {
            let mut rest = exps.clone();
            for k in known {
                let i = rest.iter().position(|e| e == k)?;
                rest.remove(i);
            }
            rest.iter().all(|e| self.can_derive(e)).then_some(rest)
        };
        for f in self.facts.iter().filter(|f| f.ctor() == Some(Ctor::Exp)) {
            let (fb, fe) = exp_tower(f);
            if fb != base {
                continue;
            }
            let fe: Vec<Term> = fe.into_iter().cloned().collect();
            if let Some(rest) = rest_ok(&fe) {
                return Some((Some(f.clone()), rest));
            }
        }
        if self.can_derive(base) && exps.iter().all(|e| self.can_derive(e)) {
            return Some((None, exps));
        }
        None
    }
}

/// Attacker actions as recorded in traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackerAction {
    /// An honest envelope taken off the channel before delivery.
    Intercept(Envelope),
    /// An intercepted envelope handed on unchanged.
    Deliver(Envelope),
    /// An envelope removed for good.
    Drop(Envelope),
    /// A derivable payload delivered to `to`.
    Inject { to: (RoleId, usize), channel: ChannelId, kind: MessageKind, payload: Term },
    /// A previously observed payload (trace index) delivered again.
    Replay { to: (RoleId, usize), index: usize },
}

/// Splits a right-nested tuple along its spine.
pub fn flatten(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let mut cur = t;
    while let Term::App { ctor: Ctor::Pair, args } = cur {
        out.push(args[0].clone());
        cur = &args[1];
    }
    out.push(cur.clone());
    out
}

fn retuple(items: Vec<Term>) -> Term {
    crate::term::tuple(items)
}

/// The finite injection menu for one delivery of `kind`.
///
/// Depth 0 is the replay set. Depth 1 adds single-slot splices of the top
/// level tuple, using the same slot of other observed payloads or an
/// attacker name of the same sort. Depth 2 also splices inside one
/// `senc`/`ssign` layer whose key is derivable, then re-seals.
pub fn forge_candidates(kb: &KnowledgeBase, observed: &[Term], own: &[Term], depth: usize) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |t: Term, out: &mut Vec<Term>| {
        if seen.insert(t.clone()) {
            out.push(t);
        }
    };
    for p in observed {
        push(p.clone(), &mut out);
    }
    if depth == 0 {
        return out;
    }
    let splices = |items: &[Vec<Term>]| -> Vec<Term> {
        let mut res = Vec::new();
        for (i, base) in items.iter().enumerate() {
            if base.len() < 2 {
                continue;
            }
            for slot in 0..base.len() {
                let mut alts: Vec<&Term> =
                    items.iter().enumerate().filter(|(j, o)| *j != i && o.len() == base.len()).map(|(_, o)| &o[slot]).collect();
                alts.extend(own.iter().filter(|a| a.sort() == base[slot].sort()));
                for alt in alts {
                    if *alt != base[slot] {
                        let mut v = base.clone();
                        v[slot] = alt.clone();
                        res.push(retuple(v));
                    }
                }
            }
        }
        res
    };
    let tops: Vec<Vec<Term>> = observed.iter().map(flatten).collect();
    for t in splices(&tops) {
        push(t, &mut out);
    }
    if depth >= 2 {
        let mut sealed: BTreeMap<(Ctor, Term), Vec<Vec<Term>>> = BTreeMap::new();
        for p in observed {
            if let Term::App { ctor: c @ (Ctor::Senc | Ctor::Ssign), args } = p {
                if kb.can_derive(&args[1]) {
                    sealed.entry((*c, args[1].clone())).or_default().push(flatten(&args[0]));
                }
            }
        }
        for ((c, key), bodies) in sealed {
            for body in splices(&bodies) {
                if let Ok(t) = apply(c, vec![body, key.clone()]) {
                    push(t, &mut out);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{mk, NameCtx, Sort};

    fn setup() -> (NameCtx, KnowledgeBase) {
        let kb = KnowledgeBase::new(Signature::standard(), [Term::constant("G1", Sort::Element)]);
        (NameCtx::new(), kb)
    }

    #[test]
    fn pairs_and_decryption_saturate() {
        let (mut ctx, mut kb) = setup();
        let (a, b) = (ctx.make_name("a", Sort::Bitstring), ctx.make_name("b", Sort::Bitstring));
        let k = ctx.make_name("k", Sort::Key);
        kb.observe(&mk(Ctor::Pair, vec![a.clone(), b.clone()]));
        assert!(kb.contains(&a) && kb.contains(&b));
        let m = ctx.make_name("m", Sort::Bitstring);
        kb.observe(&mk(Ctor::Senc, vec![m.clone(), k.clone()]));
        assert!(!kb.can_derive(&m));
        kb.observe(&k);
        assert!(kb.can_derive(&m));
        assert!(matches!(kb.witness(&m), Some(Witness::Destructed(Dtor::Sdec, _))));
    }

    #[test]
    fn signatures_hide_their_message() {
        let (mut ctx, mut kb) = setup();
        let m = ctx.make_name("m", Sort::Bitstring);
        let k = ctx.make_name("k", Sort::Key);
        kb.observe(&mk(Ctor::Ssign, vec![m.clone(), k]));
        assert!(!kb.can_derive(&m));
    }

    #[test]
    fn exponent_towers_commute_for_the_attacker() {
        let (mut ctx, mut kb) = setup();
        let g = Term::constant("G1", Sort::Element);
        let (x, y) = (ctx.make_name("x", Sort::Skey), ctx.make_name("y", Sort::Skey));
        kb.observe(&mk(Ctor::Exp, vec![g.clone(), x.clone()]));
        let xy = mk(Ctor::Exp, vec![mk(Ctor::Exp, vec![g.clone(), x.clone()]), y.clone()]);
        assert!(!kb.can_derive(&xy));
        kb.observe(&y);
        assert!(kb.can_derive(&xy));
        let d = kb.derive(&xy).unwrap();
        assert_eq!(d.replay().unwrap(), xy);
    }

    #[test]
    fn proofs_are_not_constructible() {
        let (mut ctx, mut kb) = setup();
        let (v, x) = (ctx.make_name("v", Sort::Skey), ctx.make_name("x", Sort::Skey));
        let c = ctx.make_name("c", Sort::Bitstring);
        for t in [&v, &x, &c] {
            kb.observe(t);
        }
        let proof = mk(Ctor::Zk, vec![v.clone(), x.clone(), mk(Ctor::Sigr, vec![v.clone(), x.clone(), c.clone()])]);
        assert!(!kb.can_derive(&proof));
        let forging = KnowledgeBase::new(Signature::standard().with_zk_forging(), [v, x, c]);
        assert!(forging.can_derive(&proof));
    }

    #[test]
    fn depth_zero_is_the_replay_set() {
        let (mut ctx, kb) = setup();
        let obs: Vec<Term> = (0..3).map(|i| ctx.make_name(&format!("p{i}"), Sort::Bitstring)).collect();
        assert_eq!(forge_candidates(&kb, &obs, &[], 0), obs);
    }

    #[test]
    fn depth_one_splices_single_slots() {
        let (mut ctx, kb) = setup();
        let n = |ctx: &mut NameCtx, l: &str| ctx.make_name(l, Sort::Bitstring);
        let p1 = retuple(vec![n(&mut ctx, "a"), n(&mut ctx, "b")]);
        let p2 = retuple(vec![n(&mut ctx, "c"), n(&mut ctx, "d")]);
        let c = forge_candidates(&kb, &[p1, p2], &[], 1);
        // two replays plus (c, b) and (a, d); each splice arises from both sides
        assert_eq!(c.len(), 4);
    }
}
