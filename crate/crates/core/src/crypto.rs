//! Symbolic cryptographic gadgets built on the term algebra: Schnorr proof
//! pairs, cookies, key derivations and Finished messages.

use thiserror::Error;

use crate::term::{
    apply, exp_tower, is_group_base, mk, normalize, reduce_destructor, tuple, untuple, Ctor, Dtor, Sort, Term,
    TermError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("not a group generator: {0}")]
    Shape(String),
}

pub const AES_CMAC_PRF: &str = "AES_CMAC_PRF";
pub const OTHERVARS: &str = "OTHERVARS";

pub fn prf() -> Term {
    Term::constant(AES_CMAC_PRF, Sort::Prf)
}

pub fn othervars() -> Term {
    Term::constant(OTHERVARS, Sort::Bitstring)
}

/// `PSKc = pkdf2(AES_CMAC_PRF, ssp, othervars)`.
pub fn derive_pskc(ssp: &Term, othervars: &Term) -> Result<Term, CryptoError> {
    Ok(apply(Ctor::Pkdf2, vec![prf(), ssp.clone(), othervars.clone()])?)
}

/// Joiner-side pre-shared key, `get_ms(cr, sr, ssp)`.
pub fn derive_ms(cr: &Term, sr: &Term, ssp: &Term) -> Result<Term, CryptoError> {
    Ok(apply(Ctor::GetMs, vec![cr.clone(), sr.clone(), ssp.clone()])?)
}

/// A public key sent together with its proof of knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZkpPair {
    pub public_key: Term,
    pub proof: Term,
}

impl ZkpPair {
    pub fn into_terms(self) -> [Term; 2] {
        [self.public_key, self.proof]
    }
}

/// Proof of knowledge of `x` with ephemeral `v`; the challenge lives in `ctx`.
pub fn zkp_prove(v: &Term, x: &Term, ctx: &Term, base: &Term) -> ZkpPair {
    let s = mk(Ctor::Sigr, vec![v.clone(), x.clone(), ctx.clone()]);
    ZkpPair {
        public_key: mk(Ctor::Exp, vec![base.clone(), x.clone()]),
        proof: mk(Ctor::Zk, vec![v.clone(), x.clone(), s]),
    }
}

/// Structural check: the proof is `zk(v, x, sigr(v, x, _))` and the public
/// key equals `exp(base, x)` modulo the theory.
pub fn zkp_verify(pair: &ZkpPair, base: &Term) -> bool {
    let Term::App { ctor: Ctor::Zk, args } = &pair.proof else {
        return false;
    };
    let (v, x, s) = (&args[0], &args[1], &args[2]);
    let consistent = matches!(
        s,
        Term::App { ctor: Ctor::Sigr, args: sargs } if sargs[0] == *v && sargs[1] == *x
    );
    if !consistent || x.sort() != Sort::Skey || base.sort() != Sort::Element {
        return false;
    }
    normalize(&pair.public_key) == mk(Ctor::Exp, vec![base.clone(), x.clone()])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cookie {
    pub value: Term,
}

fn cookie_key(server_id_h: &Term) -> Term {
    mk(Ctor::IdToBitstring, vec![server_id_h.clone()])
}

/// `ssign(random_to_bitstring(cr), ID_to_bitstring(srid_h))`.
pub fn cookie_make(cr: &Term, server_id_h: &Term) -> Cookie {
    let body = mk(Ctor::RandomToBitstring, vec![cr.clone()]);
    Cookie { value: mk(Ctor::Ssign, vec![body, cookie_key(server_id_h)]) }
}

/// True iff the client random embedded in the cookie equals `cr`.
pub fn cookie_verify(c: &Cookie, cr: &Term) -> bool {
    match &c.value {
        Term::App { ctor: Ctor::Ssign, args } => embedded_random(&args[0]).is_some_and(|r| r == normalize(cr)),
        _ => false,
    }
}

/// Integrity-checked variant used by honest clients: opens the signature
/// under the expected server id before comparing the random.
pub fn cookie_check(c: &Cookie, cr: &Term, server_id_h: &Term) -> bool {
    reduce_destructor(Dtor::OpenSign, &[c.value.clone(), cookie_key(server_id_h)])
        .and_then(|body| embedded_random(&body))
        .is_some_and(|r| r == normalize(cr))
}

fn embedded_random(body: &Term) -> Option<Term> {
    reduce_destructor(Dtor::Invert(Ctor::RandomToBitstring), std::slice::from_ref(body))
}

/// `fin(ssign((ID_to_bitstring(id_h), cr, sr, g), element_to_key(session)))`.
pub fn make_finished(id_h: &Term, cr: &Term, sr: &Term, g: &Term, session: &Term) -> Result<Term, CryptoError> {
    let id = apply(Ctor::IdToBitstring, vec![id_h.clone()])?;
    let key = apply(Ctor::ElementToKey, vec![session.clone()])?;
    let body = tuple(vec![id, cr.clone(), sr.clone(), g.clone()]);
    let signed = apply(Ctor::Ssign, vec![body, key])?;
    Ok(apply(Ctor::Fin, vec![signed])?)
}

/// Raises the peer's contribution (a tower over `g`) to the local secret.
pub fn derive_session_key(g: &Term, local_secret: &Term, peer_contrib: &Term) -> Result<Term, CryptoError> {
    let g = normalize(g);
    if !is_group_base(&g) {
        return Err(CryptoError::Shape(g.to_string()));
    }
    let peer = normalize(peer_contrib);
    let (base, _) = exp_tower(&peer);
    if *base != g {
        return Err(CryptoError::Shape(peer.to_string()));
    }
    Ok(apply(Ctor::Exp, vec![peer, local_secret.clone()])?)
}

/// Group generator `gen_h(X1, X2, X3, X4)` from both sides' public keys.
pub fn group_generator(keys: [&Term; 4]) -> Result<Term, CryptoError> {
    Ok(apply(Ctor::GenH, keys.iter().map(|t| (*t).clone()).collect())?)
}

/// Reads `(public_key, proof)` from two adjacent tuple slots.
pub fn zkp_from_slots(slots: &[Term]) -> Option<ZkpPair> {
    match slots {
        [pk, proof, ..] => Some(ZkpPair { public_key: pk.clone(), proof: proof.clone() }),
        _ => None,
    }
}

/// Reads a Finished message back into its signed tuple, given the key.
pub fn open_finished(fin: &Term, session: &Term) -> Option<Vec<Term>> {
    let signed = match fin {
        Term::App { ctor: Ctor::Fin, args } => args[0].clone(),
        _ => return None,
    };
    let key = apply(Ctor::ElementToKey, vec![session.clone()]).ok()?;
    let body = reduce_destructor(Dtor::OpenSign, &[signed, key])?;
    untuple(&body, 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{equal_mod_theory, NameCtx};

    struct Fx {
        ctx: NameCtx,
        g1: Term,
    }

    fn fx() -> Fx {
        Fx { ctx: NameCtx::new(), g1: Term::constant("G1", Sort::Element) }
    }

    #[test]
    fn pskc_is_deterministic_and_depends_on_ssp() {
        let mut f = fx();
        let ssp = f.ctx.make_name("sspcommissioner", Sort::Bitstring);
        let wrong = f.ctx.make_name("wrong", Sort::Bitstring);
        let a = derive_pskc(&ssp, &othervars()).unwrap();
        assert_eq!(a, derive_pskc(&ssp, &othervars()).unwrap());
        assert_ne!(a, derive_pskc(&wrong, &othervars()).unwrap());
        let cr = f.ctx.make_name("cr", Sort::Random);
        assert!(matches!(derive_pskc(&cr, &othervars()), Err(CryptoError::Term(_))));
    }

    #[test]
    fn ms_agreement() {
        let mut f = fx();
        let crj = f.ctx.make_name("crj", Sort::Random);
        let srj = f.ctx.make_name("srj", Sort::Random);
        let srj2 = f.ctx.make_name("srj", Sort::Random);
        let ssp = f.ctx.make_name("sspjoiner", Sort::Bitstring);
        let a = derive_ms(&crj, &srj, &ssp).unwrap();
        assert!(equal_mod_theory(&a, &derive_ms(&crj, &srj, &ssp).unwrap()));
        assert_ne!(a, derive_ms(&crj, &srj2, &ssp).unwrap());
    }

    #[test]
    fn zkp_round_trip_and_rejections() {
        let mut f = fx();
        let v1 = f.ctx.make_name("v", Sort::Skey);
        let v2 = f.ctx.make_name("v", Sort::Skey);
        let x1 = f.ctx.make_name("x", Sort::Skey);
        let x2 = f.ctx.make_name("x", Sort::Skey);
        let ctx = Term::constant("ctx", Sort::Bitstring);
        let p = zkp_prove(&v1, &x1, &ctx, &f.g1);
        assert_eq!(p.public_key, mk(Ctor::Exp, vec![f.g1.clone(), x1.clone()]));
        assert!(zkp_verify(&p, &f.g1));
        let q = zkp_prove(&v2, &x1, &ctx, &f.g1);
        assert_ne!(p.proof, q.proof);
        assert_eq!(p.public_key, q.public_key);

        let swapped = ZkpPair { public_key: mk(Ctor::Exp, vec![f.g1.clone(), x2]), proof: p.proof.clone() };
        assert!(!zkp_verify(&swapped, &f.g1));
        let gj1 = Term::constant("Gj1", Sort::Element);
        assert!(!zkp_verify(&p, &gj1));
        // inconsistent v inside sigr
        let bad = ZkpPair {
            public_key: p.public_key.clone(),
            proof: mk(Ctor::Zk, vec![v1.clone(), x1.clone(), mk(Ctor::Sigr, vec![v2, x1, ctx])]),
        };
        assert!(!zkp_verify(&bad, &f.g1));
    }

    #[test]
    fn cookies() {
        let mut f = fx();
        let cr = f.ctx.make_name("cr", Sort::Random);
        let cr2 = f.ctx.make_name("cr", Sort::Random);
        let srid_h = mk(Ctor::Hash, vec![f.ctx.make_name("srid", Sort::Id)]);
        let other_h = mk(Ctor::Hash, vec![f.ctx.make_name("atk_id", Sort::Id)]);
        let c = cookie_make(&cr, &srid_h);
        assert_eq!(c, cookie_make(&cr, &srid_h));
        assert!(cookie_verify(&c, &cr));
        assert!(!cookie_verify(&c, &cr2));
        assert!(cookie_check(&c, &cr, &srid_h));
        assert!(!cookie_check(&c, &cr, &other_h));
        // stale cookie from an earlier session under a fresh client random
        let stale = cookie_make(&cr2, &srid_h);
        assert!(!cookie_check(&stale, &cr, &srid_h));
    }

    #[test]
    fn session_keys_agree_over_gen_h() {
        let mut f = fx();
        let xs: Vec<Term> = (0..4).map(|_| f.ctx.make_name("x", Sort::Skey)).collect();
        let pubs: Vec<Term> = xs.iter().map(|x| mk(Ctor::Exp, vec![f.g1.clone(), x.clone()])).collect();
        let gx = group_generator([&pubs[0], &pubs[1], &pubs[2], &pubs[3]]).unwrap();
        let (xc, xsrv) = (&xs[1], &xs[3]);
        let bc = mk(Ctor::Exp, vec![gx.clone(), xc.clone()]);
        let bs = mk(Ctor::Exp, vec![gx.clone(), xsrv.clone()]);
        let client = derive_session_key(&gx, xc, &bs).unwrap();
        let server = derive_session_key(&gx, xsrv, &bc).unwrap();
        assert!(equal_mod_theory(&client, &server));

        let other = group_generator([&pubs[1], &pubs[0], &pubs[2], &pubs[3]]).unwrap();
        let bs_other = mk(Ctor::Exp, vec![other.clone(), xsrv.clone()]);
        let mismatched = derive_session_key(&other, xc, &bs_other).unwrap();
        assert_ne!(mismatched, server);
        assert!(matches!(derive_session_key(&xs[0], xc, &bs), Err(CryptoError::Term(_)) | Err(CryptoError::Shape(_))));
        assert!(matches!(derive_session_key(&gx, xc, &bs_other), Err(CryptoError::Shape(_))));
    }

    #[test]
    fn finished_messages() {
        let mut f = fx();
        let id_h = mk(Ctor::Hash, vec![f.ctx.make_name("jnid", Sort::Id)]);
        let cr = f.ctx.make_name("crj", Sort::Random);
        let sr = f.ctx.make_name("srj", Sort::Random);
        let g = f.g1.clone();
        let a = f.ctx.make_name("a", Sort::Skey);
        let b = f.ctx.make_name("b", Sort::Skey);
        let s1 = mk(Ctor::Exp, vec![mk(Ctor::Exp, vec![g.clone(), a.clone()]), b.clone()]);
        let s2 = mk(Ctor::Exp, vec![mk(Ctor::Exp, vec![g.clone(), b]), a.clone()]);
        let client = make_finished(&id_h, &cr, &sr, &g, &s1).unwrap();
        let server = make_finished(&id_h, &cr, &sr, &g, &s2).unwrap();
        assert!(equal_mod_theory(&client, &server));
        let s3 = mk(Ctor::Exp, vec![g.clone(), a]);
        assert_ne!(client, make_finished(&id_h, &cr, &sr, &g, &s3).unwrap());
        assert!(make_finished(&id_h, &cr, &sr, &g, &cr).is_err());
        assert_eq!(open_finished(&client, &s1).unwrap()[1], cr);
        assert!(open_finished(&client, &s3).is_none());
    }
}
