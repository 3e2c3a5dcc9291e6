//! Per-role message construction and verification.

use super::{next_phase, Envelope, Event, EventTag, Input, MessageKind, Phase, Reject, RoleId, RoleState, StepOutput};
use crate::catalog::{masked, public};
use crate::crypto::{
    cookie_check, cookie_make, derive_ms, derive_pskc, derive_session_key, group_generator, make_finished, othervars,
    zkp_prove, zkp_verify, ZkpPair,
};
use crate::term::{apply, reduce_destructor, tuple, untuple, Ctor, Dtor, Sort, Term};

type R<T> = Result<T, Reject>;

struct Ctx {
    s: RoleState,
    out: StepOutput,
    last: Option<MessageKind>,
}

impl Ctx {
    fn reject<T>(&self, reason: &str) -> R<T> {
        Err(Reject { role: self.s.role, reason: reason.to_string() })
    }

    fn m(&self, label: &str) -> R<Term> {
        match self.s.memory.get(label) {
            Some(t) => Ok(t.clone()),
            None => self.reject(&format!("nothing remembered under `{label}`")),
        }
    }

    fn set(&mut self, label: &str, t: Term) {
        self.s.memory.insert(label.to_string(), t);
    }

    /// A protocol check. Rogue instances skip every check.
    fn check(&self, ok: impl FnOnce() -> bool, reason: &str) -> R<()> {
        if self.s.rogue || ok() {
            Ok(())
        } else {
            self.reject(reason)
        }
    }

    /// A value needed to continue; even a rogue cannot proceed without it.
    fn need<T>(&self, v: Option<T>, reason: &str) -> R<T> {
        match v {
            Some(v) => Ok(v),
            None => self.reject(reason),
        }
    }

    fn split(&self, t: &Term, n: usize) -> R<Vec<Term>> {
        self.need(untuple(t, n), &format!("expected a {n}-tuple"))
    }

    fn event(&mut self, tag: EventTag, args: Vec<Term>) {
        if !self.s.rogue {
            self.out.events.push(Event::new(tag, args));
        }
    }

    fn send(&mut self, kind: MessageKind, payload: Term) {
        self.event(EventTag::MsgSent(kind), vec![payload.clone()]);
        self.out.outgoing.push(Envelope::new(kind, payload));
        self.last = Some(kind);
    }

    fn publish(&mut self, marker: Term) {
        if !self.s.rogue {
            self.out.published.push(marker);
        }
    }
}

fn ap(c: Ctor, args: Vec<Term>) -> Option<Term> {
    apply(c, args).ok()
}

fn idb(id_h: &Term) -> Option<Term> {
    ap(Ctor::IdToBitstring, vec![id_h.clone()])
}

fn ek(ssn: &Term) -> Option<Term> {
    ap(Ctor::ElementToKey, vec![ssn.clone()])
}

fn senc(m: Term, k: Term) -> Term {
    apply(Ctor::Senc, vec![m, k]).expect("senc accepts any sorts")
}

fn ssign(m: Term, k: Term) -> Term {
    apply(Ctor::Ssign, vec![m, k]).expect("ssign accepts any sorts")
}

fn sdec(c: &Term, k: &Term) -> Option<Term> {
    reduce_destructor(Dtor::Sdec, &[c.clone(), k.clone()])
}

fn open(c: &Term, k: &Term) -> Option<Term> {
    reduce_destructor(Dtor::OpenSign, &[c.clone(), k.clone()])
}

fn zk_ok(pk: &Term, proof: &Term, base: &Term) -> bool {
    zkp_verify(&ZkpPair { public_key: pk.clone(), proof: proof.clone() }, base)
}

fn prove(c: &Ctx, v: &str, x: &str, ctx: &Term, base: &Term) -> R<[Term; 2]> {
    Ok(zkp_prove(&c.m(v)?, &c.m(x)?, ctx, base).into_terms())
}

fn leader_key(c: &Ctx) -> R<Term> {
    if c.s.opts.no_leader_encryption {
        Ok(public("nokey"))
    } else {
        c.m("secretborderandleader")
    }
}

fn relay_key(c: &Ctx) -> R<Term> {
    if c.s.opts.no_relay_encryption {
        Ok(public("nokey"))
    } else {
        c.m("scrtjtrcm")
    }
}

/// Advances one role by one input. On `Reject` the caller halts the
/// instance; the state passed in is left untouched.
pub fn role_step(state: &RoleState, input: &Input) -> Result<(RoleState, StepOutput), Reject> {
    let mut c = Ctx { s: state.clone(), out: StepOutput::default(), last: None };
    let role = state.role;
    let kind = match (state.phase, input) {
        (Phase::Start, Input::Start) => None,
        (Phase::Await(k), Input::Message(env)) if env.kind == k => {
            c.event(EventTag::MsgRcvd(k), vec![env.payload.clone()]);
            Some((k, env.payload.clone()))
        }
        (phase, _) => return c.reject(&format!("unexpected input in phase {phase:?}")),
    };
    let received = kind.as_ref().map(|(k, _)| *k);
    match (role, kind) {
        (RoleId::Ccli, k) => ccli(&mut c, k)?,
        (RoleId::Bsrv, Some(k)) => bsrv(&mut c, k)?,
        (RoleId::Leader, Some(k)) => leader(&mut c, k)?,
        (RoleId::Joiner, k) => joiner(&mut c, k)?,
        (RoleId::Csrv, Some(k)) => csrv(&mut c, k)?,
        (RoleId::JrtRelay | RoleId::BrtRelay, Some(k)) => relay(&mut c, k)?,
        _ => return c.reject("role cannot start"),
    }
    let after = c.last.or(received);
    c.s.phase = after.map(|k| next_phase(role, k)).unwrap_or(Phase::Done);
    c.s.emitted_events.extend(c.out.events.iter().cloned());
    Ok((c.s, c.out))
}

fn hello_ctx(c: &Ctx, random: &Term, own_id_h: &Term) -> R<Term> {
    Ok(tuple(vec![random.clone(), c.need(idb(own_id_h), "id sort")?]))
}

fn ccli(c: &mut Ctx, input: Option<(MessageKind, Term)>) -> R<()> {
    let g1 = public("G1");
    let clid_h = masked(&c.m("clid")?);
    let srid_h = c.m("srid_h")?;
    let cr = c.m("cr")?;
    let Some((k, p)) = input else {
        let ctx = hello_ctx(c, &cr, &clid_h)?;
        let [x1, p1] = prove(c, "v1", "x1", &ctx, &g1)?;
        let [x2, p2] = prove(c, "v2", "x2", &ctx, &g1)?;
        for (l, t) in [("ctx", ctx), ("X1", x1.clone()), ("P1", p1.clone()), ("X2", x2.clone()), ("P2", p2.clone())] {
            c.set(l, t);
        }
        c.send(MessageKind::c(1), tuple(vec![cr, x1, p1, x2, p2]));
        return Ok(());
    };
    let ssp = c.m("sspcommissioner")?;
    let hello = |c: &Ctx| -> R<Vec<Term>> { ["X1", "P1", "X2", "P2"].iter().map(|l| c.m(l)).collect() };
    match k.n {
        2 => {
            let cookie = crate::crypto::Cookie { value: p.clone() };
            c.check(|| cookie_check(&cookie, &cr, &srid_h), "cookie integrity")?;
            c.event(EventTag::Cclircvck, vec![p.clone()]);
            let mut fields = vec![cr.clone()];
            fields.extend(hello(c)?);
            fields.push(p);
            c.send(MessageKind::c(3), tuple(fields));
        }
        4 => {
            let v = c.split(&p, 7)?;
            let (sr, bs) = (v[0].clone(), v[5].clone());
            c.check(|| zk_ok(&v[1], &v[2], &g1) && zk_ok(&v[3], &v[4], &g1), "server key proof")?;
            let gx = c.need(group_generator([&c.m("X1")?, &c.m("X2")?, &v[1], &v[3]]).ok(), "generator shape")?;
            c.check(|| zk_ok(&v[5], &v[6], &gx), "server ephemeral proof")?;
            let ssn = c.need(derive_session_key(&gx, &c.m("x2")?, &bs).ok(), "session key shape")?;
            let pskc = c.need(derive_pskc(&ssp, &othervars()).ok(), "pskc")?;
            c.event(EventTag::Cclissk, vec![ssn.clone(), pskc.clone()]);
            let ctx = c.m("ctx")?;
            let [bc, pc] = prove(c, "v5", "x2", &ctx, &gx)?;
            let key = c.need(ek(&ssn), "key")?;
            let cl_b = c.need(idb(&clid_h), "id")?;
            let sl_b = c.need(idb(&srid_h), "id")?;
            let ccs = ssign(tuple(vec![cr.clone(), sr.clone(), cl_b.clone()]), key.clone());
            let fin = c.need(make_finished(&clid_h, &cr, &sr, &gx, &ssn).ok(), "finished")?;
            c.event(EventTag::Cclibeg, vec![ssp, pskc.clone(), cr.clone(), sr.clone(), gx.clone(), cl_b, sl_b]);
            c.publish(senc(c.m("secretpskc")?, pskc.clone()));
            c.publish(senc(c.m("secretsskc")?, key));
            for (l, t) in [("sr", sr), ("gx", gx), ("ssn", ssn), ("pskc", pskc.clone()), ("fin", fin.clone())] {
                c.set(l, t);
            }
            c.send(MessageKind::c(5), tuple(vec![bc, pc, ccs, senc(fin, pskc)]));
        }
        6 => {
            let v = c.split(&p, 2)?;
            let (sr, gx, ssn, pskc, fin) = (c.m("sr")?, c.m("gx")?, c.m("ssn")?, c.m("pskc")?, c.m("fin")?);
            let key = c.need(ek(&ssn), "key")?;
            let sl_b = c.need(idb(&srid_h), "id")?;
            let want = tuple(vec![cr.clone(), sr.clone(), sl_b.clone()]);
            c.check(|| open(&v[0], &key) == Some(want), "server change-cipher-spec")?;
            c.check(|| sdec(&v[1], &pskc) == Some(fin), "server finished")?;
            let cl_b = c.need(idb(&clid_h), "id")?;
            c.event(EventTag::Cclifin, vec![ssp, pskc.clone(), cr, sr, gx, cl_b, sl_b]);
            let req = tuple(vec![c.m("cr1")?, clid_h, c.m("commpetreq")?]);
            c.send(MessageKind::c(7), senc(ssign(req, pskc), key));
        }
        10 => {
            let (pskc, ssn) = (c.m("pskc")?, c.m("ssn")?);
            let body = c.need(open(&p, &pskc), "petition response signature")?;
            let v = if c.s.opts.drop_noncea {
                c.split(&body, 4)?
            } else {
                let v = c.split(&body, 5)?;
                c.check(|| v[0] == cr, "petition response for another hello")?;
                v[1..].to_vec()
            };
            c.check(|| v[0] == clid_h, "petition response for another commissioner")?;
            let (res, cs, granted) = (v[1].clone(), v[2].clone(), v[3].clone());
            c.event(EventTag::Rcvcommrsp, vec![cs.clone(), res, granted]);
            c.set("comm_session", cs.clone());
            let req = tuple(vec![c.m("cr1")?, clid_h, c.m("commkareq")?, cs]);
            let key = c.need(ek(&ssn), "key")?;
            c.send(MessageKind::c(11), senc(ssign(req, pskc), key));
        }
        14 => {
            let (pskc, cs) = (c.m("pskc")?, c.m("comm_session")?);
            let body = c.need(open(&p, &pskc), "keep-alive response signature")?;
            let v = c.split(&body, 5)?;
            c.check(|| v[0] == cr && v[1] == clid_h && v[3] == cs, "keep-alive response binding")?;
            c.event(EventTag::Rcvcommkarsp, vec![cs, v[2].clone(), v[4].clone()]);
        }
        _ => return c.reject("unexpected message"),
    }
    Ok(())
}

fn bsrv(c: &mut Ctx, (k, p): (MessageKind, Term)) -> R<()> {
    let g1 = public("G1");
    let srid_h = masked(&c.m("srid")?);
    let ssp = c.m("sspcommissioner")?;
    match k.n {
        1 => {
            let v = c.split(&p, 5)?;
            c.check(|| zk_ok(&v[1], &v[2], &g1) && zk_ok(&v[3], &v[4], &g1), "client key proof")?;
            let cr = v[0].clone();
            if cr.sort() != Sort::Random {
                return c.reject("client random sort");
            }
            let cookie = cookie_make(&cr, &srid_h).value;
            c.event(EventTag::Bsrvsntck, vec![cookie.clone()]);
            c.set("hello", p);
            c.set("cr", cr);
            c.send(MessageKind::c(2), cookie);
        }
        3 => {
            let v = c.split(&p, 6)?;
            let hello = c.m("hello")?;
            let cr = c.m("cr")?;
            c.check(|| tuple(v[..5].to_vec()) == hello, "hello fields changed")?;
            let cookie = crate::crypto::Cookie { value: v[5].clone() };
            c.check(|| cookie_check(&cookie, &cr, &srid_h), "cookie integrity")?;
            let h = c.split(&hello, 5)?;
            let sr = c.m("sr")?;
            let ctx = hello_ctx(c, &sr, &srid_h)?;
            let [x3, p3] = prove(c, "v3", "x3", &ctx, &g1)?;
            let [x4, p4] = prove(c, "v4", "x4", &ctx, &g1)?;
            let gx = c.need(group_generator([&h[1], &h[3], &x3, &x4]).ok(), "generator shape")?;
            let [bs, ps] = prove(c, "v6", "x4", &ctx, &gx)?;
            c.set("gx", gx);
            c.send(MessageKind::c(4), tuple(vec![sr, x3, p3, x4, p4, bs, ps]));
        }
        5 => {
            let v = c.split(&p, 4)?;
            let (cr, sr, gx) = (c.m("cr")?, c.m("sr")?, c.m("gx")?);
            c.check(|| zk_ok(&v[0], &v[1], &gx), "client ephemeral proof")?;
            let ssn = c.need(derive_session_key(&gx, &c.m("x4")?, &v[0]).ok(), "session key shape")?;
            let pskc = c.need(derive_pskc(&ssp, &othervars()).ok(), "pskc")?;
            c.event(EventTag::Bsrvssk, vec![ssn.clone(), pskc.clone()]);
            let key = c.need(ek(&ssn), "key")?;
            let body = c.need(open(&v[2], &key), "client change-cipher-spec")?;
            let b = c.split(&body, 3)?;
            c.check(|| b[0] == cr && b[1] == sr, "client change-cipher-spec binding")?;
            let cl_b = b[2].clone();
            let clid_h = c.need(reduce_destructor(Dtor::Invert(Ctor::IdToBitstring), std::slice::from_ref(&cl_b)), "client id")?;
            let fin = c.need(make_finished(&clid_h, &cr, &sr, &gx, &ssn).ok(), "finished")?;
            c.check(|| sdec(&v[3], &pskc) == Some(fin.clone()), "client finished")?;
            let sl_b = c.need(idb(&srid_h), "id")?;
            let args = vec![ssp, pskc.clone(), cr.clone(), sr.clone(), gx, cl_b, sl_b.clone()];
            c.event(EventTag::Bsrvfin, args.clone());
            c.event(EventTag::Bsrvbeg, args);
            let ccs = ssign(tuple(vec![cr, sr, sl_b]), key);
            for (l, t) in [("ssn", ssn), ("pskc", pskc.clone()), ("clid_h", clid_h)] {
                c.set(l, t);
            }
            c.send(MessageKind::c(6), tuple(vec![ccs, senc(fin, pskc)]));
        }
        7 => {
            let (ssn, pskc, clid_h) = (c.m("ssn")?, c.m("pskc")?, c.m("clid_h")?);
            let key = c.need(ek(&ssn), "key")?;
            let inner = c.need(sdec(&p, &key), "petition session wrapper")?;
            let body = c.need(open(&inner, &pskc), "petition signature")?;
            let v = c.split(&body, 3)?;
            let req = c.m("commpetreq")?;
            c.check(|| v[1] == clid_h && v[2] == req, "petition contents")?;
            c.set("cr1", v[0].clone());
            let mut fields = vec![v[0].clone()];
            if !c.s.opts.drop_noncea {
                fields.push(c.m("noncea")?);
            }
            fields.extend([clid_h, c.m("leadpetreq")?]);
            let lk = leader_key(c)?;
            c.send(MessageKind::c(8), senc(tuple(fields), lk));
        }
        9 => {
            let lk = leader_key(c)?;
            let body = c.need(sdec(&p, &lk), "leader response encryption")?;
            let srid = c.m("srid")?;
            let (nn, v) = if c.s.opts.drop_noncea {
                (public("none"), c.split(&body, 4)?)
            } else {
                let v = c.split(&body, 5)?;
                let nn = c.m("noncea")?;
                c.check(|| v[1] == nn, "leader response nonce")?;
                (nn, [&v[..1], &v[2..]].concat())
            };
            c.check(|| v[1] == srid, "leader response server id")?;
            let (lres, cs, granted) = (v[0].clone(), v[2].clone(), v[3].clone());
            let (res, lrq) = (c.m("commpetres")?, c.m("leadpetreq")?);
            c.event(EventTag::Sntcommrsp, vec![nn, cs.clone(), res.clone(), lrq, lres, granted.clone()]);
            c.set("comm_session", cs.clone());
            let mut fields = Vec::new();
            if !c.s.opts.drop_noncea {
                fields.push(c.m("cr")?);
            }
            fields.extend([c.m("clid_h")?, res, cs, granted]);
            let pskc = c.m("pskc")?;
            c.send(MessageKind::c(10), ssign(tuple(fields), pskc));
        }
        11 => {
            let (ssn, pskc, clid_h, cs) = (c.m("ssn")?, c.m("pskc")?, c.m("clid_h")?, c.m("comm_session")?);
            let key = c.need(ek(&ssn), "key")?;
            let inner = c.need(sdec(&p, &key), "keep-alive session wrapper")?;
            let body = c.need(open(&inner, &pskc), "keep-alive signature")?;
            let v = c.split(&body, 4)?;
            let (cr1, req) = (c.m("cr1")?, c.m("commkareq")?);
            c.check(|| v[0] == cr1 && v[1] == clid_h && v[2] == req && v[3] == cs, "keep-alive contents")?;
            let lk = leader_key(c)?;
            c.send(MessageKind::c(12), senc(tuple(vec![cs, c.m("noncea")?, c.m("leadkareq")?]), lk));
        }
        13 => {
            let lk = leader_key(c)?;
            let body = c.need(sdec(&p, &lk), "leader keep-alive encryption")?;
            let v = c.split(&body, 5)?;
            let (nn, cs, srid) = (c.m("noncea")?, c.m("comm_session")?, c.m("srid")?);
            c.check(|| v[1] == nn && v[2] == srid && v[3] == cs, "leader keep-alive binding")?;
            let (res, lkq) = (c.m("commkares")?, c.m("leadkareq")?);
            let granted = v[4].clone();
            c.event(EventTag::Sntcommkarsp, vec![nn, cs.clone(), res.clone(), lkq, v[0].clone(), granted.clone()]);
            let fields = vec![c.m("cr")?, c.m("clid_h")?, res, cs, granted];
            let pskc = c.m("pskc")?;
            c.send(MessageKind::c(14), ssign(tuple(fields), pskc));
        }
        _ => return c.reject("unexpected message"),
    }
    Ok(())
}

fn leader(c: &mut Ctx, (k, p): (MessageKind, Term)) -> R<()> {
    let lk = leader_key(c)?;
    let (srid, cs, granted) = (c.m("srid")?, c.m("comm_session")?, c.m("Granted")?);
    let body = c.need(sdec(&p, &lk), "border agent encryption")?;
    match k.n {
        8 => {
            let (nn, lrq) = if c.s.opts.drop_noncea {
                let v = c.split(&body, 3)?;
                (public("none"), v[2].clone())
            } else {
                let v = c.split(&body, 4)?;
                (v[1].clone(), v[3].clone())
            };
            let want = c.m("leadpetreq")?;
            c.check(|| lrq == want, "petition request code")?;
            let lres = c.m("leadpetres")?;
            c.event(EventTag::Leaderrep, vec![cs.clone(), nn.clone(), srid.clone(), lrq, lres.clone()]);
            let mut fields = vec![lres];
            if !c.s.opts.drop_noncea {
                fields.push(nn);
            }
            fields.extend([srid, cs, granted]);
            c.send(MessageKind::c(9), senc(tuple(fields), lk));
        }
        12 => {
            let v = c.split(&body, 3)?;
            let want = c.m("leadkareq")?;
            c.check(|| v[0] == cs && v[2] == want, "keep-alive request")?;
            let lres = c.m("leadkares")?;
            let nn = v[1].clone();
            c.event(EventTag::Leaderrepka, vec![cs.clone(), nn.clone(), srid.clone(), want, lres.clone()]);
            c.send(MessageKind::c(13), senc(tuple(vec![lres, nn, srid, cs, granted]), lk));
        }
        _ => return c.reject("unexpected message"),
    }
    Ok(())
}

fn joiner(c: &mut Ctx, input: Option<(MessageKind, Term)>) -> R<()> {
    let gj1 = public("Gj1");
    let jnid_h = masked(&c.m("jnid")?);
    let clid_h = c.m("clid_h")?;
    let crj = c.m("crj")?;
    let Some((k, p)) = input else {
        let ctx = hello_ctx(c, &crj, &jnid_h)?;
        let [x1, p1] = prove(c, "vj1", "xj1", &ctx, &gj1)?;
        let [x2, p2] = prove(c, "vj2", "xj2", &ctx, &gj1)?;
        for (l, t) in [("ctx", ctx), ("X1", x1.clone()), ("P1", p1.clone()), ("X2", x2.clone()), ("P2", p2.clone())] {
            c.set(l, t);
        }
        c.send(MessageKind::j(1), tuple(vec![c.m("joinerip")?, crj, x1, p1, x2, p2]));
        return Ok(());
    };
    let ssp = c.m("sspjoiner")?;
    match k.n {
        6 => {
            let v = c.split(&p, 2)?;
            let cookie = crate::crypto::Cookie { value: v[1].clone() };
            c.check(|| cookie_check(&cookie, &crj, &clid_h), "cookie integrity")?;
            c.event(EventTag::Joinerrcvck, vec![v[1].clone()]);
            let mut fields = vec![crj];
            for l in ["X1", "P1", "X2", "P2"] {
                fields.push(c.m(l)?);
            }
            fields.push(v[1].clone());
            c.send(MessageKind::j(7), tuple(fields));
        }
        12 => {
            let v = c.split(&p, 7)?;
            let (srj, bs) = (v[0].clone(), v[5].clone());
            c.check(|| zk_ok(&v[1], &v[2], &gj1) && zk_ok(&v[3], &v[4], &gj1), "server key proof")?;
            let gjx = c.need(group_generator([&c.m("X1")?, &c.m("X2")?, &v[1], &v[3]]).ok(), "generator shape")?;
            c.check(|| zk_ok(&v[5], &v[6], &gjx), "server ephemeral proof")?;
            let ssn = c.need(derive_session_key(&gjx, &c.m("xj2")?, &bs).ok(), "session key shape")?;
            c.event(EventTag::Joinerssk, vec![ssn.clone()]);
            let dkj = c.need(derive_ms(&crj, &srj, &ssp).ok(), "server random sort")?;
            c.event(EventTag::Eventdskjnr, vec![dkj.clone()]);
            let ctx = c.m("ctx")?;
            let [bc, pc] = prove(c, "vj5", "xj2", &ctx, &gjx)?;
            let key = c.need(ek(&ssn), "key")?;
            let jn_b = c.need(idb(&jnid_h), "id")?;
            let cl_b = c.need(idb(&clid_h), "id")?;
            let ccs = ssign(tuple(vec![crj.clone(), srj.clone(), jn_b.clone()]), key.clone());
            let fin = c.need(make_finished(&jnid_h, &crj, &srj, &gjx, &ssn).ok(), "finished")?;
            c.event(EventTag::Joinerbeg, vec![dkj.clone(), crj, srj.clone(), gjx.clone(), jn_b, cl_b]);
            c.publish(senc(c.m("secretdskj")?, dkj.clone()));
            c.publish(senc(c.m("secretsskj")?, key));
            let pskd = c.need(derive_pskc(&ssp, &othervars()).ok(), "pskd")?;
            c.publish(senc(c.m("sspjoiner_sec")?, pskd));
            for (l, t) in [("srj", srj), ("gjx", gjx), ("ssn", ssn), ("dkj", dkj), ("fin", fin.clone())] {
                c.set(l, t);
            }
            c.send(MessageKind::j(13), tuple(vec![bc, pc, ccs, fin]));
        }
        18 => {
            let v = c.split(&p, 2)?;
            let (srj, gjx, ssn, dkj, fin) = (c.m("srj")?, c.m("gjx")?, c.m("ssn")?, c.m("dkj")?, c.m("fin")?);
            let key = c.need(ek(&ssn), "key")?;
            let cl_b = c.need(idb(&clid_h), "id")?;
            let want = tuple(vec![crj.clone(), srj.clone(), cl_b.clone()]);
            c.check(|| open(&v[0], &key) == Some(want), "server change-cipher-spec")?;
            c.check(|| v[1] == fin, "server finished")?;
            let jn_b = c.need(idb(&jnid_h), "id")?;
            c.event(EventTag::Joinerfin, vec![dkj.clone(), crj, srj, gjx, jn_b, cl_b]);
            let req = senc(c.m("join_fin_req")?, dkj);
            c.send(MessageKind::j(19), tuple(vec![c.m("joinerip")?, req]));
        }
        24 => {
            let creds = c.need(sdec(&p, &c.m("kek")?), "entrust encryption")?;
            c.event(EventTag::Joinergtsnetcreds, vec![creds]);
        }
        _ => return c.reject("unexpected message"),
    }
    Ok(())
}

fn csrv(c: &mut Ctx, (k, p): (MessageKind, Term)) -> R<()> {
    let gj1 = public("Gj1");
    let clid_h = masked(&c.m("clid")?);
    let ssp = c.m("sspjoiner")?;
    match k.n {
        3 => {
            let v = c.split(&p, 6)?;
            c.check(|| zk_ok(&v[2], &v[3], &gj1) && zk_ok(&v[4], &v[5], &gj1), "joiner key proof")?;
            let crj = v[1].clone();
            if crj.sort() != Sort::Random {
                return c.reject("joiner random sort");
            }
            let cookie = cookie_make(&crj, &clid_h).value;
            c.event(EventTag::Csrvsntck, vec![cookie.clone()]);
            c.set("iid", v[0].clone());
            c.set("hello", tuple(v[1..].to_vec()));
            c.set("crj", crj);
            c.send(MessageKind::j(4), tuple(vec![v[0].clone(), cookie]));
        }
        9 => {
            let v = c.split(&p, 6)?;
            let (hello, crj) = (c.m("hello")?, c.m("crj")?);
            c.check(|| tuple(v[..5].to_vec()) == hello, "hello fields changed")?;
            let cookie = crate::crypto::Cookie { value: v[5].clone() };
            c.check(|| cookie_check(&cookie, &crj, &clid_h), "cookie integrity")?;
            let h = c.split(&hello, 5)?;
            let srj = c.m("srj")?;
            let ctx = hello_ctx(c, &srj, &clid_h)?;
            let [x3, p3] = prove(c, "vj3", "xj3", &ctx, &gj1)?;
            let [x4, p4] = prove(c, "vj4", "xj4", &ctx, &gj1)?;
            let gjx = c.need(group_generator([&h[1], &h[3], &x3, &x4]).ok(), "generator shape")?;
            let [bs, ps] = prove(c, "vj6", "xj4", &ctx, &gjx)?;
            c.set("gjx", gjx);
            c.send(MessageKind::j(10), tuple(vec![srj, x3, p3, x4, p4, bs, ps]));
        }
        15 => {
            let v = c.split(&p, 4)?;
            let (crj, srj, gjx) = (c.m("crj")?, c.m("srj")?, c.m("gjx")?);
            c.check(|| zk_ok(&v[0], &v[1], &gjx), "joiner ephemeral proof")?;
            let ssn = c.need(derive_session_key(&gjx, &c.m("xj4")?, &v[0]).ok(), "session key shape")?;
            c.event(EventTag::Csrvssk, vec![ssn.clone()]);
            let dkj = c.need(derive_ms(&crj, &srj, &ssp).ok(), "master secret")?;
            c.event(EventTag::Eventdskcmm, vec![dkj.clone()]);
            let key = c.need(ek(&ssn), "key")?;
            let body = c.need(open(&v[2], &key), "joiner change-cipher-spec")?;
            let b = c.split(&body, 3)?;
            c.check(|| b[0] == crj && b[1] == srj, "joiner change-cipher-spec binding")?;
            let jn_b = b[2].clone();
            let jnid_h = c.need(reduce_destructor(Dtor::Invert(Ctor::IdToBitstring), std::slice::from_ref(&jn_b)), "joiner id")?;
            let fin = c.need(make_finished(&jnid_h, &crj, &srj, &gjx, &ssn).ok(), "finished")?;
            c.check(|| v[3] == fin, "joiner finished")?;
            let cl_b = c.need(idb(&clid_h), "id")?;
            let args = vec![dkj.clone(), crj.clone(), srj.clone(), gjx, jn_b, cl_b.clone()];
            c.event(EventTag::Csrvfin, args.clone());
            c.event(EventTag::Csrvbeg, args);
            c.set("dkj", dkj);
            let ccs = ssign(tuple(vec![crj, srj, cl_b]), key);
            c.send(MessageKind::j(16), tuple(vec![ccs, fin]));
        }
        21 => {
            let v = c.split(&p, 2)?;
            let (iid, dkj) = (c.m("iid")?, c.m("dkj")?);
            c.check(|| ap(Ctor::Hash, vec![v[0].clone()]) == Some(iid.clone()), "joiner address")?;
            let want = c.m("join_fin_req")?;
            c.check(|| sdec(&v[1], &dkj) == Some(want), "join finalization request")?;
            let body = tuple(vec![iid, c.m("netcreds")?, c.m("kek")?, c.m("join_fin_rsp")?]);
            let rk = relay_key(c)?;
            c.send(MessageKind::j(22), senc(body, rk));
        }
        _ => return c.reject("unexpected message"),
    }
    Ok(())
}

/// Relays forward unchanged, except the joiner router hashes the joiner
/// address on the way in and unwraps the entrust material on the way out.
fn relay(c: &mut Ctx, (k, p): (MessageKind, Term)) -> R<()> {
    let next = MessageKind::j(k.n + 1);
    match (c.s.role, k.n) {
        (RoleId::JrtRelay, 1) => {
            let v = c.split(&p, 2)?;
            let iid = c.need(ap(Ctor::Hash, vec![v[0].clone()]), "address")?;
            c.set("iid", iid.clone());
            c.send(next, tuple(vec![iid, v[1].clone()]));
        }
        (RoleId::JrtRelay, 23) => {
            let rk = relay_key(c)?;
            let body = c.need(sdec(&p, &rk), "relay encryption")?;
            let v = c.split(&body, 4)?;
            let iid = c.m("iid")?;
            c.check(|| v[0] == iid, "entrust for another joiner")?;
            c.event(EventTag::Evjrtrsendsnetcreds, vec![v[1].clone()]);
            c.send(next, senc(v[1].clone(), v[2].clone()));
        }
        _ => c.send(next, p),
    }
    Ok(())
}
