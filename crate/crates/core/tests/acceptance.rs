//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use meshcop_core::adversary::KnowledgeBase;
use meshcop_core::dump::{render_trace, replay};
use meshcop_core::harness::{honest_run, run_schedule};
use meshcop_core::queries::{check_correspondence, render_report, run_suite, Format, PTerm, Pattern, Report};
use meshcop_core::sample::{build, sort_of, ANY};
use meshcop_core::syntax::parse_term;
use meshcop_core::term::{apply, is_normal, normalize, Ctor, Dtor, Expr, Signature, Sort, Term};
use meshcop_core::{Event, EventTag, ExplorationConfig, Mutation, Outcome, Status};

type Check = Result<String, String>;

fn with(mutation: Mutation) -> ExplorationConfig {
    let mut cfg = ExplorationConfig::default();
    cfg.mutations.insert(mutation);
    cfg
}

fn status(r: &Report, id: &str) -> Status {
    r.row(id).map(|row| row.verdict.status).unwrap_or(Status::Unreached)
}

fn honest_flow() -> Check {
    let t0 = Instant::now();
    let t = honest_run(meshcop_core::Scenario::Full);
    let elapsed = t0.elapsed();
    let fired = EventTag::NAMED.iter().filter(|tag| t.events().any(|e| e.tag == **tag)).count();
    if t.outcome != Outcome::Completed || fired != 26 || elapsed >= Duration::from_secs(1) {
        return Err(format!("outcome {} with {fired}/26 events in {elapsed:?}", t.outcome));
    }
    Ok(format!("Completed, 26/26 named events, {elapsed:?}"))
}

fn published(r: &Report, elapsed: Duration) -> Check {
    let rows = ["Q1a", "Q1b", "Q2a", "Q2b", "Q2c", "Q3", "Q4a", "Q4b", "Q4c", "Q4d", "Q5a", "Q5b", "Q6a", "Q6b"];
    let bad: Vec<String> = rows
        .iter()
        .filter_map(|id| {
            let row = r.row(id)?;
            (!row.matches()).then(|| format!("{id}={}", row.verdict.status))
        })
        .collect();
    if !bad.is_empty() || elapsed >= Duration::from_secs(300) {
        return Err(format!("mismatches {bad:?} in {elapsed:?}"));
    }
    Ok(format!("14/14 rows match in {elapsed:?}"))
}

fn secrecy(r: &Report) -> Check {
    let rows: Vec<_> = r.rows.iter().filter(|row| row.query.id.starts_with("S-")).collect();
    let leaked: Vec<&str> =
        rows.iter().filter(|row| row.verdict.status != Status::Holds).map(|row| row.query.id.as_str()).collect();
    if rows.len() != 23 || !leaked.is_empty() {
        return Err(format!("{} secrecy rows, leaked {leaked:?}", rows.len()));
    }
    Ok("23/23 secrets hold".into())
}

fn nonce_drop() -> Check {
    let cfg = with(Mutation::DropNoncea);
    let r = run_suite(&cfg, &[]).map_err(|e| e.to_string())?;
    for id in ["Q5a", "Q6a"] {
        if status(&r, id) != Status::Violated {
            return Err(format!("{id} is {}", status(&r, id)));
        }
    }
    let ev = r.row("Q5a").and_then(|row| row.verdict.evidence.clone()).ok_or("no Q5a counterexample")?;
    let trace = run_schedule(&cfg, &ev.world, &ev.schedule).map_err(|e| e.to_string())?;
    let again = replay(&render_trace(&cfg, &trace)).map_err(|e| e.to_string())?;
    if !again.identical {
        return Err("Q5a counterexample does not replay".into());
    }
    let at = |tag: EventTag| trace.events().filter(|e| e.tag == tag && ev.positions.contains(&e.pos)).count();
    let (rcv, snt) = (at(EventTag::Rcvcommrsp), at(EventTag::Sntcommrsp));
    if (rcv, snt) != (2, 1) {
        return Err(format!("counterexample shows {rcv} rcvcommrsp against {snt} sntcommrsp"));
    }
    Ok(format!("Q5a, Q6a Violated; two rcvcommrsp share one sntcommrsp ({})", ev.detail))
}

fn encryption_drops() -> Check {
    let leader = run_suite(&with(Mutation::NoLeaderEncryption), &[]).map_err(|e| e.to_string())?;
    let relay = run_suite(&with(Mutation::NoRelayEncryption), &[]).map_err(|e| e.to_string())?;
    let want = [(&leader, "S-leadpetreq"), (&leader, "S-leadpetres"), (&relay, "S-kek"), (&relay, "S-netcreds")];
    let held: Vec<&str> = want.iter().filter(|(r, id)| status(r, id) != Status::Violated).map(|(_, id)| *id).collect();
    if !held.is_empty() {
        return Err(format!("still secret: {held:?}"));
    }
    Ok("leadpetreq, leadpetres, kek, netcreds all Violated".into())
}

fn zkp_forge() -> Check {
    let cfg = with(Mutation::AllowZkpForge);
    let r = run_suite(&cfg, &[]).map_err(|e| e.to_string())?;
    let id = ["Q4c", "Q4d"].into_iter().find(|id| status(&r, id) == Status::Violated).ok_or("Q4c and Q4d hold")?;
    let ev = r.row(id).and_then(|row| row.verdict.evidence.clone()).ok_or("no evidence")?;
    let text = render_trace(&cfg, &run_schedule(&cfg, &ev.world, &ev.schedule).map_err(|e| e.to_string())?);
    let (a, b) = (replay(&text).map_err(|e| e.to_string())?, replay(&text).map_err(|e| e.to_string())?);
    if !a.identical || a.rendered != b.rendered {
        return Err(format!("{id} dump does not replay deterministically"));
    }
    Ok(format!("{id} Violated in {}, dump replays identically", ev.world.id()))
}

fn algebra(n: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..n {
        let mut recipe = [0u8; 48];
        rng.fill_bytes(&mut recipe);
        let sort = ANY[rng.random_range(0..ANY.len())];
        let t = build(sort, &mut recipe.into_iter(), 4);
        let k = build(Sort::Key, &mut recipe.into_iter().rev(), 3);
        let c = apply(Ctor::Senc, vec![t.clone(), k.clone()]).map_err(|e| e.to_string())?;
        let opened = Expr::Dtor(Dtor::Sdec, vec![Expr::Term(c), Expr::Term(k)]).eval();
        let parsed = parse_term(&t.to_string(), &sort_of).ok();
        let mut kb = KnowledgeBase::new(Signature::standard(), []);
        kb.observe(&t);
        let sound = t.subterms().iter().all(|s| kb.derive(s).is_none_or(|d| d.replay().as_ref() == Some(*s)));
        if !is_normal(&t) || normalize(&t) != t || opened != Some(t.clone()) || parsed != Some(t.clone()) || !sound {
            return Err(format!("term {i} fails: {t}"));
        }
    }
    Ok(format!("{n} random terms pass"))
}

fn oracle(n: usize) -> Check {
    const TAGS: [EventTag; 4] = [EventTag::Joinerrcvck, EventTag::Csrvsntck, EventTag::Bsrvssk, EventTag::Cclissk];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let value = |i: u32| Term::Name { label: "v".into(), index: i, sort: Sort::Bitstring };
    let pattern = |rng: &mut ChaCha8Rng| {
        let tag = TAGS[rng.random_range(0..TAGS.len())];
        let args = (0..tag.arity())
            .map(|_| {
                let i = rng.random_range(0..3u32);
                if rng.random_bool(0.3) { PTerm::Lit(value(i)) } else { PTerm::Var(["x", "y", "z"][i as usize].into()) }
            })
            .collect();
        Pattern { tag, args }
    };
    let mut agree = 0;
    for _ in 0..n {
        let len = rng.random_range(0..=5);
        let events: Vec<Event> = (0..len)
            .map(|pos| {
                let tag = TAGS[rng.random_range(0..TAGS.len())];
                Event { tag, args: (0..tag.arity()).map(|_| value(rng.random_range(0..3))).collect(), pos }
            })
            .collect();
        let refs: Vec<&Event> = events.iter().collect();
        let conclusion = pattern(&mut rng);
        let premise = [pattern(&mut rng)];
        for inj in [false, true] {
            if check_correspondence(&conclusion, &premise, inj, &refs).is_ok()
                != support::brute_force(&conclusion, &premise, inj, &refs)
            {
                return Err(format!("disagreement after {agree} checks"));
            }
            agree += 1;
        }
    }
    Ok(format!("{agree}/{agree} checks agree"))
}

fn determinism(first: &Report) -> Check {
    let cfg = ExplorationConfig::default();
    let second = run_suite(&cfg, &[]).map_err(|e| e.to_string())?;
    for f in [Format::Text, Format::Structured] {
        if render_report(first, f, Some("dumps")) != render_report(&second, f, Some("dumps")) {
            return Err("reports differ".into());
        }
    }
    for (a, b) in first.rows.iter().zip(&second.rows) {
        if let (Some(x), Some(y)) = (&a.verdict.evidence, &b.verdict.evidence) {
            let dx = render_trace(&cfg, &run_schedule(&cfg, &x.world, &x.schedule).map_err(|e| e.to_string())?);
            let dy = render_trace(&cfg, &run_schedule(&cfg, &y.world, &y.schedule).map_err(|e| e.to_string())?);
            if dx != dy {
                return Err(format!("dump for {} differs", a.query.id));
            }
        }
    }
    Ok("reports and dumps byte-identical across runs".into())
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let default = run_suite(&ExplorationConfig::default(), &[]);
    let elapsed = t0.elapsed();
    let criteria: Vec<(&str, Check)> = match &default {
        Ok(r) => vec![
            ("honest full run", honest_flow()),
            ("published verdicts", published(r, elapsed)),
            ("secrecy suite", secrecy(r)),
            ("nonce omission", nonce_drop()),
            ("encryption removal", encryption_drops()),
            ("zkp forging", zkp_forge()),
            ("algebra properties", algebra(1000)),
            ("correspondence oracle", oracle(2000)),
            ("determinism", determinism(r)),
        ],
        Err(e) => vec![("default exploration", Err(e.to_string()))],
    };
    let mut failed = 0;
    for (i, (name, result)) in criteria.iter().enumerate() {
        match result {
            Ok(msg) => println!("PASS {} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", i + 1);
            }
        }
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
