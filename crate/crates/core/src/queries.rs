//! Query registry, per-trace evaluation and reports.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::harness::{explore_world, ExplorationConfig, ExploreStats, HarnessError, Scenario, Schedule, Trace, WorldSpec};
use crate::roles::{Event, EventTag, MessageKind, Protocol};
use crate::term::Term;

/// Pattern argument: a variable or a fixed term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PTerm {
    Var(String),
    Lit(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub tag: EventTag,
    pub args: Vec<PTerm>,
}

impl Pattern {
    pub fn new(tag: EventTag, vars: &[&str]) -> Self {
        assert_eq!(vars.len(), tag.arity(), "arity of {tag}");
        Pattern { tag, args: vars.iter().map(|v| PTerm::Var((*v).to_string())).collect() }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| match a {
                PTerm::Var(v) => v.clone(),
                PTerm::Lit(t) => t.to_string(),
            })
            .collect();
        write!(f, "{}({})", self.tag, args.join(","))
    }
}

pub type Bindings = BTreeMap<String, Term>;

/// Extends `b` so that `p` matches `e`, if possible.
pub fn match_event(p: &Pattern, e: &Event, b: &Bindings) -> Option<Bindings> {
    if p.tag != e.tag || p.args.len() != e.args.len() {
        return None;
    }
    let mut out = b.clone();
    for (pa, ea) in p.args.iter().zip(&e.args) {
        match pa {
            PTerm::Lit(t) if t != ea => return None,
            PTerm::Lit(_) => {}
            PTerm::Var(v) => match out.get(v) {
                Some(bound) if bound != ea => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), ea.clone());
                }
            },
        }
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryKind {
    /// Some trace contains all patterns under one set of bindings.
    Reachability { patterns: Vec<Pattern> },
    Correspondence { conclusion: Pattern, premises: Vec<Pattern>, injective: bool },
    /// No honest name with this label becomes derivable.
    Secrecy { label: String },
}

impl QueryKind {
    pub fn name(&self) -> &'static str {
        match self {
            QueryKind::Reachability { .. } => "reachability",
            QueryKind::Correspondence { .. } => "correspondence",
            QueryKind::Secrecy { .. } => "secrecy",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryKind::Reachability { patterns } => {
                let ps: Vec<String> = patterns.iter().map(|p| format!("event({p})")).collect();
                f.write_str(&ps.join(" && "))
            }
            QueryKind::Correspondence { conclusion, premises, injective } => {
                let kw = if *injective { "inj-event" } else { "event" };
                let ps: Vec<String> = premises.iter().map(|p| format!("{kw}({p})")).collect();
                write!(f, "{kw}({conclusion}) ==> {}", ps.join(" && "))
            }
            QueryKind::Secrecy { label } => write!(f, "attacker({label})"),
        }
    }
}

/// The groups the query counts are reported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Reachability,
    Correspondence,
    Secrecy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Status {
    Holds,
    Violated,
    ReachableWitness,
    Unreached,
}

impl Status {
    /// The boolean the verification tool would print for this outcome.
    /// A reachability query asks for the negated event, so a witness
    /// prints false; a secrecy query asks whether the attacker has the term.
    pub fn tool_semantics(self, kind: &QueryKind) -> &'static str {
        match (kind, self) {
            (QueryKind::Secrecy { .. }, Status::Holds) => "false",
            (QueryKind::Secrecy { .. }, _) => "true",
            (_, Status::Holds | Status::Unreached) => "true",
            (_, Status::Violated | Status::ReachableWitness) => "false",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "Holds",
            Status::Violated => "Violated",
            Status::ReachableWitness => "ReachableWitness",
            Status::Unreached => "Unreached",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub group: Group,
    pub kind: QueryKind,
    pub expected: Status,
    pub model_added: bool,
}

/// A replayable run that decides a query, plus the trace positions involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub world: WorldSpec,
    pub schedule: Schedule,
    pub positions: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub evidence: Option<Counterexample>,
}

fn corr(id: &str, conclusion: Pattern, premises: Vec<Pattern>, injective: bool) -> Query {
    Query {
        id: id.into(),
        group: Group::Correspondence,
        kind: QueryKind::Correspondence { conclusion, premises, injective },
        expected: Status::Holds,
        model_added: false,
    }
}

fn conj(id: &str, patterns: Vec<Pattern>) -> Query {
    Query {
        id: id.into(),
        group: Group::Correspondence,
        kind: QueryKind::Reachability { patterns },
        expected: Status::ReachableWitness,
        model_added: false,
    }
}

/// Published secrets followed by the model's completions.
pub const PUBLISHED_SECRETS: [&str; 14] = [
    "commpetreq",
    "commpetres",
    "commkareq",
    "commkares",
    "leadpetreq",
    "leadpetres",
    "leadkareq",
    "leadkares",
    "secretpskc",
    "netcreds",
    "join_fin_req",
    "join_fin_rsp",
    "kek",
    "sspjoiner_sec",
];
pub const ADDED_SECRETS: [&str; 9] = [
    "sspcommissioner",
    "sspjoiner",
    "secretborderandleader",
    "scrtjtrcm",
    "Granted",
    "comm_session",
    "secretdskj",
    "secretsskc",
    "secretsskj",
];

/// All 78 registered queries in report order.
pub fn registry() -> Vec<Query> {
    use EventTag::*;
    let p = Pattern::new;
    let fin7 = ["ss", "ds", "cr", "sr", "eg", "cl", "sl"];
    let fin6 = ["p", "cr", "sr", "eg", "cl", "sl"];
    let mut q = vec![
        corr("Q1a", p(Cclircvck, &["cook"]), vec![p(Bsrvsntck, &["cook"])], false),
        corr("Q1b", p(Joinerrcvck, &["cook"]), vec![p(Csrvsntck, &["cook"])], false),
        conj("Q2a", vec![p(Bsrvssk, &["el", "k"]), p(Cclissk, &["el", "k"])]),
        conj("Q2b", vec![p(Csrvssk, &["e1"]), p(Joinerssk, &["e1"])]),
        conj("Q2c", vec![p(Eventdskjnr, &["a"]), p(Eventdskcmm, &["a"])]),
        corr(
            "Q3",
            p(Joinergtsnetcreds, &["n"]),
            vec![p(Csrvfin, &fin6), p(Evjrtrsendsnetcreds, &["n"]), p(Joinerfin, &fin6)],
            false,
        ),
        corr("Q4a", p(Cclifin, &fin7), vec![p(Bsrvbeg, &fin7)], true),
        corr("Q4b", p(Bsrvfin, &fin7), vec![p(Cclibeg, &fin7)], true),
        corr("Q4c", p(Joinerfin, &fin6), vec![p(Csrvbeg, &fin6)], true),
        corr("Q4d", p(Csrvfin, &fin6), vec![p(Joinerbeg, &fin6)], true),
        corr(
            "Q5a",
            p(Rcvcommrsp, &["r3", "req", "mrq"]),
            vec![p(Sntcommrsp, &["nn", "r3", "req", "lrq", "lrs", "mrq"])],
            true,
        ),
        corr(
            "Q5b",
            p(Rcvcommkarsp, &["r3", "req", "mrq"]),
            vec![p(Sntcommkarsp, &["nn", "r3", "req", "lrq", "lrs", "mrq"])],
            true,
        ),
        corr(
            "Q6a",
            p(Sntcommrsp, &["nn", "r3", "req", "lrq", "lrs", "mrq"]),
            vec![p(Leaderrep, &["r3", "nn", "id", "lrq", "lsrs"])],
            true,
        ),
        corr(
            "Q6b",
            p(Sntcommkarsp, &["nn", "r3", "req", "lrq", "lrs", "mrq"]),
            vec![p(Leaderrepka, &["r3", "nn", "id", "lrq", "lrs"])],
            true,
        ),
    ];
    let mut q7 = corr("Q7", p(Evjrtrsendsnetcreds, &["n"]), vec![p(Csrvfin, &fin6)], false);
    q7.model_added = true;
    q.push(q7);
    for tag in EventTag::NAMED {
        let vars: Vec<String> = (1..=tag.arity()).map(|i| format!("x{i}")).collect();
        let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
        q.push(Query {
            id: format!("R-{tag}"),
            group: Group::Reachability,
            kind: QueryKind::Reachability { patterns: vec![p(tag, &vars)] },
            expected: Status::ReachableWitness,
            model_added: false,
        });
    }
    for n in 1..=14 {
        let k = MessageKind::c(n);
        q.push(Query {
            id: format!("R-rcvd-C_M{n}"),
            group: Group::Reachability,
            kind: QueryKind::Reachability { patterns: vec![p(MsgRcvd(k), &["m"])] },
            expected: Status::ReachableWitness,
            model_added: true,
        });
    }
    for (labels, added) in [(&PUBLISHED_SECRETS[..], false), (&ADDED_SECRETS[..], true)] {
        for l in labels {
            q.push(Query {
                id: format!("S-{l}"),
                group: Group::Secrecy,
                kind: QueryKind::Secrecy { label: (*l).to_string() },
                expected: Status::Holds,
                model_added: added,
            });
        }
    }
    q
}

/// Events of a trace in order; positions come from the harness.
fn events(trace: &Trace) -> Vec<&Event> {
    trace.events().collect()
}

/// Positions of a joint match of all patterns, if any.
pub fn find_conjunction(patterns: &[Pattern], events: &[&Event]) -> Option<Vec<usize>> {
    fn go(ps: &[Pattern], evs: &[&Event], b: &Bindings, acc: &mut Vec<usize>) -> bool {
        let Some((first, rest)) = ps.split_first() else { return true };
        for e in evs {
            if let Some(nb) = match_event(first, e, b) {
                acc.push(e.pos);
                if go(rest, evs, &nb, acc) {
                    return true;
                }
                acc.pop();
            }
        }
        false
    }
    let mut acc = Vec::new();
    go(patterns, events, &Bindings::new(), &mut acc).then_some(acc)
}

/// Why a correspondence fails on one trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceFailure {
    /// Conclusion occurrences involved.
    pub conclusions: Vec<usize>,
    /// Premise occurrences they compete for (empty if none exists).
    pub premises: Vec<usize>,
}

fn premise_exists(premises: &[Pattern], events: &[&Event], before: usize, b: &Bindings) -> bool {
    let early: Vec<&Event> = events.iter().copied().filter(|e| e.pos < before).collect();
    fn go(ps: &[Pattern], evs: &[&Event], b: &Bindings) -> bool {
        let Some((first, rest)) = ps.split_first() else { return true };
        evs.iter().any(|e| match_event(first, e, b).is_some_and(|nb| go(rest, evs, &nb)))
    }
    go(premises, &early, b)
}

/// Checks one trace. Injective queries take a single premise pattern.
pub fn check_correspondence(
    conclusion: &Pattern,
    premises: &[Pattern],
    injective: bool,
    events: &[&Event],
) -> Result<(), CorrespondenceFailure> {
    let concl: Vec<(usize, Bindings)> =
        events.iter().filter_map(|e| match_event(conclusion, e, &Bindings::new()).map(|b| (e.pos, b))).collect();
    for (pos, b) in &concl {
        if !premise_exists(premises, events, *pos, b) {
            return Err(CorrespondenceFailure { conclusions: vec![*pos], premises: vec![] });
        }
    }
    if !injective {
        return Ok(());
    }
    assert_eq!(premises.len(), 1, "injective queries have one premise");
    let cands: Vec<Vec<usize>> = concl
        .iter()
        .map(|(pos, b)| {
            events.iter().filter(|e| e.pos < *pos && match_event(&premises[0], e, b).is_some()).map(|e| e.pos).collect()
        })
        .collect();
    let matched = max_matching(&cands);
    if let Some(u) = (0..concl.len()).find(|u| !matched.values().any(|v| v == u)) {
        let mut conclusions = vec![concl[u].0];
        for p in &cands[u] {
            if let Some(v) = matched.get(p) {
                conclusions.push(concl[*v].0);
            }
        }
        conclusions.sort_unstable();
        return Err(CorrespondenceFailure { conclusions, premises: cands[u].clone() });
    }
    Ok(())
}

/// Kuhn's augmenting paths. Returns premise position -> conclusion index.
fn max_matching(cands: &[Vec<usize>]) -> BTreeMap<usize, usize> {
    fn augment(u: usize, cands: &[Vec<usize>], seen: &mut Vec<usize>, m: &mut BTreeMap<usize, usize>) -> bool {
        for &p in &cands[u] {
            if seen.contains(&p) {
                continue;
            }
            seen.push(p);
            let free = match m.get(&p) {
                None => true,
                Some(&w) => augment(w, cands, seen, m),
            };
            if free {
                m.insert(p, u);
                return true;
            }
        }
        false
    }
    let mut m = BTreeMap::new();
    for u in 0..cands.len() {
        augment(u, cands, &mut Vec::new(), &mut m);
    }
    m
}

/// First honest name with this label the attacker can derive.
pub fn leaked<'a>(label: &str, trace: &'a Trace) -> Option<&'a Term> {
    trace.secrets.get(label)?.iter().find(|t| trace.final_kb.can_derive(t))
}

fn evidence(trace: &Trace, positions: Vec<usize>, detail: String) -> Counterexample {
    Counterexample { world: trace.world.clone(), schedule: trace.schedule.clone(), positions, detail }
}

/// Decides `q` on one trace: `Some` when this trace settles the verdict.
pub fn decide(q: &Query, trace: &Trace) -> Option<Counterexample> {
    match &q.kind {
        QueryKind::Reachability { patterns } => {
            let evs = events(trace);
            find_conjunction(patterns, &evs).map(|pos| evidence(trace, pos, "witness".into()))
        }
        QueryKind::Correspondence { conclusion, premises, injective } => {
            let evs = events(trace);
            check_correspondence(conclusion, premises, *injective, &evs).err().map(|f| {
                let detail = if f.premises.is_empty() {
                    format!("conclusion at {:?} has no earlier premise", f.conclusions)
                } else {
                    format!("conclusions at {:?} share premises at {:?}", f.conclusions, f.premises)
                };
                let mut pos = f.conclusions.clone();
                pos.extend(&f.premises);
                pos.sort_unstable();
                evidence(trace, pos, detail)
            })
        }
        QueryKind::Secrecy { label } => {
            leaked(label, trace).map(|t| {
                let how = trace.final_kb.derive(t).map(|d| d.to_string()).unwrap_or_default();
                evidence(trace, vec![], format!("derived {t} via {how}"))
            })
        }
    }
}

fn settled_status(kind: &QueryKind) -> Status {
    match kind {
        QueryKind::Reachability { .. } => Status::ReachableWitness,
        _ => Status::Violated,
    }
}

fn default_status(kind: &QueryKind) -> Status {
    match kind {
        QueryKind::Reachability { .. } => Status::Unreached,
        _ => Status::Holds,
    }
}

/// Evaluates a query over a whole corpus.
pub fn eval(q: &Query, corpus: &[Trace]) -> Verdict {
    match corpus.iter().find_map(|t| decide(q, t)) {
        Some(ev) => Verdict { status: settled_status(&q.kind), evidence: Some(ev) },
        None => Verdict { status: default_status(&q.kind), evidence: None },
    }
}

pub fn eval_reachability(q: &Query, corpus: &[Trace]) -> Verdict {
    assert!(matches!(q.kind, QueryKind::Reachability { .. }));
    eval(q, corpus)
}

pub fn eval_correspondence(q: &Query, corpus: &[Trace]) -> Verdict {
    assert!(matches!(q.kind, QueryKind::Correspondence { .. }));
    eval(q, corpus)
}

pub fn eval_secrecy(q: &Query, corpus: &[Trace]) -> Verdict {
    assert!(matches!(q.kind, QueryKind::Secrecy { .. }));
    eval(q, corpus)
}

/// Streams traces through every query, keeping the first deciding trace.
#[derive(Debug, Clone)]
pub struct Accumulator {
    queries: Vec<Query>,
    found: Vec<Option<Counterexample>>,
}

impl Accumulator {
    pub fn new(queries: Vec<Query>) -> Self {
        let found = vec![None; queries.len()];
        Accumulator { queries, found }
    }

    /// Keeps the evidence with the fewest attacker decisions, earliest first.
    pub fn ingest(&mut self, trace: &Trace) {
        for (q, slot) in self.queries.iter().zip(self.found.iter_mut()) {
            if slot.as_ref().is_none_or(|ev| ev.schedule.len() > trace.schedule.len()) {
                if let Some(ev) = decide(q, trace) {
                    *slot = Some(ev);
                }
            }
        }
    }

    /// Associative merge; `self` holds traces explored earlier than `later`.
    pub fn merge(mut self, later: Accumulator) -> Self {
        for (slot, other) in self.found.iter_mut().zip(later.found) {
            let better = match (&*slot, &other) {
                (None, _) => true,
                (Some(a), Some(b)) => b.schedule.len() < a.schedule.len(),
                (Some(_), None) => false,
            };
            if better {
                *slot = other;
            }
        }
        self
    }

    pub fn verdicts(self) -> Vec<(Query, Verdict)> {
        self.queries
            .into_iter()
            .zip(self.found)
            .map(|(q, ev)| {
                let status = if ev.is_some() { settled_status(&q.kind) } else { default_status(&q.kind) };
                (q, Verdict { status, evidence: ev })
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("unknown query id `{0}`")]
    UnknownQueryId(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

#[derive(Debug, Clone)]
pub struct Row {
    pub query: Query,
    pub verdict: Verdict,
}

impl Row {
    pub fn matches(&self) -> bool {
        self.query.expected == self.verdict.status
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config: ExplorationConfig,
    pub stats: ExploreStats,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn mismatches(&self) -> usize {
        self.rows.iter().filter(|r| !r.matches()).count()
    }

    pub fn row(&self, id: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.query.id == id)
    }
}

fn tag_protocol(tag: EventTag) -> Protocol {
    use EventTag::*;
    match tag {
        MsgSent(k) | MsgRcvd(k) => k.protocol(),
        Cclircvck | Bsrvsntck | Bsrvssk | Cclissk | Bsrvbeg | Bsrvfin | Cclibeg | Cclifin | Rcvcommrsp
        | Rcvcommkarsp | Sntcommrsp | Sntcommkarsp | Leaderrep | Leaderrepka => Protocol::Commissioner,
        _ => Protocol::Joiner,
    }
}

const COMMISSIONER_SECRETS: [&str; 14] = [
    "commpetreq",
    "commpetres",
    "commkareq",
    "commkares",
    "leadpetreq",
    "leadpetres",
    "leadkareq",
    "leadkares",
    "secretpskc",
    "sspcommissioner",
    "secretborderandleader",
    "Granted",
    "comm_session",
    "secretsskc",
];

impl Query {
    /// The protocols whose runs can decide this query.
    pub fn protocols(&self) -> Vec<Protocol> {
        let mut out: Vec<Protocol> = match &self.kind {
            QueryKind::Reachability { patterns } => patterns.iter().map(|p| tag_protocol(p.tag)).collect(),
            QueryKind::Correspondence { conclusion, premises, .. } => {
                std::iter::once(conclusion).chain(premises).map(|p| tag_protocol(p.tag)).collect()
            }
            QueryKind::Secrecy { label } if COMMISSIONER_SECRETS.contains(&label.as_str()) => {
                vec![Protocol::Commissioner]
            }
            QueryKind::Secrecy { .. } => vec![Protocol::Joiner],
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Selects queries by id. An empty selection means every query the
/// scenario's protocols can decide.
pub fn select(selection: &[String], scenario: Scenario) -> Result<Vec<Query>, QueryError> {
    let all = registry();
    if selection.is_empty() {
        let ps = scenario.protocols();
        return Ok(all.into_iter().filter(|q| q.protocols().iter().all(|p| ps.contains(p))).collect());
    }
    selection
        .iter()
        .map(|id| all.iter().find(|q| &q.id == id).cloned().ok_or_else(|| QueryError::UnknownQueryId(id.clone())))
        .collect()
}

/// Explores `cfg` once and evaluates the selected queries over the corpus.
/// Worlds run on separate threads; their accumulators merge in world order,
/// so the report does not depend on scheduling.
pub fn run_suite(cfg: &ExplorationConfig, selection: &[String]) -> Result<Report, QueryError> {
    let queries = select(selection, cfg.scenario)?;
    let worlds = cfg.worlds();
    let parts: Vec<Result<(Accumulator, ExploreStats), HarnessError>> = std::thread::scope(|s| {
        let handles: Vec<_> = worlds
            .iter()
            .map(|w| {
                let queries = queries.clone();
                s.spawn(move || {
                    let mut acc = Accumulator::new(queries);
                    let stats = explore_world(cfg, w, &mut |t| acc.ingest(t))?;
                    Ok((acc, stats))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("exploration worker panicked")).collect()
    });
    let mut acc = Accumulator::new(queries);
    let mut stats = ExploreStats::default();
    for part in parts {
        let (a, s) = part?;
        acc = acc.merge(a);
        stats.absorb(&s);
    }
    let rows = acc.verdicts().into_iter().map(|(query, verdict)| Row { query, verdict }).collect();
    Ok(Report { config: cfg.clone(), stats, rows })
}

pub const CAVEAT: &str = "bounded evaluation: Holds means no violation within the explored bounds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

/// File name a counterexample is dumped under, if it has one.
pub fn counterexample_file(row: &Row) -> Option<String> {
    row.verdict.evidence.as_ref().map(|_| format!("{}.trace", row.query.id.replace(['[', ']'], "_")))
}

pub fn render_report(r: &Report, format: Format, dump_dir: Option<&str>) -> String {
    match format {
        Format::Text => render_text(r),
        Format::Structured => render_structured(r, dump_dir),
    }
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("config: {}\n", r.config.canonical()));
    out.push_str(&format!("digest: {}\n", r.config.digest()));
    out.push_str(&format!(
        "explored: worlds={} traces={} branches={}\n",
        r.stats.worlds, r.stats.traces, r.stats.branch_points
    ));
    out.push_str(&format!(
        "outcomes: completed={} rejected={} exhausted={}\n",
        r.stats.completed, r.stats.rejected, r.stats.exhausted
    ));
    out.push_str(&format!("note: {CAVEAT}\n\n"));
    let header = ["Query ID", "Query", "Expected", "Actual", "Status", "Match"];
    let rows: Vec<[String; 6]> = r
        .rows
        .iter()
        .map(|row| {
            let q = &row.query;
            [
                if q.model_added { format!("{}*", q.id) } else { q.id.clone() },
                q.kind.to_string(),
                q.expected.tool_semantics(&q.kind).to_string(),
                row.verdict.status.tool_semantics(&q.kind).to_string(),
                row.verdict.status.to_string(),
                if row.matches() { "ok" } else { "MISMATCH" }.to_string(),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &rows {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(width).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("{}\n", padded.join(" | ").trim_end())
    };
    out.push_str(&line(&header.map(String::from)));
    out.push_str(&line(&width.map(|w| "-".repeat(w))));
    for row in &rows {
        out.push_str(&line(row));
    }
    out.push_str("\n* model-added query\n");
    for row in r.rows.iter().filter(|row| row.verdict.status == Status::Violated) {
        if let Some(ev) = &row.verdict.evidence {
            out.push_str(&format!("counterexample {}: world {} {}\n", row.query.id, ev.world.id(), ev.detail));
        }
    }
    out.push_str(&format!("summary: {} queries, {} mismatches\n", r.rows.len(), r.mismatches()));
    out
}

#[derive(Serialize)]
struct Record<'a> {
    id: &'a str,
    kind: &'static str,
    expected: Status,
    actual: Status,
    tool_semantics: &'static str,
    counterexample_path: Option<String>,
    model_added: bool,
    query: String,
}

fn render_structured(r: &Report, dump_dir: Option<&str>) -> String {
    let mut out = String::new();
    for row in &r.rows {
        let rec = Record {
            id: &row.query.id,
            kind: row.query.kind.name(),
            expected: row.query.expected,
            actual: row.verdict.status,
            tool_semantics: row.verdict.status.tool_semantics(&row.query.kind),
            counterexample_path: dump_dir
                .and_then(|d| counterexample_file(row).map(|f| format!("{}/{f}", d.trim_end_matches('/')))),
            model_added: row.query.model_added,
            query: row.query.kind.to_string(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// One line per registered query.
pub fn list_queries() -> String {
    let mut out = String::new();
    for q in registry() {
        out.push_str(&format!(
            "{}\t{}\t{}\texpected={} ({})\t{}\t{}\n",
            q.id,
            serde_json::to_value(q.group).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            q.kind.name(),
            q.expected,
            q.expected.tool_semantics(&q.kind),
            if q.model_added { "model-added" } else { "published" },
            q.kind,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{honest_run, Scenario};
    use crate::term::{NameCtx, Sort};

    #[test]
    fn scenario_selection_splits_the_registry() {
        let c = select(&[], Scenario::Commissioner).unwrap().len();
        let j = select(&[], Scenario::Joiner).unwrap().len();
        assert_eq!(c + j, 78);
        assert_eq!(select(&[], Scenario::Full).unwrap().len(), 78);
        assert!(matches!(select(&["Q9".into()], Scenario::Full), Err(QueryError::UnknownQueryId(_))));
    }

    #[test]
    fn registry_counts() {
        let r = registry();
        let count = |g| r.iter().filter(|q| q.group == g).count();
        assert_eq!((count(Group::Reachability), count(Group::Correspondence), count(Group::Secrecy)), (40, 15, 23));
        let mut ids: Vec<&str> = r.iter().map(|q| q.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 78);
    }

    #[test]
    fn honest_corpus_matches_expectations() {
        let corpus = vec![honest_run(Scenario::Full)];
        for q in registry() {
            assert_eq!(eval(&q, &corpus).status, q.expected, "{}", q.id);
        }
    }

    fn ev(tag: EventTag, args: Vec<Term>, pos: usize) -> Event {
        Event { tag, args, pos }
    }

    #[test]
    fn two_conclusions_one_premise_is_not_injective() {
        let mut ctx = NameCtx::new();
        let a = ctx.make_name("a", Sort::Bitstring);
        let cook = |pos| ev(EventTag::Joinerrcvck, vec![a.clone()], pos);
        let prem = ev(EventTag::Csrvsntck, vec![a.clone()], 0);
        let evs = [prem, cook(1), cook(2)];
        let refs: Vec<&Event> = evs.iter().collect();
        let c = Pattern::new(EventTag::Joinerrcvck, &["x"]);
        let p = Pattern::new(EventTag::Csrvsntck, &["x"]);
        assert!(check_correspondence(&c, std::slice::from_ref(&p), false, &refs).is_ok());
        let f = check_correspondence(&c, &[p], true, &refs).unwrap_err();
        assert_eq!(f, CorrespondenceFailure { conclusions: vec![1, 2], premises: vec![0] });
    }

    #[test]
    fn premise_must_come_first() {
        let mut ctx = NameCtx::new();
        let a = ctx.make_name("a", Sort::Bitstring);
        let evs = [ev(EventTag::Joinerrcvck, vec![a.clone()], 0), ev(EventTag::Csrvsntck, vec![a], 1)];
        let refs: Vec<&Event> = evs.iter().collect();
        let c = Pattern::new(EventTag::Joinerrcvck, &["x"]);
        let p = Pattern::new(EventTag::Csrvsntck, &["x"]);
        assert!(check_correspondence(&c, &[p], false, &refs).is_err());
    }

    #[test]
    fn tool_semantics_follow_table_conventions() {
        let r = registry();
        let q1a = r.iter().find(|q| q.id == "Q1a").unwrap();
        let q2a = r.iter().find(|q| q.id == "Q2a").unwrap();
        assert_eq!(Status::Holds.tool_semantics(&q1a.kind), "true");
        assert_eq!(Status::ReachableWitness.tool_semantics(&q2a.kind), "false");
    }

    #[test]
    fn empty_selection_is_header_only_when_no_rows() {
        let report = Report { config: ExplorationConfig::default(), stats: ExploreStats::default(), rows: vec![] };
        assert_eq!(render_report(&report, Format::Structured, None), "");
        assert!(render_report(&report, Format::Text, None).contains("Query ID"));
    }
}
