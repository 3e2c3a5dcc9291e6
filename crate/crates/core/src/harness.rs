//! Channel fabric, schedule execution and bounded exploration.
//!
//! Honest progress follows one canonical order: the pending step with the
//! lowest message number goes first, ties broken by session then role.
//! The attacker acts only at delivery points, where it may replace the
//! pending envelope with a derivable payload, and at stuck points, where
//! nothing honest can move and it may feed any waiting role. A run is thus
//! fully determined by the list of attacker decisions (its schedule).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adversary::{forge_candidates, AttackerAction, KnowledgeBase};
use crate::catalog::{label_sort, masked, ModelOptions, Mutation, Mutations, NameCatalog, PUBLIC_CONSTANTS, SESSION_NAMES};
use crate::roles::{
    init_role, role_step, Envelope, Event, Input, MessageKind, Phase, Protocol, RoleId, RoleState,
};
use crate::term::{NameCtx, Signature, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Commissioner,
    Joiner,
    Full,
}

impl Scenario {
    pub fn protocols(self) -> Vec<Protocol> {
        match self {
            Scenario::Commissioner => vec![Protocol::Commissioner],
            Scenario::Joiner => vec![Protocol::Joiner],
            Scenario::Full => vec![Protocol::Commissioner, Protocol::Joiner],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Commissioner => "commissioner",
            Scenario::Joiner => "joiner",
            Scenario::Full => "full",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Scenario::Commissioner, Scenario::Joiner, Scenario::Full]
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    Honest,
    Adversarial,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Honest => "honest",
            Mode::Adversarial => "adversarial",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest" => Ok(Mode::Honest),
            "adversarial" => Ok(Mode::Adversarial),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationConfig {
    pub scenario: Scenario,
    pub mode: Mode,
    pub mutations: Mutations,
    /// Sessions per protocol in adversarial worlds.
    pub sessions: usize,
    pub depth_bound: usize,
    /// Maximum attacker actions per run.
    pub schedule_bound: usize,
    pub seeds: Vec<u64>,
    /// Enumerate every schedule; otherwise take random walks per seed.
    pub systematic: bool,
    pub walks_per_seed: usize,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            scenario: Scenario::Full,
            mode: Mode::Adversarial,
            mutations: Mutations::new(),
            sessions: 2,
            depth_bound: 2,
            schedule_bound: 3,
            seeds: Vec::new(),
            systematic: true,
            walks_per_seed: 64,
        }
    }
}

impl ExplorationConfig {
    pub fn honest(scenario: Scenario) -> Self {
        ExplorationConfig { scenario, mode: Mode::Honest, ..Default::default() }
    }

    /// Stable one-line rendering; the digest is taken over this.
    pub fn canonical(&self) -> String {
        let muts: Vec<&str> = self.mutations.iter().map(|m| m.as_str()).collect();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        format!(
            "scenario={} mode={} mutations={} sessions={} depth={} schedule={} seeds={} systematic={} walks={}",
            self.scenario,
            self.mode.as_str(),
            if muts.is_empty() { "none".to_string() } else { muts.join(",") },
            self.sessions,
            self.depth_bound,
            self.schedule_bound,
            if seeds.is_empty() { "none".to_string() } else { seeds.join(",") },
            self.systematic,
            self.walks_per_seed,
        )
    }

    pub fn parse_canonical(s: &str) -> Result<Self, String> {
        let mut cfg = ExplorationConfig::default();
        for field in s.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| format!("bad config field `{field}`"))?;
            let num = |v: &str| v.parse::<usize>().map_err(|e| format!("{k}: {e}"));
            match k {
                "scenario" => cfg.scenario = v.parse()?,
                "mode" => cfg.mode = v.parse()?,
                "mutations" if v == "none" => cfg.mutations.clear(),
                "mutations" => cfg.mutations = v.split(',').map(str::parse).collect::<Result<_, _>>()?,
                "sessions" => cfg.sessions = num(v)?,
                "depth" => cfg.depth_bound = num(v)?,
                "schedule" => cfg.schedule_bound = num(v)?,
                "seeds" if v == "none" => cfg.seeds.clear(),
                "seeds" => {
                    cfg.seeds = v.split(',').map(|x| x.parse::<u64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?
                }
                "systematic" => cfg.systematic = v == "true",
                "walks" => cfg.walks_per_seed = num(v)?,
                _ => return Err(format!("unknown config field `{k}`")),
            }
        }
        Ok(cfg)
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn signature(&self) -> Signature {
        if self.mutations.contains(&Mutation::AllowZkpForge) {
            Signature::standard().with_zk_forging()
        } else {
            Signature::standard()
        }
    }

    pub fn worlds(&self) -> Vec<WorldSpec> {
        match self.mode {
            Mode::Honest => vec![WorldSpec { protocols: self.scenario.protocols(), sessions: 1, rogue: None }],
            Mode::Adversarial => {
                let mut out = Vec::new();
                for p in self.scenario.protocols() {
                    out.push(WorldSpec { protocols: vec![p], sessions: self.sessions, rogue: None });
                    for r in p.roles().iter().filter(|r| !r.is_relay() && **r != RoleId::Leader) {
                        out.push(WorldSpec { protocols: vec![p], sessions: self.sessions.max(1), rogue: Some(*r) });
                    }
                }
                out
            }
        }
    }
}

/// One family of runs: the protocols instantiated, how many sessions, and
/// optionally a role whose session-0 instance is played by the attacker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldSpec {
    pub protocols: Vec<Protocol>,
    pub sessions: usize,
    pub rogue: Option<RoleId>,
}

impl WorldSpec {
    pub fn id(&self) -> String {
        let ps: Vec<&str> = self
            .protocols
            .iter()
            .map(|p| match p {
                Protocol::Commissioner => "commissioner",
                Protocol::Joiner => "joiner",
            })
            .collect();
        let rogue = self.rogue.map(|r| format!("rogue-{r}")).unwrap_or_else(|| "honest".into());
        format!("{}/{}x{}", ps.join("+"), rogue, self.sessions)
    }

    pub fn parse_id(s: &str) -> Result<Self, String> {
        let (ps, rest) = s.split_once('/').ok_or_else(|| format!("bad world `{s}`"))?;
        let (kind, n) = rest.split_once('x').ok_or_else(|| format!("bad world `{s}`"))?;
        let protocols = ps
            .split('+')
            .map(|p| match p {
                "commissioner" => Ok(Protocol::Commissioner),
                "joiner" => Ok(Protocol::Joiner),
                _ => Err(format!("bad protocol `{p}`")),
            })
            .collect::<Result<_, _>>()?;
        let rogue = match kind.strip_prefix("rogue-") {
            Some(r) => Some(r.parse()?),
            None if kind == "honest" => None,
            None => return Err(format!("bad world kind `{kind}`")),
        };
        Ok(WorldSpec { protocols, sessions: n.parse().map_err(|_| format!("bad session count `{n}`"))?, rogue })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choice {
    Inject { to: (RoleId, usize), payload: Term },
    Drop,
}

/// An attacker decision taken at the `ordinal`-th decision point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub ordinal: usize,
    pub choice: Choice,
}

pub type Schedule = Vec<Decision>;

/// Where the attacker could act: a pending delivery, or a stuck run
/// (`delivery` is `None`) where any waiting role may be fed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionPoint {
    pub ordinal: usize,
    /// Number of steps taken before the point.
    pub step: usize,
    pub delivery: Option<((RoleId, usize), MessageKind)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Send { from: (RoleId, usize), env: Envelope },
    Deliver { to: (RoleId, usize), kind: MessageKind },
    Attack(AttackerAction),
    Event { at: (RoleId, usize), event: Event },
    Publish(Term),
    Reject { at: (RoleId, usize), reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Rejected { role: RoleId, session: usize, reason: String },
    Exhausted,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Completed => f.write_str("Completed"),
            Outcome::Rejected { role, session, reason } => write!(f, "Rejected({role}@{session}: {reason})"),
            Outcome::Exhausted => f.write_str("Exhausted"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub world: WorldSpec,
    pub schedule: Schedule,
    pub points: Vec<DecisionPoint>,
    pub steps: Vec<Step>,
    pub final_kb: KnowledgeBase,
    pub outcome: Outcome,
    /// Honest names by label, the targets of secrecy queries.
    pub secrets: Arc<BTreeMap<String, Vec<Term>>>,
}

impl Trace {
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.steps.iter().filter_map(|s| match s {
            Step::Event { event, .. } => Some(event),
            _ => None,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("injected payload is not derivable: {0}")]
    UnderivableInjection(String),
    #[error("decision {0} does not fit the run")]
    BadDecision(usize),
    #[error("world setup: {0}")]
    Setup(String),
}

/// Immutable per-world context shared by every branch.
#[derive(Debug)]
struct WorldCtx {
    spec: WorldSpec,
    schedule_bound: usize,
    depth_bound: usize,
    own: Vec<Term>,
    secrets: Arc<BTreeMap<String, Vec<Term>>>,
}

#[derive(Debug, Clone)]
struct Inst {
    role: RoleId,
    session: usize,
    rogue: bool,
    state: RoleState,
}

#[derive(Debug, Clone)]
struct Sent {
    session: usize,
    to: RoleId,
    env: Envelope,
    consumed: bool,
    step: usize,
}

#[derive(Debug, Clone)]
struct Sim {
    ctx: Arc<WorldCtx>,
    insts: Vec<Inst>,
    sent: Vec<Sent>,
    kb: KnowledgeBase,
    steps: Vec<Step>,
    attacks: usize,
    ordinal: usize,
    points: Vec<DecisionPoint>,
    rejected: Option<(RoleId, usize, String)>,
}

enum Next {
    Start(usize),
    Deliver { inst: usize, sent: usize, point: bool },
    Stuck,
}

fn role_rank(r: RoleId) -> usize {
    RoleId::ALL.iter().position(|x| *x == r).unwrap_or(0)
}

impl Sim {
    fn build(spec: &WorldSpec, cfg: &ExplorationConfig) -> Result<Sim, HarnessError> {
        let mut names = NameCtx::new();
        let mut cat = NameCatalog::new(&mut names);
        let opts = ModelOptions::from_mutations(&cfg.mutations);
        let own: Vec<Term> = cat.attacker.clone();
        let mut insts = Vec::new();
        for p in &spec.protocols {
            for s in 0..spec.sessions {
                let idx = cat.add_session(&mut names, false);
                for r in p.roles() {
                    let rogue = spec.rogue == Some(*r) && s == 0;
                    let creds = if rogue {
                        rogue_credentials(*r, &mut names, &mut cat)
                    } else {
                        honest_credentials(*r, &cat, idx)
                    };
                    let state = init_role(*r, &creds, s, opts, rogue).map_err(|e| HarnessError::Setup(e.to_string()))?;
                    insts.push(Inst { role: *r, session: s, rogue, state });
                }
            }
        }
        let mut secrets: BTreeMap<String, Vec<Term>> = BTreeMap::new();
        for t in &cat.honest {
            if let Some(l) = t.label() {
                secrets.entry(l.to_string()).or_default().push(t.clone());
            }
        }
        let initial = PUBLIC_CONSTANTS.iter().map(|(l, s)| Term::constant(l, *s)).chain(cat.attacker.iter().cloned());
        let kb = KnowledgeBase::new(cfg.signature(), initial);
        let ctx = WorldCtx {
            spec: spec.clone(),
            schedule_bound: if cfg.mode == Mode::Honest { 0 } else { cfg.schedule_bound },
            depth_bound: cfg.depth_bound,
            own,
            secrets: Arc::new(secrets),
        };
        Ok(Sim { ctx: Arc::new(ctx), insts, sent: Vec::new(), kb, steps: Vec::new(), attacks: 0, ordinal: 0, points: Vec::new(), rejected: None })
    }

    fn at(&self, i: usize) -> (RoleId, usize) {
        (self.insts[i].role, self.insts[i].session)
    }

    fn next(&self) -> Next {
        let mut best: Option<((u8, usize, usize), Next)> = None;
        for (i, inst) in self.insts.iter().enumerate() {
            let cand = match inst.state.phase {
                Phase::Start => Some(((0, inst.session, role_rank(inst.role)), Next::Start(i))),
                Phase::Await(k) => self
                    .sent
                    .iter()
                    .position(|s| !s.consumed && s.session == inst.session && s.to == inst.role && s.env.kind == k)
                    .map(|si| {
                        let point = !inst.role.is_relay() || k == MessageKind::j(23);
                        ((k.n, inst.session, role_rank(inst.role)), Next::Deliver { inst: i, sent: si, point })
                    }),
                _ => None,
            };
            if let Some((key, n)) = cand {
                if best.as_ref().is_none_or(|(b, _)| key < *b) {
                    best = Some((key, n));
                }
            }
        }
        best.map(|(_, n)| n).unwrap_or(Next::Stuck)
    }

    /// Opens the next decision point; `inst` is the pending receiver, if any.
    fn point(&mut self, inst: Option<usize>) -> usize {
        let ordinal = self.ordinal;
        self.ordinal += 1;
        let delivery = inst.and_then(|i| match self.insts[i].state.phase {
            Phase::Await(k) => Some((self.at(i), k)),
            _ => None,
        });
        self.points.push(DecisionPoint { ordinal, step: self.steps.len(), delivery });
        ordinal
    }

    fn push_step(&mut self, s: Step) -> usize {
        self.steps.push(s);
        self.steps.len() - 1
    }

    fn start(&mut self, i: usize) {
        self.run(i, Input::Start);
    }

    fn deliver_honest(&mut self, i: usize, si: usize) {
        self.sent[si].consumed = true;
        let env = self.sent[si].env.clone();
        self.run(i, Input::Message(env));
    }

    fn substitute(&mut self, i: usize, si: Option<usize>, payload: Term) {
        let kind = match self.insts[i].state.phase {
            Phase::Await(k) => k,
            _ => return,
        };
        if let Some(si) = si {
            self.sent[si].consumed = true;
            let env = self.sent[si].env.clone();
            self.push_step(Step::Attack(AttackerAction::Intercept(env)));
        }
        let to = self.at(i);
        let replayed = self.sent.iter().find(|s| s.env.kind == kind && s.env.payload == payload).map(|s| s.step);
        let env = Envelope::new(kind, payload);
        let action = match replayed {
            Some(index) => AttackerAction::Replay { to, index },
            None => AttackerAction::Inject { to, channel: env.channel, kind, payload: env.payload.clone() },
        };
        self.push_step(Step::Attack(action));
        self.attacks += 1;
        self.run(i, Input::Message(env));
    }

    fn drop_pending(&mut self, si: usize) {
        self.sent[si].consumed = true;
        let env = self.sent[si].env.clone();
        self.push_step(Step::Attack(AttackerAction::Drop(env)));
        self.attacks += 1;
    }

    fn run(&mut self, i: usize, input: Input) {
        let at = self.at(i);
        if let Input::Message(env) = &input {
            self.push_step(Step::Deliver { to: at, kind: env.kind });
        }
        match role_step(&self.insts[i].state, &input) {
            Ok((state, out)) => {
                self.insts[i].state = state;
                for mut ev in out.events {
                    ev.pos = self.steps.len();
                    self.push_step(Step::Event { at, event: ev });
                }
                for m in out.published {
                    self.kb.observe(&m);
                    self.push_step(Step::Publish(m));
                }
                let rogue = self.insts[i].rogue;
                for env in out.outgoing {
                    let to = env.kind.info().to;
                    if rogue {
                        if self.attacks < self.ctx.schedule_bound && self.kb.can_derive(&env.payload) {
                            self.attacks += 1;
                            let action = AttackerAction::Inject {
                                to: (to, at.1),
                                channel: env.channel,
                                kind: env.kind,
                                payload: env.payload.clone(),
                            };
                            let step = self.push_step(Step::Attack(action));
                            self.sent.push(Sent { session: at.1, to, env, consumed: false, step });
                        } else {
                            self.push_step(Step::Attack(AttackerAction::Drop(env)));
                        }
                    } else {
                        self.kb.observe(&env.payload);
                        let step = self.push_step(Step::Send { from: at, env: env.clone() });
                        self.sent.push(Sent { session: at.1, to, env, consumed: false, step });
                    }
                }
            }
            Err(rej) => {
                self.insts[i].state.phase = Phase::Halted;
                self.push_step(Step::Reject { at, reason: rej.reason.clone() });
                self.rejected.get_or_insert((at.0, at.1, rej.reason));
            }
        }
    }

    /// Payloads the attacker may deliver to instance `i` instead of the
    /// pending one, restricted to those the receiver accepts.
    fn candidates(&self, i: usize, pending: Option<usize>) -> Vec<Term> {
        if self.ctx.spec.rogue.is_some() || self.attacks >= self.ctx.schedule_bound {
            return Vec::new();
        }
        let Phase::Await(kind) = self.insts[i].state.phase else { return Vec::new() };
        let honest = pending.map(|si| &self.sent[si].env.payload);
        let mut observed: Vec<Term> = Vec::new();
        for s in self.sent.iter().filter(|s| s.env.kind == kind) {
            if !observed.contains(&s.env.payload) {
                observed.push(s.env.payload.clone());
            }
        }
        forge_candidates(&self.kb, &observed, &self.ctx.own, self.ctx.depth_bound)
            .into_iter()
            .filter(|c| Some(c) != honest)
            .filter(|c| role_step(&self.insts[i].state, &Input::Message(Envelope::new(kind, c.clone()))).is_ok())
            .collect()
    }

    fn waiting(&self) -> Vec<usize> {
        (0..self.insts.len()).filter(|i| matches!(self.insts[*i].state.phase, Phase::Await(_))).collect()
    }

    fn finish(self, schedule: Schedule) -> Trace {
        let outcome = match self.rejected {
            Some((role, session, reason)) => Outcome::Rejected { role, session, reason },
            None if self.insts.iter().all(|i| i.state.phase == Phase::Done) => Outcome::Completed,
            None => Outcome::Exhausted,
        };
        Trace {
            world: self.ctx.spec.clone(),
            schedule,
            points: self.points,
            steps: self.steps,
            final_kb: self.kb,
            outcome,
            secrets: self.ctx.secrets.clone(),
        }
    }
}

fn credential_source(label: &str) -> (&str, bool) {
    match label.strip_suffix("_h") {
        Some(base) => (base, true),
        None => (label, false),
    }
}

fn honest_credentials(role: RoleId, cat: &NameCatalog, session: usize) -> BTreeMap<String, Term> {
    role.credentials()
        .iter()
        .map(|label| {
            let (base, hashed) = credential_source(label);
            let t = if SESSION_NAMES.iter().any(|(l, _)| *l == base) {
                cat.sessions[session][base].clone()
            } else {
                cat.free(base)
            };
            ((*label).to_string(), if hashed { masked(&t) } else { t })
        })
        .collect()
}

/// A rogue device holds attacker-owned material in every credential slot.
fn rogue_credentials(role: RoleId, names: &mut NameCtx, cat: &mut NameCatalog) -> BTreeMap<String, Term> {
    role.credentials()
        .iter()
        .map(|label| {
            let (base, hashed) = credential_source(label);
            let sort = label_sort(base).expect("credential labels are cataloged");
            let t = names.make_name(base, sort);
            cat.attacker.push(t.clone());
            ((*label).to_string(), if hashed { masked(&t) } else { t })
        })
        .collect()
}

/// Executes one schedule in one world. Deterministic in its inputs.
pub fn run_schedule(cfg: &ExplorationConfig, world: &WorldSpec, schedule: &[Decision]) -> Result<Trace, HarnessError> {
    let mut sim = Sim::build(world, cfg)?;
    let decision = |ord: usize| schedule.iter().find(|d| d.ordinal == ord);
    loop {
        match sim.next() {
            Next::Start(i) => sim.start(i),
            Next::Deliver { inst, sent, point: false } => sim.deliver_honest(inst, sent),
            Next::Deliver { inst, sent, point: true } => {
                let ord = sim.point(Some(inst));
                match decision(ord).map(|d| &d.choice) {
                    None => sim.deliver_honest(inst, sent),
                    Some(Choice::Drop) => sim.drop_pending(sent),
                    Some(Choice::Inject { to, payload }) => {
                        if *to != sim.at(inst) {
                            return Err(HarnessError::BadDecision(ord));
                        }
                        if !sim.kb.can_derive(payload) {
                            return Err(HarnessError::UnderivableInjection(payload.to_string()));
                        }
                        sim.substitute(inst, Some(sent), payload.clone());
                    }
                }
            }
            Next::Stuck => {
                let ord = sim.point(None);
                match decision(ord).map(|d| &d.choice) {
                    None => return Ok(sim.finish(schedule.to_vec())),
                    Some(Choice::Drop) => return Err(HarnessError::BadDecision(ord)),
                    Some(Choice::Inject { to, payload }) => {
                        let i = sim.waiting().into_iter().find(|i| sim.at(*i) == *to).ok_or(HarnessError::BadDecision(ord))?;
                        if !sim.kb.can_derive(payload) {
                            return Err(HarnessError::UnderivableInjection(payload.to_string()));
                        }
                        sim.substitute(i, None, payload.clone());
                    }
                }
            }
        }
    }
}

/// Counts reported after an exploration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExploreStats {
    pub worlds: usize,
    pub traces: usize,
    pub branch_points: usize,
    pub completed: usize,
    pub rejected: usize,
    pub exhausted: usize,
}

impl ExploreStats {
    fn record(&mut self, t: &Trace) {
        self.traces += 1;
        match t.outcome {
            Outcome::Completed => self.completed += 1,
            Outcome::Rejected { .. } => self.rejected += 1,
            Outcome::Exhausted => self.exhausted += 1,
        }
    }

    pub fn absorb(&mut self, o: &ExploreStats) {
        self.worlds += o.worlds;
        self.traces += o.traces;
        self.branch_points += o.branch_points;
        self.completed += o.completed;
        self.rejected += o.rejected;
        self.exhausted += o.exhausted;
    }
}

/// Visits every trace of every world allowed by `cfg`.
pub fn explore(cfg: &ExplorationConfig, visit: &mut dyn FnMut(&Trace)) -> Result<ExploreStats, HarnessError> {
    let mut stats = ExploreStats::default();
    for world in cfg.worlds() {
        stats.absorb(&explore_world(cfg, &world, visit)?);
    }
    Ok(stats)
}

/// Visits the traces of a single world.
pub fn explore_world(
    cfg: &ExplorationConfig,
    world: &WorldSpec,
    visit: &mut dyn FnMut(&Trace),
) -> Result<ExploreStats, HarnessError> {
    let mut stats = ExploreStats { worlds: 1, ..Default::default() };
    let sim = Sim::build(world, cfg)?;
    if cfg.systematic || cfg.seeds.is_empty() {
        dfs(sim, Vec::new(), &mut stats, visit);
    } else {
        for seed in &cfg.seeds {
            for walk in 0..cfg.walks_per_seed {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(walk as u64));
                random_walk(sim.clone(), &mut rng, &mut stats, visit);
            }
        }
    }
    Ok(stats)
}

/// Every (world, schedule) pair `explore` would run, in exploration order.
pub fn enumerate_schedules(cfg: &ExplorationConfig) -> Result<Vec<(WorldSpec, Schedule)>, HarnessError> {
    let mut out = Vec::new();
    explore(cfg, &mut |t| out.push((t.world.clone(), t.schedule.clone())))?;
    Ok(out)
}

fn dfs(mut sim: Sim, schedule: Schedule, stats: &mut ExploreStats, visit: &mut dyn FnMut(&Trace)) {
    loop {
        match sim.next() {
            Next::Start(i) => sim.start(i),
            Next::Deliver { inst, sent, point: false } => sim.deliver_honest(inst, sent),
            Next::Deliver { inst, sent, point: true } => {
                let ord = sim.point(Some(inst));
                let to = sim.at(inst);
                for c in sim.candidates(inst, Some(sent)) {
                    stats.branch_points += 1;
                    let mut child = sim.clone();
                    child.substitute(inst, Some(sent), c.clone());
                    let mut s = schedule.clone();
                    s.push(Decision { ordinal: ord, choice: Choice::Inject { to, payload: c } });
                    dfs(child, s, stats, visit);
                }
                sim.deliver_honest(inst, sent);
            }
            Next::Stuck => {
                let ord = sim.point(None);
                for i in sim.waiting() {
                    let to = sim.at(i);
                    for c in sim.candidates(i, None) {
                        stats.branch_points += 1;
                        let mut child = sim.clone();
                        child.substitute(i, None, c.clone());
                        let mut s = schedule.clone();
                        s.push(Decision { ordinal: ord, choice: Choice::Inject { to, payload: c } });
                        dfs(child, s, stats, visit);
                    }
                }
                let t = sim.finish(schedule);
                stats.record(&t);
                visit(&t);
                return;
            }
        }
    }
}

fn random_walk(mut sim: Sim, rng: &mut ChaCha8Rng, stats: &mut ExploreStats, visit: &mut dyn FnMut(&Trace)) {
    let mut schedule = Vec::new();
    loop {
        match sim.next() {
            Next::Start(i) => sim.start(i),
            Next::Deliver { inst, sent, point: false } => sim.deliver_honest(inst, sent),
            Next::Deliver { inst, sent, point: true } => {
                let ord = sim.point(Some(inst));
                let cands = sim.candidates(inst, Some(sent));
                // honest delivery keeps half the mass so walks still complete
                if cands.is_empty() || rng.random_bool(0.5) {
                    sim.deliver_honest(inst, sent);
                } else {
                    let c = cands[rng.random_range(0..cands.len())].clone();
                    schedule.push(Decision { ordinal: ord, choice: Choice::Inject { to: sim.at(inst), payload: c.clone() } });
                    sim.substitute(inst, Some(sent), c);
                }
            }
            Next::Stuck => {
                let ord = sim.point(None);
                let opts: Vec<(usize, Term)> =
                    sim.waiting().into_iter().flat_map(|i| sim.candidates(i, None).into_iter().map(move |c| (i, c))).collect();
                if opts.is_empty() || rng.random_bool(0.5) {
                    let t = sim.finish(schedule);
                    stats.record(&t);
                    visit(&t);
                    return;
                }
                let (i, c) = opts[rng.random_range(0..opts.len())].clone();
                schedule.push(Decision { ordinal: ord, choice: Choice::Inject { to: sim.at(i), payload: c.clone() } });
                sim.substitute(i, None, c);
            }
        }
    }
}

/// The honest run of a scenario: one session of each protocol, no attacker.
pub fn honest_run(scenario: Scenario) -> Trace {
    let cfg = ExplorationConfig::honest(scenario);
    let world = cfg.worlds().remove(0);
    run_schedule(&cfg, &world, &[]).expect("the honest schedule is empty and always fits")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roles::EventTag;
    use std::collections::BTreeSet;

    #[test]
    fn honest_full_run_completes_with_every_event() {
        let t = honest_run(Scenario::Full);
        assert_eq!(t.outcome, Outcome::Completed, "{:?}", t.steps.last());
        let tags: BTreeSet<EventTag> = t.events().map(|e| e.tag).collect();
        for tag in EventTag::NAMED {
            assert!(tags.contains(&tag), "missing {tag}");
        }
        let kinds: Vec<MessageKind> = t
            .steps
            .iter()
            .filter_map(|s| match s {
                Step::Send { env, .. } => Some(env.kind),
                _ => None,
            })
            .collect();
        assert_eq!(kinds.len(), 38);
        assert_eq!(kinds.iter().collect::<BTreeSet<_>>().len(), 38);
    }

    #[test]
    fn session_keys_agree_in_honest_runs() {
        let t = honest_run(Scenario::Full);
        let arg = |tag: EventTag| t.events().find(|e| e.tag == tag).unwrap().args.clone();
        assert_eq!(arg(EventTag::Bsrvssk), arg(EventTag::Cclissk));
        assert_eq!(arg(EventTag::Csrvssk), arg(EventTag::Joinerssk));
        assert_eq!(arg(EventTag::Eventdskjnr), arg(EventTag::Eventdskcmm));
    }

    #[test]
    fn honest_run_keeps_secrets() {
        let t = honest_run(Scenario::Full);
        for (label, terms) in t.secrets.iter() {
            let public_by_design = ["cr", "sr", "crj", "srj", "joinerip", "clid", "srid", "jnid", "cr1"];
            if public_by_design.contains(&label.as_str()) || label.starts_with('x') || label.starts_with('v') {
                continue;
            }
            for term in terms {
                assert!(!t.final_kb.can_derive(term), "{label} leaked");
            }
        }
    }

    #[test]
    fn config_round_trips() {
        let mut cfg = ExplorationConfig::default();
        cfg.mutations.insert(Mutation::DropNoncea);
        cfg.seeds = vec![7, 9];
        assert_eq!(ExplorationConfig::parse_canonical(&cfg.canonical()).unwrap(), cfg);
        for w in cfg.worlds() {
            assert_eq!(WorldSpec::parse_id(&w.id()).unwrap(), w);
        }
    }

    #[test]
    fn dropping_the_cookie_prevents_its_receipt() {
        let cfg = ExplorationConfig { scenario: Scenario::Commissioner, sessions: 1, ..Default::default() };
        let world = WorldSpec { protocols: vec![Protocol::Commissioner], sessions: 1, rogue: None };
        // point 0 is the delivery of C_M1, point 1 the delivery of C_M2
        let t = run_schedule(&cfg, &world, &[Decision { ordinal: 1, choice: Choice::Drop }]).unwrap();
        assert!(t.events().all(|e| e.tag != EventTag::Cclircvck));
        assert_ne!(t.outcome, Outcome::Completed);
    }
}
