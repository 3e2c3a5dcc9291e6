//! Trace files: a header that pins the configuration, world and attacker
//! decisions, then one `|`-separated record per step. Replaying a file
//! re-executes the decisions and must reproduce it byte for byte.

use thiserror::Error;

use crate::adversary::AttackerAction;
use crate::catalog::label_sort;
use crate::harness::{run_schedule, Choice, Decision, ExplorationConfig, HarnessError, Step, Trace, WorldSpec};
use crate::roles::RoleId;
use crate::syntax::parse_term;

pub const MAGIC: &str = "# meshcop-trace v1";

fn at(r: &(RoleId, usize)) -> String {
    format!("{}@{}", r.0, r.1)
}

fn parse_at(s: &str) -> Result<(RoleId, usize), DumpError> {
    let (r, n) = s.split_once('@').ok_or_else(|| DumpError::Malformed(s.to_string()))?;
    Ok((r.parse().map_err(DumpError::Malformed)?, n.parse().map_err(|_| DumpError::Malformed(s.to_string()))?))
}

pub fn render_step(index: usize, step: &Step) -> String {
    let body = match step {
        Step::Send { from, env } => format!("{}|{}|{}|{}", env.channel, env.kind, env.payload, at(from)),
        Step::Deliver { to, kind } => format!("deliver|{}|{kind}", at(to)),
        Step::Event { at: who, event } => {
            let mut s = format!("event|{}|{}", at(who), event.tag);
            for a in &event.args {
                s.push('|');
                s.push_str(&a.to_string());
            }
            s
        }
        Step::Publish(t) => format!("publish|{t}"),
        Step::Reject { at: who, reason } => format!("reject|{}|{reason}", at(who)),
        Step::Attack(a) => match a {
            AttackerAction::Intercept(e) => format!("attack|intercept|{}|{}|{}", e.channel, e.kind, e.payload),
            AttackerAction::Deliver(e) => format!("attack|deliver|{}|{}|{}", e.channel, e.kind, e.payload),
            AttackerAction::Drop(e) => format!("attack|drop|{}|{}|{}", e.channel, e.kind, e.payload),
            AttackerAction::Inject { to, channel, kind, payload } => {
                format!("attack|inject|{}|{channel}|{kind}|{payload}", at(to))
            }
            AttackerAction::Replay { to, index } => format!("attack|replay|{}|{index}", at(to)),
        },
    };
    format!("{index}|{body}")
}

fn render_decision(d: &Decision) -> String {
    match &d.choice {
        Choice::Inject { to, payload } => format!("# decision {}|inject|{}|{payload}", d.ordinal, at(to)),
        Choice::Drop => format!("# decision {}|drop", d.ordinal),
    }
}

/// Serializes a trace produced under `cfg`.
pub fn render_trace(cfg: &ExplorationConfig, trace: &Trace) -> String {
    let mut out = format!("{MAGIC} digest={}\n", cfg.digest());
    out.push_str(&format!("# config {}\n", cfg.canonical()));
    out.push_str(&format!("# world {}\n", trace.world.id()));
    for d in &trace.schedule {
        out.push_str(&render_decision(d));
        out.push('\n');
    }
    out.push_str(&format!("# outcome {}\n", trace.outcome));
    for (i, s) in trace.steps.iter().enumerate() {
        out.push_str(&render_step(i, s));
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("not a trace file")]
    BadMagic,
    #[error("config digest mismatch: header {header}, computed {computed}")]
    Digest { header: String, computed: String },
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

/// The replay-relevant header of a trace file.
#[derive(Debug, Clone)]
pub struct Header {
    pub config: ExplorationConfig,
    pub world: WorldSpec,
    pub schedule: Vec<Decision>,
}

pub fn parse_header(text: &str) -> Result<Header, DumpError> {
    let mut lines = text.lines();
    let first = lines.next().ok_or(DumpError::BadMagic)?;
    let digest = first
        .strip_prefix(MAGIC)
        .and_then(|r| r.trim().strip_prefix("digest="))
        .ok_or(DumpError::BadMagic)?
        .to_string();
    let mut config = None;
    let mut world = None;
    let mut schedule = Vec::new();
    for line in lines.take_while(|l| l.starts_with("# ")) {
        let bad = || DumpError::Malformed(line.to_string());
        if let Some(c) = line.strip_prefix("# config ") {
            config = Some(ExplorationConfig::parse_canonical(c).map_err(DumpError::Malformed)?);
        } else if let Some(w) = line.strip_prefix("# world ") {
            world = Some(WorldSpec::parse_id(w).map_err(DumpError::Malformed)?);
        } else if let Some(d) = line.strip_prefix("# decision ") {
            let mut parts = d.splitn(4, '|');
            let ordinal: usize = parts.next().and_then(|o| o.parse().ok()).ok_or_else(bad)?;
            let choice = match (parts.next(), parts.next(), parts.next()) {
                (Some("drop"), None, None) => Choice::Drop,
                (Some("inject"), Some(to), Some(p)) => Choice::Inject {
                    to: parse_at(to)?,
                    payload: parse_term(p, &label_sort).map_err(|e| DumpError::Malformed(e.to_string()))?,
                },
                _ => return Err(bad()),
            };
            schedule.push(Decision { ordinal, choice });
        }
    }
    let config = config.ok_or_else(|| DumpError::Malformed("missing config line".into()))?;
    let computed = config.digest();
    if computed != digest {
        return Err(DumpError::Digest { header: digest, computed });
    }
    let world = world.ok_or_else(|| DumpError::Malformed("missing world line".into()))?;
    Ok(Header { config, world, schedule })
}

#[derive(Debug, Clone)]
pub struct Replay {
    pub trace: Trace,
    pub rendered: String,
    /// The replayed rendering equals the input byte for byte.
    pub identical: bool,
}

pub fn replay(text: &str) -> Result<Replay, DumpError> {
    let h = parse_header(text)?;
    let trace = run_schedule(&h.config, &h.world, &h.schedule)?;
    let rendered = render_trace(&h.config, &trace);
    Ok(Replay { identical: rendered == text, trace, rendered })
}
