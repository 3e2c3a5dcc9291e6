//! The seven MeshCoP role state machines and their message catalog.

mod machine;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ModelOptions;
use crate::term::Term;

pub use machine::role_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoleId {
    Ccli,
    Bsrv,
    Leader,
    Joiner,
    JrtRelay,
    BrtRelay,
    Csrv,
}

impl RoleId {
    pub const ALL: [RoleId; 7] =
        [RoleId::Ccli, RoleId::Bsrv, RoleId::Leader, RoleId::Joiner, RoleId::JrtRelay, RoleId::BrtRelay, RoleId::Csrv];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleId::Ccli => "CCLI",
            RoleId::Bsrv => "BSRV",
            RoleId::Leader => "LEADER",
            RoleId::Csrv => "CSRV",
            RoleId::Joiner => "JOINER",
            RoleId::JrtRelay => "JRT_RELAY",
            RoleId::BrtRelay => "BRT_RELAY",
        }
    }

    pub fn is_relay(self) -> bool {
        matches!(self, RoleId::JrtRelay | RoleId::BrtRelay)
    }

    pub fn protocol(self) -> Protocol {
        match self {
            RoleId::Ccli | RoleId::Bsrv | RoleId::Leader => Protocol::Commissioner,
            _ => Protocol::Joiner,
        }
    }

    /// Credential labels the role must be initialized with.
    pub fn credentials(self) -> &'static [&'static str] {
        match self {
            RoleId::Ccli => &[
                "sspcommissioner", "clid", "srid_h", "cr", "cr1", "x1", "x2", "v1", "v2", "v5", "commpetreq",
                "commkareq", "secretpskc", "secretsskc",
            ],
            RoleId::Bsrv => &[
                "sspcommissioner", "secretborderandleader", "srid", "sr", "noncea", "x3", "x4", "v3", "v4", "v6",
                "commpetreq", "commpetres", "commkareq", "commkares", "leadpetreq", "leadkareq",
            ],
            RoleId::Leader => {
                &["secretborderandleader", "srid", "comm_session", "leadpetreq", "leadpetres", "leadkareq", "leadkares", "Granted"]
            }
            RoleId::Joiner => &[
                "sspjoiner", "jnid", "clid_h", "crj", "joinerip", "xj1", "xj2", "vj1", "vj2", "vj5", "kek",
                "join_fin_req", "secretdskj", "secretsskj", "sspjoiner_sec",
            ],
            RoleId::JrtRelay => &["scrtjtrcm"],
            RoleId::BrtRelay => &[],
            RoleId::Csrv => &[
                "sspjoiner", "scrtjtrcm", "clid", "srj", "xj3", "xj4", "vj3", "vj4", "vj6", "netcreds", "kek",
                "join_fin_req", "join_fin_rsp",
            ],
        }
    }
}

impl fmt::Display for RoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoleId::ALL.iter().copied().find(|r| r.as_str() == s).ok_or_else(|| format!("unknown role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Protocol {
    Commissioner,
    Joiner,
}

impl Protocol {
    pub fn roles(self) -> &'static [RoleId] {
        match self {
            Protocol::Commissioner => &[RoleId::Ccli, RoleId::Bsrv, RoleId::Leader],
            Protocol::Joiner => &[RoleId::Joiner, RoleId::JrtRelay, RoleId::BrtRelay, RoleId::Csrv],
        }
    }

    pub fn initiator(self) -> RoleId {
        match self {
            Protocol::Commissioner => RoleId::Ccli,
            Protocol::Joiner => RoleId::Joiner,
        }
    }

    pub fn kinds(self) -> impl Iterator<Item = MessageKind> {
        let (flow, n) = match self {
            Protocol::Commissioner => (Flow::C, 14),
            Protocol::Joiner => (Flow::J, 24),
        };
        (1..=n).map(move |i| MessageKind { flow, n: i })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelId {
    Ch,
    ChBtoC,
    ChBtoL,
    ChJtoC,
    ChRtoB,
}

impl ChannelId {
    pub const ALL: [ChannelId; 5] = [ChannelId::Ch, ChannelId::ChBtoC, ChannelId::ChBtoL, ChannelId::ChJtoC, ChannelId::ChRtoB];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelId::Ch => "ch",
            ChannelId::ChBtoC => "chbtoc",
            ChannelId::ChBtoL => "chBtoL",
            ChannelId::ChJtoC => "chjtoc",
            ChannelId::ChRtoB => "chrtob",
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChannelId::ALL.iter().copied().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown channel `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flow {
    C,
    J,
}

/// `C_M1`..`C_M14` and `J_M1`..`J_M24`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageKind {
    pub flow: Flow,
    pub n: u8,
}

pub struct KindInfo {
    pub name: &'static str,
    pub from: RoleId,
    pub to: RoleId,
    pub channel: ChannelId,
}

use ChannelId::*;
use RoleId::*;

const C_TABLE: [KindInfo; 14] = [
    KindInfo { name: "ClientHello", from: Ccli, to: Bsrv, channel: Ch },
    KindInfo { name: "HelloVerifyReq", from: Bsrv, to: Ccli, channel: Ch },
    KindInfo { name: "ClientHelloWithCookie", from: Ccli, to: Bsrv, channel: Ch },
    KindInfo { name: "ServerHello_SKE_SHD", from: Bsrv, to: Ccli, channel: Ch },
    KindInfo { name: "CKE_CCS_Fin", from: Ccli, to: Bsrv, channel: Ch },
    KindInfo { name: "CCS_Fin", from: Bsrv, to: Ccli, channel: Ch },
    KindInfo { name: "CommPetReq", from: Ccli, to: Bsrv, channel: Ch },
    KindInfo { name: "LeadPetReq", from: Bsrv, to: Leader, channel: ChBtoL },
    KindInfo { name: "LeadPetRsp", from: Leader, to: Bsrv, channel: ChBtoL },
    KindInfo { name: "CommPetRsp", from: Bsrv, to: Ccli, channel: Ch },
    KindInfo { name: "CommKaReq", from: Ccli, to: Bsrv, channel: Ch },
    KindInfo { name: "LeadKaReq", from: Bsrv, to: Leader, channel: ChBtoL },
    KindInfo { name: "LeadKaRsp", from: Leader, to: Bsrv, channel: ChBtoL },
    KindInfo { name: "CommKaRsp", from: Bsrv, to: Ccli, channel: Ch },
];

const J_TABLE: [KindInfo; 24] = [
    KindInfo { name: "ClientHello", from: Joiner, to: JrtRelay, channel: ChJtoC },
    KindInfo { name: "ClientHello_Relay", from: JrtRelay, to: BrtRelay, channel: ChRtoB },
    KindInfo { name: "ClientHello_Relay", from: BrtRelay, to: Csrv, channel: ChBtoC },
    KindInfo { name: "HelloVerifyReq", from: Csrv, to: BrtRelay, channel: ChBtoC },
    KindInfo { name: "HelloVerifyReq_Relay", from: BrtRelay, to: JrtRelay, channel: ChRtoB },
    KindInfo { name: "HelloVerifyReq_Relay", from: JrtRelay, to: Joiner, channel: ChJtoC },
    KindInfo { name: "ClientHelloWithCookie", from: Joiner, to: JrtRelay, channel: ChJtoC },
    KindInfo { name: "ClientHelloWithCookie_Relay", from: JrtRelay, to: BrtRelay, channel: ChRtoB },
    KindInfo { name: "ClientHelloWithCookie_Relay", from: BrtRelay, to: Csrv, channel: ChBtoC },
    KindInfo { name: "ServerHello_SKE_SHD", from: Csrv, to: BrtRelay, channel: ChBtoC },
    KindInfo { name: "ServerHello_SKE_SHD_Relay", from: BrtRelay, to: JrtRelay, channel: ChRtoB },
    KindInfo { name: "ServerHello_SKE_SHD_Relay", from: JrtRelay, to: Joiner, channel: ChJtoC },
    KindInfo { name: "CKE_CCS_Fin", from: Joiner, to: JrtRelay, channel: ChJtoC },
    KindInfo { name: "CKE_CCS_Fin_Relay", from: JrtRelay, to: BrtRelay, channel: ChRtoB },
    KindInfo { name: "CKE_CCS_Fin_Relay", from: BrtRelay, to: Csrv, channel: ChBtoC },
    KindInfo { name: "CCS_Fin", from: Csrv, to: BrtRelay, channel: ChBtoC },
    KindInfo { name: "CCS_Fin_Relay", from: BrtRelay, to: JrtRelay, channel: ChRtoB },
    KindInfo { name: "CCS_Fin_Relay", from: JrtRelay, to: Joiner, channel: ChJtoC },
    KindInfo { name: "JoinFinReq", from: Joiner, to: JrtRelay, channel: ChJtoC },
    KindInfo { name: "JoinFinReq_Relay", from: JrtRelay, to: BrtRelay, channel: ChRtoB },
    KindInfo { name: "JoinFinReq_Relay", from: BrtRelay, to: Csrv, channel: ChBtoC },
    KindInfo { name: "JoinFinRsp", from: Csrv, to: BrtRelay, channel: ChBtoC },
    KindInfo { name: "JoinFinRsp_Relay", from: BrtRelay, to: JrtRelay, channel: ChRtoB },
    KindInfo { name: "JoinerEntrust", from: JrtRelay, to: Joiner, channel: ChJtoC },
];

impl MessageKind {
    pub const fn c(n: u8) -> Self {
        MessageKind { flow: Flow::C, n }
    }

    pub const fn j(n: u8) -> Self {
        MessageKind { flow: Flow::J, n }
    }

    pub fn all() -> impl Iterator<Item = MessageKind> {
        Protocol::Commissioner.kinds().chain(Protocol::Joiner.kinds())
    }

    pub fn info(self) -> &'static KindInfo {
        let i = usize::from(self.n) - 1;
        match self.flow {
            Flow::C => &C_TABLE[i],
            Flow::J => &J_TABLE[i],
        }
    }

    pub fn channel(self) -> ChannelId {
        self.info().channel
    }

    pub fn protocol(self) -> Protocol {
        match self.flow {
            Flow::C => Protocol::Commissioner,
            Flow::J => Protocol::Joiner,
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.flow {
            Flow::C => 'C',
            Flow::J => 'J',
        };
        write!(f, "{p}_M{}_{}", self.n, self.info().name)
    }
}

impl FromStr for MessageKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MessageKind::all().find(|k| k.to_string() == s).ok_or_else(|| format!("unknown message kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Envelope {
    pub channel: ChannelId,
    pub kind: MessageKind,
    pub payload: Term,
}

impl Envelope {
    pub fn new(kind: MessageKind, payload: Term) -> Self {
        Envelope { channel: kind.channel(), kind, payload }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventTag {
    Joinerrcvck,
    Cclircvck,
    Bsrvsntck,
    Csrvsntck,
    Bsrvssk,
    Cclissk,
    Csrvssk,
    Joinerssk,
    Bsrvbeg,
    Bsrvfin,
    Cclibeg,
    Cclifin,
    Csrvbeg,
    Csrvfin,
    Joinerbeg,
    Joinerfin,
    Eventdskjnr,
    Eventdskcmm,
    Rcvcommrsp,
    Rcvcommkarsp,
    Sntcommrsp,
    Sntcommkarsp,
    Leaderrep,
    Leaderrepka,
    Joinergtsnetcreds,
    Evjrtrsendsnetcreds,
    MsgSent(MessageKind),
    MsgRcvd(MessageKind),
}

impl EventTag {
    pub const NAMED: [EventTag; 26] = [
        EventTag::Joinerrcvck,
        EventTag::Cclircvck,
        EventTag::Bsrvsntck,
        EventTag::Csrvsntck,
        EventTag::Bsrvssk,
        EventTag::Cclissk,
        EventTag::Csrvssk,
        EventTag::Joinerssk,
        EventTag::Bsrvbeg,
        EventTag::Bsrvfin,
        EventTag::Cclibeg,
        EventTag::Cclifin,
        EventTag::Csrvbeg,
        EventTag::Csrvfin,
        EventTag::Joinerbeg,
        EventTag::Joinerfin,
        EventTag::Eventdskjnr,
        EventTag::Eventdskcmm,
        EventTag::Rcvcommrsp,
        EventTag::Rcvcommkarsp,
        EventTag::Sntcommrsp,
        EventTag::Sntcommkarsp,
        EventTag::Leaderrep,
        EventTag::Leaderrepka,
        EventTag::Joinergtsnetcreds,
        EventTag::Evjrtrsendsnetcreds,
    ];

    pub fn name(self) -> String {
        match self {
            EventTag::MsgSent(k) => format!("msg_sent[{k}]"),
            EventTag::MsgRcvd(k) => format!("msg_rcvd[{k}]"),
            named => format!("{named:?}").to_lowercase(),
        }
    }

    /// Fixed argument count; milestones carry the payload.
    pub fn arity(self) -> usize {
        use EventTag::*;
        match self {
            Joinerrcvck | Cclircvck | Bsrvsntck | Csrvsntck | Csrvssk | Joinerssk | Eventdskjnr | Eventdskcmm
            | Joinergtsnetcreds | Evjrtrsendsnetcreds => 1,
            Bsrvssk | Cclissk => 2,
            Rcvcommrsp | Rcvcommkarsp => 3,
            Leaderrep | Leaderrepka => 5,
            Sntcommrsp | Sntcommkarsp | Csrvbeg | Csrvfin | Joinerbeg | Joinerfin => 6,
            Bsrvbeg | Bsrvfin | Cclibeg | Cclifin => 7,
            MsgSent(_) | MsgRcvd(_) => 1,
        }
    }
}

impl fmt::Display for EventTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for EventTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(named) = EventTag::NAMED.iter().find(|t| t.name() == s) {
            return Ok(*named);
        }
        let inner = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(']'));
        if let Some(k) = inner("msg_sent[") {
            return Ok(EventTag::MsgSent(k.parse()?));
        }
        if let Some(k) = inner("msg_rcvd[") {
            return Ok(EventTag::MsgRcvd(k.parse()?));
        }
        Err(format!("unknown event `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub tag: EventTag,
    pub args: Vec<Term>,
    /// Trace index; assigned by the harness.
    pub pos: usize,
}

impl Event {
    pub fn new(tag: EventTag, args: Vec<Term>) -> Self {
        debug_assert_eq!(args.len(), tag.arity(), "arity of {tag}");
        Event { tag, args, pos: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Start,
    Await(MessageKind),
    Done,
    Halted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleState {
    pub role: RoleId,
    pub session: usize,
    pub phase: Phase,
    pub memory: BTreeMap<String, Term>,
    pub emitted_events: Vec<Event>,
    /// Attacker-controlled instance: skips checks, emits no events.
    pub rogue: bool,
    pub opts: ModelOptions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Start,
    Message(Envelope),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutput {
    pub outgoing: Vec<Envelope>,
    pub events: Vec<Event>,
    /// Secrecy markers put on a public channel.
    pub published: Vec<Term>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoleError {
    #[error("{role} is missing credential `{label}`")]
    MissingCredential { role: RoleId, label: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{role} rejected: {reason}")]
pub struct Reject {
    pub role: RoleId,
    pub reason: String,
}

/// The ordered script of one role: which kinds it receives and sends.
pub fn role_script(role: RoleId) -> Vec<Intent> {
    MessageKind::all()
        .filter_map(|k| {
            let info = k.info();
            if info.from == role {
                Some(Intent::Send(k))
            } else if info.to == role {
                Some(Intent::Recv(k))
            } else {
                None
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    Send(MessageKind),
    Recv(MessageKind),
}

pub fn honest_script(protocols: &[Protocol]) -> Vec<(RoleId, Vec<Intent>)> {
    protocols.iter().flat_map(|p| p.roles().iter().map(|r| (*r, role_script(*r)))).collect()
}

/// The first kind a role waits for, or `Start` for initiators.
fn initial_phase(role: RoleId) -> Phase {
    match role_script(role).first() {
        Some(Intent::Recv(k)) => Phase::Await(*k),
        _ => Phase::Start,
    }
}

/// The kind a role awaits after having sent or received `k`.
pub(crate) fn next_phase(role: RoleId, after: MessageKind) -> Phase {
    let script = role_script(role);
    let i = script.iter().position(|it| matches!(it, Intent::Send(k) | Intent::Recv(k) if *k == after));
    let rest = i.map(|i| &script[i + 1..]).unwrap_or(&[]);
    rest.iter()
        .find_map(|it| match it {
            Intent::Recv(k) => Some(Phase::Await(*k)),
            Intent::Send(_) => None,
        })
        .unwrap_or(Phase::Done)
}

pub fn init_role(
    role: RoleId,
    secrets: &BTreeMap<String, Term>,
    session: usize,
    opts: ModelOptions,
    rogue: bool,
) -> Result<RoleState, RoleError> {
    let mut memory = BTreeMap::new();
    for label in role.credentials() {
        let t = secrets
            .get(*label)
            .ok_or_else(|| RoleError::MissingCredential { role, label: (*label).to_string() })?;
        memory.insert((*label).to_string(), t.clone());
    }
    Ok(RoleState { role, session, phase: initial_phase(role), memory, emitted_events: Vec::new(), rogue, opts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in MessageKind::all() {
            assert_eq!(k.to_string().parse::<MessageKind>().unwrap(), k);
        }
        assert_eq!(MessageKind::c(1).to_string(), "C_M1_ClientHello");
        assert_eq!(MessageKind::j(24).to_string(), "J_M24_JoinerEntrust");
    }

    #[test]
    fn event_names_round_trip() {
        for t in EventTag::NAMED {
            assert_eq!(t.name().parse::<EventTag>().unwrap(), t);
        }
        let m = EventTag::MsgRcvd(MessageKind::c(7));
        assert_eq!(m.name().parse::<EventTag>().unwrap(), m);
    }

    #[test]
    fn scripts_alternate_through_relays() {
        let jrt = role_script(RoleId::JrtRelay);
        assert_eq!(jrt.len(), 16);
        assert_eq!(jrt[0], Intent::Recv(MessageKind::j(1)));
        assert_eq!(jrt[15], Intent::Send(MessageKind::j(24)));
        assert_eq!(role_script(RoleId::Leader).len(), 4);
    }

    #[test]
    fn missing_credentials_are_reported() {
        let err = init_role(RoleId::Joiner, &BTreeMap::new(), 0, ModelOptions::default(), false).unwrap_err();
        assert!(matches!(err, RoleError::MissingCredential { role: RoleId::Joiner, .. }));
    }
}
