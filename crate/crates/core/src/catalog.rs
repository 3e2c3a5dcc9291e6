//! Names of the model: free names shared by every session, per-session
//! restricted names, public constants and the attacker's own material.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::term::{mk, Ctor, NameCtx, Sort, Term};

/// Public constants known to everyone, the attacker included.
pub const PUBLIC_CONSTANTS: &[(&str, Sort)] = &[
    ("G1", Sort::Element),
    ("Gj1", Sort::Element),
    ("AES_CMAC_PRF", Sort::Prf),
    ("OTHERVARS", Sort::Bitstring),
    // stands in for a removed key or field under mutation
    ("nokey", Sort::Key),
    ("none", Sort::Bitstring),
];

/// Free names created once per scenario instance and private to honest roles.
pub const FREE_NAMES: &[(&str, Sort)] = &[
    ("sspcommissioner", Sort::Bitstring),
    ("sspjoiner", Sort::Bitstring),
    ("secretborderandleader", Sort::Key),
    ("scrtjtrcm", Sort::Key),
    ("kek", Sort::Key),
    ("netcreds", Sort::Bitstring),
    ("Granted", Sort::Bitstring),
    ("commpetreq", Sort::Bitstring),
    ("commpetres", Sort::Bitstring),
    ("commkareq", Sort::Bitstring),
    ("commkares", Sort::Bitstring),
    ("leadpetreq", Sort::Bitstring),
    ("leadpetres", Sort::Bitstring),
    ("leadkareq", Sort::Bitstring),
    ("leadkares", Sort::Bitstring),
    ("join_fin_req", Sort::Bitstring),
    ("join_fin_rsp", Sort::Bitstring),
    ("secretpskc", Sort::Bitstring),
    ("sspjoiner_sec", Sort::Bitstring),
    ("secretdskj", Sort::Bitstring),
    ("secretsskc", Sort::Bitstring),
    ("secretsskj", Sort::Bitstring),
    ("clid", Sort::Id),
    ("srid", Sort::Id),
    ("jnid", Sort::Id),
];

/// Restricted names created fresh for every session.
pub const SESSION_NAMES: &[(&str, Sort)] = &[
    ("cr", Sort::Random),
    ("sr", Sort::Random),
    ("cr1", Sort::Random),
    ("noncea", Sort::Bitstring),
    ("comm_session", Sort::Bitstring),
    ("crj", Sort::Random),
    ("srj", Sort::Random),
    ("joinerip", Sort::Bitstring),
    ("x1", Sort::Skey),
    ("x2", Sort::Skey),
    ("x3", Sort::Skey),
    ("x4", Sort::Skey),
    ("xj1", Sort::Skey),
    ("xj2", Sort::Skey),
    ("xj3", Sort::Skey),
    ("xj4", Sort::Skey),
    ("v1", Sort::Skey),
    ("v2", Sort::Skey),
    ("v3", Sort::Skey),
    ("v4", Sort::Skey),
    ("v5", Sort::Skey),
    ("v6", Sort::Skey),
    ("vj1", Sort::Skey),
    ("vj2", Sort::Skey),
    ("vj3", Sort::Skey),
    ("vj4", Sort::Skey),
    ("vj5", Sort::Skey),
    ("vj6", Sort::Skey),
];

/// One attacker-owned name per sort.
pub const ATTACKER_NAMES: &[(&str, Sort)] = &[
    ("atk_bits", Sort::Bitstring),
    ("atk_key", Sort::Key),
    ("atk_random", Sort::Random),
    ("atk_id", Sort::Id),
    ("atk_skey", Sort::Skey),
];

/// Sort of any label that can appear in a trace file.
pub fn label_sort(label: &str) -> Option<Sort> {
    PUBLIC_CONSTANTS
        .iter()
        .chain(FREE_NAMES)
        .chain(SESSION_NAMES)
        .chain(ATTACKER_NAMES)
        .find(|(l, _)| *l == label)
        .map(|(_, s)| *s)
}

pub fn public(label: &str) -> Term {
    let sort = PUBLIC_CONSTANTS.iter().find(|(l, _)| *l == label).map(|(_, s)| *s).expect("declared constant");
    Term::constant(label, sort)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mutation {
    DropNoncea,
    NoLeaderEncryption,
    NoRelayEncryption,
    AllowZkpForge,
}

impl Mutation {
    pub const ALL: [Mutation; 4] =
        [Mutation::DropNoncea, Mutation::NoLeaderEncryption, Mutation::NoRelayEncryption, Mutation::AllowZkpForge];

    pub fn as_str(self) -> &'static str {
        match self {
            Mutation::DropNoncea => "drop-noncea",
            Mutation::NoLeaderEncryption => "no-leader-encryption",
            Mutation::NoRelayEncryption => "no-relay-encryption",
            Mutation::AllowZkpForge => "allow-zkp-forge",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mutation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL.iter().copied().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown mutation `{s}`"))
    }
}

pub type Mutations = BTreeSet<Mutation>;

/// Protocol-level switches the role machines consult.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModelOptions {
    pub drop_noncea: bool,
    pub no_leader_encryption: bool,
    pub no_relay_encryption: bool,
}

impl ModelOptions {
    pub fn from_mutations(m: &Mutations) -> Self {
        ModelOptions {
            drop_noncea: m.contains(&Mutation::DropNoncea),
            no_leader_encryption: m.contains(&Mutation::NoLeaderEncryption),
            no_relay_encryption: m.contains(&Mutation::NoRelayEncryption),
        }
    }
}

/// Label-indexed slice of the catalog handed to one role instance.
pub type Credentials = BTreeMap<String, Term>;

/// All names of one scenario instance.
#[derive(Debug, Clone)]
pub struct NameCatalog {
    pub free: BTreeMap<&'static str, Term>,
    pub sessions: Vec<BTreeMap<&'static str, Term>>,
    /// Attacker material seeded into the initial knowledge base.
    pub attacker: Vec<Term>,
    /// Every honest name, in creation order.
    pub honest: Vec<Term>,
}

impl NameCatalog {
    pub fn new(ctx: &mut NameCtx) -> Self {
        let mut honest = Vec::new();
        let free = FREE_NAMES
            .iter()
            .map(|(l, s)| {
                let n = ctx.make_name(l, *s);
                honest.push(n.clone());
                (*l, n)
            })
            .collect();
        let attacker = ATTACKER_NAMES.iter().map(|(l, s)| ctx.make_name(l, *s)).collect();
        NameCatalog { free, sessions: Vec::new(), attacker, honest }
    }

    /// Creates the restricted names of a new session. A rogue session's
    /// names belong to the attacker.
    pub fn add_session(&mut self, ctx: &mut NameCtx, rogue: bool) -> usize {
        let names: BTreeMap<&'static str, Term> =
            SESSION_NAMES.iter().map(|(l, s)| (*l, ctx.make_name(l, *s))).collect();
        if rogue {
            self.attacker.extend(names.values().cloned());
        } else {
            self.honest.extend(names.values().cloned());
        }
        self.sessions.push(names);
        self.sessions.len() - 1
    }

    /// Fresh attacker-owned replacements for free names (a rogue device has
    /// its own credentials).
    pub fn rogue_free(&mut self, ctx: &mut NameCtx) -> BTreeMap<&'static str, Term> {
        let out: BTreeMap<&'static str, Term> = FREE_NAMES.iter().map(|(l, s)| (*l, ctx.make_name(l, *s))).collect();
        self.attacker.extend(out.values().cloned());
        out
    }

    pub fn free(&self, label: &str) -> Term {
        self.free.get(label).cloned().unwrap_or_else(|| panic!("no free name {label}"))
    }
}

/// Masked identifier `hash(id)`.
pub fn masked(id: &Term) -> Term {
    mk(Ctor::Hash, vec![id.clone()])
}
