//! Symbolic model of Thread MeshCoP commissioning with a Dolev-Yao
//! attacker, bounded schedule exploration and a query engine.

pub mod adversary;
pub mod catalog;
pub mod crypto;
pub mod dump;
pub mod harness;
pub mod queries;
pub mod roles;
pub mod sample;
pub mod syntax;
pub mod term;

pub use catalog::{Mutation, Mutations, NameCatalog};
pub use harness::{ExplorationConfig, Mode, Outcome, Scenario, Trace};
pub use queries::{Report, Status};
pub use roles::{ChannelId, Envelope, Event, EventTag, MessageKind, Protocol, RoleId, RoleState};
pub use term::{Ctor, Dtor, Sort, Term};
