//! Benchmark fixtures.

use meshcop_core::adversary::KnowledgeBase;
use meshcop_core::sample::{build, ANY};
use meshcop_core::term::{Signature, Term};
use meshcop_core::{ExplorationConfig, Scenario};

/// Default bounds restricted to one protocol.
pub fn bounded(scenario: Scenario) -> ExplorationConfig {
    ExplorationConfig { scenario, ..Default::default() }
}

/// `n` sampled terms from a fixed linear-congruential byte stream.
pub fn terms(n: usize) -> Vec<Term> {
    let mut state: u32 = 0x9e37_79b9;
    let mut next = move || {
        state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
        (state >> 24) as u8
    };
    (0..n)
        .map(|i| {
            let recipe: Vec<u8> = (0..48).map(|_| next()).collect();
            build(ANY[i % ANY.len()], &mut recipe.into_iter(), 4)
        })
        .collect()
}

/// Knowledge after observing every term in `seen`.
pub fn knowledge(seen: &[Term]) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new(Signature::standard(), []);
    for t in seen {
        kb.observe(t);
    }
    kb
}
