//! Helpers shared by several test targets.

use meshcop_core::queries::{match_event, Bindings, Pattern};
use meshcop_core::Event;

/// Every way of choosing one event per premise, in order.
fn premise_tuples(premises: &[Pattern], events: &[&Event], before: usize, b: &Bindings) -> Vec<Vec<usize>> {
    let Some((first, rest)) = premises.split_first() else { return vec![vec![]] };
    let mut out = Vec::new();
    for e in events.iter().filter(|e| e.pos < before) {
        if let Some(nb) = match_event(first, e, b) {
            for mut tail in premise_tuples(rest, events, before, &nb) {
                tail.insert(0, e.pos);
                out.push(tail);
            }
        }
    }
    out
}

/// Decides a correspondence by trying every premise assignment.
pub fn brute_force(conclusion: &Pattern, premises: &[Pattern], injective: bool, events: &[&Event]) -> bool {
    let concl: Vec<(usize, Bindings)> =
        events.iter().filter_map(|e| match_event(conclusion, e, &Bindings::new()).map(|b| (e.pos, b))).collect();
    let options: Vec<Vec<Vec<usize>>> =
        concl.iter().map(|(pos, b)| premise_tuples(premises, events, *pos, b)).collect();
    if options.iter().any(Vec::is_empty) {
        return false;
    }
    if !injective {
        return true;
    }
    // try every assignment of one option per conclusion
    fn assign(i: usize, options: &[Vec<Vec<usize>>], used: &mut Vec<Vec<usize>>) -> bool {
        if i == options.len() {
            return true;
        }
        for o in &options[i] {
            if !used.contains(o) {
                used.push(o.clone());
                if assign(i + 1, options, used) {
                    return true;
                }
                used.pop();
            }
        }
        false
    }
    assign(0, &options, &mut Vec::new())
}

