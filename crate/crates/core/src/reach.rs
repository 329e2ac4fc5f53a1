//! Frugal reachability and frugal safety by value iteration.

use serde::Serialize;
use thiserror::Error;

use crate::average::average_at;
use crate::budget::Threshold;
use crate::game::{dualize, FrugalParityGame, ThresholdMap};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("vertex {vertex} has priority {priority}, expected an {expected} priority")]
    WrongParity {
        vertex: String,
        priority: u32,
        expected: &'static str,
    },
    #[error("value iteration exceeded {0} sweeps")]
    NoConvergence(usize),
}

/// The maps produced by successive sweeps, starting from the initial map.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationTrace {
    #[serde(skip)]
    pub maps: Vec<ThresholdMap>,
}

impl IterationTrace {
    pub fn sweeps(&self) -> usize {
        self.maps.len().saturating_sub(1)
    }

    /// One row per sweep, one column per vertex.
    pub fn render(&self, g: &FrugalParityGame) -> String {
        let mut out = String::from("sweep");
        for v in g.vertices() {
            out.push('\t');
            out.push_str(g.name(v));
        }
        out.push('\n');
        for (i, m) in self.maps.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in g.vertices() {
                out.push('\t');
                out.push_str(&m.get(v).to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn check_parity(g: &FrugalParityGame, odd: bool) -> Result<(), SolveError> {
    for v in g.non_sinks() {
        let p = g.priority(v).unwrap();
        if (p % 2 == 1) != odd {
            return Err(SolveError::WrongParity {
                vertex: g.name(v).to_string(),
                priority: p,
                expected: if odd { "odd" } else { "even" },
            });
        }
    }
    Ok(())
}

/// Upper bound on the number of changing sweeps.
pub fn sweep_bound(g: &FrugalParityGame) -> usize {
    g.len() * (2 * g.k() as usize + 2)
}

/// Jacobi iteration from `Top` on non-sinks down to the greatest map with the
/// average property.
pub(crate) fn reach_fixpoint(g: &FrugalParityGame) -> (ThresholdMap, IterationTrace) {
    let mut cur = ThresholdMap::from_vec(g.vertices().map(|v| g.frugal(v).unwrap_or(Threshold::Top)).collect());
    let mut trace = IterationTrace {
        maps: vec![cur.clone()],
    };
    loop {
        let mut next = cur.clone();
        for v in g.non_sinks() {
            next.set(v, average_at(g, &cur, v));
        }
        if next == cur {
            return (cur, trace);
        }
        debug_assert!(next.le(&cur), "value iteration must not increase");
        trace.maps.push(next.clone());
        cur = next;
    }
}

/// Thresholds of a game whose non-sink priorities are all even: Player 1 wins
/// only by reaching a sink with enough budget.
pub fn solve_frugal_reachability(g: &FrugalParityGame) -> Result<(ThresholdMap, IterationTrace), SolveError> {
    check_parity(g, false)?;
    let (t, trace) = reach_fixpoint(g);
    if trace.sweeps() > sweep_bound(g) {
        return Err(SolveError::NoConvergence(sweep_bound(g)));
    }
    Ok((t, trace))
}

/// Thresholds of a game whose non-sink priorities are all odd, computed as
/// the flip of Player 2's reachability thresholds.
pub fn solve_frugal_safety(g: &FrugalParityGame) -> Result<ThresholdMap, SolveError> {
    check_parity(g, true)?;
    let (t2, _) = solve_frugal_reachability(&dualize(g))?;
    Ok(t2.complement(g.k()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fix_a() -> FrugalParityGame {
        FrugalParityGame::new(
            5,
            &[("v0", 2), ("v1", 2), ("v2", 2)],
            &[("t", Threshold::plain(2))],
            &[
                ("v0", "v0"),
                ("v0", "v1"),
                ("v1", "v0"),
                ("v1", "v2"),
                ("v2", "v0"),
                ("v2", "t"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn fix_a_reachability() {
        let g = fix_a();
        let (t, trace) = solve_frugal_reachability(&g).unwrap();
        assert_eq!(t.render(&g), "t=2\nv0=5\nv1=4*\nv2=3*\n");
        assert!(trace.sweeps() <= sweep_bound(&g));
        for w in trace.maps.windows(2) {
            assert!(w[1].le(&w[0]));
        }
    }

    #[test]
    fn wrong_parity_rejected() {
        let g = fix_a().with_priorities(|_, _| 1);
        assert!(solve_frugal_reachability(&g).is_err());
        assert!(solve_frugal_safety(&fix_a()).is_err());
    }
}
