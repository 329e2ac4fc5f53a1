//! Frugal-parity thresholds by iterated reachability and lower-priority
//! subgames.
//!
//! With `d` the largest priority and `d` even, `F_d` is the set of
//! priority-`d` vertices. `G_i` turns `F_d` into sinks valued by the last
//! reachability round (`Top` at first) and is solved recursively. `R_i` keeps
//! only the edges leaving `F_d` and turns everything else into sinks valued by
//! `G_i`. The rounds stop once `G_{i+1}` repeats `G_i`. An odd `d` is handled
//! on the dual game.

use serde::Serialize;

use crate::budget::Threshold;
use crate::game::{dualize, FrugalParityGame, ThresholdMap};
use crate::reach::{reach_fixpoint, solve_frugal_safety, sweep_bound, SolveError};

/// One outer round: `G_i`, `R_i` and the combined `Th_i`.
#[derive(Debug, Clone, Serialize)]
pub struct ParityIteration {
    #[serde(skip)]
    pub inner: ThresholdMap,
    #[serde(skip)]
    pub reach: Option<ThresholdMap>,
    #[serde(skip)]
    pub combined: ThresholdMap,
    pub inner_trace: Option<Box<ParityTrace>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityTrace {
    /// Largest priority of the solved game, `None` when it has no non-sinks.
    pub top_priority: Option<u32>,
    /// The maps are Player 2 thresholds of the dual game.
    pub dualized: bool,
    pub iterations: Vec<ParityIteration>,
}

impl ParityTrace {
    fn base(t: &ThresholdMap, top_priority: Option<u32>) -> Self {
        ParityTrace {
            top_priority,
            dualized: false,
            iterations: vec![ParityIteration {
                inner: t.clone(),
                reach: None,
                combined: t.clone(),
                inner_trace: None,
            }],
        }
    }

    /// `Th_i` in Player 1 terms; indices past the fixed point give the result.
    pub fn bounded(&self, i: usize, k: u64) -> ThresholdMap {
        let last = self.iterations.len() - 1;
        let m = &self.iterations[i.min(last)].combined;
        if self.dualized {
            m.complement(k)
        } else {
            m.clone()
        }
    }

    /// Nested tables, one per `(level, iteration)`.
    pub fn render(&self, g: &FrugalParityGame) -> String {
        let mut out = String::new();
        self.render_into(g, 0, &mut out);
        out
    }

    fn render_into(&self, g: &FrugalParityGame, level: usize, out: &mut String) {
        let pad = "  ".repeat(level);
        let row = |label: &str, m: &ThresholdMap| {
            let cells: Vec<String> = g.vertices().map(|v| format!("{}={}", g.name(v), m.get(v))).collect();
            format!("{pad}  {label}: {}\n", cells.join(" "))
        };
        out.push_str(&format!(
            "{pad}level {level} (max priority {}{})\n",
            self.top_priority.map_or("-".to_string(), |p| p.to_string()),
            if self.dualized { ", dual game" } else { "" }
        ));
        for (i, it) in self.iterations.iter().enumerate() {
            out.push_str(&format!("{pad} iteration {i}\n"));
            out.push_str(&row("G", &it.inner));
            if let Some(r) = &it.reach {
                out.push_str(&row("R", r));
            }
            out.push_str(&row("Th", &it.combined));
            if let Some(sub) = &it.inner_trace {
                sub.render_into(g, level + 1, out);
            }
        }
    }
}

/// Thresholds of an arbitrary frugal-parity game.
pub fn solve_frugal_parity(g: &FrugalParityGame) -> Result<(ThresholdMap, ParityTrace), SolveError> {
    let prios = g.priorities();
    let Some(&d) = prios.last() else {
        let t = ThresholdMap::from_vec(g.vertices().map(|v| g.frugal(v).unwrap()).collect());
        return Ok((t.clone(), ParityTrace::base(&t, None)));
    };
    if prios.len() == 1 {
        let t = if d % 2 == 1 {
            solve_frugal_safety(g)?
        } else {
            reach_fixpoint(g).0
        };
        return Ok((t.clone(), ParityTrace::base(&t, Some(d))));
    }
    if d % 2 == 0 {
        return solve_even(g, d);
    }
    let dual = dualize(g);
    let (t2, mut trace) = solve_even(&dual, d + 1)?;
    trace.dualized = true;
    Ok((t2.complement(g.k()), trace))
}

fn solve_even(g: &FrugalParityGame, d: u32) -> Result<(ThresholdMap, ParityTrace), SolveError> {
    let fd: Vec<usize> = g.non_sinks().filter(|&v| g.priority(v) == Some(d)).collect();
    let rest: Vec<usize> = g.non_sinks().filter(|&v| g.priority(v) != Some(d)).collect();
    let cap = sweep_bound(g) + 1;
    let mut iterations: Vec<ParityIteration> = Vec::new();
    let mut fr: Vec<(usize, Threshold)> = fd.iter().map(|&v| (v, Threshold::Top)).collect();
    loop {
        let (inner, inner_trace) = solve_frugal_parity(&g.with_sinks(&fr))?;
        let inner_trace = Some(Box::new(inner_trace));
        if let Some(prev) = iterations.last() {
            if rest.iter().all(|&v| prev.inner.get(v) == inner.get(v)) {
                let reach = prev.reach.as_ref().expect("every earlier round has a reachability map");
                let mut combined = inner.clone();
                for &v in &fd {
                    combined.set(v, reach.get(v));
                }
                iterations.push(ParityIteration {
                    inner,
                    reach: None,
                    combined: combined.clone(),
                    inner_trace,
                });
                let trace = ParityTrace {
                    top_priority: Some(d),
                    dualized: false,
                    iterations,
                };
                return Ok((combined, trace));
            }
        }
        if iterations.len() > cap {
            return Err(SolveError::NoConvergence(cap));
        }
        let targets: Vec<(usize, Threshold)> = rest.iter().map(|&v| (v, inner.get(v))).collect();
        let (reach, _) = reach_fixpoint(&g.with_sinks(&targets));
        let mut combined = inner.clone();
        for &v in &fd {
            combined.set(
                v,
                if iterations.is_empty() {
                    Threshold::Top
                } else {
                    reach.get(v)
                },
            );
        }
        fr = fd.iter().map(|&v| (v, reach.get(v))).collect();
        iterations.push(ParityIteration {
            inner,
            reach: Some(reach),
            combined,
            inner_trace,
        });
    }
}

/// Thresholds of the co-Büchi player on a game with priorities in `{1, 2}`,
/// where `F` is the priority-2 set.
pub fn solve_cobuchi(g: &FrugalParityGame) -> Result<(ThresholdMap, ParityTrace), SolveError> {
    for v in g.non_sinks() {
        let p = g.priority(v).unwrap();
        if p != 1 && p != 2 {
            return Err(SolveError::WrongParity {
                vertex: g.name(v).to_string(),
                priority: p,
                expected: "1 or 2",
            });
        }
    }
    solve_frugal_parity(g)
}

/// `Th_i`: the thresholds for plays that visit the top priority set at most
/// `i` times before settling.
pub fn bounded_threshold(g: &FrugalParityGame, i: usize) -> Result<ThresholdMap, SolveError> {
    let (_, trace) = solve_frugal_parity(g)?;
    Ok(trace.bounded(i, g.k()))
}
