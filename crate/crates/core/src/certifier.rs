//! Certification of candidate threshold maps through a turn-based parity
//! game that simulates the average-based strategy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::average::{allowed, beating_bid, bid_options, check_average, strategy_bid, AverageViolation};
use crate::budget::{AdvValue, Threshold};
use crate::game::{dualize, FrugalParityGame, ThresholdMap};
use crate::parity::solve_frugal_parity;
use crate::reach::SolveError;
use crate::turn_based::{Player, Solution, TurnBasedGame};

#[derive(Debug, Error)]
pub enum CertError {
    #[error("threshold map violates the average property at {0:?}")]
    NotAverage(Vec<AverageViolation>),
    #[error("budget {budget} at {vertex} falls below its threshold")]
    BelowThreshold { vertex: String, budget: AdvValue },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
}

/// The player whose claim a certificate game checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Player1,
    Player2,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Player1 => Side::Player2,
            Side::Player2 => Side::Player1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertNode {
    /// `⟨v, B⟩` with `B` one of `T(v)`, `succ T(v)` or `Top`.
    Config { vertex: usize, budget: Threshold },
    /// `⟨v′, c⟩`: the protagonist bid `bid` at config node `config` and will
    /// move to `target` if it wins.
    Response {
        target: usize,
        config: usize,
        bid: AdvValue,
    },
}

/// `G_{T,G}` for one side, built on `g` (or its dual) and `T` (or `T′`).
#[derive(Debug, Clone)]
pub struct CertGame {
    pub side: Side,
    pub game: FrugalParityGame,
    pub thresholds: ThresholdMap,
    pub arena: TurnBasedGame,
    pub nodes: Vec<CertNode>,
    configs: HashMap<(usize, Threshold), usize>,
    bids: HashMap<usize, AdvValue>,
}

impl CertGame {
    /// Builds the certificate game for `side`. For `Player2` the game is
    /// dualized and `t` replaced by its complement.
    pub fn build(g: &FrugalParityGame, t: &ThresholdMap, side: Side) -> Result<Self, CertError> {
        let (game, thresholds) = match side {
            Side::Player1 => (g.clone(), t.clone()),
            Side::Player2 => (dualize(g), t.complement(g.k())),
        };
        let violations = check_average(&game, &thresholds);
        if !violations.is_empty() {
            return Err(CertError::NotAverage(violations));
        }
        Self::build_raw(game, thresholds, side)
    }

    fn build_raw(game: FrugalParityGame, t: ThresholdMap, side: Side) -> Result<Self, CertError> {
        let total = game.total();
        let mut arena = TurnBasedGame::new();
        let mut nodes = Vec::new();
        let mut configs = HashMap::new();
        for v in game.vertices() {
            let mut budgets = Vec::new();
            if let Threshold::Budget(b) = t.get(v) {
                budgets.push(Threshold::Budget(b));
                if b.succ() <= total {
                    budgets.push(Threshold::Budget(b.succ()));
                }
            }
            budgets.push(Threshold::Top);
            for budget in budgets {
                let sink = game.is_sink(v) || budget.is_top();
                let id = if sink {
                    arena.add_node(Player::Antagonist, 1)
                } else {
                    arena.add_node(Player::Protagonist, game.priority(v).unwrap())
                };
                if sink {
                    arena.add_edge(id, id);
                }
                nodes.push(CertNode::Config { vertex: v, budget });
                configs.insert((v, budget), id);
            }
        }
        let locate = |w: usize, x: AdvValue| -> Result<usize, CertError> {
            let tw = t.get(w);
            if !tw.admits(x) {
                return Err(CertError::BelowThreshold {
                    vertex: game.name(w).to_string(),
                    budget: x,
                });
            }
            Ok(configs
                .get(&(w, Threshold::Budget(x)))
                .copied()
                .unwrap_or(configs[&(w, Threshold::Top)]))
        };
        let mut bids = HashMap::new();
        let config_nodes: Vec<(usize, usize, AdvValue)> = nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| match *n {
                CertNode::Config {
                    vertex,
                    budget: Threshold::Budget(b),
                } if !game.is_sink(vertex) => Some((id, vertex, b)),
                _ => None,
            })
            .collect();
        for (c, v, budget) in config_nodes {
            bids.insert(c, strategy_bid(&game, &t, v, budget));
            let opp = budget.opponent(game.k()).expect("budget within k*");
            let targets = allowed(&game, &t, v);
            for bid in bid_options(&game, &t, v, budget) {
                let beat = beating_bid(bid, budget);
                let mut win_targets = Vec::new();
                if beat <= opp {
                    let nb = budget.oplus(beat).expect("opponent bid is legal");
                    for &w in game.successors(v) {
                        win_targets.push(locate(w, nb)?);
                    }
                }
                for &target in &targets {
                    let r = arena.add_node(Player::Antagonist, 0);
                    nodes.push(CertNode::Response { target, config: c, bid });
                    arena.add_edge(c, r);
                    let mut outs = win_targets.clone();
                    if beat > AdvValue::ZERO {
                        outs.push(locate(target, budget.ominus(bid).expect("bid within budget"))?);
                    }
                    outs.sort_unstable();
                    outs.dedup();
                    for o in outs {
                        arena.add_edge(r, o);
                    }
                }
            }
        }
        let cg = CertGame {
            side,
            game,
            thresholds: t,
            arena,
            nodes,
            configs,
            bids,
        };
        let (n_bound, e_bound) = cg.size_bounds();
        assert!(cg.arena.len() <= n_bound, "certificate game exceeds its vertex bound");
        assert!(
            cg.non_sink_edges() <= e_bound,
            "certificate game exceeds its edge bound"
        );
        Ok(cg)
    }

    /// `(3(|V|+|S|) + 3|E|, 3|E|(2 + maxdeg))`: at most one plain and one
    /// marked config per vertex, the marked one with up to two bids.
    pub fn size_bounds(&self) -> (usize, usize) {
        let e = self.game.edge_count();
        (3 * self.game.len() + 3 * e, 3 * e * (2 + self.game.max_degree()))
    }

    /// Edges other than the self-loops on sinks.
    pub fn non_sink_edges(&self) -> usize {
        (0..self.arena.len())
            .filter(|&n| !self.is_sink_node(n))
            .map(|n| self.arena.successors(n).len())
            .sum()
    }

    fn is_sink_node(&self, n: usize) -> bool {
        match self.nodes[n] {
            CertNode::Config { vertex, budget } => budget.is_top() || self.game.is_sink(vertex),
            CertNode::Response { .. } => false,
        }
    }

    pub fn config(&self, v: usize, budget: Threshold) -> Option<usize> {
        self.configs.get(&(v, budget)).copied()
    }

    /// The bid placed at a non-sink config node.
    pub fn bid(&self, node: usize) -> Option<AdvValue> {
        self.bids.get(&node).copied()
    }

    pub fn label(&self, n: usize) -> String {
        match self.nodes[n] {
            CertNode::Config { vertex, budget } => format!("⟨{},{}⟩", self.game.name(vertex), budget),
            CertNode::Response { target, config, bid } => {
                format!("⟨{},{},{}⟩", self.game.name(target), self.label(config), bid)
            }
        }
    }

    pub fn solve(&self) -> Solution {
        self.arena.solve()
    }

    /// Original vertices with a config node the protagonist loses.
    pub fn losing_vertices(&self, sol: &Solution) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(n, node)| match node {
                CertNode::Config { vertex, .. } if sol.winner[n] != Player::Protagonist => Some(*vertex),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The protagonist's memoryless choices at winning non-sink config nodes.
    pub fn strategy_table(&self, sol: &Solution) -> StrategyTable {
        let mut entries = Vec::new();
        for (n, node) in self.nodes.iter().enumerate() {
            let CertNode::Config { vertex, budget } = *node else {
                continue;
            };
            if self.is_sink_node(n) || sol.winner[n] != Player::Protagonist {
                continue;
            }
            let Some(r) = sol.strategy[n] else { continue };
            let CertNode::Response { target, bid, .. } = self.nodes[r] else {
                unreachable!("config nodes lead to response nodes")
            };
            entries.push(StrategyEntry {
                vertex: self.game.name(vertex).to_string(),
                budget,
                bid,
                target: self.game.name(target).to_string(),
                node: n,
                target_vertex: target,
            });
        }
        StrategyTable {
            side: self.side,
            entries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub vertex: String,
    pub budget: Threshold,
    pub bid: AdvValue,
    pub target: String,
    #[serde(skip)]
    pub node: usize,
    #[serde(skip)]
    pub target_vertex: usize,
}

/// Certificate-game vertex → chosen successor, for the protagonist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyTable {
    pub side: Side,
    pub entries: Vec<StrategyEntry>,
}

impl StrategyTable {
    pub fn lookup(&self, vertex: &str, budget: Threshold) -> Option<&StrategyEntry> {
        self.entries.iter().find(|e| e.vertex == vertex && e.budget == budget)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Verified,
    RejectedAverage { violations: Vec<AverageViolation> },
    RejectedUpper { vertex: String },
    RejectedLower { vertex: String },
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        *self == Verdict::Verified
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SideSummary {
    pub nodes: usize,
    pub edges: usize,
    pub strategy: StrategyTable,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertReport {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub player1: Option<SideSummary>,
    pub player2: Option<SideSummary>,
}

impl CertReport {
    pub fn strategy(&self, side: Side) -> Option<&StrategyTable> {
        match side {
            Side::Player1 => self.player1.as_ref().map(|s| &s.strategy),
            Side::Player2 => self.player2.as_ref().map(|s| &s.strategy),
        }
    }
}

fn summarize(cg: &CertGame, sol: &Solution) -> SideSummary {
    SideSummary {
        nodes: cg.arena.len(),
        edges: cg.arena.edge_count(),
        strategy: cg.strategy_table(sol),
    }
}

/// Checks whether `t` equals the thresholds of `g`.
pub fn certify(g: &FrugalParityGame, t: &ThresholdMap) -> Result<CertReport, CertError> {
    let violations = check_average(g, t);
    if !violations.is_empty() {
        return Ok(CertReport {
            verdict: Verdict::RejectedAverage { violations },
            player1: None,
            player2: None,
        });
    }
    let upper = CertGame::build(g, t, Side::Player1)?;
    let upper_sol = upper.solve();
    let p1 = summarize(&upper, &upper_sol);
    if let Some(&v) = upper.losing_vertices(&upper_sol).first() {
        return Ok(CertReport {
            verdict: Verdict::RejectedUpper {
                vertex: g.name(v).to_string(),
            },
            player1: Some(p1),
            player2: None,
        });
    }
    let lower = CertGame::build(g, t, Side::Player2)?;
    let lower_sol = lower.solve();
    let p2 = summarize(&lower, &lower_sol);
    let verdict = match lower.losing_vertices(&lower_sol).first() {
        Some(&v) => Verdict::RejectedLower {
            vertex: g.name(v).to_string(),
        },
        None => Verdict::Verified,
    };
    Ok(CertReport {
        verdict,
        player1: Some(p1),
        player2: Some(p2),
    })
}

/// The protagonist's strategy table from a verified report.
pub fn extract_strategy(report: &CertReport, side: Side) -> Option<&StrategyTable> {
    if !report.verdict.is_verified() {
        return None;
    }
    report.strategy(side)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Decision {
    Answer { value: bool, threshold: Threshold },
    NotCertified { verdict: Verdict },
}

/// Whether `Th(v) ≥ ell`, answered from a certified threshold map. With no
/// candidate the map is computed first.
pub fn decide_threshold(
    g: &FrugalParityGame,
    vertex: &str,
    ell: Threshold,
    candidate: Option<&ThresholdMap>,
) -> Result<Decision, CertError> {
    let v = g
        .index_of(vertex)
        .map_err(|_| CertError::UnknownVertex(vertex.to_string()))?;
    let t = match candidate {
        Some(t) => t.clone(),
        None => solve_frugal_parity(g)?.0,
    };
    let report = certify(g, &t)?;
    if !report.verdict.is_verified() {
        return Ok(Decision::NotCertified {
            verdict: report.verdict,
        });
    }
    Ok(Decision::Answer {
        value: t.get(v) >= ell,
        threshold: t.get(v),
    })
}
