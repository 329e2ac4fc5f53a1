//! Brute-force thresholds from the explicit configuration game.
//!
//! Configurations are pairs `⟨v, B1⟩`. A round is unfolded into a commitment
//! by one player followed by the other player's response, so the bidding
//! game becomes a turn-based parity game that is solved exactly.

use thiserror::Error;

use crate::budget::{AdvValue, Threshold};
use crate::game::{FrugalParityGame, ThresholdMap};
use crate::turn_based::{Player, Solution, TurnBasedGame};

pub const DEFAULT_MAX_STATES: usize = 200_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("explicit game needs {needed} states, above the limit of {limit}")]
    TooLarge { needed: usize, limit: usize },
    #[error("winning budgets at {vertex} are not upward closed")]
    NotMonotone { vertex: String },
    #[error("bidding orders disagree at {vertex}: {p1_first} vs {p2_first}")]
    OrdersDisagree {
        vertex: String,
        p1_first: Threshold,
        p2_first: Threshold,
    },
}

/// Which player commits to a bid first in the unfolded round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    P1First,
    P2First,
}

/// Bid levels available to a player holding budget level `level`.
fn legal_bids(level: u64) -> impl Iterator<Item = u64> {
    let holder = level % 2 == 1;
    (0..=level).filter(move |b| holder || b % 2 == 0)
}

/// Resolves one round from Player 1's budget level and both bid levels.
/// Returns whether Player 1 won and Player 1's new level.
pub fn resolve_round(l1: u64, b1: u64, b2: u64) -> (bool, u64) {
    let p1_wins = match b1.cmp(&b2) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => l1.is_multiple_of(2),
    };
    if p1_wins {
        (true, l1 - b1)
    } else {
        (false, l1 + b2)
    }
}

/// Number of states the explicit game for `g` would have.
pub fn state_count(g: &FrugalParityGame) -> usize {
    let top = 2 * g.k() + 1;
    let configs = g.len() * (top as usize + 1);
    let mut commits = 0usize;
    for v in g.non_sinks() {
        for l in 0..=top {
            let first = legal_bids(l).count().max(legal_bids(top - l).count());
            commits = commits.saturating_add(first * g.successors(v).len());
        }
    }
    configs.saturating_add(commits)
}

/// The explicit game together with the meaning of its nodes.
pub struct ExplicitGame {
    pub order: Order,
    pub game: TurnBasedGame,
    k: u64,
    /// `config[v][level]`.
    config: Vec<Vec<usize>>,
    /// For commitment nodes: the committed bid level and target.
    commit: Vec<Option<(u64, usize)>>,
}

impl ExplicitGame {
    pub fn build(g: &FrugalParityGame, order: Order, max_states: usize) -> Result<Self, OracleError> {
        let needed = state_count(g);
        if needed > max_states {
            return Err(OracleError::TooLarge {
                needed,
                limit: max_states,
            });
        }
        let top = 2 * g.k() + 1;
        let first = match order {
            Order::P1First => Player::Protagonist,
            Order::P2First => Player::Antagonist,
        };
        let mut game = TurnBasedGame::new();
        let mut commit = Vec::new();
        let mut config = vec![Vec::new(); g.len()];
        for v in g.vertices() {
            for l in 0..=top {
                let node = match g.frugal(v) {
                    Some(fr) => {
                        let won = fr.admits(AdvValue::from_level(l));
                        game.add_node(Player::Antagonist, if won { 1 } else { 2 })
                    }
                    None => game.add_node(first, g.priority(v).unwrap()),
                };
                commit.push(None);
                config[v].push(node);
            }
        }
        for v in g.vertices() {
            if g.is_sink(v) {
                for &c in &config[v] {
                    game.add_edge(c, c);
                }
                continue;
            }
            for l1 in 0..=top {
                let l2 = top - l1;
                let c = config[v][l1 as usize];
                let (mine, theirs) = match order {
                    Order::P1First => (l1, l2),
                    Order::P2First => (l2, l1),
                };
                for b in legal_bids(mine) {
                    for &u in g.successors(v) {
                        let m = game.add_node(first.opponent(), 0);
                        commit.push(Some((b, u)));
                        game.add_edge(c, m);
                        let mut outs: Vec<usize> = Vec::new();
                        for r in legal_bids(theirs) {
                            let (b1, b2) = match order {
                                Order::P1First => (b, r),
                                Order::P2First => (r, b),
                            };
                            let (p1_won, next) = resolve_round(l1, b1, b2);
                            let first_won = p1_won == (order == Order::P1First);
                            if first_won {
                                outs.push(config[u][next as usize]);
                            } else {
                                for &w in g.successors(v) {
                                    outs.push(config[w][next as usize]);
                                }
                            }
                        }
                        outs.sort_unstable();
                        outs.dedup();
                        for o in outs {
                            game.add_edge(m, o);
                        }
                    }
                }
            }
        }
        Ok(ExplicitGame {
            order,
            game,
            k: g.k(),
            config,
            commit,
        })
    }

    pub fn config_node(&self, v: usize, b1: AdvValue) -> usize {
        self.config[v][b1.level() as usize]
    }

    /// The committed `(bid, target)` of a commitment node.
    pub fn commitment(&self, node: usize) -> Option<(AdvValue, usize)> {
        self.commit[node].map(|(b, u)| (AdvValue::from_level(b), u))
    }

    /// Least winning budget per vertex, checking that winning budgets are
    /// upward closed.
    pub fn thresholds(&self, g: &FrugalParityGame, sol: &Solution) -> Result<ThresholdMap, OracleError> {
        let top = 2 * self.k + 1;
        let mut out = Vec::with_capacity(g.len());
        for v in g.vertices() {
            let wins: Vec<bool> = (0..=top)
                .map(|l| sol.winner[self.config[v][l as usize]] == Player::Protagonist)
                .collect();
            let first = wins.iter().position(|&w| w);
            if let Some(f) = first {
                if !wins[f..].iter().all(|&w| w) {
                    return Err(OracleError::NotMonotone {
                        vertex: g.name(v).to_string(),
                    });
                }
            }
            out.push(match first {
                Some(f) => Threshold::Budget(AdvValue::from_level(f as u64)),
                None => Threshold::Top,
            });
        }
        Ok(ThresholdMap::from_vec(out))
    }
}

/// A solved explicit game.
pub struct OracleSolution {
    pub explicit: ExplicitGame,
    pub solution: Solution,
    pub thresholds: ThresholdMap,
}

impl OracleSolution {
    pub fn solve(g: &FrugalParityGame, order: Order, max_states: usize) -> Result<Self, OracleError> {
        let explicit = ExplicitGame::build(g, order, max_states)?;
        let solution = explicit.game.solve();
        let thresholds = explicit.thresholds(g, &solution)?;
        Ok(OracleSolution {
            explicit,
            solution,
            thresholds,
        })
    }

    /// The first mover's winning commitment at `⟨v, b1⟩`, if it wins there.
    pub fn commitment(&self, v: usize, b1: AdvValue) -> Option<(AdvValue, usize)> {
        let c = self.explicit.config_node(v, b1);
        let first = match self.explicit.order {
            Order::P1First => Player::Protagonist,
            Order::P2First => Player::Antagonist,
        };
        if self.solution.winner[c] != first {
            return None;
        }
        self.solution.strategy[c].and_then(|m| self.explicit.commitment(m))
    }
}

/// Thresholds from one bidding order.
pub fn oracle_order(g: &FrugalParityGame, order: Order, max_states: usize) -> Result<ThresholdMap, OracleError> {
    Ok(OracleSolution::solve(g, order, max_states)?.thresholds)
}

/// Thresholds computed with both bidding orders, which must agree.
pub fn oracle(g: &FrugalParityGame, max_states: usize) -> Result<ThresholdMap, OracleError> {
    let a = oracle_order(g, Order::P1First, max_states)?;
    let b = oracle_order(g, Order::P2First, max_states)?;
    for v in g.vertices() {
        if a.get(v) != b.get(v) {
            return Err(OracleError::OrdersDisagree {
                vertex: g.name(v).to_string(),
                p1_first: a.get(v),
                p2_first: b.get(v),
            });
        }
    }
    Ok(a)
}
