//! Playing rounds: bid resolution, certified strategies with restarts, and
//! sessions against a human or a scripted opponent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{AdvValue, BudgetError, Threshold};
use crate::certifier::{CertError, CertGame, CertNode, Side};
use crate::game::{FrugalParityGame, GameError, ThresholdMap};
use crate::oracle::{resolve_round, OracleError, OracleSolution, Order, DEFAULT_MAX_STATES};
use crate::parity::solve_frugal_parity;
use crate::reach::SolveError;
use crate::turn_based::{Player, Solution};

#[derive(Debug, Error)]
pub enum PlayError {
    #[error("{player:?} cannot bid {bid} with budget {budget}")]
    IllegalBid {
        player: Side,
        bid: AdvValue,
        budget: AdvValue,
    },
    #[error("{player:?} cannot move from {from} to {to}")]
    IllegalMove { player: Side, from: String, to: String },
    #[error("the play is over")]
    Finished,
    #[error("{0:?} is played by the engine")]
    NotHuman(Side),
    #[error("missing action for {0:?}")]
    MissingAction(Side),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// One player's half of a joint action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub bid: AdvValue,
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundResult {
    pub winner: Side,
    pub p1_budget: AdvValue,
    pub vertex: usize,
    pub advantage_used: bool,
}

fn check_action(g: &FrugalParityGame, v: usize, player: Side, budget: AdvValue, a: Action) -> Result<(), PlayError> {
    if a.bid > budget || (a.bid.has_advantage() && !budget.has_advantage()) {
        return Err(PlayError::IllegalBid {
            player,
            bid: a.bid,
            budget,
        });
    }
    if !g.successors(v).contains(&a.target) {
        return Err(PlayError::IllegalMove {
            player,
            from: g.name(v).to_string(),
            to: g.name(a.target).to_string(),
        });
    }
    Ok(())
}

/// Resolves one bidding round at `⟨v, B1⟩`.
pub fn apply_bids(
    g: &FrugalParityGame,
    v: usize,
    p1_budget: AdvValue,
    a1: Action,
    a2: Action,
) -> Result<RoundResult, PlayError> {
    if g.is_sink(v) {
        return Err(PlayError::Finished);
    }
    let p2_budget = p1_budget.opponent(g.k())?;
    check_action(g, v, Side::Player1, p1_budget, a1)?;
    check_action(g, v, Side::Player2, p2_budget, a2)?;
    let (p1_won, level) = resolve_round(p1_budget.level(), a1.bid.level(), a2.bid.level());
    let (winner, a) = if p1_won {
        (Side::Player1, a1)
    } else {
        (Side::Player2, a2)
    };
    Ok(RoundResult {
        winner,
        p1_budget: AdvValue::from_level(level),
        vertex: a.target,
        advantage_used: a.bid.has_advantage(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HumanSide {
    Player1,
    Player2,
    None,
}

impl HumanSide {
    fn plays(self, side: Side) -> bool {
        matches!(
            (self, side),
            (HumanSide::Player1, Side::Player1) | (HumanSide::Player2, Side::Player2)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategySource {
    Certified,
    Oracle,
    Heuristic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionOptions {
    pub human: HumanSide,
    pub start: String,
    pub p1_budget: AdvValue,
    #[serde(default = "default_source")]
    pub source: StrategySource,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_max_states")]
    pub max_states: usize,
}

fn default_source() -> StrategySource {
    StrategySource::Certified
}

fn default_horizon() -> usize {
    200
}

fn default_max_states() -> usize {
    DEFAULT_MAX_STATES
}

impl SessionOptions {
    pub fn new(human: HumanSide, start: &str, p1_budget: AdvValue) -> Self {
        SessionOptions {
            human,
            start: start.to_string(),
            p1_budget,
            source: default_source(),
            horizon: default_horizon(),
            max_states: default_max_states(),
        }
    }
}

struct Certified {
    cert: CertGame,
    sol: Solution,
    cstar: usize,
    spare: u64,
    restarts: usize,
}

enum Brain {
    Certified(Box<Certified>),
    Oracle(Box<OracleSolution>),
    Heuristic,
}

impl Brain {
    fn source(&self) -> StrategySource {
        match self {
            Brain::Certified(_) => StrategySource::Certified,
            Brain::Oracle(_) => StrategySource::Oracle,
            Brain::Heuristic => StrategySource::Heuristic,
        }
    }
}

/// The config of `v` whose budget has the mark of `b`.
fn agreeing(cert: &CertGame, v: usize, b: AdvValue) -> Option<(usize, AdvValue)> {
    let t = cert.thresholds.get(v).budget()?;
    let cand = if t.has_advantage() == b.has_advantage() {
        t
    } else {
        t.succ()
    };
    if cand > b {
        return None;
    }
    cert.config(v, Threshold::Budget(cand)).map(|n| (n, cand))
}

fn config_budget(cert: &CertGame, n: usize) -> AdvValue {
    match cert.nodes[n] {
        CertNode::Config {
            budget: Threshold::Budget(b),
            ..
        } => b,
        _ => unreachable!("c* is a budgeted config node"),
    }
}

fn certified_brain(
    g: &FrugalParityGame,
    th: &ThresholdMap,
    side: Side,
    v: usize,
    budget: AdvValue,
) -> Result<Option<Certified>, PlayError> {
    let cert = CertGame::build(g, th, side)?;
    let Some((cstar, cb)) = agreeing(&cert, v, budget) else {
        return Ok(None);
    };
    let sol = cert.solve();
    if g.is_sink(v) || sol.winner[cstar] != Player::Protagonist {
        return Ok(None);
    }
    Ok(Some(Certified {
        cert,
        sol,
        cstar,
        spare: budget.magnitude() - cb.magnitude(),
        restarts: 0,
    }))
}

impl Certified {
    fn action(&self) -> Action {
        let r = self.sol.strategy[self.cstar].expect("winning config has a choice");
        match self.cert.nodes[r] {
            CertNode::Response { target, bid, .. } => Action { bid, target },
            CertNode::Config { .. } => unreachable!("config nodes lead to response nodes"),
        }
    }

    /// Follows the cert edge matching the round and restarts on `Top`.
    fn update(&mut self, played: Action, won: bool, next: usize, budget: AdvValue) -> Result<RoundEvent, PlayError> {
        if self.cert.game.is_sink(next) {
            return Ok(RoundEvent::Followed);
        }
        let cb = config_budget(&self.cert, self.cstar);
        let x = if won {
            cb.ominus(played.bid)?
        } else {
            let beat = crate::average::beating_bid(played.bid, cb);
            cb.oplus(beat)?
        };
        let follow = self.cert.config(next, Threshold::Budget(x));
        if let Some(n) = follow {
            if x.has_advantage() == budget.has_advantage() && x <= budget {
                self.cstar = n;
                self.spare = budget.magnitude() - x.magnitude();
                return Ok(RoundEvent::Followed);
            }
        }
        let (n, cand) = agreeing(&self.cert, next, budget).expect("budget stays above the threshold");
        self.cstar = n;
        self.spare = budget.magnitude() - cand.magnitude();
        if follow.is_none() {
            self.restarts += 1;
            Ok(RoundEvent::Restart)
        } else {
            Ok(RoundEvent::Resync)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundEvent {
    Followed,
    Restart,
    Resync,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedAction {
    pub bid: AdvValue,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bids {
    pub player1: NamedAction,
    pub player2: NamedAction,
}

/// One line of the round log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub vertex: String,
    pub p1_budget: AdvValue,
    pub bids: Bids,
    pub winner: Side,
    pub advantage_used: bool,
    pub next_vertex: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Running,
    /// The play reached a sink.
    Finished {
        winner: Side,
        sink: String,
        p1_budget: AdvValue,
    },
    /// The horizon ran out; the winner is read off the largest priority of
    /// the second half of the play.
    Provisional {
        winner: Side,
        max_priority: u32,
    },
}

/// Engine-side bookkeeping exposed in session state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineView {
    pub side: Side,
    pub source: StrategySource,
    pub best_effort: bool,
    pub cert_vertex: Option<String>,
    pub spare: Option<u64>,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub human: HumanSide,
    pub vertex: String,
    pub p1_budget: AdvValue,
    pub p2_budget: AdvValue,
    pub advantage: Side,
    pub round: usize,
    pub outcome: Outcome,
    pub engines: Vec<EngineView>,
}

/// An interactive play.
pub struct Session {
    game: FrugalParityGame,
    thresholds: ThresholdMap,
    options: SessionOptions,
    vertex: usize,
    p1_budget: AdvValue,
    p2_budget: AdvValue,
    brains: [Option<Brain>; 2],
    committed: [Option<Action>; 2],
    visits: Vec<usize>,
    history: Vec<RoundRecord>,
    events: Vec<RoundEvent>,
    outcome: Outcome,
}

fn index(side: Side) -> usize {
    match side {
        Side::Player1 => 0,
        Side::Player2 => 1,
    }
}

impl Session {
    pub fn new(game: FrugalParityGame, options: SessionOptions) -> Result<Self, PlayError> {
        let (th, _) = solve_frugal_parity(&game)?;
        Self::with_thresholds(game, th, options)
    }

    pub fn with_thresholds(
        game: FrugalParityGame,
        thresholds: ThresholdMap,
        options: SessionOptions,
    ) -> Result<Self, PlayError> {
        let vertex = game.index_of(&options.start)?;
        let p1_budget = options.p1_budget;
        let p2_budget = p1_budget.opponent(game.k())?;
        let mut brains = [None, None];
        for side in [Side::Player1, Side::Player2] {
            if options.human.plays(side) {
                continue;
            }
            let budget = if side == Side::Player1 { p1_budget } else { p2_budget };
            let brain = match options.source {
                StrategySource::Certified => match certified_brain(&game, &thresholds, side, vertex, budget)? {
                    Some(c) => Brain::Certified(Box::new(c)),
                    None => Brain::Heuristic,
                },
                StrategySource::Oracle => {
                    let order = if side == Side::Player1 {
                        Order::P1First
                    } else {
                        Order::P2First
                    };
                    Brain::Oracle(Box::new(OracleSolution::solve(&game, order, options.max_states)?))
                }
                StrategySource::Heuristic => Brain::Heuristic,
            };
            brains[index(side)] = Some(brain);
        }
        let mut s = Session {
            game,
            thresholds,
            options,
            vertex,
            p1_budget,
            p2_budget,
            brains,
            committed: [None, None],
            visits: vec![vertex],
            history: Vec::new(),
            events: Vec::new(),
            outcome: Outcome::Running,
        };
        s.check_sink();
        Ok(s)
    }

    pub fn game(&self) -> &FrugalParityGame {
        &self.game
    }

    pub fn thresholds(&self) -> &ThresholdMap {
        &self.thresholds
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    pub fn vertex(&self) -> usize {
        self.vertex
    }

    pub fn p1_budget(&self) -> AdvValue {
        self.p1_budget
    }

    pub fn p2_budget(&self) -> AdvValue {
        self.p2_budget
    }

    pub fn history(&self) -> &[RoundRecord] {
        &self.history
    }

    /// What happened to each engine's cert vertex per round.
    pub fn events(&self) -> &[RoundEvent] {
        &self.events
    }

    pub fn outcome(&self) -> &Outcome {
        &self.outcome
    }

    pub fn is_over(&self) -> bool {
        self.outcome != Outcome::Running
    }

    pub fn source(&self, side: Side) -> Option<StrategySource> {
        self.brains[index(side)].as_ref().map(Brain::source)
    }

    pub fn spare(&self, side: Side) -> Option<u64> {
        match &self.brains[index(side)] {
            Some(Brain::Certified(c)) => Some(c.spare),
            _ => None,
        }
    }

    pub fn restarts(&self, side: Side) -> usize {
        match &self.brains[index(side)] {
            Some(Brain::Certified(c)) => c.restarts,
            _ => 0,
        }
    }

    /// The cert vertex the engine for `side` currently simulates.
    pub fn cert_vertex(&self, side: Side) -> Option<(usize, AdvValue)> {
        match &self.brains[index(side)] {
            Some(Brain::Certified(c)) => match c.cert.nodes[c.cstar] {
                CertNode::Config {
                    vertex,
                    budget: Threshold::Budget(b),
                } => Some((vertex, b)),
                _ => None,
            },
            _ => None,
        }
    }

    fn heuristic(&self, side: Side) -> Action {
        let t = |u: usize| match side {
            Side::Player1 => self.thresholds.get(u).magnitude(self.game.k()),
            Side::Player2 => self.game.k() + 1 - self.thresholds.get(u).magnitude(self.game.k()),
        };
        let target = *self
            .game
            .successors(self.vertex)
            .iter()
            .min_by_key(|&&u| (t(u), u))
            .expect("non-sink vertex has successors");
        Action {
            bid: AdvValue::ZERO,
            target,
        }
    }

    /// The engine's action for `side` in the current round, computed from
    /// the session state alone.
    pub fn engine_action(&self, side: Side) -> Option<Action> {
        let brain = self.brains[index(side)].as_ref()?;
        if self.is_over() {
            return None;
        }
        Some(match brain {
            Brain::Certified(c) => c.action(),
            Brain::Oracle(o) => o
                .commitment(self.vertex, self.p1_budget)
                .map(|(bid, target)| Action { bid, target })
                .unwrap_or_else(|| self.heuristic(side)),
            Brain::Heuristic => self.heuristic(side),
        })
    }

    /// Fixes the engines' actions for the current round before any human
    /// input is read.
    pub fn commit(&mut self) -> [Option<Action>; 2] {
        for side in [Side::Player1, Side::Player2] {
            let i = index(side);
            if self.committed[i].is_none() {
                self.committed[i] = self.engine_action(side);
            }
        }
        self.committed
    }

    /// Plays one round. `human` is the human's action, ignored when no side
    /// is human.
    pub fn step(&mut self, human: Option<Action>) -> Result<RoundRecord, PlayError> {
        if self.is_over() {
            return Err(PlayError::Finished);
        }
        let mut acts = self.commit();
        for side in [Side::Player1, Side::Player2] {
            if self.options.human.plays(side) {
                acts[index(side)] = Some(human.ok_or(PlayError::MissingAction(side))?);
            }
        }
        let a1 = acts[0].ok_or(PlayError::MissingAction(Side::Player1))?;
        let a2 = acts[1].ok_or(PlayError::MissingAction(Side::Player2))?;
        let res = apply_bids(&self.game, self.vertex, self.p1_budget, a1, a2)?;
        let (p1, p2) = match res.winner {
            Side::Player1 => (self.p1_budget.ominus(a1.bid)?, self.p2_budget.oplus(a1.bid)?),
            Side::Player2 => (self.p1_budget.oplus(a2.bid)?, self.p2_budget.ominus(a2.bid)?),
        };
        assert_eq!(p1, res.p1_budget, "round resolution and ledger disagree");
        assert_eq!(p1.oplus(p2)?, self.game.total(), "budgets no longer sum to k*");
        let name = |v: usize| self.game.name(v).to_string();
        let record = RoundRecord {
            round: self.history.len() + 1,
            vertex: name(self.vertex),
            p1_budget: self.p1_budget,
            bids: Bids {
                player1: NamedAction {
                    bid: a1.bid,
                    target: name(a1.target),
                },
                player2: NamedAction {
                    bid: a2.bid,
                    target: name(a2.target),
                },
            },
            winner: res.winner,
            advantage_used: res.advantage_used,
            next_vertex: name(res.vertex),
        };
        for side in [Side::Player1, Side::Player2] {
            let budget = if side == Side::Player1 { p1 } else { p2 };
            if let Some(Brain::Certified(c)) = &mut self.brains[index(side)] {
                let played = acts[index(side)].expect("engine committed");
                let ev = c.update(played, res.winner == side, res.vertex, budget)?;
                self.events.push(ev);
            }
        }
        self.p1_budget = p1;
        self.p2_budget = p2;
        self.vertex = res.vertex;
        self.committed = [None, None];
        self.visits.push(res.vertex);
        self.history.push(record.clone());
        self.check_sink();
        if !self.is_over() && self.history.len() >= self.options.horizon {
            let suffix = &self.visits[self.visits.len() / 2..];
            let max_priority = suffix.iter().filter_map(|&v| self.game.priority(v)).max().unwrap_or(0);
            let winner = if max_priority % 2 == 1 {
                Side::Player1
            } else {
                Side::Player2
            };
            self.outcome = Outcome::Provisional { winner, max_priority };
        }
        Ok(record)
    }

    fn check_sink(&mut self) {
        if let Some(fr) = self.game.frugal(self.vertex) {
            let winner = if fr.admits(self.p1_budget) {
                Side::Player1
            } else {
                Side::Player2
            };
            self.outcome = Outcome::Finished {
                winner,
                sink: self.game.name(self.vertex).to_string(),
                p1_budget: self.p1_budget,
            };
        }
    }

    /// Resolves a named action for the human.
    pub fn action(&self, bid: AdvValue, target: &str) -> Result<Action, PlayError> {
        Ok(Action {
            bid,
            target: self.game.index_of(target)?,
        })
    }

    pub fn state(&self) -> SessionState {
        let engines = [Side::Player1, Side::Player2]
            .into_iter()
            .filter_map(|side| {
                let brain = self.brains[index(side)].as_ref()?;
                Some(EngineView {
                    side,
                    source: brain.source(),
                    best_effort: matches!(brain, Brain::Heuristic),
                    cert_vertex: self
                        .cert_vertex(side)
                        .map(|(v, b)| format!("⟨{},{}⟩", self.game.name(v), b)),
                    spare: self.spare(side),
                    restarts: self.restarts(side),
                })
            })
            .collect();
        SessionState {
            human: self.options.human,
            vertex: self.game.name(self.vertex).to_string(),
            p1_budget: self.p1_budget,
            p2_budget: self.p2_budget,
            advantage: if self.p1_budget.has_advantage() {
                Side::Player1
            } else {
                Side::Player2
            },
            round: self.history.len(),
            outcome: self.outcome.clone(),
            engines,
        }
    }
}
