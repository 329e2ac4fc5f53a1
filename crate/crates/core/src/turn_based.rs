//! Turn-based parity games, solved with Zielonka's recursive algorithm.
//!
//! Priorities follow the max convention: the protagonist wins a play whose
//! highest priority seen infinitely often is odd.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Player {
    /// Wins on odd priorities.
    Protagonist,
    /// Wins on even priorities.
    Antagonist,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Protagonist => Player::Antagonist,
            Player::Antagonist => Player::Protagonist,
        }
    }

    fn of_priority(p: u32) -> Player {
        if p % 2 == 1 {
            Player::Protagonist
        } else {
            Player::Antagonist
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TurnBasedGame {
    owner: Vec<Player>,
    priority: Vec<u32>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl TurnBasedGame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, owner: Player, priority: u32) -> usize {
        self.owner.push(owner);
        self.priority.push(priority);
        self.succ.push(Vec::new());
        self.pred.push(Vec::new());
        self.owner.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.succ[from].push(to);
        self.pred[to].push(from);
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn owner(&self, v: usize) -> Player {
        self.owner[v]
    }

    pub fn priority(&self, v: usize) -> u32 {
        self.priority[v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    /// Solves the game. Every node needs at least one successor.
    pub fn solve(&self) -> Solution {
        assert!(
            self.succ.iter().all(|s| !s.is_empty()),
            "every node of a turn-based game needs a successor"
        );
        let n = self.len();
        let mut sol = Solution {
            winner: vec![Player::Antagonist; n],
            strategy: vec![None; n],
        };
        let active = vec![true; n];
        self.zielonka(active, &mut sol);
        sol
    }

    /// Solves the subgame on `active`, writing winners and strategies into `sol`.
    fn zielonka(&self, mut active: Vec<bool>, sol: &mut Solution) {
        loop {
            let Some(d) = (0..self.len()).filter(|&v| active[v]).map(|v| self.priority[v]).max() else {
                return;
            };
            let i = Player::of_priority(d);
            let top: Vec<usize> = (0..self.len())
                .filter(|&v| active[v] && self.priority[v] == d)
                .collect();
            let (attr, attr_strategy) = self.attractor(&active, &top, i);
            let mut rest = active.clone();
            for v in 0..self.len() {
                if attr[v] {
                    rest[v] = false;
                }
            }
            self.zielonka(rest.clone(), sol);
            let opp_region: Vec<usize> = (0..self.len())
                .filter(|&v| rest[v] && sol.winner[v] == i.opponent())
                .collect();
            if opp_region.is_empty() {
                for v in 0..self.len() {
                    if !active[v] {
                        continue;
                    }
                    sol.winner[v] = i;
                    if attr[v] {
                        sol.strategy[v] = if self.owner[v] != i {
                            None
                        } else if let Some(s) = attr_strategy[v] {
                            Some(s)
                        } else {
                            self.succ[v].iter().copied().find(|&w| active[w])
                        };
                    }
                }
                return;
            }
            let (b, b_strategy) = self.attractor(&active, &opp_region, i.opponent());
            for v in 0..self.len() {
                if !b[v] {
                    continue;
                }
                sol.winner[v] = i.opponent();
                if b_strategy[v].is_some() {
                    sol.strategy[v] = b_strategy[v];
                }
                active[v] = false;
            }
        }
    }

    /// Attractor of `target` for `player` within `active`, with the
    /// attracting choice for the player's own nodes outside the target.
    fn attractor(&self, active: &[bool], target: &[usize], player: Player) -> (Vec<bool>, Vec<Option<usize>>) {
        let n = self.len();
        let mut inside = vec![false; n];
        let mut choice = vec![None; n];
        let mut count: Vec<usize> = (0..n)
            .map(|v| {
                if active[v] {
                    self.succ[v].iter().filter(|&&w| active[w]).count()
                } else {
                    0
                }
            })
            .collect();
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &t in target {
            if !inside[t] {
                inside[t] = true;
                queue.push_back(t);
            }
        }
        while let Some(w) = queue.pop_front() {
            for &u in &self.pred[w] {
                if !active[u] || inside[u] {
                    continue;
                }
                if self.owner[u] == player {
                    inside[u] = true;
                    choice[u] = Some(w);
                    queue.push_back(u);
                } else {
                    count[u] -= 1;
                    if count[u] == 0 {
                        inside[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        (inside, choice)
    }
}

/// Winning regions and memoryless winning strategies.
#[derive(Debug, Clone)]
pub struct Solution {
    pub winner: Vec<Player>,
    /// For a node owned by its winner, a successor that keeps winning.
    pub strategy: Vec<Option<usize>>,
}

impl Solution {
    pub fn winning_region(&self, p: Player) -> Vec<usize> {
        (0..self.winner.len()).filter(|&v| self.winner[v] == p).collect()
    }
}

/// Checks that `sol` is consistent: each player's strategy stays in its region,
/// the opponent cannot leave it, and the induced one-player games are won.
pub fn verify_solution(game: &TurnBasedGame, sol: &Solution) -> Result<(), String> {
    for p in [Player::Protagonist, Player::Antagonist] {
        for v in 0..game.len() {
            if sol.winner[v] != p {
                continue;
            }
            if game.owner[v] == p {
                let Some(s) = sol.strategy[v] else {
                    return Err(format!("node {v} has no strategy"));
                };
                if !game.succ[v].contains(&s) || sol.winner[s] != p {
                    return Err(format!("strategy at {v} leaves the region"));
                }
            } else if game.succ[v].iter().any(|&w| sol.winner[w] != p) {
                return Err(format!("opponent escapes at {v}"));
            }
        }
        // in the graph restricted by p's strategy, every cycle reachable
        // must have a max priority of p's parity: check via a sub-solve
        let mut restricted = TurnBasedGame::new();
        for v in 0..game.len() {
            restricted.add_node(p.opponent(), game.priority[v]);
        }
        for v in 0..game.len() {
            if sol.winner[v] != p {
                restricted.add_edge(v, v);
                continue;
            }
            if game.owner[v] == p {
                restricted.add_edge(v, sol.strategy[v].unwrap());
            } else {
                for &w in &game.succ[v] {
                    restricted.add_edge(v, w);
                }
            }
        }
        let sub = restricted.solve();
        for v in 0..game.len() {
            if sol.winner[v] == p && sub.winner[v] != p {
                return Err(format!("{p:?} strategy loses from {v}"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force for tiny games: the protagonist wins from v iff it wins
    /// against every memoryless opponent strategy with some memoryless strategy.
    fn brute(game: &TurnBasedGame) -> Vec<Player> {
        let n = game.len();
        let choices = |p: Player| -> Vec<Vec<usize>> {
            let mut all = vec![vec![]];
            for v in 0..n {
                let opts: Vec<usize> = if game.owner[v] == p {
                    game.succ[v].clone()
                } else {
                    vec![usize::MAX]
                };
                let mut next = vec![];
                for c in &all {
                    for &o in &opts {
                        let mut c2: Vec<usize> = c.clone();
                        c2.push(o);
                        next.push(c2);
                    }
                }
                all = next;
            }
            all
        };
        let outcome = |s1: &Vec<usize>, s2: &Vec<usize>, start: usize| -> Player {
            let mut seen = vec![usize::MAX; n];
            let mut path = vec![];
            let mut v = start;
            while seen[v] == usize::MAX {
                seen[v] = path.len();
                path.push(v);
                v = if game.owner[v] == Player::Protagonist {
                    s1[v]
                } else {
                    s2[v]
                };
            }
            let m = path[seen[v]..].iter().map(|&u| game.priority[u]).max().unwrap();
            Player::of_priority(m)
        };
        let s1s = choices(Player::Protagonist);
        let s2s = choices(Player::Antagonist);
        (0..n)
            .map(|v| {
                if s1s
                    .iter()
                    .any(|s1| s2s.iter().all(|s2| outcome(s1, s2, v) == Player::Protagonist))
                {
                    Player::Protagonist
                } else {
                    Player::Antagonist
                }
            })
            .collect()
    }

    fn arb_game() -> impl Strategy<Value = TurnBasedGame> {
        (1usize..7).prop_flat_map(|n| {
            (
                prop::collection::vec((any::<bool>(), 0u32..5), n),
                prop::collection::vec(prop::collection::vec(0..n, 1..3), n),
            )
                .prop_map(|(nodes, succ)| {
                    let mut g = TurnBasedGame::new();
                    for (own, p) in nodes {
                        g.add_node(if own { Player::Protagonist } else { Player::Antagonist }, p);
                    }
                    for (v, ws) in succ.into_iter().enumerate() {
                        let mut ws = ws;
                        ws.sort();
                        ws.dedup();
                        for w in ws {
                            g.add_edge(v, w);
                        }
                    }
                    g
                })
        })
    }

    #[test]
    fn simple_cycle() {
        let mut g = TurnBasedGame::new();
        let a = g.add_node(Player::Protagonist, 1);
        let b = g.add_node(Player::Antagonist, 2);
        let c = g.add_node(Player::Antagonist, 3);
        g.add_edge(a, b);
        g.add_edge(b, a);
        g.add_edge(b, c);
        g.add_edge(c, c);
        let sol = g.solve();
        assert_eq!(
            sol.winner,
            vec![Player::Antagonist; 2]
                .into_iter()
                .chain([Player::Protagonist])
                .collect::<Vec<_>>()
        );
        verify_solution(&g, &sol).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn matches_brute_force(g in arb_game()) {
            let sol = g.solve();
            prop_assert_eq!(&sol.winner, &brute(&g));
            prop_assert!(verify_solution(&g, &sol).is_ok());
        }
    }
}
