//! The average property and the bidding strategy it induces.

use serde::{Deserialize, Serialize};

use crate::budget::{AdvValue, Threshold};
use crate::game::{FrugalParityGame, ThresholdMap};

/// Largest and smallest threshold among the successors of `v`.
pub fn neighbor_extremes(g: &FrugalParityGame, t: &ThresholdMap, v: usize) -> (Threshold, Threshold) {
    let vals = g.successors(v).iter().map(|&u| t.get(u));
    let hi = vals.clone().max().expect("non-sink vertex has successors");
    let lo = vals.min().expect("non-sink vertex has successors");
    (hi, lo)
}

/// The average of two thresholds `a ≥ b` in a game with parameter `k`.
pub fn average(a: Threshold, b: Threshold, k: u64) -> Threshold {
    let sum = a.magnitude(k) + b.magnitude(k);
    let half = sum / 2;
    let marked = match (sum.is_multiple_of(2), b.is_marked()) {
        (true, false) => false,
        (false, true) => {
            return Threshold::capped(half + 1, false, k);
        }
        _ => true,
    };
    Threshold::capped(half, marked, k)
}

/// `⌊(|T⁺|+|T⁻|)/2⌋ + ε` over the successors of `v`.
pub fn average_at(g: &FrugalParityGame, t: &ThresholdMap, v: usize) -> Threshold {
    let (hi, lo) = neighbor_extremes(g, t, v);
    average(hi, lo, g.k())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AverageViolation {
    pub vertex: String,
    pub expected: Threshold,
    pub found: Threshold,
}

/// Vertices where `t` disagrees with the average of its successors, or with
/// the frugal value on a sink.
pub fn check_average(g: &FrugalParityGame, t: &ThresholdMap) -> Vec<AverageViolation> {
    g.vertices()
        .filter_map(|v| {
            let expected = match g.frugal(v) {
                Some(fr) => fr,
                None => average_at(g, t, v),
            };
            (expected != t.get(v)).then(|| AverageViolation {
                vertex: g.name(v).to_string(),
                expected,
                found: t.get(v),
            })
        })
        .collect()
}

/// Successors Player 1 may move to when winning a bid at `v`.
pub fn allowed(g: &FrugalParityGame, t: &ThresholdMap, v: usize) -> Vec<usize> {
    let (_, lo) = neighbor_extremes(g, t, v);
    let bound = match lo {
        Threshold::Budget(b) if b.has_advantage() => Threshold::Budget(b.succ()),
        _ => lo,
    };
    g.successors(v)
        .iter()
        .copied()
        .filter(|&u| {
            if lo.is_marked() {
                t.get(u) <= bound
            } else {
                t.get(u) == lo
            }
        })
        .collect()
}

/// The bid prescribed by a threshold map before matching the bidder's mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseBid {
    Bid(AdvValue),
    /// All successors share one marked value; the bidder offers `0` and
    /// leaves the round to the other player.
    Yield,
}

pub fn base_bid(g: &FrugalParityGame, t: &ThresholdMap, v: usize) -> BaseBid {
    let k = g.k();
    let (hi, lo) = neighbor_extremes(g, t, v);
    let diff = hi.magnitude(k) - lo.magnitude(k);
    let half = diff / 2;
    let bid = match (diff % 2 == 0, lo.is_marked()) {
        (true, false) => AdvValue::plain(half),
        (false, true) => AdvValue::plain(half),
        (true, true) => match AdvValue::plain(half).pred() {
            Ok(b) => b,
            Err(_) => return BaseBid::Yield,
        },
        (false, false) => AdvValue::marked(half),
    };
    BaseBid::Bid(bid)
}

/// The bid actually placed at `v` with budget `budget`.
pub fn strategy_bid(g: &FrugalParityGame, t: &ThresholdMap, v: usize, budget: AdvValue) -> AdvValue {
    let bid = match base_bid(g, t, v) {
        BaseBid::Yield => AdvValue::ZERO,
        BaseBid::Bid(b) if b.has_advantage() == budget.has_advantage() => b,
        BaseBid::Bid(b) => b.succ(),
    };
    bid.min(budget)
}

/// Bids that keep the budget invariant at `v` with budget `budget`: the
/// strategy bid, plus the unmarked base bid when the bidder holds the
/// advantage but the base bid does not need it.
pub fn bid_options(g: &FrugalParityGame, t: &ThresholdMap, v: usize, budget: AdvValue) -> Vec<AdvValue> {
    let main = strategy_bid(g, t, v, budget);
    match base_bid(g, t, v) {
        BaseBid::Bid(b) if budget.has_advantage() && !b.has_advantage() && b < main => vec![main, b],
        _ => vec![main],
    }
}

/// Least bid with which the other player beats `bid` when the bidder holds
/// `budget`.
pub fn beating_bid(bid: AdvValue, budget: AdvValue) -> AdvValue {
    if !bid.has_advantage() && budget.has_advantage() {
        bid
    } else {
        bid.succ()
    }
}
