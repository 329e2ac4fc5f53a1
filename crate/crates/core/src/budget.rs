//! Budgets with an advantage mark and threshold values.
//!
//! A budget `m` or `m*` is stored as a single level `2m + adv`, so the total
//! order `0 < 0* < 1 < 1* < ...` is the order on levels and `⊕`/`⊖` are level
//! addition and subtraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BudgetError {
    #[error("pred(0) is undefined")]
    PredOfZero,
    #[error("{0} ⊕ {1} is undefined: both carry the advantage")]
    DoubleAdvantage(AdvValue, AdvValue),
    #[error("{0} ⊖ {1} is undefined")]
    BadSubtraction(AdvValue, AdvValue),
    #[error("budget magnitude overflow")]
    Overflow,
    #[error("invalid budget literal {0:?}")]
    Literal(String),
    #[error("{value} exceeds the total budget {total}")]
    OutOfRange { value: Threshold, total: AdvValue },
}

/// A budget in `ℕ*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AdvValue(u64);

const MAX_LEVEL: u64 = u64::MAX / 4;

impl AdvValue {
    pub const ZERO: AdvValue = AdvValue(0);

    pub fn new(magnitude: u64, advantage: bool) -> Result<Self, BudgetError> {
        magnitude
            .checked_mul(2)
            .and_then(|l| l.checked_add(advantage as u64))
            .filter(|&l| l <= MAX_LEVEL)
            .map(AdvValue)
            .ok_or(BudgetError::Overflow)
    }

    pub fn plain(magnitude: u64) -> Self {
        Self::new(magnitude, false).expect("magnitude in range")
    }

    pub fn marked(magnitude: u64) -> Self {
        Self::new(magnitude, true).expect("magnitude in range")
    }

    pub fn from_level(level: u64) -> Self {
        assert!(level <= MAX_LEVEL, "budget level out of range");
        AdvValue(level)
    }

    /// `k*`, the total budget of a game with parameter `k`.
    pub fn total(k: u64) -> Self {
        Self::marked(k)
    }

    pub fn level(self) -> u64 {
        self.0
    }

    pub fn magnitude(self) -> u64 {
        self.0 / 2
    }

    pub fn has_advantage(self) -> bool {
        self.0 % 2 == 1
    }

    /// `|x|` as an unmarked budget.
    pub fn unmarked(self) -> Self {
        AdvValue(self.0 & !1)
    }

    pub fn succ(self) -> Self {
        Self::from_level(self.0 + 1)
    }

    pub fn pred(self) -> Result<Self, BudgetError> {
        self.0.checked_sub(1).map(AdvValue).ok_or(BudgetError::PredOfZero)
    }

    pub fn oplus(self, other: AdvValue) -> Result<Self, BudgetError> {
        if self.has_advantage() && other.has_advantage() {
            return Err(BudgetError::DoubleAdvantage(self, other));
        }
        let level = self.0.checked_add(other.0).ok_or(BudgetError::Overflow)?;
        if level > MAX_LEVEL {
            return Err(BudgetError::Overflow);
        }
        Ok(AdvValue(level))
    }

    /// `x ⊖ y`, defined when `y ≤ x` and `y` is marked only if `x` is.
    pub fn ominus(self, other: AdvValue) -> Result<Self, BudgetError> {
        if other > self || (other.has_advantage() && !self.has_advantage()) {
            return Err(BudgetError::BadSubtraction(self, other));
        }
        Ok(AdvValue(self.0 - other.0))
    }

    /// The budget of the other player when this one holds `self` out of `k*`.
    pub fn opponent(self, k: u64) -> Result<Self, BudgetError> {
        AdvValue::total(k).ominus(self)
    }
}

impl fmt::Display for AdvValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.has_advantage() {
            write!(f, "{}*", self.magnitude())
        } else {
            write!(f, "{}", self.magnitude())
        }
    }
}

impl FromStr for AdvValue {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BudgetError::Literal(s.to_string());
        let (digits, adv) = match s.strip_suffix('*') {
            Some(d) => (d, true),
            None => (s, false),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let m: u64 = digits.parse().map_err(|_| bad())?;
        AdvValue::new(m, adv).map_err(|_| bad())
    }
}

impl Serialize for AdvValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AdvValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A threshold: a budget in `[0, k*]`, or `Top` when no budget suffices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Threshold {
    Budget(AdvValue),
    Top,
}

impl Threshold {
    pub const ZERO: Threshold = Threshold::Budget(AdvValue::ZERO);

    pub fn plain(m: u64) -> Self {
        Threshold::Budget(AdvValue::plain(m))
    }

    pub fn marked(m: u64) -> Self {
        Threshold::Budget(AdvValue::marked(m))
    }

    /// Builds a threshold from a magnitude and mark, mapping anything above
    /// `k*` to `Top`.
    pub fn capped(magnitude: u64, advantage: bool, k: u64) -> Self {
        match AdvValue::new(magnitude, advantage) {
            Ok(b) if b <= AdvValue::total(k) => Threshold::Budget(b),
            _ => Threshold::Top,
        }
    }

    pub fn budget(self) -> Option<AdvValue> {
        match self {
            Threshold::Budget(b) => Some(b),
            Threshold::Top => None,
        }
    }

    pub fn is_top(self) -> bool {
        self == Threshold::Top
    }

    /// `|x|`, with `|Top| = k + 1`.
    pub fn magnitude(self, k: u64) -> u64 {
        match self {
            Threshold::Budget(b) => b.magnitude(),
            Threshold::Top => k + 1,
        }
    }

    pub fn is_marked(self) -> bool {
        self.budget().is_some_and(AdvValue::has_advantage)
    }

    /// Whether budget `b` meets this threshold.
    pub fn admits(self, b: AdvValue) -> bool {
        Threshold::Budget(b) >= self
    }

    pub fn check_range(self, k: u64) -> Result<Self, BudgetError> {
        match self {
            Threshold::Budget(b) if b > AdvValue::total(k) => Err(BudgetError::OutOfRange {
                value: self,
                total: AdvValue::total(k),
            }),
            _ => Ok(self),
        }
    }

    /// Converts a Player 1 threshold into the matching Player 2 threshold.
    ///
    /// `0 ↦ Top`, `Top ↦ 0`, otherwise `x ↦ k* ⊖ pred(x)`.
    pub fn flip(self, k: u64) -> Result<Self, BudgetError> {
        match self {
            Threshold::Top => Ok(Threshold::ZERO),
            Threshold::Budget(b) if b == AdvValue::ZERO => Ok(Threshold::Top),
            Threshold::Budget(b) => Ok(Threshold::Budget(AdvValue::total(k).ominus(b.pred()?)?)),
        }
    }
}

impl From<AdvValue> for Threshold {
    fn from(b: AdvValue) -> Self {
        Threshold::Budget(b)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Budget(b) => b.fmt(f),
            Threshold::Top => f.write_str("top"),
        }
    }
}

impl FromStr for Threshold {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top" | "⊤" => Ok(Threshold::Top),
            _ => s.parse().map(Threshold::Budget),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
