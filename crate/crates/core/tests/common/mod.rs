#![allow(dead_code)]

use bidgame::{AdvValue, FrugalParityGame, Threshold, ThresholdMap};
use rand::Rng;

pub const FIX_A_EDGES: [(&str, &str); 6] = [
    ("v0", "v0"),
    ("v0", "v1"),
    ("v1", "v0"),
    ("v1", "v2"),
    ("v2", "v0"),
    ("v2", "t"),
];

pub fn fix_a() -> FrugalParityGame {
    FrugalParityGame::new(
        5,
        &[("v0", 2), ("v1", 2), ("v2", 2)],
        &[("t", Threshold::plain(2))],
        &FIX_A_EDGES,
    )
    .unwrap()
}

pub fn fix_b() -> FrugalParityGame {
    let mut edges = FIX_A_EDGES.to_vec();
    edges.push(("t", "v1"));
    FrugalParityGame::new(5, &[("v0", 1), ("v1", 1), ("v2", 1), ("t", 2)], &[], &edges).unwrap()
}

pub fn map(g: &FrugalParityGame, pairs: &[(&str, &str)]) -> ThresholdMap {
    let named = pairs.iter().map(|(k, v)| (k.to_string(), v.parse().unwrap())).collect();
    ThresholdMap::from_named(g, &named).unwrap()
}

pub struct Shape {
    pub non_sinks: usize,
    pub sinks: usize,
    pub k: u64,
    pub priorities: Vec<u32>,
}

/// A random game with up to the given sizes; every non-sink has one to three
/// successors.
pub fn random_game(rng: &mut impl Rng, shape: &Shape) -> FrugalParityGame {
    let n = rng.gen_range(1..=shape.non_sinks);
    let s = rng.gen_range(0..=shape.sinks);
    let k = rng.gen_range(0..=shape.k);
    let names: Vec<String> = (0..n)
        .map(|i| format!("v{i}"))
        .chain((0..s).map(|i| format!("s{i}")))
        .collect();
    let vertices: Vec<(&str, u32)> = names[..n]
        .iter()
        .map(|id| (id.as_str(), shape.priorities[rng.gen_range(0..shape.priorities.len())]))
        .collect();
    let sinks: Vec<(&str, Threshold)> = names[n..]
        .iter()
        .map(|id| {
            let l = rng.gen_range(0..=2 * k + 2);
            let fr = if l == 2 * k + 2 {
                Threshold::Top
            } else {
                Threshold::Budget(AdvValue::from_level(l))
            };
            (id.as_str(), fr)
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        let deg = rng.gen_range(1..=3.min(n + s));
        let mut targets: Vec<usize> = (0..n + s).collect();
        for _ in 0..deg {
            let j = rng.gen_range(0..targets.len());
            edges.push((names[i].as_str(), names[targets.swap_remove(j)].as_str()));
        }
    }
    FrugalParityGame::new(k, &vertices, &sinks, &edges).unwrap()
}
