//! Frugal parity games and their JSON document form.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{AdvValue, BudgetError, Threshold};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game: {0}")]
    Invalid(ValidationReport),
    #[error("objective {kind:?}: {message}")]
    Objective { kind: ObjectiveKind, message: String },
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("threshold map: {0}")]
    Map(String),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Reachability,
    FrugalReachability,
    Safety,
    FrugalSafety,
    Buchi,
    CoBuchi,
    Parity,
    FrugalParity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accepting: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveDoc {
    pub kind: ObjectiveKind,
    #[serde(default)]
    pub params: ObjectiveParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frugal: Option<Threshold>,
}

/// The on-disk form of a game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    pub k: u64,
    pub vertices: Vec<VertexDoc>,
    #[serde(default)]
    pub sinks: Vec<SinkDoc>,
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveDoc>,
}

impl GameDoc {
    pub fn from_json(s: &str) -> Result<Self, GameError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GameError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub subject: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: &str, subject: impl Into<String>) {
        self.violations.push(Violation {
            rule: rule.to_string(),
            subject: subject.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.rule, v.subject)?;
        }
        Ok(())
    }
}

/// Structural checks that do not depend on the objective header.
pub fn validate(doc: &GameDoc) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = HashMap::new();
    for v in &doc.vertices {
        if seen.insert(v.id.as_str(), false).is_some() {
            report.push("duplicate-id", &v.id);
        }
    }
    for s in &doc.sinks {
        match seen.insert(s.id.as_str(), true) {
            Some(false) => report.push("vertex-and-sink", &s.id),
            Some(true) => report.push("duplicate-id", &s.id),
            None => {}
        }
        if let Some(fr) = s.frugal {
            if fr.check_range(doc.k).is_err() {
                report.push("frugal-out-of-range", format!("{}={}", s.id, fr));
            }
        }
    }
    if seen.is_empty() {
        report.push("empty-game", "no vertices");
    }
    let mut has_out: BTreeSet<&str> = BTreeSet::new();
    for (a, b) in &doc.edges {
        for end in [a, b] {
            if !seen.contains_key(end.as_str()) {
                report.push("unknown-endpoint", format!("{a}->{b}"));
            }
        }
        if seen.get(a.as_str()) == Some(&true) {
            report.push("sink-has-successor", format!("{a}->{b}"));
        }
        has_out.insert(a.as_str());
    }
    for v in &doc.vertices {
        if !has_out.contains(v.id.as_str()) && seen.get(v.id.as_str()) == Some(&false) {
            report.push("no-successor", &v.id);
        }
    }
    if doc.objective.is_none() {
        for v in &doc.vertices {
            if v.priority.is_none() {
                report.push("missing-priority", &v.id);
            }
        }
        for s in &doc.sinks {
            if s.frugal.is_none() {
                report.push("missing-frugal", &s.id);
            }
        }
    }
    report
}

/// A validated game in frugal-parity form.
///
/// Vertices are indexed `0..n` in lexicographic order of their ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrugalParityGame {
    k: u64,
    names: Vec<String>,
    index: HashMap<String, usize>,
    priority: Vec<Option<u32>>,
    frugal: Vec<Option<Threshold>>,
    succ: Vec<Vec<usize>>,
}

impl FrugalParityGame {
    /// Builds a game; every vertex not listed in `sinks` needs a priority.
    pub fn new(
        k: u64,
        vertices: &[(&str, u32)],
        sinks: &[(&str, Threshold)],
        edges: &[(&str, &str)],
    ) -> Result<Self, GameError> {
        let doc = GameDoc {
            schema: None,
            k,
            vertices: vertices
                .iter()
                .map(|&(id, p)| VertexDoc {
                    id: id.to_string(),
                    priority: Some(p),
                })
                .collect(),
            sinks: sinks
                .iter()
                .map(|&(id, fr)| SinkDoc {
                    id: id.to_string(),
                    frugal: Some(fr),
                })
                .collect(),
            edges: edges.iter().map(|&(a, b)| (a.to_string(), b.to_string())).collect(),
            objective: None,
        };
        normalize_objective(&doc)
    }

    pub fn from_json(s: &str) -> Result<Self, GameError> {
        normalize_objective(&GameDoc::from_json(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GameError> {
        normalize_objective(&GameDoc::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GameError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Canonical JSON text.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc()).expect("game serializes");
        s.push('\n');
        s
    }

    pub fn to_doc(&self) -> GameDoc {
        let mut edges = Vec::new();
        let mut vertices = Vec::new();
        let mut sinks = Vec::new();
        for v in self.vertices() {
            match self.frugal[v] {
                Some(fr) => sinks.push(SinkDoc {
                    id: self.names[v].clone(),
                    frugal: Some(fr),
                }),
                None => vertices.push(VertexDoc {
                    id: self.names[v].clone(),
                    priority: self.priority[v],
                }),
            }
            for &w in &self.succ[v] {
                edges.push((self.names[v].clone(), self.names[w].clone()));
            }
        }
        GameDoc {
            schema: Some(1),
            k: self.k,
            vertices,
            sinks,
            edges,
            objective: None,
        }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn total(&self) -> AdvValue {
        AdvValue::total(self.k)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.names.len()
    }

    pub fn non_sinks(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices().filter(|&v| !self.is_sink(v))
    }

    pub fn sinks(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices().filter(|&v| self.is_sink(v))
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, id: &str) -> Result<usize, GameError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GameError::UnknownVertex(id.to_string()))
    }

    pub fn is_sink(&self, v: usize) -> bool {
        self.frugal[v].is_some()
    }

    pub fn priority(&self, v: usize) -> Option<u32> {
        self.priority[v]
    }

    pub fn frugal(&self, v: usize) -> Option<Threshold> {
        self.frugal[v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.succ.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Distinct priorities of non-sink vertices, ascending.
    pub fn priorities(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.priority.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// Same vertex set; the listed vertices become sinks with the given values
    /// and lose their outgoing edges.
    pub fn with_sinks(&self, extra: &[(usize, Threshold)]) -> Self {
        let mut g = self.clone();
        for &(v, fr) in extra {
            g.priority[v] = None;
            g.frugal[v] = Some(fr);
            g.succ[v].clear();
        }
        g
    }

    pub(crate) fn with_priorities(&self, f: impl Fn(usize, u32) -> u32) -> Self {
        let mut g = self.clone();
        for v in g.vertices() {
            if let Some(p) = g.priority[v] {
                g.priority[v] = Some(f(v, p));
            }
        }
        g
    }
}

fn build(
    doc: &GameDoc,
    priority: &dyn Fn(&VertexDoc) -> Option<u32>,
    frugal: &dyn Fn(&SinkDoc) -> Option<Threshold>,
) -> Result<FrugalParityGame, GameError> {
    let mut entries: Vec<(String, Option<u32>, Option<Threshold>)> = Vec::new();
    for v in &doc.vertices {
        entries.push((v.id.clone(), priority(v), None));
    }
    for s in &doc.sinks {
        entries.push((s.id.clone(), None, frugal(s)));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let index: HashMap<String, usize> = entries.iter().enumerate().map(|(i, e)| (e.0.clone(), i)).collect();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); entries.len()];
    for (a, b) in &doc.edges {
        succ[index[a]].insert(index[b]);
    }
    let mut report = ValidationReport::default();
    for e in &entries {
        let is_sink = doc.sinks.iter().any(|s| s.id == e.0);
        if !is_sink && e.1.is_none() {
            report.push("missing-priority", &e.0);
        }
        if is_sink && e.2.is_none() {
            report.push("missing-frugal", &e.0);
        }
    }
    if !report.is_ok() {
        return Err(GameError::Invalid(report));
    }
    Ok(FrugalParityGame {
        k: doc.k,
        names: entries.iter().map(|e| e.0.clone()).collect(),
        index,
        priority: entries.iter().map(|e| e.1).collect(),
        frugal: entries.iter().map(|e| e.2).collect(),
        succ: succ.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

/// Validates a document and rewrites its objective into frugal-parity form.
pub fn normalize_objective(doc: &GameDoc) -> Result<FrugalParityGame, GameError> {
    let report = validate(doc);
    if !report.is_ok() {
        return Err(GameError::Invalid(report));
    }
    let Some(obj) = &doc.objective else {
        return build(doc, &|v| v.priority, &|s| s.frugal);
    };
    let kind = obj.kind;
    let accepting: BTreeSet<&str> = obj.params.accepting.iter().map(String::as_str).collect();
    for id in &accepting {
        if !doc.vertices.iter().any(|v| v.id == *id) {
            return Err(GameError::Objective {
                kind,
                message: format!("accepting vertex {id:?} is not a non-sink vertex"),
            });
        }
    }
    let needs_f = matches!(kind, ObjectiveKind::Buchi | ObjectiveKind::CoBuchi);
    if !needs_f && !accepting.is_empty() {
        return Err(GameError::Objective {
            kind,
            message: "accepting set only applies to buchi and co-buchi".into(),
        });
    }
    let default_fr = match kind {
        ObjectiveKind::Safety | ObjectiveKind::FrugalSafety => Threshold::Top,
        _ => Threshold::ZERO,
    };
    let frugal = |s: &SinkDoc| match kind {
        ObjectiveKind::Reachability => Some(Threshold::ZERO),
        ObjectiveKind::Safety => Some(Threshold::Top),
        _ => Some(s.frugal.unwrap_or(default_fr)),
    };
    match kind {
        ObjectiveKind::Reachability | ObjectiveKind::FrugalReachability => build(doc, &|_| Some(2), &frugal),
        ObjectiveKind::Safety | ObjectiveKind::FrugalSafety => build(doc, &|_| Some(1), &frugal),
        ObjectiveKind::Buchi => build(doc, &|v| Some(accepting.contains(v.id.as_str()) as u32), &frugal),
        ObjectiveKind::CoBuchi => build(doc, &|v| Some(1 + accepting.contains(v.id.as_str()) as u32), &frugal),
        ObjectiveKind::Parity | ObjectiveKind::FrugalParity => {
            if let Some(v) = doc.vertices.iter().find(|v| v.priority.is_none()) {
                return Err(GameError::Objective {
                    kind,
                    message: format!("vertex {:?} has no priority", v.id),
                });
            }
            build(doc, &|v| v.priority, &frugal)
        }
    }
}

/// The game seen from Player 2: priorities shifted by one, sink values flipped.
pub fn dualize(g: &FrugalParityGame) -> FrugalParityGame {
    let mut d = g.with_priorities(|_, p| p + 1);
    for v in d.vertices() {
        if let Some(fr) = d.frugal[v] {
            d.frugal[v] = Some(fr.flip(g.k).expect("sink values lie in [0, k*]"));
        }
    }
    d
}

/// An assignment of a threshold to every vertex of a game.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ThresholdMap {
    values: Vec<Threshold>,
}

impl ThresholdMap {
    pub fn new(g: &FrugalParityGame, values: Vec<Threshold>) -> Result<Self, GameError> {
        if values.len() != g.len() {
            return Err(GameError::Map(format!(
                "expected {} values, got {}",
                g.len(),
                values.len()
            )));
        }
        for v in &values {
            v.check_range(g.k())?;
        }
        Ok(ThresholdMap { values })
    }

    pub(crate) fn from_vec(values: Vec<Threshold>) -> Self {
        ThresholdMap { values }
    }

    pub fn uniform(g: &FrugalParityGame, t: Threshold) -> Self {
        ThresholdMap {
            values: vec![t; g.len()],
        }
    }

    pub fn from_named(g: &FrugalParityGame, named: &BTreeMap<String, Threshold>) -> Result<Self, GameError> {
        let mut values = vec![None; g.len()];
        for (id, t) in named {
            values[g.index_of(id)?] = Some(*t);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(v, t)| t.ok_or_else(|| GameError::Map(format!("no value for {:?}", g.name(v)))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(g, values)
    }

    pub fn from_json(g: &FrugalParityGame, s: &str) -> Result<Self, GameError> {
        let named: BTreeMap<String, Threshold> = serde_json::from_str(s)?;
        Self::from_named(g, &named)
    }

    pub fn load(g: &FrugalParityGame, path: impl AsRef<Path>) -> Result<Self, GameError> {
        Self::from_json(g, &std::fs::read_to_string(path)?)
    }

    pub fn get(&self, v: usize) -> Threshold {
        self.values[v]
    }

    pub fn set(&mut self, v: usize, t: Threshold) {
        self.values[v] = t;
    }

    pub fn values(&self) -> &[Threshold] {
        &self.values
    }

    pub fn named(&self, g: &FrugalParityGame) -> BTreeMap<String, Threshold> {
        g.vertices().map(|v| (g.name(v).to_string(), self.values[v])).collect()
    }

    pub fn lookup(&self, g: &FrugalParityGame, id: &str) -> Result<Threshold, GameError> {
        Ok(self.values[g.index_of(id)?])
    }

    /// Pointwise flip: the complement function of a Player 1 threshold map.
    pub fn complement(&self, k: u64) -> Self {
        ThresholdMap {
            values: self
                .values
                .iter()
                .map(|t| t.flip(k).expect("values lie in [0, k*]"))
                .collect(),
        }
    }

    /// Pointwise `≤`.
    pub fn le(&self, other: &ThresholdMap) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// `id=value` lines in id order.
    pub fn render(&self, g: &FrugalParityGame) -> String {
        g.vertices()
            .map(|v| format!("{}={}\n", g.name(v), self.values[v]))
            .collect()
    }

    pub fn to_json(&self, g: &FrugalParityGame) -> serde_json::Value {
        serde_json::to_value(self.named(g)).expect("map serializes")
    }
}
