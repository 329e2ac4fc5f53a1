use std::collections::BTreeMap;

use bidgame::certifier::{certify as certify_map, decide_threshold, Decision};
use bidgame::engine::{HumanSide, Session as EngineSession, SessionOptions, StrategySource};
use bidgame::oracle::{oracle as oracle_map, DEFAULT_MAX_STATES};
use bidgame::parity::solve_frugal_parity;
use bidgame::{AdvValue, FrugalParityGame, Threshold, ThresholdMap};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Turns a serializable value into plain Python objects.
fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen)]
pub struct Game {
    inner: FrugalParityGame,
}

#[pymethods]
impl Game {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Game {
            inner: FrugalParityGame::from_json(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Game {
            inner: FrugalParityGame::load(path).map_err(err)?,
        })
    }

    #[getter]
    fn k(&self) -> u64 {
        self.inner.k()
    }

    #[getter]
    fn vertices(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    fn successors(&self, vertex: &str) -> PyResult<Vec<String>> {
        let v = self.inner.index_of(vertex).map_err(err)?;
        Ok(self
            .inner
            .successors(v)
            .iter()
            .map(|&u| self.inner.name(u).to_string())
            .collect())
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Game(k={}, vertices={})", self.inner.k(), self.inner.len())
    }
}

fn named(g: &FrugalParityGame, t: &ThresholdMap) -> BTreeMap<String, String> {
    t.named(g).into_iter().map(|(k, v)| (k, v.to_string())).collect()
}

fn parse_map(g: &FrugalParityGame, m: BTreeMap<String, String>) -> PyResult<ThresholdMap> {
    let mut parsed = BTreeMap::new();
    for (k, v) in m {
        parsed.insert(k, v.parse::<Threshold>().map_err(err)?);
    }
    ThresholdMap::from_named(g, &parsed).map_err(err)
}

/// Threshold budgets as `{vertex: literal}`.
#[pyfunction]
fn solve(game: &Game) -> PyResult<BTreeMap<String, String>> {
    let (t, _) = solve_frugal_parity(&game.inner).map_err(err)?;
    Ok(named(&game.inner, &t))
}

/// The nested iteration tables of the solver.
#[pyfunction]
fn trace(game: &Game) -> PyResult<String> {
    let (_, tr) = solve_frugal_parity(&game.inner).map_err(err)?;
    Ok(tr.render(&game.inner))
}

#[pyfunction]
fn certify<'py>(py: Python<'py>, game: &Game, thresholds: BTreeMap<String, String>) -> PyResult<Bound<'py, PyAny>> {
    let t = parse_map(&game.inner, thresholds)?;
    let report = certify_map(&game.inner, &t).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (game, max_states = DEFAULT_MAX_STATES))]
fn oracle(game: &Game, max_states: usize) -> PyResult<BTreeMap<String, String>> {
    let t = oracle_map(&game.inner, max_states).map_err(err)?;
    Ok(named(&game.inner, &t))
}

/// Whether the threshold at `vertex` is at least `budget`.
#[pyfunction]
fn decide(game: &Game, vertex: &str, budget: &str) -> PyResult<bool> {
    let ell: Threshold = budget.parse().map_err(err)?;
    match decide_threshold(&game.inner, vertex, ell, None).map_err(err)? {
        Decision::Answer { value, .. } => Ok(value),
        Decision::NotCertified { verdict } => Err(err(format!("thresholds not certified: {verdict:?}"))),
    }
}

/// A play against the engine.
#[pyclass(unsendable)]
pub struct Session {
    inner: EngineSession,
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (game, human, start, p1_budget, source = "certified", horizon = 200))]
    fn new(game: &Game, human: &str, start: &str, p1_budget: &str, source: &str, horizon: usize) -> PyResult<Self> {
        let human = match human {
            "player1" | "1" => HumanSide::Player1,
            "player2" | "2" => HumanSide::Player2,
            "none" => HumanSide::None,
            other => return Err(err(format!("unknown side {other:?}"))),
        };
        let source = match source {
            "certified" => StrategySource::Certified,
            "oracle" => StrategySource::Oracle,
            "heuristic" => StrategySource::Heuristic,
            other => return Err(err(format!("unknown strategy source {other:?}"))),
        };
        let budget: AdvValue = p1_budget.parse().map_err(err)?;
        let mut opts = SessionOptions::new(human, start, budget);
        opts.source = source;
        opts.horizon = horizon;
        Ok(Session {
            inner: EngineSession::new(game.inner.clone(), opts).map_err(err)?,
        })
    }

    /// Plays one round and returns its log record.
    #[pyo3(signature = (bid = None, target = None))]
    fn step<'py>(&mut self, py: Python<'py>, bid: Option<&str>, target: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let action = match (bid, target) {
            (Some(b), Some(t)) => Some(self.inner.action(b.parse().map_err(err)?, t).map_err(err)?),
            (None, None) => None,
            _ => return Err(err("give both bid and target")),
        };
        let record = self.inner.step(action).map_err(err)?;
        to_py(py, &record)
    }

    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.state())
    }

    fn history<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.history())
    }

    #[getter]
    fn over(&self) -> bool {
        self.inner.is_over()
    }
}

#[pymodule]
fn bidgame_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    Ok(())
}
