//! Subcommands of the `bidgame` binary.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use bidgame::certifier::{certify, decide_threshold, CertReport, Decision, Side, Verdict};
use bidgame::engine::{HumanSide, Outcome, PlayError, Session, SessionOptions, StrategySource};
use bidgame::oracle::{oracle, OracleError, DEFAULT_MAX_STATES};
use bidgame::parity::solve_frugal_parity;
use bidgame::reach::{solve_frugal_reachability, SolveError};
use bidgame::{AdvValue, FrugalParityGame, GameError, Threshold, ThresholdMap};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Cert(#[from] bidgame::certifier::CertError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Play(#[from] PlayError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "bidgame",
    version,
    about = "Threshold budgets for discrete-bidding graph games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the threshold budgets of a game.
    Solve {
        game: PathBuf,
        /// Print the iteration tables.
        #[arg(long)]
        trace: bool,
        /// Certify the result and fail unless it is verified.
        #[arg(long)]
        certify: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check a candidate threshold map.
    Verify {
        game: PathBuf,
        candidate: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Thresholds from the explicit concurrent game.
    Oracle {
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
        #[arg(long)]
        json: bool,
    },
    /// Whether the threshold at a vertex is at least a budget.
    Decide {
        game: PathBuf,
        vertex: String,
        budget: Threshold,
        /// Use this map instead of solving.
        #[arg(long)]
        candidate: Option<PathBuf>,
    },
    /// Play against the engine on the terminal.
    Play {
        game: PathBuf,
        /// The side you play.
        #[arg(long = "as", value_enum)]
        side: PlaySide,
        #[arg(long)]
        start: String,
        #[arg(long)]
        p1_budget: AdvValue,
        #[arg(long, value_enum, default_value_t = Source::Certified)]
        source: Source,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "BIDGAME_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "BIDGAME_STORE", default_value = "bidgame-store")]
        store: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlaySide {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Source {
    Certified,
    Oracle,
    Heuristic,
}

impl From<Source> for StrategySource {
    fn from(s: Source) -> Self {
        match s {
            Source::Certified => StrategySource::Certified,
            Source::Oracle => StrategySource::Oracle,
            Source::Heuristic => StrategySource::Heuristic,
        }
    }
}

/// Thresholds plus the trace text of whichever solver applies.
pub fn solve_game(g: &FrugalParityGame) -> Result<(ThresholdMap, String), CliError> {
    let prios = g.priorities();
    if prios.len() == 1 && prios[0].is_multiple_of(2) {
        let (t, trace) = solve_frugal_reachability(g)?;
        return Ok((t, trace.render(g)));
    }
    let (t, trace) = solve_frugal_parity(g)?;
    Ok((t, trace.render(g)))
}

pub fn verdict_line(v: &Verdict) -> String {
    match v {
        Verdict::Verified => "verified".to_string(),
        Verdict::RejectedAverage { violations } => {
            let parts: Vec<String> = violations
                .iter()
                .map(|x| format!("{} (expected {}, found {})", x.vertex, x.expected, x.found))
                .collect();
            format!("rejected: average property fails at {}", parts.join(", "))
        }
        Verdict::RejectedUpper { vertex } => format!("rejected: Player 1 cannot win from the threshold at {vertex}"),
        Verdict::RejectedLower { vertex } => {
            format!("rejected: Player 2 cannot win below the threshold at {vertex}")
        }
    }
}

fn thresholds_json(g: &FrugalParityGame, t: &ThresholdMap) -> serde_json::Value {
    t.to_json(g)
}

fn report_json(r: &CertReport) -> serde_json::Value {
    serde_json::to_value(&r.verdict).expect("verdict serializes")
}

fn load(path: &Path) -> Result<FrugalParityGame, CliError> {
    Ok(FrugalParityGame::load(path)?)
}

pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve {
            game,
            trace,
            certify: cert,
            json,
        } => {
            let g = load(&game)?;
            let (t, text) = solve_game(&g)?;
            let report = if cert { Some(certify(&g, &t)?) } else { None };
            let code = match &report {
                Some(r) if !r.verdict.is_verified() => EXIT_REJECTED,
                _ => EXIT_OK,
            };
            if json {
                let mut v = json!({ "schema": 1, "thresholds": thresholds_json(&g, &t) });
                if trace {
                    v["trace"] = json!(text);
                }
                if let Some(r) = &report {
                    v["certification"] = report_json(r);
                }
                writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"))?;
            } else {
                if trace {
                    write!(out, "{text}")?;
                }
                write!(out, "{}", t.render(&g))?;
                if let Some(r) = &report {
                    writeln!(out, "{}", verdict_line(&r.verdict))?;
                }
            }
            Ok(code)
        }
        Command::Verify { game, candidate, json } => {
            let g = load(&game)?;
            let t = ThresholdMap::load(&g, &candidate)?;
            let r = certify(&g, &t)?;
            if json {
                let mut v = json!({ "schema": 1 });
                v["certification"] = report_json(&r);
                if let Some(s) = r.strategy(Side::Player1).filter(|_| r.verdict.is_verified()) {
                    v["strategy"] = serde_json::to_value(s).expect("json");
                }
                writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"))?;
            } else {
                writeln!(out, "{}", verdict_line(&r.verdict))?;
            }
            Ok(if r.verdict.is_verified() {
                EXIT_OK
            } else {
                EXIT_REJECTED
            })
        }
        Command::Oracle { game, max_states, json } => {
            let g = load(&game)?;
            let t = oracle(&g, max_states)?;
            if json {
                let v = json!({ "schema": 1, "thresholds": thresholds_json(&g, &t) });
                writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"))?;
            } else {
                write!(out, "{}", t.render(&g))?;
            }
            Ok(EXIT_OK)
        }
        Command::Decide {
            game,
            vertex,
            budget,
            candidate,
        } => {
            let g = load(&game)?;
            let cand = candidate.map(|p| ThresholdMap::load(&g, p)).transpose()?;
            match decide_threshold(&g, &vertex, budget, cand.as_ref())? {
                Decision::Answer { value, .. } => {
                    writeln!(out, "{value}")?;
                    Ok(if value { EXIT_OK } else { EXIT_REJECTED })
                }
                Decision::NotCertified { verdict } => {
                    writeln!(out, "{}", verdict_line(&verdict))?;
                    Ok(EXIT_REJECTED)
                }
            }
        }
        Command::Play {
            game,
            side,
            start,
            p1_budget,
            source,
            horizon,
        } => {
            let g = load(&game)?;
            let human = match side {
                PlaySide::One => HumanSide::Player1,
                PlaySide::Two => HumanSide::Player2,
                PlaySide::None => HumanSide::None,
            };
            let mut opts = SessionOptions::new(human, &start, p1_budget);
            opts.source = source.into();
            opts.horizon = horizon;
            play(Session::new(g, opts)?, input, out)
        }
        Command::Serve { .. } => Err(CliError::Usage("serve runs from main".into())),
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Player1 => "Player 1",
        Side::Player2 => "Player 2",
    }
}

fn announce(s: &Session, out: &mut dyn Write) -> std::io::Result<()> {
    let g = s.game();
    let v = s.vertex();
    let th = s.thresholds().get(v);
    for side in [Side::Player1, Side::Player2] {
        let Some(src) = s.source(side) else { continue };
        match src {
            StrategySource::Certified => writeln!(out, "engine ({}): certified strategy", side_name(side))?,
            StrategySource::Oracle => writeln!(out, "engine ({}): oracle strategy", side_name(side))?,
            StrategySource::Heuristic => {
                let why = match side {
                    Side::Player1 => format!("budget {} is below the threshold {th} at {}", s.p1_budget(), g.name(v)),
                    Side::Player2 => format!(
                        "Player 1 budget {} reaches the threshold {th} at {}",
                        s.p1_budget(),
                        g.name(v)
                    ),
                };
                writeln!(
                    out,
                    "engine ({}): certified play refused, {why}; heuristic mode (best effort)",
                    side_name(side)
                )?;
            }
        }
    }
    Ok(())
}

fn status(s: &Session, out: &mut dyn Write) -> std::io::Result<()> {
    let g = s.game();
    let v = s.vertex();
    writeln!(
        out,
        "at {} (threshold {}), Player 1 has {}, Player 2 has {}; moves: {}",
        g.name(v),
        s.thresholds().get(v),
        s.p1_budget(),
        s.p2_budget(),
        g.successors(v).iter().map(|&u| g.name(u)).collect::<Vec<_>>().join(" ")
    )
}

fn play(mut s: Session, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<i32, CliError> {
    announce(&s, out)?;
    let human = s.options().human;
    let mut line = String::new();
    while !s.is_over() {
        status(&s, out)?;
        let action = if human == HumanSide::None {
            None
        } else {
            s.commit();
            write!(out, "your bid and move> ")?;
            out.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                writeln!(out)?;
                return Ok(EXIT_OK);
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.first() == Some(&"quit") {
                return Ok(EXIT_OK);
            }
            let [bid, target] = parts[..] else {
                writeln!(out, "expected: <bid> <vertex>")?;
                continue;
            };
            let parsed = bid
                .parse::<AdvValue>()
                .map_err(|e| e.to_string())
                .and_then(|b| s.action(b, target).map_err(|e| e.to_string()));
            match parsed {
                Ok(a) => Some(a),
                Err(e) => {
                    writeln!(out, "{e}")?;
                    continue;
                }
            }
        };
        match s.step(action) {
            Ok(r) => writeln!(
                out,
                "round {}: Player 1 bids {} for {}, Player 2 bids {} for {}; {} wins{}, next {}",
                r.round,
                r.bids.player1.bid,
                r.bids.player1.target,
                r.bids.player2.bid,
                r.bids.player2.target,
                side_name(r.winner),
                if r.advantage_used { " with the advantage" } else { "" },
                r.next_vertex
            )?,
            Err(e @ (PlayError::IllegalBid { .. } | PlayError::IllegalMove { .. })) => writeln!(out, "{e}")?,
            Err(e) => return Err(e.into()),
        }
    }
    match s.outcome() {
        Outcome::Finished {
            winner,
            sink,
            p1_budget,
        } => writeln!(
            out,
            "{} wins at {sink} with Player 1 budget {p1_budget}",
            side_name(*winner)
        )?,
        Outcome::Provisional { winner, max_priority } => writeln!(
            out,
            "horizon reached: {} leads (largest recent priority {max_priority})",
            side_name(*winner)
        )?,
        Outcome::Running => {}
    }
    Ok(EXIT_OK)
}
