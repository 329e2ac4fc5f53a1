//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the PASS/FAIL lines always reach the terminal.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bidgame::average::{average, average_at, base_bid, check_average, BaseBid};
use bidgame::certifier::{certify, CertGame, Side, Verdict};
use bidgame::engine::{Action, HumanSide, RoundEvent, Session, SessionOptions, StrategySource};
use bidgame::oracle::{oracle_order, Order, DEFAULT_MAX_STATES};
use bidgame::parity::{solve_frugal_parity, ParityTrace};
use bidgame::reach::solve_frugal_reachability;
use bidgame::{dualize, AdvValue, FrugalParityGame, Threshold, ThresholdMap};
use common::{fix_a, fix_b, map, random_game, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || {
        format!("took {:?}, limit {limit:?}", start.elapsed())
    })
}

fn fix_a_thresholds() -> Check {
    let start = Instant::now();
    let g = fix_a();
    let (t, _) = solve_frugal_reachability(&g).map_err(|e| e.to_string())?;
    let want = map(&g, &[("v0", "5"), ("v1", "4*"), ("v2", "3*"), ("t", "2")]);
    ensure(t == want, || format!("got {}", t.render(&g).replace('\n', " ")))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("v0=5 v1=4* v2=3* t=2 in {:?}", start.elapsed()))
}

fn non_uniqueness() -> Check {
    let start = Instant::now();
    let g = fix_a();
    let low = map(&g, &[("v0", "4"), ("v1", "3*"), ("v2", "3"), ("t", "2")]);
    let high = map(&g, &[("v0", "5"), ("v1", "4*"), ("v2", "3*"), ("t", "2")]);
    ensure(check_average(&g, &low).is_empty(), || {
        "⟨4,3*,3,2⟩ lacks the average property".into()
    })?;
    ensure(check_average(&g, &high).is_empty(), || {
        "⟨5,4*,3*,2⟩ lacks the average property".into()
    })?;
    let low_v = certify(&g, &low).map_err(|e| e.to_string())?.verdict;
    let high_v = certify(&g, &high).map_err(|e| e.to_string())?.verdict;
    ensure(matches!(low_v, Verdict::RejectedUpper { .. }), || {
        format!("⟨4,3*,3,2⟩: {low_v:?}")
    })?;
    ensure(high_v == Verdict::Verified, || format!("⟨5,4*,3*,2⟩: {high_v:?}"))?;
    within(start, Duration::from_secs(1))?;
    Ok("both average; the lower map is rejected, the true one verified".into())
}

fn row(g: &FrugalParityGame, m: &ThresholdMap, ids: &[&str]) -> Vec<String> {
    ids.iter().map(|id| m.lookup(g, id).unwrap().to_string()).collect()
}

fn fix_b_trace() -> Check {
    let start = Instant::now();
    let g = fix_b();
    let (t, trace): (ThresholdMap, ParityTrace) = solve_frugal_parity(&g).map_err(|e| e.to_string())?;
    let safe = ["v0", "v1", "v2"];
    let want_s = [["2*", "3*", "4*"], ["0", "0*", "1*"], ["0", "0", "0"]];
    let want_r = ["3*", "0*", "0"];
    let mut problems = Vec::new();
    for (i, (s, r)) in want_s.iter().zip(want_r).enumerate() {
        let Some(it) = trace.iterations.get(i) else {
            problems.push(format!("no iteration {i}"));
            continue;
        };
        let got = row(&g, &it.inner, &safe);
        if got != s {
            problems.push(format!("S{i}={got:?} expected {s:?}"));
        }
        match &it.reach {
            Some(rm) if rm.lookup(&g, "t").unwrap().to_string() == r => {}
            Some(rm) => problems.push(format!("R{i}(t)={} expected {r}", rm.lookup(&g, "t").unwrap())),
            None => problems.push(format!("no R{i}")),
        }
    }
    if trace.iterations.len() != 4 {
        problems.push(format!(
            "{} rounds, expected the fixed point at round 3",
            trace.iterations.len()
        ));
    } else if row(&g, &trace.iterations[3].inner, &safe) != ["0", "0", "0"] {
        problems.push("S3 differs from S2".into());
    }
    if t != ThresholdMap::uniform(&g, Threshold::ZERO) {
        problems.push(format!("final {}", t.render(&g).replace('\n', " ")));
    }
    within(start, Duration::from_secs(1))?;
    if problems.is_empty() {
        Ok("every table matches".into())
    } else {
        Err(problems.join("; "))
    }
}

/// Every map with the average property, by backtracking in vertex order and
/// checking each vertex as soon as it and its successors are fixed.
fn average_maps(g: &FrugalParityGame) -> Vec<ThresholdMap> {
    let values: Vec<Threshold> = (0..=2 * g.k() + 1)
        .map(|l| Threshold::Budget(AdvValue::from_level(l)))
        .chain([Threshold::Top])
        .collect();
    let free: Vec<usize> = g.non_sinks().collect();
    let pos = |v: usize| free.iter().position(|&u| u == v);
    let mut ready: Vec<Vec<usize>> = vec![Vec::new(); free.len()];
    for &v in &free {
        let last = g
            .successors(v)
            .iter()
            .filter_map(|&u| pos(u))
            .chain(pos(v))
            .max()
            .unwrap();
        ready[last].push(v);
    }
    let init = g.vertices().map(|v| g.frugal(v).unwrap_or(Threshold::ZERO)).collect();
    let mut cur = ThresholdMap::new(g, init).unwrap();
    let mut out = Vec::new();
    fn go(
        i: usize,
        g: &FrugalParityGame,
        free: &[usize],
        ready: &[Vec<usize>],
        values: &[Threshold],
        cur: &mut ThresholdMap,
        out: &mut Vec<ThresholdMap>,
    ) {
        if i == free.len() {
            out.push(cur.clone());
            return;
        }
        for &x in values {
            cur.set(free[i], x);
            if ready[i].iter().all(|&u| average_at(g, cur, u) == cur.get(u)) {
                go(i + 1, g, free, ready, values, cur, out);
            }
        }
    }
    go(0, g, &free, &ready, &values, &mut cur, &mut out);
    out
}

fn priority_sets(rng: &mut impl Rng) -> Vec<u32> {
    let n = rng.gen_range(1..=3);
    let lo = rng.gen_range(0..=2);
    (lo..lo + n).collect()
}

struct Corpus {
    games: Vec<FrugalParityGame>,
    truths: Vec<ThresholdMap>,
    maps: Vec<Vec<ThresholdMap>>,
}

fn corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut games = Vec::new();
    while games.len() < 200 {
        let shape = Shape {
            non_sinks: 5,
            sinks: 2,
            k: 5,
            priorities: priority_sets(&mut rng),
        };
        games.push(random_game(&mut rng, &shape));
    }
    let truths = games.iter().map(|g| solve_frugal_parity(g).unwrap().0).collect();
    let maps = games.iter().map(average_maps).collect();
    Corpus { games, truths, maps }
}

fn oracle_equivalence(c: &Corpus) -> Check {
    let start = Instant::now();
    for (i, (g, t)) in c.games.iter().zip(&c.truths).enumerate() {
        let p1 = oracle_order(g, Order::P1First, DEFAULT_MAX_STATES).map_err(|e| format!("game {i}: {e}"))?;
        let p2 = oracle_order(g, Order::P2First, DEFAULT_MAX_STATES).map_err(|e| format!("game {i}: {e}"))?;
        ensure(p1 == p2, || {
            format!("game {i}: bidding orders disagree\n{}", g.to_json())
        })?;
        ensure(&p1 == t, || {
            format!("game {i}: solver differs from the oracle\n{}", g.to_json())
        })?;
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "{} games agree, both orders, in {:?}",
        c.games.len(),
        start.elapsed()
    ))
}

fn certification(c: &Corpus) -> Check {
    let mut mutants = 0;
    for (i, ((g, t), maps)) in c.games.iter().zip(&c.truths).zip(&c.maps).enumerate() {
        let v = certify(g, t).map_err(|e| e.to_string())?.verdict;
        ensure(v == Verdict::Verified, || format!("game {i}: solver output {v:?}"))?;
        for m in maps.iter().filter(|m| *m != t) {
            mutants += 1;
            let v = certify(g, m).map_err(|e| e.to_string())?.verdict;
            ensure(v != Verdict::Verified, || {
                format!("game {i}: mutant accepted {}", m.render(g).replace('\n', " "))
            })?;
        }
    }
    Ok(format!(
        "{} solver maps verified, {mutants} average mutants rejected",
        c.games.len()
    ))
}

fn identities(g: &FrugalParityGame, t: &ThresholdMap) -> Result<usize, String> {
    let k = g.k();
    let val = |x: Threshold| match x {
        Threshold::Budget(b) => b,
        Threshold::Top => AdvValue::plain(k + 1),
    };
    let mut checked = 0;
    for v in g.non_sinks() {
        let BaseBid::Bid(bid) = base_bid(g, t, v) else { continue };
        let (hi, lo) = bidgame::average::neighbor_extremes(g, t, v);
        let (tv, hi_v, lo_v) = (val(t.get(v)), val(hi), val(lo));
        let fail = |n: u32| format!("identity {n} at {} of {}", g.name(v), t.render(g).replace('\n', " "));
        let sub = |a: AdvValue, b: AdvValue| a.ominus(b).ok();
        let add = |a: AdvValue, b: AdvValue| a.oplus(b).ok();
        if t.get(v).is_top() || hi.is_top() {
            continue;
        }
        let want = if lo_v.has_advantage() { lo_v.succ() } else { lo_v };
        ensure(sub(tv, bid) == Some(want), || {
            fail(if lo_v.has_advantage() { 2 } else { 1 })
        })?;
        let star = AdvValue::marked(hi_v.magnitude());
        ensure(add(tv, bid.succ()) == Some(star), || fail(3))?;
        ensure(sub(tv.succ(), bid.succ()) == sub(tv, bid), || fail(4))?;
        let plus_one = add(bid, AdvValue::plain(1)).and_then(|b| add(tv.succ(), b));
        ensure(plus_one == Some(AdvValue::marked(hi_v.magnitude() + 1)), || fail(5))?;
        checked += 1;
    }
    Ok(checked)
}

fn random_opponent(rng: &mut impl Rng, g: &FrugalParityGame, v: usize, budget: AdvValue) -> Action {
    let levels: Vec<u64> = (0..=budget.level())
        .filter(|l| budget.has_advantage() || l % 2 == 0)
        .collect();
    let succ = g.successors(v);
    Action {
        bid: AdvValue::from_level(levels[rng.gen_range(0..levels.len())]),
        target: succ[rng.gen_range(0..succ.len())],
    }
}

/// Certified engine on `side` against a random opponent for `rounds`
/// rounds, checking the budget, conservation and spare invariants.
fn invariant_play(
    g: &FrugalParityGame,
    t: &ThresholdMap,
    side: Side,
    start: usize,
    p1: AdvValue,
    seed: u64,
    rounds: usize,
) -> Result<(), String> {
    let human = if side == Side::Player1 {
        HumanSide::Player2
    } else {
        HumanSide::Player1
    };
    let mut opts = SessionOptions::new(human, g.name(start), p1);
    opts.horizon = rounds;
    let mut s = Session::with_thresholds(g.clone(), t.clone(), opts).map_err(|e| e.to_string())?;
    ensure(s.source(side) == Some(StrategySource::Certified), || {
        "engine not certified".into()
    })?;
    let own_t = if side == Side::Player1 {
        t.clone()
    } else {
        t.complement(g.k())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spare = s.spare(side).unwrap();
    let ctx = || format!("seed {seed} {}", g.to_json());
    loop {
        let own = if side == Side::Player1 {
            s.p1_budget()
        } else {
            s.p2_budget()
        };
        ensure(own_t.get(s.vertex()).admits(own), || {
            format!("budget below threshold, {}", ctx())
        })?;
        if s.is_over() {
            break;
        }
        let (cv, cb) = s.cert_vertex(side).unwrap();
        ensure(
            cv == s.vertex() && cb.has_advantage() == own.has_advantage() && cb <= own,
            || format!("cert vertex disagrees, {}", ctx()),
        )?;
        let opp = if side == Side::Player1 {
            s.p2_budget()
        } else {
            s.p1_budget()
        };
        let a = random_opponent(&mut rng, g, s.vertex(), opp);
        s.step(Some(a)).map_err(|e| e.to_string())?;
        ensure(s.p1_budget().oplus(s.p2_budget()).ok() == Some(g.total()), || {
            format!("budget sum, {}", ctx())
        })?;
        let now = s.spare(side).unwrap();
        ensure(now >= spare, || format!("spare decreased, {}", ctx()))?;
        if s.events().last() == Some(&RoundEvent::Restart) {
            ensure(now > spare, || format!("restart without gain, {}", ctx()))?;
        }
        spare = now;
    }
    ensure(s.restarts(side) as u64 <= g.k(), || {
        format!("{} restarts, {}", s.restarts(side), ctx())
    })
}

fn invariant_suites(c: &Corpus) -> Check {
    let mut id_checks = 0;
    for (g, maps) in c.games.iter().zip(&c.maps) {
        for m in maps {
            id_checks += identities(g, m)?;
        }
    }

    let mut plays = 0;
    for (f, g) in [fix_a(), fix_b()].iter().enumerate() {
        let (t, _) = solve_frugal_parity(g).unwrap();
        let starts: Vec<usize> = g.non_sinks().filter(|&v| !t.get(v).is_top()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(f as u64);
        for seed in 0..1000 {
            let v = starts[seed % starts.len()];
            let lo = t.get(v).budget().unwrap().level();
            let b1 = AdvValue::from_level(rng.gen_range(lo..=2 * g.k() + 1));
            invariant_play(g, &t, Side::Player1, v, b1, seed as u64, 200)?;
            plays += 1;
        }
    }

    let mut flips = 0;
    for k in 0..=8u64 {
        let all: Vec<Threshold> = (0..=2 * k + 1)
            .map(|l| Threshold::Budget(AdvValue::from_level(l)))
            .chain([Threshold::Top])
            .collect();
        for &x in &all {
            let fx = x.flip(k).map_err(|e| e.to_string())?;
            ensure(fx.flip(k).ok() == Some(x), || {
                format!("flip is not an involution at {x}, k={k}")
            })?;
            for &y in &all {
                let fy = y.flip(k).unwrap();
                ensure((x <= y) == (fy <= fx), || format!("flip keeps order of {x},{y}, k={k}"))?;
                if y <= x {
                    let lhs = average(x, y, k).flip(k).unwrap();
                    ensure(lhs == average(fy, fx, k), || {
                        format!("average does not commute with flip at {x},{y}, k={k}")
                    })?;
                }
                flips += 1;
            }
        }
    }
    for (g, maps) in c.games.iter().zip(&c.maps) {
        let dual = dualize(g);
        for m in maps {
            let comp = m.complement(g.k());
            ensure(comp.complement(g.k()) == *m, || {
                "complement is not an involution".into()
            })?;
            ensure(check_average(&dual, &comp).is_empty(), || {
                format!("complement loses the average property {}", g.to_json())
            })?;
        }
    }

    let mut engine_plays = 0;
    for (i, (g, t)) in c.games.iter().zip(&c.truths).enumerate() {
        for v in g.non_sinks() {
            let seed = (i * 16 + v) as u64;
            if let Threshold::Budget(b) = t.get(v) {
                invariant_play(g, t, Side::Player1, v, b, seed, 200)?;
                engine_plays += 1;
            }
            let p2_start = match t.get(v) {
                Threshold::Top => Some(g.total()),
                Threshold::Budget(b) => b.pred().ok(),
            };
            if let Some(b1) = p2_start {
                invariant_play(g, t, Side::Player2, v, b1, seed, 200)?;
                engine_plays += 1;
            }
        }
    }
    Ok(format!(
        "{id_checks} identity checks, {plays} fixture plays, {flips} flip pairs, {engine_plays} random-game plays; no violations"
    ))
}

fn complexity_shape(c: &Corpus) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0f64;
    for _ in 0..200 {
        let g = random_game(
            &mut rng,
            &Shape {
                non_sinks: 6,
                sinks: 2,
                k: 6,
                priorities: vec![2],
            },
        );
        let (_, trace) = solve_frugal_reachability(&g).map_err(|e| e.to_string())?;
        let n = g.non_sinks().count();
        let bound = n * (2 * g.k() as usize + 2);
        ensure(trace.sweeps() <= bound, || {
            format!("{} sweeps > {bound}", trace.sweeps())
        })?;
        worst = worst.max(trace.sweeps() as f64 / bound.max(1) as f64);
    }
    for (g, t) in c.games.iter().zip(&c.truths) {
        let size_bound = 3 * g.len() + 2 * g.edge_count() * (g.max_degree() + 2);
        for side in [Side::Player1, Side::Player2] {
            let cg = CertGame::build(g, t, side).map_err(|e| e.to_string())?;
            ensure(cg.arena.len() <= size_bound, || {
                format!("cert game {} > {size_bound}", cg.arena.len())
            })?;
            let table = cg.strategy_table(&cg.solve());
            ensure(table.len() <= 2 * g.len(), || {
                format!("{} table entries for {} vertices", table.len(), g.len())
            })?;
        }
    }
    Ok(format!(
        "sweeps at most {:.0}% of the bound; cert games and tables within bounds",
        worst * 100.0
    ))
}

fn run(name: &str, f: impl FnOnce() -> Check) -> bool {
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match res {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run("fix-a thresholds", fix_a_thresholds);
    ok &= run("non-uniqueness of average maps", non_uniqueness);
    ok &= run("fix-b co-buchi trace", fix_b_trace);
    let built = Instant::now();
    let c = corpus();
    println!(
        "      corpus: {} random games enumerated in {:?}",
        c.games.len(),
        built.elapsed()
    );
    ok &= run("oracle equivalence and determinacy", || oracle_equivalence(&c));
    ok &= run("certification pipeline", || certification(&c));
    ok &= run("invariant suites", || invariant_suites(&c));
    ok &= run("complexity shape", || complexity_shape(&c));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
