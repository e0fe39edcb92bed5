//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints one PASS/FAIL line; the process exits non-zero if
//! any criterion fails.

use std::time::{Duration, Instant};

use cdasim::analysis::{
    default_epsilon, recurrence_matrix, rqa_metrics, surrogate_shuffle, RecurrenceMatrix, RqaMetrics, StateSeries,
};
use cdasim::coevo::{find_attractors, quiver_sample, AdaptiveClimber, AttractorSearch, ClimberParams};
use cdasim::lob::{Price, PriceBounds, Side};
use cdasim::rng::stream;
use cdasim::session::{run_session, Market, SessionConfig};
use cdasim::stgp::{canonicalize, run_evolution, ExprTree, GenStats, GpParams};
use cdasim::traders::{gvwy_quote, przi_pmf, shvr_quote, CustomerOrder, QuoteContext};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(v: serde_json::Value) -> SessionConfig {
    serde_json::from_value(v).expect("test config")
}

/// Spearman rank correlation with average ranks for ties.
fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return f64::NAN;
    }
    cov / (vx * vy).sqrt()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

// 1. PRZI endpoints

fn c1_przi_endpoints() -> Outcome {
    let t0 = Instant::now();
    let bounds = PriceBounds::new(1, 500).unwrap();
    let mut rng = stream(2024, &[1]);
    let mut max_dev: f64 = 0.0;
    let mut endpoint_misses = 0;
    for _ in 0..1000 {
        let side = if rng.random_bool(0.5) { Side::Bid } else { Side::Ask };
        let limit = Price(rng.random_range(1..=500));
        let mut best = || rng.random_bool(0.8).then(|| Price(rng.random_range(1..=500)));
        let ctx = QuoteContext { bounds, best_bid: best(), best_ask: best() };
        let co = CustomerOrder { side, limit, issue_time: 0 };

        let flat = przi_pmf(0.0, &co, &ctx, 1).unwrap();
        let n = flat.masses().len() as f64;
        for &m in flat.masses() {
            max_dev = max_dev.max((m - 1.0 / n).abs());
        }
        let giveaway = przi_pmf(1.0, &co, &ctx, 1).unwrap().degenerate_at();
        let shaver = przi_pmf(-1.0, &co, &ctx, 1).unwrap().degenerate_at();
        if giveaway != Some(gvwy_quote(&co)) || shaver != Some(shvr_quote(&co, &ctx, 1)) {
            endpoint_misses += 1;
        }
    }
    let el = t0.elapsed();
    outcome(
        max_dev == 0.0 && endpoint_misses == 0 && within(el, 5),
        format!("max |pmf(0) - uniform| = {max_dev:e}, endpoint mismatches = {endpoint_misses}, {el:.2?} (limit 5 s)"),
    )
}

// 2. Hill-climber convergence on a frozen oracle

fn c2_climber_convergence() -> Outcome {
    let t0 = Instant::now();
    let params = ClimberParams::default();
    let mut converged = 0;
    for seed in 0..100u64 {
        let mut rng = stream(seed, &[2]);
        let optimum: f64 = rng.random_range(-0.9..=0.9);
        let start: f64 = rng.random_range(-1.0..=1.0);
        let profit = |s: f64| 1.0 - (s - optimum).abs();
        let mut c = AdaptiveClimber::new(start, params, &mut rng).unwrap();
        let mut hit = (c.prod() - optimum).abs() <= 0.1;
        while !hit && c.adoptions() < 500 {
            if c.observe_trade(profit(c.active_s()), &mut rng).is_some() {
                hit = (c.prod() - optimum).abs() <= 0.1;
            }
        }
        converged += hit as u32;
    }
    let el = t0.elapsed();
    outcome(
        converged >= 95 && within(el, 30),
        format!("{converged}/100 seeds within 0.1 of optimum in <= 500 adoptions (need 95), {el:.2?} (limit 30 s)"),
    )
}

// 3. Quiver field

fn quiver_template() -> SessionConfig {
    config(serde_json::json!({
        "duration": 1,
        "seed": 1,
        "roster": [
            {"side": "Bid", "strategy": "GVWY", "count": 10},
            {"side": "Ask", "strategy": "GVWY", "count": 10},
            {"side": "Bid", "strategy": "PRZI(0)", "adaptive": {"n_trades": 5}},
            {"side": "Ask", "strategy": "PRZI(0)", "adaptive": {"n_trades": 5}}
        ],
        "schedules": [
            {"side": "Bid", "p_min": 100, "p_max": 200, "interval": 30},
            {"side": "Ask", "p_min": 50, "p_max": 100, "interval": 30}
        ]
    }))
}

const QUIVER_HORIZON: u64 = 100_000;
const QUIVER_REPS: u32 = 5;

fn c3_quiver() -> Outcome {
    let t0 = Instant::now();
    let template = quiver_template();
    let field = quiver_sample(&template, 21, QUIVER_HORIZON, QUIVER_REPS, template.seed).unwrap();
    let attractors = find_attractors(&field, &AttractorSearch::default());
    let plateau = field.plateau_around_origin(0.25);
    let one_basin = attractors.len() == 1 && attractors[0].s_b < 0.0 && attractors[0].s_s > 0.0;
    let found: Vec<String> =
        attractors.iter().map(|a| format!("({:.2}, {:.2}) basin {}", a.s_b, a.s_s, a.basin)).collect();
    outcome(
        one_basin && !plateau.is_empty(),
        format!(
            "attractors [{}], origin plateau {} cells (< 25% of max {:.3}), {:.1?}",
            found.join("; "),
            plateau.len(),
            field.max_magnitude(),
            t0.elapsed()
        ),
    )
}

// 4. RQA against a brute-force oracle

/// Counts lines by their start cells and walks each one to its end.
fn oracle_rqa(m: &RecurrenceMatrix, l_min: usize, v_min: usize) -> RqaMetrics {
    let n = m.size();
    let on = |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < n && (j as usize) < n && m.get(i as usize, j as usize);
    let mut points = 0usize;
    let mut cells = 0usize;
    let mut diag_lengths = vec![0usize; n + 1];
    let mut lam_points = 0usize;
    for i in 0..n as isize {
        for j in 0..n as isize {
            if m.admissible(i as usize, j as usize) {
                cells += 1;
            }
            if !on(i, j) {
                continue;
            }
            points += 1;
            if !on(i - 1, j - 1) {
                let mut l = 0;
                while on(i + l as isize, j + l as isize) {
                    l += 1;
                }
                diag_lengths[l] += 1;
            }
            if !on(i - 1, j) {
                let mut v = 0;
                while on(i + v as isize, j) {
                    v += 1;
                }
                if v >= v_min {
                    lam_points += v;
                }
            }
        }
    }
    if points == 0 {
        return RqaMetrics::default();
    }
    let mut det_points = 0;
    let mut lines = 0;
    let mut l_max = 0;
    for (l, &c) in diag_lengths.iter().enumerate().skip(l_min) {
        if c > 0 {
            det_points += l * c;
            lines += c;
            l_max = l;
        }
    }
    let mut ent = 0.0;
    if lines > 0 {
        for &c in diag_lengths.iter().skip(l_min) {
            if c > 0 {
                let p = c as f64 / lines as f64;
                ent += p * p.ln();
            }
        }
    }
    RqaMetrics {
        rr: points as f64 / cells as f64,
        det: det_points as f64 / points as f64,
        lam: lam_points as f64 / points as f64,
        l_mean: if lines > 0 { det_points as f64 / lines as f64 } else { 0.0 },
        l_max,
        ent: if lines > 0 { (-ent).max(0.0) } else { 0.0 },
    }
}

fn c4_rqa_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = stream(4, &[4]);
    let mut mismatches = Vec::new();
    for case in 0..100 {
        let n = rng.random_range(1..=30usize);
        let density: f64 = rng.random_range(0.05..0.9);
        let theiler = rng.random_range(0..=3usize);
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for j in i..n {
                let b = rng.random_bool(density);
                bits[i * n + j] = b;
                bits[j * n + i] = b;
            }
        }
        let m = RecurrenceMatrix::from_bits(n, bits, theiler);
        let (l_min, v_min) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let got = rqa_metrics(&m, l_min, v_min).unwrap();
        let want = oracle_rqa(&m, l_min, v_min);
        if got != want {
            mismatches.push(case);
        }
    }
    let el = t0.elapsed();
    outcome(
        mismatches.is_empty() && within(el, 5),
        format!("{} of 100 matrices differ from the oracle {:?}, {el:.2?} (limit 5 s)", mismatches.len(), mismatches),
    )
}

// 5. Recurrence structure versus shuffled surrogates

fn det_of(series: &StateSeries) -> f64 {
    let eps = default_epsilon(series, 0.1);
    rqa_metrics(&recurrence_matrix(series, eps, 1).unwrap(), 2, 2).unwrap().det
}

fn c5_rp_structure() -> Outcome {
    let cfg = config(serde_json::json!({
        "duration": 20000,
        "tau": 100,
        "seed": 5,
        "roster": [
            {"side": "Bid", "strategy": "PRZI(0)", "count": 10, "adaptive": {"n_trades": 5}},
            {"side": "Ask", "strategy": "PRZI(0)", "count": 10, "adaptive": {"n_trades": 5}}
        ],
        "schedules": [
            {"side": "Bid", "p_min": 50, "p_max": 150, "interval": 100},
            {"side": "Ask", "p_min": 50, "p_max": 150, "interval": 100}
        ]
    }));
    let r = run_session(&cfg).unwrap();
    let series = &r.strategy_log;
    let det = det_of(series);
    let mut rng = stream(cfg.seed, &[5]);
    let mut surrogate: Vec<f64> = (0..100).map(|_| det_of(&surrogate_shuffle(series, &mut rng))).collect();
    surrogate.sort_by(|a, b| a.total_cmp(b));
    let p95 = surrogate[94];
    outcome(
        series.dim() >= 10 && det > p95,
        format!("N_A = {}, T = {}, DET = {det:.3}, surrogate 95th percentile = {p95:.3}", series.dim(), series.len()),
    )
}

// 6 and 7. STGP profit dynamics and bloat

fn stgp_template() -> SessionConfig {
    config(serde_json::json!({
        "duration": 10000,
        "sys_max": 200,
        "quote_mapping": "limit_offset",
        "roster": [
            {"side": "Ask", "strategy": "ZIC", "count": 100},
            {"side": "Bid", "strategy": "ZIC", "count": 50},
            {"side": "Bid", "strategy": "STGP((S,(S,Pbest,1),LIMIT))", "count": 50}
        ],
        "schedules": [
            {"side": "Bid", "p_min": 50, "p_max": 150, "interval": 150},
            {"side": "Ask", "p_min": 50, "p_max": 150, "interval": 150}
        ]
    }))
}

/// Per-generation medians over seeds of mean fitness and mean genome size.
fn stgp_medians() -> (Vec<f64>, Vec<f64>, Duration) {
    let t0 = Instant::now();
    let template = stgp_template();
    let params = GpParams::default();
    let runs: Vec<Vec<GenStats>> = (1..=5).map(|seed| run_evolution(&template, &params, seed).unwrap()).collect();
    let gens = params.generations as usize;
    let column = |f: fn(&GenStats) -> f64| -> Vec<f64> {
        (0..gens)
            .map(|g| {
                let mut v: Vec<f64> = runs.iter().map(|r| f(&r[g])).collect();
                median(&mut v)
            })
            .collect()
    };
    (column(|s| s.mean_fitness), column(|s| s.mean_size), t0.elapsed())
}

fn c6_biphasic(fitness: &[f64], el: Duration) -> Outcome {
    let peak = (0..fitness.len()).fold(0, |best, g| if fitness[g] > fitness[best] { g } else { best });
    let ratio = fitness[peak] / fitness[0];
    let post = &fitness[peak..];
    let gens: Vec<f64> = (peak..fitness.len()).map(|g| (g + 1) as f64).collect();
    let rho = spearman(&gens, post);
    let pass = (1..=9).contains(&peak) && ratio >= 1.5 && rho < 0.0;
    outcome(
        pass,
        format!(
            "gen-1 mean {:.1}, peak {:.1} at gen {} (need 2..=10), ratio {ratio:.2} (need >= 1.5), post-peak rho {rho:.3} (need < 0), {el:.1?}",
            fitness[0],
            fitness[peak],
            peak + 1
        ),
    )
}

fn c7_bloat_and_canon(size: &[f64]) -> Outcome {
    let gens: Vec<f64> = (1..=size.len()).map(|g| g as f64).collect();
    let rho = spearman(&gens, size);
    let literal = "(S,(S,(S,(S,(S,(S,(S,(S,(S,(S,Pbest,1),7),7),1),1),7),1),1),7),1)";
    let canon = canonicalize(&ExprTree::parse(literal).unwrap()).to_string();
    outcome(
        rho > 0.0 && canon == "(S,Pbest,34)",
        format!(
            "mean-size rho {rho:.3} (need > 0; sizes {:.2} -> {:.2}), canonical gen-30 genome {canon}",
            size[0],
            size[size.len() - 1]
        ),
    )
}

// 8. Market invariants over fuzzed sessions

fn fuzzed_config(rng: &mut impl Rng, seed: u64) -> SessionConfig {
    let strategies = ["ZIC", "GVWY", "SHVR", "PRZI", "STGP"];
    let mut roster = Vec::new();
    for side in ["Bid", "Ask"] {
        for _ in 0..rng.random_range(1..=4) {
            let kind = strategies[rng.random_range(0..strategies.len())];
            let mut e = serde_json::json!({"side": side, "count": rng.random_range(1..=4)});
            e["strategy"] = match kind {
                "PRZI" => serde_json::json!(format!("PRZI({:.3})", rng.random_range(-1.0..=1.0))),
                "STGP" => serde_json::json!("STGP((A,(S,Pbest,1),(M,LIMIT,7)))"),
                k => serde_json::json!(k),
            };
            if kind == "PRZI" && rng.random_bool(0.5) {
                e["adaptive"] = serde_json::json!({"n_trades": rng.random_range(1..=5)});
            }
            roster.push(e);
        }
    }
    let sys_max = rng.random_range(20..=300);
    let mut schedule = |side: &str| {
        let a = rng.random_range(1..=sys_max);
        let b = rng.random_range(1..=sys_max);
        let mode = if rng.random_bool(0.5) { "uniform" } else { "fixed_step" };
        serde_json::json!({"side": side, "p_min": a.min(b), "p_max": a.max(b), "interval": rng.random_range(1..=200), "mode": mode})
    };
    let schedules = vec![schedule("Bid"), schedule("Ask")];
    let mapping = if rng.random_bool(0.5) { "direct" } else { "limit_offset" };
    config(serde_json::json!({
        "duration": rng.random_range(0..=400),
        "sys_max": sys_max,
        "seed": seed,
        "tau": rng.random_range(1..=50),
        "quote_mapping": mapping,
        "roster": roster,
        "schedules": schedules
    }))
}

fn render(cfg: &SessionConfig) -> (Vec<u8>, Vec<u8>) {
    let r = run_session(cfg).unwrap();
    let mut tape = Vec::new();
    cdasim::lob::write_tape_csv(&mut tape, &r.tape).unwrap();
    let mut profits = Vec::new();
    r.write_profits_csv(&mut profits).unwrap();
    r.strategy_log.write_csv(&mut profits).unwrap();
    (tape, profits)
}

fn c8_market_invariants() -> Outcome {
    let t0 = Instant::now();
    let mut rng = stream(8, &[8]);
    let (mut crossed, mut leaks, mut losses, mut nondet) = (0, 0, 0, 0);
    let mut trades = 0usize;
    for k in 0..10_000u64 {
        let cfg = fuzzed_config(&mut rng, k);
        cfg.validate().unwrap();
        let mut market = Market::new(&cfg, 0).unwrap();
        let mut ok = true;
        while !market.is_finished() {
            market.step();
            ok &= !market.book().is_crossed();
        }
        crossed += !ok as u32;
        let r = market.into_result();
        trades += r.fills.len();
        let realised: i64 = r.fills.iter().map(|f| f.buyer_limit.0 - f.seller_limit.0).sum();
        leaks += (realised != r.total_profit()) as u32;
        losses += r.fills.iter().filter(|f| f.buyer_profit() < 0 || f.seller_profit() < 0).count();
        if k % 2 == 0 {
            nondet += (render(&cfg) != render(&cfg)) as u32;
        }
    }
    let el = t0.elapsed();
    outcome(
        crossed + leaks + nondet == 0 && losses == 0 && within(el, 60),
        format!(
            "10000 sessions, {trades} trades: crossed {crossed}, surplus leaks {leaks}, losing trades {losses}, non-deterministic {nondet}, {el:.1?} (limit 60 s)"
        ),
    )
}

// 9. ZIC efficiency

fn c9_zic_efficiency() -> Outcome {
    let mut total = 0.0;
    for seed in 1..=100u64 {
        let cfg = config(serde_json::json!({
            "duration": 1000,
            "seed": seed,
            "roster": [
                {"side": "Bid", "strategy": "ZIC", "count": 20},
                {"side": "Ask", "strategy": "ZIC", "count": 20}
            ],
            "schedules": [
                {"side": "Bid", "p_min": 50, "p_max": 150, "interval": 1000, "mode": "fixed_step"},
                {"side": "Ask", "p_min": 50, "p_max": 150, "interval": 1000, "mode": "fixed_step"}
            ]
        }));
        total += run_session(&cfg).unwrap().efficiency().unwrap();
    }
    let mean = total / 100.0;
    outcome(mean >= 0.9, format!("mean allocative efficiency {mean:.4} over 100 seeds (need >= 0.9)"))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "PRZI endpoint equivalence", c1_przi_endpoints()),
        (2, "hill-climber convergence", c2_climber_convergence()),
        (4, "RQA oracle equivalence", c4_rqa_oracle()),
        (5, "recurrence-plot structure", c5_rp_structure()),
    ];
    let (fitness, size, el) = stgp_medians();
    results.push((6, "STGP biphasic profits", c6_biphasic(&fitness, el)));
    results.push((7, "bloat and canonicalization", c7_bloat_and_canon(&size)));
    results.push((8, "market invariants", c8_market_invariants()));
    results.push((9, "ZIC efficiency", c9_zic_efficiency()));
    results.push((3, "quiver field", c3_quiver()));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as u32;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() as u32 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
