//! Acceptance suite. Runs as a plain binary (`harness = false`) and prints one
//! PASS/FAIL line per criterion, then exits non-zero if any failed.
//!
//!     cargo test -p opcgame --test acceptance

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use opcgame::analysis;
use opcgame::best_response::{br_priced, br_waterfill, BestResponseProblem, ResponseKind, Sense};
use opcgame::engine::{self, GameConfig, GameKind};
use opcgame::experiment::{run_experiment, ExperimentSpec, Preset};
use opcgame::linalg;
use opcgame::network::CrossGainCeiling;
use opcgame::single_carrier::{tpc_feasible, tpc_fixed_point};
use opcgame::{Scenario, UserParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn preset_spec(preset: Preset, seeds: std::ops::Range<u64>, out: &Path) -> ExperimentSpec {
    let mut spec = ExperimentSpec::preset(preset);
    spec.seeds = seeds.collect();
    spec.out = out.to_path_buf();
    spec
}

// ---------------------------------------------------------------------------
// 1. Opportunistic game vs power minimization
// ---------------------------------------------------------------------------

fn criterion_1(tmp: &Path) -> Outcome {
    let spec = preset_spec(Preset::Fig3OpcVsPowermin, 0..20, &tmp.join("c1"));
    let manifest = run_experiment(&spec).expect("fig3 preset runs");
    let summary = manifest.summary("opportunistic", "power_min").expect("comparison present");
    let step = summary.steps.iter().find(|s| s.step == 4).expect("step 4");
    // Reductions are the negated signed gaps of the opportunistic game.
    let power_reduction = -step.power_gap_pct.median;
    let rate_reduction = -step.rate_gap_pct.median;
    let frac = step.power_gap_below_rate_gap;
    let pass = step.seeds == 20 && power_reduction >= 20.0 && rate_reduction <= 15.0 && frac >= 0.8;
    outcome(
        pass,
        format!(
            "step 4, {} seeds: median power reduction {power_reduction:.2}% (>= 20), median rate reduction {rate_reduction:.2}% (<= 15), power > rate in {:.0}% of seeds (>= 80); {}/{} runs converged",
            step.seeds,
            frac * 100.0,
            manifest.converged_runs,
            manifest.runs
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Proposed vs fixed pricing
// ---------------------------------------------------------------------------

fn criterion_2(tmp: &Path) -> Outcome {
    let last = |preset, dir: &str| {
        let spec = preset_spec(preset, 0..20, &tmp.join(dir));
        let m = run_experiment(&spec).expect("pricing preset runs");
        let s = m.summary("proposed", "fixed").expect("comparison present");
        let st = s.steps.last().expect("steps").clone();
        (st, m.converged_runs, m.runs)
    };
    let (down, cd, rd) = last(Preset::Fig56FixedVsProposedDegrade, "c2_down");
    let (up, cu, ru) = last(Preset::Fig78FixedVsProposedImprove, "c2_up");
    let (dp, dr) = (down.power_gap_pct.median, down.rate_gap_pct.median);
    let (up_p, up_r) = (up.power_gap_pct.median, up.rate_gap_pct.median);
    let pass = down.seeds == 20 && up.seeds == 20 && dp < 0.0 && dp.abs() > dr.abs() && up_p > 0.0 && up_r > 0.0;
    outcome(
        pass,
        format!(
            "degrading step {}: power {dp:+.2}%, rate {dr:+.2}%; improving step {}: power {up_p:+.2}%, rate {up_r:+.2}%; converged {cd}/{rd} and {cu}/{ru}",
            down.step, up.step
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. Best responses vs brute-force grids
// ---------------------------------------------------------------------------

const MIN_GRID_POINTS: u64 = 100_000;

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Smallest resolution `n` whose compositions of `n` into `parts` parts
/// number at least `MIN_GRID_POINTS`.
fn grid_resolution(parts: usize) -> (u64, u64) {
    assert!(parts >= 2, "a grid needs at least two coordinates");
    let k = parts as u64 - 1;
    let mut n = 1;
    while binomial(n + k, k) < MIN_GRID_POINTS {
        n += 1;
    }
    (n, binomial(n + k, k))
}

fn for_each_composition(n: u64, parts: usize, f: &mut impl FnMut(&[u64])) {
    fn rec(slot: usize, left: u64, buf: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        if slot + 1 == buf.len() {
            buf[slot] = left;
            f(buf);
            return;
        }
        for k in 0..=left {
            buf[slot] = k;
            rec(slot + 1, left - k, buf, f);
        }
    }
    let mut buf = vec![0; parts];
    rec(0, n, &mut buf, f);
}

struct GridResult {
    best: f64,
    resolution: f64,
    points: u64,
}

/// Exhaustive search over `{k / n : Σ k = n}` in `parts` coordinates. The
/// resolution is the largest objective change of a single one-unit move away
/// from the best point, times the number of free coordinates.
fn grid_search(parts: usize, sense: Sense, eval: impl Fn(&[f64]) -> f64) -> GridResult {
    let (n, points) = grid_resolution(parts);
    let to_x = |k: &[u64]| k.iter().map(|&v| v as f64 / n as f64).collect::<Vec<f64>>();
    let better = |a: f64, b: f64| match sense {
        Sense::Maximize => a > b,
        Sense::Minimize => a < b,
    };
    let mut best = match sense {
        Sense::Maximize => f64::NEG_INFINITY,
        Sense::Minimize => f64::INFINITY,
    };
    let mut best_k = vec![0; parts];
    for_each_composition(n, parts, &mut |k| {
        let v = eval(&to_x(k));
        if better(v, best) {
            best = v;
            best_k.copy_from_slice(k);
        }
    });
    let mut resolution = 0.0_f64;
    for a in 0..parts {
        for b in 0..parts {
            if a != b && best_k[a] > 0 {
                let mut k = best_k.clone();
                k[a] -= 1;
                k[b] += 1;
                resolution = resolution.max((eval(&to_x(&k)) - best).abs());
            }
        }
    }
    GridResult {
        best,
        resolution: resolution * (parts - 1).max(1) as f64,
        points,
    }
}

fn random_instance(kind: usize, rng: &mut ChaCha8Rng) -> BestResponseProblem {
    // L = 1 leaves the rate-split grid of power minimization a single point.
    let l = rng.random_range(2..=5usize);
    let interference: Vec<f64> = (0..l).map(|_| log_uniform(rng, 0.01, 1.0)).collect();
    let budget = log_uniform(rng, 0.05, 2.0);
    let kind = match kind {
        0 => ResponseKind::Opportunistic {
            varsigma: log_uniform(rng, 1e-4, 1.0),
        },
        1 => ResponseKind::PowerMin {
            rate_target: rng.random_range(0.5..5.0),
        },
        2 => ResponseKind::Waterfill { budget },
        3 => ResponseKind::Priced {
            budget,
            price: log_uniform(rng, 0.1, 100.0),
        },
        _ => ResponseKind::FixedPriced {
            budget,
            costs: (0..l).map(|_| rng.random_range(0.0..20.0)).collect(),
        },
    };
    BestResponseProblem::new(kind, interference).expect("valid instance")
}

/// Maps grid coordinates to a feasible power vector of the instance.
fn grid_powers(problem: &BestResponseProblem, x: &[f64]) -> Vec<f64> {
    let i = &problem.interference;
    match &problem.kind {
        // x = normalized weighted powers (p I)² / ς, last coordinate slack.
        ResponseKind::Opportunistic { varsigma } => i.iter().zip(x).map(|(i, x)| (varsigma * x).sqrt() / i).collect(),
        // x = share of the rate target carried by each channel.
        ResponseKind::PowerMin { rate_target } => i.iter().zip(x).map(|(i, x)| i * (rate_target * x).exp_m1()).collect(),
        // x = share of the budget, last coordinate slack.
        ResponseKind::Waterfill { budget } | ResponseKind::Priced { budget, .. } | ResponseKind::FixedPriced { budget, .. } => {
            x[..i.len()].iter().map(|x| budget * x).collect()
        }
    }
}

fn criterion_3() -> Outcome {
    let names = ["opportunistic", "power-min", "waterfill", "priced", "fixed-priced"];
    let mut details = Vec::new();
    let mut pass = true;
    for (kind, name) in names.iter().enumerate() {
        let results: Vec<(bool, bool, f64, u64)> = (0..50u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(3_000 + 100 * kind as u64 + k);
                let problem = random_instance(kind, &mut rng);
                let alloc = problem.solve();
                let kkt = problem.kkt_residual(&alloc);
                let solver = problem.objective(&alloc.powers);
                let parts = match problem.kind {
                    ResponseKind::PowerMin { .. } => problem.interference.len(),
                    _ => problem.interference.len() + 1,
                };
                let grid = grid_search(parts, problem.sense(), |x| problem.objective(&grid_powers(&problem, x)));
                let scale = solver.abs().max(grid.best.abs()).max(1e-300);
                let not_beaten = !problem.improves(grid.best, solver) || (grid.best - solver).abs() <= 1e-9 * scale;
                let within = (grid.best - solver).abs() <= grid.resolution + 1e-12 * scale;
                (not_beaten && within && problem.is_feasible(&alloc.powers, 1e-10), kkt < 1e-8, kkt, grid.points)
            })
            .collect();
        let ok_grid = results.iter().filter(|r| r.0).count();
        let ok_kkt = results.iter().filter(|r| r.1).count();
        let worst_kkt = results.iter().map(|r| r.2).fold(0.0, f64::max);
        let min_points = results.iter().map(|r| r.3).min().unwrap_or(0);
        pass &= ok_grid == 50 && ok_kkt == 50;
        details.push(format!("{name} {ok_grid}/50 grid, kkt max {worst_kkt:.1e}, >= {min_points} pts"));
    }
    outcome(pass, details.join("; "))
}

// ---------------------------------------------------------------------------
// 4. Constraint equality at opportunistic equilibria
// ---------------------------------------------------------------------------

fn criterion_4() -> Outcome {
    // Reference scenarios along the fig3 degradation path plus random
    // scenarios, all at the engine's default tolerance.
    let mut cases: Vec<(Scenario, Vec<f64>)> = Vec::new();
    for seed in 0..20u64 {
        let base = Scenario::generate_reference(seed, 5, 20).unwrap();
        for step in 0..=4 {
            cases.push((base.scale_user_steps(4, 0.7, step).unwrap(), vec![1e-4; 5]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4_000);
    for seed in 0..100u64 {
        let m = rng.random_range(2..=6usize);
        let l = rng.random_range(1..=12usize);
        let ceiling = log_uniform(&mut rng, 1e-6, 0.1);
        let s = Scenario::generate(seed, m, l, CrossGainCeiling::PerReceiver(ceiling), 0.01).unwrap();
        let vs = (0..m).map(|_| log_uniform(&mut rng, 1e-6, 1e-4)).collect();
        cases.push((s, vs));
    }
    let results: Vec<Option<f64>> = cases
        .par_iter()
        .map(|(s, vs)| {
            let cfg = GameConfig::new(GameKind::OpportunisticGne, vs.iter().map(|&v| UserParams::opportunistic(v)).collect());
            let r = engine::run(s, &cfg).unwrap();
            r.converged.then(|| {
                (0..s.users())
                    .map(|i| {
                        let inter = s.interference_vector(&r.profile, i);
                        let q: f64 = r.profile.row(i).iter().zip(&inter).map(|(p, x)| (p * x).powi(2)).sum();
                        (q - vs[i]).abs() / vs[i]
                    })
                    .fold(0.0, f64::max)
            })
        })
        .collect();
    let converged: Vec<f64> = results.iter().flatten().copied().collect();
    let worst = converged.iter().copied().fold(0.0, f64::max);
    outcome(
        !converged.is_empty() && worst < 1e-8,
        format!(
            "{} of {} runs converged; worst relative |Σ(pI)² − ς| / ς = {worst:.2e} (< 1e-8)",
            converged.len(),
            results.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. Certified uniqueness and convergence
// ---------------------------------------------------------------------------

fn random_condition_scenario(rng: &mut ChaCha8Rng, seed: u64, ceiling_range: (f64, f64)) -> Scenario {
    let m = rng.random_range(2..=5usize);
    let l = rng.random_range(1..=8usize);
    let ceiling = log_uniform(rng, ceiling_range.0, ceiling_range.1);
    let noise = log_uniform(rng, 1e-3, 1e-1);
    Scenario::generate(seed, m, l, CrossGainCeiling::Constant(ceiling), noise).unwrap()
}

fn criterion_5() -> Outcome {
    const WANTED: usize = 100;
    const STARTS: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(5_000);
    let mut opp = Vec::new();
    let mut priced = Vec::new();
    let mut tried = 0u64;
    while (opp.len() < WANTED || priced.len() < WANTED) && tried < 200_000 {
        let s = random_condition_scenario(&mut rng, 50_000 + tried, (1e-9, 1e-3));
        tried += 1;
        let m = s.users();
        if opp.len() < WANTED {
            let vs: Vec<f64> = (0..m).map(|_| log_uniform(&mut rng, 1e-6, 1.0)).collect();
            if analysis::opportunistic_verdict(&s, &vs).unwrap().certified() {
                let cfg = GameConfig::new(GameKind::OpportunisticGne, vs.iter().map(|&v| UserParams::opportunistic(v)).collect());
                opp.push((s.clone(), cfg));
            }
        }
        if priced.len() < WANTED {
            let budgets: Vec<f64> = (0..m).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
            let prices: Vec<f64> = (0..m).map(|_| log_uniform(&mut rng, 0.1, 1000.0)).collect();
            if analysis::priced_verdict(&s, &budgets, &prices).unwrap() {
                let params = budgets.iter().zip(&prices).map(|(&p, &l)| UserParams::priced(p, l)).collect();
                priced.push((s, GameConfig::new(GameKind::PricedWaterfilling, params)));
            }
        }
    }
    let probe = |set: &[(Scenario, GameConfig)]| -> (usize, usize, f64) {
        let reports: Vec<_> = set
            .par_iter()
            .map(|(s, cfg)| engine::uniqueness_probe(s, cfg, STARTS, 2.0).unwrap())
            .collect();
        let ok = reports.iter().filter(|r| r.all_converged && r.max_distance < 1e-6).count();
        let worst = reports.iter().map(|r| r.max_distance).fold(0.0, f64::max);
        (ok, reports.len(), worst)
    };
    let (oo, on, ow) = probe(&opp);
    let (po, pn, pw) = probe(&priced);
    outcome(
        on == WANTED && pn == WANTED && oo == on && po == pn,
        format!(
            "A-certified: {oo}/{on} agree from {STARTS} starts (max dist {ow:.1e}); D-certified: {po}/{pn} (max dist {pw:.1e}); {tried} scenarios drawn"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Consistency of the condition tests
// ---------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6_000);
    let cases: Vec<(Scenario, Vec<f64>)> = (0..1000u64)
        .map(|k| {
            let s = random_condition_scenario(&mut rng, 60_000 + k, (1e-8, 1e-1));
            let vs = (0..s.users()).map(|_| log_uniform(&mut rng, 1e-6, 1.0)).collect();
            (s, vs)
        })
        .collect();
    let verdicts: Vec<(bool, bool)> = cases
        .par_iter()
        .map(|(s, vs)| {
            let v = analysis::opportunistic_verdict(s, vs).unwrap();
            (v.a_is_p_matrix, v.b_below_one)
        })
        .collect();
    let agree = verdicts.iter().filter(|(a, b)| a == b).count();
    let passing = verdicts.iter().filter(|(a, _)| *a).count();

    let mut rng = ChaCha8Rng::seed_from_u64(6_001);
    let mut z_agree = 0;
    let mut z_pass = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8usize);
        let density: f64 = rng.random_range(0.2..1.0);
        let scale = log_uniform(&mut rng, 0.05, 2.0) / n as f64;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                rng.random_range(0.5..2.0)
            } else if rng.random::<f64>() < density {
                -rng.random::<f64>() * scale * 2.0
            } else {
                0.0
            }
        });
        let fast = linalg::is_p_matrix(&m).unwrap();
        let brute = linalg::all_principal_minors_positive(&m).unwrap();
        z_agree += usize::from(fast == brute);
        z_pass += usize::from(brute);
    }
    outcome(
        agree == 1000 && z_agree == 1000,
        format!(
            "A P-test vs ρ(B) < 1: {agree}/1000 agree ({passing} certified); Z-matrix M-test vs minors: {z_agree}/1000 agree ({z_pass} P-matrices)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. Classical limits
// ---------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7_000);
    // λ = 0 pricing is waterfilling.
    let mut worst_zero_price = 0.0_f64;
    for _ in 0..1000 {
        let l = rng.random_range(1..=64usize);
        let i: Vec<f64> = (0..l).map(|_| log_uniform(&mut rng, 1e-3, 10.0)).collect();
        let p = log_uniform(&mut rng, 1e-2, 1e2);
        let a = br_priced(&i, p, 0.0);
        let b = br_waterfill(&i, p);
        let d = a.powers.iter().zip(&b.powers).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / p;
        worst_zero_price = worst_zero_price.max(d);
    }
    let zero_ok = worst_zero_price <= 1e-12;

    // Single user: one sweep for every game.
    let mut single_fail = Vec::new();
    for k in 0..20u64 {
        let l = rng.random_range(1..=8usize);
        let s = Scenario::generate_reference(70_000 + k, 1, l).unwrap();
        let s1 = Scenario::generate_reference(70_100 + k, 1, 1).unwrap();
        let costs = vec![(0..l).map(|_| rng.random_range(0.0..5.0)).collect::<Vec<f64>>()];
        let runs = [
            (&s, GameConfig::new(GameKind::OpportunisticGne, vec![UserParams::opportunistic(1e-4)])),
            (&s, GameConfig::new(GameKind::PowerMinRate, vec![UserParams::power_min(3.0)])),
            (&s, GameConfig::new(GameKind::Waterfilling, vec![UserParams::waterfilling(1.0)])),
            (&s, GameConfig::new(GameKind::PricedWaterfilling, vec![UserParams::priced(1.0, 50.0)])),
            (&s, GameConfig::fixed_priced(&[1.0], costs)),
            (&s1, GameConfig::new(GameKind::Tpc, vec![UserParams::tpc(2.0)])),
            (&s1, GameConfig::new(GameKind::Opc, vec![UserParams::opc(1e-4)])),
        ];
        for (sc, cfg) in runs {
            let r = engine::run(sc, &cfg).unwrap();
            if !(r.converged && r.iterations == 1) {
                single_fail.push(format!("{:?}", cfg.kind));
            }
        }
    }

    // TPC: feasibility verdict vs observed behaviour.
    let tpc: Vec<(bool, bool, bool, f64)> = (0..200u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(71_000 + k);
            let m = rng.random_range(2..=5usize);
            let s = Scenario::generate(71_000 + k, m, 1, CrossGainCeiling::Constant(0.5), 0.01).unwrap();
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let rho = tpc_feasible(&s, &raw).unwrap().spectral_radius;
            let t = log_uniform(&mut rng, 0.5, 2.0);
            let targets: Vec<f64> = raw.iter().map(|g| g * t / rho).collect();
            let verdict = tpc_feasible(&s, &targets).unwrap().feasible;
            let cfg = GameConfig::new(GameKind::Tpc, targets.iter().map(|&g| UserParams::tpc(g)).collect())
                .with_tolerance(1e-12)
                .with_max_iterations(1_000_000);
            let r = engine::run(&s, &cfg).unwrap();
            let mut target_err = 0.0_f64;
            if r.converged {
                for i in 0..m {
                    let g = s.sinr(&r.profile, i, 0).unwrap();
                    target_err = target_err.max((g - targets[i]).abs() / targets[i]);
                }
                let exact = tpc_fixed_point(&s, &targets).unwrap().unwrap_or_default();
                for (i, p) in exact.iter().enumerate() {
                    target_err = target_err.max((r.profile.get(i, 0) - p).abs() / p);
                }
            }
            let matches = (verdict && r.converged) || (!verdict && r.diverged);
            (matches, verdict, r.converged, target_err)
        })
        .collect();
    let matches = tpc.iter().filter(|t| t.0).count();
    let feasible = tpc.iter().filter(|t| t.1).count();
    let worst_target = tpc.iter().filter(|t| t.2).map(|t| t.3).fold(0.0, f64::max);

    outcome(
        zero_ok && single_fail.is_empty() && matches == 200 && worst_target < 1e-8,
        format!(
            "λ=0 vs waterfill max diff {worst_zero_price:.1e}·P; single-user one-sweep failures: {}; TPC verdict matches {matches}/200 ({feasible} feasible), worst target error {worst_target:.1e}",
            if single_fail.is_empty() { "none".to_string() } else { single_fail.join(",") }
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Determinism
// ---------------------------------------------------------------------------

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8(tmp: &Path) -> Outcome {
    let presets = [
        Preset::Fig1OpcConvergence,
        Preset::Fig2OpcDegradation,
        Preset::Fig3OpcVsPowermin,
        Preset::Fig4PricingSweep,
        Preset::Fig56FixedVsProposedDegrade,
        Preset::Fig78FixedVsProposedImprove,
    ];
    let mut files = 0;
    let mut mismatched = Vec::new();
    for p in presets {
        let a = tmp.join(format!("c8/{}_a", p.name()));
        let b = tmp.join(format!("c8/{}_b", p.name()));
        run_experiment(&preset_spec(p, 7..10, &a)).unwrap();
        run_experiment(&preset_spec(p, 7..10, &b)).unwrap();
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        files += fa.len();
        if fa.is_empty() || fa != fb {
            mismatched.push(p.name());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{files} CSV files across 6 presets x 3 seeds rerun; mismatched presets: {mismatched:?}"),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("1 opportunistic vs power-min trade-off", Box::new(|| criterion_1(tmp.path()))),
        ("2 proposed vs fixed pricing", Box::new(|| criterion_2(tmp.path()))),
        ("3 best responses vs grid oracles", Box::new(criterion_3)),
        ("4 constraint equality at equilibrium", Box::new(criterion_4)),
        ("5 certified uniqueness and convergence", Box::new(criterion_5)),
        ("6 condition-test consistency", Box::new(criterion_6)),
        ("7 classical limits", Box::new(criterion_7)),
        ("8 determinism", Box::new(|| criterion_8(tmp.path()))),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, f) in &criteria {
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
