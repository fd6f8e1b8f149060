//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion followed by a summary.
//!
//! A failing criterion is reported, not hidden: its line reads FAIL with the
//! measured numbers. The process exits nonzero only if the harness itself
//! breaks (a criterion panics).

mod oracles;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stopgame::evaluator::*;
use stopgame::game::*;
use stopgame::obs_model::{em_fit, fit_observation_model, TraceDataset};
use stopgame::policy::*;
use stopgame::spsa::{rademacher, spsa_gradient_along};
use stopgame::strategies::{Player, ThresholdStrategy};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_stopgame")
}

// 1
fn kernel_exactness() -> Outcome {
    let start = Instant::now();
    let cfg = GameConfig::desk(7, 10);
    let states = [State::NoIntrusion, State::Intrusion, State::Terminal];
    let mut worst_sum = 0.0f64;
    let mut mismatches = 0;
    let mut cases = 0;
    for (si, &s) in states.iter().enumerate() {
        for l in 1..=7 {
            for d in Action::BOTH {
                for a in Action::BOTH {
                    let pair = ActionPair::new(d, a);
                    let row: Vec<f64> = states
                        .iter()
                        .map(|&s2| transition_prob(s2, s, l, pair, &cfg).expect("l in range"))
                        .collect();
                    worst_sum = worst_sum.max((row.iter().sum::<f64>() - 1.0).abs());
                    let want = oracles::next(si, l, d.is_stop(), a.is_stop(), 1.0 / (2.0 * l as f64));
                    let r = reward(s, l, pair, &cfg);
                    let r_want = oracles::reward(si, l, d.is_stop(), a.is_stop(), &cfg);
                    if row.iter().zip(want).any(|(x, y)| (x - y).abs() > 1e-15) || r != r_want {
                        mismatches += 1;
                    }
                    cases += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_sum < 1e-12 && mismatches == 0 && secs < 1.0,
        format!("{cases} (s,l,a) cases, max |row sum - 1| = {worst_sum:.1e}, {mismatches} mismatches, {secs:.3} s"),
    )
}

// 2
fn filter_correctness() -> Outcome {
    let start = Instant::now();
    let obs = ObservationModel::new(vec![0.6, 0.3, 0.1], vec![0.1, 0.3, 0.6]).expect("valid pmfs");
    let cfg = GameConfig::reference(3, obs);
    let corners = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    let (mut worst, mut compared, mut bad) = (0.0f64, 0, 0);
    for i in 0..=100 {
        let b = i as f64 / 100.0;
        for o in 0..3 {
            for q in corners {
                for l in 1..=3 {
                    for a1 in Action::BOTH {
                        let got = belief_update(Belief::new(b).expect("b in [0,1]"), a1, o, AttackerStop::new(q[0], q[1]), l, &cfg);
                        match (oracles::bayes(b, l, a1.is_stop(), o, q, &cfg), got) {
                            (Some(want), Ok(got)) => {
                                worst = worst.max((got.b1() - want).abs());
                                compared += 1;
                            }
                            (None, Err(stopgame::Error::FilterDegenerate)) => {}
                            _ => bad += 1,
                        }
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && bad == 0 && secs < 10.0,
        format!("{compared} posteriors, max error {worst:.1e}, {bad} disagreements on degenerate cases, {secs:.3} s"),
    )
}

// 3
fn spsa_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut exact_err, mut mc_worst) = (0.0f64, 0.0f64);
    let mut mc_by_dim = Vec::new();
    for dim in 1..=4 {
        // f(θ) = -½ θᵀQθ + hᵀθ with Q symmetric positive definite.
        let m: Vec<Vec<f64>> = (0..dim).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let q: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| (0..dim).map(|k| m[i][k] * m[j][k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let h: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let f = |t: &[f64]| {
            let quad: f64 = (0..dim).map(|i| (0..dim).map(|j| t[i] * q[i][j] * t[j]).sum::<f64>()).sum();
            -0.5 * quad + h.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()
        };
        let theta: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let grad: Vec<f64> = (0..dim).map(|i| h[i] - (0..dim).map(|j| q[i][j] * theta[j]).sum::<f64>()).collect();

        let mut mean = vec![0.0; dim];
        for code in 0..(1u32 << dim) {
            let delta: Vec<f64> = (0..dim).map(|k| if code >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let g = spsa_gradient_along(f, &theta, 0.7, &delta);
            for k in 0..dim {
                mean[k] += g[k] / (1u32 << dim) as f64;
            }
        }
        for k in 0..dim {
            exact_err = exact_err.max((mean[k] - grad[k]).abs() / grad[k].abs().max(1.0));
        }

        let draws = 10_000;
        let mut mc = vec![0.0; dim];
        for _ in 0..draws {
            let delta = rademacher(dim, &mut rng);
            let g = spsa_gradient_along(f, &theta, 0.7, &delta);
            for k in 0..dim {
                mc[k] += g[k] / draws as f64;
            }
        }
        let rel = (0..dim).map(|k| (mc[k] - grad[k]).abs() / grad[k].abs()).fold(0.0, f64::max);
        mc_worst = mc_worst.max(rel);
        mc_by_dim.push(format!("d={dim}: {:.2}%", 100.0 * rel));
    }
    outcome(
        exact_err < 1e-12 && mc_worst <= 0.01,
        format!(
            "exact expectation max relative error {exact_err:.1e}; Monte Carlo (10^4 draws) max relative error per dimension [{}], tolerance 1%",
            mc_by_dim.join(", ")
        ),
    )
}

// 4
fn dp_vs_brute_force() -> Outcome {
    let obs = ObservationModel::new(vec![1.0, 0.0], vec![0.0, 1.0]).expect("valid pmfs");
    let cfg = GameConfig::reference(2, obs);
    let pi2 = FnAttacker(|v: &AttackerView| match v.state {
        State::NoIntrusion => 0.2 + 0.3 * v.belief / v.stops as f64,
        State::Intrusion => 0.1 + 0.6 * v.belief * v.belief,
        State::Terminal => 0.0,
    });
    let pi1 = FnDefender(|v: &DefenderView| (v.belief * v.belief + 0.05 * v.stops as f64).min(1.0));
    let h = 3;
    let (mut worst_d, mut worst_a, mut points) = (0.0f64, 0.0f64, 0);
    for k in [4, 10] {
        let vi = ViConfig::horizon(k, h);
        let d = defender_best_response_vi(&pi2, &cfg, &vi).expect("solves");
        let a = attacker_best_response_vi(&pi1, &pi2, &cfg, &vi).expect("solves");
        for l in 1..=2 {
            for i in 0..=k {
                let b = i as f64 / k as f64;
                worst_d = worst_d.max((d.value(0, l, 0, i) - oracles::defender_tree(b, l, h, &pi2, &cfg)).abs());
                for s in 0..2 {
                    let want = oracles::attacker_tree(s, b, l, h, &pi1, &pi2, &cfg);
                    worst_a = worst_a.max((a.value(s, l, 0, i) - want).abs());
                }
                points += 1;
            }
        }
    }
    outcome(
        worst_d <= 1e-6 && worst_a <= 1e-6,
        format!("{points} grid points, K in {{4, 10}}, H=3: max defender error {worst_d:.1e}, max attacker error {worst_a:.1e}"),
    )
}

// 5
fn defender_threshold_structure() -> Outcome {
    let cfg = GameConfig::desk(3, 10);
    let tp2 = check_tp2(&cfg.obs);
    // Belief-independent attackers with state-dependent stop probabilities.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = Vec::new();
    let mut all_converged = true;
    for _ in 0..10 {
        let q = AttackerStop::new(rng.gen(), rng.gen());
        let sol = defender_best_response_vi(&ConstantAttacker(q), &cfg, &ViConfig::default()).expect("solves");
        all_converged &= sol.converged;
        let r = check_threshold_structure(&sol);
        for v in r.violations {
            violations.push(format!("q=({:.3}, {:.3}) {v}", q.get(State::NoIntrusion), q.get(State::Intrusion)));
        }
    }
    outcome(
        tp2.pass && all_converged && violations.is_empty(),
        format!("10 attackers, L=3, n=10, K=100, TP2 {}: {} violations {:?}", tp2.pass, violations.len(), violations),
    )
}

// 6
fn attacker_interval_structure() -> Outcome {
    let cfg = GameConfig::desk(3, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = Vec::new();
    let mut min_value = f64::INFINITY;
    for _ in 0..10 {
        let theta: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let d = DefenderMixture::pure(&ThresholdStrategy::new(Player::Defender, theta).expect("valid theta"));
        let model = ConstantAttacker(AttackerStop::new(rng.gen(), rng.gen()));
        let sol = attacker_best_response_vi(&d, &model, &cfg, &ViConfig::default()).expect("solves");
        min_value = min_value.min(sol.values.iter().copied().fold(f64::INFINITY, f64::min));
        match check_attacker_structure(&sol, &d, 1e-6) {
            Ok(r) => violations.extend(r.violations),
            Err(e) => violations.push(e.to_string()),
        }
    }
    outcome(
        violations.is_empty(),
        format!("10 threshold defenders, K=100: min attacker value {min_value:.2e}, {} violations {:?}", violations.len(), violations),
    )
}

// 7
fn value_function_shape() -> Outcome {
    let start = Instant::now();
    let cfg = GameConfig::desk(7, 100);
    let sol = minimax_value_iteration(&cfg, &ViConfig::default()).expect("solves");
    let secs = start.elapsed().as_secs_f64();
    let k = sol.grid.k;
    let curve = |l: usize| (0..=k).map(|i| sol.value(0, l, 0, i)).collect::<Vec<f64>>();
    let mut problems = Vec::new();
    let mut argmins = Vec::new();
    for l in 1..=7 {
        let v = curve(l);
        let worst = (1..k).map(|i| v[i - 1] + v[i + 1] - 2.0 * v[i]).fold(f64::INFINITY, f64::min);
        if worst < -1e-3 {
            problems.push(format!("l={l} second difference {worst:.1e}"));
        }
        if v[k].abs() > 1e-2 {
            problems.push(format!("l={l} V(1) = {:.3e}", v[k]));
        }
        let imin = (0..=k).min_by(|&a, &b| v[a].total_cmp(&v[b])).expect("nonempty");
        let bmin = sol.grid.point(imin);
        argmins.push(bmin);
        if !(bmin > 0.05 && bmin < 0.6) {
            problems.push(format!("l={l} minimum at b={bmin}"));
        }
    }
    // Near the minimum of l=1: five grid cells either side.
    let (v1, v7) = (curve(1), curve(7));
    let imin = (0..=k).min_by(|&a, &b| v1[a].total_cmp(&v1[b])).expect("nonempty");
    for i in imin.saturating_sub(5)..=(imin + 5).min(k) {
        if v1[i] > v7[i] + 1e-3 {
            problems.push(format!("V(b={}, l=1) = {:.4} > V(l=7) = {:.4}", sol.grid.point(i), v1[i], v7[i]));
        }
    }
    if !sol.converged {
        problems.push("value iteration did not converge".into());
    }
    outcome(
        problems.is_empty() && secs < 300.0,
        format!(
            "L=7, n=100, K=100, {} sweeps, minima at b={:?}, at the l=1 minimum V l=1 {:.4} vs l=7 {:.4}, {secs:.1} s {problems:?}",
            sol.iterations,
            argmins,
            v1[imin],
            v7[imin]
        ),
    )
}

fn write_desk_experiment(dir: &Path, seeds: &str, spsa: &str, max_iters: usize, episodes: usize) -> PathBuf {
    std::fs::write(dir.join("game.json"), GameConfig::desk(3, 10).to_json_string()).expect("writes");
    let spec = format!(
        r#"{{
  "game": "game.json",
  "spsa": {spsa},
  "eval": {{ "grid": 100, "tol": 1e-6, "delta": 1e-3, "max_iters": {max_iters}, "seeds": {seeds}, "episodes": {episodes} }},
  "outputs": "runs"
}}"#
    );
    let path = dir.join("spec.json");
    std::fs::write(&path, spec).expect("writes");
    path
}

fn exploitability_column(curve: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(curve).expect("curve exists");
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).expect("column").parse().expect("number"))
        .collect()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// 8
fn tfp_convergence(work: &Path) -> Outcome {
    let start = Instant::now();
    let spec = write_desk_experiment(
        work,
        "[1, 2, 3, 4]",
        r#"{ "a": 8.0, "c": 10.0, "N": 50, "episodes_per_eval": 100, "restarts": 4 }"#,
        100,
        1000,
    );
    let out = work.join("runs");
    let o = Command::new(bin())
        .args(["train", "--config", spec.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .expect("binary runs");
    let secs = start.elapsed().as_secs_f64();
    if !o.status.success() {
        return outcome(false, format!("train failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let mut first = Vec::new();
    let mut last = Vec::new();
    for s in 1..=4 {
        let e = exploitability_column(&out.join(format!("seed_{s}/curve.csv")));
        first.push(e[0]);
        last.push(*e.last().expect("nonempty"));
    }
    let (m_first, m_last) = (median(&first), median(&last));
    let (alert, _) = alert_baseline_exploitability(&GameConfig::desk(3, 10), &ViConfig::default()).expect("solves");
    let ratio = m_last / m_first;
    outcome(
        ratio <= 0.2 && m_last < alert.value() && secs < 1800.0,
        format!(
            "L=3, n=10, K=100, 100 iterations, 4 seeds: iteration 1 {first:.3?} (median {m_first:.3}), final {last:.3?} (median {m_last:.3}), ratio {:.1}% (limit 20%), AlertOnAny baseline {:.3}, {secs:.0} s",
            100.0 * ratio,
            alert.value()
        ),
    )
}

fn evaluate_reward(spec: &Path, defender: &str, episodes: usize) -> Option<(f64, f64)> {
    let o = Command::new(bin())
        .args(["evaluate", "--config", spec.to_str()?, "--defender", defender, "--attacker", "tfp", "--episodes"])
        .arg(episodes.to_string())
        .output()
        .ok()?;
    if !o.status.success() {
        return None;
    }
    let csv = std::fs::read_to_string(spec.parent()?.join(format!("runs/evaluate_{defender}_tfp.csv"))).ok()?;
    let row: Vec<f64> = csv.lines().nth(1)?.split(',').skip(1).take(3).map(|x| x.parse().ok()).collect::<Option<_>>()?;
    Some((row[0], row[0] - row[1]))
}

// 9
fn baseline_ordering(work: &Path) -> Outcome {
    let spec = work.join("spec.json");
    if !work.join("runs/seed_1/attacker.json").is_file() {
        return outcome(false, "no trained strategies from criterion 8");
    }
    let episodes = 10_000;
    let get = |d| evaluate_reward(&spec, d, episodes);
    let (Some(oracle), Some(tfp), Some(alert)) = (get("oracle"), get("tfp"), get("alert-any")) else {
        return outcome(false, "evaluation failed");
    };
    let separated = |hi: (f64, f64), lo: (f64, f64)| hi.0 - hi.1 > lo.0 + lo.1;
    outcome(
        separated(oracle, tfp) && separated(tfp, alert),
        format!(
            "seed 1 attacker mixture, 10^4 episodes: oracle {:.4} ± {:.4}, T-FP {:.4} ± {:.4}, AlertOnAny {:.4} ± {:.4}",
            oracle.0, oracle.1, tfp.0, tfp.1, alert.0, alert.1
        ),
    )
}

// 10
fn em_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let draw = |rng: &mut ChaCha8Rng, comps: &[(f64, f64, f64)], n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let &(_, m, s) = comps
                    .iter()
                    .find(|(w, _, _)| {
                        acc += w;
                        u < acc
                    })
                    .unwrap_or(comps.last().expect("nonempty"));
                Normal::new(m, s).expect("valid normal").sample(rng)
            })
            .collect()
    };
    let mut decreases = 0;
    for _ in 0..20 {
        let k = rng.gen_range(1..=3);
        let comps: Vec<(f64, f64, f64)> = (0..k)
            .map(|_| (1.0 / k as f64, rng.gen_range(0.0..50.0), rng.gen_range(0.5..6.0)))
            .collect();
        let n = rng.gen_range(50..400);
        let xs = draw(&mut rng, &comps, n);
        let fit = em_fit(&xs, rng.gen_range(1..=3), 200, 0.0).expect("fits");
        decreases += fit
            .log_likelihood
            .windows(2)
            .filter(|w| w[1] < w[0] - 1e-9 * w[0].abs().max(1.0))
            .count();
    }

    let xs = draw(&mut rng, &[(0.4, 10.0, 2.0), (0.6, 40.0, 4.0)], 4000);
    let fit = em_fit(&xs, 2, 500, 1e-10).expect("fits");
    let mut means: Vec<f64> = fit.params.components.iter().map(|c| c.mean).collect();
    means.sort_by(f64::total_cmp);
    let recovery = ((means[0] - 10.0).abs() / 10.0).max((means[1] - 40.0).abs() / 40.0);

    let mut data = TraceDataset::default();
    for x in draw(&mut rng, &[(1.0, 3.0, 1.5)], 3000) {
        data.rows.push((0, x.max(0.0)));
    }
    for x in draw(&mut rng, &[(1.0, 8.0, 1.5)], 3000) {
        data.rows.push((1, x.max(0.0)));
    }
    let model = fit_observation_model(&data, 1, 1, 12, 200, 1e-9).expect("fits").model;
    let valid = [State::NoIntrusion, State::Intrusion]
        .iter()
        .all(|&s| model.pmf(s).iter().all(|p| *p >= 0.0) && (model.pmf(s).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let tp2 = check_tp2(&model);
    outcome(
        decreases == 0 && recovery <= 0.05 && valid && tp2.pass,
        format!(
            "20 datasets, {decreases} log-likelihood decreases; recovered means {means:.3?} (max relative error {:.2}%); pmfs valid {valid}; TP2 {} ({} negative of {} minors)",
            100.0 * recovery,
            tp2.pass,
            tp2.negative_minors,
            tp2.minors
        ),
    )
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).expect("inside").to_path_buf(), std::fs::read(&p).expect("readable")));
            }
        }
    }
    out.sort();
    out
}

// 11
fn determinism(work: &Path) -> Outcome {
    let spec = write_desk_experiment(work, "[1, 2]", r#"{ "N": 10, "episodes_per_eval": 30, "restarts": 2 }"#, 5, 200);
    let mut trees = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = work.join(run);
        let o = Command::new(bin())
            .env("STOPGAME_THREADS", threads)
            .args(["train", "--config", spec.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .expect("binary runs");
        if !o.status.success() {
            return outcome(false, format!("train failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
        trees.push(read_tree(&out));
    }
    let files = trees[0].len();
    outcome(
        files == 7 && trees[0] == trees[1] && trees[0] == trees[2],
        format!(
            "{files} files per run; repeat identical {}, 1 vs 4 workers identical {}",
            trees[0] == trees[1],
            trees[0] == trees[2]
        ),
    )
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let train_dir = work.path().join("tfp");
    let det_dir = work.path().join("determinism");
    std::fs::create_dir_all(&train_dir).expect("creates");
    std::fs::create_dir_all(&det_dir).expect("creates");

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("kernel exactness", Box::new(kernel_exactness)),
        ("filter correctness", Box::new(filter_correctness)),
        ("SPSA soundness", Box::new(spsa_soundness)),
        ("DP vs brute force", Box::new(dp_vs_brute_force)),
        ("defender threshold structure", Box::new(defender_threshold_structure)),
        ("attacker interval structure", Box::new(attacker_interval_structure)),
        ("value function shape", Box::new(value_function_shape)),
        ("T-FP convergence", Box::new(|| tfp_convergence(&train_dir))),
        ("baseline ordering", Box::new(|| baseline_ordering(&train_dir))),
        ("EM properties", Box::new(em_properties)),
        ("determinism", Box::new(|| determinism(&det_dir))),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {} ({name}): {} | {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push((i + 1).to_string());
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!(
            "acceptance: {} of {} criteria pass; failing: {}",
            criteria.len() - failed.len(),
            criteria.len(),
            failed.join(", ")
        );
    }
}
