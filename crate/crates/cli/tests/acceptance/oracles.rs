//! Brute-force references written without the solver's kernels.

use stopgame::game::{GameConfig, State};
use stopgame::policy::{AttackerPolicy, AttackerView, DefenderPolicy, DefenderView};

/// Stage reward to the defender, case by case.
pub fn reward(s: usize, l: usize, d: bool, a: bool, cfg: &GameConfig) -> f64 {
    let lf = l as f64;
    match (s, d, a) {
        (2, _, _) => 0.0,
        (0, true, _) => cfg.r_cost / lf,
        (0, false, _) => 0.0,
        (_, _, true) => 0.0,
        (_, true, false) => cfg.r_st / lf,
        (_, false, false) => cfg.r_int,
    }
}

/// Distribution of the next state over `[0, 1, terminal]`.
pub fn next(s: usize, l: usize, d: bool, a: bool, phi: f64) -> [f64; 3] {
    if s == 2 || (d && l == 1) {
        return [0.0, 0.0, 1.0];
    }
    match (s, a) {
        (0, false) => [1.0, 0.0, 0.0],
        (0, true) => [0.0, 1.0, 0.0],
        (_, true) => [0.0, 0.0, 1.0],
        (_, false) => [0.0, 1.0 - phi, phi],
    }
}

fn obs(cfg: &GameConfig, s: usize, o: usize) -> f64 {
    cfg.obs.prob(State::from_index(s), o)
}

/// Posterior over `(s, a2, s')` paths; `None` when the observation is
/// impossible.
pub fn bayes(b: f64, l: usize, d: bool, o: usize, q: [f64; 2], cfg: &GameConfig) -> Option<f64> {
    let mut joint = [0.0; 2];
    for s in 0..2 {
        let ps = if s == 1 { b } else { 1.0 - b };
        for (a, pa) in [(true, q[s]), (false, 1.0 - q[s])] {
            let p = next(s, l, d, a, cfg.phi(l));
            for s2 in 0..2 {
                joint[s2] += ps * pa * p[s2] * obs(cfg, s2, o);
            }
        }
    }
    let z = joint[0] + joint[1];
    (z > 0.0).then(|| joint[1] / z)
}

fn att(pi2: &dyn AttackerPolicy, s: usize, b: f64, l: usize) -> f64 {
    pi2.stop_prob(&AttackerView {
        state: State::from_index(s),
        belief: b,
        stops: l,
        alert: false,
    })
}

fn def(pi1: &dyn DefenderPolicy, b: f64, l: usize) -> f64 {
    pi1.stop_prob(&DefenderView {
        belief: b,
        stops: l,
        alert: false,
        intrusion: false,
    })
}

/// `h`-step optimal defender value by full expansion of the game tree.
pub fn defender_tree(b: f64, l: usize, h: usize, pi2: &dyn AttackerPolicy, cfg: &GameConfig) -> f64 {
    if h == 0 {
        return 0.0;
    }
    let n = cfg.obs.n();
    let mut best = f64::NEG_INFINITY;
    for d in [true, false] {
        let mut v = 0.0;
        let mut joint = vec![[0.0; 2]; n];
        for s in 0..2 {
            let ps = if s == 1 { b } else { 1.0 - b };
            let q = att(pi2, s, b, l);
            for (a, pa) in [(true, q), (false, 1.0 - q)] {
                v += ps * pa * reward(s, l, d, a, cfg);
                let p = next(s, l, d, a, cfg.phi(l));
                for s2 in 0..2 {
                    for (o, j) in joint.iter_mut().enumerate() {
                        j[s2] += ps * pa * p[s2] * obs(cfg, s2, o);
                    }
                }
            }
        }
        let l2 = if d { l - 1 } else { l };
        for j in &joint {
            let p = j[0] + j[1];
            if p > 0.0 && l2 >= 1 {
                v += cfg.gamma * p * defender_tree(j[1] / p, l2, h - 1, pi2, cfg);
            }
        }
        best = best.max(v);
    }
    best
}

/// `h`-step optimal attacker value (negated defender reward) with the
/// defender filtering against `model`.
pub fn attacker_tree(
    s: usize,
    b: f64,
    l: usize,
    h: usize,
    pi1: &dyn DefenderPolicy,
    model: &dyn AttackerPolicy,
    cfg: &GameConfig,
) -> f64 {
    if h == 0 {
        return 0.0;
    }
    let stop = def(pi1, b, l);
    let q = [att(model, 0, b, l), att(model, 1, b, l)];
    let mut best = f64::NEG_INFINITY;
    for a in [true, false] {
        let mut v = 0.0;
        for (d, pd) in [(true, stop), (false, 1.0 - stop)] {
            if pd == 0.0 {
                continue;
            }
            v -= pd * reward(s, l, d, a, cfg);
            let l2 = if d { l - 1 } else { l };
            if l2 == 0 {
                continue;
            }
            let p = next(s, l, d, a, cfg.phi(l));
            for s2 in 0..2 {
                for o in 0..cfg.obs.n() {
                    let po = pd * p[s2] * obs(cfg, s2, o);
                    if po > 0.0 {
                        // An observation the model rules out resets the belief
                        // to its likelihood ratio.
                        let b2 = bayes(b, l, d, o, q, cfg).unwrap_or_else(|| {
                            let (f0, f1) = (obs(cfg, 0, o), obs(cfg, 1, o));
                            if f0 + f1 > 0.0 {
                                f1 / (f0 + f1)
                            } else {
                                b
                            }
                        });
                        v += cfg.gamma * po * attacker_tree(s2, b2, l2, h - 1, pi1, model, cfg);
                    }
                }
            }
        }
        best = best.max(v);
    }
    best
}
