use crate::error::Result;
use crate::game::{
    filter_or_reset, predicted_mass, reward, transition_row, Action, ActionPair, GameConfig, State,
};
use crate::policy::{AttackerPolicy, DefenderPolicy, DefenderView};

use super::{
    cell_value, check_vi, class_of, class_probs, layout, sweep, BeliefGrid, BeliefGridSolution,
    CellBuilder, ViConfig, TIE_MARGIN,
};

/// Attacker best response to a fixed defender policy. The defender's belief
/// evolves through its filter with `pi2_filter` as the attacker model, which
/// is part of the environment and not of the attacker's choice. Values are in
/// attacker reward.
pub fn attacker_best_response_vi(
    pi1: &dyn DefenderPolicy,
    pi2_filter: &dyn AttackerPolicy,
    cfg: &GameConfig,
    vi: &ViConfig,
) -> Result<BeliefGridSolution> {
    check_vi(vi, cfg)?;
    let grid = BeliefGrid::new(vi.grid);
    let stops = cfg.stops;
    let classes = if pi1.uses_alert() || pi2_filter.uses_alert() {
        2
    } else {
        1
    };
    let n = 2 * stops * classes * grid.len();
    let base = |s: usize, l: usize, c: usize| layout(stops, classes, grid, s, l, c, 0);
    let n_obs = cfg.obs.n();

    let mut cb = CellBuilder::default();
    let mut next_b = vec![0.0; n_obs];
    for s in State::LIVE {
        for l in 1..=stops {
            for c in 0..classes {
                for i in 0..grid.len() {
                    let b = grid.point(i);
                    let alert = c == 1;
                    let d = pi1.stop_prob(&DefenderView {
                        belief: b,
                        stops: l,
                        alert,
                        intrusion: s == State::Intrusion,
                    });
                    let q = pi2_filter.stop_probs(b, l, alert);
                    // Filter posteriors depend on the defender's action only.
                    let posts: Vec<(Action, f64, Vec<f64>)> = Action::BOTH
                        .iter()
                        .map(|&a1| {
                            let pa1 = if a1.is_stop() { d } else { 1.0 - d };
                            let mass = predicted_mass(b, a1, q, l, cfg);
                            for (o, nb) in next_b.iter_mut().enumerate() {
                                *nb = filter_or_reset(mass, o, &cfg.obs, b);
                            }
                            (a1, pa1, next_b.clone())
                        })
                        .collect();
                    for a2 in Action::BOTH {
                        let start = cb.begin();
                        let mut r = 0.0;
                        for (a1, pa1, post) in &posts {
                            if *pa1 == 0.0 {
                                continue;
                            }
                            let a = ActionPair::new(*a1, a2);
                            r -= pa1 * reward(s, l, a, cfg);
                            let next_l = if a1.is_stop() { l - 1 } else { l };
                            if next_l == 0 {
                                continue;
                            }
                            let row = transition_row(s, l, a, cfg);
                            for s2 in State::LIVE {
                                let pt = pa1 * row[s2.index()];
                                if pt == 0.0 {
                                    continue;
                                }
                                for (o, &nb) in post.iter().enumerate() {
                                    let p = pt * cfg.obs.prob(s2, o);
                                    cb.push(p, base(s2.index(), next_l, class_of(o, classes)), grid, nb);
                                }
                            }
                        }
                        cb.finish(r, start);
                    }
                }
            }
        }
    }

    let gamma = cfg.gamma;
    let (cells, entries) = (&cb.cells, &cb.entries);
    let q = |v: &[f64], x: usize| {
        [
            cell_value(&cells[2 * x], entries, v, gamma),
            cell_value(&cells[2 * x + 1], entries, v, gamma),
        ]
    };
    let res = sweep(n, vi, |v, x| {
        let [qs, qc] = q(v, x);
        qs.max(qc)
    });
    let policy = (0..n)
        .map(|x| {
            let [qs, qc] = q(&res.values, x);
            if qs > qc + TIE_MARGIN {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let initial_value = class_probs(&cfg.obs, State::NoIntrusion, classes)
        .iter()
        .enumerate()
        .map(|(c, p)| p * res.values[base(0, stops, c)])
        .sum();
    Ok(BeliefGridSolution {
        grid,
        stops,
        layers: 2,
        classes,
        values: res.values,
        policy,
        residual: *res.residuals.last().unwrap_or(&0.0),
        iterations: res.residuals.len(),
        residuals: res.residuals,
        converged: res.converged,
        initial_value,
    })
}
