/// Solution of a 2×4 stage game with rows `[S, C]` for the maximizing
/// defender.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageSolution {
    /// Defender probability of the first row.
    pub stop_prob: f64,
    /// Minimizer mixture over the columns.
    pub attacker: [f64; 4],
    pub value: f64,
}

const ACTIVE_SLACK: f64 = 1e-9;

/// Maximin of `p ↦ min_j (p A[0][j] + (1-p) A[1][j])` over `p ∈ [0,1]`.
///
/// The lower envelope is concave and piecewise linear, so its maximum sits at
/// an endpoint or where two column lines cross; all such points are
/// enumerated.
pub fn solve_stage_game(a: &[[f64; 4]; 2]) -> StageSolution {
    let line = |j: usize, p: f64| p * a[0][j] + (1.0 - p) * a[1][j];
    let envelope = |p: f64| (0..4).map(|j| line(j, p)).fold(f64::INFINITY, f64::min);
    let slope = |j: usize| a[0][j] - a[1][j];

    let mut best_p = 0.0;
    let mut best = envelope(0.0);
    let mut consider = |p: f64| {
        let v = envelope(p);
        if v > best + 1e-13 {
            best = v;
            best_p = p;
        }
    };
    consider(1.0);
    for i in 0..4 {
        for j in i + 1..4 {
            let ds = slope(i) - slope(j);
            if ds != 0.0 {
                let p = (a[1][j] - a[1][i]) / ds;
                if p > 0.0 && p < 1.0 {
                    consider(p);
                }
            }
        }
    }

    let active: Vec<usize> = (0..4)
        .filter(|&j| line(j, best_p) <= best + ACTIVE_SLACK * (1.0 + best.abs()))
        .collect();
    let steepest = |cmp: fn(f64, f64) -> bool| {
        active
            .iter()
            .copied()
            .reduce(|x, y| if cmp(slope(y), slope(x)) { y } else { x })
            .expect("envelope has an active column")
    };
    let up = steepest(|y, x| y > x);
    let down = steepest(|y, x| y < x);
    let mut attacker = [0.0; 4];
    if best_p == 0.0 {
        attacker[down] = 1.0;
    } else if best_p == 1.0 {
        attacker[up] = 1.0;
    } else {
        let (su, sd) = (slope(up), slope(down));
        if su - sd > 0.0 {
            // Net slope zero keeps the defender indifferent at p*.
            let wu = -sd / (su - sd);
            attacker[up] += wu;
            attacker[down] += 1.0 - wu;
        } else {
            attacker[up] = 1.0;
        }
    }
    StageSolution {
        stop_prob: best_p,
        attacker,
        value: best,
    }
}
