use std::io::Write;
use std::path::Path;

use stopgame::evaluator::{minimax_value_iteration, BeliefGridSolution, ViConfig};

use super::create_file;
use crate::error::{io_err, CliError, CliResult};
use crate::spec::Experiment;

/// Minimax value iteration on a `grid`-cell belief grid; writes `l,b,V`.
pub fn value(exp: &Experiment, grid: usize, out: &Path) -> CliResult<BeliefGridSolution> {
    if grid == 0 {
        return Err(CliError::Input("--grid must be positive".into()));
    }
    let vi = ViConfig { grid, ..exp.vi() };
    let sol = minimax_value_iteration(&exp.game, &vi)?;
    if !sol.converged {
        return Err(CliError::Numeric(format!(
            "value iteration stopped after {} sweeps with residual {:.3e} > {:.1e}",
            sol.iterations, sol.residual, vi.tol
        )));
    }
    let mut f = create_file(out)?;
    sol.write_values_csv(0, &mut f)?;
    f.flush().map_err(|e| io_err(out, e))?;
    println!("converged after {} sweeps, residual {:.3e}", sol.iterations, sol.residual);
    for l in 1..=sol.stops {
        let (i, v) = (0..sol.grid.len())
            .map(|i| (i, sol.value(0, l, 0, i)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is nonempty");
        println!("l={l}: min V = {v:.4} at b = {:.2}", sol.grid.point(i));
    }
    Ok(sol)
}
