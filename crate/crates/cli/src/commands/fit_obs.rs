use std::io::Write;
use std::path::Path;

use stopgame::evaluator::{check_tp2, Tp2Report};
use stopgame::obs_model::{fit_observation_model, ingest_trace};

use super::create_file;
use crate::error::{io_err, CliResult};

pub const EM_ITERS: usize = 500;
pub const EM_TOL: f64 = 1e-9;

/// Fits one mixture per state, writes the discretized model as JSON and
/// returns its TP2 report.
pub fn fit_obs(trace: &Path, k0: usize, k1: usize, n: usize, out: &Path) -> CliResult<Tp2Report> {
    let data = ingest_trace(trace).map_err(|e| io_err(trace, e))?;
    let fit = fit_observation_model(&data, k0, k1, n, EM_ITERS, EM_TOL)?;
    let mut f = create_file(out)?;
    serde_json::to_writer_pretty(&mut f, &fit.model).map_err(|e| io_err(out, e))?;
    writeln!(f).and_then(|_| f.flush()).map_err(|e| io_err(out, e))?;
    for (s, em) in fit.fits.iter().enumerate() {
        let comps: Vec<String> = em
            .params
            .components
            .iter()
            .map(|c| format!("{:.4}*N({:.4}, {:.4})", c.weight, c.mean, c.variance))
            .collect();
        println!(
            "state {s}: {} ({} EM iterations{})",
            comps.join(" + "),
            em.log_likelihood.len() - 1,
            if em.floored { ", variance floored" } else { "" }
        );
    }
    let tp2 = check_tp2(&fit.model);
    if tp2.pass {
        println!("TP2: pass ({} minors)", tp2.minors);
    } else {
        println!("warning: TP2 fails, {} of {} minors negative", tp2.negative_minors, tp2.minors);
    }
    Ok(tp2)
}
