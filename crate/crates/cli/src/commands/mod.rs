mod evaluate;
mod fit_obs;
mod train;
mod value;

pub use evaluate::{evaluate, AttackerChoice, DefenderChoice, EvalReport};
pub use fit_obs::{fit_obs, EM_ITERS, EM_TOL};
pub use train::{aggregate, train, write_aggregate_csv, AggregateRow};
pub use value::value;

use std::path::Path;

use crate::error::{io_err, CliResult};

pub(crate) fn create_file(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

pub(crate) fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}
