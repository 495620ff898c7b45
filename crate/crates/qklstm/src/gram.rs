//! Gram matrices with one rayon task per row.

use qklstm_core::kernel::FeatureMapParams;
use qklstm_core::sim::QuantumState;
use qklstm_core::Matrix;
use rayon::prelude::*;

use crate::error::{CliError, Result};

pub const THREADS_ENV: &str = "QKLSTM_THREADS";

/// Worker count from `QKLSTM_THREADS`: unset or `0` lets rayon decide.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

/// Same values as [`FeatureMapParams::gram_matrix`], computed on a pool of
/// `threads` workers (`0` = automatic).
pub fn parallel_gram(params: &FeatureMapParams, vs: &[Vec<f64>], threads: usize) -> Result<Matrix> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| {
        let states = vs
            .par_iter()
            .map(|v| params.prepare_feature_state(v))
            .collect::<Result<Vec<QuantumState>, _>>()?;
        let rows = (0..vs.len())
            .into_par_iter()
            .map(|i| {
                (0..vs.len())
                    .map(|j| if i == j { Ok(1.0) } else { Ok(states[i].inner_product(&states[j])?.norm_sqr()) })
                    .collect::<qklstm_core::Result<Vec<f64>>>()
            })
            .collect::<qklstm_core::Result<Vec<Vec<f64>>>>()?;
        Ok(Matrix::from_vec(vs.len(), vs.len(), rows.concat())?)
    })
}
