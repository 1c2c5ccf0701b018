use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{run, HarnessError, RunConfig};
use crate::instances::{generate, Params};

pub const SWEEP_CSV_VERSION: &str = "# mirecourse-sweep v1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub generator: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub total_recourse: usize,
    pub ratio: f64,
}

/// Seed of one trial, derived from the sweep seed so that rows do not depend
/// on which other `(n, trial)` pairs were requested.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut z = seed ^ (n as u64).rotate_left(32) ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates and runs `trials` instances for every `n`, in parallel, and
/// writes `sweep_<generator>.csv` under `out_dir` when given. Rows come back
/// ordered by `(n, trial)`.
pub fn sweep(
    generator: &str,
    ns: &[usize],
    trials: usize,
    seed: u64,
    params: &Params,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, HarnessError> {
    if params.contains_key("n") {
        return Err(HarnessError::Usage("pass n through --n, not --params".into()));
    }
    let jobs: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let seed = trial_seed(seed, n, trial);
            let mut p = params.clone();
            p.insert("n".into(), n.to_string());
            let file = generate(generator, &p, seed)?;
            let report = run(&file, RunConfig::default())?;
            Ok(SweepRow {
                generator: generator.to_string(),
                n,
                trial,
                seed,
                total_recourse: report.total_recourse,
                ratio: report.bound_ratio,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &rows {
            w.serialize(row).map_err(|e| std::io::Error::other(e.to_string()))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
            .expect("csv is utf-8");
        fs::write(
            dir.join(format!("sweep_{generator}.csv")),
            format!("{SWEEP_CSV_VERSION}\n{body}"),
        )?;
    }
    Ok(rows)
}
