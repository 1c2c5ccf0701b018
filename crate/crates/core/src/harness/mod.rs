//! Experiment driver behind the `mirecourse` binary: online runs with
//! recourse accounting, verification suites and parameter sweeps.

mod sweep;
mod verify;

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::instances::{InstanceError, InstanceFile};
use crate::market::Market;
use crate::matroid::{Matroid, MatroidRef};
use crate::online::{process_arrival, OnlineState, PartitionInstance, SapError};
use crate::rational;
use crate::skeleton::{compare_arrival_prices, compute_skeleton, Skeleton, SkeletonError};

pub use sweep::{sweep, trial_seed, SweepRow, SWEEP_CSV_VERSION};
pub use verify::{verify, verify_with, PropertyResult, Suite, VerifyReport};

pub const RUN_CSV_VERSION: &str = "# mirecourse-run v1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Online(#[from] SapError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunConfig {
    /// Recompute the skeleton after every arrival.
    pub prices: bool,
    /// Record wall-clock time (makes reports non-reproducible).
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalRow {
    pub part_index: usize,
    pub path_length: usize,
    pub cumulative_recourse: usize,
    pub inert: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub instance_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub generator: String,
    pub n: usize,
    pub arrivals: Vec<ArrivalRow>,
    pub total_recourse: usize,
    pub final_size: usize,
    /// `total_recourse / (n · ln²(n + 2))`.
    pub bound_ratio: f64,
    /// Prices after each arrival, as `"num/den"` indexed by element id.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_snapshots: Option<Vec<Vec<String>>>,
    /// Failed in-run invariants; empty on success.
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{RUN_CSV_VERSION}").unwrap();
        writeln!(
            out,
            "# instance_digest={} n={} total_recourse={} final_size={} bound_ratio={:.6}",
            self.instance_digest, self.n, self.total_recourse, self.final_size, self.bound_ratio
        )
        .unwrap();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "part_index", "path_length", "cumulative_recourse", "inert", "price_digest"])
            .unwrap();
        for (t, row) in self.arrivals.iter().enumerate() {
            w.write_record([
                t.to_string(),
                row.part_index.to_string(),
                row.path_length.to_string(),
                row.cumulative_recourse.to_string(),
                row.inert.to_string(),
                row.price_digest.clone().unwrap_or_default(),
            ])
            .unwrap();
        }
        out.push_str(&String::from_utf8(w.into_inner().unwrap()).unwrap());
        out
    }
}

/// `n · ln²(n + 2)`, the normaliser of the bound ratio.
pub fn bound_denominator(n: usize) -> f64 {
    let l = ((n + 2) as f64).ln();
    n as f64 * l * l
}

pub fn bound_ratio(total: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total as f64 / bound_denominator(n)
    }
}

pub fn instance_digest(file: &InstanceFile) -> String {
    hex::encode(Sha256::digest(file.to_json().as_bytes()))
}

/// The market whose first `arrived` buyers have budget 1 and the rest 0.
pub fn arrival_market(inst: &PartitionInstance, m: &MatroidRef, arrived: usize) -> Market {
    Market::with_unit_budgets(m.clone(), inst.parts().to_vec())
        .expect("instance parts are disjoint")
        .arrival_prefix(arrived)
}

fn price_strings(skeleton: &Skeleton, universe: usize) -> Vec<String> {
    (0..universe)
        .map(|e| skeleton.try_price(e).map(rational::encode).unwrap_or_default())
        .collect()
}

fn digest_strings(values: &[String]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

/// Runs the maintainer over all arrivals of `file`.
pub fn run(file: &InstanceFile, config: RunConfig) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let inst = file.to_instance()?;
    let m = inst.build_matroid()?;
    let partition = inst.partition_matroid();
    let mut state = OnlineState::new(inst.universe());
    let mut rows = Vec::with_capacity(inst.part_count());
    let mut failures = Vec::new();
    let mut snapshots = config.prices.then(Vec::new);
    let mut previous = if config.prices {
        Some(compute_skeleton(&arrival_market(&inst, &m, 0))?)
    } else {
        None
    };
    let mut cumulative = 0;
    for t in 0..inst.part_count() {
        let record = process_arrival(&mut state, m.as_ref(), &inst, t)?;
        cumulative += record.recourse;
        if !(m.is_independent(&state.current) && partition.is_independent(&state.current)) {
            failures.push(format!("arrival {t}: maintained set is not common independent"));
        }
        let mut price_digest = None;
        if let Some(old) = previous.as_mut() {
            let new = compute_skeleton(&arrival_market(&inst, &m, t + 1))?;
            let report = compare_arrival_prices(old, &new, inst.part(t));
            for c in report.decreased.iter().chain(&report.unstable) {
                failures.push(format!(
                    "arrival {t}: price of element {} moved from {} to {}",
                    c.element,
                    rational::encode(&c.before),
                    rational::encode(&c.after)
                ));
            }
            let strings = price_strings(&new, inst.universe());
            price_digest = Some(digest_strings(&strings));
            snapshots.as_mut().unwrap().push(strings);
            *old = new;
        }
        rows.push(ArrivalRow {
            part_index: t,
            path_length: record.path_length,
            cumulative_recourse: cumulative,
            inert: record.path.is_none(),
            price_digest,
        });
    }
    let n = inst.part_count();
    Ok(RunReport {
        instance_digest: instance_digest(file),
        seed: file.metadata.seed,
        generator: file.metadata.generator.clone(),
        n,
        arrivals: rows,
        total_recourse: cumulative,
        final_size: state.current.len(),
        bound_ratio: bound_ratio(cumulative, n),
        price_snapshots: snapshots,
        failures,
        wall_time_ms: config
            .timing
            .then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}
