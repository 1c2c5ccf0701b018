use std::str::FromStr;

use num_traits::One;
use serde::Serialize;
use serde_json::{json, Value};

use super::{arrival_market, instance_digest, HarnessError};
use crate::eg::{kkt_check, solve_eg2, solve_fisher, FisherMarket};
use crate::element::ElementSet;
use crate::instances::InstanceFile;
use crate::market::Market;
use crate::matroid::MatroidDescription;
use crate::online::{process_arrival, OnlineState, PartitionInstance};
use crate::rational::{self, Rational};
use crate::skeleton::{
    check_gluing, check_neighborhoods, compare_arrival_prices, compute_skeleton, dual_objective,
    expansion_chain, max_price_basis, price_dichotomy_violations, price_order_violations,
    price_sum, Skeleton,
};

const EG_ITERS: usize = 5000;
const EG_TOL: f64 = 1e-9;
const KKT_TOL: f64 = 1e-4;
const SUPPORT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Skeleton,
    Monotone,
    Expansion,
    Gluing,
    Kkt,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "skeleton" => Self::Skeleton,
            "monotone" => Self::Monotone,
            "expansion" => Self::Expansion,
            "gluing" => Self::Gluing,
            "kkt" => Self::Kkt,
            "all" => Self::All,
            _ => return Err(format!("unknown suite `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub suite: String,
    pub property: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub instance_digest: String,
    pub passed: bool,
    pub results: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

struct Collector {
    suite: &'static str,
    results: Vec<PropertyResult>,
}

impl Collector {
    fn check(&mut self, property: &str, failure: Option<Value>) {
        self.results.push(PropertyResult {
            suite: self.suite.to_string(),
            property: property.to_string(),
            passed: failure.is_none(),
            note: None,
            counterexample: failure,
        });
    }

    fn skip(&mut self, property: &str, why: &str) {
        self.results.push(PropertyResult {
            suite: self.suite.to_string(),
            property: property.to_string(),
            passed: true,
            note: Some(format!("skipped: {why}")),
            counterexample: None,
        });
    }
}

fn nonempty<T: Serialize>(items: &[T]) -> Option<Value> {
    (!items.is_empty()).then(|| json!(items))
}

pub fn verify(file: &InstanceFile, suite: Suite) -> Result<VerifyReport, HarnessError> {
    verify_with(file, suite, &|_, _| {})
}

/// Like [`verify`], with `hook(t, skeleton)` applied to the skeleton of the
/// market after `t` arrivals before the monotonicity suite compares it.
pub fn verify_with(
    file: &InstanceFile,
    suite: Suite,
    hook: &dyn Fn(usize, &mut Skeleton),
) -> Result<VerifyReport, HarnessError> {
    let inst = file.to_instance()?;
    let m = inst.build_matroid()?;
    let n = inst.part_count();
    let market = arrival_market(&inst, &m, n);

    let mut state = OnlineState::new(inst.universe());
    let mut before = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for t in 0..n {
        before.push(state.current.clone());
        records.push(process_arrival(&mut state, m.as_ref(), &inst, t)?);
    }
    let feasible = state.current.len() == n;

    let mut results = Vec::new();
    let skeleton = match compute_skeleton(&market) {
        Ok(s) => s,
        Err(e) => {
            results.push(PropertyResult {
                suite: "skeleton".into(),
                property: "skeleton computable".into(),
                passed: false,
                note: Some(e.to_string()),
                counterexample: None,
            });
            return Ok(finish(file, results));
        }
    };

    if suite.includes(Suite::Skeleton) {
        let mut c = Collector {
            suite: "skeleton",
            results: Vec::new(),
        };
        skeleton_suite(&mut c, &market, &skeleton, feasible, n);
        results.extend(c.results);
    }
    if suite.includes(Suite::Monotone) {
        let mut c = Collector {
            suite: "monotone",
            results: Vec::new(),
        };
        monotone_suite(&mut c, &inst, &m, hook)?;
        results.extend(c.results);
    }
    if suite.includes(Suite::Gluing) {
        let mut c = Collector {
            suite: "gluing",
            results: Vec::new(),
        };
        let mut bad = Vec::new();
        for cut in 1..skeleton.levels().len() {
            let report = check_gluing(&market, &skeleton, cut)?;
            if !report.ok() {
                bad.push(report);
            }
        }
        c.check("glued sub-skeleton prices equal full prices", nonempty(&bad));
        results.extend(c.results);
    }
    if suite.includes(Suite::Expansion) || suite.includes(Suite::Kkt) {
        let y = solve_eg2(&market, EG_ITERS, EG_TOL).ok();
        if suite.includes(Suite::Kkt) {
            let mut c = Collector {
                suite: "kkt",
                results: Vec::new(),
            };
            match &y {
                None => c.check("equilibrium solvable", Some(json!("solver rejected the market"))),
                Some(y) => {
                    let report = kkt_check(y, &skeleton, &market);
                    c.check(
                        "canonical duals satisfy KKT",
                        (!report.passes(KKT_TOL)).then(|| json!(report)),
                    );
                }
            }
            fisher_suite(&mut c, file, &inst, &skeleton);
            results.extend(c.results);
        }
        if suite.includes(Suite::Expansion) {
            let mut c = Collector {
                suite: "expansion",
                results: Vec::new(),
            };
            match &y {
                None => c.skip("expansion chain", "no equilibrium allocation"),
                Some(y) => {
                    let mut bad = Vec::new();
                    for t in 0..n {
                        for e in inst.part(t).iter() {
                            let is_loop = market.matroid().rank(&ElementSet::singleton(market.universe(), e)) == 0;
                            if is_loop || *skeleton.price(e) >= Rational::one() {
                                continue;
                            }
                            let chain = expansion_chain(&skeleton, &market, &before[t], e, &y.y, SUPPORT_TOL)?;
                            let measured = records[t].path.as_ref().map(Vec::len);
                            let within = match (chain.terminating_k, measured) {
                                (Some(_), None) => false,
                                (Some(_), Some(l)) => l <= chain.path_bound.unwrap(),
                                (None, _) => true,
                            };
                            if !chain.ok() || !within {
                                bad.push(json!({ "arrival": t, "measured": measured, "chain": chain }));
                            }
                        }
                    }
                    c.check("chain claims and path bound", nonempty(&bad));
                }
            }
            results.extend(c.results);
        }
    }
    Ok(finish(file, results))
}

fn finish(file: &InstanceFile, results: Vec<PropertyResult>) -> VerifyReport {
    VerifyReport {
        instance_digest: instance_digest(file),
        passed: results.iter().all(|r| r.passed),
        results,
    }
}

fn skeleton_suite(c: &mut Collector, market: &Market, skeleton: &Skeleton, feasible: bool, n: usize) {
    let m = market.matroid().as_ref();
    c.check(
        "strictly decreasing level prices",
        nonempty(&price_order_violations(skeleton)),
    );
    c.check(
        "nonempty neighborhoods",
        nonempty(&check_neighborhoods(market, skeleton)),
    );
    let total = market.total_budget();
    let basis_sum = price_sum(skeleton, &max_price_basis(skeleton, m));
    c.check(
        "max-price basis sums to total budget",
        (basis_sum != total).then(|| json!({ "sum": rational::encode(&basis_sum) })),
    );
    let objective = dual_objective(skeleton, m);
    c.check(
        "dual objective equals total budget",
        (objective != total).then(|| json!({ "objective": rational::encode(&objective) })),
    );
    if feasible {
        c.check(
            "price dichotomy",
            nonempty(&price_dichotomy_violations(skeleton, n)),
        );
    } else {
        c.skip("price dichotomy", "instance has no common independent set of size n");
    }
    let again = compute_skeleton(market).ok();
    c.check(
        "deterministic",
        (again.as_ref() != Some(skeleton)).then(|| json!("recomputed skeleton differs")),
    );
}

fn monotone_suite(
    c: &mut Collector,
    inst: &PartitionInstance,
    m: &crate::matroid::MatroidRef,
    hook: &dyn Fn(usize, &mut Skeleton),
) -> Result<(), HarnessError> {
    let mut bad = Vec::new();
    let mut old = compute_skeleton(&arrival_market(inst, m, 0))?;
    hook(0, &mut old);
    for t in 0..inst.part_count() {
        let mut new = compute_skeleton(&arrival_market(inst, m, t + 1))?;
        hook(t + 1, &mut new);
        let report = compare_arrival_prices(&old, &new, inst.part(t));
        if !report.ok() {
            bad.push(json!({ "arrival": t, "report": report }));
        }
        old = new;
    }
    c.check("prices monotone and stable below the arrival price", nonempty(&bad));
    Ok(())
}

/// The equivalent Fisher market when `M` is a partition matroid with unit
/// capacities covering every element.
fn as_fisher(file: &InstanceFile, inst: &PartitionInstance) -> Option<(FisherMarket, Vec<usize>)> {
    let MatroidDescription::Partition { size, blocks } = &file.matroid else {
        return None;
    };
    let mut item = vec![None; *size];
    for (j, b) in blocks.iter().enumerate() {
        if b.capacity != 1 {
            return None;
        }
        for &e in &b.elements {
            item[e] = Some(j);
        }
    }
    let mut adjacency = Vec::new();
    let mut element_of_edge = Vec::new();
    for part in inst.parts() {
        let mut adj = Vec::new();
        for e in part.iter() {
            adj.push(item[e]?);
            element_of_edge.push(e);
        }
        adjacency.push(adj);
    }
    let budgets = vec![Rational::one(); adjacency.len()];
    Some((
        FisherMarket {
            items: blocks.len(),
            adjacency,
            budgets,
        },
        element_of_edge,
    ))
}

fn fisher_suite(c: &mut Collector, file: &InstanceFile, inst: &PartitionInstance, skeleton: &Skeleton) {
    let Some((fisher, element_of_edge)) = as_fisher(file, inst) else {
        c.skip("fisher prices match skeleton", "matroid is not a unit partition matroid");
        return;
    };
    if fisher.adjacency.iter().any(Vec::is_empty) {
        c.skip("fisher prices match skeleton", "a buyer has no items");
        return;
    }
    let Ok(solution) = solve_fisher(&fisher, EG_ITERS, EG_TOL) else {
        c.check("fisher prices match skeleton", Some(json!("fisher solve failed")));
        return;
    };
    let mut bad = Vec::new();
    for (edge, &(_, j)) in fisher.edges().iter().enumerate() {
        let e = element_of_edge[edge];
        let expected = rational::to_f64(skeleton.price(e));
        if (solution.prices[j] - expected).abs() > KKT_TOL {
            bad.push(json!({ "element": e, "item": j, "fisher": solution.prices[j], "skeleton": expected }));
        }
    }
    c.check("fisher prices match skeleton", nonempty(&bad));
    c.check(
        "fisher market clears",
        (solution.residuals.max() > KKT_TOL).then(|| json!(solution.residuals)),
    );
}
