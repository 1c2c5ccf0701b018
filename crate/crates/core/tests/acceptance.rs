//! Acceptance criteria A1–A9. Prints one line per criterion and exits
//! non-zero if any fails. Pass criterion names (e.g. `A3`) to run a subset.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use common::{
    contracted_rank, greedy_rank, independent, max_common, oracle_skeleton, random_description, random_market,
    random_cover, rng, set, MarketCase,
};
use matroid_recourse::eg::{kkt_check, solve_eg2, solve_fisher, FisherMarket};
use matroid_recourse::harness::{run, sweep, RunConfig};
use matroid_recourse::instances::{gen_adversarial, gen_random_bipartite, generate, InstanceFile, Metadata, Params};
use matroid_recourse::market::Market;
use matroid_recourse::matroid::MatroidDescription;
use matroid_recourse::online::{process_arrival, shortest_augmenting_path_in, OnlineState};
use matroid_recourse::rational::{to_f64, Rational};
use matroid_recourse::skeleton::{check_gluing, compute_skeleton, expansion_chain, Skeleton};

const EG_ITERS: usize = 5000;
const EG_TOL: f64 = 1e-9;
const KKT_TOL: f64 = 1e-4;
const SUPPORT_TOL: f64 = 1e-7;

struct Outcome {
    passed: bool,
    summary: String,
    failures: Vec<String>,
}

impl Outcome {
    fn new(summary: String, failures: Vec<String>) -> Self {
        Self {
            passed: failures.is_empty(),
            summary,
            failures,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn params(pairs: &[(&str, String)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

// ---------------------------------------------------------------------------
// A1

const A1_FAMILIES: [&str; 8] = [
    "bipartite",
    "laminar",
    "graphic",
    "transversal",
    "gammoid",
    "partitioning",
    "adversarial",
    "random",
];

fn a1_instance(i: u64) -> InstanceFile {
    let family = A1_FAMILIES[i as usize % A1_FAMILIES.len()];
    let mut r = rng(0xA1_0000 + i);
    loop {
        let seed = r.gen();
        let n = r.gen_range(1..=8usize);
        let file = match family {
            "bipartite" => generate(
                family,
                &params(&[
                    ("n", n.to_string()),
                    ("m", (n + r.gen_range(0..=2)).to_string()),
                    ("density", format!("{:.2}", r.gen_range(0.1..0.5))),
                ]),
                seed,
            ),
            "partitioning" => generate(
                family,
                &params(&[
                    ("n", n.to_string()),
                    ("rank", r.gen_range(1..=3).to_string()),
                    ("colors", r.gen_range(1..=2).to_string()),
                ]),
                seed,
            ),
            "adversarial" => gen_adversarial([1, 2, 4][r.gen_range(0..3)]),
            "random" => {
                let size = r.gen_range(2..=16);
                let desc = random_description(&mut r, size);
                if common::ground(&desc).is_empty() {
                    continue;
                }
                let parts = random_cover(&mut r, &desc, n);
                Ok(InstanceFile::new(desc, parts, Metadata::default()))
            }
            _ => generate(
                family,
                &params(&[("n", n.to_string()), ("part_size", r.gen_range(1..=3).to_string())]),
                seed,
            ),
        };
        match file {
            Ok(f) if f.matroid.universe() <= 16 && f.n() <= 8 => return f,
            _ => continue,
        }
    }
}

fn a1() -> Outcome {
    let mut failures = Vec::new();
    let mut arrivals = 0;
    let mut inert = 0;
    let mut per_family = BTreeMap::new();
    for i in 0..200 {
        let file = a1_instance(i);
        *per_family.entry(A1_FAMILIES[i as usize % 8]).or_insert(0) += 1;
        let inst = file.to_instance().unwrap();
        let m = inst.build_matroid().unwrap();
        let desc = &file.matroid;
        let mut state = OnlineState::new(inst.universe());
        for t in 0..inst.part_count() {
            process_arrival(&mut state, m.as_ref(), &inst, t).unwrap();
            arrivals += 1;
            let revealed: Vec<Vec<usize>> = file.parts[..=t].to_vec();
            let active: Vec<Vec<usize>> = (0..=t)
                .filter(|p| !state.inert_parts.contains(p))
                .map(|p| file.parts[p].clone())
                .collect();
            let held = state.current.to_vec();
            let one_per_part = (0..=t).all(|p| held.iter().filter(|e| file.parts[p].contains(e)).count() <= 1)
                && held.iter().all(|e| file.parts[..=t].iter().any(|p| p.contains(e)));
            let best = max_common(desc, &active);
            let best_revealed = max_common(desc, &revealed);
            if !(one_per_part && independent(desc, &held)) {
                failures.push(format!("instance {i} arrival {t}: {held:?} not common independent"));
            } else if held.len() != best || best != best_revealed {
                failures.push(format!(
                    "instance {i} arrival {t}: |I| = {}, brute force {best} (all revealed {best_revealed})",
                    held.len()
                ));
            }
        }
        inert += state.inert_parts.len();
    }
    let mix: Vec<String> = per_family.iter().map(|(f, c)| format!("{f}:{c}")).collect();
    Outcome::new(
        format!(
            "200 instances ({}), {arrivals} arrivals ({inert} inert) match brute force",
            mix.join(" ")
        ),
        failures,
    )
}

// ---------------------------------------------------------------------------
// A2, A3

fn a2() -> Outcome {
    let ns = [64, 128, 256, 512];
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for generator in ["bipartite", "laminar", "transversal"] {
        let rows = sweep(generator, &ns, 5, 0xA2, &Params::new(), None).unwrap();
        let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        for r in rows.iter().filter(|r| r.ratio > 10.0) {
            failures.push(format!("{generator} n={} trial {}: ratio {:.3}", r.n, r.trial, r.ratio));
        }
        let med = |n: usize| median(rows.iter().filter(|r| r.n == n).map(|r| r.ratio).collect());
        let (m64, m512) = (med(64), med(512));
        if m512 > 3.0 * m64 {
            failures.push(format!("{generator}: median ratio {m512:.4} at 512 > 3 x {m64:.4} at 64"));
        }
        notes.push(format!("{generator} max {worst:.3} med64 {m64:.3} med512 {m512:.3}"));
    }
    Outcome::new(format!("ratio <= 10, growth <= 3x; {}", notes.join("; ")), failures)
}

fn a3() -> Outcome {
    let mut failures = Vec::new();
    let mut curve = Vec::new();
    for n in [64, 128, 256, 512, 1024] {
        let report = run(&gen_adversarial(n).unwrap(), RunConfig::default()).unwrap();
        let threshold = 0.1 * n as f64 * (n as f64).log2();
        curve.push(format!("{n}:{}", report.total_recourse));
        if (report.total_recourse as f64) < threshold {
            failures.push(format!("n={n}: total {} < {threshold:.1}", report.total_recourse));
        }
    }
    Outcome::new(
        format!("total >= 0.1 n log2 n; curve {}", curve.join(" ")),
        failures,
    )
}

// ---------------------------------------------------------------------------
// A4, A5, A8

fn a4_markets() -> Vec<MarketCase> {
    (0..500).map(|s| random_market(0xA4_0000 + s, 14, 7, false)).collect()
}

/// Greedy basis in non-increasing price order, via the oracle.
fn max_price_basis(case: &MarketCase, sk: &Skeleton) -> Vec<usize> {
    let mut order = common::ground(&case.desc);
    order.sort_by(|&a, &b| sk.price(b).cmp(sk.price(a)).then(a.cmp(&b)));
    let mut basis = Vec::new();
    for e in order {
        basis.push(e);
        if !independent(&case.desc, &basis) {
            basis.pop();
        }
    }
    basis
}

fn buy_price(sk: &Skeleton, part: &[usize]) -> Rational {
    part.iter().map(|&e| sk.price(e).clone()).min().unwrap()
}

/// Subsets `B'` failing `rank_{M/E_>}(supp(y) ∩ N(B')) · q_max ≥ m(B')`.
fn expansion_failures(case: &MarketCase, sk: &Skeleton, y: &[f64]) -> Vec<Vec<usize>> {
    let n = case.parts.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let budget: Rational = members.iter().map(|&i| case.budgets[i].clone()).sum();
        if budget.is_zero() {
            continue;
        }
        let q_max = members.iter().map(|&i| buy_price(sk, &case.parts[i])).max().unwrap();
        let above: Vec<usize> = sk.prices().iter().filter(|(_, p)| **p > q_max).map(|(&e, _)| e).collect();
        let support: Vec<usize> = members
            .iter()
            .flat_map(|&i| case.parts[i].iter().copied())
            .filter(|&e| y[e] > SUPPORT_TOL)
            .collect();
        let rank = contracted_rank(&case.desc, &support, &above);
        if Rational::from_integer(rank.into()) * q_max < budget {
            out.push(members);
        }
    }
    out
}

fn a4() -> Outcome {
    let mut failures = Vec::new();
    let (mut unit_feasible, mut subsets) = (0, 0);
    for case in a4_markets() {
        let tag = format!("market {:#x}", case.seed);
        let market = case.market();
        let sk = compute_skeleton(&market).unwrap();
        let oracle = oracle_skeleton(&case.desc, &case.parts, &case.budgets).unwrap();
        if sk.prices() != &oracle.prices {
            failures.push(format!("{tag}: prices differ from brute-force peeling"));
        }
        if sk.levels().windows(2).any(|w| w[0].price <= w[1].price) {
            failures.push(format!("{tag}: level prices not strictly decreasing"));
        }
        let basis = max_price_basis(&case, &sk);
        let spent: Rational = basis.iter().map(|&e| sk.price(e).clone()).sum();
        let total: Rational = case.budgets.iter().cloned().sum();
        if spent != total {
            failures.push(format!("{tag}: max-price basis sums to {spent}, budgets to {total}"));
        }
        let n = case.parts.len();
        if case.unit() && max_common(&case.desc, &case.parts) == n {
            unit_feasible += 1;
            let bound = Rational::new(n.into(), (n + 1).into());
            for (e, p) in sk.prices() {
                if !p.is_one() && *p > bound {
                    failures.push(format!("{tag}: price {p} of element {e} violates the dichotomy"));
                }
            }
        }
        let y = solve_eg2(&market, EG_ITERS, EG_TOL).unwrap();
        subsets += (1usize << n) - 1;
        for b in expansion_failures(&case, &sk, &y.y) {
            failures.push(format!("{tag}: expansion property fails for buyers {b:?}"));
        }
    }
    Outcome::new(
        format!("500 markets ({unit_feasible} feasible unit), {subsets} buyer subsets, exact checks"),
        failures,
    )
}

fn a5() -> Outcome {
    let mut failures = Vec::new();
    let mut arrivals = 0;
    for case in a4_markets() {
        let w = case.width();
        let m = case.desc.build().unwrap();
        let parts: Vec<Vec<usize>> = case
            .parts
            .iter()
            .filter(|p| greedy_rank(&case.desc, p) > 0)
            .cloned()
            .collect();
        let full = Market::with_unit_budgets(m, parts.iter().map(|p| set(w, p)).collect()).unwrap();
        let mut old = compute_skeleton(&full.arrival_prefix(0)).unwrap();
        for t in 0..parts.len() {
            let new = compute_skeleton(&full.arrival_prefix(t + 1)).unwrap();
            let q = buy_price(&old, &parts[t]);
            for (e, before) in old.prices() {
                let after = new.price(*e);
                if after < before || (*before < q && after != before) {
                    failures.push(format!(
                        "market {:#x} arrival {t}: element {e} moved {before} -> {after} (q = {q})",
                        case.seed
                    ));
                }
            }
            arrivals += 1;
            old = new;
        }
    }
    Outcome::new(format!("{arrivals} arrivals over the A4 markets"), failures)
}

fn a8() -> Outcome {
    let mut failures = Vec::new();
    let mut cuts = 0;
    for case in a4_markets() {
        let market = case.market();
        let sk = compute_skeleton(&market).unwrap();
        for cut in 1..sk.levels().len() {
            cuts += 1;
            let report = check_gluing(&market, &sk, cut).unwrap();
            if !report.ok() {
                failures.push(format!(
                    "market {:#x} cut {cut}: {} mismatched prices",
                    case.seed,
                    report.mismatches.len()
                ));
            }
        }
    }
    Outcome::new(format!("{cuts} cuts over the A4 markets"), failures)
}

// ---------------------------------------------------------------------------
// A6, A7

/// Even seeds: unit budgets for an arrived prefix of buyers, zero after.
/// Odd seeds: mixed budgets.
fn a6_markets() -> Vec<MarketCase> {
    (0..100)
        .map(|s| {
            let seed = 0xA6_0000 + s;
            let mut case = random_market(seed, 12, 7, s % 2 == 0);
            if s % 2 == 0 {
                let arrived = rng(seed).gen_range(1..=case.parts.len());
                for b in &mut case.budgets[arrived..] {
                    *b = Rational::zero();
                }
            }
            case
        })
        .collect()
}

fn a6() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for case in a6_markets() {
        let market = case.market();
        let sk = compute_skeleton(&market).unwrap();
        let y = solve_eg2(&market, EG_ITERS, EG_TOL).unwrap();
        let report = kkt_check(&y, &sk, &market);
        worst = worst.max(report.max_residual());
        if !report.passes(KKT_TOL) {
            failures.push(format!(
                "market {:#x}: KKT residual {:.2e} (dual feasible {}, identity {})",
                case.seed,
                report.max_residual(),
                report.dual_feasible,
                report.dual_identity
            ));
        }
        let objective: Rational = sk
            .duals()
            .iter()
            .map(|(s, alpha)| alpha * Rational::from_integer(greedy_rank(&case.desc, &s.to_vec()).into()))
            .sum();
        let total: Rational = case.budgets.iter().cloned().sum();
        if objective != total {
            failures.push(format!("market {:#x}: dual objective {objective} != {total}", case.seed));
        }
    }
    Outcome::new(
        format!("100 markets, worst KKT residual {worst:.2e}, exact dual identity"),
        failures,
    )
}

/// A random common independent set held by budget-1 buyers (usually a
/// maximal one) and a non-loop element `e*` with price below 1 whose part
/// `I*` leaves uncovered, preferring elements that are not free.
fn sample_pair(case: &MarketCase, sk: &Skeleton, r: &mut common::Rng8) -> Option<(Vec<usize>, usize)> {
    let mut pool: Vec<(usize, usize)> = (0..case.parts.len())
        .filter(|&i| case.budgets[i].is_one())
        .flat_map(|i| case.parts[i].iter().map(move |&e| (i, e)))
        .collect();
    pool.shuffle(r);
    let target = if r.gen_bool(0.7) { pool.len() } else { r.gen_range(0..=pool.len()) };
    let mut held = Vec::new();
    let mut covered = Vec::new();
    for (i, e) in pool {
        if held.len() == target {
            break;
        }
        if covered.contains(&i) {
            continue;
        }
        held.push(e);
        if independent(&case.desc, &held) {
            covered.push(i);
        } else {
            held.pop();
        }
    }
    let eligible: Vec<usize> = (0..case.parts.len())
        .filter(|i| !covered.contains(i))
        .flat_map(|i| case.parts[i].iter().copied())
        .filter(|&e| *sk.price(e) < Rational::one() && greedy_rank(&case.desc, &[e]) == 1)
        .collect();
    let blocked: Vec<usize> = eligible
        .iter()
        .copied()
        .filter(|&e| !independent(&case.desc, &[held.as_slice(), &[e]].concat()))
        .collect();
    let pick = if !blocked.is_empty() && r.gen_bool(0.8) { &blocked } else { &eligible };
    pick.choose(r).map(|&e| (held, e))
}

fn a7() -> Outcome {
    let mut failures = Vec::new();
    let (mut samples, mut steps, mut max_k, mut blocked) = (0, 0, 0, 0);
    for case in a6_markets() {
        let market = case.market();
        let m = market.matroid().as_ref();
        let w = case.width();
        let sk = compute_skeleton(&market).unwrap();
        let y = solve_eg2(&market, EG_ITERS, EG_TOL).unwrap();
        let everything = set(w, &case.parts.concat());
        let mut r = rng(case.seed ^ 0xA7);
        let mut drawn = 0;
        for _ in 0..400 {
            if drawn == 20 {
                break;
            }
            let Some((held, start)) = sample_pair(&case, &sk, &mut r) else {
                continue;
            };
            drawn += 1;
            let current = set(w, &held);
            let chain = expansion_chain(&sk, &market, &current, start, &y.y, SUPPORT_TOL).unwrap();
            let path = shortest_augmenting_path_in(m, |e| market.owner(e), &current, &everything, &[start]);
            steps += chain.steps.len();
            blocked += usize::from(chain.terminating_k != Some(1));
            max_k = max_k.max(chain.terminating_k.unwrap_or(0));
            let tag = format!("market {:#x} I*={held:?} e*={start}", case.seed);
            if !chain.ok() {
                failures.push(format!("{tag}: chain claims fail: {}", serde_json::to_string(&chain).unwrap()));
                continue;
            }
            let bound = chain.path_bound.unwrap();
            match path {
                None => failures.push(format!("{tag}: no augmenting path (bound {bound})")),
                Some(p) => {
                    let mut next = held.clone();
                    for e in &p {
                        match next.iter().position(|x| x == e) {
                            Some(k) => {
                                next.remove(k);
                            }
                            None => next.push(*e),
                        }
                    }
                    if p.len() > bound {
                        failures.push(format!("{tag}: path length {} > 2k = {bound}", p.len()));
                    }
                    if next.len() != held.len() + 1 || !independent(&case.desc, &next) {
                        failures.push(format!("{tag}: path {p:?} does not augment"));
                    }
                }
            }
        }
        samples += drawn;
    }
    Outcome::new(
        format!(
            "{samples} (I*, e*) samples ({blocked} with e* not free), {steps} chain steps, largest terminating k {max_k}"
        ),
        failures,
    )
}

// ---------------------------------------------------------------------------
// A9

fn a9() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for i in 0..50u64 {
        let mut r = rng(0xA9_0000 + i);
        let n = r.gen_range(1..=8);
        let file = gen_random_bipartite(n, n + r.gen_range(0..=2), r.gen_range(0.1..0.6), r.gen()).unwrap();
        let MatroidDescription::Partition { blocks, .. } = &file.matroid else {
            panic!("bipartite instances use a partition matroid");
        };
        let item_of = |e: usize| blocks.iter().position(|b| b.elements.contains(&e)).unwrap();
        let fisher = FisherMarket {
            items: blocks.len(),
            adjacency: file.parts.iter().map(|p| p.iter().map(|&e| item_of(e)).collect()).collect(),
            budgets: vec![Rational::one(); n],
        };
        let elements: Vec<usize> = file.parts.concat();
        let solution = solve_fisher(&fisher, EG_ITERS, EG_TOL).unwrap();
        let inst = file.to_instance().unwrap();
        let market =
            Market::with_unit_budgets(inst.build_matroid().unwrap(), inst.parts().to_vec()).unwrap();
        let sk = compute_skeleton(&market).unwrap();
        for (edge, &(_, j)) in fisher.edges().iter().enumerate() {
            let gap = (solution.prices[j] - to_f64(sk.price(elements[edge]))).abs();
            worst = worst.max(gap);
            compared += 1;
            if gap > KKT_TOL {
                failures.push(format!("instance {i} item {j}: fisher {} vs skeleton {}", solution.prices[j], sk.price(elements[edge])));
            }
        }
        worst = worst.max(solution.residuals.max());
        if solution.residuals.max() > KKT_TOL {
            failures.push(format!("instance {i}: residuals {:?}", solution.residuals));
        }
    }
    Outcome::new(
        format!("50 instances, {compared} edge prices, worst gap/residual {worst:.2e}"),
        failures,
    )
}

// ---------------------------------------------------------------------------

type Criterion = (&'static str, &'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    ("A1", "correctness oracle", 120, a1),
    ("A2", "upper-bound behavior", 300, a2),
    ("A3", "lower-bound growth", 180, a3),
    ("A4", "skeleton structure", 180, a4),
    ("A5", "price monotonicity", 180, a5),
    ("A6", "canonical duals optimal", 240, a6),
    ("A7", "expansion chain", 180, a7),
    ("A8", "gluing", 120, a8),
    ("A9", "fisher correspondence", 120, a9),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut all_passed = true;
    let mut a4_time = Duration::ZERO;
    for (id, name, limit, f) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|x| x.eq_ignore_ascii_case(id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        // A5 shares the A4 time budget
        let budget_used = match id {
            "A4" => {
                a4_time = elapsed;
                elapsed
            }
            "A5" => a4_time + elapsed,
            _ => elapsed,
        };
        let in_time = budget_used <= Duration::from_secs(limit);
        let passed = outcome.passed && in_time;
        all_passed &= passed;
        println!(
            "{id} {} {name}: {} [{:.1}s, limit {limit}s]",
            if passed { "PASS" } else { "FAIL" },
            outcome.summary,
            elapsed.as_secs_f64()
        );
        if !in_time {
            println!("    over the time limit");
        }
        for failure in outcome.failures.iter().take(10) {
            println!("    {failure}");
        }
        if outcome.failures.len() > 10 {
            println!("    ... {} more", outcome.failures.len() - 10);
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
