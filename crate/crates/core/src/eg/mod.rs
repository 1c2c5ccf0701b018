//! Eisenberg-Gale equilibrium over a matroid polytope, solved by away-step
//! conditional gradient, and a KKT certificate for skeleton prices.

mod fisher;

use std::collections::HashMap;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::element::{ElementId, ElementSet};
use crate::market::Market;
use crate::matroid::{greedy_max_weight, Matroid};
use crate::rational::{to_f64, Rational};
use crate::skeleton::Skeleton;

pub use fisher::{fisher_as_market, solve_fisher, FisherMarket, FisherResiduals, FisherSolution};

pub const DEFAULT_TOL: f64 = 1e-6;
const UTILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EgError {
    #[error("buyer {0} has positive budget but no non-loop element")]
    Infeasible(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct Allocation {
    /// Amount of each element, indexed by id.
    pub y: Vec<f64>,
    pub utilities: Vec<f64>,
    pub objective: f64,
    /// Final conditional-gradient duality gap, an upper bound on the
    /// distance to the optimal objective.
    pub gap: f64,
    pub iterations: usize,
    pub certified: bool,
    /// Objective after every iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl Allocation {
    /// Amount allocated to `set`.
    pub fn amount(&self, set: &ElementSet) -> f64 {
        set.iter().map(|e| self.y[e]).sum()
    }
}

struct Problem<'a> {
    m: &'a dyn Matroid,
    owner: Vec<Option<usize>>,
    budgets: Vec<f64>,
    buyers: usize,
}

impl Problem<'_> {
    fn utilities(&self, y: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.buyers];
        for (e, &v) in y.iter().enumerate() {
            if let Some(i) = self.owner[e] {
                u[i] += v;
            }
        }
        u
    }

    fn objective(&self, u: &[f64]) -> f64 {
        self.budgets
            .iter()
            .zip(u)
            .filter(|(b, _)| **b > 0.0)
            .map(|(b, u)| b * u.ln())
            .sum()
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.owner
            .iter()
            .map(|o| match *o {
                Some(i) if self.budgets[i] > 0.0 => self.budgets[i] / u[i].max(UTILITY_FLOOR),
                _ => 0.0,
            })
            .collect()
    }

    fn vertex_utilities(&self, v: &ElementSet) -> Vec<f64> {
        let mut u = vec![0.0; self.buyers];
        for e in v.iter() {
            if let Some(i) = self.owner[e] {
                u[i] += 1.0;
            }
        }
        u
    }
}

fn dot(g: &[f64], v: &ElementSet) -> f64 {
    v.iter().map(|e| g[e]).sum()
}

/// Largest `γ ∈ [0, max]` maximizing `Σ m_i ln(u_i + γ d_i)`.
fn line_search(budgets: &[f64], u: &[f64], d: &[f64], max: f64) -> f64 {
    let slope = |g: f64| -> f64 {
        budgets
            .iter()
            .zip(u.iter().zip(d))
            .filter(|(b, (_, d))| **b > 0.0 && **d != 0.0)
            .map(|(b, (u, d))| b * d / (u + g * d))
            .sum()
    };
    if slope(max) >= 0.0 {
        return max;
    }
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, max);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * max.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizes `Σ m_i log(Σ_{e ∈ P_i} y_e)` over the matroid polytope.
pub fn solve_eg2(market: &Market, max_iters: usize, tol: f64) -> Result<Allocation, EgError> {
    let m = market.matroid().as_ref();
    let width = market.universe();
    let owner: Vec<Option<usize>> = (0..width).map(|e| market.owner(e)).collect();
    let budgets: Vec<f64> = market.budgets().iter().map(to_f64).collect();
    let problem = Problem {
        m,
        owner,
        budgets,
        buyers: market.buyers(),
    };
    let positive: Vec<usize> = (0..problem.buyers)
        .filter(|&i| problem.budgets[i] > 0.0)
        .collect();

    // Start from the average of bases that each favor one positive buyer.
    let mut active: Vec<(ElementSet, f64)> = Vec::new();
    let mut index: HashMap<ElementSet, usize> = HashMap::new();
    for &i in &positive {
        let weights: Vec<f64> = (0..width)
            .map(|e| match problem.owner[e] {
                Some(j) if j == i => 2.0,
                Some(j) if problem.budgets[j] > 0.0 => 1.0,
                _ => 0.0,
            })
            .collect();
        let basis = greedy_max_weight(m, &weights);
        if basis.is_disjoint(market.part(i)) {
            return Err(EgError::Infeasible(i));
        }
        match index.get(&basis) {
            Some(&k) => active[k].1 += 1.0,
            None => {
                index.insert(basis.clone(), active.len());
                active.push((basis, 1.0));
            }
        }
    }
    let mut y = vec![0.0; width];
    if !positive.is_empty() {
        let total = positive.len() as f64;
        for (v, w) in active.iter_mut() {
            *w /= total;
            for e in v.iter() {
                y[e] += *w;
            }
        }
    }
    let mut u = problem.utilities(&y);
    let mut objective = problem.objective(&u);
    let mut trace = Vec::new();
    let mut gap = 0.0;
    let mut certified = positive.is_empty();
    let mut iterations = 0;

    while !certified && iterations < max_iters {
        iterations += 1;
        let g = problem.gradient(&u);
        let gy: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
        let s = greedy_max_weight(problem.m, &g);
        gap = dot(&g, &s) - gy;
        if gap <= tol {
            certified = true;
            break;
        }
        let (away, away_value) = active
            .iter()
            .enumerate()
            .map(|(k, (v, _))| (k, dot(&g, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty active set");
        let away_gain = gy - away_value;
        let use_fw = gap >= away_gain || active.len() == 1;
        let (direction_u, max_step) = if use_fw {
            let su = problem.vertex_utilities(&s);
            (su.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>(), 1.0)
        } else {
            let lambda = active[away].1;
            let vu = problem.vertex_utilities(&active[away].0);
            (
                u.iter().zip(&vu).map(|(a, b)| a - b).collect(),
                lambda / (1.0 - lambda),
            )
        };
        let step = line_search(&problem.budgets, &u, &direction_u, max_step);
        if step <= 0.0 {
            break;
        }
        if use_fw {
            for (_, w) in active.iter_mut() {
                *w *= 1.0 - step;
            }
            match index.get(&s) {
                Some(&k) => active[k].1 += step,
                None => {
                    index.insert(s.clone(), active.len());
                    active.push((s, step));
                }
            }
        } else {
            for (_, w) in active.iter_mut() {
                *w *= 1.0 + step;
            }
            active[away].1 -= step;
            if step >= max_step {
                active[away].1 = 0.0;
            }
        }
        if active.iter().any(|(_, w)| *w <= 1e-15) {
            active.retain(|(_, w)| *w > 1e-15);
            index = active
                .iter()
                .enumerate()
                .map(|(k, (v, _))| (v.clone(), k))
                .collect();
        }
        let total: f64 = active.iter().map(|(_, w)| w).sum();
        y = vec![0.0; width];
        for (v, w) in active.iter_mut() {
            *w /= total;
            for e in v.iter() {
                y[e] += *w;
            }
        }
        u = problem.utilities(&y);
        objective = problem.objective(&u);
        trace.push(objective);
    }

    Ok(Allocation {
        y,
        utilities: u,
        objective,
        gap,
        iterations,
        certified,
        trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    /// `max_e (m_i/u_i - p_e)^+` over elements of positive-budget parts.
    pub stationarity: f64,
    /// `max_e y_e |p_e - m_i/u_i|`, with `m_i/u_i = 0` for elements nobody
    /// with a budget owns.
    pub complementary_slackness: f64,
    /// `max |y(E_ℓ) - rank(E_ℓ)|` over skeleton sets with positive dual.
    pub tight_sets: f64,
    pub dual_feasible: bool,
    /// `Σ α_S rank(S) = Σ m_i`, checked exactly.
    pub dual_identity: bool,
    /// `|Σ_{e ∈ P_i} p_e y_e - m_i|` per buyer.
    pub spend: Vec<f64>,
    /// Largest `y(S) - rank(S)` found.
    pub polytope: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.spend
            .iter()
            .copied()
            .chain([
                self.stationarity,
                self.complementary_slackness,
                self.tight_sets,
                self.polytope,
            ])
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.dual_feasible && self.dual_identity && self.max_residual() <= tol
    }
}

pub fn kkt_check(y: &Allocation, skeleton: &Skeleton, market: &Market) -> KktReport {
    kkt_check_duals(y, &skeleton.duals(), market)
}

/// KKT residuals for an arbitrary laminar dual `α` with prices
/// `p_e = Σ_{S ∋ e} α_S`.
pub fn kkt_check_duals(y: &Allocation, duals: &[(ElementSet, Rational)], market: &Market) -> KktReport {
    let m = market.matroid().as_ref();
    let width = market.universe();
    let mut price = vec![0.0; width];
    for (set, alpha) in duals {
        let a = to_f64(alpha);
        for e in set.iter() {
            price[e] += a;
        }
    }
    let ratio: Vec<f64> = (0..market.buyers())
        .map(|i| {
            let b = to_f64(market.budget(i));
            if b > 0.0 {
                b / y.utilities[i].max(UTILITY_FLOOR)
            } else {
                0.0
            }
        })
        .collect();

    let mut stationarity: f64 = 0.0;
    let mut slackness: f64 = 0.0;
    for e in m.ground().iter() {
        let r = market.owner(e).map_or(0.0, |i| ratio[i]);
        stationarity = stationarity.max(r - price[e]);
        slackness = slackness.max(y.y[e] * (price[e] - r).abs());
    }
    let tight_sets = duals
        .iter()
        .filter(|(_, a)| a.is_positive())
        .map(|(s, _)| (y.amount(s) - m.rank(s) as f64).abs())
        .fold(0.0, f64::max);
    let dual_feasible = duals.iter().all(|(_, a)| !a.is_negative());
    let identity: Rational = duals
        .iter()
        .map(|(s, a)| a * Rational::from_integer(m.rank(s).into()))
        .sum();
    let spend = (0..market.buyers())
        .map(|i| {
            let paid: f64 = market.part(i).iter().map(|e| price[e] * y.y[e]).sum();
            (paid - to_f64(market.budget(i))).abs()
        })
        .collect();
    let sets: Vec<ElementSet> = duals.iter().map(|(s, _)| s.clone()).collect();
    KktReport {
        stationarity,
        complementary_slackness: slackness,
        tight_sets,
        dual_feasible,
        dual_identity: identity == market.total_budget(),
        spend,
        polytope: polytope_violation(&y.y, m, &sets, 1000, 0),
    }
}

/// Largest `y(S) - rank(S)` over every subset of the ground set when it has
/// at most 12 elements, and otherwise over `extra` plus `samples` random
/// subsets drawn from `seed`. Zero when nothing is violated.
pub fn polytope_violation(
    y: &[f64],
    m: &dyn Matroid,
    extra: &[ElementSet],
    samples: usize,
    seed: u64,
) -> f64 {
    let ground: Vec<ElementId> = m.ground().iter().collect();
    let width = m.universe();
    let excess = |s: &ElementSet| s.iter().map(|e| y[e]).sum::<f64>() - m.rank(s) as f64;
    let mut worst = ground
        .iter()
        .map(|&e| -y[e])
        .chain(extra.iter().map(excess))
        .fold(0.0, f64::max);
    if ground.len() <= 12 {
        for mask in 1u32..(1u32 << ground.len()) {
            let s = ElementSet::from_ids(
                width,
                (0..ground.len()).filter(|j| mask >> j & 1 == 1).map(|j| ground[j]),
            );
            worst = worst.max(excess(&s));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let s = ElementSet::from_ids(width, ground.iter().copied().filter(|_| rng.gen_bool(0.5)));
            worst = worst.max(excess(&s));
        }
    }
    worst
}

/// True when `y` is nonnegative and every set's total stays within its rank
/// up to `tol`.
pub fn in_polytope(y: &Allocation, m: &dyn Matroid, extra: &[ElementSet], tol: f64) -> bool {
    polytope_violation(&y.y, m, extra, 1000, 0) <= tol
}
