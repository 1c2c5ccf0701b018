//! Maximum inverse expansion for large buyer sets.
//!
//! For a fixed ratio `ρ`, `g_ρ(A) = ρ·rank_C(N(A)) - m(A)` is submodular with
//! `g_ρ(∅) = 0`, and `max InvExp ≤ ρ` exactly when `g_ρ ≥ 0`. Dinkelbach
//! iteration raises `ρ` to the ratio of a negative set until none exists.
//! Minimization goes through the Fujishige-Wolfe minimum-norm point in
//! floating point; every candidate it produces is re-evaluated exactly, so the
//! returned ratio is always an attained value.

use num_traits::{Signed, Zero};

use super::{ratio, InverseExpansion, SkeletonError};
use crate::element::ElementSet;
use crate::market::Market;
use crate::rational::{to_f64, Rational};

const MAX_MAJOR: usize = 2000;
const MAX_MINOR: usize = 200;

/// Minimum-norm point of the base polytope of a submodular `f` on `k`
/// elements with `f(∅) = 0`. `chain(order)` returns the marginal gains
/// `f(order[..=j]) - f(order[..j])` along the order.
pub fn min_norm_point(k: usize, chain: impl Fn(&[usize]) -> Vec<f64>) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    let vertex = |w: &[f64]| {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
        let gains = chain(&order);
        let mut q = vec![0.0; k];
        for (j, &e) in order.iter().enumerate() {
            q[e] = gains[j];
        }
        q
    };
    let mut points = vec![vertex(&vec![0.0; k])];
    let mut weights = vec![1.0];
    let mut x = points[0].clone();
    for _ in 0..MAX_MAJOR {
        let q = vertex(&x);
        let xx = dot(&x, &x);
        let scale = xx.max(1.0);
        if xx - dot(&x, &q) <= 1e-10 * scale {
            break;
        }
        if points.iter().any(|p| dist2(p, &q) <= 1e-18 * scale) {
            break;
        }
        points.push(q);
        weights.push(0.0);
        for _ in 0..MAX_MINOR {
            let mu = affine_minimizer(&points);
            if mu.iter().all(|&v| v > 1e-12) {
                weights = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in weights.iter().zip(&mu) {
                if *m <= 1e-12 && l - m > 1e-15 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in weights.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            let mut j = 0;
            while j < points.len() {
                if weights[j] <= 1e-12 {
                    points.swap_remove(j);
                    weights.swap_remove(j);
                } else {
                    j += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        x = combine(&points, &weights, k);
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn combine(points: &[Vec<f64>], weights: &[f64], k: usize) -> Vec<f64> {
    let mut x = vec![0.0; k];
    for (p, w) in points.iter().zip(weights) {
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += w * pi;
        }
    }
    x
}

/// Coefficients (summing to 1) of the minimum-norm point of the affine hull.
fn affine_minimizer(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut a = vec![vec![0.0; n + 2]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = dot(&points[i], &points[j]);
        }
        a[i][i] += 1e-12;
        a[i][n] = 1.0;
        a[n][i] = 1.0;
    }
    a[n][n + 1] = 1.0;
    solve(&mut a);
    (0..n).map(|i| a[i][n + 1]).collect()
}

/// Gauss-Jordan with partial pivoting on an augmented matrix, in place.
fn solve(a: &mut [Vec<f64>]) {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-300 {
            continue;
        }
        for c in col..=n {
            a[col][c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
}

struct Peel<'a> {
    market: &'a Market,
    contracted: &'a ElementSet,
    base_rank: usize,
}

impl Peel<'_> {
    fn ratio(&self, buyers: &[usize]) -> InverseExpansion {
        let mut hood = self.market.neighborhood(buyers.iter().copied());
        hood.union_with(self.contracted);
        ratio(
            self.market.budget_of(buyers.iter().copied()),
            self.market.matroid().rank(&hood) - self.base_rank,
        )
    }

    /// Exact `g_ρ(fixed ∪ order[..j])` for every `j`, including `j = 0`.
    fn exact_chain(&self, rho: &Rational, fixed: &[usize], order: &[usize]) -> Vec<Rational> {
        let m = self.market.matroid();
        let mut hood = self.market.neighborhood(fixed.iter().copied());
        hood.union_with(self.contracted);
        let mut budget = self.market.budget_of(fixed.iter().copied());
        let g = |hood: &ElementSet, budget: &Rational| {
            rho * Rational::from_integer((m.rank(hood) - self.base_rank).into()) - budget
        };
        let mut out = vec![g(&hood, &budget)];
        for &i in order {
            hood.union_with(self.market.part(i));
            budget += self.market.budget(i);
            out.push(g(&hood, &budget));
        }
        out
    }

    /// Exact minimum of `g_ρ(fixed ∪ X)` over `X ⊆ free` among the candidates
    /// suggested by the minimum-norm point, with a minimizing `X` that is
    /// largest among those candidates.
    fn minimize(&self, rho: &Rational, fixed: &[usize], free: &[usize]) -> (Rational, Vec<usize>) {
        let rho_f = to_f64(rho);
        let m = self.market.matroid();
        let mut start = self.market.neighborhood(fixed.iter().copied());
        start.union_with(self.contracted);
        let start_rank = m.rank(&start);
        let x = min_norm_point(free.len(), |order| {
            let mut hood = start.clone();
            let mut prev = start_rank;
            order
                .iter()
                .map(|&j| {
                    let i = free[j];
                    hood.union_with(self.market.part(i));
                    let r = m.rank(&hood);
                    let gain = rho_f * (r - prev) as f64 - to_f64(self.market.budget(i));
                    prev = r;
                    gain
                })
                .collect()
        });
        let mut order: Vec<usize> = (0..free.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let order: Vec<usize> = order.into_iter().map(|j| free[j]).collect();
        let values = self.exact_chain(rho, fixed, &order);
        let best = values.iter().min().unwrap().clone();
        let len = values.iter().rposition(|v| *v == best).unwrap();
        (best, order[..len].to_vec())
    }
}

/// Same contract as the exhaustive search, for any number of buyers.
pub fn max_inverse_expansion_dinkelbach(
    market: &Market,
    remaining: &[usize],
    contracted: &ElementSet,
) -> Result<(Rational, Vec<usize>), SkeletonError> {
    let peel = Peel {
        market,
        contracted,
        base_rank: market.matroid().rank(contracted),
    };
    let infeasible = |set: &[usize]| SkeletonError::Infeasible {
        buyers: set
            .iter()
            .copied()
            .filter(|&i| market.budget(i).is_positive())
            .collect(),
    };
    let mut best_set = remaining.to_vec();
    let mut rho = match peel.ratio(&best_set) {
        InverseExpansion::Finite(r) => r,
        InverseExpansion::Infinite => return Err(infeasible(&best_set)),
    };
    loop {
        let (value, set) = peel.minimize(&rho, &[], remaining);
        if !value.is_negative() {
            break;
        }
        rho = match peel.ratio(&set) {
            InverseExpansion::Finite(r) if r > rho => r,
            InverseExpansion::Finite(_) => unreachable!("negative g implies a larger ratio"),
            InverseExpansion::Infinite => return Err(infeasible(&set)),
        };
        best_set = set;
    }

    // Grow to the largest maximizer: minimizers of g_ρ at the optimum are
    // closed under union.
    if rho.is_zero() {
        return Ok((rho, remaining.to_vec()));
    }
    let (_, zero_set) = peel.minimize(&rho, &[], remaining);
    let mut chosen = vec![false; market.buyers()];
    for &i in best_set.iter().chain(&zero_set) {
        chosen[i] = true;
    }
    for &i in remaining {
        if chosen[i] {
            continue;
        }
        let fixed: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&j| chosen[j] || j == i)
            .collect();
        let free: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&j| !chosen[j] && j != i)
            .collect();
        let (value, extra) = peel.minimize(&rho, &fixed, &free);
        if value.is_zero() {
            chosen[i] = true;
            for j in extra {
                chosen[j] = true;
            }
        }
    }
    let members = remaining.iter().copied().filter(|&i| chosen[i]).collect();
    Ok((rho, members))
}
