//! Executable forms of the skeleton's structural properties. Each checker
//! returns the offending elements or buyers; an empty report means the
//! property holds.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{compute_skeleton, contracted_rank, Skeleton, SkeletonError};
use crate::element::{ElementId, ElementSet};
use crate::market::Market;
use crate::matroid::{contract, restrict, span};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PriceChange {
    pub element: ElementId,
    #[serde(with = "rational::string")]
    pub before: Rational,
    #[serde(with = "rational::string")]
    pub after: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct MonotonicityReport {
    /// Minimum pre-arrival price over the arriving buyer's part.
    #[serde(serialize_with = "opt_rational")]
    pub threshold: Option<Rational>,
    /// Elements whose price went down.
    pub decreased: Vec<PriceChange>,
    /// Elements priced below the threshold whose price moved.
    pub unstable: Vec<PriceChange>,
}

impl MonotonicityReport {
    pub fn ok(&self) -> bool {
        self.decreased.is_empty() && self.unstable.is_empty()
    }
}

fn opt_rational<S: serde::Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&rational::encode(r)),
        None => s.serialize_none(),
    }
}

fn same_shape(before: &Market, after: &Market) -> Result<(), SkeletonError> {
    let same_matroid = std::ptr::eq(
        Arc::as_ptr(before.matroid()) as *const (),
        Arc::as_ptr(after.matroid()) as *const (),
    );
    if !same_matroid {
        return Err(SkeletonError::Precondition(
            "markets must share one matroid".into(),
        ));
    }
    if before.parts() != after.parts() {
        return Err(SkeletonError::Precondition(
            "markets must have identical parts".into(),
        ));
    }
    Ok(())
}

/// Compares skeletons before and after one buyer's budget went from 0 to 1.
pub fn check_monotonicity(
    before: &Market,
    after: &Market,
    buyer: usize,
) -> Result<MonotonicityReport, SkeletonError> {
    same_shape(before, after)?;
    if buyer >= before.buyers() {
        return Err(SkeletonError::Precondition(format!("no buyer {buyer}")));
    }
    if !before.budget(buyer).is_zero() || !after.budget(buyer).is_one() {
        return Err(SkeletonError::Precondition(format!(
            "buyer {buyer} must go from budget 0 to budget 1"
        )));
    }
    let others_equal = (0..before.buyers())
        .filter(|&j| j != buyer)
        .all(|j| before.budget(j) == after.budget(j));
    if !others_equal {
        return Err(SkeletonError::Precondition(
            "only the arriving buyer's budget may change".into(),
        ));
    }
    let old = compute_skeleton(before)?;
    let new = compute_skeleton(after)?;
    Ok(compare_arrival_prices(&old, &new, before.part(buyer)))
}

/// Monotonicity and stability of two precomputed skeletons around an arrival
/// of the buyer owning `part`.
pub fn compare_arrival_prices(old: &Skeleton, new: &Skeleton, part: &ElementSet) -> MonotonicityReport {
    let threshold = old.buy_price(part);
    let mut report = MonotonicityReport {
        threshold: threshold.clone(),
        ..Default::default()
    };
    for (&e, before) in old.prices() {
        let after = new.price(e);
        let change = || PriceChange {
            element: e,
            before: before.clone(),
            after: after.clone(),
        };
        if after < before {
            report.decreased.push(change());
        }
        if threshold.as_ref().is_some_and(|q| before < q) && after != before {
            report.unstable.push(change());
        }
    }
    report
}

/// Monotonicity under an arbitrary budget increase. This goes beyond the
/// single-arrival statement; only `decreased` is populated.
pub fn check_budget_increase(before: &Market, after: &Market) -> Result<MonotonicityReport, SkeletonError> {
    same_shape(before, after)?;
    if (0..before.buyers()).any(|j| after.budget(j) < before.budget(j)) {
        return Err(SkeletonError::Precondition(
            "budgets may only increase".into(),
        ));
    }
    let old = compute_skeleton(before)?;
    let new = compute_skeleton(after)?;
    let mut report = MonotonicityReport::default();
    for (&e, b) in old.prices() {
        let a = new.price(e);
        if a < b {
            report.decreased.push(PriceChange {
                element: e,
                before: b.clone(),
                after: a.clone(),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GluingReport {
    pub cut: usize,
    /// `before` holds the glued price, `after` the full skeleton's.
    pub mismatches: Vec<PriceChange>,
}

impl GluingReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Recomputes the skeletons of the markets left and right of level `cut` and
/// compares the glued prices with the full skeleton.
pub fn check_gluing(market: &Market, skeleton: &Skeleton, cut: usize) -> Result<GluingReport, SkeletonError> {
    let levels = skeleton.levels();
    let mut report = GluingReport {
        cut,
        mismatches: Vec::new(),
    };
    if levels.len() <= 1 {
        return Ok(report);
    }
    if cut == 0 || cut >= levels.len() {
        return Err(SkeletonError::Precondition(format!(
            "cut {cut} outside 1..{}",
            levels.len()
        )));
    }
    let invalid = |e: crate::matroid::MatroidError| SkeletonError::Precondition(e.to_string());
    let mut left: Vec<usize> = levels[..cut].iter().flat_map(|l| l.buyers.iter().copied()).collect();
    let mut right: Vec<usize> = levels[cut..].iter().flat_map(|l| l.buyers.iter().copied()).collect();
    left.sort_unstable();
    right.sort_unstable();

    let m = market.matroid();
    let e1 = market.neighborhood(left.iter().copied());
    let m1 = restrict(m, &e1).map_err(invalid)?;
    let market1 = Market::new(
        m1,
        left.iter().map(|&i| market.part(i).clone()).collect(),
        left.iter().map(|&i| market.budget(i).clone()).collect(),
    )
    .map_err(|e| SkeletonError::Precondition(e.to_string()))?;
    let sk1 = compute_skeleton(&market1)?;

    let spanned = span(m.as_ref(), &e1);
    let m2 = contract(m, &spanned).map_err(invalid)?;
    let market2 = Market::new(
        m2,
        right.iter().map(|&i| market.part(i).difference(&spanned)).collect(),
        right.iter().map(|&i| market.budget(i).clone()).collect(),
    )
    .map_err(|e| SkeletonError::Precondition(e.to_string()))?;
    let sk2 = compute_skeleton(&market2)?;

    let sub_sets = sk1.nested_sets();
    for e in m.ground().iter() {
        let glued = if e1.contains(e) {
            sk1.price(e).clone()
        } else if spanned.contains(e) {
            let k = sub_sets
                .iter()
                .position(|s| m.rank(&s.with(e)) == m.rank(s))
                .expect("spanned by the full left neighborhood");
            sk1.levels()[k].price.clone()
        } else {
            sk2.price(e).clone()
        };
        let full = skeleton.price(e);
        if *full != glued {
            report.mismatches.push(PriceChange {
                element: e,
                before: glued,
                after: full.clone(),
            });
        }
    }
    Ok(report)
}

/// Pairs `(level, buyer)` where a buyer still waiting at the start of that
/// level has a rank-0 part in the contracted matroid.
pub fn check_neighborhoods(market: &Market, skeleton: &Skeleton) -> Vec<(usize, usize)> {
    let m = market.matroid().as_ref();
    let mut contracted = ElementSet::empty(skeleton.universe());
    let mut out = Vec::new();
    for (l, level) in skeleton.levels().iter().enumerate() {
        for later in &skeleton.levels()[l..] {
            for &i in &later.buyers {
                if contracted_rank(m, market.part(i), &contracted) == 0 {
                    out.push((level.index, i));
                }
            }
        }
        contracted.union_with(&level.contracted_new);
    }
    out
}

/// Elements priced strictly between `n/(n+1)` and 1, or above 1.
pub fn price_dichotomy_violations(skeleton: &Skeleton, n: usize) -> Vec<ElementId> {
    let bound = Rational::new(n.into(), (n + 1).into());
    skeleton
        .prices()
        .iter()
        .filter(|(_, p)| !p.is_one() && **p > bound)
        .map(|(&e, _)| e)
        .collect()
}

/// Buyer subsets `B'` (as sorted lists) for which
/// `rank_{M/E_>}({e ∈ N(B') : y_e > tol}) < m(B') / q_max`.
pub fn expansion_property_violations(
    market: &Market,
    skeleton: &Skeleton,
    y: &[f64],
    tol: f64,
) -> Vec<Vec<usize>> {
    let n = market.buyers();
    assert!(n <= 20, "subset enumeration over {n} buyers");
    let m = market.matroid().as_ref();
    let buy: Vec<Option<Rational>> = market.parts().iter().map(|p| skeleton.buy_price(p)).collect();
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let members: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let budget = market.budget_of(members.iter().copied());
        if budget.is_zero() {
            continue;
        }
        let q_max = members.iter().filter_map(|&i| buy[i].clone()).max();
        let Some(q_max) = q_max.filter(|q| q.is_positive()) else {
            out.push(members);
            continue;
        };
        let above: ElementSet = ElementSet::from_ids(
            skeleton.universe(),
            skeleton.prices().iter().filter(|(_, p)| **p > q_max).map(|(&e, _)| e),
        );
        let support = ElementSet::from_ids(
            skeleton.universe(),
            market
                .neighborhood(members.iter().copied())
                .iter()
                .filter(|&e| y[e] > tol),
        );
        let rank = Rational::from_integer(contracted_rank(m, &support, &above).into());
        if rank * &q_max < budget {
            out.push(members);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainStep {
    pub k: usize,
    /// `L_k`.
    pub buyers: Vec<usize>,
    /// `R_{k+1}`.
    pub reached: ElementSet,
    #[serde(serialize_with = "opt_rational")]
    pub max_price: Option<Rational>,
    pub rank: usize,
    /// `(1/p_{e*})^k`.
    #[serde(with = "rational::string")]
    pub required_rank: Rational,
    pub price_ok: bool,
    pub rank_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    pub start: ElementId,
    #[serde(with = "rational::string")]
    pub start_price: Rational,
    pub steps: Vec<ChainStep>,
    /// Index `k` of the first `R_k` holding a free element.
    pub terminating_k: Option<usize>,
    /// `2k`, an upper bound on the shortest augmenting path from the start.
    pub path_bound: Option<usize>,
    /// `p_{e*} = 0` and `e*` is not free, so no finite rank bound applies.
    pub degenerate: bool,
}

impl ChainReport {
    /// Every step satisfied both claims and the chain reached a free element.
    pub fn ok(&self) -> bool {
        self.terminating_k.is_some() && self.steps.iter().all(|s| s.price_ok && s.rank_ok)
    }
}

/// Builds `R_1 = {e*}`, `L_k` (buyers whose part meets the cheap part of the
/// circuits of `R_k` in `I*`) and `R_{k+1}` (the support of `y` on `N(L_k)`)
/// until some `R_k` contains an element free with respect to `I*`, a step
/// breaks one of the two claims, or `R_{k+1}` adds nothing new.
///
/// Every buyer holding an element of `I*` must have budget 1 and `e*` must not
/// be a loop. An element already in `I*` counts as its own circuit.
pub fn expansion_chain(
    skeleton: &Skeleton,
    market: &Market,
    current: &ElementSet,
    start: ElementId,
    y: &[f64],
    tol: f64,
) -> Result<ChainReport, SkeletonError> {
    let m = market.matroid().as_ref();
    let p_star = skeleton.price(start).clone();
    let pre = |msg: &str| Err(SkeletonError::Precondition(msg.into()));
    if !m.is_independent(current) {
        return pre("I* is not independent in M");
    }
    let mut covered = vec![false; market.buyers()];
    for e in current.iter() {
        let Some(i) = market.owner(e) else {
            return pre("I* uses an element outside every part");
        };
        if std::mem::replace(&mut covered[i], true) {
            return pre("I* takes two elements from one part");
        }
    }
    if let Some(i) = (0..market.buyers()).find(|&i| covered[i] && !market.budget(i).is_one()) {
        return Err(SkeletonError::Precondition(format!(
            "buyer {i} holds an element of I* but does not have budget 1"
        )));
    }
    if current.contains(start) || market.owner(start).is_none_or(|i| covered[i]) {
        return pre("I* + e* is not independent in the partition matroid");
    }
    if p_star >= Rational::one() {
        return pre("price of e* must be below 1");
    }
    if m.rank(&ElementSet::singleton(current.width(), start)) == 0 {
        return pre("e* is a loop of M");
    }
    let mut report = ChainReport {
        start,
        start_price: p_star.clone(),
        steps: Vec::new(),
        terminating_k: None,
        path_bound: None,
        degenerate: false,
    };
    let oracle = m.exchange_oracle(current);
    let free = |set: &ElementSet| set.iter().any(|e| !current.contains(e) && oracle.circuit(e).is_none());
    let mut frontier = ElementSet::singleton(current.width(), start);
    let mut seen = frontier.clone();
    if free(&frontier) {
        report.terminating_k = Some(1);
        report.path_bound = Some(2);
        return Ok(report);
    }
    if p_star.is_zero() {
        report.degenerate = true;
        return Ok(report);
    }

    let inverse = p_star.recip();
    let mut required = Rational::one();
    for k in 1.. {
        let mut cheap = ElementSet::empty(current.width());
        for e in frontier.iter() {
            if current.contains(e) {
                cheap.insert(e);
            } else if let Some(c) = oracle.circuit(e) {
                cheap.union_with(&c);
            }
        }
        let buyers: Vec<usize> = (0..market.buyers())
            .filter(|&i| {
                market
                    .part(i)
                    .intersection(&cheap)
                    .iter()
                    .any(|e| *skeleton.price(e) <= p_star)
            })
            .collect();
        let reached = ElementSet::from_ids(
            current.width(),
            market
                .neighborhood(buyers.iter().copied())
                .iter()
                .filter(|&e| y[e] > tol),
        );
        required *= &inverse;
        let max_price = reached.iter().map(|e| skeleton.price(e)).max().cloned();
        let rank = m.rank(&reached);
        let step = ChainStep {
            k,
            buyers,
            reached: reached.clone(),
            price_ok: max_price.as_ref().is_none_or(|p| *p <= p_star),
            rank_ok: Rational::from_integer(rank.into()) >= required,
            max_price,
            rank,
            required_rank: required.clone(),
        };
        let failed = !(step.price_ok && step.rank_ok);
        report.steps.push(step);
        if failed {
            break;
        }
        if free(&reached) {
            report.terminating_k = Some(k + 1);
            report.path_bound = Some(2 * (k + 1));
            break;
        }
        if reached.is_subset(&seen) {
            break;
        }
        seen.union_with(&reached);
        frontier = reached;
    }
    Ok(report)
}
