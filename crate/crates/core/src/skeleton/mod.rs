//! The matroid intersection skeleton: repeatedly peel off the largest set of
//! buyers with maximum inverse expansion, price everything their
//! neighborhood spans at that ratio, and contract.
//!
//! All prices, budgets and duals are exact rationals.

mod checks;
mod dinkelbach;

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::{ElementId, ElementSet};
use crate::market::Market;
use crate::matroid::{greedy_in_order, Cached, Matroid, MatroidRef};
use crate::rational::{self, Rational};

pub use checks::{
    check_budget_increase, check_gluing, check_monotonicity, check_neighborhoods,
    compare_arrival_prices, expansion_chain, expansion_property_violations,
    price_dichotomy_violations, ChainReport, ChainStep, GluingReport, MonotonicityReport,
    PriceChange,
};
pub use dinkelbach::{max_inverse_expansion_dinkelbach, min_norm_point};

/// Buyer sets up to this size are enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkeletonError {
    #[error("infeasible market: buyers {buyers:?} have positive budget but a rank-0 neighborhood")]
    Infeasible { buyers: Vec<usize> },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InverseExpansion {
    Finite(Rational),
    Infinite,
}

/// How to find the maximum inverse expansion at each peel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeelStrategy {
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] remaining buyers, Dinkelbach above.
    #[default]
    Auto,
    Exhaustive,
    Dinkelbach,
}

/// Rank of `set` in `M / contracted`.
pub(crate) fn contracted_rank(m: &dyn Matroid, set: &ElementSet, contracted: &ElementSet) -> usize {
    m.rank(&set.union(contracted)) - m.rank(contracted)
}

/// `m(B') / rank_{M/contracted}(N(B'))`.
pub fn inverse_expansion(
    market: &Market,
    buyers: &[usize],
    contracted: &ElementSet,
) -> InverseExpansion {
    let budget = market.budget_of(buyers.iter().copied());
    let rank = contracted_rank(
        market.matroid().as_ref(),
        &market.neighborhood(buyers.iter().copied()),
        contracted,
    );
    ratio(budget, rank)
}

fn ratio(budget: Rational, rank: usize) -> InverseExpansion {
    match (budget.is_zero(), rank) {
        (true, _) => InverseExpansion::Finite(Rational::zero()),
        (false, 0) => InverseExpansion::Infinite,
        (false, r) => InverseExpansion::Finite(budget / Rational::from_integer(r.into())),
    }
}

/// Maximum inverse expansion over nonempty subsets of `remaining`, with the
/// unique largest maximizer.
pub fn max_inverse_expansion(
    market: &Market,
    remaining: &[usize],
    contracted: &ElementSet,
    strategy: PeelStrategy,
) -> Result<(Rational, Vec<usize>), SkeletonError> {
    if remaining.is_empty() {
        return Err(SkeletonError::Precondition(
            "no remaining buyers to peel".into(),
        ));
    }
    let exhaustive = match strategy {
        PeelStrategy::Exhaustive => true,
        PeelStrategy::Dinkelbach => false,
        PeelStrategy::Auto => remaining.len() <= EXHAUSTIVE_LIMIT,
    };
    if exhaustive {
        max_inverse_expansion_exhaustive(market, remaining, contracted)
    } else {
        max_inverse_expansion_dinkelbach(market, remaining, contracted)
    }
}

/// Reference enumeration over all `2^k - 1` nonempty buyer subsets. The
/// maximizers are closed under union, so their union is the largest one.
pub fn max_inverse_expansion_exhaustive(
    market: &Market,
    remaining: &[usize],
    contracted: &ElementSet,
) -> Result<(Rational, Vec<usize>), SkeletonError> {
    let k = remaining.len();
    assert!(k < 64, "exhaustive enumeration over {k} buyers");
    let m = market.matroid().as_ref();
    let base_rank = m.rank(contracted);
    let mut best: Option<Rational> = None;
    let mut union_mask = 0u64;
    for mask in 1u64..(1u64 << k) {
        let members = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| remaining[j]);
        let budget = market.budget_of(members.clone());
        let mut hood = market.neighborhood(members);
        hood.union_with(contracted);
        let rank = m.rank(&hood) - base_rank;
        let value = match ratio(budget, rank) {
            InverseExpansion::Infinite => {
                return Err(SkeletonError::Infeasible {
                    buyers: (0..k)
                        .filter(|j| mask >> j & 1 == 1)
                        .map(|j| remaining[j])
                        .collect(),
                })
            }
            InverseExpansion::Finite(v) => v,
        };
        match &best {
            Some(b) if value < *b => {}
            Some(b) if value == *b => union_mask |= mask,
            _ => {
                best = Some(value);
                union_mask = mask;
            }
        }
    }
    let members = (0..k)
        .filter(|j| union_mask >> j & 1 == 1)
        .map(|j| remaining[j])
        .collect();
    Ok((best.expect("at least one subset"), members))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonLevel {
    /// 1-based level index.
    pub index: usize,
    pub buyers: Vec<usize>,
    /// `E_ℓ \ E_{ℓ-1}`.
    pub contracted_new: ElementSet,
    #[serde(with = "rational::string")]
    pub price: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    levels: Vec<SkeletonLevel>,
    prices: BTreeMap<ElementId, Rational>,
    universe: usize,
}

impl Skeleton {
    /// Assembles a skeleton from its levels. Used by tests that need to
    /// inject altered prices.
    pub fn from_levels(universe: usize, levels: Vec<SkeletonLevel>) -> Self {
        let mut prices = BTreeMap::new();
        for level in &levels {
            for e in level.contracted_new.iter() {
                prices.insert(e, level.price.clone());
            }
        }
        Self {
            levels,
            prices,
            universe,
        }
    }

    pub fn levels(&self) -> &[SkeletonLevel] {
        &self.levels
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn price(&self, e: ElementId) -> &Rational {
        &self.prices[&e]
    }

    pub fn try_price(&self, e: ElementId) -> Option<&Rational> {
        self.prices.get(&e)
    }

    pub fn prices(&self) -> &BTreeMap<ElementId, Rational> {
        &self.prices
    }

    /// Overrides one element's price. Only for negative-control tests.
    pub fn set_price(&mut self, e: ElementId, price: Rational) {
        self.prices.insert(e, price);
    }

    /// `E_1 ⊆ E_2 ⊆ … ⊆ E_L`.
    pub fn nested_sets(&self) -> Vec<ElementSet> {
        let mut acc = ElementSet::empty(self.universe);
        self.levels
            .iter()
            .map(|l| {
                acc.union_with(&l.contracted_new);
                acc.clone()
            })
            .collect()
    }

    /// Canonical duals: `α_{E_ℓ} = p_ℓ - p_{ℓ+1}`, `α_{E_L} = p_L`.
    pub fn duals(&self) -> Vec<(ElementSet, Rational)> {
        let sets = self.nested_sets();
        sets.into_iter()
            .enumerate()
            .map(|(l, set)| {
                let next = self
                    .levels
                    .get(l + 1)
                    .map_or_else(Rational::zero, |n| n.price.clone());
                (set, &self.levels[l].price - next)
            })
            .collect()
    }

    /// Price a buyer pays: the cheapest element of its part.
    pub fn buy_price(&self, part: &ElementSet) -> Option<Rational> {
        part.iter().map(|e| self.price(e)).min().cloned()
    }

    pub fn level_of(&self, e: ElementId) -> Option<usize> {
        self.levels
            .iter()
            .position(|l| l.contracted_new.contains(e))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let prices: BTreeMap<String, String> = self
            .prices
            .iter()
            .map(|(e, p)| (e.to_string(), rational::encode(p)))
            .collect();
        serde_json::json!({ "levels": self.levels, "prices": prices })
    }
}

pub fn compute_skeleton(market: &Market) -> Result<Skeleton, SkeletonError> {
    compute_skeleton_with(market, PeelStrategy::Auto)
}

pub fn compute_skeleton_with(
    market: &Market,
    strategy: PeelStrategy,
) -> Result<Skeleton, SkeletonError> {
    let cached: MatroidRef = Cached::wrap(market.matroid().clone());
    let market = Market::new(
        cached.clone(),
        market.parts().to_vec(),
        market.budgets().to_vec(),
    )
    .expect("market already validated");
    let m = cached.as_ref();
    let ground = m.ground();
    let width = m.universe();
    let mut contracted = ElementSet::empty(width);
    let mut remaining: Vec<usize> = (0..market.buyers()).collect();
    let mut levels = Vec::new();

    while !remaining.is_empty() {
        let (rho, peeled) = max_inverse_expansion(&market, &remaining, &contracted, strategy)?;
        let spanned = if rho.is_zero() {
            ground.difference(&contracted)
        } else {
            let mut hood = market.neighborhood(peeled.iter().copied());
            hood.union_with(&contracted);
            let hood_rank = m.rank(&hood);
            let mut s = hood.difference(&contracted);
            for e in ground.difference(&hood).iter() {
                if m.rank(&hood.with(e)) == hood_rank {
                    s.insert(e);
                }
            }
            s
        };
        contracted.union_with(&spanned);
        remaining.retain(|b| !peeled.contains(b));
        levels.push(SkeletonLevel {
            index: levels.len() + 1,
            buyers: peeled,
            contracted_new: spanned,
            price: rho,
        });
    }
    let rest = ground.difference(&contracted);
    if !rest.is_empty() {
        levels.push(SkeletonLevel {
            index: levels.len() + 1,
            buyers: Vec::new(),
            contracted_new: rest,
            price: Rational::zero(),
        });
    }
    Ok(Skeleton::from_levels(width, levels))
}

/// Greedy basis scanning elements by non-increasing price (ties by id).
pub fn max_price_basis(skeleton: &Skeleton, m: &dyn Matroid) -> ElementSet {
    let mut order: Vec<ElementId> = m.ground().iter().collect();
    order.sort_by(|&a, &b| skeleton.price(b).cmp(skeleton.price(a)).then(a.cmp(&b)));
    greedy_in_order(m, order)
}

/// Levels whose price fails to strictly exceed the next level's.
pub fn price_order_violations(skeleton: &Skeleton) -> Vec<usize> {
    skeleton
        .levels()
        .windows(2)
        .filter(|w| w[0].price <= w[1].price)
        .map(|w| w[0].index)
        .collect()
}

/// `Σ_S α_S · rank(S)`.
pub fn dual_objective(skeleton: &Skeleton, m: &dyn Matroid) -> Rational {
    skeleton
        .duals()
        .iter()
        .map(|(set, alpha)| alpha * Rational::from_integer(m.rank(set).into()))
        .sum()
}

/// Sum of prices over `set`.
pub fn price_sum(skeleton: &Skeleton, set: &ElementSet) -> Rational {
    set.iter().map(|e| skeleton.price(e)).sum()
}
