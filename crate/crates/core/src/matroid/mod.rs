//! Matroid oracles over a finite ground set.
//!
//! Every oracle lives in an id space `0..universe()`. Views produced by
//! [`restrict`] and [`contract`] keep the ids of their base and only shrink
//! the ground mask, so sets can be passed between a matroid and its minors
//! without translation.

pub mod description;
mod families;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::element::{ElementId, ElementSet};

pub use description::MatroidDescription;
pub use families::{
    DirectSum, Gammoid, GraphicMatroid, LaminarMatroid, PartitionMatroid, TransversalMatroid,
    UniformMatroid,
};

pub type MatroidRef = Arc<dyn Matroid>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatroidError {
    #[error("query set is not contained in the ground set (offending elements {0:?})")]
    OutsideGround(Vec<ElementId>),
    #[error("set {0:?} is not independent")]
    NotIndependent(Vec<ElementId>),
    #[error("element {0} is already a member of the independent set")]
    ElementInSet(ElementId),
    #[error("invalid matroid description: {0}")]
    InvalidDescription(String),
}

/// Rank/independence oracle.
///
/// Implementors supply `is_independent`; `rank` defaults to greedy
/// extension and should be overridden wherever a closed form exists.
pub trait Matroid: Send + Sync + fmt::Debug {
    /// Width of the id space. Ground elements are a subset of `0..universe()`.
    fn universe(&self) -> usize;

    fn ground(&self) -> ElementSet {
        ElementSet::full(self.universe())
    }

    fn is_independent(&self, set: &ElementSet) -> bool;

    fn rank(&self, set: &ElementSet) -> usize {
        greedy_rank(self, set)
    }

    /// Prepares single-element exchange queries against a fixed independent set.
    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        Box::new(GenericExchange {
            matroid: self,
            base: independent.clone(),
        })
    }

    fn try_rank(&self, set: &ElementSet) -> Result<usize, MatroidError> {
        check_in_ground(&self.ground(), set)?;
        Ok(self.rank(set))
    }
}

/// Fixed-base exchange queries.
pub trait ExchangeOracle {
    /// `None` when `base + e` is independent (e is free). Otherwise the
    /// elements `y` of the base for which `base - y + e` is independent;
    /// empty exactly when `e` is a loop.
    fn circuit(&self, e: ElementId) -> Option<ElementSet>;
}

struct GenericExchange<'a, M: ?Sized> {
    matroid: &'a M,
    base: ElementSet,
}

impl<M: Matroid + ?Sized> ExchangeOracle for GenericExchange<'_, M> {
    fn circuit(&self, e: ElementId) -> Option<ElementSet> {
        let extended = self.base.with(e);
        if self.matroid.is_independent(&extended) {
            return None;
        }
        let mut out = ElementSet::empty(self.base.width());
        for y in self.base.iter() {
            if self.matroid.is_independent(&extended.without(y)) {
                out.insert(y);
            }
        }
        Some(out)
    }
}

pub(crate) fn greedy_rank<M: Matroid + ?Sized>(m: &M, set: &ElementSet) -> usize {
    let mut acc = ElementSet::empty(set.width());
    for e in set.iter() {
        acc.insert(e);
        if !m.is_independent(&acc) {
            acc.remove(e);
        }
    }
    acc.len()
}

fn check_in_ground(ground: &ElementSet, set: &ElementSet) -> Result<(), MatroidError> {
    if set.is_subset(ground) {
        Ok(())
    } else {
        Err(MatroidError::OutsideGround(set.difference(ground).to_vec()))
    }
}

/// All elements whose addition to `set` does not raise its rank.
pub fn span(m: &dyn Matroid, set: &ElementSet) -> ElementSet {
    let base = m.rank(set);
    let mut out = set.clone();
    for e in m.ground().difference(set).iter() {
        if m.rank(&set.with(e)) == base {
            out.insert(e);
        }
    }
    out
}

/// Elements of `independent` on the unique circuit of `independent + e`.
///
/// Empty when `independent + e` is independent, and also when `e` is a loop.
pub fn circuit_in(
    m: &dyn Matroid,
    e: ElementId,
    independent: &ElementSet,
) -> Result<ElementSet, MatroidError> {
    if independent.contains(e) {
        return Err(MatroidError::ElementInSet(e));
    }
    if !m.is_independent(independent) {
        return Err(MatroidError::NotIndependent(independent.to_vec()));
    }
    Ok(m
        .exchange_oracle(independent)
        .circuit(e)
        .unwrap_or_else(|| ElementSet::empty(independent.width())))
}

/// Maximum-weight independent set by the greedy algorithm. Only elements
/// with strictly positive weight are considered; ties break by id.
pub fn greedy_max_weight(m: &dyn Matroid, weights: &[f64]) -> ElementSet {
    let mut order: Vec<ElementId> = m.ground().iter().filter(|&e| weights[e] > 0.0).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    greedy_in_order(m, order)
}

/// Greedily builds an independent set scanning `order`.
pub fn greedy_in_order(m: &dyn Matroid, order: impl IntoIterator<Item = ElementId>) -> ElementSet {
    let mut acc = ElementSet::empty(m.universe());
    for e in order {
        acc.insert(e);
        if !m.is_independent(&acc) {
            acc.remove(e);
        }
    }
    acc
}

/// Restriction `M | keep`: same ids, ground set `keep`.
#[derive(Debug, Clone)]
pub struct Restriction {
    base: MatroidRef,
    keep: ElementSet,
}

impl Matroid for Restriction {
    fn universe(&self) -> usize {
        self.base.universe()
    }

    fn ground(&self) -> ElementSet {
        self.keep.clone()
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        set.is_subset(&self.keep) && self.base.is_independent(set)
    }

    fn rank(&self, set: &ElementSet) -> usize {
        if set.is_subset(&self.keep) {
            self.base.rank(set)
        } else {
            self.base.rank(&set.intersection(&self.keep))
        }
    }

    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        self.base.exchange_oracle(independent)
    }
}

pub fn restrict(m: &MatroidRef, keep: &ElementSet) -> Result<MatroidRef, MatroidError> {
    check_in_ground(&m.ground(), keep)?;
    Ok(Arc::new(Restriction {
        base: m.clone(),
        keep: keep.clone(),
    }))
}

/// Contraction `M / removed`: ground `ground(M) \ removed`,
/// `rank'(S) = rank(S ∪ removed) - rank(removed)`.
///
/// Lazy over the base oracle; a cached base shares its cache with every
/// contraction built on it.
#[derive(Debug, Clone)]
pub struct Contraction {
    base: MatroidRef,
    removed: ElementSet,
    removed_rank: usize,
}

impl Contraction {
    pub fn removed(&self) -> &ElementSet {
        &self.removed
    }
}

impl Matroid for Contraction {
    fn universe(&self) -> usize {
        self.base.universe()
    }

    fn ground(&self) -> ElementSet {
        self.base.ground().difference(&self.removed)
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        set.is_disjoint(&self.removed) && self.rank(set) == set.len()
    }

    fn rank(&self, set: &ElementSet) -> usize {
        self.base.rank(&set.union(&self.removed)) - self.removed_rank
    }
}

pub fn contract(m: &MatroidRef, removed: &ElementSet) -> Result<MatroidRef, MatroidError> {
    check_in_ground(&m.ground(), removed)?;
    Ok(Arc::new(Contraction {
        base: m.clone(),
        removed: removed.clone(),
        removed_rank: m.rank(removed),
    }))
}

/// Memoizes rank queries keyed on the query set.
#[derive(Debug)]
pub struct Cached {
    inner: MatroidRef,
    ranks: Mutex<HashMap<ElementSet, usize>>,
}

impl Cached {
    pub fn wrap(inner: MatroidRef) -> MatroidRef {
        Arc::new(Self {
            inner,
            ranks: Mutex::new(HashMap::new()),
        })
    }
}

impl Matroid for Cached {
    fn universe(&self) -> usize {
        self.inner.universe()
    }

    fn ground(&self) -> ElementSet {
        self.inner.ground()
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        self.rank(set) == set.len()
    }

    fn rank(&self, set: &ElementSet) -> usize {
        if let Some(&r) = self.ranks.lock().expect("rank cache poisoned").get(set) {
            return r;
        }
        let r = self.inner.rank(set);
        self.ranks
            .lock()
            .expect("rank cache poisoned")
            .insert(set.clone(), r);
        r
    }

    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        self.inner.exchange_oracle(independent)
    }
}
