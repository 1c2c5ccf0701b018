//! Matroid intersection markets: buyers own disjoint parts of the ground set
//! and carry budgets.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::element::{ElementId, ElementSet};
use crate::matroid::MatroidRef;
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarketError {
    #[error("{parts} parts but {budgets} budgets")]
    LengthMismatch { parts: usize, budgets: usize },
    #[error("buyer {buyer} has negative budget")]
    NegativeBudget { buyer: usize },
    #[error("parts of buyers {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("part of buyer {buyer} leaves the ground set")]
    OutsideGround { buyer: usize },
}

#[derive(Debug, Clone)]
pub struct Market {
    matroid: MatroidRef,
    parts: Vec<ElementSet>,
    budgets: Vec<Rational>,
    owner: Vec<Option<usize>>,
}

impl Market {
    pub fn new(
        matroid: MatroidRef,
        parts: Vec<ElementSet>,
        budgets: Vec<Rational>,
    ) -> Result<Self, MarketError> {
        if parts.len() != budgets.len() {
            return Err(MarketError::LengthMismatch {
                parts: parts.len(),
                budgets: budgets.len(),
            });
        }
        if let Some(buyer) = budgets.iter().position(|b| b.is_negative()) {
            return Err(MarketError::NegativeBudget { buyer });
        }
        let ground = matroid.ground();
        let mut owner = vec![None; matroid.universe()];
        for (i, part) in parts.iter().enumerate() {
            if !part.is_subset(&ground) {
                return Err(MarketError::OutsideGround { buyer: i });
            }
            for e in part.iter() {
                if let Some(j) = owner[e] {
                    return Err(MarketError::Overlap(j, i));
                }
                owner[e] = Some(i);
            }
        }
        Ok(Self {
            matroid,
            parts,
            budgets,
            owner,
        })
    }

    /// Every buyer with budget 1.
    pub fn with_unit_budgets(matroid: MatroidRef, parts: Vec<ElementSet>) -> Result<Self, MarketError> {
        let budgets = vec![Rational::one(); parts.len()];
        Self::new(matroid, parts, budgets)
    }

    pub fn matroid(&self) -> &MatroidRef {
        &self.matroid
    }

    pub fn universe(&self) -> usize {
        self.matroid.universe()
    }

    pub fn buyers(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[ElementSet] {
        &self.parts
    }

    pub fn part(&self, buyer: usize) -> &ElementSet {
        &self.parts[buyer]
    }

    pub fn budgets(&self) -> &[Rational] {
        &self.budgets
    }

    pub fn budget(&self, buyer: usize) -> &Rational {
        &self.budgets[buyer]
    }

    pub fn owner(&self, e: ElementId) -> Option<usize> {
        self.owner[e]
    }

    pub fn total_budget(&self) -> Rational {
        self.budgets.iter().sum()
    }

    /// `m(B')`.
    pub fn budget_of<I: IntoIterator<Item = usize>>(&self, buyers: I) -> Rational {
        buyers.into_iter().map(|i| &self.budgets[i]).sum()
    }

    /// `N(B')`: the union of the buyers' parts.
    pub fn neighborhood<I: IntoIterator<Item = usize>>(&self, buyers: I) -> ElementSet {
        let mut out = ElementSet::empty(self.universe());
        for i in buyers {
            out.union_with(&self.parts[i]);
        }
        out
    }

    /// Copy of the market with one budget replaced.
    pub fn with_budget(&self, buyer: usize, budget: Rational) -> Result<Self, MarketError> {
        if budget.is_negative() {
            return Err(MarketError::NegativeBudget { buyer });
        }
        let mut out = self.clone();
        out.budgets[buyer] = budget;
        Ok(out)
    }

    /// Budgets 1 for the first `arrived` buyers and 0 for the rest.
    pub fn arrival_prefix(&self, arrived: usize) -> Self {
        let mut out = self.clone();
        for (i, b) in out.budgets.iter_mut().enumerate() {
            *b = if i < arrived {
                Rational::one()
            } else {
                Rational::zero()
            };
        }
        out
    }
}
