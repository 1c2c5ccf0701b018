//! Linear Fisher markets with 0/1 utilities: the partition-matroid case of
//! the general solver.

use std::sync::Arc;

use serde::Serialize;

use super::{solve_eg2, Allocation, EgError};
use crate::element::{ElementId, ElementSet};
use crate::market::Market;
use crate::matroid::{MatroidRef, PartitionMatroid};
use crate::rational::{to_f64, Rational};

#[derive(Debug, Clone)]
pub struct FisherMarket {
    pub items: usize,
    /// Items each buyer likes (utility 1).
    pub adjacency: Vec<Vec<usize>>,
    pub budgets: Vec<Rational>,
}

impl FisherMarket {
    /// `(buyer, item)` for every edge, in element-id order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, items)| items.iter().map(move |&j| (i, j)))
            .collect()
    }
}

/// The equivalent matroid intersection market: one element per edge, a
/// capacity-1 block per item in `M`, and buyer parts made of their edges.
pub fn fisher_as_market(fisher: &FisherMarket) -> Market {
    let edges = fisher.edges();
    let mut blocks = vec![Vec::new(); fisher.items];
    for (e, &(_, j)) in edges.iter().enumerate() {
        blocks[j].push(e);
    }
    let blocks: Vec<(Vec<ElementId>, usize)> = blocks.into_iter().map(|b| (b, 1)).collect();
    let m: MatroidRef = Arc::new(
        PartitionMatroid::new(edges.len(), &blocks).expect("blocks partition the edges"),
    );
    let mut parts = vec![ElementSet::empty(edges.len()); fisher.adjacency.len()];
    for (e, &(i, _)) in edges.iter().enumerate() {
        parts[i].insert(e);
    }
    Market::new(m, parts, fisher.budgets.clone()).expect("edge parts are disjoint")
}

#[derive(Debug, Clone, Serialize)]
pub struct FisherResiduals {
    /// `max |Σ_i y_ij - 1|` over items with positive price.
    pub clearing: f64,
    /// `max y_ij (p_j - q_i)` where `q_i` is the cheapest price buyer `i` sees.
    pub cheapest: f64,
    /// `max |Σ_j p_j y_ij - m_i|`.
    pub spend: f64,
}

impl FisherResiduals {
    pub fn max(&self) -> f64 {
        self.clearing.max(self.cheapest).max(self.spend)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FisherSolution {
    pub allocation: Allocation,
    /// `y_ij`, indexed like [`FisherMarket::edges`].
    pub amounts: Vec<f64>,
    pub prices: Vec<f64>,
    pub residuals: FisherResiduals,
}

/// Solves the Fisher program and recovers item prices as the
/// allocation-weighted average of `m_i/u_i` over the buyers of each item;
/// unsold items are priced 0.
pub fn solve_fisher(fisher: &FisherMarket, max_iters: usize, tol: f64) -> Result<FisherSolution, EgError> {
    let market = fisher_as_market(fisher);
    let allocation = solve_eg2(&market, max_iters, tol)?;
    let edges = fisher.edges();
    let budgets: Vec<f64> = fisher.budgets.iter().map(to_f64).collect();
    let mut sold = vec![0.0; fisher.items];
    let mut paid = vec![0.0; fisher.items];
    for (e, &(i, j)) in edges.iter().enumerate() {
        let y = allocation.y[e];
        sold[j] += y;
        if budgets[i] > 0.0 {
            paid[j] += y * budgets[i] / allocation.utilities[i];
        }
    }
    let prices: Vec<f64> = (0..fisher.items)
        .map(|j| if sold[j] > 1e-12 { paid[j] / sold[j] } else { 0.0 })
        .collect();

    let mut cheapest = vec![f64::INFINITY; fisher.adjacency.len()];
    for &(i, j) in &edges {
        cheapest[i] = cheapest[i].min(prices[j]);
    }
    let mut spent = vec![0.0; fisher.adjacency.len()];
    let mut residuals = FisherResiduals {
        clearing: (0..fisher.items)
            .filter(|&j| prices[j] > 1e-9)
            .map(|j| (sold[j] - 1.0).abs())
            .fold(0.0, f64::max),
        cheapest: 0.0,
        spend: 0.0,
    };
    for (e, &(i, j)) in edges.iter().enumerate() {
        let y = allocation.y[e];
        residuals.cheapest = residuals.cheapest.max(y * (prices[j] - cheapest[i]));
        spent[i] += prices[j] * y;
    }
    residuals.spend = spent
        .iter()
        .zip(&budgets)
        .map(|(s, b)| (s - b).abs())
        .fold(0.0, f64::max);
    Ok(FisherSolution {
        amounts: allocation.y.clone(),
        allocation,
        prices,
        residuals,
    })
}
