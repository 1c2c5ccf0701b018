//! Online maintenance of a maximum common independent set of a matroid `M`
//! and a partition matroid whose parts arrive one at a time.
//!
//! On each arrival the maintainer searches the exchange graph for a shortest
//! augmenting path starting in the new part and applies it. Recourse for an
//! arrival is the number of elements the path touches, `|I_t Δ I_{t-1}|`.

mod exchange;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::{ElementId, ElementSet};
use crate::matroid::{Matroid, MatroidDescription, MatroidError, MatroidRef, PartitionMatroid};

pub use exchange::{build_exchange_graph, shortest_augmenting_path_in, ExchangeGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SapError {
    #[error("part {got} arrived out of order (expected part {expected})")]
    OutOfOrder { expected: usize, got: usize },
    #[error("no part {0} in the instance")]
    UnknownPart(usize),
    #[error("augmenting path {path:?} produced a set that is not a common independent set")]
    InvalidAugmentation { path: Vec<ElementId> },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
}

/// A matroid together with the ordered parts of the online partition matroid.
#[derive(Debug, Clone)]
pub struct PartitionInstance {
    matroid: MatroidDescription,
    parts: Vec<ElementSet>,
    part_of: Vec<Option<usize>>,
}

impl PartitionInstance {
    /// Validates that the parts are pairwise disjoint and cover the ground set.
    pub fn new(matroid: MatroidDescription, parts: Vec<Vec<ElementId>>) -> Result<Self, SapError> {
        let oracle = matroid.build()?;
        let width = oracle.universe();
        let mut part_of = vec![None; width];
        let mut sets = Vec::with_capacity(parts.len());
        for (i, part) in parts.iter().enumerate() {
            for &e in part {
                if e >= width {
                    return Err(SapError::InvalidInstance(format!(
                        "part {i} references element {e} outside id space of width {width}"
                    )));
                }
                if let Some(j) = part_of[e] {
                    return Err(SapError::InvalidInstance(format!(
                        "element {e} appears in parts {j} and {i}"
                    )));
                }
                part_of[e] = Some(i);
            }
            sets.push(ElementSet::from_ids(width, part.iter().copied()));
        }
        let covered = ElementSet::from_ids(width, (0..width).filter(|&e| part_of[e].is_some()));
        let ground = oracle.ground();
        if covered != ground {
            return Err(SapError::InvalidInstance(format!(
                "parts do not cover the ground set exactly (missing {:?}, extra {:?})",
                ground.difference(&covered).to_vec(),
                covered.difference(&ground).to_vec()
            )));
        }
        Ok(Self {
            matroid,
            parts: sets,
            part_of,
        })
    }

    pub fn matroid(&self) -> &MatroidDescription {
        &self.matroid
    }

    pub fn build_matroid(&self) -> Result<MatroidRef, SapError> {
        Ok(self.matroid.build()?)
    }

    pub fn universe(&self) -> usize {
        self.part_of.len()
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[ElementSet] {
        &self.parts
    }

    pub fn part(&self, t: usize) -> &ElementSet {
        &self.parts[t]
    }

    pub fn part_of(&self, e: ElementId) -> Option<usize> {
        self.part_of[e]
    }

    /// The online partition matroid: every part has capacity one.
    pub fn partition_matroid(&self) -> PartitionMatroid {
        let blocks: Vec<_> = self.parts.iter().map(|p| (p.to_vec(), 1)).collect();
        PartitionMatroid::new(self.universe(), &blocks).expect("parts are disjoint by construction")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalRecord {
    pub part_index: usize,
    pub path: Option<Vec<ElementId>>,
    pub recourse: usize,
    pub path_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnlineState {
    pub current: ElementSet,
    pub revealed: ElementSet,
    pub inert_parts: BTreeSet<usize>,
    pub log: Vec<ArrivalRecord>,
}

impl OnlineState {
    pub fn new(universe: usize) -> Self {
        Self {
            current: ElementSet::empty(universe),
            revealed: ElementSet::empty(universe),
            inert_parts: BTreeSet::new(),
            log: Vec::new(),
        }
    }

    /// Revealed elements whose part is not inert.
    pub fn active(&self, inst: &PartitionInstance) -> ElementSet {
        let mut active = self.revealed.clone();
        for &p in &self.inert_parts {
            active.difference_with(inst.part(p));
        }
        active
    }

    pub fn arrivals(&self) -> usize {
        self.log.len()
    }
}

/// Shortest path in the exchange graph from an element of part `t` to a free
/// element. Ties resolve toward smaller element ids.
pub fn shortest_augmenting_path(
    state: &OnlineState,
    m: &dyn Matroid,
    inst: &PartitionInstance,
    t: usize,
) -> Option<Vec<ElementId>> {
    if state.inert_parts.contains(&t) {
        return None;
    }
    let sources = inst.part(t).to_vec();
    shortest_augmenting_path_in(
        m,
        |e| inst.part_of(e),
        &state.current,
        &state.active(inst),
        &sources,
    )
}

/// Replaces `I` by `I Δ path` after checking the result is a larger common
/// independent set. Returns the recourse of the step.
pub fn apply_augmentation(
    state: &mut OnlineState,
    m: &dyn Matroid,
    inst: &PartitionInstance,
    path: &[ElementId],
) -> Result<usize, SapError> {
    let mut next = state.current.clone();
    for &e in path {
        next.toggle(e);
    }
    let valid = next.len() == state.current.len() + 1
        && m.is_independent(&next)
        && inst.partition_matroid().is_independent(&next);
    if !valid {
        return Err(SapError::InvalidAugmentation {
            path: path.to_vec(),
        });
    }
    let recourse = next.symmetric_difference(&state.current).len();
    state.current = next;
    Ok(recourse)
}

/// Reveals part `t`, augments if possible and otherwise marks the part inert.
pub fn process_arrival(
    state: &mut OnlineState,
    m: &dyn Matroid,
    inst: &PartitionInstance,
    t: usize,
) -> Result<ArrivalRecord, SapError> {
    if t >= inst.part_count() {
        return Err(SapError::UnknownPart(t));
    }
    if t != state.arrivals() {
        return Err(SapError::OutOfOrder {
            expected: state.arrivals(),
            got: t,
        });
    }
    state.revealed.union_with(inst.part(t));
    let record = match shortest_augmenting_path(state, m, inst, t) {
        Some(path) => {
            let recourse = apply_augmentation(state, m, inst, &path)?;
            ArrivalRecord {
                part_index: t,
                recourse,
                path_length: path.len(),
                path: Some(path),
            }
        }
        None => {
            state.inert_parts.insert(t);
            ArrivalRecord {
                part_index: t,
                path: None,
                recourse: 0,
                path_length: 0,
            }
        }
    };
    state.log.push(record.clone());
    Ok(record)
}

pub fn total_recourse(state: &OnlineState) -> usize {
    state.log.iter().map(|r| r.recourse).sum()
}

/// Processes every part of the instance in order.
pub fn run_online(inst: &PartitionInstance, m: &dyn Matroid) -> Result<OnlineState, SapError> {
    let mut state = OnlineState::new(inst.universe());
    for t in 0..inst.part_count() {
        process_arrival(&mut state, m, inst, t)?;
    }
    Ok(state)
}
