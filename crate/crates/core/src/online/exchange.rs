//! Exchange graph between a common independent set `I` and the other active
//! elements.
//!
//! Arc rules, for `y ∈ I` and `x ∉ I`:
//! * `y -> x` when `I - y + x` is independent in the partition matroid,
//! * `x -> y` when `I - y + x` is independent in `M`.
//!
//! Sinks are the free elements (`I + x` independent in `M`).

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::{OnlineState, PartitionInstance};
use crate::element::{ElementId, ElementSet};
use crate::matroid::Matroid;

/// Fully materialized exchange graph, built by evaluating both arc rules
/// against the independence oracles.
#[derive(Debug, Clone, Serialize)]
pub struct ExchangeGraph {
    pub nodes: ElementSet,
    pub current: ElementSet,
    /// Sorted successor lists.
    pub arcs: BTreeMap<ElementId, Vec<ElementId>>,
    /// Elements `x ∉ I` with `I + x` independent in the partition matroid.
    pub sources: ElementSet,
    pub sinks: ElementSet,
}

impl ExchangeGraph {
    pub fn successors(&self, e: ElementId) -> &[ElementId] {
        self.arcs.get(&e).map_or(&[], Vec::as_slice)
    }

    pub fn has_arc(&self, from: ElementId, to: ElementId) -> bool {
        self.successors(from).binary_search(&to).is_ok()
    }

    /// Number of elements on a shortest path from `from` to a sink, or `None`.
    pub fn distance_to_sink(&self, from: &ElementSet) -> Option<usize> {
        let mut dist: BTreeMap<ElementId, usize> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for s in from.iter() {
            dist.insert(s, 1);
            queue.push_back(s);
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if self.sinks.contains(u) {
                return Some(d);
            }
            for &v in self.successors(u) {
                dist.entry(v).or_insert_with(|| {
                    queue.push_back(v);
                    d + 1
                });
            }
        }
        None
    }
}

pub fn build_exchange_graph(
    state: &OnlineState,
    m: &dyn Matroid,
    inst: &PartitionInstance,
) -> ExchangeGraph {
    let nodes = state.active(inst);
    let current = state.current.clone();
    let partition = inst.partition_matroid();
    let outside: Vec<ElementId> = nodes.difference(&current).iter().collect();
    let mut arcs: BTreeMap<ElementId, Vec<ElementId>> = BTreeMap::new();
    for y in current.iter() {
        let without_y = current.without(y);
        for &x in &outside {
            let swapped = without_y.with(x);
            if partition.is_independent(&swapped) {
                arcs.entry(y).or_default().push(x);
            }
            if m.is_independent(&swapped) {
                arcs.entry(x).or_default().push(y);
            }
        }
    }
    for list in arcs.values_mut() {
        list.sort_unstable();
    }
    let sources = ElementSet::from_ids(
        nodes.width(),
        outside
            .iter()
            .copied()
            .filter(|&x| partition.is_independent(&current.with(x))),
    );
    let sinks = ElementSet::from_ids(
        nodes.width(),
        outside
            .iter()
            .copied()
            .filter(|&x| m.is_independent(&current.with(x))),
    );
    ExchangeGraph {
        nodes,
        current,
        arcs,
        sources,
        sinks,
    }
}

/// Breadth-first search for a shortest augmenting path that starts in
/// `sources` and stays inside `active`.
///
/// `M`-arcs come from the matroid's exchange oracle; partition arcs are read
/// off `part_of`. Sources and successor lists are scanned in increasing id
/// order and the first-discovered parent is kept, so the result is
/// deterministic. The returned path alternates `x0, y1, x1, …, xk` with the
/// `y`s in `current`.
pub fn shortest_augmenting_path_in(
    m: &dyn Matroid,
    part_of: impl Fn(ElementId) -> Option<usize>,
    current: &ElementSet,
    active: &ElementSet,
    sources: &[ElementId],
) -> Option<Vec<ElementId>> {
    let width = active.width();
    let oracle = m.exchange_oracle(current);

    let mut covered = BTreeMap::new();
    for y in current.iter() {
        if let Some(p) = part_of(y) {
            covered.insert(p, y);
        }
    }
    // Outside elements grouped by part, plus those in parts with no member in
    // `current` (reachable from every y by a partition arc).
    let mut by_part: BTreeMap<usize, Vec<ElementId>> = BTreeMap::new();
    let mut uncovered = Vec::new();
    for x in active.difference(current).iter() {
        match part_of(x) {
            Some(p) if covered.contains_key(&p) => by_part.entry(p).or_default().push(x),
            _ => uncovered.push(x),
        }
    }

    let mut parent: Vec<Option<ElementId>> = vec![None; width];
    let mut seen = ElementSet::empty(width);
    let mut queue = VecDeque::new();
    let mut sorted_sources = sources.to_vec();
    sorted_sources.sort_unstable();
    sorted_sources.dedup();
    for s in sorted_sources {
        if active.contains(s) && !current.contains(s) {
            seen.insert(s);
            queue.push_back(s);
        }
    }

    while let Some(u) = queue.pop_front() {
        let successors: Vec<ElementId> = if current.contains(u) {
            let same_part = part_of(u)
                .and_then(|p| by_part.get(&p))
                .map_or(&[][..], Vec::as_slice);
            merge_sorted(same_part, &uncovered)
        } else {
            match oracle.circuit(u) {
                None => return Some(trace(&parent, u)),
                Some(c) => c.iter().filter(|&y| active.contains(y)).collect(),
            }
        };
        for v in successors {
            if !seen.contains(v) {
                seen.insert(v);
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    None
}

fn merge_sorted(a: &[ElementId], b: &[ElementId]) -> Vec<ElementId> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn trace(parent: &[Option<ElementId>], end: ElementId) -> Vec<ElementId> {
    let mut path = vec![end];
    let mut at = end;
    while let Some(p) = parent[at] {
        path.push(p);
        at = p;
    }
    path.reverse();
    path
}
