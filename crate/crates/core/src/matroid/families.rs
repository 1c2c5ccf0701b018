//! Concrete matroid families with native rank and exchange fast paths.

use std::collections::VecDeque;

use super::{ExchangeOracle, Matroid, MatroidError, MatroidRef};
use crate::element::{ElementId, ElementSet};

#[derive(Debug, Clone)]
pub struct UniformMatroid {
    size: usize,
    k: usize,
}

impl UniformMatroid {
    pub fn new(size: usize, k: usize) -> Self {
        Self { size, k }
    }
}

impl Matroid for UniformMatroid {
    fn universe(&self) -> usize {
        self.size
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        set.len() <= self.k
    }

    fn rank(&self, set: &ElementSet) -> usize {
        set.len().min(self.k)
    }

    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        let saturated = independent.len() >= self.k;
        let base = independent.clone();
        Box::new(move |_e: ElementId| saturated.then(|| base.clone()))
    }
}

impl<F: Fn(ElementId) -> Option<ElementSet>> ExchangeOracle for F {
    fn circuit(&self, e: ElementId) -> Option<ElementSet> {
        self(e)
    }
}

/// Blocks with capacities. Elements outside every block are unconstrained.
#[derive(Debug, Clone)]
pub struct PartitionMatroid {
    size: usize,
    block_of: Vec<Option<usize>>,
    capacity: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(size: usize, blocks: &[(Vec<ElementId>, usize)]) -> Result<Self, MatroidError> {
        let mut block_of = vec![None; size];
        for (b, (elements, _)) in blocks.iter().enumerate() {
            for &e in elements {
                if e >= size {
                    return Err(MatroidError::InvalidDescription(format!(
                        "partition block {b} references element {e} outside ground of size {size}"
                    )));
                }
                if let Some(other) = block_of[e] {
                    return Err(MatroidError::InvalidDescription(format!(
                        "element {e} lies in partition blocks {other} and {b}"
                    )));
                }
                block_of[e] = Some(b);
            }
        }
        Ok(Self {
            size,
            block_of,
            capacity: blocks.iter().map(|(_, c)| *c).collect(),
        })
    }

    fn counts(&self, set: &ElementSet) -> Vec<usize> {
        let mut counts = vec![0; self.capacity.len()];
        for e in set.iter() {
            if let Some(b) = self.block_of[e] {
                counts[b] += 1;
            }
        }
        counts
    }

    pub fn block_of(&self, e: ElementId) -> Option<usize> {
        self.block_of[e]
    }
}

impl Matroid for PartitionMatroid {
    fn universe(&self) -> usize {
        self.size
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        self.counts(set)
            .iter()
            .zip(&self.capacity)
            .all(|(n, c)| n <= c)
    }

    fn rank(&self, set: &ElementSet) -> usize {
        let free = set.iter().filter(|&e| self.block_of[e].is_none()).count();
        free + self
            .counts(set)
            .iter()
            .zip(&self.capacity)
            .map(|(n, c)| *n.min(c))
            .sum::<usize>()
    }

    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        let counts = self.counts(independent);
        let base = independent.clone();
        Box::new(move |e: ElementId| {
            let b = self.block_of[e]?;
            if counts[b] < self.capacity[b] {
                return None;
            }
            Some(ElementSet::from_ids(
                base.width(),
                base.iter().filter(|&y| self.block_of[y] == Some(b)),
            ))
        })
    }
}

/// Laminar family of capacitated sets. Elements outside every set are
/// unconstrained.
#[derive(Debug, Clone)]
pub struct LaminarMatroid {
    size: usize,
    sets: Vec<ElementSet>,
    capacity: Vec<usize>,
    parent: Vec<Option<usize>>,
    /// Set indices sorted so that every set precedes its ancestors.
    bottom_up: Vec<usize>,
    /// Deepest set containing each element.
    leaf_of: Vec<Option<usize>>,
}

impl LaminarMatroid {
    pub fn new(size: usize, family: &[(Vec<ElementId>, usize)]) -> Result<Self, MatroidError> {
        let mut sets = Vec::with_capacity(family.len());
        for (i, (elements, _)) in family.iter().enumerate() {
            if let Some(&e) = elements.iter().find(|&&e| e >= size) {
                return Err(MatroidError::InvalidDescription(format!(
                    "laminar set {i} references element {e} outside ground of size {size}"
                )));
            }
            sets.push(ElementSet::from_ids(size, elements.iter().copied()));
        }
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                let (a, b) = (&sets[i], &sets[j]);
                if !(a.is_disjoint(b) || a.is_subset(b) || b.is_subset(a)) {
                    return Err(MatroidError::InvalidDescription(format!(
                        "sets {i} and {j} are neither nested nor disjoint"
                    )));
                }
            }
        }
        let mut bottom_up: Vec<usize> = (0..sets.len()).collect();
        bottom_up.sort_by_key(|&i| (sets[i].len(), i));
        let mut parent = vec![None; sets.len()];
        for (pos, &i) in bottom_up.iter().enumerate() {
            parent[i] = bottom_up[pos + 1..]
                .iter()
                .copied()
                .find(|&j| sets[i].is_subset(&sets[j]));
        }
        let mut leaf_of = vec![None; size];
        for &i in bottom_up.iter().rev() {
            for e in sets[i].iter() {
                leaf_of[e] = Some(i);
            }
        }
        Ok(Self {
            size,
            sets,
            capacity: family.iter().map(|(_, c)| *c).collect(),
            parent,
            bottom_up,
            leaf_of,
        })
    }

    fn counts(&self, set: &ElementSet) -> Vec<usize> {
        self.sets
            .iter()
            .map(|a| a.intersection(set).len())
            .collect()
    }

    fn chain(&self, e: ElementId) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.leaf_of[e], move |&a| self.parent[a])
    }
}

impl Matroid for LaminarMatroid {
    fn universe(&self) -> usize {
        self.size
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        self.counts(set)
            .iter()
            .zip(&self.capacity)
            .all(|(n, c)| n <= c)
    }

    /// Bottom-up over the laminar tree: a set contributes the smaller of its
    /// capacity and what its children and direct members contribute.
    fn rank(&self, set: &ElementSet) -> usize {
        let mut value = vec![0usize; self.sets.len()];
        let mut top = 0;
        for e in set.iter() {
            match self.leaf_of[e] {
                Some(a) => value[a] += 1,
                None => top += 1,
            }
        }
        for &a in &self.bottom_up {
            let v = value[a].min(self.capacity[a]);
            match self.parent[a] {
                Some(p) => value[p] += v,
                None => top += v,
            }
        }
        top
    }

    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        let counts = self.counts(independent);
        let base = independent.clone();
        Box::new(move |e: ElementId| {
            let tight = self.chain(e).find(|&a| counts[a] >= self.capacity[a])?;
            Some(self.sets[tight].intersection(&base))
        })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Cycle matroid of a multigraph; element `i` is edge `edges[i]`.
#[derive(Debug, Clone)]
pub struct GraphicMatroid {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphicMatroid {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, MatroidError> {
        if let Some((i, _)) = edges
            .iter()
            .enumerate()
            .find(|(_, &(u, v))| u >= vertices || v >= vertices)
        {
            return Err(MatroidError::InvalidDescription(format!(
                "edge {i} references a vertex outside 0..{vertices}"
            )));
        }
        Ok(Self { vertices, edges })
    }
}

impl Matroid for GraphicMatroid {
    fn universe(&self) -> usize {
        self.edges.len()
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        self.rank(set) == set.len()
    }

    fn rank(&self, set: &ElementSet) -> usize {
        let mut uf = UnionFind::new(self.vertices);
        set.iter()
            .filter(|&e| {
                let (u, v) = self.edges[e];
                uf.union(u, v)
            })
            .count()
    }

    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        let mut uf = UnionFind::new(self.vertices);
        let mut adjacency = vec![Vec::new(); self.vertices];
        for e in independent.iter() {
            let (u, v) = self.edges[e];
            uf.union(u, v);
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
        let component: Vec<usize> = (0..self.vertices).map(|v| uf.find(v)).collect();
        let width = independent.width();
        Box::new(move |e: ElementId| {
            let (u, v) = self.edges[e];
            if u == v {
                return Some(ElementSet::empty(width));
            }
            if component[u] != component[v] {
                return None;
            }
            // tree path u ~> v
            let mut via = vec![None; self.vertices];
            let mut seen = vec![false; self.vertices];
            seen[u] = true;
            let mut queue = VecDeque::from([u]);
            while let Some(x) = queue.pop_front() {
                if x == v {
                    break;
                }
                for &(y, edge) in &adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        via[y] = Some((x, edge));
                        queue.push_back(y);
                    }
                }
            }
            let mut out = ElementSet::empty(width);
            let mut x = v;
            while let Some((prev, edge)) = via[x] {
                out.insert(edge);
                x = prev;
            }
            Some(out)
        })
    }
}

/// Transversal matroid: element `e` may be matched to any right vertex in
/// `adjacency[e]`; a set is independent iff it can be matched entirely.
#[derive(Debug, Clone)]
pub struct TransversalMatroid {
    right_vertices: usize,
    adjacency: Vec<Vec<usize>>,
}

impl TransversalMatroid {
    pub fn new(right_vertices: usize, adjacency: Vec<Vec<usize>>) -> Result<Self, MatroidError> {
        for (e, adj) in adjacency.iter().enumerate() {
            if let Some(&v) = adj.iter().find(|&&v| v >= right_vertices) {
                return Err(MatroidError::InvalidDescription(format!(
                    "element {e} adjacent to right vertex {v} outside 0..{right_vertices}"
                )));
            }
        }
        Ok(Self {
            right_vertices,
            adjacency,
        })
    }

    /// Maximum matching of `set` by repeated augmenting search.
    /// Returns the right-vertex owner table.
    fn matching(&self, set: &ElementSet) -> (usize, Vec<Option<ElementId>>) {
        let mut owner = vec![None; self.right_vertices];
        let mut size = 0;
        let mut stamp = vec![usize::MAX; self.right_vertices];
        for (round, e) in set.iter().enumerate() {
            if self.augment(e, round, &mut stamp, &mut owner) {
                size += 1;
            }
        }
        (size, owner)
    }

    fn augment(
        &self,
        e: ElementId,
        round: usize,
        stamp: &mut [usize],
        owner: &mut [Option<ElementId>],
    ) -> bool {
        for &v in &self.adjacency[e] {
            if stamp[v] == round {
                continue;
            }
            stamp[v] = round;
            let free = match owner[v] {
                None => true,
                Some(other) => self.augment(other, round, stamp, owner),
            };
            if free {
                owner[v] = Some(e);
                return true;
            }
        }
        false
    }
}

impl Matroid for TransversalMatroid {
    fn universe(&self) -> usize {
        self.adjacency.len()
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        self.matching(set).0 == set.len()
    }

    fn rank(&self, set: &ElementSet) -> usize {
        self.matching(set).0
    }

    /// Alternating search from `e` over a fixed perfect matching of the base:
    /// the base elements it reaches are exactly the exchangeable ones.
    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        let (size, owner) = self.matching(independent);
        assert_eq!(size, independent.len(), "exchange base must be independent");
        let width = independent.width();
        Box::new(move |e: ElementId| {
            let mut seen_right = vec![false; self.right_vertices];
            let mut reached = ElementSet::empty(width);
            let mut queue = VecDeque::from([e]);
            while let Some(x) = queue.pop_front() {
                for &v in &self.adjacency[x] {
                    if std::mem::replace(&mut seen_right[v], true) {
                        continue;
                    }
                    match owner[v] {
                        None => return None,
                        Some(y) if !reached.contains(y) && y != e => {
                            reached.insert(y);
                            queue.push_back(y);
                        }
                        Some(_) => {}
                    }
                }
            }
            Some(reached)
        })
    }
}

/// Gammoid: element `i` is vertex `ground[i]` of a digraph; a set is
/// independent iff it can be reached from `sources` by vertex-disjoint paths.
#[derive(Debug, Clone)]
pub struct Gammoid {
    vertices: usize,
    out_arcs: Vec<Vec<usize>>,
    is_source: Vec<bool>,
    ground: Vec<usize>,
}

impl Gammoid {
    pub fn new(
        vertices: usize,
        arcs: &[(usize, usize)],
        sources: &[usize],
        ground: Vec<usize>,
    ) -> Result<Self, MatroidError> {
        let bad = |v: &usize| *v >= vertices;
        if arcs.iter().any(|(u, v)| bad(u) || bad(v)) || sources.iter().any(bad) || ground.iter().any(bad)
        {
            return Err(MatroidError::InvalidDescription(format!(
                "gammoid references a vertex outside 0..{vertices}"
            )));
        }
        let mut seen = vec![false; vertices];
        for &g in &ground {
            if std::mem::replace(&mut seen[g], true) {
                return Err(MatroidError::InvalidDescription(format!(
                    "gammoid ground vertex {g} listed twice"
                )));
            }
        }
        let mut out_arcs = vec![Vec::new(); vertices];
        for &(u, v) in arcs {
            out_arcs[u].push(v);
        }
        let mut is_source = vec![false; vertices];
        for &s in sources {
            is_source[s] = true;
        }
        Ok(Self {
            vertices,
            out_arcs,
            is_source,
            ground,
        })
    }

    /// Vertex-disjoint source-to-target paths, as unit-capacity flow on the
    /// split graph (`v_in = 2v`, `v_out = 2v + 1`, super source/sink last).
    fn linkage(&self, set: &ElementSet) -> usize {
        let n = 2 * self.vertices + 2;
        let (source, sink) = (n - 2, n - 1);
        let mut graph = FlowGraph::new(n);
        for v in 0..self.vertices {
            graph.add_edge(2 * v, 2 * v + 1);
            if self.is_source[v] {
                graph.add_edge(source, 2 * v);
            }
            for &w in &self.out_arcs[v] {
                graph.add_edge(2 * v + 1, 2 * w);
            }
        }
        for e in set.iter() {
            graph.add_edge(2 * self.ground[e] + 1, sink);
        }
        graph.max_flow(source, sink)
    }
}

impl Matroid for Gammoid {
    fn universe(&self) -> usize {
        self.ground.len()
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        self.linkage(set) == set.len()
    }

    fn rank(&self, set: &ElementSet) -> usize {
        self.linkage(set)
    }
}

/// Unit-capacity residual graph with DFS augmentation.
struct FlowGraph {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u8>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        Self {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(1);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0);
    }

    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut flow = 0;
        loop {
            let mut seen = vec![false; self.head.len()];
            if !self.dfs(s, t, &mut seen) {
                return flow;
            }
            flow += 1;
        }
    }

    fn dfs(&mut self, u: usize, t: usize, seen: &mut [bool]) -> bool {
        if u == t {
            return true;
        }
        seen[u] = true;
        for k in 0..self.head[u].len() {
            let arc = self.head[u][k];
            let v = self.to[arc];
            if self.cap[arc] > 0 && !seen[v] && self.dfs(v, t, seen) {
                self.cap[arc] -= 1;
                self.cap[arc ^ 1] += 1;
                return true;
            }
        }
        false
    }
}

/// Disjoint union of matroids; component `c` owns ids
/// `offsets[c]..offsets[c] + components[c].universe()`.
#[derive(Debug, Clone)]
pub struct DirectSum {
    components: Vec<MatroidRef>,
    offsets: Vec<usize>,
    universe: usize,
}

impl DirectSum {
    pub fn new(components: Vec<MatroidRef>) -> Self {
        let mut offsets = Vec::with_capacity(components.len());
        let mut universe = 0;
        for c in &components {
            offsets.push(universe);
            universe += c.universe();
        }
        Self {
            components,
            offsets,
            universe,
        }
    }

    fn project(&self, c: usize, set: &ElementSet) -> ElementSet {
        let lo = self.offsets[c];
        let width = self.components[c].universe();
        ElementSet::from_ids(
            width,
            set.iter()
                .filter(|&e| e >= lo && e < lo + width)
                .map(|e| e - lo),
        )
    }

    fn component_of(&self, e: ElementId) -> usize {
        self.offsets.partition_point(|&o| o <= e) - 1
    }
}

impl Matroid for DirectSum {
    fn universe(&self) -> usize {
        self.universe
    }

    fn ground(&self) -> ElementSet {
        let mut out = ElementSet::empty(self.universe);
        for (c, m) in self.components.iter().enumerate() {
            for e in m.ground().iter() {
                out.insert(e + self.offsets[c]);
            }
        }
        out
    }

    fn is_independent(&self, set: &ElementSet) -> bool {
        (0..self.components.len())
            .all(|c| self.components[c].is_independent(&self.project(c, set)))
    }

    fn rank(&self, set: &ElementSet) -> usize {
        (0..self.components.len())
            .map(|c| self.components[c].rank(&self.project(c, set)))
            .sum()
    }

    fn exchange_oracle<'a>(&'a self, independent: &ElementSet) -> Box<dyn ExchangeOracle + 'a> {
        let oracles: Vec<_> = self
            .components
            .iter()
            .enumerate()
            .map(|(c, m)| m.exchange_oracle(&self.project(c, independent)))
            .collect();
        let width = independent.width();
        Box::new(move |e: ElementId| {
            let c = self.component_of(e);
            let lo = self.offsets[c];
            oracles[c]
                .circuit(e - lo)
                .map(|local| ElementSet::from_ids(width, local.iter().map(|x| x + lo)))
        })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::matroid::greedy_rank;

    fn all_subsets(n: usize) -> impl Iterator<Item = ElementSet> {
        (0u32..1 << n).map(move |mask| ElementSet::from_ids(n, (0..n).filter(|i| mask >> i & 1 == 1)))
    }

    fn assert_native_rank_matches_greedy(m: &dyn Matroid) {
        for s in all_subsets(m.universe()) {
            assert_eq!(m.rank(&s), greedy_rank(m, &s), "set {s:?}");
        }
    }

    fn assert_exchange_matches_generic(m: &dyn Matroid) {
        for base in all_subsets(m.universe()).filter(|s| m.is_independent(s)) {
            let fast = m.exchange_oracle(&base);
            for e in base.complement().iter() {
                let extended = base.with(e);
                let expected = (!m.is_independent(&extended)).then(|| {
                    ElementSet::from_ids(
                        base.width(),
                        base.iter().filter(|&y| m.is_independent(&extended.without(y))),
                    )
                });
                assert_eq!(fast.circuit(e), expected, "base {base:?} + {e}");
            }
        }
    }

    fn sample_laminar() -> LaminarMatroid {
        LaminarMatroid::new(
            7,
            &[
                (vec![0, 1, 2, 3], 2),
                (vec![0, 1], 1),
                (vec![4, 5], 1),
                (vec![0, 1, 2, 3, 4, 5], 3),
            ],
        )
        .unwrap()
    }

    #[test]
    fn laminar_rank_and_exchange() {
        let m = sample_laminar();
        assert_native_rank_matches_greedy(&m);
        assert_exchange_matches_generic(&m);
    }

    #[test]
    fn laminar_rejects_crossing_sets() {
        let err = LaminarMatroid::new(3, &[(vec![0, 1], 1), (vec![1, 2], 1)]).unwrap_err();
        assert!(matches!(err, MatroidError::InvalidDescription(_)));
    }

    #[test]
    fn partition_rank_and_exchange() {
        let m = PartitionMatroid::new(6, &[(vec![0, 1, 2], 2), (vec![3, 4], 1)]).unwrap();
        assert_native_rank_matches_greedy(&m);
        assert_exchange_matches_generic(&m);
        assert!(PartitionMatroid::new(3, &[(vec![0], 1), (vec![0, 1], 1)]).is_err());
    }

    #[test]
    fn graphic_rank_and_exchange() {
        let m = GraphicMatroid::new(4, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 3), (0, 3)]).unwrap();
        assert_native_rank_matches_greedy(&m);
        assert_exchange_matches_generic(&m);
    }

    #[test]
    fn transversal_rank_and_exchange() {
        let m = TransversalMatroid::new(3, vec![vec![0], vec![0, 1], vec![1], vec![1, 2], vec![], vec![2]])
            .unwrap();
        assert_native_rank_matches_greedy(&m);
        assert_exchange_matches_generic(&m);
    }

    #[test]
    fn uniform_exchange() {
        assert_exchange_matches_generic(&UniformMatroid::new(5, 2));
    }

    #[test]
    fn gammoid_rank_matches_greedy() {
        // sources 0, 1; ground vertices 2..=5
        let m = Gammoid::new(6, &[(0, 2), (0, 3), (1, 3), (3, 4), (2, 5)], &[0, 1], vec![2, 3, 4, 5, 0])
            .unwrap();
        assert_native_rank_matches_greedy(&m);
        assert_eq!(m.rank(&ElementSet::full(5)), 2);
    }

    #[test]
    fn direct_sum_offsets() {
        let sum = DirectSum::new(vec![
            Arc::new(UniformMatroid::new(2, 1)),
            Arc::new(GraphicMatroid::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()),
        ]);
        assert_eq!(sum.universe(), 5);
        assert_eq!(sum.rank(&ElementSet::full(5)), 3);
        assert_native_rank_matches_greedy(&sum);
        assert_exchange_matches_generic(&sum);
    }
}
