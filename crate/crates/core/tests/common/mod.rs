#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use matroid_recourse::element::ElementSet;
use matroid_recourse::market::Market;
use matroid_recourse::matroid::description::CapacitatedSet;
use matroid_recourse::matroid::MatroidDescription;
use matroid_recourse::rational::Rational;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn set(width: usize, ids: &[usize]) -> ElementSet {
    ElementSet::from_ids(width, ids.iter().copied())
}

// ---------------------------------------------------------------------------
// Independence oracles written from the definitions, sharing no code with the
// library implementations.

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn forest(vertices: usize, edges: &[(usize, usize)], ids: &[usize]) -> bool {
    let mut parent: Vec<usize> = (0..vertices).collect();
    for &e in ids {
        let (u, v) = edges[e];
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Tries every assignment of distinct right vertices.
fn matchable(adjacency: &[Vec<usize>], ids: &[usize], used: &mut Vec<usize>) -> bool {
    let Some((&e, rest)) = ids.split_first() else {
        return true;
    };
    for &r in &adjacency[e] {
        if !used.contains(&r) {
            used.push(r);
            if matchable(adjacency, rest, used) {
                return true;
            }
            used.pop();
        }
    }
    false
}

/// Backtracking search for vertex-disjoint paths from sources to each target.
fn linked(out: &[Vec<usize>], is_source: &[bool], targets: &[usize], used: &mut [bool]) -> bool {
    let Some((&t, rest)) = targets.split_first() else {
        return true;
    };
    if used[t] {
        return false;
    }
    // walk backwards from t to an unused source
    fn back(
        v: usize,
        out: &[Vec<usize>],
        is_source: &[bool],
        rest: &[usize],
        used: &mut [bool],
    ) -> bool {
        used[v] = true;
        if is_source[v] && linked(out, is_source, rest, used) {
            return true;
        }
        for u in 0..out.len() {
            if !used[u] && out[u].contains(&v) && back(u, out, is_source, rest, used) {
                return true;
            }
        }
        used[v] = false;
        false
    }
    back(t, out, is_source, rest, used)
}

pub fn independent(desc: &MatroidDescription, ids: &[usize]) -> bool {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    match desc {
        MatroidDescription::Uniform { size, rank } => ids.iter().all(|&e| e < *size) && ids.len() <= *rank,
        MatroidDescription::Partition { blocks, .. } | MatroidDescription::Laminar { sets: blocks, .. } => {
            blocks
                .iter()
                .all(|b| ids.iter().filter(|e| b.elements.contains(e)).count() <= b.capacity)
        }
        MatroidDescription::Graphic { vertices, edges } => forest(*vertices, edges, ids),
        MatroidDescription::Transversal { adjacency, .. } => matchable(adjacency, ids, &mut Vec::new()),
        MatroidDescription::Gammoid {
            vertices,
            arcs,
            sources,
            ground,
        } => {
            let mut out = vec![Vec::new(); *vertices];
            for &(u, v) in arcs {
                out[u].push(v);
            }
            let mut is_source = vec![false; *vertices];
            for &s in sources {
                is_source[s] = true;
            }
            let targets: Vec<usize> = ids.iter().map(|&e| ground[e]).collect();
            linked(&out, &is_source, &targets, &mut vec![false; *vertices])
        }
        MatroidDescription::DirectSum { components } => {
            let mut offset = 0;
            components.iter().all(|c| {
                let w = c.universe();
                let local: Vec<usize> = ids
                    .iter()
                    .filter(|&&e| e >= offset && e < offset + w)
                    .map(|&e| e - offset)
                    .collect();
                offset += w;
                independent(c, &local)
            })
        }
        MatroidDescription::Restriction { base, keep } => {
            ids.iter().all(|e| keep.contains(e)) && independent(base, ids)
        }
        MatroidDescription::Contraction { base, contracted } => {
            if ids.iter().any(|e| contracted.contains(e)) {
                return false;
            }
            let mut basis = Vec::new();
            for &c in contracted {
                basis.push(c);
                if !independent(base, &basis) {
                    basis.pop();
                }
            }
            basis.extend_from_slice(ids);
            independent(base, &basis)
        }
    }
}

/// Elements usable at all (the ground set).
pub fn ground(desc: &MatroidDescription) -> Vec<usize> {
    match desc {
        MatroidDescription::Restriction { base, keep } => {
            let g = ground(base);
            keep.iter().copied().filter(|e| g.contains(e)).collect()
        }
        MatroidDescription::Contraction { base, contracted } => ground(base)
            .into_iter()
            .filter(|e| !contracted.contains(e))
            .collect(),
        MatroidDescription::DirectSum { components } => {
            let mut out = Vec::new();
            let mut offset = 0;
            for c in components {
                out.extend(ground(c).into_iter().map(|e| e + offset));
                offset += c.universe();
            }
            out
        }
        d => (0..d.universe()).collect(),
    }
}

/// Rank by brute force over subsets, largest first.
pub fn rank(desc: &MatroidDescription, ids: &[usize]) -> usize {
    let k = ids.len();
    assert!(k <= 20);
    let mut best = 0;
    for mask in 0u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size > best {
            let sub: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| ids[j]).collect();
            if independent(desc, &sub) {
                best = size;
            }
        }
    }
    best
}

/// Greedy rank, valid since `desc` describes a matroid. Much faster than
/// [`rank`] and still independent of the library.
pub fn greedy_rank(desc: &MatroidDescription, ids: &[usize]) -> usize {
    let mut basis = Vec::new();
    for &e in ids {
        basis.push(e);
        if !independent(desc, &basis) {
            basis.pop();
        }
    }
    basis.len()
}

pub fn contracted_rank(desc: &MatroidDescription, ids: &[usize], contracted: &[usize]) -> usize {
    let mut all: Vec<usize> = contracted.to_vec();
    all.extend(ids.iter().copied().filter(|e| !contracted.contains(e)));
    greedy_rank(desc, &all) - greedy_rank(desc, contracted)
}

/// Largest set picking at most one element from each listed part that is
/// independent in `desc`.
pub fn max_common(desc: &MatroidDescription, parts: &[Vec<usize>]) -> usize {
    fn go(desc: &MatroidDescription, parts: &[Vec<usize>], chosen: &mut Vec<usize>, best: &mut usize) {
        if chosen.len() + parts.len() <= *best {
            return;
        }
        let Some((part, rest)) = parts.split_first() else {
            *best = chosen.len();
            return;
        };
        for &e in part {
            chosen.push(e);
            if independent(desc, chosen) {
                go(desc, rest, chosen, best);
            }
            chosen.pop();
        }
        go(desc, rest, chosen, best);
    }
    let mut best = 0;
    go(desc, parts, &mut Vec::new(), &mut best);
    best
}

// ---------------------------------------------------------------------------
// Brute-force skeleton straight from the peeling definition.

pub struct OracleSkeleton {
    pub prices: BTreeMap<usize, Rational>,
    pub level_prices: Vec<Rational>,
}

pub fn oracle_skeleton(desc: &MatroidDescription, parts: &[Vec<usize>], budgets: &[Rational]) -> Option<OracleSkeleton> {
    let g = ground(desc);
    let mut contracted: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..parts.len()).collect();
    let mut prices = BTreeMap::new();
    let mut level_prices = Vec::new();
    while !remaining.is_empty() {
        let k = remaining.len();
        let mut best: Option<Rational> = None;
        let mut union = 0u32;
        for mask in 1u32..(1 << k) {
            let members: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| remaining[j]).collect();
            let budget: Rational = members.iter().map(|&i| budgets[i].clone()).sum();
            let hood: Vec<usize> = members.iter().flat_map(|&i| parts[i].clone()).collect();
            let r = contracted_rank(desc, &hood, &contracted);
            let value = if budget.is_zero() {
                Rational::zero()
            } else if r == 0 {
                return None;
            } else {
                budget / Rational::from_integer(r.into())
            };
            match &best {
                Some(b) if value < *b => {}
                Some(b) if value == *b => union |= mask,
                _ => {
                    best = Some(value);
                    union = mask;
                }
            }
        }
        let rho = best.unwrap();
        let peeled: Vec<usize> = (0..k).filter(|j| union >> j & 1 == 1).map(|j| remaining[j]).collect();
        let fresh: Vec<usize> = if rho.is_zero() {
            g.iter().copied().filter(|e| !contracted.contains(e)).collect()
        } else {
            let mut base = contracted.clone();
            base.extend(peeled.iter().flat_map(|&i| parts[i].clone()));
            let r = greedy_rank(desc, &base);
            g.iter()
                .copied()
                .filter(|e| !contracted.contains(e))
                .filter(|&e| {
                    let mut with = base.clone();
                    with.push(e);
                    greedy_rank(desc, &with) == r
                })
                .collect()
        };
        for &e in &fresh {
            prices.insert(e, rho.clone());
        }
        contracted.extend(fresh);
        remaining.retain(|b| !peeled.contains(b));
        level_prices.push(rho);
    }
    for &e in &g {
        prices.entry(e).or_insert_with(Rational::zero);
    }
    if g.iter().any(|e| !contracted.contains(e)) {
        level_prices.push(Rational::zero());
    }
    Some(OracleSkeleton { prices, level_prices })
}

// ---------------------------------------------------------------------------
// Random small instances.

/// A random matroid description on exactly `size` element ids.
pub fn random_description(rng: &mut Rng8, size: usize) -> MatroidDescription {
    let family = if size >= 4 { rng.gen_range(0..9) } else { rng.gen_range(0..6) };
    match family {
        0 => MatroidDescription::Uniform {
            size,
            rank: rng.gen_range(1..=size.max(1)),
        },
        1 => {
            let mut ids: Vec<usize> = (0..size).collect();
            ids.shuffle(rng);
            let mut blocks = Vec::new();
            while !ids.is_empty() {
                let take = rng.gen_range(1..=ids.len().min(4));
                let elements: Vec<usize> = ids.drain(..take).collect();
                let capacity = rng.gen_range(1..=elements.len());
                blocks.push(CapacitatedSet { elements, capacity });
            }
            MatroidDescription::Partition { size, blocks }
        }
        2 => random_laminar(rng, size),
        3 => {
            let vertices = rng.gen_range(2..=(size + 1).min(7));
            let edges = (0..size)
                .map(|_| {
                    let u = rng.gen_range(0..vertices);
                    let v = if rng.gen_bool(0.05) { u } else { rng.gen_range(0..vertices) };
                    (u, v)
                })
                .collect();
            MatroidDescription::Graphic { vertices, edges }
        }
        4 => {
            let right = rng.gen_range(1..=size.min(6));
            let adjacency = (0..size)
                .map(|_| {
                    let mut a: Vec<usize> = (0..right).filter(|_| rng.gen_bool(0.35)).collect();
                    if a.is_empty() && rng.gen_bool(0.9) {
                        a.push(rng.gen_range(0..right));
                    }
                    a
                })
                .collect();
            MatroidDescription::Transversal {
                right_vertices: right,
                adjacency,
            }
        }
        5 => {
            let vertices = size + rng.gen_range(1..=3);
            let mut order: Vec<usize> = (0..vertices).collect();
            order.shuffle(rng);
            let ground = order[..size].to_vec();
            let sources: Vec<usize> = (0..vertices).filter(|_| rng.gen_bool(0.3)).collect();
            let arcs = (0..2 * vertices)
                .map(|_| (rng.gen_range(0..vertices), rng.gen_range(0..vertices)))
                .filter(|(u, v)| u != v)
                .collect();
            MatroidDescription::Gammoid {
                vertices,
                arcs,
                sources,
                ground,
            }
        }
        6 => {
            let left = rng.gen_range(1..size);
            MatroidDescription::DirectSum {
                components: vec![random_description(rng, left), random_description(rng, size - left)],
            }
        }
        7 => {
            let base = random_description(rng, size);
            let keep = ground(&base).into_iter().filter(|_| rng.gen_bool(0.8)).collect();
            MatroidDescription::Restriction {
                base: Box::new(base),
                keep,
            }
        }
        _ => {
            let base = random_description(rng, size);
            let contracted = ground(&base).into_iter().filter(|_| rng.gen_bool(0.2)).collect();
            MatroidDescription::Contraction {
                base: Box::new(base),
                contracted,
            }
        }
    }
}

fn random_laminar(rng: &mut Rng8, size: usize) -> MatroidDescription {
    let mut ids: Vec<usize> = (0..size).collect();
    ids.shuffle(rng);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while !ids.is_empty() {
        let take = rng.gen_range(1..=ids.len().min(3));
        groups.push(ids.drain(..take).collect());
    }
    let mut sets: Vec<CapacitatedSet> = groups
        .iter()
        .map(|g| CapacitatedSet {
            elements: g.clone(),
            capacity: rng.gen_range(0..=g.len()),
        })
        .collect();
    while groups.len() > 1 {
        let take = rng.gen_range(2..=groups.len().min(3));
        let merged: Vec<usize> = groups.drain(..take).flatten().collect();
        sets.push(CapacitatedSet {
            elements: merged.clone(),
            capacity: rng.gen_range(1..=merged.len()),
        });
        groups.push(merged);
    }
    MatroidDescription::Laminar { size, sets }
}

/// Disjoint nonempty parts over ground elements, some possibly unowned.
pub fn random_parts(rng: &mut Rng8, desc: &MatroidDescription, buyers: usize) -> Vec<Vec<usize>> {
    let mut ids = ground(desc);
    ids.shuffle(rng);
    let buyers = buyers.min(ids.len());
    let mut parts: Vec<Vec<usize>> = ids.drain(..buyers).map(|e| vec![e]).collect();
    for e in ids {
        if rng.gen_bool(0.75) {
            let b = rng.gen_range(0..buyers);
            if parts[b].len() < 3 {
                parts[b].push(e);
            }
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

/// Disjoint nonempty parts covering the ground set exactly.
pub fn random_cover(rng: &mut Rng8, desc: &MatroidDescription, buyers: usize) -> Vec<Vec<usize>> {
    let mut ids = ground(desc);
    ids.shuffle(rng);
    let buyers = buyers.min(ids.len());
    let mut parts: Vec<Vec<usize>> = ids.drain(..buyers).map(|e| vec![e]).collect();
    for e in ids {
        parts[rng.gen_range(0..buyers)].push(e);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

pub fn random_budgets(rng: &mut Rng8, buyers: usize) -> Vec<Rational> {
    let choices = [(1, 1), (1, 2), (3, 2), (2, 1), (1, 3), (0, 1)];
    (0..buyers)
        .map(|_| {
            let (a, b) = choices[rng.gen_range(0..choices.len())];
            Rational::new(a.into(), b.into())
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct MarketCase {
    pub seed: u64,
    pub desc: MatroidDescription,
    pub parts: Vec<Vec<usize>>,
    pub budgets: Vec<Rational>,
}

impl MarketCase {
    pub fn width(&self) -> usize {
        self.desc.universe()
    }

    pub fn unit(&self) -> bool {
        self.budgets.iter().all(|b| b.is_one())
    }

    pub fn market(&self) -> Market {
        let w = self.width();
        Market::new(
            self.desc.build().unwrap(),
            self.parts.iter().map(|p| set(w, p)).collect(),
            self.budgets.clone(),
        )
        .unwrap()
    }

    /// True when every positive-budget subset of buyers has a neighborhood of
    /// positive rank.
    pub fn feasible(&self) -> bool {
        self.parts
            .iter()
            .zip(&self.budgets)
            .all(|(p, b)| b.is_zero() || greedy_rank(&self.desc, p) > 0)
    }
}

/// A random market with at most `max_elements` ids and `max_buyers` buyers,
/// retried until feasible. `unit` forces unit budgets.
pub fn random_market(seed: u64, max_elements: usize, max_buyers: usize, unit: bool) -> MarketCase {
    let mut r = rng(seed);
    loop {
        let size = r.gen_range(2..=max_elements);
        let desc = random_description(&mut r, size);
        if ground(&desc).is_empty() {
            continue;
        }
        let buyers = r.gen_range(1..=max_buyers);
        let parts = random_parts(&mut r, &desc, buyers);
        let budgets = if unit || r.gen_bool(0.5) {
            vec![Rational::one(); parts.len()]
        } else {
            random_budgets(&mut r, parts.len())
        };
        let case = MarketCase {
            seed,
            desc,
            parts,
            budgets,
        };
        if case.feasible() {
            return case;
        }
    }
}

/// Parts as id lists from an [`ElementSet`] slice.
pub fn part_lists(parts: &[ElementSet]) -> Vec<Vec<usize>> {
    parts.iter().map(ElementSet::to_vec).collect()
}
