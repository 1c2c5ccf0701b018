use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{InstanceError, InstanceFile, Metadata};
use crate::element::ElementId;
use crate::matroid::description::CapacitatedSet;
use crate::matroid::MatroidDescription;

/// Generator names understood by [`generate`].
pub const FAMILIES: &[&str] = &[
    "bipartite",
    "adversarial",
    "laminar",
    "graphic",
    "transversal",
    "gammoid",
    "partitioning",
];

pub type Params = BTreeMap<String, String>;

/// Parses `k=v,k=v`.
pub fn parse_params(text: &str) -> Result<Params, InstanceError> {
    let mut out = Params::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| InstanceError::Generation(format!("parameter `{pair}` is not key=value")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn get<T: std::str::FromStr>(params: &Params, key: &str, default: T) -> Result<T, InstanceError> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| InstanceError::Generation(format!("cannot parse parameter {key}={v}"))),
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), InstanceError> {
    if ok {
        Ok(())
    } else {
        Err(InstanceError::Generation(msg()))
    }
}

/// Dispatches on the generator name. Unrecognised keys are rejected so typos
/// do not silently fall back to defaults.
pub fn generate(family: &str, params: &Params, seed: u64) -> Result<InstanceFile, InstanceError> {
    let known: &[&str] = match family {
        "bipartite" => &["n", "m", "density"],
        "adversarial" => &["n"],
        "laminar" | "graphic" | "transversal" | "gammoid" => &["n", "part_size"],
        "partitioning" => &["n", "rank", "colors"],
        _ => {
            return Err(InstanceError::Generation(format!(
                "unknown generator `{family}` (known: {})",
                FAMILIES.join(", ")
            )))
        }
    };
    if let Some(bad) = params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(InstanceError::Generation(format!(
            "generator `{family}` has no parameter `{bad}`"
        )));
    }
    let n = get(params, "n", 8usize)?;
    let part_size = get(params, "part_size", 3usize)?;
    match family {
        "bipartite" => gen_random_bipartite(n, get(params, "m", n)?, get(params, "density", 0.1)?, seed),
        "adversarial" => gen_adversarial(n),
        "laminar" => gen_laminar(n, part_size, seed),
        "graphic" => gen_graphic(n, part_size, seed),
        "transversal" => gen_transversal(n, part_size, seed),
        "gammoid" => gen_gammoid(n, part_size, seed),
        _ => {
            let rank = get(params, "rank", 2usize)?;
            let colors = get(params, "colors", 2usize)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<ElementId> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut file = lift_partitioning(&MatroidDescription::Uniform { size: n, rank }, colors, &order)?;
            file.metadata.seed = Some(seed);
            file.metadata.params.insert("rank".into(), json!(rank));
            file.metadata.params.insert("n".into(), json!(n));
            Ok(file)
        }
    }
}

fn metadata(generator: &str, seed: Option<u64>, params: serde_json::Value) -> Metadata {
    let params = match params {
        serde_json::Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    Metadata {
        seed,
        generator: generator.to_string(),
        params,
    }
}

/// Numbers elements part by part: part `i` gets the next `parts[i].len()`
/// ids. Returns the id lists.
fn number_parts<T>(parts: &[Vec<T>]) -> Vec<Vec<ElementId>> {
    let mut next = 0;
    parts
        .iter()
        .map(|p| {
            let ids = (next..next + p.len()).collect();
            next += p.len();
            ids
        })
        .collect()
}

fn item_blocks(items: usize, edges: &[Vec<usize>]) -> Vec<CapacitatedSet> {
    let mut blocks = vec![Vec::new(); items];
    let mut e = 0;
    for part in edges {
        for &item in part {
            blocks[item].push(e);
            e += 1;
        }
    }
    blocks
        .into_iter()
        .map(|elements| CapacitatedSet {
            elements,
            capacity: 1,
        })
        .collect()
}

/// `n` online buyers, `m` offline items. Each buyer gets its planted item
/// plus every other item independently with probability `density`. `M` is
/// the partition matroid with one capacity-1 block per item.
pub fn gen_random_bipartite(n: usize, m: usize, density: f64, seed: u64) -> Result<InstanceFile, InstanceError> {
    require(n >= 1 && m >= 1, || "need n, m >= 1".into())?;
    require(m >= n, || format!("cannot plant a perfect matching of {n} buyers into {m} items"))?;
    require(density > 0.0 && density <= 1.0, || format!("density {density} outside (0, 1]"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted: Vec<usize> = (0..m).collect();
    planted.shuffle(&mut rng);
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..m)
                .filter(|&j| j == planted[i] || rng.gen_bool(density))
                .collect()
        })
        .collect();
    let parts = number_parts(&adjacency);
    let size = parts.iter().map(Vec::len).sum();
    Ok(InstanceFile::new(
        MatroidDescription::Partition {
            size,
            blocks: item_blocks(m, &adjacency),
        },
        parts,
        metadata(
            "bipartite",
            Some(seed),
            json!({ "n": n, "m": m, "density": density }),
        ),
    ))
}

/// Buyers on a line of items, each adjacent to two neighbouring items, merged
/// recursively so that every junction arrival must flip a whole half.
///
/// A block of `2h + 1` buyers is a block of `h` buyers whose free item is at
/// its left end, a block of `h` buyers free at its right end, and a junction
/// buyer between them. The junction's two edges are ordered so that the
/// search reaches the side that leaves the combined free item where the
/// enclosing level wants it. Finally one buyer adjacent only to the leftmost
/// item forces a path across the whole line.
pub fn gen_adversarial(n: usize) -> Result<InstanceFile, InstanceError> {
    require(n >= 1 && n.is_power_of_two(), || format!("n = {n} is not a power of two"))?;
    let mut buyers = Vec::with_capacity(n);
    line_block(n - 1, 0, false, &mut buyers);
    buyers.push(vec![0]);
    let parts = number_parts(&buyers);
    let size = parts.iter().map(Vec::len).sum();
    Ok(InstanceFile::new(
        MatroidDescription::Partition {
            size,
            blocks: item_blocks(n, &buyers),
        },
        parts,
        metadata("adversarial", None, json!({ "n": n })),
    ))
}

/// Appends the arrivals of a block of `k` buyers on items
/// `offset..=offset + k`, ending with the free item on the left end when
/// `free_left`, else on the right end.
fn line_block(k: usize, offset: usize, free_left: bool, out: &mut Vec<Vec<usize>>) {
    if k == 0 {
        return;
    }
    if k == 1 {
        out.push(if free_left {
            vec![offset + 1, offset]
        } else {
            vec![offset, offset + 1]
        });
        return;
    }
    let h = (k - 1) / 2;
    line_block(h, offset, true, out);
    line_block(h, offset + h + 1, false, out);
    // reaching through the left half frees the right end and vice versa
    let (left, right) = (offset + h, offset + h + 1);
    out.push(if free_left { vec![right, left] } else { vec![left, right] });
}

/// Random part sizes in `1..=part_size` with one planted element per part
/// at a random position. Returns (sizes, planted element ids).
fn planted_parts(rng: &mut ChaCha8Rng, n: usize, part_size: usize) -> (Vec<Vec<ElementId>>, Vec<ElementId>) {
    let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=part_size)).collect();
    let parts = number_parts(&sizes.iter().map(|&s| vec![(); s]).collect::<Vec<_>>());
    let planted = parts.iter().map(|p| *p.choose(rng).unwrap()).collect();
    (parts, planted)
}

/// Laminar matroid built bottom-up from random leaf groups; every set's
/// capacity is its planted count plus a random slack of 0 or 1.
pub fn gen_laminar(n: usize, part_size: usize, seed: u64) -> Result<InstanceFile, InstanceError> {
    require(n >= 1 && part_size >= 1, || "need n, part_size >= 1".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (parts, planted) = planted_parts(&mut rng, n, part_size);
    let size: usize = parts.iter().map(Vec::len).sum();
    let mut is_planted = vec![false; size];
    for &e in &planted {
        is_planted[e] = true;
    }
    let mut order: Vec<ElementId> = (0..size).collect();
    order.shuffle(&mut rng);

    let mut sets = Vec::new();
    let capped = |elements: Vec<ElementId>, rng: &mut ChaCha8Rng, sets: &mut Vec<CapacitatedSet>| {
        let need = elements.iter().filter(|&&e| is_planted[e]).count();
        let capacity = (need + rng.gen_range(0..=1)).min(elements.len());
        if capacity < elements.len() {
            let mut sorted = elements.clone();
            sorted.sort_unstable();
            sets.push(CapacitatedSet {
                elements: sorted,
                capacity,
            });
        }
        elements
    };
    let mut level: Vec<Vec<ElementId>> = Vec::new();
    let mut rest = &order[..];
    while !rest.is_empty() {
        let take = rng.gen_range(2..=4).min(rest.len());
        level.push(capped(rest[..take].to_vec(), &mut rng, &mut sets));
        rest = &rest[take..];
    }
    while level.len() > 1 {
        level.shuffle(&mut rng);
        let mut next = Vec::new();
        let mut groups = level.into_iter().peekable();
        while groups.peek().is_some() {
            let arity = rng.gen_range(2..=3);
            let merged: Vec<ElementId> = groups.by_ref().take(arity).flatten().collect();
            next.push(capped(merged, &mut rng, &mut sets));
        }
        level = next;
    }
    Ok(InstanceFile::new(
        MatroidDescription::Laminar { size, sets },
        parts,
        metadata(
            "laminar",
            Some(seed),
            json!({ "n": n, "part_size": part_size }),
        ),
    ))
}

/// Graphic matroid on `n + 1` vertices: a random spanning tree is planted
/// one edge per part; the remaining edges of each part are random pairs.
pub fn gen_graphic(n: usize, part_size: usize, seed: u64) -> Result<InstanceFile, InstanceError> {
    require(n >= 1 && part_size >= 1, || "need n, part_size >= 1".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = n + 1;
    let mut perm: Vec<usize> = (0..vertices).collect();
    perm.shuffle(&mut rng);
    let mut tree: Vec<(usize, usize)> = (1..vertices)
        .map(|k| (perm[rng.gen_range(0..k)], perm[k]))
        .collect();
    tree.shuffle(&mut rng);
    let mut edge_lists: Vec<Vec<(usize, usize)>> = tree
        .into_iter()
        .map(|planted| {
            let extra = rng.gen_range(0..part_size);
            let mut part = vec![planted];
            for _ in 0..extra {
                let u = rng.gen_range(0..vertices);
                let mut v = rng.gen_range(0..vertices - 1);
                if v >= u {
                    v += 1;
                }
                part.push((u, v));
            }
            part.shuffle(&mut rng);
            part
        })
        .collect();
    let parts = number_parts(&edge_lists);
    let edges: Vec<(usize, usize)> = edge_lists.drain(..).flatten().collect();
    Ok(InstanceFile::new(
        MatroidDescription::Graphic { vertices, edges },
        parts,
        metadata(
            "graphic",
            Some(seed),
            json!({ "n": n, "part_size": part_size }),
        ),
    ))
}

/// Transversal matroid over `n` right vertices. The planted element of part
/// `i` is adjacent to the right vertex `π(i)` and one random other; every
/// other element is adjacent to one or two random right vertices.
pub fn gen_transversal(n: usize, part_size: usize, seed: u64) -> Result<InstanceFile, InstanceError> {
    require(n >= 1 && part_size >= 1, || "need n, part_size >= 1".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (parts, planted) = planted_parts(&mut rng, n, part_size);
    let size: usize = parts.iter().map(Vec::len).sum();
    let mut pi: Vec<usize> = (0..n).collect();
    pi.shuffle(&mut rng);
    let mut adjacency = vec![Vec::new(); size];
    for (i, part) in parts.iter().enumerate() {
        for &e in part {
            let mut adj = if e == planted[i] { vec![pi[i]] } else { Vec::new() };
            let degree = rng.gen_range(1..=2);
            while adj.len() < degree.min(n) {
                let v = rng.gen_range(0..n);
                if !adj.contains(&v) {
                    adj.push(v);
                }
            }
            adj.sort_unstable();
            adjacency[e] = adj;
        }
    }
    Ok(InstanceFile::new(
        MatroidDescription::Transversal {
            right_vertices: n,
            adjacency,
        },
        parts,
        metadata(
            "transversal",
            Some(seed),
            json!({ "n": n, "part_size": part_size }),
        ),
    ))
}

/// Gammoid with `n` sources, `n` relay vertices and one vertex per element.
/// Part `i`'s planted element is reached by the private path
/// `source_i -> relay_i -> element`; random extra arcs from sources and
/// relays into other elements create contention.
pub fn gen_gammoid(n: usize, part_size: usize, seed: u64) -> Result<InstanceFile, InstanceError> {
    require(n >= 1 && part_size >= 1, || "need n, part_size >= 1".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (parts, planted) = planted_parts(&mut rng, n, part_size);
    let size: usize = parts.iter().map(Vec::len).sum();
    let source = |i: usize| i;
    let relay = |i: usize| n + i;
    let vertex = |e: usize| 2 * n + e;
    let mut arcs = Vec::new();
    for i in 0..n {
        arcs.push((source(i), relay(i)));
    }
    for (i, part) in parts.iter().enumerate() {
        for &e in part {
            if e == planted[i] {
                arcs.push((relay(i), vertex(e)));
            }
            for _ in 0..rng.gen_range(1..=2) {
                let from = if rng.gen_bool(0.5) {
                    source(rng.gen_range(0..n))
                } else {
                    relay(rng.gen_range(0..n))
                };
                arcs.push((from, vertex(e)));
            }
        }
    }
    arcs.sort_unstable();
    arcs.dedup();
    Ok(InstanceFile::new(
        MatroidDescription::Gammoid {
            vertices: 2 * n + size,
            arcs,
            sources: (0..n).map(source).collect(),
            ground: (0..size).map(vertex).collect(),
        },
        parts,
        metadata(
            "gammoid",
            Some(seed),
            json!({ "n": n, "part_size": part_size }),
        ),
    ))
}

/// Matroid partitioning as an intersection instance: `k` disjoint copies of
/// `base`, element `e` in color `c` having id `c·|E| + e`. Elements arrive in
/// `order`, each as the part of its `k` colored copies.
pub fn lift_partitioning(
    base: &MatroidDescription,
    k: usize,
    order: &[ElementId],
) -> Result<InstanceFile, InstanceError> {
    require(k >= 1, || "need at least one color".into())?;
    let oracle = base
        .build()
        .map_err(|e| InstanceError::Generation(e.to_string()))?;
    let width = oracle.universe();
    let mut seen = vec![false; width];
    for &e in order {
        require(e < width && oracle.ground().contains(e), || {
            format!("element {e} is not in the base ground set")
        })?;
        require(!std::mem::replace(&mut seen[e], true), || format!("element {e} repeated"))?;
    }
    require(order.len() == oracle.ground().len(), || {
        "arrival order must list the whole ground set".into()
    })?;
    let parts = order
        .iter()
        .map(|&e| (0..k).map(|c| c * width + e).collect())
        .collect();
    Ok(InstanceFile::new(
        MatroidDescription::DirectSum {
            components: vec![base.clone(); k],
        },
        parts,
        metadata(
            "partitioning",
            None,
            json!({ "colors": k, "base": base.family_name() }),
        ),
    ))
}
