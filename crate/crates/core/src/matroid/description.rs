use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    contract, restrict, DirectSum, Gammoid, GraphicMatroid, LaminarMatroid, MatroidError,
    MatroidRef, PartitionMatroid, TransversalMatroid, UniformMatroid,
};
use crate::element::{ElementId, ElementSet};

/// A capacitated block of elements (partition blocks, laminar sets).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacitatedSet {
    pub elements: Vec<ElementId>,
    pub capacity: usize,
}

/// Serializable description of a matroid; [`MatroidDescription::build`]
/// turns it into an oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MatroidDescription {
    Uniform {
        size: usize,
        rank: usize,
    },
    Partition {
        size: usize,
        blocks: Vec<CapacitatedSet>,
    },
    Laminar {
        size: usize,
        sets: Vec<CapacitatedSet>,
    },
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    Transversal {
        right_vertices: usize,
        adjacency: Vec<Vec<usize>>,
    },
    Gammoid {
        vertices: usize,
        arcs: Vec<(usize, usize)>,
        sources: Vec<usize>,
        ground: Vec<usize>,
    },
    DirectSum {
        components: Vec<MatroidDescription>,
    },
    Restriction {
        base: Box<MatroidDescription>,
        keep: Vec<ElementId>,
    },
    Contraction {
        base: Box<MatroidDescription>,
        contracted: Vec<ElementId>,
    },
}

fn blocks(sets: &[CapacitatedSet]) -> Vec<(Vec<ElementId>, usize)> {
    sets.iter()
        .map(|s| (s.elements.clone(), s.capacity))
        .collect()
}

impl MatroidDescription {
    /// Width of the element id space.
    pub fn universe(&self) -> usize {
        match self {
            Self::Uniform { size, .. } | Self::Partition { size, .. } | Self::Laminar { size, .. } => {
                *size
            }
            Self::Graphic { edges, .. } => edges.len(),
            Self::Transversal { adjacency, .. } => adjacency.len(),
            Self::Gammoid { ground, .. } => ground.len(),
            Self::DirectSum { components } => components.iter().map(Self::universe).sum(),
            Self::Restriction { base, .. } | Self::Contraction { base, .. } => base.universe(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::Partition { .. } => "partition",
            Self::Laminar { .. } => "laminar",
            Self::Graphic { .. } => "graphic",
            Self::Transversal { .. } => "transversal",
            Self::Gammoid { .. } => "gammoid",
            Self::DirectSum { .. } => "direct_sum",
            Self::Restriction { .. } => "restriction",
            Self::Contraction { .. } => "contraction",
        }
    }

    pub fn build(&self) -> Result<MatroidRef, MatroidError> {
        Ok(match self {
            Self::Uniform { size, rank } => Arc::new(UniformMatroid::new(*size, *rank)),
            Self::Partition { size, blocks: b } => Arc::new(PartitionMatroid::new(*size, &blocks(b))?),
            Self::Laminar { size, sets } => Arc::new(LaminarMatroid::new(*size, &blocks(sets))?),
            Self::Graphic { vertices, edges } => Arc::new(GraphicMatroid::new(*vertices, edges.clone())?),
            Self::Transversal {
                right_vertices,
                adjacency,
            } => Arc::new(TransversalMatroid::new(*right_vertices, adjacency.clone())?),
            Self::Gammoid {
                vertices,
                arcs,
                sources,
                ground,
            } => Arc::new(Gammoid::new(*vertices, arcs, sources, ground.clone())?),
            Self::DirectSum { components } => Arc::new(DirectSum::new(
                components.iter().map(Self::build).collect::<Result<_, _>>()?,
            )),
            Self::Restriction { base, keep } => {
                let b = base.build()?;
                restrict(&b, &Self::id_set(b.universe(), keep)?)?
            }
            Self::Contraction { base, contracted } => {
                let b = base.build()?;
                contract(&b, &Self::id_set(b.universe(), contracted)?)?
            }
        })
    }

    fn id_set(width: usize, ids: &[ElementId]) -> Result<ElementSet, MatroidError> {
        if let Some(&bad) = ids.iter().find(|&&e| e >= width) {
            return Err(MatroidError::InvalidDescription(format!(
                "element {bad} outside id space of width {width}"
            )));
        }
        Ok(ElementSet::from_ids(width, ids.iter().copied()))
    }
}
