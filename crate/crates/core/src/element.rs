//! Element identifiers and bit-vector subsets of a ground set.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Dense index of an element in the ground set.
pub type ElementId = usize;

/// A subset of the element universe `0..width`, stored as a multi-word
/// bit-vector.
///
/// All binary operations require both operands to share the same width.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ElementSet {
    bits: FixedBitSet,
}

impl ElementSet {
    pub fn empty(width: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(width),
        }
    }

    pub fn full(width: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(width);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_ids<I: IntoIterator<Item = ElementId>>(width: usize, ids: I) -> Self {
        let mut set = Self::empty(width);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn singleton(width: usize, id: ElementId) -> Self {
        Self::from_ids(width, [id])
    }

    /// Size of the element universe this set lives in.
    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.bits.contains(id)
    }

    pub fn insert(&mut self, id: ElementId) {
        assert!(
            id < self.width(),
            "element {id} outside ground set of width {}",
            self.width()
        );
        self.bits.insert(id);
    }

    pub fn remove(&mut self, id: ElementId) {
        if id < self.width() {
            self.bits.set(id, false);
        }
    }

    pub fn toggle(&mut self, id: ElementId) {
        self.bits.toggle(id);
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.bits.ones()
    }

    pub fn to_vec(&self) -> Vec<ElementId> {
        self.iter().collect()
    }

    pub fn first(&self) -> Option<ElementId> {
        self.bits.minimum()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.bits.symmetric_difference_with(&other.bits);
        out
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        out.bits.toggle_range(..);
        out
    }

    pub fn union_with(&mut self, other: &Self) {
        debug_assert_eq!(self.width(), other.width());
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &Self) {
        debug_assert_eq!(self.width(), other.width());
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &Self) {
        debug_assert_eq!(self.width(), other.width());
        self.bits.difference_with(&other.bits);
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    /// Returns a copy with `id` added.
    pub fn with(&self, id: ElementId) -> Self {
        let mut out = self.clone();
        out.insert(id);
        out
    }

    /// Returns a copy with `id` removed.
    pub fn without(&self, id: ElementId) -> Self {
        let mut out = self.clone();
        out.remove(id);
        out
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Sets serialize as a sorted list of ids; the width is supplied by context.
impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Deserializing produces a set whose width is one past the largest id.
/// Callers widen it with [`ElementSet::widened`] once the ground size is known.
impl<'de> Deserialize<'de> for ElementSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<ElementId>::deserialize(deserializer)?;
        let width = ids.iter().max().map_or(0, |m| m + 1);
        Ok(Self::from_ids(width, ids))
    }
}

impl ElementSet {
    /// Re-homes the set into a universe of `width` elements.
    ///
    /// Returns `None` if some member does not fit.
    pub fn widened(&self, width: usize) -> Option<Self> {
        if self.iter().any(|id| id >= width) {
            return None;
        }
        Some(Self::from_ids(width, self.iter()))
    }
}
