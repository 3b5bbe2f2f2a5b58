//! Refinement forest addressing and newest-vertex bisection.
//!
//! Every triangle of a mesh in a hierarchy is identified by the macro
//! triangle it descends from and the sequence of bisection choices taken from
//! it. Triangles are stored with their newest vertex first; bisection splits
//! the opposite (refinement) edge. Because the geometry of a child depends
//! only on its address, two meshes of the same hierarchy can be compared and
//! overlaid without any shared mutable state.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::geometry::{midpoint, Point};

/// Path from a macro triangle down the bisection tree.
///
/// Bits are left-aligned: the first bisection choice is bit 63. The derived
/// ordering is depth-first (an ancestor sorts immediately before its
/// descendants).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TreeAddress {
    pub macro_index: u32,
    pub depth: u8,
    bits: u64,
}

pub const MAX_DEPTH: u8 = 64;

impl TreeAddress {
    pub fn root(macro_index: usize) -> Self {
        TreeAddress {
            macro_index: macro_index as u32,
            depth: 0,
            bits: 0,
        }
    }

    pub fn child(&self, which: u8) -> Self {
        assert!(self.depth < MAX_DEPTH, "refinement depth exhausted");
        let bit = (which as u64 & 1) << (63 - self.depth as u32);
        TreeAddress {
            macro_index: self.macro_index,
            depth: self.depth + 1,
            bits: self.bits | bit,
        }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.depth == 0 {
            return None;
        }
        let depth = self.depth - 1;
        Some(TreeAddress {
            macro_index: self.macro_index,
            depth,
            bits: self.bits & prefix_mask(depth),
        })
    }

    /// Choice taken at bisection level `level` (0-based).
    pub fn choice(&self, level: u8) -> u8 {
        ((self.bits >> (63 - level as u32)) & 1) as u8
    }

    /// True if `self` is `other` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, other: &TreeAddress) -> bool {
        self.macro_index == other.macro_index
            && self.depth <= other.depth
            && other.bits & prefix_mask(self.depth) == self.bits
    }

    /// Ancestor of `self` at the given depth.
    pub fn truncate(&self, depth: u8) -> Self {
        let depth = depth.min(self.depth);
        TreeAddress {
            macro_index: self.macro_index,
            depth,
            bits: self.bits & prefix_mask(depth),
        }
    }
}

fn prefix_mask(depth: u8) -> u64 {
    if depth == 0 {
        0
    } else {
        !0u64 << (64 - depth as u32)
    }
}

impl Ord for TreeAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.macro_index, self.bits, self.depth).cmp(&(other.macro_index, other.bits, other.depth))
    }
}

impl PartialOrd for TreeAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Split a labelled triangle `(newest, r1, r2)` at the midpoint `m` of its
/// refinement edge `r1 r2`. Both children keep counterclockwise orientation
/// and have `m` as their newest vertex.
#[inline]
pub fn bisect(tri: [usize; 3], m: usize) -> [[usize; 3]; 2] {
    let [v0, v1, v2] = tri;
    [[m, v0, v1], [m, v2, v0]]
}

/// Vertex registry shared by the triangles generated within one operation.
/// Midpoints are keyed by the unordered pair of parent vertex ids, so the
/// presence of a key means that edge has been bisected.
#[derive(Debug, Clone)]
pub struct VertexRegistry {
    pub coords: Vec<Point>,
    midpoints: HashMap<(usize, usize), usize>,
}

impl VertexRegistry {
    pub fn new(coords: Vec<Point>) -> Self {
        VertexRegistry {
            coords,
            midpoints: HashMap::new(),
        }
    }

    pub fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let id = self.coords.len();
        self.coords.push(midpoint(self.coords[a], self.coords[b]));
        self.midpoints.insert(key, id);
        id
    }

    pub fn is_bisected(&self, a: usize, b: usize) -> bool {
        self.midpoints.contains_key(&(a.min(b), a.max(b)))
    }

    /// Vertex triple of the triangle at `address`, registering every
    /// midpoint created on the way down.
    pub fn generate(&mut self, macro_tri: [usize; 3], address: &TreeAddress) -> [usize; 3] {
        let mut tri = macro_tri;
        for level in 0..address.depth {
            let m = self.midpoint(tri[1], tri[2]);
            tri = bisect(tri, m)[address.choice(level) as usize];
        }
        tri
    }
}
