//! Conforming simplicial meshes of the unit square and the L-shaped domain.
//!
//! Meshes are immutable. Every mesh carries a handle to the macro mesh it was
//! refined from together with the forest address of each triangle, which is
//! all that is needed for refinement, ancestry queries and coarsest common
//! refinements.

mod forest;
mod io;
mod structured;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use forest::{TreeAddress, MAX_DEPTH};
pub use io::{dump_mesh, load_mesh};
pub use structured::build_structured_mesh;

use crate::geometry::{norm, signed_area, sub, Point};
use crate::{Error, Result};
use forest::{bisect, VertexRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    UnitSquare,
    LShape,
}

impl DomainTag {
    /// Closed-domain membership test with absolute tolerance `tol`.
    pub fn contains(&self, x: Point, tol: f64) -> bool {
        match self {
            DomainTag::UnitSquare => {
                x[0] >= -tol && x[0] <= 1.0 + tol && x[1] >= -tol && x[1] <= 1.0 + tol
            }
            DomainTag::LShape => {
                let in_box = x[0].abs() <= 1.0 + tol && x[1].abs() <= 1.0 + tol;
                let in_cut = x[0] > tol && x[1] < -tol;
                in_box && !in_cut
            }
        }
    }

    /// True if `x` lies on the boundary of the domain (within `tol`).
    pub fn on_boundary(&self, x: Point, tol: f64) -> bool {
        if !self.contains(x, tol) {
            return false;
        }
        match self {
            DomainTag::UnitSquare => {
                x[0].abs() <= tol
                    || (x[0] - 1.0).abs() <= tol
                    || x[1].abs() <= tol
                    || (x[1] - 1.0).abs() <= tol
            }
            DomainTag::LShape => {
                let outer = (x[0].abs() - 1.0).abs() <= tol || (x[1].abs() - 1.0).abs() <= tol;
                let cut_x = x[1].abs() <= tol && x[0] >= -tol;
                let cut_y = x[0].abs() <= tol && x[1] <= tol;
                outer || cut_x || cut_y
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            DomainTag::UnitSquare => 1.0,
            DomainTag::LShape => 3.0,
        }
    }
}

/// Coarsest mesh of a hierarchy; labelled so that the first vertex of each
/// triangle is opposite its refinement edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub domain: DomainTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceRecord {
    pub endpoints: [usize; 2],
    /// One (boundary) or two (interior) adjacent triangles, lowest index first.
    pub adjacent: [usize; 2],
    pub boundary: bool,
    /// Unit normal pointing out of `adjacent[0]`.
    pub normal: Point,
    /// Mean of adjacent diameters on interior faces, the diameter on boundary faces.
    pub h_face: f64,
    pub length: f64,
}

impl FaceRecord {
    pub fn adjacent_triangles(&self) -> &[usize] {
        if self.boundary {
            &self.adjacent[..1]
        } else {
            &self.adjacent[..]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    macro_mesh: Arc<MacroMesh>,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    addresses: Vec<TreeAddress>,
    faces: Vec<FaceRecord>,
    element_faces: Vec<[usize; 3]>,
    diameters: Vec<f64>,
    areas: Vec<f64>,
    level: usize,
}

impl PartialEq for Mesh {
    /// Meshes are equal when they cover the same leaves of the same hierarchy.
    fn eq(&self, other: &Self) -> bool {
        self.same_hierarchy(other) && self.addresses == other.addresses
    }
}

impl Mesh {
    pub(crate) fn from_macro(macro_mesh: MacroMesh) -> Self {
        let n = macro_mesh.triangles.len();
        let leaves = (0..n).map(TreeAddress::root).collect();
        Mesh::from_leaves(Arc::new(macro_mesh), leaves, 0)
    }

    /// Build a mesh from a depth-first sorted, disjoint set of leaf addresses.
    fn from_leaves(macro_mesh: Arc<MacroMesh>, leaves: Vec<TreeAddress>, level: usize) -> Self {
        let mut registry = VertexRegistry::new(macro_mesh.vertices.clone());
        let raw: Vec<[usize; 3]> = leaves
            .iter()
            .map(|a| registry.generate(macro_mesh.triangles[a.macro_index as usize], a))
            .collect();
        Mesh::assemble(macro_mesh, registry, raw, leaves, level)
    }

    fn assemble(
        macro_mesh: Arc<MacroMesh>,
        registry: VertexRegistry,
        raw: Vec<[usize; 3]>,
        addresses: Vec<TreeAddress>,
        level: usize,
    ) -> Self {
        // Compact vertices: macro vertices keep their ids, new ones are numbered by first use.
        let n_macro = macro_mesh.vertices.len();
        let mut remap: Vec<usize> = vec![usize::MAX; registry.coords.len()];
        let mut vertices: Vec<Point> = macro_mesh.vertices.clone();
        for (i, r) in remap.iter_mut().enumerate().take(n_macro) {
            *r = i;
        }
        let triangles: Vec<[usize; 3]> = raw
            .iter()
            .map(|tri| {
                tri.map(|v| {
                    if remap[v] == usize::MAX {
                        remap[v] = vertices.len();
                        vertices.push(registry.coords[v]);
                    }
                    remap[v]
                })
            })
            .collect();

        let areas: Vec<f64> = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .collect();
        let diameters: Vec<f64> = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| vertices[v]);
                norm(sub(a, b)).max(norm(sub(b, c))).max(norm(sub(c, a)))
            })
            .collect();

        let mut faces: Vec<FaceRecord> = Vec::new();
        let mut element_faces = vec![[usize::MAX; 3]; triangles.len()];
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for local in 0..3 {
                let a = tri[(local + 1) % 3];
                let b = tri[(local + 2) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        face.adjacent[1] = t;
                        face.boundary = false;
                        element_faces[t][local] = f;
                    }
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let e = sub(pb, pa);
                        let length = norm(e);
                        // Counterclockwise triangle: the outward normal is the edge rotated clockwise.
                        let normal = [e[1] / length, -e[0] / length];
                        lookup.insert(key, faces.len());
                        element_faces[t][local] = faces.len();
                        faces.push(FaceRecord {
                            endpoints: [a, b],
                            adjacent: [t, usize::MAX],
                            boundary: true,
                            normal,
                            h_face: 0.0,
                            length,
                        });
                    }
                }
            }
        }
        for face in faces.iter_mut() {
            face.h_face = if face.boundary {
                diameters[face.adjacent[0]]
            } else {
                0.5 * (diameters[face.adjacent[0]] + diameters[face.adjacent[1]])
            };
        }

        Mesh {
            macro_mesh,
            vertices,
            triangles,
            addresses,
            faces,
            element_faces,
            diameters,
            areas,
            level,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Vertex triples, counterclockwise, newest vertex first.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn faces(&self) -> &[FaceRecord] {
        &self.faces
    }

    /// Face indices of the three local edges; local edge `i` is opposite vertex `i`.
    pub fn element_faces(&self, t: usize) -> [usize; 3] {
        self.element_faces[t]
    }

    pub fn address(&self, t: usize) -> TreeAddress {
        self.addresses[t]
    }

    pub fn addresses(&self) -> &[TreeAddress] {
        &self.addresses
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn domain(&self) -> DomainTag {
        self.macro_mesh.domain
    }

    pub fn macro_mesh(&self) -> &Arc<MacroMesh> {
        &self.macro_mesh
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    /// μ(T) = max over elements of diameter / inradius.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                let perimeter = norm(sub(a, b)) + norm(sub(b, c)) + norm(sub(c, a));
                let inradius = 2.0 * self.areas[t] / perimeter;
                self.diameters[t] / inradius
            })
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// The skeleton: all faces with boundary flags, normals and face mesh sizes.
    pub fn skeleton(&self) -> &[FaceRecord] {
        &self.faces
    }

    pub fn num_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.boundary).count()
    }

    /// Check positivity, boundary placement of one-sided faces and conformity.
    pub fn is_conforming(&self) -> bool {
        let domain = self.domain();
        self.areas.iter().all(|&a| a > 0.0)
            && self.faces.iter().all(|f| {
                if f.boundary {
                    let [a, b] = f.endpoints.map(|v| self.vertices[v]);
                    let mid = crate::geometry::midpoint(a, b);
                    domain.on_boundary(a, 1e-12) && domain.on_boundary(b, 1e-12) && domain.on_boundary(mid, 1e-12)
                } else {
                    f.adjacent[1] != usize::MAX
                }
            })
    }

    /// True if both meshes descend from the same macro mesh.
    pub fn same_hierarchy(&self, other: &Mesh) -> bool {
        Arc::ptr_eq(&self.macro_mesh, &other.macro_mesh) || *self.macro_mesh == *other.macro_mesh
    }

    /// Index of the triangle of `coarser` containing triangle `t` of `self`,
    /// found through the forest addresses.
    pub fn ancestor_in(&self, coarser: &Mesh, t: usize) -> Option<usize> {
        if !self.same_hierarchy(coarser) {
            return None;
        }
        let target = self.addresses[t];
        // Leaves are sorted depth-first; the ancestor is the last address <= target.
        let idx = match coarser.addresses.binary_search(&target) {
            Ok(i) => i,
            Err(0) => return None,
            Err(i) => i - 1,
        };
        coarser.addresses[idx].is_ancestor_or_self(&target).then_some(idx)
    }

    /// True if every triangle of `self` lies inside a triangle of `coarser`.
    pub fn refines(&self, coarser: &Mesh) -> bool {
        (0..self.num_triangles()).all(|t| self.ancestor_in(coarser, t).is_some())
    }

    /// Lowest-index triangle containing `x`, if any.
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.num_triangles()).find(|&t| {
            let [a, b, c] = self.corners(t);
            let l = crate::geometry::barycentric(x, a, b, c);
            l.iter().all(|&li| li >= -1e-12)
        })
    }

    /// Refine the marked triangles into four children each (two nested
    /// bisections through the edge midpoints) and close the result with
    /// bisections of neighbouring triangles until no hanging nodes remain.
    pub fn refine_red(&self, marked: &[usize]) -> Mesh {
        if marked.is_empty() {
            return self.clone();
        }
        let mut is_marked = vec![false; self.num_triangles()];
        for &t in marked {
            is_marked[t] = true;
        }
        let mut registry = VertexRegistry::new(self.macro_mesh.vertices.clone());
        let mut leaves: Vec<(TreeAddress, [usize; 3])> = Vec::with_capacity(self.num_triangles() + 4 * marked.len());
        for (t, address) in self.addresses.iter().enumerate() {
            let tri = registry.generate(self.macro_mesh.triangles[address.macro_index as usize], address);
            if is_marked[t] {
                let m = registry.midpoint(tri[1], tri[2]);
                for (c, child) in bisect(tri, m).into_iter().enumerate() {
                    let ca = address.child(c as u8);
                    let mc = registry.midpoint(child[1], child[2]);
                    for (g, grandchild) in bisect(child, mc).into_iter().enumerate() {
                        leaves.push((ca.child(g as u8), grandchild));
                    }
                }
            } else {
                leaves.push((*address, tri));
            }
        }
        // Closure: bisect any leaf that has a bisected edge until none remain.
        loop {
            let mut changed = false;
            let mut next = Vec::with_capacity(leaves.len());
            for (address, tri) in leaves {
                let hanging = (0..3).any(|i| registry.is_bisected(tri[(i + 1) % 3], tri[(i + 2) % 3]));
                if hanging {
                    changed = true;
                    let m = registry.midpoint(tri[1], tri[2]);
                    for (c, child) in bisect(tri, m).into_iter().enumerate() {
                        next.push((address.child(c as u8), child));
                    }
                } else {
                    next.push((address, tri));
                }
            }
            leaves = next;
            if !changed {
                break;
            }
        }
        leaves.sort_by_key(|(a, _)| *a);
        let (addresses, raw): (Vec<_>, Vec<_>) = leaves.into_iter().unzip();
        Mesh::assemble(self.macro_mesh.clone(), registry, raw, addresses, self.level + 1)
    }

    /// Uniform refinement: every triangle split into four.
    pub fn refine_uniform(&self) -> Mesh {
        let all: Vec<usize> = (0..self.num_triangles()).collect();
        self.refine_red(&all)
    }
}

/// The coarsest mesh of the common forest refining both `a` and `b`.
pub fn common_refinement(a: &Mesh, b: &Mesh) -> Result<Mesh> {
    if !a.same_hierarchy(b) {
        return Err(Error::IncompatibleHierarchy);
    }
    if a.addresses == b.addresses {
        return Ok(b.clone());
    }
    let mut all: Vec<TreeAddress> = a.addresses.iter().chain(b.addresses.iter()).copied().collect();
    all.sort();
    all.dedup();
    let leaves: Vec<TreeAddress> = all
        .iter()
        .enumerate()
        .filter(|(i, addr)| all.get(i + 1).is_none_or(|next| !addr.is_ancestor_or_self(next)))
        .map(|(_, addr)| *addr)
        .collect();
    if leaves == b.addresses {
        return Ok(b.clone());
    }
    if leaves == a.addresses {
        return Ok(a.clone());
    }
    Ok(Mesh::from_leaves(a.macro_mesh.clone(), leaves, a.level.max(b.level)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::barycentric;

    fn square(n: usize) -> Mesh {
        build_structured_mesh(DomainTag::UnitSquare, n)
    }

    fn inside(x: Point, tri: [Point; 3]) -> bool {
        barycentric(x, tri[0], tri[1], tri[2]).iter().all(|&l| l >= -1e-12)
    }

    #[test]
    fn single_cell_counts() {
        let m = square(1);
        assert_eq!(m.num_triangles(), 4);
        assert_eq!(m.vertices().len(), 5);
        assert_eq!(m.faces().len(), 8);
        assert_eq!(m.faces().iter().filter(|f| f.boundary).count(), 4);
        assert_eq!(m.num_interior_faces(), 4);
    }

    #[test]
    fn two_by_two_interior_faces() {
        let m = square(2);
        assert_eq!(m.num_triangles(), 16);
        // Brute force: every unordered vertex pair of every triangle, deduplicated.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for t in m.triangles() {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        let total = edges.len();
        edges.sort();
        edges.dedup();
        let interior = total - edges.len();
        assert_eq!(interior, 20);
        assert_eq!(m.num_interior_faces(), 20);
    }

    #[test]
    fn l_shape_single_subdivision() {
        let m = build_structured_mesh(DomainTag::LShape, 1);
        assert_eq!(m.num_triangles(), 12);
        assert!((m.total_area() - 3.0).abs() < 1e-14);
        assert!(m.is_conforming());
    }

    #[test]
    fn adjacency_count_identity() {
        for mesh in [square(3), build_structured_mesh(DomainTag::LShape, 2), square(2).refine_red(&[0, 5])] {
            let count: usize = mesh.faces().iter().map(|f| f.adjacent_triangles().len()).sum();
            assert_eq!(count, 3 * mesh.num_triangles());
        }
    }

    #[test]
    fn uniform_interior_face_sizes_equal_diameter() {
        let m = square(2);
        for f in m.faces() {
            assert!((f.h_face - 0.5).abs() < 1e-15);
            assert!((norm(f.normal) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normals_point_outward() {
        let m = build_structured_mesh(DomainTag::LShape, 2).refine_red(&[3]);
        for f in m.faces() {
            let [a, b] = f.endpoints.map(|v| m.vertices()[v]);
            let mid = crate::geometry::midpoint(a, b);
            let c = m.centroid(f.adjacent[0]);
            assert!(crate::geometry::dot(sub(mid, c), f.normal) > 0.0);
        }
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = square(2);
        let r = m.refine_red(&[]);
        assert_eq!(r, m);
        assert_eq!(r.level(), m.level());
    }

    #[test]
    fn refine_all_gives_nested_children() {
        let m = square(1);
        let r = m.refine_uniform();
        assert_eq!(r.num_triangles(), 16);
        assert!(r.is_conforming());
        for t in 0..r.num_triangles() {
            let parent = r.ancestor_in(&m, t).unwrap();
            assert!(inside(r.centroid(t), m.corners(parent)));
        }
        assert!((r.shape_regularity() - m.shape_regularity()).abs() < 1e-12);
    }

    #[test]
    fn single_marked_triangle_is_closed() {
        let m = square(1);
        let r = m.refine_red(&[0]);
        assert!(r.is_conforming());
        let children: Vec<usize> = (0..r.num_triangles()).filter(|&t| r.ancestor_in(&m, t) == Some(0)).collect();
        assert_eq!(children.len(), 4);
        for &c in &children {
            assert!((r.area(c) - m.area(0) / 4.0).abs() < 1e-15);
        }
        // Interior faces have exactly two neighbours.
        for f in r.faces() {
            if !f.boundary {
                assert_ne!(f.adjacent[0], f.adjacent[1]);
            }
        }
    }

    #[test]
    fn children_conserve_area() {
        let m = build_structured_mesh(DomainTag::LShape, 2);
        let r = m.refine_red(&[0, 7, 20]);
        let mut sums = vec![0.0; m.num_triangles()];
        for t in 0..r.num_triangles() {
            sums[r.ancestor_in(&m, t).unwrap()] += r.area(t);
        }
        for (t, s) in sums.iter().enumerate() {
            assert!((s - m.area(t)).abs() <= 1e-12 * m.area(t));
        }
    }

    #[test]
    fn common_refinement_cases() {
        let m = square(1);
        assert_eq!(common_refinement(&m, &m).unwrap(), m);
        let fine = m.refine_uniform();
        assert_eq!(common_refinement(&m, &fine).unwrap(), fine);

        let a = m.refine_red(&[0]);
        let b = m.refine_red(&[1]);
        let c = common_refinement(&a, &b).unwrap();
        assert!(c.is_conforming());
        assert!(c.refines(&a) && c.refines(&b));
        assert_eq!(c, common_refinement(&b, &a).unwrap());
        // Both macro triangles 0 and 1 are split into at least four pieces.
        for parent in [0, 1] {
            let k = (0..c.num_triangles()).filter(|&t| c.ancestor_in(&m, t) == Some(parent)).count();
            assert!(k >= 4);
        }
        // Every triangle of the overlay is a triangle of a or b (coarsest property).
        for t in 0..c.num_triangles() {
            let addr = c.address(t);
            assert!(a.addresses().contains(&addr) || b.addresses().contains(&addr));
        }
    }

    #[test]
    fn different_hierarchies_are_rejected() {
        let a = square(1);
        let b = square(2);
        assert!(matches!(common_refinement(&a, &b), Err(Error::IncompatibleHierarchy)));
    }
}
