use std::collections::HashMap;

use super::{DomainTag, MacroMesh, Mesh};

/// Crisscross triangulation: every grid cell of width `1/n` is split into four
/// triangles by its diagonals. The cell centre is the newest vertex of each
/// triangle, so refinement edges are the cell sides.
pub fn build_structured_mesh(domain: DomainTag, n: usize) -> Mesh {
    assert!(n >= 1, "need at least one subdivision per unit length");
    let h = 1.0 / n as f64;
    let (origin, cells_per_side) = match domain {
        DomainTag::UnitSquare => (0.0, n),
        DomainTag::LShape => (-1.0, 2 * n),
    };
    let coord = |i: usize| origin + i as f64 * h;

    let mut vertices = Vec::new();
    let mut corner_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut corner = |i: usize, j: usize, vertices: &mut Vec<[f64; 2]>| {
        *corner_ids.entry((i, j)).or_insert_with(|| {
            vertices.push([coord(i), coord(j)]);
            vertices.len() - 1
        })
    };

    let mut triangles = Vec::new();
    for j in 0..cells_per_side {
        for i in 0..cells_per_side {
            if domain == DomainTag::LShape && i >= n && j < n {
                // cell inside [0, 1) x (-1, 0]
                continue;
            }
            let c00 = corner(i, j, &mut vertices);
            let c10 = corner(i + 1, j, &mut vertices);
            let c11 = corner(i + 1, j + 1, &mut vertices);
            let c01 = corner(i, j + 1, &mut vertices);
            vertices.push([coord(i) + 0.5 * h, coord(j) + 0.5 * h]);
            let m = vertices.len() - 1;
            triangles.push([m, c00, c10]);
            triangles.push([m, c10, c11]);
            triangles.push([m, c11, c01]);
            triangles.push([m, c01, c00]);
        }
    }
    Mesh::from_macro(MacroMesh {
        vertices,
        triangles,
        domain,
    })
}
