//! Plain-text mesh dump/load:
//!
//! ```text
//! DOMAIN unit_square        (optional)
//! VERTICES k
//! x y
//! ...
//! TRIANGLES m
//! i j k
//! ...
//! ```
//!
//! A loaded mesh becomes the macro mesh of a new hierarchy; each triangle is
//! relabelled so that its longest edge is the refinement edge.

use std::fmt::Write as _;

use super::{DomainTag, MacroMesh, Mesh};
use crate::geometry::{norm, signed_area, sub};
use crate::{Error, Result};

pub fn dump_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let tag = match mesh.domain() {
        DomainTag::UnitSquare => "unit_square",
        DomainTag::LShape => "l_shape",
    };
    writeln!(out, "DOMAIN {tag}").unwrap();
    writeln!(out, "VERTICES {}", mesh.vertices().len()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
    }
    writeln!(out, "TRIANGLES {}", mesh.num_triangles()).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::MeshFormat(msg.into())
}

pub fn load_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut header = lines.next().ok_or_else(|| bad("empty input"))?;
    let mut domain = None;
    if let Some(tag) = header.strip_prefix("DOMAIN") {
        domain = Some(match tag.trim() {
            "unit_square" => DomainTag::UnitSquare,
            "l_shape" => DomainTag::LShape,
            other => return Err(bad(format!("unknown domain {other}"))),
        });
        header = lines.next().ok_or_else(|| bad("missing VERTICES"))?;
    }
    let count = |header: &str, key: &str| -> Result<usize> {
        header
            .strip_prefix(key)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(format!("expected '{key} <count>', got '{header}'")))
    };
    let nv = count(header, "VERTICES")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| bad("truncated vertex list"))?;
        let xy: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(format!("bad coordinate in '{line}'"))))
            .collect::<Result<_>>()?;
        if xy.len() != 2 {
            return Err(bad(format!("expected two coordinates, got '{line}'")));
        }
        vertices.push([xy[0], xy[1]]);
    }
    let nt = count(lines.next().ok_or_else(|| bad("missing TRIANGLES"))?, "TRIANGLES")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines.next().ok_or_else(|| bad("truncated triangle list"))?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(format!("bad index in '{line}'"))))
            .collect::<Result<_>>()?;
        if ids.len() != 3 || ids.iter().any(|&i| i >= nv) {
            return Err(bad(format!("invalid triangle '{line}'")));
        }
        let mut tri = [ids[0], ids[1], ids[2]];
        let [a, b, c] = tri.map(|v| vertices[v]);
        let area = signed_area(a, b, c);
        if area == 0.0 {
            return Err(bad(format!("degenerate triangle '{line}'")));
        }
        if area < 0.0 {
            tri.swap(1, 2);
        }
        // Rotate so that the vertex opposite the longest edge comes first.
        let opposite_len = |i: usize| norm(sub(vertices[tri[(i + 1) % 3]], vertices[tri[(i + 2) % 3]]));
        let first = (0..3)
            .max_by(|&i, &j| opposite_len(i).partial_cmp(&opposite_len(j)).unwrap())
            .unwrap();
        tri.rotate_left(first);
        triangles.push(tri);
    }
    let domain = domain.unwrap_or(if vertices.iter().any(|v| v[0] < 0.0 || v[1] < 0.0) {
        DomainTag::LShape
    } else {
        DomainTag::UnitSquare
    });
    Ok(Mesh::from_macro(MacroMesh {
        vertices,
        triangles,
        domain,
    }))
}
