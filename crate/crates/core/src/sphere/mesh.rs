//! Antipodally reduced icosphere meshes.

use std::collections::HashMap;

use crate::linalg::{canonical_sign, Vec3};

/// Unit vertices covering one hemisphere (each antipodal pair once) with
/// adjacency lists inherited from the full icosphere.
#[derive(Debug, Clone)]
pub struct SphereMesh {
    vertices: Vec<Vec3>,
    neighbors: Vec<Vec<usize>>,
}

fn icosphere(levels: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vec3::new(v[0], v[1], v[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push((vertices[a] + vertices[b]).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (vertices, faces)
}

impl SphereMesh {
    /// Icosahedron subdivided `levels` times, then antipodally reduced.
    /// Three levels give 321 vertices (642 before reduction).
    pub fn icosphere(levels: usize) -> Self {
        let (full, faces) = icosphere(levels);
        // Subdivision commutes with negation exactly, so antipodes are exact
        // negatives and canonical signs identify each pair.
        let key = |v: &Vec3| {
            // Adding 0.0 folds -0.0 into +0.0.
            let c = canonical_sign(*v);
            ((c.x + 0.0).to_bits(), (c.y + 0.0).to_bits(), (c.z + 0.0).to_bits())
        };
        let mut reduced: HashMap<(u64, u64, u64), usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut rep = vec![0usize; full.len()];
        for (i, v) in full.iter().enumerate() {
            let k = key(v);
            rep[i] = *reduced.entry(k).or_insert_with(|| {
                vertices.push(canonical_sign(*v));
                vertices.len() - 1
            });
        }
        let mut neighbors = vec![Vec::new(); vertices.len()];
        for f in &faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let (ra, rb) = (rep[a], rep[b]);
                if ra != rb {
                    neighbors[ra].push(rb);
                    neighbors[rb].push(ra);
                }
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        Self { vertices, neighbors }
    }

    /// Smallest reduced icosphere with at least `min_vertices` vertices.
    pub fn with_at_least(min_vertices: usize) -> Self {
        let mut level = 0;
        loop {
            if 5 * 4usize.pow(level as u32) + 1 >= min_vertices {
                return Self::icosphere(level);
            }
            level += 1;
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

impl Default for SphereMesh {
    fn default() -> Self {
        Self::icosphere(3)
    }
}
