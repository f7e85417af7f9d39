//! Tetrahedral biventricular mesh and geometric operators.

pub mod aha;
pub mod coords;
pub mod io;
pub mod synthetic;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::vec3::Vec3;

pub use aha::{aha_segment, AhaSegmentId};
pub use coords::{rt_distance, rt_mean, wrap_rt, CobivecoCoord, Side};
pub use synthetic::{generate_synthetic_biventricle, SyntheticParams};

/// Per-node surface membership flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SurfaceTags(u8);

impl SurfaceTags {
    pub const NONE: SurfaceTags = SurfaceTags(0);
    pub const EPICARDIUM: SurfaceTags = SurfaceTags(1);
    pub const LV_ENDOCARDIUM: SurfaceTags = SurfaceTags(2);
    pub const RV_ENDOCARDIUM: SurfaceTags = SurfaceTags(4);
    pub const BASE: SurfaceTags = SurfaceTags(8);

    const NAMES: [(SurfaceTags, &'static str); 4] = [
        (Self::EPICARDIUM, "epi"),
        (Self::LV_ENDOCARDIUM, "lvendo"),
        (Self::RV_ENDOCARDIUM, "rvendo"),
        (Self::BASE, "base"),
    ];

    pub fn contains(self, other: SurfaceTags) -> bool {
        other.0 != 0 && self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: SurfaceTags) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_endocardial(self) -> bool {
        self.contains(Self::LV_ENDOCARDIUM) || self.contains(Self::RV_ENDOCARDIUM)
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "none" {
            return Some(Self::NONE);
        }
        let mut tags = Self::NONE;
        for part in s.split('+') {
            let (t, _) = Self::NAMES.iter().find(|(_, n)| *n == part)?;
            tags.insert(*t);
        }
        Some(tags)
    }
}

impl fmt::Display for SurfaceTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<&str> = Self::NAMES
            .iter()
            .filter(|(t, _)| self.contains(*t))
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&names.join("+"))
    }
}

/// Fast endocardial conduction layer membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EndoLayer {
    #[default]
    None,
    Sparse,
    Dense,
}

impl EndoLayer {
    pub fn as_str(self) -> &'static str {
        match self {
            EndoLayer::None => "none",
            EndoLayer::Sparse => "sparse",
            EndoLayer::Dense => "dense",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(EndoLayer::None),
            "sparse" => Some(EndoLayer::Sparse),
            "dense" => Some(EndoLayer::Dense),
            _ => None,
        }
    }
}

/// Compressed adjacency lists (`offsets.len() == n + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    items: Vec<usize>,
}

impl Adjacency {
    fn from_lists(lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for l in lists {
            items.extend(l);
            offsets.push(items.len());
        }
        Adjacency { offsets, items }
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    pub nodes: Vec<Vec3<T>>,
    pub tets: Vec<[usize; 4]>,
    pub coords: Vec<CobivecoCoord<T>>,
    pub surface_tags: Vec<SurfaceTags>,
    pub endo_layer: Vec<EndoLayer>,
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh, flipping negatively oriented tets, and checks every invariant.
    pub fn new(
        nodes: Vec<Vec3<T>>,
        mut tets: Vec<[usize; 4]>,
        coords: Vec<CobivecoCoord<T>>,
        surface_tags: Vec<SurfaceTags>,
        endo_layer: Vec<EndoLayer>,
    ) -> Result<Self> {
        let n = nodes.len();
        for (i, t) in tets.iter().enumerate() {
            if let Some(&bad) = t.iter().find(|&&v| v >= n) {
                return Err(Error::Mesh(format!(
                    "tet {i} references node {bad} but there are {n} nodes"
                )));
            }
        }
        for t in tets.iter_mut() {
            if signed_volume(&nodes, t) < T::zero() {
                t.swap(2, 3);
            }
        }
        let mesh = Mesh { nodes, tets, coords, surface_tags, endo_layer };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (what, len) in [
            ("coords", self.coords.len()),
            ("surface tags", self.surface_tags.len()),
            ("endo layer flags", self.endo_layer.len()),
        ] {
            if len != n {
                return Err(Error::Mesh(format!("{what}: {len} entries for {n} nodes")));
            }
        }
        for (i, p) in self.nodes.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::Mesh(format!("node {i} has a non-finite position")));
            }
        }
        for (i, c) in self.coords.iter().enumerate() {
            c.validate()
                .map_err(|e| Error::CoordinateRange(format!("node {i}: {e}")))?;
        }
        let mut used = vec![false; n];
        for (i, t) in self.tets.iter().enumerate() {
            for &v in t {
                if v >= n {
                    return Err(Error::Mesh(format!("tet {i} references node {v} (of {n})")));
                }
                used[v] = true;
            }
            if !(signed_volume(&self.nodes, t) > T::zero()) {
                return Err(Error::Mesh(format!("tet {i} has non-positive volume")));
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::Mesh(format!("node {i} is not referenced by any tet")));
        }
        self.check_closed_boundary()
    }

    fn check_closed_boundary(&self) -> Result<()> {
        let mut faces: HashMap<[usize; 3], u32> = HashMap::new();
        for t in &self.tets {
            for f in tet_faces(t) {
                *faces.entry(sorted3(f)).or_insert(0) += 1;
            }
        }
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for (f, &c) in &faces {
            if c > 2 {
                return Err(Error::Mesh(format!("face {f:?} shared by {c} tets")));
            }
            if c == 1 {
                for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
                    *edge_count.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
        if let Some((e, c)) = edge_count.iter().find(|(_, &c)| c % 2 == 1) {
            return Err(Error::Mesh(format!(
                "boundary edge {e:?} bounds {c} boundary faces; surface is not closed"
            )));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_volume(&self, i: usize) -> T {
        signed_volume(&self.nodes, &self.tets[i])
    }

    pub fn total_volume(&self) -> T {
        (0..self.tets.len()).map(|i| self.tet_volume(i)).sum()
    }

    pub fn centroid(&self, i: usize) -> Vec3<T> {
        let t = &self.tets[i];
        (self.nodes[t[0]] + self.nodes[t[1]] + self.nodes[t[2]] + self.nodes[t[3]]) * T::c(0.25)
    }

    /// Gradients of the four barycentric basis functions of tet `i`.
    pub fn shape_gradients(&self, i: usize) -> [Vec3<T>; 4] {
        let t = &self.tets[i];
        let p0 = self.nodes[t[0]];
        let e1 = self.nodes[t[1]] - p0;
        let e2 = self.nodes[t[2]] - p0;
        let e3 = self.nodes[t[3]] - p0;
        let det = e1.dot(&e2.cross(&e3));
        let g1 = e2.cross(&e3) / det;
        let g2 = e3.cross(&e1) / det;
        let g3 = e1.cross(&e2) / det;
        let g0 = -(g1 + g2 + g3);
        [g0, g1, g2, g3]
    }

    /// Exact gradient of the piecewise-linear interpolant of `f`, per tet.
    pub fn element_gradient(&self, f: &[T]) -> Result<Vec<Vec3<T>>> {
        if f.len() != self.nodes.len() {
            return Err(Error::LengthMismatch { expected: self.nodes.len(), got: f.len() });
        }
        Ok((0..self.tets.len())
            .map(|i| {
                let g = self.shape_gradients(i);
                let t = &self.tets[i];
                let f0 = f[t[0]];
                // differences keep constant fields exactly zero
                g[1] * (f[t[1]] - f0) + g[2] * (f[t[2]] - f0) + g[3] * (f[t[3]] - f0)
            })
            .collect())
    }

    /// Coordinate at the centroid: arithmetic mean of `tm`/`ab`, circular mean
    /// of `rt`, majority side (ties to LV).
    pub fn element_coord(&self, i: usize) -> CobivecoCoord<T> {
        let t = &self.tets[i];
        let q = T::c(0.25);
        let cs: Vec<_> = t.iter().map(|&v| self.coords[v]).collect();
        let rv = cs.iter().filter(|c| c.side == Side::Rv).count();
        CobivecoCoord {
            tm: cs.iter().map(|c| c.tm).sum::<T>() * q,
            ab: cs.iter().map(|c| c.ab).sum::<T>() * q,
            rt: rt_mean(cs.iter().map(|c| c.rt)),
            side: if rv > 2 { Side::Rv } else { Side::Lv },
        }
    }

    /// Node → incident tets.
    pub fn node_tets(&self) -> Adjacency {
        let mut lists = vec![Vec::new(); self.nodes.len()];
        for (i, t) in self.tets.iter().enumerate() {
            for &v in t {
                lists[v].push(i);
            }
        }
        Adjacency::from_lists(lists)
    }

    /// Node → neighbouring nodes (sorted, via tet edges).
    pub fn node_neighbors(&self) -> Adjacency {
        let mut lists = vec![Vec::new(); self.nodes.len()];
        for t in &self.tets {
            for a in 0..4 {
                for b in 0..4 {
                    if a != b {
                        lists[t[a]].push(t[b]);
                    }
                }
            }
        }
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        Adjacency::from_lists(lists)
    }

    /// Unique edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .tets
            .iter()
            .flat_map(|t| TET_EDGES.iter().map(move |&(a, b)| ordered(t[a], t[b])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn mean_edge_length(&self) -> T {
        let e = self.edges();
        let sum: T = e.iter().map(|&(a, b)| (self.nodes[a] - self.nodes[b]).norm()).sum();
        sum / T::c(e.len().max(1) as f64)
    }

    /// Boundary triangles, each as the three node ids of a face that belongs to one tet.
    pub fn boundary_faces(&self) -> Vec<[usize; 3]> {
        let mut faces: HashMap<[usize; 3], (u32, [usize; 3])> = HashMap::new();
        for t in &self.tets {
            for f in tet_faces(t) {
                faces.entry(sorted3(f)).or_insert((0, f)).0 += 1;
            }
        }
        let mut out: Vec<[usize; 3]> =
            faces.into_values().filter(|(c, _)| *c == 1).map(|(_, f)| f).collect();
        out.sort_unstable();
        out
    }

    /// Relabels nodes: new id of old node `i` is `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.nodes.len();
        if perm.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: perm.len() });
        }
        let mut inv = vec![usize::MAX; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n || inv[new] != usize::MAX {
                return Err(Error::Mesh("node permutation is not a bijection".into()));
            }
            inv[new] = old;
        }
        Ok(Mesh {
            nodes: inv.iter().map(|&o| self.nodes[o]).collect(),
            tets: self.tets.iter().map(|t| t.map(|v| perm[v])).collect(),
            coords: inv.iter().map(|&o| self.coords[o]).collect(),
            surface_tags: inv.iter().map(|&o| self.surface_tags[o]).collect(),
            endo_layer: inv.iter().map(|&o| self.endo_layer[o]).collect(),
        })
    }
}

pub(crate) const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub(crate) fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// Faces oriented with outward normals for a positively oriented tet.
fn tet_faces(t: &[usize; 4]) -> [[usize; 3]; 4] {
    [
        [t[1], t[2], t[3]],
        [t[0], t[3], t[2]],
        [t[0], t[1], t[3]],
        [t[0], t[2], t[1]],
    ]
}

pub(crate) fn signed_volume<T: Real>(nodes: &[Vec3<T>], t: &[usize; 4]) -> T {
    let p0 = nodes[t[0]];
    let e1 = nodes[t[1]] - p0;
    let e2 = nodes[t[2]] - p0;
    let e3 = nodes[t[3]] - p0;
    e1.dot(&e2.cross(&e3)) / T::c(6.0)
}
