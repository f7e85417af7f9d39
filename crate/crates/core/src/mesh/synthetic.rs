//! Synthetic two-cavity biventricular geometry.
//!
//! The LV is a truncated prolate ellipsoidal shell around the z axis (apex at
//! negative z). The RV is a thinner ellipsoidal shell offset towards -x that
//! wraps the septal side of the LV; its cavity is the part of the RV cavity
//! ellipsoid lying outside the LV. Both are cut by the plane `z = base_height`.
//! Anterior is +y, the LV free wall faces +x.
//!
//! The solid is voxelised on a grid of spacing `resolution` (a voxel is kept
//! when its centre lies in the myocardium) and each voxel is split into six
//! tets sharing the main diagonal, which makes the tet mesh conforming.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::coords::{wrap_rt, CobivecoCoord, Side};
use crate::mesh::{EndoLayer, Mesh, SurfaceTags};
use crate::num::Real;
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    /// Target edge length (grid spacing), cm.
    pub resolution: f64,
    pub lv_cavity_radius: f64,
    /// Semi-axis of the LV cavity along the long axis, cm.
    pub lv_cavity_length: f64,
    pub lv_wall: f64,
    pub lv_apex_wall: f64,
    /// RV cavity semi-axes (x, y, z), cm.
    pub rv_cavity_radii: [f64; 3],
    /// x position of the RV ellipsoid centre, cm.
    pub rv_offset: f64,
    pub rv_wall: f64,
    pub base_height: f64,
    /// Endocardial nodes with `ab` at or below this value belong to the dense layer.
    pub dense_layer_max_ab: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            resolution: 0.2,
            lv_cavity_radius: 1.6,
            lv_cavity_length: 3.3,
            lv_wall: 0.9,
            lv_apex_wall: 0.7,
            rv_cavity_radii: [2.6, 1.67, 3.0],
            rv_offset: -1.2,
            rv_wall: 0.5,
            base_height: 0.0,
            dense_layer_max_ab: 0.7,
        }
    }
}

/// Axis-aligned ellipsoid `Σ((p−c)/a)² ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid<T> {
    pub center: Vec3<T>,
    pub axes: Vec3<T>,
}

impl<T: Real> Ellipsoid<T> {
    pub fn level(&self, p: &Vec3<T>) -> T {
        (0..3)
            .map(|i| {
                let d = (p[i] - self.center[i]) / self.axes[i];
                d * d
            })
            .sum()
    }

    pub fn contains(&self, p: &Vec3<T>) -> bool {
        self.level(p) <= T::one()
    }

    /// First-order signed distance to the surface (negative inside).
    pub fn signed_distance(&self, p: &Vec3<T>) -> T {
        let q = self.level(p);
        let rho = q.sqrt();
        let grad_q = Vec3::new(
            (p[0] - self.center[0]) / (self.axes[0] * self.axes[0]),
            (p[1] - self.center[1]) / (self.axes[1] * self.axes[1]),
            (p[2] - self.center[2]) / (self.axes[2] * self.axes[2]),
        ) * T::c(2.0);
        let g = grad_q.norm();
        if rho <= T::epsilon() || g <= T::epsilon() {
            // at the centre: depth is the smallest semi-axis
            let amin = self.axes[0].min(self.axes[1]).min(self.axes[2]);
            return -amin;
        }
        (rho - T::one()) / (g / (T::c(2.0) * rho))
    }
}

/// The implicit solid described by [`SyntheticParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Biventricle<T> {
    pub lv_outer: Ellipsoid<T>,
    pub lv_cavity: Ellipsoid<T>,
    pub rv_outer: Ellipsoid<T>,
    pub rv_cavity: Ellipsoid<T>,
    pub base_height: T,
}

/// What lies at a point of space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    LvWall,
    RvWall,
    LvCavity,
    RvCavity,
    AboveBase,
    Outside,
}

impl<T: Real> Biventricle<T> {
    pub fn region(&self, p: &Vec3<T>) -> Region {
        if p.z() > self.base_height {
            return Region::AboveBase;
        }
        if self.lv_outer.contains(p) {
            if self.lv_cavity.contains(p) {
                Region::LvCavity
            } else {
                Region::LvWall
            }
        } else if self.rv_cavity.contains(p) {
            Region::RvCavity
        } else if self.rv_outer.contains(p) {
            Region::RvWall
        } else {
            Region::Outside
        }
    }

    pub fn is_myocardium(&self, p: &Vec3<T>) -> bool {
        matches!(self.region(p), Region::LvWall | Region::RvWall)
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("resolution", self.resolution),
            ("lv_cavity_radius", self.lv_cavity_radius),
            ("lv_cavity_length", self.lv_cavity_length),
            ("lv_wall", self.lv_wall),
            ("lv_apex_wall", self.lv_apex_wall),
            ("rv_cavity_radii[x]", self.rv_cavity_radii[0]),
            ("rv_cavity_radii[y]", self.rv_cavity_radii[1]),
            ("rv_cavity_radii[z]", self.rv_cavity_radii[2]),
            ("rv_wall", self.rv_wall),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter { name: "geometry", reason: format!("{name} = {v} must be positive") });
            }
        }
        let lv_outer = self.lv_cavity_radius + self.lv_wall;
        let lv_outer_len = self.lv_cavity_length + self.lv_apex_wall;
        if self.resolution > self.rv_wall.min(self.lv_wall) {
            return Err(Error::Parameter {
                name: "resolution",
                reason: format!("{} cm is coarser than the thinnest wall", self.resolution),
            });
        }
        if self.rv_offset - self.rv_cavity_radii[0] >= -lv_outer {
            return Err(Error::Parameter {
                name: "rv_offset",
                reason: "RV cavity does not protrude beyond the LV epicardium".into(),
            });
        }
        if self.rv_offset + self.rv_cavity_radii[0] + self.rv_wall >= lv_outer {
            return Err(Error::Parameter {
                name: "rv_offset",
                reason: "RV shell reaches past the LV free wall".into(),
            });
        }
        let half_len = 0.5 * lv_outer_len.min(self.rv_cavity_radii[2] + self.rv_wall);
        if !(self.base_height.abs() < half_len) {
            return Err(Error::Parameter {
                name: "base_height",
                reason: format!("{} cm must lie within ±{half_len} cm of the equator", self.base_height),
            });
        }
        if !(0.0..=1.0).contains(&self.dense_layer_max_ab) {
            return Err(Error::Parameter {
                name: "dense_layer_max_ab",
                reason: "must lie in [0, 1]".into(),
            });
        }
        Ok(())
    }

    pub fn solid<T: Real>(&self) -> Biventricle<T> {
        let c = T::c;
        let w = self.rv_wall;
        let rv = self.rv_cavity_radii;
        Biventricle {
            lv_outer: Ellipsoid {
                center: Vec3::zero(),
                axes: Vec3::new(
                    c(self.lv_cavity_radius + self.lv_wall),
                    c(self.lv_cavity_radius + self.lv_wall),
                    c(self.lv_cavity_length + self.lv_apex_wall),
                ),
            },
            lv_cavity: Ellipsoid {
                center: Vec3::zero(),
                axes: Vec3::new(c(self.lv_cavity_radius), c(self.lv_cavity_radius), c(self.lv_cavity_length)),
            },
            rv_outer: Ellipsoid {
                center: Vec3::new(c(self.rv_offset), T::zero(), T::zero()),
                axes: Vec3::new(c(rv[0] + w), c(rv[1] + w), c(rv[2] + w)),
            },
            rv_cavity: Ellipsoid {
                center: Vec3::new(c(self.rv_offset), T::zero(), T::zero()),
                axes: Vec3::new(c(rv[0]), c(rv[1]), c(rv[2])),
            },
            base_height: c(self.base_height),
        }
    }
}

/// Analytic coordinate assignment for the synthetic solid.
#[derive(Debug, Clone)]
pub struct CoordinateMap<T> {
    pub solid: Biventricle<T>,
    /// Lowest z of each chamber's tissue; `ab` is the height fraction above it.
    pub apex_z: [T; 2],
    /// Azimuth (about the LV axis) of the posterior LV/RV junction.
    pub lv_posterior_junction: T,
    /// Azimuth (about the RV axis) of the same junction.
    pub rv_posterior_junction: T,
}

impl<T: Real> CoordinateMap<T> {
    pub fn new(solid: Biventricle<T>, apex_z: [T; 2]) -> Result<Self> {
        let phi = posterior_junction_angle(&solid)?;
        let r = solid.lv_outer.axes[0];
        let (jx, jy) = (r * phi.cos(), r * phi.sin());
        let psi = jy.atan2(jx - solid.rv_cavity.center[0]);
        Ok(CoordinateMap { solid, apex_z, lv_posterior_junction: phi, rv_posterior_junction: psi })
    }

    pub fn apicobasal(&self, p: &Vec3<T>, side: Side) -> T {
        let z0 = self.apex_z[side as usize];
        let span = self.solid.base_height - z0;
        ((p.z() - z0) / span).max(T::zero()).min(T::one())
    }

    pub fn rotational(&self, p: &Vec3<T>, side: Side) -> T {
        let tau = T::c(std::f64::consts::TAU);
        let (phi, phi0) = match side {
            Side::Lv => (p.y().atan2(p.x()), self.lv_posterior_junction),
            Side::Rv => (p.y().atan2(p.x() - self.solid.rv_cavity.center[0]), self.rv_posterior_junction),
        };
        wrap_rt((phi - phi0) / tau)
    }
}

/// Angle in (π, 2π) on the LV epicardial circle at the base plane where the
/// RV epicardium meets it.
fn posterior_junction_angle<T: Real>(solid: &Biventricle<T>) -> Result<T> {
    let r = solid.lv_outer.axes[0];
    let z = solid.base_height.min(T::zero());
    let scale = (T::one() - (z / solid.lv_outer.axes[2]).powi(2)).max(T::zero()).sqrt();
    let inside = |phi: T| {
        let p = Vec3::new(r * scale * phi.cos(), r * scale * phi.sin(), z);
        solid.rv_outer.level(&p) <= T::one()
    };
    let (mut lo, mut hi) = (T::PI(), T::c(1.5) * T::PI());
    if !inside(lo) || inside(hi) {
        return Err(Error::Parameter {
            name: "rv_offset",
            reason: "RV epicardium does not meet the LV epicardium on the septal side".into(),
        });
    }
    for _ in 0..80 {
        let mid = (lo + hi) * T::c(0.5);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::c(0.5))
}

/// Kuhn split of the unit cube into six tets sharing the 000-111 diagonal.
/// Voxels are reflected by coordinate parity (see [`mirrored_tets`]).
const CUBE_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Kuhn tets of voxel `v`, reflected along every axis with odd index so the
/// split diagonal alternates between neighbours; faces stay conforming and the
/// edge directions are balanced over all octants.
fn mirrored_tets(v: [i64; 3]) -> [[usize; 4]; 6] {
    let mask = (v[0].rem_euclid(2) | (v[1].rem_euclid(2) << 1) | (v[2].rem_euclid(2) << 2)) as usize;
    CUBE_TETS.map(|t| t.map(|c| c ^ mask))
}

/// Corner `c` (bits x=1, y=2, z=4) of voxel `(i, j, k)`.
fn corner(v: [i64; 3], c: usize) -> [i64; 3] {
    [v[0] + (c & 1) as i64, v[1] + ((c >> 1) & 1) as i64, v[2] + ((c >> 2) & 1) as i64]
}

/// Axis-aligned block of `n` voxels of edge `h`, split as in the biventricle, with the corner at
/// the origin. Coordinates are placeholders (`tm` = 0.5, `ab` and `rt` follow z
/// and x); all boundary nodes are tagged epicardium.
pub fn voxel_block<T: Real>(n: [usize; 3], h: T) -> Result<Mesh<T>> {
    if n.iter().any(|&k| k == 0) || !(h > T::zero()) {
        return Err(Error::Parameter { name: "block", reason: "need positive size and spacing".into() });
    }
    let id = |g: [i64; 3]| (g[0] as usize) + (n[0] + 1) * ((g[1] as usize) + (n[1] + 1) * g[2] as usize);
    let mut nodes = Vec::new();
    let mut coords = Vec::new();
    let mut tags = Vec::new();
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                nodes.push(Vec3::new(T::c(i as f64) * h, T::c(j as f64) * h, T::c(k as f64) * h));
                let frac = |a: usize, b: usize| T::c(a as f64 / b as f64).quantize9();
                coords.push(CobivecoCoord { tm: T::c(0.5), ab: frac(k, n[2]), rt: frac(i, n[0] + 1), side: Side::Lv });
                let boundary = i == 0 || j == 0 || k == 0 || i == n[0] || j == n[1] || k == n[2];
                tags.push(if boundary { SurfaceTags::EPICARDIUM } else { SurfaceTags::NONE });
            }
        }
    }
    let mut tets = Vec::with_capacity(6 * n[0] * n[1] * n[2]);
    for k in 0..n[2] as i64 {
        for j in 0..n[1] as i64 {
            for i in 0..n[0] as i64 {
                for t in mirrored_tets([i, j, k]) {
                    tets.push(t.map(|c| id(corner([i, j, k], c))));
                }
            }
        }
    }
    let layer = vec![EndoLayer::None; nodes.len()];
    Mesh::new(nodes, tets, coords, tags, layer)
}

pub fn generate_synthetic_biventricle<T: Real>(params: &SyntheticParams) -> Result<Mesh<T>> {
    params.validate()?;
    let solid = params.solid::<T>();
    let h = T::c(params.resolution);
    let at = |g: [i64; 3]| Vec3::new(T::c(g[0] as f64) * h, T::c(g[1] as f64) * h, T::c(g[2] as f64) * h);
    let centre = |v: [i64; 3]| {
        let half = T::c(0.5);
        Vec3::new(
            (T::c(v[0] as f64) + half) * h,
            (T::c(v[1] as f64) + half) * h,
            (T::c(v[2] as f64) + half) * h,
        )
    };

    let lo_x = params.rv_offset - params.rv_cavity_radii[0] - params.rv_wall;
    let hi_x = params.lv_cavity_radius + params.lv_wall;
    let hi_y = hi_x.max(params.rv_cavity_radii[1] + params.rv_wall);
    let lo_z = -(params.lv_cavity_length + params.lv_apex_wall).max(params.rv_cavity_radii[2] + params.rv_wall);
    let idx = |x: f64| (x / params.resolution).floor() as i64;
    let (i0, i1) = (idx(lo_x) - 1, idx(hi_x) + 1);
    let (j0, j1) = (idx(-hi_y) - 1, idx(hi_y) + 1);
    let (k0, k1) = (idx(lo_z) - 1, idx(params.base_height) + 1);

    let mut voxels: HashMap<[i64; 3], bool> = HashMap::new();
    let mut order = Vec::new();
    for k in k0..=k1 {
        for j in j0..=j1 {
            for i in i0..=i1 {
                let v = [i, j, k];
                if solid.is_myocardium(&centre(v)) {
                    voxels.insert(v, false);
                    order.push(v);
                }
            }
        }
    }
    let kept = largest_face_component(&order, &mut voxels);

    let mut node_id: HashMap<[i64; 3], usize> = HashMap::new();
    let mut grid_nodes: Vec<[i64; 3]> = Vec::new();
    let mut tets = Vec::with_capacity(kept.len() * 6);
    for v in &kept {
        let ids: Vec<usize> = (0..8)
            .map(|c| {
                let g = corner(*v, c);
                *node_id.entry(g).or_insert_with(|| {
                    grid_nodes.push(g);
                    grid_nodes.len() - 1
                })
            })
            .collect();
        for t in mirrored_tets(*v) {
            tets.push([ids[t[0]], ids[t[1]], ids[t[2]], ids[t[3]]]);
        }
    }
    let nodes: Vec<Vec3<T>> = grid_nodes.iter().map(|&g| at(g)).collect();

    // surface tags from the region on the far side of each exposed voxel face
    let mut tags = vec![SurfaceTags::NONE; nodes.len()];
    const FACE_DIRS: [([i64; 3], [usize; 4]); 6] = [
        ([-1, 0, 0], [0, 2, 4, 6]),
        ([1, 0, 0], [1, 3, 5, 7]),
        ([0, -1, 0], [0, 1, 4, 5]),
        ([0, 1, 0], [2, 3, 6, 7]),
        ([0, 0, -1], [0, 1, 2, 3]),
        ([0, 0, 1], [4, 5, 6, 7]),
    ];
    for v in &kept {
        for (d, corners) in FACE_DIRS {
            let nb = [v[0] + d[0], v[1] + d[1], v[2] + d[2]];
            if voxels.get(&nb) == Some(&true) {
                continue;
            }
            let tag = match solid.region(&centre(nb)) {
                Region::AboveBase => SurfaceTags::BASE,
                Region::LvCavity => SurfaceTags::LV_ENDOCARDIUM,
                Region::RvCavity => SurfaceTags::RV_ENDOCARDIUM,
                _ => SurfaceTags::EPICARDIUM,
            };
            for c in corners {
                tags[node_id[&corner(*v, c)]].insert(tag);
            }
        }
    }

    // a node is LV when it touches any LV-wall voxel
    let mut sides = vec![Side::Rv; nodes.len()];
    for v in &kept {
        if solid.region(&centre(*v)) == Region::LvWall {
            for c in 0..8 {
                sides[node_id[&corner(*v, c)]] = Side::Lv;
            }
        }
    }
    let mut apex_z = [T::infinity(); 2];
    for (p, s) in nodes.iter().zip(&sides) {
        let z = &mut apex_z[*s as usize];
        *z = z.min(p.z());
    }
    if apex_z.iter().any(|z| !z.is_finite()) {
        return Err(Error::Parameter { name: "geometry", reason: "a chamber has no tissue at this resolution".into() });
    }
    let map = CoordinateMap::new(solid, apex_z)?;

    let dense_ab = T::c(params.dense_layer_max_ab);
    let mut coords = Vec::with_capacity(nodes.len());
    let mut layer = Vec::with_capacity(nodes.len());
    let tms = surface_distance_depth(&nodes, &sides, &tags);
    for (((p, &side), tag), &tm) in nodes.iter().zip(&sides).zip(&tags).zip(&tms) {
        let ab = map.apicobasal(p, side).quantize9();
        let mut rt = map.rotational(p, side).quantize9();
        if rt >= T::one() {
            rt = T::zero();
        }
        coords.push(CobivecoCoord { tm: tm.quantize9(), ab, rt, side });
        layer.push(if tag.is_endocardial() {
            if ab <= dense_ab {
                EndoLayer::Dense
            } else {
                EndoLayer::Sparse
            }
        } else {
            EndoLayer::None
        });
    }
    let nodes = nodes
        .into_iter()
        .map(|p| Vec3(p.0.map(|x| x.quantize9())))
        .collect();
    Mesh::new(nodes, tets, coords, tags, layer)
}

/// Transmural depth `d_out / (d_out + d_in)` from Euclidean distances to the
/// nearest node of the chamber's outer and cavity surfaces. For the LV the
/// outer surface includes the RV face of the septum.
fn surface_distance_depth<T: Real>(nodes: &[Vec3<T>], sides: &[Side], tags: &[SurfaceTags]) -> Vec<T> {
    let pick = |f: &dyn Fn(usize) -> bool| -> Vec<Vec3<T>> {
        (0..nodes.len()).filter(|&i| f(i)).map(|i| nodes[i]).collect()
    };
    let epi = |i: usize| tags[i].contains(SurfaceTags::EPICARDIUM);
    let lv_outer = pick(&|i| epi(i) || (sides[i] == Side::Lv && tags[i].contains(SurfaceTags::RV_ENDOCARDIUM)));
    let lv_inner = pick(&|i| tags[i].contains(SurfaceTags::LV_ENDOCARDIUM));
    let rv_outer = pick(&|i| epi(i));
    let rv_inner = pick(&|i| sides[i] == Side::Rv && tags[i].contains(SurfaceTags::RV_ENDOCARDIUM));
    let nearest = |p: &Vec3<T>, set: &[Vec3<T>]| {
        set.iter().map(|q| (*q - *p).norm_sq()).fold(T::infinity(), T::min).sqrt()
    };
    nodes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (outer, inner) = match sides[i] {
                Side::Lv => (&lv_outer, &lv_inner),
                Side::Rv => (&rv_outer, &rv_inner),
            };
            let d_out = nearest(p, outer);
            if d_out == T::zero() {
                return T::zero();
            }
            let d_in = nearest(p, inner);
            if !d_in.is_finite() {
                return T::zero();
            }
            d_out / (d_out + d_in)
        })
        .collect()
}

/// Keeps the largest 6-connected voxel component, marking kept voxels `true`.
fn largest_face_component(order: &[[i64; 3]], voxels: &mut HashMap<[i64; 3], bool>) -> Vec<[i64; 3]> {
    let mut label: HashMap<[i64; 3], usize> = HashMap::new();
    let mut sizes = Vec::new();
    for &start in order {
        if label.contains_key(&start) {
            continue;
        }
        let id = sizes.len();
        let mut count = 0;
        let mut queue = VecDeque::from([start]);
        label.insert(start, id);
        while let Some(v) = queue.pop_front() {
            count += 1;
            for d in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]] {
                let nb = [v[0] + d[0], v[1] + d[1], v[2] + d[2]];
                if voxels.contains_key(&nb) && !label.contains_key(&nb) {
                    label.insert(nb, id);
                    queue.push_back(nb);
                }
            }
        }
        sizes.push(count);
    }
    let best = (0..sizes.len()).max_by_key(|&i| (sizes[i], usize::MAX - i)).unwrap_or(0);
    let kept: Vec<[i64; 3]> = order.iter().copied().filter(|v| label[v] == best).collect();
    for v in &kept {
        voxels.insert(*v, true);
    }
    kept
}
