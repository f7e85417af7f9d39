//! Orthotropic Eikonal activation on tetrahedra.
//!
//! Fast-iterative sweeps over an active queue. Each node update takes the
//! minimum over its incident tets of the exact causal solution of the local
//! problem `min_p t(p) + ‖x − p‖_M` over the opposite face, where `M` is the
//! element's slowness metric. Edges with both endpoints in the endocardial
//! fast layer get an extra isotropic candidate.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::FiberFrame;
use crate::mesh::coords::rt_distance;
use crate::mesh::{Adjacency, CobivecoCoord, Mesh, Side, SurfaceTags};
use crate::num::Real;
use crate::scenario::CvField;
use crate::vec3::{Sym3, Vec3};

/// Convergence threshold of the first sweep phase, ms.
pub const TOLERANCE_MS: f64 = 1e-6;
/// Snap distance limit in multiples of the median coordinate-space edge length.
pub const SNAP_EDGE_FACTOR: f64 = 2.0;
const MAX_UPDATES_PER_NODE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootNode<T> {
    pub location: CobivecoCoord<T>,
    /// Purkinje delay, ms.
    pub pk_delay: T,
}

/// A named default root, serialisable for configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootSite {
    pub name: String,
    pub side: Side,
    pub tm: f64,
    pub ab: f64,
    pub rt: f64,
    #[serde(default)]
    pub pk_delay: f64,
}

impl RootSite {
    pub fn root<T: Real>(&self) -> Result<RootNode<T>> {
        let location = CobivecoCoord::new(T::c(self.tm), T::c(self.ab), T::c(self.rt), self.side)?;
        if !(self.pk_delay >= 0.0) || !self.pk_delay.is_finite() {
            return Err(Error::Parameter { name: "pk_delay", reason: format!("{} for root `{}`", self.pk_delay, self.name) });
        }
        Ok(RootNode { location, pk_delay: T::c(self.pk_delay) })
    }
}

fn site(name: &str, side: Side, tm: f64, ab: f64, rt: f64) -> RootSite {
    RootSite { name: name.into(), side, tm, ab, rt, pk_delay: 0.0 }
}

/// Four LV and three RV earliest-activation sites.
///
/// The RV septal surface is the `tm = 0` boundary of the LV-owned septum, so
/// the RV mid-septal site is expressed in LV coordinates.
pub fn default_root_sites() -> Vec<RootSite> {
    vec![
        site("lv_mid_septum", Side::Lv, 1.0, 0.5, 0.83),
        site("lv_basal_anterior_paraseptal", Side::Lv, 1.0, 0.8, 0.64),
        site("lv_mid_posterior_1", Side::Lv, 1.0, 0.5, 0.08),
        site("lv_mid_posterior_2", Side::Lv, 1.0, 0.5, 0.22),
        site("rv_mid_septum", Side::Lv, 0.0, 0.5, 0.83),
        site("rv_free_wall_anterior", Side::Rv, 1.0, 0.55, 0.6),
        site("rv_free_wall_lateral", Side::Rv, 1.0, 0.4, 0.8),
    ]
}

pub fn default_roots<T: Real>() -> Vec<RootNode<T>> {
    default_root_sites().iter().map(|s| s.root().expect("default sites are valid")).collect()
}

/// Delays shifted so the earliest root fires at 0.
pub fn normalize_root_times<T: Real>(delays: &[T]) -> Vec<T> {
    let min = delays.iter().copied().fold(T::infinity(), T::min);
    delays.iter().map(|&d| d - min).collect()
}

fn is_root_surface<T: Real>(root: &CobivecoCoord<T>, side: Side, tags: SurfaceTags) -> bool {
    if root.side != side {
        return false;
    }
    match side {
        Side::Rv => tags.contains(SurfaceTags::RV_ENDOCARDIUM),
        Side::Lv if root.tm >= T::c(0.5) => tags.contains(SurfaceTags::LV_ENDOCARDIUM),
        Side::Lv => tags.contains(SurfaceTags::RV_ENDOCARDIUM),
    }
}

fn coord_distance<T: Real>(a: &CobivecoCoord<T>, b: &CobivecoCoord<T>) -> T {
    let d = [a.tm - b.tm, a.ab - b.ab, rt_distance(a.rt, b.rt)];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Median coordinate-space length of same-side edges.
pub fn median_coordinate_edge<T: Real>(mesh: &Mesh<T>) -> T {
    let mut l: Vec<T> = mesh
        .edges()
        .into_iter()
        .filter(|&(a, b)| mesh.coords[a].side == mesh.coords[b].side)
        .map(|(a, b)| coord_distance(&mesh.coords[a], &mesh.coords[b]))
        .collect();
    if l.is_empty() {
        return T::zero();
    }
    l.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    l[l.len() / 2]
}

/// Nearest matching endocardial node for each root, in coordinate space.
///
/// LV roots with `tm ≥ 0.5` go to the LV endocardium, LV roots with smaller
/// `tm` to the RV septal surface, RV roots to the RV endocardium.
pub fn snap_roots<T: Real>(mesh: &Mesh<T>, roots: &[RootNode<T>]) -> Result<Vec<usize>> {
    let limit = T::c(SNAP_EDGE_FACTOR) * median_coordinate_edge(mesh);
    roots
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let best = (0..mesh.node_count())
                .filter(|&i| is_root_surface(&r.location, mesh.coords[i].side, mesh.surface_tags[i]))
                .map(|i| (coord_distance(&r.location, &mesh.coords[i]), i))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            match best {
                None => Err(Error::RootSnap { index: k, reason: "no endocardial node on that surface".into() }),
                Some((d, _)) if d > limit => Err(Error::RootSnap {
                    index: k,
                    reason: format!("nearest node is {d:.4} away, limit {limit:.4}"),
                }),
                Some((_, i)) => Ok(i),
            }
        })
        .collect()
}

/// Slowness metric `Σ dᵢdᵢᵀ / vᵢ²` with speeds in cm/ms.
pub fn metric<T: Real>(frame: &FiberFrame<T>, speeds_cm_per_ms: [T; 3]) -> Sym3<T> {
    let mut m = Sym3::zero();
    for (d, v) in [frame.f, frame.s, frame.n].iter().zip(speeds_cm_per_ms) {
        m.add_outer(d, T::one() / (v * v));
    }
    m
}

fn cm_per_ms<T: Real>(v_cm_per_s: T) -> T {
    v_cm_per_s * T::c(1e-3)
}

/// Minimum over the simplex spanned by the finite vertices of `t(p) + ‖x − p‖_M`.
pub fn local_solve<T: Real>(x: &Vec3<T>, m: &Sym3<T>, verts: &[(Vec3<T>, T)]) -> T {
    let mut best = T::infinity();
    for (p, t) in verts {
        best = best.min(*t + m.norm(&(*x - *p)));
    }
    let zero = T::zero();
    let one = T::one();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            let (pi, ti) = verts[i];
            let (pj, tj) = verts[j];
            let w0 = *x - pi;
            let e = pj - pi;
            let dt = tj - ti;
            let a = m.inner(&e, &e);
            let b = m.inner(&e, &w0);
            let c = m.inner(&w0, &w0);
            if a <= dt * dt {
                continue;
            }
            let d = (a * c - b * b).max(zero);
            let lam = (b - dt * (d / (a - dt * dt)).sqrt()) / a;
            if lam > zero && lam < one {
                let r = w0 - e * lam;
                best = best.min(ti + lam * dt + m.norm(&r));
            }
        }
    }
    if verts.len() == 3 {
        let (pa, ta) = verts[0];
        let e1 = verts[1].0 - pa;
        let e2 = verts[2].0 - pa;
        let w0 = *x - pa;
        let g = [verts[1].1 - ta, verts[2].1 - ta];
        let g11 = m.inner(&e1, &e1);
        let g12 = m.inner(&e1, &e2);
        let g22 = m.inner(&e2, &e2);
        let det = g11 * g22 - g12 * g12;
        if det > zero {
            let inv = [[g22 / det, -g12 / det], [-g12 / det, g11 / det]];
            let mul = |v: [T; 2]| [inv[0][0] * v[0] + inv[0][1] * v[1], inv[1][0] * v[0] + inv[1][1] * v[1]];
            let bv = [m.inner(&e1, &w0), m.inner(&e2, &w0)];
            let gi = mul(g);
            let bi = mul(bv);
            let ggg = g[0] * gi[0] + g[1] * gi[1];
            let plane = (m.inner(&w0, &w0) - (bv[0] * bi[0] + bv[1] * bi[1])).max(zero);
            if ggg < one {
                let s = (plane / (one - ggg)).sqrt();
                let l = [bi[0] - s * gi[0], bi[1] - s * gi[1]];
                if l[0] > zero && l[1] > zero && l[0] + l[1] < one {
                    best = best.min(ta + l[0] * g[0] + l[1] * g[1] + s);
                }
            }
        }
    }
    best
}

/// Per-node activation times, ms.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap<T> {
    pub times: Vec<T>,
}

impl<T: Real> ActivationMap<T> {
    pub fn min(&self) -> T {
        self.times.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.times.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn mean(&self) -> T {
        self.times.iter().copied().sum::<T>() / T::c(self.times.len().max(1) as f64)
    }

    /// `node_id time_ms` lines with 6 decimals.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, t) in self.times.iter().enumerate() {
            writeln!(w, "{i} {:.6}", t.to_f64_lossy())?;
        }
        Ok(())
    }
}

/// Precomputed metrics and adjacency for one CV field.
#[derive(Debug, Clone)]
pub struct EikonalProblem<'a, T> {
    mesh: &'a Mesh<T>,
    metrics: Vec<Sym3<T>>,
    node_tets: Adjacency,
    neighbors: Adjacency,
    /// Fast-layer slowness per node (ms/cm), infinite when not in the layer.
    endo_slowness: Vec<T>,
}

impl<'a, T: Real> EikonalProblem<'a, T> {
    pub fn new(mesh: &'a Mesh<T>, cv: &CvField<T>) -> Result<Self> {
        cv.validate(mesh)?;
        let metrics = cv
            .frames
            .iter()
            .zip(&cv.speeds)
            .map(|(f, s)| metric(f, s.map(cm_per_ms)))
            .collect();
        let endo_slowness = cv
            .endo_speed
            .iter()
            .map(|v| v.map_or(T::infinity(), |v| T::one() / cm_per_ms(v)))
            .collect();
        Ok(EikonalProblem { mesh, metrics, node_tets: mesh.node_tets(), neighbors: mesh.node_neighbors(), endo_slowness })
    }

    pub fn metrics(&self) -> &[Sym3<T>] {
        &self.metrics
    }

    /// Traversal time of a fast-layer edge, or infinity.
    pub fn layer_edge_time(&self, a: usize, b: usize) -> T {
        let s = self.endo_slowness[a].max(self.endo_slowness[b]);
        if s.is_finite() {
            s * (self.mesh.nodes[a] - self.mesh.nodes[b]).norm()
        } else {
            T::infinity()
        }
    }

    fn update(&self, x: usize, t: &[T]) -> T {
        let p = self.mesh.nodes[x];
        let mut best = T::infinity();
        let mut verts = [(Vec3::zero(), T::zero()); 3];
        for &e in self.node_tets.get(x) {
            let mut k = 0;
            for &v in &self.mesh.tets[e] {
                if v != x && t[v].is_finite() {
                    verts[k] = (self.mesh.nodes[v], t[v]);
                    k += 1;
                }
            }
            if k > 0 {
                best = best.min(local_solve(&p, &self.metrics[e], &verts[..k]));
            }
        }
        if self.endo_slowness[x].is_finite() {
            for &y in self.neighbors.get(x) {
                if t[y].is_finite() {
                    best = best.min(t[y] + self.layer_edge_time(x, y));
                }
            }
        }
        best
    }

    /// Solve from explicit `(node, initial time)` seeds.
    pub fn solve_seeds(&self, seeds: &[(usize, T)]) -> Result<ActivationMap<T>> {
        let n = self.mesh.node_count();
        if seeds.is_empty() {
            return Err(Error::Parameter { name: "roots", reason: "at least one root is required".into() });
        }
        let mut seed = vec![T::infinity(); n];
        for &(i, t0) in seeds {
            if i >= n {
                return Err(Error::RootSnap { index: i, reason: format!("node {i} out of range") });
            }
            seed[i] = seed[i].min(t0);
        }
        let mut t = seed.clone();
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        let push = |queue: &mut VecDeque<usize>, queued: &mut Vec<bool>, i: usize| {
            if !queued[i] {
                queued[i] = true;
                queue.push_back(i);
            }
        };
        let mut updates = 0usize;
        let budget = MAX_UPDATES_PER_NODE * n;
        let tol = T::c(TOLERANCE_MS);
        // Coarse sweep to tolerance, then polish to an exact fixed point.
        for phase_tol in [tol, T::zero()] {
            if phase_tol > T::zero() {
                for (i, _) in seeds {
                    for &j in self.neighbors.get(*i) {
                        push(&mut queue, &mut queued, j);
                    }
                }
            } else {
                for i in 0..n {
                    push(&mut queue, &mut queued, i);
                }
            }
            while let Some(x) = queue.pop_front() {
                queued[x] = false;
                updates += 1;
                if updates > budget {
                    return Err(Error::NoConvergence(updates));
                }
                let q = seed[x].min(self.update(x, &t));
                if q < t[x] && (t[x] - q > phase_tol || !t[x].is_finite()) {
                    t[x] = q;
                    for &j in self.neighbors.get(x) {
                        push(&mut queue, &mut queued, j);
                    }
                }
            }
        }
        let unreachable: Vec<usize> = (0..n).filter(|&i| !t[i].is_finite()).collect();
        if !unreachable.is_empty() {
            return Err(Error::Unreachable {
                count: unreachable.len(),
                ids: unreachable.into_iter().take(10).collect(),
            });
        }
        Ok(ActivationMap { times: t })
    }

    pub fn solve(&self, roots: &[RootNode<T>]) -> Result<ActivationMap<T>> {
        if roots.is_empty() {
            return Err(Error::Parameter { name: "roots", reason: "at least one root is required".into() });
        }
        let nodes = snap_roots(self.mesh, roots)?;
        let delays: Vec<T> = roots.iter().map(|r| r.pk_delay).collect();
        if let Some(k) = delays.iter().position(|d| !(*d >= T::zero()) || !d.is_finite()) {
            return Err(Error::RootSnap { index: k, reason: "delay must be finite and non-negative".into() });
        }
        let t0 = normalize_root_times(&delays);
        let seeds: Vec<(usize, T)> = nodes.into_iter().zip(t0).collect();
        self.solve_seeds(&seeds)
    }
}

pub fn solve<T: Real>(mesh: &Mesh<T>, cv: &CvField<T>, roots: &[RootNode<T>]) -> Result<ActivationMap<T>> {
    EikonalProblem::new(mesh, cv)?.solve(roots)
}
