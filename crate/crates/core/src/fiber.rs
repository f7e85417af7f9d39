//! Rule-based fibre/sheet/sheet-normal frames.
//!
//! The sheet direction `s` follows the transmural gradient (epicardium to
//! endocardium), the longitudinal direction is the apicobasal gradient
//! projected onto the plane normal to `s`, and the fibre is rotated inside
//! that plane by an angle that varies linearly with `tm`.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::num::Real;
use crate::vec3::Vec3;

/// Relative size below which the projected apicobasal direction is treated as degenerate.
pub const DEGENERATE_TANGENT: f64 = 1e-6;

pub const DEFAULT_ALPHA_ENDO: f64 = 60.0;
pub const DEFAULT_ALPHA_EPI: f64 = -60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberFrame<T> {
    pub f: Vec3<T>,
    pub s: Vec3<T>,
    pub n: Vec3<T>,
}

impl<T: Real> FiberFrame<T> {
    /// Orthonormal, right-handed (`(f × s)·n = 1`) within `tol`.
    pub fn is_orthonormal(&self, tol: T) -> bool {
        let one = T::one();
        let unit = [self.f, self.s, self.n].iter().all(|v| (v.norm() - one).abs() <= tol);
        let ortho = self.f.dot(&self.s).abs() <= tol
            && self.f.dot(&self.n).abs() <= tol
            && self.s.dot(&self.n).abs() <= tol;
        let handed = (self.f.cross(&self.s).dot(&self.n) - one).abs() <= tol;
        unit && ortho && handed
    }
}

/// Element gradients of a nodal field, averaged to nodes (volume weighted) and
/// back to elements; smooths the staircase of voxel-derived meshes.
fn smoothed_gradient<T: Real>(mesh: &Mesh<T>, field: &[T]) -> Result<Vec<Vec3<T>>> {
    let g = mesh.element_gradient(field)?;
    let mut acc = vec![Vec3::zero(); mesh.node_count()];
    let mut wsum = vec![T::zero(); mesh.node_count()];
    for (i, t) in mesh.tets.iter().enumerate() {
        let w = mesh.tet_volume(i);
        for &v in t {
            acc[v] += g[i] * w;
            wsum[v] = wsum[v] + w;
        }
    }
    let nodal: Vec<Vec3<T>> = acc.iter().zip(&wsum).map(|(a, &w)| *a / w).collect();
    Ok(mesh
        .tets
        .iter()
        .map(|t| (nodal[t[0]] + nodal[t[1]] + nodal[t[2]] + nodal[t[3]]) * T::c(0.25))
        .collect())
}

pub fn assign_fibers<T: Real>(mesh: &Mesh<T>, alpha_endo: T, alpha_epi: T) -> Result<Vec<FiberFrame<T>>> {
    let limit = T::c(90.0);
    for (name, a) in [("alpha_endo", alpha_endo), ("alpha_epi", alpha_epi)] {
        if !(a.abs() <= limit) {
            return Err(Error::Parameter { name: "fiber angle", reason: format!("{name} = {a} outside [-90, 90]") });
        }
    }
    let tm: Vec<T> = mesh.coords.iter().map(|c| c.tm).collect();
    let ab: Vec<T> = mesh.coords.iter().map(|c| c.ab).collect();
    let g_tm = smoothed_gradient(mesh, &tm)?;
    let g_ab = smoothed_gradient(mesh, &ab)?;
    let eps = T::c(DEGENERATE_TANGENT);

    let mut frames: Vec<Option<FiberFrame<T>>> = Vec::with_capacity(mesh.tet_count());
    for (i, t) in mesh.tets.iter().enumerate() {
        let frame = (|| {
            let s = g_tm[i].normalized(T::epsilon())?;
            let l_norm = g_ab[i].norm();
            let l = g_ab[i] - s * g_ab[i].dot(&s);
            if !(l.norm() > eps * l_norm) {
                return None;
            }
            let l = l.normalized(T::epsilon())?;
            let c = s.cross(&l);
            let tm_e = t.iter().map(|&v| tm[v]).sum::<T>() * T::c(0.25);
            let alpha = (alpha_epi + (alpha_endo - alpha_epi) * tm_e).to_radians();
            let f = c * alpha.cos() + l * alpha.sin();
            let n = f.cross(&s);
            Some(FiberFrame { f, s, n })
        })();
        frames.push(frame);
    }

    let good: Vec<usize> = (0..frames.len()).filter(|&i| frames[i].is_some()).collect();
    if good.is_empty() {
        return Err(Error::Mesh("no element has a well-conditioned tangent plane".into()));
    }
    let centroids: Vec<Vec3<T>> = (0..mesh.tet_count()).map(|i| mesh.centroid(i)).collect();
    let mut out = Vec::with_capacity(frames.len());
    for i in 0..frames.len() {
        match frames[i] {
            Some(fr) => out.push(fr),
            None => {
                let nearest = good
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        let da = (centroids[a] - centroids[i]).norm_sq();
                        let db = (centroids[b] - centroids[i]).norm_sq();
                        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
                    })
                    .expect("non-empty");
                out.push(frames[nearest].expect("well-conditioned"));
            }
        }
    }
    Ok(out)
}

/// In-plane fibre angle in degrees relative to the circumferential direction.
pub fn fiber_angle<T: Real>(frame: &FiberFrame<T>, longitudinal: &Vec3<T>) -> Option<T> {
    let l = (*longitudinal - frame.s * longitudinal.dot(&frame.s)).normalized(T::epsilon())?;
    let c = frame.s.cross(&l);
    Some(frame.f.dot(&l).atan2(frame.f.dot(&c)).to_degrees())
}
