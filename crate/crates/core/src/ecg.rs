//! Pseudo-ECG from an activation map.
//!
//! Each electrode sees `K Σ_tets −∇V_m · ∇(1/r) · vol` with `∇(1/r)` taken at
//! the tet centroid. `V_m` is an upstroke-only template, so only tets the
//! wavefront is crossing contribute at a given instant.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::eikonal::ActivationMap;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::num::Real;
use crate::vec3::Vec3;

/// Minimum electrode clearance from any mesh node, cm.
pub const ELECTRODE_CLEARANCE: f64 = 1.0;
/// Window padding after the last upstroke ends, ms.
pub const WINDOW_PAD_MS: f64 = 5.0;
/// Largest baseline R wave, mm.
pub const BASELINE_R_MM: f64 = 10.0;

pub const LEAD_NAMES: [&str; 12] = ["I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmembraneTemplate {
    pub v_rest: f64,
    pub v_peak: f64,
    pub upstroke_duration: f64,
}

impl Default for TransmembraneTemplate {
    fn default() -> Self {
        TransmembraneTemplate { v_rest: -85.0, v_peak: 30.0, upstroke_duration: 1.0 }
    }
}

impl TransmembraneTemplate {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_peak > self.v_rest) || !self.v_rest.is_finite() || !self.v_peak.is_finite() {
            return Err(Error::Parameter { name: "v_peak", reason: "must exceed v_rest".into() });
        }
        if !(self.upstroke_duration > 0.0) || !self.upstroke_duration.is_finite() {
            return Err(Error::Parameter { name: "upstroke_duration", reason: "must be positive".into() });
        }
        Ok(())
    }
}

/// Transmembrane potential (mV) at time `t` of a node activated at `t_act`.
pub fn transmembrane_at<T: Real>(tpl: &TransmembraneTemplate, t_act: T, t: T) -> T {
    let (rest, peak, up) = (T::c(tpl.v_rest), T::c(tpl.v_peak), T::c(tpl.upstroke_duration));
    if t < t_act {
        rest
    } else if t >= t_act + up {
        peak
    } else {
        rest + (peak - rest) * (t - t_act) / up
    }
}

/// Electrode positions in the mesh frame, cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ElectrodeSet {
    pub RA: [f64; 3],
    pub LA: [f64; 3],
    pub LL: [f64; 3],
    pub V1: [f64; 3],
    pub V2: [f64; 3],
    pub V3: [f64; 3],
    pub V4: [f64; 3],
    pub V5: [f64; 3],
    pub V6: [f64; 3],
}

impl Default for ElectrodeSet {
    /// Limb electrodes far field; precordial arc anterior and left of the heart.
    fn default() -> Self {
        ElectrodeSet {
            RA: [-20.0, 5.0, 20.0],
            LA: [20.0, 5.0, 20.0],
            LL: [5.0, 5.0, -30.0],
            V1: [-3.5, 5.0, -0.5],
            V2: [-1.0, 5.5, -1.0],
            V3: [1.5, 5.5, -1.5],
            V4: [3.5, 4.5, -3.0],
            V5: [5.5, 2.5, -3.0],
            V6: [6.5, 0.0, -3.0],
        }
    }
}

pub const ELECTRODE_NAMES: [&str; 9] = ["RA", "LA", "LL", "V1", "V2", "V3", "V4", "V5", "V6"];

impl ElectrodeSet {
    pub fn positions(&self) -> [[f64; 3]; 9] {
        [self.RA, self.LA, self.LL, self.V1, self.V2, self.V3, self.V4, self.V5, self.V6]
    }

    /// Every electrode must clear the mesh nodes by more than [`ELECTRODE_CLEARANCE`].
    pub fn validate<T: Real>(&self, mesh: &Mesh<T>) -> Result<()> {
        for (name, p) in ELECTRODE_NAMES.iter().zip(self.positions()) {
            check_clearance(mesh, name, &Vec3::new(T::c(p[0]), T::c(p[1]), T::c(p[2])))?;
        }
        Ok(())
    }
}

fn check_clearance<T: Real>(mesh: &Mesh<T>, name: &str, p: &Vec3<T>) -> Result<()> {
    let d = mesh.nodes.iter().map(|x| (*x - *p).norm()).fold(T::infinity(), T::min);
    if !(d > T::c(ELECTRODE_CLEARANCE)) {
        return Err(Error::ElectrodeInside { name: name.into(), distance: d.to_f64_lossy() });
    }
    Ok(())
}

/// `∇ₓ(1/r)` for `r = |x − e|`.
fn grad_inv_r<T: Real>(x: &Vec3<T>, e: &Vec3<T>) -> Vec3<T> {
    let d = *e - *x;
    let r = d.norm();
    d / (r * r * r)
}

/// Precomputed per-tet, per-vertex lead coefficients for a set of electrodes.
#[derive(Debug, Clone)]
pub struct LeadOperator<T> {
    tets: Vec<[usize; 4]>,
    /// `coef[e][tet][v] = vol · ∇φ_v · ∇(1/r_e)(centroid)`.
    coef: Vec<Vec<[T; 4]>>,
}

impl<T: Real> LeadOperator<T> {
    pub fn new(mesh: &Mesh<T>, electrodes: &[(String, Vec3<T>)]) -> Result<Self> {
        for (name, p) in electrodes {
            check_clearance(mesh, name, p)?;
        }
        let geo: Vec<(Vec3<T>, [Vec3<T>; 4], T)> =
            (0..mesh.tet_count()).map(|i| (mesh.centroid(i), mesh.shape_gradients(i), mesh.tet_volume(i))).collect();
        let coef = electrodes
            .iter()
            .map(|(_, e)| {
                geo.iter()
                    .map(|(c, g, vol)| {
                        let gr = grad_inv_r(c, e);
                        [0, 1, 2, 3].map(|k| *vol * g[k].dot(&gr))
                    })
                    .collect()
            })
            .collect();
        Ok(LeadOperator { tets: mesh.tets.clone(), coef })
    }

    pub fn for_set(mesh: &Mesh<T>, set: &ElectrodeSet) -> Result<Self> {
        let named: Vec<(String, Vec3<T>)> = ELECTRODE_NAMES
            .iter()
            .zip(set.positions())
            .map(|(n, p)| (n.to_string(), Vec3::new(T::c(p[0]), T::c(p[1]), T::c(p[2]))))
            .collect();
        Self::new(mesh, &named)
    }

    pub fn electrode_count(&self) -> usize {
        self.coef.len()
    }

    /// Unscaled potential at every electrode for nodal `V_m`.
    ///
    /// Works on `V_m − v_rest` so resting tissue contributes exact zeros.
    pub fn potentials(&self, vm: &[T], v_rest: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.coef.len()];
        for (i, t) in self.tets.iter().enumerate() {
            let dv = t.map(|v| vm[v] - v_rest);
            if dv[0] == dv[1] && dv[1] == dv[2] && dv[2] == dv[3] {
                continue;
            }
            for (e, acc) in out.iter_mut().enumerate() {
                let c = &self.coef[e][i];
                *acc = *acc - (c[0] * dv[0] + c[1] * dv[1] + c[2] * dv[2] + c[3] * dv[3]);
            }
        }
        out
    }
}

/// Potential at one electrode at time `t`, scaled by `gain_k`.
pub fn electrode_potential<T: Real>(
    mesh: &Mesh<T>,
    activation: &ActivationMap<T>,
    tpl: &TransmembraneTemplate,
    electrode: &Vec3<T>,
    t: T,
    gain_k: T,
) -> Result<T> {
    tpl.validate()?;
    if activation.times.len() != mesh.node_count() {
        return Err(Error::LengthMismatch { expected: mesh.node_count(), got: activation.times.len() });
    }
    let op = LeadOperator::new(mesh, &[("electrode".to_string(), *electrode)])?;
    let vm: Vec<T> = activation.times.iter().map(|&ta| transmembrane_at(tpl, ta, t)).collect();
    Ok(op.potentials(&vm, T::c(tpl.v_rest))[0] * gain_k)
}

/// Raw electrode potentials over the recording window.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeTraces<T> {
    pub sample_period: T,
    /// `traces[e][k]` for electrode `e` in [`ELECTRODE_NAMES`] order.
    pub traces: Vec<Vec<T>>,
}

/// Number of samples covering `[0, max activation + upstroke + pad]`.
pub fn window_samples<T: Real>(activation: &ActivationMap<T>, tpl: &TransmembraneTemplate, dt: T) -> usize {
    let end = activation.max() + T::c(tpl.upstroke_duration + WINDOW_PAD_MS);
    (end / dt).floor().to_usize().unwrap_or(0) + 1
}

pub fn electrode_traces<T: Real>(
    op: &LeadOperator<T>,
    activation: &ActivationMap<T>,
    tpl: &TransmembraneTemplate,
    sample_period: T,
) -> Result<ElectrodeTraces<T>> {
    tpl.validate()?;
    if !(sample_period > T::zero()) {
        return Err(Error::Parameter { name: "sample_period", reason: "must be positive".into() });
    }
    let n = window_samples(activation, tpl, sample_period);
    let mut traces = vec![Vec::with_capacity(n); op.electrode_count()];
    let v_rest = T::c(tpl.v_rest);
    for k in 0..n {
        let t = T::c(k as f64) * sample_period;
        let vm: Vec<T> = activation.times.iter().map(|&ta| transmembrane_at(tpl, ta, t)).collect();
        for (tr, p) in traces.iter_mut().zip(op.potentials(&vm, v_rest)) {
            tr.push(p);
        }
    }
    Ok(ElectrodeTraces { sample_period, traces })
}

/// The 12 standard leads from `[RA, LA, LL, V1..V6]` potentials.
pub fn derive_leads<T: Real>(e: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    if e.len() != 9 {
        return Err(Error::LengthMismatch { expected: 9, got: e.len() });
    }
    let n = e[0].len();
    let half = T::c(0.5);
    let third = T::c(1.0 / 3.0);
    let (ra, la, ll) = (&e[0], &e[1], &e[2]);
    let lead = |f: &dyn Fn(usize) -> T| (0..n).map(f).collect::<Vec<T>>();
    let mut leads = vec![
        lead(&|k| la[k] - ra[k]),
        lead(&|k| ll[k] - ra[k]),
        lead(&|k| ll[k] - la[k]),
        lead(&|k| ra[k] - (la[k] + ll[k]) * half),
        lead(&|k| la[k] - (ra[k] + ll[k]) * half),
        lead(&|k| ll[k] - (ra[k] + la[k]) * half),
    ];
    for v in &e[3..] {
        leads.push(lead(&|k| v[k] - (ra[k] + la[k] + ll[k]) * third));
    }
    Ok(leads)
}

/// Amplitude scale and mm calibration fixed by the baseline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization<T> {
    /// Multiplier from raw lead values to normalised units.
    pub scale: T,
    /// mm per normalised unit.
    pub gain_mm: T,
}

impl<T: Real> Normalization<T> {
    /// Scale so the baseline's largest |amplitude| is 1, gain so its largest R is 10 mm.
    pub fn from_baseline(raw_leads: &[Vec<T>]) -> Result<Self> {
        let peak = raw_leads.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
        let r = raw_leads.iter().flatten().fold(T::zero(), |m, &v| m.max(v));
        if !(peak > T::zero()) || !(r > T::zero()) {
            return Err(Error::NoQrs);
        }
        let scale = T::one() / peak;
        Ok(Normalization { scale, gain_mm: T::c(BASELINE_R_MM) / (r * scale) })
    }
}

/// Twelve normalised leads sampled uniformly from t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QrsRecording<T> {
    pub sample_period: T,
    /// In [`LEAD_NAMES`] order.
    pub leads: Vec<Vec<T>>,
    /// mm per normalised unit.
    pub gain_mm: T,
}

impl<T: Real> QrsRecording<T> {
    pub fn lead(&self, name: &str) -> Option<&[T]> {
        LEAD_NAMES.iter().position(|n| *n == name).map(|i| self.leads[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.leads.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest `|I + III − II|` and `|aVR + aVL + aVF|`.
    pub fn identity_residuals(&self) -> (T, T) {
        let l = &self.leads;
        let mut e = T::zero();
        let mut g = T::zero();
        for k in 0..self.len() {
            e = e.max((l[0][k] + l[2][k] - l[1][k]).abs());
            g = g.max((l[3][k] + l[4][k] + l[5][k]).abs());
        }
        (e, g)
    }

    /// CSV with header `time_ms,I,...,V6`, 6 decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time_ms,{}", LEAD_NAMES.join(","))?;
        for k in 0..self.len() {
            let t = T::c(k as f64) * self.sample_period;
            write!(w, "{:.6}", t.to_f64_lossy())?;
            for lead in &self.leads {
                write!(w, ",{:.6}", lead[k].to_f64_lossy())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Leads from raw electrode traces under a given normalisation.
pub fn recording_from_traces<T: Real>(raw: &ElectrodeTraces<T>, norm: &Normalization<T>) -> Result<QrsRecording<T>> {
    let leads = derive_leads(&raw.traces)?
        .into_iter()
        .map(|l| l.into_iter().map(|v| v * norm.scale).collect())
        .collect();
    Ok(QrsRecording { sample_period: raw.sample_period, leads, gain_mm: norm.gain_mm })
}

/// Simulates a recording normalised against itself (a baseline run).
///
/// Returns the normalisation so scenario runs can reuse it.
pub fn simulate_qrs<T: Real>(
    mesh: &Mesh<T>,
    activation: &ActivationMap<T>,
    tpl: &TransmembraneTemplate,
    electrodes: &ElectrodeSet,
    sample_period: T,
) -> Result<(QrsRecording<T>, Normalization<T>)> {
    let op = LeadOperator::for_set(mesh, electrodes)?;
    let raw = electrode_traces(&op, activation, tpl, sample_period)?;
    let norm = Normalization::from_baseline(&derive_leads(&raw.traces)?)?;
    Ok((recording_from_traces(&raw, &norm)?, norm))
}

/// Simulates a recording with a baseline's normalisation.
pub fn simulate_qrs_with<T: Real>(
    op: &LeadOperator<T>,
    activation: &ActivationMap<T>,
    tpl: &TransmembraneTemplate,
    sample_period: T,
    norm: &Normalization<T>,
) -> Result<QrsRecording<T>> {
    let raw = electrode_traces(op, activation, tpl, sample_period)?;
    recording_from_traces(&raw, norm)
}
