//! QRS comparison: DTW dissimilarity, delineation and clinical criteria.

use std::io::Write;

use crate::ecg::{QrsRecording, LEAD_NAMES};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::scenario::BASELINE;

/// Onset/offset threshold as a fraction of the lead's peak |amplitude|.
pub const ONSET_FRACTION: f64 = 0.02;
/// Minimum extremum prominence as a fraction of the lead's peak |amplitude|.
pub const PROMINENCE_FRACTION: f64 = 0.05;
pub const Q_DURATION_MS: f64 = 30.0;
pub const Q_TO_R_RATIO: f64 = 0.25;
pub const PRWP_R_MM: f64 = 2.0;

/// Unnormalised DTW path cost with `|a_i − b_j|` and steps ↓ → ↘.
pub fn dtw<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySeries);
    }
    let m = b.len();
    let mut prev = vec![T::infinity(); m];
    let mut cur = vec![T::zero(); m];
    for (i, &x) in a.iter().enumerate() {
        for j in 0..m {
            let c = (x - b[j]).abs();
            let best = if i == 0 && j == 0 {
                T::zero()
            } else {
                let up = prev[j];
                let left = if j > 0 { cur[j - 1] } else { T::infinity() };
                let diag = if j > 0 { prev[j - 1] } else { T::infinity() };
                up.min(left).min(diag)
            };
            cur[j] = c + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

fn peak_abs<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// First and last sample index with `|x| > θ`.
pub fn delineate_indices<T: Real>(x: &[T]) -> Result<(usize, usize)> {
    let theta = T::c(ONSET_FRACTION) * peak_abs(x);
    let above = |v: &T| v.abs() > theta;
    match (x.iter().position(above), x.iter().rposition(above)) {
        (Some(a), Some(b)) if theta > T::zero() => Ok((a, b)),
        _ => Err(Error::NoQrs),
    }
}

/// `(onset, offset)` in ms.
pub fn delineate<T: Real>(x: &[T], sample_period: T) -> Result<(T, T)> {
    let (a, b) = delineate_indices(x)?;
    Ok((T::c(a as f64) * sample_period, T::c(b as f64) * sample_period))
}

/// Indices of local maxima (plateaus reported at their centre) and their
/// topographic prominence.
fn peaks_with_prominence<T: Real>(x: &[T]) -> Vec<(usize, T)> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
        .into_iter()
        .map(|p| {
            let h = x[p];
            let mut left_min = h;
            for k in (0..p).rev() {
                if x[k] > h {
                    break;
                }
                left_min = left_min.min(x[k]);
            }
            let mut right_min = h;
            for &v in &x[p + 1..] {
                if v > h {
                    break;
                }
                right_min = right_min.min(v);
            }
            (p, h - left_min.max(right_min))
        })
        .collect()
}

/// Prominent extrema strictly inside `(lo, hi)`, sorted by index; `true` marks maxima.
fn prominent_extrema<T: Real>(x: &[T], lo: usize, hi: usize) -> Vec<(usize, bool)> {
    if hi <= lo + 1 {
        return Vec::new();
    }
    let min_prom = T::c(PROMINENCE_FRACTION) * peak_abs(x);
    let seg = &x[lo..=hi];
    let neg: Vec<T> = seg.iter().map(|v| -*v).collect();
    let mut out: Vec<(usize, bool)> = peaks_with_prominence(seg)
        .into_iter()
        .filter(|&(_, p)| p >= min_prom)
        .map(|(i, _)| (i + lo, true))
        .chain(peaks_with_prominence(&neg).into_iter().filter(|&(_, p)| p >= min_prom).map(|(i, _)| (i + lo, false)))
        .filter(|&(i, _)| i > lo && i < hi)
        .collect();
    out.sort_unstable();
    out
}

/// Extra spikes beyond the canonical Q/R/S set inside the delineated complex.
pub fn count_fqrs<T: Real>(x: &[T]) -> Result<usize> {
    let (lo, hi) = delineate_indices(x)?;
    let ext = prominent_extrema(x, lo, hi);
    let canonical = if x[lo] < T::zero() { 3 } else { 2 };
    Ok(ext.len().saturating_sub(canonical))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadFeatures<T> {
    pub onset: T,
    pub offset: T,
    pub duration: T,
    /// Most negative value of the initial negative deflection; 0 when absent.
    pub q_amp: T,
    pub q_duration: T,
    /// Largest positive value (≥ 0).
    pub r_amp: T,
    pub r_time: T,
    /// Most negative value after R (≤ 0).
    pub s_amp: T,
    pub fqrs_count: usize,
}

pub fn lead_features<T: Real>(x: &[T], dt: T) -> Result<LeadFeatures<T>> {
    let (lo, hi) = delineate_indices(x)?;
    let at = |k: usize| T::c(k as f64) * dt;
    let win = &x[lo..=hi];
    let (r_idx, r_amp) = win
        .iter()
        .enumerate()
        .fold((0, T::zero()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let s_amp = win[r_idx..].iter().fold(T::zero(), |m, &v| m.min(v));
    let (q_amp, q_duration) = if x[lo] < T::zero() {
        match win.iter().position(|&v| v >= T::zero()) {
            Some(k) => {
                // Linear zero crossing between k-1 and k.
                let (a, b) = (win[k - 1], win[k]);
                let frac = a / (a - b);
                let q = win[..k].iter().fold(T::zero(), |m, &v| m.min(v));
                (q, (T::c((k - 1) as f64) + frac) * dt)
            }
            None => (win.iter().fold(T::zero(), |m, &v| m.min(v)), at(hi - lo)),
        }
    } else {
        (T::zero(), T::zero())
    };
    Ok(LeadFeatures {
        onset: at(lo),
        offset: at(hi),
        duration: at(hi - lo),
        q_amp,
        q_duration,
        r_amp,
        r_time: at(lo + r_idx),
        s_amp,
        fqrs_count: count_fqrs(x)?,
    })
}

/// Q of at least 30 ms or at least a quarter of the R amplitude.
pub fn detect_pathological_q<T: Real>(f: &LeadFeatures<T>) -> bool {
    if f.q_amp == T::zero() && f.q_duration == T::zero() {
        return false;
    }
    f.q_duration >= T::c(Q_DURATION_MS) || f.q_amp.abs() >= T::c(Q_TO_R_RATIO) * f.r_amp
}

/// Poor R-wave progression from V1..V6 R amplitudes (normalised units).
pub fn detect_prwp<T: Real>(r: [T; 6], gain_mm: T) -> bool {
    let mm = |v: T| v * gain_mm;
    let two = T::c(PRWP_R_MM);
    mm(r[2]) <= two || mm(r[3]) <= two || r[4] < r[5] || r[1] < r[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeadGroup {
    Inferior,
    Anterior,
    Lateral,
}

impl LeadGroup {
    pub const ALL: [LeadGroup; 3] = [LeadGroup::Inferior, LeadGroup::Anterior, LeadGroup::Lateral];

    pub fn leads(self) -> &'static [&'static str] {
        match self {
            LeadGroup::Inferior => &["II", "III", "aVF"],
            LeadGroup::Anterior => &["V1", "V2", "V3", "V4"],
            LeadGroup::Lateral => &["I", "aVL", "V5", "V6"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LeadGroup::Inferior => "inferior",
            LeadGroup::Anterior => "anterior",
            LeadGroup::Lateral => "lateral",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrsFeatures<T> {
    /// In [`LEAD_NAMES`] order.
    pub leads: Vec<LeadFeatures<T>>,
    /// At least two leads of one [`LeadGroup`] with a pathological Q.
    pub pathological_q: bool,
    /// Per [`LeadGroup::ALL`]: at least two leads of the group fragmented.
    pub fqrs: [bool; 3],
    pub prwp: bool,
    /// Longest per-lead duration, ms.
    pub duration: T,
}

pub fn qrs_features<T: Real>(rec: &QrsRecording<T>) -> Result<QrsFeatures<T>> {
    if rec.leads.len() != LEAD_NAMES.len() {
        return Err(Error::LeadMismatch);
    }
    let leads: Vec<LeadFeatures<T>> = rec.leads.iter().map(|l| lead_features(l, rec.sample_period)).collect::<Result<_>>()?;
    let idx = |name: &str| LEAD_NAMES.iter().position(|n| *n == name).expect("known lead");
    let in_two = |g: LeadGroup, hit: &dyn Fn(&LeadFeatures<T>) -> bool| {
        g.leads().iter().filter(|n| hit(&leads[idx(n)])).count() >= 2
    };
    let pathological_q = LeadGroup::ALL.iter().any(|&g| in_two(g, &|f| detect_pathological_q(f)));
    let fqrs = LeadGroup::ALL.map(|g| in_two(g, &|f| f.fqrs_count > 0));
    let r = ["V1", "V2", "V3", "V4", "V5", "V6"].map(|n| leads[idx(n)].r_amp);
    let duration = leads.iter().fold(T::zero(), |m, f| m.max(f.duration));
    Ok(QrsFeatures { leads, pathological_q, fqrs, prwp: detect_prwp(r, rec.gain_mm), duration })
}

/// Feature table: a summary row and one row per lead for each scenario.
pub fn write_feature_csv<T: Real, W: Write>(rows: &[(String, QrsFeatures<T>)], mut w: W) -> Result<()> {
    writeln!(
        w,
        "scenario,lead,onset_ms,offset_ms,duration_ms,q_amp,q_duration_ms,r_amp,r_time_ms,s_amp,fqrs_count,pathological_q,fqrs_inferior,fqrs_anterior,fqrs_lateral,prwp"
    )?;
    let f = |v: T| format!("{:.6}", v.to_f64_lossy());
    for (name, feat) in rows {
        writeln!(
            w,
            "{name},ALL,,,{},,,,,,,{},{},{},{},{}",
            f(feat.duration),
            feat.pathological_q as u8,
            feat.fqrs[0] as u8,
            feat.fqrs[1] as u8,
            feat.fqrs[2] as u8,
            feat.prwp as u8
        )?;
        for (l, lf) in LEAD_NAMES.iter().zip(&feat.leads) {
            writeln!(
                w,
                "{name},{l},{},{},{},{},{},{},{},{},{},{},,,,",
                f(lf.onset),
                f(lf.offset),
                f(lf.duration),
                f(lf.q_amp),
                f(lf.q_duration),
                f(lf.r_amp),
                f(lf.r_time),
                f(lf.s_amp),
                lf.fqrs_count,
                detect_pathological_q(lf) as u8
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityReport<T> {
    pub names: Vec<String>,
    /// Per scenario, per lead DTW against the baseline.
    pub per_lead: Vec<Vec<T>>,
    pub dtw_max: Vec<T>,
    pub dtw_avg: Vec<T>,
    /// Baseline followed by `names`.
    pub pairwise_names: Vec<String>,
    /// Mean-over-leads DTW between every pair of `pairwise_names`.
    pub pairwise: Vec<Vec<T>>,
}

fn lead_dtws<T: Real>(a: &QrsRecording<T>, b: &QrsRecording<T>) -> Result<Vec<T>> {
    if a.leads.len() != b.leads.len() {
        return Err(Error::LeadMismatch);
    }
    a.leads.iter().zip(&b.leads).map(|(x, y)| dtw(x, y)).collect()
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::c(v.len().max(1) as f64)
}

pub fn dissimilarity_report<T: Real>(
    baseline: &QrsRecording<T>,
    scenarios: &[(String, QrsRecording<T>)],
) -> Result<DissimilarityReport<T>> {
    let per_lead: Vec<Vec<T>> = scenarios.iter().map(|(_, r)| lead_dtws(baseline, r)).collect::<Result<_>>()?;
    let dtw_max = per_lead.iter().map(|v| v.iter().copied().fold(T::zero(), T::max)).collect();
    let dtw_avg = per_lead.iter().map(|v| mean(v)).collect();
    let all: Vec<&QrsRecording<T>> = std::iter::once(baseline).chain(scenarios.iter().map(|(_, r)| r)).collect();
    let pairwise = pairwise_dtw(&all)?;
    let names: Vec<String> = scenarios.iter().map(|(n, _)| n.clone()).collect();
    let pairwise_names = std::iter::once(BASELINE.to_string()).chain(names.iter().cloned()).collect();
    Ok(DissimilarityReport { names, per_lead, dtw_max, dtw_avg, pairwise_names, pairwise })
}

/// Symmetric matrix of mean-over-leads DTW with a zero diagonal.
pub fn pairwise_dtw<T: Real>(recs: &[&QrsRecording<T>]) -> Result<Vec<Vec<T>>> {
    let n = recs.len();
    let mut out = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = mean(&lead_dtws(recs[i], recs[j])?);
            out[i][j] = d;
            out[j][i] = d;
        }
    }
    Ok(out)
}

impl<T: Real> DissimilarityReport<T> {
    /// `scenario,I,...,V6,dtw_max,dtw_avg`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scenario,{},dtw_max,dtw_avg", LEAD_NAMES.join(","))?;
        for (i, name) in self.names.iter().enumerate() {
            write!(w, "{name}")?;
            for v in self.per_lead[i].iter().chain([&self.dtw_max[i], &self.dtw_avg[i]]) {
                write!(w, ",{:.6}", v.to_f64_lossy())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_pairwise_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scenario,{}", self.pairwise_names.join(","))?;
        for (name, row) in self.pairwise_names.iter().zip(&self.pairwise) {
            write!(w, "{name}")?;
            for v in row {
                write!(w, ",{:.6}", v.to_f64_lossy())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
