//! Ellipsoidal infarct regions in ventricular coordinates and the resulting
//! conduction-velocity fields.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::FiberFrame;
use crate::mesh::aha::AhaSegmentId;
use crate::mesh::coords::rt_distance;
use crate::mesh::{CobivecoCoord, EndoLayer, Mesh, Side};
use crate::num::Real;

pub const DEFAULT_BORDER_SCALE: f64 = 1.3;
pub const DEFAULT_REDUCTION: CvReduction = CvReduction { scar: 0.10, border: 0.50 };
pub const ALTERNATIVE_REDUCTION: CvReduction = CvReduction { scar: 0.05, border: 0.25 };
/// Radius factor of the small lateral variants.
pub const SMALL_SIZE_FACTOR: f64 = 0.6;
pub const BASELINE: &str = "baseline";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Core,
    Border,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Healthy,
    Border,
    Scar,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Healthy => "healthy",
            Zone::Border => "border",
            Zone::Scar => "scar",
        }
    }
}

/// Ellipsoid in `(tm, ab, rt)` with a concentric border shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfarctRegion<T> {
    pub center: [T; 3],
    pub radii: [T; 3],
    pub border_scale: T,
}

impl<T: Real> InfarctRegion<T> {
    pub fn new(center: [T; 3], radii: [T; 3], border_scale: T) -> Result<Self> {
        let r = InfarctRegion { center, radii, border_scale };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.radii.iter().all(|&r| r > T::zero() && r.is_finite()) {
            return Err(Error::Parameter { name: "radii", reason: "all radii must be positive".into() });
        }
        if !(self.border_scale >= T::one()) || !self.border_scale.is_finite() {
            return Err(Error::Parameter { name: "border_scale", reason: "must be >= 1".into() });
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::Parameter { name: "center", reason: "must be finite".into() });
        }
        Ok(())
    }

    /// `Σ((cᵢ − c0ᵢ)/(s·rᵢ))²` with the rt difference taken modulo 1.
    pub fn quadratic_form(&self, c: &CobivecoCoord<T>, scale: T) -> T {
        let d = [c.tm - self.center[0], c.ab - self.center[1], rt_distance(c.rt, self.center[2])];
        (0..3).map(|i| (d[i] / (self.radii[i] * scale)).powi(2)).sum()
    }

    pub fn scaled(&self, factor: T) -> Self {
        InfarctRegion { radii: self.radii.map(|r| r * factor), ..*self }
    }
}

pub fn in_region<T: Real>(c: &CobivecoCoord<T>, r: &InfarctRegion<T>) -> Membership {
    if r.quadratic_form(c, T::one()) <= T::one() {
        Membership::Core
    } else if r.quadratic_form(c, r.border_scale) <= T::one() {
        Membership::Border
    } else {
        Membership::Outside
    }
}

/// Zone of a coordinate under a region list; regions only act on the LV.
pub fn zone_of<T: Real>(c: &CobivecoCoord<T>, regions: &[InfarctRegion<T>]) -> Zone {
    if c.side != Side::Lv {
        return Zone::Healthy;
    }
    let mut zone = Zone::Healthy;
    for r in regions {
        match in_region(c, r) {
            Membership::Core => return Zone::Scar,
            Membership::Border => zone = Zone::Border,
            Membership::Outside => {}
        }
    }
    zone
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Septal,
    Apical,
    ExtAnterior,
    LimAnterior,
    Lateral,
    Inferior,
    Inferolateral,
}

impl Location {
    pub const ALL: [Location; 7] = [
        Location::Septal,
        Location::Apical,
        Location::ExtAnterior,
        Location::LimAnterior,
        Location::Lateral,
        Location::Inferior,
        Location::Inferolateral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Location::Septal => "septal",
            Location::Apical => "apical",
            Location::ExtAnterior => "ext_anterior",
            Location::LimAnterior => "lim_anterior",
            Location::Lateral => "lateral",
            Location::Inferior => "inferior",
            Location::Inferolateral => "inferolateral",
        }
    }

    /// AHA segments of the coronary territory.
    pub fn segments(self) -> &'static [u8] {
        match self {
            Location::Septal => &[2, 3, 8, 9, 14],
            Location::Apical => &[13, 14, 15, 16, 17],
            Location::ExtAnterior => &[1, 2, 7, 8, 13, 14, 17],
            Location::LimAnterior => &[1, 7, 13],
            Location::Lateral => &[5, 6, 11, 12, 16],
            Location::Inferior => &[4, 10, 15],
            Location::Inferolateral => &[4, 5, 10, 11, 15, 16],
        }
    }

    pub fn contains(self, seg: AhaSegmentId) -> bool {
        self.segments().contains(&seg.get())
    }

    /// `(ab0, rt0, ab_r, rt_r)`.
    fn footprint(self) -> [f64; 4] {
        match self {
            Location::Septal => [0.75, 5.0 / 6.0, 0.4, 0.16],
            Location::Apical => [0.1, 0.0, 0.25, 1.0],
            Location::ExtAnterior => [0.4, 4.0 / 6.0, 0.4, 0.16],
            Location::LimAnterior => [0.4, 7.0 / 12.0, 0.2, 0.08],
            Location::Lateral => [0.6, 0.37, 0.4, 0.125],
            Location::Inferior => [0.55, 1.0 / 12.0, 0.44, 0.08],
            Location::Inferolateral => [0.55, 1.0 / 6.0, 0.44, 0.16],
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extent {
    Transmural,
    Subendocardial,
}

impl Extent {
    pub fn as_str(self) -> &'static str {
        match self {
            Extent::Transmural => "transmural",
            Extent::Subendocardial => "subendocardial",
        }
    }

    /// Scale of the `ab`/`rt` radii relative to the location footprint.
    ///
    /// A transmural ellipsoid narrows towards the endocardium; the
    /// subendocardial one is shrunk so both share the same cross-section at
    /// `tm = 1`, which nests it inside the transmural region.
    pub fn footprint_factor(self) -> f64 {
        match self {
            Extent::Transmural => 1.0,
            Extent::Subendocardial => {
                let (tm0, tm_r) = Extent::Transmural.transmural_span();
                (1.0 - ((1.0 - tm0) / tm_r).powi(2)).sqrt()
            }
        }
    }

    /// `(tm0, tm_r)`.
    pub fn transmural_span(self) -> (f64, f64) {
        match self {
            Extent::Transmural => (0.5, 0.55),
            Extent::Subendocardial => (1.0, 0.5),
        }
    }
}

/// Speed fractions applied in the scar core and border zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvReduction {
    pub scar: f64,
    pub border: f64,
}

impl CvReduction {
    pub fn validate(&self) -> Result<()> {
        let ok = self.scar > 0.0 && self.scar <= self.border && self.border <= 1.0;
        if !ok {
            return Err(Error::Parameter {
                name: "cv_reduction",
                reason: format!("need 0 < scar <= border <= 1, got ({}, {})", self.scar, self.border),
            });
        }
        Ok(())
    }

    pub fn fraction(&self, zone: Zone) -> f64 {
        match zone {
            Zone::Healthy => 1.0,
            Zone::Border => self.border,
            Zone::Scar => self.scar,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec<T> {
    pub name: String,
    /// `None` for the baseline.
    pub location: Option<Location>,
    pub extent: Option<Extent>,
    pub regions: Vec<InfarctRegion<T>>,
    pub cv_reduction: CvReduction,
}

impl<T: Real> ScenarioSpec<T> {
    pub fn baseline() -> Self {
        ScenarioSpec {
            name: BASELINE.into(),
            location: None,
            extent: None,
            regions: Vec::new(),
            cv_reduction: CvReduction { scar: 1.0, border: 1.0 },
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.cv_reduction.validate()?;
        self.regions.iter().try_for_each(|r| r.validate())
    }
}

/// Catalogue constants, overridable from an experiment config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogueParams {
    pub reduction: CvReduction,
    pub alternative_reduction: CvReduction,
    pub small_size_factor: f64,
    pub border_scale: f64,
}

impl Default for CatalogueParams {
    fn default() -> Self {
        CatalogueParams {
            reduction: DEFAULT_REDUCTION,
            alternative_reduction: ALTERNATIVE_REDUCTION,
            small_size_factor: SMALL_SIZE_FACTOR,
            border_scale: DEFAULT_BORDER_SCALE,
        }
    }
}

impl CatalogueParams {
    pub fn validate(&self) -> Result<()> {
        self.reduction.validate()?;
        self.alternative_reduction.validate()?;
        if !(self.small_size_factor > 0.0 && self.small_size_factor <= 1.0) {
            return Err(Error::Parameter { name: "small_size_factor", reason: format!("{} not in (0, 1]", self.small_size_factor) });
        }
        if !(self.border_scale >= 1.0) || !self.border_scale.is_finite() {
            return Err(Error::Parameter { name: "border_scale", reason: format!("{} < 1", self.border_scale) });
        }
        Ok(())
    }
}

fn scenario<T: Real>(loc: Location, ext: Extent, size: f64, red: CvReduction, border: f64, suffix: &str) -> ScenarioSpec<T> {
    let [ab0, rt0, ab_r, rt_r] = loc.footprint();
    let (tm0, tm_r) = ext.transmural_span();
    let size = size * ext.footprint_factor();
    let region = InfarctRegion {
        center: [T::c(tm0), T::c(ab0), T::c(rt0)],
        radii: [T::c(tm_r), T::c(ab_r * size), T::c(rt_r * size)],
        border_scale: T::c(border),
    };
    ScenarioSpec {
        name: format!("{}{}_{}", loc.as_str(), suffix, ext.as_str()),
        location: Some(loc),
        extent: Some(ext),
        regions: vec![region],
        cv_reduction: red,
    }
}

/// Baseline followed by the 17 infarct scenarios, in canonical order.
pub fn catalogue<T: Real>() -> Vec<ScenarioSpec<T>> {
    catalogue_with(&CatalogueParams::default())
}

pub fn catalogue_with<T: Real>(p: &CatalogueParams) -> Vec<ScenarioSpec<T>> {
    let b = p.border_scale;
    let mut out = vec![ScenarioSpec::baseline()];
    for loc in Location::ALL {
        for ext in [Extent::Transmural, Extent::Subendocardial] {
            out.push(scenario(loc, ext, 1.0, p.reduction, b, ""));
        }
    }
    for ext in [Extent::Transmural, Extent::Subendocardial] {
        out.push(scenario(Location::Lateral, ext, p.small_size_factor, p.reduction, b, "_small"));
    }
    out.push(scenario(Location::Lateral, Extent::Transmural, 1.0, p.alternative_reduction, b, "_altcv"));
    out
}

pub fn catalogue_report<T: Real>(specs: &[ScenarioSpec<T>]) -> String {
    let mut s = String::from("name\tcenter(tm,ab,rt)\tradii(tm,ab,rt)\tborder_scale\tscar\tborder\n");
    for spec in specs {
        if spec.regions.is_empty() {
            s.push_str(&format!("{}\t-\t-\t-\t1\t1\n", spec.name));
        }
        for r in &spec.regions {
            let v = |a: [T; 3]| format!("{:.4},{:.4},{:.4}", a[0], a[1], a[2]);
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                spec.name,
                v(r.center),
                v(r.radii),
                r.border_scale,
                spec.cv_reduction.scar,
                spec.cv_reduction.border
            ));
        }
    }
    s
}

/// Healthy speeds in cm/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaseCv {
    pub fiber: f64,
    pub sheet: f64,
    pub normal: f64,
    pub endo_sparse: f64,
    pub endo_dense: f64,
}

impl Default for BaseCv {
    fn default() -> Self {
        BaseCv { fiber: 65.0, sheet: 48.0, normal: 51.0, endo_sparse: 100.0, endo_dense: 150.0 }
    }
}

impl BaseCv {
    pub fn validate(&self) -> Result<()> {
        let all = [self.fiber, self.sheet, self.normal, self.endo_sparse, self.endo_dense];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Velocity(format!("base speeds must be positive, got {all:?}")))
        }
    }
}

/// Per-element orthotropic speeds and per-node endocardial overrides, cm/s.
#[derive(Debug, Clone, PartialEq)]
pub struct CvField<T> {
    /// `(v_f, v_s, v_n)` per element.
    pub speeds: Vec<[T; 3]>,
    /// Isotropic fast-layer speed for nodes in the endocardial layer.
    pub endo_speed: Vec<Option<T>>,
    pub zones: Vec<Zone>,
    /// Fibre frames the speeds refer to.
    pub frames: Vec<FiberFrame<T>>,
}

impl<T: Real> CvField<T> {
    pub fn validate(&self, mesh: &Mesh<T>) -> Result<()> {
        if self.speeds.len() != mesh.tet_count() || self.frames.len() != mesh.tet_count() {
            return Err(Error::LengthMismatch { expected: mesh.tet_count(), got: self.speeds.len() });
        }
        if self.endo_speed.len() != mesh.node_count() {
            return Err(Error::LengthMismatch { expected: mesh.node_count(), got: self.endo_speed.len() });
        }
        let bad = |v: T| !(v > T::zero()) || !v.is_finite();
        if let Some(i) = self.speeds.iter().position(|s| s.iter().any(|&v| bad(v))) {
            return Err(Error::Velocity(format!("element {i} has non-positive speed {:?}", self.speeds[i])));
        }
        if let Some(i) = self.endo_speed.iter().position(|s| s.is_some_and(bad)) {
            return Err(Error::Velocity(format!("node {i} has non-positive endocardial speed")));
        }
        Ok(())
    }
}

pub fn build_cv_field<T: Real>(
    mesh: &Mesh<T>,
    fibers: &[FiberFrame<T>],
    spec: &ScenarioSpec<T>,
    base: &BaseCv,
) -> Result<CvField<T>> {
    spec.validate()?;
    base.validate()?;
    if fibers.len() != mesh.tet_count() {
        return Err(Error::LengthMismatch { expected: mesh.tet_count(), got: fibers.len() });
    }
    let healthy = [T::c(base.fiber), T::c(base.sheet), T::c(base.normal)];
    let frac = |z: Zone| T::c(spec.cv_reduction.fraction(z));
    let zones: Vec<Zone> = (0..mesh.tet_count()).map(|i| zone_of(&mesh.element_coord(i), &spec.regions)).collect();
    let speeds = zones
        .iter()
        .map(|&z| match z {
            Zone::Healthy => healthy,
            _ => healthy.map(|v| frac(z) * v),
        })
        .collect();
    let endo_speed = mesh
        .endo_layer
        .iter()
        .zip(&mesh.coords)
        .map(|(layer, c)| {
            let v = match layer {
                EndoLayer::None => return None,
                EndoLayer::Sparse => T::c(base.endo_sparse),
                EndoLayer::Dense => T::c(base.endo_dense),
            };
            Some(match zone_of(c, &spec.regions) {
                Zone::Healthy => v,
                z => frac(z) * v,
            })
        })
        .collect();
    let field = CvField { speeds, endo_speed, zones, frames: fibers.to_vec() };
    field.validate(mesh)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::assign_fibers;
    use crate::mesh::aha::aha_segment;
    use crate::mesh::synthetic::{generate_synthetic_biventricle, SyntheticParams};
    use std::collections::HashSet;
    use std::sync::OnceLock;

    fn coord(tm: f64, ab: f64, rt: f64) -> CobivecoCoord<f64> {
        CobivecoCoord { tm, ab, rt, side: Side::Lv }
    }

    fn region(center: [f64; 3], radii: [f64; 3]) -> InfarctRegion<f64> {
        InfarctRegion::new(center, radii, 1.3).unwrap()
    }

    #[test]
    fn center_and_boundary_are_core() {
        let r = region([0.5, 0.5, 0.5], [0.2, 0.2, 0.2]);
        assert_eq!(in_region(&coord(0.5, 0.5, 0.5), &r), Membership::Core);
        assert_eq!(in_region(&coord(0.75, 0.5, 0.5), &r), Membership::Border);
        let edge = region([0.25, 0.5, 0.5], [0.5, 0.2, 0.2]);
        assert_eq!(in_region(&coord(0.75, 0.5, 0.5), &edge), Membership::Core);
        assert_eq!(in_region(&coord(0.5, 0.9, 0.5), &r), Membership::Outside);
    }

    #[test]
    fn rt_wraps_around() {
        let r = region([0.5, 0.5, 0.05], [0.2, 0.2, 0.1]);
        let c = coord(0.5, 0.5, 0.97);
        // Brute force over shifted copies of the point.
        let q = [-1.0, 0.0, 1.0]
            .iter()
            .map(|s| ((c.rt + s - 0.05) / 0.1f64).powi(2))
            .fold(f64::INFINITY, f64::min);
        assert!((q - 0.64).abs() < 1e-12);
        assert!((r.quadratic_form(&c, 1.0) - q).abs() < 1e-12);
        assert_eq!(in_region(&c, &r), Membership::Core);
    }

    #[test]
    fn invalid_regions_are_rejected() {
        assert!(InfarctRegion::new([0.5; 3], [0.0, 0.1, 0.1], 1.3).is_err());
        assert!(InfarctRegion::new([0.5; 3], [0.1; 3], 0.9).is_err());
        assert!(CvReduction { scar: 0.6, border: 0.5 }.validate().is_err());
    }

    #[test]
    fn rv_coordinates_are_never_scarred() {
        let r = region([0.5, 0.5, 0.5], [1.0, 1.0, 1.0]);
        let mut c = coord(0.5, 0.5, 0.5);
        assert_eq!(zone_of(&c, &[r]), Zone::Scar);
        c.side = Side::Rv;
        assert_eq!(zone_of(&c, &[r]), Zone::Healthy);
    }

    #[test]
    fn catalogue_has_eighteen_unique_entries() {
        let cat = catalogue::<f64>();
        assert_eq!(cat.len(), 18);
        let names: HashSet<_> = cat.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names.len(), 18);
        assert_eq!(cat.iter().filter(|s| s.is_baseline()).count(), 1);
        let alt = cat.iter().find(|s| s.name == "lateral_altcv_transmural").unwrap();
        assert_eq!(alt.cv_reduction, CvReduction { scar: 0.05, border: 0.25 });
        for s in &cat {
            s.validate().unwrap();
        }
    }

    #[test]
    fn transmural_spans() {
        for s in catalogue::<f64>().iter().filter(|s| !s.is_baseline()) {
            let r = &s.regions[0];
            let (lo, hi) = (r.center[0] - r.radii[0], r.center[0] + r.radii[0]);
            match s.extent.unwrap() {
                Extent::Transmural => assert!(lo <= 0.0 && hi >= 1.0),
                Extent::Subendocardial => assert!((lo - 0.5).abs() < 1e-12 && hi >= 1.0),
            }
        }
    }

    #[test]
    fn regions_stay_in_their_territory() {
        // Dense grid over (tm, ab, rt); every core point must map to a territory segment.
        for s in catalogue::<f64>().iter().filter(|s| !s.is_baseline()) {
            let loc = s.location.unwrap();
            let mut hits = 0;
            for i in 0..=20 {
                for j in 0..=200 {
                    for k in 0..400 {
                        let c = coord(i as f64 / 20.0, j as f64 / 200.0, k as f64 / 400.0);
                        if in_region(&c, &s.regions[0]) != Membership::Core {
                            continue;
                        }
                        hits += 1;
                        let seg = aha_segment(&c).unwrap();
                        assert!(loc.contains(seg), "{}: {c:?} in segment {}", s.name, seg.get());
                    }
                }
            }
            assert!(hits > 100, "{} too small", s.name);
        }
    }

    fn fixture() -> &'static (Mesh<f64>, Vec<FiberFrame<f64>>) {
        static F: OnceLock<(Mesh<f64>, Vec<FiberFrame<f64>>)> = OnceLock::new();
        F.get_or_init(|| {
            let m = generate_synthetic_biventricle(&SyntheticParams { resolution: 0.3, ..Default::default() }).unwrap();
            let f = assign_fibers(&m, 60.0, -60.0).unwrap();
            (m, f)
        })
    }

    #[test]
    fn baseline_field_is_healthy() {
        let (m, f) = fixture();
        let cv = build_cv_field(m, f, &ScenarioSpec::baseline(), &BaseCv::default()).unwrap();
        assert!(cv.zones.iter().all(|&z| z == Zone::Healthy));
        assert!(cv.speeds.iter().all(|s| *s == [65.0, 48.0, 51.0]));
        for (l, v) in m.endo_layer.iter().zip(&cv.endo_speed) {
            let want = match l {
                EndoLayer::None => None,
                EndoLayer::Sparse => Some(100.0),
                EndoLayer::Dense => Some(150.0),
            };
            assert_eq!(*v, want);
        }
    }

    #[test]
    fn scaled_speeds_are_exact() {
        let (m, f) = fixture();
        let base = BaseCv::default();
        let healthy = build_cv_field(m, f, &ScenarioSpec::baseline(), &base).unwrap();
        for spec in catalogue::<f64>() {
            let cv = build_cv_field(m, f, &spec, &base).unwrap();
            for (i, z) in cv.zones.iter().enumerate() {
                let k = spec.cv_reduction.fraction(*z);
                for d in 0..3 {
                    assert!((cv.speeds[i][d] - k * healthy.speeds[i][d]).abs() < 1e-12);
                }
            }
            if !spec.is_baseline() {
                assert!(cv.zones.contains(&Zone::Scar), "{} has no scar", spec.name);
                assert!(cv.zones.contains(&Zone::Border), "{} has no border", spec.name);
            }
        }
        let lat = catalogue::<f64>().into_iter().find(|s| s.name == "lateral_transmural").unwrap();
        let cv = build_cv_field(m, f, &lat, &base).unwrap();
        let i = cv.zones.iter().position(|&z| z == Zone::Scar).unwrap();
        let want = [6.5, 4.8, 5.1];
        assert!((0..3).all(|d| (cv.speeds[i][d] - want[d]).abs() < 1e-12));
        let alt = catalogue::<f64>().into_iter().find(|s| s.name == "lateral_altcv_transmural").unwrap();
        let cv = build_cv_field(m, f, &alt, &base).unwrap();
        let i = cv.zones.iter().position(|&z| z == Zone::Border).unwrap();
        let want = [16.25, 12.0, 12.75];
        assert!((0..3).all(|d| (cv.speeds[i][d] - want[d]).abs() < 1e-12));
    }

    #[test]
    fn border_never_inside_core_along_rays() {
        // Walk outwards from the centre of each region; zones may only degrade.
        for s in catalogue::<f64>().iter().filter(|s| !s.is_baseline()) {
            let r = &s.regions[0];
            for dir in 0..24 {
                let th = dir as f64 / 24.0 * std::f64::consts::TAU;
                let mut last = Zone::Scar;
                for step in 0..60 {
                    let t = step as f64 / 30.0;
                    if (t * r.radii[2] * th.sin()).abs() > 0.5 {
                        break;
                    }
                    let c = coord(r.center[0], r.center[1] + t * r.radii[1] * th.cos(), r.center[2] + t * r.radii[2] * th.sin());
                    let c = CobivecoCoord { rt: crate::mesh::coords::wrap_rt(c.rt), ..c };
                    let z = zone_of(&c, &s.regions);
                    assert!(z <= last, "{}: zone rose along ray", s.name);
                    last = z;
                }
            }
        }
    }

    #[test]
    fn rejects_bad_base_speeds() {
        let (m, f) = fixture();
        let base = BaseCv { sheet: 0.0, ..Default::default() };
        assert!(matches!(build_cv_field(m, f, &ScenarioSpec::baseline(), &base), Err(Error::Velocity(_))));
    }
}
