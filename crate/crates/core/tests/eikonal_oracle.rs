mod common;

use infarct_qrs::eikonal::{default_roots, snap_roots, EikonalProblem};
use infarct_qrs::fiber::FiberFrame;
use infarct_qrs::mesh::synthetic::voxel_block;
use infarct_qrs::scenario::{build_cv_field, catalogue, BaseCv, CvField, Zone};
use infarct_qrs::{Mesh64, Vec3};

fn axis_frames(n: usize) -> Vec<FiberFrame<f64>> {
    let f = FiberFrame { f: Vec3::new(1.0, 0.0, 0.0), s: Vec3::new(0.0, 1.0, 0.0), n: Vec3::new(0.0, 0.0, 1.0) };
    vec![f; n]
}

fn uniform(mesh: &Mesh64, speeds: [f64; 3]) -> CvField<f64> {
    let n = mesh.tet_count();
    CvField {
        speeds: vec![speeds; n],
        endo_speed: vec![None; mesh.node_count()],
        zones: vec![Zone::Healthy; n],
        frames: axis_frames(n),
    }
}

fn min_ratio(a: &[f64], b: &[f64]) -> f64 {
    (0..a.len()).filter(|&i| b[i] > 0.0).map(|i| a[i] / b[i]).fold(f64::INFINITY, f64::min)
}

fn max_ratio(a: &[f64], b: &[f64]) -> f64 {
    (0..a.len()).filter(|&i| b[i] > 0.0).map(|i| a[i] / b[i]).fold(0.0, f64::max)
}

fn lowest_corner(mesh: &Mesh64) -> usize {
    (0..mesh.node_count()).min_by(|&a, &b| mesh.nodes[a].0.iter().sum::<f64>().total_cmp(&mesh.nodes[b].0.iter().sum())).unwrap()
}

#[test]
fn solver_never_exceeds_the_edge_graph() {
    let f = common::coarse();
    assert!(f.mesh.node_count() <= 2000);
    let seeds: Vec<(usize, f64)> = snap_roots(&f.mesh, &default_roots()).unwrap().into_iter().map(|i| (i, 0.0)).collect();
    for spec in catalogue::<f64>() {
        let cv = build_cv_field(&f.mesh, &f.fibers, &spec, &BaseCv::default()).unwrap();
        let p = EikonalProblem::new(&f.mesh, &cv).unwrap();
        let t = p.solve_seeds(&seeds).unwrap().times;
        let upper = common::edge_graph_times(&f.mesh, &p, &seeds);
        let over = (0..t.len()).map(|i| t[i] - upper[i]).fold(f64::NEG_INFINITY, f64::max);
        assert!(over <= 1e-6, "{}: exceeds edge graph by {over}", spec.name);
    }
}

#[test]
fn lattice_of_order_two_is_the_refined_graph() {
    let f = common::coarse();
    let spec = &catalogue::<f64>()[9];
    let cv = build_cv_field(&f.mesh, &f.fibers, spec, &BaseCv::default()).unwrap();
    let p = EikonalProblem::new(&f.mesh, &cv).unwrap();
    let seeds = [(0, 0.0), (f.mesh.node_count() / 2, 3.0)];
    let a = common::refined_graph_times(&f.mesh, &p, &seeds);
    let b = common::lattice_graph_times(&f.mesh, &p, &seeds, 2);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    let fine = common::lattice_graph_times(&f.mesh, &p, &seeds, 4);
    assert!(fine.iter().zip(&a).all(|(x, y)| *x <= y + 1e-9));
}

#[test]
fn homogeneous_blocks_are_bracketed() {
    let mesh = voxel_block::<f64>([8, 8, 8], 0.25).unwrap();
    for speeds in [[100.0; 3], [100.0, 40.0, 40.0], [65.0, 48.0, 51.0]] {
        let cv = uniform(&mesh, speeds);
        let p = EikonalProblem::new(&mesh, &cv).unwrap();
        let seeds = [(lowest_corner(&mesh), 0.0), (mesh.node_count() / 3, 1.5)];
        let t = p.solve_seeds(&seeds).unwrap().times;
        let upper = common::edge_graph_times(&mesh, &p, &seeds);
        let lower = common::refined_graph_times(&mesh, &p, &seeds);
        assert!(t.iter().zip(&upper).all(|(a, b)| *a <= b + 1e-6), "{speeds:?}");
        assert!(min_ratio(&t, &lower) >= 0.9, "{speeds:?}: {}", min_ratio(&t, &lower));
    }
}

#[test]
fn fast_sheet_matches_the_head_wave() {
    let mesh = voxel_block::<f64>([10, 10, 6], 0.25).unwrap();
    let (vb, vf) = (50.0, 150.0);
    let o = mesh.nodes[lowest_corner(&mesh)];
    let mut cv = uniform(&mesh, [vb; 3]);
    cv.endo_speed = mesh.nodes.iter().map(|p| ((p.z() - o.z()).abs() < 1e-9).then_some(vf)).collect();
    let p = EikonalProblem::new(&mesh, &cv).unwrap();
    let seeds = [(lowest_corner(&mesh), 0.0)];
    let t = p.solve_seeds(&seeds).unwrap().times;
    let k = (1.0 / (vb * vb) - 1.0 / (vf * vf)).sqrt();
    let truth: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|x| {
            let d = *x - o;
            let rho = d.x().hypot(d.y());
            let direct = d.norm() / vb;
            let head = if rho * k >= d.z() / vf { rho / vf + d.z() * k } else { f64::INFINITY };
            direct.min(head) * 1e3
        })
        .collect();
    assert!(min_ratio(&t, &truth) >= 1.0 - 1e-9, "{}", min_ratio(&t, &truth));
    assert!(max_ratio(&t, &truth) < 1.1, "{}", max_ratio(&t, &truth));
}

fn inclusion_probe(n: [usize; 3], h: f64) -> f64 {
    let mesh = voxel_block::<f64>(n, h).unwrap();
    let c0 = mesh.nodes.iter().fold(Vec3::zero(), |a, p| a + *p) / mesh.node_count() as f64;
    let mut cv = uniform(&mesh, [65.0, 48.0, 51.0]);
    for e in 0..mesh.tet_count() {
        let c = mesh.centroid(e) - c0;
        if c.x().abs() < 0.5 && c.y().abs() < 0.5 {
            cv.speeds[e] = [6.5, 4.8, 5.1];
        }
    }
    let t = EikonalProblem::new(&mesh, &cv).unwrap().solve_seeds(&[(lowest_corner(&mesh), 0.0)]).unwrap().times;
    let target = c0 + Vec3::new(0.0, 0.25, 0.0);
    let i = (0..mesh.node_count()).min_by(|&a, &b| (mesh.nodes[a] - target).norm().total_cmp(&(mesh.nodes[b] - target).norm())).unwrap();
    t[i]
}

#[test]
fn slow_inclusion_converges_under_refinement() {
    let coarse = inclusion_probe([8, 8, 4], 0.25);
    let mid = inclusion_probe([16, 16, 8], 0.125);
    let fine = inclusion_probe([24, 24, 12], 0.25 / 3.0);
    assert!((fine - mid).abs() < (fine - coarse).abs() / 4.0, "{coarse} {mid} {fine}");
}
