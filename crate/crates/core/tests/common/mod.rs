#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::OnceLock;

use infarct_qrs::eikonal::EikonalProblem;
use infarct_qrs::fiber::{assign_fibers, FiberFrame};
use infarct_qrs::mesh::{generate_synthetic_biventricle, Mesh, SyntheticParams};
use infarct_qrs::Vec3;

pub struct Fixture {
    pub mesh: Mesh<f64>,
    pub fibers: Vec<FiberFrame<f64>>,
}

fn build(resolution: f64) -> Fixture {
    let mesh = generate_synthetic_biventricle(&SyntheticParams { resolution, ..Default::default() }).unwrap();
    let fibers = assign_fibers(&mesh, 60.0, -60.0).unwrap();
    Fixture { mesh, fibers }
}

/// Resolution 0.4 cm, under 2k nodes.
pub fn coarse() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| build(0.4))
}

/// The default 0.2 cm mesh.
pub fn standard() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| build(0.2))
}

#[derive(PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

pub fn dijkstra(adj: &[Vec<(usize, f64)>], seeds: &[(usize, f64)]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    for &(s, t) in seeds {
        if t < dist[s] {
            dist[s] = t;
            heap.push(Reverse((Key(t), s)));
        }
    }
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    dist
}

fn link(adj: &mut [Vec<(usize, f64)>], a: usize, b: usize, w: f64) {
    adj[a].push((b, w));
    adj[b].push((a, w));
}

/// Mesh edges weighted by the smallest metric length over incident tets, or the fast-layer time when shorter.
pub fn edge_graph_times(mesh: &Mesh<f64>, p: &EikonalProblem<f64>, seeds: &[(usize, f64)]) -> Vec<f64> {
    let mut w: HashMap<(usize, usize), f64> = HashMap::new();
    for (e, tet) in mesh.tets.iter().enumerate() {
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (tet[i].min(tet[j]), tet[i].max(tet[j]));
                let len = p.metrics()[e].norm(&(mesh.nodes[a] - mesh.nodes[b]));
                let slot = w.entry((a, b)).or_insert(f64::INFINITY);
                *slot = slot.min(len);
            }
        }
    }
    let mut adj = vec![Vec::new(); mesh.node_count()];
    for (&(a, b), &len) in &w {
        link(&mut adj, a, b, len.min(p.layer_edge_time(a, b)));
    }
    dijkstra(&adj, seeds)
}

/// Barycentric lattice of denominator `k` in every tet, fully connected within each tet.
///
/// `k = 2` gives vertices plus edge midpoints. Fast-layer edges are split into
/// `k` segments carrying the layer time.
pub fn lattice_graph_times(mesh: &Mesh<f64>, p: &EikonalProblem<f64>, seeds: &[(usize, f64)], k: u32) -> Vec<f64> {
    let n = mesh.node_count();
    let mut ids: HashMap<Vec<(usize, u32)>, usize> = HashMap::new();
    let mut points: Vec<Vec3<f64>> = mesh.nodes.clone();
    for (i, _) in mesh.nodes.iter().enumerate() {
        ids.insert(vec![(i, k)], i);
    }
    let mut id_of = |w: &[(usize, u32)], points: &mut Vec<Vec3<f64>>| -> usize {
        let mut key: Vec<(usize, u32)> = w.iter().copied().filter(|&(_, c)| c > 0).collect();
        key.sort_unstable();
        *ids.entry(key.clone()).or_insert_with(|| {
            let x = key.iter().fold(Vec3::zero(), |acc, &(v, c)| acc + mesh.nodes[v] * (c as f64 / k as f64));
            points.push(x);
            points.len() - 1
        })
    };
    let mut tet_points: Vec<Vec<usize>> = Vec::with_capacity(mesh.tet_count());
    for tet in &mesh.tets {
        let mut local = Vec::new();
        for a in 0..=k {
            for b in 0..=k - a {
                for c in 0..=k - a - b {
                    let d = k - a - b - c;
                    local.push(id_of(&[(tet[0], a), (tet[1], b), (tet[2], c), (tet[3], d)], &mut points));
                }
            }
        }
        tet_points.push(local);
    }
    let mut edges_done: HashMap<(usize, usize), ()> = HashMap::new();
    let mut adj = vec![Vec::new(); points.len()];
    for (e, local) in tet_points.iter().enumerate() {
        for i in 0..local.len() {
            for j in i + 1..local.len() {
                let len = p.metrics()[e].norm(&(points[local[i]] - points[local[j]]));
                link(&mut adj, local[i], local[j], len);
            }
        }
        let tet = mesh.tets[e];
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (tet[i].min(tet[j]), tet[i].max(tet[j]));
                if edges_done.insert((a, b), ()).is_some() {
                    continue;
                }
                let seg = p.layer_edge_time(a, b) / k as f64;
                if !seg.is_finite() {
                    continue;
                }
                let chain: Vec<usize> = (0..=k).map(|c| id_of(&[(a, k - c), (b, c)], &mut points)).collect();
                for w in chain.windows(2) {
                    link(&mut adj, w[0], w[1], seg);
                }
            }
        }
    }
    let mut t = dijkstra(&adj, seeds);
    t.truncate(n);
    t
}

/// Vertices plus edge midpoints, fully connected within each tet; fast-layer edges split in two halves.
pub fn refined_graph_times(mesh: &Mesh<f64>, p: &EikonalProblem<f64>, seeds: &[(usize, f64)]) -> Vec<f64> {
    let n = mesh.node_count();
    let mut points: Vec<Vec3<f64>> = mesh.nodes.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    for tet in &mesh.tets {
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (tet[i].min(tet[j]), tet[i].max(tet[j]));
                mid.entry((a, b)).or_insert_with(|| {
                    points.push((mesh.nodes[a] + mesh.nodes[b]) * 0.5);
                    points.len() - 1
                });
            }
        }
    }
    let mut adj = vec![Vec::new(); points.len()];
    for (e, tet) in mesh.tets.iter().enumerate() {
        let mut local: Vec<usize> = tet.to_vec();
        for i in 0..4 {
            for j in i + 1..4 {
                local.push(mid[&(tet[i].min(tet[j]), tet[i].max(tet[j]))]);
            }
        }
        for i in 0..local.len() {
            for j in i + 1..local.len() {
                let len = p.metrics()[e].norm(&(points[local[i]] - points[local[j]]));
                link(&mut adj, local[i], local[j], len);
            }
        }
    }
    for (&(a, b), &m) in &mid {
        let half = 0.5 * p.layer_edge_time(a, b);
        if half.is_finite() {
            link(&mut adj, a, m, half);
            link(&mut adj, m, b, half);
        }
    }
    let mut t = dijkstra(&adj, seeds);
    t.truncate(n);
    t
}
