use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::rng::rng_from;
use crate::worldsim::{disc_hits_map, OccupancyMap};

/// Probabilistic roadmap over the static map.
#[derive(Debug, Clone, PartialEq)]
pub struct Roadmap {
    pub nodes: Vec<Vec2>,
    /// Adjacency lists `(neighbor, length)`, sorted by neighbor index.
    pub edges: Vec<Vec<(usize, f64)>>,
    pub connect_radius: f64,
    pub robot_radius: f64,
}

impl Roadmap {
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected-component label per node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = next;
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.edges[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Whether the robot disc swept along `a → b` stays collision-free.
pub fn segment_free(map: &OccupancyMap, a: Vec2, b: Vec2, radius: f64) -> bool {
    let len = (b - a).norm();
    let step = map.resolution() * 0.5;
    let n = (len / step).ceil().max(1.0) as usize;
    (0..=n).all(|k| !disc_hits_map(map, a + (b - a) * (k as f64 / n as f64), radius))
}

/// Sample `n_samples` collision-free nodes and connect pairs within
/// `connect_radius` whose straight segment keeps the robot disc free.
pub fn build_prm(map: &OccupancyMap, n_samples: usize, connect_radius: f64, robot_radius: f64, seed: u64) -> Roadmap {
    let mut rng = rng_from(seed);
    let (w, h) = map.extent();
    let mut nodes = Vec::with_capacity(n_samples);
    let max_attempts = n_samples.saturating_mul(200).max(1000);
    let mut attempts = 0;
    while nodes.len() < n_samples && attempts < max_attempts {
        attempts += 1;
        let p = Vec2::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h));
        if !disc_hits_map(map, p, robot_radius) {
            nodes.push(p);
        }
    }
    let mut edges = vec![Vec::new(); nodes.len()];
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let d = (nodes[j] - nodes[i]).norm();
            if d <= connect_radius && segment_free(map, nodes[i], nodes[j], robot_radius) {
                edges[i].push((j, d));
                edges[j].push((i, d));
            }
        }
    }
    for list in &mut edges {
        list.sort_by_key(|e| e.0);
    }
    Roadmap { nodes, edges, connect_radius, robot_radius }
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    path: Vec<usize>,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn attach(roadmap: &Roadmap, map: &OccupancyMap, p: Vec2) -> Vec<(usize, f64)> {
    let mut near: Vec<(usize, f64)> = roadmap
        .nodes
        .iter()
        .enumerate()
        .map(|(i, q)| (i, (q - p).norm()))
        .filter(|&(_, d)| d <= roadmap.connect_radius)
        .filter(|&(i, _)| segment_free(map, p, roadmap.nodes[i], roadmap.robot_radius))
        .collect();
    if near.is_empty() {
        let mut order: Vec<(usize, f64)> =
            roadmap.nodes.iter().enumerate().map(|(i, q)| (i, (q - p).norm())).collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if let Some(&hit) = order.iter().find(|&&(i, _)| segment_free(map, p, roadmap.nodes[i], roadmap.robot_radius)) {
            near.push(hit);
        }
    }
    near
}

/// Shortest path by edge length from `start` to `goal` through the roadmap.
/// Ties are broken toward the lexicographically smallest node sequence.
pub fn plan_path(roadmap: &Roadmap, map: &OccupancyMap, start: Vec2, goal: Vec2) -> Result<Vec<Vec2>> {
    if start == goal {
        return Ok(vec![start]);
    }
    let n = roadmap.nodes.len();
    let (s, g) = (n, n + 1);
    let point = |i: usize| match i {
        i if i == s => start,
        i if i == g => goal,
        i => roadmap.nodes[i],
    };
    let start_links = attach(roadmap, map, start);
    let goal_links = attach(roadmap, map, goal);
    let direct = (goal - start).norm();
    let direct_ok = direct <= roadmap.connect_radius && segment_free(map, start, goal, roadmap.robot_radius);

    let neighbors = |u: usize| -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = if u == s {
            start_links.clone()
        } else if u == g {
            goal_links.clone()
        } else {
            let mut v = roadmap.edges[u].clone();
            if let Some(&(_, d)) = goal_links.iter().find(|e| e.0 == u) {
                v.push((g, d));
            }
            if let Some(&(_, d)) = start_links.iter().find(|e| e.0 == u) {
                v.push((s, d));
            }
            v
        };
        if u == s && direct_ok {
            out.push((g, direct));
        }
        out
    };

    let mut best = vec![f64::INFINITY; n + 2];
    let mut done = vec![false; n + 2];
    let mut heap = BinaryHeap::new();
    best[s] = 0.0;
    heap.push(Reverse(Entry { cost: 0.0, path: vec![s] }));
    while let Some(Reverse(Entry { cost, path })) = heap.pop() {
        let u = *path.last().unwrap();
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == g {
            return Ok(path.into_iter().map(point).collect());
        }
        for (v, len) in neighbors(u) {
            let c = cost + len;
            if !done[v] && c <= best[v] {
                best[v] = c;
                let mut p = path.clone();
                p.push(v);
                heap.push(Reverse(Entry { cost: c, path: p }));
            }
        }
    }
    Err(Error::NoPath)
}
