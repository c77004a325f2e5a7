use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::space::{GeodesicSpace, SpaceDescriptor};
use crate::error::{Error, Result};

/// A point on a metric tree: `offset` along edge `edge`, measured from the
/// edge's first endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreePoint {
    pub edge: usize,
    pub offset: f64,
}

/// Adjacency-list description, `adjacency[v] = [(neighbor, weight), ...]`,
/// the JSON fixture format.
pub type Adjacency = Vec<Vec<(usize, f64)>>;

/// A finite weighted tree viewed as a geodesic metric space (an R-tree).
#[derive(Debug, Clone)]
pub struct TreeSpace {
    edges: Vec<(usize, usize, f64)>,
    /// `vertex_dist[u * n + v]`
    vertex_dist: Vec<f64>,
    /// `next_hop[u * n + v]`: the neighbor of `u` on the path to `v`.
    next_hop: Vec<usize>,
    /// `edge_of[u * n + v]` for adjacent `u`, `v`.
    edge_index: Vec<Option<usize>>,
    cumulative: Vec<f64>,
}

pub fn tree_metric(adjacency: &Adjacency) -> Result<TreeSpace> {
    TreeSpace::from_adjacency(adjacency)
}

impl TreeSpace {
    pub fn from_adjacency(adjacency: &Adjacency) -> Result<Self> {
        let n = adjacency.len();
        if n < 2 {
            return Err(Error::domain("a tree needs at least two vertices"));
        }
        let mut edges = Vec::new();
        let mut edge_index = vec![None; n * n];
        for (u, list) in adjacency.iter().enumerate() {
            for &(v, w) in list {
                if v >= n {
                    return Err(Error::domain(format!("vertex {u} lists unknown neighbor {v}")));
                }
                if v == u {
                    return Err(Error::domain(format!("self-loop at vertex {u}")));
                }
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::domain(format!("edge {u}-{v} has weight {w}; weights must be > 0")));
                }
                let back = adjacency[v].iter().find(|(x, _)| *x == u);
                match back {
                    Some(&(_, wb)) if wb == w => {}
                    Some(&(_, wb)) => {
                        return Err(Error::domain(format!("edge {u}-{v} has weights {w} and {wb}")));
                    }
                    None => return Err(Error::domain(format!("edge {u}-{v} is not listed at vertex {v}"))),
                }
                if u < v {
                    if edge_index[u * n + v].is_some() {
                        return Err(Error::domain(format!("edge {u}-{v} is listed twice")));
                    }
                    edge_index[u * n + v] = Some(edges.len());
                    edge_index[v * n + u] = Some(edges.len());
                    edges.push((u, v, w));
                }
            }
        }
        let mut vertex_dist = vec![f64::INFINITY; n * n];
        let mut next_hop = vec![usize::MAX; n * n];
        for root in 0..n {
            vertex_dist[root * n + root] = 0.0;
            next_hop[root * n + root] = root;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &(v, w) in &adjacency[u] {
                    if vertex_dist[root * n + v].is_infinite() {
                        vertex_dist[root * n + v] = vertex_dist[root * n + u] + w;
                        next_hop[root * n + v] = if u == root { v } else { next_hop[root * n + u] };
                        queue.push_back(v);
                    }
                }
            }
        }
        if let Some(v) = (0..n).find(|&v| vertex_dist[v].is_infinite()) {
            return Err(Error::domain(format!("the tree is disconnected: vertex {v} is unreachable from 0")));
        }
        if edges.len() != n - 1 {
            return Err(Error::domain(format!(
                "{} edges on {n} vertices: the graph has a cycle, not a tree",
                edges.len()
            )));
        }
        let mut cumulative = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        for e in &edges {
            acc += e.2;
            cumulative.push(acc);
        }
        Ok(TreeSpace {
            edges,
            vertex_dist,
            next_hop,
            edge_index,
            cumulative,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let adjacency: Adjacency =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("tree fixture: {e}")))?;
        Self::from_adjacency(&adjacency)
    }

    pub fn vertex_count(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn vertex_distance(&self, u: usize, v: usize) -> f64 {
        self.vertex_dist[u * self.vertex_count() + v]
    }

    /// The point at vertex `v`.
    pub fn vertex(&self, v: usize) -> Result<TreePoint> {
        let (edge, &(a, _, w)) = self
            .edges
            .iter()
            .enumerate()
            .find(|(_, e)| e.0 == v || e.1 == v)
            .ok_or_else(|| Error::domain(format!("no vertex {v}")))?;
        Ok(TreePoint {
            edge,
            offset: if a == v { 0.0 } else { w },
        })
    }

    fn check(&self, p: &TreePoint) -> Result<()> {
        match self.edges.get(p.edge) {
            Some(&(_, _, w)) if (0.0..=w).contains(&p.offset) => Ok(()),
            Some(&(_, _, w)) => Err(Error::domain(format!("offset {} outside edge of length {w}", p.offset))),
            None => Err(Error::domain(format!("no edge {}", p.edge))),
        }
    }

    /// The two endpoints of the point's edge with their distances.
    fn ends(&self, p: &TreePoint) -> [(usize, f64); 2] {
        let (a, b, w) = self.edges[p.edge];
        [(a, p.offset), (b, w - p.offset)]
    }

    /// Distance plus the endpoints through which the path leaves `p` and
    /// enters `q`; `None` when both lie on one edge.
    fn route(&self, p: &TreePoint, q: &TreePoint) -> (f64, Option<(usize, usize)>) {
        if p.edge == q.edge {
            return ((p.offset - q.offset).abs(), None);
        }
        let mut best = (f64::INFINITY, None);
        for (u, du) in self.ends(p) {
            for (v, dv) in self.ends(q) {
                let d = du + self.vertex_distance(u, v) + dv;
                if d < best.0 {
                    best = (d, Some((u, v)));
                }
            }
        }
        best
    }

    /// Point on edge `e` at distance `along` from vertex `from`.
    fn on_edge(&self, e: usize, from: usize, along: f64) -> TreePoint {
        let (a, _, w) = self.edges[e];
        let offset = if from == a { along } else { w - along };
        TreePoint {
            edge: e,
            offset: offset.clamp(0.0, w),
        }
    }

    /// Largest minus second largest of the three pair sums; zero exactly in
    /// a tree (four-point condition).
    pub fn four_point_defect(&self, pts: [&TreePoint; 4]) -> Result<f64> {
        let d = |i: usize, j: usize| self.distance(pts[i], pts[j]);
        let mut sums = [d(0, 1)? + d(2, 3)?, d(0, 2)? + d(1, 3)?, d(0, 3)? + d(1, 2)?];
        sums.sort_by(f64::total_cmp);
        Ok(sums[2] - sums[1])
    }
}

impl GeodesicSpace for TreeSpace {
    type Point = TreePoint;

    fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::Tree {
            vertices: self.vertex_count(),
            edges: self.edges.len(),
        }
    }

    fn distance(&self, a: &TreePoint, b: &TreePoint) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.route(a, b).0)
    }

    fn geodesic_point(&self, a: &TreePoint, b: &TreePoint, s: f64) -> Result<TreePoint> {
        self.check(a)?;
        self.check(b)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain(format!("geodesic fraction must lie in [0, 1], got {s}")));
        }
        let (d, via) = self.route(a, b);
        let mut left = s * d;
        let Some((u, v)) = via else {
            return Ok(TreePoint {
                edge: a.edge,
                offset: a.offset + (b.offset - a.offset) * s,
            });
        };
        let first = self.ends(a).into_iter().find(|e| e.0 == u).map_or(0.0, |e| e.1);
        if left <= first {
            let (ea, _, _) = self.edges[a.edge];
            let offset = if u == ea { a.offset - left } else { a.offset + left };
            return Ok(TreePoint { edge: a.edge, offset });
        }
        left -= first;
        let n = self.vertex_count();
        let mut at = u;
        while at != v {
            let hop = self.next_hop[at * n + v];
            let e = self.edge_index[at * n + hop].expect("next hop is adjacent");
            let w = self.edges[e].2;
            if left <= w {
                return Ok(self.on_edge(e, at, left));
            }
            left -= w;
            at = hop;
        }
        Ok(self.on_edge(b.edge, v, left))
    }

    /// Uniform with respect to length.
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> TreePoint {
        let total = *self.cumulative.last().expect("at least one edge");
        let r = rng.random_range(0.0..total);
        let edge = self.cumulative.partition_point(|&c| c <= r).min(self.edges.len() - 1);
        let start = if edge == 0 { 0.0 } else { self.cumulative[edge - 1] };
        TreePoint {
            edge,
            offset: (r - start).clamp(0.0, self.edges[edge].2),
        }
    }

    fn coords(&self, p: &TreePoint) -> Vec<f64> {
        vec![p.edge as f64, p.offset]
    }
}
