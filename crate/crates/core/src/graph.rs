//! Weighted pointed graphs: validation, directed doubles, balls around the
//! basepoint, pointed isomorphisms and the standard Dynkin-type families.
//!
//! Vertices are identified by their position in the input order; names are
//! kept for reporting and serialization. Undirected edges form a multiset and
//! loops are allowed.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

/// A connected graph with positive vertex weights and a basepoint of weight 1
/// whose weight is minimal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    names: Vec<String>,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    basepoint: usize,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    pub fn new(
        names: Vec<String>,
        edges: Vec<(usize, usize)>,
        weights: Vec<f64>,
        basepoint: usize,
    ) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        if weights.len() != names.len() {
            return Err(Error::InvalidGraph(format!(
                "{} weights for {} vertices",
                weights.len(),
                names.len()
            )));
        }
        let mut seen = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if seen.insert(name.as_str(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate vertex `{name}`")));
            }
        }
        if basepoint >= names.len() {
            return Err(Error::InvalidGraph("basepoint out of range".into()));
        }
        for &(u, v) in &edges {
            if u >= names.len() || v >= names.len() {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
            }
        }
        for (name, &w) in names.iter().zip(&weights) {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight { vertex: name.clone(), weight: w });
            }
        }
        let base_w = weights[basepoint];
        if (base_w - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::BasepointWeight { vertex: names[basepoint].clone(), weight: base_w });
        }
        for (name, &w) in names.iter().zip(&weights) {
            if w < 1.0 - WEIGHT_TOL {
                return Err(Error::BasepointNotMinimal { vertex: name.clone(), weight: w });
            }
        }
        let g = Self::assemble(names, edges, weights, basepoint);
        let dist = g.distances();
        if let Some(v) = dist.iter().position(|d| d.is_none()) {
            return Err(Error::Disconnected(g.names[v].clone()));
        }
        Ok(g)
    }

    fn assemble(
        names: Vec<String>,
        edges: Vec<(usize, usize)>,
        weights: Vec<f64>,
        basepoint: usize,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); names.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, e));
            if u != v {
                adjacency[v].push((u, e));
            }
        }
        Self { names, edges, weights, basepoint, adjacency }
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let index: HashMap<&str, usize> =
            spec.vertices.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidGraph(format!("unknown vertex `{name}`")))
        };
        let mut edges = Vec::with_capacity(spec.edges.len());
        for [a, b] in &spec.edges {
            edges.push((lookup(a)?, lookup(b)?));
        }
        for name in spec.weights.keys() {
            lookup(name)?;
        }
        let mut weights = Vec::with_capacity(spec.vertices.len());
        for name in &spec.vertices {
            let w = spec
                .weights
                .get(name)
                .ok_or_else(|| Error::InvalidGraph(format!("vertex `{name}` has no weight")))?;
            weights.push(w.value()?);
        }
        let basepoint = lookup(&spec.basepoint)?;
        Self::new(spec.vertices.clone(), edges, weights, basepoint)
    }

    /// Spec form with every weight resolved to a number.
    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| [self.names[u].clone(), self.names[v].clone()])
                .collect(),
            weights: self
                .names
                .iter()
                .zip(&self.weights)
                .map(|(n, &w)| (n.clone(), WeightSpec::Number(w)))
                .collect(),
            basepoint: self.names[self.basepoint].clone(),
        }
    }

    /// Deterministic JSON rendering: sorted keys, shortest round-trip floats.
    pub fn canonical_json(&self) -> String {
        let weights: BTreeMap<&str, f64> =
            self.names.iter().map(String::as_str).zip(self.weights.iter().copied()).collect();
        let value = serde_json::json!({
            "basepoint": self.names[self.basepoint],
            "edges": self.edges.iter().map(|&(u, v)| [&self.names[u], &self.names[v]]).collect::<Vec<_>>(),
            "vertices": self.names,
            "weights": weights,
        });
        serde_json::to_string(&value).expect("graph serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Incident `(neighbor, edge index)` pairs in edge order; a loop appears once.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// Breadth-first distances from the basepoint (`None` when unreachable).
    pub fn distances(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.names.len()];
        dist[self.basepoint] = Some(0);
        let mut queue = VecDeque::from([self.basepoint]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &(w, _) in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Vertex ordering by (distance, input index).
    fn canonical_order(&self) -> Vec<usize> {
        let dist = self.distances();
        let mut order: Vec<usize> = (0..self.names.len()).collect();
        order.sort_by_key(|&v| (dist[v].unwrap_or(usize::MAX), v));
        order
    }
}

/// Serialized graph description (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<[String; 2]>,
    pub weights: BTreeMap<String, WeightSpec>,
    pub basepoint: String,
}

impl GraphSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A weight is either a number or an expression such as `qint(3, exp(i*pi/5))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Number(f64),
    Expr(String),
}

impl WeightSpec {
    pub fn value(&self) -> Result<f64> {
        match self {
            WeightSpec::Number(x) => Ok(*x),
            WeightSpec::Expr(s) => parse_weight_expr(s),
        }
    }
}

fn parse_weight_expr(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let inner = s
        .strip_prefix("qint(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("unrecognized weight expression `{text}`")))?;
    let (n, q) = inner
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("qint needs two arguments in `{text}`")))?;
    let n: i64 = n.parse().map_err(|_| Error::Parse(format!("bad integer in `{text}`")))?;
    Ok(quantum_integer(n, parse_q(q)?))
}

/// Parses `1.5`, `exp(i*pi/N)` or `exp(i*pi*M/N)`.
pub fn parse_q(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(Complex64::new(x, 0.0));
    }
    let bad = || Error::Parse(format!("unrecognized q `{text}`"));
    let arg = s.strip_prefix("exp(i*pi").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
    let (num, den) = if let Some(r) = arg.strip_prefix('/') {
        (1.0, r)
    } else if let Some(r) = arg.strip_prefix('*') {
        let (m, n) = r.split_once('/').ok_or_else(bad)?;
        (m.parse::<f64>().map_err(|_| bad())?, n)
    } else {
        return Err(bad());
    };
    let den: f64 = den.parse().map_err(|_| bad())?;
    if den == 0.0 {
        return Err(bad());
    }
    Ok(Complex64::from_polar(1.0, std::f64::consts::PI * num / den))
}

/// `[n]_q = (q^n - q^-n)/(q - q^-1)` for unit-modulus or real positive `q`.
pub fn quantum_integer(n: i64, q: Complex64) -> f64 {
    let nf = n as f64;
    if (q.norm() - 1.0).abs() < 1e-12 {
        let theta = q.arg();
        let s = theta.sin();
        if s.abs() < 1e-9 {
            nf * ((nf - 1.0) * theta).cos()
        } else {
            (nf * theta).sin() / s
        }
    } else if q.im.abs() < 1e-15 && q.re > 0.0 {
        let t = q.re.ln();
        (nf * t).sinh() / t.sinh()
    } else {
        let qn = q.powf(nf);
        ((qn - qn.inv()) / (q - q.inv())).re
    }
}

/// One orientation of an undirected edge. Loops yield a single self-opposite edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub id: usize,
    pub source: usize,
    pub target: usize,
    pub opposite: usize,
    pub undirected: usize,
}

/// All directed edges of a graph, ids assigned in undirected-edge order.
#[derive(Debug, Clone)]
pub struct DirectedDouble {
    graph: WeightedGraph,
    edges: Vec<DirectedEdge>,
    outgoing: Vec<Vec<usize>>,
}

impl DirectedDouble {
    pub fn new(graph: &WeightedGraph) -> Self {
        let mut edges = Vec::with_capacity(2 * graph.num_edges());
        for (k, &(u, v)) in graph.edges().iter().enumerate() {
            let id = edges.len();
            if u == v {
                edges.push(DirectedEdge { id, source: u, target: u, opposite: id, undirected: k });
            } else {
                edges.push(DirectedEdge { id, source: u, target: v, opposite: id + 1, undirected: k });
                edges.push(DirectedEdge {
                    id: id + 1,
                    source: v,
                    target: u,
                    opposite: id,
                    undirected: k,
                });
            }
        }
        let mut outgoing = vec![Vec::new(); graph.num_vertices()];
        for e in &edges {
            outgoing[e.source].push(e.id);
        }
        Self { graph: graph.clone(), edges, outgoing }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> Result<&DirectedEdge> {
        self.edges.get(id).ok_or(Error::UnknownEdge(id))
    }

    /// Outgoing edge ids of `v`, increasing.
    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    pub fn opposite(&self, id: usize) -> usize {
        self.edges[id].opposite
    }

    pub fn source(&self, id: usize) -> usize {
        self.edges[id].source
    }

    pub fn target(&self, id: usize) -> usize {
        self.edges[id].target
    }

    /// `(mu(source)/mu(target))^(1/4)` for a nonempty path.
    pub fn path_weight(&self, path: &[usize]) -> f64 {
        match (path.first(), path.last()) {
            (Some(&f), Some(&l)) => {
                (self.graph.weight(self.source(f)) / self.graph.weight(self.target(l))).powf(0.25)
            }
            _ => 1.0,
        }
    }

    /// Checks consecutive edges compose and returns (source, target).
    pub fn check_path(&self, start: usize, path: &[usize]) -> Result<(usize, usize)> {
        let mut at = start;
        for &e in path {
            let edge = self.edge(e)?;
            if edge.source != at {
                return Err(Error::NotAPath(e));
            }
            at = edge.target;
        }
        Ok((start, at))
    }

    /// Opposite path: reversed order, each edge replaced by its opposite.
    pub fn opposite_path(&self, path: &[usize]) -> Vec<usize> {
        path.iter().rev().map(|&e| self.opposite(e)).collect()
    }

    /// Directed adjacency matrix with edge multiplicities.
    pub fn adjacency_counts(&self) -> Vec<Vec<u128>> {
        let n = self.graph.num_vertices();
        let mut a = vec![vec![0u128; n]; n];
        for e in &self.edges {
            a[e.source][e.target] += 1;
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexVerdict {
    pub vertex: String,
    pub weight: f64,
    pub neighbor_sum: f64,
    pub strict: bool,
}

/// Per-vertex strict inequality `mu(v) < sum of mu(target)` over outgoing edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplicityReport {
    pub vertices: Vec<VertexVerdict>,
    pub simple: bool,
}

pub fn simplicity_check(graph: &WeightedGraph) -> SimplicityReport {
    let dd = DirectedDouble::new(graph);
    let vertices: Vec<VertexVerdict> = (0..graph.num_vertices())
        .map(|v| {
            let neighbor_sum: f64 =
                dd.outgoing(v).iter().map(|&e| graph.weight(dd.target(e))).sum();
            let weight = graph.weight(v);
            VertexVerdict {
                vertex: graph.name(v).to_string(),
                weight,
                neighbor_sum,
                strict: weight < neighbor_sum - 1e-12 * neighbor_sum.max(1.0),
            }
        })
        .collect();
    let simple = vertices.iter().all(|v| v.strict);
    SimplicityReport { vertices, simple }
}

/// Induced subgraph on vertices within `radius` of the basepoint, vertices
/// ordered by (distance, input index).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBall {
    pub graph: WeightedGraph,
    pub radius: usize,
    /// Ball vertex -> vertex of the ambient graph.
    pub vertex_origin: Vec<usize>,
    /// Ball edge -> edge of the ambient graph.
    pub edge_origin: Vec<usize>,
}

pub fn ball(graph: &WeightedGraph, radius: usize) -> GraphBall {
    let dist = graph.distances();
    let order: Vec<usize> = graph
        .canonical_order()
        .into_iter()
        .filter(|&v| dist[v].is_some_and(|d| d <= radius))
        .collect();
    let mut new_index = vec![usize::MAX; graph.num_vertices()];
    for (i, &v) in order.iter().enumerate() {
        new_index[v] = i;
    }
    let mut edges = Vec::new();
    let mut edge_origin = Vec::new();
    for (k, &(u, v)) in graph.edges().iter().enumerate() {
        if new_index[u] != usize::MAX && new_index[v] != usize::MAX {
            edges.push((new_index[u], new_index[v]));
            edge_origin.push(k);
        }
    }
    let names = order.iter().map(|&v| graph.name(v).to_string()).collect();
    let weights = order.iter().map(|&v| graph.weight(v)).collect();
    GraphBall {
        graph: WeightedGraph::assemble(names, edges, weights, 0),
        radius,
        vertex_origin: order,
        edge_origin,
    }
}

/// Unweighted pointed isomorphism `a -> b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointedIsomorphism {
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
}

impl PointedIsomorphism {
    pub fn inverse(&self) -> PointedIsomorphism {
        let mut vertex_map = vec![0; self.vertex_map.len()];
        for (i, &j) in self.vertex_map.iter().enumerate() {
            vertex_map[j] = i;
        }
        let mut edge_map = vec![0; self.edge_map.len()];
        for (i, &j) in self.edge_map.iter().enumerate() {
            edge_map[j] = i;
        }
        PointedIsomorphism { vertex_map, edge_map }
    }
}

fn multiplicities(g: &WeightedGraph) -> HashMap<(usize, usize), usize> {
    let mut m = HashMap::new();
    for &(u, v) in g.edges() {
        *m.entry((u.min(v), u.max(v))).or_insert(0) += 1;
    }
    m
}

/// Finds the lexicographically first basepoint-preserving isomorphism of the
/// underlying multigraphs, if any. Weights are ignored.
pub fn find_pointed_isomorphism(a: &WeightedGraph, b: &WeightedGraph) -> Option<PointedIsomorphism> {
    let n = a.num_vertices();
    if n != b.num_vertices() || a.num_edges() != b.num_edges() {
        return None;
    }
    let (ma, mb) = (multiplicities(a), multiplicities(b));
    let (da, db) = (a.distances(), b.distances());
    let degree = |g: &WeightedGraph, v: usize| g.incident(v).len();
    let order = a.canonical_order();
    // Each non-basepoint vertex is placed next to an already placed neighbor.
    let anchor: Vec<Option<usize>> = order
        .iter()
        .map(|&u| {
            let pos = |x: usize| order.iter().position(|&y| y == x).unwrap();
            a.incident(u).iter().map(|&(w, _)| w).filter(|&w| pos(w) < pos(u)).min_by_key(|&w| pos(w))
        })
        .collect();

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];

    fn compatible(
        u: usize,
        cand: usize,
        map: &[usize],
        a: &WeightedGraph,
        ma: &HashMap<(usize, usize), usize>,
        mb: &HashMap<(usize, usize), usize>,
    ) -> bool {
        let count = |m: &HashMap<(usize, usize), usize>, x: usize, y: usize| {
            m.get(&(x.min(y), x.max(y))).copied().unwrap_or(0)
        };
        if count(ma, u, u) != count(mb, cand, cand) {
            return false;
        }
        for w in 0..a.num_vertices() {
            if map[w] != usize::MAX && count(ma, u, w) != count(mb, cand, map[w]) {
                return false;
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        depth: usize,
        order: &[usize],
        anchor: &[Option<usize>],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        a: &WeightedGraph,
        b: &WeightedGraph,
        ma: &HashMap<(usize, usize), usize>,
        mb: &HashMap<(usize, usize), usize>,
        da: &[Option<usize>],
        db: &[Option<usize>],
        degree: &dyn Fn(&WeightedGraph, usize) -> usize,
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let u = order[depth];
        let candidates: Vec<usize> = match anchor[depth] {
            None => (0..b.num_vertices()).collect(),
            Some(p) => {
                let mut c: Vec<usize> = b.incident(map[p]).iter().map(|&(w, _)| w).collect();
                c.sort_unstable();
                c.dedup();
                c
            }
        };
        for cand in candidates {
            if used[cand]
                || da[u] != db[cand]
                || degree(a, u) != degree(b, cand)
                || !compatible(u, cand, map, a, ma, mb)
            {
                continue;
            }
            map[u] = cand;
            used[cand] = true;
            if search(depth + 1, order, anchor, map, used, a, b, ma, mb, da, db, degree) {
                return true;
            }
            map[u] = usize::MAX;
            used[cand] = false;
        }
        false
    }

    // The basepoint is first in canonical order and must go to b's basepoint.
    map[a.basepoint()] = b.basepoint();
    used[b.basepoint()] = true;
    if degree(a, a.basepoint()) != degree(b, b.basepoint())
        || !compatible(a.basepoint(), b.basepoint(), &vec![usize::MAX; n], a, &ma, &mb)
    {
        return None;
    }
    if !search(1, &order, &anchor, &mut map, &mut used, a, b, &ma, &mb, &da, &db, &degree) {
        return None;
    }
    let mut taken = vec![false; b.num_edges()];
    let mut edge_map = Vec::with_capacity(a.num_edges());
    for &(u, v) in a.edges() {
        let (x, y) = (map[u], map[v]);
        let k = b
            .edges()
            .iter()
            .enumerate()
            .position(|(k, &(p, q))| !taken[k] && ((p, q) == (x, y) || (p, q) == (y, x)))?;
        taken[k] = true;
        edge_map.push(k);
    }
    Some(PointedIsomorphism { vertex_map: map, edge_map })
}

/// Isomorphism between two balls of the same radius.
pub fn find_ball_isomorphism(a: &GraphBall, b: &GraphBall) -> Option<PointedIsomorphism> {
    if a.radius != b.radius {
        return None;
    }
    find_pointed_isomorphism(&a.graph, &b.graph)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusReport {
    pub radius: usize,
    /// First family index from which every later ball of this radius matches the limit.
    pub first_index: Option<usize>,
    /// Largest weight discrepancy on the ball, measured at the last family member.
    pub weight_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCheck {
    pub radii: Vec<RadiusReport>,
    /// Per family member: largest matching radius (up to the requested maximum).
    pub matched_radius: Vec<Option<usize>>,
    pub converges: bool,
    pub notes: Vec<String>,
}

/// Local uniform convergence of `family` to `limit` on balls of radius `0..=max_radius`.
///
/// Isomorphisms are found at each member's largest matching radius and
/// restricted, so the identifications are coherent across radii.
pub fn verify_local_convergence(
    family: &[WeightedGraph],
    limit: &WeightedGraph,
    max_radius: usize,
    tol: f64,
) -> ConvergenceCheck {
    let mut notes = Vec::new();
    let limit_balls: Vec<GraphBall> = (0..=max_radius).map(|r| ball(limit, r)).collect();
    let matches: Vec<Option<(usize, PointedIsomorphism, GraphBall)>> = family
        .iter()
        .map(|g| {
            (0..=max_radius).rev().find_map(|r| {
                let b = ball(g, r);
                find_ball_isomorphism(&b, &limit_balls[r]).map(|iso| (r, iso, b))
            })
        })
        .collect();
    let matched_radius: Vec<Option<usize>> =
        matches.iter().map(|m| m.as_ref().map(|(r, _, _)| *r)).collect();

    let mut radii = Vec::new();
    for r in 0..=max_radius {
        let ok = |i: usize| matched_radius[i].is_some_and(|m| m >= r);
        let first_index = if family.is_empty() || !ok(family.len() - 1) {
            notes.push(format!("radius {r}: the last family member does not match the limit"));
            None
        } else {
            let mut i = family.len() - 1;
            while i > 0 && ok(i - 1) {
                i -= 1;
            }
            Some(i)
        };
        let weight_gap = first_index.and_then(|_| {
            let (_, iso, b) = matches.last()?.as_ref()?;
            // Ball of radius r is a prefix of the matched ball in canonical order.
            let size = limit_balls[r].graph.num_vertices();
            let gap = (0..b.graph.num_vertices())
                .filter(|&v| iso.vertex_map[v] < size)
                .map(|v| (b.graph.weight(v) - limit_balls.last().unwrap().graph.weight(iso.vertex_map[v])).abs())
                .fold(0.0, f64::max);
            Some(gap)
        });
        radii.push(RadiusReport { radius: r, first_index, weight_gap });
    }
    let converges = radii
        .iter()
        .all(|r| r.first_index.is_some() && r.weight_gap.is_some_and(|g| g < tol));
    ConvergenceCheck { radii, matched_radius, converges, notes }
}

fn numbered(n: usize, from: usize) -> Vec<String> {
    (from..from + n).map(|i| i.to_string()).collect()
}

fn path_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect()
}

/// Dynkin diagram A_n with weights `[k]_q` at `q = exp(i*pi/(n+1))`.
pub fn dynkin_a(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::ParameterTooSmall { name: "n", min: 3, got: n });
    }
    let q = Complex64::from_polar(1.0, std::f64::consts::PI / (n as f64 + 1.0));
    dynkin_a_with_q(n, q)
}

/// A_n with weights `[k]_q` for an arbitrary admissible `q`.
pub fn dynkin_a_with_q(n: usize, q: Complex64) -> Result<WeightedGraph> {
    if n < 1 {
        return Err(Error::ParameterTooSmall { name: "n", min: 1, got: n });
    }
    let weights = (1..=n as i64).map(|k| quantum_integer(k, q)).collect();
    WeightedGraph::new(numbered(n, 1), path_edges(n), weights, 0)
}

/// First `cutoff` vertices of A_infinity with weights `[k]_q`, real `q >= 1`.
pub fn dynkin_a_infinity(cutoff: usize, q: f64) -> Result<WeightedGraph> {
    if cutoff < 1 {
        return Err(Error::ParameterTooSmall { name: "cutoff", min: 1, got: cutoff });
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidGraph(format!("q must be real and at least 1, got {q}")));
    }
    let weights = (1..=cutoff as i64).map(|k| quantum_integer(k, Complex64::new(q, 0.0))).collect();
    WeightedGraph::new(numbered(cutoff, 1), path_edges(cutoff), weights, 0)
}

/// Affine D_n (n+1 vertices): basepoint leaf and a second leaf on one end of a
/// chain of n-3 weight-2 vertices, two leaves on the other end.
pub fn affine_d(n: usize) -> Result<WeightedGraph> {
    if n < 4 {
        return Err(Error::ParameterTooSmall { name: "n", min: 4, got: n });
    }
    let chain = n - 3;
    let first = 2;
    let last = first + chain - 1;
    let mut edges = vec![(0, first), (1, first)];
    edges.extend((first..last).map(|i| (i, i + 1)));
    edges.push((last, last + 1));
    edges.push((last, last + 2));
    let mut weights = vec![1.0, 1.0];
    weights.extend(std::iter::repeat_n(2.0, chain));
    weights.extend([1.0, 1.0]);
    WeightedGraph::new(numbered(n + 1, 0), edges, weights, 0)
}

/// D_infinity truncated after `cutoff` chain vertices.
pub fn d_infinity(cutoff: usize) -> Result<WeightedGraph> {
    if cutoff < 2 {
        return Err(Error::ParameterTooSmall { name: "cutoff", min: 2, got: cutoff });
    }
    let mut edges = vec![(0, 2), (1, 2)];
    edges.extend((2..cutoff + 1).map(|i| (i, i + 1)));
    let mut weights = vec![1.0, 1.0];
    weights.extend(std::iter::repeat_n(2.0, cutoff));
    WeightedGraph::new(numbered(cutoff + 2, 0), edges, weights, 0)
}

/// A single vertex carrying `loops` loops.
pub fn bouquet(loops: usize) -> Result<WeightedGraph> {
    WeightedGraph::new(vec!["v".into()], vec![(0, 0); loops], vec![1.0], 0)
}
