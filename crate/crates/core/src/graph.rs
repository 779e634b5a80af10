//! Finite simple graphs, path metric, scales, and named generators.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {0} out of range (graph has {1} vertices)")]
    VertexOutOfRange(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("scale has {got} sets, graph has {expected} vertices")]
    ScaleLength { expected: usize, got: usize },
    #[error("scale set S_{0} does not contain its own vertex")]
    MissingCenter(usize),
    #[error("scale set S_{0} is empty")]
    EmptySet(usize),
    #[error("dual scale set for vertex {0} is empty")]
    EmptyDualSet(usize),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
}

/// Undirected simple graph. Edges are stored as `(u, v)` with `u < v`, sorted;
/// that orientation is the one every LP uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    name: Option<String>,
    adj: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphJson {
            vertices: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            name: self.name.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = GraphJson::deserialize(d)?;
        let edges = j.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(j.vertices, edges, j.name).map_err(serde::de::Error::custom)
    }
}

impl Graph {
    /// Canonicalizes orientation and order; rejects loops, repeats and bad indices.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        name: Option<String>,
    ) -> Result<Graph, GraphError> {
        let mut es = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n {
                return Err(GraphError::VertexOutOfRange(u, n));
            }
            if v >= n {
                return Err(GraphError::VertexOutOfRange(v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            es.push((u.min(v), u.max(v)));
        }
        es.sort_unstable();
        for w in es.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &es {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph { n, edges: es, name, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// `Some(d)` if every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, |a| a.len());
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    /// Index of edge `{u, v}` in [`Graph::edges`], either orientation.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// Edge indices with exactly one endpoint in `member`.
    pub fn boundary(&self, member: &[bool]) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| member[u] != member[v])
            .map(|(i, _)| i)
            .collect()
    }

    pub fn boundary_of(&self, set: &[usize]) -> Vec<usize> {
        self.boundary(&self.indicator(set))
    }

    pub fn indicator(&self, set: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &v in set {
            m[v] = true;
        }
        m
    }

    /// Is the subgraph induced on `set` connected? Empty sets are not.
    pub fn is_connected_subset(&self, set: &[usize]) -> bool {
        let Some(&start) = set.first() else {
            return false;
        };
        let member = self.indicator(set);
        let mut seen = vec![false; self.n];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adj[u] {
                if member[w] && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == set.len()
    }

    /// Breadth-first distances from `src`; `None` for unreachable vertices.
    pub fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src] = Some(0);
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    q.push_back(w);
                }
            }
        }
        dist
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = Vec::new();
            for (v, d) in self.bfs(s).into_iter().enumerate() {
                if d.is_some() {
                    comp[v] = id;
                    members.push(v);
                }
            }
            out.push(members);
        }
        out
    }

    /// Text format: `p <n>` then `e <u> <v>` lines; `c` lines are comments.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(s, "c {}", name);
        }
        let _ = writeln!(s, "p {}", self.n);
        for (u, v) in &self.edges {
            let _ = writeln!(s, "e {} {}", u, v);
        }
        s
    }

    /// Graphviz source with `highlight` filled and its boundary edges bold.
    pub fn to_dot(&self, highlight: &[usize]) -> String {
        let member = self.indicator(highlight);
        let mut s = String::from("graph G {\n");
        for v in 0..self.n {
            let style = if member[v] { " [style=filled, fillcolor=gold]" } else { "" };
            let _ = writeln!(s, "  {v}{style};");
        }
        for &(u, v) in &self.edges {
            let style = if member[u] != member[v] { " [penwidth=2.5, color=red]" } else { "" };
            let _ = writeln!(s, "  {u} -- {v}{style};");
        }
        s.push_str("}\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Graph, GraphError> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut name = None;
        for (idx, line) in text.lines().enumerate() {
            let err = |msg: &str| GraphError::Parse { line: idx + 1, msg: msg.to_string() };
            let mut parts = line.split_whitespace();
            match parts.next() {
                None => continue,
                Some("c") => {
                    if name.is_none() {
                        let rest = line.trim_start()[1..].trim();
                        if !rest.is_empty() {
                            name = Some(rest.to_string());
                        }
                    }
                    continue;
                }
                Some("p") => {
                    if n.is_some() {
                        return Err(err("repeated p line"));
                    }
                    let v = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("bad vertex count"))?;
                    n = Some(v);
                }
                Some("e") => {
                    if n.is_none() {
                        return Err(err("edge before p line"));
                    }
                    let u: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("bad endpoint"))?;
                    let v: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("bad endpoint"))?;
                    edges.push((u, v));
                }
                Some(tok) => return Err(err(&format!("unknown record {tok:?}"))),
            }
            if parts.next().is_some() {
                return Err(err("trailing tokens"));
            }
        }
        let n = n.ok_or(GraphError::Parse { line: 0, msg: "missing p line".into() })?;
        Graph::new(n, edges, name)
    }

    /// Induced subgraph on `vertices` (relabelled in the given order).
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut pos = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            pos[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| pos[*u] != usize::MAX && pos[*v] != usize::MAX)
            .map(|(u, v)| (pos[*u], pos[*v]))
            .collect();
        Graph::new(vertices.len(), edges, None).expect("induced subgraph is simple")
    }
}

/// All-pairs path lengths; `None` marks different components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<Option<usize>>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        self.dist[i * self.n + j]
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Largest finite distance (0 for the empty graph).
    pub fn diameter(&self) -> usize {
        self.dist.iter().flatten().copied().max().unwrap_or(0)
    }
}

pub fn all_pairs_distances(g: &Graph) -> DistanceMatrix {
    let n = g.vertex_count();
    let mut dist = Vec::with_capacity(n * n);
    for s in 0..n {
        dist.extend(g.bfs(s));
    }
    DistanceMatrix { n, dist }
}

/// One vertex set per vertex: `sets[i] = S_i`, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub sets: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
}

impl Scale {
    /// Validates `i ∈ S_i` and index ranges; sorts and dedups each set.
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Scale, GraphError> {
        if sets.len() != n {
            return Err(GraphError::ScaleLength { expected: n, got: sets.len() });
        }
        let mut out = Vec::with_capacity(n);
        for (i, mut s) in sets.into_iter().enumerate() {
            if s.is_empty() {
                return Err(GraphError::EmptySet(i));
            }
            if let Some(&v) = s.iter().find(|&&v| v >= n) {
                return Err(GraphError::VertexOutOfRange(v, n));
            }
            s.sort_unstable();
            s.dedup();
            if s.binary_search(&i).is_err() {
                return Err(GraphError::MissingCenter(i));
            }
            out.push(s);
        }
        Ok(Scale { sets: out, radius: None })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.sets[i].binary_search(&j).is_ok()
    }

    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        dual_scale(self).map_or(false, |d| d.sets == self.sets)
    }
}

pub fn ball_scale(g: &Graph, s: usize) -> Scale {
    let sets = (0..g.vertex_count())
        .map(|i| {
            g.bfs(i)
                .into_iter()
                .enumerate()
                .filter(|(_, d)| d.is_some_and(|d| d <= s))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    Scale { sets, radius: Some(s) }
}

/// `S̄_i = { j : i ∈ S_j }`.
pub fn dual_scale(sc: &Scale) -> Result<Scale, GraphError> {
    let n = sc.sets.len();
    let mut sets = vec![Vec::new(); n];
    for (j, s) in sc.sets.iter().enumerate() {
        for &i in s {
            sets[i].push(j);
        }
    }
    if let Some(i) = sets.iter().position(|s| s.is_empty()) {
        return Err(GraphError::EmptyDualSet(i));
    }
    Ok(Scale { sets, radius: sc.radius })
}

/// Shortest cycle length, `None` for forests.
pub fn girth(g: &Graph) -> Option<usize> {
    let n = g.vertex_count();
    let mut best: Option<usize> = None;
    for root in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        dist[root] = 0;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            if best.is_some_and(|b| 2 * dist[u] + 1 >= b) {
                break;
            }
            for &w in g.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    q.push_back(w);
                } else if parent[u] != w {
                    let len = dist[u] + dist[w] + 1;
                    if best.map_or(true, |b| len < b) {
                        best = Some(len);
                    }
                }
            }
        }
    }
    best
}

/// `true` iff `embedding` is an injective edge-preserving map under which
/// every same-component pair of `h` keeps its distance in `g`.
pub fn is_convex_subgraph(h: &Graph, g: &Graph, embedding: &[usize]) -> Result<bool, GraphError> {
    if embedding.len() != h.vertex_count() {
        return Err(GraphError::InvalidEmbedding(format!(
            "map has {} entries for {} vertices",
            embedding.len(),
            h.vertex_count()
        )));
    }
    let mut used = vec![false; g.vertex_count()];
    for &v in embedding {
        if v >= g.vertex_count() {
            return Err(GraphError::InvalidEmbedding(format!("image {v} out of range")));
        }
        if used[v] {
            return Err(GraphError::InvalidEmbedding(format!("vertex {v} hit twice")));
        }
        used[v] = true;
    }
    for &(u, v) in h.edges() {
        if !g.has_edge(embedding[u], embedding[v]) {
            return Err(GraphError::InvalidEmbedding(format!("edge {u}-{v} not preserved")));
        }
    }
    for a in 0..h.vertex_count() {
        let dh = h.bfs(a);
        let dg = g.bfs(embedding[a]);
        for (b, d) in dh.iter().enumerate() {
            if let Some(d) = d {
                if dg[embedding[b]] != Some(*d) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn param(ok: bool, msg: &str) -> Result<(), GraphError> {
    if ok {
        Ok(())
    } else {
        Err(GraphError::InvalidParameter(msg.to_string()))
    }
}

/// `Q_n` on binary labels `0..2^n`; `i ~ j` iff they differ in one bit.
pub fn hypercube(n: usize) -> Result<Graph, GraphError> {
    param((1..=20).contains(&n), "hypercube dimension must be in 1..=20")?;
    let size = 1usize << n;
    let mut edges = Vec::with_capacity(n << (n - 1));
    for i in 0..size {
        for b in 0..n {
            let j = i ^ (1 << b);
            if i < j {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::new(size, edges, Some(format!("hypercube:{n}")))?)
}

/// Vertex `(r, c)` is labelled `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Result<Graph, GraphError> {
    param(rows >= 1 && cols >= 1, "grid dimensions must be positive")?;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::new(rows * cols, edges, Some(format!("grid:{rows}x{cols}")))
}

/// Cayley graph of `Z_2 × Z_k`: vertex `(a, b)` is `a * k + b`; rungs join
/// `(0, b)`–`(1, b)`, rings join `(a, b)`–`(a, b + 1)`.
pub fn circular_ladder(k: usize) -> Result<Graph, GraphError> {
    param(k >= 3, "circular ladder needs k >= 3")?;
    let mut edges = Vec::with_capacity(3 * k);
    for b in 0..k {
        edges.push((b, k + b));
        for a in 0..2 {
            edges.push((a * k + b, a * k + (b + 1) % k));
        }
    }
    Graph::new(2 * k, edges, Some(format!("ladder:{k}")))
}

/// Heawood graph, LCF notation `[5, -5]^7`: the 14-cycle plus chords
/// `i ~ i + 5` for even `i`.
pub fn heawood() -> Graph {
    let mut edges = Vec::with_capacity(21);
    for i in 0..14 {
        edges.push((i, (i + 1) % 14));
        if i % 2 == 0 {
            edges.push((i, (i + 5) % 14));
        }
    }
    Graph::new(14, edges, Some("heawood".into())).unwrap()
}

/// Petersen graph: outer 5-cycle 0..4, spokes `i ~ i + 5`, inner pentagram.
pub fn petersen() -> Graph {
    let mut edges = Vec::with_capacity(15);
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    Graph::new(10, edges, Some("petersen".into())).unwrap()
}

pub fn cycle(k: usize) -> Result<Graph, GraphError> {
    param(k >= 3, "cycle needs k >= 3")?;
    let edges = (0..k).map(|i| (i, (i + 1) % k)).collect();
    Graph::new(k, edges, Some(format!("cycle:{k}")))
}

/// Path on `k` vertices.
pub fn path(k: usize) -> Result<Graph, GraphError> {
    param(k >= 1, "path needs k >= 1")?;
    let edges = (1..k).map(|i| (i - 1, i)).collect();
    Graph::new(k, edges, Some(format!("path:{k}")))
}

/// Blocks are laid out consecutively, in order.
pub fn disjoint_union(parts: &[Graph]) -> Graph {
    let mut offset = 0;
    let mut edges = Vec::new();
    for g in parts {
        edges.extend(g.edges().iter().map(|&(u, v)| (u + offset, v + offset)));
        offset += g.vertex_count();
    }
    let name = parts
        .iter()
        .map(|g| g.name().unwrap_or("?").to_string())
        .collect::<Vec<_>>()
        .join("+");
    Graph::new(offset, edges, Some(format!("union:{name}"))).unwrap()
}

/// Generator mini-language: `hypercube:N`, `grid:RxC`, `ladder:K`,
/// `heawood`, `petersen`, `cycle:K`, `path:K`, `union:A+B[+...]`.
pub fn from_spec(spec: &str) -> Result<Graph, GraphError> {
    let spec = spec.trim();
    let bad = |msg: &str| GraphError::InvalidParameter(format!("generator {spec:?}: {msg}"));
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |a: &str| a.trim().parse::<usize>().map_err(|_| bad("expected a non-negative integer"));
    match kind {
        "hypercube" => hypercube(num(arg)?),
        "grid" => {
            let (r, c) = arg.split_once(['x', 'X']).ok_or_else(|| bad("expected RxC"))?;
            grid(num(r)?, num(c)?)
        }
        "ladder" => circular_ladder(num(arg)?),
        "cycle" => cycle(num(arg)?),
        "path" => path(num(arg)?),
        "heawood" if arg.is_empty() => Ok(heawood()),
        "petersen" if arg.is_empty() => Ok(petersen()),
        "union" => {
            let parts = arg.split('+').map(from_spec).collect::<Result<Vec<_>, _>>()?;
            if parts.len() < 2 {
                return Err(bad("a union needs at least two parts"));
            }
            Ok(disjoint_union(&parts))
        }
        _ => Err(bad("unknown generator")),
    }
}

/// Adds a new isolated vertex with label `n`.
pub fn with_isolated_vertex(g: &Graph) -> Graph {
    let name = g.name().map(|s| format!("{s}+K1"));
    Graph::new(g.vertex_count() + 1, g.edges().to_vec(), name).unwrap()
}
