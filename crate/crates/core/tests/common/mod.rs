#![allow(dead_code)]

use propa_core::graph::{
    ball_scale, circular_ladder, cycle, disjoint_union, grid, heawood, hypercube, path, petersen, with_isolated_vertex,
};
use propa_core::{Graph, Rational, Scale};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub label: String,
    pub graph: Graph,
    pub scale: Scale,
}

pub fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

/// Random connected graph: a random recursive tree plus extra edges.
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: f64, name: String) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.gen_bool(extra) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges, Some(name)).unwrap()
}

/// Balls of radius 1 at even vertices and radius 2 at odd ones; not symmetric
/// in general, so it exercises the scale/dual-scale pairing.
pub fn mixed_scale(g: &Graph) -> Scale {
    let (b1, b2) = (ball_scale(g, 1), ball_scale(g, 2));
    let sets = (0..g.vertex_count()).map(|i| if i % 2 == 0 { b1.sets[i].clone() } else { b2.sets[i].clone() }).collect();
    Scale::new(g.vertex_count(), sets).unwrap()
}

/// Generator graphs plus seeded random connected graphs on at most 10 vertices.
pub fn corpus() -> Vec<Instance> {
    let mut graphs: Vec<(Graph, Vec<usize>)> = vec![
        (hypercube(2).unwrap(), vec![1]),
        (hypercube(3).unwrap(), vec![1, 2]),
        (path(2).unwrap(), vec![1]),
        (path(4).unwrap(), vec![1]),
        (path(6).unwrap(), vec![1, 2]),
        (grid(2, 3).unwrap(), vec![1]),
        (grid(3, 3).unwrap(), vec![1]),
        (circular_ladder(4).unwrap(), vec![1]),
        (circular_ladder(7).unwrap(), vec![1]),
        (petersen(), vec![1]),
        (heawood(), vec![1, 2]),
        (disjoint_union(&[hypercube(2).unwrap(), cycle(5).unwrap()]), vec![1]),
        (with_isolated_vertex(&cycle(5).unwrap()), vec![1]),
    ];
    for k in 3..=8 {
        graphs.push((cycle(k).unwrap(), vec![1]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..14 {
        let n = 5 + i % 6;
        graphs.push((random_connected(&mut rng, n, 0.2, format!("random:{n}#{i}")), vec![1]));
    }
    let mut out = Vec::new();
    for (g, radii) in graphs {
        let name = g.name().unwrap_or("?").to_string();
        for s in radii {
            out.push(Instance { label: format!("{name} s={s}"), scale: ball_scale(&g, s), graph: g.clone() });
        }
        if g.vertex_count() <= 10 && g.vertex_count() >= 4 && name.starts_with("random") {
            out.push(Instance { label: format!("{name} mixed"), scale: mixed_scale(&g), graph: g.clone() });
        }
    }
    out
}

/// The 10-vertex chordal example with `ε = 16/17` at radius 1.
pub fn chordal_example() -> Graph {
    let edges = vec![(0, 5), (0, 7), (0, 8), (0, 9), (1, 6), (1, 8), (1, 9), (2, 7), (3, 8), (4, 9), (7, 9), (8, 9)];
    Graph::new(10, edges, Some("chordal-16/17".into())).unwrap()
}

/// Tabulated optimal measures for [`chordal_example`]: `(i, [(j, ξ_i(j))])`.
pub fn chordal_measures() -> Vec<Vec<(usize, Rational)>> {
    let t: [&[(usize, i64)]; 10] = [
        &[(0, 9), (5, 0), (7, 1), (8, 2), (9, 5)],
        &[(1, 1), (6, 8), (8, 3), (9, 5)],
        &[(2, 14), (7, 3)],
        &[(3, 6), (8, 11)],
        &[(4, 12), (9, 5)],
        &[(0, 17), (5, 0)],
        &[(1, 9), (6, 8)],
        &[(0, 3), (2, 6), (7, 3), (9, 5)],
        &[(0, 2), (1, 1), (3, 6), (8, 3), (9, 5)],
        &[(0, 1), (1, 1), (4, 4), (7, 3), (8, 3), (9, 5)],
    ];
    t.iter().map(|col| col.iter().map(|&(j, x)| (j, Rational::new(x, 17))).collect()).collect()
}

/// Tabulated demands for [`chordal_example`], read off the supply table.
pub fn chordal_demands() -> Vec<Rational> {
    [2, 1, 2, 2, 1, 2, 2, 1, 2, 1].iter().map(|&x| Rational::new(x, 17)).collect()
}
