//! Seeded synthetic graphs for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{AttrId, AttributedGraph, GraphBuilder, VertexId};
use crate::rules::RuleLibrary;

/// Erdős–Rényi style graph with random attribute sets.
#[derive(Debug, Clone, Copy)]
pub struct RandomGraphConfig {
    pub vertices: usize,
    pub edge_prob: f64,
    pub attr_values: usize,
    /// Each vertex draws `0..=max_attrs` distinct values.
    pub max_attrs: usize,
    pub seed: u64,
}

impl Default for RandomGraphConfig {
    fn default() -> Self {
        RandomGraphConfig { vertices: 20, edge_prob: 0.2, attr_values: 6, max_attrs: 3, seed: 0 }
    }
}

pub fn random_graph(cfg: &RandomGraphConfig) -> AttributedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = GraphBuilder::new();
    let names: Vec<String> = (0..cfg.vertices).map(|i| format!("v{i}")).collect();
    let values: Vec<String> = (0..cfg.attr_values).map(|i| format!("a{i}")).collect();
    for name in &names {
        b.vertex(name);
    }
    for i in 0..cfg.vertices {
        for j in i + 1..cfg.vertices {
            if rng.gen_bool(cfg.edge_prob) {
                b.edge(&names[i], &names[j]);
            }
        }
    }
    for name in &names {
        let n = rng.gen_range(0..=cfg.max_attrs.min(cfg.attr_values));
        let picked = values.choose_multiple(&mut rng, n).map(String::as_str);
        b.attributes(name, picked);
    }
    b.build().0
}

/// Stars with a core value on the centre and one leaf value per spoke.
#[derive(Debug, Clone, Copy)]
pub struct PlantConfig {
    pub patterns: usize,
    pub leaves: usize,
    pub instances: usize,
    /// Probability that a spoke's value is replaced by a uniformly random one.
    pub noise: f64,
    /// Random edges added between arbitrary vertices.
    pub extra_edges: usize,
    /// Fraction of centres whose attributes are withheld.
    pub holdout: f64,
    pub seed: u64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig { patterns: 6, leaves: 3, instances: 20, noise: 0.1, extra_edges: 20, holdout: 0.25, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: AttributedGraph,
    /// Withheld centres and the core value each one carried.
    pub held_out: Vec<(VertexId, AttrId)>,
    /// Planted core value and leaf values of every pattern.
    pub planted: Vec<(AttrId, Vec<AttrId>)>,
}

pub fn planted_stars(cfg: &PlantConfig) -> PlantedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = GraphBuilder::new();
    let core_names: Vec<String> = (0..cfg.patterns).map(|i| format!("core{i}")).collect();
    let leaf_names: Vec<Vec<String>> = (0..cfg.patterns)
        .map(|i| (0..cfg.leaves).map(|j| format!("leaf{i}_{j}")).collect())
        .collect();
    let all: Vec<&str> = core_names
        .iter()
        .chain(leaf_names.iter().flatten())
        .map(String::as_str)
        .collect();

    let mut vertices = Vec::new();
    let mut held = Vec::new();
    for i in 0..cfg.patterns {
        for t in 0..cfg.instances {
            let centre = format!("s{i}_{t}");
            if rng.gen_bool(cfg.holdout) {
                held.push((b.vertex(&centre), i));
            } else {
                b.attributes(&centre, [core_names[i].as_str()]);
            }
            vertices.push(centre.clone());
            for j in 0..cfg.leaves {
                let spoke = format!("s{i}_{t}_{j}");
                let value = if rng.gen_bool(cfg.noise) {
                    *all.choose(&mut rng).unwrap()
                } else {
                    leaf_names[i][j].as_str()
                };
                b.attributes(&spoke, [value]);
                b.edge(&centre, &spoke);
                vertices.push(spoke);
            }
        }
    }
    for _ in 0..cfg.extra_edges {
        let u = vertices.choose(&mut rng).unwrap();
        let v = vertices.choose(&mut rng).unwrap();
        b.edge(u, v);
    }
    let graph = b.build().0;
    let id = |l: &str| graph.attr_id(l).expect("planted value");
    let planted: Vec<(AttrId, Vec<AttrId>)> = (0..cfg.patterns)
        .map(|i| (id(&core_names[i]), leaf_names[i].iter().map(|l| id(l)).collect()))
        .collect();
    let held_out = held.into_iter().map(|(v, i)| (v, planted[i].0)).collect();
    PlantedGraph { graph, held_out, planted }
}

/// Cause values linked to a fixed random set of derivative values.
#[derive(Debug, Clone, Copy)]
pub struct RuleFixtureConfig {
    pub causes: usize,
    pub derivatives_per_cause: usize,
    /// Size of the derivative value pool; at least `derivatives_per_cause`.
    pub derivative_pool: usize,
    pub instances: usize,
    /// Vertices with a random derivative value wired to random centres.
    pub noise_vertices: usize,
    pub seed: u64,
}

impl Default for RuleFixtureConfig {
    fn default() -> Self {
        RuleFixtureConfig {
            causes: 11,
            derivatives_per_cause: 11,
            derivative_pool: 22,
            instances: 4,
            noise_vertices: 30,
            seed: 0,
        }
    }
}

/// Graph plus the library of planted (cause, derivative) rules.
pub fn rule_fixture(cfg: &RuleFixtureConfig) -> (AttributedGraph, RuleLibrary) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = GraphBuilder::new();
    let pool: Vec<String> = (0..cfg.derivative_pool).map(|i| format!("alarm{i}")).collect();
    let mut rules = Vec::new();
    let mut centres = Vec::new();
    for c in 0..cfg.causes {
        let cause = format!("cause{c}");
        let derivs: Vec<&String> = pool.choose_multiple(&mut rng, cfg.derivatives_per_cause).collect();
        for d in &derivs {
            rules.push((cause.clone(), (*d).clone()));
        }
        for t in 0..cfg.instances {
            let centre = format!("c{c}_{t}");
            b.attributes(&centre, [cause.as_str()]);
            for (j, d) in derivs.iter().enumerate() {
                let spoke = format!("c{c}_{t}_{j}");
                b.attributes(&spoke, [d.as_str()]);
                b.edge(&centre, &spoke);
            }
            centres.push(centre);
        }
    }
    for n in 0..cfg.noise_vertices {
        let name = format!("noise{n}");
        b.attributes(&name, [pool.choose(&mut rng).unwrap().as_str()]);
        b.edge(&name, centres.choose(&mut rng).unwrap());
    }
    (b.build().0, RuleLibrary::new(rules))
}
