//! Betweenness centrality over roadmaps and a rule-based topology label.
//!
//! Centrality is computed with Brandes' accumulation over every source (or a
//! seeded sample of sources). The classifier looks at the shape of the
//! normalized field: how uniform it is, whether the high values sit on thin
//! chains, and whether large open areas of low centrality exist next to them.

use std::collections::VecDeque;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roadmap::{GridRoadmap, VertexId};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("roadmap has no vertices")]
    EmptyRoadmap,

    #[error("sample of {sample} sources exceeds the {vertices} vertices")]
    SampleTooLarge { sample: usize, vertices: usize },

    #[error("field has {field} values but the roadmap has {vertices} vertices")]
    FieldMismatch { field: usize, vertices: usize },

    #[error("cannot write heatmap: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-vertex betweenness values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityField {
    pub raw: Vec<f64>,
    /// `(raw - min) / (max - min)`, or all zeros when the field is flat.
    pub normalized: Vec<f64>,
    pub raw_variance: f64,
}

impl CentralityField {
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let n = raw.len();
        let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let normalized = if n > 0 && hi > lo {
            raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
        } else {
            vec![0.0; n]
        };
        let raw_variance = if n == 0 {
            0.0
        } else {
            let mean = raw.iter().sum::<f64>() / n as f64;
            raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
        };
        CentralityField {
            raw,
            normalized,
            raw_variance,
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// How many sources to accumulate from. `None` means all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub sources: usize,
    pub seed: u64,
}

/// Betweenness centrality of an undirected, unweighted graph, each
/// unordered pair of endpoints counted once.
pub fn betweenness(adjacency: &[Vec<VertexId>], sample: Option<Sampling>) -> Result<CentralityField, TopologyError> {
    let n = adjacency.len();
    let sources: Vec<usize> = match sample {
        None => (0..n).collect(),
        Some(s) if s.sources > n => {
            return Err(TopologyError::SampleTooLarge {
                sample: s.sources,
                vertices: n,
            })
        }
        Some(s) => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut ChaCha8Rng::seed_from_u64(s.seed));
            all.truncate(s.sources);
            all.sort_unstable();
            all
        }
    };

    let mut bc = vec![0.0f64; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![u32::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for &s in &sources {
        order.clear();
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = u32::MAX);
        delta.iter_mut().for_each(|x| *x = 0.0);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for w in &adjacency[v] {
                let w = w.index();
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        for &w in order.iter().rev() {
            for v in &adjacency[w] {
                let v = v.index();
                if dist[v] != u32::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }

    let scale = if sources.is_empty() {
        0.0
    } else {
        0.5 * n as f64 / sources.len() as f64
    };
    bc.iter_mut().for_each(|x| *x *= scale);
    Ok(CentralityField::from_raw(bc))
}

/// Connected components, labelled in order of their smallest vertex id.
pub fn components(adjacency: &[Vec<VertexId>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for w in &adjacency[v] {
                if label[w.index()] == usize::MAX {
                    label[w.index()] = next;
                    stack.push(w.index());
                }
            }
        }
        next += 1;
    }
    label
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    LargeOpen,
    Featureless,
    NarrowDominated,
    Mixed,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::LargeOpen => "LargeOpen",
            Topology::Featureless => "Featureless",
            Topology::NarrowDominated => "NarrowDominated",
            Topology::Mixed => "Mixed",
        }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Thresholds of the classifier. Cell-based sizes are scaled by the roadmap
/// resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Coefficient of variation of raw centrality below which a map is open.
    pub empty_cv_threshold: f64,
    /// Fraction of high vertices forming a solid core above which a map is open.
    pub core_fraction: f64,
    /// Normalized centrality at or above which a vertex is "high".
    pub high_threshold: f64,
    /// Smallest connected run of narrow high vertices counted as a chain.
    pub chain_min: usize,
    /// Share of high-centrality mass on chains needed for NarrowDominated.
    pub narrow_fraction: f64,
    /// Normalized centrality at or below which an open vertex is "low".
    pub low_threshold: f64,
    /// Smallest open low-centrality cluster, in cells.
    pub open_cluster_min_cells: usize,
    /// Share of vertices in open low clusters that counts as substantial.
    pub open_cluster_fraction: f64,
    /// Resolution classification is run at.
    pub resolution: u32,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            empty_cv_threshold: 0.5,
            core_fraction: 0.5,
            high_threshold: 0.6,
            chain_min: 5,
            narrow_fraction: 0.5,
            low_threshold: 0.2,
            open_cluster_min_cells: 16,
            open_cluster_fraction: 0.15,
            resolution: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Coefficient of variation of the raw field on the classified component.
    pub cv: f64,
    /// High vertices whose four neighbours are all high, over all high vertices.
    pub core_fraction: f64,
    /// Share of high-centrality mass lying on narrow chains.
    pub chain_fraction: f64,
    /// High vertices in runs shorter than `chain_min`, over all high vertices.
    pub isolated_fraction: f64,
    /// Share of vertices inside large open low-centrality clusters.
    pub open_cluster_mass: f64,
    pub high_vertices: usize,
    pub component_vertices: usize,
    pub component_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyLabel {
    pub label: Topology,
    pub evidence: Evidence,
}

/// Labels the largest connected component of `roadmap` from its centrality.
pub fn classify(
    roadmap: &GridRoadmap,
    field: &CentralityField,
    config: &ClassifierConfig,
) -> Result<TopologyLabel, TopologyError> {
    let n = roadmap.num_vertices();
    if n == 0 {
        return Err(TopologyError::EmptyRoadmap);
    }
    if field.len() != n {
        return Err(TopologyError::FieldMismatch {
            field: field.len(),
            vertices: n,
        });
    }
    let adjacency = roadmap.adjacency();
    let comp = components(adjacency);
    let component_count = comp.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; component_count];
    comp.iter().for_each(|&c| sizes[c] += 1);
    // ties go to the component holding the smallest vertex id
    let main = (0..component_count)
        .max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)))
        .unwrap();
    let members: Vec<usize> = (0..n).filter(|&v| comp[v] == main).collect();
    let in_main = |v: usize| comp[v] == main;

    let raw: Vec<f64> = members.iter().map(|&v| field.raw[v]).collect();
    let sub = CentralityField::from_raw(raw);
    let mean = sub.raw.iter().sum::<f64>() / sub.len() as f64;
    let cv = if mean > 0.0 {
        sub.raw_variance.sqrt() / mean
    } else {
        0.0
    };
    let mut norm = vec![0.0f64; n];
    for (k, &v) in members.iter().enumerate() {
        norm[v] = sub.normalized[k];
    }

    let r = roadmap.resolution() as i64;
    let high: Vec<bool> = (0..n).map(|v| in_main(v) && norm[v] >= config.high_threshold).collect();
    let high_count = high.iter().filter(|&&h| h).count();

    let is_open = |v: usize| {
        let vx = roadmap.vertex(VertexId(v as u32));
        let (i, j) = (vx.i as i64, vx.j as i64);
        (-1..=1).all(|dy| {
            (-1..=1).all(|dx| {
                let (a, b) = (i + dx * r, j + dy * r);
                a >= 0 && b >= 0 && roadmap.vertex_at_lattice(a as u32, b as u32).is_some()
            })
        })
    };
    let open: Vec<bool> = (0..n).map(|v| in_main(v) && is_open(v)).collect();

    let core = (0..n)
        .filter(|&v| high[v] && adjacency[v].len() == 4 && adjacency[v].iter().all(|w| high[w.index()]))
        .count();
    let core_fraction = ratio(core, high_count);

    let narrow: Vec<bool> = (0..n).map(|v| high[v] && !open[v]).collect();
    let mut chain_mass = 0.0;
    for run in clusters(adjacency, &narrow) {
        if run.len() >= config.chain_min {
            chain_mass += run.iter().map(|&v| norm[v]).sum::<f64>();
        }
    }
    let high_mass: f64 = (0..n).filter(|&v| high[v]).map(|v| norm[v]).sum();
    let chain_fraction = if high_mass > 0.0 {
        (chain_mass / high_mass).min(1.0)
    } else {
        0.0
    };

    let isolated: usize = clusters(adjacency, &high)
        .iter()
        .filter(|c| c.len() < config.chain_min)
        .map(Vec::len)
        .sum();
    let isolated_fraction = ratio(isolated, high_count);

    let low_open: Vec<bool> = (0..n).map(|v| open[v] && norm[v] <= config.low_threshold).collect();
    let min_cluster = config.open_cluster_min_cells * (r * r) as usize;
    let open_low: usize = clusters(adjacency, &low_open)
        .iter()
        .filter(|c| c.len() >= min_cluster)
        .map(Vec::len)
        .sum();
    let open_cluster_mass = ratio(open_low, members.len());

    let label = if cv < config.empty_cv_threshold || core_fraction >= config.core_fraction {
        Topology::LargeOpen
    } else if chain_fraction >= config.narrow_fraction && open_cluster_mass < config.open_cluster_fraction {
        Topology::NarrowDominated
    } else if high_count > 0 && open_cluster_mass >= config.open_cluster_fraction {
        Topology::Mixed
    } else {
        Topology::Featureless
    };

    Ok(TopologyLabel {
        label,
        evidence: Evidence {
            cv,
            core_fraction,
            chain_fraction,
            isolated_fraction,
            open_cluster_mass,
            high_vertices: high_count,
            component_vertices: members.len(),
            component_count,
        },
    })
}

/// Computes the exact field and the label in one go.
pub fn analyze(
    roadmap: &GridRoadmap,
    config: &ClassifierConfig,
) -> Result<(CentralityField, TopologyLabel), TopologyError> {
    let field = betweenness(roadmap.adjacency(), None)?;
    let label = classify(roadmap, &field, config)?;
    Ok((field, label))
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Connected groups of the vertices selected by `mask`.
fn clusters(adjacency: &[Vec<VertexId>], mask: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for s in 0..mask.len() {
        if !mask[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut group = vec![s];
        let mut k = 0;
        while k < group.len() {
            let v = group[k];
            k += 1;
            for w in &adjacency[v] {
                let w = w.index();
                if mask[w] && !seen[w] {
                    seen[w] = true;
                    group.push(w);
                }
            }
        }
        out.push(group);
    }
    out
}

/// Writes `x,y,bc` rows (vertex position and normalized centrality).
pub fn emit_heatmap<W: Write>(roadmap: &GridRoadmap, field: &CentralityField, mut out: W) -> Result<(), TopologyError> {
    if field.len() != roadmap.num_vertices() {
        return Err(TopologyError::FieldMismatch {
            field: field.len(),
            vertices: roadmap.num_vertices(),
        });
    }
    writeln!(out, "x,y,bc")?;
    for (v, bc) in roadmap.ids().zip(&field.normalized) {
        let p = roadmap.point(v);
        writeln!(out, "{:.6},{:.6},{:.6}", p.x, p.y, bc)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_heatmap(
    roadmap: &GridRoadmap,
    field: &CentralityField,
    path: &std::path::Path,
) -> Result<(), TopologyError> {
    let file = std::fs::File::create(path)?;
    emit_heatmap(roadmap, field, std::io::BufWriter::new(file))
}
