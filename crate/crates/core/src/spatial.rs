//! Clustering of slot coordinates into parking sub-areas.
//!
//! Both algorithms run on raw Euclidean coordinates (the datasets use
//! pixels on both axes, so no scaling is applied). K-Means is seeded
//! Lloyd's iteration; DBSCAN is the standard density clustering with
//! unreachable points collected under the dedicated cluster id `noise`,
//! which downstream feature encoding treats as a real category so that
//! every slot always has a sub-area value.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::SlotLayout;
use crate::{Error, Result};

/// Cluster id reserved for DBSCAN noise points.
pub const NOISE_CLUSTER: &str = "noise";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterAlgorithm {
    Kmeans,
    Dbscan,
}

/// Parameters the model was fit with, kept for report sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "algorithm")]
pub enum ClusterParams {
    Kmeans { k: usize, seed: u64 },
    Dbscan { eps: f64, min_samples: usize },
}

/// Slot → sub-area assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialModel {
    pub algorithm: ClusterAlgorithm,
    pub params: ClusterParams,
    /// Total on the layout's slots.
    pub assignment: BTreeMap<String, String>,
    /// All cluster ids in canonical order; DBSCAN appends `noise` last
    /// when any point was unreachable.
    pub cluster_ids: Vec<String>,
}

impl SpatialModel {
    pub fn cluster_of(&self, slot_id: &str) -> Option<&str> {
        self.assignment.get(slot_id).map(|s| s.as_str())
    }

    pub fn n_clusters(&self) -> usize {
        self.cluster_ids.len()
    }

    /// Slots of one cluster, in id order.
    pub fn members(&self, cluster_id: &str) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, c)| c.as_str() == cluster_id)
            .map(|(s, _)| s.as_str())
            .collect()
    }
}

/// Lloyd's K-Means over the layout coordinates.
///
/// Initial centers are `k` slots drawn without replacement from a seeded
/// shuffle, preferring distinct coordinates. Iteration stops when the
/// assignment stabilizes or after 300 rounds; identical seed and input
/// give an identical model.
pub fn kmeans_fit(layout: &SlotLayout, k: usize, seed: u64) -> Result<SpatialModel> {
    kmeans_fit_traced(layout, k, seed).map(|(model, _)| model)
}

/// [`kmeans_fit`] plus the within-cluster sum of squares recorded after
/// every Lloyd iteration.
pub fn kmeans_fit_traced(
    layout: &SlotLayout,
    k: usize,
    seed: u64,
) -> Result<(SpatialModel, Vec<f64>)> {
    let n = layout.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!("kmeans needs k ≥ 2, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "kmeans needs k ≤ number of slots ({n}), got {k}"
        )));
    }

    let points: Vec<(f64, f64)> = layout.slots().iter().map(|s| (s.x, s.y)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut centers: Vec<(f64, f64)> = Vec::with_capacity(k);
    for &i in &order {
        if centers.len() == k {
            break;
        }
        if !centers.contains(&points[i]) {
            centers.push(points[i]);
        }
    }
    // Fewer than k distinct coordinates: fill with duplicates; the extra
    // clusters simply stay empty.
    for &i in &order {
        if centers.len() == k {
            break;
        }
        centers.push(points[i]);
    }

    let mut assignment = vec![0usize; n];
    let mut trace = Vec::new();
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = nearest_center(*p, &centers);
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (i, p) in points.iter().enumerate() {
            let s = &mut sums[assignment[i]];
            s.0 += p.0;
            s.1 += p.1;
            s.2 += 1;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.2 > 0 {
                *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
            // Empty cluster keeps its previous center.
        }
        trace.push(
            points
                .iter()
                .enumerate()
                .map(|(i, p)| sq_dist(*p, centers[assignment[i]]))
                .sum(),
        );
        if !changed {
            break;
        }
    }

    let map: BTreeMap<String, String> = layout
        .slots()
        .iter()
        .zip(&assignment)
        .map(|(s, &c)| (s.slot_id.clone(), c.to_string()))
        .collect();
    let model = SpatialModel {
        algorithm: ClusterAlgorithm::Kmeans,
        params: ClusterParams::Kmeans { k, seed },
        assignment: map,
        cluster_ids: (0..k).map(|c| c.to_string()).collect(),
    };
    Ok((model, trace))
}

fn nearest_center(p: (f64, f64), centers: &[(f64, f64)]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(p, *c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn sq_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Total within-cluster sum of squared distances to centroids; used by
/// property tests to confirm Lloyd's iteration never increases it.
pub fn kmeans_objective(layout: &SlotLayout, model: &SpatialModel) -> f64 {
    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for s in layout.slots() {
        let c = model.cluster_of(&s.slot_id).expect("total assignment");
        groups.entry(c).or_default().push((s.x, s.y));
    }
    groups
        .values()
        .map(|pts| {
            let n = pts.len() as f64;
            let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
            pts.iter().map(|p| sq_dist(*p, (cx, cy))).sum::<f64>()
        })
        .sum()
}

/// DBSCAN on Euclidean slot coordinates.
///
/// Points are processed in (x, y, slot id) order, which makes the labeling
/// independent of input order for distinct coordinates; exact duplicates
/// fall back to slot-id order. Non-core points unreachable from any core
/// point are labeled [`NOISE_CLUSTER`].
pub fn dbscan_fit(layout: &SlotLayout, eps: f64, min_samples: usize) -> Result<SpatialModel> {
    if eps <= 0.0 {
        return Err(Error::InvalidInput("dbscan eps must be positive".into()));
    }
    if min_samples < 1 {
        return Err(Error::InvalidInput(
            "dbscan min_samples must be at least 1".into(),
        ));
    }

    let mut idx: Vec<usize> = (0..layout.len()).collect();
    let slots = layout.slots();
    idx.sort_by(|&a, &b| {
        (slots[a].x, slots[a].y, &slots[a].slot_id)
            .partial_cmp(&(slots[b].x, slots[b].y, &slots[b].slot_id))
            .expect("finite coordinates")
    });

    let eps_sq = eps * eps;
    let neighbors = |i: usize| -> Vec<usize> {
        idx.iter()
            .copied()
            .filter(|&j| sq_dist((slots[i].x, slots[i].y), (slots[j].x, slots[j].y)) <= eps_sq)
            .collect() // includes the point itself
    };

    const UNVISITED: i64 = -2;
    const NOISE: i64 = -1;
    let mut label = vec![UNVISITED; layout.len()];
    let mut next_cluster = 0i64;

    for &i in &idx {
        if label[i] != UNVISITED {
            continue;
        }
        let hood = neighbors(i);
        if hood.len() < min_samples {
            label[i] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        label[i] = cluster;
        let mut queue: Vec<usize> = hood;
        let mut qi = 0;
        while qi < queue.len() {
            let j = queue[qi];
            qi += 1;
            if label[j] == NOISE {
                label[j] = cluster; // border point claimed by first cluster
            }
            if label[j] != UNVISITED {
                continue;
            }
            label[j] = cluster;
            let jh = neighbors(j);
            if jh.len() >= min_samples {
                queue.extend(jh);
            }
        }
    }

    let mut cluster_ids: Vec<String> = (0..next_cluster).map(|c| c.to_string()).collect();
    if label.contains(&NOISE) {
        cluster_ids.push(NOISE_CLUSTER.to_string());
    }
    let assignment: BTreeMap<String, String> = slots
        .iter()
        .zip(&label)
        .map(|(s, &l)| {
            let c = if l == NOISE {
                NOISE_CLUSTER.to_string()
            } else {
                l.to_string()
            };
            (s.slot_id.clone(), c)
        })
        .collect();

    Ok(SpatialModel {
        algorithm: ClusterAlgorithm::Dbscan,
        params: ClusterParams::Dbscan { eps, min_samples },
        assignment,
        cluster_ids,
    })
}

/// Writes `spatial.csv` (`slot_id,cluster_id`) plus a JSON sidecar with the
/// algorithm and parameters.
pub fn write_spatial_csv(model: &SpatialModel, out_dir: impl AsRef<std::path::Path>) -> Result<()> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let path = out_dir.join("spatial.csv");
    let mut w = csv::Writer::from_path(&path)
        .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    w.write_record(["slot_id", "cluster_id"])
        .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    for (slot, cluster) in &model.assignment {
        w.write_record([slot.as_str(), cluster.as_str()])
            .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;

    let meta = out_dir.join("spatial.meta.json");
    let body = serde_json::to_string_pretty(&model.params)
        .map_err(|e| Error::Config(format!("cannot serialize spatial params: {e}")))?;
    std::fs::write(&meta, body).map_err(|e| Error::io(meta.display().to_string(), e))?;
    Ok(())
}
