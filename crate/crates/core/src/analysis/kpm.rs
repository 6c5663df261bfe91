//! K-power-means clustering of multipath components.
//!
//! The distance between a component and a centroid is the multiple component
//! distance (MCD):
//!
//! ```text
//! angle = |r_i - c| / 2                     (unit arrival vectors, c unnormalized)
//! delay = zeta * |tau_i - tau_c| / dt_max * tau_std / dt_max
//! MCD   = sqrt(angle^2 + delay^2)
//! ```
//!
//! where `dt_max` is the delay range of the set and `tau_std` its power-weighted
//! delay spread. Lloyd iterations minimize `sum_i P_i MCD_i^2`; power-weighted
//! means are exact minimizers of that objective, so it never increases.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mpc::MpcSet;
use super::spread::{asa_eq10_slices, k_factor_slices, rms_ds_slices, KFactor};
use super::stats::median;
use super::AnalysisError;
use crate::coeff::spherical_unit;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpmConfig {
    /// Delay weight of the MCD.
    pub zeta: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KpmConfig {
    fn default() -> Self {
        Self {
            zeta: 8.0,
            restarts: 10,
            max_iter: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub direction: Vector3<f64>,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpmResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Centroid>,
    /// Final `sum_i P_i MCD_i^2`.
    pub objective: f64,
    /// Objective after every iteration of the winning restart.
    pub trace: Vec<f64>,
}

/// Pre-computed geometry of an MPC set.
struct Points {
    dirs: Vec<Vector3<f64>>,
    delays: Vec<f64>,
    powers: Vec<f64>,
    delay_scale: f64,
}

impl Points {
    fn new(mpcs: &MpcSet, zeta: f64) -> Self {
        let dirs = mpcs.mpcs.iter().map(|m| spherical_unit(m.zoa, m.aoa)).collect();
        let delays: Vec<f64> = mpcs.mpcs.iter().map(|m| m.delay).collect();
        let powers: Vec<f64> = mpcs.mpcs.iter().map(|m| m.power).collect();
        let lo = delays.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = delays.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        let std = rms_ds_slices(&delays, &powers).unwrap_or(0.0);
        let delay_scale = if range > 0.0 {
            zeta * std / (range * range)
        } else {
            0.0
        };
        Self {
            dirs,
            delays,
            powers,
            delay_scale,
        }
    }

    fn len(&self) -> usize {
        self.delays.len()
    }

    fn dist2(&self, i: usize, c: &Centroid) -> f64 {
        let angle = 0.5 * (self.dirs[i] - c.direction).norm();
        let delay = self.delay_scale * (self.delays[i] - c.delay).abs();
        angle * angle + delay * delay
    }

    fn centroid_dist2(&self, a: &Centroid, b: &Centroid) -> f64 {
        let angle = 0.5 * (a.direction - b.direction).norm();
        let delay = self.delay_scale * (a.delay - b.delay).abs();
        angle * angle + delay * delay
    }

    fn point(&self, i: usize) -> Centroid {
        Centroid {
            direction: self.dirs[i],
            delay: self.delays[i],
        }
    }

    fn weighted_mean(&self, members: impl Iterator<Item = usize>) -> Option<Centroid> {
        let mut w = 0.0;
        let mut dir = Vector3::zeros();
        let mut delay = 0.0;
        for i in members {
            let p = self.powers[i];
            w += p;
            dir += self.dirs[i] * p;
            delay += self.delays[i] * p;
        }
        (w > 0.0).then(|| Centroid {
            direction: dir / w,
            delay: delay / w,
        })
    }

    fn objective(&self, labels: &[usize], centroids: &[Centroid]) -> f64 {
        (0..self.len())
            .map(|i| self.powers[i] * self.dist2(i, &centroids[labels[i]]))
            .sum()
    }
}

fn nearest(points: &Points, i: usize, centroids: &[Centroid]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centroids.iter().enumerate() {
        let d = points.dist2(i, c);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

/// Power-weighted k-means++ seeding.
fn seed_centroids(points: &Points, k: usize, seed: u64) -> Vec<Centroid> {
    let mut rng = rng_from_seed(seed);
    let n = points.len();
    let pick = |weights: &[f64], rng: &mut crate::rng::SimRng| -> usize {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return rng.random_range(0..n);
        }
        let mut u = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        n - 1
    };
    let mut centroids = vec![points.point(pick(&points.powers, &mut rng))];
    while centroids.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let d = centroids
                    .iter()
                    .map(|c| points.dist2(i, c))
                    .fold(f64::INFINITY, f64::min);
                points.powers[i] * d
            })
            .collect();
        centroids.push(points.point(pick(&weights, &mut rng)));
    }
    centroids
}

fn lloyd(points: &Points, k: usize, max_iter: usize, seed: u64) -> KpmResult {
    let n = points.len();
    let mut centroids = seed_centroids(points, k, seed);
    let mut labels: Vec<usize> = (0..n).map(|i| nearest(points, i, &centroids)).collect();
    let mut trace = vec![points.objective(&labels, &centroids)];
    for _ in 0..max_iter {
        // Update step; an emptied cluster takes over the worst-served component.
        for c in 0..k {
            match points.weighted_mean((0..n).filter(|&i| labels[i] == c)) {
                Some(m) => centroids[c] = m,
                None => {
                    let worst = (0..n)
                        .max_by(|&a, &b| {
                            let da = points.powers[a] * points.dist2(a, &centroids[labels[a]]);
                            let db = points.powers[b] * points.dist2(b, &centroids[labels[b]]);
                            da.total_cmp(&db)
                        })
                        .unwrap_or(0);
                    centroids[c] = points.point(worst);
                    labels[worst] = c;
                }
            }
        }
        let next: Vec<usize> = (0..n).map(|i| nearest(points, i, &centroids)).collect();
        let changed = next != labels;
        labels = next;
        let obj = points.objective(&labels, &centroids);
        let prev = *trace.last().expect("non-empty trace");
        assert!(
            obj <= prev * (1.0 + 1e-12) + 1e-300,
            "K-power-means objective increased: {prev} -> {obj}"
        );
        trace.push(obj);
        if !changed {
            break;
        }
    }
    KpmResult {
        objective: *trace.last().expect("non-empty trace"),
        labels,
        centroids,
        trace,
    }
}

/// Cluster `mpcs` into `k` groups; the best of `config.restarts` seeded restarts.
pub fn kpower_means(mpcs: &MpcSet, k: usize, config: &KpmConfig) -> Result<KpmResult, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::ZeroClusters);
    }
    if k > mpcs.len() {
        return Err(AnalysisError::TooManyClusters { k, n: mpcs.len() });
    }
    let points = Points::new(mpcs, config.zeta);
    let mut best: Option<KpmResult> = None;
    for r in 0..config.restarts.max(1) {
        let res = lloyd(&points, k, config.max_iter, derive_seed(config.seed, r as u64));
        if best.as_ref().is_none_or(|b| res.objective < b.objective) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Calinski-Harabasz ratio of a clustering under the MCD.
pub fn calinski_harabasz(mpcs: &MpcSet, result: &KpmResult, zeta: f64) -> f64 {
    let points = Points::new(mpcs, zeta);
    let n = points.len();
    let k = result.centroids.len();
    if k < 2 || n <= k {
        return 0.0;
    }
    let global = match points.weighted_mean(0..n) {
        Some(g) => g,
        None => return 0.0,
    };
    let within = points.objective(&result.labels, &result.centroids);
    let between: f64 = result
        .centroids
        .iter()
        .enumerate()
        .map(|(c, centroid)| {
            let w: f64 = (0..n).filter(|&i| result.labels[i] == c).map(|i| points.powers[i]).sum();
            w * points.centroid_dist2(centroid, &global)
        })
        .sum();
    if within <= 0.0 {
        return f64::INFINITY;
    }
    (between / (k as f64 - 1.0)) / (within / (n as f64 - k as f64))
}

/// Power-weighted Davies-Bouldin index under the MCD; lower is better.
pub fn davies_bouldin(mpcs: &MpcSet, result: &KpmResult, zeta: f64) -> f64 {
    let points = Points::new(mpcs, zeta);
    let k = result.centroids.len();
    if k < 2 {
        return f64::INFINITY;
    }
    let scatter: Vec<f64> = (0..k)
        .map(|c| {
            let (mut num, mut den) = (0.0, 0.0);
            for i in (0..points.len()).filter(|&i| result.labels[i] == c) {
                num += points.powers[i] * points.dist2(i, &result.centroids[c]);
                den += points.powers[i];
            }
            if den > 0.0 {
                (num / den).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    (0..k)
        .map(|a| {
            (0..k)
                .filter(|&b| b != a)
                .map(|b| {
                    let sep = points.centroid_dist2(&result.centroids[a], &result.centroids[b]).sqrt();
                    if sep > 0.0 {
                        (scatter[a] + scatter[b]) / sep
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / k as f64
}

/// Xie-Beni index under the MCD: weighted within-cluster distance over the
/// smallest centroid separation; lower is better.
pub fn xie_beni(mpcs: &MpcSet, result: &KpmResult, zeta: f64) -> f64 {
    let points = Points::new(mpcs, zeta);
    let k = result.centroids.len();
    if k < 2 {
        return f64::INFINITY;
    }
    let mut min_sep = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            min_sep = min_sep.min(points.centroid_dist2(&result.centroids[a], &result.centroids[b]));
        }
    }
    let total: f64 = points.powers.iter().sum();
    if !(min_sep > 0.0) || !(total > 0.0) {
        return f64::INFINITY;
    }
    points.objective(&result.labels, &result.centroids) / (total * min_sep)
}

/// Sweep `k` over `k_range` and keep the clustering with the smallest Xie-Beni
/// index. Counts of at least the number of components are skipped.
pub fn select_cluster_count(
    mpcs: &MpcSet,
    k_range: std::ops::RangeInclusive<usize>,
    config: &KpmConfig,
) -> Result<(usize, KpmResult), AnalysisError> {
    let mut best: Option<(f64, usize, KpmResult)> = None;
    for k in k_range {
        if k >= mpcs.len() {
            break;
        }
        let res = kpower_means(mpcs, k, config)?;
        let score = xie_beni(mpcs, &res, config.zeta);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, k, res));
        }
    }
    match best {
        Some((_, k, res)) => Ok((k, res)),
        None => Ok((1, kpower_means(mpcs, 1, config)?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStat {
    pub c_ds_ns: f64,
    pub c_asa_deg: f64,
    pub c_k: KFactor,
    pub n_mpcs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub clusters: Vec<ClusterStat>,
    pub count: usize,
    pub median_c_ds_ns: f64,
    pub median_c_asa_deg: f64,
    /// Median over clusters with a finite in-cluster K; `None` if there are none.
    pub median_c_k_db: Option<f64>,
}

/// Per-cluster delay spread, azimuth spread and strongest-to-rest ratio.
pub fn cluster_stats(mpcs: &MpcSet) -> Result<ClusterStats, AnalysisError> {
    let labels = mpcs.labels.as_ref().ok_or(AnalysisError::Unlabeled)?;
    if labels.len() != mpcs.len() {
        return Err(AnalysisError::LengthMismatch(labels.len(), mpcs.len()));
    }
    let count = labels.iter().max().map(|m| m + 1).unwrap_or(0);
    let mut clusters = Vec::with_capacity(count);
    for c in 0..count {
        let members: Vec<_> = mpcs
            .mpcs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(m, _)| *m)
            .collect();
        if members.is_empty() {
            return Err(AnalysisError::EmptyCluster(c));
        }
        let delays: Vec<f64> = members.iter().map(|m| m.delay).collect();
        let powers: Vec<f64> = members.iter().map(|m| m.power).collect();
        let angles: Vec<f64> = members.iter().map(|m| m.aoa).collect();
        clusters.push(ClusterStat {
            c_ds_ns: rms_ds_slices(&delays, &powers)? * 1e9,
            c_asa_deg: asa_eq10_slices(&angles, &powers)?,
            c_k: k_factor_slices(&powers)?,
            n_mpcs: members.len(),
        });
    }
    let ds: Vec<f64> = clusters.iter().map(|c| c.c_ds_ns).collect();
    let asa: Vec<f64> = clusters.iter().map(|c| c.c_asa_deg).collect();
    let k: Vec<f64> = clusters.iter().filter_map(|c| c.c_k.db()).collect();
    Ok(ClusterStats {
        count,
        median_c_ds_ns: median(&ds),
        median_c_asa_deg: median(&asa),
        median_c_k_db: (!k.is_empty()).then(|| median(&k)),
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::mpc::Mpc;

    fn mpc(delay_ns: f64, power: f64, aoa: f64) -> Mpc {
        Mpc {
            delay: delay_ns * 1e-9,
            power,
            aoa,
            zoa: 90.0,
        }
    }

    #[test]
    fn single_cluster_takes_everything() {
        let set = MpcSet::new(vec![mpc(0.0, 1.0, 0.0), mpc(3.0, 0.5, 40.0), mpc(9.0, 0.1, -70.0)]);
        let r = kpower_means(&set, 1, &KpmConfig::default()).unwrap();
        assert_eq!(r.labels, vec![0, 0, 0]);
    }

    #[test]
    fn too_many_clusters_rejected() {
        let set = MpcSet::new(vec![mpc(0.0, 1.0, 0.0)]);
        assert_eq!(
            kpower_means(&set, 2, &KpmConfig::default()),
            Err(AnalysisError::TooManyClusters { k: 2, n: 1 })
        );
    }

    #[test]
    fn duplicates_share_a_label() {
        let set = MpcSet::new(vec![
            mpc(0.0, 1.0, 0.0),
            mpc(0.0, 1.0, 0.0),
            mpc(10.0, 1.0, 120.0),
            mpc(20.0, 1.0, -120.0),
        ]);
        for k in 1..=3 {
            let r = kpower_means(&set, k, &KpmConfig::default()).unwrap();
            assert_eq!(r.labels[0], r.labels[1]);
        }
    }

    #[test]
    fn stats_cases() {
        let singles = MpcSet::with_labels(vec![mpc(0.0, 1.0, 0.0), mpc(5.0, 2.0, 30.0)], vec![0, 1]);
        let s = cluster_stats(&singles).unwrap();
        assert_eq!(s.count, 2);
        assert!(s.clusters.iter().all(|c| c.c_ds_ns == 0.0 && c.c_k == KFactor::Infinite));
        assert_eq!(s.median_c_k_db, None);

        let pair = MpcSet::with_labels(vec![mpc(0.0, 1.0, 0.0), mpc(1.0, 1.0, 0.0)], vec![0, 0]);
        assert!((cluster_stats(&pair).unwrap().median_c_ds_ns - 0.5).abs() < 1e-12);

        let rays = MpcSet::with_labels(
            vec![mpc(0.0, 10.0, 0.0), mpc(1.0, 1.0, 2.0), mpc(2.0, 1.0, -2.0)],
            vec![0, 0, 0],
        );
        let k = cluster_stats(&rays).unwrap().median_c_k_db.unwrap();
        assert!((k - 6.9897).abs() < 1e-4);

        let gap = MpcSet::with_labels(vec![mpc(0.0, 1.0, 0.0)], vec![1]);
        assert_eq!(cluster_stats(&gap), Err(AnalysisError::EmptyCluster(0)));
    }
}
