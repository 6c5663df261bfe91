//! Small-scale parameters: cluster delays, powers, per-ray angles, XPR and phases.
//!
//! The steps follow the usual GBSM drop procedure (delays, cluster powers, arrival
//! and departure angles, ray coupling, XPR, initial phases) with two THz-specific
//! additions:
//!
//! * in-cluster ray powers are redistributed by the in-cluster K-factor
//!   ([`apply_in_cluster_k`]);
//! * after the raw draw, cluster delays and azimuth offsets are rescaled so the
//!   composite delay spread and azimuth spread of arrival of the drop equal the
//!   drawn large-scale parameters ([`SpreadMatching::Exact`]). A strong direct
//!   path can pin the azimuth spread; the scattered clusters are then also rotated
//!   away from it ([`azimuth_mapping_for_target`]).

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::analysis::mpc::{Mpc, MpcSet};
use crate::analysis::spread::{asa_eq10_slices, rms_ds_slices};
use crate::lsp::LspRealization;
use crate::params::ScenarioParamSet;
use crate::rng::SimRng;

/// Canonical intra-cluster offsets for 20 rays, in units of the in-cluster spread.
pub const RAY_OFFSETS: [f64; 20] = [
    0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129, 0.6797,
    -0.6797, 0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551,
];

/// Azimuth scaling constants `C_phi^NLOS` against cluster count.
pub const AZIMUTH_SCALING: [(usize, f64); 12] = [
    (4, 0.779),
    (5, 0.860),
    (8, 1.018),
    (10, 1.090),
    (11, 1.123),
    (12, 1.146),
    (14, 1.190),
    (15, 1.211),
    (16, 1.226),
    (19, 1.273),
    (20, 1.289),
    (25, 1.358),
];

/// Zenith scaling constants `C_theta^NLOS` against cluster count.
pub const ZENITH_SCALING: [(usize, f64); 8] = [
    (8, 0.889),
    (10, 0.957),
    (11, 1.031),
    (12, 1.104),
    (15, 1.1088),
    (19, 1.184),
    (20, 1.178),
    (25, 1.282),
];

fn interpolate_table(table: &[(usize, f64)], n: usize) -> f64 {
    let x = n as f64;
    let pick = |i: usize, j: usize| {
        let (x0, y0) = (table[i].0 as f64, table[i].1);
        let (x1, y1) = (table[j].0 as f64, table[j].1);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };
    if let Some(&(_, v)) = table.iter().find(|(k, _)| *k == n) {
        return v;
    }
    let last = table.len() - 1;
    if n < table[0].0 {
        return pick(0, 1);
    }
    if n > table[last].0 {
        return pick(last - 1, last);
    }
    let j = table.iter().position(|(k, _)| *k > n).unwrap_or(last);
    pick(j - 1, j)
}

/// `C_phi^NLOS` for `n` clusters; tabulated counts are exact, others interpolated
/// linearly (extrapolated below 4 and above 25).
pub fn azimuth_scaling(n_clusters: usize) -> f64 {
    interpolate_table(&AZIMUTH_SCALING, n_clusters)
}

pub fn zenith_scaling(n_clusters: usize) -> f64 {
    interpolate_table(&ZENITH_SCALING, n_clusters)
}

fn azimuth_los_factor(k_db: f64) -> f64 {
    (1.1035 - 0.028 * k_db - 0.002 * k_db.powi(2) + 0.0001 * k_db.powi(3)).max(0.25)
}

fn zenith_los_factor(k_db: f64) -> f64 {
    (1.3086 + 0.0339 * k_db - 0.0077 * k_db.powi(2) + 0.0002 * k_db.powi(3)).max(0.25)
}

/// Wrap an azimuth to [-180, 180).
pub fn wrap_azimuth(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        -180.0
    } else {
        w
    }
}

/// Fold a zenith angle into [0, 180].
pub fn wrap_zenith(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w > 180.0 {
        360.0 - w
    } else {
        w
    }
}

/// Directions of the geometric TX -> RX path, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosDirection {
    pub aoa: f64,
    pub zoa: f64,
    pub aod: f64,
    pub zod: f64,
}

impl LosDirection {
    pub fn broadside() -> Self {
        Self {
            aoa: 180.0,
            zoa: 90.0,
            aod: 0.0,
            zod: 90.0,
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            aoa: self.aod,
            zoa: self.zod,
            aod: self.aoa,
            zod: self.zoa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub aoa: f64,
    pub zoa: f64,
    pub aod: f64,
    pub zod: f64,
    /// Cross-polarization power ratio (linear).
    pub xpr: f64,
    /// Initial phases for the (theta-theta, theta-phi, phi-theta, phi-phi) terms.
    pub phases: [f64; 4],
    /// Share of the cluster power carried by this ray.
    pub power_fraction: f64,
    /// Delay of the ray relative to its cluster, seconds. Only the MPC view uses it.
    pub delay_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Cluster delay in seconds.
    pub delay: f64,
    /// Cluster power; cluster powers of a set sum to one.
    pub power: f64,
    pub aoa: f64,
    pub zoa: f64,
    pub aod: f64,
    pub zod: f64,
    pub rays: Vec<Ray>,
}

/// All small-scale parameters of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    /// Linear Ricean K-factor of the direct path, `None` for NLoS.
    pub k_linear: Option<f64>,
    pub los: LosDirection,
}

impl ClusterSet {
    /// Share of total power on the direct path, `K / (K + 1)`.
    pub fn direct_share(&self) -> f64 {
        match self.k_linear {
            Some(k) if k.is_infinite() => 1.0,
            Some(k) => k / (k + 1.0),
            None => 0.0,
        }
    }

    /// Scale applied to cluster powers, `1 / (K + 1)`.
    pub fn scattered_share(&self) -> f64 {
        match self.k_linear {
            Some(k) if k.is_infinite() => 0.0,
            Some(k) => 1.0 / (k + 1.0),
            None => 1.0,
        }
    }

    /// Direct share plus every ray's share of the scattered power.
    pub fn total_power(&self) -> f64 {
        let scattered: f64 = self
            .clusters
            .iter()
            .map(|c| c.power * c.rays.iter().map(|r| r.power_fraction).sum::<f64>())
            .sum();
        self.direct_share() + self.scattered_share() * scattered
    }

    /// Ray-level multipath components (direct path first when present), with labels
    /// giving the cluster index; the direct path gets its own label `clusters.len()`.
    pub fn mpcs(&self) -> MpcSet {
        let mut mpcs = Vec::new();
        let mut labels = Vec::new();
        let direct = self.direct_share();
        if self.k_linear.is_some() && direct > 0.0 {
            mpcs.push(Mpc {
                delay: 0.0,
                power: direct,
                aoa: wrap_azimuth(self.los.aoa),
                zoa: self.los.zoa,
            });
            labels.push(self.clusters.len());
        }
        let scale = self.scattered_share();
        for (n, c) in self.clusters.iter().enumerate() {
            for r in &c.rays {
                let p = scale * c.power * r.power_fraction;
                if p > 0.0 {
                    mpcs.push(Mpc {
                        delay: c.delay + r.delay_offset,
                        power: p,
                        aoa: r.aoa,
                        zoa: r.zoa,
                    });
                    labels.push(n);
                }
            }
        }
        MpcSet {
            mpcs,
            labels: Some(labels),
        }
    }

    /// The same channel seen from the other end: arrival and departure angles are
    /// exchanged and the polarization matrix is transposed.
    pub fn reversed(&self) -> Self {
        let clusters = self
            .clusters
            .iter()
            .map(|c| Cluster {
                delay: c.delay,
                power: c.power,
                aoa: c.aod,
                zoa: c.zod,
                aod: c.aoa,
                zod: c.zoa,
                rays: c
                    .rays
                    .iter()
                    .map(|r| Ray {
                        aoa: r.aod,
                        zoa: r.zod,
                        aod: r.aoa,
                        zod: r.zoa,
                        phases: [r.phases[0], r.phases[2], r.phases[1], r.phases[3]],
                        ..*r
                    })
                    .collect(),
            })
            .collect();
        Self {
            clusters,
            k_linear: self.k_linear,
            los: self.los.reversed(),
        }
    }
}

/// Exponential cluster delays: `tau'_n = -r_tau * ds * ln(U_n)`, sorted, shifted so
/// the first cluster sits at zero.
pub fn gen_delays(n_clusters: usize, ds: f64, r_tau: f64, rng: &mut SimRng) -> Vec<f64> {
    assert!(n_clusters >= 1, "at least one cluster");
    assert!(ds > 0.0 && r_tau >= 1.0, "ds > 0 and r_tau >= 1");
    let mut tau: Vec<f64> = (0..n_clusters)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            -r_tau * ds * u.ln()
        })
        .collect();
    tau.sort_by(|a, b| a.total_cmp(b));
    let first = tau[0];
    tau.iter_mut().for_each(|t| *t -= first);
    tau
}

/// Cluster powers and the direct-path share of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    /// Cluster powers, summing to `1 / (K + 1)` (to one without a direct path).
    pub clusters: Vec<f64>,
    /// Direct-path share `K / (K + 1)`, zero without a direct path.
    pub direct: f64,
}

impl PowerProfile {
    /// Cluster powers renormalized to sum to one.
    pub fn normalized_clusters(&self) -> Vec<f64> {
        let total: f64 = self.clusters.iter().sum();
        self.clusters.iter().map(|p| p / total).collect()
    }
}

/// Exponential power-delay profile with per-cluster lognormal shadowing:
/// `P'_n = exp(-tau_n (r_tau - 1) / (r_tau ds)) * 10^(-Z_n / 10)`, normalized.
/// With a K-factor the clusters share `1 / (K + 1)` and the direct path the rest.
pub fn gen_powers(
    delays: &[f64],
    ds: f64,
    r_tau: f64,
    zeta_db: f64,
    k_linear: Option<f64>,
    rng: &mut SimRng,
) -> PowerProfile {
    let raw: Vec<f64> = delays
        .iter()
        .map(|&tau| {
            let z: f64 = zeta_db * rng.sample::<f64, _>(StandardNormal);
            (-tau * (r_tau - 1.0) / (r_tau * ds)).exp() * 10f64.powf(-z / 10.0)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let (direct, scattered) = match k_linear {
        Some(k) if k.is_infinite() => (1.0, 0.0),
        Some(k) => (k / (k + 1.0), 1.0 / (k + 1.0)),
        None => (0.0, 1.0),
    };
    PowerProfile {
        clusters: raw.iter().map(|p| scattered * p / total).collect(),
        direct,
    }
}

/// How ray powers are split inside a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InClusterPower {
    /// Equal power on every ray.
    Uniform,
    /// The first ray carries `kc / (kc + M - 1)` of the cluster power and every
    /// other ray `1 / (kc + M - 1)`, with `kc = 10^(C_K / 10)`.
    #[default]
    KFactor,
}

/// Per-ray power fractions under the in-cluster K-factor.
pub fn in_cluster_fractions(n_rays: usize, c_k_db: f64) -> Vec<f64> {
    assert!(n_rays >= 1, "at least one ray");
    let kc = 10f64.powf(c_k_db / 10.0);
    let denom = kc + (n_rays as f64 - 1.0);
    (0..n_rays)
        .map(|m| if m == 0 { kc / denom } else { 1.0 / denom })
        .collect()
}

/// Ray power fractions for every cluster.
pub fn apply_in_cluster_k(powers: &[f64], n_rays: usize, c_k_db: f64) -> Vec<Vec<f64>> {
    let fractions = in_cluster_fractions(n_rays, c_k_db);
    powers.iter().map(|_| fractions.clone()).collect()
}

/// Lognormal XPR and uniform initial phases per ray.
#[derive(Debug, Clone, PartialEq)]
pub struct XprPhases {
    /// `xpr[n][m]`, linear.
    pub xpr: Vec<Vec<f64>>,
    /// `phases[n][m]`, radians in [-pi, pi).
    pub phases: Vec<Vec<[f64; 4]>>,
}

pub fn gen_xpr_and_phases(
    n_clusters: usize,
    n_rays: usize,
    xpr_mu_db: f64,
    xpr_sigma_db: f64,
    rng: &mut SimRng,
) -> XprPhases {
    assert!(n_rays >= 1, "at least one ray");
    let mut xpr = Vec::with_capacity(n_clusters);
    let mut phases = Vec::with_capacity(n_clusters);
    for _ in 0..n_clusters {
        let mut xr = Vec::with_capacity(n_rays);
        let mut ph = Vec::with_capacity(n_rays);
        for _ in 0..n_rays {
            let x_db = xpr_mu_db + xpr_sigma_db * rng.sample::<f64, _>(StandardNormal);
            xr.push(10f64.powf(x_db / 10.0));
            let mut p = [0.0; 4];
            for v in p.iter_mut() {
                *v = rng.random_range(-PI..PI);
            }
            ph.push(p);
        }
        xpr.push(xr);
        phases.push(ph);
    }
    XprPhases { xpr, phases }
}

/// First `m` canonical offsets, re-centered to zero mean.
pub fn ray_offsets(n_rays: usize) -> Vec<f64> {
    assert!(
        (1..=RAY_OFFSETS.len()).contains(&n_rays),
        "1..=20 rays per cluster supported"
    );
    let head = &RAY_OFFSETS[..n_rays];
    let mean = head.iter().sum::<f64>() / n_rays as f64;
    head.iter().map(|a| a - mean).collect()
}

/// In-cluster delay offsets with unit standard deviation: a uniform ramp starting
/// at zero, so the first (strongest) ray arrives first.
pub fn ray_delay_offsets(n_rays: usize) -> Vec<f64> {
    if n_rays == 1 {
        return vec![0.0];
    }
    let m = n_rays as f64;
    let std = ((m + 1.0) / (12.0 * (m - 1.0))).sqrt();
    (0..n_rays)
        .map(|i| i as f64 / (m - 1.0) / std)
        .collect()
}
/// Raw cluster-centre offsets relative to the direct-path directions, degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAngles {
    pub aoa: Vec<f64>,
    pub zoa: Vec<f64>,
    pub aod: Vec<f64>,
    pub zod: Vec<f64>,
}

/// Angular spreads used for one drop, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularSpreads {
    pub asa: f64,
    pub asd: f64,
    pub zsa: f64,
    pub zsd: f64,
}

impl AngularSpreads {
    /// ASA from the large-scale draw, the others from the supplemental lognormals.
    pub fn draw(params: &ScenarioParamSet, lsp: &LspRealization, rng: &mut SimRng) -> Self {
        let s = &params.supplemental;
        let mut lognormal = |mu: f64, sigma: f64, cap: f64| {
            let x: f64 = rng.sample(StandardNormal);
            10f64.powf(mu + sigma * x).min(cap)
        };
        let asd = lognormal(s.asd_mu, s.asd_sigma, s.asa_cap_deg);
        let zsa = lognormal(s.zsa_mu, s.zsa_sigma, s.zenith_cap_deg);
        let zsd = lognormal(s.zsd_mu, s.zsd_sigma, s.zenith_cap_deg);
        Self {
            asa: lsp.asa,
            asd,
            zsa,
            zsd,
        }
    }
}

/// Cluster-centre offsets by the inverse-Gaussian construction.
///
/// Azimuth: `phi'_n = 2 (AS / 1.4) sqrt(-ln(P_n / P_max)) / C_phi`, then
/// `X_n phi'_n + Y_n` with random sign `X_n` and `Y_n ~ N(0, (AS / 7)^2)`.
/// Zenith: `theta'_n = -ZS ln(P_n / P_max) / C_theta`, same sign and jitter.
/// For LoS drops the scaling constants get the usual K-dependent correction.
pub fn cluster_offsets(
    powers: &[f64],
    spreads: &AngularSpreads,
    k_db: Option<f64>,
    rng: &mut SimRng,
) -> ClusterAngles {
    let n = powers.len();
    let p_max = powers.iter().copied().fold(f64::MIN, f64::max);
    let mut c_phi = azimuth_scaling(n);
    let mut c_theta = zenith_scaling(n);
    if let Some(k) = k_db {
        c_phi *= azimuth_los_factor(k);
        c_theta *= zenith_los_factor(k);
    }
    let log_ratio: Vec<f64> = powers
        .iter()
        .map(|&p| {
            if p > 0.0 && p_max > 0.0 {
                (p / p_max).ln().min(0.0)
            } else {
                -50.0
            }
        })
        .collect();

    let azimuth = |spread: f64, rng: &mut SimRng| -> Vec<f64> {
        let jitter = Normal::new(0.0, spread / 7.0).expect("finite spread");
        log_ratio
            .iter()
            .map(|&lr| {
                let base = 2.0 * (spread / 1.4) * (-lr).sqrt() / c_phi;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * base + jitter.sample(rng)
            })
            .collect()
    };
    let zenith = |spread: f64, rng: &mut SimRng| -> Vec<f64> {
        let jitter = Normal::new(0.0, spread / 7.0).expect("finite spread");
        log_ratio
            .iter()
            .map(|&lr| {
                let base = -spread * lr / c_theta;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * base + jitter.sample(rng)
            })
            .collect()
    };
    let aoa = azimuth(spreads.asa, rng);
    let aod = azimuth(spreads.asd, rng);
    let zoa = zenith(spreads.zsa, rng);
    let zod = zenith(spreads.zsd, rng);
    ClusterAngles { aoa, zoa, aod, zod }
}

/// Whether cluster delays and azimuth offsets are rescaled to the drawn spreads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpreadMatching {
    None,
    #[default]
    Exact,
}

/// Arrival and departure directions of one cluster centre or ray, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Directions {
    pub aoa: f64,
    pub zoa: f64,
    pub aod: f64,
    pub zod: f64,
}

/// Absolute angles of a drop: `clusters[n]` and `rays[n][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    pub clusters: Vec<Directions>,
    pub rays: Vec<Vec<Directions>>,
}

/// Circular spread (degrees) of weighted azimuths, the one-radian-capped estimator
/// used throughout the analysis side.
fn weighted_circular_spread(direct: f64, weights: &[Vec<f64>], angle: impl Fn(usize, usize) -> f64) -> f64 {
    let mut total = direct;
    let mut re = direct;
    let mut im = 0.0;
    for (n, row) in weights.iter().enumerate() {
        for (m, &w) in row.iter().enumerate() {
            let a = angle(n, m).to_radians();
            total += w;
            re += w * a.cos();
            im += w * a.sin();
        }
    }
    if total <= 0.0 {
        return 0.0;
    }
    let r2 = (re * re + im * im) / (total * total);
    (1.0 - r2).max(0.0).sqrt().to_degrees()
}

/// Mapping of raw cluster azimuth offsets `base[n]` to arrival offsets
/// `scale * base[n] + rotation` relative to the direct path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzimuthMapping {
    pub scale: f64,
    /// Common rotation of the scattered clusters, degrees.
    pub rotation: f64,
}

impl AzimuthMapping {
    pub const IDENTITY: Self = Self {
        scale: 1.0,
        rotation: 0.0,
    };

    pub fn offset(&self, base: f64) -> f64 {
        self.scale * base + self.rotation
    }
}

/// First root of `f(x) >= target` on a grid over `[0, end]`, refined by bisection;
/// otherwise the grid point with the largest `f`.
fn first_crossing(f: impl Fn(f64) -> f64, end: f64, steps: usize, target: f64) -> (f64, bool) {
    let (mut best_x, mut best_v) = (0.0, f(0.0));
    let mut prev = 0.0;
    for i in 1..=steps {
        let x = end * i as f64 / steps as f64;
        let v = f(x);
        if v >= target {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return (hi, true);
        }
        if v > best_v {
            best_v = v;
            best_x = x;
        }
        prev = x;
    }
    (best_x, false)
}

/// Mapping that makes the composite azimuth spread (direct path at zero offset,
/// rays at `scale * base[n] + rotation + ray[n][m]`) reach `target`.
///
/// The scale is searched first with no rotation and the smallest sufficient scale
/// wins. When no scale suffices, the best scale is kept and the scattered clusters
/// are rotated away from the direct path by the smallest sufficient angle. Targets
/// beyond reach of both get the mapping with the largest spread.
pub fn azimuth_mapping_for_target(
    direct: f64,
    weights: &[Vec<f64>],
    base: &[f64],
    ray: &[Vec<f64>],
    target: f64,
) -> AzimuthMapping {
    let spread = |m: AzimuthMapping| {
        weighted_circular_spread(direct, weights, |n, k| m.offset(base[n]) + ray[n][k])
    };
    let at_scale = |scale: f64| AzimuthMapping { scale, rotation: 0.0 };
    if spread(at_scale(0.0)) >= target {
        return at_scale(0.0);
    }
    let max_base = base.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let scale = if max_base > 0.0 {
        let (s, reached) = first_crossing(|s| spread(at_scale(s)), 360.0 / max_base, 720, target);
        if reached {
            return at_scale(s);
        }
        s
    } else {
        0.0
    };
    let rotated = |rotation: f64| spread(AzimuthMapping { scale, rotation });
    let (pos, pos_ok) = first_crossing(rotated, 180.0, 360, target);
    let (neg, neg_ok) = first_crossing(|r| rotated(-r), 180.0, 360, target);
    let rotation = match (pos_ok, neg_ok) {
        (true, true) if neg < pos => -neg,
        (true, _) => pos,
        (false, true) => -neg,
        (false, false) if rotated(-neg) > rotated(pos) => -neg,
        (false, false) => pos,
    };
    AzimuthMapping { scale, rotation }
}

/// Cluster and ray angles for one drop with the default in-cluster power split and
/// exact azimuth-spread matching. `powers` are the cluster powers normalized to one.
pub fn gen_angles(
    powers: &[f64],
    lsp: &LspRealization,
    params: &ScenarioParamSet,
    los: LosDirection,
    rng: &mut SimRng,
) -> AngleSet {
    let fractions = in_cluster_fractions(params.n_rays, params.c_k_db);
    gen_angles_with(powers, &fractions, lsp, params, los, SpreadMatching::Exact, rng)
}

/// [`gen_angles`] with an explicit ray power split and matching policy.
pub fn gen_angles_with(
    powers: &[f64],
    fractions: &[f64],
    lsp: &LspRealization,
    params: &ScenarioParamSet,
    los: LosDirection,
    matching: SpreadMatching,
    rng: &mut SimRng,
) -> AngleSet {
    let s = &params.supplemental;
    let n_rays = fractions.len();
    let k_db = if params.is_los() { lsp.k } else { None };
    let spreads = AngularSpreads::draw(params, lsp, rng);
    let offsets = cluster_offsets(powers, &spreads, k_db, rng);
    let table = ray_offsets(n_rays);

    let mut ray_aoa = Vec::with_capacity(powers.len());
    let mut coupling = Vec::with_capacity(powers.len());
    for _ in powers {
        // Random coupling of departure and zenith offsets to the arrival rays.
        let mut aod: Vec<usize> = (0..n_rays).collect();
        let mut zoa = aod.clone();
        let mut zod = aod.clone();
        aod.shuffle(rng);
        zoa.shuffle(rng);
        zod.shuffle(rng);
        ray_aoa.push(table.iter().map(|a| params.c_asa_deg * a).collect::<Vec<_>>());
        coupling.push((aod, zoa, zod));
    }

    let mapping = match matching {
        SpreadMatching::None => AzimuthMapping::IDENTITY,
        SpreadMatching::Exact => {
            let k_linear = k_db.map(|k| 10f64.powf(k / 10.0));
            let (direct, scattered) = match k_linear {
                Some(k) if k.is_infinite() => (1.0, 0.0),
                Some(k) => (k / (k + 1.0), 1.0 / (k + 1.0)),
                None => (0.0, 1.0),
            };
            let weights: Vec<Vec<f64>> = powers
                .iter()
                .map(|p| fractions.iter().map(|f| scattered * p * f).collect())
                .collect();
            azimuth_mapping_for_target(direct, &weights, &offsets.aoa, &ray_aoa, lsp.asa)
        }
    };

    let mut clusters = Vec::with_capacity(powers.len());
    let mut rays = Vec::with_capacity(powers.len());
    for n in 0..powers.len() {
        let centre = Directions {
            aoa: wrap_azimuth(los.aoa + mapping.offset(offsets.aoa[n])),
            zoa: wrap_zenith(los.zoa + offsets.zoa[n]),
            aod: wrap_azimuth(los.aod + offsets.aod[n]),
            zod: wrap_zenith(los.zod + offsets.zod[n]),
        };
        let (p_aod, p_zoa, p_zod) = &coupling[n];
        rays.push(
            (0..n_rays)
                .map(|m| Directions {
                    aoa: wrap_azimuth(los.aoa + mapping.offset(offsets.aoa[n]) + ray_aoa[n][m]),
                    aod: wrap_azimuth(centre.aod + params.c_asa_deg * table[p_aod[m]]),
                    zoa: wrap_zenith(centre.zoa + s.c_zsa_deg * table[p_zoa[m]]),
                    zod: wrap_zenith(centre.zod + s.c_zsd_deg * table[p_zod[m]]),
                })
                .collect(),
        );
        clusters.push(centre);
    }
    AngleSet { clusters, rays }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterCountMode {
    /// The tabulated cluster count.
    #[default]
    Fixed,
    /// `round(10^(mu + sigma x))`, at least one, from the lognormal count model.
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClusterOptions {
    pub count: ClusterCountMode,
    pub in_cluster: InClusterPower,
    pub matching: SpreadMatching,
}

/// Cluster count for one drop.
pub fn draw_cluster_count(
    params: &ScenarioParamSet,
    mode: ClusterCountMode,
    rng: &mut SimRng,
) -> usize {
    match (mode, params.cluster_count_lognormal) {
        (ClusterCountMode::Lognormal, Some(ln)) => {
            let x: f64 = rng.sample(StandardNormal);
            (10f64.powf(ln.mu + ln.sigma * x).round() as usize).max(1)
        }
        _ => params.n_clusters,
    }
}

/// Composite delay spread of a set (direct path at zero delay included).
pub fn composite_delay_spread(set: &ClusterSet) -> f64 {
    let mpcs = set.mpcs();
    let delays: Vec<f64> = mpcs.mpcs.iter().map(|m| m.delay).collect();
    let powers: Vec<f64> = mpcs.mpcs.iter().map(|m| m.power).collect();
    rms_ds_slices(&delays, &powers).unwrap_or(0.0)
}

/// Composite azimuth spread of arrival, degrees.
pub fn composite_azimuth_spread(set: &ClusterSet) -> f64 {
    let mpcs = set.mpcs();
    let angles: Vec<f64> = mpcs.mpcs.iter().map(|m| m.aoa).collect();
    let powers: Vec<f64> = mpcs.mpcs.iter().map(|m| m.power).collect();
    asa_eq10_slices(&angles, &powers).unwrap_or(0.0)
}

/// Rescale cluster delays so the composite delay spread equals `target` (seconds).
///
/// With weights `w` over all MPCs, MPC delay `a tau_n + delta_m` and the direct path
/// at zero, the weighted variance is `a^2 V_tau + 2 a C + V_delta`; the smallest
/// nonnegative root is used. When the in-cluster offsets alone exceed the target
/// the scale that minimizes the spread is taken instead.
pub fn match_delay_spread(set: &mut ClusterSet, target: f64) {
    let scale = set.scattered_share();
    let direct = set.direct_share();
    let mut w = Vec::new();
    let mut tau = Vec::new();
    let mut delta = Vec::new();
    if set.k_linear.is_some() && direct > 0.0 {
        w.push(direct);
        tau.push(0.0);
        delta.push(0.0);
    }
    for c in &set.clusters {
        for r in &c.rays {
            w.push(scale * c.power * r.power_fraction);
            tau.push(c.delay);
            delta.push(r.delay_offset);
        }
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return;
    }
    let mean = |v: &[f64]| v.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>() / total;
    let m_tau = mean(&tau);
    let m_delta = mean(&delta);
    let (mut v_tau, mut cov, mut v_delta) = (0.0, 0.0, 0.0);
    for i in 0..w.len() {
        let a = tau[i] - m_tau;
        let b = delta[i] - m_delta;
        v_tau += w[i] * a * a;
        cov += w[i] * a * b;
        v_delta += w[i] * b * b;
    }
    v_tau /= total;
    cov /= total;
    v_delta /= total;
    if v_tau <= f64::MIN_POSITIVE {
        return;
    }
    let disc = cov * cov - v_tau * (v_delta - target * target);
    let fallback = (-cov / v_tau).max(0.0);
    let a = if disc >= 0.0 {
        let root = (-cov + disc.sqrt()) / v_tau;
        if root >= 0.0 {
            root
        } else {
            fallback
        }
    } else {
        fallback
    };
    for c in set.clusters.iter_mut() {
        c.delay *= a;
    }
}

/// Expand one large-scale draw into a full cluster set.
pub fn generate_clusters(
    params: &ScenarioParamSet,
    lsp: &LspRealization,
    los: LosDirection,
    options: &ClusterOptions,
    rng: &mut SimRng,
) -> ClusterSet {
    let s = &params.supplemental;
    let n_clusters = draw_cluster_count(params, options.count, rng);
    let n_rays = params.n_rays;
    let k_linear = if params.is_los() {
        lsp.k.map(|k| 10f64.powf(k / 10.0))
    } else {
        None
    };

    let delays = gen_delays(n_clusters, lsp.ds, s.r_tau, rng);
    let powers = gen_powers(&delays, lsp.ds, s.r_tau, s.zeta_db, None, rng).clusters;
    let fractions = match options.in_cluster {
        InClusterPower::KFactor => in_cluster_fractions(n_rays, params.c_k_db),
        InClusterPower::Uniform => in_cluster_fractions(n_rays, 0.0),
    };
    let angles = gen_angles_with(&powers, &fractions, lsp, params, los, options.matching, rng);
    let xp = gen_xpr_and_phases(n_clusters, n_rays, s.xpr_mu_db, s.xpr_sigma_db, rng);
    let delay_offsets = ray_delay_offsets(n_rays);
    let c_ds = params.c_ds_s();
    // Scattered paths trail the direct path instead of sharing its delay.
    let lead = if k_linear.is_some() { c_ds } else { 0.0 };

    let clusters = (0..n_clusters)
        .map(|n| {
            let centre = angles.clusters[n];
            Cluster {
                delay: delays[n] + lead,
                power: powers[n],
                aoa: centre.aoa,
                zoa: centre.zoa,
                aod: centre.aod,
                zod: centre.zod,
                rays: (0..n_rays)
                    .map(|m| {
                        let d = angles.rays[n][m];
                        Ray {
                            aoa: d.aoa,
                            zoa: d.zoa,
                            aod: d.aod,
                            zod: d.zod,
                            xpr: xp.xpr[n][m],
                            phases: xp.phases[n][m],
                            power_fraction: fractions[m],
                            delay_offset: c_ds * delay_offsets[m],
                        }
                    })
                    .collect(),
            }
        })
        .collect();

    let mut set = ClusterSet {
        clusters,
        k_linear,
        los,
    };
    if options.matching == SpreadMatching::Exact {
        match_delay_spread(&mut set, lsp.ds);
    }
    set
}
