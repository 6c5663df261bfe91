//! Channel coefficients.
//!
//! A ray contributes
//!
//! ```text
//! sqrt(P) * F_rx^T * [[e^{j a}, k e^{j b}], [k e^{j c}, e^{j d}]] * F_tx
//!         * exp(j 2 pi (r_rx . d_rx + r_tx . d_tx + r_rx . v t) / lambda)
//! ```
//!
//! with `k = sqrt(1 / XPR)`. The direct path uses the fixed matrix `diag(1, -1)` and
//! the propagation phase `exp(-j 2 pi d / lambda)`. Scattered rays are weighted by
//! `sqrt(1 / (K + 1))` and the direct path by `sqrt(K / (K + 1))`.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::antenna::AntennaArray;
use crate::cluster::{Cluster, ClusterSet, LosDirection, Ray};

/// Sub-cluster delay unit of the standard mode, seconds.
pub const SUB_CLUSTER_C_DS: f64 = 3.91e-9;

/// Ray membership of the three sub-clusters (1-based ray numbers).
const SUB_CLUSTER_RAYS: [&[usize]; 3] = [
    &[1, 2, 3, 4, 5, 6, 7, 8, 19, 20],
    &[9, 10, 11, 12, 17, 18],
    &[13, 14, 15, 16],
];

/// `(sin z cos a, sin z sin a, cos z)` for zenith `z` and azimuth `a` in degrees.
pub fn spherical_unit(zenith_deg: f64, azimuth_deg: f64) -> Vector3<f64> {
    let (z, a) = (zenith_deg.to_radians(), azimuth_deg.to_radians());
    Vector3::new(z.sin() * a.cos(), z.sin() * a.sin(), z.cos())
}

/// Receiver and transmitter arrays of a link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkArrays {
    pub rx: AntennaArray,
    pub tx: AntennaArray,
}

impl LinkArrays {
    pub fn new(rx: AntennaArray, tx: AntennaArray) -> Self {
        Self { rx, tx }
    }

    /// The link seen from the other end.
    pub fn swapped(&self) -> Self {
        Self {
            rx: self.tx.clone(),
            tx: self.rx.clone(),
        }
    }
}

/// Carrier and mobility shared by every coefficient of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    pub wavelength: f64,
    /// Receiver velocity, m/s.
    pub velocity: Vector3<f64>,
}

impl Propagation {
    pub fn static_link(wavelength: f64) -> Self {
        Self {
            wavelength,
            velocity: Vector3::zeros(),
        }
    }
}

/// `a^T M b` for real 2-vectors, summed so that swapping `a` and `b` while
/// transposing `M` gives a bit-identical result.
fn bilinear(a: (f64, f64), m: &[[Complex64; 2]; 2], b: (f64, f64)) -> Complex64 {
    let t00 = m[0][0] * (a.0 * b.0);
    let t11 = m[1][1] * (a.1 * b.1);
    let t01 = m[0][1] * (a.0 * b.1);
    let t10 = m[1][0] * (a.1 * b.0);
    (t00 + t11) + (t01 + t10)
}

fn polarization_matrix(ray: &Ray) -> [[Complex64; 2]; 2] {
    let cross = (1.0 / ray.xpr).sqrt();
    let [tt, tp, pt, pp] = ray.phases;
    [
        [Complex64::cis(tt), Complex64::cis(tp) * cross],
        [Complex64::cis(pt) * cross, Complex64::cis(pp)],
    ]
}

const LOS_POLARIZATION: [[Complex64; 2]; 2] = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
];

/// Phase (radians) of the array and Doppler terms for one element pair.
fn geometric_phase(
    r_rx: &Vector3<f64>,
    r_tx: &Vector3<f64>,
    d_rx: &Vector3<f64>,
    d_tx: &Vector3<f64>,
    prop: &Propagation,
    t: f64,
) -> f64 {
    let k = 2.0 * PI / prop.wavelength;
    let doppler = r_rx.dot(&prop.velocity) * t;
    (k * r_rx.dot(d_rx) + k * r_tx.dot(d_tx)) + k * doppler
}

/// Coefficient of one scattered ray for the element pair `(u, s)` at time `t`,
/// before the `1 / (K + 1)` weighting.
pub fn nlos_ray_coeff(
    ray: &Ray,
    cluster: &Cluster,
    arrays: &LinkArrays,
    u: usize,
    s: usize,
    t: f64,
    prop: &Propagation,
) -> Complex64 {
    let amp = (cluster.power * ray.power_fraction).sqrt();
    let f_rx = arrays.rx.pattern.field(ray.zoa, ray.aoa);
    let f_tx = arrays.tx.pattern.field(ray.zod, ray.aod);
    let pol = bilinear(f_rx, &polarization_matrix(ray), f_tx);
    let r_rx = spherical_unit(ray.zoa, ray.aoa);
    let r_tx = spherical_unit(ray.zod, ray.aod);
    let phase = geometric_phase(
        &r_rx,
        &r_tx,
        &arrays.rx.positions[u],
        &arrays.tx.positions[s],
        prop,
        t,
    );
    pol * amp * Complex64::cis(phase)
}

/// Geometry of the direct path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGeometry {
    pub direction: LosDirection,
    /// 3D TX-RX distance, meters.
    pub distance: f64,
}

/// Coefficient of the direct path for `(u, s)` at time `t`, before the
/// `K / (K + 1)` weighting.
pub fn los_coeff(
    geometry: &LosGeometry,
    arrays: &LinkArrays,
    u: usize,
    s: usize,
    t: f64,
    prop: &Propagation,
) -> Complex64 {
    let dir = &geometry.direction;
    let f_rx = arrays.rx.pattern.field(dir.zoa, dir.aoa);
    let f_tx = arrays.tx.pattern.field(dir.zod, dir.aod);
    let pol = bilinear(f_rx, &LOS_POLARIZATION, f_tx);
    let r_rx = spherical_unit(dir.zoa, dir.aoa);
    let r_tx = spherical_unit(dir.zod, dir.aod);
    let propagation = -2.0 * PI * geometry.distance / prop.wavelength;
    let phase = geometric_phase(
        &r_rx,
        &r_tx,
        &arrays.rx.positions[u],
        &arrays.tx.positions[s],
        prop,
        t,
    );
    pol * Complex64::cis(propagation + phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CirMode {
    /// The two strongest clusters are split into three delayed sub-clusters.
    Standard,
    /// One tap per cluster.
    #[default]
    ThzSimplified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirConfig {
    pub mode: CirMode,
    /// Sub-cluster delay unit for the standard mode, seconds.
    pub sub_cluster_c_ds: f64,
    pub propagation: Propagation,
    /// Time samples, seconds.
    pub times: Vec<f64>,
    /// 3D length of the direct path; needed only when the set has a K-factor.
    pub los_distance: f64,
}

impl CirConfig {
    pub fn new(mode: CirMode, wavelength: f64, los_distance: f64) -> Self {
        Self {
            mode,
            sub_cluster_c_ds: SUB_CLUSTER_C_DS,
            propagation: Propagation::static_link(wavelength),
            times: vec![0.0],
            los_distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tap {
    /// Delay in seconds.
    pub delay: f64,
    /// `coeffs[(t * n_rx + u) * n_tx + s]`.
    pub coeffs: Vec<Complex64>,
    /// Expected power of the tap per element pair for unit-gain elements.
    pub power: f64,
}

/// Tap list shared by every element pair of a link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub n_rx: usize,
    pub n_tx: usize,
    pub times: Vec<f64>,
    pub taps: Vec<Tap>,
    pub wavelength: f64,
    pub velocity: Vector3<f64>,
}

impl ChannelRealization {
    fn index(&self, t: usize, u: usize, s: usize) -> usize {
        (t * self.n_rx + u) * self.n_tx + s
    }

    pub fn coeff(&self, tap: usize, t: usize, u: usize, s: usize) -> Complex64 {
        self.taps[tap].coeffs[self.index(t, u, s)]
    }

    /// Sum of expected tap powers.
    pub fn expected_power(&self) -> f64 {
        self.taps.iter().map(|t| t.power).sum()
    }

    /// Realized power `sum_taps |h|^2` of one element pair at time index `t`.
    pub fn pair_power(&self, t: usize, u: usize, s: usize) -> f64 {
        let i = self.index(t, u, s);
        self.taps.iter().map(|tap| tap.coeffs[i].norm_sqr()).sum()
    }
}

struct TapBuilder {
    delay: f64,
    coeffs: Vec<Complex64>,
    power: f64,
}

fn sub_cluster_of(ray_number: usize) -> usize {
    SUB_CLUSTER_RAYS
        .iter()
        .position(|set| set.contains(&ray_number))
        .unwrap_or(0)
}

/// Delay of every ray of every cluster under the selected mode.
fn ray_delays(set: &ClusterSet, config: &CirConfig) -> Vec<Vec<f64>> {
    let mut strongest: Vec<usize> = (0..set.clusters.len()).collect();
    strongest.sort_by(|&a, &b| set.clusters[b].power.total_cmp(&set.clusters[a].power));
    strongest.truncate(2);
    set.clusters
        .iter()
        .enumerate()
        .map(|(n, c)| {
            (0..c.rays.len())
                .map(|m| match config.mode {
                    CirMode::Standard if strongest.contains(&n) => {
                        let sub = sub_cluster_of(m + 1);
                        c.delay + 1.28 * sub as f64 * config.sub_cluster_c_ds
                    }
                    _ => c.delay,
                })
                .collect()
        })
        .collect()
}

/// Assemble the tap list of a drop. Taps with identical delays are merged, so the
/// direct path shares the zero-delay tap with the first cluster, and a zero
/// sub-cluster spacing reproduces the simplified tap set.
pub fn assemble_cir(set: &ClusterSet, arrays: &LinkArrays, config: &CirConfig) -> ChannelRealization {
    let n_rx = arrays.rx.len();
    let n_tx = arrays.tx.len();
    let n_t = config.times.len();
    let size = n_t * n_rx * n_tx;
    let prop = &config.propagation;
    let mut taps: Vec<TapBuilder> = Vec::new();
    let tap_at = |delay: f64, taps: &mut Vec<TapBuilder>| -> usize {
        match taps.iter().position(|t| t.delay == delay) {
            Some(i) => i,
            None => {
                taps.push(TapBuilder {
                    delay,
                    coeffs: vec![Complex64::new(0.0, 0.0); size],
                    power: 0.0,
                });
                taps.len() - 1
            }
        }
    };

    let direct = set.direct_share();
    if set.k_linear.is_some() && direct > 0.0 {
        let geometry = LosGeometry {
            direction: set.los,
            distance: config.los_distance,
        };
        let i = tap_at(0.0, &mut taps);
        let w = direct.sqrt();
        for (ti, &t) in config.times.iter().enumerate() {
            for u in 0..n_rx {
                for s in 0..n_tx {
                    taps[i].coeffs[(ti * n_rx + u) * n_tx + s] +=
                        los_coeff(&geometry, arrays, u, s, t, prop) * w;
                }
            }
        }
        taps[i].power += direct;
    }

    let scattered = set.scattered_share();
    if scattered > 0.0 {
        let w = scattered.sqrt();
        let delays = ray_delays(set, config);
        for (n, cluster) in set.clusters.iter().enumerate() {
            for (m, ray) in cluster.rays.iter().enumerate() {
                let i = tap_at(delays[n][m], &mut taps);
                for (ti, &t) in config.times.iter().enumerate() {
                    for u in 0..n_rx {
                        for s in 0..n_tx {
                            taps[i].coeffs[(ti * n_rx + u) * n_tx + s] +=
                                nlos_ray_coeff(ray, cluster, arrays, u, s, t, prop) * w;
                        }
                    }
                }
                taps[i].power += scattered * cluster.power * ray.power_fraction;
            }
        }
    }

    taps.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    ChannelRealization {
        n_rx,
        n_tx,
        times: config.times.clone(),
        taps: taps
            .into_iter()
            .map(|t| Tap {
                delay: t.delay,
                coeffs: t.coeffs,
                power: t.power,
            })
            .collect(),
        wavelength: prop.wavelength,
        velocity: prop.velocity,
    }
}

/// Frequency response `H(f) = sum_taps a exp(-j 2 pi f tau)` at time index `t`,
/// one `n_rx x n_tx` matrix per frequency (baseband offsets in Hz).
pub fn cir_to_ctf(cir: &ChannelRealization, freqs: &[f64], t: usize) -> Vec<DMatrix<Complex64>> {
    freqs
        .iter()
        .map(|&f| {
            let mut h = DMatrix::<Complex64>::zeros(cir.n_rx, cir.n_tx);
            for tap in &cir.taps {
                let rot = Complex64::cis(-2.0 * PI * f * tap.delay);
                for u in 0..cir.n_rx {
                    for s in 0..cir.n_tx {
                        h[(u, s)] += tap.coeffs[cir.index(t, u, s)] * rot;
                    }
                }
            }
            h
        })
        .collect()
}
