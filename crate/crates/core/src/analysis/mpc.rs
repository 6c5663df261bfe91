//! Multipath components.

use serde::{Deserialize, Serialize};

use super::pdp::Pdp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    /// Seconds.
    pub delay: f64,
    /// Linear power.
    pub power: f64,
    /// Azimuth of arrival, degrees.
    pub aoa: f64,
    /// Zenith of arrival, degrees.
    pub zoa: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MpcSet {
    pub mpcs: Vec<Mpc>,
    /// Cluster index per MPC, after clustering.
    pub labels: Option<Vec<usize>>,
}

impl MpcSet {
    pub fn new(mpcs: Vec<Mpc>) -> Self {
        Self { mpcs, labels: None }
    }

    pub fn with_labels(mpcs: Vec<Mpc>, labels: Vec<usize>) -> Self {
        Self {
            mpcs,
            labels: Some(labels),
        }
    }

    pub fn len(&self) -> usize {
        self.mpcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mpcs.is_empty()
    }

    /// Every positive bin of every directional PDP becomes one component, with the
    /// receive azimuth and zenith of its direction label. Unlabeled PDPs are taken
    /// as broadside.
    pub fn from_directional(pdps: &[Pdp]) -> Self {
        let mut mpcs = Vec::new();
        for pdp in pdps {
            let (aoa, zoa) = pdp
                .direction
                .map(|d| (d.phi_rx, d.theta_rx))
                .unwrap_or((0.0, 90.0));
            for (i, &p) in pdp.powers.iter().enumerate() {
                if p > 0.0 {
                    mpcs.push(Mpc {
                        delay: pdp.delay(i),
                        power: p,
                        aoa,
                        zoa,
                    });
                }
            }
        }
        Self::new(mpcs)
    }
}
