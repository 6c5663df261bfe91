//! Power-delay profiles and directional angular power.

use serde::{Deserialize, Serialize};

use super::spread::{asa_3gpp_slices, asa_eq10_slices, k_factor_slices, rms_ds_slices, KFactor};
use super::AnalysisError;

/// Pointing of a directional measurement, degrees. `theta_rx` is a zenith angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub phi_tx: f64,
    pub phi_rx: f64,
    pub theta_rx: f64,
}

/// Linear power on a uniform delay grid `delay_start + i * delay_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdp {
    pub delay_start: f64,
    pub delay_step: f64,
    pub powers: Vec<f64>,
    pub direction: Option<Direction>,
}

impl Pdp {
    pub fn new(delay_step: f64, powers: Vec<f64>) -> Result<Self, AnalysisError> {
        if !(delay_step > 0.0) {
            return Err(AnalysisError::BadStep);
        }
        if let Some(&p) = powers.iter().find(|&&p| p < 0.0) {
            return Err(AnalysisError::NegativePower(p));
        }
        Ok(Self {
            delay_start: 0.0,
            delay_step,
            powers,
            direction: None,
        })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = Some(direction);
        self
    }

    pub fn delay(&self, i: usize) -> f64 {
        self.delay_start + i as f64 * self.delay_step
    }

    pub fn delays(&self) -> Vec<f64> {
        (0..self.powers.len()).map(|i| self.delay(i)).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.powers.iter().all(|&p| p == 0.0)
    }

    fn same_grid(&self, other: &Pdp) -> bool {
        self.delay_start == other.delay_start
            && self.delay_step == other.delay_step
            && self.powers.len() == other.powers.len()
    }
}

/// One power sample of a directional measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSample {
    pub direction: Direction,
    /// Seconds.
    pub delay: f64,
    /// Linear power.
    pub power: f64,
}

/// Bin samples onto a shared delay grid, one PDP per distinct direction. Samples
/// landing in the same bin and direction add up. PDPs come out ordered by
/// direction.
pub fn directional_pdps(samples: &[DirectionalSample], delay_step: f64) -> Result<Vec<Pdp>, AnalysisError> {
    if !(delay_step > 0.0 && delay_step.is_finite()) {
        return Err(AnalysisError::BadStep);
    }
    if samples.is_empty() {
        return Err(AnalysisError::TooFewSamples { needed: 1, got: 0 });
    }
    let key = |d: &Direction| [d.phi_tx, d.phi_rx, d.theta_rx];
    let mut binned = Vec::with_capacity(samples.len());
    let mut n_bins = 0;
    for s in samples {
        if !(s.delay >= 0.0 && s.delay.is_finite()) {
            return Err(AnalysisError::NegativeDelay(s.delay));
        }
        if !(s.power >= 0.0) {
            return Err(AnalysisError::NegativePower(s.power));
        }
        let bin = (s.delay / delay_step).round() as usize;
        n_bins = n_bins.max(bin + 1);
        binned.push((s.direction, bin, s.power));
    }
    binned.sort_by(|a, b| {
        key(&a.0)
            .iter()
            .zip(key(&b.0).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut pdps: Vec<Pdp> = Vec::new();
    for (direction, bin, p) in binned {
        if pdps.last().and_then(|q| q.direction) != Some(direction) {
            pdps.push(Pdp::new(delay_step, vec![0.0; n_bins])?.with_direction(direction));
        }
        pdps.last_mut().expect("pushed above").powers[bin] += p;
    }
    Ok(pdps)
}

/// Omnidirectional PDP: the strongest direction in every delay bin.
pub fn synth_omni(directional: &[Pdp]) -> Result<Pdp, AnalysisError> {
    let first = directional.first().ok_or(AnalysisError::TooFewSamples { needed: 1, got: 0 })?;
    if directional.iter().any(|p| !p.same_grid(first)) {
        return Err(AnalysisError::InconsistentGrid);
    }
    let mut powers = first.powers.clone();
    for pdp in &directional[1..] {
        for (acc, &p) in powers.iter_mut().zip(&pdp.powers) {
            *acc = acc.max(p);
        }
    }
    Ok(Pdp {
        delay_start: first.delay_start,
        delay_step: first.delay_step,
        powers,
        direction: None,
    })
}

/// Result of [`threshold`]; `all_zero` flags a profile with nothing left.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholded {
    pub pdp: Pdp,
    pub all_zero: bool,
}

/// Zero every bin below `noise_floor * 10^(margin_db / 10)` (linear noise floor).
pub fn threshold(pdp: &Pdp, margin_db: f64, noise_floor: f64) -> Result<Thresholded, AnalysisError> {
    if margin_db < 0.0 {
        return Err(AnalysisError::NegativeMargin(margin_db));
    }
    let level = noise_floor * 10f64.powf(margin_db / 10.0);
    let powers: Vec<f64> = pdp
        .powers
        .iter()
        .map(|&p| if p >= level { p } else { 0.0 })
        .collect();
    let all_zero = powers.iter().all(|&p| p == 0.0);
    Ok(Thresholded {
        pdp: Pdp {
            powers,
            ..pdp.clone()
        },
        all_zero,
    })
}

pub fn rms_ds(pdp: &Pdp) -> Result<f64, AnalysisError> {
    rms_ds_slices(&pdp.delays(), &pdp.powers)
}

pub fn k_factor(pdp: &Pdp) -> Result<KFactor, AnalysisError> {
    k_factor_slices(&pdp.powers)
}

/// Power against receive azimuth, summed over delay and elevation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dap {
    pub azimuths_deg: Vec<f64>,
    pub powers: Vec<f64>,
}

impl Dap {
    pub fn new(azimuths_deg: Vec<f64>, powers: Vec<f64>) -> Result<Self, AnalysisError> {
        if azimuths_deg.len() != powers.len() {
            return Err(AnalysisError::LengthMismatch(azimuths_deg.len(), powers.len()));
        }
        if let Some(&p) = powers.iter().find(|&&p| p < 0.0) {
            return Err(AnalysisError::NegativePower(p));
        }
        Ok(Self {
            azimuths_deg,
            powers,
        })
    }

    /// Collapse directional PDPs onto a `step_deg` azimuth grid over [0, 360).
    /// PDPs without a direction label are ignored.
    pub fn from_directional(pdps: &[Pdp], step_deg: f64) -> Self {
        let bins = (360.0 / step_deg).round() as usize;
        let mut powers = vec![0.0; bins];
        for pdp in pdps {
            if let Some(d) = pdp.direction {
                let i = (d.phi_rx.rem_euclid(360.0) / step_deg).round() as usize % bins;
                powers[i] += pdp.total_power();
            }
        }
        Self {
            azimuths_deg: (0..bins).map(|i| i as f64 * step_deg).collect(),
            powers,
        }
    }
}

/// Azimuth spread of arrival by the circular estimator, degrees.
pub fn asa(dap: &Dap) -> Result<f64, AnalysisError> {
    asa_eq10_slices(&dap.azimuths_deg, &dap.powers)
}

/// The rotation-minimized circular angular spread, degrees.
pub fn asa_3gpp(dap: &Dap) -> Result<f64, AnalysisError> {
    asa_3gpp_slices(&dap.azimuths_deg, &dap.powers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pdp(p: &[f64]) -> Pdp {
        Pdp::new(1e-9, p.to_vec()).unwrap()
    }

    #[test]
    fn omni_cases() {
        let a = pdp(&[4.0, 1.0]);
        let b = pdp(&[2.0, 3.0]);
        assert_eq!(synth_omni(std::slice::from_ref(&a)).unwrap().powers, a.powers);
        assert_eq!(synth_omni(&[a, b]).unwrap().powers, vec![4.0, 3.0]);
        let c = pdp(&[0.0, 5.0, 0.0]);
        let d = pdp(&[2.0, 0.0, 7.0]);
        assert_eq!(synth_omni(&[c, d]).unwrap().powers, vec![2.0, 5.0, 7.0]);
        assert_eq!(
            synth_omni(&[pdp(&[1.0]), pdp(&[1.0, 2.0])]),
            Err(AnalysisError::InconsistentGrid)
        );
    }

    #[test]
    fn threshold_cases() {
        let p = pdp(&[1e-3, 2e-9, 5e-4, 0.0, 1e-10]);
        let all = threshold(&p, 300.0, 1e-12).unwrap();
        assert!(all.all_zero);
        let id = threshold(&p, 0.0, 0.0).unwrap();
        assert_eq!(id.pdp.powers, p.powers);
        assert!(!id.all_zero);
        // Noise at 1e-9, 10 dB margin: only the two injected taps survive.
        let kept = threshold(&p, 10.0, 1e-9).unwrap();
        assert_eq!(kept.pdp.powers, vec![1e-3, 0.0, 5e-4, 0.0, 0.0]);
    }

    #[test]
    fn delay_spread_cases() {
        assert!((rms_ds(&pdp(&[1.0, 1.0])).unwrap() - 0.5e-9).abs() < 1e-24);
        assert_eq!(rms_ds(&pdp(&[0.0, 3.0, 0.0])).unwrap(), 0.0);
        let mut p = vec![0.0; 11];
        p[0] = 1.0;
        p[10] = 0.5;
        // sqrt(2/9) * 10 ns
        assert!((rms_ds(&pdp(&p)).unwrap() - 4.714e-9).abs() < 1e-12);
        assert_eq!(rms_ds(&pdp(&[0.0, 0.0])), Err(AnalysisError::ZeroPower));
    }

    #[test]
    fn asa_cases() {
        let single = Dap::new(vec![0.0, 45.0, 90.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert!(asa(&single).unwrap().abs() < 1e-12);
        let two = Dap::new(vec![0.0, 90.0], vec![1.0, 1.0]).unwrap();
        assert!((asa(&two).unwrap() - 40.51).abs() < 0.01);
        let uniform = Dap::new((0..360).map(|i| i as f64).collect(), vec![1.0; 360]).unwrap();
        assert!((asa(&uniform).unwrap() - 57.2958).abs() < 1e-3);
    }

    #[test]
    fn asa_3gpp_two_directions() {
        let two = Dap::new(vec![350.0, 10.0], vec![1.0, 1.0]).unwrap();
        assert!((asa_3gpp(&two).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn k_factor_cases() {
        assert_eq!(k_factor(&pdp(&[1.0, 1.0])).unwrap(), KFactor::Finite(0.0));
        let k = k_factor(&pdp(&[2.0, 1.0])).unwrap().db().unwrap();
        assert!((k - 3.0103).abs() < 1e-4);
        let k = k_factor(&pdp(&[1.0, 1.0, 1.0])).unwrap().db().unwrap();
        assert!((k + 3.0103).abs() < 1e-4);
        assert_eq!(k_factor(&pdp(&[0.0, 4.0])).unwrap(), KFactor::Infinite);
    }

    #[test]
    fn dap_from_directional_sums_per_azimuth() {
        let dir = |phi| Direction {
            phi_tx: 0.0,
            phi_rx: phi,
            theta_rx: 90.0,
        };
        let pdps = vec![
            pdp(&[1.0, 1.0]).with_direction(dir(10.0)),
            pdp(&[0.5, 0.0]).with_direction(dir(10.0)),
            pdp(&[0.0, 3.0]).with_direction(dir(-20.0)),
        ];
        let dap = Dap::from_directional(&pdps, 1.0);
        assert_eq!(dap.powers.len(), 360);
        assert_eq!(dap.powers[10], 2.5);
        assert_eq!(dap.powers[340], 3.0);
    }
}
