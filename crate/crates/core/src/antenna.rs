//! Antenna elements and arrays.
//!
//! Patterns return the field components `(F_theta, F_phi)` for a direction given as
//! (zenith, azimuth) in degrees. Arrays are uniform rectangular arrays in the y-z
//! plane, so broadside is the +x axis.

use nalgebra::Vector3;

/// Polarization of a single-port element.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Polarization {
    /// `(1, 0)`.
    #[default]
    Vertical,
    /// `(0, 1)`.
    Horizontal,
    /// `(cos a, sin a)` for slant angle `a` in degrees.
    Slant(f64),
}

impl Polarization {
    pub fn components(&self) -> (f64, f64) {
        match *self {
            Polarization::Vertical => (1.0, 0.0),
            Polarization::Horizontal => (0.0, 1.0),
            Polarization::Slant(a) => (a.to_radians().cos(), a.to_radians().sin()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementPattern {
    Isotropic(Polarization),
    /// Cosine-power main lobe pointing at azimuth `boresight_deg` in the horizontal
    /// plane, with half-power beamwidth `hpbw_deg`; nothing behind the element.
    Directional {
        hpbw_deg: f64,
        boresight_deg: f64,
        polarization: Polarization,
    },
}

impl Default for ElementPattern {
    fn default() -> Self {
        ElementPattern::Isotropic(Polarization::Vertical)
    }
}

impl ElementPattern {
    /// Field components `(F_theta, F_phi)` towards (zenith, azimuth) in degrees.
    pub fn field(&self, zenith_deg: f64, azimuth_deg: f64) -> (f64, f64) {
        match *self {
            ElementPattern::Isotropic(p) => p.components(),
            ElementPattern::Directional {
                hpbw_deg,
                boresight_deg,
                polarization,
            } => {
                let g = directional_amplitude(hpbw_deg, zenith_deg, azimuth_deg - boresight_deg);
                let (a, b) = polarization.components();
                (g * a, g * b)
            }
        }
    }
}

/// Amplitude of a `cos^q` lobe whose power falls to one half at `hpbw / 2` off
/// boresight; the boresight is (90, 0).
fn directional_amplitude(hpbw_deg: f64, zenith_deg: f64, azimuth_deg: f64) -> f64 {
    let half = (0.5 * hpbw_deg).to_radians().clamp(1e-6, std::f64::consts::FRAC_PI_2 - 1e-9);
    let q = 0.5f64.ln() / (2.0 * half.cos().ln());
    let dir = crate::coeff::spherical_unit(zenith_deg, azimuth_deg);
    let cos_off = dir.x;
    if cos_off <= 0.0 {
        0.0
    } else {
        cos_off.powf(q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    /// Element positions in meters.
    pub positions: Vec<Vector3<f64>>,
    pub pattern: ElementPattern,
}

impl AntennaArray {
    pub fn single(pattern: ElementPattern) -> Self {
        Self {
            positions: vec![Vector3::zeros()],
            pattern,
        }
    }

    /// `rows x cols` uniform rectangular array in the y-z plane, centred on the
    /// origin. Element index runs column-major: `index = row * cols + col`.
    pub fn ura(rows: usize, cols: usize, spacing_m: f64, pattern: ElementPattern) -> Self {
        assert!(rows >= 1 && cols >= 1, "array needs at least one element");
        let y0 = 0.5 * (cols as f64 - 1.0) * spacing_m;
        let z0 = 0.5 * (rows as f64 - 1.0) * spacing_m;
        let positions = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| {
                    Vector3::new(0.0, c as f64 * spacing_m - y0, r as f64 * spacing_m - z0)
                })
            })
            .collect();
        Self { positions, pattern }
    }

    /// Half-wavelength URA of isotropic vertically polarized elements.
    pub fn half_wave_ura(rows: usize, cols: usize, wavelength_m: f64) -> Self {
        Self::ura(rows, cols, 0.5 * wavelength_m, ElementPattern::default())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_is_constant() {
        let p = ElementPattern::default();
        for z in [0.0, 33.0, 90.0, 180.0] {
            for a in [-180.0, -10.0, 0.0, 77.0] {
                assert_eq!(p.field(z, a), (1.0, 0.0));
            }
        }
    }

    #[test]
    fn directional_half_power_at_half_beamwidth() {
        let p = ElementPattern::Directional {
            hpbw_deg: 30.0,
            boresight_deg: 0.0,
            polarization: Polarization::Vertical,
        };
        assert!((p.field(90.0, 0.0).0 - 1.0).abs() < 1e-12);
        let g = p.field(90.0, 15.0).0;
        assert!((g * g - 0.5).abs() < 1e-9);
        assert_eq!(p.field(90.0, 180.0).0, 0.0);
        for z in (0..=180).step_by(15) {
            for a in (-180..180).step_by(15) {
                assert!(p.field(z as f64, a as f64).0.is_finite());
            }
        }
    }

    #[test]
    fn ura_is_centred() {
        let a = AntennaArray::ura(16, 16, 0.0015, ElementPattern::default());
        assert_eq!(a.len(), 256);
        let c: Vector3<f64> = a.positions.iter().sum::<Vector3<f64>>() / 256.0;
        assert!(c.norm() < 1e-15);
        assert!(a.positions.iter().all(|p| p.x == 0.0));
    }
}
