use crate::error::{invalid, Result};
use crate::jsd::grid::Axis;

/// Real amplitude transmittance `t(ω)` of a bandpass filter sampled on one
/// axis of a joint spectral grid. The filter acts as a frequency-dependent
/// beam splitter whose reflected amplitude is `r = sqrt(1 - t²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterProfile {
    axis: Axis,
    t: Vec<f64>,
}

/// How user-supplied transmittance samples are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmittanceKind {
    Amplitude,
    Intensity,
}

impl FilterProfile {
    pub fn from_amplitude(axis: Axis, t: Vec<f64>) -> Result<Self> {
        if t.len() != axis.len() {
            return Err(invalid(format!(
                "filter has {} samples but the axis has {}",
                t.len(),
                axis.len()
            )));
        }
        if let Some(bad) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("filter transmittance {bad} outside [0, 1]")));
        }
        Ok(Self { axis, t })
    }

    pub fn from_samples(axis: Axis, samples: Vec<f64>, kind: TransmittanceKind) -> Result<Self> {
        match kind {
            TransmittanceKind::Amplitude => Self::from_amplitude(axis, samples),
            TransmittanceKind::Intensity => {
                if let Some(bad) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(invalid(format!("filter transmittance {bad} outside [0, 1]")));
                }
                Self::from_amplitude(axis, samples.into_iter().map(f64::sqrt).collect())
            }
        }
    }

    pub fn all_pass(axis: Axis) -> Self {
        let t = vec![1.0; axis.len()];
        Self { axis, t }
    }

    pub fn blocking(axis: Axis) -> Self {
        let t = vec![0.0; axis.len()];
        Self { axis, t }
    }

    /// Ideal flat-top passband of full width `width` centred on `center`.
    pub fn rect(axis: Axis, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(invalid("rect filter width must be positive"));
        }
        // points on the band edge count as transmitted
        let half = 0.5 * width + 1e-9 * axis.step();
        let t = axis
            .values()
            .iter()
            .map(|w| if (w - center).abs() <= half { 1.0 } else { 0.0 })
            .collect();
        Ok(Self { axis, t })
    }

    /// Gaussian passband; `fwhm` is the full width at half maximum of the
    /// intensity transmittance.
    pub fn gauss(axis: Axis, center: f64, fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(invalid("gauss filter fwhm must be positive"));
        }
        let c = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
        let t = axis
            .values()
            .iter()
            .map(|w| (-0.5 * c * (w - center).powi(2)).exp())
            .collect();
        Ok(Self { axis, t })
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    pub fn transmission(&self) -> &[f64] {
        &self.t
    }

    pub fn reflection(&self) -> Vec<f64> {
        self.t.iter().map(|t| (1.0 - t * t).max(0.0).sqrt()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis() -> Axis {
        Axis::linspace(-5.0, 5.0, 101).unwrap()
    }

    #[test]
    fn amplitude_and_reflection_are_complementary() {
        let f = FilterProfile::gauss(axis(), 0.3, 2.0).unwrap();
        for (t, r) in f.transmission().iter().zip(f.reflection()) {
            assert!((t * t + r * r - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(t));
        }
    }

    #[test]
    fn gauss_has_half_intensity_at_half_fwhm() {
        let ax = Axis::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let f = FilterProfile::gauss(ax, 0.0, 2.0).unwrap();
        assert!((f.transmission()[0].powi(2) - 0.5).abs() < 1e-12);
        assert_eq!(f.transmission()[1], 1.0);
    }

    #[test]
    fn intensity_samples_are_square_rooted() {
        let ax = Axis::new(vec![0.0, 1.0]).unwrap();
        let f = FilterProfile::from_samples(ax, vec![0.25, 1.0], TransmittanceKind::Intensity).unwrap();
        assert_eq!(f.transmission(), &[0.5, 1.0]);
    }

    #[test]
    fn rejects_out_of_range() {
        let ax = Axis::new(vec![0.0, 1.0]).unwrap();
        assert!(FilterProfile::from_amplitude(ax.clone(), vec![0.5, 1.2]).is_err());
        assert!(FilterProfile::from_amplitude(ax, vec![0.5]).is_err());
    }

    #[test]
    fn rect_counts_edges_as_passband() {
        let f = FilterProfile::rect(axis(), 0.0, 1.0).unwrap();
        let passed: usize = f.transmission().iter().filter(|t| **t == 1.0).count();
        assert_eq!(passed, 11);
    }
}
