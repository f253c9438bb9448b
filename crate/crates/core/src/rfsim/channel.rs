use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::config::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::geom::{wrap_unchecked, Position2D};

/// Round-trip backscatter phase `4π·f·d / c` wrapped into `[0, 2π)`.
pub fn theoretical_phase(p: &Position2D, antenna: &Position2D, f: f64) -> Result<f64> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::Domain(format!("frequency must be > 0, got {f}")));
    }
    if !p.is_finite() || !antenna.is_finite() {
        return Err(Error::Domain("positions must be finite".into()));
    }
    Ok(theoretical_phase_unchecked(p.distance(antenna), f))
}

/// Phase for a known distance; evaluated in turns first to keep the
/// fractional part exact for long paths.
#[inline]
pub fn theoretical_phase_unchecked(distance: f64, f: f64) -> f64 {
    let turns = 2.0 * f * distance / SPEED_OF_LIGHT;
    wrap_unchecked((turns - turns.floor()) * TAU)
}

/// Log-distance path loss around a reference distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLoss {
    pub p0_dbm: f64,
    pub d0: f64,
    pub exponent: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss {
            p0_dbm: -40.0,
            d0: 0.1,
            exponent: 2.0,
        }
    }
}

/// A single point scatterer adding a second propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reflector {
    pub position: Position2D,
    pub attenuation: f64,
}

/// Noise and propagation settings standing in for one recording scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPreset {
    pub name: String,
    pub phase_noise_sigma: f64,
    pub rssi_noise_sigma: f64,
    #[serde(default)]
    pub reflector: Option<Reflector>,
    /// Apply the schedule's per-channel reader phase offsets.
    #[serde(default)]
    pub channel_phase_offsets: bool,
    #[serde(default)]
    pub path_loss: PathLoss,
}

impl ScenarioPreset {
    pub const NAMES: [&'static str; 4] = ["dataset1", "dataset2", "noisy", "ideal"];

    /// Clean direct path, moderate phase noise.
    pub fn dataset1() -> Self {
        ScenarioPreset {
            name: "dataset1".into(),
            phase_noise_sigma: 0.15,
            rssi_noise_sigma: 1.0,
            reflector: None,
            channel_phase_offsets: true,
            path_loss: PathLoss::default(),
        }
    }

    /// Lower phase noise, one strong reflector beside the workspace.
    pub fn dataset2() -> Self {
        ScenarioPreset {
            name: "dataset2".into(),
            phase_noise_sigma: 0.10,
            rssi_noise_sigma: 1.0,
            reflector: Some(Reflector {
                position: Position2D::new(1.2, 0.6),
                attenuation: 0.3,
            }),
            channel_phase_offsets: true,
            path_loss: PathLoss::default(),
        }
    }

    /// Heavy phase noise used for the initial-localization stress test.
    pub fn noisy() -> Self {
        ScenarioPreset {
            name: "noisy".into(),
            phase_noise_sigma: 0.3,
            ..ScenarioPreset::dataset1()
        }
    }

    /// Noise-free, offset-free reads.
    pub fn ideal() -> Self {
        ScenarioPreset {
            name: "ideal".into(),
            phase_noise_sigma: 0.0,
            rssi_noise_sigma: 0.0,
            reflector: None,
            channel_phase_offsets: false,
            path_loss: PathLoss::default(),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "dataset1" => Ok(Self::dataset1()),
            "dataset2" => Ok(Self::dataset2()),
            "noisy" => Ok(Self::noisy()),
            "ideal" => Ok(Self::ideal()),
            _ => Err(Error::Unknown {
                what: "scenario preset",
                name: name.to_string(),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phase_noise_sigma >= 0.0 && self.rssi_noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "preset `{}`: noise sigmas must be >= 0",
                self.name
            )));
        }
        if let Some(r) = &self.reflector {
            if !(r.attenuation > 0.0 && r.attenuation <= 1.0) {
                return Err(Error::Config(format!(
                    "preset `{}`: reflector attenuation must lie in (0, 1]",
                    self.name
                )));
            }
        }
        if !(self.path_loss.d0 > 0.0) {
            return Err(Error::Config(
                "path-loss reference distance must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Received power in dBm.
///
/// Direct path follows the log-distance law. With a reflector, the reflected
/// path (antenna → reflector → tag) is added coherently with amplitude
/// `attenuation · (d0/ℓ)^(n/2)` and round-trip phase `4π·f·ℓ/c`.
pub fn rssi_model(
    p: &Position2D,
    antenna: &Position2D,
    f: f64,
    preset: &ScenarioPreset,
) -> Result<f64> {
    let d = p.distance(antenna);
    if !(d > 1e-3) {
        return Err(Error::Domain(format!(
            "tag is within 1 mm of the antenna (d = {d} m)"
        )));
    }
    if !(f > 0.0) {
        return Err(Error::Domain(format!("frequency must be > 0, got {f}")));
    }
    let pl = &preset.path_loss;
    let Some(refl) = &preset.reflector else {
        return Ok(pl.p0_dbm - 10.0 * pl.exponent * (d / pl.d0).log10());
    };
    let amp = |l: f64| (pl.d0 / l).powf(pl.exponent / 2.0);
    let k = 2.0 * TAU * f / SPEED_OF_LIGHT;
    let lr = antenna.distance(&refl.position) + refl.position.distance(p);
    let (a1, a2) = (amp(d), refl.attenuation * amp(lr));
    let re = a1 * (k * d).cos() + a2 * (k * lr).cos();
    let im = a1 * (k * d).sin() + a2 * (k * lr).sin();
    Ok(pl.p0_dbm + 10.0 * (re * re + im * im).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn phase_examples() {
        let a = Position2D::new(0.0, 0.0);
        assert_eq!(theoretical_phase(&a, &a, 915e6).unwrap(), 0.0);
        let quarter = SPEED_OF_LIGHT / (4.0 * 915e6);
        let p = Position2D::new(quarter, 0.0);
        assert_abs_diff_eq!(
            theoretical_phase(&p, &a, 915e6).unwrap(),
            PI,
            epsilon = 1e-12
        );
        let p = Position2D::new(0.10, 0.0);
        // 50-digit evaluation of 4π·920e6·0.1/c
        assert_abs_diff_eq!(
            theoretical_phase(&p, &a, 920e6).unwrap(),
            3.856354840391095,
            epsilon = 1e-12
        );
        assert!(theoretical_phase(&p, &a, 0.0).is_err());
    }

    #[test]
    fn phase_difference_is_linear_in_frequency() {
        let a = Position2D::new(0.43, 0.0);
        for (i, p) in [(0.2, 0.3), (0.9, 1.0), (0.5, 0.11)].iter().enumerate() {
            let p = Position2D::new(p.0, p.1);
            let d = p.distance(&a);
            let (f1, f2) = (902.75e6 + i as f64 * 1e6, 927.25e6);
            let lhs = wrap_unchecked(
                theoretical_phase(&p, &a, f1).unwrap() - theoretical_phase(&p, &a, f2).unwrap(),
            );
            let rhs = wrap_unchecked(2.0 * TAU * d * (f1 - f2) / SPEED_OF_LIGHT);
            assert!(crate::geom::phase_distance_unchecked(lhs, rhs) < 1e-9);
        }
    }

    #[test]
    fn rssi_log_distance() {
        let a = Position2D::new(0.0, 0.0);
        let preset = ScenarioPreset::ideal();
        let at_d0 = rssi_model(&Position2D::new(0.1, 0.0), &a, 915e6, &preset).unwrap();
        assert_abs_diff_eq!(at_d0, -40.0, epsilon = 1e-12);
        let at_10 = rssi_model(&Position2D::new(1.0, 0.0), &a, 915e6, &preset).unwrap();
        assert_abs_diff_eq!(at_10, -60.0, epsilon = 1e-12);
        assert!(rssi_model(&Position2D::new(0.0005, 0.0), &a, 915e6, &preset).is_err());
    }

    #[test]
    fn rssi_two_ray_matches_power_sum() {
        // |A1 e^{jφ1} + A2 e^{jφ2}|² = A1² + A2² + 2·A1·A2·cos(φ1 − φ2)
        let a = Position2D::new(0.0, 0.0);
        let p = Position2D::new(0.3, 0.0);
        let refl = Position2D::new(0.5, 0.5);
        let mut preset = ScenarioPreset::ideal();
        preset.reflector = Some(Reflector {
            position: refl,
            attenuation: 0.3,
        });
        let f = 915e6;
        let d = 0.3_f64;
        let lr = (0.5_f64.powi(2) * 2.0).sqrt() + (0.2_f64.powi(2) + 0.5_f64.powi(2)).sqrt();
        let a1 = 0.1 / d;
        let a2 = 0.3 * 0.1 / lr;
        let dphi = 4.0 * PI * f * (d - lr) / SPEED_OF_LIGHT;
        let power = a1 * a1 + a2 * a2 + 2.0 * a1 * a2 * dphi.cos();
        let expected = -40.0 + 10.0 * power.log10();
        let got = rssi_model(&p, &a, f, &preset).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
        let direct = rssi_model(&p, &a, f, &ScenarioPreset::ideal()).unwrap();
        assert!((got - direct).abs() > 0.01);
    }

    #[test]
    fn presets_validate() {
        for name in ScenarioPreset::NAMES {
            ScenarioPreset::by_name(name).unwrap().validate().unwrap();
        }
        assert!(ScenarioPreset::by_name("dataset3").is_err());
        let mut p = ScenarioPreset::dataset2();
        p.reflector.as_mut().unwrap().attenuation = 1.5;
        assert!(p.validate().is_err());
    }
}
