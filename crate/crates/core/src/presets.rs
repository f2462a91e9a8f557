//! Named parameter sets for the microwave-cavity experiment and the unit
//! conversions used at the command-line boundary.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::models::{stark_free_jcm, EffectiveForm, JcmParams, RamanParams};

/// rad/s per kHz of ordinary frequency.
pub const RAD_PER_KHZ: f64 = TAU * 1e3;

/// Ordinary frequency in kHz to angular frequency in rad/s.
pub fn khz(value: f64) -> f64 {
    value * RAD_PER_KHZ
}

/// Angular frequency in rad/s to ordinary kHz.
pub fn to_khz(rad_per_s: f64) -> f64 {
    rad_per_s / RAD_PER_KHZ
}

/// How a decay rate quoted in kHz is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaUnits {
    /// `Γ = 2π × value × 10³` rad/s.
    #[default]
    Ordinary,
    /// `Γ = value × 10³` rad/s.
    Angular,
}

impl GammaUnits {
    pub fn to_rad_per_s(self, khz_value: f64) -> f64 {
        match self {
            GammaUnits::Ordinary => khz(khz_value),
            GammaUnits::Angular => khz_value * 1e3,
        }
    }
}

impl std::str::FromStr for GammaUnits {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordinary" => Ok(GammaUnits::Ordinary),
            "angular" => Ok(GammaUnits::Angular),
            other => Err(Error::invalid(format!(
                "unknown gamma units '{other}' (ordinary|angular)"
            ))),
        }
    }
}

/// Cavity coupling g/2π in kHz.
pub const CAVITY_G_KHZ: f64 = 50.0;
/// Detuning in units of Ω₀.
pub const DETUNING_OVER_OMEGA0: f64 = 3.0;
/// Cavity decay quoted in kHz.
pub const GAMMA_KHZ: f64 = 1.0;
/// Rounded Ω₀/2π in kHz for the π solid-angle condition when g² is neglected.
pub const ROUNDED_OMEGA0_KHZ: f64 = 173.0;
/// Quoted λ₁/2π in kHz; the formula gives g/3 ≈ 16.7 kHz for these settings.
pub const QUOTED_LAMBDA1_KHZ: f64 = 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CavityPreset {
    pub name: &'static str,
    pub raman: RamanParams,
    /// Γ in rad/s.
    pub gamma_decay: f64,
}

impl CavityPreset {
    /// Stark-free one-photon model with the cavity decay attached.
    pub fn jcm(&self) -> Result<JcmParams> {
        stark_free_jcm(&self.raman, EffectiveForm::SecondOrder)?.with_gamma(self.gamma_decay)
    }
}

pub const PRESET_NAMES: [&str; 2] = ["paper-cavity", "paper-cavity-printed"];

/// `g/2π = 50 kHz`, `δ = 3Ω₀`, and `Ω₀ = (2+√3)g` so that `Δ₁ = 2√3 λ₁`
/// holds exactly with `Δ₁ = (Ω₀² − g²)/δ` (mixing angle π/6).
pub fn paper_cavity(units: GammaUnits) -> CavityPreset {
    let g = khz(CAVITY_G_KHZ);
    let omega0 = (2.0 + 3f64.sqrt()) * g;
    CavityPreset {
        name: "paper-cavity",
        raman: RamanParams {
            omega0,
            g,
            delta: DETUNING_OVER_OMEGA0 * omega0,
            phi: 0.0,
        },
        gamma_decay: units.to_rad_per_s(GAMMA_KHZ),
    }
}

/// Same cavity with the rounded `Ω₀/2π = 173 kHz`.
pub fn paper_cavity_printed(units: GammaUnits) -> CavityPreset {
    let omega0 = khz(ROUNDED_OMEGA0_KHZ);
    CavityPreset {
        name: "paper-cavity-printed",
        raman: RamanParams {
            omega0,
            g: khz(CAVITY_G_KHZ),
            delta: DETUNING_OVER_OMEGA0 * omega0,
            phi: 0.0,
        },
        gamma_decay: units.to_rad_per_s(GAMMA_KHZ),
    }
}

pub fn preset(name: &str, units: GammaUnits) -> Result<CavityPreset> {
    match name {
        "paper-cavity" => Ok(paper_cavity(units)),
        "paper-cavity-printed" => Ok(paper_cavity_printed(units)),
        other => Err(Error::invalid(format!(
            "unknown preset '{other}' (known: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// The preset geometry (`Ω₀ = (2+√3)g`) rescaled to `δ = ratio·Ω₀` with λ₁
/// held fixed: `g = ratio·λ₁`.
pub fn fixed_coupling_raman(lambda1: f64, ratio: f64) -> Result<RamanParams> {
    let g = ratio * lambda1;
    let omega0 = (2.0 + 3f64.sqrt()) * g;
    RamanParams::new(omega0, g, ratio * omega0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::mixing_angle;
    use std::f64::consts::FRAC_PI_6;

    #[test]
    fn paper_cavity_geometry() {
        let p = paper_cavity(GammaUnits::Ordinary);
        assert!((p.raman.lambda1() - khz(50.0) / 3.0).abs() < 1e-9);
        let jcm = p.jcm().unwrap();
        assert!((mixing_angle(0, &jcm.with_gamma(0.0).unwrap()).unwrap() - FRAC_PI_6).abs() < 1e-14);
        assert!((p.gamma_decay - TAU * 1e3).abs() < 1e-9);
        assert!((paper_cavity(GammaUnits::Angular).gamma_decay - 1e3).abs() < 1e-12);
        assert!((p.raman.detuning_ratio() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn printed_preset_has_same_lambda() {
        let a = paper_cavity_printed(GammaUnits::Ordinary).raman.lambda1();
        assert!((to_khz(a) - 50.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_holds_lambda() {
        for r in [3.0, 6.0, 12.0] {
            let p = fixed_coupling_raman(2.5, r).unwrap();
            assert!((p.lambda1() - 2.5).abs() < 1e-12);
            assert!((p.detuning_ratio() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(preset("nope", GammaUnits::Ordinary).is_err());
        assert!("weird".parse::<GammaUnits>().is_err());
    }
}
