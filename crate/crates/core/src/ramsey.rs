//! Ramsey interferometry around the cavity: ideal pulses, the single-phase
//! cavity passage, detection probabilities, fringe scans, and an exact
//! simulation of the passage to audit the single-phase model.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DVector;

use crate::dynamics::{evolve_observed, unwrap_adaptive};
use crate::error::{Error, Result};
use crate::geometry::{berry_dissipative_analytic, berry_vacuum};
use crate::hilbert::{tensor_basis_state, SpaceSpec, StateVector, C64, EXCITED, GROUND};
use crate::models::{JcmParams, PhiFamily, PhiSweep};
use crate::spectra::{dressed_pair, hermitian_eigen};

/// Atom-only amplitudes `(⟨2|ψ⟩, ⟨1|ψ⟩)`; the cavity is in vacuum before and
/// after the passage, so the field factor is left implicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomState {
    pub excited: C64,
    pub ground: C64,
}

impl AtomState {
    pub fn excited() -> Self {
        Self {
            excited: C64::from(1.0),
            ground: C64::from(0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.excited.norm_sqr() + self.ground.norm_sqr()
    }

    /// The same amplitudes on `|2,0⟩`, `|1,0⟩` of a two-level space.
    pub fn with_vacuum(&self, space: SpaceSpec) -> Result<StateVector> {
        let mut v = DVector::zeros(space.dim());
        v[space.checked_index(EXCITED, 0)?] = self.excited;
        v[space.checked_index(GROUND, 0)?] = self.ground;
        StateVector::from_amplitudes(space, v)
    }
}

/// Resonant Ramsey pulse of area `A`:
/// `|2⟩ → cos(A/2)|2⟩ + i sin(A/2)|1⟩`, `|1⟩ → i sin(A/2)|2⟩ + cos(A/2)|1⟩`.
pub fn ramsey_pulse(state: AtomState, area: f64) -> AtomState {
    let (c, s) = ((area / 2.0).cos(), (area / 2.0).sin());
    let is = C64::new(0.0, s);
    AtomState {
        excited: state.excited * c + state.ground * is,
        ground: state.excited * is + state.ground * c,
    }
}

/// First Ramsey zone acting on an atom prepared in |2⟩.
pub fn ramsey_state_after_r1(pulse_area_1: f64) -> AtomState {
    ramsey_pulse(AtomState::excited(), pulse_area_1)
}

/// Single-phase cavity passage: `|2⟩ → e^{i(γ+ξ)}|2⟩`, `|1⟩ → e^{−iξ}|1⟩`.
pub fn cavity_passage_model(state: AtomState, xi: f64, gamma: f64) -> AtomState {
    AtomState {
        excited: state.excited * C64::from_polar(1.0, gamma + xi),
        ground: state.ground * C64::from_polar(1.0, -xi),
    }
}

/// Where the geometric phase of a Ramsey configuration comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaMode {
    /// Vacuum phase of the closed cavity.
    #[default]
    Ideal,
    /// Decaying-cavity phase.
    Dissipative,
    /// Branch-resolved phase from an exact passage simulation.
    ExactPassage,
}

impl std::str::FromStr for GammaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(GammaMode::Ideal),
            "dissipative" => Ok(GammaMode::Dissipative),
            "exact-passage" | "exact" => Ok(GammaMode::ExactPassage),
            other => Err(Error::invalid(format!(
                "unknown gamma mode '{other}' (ideal|dissipative|exact-passage)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyConfig {
    pub pulse_area_1: f64,
    pub pulse_area_2: f64,
    /// Cavity dynamical parameter ξ = λ₁τ.
    pub xi: f64,
    pub gamma: f64,
    pub gamma_mode: GammaMode,
}

impl RamseyConfig {
    /// Both pulses of area π/2.
    pub fn balanced(xi: f64, gamma: f64) -> Self {
        Self {
            pulse_area_1: FRAC_PI_2,
            pulse_area_2: FRAC_PI_2,
            xi,
            gamma,
            gamma_mode: GammaMode::Ideal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.pulse_area_1, self.pulse_area_2, self.xi, self.gamma]
            .iter()
            .all(|x| x.is_finite())
        {
            Ok(())
        } else {
            Err(Error::invalid("Ramsey settings must be finite"))
        }
    }
}

/// Final amplitudes `(c₁, c₂)` on `|1⟩`, `|2⟩` after both zones.
pub fn ramsey_coefficients(config: &RamseyConfig) -> (C64, C64) {
    let (c1h, s1h) = ((config.pulse_area_1 / 2.0).cos(), (config.pulse_area_1 / 2.0).sin());
    let (c2h, s2h) = ((config.pulse_area_2 / 2.0).cos(), (config.pulse_area_2 / 2.0).sin());
    let inside = C64::from_polar(1.0, config.gamma + config.xi);
    let outside = C64::from_polar(1.0, -config.xi);
    let i = C64::new(0.0, 1.0);
    let c1 = outside * i * s1h * c2h + inside * i * c1h * s2h;
    let c2 = inside * c2h * c1h - outside * s2h * s1h;
    (c1, c2)
}

/// `P₂ = |c₂|²`; at π/2 pulses this is `(1 − cos(γ + 2ξ))/2`.
pub fn detection_probability(config: &RamseyConfig) -> f64 {
    ramsey_coefficients(config).1.norm_sqr()
}

/// `(1 − cos γ)/2`, the ξ = nπ read-out.
pub fn tuned_probability(gamma: f64) -> f64 {
    0.5 * (1.0 - gamma.cos())
}

/// ξ = nπ read-out with the decaying-cavity phase substituted for γ.
pub fn detection_probability_dissipative(params: &JcmParams) -> Result<f64> {
    Ok(tuned_probability(berry_dissipative_analytic(params)?.gamma))
}

/// The three fringes of a Ramsey scan over ξ at π/2 pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeTable {
    pub xi: Vec<f64>,
    /// γ = 0.
    pub no_berry: Vec<f64>,
    /// Vacuum phase of the closed cavity.
    pub berry: Vec<f64>,
    /// Decaying-cavity phase.
    pub dissipative: Vec<f64>,
    pub gamma: f64,
    pub gamma_dissipative: f64,
}

pub const DEFAULT_FRINGE_POINTS: usize = 401;

/// Uniform scan of ξ over `[xi_min, xi_max]`, endpoints included.
pub fn fringe_scan(params: &JcmParams, xi_min: f64, xi_max: f64, points: usize) -> Result<FringeTable> {
    if points < 2 || !(xi_max > xi_min) {
        return Err(Error::invalid("fringe scan needs xi_min < xi_max and at least 2 points"));
    }
    let closed = params.with_gamma(0.0)?;
    let gamma = berry_vacuum(&closed)?.gamma;
    let gamma_d = berry_dissipative_analytic(params)?.gamma;
    let xi: Vec<f64> = (0..points)
        .map(|k| xi_min + (xi_max - xi_min) * k as f64 / (points - 1) as f64)
        .collect();
    let curve = |g: f64| -> Vec<f64> {
        xi.iter()
            .map(|&x| detection_probability(&RamseyConfig::balanced(x, g)))
            .collect()
    };
    Ok(FringeTable {
        no_berry: curve(0.0),
        berry: curve(gamma),
        dissipative: curve(gamma_d),
        xi,
        gamma,
        gamma_dissipative: gamma_d,
    })
}

/// Phase `φ_f` of a fringe `P(ξ) ≈ a − b cos(φ_f + 2ξ)` from its first
/// harmonic in 2ξ. The samples must cover whole periods of π uniformly; a
/// duplicated closing endpoint is dropped.
pub fn fringe_phase(xi: &[f64], p: &[f64]) -> Result<f64> {
    if xi.len() != p.len() || xi.len() < 3 {
        return Err(Error::invalid("fringe needs matching xi and P samples, at least 3"));
    }
    let span = xi[xi.len() - 1] - xi[0];
    let periods = span / PI;
    let mut n = xi.len();
    if (periods - periods.round()).abs() < 1e-9 && periods.round() >= 1.0 {
        n -= 1;
    }
    let h: C64 = xi[..n]
        .iter()
        .zip(&p[..n])
        .map(|(&x, &y)| C64::from_polar(y, -2.0 * x))
        .sum();
    if h.norm() <= 1e-14 * n as f64 {
        return Err(Error::Degenerate("fringe has no visible first harmonic".into()));
    }
    Ok((-h).arg())
}

/// Shift `Δξ` with `b(ξ) ≈ a(ξ + Δξ)`, in `(−π/2, π/2]`: the peak of the
/// circular cross-correlation of two sinusoidal fringes.
pub fn fringe_offset(xi: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    let d = fringe_phase(xi, b)? - fringe_phase(xi, a)?;
    // wrap the phase difference into (−π, π]
    let wrapped = d - TAU * ((d + PI) / TAU).ceil() + TAU;
    Ok(0.5 * wrapped)
}

/// Exact simulation of one cavity passage with `φ(t) = φ₀ + 2πt/T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPassage {
    /// `⟨2,0|U|2,0⟩`.
    pub amp_excited: C64,
    /// `⟨1,0|U|1,0⟩`.
    pub amp_ground: C64,
    /// `⟨1,1|U|2,0⟩`.
    pub amp_transfer: C64,
    /// Population of `U|2,0⟩` outside `{|2,0⟩, |1,1⟩}`.
    pub leakage: f64,
    /// Unwrapped phases of the plus and minus dressed components of `U|2,0⟩`
    /// relative to their transported references, minus `−E±T`.
    pub branch_phases: [f64; 2],
    /// Final populations of the two dressed components.
    pub branch_weights: [f64; 2],
    /// `Σ w± γ±`: the passage phase comparable with the vacuum formula.
    pub geometric_phase: f64,
    /// `arg Σ w± e^{iγ±}`: the phase an interferometer sees if both branches
    /// return in step.
    pub phasor_phase: f64,
    /// Phase of `⟨1,0|U|1,0⟩` relative to its dynamical value `Δ_m T/2`.
    pub ground_phase_residual: f64,
    /// `1 − |⟨2,0|U|2,0⟩||⟨1,0|U|1,0⟩|`.
    pub contrast_deficit: f64,
    pub period: f64,
    pub steps: usize,
}

/// Evolve `|2,0⟩` and `|1,0⟩` through one loop of the φ-swept model.
pub fn cavity_passage_exact(params: &JcmParams, period: f64, steps: usize) -> Result<ExactPassage> {
    if params.gamma_decay != 0.0 {
        return Err(Error::invalid("exact passage runs the closed cavity (gamma = 0)"));
    }
    let m = params.m as usize;
    let space = SpaceSpec::two_level(m)?;
    let mut sweep = PhiSweep::new(PhiFamily::new(space, params)?, period);
    sweep.phi0 = params.phi;

    let (plus, minus) = dressed_pair(space, 0, params)?;
    let up = space.index(EXCITED, 0);
    let down = space.index(GROUND, m);
    let (energies, _) = hermitian_eigen(&sweep.family.block_at(params.phi, &[up, down]))?;
    let branch_energy = [energies[1], energies[0]];
    let refs = [plus.vector.amplitudes().clone(), minus.vector.amplitudes().clone()];
    let photons: Vec<f64> = space.photon_numbers().into_iter().map(|n| n as f64).collect();

    let mut tracks: [Vec<C64>; 2] = [Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1)];
    let start = tensor_basis_state(space, EXCITED, 0)?;
    let excited_run = evolve_observed(&sweep, &start, period, steps, |snap| {
        let psi = snap.full_state();
        let dphi = TAU * snap.t / period;
        for (track, r) in tracks.iter_mut().zip(&refs) {
            let z: C64 = r
                .iter()
                .zip(psi.iter())
                .zip(&photons)
                .map(|((a, b), &n)| a.conj() * C64::from_polar(1.0, dphi * n) * b)
                .sum();
            track.push(z);
        }
    })?;
    let ground_start = tensor_basis_state(space, GROUND, 0)?;
    let ground_run = evolve_observed(&sweep, &ground_start, period, steps, |_| {})?;

    let fin = excited_run.final_state.amplitudes();
    let amp_excited = fin[up];
    let amp_transfer = fin[down];
    let leakage = (1.0 - amp_excited.norm_sqr() - amp_transfer.norm_sqr()).max(0.0);
    let amp_ground = ground_run.final_state.amplitude(GROUND, 0);

    let mut branch_phases = [0.0; 2];
    let mut branch_weights = [0.0; 2];
    for b in 0..2 {
        let (unwrapped, _) = unwrap_adaptive(&tracks[b], 16)?;
        let initial = tracks[b][0].arg();
        branch_phases[b] = unwrapped - initial + branch_energy[b] * period;
        branch_weights[b] = tracks[b].last().expect("samples").norm_sqr();
    }
    let total_w = branch_weights[0] + branch_weights[1];
    if !(total_w > 0.0) {
        return Err(Error::Degenerate("passage left no weight in the dressed doublet".into()));
    }
    for w in &mut branch_weights {
        *w /= total_w;
    }
    let geometric_phase = branch_weights[0] * branch_phases[0] + branch_weights[1] * branch_phases[1];
    let phasor: C64 = (0..2)
        .map(|b| C64::from_polar(branch_weights[b], branch_phases[b]))
        .sum();
    // |1,0⟩ is dark; it only picks up −(−Δ_m/2)T
    let expected_ground = C64::from_polar(1.0, params.delta_m() * period / 2.0);
    let ground_phase_residual = (amp_ground * expected_ground.conj()).arg();

    Ok(ExactPassage {
        amp_excited,
        amp_ground,
        amp_transfer,
        leakage,
        branch_phases,
        branch_weights,
        geometric_phase,
        phasor_phase: phasor.arg(),
        ground_phase_residual,
        contrast_deficit: 1.0 - amp_excited.norm() * amp_ground.norm(),
        period,
        steps,
    })
}

impl ExactPassage {
    /// π/2-pulse fringe over ξ with the passage phase in place of γ and the
    /// measured return amplitudes setting the contrast.
    pub fn fringe(&self, xi: &[f64]) -> Vec<f64> {
        let a = self.amp_excited.norm();
        let b = self.amp_ground.norm();
        xi.iter()
            .map(|&x| {
                let state = ramsey_state_after_r1(FRAC_PI_2);
                let inside = AtomState {
                    excited: state.excited * C64::from_polar(a, self.geometric_phase + x),
                    ground: state.ground * C64::from_polar(b, -x),
                };
                ramsey_pulse(inside, FRAC_PI_2).excited.norm_sqr()
            })
            .collect()
    }
}
