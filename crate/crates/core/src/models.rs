//! Hamiltonians of the m-quantum Jaynes-Cummings model and of the Raman
//! three-level scheme that realizes its one-photon, phase-controlled version.
//!
//! All rates are angular frequencies (rad/s, or any consistent unit of
//! inverse time); conversion from ordinary kHz happens at the CLI boundary.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::dynamics::HamiltonianFamily;
use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, atom_op, creation, inf_norm, number, sigma_plus, sigma_z, ComplexOperator,
    SpaceSpec, AUXILIARY, C64, EXCITED, GROUND,
};

/// `(n+m)!/n!`, the squared matrix element of `a^m` between `|n+m⟩` and `|n⟩`.
pub fn ladder_factor(n: usize, m: u32) -> f64 {
    (n + 1..=n + m as usize).map(|k| k as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcmParams {
    /// Photons exchanged per atomic transition.
    pub m: u32,
    /// Cavity angular frequency.
    pub nu: f64,
    /// Atomic transition angular frequency.
    pub omega: f64,
    pub lambda_m: f64,
    /// Drive phase φ of the phase-shifted Hamiltonian.
    pub phi: f64,
    /// Cavity decay rate Γ entering `H − iΓ a†a/2`.
    pub gamma_decay: f64,
}

impl JcmParams {
    pub fn new(m: u32, nu: f64, omega: f64, lambda_m: f64) -> Result<Self> {
        let p = Self {
            m,
            nu,
            omega,
            lambda_m,
            phi: 0.0,
            gamma_decay: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for the rotating-frame models, which only see `Δ_m`.
    /// The cavity frequency is set to zero so that `omega == delta_m`.
    pub fn with_detuning(m: u32, delta_m: f64, lambda_m: f64) -> Result<Self> {
        Self::new(m, 0.0, delta_m, lambda_m)
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_gamma(mut self, gamma_decay: f64) -> Result<Self> {
        self.gamma_decay = gamma_decay;
        self.validate()?;
        Ok(self)
    }

    /// `Δ_m = ω − mν`.
    pub fn delta_m(&self) -> f64 {
        self.omega - self.m as f64 * self.nu
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("photon multiplicity m must be >= 1"));
        }
        let finite = [self.nu, self.omega, self.lambda_m, self.phi, self.gamma_decay];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("JCM parameters must be finite"));
        }
        if self.lambda_m < 0.0 {
            return Err(Error::invalid("coupling lambda_m must be non-negative"));
        }
        if self.gamma_decay < 0.0 {
            return Err(Error::invalid("cavity decay rate must be non-negative"));
        }
        Ok(())
    }
}

fn check_jcm_space(space: SpaceSpec, params: &JcmParams) -> Result<()> {
    params.validate()?;
    if space.atom_levels() != 2 {
        return Err(Error::invalid("JCM Hamiltonians need a two-level atom space"));
    }
    if space.photon_cutoff() < params.m as usize {
        return Err(Error::invalid(format!(
            "photon cutoff {} is below m = {}: the coupling term would vanish",
            space.photon_cutoff(),
            params.m
        )));
    }
    Ok(())
}

/// `σ+ a^m`.
fn raising_coupling(space: SpaceSpec, m: u32) -> ComplexOperator {
    &sigma_plus(space) * &annihilation(space).pow(m)
}

/// `λ(e^{imφ} σ+ a^m + h.c.)`.
fn phased_coupling(space: SpaceSpec, params: &JcmParams) -> ComplexOperator {
    let c = raising_coupling(space, params.m)
        .scale(C64::from_polar(params.lambda_m, params.m as f64 * params.phi));
    &c + &c.dagger()
}

/// Lab-frame Hamiltonian `ν a†a + (ω/2)σz + λ_m(σ+ a^m + σ− a†^m)`.
pub fn build_jcm_lab(space: SpaceSpec, params: &JcmParams) -> Result<ComplexOperator> {
    check_jcm_space(space, params)?;
    let free = &number(space).scale(C64::from(params.nu))
        + &sigma_z(space).scale(C64::from(params.omega / 2.0));
    Ok(&free + &phased_coupling(space, &params.with_phi(0.0)))
}

/// Rotating-frame Hamiltonian `(Δ_m/2)σz + λ_m(σ+ a^m + σ− a†^m)`.
pub fn build_jcm_frame(space: SpaceSpec, params: &JcmParams) -> Result<ComplexOperator> {
    build_jcm_phi(space, &params.with_phi(0.0))
}

/// Phase-shifted Hamiltonian `(Δ_m/2)σz + λ_m(σ+ a^m e^{imφ} + σ− a†^m e^{−imφ})`.
pub fn build_jcm_phi(space: SpaceSpec, params: &JcmParams) -> Result<ComplexOperator> {
    check_jcm_space(space, params)?;
    let detuning = sigma_z(space).scale(C64::from(params.delta_m() / 2.0));
    Ok(&detuning + &phased_coupling(space, params))
}

/// `H_m(φ) − iΓ a†a / 2`.
pub fn build_jcm_dissipative(space: SpaceSpec, params: &JcmParams) -> Result<ComplexOperator> {
    let h = build_jcm_phi(space, params)?;
    let decay = number(space).scale(C64::new(0.0, -params.gamma_decay / 2.0));
    Ok(&h + &decay)
}

/// The φ-dependence of `build_jcm_dissipative`, split so that a whole loop
/// over φ can be sampled without rebuilding operator products.
#[derive(Debug, Clone)]
pub struct PhiFamily {
    space: SpaceSpec,
    m: u32,
    /// φ-independent part: detuning and decay.
    static_part: DMatrix<C64>,
    /// `λ σ+ a^m`.
    raising: DMatrix<C64>,
}

impl PhiFamily {
    pub fn new(space: SpaceSpec, params: &JcmParams) -> Result<Self> {
        check_jcm_space(space, params)?;
        let static_part = &sigma_z(space).scale(C64::from(params.delta_m() / 2.0))
            + &number(space).scale(C64::new(0.0, -params.gamma_decay / 2.0));
        let raising = raising_coupling(space, params.m).scale(C64::from(params.lambda_m));
        Ok(Self {
            space,
            m: params.m,
            static_part: static_part.into_matrix(),
            raising: raising.into_matrix(),
        })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn at(&self, phi: f64) -> DMatrix<C64> {
        let phase = C64::from_polar(1.0, self.m as f64 * phi);
        &self.static_part + &self.raising * phase + self.raising.adjoint() * phase.conj()
    }

    /// Principal submatrix of `at(phi)` on `indices`.
    pub fn block_at(&self, phi: f64, indices: &[usize]) -> DMatrix<C64> {
        let phase = C64::from_polar(1.0, self.m as f64 * phi);
        DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
            let (i, j) = (indices[r], indices[c]);
            self.static_part[(i, j)]
                + self.raising[(i, j)] * phase
                + self.raising[(j, i)].conj() * phase.conj()
        })
    }

    /// Coupling graph of the family; it does not depend on φ.
    pub fn sparsity(&self) -> DMatrix<C64> {
        self.at(0.0)
    }
}

/// One full loop `φ(t) = φ₀ + 2πt/T`, optionally offset by a constant energy.
#[derive(Debug, Clone)]
pub struct PhiSweep {
    pub family: PhiFamily,
    pub period: f64,
    pub phi0: f64,
    pub energy_offset: f64,
}

impl PhiSweep {
    pub fn new(family: PhiFamily, period: f64) -> Self {
        Self {
            family,
            period,
            phi0: 0.0,
            energy_offset: 0.0,
        }
    }

    pub fn phi_at(&self, t: f64) -> f64 {
        self.phi0 + TAU * t / self.period
    }
}

impl HamiltonianFamily for PhiSweep {
    fn space(&self) -> SpaceSpec {
        self.family.space
    }

    fn matrix_at(&self, t: f64) -> DMatrix<C64> {
        let mut h = self.family.at(self.phi_at(t));
        for i in 0..h.nrows() {
            h[(i, i)] += self.energy_offset;
        }
        h
    }

    fn rate_bound(&self) -> f64 {
        let h = self.family.at(0.0);
        let shift = h.trace() / h.nrows() as f64;
        let traceless = h - DMatrix::identity(self.family.space.dim(), self.family.space.dim()) * shift;
        inf_norm(&traceless) + TAU * self.family.m as f64 / self.period
    }

    fn timescale(&self) -> Option<f64> {
        Some(self.period)
    }
}

/// Parameters of the Raman three-level configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanParams {
    /// Classical Rabi amplitude Ω₀ on |2⟩↔|3⟩.
    pub omega0: f64,
    /// Cavity coupling g on |1⟩↔|3⟩.
    pub g: f64,
    /// One-photon detuning δ.
    pub delta: f64,
    /// Laser phase φ.
    pub phi: f64,
}

impl RamanParams {
    pub fn new(omega0: f64, g: f64, delta: f64, phi: f64) -> Result<Self> {
        let p = Self {
            omega0,
            g,
            delta,
            phi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.omega0, self.g, self.delta, self.phi]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::invalid("Raman parameters must be finite"));
        }
        if self.omega0 < 0.0 || self.g < 0.0 {
            return Err(Error::invalid("Rabi amplitudes must be non-negative"));
        }
        if self.delta <= 0.0 {
            return Err(Error::invalid("Raman detuning must be positive"));
        }
        Ok(())
    }

    /// `λ₁ = Ω₀ g / δ`.
    pub fn lambda1(&self) -> f64 {
        self.omega0 * self.g / self.delta
    }

    /// `Δ₁ = (Ω₀² − g²)/δ`, the n = 0 effective detuning.
    pub fn delta1(&self) -> f64 {
        (self.omega0 * self.omega0 - self.g * self.g) / self.delta
    }

    /// `δ / max(g, Ω₀)`; the reduction is trusted only when this is ≥ 3.
    pub fn detuning_ratio(&self) -> f64 {
        self.delta / self.g.max(self.omega0)
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }
}

/// Interaction-picture Hamiltonian
/// `H(t) = V e^{−iδt} + V† e^{iδt}`, `V = Ω₀e^{iφ}σ₃₂ + g σ₃₁ a`.
#[derive(Debug, Clone)]
pub struct RamanFamily {
    space: SpaceSpec,
    coupling: DMatrix<C64>,
    delta: f64,
}

impl RamanFamily {
    /// The slow-to-fast mixing operator `V`.
    pub fn coupling(&self) -> &DMatrix<C64> {
        &self.coupling
    }

    /// Period of the explicit time dependence, `2π/δ`.
    pub fn period(&self) -> f64 {
        TAU / self.delta
    }

    pub fn at(&self, t: f64) -> ComplexOperator {
        ComplexOperator::from_matrix(self.space, self.matrix_at(t))
            .expect("family matrices match their space")
    }
}

impl HamiltonianFamily for RamanFamily {
    fn space(&self) -> SpaceSpec {
        self.space
    }

    fn matrix_at(&self, t: f64) -> DMatrix<C64> {
        let rot = C64::from_polar(1.0, -self.delta * t);
        let v = &self.coupling * rot;
        let vd = v.adjoint();
        v + vd
    }

    fn rate_bound(&self) -> f64 {
        let h = &self.coupling + self.coupling.adjoint();
        inf_norm(&h) + self.delta
    }

    fn timescale(&self) -> Option<f64> {
        Some(self.period())
    }
}

pub fn build_raman_full(space: SpaceSpec, params: &RamanParams) -> Result<RamanFamily> {
    params.validate()?;
    if space.atom_levels() != 3 {
        return Err(Error::invalid("the Raman model needs a three-level atom space"));
    }
    let drive = atom_op(space, AUXILIARY, EXCITED)?.scale(C64::from_polar(params.omega0, params.phi));
    let cavity = (&atom_op(space, AUXILIARY, GROUND)? * &annihilation(space)).scale(C64::from(params.g));
    Ok(RamanFamily {
        space,
        coupling: (&drive + &cavity).into_matrix(),
        delta: params.delta,
    })
}

/// Which version of the large-detuning effective Hamiltonian to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EffectiveForm {
    /// Stark term `(g²/δ) a a† σ₁₁` and coupling `λ₁ σ₂₁ a e^{iφ}` as printed.
    Printed,
    /// Second-order elimination of |3⟩ from the interaction Hamiltonian:
    /// Stark term `(g²/δ) a†a σ₁₁` and coupling `λ₁ σ₂₁ a e^{−iφ}`.
    #[default]
    SecondOrder,
}

/// `(Ω₀²/δ)σ₂₂ + (g²/δ)·stark·σ₁₁ + λ₁(σ₂₁ a e^{±iφ} + h.c.)` on a two-level space.
pub fn build_raman_effective(
    space: SpaceSpec,
    params: &RamanParams,
    form: EffectiveForm,
) -> Result<ComplexOperator> {
    params.validate()?;
    if space.atom_levels() != 2 {
        return Err(Error::invalid(
            "the effective Raman Hamiltonian lives on levels |1>, |2> only",
        ));
    }
    let a = annihilation(space);
    let ad = creation(space);
    let (stark, phase) = match form {
        EffectiveForm::Printed => (&a * &ad, params.phi),
        EffectiveForm::SecondOrder => (&ad * &a, -params.phi),
    };
    let s22 = atom_op(space, EXCITED, EXCITED)?;
    let s11 = atom_op(space, GROUND, GROUND)?;
    let s21 = atom_op(space, EXCITED, GROUND)?;
    let light = s22.scale(C64::from(params.omega0 * params.omega0 / params.delta));
    let cavity = (&s11 * &stark).scale(C64::from(params.g * params.g / params.delta));
    let c = (&s21 * &a).scale(C64::from_polar(params.lambda1(), phase));
    let coupling = &c + &c.dagger();
    Ok(&(&light + &cavity) + &coupling)
}

/// Drop the Stark shifts and read the effective model as the one-photon
/// `H_1(φ)`: `Δ₁ = (Ω₀² − g²)/δ`, `λ₁ = Ω₀g/δ`. The sign of φ follows the
/// chosen effective form.
pub fn stark_free_jcm(params: &RamanParams, form: EffectiveForm) -> Result<JcmParams> {
    params.validate()?;
    let phi = match form {
        EffectiveForm::Printed => params.phi,
        EffectiveForm::SecondOrder => -params.phi,
    };
    Ok(JcmParams::with_detuning(1, params.delta1(), params.lambda1())?.with_phi(phi))
}
