//! Fixed-step Schrödinger integration with phase bookkeeping.
//!
//! `i dψ/dt = H(t)ψ` is split as `H = s(t)·1 + K(t)` with `s = tr H / dim`.
//! The traceless part `K` is integrated with the classical fourth-order
//! Runge-Kutta scheme; the scalar part contributes the factor `e^{−i∫s}`,
//! integrated by Simpson's rule on the same stage times. Constant energy
//! offsets therefore change only the bookkeeping, never the numerics.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{inf_norm, Normalization, SpaceSpec, StateVector, C64};
use crate::models::{JcmParams, PhiFamily, PhiSweep};
use crate::spectra::{dressed_pair, Branch};

/// Largest accepted `dt × rate_bound`.
pub const STABILITY_LIMIT: f64 = 0.05;

/// A Hamiltonian `t ↦ H(t)` together with the rates an integrator needs.
pub trait HamiltonianFamily: Sync {
    fn space(&self) -> SpaceSpec;

    fn matrix_at(&self, t: f64) -> DMatrix<C64>;

    /// Upper bound on the spectral radius of the traceless part of `H(t)`
    /// over the whole run, plus the fastest explicit drive frequency.
    fn rate_bound(&self) -> f64;

    /// Characteristic period of the explicit time dependence, if any.
    fn timescale(&self) -> Option<f64> {
        None
    }
}

/// Time-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct ConstantHamiltonian {
    space: SpaceSpec,
    matrix: DMatrix<C64>,
}

impl ConstantHamiltonian {
    pub fn new(op: crate::hilbert::ComplexOperator) -> Self {
        Self {
            space: op.space(),
            matrix: op.into_matrix(),
        }
    }
}

impl HamiltonianFamily for ConstantHamiltonian {
    fn space(&self) -> SpaceSpec {
        self.space
    }

    fn matrix_at(&self, _t: f64) -> DMatrix<C64> {
        self.matrix.clone()
    }

    fn rate_bound(&self) -> f64 {
        let d = self.matrix.nrows();
        let s = self.matrix.trace() / d as f64;
        inf_norm(&(&self.matrix - DMatrix::identity(d, d) * s))
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// State of the integrator after a step, handed to observers.
pub struct Snapshot<'a> {
    pub step: usize,
    pub t: f64,
    /// State evolved under the traceless part only.
    pub reduced: &'a DVector<C64>,
    /// `∫₀ᵗ tr H / dim`, complex for decaying models.
    pub scalar_phase: C64,
}

impl Snapshot<'_> {
    /// `ψ(t) = e^{−iS(t)} χ(t)`.
    pub fn full_state(&self) -> DVector<C64> {
        self.reduced * (C64::new(0.0, -1.0) * self.scalar_phase).exp()
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub final_state: StateVector,
    /// `(t, ‖ψ(t)‖)` sampled at most ~1000 times plus the endpoint.
    pub norm_history: Vec<(f64, f64)>,
    /// `−∫ Re⟨ψ|H|ψ⟩/‖ψ‖² dt`, signed so that total = dynamical + geometric.
    pub dynamical_phase: f64,
    pub step_count: usize,
    pub step_size: f64,
    pub max_norm_drift: f64,
    pub hermitian: bool,
}

pub fn evolve(
    family: &dyn HamiltonianFamily,
    psi0: &StateVector,
    t_final: f64,
    steps: usize,
) -> Result<EvolutionResult> {
    evolve_observed(family, psi0, t_final, steps, |_| {})
}

/// Minimum number of steps satisfying the stability guard.
pub fn min_steps(family: &dyn HamiltonianFamily, t_final: f64) -> usize {
    (t_final.abs() * family.rate_bound() / STABILITY_LIMIT).ceil().max(1.0) as usize
}

/// [`evolve`] with a callback after the initial state and after every step.
pub fn evolve_observed<F>(
    family: &dyn HamiltonianFamily,
    psi0: &StateVector,
    t_final: f64,
    steps: usize,
    mut observer: F,
) -> Result<EvolutionResult>
where
    F: FnMut(&Snapshot<'_>),
{
    let space = family.space();
    if psi0.space() != space {
        return Err(Error::invalid("initial state and Hamiltonian live on different spaces"));
    }
    if !psi0.is_normalized(1e-10) {
        return Err(Error::invalid(format!(
            "initial state must be normalized, |psi|^2 = {}",
            psi0.norm() * psi0.norm()
        )));
    }
    if steps == 0 || !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::invalid("need steps >= 1 and a positive final time"));
    }
    let dt = t_final / steps as f64;
    let product = dt * family.rate_bound();
    if product > STABILITY_LIMIT {
        return Err(Error::Stability {
            product,
            limit: STABILITY_LIMIT,
            min_steps: min_steps(family, t_final),
        });
    }

    let d = space.dim();
    let minus_i = C64::new(0.0, -1.0);
    let split = |h: DMatrix<C64>| {
        let s = h.trace() / d as f64;
        let mut k = h.clone();
        for i in 0..d {
            k[(i, i)] -= s;
        }
        (h, k, s)
    };
    let energy = |h: &DMatrix<C64>, v: &DVector<C64>| (v.dotc(&(h * v))).re / v.norm_squared();

    let mut chi = psi0.amplitudes().clone();
    let mut scalar_re = CompensatedSum::default();
    let mut scalar_im = CompensatedSum::default();
    let mut dyn_phase = CompensatedSum::default();

    let (mut h_start, mut k_start, mut s_start) = split(family.matrix_at(0.0));
    let hermitian = {
        let defect = (&h_start - h_start.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        defect <= 1e-12 * (1.0 + inf_norm(&h_start))
    };
    let stride = (steps / 1000).max(1);
    let mut norm_history = vec![(0.0, 1.0)];
    let mut max_norm_drift: f64 = 0.0;
    let mut e_start = energy(&h_start, &chi);

    observer(&Snapshot {
        step: 0,
        t: 0.0,
        reduced: &chi,
        scalar_phase: C64::from(0.0),
    });

    for step in 0..steps {
        let t = step as f64 * dt;
        let (_, k_mid, s_mid) = split(family.matrix_at(t + 0.5 * dt));
        let (h_end, k_end, s_end) = split(family.matrix_at(t + dt));

        let k1 = (&k_start * &chi) * minus_i;
        let k2 = (&k_mid * (&chi + &k1 * C64::from(0.5 * dt))) * minus_i;
        let k3 = (&k_mid * (&chi + &k2 * C64::from(0.5 * dt))) * minus_i;
        let k4 = (&k_end * (&chi + &k3 * C64::from(dt))) * minus_i;
        chi += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);

        let ds = (s_start + s_mid * 4.0 + s_end) * (dt / 6.0);
        scalar_re.add(ds.re);
        scalar_im.add(ds.im);

        let e_end = energy(&h_end, &chi);
        dyn_phase.add(-0.5 * dt * (e_start + e_end));
        e_start = e_end;

        let scalar_phase = C64::new(scalar_re.value(), scalar_im.value());
        let norm = chi.norm() * scalar_phase.im.exp();
        if hermitian {
            max_norm_drift = max_norm_drift.max((norm - 1.0).abs());
        }
        if (step + 1) % stride == 0 || step + 1 == steps {
            norm_history.push((t + dt, norm));
        }
        observer(&Snapshot {
            step: step + 1,
            t: t + dt,
            reduced: &chi,
            scalar_phase,
        });

        h_start = h_end;
        k_start = k_end;
        s_start = s_end;
    }
    let _ = h_start;

    let scalar_phase = C64::new(scalar_re.value(), scalar_im.value());
    let final_amps = &chi * (minus_i * scalar_phase).exp();
    let tag = if hermitian {
        Normalization::Unit
    } else {
        Normalization::SubNormalized
    };
    Ok(EvolutionResult {
        final_state: StateVector::tagged(space, final_amps, tag),
        norm_history,
        dynamical_phase: dyn_phase.value(),
        step_count: steps,
        step_size: dt,
        max_norm_drift,
        hermitian,
    })
}

/// Branch-continuous unwrapping of a sampled complex signal, looking at every
/// `stride`-th sample. Returns `None` when some increment reaches π/2.
pub(crate) fn unwrap_phase(samples: &[C64], stride: usize) -> Option<(f64, f64)> {
    let mut total = 0.0;
    let mut max_inc: f64 = 0.0;
    let mut prev = samples[0];
    let mut idx = 0;
    loop {
        let next_idx = (idx + stride).min(samples.len() - 1);
        let next = samples[next_idx];
        let inc = (next * prev.conj()).arg();
        if inc.abs() >= FRAC_PI_2 {
            return None;
        }
        max_inc = max_inc.max(inc.abs());
        total += inc;
        prev = next;
        idx = next_idx;
        if idx == samples.len() - 1 {
            break;
        }
    }
    Some((samples[0].arg() + total, max_inc))
}

/// Unwrap with checkpoint stride halving from `initial_stride` down to 1.
pub(crate) fn unwrap_adaptive(samples: &[C64], initial_stride: usize) -> Result<(f64, usize)> {
    let mut stride = initial_stride.max(1);
    loop {
        if let Some((phase, _)) = unwrap_phase(samples, stride) {
            return Ok((phase, stride));
        }
        if stride == 1 {
            let worst = samples
                .windows(2)
                .map(|w| (w[1] * w[0].conj()).arg().abs())
                .fold(0.0, f64::max);
            return Err(Error::PhaseTracking { increment: worst });
        }
        stride /= 2;
    }
}

/// One adiabatic loop `φ: φ₀ → φ₀ + 2π` starting from a dressed state.
#[derive(Debug, Clone)]
pub struct AdiabaticLoop {
    pub params: JcmParams,
    pub n: usize,
    pub branch: Branch,
    /// Loop duration T.
    pub period: f64,
    pub steps: usize,
    /// Constant added to H; shifts only the dynamical phase.
    pub energy_offset: f64,
}

impl AdiabaticLoop {
    pub fn new(params: JcmParams, n: usize, branch: Branch, period: f64, steps: usize) -> Self {
        Self {
            params,
            n,
            branch,
            period,
            steps,
            energy_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoopPhases {
    /// Unwrapped phase of the evolved state relative to the transported
    /// initial dressed state, `arg⟨U(φ(t)−φ₀)ψ₀|ψ(t)⟩` at t = T.
    pub total_phase: f64,
    pub dynamical_phase: f64,
    /// `total − dynamical`, not reduced modulo 2π.
    pub geometric_phase: f64,
    pub final_overlap: f64,
    pub checkpoint_stride: usize,
}

/// Minimum `|⟨ψ(0)|ψ(T)⟩|` for an accepted loop.
pub const ADIABATIC_OVERLAP: f64 = 0.99;

pub fn evolve_adiabatic_loop(cfg: &AdiabaticLoop) -> Result<LoopPhases> {
    if cfg.params.gamma_decay != 0.0 {
        return Err(Error::invalid("adiabatic loops are run on the Hermitian model"));
    }
    if !(cfg.period.is_finite() && cfg.period > 0.0) {
        return Err(Error::invalid("loop period must be positive"));
    }
    let space = SpaceSpec::two_level(cfg.n + cfg.params.m as usize)?;
    let (plus, minus) = dressed_pair(space, cfg.n, &cfg.params)?;
    let psi0 = match cfg.branch {
        Branch::Plus => plus.vector,
        Branch::Minus => minus.vector,
    };
    let mut sweep = PhiSweep::new(PhiFamily::new(space, &cfg.params)?, cfg.period);
    sweep.phi0 = cfg.params.phi;
    sweep.energy_offset = cfg.energy_offset;

    let photons: Vec<f64> = space.photon_numbers().into_iter().map(|n| n as f64).collect();
    let reference = psi0.amplitudes().clone();
    let mut overlaps = Vec::with_capacity(cfg.steps + 1);
    let mut final_scalar = C64::from(0.0);
    let result = evolve_observed(&sweep, &psi0, cfg.period, cfg.steps, |snap| {
        final_scalar = snap.scalar_phase;
        // ⟨U(φ−φ₀)ψ₀|χ⟩ with U = e^{−i(φ−φ₀)a†a}
        let dphi = TAU * snap.t / cfg.period;
        let z = reference
            .iter()
            .zip(snap.reduced.iter())
            .zip(&photons)
            .map(|((r, c), &n)| r.conj() * C64::from_polar(1.0, dphi * n) * c)
            .sum::<C64>();
        overlaps.push(z);
    })?;

    let final_overlap = psi0.inner(&result.final_state).norm();
    if final_overlap < ADIABATIC_OVERLAP {
        return Err(Error::Adiabaticity {
            overlap: final_overlap,
            threshold: ADIABATIC_OVERLAP,
        });
    }
    let (reduced_phase, stride) = unwrap_adaptive(&overlaps, 16)?;
    // ψ = e^{−iS}χ, so the scalar part enters unwrapped as −Re S(T)
    let total_phase = reduced_phase - final_scalar.re;
    Ok(LoopPhases {
        total_phase,
        dynamical_phase: result.dynamical_phase,
        geometric_phase: total_phase - result.dynamical_phase,
        final_overlap,
        checkpoint_stride: stride,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{number, tensor_basis_state, ComplexOperator, EXCITED, GROUND};
    use crate::models::build_jcm_frame;

    fn diag_family(entries: &[f64]) -> (ConstantHamiltonian, SpaceSpec) {
        let space = SpaceSpec::two_level(entries.len() / 2 - 1).unwrap();
        let m = DMatrix::from_diagonal(&DVector::from_iterator(
            entries.len(),
            entries.iter().map(|&e| C64::from(e)),
        ));
        (
            ConstantHamiltonian::new(ComplexOperator::from_matrix(space, m).unwrap()),
            space,
        )
    }

    #[test]
    fn constant_diagonal_phase() {
        let (fam, space) = diag_family(&[0.8, -0.5, 0.3, 0.1]);
        let psi0 = tensor_basis_state(space, GROUND, 0).unwrap();
        let t = 10.0 / 0.8;
        let res = evolve(&fam, &psi0, t, 4000).unwrap();
        let got = res.final_state.amplitude(GROUND, 0);
        let expect = C64::from_polar(1.0, -0.8 * t);
        assert!((got - expect).norm() <= 1e-10);
        assert!((res.dynamical_phase + 0.8 * t).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_step_halving() {
        let (fam, space) = diag_family(&[1.0, -0.5, 0.0, 0.0]);
        let psi0 = tensor_basis_state(space, GROUND, 0).unwrap();
        let t = 10.0;
        let err = |steps| {
            let r = evolve(&fam, &psi0, t, steps).unwrap();
            (r.final_state.amplitude(GROUND, 0) - C64::from_polar(1.0, -t)).norm()
        };
        let (e1, e2) = (err(800), err(1600));
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn vacuum_rabi_oscillation() {
        let lambda = 1.0;
        let space = SpaceSpec::two_level(1).unwrap();
        let h = build_jcm_frame(space, &JcmParams::with_detuning(1, 0.0, lambda).unwrap()).unwrap();
        let fam = ConstantHamiltonian::new(h);
        let psi0 = tensor_basis_state(space, EXCITED, 0).unwrap();
        let t_final = 10.0 * std::f64::consts::PI / lambda;
        let mut worst: f64 = 0.0;
        evolve_observed(&fam, &psi0, t_final, 6000, |s| {
            let p = s.full_state()[space.index(EXCITED, 0)].norm_sqr();
            worst = worst.max((p - (lambda * s.t).cos().powi(2)).abs());
        })
        .unwrap();
        assert!(worst <= 1e-8, "deviation {worst}");
    }

    #[test]
    fn pure_photon_decay() {
        let gamma = 0.4;
        let space = SpaceSpec::two_level(2).unwrap();
        let fam = ConstantHamiltonian::new(number(space).scale(C64::new(0.0, -gamma / 2.0)));
        let psi0 = tensor_basis_state(space, GROUND, 1).unwrap();
        let res = evolve(&fam, &psi0, 5.0, 2000).unwrap();
        assert!(!res.hermitian);
        assert_eq!(res.final_state.normalization(), Normalization::SubNormalized);
        for &(t, norm) in &res.norm_history {
            let expect = (-gamma * t).exp();
            assert!((norm * norm - expect).abs() <= 1e-8 * expect);
        }
    }

    #[test]
    fn stability_guard_reports_minimum() {
        let (fam, space) = diag_family(&[1.0, -1.0, 0.0, 0.0]);
        let psi0 = tensor_basis_state(space, GROUND, 0).unwrap();
        match evolve(&fam, &psi0, 10.0, 100) {
            Err(Error::Stability { min_steps, .. }) => {
                assert_eq!(min_steps, min_steps_for(10.0, 1.0));
                assert!(evolve(&fam, &psi0, 10.0, min_steps).is_ok());
            }
            other => panic!("expected stability error, got {other:?}"),
        }
    }

    fn min_steps_for(t: f64, bound: f64) -> usize {
        (t * bound / STABILITY_LIMIT).ceil() as usize
    }

    #[test]
    fn rejects_unnormalized_start() {
        let (fam, space) = diag_family(&[1.0, 0.0, 0.0, 0.0]);
        let v = StateVector::from_amplitudes(space, DVector::from_element(4, C64::from(1.0))).unwrap();
        assert!(matches!(evolve(&fam, &v, 1.0, 100), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn co_evolved_overlaps_preserved() {
        let space = SpaceSpec::two_level(3).unwrap();
        let params = JcmParams::with_detuning(1, 0.4, 0.9).unwrap();
        let sweep = PhiSweep::new(PhiFamily::new(space, &params).unwrap(), 20.0);
        let a = tensor_basis_state(space, EXCITED, 1).unwrap();
        let mut b_amp = DVector::zeros(space.dim());
        b_amp[space.index(EXCITED, 1)] = C64::new(0.6, 0.0);
        b_amp[space.index(GROUND, 2)] = C64::new(0.0, 0.8);
        let b = StateVector::from_amplitudes(space, b_amp).unwrap();
        let before = a.inner(&b);
        let ra = evolve(&sweep, &a, 20.0, 4000).unwrap();
        let rb = evolve(&sweep, &b, 20.0, 4000).unwrap();
        assert!((ra.final_state.inner(&rb.final_state) - before).norm() <= 1e-8);
        assert!(ra.max_norm_drift <= 1e-8);
    }

    #[test]
    fn decoupled_loop_winds_by_photon_number() {
        // λ = 0, the minus state of doublet n is |1, n+m⟩ (Δ > 0)
        let params = JcmParams::with_detuning(1, 0.5, 0.0).unwrap();
        let cfg = AdiabaticLoop::new(params, 2, Branch::Minus, 5.0, 2000);
        let out = evolve_adiabatic_loop(&cfg).unwrap();
        assert!((out.geometric_phase - TAU * 3.0).abs() < 1e-9);
    }

    #[test]
    fn adiabatic_loop_geometric_phase() {
        let params = JcmParams::with_detuning(1, 1.0, 1.0).unwrap();
        let expect = std::f64::consts::PI * (1.0 - 1.0 / 5f64.sqrt());
        let mut cfg = AdiabaticLoop::new(params, 0, Branch::Plus, 500.0, 40_000);
        let base = evolve_adiabatic_loop(&cfg).unwrap();
        // finite-T value from exact diagonalization in the co-rotating frame
        assert!((base.geometric_phase - 1.715_544_184_336).abs() <= 1e-6, "{}", base.geometric_phase);
        assert!((base.geometric_phase - expect).abs() < 0.022);
        cfg.energy_offset = 3.7;
        let shifted = evolve_adiabatic_loop(&cfg).unwrap();
        assert!((shifted.geometric_phase - base.geometric_phase).abs() <= 1e-9);
        assert!((shifted.dynamical_phase - base.dynamical_phase + 3.7 * 500.0).abs() < 1e-8);
    }

    #[test]
    fn fast_loop_is_rejected() {
        let params = JcmParams::with_detuning(1, 1.0, 1.0).unwrap();
        let cfg = AdiabaticLoop::new(params, 0, Branch::Plus, 0.5, 2000);
        assert!(matches!(evolve_adiabatic_loop(&cfg), Err(Error::Adiabaticity { .. })));
    }

    #[test]
    fn unwrap_rejects_large_jumps() {
        let samples: Vec<C64> = (0..50).map(|k| C64::from_polar(1.0, 0.5 * k as f64)).collect();
        assert!(unwrap_phase(&samples, 4).is_none());
        let (phase, stride) = unwrap_adaptive(&samples, 8).unwrap();
        assert_eq!(stride, 2);
        assert!((phase - 0.5 * 49.0).abs() < 1e-12);
    }
}
