//! Large-detuning reduction of the Raman configuration, checked by running
//! the full three-level model next to the effective two-level one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{evolve_observed, min_steps, HamiltonianFamily};
use crate::error::{Error, Result};
use crate::hilbert::{SpaceSpec, StateVector, AUXILIARY, C64};
use crate::models::{build_raman_effective, build_raman_full, EffectiveForm, RamanParams};
use crate::spectra::hermitian_eigen;

/// Level-|3⟩ population above which the elimination is flagged.
pub const LEVEL3_FLAG: f64 = 0.2;
/// Largest tolerated population in the top Fock state.
pub const TAIL_LIMIT: f64 = 1e-10;
/// Smallest `δ / max(g, Ω₀)` accepted.
pub const MIN_DETUNING_RATIO: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub params: RamanParams,
    pub form: EffectiveForm,
    /// `(t, fidelity)` at a sub-period resolution.
    pub fidelity_history: Vec<(f64, f64)>,
    /// `(t_k, fidelity)` at `t_k = 2πk/δ`.
    pub stroboscopic: Vec<(f64, f64)>,
    pub min_stroboscopic_fidelity: f64,
    /// Fidelity at the last stroboscopic time.
    pub final_fidelity: f64,
    pub max_level3_population: f64,
    /// Set when `max_level3_population > LEVEL3_FLAG`.
    pub flagged: bool,
    /// Largest population in the top Fock state during the run.
    pub tail_population: f64,
    pub max_norm_drift: f64,
    pub t_final: f64,
    pub steps: usize,
}

/// `π/λ₁`: one full |2,0⟩ → |1,1⟩ → |2,0⟩ population cycle of the resonant
/// effective model (population ∝ cos²λ₁t).
pub fn effective_rabi_period(params: &RamanParams) -> Result<f64> {
    params.validate()?;
    let l = params.lambda1();
    if !(l > 0.0) {
        return Err(Error::invalid("effective Rabi period needs λ1 > 0"));
    }
    Ok(PI / l)
}

/// Exact propagator of a constant Hermitian matrix, applied on demand.
struct Spectral {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
    coeffs: DVector<C64>,
}

impl Spectral {
    fn new(h: &DMatrix<C64>, psi0: &DVector<C64>) -> Result<Self> {
        let (values, vecs) = hermitian_eigen(h)?;
        let vectors = DMatrix::from_columns(&vecs);
        let coeffs = vectors.adjoint() * psi0;
        Ok(Self {
            values,
            vectors,
            coeffs,
        })
    }

    fn state(&self, t: f64) -> DVector<C64> {
        let phased = DVector::from_iterator(
            self.values.len(),
            self.values
                .iter()
                .zip(self.coeffs.iter())
                .map(|(&e, c)| c * C64::from_polar(1.0, -e * t)),
        );
        &self.vectors * phased
    }
}

/// Co-evolve `psi0` (two-level space) under the full and effective models.
///
/// `steps` is a lower bound: it is rounded up so that each drive period 2π/δ
/// holds a whole number of steps, and `t_final` is rounded to the nearest
/// step. The stability guard of the integrator still applies.
pub fn validate_reduction(
    params: &RamanParams,
    psi0: &StateVector,
    t_final: f64,
    steps: usize,
    form: EffectiveForm,
) -> Result<ReductionReport> {
    params.validate()?;
    if params.detuning_ratio() < MIN_DETUNING_RATIO * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "delta/max(g, omega0) = {:.3} is below {MIN_DETUNING_RATIO}",
            params.detuning_ratio()
        )));
    }
    let two = psi0.space();
    if two.atom_levels() != 2 {
        return Err(Error::invalid("initial state must live on the two-level space"));
    }
    if !(t_final.is_finite() && t_final > 0.0) || steps == 0 {
        return Err(Error::invalid("need a positive final time and steps >= 1"));
    }
    let three = SpaceSpec::three_level(two.photon_cutoff())?;
    let full = build_raman_full(three, params)?;
    let effective = build_raman_effective(two, params, form)?;

    let period = full.period();
    let periods = t_final / period;
    let per_period = (steps as f64 / periods).ceil().max(1.0) as usize;
    let dt = period / per_period as f64;
    let total = (t_final / dt).round().max(1.0) as usize;
    let t_end = total as f64 * dt;

    let mut embedded = DVector::zeros(three.dim());
    // atom-major ordering: levels |1⟩, |2⟩ share indices across the two spaces
    embedded.rows_mut(0, two.dim()).copy_from(psi0.amplitudes());
    let start = StateVector::from_amplitudes(three, embedded)?;

    let eff = Spectral::new(effective.matrix(), psi0.amplitudes())?;
    let lower = two.dim();
    let top: Vec<usize> = (0..three.atom_levels())
        .map(|l| three.index(l, three.photon_cutoff()))
        .collect();
    let aux: Vec<usize> = (0..three.fock_dim()).map(|n| three.index(AUXILIARY, n)).collect();
    let stride = (total / 20_000).max(1);

    let mut history = Vec::new();
    let mut strobe = Vec::new();
    let mut max3: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let fidelity = |psi: &DVector<C64>, t: f64| {
        let proj = psi.rows(0, lower);
        let w = proj.norm_squared();
        if w == 0.0 {
            return 0.0;
        }
        let e = eff.state(t);
        (e.dotc(&proj).norm_sqr() / w).clamp(0.0, 1.0)
    };

    let result = evolve_observed(&full, &start, t_end, total, |snap| {
        let psi = snap.full_state();
        max3 = max3.max(aux.iter().map(|&i| psi[i].norm_sqr()).sum::<f64>());
        tail = tail.max(top.iter().map(|&i| psi[i].norm_sqr()).sum::<f64>());
        let is_strobe = snap.step % per_period == 0;
        if is_strobe || snap.step % stride == 0 || snap.step == total {
            let f = fidelity(&psi, snap.t);
            if snap.step % stride == 0 || snap.step == total {
                history.push((snap.t, f));
            }
            if is_strobe {
                strobe.push((snap.t, f));
            }
        }
    })?;

    if tail > TAIL_LIMIT {
        return Err(Error::Truncation { population: tail });
    }
    let min_strobe = strobe.iter().map(|s| s.1).fold(1.0, f64::min);
    let final_fidelity = strobe.last().map(|s| s.1).unwrap_or(1.0);
    Ok(ReductionReport {
        params: *params,
        form,
        fidelity_history: history,
        stroboscopic: strobe,
        min_stroboscopic_fidelity: min_strobe,
        final_fidelity,
        max_level3_population: max3,
        flagged: max3 > LEVEL3_FLAG,
        tail_population: tail,
        max_norm_drift: result.max_norm_drift,
        t_final: t_end,
        steps: total,
    })
}

/// Populations of the effective model at the given times.
pub fn effective_populations(
    params: &RamanParams,
    psi0: &StateVector,
    times: &[f64],
    form: EffectiveForm,
) -> Result<Vec<Vec<f64>>> {
    let h = build_raman_effective(psi0.space(), params, form)?;
    let eff = Spectral::new(h.matrix(), psi0.amplitudes())?;
    Ok(times
        .iter()
        .map(|&t| eff.state(t).iter().map(|z| z.norm_sqr()).collect())
        .collect())
}

/// Steps that satisfy the integrator's stability guard for a full-model run.
pub fn required_steps(params: &RamanParams, photon_cutoff: usize, t_final: f64) -> Result<usize> {
    let full = build_raman_full(SpaceSpec::three_level(photon_cutoff)?, params)?;
    Ok(min_steps(&full as &dyn HamiltonianFamily, t_final))
}
