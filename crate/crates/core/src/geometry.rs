//! Berry phases of the dressed doublets: closed forms, discrete Wilson loops
//! over the drive phase φ, adiabatic evolution, and the decaying-cavity
//! correction together with its small-Γ expansion.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use nalgebra::DVector;

use crate::dynamics::{evolve_adiabatic_loop, AdiabaticLoop};
use crate::error::{Error, Result};
use crate::hilbert::{SpaceSpec, C64, EXCITED, GROUND};
use crate::models::{ladder_factor, JcmParams, PhiFamily};
use crate::spectra::{complex_mixing_data, general_eigen, hermitian_eigen, mixing_angle, splitting, Branch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BerryMethod {
    Analytic,
    Wilson,
    Adiabatic,
    DissipativeAnalytic,
    DissipativeWilson,
}

impl std::fmt::Display for BerryMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BerryMethod::Analytic => "analytic",
            BerryMethod::Wilson => "wilson",
            BerryMethod::Adiabatic => "adiabatic",
            BerryMethod::DissipativeAnalytic => "dissipative-analytic",
            BerryMethod::DissipativeWilson => "dissipative-wilson",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerryResult {
    /// Phase in rad, never reduced modulo 2π.
    pub gamma: f64,
    pub method: BerryMethod,
    /// Number of φ steps (Wilson) or time steps (adiabatic).
    pub mesh: Option<usize>,
    /// Largest |per-step phase increment| seen along the loop.
    pub max_increment: Option<f64>,
    /// Ω_m = 2π(1 − cos 2θ_0m), vacuum results only.
    pub solid_angle: Option<f64>,
    /// Imaginary part of a complex (biorthogonal) phase.
    pub imaginary: Option<f64>,
}

impl BerryResult {
    fn bare(gamma: f64, method: BerryMethod) -> Self {
        Self {
            gamma,
            method,
            mesh: None,
            max_increment: None,
            solid_angle: None,
            imaginary: None,
        }
    }
}

/// `γ+ = mπ(1 − cos θ) + 2πn`, `γ− = −mπ(1 − cos θ) + 2π(n + m)`.
pub fn berry_analytic(n: usize, branch: Branch, params: &JcmParams) -> Result<BerryResult> {
    let theta = mixing_angle(n, params)?;
    let m = params.m as f64;
    let cap = m * PI * (1.0 - cos_theta(n, params, theta));
    let gamma = match branch {
        Branch::Plus => cap + TAU * n as f64,
        Branch::Minus => -cap + TAU * (n as f64 + m),
    };
    Ok(BerryResult::bare(gamma, BerryMethod::Analytic))
}

// Δ/R, exact at Δ = 0 and in the decoupled limits.
fn cos_theta(n: usize, params: &JcmParams, theta: f64) -> f64 {
    let r = splitting(n, params);
    if r > 0.0 {
        params.delta_m() / r
    } else {
        theta.cos()
    }
}

/// `cos 2θ_0m` as a ratio, so that resonance gives exactly −1.
fn cos_two_theta_vacuum(params: &JcmParams) -> f64 {
    let d2 = params.delta_m().powi(2);
    let b = 4.0 * params.lambda_m.powi(2) * ladder_factor(0, params.m);
    (d2 - b) / (d2 + b)
}

/// Vacuum-induced phase `γ_0m = (mπ/2)(1 − cos 2θ_0m) = mΩ_m/4`.
pub fn berry_vacuum(params: &JcmParams) -> Result<BerryResult> {
    mixing_angle(0, params)?;
    let one_minus = 1.0 - cos_two_theta_vacuum(params);
    let m = params.m as f64;
    Ok(BerryResult {
        solid_angle: Some(TAU * one_minus),
        ..BerryResult::bare(m * PI / 2.0 * one_minus, BerryMethod::Analytic)
    })
}

/// `cos²(θ/2)γ+ + sin²(θ/2)γ−` at n = 0: the dressed-population average of
/// the doublet phases seen by an atom entering in |2,0⟩.
pub fn vacuum_weighted_mean(params: &JcmParams) -> Result<f64> {
    let theta = mixing_angle(0, params)?;
    let c = cos_theta(0, params, theta);
    let plus = berry_analytic(0, Branch::Plus, params)?.gamma;
    let minus = berry_analytic(0, Branch::Minus, params)?.gamma;
    // cos²(θ/2) = (1 + cos θ)/2
    Ok(0.5 * (1.0 + c) * plus + 0.5 * (1.0 - c) * minus)
}

/// Largest accepted per-step phase increment in a Wilson loop.
pub const WILSON_MAX_INCREMENT: f64 = FRAC_PI_4;
/// Successive eigenvector overlaps below this mean the path was lost.
pub const TRACKING_OVERLAP: f64 = 0.9;
/// Default refinement cap.
pub const WILSON_MESH_CAP: usize = 1 << 22;

/// Coupled pair `(|2,n⟩, |1,n+m⟩)` of a doublet, with its loop setup.
struct Doublet {
    family: PhiFamily,
    indices: [usize; 2],
    photons: [f64; 2],
    phi0: f64,
}

impl Doublet {
    fn new(n: usize, params: &JcmParams) -> Result<Self> {
        mixing_angle(n, params)?;
        let m = params.m as usize;
        let space = SpaceSpec::two_level(n + m)?;
        Ok(Self {
            family: PhiFamily::new(space, params)?,
            indices: [space.index(EXCITED, n), space.index(GROUND, n + m)],
            photons: [n as f64, (n + m) as f64],
            phi0: params.phi,
        })
    }

    fn phi(&self, k: usize, mesh: usize) -> f64 {
        self.phi0 + TAU * k as f64 / mesh as f64
    }

    /// Components of `U(φ − φ₀)` on the pair.
    fn transport(&self, dphi: f64) -> [C64; 2] {
        self.photons.map(|n| C64::from_polar(1.0, -dphi * n))
    }
}

/// Phase reference `⟨U(φ_k − φ₀) v₀ | v⟩`: rotating `v` to make it real and
/// positive gives a single-valued gauge that keeps the winding of the loop.
fn anchor_phase(u: &[C64; 2], v0: &DVector<C64>, v: &DVector<C64>) -> C64 {
    let z = (u[0] * v0[0]).conj() * v[0] + (u[1] * v0[1]).conj() * v[1];
    if z.norm() == 0.0 {
        C64::from(1.0)
    } else {
        z / z.norm()
    }
}

/// Discrete Wilson loop over φ ∈ [φ₀, φ₀ + 2π] for one dressed branch, with
/// automatic mesh doubling up to [`WILSON_MESH_CAP`].
pub fn berry_wilson(n: usize, branch: Branch, params: &JcmParams, mesh: usize) -> Result<BerryResult> {
    berry_wilson_capped(n, branch, params, mesh, WILSON_MESH_CAP)
}

pub fn berry_wilson_capped(
    n: usize,
    branch: Branch,
    params: &JcmParams,
    mesh: usize,
    cap: usize,
) -> Result<BerryResult> {
    if params.gamma_decay != 0.0 {
        return Err(Error::invalid("use berry_wilson_dissipative for Γ > 0"));
    }
    if mesh < 2 {
        return Err(Error::invalid("Wilson mesh needs at least 2 steps"));
    }
    let doublet = Doublet::new(n, params)?;
    let mut mesh = mesh;
    loop {
        // a lost eigenpath on a coarse mesh is retried on a finer one
        let failure = match wilson_hermitian(&doublet, branch, mesh) {
            Ok((gamma, max_inc)) if max_inc < WILSON_MAX_INCREMENT => {
                return Ok(BerryResult {
                    mesh: Some(mesh),
                    max_increment: Some(max_inc),
                    ..BerryResult::bare(gamma, BerryMethod::Wilson)
                });
            }
            Ok((_, max_inc)) => Error::MeshCap {
                cap,
                max_increment: max_inc,
            },
            Err(e @ Error::Tracking { .. }) => e,
            Err(e) => return Err(e),
        };
        if mesh * 2 > cap {
            return Err(failure);
        }
        mesh *= 2;
    }
}

fn wilson_hermitian(d: &Doublet, branch: Branch, mesh: usize) -> Result<(f64, f64)> {
    let pick = |phi: f64, prev: Option<&DVector<C64>>| -> Result<DVector<C64>> {
        let (_, vecs) = hermitian_eigen(&d.family.block_at(phi, &d.indices))?;
        Ok(match prev {
            // ascending order, plus is the upper level
            None => match branch {
                Branch::Plus => vecs[1].clone(),
                Branch::Minus => vecs[0].clone(),
            },
            Some(p) => {
                let (a, b) = (p.dotc(&vecs[0]).norm(), p.dotc(&vecs[1]).norm());
                if a >= b {
                    vecs[0].clone()
                } else {
                    vecs[1].clone()
                }
            }
        })
    };

    let v0 = pick(d.phi(0, mesh), None)?;
    let mut prev = v0.clone();
    let mut total = 0.0;
    let mut max_inc: f64 = 0.0;
    for k in 1..=mesh {
        let mut v = pick(d.phi(k, mesh), Some(&prev))?;
        let overlap = prev.dotc(&v).norm();
        if overlap < TRACKING_OVERLAP {
            return Err(Error::Tracking { step: k, overlap });
        }
        let u = d.transport(TAU * k as f64 / mesh as f64);
        v *= anchor_phase(&u, &v0, &v).conj();
        let inc = -prev.dotc(&v).arg();
        max_inc = max_inc.max(inc.abs());
        total += inc;
        prev = v;
    }
    Ok((total, max_inc))
}

/// Biorthogonal Wilson loop of the decaying doublet: `γ = Σ i ln⟨L_{k−1}|R_k⟩`.
///
/// The left vectors are rescaled with the right ones so that `⟨L_k|R_k⟩ = 1`
/// at every mesh point. Branch `Plus` follows the eigenvalue with larger real
/// part at φ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPhase {
    pub gamma: C64,
    pub mesh: usize,
    pub max_increment: f64,
}

pub fn berry_wilson_dissipative(
    n: usize,
    branch: Branch,
    params: &JcmParams,
    mesh: usize,
) -> Result<ComplexPhase> {
    Ok(dissipative_loops(n, params, mesh)?.remove(match branch {
        Branch::Plus => 0,
        Branch::Minus => 1,
    }).0)
}

// (phase, ⟨2,n|R⟩⟨L|2,n⟩) for plus then minus.
fn dissipative_loops(n: usize, params: &JcmParams, mesh: usize) -> Result<Vec<(ComplexPhase, C64)>> {
    if mesh < 2 {
        return Err(Error::invalid("Wilson mesh needs at least 2 steps"));
    }
    let d = Doublet::new(n, params)?;
    let block = |phi: f64| general_eigen(&d.family.block_at(phi, &d.indices));
    let start = block(d.phi(0, mesh))?;
    let mut out = Vec::with_capacity(2);
    // general_eigen sorts ascending, plus is last
    for slot in [1usize, 0] {
        let r0 = start[slot].right.clone();
        let l0 = start[slot].left.clone();
        let weight = r0[0] * l0[0].conj();
        let (mut r_prev, mut l_prev) = (r0.clone(), l0);
        let mut total = C64::from(0.0);
        let mut max_inc: f64 = 0.0;
        for k in 1..=mesh {
            let pairs = block(d.phi(k, mesh))?;
            let best = pairs
                .iter()
                .max_by(|a, b| {
                    let oa = l_prev.dotc(&a.right).norm() / a.right.norm();
                    let ob = l_prev.dotc(&b.right).norm() / b.right.norm();
                    oa.total_cmp(&ob)
                })
                .expect("two eigenpairs");
            let tracked = (r_prev.dotc(&best.right) / C64::from(r_prev.norm() * best.right.norm())).norm();
            if tracked < TRACKING_OVERLAP {
                return Err(Error::Tracking { step: k, overlap: tracked });
            }
            let u = d.transport(TAU * k as f64 / mesh as f64);
            let phase = anchor_phase(&u, &r0, &best.right);
            let r = &best.right * phase.conj();
            let l = &best.left * phase.conj();
            let z = l_prev.dotc(&r);
            let step = C64::new(0.0, 1.0) * z.ln();
            max_inc = max_inc.max(step.re.abs());
            total += step;
            r_prev = r;
            l_prev = l;
        }
        out.push((
            ComplexPhase {
                gamma: total,
                mesh,
                max_increment: max_inc,
            },
            weight,
        ));
    }
    Ok(out)
}

/// Vacuum phase of the decaying cavity from biorthogonal loops, combined with
/// the weights `⟨2,0|R±⟩⟨L±|2,0⟩` (which sum to one).
pub fn berry_vacuum_dissipative_wilson(params: &JcmParams, mesh: usize) -> Result<BerryResult> {
    let loops = dissipative_loops(0, params, mesh)?;
    let gamma: C64 = loops.iter().map(|(p, w)| *w * p.gamma).sum();
    let max_inc = loops.iter().map(|(p, _)| p.max_increment).fold(0.0, f64::max);
    Ok(BerryResult {
        mesh: Some(mesh),
        max_increment: Some(max_inc),
        imaginary: Some(gamma.im),
        ..BerryResult::bare(gamma.re, BerryMethod::DissipativeWilson)
    })
}

/// `γ^d = (mπ/2)(1 − Re z)`, with `z` the complexified `cos 2θ_0m`. For m = 1
/// this is the one-photon result; m > 1 applies the same substitution.
pub fn berry_dissipative_analytic(params: &JcmParams) -> Result<BerryResult> {
    let z = complex_mixing_data(0, params)?.z;
    let m = params.m as f64;
    Ok(BerryResult::bare(
        m * PI / 2.0 * (1.0 - z.re),
        BerryMethod::DissipativeAnalytic,
    ))
}

/// `γ^d` as a function of signed `x = Γ/R`; even in `x`.
fn dissipative_at_ratio(params: &JcmParams, x: f64) -> Result<f64> {
    let r = splitting(0, params);
    let p = params.with_gamma(x.abs() * r)?;
    Ok(berry_dissipative_analytic(&p)?.gamma)
}

/// Adiabatic-evolution estimate of a doublet phase.
pub fn berry_adiabatic(
    n: usize,
    branch: Branch,
    params: &JcmParams,
    period: f64,
    steps: usize,
) -> Result<BerryResult> {
    let out = evolve_adiabatic_loop(&AdiabaticLoop::new(*params, n, branch, period, steps))?;
    Ok(BerryResult {
        mesh: Some(steps),
        ..BerryResult::bare(out.geometric_phase, BerryMethod::Adiabatic)
    })
}

/// Step used for the second difference in `x = Γ/R`.
pub const EXPANSION_STEP: f64 = 1e-3;

/// The two quadratic coefficients of `γ^d ≈ γ_01 + c (Γ/R)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCoefficients {
    /// `(π/4) cos²θ / (8 sin²θ + 16 sin⁴θ + cos⁴θ)`, as published.
    pub printed: f64,
    /// Central second difference of the closed-form dissipative phase.
    pub finite_difference: f64,
    pub theta: f64,
}

pub fn gamma_expansion_coefficient(params: &JcmParams) -> Result<ExpansionCoefficients> {
    let base = params.with_gamma(0.0)?;
    let theta = mixing_angle(0, &base)?;
    let (s2, c2) = (theta.sin().powi(2), theta.cos().powi(2));
    let printed = FRAC_PI_4 * c2 / (8.0 * s2 + 16.0 * s2 * s2 + c2 * c2);
    let h = EXPANSION_STEP;
    let f0 = dissipative_at_ratio(&base, 0.0)?;
    let fh = dissipative_at_ratio(&base, h)?;
    // f(−h) = f(h)
    let finite_difference = (2.0 * fh - 2.0 * f0) / (2.0 * h * h);
    Ok(ExpansionCoefficients {
        printed,
        finite_difference,
        theta,
    })
}

/// Samples of `γ^d − γ_01` at log-spaced `Γ/R` in `[x_min, x_max]`.
pub fn dissipative_sweep(params: &JcmParams, x_min: f64, x_max: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if !(x_min > 0.0 && x_max > x_min && points >= 2) {
        return Err(Error::invalid("need 0 < x_min < x_max and at least 2 points"));
    }
    let base = params.with_gamma(0.0)?;
    let f0 = dissipative_at_ratio(&base, 0.0)?;
    (0..points)
        .map(|k| {
            let x = x_min * (x_max / x_min).powf(k as f64 / (points - 1) as f64);
            Ok((x, dissipative_at_ratio(&base, x)? - f0))
        })
        .collect()
}

/// Least-squares fit of `y = c x² + c₄ x⁴` to `(x, y)` samples; returns `(c, c₄)`.
pub fn fit_even_quartic(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::invalid("fit needs at least two samples"));
    }
    // divide through by x²: y/x² = c + c₄ x², a straight line in x²
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x * x, y / (x * x))).collect();
    let (slope, intercept) = line_fit(&pts)?;
    Ok((intercept, slope))
}

/// Slope of `log|y|` against `log x`.
pub fn loglog_slope(samples: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.abs().ln())).collect();
    Ok(line_fit(&pts)?.0)
}

fn line_fit(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) || pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Degenerate("line fit over degenerate or non-finite samples".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_6, SQRT_2};

    fn p(m: u32, delta: f64, lambda: f64) -> JcmParams {
        JcmParams::with_detuning(m, delta, lambda).unwrap()
    }

    #[test]
    fn analytic_examples() {
        assert!((berry_analytic(0, Branch::Plus, &p(1, 0.0, 1.0)).unwrap().gamma - PI).abs() < 1e-15);
        assert!((berry_analytic(0, Branch::Minus, &p(1, 0.0, 1.0)).unwrap().gamma - PI).abs() < 1e-15);
        let g = berry_analytic(1, Branch::Plus, &p(2, 1.0, 1.0)).unwrap().gamma;
        assert!((g - 18.0 * PI / 5.0).abs() < 1e-12);
        let far = berry_analytic(2, Branch::Plus, &p(1, 1e9, 1.0)).unwrap().gamma;
        assert!((far - 4.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn vacuum_examples() {
        let r = berry_vacuum(&p(3, 0.0, 0.4)).unwrap();
        assert_eq!(r.gamma, 3.0 * PI);
        let pi6 = p(1, 2.0 * 3f64.sqrt(), 1.0);
        assert!((mixing_angle(0, &pi6).unwrap() - FRAC_PI_6).abs() < 1e-15);
        let r = berry_vacuum(&pi6).unwrap();
        assert!((r.gamma - FRAC_PI_4).abs() < 1e-15);
        assert!((r.solid_angle.unwrap() - PI).abs() < 1e-15);
        let r = berry_vacuum(&p(3, 2.0, 1.0)).unwrap();
        assert!((r.gamma - 18.0 * PI / 7.0).abs() < 1e-12);
        assert!((vacuum_weighted_mean(&p(3, 2.0, 1.0)).unwrap() - r.gamma).abs() < 1e-12);
        assert!((r.gamma - 3.0 * r.solid_angle.unwrap() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_matches_closed_form() {
        for (m, n, delta) in [(1, 0, 1.0), (2, 1, 1.0), (4, 3, -3.0), (3, 2, 0.0)] {
            for b in Branch::both() {
                let params = p(m, delta, 1.0).with_phi(0.3);
                let w = berry_wilson(n, b, &params, 20_000).unwrap();
                let a = berry_analytic(n, b, &params).unwrap();
                assert!((w.gamma - a.gamma).abs() <= 1e-6, "m={m} n={n} {b:?}: {} vs {}", w.gamma, a.gamma);
                assert!(w.max_increment.unwrap() < WILSON_MAX_INCREMENT);
            }
        }
    }

    #[test]
    fn wilson_decoupled_winding_is_exact() {
        // λ = 0, Δ > 0: the minus state of doublet n is |1, n+m⟩
        for mesh in [9, 10, 57] {
            let w = berry_wilson(1, Branch::Minus, &p(2, 0.5, 0.0), mesh).unwrap();
            assert!((w.gamma - TAU * 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wilson_error_shrinks_with_mesh() {
        let params = p(3, 0.7, 1.0);
        let exact = berry_analytic(1, Branch::Plus, &params).unwrap().gamma;
        let errs: Vec<f64> = [50, 100, 200, 400]
            .iter()
            .map(|&mesh| (berry_wilson(1, Branch::Plus, &params, mesh).unwrap().gamma - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[0] > w[1]), "{errs:?}");
    }

    #[test]
    fn coarse_mesh_is_refined() {
        // γ ≈ 2π·7 needs more than 8 steps to keep increments below π/4
        let w = berry_wilson(3, Branch::Minus, &p(4, 1.0, 1.0), 8).unwrap();
        assert!(w.mesh.unwrap() > 8);
        // decoupled |1,7⟩: overlaps stay unimodular, only the increments are too big
        let w = berry_wilson(3, Branch::Minus, &p(4, 1.0, 0.0), 16).unwrap();
        assert_eq!(w.mesh, Some(64));
        assert!((w.gamma - 14.0 * PI).abs() < 1e-12);
        assert!(matches!(
            berry_wilson_capped(3, Branch::Minus, &p(4, 1.0, 0.0), 16, 32),
            Err(Error::MeshCap { .. })
        ));
    }

    #[test]
    fn dissipative_closed_form_limits() {
        let base = p(1, 2.0 * 3f64.sqrt(), 1.0);
        let d0 = berry_dissipative_analytic(&base).unwrap().gamma;
        assert!((d0 - berry_vacuum(&base).unwrap().gamma).abs() < 1e-12);
        // resonance: γ^d = π + πΓ²/(16λ²) + O(Γ⁴)
        let lambda = 1.3;
        let gamma = 1e-3;
        let g = berry_dissipative_analytic(&p(1, 0.0, lambda).with_gamma(gamma).unwrap()).unwrap().gamma;
        let expect = PI + PI * gamma * gamma / (16.0 * lambda * lambda);
        assert!((g - expect).abs() < 1e-12);
    }

    #[test]
    fn expansion_coefficient_matches_direct_expansion() {
        // c = (π/4) sin²θ (4 sin²θ − 3)
        for delta in [0.0, 2.0 * 3f64.sqrt(), 0.7, -1.9] {
            let params = p(1, delta, 1.0);
            let e = gamma_expansion_coefficient(&params).unwrap();
            let s2 = e.theta.sin().powi(2);
            let closed = FRAC_PI_4 * s2 * (4.0 * s2 - 3.0);
            assert!((e.finite_difference - closed).abs() < 1e-6, "{delta}: {} vs {closed}", e.finite_difference);
        }
        let at_resonance = gamma_expansion_coefficient(&p(1, 0.0, 1.0)).unwrap();
        assert!(at_resonance.printed.abs() < 1e-15);
        assert!((at_resonance.finite_difference - FRAC_PI_4).abs() < 1e-6);
    }

    #[test]
    fn sweep_fit_recovers_coefficient() {
        let params = p(1, 2.0 * 3f64.sqrt(), 1.0);
        let samples = dissipative_sweep(&params, 1e-4, 1e-2, 40).unwrap();
        let (c, _) = fit_even_quartic(&samples).unwrap();
        let fd = gamma_expansion_coefficient(&params).unwrap().finite_difference;
        assert!(((c - fd) / fd).abs() < 1e-4);
        let steep = dissipative_sweep(&params, 1e-3, 1e-2, 20).unwrap();
        assert!((loglog_slope(&steep).unwrap() - 2.0).abs() < 0.1);
    }

    #[test]
    fn biorthogonal_loop_matches_closed_form() {
        // Re γ converges as 1/mesh: the per-step ln⟨L|R⟩ carries a complex
        // second cumulant of a†a once Γ > 0
        let params = p(1, 0.8, 1.0).with_gamma(0.3).unwrap();
        let a = berry_dissipative_analytic(&params).unwrap().gamma;
        let err = |mesh| (berry_vacuum_dissipative_wilson(&params, mesh).unwrap().gamma - a).abs();
        let (e1, e2) = (err(2000), err(4000));
        assert!((e1 / e2 - 2.0).abs() < 0.05, "{e1} {e2}");
        assert!(err(40_000) < 1e-5);
        // the Hermitian limit reduces to the ordinary loop
        let herm = p(1, 0.8, 1.0);
        let w0 = berry_wilson_dissipative(0, Branch::Plus, &herm, 4000).unwrap();
        let a0 = berry_analytic(0, Branch::Plus, &herm).unwrap();
        assert!((w0.gamma.re - a0.gamma).abs() < 1e-5);
        // Im γ is the mesh-suppressed variance term (2π)² var(a†a)/(2·mesh)
        assert!(w0.gamma.im.abs() <= TAU * TAU * 0.25 / (2.0 * 4000.0));
    }

    #[test]
    fn adiabatic_estimate_converges() {
        let params = p(1, 1.0, 1.0);
        let exact = PI * (1.0 - 1.0 / 5f64.sqrt());
        let e1 = (berry_adiabatic(0, Branch::Plus, &params, 250.0, 20_000).unwrap().gamma - exact).abs();
        let e2 = (berry_adiabatic(0, Branch::Plus, &params, 500.0, 40_000).unwrap().gamma - exact).abs();
        assert!(e2 < e1);
        assert!((e1 / e2 - 2.0).abs() < 0.1 * SQRT_2);
    }
}
