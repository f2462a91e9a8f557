//! Dressed states of the m-quantum JCM, their mixing angles and energies, and
//! the numerical eigensolvers that serve as independent checks on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{SpaceSpec, StateVector, C64, EXCITED, GROUND};
use crate::models::{ladder_factor, JcmParams};

/// Which member of a dressed doublet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `|Ψn+⟩ = cos(θ/2)|2,n⟩ + sin(θ/2)|1,n+m⟩`, energy `+R/2`.
    Plus,
    /// `|Ψn−⟩ = cos(θ/2)|1,n+m⟩ − sin(θ/2)|2,n⟩`, energy `−R/2`.
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn both() -> [Branch; 2] {
        [Branch::Plus, Branch::Minus]
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "1" | "+1" => Ok(Branch::Plus),
            "-" | "minus" | "-1" => Ok(Branch::Minus),
            other => Err(Error::invalid(format!("unknown branch '{other}' (use plus/minus)"))),
        }
    }
}

/// `R_nm = √(Δ_m² + 4λ_m²(n+m)!/n!)`, the splitting of the n-th doublet.
pub fn splitting(n: usize, params: &JcmParams) -> f64 {
    let d = params.delta_m();
    (d * d + 4.0 * params.lambda_m * params.lambda_m * ladder_factor(n, params.m)).sqrt()
}

/// Mixing angle `θ_nm ∈ [0, π]` with `cos θ = Δ_m/R_nm`.
pub fn mixing_angle(n: usize, params: &JcmParams) -> Result<f64> {
    params.validate()?;
    let coupling = 2.0 * params.lambda_m * ladder_factor(n, params.m).sqrt();
    let d = params.delta_m();
    if coupling == 0.0 && d == 0.0 {
        return Err(Error::Degenerate(format!(
            "Δ_m = λ_m = 0: the n = {n} doublet has no preferred basis"
        )));
    }
    Ok(coupling.atan2(d))
}

#[derive(Debug, Clone)]
pub struct DressedState {
    pub n: usize,
    pub branch: Branch,
    pub theta: f64,
    pub energy: f64,
    pub vector: StateVector,
}

/// Both dressed states of the n-th doublet of `H_m(φ)`.
///
/// Gauge: the `⟨2,n|` amplitude of the plus state and the `⟨1,n+m|`
/// amplitude of the minus state are real and positive.
pub fn dressed_pair(
    space: SpaceSpec,
    n: usize,
    params: &JcmParams,
) -> Result<(DressedState, DressedState)> {
    let m = params.m as usize;
    if space.atom_levels() != 2 {
        return Err(Error::invalid("dressed states need a two-level atom space"));
    }
    if n + m > space.photon_cutoff() {
        return Err(Error::invalid(format!(
            "n + m = {} exceeds the photon cutoff {}",
            n + m,
            space.photon_cutoff()
        )));
    }
    if params.gamma_decay != 0.0 {
        return Err(Error::invalid(
            "dressed_pair is for the Hermitian model; use complex_mixing_data for Γ > 0",
        ));
    }
    let theta = mixing_angle(n, params)?;
    let half_r = 0.5 * splitting(n, params);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let twist = C64::from_polar(1.0, params.m as f64 * params.phi);
    let up = space.index(EXCITED, n);
    let down = space.index(GROUND, n + m);

    let mut plus = DVector::zeros(space.dim());
    plus[up] = C64::from(c);
    plus[down] = twist.conj() * s;
    let mut minus = DVector::zeros(space.dim());
    minus[down] = C64::from(c);
    minus[up] = -twist * s;

    let build = |branch, energy, v| DressedState {
        n,
        branch,
        theta,
        energy,
        vector: StateVector::from_amplitudes(space, v).expect("dimension matches"),
    };
    Ok((
        build(Branch::Plus, half_r, plus),
        build(Branch::Minus, -half_r, minus),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMixing {
    /// `z = (w² − 4λ²(n+m)!/n!)/(w² + 4λ²(n+m)!/n!)`, the complexified `cos 2θ`.
    pub z: C64,
    /// Set when m > 1: the one-photon substitution is being extrapolated.
    pub extrapolated: bool,
}

/// Complexified `cos 2θ_nm` of the decaying model, with `w = Δ_m − i mΓ/2`.
pub fn complex_mixing_data(n: usize, params: &JcmParams) -> Result<ComplexMixing> {
    params.validate()?;
    let b = 4.0 * params.lambda_m * params.lambda_m * ladder_factor(n, params.m);
    let w = C64::new(params.delta_m(), -(params.m as f64) * params.gamma_decay / 2.0);
    let w2 = w * w;
    let denom = w2 + b;
    let scale = w2.norm() + b;
    if scale == 0.0 || denom.norm() <= 1e-14 * scale {
        return Err(Error::Degenerate(format!(
            "w² = −4λ²(n+m)!/n! (exceptional point) at n = {n}"
        )));
    }
    Ok(ComplexMixing {
        z: (w2 - b) / denom,
        extrapolated: params.m > 1,
    })
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unit eigenvectors (arbitrary phase).
pub fn hermitian_eigen(matrix: &DMatrix<C64>) -> Result<(Vec<f64>, Vec<DVector<C64>>)> {
    let d = matrix.nrows();
    if d != matrix.ncols() {
        return Err(Error::invalid("eigenproblem needs a square matrix"));
    }
    match d {
        0 => Ok((vec![], vec![])),
        1 => Ok((vec![matrix[(0, 0)].re], vec![DVector::from_element(1, C64::from(1.0))])),
        2 => Ok(hermitian_eigen_2x2(matrix)),
        _ => {
            let eig = nalgebra::SymmetricEigen::new(matrix.clone());
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vecs = order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect();
            Ok((vals, vecs))
        }
    }
}

fn hermitian_eigen_2x2(h: &DMatrix<C64>) -> (Vec<f64>, Vec<DVector<C64>>) {
    let (a, d, b) = (h[(0, 0)].re, h[(1, 1)].re, h[(0, 1)]);
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = half.hypot(b.norm());
    if r == 0.0 {
        let e0 = DVector::from_vec(vec![C64::from(1.0), C64::from(0.0)]);
        let e1 = DVector::from_vec(vec![C64::from(0.0), C64::from(1.0)]);
        return (vec![mean, mean], vec![e0, e1]);
    }
    // pick the row of (H − λ) that avoids cancellation
    let (upper, lower) = if half >= 0.0 {
        (
            DVector::from_vec(vec![C64::from(r + half), b.conj()]),
            DVector::from_vec(vec![b, C64::from(-(r + half))]),
        )
    } else {
        (
            DVector::from_vec(vec![b, C64::from(r - half)]),
            DVector::from_vec(vec![C64::from(half - r), b.conj()]),
        )
    };
    let unit = |v: DVector<C64>| {
        let n = v.norm();
        v / C64::from(n)
    };
    (vec![mean - r, mean + r], vec![unit(lower), unit(upper)])
}

/// A right/left eigenpair of a general complex matrix with `⟨L|R⟩ = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    pub right: DVector<C64>,
    pub left: DVector<C64>,
}

/// Eigenpairs of a general (possibly non-Hermitian) complex matrix, ordered by
/// ascending real part, ties broken by ascending imaginary part. Left and
/// right vectors are biorthonormalized, `left.dotc(right) == 1`, and the right
/// vectors have unit norm.
pub fn general_eigen(matrix: &DMatrix<C64>) -> Result<Vec<EigenPair>> {
    let d = matrix.nrows();
    if d != matrix.ncols() {
        return Err(Error::invalid("eigenproblem needs a square matrix"));
    }
    if d == 1 {
        let one = DVector::from_element(1, C64::from(1.0));
        return Ok(vec![EigenPair {
            value: matrix[(0, 0)],
            right: one.clone(),
            left: one,
        }]);
    }
    let values = matrix
        .eigenvalues()
        .ok_or_else(|| Error::Eigen("complex Schur decomposition did not converge".into()))?;
    let mut values: Vec<C64> = values.iter().copied().collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let adjoint = matrix.adjoint();
    let scale = 1.0 + crate::hilbert::inf_norm(matrix);
    values
        .into_iter()
        .map(|value| {
            let right = null_vector(matrix, value, scale)?;
            let left = null_vector(&adjoint, value.conj(), scale)?;
            let overlap = left.dotc(&right);
            if overlap.norm() < 1e-12 {
                return Err(Error::Eigen(format!(
                    "left/right eigenvectors orthogonal at eigenvalue {value} (exceptional point)"
                )));
            }
            Ok(EigenPair {
                value,
                left: left / overlap.conj(),
                right,
            })
        })
        .collect()
}

/// Unit vector spanning the near-null space of `A − λ`, by shifted inverse iteration.
fn null_vector(a: &DMatrix<C64>, lambda: C64, scale: f64) -> Result<DVector<C64>> {
    let d = a.nrows();
    let shift = lambda + C64::new(1e-11 * scale, 1e-11 * scale);
    let shifted = a - DMatrix::identity(d, d) * shift;
    let lu = shifted.lu();
    let mut v = DVector::from_fn(d, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64));
    v /= C64::from(v.norm());
    for _ in 0..3 {
        let next = lu
            .solve(&v)
            .ok_or_else(|| Error::Eigen("singular inverse-iteration step".into()))?;
        let n = next.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Eigen("inverse iteration diverged".into()));
        }
        v = next / C64::from(n);
    }
    Ok(v)
}

/// Connected components of the coupling graph of `matrix` (entries with
/// modulus above `tol` link their row and column), sorted by smallest index.
pub fn coupling_blocks(matrix: &DMatrix<C64>, tol: f64) -> Vec<Vec<usize>> {
    let d = matrix.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..d {
        for j in 0..d {
            if i != j && matrix[(i, j)].norm() > tol {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; d];
    for i in 0..d {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// Union of the coupling blocks containing any of `seeds`, ascending.
pub fn sector_indices(matrix: &DMatrix<C64>, seeds: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = coupling_blocks(matrix, 0.0)
        .into_iter()
        .filter(|b| b.iter().any(|i| seeds.contains(i)))
        .flatten()
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_jcm_frame;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn p(m: u32, delta: f64, lambda: f64) -> JcmParams {
        JcmParams::with_detuning(m, delta, lambda).unwrap()
    }

    #[test]
    fn resonance_gives_right_angle() {
        for m in 1..=4 {
            assert!((mixing_angle(0, &p(m, 0.0, 0.7)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        }
    }

    #[test]
    fn pi_over_six_condition() {
        let lambda = 0.37;
        let theta = mixing_angle(0, &p(1, 2.0 * 3f64.sqrt() * lambda, lambda)).unwrap();
        assert!((theta - FRAC_PI_6).abs() < 1e-15);
        assert!(((2.0 * theta).cos() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_photon_angle_matches_block_diagonalization() {
        let params = p(2, 1.0, 1.0);
        let theta = mixing_angle(1, &params).unwrap();
        assert!((theta - (0.2f64).acos()).abs() < 1e-15);
        assert!((theta - 1.369438406004566).abs() < 1e-12);
        let space = SpaceSpec::two_level(3).unwrap();
        let h = build_jcm_frame(space, &params).unwrap();
        let block = h.restrict(&[space.index(EXCITED, 1), space.index(GROUND, 3)]);
        let (_, vecs) = hermitian_eigen(&block).unwrap();
        // |⟨2,1|Ψ+⟩|² = cos²(θ/2) = (1 + cos θ)/2
        assert!((vecs[1][0].norm_sqr() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn degenerate_angle_rejected() {
        assert!(matches!(
            mixing_angle(0, &p(1, 0.0, 0.0)),
            Err(Error::Degenerate(_))
        ));
        assert!(mixing_angle(0, &p(1, -0.5, 0.0)).is_ok());
    }

    #[test]
    fn angle_monotone_in_detuning() {
        let mut last = f64::INFINITY;
        for k in 0..200 {
            let d = -10.0 + 0.1 * k as f64;
            let t = mixing_angle(2, &p(3, d, 0.8)).unwrap();
            assert!(t < last);
            last = t;
        }
    }

    #[test]
    fn weak_coupling_plus_state_is_bare() {
        let space = SpaceSpec::two_level(2).unwrap();
        let (plus, minus) = dressed_pair(space, 1, &p(1, 1.0, 1e-4)).unwrap();
        assert!(plus.vector.amplitude(EXCITED, 1).norm_sqr() >= 1.0 - 1e-7);
        assert!(minus.vector.amplitude(GROUND, 2).norm_sqr() >= 1.0 - 1e-7);
    }

    #[test]
    fn vacuum_rabi_energies() {
        let space = SpaceSpec::two_level(1).unwrap();
        let (plus, minus) = dressed_pair(space, 0, &p(1, 0.0, 0.9)).unwrap();
        assert!((plus.energy - 0.9).abs() < 1e-15);
        assert!((minus.energy + 0.9).abs() < 1e-15);
    }

    #[test]
    fn three_photon_energy() {
        let space = SpaceSpec::two_level(3).unwrap();
        let params = p(3, 1.0, 1.0);
        let (plus, _) = dressed_pair(space, 0, &params).unwrap();
        assert!((plus.energy - 2.5).abs() < 1e-15);
        let (vals, _) = hermitian_eigen(build_jcm_frame(space, &params).unwrap().matrix()).unwrap();
        assert!((vals.last().unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn dressed_pair_cutoff_checked() {
        let space = SpaceSpec::two_level(2).unwrap();
        assert!(dressed_pair(space, 1, &p(2, 0.1, 1.0)).is_err());
        assert!(dressed_pair(space, 0, &p(2, 0.1, 1.0)).is_ok());
    }

    #[test]
    fn dressed_residuals_and_orthogonality() {
        for m in 1..=3u32 {
            let space = SpaceSpec::two_level(3 + m as usize).unwrap();
            for &phi in &[0.0, 1.3] {
                let params = p(m, -0.7, 1.1).with_phi(phi);
                let h = crate::models::build_jcm_phi(space, &params).unwrap();
                let hnorm = h.matrix().norm();
                for n in 0..=3 {
                    let (a, b) = dressed_pair(space, n, &params).unwrap();
                    for s in [&a, &b] {
                        let r = h.apply(&s.vector).amplitudes() - s.vector.amplitudes() * C64::from(s.energy);
                        assert!(r.norm() <= 1e-10 * hnorm);
                        assert!(s.vector.is_normalized(1e-12));
                    }
                    assert!(a.vector.inner(&b.vector).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn complex_mixing_reduces_to_cos_two_theta() {
        let params = p(1, 0.8, 0.5);
        let z = complex_mixing_data(0, &params).unwrap();
        let theta = mixing_angle(0, &params).unwrap();
        assert!((z.z - C64::from((2.0 * theta).cos())).norm() < 1e-15);
        assert!(!z.extrapolated);
    }

    #[test]
    fn complex_mixing_on_resonance() {
        let (lambda, gamma) = (1.0, 0.6);
        let params = p(1, 0.0, lambda).with_gamma(gamma).unwrap();
        let z = complex_mixing_data(0, &params).unwrap().z;
        let g2 = gamma * gamma / 4.0;
        let expect = -(4.0 * lambda * lambda + g2) / (4.0 * lambda * lambda - g2);
        assert!((z.re - expect).abs() < 1e-14 && z.im.abs() < 1e-15);
        assert!(z.re < -1.0);
    }

    #[test]
    fn complex_mixing_exceptional_point() {
        // w = −iΓ/2 with Γ = 4λ makes w² + 4λ² vanish
        let params = p(1, 0.0, 0.5).with_gamma(2.0).unwrap();
        assert!(matches!(complex_mixing_data(0, &params), Err(Error::Degenerate(_))));
    }

    #[test]
    fn complex_mixing_continuous_from_zero_decay() {
        let base = p(1, 1.3, 0.4);
        let mut last = complex_mixing_data(0, &base).unwrap().z;
        for k in 1..=400 {
            let z = complex_mixing_data(0, &base.with_gamma(k as f64 * 1e-3).unwrap()).unwrap().z;
            assert!((z - last).norm() < 1e-2);
            last = z;
        }
    }

    #[test]
    fn general_eigen_biorthonormal() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, -0.2), C64::new(0.3, 0.1), C64::new(0.0, 0.0),
                C64::new(0.5, 0.0), C64::new(-0.4, -0.5), C64::new(0.2, 0.0),
                C64::new(0.0, 0.1), C64::new(0.7, 0.0), C64::new(0.2, -0.1),
            ],
        );
        let pairs = general_eigen(&m).unwrap();
        for (i, a) in pairs.iter().enumerate() {
            assert!((&m * &a.right - &a.right * a.value).norm() < 1e-10);
            assert!((m.adjoint() * &a.left - &a.left * a.value.conj()).norm() < 1e-9);
            for (j, b) in pairs.iter().enumerate() {
                let o = a.left.dotc(&b.right);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((o - C64::from(expect)).norm() < 1e-9);
            }
        }
        assert!(pairs.windows(2).all(|w| w[0].value.re <= w[1].value.re));
    }

    #[test]
    fn blocks_of_jcm_frame() {
        let space = SpaceSpec::two_level(3).unwrap();
        let h = build_jcm_frame(space, &p(1, 0.2, 1.0)).unwrap();
        let blocks = coupling_blocks(h.matrix(), 0.0);
        // |1,0⟩ alone, |2,n⟩–|1,n+1⟩ pairs, and |2,3⟩ alone at the cutoff
        assert_eq!(blocks.len(), 5);
        assert!(blocks.contains(&vec![space.index(GROUND, 1), space.index(EXCITED, 0)]));
        let sector = sector_indices(h.matrix(), &[space.index(EXCITED, 2)]);
        assert_eq!(sector, vec![space.index(GROUND, 3), space.index(EXCITED, 2)]);
    }
}
