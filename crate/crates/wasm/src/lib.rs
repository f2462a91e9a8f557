//! Browser bindings: vacuum-phase curves, Ramsey fringes and single Wilson
//! loops. Every export returns a flat row-major `Float64Array`.

use vacuum_berry::geometry::{berry_analytic, berry_vacuum, berry_wilson};
use vacuum_berry::models::JcmParams;
use vacuum_berry::ramsey::fringe_scan;
use vacuum_berry::spectra::Branch;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request.
const MAX_POINTS: usize = 4001;

fn check_points(points: usize) -> Result<(), String> {
    if (2..=MAX_POINTS).contains(&points) {
        Ok(())
    } else {
        Err(format!("points must lie in 2..={MAX_POINTS}"))
    }
}

/// Rows `[Δ/λ, γ_01, …, γ_0m_max]`.
pub fn vacuum_curves(m_max: u32, dol_min: f64, dol_max: f64, points: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    if !(1..=8).contains(&m_max) || !(dol_min < dol_max) {
        return Err("need 1 <= m_max <= 8 and dol_min < dol_max".into());
    }
    let mut out = Vec::with_capacity(points * (m_max as usize + 1));
    for k in 0..points {
        let d = dol_min + (dol_max - dol_min) * k as f64 / (points - 1) as f64;
        out.push(d);
        for m in 1..=m_max {
            let p = JcmParams::with_detuning(m, d, 1.0).map_err(|e| e.to_string())?;
            out.push(berry_vacuum(&p).map_err(|e| e.to_string())?.gamma);
        }
    }
    Ok(out)
}

/// Rows `[ξ, P₂ without phase, P₂ with γ_01, P₂ with the decaying-cavity
/// phase]` over ξ ∈ [0, 2π], for a one-photon cavity with the given `Δ/λ`
/// and `Γ/λ`.
pub fn fringes(delta_over_lambda: f64, gamma_over_lambda: f64, points: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    let p = JcmParams::with_detuning(1, delta_over_lambda, 1.0)
        .and_then(|p| p.with_gamma(gamma_over_lambda))
        .map_err(|e| e.to_string())?;
    let f = fringe_scan(&p, 0.0, std::f64::consts::TAU, points).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(4 * points);
    for k in 0..points {
        out.extend([f.xi[k], f.no_berry[k], f.berry[k], f.dissipative[k]]);
    }
    Ok(out)
}

/// `[γ_analytic, γ_wilson, mesh used, largest step increment]`.
pub fn wilson_point(m: u32, n: usize, plus: bool, delta_over_lambda: f64, mesh: usize) -> Result<Vec<f64>, String> {
    if !(4..=200_000).contains(&mesh) {
        return Err("mesh must lie in 4..=200000".into());
    }
    let branch = if plus { Branch::Plus } else { Branch::Minus };
    let p = JcmParams::with_detuning(m, delta_over_lambda, 1.0).map_err(|e| e.to_string())?;
    let exact = berry_analytic(n, branch, &p).map_err(|e| e.to_string())?;
    let w = berry_wilson(n, branch, &p, mesh).map_err(|e| e.to_string())?;
    Ok(vec![
        exact.gamma,
        w.gamma,
        w.mesh.unwrap_or(mesh) as f64,
        w.max_increment.unwrap_or(0.0),
    ])
}

#[wasm_bindgen(js_name = vacuumCurves)]
pub fn vacuum_curves_js(m_max: u32, dol_min: f64, dol_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    vacuum_curves(m_max, dol_min, dol_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fringes)]
pub fn fringes_js(delta_over_lambda: f64, gamma_over_lambda: f64, points: usize) -> Result<Vec<f64>, JsError> {
    fringes(delta_over_lambda, gamma_over_lambda, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = wilsonPoint)]
pub fn wilson_point_js(
    m: u32,
    n: usize,
    plus: bool,
    delta_over_lambda: f64,
    mesh: usize,
) -> Result<Vec<f64>, JsError> {
    wilson_point(m, n, plus, delta_over_lambda, mesh).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn curves_layout() {
        let v = vacuum_curves(3, -1.0, 1.0, 3).unwrap();
        assert_eq!(v.len(), 12);
        assert_eq!(&v[4..8], &[0.0, PI, 2.0 * PI, 3.0 * PI]);
        assert!(vacuum_curves(0, -1.0, 1.0, 3).is_err());
        assert!(vacuum_curves(1, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn fringe_rows() {
        let v = fringes(2.0 * 3f64.sqrt(), 0.0, 5).unwrap();
        assert_eq!(v.len(), 20);
        // Γ = 0: the decaying-cavity curve equals the closed one
        for row in v.chunks(4) {
            assert!((row[2] - row[3]).abs() < 1e-12);
        }
        assert!((v[2] - 0.146_446_609_406_726_2).abs() < 1e-12);
    }

    #[test]
    fn wilson_agrees() {
        let v = wilson_point(1, 0, true, 1.0, 20_000).unwrap();
        assert!((v[0] - v[1]).abs() < 1e-6);
        assert!(wilson_point(1, 0, true, 1.0, 2).is_err());
    }
}
