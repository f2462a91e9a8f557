//! One-dimensional parameter sweeps and the order-preserving map they run on.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{berry_analytic, berry_dissipative_analytic, berry_vacuum};
use crate::models::JcmParams;
use crate::presets::{khz, GammaUnits};
use crate::ramsey::{detection_probability, fringe_scan, RamseyConfig};
use crate::spectra::{splitting, Branch};
use crate::table::CsvTable;

/// Map `f` over `items`, keeping input order. Runs on the rayon pool when the
/// `parallel` feature is on.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    DeltaOverLambda,
    /// Γ in kHz, read with the block's [`GammaUnits`].
    GammaDecay,
    Xi,
    M,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::DeltaOverLambda => "delta_over_lambda",
            SweepVariable::GammaDecay => "gamma_decay",
            SweepVariable::Xi => "xi",
            SweepVariable::M => "m",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            SweepVariable::DeltaOverLambda => &[
                "delta_over_lambda",
                "gamma_vacuum",
                "solid_angle",
                "gamma_plus",
                "gamma_minus",
                "gamma_dissipative",
            ],
            SweepVariable::GammaDecay => &[
                "gamma_khz",
                "gamma_over_splitting",
                "gamma_dissipative",
                "gamma_shift",
                "p2_dissipative",
            ],
            SweepVariable::Xi => &["xi", "p2_no_berry", "p2_berry", "p2_dissipative"],
            SweepVariable::M => &["m", "gamma_vacuum", "solid_angle", "gamma_dissipative"],
        }
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta_over_lambda" | "delta-over-lambda" => Ok(SweepVariable::DeltaOverLambda),
            "gamma_decay" | "gamma-decay" => Ok(SweepVariable::GammaDecay),
            "xi" => Ok(SweepVariable::Xi),
            "m" => Ok(SweepVariable::M),
            other => Err(Error::invalid(format!(
                "unknown sweep variable '{other}' (delta_over_lambda|gamma_decay|xi|m)"
            ))),
        }
    }
}

/// Values held fixed while one of them is swept. The one-photon defaults
/// reproduce the cavity preset: `θ = π/6`, `Γ = 1 kHz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepFixed {
    pub m: u32,
    /// λ/2π in kHz.
    pub lambda_khz: f64,
    pub delta_over_lambda: f64,
    pub gamma_khz: f64,
    pub gamma_units: GammaUnits,
    /// n for the doublet phases.
    pub n: usize,
    pub xi: f64,
}

impl Default for SweepFixed {
    fn default() -> Self {
        Self {
            m: 1,
            lambda_khz: 50.0 / 3.0,
            delta_over_lambda: 2.0 * 3f64.sqrt(),
            gamma_khz: 1.0,
            gamma_units: GammaUnits::Ordinary,
            n: 0,
            xi: 0.0,
        }
    }
}

impl SweepFixed {
    pub fn params(&self) -> Result<JcmParams> {
        let lambda = khz(self.lambda_khz);
        JcmParams::with_detuning(self.m, self.delta_over_lambda * lambda, lambda)?
            .with_gamma(self.gamma_units.to_rad_per_s(self.gamma_khz))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub fixed: SweepFixed,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid("sweep needs min < max (finite) and points >= 2"));
        }
        if self.variable == SweepVariable::M {
            let whole = self.min.fract() == 0.0 && self.max.fract() == 0.0 && self.min >= 1.0;
            if !whole || self.points != (self.max - self.min) as usize + 1 {
                return Err(Error::invalid(
                    "an m sweep runs over integers >= 1 with points = max - min + 1",
                ));
            }
        }
        if self.variable == SweepVariable::GammaDecay && self.min < 0.0 {
            return Err(Error::invalid("decay rates must be >= 0"));
        }
        Ok(())
    }

    /// Uniform grid, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        let span = self.max - self.min;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.max
                } else {
                    self.min + span * k as f64 / (self.points - 1) as f64
                }
            })
            .collect()
    }
}

fn sweep_row(spec: &SweepSpec, x: f64) -> Result<Vec<f64>> {
    let mut fixed = spec.fixed;
    match spec.variable {
        SweepVariable::DeltaOverLambda => fixed.delta_over_lambda = x,
        SweepVariable::GammaDecay => fixed.gamma_khz = x,
        SweepVariable::Xi => fixed.xi = x,
        SweepVariable::M => fixed.m = x as u32,
    }
    let p = fixed.params()?;
    let closed = p.with_gamma(0.0)?;
    Ok(match spec.variable {
        SweepVariable::DeltaOverLambda => {
            let v = berry_vacuum(&closed)?;
            vec![
                x,
                v.gamma,
                v.solid_angle.unwrap_or(f64::NAN),
                berry_analytic(fixed.n, Branch::Plus, &closed)?.gamma,
                berry_analytic(fixed.n, Branch::Minus, &closed)?.gamma,
                berry_dissipative_analytic(&p)?.gamma,
            ]
        }
        SweepVariable::GammaDecay => {
            let g0 = berry_vacuum(&closed)?.gamma;
            let gd = berry_dissipative_analytic(&p)?.gamma;
            vec![
                x,
                p.gamma_decay / splitting(0, &closed),
                gd,
                gd - g0,
                detection_probability(&RamseyConfig::balanced(fixed.xi, gd)),
            ]
        }
        SweepVariable::Xi => {
            let g0 = berry_vacuum(&closed)?.gamma;
            let gd = berry_dissipative_analytic(&p)?.gamma;
            let p2 = |g| detection_probability(&RamseyConfig::balanced(x, g));
            vec![x, p2(0.0), p2(g0), p2(gd)]
        }
        SweepVariable::M => {
            let v = berry_vacuum(&closed)?;
            vec![
                x,
                v.gamma,
                v.solid_angle.unwrap_or(f64::NAN),
                berry_dissipative_analytic(&p)?.gamma,
            ]
        }
    })
}

/// Evaluate every grid point; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<CsvTable> {
    spec.validate()?;
    let rows = par_map(&spec.values(), |&x| sweep_row(spec, x));
    let mut table = CsvTable::new(spec.variable.columns().iter().copied());
    for row in rows {
        table.push_row(row?)?;
    }
    if spec.fixed.m > 1 || (spec.variable == SweepVariable::M && spec.max > 1.0) {
        table.add_provenance("note", "gamma_dissipative for m > 1 uses the extrapolated m*Gamma/2 substitution");
    }
    Ok(table)
}

/// `Δ/λ` at which the vacuum phase equals `target` (in `(0, mπ]`), positive root.
pub fn detuning_for_vacuum_phase(m: u32, target: f64) -> Result<f64> {
    let mf = m as f64;
    if !(target > 0.0 && target <= mf * PI) {
        return Err(Error::invalid("target phase must lie in (0, m*pi]"));
    }
    // 1 − cos2θ = 2t/(mπ), cos2θ = (d² − 4)/(d² + 4) with d = Δ/λ
    let c = 1.0 - 2.0 * target / (mf * PI);
    Ok((4.0 * (1.0 + c) / (1.0 - c)).sqrt())
}

/// Vacuum phase against `Δ/λ` for each `m` in `m_list`: one column per m.
pub fn fig1_table(m_list: &[u32], dol_min: f64, dol_max: f64, points: usize) -> Result<CsvTable> {
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::invalid("m list must be non-empty with every m >= 1"));
    }
    let grid = SweepSpec {
        variable: SweepVariable::DeltaOverLambda,
        min: dol_min,
        max: dol_max,
        points,
        fixed: SweepFixed::default(),
    };
    grid.validate()?;
    let rows = par_map(&grid.values(), |&d| -> Result<Vec<f64>> {
        let mut row = vec![d];
        for &m in m_list {
            row.push(berry_vacuum(&JcmParams::with_detuning(m, d, 1.0)?)?.gamma);
        }
        Ok(row)
    });
    let mut names = vec!["delta_over_lambda".to_string()];
    names.extend(m_list.iter().map(|m| format!("gamma_0{m}")));
    let mut table = CsvTable::new(names);
    for row in rows {
        table.push_row(row?)?;
    }
    Ok(table)
}

/// The three Ramsey fringes of a cavity (`xi`, `p2_no_berry`, `p2_berry`,
/// `p2_dissipative`).
pub fn fig4_table(params: &JcmParams, xi_min: f64, xi_max: f64, points: usize) -> Result<CsvTable> {
    let f = fringe_scan(params, xi_min, xi_max, points)?;
    let mut table = CsvTable::new(["xi", "p2_no_berry", "p2_berry", "p2_dissipative"])
        .with_provenance("gamma", format!("{:.16e}", f.gamma))
        .with_provenance("gamma_dissipative", format!("{:.16e}", f.gamma_dissipative));
    for k in 0..f.xi.len() {
        table.push_row(vec![f.xi[k], f.no_berry[k], f.berry[k], f.dissipative[k]])?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(variable: SweepVariable, min: f64, max: f64, points: usize) -> SweepSpec {
        SweepSpec {
            variable,
            min,
            max,
            points,
            fixed: SweepFixed::default(),
        }
    }

    #[test]
    fn grid_hits_endpoints() {
        let v = spec(SweepVariable::Xi, -1.0, 0.3, 7).values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], -1.0);
        assert_eq!(v[6], 0.3);
    }

    #[test]
    fn invalid_specs() {
        assert!(spec(SweepVariable::Xi, 1.0, 1.0, 5).validate().is_err());
        assert!(spec(SweepVariable::Xi, 0.0, 1.0, 1).validate().is_err());
        assert!(spec(SweepVariable::M, 1.0, 4.0, 3).validate().is_err());
        assert!(spec(SweepVariable::M, 1.0, 4.0, 4).validate().is_ok());
        assert!(spec(SweepVariable::GammaDecay, -1.0, 4.0, 4).validate().is_err());
        assert!("theta".parse::<SweepVariable>().is_err());
    }

    #[test]
    fn preset_defaults_give_quarter_pi() {
        let t = run_sweep(&spec(SweepVariable::GammaDecay, 0.0, 1.0, 2)).unwrap();
        let g = t.column("gamma_dissipative").unwrap();
        assert!((g[0] - PI / 4.0).abs() < 1e-12);
        assert!(g[1] < g[0]);
    }

    #[test]
    fn m_sweep_is_ordered() {
        let mut s = spec(SweepVariable::M, 1.0, 4.0, 4);
        s.fixed.delta_over_lambda = 0.0;
        let t = run_sweep(&s).unwrap();
        let g = t.column("gamma_vacuum").unwrap();
        for (k, v) in g.iter().enumerate() {
            assert!((v - (k + 1) as f64 * PI).abs() < 1e-12);
        }
        assert!(t.provenance().iter().any(|(k, _)| k == "note"));
    }

    #[test]
    fn fig1_anchor_row() {
        let t = fig1_table(&[1, 2, 3, 4], -10.0, 10.0, 41).unwrap();
        assert_eq!(t.len(), 41);
        assert_eq!(t.rows()[20], vec![0.0, PI, 2.0 * PI, 3.0 * PI, 4.0 * PI]);
        assert!(fig1_table(&[0], -1.0, 1.0, 3).is_err());
    }

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<usize> = (0..1000).collect();
        assert_eq!(par_map(&items, |&k| k * 2), items.iter().map(|k| k * 2).collect::<Vec<_>>());
    }

    #[test]
    fn detuning_inverse() {
        let d = detuning_for_vacuum_phase(1, PI / 4.0).unwrap();
        assert!((d - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        let p = JcmParams::with_detuning(1, d, 1.0).unwrap();
        assert!((berry_vacuum(&p).unwrap().gamma - PI / 4.0).abs() < 1e-12);
    }
}
