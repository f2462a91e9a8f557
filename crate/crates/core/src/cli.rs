//! Command-line front end: figure data, single-point phases, Ramsey read-out,
//! Raman validation, sweeps and the check suites.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::geometry::{
    berry_adiabatic, berry_analytic, berry_dissipative_analytic, berry_vacuum, berry_wilson,
    BerryResult,
};
use crate::hilbert::{tensor_basis_state, SpaceSpec, EXCITED, GROUND};
use crate::models::{EffectiveForm, JcmParams, RamanParams};
use crate::presets::{khz, preset, CavityPreset, GammaUnits};
use crate::raman::{required_steps, validate_reduction};
use crate::ramsey::{
    cavity_passage_exact, ramsey_coefficients, ramsey_pulse, ramsey_state_after_r1, AtomState,
    GammaMode, RamseyConfig,
};
use crate::spectra::Branch;
use crate::sweep::{fig1_table, fig4_table, run_sweep, SweepFixed, SweepSpec, SweepVariable};
use crate::table::{unix_timestamp, write_output, CsvTable};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

fn parse_with<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_form(s: &str) -> std::result::Result<EffectiveForm, String> {
    match s {
        "second-order" => Ok(EffectiveForm::SecondOrder),
        "printed" => Ok(EffectiveForm::Printed),
        other => Err(format!("unknown effective form '{other}' (second-order|printed)")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "vacuum-berry", version, about = "Vacuum-induced Berry phases in m-photon Jaynes-Cummings models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Io {
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file with the same keys as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CavityArgs {
    #[arg(long, default_value = "paper-cavity")]
    pub preset: String,
    /// How `--gamma-khz` (and the preset decay) is read: ordinary|angular.
    #[arg(long, default_value = "ordinary", value_parser = parse_with::<GammaUnits>)]
    pub gamma_units: GammaUnits,
    /// Override the preset cavity decay, in kHz.
    #[arg(long)]
    pub gamma_khz: Option<f64>,
}

impl CavityArgs {
    fn resolve(&self) -> Result<CavityPreset> {
        let mut p = preset(&self.preset, self.gamma_units)?;
        if let Some(g) = self.gamma_khz {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid("--gamma-khz must be finite and >= 0"));
            }
            p.gamma_decay = self.gamma_units.to_rad_per_s(g);
        }
        Ok(p)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vacuum phase against detuning for several m.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Fig1 {
        /// Comma-separated photon numbers per transition.
        #[arg(long, default_value = "1,2,3,4")]
        m_list: String,
        #[arg(long, default_value_t = -10.0)]
        delta_min: f64,
        #[arg(long, default_value_t = 10.0)]
        delta_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[command(flatten)]
        io: Io,
    },
    /// Ramsey fringes without, with, and with the decaying-cavity phase.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Fig4 {
        #[command(flatten)]
        cavity: CavityArgs,
        #[arg(long, default_value_t = 0.0)]
        xi_min: f64,
        #[arg(long, default_value_t = TAU)]
        xi_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[command(flatten)]
        io: Io,
    },
    /// Berry phase of one dressed state (or of the vacuum input).
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Berry {
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value = "plus", value_parser = parse_with::<Branch>)]
        branch: Branch,
        #[arg(long, default_value_t = 0.0)]
        delta_over_lambda: f64,
        /// analytic|wilson|adiabatic|vacuum|dissipative
        #[arg(long, default_value = "analytic")]
        method: String,
        /// Wilson-loop mesh (refined automatically if too coarse).
        #[arg(long, default_value_t = 20_000)]
        mesh: usize,
        /// λT of the adiabatic loop.
        #[arg(long, default_value_t = 500.0)]
        lambda_t: f64,
        /// Time steps of the adiabatic loop (default 80 per unit λT).
        #[arg(long)]
        steps: Option<usize>,
        /// Γ/λ for the dissipative method.
        #[arg(long, default_value_t = 0.0)]
        gamma_over_lambda: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Single detection probability after both Ramsey zones.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Ramsey {
        #[arg(long, default_value_t = FRAC_PI_2)]
        area1: f64,
        #[arg(long, default_value_t = FRAC_PI_2)]
        area2: f64,
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
        /// Explicit phase; otherwise taken from the cavity.
        #[arg(long)]
        gamma: Option<f64>,
        /// ideal|dissipative|exact-passage
        #[arg(long, default_value = "ideal", value_parser = parse_with::<GammaMode>)]
        gamma_mode: GammaMode,
        #[command(flatten)]
        cavity: CavityArgs,
        /// λ₁T of the exact passage.
        #[arg(long, default_value_t = 500.0 * PI)]
        lambda_t: f64,
        #[arg(long, default_value_t = 240_000)]
        steps: usize,
        #[command(flatten)]
        io: Io,
    },
    /// Full three-level run against the effective two-level model.
    #[command(name = "raman-validate", args_override_self = true, allow_negative_numbers = true)]
    RamanValidate {
        #[arg(long, default_value = "paper-cavity")]
        preset: String,
        #[arg(long)]
        g_khz: Option<f64>,
        #[arg(long)]
        omega0_khz: Option<f64>,
        #[arg(long)]
        delta_over_omega0: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long, default_value_t = 0.6)]
        t_final_ms: f64,
        /// Default: twice the integrator's stability minimum.
        #[arg(long)]
        steps: Option<usize>,
        /// second-order|printed
        #[arg(long, default_value = "second-order", value_parser = parse_form)]
        form: EffectiveForm,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        /// Initial level: excited|ground.
        #[arg(long, default_value = "excited")]
        level: String,
        #[arg(long, default_value_t = 0)]
        photons: usize,
        /// stroboscopic|history
        #[arg(long, default_value = "stroboscopic")]
        samples: String,
        #[command(flatten)]
        io: Io,
    },
    /// One-dimensional parameter sweep.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sweep {
        /// delta_over_lambda|gamma_decay|xi|m
        #[arg(long, value_parser = parse_with::<SweepVariable>)]
        variable: SweepVariable,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 50.0 / 3.0)]
        lambda_khz: f64,
        #[arg(long, default_value_t = 2.0 * 3f64.sqrt())]
        delta_over_lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma_khz: f64,
        #[arg(long, default_value = "ordinary", value_parser = parse_with::<GammaUnits>)]
        gamma_units: GammaUnits,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Cross-oracle checks; exit status 1 if any hard check fails.
    #[command(args_override_self = true)]
    Verify {
        /// berry|raman|ramsey|dissipative|all
        #[arg(long, default_value = "all", value_parser = parse_with::<Suite>)]
        suite: Suite,
        #[command(flatten)]
        io: Io,
    },
}

/// Parse a `key = value` config file into flag tokens.
pub fn config_tokens(text: &str, path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::invalid(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                k + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::invalid(format!("{}:{}: bad key", path.display(), k + 1)));
        }
        out.push(format!("--{key}={}", value.trim()));
    }
    Ok(out)
}

/// Splice config-file settings in front of the command-line flags, so that
/// the flags override them.
pub fn expand_config(args: &[String]) -> Result<Vec<String>> {
    let Some(sub) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args.to_vec());
    };
    let mut path = None;
    let mut i = sub + 1;
    while i < args.len() {
        if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if args[i] == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
            i += 1;
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(args.to_vec());
    };
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut out = args[..=sub].to_vec();
    out.extend(config_tokens(&text, &path)?);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

/// Run with the given argv (program name first) and return the exit status.
pub fn run(args: Vec<String>) -> i32 {
    let expanded = match expand_config(&args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&expanded) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let command_line = args.iter().skip(1).cloned().collect::<Vec<_>>().join(" ");
    match execute(cli.command, &command_line) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_from_env() -> i32 {
    run(std::env::args().collect())
}

fn emit(table: CsvTable, command_line: &str, io: &Io) -> Result<()> {
    let mut table = table;
    table.add_provenance("command", format!("vacuum-berry {command_line}"));
    let text = table.render(Some(&unix_timestamp()));
    write_output(&text, io.out.as_deref())
}

fn branch_value(b: Branch) -> f64 {
    b.sign()
}

fn execute(command: Command, command_line: &str) -> Result<i32> {
    match command {
        Command::Fig1 {
            m_list,
            delta_min,
            delta_max,
            points,
            io,
        } => {
            let ms = m_list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::invalid(format!("bad m in --m-list: '{s}'")))
                })
                .collect::<Result<Vec<u32>>>()?;
            emit(fig1_table(&ms, delta_min, delta_max, points)?, command_line, &io)?;
        }
        Command::Fig4 {
            cavity,
            xi_min,
            xi_max,
            points,
            io,
        } => {
            let c = cavity.resolve()?;
            let table = fig4_table(&c.jcm()?, xi_min, xi_max, points)?.with_provenance("preset", c.name);
            emit(table, command_line, &io)?;
        }
        Command::Berry {
            m,
            n,
            branch,
            delta_over_lambda,
            method,
            mesh,
            lambda_t,
            steps,
            gamma_over_lambda,
            io,
        } => {
            let p = JcmParams::with_detuning(m, delta_over_lambda, 1.0)?;
            let vacuum = matches!(method.as_str(), "vacuum" | "dissipative");
            let reference = if vacuum {
                berry_vacuum(&p)?.gamma
            } else {
                berry_analytic(n, branch, &p)?.gamma
            };
            let r: BerryResult = match method.as_str() {
                "analytic" => berry_analytic(n, branch, &p)?,
                "wilson" => berry_wilson(n, branch, &p, mesh)?,
                "adiabatic" => {
                    if !(lambda_t.is_finite() && lambda_t > 0.0) {
                        return Err(Error::invalid("--lambda-t must be positive"));
                    }
                    let steps = steps.unwrap_or((80.0 * lambda_t).ceil() as usize);
                    berry_adiabatic(n, branch, &p, lambda_t, steps)?
                }
                "vacuum" => berry_vacuum(&p)?,
                "dissipative" => berry_dissipative_analytic(&p.with_gamma(gamma_over_lambda)?)?,
                other => {
                    return Err(Error::invalid(format!(
                        "unknown method '{other}' (analytic|wilson|adiabatic|vacuum|dissipative)"
                    )))
                }
            };
            let mut table = CsvTable::new([
                "m",
                "n",
                "branch",
                "delta_over_lambda",
                "gamma",
                "gamma_analytic",
                "difference",
                "mesh",
            ])
            .with_provenance("method", r.method.to_string());
            table.push_row(vec![
                m as f64,
                if vacuum { 0.0 } else { n as f64 },
                if vacuum { 0.0 } else { branch_value(branch) },
                delta_over_lambda,
                r.gamma,
                reference,
                r.gamma - reference,
                r.mesh.unwrap_or(0) as f64,
            ])?;
            emit(table, command_line, &io)?;
        }
        Command::Ramsey {
            area1,
            area2,
            xi,
            gamma,
            gamma_mode,
            cavity,
            lambda_t,
            steps,
            io,
        } => {
            let c = cavity.resolve()?;
            let jcm = c.jcm()?;
            let closed = jcm.with_gamma(0.0)?;
            let mut table = CsvTable::new(["xi", "gamma", "p1", "p2", "contrast_deficit"])
                .with_provenance("preset", c.name);
            let (g, state, deficit) = match gamma_mode {
                GammaMode::Ideal | GammaMode::Dissipative => {
                    let g = match (gamma, gamma_mode) {
                        (Some(g), _) => g,
                        (None, GammaMode::Ideal) => berry_vacuum(&closed)?.gamma,
                        (None, _) => berry_dissipative_analytic(&jcm)?.gamma,
                    };
                    let cfg = RamseyConfig {
                        pulse_area_1: area1,
                        pulse_area_2: area2,
                        xi,
                        gamma: g,
                        gamma_mode,
                    };
                    cfg.validate()?;
                    let (c1, c2) = ramsey_coefficients(&cfg);
                    (g, AtomState { excited: c2, ground: c1 }, 0.0)
                }
                GammaMode::ExactPassage => {
                    if gamma.is_some() {
                        return Err(Error::invalid("--gamma conflicts with --gamma-mode exact-passage"));
                    }
                    let pass = cavity_passage_exact(&closed, lambda_t / closed.lambda_m, steps)?;
                    table.add_provenance("passage_leakage", format!("{:.6e}", pass.leakage));
                    table.add_provenance("passage_phasor_phase", format!("{:.16e}", pass.phasor_phase));
                    let s = ramsey_state_after_r1(area1);
                    let inside = AtomState {
                        excited: s.excited
                            * crate::hilbert::C64::from_polar(pass.amp_excited.norm(), pass.geometric_phase + xi),
                        ground: s.ground * crate::hilbert::C64::from_polar(pass.amp_ground.norm(), -xi),
                    };
                    (pass.geometric_phase, ramsey_pulse(inside, area2), pass.contrast_deficit)
                }
            };
            table.push_row(vec![xi, g, state.ground.norm_sqr(), state.excited.norm_sqr(), deficit])?;
            emit(table, command_line, &io)?;
        }
        Command::RamanValidate {
            preset: name,
            g_khz,
            omega0_khz,
            delta_over_omega0,
            phi,
            t_final_ms,
            steps,
            form,
            n_max,
            level,
            photons,
            samples,
            io,
        } => {
            let base = preset(&name, GammaUnits::Ordinary)?.raman;
            let omega0 = omega0_khz.map(khz).unwrap_or(base.omega0);
            let g = g_khz.map(khz).unwrap_or(base.g);
            let ratio = delta_over_omega0.unwrap_or(base.delta / base.omega0);
            let params = RamanParams::new(omega0, g, ratio * omega0, phi)?;
            let t_final = t_final_ms * 1e-3;
            let level = match level.as_str() {
                "excited" => EXCITED,
                "ground" => GROUND,
                other => return Err(Error::invalid(format!("unknown level '{other}' (excited|ground)"))),
            };
            let space = SpaceSpec::two_level(n_max)?;
            let psi0 = tensor_basis_state(space, level, photons)?;
            let steps = match steps {
                Some(s) => s,
                None => 2 * required_steps(&params, n_max, t_final)?,
            };
            let r = validate_reduction(&params, &psi0, t_final, steps, form)?;
            let rows: &[(f64, f64)] = match samples.as_str() {
                "stroboscopic" => &r.stroboscopic,
                "history" => &r.fidelity_history,
                other => {
                    return Err(Error::invalid(format!(
                        "unknown samples '{other}' (stroboscopic|history)"
                    )))
                }
            };
            let mut table = CsvTable::new(["t", "fidelity"])
                .with_provenance("preset", name)
                .with_provenance("form", format!("{form:?}"))
                .with_provenance("steps", r.steps.to_string())
                .with_provenance("min_stroboscopic_fidelity", format!("{:.16e}", r.min_stroboscopic_fidelity))
                .with_provenance("final_fidelity", format!("{:.16e}", r.final_fidelity))
                .with_provenance("max_level3_population", format!("{:.16e}", r.max_level3_population))
                .with_provenance("max_norm_drift", format!("{:.3e}", r.max_norm_drift))
                .with_provenance("flagged", r.flagged.to_string());
            for &(t, f) in rows {
                table.push_row(vec![t, f])?;
            }
            if r.flagged {
                eprintln!(
                    "warning: level-3 population reached {:.3} (> {}); elimination is marginal",
                    r.max_level3_population,
                    crate::raman::LEVEL3_FLAG
                );
            }
            emit(table, command_line, &io)?;
        }
        Command::Sweep {
            variable,
            min,
            max,
            points,
            m,
            lambda_khz,
            delta_over_lambda,
            gamma_khz,
            gamma_units,
            n,
            xi,
            io,
        } => {
            let spec = SweepSpec {
                variable,
                min,
                max,
                points,
                fixed: SweepFixed {
                    m,
                    lambda_khz,
                    delta_over_lambda,
                    gamma_khz,
                    gamma_units,
                    n,
                    xi,
                },
            };
            emit(run_sweep(&spec)?, command_line, &io)?;
        }
        Command::Verify { suite, io } => {
            let report = run_suite(suite)?;
            write_output(&report.render(), io.out.as_deref())?;
            for c in report.failures() {
                eprintln!("FAIL {}: value {:.6e}, reference {:.6e}, tolerance {:.3e}", c.name, c.value, c.reference, c.tolerance);
            }
            return Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED });
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{strip_timestamp, CsvTable};

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("vacuum-berry".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    #[test]
    fn fig1_writes_anchor_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let args = argv(&format!("fig1 --points 5 --out {}", a.display()));
        assert_eq!(run(args.clone()), 0);
        let ta = std::fs::read_to_string(&a).unwrap();
        assert_eq!(run(args), 0);
        assert_eq!(strip_timestamp(&ta), strip_timestamp(&std::fs::read_to_string(&a).unwrap()));
        let t = CsvTable::parse(&ta).unwrap();
        assert_eq!(t.rows()[2], vec![0.0, PI, 2.0 * PI, 3.0 * PI, 4.0 * PI]);
    }

    #[test]
    fn config_values_yield_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "# fig1 settings\nm_list = 1,2\npoints = 3\ndelta-min = -2\n").unwrap();
        let out = dir.path().join("o.csv");
        let code = run(argv(&format!(
            "fig1 --config {} --points 5 --out {}",
            cfg.display(),
            out.display()
        )));
        assert_eq!(code, 0);
        let t = CsvTable::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(t.columns(), ["delta_over_lambda", "gamma_01", "gamma_02"]);
        assert_eq!(t.len(), 5);
        assert_eq!(t.rows()[0][0], -2.0);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(argv("fig1 --points 1")), EXIT_INVALID);
        assert_eq!(run(argv("verify --suite nope")), EXIT_INVALID);
        assert_eq!(run(argv("berry --method nope")), EXIT_INVALID);
        assert_eq!(run(argv("fig1 --out /nonexistent-dir/x.csv")), EXIT_INVALID);
        assert_eq!(run(argv("fig1 --config /nonexistent.cfg")), EXIT_INVALID);
        // λT = 2 is far from adiabatic
        assert_eq!(run(argv("berry --method adiabatic --lambda-t 2 --steps 4000 --delta-over-lambda 1")), 3);
    }

    #[test]
    fn config_parsing() {
        let p = Path::new("x.cfg");
        assert_eq!(
            config_tokens("a_b = 1 # note\n\n  c=2,3\n", p).unwrap(),
            vec!["--a-b=1", "--c=2,3"]
        );
        assert!(config_tokens("novalue\n", p).is_err());
        assert!(config_tokens("config = y\n", p).is_err());
    }

    #[test]
    fn berry_point() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("b.csv");
        let code = run(argv(&format!(
            "berry --m 2 --n 1 --branch minus --delta-over-lambda -1.5 --method wilson --mesh 4000 --out {}",
            out.display()
        )));
        assert_eq!(code, 0);
        let t = CsvTable::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert!(t.column("difference").unwrap()[0].abs() < 1e-5);
        assert_eq!(t.column("branch").unwrap()[0], -1.0);
    }

    #[test]
    fn ramsey_point() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        assert_eq!(run(argv(&format!("ramsey --out {}", out.display()))), 0);
        let t = CsvTable::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert!((t.column("p2").unwrap()[0] - 0.146_446_609_406_726_2).abs() < 1e-12);
        assert!((t.column("gamma").unwrap()[0] - PI / 4.0).abs() < 1e-12);
    }
}
