//! The four experiment drivers.

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use polaron_core::densities::{
    convergence_report, husimi_marginal, non_decreasing, reduce, standard_probes, strictly_decreasing, HusimiSpec,
    SweepEntry,
};
use polaron_core::fock::{Hamiltonian, LanczosOptions, ModeSet};
use polaron_core::localization::{
    compress_to_modes, energy_split_check, ims_check, verify_localization_identities, FieldLocalizer, IdentityReport,
    ImsReport, PartitionOfUnity, Profile, SplitRow,
};
use polaron_core::pekar::{minimize, minimizer_spread, MinimizeOptions, PekarProblem};
use polaron_core::profiles::{double_well, gaussian_coupling, gaussian_well};
use polaron_core::sweep::{reference, run_alpha, AlphaRun, Reference};
use polaron_core::{Complex64, Error, Field, Grid};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{CouplingSpec, ExperimentConfig, FieldMode, PotentialSpec};
use crate::output::{num, Output};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::NotConverged(_) => 3,
            RunError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Configuration(_) | Error::Validation(_) => RunError::Config(e.to_string()),
            Error::NonConvergence { .. } => RunError::NotConverged(e.to_string()),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(format!("i/o error: {e}"))
    }
}

/// Completed runs either converged everywhere or carry non-converged parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    NotConverged,
}

pub fn build_problem(c: &ExperimentConfig) -> Result<PekarProblem, RunError> {
    let grid = Grid::new(c.n, c.length)?;
    let center = grid.center();
    let potential = match c.potential {
        PotentialSpec::Zero => Field::zeros(&grid),
        PotentialSpec::GaussianWell { depth, width } => gaussian_well(&grid, depth, width, center),
        PotentialSpec::DoubleWell {
            depth_left,
            depth_right,
            width,
            separation,
        } => double_well(&grid, depth_left, depth_right, width, separation, center),
    };
    let coupling = match c.coupling {
        CouplingSpec::Gaussian { amplitude, width } => gaussian_coupling(&grid, amplitude, width),
        CouplingSpec::CosinePacket {
            amplitude,
            width,
            wavenumber,
        } => polaron_core::profiles::cosine_packet(&grid, amplitude, width, wavenumber),
    };
    Ok(PekarProblem::new(potential, coupling, c.mass)?)
}

fn minimize_options(c: &ExperimentConfig) -> MinimizeOptions {
    MinimizeOptions {
        max_iterations: c.solver.max_iterations,
        gradient_tolerance: c.solver.gradient_tolerance,
        energy_tolerance: c.solver.energy_tolerance,
        seed: c.seed,
        ..MinimizeOptions::default()
    }
}

fn lanczos_options(c: &ExperimentConfig) -> LanczosOptions {
    LanczosOptions {
        tol: c.solver.lanczos_tolerance,
        krylov: c.solver.krylov,
        seed: c.seed,
        ..LanczosOptions::default()
    }
}

fn modes_for(c: &ExperimentConfig, grid: &Grid) -> Result<ModeSet, RunError> {
    if c.modes < 3 {
        return Err(RunError::Config("`field.modes` must be at least 3 for the probe set".into()));
    }
    Ok(ModeSet::lowest(grid, c.modes)?)
}

fn verdict(name: &str, ok: bool) -> String {
    format!("verdict {name}={ok}")
}

#[derive(Serialize)]
struct Timing {
    wall_time_s: Vec<f64>,
}

#[derive(Serialize)]
struct PekarOut {
    energy: f64,
    initial_energy: f64,
    gradient_residual: f64,
    iterations: usize,
    converged: bool,
    mass: f64,
    x: Vec<f64>,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
    u_psi: Vec<f64>,
}

pub fn run_pekar(c: &ExperimentConfig, out: &Path) -> Result<Status, RunError> {
    let p = build_problem(c)?;
    let mut opts = minimize_options(c);
    opts.record_trace = true;
    let start = Instant::now();
    let r = minimize(&p, &opts)?;
    let o = Output::new(out, &c.hash())?;
    let grid = p.grid();
    o.json(
        "pekar.json",
        &PekarOut {
            energy: r.energy,
            initial_energy: r.initial_energy,
            gradient_residual: r.gradient_residual,
            iterations: r.iterations,
            converged: r.converged,
            mass: r.psi.norm_sq(),
            x: (0..grid.n()).map(|i| grid.x(i)).collect(),
            psi_re: r.psi.values().iter().map(|z| z.re).collect(),
            psi_im: r.psi.values().iter().map(|z| z.im).collect(),
            u_psi: r.u_psi.real_parts(),
        },
    )?;
    let rows: Vec<Vec<String>> = r
        .trace
        .iter()
        .map(|t| vec![t.iteration.to_string(), num(t.energy), num(t.residual)])
        .collect();
    o.csv("pekar_trace.csv", &["iteration", "energy", "residual"], &rows, &[])?;
    o.json(
        "timing.json",
        &Timing {
            wall_time_s: vec![start.elapsed().as_secs_f64()],
        },
    )?;
    Ok(if r.converged { Status::Converged } else { Status::NotConverged })
}

/// A sweep row either holds results or the reason it was skipped.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
enum SweepRow {
    Ok {
        alpha: f64,
        cutoff: usize,
        composite_dim: usize,
        e_alpha: f64,
        e_trial: f64,
        e_pekar: f64,
        energy_gap: f64,
        /// Absent when the reference minimizer is not unique.
        trace_distance: Option<f64>,
        moment_errors: Option<Vec<f64>>,
        mass_in_window: f64,
        fock_truncation: f64,
        mode_truncation: f64,
        lanczos_residual: f64,
    },
    Capacity {
        alpha: f64,
        message: String,
    },
    NotConverged {
        alpha: f64,
        message: String,
    },
}

#[derive(Serialize)]
struct ReferenceOut {
    e_pekar: f64,
    gradient_residual: f64,
    converged: bool,
    u_norm: f64,
    minimizer_spread: f64,
    unique_minimizer: bool,
}

#[derive(Serialize)]
struct SweepOut {
    reference: ReferenceOut,
    probes: Vec<String>,
    window_radius: f64,
    rows: Vec<SweepRow>,
    verdicts: Vec<String>,
}

/// Spread (trace distance) below which perturbed minimizers count as one.
const UNIQUENESS_TOLERANCE: f64 = 1e-6;

struct Setup {
    problem: PekarProblem,
    reference: Reference,
    spread: f64,
    lanczos: LanczosOptions,
}

fn setup(c: &ExperimentConfig) -> Result<Setup, RunError> {
    let problem = build_problem(c)?;
    let modes = modes_for(c, problem.grid())?;
    let opts = minimize_options(c);
    let reference = reference(&problem, &modes, &opts)?;
    let spread = minimizer_spread(&reference.projected, &opts, 2, c.length / 8.0)?;
    Ok(Setup {
        problem,
        reference,
        spread,
        lanczos: lanczos_options(c),
    })
}

/// Runs every alpha, mapping capacity and eigensolver failures to row markers.
fn solve_rows(c: &ExperimentConfig, s: &Setup) -> Vec<(f64, Result<AlphaRun, Error>, f64)> {
    c.alphas
        .par_iter()
        .map(|&a| {
            let t = Instant::now();
            let r = run_alpha(&s.reference, a, c.safety, &s.lanczos, c.solver.capacity);
            (a, r, t.elapsed().as_secs_f64())
        })
        .collect()
}

fn window(grid: &Grid, radius: f64) -> Result<PartitionOfUnity, RunError> {
    Ok(PartitionOfUnity::new(grid, grid.center(), radius, Profile::default())?)
}

pub fn run_sweep(c: &ExperimentConfig, out: &Path) -> Result<Status, RunError> {
    let s = setup(c)?;
    let grid = s.problem.grid().clone();
    let modes = &s.reference.modes;
    let radius = c.length / 8.0;
    let chi = window(&grid, radius)?.chi;
    let probes = standard_probes(&grid, modes, &chi)?;
    let unique = s.spread <= UNIQUENESS_TOLERANCE;
    let e_pek = s.reference.result.energy;

    let solved = solve_rows(c, &s);
    let mut rows = Vec::new();
    let mut walls = Vec::new();
    let mut status = if s.reference.result.converged {
        Status::Converged
    } else {
        Status::NotConverged
    };
    for (alpha, run, wall) in solved {
        walls.push(wall);
        let run = match run {
            Ok(run) => run,
            Err(e @ Error::Capacity { .. }) => {
                rows.push(SweepRow::Capacity {
                    alpha,
                    message: e.to_string(),
                });
                continue;
            }
            Err(e @ Error::NonConvergence { .. }) => {
                status = Status::NotConverged;
                rows.push(SweepRow::NotConverged {
                    alpha,
                    message: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let entry = SweepEntry {
            alpha,
            state: &run.ground.state,
            basis: &run.basis,
        };
        let conv = convergence_report(&[entry], &s.reference.result, modes, &probes, &chi)?.remove(0);
        let row = run.row(&s.reference);
        rows.push(SweepRow::Ok {
            alpha,
            cutoff: row.cutoff,
            composite_dim: row.composite_dim,
            e_alpha: row.e_alpha,
            e_trial: row.e_trial,
            e_pekar: e_pek,
            energy_gap: (row.e_alpha - e_pek).abs(),
            trace_distance: unique.then_some(conv.trace_distance),
            moment_errors: unique.then_some(conv.moment_errors),
            mass_in_window: conv.mass_in_window,
            fock_truncation: row.fock_truncation,
            mode_truncation: row.mode_truncation,
            lanczos_residual: row.residual,
        });
    }

    let mut verdicts = Vec::new();
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| matches!(r, SweepRow::Ok { .. })).collect();
    if ok.len() >= 2 {
        let col = |f: &dyn Fn(&SweepRow) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
        let gaps = col(&|r| match r {
            SweepRow::Ok { energy_gap, .. } => Some(*energy_gap),
            _ => None,
        });
        let bound = ok.iter().all(|r| match r {
            SweepRow::Ok { e_alpha, e_trial, .. } => *e_alpha <= e_trial + 1e-8,
            _ => true,
        });
        verdicts.push(verdict("variational_bound", bound));
        verdicts.push(verdict("energy_gap_strictly_decreasing", strictly_decreasing(&gaps)));
        if unique {
            let td = col(&|r| match r {
                SweepRow::Ok { trace_distance, .. } => *trace_distance,
                _ => None,
            });
            verdicts.push(verdict("trace_distance_strictly_decreasing", strictly_decreasing(&td)));
            for (k, p) in probes.iter().enumerate() {
                let errs = col(&|r| match r {
                    SweepRow::Ok { moment_errors, .. } => moment_errors.as_ref().map(|m| m[k]),
                    _ => None,
                });
                verdicts.push(verdict(&format!("moment_err[{}]_strictly_decreasing", p.name), strictly_decreasing(&errs)));
            }
        } else {
            verdicts.push("skipped state comparison: reference minimizer not unique".into());
        }
        let mass = col(&|r| match r {
            SweepRow::Ok { mass_in_window, .. } => Some(*mass_in_window),
            _ => None,
        });
        verdicts.push(verdict("mass_in_window_non_decreasing", non_decreasing(&mass)));
    }
    if ok.len() < rows.len() {
        verdicts.push("partial=true".into());
    }

    let o = Output::new(out, &c.hash())?;
    let blank = String::new;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| match r {
            SweepRow::Ok {
                alpha,
                cutoff,
                composite_dim,
                e_alpha,
                e_trial,
                e_pekar,
                energy_gap,
                trace_distance,
                moment_errors,
                mass_in_window,
                fock_truncation,
                mode_truncation,
                lanczos_residual,
            } => {
                let mut v = vec![
                    num(*alpha),
                    "ok".into(),
                    cutoff.to_string(),
                    composite_dim.to_string(),
                    num(*e_alpha),
                    num(*e_trial),
                    num(*e_pekar),
                    num(*energy_gap),
                    trace_distance.map(num).unwrap_or_else(blank),
                ];
                match moment_errors {
                    Some(m) => v.extend(m.iter().map(|x| num(*x))),
                    None => v.extend(probes.iter().map(|_| blank())),
                }
                v.extend([num(*mass_in_window), num(*fock_truncation), num(*mode_truncation), num(*lanczos_residual)]);
                v
            }
            SweepRow::Capacity { alpha, .. } | SweepRow::NotConverged { alpha, .. } => {
                let marker = if matches!(r, SweepRow::Capacity { .. }) {
                    "capacity"
                } else {
                    "not-converged"
                };
                let mut v = vec![num(*alpha), marker.into()];
                v.extend((0..11 + probes.len()).map(|_| blank()));
                v
            }
        })
        .collect();
    let mut columns = vec![
        "alpha",
        "status",
        "cutoff",
        "composite_dim",
        "e_alpha",
        "e_trial",
        "e_pekar",
        "energy_gap",
        "trace_distance",
        "moment_err_window",
        "moment_err_a_plus1",
        "moment_err_a_minus1",
    ];
    debug_assert_eq!(probes.len(), 3);
    columns.extend(["mass_in_window", "fock_truncation", "mode_truncation", "lanczos_residual"]);
    o.csv("sweep.csv", &columns, &csv_rows, &verdicts)?;
    o.json(
        "sweep.json",
        &SweepOut {
            reference: ReferenceOut {
                e_pekar: e_pek,
                gradient_residual: s.reference.result.gradient_residual,
                converged: s.reference.result.converged,
                u_norm: s.reference.u_norm,
                minimizer_spread: s.spread,
                unique_minimizer: unique,
            },
            probes: probes.iter().map(|p| p.name.clone()).collect(),
            window_radius: radius,
            rows,
            verdicts,
        },
    )?;
    o.json("timing.json", &Timing { wall_time_s: walls })?;
    Ok(status)
}

#[derive(Clone, Debug, Serialize)]
struct LadderRow {
    alpha: f64,
    radius: f64,
    status: String,
    mass_in_window: Option<f64>,
    /// `max_j ||(1 - P) chi e_j||` for the compressed field localizer.
    compression_error: f64,
    ims: Option<ImsReport>,
    split: Option<SplitRow>,
    identities: Option<IdentityReport>,
    message: Option<String>,
}

#[derive(Serialize)]
struct LocalizationOut {
    field_localizer: &'static str,
    rows: Vec<LadderRow>,
    verdicts: Vec<String>,
}

fn compression_error(chi: &Field, modes: &ModeSet) -> f64 {
    (0..modes.len())
        .map(|j| {
            let mut e = vec![Complex64::default(); modes.len()];
            e[j] = Complex64::new(1.0, 0.0);
            modes.truncation_weight(&chi.mul(&modes.synthesize(&e))).sqrt()
        })
        .fold(0.0, f64::max)
}

pub fn run_localization(c: &ExperimentConfig, out: &Path) -> Result<Status, RunError> {
    if c.localization.radii.is_empty() {
        return Err(RunError::Config("missing required key `localization.radii`".into()));
    }
    let s = setup(c)?;
    let grid = s.problem.grid().clone();
    let modes = &s.reference.modes;
    let partitions = c
        .localization
        .radii
        .iter()
        .map(|&r| window(&grid, r))
        .collect::<Result<Vec<_>, _>>()?;
    let free = s.problem.without_potential();
    let cap = c.localization.capacity;
    let (field, field_name) = match c.localization.field {
        FieldMode::Identity => (FieldLocalizer::Identity, "identity"),
        FieldMode::Compressed => (FieldLocalizer::Compressed, "compressed"),
    };
    let mut status = Status::Converged;
    let mut rows = Vec::new();
    let mut walls = Vec::new();
    for (alpha, run, wall) in solve_rows(c, &s) {
        walls.push(wall);
        let marker = |st: &str, message: String, mass: Option<f64>, ims: Option<ImsReport>, p: &PartitionOfUnity| LadderRow {
            alpha,
            radius: p.radius,
            status: st.into(),
            mass_in_window: mass,
            compression_error: compression_error(&p.chi, modes),
            ims,
            split: None,
            identities: None,
            message: Some(message),
        };
        let run = match run {
            Ok(run) => run,
            Err(e @ (Error::Capacity { .. } | Error::NonConvergence { .. })) => {
                let st = if matches!(e, Error::Capacity { .. }) {
                    "capacity"
                } else {
                    status = Status::NotConverged;
                    "not-converged"
                };
                rows.extend(partitions.iter().map(|p| marker(st, e.to_string(), None, None, p)));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let gamma_state = polaron_core::densities::CompositeDensity::pure(&run.ground.state);
        let gamma = reduce(&run.ground.state, &run.basis)?.gamma;
        let hv = Hamiltonian::new(&s.problem, modes, &run.basis, alpha)?;
        let h0 = Hamiltonian::new(&free, modes, &run.basis, alpha)?;
        let per_r: Vec<Result<LadderRow, RunError>> = partitions
            .par_iter()
            .map(|p| {
                let chi_m = polaron_core::densities::multiplication(&p.chi);
                let mass = (&chi_m * &gamma * &chi_m).trace().re;
                let ims = ims_check(&gamma, p);
                let q_field = match c.localization.field {
                    FieldMode::Identity => DMatrix::identity(modes.len(), modes.len()),
                    FieldMode::Compressed => compress_to_modes(&p.chi, modes),
                };
                let split = energy_split_check(&gamma_state, std::slice::from_ref(p), &hv, &h0, &run.basis, modes, &field, cap);
                let ids = verify_localization_identities(&gamma_state, &p.chi, &q_field, &run.basis, cap);
                match (split, ids) {
                    (Ok(mut split), Ok(ids)) => Ok(LadderRow {
                        alpha,
                        radius: p.radius,
                        status: "ok".into(),
                        mass_in_window: Some(mass),
                        compression_error: compression_error(&p.chi, modes),
                        ims: Some(ims),
                        split: Some(split.remove(0)),
                        identities: Some(ids),
                        message: None,
                    }),
                    (Err(e @ Error::Capacity { .. }), _) | (_, Err(e @ Error::Capacity { .. })) => {
                        Ok(marker("capacity", e.to_string(), Some(mass), Some(ims), p))
                    }
                    (Err(e), _) | (_, Err(e)) => Err(e.into()),
                }
            })
            .collect();
        for r in per_r {
            rows.push(r?);
        }
    }

    let mut verdicts = Vec::new();
    for p in &partitions {
        let mass: Vec<f64> = rows
            .iter()
            .filter(|r| r.radius == p.radius)
            .filter_map(|r| r.mass_in_window)
            .collect();
        if mass.len() >= 2 {
            verdicts.push(verdict(
                &format!("mass_in_window[R={}]_non_decreasing", p.radius),
                non_decreasing(&mass),
            ));
        }
    }
    if rows.iter().any(|r| r.status != "ok") {
        verdicts.push("partial=true".into());
    }

    let o = Output::new(out, &c.hash())?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let split = r.split.as_ref();
            let ids = r.identities.as_ref();
            vec![
                num(r.alpha),
                num(r.radius),
                r.status.clone(),
                opt(r.mass_in_window),
                num(r.compression_error),
                opt(r.ims.as_ref().map(|i| i.deviation)),
                opt(r.ims.as_ref().map(|i| i.gradient_constant)),
                opt(split.map(|x| x.energy)),
                opt(split.map(|x| x.inner_energy)),
                opt(split.map(|x| x.outer_energy)),
                opt(split.map(|x| x.defect)),
                opt(split.map(|x| x.inner_trace)),
                opt(split.map(|x| x.outer_trace)),
                opt(ids.map(|x| x.particle)),
                opt(ids.map(|x| x.field)),
                opt(ids.map(|x| x.interaction)),
                opt(ids.map(|x| x.trace)),
            ]
        })
        .collect();
    o.csv(
        "localization_ladder.csv",
        &[
            "alpha",
            "radius",
            "status",
            "mass_in_window",
            "compression_error",
            "ims_deviation",
            "gradient_constant",
            "energy",
            "inner_energy",
            "outer_energy",
            "split_defect",
            "inner_trace",
            "outer_trace",
            "dev_particle",
            "dev_field",
            "dev_interaction",
            "dev_trace",
        ],
        &csv_rows,
        &verdicts,
    )?;
    o.json(
        "localization.json",
        &LocalizationOut {
            field_localizer: field_name,
            rows,
            verdicts,
        },
    )?;
    o.json("timing.json", &Timing { wall_time_s: walls })?;
    Ok(status)
}

#[derive(Serialize)]
struct HusimiRow {
    alpha: f64,
    status: String,
    predicted: [f64; 2],
    radius: f64,
    mass_near_prediction: Option<f64>,
    grid_mass: Option<f64>,
    coarse: Option<bool>,
    file: Option<String>,
}

#[derive(Serialize)]
struct HusimiOut {
    mode: i64,
    rows: Vec<HusimiRow>,
    verdicts: Vec<String>,
}

pub fn run_husimi(c: &ExperimentConfig, out: &Path) -> Result<Status, RunError> {
    let s = setup(c)?;
    let modes = &s.reference.modes;
    let j = modes
        .position(c.husimi.mode)
        .ok_or_else(|| RunError::Config(format!("`husimi.mode` {} is not a retained mode", c.husimi.mode)))?;
    let predicted = modes.amplitudes(&s.reference.result.u_psi)[j];
    let o = Output::new(out, &c.hash())?;
    let mut rows = Vec::new();
    let mut walls = Vec::new();
    let mut status = Status::Converged;
    for (i, (alpha, run, wall)) in solve_rows(c, &s).into_iter().enumerate() {
        walls.push(wall);
        let radius = c.husimi.radius / alpha;
        let mut row = HusimiRow {
            alpha,
            status: "ok".into(),
            predicted: [predicted.re, predicted.im],
            radius,
            mass_near_prediction: None,
            grid_mass: None,
            coarse: None,
            file: None,
        };
        match run {
            Ok(run) => {
                let spec = HusimiSpec {
                    cells: c.husimi.cells,
                    radius: Some(radius),
                    ..HusimiSpec::around(predicted, alpha)
                };
                let rep = husimi_marginal(&run.ground.state, &run.basis, j, &spec)?;
                let file = format!("husimi_{i}.dat");
                o.matrix(
                    &file,
                    &[
                        format!("alpha={alpha}"),
                        format!("mode={}", c.husimi.mode),
                        "rows: Im u, columns: Re u".into(),
                    ],
                    &rep.centers_re,
                    &rep.centers_im,
                    &rep.density,
                )?;
                if rep.coarse {
                    row.status = "coarse".into();
                }
                row.mass_near_prediction = Some(rep.mass_near_prediction);
                row.grid_mass = Some(rep.grid_mass);
                row.coarse = Some(rep.coarse);
                row.file = Some(file);
            }
            Err(e @ Error::Capacity { .. }) => row.status = format!("capacity: {e}"),
            Err(e @ Error::NonConvergence { .. }) => {
                status = Status::NotConverged;
                row.status = format!("not-converged: {e}");
            }
            Err(e) => return Err(e.into()),
        }
        rows.push(row);
    }
    let masses: Vec<f64> = rows.iter().filter_map(|r| r.mass_near_prediction).collect();
    let mut verdicts = Vec::new();
    if masses.len() >= 2 {
        verdicts.push(verdict(
            "mass_near_prediction_increasing",
            masses.windows(2).all(|w| w[1] > w[0]),
        ));
    }
    o.json(
        "husimi.json",
        &HusimiOut {
            mode: c.husimi.mode,
            rows,
            verdicts,
        },
    )?;
    o.json("timing.json", &Timing { wall_time_s: walls })?;
    Ok(status)
}
