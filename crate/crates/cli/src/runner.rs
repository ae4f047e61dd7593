//! The run pipeline: resolve a scenario, build the expansion, integrate the
//! reference, evaluate every requested truncation level on the grid and emit
//! artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use multiscale::engine::{build_expansion, TruncationLevel};
use multiscale::metrics::trace_distance;
use multiscale::oracle::rk_integrate;
use multiscale::superop::DensityMatrix;

use crate::scenario::{self, Scenario};
use crate::svg::{Plot, Series};
use crate::{output, CliError};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario_ref: String,
    pub out_dir: PathBuf,
    pub order_override: Option<usize>,
    pub levels_override: Option<Vec<String>>,
    pub no_plots: bool,
    pub tolerance_overrides: Vec<(String, f64)>,
}

pub struct LevelSeries {
    pub level: TruncationLevel,
    pub states: Vec<Array2<C64>>,
    pub distances: Option<Vec<f64>>,
}

pub struct RunOutcome {
    pub scenario: Scenario,
    pub times: Vec<f64>,
    pub levels: Vec<LevelSeries>,
    pub artifacts: Vec<PathBuf>,
}

/// Project integration noise out: the hermitian part of a nearly hermitian
/// state.
fn hermitian_part(m: &Array2<C64>) -> DensityMatrix {
    let sym = (m + &m.t().mapv(|z| z.conj())).mapv(|z| z * C64::new(0.5, 0.0));
    DensityMatrix::from_matrix_unchecked(sym)
}

pub fn run(opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let mut scenario = scenario::load(&opts.scenario_ref)?;

    if let Some(order) = opts.order_override {
        scenario.order = order;
    }
    if let Some(levels) = &opts.levels_override {
        scenario.levels = levels.clone();
    }
    if !opts.tolerance_overrides.is_empty() {
        let map = scenario.tolerances.get_or_insert_with(Default::default);
        for (k, v) in &opts.tolerance_overrides {
            map.insert(k.clone(), *v);
        }
    }
    scenario::revalidate(&scenario)?;

    if scenario.grid.start < 0.0 {
        return Err(CliError::Parse(format!(
            "grid.start = {} must be nonnegative",
            scenario.grid.start
        )));
    }

    let tol = scenario.tolerances()?;
    let model = scenario.resolve(&tol)?;
    let expansion = build_expansion(&model.split, scenario.order, &tol)?;
    let times = scenario.grid_times();

    // reference trajectory for error estimation; integration always starts
    // at t = 0 where the initial condition is defined
    let reference: Option<Vec<DensityMatrix>> = if scenario.outputs.trace_distance {
        let mut grid = times.clone();
        let prepended = if grid[0] > 0.0 {
            grid.insert(0, 0.0);
            true
        } else {
            false
        };
        let traj = rk_integrate(&model.split, &model.rho0, &grid, tol.rk_rtol, tol.rk_atol, &tol)?;
        let mut states = traj.states;
        if prepended {
            states.remove(0);
        }
        Some(states)
    } else {
        None
    };

    let mut levels = Vec::new();
    for level in scenario.parsed_levels() {
        let states: Vec<Array2<C64>> = times
            .par_iter()
            .map(|&t| {
                expansion
                    .evaluate_state(level, t, &model.rho0)
                    .map(|s| s.mat().clone())
            })
            .collect::<Result<_, _>>()?;
        let distances = match &reference {
            Some(ref_states) => {
                let d: Vec<f64> = states
                    .par_iter()
                    .zip(ref_states.par_iter())
                    .map(|(s, r)| {
                        trace_distance(
                            &hermitian_part(s),
                            &hermitian_part(r.mat()),
                            &tol,
                        )
                    })
                    .collect::<Result<_, _>>()?;
                Some(d)
            }
            None => None,
        };
        levels.push(LevelSeries {
            level,
            states,
            distances,
        });
    }

    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", opts.out_dir.display())))?;
    let mut artifacts = Vec::new();

    if scenario.outputs.csv {
        for series in &levels {
            let path = opts
                .out_dir
                .join(format!("{}_level_{}.csv", scenario.name, series.level));
            output::write_level_csv(&path, &times, &series.states, series.distances.as_deref())?;
            artifacts.push(path);
        }
    }

    let artifact_path = opts.out_dir.join("expansion.txt");
    output::write_file(&artifact_path, expansion.write_text().as_bytes())?;
    artifacts.push(artifact_path);

    if scenario.outputs.svg && !opts.no_plots {
        artifacts.extend(write_plots(&opts.out_dir, &scenario, &times, &levels, model.dim)?);
    }

    let manifest_path = opts.out_dir.join("manifest.toml");
    output::write_manifest(
        &manifest_path,
        &scenario,
        &tol,
        started.elapsed().as_secs_f64(),
        &artifacts,
    )?;
    artifacts.push(manifest_path);

    Ok(RunOutcome {
        scenario,
        times,
        levels,
        artifacts,
    })
}

fn write_plots(
    out_dir: &Path,
    scenario: &Scenario,
    times: &[f64],
    levels: &[LevelSeries],
    dim: usize,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let x_label = format!("t [1/{}]", scenario.time_unit);

    let mut pop_series = Vec::new();
    for series in levels {
        for state_idx in 0..dim {
            pop_series.push(Series {
                label: format!("level {} p{}", series.level, state_idx),
                points: times
                    .iter()
                    .zip(series.states.iter())
                    .map(|(&t, s)| (t, s[(state_idx, state_idx)].re))
                    .collect(),
            });
        }
    }
    let pop_plot = Plot {
        title: format!("{}: populations", scenario.name),
        x_label: x_label.clone(),
        y_label: "population".into(),
        log_y: false,
        series: pop_series,
    };
    let path = out_dir.join("populations.svg");
    output::write_file(&path, pop_plot.render().as_bytes())?;
    written.push(path);

    // the coherence of interest: (1,2) on the three-level basis, else (0,1)
    let (ci, cj) = if dim >= 3 { (1, 2) } else { (0, 1) };
    let coh_series: Vec<Series> = levels
        .iter()
        .map(|series| Series {
            label: format!("level {}", series.level),
            points: times
                .iter()
                .zip(series.states.iter())
                .map(|(&t, s)| (t, s[(ci, cj)].im))
                .collect(),
        })
        .collect();
    let coh_plot = Plot {
        title: format!("{}: Im coherence ({ci},{cj})", scenario.name),
        x_label: x_label.clone(),
        y_label: format!("Im rho_{ci}{cj}"),
        log_y: false,
        series: coh_series,
    };
    let path = out_dir.join("coherence_im.svg");
    output::write_file(&path, coh_plot.render().as_bytes())?;
    written.push(path);

    if levels.iter().any(|l| l.distances.is_some()) {
        let td_series: Vec<Series> = levels
            .iter()
            .filter_map(|series| {
                series.distances.as_ref().map(|d| Series {
                    label: format!("level {}", series.level),
                    points: times.iter().zip(d.iter()).map(|(&t, &v)| (t, v)).collect(),
                })
            })
            .collect();
        let td_plot = Plot {
            title: format!("{}: trace distance to reference", scenario.name),
            x_label,
            y_label: "trace distance".into(),
            log_y: true,
            series: td_series,
        };
        let path = out_dir.join("trace_distance.svg");
        output::write_file(&path, td_plot.render().as_bytes())?;
        written.push(path);
    }

    Ok(written)
}
