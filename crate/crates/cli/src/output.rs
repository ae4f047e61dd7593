//! Run artifacts: per-level CSV trajectories and the run manifest.
//!
//! CSV layout: `t`, then density-matrix entries as `re_i_j`/`im_i_j` columns
//! in row-major order, then populations, then the trace distance to the
//! reference when requested. Floats carry 17 significant digits so repeated
//! runs are byte-identical.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::scenario::Scenario;
use crate::CliError;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(dim: usize, with_distance: bool) -> String {
    let mut cols = vec!["t".to_string()];
    for i in 0..dim {
        for j in 0..dim {
            cols.push(format!("re_{i}_{j}"));
            cols.push(format!("im_{i}_{j}"));
        }
    }
    for i in 0..dim {
        cols.push(format!("pop_{i}"));
    }
    if with_distance {
        cols.push("trace_distance_vs_reference".to_string());
    }
    cols.join(",")
}

pub fn write_level_csv(
    path: &Path,
    times: &[f64],
    states: &[Array2<C64>],
    distances: Option<&[f64]>,
) -> Result<(), CliError> {
    let dim = states[0].nrows();
    let mut out = String::new();
    out.push_str(&csv_header(dim, distances.is_some()));
    out.push('\n');
    for (idx, (t, state)) in times.iter().zip(states.iter()).enumerate() {
        let mut cols = vec![fmt(*t)];
        for i in 0..dim {
            for j in 0..dim {
                cols.push(fmt(state[(i, j)].re));
                cols.push(fmt(state[(i, j)].im));
            }
        }
        for i in 0..dim {
            cols.push(fmt(state[(i, i)].re));
        }
        if let Some(d) = distances {
            cols.push(fmt(d[idx]));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunInfo,
    scenario: &'a Scenario,
    tolerances_resolved: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct RunInfo {
    version: String,
    wall_time_seconds: f64,
    artifacts: Vec<String>,
}

pub fn write_manifest(
    path: &Path,
    scenario: &Scenario,
    tol: &multiscale::Tolerances,
    wall_time_seconds: f64,
    artifacts: &[PathBuf],
) -> Result<(), CliError> {
    let tolerances_resolved = BTreeMap::from([
        ("eps_herm".to_string(), tol.eps_herm),
        ("eps_trace".to_string(), tol.eps_trace),
        ("eps_psd".to_string(), tol.eps_psd),
        ("eps_spec".to_string(), tol.eps_spec),
        ("kappa_max".to_string(), tol.kappa_max),
        ("eps_sec_rel".to_string(), tol.eps_sec_rel),
        ("max_order".to_string(), tol.max_order as f64),
        ("rk_rtol".to_string(), tol.rk_rtol),
        ("rk_atol".to_string(), tol.rk_atol),
    ]);
    let manifest = Manifest {
        run: RunInfo {
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds,
            artifacts: artifacts
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
        },
        scenario,
        tolerances_resolved,
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| CliError::Io(format!("manifest serialization: {e}")))?;
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            csv_header(2, true),
            "t,re_0_0,im_0_0,re_0_1,im_0_1,re_1_0,im_1_0,re_1_1,im_1_1,pop_0,pop_1,trace_distance_vs_reference"
        );
        assert!(!csv_header(2, false).contains("trace_distance"));
    }

    #[test]
    fn float_format_is_fixed_width_17_digits() {
        assert_eq!(fmt(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt(-1.0), "-1.0000000000000000e0");
    }
}
