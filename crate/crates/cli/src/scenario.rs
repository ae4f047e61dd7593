//! Declarative run descriptions: a nested key-value (TOML) format with
//! explicit complex-number syntax `a+bi` for matrix entries, plus bundled
//! presets.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use multiscale::engine::{GeneratorSplit, TruncationLevel};
use multiscale::models::{jc_initial_state, jc_split, JcParams, Regime};
use multiscale::signal::ExpSignal;
use multiscale::superop::{DensityMatrix, SuperOperator};
use multiscale::Tolerances;

use crate::CliError;

/// A parsed and validated scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub order: usize,
    pub levels: Vec<String>,
    pub initial_state: InitialState,
    /// Name of the rate whose inverse sets the time unit of the grid and of
    /// every parameter (axes label only; all numbers are already in these
    /// units).
    pub time_unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jc: Option<JcSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSection>,
    pub grid: GridSection,
    pub outputs: OutputsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<std::collections::BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Jc,
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    /// A named preset; `excited-atom` is the three-level state `|1><1|`.
    Named(String),
    /// Full matrix with `a+bi` entries.
    Matrix(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JcSection {
    pub omega_c: f64,
    pub omega_a: f64,
    pub g: f64,
    pub kappa: f64,
    pub pump: f64,
    pub regime: RegimeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeKind {
    StrongCoupling,
    WeakCoupling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSection {
    pub dim: usize,
    /// `D² × D²` generator matrix, rows of `a+bi` strings.
    pub l0: Vec<Vec<String>>,
    #[serde(default)]
    pub l1: Vec<CustomTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTerm {
    pub matrix: Vec<Vec<String>>,
    /// Exponential-polynomial signal terms; defaults to the constant 1.
    #[serde(default)]
    pub signal: Vec<SignalTermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalTermSpec {
    pub coeff: String,
    #[serde(default = "zero_string")]
    pub freq: String,
    #[serde(default)]
    pub power: u32,
}

fn zero_string() -> String {
    "0".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default = "default_true")]
    pub svg: bool,
    #[serde(default)]
    pub trace_distance: bool,
}

fn default_true() -> bool {
    true
}

/// Bundled presets, compiled into the binary.
pub const BUNDLED: &[(&str, &str)] = &[
    ("jc_sc_fig2", include_str!("../assets/jc_sc_fig2.toml")),
    (
        "jc_sc_coherence_fig3",
        include_str!("../assets/jc_sc_coherence_fig3.toml"),
    ),
    ("jc_wc_fig4", include_str!("../assets/jc_wc_fig4.toml")),
    (
        "jc_sc_tracedist_fig5",
        include_str!("../assets/jc_sc_tracedist_fig5.toml"),
    ),
    (
        "jc_wc_tracedist_fig6",
        include_str!("../assets/jc_wc_tracedist_fig6.toml"),
    ),
    (
        "commuting_exactness",
        include_str!("../assets/commuting_exactness.toml"),
    ),
];

/// Load a scenario from a bundled name or a file path.
pub fn load(spec: &str) -> Result<Scenario, CliError> {
    for (name, text) in BUNDLED {
        if *name == spec {
            return parse(text).map_err(|e| e.in_context(&format!("bundled scenario {name}")));
        }
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError::Parse(format!("cannot read scenario `{spec}`: {e}")))?;
    parse(&text).map_err(|e| e.in_context(spec))
}

/// Parse and validate scenario text.
pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let place = e
            .span()
            .map(|span| {
                let (line, column) = line_col(text, span.start);
                format!("line {line}, column {column}: ")
            })
            .unwrap_or_default();
        CliError::Parse(format!("{place}{}", e.message()))
    })?;
    validate(&scenario)?;
    Ok(scenario)
}

/// Re-run validation after command-line overrides are applied.
pub fn revalidate(s: &Scenario) -> Result<(), CliError> {
    validate(s)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in text.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn validate(s: &Scenario) -> Result<(), CliError> {
    if s.grid.points < 2 {
        return Err(CliError::Parse(format!(
            "grid.points = {} must be at least 2",
            s.grid.points
        )));
    }
    if !(s.grid.stop > s.grid.start) {
        return Err(CliError::Parse(format!(
            "grid.stop = {} must exceed grid.start = {}",
            s.grid.stop, s.grid.start
        )));
    }
    if s.levels.is_empty() {
        return Err(CliError::Parse("levels must not be empty".into()));
    }
    for lvl in &s.levels {
        let parsed: TruncationLevel = lvl
            .parse()
            .map_err(|e| CliError::Parse(format!("levels: {e}")))?;
        if parsed.order() > s.order {
            return Err(CliError::Parse(format!(
                "level {lvl} requires order {} but the scenario sets order = {}",
                parsed.order(),
                s.order
            )));
        }
    }
    match s.model {
        ModelKind::Jc => {
            if s.jc.is_none() {
                return Err(CliError::Parse("model = \"jc\" requires a [jc] section".into()));
            }
        }
        ModelKind::Custom => {
            let section = s
                .custom
                .as_ref()
                .ok_or_else(|| CliError::Parse("model = \"custom\" requires a [custom] section".into()))?;
            let side = section.dim * section.dim;
            check_matrix_shape("custom.l0", &section.l0, side)?;
            for (i, term) in section.l1.iter().enumerate() {
                check_matrix_shape(&format!("custom.l1[{i}].matrix"), &term.matrix, side)?;
            }
            if let InitialState::Matrix(rows) = &s.initial_state {
                check_matrix_shape("initial_state", rows, section.dim)?;
            }
        }
    }
    Ok(())
}

fn check_matrix_shape(field: &str, rows: &[Vec<String>], side: usize) -> Result<(), CliError> {
    if rows.len() != side || rows.iter().any(|r| r.len() != side) {
        return Err(CliError::Parse(format!(
            "{field}: expected a {side}x{side} matrix, found {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(|r| r.len()).collect::<Vec<_>>()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            parse_complex(entry).map_err(|e| {
                CliError::Parse(format!("{field}[{i}][{j}] = `{entry}`: {e}"))
            })?;
        }
    }
    Ok(())
}

/// Parse `a+bi` complex syntax: `1`, `-2.5`, `3i`, `-i`, `1+2i`,
/// `1.5e-3-2e-4i`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    // split point: last '+'/'-' that is not leading and not an exponent sign
    let bytes = t.as_bytes();
    let mut split = None;
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        if (b == b'+' || b == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
        }
    }
    let parse_imag = |txt: &str| -> Result<f64, String> {
        let body = &txt[..txt.len() - 1];
        if body.is_empty() || body == "+" {
            Ok(1.0)
        } else if body == "-" {
            Ok(-1.0)
        } else {
            body.parse::<f64>().map_err(|e| e.to_string())
        }
    };
    match split {
        Some(i) if t.ends_with('i') => {
            let re: f64 = t[..i].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
            let im = parse_imag(&t[i..])?;
            Ok(C64::new(re, im))
        }
        _ => {
            if t.ends_with('i') {
                Ok(C64::new(0.0, parse_imag(&t)?))
            } else {
                let re: f64 = t.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
                Ok(C64::new(re, 0.0))
            }
        }
    }
}

fn parse_matrix(rows: &[Vec<String>]) -> Result<Array2<C64>, CliError> {
    let n = rows.len();
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            m[(i, j)] = parse_complex(entry).map_err(CliError::Parse)?;
        }
    }
    Ok(m)
}

/// Everything the runner needs, resolved from a scenario.
pub struct ResolvedModel {
    pub split: GeneratorSplit,
    pub rho0: DensityMatrix,
    pub dim: usize,
}

impl Scenario {
    pub fn parsed_levels(&self) -> Vec<TruncationLevel> {
        self.levels
            .iter()
            .map(|l| l.parse().expect("validated"))
            .collect()
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut tol = Tolerances::default();
        if let Some(map) = &self.tolerances {
            for (k, v) in map {
                tol.set(k, *v).map_err(CliError::Parse)?;
            }
        }
        Ok(tol)
    }

    /// Build the generator split and initial state.
    pub fn resolve(&self, tol: &Tolerances) -> Result<ResolvedModel, CliError> {
        match self.model {
            ModelKind::Jc => {
                let jc = self.jc.as_ref().expect("validated");
                let params = JcParams {
                    omega_c: jc.omega_c,
                    omega_a: jc.omega_a,
                    g: jc.g,
                    kappa: jc.kappa,
                    pump: jc.pump,
                };
                let regime = match jc.regime {
                    RegimeKind::StrongCoupling => Regime::StrongCoupling,
                    RegimeKind::WeakCoupling => Regime::WeakCoupling,
                };
                let split = jc_split(&params, regime, tol)?;
                let rho0 = match &self.initial_state {
                    InitialState::Named(name) if name == "excited-atom" => jc_initial_state(),
                    InitialState::Named(other) => {
                        return Err(CliError::Parse(format!(
                            "unknown initial_state preset `{other}`"
                        )))
                    }
                    InitialState::Matrix(rows) => {
                        check_matrix_shape("initial_state", rows, 3)?;
                        DensityMatrix::physical(parse_matrix(rows)?, tol)?
                    }
                };
                Ok(ResolvedModel {
                    split,
                    rho0,
                    dim: 3,
                })
            }
            ModelKind::Custom => {
                let section = self.custom.as_ref().expect("validated");
                let l0 = SuperOperator::from_matrix(parse_matrix(&section.l0)?)?;
                let mut terms = Vec::new();
                for term in &section.l1 {
                    let mat = SuperOperator::from_matrix(parse_matrix(&term.matrix)?)?;
                    let mut sig = ExpSignal::zero();
                    if term.signal.is_empty() {
                        sig = ExpSignal::constant(C64::new(1.0, 0.0));
                    } else {
                        for t in &term.signal {
                            sig.push(
                                parse_complex(&t.coeff).map_err(CliError::Parse)?,
                                parse_complex(&t.freq).map_err(CliError::Parse)?,
                                t.power,
                            );
                        }
                    }
                    terms.push((mat, sig));
                }
                let split = GeneratorSplit::new(l0, terms)?;
                let rho0 = match &self.initial_state {
                    InitialState::Named(other) => {
                        return Err(CliError::Parse(format!(
                            "custom models require an explicit initial_state matrix, got `{other}`"
                        )))
                    }
                    InitialState::Matrix(rows) => {
                        DensityMatrix::physical(parse_matrix(rows)?, tol)?
                    }
                };
                if rho0.dim() != section.dim {
                    return Err(CliError::Parse(format!(
                        "initial_state dim {} does not match custom.dim {}",
                        rho0.dim(),
                        section.dim
                    )));
                }
                Ok(ResolvedModel {
                    split,
                    rho0,
                    dim: section.dim,
                })
            }
        }
    }

    pub fn grid_times(&self) -> Vec<f64> {
        let n = self.grid.points;
        (0..n)
            .map(|i| {
                self.grid.start + (self.grid.stop - self.grid.start) * i as f64 / (n - 1) as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literal_forms() {
        let cases = [
            ("1", C64::new(1.0, 0.0)),
            ("-2.5", C64::new(-2.5, 0.0)),
            ("3i", C64::new(0.0, 3.0)),
            ("-i", C64::new(0.0, -1.0)),
            ("i", C64::new(0.0, 1.0)),
            ("1+2i", C64::new(1.0, 2.0)),
            ("1.5e-3-2e-4i", C64::new(1.5e-3, -2e-4)),
            ("-1e2+0.5i", C64::new(-100.0, 0.5)),
            ("0", C64::new(0.0, 0.0)),
        ];
        for (txt, want) in cases {
            let got = parse_complex(txt).unwrap();
            assert_eq!(got, want, "{txt}");
        }
        assert!(parse_complex("").is_err());
        assert!(parse_complex("1+2j").is_err());
        assert!(parse_complex("nope").is_err());
    }

    #[test]
    fn bundled_scenarios_parse_and_validate() {
        for (name, text) in BUNDLED {
            let s = parse(text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
            assert_eq!(&s.name, name);
            let tol = s.tolerances().unwrap();
            s.resolve(&tol).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        }
    }

    #[test]
    fn rejects_bad_level_and_grid() {
        let (_, base) = BUNDLED[0];
        let broken = base.replace("order = 1", "order = 0");
        assert!(matches!(parse(&broken), Err(CliError::Parse(_))));
        let broken = base.replace("points = 2001", "points = 1");
        assert!(matches!(parse(&broken), Err(CliError::Parse(_))));
    }

    #[test]
    fn parse_error_carries_position() {
        let err = parse("name = [unclosed\n").unwrap_err();
        match err {
            CliError::Parse(msg) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_order_is_a_parse_error() {
        let (_, base) = BUNDLED[0];
        let broken = base.replace("order = 1", "order = -1");
        assert!(matches!(parse(&broken), Err(CliError::Parse(_))));
    }
}
