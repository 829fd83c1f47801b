//! File formats: parameter and history tables, run configuration and surface
//! dumps.
//!
//! Tables are comma-separated with a header row. Configuration and surface
//! dumps are JSON; floats are written in shortest round-trip form so a dump
//! reloads bit for bit.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::demand::{PdmParams, DEFAULT_HORIZON, DEFAULT_P_REF, DEFAULT_V0};
use crate::error::{Error, Result};
use crate::experiment::{Target, DEFAULT_MULTIPLIERS};
use crate::solver::Scenario;
use crate::surface::{format_code, Domain, Surface, Vertex};

/// Bundled room air conditioner parameterization.
pub const BUNDLED_PARAMS_CSV: &str = include_str!("../data/air_conditioner_params.csv");
/// Bundled room air conditioner sales history.
pub const BUNDLED_HISTORY_CSV: &str = include_str!("../data/air_conditioner_history.csv");
/// Bundled default study configuration.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../data/default.json");

const REQUIRED_PARAMS: [&str; 10] = [
    "m", "a0", "pi_p", "alpha", "beta", "delta", "eta", "pi_m", "gamma_p", "gamma_b",
];
const OPTIONAL_PARAMS: [&str; 4] = ["p_ref", "v0", "t", "adopters"];
const HISTORY_COLUMNS: [&str; 4] = ["year", "sales", "price", "advertising"];

/// Hex SHA-256 of the canonical JSON form of `params`.
pub fn params_hash(params: &PdmParams) -> String {
    let json = serde_json::to_string(params).expect("params serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::parse(path.display().to_string(), format!("cannot read file: {e}")))
}

/// Data records tagged with their 1-based line number.
type Records = Vec<(u64, Vec<String>)>;

/// Header plus data records.
fn read_table(text: &str, source: &str) -> Result<(Vec<String>, Records)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(source, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(source, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok((header, rows))
}

fn check_columns(
    header: &[String],
    required: &[&str],
    optional: &[&str],
    source: &str,
) -> Result<()> {
    let mut seen = HashSet::new();
    for name in header {
        if !required.contains(&name.as_str()) && !optional.contains(&name.as_str()) {
            return Err(Error::parse(source, format!("unknown column '{name}'")));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::parse(
                source,
                format!("column '{name}' appears twice"),
            ));
        }
    }
    if let Some(missing) = required.iter().find(|c| !seen.contains(**c)) {
        return Err(Error::parse(source, format!("missing column '{missing}'")));
    }
    Ok(())
}

fn cell(value: &str, line: u64, column: &str, source: &str) -> Result<f64> {
    let x: f64 = value.parse().map_err(|_| {
        Error::parse(
            source,
            format!("line {line}, column '{column}': '{value}' is not a number"),
        )
    })?;
    if !x.is_finite() {
        return Err(Error::parse(
            source,
            format!("line {line}, column '{column}': value must be finite"),
        ));
    }
    Ok(x)
}

/// Parse a one-row parameter table. `p_ref`, `v0`, `t` and `adopters` may be
/// omitted; `adopters` then defaults to `a0`.
pub fn parse_params(text: &str, source: &str) -> Result<PdmParams> {
    let (header, rows) = read_table(text, source)?;
    check_columns(&header, &REQUIRED_PARAMS, &OPTIONAL_PARAMS, source)?;
    let (line, values) = match rows.as_slice() {
        [row] => row,
        [] => return Err(Error::parse(source, "no parameter row")),
        _ => {
            return Err(Error::parse(
                source,
                format!("expected one parameter row, found {}", rows.len()),
            ))
        }
    };
    let get = |name: &str| -> Result<Option<f64>> {
        header
            .iter()
            .position(|h| h == name)
            .map(|i| cell(&values[i], *line, name, source))
            .transpose()
    };
    let req = |name: &str| -> Result<f64> { Ok(get(name)?.expect("required column checked")) };
    let a0 = req("a0")?;
    let params = PdmParams {
        m: req("m")?,
        a0,
        pi_p: req("pi_p")?,
        alpha: req("alpha")?,
        beta: req("beta")?,
        delta: req("delta")?,
        eta: req("eta")?,
        pi_m: req("pi_m")?,
        gamma_p: req("gamma_p")?,
        gamma_b: req("gamma_b")?,
        p_ref: get("p_ref")?.unwrap_or(DEFAULT_P_REF),
        v0: get("v0")?.unwrap_or(DEFAULT_V0),
        t: get("t")?.unwrap_or(DEFAULT_HORIZON),
        adopters: get("adopters")?.unwrap_or(a0),
    };
    params
        .validate()
        .map_err(|e| Error::parse(source, format!("line {line}: {e}")))?;
    Ok(params)
}

pub fn load_params(path: impl AsRef<Path>) -> Result<PdmParams> {
    let path = path.as_ref();
    parse_params(&read_text(path)?, &path.display().to_string())
}

/// Full parameter table, every column written.
pub fn params_to_csv(params: &PdmParams) -> String {
    let names: Vec<&str> = REQUIRED_PARAMS
        .iter()
        .chain(OPTIONAL_PARAMS.iter())
        .copied()
        .collect();
    let p = params;
    let values = [
        p.m, p.a0, p.pi_p, p.alpha, p.beta, p.delta, p.eta, p.pi_m, p.gamma_p, p.gamma_b, p.p_ref,
        p.v0, p.t, p.adopters,
    ];
    let row: Vec<String> = values.iter().map(|x| format!("{x:?}")).collect();
    format!("{}\n{}\n", names.join(","), row.join(","))
}

pub fn save_params(params: &PdmParams, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, params_to_csv(params))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub year: i32,
    /// Thousands of units.
    pub sales: f64,
    pub price: f64,
    /// Millions of dollars.
    pub advertising: f64,
}

pub fn parse_history(text: &str, source: &str) -> Result<Vec<HistoryRow>> {
    let (header, rows) = read_table(text, source)?;
    check_columns(&header, &HISTORY_COLUMNS, &[], source)?;
    let col = |name: &str| header.iter().position(|h| h == name).expect("checked");
    let (iy, is, ip, ia) = (col("year"), col("sales"), col("price"), col("advertising"));
    let mut out: Vec<HistoryRow> = Vec::with_capacity(rows.len());
    for (line, values) in &rows {
        let year = values[iy].parse::<i32>().map_err(|_| {
            Error::parse(
                source,
                format!("line {line}, column 'year': '{}' is not a year", values[iy]),
            )
        })?;
        let row = HistoryRow {
            year,
            sales: cell(&values[is], *line, "sales", source)?,
            price: cell(&values[ip], *line, "price", source)?,
            advertising: cell(&values[ia], *line, "advertising", source)?,
        };
        if row.sales < 0.0 || row.price <= 0.0 || row.advertising < 0.0 {
            return Err(Error::parse(
                source,
                format!(
                    "line {line}: sales and advertising must be non-negative and price positive"
                ),
            ));
        }
        if let Some(prev) = out.last() {
            if row.year <= prev.year {
                return Err(Error::parse(
                    source,
                    format!(
                        "line {line}: year {} does not follow {}",
                        row.year, prev.year
                    ),
                ));
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(Error::parse(source, "no history rows"));
    }
    Ok(out)
}

pub fn load_history(path: impl AsRef<Path>) -> Result<Vec<HistoryRow>> {
    let path = path.as_ref();
    parse_history(&read_text(path)?, &path.display().to_string())
}

/// Study configuration. Every field is optional and defaults to the
/// room air conditioner calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Parameter table; relative paths resolve against the config file. The
    /// bundled table is used when absent.
    pub params: Option<PathBuf>,
    pub costs: Vec<f64>,
    pub thetas: Vec<f64>,
    pub salvage_fraction: f64,
    pub p_min: i64,
    pub p_max: i64,
    pub v_max: f64,
    pub samples: usize,
    pub seed: u64,
    pub bits: u32,
    pub targets: Vec<Target>,
    pub multipliers: Vec<f64>,
    pub ad_cost_scale: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: None,
            costs: vec![246.0, 328.0],
            thetas: vec![1.0, 0.5, 0.25, 0.05],
            salvage_fraction: 0.1,
            p_min: 350,
            p_max: 450,
            v_max: 100.0,
            samples: 15_000,
            seed: 1,
            bits: 10,
            targets: vec![Target::Eta, Target::Gamma],
            multipliers: DEFAULT_MULTIPLIERS.to_vec(),
            ad_cost_scale: 1.0,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::parse(source, e.to_string()))?;
        config
            .validate()
            .map_err(|e| Error::parse(source, e.to_string()))?;
        Ok(config)
    }

    /// Parse and resolve the parameter path relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let source = path.display().to_string();
        let mut config = Self::parse(&read_text(path)?, &source)?;
        if let Some(p) = &config.params {
            let resolved = if p.is_relative() {
                path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.clone()
            };
            if !resolved.is_file() {
                return Err(Error::parse(
                    source,
                    format!("params file {} does not exist", resolved.display()),
                ));
            }
            config.params = Some(resolved);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.costs.is_empty()
            || self.thetas.is_empty()
            || self.targets.is_empty()
            || self.multipliers.is_empty()
        {
            return bad("costs, thetas, targets and multipliers must be non-empty");
        }
        if self
            .multipliers
            .iter()
            .any(|&x| !(x > 0.0 && x.is_finite()))
        {
            return bad("multipliers must be positive");
        }
        if !(self.salvage_fraction >= 0.0 && self.salvage_fraction < 1.0) {
            return bad("salvage_fraction must lie in [0, 1)");
        }
        if self.bits == 0 || self.bits > 20 {
            return bad("bits must lie in 1..=20");
        }
        self.domain().validate()?;
        for s in self.scenarios() {
            s.validate()?;
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        Domain {
            p_min: self.p_min as f64,
            p_max: self.p_max as f64,
            v_max: self.v_max,
        }
    }

    /// Cost-major, then theta, in configuration order.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &cost in &self.costs {
            for &theta in &self.thetas {
                out.push(Scenario {
                    cost,
                    salvage: self.salvage_fraction * cost,
                    theta,
                    p_min: self.p_min,
                    p_max: self.p_max,
                    v_max: self.v_max,
                    samples: self.samples,
                    seed: self.seed,
                    ad_cost_scale: self.ad_cost_scale,
                });
            }
        }
        out
    }

    pub fn load_params(&self) -> Result<PdmParams> {
        match &self.params {
            Some(path) => load_params(path),
            None => parse_params(BUNDLED_PARAMS_CSV, "bundled air_conditioner_params.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangleRecord {
    vertices: [usize; 3],
    code: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceDump {
    format: String,
    params_hash: String,
    domain: Domain,
    bit_budget: u32,
    code_width: u32,
    vertices: Vec<Vertex>,
    triangles: Vec<TriangleRecord>,
}

const SURFACE_FORMAT: &str = "pdm-surface/1";

pub fn surface_to_json(surface: &Surface) -> String {
    let dump = SurfaceDump {
        format: SURFACE_FORMAT.into(),
        params_hash: surface.params_hash.clone(),
        domain: surface.domain,
        bit_budget: surface.bit_budget,
        code_width: surface.code_width,
        vertices: surface.vertices.clone(),
        triangles: surface
            .triangles
            .iter()
            .zip(&surface.codes)
            .map(|(t, &c)| TriangleRecord {
                vertices: t.vertices,
                code: format_code(c, surface.code_width),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&dump).expect("surface serializes");
    s.push('\n');
    s
}

pub fn surface_from_json(text: &str, source: &str) -> Result<Surface> {
    let dump: SurfaceDump =
        serde_json::from_str(text).map_err(|e| Error::parse(source, e.to_string()))?;
    if dump.format != SURFACE_FORMAT {
        return Err(Error::parse(
            source,
            format!("unsupported format '{}'", dump.format),
        ));
    }
    let mut codes = Vec::with_capacity(dump.triangles.len());
    for (i, t) in dump.triangles.iter().enumerate() {
        if t.code.len() != dump.code_width as usize {
            return Err(Error::parse(
                source,
                format!(
                    "triangle {i}: code '{}' is not {} bits",
                    t.code, dump.code_width
                ),
            ));
        }
        let code = if t.code.is_empty() {
            0
        } else {
            u32::from_str_radix(&t.code, 2)
                .map_err(|_| Error::parse(source, format!("triangle {i}: bad code '{}'", t.code)))?
        };
        codes.push(code);
    }
    let triangles = dump.triangles.iter().map(|t| t.vertices).collect();
    let surface = Surface::from_parts(
        dump.domain,
        dump.bit_budget,
        dump.vertices,
        triangles,
        codes,
        dump.params_hash,
    )
    .map_err(|e| Error::parse(source, e.to_string()))?;
    if surface.code_width != dump.code_width {
        return Err(Error::parse(
            source,
            "code width does not match the triangle count",
        ));
    }
    Ok(surface)
}

pub fn save_surface(surface: &Surface, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, surface_to_json(surface))?;
    Ok(())
}

pub fn load_surface(path: impl AsRef<Path>) -> Result<Surface> {
    let path = path.as_ref();
    surface_from_json(&read_text(path)?, &path.display().to_string())
}
