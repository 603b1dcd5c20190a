//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [problem]
//! dimension = 1
//! u0 = "sin(pi*x)"
//! law = sqrt
//! [grid]
//! J = 64
//! ```
//!
//! Keys are only valid inside their section, and a key may appear once.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use damped_eb_core::damping::LawError;
use damped_eb_core::expr::{self, Expression};
use damped_eb_core::harness::Profile;
use damped_eb_core::stepper1d::Problem1D;
use damped_eb_core::stepper2d::Problem2D;
use damped_eb_core::{DampingLaw, NormKind};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    TemporalStudy,
    SpatialStudy,
    EnergyStudy,
    ValidateLaw,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::TemporalStudy => "temporal-study",
            Command::SpatialStudy => "spatial-study",
            Command::EnergyStudy => "energy-study",
            Command::ValidateLaw => "validate-law",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "temporal-study" => Command::TemporalStudy,
            "spatial-study" => Command::SpatialStudy,
            "energy-study" => Command::EnergyStudy,
            "validate-law" => Command::ValidateLaw,
            other => return Err(format!("unknown command `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Problem,
    Grid,
    Time,
    Study,
    Output,
}

impl Section {
    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Problem => &[
                "dimension",
                "u0",
                "u1",
                "f",
                "lap_u0",
                "bilap_u0",
                "law",
                "law_lower_bound",
                "law_lipschitz",
            ],
            Section::Grid => &["J", "J2"],
            Section::Time => &["T", "N"],
            Section::Study => &[
                "steps", "intervals", "fixed_J", "fixed_N", "cg_tol", "z_max", "samples",
            ],
            Section::Output => &["dir", "norm"],
        }
    }
}

/// Raw `key = value` entry with its source line.
#[derive(Debug, Clone)]
struct Entry {
    section: Section,
    key: String,
    value: String,
    line: usize,
    quoted: bool,
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dimension: usize,
    pub j: Option<usize>,
    pub j2: Option<usize>,
    pub n: Option<usize>,
    pub t_final: f64,
    pub u0: Option<Expression>,
    pub u1: Expression,
    pub f: Expression,
    pub lap_u0: Option<Expression>,
    pub bilap_u0: Option<Expression>,
    pub law: DampingLaw,
    /// Step counts `N` of a temporal study.
    pub steps: Option<Vec<usize>>,
    /// Interval counts `2J` of a spatial study.
    pub intervals: Option<Vec<usize>>,
    /// `J` held fixed by a temporal study.
    pub study_j: Option<usize>,
    /// `N` held fixed by a spatial study.
    pub study_n: Option<usize>,
    pub cg_tol: Option<f64>,
    pub z_max: f64,
    pub samples: usize,
    pub out_dir: Option<PathBuf>,
    pub norm: NormKind,
    pub profile: Profile,
    /// SHA-256 of the file contents, hex encoded.
    pub hash: String,
}

fn config_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut section = None;
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = strip_comment(raw).trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, "unterminated section header"))?;
            section = Some(match name.trim() {
                "problem" => Section::Problem,
                "grid" => Section::Grid,
                "time" => Section::Time,
                "study" => Section::Study,
                "output" => Section::Output,
                other => return Err(config_err(line, format!("unknown section [{other}]"))),
            });
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| config_err(line, "expected `key = value`"))?;
        let key = key.trim();
        let section =
            section.ok_or_else(|| config_err(line, format!("key `{key}` outside of any section")))?;
        if !section.keys().contains(&key) {
            return Err(config_err(
                line,
                format!("unknown key `{key}` in [{}]", section_name(section)),
            ));
        }
        if let Some(prev) = entries.iter().find(|e| e.section == section && e.key == key) {
            return Err(config_err(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        let value = value.trim();
        let (value, quoted) = match value.strip_prefix('"') {
            Some(rest) => (
                rest.strip_suffix('"')
                    .ok_or_else(|| config_err(line, "unterminated string"))?,
                true,
            ),
            None => (value, false),
        };
        entries.push(Entry {
            section,
            key: key.to_string(),
            value: value.to_string(),
            line,
            quoted,
        });
    }
    Ok(entries)
}

/// Drops a `#` comment that is not inside a quoted value.
fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn section_name(s: Section) -> &'static str {
    match s {
        Section::Problem => "problem",
        Section::Grid => "grid",
        Section::Time => "time",
        Section::Study => "study",
        Section::Output => "output",
    }
}

struct Entries(Vec<Entry>);

impl Entries {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.0.iter().find(|e| e.key == key)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|e| {
                e.value
                    .parse::<T>()
                    .map_err(|err| config_err(e.line, format!("invalid value for `{key}`: {err}")))
            })
            .transpose()
    }

    fn positive_int(&self, key: &str) -> Result<Option<usize>, CliError> {
        let v: Option<usize> = self.parse(key)?;
        if v == Some(0) {
            return Err(config_err(self.get(key).unwrap().line, format!("`{key}` must be positive")));
        }
        Ok(v)
    }

    fn positive_float(&self, key: &str) -> Result<Option<f64>, CliError> {
        let v: Option<f64> = self.parse(key)?;
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(config_err(
                self.get(key).unwrap().line,
                format!("`{key}` must be positive"),
            )),
            _ => Ok(v),
        }
    }

    fn expression(&self, key: &str) -> Result<Option<Expression>, CliError> {
        self.get(key)
            .map(|e| {
                expr::parse(&e.value)
                    .map_err(|err| config_err(e.line, format!("`{key}`: {err}")))
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        self.get(key)
            .map(|e| {
                let items: Result<Vec<usize>, _> = e
                    .value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect();
                match items {
                    Ok(v) if !v.is_empty() && v.iter().all(|&x| x > 0) => Ok(v),
                    _ => Err(config_err(
                        e.line,
                        format!("`{key}` must be a comma-separated list of positive integers"),
                    )),
                }
            })
            .transpose()
    }
}

fn law_from(entries: &Entries) -> Result<DampingLaw, CliError> {
    let Some(e) = entries.get("law") else {
        return Ok(DampingLaw::sqrt());
    };
    let mut law = DampingLaw::lookup(&e.value).map_err(|err: LawError| config_err(e.line, format!("`law`: {err}")))?;
    if let Some(p0) = entries.parse::<f64>("law_lower_bound")? {
        law = law.with_lower_bound(p0);
    }
    if let Some(l) = entries.positive_float("law_lipschitz")? {
        law = law.with_lipschitz(l);
    }
    Ok(law)
}

fn parse_norm(entries: &Entries, dimension: usize) -> Result<NormKind, CliError> {
    let Some(e) = entries.get("norm") else {
        return Ok(NormKind::L2);
    };
    let kind = match e.value.as_str() {
        "L2" | "l2" => NormKind::L2,
        "inf" | "Inf" | "max" => NormKind::Inf,
        "A" => NormKind::A,
        "B" => NormKind::B,
        "E" => NormKind::E,
        "F" => NormKind::F,
        other => return Err(config_err(e.line, format!("unknown norm `{other}`"))),
    };
    let valid = match kind {
        NormKind::L2 | NormKind::Inf => true,
        NormKind::A | NormKind::B => dimension == 1,
        NormKind::E | NormKind::F => dimension == 2,
    };
    if !valid {
        return Err(config_err(
            e.line,
            format!("norm `{}` is not defined for dimension {dimension}", e.value),
        ));
    }
    Ok(kind)
}

impl RunConfig {
    pub fn parse(text: &str, profile: Profile) -> Result<Self, CliError> {
        let entries = Entries(tokenize(text)?);
        for e in &entries.0 {
            let expression_key = matches!(e.key.as_str(), "u0" | "u1" | "f" | "lap_u0" | "bilap_u0");
            if expression_key && !e.quoted {
                return Err(config_err(e.line, format!("expression `{}` must be quoted", e.key)));
            }
        }
        let dimension = entries.parse::<usize>("dimension")?.unwrap_or(1);
        if dimension != 1 && dimension != 2 {
            let line = entries.get("dimension").map_or(0, |e| e.line);
            return Err(config_err(line, "`dimension` must be 1 or 2"));
        }
        if dimension == 1 {
            if let Some(e) = entries.get("J2") {
                return Err(config_err(e.line, "`J2` is only valid in 2D"));
            }
        }
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Self {
            dimension,
            j: entries.positive_int("J")?,
            j2: entries.positive_int("J2")?,
            n: entries.positive_int("N")?,
            t_final: entries.positive_float("T")?.unwrap_or(1.0),
            u0: entries.expression("u0")?,
            u1: entries.expression("u1")?.unwrap_or(Expression::Const(0.0)),
            f: entries.expression("f")?.unwrap_or(Expression::Const(0.0)),
            lap_u0: entries.expression("lap_u0")?,
            bilap_u0: entries.expression("bilap_u0")?,
            law: law_from(&entries)?,
            steps: entries.list("steps")?,
            intervals: entries.list("intervals")?,
            study_j: entries.positive_int("fixed_J")?,
            study_n: entries.positive_int("fixed_N")?,
            cg_tol: entries.positive_float("cg_tol")?,
            z_max: entries.positive_float("z_max")?.unwrap_or(100.0),
            samples: entries.positive_int("samples")?.unwrap_or(1000),
            out_dir: entries.get("dir").map(|e| PathBuf::from(&e.value)),
            norm: parse_norm(&entries, dimension)?,
            profile,
            hash,
        })
    }

    pub fn load(path: &Path, profile: Profile) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, profile)
    }

    fn require_u0(&self) -> Result<Expression, CliError> {
        self.u0.clone().ok_or(CliError::MissingKey("u0"))
    }

    pub fn problem_1d(&self) -> Result<Problem1D, CliError> {
        let p = Problem1D::new(self.require_u0()?, self.u1.clone(), self.f.clone(), self.law.clone(), self.t_final)?;
        Ok(p.with_analytic_laplacians(self.lap_u0.clone(), self.bilap_u0.clone())?)
    }

    pub fn problem_2d(&self) -> Result<Problem2D, CliError> {
        let p = Problem2D::new(self.require_u0()?, self.u1.clone(), self.f.clone(), self.law.clone(), self.t_final)?;
        Ok(p.with_analytic_laplacians(self.lap_u0.clone(), self.bilap_u0.clone())?)
    }

    pub fn require_j(&self) -> Result<usize, CliError> {
        self.j.ok_or(CliError::MissingKey("J"))
    }

    pub fn require_n(&self) -> Result<usize, CliError> {
        self.n.ok_or(CliError::MissingKey("N"))
    }

    /// True when the forcing is the literal constant zero.
    pub fn unforced(&self) -> bool {
        self.f.is_literal_zero()
    }
}
