//! Damping laws `P`, composite Simpson rules and the per-step damping
//! coefficient.
//!
//! The nonlocal coefficient is `P(∫|Δu|²)`. On the grid the integral of
//! `V²` is taken with composite Simpson quadrature, which for fields
//! vanishing on the boundary is exactly `‖V‖_B²` in 1D and `‖V‖_F²` in 2D.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{self, EvalError, Expression, ParseError, Var};
use crate::math;
use crate::mesh::{GridFn1D, GridFn2D};

#[derive(Debug, Clone, PartialEq)]
enum LawKind {
    Constant(f64),
    Linear,
    Sqrt,
    Custom(Expression),
}

/// A damping law `P: [0, ∞) → (0, ∞)` with its claimed lower bound `p0` and,
/// optionally, a Lipschitz constant `L` bounding `P'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingLaw {
    name: String,
    kind: LawKind,
    p0: f64,
    lipschitz: Option<f64>,
}

impl DampingLaw {
    /// `P(z) = c`.
    pub fn constant(c: f64) -> Self {
        Self {
            name: alloc::format!("constant({c})"),
            kind: LawKind::Constant(c),
            p0: c,
            lipschitz: Some(0.0),
        }
    }

    /// `P(z) = 1 + z`.
    pub fn linear() -> Self {
        Self {
            name: "1+z".to_string(),
            kind: LawKind::Linear,
            p0: 1.0,
            lipschitz: Some(1.0),
        }
    }

    /// `P(z) = sqrt(1 + z)`.
    pub fn sqrt() -> Self {
        Self {
            name: "sqrt(1+z)".to_string(),
            kind: LawKind::Sqrt,
            p0: 1.0,
            lipschitz: Some(0.5),
        }
    }

    /// A law written as an expression in `z`. When `p0` is not given, `P(0)`
    /// is used.
    pub fn from_expression(
        source: &str,
        p0: Option<f64>,
        lipschitz: Option<f64>,
    ) -> Result<Self, LawError> {
        let e = expr::parse_with_aliases(source, &[("z", Var::X)]).map_err(LawError::Parse)?;
        if e.depends_on(Var::Y) || e.depends_on(Var::T) {
            return Err(LawError::ExtraVariables);
        }
        let p0 = match p0 {
            Some(p) => p,
            None => e.eval(0.0, 0.0, 0.0).map_err(LawError::Eval)?,
        };
        Ok(Self {
            name: source.trim().to_string(),
            kind: LawKind::Custom(e),
            p0,
            lipschitz,
        })
    }

    /// Resolves a registry name (`linear`, `sqrt`, `constant:<c>`) or, failing
    /// that, parses `spec` as an expression in `z`.
    pub fn lookup(spec: &str) -> Result<Self, LawError> {
        let s = spec.trim();
        match s {
            "linear" | "1+z" => return Ok(Self::linear()),
            "sqrt" | "sqrt(1+z)" => return Ok(Self::sqrt()),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("constant:") {
            let c: f64 = rest.trim().parse().map_err(|_| LawError::BadConstant)?;
            if !(c > 0.0) || !c.is_finite() {
                return Err(LawError::BadConstant);
            }
            return Ok(Self::constant(c));
        }
        Self::from_expression(s, None, None)
    }

    pub fn with_lower_bound(mut self, p0: f64) -> Self {
        self.p0 = p0;
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lower_bound(&self) -> f64 {
        self.p0
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// True when `P` does not depend on its argument.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            LawKind::Constant(_) => true,
            LawKind::Custom(e) => !e.depends_on(Var::X),
            _ => false,
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64, EvalError> {
        match &self.kind {
            LawKind::Constant(c) => Ok(*c),
            LawKind::Linear => Ok(1.0 + z),
            LawKind::Sqrt => Ok(math::sqrt(1.0 + z)),
            LawKind::Custom(e) => e.eval(z, 0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawError {
    Parse(ParseError),
    Eval(EvalError),
    ExtraVariables,
    BadConstant,
}

impl fmt::Display for LawError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawError::Parse(e) => write!(f, "damping law: {e}"),
            LawError::Eval(e) => write!(f, "damping law at z = 0: {e}"),
            LawError::ExtraVariables => f.write_str("damping law may only depend on z"),
            LawError::BadConstant => f.write_str("constant damping needs a positive number"),
        }
    }
}

impl core::error::Error for LawError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureError {
    /// Simpson panels need an odd node count of at least three.
    EvenNodeCount { len: usize },
    ShapeMismatch { expected: usize, got: usize },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::EvenNodeCount { len } => {
                write!(f, "Simpson rule needs an odd node count >= 3, got {len}")
            }
            QuadratureError::ShapeMismatch { expected, got } => {
                write!(f, "expected {expected} values, got {got}")
            }
        }
    }
}

impl core::error::Error for QuadratureError {}

fn check_odd(len: usize) -> Result<(), QuadratureError> {
    if len < 3 || len % 2 == 0 {
        Err(QuadratureError::EvenNodeCount { len })
    } else {
        Ok(())
    }
}

/// Composite Simpson rule `Σ (h/3)(v_{2j-2} + 4 v_{2j-1} + v_{2j})`.
pub fn simpson_1d(values: &[f64], h: f64) -> Result<f64, QuadratureError> {
    check_odd(values.len())?;
    let s: f64 = values
        .windows(3)
        .step_by(2)
        .map(|w| w[0] + 4.0 * w[1] + w[2])
        .sum();
    Ok(h / 3.0 * s)
}

/// Which 2D Simpson sum to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Simpson2DForm {
    /// Six-point sum per panel, using only the lower-left 2×2 block of each
    /// panel with weights (4, 8, 8, 16). Exact rearrangement of the full rule
    /// for integrands that vanish on the boundary.
    Reduced,
    /// Full tensor rule with (1, 4, 1) ⊗ (1, 4, 1) weights per panel.
    NinePoint,
}

/// Composite 2D Simpson rule on a row-major `nx × ny` array (`index = i*ny + j`).
pub fn simpson_2d(
    values: &[f64],
    nx: usize,
    ny: usize,
    h1: f64,
    h2: f64,
    form: Simpson2DForm,
) -> Result<f64, QuadratureError> {
    check_odd(nx)?;
    check_odd(ny)?;
    if values.len() != nx * ny {
        return Err(QuadratureError::ShapeMismatch {
            expected: nx * ny,
            got: values.len(),
        });
    }
    let at = |i: usize, j: usize| values[i * ny + j];
    let (j1, j2) = ((nx - 1) / 2, (ny - 1) / 2);
    let mut s = 0.0;
    match form {
        Simpson2DForm::Reduced => {
            for i in 1..=j1 {
                for j in 1..=j2 {
                    s += 4.0 * at(2 * i - 2, 2 * j - 2)
                        + 8.0 * at(2 * i - 2, 2 * j - 1)
                        + 8.0 * at(2 * i - 1, 2 * j - 2)
                        + 16.0 * at(2 * i - 1, 2 * j - 1);
                }
            }
        }
        Simpson2DForm::NinePoint => {
            const W: [f64; 3] = [1.0, 4.0, 1.0];
            for i in 1..=j1 {
                for j in 1..=j2 {
                    for (a, wa) in W.iter().enumerate() {
                        for (b, wb) in W.iter().enumerate() {
                            s += wa * wb * at(2 * i - 2 + a, 2 * j - 2 + b);
                        }
                    }
                }
            }
        }
    }
    Ok(h1 * h2 / 9.0 * s)
}

/// Simpson quadrature of `V²` on a 1D grid function; equals `‖V‖_B²`.
pub fn simpson_of_square_1d(v: &GridFn1D) -> f64 {
    let sq: Vec<f64> = v.values().iter().map(|x| x * x).collect();
    // Node count 2J+1 is always odd.
    simpson_1d(&sq, v.grid().h()).unwrap_or(0.0)
}

/// Simpson quadrature of `V²` on a 2D grid function; equals `‖V‖_F²`.
pub fn simpson_of_square_2d(v: &GridFn2D) -> f64 {
    let g = v.grid();
    let sq: Vec<f64> = v.values().iter().map(|x| x * x).collect();
    simpson_2d(&sq, g.nx(), g.ny(), g.h1(), g.h2(), Simpson2DForm::Reduced).unwrap_or(0.0)
}

/// `P(‖V‖_B²)`.
pub fn q_coefficient_1d(v: &GridFn1D, law: &DampingLaw) -> Result<f64, EvalError> {
    law.eval(v.norm_b_sq())
}

/// `P(‖V‖_F²)`.
pub fn q_coefficient_2d(v: &GridFn2D, law: &DampingLaw) -> Result<f64, EvalError> {
    law.eval(v.norm_f_sq())
}

/// One failed check of the law's assumptions at sampled arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum LawViolation {
    BelowLowerBound { z: f64, value: f64 },
    Decreasing { z0: f64, z1: f64 },
    LipschitzExceeded { z0: f64, z1: f64, slope: f64 },
    EvalFailed { z: f64, error: EvalError },
}

/// Outcome of [`validate_law`]; violations plus the empirical bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LawReport {
    pub z_max: f64,
    pub samples: usize,
    pub violations: Vec<LawViolation>,
    /// Smallest sampled value of `P`.
    pub min_value: f64,
    /// Largest sampled value of `P`, an empirical `p1` on `[0, z_max]`.
    pub max_value: f64,
    /// Largest sampled difference quotient.
    pub max_slope: f64,
}

impl LawReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `P` on `[0, z_max]` and reports violations of `P ≥ p0`,
/// monotone non-decrease and (when given) the Lipschitz bound.
pub fn validate_law(law: &DampingLaw, z_max: f64, samples: usize) -> LawReport {
    let samples = samples.max(2);
    let mut violations = Vec::new();
    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    let mut max_slope = f64::NEG_INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    // Relative slack for rounding in the comparisons.
    let eps = 1e-12;
    for k in 0..samples {
        let z = z_max * k as f64 / (samples - 1) as f64;
        let value = match law.eval(z) {
            Ok(v) => v,
            Err(error) => {
                violations.push(LawViolation::EvalFailed { z, error });
                prev = None;
                continue;
            }
        };
        min_value = min_value.min(value);
        max_value = max_value.max(value);
        if value < law.p0 * (1.0 - eps) {
            violations.push(LawViolation::BelowLowerBound { z, value });
        }
        if let Some((z0, v0)) = prev {
            let slope = (value - v0) / (z - z0);
            max_slope = max_slope.max(slope);
            if value < v0 - eps * v0.abs() {
                violations.push(LawViolation::Decreasing { z0, z1: z });
            }
            if let Some(l) = law.lipschitz {
                if slope.abs() > l * (1.0 + eps) + eps {
                    violations.push(LawViolation::LipschitzExceeded { z0, z1: z, slope });
                }
            }
        }
        prev = Some((z, value));
    }
    LawReport {
        z_max,
        samples,
        violations,
        min_value,
        max_value,
        max_slope,
    }
}
