//! Riemann invariants of the 1-D wave equation and the vertex coupling
//! rule, plus the small language of time signals and spatial profiles used
//! for forcing, initial data, and tracking targets.
//!
//! On an edge with speed `c`, the wave equation `y_tt = c^2 y_xx` is
//! diagonalized by the invariants
//!
//! ```text
//! w_minus = y_t + c y_x      (transported leftwards:  w_t - c w_x = 0)
//! w_plus  = y_t - c y_x      (transported rightwards: w_t + c w_x = 0)
//! ```
//!
//! At a vertex, each incident edge carries one outgoing invariant (the one
//! whose characteristic leaves the edge there) and one incoming invariant
//! (the one whose characteristic enters). Continuity of `y_t` and balance
//! of the weighted fluxes determine every incoming value from the outgoing
//! ones; see [`couple_node`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;

/// Convert time and space derivatives of `y` to Riemann invariants.
#[inline]
pub fn to_riemann(y_t: f64, y_x: f64, speed: f64) -> (f64, f64) {
    (y_t + speed * y_x, y_t - speed * y_x)
}

/// Recover time and space derivatives of `y` from Riemann invariants.
#[inline]
pub fn from_riemann(w_minus: f64, w_plus: f64, speed: f64) -> (f64, f64) {
    ((w_minus + w_plus) / 2.0, (w_minus - w_plus) / (2.0 * speed))
}

/// Incoming invariant values at a vertex, given the outgoing ones.
///
/// `speeds` are the wave speeds of the incident edges (always the original
/// speeds, even when some edges are frozen by a batch subset), `outflows`
/// the outgoing invariant of each incident edge at this vertex, and `ubar`
/// the boundary forcing (zero at uncontrolled vertices, minus the control
/// at controlled ones). Writes the incoming values into `inflows`.
///
/// The rule is the reflection
///
/// ```text
/// in_e = -out_e + (2 / c_tot) (sum_k c_k out_k - ubar),   c_tot = sum_k c_k,
/// ```
///
/// which is the unique choice making `in_e + out_e` (twice the common
/// time-derivative of `y`) equal across edges while the weighted flux
/// `sum_e c_e (out_e - in_e) / 2` equals `ubar`.
pub fn couple_node(speeds: &[f64], outflows: &[f64], ubar: f64, inflows: &mut [f64]) {
    debug_assert_eq!(speeds.len(), outflows.len());
    debug_assert_eq!(speeds.len(), inflows.len());
    let c_tot: f64 = speeds.iter().sum();
    debug_assert!(c_tot > 0.0, "vertex with non-positive total speed");
    let weighted: f64 = speeds.iter().zip(outflows).map(|(c, w)| c * w).sum();
    let common = 2.0 * (weighted - ubar) / c_tot;
    for (inflow, out) in inflows.iter_mut().zip(outflows) {
        *inflow = common - out;
    }
}

/// Residuals of the vertex conditions for a given set of invariant values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeResiduals {
    /// `|sum_e c_e (out_e - in_e) / 2 - ubar|`: flux balance defect.
    pub flux: f64,
    /// Largest pairwise difference of `in_e + out_e` across incident
    /// edges: continuity defect of the common `y_t` value.
    pub continuity: f64,
}

impl NodeResiduals {
    /// Maximum of the two residuals.
    pub fn max(&self) -> f64 {
        self.flux.max(self.continuity)
    }
}

/// Check how well `(outflows, inflows)` satisfy the vertex conditions.
pub fn verify_node_conditions(
    speeds: &[f64],
    outflows: &[f64],
    inflows: &[f64],
    ubar: f64,
) -> NodeResiduals {
    let flux: f64 = speeds
        .iter()
        .zip(outflows.iter().zip(inflows))
        .map(|(c, (out, inflow))| c * (out - inflow) / 2.0)
        .sum();
    let traces: Vec<f64> = outflows.iter().zip(inflows).map(|(o, i)| o + i).collect();
    let mut continuity = 0.0_f64;
    for (i, a) in traces.iter().enumerate() {
        for b in &traces[i + 1..] {
            continuity = continuity.max((a - b).abs());
        }
    }
    NodeResiduals {
        flux: (flux - ubar).abs(),
        continuity,
    }
}

/// A scalar function of time.
#[derive(Clone, Serialize, Deserialize)]
pub enum Signal {
    /// Identically zero.
    Zero,
    /// Constant value.
    Constant(f64),
    /// `sin(angular * t)`.
    Sine { angular: f64 },
    /// Values on the uniform grid `t_i = i * horizon / (len - 1)`,
    /// linearly interpolated in between.
    Samples { values: Vec<f64>, horizon: f64 },
}

impl Signal {
    /// Evaluate at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant(v) => *v,
            Signal::Sine { angular } => (angular * t).sin(),
            Signal::Samples { values, horizon } => {
                if values.len() == 1 {
                    return values[0];
                }
                let dt = horizon / (values.len() - 1) as f64;
                let s = (t / dt).clamp(0.0, (values.len() - 1) as f64);
                let i = (s.floor() as usize).min(values.len() - 2);
                let frac = s - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// Evaluate at grid time `n * dt`, indexing sampled signals exactly.
    pub fn value_at_step(&self, n: usize, dt: f64) -> f64 {
        match self {
            Signal::Samples { values, .. } => values[n],
            _ => self.value(n as f64 * dt),
        }
    }

    /// Parse a signal expression. Accepted forms: `zero` or `0`; a float
    /// literal (constant); `sin(A*t)` where `A` is a float literal or a
    /// multiple of pi such as `pi`, `4*pi`, `0.5*pi`.
    pub fn parse(text: &str) -> Result<Self, ValidationError> {
        parse_expression(text, "t").map(|parsed| match parsed {
            Parsed::Zero => Signal::Zero,
            Parsed::Constant(v) => Signal::Constant(v),
            Parsed::Sine(a) => Signal::Sine { angular: a },
        })
    }
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Zero => write!(f, "Zero"),
            Signal::Constant(v) => write!(f, "Constant({v})"),
            Signal::Sine { angular } => write!(f, "Sine(angular={angular})"),
            Signal::Samples { values, horizon } => {
                write!(f, "Samples(len={}, horizon={horizon})", values.len())
            }
        }
    }
}

/// A scalar function of the spatial coordinate along one edge.
#[derive(Clone)]
pub enum Profile {
    /// Identically zero.
    Zero,
    /// Constant value.
    Constant(f64),
    /// `sin(angular * x)`.
    Sine { angular: f64 },
    /// Arbitrary smooth function with its exact derivative, for tests and
    /// cross-validation against closed-form solutions.
    Analytic {
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Profile {
    /// Evaluate at position `x`.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant(v) => *v,
            Profile::Sine { angular } => (angular * x).sin(),
            Profile::Analytic { value, .. } => value(x),
        }
    }

    /// Evaluate the exact spatial derivative at `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Zero | Profile::Constant(_) => 0.0,
            Profile::Sine { angular } => angular * (angular * x).cos(),
            Profile::Analytic { derivative, .. } => derivative(x),
        }
    }

    /// Parse a profile expression; same grammar as [`Signal::parse`] with
    /// `x` as the variable.
    pub fn parse(text: &str) -> Result<Self, ValidationError> {
        parse_expression(text, "x").map(|parsed| match parsed {
            Parsed::Zero => Profile::Zero,
            Parsed::Constant(v) => Profile::Constant(v),
            Parsed::Sine(a) => Profile::Sine { angular: a },
        })
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "Zero"),
            Profile::Constant(v) => write!(f, "Constant({v})"),
            Profile::Sine { angular } => write!(f, "Sine(angular={angular})"),
            Profile::Analytic { .. } => write!(f, "Analytic"),
        }
    }
}

enum Parsed {
    Zero,
    Constant(f64),
    Sine(f64),
}

/// Parse `zero`, a float literal, or `sin(A*var)` with `A` a float or a
/// multiple of pi.
fn parse_expression(text: &str, var: &str) -> Result<Parsed, ValidationError> {
    let bad = || ValidationError::BadSignalExpression {
        text: text.to_string(),
    };
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad());
    }
    if s == "zero" {
        return Ok(Parsed::Zero);
    }
    if let Ok(v) = s.parse::<f64>() {
        return Ok(if v == 0.0 {
            Parsed::Zero
        } else {
            Parsed::Constant(v)
        });
    }
    let inner = s
        .strip_prefix("sin(")
        .and_then(|rest| rest.strip_suffix(')'))
        .ok_or_else(bad)?;
    let coefficient = inner
        .strip_suffix(&format!("*{var}"))
        .or_else(|| inner.strip_suffix(var))
        .ok_or_else(bad)?;
    let angular = parse_coefficient(coefficient).ok_or_else(bad)?;
    Ok(Parsed::Sine(angular))
}

/// Parse `""`, `"pi"`, `"2.5"`, `"4*pi"`, `"pi/3"`, or `"2*pi/3"`.
fn parse_coefficient(text: &str) -> Option<f64> {
    if text.is_empty() {
        return Some(1.0);
    }
    let (head, divisor) = match text.split_once('/') {
        Some((h, d)) => (h, d.parse::<f64>().ok()?),
        None => (text, 1.0),
    };
    let value = if head == "pi" {
        std::f64::consts::PI
    } else if let Some(factor) = head.strip_suffix("*pi") {
        factor.parse::<f64>().ok()? * std::f64::consts::PI
    } else {
        head.parse::<f64>().ok()?
    };
    Some(value / divisor)
}

/// A scalar function of time and one spatial coordinate: the tracking
/// target of the optimal control problem.
#[derive(Clone)]
pub enum TargetField {
    /// Constant in both time and space.
    Constant(f64),
    /// Arbitrary function `(t, x) -> value`, for tests.
    Analytic(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl TargetField {
    /// Evaluate at `(t, x)`.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        match self {
            TargetField::Constant(v) => *v,
            TargetField::Analytic(f) => f(t, x),
        }
    }
}

impl fmt::Debug for TargetField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetField::Constant(v) => write!(f, "Constant({v})"),
            TargetField::Analytic(_) => write!(f, "Analytic"),
        }
    }
}
