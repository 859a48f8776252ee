//! Per-node nonlinearities `f(k, t)`, their antiderivatives
//! `F(k, t) = integral of f(k, .) from 0 to t`, and the growth / supremum
//! queries the existence criteria are built on.
//!
//! The canonical representation is a list of signed power terms per interior
//! node, which keeps antiderivatives, derivatives, and tail asymptotics in
//! closed form. Supremum queries enumerate the sign changes of `f` (every
//! interior maximum of `F` sits at one), so their results are exact up to
//! root polishing rather than sampling accuracy. A black-box node can be
//! substituted for experiments; everything still works, but the affected
//! queries degrade to sampling and say so via their `exact` flag.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NonlinearityError {
    #[error("need at least one interior node")]
    Empty,
    #[error("node {node}, term {index}: {reason}")]
    InvalidTerm {
        node: usize,
        index: usize,
        reason: String,
    },
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("growth exponent for node {node} must be finite and >= 0, got {value}")]
    BadGrowthExponent { node: usize, value: f64 },
    #[error("{what}[{index}] must be a finite positive scale, got {value}")]
    NonpositiveScale {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{what}[{index}] must be finite, got {value}")]
    NonFiniteCoefficient {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("bad region: {0}")]
    BadRegion(String),
    #[error("node index {k} out of range 1..={t}")]
    NodeOutOfRange { k: usize, t: usize },
}

/// Exponent of a single power term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Power {
    /// `(t - shift)^n`.
    Integer(u32),
    /// `sign(t - shift) * |t - shift|^gamma`, odd around the shift.
    Signed { gamma: f64 },
}

/// One power term `coef * (t - shift)^power`.
///
/// With `Power::Signed { gamma }` the power is taken as
/// `sign(t - shift) * |t - shift|^gamma`, which keeps the term continuous
/// for every real `gamma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    #[serde(rename = "coef")]
    pub coefficient: f64,
    #[serde(default)]
    pub shift: f64,
    pub power: Power,
}

impl Term {
    pub fn poly(coefficient: f64, shift: f64, n: u32) -> Self {
        Term {
            coefficient,
            shift,
            power: Power::Integer(n),
        }
    }

    pub fn signed(coefficient: f64, shift: f64, gamma: f64) -> Self {
        Term {
            coefficient,
            shift,
            power: Power::Signed { gamma },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = t - self.shift;
        match self.power {
            Power::Integer(n) => self.coefficient * x.powi(n as i32),
            Power::Signed { gamma } => {
                if x == 0.0 {
                    0.0
                } else {
                    self.coefficient * x.signum() * x.abs().powf(gamma)
                }
            }
        }
    }

    fn eval_derivative(&self, t: f64) -> f64 {
        let x = t - self.shift;
        match self.power {
            Power::Integer(0) => 0.0,
            Power::Integer(n) => self.coefficient * n as f64 * x.powi(n as i32 - 1),
            Power::Signed { gamma } => self.coefficient * gamma * x.abs().powf(gamma - 1.0),
        }
    }

    /// Antiderivative without normalization; the node-level `F` subtracts the
    /// value at 0 term by term.
    fn antiderivative(&self, t: f64) -> f64 {
        let x = t - self.shift;
        match self.power {
            Power::Integer(n) => self.coefficient * x.powi(n as i32 + 1) / (n as f64 + 1.0),
            Power::Signed { gamma } => self.coefficient * x.abs().powf(gamma + 1.0) / (gamma + 1.0),
        }
    }

    fn degree(&self) -> f64 {
        match self.power {
            Power::Integer(n) => n as f64,
            Power::Signed { gamma } => gamma,
        }
    }

    fn validate(&self, node: usize, index: usize) -> Result<(), NonlinearityError> {
        let bad = |reason: String| NonlinearityError::InvalidTerm {
            node,
            index,
            reason,
        };
        if !self.coefficient.is_finite() {
            return Err(bad(format!("coefficient {} not finite", self.coefficient)));
        }
        if !self.shift.is_finite() {
            return Err(bad(format!("shift {} not finite", self.shift)));
        }
        if let Power::Signed { gamma } = self.power {
            if !gamma.is_finite() || gamma <= 0.0 {
                return Err(bad(format!("gamma must be finite and > 0, got {gamma}")));
            }
        }
        Ok(())
    }
}

/// Black-box scalar nonlinearity for a single node. Antiderivatives are
/// recovered by adaptive quadrature and supremum queries fall back to
/// sampling; results that go through this path carry `exact = false`.
pub trait ScalarField: Send + Sync {
    fn eval(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Send + Sync> ScalarField for F {
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

#[derive(Clone)]
enum NodeF {
    Terms(Vec<Term>),
    BlackBox(Arc<dyn ScalarField>),
}

impl fmt::Debug for NodeF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeF::Terms(terms) => f.debug_tuple("Terms").field(terms).finish(),
            NodeF::BlackBox(_) => f.write_str("BlackBox(..)"),
        }
    }
}

/// Per-node growth bound coefficients: `scale(k) * |t|^q(k) + offset(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCoeffs {
    pub scale: Vec<f64>,
    pub offset: Vec<f64>,
}

/// Which side of `|f(k, t)|` a growth bound is claimed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSide {
    /// `|f(k, t)| <= scale(k) |t|^q(k) + offset(k)`
    Upper,
    /// `|f(k, t)| >= scale(k) |t|^q(k) + offset(k)`
    Lower,
}

/// A claimed growth bound to check against the stored nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub side: BoundSide,
    pub scale: Vec<f64>,
    /// `None` for the pure forms `scale(k) |t|^q(k)`.
    pub offset: Option<Vec<f64>>,
}

/// Sampling grid for growth checks: symmetric in `t`, with `t = 0` always
/// tested first and a geometric tail probe beyond `t_max`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t_max: 1e3,
            points: 100_000,
        }
    }
}

/// Outcome of a growth check. `HoldsOnGrid` is exactly that: no violation on
/// the sampled grid or the asymptotic probes, not a proof.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum GrowthVerdict {
    HoldsOnGrid {
        points_checked: usize,
    },
    Violated {
        node: usize,
        t: f64,
        magnitude: f64,
        bound: f64,
    },
}

/// Region for supremum queries on `F(k, .)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "region")]
pub enum Region {
    /// `|t| <= radius`
    Ball {
        radius: f64,
    },
    /// `inner <= |t| <= outer`
    Annulus {
        inner: f64,
        outer: f64,
    },
    AllReals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum SupValue {
    Finite(f64),
    PlusInfinity,
}

impl SupValue {
    pub fn as_finite(&self) -> Option<f64> {
        match self {
            SupValue::Finite(v) => Some(*v),
            SupValue::PlusInfinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SupValue::PlusInfinity)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupOutcome {
    pub value: SupValue,
    /// Where the supremum is attained; `None` when it is not (infinite case
    /// or sampled fallback without a clear winner).
    pub argmax: Option<f64>,
    /// True when the result came from the closed-form critical-point
    /// enumeration rather than a sampling fallback.
    pub exact: bool,
}

/// Sign decision for `limsup_{|t| -> inf} F(k, t) / |t|^exponent`.
#[derive(Debug, Clone, Serialize)]
pub struct LimsupReport {
    pub nonpositive: bool,
    /// A concrete `t` with `F(k, t) / |t|^exponent` above tolerance, when the
    /// limsup is positive.
    pub witness: Option<f64>,
    pub exact: bool,
}

/// Leading asymptotic `coefficient * |t|^degree` of a function on one tail.
#[derive(Debug, Clone, Copy)]
struct Leading {
    degree: f64,
    coefficient: f64,
}

#[derive(Debug, Clone, Copy)]
struct TailPair {
    /// `t -> +inf`
    plus: Option<Leading>,
    /// `t -> -inf`, in powers of `|t|`
    minus: Option<Leading>,
    exact: bool,
}

/// The nonlinearity `f(k, t)` for interior nodes `k = 1, ..., T`, with its
/// growth exponents `q(k)` and optional stored growth-bound coefficients.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    nodes: Vec<NodeF>,
    q: Vec<f64>,
    upper: Option<GrowthCoeffs>,
    lower: Option<GrowthCoeffs>,
    pure_upper: Option<Vec<f64>>,
    pure_lower: Option<Vec<f64>>,
}

impl Nonlinearity {
    /// Builds a term-list nonlinearity and infers each `q(k)` as the largest
    /// term degree at that node (0 for an identically zero node).
    pub fn from_terms(terms: Vec<Vec<Term>>) -> Result<Self, NonlinearityError> {
        let q = terms
            .iter()
            .map(|list| {
                list.iter()
                    .filter(|term| term.coefficient != 0.0)
                    .map(Term::degree)
                    .fold(0.0f64, f64::max)
            })
            .collect();
        Self::from_terms_with_growth(terms, q)
    }

    /// Same, but with the growth exponents given explicitly.
    pub fn from_terms_with_growth(
        terms: Vec<Vec<Term>>,
        q: Vec<f64>,
    ) -> Result<Self, NonlinearityError> {
        if terms.is_empty() {
            return Err(NonlinearityError::Empty);
        }
        for (node, list) in terms.iter().enumerate() {
            for (index, term) in list.iter().enumerate() {
                term.validate(node + 1, index)?;
            }
        }
        if q.len() != terms.len() {
            return Err(NonlinearityError::LengthMismatch {
                what: "growth exponents q",
                expected: terms.len(),
                got: q.len(),
            });
        }
        for (node, &value) in q.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(NonlinearityError::BadGrowthExponent {
                    node: node + 1,
                    value,
                });
            }
        }
        Ok(Nonlinearity {
            nodes: terms.into_iter().map(NodeF::Terms).collect(),
            q,
            upper: None,
            lower: None,
            pure_upper: None,
            pure_lower: None,
        })
    }

    /// Replaces node `k` with a black-box function. The growth exponent for
    /// the node must be supplied since it can no longer be inferred.
    pub fn with_black_box_node(
        mut self,
        k: usize,
        f: Arc<dyn ScalarField>,
        q_k: f64,
    ) -> Result<Self, NonlinearityError> {
        self.check_node(k)?;
        if !q_k.is_finite() || q_k < 0.0 {
            return Err(NonlinearityError::BadGrowthExponent {
                node: k,
                value: q_k,
            });
        }
        self.nodes[k - 1] = NodeF::BlackBox(f);
        self.q[k - 1] = q_k;
        Ok(self)
    }

    /// Stores `|f(k,t)| <= scale(k)|t|^q(k) + offset(k)` coefficients.
    pub fn with_upper_growth_bound(
        mut self,
        scale: Vec<f64>,
        offset: Vec<f64>,
    ) -> Result<Self, NonlinearityError> {
        self.upper = Some(self.coeffs_checked("upper growth bound", scale, offset)?);
        Ok(self)
    }

    /// Stores `|f(k,t)| >= scale(k)|t|^q(k) + offset(k)` coefficients.
    pub fn with_lower_growth_bound(
        mut self,
        scale: Vec<f64>,
        offset: Vec<f64>,
    ) -> Result<Self, NonlinearityError> {
        self.lower = Some(self.coeffs_checked("lower growth bound", scale, offset)?);
        Ok(self)
    }

    /// Stores `|f(k,t)| <= scale(k)|t|^q(k)` coefficients.
    pub fn with_pure_upper_bound(mut self, scale: Vec<f64>) -> Result<Self, NonlinearityError> {
        self.pure_upper = Some(self.scale_checked("pure upper bound", scale)?);
        Ok(self)
    }

    /// Stores `|f(k,t)| >= scale(k)|t|^q(k)` coefficients.
    pub fn with_pure_lower_bound(mut self, scale: Vec<f64>) -> Result<Self, NonlinearityError> {
        self.pure_lower = Some(self.scale_checked("pure lower bound", scale)?);
        Ok(self)
    }

    fn coeffs_checked(
        &self,
        what: &'static str,
        scale: Vec<f64>,
        offset: Vec<f64>,
    ) -> Result<GrowthCoeffs, NonlinearityError> {
        let scale = self.scale_checked(what, scale)?;
        if offset.len() != self.t() {
            return Err(NonlinearityError::LengthMismatch {
                what,
                expected: self.t(),
                got: offset.len(),
            });
        }
        for (index, &value) in offset.iter().enumerate() {
            if !value.is_finite() {
                return Err(NonlinearityError::NonFiniteCoefficient { what, index, value });
            }
        }
        Ok(GrowthCoeffs { scale, offset })
    }

    fn scale_checked(
        &self,
        what: &'static str,
        scale: Vec<f64>,
    ) -> Result<Vec<f64>, NonlinearityError> {
        if scale.len() != self.t() {
            return Err(NonlinearityError::LengthMismatch {
                what,
                expected: self.t(),
                got: scale.len(),
            });
        }
        for (index, &value) in scale.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(NonlinearityError::NonpositiveScale { what, index, value });
            }
        }
        Ok(scale)
    }

    pub fn t(&self) -> usize {
        self.nodes.len()
    }

    pub fn growth_exponents(&self) -> &[f64] {
        &self.q
    }

    pub fn q_minus(&self) -> f64 {
        self.q.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn q_plus(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn upper_growth_bound(&self) -> Option<&GrowthCoeffs> {
        self.upper.as_ref()
    }

    pub fn lower_growth_bound(&self) -> Option<&GrowthCoeffs> {
        self.lower.as_ref()
    }

    pub fn pure_upper_bound(&self) -> Option<&[f64]> {
        self.pure_upper.as_deref()
    }

    pub fn pure_lower_bound(&self) -> Option<&[f64]> {
        self.pure_lower.as_deref()
    }

    /// The terms at node `k`, or `None` for a black-box node.
    pub fn terms(&self, k: usize) -> Option<&[Term]> {
        match &self.nodes[k - 1] {
            NodeF::Terms(list) => Some(list),
            NodeF::BlackBox(_) => None,
        }
    }

    fn check_node(&self, k: usize) -> Result<(), NonlinearityError> {
        if k == 0 || k > self.t() {
            Err(NonlinearityError::NodeOutOfRange { k, t: self.t() })
        } else {
            Ok(())
        }
    }

    /// `f(k, t)` for `k = 1, ..., T`.
    pub fn eval_f(&self, k: usize, t: f64) -> f64 {
        match &self.nodes[k - 1] {
            NodeF::Terms(list) => list.iter().map(|term| term.eval(t)).sum(),
            NodeF::BlackBox(f) => f.eval(t),
        }
    }

    /// `F(k, t)`, the antiderivative of `f(k, .)` normalized so `F(k, 0) = 0`.
    ///
    /// Term lists integrate in closed form, term by term as
    /// `A(t) - A(0)`, so exact cancellations at symmetric arguments survive
    /// in floating point. Black-box nodes integrate by adaptive quadrature to
    /// absolute tolerance `1e-10`.
    pub fn eval_big_f(&self, k: usize, t: f64) -> f64 {
        match &self.nodes[k - 1] {
            NodeF::Terms(list) => list
                .iter()
                .map(|term| term.antiderivative(t) - term.antiderivative(0.0))
                .sum(),
            NodeF::BlackBox(f) => adaptive_simpson(|s| f.eval(s), 0.0, t, 1e-10),
        }
    }

    fn eval_f_derivative(&self, k: usize, t: f64) -> f64 {
        match &self.nodes[k - 1] {
            NodeF::Terms(list) => list.iter().map(|term| term.eval_derivative(t)).sum(),
            NodeF::BlackBox(f) => {
                let h = 1e-7 * t.abs().max(1.0);
                (f.eval(t + h) - f.eval(t - h)) / (2.0 * h)
            }
        }
    }

    /// Checks a claimed growth bound on `|f(k, t)|` for every node.
    ///
    /// `t = 0` is tested first, then a symmetric grid up to `grid.t_max`,
    /// then a geometric probe outward (so an asymptotic violation visible in
    /// the term degrees still produces a concrete witness). The first
    /// violation in that order is returned.
    pub fn check_growth(
        &self,
        bound: &GrowthBound,
        grid: &GridSpec,
    ) -> Result<GrowthVerdict, NonlinearityError> {
        let scale = self.scale_checked("growth bound scale", bound.scale.clone())?;
        let offset = match &bound.offset {
            Some(off) => {
                self.coeffs_checked("growth bound", scale.clone(), off.clone())?
                    .offset
            }
            None => vec![0.0; self.t()],
        };
        if grid.points < 2 || !grid.t_max.is_finite() || grid.t_max <= 0.0 {
            return Err(NonlinearityError::BadRegion(format!(
                "grid needs t_max > 0 and at least 2 points, got t_max {} points {}",
                grid.t_max, grid.points
            )));
        }

        // Comparison slack: |f| and the bound are evaluated through different
        // power routines, so exact-equality hypotheses (|t^3| <= |t|^3) must
        // not trip on 1-ulp disagreements.
        let violated = |magnitude: f64, rhs: f64| magnitude > rhs * (1.0 + 1e-9) + 1e-12;

        let mut points_checked = 0usize;
        for k in 1..=self.t() {
            let q_k = self.q[k - 1];
            let rhs_at = |t: f64| scale[k - 1] * t.abs().powf(q_k) + offset[k - 1];
            let lhs_at = |t: f64| self.eval_f(k, t).abs();
            let check = |t: f64| -> Option<GrowthVerdict> {
                let magnitude = lhs_at(t);
                let bound_value = rhs_at(t);
                let broken = match bound.side {
                    BoundSide::Upper => violated(magnitude, bound_value),
                    BoundSide::Lower => violated(bound_value, magnitude),
                };
                broken.then_some(GrowthVerdict::Violated {
                    node: k,
                    t,
                    magnitude,
                    bound: bound_value,
                })
            };

            points_checked += 1;
            if let Some(v) = check(0.0) {
                return Ok(v);
            }
            for i in 0..grid.points {
                let t = -grid.t_max + 2.0 * grid.t_max * i as f64 / (grid.points - 1) as f64;
                points_checked += 1;
                if let Some(v) = check(t) {
                    return Ok(v);
                }
            }
            // geometric probe toward |t| -> inf
            let mut t = grid.t_max;
            for _ in 0..30 {
                t *= 2.0;
                if !t.is_finite() {
                    break;
                }
                points_checked += 2;
                if let Some(v) = check(t).or_else(|| check(-t)) {
                    return Ok(v);
                }
            }
        }
        Ok(GrowthVerdict::HoldsOnGrid { points_checked })
    }

    /// Supremum of `F(k, .)` over a region.
    ///
    /// For term lists: every interior local maximum of `F` lies at a sign
    /// change of `f`, so the candidates are the polished sign-change roots
    /// plus the region endpoints; over all of `R` the tail asymptotics decide
    /// finiteness first. Black-box nodes and term lists whose leading tail
    /// coefficients cancel inconclusively fall back to dense sampling and
    /// report `exact = false`.
    pub fn sup_big_f_on(&self, k: usize, region: Region) -> Result<SupOutcome, NonlinearityError> {
        self.check_node(k)?;
        let intervals: Vec<(f64, f64)> = match region {
            Region::Ball { radius } => {
                if !radius.is_finite() || radius <= 0.0 {
                    return Err(NonlinearityError::BadRegion(format!(
                        "ball radius must be finite and > 0, got {radius}"
                    )));
                }
                vec![(-radius, radius)]
            }
            Region::Annulus { inner, outer } => {
                if !(inner.is_finite() && outer.is_finite()) || inner < 0.0 || outer <= 0.0 {
                    return Err(NonlinearityError::BadRegion(format!(
                        "annulus needs finite 0 <= inner <= outer, outer > 0, got [{inner}, {outer}]"
                    )));
                }
                if inner > outer {
                    return Err(NonlinearityError::BadRegion(format!(
                        "annulus needs inner <= outer, got [{inner}, {outer}]"
                    )));
                }
                if inner == 0.0 {
                    vec![(-outer, outer)]
                } else {
                    vec![(-outer, -inner), (inner, outer)]
                }
            }
            Region::AllReals => return Ok(self.sup_big_f_over_reals(k)),
        };

        match &self.nodes[k - 1] {
            NodeF::Terms(_) => {
                let (value, argmax) = self.sup_on_intervals(k, &intervals);
                Ok(SupOutcome {
                    value: SupValue::Finite(value),
                    argmax: Some(argmax),
                    exact: true,
                })
            }
            NodeF::BlackBox(_) => {
                let (value, argmax) = self.sampled_sup_on_intervals(k, &intervals);
                Ok(SupOutcome {
                    value: SupValue::Finite(value),
                    argmax: Some(argmax),
                    exact: false,
                })
            }
        }
    }

    /// Sign of `limsup_{|t| -> inf} F(k, t) / |t|^exponent`.
    pub fn limsup_ratio(&self, k: usize, exponent: f64) -> Result<LimsupReport, NonlinearityError> {
        self.check_node(k)?;
        assert!(
            exponent.is_finite() && exponent > 0.0,
            "limsup exponent must be finite and > 0, got {exponent}"
        );
        if let NodeF::Terms(_) = &self.nodes[k - 1] {
            let tails = self.big_f_tails(k);
            if tails.exact {
                let mut positive_coefficient: Option<f64> = None;
                for leading in [tails.plus, tails.minus].into_iter().flatten() {
                    if leading.degree > exponent + DEGREE_EPS && leading.coefficient > 0.0 {
                        positive_coefficient = Some(f64::INFINITY);
                    } else if (leading.degree - exponent).abs() <= DEGREE_EPS
                        && leading.coefficient > 0.0
                    {
                        positive_coefficient = Some(
                            positive_coefficient
                                .map_or(leading.coefficient, |c| c.max(leading.coefficient)),
                        );
                    }
                }
                return Ok(match positive_coefficient {
                    None => LimsupReport {
                        nonpositive: true,
                        witness: None,
                        exact: true,
                    },
                    Some(limit) => {
                        let tol = if limit.is_finite() {
                            (limit / 2.0).min(1e-9)
                        } else {
                            1e-9
                        };
                        LimsupReport {
                            nonpositive: false,
                            witness: self.ratio_witness(k, exponent, tol),
                            exact: true,
                        }
                    }
                });
            }
        }
        // sampled fallback: black-box node or inconclusive tail cancellation
        let witness = self.ratio_witness(k, exponent, 1e-9);
        Ok(LimsupReport {
            nonpositive: witness.is_none(),
            witness,
            exact: false,
        })
    }

    fn ratio_witness(&self, k: usize, exponent: f64, tol: f64) -> Option<f64> {
        let mut t = 1.0f64;
        for _ in 0..120 {
            for s in [t, -t] {
                if self.eval_big_f(k, s) / t.powf(exponent) > tol {
                    return Some(s);
                }
            }
            t *= 2.0;
            if !t.is_finite() {
                break;
            }
        }
        None
    }

    fn sup_big_f_over_reals(&self, k: usize) -> SupOutcome {
        if let NodeF::Terms(terms) = &self.nodes[k - 1] {
            let tails = self.big_f_tails(k);
            if tails.exact {
                let unbounded = [tails.plus, tails.minus]
                    .into_iter()
                    .flatten()
                    .any(|leading| leading.coefficient > 0.0);
                if unbounded {
                    return SupOutcome {
                        value: SupValue::PlusInfinity,
                        argmax: None,
                        exact: true,
                    };
                }
                // Both tails fall to -inf (or the node is identically zero),
                // so the supremum sits at a sign change of f within the
                // radius past which the leading terms dominate.
                let radius = no_root_radius(terms);
                let (value, argmax) = self.sup_on_intervals(k, &[(-radius, radius)]);
                return SupOutcome {
                    value: SupValue::Finite(value),
                    argmax: Some(argmax),
                    exact: true,
                };
            }
        }
        // sampled fallback
        let mut best = (self.eval_big_f(k, 0.0), 0.0);
        let mut t = 1e-3f64;
        while t <= 1e8 {
            for s in [t, -t] {
                let v = self.eval_big_f(k, s);
                if v > best.0 {
                    best = (v, s);
                }
            }
            t *= 1.05;
        }
        if best.0 > 1e12 {
            SupOutcome {
                value: SupValue::PlusInfinity,
                argmax: None,
                exact: false,
            }
        } else {
            let (value, argmax) = self.sampled_sup_on_intervals(
                k,
                &[(best.1.abs() * -4.0 - 1.0, best.1.abs() * 4.0 + 1.0)],
            );
            SupOutcome {
                value: SupValue::Finite(value),
                argmax: Some(argmax),
                exact: false,
            }
        }
    }

    /// Max of `F(k, .)` over closed intervals via sign-change enumeration.
    fn sup_on_intervals(&self, k: usize, intervals: &[(f64, f64)]) -> (f64, f64) {
        let mut best: Option<(f64, f64)> = None;
        for &(lo, hi) in intervals {
            let mut candidates = vec![lo, hi];
            candidates.extend(self.sign_change_roots(k, lo, hi));
            for t in candidates {
                let v = self.eval_big_f(k, t);
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, t));
                }
            }
        }
        best.expect("at least one interval endpoint")
    }

    fn sampled_sup_on_intervals(&self, k: usize, intervals: &[(f64, f64)]) -> (f64, f64) {
        let mut best: Option<(f64, f64)> = None;
        for &(lo, hi) in intervals {
            let n = 20_000;
            let mut samples = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let t = lo + (hi - lo) * i as f64 / n as f64;
                samples.push((t, self.eval_big_f(k, t)));
            }
            for i in 0..=n {
                let (t, v) = samples[i];
                let refined = if i > 0 && i < n && v >= samples[i - 1].1 && v >= samples[i + 1].1 {
                    golden_max(
                        |s| self.eval_big_f(k, s),
                        samples[i - 1].0,
                        samples[i + 1].0,
                    )
                } else {
                    (t, v)
                };
                let challenger = if refined.1 > v { refined } else { (t, v) };
                if best.is_none_or(|(bv, _)| challenger.1 > bv) {
                    best = Some((challenger.1, challenger.0));
                }
            }
        }
        let (value, argmax) = best.expect("at least one interval endpoint");
        (value, argmax)
    }

    /// Sign-change roots of `f(k, .)` in `[lo, hi]`, bisected and polished.
    /// Tangential zeros without a sign change are irrelevant for suprema of
    /// `F` (it is monotone through them), so missing them is fine.
    pub(crate) fn sign_change_roots(&self, k: usize, lo: f64, hi: f64) -> Vec<f64> {
        if hi <= lo || lo.is_nan() || hi.is_nan() {
            return Vec::new();
        }
        let mut grid: Vec<f64> = (0..=ROOT_SCAN_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / ROOT_SCAN_POINTS as f64)
            .collect();
        // cluster extra samples around term shifts, where roots congregate
        if let NodeF::Terms(terms) = &self.nodes[k - 1] {
            for term in terms {
                for delta in [-1e-7, 0.0, 1e-7] {
                    let t = term.shift + delta;
                    if t > lo && t < hi {
                        grid.push(t);
                    }
                }
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut roots = Vec::new();
        let mut previous = (grid[0], self.eval_f(k, grid[0]));
        for &t in &grid[1..] {
            let value = self.eval_f(k, t);
            if previous.1 == 0.0 {
                roots.push(previous.0);
            } else if value != 0.0 && previous.1.signum() != value.signum() {
                roots.push(self.polish_root(k, previous.0, t));
            }
            previous = (t, value);
        }
        if previous.1 == 0.0 {
            roots.push(previous.0);
        }
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
        roots
    }

    fn polish_root(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        let mut f_lo = self.eval_f(k, lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = self.eval_f(k, mid);
            if f_mid == 0.0 {
                return mid;
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..6 {
            let f_t = self.eval_f(k, t);
            let d = self.eval_f_derivative(k, t);
            if !d.is_finite() || d == 0.0 {
                break;
            }
            let next = t - f_t / d;
            if !next.is_finite() || next < lo - 1e-9 || next > hi + 1e-9 {
                break;
            }
            t = next;
        }
        t
    }

    /// Leading tail behavior of `F(k, .)`.
    fn big_f_tails(&self, k: usize) -> TailPair {
        let NodeF::Terms(terms) = &self.nodes[k - 1] else {
            return TailPair {
                plus: None,
                minus: None,
                exact: false,
            };
        };
        let all_integer = terms
            .iter()
            .all(|term| matches!(term.power, Power::Integer(n) if n <= 60));
        if all_integer {
            // exact monomial expansion of the antiderivative
            let mut coeffs: Vec<f64> = Vec::new();
            for term in terms {
                let Power::Integer(n) = term.power else {
                    unreachable!()
                };
                let degree = n as usize + 1;
                let lead = term.coefficient / degree as f64;
                if coeffs.len() < degree + 1 {
                    coeffs.resize(degree + 1, 0.0);
                }
                // (t - c)^degree expanded with exact binomials
                let mut binom = 1.0f64;
                for j in 0..=degree {
                    // binom = C(degree, j), coefficient of t^(degree - j)
                    coeffs[degree - j] += lead * binom * (-term.shift).powi(j as i32);
                    binom = binom * (degree - j) as f64 / (j + 1) as f64;
                }
            }
            let top = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let lead = coeffs
                .iter()
                .enumerate()
                .rev()
                .find(|(d, c)| *d > 0 && c.abs() > 1e-14 * top);
            return match lead {
                None => TailPair {
                    plus: None,
                    minus: None,
                    exact: true,
                },
                Some((degree, &coefficient)) => TailPair {
                    plus: Some(Leading {
                        degree: degree as f64,
                        coefficient,
                    }),
                    minus: Some(Leading {
                        degree: degree as f64,
                        coefficient: coefficient * if degree % 2 == 0 { 1.0 } else { -1.0 },
                    }),
                    exact: true,
                },
            };
        }

        // Mixed fractional powers: group per tail by the leading degree only.
        // A cancellation at the top degree across distinct shifts leaves a
        // fractional-degree residue this map cannot see, so mark inexact.
        let tail = |minus: bool| -> (Option<Leading>, bool) {
            let mut entries: Vec<(f64, f64, Vec<f64>)> = Vec::new(); // degree, coef sum, shifts
            for term in terms {
                let (degree, coefficient) = match term.power {
                    Power::Integer(n) => {
                        let d = n as f64 + 1.0;
                        let c = term.coefficient / d;
                        let sign = if minus && (n + 1) % 2 == 1 { -1.0 } else { 1.0 };
                        (d, c * sign)
                    }
                    Power::Signed { gamma } => {
                        // antiderivative |t - c|^(gamma+1): positive both tails
                        (gamma + 1.0, term.coefficient / (gamma + 1.0))
                    }
                };
                match entries
                    .iter_mut()
                    .find(|(d, _, _)| (*d - degree).abs() <= DEGREE_EPS)
                {
                    Some(entry) => {
                        entry.1 += coefficient;
                        entry.2.push(term.shift);
                    }
                    None => entries.push((degree, coefficient, vec![term.shift])),
                }
            }
            entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let top = entries.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
            for (degree, coefficient, shifts) in &entries {
                if coefficient.abs() > 1e-14 * top.max(1.0) {
                    return (
                        Some(Leading {
                            degree: *degree,
                            coefficient: *coefficient,
                        }),
                        true,
                    );
                }
                let same_shift = shifts.windows(2).all(|w| w[0] == w[1]);
                if !same_shift {
                    // true residue of unknown sign below this degree
                    return (None, false);
                }
            }
            (None, true)
        };
        let (plus, plus_exact) = tail(false);
        let (minus, minus_exact) = tail(true);
        TailPair {
            plus,
            minus,
            exact: plus_exact && minus_exact,
        }
    }
}

const DEGREE_EPS: f64 = 1e-12;
const ROOT_SCAN_POINTS: usize = 16_384;

/// Radius past which the leading-degree terms of `f` dominate, so `f` keeps
/// a fixed sign on each tail and no further sign changes exist.
fn no_root_radius(terms: &[Term]) -> f64 {
    let live: Vec<&Term> = terms.iter().filter(|t| t.coefficient != 0.0).collect();
    if live.is_empty() {
        return 1.0;
    }
    let top_degree = live.iter().map(|t| t.degree()).fold(0.0f64, f64::max);
    let max_shift = live.iter().map(|t| t.shift.abs()).fold(0.0f64, f64::max);
    let mut leading_mag = 0.0f64;
    let mut lower_mass = 0.0f64;
    let mut lower_degree = 0.0f64;
    for term in &live {
        if (term.degree() - top_degree).abs() <= DEGREE_EPS {
            leading_mag += term.coefficient; // may cancel; fall back below
        } else {
            lower_mass += term.coefficient.abs() * 1.5f64.powf(term.degree());
            lower_degree = lower_degree.max(term.degree());
        }
    }
    let leading_mag = leading_mag.abs();
    let base = (2.0 * max_shift + 1.0).max(2.0);
    if leading_mag <= 1e-12 {
        // undetectable leading mass; generous fixed radius
        return base * 64.0;
    }
    let gap = (top_degree - lower_degree).max(1e-9);
    let needed = (2.0 * lower_mass.max(1e-300) / leading_mag)
        .powf(1.0 / gap)
        .max(1.0);
    // extra slack for the shift-induced correction at the top degree
    let shift_mass: f64 = live
        .iter()
        .map(|t| t.coefficient.abs() * t.shift.abs())
        .sum();
    let correction = (4.0 * (top_degree + 1.0) * shift_mass / leading_mag).max(1.0);
    2.0 * base.max(needed).max(correction)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Adaptive Simpson quadrature with Richardson correction, absolute
/// tolerance `tol`. Handles `b < a` by sign flip.
fn adaptive_simpson(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -adaptive_simpson(f, b, a, tol);
    }
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: impl Fn(f64) -> f64 + Copy,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
