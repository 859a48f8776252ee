//! Problem-file ingestion: a JSON schema for the whole problem (size,
//! exponents, nonlinearity terms, growth-hypothesis coefficients, radii)
//! and its validation into live types. Every rejection names the offending
//! field by path.
//!
//! ```json
//! {
//!   "T": 2,
//!   "p": [4.0, 5.0, 4.0, 4.0],
//!   "lambda": 1.0,
//!   "f": [
//!     [ {"coef": 0.2, "shift": 0.0, "power": 3} ],
//!     [ {"coef": -4.0, "shift": 0.1, "power": 3} ]
//!   ],
//!   "q": [3.0, 3.0],
//!   "H1": { "scale": [0.2, 4.2], "offset": [2.0, 8.0] },
//!   "r": 1.0, "s": 1.0, "r_prime": 0.2, "s_prime": 3.0
//! }
//! ```
//!
//! `p` has length T+2. `f` holds T term lists; each term is
//! `coef * (t - shift)^power` with an integer `power`, or a sign-preserving
//! `{"gamma": g}` power `coef * sign(t-shift) |t-shift|^g`. `lambda` may be
//! omitted when a command supplies its own (sweeps, or the `--lambda`
//! flag). `H1`/`H2` carry scale-and-offset growth coefficients, `H3`/`H4`
//! pure scale ones. `r`/`s` are modular window levels, `r_prime`/`s_prime`
//! explicit sup-norm radii.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::energy::ProblemSpec;
use crate::nonlinearity::{Nonlinearity, NonlinearityError, Term};
use crate::sequence::ExponentProfile;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid problem file: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("the problem file fixes no lambda; pass one explicitly")]
    MissingLambda,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ProblemError {
    ProblemError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeffPair {
    scale: Vec<f64>,
    offset: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScale {
    scale: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(rename = "T")]
    t: u32,
    p: Vec<f64>,
    lambda: Option<f64>,
    f: Vec<Vec<Term>>,
    q: Option<Vec<f64>>,
    #[serde(rename = "H1")]
    h1: Option<RawCoeffPair>,
    #[serde(rename = "H2")]
    h2: Option<RawCoeffPair>,
    #[serde(rename = "H3")]
    h3: Option<RawScale>,
    #[serde(rename = "H4")]
    h4: Option<RawScale>,
    r: Option<f64>,
    s: Option<f64>,
    r_prime: Option<f64>,
    s_prime: Option<f64>,
}

/// A fully validated problem: everything a command needs except possibly
/// the lambda, which some workflows (sweeps) supply themselves.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub p: ExponentProfile,
    pub nonlinearity: Nonlinearity,
    pub lambda: Option<f64>,
    /// Modular window levels for the closed-form radius bounds.
    pub r: Option<f64>,
    pub s: Option<f64>,
    /// Explicit sup-norm annulus radii for the multiplicity conditions.
    pub r_prime: Option<f64>,
    pub s_prime: Option<f64>,
}

impl ProblemData {
    pub fn t(&self) -> usize {
        self.p.t()
    }

    /// Builds the energy with the file's lambda.
    pub fn spec(&self) -> Result<ProblemSpec, ProblemError> {
        self.spec_with_lambda(self.lambda.ok_or(ProblemError::MissingLambda)?)
    }

    pub fn spec_with_lambda(&self, lambda: f64) -> Result<ProblemSpec, ProblemError> {
        ProblemSpec::new(self.p.clone(), self.nonlinearity.clone(), lambda)
            .map_err(|e| invalid("lambda", e.to_string()))
    }
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemData, ProblemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json_str(&text)
}

pub fn from_json_str(text: &str) -> Result<ProblemData, ProblemError> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    let raw: RawProblem = serde_path_to_error::deserialize(&mut deserializer)
        .map_err(|e| ProblemError::Parse(format!("{}: {}", e.path(), e.inner())))?;
    validate(raw)
}

fn check_positive(field: &str, value: f64) -> Result<f64, ProblemError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(field, "must be a finite positive real"))
    }
}

fn wrap_nl(field: &str, err: NonlinearityError) -> ProblemError {
    invalid(field, err.to_string())
}

fn validate(raw: RawProblem) -> Result<ProblemData, ProblemError> {
    let t = raw.t as usize;
    if t == 0 {
        return Err(invalid("T", "must be at least 1"));
    }
    if raw.p.len() != t + 2 {
        return Err(invalid(
            "p",
            format!("expected T+2 = {} entries, found {}", t + 2, raw.p.len()),
        ));
    }
    for (index, &value) in raw.p.iter().enumerate() {
        if !(value.is_finite() && value > 1.0) {
            return Err(invalid(
                format!("p[{index}]"),
                "every exponent must be a finite real greater than 1",
            ));
        }
    }
    let p = ExponentProfile::new(raw.p).map_err(|e| invalid("p", e.to_string()))?;

    if raw.f.len() != t {
        return Err(invalid(
            "f",
            format!("expected T = {t} term lists, found {}", raw.f.len()),
        ));
    }
    for (k, list) in raw.f.iter().enumerate() {
        if list.is_empty() {
            return Err(invalid(format!("f[{k}]"), "term list must not be empty"));
        }
    }
    let mut nl = match &raw.q {
        Some(q) => {
            if q.len() != t {
                return Err(invalid(
                    "q",
                    format!("expected T = {t} entries, found {}", q.len()),
                ));
            }
            for (index, &value) in q.iter().enumerate() {
                if !(value.is_finite() && value > 1.0) {
                    return Err(invalid(
                        format!("q[{index}]"),
                        "every growth exponent must be a finite real greater than 1",
                    ));
                }
            }
            Nonlinearity::from_terms_with_growth(raw.f, q.clone()).map_err(|e| wrap_nl("f", e))?
        }
        None => Nonlinearity::from_terms(raw.f).map_err(|e| wrap_nl("f", e))?,
    };
    if let Some(h1) = raw.h1 {
        nl = nl
            .with_upper_growth_bound(h1.scale, h1.offset)
            .map_err(|e| wrap_nl("H1", e))?;
    }
    if let Some(h2) = raw.h2 {
        nl = nl
            .with_lower_growth_bound(h2.scale, h2.offset)
            .map_err(|e| wrap_nl("H2", e))?;
    }
    if let Some(h3) = raw.h3 {
        nl = nl
            .with_pure_lower_bound(h3.scale)
            .map_err(|e| wrap_nl("H3", e))?;
    }
    if let Some(h4) = raw.h4 {
        nl = nl
            .with_pure_upper_bound(h4.scale)
            .map_err(|e| wrap_nl("H4", e))?;
    }

    let lambda = raw
        .lambda
        .map(|l| check_positive("lambda", l))
        .transpose()?;
    let r = raw.r.map(|v| check_positive("r", v)).transpose()?;
    let s = raw.s.map(|v| check_positive("s", v)).transpose()?;
    if let (Some(r), Some(s)) = (r, s) {
        if r > s {
            return Err(invalid("r", format!("must not exceed s = {s}, got {r}")));
        }
    }
    let r_prime = raw
        .r_prime
        .map(|v| check_positive("r_prime", v))
        .transpose()?;
    let s_prime = raw
        .s_prime
        .map(|v| check_positive("s_prime", v))
        .transpose()?;
    if let (Some(rp), Some(sp)) = (r_prime, s_prime) {
        if rp >= sp {
            return Err(invalid(
                "r_prime",
                format!("must be strictly below s_prime = {sp}, got {rp}"),
            ));
        }
    }

    Ok(ProblemData {
        p,
        nonlinearity: nl,
        lambda,
        r,
        s,
        r_prime,
        s_prime,
    })
}
