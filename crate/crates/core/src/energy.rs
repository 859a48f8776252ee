//! The variational energy of the problem, its weak-form gradient, the
//! strong-form residual, and second-order classification of critical points.
//!
//! For a sequence `u` vanishing at both ends,
//!
//! ```text
//! J(u) = sum_{k=1}^{T+1} |du(k-1)|^p(k-1) / p(k-1) - lambda * sum_{k=1}^{T} F(k, u(k))
//! ```
//!
//! with `du(k) = u(k+1) - u(k)`. Interior critical points of `J` are exactly
//! the solutions of the difference equation
//!
//! ```text
//! d( |du(k-1)|^(p(k-1)-2) du(k-1) ) + lambda f(k, u(k)) = 0,   k = 1, ..., T
//! ```
//!
//! and `strong_residual` returns that left-hand side. It is the exact
//! negation of `gradient`, bit for bit: both are assembled from the same
//! flux evaluations, in an order where IEEE sign symmetry makes the negation
//! lossless. Tests pin that down with bit comparisons.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::nonlinearity::Nonlinearity;
use crate::sequence::{modular, ExponentProfile, Sequence};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("exponent profile covers {p_t} interior nodes but nonlinearity covers {nl_t}")]
    SizeMismatch { p_t: usize, nl_t: usize },
    #[error("lambda must be finite, got {0}")]
    NonFiniteLambda(f64),
    #[error("truncation thresholds must satisfy 0 < r < s, got r = {r}, s = {s}")]
    InvalidTruncation { r: f64, s: f64 },
}

/// A fully specified problem instance: exponents, nonlinearity, and the
/// parameter `lambda` in front of the potential term.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    p: ExponentProfile,
    nonlinearity: Nonlinearity,
    lambda: f64,
}

impl ProblemSpec {
    pub fn new(
        p: ExponentProfile,
        nonlinearity: Nonlinearity,
        lambda: f64,
    ) -> Result<Self, EnergyError> {
        if p.t() != nonlinearity.t() {
            return Err(EnergyError::SizeMismatch {
                p_t: p.t(),
                nl_t: nonlinearity.t(),
            });
        }
        if !lambda.is_finite() {
            return Err(EnergyError::NonFiniteLambda(lambda));
        }
        Ok(ProblemSpec {
            p,
            nonlinearity,
            lambda,
        })
    }

    pub fn t(&self) -> usize {
        self.p.t()
    }

    pub fn p(&self) -> &ExponentProfile {
        &self.p
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, EnergyError> {
        Self::new(self.p.clone(), self.nonlinearity.clone(), lambda)
    }

    fn check_t(&self, u: &Sequence) {
        assert_eq!(
            u.t(),
            self.t(),
            "sequence has {} interior nodes, problem has {}",
            u.t(),
            self.t()
        );
    }

    /// `sum_k F(k, u(k))`, the potential part of the energy.
    pub fn potential(&self, u: &Sequence) -> f64 {
        self.check_t(u);
        (1..=self.t())
            .map(|k| self.nonlinearity.eval_big_f(k, u[k]))
            .sum()
    }

    /// The energy `J(u)`.
    pub fn energy(&self, u: &Sequence) -> f64 {
        modular(u, &self.p) - self.lambda * self.potential(u)
    }

    /// Energy with the modular part truncated by `truncated_modular`. For
    /// sequences with modular below `r` this is `energy` exactly, bit for
    /// bit, since the truncation is the identity there.
    pub fn composite_energy(&self, u: &Sequence, r: f64, s: f64) -> Result<f64, EnergyError> {
        Ok(truncated_modular(u, &self.p, r, s)? - self.lambda * self.potential(u))
    }

    /// The gradient of `J` in the interior coordinates `u(1), ..., u(T)`:
    ///
    /// ```text
    /// dJ/du(j) = phi(du(j-1), p(j-1)) - phi(du(j), p(j)) - lambda f(j, u(j))
    /// ```
    ///
    /// with `phi(t, p) = |t|^(p-2) t`.
    pub fn gradient(&self, u: &Sequence) -> Vec<f64> {
        self.check_t(u);
        let diffs = u.forward_differences();
        (1..=self.t())
            .map(|j| {
                let inflow = power_flux(diffs[j - 1], self.p.at(j - 1));
                let outflow = power_flux(diffs[j], self.p.at(j));
                inflow - outflow - self.lambda * self.nonlinearity.eval_f(j, u[j])
            })
            .collect()
    }

    /// The strong-form residual
    ///
    /// ```text
    /// r(j) = phi(du(j), p(j)) - phi(du(j-1), p(j-1)) + lambda f(j, u(j))
    /// ```
    ///
    /// which vanishes exactly at solutions of the difference equation. Equal
    /// to `-gradient` bit for bit; solvers certify against its sup norm.
    pub fn strong_residual(&self, u: &Sequence) -> Vec<f64> {
        self.check_t(u);
        let diffs = u.forward_differences();
        (1..=self.t())
            .map(|j| {
                let inflow = power_flux(diffs[j - 1], self.p.at(j - 1));
                let outflow = power_flux(diffs[j], self.p.at(j));
                outflow - inflow + self.lambda * self.nonlinearity.eval_f(j, u[j])
            })
            .collect()
    }

    pub fn residual_sup_norm(&self, u: &Sequence) -> f64 {
        self.strong_residual(u)
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Hessian of `J` at `u` by central differences of the gradient,
    /// symmetrized. Step `1e-5 * max(1, h-norm of u)` per coordinate.
    pub fn numeric_hessian(&self, u: &Sequence) -> DMatrix<f64> {
        self.check_t(u);
        let t = self.t();
        let h = 1e-5 * u.h_norm().max(1.0);
        let mut columns = Vec::with_capacity(t);
        let mut values = u.values().to_vec();
        for j in 1..=t {
            let saved = values[j];
            values[j] = saved + h;
            let plus = self.gradient(&Sequence::new(values.clone()).expect("interior shift"));
            values[j] = saved - h;
            let minus = self.gradient(&Sequence::new(values.clone()).expect("interior shift"));
            values[j] = saved;
            columns.push(
                plus.iter()
                    .zip(&minus)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect::<Vec<f64>>(),
            );
        }
        let raw = DMatrix::from_fn(t, t, |i, j| columns[j][i]);
        0.5 * (&raw + raw.transpose())
    }

    /// Classifies `u` as a critical point: second-order type, Morse index,
    /// and the certification numbers solvers gate on.
    pub fn classify(&self, u: &Sequence) -> CriticalPoint {
        let gradient = self.gradient(u);
        let residual_sup_norm = self.residual_sup_norm(u);
        let grad_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        let hessian = self.numeric_hessian(u);
        let eigenvalues = hessian.symmetric_eigen().eigenvalues;
        let spectral_radius = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let threshold = 1e-8 * spectral_radius.max(1e-300);
        let negatives = eigenvalues.iter().filter(|&&e| e < -threshold).count();
        let positives = eigenvalues.iter().filter(|&&e| e > threshold).count();
        let t = self.t();
        let classification = if negatives + positives < t {
            Classification::Degenerate
        } else if negatives == 0 {
            Classification::LocalMin
        } else if positives == 0 {
            Classification::LocalMax
        } else {
            Classification::Saddle
        };
        // The flux phi(., p) loses C^2 smoothness at 0 for p < 3, so a
        // difference that sits at 0 makes the finite-difference Hessian
        // unreliable. p = 2 is exempt: the flux is linear there.
        let diffs = u.forward_differences();
        let hessian_trusted = !diffs.iter().enumerate().any(|(k, d)| {
            let p_k = self.p.at(k);
            d.abs() < 1e-8 && p_k < 3.0 && p_k != 2.0
        });
        CriticalPoint {
            values: u.values().to_vec(),
            energy: self.energy(u),
            grad_norm,
            residual_sup_norm,
            classification,
            morse_index: negatives,
            hessian_trusted,
        }
    }
}

/// The discrete flux `phi(t, p) = |t|^(p-2) t`, with `phi(0, p) = 0` for
/// every `p > 1` (the `p < 2` singularity at the origin is removable in the
/// product).
pub fn power_flux(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// The modular with its middle range flattened:
///
/// ```text
/// phi_trunc(m) = m           if m < r
///              = r           if r <= m <= s
///              = m - s + r   if m > s
/// ```
///
/// applied to `m = modular(u, p)`. Continuous and nondecreasing; requires
/// `0 < r < s`.
pub fn truncated_modular(
    u: &Sequence,
    p: &ExponentProfile,
    r: f64,
    s: f64,
) -> Result<f64, EnergyError> {
    if !(r.is_finite() && s.is_finite() && 0.0 < r && r < s) {
        return Err(EnergyError::InvalidTruncation { r, s });
    }
    let m = modular(u, p);
    Ok(if m < r {
        m
    } else if m <= s {
        r
    } else {
        (m - s) + r
    })
}

/// Second-order type of a critical point, decided from the numeric Hessian
/// spectrum with a relative degeneracy threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    LocalMin,
    Saddle,
    LocalMax,
    Degenerate,
}

/// A candidate critical point with its certification numbers.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    /// Full sequence values including the zero boundary entries.
    pub values: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub residual_sup_norm: f64,
    pub classification: Classification,
    /// Number of Hessian eigenvalues below the negative threshold.
    pub morse_index: usize,
    /// False when a difference sits at a point where the flux is not twice
    /// differentiable, making the numeric Hessian unreliable.
    pub hessian_trusted: bool,
}
