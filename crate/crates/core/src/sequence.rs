//! Sequences with zero Dirichlet boundary and the exponent profiles that
//! weight their difference energies.
//!
//! Everything downstream works on sequences `u(0), ..., u(T+1)` with
//! `u(0) = u(T+1) = 0`, `T >= 1`. The norm is the Euclidean norm of the
//! forward differences `u(k) - u(k-1)`, and the modular replaces the square
//! by a per-index power `p(k-1)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("sequence needs at least 3 entries (T >= 1), got {0}")]
    TooShort(usize),
    #[error("boundary entry [{index}] must be 0, got {value}; use with_zeroed_boundary to clamp")]
    NonzeroBoundary { index: usize, value: f64 },
    #[error("entry [{index}] is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("exponent [{index}] must be finite and > 1, got {value}")]
    BadExponent { index: usize, value: f64 },
}

/// A sequence `u(0), ..., u(T+1)` with `u(0) = u(T+1) = 0`.
///
/// Boundary entries are stored explicitly, so `values()` has length `T + 2`
/// and indexing matches the difference-equation convention everywhere else
/// in the crate. The unknowns are the `T` interior values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence {
    values: Vec<f64>,
}

impl Sequence {
    /// Strict constructor: rejects nonzero boundary entries instead of
    /// silently fixing them.
    pub fn new(values: Vec<f64>) -> Result<Self, SequenceError> {
        Self::check_finite(&values)?;
        for index in [0, values.len() - 1] {
            let value = values[index];
            if value != 0.0 {
                return Err(SequenceError::NonzeroBoundary { index, value });
            }
        }
        Ok(Sequence { values })
    }

    /// Lenient constructor: overwrites both boundary entries with 0.
    pub fn with_zeroed_boundary(mut values: Vec<f64>) -> Result<Self, SequenceError> {
        Self::check_finite(&values)?;
        let last = values.len() - 1;
        values[0] = 0.0;
        values[last] = 0.0;
        Ok(Sequence { values })
    }

    /// Builds the sequence whose interior values are `interior` (so
    /// `T = interior.len()`), with the zero boundary added.
    pub fn from_interior(interior: &[f64]) -> Result<Self, SequenceError> {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        Self::check_finite(&values)?;
        Ok(Sequence { values })
    }

    /// The zero sequence with `t` interior entries.
    pub fn zeros(t: usize) -> Self {
        assert!(t >= 1, "need at least one interior node");
        Sequence {
            values: vec![0.0; t + 2],
        }
    }

    fn check_finite(values: &[f64]) -> Result<(), SequenceError> {
        if values.len() < 3 {
            return Err(SequenceError::TooShort(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(SequenceError::NonFinite { index, value });
            }
        }
        Ok(())
    }

    /// Number of interior nodes `T`.
    pub fn t(&self) -> usize {
        self.values.len() - 2
    }

    /// All entries `u(0), ..., u(T+1)` including the zero boundary.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The interior entries `u(1), ..., u(T)`.
    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    /// Forward differences `u(k) - u(k-1)` for `k = 1, ..., T+1`
    /// (length `T + 1`).
    pub fn forward_differences(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Euclidean norm of the forward differences. Zero exactly when the
    /// sequence is zero, since the boundary pins `u(0) = 0`.
    pub fn h_norm(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `max_k |u(k)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for Sequence {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

/// Variable exponent attached to each difference index.
///
/// Stores `p(0), ..., p(T+1)`, all finite and `> 1`. Only `p(0..=T)` enter
/// the modular (they weight the differences `u(k) - u(k-1)` for
/// `k = 1, ..., T+1`), but the final entry still participates in `p_minus`
/// and `p_plus`, so an extreme value there widens the exponent gaps the
/// existence criteria see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentProfile {
    p: Vec<f64>,
}

impl ExponentProfile {
    pub fn new(p: Vec<f64>) -> Result<Self, SequenceError> {
        if p.len() < 3 {
            return Err(SequenceError::TooShort(p.len()));
        }
        for (index, &value) in p.iter().enumerate() {
            if !value.is_finite() || value <= 1.0 {
                return Err(SequenceError::BadExponent { index, value });
            }
        }
        Ok(ExponentProfile { p })
    }

    /// The constant profile `p(k) = value` for a problem with `t` interior
    /// nodes.
    pub fn constant(t: usize, value: f64) -> Result<Self, SequenceError> {
        assert!(t >= 1, "need at least one interior node");
        Self::new(vec![value; t + 2])
    }

    pub fn t(&self) -> usize {
        self.p.len() - 2
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// `p(k)` for `k = 0, ..., T+1`.
    pub fn at(&self, k: usize) -> f64 {
        self.p[k]
    }

    pub fn p_minus(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn p_plus(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The modular `sum_{k=1}^{T+1} |u(k) - u(k-1)|^p(k-1) / p(k-1)`.
///
/// This is the gradient part of the energy; the solvers and the truncation
/// machinery both measure sequences by it.
///
/// Panics if `u` and `p` disagree on `T`.
pub fn modular(u: &Sequence, p: &ExponentProfile) -> f64 {
    assert_eq!(
        u.t(),
        p.t(),
        "sequence has T = {} but exponent profile has T = {}",
        u.t(),
        p.t()
    );
    u.values()
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let pk = p.at(k);
            (w[1] - w[0]).abs().powf(pk) / pk
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn forward_differences_match_hand_computation() {
        let u = Sequence::new(vec![0.0, 2.0, 5.0, 0.0]).unwrap();
        assert_eq!(u.forward_differences(), vec![2.0, 3.0, -5.0]);
    }

    #[test]
    fn h_norm_of_0_3_4_0_is_sqrt_26() {
        // differences 3, 1, -4 -> 9 + 1 + 16 = 26
        let u = Sequence::new(vec![0.0, 3.0, 4.0, 0.0]).unwrap();
        assert_eq!(u.h_norm(), 26.0f64.sqrt());
    }

    #[test]
    fn sup_norm_takes_largest_magnitude() {
        let u = Sequence::new(vec![0.0, -3.0, 2.0, 0.0]).unwrap();
        assert_eq!(u.sup_norm(), 3.0);
    }

    #[test]
    fn modular_weights_each_difference_by_its_own_exponent() {
        // differences 1, 0, -1 under p = (4, 5, 4): 1/4 + 0 + 1/4
        let u = Sequence::new(vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let p = ExponentProfile::new(vec![4.0, 5.0, 4.0, 4.0]).unwrap();
        assert_eq!(modular(&u, &p), 0.5);
    }

    #[test]
    fn modular_with_constant_exponent_two_is_half_h_norm_squared() {
        let u = Sequence::new(vec![0.0, 0.7, 0.0]).unwrap();
        let p = ExponentProfile::constant(1, 2.0).unwrap();
        assert_relative_eq!(modular(&u, &p), 0.7f64 * 0.7, max_relative = 1e-15);
    }

    #[test]
    fn strict_constructor_rejects_nonzero_boundary() {
        let err = Sequence::new(vec![0.1, 1.0, 0.0]).unwrap_err();
        assert!(matches!(
            err,
            SequenceError::NonzeroBoundary { index: 0, .. }
        ));
    }

    #[test]
    fn lenient_constructor_zeroes_the_boundary() {
        let u = Sequence::with_zeroed_boundary(vec![0.1, 1.0, -0.2]).unwrap();
        assert_eq!(u.values(), &[0.0, 1.0, 0.0]);
        assert_eq!(u.t(), 1);
    }

    #[test]
    fn non_finite_entries_are_rejected_everywhere() {
        assert!(Sequence::new(vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(Sequence::with_zeroed_boundary(vec![0.0, f64::INFINITY, 0.0]).is_err());
        assert!(Sequence::from_interior(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn exponent_profile_rejects_values_at_or_below_one() {
        assert!(ExponentProfile::new(vec![2.0, 1.0, 2.0]).is_err());
        assert!(ExponentProfile::new(vec![2.0, 0.5, 2.0]).is_err());
        assert!(ExponentProfile::new(vec![2.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn profile_extremes_cover_all_entries_including_the_last() {
        let p = ExponentProfile::new(vec![4.0, 5.0, 4.0, 7.0]).unwrap();
        assert_eq!(p.p_minus(), 4.0);
        assert_eq!(p.p_plus(), 7.0);
    }

    fn interior_strategy(t: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, t)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn h_norm_is_zero_only_for_the_zero_sequence(x in interior_strategy(4)) {
            let u = Sequence::from_interior(&x).unwrap();
            let zero = x.iter().all(|v| *v == 0.0);
            prop_assert_eq!(u.h_norm() == 0.0, zero);
        }

        #[test]
        fn forward_differences_are_linear(
            x in interior_strategy(5),
            y in interior_strategy(5),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let u = Sequence::from_interior(&x).unwrap();
            let v = Sequence::from_interior(&y).unwrap();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
            let w = Sequence::from_interior(&combo).unwrap();
            let lhs = w.forward_differences();
            let du = u.forward_differences();
            let dv = v.forward_differences();
            for k in 0..lhs.len() {
                prop_assert!((lhs[k] - (a * du[k] + b * dv[k])).abs() <= 1e-12);
            }
        }

        #[test]
        fn modular_grows_along_rays_and_is_unbounded(x in interior_strategy(3)) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
            let p = ExponentProfile::new(vec![2.5, 4.0, 3.0, 2.0, 5.0]).unwrap();
            let mut previous = 0.0;
            for c in [0.5, 1.0, 2.0, 4.0, 8.0] {
                let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
                let m = modular(&Sequence::from_interior(&scaled).unwrap(), &p);
                prop_assert!(m >= previous);
                previous = m;
            }
            // grows at least like ||.||^p_minus, so doubling forever diverges
            let big: Vec<f64> = x.iter().map(|v| 1e4 * v).collect();
            prop_assert!(modular(&Sequence::from_interior(&big).unwrap(), &p) > 1e4);
        }
    }
}
