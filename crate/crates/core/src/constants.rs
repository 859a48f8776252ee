//! Embedding constants of the discrete space and fuzzed verification of the
//! elementary inequalities behind the existence thresholds.
//!
//! The two families of constants are
//!
//! ```text
//! c_m(T) = sup { sum |u(k)|^m / sum |du(k-1)|^m }   (best constant in the
//!                                                    m-sum embedding)
//! K_m(T) = sup { (sum |u(k)|^m)^(1/m) / ||u|| }     (embedding into the
//!                                                    difference norm)
//! ```
//!
//! over nonzero sequences vanishing at the ends. Both ratios are invariant
//! under scaling, so the search runs on the sup-norm sphere: deterministic
//! structured starts (discrete sine modes, a parabolic bump, singletons)
//! plus seeded random ones, each ascended with Barzilai-Borwein steps and a
//! backtracking fallback. For `m = 2` the value `c_2(T)` has the closed form
//! `1 / (4 sin^2(pi / (2(T+1))))`; tests pin the maximizer against it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::sequence::{modular, ExponentProfile, Sequence};

#[derive(Debug, Error)]
pub enum ConstantsError {
    #[error("need at least one interior node, got t = {0}")]
    NoInteriorNodes(usize),
    #[error("{what} requires m >= {min}, got {m}")]
    OrderTooSmall {
        what: &'static str,
        min: f64,
        m: f64,
    },
    #[error("fuzz spec needs samples >= 1 and finite amplitude > 0, got samples {samples}, amplitude {amplitude}")]
    BadFuzz { samples: usize, amplitude: f64 },
    #[error(
        "fuzz spec covers {fuzz_t} interior nodes but the exponent profile covers {profile_t}"
    )]
    SizeMismatch { fuzz_t: usize, profile_t: usize },
}

/// Budget for the multi-start ratio maximizers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchBudget {
    pub starts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            starts: 64,
            max_iters: 10_000,
            seed: 0x5EED,
        }
    }
}

/// A maximized ratio with the sequence that attained it.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantEstimate {
    pub value: f64,
    /// True when every start stalled (no relative improvement above 1e-14
    /// for 50 iterations) before exhausting its iteration budget.
    pub converged: bool,
    /// Interior values of the best maximizer, sup-norm 1.
    pub maximizer: Vec<f64>,
}

/// Sampling plan for the fuzzed inequality checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FuzzSpec {
    pub t: usize,
    pub samples: usize,
    pub amplitude: f64,
    pub seed: u64,
}

impl FuzzSpec {
    pub fn new(t: usize) -> Self {
        FuzzSpec {
            t,
            samples: 10_000,
            amplitude: 10.0,
            seed: 0x5EED,
        }
    }

    fn validate(&self) -> Result<(), ConstantsError> {
        if self.t == 0 {
            return Err(ConstantsError::NoInteriorNodes(self.t));
        }
        if self.samples == 0 || !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(ConstantsError::BadFuzz {
                samples: self.samples,
                amplitude: self.amplitude,
            });
        }
        Ok(())
    }
}

/// First counterexample found by a fuzzed check.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub values: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Result of fuzzing one `lhs >= rhs` claim. Slack is normalized as
/// `(lhs - rhs) / max(1, |lhs|, |rhs|)` so huge samples do not drown small
/// absolute violations.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub samples: usize,
    pub min_slack: f64,
    pub violation: Option<Violation>,
}

impl InequalityCheck {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Both sides of the norm comparison chain.
#[derive(Debug, Clone, Serialize)]
pub struct NormComparison {
    pub lower: InequalityCheck,
    pub upper: InequalityCheck,
}

/// Coefficients of the coercivity minorant together with their fuzz check.
#[derive(Debug, Clone, Serialize)]
pub struct MinorantPair {
    pub c1: f64,
    pub c2: f64,
    pub check: InequalityCheck,
}

/// Everything the `constants` command reports for one `(profile, m)` pair.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub t: usize,
    pub m: f64,
    pub c_m: ConstantEstimate,
    pub k_m: ConstantEstimate,
    pub minorant: MinorantPair,
    pub difference_sum: InequalityCheck,
    pub norm_comparison: NormComparison,
}

fn require_order(what: &'static str, m: f64, min: f64) -> Result<(), ConstantsError> {
    if !m.is_finite() || m < min {
        Err(ConstantsError::OrderTooSmall { what, min, m })
    } else {
        Ok(())
    }
}

/// `|d|^(m-2) d` with the removable singularity at 0 removed.
fn m_flux(d: f64, m: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d.abs().powf(m - 2.0) * d
    }
}

/// `sum_k |u(k)|^m` and its gradient over the interior values.
fn node_power_sum(values: &[f64], m: f64) -> (f64, Vec<f64>) {
    let sum: f64 = values.iter().map(|v| v.abs().powf(m)).sum();
    let grad = values.iter().map(|&v| m * m_flux(v, m)).collect();
    (sum, grad)
}

/// `sum_k |du(k-1)|^m` and its gradient. Differences include the two
/// boundary jumps against 0.
fn difference_power_sum(values: &[f64], m: f64) -> (f64, Vec<f64>) {
    let t = values.len();
    let d = |i: usize| -> f64 {
        let left = if i == 0 { 0.0 } else { values[i - 1] };
        let right = if i == t { 0.0 } else { values[i] };
        right - left
    };
    let sum: f64 = (0..=t).map(|i| d(i).abs().powf(m)).sum();
    let grad = (1..=t)
        .map(|j| m * (m_flux(d(j - 1), m) - m_flux(d(j), m)))
        .collect();
    (sum, grad)
}

/// Best constant `c_m(T)` in `sum |u|^m <= c sum |du|^m`.
pub fn best_c_m(
    t: usize,
    m: f64,
    budget: &SearchBudget,
) -> Result<ConstantEstimate, ConstantsError> {
    if t == 0 {
        return Err(ConstantsError::NoInteriorNodes(t));
    }
    require_order("best_c_m", m, 1.0)?;
    Ok(maximize_log_ratio(t, budget, &|values: &[f64]| {
        let (n, gn) = node_power_sum(values, m);
        let (d, gd) = difference_power_sum(values, m);
        log_ratio(n, gn, d, gd)
    }))
}

/// Best constant `K_m(T)` in `(sum |u|^m)^(1/m) <= K ||u||`.
pub fn best_k_m(
    t: usize,
    m: f64,
    budget: &SearchBudget,
) -> Result<ConstantEstimate, ConstantsError> {
    if t == 0 {
        return Err(ConstantsError::NoInteriorNodes(t));
    }
    require_order("best_k_m", m, 1.0)?;
    let estimate = maximize_log_ratio(t, budget, &|values: &[f64]| {
        let (n, gn) = node_power_sum(values, m);
        let (d, gd) = difference_power_sum(values, 2.0);
        // log ratio of (n^(1/m)) / (d^(1/2))
        let q = n.ln() / m - d.ln() / 2.0;
        let grad = gn
            .iter()
            .zip(&gd)
            .map(|(a, b)| a / (m * n) - b / (2.0 * d))
            .collect();
        (q, grad)
    });
    Ok(estimate)
}

fn log_ratio(n: f64, gn: Vec<f64>, d: f64, gd: Vec<f64>) -> (f64, Vec<f64>) {
    let q = n.ln() - d.ln();
    let grad = gn.iter().zip(&gd).map(|(a, b)| a / n - b / d).collect();
    (q, grad)
}

/// Deterministic structured starts followed by seeded random fill, all on
/// the sup-norm sphere.
fn starting_points(t: usize, budget: &SearchBudget) -> Vec<Vec<f64>> {
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let n = (t + 1) as f64;
    for mode in 1..=t.min(8) {
        starts.push(
            (1..=t)
                .map(|k| (std::f64::consts::PI * k as f64 * mode as f64 / n).sin())
                .collect(),
        );
    }
    starts.push((1..=t).map(|k| k as f64 * (n - k as f64)).collect());
    for j in 0..t.min(8) {
        let mut e = vec![0.0; t];
        e[j] = 1.0;
        starts.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    while starts.len() < budget.starts.max(1) {
        let candidate: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if candidate.iter().any(|v| v.abs() > 1e-3) {
            starts.push(candidate);
        }
    }
    starts.truncate(budget.starts.max(starts.len().min(budget.starts.max(1))));
    for s in &mut starts {
        normalize_sup(s);
    }
    starts
}

fn normalize_sup(values: &mut [f64]) {
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > 0.0 {
        for v in values.iter_mut() {
            *v /= sup;
        }
    }
}

/// Objective value and gradient at one interior vector.
type ValueAndGrad<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a;

/// Barzilai-Borwein ascent of a scale-invariant objective on the sup-norm
/// sphere. Renormalization moves along the homogeneity direction, which is
/// orthogonal to the gradient, so the secant information survives it.
fn maximize_log_ratio(
    t: usize,
    budget: &SearchBudget,
    q_and_grad: &ValueAndGrad<'_>,
) -> ConstantEstimate {
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut all_converged = true;
    for start in starting_points(t, budget) {
        let mut x = start;
        let (mut q, mut g) = q_and_grad(&x);
        let mut step = 1e-2;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut stall = 0usize;
        let mut converged = false;
        for _ in 0..budget.max_iters {
            if let Some((px, pg)) = &prev {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for i in 0..t {
                    let s = x[i] - px[i];
                    let y = g[i] - pg[i];
                    ss += s * s;
                    sy += s * y;
                }
                // ascent: curvature sy < 0 near a maximum
                if sy < -1e-300 {
                    step = (ss / -sy).clamp(1e-12, 1e6);
                }
            }
            let mut candidate = x.clone();
            let mut accepted = false;
            let mut trial_step = step;
            for _ in 0..60 {
                for i in 0..t {
                    candidate[i] = x[i] + trial_step * g[i];
                }
                normalize_sup(&mut candidate);
                let (cq, cg) = q_and_grad(&candidate);
                if cq.is_finite() && cq > q {
                    prev = Some((
                        std::mem::replace(&mut x, candidate.clone()),
                        std::mem::take(&mut g),
                    ));
                    let improvement = (cq - q) / q.abs().max(1.0);
                    q = cq;
                    g = cg;
                    accepted = true;
                    if improvement <= 1e-14 {
                        stall += 1;
                    } else {
                        stall = 0;
                    }
                    break;
                }
                trial_step *= 0.5;
            }
            if !accepted {
                stall += 1;
            }
            if stall >= 50 {
                converged = true;
                break;
            }
        }
        all_converged &= converged;
        if best.as_ref().is_none_or(|(bq, _)| q > *bq) {
            best = Some((q, x));
        }
    }
    let (q, maximizer) = best.expect("at least one start");
    ConstantEstimate {
        value: q.exp(),
        converged: all_converged,
        maximizer,
    }
}

/// Generic fuzz engine: samples interior vectors and records the minimum
/// normalized slack of `lhs >= rhs`, stopping at the first violation.
fn check_inequality(
    fuzz: &FuzzSpec,
    sides: impl Fn(&[f64]) -> (f64, f64),
) -> Result<InequalityCheck, ConstantsError> {
    fuzz.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(fuzz.seed);
    let mut min_slack = f64::INFINITY;
    for sample in 0..fuzz.samples {
        let mut values: Vec<f64> = (0..fuzz.t)
            .map(|_| rng.gen_range(-fuzz.amplitude..=fuzz.amplitude))
            .collect();
        // every fourth sample is blown up to probe the large-norm regime
        if sample % 4 == 3 {
            let blow = 10.0f64.powf(rng.gen_range(0.0..3.0));
            for v in &mut values {
                *v *= blow;
            }
        }
        if values.iter().all(|v| *v == 0.0) {
            continue;
        }
        let (lhs, rhs) = sides(&values);
        let slack = (lhs - rhs) / lhs.abs().max(rhs.abs()).max(1.0);
        min_slack = min_slack.min(slack);
        if slack < -1e-10 {
            return Ok(InequalityCheck {
                samples: sample + 1,
                min_slack,
                violation: Some(Violation { values, lhs, rhs }),
            });
        }
    }
    Ok(InequalityCheck {
        samples: fuzz.samples,
        min_slack,
        violation: None,
    })
}

/// Fuzz `2^m sum |u(k)|^m >= sum |du(k-1)|^m` for `m >= 1`.
pub fn verify_difference_sum_bound(
    m: f64,
    fuzz: &FuzzSpec,
) -> Result<InequalityCheck, ConstantsError> {
    require_order("verify_difference_sum_bound", m, 1.0)?;
    check_inequality(fuzz, |values| {
        let (n, _) = node_power_sum(values, m);
        let (d, _) = difference_power_sum(values, m);
        (2.0f64.powf(m) * n, d)
    })
}

/// Fuzz both sides of the norm comparison for `m >= 2`:
///
/// ```text
/// (T+1)^((2-m)/(2m)) ||u|| <= (sum |du|^m)^(1/m) <= (T+1)^(1/m) ||u||
/// ```
pub fn verify_norm_comparison(m: f64, fuzz: &FuzzSpec) -> Result<NormComparison, ConstantsError> {
    require_order("verify_norm_comparison", m, 2.0)?;
    let n = (fuzz.t + 1) as f64;
    let h_norm = |values: &[f64]| difference_power_sum(values, 2.0).0.sqrt();
    let lower = check_inequality(fuzz, |values| {
        let d_m = difference_power_sum(values, m).0.powf(1.0 / m);
        (d_m, n.powf((2.0 - m) / (2.0 * m)) * h_norm(values))
    })?;
    let upper = check_inequality(fuzz, |values| {
        let d_m = difference_power_sum(values, m).0.powf(1.0 / m);
        (n.powf(1.0 / m) * h_norm(values), d_m)
    })?;
    Ok(NormComparison { lower, upper })
}

/// The coercivity minorant pair `(C1, C2) = ((T+1)^((2-p^-)/2), T+1)` with a
/// fuzz check of
///
/// ```text
/// modular(u) >= (C1 ||u||^(p^-) - C2) / p^+        for every u,
/// ```
///
/// which drives the energy to +infinity along rays once the potential term
/// grows strictly slower.
pub fn coercive_minorant_pair(
    p: &ExponentProfile,
    fuzz: &FuzzSpec,
) -> Result<MinorantPair, ConstantsError> {
    if fuzz.t != p.t() {
        return Err(ConstantsError::SizeMismatch {
            fuzz_t: fuzz.t,
            profile_t: p.t(),
        });
    }
    let n = (p.t() + 1) as f64;
    let c1 = n.powf((2.0 - p.p_minus()) / 2.0);
    let c2 = n;
    let p_minus = p.p_minus();
    let p_plus = p.p_plus();
    let check = check_inequality(fuzz, |values| {
        let u = Sequence::from_interior(values).expect("finite fuzz values");
        let lhs = modular(&u, p);
        let rhs = (c1 * u.h_norm().powf(p_minus) - c2) / p_plus;
        (lhs, rhs)
    })?;
    Ok(MinorantPair { c1, c2, check })
}

/// Bundles every constant and check for one `(profile, m)` pair.
pub fn constants_report(
    p: &ExponentProfile,
    m: f64,
    budget: &SearchBudget,
    fuzz: &FuzzSpec,
) -> Result<ConstantsReport, ConstantsError> {
    Ok(ConstantsReport {
        t: p.t(),
        m,
        c_m: best_c_m(p.t(), m, budget)?,
        k_m: best_k_m(p.t(), m, budget)?,
        minorant: coercive_minorant_pair(p, fuzz)?,
        difference_sum: verify_difference_sum_bound(m, fuzz)?,
        norm_comparison: verify_norm_comparison(m, fuzz)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Closed form for the best constant with m = 2: the smallest eigenvalue
    /// of the second-difference matrix is 4 sin^2(pi / (2(T+1))).
    fn c2_closed_form(t: usize) -> f64 {
        let angle = std::f64::consts::PI / (2.0 * (t as f64 + 1.0));
        1.0 / (4.0 * angle.sin().powi(2))
    }

    #[test]
    fn c2_matches_the_eigenvalue_closed_form() {
        let budget = SearchBudget::default();
        for t in 1..=6 {
            let estimate = best_c_m(t, 2.0, &budget).unwrap();
            assert!(estimate.converged, "t = {t} did not converge");
            assert_relative_eq!(estimate.value, c2_closed_form(t), max_relative = 1e-9);
        }
    }

    #[test]
    fn k2_squared_is_c2() {
        let budget = SearchBudget::default();
        for t in [1usize, 3, 5] {
            let k = best_k_m(t, 2.0, &budget).unwrap();
            assert_relative_eq!(k.value * k.value, c2_closed_form(t), max_relative = 1e-7);
        }
    }

    #[test]
    fn single_node_ratios_have_closed_forms() {
        // T = 1: sum |u|^m / (|u|^m + |u|^m) = 1/2 for every u, every m;
        // (sum |u|^m)^(1/m) / ||u|| = 1/sqrt(2)
        let budget = SearchBudget::default();
        for m in [2.0, 3.0, 4.5] {
            let c = best_c_m(1, m, &budget).unwrap();
            assert_relative_eq!(c.value, 0.5, max_relative = 1e-12);
            let k = best_k_m(1, m, &budget).unwrap();
            assert_relative_eq!(k.value, 0.5f64.sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn maximizer_for_c2_is_the_first_sine_mode() {
        let estimate = best_c_m(4, 2.0, &SearchBudget::default()).unwrap();
        let w = &estimate.maximizer;
        // symmetric and single-signed, peaked in the middle
        let signs: Vec<f64> = w.iter().map(|v| v.signum()).collect();
        assert!(signs.windows(2).all(|s| s[0] == s[1]), "one sign: {w:?}");
        assert_relative_eq!(w[0].abs(), w[3].abs(), max_relative = 1e-6);
        assert!(w[1].abs() > w[0].abs());
    }

    #[test]
    fn exhausted_budget_reports_non_convergence() {
        let budget = SearchBudget {
            starts: 4,
            max_iters: 1,
            seed: 0x5EED,
        };
        let estimate = best_c_m(5, 2.0, &budget).unwrap();
        assert!(!estimate.converged);
    }

    #[test]
    fn fuzzed_inequalities_hold_with_nonnegative_slack() {
        let fuzz = FuzzSpec::new(4);
        for m in [2.0, 3.5] {
            let check = verify_difference_sum_bound(m, &fuzz).unwrap();
            assert!(check.holds(), "m = {m}: {:?}", check.violation);
            assert!(check.min_slack >= -1e-10);
            let chain = verify_norm_comparison(m, &fuzz).unwrap();
            assert!(chain.lower.holds() && chain.upper.holds());
        }
    }

    #[test]
    fn norm_comparison_rejects_m_below_two() {
        assert!(matches!(
            verify_norm_comparison(1.5, &FuzzSpec::new(3)),
            Err(ConstantsError::OrderTooSmall { .. })
        ));
    }

    #[test]
    fn minorant_pair_has_the_closed_form_coefficients_and_holds() {
        let p = ExponentProfile::new(vec![4.0, 5.0, 4.0, 4.0]).unwrap();
        let pair = coercive_minorant_pair(&p, &FuzzSpec::new(2)).unwrap();
        assert_relative_eq!(pair.c1, 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(pair.c2, 3.0);
        assert!(pair.check.holds(), "violation: {:?}", pair.check.violation);
    }

    #[test]
    fn check_engine_reports_the_first_counterexample() {
        let fuzz = FuzzSpec {
            t: 2,
            samples: 50,
            amplitude: 1.0,
            seed: 0x5EED,
        };
        // deliberately false claim: x(1)^2 >= x(1)^2 + 1
        let report = check_inequality(&fuzz, |values| {
            let s = values[0] * values[0];
            (s, s + 1.0)
        })
        .unwrap();
        let violation = report.violation.expect("claim is false everywhere");
        assert_eq!(report.samples, 1);
        assert!(violation.lhs < violation.rhs);
        assert!(report.min_slack < -1e-10);
    }

    #[test]
    fn same_seed_reproduces_the_report_bit_for_bit() {
        let p = ExponentProfile::new(vec![3.0, 4.0, 3.0, 3.0]).unwrap();
        let budget = SearchBudget {
            starts: 16,
            max_iters: 2_000,
            seed: 7,
        };
        let fuzz = FuzzSpec {
            t: 2,
            samples: 500,
            amplitude: 5.0,
            seed: 7,
        };
        let a = constants_report(&p, 3.0, &budget, &fuzz).unwrap();
        let b = constants_report(&p, 3.0, &budget, &fuzz).unwrap();
        assert_eq!(a.c_m.value.to_bits(), b.c_m.value.to_bits());
        assert_eq!(a.k_m.value.to_bits(), b.k_m.value.to_bits());
        assert_eq!(
            a.minorant.check.min_slack.to_bits(),
            b.minorant.check.min_slack.to_bits()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        /// No sample may beat the closed-form c_2, and the claimed best
        /// constant bounds every sampled ratio.
        #[test]
        fn no_sample_beats_the_best_constant(
            values in proptest::collection::vec(-10.0f64..10.0, 1..6),
        ) {
            prop_assume!(values.iter().any(|v| v.abs() > 1e-6));
            let t = values.len();
            let (n, _) = node_power_sum(&values, 2.0);
            let (d, _) = difference_power_sum(&values, 2.0);
            prop_assert!(n / d <= c2_closed_form(t) * (1.0 + 1e-12));
        }

        /// The difference-sum bound is tight only up to its 2^m factor; it
        /// must hold for every sample and every order in range.
        #[test]
        fn difference_sum_bound_holds_pointwise(
            values in proptest::collection::vec(-10.0f64..10.0, 1..6),
            m in 1.0f64..6.0,
        ) {
            let (n, _) = node_power_sum(&values, m);
            let (d, _) = difference_power_sum(&values, m);
            prop_assert!(2.0f64.powf(m) * n >= d - 1e-10 * d.abs().max(1.0));
        }
    }
}
