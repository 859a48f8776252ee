//! Existence and multiplicity criteria: the lambda thresholds for coercive,
//! anti-coercive, and mountain-pass geometry, the sup-norm radii bracketing
//! a modular window, the three-part multiplicity verdict, and the exact
//! box-infimum identity for the potential part.
//!
//! Every threshold is a closed formula in the exponent extremes, the growth
//! coefficients, and one embedding constant; each is degree -1 homogeneous
//! in its coefficient (doubling the coefficient halves the threshold), which
//! tests assert exactly. One exponent in the anti-coercive and mountain-pass
//! formulas exists in two plausible readings; both are implemented behind
//! [`ExponentReading`] and every report states which one produced its
//! number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{constants_report, ConstantsError, ConstantsReport, FuzzSpec, SearchBudget};
use crate::nonlinearity::{Nonlinearity, NonlinearityError, Region, SupValue};
use crate::sequence::{modular, ExponentProfile, Sequence};

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("nonlinearity has no stored {which} coefficients")]
    MissingBound { which: &'static str },
    #[error("exponent case mismatch: {needed} required, got p side {p_side} vs q side {q_side}")]
    ExponentCaseMismatch {
        needed: &'static str,
        p_side: f64,
        q_side: f64,
    },
    #[error("constants were computed at order m = {got}, need m = {expected}")]
    WrongConstantOrder { expected: f64, got: f64 },
    #[error("constants cover {got} interior nodes, need {expected}")]
    ConstantsSizeMismatch { expected: usize, got: usize },
    #[error("exponent profile covers {p_t} interior nodes but nonlinearity covers {nl_t}")]
    SizeMismatch { p_t: usize, nl_t: usize },
    #[error("threshold came out nonpositive ({value}); the bound M = {m_bound} is too large")]
    ThresholdNotPositive { value: f64, m_bound: f64 },
    #[error("the literal exponent reading degenerates at q^- = 3 (division by zero)")]
    DegenerateExponent,
    #[error("radii must satisfy 0 < inner < outer, got inner = {inner}, outer = {outer}")]
    BadRadii { inner: f64, outer: f64 },
    #[error("modular window must satisfy 0 < r < s, got r = {r}, s = {s}")]
    BadWindow { r: f64, s: f64 },
    #[error("ball radius must be finite and positive, got {0}")]
    BadSigma(f64),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
}

/// Reading of the tail exponent `(T+1)^E` in the anti-coercive and
/// mountain-pass thresholds. The printed form resolves to `2/(3 - q^-)`;
/// the alternative reads it as `1/(q^- + 1)` in case the printed form is a
/// typo. Neither is endorsed; reports carry the one used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentReading {
    #[default]
    Literal,
    Alt,
}

impl ExponentReading {
    fn tail_exponent(self, q_minus: f64) -> Result<f64, CriteriaError> {
        match self {
            ExponentReading::Literal => {
                let denom = 3.0 - q_minus;
                if denom.abs() < 1e-12 {
                    Err(CriteriaError::DegenerateExponent)
                } else {
                    Ok(2.0 / denom)
                }
            }
            ExponentReading::Alt => Ok(1.0 / (q_minus + 1.0)),
        }
    }
}

/// The lambda range a criterion guarantees solutions on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "range")]
pub enum LambdaRange {
    /// Every positive lambda qualifies.
    All,
    Below {
        threshold: f64,
    },
    Above {
        threshold: f64,
    },
}

impl LambdaRange {
    pub fn threshold(&self) -> Option<f64> {
        match self {
            LambdaRange::All => None,
            LambdaRange::Below { threshold } | LambdaRange::Above { threshold } => Some(*threshold),
        }
    }

    pub fn contains(&self, lambda: f64) -> bool {
        match self {
            LambdaRange::All => lambda > 0.0,
            LambdaRange::Below { threshold } => 0.0 < lambda && lambda < *threshold,
            LambdaRange::Above { threshold } => lambda >= *threshold,
        }
    }
}

fn check_sizes(p: &ExponentProfile, nl: &Nonlinearity) -> Result<(), CriteriaError> {
    if p.t() != nl.t() {
        return Err(CriteriaError::SizeMismatch {
            p_t: p.t(),
            nl_t: nl.t(),
        });
    }
    Ok(())
}

/// Lambda range on which the energy is coercive, hence has a global
/// minimizer.
///
/// With `p^- > q^+ + 1` the modular part outgrows the potential on every
/// ray and all positive lambda qualify. On the borderline `p^- = q^+ + 1`
/// coercivity survives for
///
/// ```text
/// lambda < lambda* = C1 (q^- + 1) / (p^+ a^+ c_{q^+ + 1})
/// ```
///
/// where `C1` is the minorant coefficient and `c_{q^+ + 1}` the embedding
/// constant, both taken from `constants`, and `a^+` the largest upper
/// growth scale.
pub fn lambda_star_coercive(
    p: &ExponentProfile,
    nl: &Nonlinearity,
    constants: &ConstantsReport,
) -> Result<LambdaRange, CriteriaError> {
    check_sizes(p, nl)?;
    let gap = p.p_minus() - (nl.q_plus() + 1.0);
    if gap > 1e-12 {
        return Ok(LambdaRange::All);
    }
    if gap < -1e-12 {
        return Err(CriteriaError::ExponentCaseMismatch {
            needed: "p^- >= q^+ + 1",
            p_side: p.p_minus(),
            q_side: nl.q_plus() + 1.0,
        });
    }
    let upper = nl.upper_growth_bound().ok_or(CriteriaError::MissingBound {
        which: "upper growth",
    })?;
    let a_plus = upper
        .scale
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if constants.t != p.t() {
        return Err(CriteriaError::ConstantsSizeMismatch {
            expected: p.t(),
            got: constants.t,
        });
    }
    let m_needed = nl.q_plus() + 1.0;
    if (constants.m - m_needed).abs() > 1e-9 {
        return Err(CriteriaError::WrongConstantOrder {
            expected: m_needed,
            got: constants.m,
        });
    }
    let threshold =
        constants.minorant.c1 * (nl.q_minus() + 1.0) / (p.p_plus() * a_plus * constants.c_m.value);
    Ok(LambdaRange::Below { threshold })
}

/// Lambda range on which the energy is anti-coercive (drops to -infinity
/// along rays), so minimization fails but large solutions appear.
///
/// With `p^+ < q^- + 1` the potential dominates on every ray for all
/// positive lambda. On the borderline `p^+ = q^- + 1`:
///
/// ```text
/// lambda > lambda* = [(T+1)/p^-] (q^+ + 1) 2^(q^- + 1)
///                    / (a1^- (T+1)^E)
/// ```
///
/// with `a1^-` the smallest lower growth scale and `E` given by `reading`.
pub fn lambda_star_anticoercive(
    p: &ExponentProfile,
    nl: &Nonlinearity,
    reading: ExponentReading,
) -> Result<LambdaRange, CriteriaError> {
    check_sizes(p, nl)?;
    let gap = p.p_plus() - (nl.q_minus() + 1.0);
    if gap < -1e-12 {
        return Ok(LambdaRange::All);
    }
    if gap > 1e-12 {
        return Err(CriteriaError::ExponentCaseMismatch {
            needed: "p^+ <= q^- + 1",
            p_side: p.p_plus(),
            q_side: nl.q_minus() + 1.0,
        });
    }
    let lower = nl.lower_growth_bound().ok_or(CriteriaError::MissingBound {
        which: "lower growth",
    })?;
    let a1_minus = lower.scale.iter().copied().fold(f64::INFINITY, f64::min);
    let n = (p.t() + 1) as f64;
    let e = reading.tail_exponent(nl.q_minus())?;
    let threshold = (n / p.p_minus()) * (nl.q_plus() + 1.0) * 2.0f64.powf(nl.q_minus() + 1.0)
        / (a1_minus * n.powf(e));
    Ok(LambdaRange::Above { threshold })
}

/// Lambda threshold past which the energy dips below the level `m_bound`
/// everywhere on the unit sphere, giving the mountain-pass geometry its
/// outer anchor:
///
/// ```text
/// lambda* = (-M + (T+1)/p^-) (q^+ + 1) 2^(q^- + 1) / (c^- (T+1)^E)
/// ```
///
/// with `c^-` the smallest pure lower-bound scale. `m_bound` is a signed
/// input; values at or above `(T+1)/p^-` would make the threshold
/// nonpositive and are rejected.
pub fn lambda_star_mountain_pass(
    p: &ExponentProfile,
    nl: &Nonlinearity,
    m_bound: f64,
    reading: ExponentReading,
) -> Result<LambdaRange, CriteriaError> {
    check_sizes(p, nl)?;
    let pure = nl.pure_lower_bound().ok_or(CriteriaError::MissingBound {
        which: "pure lower",
    })?;
    let c_minus = pure.iter().copied().fold(f64::INFINITY, f64::min);
    let n = (p.t() + 1) as f64;
    let e = reading.tail_exponent(nl.q_minus())?;
    let numerator =
        (-m_bound + n / p.p_minus()) * (nl.q_plus() + 1.0) * 2.0f64.powf(nl.q_minus() + 1.0);
    let threshold = numerator / (c_minus * n.powf(e));
    if threshold <= 0.0 {
        return Err(CriteriaError::ThresholdNotPositive {
            value: threshold,
            m_bound,
        });
    }
    Ok(LambdaRange::Above { threshold })
}

/// Closed-form lower bound on `inf { sup-norm of u : modular(u) >= r }`:
/// a sequence needs sup-norm at least this large before its modular can
/// reach `r`.
///
/// ```text
/// (1/2) (r p^- / (T+1))^(1/p^+)
/// ```
pub fn annulus_inner_bound(p: &ExponentProfile, r: f64) -> Result<f64, CriteriaError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(CriteriaError::BadWindow { r, s: f64::NAN });
    }
    let n = (p.t() + 1) as f64;
    Ok(0.5 * (r * p.p_minus() / n).powf(1.0 / p.p_plus()))
}

/// Closed-form upper bound on `sup { sup-norm of u : modular(u) <= s }`:
/// no sequence in the sublevel set sticks out farther than
///
/// ```text
/// (T+1)/2 * (s p^+)^(1/p^-)
/// ```
pub fn annulus_outer_bound(p: &ExponentProfile, s: f64) -> Result<f64, CriteriaError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(CriteriaError::BadWindow { r: f64::NAN, s });
    }
    let n = (p.t() + 1) as f64;
    Ok(n / 2.0 * (s * p.p_plus()).powf(1.0 / p.p_minus()))
}

/// Numeric sharp estimates of the two sup-norm radii for a modular window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadiiEstimate {
    /// `inf { sup-norm : modular >= r }`
    pub inner: f64,
    /// `sup { sup-norm : modular <= s }`
    pub outer: f64,
    pub converged: bool,
}

/// Estimates both radii by extremizing the radial scale that lands a
/// direction on the modular level set. The modular grows strictly along
/// rays, so each direction `d` (sup-norm 1) meets `modular = target` at a
/// unique scale found by bisection; the sup-norm there is that scale.
/// Pattern search over directions, multi-start, deterministic.
pub fn estimate_annulus_radii(
    p: &ExponentProfile,
    r: f64,
    s: f64,
    budget: &SearchBudget,
) -> Result<RadiiEstimate, CriteriaError> {
    if !(r.is_finite() && s.is_finite() && 0.0 < r && r < s) {
        return Err(CriteriaError::BadWindow { r, s });
    }
    let (inner, inner_ok) = extremize_scale_on_level(p, r, false, budget);
    let (outer, outer_ok) = extremize_scale_on_level(p, s, true, budget);
    Ok(RadiiEstimate {
        inner,
        outer,
        converged: inner_ok && outer_ok,
    })
}

/// Scale `c > 0` with `modular(c * d) = target` for a direction of sup-norm
/// one.
fn ray_scale_to_level(p: &ExponentProfile, direction: &[f64], target: f64) -> f64 {
    let at = |c: f64| {
        let values: Vec<f64> = direction.iter().map(|d| c * d).collect();
        let u = Sequence::from_interior(&values).expect("finite direction");
        modular(&u, p)
    };
    let mut hi = 1.0f64;
    while at(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn extremize_scale_on_level(
    p: &ExponentProfile,
    target: f64,
    maximize: bool,
    budget: &SearchBudget,
) -> (f64, bool) {
    let t = p.t();
    let sign = if maximize { 1.0 } else { -1.0 };
    let objective = |d: &[f64]| sign * ray_scale_to_level(p, d, target);

    let mut starts: Vec<Vec<f64>> = Vec::new();
    for j in 0..t {
        let mut e = vec![0.0; t];
        e[j] = 1.0;
        starts.push(e);
    }
    starts.push(vec![1.0; t]);
    starts.push(
        (0..t)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect(),
    );
    let n = (t + 1) as f64;
    starts.push(
        (1..=t)
            .map(|k| (std::f64::consts::PI * k as f64 / n).sin())
            .collect(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    while starts.len() < budget.starts.max(4) {
        let candidate: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if candidate.iter().any(|v| v.abs() > 1e-3) {
            starts.push(candidate);
        }
    }

    let mut best = f64::NEG_INFINITY;
    let mut all_converged = true;
    for mut d in starts {
        normalize_sup(&mut d);
        let mut value = objective(&d);
        let mut step = 0.5f64;
        let mut iterations = 0usize;
        while step > 1e-9 {
            let mut improved = false;
            for j in 0..t {
                for delta in [step, -step] {
                    let mut candidate = d.clone();
                    candidate[j] += delta;
                    normalize_sup(&mut candidate);
                    if candidate.iter().all(|v| v.abs() < 1e-12) {
                        continue;
                    }
                    let candidate_value = objective(&candidate);
                    if candidate_value > value + 1e-15 {
                        d = candidate;
                        value = candidate_value;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            iterations += 1;
            if iterations > budget.max_iters {
                all_converged = false;
                break;
            }
        }
        best = best.max(value);
    }
    (sign * best, all_converged)
}

fn normalize_sup(values: &mut [f64]) {
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > 0.0 {
        for v in values.iter_mut() {
            *v /= sup;
        }
    }
}

/// Verdict of the per-node asymptotic growth condition: the limsup of
/// `F(k, t) / |t|^(p^-)` must be nonpositive.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthConditionVerdict {
    pub node: usize,
    pub nonpositive: bool,
    /// Counterexample ratio argument when positive.
    pub witness: Option<f64>,
    pub exact: bool,
}

/// Verdict of the strict gap between the ball-restricted and global
/// supremum sums.
#[derive(Debug, Clone, Serialize)]
pub struct GapConditionVerdict {
    pub ball_sum: f64,
    pub global_sum: SupValue,
    pub holds: bool,
}

/// Verdict of the per-node separation condition on the annulus.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationVerdict {
    pub node: usize,
    pub annulus_sup: f64,
    /// `-sum_{h != k} sup over the ball of F(h, .)`
    pub bound: f64,
    pub holds: bool,
}

/// The three multiplicity conditions, reported separately. They can
/// disagree: a problem may pass the supremum conditions while failing the
/// asymptotic one, and callers decide what to gate on.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityReport {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub growth: Vec<GrowthConditionVerdict>,
    pub growth_holds: bool,
    pub gap: GapConditionVerdict,
    pub separation: Vec<SeparationVerdict>,
    pub separation_holds: bool,
    pub all_hold: bool,
    /// False when any sub-answer came from a sampling fallback.
    pub exact: bool,
}

/// Checks the three multiplicity conditions for the annulus
/// `inner <= |t| <= outer`:
///
/// 1. for every node, `limsup F(k, t)/|t|^(p^-) <= 0` as `|t| -> inf`;
/// 2. `sum_k sup_{|t| <= outer} F < sum_k sup_R F` (strict; an infinite
///    right side with finite left side passes);
/// 3. for every node, `sup_{inner <= |t| <= outer} F(k, .) <=
///    -sum_{h != k} sup_{|t| <= outer} F(h, .)`.
///
/// Comparisons are plain: the supremum enumeration is exact for term
/// lists, and the borderline equalities (0 <= 0) must pass.
pub fn check_multiplicity_conditions(
    p: &ExponentProfile,
    nl: &Nonlinearity,
    inner: f64,
    outer: f64,
) -> Result<MultiplicityReport, CriteriaError> {
    check_sizes(p, nl)?;
    if !(inner.is_finite() && outer.is_finite() && 0.0 < inner && inner < outer) {
        return Err(CriteriaError::BadRadii { inner, outer });
    }
    let t = nl.t();
    let mut exact = true;

    let mut growth = Vec::with_capacity(t);
    for k in 1..=t {
        let report = nl.limsup_ratio(k, p.p_minus())?;
        exact &= report.exact;
        growth.push(GrowthConditionVerdict {
            node: k,
            nonpositive: report.nonpositive,
            witness: report.witness,
            exact: report.exact,
        });
    }
    let growth_holds = growth.iter().all(|g| g.nonpositive);

    let mut ball_sups = Vec::with_capacity(t);
    for k in 1..=t {
        let sup = nl.sup_big_f_on(k, Region::Ball { radius: outer })?;
        exact &= sup.exact;
        ball_sups.push(sup.value.as_finite().expect("ball sup is finite"));
    }
    let ball_sum: f64 = ball_sups.iter().sum();
    let mut global_sum = 0.0f64;
    let mut global_infinite = false;
    for k in 1..=t {
        let sup = nl.sup_big_f_on(k, Region::AllReals)?;
        exact &= sup.exact;
        match sup.value {
            SupValue::Finite(v) => global_sum += v,
            SupValue::PlusInfinity => global_infinite = true,
        }
    }
    let gap = if global_infinite {
        GapConditionVerdict {
            ball_sum,
            global_sum: SupValue::PlusInfinity,
            holds: true,
        }
    } else {
        GapConditionVerdict {
            ball_sum,
            global_sum: SupValue::Finite(global_sum),
            holds: ball_sum < global_sum,
        }
    };

    let mut separation = Vec::with_capacity(t);
    for k in 1..=t {
        let sup = nl.sup_big_f_on(k, Region::Annulus { inner, outer })?;
        exact &= sup.exact;
        let annulus_sup = sup.value.as_finite().expect("annulus sup is finite");
        let bound: f64 = -ball_sups
            .iter()
            .enumerate()
            .filter(|(h, _)| *h + 1 != k)
            .map(|(_, v)| v)
            .sum::<f64>();
        separation.push(SeparationVerdict {
            node: k,
            annulus_sup,
            bound,
            holds: annulus_sup <= bound,
        });
    }
    let separation_holds = separation.iter().all(|s| s.holds);

    Ok(MultiplicityReport {
        inner_radius: inner,
        outer_radius: outer,
        growth_holds,
        growth,
        gap: GapConditionVerdict {
            holds: gap.holds,
            ..gap
        },
        separation_holds,
        all_hold: growth_holds && gap.holds && separation_holds,
        separation,
        exact,
    })
}

/// Both sides of the exact box-infimum identity for the potential-only
/// functional `u -> -sum_k F(k, u(k))` over the box `|u(k)| <= sigma`:
///
/// the left value minimizes `-F` node by node over its own candidate
/// enumeration, the right value is `-sum_k sup F` through the region
/// supremum route. The two must coincide to round-off for term lists.
pub fn ball_infimum_pair(nl: &Nonlinearity, sigma: f64) -> Result<(f64, f64), CriteriaError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(CriteriaError::BadSigma(sigma));
    }
    let mut left = 0.0f64;
    for k in 1..=nl.t() {
        let node_min = if nl.terms(k).is_some() {
            let mut candidates = vec![-sigma, sigma];
            candidates.extend(nl.sign_change_roots(k, -sigma, sigma));
            candidates
                .into_iter()
                .map(|t| -nl.eval_big_f(k, t))
                .fold(f64::INFINITY, f64::min)
        } else {
            // black-box node: reuse the sampled supremum with its sign
            // flipped; the identity then holds only to sampling accuracy
            -nl.sup_big_f_on(k, Region::Ball { radius: sigma })?
                .value
                .as_finite()
                .expect("ball sup is finite")
        };
        left += node_min;
    }
    let mut right_sum = 0.0f64;
    for k in 1..=nl.t() {
        right_sum += nl
            .sup_big_f_on(k, Region::Ball { radius: sigma })?
            .value
            .as_finite()
            .expect("ball sup is finite");
    }
    Ok((left, -right_sum))
}

/// How the annulus radii fed to the multiplicity check were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiiSource {
    Explicit,
    ClosedFormBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiiReport {
    pub inner: f64,
    pub outer: f64,
    pub source: RadiiSource,
    /// The modular window `(r, s)` the bounds were derived from.
    pub modular_window: Option<(f64, f64)>,
    /// Numeric sharp estimates, reported alongside the conservative bounds.
    pub estimates: Option<RadiiEstimate>,
}

/// Outcome of one threshold criterion inside a [`CriteriaReport`]: either a
/// lambda range or the reason the criterion does not apply to this problem.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum ThresholdOutcome {
    Applies {
        #[serde(flatten)]
        range: LambdaRange,
    },
    NotApplicable {
        reason: String,
    },
}

impl ThresholdOutcome {
    fn from_result(result: Result<LambdaRange, CriteriaError>) -> Result<Self, CriteriaError> {
        match result {
            Ok(range) => Ok(ThresholdOutcome::Applies { range }),
            Err(
                e @ (CriteriaError::MissingBound { .. }
                | CriteriaError::ExponentCaseMismatch { .. }
                | CriteriaError::ThresholdNotPositive { .. }
                | CriteriaError::DegenerateExponent),
            ) => Ok(ThresholdOutcome::NotApplicable {
                reason: e.to_string(),
            }),
            Err(e) => Err(e),
        }
    }

    pub fn range(&self) -> Option<&LambdaRange> {
        match self {
            ThresholdOutcome::Applies { range } => Some(range),
            ThresholdOutcome::NotApplicable { .. } => None,
        }
    }
}

/// Options for assembling a full [`CriteriaReport`].
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CriteriaOptions {
    pub reading: ExponentReading,
    /// Sphere level bound for the mountain-pass threshold.
    pub m_bound: Option<f64>,
    /// Explicit annulus radii `(inner, outer)`; takes precedence over the
    /// modular window.
    pub radii: Option<(f64, f64)>,
    /// Modular window `(r, s)` to derive radii from.
    pub modular_window: Option<(f64, f64)>,
    pub budget: SearchBudget,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        CriteriaOptions {
            reading: ExponentReading::Literal,
            m_bound: None,
            radii: None,
            modular_window: None,
            budget: SearchBudget::default(),
        }
    }
}

/// Everything the `check` command reports: exponent gaps, the three
/// thresholds, annulus radii, and the multiplicity verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct CriteriaReport {
    pub t: usize,
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    /// `p^- - (q^+ + 1)`: positive means coercive for all lambda.
    pub coercive_gap: f64,
    /// `p^+ - (q^- + 1)`: negative means anti-coercive for all lambda.
    pub anticoercive_gap: f64,
    pub reading: ExponentReading,
    pub coercive: ThresholdOutcome,
    pub anticoercive: ThresholdOutcome,
    pub mountain_pass: Option<ThresholdOutcome>,
    pub radii: Option<RadiiReport>,
    pub multiplicity: Option<MultiplicityReport>,
}

/// Runs every criterion that the stored bounds and options allow.
pub fn criteria_report(
    p: &ExponentProfile,
    nl: &Nonlinearity,
    options: &CriteriaOptions,
) -> Result<CriteriaReport, CriteriaError> {
    check_sizes(p, nl)?;
    let coercive = match nl.upper_growth_bound() {
        Some(_) => {
            let constants =
                constants_report(p, nl.q_plus() + 1.0, &options.budget, &FuzzSpec::new(p.t()))?;
            ThresholdOutcome::from_result(lambda_star_coercive(p, nl, &constants))?
        }
        None => ThresholdOutcome::NotApplicable {
            reason: CriteriaError::MissingBound {
                which: "upper growth",
            }
            .to_string(),
        },
    };
    let anticoercive =
        ThresholdOutcome::from_result(lambda_star_anticoercive(p, nl, options.reading))?;
    let mountain_pass = options
        .m_bound
        .map(|m| {
            ThresholdOutcome::from_result(lambda_star_mountain_pass(p, nl, m, options.reading))
        })
        .transpose()?;

    let radii = match (options.radii, options.modular_window) {
        (Some((inner, outer)), _) => Some(RadiiReport {
            inner,
            outer,
            source: RadiiSource::Explicit,
            modular_window: None,
            estimates: None,
        }),
        (None, Some((r, s))) => {
            if !(0.0 < r && r < s) {
                return Err(CriteriaError::BadWindow { r, s });
            }
            Some(RadiiReport {
                inner: annulus_inner_bound(p, r)?,
                outer: annulus_outer_bound(p, s)?,
                source: RadiiSource::ClosedFormBounds,
                modular_window: Some((r, s)),
                estimates: Some(estimate_annulus_radii(p, r, s, &options.budget)?),
            })
        }
        (None, None) => None,
    };
    let multiplicity = radii
        .as_ref()
        .map(|radii| check_multiplicity_conditions(p, nl, radii.inner, radii.outer))
        .transpose()?;

    Ok(CriteriaReport {
        t: p.t(),
        p_minus: p.p_minus(),
        p_plus: p.p_plus(),
        q_minus: nl.q_minus(),
        q_plus: nl.q_plus(),
        coercive_gap: p.p_minus() - (nl.q_plus() + 1.0),
        anticoercive_gap: p.p_plus() - (nl.q_minus() + 1.0),
        reading: options.reading,
        coercive,
        anticoercive,
        mountain_pass,
        radii,
        multiplicity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Term;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn example_profile() -> ExponentProfile {
        ExponentProfile::new(vec![4.0, 5.0, 4.0, 4.0]).unwrap()
    }

    fn example_nonlinearity() -> Nonlinearity {
        Nonlinearity::from_terms(vec![
            vec![Term::poly(0.2, 0.0, 3), Term::poly(-2.0, 0.0, 1)],
            vec![Term::poly(-4.0, 0.1, 3)],
        ])
        .unwrap()
    }

    /// T = 1, p = 2, f(t) = t: the borderline coercive instance with every
    /// constant known in closed form.
    fn linear_instance(scale: f64) -> (ExponentProfile, Nonlinearity) {
        let p = ExponentProfile::constant(1, 2.0).unwrap();
        let nl = Nonlinearity::from_terms(vec![vec![Term::poly(1.0, 0.0, 1)]])
            .unwrap()
            .with_upper_growth_bound(vec![scale], vec![0.0])
            .unwrap()
            .with_lower_growth_bound(vec![scale], vec![0.0])
            .unwrap()
            .with_pure_lower_bound(vec![scale])
            .unwrap();
        (p, nl)
    }

    #[test]
    fn coercive_borderline_threshold_is_two() {
        let (p, nl) = linear_instance(1.0);
        let constants =
            constants_report(&p, 2.0, &SearchBudget::default(), &FuzzSpec::new(1)).unwrap();
        let range = lambda_star_coercive(&p, &nl, &constants).unwrap();
        // C1 (q^- + 1) / (p^+ a^+ c_2) = 1 * 2 / (2 * 1 * 1/2) = 2
        match range {
            LambdaRange::Below { threshold } => {
                assert_relative_eq!(threshold, 2.0, max_relative = 1e-9)
            }
            other => panic!("expected a below-threshold range, got {other:?}"),
        }
        assert!(range.contains(1.0));
        assert!(!range.contains(3.0));
    }

    #[test]
    fn coercive_gap_means_every_lambda_works() {
        // p = 4 against q = 2: gap 1
        let p = ExponentProfile::constant(1, 4.0).unwrap();
        let nl = Nonlinearity::from_terms(vec![vec![Term::signed(1.0, 0.0, 2.0)]])
            .unwrap()
            .with_upper_growth_bound(vec![1.0], vec![0.0])
            .unwrap();
        let constants =
            constants_report(&p, 3.0, &SearchBudget::default(), &FuzzSpec::new(1)).unwrap();
        assert_eq!(
            lambda_star_coercive(&p, &nl, &constants).unwrap(),
            LambdaRange::All
        );
    }

    #[test]
    fn coercive_rejects_wrong_case_missing_bound_and_stale_constants() {
        let (p, nl) = linear_instance(1.0);
        // wrong case: q too large for p
        let p_small = ExponentProfile::constant(1, 1.5).unwrap();
        let constants =
            constants_report(&p, 2.0, &SearchBudget::default(), &FuzzSpec::new(1)).unwrap();
        assert!(matches!(
            lambda_star_coercive(&p_small, &nl, &constants),
            Err(CriteriaError::ExponentCaseMismatch { .. })
        ));
        // missing upper bound
        let bare = Nonlinearity::from_terms(vec![vec![Term::poly(1.0, 0.0, 1)]]).unwrap();
        assert!(matches!(
            lambda_star_coercive(&p, &bare, &constants),
            Err(CriteriaError::MissingBound { .. })
        ));
        // constants computed at the wrong order
        let stale = constants_report(&p, 3.0, &SearchBudget::default(), &FuzzSpec::new(1)).unwrap();
        assert!(matches!(
            lambda_star_coercive(&p, &nl, &stale),
            Err(CriteriaError::WrongConstantOrder { .. })
        ));
    }

    #[test]
    fn thresholds_are_inversely_homogeneous_in_their_coefficient() {
        let (p, nl1) = linear_instance(1.0);
        let (_, nl2) = linear_instance(2.0);
        let constants =
            constants_report(&p, 2.0, &SearchBudget::default(), &FuzzSpec::new(1)).unwrap();
        let t1 = lambda_star_coercive(&p, &nl1, &constants)
            .unwrap()
            .threshold()
            .unwrap();
        let t2 = lambda_star_coercive(&p, &nl2, &constants)
            .unwrap()
            .threshold()
            .unwrap();
        assert_eq!(t2 * 2.0, t1);

        for reading in [ExponentReading::Literal, ExponentReading::Alt] {
            let a1 = lambda_star_anticoercive(&p, &nl1, reading)
                .unwrap()
                .threshold()
                .unwrap();
            let a2 = lambda_star_anticoercive(&p, &nl2, reading)
                .unwrap()
                .threshold()
                .unwrap();
            assert_eq!(a2 * 2.0, a1);

            let m1 = lambda_star_mountain_pass(&p, &nl1, -1.0, reading)
                .unwrap()
                .threshold()
                .unwrap();
            let m2 = lambda_star_mountain_pass(&p, &nl2, -1.0, reading)
                .unwrap()
                .threshold()
                .unwrap();
            assert_eq!(m2 * 2.0, m1);
        }
    }

    #[test]
    fn anticoercive_borderline_makes_rays_descend() {
        let (p, nl) = linear_instance(1.0);
        // p^+ = 2 = q^- + 1: literal E = 2/(3-1) = 1,
        // lambda* = (2/2) * 2 * 4 / (1 * 2) = 4
        let range = lambda_star_anticoercive(&p, &nl, ExponentReading::Literal).unwrap();
        let threshold = range.threshold().unwrap();
        assert_relative_eq!(threshold, 4.0, max_relative = 1e-12);
        let alt = lambda_star_anticoercive(&p, &nl, ExponentReading::Alt)
            .unwrap()
            .threshold()
            .unwrap();
        assert_relative_eq!(alt, 8.0 / 2.0f64.sqrt(), max_relative = 1e-12);

        // ray-descent cross-check at the threshold: J(c) = c^2 (1 - lambda/2)
        // falls for lambda = 4, rises for lambda = 1/2
        let spec = crate::energy::ProblemSpec::new(p.clone(), nl.clone(), threshold).unwrap();
        let big = Sequence::new(vec![0.0, 100.0, 0.0]).unwrap();
        assert!(spec.energy(&big) < -1.0);
        let small_lambda = spec.with_lambda(0.5).unwrap();
        assert!(small_lambda.energy(&big) > 1.0);
    }

    #[test]
    fn anticoercive_strict_case_and_errors() {
        // p = 2 against q = 3: all lambda
        let p = ExponentProfile::constant(1, 2.0).unwrap();
        let nl = Nonlinearity::from_terms(vec![vec![Term::poly(1.0, 0.0, 3)]])
            .unwrap()
            .with_lower_growth_bound(vec![1.0], vec![0.0])
            .unwrap();
        assert_eq!(
            lambda_star_anticoercive(&p, &nl, ExponentReading::Literal).unwrap(),
            LambdaRange::All
        );
        // p = 4 against q = 1: wrong side
        let p4 = ExponentProfile::constant(1, 4.0).unwrap();
        let (_, linear) = linear_instance(1.0);
        assert!(matches!(
            lambda_star_anticoercive(&p4, &linear, ExponentReading::Literal),
            Err(CriteriaError::ExponentCaseMismatch { .. })
        ));
        // q^- = 3 degenerates the literal reading but not the alternative
        let q3 = Nonlinearity::from_terms(vec![vec![Term::poly(1.0, 0.0, 3)]])
            .unwrap()
            .with_lower_growth_bound(vec![1.0], vec![0.0])
            .unwrap();
        assert!(matches!(
            lambda_star_anticoercive(&p4, &q3, ExponentReading::Literal),
            Err(CriteriaError::DegenerateExponent)
        ));
        assert!(lambda_star_anticoercive(&p4, &q3, ExponentReading::Alt).is_ok());
    }

    /// T = 1, p = 3, f(t) = t, M = -1: the threshold is 20/3 under the
    /// literal reading and 40/(3 sqrt(2)) under the alternative, and both
    /// push the energy below M everywhere on the unit sphere.
    #[test]
    fn mountain_pass_threshold_and_sphere_check_linear_growth() {
        let p = ExponentProfile::constant(1, 3.0).unwrap();
        let nl = Nonlinearity::from_terms(vec![vec![Term::poly(1.0, 0.0, 1)]])
            .unwrap()
            .with_pure_lower_bound(vec![1.0])
            .unwrap();
        let literal = lambda_star_mountain_pass(&p, &nl, -1.0, ExponentReading::Literal)
            .unwrap()
            .threshold()
            .unwrap();
        assert_relative_eq!(literal, 20.0 / 3.0, max_relative = 1e-12);
        let alt = lambda_star_mountain_pass(&p, &nl, -1.0, ExponentReading::Alt)
            .unwrap()
            .threshold()
            .unwrap();
        assert_relative_eq!(alt, 40.0 / (3.0 * 2.0f64.sqrt()), max_relative = 1e-12);

        // the unit sphere in one interior dimension is two points
        for lambda in [literal, alt] {
            let spec = crate::energy::ProblemSpec::new(p.clone(), nl.clone(), lambda).unwrap();
            for x in [1.0 / 2.0f64.sqrt(), -1.0 / 2.0f64.sqrt()] {
                let u = Sequence::new(vec![0.0, x, 0.0]).unwrap();
                assert!((u.h_norm() - 1.0).abs() < 1e-12);
                assert!(
                    spec.energy(&u) <= -1.0 + 1e-8,
                    "sphere point {x} has energy {}",
                    spec.energy(&u)
                );
            }
        }
    }

    /// With quadratic growth the literal reading's threshold fails its own
    /// sphere check while the alternative passes; this pins the observed
    /// discrepancy that motivated the reading switch.
    #[test]
    fn literal_reading_misses_the_sphere_bound_when_growth_is_quadratic() {
        let p = ExponentProfile::constant(1, 4.0).unwrap();
        let nl = Nonlinearity::from_terms(vec![vec![Term::signed(1.0, 0.0, 2.0)]])
            .unwrap()
            .with_pure_lower_bound(vec![1.0])
            .unwrap();
        let literal = lambda_star_mountain_pass(&p, &nl, -1.0, ExponentReading::Literal)
            .unwrap()
            .threshold()
            .unwrap();
        assert_relative_eq!(literal, 9.0, max_relative = 1e-12);
        let alt = lambda_star_mountain_pass(&p, &nl, -1.0, ExponentReading::Alt)
            .unwrap()
            .threshold()
            .unwrap();
        assert_relative_eq!(alt, 36.0 / 2.0f64.powf(1.0 / 3.0), max_relative = 1e-12);

        let x = 1.0 / 2.0f64.sqrt();
        let sphere_energy = |lambda: f64| {
            let spec = crate::energy::ProblemSpec::new(p.clone(), nl.clone(), lambda).unwrap();
            spec.energy(&Sequence::new(vec![0.0, x, 0.0]).unwrap())
        };
        assert!(
            sphere_energy(literal) > -1.0,
            "literal reading fails: J = {}",
            sphere_energy(literal)
        );
        assert!(sphere_energy(alt) <= -1.0 + 1e-8);
    }

    #[test]
    fn mountain_pass_rejects_bounds_that_kill_the_threshold() {
        let (p, nl) = linear_instance(1.0);
        assert!(matches!(
            lambda_star_mountain_pass(&p, &nl, 10.0, ExponentReading::Literal),
            Err(CriteriaError::ThresholdNotPositive { .. })
        ));
        let bare = Nonlinearity::from_terms(vec![vec![Term::poly(1.0, 0.0, 1)]]).unwrap();
        assert!(matches!(
            lambda_star_mountain_pass(&p, &bare, -1.0, ExponentReading::Literal),
            Err(CriteriaError::MissingBound { .. })
        ));
    }

    #[test]
    fn closed_form_radius_bounds_match_hand_values() {
        let p = example_profile();
        assert_relative_eq!(
            annulus_inner_bound(&p, 1.0).unwrap(),
            0.5296119205244061,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            annulus_outer_bound(&p, 1.0).unwrap(),
            2.2430231718318305,
            max_relative = 1e-12
        );
        // T = 1, p = 2: inner bound sqrt(r)/2, outer bound sqrt(2s)
        let p2 = ExponentProfile::constant(1, 2.0).unwrap();
        assert_relative_eq!(
            annulus_inner_bound(&p2, 0.09).unwrap(),
            0.15,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            annulus_outer_bound(&p2, 2.0).unwrap(),
            2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn radius_estimates_hit_the_one_dimensional_closed_form() {
        // T = 1, p = 2: modular of (0, x, 0) is x^2, so both radii are exact
        // square roots
        let p = ExponentProfile::constant(1, 2.0).unwrap();
        let estimate = estimate_annulus_radii(&p, 0.25, 4.0, &SearchBudget::default()).unwrap();
        assert!(estimate.converged);
        assert_relative_eq!(estimate.inner, 0.5, epsilon = 1e-9);
        assert_relative_eq!(estimate.outer, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn radius_estimates_stay_inside_the_closed_form_bounds() {
        let p = example_profile();
        let budget = SearchBudget {
            starts: 16,
            ..SearchBudget::default()
        };
        let mut previous_inner = 0.0;
        let mut previous_outer = 0.0;
        for (r, s) in [(0.5, 0.8), (1.0, 1.6), (2.0, 3.2)] {
            let estimate = estimate_annulus_radii(&p, r, s, &budget).unwrap();
            assert!(
                estimate.inner >= annulus_inner_bound(&p, r).unwrap() - 1e-8,
                "inner estimate {} under its lower bound",
                estimate.inner
            );
            assert!(
                estimate.outer <= annulus_outer_bound(&p, s).unwrap() + 1e-8,
                "outer estimate {} over its upper bound",
                estimate.outer
            );
            // set inclusion makes both radii nondecreasing in their window
            assert!(estimate.inner >= previous_inner - 1e-12);
            assert!(estimate.outer >= previous_outer - 1e-12);
            previous_inner = estimate.inner;
            previous_outer = estimate.outer;
        }
    }

    #[test]
    fn multiplicity_conditions_on_the_bundled_example() {
        let p = example_profile();
        let nl = example_nonlinearity();
        let report = check_multiplicity_conditions(&p, &nl, 0.2, 3.0).unwrap();
        assert!(report.exact);

        // the asymptotic condition fails at node 1: F grows like t^4/20
        assert!(!report.growth_holds);
        assert!(!report.growth[0].nonpositive);
        assert!(report.growth[0].witness.is_some());
        assert!(report.growth[1].nonpositive);

        // ball sups are 0 and 1e-4; the global sum is infinite
        assert!(report.gap.holds);
        assert_relative_eq!(report.gap.ball_sum, 1e-4, max_relative = 1e-12);
        assert!(report.gap.global_sum.is_infinite());

        // separation: node 1 has annulus sup -0.03992 <= -1e-4, node 2 has
        // exactly 0 <= 0
        assert!(report.separation_holds);
        assert_relative_eq!(
            report.separation[0].annulus_sup,
            -0.03992,
            max_relative = 1e-12
        );
        assert_relative_eq!(report.separation[0].bound, -1e-4, max_relative = 1e-12);
        assert_eq!(report.separation[1].annulus_sup, 0.0);
        assert_eq!(report.separation[1].bound, 0.0);

        assert!(!report.all_hold, "the growth condition sinks the verdict");
    }

    #[test]
    fn multiplicity_rejects_bad_radii() {
        let p = example_profile();
        let nl = example_nonlinearity();
        assert!(matches!(
            check_multiplicity_conditions(&p, &nl, 3.0, 0.2),
            Err(CriteriaError::BadRadii { .. })
        ));
        assert!(check_multiplicity_conditions(&p, &nl, 0.0, 3.0).is_err());
    }

    #[test]
    fn ball_infimum_identity_on_hand_examples() {
        // bundled example, sigma = 3: both sides -1e-4
        let nl = example_nonlinearity();
        let (left, right) = ball_infimum_pair(&nl, 3.0).unwrap();
        assert_relative_eq!(left, -1e-4, max_relative = 1e-12);
        assert!((left - right).abs() <= 1e-15 * left.abs().max(1.0));

        // f(t) = t, sigma = 1: sup F = 1/2 at the edge
        let linear = Nonlinearity::from_terms(vec![vec![Term::poly(1.0, 0.0, 1)]]).unwrap();
        let (left, right) = ball_infimum_pair(&linear, 1.0).unwrap();
        assert_relative_eq!(left, -0.5, max_relative = 1e-15);
        assert_eq!(left, right);

        // F <= 0 with F(0) = 0: both sides exactly zero
        let damped = Nonlinearity::from_terms(vec![vec![Term::poly(-1.0, 0.0, 1)]]).unwrap();
        let (left, right) = ball_infimum_pair(&damped, 2.0).unwrap();
        assert_eq!(left, 0.0);
        assert_eq!(right, 0.0);
    }

    #[test]
    fn ball_infimum_matches_brute_force_grid() {
        // T = 3 random-ish term lists against a dense grid minimization of
        // the separable potential
        let nl = Nonlinearity::from_terms(vec![
            vec![Term::poly(0.7, 0.3, 2), Term::poly(-1.1, 0.0, 1)],
            vec![Term::poly(-0.4, -0.5, 3)],
            vec![Term::signed(0.9, 0.2, 1.5), Term::poly(0.3, 0.0, 0)],
        ])
        .unwrap();
        let sigma = 1.5;
        let (left, right) = ball_infimum_pair(&nl, sigma).unwrap();
        let mut brute = 0.0;
        for k in 1..=3 {
            let mut node_min = f64::INFINITY;
            for i in 0..=60_000 {
                let t = -sigma + 2.0 * sigma * i as f64 / 60_000.0;
                node_min = node_min.min(-nl.eval_big_f(k, t));
            }
            brute += node_min;
        }
        assert_relative_eq!(left, brute, epsilon = 1e-6);
        assert_relative_eq!(left, right, epsilon = 1e-12);
    }

    #[test]
    fn full_report_on_the_example_is_self_consistent() {
        let p = example_profile();
        let nl = example_nonlinearity()
            .with_upper_growth_bound(vec![0.2, 4.2], vec![2.0, 8.0])
            .unwrap();
        let options = CriteriaOptions {
            m_bound: Some(-1.0),
            modular_window: Some((1.0, 2.0)),
            ..CriteriaOptions::default()
        };
        let report = criteria_report(&p, &nl, &options).unwrap();
        assert_eq!(report.t, 2);
        assert_eq!(report.p_minus, 4.0);
        assert_eq!(report.q_plus, 3.0);
        assert_eq!(report.coercive_gap, 0.0);
        // borderline coercive: a threshold must come out
        let range = report.coercive.range().expect("coercive applies");
        assert!(range.threshold().unwrap() > 0.0);
        // p^+ = 5 > q^- + 1 = 4: anti-coercive criterion does not apply
        assert!(report.anticoercive.range().is_none());
        // no pure lower bound stored: mountain pass reports not-applicable
        assert!(report.mountain_pass.as_ref().unwrap().range().is_none());
        let radii = report.radii.as_ref().expect("window given");
        assert_eq!(radii.source, RadiiSource::ClosedFormBounds);
        assert_relative_eq!(
            radii.inner,
            annulus_inner_bound(&p, 1.0).unwrap(),
            max_relative = 1e-15
        );
        let multiplicity = report.multiplicity.as_ref().expect("radii derived");
        assert_eq!(multiplicity.inner_radius, radii.inner);
        // JSON serialization round-trips without panicking and tags the
        // reading
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["reading"], "literal");
        assert_eq!(json["coercive"]["status"], "applies");
        assert_eq!(json["coercive"]["range"], "below");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        /// The exact identity between the two box-infimum routes on random
        /// term lists.
        #[test]
        fn ball_infimum_routes_agree(
            coefs in proptest::collection::vec(
                (-2.0f64..2.0, -1.0f64..1.0, 0u32..4), 1..5),
            sigma in 0.1f64..2.0,
            nodes in 1usize..4,
        ) {
            let lists: Vec<Vec<Term>> = (0..nodes)
                .map(|node| {
                    coefs
                        .iter()
                        .skip(node % 2)
                        .map(|&(c, shift, n)| Term::poly(c, shift, n))
                        .collect()
                })
                .collect();
            prop_assume!(lists.iter().all(|l| !l.is_empty()));
            let nl = Nonlinearity::from_terms(lists).unwrap();
            let (left, right) = ball_infimum_pair(&nl, sigma).unwrap();
            prop_assert!(
                (left - right).abs() <= 1e-10 * left.abs().max(right.abs()).max(1.0),
                "left {} right {}", left, right
            );
        }

        /// Radii bounds sandwich the numeric estimates on random profiles.
        #[test]
        fn radius_estimates_respect_bounds(
            entries in proptest::collection::vec(2.0f64..5.0, 3..6),
        ) {
            let p = ExponentProfile::new(entries).unwrap();
            let budget = SearchBudget { starts: 8, max_iters: 200, seed: 0x5EED };
            let estimate = estimate_annulus_radii(&p, 0.7, 1.3, &budget).unwrap();
            prop_assert!(estimate.inner >= annulus_inner_bound(&p, 0.7).unwrap() - 1e-8);
            prop_assert!(estimate.outer <= annulus_outer_bound(&p, 1.3).unwrap() + 1e-8);
            prop_assert!(estimate.inner <= estimate.outer);
        }
    }
}
