//! Critical-point solvers: direct minimization for the coercive regime,
//! deflated Newton for multiplicity, a discretized-path mountain-pass
//! search, and a lambda-grid sweep with warm starts.
//!
//! Certification discipline: every returned point is checked against the
//! ORIGINAL problem's residual sup norm, never against a deflated or
//! otherwise modified map. Deflation reshapes the search landscape only;
//! the certificate never sees it. All solvers are sequential and seeded,
//! so a fixed configuration reproduces results bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{Classification, CriticalPoint, EnergyError, ProblemSpec};
use crate::nonlinearity::Nonlinearity;
use crate::sequence::{ExponentProfile, Sequence};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(
        "no barrier between the path endpoints: the path maximum (J = {path_max}) \
         does not exceed the endpoint level (J = {endpoint})"
    )]
    NoBarrier { path_max: f64, endpoint: f64 },
    #[error(
        "did not reach the residual tolerance in {iterations} iterations \
             (best residual {residual})"
    )]
    DidNotConverge { iterations: usize, residual: f64 },
    #[error("lambda grid must be nonempty, finite, and strictly ascending")]
    BadGrid,
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sup-norm residual below which a point counts as critical.
    pub residual_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Additive shift in each deflation factor, keeping it bounded away
    /// from zero far from known roots.
    pub deflation_alpha: f64,
    /// Power on the inverse distance in each deflation factor.
    pub deflation_power: f64,
    /// Minimal pairwise h-norm distance between reported roots.
    pub distinct_radius: f64,
    /// Random starts added per deflation round.
    pub multistart: usize,
    pub seed: u64,
    /// Nodes on the mountain-pass path, endpoints included.
    pub path_points: usize,
    /// Solution count the lambda sweep flags as a multiplicity hit.
    pub target_count: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tol: 1e-8,
            max_iters: 10_000,
            armijo_c: 1e-4,
            backtrack: 0.5,
            deflation_alpha: 1.0,
            deflation_power: 2.0,
            distinct_radius: 1e-4,
            multistart: 32,
            seed: 0x5EED,
            path_points: 41,
            target_count: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(SolverError::InvalidConfig(
                "residual tolerance must be positive",
            ));
        }
        if self.distinct_radius <= self.residual_tol {
            return Err(SolverError::InvalidConfig(
                "distinctness radius must exceed the residual tolerance",
            ));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(SolverError::InvalidConfig(
                "Armijo constant must lie in (0, 1)",
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(SolverError::InvalidConfig(
                "backtrack factor must lie in (0, 1)",
            ));
        }
        if !(self.deflation_alpha > 0.0 && self.deflation_power > 0.0) {
            return Err(SolverError::InvalidConfig(
                "deflation shift and power must be positive",
            ));
        }
        if self.max_iters == 0 {
            return Err(SolverError::InvalidConfig(
                "iteration budget must be positive",
            ));
        }
        if self.path_points < 3 {
            return Err(SolverError::InvalidConfig(
                "path needs at least three nodes",
            ));
        }
        if self.target_count == 0 {
            return Err(SolverError::InvalidConfig("target count must be positive"));
        }
        Ok(())
    }
}

/// Outcome of a single descent run. Non-convergence is data, not an
/// error: the best iterate is still returned with `converged = false`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub point: CriticalPoint,
    pub converged: bool,
    pub iterations: usize,
}

/// All certified-distinct critical points found at one lambda.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSet {
    pub lambda: f64,
    pub points: Vec<CriticalPoint>,
    /// One human-readable origin string per point (start, round,
    /// iteration count, warnings).
    pub provenance: Vec<String>,
    /// Full symmetric matrix of pairwise h-norm distances.
    pub pairwise_distances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub n_solutions: usize,
    pub energies: Vec<f64>,
    pub classifications: Vec<Classification>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub sets: Vec<SolutionSet>,
    /// First grid lambda whose solution count reached the target.
    pub first_multiplicity_hit: Option<f64>,
}

fn seq(values: &[f64]) -> Option<Sequence> {
    Sequence::from_interior(values).ok()
}

/// h-norm of the difference of two interior vectors (zero boundary).
fn h_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut sum = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        let step = d - prev;
        sum += step * step;
        prev = d;
    }
    sum += prev * prev;
    sum.sqrt()
}

/// Gradient descent with Armijo backtracking. The trial step starts from
/// a curvature estimate built from the previous step (falling back to 1),
/// and backtracking enforces monotone energy decrease regardless.
pub fn minimize_direct(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    start: &Sequence,
) -> Result<SolveResult, SolverError> {
    cfg.validate()?;
    let mut u: Vec<f64> = start.interior().to_vec();
    let mut grad = spec.gradient(start);
    let mut energy = spec.energy(start);
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = sup_norm(&grad) < cfg.residual_tol;

    while !converged && iterations < cfg.max_iters {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let mut step = match &previous {
            Some((u_prev, g_prev)) => {
                let mut du_dg = 0.0;
                let mut dg_dg = 0.0;
                for j in 0..u.len() {
                    let du = u[j] - u_prev[j];
                    let dg = grad[j] - g_prev[j];
                    du_dg += du * dg;
                    dg_dg += dg * dg;
                }
                if du_dg > 0.0 && dg_dg > 0.0 {
                    (du_dg / dg_dg).clamp(1e-12, 1e6)
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let mut accepted = None;
        while step > 1e-18 {
            let trial: Vec<f64> = u.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            if let Some(trial_seq) = seq(&trial) {
                let trial_energy = spec.energy(&trial_seq);
                if trial_energy <= energy - cfg.armijo_c * step * g2 {
                    accepted = Some((trial, trial_seq, trial_energy));
                    break;
                }
            }
            step *= cfg.backtrack;
        }
        let Some((trial, trial_seq, trial_energy)) = accepted else {
            // no descent step representable: the iterate is at the
            // numerical floor
            break;
        };
        previous = Some((u, grad));
        u = trial;
        grad = spec.gradient(&trial_seq);
        energy = trial_energy;
        iterations += 1;
        converged = sup_norm(&grad) < cfg.residual_tol;
    }

    let final_seq = seq(&u).expect("iterates stay finite");
    Ok(SolveResult {
        point: spec.classify(&final_seq),
        converged: spec.residual_sup_norm(&final_seq) < cfg.residual_tol,
        iterations,
    })
}

fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Product of `1/d^power + alpha` over the known roots, `d` the h-norm
/// distance to each.
fn deflation_factor(u: &[f64], roots: &[Vec<f64>], cfg: &SolverConfig) -> f64 {
    roots
        .iter()
        .map(|w| {
            let d = h_distance(u, w);
            if d < 1e-150 {
                f64::INFINITY
            } else {
                d.powf(-cfg.deflation_power) + cfg.deflation_alpha
            }
        })
        .product()
}

fn deflated_map(
    spec: &ProblemSpec,
    u: &[f64],
    roots: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Option<Vec<f64>> {
    let s = seq(u)?;
    let factor = deflation_factor(u, roots, cfg);
    Some(spec.gradient(&s).into_iter().map(|g| factor * g).collect())
}

fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Central-difference Jacobian of the deflated map. Entries that come out
/// non-finite (the flux derivative blows up at a zero difference when the
/// exponent is below 2) are replaced by the zero one-sided limit; Tikhonov
/// damping downstream keeps the resulting steps finite.
fn fd_jacobian(
    spec: &ProblemSpec,
    u: &[f64],
    roots: &[Vec<f64>],
    cfg: &SolverConfig,
    scrubbed: &mut bool,
) -> Option<DMatrix<f64>> {
    let t = u.len();
    let mut jac = DMatrix::zeros(t, t);
    for j in 0..t {
        let h = 1e-6 * u[j].abs().max(1.0);
        let mut plus = u.to_vec();
        plus[j] += h;
        let mut minus = u.to_vec();
        minus[j] -= h;
        let gp = deflated_map(spec, &plus, roots, cfg)?;
        let gm = deflated_map(spec, &minus, roots, cfg)?;
        for i in 0..t {
            let entry = (gp[i] - gm[i]) / (2.0 * h);
            jac[(i, j)] = if entry.is_finite() {
                entry
            } else {
                *scrubbed = true;
                0.0
            };
        }
    }
    Some(jac)
}

struct NewtonRun {
    iterate: Option<Vec<f64>>,
    iterations: usize,
    /// True when an iterate sat on a zero difference with exponent below
    /// 2, where the flux derivative is singular and the Jacobian entry
    /// was taken from the zero one-sided limit.
    singular_flux: bool,
}

fn has_singular_flux(spec: &ProblemSpec, u: &Sequence) -> bool {
    let p = spec.p();
    u.forward_differences()
        .iter()
        .enumerate()
        .any(|(k, &d)| d == 0.0 && p.at(k) < 2.0)
}

/// Damped Newton on the deflated map. Convergence is declared on the
/// UNdeflated residual sup norm; exhaustion of damping or iterations
/// returns no iterate.
fn damped_newton(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    start: &[f64],
    roots: &[Vec<f64>],
) -> NewtonRun {
    let mut u = start.to_vec();
    let mut singular_flux = false;
    for iteration in 0..cfg.max_iters {
        let Some(u_seq) = seq(&u) else {
            return NewtonRun {
                iterate: None,
                iterations: iteration,
                singular_flux,
            };
        };
        if has_singular_flux(spec, &u_seq) {
            singular_flux = true;
        }
        if spec.residual_sup_norm(&u_seq) < cfg.residual_tol {
            return NewtonRun {
                iterate: Some(u),
                iterations: iteration,
                singular_flux,
            };
        }
        let Some(g) = deflated_map(spec, &u, roots, cfg) else {
            return NewtonRun {
                iterate: None,
                iterations: iteration,
                singular_flux,
            };
        };
        let g_norm = l2(&g);
        if !g_norm.is_finite() {
            return NewtonRun {
                iterate: None,
                iterations: iteration,
                singular_flux,
            };
        }
        let Some(jac) = fd_jacobian(spec, &u, roots, cfg, &mut singular_flux) else {
            return NewtonRun {
                iterate: None,
                iterations: iteration,
                singular_flux,
            };
        };
        let rhs = DVector::from_iterator(g.len(), g.iter().map(|v| -v));
        let mut direction = None;
        let mut ridge = 0.0f64;
        loop {
            let mut damped = jac.clone();
            for d in 0..damped.nrows() {
                damped[(d, d)] += ridge;
            }
            if let Some(s) = damped.lu().solve(&rhs) {
                if s.iter().all(|v| v.is_finite()) {
                    direction = Some(s);
                    break;
                }
            }
            ridge = if ridge == 0.0 { 1e-10 } else { ridge * 10.0 };
            if ridge > 1e3 {
                break;
            }
        }
        let Some(direction) = direction else {
            return NewtonRun {
                iterate: None,
                iterations: iteration,
                singular_flux,
            };
        };
        let mut sigma = 1.0f64;
        let mut moved = false;
        while sigma > 1e-14 {
            let trial: Vec<f64> = u
                .iter()
                .zip(direction.iter())
                .map(|(x, s)| x + sigma * s)
                .collect();
            if let Some(trial_g) = deflated_map(spec, &trial, roots, cfg) {
                let trial_norm = l2(&trial_g);
                if trial_norm.is_finite() && trial_norm < (1.0 - cfg.armijo_c * sigma) * g_norm {
                    u = trial;
                    moved = true;
                    break;
                }
            }
            sigma *= cfg.backtrack;
        }
        if !moved {
            return NewtonRun {
                iterate: None,
                iterations: iteration,
                singular_flux,
            };
        }
    }
    NewtonRun {
        iterate: None,
        iterations: cfg.max_iters,
        singular_flux,
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let a: f64 = rng.gen_range(1e-12..1.0);
    let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * a.ln()).sqrt() * b.cos()
}

fn round_starts(
    t: usize,
    warm: &[Vec<f64>],
    round: usize,
    cfg: &SolverConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<(String, Vec<f64>)> {
    let mut starts = Vec::new();
    if round == 1 {
        for (i, w) in warm.iter().enumerate() {
            starts.push((format!("warm start #{i}"), w.clone()));
        }
    }
    starts.push(("origin".to_string(), vec![0.0; t]));
    for amplitude in [0.1, 1.0, 10.0] {
        for k in 0..t {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; t];
                e[k] = sign * amplitude;
                starts.push((format!("{:+}*e{}", sign * amplitude, k + 1), e));
            }
        }
    }
    for j in 0..cfg.multistart {
        let v: Vec<f64> = (0..t).map(|_| gaussian(rng)).collect();
        starts.push((format!("random #{j} (round {round})"), v));
    }
    starts
}

/// Finds critical points by repeated damped Newton runs on the deflated
/// map, growing the deflation list as roots appear. A root is accepted
/// only when its UNdeflated residual passes the tolerance and it sits
/// farther than the distinctness radius from everything already found.
/// Terminates when a full round of starts adds nothing new.
pub fn solve_deflated(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<SolutionSet, SolverError> {
    solve_deflated_warm(spec, cfg, &[])
}

/// [`solve_deflated`] with extra first-round starts, for continuation
/// across nearby problems (each inner vector holds interior values).
pub fn solve_deflated_warm(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    warm: &[Vec<f64>],
) -> Result<SolutionSet, SolverError> {
    cfg.validate()?;
    let t = spec.p().t();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut roots: Vec<Vec<f64>> = Vec::new();
    let mut points: Vec<CriticalPoint> = Vec::new();
    let mut provenance: Vec<String> = Vec::new();

    for round in 1..=12 {
        let mut found_new = false;
        for (label, start) in round_starts(t, warm, round, cfg, &mut rng) {
            if roots.iter().any(|w| h_distance(&start, w) < 1e-9) {
                continue;
            }
            let run = damped_newton(spec, cfg, &start, &roots);
            let Some(candidate) = run.iterate else {
                continue;
            };
            if roots
                .iter()
                .all(|w| h_distance(&candidate, w) > cfg.distinct_radius)
            {
                let candidate_seq = seq(&candidate).expect("certified iterate is finite");
                points.push(spec.classify(&candidate_seq));
                let warning = if run.singular_flux {
                    "; singular flux derivative replaced by its zero one-sided limit"
                } else {
                    ""
                };
                provenance.push(format!(
                    "newton from {label}, round {round}, {} iterations{warning}",
                    run.iterations
                ));
                roots.push(candidate);
                found_new = true;
            }
        }
        if !found_new {
            break;
        }
    }

    let n = roots.len();
    let mut pairwise = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            pairwise[i][j] = h_distance(&roots[i], &roots[j]);
        }
    }
    Ok(SolutionSet {
        lambda: spec.lambda(),
        points,
        provenance,
        pairwise_distances: pairwise,
    })
}

/// Discretized-path mountain-pass search between the origin and `u1`:
/// hold a polyline of `path_points` nodes, repeatedly pull the
/// highest-energy interior node downhill (ties break toward the lowest
/// index), re-equidistribute by h-norm arclength, and finally polish the
/// hump with undeflated Newton. The certificate requires the polished
/// point to be critical and to sit at or above both endpoint levels.
pub fn mountain_pass(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u1: &Sequence,
) -> Result<CriticalPoint, SolverError> {
    cfg.validate()?;
    let t = spec.p().t();
    let n = cfg.path_points;
    let target: Vec<f64> = u1.interior().to_vec();
    let mut path: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let w = i as f64 / (n - 1) as f64;
            target.iter().map(|v| w * v).collect()
        })
        .collect();
    let endpoint_level = {
        let zero = seq(&vec![0.0; t]).expect("zero is finite");
        spec.energy(&zero).max(spec.energy(u1))
    };

    let energies = |path: &[Vec<f64>]| -> Vec<f64> {
        path.iter()
            .map(|v| spec.energy(&seq(v).expect("path stays finite")))
            .collect()
    };

    let mut stall = 0usize;
    let mut previous_max = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        let e = energies(&path);
        let argmax = e
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            })
            .0;
        if argmax == 0 || argmax == n - 1 {
            return Err(SolverError::NoBarrier {
                path_max: e[argmax],
                endpoint: endpoint_level,
            });
        }
        let node_seq = seq(&path[argmax]).expect("path stays finite");
        let grad = spec.gradient(&node_seq);
        if sup_norm(&grad) < cfg.residual_tol {
            break;
        }
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let node_energy = e[argmax];
        let mut sigma = 1.0f64;
        let mut moved = false;
        while sigma > 1e-18 {
            let trial: Vec<f64> = path[argmax]
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - sigma * g)
                .collect();
            if let Some(trial_seq) = seq(&trial) {
                if spec.energy(&trial_seq) <= node_energy - cfg.armijo_c * sigma * g2 {
                    path[argmax] = trial;
                    moved = true;
                    break;
                }
            }
            sigma *= cfg.backtrack;
        }
        if !moved {
            break;
        }
        redistribute(&mut path);
        let e_after = energies(&path);
        let new_max = e_after[1..n - 1]
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        if (previous_max - new_max).abs() <= 1e-13 * previous_max.abs().max(1.0) {
            stall += 1;
            if stall >= 25 {
                break;
            }
        } else {
            stall = 0;
        }
        previous_max = new_max;
    }

    let e = energies(&path);
    let polish_from = e[1..n - 1]
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i + 1, v)
            } else {
                (bi, bv)
            }
        })
        .0;
    let run = damped_newton(spec, cfg, &path[polish_from], &[]);
    let Some(polished) = run.iterate else {
        let best_seq = seq(&path[polish_from]).expect("path stays finite");
        return Err(SolverError::DidNotConverge {
            iterations: run.iterations,
            residual: spec.residual_sup_norm(&best_seq),
        });
    };
    let point = spec.classify(&seq(&polished).expect("certified iterate is finite"));
    if point.energy < endpoint_level - 1e-9 {
        // the polish slid off the hump into a low critical point: the
        // certificate fails the level condition
        return Err(SolverError::NoBarrier {
            path_max: point.energy,
            endpoint: endpoint_level,
        });
    }
    Ok(point)
}

/// Resamples the polyline to equal h-norm arclength spacing, endpoints
/// fixed.
fn redistribute(path: &mut Vec<Vec<f64>>) {
    let n = path.len();
    let mut cumulative = vec![0.0f64; n];
    for i in 1..n {
        cumulative[i] = cumulative[i - 1] + h_distance(&path[i], &path[i - 1]);
    }
    let total = cumulative[n - 1];
    if total <= 0.0 {
        return;
    }
    let mut resampled = Vec::with_capacity(n);
    resampled.push(path[0].clone());
    let mut segment = 0usize;
    for j in 1..n - 1 {
        let s = total * j as f64 / (n - 1) as f64;
        while segment + 1 < n - 1 && cumulative[segment + 1] < s {
            segment += 1;
        }
        let span = cumulative[segment + 1] - cumulative[segment];
        let w = if span > 0.0 {
            (s - cumulative[segment]) / span
        } else {
            0.0
        };
        let node: Vec<f64> = path[segment]
            .iter()
            .zip(&path[segment + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect();
        resampled.push(node);
    }
    resampled.push(path[n - 1].clone());
    *path = resampled;
}

/// Runs the deflated solver across an ascending lambda grid, warm-starting
/// each lambda from the previous solutions, and flags the first lambda
/// whose certified-distinct count reaches the configured target.
pub fn sweep_lambda(
    p: &ExponentProfile,
    nl: &Nonlinearity,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<SweepTable, SolverError> {
    cfg.validate()?;
    if grid.is_empty()
        || grid.iter().any(|l| !l.is_finite())
        || grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(SolverError::BadGrid);
    }
    let mut warm: Vec<Vec<f64>> = Vec::new();
    let mut rows = Vec::with_capacity(grid.len());
    let mut sets = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let spec = ProblemSpec::new(p.clone(), nl.clone(), lambda)?;
        let set = solve_deflated_warm(&spec, cfg, &warm)?;
        warm = set
            .points
            .iter()
            .map(|pt| pt.values[1..pt.values.len() - 1].to_vec())
            .collect();
        rows.push(SweepRow {
            lambda,
            n_solutions: set.points.len(),
            energies: set.points.iter().map(|pt| pt.energy).collect(),
            classifications: set.points.iter().map(|pt| pt.classification).collect(),
        });
        sets.push(set);
    }
    let first_multiplicity_hit = rows
        .iter()
        .find(|r| r.n_solutions >= cfg.target_count)
        .map(|r| r.lambda);
    Ok(SweepTable {
        rows,
        sets,
        first_multiplicity_hit,
    })
}
