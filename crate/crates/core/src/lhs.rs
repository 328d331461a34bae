//! Numerical LHS bound of `W`.
//!
//! For an LHS model, `Σ_{a,x} p(a,a|x,x) ≥ Σ_λ p(λ) Σ_x min_a p(a|x,ρ_λ)`, and the minimum over
//! hidden states is attained on pure states, so
//! `β_L = 3 − min_{|ψ⟩} Σ_x min_a p(a|x,ψ)`. [`optimize_bound`] evaluates this by a grid over the
//! Bloch sphere followed by Nelder–Mead refinement. [`deterministic_lhs_cross_check`] reaches the
//! same number independently: for a fixed response `b = g(y)` the diagonal sum is the Rayleigh
//! quotient of `Σ_x M_x^{g(x)}`, whose minimum is its smallest eigenvalue.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{self, c, eig_hermitian, phase, ComplexMatrix, Ket};
use crate::povm::{MeasurementSet, OUTCOMES, SETTINGS};
use crate::scenario::{DeterministicStrategy, LhsModel};

/// How a trusted element turns into an outcome probability on `|ψ⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityRule {
    /// `Tr(M |ψ⟩⟨ψ|)`, the normalized Born rule.
    #[default]
    Born,
    /// `Tr(M |ψ⟩⟨ψ|) / Tr(M)`, i.e. `|⟨ν|ψ⟩|²` for `M = λ|ν⟩⟨ν|`. Not normalized over outcomes.
    Overlap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchDomain {
    /// `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
    #[default]
    FullSphere,
    /// `θ ∈ [0, π/2]`, `φ ∈ [0, π]`.
    Quadrant,
}

impl SearchDomain {
    fn bounds(self) -> ([f64; 2], [f64; 2]) {
        match self {
            SearchDomain::FullSphere => ([0.0, 0.0], [PI, 2.0 * PI]),
            SearchDomain::Quadrant => ([0.0, 0.0], [PI / 2.0, PI]),
        }
    }
}

/// Point on the Bloch sphere, `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub theta: f64,
    pub phi: f64,
}

impl BlochPoint {
    /// Wraps arbitrary angles into `θ ∈ [0, π]`, `φ ∈ [0, 2π)` describing the same state.
    pub fn new(theta: f64, phi: f64) -> Self {
        let two_pi = 2.0 * PI;
        let mut t = theta.rem_euclid(two_pi);
        let mut p = phi;
        if t > PI {
            t = two_pi - t;
            p += PI;
        }
        let mut p = p.rem_euclid(two_pi);
        if p >= two_pi {
            p = 0.0;
        }
        Self { theta: t, phi: p }
    }

    pub fn ket(&self) -> Ket {
        let (s, co) = (self.theta / 2.0).sin_cos();
        Ket::new(vec![c(co, 0.0), phase(self.phi) * s]).expect("Bloch kets are normalized")
    }

    /// Angles of a qubit ket (global phase discarded).
    pub fn from_ket(k: &Ket) -> Self {
        let k = k.canonical_phase();
        let a = k.amplitudes();
        let theta = 2.0 * a[1].norm().atan2(a[0].norm());
        let phi = if a[1].norm() < 1e-15 { 0.0 } else { a[1].arg() };
        Self::new(theta, phi)
    }
}

fn outcome_probabilities(
    psi: &[linalg::Complex],
    alice: &MeasurementSet,
    rule: ProbabilityRule,
) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    for (x, row) in p.iter_mut().enumerate() {
        for (a, v) in row.iter_mut().enumerate() {
            let m = alice.element(x, a);
            let born = m.sandwich(psi, psi).re;
            *v = match rule {
                ProbabilityRule::Born => born,
                ProbabilityRule::Overlap => born / m.trace().re,
            };
        }
    }
    p
}

/// Index of the smallest entry, lowest index on ties.
fn argmin3(row: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if row[i] < row[best] {
            best = i;
        }
    }
    best
}

/// `Σ_x min_a p(a|x,ψ)` with the chosen probability rule.
pub fn lhs_objective_with(point: BlochPoint, alice: &MeasurementSet, rule: ProbabilityRule) -> f64 {
    let k = point.ket();
    outcome_probabilities(k.amplitudes(), alice, rule)
        .iter()
        .map(|row| row[argmin3(row)])
        .sum()
}

/// `Σ_x min_a Tr(M_x^a |ψ⟩⟨ψ|)`
pub fn lhs_objective(point: BlochPoint, alice: &MeasurementSet) -> f64 {
    lhs_objective_with(point, alice, ProbabilityRule::Born)
}

/// Minimizing outcome per setting at `point` (lowest index on ties).
pub fn minimizing_outcomes(
    point: BlochPoint,
    alice: &MeasurementSet,
    rule: ProbabilityRule,
) -> [usize; 3] {
    let p = outcome_probabilities(point.ket().amplitudes(), alice, rule);
    [argmin3(&p[0]), argmin3(&p[1]), argmin3(&p[2])]
}

/// `Σ_x min_a Tr(M_x^a ρ)` for a mixed qubit state.
pub fn lhs_objective_density(rho: &ComplexMatrix, alice: &MeasurementSet) -> f64 {
    (0..SETTINGS)
        .map(|x| {
            (0..OUTCOMES)
                .map(|a| (alice.element(x, a) * rho).trace().re)
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Grid points per angle.
    pub grid: usize,
    /// Best grid cells used as refinement starts.
    pub starts: usize,
    /// Additional uniformly drawn starts.
    pub random_starts: usize,
    pub max_iterations: usize,
    /// Simplex diameter at which refinement stops.
    pub simplex_tolerance: f64,
    pub seed: u64,
    pub domain: SearchDomain,
    pub rule: ProbabilityRule,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid: 512,
            starts: 10,
            random_starts: 4,
            max_iterations: 200,
            simplex_tolerance: 1e-9,
            seed: 0,
            domain: SearchDomain::FullSphere,
            rule: ProbabilityRule::Born,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub beta_l: f64,
    pub argmin: BlochPoint,
    pub objective_at_argmin: f64,
    pub grid_resolution: usize,
    pub refinement_iterations: usize,
    pub minimizing_outcomes: [usize; 3],
    pub domain: SearchDomain,
    pub rule: ProbabilityRule,
}

fn grid_point(cfg: &OptimizerConfig, k: usize) -> [f64; 2] {
    let (lo, hi) = cfg.domain.bounds();
    let n = cfg.grid;
    let (i, j) = (k / n, k % n);
    let theta = lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64;
    let phi = match cfg.domain {
        // φ is periodic on the full sphere; skip the duplicate endpoint.
        SearchDomain::FullSphere => lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64,
        SearchDomain::Quadrant => lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64,
    };
    [theta, phi]
}

fn clamp_to(domain: SearchDomain, x: [f64; 2]) -> [f64; 2] {
    match domain {
        SearchDomain::FullSphere => x,
        SearchDomain::Quadrant => {
            let (lo, hi) = domain.bounds();
            [x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])]
        }
    }
}

/// Minimal two-dimensional Nelder–Mead. Returns the best vertex, its value and the iteration count.
fn nelder_mead(
    f: &impl Fn([f64; 2]) -> f64,
    x0: [f64; 2],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> ([f64; 2], f64, usize) {
    let mut simplex: Vec<([f64; 2], f64)> = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]]
        .into_iter()
        .map(|x| (x, f(x)))
        .collect();
    let lerp =
        |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let mut it = 0;
    while it < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = dist(simplex[0].0, simplex[1].0)
            .max(dist(simplex[0].0, simplex[2].0))
            .max(dist(simplex[1].0, simplex[2].0));
        if diameter < tol {
            break;
        }
        it += 1;
        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
        let worst = simplex[2];
        let xr = lerp(centroid, worst.0, -1.0);
        let fr = f(xr);
        if fr < simplex[0].1 {
            let xe = lerp(centroid, worst.0, -2.0);
            let fe = f(xe);
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = lerp(centroid, xr, 0.5);
                (x, f(x))
            } else {
                let x = lerp(centroid, worst.0, 0.5);
                (x, f(x))
            };
            if fc < worst.1.min(fr) {
                simplex[2] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let x = lerp(best, v.0, 0.5);
                    *v = (x, f(x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, it)
}

/// Grid search over the Bloch sphere followed by simplex refinement from the best cells.
///
/// Deterministic for a given config regardless of thread count: grid values are reduced by
/// `(value, index)`.
pub fn optimize_bound(alice: &MeasurementSet, cfg: &OptimizerConfig) -> BoundResult {
    let cfg = OptimizerConfig {
        grid: cfg.grid.max(2),
        ..cfg.clone()
    };
    let objective = |x: [f64; 2]| {
        let x = clamp_to(cfg.domain, x);
        lhs_objective_with(BlochPoint::new(x[0], x[1]), alice, cfg.rule)
    };
    let mut values: Vec<(f64, usize)> = crate::parallel::install(|| {
        (0..cfg.grid * cfg.grid)
            .into_par_iter()
            .map(|k| (objective(grid_point(&cfg, k)), k))
            .collect()
    });
    values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut starts: Vec<[f64; 2]> = values
        .iter()
        .take(cfg.starts.max(1))
        .map(|&(_, k)| grid_point(&cfg, k))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.domain.bounds();
    for _ in 0..cfg.random_starts {
        starts.push([rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])]);
    }

    let (span_t, span_p) = (hi[0] - lo[0], hi[1] - lo[1]);
    let step = (span_t.min(span_p) / cfg.grid as f64).max(1e-6);
    let refined: Vec<([f64; 2], f64, usize)> = crate::parallel::install(|| {
        starts
            .par_iter()
            .map(|&x0| {
                nelder_mead(
                    &objective,
                    x0,
                    step,
                    cfg.max_iterations,
                    cfg.simplex_tolerance,
                )
            })
            .collect()
    });
    let iterations = refined.iter().map(|r| r.2).sum();
    let mut best = (grid_point(&cfg, values[0].1), values[0].0);
    for (x, v, _) in &refined {
        if *v < best.1 {
            best = (*x, *v);
        }
    }
    let x = clamp_to(cfg.domain, best.0);
    let argmin = BlochPoint::new(x[0], x[1]);
    let objective_at_argmin = lhs_objective_with(argmin, alice, cfg.rule);
    BoundResult {
        beta_l: 3.0 - objective_at_argmin,
        argmin,
        objective_at_argmin,
        grid_resolution: cfg.grid,
        refinement_iterations: iterations,
        minimizing_outcomes: minimizing_outcomes(argmin, alice, cfg.rule),
        domain: cfg.domain,
        rule: cfg.rule,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyValue {
    pub strategy: DeterministicStrategy,
    /// `max_ψ W` for this response function.
    pub w: f64,
    pub state: Ket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    /// Largest `W` reachable by any deterministic LHS model.
    pub value: f64,
    pub best: StrategyValue,
    pub strategies: Vec<StrategyValue>,
}

impl CrossCheck {
    /// A single-state deterministic LHS model attaining [`CrossCheck::value`].
    pub fn attaining_model(&self) -> Result<LhsModel> {
        LhsModel::deterministic(self.best.state.clone(), self.best.strategy)
    }
}

/// Enumerates the 27 deterministic responses `b = g(y)`; for each, the best hidden pure state
/// minimizes `⟨ψ| Σ_x M_x^{g(x)} |ψ⟩`, i.e. is the lowest eigenvector of that operator.
pub fn deterministic_lhs_cross_check(
    alice: &MeasurementSet,
    rule: ProbabilityRule,
) -> Result<CrossCheck> {
    let mut strategies = Vec::with_capacity(27);
    for g in DeterministicStrategy::all() {
        let terms: Vec<ComplexMatrix> = (0..SETTINGS)
            .map(|x| {
                let m = alice.element(x, g.0[x]);
                match rule {
                    ProbabilityRule::Born => m.clone(),
                    ProbabilityRule::Overlap => m.scale_real(1.0 / m.trace().re),
                }
            })
            .collect();
        let s = linalg::sum(terms.iter()).expect("three settings");
        let eig = eig_hermitian(&s)?;
        strategies.push(StrategyValue {
            strategy: g,
            w: 3.0 - eig.values[0],
            state: eig.vectors[0].clone(),
        });
    }
    let best = strategies
        .iter()
        .fold(None::<&StrategyValue>, |acc, s| match acc {
            Some(b) if b.w >= s.w => Some(b),
            _ => Some(s),
        })
        .expect("27 strategies")
        .clone();
    Ok(CrossCheck {
        value: best.w,
        best,
        strategies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::alice_ideal;

    #[test]
    fn objective_at_ket_zero() {
        // min_a per setting: 2/3·1/4, 0, 1/3
        let v = lhs_objective(BlochPoint::new(0.0, 0.0), &alice_ideal());
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn objective_vanishes_on_a_setting_for_orthogonal_states() {
        // |1⟩ ⟂ |e_{0,0}⟩: setting 0 contributes exactly zero.
        let p = minimizing_outcomes(
            BlochPoint::new(PI, 0.0),
            &alice_ideal(),
            ProbabilityRule::Born,
        );
        assert_eq!(p[0], 0);
        let k = BlochPoint::new(PI, 0.0).ket();
        assert!(
            alice_ideal()
                .element(0, 0)
                .sandwich(k.amplitudes(), k.amplitudes())
                .norm()
                < 1e-15
        );
    }

    #[test]
    fn bloch_point_wrapping() {
        let p = BlochPoint::new(-0.3, 7.0);
        assert!((0.0..=PI).contains(&p.theta) && (0.0..2.0 * PI).contains(&p.phi));
        let q = BlochPoint::new(0.3, 7.0 + PI);
        assert!((p.ket().fidelity(&q.ket()) - 1.0).abs() < 1e-12);
        let r = BlochPoint::from_ket(&BlochPoint::new(1.1, 4.0).ket());
        assert!((r.theta - 1.1).abs() < 1e-12 && (r.phi - 4.0).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: [f64; 2]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, v, _) = nelder_mead(&f, [0.0, 0.0], 0.1, 500, 1e-10);
        assert!(v < 1e-16);
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] + 0.5).abs() < 1e-8);
    }

    #[test]
    fn degenerate_repeated_trine_reaches_algebraic_bound() {
        let one = alice_ideal().setting(0).clone();
        let set = MeasurementSet::new(vec![one.clone(), one.clone(), one]).unwrap();
        let r = optimize_bound(
            &set,
            &OptimizerConfig {
                grid: 64,
                ..Default::default()
            },
        );
        assert!((r.beta_l - 3.0).abs() < 1e-9);
    }

    #[test]
    fn cross_check_uses_all_strategies() {
        let cc = deterministic_lhs_cross_check(&alice_ideal(), ProbabilityRule::Born).unwrap();
        assert_eq!(cc.strategies.len(), 27);
        assert!(cc.strategies.iter().all(|s| s.w <= cc.value));
        let constant = cc
            .strategies
            .iter()
            .find(|s| s.strategy.0 == [0, 0, 0])
            .unwrap();
        // The constant-0 response at its own optimum does at least as well as at |0⟩ (W = 2).
        assert!(constant.w >= 2.0 - 1e-12);
    }
}
