//! The steering scenario: assemblages, joint distributions, the steering functional `W`,
//! LHS-model distributions and a seeded finite-shot sampler.
//!
//! Index order is always settings before outcomes: `p[x][y][a][b] = p(a,b|x,y)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, partial_trace_b, tensor, ComplexMatrix, Ket};
use crate::povm::{MeasurementSet, OUTCOMES, SETTINGS};
use crate::tolerance;

type Table<T> = [[T; 3]; 3];

/// `σ_b^y` on the trusted qubit, indexed `[y][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assemblage {
    sigma: Vec<Vec<ComplexMatrix>>,
}

impl Assemblage {
    pub fn sigma(&self, y: usize, b: usize) -> &ComplexMatrix {
        &self.sigma[y][b]
    }

    /// `Σ_b σ_b^y`
    pub fn marginal(&self, y: usize) -> ComplexMatrix {
        linalg::sum(self.sigma[y].iter()).expect("three outcomes")
    }

    /// `Tr σ_b^y = p(b|y)`
    pub fn traces(&self) -> Table<f64> {
        let mut t = [[0.0; 3]; 3];
        for (y, row) in t.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = self.sigma[y][b].trace().re;
            }
        }
        t
    }

    /// Checks PSD elements, unit trace and setting-independent marginals.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let m0 = self.marginal(0);
        if (m0.trace().re - 1.0).abs() > tol {
            return Err(Error::Inconsistent(format!(
                "assemblage trace {}",
                m0.trace().re
            )));
        }
        for y in 0..SETTINGS {
            for b in 0..OUTCOMES {
                if !self.sigma[y][b].is_psd(tol) {
                    return Err(Error::Inconsistent(format!("σ[{y}][{b}] is not PSD")));
                }
            }
            let d = self.marginal(y).distance(&m0);
            if d > tol {
                return Err(Error::Inconsistent(format!(
                    "marginal for y={y} differs from y=0 by {d:e}"
                )));
            }
        }
        Ok(())
    }
}

fn check_state(state: &ComplexMatrix, bob: &MeasurementSet) -> Result<usize> {
    let d = bob.dim();
    if !state.is_square() || state.rows() != 2 * d {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, expected {}x{} for a qubit and a dim-{d} measurement",
            state.rows(),
            state.cols(),
            2 * d,
            2 * d
        )));
    }
    linalg::validate_density(state, tolerance::DECOMPOSITION)?;
    Ok(d)
}

/// `σ_b^y = Tr_B[(𝟙 ⊗ N_y^b) ρ]`
pub fn assemblage_from(state: &ComplexMatrix, bob: &MeasurementSet) -> Result<Assemblage> {
    let d = check_state(state, bob)?;
    let id = ComplexMatrix::identity(2);
    let sigma = (0..SETTINGS)
        .map(|y| {
            (0..OUTCOMES)
                .map(|b| partial_trace_b(&(&tensor(&id, bob.element(y, b)) * state), 2, d))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Assemblage { sigma })
}

/// Joint distribution `p(a,b|x,y)` stored as `p[x][y][a][b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub p: Table<Table<f64>>,
}

impl JointDistribution {
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut p = [[[[0.0; 3]; 3]; 3]; 3];
        for (x, px) in p.iter_mut().enumerate() {
            for (y, pxy) in px.iter_mut().enumerate() {
                for (a, row) in pxy.iter_mut().enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = f(x, y, a, b);
                    }
                }
            }
        }
        Self { p }
    }

    pub fn uniform() -> Self {
        Self::from_fn(|_, _, _, _| 1.0 / 9.0)
    }

    /// `p(a,b|x,y)`
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[x][y][a][b]
    }

    pub fn alice_marginal(&self, x: usize, y: usize) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (a, v) in m.iter_mut().enumerate() {
            *v = self.p[x][y][a].iter().sum();
        }
        m
    }

    pub fn bob_marginal(&self, x: usize, y: usize) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (b, v) in m.iter_mut().enumerate() {
            *v = (0..3).map(|a| self.p[x][y][a][b]).sum();
        }
        m
    }

    /// Range, normalization and no-signaling checks.
    pub fn validate(&self) -> Result<()> {
        let range = tolerance::DECOMPOSITION;
        let tol = tolerance::DISTRIBUTION;
        for x in 0..3 {
            for y in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        let v = self.p[x][y][a][b];
                        if !v.is_finite() || v < -range || v > 1.0 + range {
                            return Err(Error::Inconsistent(format!(
                                "p({a},{b}|{x},{y}) = {v} out of [0,1]"
                            )));
                        }
                    }
                }
                let total: f64 = self.p[x][y].iter().flatten().sum();
                if (total - 1.0).abs() > tol {
                    return Err(Error::Inconsistent(format!("Σ p(a,b|{x},{y}) = {total}")));
                }
                let dev_a = max_diff(&self.alice_marginal(x, y), &self.alice_marginal(x, 0));
                let dev_b = max_diff(&self.bob_marginal(x, y), &self.bob_marginal(0, y));
                if dev_a > tol || dev_b > tol {
                    return Err(Error::Inconsistent(format!(
                        "signaling at (x,y)=({x},{y}): {:e}",
                        dev_a.max(dev_b)
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Σ_{a,x} p(a,a|x,x)`
    pub fn diagonal_sum(&self) -> f64 {
        (0..3)
            .flat_map(|x| (0..3).map(move |a| (x, a)))
            .map(|(x, a)| self.p[x][x][a][a])
            .sum()
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..3)
            .flat_map(|x| (0..3).map(move |a| (x, a)))
            .map(|(x, a)| self.p[x][x][a][a])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn max_diff(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `p(a,b|x,y) = Tr[(M_x^a ⊗ N_y^b) ρ]`, cross-checked against `Tr(M_x^a σ_b^y)`.
pub fn distribution_from(
    state: &ComplexMatrix,
    alice: &MeasurementSet,
    bob: &MeasurementSet,
) -> Result<JointDistribution> {
    if alice.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "trusted party must be a qubit, got dim {}",
            alice.dim()
        )));
    }
    let assemblage = assemblage_from(state, bob)?;
    let mut worst: f64 = 0.0;
    let dist = JointDistribution::from_fn(|x, y, a, b| {
        let joint = (&tensor(alice.element(x, a), bob.element(y, b)) * state)
            .trace()
            .re;
        let steered = (alice.element(x, a) * assemblage.sigma(y, b)).trace().re;
        worst = worst.max((joint - steered).abs());
        joint
    });
    if worst > tolerance::DECOMPOSITION {
        return Err(Error::Inconsistent(format!(
            "joint and assemblage forms disagree by {worst:e}"
        )));
    }
    dist.validate()?;
    Ok(dist)
}

/// Pure-state convenience wrapper around [`distribution_from`].
pub fn distribution_from_ket(
    state: &Ket,
    alice: &MeasurementSet,
    bob: &MeasurementSet,
) -> Result<JointDistribution> {
    distribution_from(&state.projector(), alice, bob)
}

/// `W = 3 − Σ_{a,x} p(a,a|x,x)`.
///
/// The equivalent sum of off-diagonal same-setting cells is computed as well; the two agree only
/// for normalized distributions, so disagreement is reported as an error.
pub fn steering_functional(d: &JointDistribution) -> Result<f64> {
    let w = 3.0 - d.diagonal_sum();
    let mut off = 0.0;
    for x in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    off += d.p[x][x][a][b];
                }
            }
        }
    }
    if (w - off).abs() > tolerance::DISTRIBUTION {
        return Err(Error::Inconsistent(format!(
            "W forms disagree: {w} vs {off} (distribution not normalized)"
        )));
    }
    Ok(w)
}

/// A deterministic response `b = g(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy(pub [usize; 3]);

impl DeterministicStrategy {
    /// All `3³ = 27` response functions in lexicographic order.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(27);
        for g0 in 0..3 {
            for g1 in 0..3 {
                for g2 in 0..3 {
                    out.push(Self([g0, g1, g2]));
                }
            }
        }
        out
    }

    pub fn response(&self) -> Table<f64> {
        let mut r = [[0.0; 3]; 3];
        for (y, row) in r.iter_mut().enumerate() {
            row[self.0[y]] = 1.0;
        }
        r
    }
}

/// `σ_b^y = Σ_λ p(λ) p_λ(b|y) ρ_λ` with pure hidden states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhsModel {
    weights: Vec<f64>,
    states: Vec<Ket>,
    /// `responses[λ][y][b] = p_λ(b|y)`
    responses: Vec<Table<f64>>,
}

impl LhsModel {
    pub fn new(weights: Vec<f64>, states: Vec<Ket>, responses: Vec<Table<f64>>) -> Result<Self> {
        let tol = tolerance::CONSTRUCTION;
        let l = weights.len();
        if l == 0 || states.len() != l || responses.len() != l {
            return Err(Error::InvalidModel(format!(
                "{} weights, {} states, {} responses",
                l,
                states.len(),
                responses.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidModel(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidModel(format!("weights sum to {total}")));
        }
        if let Some(s) = states.iter().find(|s| s.dim() != 2) {
            return Err(Error::InvalidModel(format!(
                "hidden state of dim {}",
                s.dim()
            )));
        }
        for (i, r) in responses.iter().enumerate() {
            for (y, row) in r.iter().enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0)
                    || (row.iter().sum::<f64>() - 1.0).abs() > tol
                {
                    return Err(Error::InvalidModel(format!(
                        "response {i} row y={y} is not a distribution"
                    )));
                }
            }
        }
        Ok(Self {
            weights,
            states,
            responses,
        })
    }

    pub fn deterministic(state: Ket, strategy: DeterministicStrategy) -> Result<Self> {
        Self::new(vec![1.0], vec![state], vec![strategy.response()])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[Ket] {
        &self.states
    }

    pub fn responses(&self) -> &[Table<f64>] {
        &self.responses
    }

    pub fn assemblage(&self) -> Assemblage {
        let sigma = (0..SETTINGS)
            .map(|y| {
                (0..OUTCOMES)
                    .map(|b| {
                        self.weights
                            .iter()
                            .zip(&self.states)
                            .zip(&self.responses)
                            .fold(ComplexMatrix::zeros(2, 2), |acc, ((w, s), r)| {
                                &acc + &s.projector().scale_real(w * r[y][b])
                            })
                    })
                    .collect()
            })
            .collect();
        Assemblage { sigma }
    }
}

/// `p(a,b|x,y) = Σ_λ p(λ) Tr(M_x^a ρ_λ) p_λ(b|y)`.
pub fn distribution_from_lhs(
    model: &LhsModel,
    alice: &MeasurementSet,
) -> Result<JointDistribution> {
    if alice.dim() != 2 {
        return Err(Error::DimensionMismatch(
            "trusted party must be a qubit".into(),
        ));
    }
    let born: Vec<Table<f64>> = model
        .states
        .iter()
        .map(|s| {
            let rho = s.projector();
            let mut t = [[0.0; 3]; 3];
            for (x, row) in t.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    *v = (alice.element(x, a) * &rho).trace().re;
                }
            }
            t
        })
        .collect();
    Ok(JointDistribution::from_fn(|x, y, a, b| {
        model
            .weights
            .iter()
            .zip(&born)
            .zip(&model.responses)
            .map(|((w, pa), r)| w * pa[x][a] * r[y][b])
            .sum()
    }))
}

/// Probability of each setting pair `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingPolicy {
    pub probs: Table<f64>,
}

impl SettingPolicy {
    pub fn uniform() -> Self {
        Self {
            probs: [[1.0 / 9.0; 3]; 3],
        }
    }

    /// Only the three pairs `x = y` that enter `W`.
    pub fn diagonal() -> Self {
        let mut probs = [[0.0; 3]; 3];
        for (i, row) in probs.iter_mut().enumerate() {
            row[i] = 1.0 / 3.0;
        }
        Self { probs }
    }

    fn validate(&self) -> Result<()> {
        let flat: Vec<f64> = self.probs.iter().flatten().copied().collect();
        if flat.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::OutOfRange(
                "setting probabilities must be nonnegative".into(),
            ));
        }
        if (flat.iter().sum::<f64>() - 1.0).abs() > tolerance::DISTRIBUTION {
            return Err(Error::OutOfRange(
                "setting probabilities must sum to 1".into(),
            ));
        }
        if let Some(x) = (0..3).find(|&x| self.probs[x][x] <= 0.0) {
            return Err(Error::MissingSetting(x));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub seed: u64,
    pub x: u8,
    pub y: u8,
    pub a: u8,
    pub b: u8,
}

fn inverse_cdf(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding left u beyond the accumulated mass; fall back to the last supported index.
    last
}

/// Draws `n` shots: a setting pair from `policy`, then the outcome pair by inverse CDF over the
/// nine cells of that setting, each from one uniform of a ChaCha8 stream seeded with `seed`.
pub fn sample_shots(
    d: &JointDistribution,
    policy: &SettingPolicy,
    n: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    if n == 0 {
        return Err(Error::OutOfRange("shot count must be at least 1".into()));
    }
    policy.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let setting_weights: Vec<f64> = policy.probs.iter().flatten().copied().collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s = inverse_cdf(setting_weights.iter().copied(), rng.gen::<f64>());
        let (x, y) = (s / 3, s % 3);
        let cell = inverse_cdf(
            d.p[x][y].iter().flatten().map(|p| p.max(0.0)),
            rng.gen::<f64>(),
        );
        out.push(ShotRecord {
            seed,
            x: x as u8,
            y: y as u8,
            a: (cell / 3) as u8,
            b: (cell % 3) as u8,
        });
    }
    Ok(out)
}

/// Point estimate of `W` with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WEstimate {
    pub w_hat: f64,
    pub stderr: f64,
    pub diagonal_shots: [usize; 3],
}

/// `Ŵ = 3 − Σ_x q̂_x` where `q̂_x` is the empirical frequency of `a = b` given `x = y`.
pub fn estimate_w(records: &[ShotRecord]) -> Result<WEstimate> {
    let mut counts = [0usize; 3];
    let mut hits = [0usize; 3];
    for r in records.iter().filter(|r| r.x == r.y) {
        counts[r.x as usize] += 1;
        if r.a == r.b {
            hits[r.x as usize] += 1;
        }
    }
    let mut w_hat = 3.0;
    let mut var = 0.0;
    for x in 0..3 {
        if counts[x] == 0 {
            return Err(Error::MissingSetting(x));
        }
        let n = counts[x] as f64;
        let q = hits[x] as f64 / n;
        w_hat -= q;
        var += q * (1.0 - q) / n;
    }
    Ok(WEstimate {
        w_hat,
        stderr: var.sqrt(),
        diagonal_shots: counts,
    })
}
