//! White-noise robustness of the ideal configuration.
//!
//! Noisy untrusted elements `N_x^a = (2/3)((1−ε_{a,x})|e*⊥_{a,x}⟩⟨e*⊥_{a,x}| + (ε_{a,x}/2)𝟙)`,
//! noisy state `ρ = (1−2ε_s)|φ⟩⟨φ| + (ε_s/2)𝟙₄` with `|φ⟩ ∝ |00⟩ + (1−δ)|11⟩`.
//!
//! Two closed forms for the imbalanced family are provided. [`f_closed_form`] is the published
//! expression; [`f_exact`] is the value the state family above actually produces. They are
//! related by `f_closed_form(δ, ε) = f_exact(√2·δ, ε)`, i.e. the published expression describes
//! the amplitude `1 − √2·δ` rather than `1 − δ`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, Ket, ZERO};
use crate::povm::{self, alice_ideal, MeasurementSet, Povm, OUTCOMES, SETTINGS, TRINE_WEIGHT};
use crate::scenario::{distribution_from, steering_functional};
use crate::tolerance;

/// Largest white-noise weight keeping the noisy state PSD (`1 − 3ε_s/2 ≥ 0`).
pub const MAX_STATE_EPSILON: f64 = 2.0 / 3.0;

/// Default imbalance range for sweeps.
pub const DEFAULT_DELTA_RANGE: (f64, f64) = (-0.3, 0.3);

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// `ε_{a,x}`, indexed `[x][a]`.
    pub per_element_epsilons: Option<[[f64; 3]; 3]>,
    pub epsilon_s: Option<f64>,
}

impl NoiseConfig {
    /// `max{max_{a,x} ε_{a,x}, ε_s}`, or `epsilon` when no per-parameter values are set.
    pub fn effective_epsilon(&self) -> f64 {
        let mut e = self.epsilon_s.unwrap_or(0.0);
        if let Some(pe) = &self.per_element_epsilons {
            e = pe.iter().flatten().copied().fold(e, f64::max);
        }
        if self.per_element_epsilons.is_none() && self.epsilon_s.is_none() {
            self.epsilon
        } else {
            e
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::OutOfRange(format!(
                "ε = {} must be ≥ 0",
                self.epsilon
            )));
        }
        if let Some(es) = self.epsilon_s {
            if !(0.0..=MAX_STATE_EPSILON).contains(&es) {
                return Err(Error::OutOfRange(format!("ε_s = {es} outside [0, 2/3]")));
            }
        }
        if let Some(pe) = &self.per_element_epsilons {
            if let Some(e) = pe.iter().flatten().find(|e| !(0.0..=1.0).contains(*e)) {
                return Err(Error::OutOfRange(format!("ε_(a,x) = {e} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn noisy_element(f: &Ket, eps: f64) -> ComplexMatrix {
    let pure = f.projector().scale_real(1.0 - eps);
    let mixed = ComplexMatrix::identity(2).scale_real(eps / 2.0);
    (&pure + &mixed).scale_real(TRINE_WEIGHT)
}

/// Noisy elements with per-element noise, indexed `[x][a]`. Unequal weights within a setting
/// break completeness, so the result is returned unvalidated.
pub fn noisy_bob_elements(eps: &[[f64; 3]; 3]) -> Result<Vec<Vec<ComplexMatrix>>> {
    if let Some(e) = eps.iter().flatten().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::OutOfRange(format!("ε_(a,x) = {e} outside [0, 1]")));
    }
    let f = povm::conjugate_complement_vectors();
    Ok((0..SETTINGS)
        .map(|x| {
            (0..OUTCOMES)
                .map(|a| noisy_element(&f[x][a], eps[x][a]))
                .collect()
        })
        .collect())
}

/// Ideal untrusted measurements mixed with white noise of weight `eps`.
pub fn noisy_bob(eps: f64) -> Result<MeasurementSet> {
    let els = noisy_bob_elements(&[[eps; 3]; 3])?;
    let povms = els
        .into_iter()
        .map(|e| {
            // ε = 1 turns every element into 𝟙/3, which is still a valid (trivial) POVM.
            Povm::new(e)
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(povms)
}

/// `(|00⟩ + (1−δ)|11⟩) / √(1 + (1−δ)²)`
pub fn imbalanced_ket(delta: f64) -> Result<Ket> {
    if !delta.is_finite() {
        return Err(Error::OutOfRange("δ must be finite".into()));
    }
    let b = 1.0 - delta;
    Ket::normalized(vec![c(1.0, 0.0), ZERO, ZERO, c(b, 0.0)])
}

/// `(1−2ε_s)|φ_δ⟩⟨φ_δ| + (ε_s/2)𝟙₄`
pub fn noisy_state(epsilon_s: f64, delta: f64) -> Result<ComplexMatrix> {
    if !epsilon_s.is_finite() || epsilon_s < 0.0 {
        return Err(Error::OutOfRange(format!("ε_s = {epsilon_s} must be ≥ 0")));
    }
    let pure = imbalanced_ket(delta)?
        .projector()
        .scale_real(1.0 - 2.0 * epsilon_s);
    let rho = &pure + &ComplexMatrix::identity(4).scale_real(epsilon_s / 2.0);
    let min = rho.min_eigenvalue();
    if min < -tolerance::CONSTRUCTION {
        return Err(Error::OutOfRange(format!(
            "ε_s = {epsilon_s} gives a non-PSD state (eigenvalue {min})"
        )));
    }
    Ok(rho)
}

/// `p(a,a|x,x) = ε(3 − 2ε)/9` at common noise `ε`.
pub fn diagonal_cell_closed_form(eps: f64) -> f64 {
    eps * (3.0 - 2.0 * eps) / 9.0
}

/// `W(ε) = 3 − 3ε + 2ε²`
pub fn w_closed_form_epsilon(eps: f64) -> f64 {
    3.0 - 3.0 * eps + 2.0 * eps * eps
}

fn check_denominator(den: f64) -> Result<()> {
    if den.abs() < 1e-9 {
        return Err(Error::OutOfRange(format!(
            "closed form is singular (denominator {den:e})"
        )));
    }
    Ok(())
}

/// Published closed form of `3 − W` for the imbalanced noisy family.
pub fn f_closed_form(delta: f64, eps: f64) -> Result<f64> {
    let num = 3.0 * SQRT_2 * delta * (3.0 - 2.0 * eps) * eps
        + 3.0 * eps * (-3.0 + 2.0 * eps)
        + delta * delta * (-2.0 + eps) * (1.0 + 2.0 * eps);
    let den = -3.0 + 3.0 * (SQRT_2 - delta) * delta;
    check_denominator(den)?;
    Ok(num / den)
}

/// `3 − f_closed_form(δ, ε)`
pub fn w_closed_form_delta(delta: f64, eps: f64) -> Result<f64> {
    Ok(3.0 - f_closed_form(delta, eps)?)
}

/// `3 − W` for the state `|00⟩ + (1−δ)|11⟩` under common noise `ε`:
/// `(2δ² + 3δ²ε − 2δ²ε² − 18δε + 12δε² + 18ε − 12ε²) / (3(δ² − 2δ + 2))`.
pub fn f_exact(delta: f64, eps: f64) -> Result<f64> {
    let (d, e) = (delta, eps);
    let num = 2.0 * d * d + 3.0 * d * d * e - 2.0 * d * d * e * e - 18.0 * d * e
        + 12.0 * d * e * e
        + 18.0 * e
        - 12.0 * e * e;
    let den = 3.0 * (d * d - 2.0 * d + 2.0);
    check_denominator(den)?;
    Ok(num / den)
}

/// Noise at which `W(ε)` drops to `beta_l`, the smaller root of `2ε² − 3ε + (3 − β) = 0`.
pub fn critical_epsilon(beta_l: f64) -> Option<f64> {
    let disc = 9.0 - 8.0 * (3.0 - beta_l);
    (disc >= 0.0 && beta_l <= 3.0).then(|| (3.0 - disc.sqrt()) / 4.0)
}

/// `W` of the noisy configuration by direct density-matrix evaluation.
pub fn w_simulated(epsilon_s: f64, eps_bob: f64, delta: f64) -> Result<f64> {
    let rho = noisy_state(epsilon_s, delta)?;
    let d = distribution_from(&rho, &alice_ideal(), &noisy_bob(eps_bob)?)?;
    steering_functional(&d)
}

/// `W = 3 − Σ p(a,a|x,x)` with per-element measurement noise; the elements need not form POVMs
/// so only the diagonal cells are evaluated.
pub fn w_per_element(eps: &[[f64; 3]; 3], epsilon_s: f64, delta: f64) -> Result<f64> {
    let els = noisy_bob_elements(eps)?;
    let rho = noisy_state(epsilon_s, delta)?;
    let alice = alice_ideal();
    let mut diag = 0.0;
    for x in 0..SETTINGS {
        for a in 0..OUTCOMES {
            diag += (&crate::linalg::tensor(alice.element(x, a), &els[x][a]) * &rho)
                .trace()
                .re;
        }
    }
    Ok(3.0 - diag)
}

/// Which closed form fills the `w_closed` column of a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    #[default]
    Published,
    Exact,
}

impl ClosedForm {
    pub fn f(self, delta: f64, eps: f64) -> Result<f64> {
        match self {
            ClosedForm::Published => f_closed_form(delta, eps),
            ClosedForm::Exact => f_exact(delta, eps),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub epsilon: f64,
    pub w_closed: f64,
    pub w_sim: f64,
    pub discrepancy: f64,
    /// `epsilon` was clipped into `[0, 2/3]`.
    pub clipped: bool,
}

/// `n` evenly spaced points on `[lo, hi]` (a single point is `lo`).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Closed form vs direct simulation on every `(δ, ε)` pair, ordered by `(δ, ε)`.
///
/// Noise values outside `[0, 2/3]` are clipped with a warning so long sweeps complete.
pub fn sweep(epsilons: &[f64], deltas: &[f64], form: ClosedForm) -> Result<Vec<SweepRow>> {
    let mut pairs: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| epsilons.iter().map(move |&e| (d, e)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let rows = crate::parallel::install(|| {
        use rayon::prelude::*;
        pairs
            .par_iter()
            .map(|&(delta, raw)| {
                let eps = raw.clamp(0.0, MAX_STATE_EPSILON);
                let clipped = eps != raw;
                if clipped {
                    log::warn!("ε = {raw} clipped to {eps}");
                }
                let w_closed = 3.0 - form.f(delta, eps)?;
                let w_sim = w_simulated(eps, eps, delta)?;
                Ok(SweepRow {
                    delta,
                    epsilon: eps,
                    w_closed,
                    w_sim,
                    discrepancy: (w_closed - w_sim).abs(),
                    clipped,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(rows)
}
