//! Constructive self-testing of `|φ⁺⟩` and the conjugate-complement trines.
//!
//! Given `|ψ⟩ ∈ ℂ² ⊗ ℂ^d` and untrusted measurements `N_y^b` on `ℂ^d`, the certifier
//!
//! 1. takes the Schmidt form `|ψ⟩ = Σ_i λ_i |s_i⟩|t_i⟩`,
//! 2. builds `U_B` with `U_B|t_i⟩ = |s_i*⟩` (identity-completed off the support),
//!    `P_B = √2 Σ_i λ_i |s_i*⟩⟨s_i*|` and `Π_B = Σ_i |t_i⟩⟨t_i|`,
//! 3. compares `(𝟙 ⊗ U_B)|ψ⟩` with `|φ⁺⟩` and `U_B Π_B N_y^b Π_B U_B†` with
//!    `(2/3)|e*⊥_{b,y}⟩⟨e*⊥_{b,y}|`.
//!
//! [`verify_identity_chain`] additionally exposes the residual of every intermediate identity
//! used to derive that conclusion from `p(a,a|x,x) = 0`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, eig_hermitian, schmidt_decompose, ComplexMatrix, Ket, SchmidtForm, ZERO,
};
use crate::povm::{self, alice_ideal, MeasurementSet, OUTCOMES, SETTINGS, TRINE_WEIGHT};
use crate::tolerance;

/// A pure state on `ℂ² ⊗ ℂ^d` and the untrusted party's measurements on `ℂ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificationInput {
    state: Ket,
    bob: MeasurementSet,
}

impl CertificationInput {
    pub fn new(state: Ket, bob: MeasurementSet) -> Result<Self> {
        if state.dim() != 2 * bob.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of dim {} does not match ℂ² ⊗ ℂ^{}",
                state.dim(),
                bob.dim()
            )));
        }
        Ok(Self { state, bob })
    }

    pub fn state(&self) -> &Ket {
        &self.state
    }

    pub fn bob(&self) -> &MeasurementSet {
        &self.bob
    }

    pub fn dim_b(&self) -> usize {
        self.bob.dim()
    }
}

/// `p(a,a|x,x)` with the trusted trines, indexed `[x][a]`.
pub fn diagonal_probabilities(input: &CertificationInput) -> [[f64; 3]; 3] {
    let alice = alice_ideal();
    let psi = input.state.amplitudes();
    let mut out = [[0.0; 3]; 3];
    for (x, row) in out.iter_mut().enumerate() {
        for (a, v) in row.iter_mut().enumerate() {
            let op = linalg::tensor(alice.element(x, a), input.bob.element(x, a));
            *v = op.sandwich(psi, psi).re;
        }
    }
    out
}

/// `max_{a,x} p(a,a|x,x)`; zero exactly at the maximal violation.
pub fn check_max_violation_conditions(input: &CertificationInput) -> f64 {
    diagonal_probabilities(input)
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Objects extracted from the Schmidt form of the input state.
#[derive(Clone, Debug)]
pub struct Extraction {
    /// `U_B` on `ℂ^d`; the qubit `span{|0⟩,|1⟩}` is the image of the support.
    pub unitary: ComplexMatrix,
    /// `P_B = √2 Σ_i λ_i |s_i*⟩⟨s_i*|`
    pub p_b: ComplexMatrix,
    /// `Π_B = Σ_i |t_i⟩⟨t_i|`
    pub support_projector: ComplexMatrix,
    pub schmidt: SchmidtForm,
}

/// Gram–Schmidt completion of `seed` to an orthonormal basis of `ℂ^dim`.
fn complete_basis(seed: &[Vec<linalg::Complex>], dim: usize) -> Vec<Vec<linalg::Complex>> {
    let mut basis: Vec<Vec<linalg::Complex>> = seed.to_vec();
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = Ket::basis(dim, k).amplitudes().to_vec();
        for b in &basis {
            let proj = linalg::inner(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let n = linalg::norm(&v);
        if n > 1e-6 {
            basis.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    basis
}

pub fn extract_unitary(input: &CertificationInput) -> Result<Extraction> {
    let d = input.dim_b();
    let schmidt = schmidt_decompose(&input.state, 2, d)?;
    if schmidt.rank() < 2 {
        return Err(Error::NotEntangled(schmidt.rank()));
    }
    let t: Vec<Vec<linalg::Complex>> = schmidt
        .right
        .iter()
        .map(|k| k.amplitudes().to_vec())
        .collect();
    let source = complete_basis(&t, d);
    let targets: Vec<Vec<linalg::Complex>> = (0..d)
        .map(|k| {
            if k < 2 {
                let mut v = vec![ZERO; d];
                let s = schmidt.left[k].conjugate();
                v[..2].copy_from_slice(s.amplitudes());
                v
            } else {
                Ket::basis(d, k).amplitudes().to_vec()
            }
        })
        .collect();
    let unitary = source
        .iter()
        .zip(&targets)
        .fold(ComplexMatrix::zeros(d, d), |acc, (s, tg)| {
            &acc + &linalg::outer(tg, s)
        });
    let p_b = schmidt
        .coefficients
        .iter()
        .zip(&schmidt.left)
        .fold(ComplexMatrix::zeros(2, 2), |acc, (l, s)| {
            &acc + &s.conjugate().projector().scale_real(SQRT_2 * l)
        });
    let support_projector = schmidt
        .right
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, t| &acc + &t.projector());
    Ok(Extraction {
        unitary,
        p_b,
        support_projector,
        schmidt,
    })
}

/// `(𝟙 ⊗ U)|ψ⟩`
fn apply_bob(u: &ComplexMatrix, psi: &Ket) -> Vec<linalg::Complex> {
    linalg::tensor(&ComplexMatrix::identity(2), u).apply(psi.amplitudes())
}

/// `U_B Π_B N_y^b Π_B U_B†` on `ℂ^d`, indexed `[y][b]`.
pub fn transformed_measurements(
    input: &CertificationInput,
    ex: &Extraction,
) -> Vec<Vec<ComplexMatrix>> {
    let (u, pi) = (&ex.unitary, &ex.support_projector);
    let ud = u.adjoint();
    (0..SETTINGS)
        .map(|y| {
            (0..OUTCOMES)
                .map(|b| {
                    let inner = &(pi * input.bob.element(y, b)) * pi;
                    &(u * &inner) * &ud
                })
                .collect()
        })
        .collect()
}

/// `(2/3)|e*⊥_{b,y}⟩⟨e*⊥_{b,y}|`, indexed `[y][b]`.
pub fn target_measurements() -> Vec<Vec<ComplexMatrix>> {
    povm::conjugate_complement_vectors()
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| v.projector().scale_real(TRINE_WEIGHT))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityChain {
    pub residuals: Vec<IdentityResidual>,
    /// `β_{a,x} = ⟨e*⊥_{a,x}| P_B Ñ_x^a P_B |e*⊥_{a,x}⟩`, indexed `[x][a]`.
    pub betas: [[f64; 3]; 3],
}

impl IdentityChain {
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.residual)
    }
}

/// Numerical residual of each identity in the derivation, evaluated on the extracted objects.
///
/// Meaningful for near-maximal inputs; no precondition is enforced so perturbed inputs can be
/// probed.
pub fn verify_identity_chain(input: &CertificationInput) -> Result<IdentityChain> {
    let ex = extract_unitary(input)?;
    let d = input.dim_b();
    let alice = alice_ideal();
    let e = povm::trine_vectors();
    let f = povm::conjugate_complement_vectors();
    let transformed = transformed_measurements(input, &ex);
    let p = &ex.p_b;
    let p2 = p * p;
    let mut residuals = Vec::new();
    let mut push =
        |name: String, residual: f64| residuals.push(IdentityResidual { name, residual });

    let lhs = apply_bob(&ex.unitary, &input.state);
    let rhs = linalg::tensor(&ComplexMatrix::identity(2), &p.embed(d))
        .apply(Ket::phi_plus(d).amplitudes());
    let recon: f64 = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    push("state_reconstruction".into(), recon);

    for y in 0..SETTINGS {
        let total = linalg::sum(
            (0..OUTCOMES)
                .map(|b| &(&ex.support_projector * input.bob.element(y, b)) * &ex.support_projector)
                .collect::<Vec<_>>()
                .iter(),
        )
        .expect("three outcomes");
        push(
            format!("support_completeness[y={y}]"),
            (&total - &ex.support_projector).operator_norm(),
        );
        // Nothing may leak outside the qubit image of the support.
        let leak = transformed[y]
            .iter()
            .map(|m| (m - &m.block(2, 2).embed(d)).operator_norm())
            .fold(0.0, f64::max);
        push(format!("support_leakage[y={y}]"), leak);
    }

    let mut betas = [[0.0; 3]; 3];
    for x in 0..SETTINGS {
        for a in 0..OUTCOMES {
            let n_tilde = transformed[x][a].block(2, 2);
            let k = &(p * &n_tilde) * p;
            let m_t = alice.element(x, a).transpose();
            push(
                format!("trace_orthogonality[a={a},x={x}]"),
                (&k * &m_t).trace().norm(),
            );
            let eig = eig_hermitian(&((&k + &k.adjoint()).scale_real(0.5)))?;
            let e_star = e[x][a].conjugate();
            let overlap: f64 = eig
                .values
                .iter()
                .zip(&eig.vectors)
                .map(|(alpha, kv)| alpha * e_star.inner(kv).norm_sqr())
                .sum();
            push(format!("eigen_overlap[a={a},x={x}]"), overlap.abs());
            let fp = f[x][a].amplitudes();
            let beta = k.sandwich(fp, fp).re;
            betas[x][a] = beta;
            let aligned = f[x][a].projector().scale_real(beta);
            push(
                format!("rank_one_alignment[a={a},x={x}]"),
                (&k - &aligned).operator_norm(),
            );
        }
        let decomposition = (0..OUTCOMES).fold(ComplexMatrix::zeros(2, 2), |acc, a| {
            &acc + &f[x][a].projector().scale_real(betas[x][a])
        });
        push(
            format!("p_squared_decomposition[x={x}]"),
            (&p2 - &decomposition).operator_norm(),
        );
    }
    let beta0 = betas[0][0];
    let spread = betas
        .iter()
        .flatten()
        .map(|b| (b - beta0).abs())
        .fold(0.0, f64::max);
    push("beta_uniformity".into(), spread);
    push(
        "p_squared_scaled_identity".into(),
        (&p2 - &ComplexMatrix::identity(2).scale_real(1.5 * beta0)).operator_norm(),
    );
    for x in 0..SETTINGS {
        for a in 0..OUTCOMES {
            push(
                format!("beta_two_thirds[a={a},x={x}]"),
                (betas[x][a] - TRINE_WEIGHT).abs(),
            );
        }
    }
    Ok(IdentityChain { residuals, betas })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub passed: bool,
    pub tolerance: f64,
    /// Worst `p(a,a|x,x)`.
    pub max_diagonal_probability: f64,
    /// `|⟨φ⁺|(𝟙 ⊗ U_B)|ψ⟩|²`
    pub state_fidelity: f64,
    /// `max_{b,y} ‖U_B Π N_y^b Π U_B† − (2/3)|e*⊥_{b,y}⟩⟨e*⊥_{b,y}|‖_op`
    pub measurement_deviation: f64,
    pub extracted_unitary: ComplexMatrix,
    pub p_b: ComplexMatrix,
    pub p_b_deviation_from_scaled_identity: f64,
    pub schmidt_coefficients: Vec<f64>,
    pub identity_chain: IdentityChain,
}

/// Runs the full extraction and compares against the ideal targets.
///
/// `passed` holds iff the diagonal probabilities, the state infidelity and the measurement
/// deviation are all within `tol`.
pub fn certify(input: &CertificationInput, tol: f64) -> Result<CertificationReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let max_diag = check_max_violation_conditions(input);
    let ex = extract_unitary(input)?;
    let d = input.dim_b();
    let rotated = apply_bob(&ex.unitary, &input.state);
    let state_fidelity = linalg::inner(Ket::phi_plus(d).amplitudes(), &rotated).norm_sqr();
    let transformed = transformed_measurements(input, &ex);
    let targets = target_measurements();
    let mut deviation: f64 = 0.0;
    for y in 0..SETTINGS {
        for b in 0..OUTCOMES {
            let diff = &transformed[y][b] - &targets[y][b].embed(d);
            deviation = deviation.max(diff.operator_norm());
        }
    }
    let scale = ex.p_b.trace().re / 2.0;
    let p_dev = (&ex.p_b - &ComplexMatrix::identity(2).scale(c(scale, 0.0))).operator_norm();
    let identity_chain = verify_identity_chain(input)?;
    let passed = max_diag <= tol && state_fidelity >= 1.0 - tol && deviation <= tol;
    Ok(CertificationReport {
        passed,
        tolerance: tol,
        max_diagonal_probability: max_diag,
        state_fidelity,
        measurement_deviation: deviation,
        extracted_unitary: ex.unitary,
        p_b: ex.p_b,
        p_b_deviation_from_scaled_identity: p_dev,
        schmidt_coefficients: ex.schmidt.coefficients,
        identity_chain,
    })
}

/// Certifies with [`tolerance::CERTIFICATION`].
pub fn certify_default(input: &CertificationInput) -> Result<CertificationReport> {
    certify(input, tolerance::CERTIFICATION)
}
