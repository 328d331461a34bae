//! POVMs, measurement sets, extremality checks, and the trine measurements of the scheme.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, eig_hermitian, phase, ComplexMatrix, Ket, ONE, ZERO};
use crate::tolerance;

/// Number of settings and outcomes per party in the scenario.
pub const SETTINGS: usize = 3;
pub const OUTCOMES: usize = 3;

/// Weight of every rank-one trine element.
pub const TRINE_WEIGHT: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NotSquare,
    DimensionMismatch,
    NonFinite,
    NotHermitian,
    NotPsd,
    ZeroElement,
    Incomplete,
    Empty,
}

/// A single failed POVM predicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `None` for set-level failures such as completeness.
    pub element: Option<usize>,
    pub kind: ViolationKind,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.element {
            Some(i) => write!(
                f,
                "element {i}: {:?} (magnitude {:e})",
                self.kind, self.magnitude
            ),
            None => write!(f, "{:?} (magnitude {:e})", self.kind, self.magnitude),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Accept elements that are identically zero.
    pub allow_zero: bool,
}

/// Checks the POVM axioms at [`tolerance::DECOMPOSITION`]; returns every failed predicate.
pub fn validate(elements: &[ComplexMatrix], opts: ValidateOptions) -> Vec<Violation> {
    let tol = tolerance::DECOMPOSITION;
    let mut out = Vec::new();
    let Some(first) = elements.first() else {
        out.push(Violation {
            element: None,
            kind: ViolationKind::Empty,
            magnitude: 0.0,
        });
        return out;
    };
    let dim = first.rows();
    let mut shapes_ok = true;
    for (i, m) in elements.iter().enumerate() {
        if !m.is_square() {
            shapes_ok = false;
            out.push(Violation {
                element: Some(i),
                kind: ViolationKind::NotSquare,
                magnitude: (m.rows() as f64 - m.cols() as f64).abs(),
            });
            continue;
        }
        if m.rows() != dim {
            shapes_ok = false;
            out.push(Violation {
                element: Some(i),
                kind: ViolationKind::DimensionMismatch,
                magnitude: (m.rows() as f64 - dim as f64).abs(),
            });
            continue;
        }
        if !m.is_finite() {
            shapes_ok = false;
            out.push(Violation {
                element: Some(i),
                kind: ViolationKind::NonFinite,
                magnitude: f64::INFINITY,
            });
            continue;
        }
        let defect = m.hermitian_defect();
        if defect > tol {
            out.push(Violation {
                element: Some(i),
                kind: ViolationKind::NotHermitian,
                magnitude: defect,
            });
        }
        let min = m.min_eigenvalue();
        if min < -tol {
            out.push(Violation {
                element: Some(i),
                kind: ViolationKind::NotPsd,
                magnitude: -min,
            });
        }
        if !opts.allow_zero && m.max_abs() <= tol {
            out.push(Violation {
                element: Some(i),
                kind: ViolationKind::ZeroElement,
                magnitude: m.max_abs(),
            });
        }
    }
    if shapes_ok {
        let total = linalg::sum(elements.iter()).expect("non-empty");
        let deficit = (&total - &ComplexMatrix::identity(dim)).operator_norm();
        if deficit > tol {
            out.push(Violation {
                element: None,
                kind: ViolationKind::Incomplete,
                magnitude: deficit,
            });
        }
    }
    out
}

/// A validated POVM.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Povm {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_options(elements, ValidateOptions::default())
    }

    pub fn with_options(elements: Vec<ComplexMatrix>, opts: ValidateOptions) -> Result<Self> {
        let violations = validate(&elements, opts);
        if !violations.is_empty() {
            let msg = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::InvalidPovm(msg));
        }
        Ok(Self {
            dim: elements[0].rows(),
            elements,
        })
    }

    /// Skips validation; for deliberately perturbed or sub-normalized element lists.
    pub fn from_elements_unchecked(elements: Vec<ComplexMatrix>) -> Self {
        assert!(!elements.is_empty(), "POVM needs at least one element");
        Self {
            dim: elements[0].rows(),
            elements,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, outcome: usize) -> &ComplexMatrix {
        &self.elements[outcome]
    }

    /// Born probabilities `Tr(Mᵃ ρ)`.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.elements.iter().map(|m| (m * rho).trace().re).collect()
    }

    /// Conjugates every element by `u`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        let ud = u.adjoint();
        Self {
            dim: u.rows(),
            elements: self.elements.iter().map(|m| &(u * m) * &ud).collect(),
        }
    }
}

/// Three three-outcome POVMs on a common space, indexed by setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementSet {
    povms: Vec<Povm>,
}

impl MeasurementSet {
    pub fn new(povms: Vec<Povm>) -> Result<Self> {
        if povms.len() != SETTINGS {
            return Err(Error::InvalidPovm(format!(
                "expected {SETTINGS} settings, got {}",
                povms.len()
            )));
        }
        let dim = povms[0].dim();
        for (x, p) in povms.iter().enumerate() {
            if p.len() != OUTCOMES {
                return Err(Error::InvalidPovm(format!(
                    "setting {x}: expected {OUTCOMES} outcomes, got {}",
                    p.len()
                )));
            }
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "setting {x} acts on dim {}, setting 0 on dim {dim}",
                    p.dim()
                )));
            }
        }
        Ok(Self { povms })
    }

    /// Builds and validates from `elements[x][a]`.
    pub fn from_elements(elements: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let povms = elements
            .into_iter()
            .enumerate()
            .map(|(x, e)| {
                Povm::new(e).map_err(|err| Error::InvalidPovm(format!("setting {x}: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(povms)
    }

    #[cfg(test)]
    pub(crate) fn from_povms_unchecked(povms: Vec<Povm>) -> Self {
        Self { povms }
    }

    pub fn dim(&self) -> usize {
        self.povms[0].dim()
    }

    pub fn povms(&self) -> &[Povm] {
        &self.povms
    }

    pub fn setting(&self, x: usize) -> &Povm {
        &self.povms[x]
    }

    pub fn element(&self, x: usize, a: usize) -> &ComplexMatrix {
        self.povms[x].element(a)
    }

    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        Self {
            povms: self.povms.iter().map(|p| p.conjugated(u)).collect(),
        }
    }
}

/// The trine vectors `|e_{a,x}⟩`, indexed `[x][a]`.
pub fn trine_vectors() -> [[Ket; OUTCOMES]; SETTINGS] {
    let h = 0.5;
    let r = 3f64.sqrt() / 2.0;
    let s = FRAC_1_SQRT_2;
    let k = |a: linalg::Complex, b: linalg::Complex| {
        Ket::new(vec![a, b]).expect("trine vectors are normalized")
    };
    [
        [
            k(ONE, ZERO),
            k(c(h, 0.0), c(r, 0.0)),
            k(c(h, 0.0), c(-r, 0.0)),
        ],
        [
            k(ZERO, ONE),
            k(c(r, 0.0), c(0.0, h)),
            k(c(r, 0.0), c(0.0, -h)),
        ],
        [
            k(c(s, 0.0), c(0.0, s)),
            k(c(s, 0.0), phase(7.0 * PI / 6.0) * s),
            k(c(s, 0.0), phase(-PI / 6.0) * s),
        ],
    ]
}

/// `|e*⊥_{a,x}⟩`: phase-canonical qubit vectors orthogonal to the conjugated trine vectors.
pub fn conjugate_complement_vectors() -> [[Ket; OUTCOMES]; SETTINGS] {
    trine_vectors().map(|row| {
        row.map(|e| linalg::orthogonal_complement_qubit(&e.conjugate()).expect("qubit vector"))
    })
}

fn weighted_projectors(vectors: [[Ket; OUTCOMES]; SETTINGS]) -> MeasurementSet {
    let povms = vectors
        .into_iter()
        .map(|row| {
            Povm::new(
                row.iter()
                    .map(|v| v.projector().scale_real(TRINE_WEIGHT))
                    .collect(),
            )
            .expect("trine POVM is valid")
        })
        .collect();
    MeasurementSet::new(povms).expect("three trine settings")
}

/// Trusted party's measurements `M_x^a = (2/3)|e_{a,x}⟩⟨e_{a,x}|`.
pub fn alice_ideal() -> MeasurementSet {
    weighted_projectors(trine_vectors())
}

/// Untrusted party's ideal measurements `N_x^a = (2/3)|e*⊥_{a,x}⟩⟨e*⊥_{a,x}|`.
pub fn bob_ideal() -> MeasurementSet {
    weighted_projectors(conjugate_complement_vectors())
}

/// Outcome of the rank-one extremality criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    /// Every element is rank-one, so linear independence decides extremality.
    pub applicable: bool,
    /// `None` when the criterion is not applicable.
    pub extremal: Option<bool>,
    /// Rank of the elements flattened into `dim²`-vectors.
    pub matrix_rank_found: usize,
    pub element_ranks: Vec<usize>,
}

fn element_rank(m: &ComplexMatrix) -> usize {
    let mut vals = match eig_hermitian(m) {
        Ok(e) => e.values,
        Err(_) => return linalg::rank(m, tolerance::RANK),
    };
    vals.reverse();
    let cutoff = tolerance::RANK * (vals[0].max(0.0) + 1.0);
    vals.iter().filter(|&&l| l > cutoff).count()
}

/// Rank-one POVMs are extremal iff their elements are linearly independent.
pub fn check_extremality(p: &Povm) -> ExtremalityReport {
    let element_ranks: Vec<usize> = p.elements().iter().map(element_rank).collect();
    let applicable = element_ranks.iter().all(|&r| r == 1);
    let flat = ComplexMatrix::from_fn(p.len(), p.dim() * p.dim(), |i, j| p.element(i).data()[j]);
    let matrix_rank_found = linalg::rank(&flat, tolerance::RANK);
    ExtremalityReport {
        applicable,
        extremal: applicable.then_some(matrix_rank_found == p.len()),
        matrix_rank_found,
        element_ranks,
    }
}

/// Compresses each element onto the support of `projector`, expressed in an orthonormal basis
/// of that support (output dimension = rank of the projector).
pub fn project_povm(p: &Povm, projector: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    if !projector.is_square() || projector.rows() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "projector {}x{} vs POVM dim {}",
            projector.rows(),
            projector.cols(),
            p.dim()
        )));
    }
    let idem = (&(projector * projector) - projector).max_abs();
    let herm = projector.hermitian_defect();
    if idem.max(herm) > tolerance::DECOMPOSITION {
        return Err(Error::NotProjector(idem.max(herm)));
    }
    let eig = eig_hermitian(projector)?;
    let support: Vec<&Ket> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(l, _)| **l > 0.5)
        .map(|(_, v)| v)
        .collect();
    let r = support.len();
    let basis = ComplexMatrix::from_fn(p.dim(), r, |i, j| support[j].amplitudes()[i]);
    let basis_dag = basis.adjoint();
    Ok(p.elements()
        .iter()
        .map(|m| &(&basis_dag * m) * &basis)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alice_element_values() {
        let a = alice_ideal();
        let m00 = a.element(0, 0);
        assert!(m00.distance(&ComplexMatrix::from_real_diagonal(&[2.0 / 3.0, 0.0])) < 1e-15);
        let third = 1.0 / 3.0;
        let expect = ComplexMatrix::from_rows(vec![
            vec![c(third, 0.0), c(0.0, -third)],
            vec![c(0.0, third), c(third, 0.0)],
        ])
        .unwrap();
        assert!(a.element(2, 0).distance(&expect) < 1e-15);
    }

    #[test]
    fn trine_sums_are_three_halves_identity() {
        for vecs in [trine_vectors(), conjugate_complement_vectors()] {
            for row in vecs {
                let s = linalg::sum(row.iter().map(|v| v.projector()).collect::<Vec<_>>().iter())
                    .unwrap();
                assert!(s.distance(&ComplexMatrix::identity(2).scale_real(1.5)) < 1e-12);
            }
        }
    }

    #[test]
    fn bob_vectors_are_conjugate_perpendicular() {
        let e = trine_vectors();
        let f = conjugate_complement_vectors();
        for x in 0..3 {
            for a in 0..3 {
                assert!(e[x][a].conjugate().inner(&f[x][a]).norm() < 1e-12);
            }
        }
        assert_eq!(f[0][0], Ket::basis(2, 1));
        let b = bob_ideal();
        assert!(
            b.element(0, 0)
                .distance(&ComplexMatrix::from_real_diagonal(&[0.0, 2.0 / 3.0]))
                < 1e-15
        );
    }

    #[test]
    fn ideal_sets_validate() {
        for set in [alice_ideal(), bob_ideal()] {
            for p in set.povms() {
                assert!(validate(p.elements(), ValidateOptions::default()).is_empty());
            }
        }
    }

    #[test]
    fn incomplete_povm_reports_deficit() {
        let e = ComplexMatrix::from_real_diagonal(&[2.0 / 3.0, 0.0]);
        let v = validate(&[e.clone(), e], ValidateOptions::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Incomplete);
        // I - diag(4/3, 0) has operator norm 1.
        assert!((v[0].magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_eigenvalue_is_reported() {
        let bad = ComplexMatrix::from_real_diagonal(&[1.01, -0.01]);
        let rest = ComplexMatrix::from_real_diagonal(&[-0.01, 1.01]);
        let v = validate(&[bad, rest], ValidateOptions::default());
        let psd: Vec<_> = v
            .iter()
            .filter(|v| v.kind == ViolationKind::NotPsd)
            .collect();
        assert_eq!(psd.len(), 2);
        assert!((psd[0].magnitude - 0.01).abs() < 1e-12);
        assert_eq!(psd[0].element, Some(0));
    }

    #[test]
    fn zero_elements_need_opt_in() {
        let els = vec![ComplexMatrix::identity(2), ComplexMatrix::zeros(2, 2)];
        let v = validate(&els, ValidateOptions::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::ZeroElement);
        assert!(validate(&els, ValidateOptions { allow_zero: true }).is_empty());
    }

    #[test]
    fn measurement_set_shape_checks() {
        let p = alice_ideal().setting(0).clone();
        assert!(MeasurementSet::new(vec![p.clone(), p.clone()]).is_err());
        let two = Povm::new(vec![
            ComplexMatrix::from_real_diagonal(&[1.0, 0.0]),
            ComplexMatrix::from_real_diagonal(&[0.0, 1.0]),
        ])
        .unwrap();
        assert!(MeasurementSet::new(vec![p.clone(), p, two]).is_err());
    }

    #[test]
    fn extremality_examples() {
        for set in [alice_ideal(), bob_ideal()] {
            for p in set.povms() {
                let r = check_extremality(p);
                assert!(r.applicable);
                assert_eq!(r.extremal, Some(true));
                assert_eq!(r.matrix_rank_found, 3);
            }
        }
        let proj = Povm::new(vec![
            ComplexMatrix::from_real_diagonal(&[1.0, 0.0]),
            ComplexMatrix::from_real_diagonal(&[0.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(check_extremality(&proj).extremal, Some(true));
    }

    #[test]
    fn six_outcome_mixture_is_not_extremal() {
        let e = trine_vectors();
        let els: Vec<ComplexMatrix> = e[0]
            .iter()
            .chain(e[1].iter())
            .map(|v| v.projector().scale_real(1.0 / 3.0))
            .collect();
        let p = Povm::new(els).unwrap();
        let r = check_extremality(&p);
        assert!(r.applicable);
        assert_eq!(r.extremal, Some(false));
        assert_eq!(r.matrix_rank_found, 4);
    }

    #[test]
    fn higher_rank_elements_are_indeterminate() {
        let p = Povm::new(vec![
            ComplexMatrix::identity(2).scale_real(0.5),
            ComplexMatrix::identity(2).scale_real(0.5),
        ])
        .unwrap();
        let r = check_extremality(&p);
        assert!(!r.applicable);
        assert_eq!(r.extremal, None);
        assert_eq!(r.element_ranks, vec![2, 2]);
    }

    #[test]
    fn projecting_with_identity_is_noop() {
        let p = bob_ideal().setting(1).clone();
        let out = project_povm(&p, &ComplexMatrix::identity(2)).unwrap();
        for (a, b) in out.iter().zip(p.elements()) {
            assert!(a.distance(b) < 1e-15);
        }
    }

    #[test]
    fn projection_recovers_embedded_block() {
        let ideal = bob_ideal();
        for x in 0..3 {
            // Junk on the complement: a different split of the 2-dim identity.
            let junk = [0.2, 0.5, 0.3];
            let els: Vec<ComplexMatrix> = (0..3)
                .map(|a| {
                    let mut m = ideal.element(x, a).embed(4);
                    m[(2, 2)] = c(junk[a], 0.0);
                    m[(3, 3)] = c(junk[(a + 1) % 3], 0.0);
                    m
                })
                .collect();
            let p = Povm::new(els).unwrap();
            let proj = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 0.0, 0.0]);
            let out = project_povm(&p, &proj).unwrap();
            for a in 0..3 {
                assert!(out[a].distance(ideal.element(x, a)) < 1e-12);
                assert!(out[a].is_psd(1e-12));
            }
        }
    }

    #[test]
    fn projection_rejects_non_projector() {
        let p = bob_ideal().setting(0).clone();
        let bad = ComplexMatrix::from_real_diagonal(&[0.5, 1.0]);
        assert!(matches!(
            project_povm(&p, &bad),
            Err(Error::NotProjector(_))
        ));
    }
}
