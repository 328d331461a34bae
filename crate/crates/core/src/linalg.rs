//! Dense complex linear algebra for the small dimensions of the steering scenario.
//!
//! Matrices are stored row-major. Tensor products follow the block convention
//! `(A ⊗ B)[(i·rb + k), (j·cb + l)] = A[i,j]·B[k,l]`, so the composite basis is ordered
//! `|i⟩_A|k⟩_B ↦ i·dim_B + k`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64 as Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// `e^{iθ}`
pub fn phase(theta: f64) -> Complex {
    Complex::from_polar(1.0, theta)
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data, rejecting ragged or non-finite input.
    pub fn from_rows(rows: Vec<Vec<Complex>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("matrix has no rows".into()));
        }
        let m = rows[0].len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(
                "ragged or empty matrix rows".into(),
            ));
        }
        let data: Vec<Complex> = rows.into_iter().flatten().collect();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        Ok(Self {
            rows: n,
            cols: m,
            data,
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex>> {
        self.data.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        singular_values(self).first().copied().unwrap_or(0.0)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self + &self.adjoint()).scale_real(0.5);
        hermitian_eigenvalues(&h).first().copied().unwrap_or(0.0)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.is_square() && (self - &Self::identity(self.rows)).max_abs() <= tol
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).frobenius_norm()
    }

    pub fn apply(&self, v: &[Complex]) -> Vec<Complex> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `⟨u|A|v⟩`
    pub fn sandwich(&self, u: &[Complex], v: &[Complex]) -> Complex {
        let av = self.apply(v);
        u.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }

    /// Top-left `rows × cols` block.
    pub fn block(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(i, j)])
    }

    /// Embeds `self` into the top-left corner of a `dim × dim` zero matrix.
    pub fn embed(&self, dim: usize) -> Self {
        Self::from_fn(dim, dim, |i, j| {
            if i < self.rows && j < self.cols {
                self[(i, j)]
            } else {
                ZERO
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "add: shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "sub: shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "mul: inner dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Sum of a non-empty sequence of equally shaped matrices.
pub fn sum<'a>(mut it: impl Iterator<Item = &'a ComplexMatrix>) -> Option<ComplexMatrix> {
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, m| &acc + m))
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * rb, a.cols * cb, |r, s| {
        a[(r / rb, s / cb)] * b[(r % rb, s % cb)]
    })
}

/// Kronecker product of two vectors.
pub fn tensor_vec(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

fn check_bipartite(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<()> {
    if !m.is_square() || m.rows != dim_a * dim_b || dim_a == 0 || dim_b == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix does not factor as {dim_a}·{dim_b}",
            m.rows, m.cols
        )));
    }
    Ok(())
}

/// `Tr_A m`, a `dim_b × dim_b` matrix.
pub fn partial_trace_a(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, dim_a, dim_b)?;
    Ok(ComplexMatrix::from_fn(dim_b, dim_b, |k, l| {
        (0..dim_a).map(|i| m[(i * dim_b + k, i * dim_b + l)]).sum()
    }))
}

/// `Tr_B m`, a `dim_a × dim_a` matrix.
pub fn partial_trace_b(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, dim_a, dim_b)?;
    Ok(ComplexMatrix::from_fn(dim_a, dim_a, |i, j| {
        (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
    }))
}

/// Unit-norm complex vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex>", into = "Vec<Complex>")]
pub struct Ket {
    amplitudes: Vec<Complex>,
}

impl TryFrom<Vec<Complex>> for Ket {
    type Error = Error;
    fn try_from(v: Vec<Complex>) -> Result<Self> {
        Ket::new(v)
    }
}

impl From<Ket> for Vec<Complex> {
    fn from(k: Ket) -> Self {
        k.amplitudes
    }
}

pub fn norm(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u|v⟩`
pub fn inner(u: &[Complex], v: &[Complex]) -> Complex {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

impl Ket {
    /// Accepts only vectors whose norm is 1 within [`tolerance::CONSTRUCTION`].
    pub fn new(amplitudes: Vec<Complex>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch("empty ket".into()));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("ket amplitude"));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > tolerance::CONSTRUCTION {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex>) -> Result<Self> {
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("ket amplitude"));
        }
        let n = norm(&amplitudes);
        if amplitudes.is_empty() || n < 1e-300 {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / n).collect(),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Self { amplitudes: v }
    }

    /// `(|00⟩ + |11⟩)/√2` embedded in `ℂ² ⊗ ℂ^dim_b`.
    pub fn phi_plus(dim_b: usize) -> Self {
        assert!(dim_b >= 2, "phi_plus needs dim_b >= 2");
        let mut v = vec![ZERO; 2 * dim_b];
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[dim_b + 1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn conjugate(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(),
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> Complex {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn projector(&self) -> ComplexMatrix {
        outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        Self {
            amplitudes: tensor_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    /// Rotates the global phase so the first non-negligible amplitude is real and positive.
    pub fn canonical_phase(&self) -> Self {
        let pivot = self
            .amplitudes
            .iter()
            .find(|z| z.norm() > tolerance::CONSTRUCTION)
            .copied()
            .unwrap_or(ONE);
        let rot = pivot.conj() / pivot.norm();
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * rot).collect(),
        }
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// `|u⟩⟨v|`
pub fn outer(u: &[Complex], v: &[Complex]) -> ComplexMatrix {
    ComplexMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

/// The unique (up to phase) qubit state orthogonal to `k`, phase-canonicalized.
pub fn orthogonal_complement_qubit(k: &Ket) -> Result<Ket> {
    if k.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "orthogonal complement needs a qubit, got dim {}",
            k.dim()
        )));
    }
    let a = k.amplitudes();
    Ok(Ket {
        amplitudes: vec![-a[1].conj(), a[0].conj()],
    }
    .canonical_phase())
}

/// Eigen-decomposition of a Hermitian matrix; values ascending, vectors phase-canonical.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Ket>,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.vectors[0].dim();
        self.values
            .iter()
            .zip(&self.vectors)
            .fold(ComplexMatrix::zeros(dim, dim), |acc, (l, v)| {
                &acc + &v.projector().scale_real(*l)
            })
    }
}

fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = m
        .to_nalgebra()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            m.rows, m.cols
        )));
    }
    let defect = m.hermitian_defect();
    if defect > tolerance::DECOMPOSITION {
        return Err(Error::NotHermitian(defect));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix entry"));
    }
    let n = m.rows;
    // Already diagonal: keep the computational basis so degenerate spectra stay reproducible.
    let off_diag = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|ij| m[ij].norm())
        .fold(0.0, f64::max);
    let mut pairs: Vec<(f64, Vec<Complex>)> = if off_diag == 0.0 {
        (0..n)
            .map(|i| (m[(i, i)].re, Ket::basis(n, i).amplitudes))
            .collect()
    } else {
        let h = (m + &m.adjoint()).scale_real(0.5);
        let eig = h.to_nalgebra().symmetric_eigen();
        (0..n)
            .map(|i| {
                let col: Vec<Complex> = eig.eigenvectors.column(i).iter().copied().collect();
                (eig.eigenvalues[i], col)
            })
            .collect()
    };
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for (l, v) in pairs {
        values.push(l);
        vectors.push(Ket::normalized(v)?.canonical_phase());
    }
    Ok(HermitianEigen { values, vectors })
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows == 0 || m.cols == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with threshold `rel_tol · max(1, σ_max)`.
pub fn rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let cutoff = rel_tol * s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x > cutoff).count()
}

/// Schmidt decomposition of a bipartite pure state.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    /// Descending, each above [`tolerance::SCHMIDT_TRUNCATION`].
    pub coefficients: Vec<f64>,
    pub left: Vec<Ket>,
    pub right: Vec<Ket>,
}

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> Vec<Complex> {
        let dim = self.left[0].dim() * self.right[0].dim();
        let mut out = vec![ZERO; dim];
        for ((l, s), t) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            for (o, v) in out
                .iter_mut()
                .zip(tensor_vec(s.amplitudes(), t.amplitudes()))
            {
                *o += v * l;
            }
        }
        out
    }
}

/// Schmidt decomposition via the eigen-decomposition of the reduced state on the first factor.
///
/// Right vectors are `(⟨s_i| ⊗ 𝟙)|ψ⟩ / λ_i`.
pub fn schmidt_decompose(psi: &Ket, dim_a: usize, dim_b: usize) -> Result<SchmidtForm> {
    if psi.dim() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "ket of dim {} does not factor as {dim_a}·{dim_b}",
            psi.dim()
        )));
    }
    let rho = psi.projector();
    let rho_a = partial_trace_b(&rho, dim_a, dim_b)?;
    let eig = eig_hermitian(&rho_a)?;
    let amps = psi.amplitudes();
    let mut coefficients = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    // λ_i = ‖(⟨s_i| ⊗ 𝟙)|ψ⟩‖ directly; √μ_i would amplify eigenvalue round-off near zero.
    let mut terms: Vec<(f64, &Ket, Vec<Complex>)> = eig
        .vectors
        .iter()
        .rev()
        .map(|s| {
            let sa = s.amplitudes();
            let t: Vec<Complex> = (0..dim_b)
                .map(|k| (0..dim_a).map(|i| sa[i].conj() * amps[i * dim_b + k]).sum())
                .collect();
            (norm(&t), s, t)
        })
        .collect();
    terms.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (lambda, s, t) in terms {
        if lambda <= tolerance::SCHMIDT_TRUNCATION {
            continue;
        }
        coefficients.push(lambda);
        left.push(s.clone());
        right.push(Ket::normalized(t)?);
    }
    Ok(SchmidtForm {
        coefficients,
        left,
        right,
    })
}

/// Purifies a `dim_a·dim_b` density matrix into `ℂ^dim_a ⊗ ℂ^(dim_b·r)`, `r` its rank.
///
/// The ancilla index is the fastest-varying one on the enlarged second factor. Returns the ket
/// and the enlarged second-factor dimension.
pub fn purify(rho: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<(Ket, usize)> {
    check_bipartite(rho, dim_a, dim_b)?;
    let eig = eig_hermitian(rho)?;
    let kept: Vec<(f64, &Ket)> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .rev()
        .filter(|(l, _)| **l > tolerance::SCHMIDT_TRUNCATION)
        .map(|(l, v)| (*l, v))
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidState("zero matrix cannot be purified".into()));
    }
    let r = kept.len();
    let big_b = dim_b * r;
    let mut out = vec![ZERO; dim_a * big_b];
    for (k, (l, v)) in kept.iter().enumerate() {
        let w = l.sqrt();
        for i in 0..dim_a {
            for j in 0..dim_b {
                out[i * big_b + j * r + k] += v.amplitudes()[i * dim_b + j] * w;
            }
        }
    }
    Ok((Ket::normalized(out)?, big_b))
}

/// Checks that `rho` is Hermitian, PSD and has unit trace within `tol`.
pub fn validate_density(rho: &ComplexMatrix, tol: f64) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidState("not square".into()));
    }
    if !rho.is_finite() {
        return Err(Error::NonFinite("density matrix"));
    }
    let defect = rho.hermitian_defect();
    if defect > tol {
        return Err(Error::InvalidState(format!(
            "not Hermitian (defect {defect:e})"
        )));
    }
    let min = rho.min_eigenvalue();
    if min < -tol {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > tol {
        return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
    }
    Ok(())
}
