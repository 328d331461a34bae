//! Random objects and reference constructions shared by the integration tests.
#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use steercert::linalg::{c, Complex, ComplexMatrix, Ket};
use steercert::povm::{self, MeasurementSet, Povm};

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

pub fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn haar_ket(rng: &mut ChaCha8Rng, dim: usize) -> Ket {
    loop {
        let v: Vec<Complex> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(k) = Ket::normalized(v) {
            return k;
        }
    }
}

/// Haar unitary by modified Gram–Schmidt on the columns of a Ginibre matrix.
pub fn haar_unitary(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    let mut cols: Vec<Vec<Complex>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<Complex> = (0..dim).map(|i| g[(i, j)]).collect();
        for q in &cols {
            let p: Complex = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= p * qi;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= n);
        cols.push(v);
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// `G G† / Tr(G G†)` with a `dim × rank` Ginibre factor.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, rank);
    let p = &g * &g.adjoint();
    let t = p.trace().re;
    p.scale_real(1.0 / t)
}

pub fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let gamma = Gamma::new(1.0, 1.0).unwrap();
    let v: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// `S^{-1/2} A_k S^{-1/2}` with `S = Σ A_k` for random PSD `A_k`.
pub fn random_povm(rng: &mut ChaCha8Rng, dim: usize, outcomes: usize) -> Vec<ComplexMatrix> {
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(rng, dim, dim);
            &g * &g.adjoint()
        })
        .collect();
    let s = steercert::linalg::sum(raw.iter()).unwrap();
    let eig = steercert::linalg::eig_hermitian(&s).unwrap();
    let inv_sqrt = eig
        .vectors
        .iter()
        .zip(&eig.values)
        .map(|(v, l)| v.projector().scale_real(1.0 / l.sqrt()))
        .fold(ComplexMatrix::zeros(dim, dim), |acc, m| &acc + &m);
    raw.iter().map(|a| &(&inv_sqrt * a) * &inv_sqrt).collect()
}

pub fn random_measurement_set(rng: &mut ChaCha8Rng, dim: usize) -> MeasurementSet {
    let povms = (0..3)
        .map(|_| Povm::new(random_povm(rng, dim, 3)).unwrap())
        .collect();
    MeasurementSet::new(povms).unwrap()
}

/// `(𝟙 ⊗ U)|ψ⟩` for `|ψ⟩ ∈ ℂ² ⊗ ℂ^d`.
pub fn apply_bob(u: &ComplexMatrix, psi: &Ket) -> Ket {
    let full = steercert::linalg::tensor(&ComplexMatrix::identity(2), u);
    Ket::normalized(full.apply(psi.amplitudes())).unwrap()
}

/// Ideal configuration embedded in `ℂ^d` and rotated by `u`: the ideal elements live on
/// `span{|0⟩, |1⟩}` and the complement projector is split across outcomes with random weights.
pub fn embedded_ideal(rng: &mut ChaCha8Rng, u: &ComplexMatrix) -> (Ket, MeasurementSet) {
    let d = u.rows();
    let mut complement = ComplexMatrix::zeros(d, d);
    for i in 2..d {
        complement[(i, i)] = c(1.0, 0.0);
    }
    let ideal = povm::bob_ideal();
    let povms = (0..3)
        .map(|x| {
            let w = dirichlet(rng, 3);
            let els = (0..3)
                .map(|a| {
                    let e = &ideal.element(x, a).embed(d) + &complement.scale_real(w[a]);
                    &(u * &e) * &u.adjoint()
                })
                .collect();
            Povm::new(els).unwrap()
        })
        .collect();
    let state = apply_bob(u, &Ket::phi_plus(d));
    (state, MeasurementSet::new(povms).unwrap())
}
