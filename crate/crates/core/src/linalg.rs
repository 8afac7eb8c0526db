//! Dense helpers for the small matrices this crate works with.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs of a Hermitian matrix, ascending in energy. Column `m` of
/// `vectors` holds eigenvector `m` in the input basis.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm drops
/// below `1e-12·‖A‖_F`. Degenerate eigenvalues are ordered by the site index
/// of their largest component, and each eigenvector is phased so that its
/// largest component is real and positive.
pub fn jacobi_hermitian(matrix: &CMatrix) -> Result<HermitianEigen> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Shape(format!("matrix is {}x{}, expected square", n, matrix.ncols())));
    }
    let mut a = matrix.clone();
    // Symmetrize so round-off in the input cannot break the rotations.
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= JACOBI_TOL * scale {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                let phase = apq / b;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_ph = phase * s; // s·e^{iφ}
                let s_ph_conj = s_ph.conj();

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s_ph_conj;
                    a[(k, q)] = akp * s_ph + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * s_ph;
                    a[(q, k)] = apk * s_ph_conj + aqk * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * s_ph_conj;
                    v[(k, q)] = vkp * s_ph + vkq * c;
                }
            }
        }
    }

    let values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let dominant: Vec<usize> = (0..n)
        .map(|m| {
            let mut best = 0;
            for j in 1..n {
                // strict comparison keeps the lowest index among equal maxima
                if v[(j, m)].norm() > v[(best, m)].norm() + 1e-12 {
                    best = j;
                }
            }
            best
        })
        .collect();
    let tie = 1e-10 * scale.max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        if (values[x] - values[y]).abs() <= tie {
            dominant[x].cmp(&dominant[y])
        } else {
            values[x].total_cmp(&values[y])
        }
    });

    let mut vectors = CMatrix::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (col, &m) in order.iter().enumerate() {
        sorted.push(values[m]);
        let lead = v[(dominant[m], m)];
        let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { Complex64::new(1.0, 0.0) };
        for j in 0..n {
            vectors[(j, col)] = v[(j, m)] * phase;
        }
    }
    Ok(HermitianEigen { values: sorted, vectors })
}

/// Eigenvalues of a real symmetric tridiagonal matrix given its diagonal
/// and off-diagonal, ascending.
pub fn tridiagonal_eigenvalues(diagonal: &[f64], off_diagonal: &[f64]) -> Result<Vec<f64>> {
    let n = diagonal.len();
    if off_diagonal.len() + 1 != n.max(1) {
        return Err(Error::Shape(format!(
            "tridiagonal with {} diagonal entries needs {} off-diagonal entries, got {}",
            n,
            n.saturating_sub(1),
            off_diagonal.len()
        )));
    }
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(diagonal[i], 0.0);
    }
    for (i, &b) in off_diagonal.iter().enumerate() {
        m[(i, i + 1)] = Complex64::new(b, 0.0);
        m[(i + 1, i)] = Complex64::new(b, 0.0);
    }
    Ok(jacobi_hermitian(&m)?.values)
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.random_range(-300.0..300.0), 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn reconstructs_random_hermitian() {
        for seed in 0..20 {
            let h = random_hermitian(8, seed);
            let eig = jacobi_hermitian(&h).unwrap();
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                8,
                eig.values.iter().map(|&e| Complex64::new(e, 0.0)),
            ));
            let rebuilt = &eig.vectors * d * eig.vectors.adjoint();
            assert!((rebuilt - &h).camax() < 1e-9);
            let gram = eig.vectors.adjoint() * &eig.vectors;
            assert!((gram - CMatrix::identity(8, 8)).camax() < 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn complex_eigenvalues_match_characteristic_polynomial_oracle() {
        // Complex Hermitian 8x8 against nalgebra's independent symmetric
        // solver applied to the real 16x16 embedding [[Re, -Im], [Im, Re]],
        // whose spectrum is that of H with every eigenvalue doubled.
        let h = random_hermitian(8, 99);
        let mut embed = DMatrix::<f64>::zeros(16, 16);
        for i in 0..8 {
            for j in 0..8 {
                embed[(i, j)] = h[(i, j)].re;
                embed[(i + 8, j + 8)] = h[(i, j)].re;
                embed[(i, j + 8)] = -h[(i, j)].im;
                embed[(i + 8, j)] = h[(i, j)].im;
            }
        }
        let mut oracle: Vec<f64> = embed.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let eig = jacobi_hermitian(&h).unwrap();
        for (k, e) in eig.values.iter().enumerate() {
            assert!((e - oracle[2 * k]).abs() < 1e-9);
            assert!((e - oracle[2 * k + 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_ordering_by_dominant_site() {
        let m = real_to_complex(&DMatrix::from_row_slice(3, 3, &[5.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 5.0]));
        let eig = jacobi_hermitian(&m).unwrap();
        assert_eq!(eig.values, vec![1.0, 5.0, 5.0]);
        assert_eq!(eig.vectors[(1, 0)].re, 1.0);
        assert_eq!(eig.vectors[(0, 1)].re, 1.0);
        assert_eq!(eig.vectors[(2, 2)].re, 1.0);
    }

    #[test]
    fn tridiagonal_spectrum() {
        let vals = tridiagonal_eigenvalues(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        assert!(tridiagonal_eigenvalues(&[0.0, 0.0], &[]).is_err());
        assert!(tridiagonal_eigenvalues(&[], &[]).unwrap().is_empty());
    }
}
