//! Complex dense linear-algebra primitives shared by every other module.
//!
//! All matrices are `nalgebra` dynamic matrices over `Complex<f64>`.
//! Decompositions are thin (economy) form, Hermitian inputs are
//! symmetrized before eigensolves, and the generalized eigenproblem is
//! reduced via Cholesky.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum MatError {
    #[error("empty matrix in {0}")]
    Empty(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("B is not positive definite (min eigenvalue {0:.3e})")]
    SingularB(f64),
}

/// Largest eigenvalue and its unit-norm eigenvector.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub value: f64,
    pub vector: CVector,
}

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Conjugate transpose.
pub fn herm(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// (A + A^H)/2, absorbing round-off in products X^H X.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * re(0.5)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Thin QR with orthonormal Q (min(rows, cols) columns) and upper-triangular R.
pub fn qr_orthonormal(m: &CMatrix) -> Result<(CMatrix, CMatrix), MatError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(MatError::Empty("qr_orthonormal"));
    }
    let qr = m.clone().qr();
    Ok((qr.q(), qr.r()))
}

/// Largest singular value.
pub fn max_singular(m: &CMatrix) -> Result<f64, MatError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(MatError::Empty("max_singular"));
    }
    let sv = m.clone().singular_values();
    Ok(sv.iter().cloned().fold(0.0f64, f64::max))
}

fn check_hermitian(a: &CMatrix, name: &'static str) -> Result<(), MatError> {
    if a.nrows() != a.ncols() {
        return Err(MatError::DimensionMismatch(format!(
            "{name}: expected square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let norm = a.norm();
    let asym = (a - a.adjoint()).norm();
    if norm > 0.0 && asym > 1e-10 * norm.max(1.0) {
        return Err(MatError::NotHermitian(asym / norm));
    }
    Ok(())
}

/// Largest eigenvalue/eigenvector of a Hermitian matrix.
pub fn max_eig_hermitian(a: &CMatrix) -> Result<EigPair, MatError> {
    if a.nrows() == 0 {
        return Err(MatError::Empty("max_eig_hermitian"));
    }
    check_hermitian(a, "max_eig_hermitian")?;
    let sym = symmetrize(a);
    let eig = sym.symmetric_eigen();
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    let mut vector: CVector = eig.eigenvectors.column(idx).into_owned();
    let n = vector.norm();
    if n > 0.0 {
        vector /= re(n);
    } else {
        vector[0] = C_ONE;
    }
    Ok(EigPair { value, vector })
}

/// Largest generalized eigenvalue of (A, B) with B Hermitian positive
/// definite, via Cholesky reduction B = L L^H.
pub fn max_gen_eig(a: &CMatrix, b: &CMatrix) -> Result<EigPair, MatError> {
    if a.nrows() == 0 {
        return Err(MatError::Empty("max_gen_eig"));
    }
    check_hermitian(a, "max_gen_eig A")?;
    check_hermitian(b, "max_gen_eig B")?;
    if a.nrows() != b.nrows() {
        return Err(MatError::DimensionMismatch(format!(
            "max_gen_eig: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let b_sym = symmetrize(b);
    let min_eig = b_sym
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig <= 1e-12 {
        return Err(MatError::SingularB(min_eig));
    }
    let chol = Cholesky::new(b_sym).ok_or(MatError::SingularB(min_eig))?;
    let l = chol.l();
    // C = L^{-1} A L^{-H}
    let mut c = symmetrize(a);
    l.solve_lower_triangular_mut(&mut c);
    let mut ct = c.adjoint();
    l.solve_lower_triangular_mut(&mut ct);
    let pair = max_eig_hermitian(&symmetrize(&ct.adjoint()))?;
    // back-transform: x = L^{-H} y
    let mut x = pair.vector.clone();
    l.adjoint().solve_upper_triangular_mut(&mut x);
    let n = x.norm();
    if n > 0.0 {
        x /= re(n);
    }
    Ok(EigPair {
        value: pair.value,
        vector: x,
    })
}

/// Projector onto the null space of H (acting on C^cols). Returns the
/// zero matrix when the null space is trivial.
pub fn null_space_projector(h: &CMatrix) -> Result<CMatrix, MatError> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(MatError::Empty("null_space_projector"));
    }
    let n = h.ncols();
    let svd = h.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = smax * 1e-12 * (h.nrows().max(n) as f64) + f64::MIN_POSITIVE;
    let mut p = CMatrix::zeros(n, n);
    // v_t has min(rows, cols) rows; directions beyond it are all null.
    for k in 0..n {
        let in_range = k < svd.singular_values.len() && svd.singular_values[k] > tol;
        if !in_range && k < v_t.nrows() {
            let v = v_t.row(k).adjoint();
            p += &v * v.adjoint();
        }
    }
    if h.ncols() > v_t.nrows() {
        // thin SVD: complete the null space via full projector identity
        let full = identity(n) - v_t.adjoint() * v_t;
        p += full;
    }
    Ok(symmetrize(&p))
}

/// Orthonormal basis of the null space of H, one column per null direction.
/// Empty (cols x 0) when the null space is trivial.
pub fn null_space_basis(h: &CMatrix) -> Result<CMatrix, MatError> {
    let p = null_space_projector(h)?;
    let n = p.nrows();
    let eig = p.symmetric_eigen();
    let cols: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    let mut basis = CMatrix::zeros(n, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        basis.set_column(j, &eig.eigenvectors.column(k));
    }
    // re-orthonormalize to clean up round-off
    if basis.ncols() > 0 {
        let (q, _) = qr_orthonormal(&basis)?;
        return Ok(q);
    }
    Ok(basis)
}

/// Builds a matrix from columns.
pub fn from_columns(cols: &[CVector]) -> CMatrix {
    assert!(!cols.is_empty());
    let rows = cols[0].len();
    let mut m = CMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// x^H M x as a real scalar (M Hermitian).
pub fn quad_form(m: &CMatrix, x: &CVector) -> f64 {
    (x.adjoint() * m * x)[(0, 0)].re
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub fn random_cmatrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            cx(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
        })
    }

    fn random_unit(rng: &mut impl Rng, n: usize) -> CVector {
        let v = random_cmatrix(rng, n, 1);
        let v = CVector::from_column_slice(v.as_slice());
        let nrm = v.norm();
        v / re(nrm)
    }

    #[test]
    fn qr_identity() {
        let m = identity(3);
        let (q, r) = qr_orthonormal(&m).unwrap();
        assert!((q - identity(3)).norm() < 1e-12);
        assert!((r - identity(3)).norm() < 1e-12);
    }

    #[test]
    fn qr_single_column() {
        let v = CMatrix::from_column_slice(3, 1, &[cx(3.0, 0.0), cx(0.0, 4.0), C_ZERO]);
        let (q, r) = qr_orthonormal(&v).unwrap();
        assert!((q.norm() - 1.0).abs() < 1e-12);
        assert!((r[(0, 0)].norm() - 5.0).abs() < 1e-12);
        assert!((&q * &r - v).norm() < 1e-12);
    }

    #[test]
    fn qr_orthonormality_and_reconstruction() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_cmatrix(&mut rng, 5, 3);
            let (q, r) = qr_orthonormal(&m).unwrap();
            assert_eq!(q.ncols(), 3);
            assert!((q.adjoint() * &q - identity(3)).norm() < 1e-10);
            assert!((&q * &r - &m).norm() / m.norm() < 1e-10);
        }
    }

    #[test]
    fn qr_empty_rejected() {
        assert!(qr_orthonormal(&CMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn max_singular_trivial() {
        assert!((max_singular(&identity(2)).unwrap() - 1.0).abs() < 1e-12);
        let d = CMatrix::from_diagonal(&CVector::from_column_slice(&[re(3.0), re(1.0)]));
        assert!((max_singular(&d).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_singular_is_principal_angle_cosine() {
        // cos of the minimum principal angle between two random column spaces,
        // cross-checked by random-restart maximization of |u^H v|.
        let mut rng = StdRng::seed_from_u64(5);
        let (ua, _) = qr_orthonormal(&random_cmatrix(&mut rng, 5, 2)).unwrap();
        let (ub, _) = qr_orthonormal(&random_cmatrix(&mut rng, 5, 2)).unwrap();
        let sigma = max_singular(&(ua.adjoint() * &ub)).unwrap();
        assert!(sigma > 0.0 && sigma < 1.0);
        let mut best = 0.0f64;
        for _ in 0..20000 {
            let x = random_unit(&mut rng, 2);
            let y = random_unit(&mut rng, 2);
            let u = &ua * &x;
            let v = &ub * &y;
            best = best.max((u.adjoint() * v)[(0, 0)].norm());
        }
        assert!(best <= sigma + 1e-9);
        assert!(sigma - best < 2e-2);
    }

    #[test]
    fn gen_eig_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_column_slice(&[re(2.0), re(1.0)]));
        let p = max_gen_eig(&a, &identity(2)).unwrap();
        assert!((p.value - 2.0).abs() < 1e-10);
        assert!((p.vector[0].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gen_eig_identity_ratio() {
        let mut rng = StdRng::seed_from_u64(3);
        let m = random_cmatrix(&mut rng, 3, 3);
        let pd = m.adjoint() * &m + identity(3);
        let p = max_gen_eig(&pd, &pd).unwrap();
        assert!((p.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gen_eig_dominates_rayleigh_samples() {
        let mut rng = StdRng::seed_from_u64(7);
        let x = random_cmatrix(&mut rng, 3, 3);
        let a = symmetrize(&(&x + x.adjoint()));
        let y = random_cmatrix(&mut rng, 3, 3);
        let b = y.adjoint() * &y + identity(3);
        let p = max_gen_eig(&a, &b).unwrap();
        // residual A psi = lambda B psi
        let res = (&a * &p.vector - &b * &p.vector * re(p.value)).norm();
        assert!(res < 1e-8, "residual {res}");
        let mut best = f64::NEG_INFINITY;
        let mut best_v = random_unit(&mut rng, 3);
        for _ in 0..100_000 {
            let v = random_unit(&mut rng, 3);
            let ratio = quad_form(&a, &v) / quad_form(&b, &v);
            assert!(p.value >= ratio - 1e-9);
            if ratio > best {
                best = ratio;
                best_v = v;
            }
        }
        // local polish so the sampling oracle is sharp enough to certify
        // tightness, not just dominance
        let mut radius = 0.3;
        for _ in 0..4000 {
            let cand = &best_v + random_cmatrix(&mut rng, 3, 1).column(0).into_owned() * re(radius);
            let cand = &cand / re(cand.norm());
            let ratio = quad_form(&a, &cand) / quad_form(&b, &cand);
            if ratio > best {
                best = ratio;
                best_v = cand;
            } else {
                radius *= 0.995;
            }
        }
        assert!((p.value - best).abs() / p.value.abs().max(1.0) < 1e-6);
    }

    #[test]
    fn gen_eig_singular_b_rejected() {
        let b = CMatrix::zeros(2, 2);
        assert!(matches!(
            max_gen_eig(&identity(2), &b),
            Err(MatError::SingularB(_))
        ));
    }

    #[test]
    fn herm_eig_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_column_slice(&[
            re(5.0),
            re(2.0),
            re(-1.0),
        ]));
        let p = max_eig_hermitian(&a).unwrap();
        assert!((p.value - 5.0).abs() < 1e-12);
        assert!((p.vector[0].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn herm_eig_zero() {
        let p = max_eig_hermitian(&CMatrix::zeros(3, 3)).unwrap();
        assert!(p.value.abs() < 1e-12);
        assert!((p.vector.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let mut a = identity(2);
        a[(0, 1)] = cx(1.0, 0.0);
        assert!(matches!(
            max_eig_hermitian(&a),
            Err(MatError::NotHermitian(_))
        ));
    }

    #[test]
    fn herm_eig_matches_rayleigh_oracle() {
        let mut rng = StdRng::seed_from_u64(13);
        let h = random_cmatrix(&mut rng, 3, 2);
        let g = random_cmatrix(&mut rng, 3, 2);
        let a = h.adjoint() * &g * g.adjoint() * &h;
        let p = max_eig_hermitian(&symmetrize(&a)).unwrap();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let v = random_unit(&mut rng, 2);
            best = best.max(quad_form(&symmetrize(&a), &v));
        }
        assert!((p.value - best).abs() / p.value.abs() < 1e-3);
    }

    #[test]
    fn projector_simple() {
        let h = CMatrix::from_row_slice(1, 2, &[C_ONE, C_ZERO]);
        let p = null_space_projector(&h).unwrap();
        assert!(p[(0, 0)].norm() < 1e-12);
        assert!((p[(1, 1)] - C_ONE).norm() < 1e-12);
    }

    #[test]
    fn projector_full_rank_square_is_zero() {
        let mut rng = StdRng::seed_from_u64(17);
        let h = random_cmatrix(&mut rng, 3, 3);
        let p = null_space_projector(&h).unwrap();
        assert!(p.norm() < 1e-10);
    }

    #[test]
    fn projector_properties_and_pinv_formula() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..20 {
            let h = random_cmatrix(&mut rng, 2, 3);
            let p = null_space_projector(&h).unwrap();
            assert!((&p - p.adjoint()).norm() < 1e-10);
            assert!((&p * &p - &p).norm() < 1e-10);
            assert!((&h * &p).norm() < 1e-10 * h.norm());
            let gram = &h * h.adjoint();
            let inv = gram.try_inverse().unwrap();
            let p_ref = identity(3) - h.adjoint() * inv * &h;
            assert!((&p - &p_ref).norm() < 1e-8);
            assert!((p.trace().re - 1.0).abs() < 1e-9); // rank = 3 - 2
        }
    }

    #[test]
    fn singular_equals_sqrt_gram_eig() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..20 {
            let m = random_cmatrix(&mut rng, 4, 3);
            let s = max_singular(&m).unwrap();
            let lam = max_eig_hermitian(&symmetrize(&(m.adjoint() * &m)))
                .unwrap()
                .value;
            assert!((s - lam.sqrt()).abs() / s < 1e-9);
        }
    }
}
