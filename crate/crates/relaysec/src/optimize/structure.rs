//! Low-dimensional parameterizations of the relay precoders: the full
//! N_R x N_R matrices reduce to a small coefficient matrix (two-phase)
//! or a pair of coefficient vectors (three-phase) without loss.

use super::OptError;
use crate::channels::ChannelSet;
use crate::matkit::{from_columns, identity, qr_orthonormal, re, CMatrix, CVector};
use crate::schemes::{RelayCombiner2P, RelayCombiner3P, SourceBeamformers};

/// Orthonormal bases for the two-phase relay precoder F = V A U^H.
#[derive(Debug, Clone)]
pub struct StructureBasis2P {
    /// N_R x min(N_A + N_B, N_R), spans [G_A^H, G_B^H]
    pub v: CMatrix,
    /// N_R x 2, spans [H_A q_A, H_B q_B]
    pub u: CMatrix,
    /// set when the two uplink directions are (numerically) collinear
    pub degenerate: bool,
}

/// Bases for the three-phase precoders F_i = V a_i u_i^H.
#[derive(Debug, Clone)]
pub struct StructureBasis3P {
    pub v: CMatrix,
    pub u_a: CVector,
    pub u_b: CVector,
}

fn downlink_span_basis(ch: &ChannelSet) -> Result<CMatrix, OptError> {
    let nr = ch.dims.n_r;
    let mut g = CMatrix::zeros(nr, ch.dims.n_a + ch.dims.n_b);
    g.view_mut((0, 0), (nr, ch.dims.n_a)).copy_from(&ch.g_a.adjoint());
    g.view_mut((0, ch.dims.n_a), (nr, ch.dims.n_b))
        .copy_from(&ch.g_b.adjoint());
    let (v, _) = qr_orthonormal(&g)?;
    Ok(v)
}

pub fn structure_2p(ch: &ChannelSet, src: &SourceBeamformers) -> Result<StructureBasis2P, OptError> {
    let ha_qa = &ch.h_a * &src.q_a;
    let hb_qb = &ch.h_b * &src.q_b;
    if ha_qa.norm() < 1e-14 || hb_qb.norm() < 1e-14 {
        return Err(OptError::ZeroBeamformer);
    }
    let v = downlink_span_basis(ch)?;
    let m = from_columns(&[ha_qa, hb_qb]);
    let (u, r) = qr_orthonormal(&m)?;
    let degenerate = if u.ncols() >= 2 {
        r[(1, 1)].norm() < 1e-10 * r[(0, 0)].norm().max(1e-300)
    } else {
        true
    };
    Ok(StructureBasis2P { v, u, degenerate })
}

pub fn assemble_f_2p(basis: &StructureBasis2P, a: &CMatrix) -> Result<RelayCombiner2P, OptError> {
    if a.nrows() != basis.v.ncols() || a.ncols() != basis.u.ncols() {
        return Err(OptError::ShapeMismatch(format!(
            "A is {}x{}, expected {}x{}",
            a.nrows(),
            a.ncols(),
            basis.v.ncols(),
            basis.u.ncols()
        )));
    }
    Ok(RelayCombiner2P {
        f: &basis.v * a * basis.u.adjoint(),
    })
}

pub fn structure_3p(ch: &ChannelSet, src: &SourceBeamformers) -> Result<StructureBasis3P, OptError> {
    let ha_qa = &ch.h_a * &src.q_a;
    let hb_qb = &ch.h_b * &src.q_b;
    let (na, nb) = (ha_qa.norm(), hb_qb.norm());
    if na < 1e-14 || nb < 1e-14 {
        return Err(OptError::ZeroBeamformer);
    }
    Ok(StructureBasis3P {
        v: downlink_span_basis(ch)?,
        u_a: ha_qa / re(na),
        u_b: hb_qb / re(nb),
    })
}

pub fn assemble_f_3p(
    basis: &StructureBasis3P,
    a_1: &CVector,
    a_2: &CVector,
) -> Result<RelayCombiner3P, OptError> {
    let m = basis.v.ncols();
    if a_1.len() != m || a_2.len() != m {
        return Err(OptError::ShapeMismatch(format!(
            "a_1/a_2 have lengths {}/{}, expected {m}",
            a_1.len(),
            a_2.len()
        )));
    }
    Ok(RelayCombiner3P {
        f_a: &basis.v * a_1 * basis.u_a.adjoint(),
        f_b: &basis.v * a_2 * basis.u_b.adjoint(),
    })
}

/// Structured projection of an arbitrary F onto the two-phase basis:
/// V V^H F U U^H. Preserves the signal terms while shrinking forwarded
/// noise and relay power.
pub fn project_f_2p(basis: &StructureBasis2P, f: &CMatrix) -> CMatrix {
    let nr = basis.v.nrows();
    let pv = &basis.v * basis.v.adjoint();
    let pu = &basis.u * basis.u.adjoint();
    debug_assert_eq!(f.nrows(), nr);
    pv * f * pu
}

/// Structured projection for the three-phase precoders: V V^H F_i u_i u_i^H.
pub fn project_f_3p(basis: &StructureBasis3P, f_a: &CMatrix, f_b: &CMatrix) -> (CMatrix, CMatrix) {
    let pv = &basis.v * basis.v.adjoint();
    let pa = &basis.u_a * basis.u_a.adjoint();
    let pb = &basis.u_b * basis.u_b.adjoint();
    (&pv * f_a * pa, pv * f_b * pb)
}

/// Coefficient matrix recovering (approximately) a given F in the basis.
pub fn coefficients_2p(basis: &StructureBasis2P, f: &CMatrix) -> CMatrix {
    basis.v.adjoint() * f * &basis.u
}

pub fn orthonormality_defect(m: &CMatrix) -> f64 {
    (m.adjoint() * m - identity(m.ncols())).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{paper_fixture, sample_channels, Dims};
    use crate::matkit::cx;
    use crate::schemes::rate_2p;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_vec(rng: &mut impl Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn shapes_on_fixture() {
        let ch = paper_fixture(Dims::new(2, 2, 3).unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        let src = SourceBeamformers {
            q_a: random_vec(&mut rng, 2),
            q_b: random_vec(&mut rng, 2),
        };
        let basis = structure_2p(&ch, &src).unwrap();
        assert_eq!((basis.v.nrows(), basis.v.ncols()), (3, 3)); // min(4, 3)
        assert_eq!((basis.u.nrows(), basis.u.ncols()), (3, 2));
        assert!(orthonormality_defect(&basis.v) < 1e-10);
        assert!(orthonormality_defect(&basis.u) < 1e-10);
        assert!(!basis.degenerate);
    }

    #[test]
    fn full_span_case_unitary_u() {
        let ch = sample_channels(Dims::new(2, 2, 2).unwrap(), 3, true);
        let mut rng = StdRng::seed_from_u64(2);
        let src = SourceBeamformers {
            q_a: random_vec(&mut rng, 2),
            q_b: random_vec(&mut rng, 2),
        };
        let basis = structure_2p(&ch, &src).unwrap();
        assert_eq!((basis.u.nrows(), basis.u.ncols()), (2, 2));
        assert!(orthonormality_defect(&basis.u) < 1e-10);
    }

    #[test]
    fn collinear_uplinks_flagged_but_orthonormal() {
        let mut ch = sample_channels(Dims::new(2, 2, 3).unwrap(), 5, true);
        ch.h_b = ch.h_a.clone();
        let mut rng = StdRng::seed_from_u64(3);
        let q = random_vec(&mut rng, 2);
        let src = SourceBeamformers {
            q_a: q.clone(),
            q_b: q,
        };
        let basis = structure_2p(&ch, &src).unwrap();
        assert!(basis.degenerate);
        assert_eq!(basis.u.ncols(), 2);
        assert!(orthonormality_defect(&basis.u) < 1e-10);
    }

    #[test]
    fn zero_beamformer_rejected() {
        let ch = paper_fixture(Dims::new(2, 2, 3).unwrap()).unwrap();
        let src = SourceBeamformers::zero(2, 2);
        assert!(matches!(
            structure_2p(&ch, &src),
            Err(OptError::ZeroBeamformer)
        ));
    }

    #[test]
    fn assemble_zero_and_rank_bound() {
        let ch = paper_fixture(Dims::new(2, 2, 3).unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(4);
        let src = SourceBeamformers {
            q_a: random_vec(&mut rng, 2),
            q_b: random_vec(&mut rng, 2),
        };
        let basis = structure_2p(&ch, &src).unwrap();
        let zero = assemble_f_2p(&basis, &CMatrix::zeros(3, 2)).unwrap();
        assert_eq!(zero.f.norm(), 0.0);
        let mut a = CMatrix::zeros(3, 2);
        a[(0, 0)] = cx(1.0, 0.0);
        a[(1, 1)] = cx(1.0, 0.0);
        let f = assemble_f_2p(&basis, &a).unwrap().f;
        assert!(f.rank(1e-10) <= 2);
    }

    #[test]
    fn reduced_space_power_identity() {
        // Tr over the full F equals the reduced-space expression in A
        let ch = paper_fixture(Dims::new(2, 2, 3).unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        let src = SourceBeamformers {
            q_a: random_vec(&mut rng, 2),
            q_b: random_vec(&mut rng, 2),
        };
        let basis = structure_2p(&ch, &src).unwrap();
        let a = CMatrix::from_fn(3, 2, |_, _| cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let relay = assemble_f_2p(&basis, &a).unwrap();
        let report = rate_2p(&ch, &src, &relay).unwrap();
        let c_a = basis.u.adjoint() * (&ch.h_a * &src.q_a);
        let c_b = basis.u.adjoint() * (&ch.h_b * &src.q_b);
        let reduced =
            (&a * c_a).norm_squared() + (&a * c_b).norm_squared() + a.norm_squared();
        assert!((report.relay_power_used - reduced).abs() < 1e-10);
    }

    #[test]
    fn assemble_shape_mismatch() {
        let ch = paper_fixture(Dims::new(2, 2, 3).unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let src = SourceBeamformers {
            q_a: random_vec(&mut rng, 2),
            q_b: random_vec(&mut rng, 2),
        };
        let basis = structure_2p(&ch, &src).unwrap();
        assert!(assemble_f_2p(&basis, &CMatrix::zeros(2, 2)).is_err());
        let basis3 = structure_3p(&ch, &src).unwrap();
        assert!(assemble_f_3p(&basis3, &CVector::zeros(2), &CVector::zeros(3)).is_err());
    }

    #[test]
    fn structure_3p_unit_norms() {
        let ch = paper_fixture(Dims::new(2, 2, 3).unwrap()).unwrap();
        let mut rng = StdRng::seed_from_u64(8);
        let src = SourceBeamformers {
            q_a: random_vec(&mut rng, 2),
            q_b: random_vec(&mut rng, 2),
        };
        let b = structure_3p(&ch, &src).unwrap();
        assert!((b.u_a.norm() - 1.0).abs() < 1e-12);
        assert!((b.u_b.norm() - 1.0).abs() < 1e-12);
    }
}
