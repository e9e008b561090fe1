//! Source beamformers that align the two uplink signals at the relay:
//! both effective vectors H_A q_A and H_B q_B point along the same
//! direction, so the relay observes only the superimposed sum.

use super::OptError;
use crate::channels::{ChannelSet, PowerBudget};
use crate::matkit::{cx, null_space_basis, re, CMatrix, CVector};
use crate::schemes::SourceBeamformers;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Effective-channel gains of an aligned pair built from a stacked null
/// vector z = (z_a, z_b), at full transmit power.
fn aligned_gains(
    ch: &ChannelSet,
    budget: &PowerBudget,
    z_a: &CVector,
    z_b: &CVector,
) -> Option<(f64, f64)> {
    let (na, nb) = (z_a.norm(), z_b.norm());
    if na < 1e-12 || nb < 1e-12 {
        return None;
    }
    let a2 = budget.p_a * (&ch.h_a * z_a).norm_squared() / (na * na);
    let b2 = budget.p_b * (&ch.h_b * z_b).norm_squared() / (nb * nb);
    Some((a2, b2))
}

/// Figure of merit for an aligned pair: the harmonic-mean combination
/// a^2 b^2 / (a^2 + b^2) that governs the aligned sum rate at high relay
/// power.
fn merit(gains: (f64, f64)) -> f64 {
    let (a2, b2) = gains;
    if a2 + b2 <= 0.0 {
        return 0.0;
    }
    a2 * b2 / (a2 + b2)
}

fn split(z: &CVector, n_a: usize) -> (CVector, CVector) {
    (
        z.rows(0, n_a).into_owned(),
        z.rows(n_a, z.len() - n_a).into_owned(),
    )
}

/// Builds full-power aligned source beamformers. Requires
/// N_A + N_B > N_R; otherwise the stacked channel [H_A, -H_B] generically
/// has a trivial null space and alignment is impossible.
///
/// When the null space has dimension > 1, the direction is chosen by a
/// randomized local search over combining coefficients, maximizing the
/// aligned figure of merit.
pub fn signal_align(
    ch: &ChannelSet,
    budget: &PowerBudget,
    seed: u64,
) -> Result<SourceBeamformers, OptError> {
    let (n_a, n_b, n_r) = (ch.dims.n_a, ch.dims.n_b, ch.dims.n_r);
    if n_a + n_b <= n_r {
        return Err(OptError::AlignmentInfeasible);
    }
    let mut stacked = CMatrix::zeros(n_r, n_a + n_b);
    stacked.view_mut((0, 0), (n_r, n_a)).copy_from(&ch.h_a);
    stacked
        .view_mut((0, n_a), (n_r, n_b))
        .copy_from(&(-&ch.h_b));
    let basis = null_space_basis(&stacked)?;
    let k = basis.ncols();
    if k == 0 {
        // numerically rank-deficient the wrong way; treat as infeasible
        return Err(OptError::AlignmentInfeasible);
    }

    let eval = |coeff: &CVector| -> Option<(f64, CVector, CVector)> {
        let z = &basis * coeff;
        let (z_a, z_b) = split(&z, n_a);
        aligned_gains(ch, budget, &z_a, &z_b).map(|g| (merit(g), z_a, z_b))
    };

    let mut best: Option<(f64, CVector, CVector)> = None;
    if k == 1 {
        best = eval(&CVector::from_element(1, cx(1.0, 0.0)));
    } else {
        let mut rng = StdRng::seed_from_u64(seed);
        for _ in 0..8 {
            let mut c = CVector::from_fn(k, |_, _| {
                cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let n = c.norm();
            if n == 0.0 {
                continue;
            }
            c /= re(n);
            let mut cur = match eval(&c) {
                Some(v) => v,
                None => continue,
            };
            // shrinking random perturbations around the current coefficient
            let mut radius = 0.5;
            for _ in 0..200 {
                let mut cand = &c
                    + CVector::from_fn(k, |_, _| {
                        cx(
                            radius * (rng.gen::<f64>() - 0.5),
                            radius * (rng.gen::<f64>() - 0.5),
                        )
                    });
                let n = cand.norm();
                if n == 0.0 {
                    continue;
                }
                cand /= re(n);
                if let Some(v) = eval(&cand) {
                    if v.0 > cur.0 {
                        cur = v;
                        c = cand;
                        radius = (radius * 1.5).min(0.5);
                        continue;
                    }
                }
                radius *= 0.9;
            }
            if best.as_ref().map_or(true, |b| cur.0 > b.0) {
                best = Some(cur);
            }
        }
    }

    let (_, z_a, z_b) = best.ok_or(OptError::AlignmentInfeasible)?;
    let (na, nb) = (z_a.norm(), z_b.norm());
    if na < 1e-12 || nb < 1e-12 {
        return Err(OptError::AlignmentInfeasible);
    }
    Ok(SourceBeamformers {
        q_a: z_a * re(budget.p_a.sqrt() / na),
        q_b: z_b * re(budget.p_b.sqrt() / nb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{paper_fixture, sample_channels, Dims};

    fn alignment_residual(ch: &ChannelSet, src: &SourceBeamformers) -> f64 {
        let u = &ch.h_a * &src.q_a;
        let v = &ch.h_b * &src.q_b;
        (u.clone() / re(u.norm()) - v.clone() / re(v.norm())).norm()
    }

    #[test]
    fn aligns_on_fixture_with_full_power() {
        let ch = paper_fixture(Dims::new(2, 2, 3).unwrap()).unwrap();
        let budget = PowerBudget::new(2.0, 3.0, 5.0);
        let src = signal_align(&ch, &budget, 0).unwrap();
        assert!(alignment_residual(&ch, &src) < 1e-10);
        assert!((src.q_a.norm_squared() - 2.0).abs() < 1e-10);
        assert!((src.q_b.norm_squared() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn infeasible_when_relay_has_enough_antennas() {
        let ch = sample_channels(Dims::new(2, 2, 5).unwrap(), 1, true);
        let budget = PowerBudget::new(1.0, 1.0, 1.0);
        assert!(matches!(
            signal_align(&ch, &budget, 0),
            Err(OptError::AlignmentInfeasible)
        ));
    }

    #[test]
    fn multi_dimensional_null_space_beats_single_basis_vector() {
        // N_A + N_B - N_R = 3, so the search has room to move
        let ch = sample_channels(Dims::new(4, 3, 4).unwrap(), 7, true);
        let budget = PowerBudget::new(1.0, 1.0, 1.0);
        let src = signal_align(&ch, &budget, 3).unwrap();
        assert!(alignment_residual(&ch, &src) < 1e-9);

        // the searched direction should not lose to the raw basis columns
        let mut stacked = CMatrix::zeros(4, 7);
        stacked.view_mut((0, 0), (4, 4)).copy_from(&ch.h_a);
        stacked.view_mut((0, 4), (4, 3)).copy_from(&(-&ch.h_b));
        let basis = null_space_basis(&stacked).unwrap();
        let chosen = merit(
            aligned_gains(
                &ch,
                &budget,
                &(&src.q_a / re(src.q_a.norm())),
                &(&src.q_b / re(src.q_b.norm())),
            )
            .unwrap(),
        );
        for j in 0..basis.ncols() {
            let (z_a, z_b) = split(&basis.column(j).into_owned(), 4);
            if let Some(g) = aligned_gains(&ch, &budget, &z_a, &z_b) {
                assert!(chosen >= merit(g) - 1e-9);
            }
        }
    }

    #[test]
    fn identical_channels_align_trivially() {
        let mut ch = sample_channels(Dims::new(2, 2, 3).unwrap(), 9, true);
        ch.h_b = ch.h_a.clone();
        let budget = PowerBudget::new(1.0, 4.0, 1.0);
        let src = signal_align(&ch, &budget, 0).unwrap();
        assert!(alignment_residual(&ch, &src) < 1e-10);
    }
}
