//! Alternating optimization of source beamformers and relay precoders
//! for the two-phase and three-phase schemes. Each substep is accepted
//! only when it does not lower the secrecy sum rate, so every recorded
//! trace is monotone non-decreasing. Several starts (matched,
//! signal-aligned where feasible, and random) guard against poor local
//! optima; the best run wins.

use super::barrier::{optimize_a_barrier, optimize_a_barrier_3p};
use super::fractional::{optimize_qb_fractional, FractionalProblem};
use super::structure::{coefficients_2p, structure_2p, structure_3p};
use super::{signal_align, OptError, OptimizerConfig};
use crate::channels::{ChannelSet, PowerBudget};
use crate::matkit::{
    cx, identity, max_eig_hermitian, re, symmetrize, CMatrix, CVector,
};
use crate::schemes::{
    rate_2p, rate_3p, RateReport, RelayCombiner2P, RelayCombiner3P, SourceBeamformers,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Result of the two-phase alternating design.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome2P {
    pub src: SourceBeamformers,
    pub relay: RelayCombiner2P,
    pub report: RateReport,
    /// secrecy sum rate after each outer iteration of the winning start
    pub trace: Vec<f64>,
    pub outer_iterations: usize,
}

/// Result of the three-phase alternating design.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome3P {
    pub src: SourceBeamformers,
    pub relay: RelayCombiner3P,
    pub report: RateReport,
    pub trace: Vec<f64>,
    pub outer_iterations: usize,
}

fn matched_filter(h: &CMatrix, p: f64) -> Result<CVector, OptError> {
    let top = max_eig_hermitian(&symmetrize(&(h.adjoint() * h)))?;
    Ok(&top.vector * re(p.sqrt()))
}

fn random_beamformer(rng: &mut impl Rng, n: usize, p: f64) -> CVector {
    let q = CVector::from_fn(n, |_, _| cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let norm = q.norm();
    if norm == 0.0 {
        CVector::from_element(n, re(p.sqrt() / (n as f64).sqrt()))
    } else {
        q * re(p.sqrt() / norm)
    }
}


/// Unclipped secrecy margin; improving it never decreases [x]^+ secrecy,
/// and lets the alternation make progress through the clipped-to-zero
/// region at low power.
fn margin(rep: &RateReport) -> f64 {
    rep.r_ab + rep.r_ba - rep.r_leak
}

/// A candidate source pair is usable only if both uplinks stay active;
/// a vanishing H_i q_i would break the structured relay bases.
fn usable(src: &SourceBeamformers, ch: &ChannelSet) -> bool {
    (&ch.h_a * &src.q_a).norm_squared() > 1e-18 && (&ch.h_b * &src.q_b).norm_squared() > 1e-18
}
fn starting_points(
    ch: &ChannelSet,
    budget: &PowerBudget,
    cfg: &OptimizerConfig,
) -> Result<Vec<SourceBeamformers>, OptError> {
    let mut starts = vec![SourceBeamformers {
        q_a: matched_filter(&ch.h_a, budget.p_a)?,
        q_b: matched_filter(&ch.h_b, budget.p_b)?,
    }];
    if let Ok(aligned) = signal_align(ch, budget, cfg.seed) {
        starts.push(aligned);
    }
    // cross-channel eigenvectors: optimal in the low-source-power limit
    let cross_a = symmetrize(&(ch.h_a.adjoint() * &ch.h_b * ch.h_b.adjoint() * &ch.h_a));
    let cross_b = symmetrize(&(ch.h_b.adjoint() * &ch.h_a * ch.h_a.adjoint() * &ch.h_b));
    starts.push(SourceBeamformers {
        q_a: &max_eig_hermitian(&cross_a)?.vector * re(budget.p_a.sqrt()),
        q_b: &max_eig_hermitian(&cross_b)?.vector * re(budget.p_b.sqrt()),
    });
    let mut rng = StdRng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9));
    while starts.len() < cfg.restarts.max(1) {
        starts.push(SourceBeamformers {
            q_a: random_beamformer(&mut rng, ch.dims.n_a, budget.p_a),
            q_b: random_beamformer(&mut rng, ch.dims.n_b, budget.p_b),
        });
    }
    starts.truncate(cfg.restarts.max(1));
    Ok(starts)
}

/// Fractional subproblem for the two-phase q_B step (and, with the roles
/// of the terminals swapped, the q_A step): fixed relay matrix f, fixed
/// opposite beamformer q_opp.
fn fractional_2p(
    h_own: &CMatrix,
    h_opp: &CMatrix,
    g_opp_rx: &CMatrix,
    f: &CMatrix,
    q_opp: &CVector,
    p_own: f64,
    p_r: f64,
) -> FractionalProblem {
    let h_eff = h_opp * q_opp;
    let a2 = h_eff.norm_squared();
    let gf = g_opp_rx * f;
    let k = symmetrize(&(&gf * gf.adjoint() + identity(g_opp_rx.nrows())));
    let k_inv = k.try_inverse().expect("K PD");
    let m1 = symmetrize(&(h_own.adjoint() * gf.adjoint() * k_inv * &gf * h_own));
    let shaped = identity(h_opp.nrows()) * re(1.0 + a2) - &h_eff * h_eff.adjoint();
    let m2 = symmetrize(&(h_own.adjoint() * shaped * h_own));
    let fh = f * h_own;
    FractionalProblem {
        m1,
        m2,
        c: 1.0 + a2,
        p_b: p_own,
        w: symmetrize(&(fh.adjoint() * &fh)),
        s: (p_r - f.norm_squared() - (f * &h_eff).norm_squared()).max(0.0),
    }
}

/// Runs the two-phase alternating design: a log-barrier relay step
/// followed by one fractional step per source, repeated until the
/// secrecy sum rate stalls.
pub fn algorithm1(
    ch: &ChannelSet,
    budget: &PowerBudget,
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome2P, OptError> {
    let mut rng = StdRng::seed_from_u64(cfg.seed.wrapping_add(0x5135_7b1a));
    let mut best: Option<OptimizeOutcome2P> = None;
    for src0 in starting_points(ch, budget, cfg)? {
        let outcome = run_2p(ch, budget, cfg, src0, &mut rng)?;
        if best
            .as_ref()
            .map_or(true, |b| outcome.report.r_secrecy > b.report.r_secrecy)
        {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one start"))
}

fn run_2p(
    ch: &ChannelSet,
    budget: &PowerBudget,
    cfg: &OptimizerConfig,
    src0: SourceBeamformers,
    rng: &mut impl Rng,
) -> Result<OptimizeOutcome2P, OptError> {
    let mut src = src0;
    let mut relay = RelayCombiner2P {
        f: CMatrix::zeros(ch.dims.n_r, ch.dims.n_r),
    };
    let mut report = rate_2p(ch, &src, &relay)?;
    let mut trace = Vec::new();
    let mut outer = 0;
    for _ in 0..cfg.max_outer_iters {
        outer += 1;
        let before = margin(&report);

        // relay step, warm-started from the previous precoder
        let basis = structure_2p(ch, &src)?;
        let mut a0 = coefficients_2p(&basis, &relay.f);
        if a0.norm() < 1e-12 {
            a0 = CMatrix::from_fn(a0.nrows(), a0.ncols(), |_, _| {
                cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
        }
        let (a, rep) = optimize_a_barrier(ch, &src, budget.p_r, cfg, &a0)?;
        if margin(&rep) > margin(&report) {
            relay = super::assemble_f_2p(&basis, &a)?;
            report = rep;
        }

        // q_B step, then q_A with the roles swapped
        if relay.f.norm() > 1e-12 {
            let prob_b = fractional_2p(
                &ch.h_b, &ch.h_a, &ch.g_a, &relay.f, &src.q_a, budget.p_b, budget.p_r,
            );
            let (q_b, _) = optimize_qb_fractional(&prob_b)?;
            let cand = SourceBeamformers {
                q_a: src.q_a.clone(),
                q_b,
            };
            let rep = rate_2p(ch, &cand, &relay)?;
            if margin(&rep) > margin(&report) && usable(&cand, ch) {
                src = cand;
                report = rep;
            }

            let prob_a = fractional_2p(
                &ch.h_a, &ch.h_b, &ch.g_b, &relay.f, &src.q_b, budget.p_a, budget.p_r,
            );
            let (q_a, _) = optimize_qb_fractional(&prob_a)?;
            let cand = SourceBeamformers {
                q_a,
                q_b: src.q_b.clone(),
            };
            let rep = rate_2p(ch, &cand, &relay)?;
            if margin(&rep) > margin(&report) && usable(&cand, ch) {
                src = cand;
                report = rep;
            }
        }

        trace.push(report.r_secrecy);
        if margin(&report) - before < cfg.rate_tol {
            break;
        }
    }
    Ok(OptimizeOutcome2P {
        src,
        relay,
        report,
        trace,
        outer_iterations: outer,
    })
}

/// Fractional subproblem for the three-phase q_B step (or q_A swapped):
/// both the direct slot and the relayed slot contribute to the numerator.
#[allow(clippy::too_many_arguments)]
fn fractional_3p(
    h_own: &CMatrix,
    t_own: &CMatrix,
    g_opp_rx: &CMatrix,
    f_own: &CMatrix,
    f_opp: &CMatrix,
    h_opp_eff: &CVector,
    p_own: f64,
    p_r: f64,
) -> FractionalProblem {
    let noise = symmetrize(
        &(g_opp_rx * (f_own * f_own.adjoint() + f_opp * f_opp.adjoint()) * g_opp_rx.adjoint()
            + identity(g_opp_rx.nrows())),
    );
    let k_inv = noise.try_inverse().expect("K PD");
    let gf = g_opp_rx * f_own;
    let relayed = h_own.adjoint() * gf.adjoint() * k_inv * &gf * h_own;
    let m1 = symmetrize(&(t_own.adjoint() * t_own + relayed));
    let m2 = symmetrize(&(h_own.adjoint() * h_own));
    let fh_own = f_own * h_own;
    FractionalProblem {
        m1,
        m2,
        c: 1.0,
        p_b: p_own,
        w: symmetrize(&(fh_own.adjoint() * &fh_own)),
        s: (p_r
            - f_own.norm_squared()
            - f_opp.norm_squared()
            - (f_opp * h_opp_eff).norm_squared())
        .max(0.0),
    }
}

/// Runs the three-phase alternating design (barrier relay step plus one
/// fractional step per source).
pub fn algorithm2(
    ch: &ChannelSet,
    budget: &PowerBudget,
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome3P, OptError> {
    let mut rng = StdRng::seed_from_u64(cfg.seed.wrapping_add(0x2545_f491));
    let mut best: Option<OptimizeOutcome3P> = None;
    for src0 in starting_points(ch, budget, cfg)? {
        let outcome = run_3p(ch, budget, cfg, src0, &mut rng)?;
        if best
            .as_ref()
            .map_or(true, |b| outcome.report.r_secrecy > b.report.r_secrecy)
        {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one start"))
}

fn run_3p(
    ch: &ChannelSet,
    budget: &PowerBudget,
    cfg: &OptimizerConfig,
    src0: SourceBeamformers,
    rng: &mut impl Rng,
) -> Result<OptimizeOutcome3P, OptError> {
    let nr = ch.dims.n_r;
    let mut src = src0;
    let mut relay = RelayCombiner3P {
        f_a: CMatrix::zeros(nr, nr),
        f_b: CMatrix::zeros(nr, nr),
    };
    let mut report = rate_3p(ch, &src, &relay)?;
    let mut trace = Vec::new();
    let mut outer = 0;
    for _ in 0..cfg.max_outer_iters {
        outer += 1;
        let before = margin(&report);

        let basis = structure_3p(ch, &src)?;
        let mut a1 = basis.v.adjoint() * &relay.f_a * &basis.u_a;
        let mut a2 = basis.v.adjoint() * &relay.f_b * &basis.u_b;
        if a1.norm() + a2.norm() < 1e-12 {
            let m = basis.v.ncols();
            a1 = CVector::from_fn(m, |_, _| cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            a2 = CVector::from_fn(m, |_, _| cx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        }
        let (b1, b2, rep) = optimize_a_barrier_3p(ch, &src, budget.p_r, cfg, &a1, &a2)?;
        if margin(&rep) > margin(&report) {
            relay = super::assemble_f_3p(&basis, &b1, &b2)?;
            report = rep;
        }

        if relay.f_a.norm() + relay.f_b.norm() > 1e-12 {
            let prob_b = fractional_3p(
                &ch.h_b,
                &ch.t_b,
                &ch.g_a,
                &relay.f_b,
                &relay.f_a,
                &(&ch.h_a * &src.q_a),
                budget.p_b,
                budget.p_r,
            );
            let (q_b, _) = optimize_qb_fractional(&prob_b)?;
            let cand = SourceBeamformers {
                q_a: src.q_a.clone(),
                q_b,
            };
            let rep = rate_3p(ch, &cand, &relay)?;
            if margin(&rep) > margin(&report) && usable(&cand, ch) {
                src = cand;
                report = rep;
            }

            let prob_a = fractional_3p(
                &ch.h_a,
                &ch.t_a,
                &ch.g_b,
                &relay.f_a,
                &relay.f_b,
                &(&ch.h_b * &src.q_b),
                budget.p_a,
                budget.p_r,
            );
            let (q_a, _) = optimize_qb_fractional(&prob_a)?;
            let cand = SourceBeamformers {
                q_a,
                q_b: src.q_b.clone(),
            };
            let rep = rate_3p(ch, &cand, &relay)?;
            if margin(&rep) > margin(&report) && usable(&cand, ch) {
                src = cand;
                report = rep;
            }
        }

        trace.push(report.r_secrecy);
        if margin(&report) - before < cfg.rate_tol {
            break;
        }
    }
    Ok(OptimizeOutcome3P {
        src,
        relay,
        report,
        trace,
        outer_iterations: outer,
    })
}
