//! Exact secrecy-rate and relay-power accounting for the three
//! transmission schemes with fixed beamformers: two-phase relaying,
//! three-phase relaying and two-way direct transmission.

use crate::channels::{ChannelSet, PowerBudget};
use crate::matkit::{identity, max_gen_eig, quad_form, re, symmetrize, CMatrix, CVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// The pair of source transmit vectors.
#[derive(Debug, Clone)]
pub struct SourceBeamformers {
    pub q_a: CVector,
    pub q_b: CVector,
}

impl SourceBeamformers {
    pub fn zero(n_a: usize, n_b: usize) -> Self {
        SourceBeamformers {
            q_a: CVector::zeros(n_a),
            q_b: CVector::zeros(n_b),
        }
    }

    pub fn within_budget(&self, budget: &PowerBudget, rel_tol: f64) -> bool {
        self.q_a.norm_squared() <= budget.p_a * (1.0 + rel_tol) + 1e-12
            && self.q_b.norm_squared() <= budget.p_b * (1.0 + rel_tol) + 1e-12
    }
}

/// Relay precoder for the two-phase scheme.
#[derive(Debug, Clone)]
pub struct RelayCombiner2P {
    pub f: CMatrix,
}

/// Relay precoders for the three-phase scheme (one per uplink slot).
#[derive(Debug, Clone)]
pub struct RelayCombiner3P {
    pub f_a: CMatrix,
    pub f_b: CMatrix,
}

/// Per-link rates, leak at the relay, secrecy sum rate and relay power.
/// Rates are bits per channel use.
#[derive(Debug, Clone, Copy)]
pub struct RateReport {
    pub r_ab: f64,
    pub r_ba: f64,
    pub r_leak: f64,
    pub r_secrecy: f64,
    pub relay_power_used: f64,
}

fn log2p(x: f64) -> f64 {
    x.log2()
}

fn check_dims(ch: &ChannelSet, src: &SourceBeamformers) -> Result<(), SchemeError> {
    if src.q_a.len() != ch.dims.n_a || src.q_b.len() != ch.dims.n_b {
        return Err(SchemeError::DimensionMismatch(format!(
            "beamformers ({}, {}) vs dims ({}, {})",
            src.q_a.len(),
            src.q_b.len(),
            ch.dims.n_a,
            ch.dims.n_b
        )));
    }
    Ok(())
}

/// Relayed-link SNR term: q^H Heq^H F^H G^H K^{-1} G F Heq q with
/// K = G F F^H G^H + I, where `h_eff` = H_i q_i is the equivalent uplink.
fn relayed_snr(g: &CMatrix, f: &CMatrix, h_eff: &CVector, extra_noise: Option<&CMatrix>) -> f64 {
    let gf = g * f;
    let mut k = &gf * gf.adjoint() + identity(g.nrows());
    if let Some(n) = extra_noise {
        k += n;
    }
    let k_inv = symmetrize(&k).try_inverse().expect("K is I + PSD");
    let v = &gf * h_eff;
    (v.adjoint() * k_inv * v)[(0, 0)].re
}

/// Two-phase scheme rates for fixed beamformers.
pub fn rate_2p(
    ch: &ChannelSet,
    src: &SourceBeamformers,
    relay: &RelayCombiner2P,
) -> Result<RateReport, SchemeError> {
    check_dims(ch, src)?;
    let nr = ch.dims.n_r;
    if relay.f.nrows() != nr || relay.f.ncols() != nr {
        return Err(SchemeError::DimensionMismatch(format!(
            "F is {}x{}, expected {nr}x{nr}",
            relay.f.nrows(),
            relay.f.ncols()
        )));
    }
    let ha_qa = &ch.h_a * &src.q_a;
    let hb_qb = &ch.h_b * &src.q_b;

    let r_ab = 0.5 * log2p(1.0 + relayed_snr(&ch.g_b, &relay.f, &ha_qa, None));
    let r_ba = 0.5 * log2p(1.0 + relayed_snr(&ch.g_a, &relay.f, &hb_qb, None));

    // leak at the relay: scalar expansion of the two-user MAC sum rate
    let a2 = ha_qa.norm_squared();
    let b2 = hb_qb.norm_squared();
    let cross = (hb_qb.adjoint() * &ha_qa)[(0, 0)].norm_sqr();
    let r_leak = 0.5 * log2p(1.0 + a2 + b2 + a2 * b2 - cross);

    let f_ha = &relay.f * &ha_qa;
    let f_hb = &relay.f * &hb_qb;
    let relay_power_used =
        f_ha.norm_squared() + f_hb.norm_squared() + relay.f.norm_squared();

    Ok(RateReport {
        r_ab,
        r_ba,
        r_leak,
        r_secrecy: (r_ab + r_ba - r_leak).max(0.0),
        relay_power_used,
    })
}

/// Three-phase scheme rates for fixed beamformers.
pub fn rate_3p(
    ch: &ChannelSet,
    src: &SourceBeamformers,
    relay: &RelayCombiner3P,
) -> Result<RateReport, SchemeError> {
    check_dims(ch, src)?;
    let nr = ch.dims.n_r;
    for (m, name) in [(&relay.f_a, "F_A"), (&relay.f_b, "F_B")] {
        if m.nrows() != nr || m.ncols() != nr {
            return Err(SchemeError::DimensionMismatch(format!(
                "{name} is {}x{}, expected {nr}x{nr}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    let ha_qa = &ch.h_a * &src.q_a;
    let hb_qb = &ch.h_b * &src.q_b;

    // relay noise forwarded in the broadcast slot: F_A F_A^H + F_B F_B^H
    let ff = &relay.f_a * relay.f_a.adjoint() + &relay.f_b * relay.f_b.adjoint();

    // B -> A: direct slot plus relayed slot with combined relay noise
    let direct_ba = quad_form(&symmetrize(&(ch.t_b.adjoint() * &ch.t_b)), &src.q_b);
    let ga_ff = &ch.g_a * &ff * ch.g_a.adjoint();
    let relayed_ba = {
        let k = symmetrize(&(&ga_ff + identity(ch.dims.n_a)));
        let v = &ch.g_a * &relay.f_b * &hb_qb;
        (v.adjoint() * k.try_inverse().expect("K PD") * v)[(0, 0)].re
    };
    let r_ba = (1.0 / 3.0) * log2p(1.0 + direct_ba + relayed_ba);

    let direct_ab = quad_form(&symmetrize(&(ch.t_a.adjoint() * &ch.t_a)), &src.q_a);
    let gb_ff = &ch.g_b * &ff * ch.g_b.adjoint();
    let relayed_ab = {
        let k = symmetrize(&(&gb_ff + identity(ch.dims.n_b)));
        let v = &ch.g_b * &relay.f_a * &ha_qa;
        (v.adjoint() * k.try_inverse().expect("K PD") * v)[(0, 0)].re
    };
    let r_ab = (1.0 / 3.0) * log2p(1.0 + direct_ab + relayed_ab);

    let r_leak =
        (1.0 / 3.0) * log2p((1.0 + ha_qa.norm_squared()) * (1.0 + hb_qb.norm_squared()));

    let relay_power_used = (&relay.f_a * &ha_qa).norm_squared()
        + (&relay.f_b * &hb_qb).norm_squared()
        + relay.f_a.norm_squared()
        + relay.f_b.norm_squared();

    Ok(RateReport {
        r_ab,
        r_ba,
        r_leak,
        r_secrecy: (r_ab + r_ba - r_leak).max(0.0),
        relay_power_used,
    })
}

/// Two-way direct transmission rates (relay treated as a pure eavesdropper).
/// The per-direction terms are clipped at zero individually.
pub fn rate_dt(ch: &ChannelSet, src: &SourceBeamformers) -> Result<RateReport, SchemeError> {
    check_dims(ch, src)?;
    let term = |t: &CMatrix, h: &CMatrix, q: &CVector| -> (f64, f64) {
        let tq = (t * q).norm_squared();
        let hq = (h * q).norm_squared();
        let secret = (0.5 * log2p((1.0 + tq) / (1.0 + hq))).max(0.0);
        let leak = 0.5 * log2p(1.0 + hq);
        (secret, leak)
    };
    let (r_ab, leak_a) = term(&ch.t_a, &ch.h_a, &src.q_a);
    let (r_ba, leak_b) = term(&ch.t_b, &ch.h_b, &src.q_b);
    Ok(RateReport {
        r_ab,
        r_ba,
        r_leak: leak_a + leak_b,
        r_secrecy: r_ab + r_ba,
        relay_power_used: 0.0,
    })
}

/// Optimal direct-transmission beamformers and the corresponding
/// closed-form secrecy sum rate.
pub fn dt_optimal(
    ch: &ChannelSet,
    budget: &PowerBudget,
) -> Result<(SourceBeamformers, RateReport), SchemeError> {
    let solve = |t: &CMatrix, h: &CMatrix, p: f64, n: usize| -> CVector {
        if p <= 0.0 {
            return CVector::zeros(n);
        }
        let num = identity(n) + symmetrize(&(t.adjoint() * t)) * re(p);
        let den = identity(n) + symmetrize(&(h.adjoint() * h)) * re(p);
        let pair = max_gen_eig(&num, &den).expect("denominator is I + PSD");
        pair.vector * re(p.sqrt())
    };
    let src = SourceBeamformers {
        q_a: solve(&ch.t_a, &ch.h_a, budget.p_a, ch.dims.n_a),
        q_b: solve(&ch.t_b, &ch.h_b, budget.p_b, ch.dims.n_b),
    };
    let report = rate_dt(ch, &src)?;
    Ok((src, report))
}

/// Closed-form maximum direct-transmission secrecy sum rate.
pub fn dt_max_rate(ch: &ChannelSet, budget: &PowerBudget) -> f64 {
    let term = |t: &CMatrix, h: &CMatrix, p: f64, n: usize| -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let num = identity(n) + symmetrize(&(t.adjoint() * t)) * re(p);
        let den = identity(n) + symmetrize(&(h.adjoint() * h)) * re(p);
        let lam = max_gen_eig(&num, &den).expect("denominator is I + PSD").value;
        (0.5 * lam.log2()).max(0.0)
    };
    term(&ch.t_a, &ch.h_a, budget.p_a, ch.dims.n_a)
        + term(&ch.t_b, &ch.h_b, budget.p_b, ch.dims.n_b)
}
