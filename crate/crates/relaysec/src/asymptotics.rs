//! Closed-form limits of the maximum secrecy sum rate for the three
//! schemes in the extreme power regimes, plus a coarse regime-based
//! recommendation of which scheme to prefer.

use crate::channels::{ChannelSet, Dims, PowerBudget};
use crate::matkit::{
    max_eig_hermitian, max_gen_eig, max_singular, null_space_projector, qr_orthonormal, re,
    symmetrize, CMatrix, MatError,
};
use crate::optimize::signal_align;
use crate::schemes::SourceBeamformers;
use thiserror::Error;

const LN2_TWICE: f64 = 2.0 * std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum AsymError {
    #[error("regime combination not covered by the comparison table: {0}")]
    UncoveredRegime(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Opt(#[from] crate::optimize::OptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Dt,
    TwoPhase,
    ThreePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerRegime {
    High,
    Low,
    Finite,
}

/// Which powers are driven to their limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeSpec {
    pub relay_power: PowerRegime,
    pub source_power: PowerRegime,
}

/// A closed-form limit value, possibly only known as an interval, and
/// possibly growing without bound in the underlying power (in which case
/// the number reported is the formula evaluated at the supplied finite
/// powers).
#[derive(Debug, Clone)]
pub struct AsymptoteResult {
    pub scheme: Scheme,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub diverges: bool,
    pub notes: String,
}

impl AsymptoteResult {
    fn point(scheme: Scheme, value: f64, diverges: bool, notes: impl Into<String>) -> Self {
        AsymptoteResult {
            scheme,
            value,
            lower: value,
            upper: value,
            diverges,
            notes: notes.into(),
        }
    }
}

fn clip(x: f64) -> f64 {
    x.max(0.0)
}

/// lambda_max(T^H T, H^H H); requires H to have full column rank.
fn gen_ratio(t: &CMatrix, h: &CMatrix) -> Result<f64, MatError> {
    let num = symmetrize(&(t.adjoint() * t));
    let den = symmetrize(&(h.adjoint() * h));
    Ok(max_gen_eig(&num, &den)?.value)
}

/// lambda_max of T^H T restricted to the null space of H.
fn null_restricted_gain(t: &CMatrix, h: &CMatrix) -> Result<f64, MatError> {
    let p = null_space_projector(h)?;
    let m = symmetrize(&(&p * t.adjoint() * t * &p));
    Ok(max_eig_hermitian(&m)?.value.max(0.0))
}

/// Two-phase limit at unbounded relay power. With more source antennas
/// than relay antennas the aligned rate grows with the source powers;
/// otherwise the principal angle between the two uplink column spaces
/// caps the rate.
pub fn asym_2p_high(ch: &ChannelSet, p_a: f64, p_b: f64) -> Result<AsymptoteResult, AsymError> {
    let d = ch.dims;
    if d.n_a + d.n_b > d.n_r {
        let budget = PowerBudget::new(p_a, p_b, 1.0);
        let src = signal_align(ch, &budget, 0)?;
        let a2 = (&ch.h_a * &src.q_a).norm_squared();
        let b2 = (&ch.h_b * &src.q_b).norm_squared();
        let value = if a2 + b2 > 0.0 {
            clip(0.5 * (a2 * b2 / (a2 + b2)).log2())
        } else {
            0.0
        };
        Ok(AsymptoteResult::point(
            Scheme::TwoPhase,
            value,
            true,
            "aligned branch; grows with the source powers",
        ))
    } else {
        let (u_a, _) = qr_orthonormal(&ch.h_a)?;
        let (u_b, _) = qr_orthonormal(&ch.h_b)?;
        let sigma = max_singular(&(u_a.adjoint() * u_b))?.min(1.0 - 1e-15);
        let value = 0.5 * (1.0 / (1.0 - sigma * sigma)).log2();
        Ok(AsymptoteResult::point(
            Scheme::TwoPhase,
            value,
            false,
            "principal-angle branch; bounded in the source powers",
        ))
    }
}

/// Three-phase limit at unbounded relay power: a per-node interval.
pub fn asym_3p_high(ch: &ChannelSet, p_a: f64, p_b: f64) -> Result<AsymptoteResult, AsymError> {
    let d = ch.dims;
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut diverges = false;
    for (t, h, n_i, p_i) in [
        (&ch.t_a, &ch.h_a, d.n_a, p_a),
        (&ch.t_b, &ch.h_b, d.n_b, p_b),
    ] {
        if n_i <= d.n_r {
            let lam = gen_ratio(t, h)?;
            lower += clip((0.5 + lam).log2()) / 3.0;
            upper += clip((1.0 + lam).log2()) / 3.0;
        } else {
            let gain = null_restricted_gain(t, h)?;
            let theta = ((1.5 * p_i).log2() + gain.log2()) / 3.0;
            lower += theta;
            upper += theta;
            diverges = true;
        }
    }
    Ok(AsymptoteResult {
        scheme: Scheme::ThreePhase,
        value: 0.5 * (lower + upper),
        lower,
        upper,
        diverges,
        notes: "per-node interval; value is the midpoint".into(),
    })
}

/// Direct-transmission limit at unbounded source powers.
pub fn asym_dt_high(ch: &ChannelSet, p_a: f64, p_b: f64) -> Result<AsymptoteResult, AsymError> {
    let d = ch.dims;
    let mut value = 0.0;
    let mut diverges = false;
    for (t, h, n_i, p_i) in [
        (&ch.t_a, &ch.h_a, d.n_a, p_a),
        (&ch.t_b, &ch.h_b, d.n_b, p_b),
    ] {
        if n_i <= d.n_r {
            value += 0.5 * clip(gen_ratio(t, h)?.log2());
        } else {
            let gain = null_restricted_gain(t, h)?;
            value += 0.5 * (p_i.log2() + gain.log2());
            diverges = true;
        }
    }
    Ok(AsymptoteResult::point(
        Scheme::Dt,
        value,
        diverges,
        "sum of per-direction limits",
    ))
}

/// Two-phase low-source-power limit and the beamformers achieving it.
pub fn asym_2p_low(
    ch: &ChannelSet,
    p_a: f64,
    p_b: f64,
) -> Result<(SourceBeamformers, AsymptoteResult), AsymError> {
    let cross_a = symmetrize(&(ch.h_a.adjoint() * &ch.h_b * ch.h_b.adjoint() * &ch.h_a));
    let cross_b = symmetrize(&(ch.h_b.adjoint() * &ch.h_a * ch.h_a.adjoint() * &ch.h_b));
    let pair_a = max_eig_hermitian(&cross_a)?;
    let pair_b = max_eig_hermitian(&cross_b)?;
    let value = p_a * p_b / LN2_TWICE * pair_a.value.max(0.0);
    let src = SourceBeamformers {
        q_a: &pair_a.vector * re(p_a.sqrt()),
        q_b: &pair_b.vector * re(p_b.sqrt()),
    };
    Ok((
        src,
        AsymptoteResult::point(
            Scheme::TwoPhase,
            value,
            false,
            "quadratic in the source powers",
        ),
    ))
}

/// Three-phase low-source-power bracket.
pub fn asym_3p_low(ch: &ChannelSet, p_a: f64, p_b: f64) -> Result<AsymptoteResult, AsymError> {
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (t, h, p_i) in [(&ch.t_a, &ch.h_a, p_a), (&ch.t_b, &ch.h_b, p_b)] {
        let tt = symmetrize(&(t.adjoint() * t));
        let hh = symmetrize(&(h.adjoint() * h));
        let lam_gap = max_eig_hermitian(&(&tt - hh * re(0.5)))?.value;
        let lam_top = max_eig_hermitian(&tt)?.value;
        lower += clip(p_i * lam_gap) / LN2_TWICE;
        upper += p_i * lam_top.max(0.0) / LN2_TWICE;
    }
    Ok(AsymptoteResult {
        scheme: Scheme::ThreePhase,
        value: 0.5 * (lower + upper),
        lower,
        upper,
        diverges: false,
        notes: "bracket linear in the source powers".into(),
    })
}

/// Direct-transmission low-source-power limit.
pub fn asym_dt_low(ch: &ChannelSet, p_a: f64, p_b: f64) -> Result<AsymptoteResult, AsymError> {
    let mut value = 0.0;
    for (t, h, p_i) in [(&ch.t_a, &ch.h_a, p_a), (&ch.t_b, &ch.h_b, p_b)] {
        let gap = symmetrize(&(t.adjoint() * t - h.adjoint() * h));
        value += clip(p_i * max_eig_hermitian(&gap)?.value) / LN2_TWICE;
    }
    Ok(AsymptoteResult::point(
        Scheme::Dt,
        value,
        false,
        "linear in the source powers",
    ))
}

/// Scheme ordering recommended for a power regime and antenna geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    /// two-phase keeps growing while the others saturate
    TwoPhaseBest,
    /// 3P > DT > 2P
    ThreePhaseThenDtThenTwoPhase,
    /// DT > 3P (two-phase saturates, ranking of the rest is fixed)
    DtThenThreePhase,
    /// DT > 3P > 2P
    DtThenThreePhaseThenTwoPhase,
    /// no universal ordering; run the optimizers
    ChannelDependent,
}

impl std::fmt::Display for Recommendation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Recommendation::TwoPhaseBest => "2p-best",
            Recommendation::ThreePhaseThenDtThenTwoPhase => "3p>dt>2p",
            Recommendation::DtThenThreePhase => "dt>3p",
            Recommendation::DtThenThreePhaseThenTwoPhase => "dt>3p>2p",
            Recommendation::ChannelDependent => "channel-dependent",
        };
        f.write_str(s)
    }
}

/// Table-style comparison of the three schemes by regime.
pub fn recommend_scheme(dims: Dims, regime: RegimeSpec) -> Result<Recommendation, AsymError> {
    use PowerRegime::*;
    match (regime.relay_power, regime.source_power) {
        (Low, _) => Ok(Recommendation::DtThenThreePhaseThenTwoPhase),
        (High, Low) => Ok(Recommendation::ThreePhaseThenDtThenTwoPhase),
        (High, High) => {
            if dims.n_a <= dims.n_r && dims.n_b <= dims.n_r && dims.n_a + dims.n_b > dims.n_r {
                Ok(Recommendation::TwoPhaseBest)
            } else if dims.n_a > dims.n_r && dims.n_b > dims.n_r {
                Ok(Recommendation::DtThenThreePhase)
            } else {
                Ok(Recommendation::ChannelDependent)
            }
        }
        (High, Finite) | (Finite, _) => Err(AsymError::UncoveredRegime(format!(
            "relay={:?}, source={:?}",
            regime.relay_power, regime.source_power
        ))),
    }
}
