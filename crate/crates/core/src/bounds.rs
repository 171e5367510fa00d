//! Finite-size security arithmetic: binary entropy, the smoothing
//! exponent θ, the conditional-entropy lower bound, parameter derivation,
//! and the asymptotic net-gain margin with its break-even error rate.

use thiserror::Error;

/// Error rates at or above 1/4 are outside the regime the parameter
/// derivation supports.
pub const EPSILON_LIMIT: f64 = 0.25;

/// Largest τ for which 1/2 - 3τ/16 stays a probability.
pub const TAU_LIMIT: f64 = 8.0 / 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("{name} = {value} out of range ({range})")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("no sign change for the net-gain margin on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}

/// Binary entropy h(p) = -p log2 p - (1-p) log2 (1-p), with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> Result<f64, BoundsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BoundsError::Domain {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Smoothing exponent θ(r, τ) = 2^(-(1 - h(1/2 - 3τ/16)) (τ/2) r).
///
/// θ(r, 0) = θ(0, τ) = 1; strictly decreasing in both arguments otherwise.
pub fn theta(r: usize, tau: f64) -> Result<f64, BoundsError> {
    if !(0.0..=TAU_LIMIT).contains(&tau) {
        return Err(BoundsError::Domain {
            name: "tau",
            value: tau,
            range: "[0, 8/3]",
        });
    }
    let h = binary_entropy(0.5 - 3.0 * tau / 16.0)?;
    let exponent = (1.0 - h) * (tau / 2.0) * r as f64;
    Ok((-exponent).exp2())
}

/// Lower bound on the adversary's missing information about an m-bit key,
/// before and after clamping into [0, m].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBound {
    pub raw: f64,
    pub clamped: f64,
}

/// m - 2 (m + 1/ln 2) (θ + 2 √θ), clamped into [0, m].
///
/// The raw value is useful diagnostically: it goes far negative when θ is
/// not small, meaning the bound certifies nothing at that scale.
pub fn entropy_lower_bound(m: usize, theta: f64) -> Result<EntropyBound, BoundsError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(BoundsError::Domain {
            name: "theta",
            value: theta,
            range: "[0, 1]",
        });
    }
    let m_f = m as f64;
    let raw = m_f - 2.0 * (m_f + 1.0 / std::f64::consts::LN_2) * (theta + 2.0 * theta.sqrt());
    Ok(EntropyBound {
        raw,
        clamped: raw.clamp(0.0, m_f),
    })
}

/// Full parameter record for a session scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    /// Final key length.
    pub m: usize,
    /// Tolerated error rate, below 1/4.
    pub epsilon: f64,
    /// Slack parameter for the compression-weight target.
    pub tau: f64,
    /// Sifting margin parameter.
    pub tau_s: f64,
    /// Reconciled-set size.
    pub r: usize,
    /// Working sifted size s = floor(r / (1 - ε)).
    pub s: usize,
    /// Pairs to transmit, n = ceil(r / ((1 - ε)/2 - τ_S)).
    pub n: usize,
    /// Minimum combination weight d_K = ceil((2ε/(1-ε) + τ) r).
    pub d_k: usize,
    /// Pad planning floor q_min = ceil(s h(ε)).
    pub q_min: u64,
    /// Largest key length the weight target admits:
    /// floor(r (1 - h(ε/(1-ε) + τ/2))).
    pub feasible_m_max: usize,
    /// m <= feasible_m_max.
    pub pa_feasible: bool,
}

/// Derive the dependent quantities of a parameter point.
///
/// Preconditions: m >= 1, r >= 1, 0 <= ε < 1/4, τ > 0 with
/// 2ε/(1-ε) + τ < 1, and 0 < τ_S < (1-ε)/2.
pub fn derive_params(
    m: usize,
    epsilon: f64,
    tau: f64,
    tau_s: f64,
    r: usize,
) -> Result<ProtocolParams, BoundsError> {
    if m == 0 {
        return Err(BoundsError::Domain {
            name: "m",
            value: 0.0,
            range: ">= 1",
        });
    }
    if r == 0 {
        return Err(BoundsError::Domain {
            name: "r",
            value: 0.0,
            range: ">= 1",
        });
    }
    if !(0.0..EPSILON_LIMIT).contains(&epsilon) {
        return Err(BoundsError::Domain {
            name: "epsilon",
            value: epsilon,
            range: "[0, 1/4)",
        });
    }
    let weight_fraction = 2.0 * epsilon / (1.0 - epsilon) + tau;
    if tau <= 0.0 || weight_fraction >= 1.0 {
        return Err(BoundsError::Domain {
            name: "tau",
            value: tau,
            range: "0 < tau and 2eps/(1-eps) + tau < 1",
        });
    }
    let sift_rate = (1.0 - epsilon) / 2.0 - tau_s;
    if tau_s <= 0.0 || sift_rate <= 0.0 {
        return Err(BoundsError::Domain {
            name: "tau_s",
            value: tau_s,
            range: "0 < tau_s < (1-eps)/2",
        });
    }
    let r_f = r as f64;
    let s = floor_snapped(r_f / (1.0 - epsilon)) as usize;
    let n = ceil_snapped(r_f / sift_rate) as usize;
    let d_k = ceil_snapped(weight_fraction * r_f) as usize;
    let q_min = ceil_snapped(s as f64 * binary_entropy(epsilon)?) as u64;
    let feasible_m_max =
        floor_snapped(r_f * (1.0 - binary_entropy(epsilon / (1.0 - epsilon) + tau / 2.0)?))
            as usize;
    Ok(ProtocolParams {
        m,
        epsilon,
        tau,
        tau_s,
        r,
        s,
        n,
        d_k,
        q_min,
        feasible_m_max,
        pa_feasible: m <= feasible_m_max,
    })
}

/// Asymptotic per-bit margin 1 - h(ε/(1-ε)) - h(ε)/(1-ε).
///
/// Positive means amplified key outpaces pad spent on reconciliation;
/// computed by composing [`binary_entropy`] so an independent closed-form
/// evaluation can cross-check it.
pub fn net_gain_margin(epsilon: f64) -> Result<f64, BoundsError> {
    if !(0.0..EPSILON_LIMIT).contains(&epsilon) {
        return Err(BoundsError::Domain {
            name: "epsilon",
            value: epsilon,
            range: "[0, 1/4)",
        });
    }
    Ok(1.0 - binary_entropy(epsilon / (1.0 - epsilon))? - binary_entropy(epsilon)? / (1.0 - epsilon))
}

/// Break-even error rate: the root of [`net_gain_margin`] on (0, 1/4),
/// located by bisection to within `tol`.
///
/// The sign change across the bracket is verified at runtime rather than
/// assumed. The margin is strictly decreasing on the interval, so the root
/// is unique.
pub fn epsilon_star(tol: f64) -> Result<f64, BoundsError> {
    if !(tol > 0.0 && tol < 0.1) {
        return Err(BoundsError::Domain {
            name: "tol",
            value: tol,
            range: "(0, 0.1)",
        });
    }
    let mut lo = 1e-9;
    let mut hi = EPSILON_LIMIT - 1e-9;
    if !(net_gain_margin(lo)? > 0.0 && net_gain_margin(hi)? < 0.0) {
        return Err(BoundsError::NoSignChange { lo, hi });
    }
    while hi - lo > tol / 2.0 {
        let mid = 0.5 * (lo + hi);
        if net_gain_margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Everything [`theta`] and [`entropy_lower_bound`] say about one
/// (m, ε, τ, r) point, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theta: f64,
    pub entropy_raw: f64,
    pub entropy_clamped: f64,
    pub feasible_m_max: usize,
    pub net_gain_margin: f64,
}

pub fn bound_report(m: usize, epsilon: f64, tau: f64, r: usize) -> Result<BoundReport, BoundsError> {
    let th = theta(r, tau)?;
    let eb = entropy_lower_bound(m, th)?;
    let arg = epsilon / (1.0 - epsilon) + tau / 2.0;
    if arg > 1.0 {
        return Err(BoundsError::Domain {
            name: "epsilon/(1-epsilon) + tau/2",
            value: arg,
            range: "[0, 1]",
        });
    }
    let feasible_m_max = floor_snapped(r as f64 * (1.0 - binary_entropy(arg)?)) as usize;
    Ok(BoundReport {
        theta: th,
        entropy_raw: eb.raw,
        entropy_clamped: eb.clamped,
        feasible_m_max,
        net_gain_margin: net_gain_margin(epsilon)?,
    })
}

const SNAP: f64 = 1e-9;

/// Replace `v` by the nearest integer when it sits within 1e-9 (relative)
/// of one, leaving it untouched otherwise. Guards integer-valued formulas
/// against float dust at exact-rational parameter points.
pub fn snapped(v: f64) -> f64 {
    let near = v.round();
    if (v - near).abs() <= SNAP * near.abs().max(1.0) {
        near
    } else {
        v
    }
}

/// Ceiling applied after [`snapped`].
pub fn ceil_snapped(v: f64) -> f64 {
    snapped(v).ceil()
}

/// Floor applied after [`snapped`].
pub fn floor_snapped(v: f64) -> f64 {
    snapped(v).floor()
}
