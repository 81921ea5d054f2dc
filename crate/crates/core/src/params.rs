//! Closed-form parameter choices: the class penalty diagonal and the
//! initial-temperature interval for the annealed graph search.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::LabelVector;

/// Default penalty strength.
pub const DEFAULT_PENALTY_STRENGTH: f64 = 0.7;

/// Coefficients of the class penalty diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub strength: f64,
    /// Fraction of `+1` among labeled nodes.
    pub positive_fraction: f64,
    pub c_plus: f64,
    pub c_u: f64,
    pub c_minus: f64,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl PenaltyParams {
    /// `c+ = 1 + s * sign(1 - 2f) * max(f, 1 - f)`,
    /// `c- = 1 + s * sign(2f - 1) * max(f, 1 - f)`, `c_u = 1`.
    pub fn from_fraction(positive_fraction: f64, strength: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&positive_fraction) {
            return Err(Error::Validation(format!(
                "positive fraction {positive_fraction} outside [0, 1]"
            )));
        }
        if !(0.0..1.0).contains(&strength) {
            return Err(Error::Validation(format!(
                "penalty strength {strength} outside [0, 1)"
            )));
        }
        let f = positive_fraction;
        let spread = f.max(1.0 - f);
        Ok(PenaltyParams {
            strength,
            positive_fraction: f,
            c_plus: 1.0 + strength * sign(1.0 - 2.0 * f) * spread,
            c_u: 1.0,
            c_minus: 1.0 + strength * sign(2.0 * f - 1.0) * spread,
        })
    }

    pub fn from_labels(labels: &LabelVector, strength: f64) -> Result<Self> {
        let pos = labels.count(1);
        let labeled = pos + labels.count(-1);
        if labeled == 0 {
            return Err(Error::Validation(
                "class penalty needs at least one labeled node".into(),
            ));
        }
        Self::from_fraction(pos as f64 / labeled as f64, strength)
    }

    pub fn diagonal(&self, labels: &LabelVector) -> Vec<f64> {
        labels
            .values()
            .iter()
            .map(|&y| match y {
                1 => self.c_plus,
                -1 => self.c_minus,
                _ => self.c_u,
            })
            .collect()
    }
}

/// Diagonal of the class penalty matrix for `labels`.
pub fn class_penalty_matrix(labels: &LabelVector, strength: f64) -> Result<Vec<f64>> {
    Ok(PenaltyParams::from_labels(labels, strength)?.diagonal(labels))
}

/// How the penalty diagonal is derived from whatever labels are in play.
/// Cross-validation folds re-derive it from their training labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyScheme {
    Identity,
    ClassBalanced { strength: f64 },
}

impl Default for PenaltyScheme {
    fn default() -> Self {
        PenaltyScheme::ClassBalanced {
            strength: DEFAULT_PENALTY_STRENGTH,
        }
    }
}

impl PenaltyScheme {
    pub fn diagonal(&self, labels: &LabelVector) -> Result<Vec<f64>> {
        match *self {
            PenaltyScheme::Identity => Ok(vec![1.0; labels.len()]),
            PenaltyScheme::ClassBalanced { strength } => class_penalty_matrix(labels, strength),
        }
    }
}

/// Interval for the initial annealing temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureRange {
    pub d_thresh: f64,
    pub p_thresh: f64,
    pub m_l: usize,
    pub m_u: usize,
    pub lo: f64,
    pub hi: f64,
}

/// With `b = d_thresh / ln(p_thresh)`, the endpoints are `b^{1/m_l}` and
/// `b^{1/m_u}`, ordered numerically. A temperature `t` in the interval makes
/// the acceptance probability of a set trailing by `d_thresh` fall to about
/// `p_thresh` once `m_l..=m_u` graphs have been removed.
pub fn temperature_range(
    d_thresh: f64,
    p_thresh: f64,
    m_l: usize,
    m_u: usize,
) -> Result<TemperatureRange> {
    if !(d_thresh < 0.0) || !(p_thresh > 0.0 && p_thresh < 1.0) || m_l < 1 || m_l > m_u {
        return Err(Error::Validation(format!(
            "temperature range needs d_thresh < 0, 0 < p_thresh < 1, 1 <= m_l <= m_u \
             (got {d_thresh}, {p_thresh}, {m_l}, {m_u})"
        )));
    }
    let base = d_thresh / p_thresh.ln();
    if !(base > 0.0 && base < 1.0) {
        return Err(Error::Validation(format!(
            "d_thresh / ln(p_thresh) = {base} must lie in (0, 1)"
        )));
    }
    let a = base.powf(1.0 / m_l as f64);
    let b = base.powf(1.0 / m_u as f64);
    Ok(TemperatureRange {
        d_thresh,
        p_thresh,
        m_l,
        m_u,
        lo: a.min(b),
        hi: a.max(b),
    })
}

impl TemperatureRange {
    /// Uniform draw from `[lo, hi]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}
