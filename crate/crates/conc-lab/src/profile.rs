//! Multi-regime exponential concentration envelopes.
//!
//! A profile bounds the tail of every 1-Lipschitz observation of a random
//! vector by a maximum of stretched exponentials,
//!
//! ```text
//! P(|f(Z) - center| >= t) <= min(1, C * max_l exp(-(t / (c * s_l))^(q_l)))
//! ```
//!
//! with strictly decreasing exponents `q_1 > q_2 > ...` and scales `s_l`.
//! A product of m concentrated factors produces the regime family
//! `q_l = q / l`, `s_l = sigma^l * mu^(m-l)` where `mu^(k)` is the product of
//! the k largest of the per-factor norm bounds `mu_1..mu_m`. The high-exponent
//! regime governs small deviations (and all low moments); the `q/m` regime
//! governs the far tail. Crossovers happen at `c * t_i` with
//! `t_i = mu^(m-i) * mu_(i)^i` (`mu_(i)` the i-th smallest entry).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One exponential regime `exp(-(t / (c * scale))^exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub exponent: f64,
    pub scale: f64,
}

impl Regime {
    pub fn new(exponent: f64, scale: f64) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "regime exponent must be positive and finite, got {exponent}"
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "regime scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Regime { exponent, scale })
    }
}

/// Envelope constants `(C, c)`. The Gaussian inequality holds with
/// `C = 2`, `c = sqrt(2)`; composed results only preserve the orders, so the
/// pair stays configurable and no sharpness is claimed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstants {
    #[serde(rename = "C")]
    pub big_c: f64,
    #[serde(rename = "c")]
    pub little_c: f64,
}

impl ProfileConstants {
    pub const GAUSSIAN: ProfileConstants = ProfileConstants {
        big_c: 2.0,
        little_c: std::f64::consts::SQRT_2,
    };

    pub fn new(big_c: f64, little_c: f64) -> Result<Self> {
        if !(big_c >= 1.0) || !big_c.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "outer constant C must satisfy C >= 1, got {big_c}"
            )));
        }
        if !(little_c > 0.0) || !little_c.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "inner constant c must be positive, got {little_c}"
            )));
        }
        Ok(ProfileConstants { big_c, little_c })
    }
}

impl Default for ProfileConstants {
    fn default() -> Self {
        ProfileConstants::GAUSSIAN
    }
}

/// A finite set of regimes sorted by strictly decreasing exponent, plus the
/// envelope constants. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProfile {
    regimes: Vec<Regime>,
    #[serde(rename = "C")]
    big_c: f64,
    #[serde(rename = "c")]
    little_c: f64,
}

impl ConcentrationProfile {
    /// Builds a profile from raw regimes. Regimes are sorted by decreasing
    /// exponent; duplicate exponents are merged keeping the larger scale.
    pub fn new(regimes: Vec<Regime>, consts: ProfileConstants) -> Result<Self> {
        if regimes.is_empty() {
            return Err(Error::InvalidProfile("no regimes".into()));
        }
        let mut sorted = regimes;
        for r in &sorted {
            Regime::new(r.exponent, r.scale)?;
        }
        sorted.sort_by(|a, b| b.exponent.partial_cmp(&a.exponent).unwrap());
        let mut merged: Vec<Regime> = Vec::with_capacity(sorted.len());
        for r in sorted {
            match merged.last_mut() {
                Some(last) if last.exponent == r.exponent => {
                    last.scale = last.scale.max(r.scale);
                }
                _ => merged.push(r),
            }
        }
        Ok(ConcentrationProfile {
            regimes: merged,
            big_c: consts.big_c,
            little_c: consts.little_c,
        })
    }

    pub fn single(exponent: f64, scale: f64, consts: ProfileConstants) -> Result<Self> {
        ConcentrationProfile::new(vec![Regime::new(exponent, scale)?], consts)
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    pub fn constants(&self) -> ProfileConstants {
        ProfileConstants {
            big_c: self.big_c,
            little_c: self.little_c,
        }
    }

    /// Leading regime: largest exponent, controls small deviations and the
    /// low centered moments (the observable diameter).
    pub fn leading(&self) -> Regime {
        self.regimes[0]
    }

    /// Trailing regime: smallest exponent, controls the far tail.
    pub fn trailing(&self) -> Regime {
        *self.regimes.last().unwrap()
    }

    /// Envelope value `min(1, C * max_l exp(-(t/(c*s_l))^(q_l)))`.
    /// Nonincreasing in t, equal to 1 at t = 0.
    pub fn tail_bound(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "tail bound evaluated at negative t");
        let worst = self
            .regimes
            .iter()
            .map(|r| -(t / (self.little_c * r.scale)).powf(r.exponent))
            .fold(f64::NEG_INFINITY, f64::max);
        (self.big_c * worst.exp()).min(1.0)
    }

    /// Index of the regime attaining the max in `tail_bound` at `t`.
    /// Ties resolve to the larger exponent.
    pub fn dominant_regime(&self, t: f64) -> usize {
        let mut best = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        for (i, r) in self.regimes.iter().enumerate() {
            let v = -(t / (self.little_c * r.scale)).powf(r.exponent);
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        best
    }

    /// Centered-moment bound `C * max_l (r/q_l)^(r/q_l) * (c*s_l)^r`, valid
    /// for every 1-Lipschitz observation and every moment order r > 0.
    pub fn moment_bound(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Range(format!("moment order must be positive, got {r}")));
        }
        let bound = self
            .regimes
            .iter()
            .map(|reg| {
                let e = r / reg.exponent;
                e.powf(e) * (self.little_c * reg.scale).powf(r)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(self.big_c * bound)
    }

    /// Profile of `lambda * Z` (equivalently of a lambda-Lipschitz image):
    /// every scale is multiplied by lambda.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Range(format!(
                "scaling factor must be positive, got {lambda}"
            )));
        }
        Ok(ConcentrationProfile {
            regimes: self
                .regimes
                .iter()
                .map(|r| Regime {
                    exponent: r.exponent,
                    scale: r.scale * lambda,
                })
                .collect(),
            big_c: self.big_c,
            little_c: self.little_c,
        })
    }

    /// Merges the regimes of `self` and `other` (union + duplicate merging),
    /// as for the concatenation of independent vectors.
    pub fn union(&self, other: &ConcentrationProfile) -> Result<Self> {
        let mut regimes = self.regimes.clone();
        regimes.extend_from_slice(&other.regimes);
        ConcentrationProfile::new(regimes, self.constants())
    }

    /// Drops regimes that never attain the max of the envelope, scanning a
    /// 1024-point log-spaced grid that covers every possible crossover. The
    /// extreme-exponent regimes always dominate near 0 and near infinity and
    /// are kept unconditionally. A middle regime survives only if it beats
    /// every other regime by a relative margin somewhere on the grid, so a
    /// regime that merely touches the max at a single crossover point (a tie
    /// in the mu values) is removed. The envelope value is unchanged up to
    /// that margin.
    pub fn prune_dominated(&self) -> Self {
        if self.regimes.len() <= 2 {
            return self.clone();
        }
        let s_min = self.regimes.iter().map(|r| r.scale).fold(f64::INFINITY, f64::min);
        let s_max = self
            .regimes
            .iter()
            .map(|r| r.scale)
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = (self.little_c * s_min * 1e-9).max(f64::MIN_POSITIVE);
        let hi = self.little_c * s_max * (s_max / s_min).max(1.0) * 1e9;
        let mut keep = vec![false; self.regimes.len()];
        keep[0] = true;
        keep[self.regimes.len() - 1] = true;
        let (lo_ln, hi_ln) = (lo.ln(), hi.ln());
        let mut exponents = vec![0.0f64; self.regimes.len()];
        for k in 0..1024 {
            let t = (lo_ln + (hi_ln - lo_ln) * k as f64 / 1023.0).exp();
            for (v, r) in exponents.iter_mut().zip(&self.regimes) {
                *v = -(t / (self.little_c * r.scale)).powf(r.exponent);
            }
            for i in 1..self.regimes.len() - 1 {
                let other = exponents
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                if exponents[i] > other + 1e-9 * (1.0 + other.abs()) {
                    keep[i] = true;
                }
            }
        }
        let regimes = self
            .regimes
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(r, _)| *r)
            .collect();
        ConcentrationProfile {
            regimes,
            big_c: self.big_c,
            little_c: self.little_c,
        }
    }
}

/// Product of the k largest entries of `nu`; the empty product (k = 0) is 1.
pub fn nu_superscript(nu: &[f64], k: usize) -> Result<f64> {
    if k > nu.len() {
        return Err(Error::Range(format!(
            "k = {k} exceeds the number of factors {}",
            nu.len()
        )));
    }
    if nu.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Range("entries must be nonnegative and finite".into()));
    }
    let mut sorted = nu.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sorted[..k].iter().product())
}

/// Parameters of a generalized product of m concentrated factors: joint
/// exponent q, joint observable diameter sigma, and per-factor bounds
/// `mu_i >= E[||Z_i||']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub q: f64,
    pub sigma: f64,
    pub mu: Vec<f64>,
}

impl ProductSpec {
    pub fn new(q: f64, sigma: f64, mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::Range("at least one factor required".into()));
        }
        if !(q > 0.0) || !(sigma > 0.0) {
            return Err(Error::Range(format!(
                "q and sigma must be positive, got q = {q}, sigma = {sigma}"
            )));
        }
        if mu.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::Range("all mu_i must be positive and finite".into()));
        }
        Ok(ProductSpec { q, sigma, mu })
    }

    pub fn factors(&self) -> usize {
        self.mu.len()
    }

    fn sorted_mu(&self) -> Vec<f64> {
        let mut s = self.mu.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s
    }

    /// Regime-dominance boundaries `(t_1, ..., t_{m+1})` with `t_1 = 0`,
    /// `t_i = mu^(m-i) * mu_(i)^i` and `t_{m+1} = inf`. Regime l attains the
    /// envelope max exactly on `t/c` in `[t_l, t_{l+1}]`; a tie
    /// `t_i = t_{i+1}` signals a vanishing regime.
    pub fn breakpoints(&self) -> Vec<f64> {
        let m = self.factors();
        let sorted = self.sorted_mu();
        let mut out = Vec::with_capacity(m + 1);
        out.push(0.0);
        for i in 2..=m {
            // product of the (m - i) largest = product over sorted[i..]
            let tail: f64 = sorted[i..].iter().product();
            out.push(tail * sorted[i - 1].powi(i as i32));
        }
        out.push(f64::INFINITY);
        out
    }

    /// Envelope of the m-fold product: regimes `(q/l, sigma^l * mu^(m-l))`
    /// for l = 1..m, with regimes whose dominance interval is empty removed.
    /// With all mu equal this collapses to the two regimes `q` and `q/m`.
    pub fn product_profile(&self, consts: ProfileConstants) -> ConcentrationProfile {
        let m = self.factors();
        let all_distinct = {
            let s = self.sorted_mu();
            s.windows(2).all(|w| w[0] != w[1])
        };
        let regimes = (1..=m)
            .map(|l| {
                let scale = self.sigma.powi(l as i32) * nu_superscript(&self.mu, m - l).unwrap();
                Regime::new(self.q / l as f64, scale).unwrap()
            })
            .collect();
        let profile = ConcentrationProfile::new(regimes, consts).unwrap();
        if all_distinct {
            // distinct mu => strictly increasing breakpoints => every regime
            // owns a nonempty dominance interval
            profile
        } else {
            profile.prune_dominated()
        }
    }

    /// Same envelope with every scale multiplied by `kappa^m`, the price of
    /// letting the number of factors grow. Requires `log(m)^(1/q)` to stay
    /// below `mu_(1)/sigma`; a violation is reported, not fatal, because the
    /// bound often remains informative.
    pub fn high_order_profile(
        &self,
        kappa: f64,
        consts: ProfileConstants,
    ) -> Result<(ConcentrationProfile, Option<HypothesisWarning>)> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Range(format!("kappa must be positive, got {kappa}")));
        }
        let m = self.factors();
        let factor = kappa.powi(m as i32);
        let profile = self.product_profile(consts).scaled(factor)?;
        let lhs = (m as f64).ln().max(0.0).powf(1.0 / self.q);
        let rhs = self.sorted_mu()[0] / self.sigma;
        let warning = (lhs > rhs).then(|| HypothesisWarning {
            message: format!(
                "log(m)^(1/q) = {lhs:.6} exceeds mu_(1)/sigma = {rhs:.6}; \
                 the high-order envelope is not certified"
            ),
            lhs,
            rhs,
        });
        Ok((profile, warning))
    }
}

/// Structured warning attached to an envelope whose hypothesis check failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisWarning {
    pub message: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Two-regime envelope of the m-th power of a single concentrated vector:
/// `E_q(m * sigma * ((1+eps) * mu0)^(m-1)) + E_{q/m}((kappa * sigma)^m)`.
pub fn power_profile(
    m: usize,
    q: f64,
    sigma: f64,
    mu0: f64,
    epsilon: f64,
    kappa: f64,
    consts: ProfileConstants,
) -> Result<ConcentrationProfile> {
    if m == 0 {
        return Err(Error::Range("power requires m >= 1".into()));
    }
    if !(q > 0.0 && sigma > 0.0 && mu0 > 0.0 && epsilon > 0.0 && kappa > 0.0) {
        return Err(Error::Range(
            "q, sigma, mu0, epsilon, kappa must all be positive".into(),
        ));
    }
    let lead = m as f64 * sigma * ((1.0 + epsilon) * mu0).powi(m as i32 - 1);
    let tail = (kappa * sigma).powi(m as i32);
    ConcentrationProfile::new(
        vec![Regime::new(q, lead)?, Regime::new(q / m as f64, tail)?],
        consts,
    )
}

/// Two-regime bilinear (Hanson-Wright) envelope for `x^T A y` with
/// sub-gaussian inputs of parameter K: `E_2(K^2 ||A||_F) + E_1(K^2 ||A||)`.
pub fn hanson_wright_profile(
    frobenius: f64,
    spectral: f64,
    k: f64,
    consts: ProfileConstants,
) -> Result<ConcentrationProfile> {
    if frobenius < 0.0 || spectral < 0.0 {
        return Err(Error::Range(
            "matrix norms must be nonnegative".into(),
        ));
    }
    if !(k > 0.0) {
        return Err(Error::Range(format!("K must be positive, got {k}")));
    }
    ConcentrationProfile::new(
        vec![
            Regime::new(2.0, k * k * frobenius)?,
            Regime::new(1.0, k * k * spectral)?,
        ],
        consts,
    )
}

/// Normed spaces whose norm is a supremum over a family of linear forms of
/// known effective cardinality (the norm degree).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// sup norm on R^p; degree log(p)
    SupVec,
    /// Euclidean norm on R^p; degree p
    EuclideanVec,
    /// operator norm on p x n matrices; degree n + p
    SpectralMat,
    /// Frobenius norm on p x n matrices; degree n * p
    FrobeniusMat,
    /// nuclear norm on p x n matrices; degree n * p
    NuclearMat,
    /// Euclidean norm of the diagonal of an n x n matrix; degree n
    DiagSeminorm,
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" | "linf" | "sup_vec" => Ok(NormKind::SupVec),
            "euclidean" | "l2" => Ok(NormKind::EuclideanVec),
            "spectral" | "operator" => Ok(NormKind::SpectralMat),
            "frobenius" => Ok(NormKind::FrobeniusMat),
            "nuclear" => Ok(NormKind::NuclearMat),
            "diag" | "diag_seminorm" => Ok(NormKind::DiagSeminorm),
            other => Err(Error::Domain(format!("unknown norm kind '{other}'"))),
        }
    }
}

/// Norm degree eta of the space: the effective number of linear forms whose
/// supremum realizes the norm. Controls `E||Z - Z~|| <= O(eta^(1/q) sigma)`.
pub fn norm_degree(kind: NormKind, p: usize, n: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::Range("dimension p must be >= 1".into()));
    }
    let needs_n = matches!(
        kind,
        NormKind::SpectralMat | NormKind::FrobeniusMat | NormKind::NuclearMat | NormKind::DiagSeminorm
    );
    if needs_n && n == 0 {
        return Err(Error::Range("dimension n must be >= 1".into()));
    }
    Ok(match kind {
        NormKind::SupVec => (p as f64).ln(),
        NormKind::EuclideanVec => p as f64,
        NormKind::SpectralMat => (n + p) as f64,
        NormKind::FrobeniusMat | NormKind::NuclearMat => (n * p) as f64,
        NormKind::DiagSeminorm => n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_superscript_basics() {
        assert_eq!(nu_superscript(&[2.0, 3.0, 5.0], 2).unwrap(), 15.0);
        assert_eq!(nu_superscript(&[2.0, 3.0, 5.0], 0).unwrap(), 1.0);
        assert!(nu_superscript(&[1.0], 2).is_err());
    }

    #[test]
    fn tail_bound_clamps_at_zero() {
        let p = ConcentrationProfile::single(2.0, 1.0, ProfileConstants::GAUSSIAN).unwrap();
        assert_eq!(p.tail_bound(0.0), 1.0);
    }

    #[test]
    fn merging_keeps_larger_scale() {
        let p = ConcentrationProfile::new(
            vec![
                Regime::new(2.0, 1.0).unwrap(),
                Regime::new(2.0, 3.0).unwrap(),
                Regime::new(1.0, 0.5).unwrap(),
            ],
            ProfileConstants::default(),
        )
        .unwrap();
        assert_eq!(p.regimes().len(), 2);
        assert_eq!(p.leading().scale, 3.0);
    }
}
