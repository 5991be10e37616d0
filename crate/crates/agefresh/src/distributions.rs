//! Nonnegative service/vacation/switchover time distributions with exact
//! Laplace–Stieltjes transforms (LSTs).
//!
//! Every downstream formula consumes distributions only through their LSTs
//! X*(s) = E[e^{−sX}], the derivatives X*⁽ⁿ⁾(s), and the first two moments,
//! so only families with closed-form transforms are admitted:
//!
//! | Family          | Parameters            | LST                  | Mean | Second moment |
//! |-----------------|-----------------------|----------------------|------|---------------|
//! | `exp(v)`        | rate v > 0            | v/(v+s)              | 1/v  | 2/v²          |
//! | `gamma(α,β)`    | shape α > 0, scale β > 0 | (1+βs)^(−α)       | αβ   | α(1+α)β²      |
//! | `det(d)`        | value d ≥ 0           | e^(−sd)              | d    | d²            |
//!
//! # Design Notes
//!
//! Derivative queries through [`LstQuery`] are capped at order 2: variance
//! formulas need second moments and nothing downstream needs more. Internally
//! derivatives up to order 4 exist ([`DistributionSpec::lst_deriv`]) because
//! the removable-singularity expansion of one waiting-time transform consumes
//! third and fourth derivatives.
//!
//! Two helper evaluations are provided in cancellation-free form,
//! [`DistributionSpec::one_minus_lst`] for 1 − X*(s) and
//! [`DistributionSpec::lst_deriv_diff`] for X*⁽ⁿ⁾(s) − X*⁽ⁿ⁾(t). Formulas
//! downstream divide by such differences; at extreme parameters (vacation
//! rates around 1e8 in the no-vacation limit) the naive subtractions lose
//! eight digits, which would be visible at the 1e−10 agreement tolerances
//! used throughout. Every route is required to obtain these quantities
//! through the helpers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

// =======================================================================
// Query type
// =======================================================================

/// A validated LST evaluation request: transform argument `s ≥ 0` and
/// derivative `order ∈ {0, 1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LstQuery {
    s: f64,
    order: usize,
}

impl LstQuery {
    /// Build a query.
    ///
    /// # Errors
    ///
    /// Rejects non-finite or negative `s` and orders above 2.
    pub fn new(s: f64, order: usize) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid("s", format!("must be finite and ≥ 0, got {s}")));
        }
        if order > 2 {
            return Err(Error::invalid("order", format!("must be 0, 1, or 2, got {order}")));
        }
        Ok(LstQuery { s, order })
    }

    /// Order-0 (plain value) query.
    pub fn value_at(s: f64) -> Result<Self> {
        LstQuery::new(s, 0)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

// =======================================================================
// Distribution specification
// =======================================================================

/// A distribution admitted by the analytic machinery.
///
/// Construct through [`DistributionSpec::exponential`],
/// [`DistributionSpec::gamma`], [`DistributionSpec::deterministic`], or by
/// parsing a literal such as `"exp(1.5)"`, `"gamma(0.5,2)"`, `"det(1)"`
/// (case-insensitive). Serialized forms use the same literals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistributionSpec {
    /// Exponential with rate > 0; mean 1/rate.
    Exponential { rate: f64 },
    /// Gamma with shape α > 0 and scale β > 0; mean αβ.
    Gamma { shape: f64, scale: f64 },
    /// Point mass at value ≥ 0.
    Deterministic { value: f64 },
}

use DistributionSpec::{Deterministic, Exponential, Gamma};

fn positive_finite(field: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(field, format!("must be finite and > 0, got {x}")));
    }
    Ok(())
}

impl DistributionSpec {
    /// Exponential with the given rate.
    ///
    /// # Errors
    ///
    /// Rejects non-finite or non-positive rates.
    pub fn exponential(rate: f64) -> Result<Self> {
        positive_finite("rate", rate)?;
        Ok(Exponential { rate })
    }

    /// Gamma with the given shape α and scale β (LST (1+βs)^(−α)).
    ///
    /// # Errors
    ///
    /// Rejects non-finite or non-positive shape/scale.
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        positive_finite("shape", shape)?;
        positive_finite("scale", scale)?;
        Ok(Gamma { shape, scale })
    }

    /// Point mass at `value`.
    ///
    /// # Errors
    ///
    /// Rejects non-finite or negative values. `det(0)` is a valid
    /// distribution (LST ≡ 1) but is rejected where models need a
    /// nondegenerate duration (services, vacations, switchovers).
    pub fn deterministic(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::invalid("value", format!("must be finite and ≥ 0, got {value}")));
        }
        Ok(Deterministic { value })
    }

    /// True for `det(0)`, the only admitted distribution with zero mass.
    pub fn is_zero(&self) -> bool {
        matches!(self, Deterministic { value } if *value == 0.0)
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> f64 {
        match *self {
            Exponential { rate } => 1.0 / rate,
            Gamma { shape, scale } => shape * scale,
            Deterministic { value } => value,
        }
    }

    /// Raw moment E[Xⁿ] for n ∈ {1, 2}.
    ///
    /// Agrees with the signed LST derivatives at 0: E[X] = −X*⁽¹⁾(0) and
    /// E[X²] = X*⁽²⁾(0).
    ///
    /// # Errors
    ///
    /// Rejects orders outside {1, 2}.
    pub fn moment(&self, n: u32) -> Result<f64> {
        match n {
            1 => Ok(self.mean()),
            2 => Ok(match *self {
                Exponential { rate } => 2.0 / (rate * rate),
                Gamma { shape, scale } => shape * (1.0 + shape) * scale * scale,
                Deterministic { value } => value * value,
            }),
            _ => Err(Error::invalid("n", format!("moments available for n ∈ {{1, 2}}, got {n}"))),
        }
    }

    // -------------------------------------------------------------------
    // Transforms
    // -------------------------------------------------------------------

    /// LST derivative of the requested order at `q.s()`: X*⁽ⁿ⁾(s), signed.
    pub fn lst(&self, q: LstQuery) -> f64 {
        self.lst_deriv(q.order(), q.s())
    }

    /// X*⁽ⁿ⁾(s) for 0 ≤ n ≤ 4 (internal orders above 2 feed series
    /// expansions). `s ≥ 0` is the caller's responsibility on this internal
    /// path; the public path validates through [`LstQuery`].
    ///
    /// # Mathematical Definition
    ///
    /// - exponential: (−1)ⁿ n! v/(v+s)^(n+1)
    /// - gamma: (−β)ⁿ α(α+1)···(α+n−1) (1+βs)^(−α−n)
    /// - deterministic: (−d)ⁿ e^(−sd)
    pub(crate) fn lst_deriv(&self, n: usize, s: f64) -> f64 {
        debug_assert!(n <= 4 && s >= 0.0);
        match *self {
            Exponential { rate } => {
                let base = rate / (rate + s);
                let mut out = base;
                // (−1)^n n! / (v+s)^n extra factors, kept multiplicative.
                for k in 1..=n {
                    out *= -(k as f64) / (rate + s);
                }
                out
            }
            Gamma { shape, scale } => {
                let mut coeff = 1.0;
                for k in 0..n {
                    coeff *= -scale * (shape + k as f64);
                }
                coeff * (-(shape + n as f64) * (scale * s).ln_1p()).exp()
            }
            Deterministic { value } => (-value).powi(n as i32) * (-s * value).exp(),
        }
    }

    /// 1 − X*(s) without cancellation.
    ///
    /// # Mathematical Definition
    ///
    /// - exponential: s/(v+s)
    /// - gamma: −expm1(−α·ln1p(βs))
    /// - deterministic: −expm1(−sd)
    pub fn one_minus_lst(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match *self {
            Exponential { rate } => s / (rate + s),
            Gamma { shape, scale } => -(-shape * (scale * s).ln_1p()).exp_m1(),
            Deterministic { value } => -(-s * value).exp_m1(),
        }
    }

    /// X*⁽ⁿ⁾(s) − X*⁽ⁿ⁾(t) in factored form, exact when s ≈ t.
    ///
    /// # Mathematical Definition
    ///
    /// Each family factors the difference so the near-cancellation happens
    /// symbolically:
    /// - exponential: (−1)ⁿ n! v (t−s)/((v+s)(v+t)) · Σᵢ (v+s)^(−i) (v+t)^(i−n)
    /// - gamma: −X*⁽ⁿ⁾(s) · expm1(−(α+n)·ln1p(β(t−s)/(1+βs)))
    /// - deterministic: −(−d)ⁿ e^(−sd) · expm1(−(t−s)d)
    pub(crate) fn lst_deriv_diff(&self, n: usize, s: f64, t: f64) -> f64 {
        debug_assert!(n <= 4 && s >= 0.0 && t >= 0.0);
        match *self {
            Exponential { rate } => {
                let (a, b) = (1.0 / (rate + s), 1.0 / (rate + t));
                // a^{n+1} − b^{n+1} = (a − b) Σ_{i=0}^{n} a^i b^{n−i}
                let mut sum = 0.0;
                for i in 0..=n {
                    sum += a.powi(i as i32) * b.powi((n - i) as i32);
                }
                let mut coeff = rate;
                for k in 1..=n {
                    coeff *= -(k as f64);
                }
                coeff * (t - s) * a * b * sum
            }
            Gamma { shape, scale } => {
                let ratio_log = (scale * (t - s) / (1.0 + scale * s)).ln_1p();
                -self.lst_deriv(n, s) * (-(shape + n as f64) * ratio_log).exp_m1()
            }
            Deterministic { value } => {
                -(-value).powi(n as i32) * (-s * value).exp() * (-(t - s) * value).exp_m1()
            }
        }
    }

    /// Order-2 jet of s ↦ X*(s) at `s`.
    pub(crate) fn jet(&self, s: f64) -> Jet {
        Jet::new(self.lst_deriv(0, s), self.lst_deriv(1, s), self.lst_deriv(2, s))
    }

    /// Order-2 jet of s ↦ 1 − X*(s) at `s`, cancellation-free value.
    pub(crate) fn jet_one_minus(&self, s: f64) -> Jet {
        Jet::new(self.one_minus_lst(s), -self.lst_deriv(1, s), -self.lst_deriv(2, s))
    }

    /// Order-2 jet of s ↦ X*(s) − X*(s + offset) at `s`, with offset ≥ 0.
    ///
    /// Both arguments shift together, so the k-th derivative is
    /// X*⁽ᵏ⁾(s) − X*⁽ᵏ⁾(s+offset), each taken in factored form.
    pub(crate) fn jet_diff(&self, s: f64, offset: f64) -> Jet {
        let t = s + offset;
        Jet::new(
            self.lst_deriv_diff(0, s, t),
            self.lst_deriv_diff(1, s, t),
            self.lst_deriv_diff(2, s, t),
        )
    }

    // -------------------------------------------------------------------
    // Sampling
    // -------------------------------------------------------------------

    /// Draw one variate.
    ///
    /// Gamma sampling is exact for all shapes, including shape < 1 (the
    /// boosted Marsaglia–Tsang method in `rand_distr`), which heavy-tailed
    /// test configurations such as `gamma(0.1, 100)` rely on.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Exponential { rate } => rand_distr::Exp::new(rate).expect("validated rate").sample(rng),
            Gamma { shape, scale } => rand_distr::Gamma::new(shape, scale)
                .expect("validated shape/scale")
                .sample(rng),
            Deterministic { value } => value,
        }
    }
}

// =======================================================================
// Literal syntax
// =======================================================================

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Exponential { rate } => write!(f, "exp({rate})"),
            Gamma { shape, scale } => write!(f, "gamma({shape},{scale})"),
            Deterministic { value } => write!(f, "det({value})"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parse `exp(rate)`, `gamma(shape,scale)`, or `det(value)`,
    /// case-insensitively, with optional whitespace around tokens.
    fn from_str(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let open = trimmed
            .find('(')
            .ok_or_else(|| Error::Parse(format!("`{text}`: expected name(args)")))?;
        if !trimmed.ends_with(')') {
            return Err(Error::Parse(format!("`{text}`: missing closing parenthesis")));
        }
        let name = trimmed[..open].trim().to_ascii_lowercase();
        let args: Vec<f64> = trimmed[open + 1..trimmed.len() - 1]
            .split(',')
            .map(|piece| {
                piece
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("`{text}`: bad number `{}`", piece.trim())))
            })
            .collect::<Result<_>>()?;
        let expect = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "`{text}`: {name} takes {n} parameter(s), got {}",
                    args.len()
                )))
            }
        };
        match name.as_str() {
            "exp" => {
                expect(1)?;
                DistributionSpec::exponential(args[0])
            }
            "gamma" => {
                expect(2)?;
                DistributionSpec::gamma(args[0], args[1])
            }
            "det" => {
                expect(1)?;
                DistributionSpec::deterministic(args[0])
            }
            _ => Err(Error::Parse(format!(
                "`{text}`: unknown distribution `{name}` (expected exp, gamma, or det)"
            ))),
        }
    }
}

impl TryFrom<String> for DistributionSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistributionSpec> for String {
    fn from(d: DistributionSpec) -> String {
        d.to_string()
    }
}

// =======================================================================
// Tests
// =======================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::exponential(1.0).unwrap(),
            DistributionSpec::exponential(0.07).unwrap(),
            DistributionSpec::exponential(35.0).unwrap(),
            DistributionSpec::gamma(2.0, 1.0).unwrap(),
            DistributionSpec::gamma(0.5, 2.0).unwrap(),
            DistributionSpec::gamma(0.1, 100.0).unwrap(),
            DistributionSpec::deterministic(1.0).unwrap(),
            DistributionSpec::deterministic(0.3).unwrap(),
        ]
    }

    #[test]
    fn frozen_lst_values() {
        let q = |s, order| LstQuery::new(s, order).unwrap();
        let exp1 = DistributionSpec::exponential(1.0).unwrap();
        assert_relative_eq!(exp1.lst(q(1.0, 0)), 0.5, max_relative = 1e-15);
        assert_relative_eq!(exp1.lst(q(0.0, 0)), 1.0, max_relative = 1e-15);
        assert_relative_eq!(exp1.lst(q(1.0, 1)), -0.25, max_relative = 1e-15);
        assert_relative_eq!(exp1.lst(q(1.0, 2)), 0.25, max_relative = 1e-15);

        let g21 = DistributionSpec::gamma(2.0, 1.0).unwrap();
        assert_relative_eq!(g21.lst(q(1.0, 0)), 0.25, max_relative = 1e-15);
        assert_relative_eq!(g21.lst(q(1.0, 1)), -0.25, max_relative = 1e-14);

        let d2 = DistributionSpec::deterministic(2.0).unwrap();
        assert_relative_eq!(d2.lst(q(1.0, 0)), (-2.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(d2.lst(q(1.0, 1)), -2.0 * (-2.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(d2.lst(q(1.0, 2)), 4.0 * (-2.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn frozen_moments() {
        assert_relative_eq!(
            DistributionSpec::exponential(0.5).unwrap().moment(2).unwrap(),
            8.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            DistributionSpec::gamma(0.1, 100.0).unwrap().moment(1).unwrap(),
            10.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            DistributionSpec::gamma(0.1, 100.0).unwrap().moment(2).unwrap(),
            0.1 * 1.1 * 1e4,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            DistributionSpec::deterministic(3.0).unwrap().moment(2).unwrap(),
            9.0,
            max_relative = 1e-15
        );
        assert!(DistributionSpec::deterministic(3.0).unwrap().moment(3).is_err());
    }

    // Moments must equal the signed LST derivatives at 0 to 1e−12 relative.
    #[test]
    fn moments_match_transform_derivatives_at_zero() {
        for d in families() {
            assert_relative_eq!(d.moment(1).unwrap(), -d.lst_deriv(1, 0.0), max_relative = 1e-12);
            assert_relative_eq!(d.moment(2).unwrap(), d.lst_deriv(2, 0.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn transform_is_one_at_zero_and_nonincreasing() {
        for d in families() {
            assert_eq!(d.lst(LstQuery::new(0.0, 0).unwrap()), 1.0);
            let mut previous = 1.0 + 1e-15;
            for k in 0..100 {
                // 100 log-spaced points over [1e−3, 1e2].
                let s = 10f64.powf(-3.0 + 5.0 * k as f64 / 99.0);
                let value = d.lst(LstQuery::new(s, 0).unwrap());
                assert!(value > 0.0 && value <= 1.0, "{d}: lst({s}) = {value}");
                assert!(value <= previous + 1e-15, "{d}: not nonincreasing at s = {s}");
                previous = value;
            }
        }
    }

    // Analytic derivatives against central differences with step
    // h = 1e−5·max(1, s), relative tolerance 1e−6. The order-2 value is
    // differenced from the analytic order-1 curve: a second difference of the
    // order-0 curve carries eps/h² ≈ 1e−6 absolute round-off, which drowns
    // small second derivatives and says nothing about the formulas.
    #[test]
    fn derivatives_match_finite_differences() {
        for d in families() {
            for &s in &[0.05f64, 0.3, 1.0, 2.7, 9.0] {
                let h = 1e-5 * s.max(1.0);
                let f = |x: f64| d.lst_deriv(0, x);
                let f1 = |x: f64| d.lst_deriv(1, x);
                let fd1 = (f(s + h) - f(s - h)) / (2.0 * h);
                let fd2 = (f1(s + h) - f1(s - h)) / (2.0 * h);
                assert_relative_eq!(d.lst_deriv(1, s), fd1, max_relative = 1e-6);
                assert_relative_eq!(d.lst_deriv(2, s), fd2, max_relative = 1e-6, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn cancellation_free_helpers_match_naive_forms() {
        for d in families() {
            for &s in &[0.0, 0.2, 1.0, 4.0] {
                assert_relative_eq!(
                    d.one_minus_lst(s),
                    1.0 - d.lst_deriv(0, s),
                    max_relative = 1e-12,
                    epsilon = 1e-14
                );
                for &t in &[0.0, 0.7, 3.0] {
                    for n in 0..=4 {
                        assert_relative_eq!(
                            d.lst_deriv_diff(n, s, t),
                            d.lst_deriv(n, s) - d.lst_deriv(n, t),
                            max_relative = 1e-9,
                            epsilon = 1e-13
                        );
                    }
                }
            }
        }
    }

    // At rate 1e8 the naive subtraction keeps ~8 digits; the helper must stay
    // exact. Reference values computed in closed form for the exponential.
    #[test]
    fn helpers_survive_extreme_rates() {
        let v = 1e8;
        let d = DistributionSpec::exponential(v).unwrap();
        let s = 1.0;
        assert_relative_eq!(d.one_minus_lst(s), s / (v + s), max_relative = 1e-15);
        // V*(s) − V*(s+1) = v·1/((v+s)(v+s+1))
        assert_relative_eq!(
            d.lst_deriv_diff(0, s, s + 1.0),
            v / ((v + s) * (v + s + 1.0)),
            max_relative = 1e-14
        );
    }

    #[test]
    fn internal_high_order_derivatives_match_finite_differences() {
        for d in families() {
            let s = 0.9;
            let h = 1e-4;
            let f2 = |x: f64| d.lst_deriv(2, x);
            let fd3 = (f2(s + h) - f2(s - h)) / (2.0 * h);
            let fd4 = (f2(s + h) - 2.0 * f2(s) + f2(s - h)) / (h * h);
            assert_relative_eq!(d.lst_deriv(3, s), fd3, max_relative = 1e-5, epsilon = 1e-9);
            assert_relative_eq!(d.lst_deriv(4, s), fd4, max_relative = 1e-3, epsilon = 1e-7);
        }
    }

    #[test]
    fn sample_means_obey_law_of_large_numbers() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        for d in [
            DistributionSpec::exponential(1.0).unwrap(),
            DistributionSpec::gamma(0.1, 100.0).unwrap(),
            DistributionSpec::deterministic(2.0).unwrap(),
        ] {
            let mean: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
            let sigma = (d.moment(2).unwrap() - d.mean() * d.mean()).sqrt();
            let slack = 3.0 * sigma / (n as f64).sqrt() + 1e-12;
            assert!(
                (mean - d.mean()).abs() <= slack,
                "{d}: sample mean {mean} vs {} ± {slack}",
                d.mean()
            );
        }
    }

    // (1/N)Σ e^{−s·X} must sit within 4 standard errors of X*(s).
    #[test]
    fn monte_carlo_transform_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000usize;
        for d in [
            DistributionSpec::exponential(1.3).unwrap(),
            DistributionSpec::gamma(0.5, 2.0).unwrap(),
            DistributionSpec::deterministic(0.8).unwrap(),
        ] {
            for &s in &[0.5, 1.0, 2.0] {
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                for _ in 0..n {
                    let e = (-s * d.sample(&mut rng)).exp();
                    sum += e;
                    sum_sq += e * e;
                }
                let mc = sum / n as f64;
                let var = (sum_sq / n as f64 - mc * mc).max(0.0);
                let se = (var / n as f64).sqrt();
                let exact = d.lst(LstQuery::new(s, 0).unwrap());
                // The absolute slack covers summation round-off; it matters
                // only for the deterministic family, whose SE is zero.
                assert!(
                    (mc - exact).abs() <= 4.0 * se + 1e-9,
                    "{d} at s={s}: MC {mc} vs exact {exact} (SE {se})"
                );
            }
        }
    }

    #[test]
    fn literal_round_trip_and_errors() {
        for text in ["exp(1.5)", "gamma(0.5,2)", "det(1)", " EXP( 2 ) ", "Gamma(3, 0.25)"] {
            let parsed: DistributionSpec = text.parse().unwrap();
            let reparsed: DistributionSpec = parsed.to_string().parse().unwrap();
            assert_eq!(parsed, reparsed);
        }
        for bad in [
            "exp()",
            "exp(1,2)",
            "gamma(1)",
            "weibull(1,2)",
            "exp(-1)",
            "gamma(0,1)",
            "det(-0.5)",
            "exp(abc)",
            "exp(1",
            "exp",
        ] {
            assert!(bad.parse::<DistributionSpec>().is_err(), "`{bad}` should fail");
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(DistributionSpec::exponential(0.0).is_err());
        assert!(DistributionSpec::exponential(f64::NAN).is_err());
        assert!(DistributionSpec::gamma(1.0, f64::INFINITY).is_err());
        assert!(DistributionSpec::deterministic(-1.0).is_err());
        assert!(DistributionSpec::deterministic(0.0).unwrap().is_zero());
        assert!(LstQuery::new(-0.1, 0).is_err());
        assert!(LstQuery::new(1.0, 3).is_err());
    }
}
