//! Exact univariate polynomials and the shape-function family.
//!
//! Every shape profile is held with exact rational coefficients so that the
//! endpoint conditions and the divisibility facts behind the rational-free
//! forms `A(t)` and `B(t)` are checked as identities. Floats appear only when
//! a polynomial is evaluated or exported with [`UnivariatePolynomial::to_f64`].

use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact coefficient type.
pub type Rational = Ratio<i128>;

/// User perturbations above this degree are rejected.
pub const MAX_PERTURBATION_DEGREE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("rational coefficient exceeds 128-bit range")]
    IntegerOverflow,
    #[error("exact division left a non-zero remainder")]
    DivisibilityViolation,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("perturbation degree {0} exceeds the supported maximum {MAX_PERTURBATION_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
}

fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn add_r(a: &Rational, b: &Rational) -> Result<Rational, ShapeError> {
    a.checked_add(b).ok_or(ShapeError::IntegerOverflow)
}

fn sub_r(a: &Rational, b: &Rational) -> Result<Rational, ShapeError> {
    a.checked_sub(b).ok_or(ShapeError::IntegerOverflow)
}

fn mul_r(a: &Rational, b: &Rational) -> Result<Rational, ShapeError> {
    a.checked_mul(b).ok_or(ShapeError::IntegerOverflow)
}

fn div_r(a: &Rational, b: &Rational) -> Result<Rational, ShapeError> {
    num_traits::CheckedDiv::checked_div(a, b).ok_or(ShapeError::IntegerOverflow)
}

/// Polynomial in one variable with exact rational coefficients in ascending
/// degree. Trailing zeros are always trimmed, so the zero polynomial has no
/// coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct UnivariatePolynomial {
    coeffs: Vec<Rational>,
}

impl fmt::Debug for UnivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl UnivariatePolynomial {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn from_integers(coeffs: &[i128]) -> Self {
        Self::new(coeffs.iter().map(|&c| Rational::from_integer(c)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// `t^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = Rational::one();
        Self { coeffs }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).copied().unwrap_or_else(Rational::zero)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ShapeError> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| add_r(&self.coeff(k), &other.coeff(k)))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(coeffs))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ShapeError> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| sub_r(&self.coeff(k), &other.coeff(k)))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(coeffs))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ShapeError> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = add_r(&coeffs[i + j], &mul_r(a, b)?)?;
            }
        }
        Ok(Self::new(coeffs))
    }

    pub fn scale(&self, c: Rational) -> Result<Self, ShapeError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| mul_r(a, &c))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(coeffs))
    }

    pub fn derive(&self) -> Result<Self, ShapeError> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| mul_r(c, &Rational::from_integer(k as i128)))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(coeffs))
    }

    /// Substitutes `t -> alpha t + beta`.
    pub fn compose_affine(&self, alpha: Rational, beta: Rational) -> Result<Self, ShapeError> {
        let inner = Self::new(vec![beta, alpha]);
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.checked_mul(&inner)?.checked_add(&Self::constant(*c))?;
        }
        Ok(acc)
    }

    /// `p(1 - t)`.
    pub fn reflect(&self) -> Result<Self, ShapeError> {
        self.compose_affine(-Rational::one(), Rational::one())
    }

    pub fn eval_exact(&self, t: Rational) -> Result<Rational, ShapeError> {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = add_r(&mul_r(&acc, &t)?, c)?;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t + ratio_to_f64(c))
    }

    /// Euclidean division, returning `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self), ShapeError> {
        let dn = divisor.degree().ok_or(ShapeError::DivisionByZero)?;
        let lead = divisor.coeffs[dn];
        let mut rem = self.coeffs.clone();
        if rem.len() <= dn {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![Rational::zero(); rem.len() - dn];
        for k in (0..quot.len()).rev() {
            let q = div_r(&rem[k + dn], &lead)?;
            if q.is_zero() {
                continue;
            }
            quot[k] = q;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] = sub_r(&rem[k + j], &mul_r(&q, d)?)?;
            }
        }
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Exact quotient; fails with `DivisibilityViolation` on a remainder.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self, ShapeError> {
        let (q, r) = self.div_rem(divisor)?;
        if r.is_zero() {
            Ok(q)
        } else {
            Err(ShapeError::DivisibilityViolation)
        }
    }

    /// Coefficients converted to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(ratio_to_f64).collect()
    }

    fn check_degree_limit(&self) -> Result<(), ShapeError> {
        match self.degree() {
            Some(d) if d > MAX_PERTURBATION_DEGREE => Err(ShapeError::DegreeTooHigh(d)),
            _ => Ok(()),
        }
    }
}

pub fn ratio_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

// JSON form: `[[numerator, denominator], ...]` in ascending degree.
impl Serialize for UnivariatePolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[i128; 2]> = self.coeffs.iter().map(|c| [*c.numer(), *c.denom()]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UnivariatePolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<[i128; 2]>::deserialize(deserializer)?;
        Self::from_pairs(&pairs).map_err(serde::de::Error::custom)
    }
}

impl UnivariatePolynomial {
    pub fn from_pairs(pairs: &[[i128; 2]]) -> Result<Self, ShapeError> {
        let coeffs = pairs
            .iter()
            .map(|&[n, d]| {
                if d == 0 {
                    Err(ShapeError::InvalidCoefficient(format!("{n}/0")))
                } else {
                    Ok(rat(n, d))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::new(coeffs))
    }
}

/// `Phi*(t) = t^3 (10 - 15t + 6t^2)`.
pub fn phi_star() -> UnivariatePolynomial {
    UnivariatePolynomial::from_integers(&[0, 0, 0, 10, -15, 6])
}

/// `Psi*(t) = t^3 (t - 1)(4 - 3t) = -4t^3 + 7t^4 - 3t^5`.
pub fn psi_star() -> UnivariatePolynomial {
    UnivariatePolynomial::from_integers(&[0, 0, 0, -4, 7, -3])
}

/// `t^3 (1 - t)^3`.
fn bump() -> UnivariatePolynomial {
    UnivariatePolynomial::from_integers(&[0, 0, 0, 1, -3, 3, -1])
}

/// The shape functions of one member of the admissible family together with
/// the derived polynomials the basic functions are assembled from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeFamily {
    phi1: UnivariatePolynomial,
    psi1: UnivariatePolynomial,
    phi: UnivariatePolynomial,
    psi: UnivariatePolynomial,
    theta: UnivariatePolynomial,
    a_poly: UnivariatePolynomial,
    b_poly: UnivariatePolynomial,
}

impl ShapeFamily {
    /// The minimal degree-5 member (`Phi1 = Psi1 = 0`).
    pub fn minimal() -> Self {
        make_shape_family(UnivariatePolynomial::zero(), UnivariatePolynomial::zero())
            .expect("minimal family is admissible")
    }

    pub fn phi1(&self) -> &UnivariatePolynomial {
        &self.phi1
    }
    pub fn psi1(&self) -> &UnivariatePolynomial {
        &self.psi1
    }
    pub fn phi(&self) -> &UnivariatePolynomial {
        &self.phi
    }
    pub fn psi(&self) -> &UnivariatePolynomial {
        &self.psi
    }
    /// `Theta = Psi / (t - 1)`.
    pub fn theta(&self) -> &UnivariatePolynomial {
        &self.theta
    }
    /// `A(t) = Phi'(1 - t) / [t^2 (1 - t)^2]`.
    pub fn a_poly(&self) -> &UnivariatePolynomial {
        &self.a_poly
    }
    /// `B(t) = Theta'(1 - t) / [t (1 - t)^2]`.
    pub fn b_poly(&self) -> &UnivariatePolynomial {
        &self.b_poly
    }

    pub fn is_minimal(&self) -> bool {
        self.phi1.is_zero() && self.psi1.is_zero()
    }

    /// Largest degree among `Phi` and `Psi`; the basic functions with zero
    /// `k` and `R` options have exactly this degree.
    pub fn degree(&self) -> usize {
        self.phi
            .degree()
            .unwrap_or(0)
            .max(self.psi.degree().unwrap_or(0))
    }
}

/// Builds `Phi = Phi* + t^3(1-t)^3 Phi1`, `Psi = Psi* + t^3(1-t)^3 Psi1` and the
/// derived `Theta`, `A`, `B` by exact division.
pub fn make_shape_family(
    phi1: UnivariatePolynomial,
    psi1: UnivariatePolynomial,
) -> Result<ShapeFamily, ShapeError> {
    phi1.check_degree_limit()?;
    psi1.check_degree_limit()?;

    let bump = bump();
    let phi = phi_star().checked_add(&bump.checked_mul(&phi1)?)?;
    let psi = psi_star().checked_add(&bump.checked_mul(&psi1)?)?;

    let t_minus_1 = UnivariatePolynomial::from_integers(&[-1, 1]);
    let theta = psi.div_exact(&t_minus_1)?;

    // t^2 (1-t)^2 and t (1-t)^2
    let a_div = UnivariatePolynomial::from_integers(&[0, 0, 1, -2, 1]);
    let b_div = UnivariatePolynomial::from_integers(&[0, 1, -2, 1]);
    let a_poly = phi.derive()?.reflect()?.div_exact(&a_div)?;
    let b_poly = theta.derive()?.reflect()?.div_exact(&b_div)?;

    Ok(ShapeFamily {
        phi1,
        psi1,
        phi,
        psi,
        theta,
        a_poly,
        b_poly,
    })
}

/// Outcome of one endpoint condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionResult {
    pub name: &'static str,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShapeReport {
    pub conditions: Vec<ConditionResult>,
}

impl ShapeReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.conditions.iter().filter(|c| !c.pass).map(|c| c.name)
    }
}

/// Checks the endpoint conditions of an arbitrary pair of profiles in exact
/// arithmetic. An overflowing evaluation counts as a failure.
pub fn check_endpoint_conditions(
    phi: &UnivariatePolynomial,
    psi: &UnivariatePolynomial,
) -> ShapeReport {
    let zero = Rational::zero();
    let one = Rational::one();
    let dphi = phi.derive().ok();
    let dpsi = psi.derive().ok();
    let at = |p: Option<&UnivariatePolynomial>, t: Rational, expect: Rational| {
        p.and_then(|p| p.eval_exact(t).ok()) == Some(expect)
    };
    let conditions = vec![
        ConditionResult { name: "Phi(0)=0", pass: at(Some(phi), zero, zero) },
        ConditionResult { name: "Psi(0)=0", pass: at(Some(psi), zero, zero) },
        ConditionResult { name: "Phi'(0)=0", pass: at(dphi.as_ref(), zero, zero) },
        ConditionResult { name: "Psi'(0)=0", pass: at(dpsi.as_ref(), zero, zero) },
        ConditionResult { name: "Psi(1)=0", pass: at(Some(psi), one, zero) },
        ConditionResult { name: "Phi(1)=1", pass: at(Some(phi), one, one) },
        ConditionResult { name: "Psi'(1)=1", pass: at(dpsi.as_ref(), one, one) },
    ];
    ShapeReport { conditions }
}

pub fn verify_shape_constraints(family: &ShapeFamily) -> ShapeReport {
    check_endpoint_conditions(family.phi(), family.psi())
}

/// Closed-form expansions of the rational-free forms, written directly in
/// terms of the perturbations:
///
/// * `A(t) = 30 - 3(1-2t) Phi1(1-t) + t(1-t) Phi1'(1-t)`
/// * `Theta(t) = t^3 [(4-3t) - (1-t)^2 Psi1(t)]`
/// * `B(t) = 12 + (2-5t) Psi1(1-t) - t(1-t) Psi1'(1-t)`
pub mod expansions {
    use super::*;

    pub fn a_poly(phi1: &UnivariatePolynomial) -> Result<UnivariatePolynomial, ShapeError> {
        let p = UnivariatePolynomial::from_integers;
        let r = phi1.reflect()?;
        let dr = phi1.derive()?.reflect()?;
        p(&[30])
            .checked_sub(&p(&[3, -6]).checked_mul(&r)?)?
            .checked_add(&p(&[0, 1, -1]).checked_mul(&dr)?)
    }

    pub fn theta(psi1: &UnivariatePolynomial) -> Result<UnivariatePolynomial, ShapeError> {
        let p = UnivariatePolynomial::from_integers;
        let inner = p(&[4, -3]).checked_sub(&p(&[1, -2, 1]).checked_mul(psi1)?)?;
        p(&[0, 0, 0, 1]).checked_mul(&inner)
    }

    pub fn b_poly(psi1: &UnivariatePolynomial) -> Result<UnivariatePolynomial, ShapeError> {
        let p = UnivariatePolynomial::from_integers;
        let r = psi1.reflect()?;
        let dr = psi1.derive()?.reflect()?;
        p(&[12])
            .checked_add(&p(&[2, -5]).checked_mul(&r)?)?
            .checked_sub(&p(&[0, 1, -1]).checked_mul(&dr)?)
    }
}

/// Agreement of the division-built polynomials with [`expansions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExpansionCheck {
    pub a_matches: bool,
    pub theta_matches: bool,
    pub b_matches: bool,
}

impl ExpansionCheck {
    pub fn all(&self) -> bool {
        self.a_matches && self.theta_matches && self.b_matches
    }
}

pub fn cross_check_expansions(family: &ShapeFamily) -> Result<ExpansionCheck, ShapeError> {
    Ok(ExpansionCheck {
        a_matches: expansions::a_poly(family.phi1())? == *family.a_poly(),
        theta_matches: expansions::theta(family.psi1())? == *family.theta(),
        b_matches: expansions::b_poly(family.psi1())? == *family.b_poly(),
    })
}
