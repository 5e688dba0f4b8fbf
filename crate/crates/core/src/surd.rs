//! Numbers of the form `a + b·√d` with rational `a`, `b`, `d`.
//!
//! Critical points of a cubic act are roots of a quadratic, so the worst
//! case of an act over an interval lives in `Q(√d)` for a single `d`. Values
//! sharing a radicand compare exactly.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::poly::{Polynomial, Sign};
use crate::rational::{format_rational, rat, to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticSurd {
    a: Rational,
    b: Rational,
    d: Rational,
}

impl QuadraticSurd {
    pub fn rational(a: Rational) -> Self {
        QuadraticSurd {
            a,
            b: Rational::zero(),
            d: Rational::zero(),
        }
    }

    /// `a + b·√d`; collapses to a rational when `√d` is rational.
    pub fn new(a: Rational, b: Rational, d: Rational) -> Self {
        assert!(!d.is_negative(), "negative radicand");
        if b.is_zero() || d.is_zero() {
            return QuadraticSurd::rational(a);
        }
        match rational_sqrt(&d) {
            Some(root) => QuadraticSurd::rational(a + b * root),
            None => QuadraticSurd { a, b, d },
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.b.is_zero().then_some(&self.a)
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn radicand(&self) -> Option<&Rational> {
        (!self.b.is_zero()).then_some(&self.d)
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + to_f64(&self.b) * to_f64(&self.d).sqrt()
    }

    pub fn sign(&self) -> Sign {
        let sa = Sign::of(&self.a);
        let sb = Sign::of(&self.b);
        if sb == Sign::Zero {
            return sa;
        }
        if sa == Sign::Zero || sa == sb {
            return sb;
        }
        // opposite signs: compare a^2 with b^2 d
        match (&self.a * &self.a).cmp(&(&self.b * &self.b * &self.d)) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Sign::Zero,
        }
    }

    fn common_radicand(&self, other: &QuadraticSurd) -> Option<Rational> {
        match (self.radicand(), other.radicand()) {
            (Some(x), Some(y)) if x != y => None,
            (Some(x), _) | (_, Some(x)) => Some(x.clone()),
            (None, None) => Some(Rational::zero()),
        }
    }

    pub fn try_add(&self, other: &QuadraticSurd) -> Option<QuadraticSurd> {
        let d = self.common_radicand(other)?;
        Some(QuadraticSurd::new(&self.a + &other.a, &self.b + &other.b, d))
    }

    pub fn try_sub(&self, other: &QuadraticSurd) -> Option<QuadraticSurd> {
        let d = self.common_radicand(other)?;
        Some(QuadraticSurd::new(&self.a - &other.a, &self.b - &other.b, d))
    }

    pub fn try_mul(&self, other: &QuadraticSurd) -> Option<QuadraticSurd> {
        let d = self.common_radicand(other)?;
        Some(QuadraticSurd::new(
            &self.a * &other.a + &self.b * &other.b * &d,
            &self.a * &other.b + &self.b * &other.a,
            d,
        ))
    }

    /// Exact comparison when both share a radicand (or either is rational
    /// against a surd); `None` otherwise.
    pub fn exact_cmp(&self, other: &QuadraticSurd) -> Option<Ordering> {
        Some(match self.try_sub(other)?.sign() {
            Sign::Negative => Ordering::Less,
            Sign::Zero => Ordering::Equal,
            Sign::Positive => Ordering::Greater,
        })
    }

    /// Evaluates `p` at this number, staying inside `Q(√d)`.
    pub fn eval(p: &Polynomial, x: &QuadraticSurd) -> QuadraticSurd {
        p.coeffs()
            .iter()
            .rev()
            .fold(QuadraticSurd::rational(Rational::zero()), |acc, c| {
                acc.try_mul(x)
                    .and_then(|m| m.try_add(&QuadraticSurd::rational(c.clone())))
                    .expect("single radicand")
            })
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let op = if self.b.is_negative() { '-' } else { '+' };
        write!(f, "{} {} {}*sqrt({})", self.a, op, self.b.abs(), self.d)
    }
}

impl Serialize for QuadraticSurd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.as_rational() {
            Some(r) => s.serialize_str(&format_rational(r)),
            None => s.serialize_str(&self.to_string()),
        }
    }
}

fn rational_sqrt(q: &Rational) -> Option<Rational> {
    let n = q.numer();
    let d = q.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Rational::new(sn, sd))
}

/// Real roots of a polynomial of degree one or two, ascending.
pub fn low_degree_real_roots(p: &Polynomial) -> Vec<QuadraticSurd> {
    match p.degree() {
        Some(1) => vec![QuadraticSurd::rational(-p.coeff(0) / p.coeff(1))],
        Some(2) => {
            let (c, b, a) = (p.coeff(0), p.coeff(1), p.coeff(2));
            let disc = &b * &b - rat(4, 1) * &a * &c;
            if disc.is_negative() {
                return vec![];
            }
            let two_a = rat(2, 1) * &a;
            let centre = -&b / &two_a;
            if disc.is_zero() {
                return vec![QuadraticSurd::rational(centre)];
            }
            let half_width = Rational::one() / &two_a;
            let mut roots = vec![
                QuadraticSurd::new(centre.clone(), -half_width.clone(), disc.clone()),
                QuadraticSurd::new(centre, half_width, disc),
            ];
            roots.sort_by(|x, y| x.exact_cmp(y).expect("shared radicand"));
            roots
        }
        _ => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_of_mixed_terms() {
        // 5/6 - sqrt(7)/6 > 0
        let x = QuadraticSurd::new(rat(5, 6), rat(-1, 6), rat(7, 1));
        assert_eq!(x.sign(), Sign::Positive);
        // 2 - sqrt(4) collapses to zero
        assert_eq!(QuadraticSurd::new(rat(2, 1), rat(-1, 1), rat(4, 1)).sign(), Sign::Zero);
        // 2 - sqrt(5) < 0
        assert_eq!(QuadraticSurd::new(rat(2, 1), rat(-1, 1), rat(5, 1)).sign(), Sign::Negative);
    }

    #[test]
    fn quadratic_roots() {
        let p = Polynomial::from_ints(&[3, -10, 6]);
        let roots = low_degree_real_roots(&p);
        assert_eq!(roots.len(), 2);
        assert!((roots[0].to_f64() - (5.0 - 7f64.sqrt()) / 6.0).abs() < 1e-15);
        assert_eq!(QuadraticSurd::eval(&p, &roots[0]).sign(), Sign::Zero);
        assert_eq!(QuadraticSurd::eval(&p, &roots[1]).sign(), Sign::Zero);
        // rational roots come back rational: (2x - 1)(x - 1)
        let q = Polynomial::from_ints(&[1, -3, 2]);
        let rr = low_degree_real_roots(&q);
        assert_eq!(rr[0].as_rational(), Some(&rat(1, 2)));
        assert_eq!(rr[1].as_rational(), Some(&rat(1, 1)));
    }
}
