//! Dense univariate polynomials over exact rationals, with Sturm-sequence
//! root counting and root isolation on closed intervals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{rat, Rational};

/// Sign of an exact value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: &Rational) -> Sign {
        match x.cmp(&Rational::zero()) {
            Ordering::Less => Sign::Negative,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Positive,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

/// Polynomial with coefficients stored in ascending order of degree.
///
/// Trailing zero coefficients are always trimmed, so the zero polynomial has
/// an empty coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Polynomial::new(vec![c])
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Polynomial::new(vec![Rational::zero(), Rational::one()])
    }

    /// `1 - x`.
    pub fn one_minus_x() -> Self {
        Polynomial::new(vec![Rational::one(), -Rational::one()])
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| rat(c, 1)).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn sign_at(&self, x: &Rational) -> Sign {
        Sign::of(&self.eval(x))
    }

    pub fn scale(&self, k: &Rational) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rat(k as i64, 1))
                .collect(),
        )
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        (0..n).fold(Polynomial::constant(Rational::one()), |acc, _| &acc * self)
    }

    /// Euclidean division. Panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        let dlead = divisor.leading().expect("division by the zero polynomial");
        let ddeg = divisor.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= ddeg {
            return (Polynomial::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - ddeg];
        for i in (0..quot.len()).rev() {
            let q = &rem[i + ddeg] / dlead;
            if !q.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= &q * dc;
                }
            }
            quot[i] = q;
        }
        rem.truncate(ddeg);
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    pub fn monic(&self) -> Polynomial {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => Polynomial::zero(),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Square-free part: same distinct roots, each simple.
    pub fn square_free(&self) -> Polynomial {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = Polynomial::gcd(self, &self.derivative());
        if g.degree() == Some(0) {
            return self.clone();
        }
        self.div_rem(&g).0
    }

    /// Canonical Sturm sequence `p, p', -rem(p, p'), ...`.
    pub fn sturm_sequence(&self) -> Vec<Polynomial> {
        let mut seq = vec![self.clone()];
        if self.is_zero() {
            return seq;
        }
        let d = self.derivative();
        if d.is_zero() {
            return seq;
        }
        seq.push(d);
        loop {
            let n = seq.len();
            let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(-r);
        }
        seq
    }

    /// Number of distinct real roots in the closed interval `[lo, hi]`.
    pub fn count_distinct_roots(&self, lo: &Rational, hi: &Rational) -> usize {
        assert!(!self.is_zero(), "the zero polynomial vanishes everywhere");
        let p = self.square_free();
        let seq = p.sturm_sequence();
        let open = sturm_count_open(&seq, lo, hi);
        open + usize::from(p.eval(lo).is_zero()) + usize::from(lo != hi && p.eval(hi).is_zero())
    }

    /// Isolates every distinct real root in `[lo, hi]`.
    ///
    /// Returned intervals are sorted, pairwise disjoint, and each contains
    /// exactly one root. Rational roots hit by bisection are reported exactly.
    pub fn isolate_roots(&self, lo: &Rational, hi: &Rational) -> Vec<RootInterval> {
        assert!(!self.is_zero(), "the zero polynomial vanishes everywhere");
        assert!(lo <= hi);
        let p = self.square_free();
        let seq = p.sturm_sequence();
        let mut out = Vec::new();
        if p.eval(lo).is_zero() {
            out.push(RootInterval::Exact { root: lo.clone() });
        }
        if lo < hi {
            isolate_open(&p, &seq, lo.clone(), hi.clone(), &mut out);
            if p.eval(hi).is_zero() {
                out.push(RootInterval::Exact { root: hi.clone() });
            }
        }
        out
    }

    /// Full sign analysis on `[lo, hi]`: isolated roots plus the sign on each
    /// open segment between consecutive roots.
    pub fn sign_analysis(&self, lo: &Rational, hi: &Rational) -> SignAnalysis {
        if self.is_zero() {
            return SignAnalysis {
                roots: vec![],
                segments: vec![Segment {
                    sample: midpoint(lo, hi),
                    sign: Sign::Zero,
                }],
            };
        }
        let p = self.square_free();
        let mut roots = self.isolate_roots(lo, hi);
        // Make neighbouring intervals strictly separated so a non-root sample
        // point exists between each pair.
        for i in 0..roots.len().saturating_sub(1) {
            loop {
                let (left, right) = (roots[i].upper().clone(), roots[i + 1].lower().clone());
                let touching = left == right
                    && (roots[i].is_exact() || roots[i + 1].is_exact());
                if !touching {
                    break;
                }
                if roots[i + 1].is_exact() {
                    roots[i] = roots[i].refine(&p);
                } else {
                    roots[i + 1] = roots[i + 1].refine(&p);
                }
            }
        }
        let mut samples = Vec::new();
        match (roots.first(), roots.last()) {
            (None, _) | (_, None) => samples.push(midpoint(lo, hi)),
            (Some(first), Some(last)) => {
                if !(first.is_exact() && first.lower() == lo) {
                    samples.push(match first {
                        RootInterval::Exact { root: r } => midpoint(lo, r),
                        RootInterval::Isolated { lo: l, .. } => l.clone(),
                    });
                }
                for pair in roots.windows(2) {
                    samples.push(match (&pair[0], &pair[1]) {
                        (RootInterval::Isolated { hi: u, .. }, _) => u.clone(),
                        (RootInterval::Exact { .. }, RootInterval::Isolated { lo: l, .. }) => l.clone(),
                        (RootInterval::Exact { root: a }, RootInterval::Exact { root: b }) => midpoint(a, b),
                    });
                }
                if !(last.is_exact() && last.upper() == hi) {
                    samples.push(match last {
                        RootInterval::Exact { root: r } => midpoint(r, hi),
                        RootInterval::Isolated { hi: u, .. } => u.clone(),
                    });
                }
            }
        }
        let segments = samples
            .into_iter()
            .map(|sample| Segment {
                sign: self.sign_at(&sample),
                sample,
            })
            .collect();
        SignAnalysis { roots, segments }
    }
}

/// Sturm count of distinct roots in the open interval `(lo, hi)`.
fn sturm_count_open(seq: &[Polynomial], lo: &Rational, hi: &Rational) -> usize {
    if lo >= hi {
        return 0;
    }
    let half_open = variations(seq, lo).saturating_sub(variations(seq, hi));
    half_open - usize::from(seq[0].eval(hi).is_zero())
}

fn variations(seq: &[Polynomial], x: &Rational) -> usize {
    let signs: Vec<Sign> = seq
        .iter()
        .map(|p| p.sign_at(x))
        .filter(|s| *s != Sign::Zero)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn isolate_open(
    p: &Polynomial,
    seq: &[Polynomial],
    lo: Rational,
    hi: Rational,
    out: &mut Vec<RootInterval>,
) {
    let n = sturm_count_open(seq, &lo, &hi);
    if n == 0 {
        return;
    }
    let both_clear = !p.eval(&lo).is_zero() && !p.eval(&hi).is_zero();
    if n == 1 && both_clear {
        out.push(RootInterval::Isolated { lo, hi });
        return;
    }
    let mid = midpoint(&lo, &hi);
    isolate_open(p, seq, lo, mid.clone(), out);
    if p.eval(&mid).is_zero() {
        out.push(RootInterval::Exact { root: mid.clone() });
    }
    isolate_open(p, seq, mid, hi, out);
}

fn midpoint(a: &Rational, b: &Rational) -> Rational {
    (a + b) / rat(2, 1)
}

/// One isolated real root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RootInterval {
    /// The root is exactly this rational.
    Exact {
        #[serde(with = "crate::rational::serde_str")]
        root: Rational,
    },
    /// Exactly one root lies in the open interval `(lo, hi)`.
    Isolated {
        #[serde(with = "crate::rational::serde_str")]
        lo: Rational,
        #[serde(with = "crate::rational::serde_str")]
        hi: Rational,
    },
}

impl RootInterval {
    pub fn lower(&self) -> &Rational {
        match self {
            RootInterval::Exact { root: r } => r,
            RootInterval::Isolated { lo, .. } => lo,
        }
    }

    pub fn upper(&self) -> &Rational {
        match self {
            RootInterval::Exact { root: r } => r,
            RootInterval::Isolated { hi, .. } => hi,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, RootInterval::Exact { .. })
    }

    pub fn approx(&self) -> f64 {
        ((self.lower() + self.upper()) / rat(2, 1))
            .to_f64()
            .unwrap_or(f64::NAN)
    }

    /// Halves the isolating interval of a square-free `p`.
    pub fn refine(&self, p: &Polynomial) -> RootInterval {
        match self {
            RootInterval::Exact { .. } => self.clone(),
            RootInterval::Isolated { lo, hi } => {
                let mid = midpoint(lo, hi);
                let at_mid = p.sign_at(&mid);
                if at_mid == Sign::Zero {
                    return RootInterval::Exact { root: mid };
                }
                if p.sign_at(lo) != at_mid {
                    RootInterval::Isolated { lo: lo.clone(), hi: mid }
                } else {
                    RootInterval::Isolated { lo: mid, hi: hi.clone() }
                }
            }
        }
    }

    /// Refines until the interval is no wider than `width`.
    pub fn refine_to(&self, p: &Polynomial, width: &Rational) -> RootInterval {
        let mut r = self.clone();
        while (r.upper() - r.lower()) > *width {
            r = r.refine(p);
        }
        r
    }
}

impl fmt::Display for RootInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootInterval::Exact { root: r } => write!(f, "{{{r}}}"),
            RootInterval::Isolated { lo, hi } => write!(f, "({lo}, {hi})"),
        }
    }
}

/// Sign of the polynomial on one open segment between roots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "crate::rational::serde_str")]
    pub sample: Rational,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignAnalysis {
    pub roots: Vec<RootInterval>,
    pub segments: Vec<Segment>,
}

impl SignAnalysis {
    /// Compact pattern such as `0+0` (root, positive segment, root).
    pub fn pattern(&self) -> String {
        let mut items: Vec<(Rational, char)> = self
            .roots
            .iter()
            .map(|r| ((r.lower() + r.upper()) / rat(2, 1), '0'))
            .chain(self.segments.iter().map(|s| (s.sample.clone(), s.sign.symbol())))
            .collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        items.into_iter().map(|(_, c)| c).collect()
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -(self.clone())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (sep, mag) = match (first, c.is_negative()) {
                (true, true) => ("-", c.abs()),
                (true, false) => ("", c.clone()),
                (false, true) => (" - ", c.abs()),
                (false, false) => (" + ", c.clone()),
            };
            write!(f, "{sep}")?;
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "w")?;
                    } else {
                        write!(f, "w^{k}")?;
                    }
                }
            }
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        rat(n, d)
    }

    #[test]
    fn div_rem_reconstructs() {
        let a = Polynomial::from_ints(&[-1, 0, 0, 2]);
        let b = Polynomial::from_ints(&[1, 1]);
        let (q, rem) = a.div_rem(&b);
        assert_eq!(&(&q * &b) + &rem, a);
        assert!(rem.degree().unwrap_or(0) < 1);
    }

    #[test]
    fn square_free_removes_multiplicity() {
        // (x - 1/2)^2 (x - 1)
        let p = &Polynomial::new(vec![r(-1, 2), r(1, 1)]).pow(2)
            * &Polynomial::from_ints(&[-1, 1]);
        let sf = p.square_free();
        assert_eq!(sf.degree(), Some(2));
        assert_eq!(p.count_distinct_roots(&r(0, 1), &r(1, 1)), 2);
    }

    #[test]
    fn counts_roots_at_endpoints() {
        // x(1 - x) has roots exactly at both ends of [0,1]
        let p = &Polynomial::x() * &Polynomial::one_minus_x();
        assert_eq!(p.count_distinct_roots(&r(0, 1), &r(1, 1)), 2);
        let roots = p.isolate_roots(&r(0, 1), &r(1, 1));
        assert_eq!(roots, vec![RootInterval::Exact { root: r(0, 1) }, RootInterval::Exact { root: r(1, 1) }]);
    }

    #[test]
    fn sign_analysis_json_round_trip() {
        let p = &(&Polynomial::x() * &Polynomial::one_minus_x()) * &Polynomial::from_ints(&[3, -10, 6]);
        let analysis = p.sign_analysis(&r(0, 1), &r(1, 1));
        let json = serde_json::to_string(&analysis).unwrap();
        assert!(json.contains(r#""kind":"exact""#) && json.contains(r#""kind":"isolated""#));
        let back: SignAnalysis = serde_json::from_str(&json).unwrap();
        assert_eq!(back, analysis);
    }

    #[test]
    fn isolates_irrational_roots() {
        // 6x^2 - 10x + 3: roots (5 ± sqrt 7)/6 ≈ 0.3924, 1.2743
        let p = Polynomial::from_ints(&[3, -10, 6]);
        let roots = p.isolate_roots(&r(0, 1), &r(1, 1));
        assert_eq!(roots.len(), 1);
        let fine = roots[0].refine_to(&p, &r(1, 1_000_000));
        let expected = (5.0 - 7f64.sqrt()) / 6.0;
        assert!((fine.approx() - expected).abs() < 1e-6);
    }

    #[test]
    fn isolates_rational_midpoint_root() {
        // (2x - 1)^2 touches zero at 1/2
        let p = Polynomial::from_ints(&[-1, 2]).pow(2);
        let roots = p.isolate_roots(&r(0, 1), &r(1, 1));
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].refine(&p.square_free()), RootInterval::Exact { root: r(1, 2) });
        let sa = p.sign_analysis(&r(0, 1), &r(1, 1));
        assert_eq!(sa.pattern(), "+0+");
    }

    #[test]
    fn sign_analysis_of_cubic() {
        // x(x - 1/3)(x - 2/3) on [0,1]
        let p = &(&Polynomial::x() * &Polynomial::new(vec![r(-1, 3), r(1, 1)]))
            * &Polynomial::new(vec![r(-2, 3), r(1, 1)]);
        let sa = p.sign_analysis(&r(0, 1), &r(1, 1));
        assert_eq!(sa.roots.len(), 3);
        assert_eq!(sa.pattern(), "0+0-0+");
    }

    #[test]
    fn display_uses_w() {
        let p = Polynomial::new(vec![r(1, 2), r(0, 1), r(-3, 1)]);
        assert_eq!(p.to_string(), "1/2 - 3*w^2");
    }
}
