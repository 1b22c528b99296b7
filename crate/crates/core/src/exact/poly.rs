//! Univariate polynomials over the rationals and isolated real roots.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

/// Dense polynomial, coefficients from degree 0 upwards, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly(Vec<Rational>);

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 if a.is_one() => write!(f, "t")?,
                1 => write!(f, "{a}*t")?,
                _ if a.is_one() => write!(f, "t^{k}")?,
                _ => write!(f, "{a}*t^{k}")?,
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: Rational) -> Self {
        Poly::new(vec![c])
    }

    /// `a + b t`.
    pub fn linear(a: Rational, b: Rational) -> Self {
        Poly::new(vec![a, b])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.0.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.0.len() <= 1
    }

    pub fn lead(&self) -> Rational {
        self.0.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        Poly::new(self.0.iter().map(|a| a * c).collect())
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let l = self.lead().recip();
        self.scale(&l)
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.0.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn sign_at(&self, t: &Rational) -> Ordering {
        sign(&self.eval(t))
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer((k as i64).into()))
                .collect(),
        )
    }

    /// Quotient and remainder; panics on a zero divisor.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut r = self.0.clone();
        if r.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let lead_inv = d.lead().recip();
        let mut q = vec![Rational::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = &r[k + dd] * &lead_inv;
            if !c.is_zero() {
                for (e, dc) in d.0.iter().enumerate() {
                    r[k + e] -= &c * dc;
                }
            }
            q[k] = c;
        }
        r.truncate(dd);
        (Poly::new(q), Poly::new(r))
    }

    pub fn rem(&self, d: &Poly) -> Poly {
        self.div_rem(d).1
    }

    /// Exact quotient; the caller guarantees divisibility.
    pub fn exact_div(&self, d: &Poly) -> Poly {
        let (q, r) = self.div_rem(d);
        debug_assert!(r.is_zero());
        q
    }

    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.monic(), b.monic());
        while !b.is_zero() {
            let r = a.rem(&b).monic();
            a = b;
            b = r;
        }
        a
    }

    /// `(g, s)` with `g = gcd(a, m)` monic and `s a = g (mod m)`.
    pub fn gcd_ext(a: &Poly, m: &Poly) -> (Poly, Poly) {
        let (mut r0, mut r1) = (m.clone(), a.rem(m));
        let (mut s0, mut s1) = (Poly::zero(), Poly::constant(Rational::one()));
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1);
            let s = &s0 - &(&q * &s1);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        let l = r0.lead().recip();
        (r0.scale(&l), s0.scale(&l).rem(m))
    }

    /// Product of the distinct irreducible factors.
    pub fn squarefree(&self) -> Poly {
        if self.is_constant() {
            return self.monic();
        }
        let g = Poly::gcd(self, &self.derivative());
        self.exact_div(&g).monic()
    }

    pub fn sturm(&self) -> Vec<Poly> {
        let mut seq = vec![self.clone(), self.derivative()];
        while !seq.last().expect("nonempty").is_zero() {
            let k = seq.len();
            let r = seq[k - 2].rem(&seq[k - 1]);
            seq.push(-r);
        }
        seq.pop();
        seq
    }

    /// Distinct real roots in the open interval `(a, b)`.
    pub fn count_roots_open(&self, a: &Rational, b: &Rational) -> usize {
        if self.is_constant() || a >= b {
            return 0;
        }
        count_open(&self.squarefree().sturm(), a, b)
    }

    /// Distinct real roots in `(lo, hi)`, isolated and ascending.
    pub fn roots_in(&self, lo: &Rational, hi: &Rational) -> Vec<RealRoot> {
        if self.is_constant() || lo >= hi {
            return Vec::new();
        }
        let p = self.squarefree();
        let seq = p.sturm();
        let mut out = Vec::new();
        isolate(&p, &seq, lo.clone(), hi.clone(), &mut out);
        out
    }

    /// All real roots (Cauchy bound).
    pub fn real_roots(&self) -> Vec<RealRoot> {
        if self.is_constant() {
            return Vec::new();
        }
        let b = self.root_bound();
        self.roots_in(&-b.clone(), &b)
    }

    /// Strict upper bound on the magnitude of every root.
    pub fn root_bound(&self) -> Rational {
        let l = self.lead().abs();
        let m = self
            .0
            .iter()
            .take(self.0.len() - 1)
            .map(|c| c.abs() / &l)
            .fold(Rational::zero(), |a, b| if b > a { b } else { a });
        m + Rational::from_integer(2.into())
    }
}

fn sign(x: &Rational) -> Ordering {
    if x.is_zero() {
        Ordering::Equal
    } else if x.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

fn variations(seq: &[Poly], t: &Rational) -> usize {
    let mut last = Ordering::Equal;
    let mut count = 0;
    for p in seq {
        let s = p.sign_at(t);
        if s == Ordering::Equal {
            continue;
        }
        if last != Ordering::Equal && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Roots of a squarefree polynomial in `(a, b)` from its Sturm sequence.
fn count_open(seq: &[Poly], a: &Rational, b: &Rational) -> usize {
    let at_b = usize::from(seq[0].eval(b).is_zero());
    (variations(seq, a) - variations(seq, b)) - at_b
}

fn midpoint(a: &Rational, b: &Rational) -> Rational {
    (a + b) / Rational::from_integer(2.into())
}

fn isolate(p: &Poly, seq: &[Poly], a: Rational, b: Rational, out: &mut Vec<RealRoot>) {
    match count_open(seq, &a, &b) {
        0 => {}
        1 => out.push(RealRoot::from_interval(p.clone(), seq.to_vec(), a, b)),
        _ => {
            let m = midpoint(&a, &b);
            isolate(p, seq, a, m.clone(), out);
            if p.eval(&m).is_zero() {
                out.push(RealRoot::exact(m.clone()));
            }
            isolate(p, seq, m, b, out);
        }
    }
}

/// A real root of a squarefree polynomial, isolated in an interval.
///
/// Either `lo == hi` and the root is that rational, or the root is the only
/// one of `poly` in the open interval `(lo, hi)` and neither end is a root.
#[derive(Clone, Debug)]
pub struct RealRoot {
    poly: Poly,
    sturm: Vec<Poly>,
    lo: Rational,
    hi: Rational,
}

impl RealRoot {
    pub fn exact(r: Rational) -> Self {
        let poly = Poly::linear(-r.clone(), Rational::one());
        RealRoot {
            sturm: poly.sturm(),
            poly,
            lo: r.clone(),
            hi: r,
        }
    }

    fn from_interval(poly: Poly, sturm: Vec<Poly>, mut lo: Rational, mut hi: Rational) -> Self {
        while poly.eval(&lo).is_zero() || poly.eval(&hi).is_zero() {
            let m = midpoint(&lo, &hi);
            if poly.eval(&m).is_zero() {
                return RealRoot::exact(m);
            }
            if count_open(&sturm, &lo, &m) == 1 {
                hi = m;
            } else {
                lo = m;
            }
        }
        RealRoot { poly, sturm, lo, hi }
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        (self.lo == self.hi).then_some(&self.lo)
    }

    /// Halves the isolating interval (may discover the root is rational).
    pub fn refine(&mut self) {
        if self.lo == self.hi {
            return;
        }
        let m = midpoint(&self.lo, &self.hi);
        let sm = self.poly.sign_at(&m);
        if sm == Ordering::Equal {
            *self = RealRoot::exact(m);
        } else if sm == self.poly.sign_at(&self.lo) {
            self.lo = m;
        } else {
            self.hi = m;
        }
    }

    pub fn refine_to(&mut self, width: &Rational) {
        while &(&self.hi - &self.lo) > width {
            self.refine();
        }
    }

    /// Replaces the defining polynomial by a factor that still vanishes at
    /// the root.
    pub(crate) fn set_poly(&mut self, factor: Poly) {
        if self.lo == self.hi {
            return;
        }
        debug_assert!(factor.eval(&self.lo) != Rational::zero());
        self.sturm = factor.sturm();
        self.poly = factor;
    }

    /// Whether `q` vanishes at the root; `q` need not be squarefree.
    pub fn is_root_of(&self, q: &Poly) -> bool {
        if let Some(r) = self.as_rational() {
            return q.eval(r).is_zero();
        }
        let g = Poly::gcd(&self.poly, q);
        !g.is_constant() && count_open(&g.sturm(), &self.lo, &self.hi) == 1
    }

    /// Sign of `q` at the root.
    pub fn sign_of(&mut self, q: &Poly) -> Ordering {
        if let Some(r) = self.as_rational() {
            return q.sign_at(r);
        }
        if q.is_constant() {
            return sign(&q.coeff(0));
        }
        if self.is_root_of(q) {
            return Ordering::Equal;
        }
        let qs = q.squarefree().sturm();
        while count_open(&qs, &self.lo, &self.hi) > 0
            || q.eval(&self.lo).is_zero()
            || q.eval(&self.hi).is_zero()
        {
            self.refine();
            if let Some(r) = self.as_rational() {
                return q.sign_at(r);
            }
        }
        q.sign_at(&midpoint(&self.lo, &self.hi))
    }

    /// Rational within `width` of the root.
    pub fn approx(&mut self, width: &Rational) -> Rational {
        self.refine_to(width);
        midpoint(&self.lo, &self.hi)
    }

    pub fn to_f64(&self) -> f64 {
        let mut r = self.clone();
        let w = Rational::new(1.into(), num_bigint::BigInt::from(1u8) << 80usize);
        let lo = r.approx(&(w * (self.lo.abs() + Rational::one())));
        num_traits::ToPrimitive::to_f64(&lo).unwrap_or(f64::NAN)
    }

    /// Exact comparison of two real roots.
    pub fn compare(&mut self, other: &mut RealRoot) -> Ordering {
        loop {
            if self.hi < other.lo {
                return Ordering::Less;
            }
            if other.hi < self.lo {
                return Ordering::Greater;
            }
            match (self.as_rational().cloned(), other.as_rational().cloned()) {
                (Some(a), Some(b)) => return a.cmp(&b),
                (Some(a), None) => {
                    if other.is_root_of(&Poly::linear(-a.clone(), Rational::one())) {
                        return Ordering::Equal;
                    }
                    other.refine();
                }
                (None, Some(b)) => {
                    if self.is_root_of(&Poly::linear(-b.clone(), Rational::one())) {
                        return Ordering::Equal;
                    }
                    self.refine();
                }
                (None, None) => {
                    let g = Poly::gcd(&self.poly, &other.poly);
                    if !g.is_constant() {
                        let lo = if self.lo > other.lo { &self.lo } else { &other.lo };
                        let hi = if self.hi < other.hi { &self.hi } else { &other.hi };
                        if lo < hi && g.count_roots_open(lo, hi) > 0 {
                            return Ordering::Equal;
                        }
                    }
                    self.refine();
                    other.refine();
                }
            }
        }
    }

    /// A rational strictly between two ordered, distinct roots, preferring
    /// small denominators.
    pub fn rational_between(a: &mut RealRoot, b: &mut RealRoot) -> Rational {
        while a.hi >= b.lo {
            a.refine();
            b.refine();
        }
        let s = crate::scalar::simplest_between(&a.hi, &b.lo);
        let a_ok = s > a.hi || a.as_rational().is_none();
        let b_ok = s < b.lo || b.as_rational().is_none();
        if a_ok && b_ok && !a.poly.eval(&s).is_zero() && !b.poly.eval(&s).is_zero() {
            s
        } else {
            midpoint(&a.hi, &b.lo)
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly(self.0.into_iter().map(|c| -c).collect())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn p(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&x| rat_int(x)).collect())
    }

    #[test]
    fn arithmetic_and_division() {
        let a = p(&[-1, 0, 1]);
        let b = p(&[1, 1]);
        assert_eq!(&a * &b, p(&[-1, -1, 1, 1]));
        let (q, r) = a.div_rem(&b);
        assert_eq!(q, p(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(Poly::gcd(&a, &p(&[-1, 1])), p(&[-1, 1]));
        assert_eq!(p(&[0, 0, 1, 1]).squarefree(), p(&[0, 1, 1]));
        assert_eq!(a.to_string(), "t^2 - 1");
    }

    #[test]
    fn extended_gcd_inverts_modulo() {
        let m = p(&[-2, 0, 1]);
        let a = p(&[1, 1]);
        let (g, s) = Poly::gcd_ext(&a, &m);
        assert_eq!(g, p(&[1]));
        assert_eq!((&s * &a).rem(&m), p(&[1]));
    }

    #[test]
    fn isolates_roots() {
        // (t - 1)(t - 2)(t^2 - 2)
        let q = &(&p(&[-1, 1]) * &p(&[-2, 1])) * &p(&[-2, 0, 1]);
        let roots = q.real_roots();
        assert_eq!(roots.len(), 4);
        let approx: Vec<f64> = roots.iter().map(|r| r.to_f64()).collect();
        let want = [-(2f64.sqrt()), 1.0, 2f64.sqrt(), 2.0];
        for (a, b) in approx.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{approx:?}");
        }
        assert_eq!(q.count_roots_open(&rat_int(0), &rat_int(2)), 2);
        assert_eq!(q.roots_in(&rat(1, 2), &rat_int(2)).len(), 2);
    }

    #[test]
    fn compares_roots_and_signs() {
        let sqrt2 = p(&[-2, 0, 1]).roots_in(&rat_int(0), &rat_int(3)).remove(0);
        let mut other = (&p(&[-2, 0, 1]) * &p(&[-5, 1])).roots_in(&rat_int(0), &rat_int(3)).remove(0);
        let mut a = sqrt2.clone();
        assert_eq!(a.compare(&mut other), Ordering::Equal);
        let mut three_halves = RealRoot::exact(rat(3, 2));
        assert_eq!(a.compare(&mut three_halves), Ordering::Less);
        assert_eq!(a.sign_of(&p(&[-141, 100])), Ordering::Greater);
        assert_eq!(a.sign_of(&p(&[-2, 0, 1])), Ordering::Equal);
        let mut b = sqrt2;
        let mid = RealRoot::rational_between(&mut b, &mut three_halves);
        assert!(mid > rat(1414, 1000) && mid < rat(3, 2));
    }
}
