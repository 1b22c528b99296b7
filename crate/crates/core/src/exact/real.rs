//! Exact real numbers of the form `q(theta)` for one real algebraic
//! `theta`, with rationals as the common case.
//!
//! Elements are polynomials in the generator reduced modulo a squarefree
//! defining polynomial. Whenever a computation reveals a factorization of
//! the modulus, the modulus shrinks to the factor that still vanishes at
//! `theta`, so zero tests and inverses stay exact without factoring.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::scalar::{Rational, Scalar};

use super::poly::{Poly, RealRoot};

/// Shared state of `Q(theta)`.
#[derive(Debug)]
pub struct NumberField {
    root: Mutex<RealRoot>,
}

impl NumberField {
    pub fn new(root: RealRoot) -> Arc<Self> {
        Arc::new(NumberField {
            root: Mutex::new(root),
        })
    }

    /// The generator `theta` as an element.
    pub fn generator(self: &Arc<Self>) -> Real {
        let root = self.root.lock().expect("field lock");
        if let Some(r) = root.as_rational() {
            return Real::Rat(r.clone());
        }
        drop(root);
        Real::Alg(Arc::clone(self), Poly::linear(Rational::zero(), Rational::one()))
    }

    /// Snapshot of the isolated root.
    pub fn root(&self) -> RealRoot {
        self.root.lock().expect("field lock").clone()
    }

    /// Reduces `e` modulo the current modulus, turning it rational when
    /// possible.
    fn normalize(self: &Arc<Self>, e: Poly) -> Real {
        let root = self.root.lock().expect("field lock");
        if let Some(r) = root.as_rational() {
            return Real::Rat(e.eval(r));
        }
        let e = e.rem(root.poly());
        drop(root);
        if e.is_constant() {
            Real::Rat(e.coeff(0))
        } else {
            Real::Alg(Arc::clone(self), e)
        }
    }

    /// Sign of `e(theta)`; shrinks the modulus to a factor coprime to `e`
    /// or dividing it.
    fn sign(&self, e: &Poly) -> Ordering {
        let mut root = self.root.lock().expect("field lock");
        if let Some(r) = root.as_rational() {
            return e.sign_at(r);
        }
        let m = root.poly().clone();
        let e = e.rem(&m);
        if e.is_constant() {
            return e.coeff(0).cmp(&Rational::zero());
        }
        let g = Poly::gcd(&e, &m);
        if !g.is_constant() {
            if root.is_root_of(&g) {
                root.set_poly(g);
                return Ordering::Equal;
            }
            root.set_poly(m.exact_div(&g));
        }
        root.sign_of(&e)
    }

    /// Inverse of a nonzero `e(theta)`.
    fn inverse(&self, e: &Poly) -> Poly {
        assert!(self.sign(e) != Ordering::Equal, "division by zero");
        let root = self.root.lock().expect("field lock");
        let m = root.poly().clone();
        let (g, s) = Poly::gcd_ext(e, &m);
        debug_assert!(g.is_constant());
        s
    }

    fn to_f64(&self, e: &Poly) -> f64 {
        let mut root = self.root();
        if let Some(r) = root.as_rational() {
            return e.eval(r).to_f64().unwrap_or(f64::NAN);
        }
        let w = Rational::new(BigInt::one(), BigInt::one() << 120usize);
        let t = root.approx(&w);
        e.eval(&t).to_f64().unwrap_or(f64::NAN)
    }
}

/// A rational, or an element of one shared real number field.
#[derive(Clone)]
pub enum Real {
    Rat(Rational),
    Alg(Arc<NumberField>, Poly),
}

impl Real {
    pub fn from_rational(r: Rational) -> Self {
        Real::Rat(r)
    }

    /// The real root as a number.
    pub fn from_root(root: RealRoot) -> Self {
        match root.as_rational() {
            Some(r) => Real::Rat(r.clone()),
            None => NumberField::new(root).generator(),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Real::Rat(r) => Some(r),
            Real::Alg(..) => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Real::Rat(_))
    }

    /// `(field, polynomial)` representation of this number.
    fn parts<'a>(&'a self, other: &'a Real) -> Option<(Arc<NumberField>, Poly, Poly)> {
        let field = match (self, other) {
            (Real::Alg(f, _), Real::Alg(g, _)) => {
                assert!(Arc::ptr_eq(f, g), "mixing numbers from different fields");
                f
            }
            (Real::Alg(f, _), _) | (_, Real::Alg(f, _)) => f,
            _ => return None,
        };
        let lift = |x: &Real| match x {
            Real::Rat(r) => Poly::constant(r.clone()),
            Real::Alg(_, p) => p.clone(),
        };
        Some((Arc::clone(field), lift(self), lift(other)))
    }

    fn sign(&self) -> Ordering {
        match self {
            Real::Rat(r) => r.cmp(&Rational::zero()),
            Real::Alg(f, p) => f.sign(p),
        }
    }

    /// Truncation toward zero.
    fn trunc(&self) -> Real {
        match self {
            Real::Rat(r) => Real::Rat(r.trunc()),
            Real::Alg(..) => {
                let guess = BigInt::from_f64(self.to_f64_lossy().trunc()).unwrap_or_default();
                let mut k = Real::Rat(Rational::from_integer(guess));
                let one = Real::one();
                if self.sign() != Ordering::Less {
                    while k > *self {
                        k = k - one.clone();
                    }
                    while k.clone() + one.clone() <= *self {
                        k = k + one.clone();
                    }
                } else {
                    while k < *self {
                        k = k + one.clone();
                    }
                    while k.clone() - one.clone() >= *self {
                        k = k - one.clone();
                    }
                }
                k
            }
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Rat(r) => write!(f, "{r}"),
            Real::Alg(field, p) => {
                let root = field.root();
                write!(
                    f,
                    "[{}](t) at t in ({}, {}) root of {} ~ {}",
                    p,
                    root.lo(),
                    root.hi(),
                    root.poly(),
                    self.to_f64_lossy()
                )
            }
        }
    }
}

impl From<Rational> for Real {
    fn from(r: Rational) -> Self {
        Real::Rat(r)
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Real::Rat(a), Real::Rat(b)) => a == b,
            _ => (self.clone() - other.clone()).sign() == Ordering::Equal,
        }
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self, other) {
            (Real::Rat(a), Real::Rat(b)) => a.cmp(b),
            _ => (self.clone() - other.clone()).sign(),
        })
    }
}

impl Add for Real {
    type Output = Real;
    fn add(self, rhs: Real) -> Real {
        match self.parts(&rhs) {
            None => Real::Rat(self.as_rational().unwrap() + rhs.as_rational().unwrap()),
            Some((f, a, b)) => f.normalize(&a + &b),
        }
    }
}

impl Sub for Real {
    type Output = Real;
    fn sub(self, rhs: Real) -> Real {
        match self.parts(&rhs) {
            None => Real::Rat(self.as_rational().unwrap() - rhs.as_rational().unwrap()),
            Some((f, a, b)) => f.normalize(&a - &b),
        }
    }
}

impl Mul for Real {
    type Output = Real;
    fn mul(self, rhs: Real) -> Real {
        match self.parts(&rhs) {
            None => Real::Rat(self.as_rational().unwrap() * rhs.as_rational().unwrap()),
            Some((f, a, b)) => f.normalize(&a * &b),
        }
    }
}

impl Div for Real {
    type Output = Real;
    fn div(self, rhs: Real) -> Real {
        match self.parts(&rhs) {
            None => Real::Rat(self.as_rational().unwrap() / rhs.as_rational().unwrap()),
            Some((f, a, b)) => {
                if let Real::Rat(r) = &rhs {
                    return f.normalize(a.scale(&r.recip()));
                }
                let inv = f.inverse(&b);
                f.normalize(&a * &inv)
            }
        }
    }
}

impl Rem for Real {
    type Output = Real;
    fn rem(self, rhs: Real) -> Real {
        let q = (self.clone() / rhs.clone()).trunc();
        self - rhs * q
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Rat(r) => Real::Rat(-r),
            Real::Alg(f, p) => Real::Alg(f, -p),
        }
    }
}

impl Zero for Real {
    fn zero() -> Self {
        Real::Rat(Rational::zero())
    }

    fn is_zero(&self) -> bool {
        self.sign() == Ordering::Equal
    }
}

impl One for Real {
    fn one() -> Self {
        Real::Rat(Rational::one())
    }
}

impl Num for Real {
    type FromStrRadixErr = <Rational as Num>::FromStrRadixErr;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        Rational::from_str_radix(s, radix).map(Real::Rat)
    }
}

impl Signed for Real {
    fn abs(&self) -> Self {
        if self.sign() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn abs_sub(&self, other: &Self) -> Self {
        if self <= other {
            Real::zero()
        } else {
            self.clone() - other.clone()
        }
    }

    fn signum(&self) -> Self {
        match self.sign() {
            Ordering::Less => -Real::one(),
            Ordering::Equal => Real::zero(),
            Ordering::Greater => Real::one(),
        }
    }

    fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }
}

impl FromPrimitive for Real {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Real::Rat(Rational::from_integer(n.into())))
    }

    fn from_u64(n: u64) -> Option<Self> {
        Some(Real::Rat(Rational::from_integer(n.into())))
    }

    fn from_f64(x: f64) -> Option<Self> {
        Rational::from_float(x).map(Real::Rat)
    }
}

impl ToPrimitive for Real {
    fn to_i64(&self) -> Option<i64> {
        match self {
            Real::Rat(r) => r.to_i64(),
            Real::Alg(..) => self.trunc().as_rational()?.to_i64(),
        }
    }

    fn to_u64(&self) -> Option<u64> {
        match self {
            Real::Rat(r) => r.to_u64(),
            Real::Alg(..) => self.trunc().as_rational()?.to_u64(),
        }
    }

    fn to_f64(&self) -> Option<f64> {
        Some(match self {
            Real::Rat(r) => r.to_f64()?,
            Real::Alg(f, p) => f.to_f64(p),
        })
    }
}

impl Scalar for Real {
    fn from_f64_exact(x: f64) -> Self {
        Real::Rat(Rational::from_f64_exact(x))
    }

    fn gt_zero(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    fn lt_zero(&self) -> bool {
        self.sign() == Ordering::Less
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn sqrt2() -> Real {
        let p = Poly::new(vec![rat_int(-2), rat_int(0), rat_int(1)]);
        Real::from_root(p.roots_in(&rat_int(0), &rat_int(2)).remove(0))
    }

    #[test]
    fn field_arithmetic_is_exact() {
        let s = sqrt2();
        let two = Real::from(rat_int(2));
        assert_eq!(s.clone() * s.clone(), two);
        assert!((s.clone() * s.clone()).is_rational());
        let inv = Real::one() / s.clone();
        assert_eq!(inv.clone() * two.clone(), s);
        assert!(s > Real::from(rat(1414, 1000)) && s < Real::from(rat(1415, 1000)));
        assert!((s.to_f64_lossy() - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.clone() - Real::one()).gt_zero());
        assert_eq!((s.clone() * Real::from(rat_int(3))).to_i64(), Some(4));
        assert_eq!(s.clone() % Real::one(), s.clone() - Real::one());
        assert_eq!(-s.clone() % Real::one(), Real::one() - s.clone());
    }

    #[test]
    fn reducible_modulus_shrinks() {
        // Root sqrt(2) of (t^2 - 2)(t - 3): the factor t - 3 is discarded on
        // the first zero test that exposes it.
        let p = &Poly::new(vec![rat_int(-2), rat_int(0), rat_int(1)])
            * &Poly::new(vec![rat_int(-3), rat_int(1)]);
        let s = Real::from_root(p.roots_in(&rat_int(0), &rat_int(2)).remove(0));
        let e = s.clone() - Real::from(rat_int(3));
        assert!(e.lt_zero());
        let q = Real::one() / e;
        assert_eq!(q * (s.clone() - Real::from(rat_int(3))), Real::one());
        assert_eq!(s.clone() * s, Real::from(rat_int(2)));
    }

    #[test]
    fn cubic_root_sign_tests() {
        // t^3 - t - 1 has one real root near 1.3247.
        let p = Poly::new(vec![rat_int(-1), rat_int(-1), rat_int(0), rat_int(1)]);
        let r = Real::from_root(p.real_roots().remove(0));
        let cube = r.clone() * r.clone() * r.clone();
        assert_eq!(cube, r.clone() + Real::one());
        assert!(r > Real::from(rat(1324, 1000)) && r < Real::from(rat(1325, 1000)));
    }
}
