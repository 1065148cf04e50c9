//! Scalar tower for forward-mode differentiation.
//!
//! [`Field`] is the arithmetic interface shared by `f64` and dual numbers.
//! [`Dual<T>`] nests: `Dual<f64>` carries one derivative direction,
//! `Dual<Dual<f64>>` two, and so on. The [`Scalar`] trait pins down the five
//! concrete levels the crate actually uses (`f64` through [`D4`]) and lets
//! generic code evaluate an erased [`SmoothMap`] at any of them and lift a
//! value one derivative level up.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::map::SmoothMap;

/// Arithmetic plus the elementary functions needed by chart evaluators.
pub trait Field:
    Copy
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Leading (fully real) coefficient.
    fn value(self) -> f64;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self {
        assert!(n >= 0, "negative powers go through Div");
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Field for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// First-order dual number over `T`: value plus one infinitesimal direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Field> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }
    /// Constant (derivative-free) embedding.
    pub fn constant(re: T) -> Self {
        Dual {
            re,
            eps: T::zero(),
        }
    }
    /// Seed with unit derivative.
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Field> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Field> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Field> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual::new(
            self.re * rhs.re,
            self.re * rhs.eps + self.eps * rhs.re,
        )
    }
}

impl<T: Field> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        Dual::new(
            self.re * inv,
            (self.eps * rhs.re - self.re * rhs.eps) * inv * inv,
        )
    }
}

impl<T: Field> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Field> Field for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    fn value(self) -> f64 {
        self.re.value()
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.eps / (r + r))
    }
}

/// One derivative direction over `f64`.
pub type D1 = Dual<f64>;
/// Two nested directions (Hessian entries).
pub type D2 = Dual<D1>;
pub type D3 = Dual<D2>;
pub type D4 = Dual<D3>;

/// A [`Field`] at one of the five supported nesting depths.
///
/// `Lift` is the next depth up; seeding through [`Scalar::lift`] is how
/// generic code differentiates maps whose inputs are already dual-valued.
/// Depth is capped at [`D4`] — enough for second-order jets of a chart whose
/// evaluator internally takes second-order jets of another chart.
pub trait Scalar: Field {
    type Lift: Scalar;
    const DEPTH: usize;
    fn lift(re: Self, eps: Self) -> Self::Lift;
    fn real(l: Self::Lift) -> Self;
    fn infinitesimal(l: Self::Lift) -> Self;
    /// Evaluate an erased smooth map at this scalar depth.
    fn eval_map(map: &SmoothMap, x: &[Self]) -> Vec<Self>;
}

macro_rules! impl_scalar {
    ($ty:ty, $lift:ty, $depth:expr, $eval:ident) => {
        impl Scalar for $ty {
            type Lift = $lift;
            const DEPTH: usize = $depth;
            fn lift(re: Self, eps: Self) -> Self::Lift {
                Dual::new(re, eps)
            }
            fn real(l: Self::Lift) -> Self {
                l.re
            }
            fn infinitesimal(l: Self::Lift) -> Self {
                l.eps
            }
            fn eval_map(map: &SmoothMap, x: &[Self]) -> Vec<Self> {
                map.raw().$eval(x)
            }
        }
    };
}

impl_scalar!(f64, D1, 0, eval_d0);
impl_scalar!(D1, D2, 1, eval_d1);
impl_scalar!(D2, D3, 2, eval_d2);
impl_scalar!(D3, D4, 3, eval_d3);

impl Scalar for D4 {
    type Lift = D4;
    const DEPTH: usize = 4;
    fn lift(_re: Self, _eps: Self) -> Self::Lift {
        panic!("differentiation depth exceeded: D4 cannot be lifted further")
    }
    fn real(_l: Self::Lift) -> Self {
        panic!("differentiation depth exceeded")
    }
    fn infinitesimal(_l: Self::Lift) -> Self {
        panic!("differentiation depth exceeded")
    }
    fn eval_map(map: &SmoothMap, x: &[Self]) -> Vec<Self> {
        map.raw().eval_d4(x)
    }
}
