//! Truncated Taylor jets and first-order dual numbers.
//!
//! A [`Jet`] stores normalized Taylor coefficients `c_j = f^{(j)}(x0) / j!`
//! of a function around a centre `x0`, truncated at a fixed order. The
//! scalar type is generic so that coefficients can themselves be [`Dual`]
//! numbers carrying derivatives with respect to the drift parameters.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Number of parameters tracked by [`Dual`].
pub const N_PARAMS: usize = 2;

pub trait Scalar:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn scale(self, k: f64) -> Self {
        self * Self::from_f64(k)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Value with gradient with respect to `(θ₁, θ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub grad: [f64; N_PARAMS],
}

impl Dual {
    pub fn constant(re: f64) -> Self {
        Self {
            re,
            grad: [0.0; N_PARAMS],
        }
    }

    /// The `i`-th independent variable with value `re`.
    pub fn variable(re: f64, i: usize) -> Self {
        let mut grad = [0.0; N_PARAMS];
        grad[i] = 1.0;
        Self { re, grad }
    }

    fn map_grad(self, k: f64) -> [f64; N_PARAMS] {
        let mut g = self.grad;
        for gi in &mut g {
            *gi *= k;
        }
        g
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        let mut grad = self.grad;
        for (g, r) in grad.iter_mut().zip(rhs.grad) {
            *g += r;
        }
        Dual {
            re: self.re + rhs.re,
            grad,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        self + (-rhs)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            re: -self.re,
            grad: self.map_grad(-1.0),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let mut grad = [0.0; N_PARAMS];
        for (i, g) in grad.iter_mut().enumerate() {
            *g = self.grad[i] * rhs.re + self.re * rhs.grad[i];
        }
        Dual {
            re: self.re * rhs.re,
            grad,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.re;
        let re = self.re * inv;
        let mut grad = [0.0; N_PARAMS];
        for (i, g) in grad.iter_mut().enumerate() {
            *g = (self.grad[i] - re * rhs.grad[i]) * inv;
        }
        Dual { re, grad }
    }
}

impl Scalar for Dual {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(self) -> f64 {
        self.re
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            grad: self.map_grad(e),
        }
    }
    fn scale(self, k: f64) -> Self {
        Dual {
            re: self.re * k,
            grad: self.map_grad(k),
        }
    }
}

/// Truncated Taylor expansion around a fixed centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least the constant term");
        Self { coeffs }
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// The identity function `y ↦ y` expanded around `centre`.
    pub fn variable(centre: T, order: usize) -> Self {
        let mut jet = Self::constant(centre, order);
        if order >= 1 {
            jet.coeffs[1] = T::one();
        }
        jet
    }

    /// The shifted identity `y ↦ y - centre`, which vanishes at the centre.
    pub fn displacement(order: usize) -> Self {
        Self::variable(T::zero(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Value at the centre.
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    pub fn truncate(mut self, order: usize) -> Self {
        self.coeffs.truncate(order + 1);
        self
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
        }
    }

    pub fn derivative(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::InsufficientJetOrder {
                available: 0,
                required: 1,
            });
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(j, &c)| c.scale((j + 1) as f64))
            .collect();
        Ok(Self { coeffs })
    }

    pub fn exp(&self) -> Self {
        // e = exp(f) satisfies e' = f' e; match coefficients of that ODE.
        let n = self.coeffs.len();
        let mut out = vec![T::zero(); n];
        out[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + self.coeffs[j].scale(j as f64) * out[k - j];
            }
            out[k] = acc.scale(1.0 / k as f64);
        }
        Self { coeffs: out }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::constant(T::one(), self.order());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> Jet<U> {
        Jet {
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }
}

impl Jet<f64> {
    /// Lifts real coefficients into parameter-free dual numbers.
    pub fn to_dual(&self) -> Jet<Dual> {
        self.map_scalar(Dual::constant)
    }
}

impl<T: Scalar> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: &Jet<T>) -> Jet<T> {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        Jet {
            coeffs: (0..n).map(|j| self.coeffs[j] + rhs.coeffs[j]).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: &Jet<T>) -> Jet<T> {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        Jet {
            coeffs: (0..n).map(|j| self.coeffs[j] - rhs.coeffs[j]).collect(),
        }
    }
}

impl<T: Scalar> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &Jet<T>) -> Jet<T> {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| (0..=k).fold(T::zero(), |acc, j| acc + self.coeffs[j] * rhs.coeffs[k - j]))
            .collect();
        Jet { coeffs }
    }
}

/// One application of the continuous generator `f ↦ b̄ f' + ½ a² f''`.
///
/// The result loses two orders relative to `f`.
pub fn apply_generator<T: Scalar>(
    f: &Jet<T>,
    drift: &Jet<T>,
    diffusion_sq: &Jet<T>,
) -> Result<Jet<T>> {
    if f.order() < 2 {
        return Err(Error::InsufficientJetOrder {
            available: f.order(),
            required: 2,
        });
    }
    let d1 = f.derivative()?;
    let d2 = d1.derivative()?;
    let out_order = f.order() - 2;
    let first = &drift.clone().truncate(out_order) * &d1.truncate(out_order);
    let second = (&diffusion_sq.clone().truncate(out_order) * &d2).scale(T::from_f64(0.5));
    let out = &first + &second;
    if out.order() < out_order {
        return Err(Error::InsufficientJetOrder {
            available: drift.order().min(diffusion_sq.order()),
            required: out_order,
        });
    }
    Ok(out)
}
