//! Truncated Taylor series arithmetic with first-class differentiation.
//!
//! A [`TaylorScalar`] of order p holds coefficients c_0..c_p of a truncated
//! expansion x(t0 + s) = Σ c_k s^k. Coefficients are the normalized form
//! c_k = x^(k)(t0)/k!; the derivative values themselves are recovered by
//! multiplying entry k with k! (see [`TaylorScalar::derivatives`]).
//!
//! Arithmetic follows the usual truncated power-series rules:
//!
//! * mul:  c_k = Σ_{j=0..k} a_j b_{k-j}                  (Cauchy product)
//! * div:  c_k = (a_k − Σ_{j=1..k} b_j c_{k-j}) / b_0    (recursive)
//! * exp:  c_0 = e^{a_0},  k c_k = Σ_{j=1..k} j a_j c_{k-j}
//! * ln:   c_0 = ln a_0,   k c_k = (k a_k − Σ_{j=1..k-1} j c_j a_{k-j}) / a_0
//! * sqrt: c_0 = √a_0,     c_k = (a_k − Σ_{j=1..k-1} c_j c_{k-j}) / (2 c_0)
//! * sin/cos are generated jointly from s' = a'·c, c' = −a'·s.
//!
//! Mixed-order operands truncate to the shorter operand: information past
//! the common order would be incomplete. Plain numbers are carried as
//! exact constants and take part at whatever order the other operand has.
//!
//! Differentiation is an explicit operation rather than an index shift the
//! caller has to remember: [`TaylorScalar::diff`] maps coefficients by
//! b_k = a_{k+q} (k+q)!/k!, so the result again holds coefficients of the
//! normalized form, now of x^(q). It consumes q orders; asking for more
//! derivatives than the series carries is an error.
//!
//! Operators use IEEE semantics at singular leading coefficients (an inf or
//! NaN propagates into the result); evaluation pipelines check finiteness at
//! their boundary. The `try_*` methods report those situations as errors
//! instead.

use crate::error::{Error, Result};
use crate::scalar::{DiffScalar, Scalar};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Truncated Taylor series over f64 coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorScalar {
    coeffs: Vec<f64>,
    /// Constants are exact at every order; they adapt to the other operand.
    constant: bool,
}

/// Falling factorial m (m−1) ⋯ (m−q+1) as f64 (exact for the ranges used).
#[inline]
pub(crate) fn falling(m: usize, q: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..q {
        r *= (m - i) as f64;
    }
    r
}

/// k! as f64.
#[inline]
pub(crate) fn factorial(k: usize) -> f64 {
    falling(k, k)
}

impl TaylorScalar {
    /// Series from normalized coefficients c_k = x^(k)/k!.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series carries at least the constant term");
        TaylorScalar { coeffs, constant: false }
    }

    /// Series from derivative values x, x', x'', …
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let coeffs = derivs.iter().enumerate().map(|(k, d)| d / factorial(k)).collect();
        TaylorScalar { coeffs, constant: false }
    }

    /// Exact constant; participates in arithmetic at any order.
    pub fn constant(c: f64) -> Self {
        TaylorScalar { coeffs: vec![c], constant: true }
    }

    /// Constant materialized as an order-p series (c, 0, …, 0).
    pub fn constant_at(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        TaylorScalar { coeffs, constant: false }
    }

    /// The time variable t expanded at t0: (t0, 1, 0, …, 0).
    pub fn time(t0: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = t0;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        TaylorScalar { coeffs, constant: false }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Coefficient k, or 0 beyond the stored order (exact for constants,
    /// convenience elsewhere).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Derivative values x^(k) = k! c_k for k = 0..=order.
    pub fn derivatives(&self) -> Vec<f64> {
        self.coeffs.iter().enumerate().map(|(k, c)| c * factorial(k)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Series truncated to order p (p ≤ order unless constant).
    pub fn truncated(&self, p: usize) -> Self {
        if self.constant {
            return Self::constant_at(self.coeffs[0], p);
        }
        assert!(p <= self.order());
        Self::from_coeffs(self.coeffs[..=p].to_vec())
    }

    /// Σ c_k h^k by Horner's rule.
    pub fn eval_at(&self, h: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * h + c)
    }

    /// q-th time derivative: b_k = a_{k+q} (k+q)!/k!.
    ///
    /// Consumes q orders. Constants differentiate to the constant 0.
    pub fn try_diff(&self, q: usize) -> Result<Self> {
        if q == 0 {
            return Ok(self.clone());
        }
        if self.constant {
            return Ok(Self::constant(0.0));
        }
        let p = self.order();
        if q > p {
            return Err(Error::InsufficientOrder { op: "diff", needed: q, have: p });
        }
        let coeffs = (0..=p - q).map(|k| self.coeffs[k + q] * falling(k + q, q)).collect();
        Ok(Self::from_coeffs(coeffs))
    }

    // ── arithmetic kernels ────────────────────────────────────────────────

    fn zip(a: &Self, b: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        match (a.constant, b.constant) {
            (true, true) => Self::constant(f(a.coeffs[0], b.coeffs[0])),
            (true, false) => {
                let mut coeffs: Vec<f64> = b.coeffs.iter().map(|&x| f(0.0, x)).collect();
                coeffs[0] = f(a.coeffs[0], b.coeffs[0]);
                Self::from_coeffs(coeffs)
            }
            (false, true) => {
                let mut coeffs = a.coeffs.clone();
                coeffs[0] = f(a.coeffs[0], b.coeffs[0]);
                Self::from_coeffs(coeffs)
            }
            (false, false) => {
                let p = a.order().min(b.order());
                Self::from_coeffs((0..=p).map(|k| f(a.coeffs[k], b.coeffs[k])).collect())
            }
        }
    }

    fn add_impl(a: &Self, b: &Self) -> Self {
        Self::zip(a, b, |x, y| x + y)
    }

    fn sub_impl(a: &Self, b: &Self) -> Self {
        Self::zip(a, b, |x, y| x - y)
    }

    fn scale(&self, s: f64) -> Self {
        TaylorScalar {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            constant: self.constant,
        }
    }

    fn mul_impl(a: &Self, b: &Self) -> Self {
        match (a.constant, b.constant) {
            (true, _) => b.scale(a.coeffs[0]),
            (_, true) => a.scale(b.coeffs[0]),
            _ => {
                let p = a.order().min(b.order());
                let mut coeffs = vec![0.0; p + 1];
                for (k, c) in coeffs.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for j in 0..=k {
                        s += a.coeffs[j] * b.coeffs[k - j];
                    }
                    *c = s;
                }
                Self::from_coeffs(coeffs)
            }
        }
    }

    fn div_impl(a: &Self, b: &Self) -> Self {
        match (a.constant, b.constant) {
            (_, true) => a.scale(1.0 / b.coeffs[0]),
            (true, false) => Self::mul_impl(&b.recip(), a),
            (false, false) => {
                let p = a.order().min(b.order());
                let mut c = vec![0.0; p + 1];
                for k in 0..=p {
                    let mut s = a.coeffs[k];
                    for j in 1..=k {
                        s -= b.coeffs[j] * c[k - j];
                    }
                    c[k] = s / b.coeffs[0];
                }
                Self::from_coeffs(c)
            }
        }
    }

    /// 1/a. c_0 = 1/a_0, c_k = −(Σ_{j=1..k} a_j c_{k-j}) / a_0.
    pub fn recip(&self) -> Self {
        if self.constant {
            return Self::constant(1.0 / self.coeffs[0]);
        }
        let p = self.order();
        let mut c = vec![0.0; p + 1];
        c[0] = 1.0 / self.coeffs[0];
        for k in 1..=p {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.coeffs[j] * c[k - j];
            }
            c[k] = -s / self.coeffs[0];
        }
        Self::from_coeffs(c)
    }

    /// Checked division; errors when the divisor's constant term is zero.
    pub fn try_div(&self, b: &Self) -> Result<Self> {
        if b.coeffs[0] == 0.0 {
            return Err(Error::SingularSeries { op: "div" });
        }
        Ok(Self::div_impl(self, b))
    }

    pub fn sqr_impl(&self) -> Self {
        Self::mul_impl(self, self)
    }

    fn exp_impl(&self) -> Self {
        if self.constant {
            return Self::constant(self.coeffs[0].exp());
        }
        let p = self.order();
        let mut c = vec![0.0; p + 1];
        c[0] = self.coeffs[0].exp();
        for k in 1..=p {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.coeffs[j] * c[k - j];
            }
            c[k] = s / k as f64;
        }
        Self::from_coeffs(c)
    }

    fn ln_impl(&self) -> Self {
        if self.constant {
            return Self::constant(self.coeffs[0].ln());
        }
        let p = self.order();
        let mut c = vec![0.0; p + 1];
        c[0] = self.coeffs[0].ln();
        for k in 1..=p {
            let s = k as f64 * self.coeffs[k]
                - (1..k).map(|j| j as f64 * c[j] * self.coeffs[k - j]).sum::<f64>();
            c[k] = s / (k as f64 * self.coeffs[0]);
        }
        Self::from_coeffs(c)
    }

    /// Checked natural log; errors unless the constant term is positive.
    pub fn try_ln(&self) -> Result<Self> {
        if self.coeffs[0] <= 0.0 {
            return Err(Error::SingularSeries { op: "ln" });
        }
        Ok(self.ln_impl())
    }

    fn sqrt_impl(&self) -> Self {
        if self.constant {
            return Self::constant(self.coeffs[0].sqrt());
        }
        let p = self.order();
        let mut c = vec![0.0; p + 1];
        c[0] = self.coeffs[0].sqrt();
        for k in 1..=p {
            let mut s = self.coeffs[k];
            for j in 1..k {
                s -= c[j] * c[k - j];
            }
            c[k] = s / (2.0 * c[0]);
        }
        Self::from_coeffs(c)
    }

    /// Checked square root; errors unless the constant term is positive.
    pub fn try_sqrt(&self) -> Result<Self> {
        if self.coeffs[0] <= 0.0 {
            return Err(Error::SingularSeries { op: "sqrt" });
        }
        Ok(self.sqrt_impl())
    }

    fn sin_cos(&self) -> (Self, Self) {
        if self.constant {
            let (s, c) = self.coeffs[0].sin_cos();
            return (Self::constant(s), Self::constant(c));
        }
        let p = self.order();
        let (mut s, mut c) = (vec![0.0; p + 1], vec![0.0; p + 1]);
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        // s' = a' cos(a), c' = −a' sin(a) ⇒
        //   k s_k =  Σ_{j=1..k} j a_j c_{k-j}
        //   k c_k = −Σ_{j=1..k} j a_j s_{k-j}
        for k in 1..=p {
            let (mut ds, mut dc) = (0.0, 0.0);
            for j in 1..=k {
                ds += j as f64 * self.coeffs[j] * c[k - j];
                dc -= j as f64 * self.coeffs[j] * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Self::from_coeffs(s), Self::from_coeffs(c))
    }

    fn powi_impl(&self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            n if n < 0 => self.powi_impl(-n).recip(),
            _ => {
                // exponentiation by squaring
                let mut base = self.clone();
                let mut acc: Option<Self> = None;
                let mut n = n as u32;
                loop {
                    if n & 1 == 1 {
                        acc = Some(match acc {
                            None => base.clone(),
                            Some(a) => Self::mul_impl(&a, &base),
                        });
                    }
                    n >>= 1;
                    if n == 0 {
                        break;
                    }
                    base = Self::mul_impl(&base, &base);
                }
                acc.unwrap()
            }
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl $trait for TaylorScalar {
            type Output = TaylorScalar;
            fn $method(self, rhs: TaylorScalar) -> TaylorScalar {
                TaylorScalar::$impl(&self, &rhs)
            }
        }
        impl $trait for &TaylorScalar {
            type Output = TaylorScalar;
            fn $method(self, rhs: &TaylorScalar) -> TaylorScalar {
                TaylorScalar::$impl(self, rhs)
            }
        }
        impl $trait<&TaylorScalar> for TaylorScalar {
            type Output = TaylorScalar;
            fn $method(self, rhs: &TaylorScalar) -> TaylorScalar {
                TaylorScalar::$impl(&self, rhs)
            }
        }
        impl $trait<TaylorScalar> for &TaylorScalar {
            type Output = TaylorScalar;
            fn $method(self, rhs: TaylorScalar) -> TaylorScalar {
                TaylorScalar::$impl(self, &rhs)
            }
        }
        impl $trait<f64> for TaylorScalar {
            type Output = TaylorScalar;
            fn $method(self, rhs: f64) -> TaylorScalar {
                TaylorScalar::$impl(&self, &TaylorScalar::constant(rhs))
            }
        }
        impl $trait<f64> for &TaylorScalar {
            type Output = TaylorScalar;
            fn $method(self, rhs: f64) -> TaylorScalar {
                TaylorScalar::$impl(self, &TaylorScalar::constant(rhs))
            }
        }
    };
}

binop!(Add, add, add_impl);
binop!(Sub, sub, sub_impl);
binop!(Mul, mul, mul_impl);
binop!(Div, div, div_impl);

impl Neg for TaylorScalar {
    type Output = TaylorScalar;
    fn neg(self) -> TaylorScalar {
        self.scale(-1.0)
    }
}

impl Neg for &TaylorScalar {
    type Output = TaylorScalar;
    fn neg(self) -> TaylorScalar {
        self.scale(-1.0)
    }
}

impl Scalar for TaylorScalar {
    fn from_f64(c: f64) -> Self {
        Self::constant(c)
    }
    fn sqr(&self) -> Self {
        self.sqr_impl()
    }
    fn sqrt(&self) -> Self {
        self.sqrt_impl()
    }
    fn sin(&self) -> Self {
        self.sin_cos().0
    }
    fn cos(&self) -> Self {
        self.sin_cos().1
    }
    fn exp(&self) -> Self {
        self.exp_impl()
    }
    fn ln(&self) -> Self {
        self.ln_impl()
    }
    fn powi(&self, n: i32) -> Self {
        self.powi_impl(n)
    }
}

impl DiffScalar for TaylorScalar {
    /// Panics when the series is too short; use [`TaylorScalar::try_diff`]
    /// to handle that case. Evaluation pipelines size their inputs from the
    /// structural offsets, which makes the panic unreachable there.
    fn diff(&self, q: usize) -> Self {
        self.try_diff(q).expect("series order too low for diff")
    }

    fn series_order(&self) -> Option<usize> {
        if self.constant {
            None
        } else {
            Some(self.order())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ts(c: &[f64]) -> TaylorScalar {
        TaylorScalar::from_coeffs(c.to_vec())
    }

    #[test]
    fn square_of_generic_quadratic() {
        // (x0 + x1 s + x2 s²)² = x0² + 2 x0 x1 s + (2 x0 x2 + x1²) s²
        let (x0, x1, x2) = (1.7, -0.3, 2.4);
        let sq = ts(&[x0, x1, x2]).sqr();
        assert_relative_eq!(sq.coeff(0), x0 * x0, max_relative = 1e-15);
        assert_relative_eq!(sq.coeff(1), 2.0 * x0 * x1, max_relative = 1e-15);
        assert_relative_eq!(sq.coeff(2), 2.0 * x0 * x2 + x1 * x1, max_relative = 1e-15);
    }

    #[test]
    fn product_one_two_three() {
        let p = ts(&[1.0, 2.0, 3.0]) * ts(&[1.0, 2.0, 3.0]);
        assert_eq!(p.coeffs(), &[1.0, 4.0, 10.0]);
    }

    #[test]
    fn mixed_order_truncates_to_shorter() {
        let p = ts(&[1.0, 2.0, 3.0]) * ts(&[2.0, 1.0]);
        assert_eq!(p.order(), 1);
        assert_eq!(p.coeffs(), &[2.0, 5.0]);
    }

    #[test]
    fn constants_adapt_to_ambient_order() {
        let x = ts(&[1.0, 2.0, 3.0]);
        let y = x.clone() * 2.0;
        assert_eq!(y.coeffs(), &[2.0, 4.0, 6.0]);
        let z = TaylorScalar::constant(5.0) + x;
        assert_eq!(z.coeffs(), &[6.0, 2.0, 3.0]);
    }

    #[test]
    fn sine_of_time() {
        let s = TaylorScalar::time(0.0, 3).sin();
        assert_eq!(s.coeff(0), 0.0);
        assert_relative_eq!(s.coeff(1), 1.0, max_relative = 1e-15);
        assert_eq!(s.coeff(2), 0.0);
        assert_relative_eq!(s.coeff(3), -1.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn exp_ln_sqrt_match_maclaurin() {
        // e^t at t0 = 0 has coefficients 1/k!
        let e = TaylorScalar::time(0.0, 6).exp();
        for k in 0..=6 {
            assert_relative_eq!(e.coeff(k), 1.0 / factorial(k), max_relative = 1e-14);
        }
        // ln(1+t): (-1)^{k+1}/k
        let l = (TaylorScalar::time(0.0, 6) + 1.0).ln();
        assert_eq!(l.coeff(0), 0.0);
        for k in 1..=6 {
            let want = if k % 2 == 1 { 1.0 / k as f64 } else { -1.0 / k as f64 };
            assert_relative_eq!(l.coeff(k), want, max_relative = 1e-14);
        }
        // √(1+t) ⋅ √(1+t) = 1+t
        let r = (TaylorScalar::time(0.0, 6) + 1.0).sqrt();
        let back = r.sqr();
        assert_relative_eq!(back.coeff(0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(back.coeff(1), 1.0, max_relative = 1e-14);
        for k in 2..=6 {
            assert_relative_eq!(back.coeff(k), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn division_recovers_factor() {
        let a = ts(&[1.0, -2.0, 0.5, 3.0]);
        let b = ts(&[2.0, 1.0, -1.0, 0.25]);
        let q = a.clone() * b.clone();
        let r = q.try_div(&b).unwrap();
        for k in 0..=3 {
            assert_relative_eq!(r.coeff(k), a.coeff(k), max_relative = 1e-13);
        }
    }

    #[test]
    fn division_by_zero_leading_term_errors() {
        let b = ts(&[0.0, 1.0]);
        assert_eq!(ts(&[1.0, 1.0]).try_div(&b).unwrap_err(), Error::SingularSeries { op: "div" });
    }

    #[test]
    fn sqrt_domain_errors() {
        assert!(ts(&[-1.0, 1.0]).try_sqrt().is_err());
        assert!(ts(&[0.0, 1.0]).try_sqrt().is_err());
    }

    #[test]
    fn diff_drops_orders_with_factorial_scaling() {
        // second derivative of (x0, x1, x2): single coefficient 2 x2
        let d = ts(&[5.0, 7.0, 11.0]).try_diff(2).unwrap();
        assert_eq!(d.coeffs(), &[22.0]);

        let d1 = ts(&[1.0, 2.0, 3.0, 4.0]).try_diff(1).unwrap();
        assert_eq!(d1.coeffs(), &[2.0, 6.0, 12.0]);
    }

    #[test]
    fn diff_beyond_order_errors() {
        let e = ts(&[1.0, 2.0]).try_diff(3).unwrap_err();
        assert_eq!(e, Error::InsufficientOrder { op: "diff", needed: 3, have: 1 });
    }

    #[test]
    fn diff_zero_is_identity_and_constants_vanish() {
        let x = ts(&[1.0, 2.0]);
        assert_eq!(x.try_diff(0).unwrap(), x);
        let c = TaylorScalar::constant(4.2).try_diff(3).unwrap();
        assert!(c.is_constant());
        assert_eq!(c.value(), 0.0);
    }

    #[test]
    fn coefficient_derivative_conversion() {
        let x = ts(&[1.0, 1.0, 1.0]);
        assert_eq!(x.derivatives(), vec![1.0, 1.0, 2.0]);
        let y = TaylorScalar::from_derivatives(&[0.0, 0.0, 6.0]);
        assert_eq!(y.coeffs(), &[0.0, 0.0, 3.0]);
    }

    #[test]
    fn eval_at_is_horner_sum() {
        let x = ts(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(x.eval_at(0.5), 1.0 + 1.0 + 0.75, max_relative = 1e-15);
    }

    #[test]
    fn powi_matches_repeated_multiplication() {
        let x = ts(&[0.5, 1.0, -2.0, 0.25]);
        let cube = x.clone() * x.clone() * x.clone();
        let p = x.powi(3);
        for k in 0..=3 {
            assert_relative_eq!(p.coeff(k), cube.coeff(k), max_relative = 1e-13);
        }
        let inv2 = x.powi(-2);
        let direct = x.sqr().recip();
        for k in 0..=3 {
            assert_relative_eq!(inv2.coeff(k), direct.coeff(k), max_relative = 1e-12);
        }
    }
}
