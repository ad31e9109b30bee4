//! Truncated Taylor series ("jets") in complex double precision.
//!
//! A [`Jet`] of order `k` at a point `x` stores the Taylor coefficients
//! `f^(j)(x) / j!` for `j = 0..=k`. Arithmetic follows the usual
//! automatic-differentiation recurrences, so every derivative produced by
//! the crate is analytic rather than a finite difference.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Number of stored coefficients; the highest representable derivative
/// order is `JET_CAPACITY - 1`.
pub const JET_CAPACITY: usize = 13;

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: usize = JET_CAPACITY - 1;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    coef: [C64; JET_CAPACITY],
    order: usize,
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::InsufficientDerivativeOrder {
            requested: order,
            available: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

impl Jet {
    pub fn constant(value: C64, order: usize) -> Result<Self> {
        check_order(order)?;
        let mut coef = [ZERO; JET_CAPACITY];
        coef[0] = value;
        Ok(Self { coef, order })
    }

    pub fn real(value: f64, order: usize) -> Result<Self> {
        Self::constant(C64::new(value, 0.0), order)
    }

    pub fn zero(order: usize) -> Result<Self> {
        Self::constant(ZERO, order)
    }

    /// The independent variable `x + t`.
    pub fn variable(x: f64, order: usize) -> Result<Self> {
        let mut j = Self::real(x, order)?;
        if order >= 1 {
            j.coef[1] = C64::new(1.0, 0.0);
        }
        Ok(j)
    }

    /// Builds a jet from derivative values `[f, f', f'', ...]`.
    pub fn from_derivatives(derivs: &[C64]) -> Result<Self> {
        if derivs.is_empty() {
            return Self::zero(0);
        }
        let order = derivs.len() - 1;
        check_order(order)?;
        let mut coef = [ZERO; JET_CAPACITY];
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            coef[k] = d / fact;
        }
        Ok(Self { coef, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> C64 {
        self.coef[0]
    }

    /// Taylor coefficient `f^(k)/k!`.
    pub fn coefficient(&self, k: usize) -> C64 {
        if k <= self.order {
            self.coef[k]
        } else {
            ZERO
        }
    }

    /// The `k`-th derivative value.
    pub fn derivative_value(&self, k: usize) -> Result<C64> {
        if k > self.order {
            return Err(Error::InsufficientDerivativeOrder {
                requested: k,
                available: self.order,
            });
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        Ok(self.coef[k] * fact)
    }

    pub fn truncate(mut self, order: usize) -> Self {
        if order < self.order {
            for c in &mut self.coef[order + 1..] {
                *c = ZERO;
            }
            self.order = order;
        }
        self
    }

    /// `d/dx` of the jet; loses one order.
    pub fn differentiate(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::InsufficientDerivativeOrder {
                requested: 1,
                available: 0,
            });
        }
        let mut coef = [ZERO; JET_CAPACITY];
        for k in 0..self.order {
            coef[k] = self.coef[k + 1] * (k + 1) as f64;
        }
        Ok(Self {
            coef,
            order: self.order - 1,
        })
    }

    /// Rescales the expansion variable: the jet of `f(alpha * x)` given the
    /// jet of `f` at `alpha * x`.
    pub fn rescale_argument(mut self, alpha: f64) -> Self {
        let mut p = 1.0;
        for k in 0..=self.order {
            self.coef[k] *= p;
            p *= alpha;
        }
        self
    }

    pub fn scale(mut self, s: C64) -> Self {
        for c in &mut self.coef[..=self.order] {
            *c *= s;
        }
        self
    }

    pub fn scale_re(self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add_scalar(mut self, s: C64) -> Self {
        self.coef[0] += s;
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut coef = [ZERO; JET_CAPACITY];
        for k in 0..=order {
            coef[k] = self.coef[k] + other.coef[k];
        }
        Self { coef, order }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_re(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut coef = [ZERO; JET_CAPACITY];
        for k in 0..=order {
            let mut s = ZERO;
            for j in 0..=k {
                s += self.coef[j] * other.coef[k - j];
            }
            coef[k] = s;
        }
        Self { coef, order }
    }

    pub fn recip(&self) -> Self {
        let a = &self.coef;
        let mut b = [ZERO; JET_CAPACITY];
        b[0] = a[0].inv();
        for k in 1..=self.order {
            let mut s = ZERO;
            for j in 1..=k {
                s += a[j] * b[k - j];
            }
            b[k] = -s * b[0];
        }
        Self {
            coef: b,
            order: self.order,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    pub fn powi(&self, p: i32) -> Self {
        if p < 0 {
            return self.recip().powi(-p);
        }
        let mut out = Self::real(1.0, self.order).expect("order already validated");
        for _ in 0..p {
            out = out.mul(self);
        }
        out
    }

    /// Real power `u^p` on the principal branch. Unlike `exp(p ln u)`, the
    /// coefficients carry no `1/u^2` cancellation near a small base.
    pub fn powf(&self, p: f64) -> Self {
        let a = &self.coef;
        let mut b = [ZERO; JET_CAPACITY];
        b[0] = a[0].powf(p);
        for k in 1..=self.order {
            let mut s = ZERO;
            for j in 1..=k {
                s += a[j] * b[k - j] * ((p + 1.0) * j as f64 - k as f64);
            }
            b[k] = s / (a[0] * k as f64);
        }
        Self {
            coef: b,
            order: self.order,
        }
    }

    pub fn exp(&self) -> Self {
        let a = &self.coef;
        let mut b = [ZERO; JET_CAPACITY];
        b[0] = a[0].exp();
        for k in 1..=self.order {
            let mut s = ZERO;
            for j in 1..=k {
                s += a[j] * b[k - j] * j as f64;
            }
            b[k] = s / k as f64;
        }
        Self {
            coef: b,
            order: self.order,
        }
    }

    pub fn ln(&self) -> Self {
        let a = &self.coef;
        let mut b = [ZERO; JET_CAPACITY];
        b[0] = a[0].ln();
        for k in 1..=self.order {
            let mut s = ZERO;
            for j in 1..k {
                s += b[j] * a[k - j] * j as f64;
            }
            b[k] = (a[k] - s / k as f64) / a[0];
        }
        Self {
            coef: b,
            order: self.order,
        }
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let a = &self.coef;
        let mut s = [ZERO; JET_CAPACITY];
        let mut c = [ZERO; JET_CAPACITY];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..=self.order {
            let mut ss = ZERO;
            let mut cc = ZERO;
            for j in 1..=k {
                let w = a[j] * j as f64;
                ss += w * c[k - j];
                cc += w * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (
            Self {
                coef: s,
                order: self.order,
            },
            Self {
                coef: c,
                order: self.order,
            },
        )
    }

    pub fn sinh_cosh(&self) -> (Self, Self) {
        let a = &self.coef;
        let mut s = [ZERO; JET_CAPACITY];
        let mut c = [ZERO; JET_CAPACITY];
        s[0] = a[0].sinh();
        c[0] = a[0].cosh();
        for k in 1..=self.order {
            let mut ss = ZERO;
            let mut cc = ZERO;
            for j in 1..=k {
                let w = a[j] * j as f64;
                ss += w * c[k - j];
                cc += w * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (
            Self {
                coef: s,
                order: self.order,
            },
            Self {
                coef: c,
                order: self.order,
            },
        )
    }

    /// `(ln sinh u, ln cosh u, tanh u)`. Past `u = 1` these are built from
    /// `exp(-2u)`, so they stay finite where `sinh u` and `cosh u` do not.
    pub fn hyperbolic_logs(&self) -> (Self, Self, Self) {
        if self.value().re < 1.0 {
            let (s, c) = self.sinh_cosh();
            return (s.ln(), c.ln(), s.div(&c));
        }
        let e = self.scale_re(-2.0).exp();
        let below = e.scale_re(-1.0).add_scalar(C64::new(1.0, 0.0));
        let above = e.add_scalar(C64::new(1.0, 0.0));
        let half = C64::new(-std::f64::consts::LN_2, 0.0);
        (
            self.add(&below.ln()).add_scalar(half),
            self.add(&above.ln()).add_scalar(half),
            below.div(&above),
        )
    }

    /// Composes an outer function `g` with this jet, given the derivative
    /// values `g^(k)` at `self.value()` for `k = 0..=self.order()`.
    pub fn compose(&self, outer_derivs: &[C64]) -> Result<Self> {
        if outer_derivs.len() <= self.order {
            return Err(Error::InsufficientDerivativeOrder {
                requested: self.order,
                available: outer_derivs.len().saturating_sub(1),
            });
        }
        let mut delta = *self;
        delta.coef[0] = ZERO;
        let mut power = Self::real(1.0, self.order)?;
        let mut out = Self::zero(self.order)?;
        let mut fact = 1.0;
        for (k, d) in outer_derivs.iter().take(self.order + 1).enumerate() {
            if k > 0 {
                fact *= k as f64;
                power = power.mul(&delta);
            }
            out = out.add(&power.scale(d / fact));
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.coef[..=self.order]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: f64, tol: f64) -> bool {
        (a - C64::new(b, 0.0)).norm() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_of_variable_reproduces_all_derivatives() {
        let x = 0.7;
        let e = Jet::variable(x, 6).unwrap().exp();
        for k in 0..=6 {
            assert!(close(e.derivative_value(k).unwrap(), x.exp(), 1e-14));
        }
    }

    #[test]
    fn sin_cos_and_ln_agree_with_closed_forms() {
        let x = 1.1;
        let v = Jet::variable(x, 4).unwrap();
        let (s, c) = v.sin_cos();
        assert!(close(s.derivative_value(1).unwrap(), x.cos(), 1e-14));
        assert!(close(s.derivative_value(3).unwrap(), -x.cos(), 1e-14));
        assert!(close(c.derivative_value(2).unwrap(), -x.cos(), 1e-14));
        let l = v.ln();
        assert!(close(
            l.derivative_value(3).unwrap(),
            2.0 / x.powi(3),
            1e-14
        ));
        let (sh, ch) = v.sinh_cosh();
        assert!(close(sh.derivative_value(2).unwrap(), x.sinh(), 1e-14));
        assert!(close(ch.derivative_value(3).unwrap(), x.sinh(), 1e-14));
    }

    #[test]
    fn powf_matches_power_rule() {
        let x = 0.3;
        let j = Jet::variable(x, 3).unwrap().powf(2.5);
        assert!(close(j.value(), x.powf(2.5), 1e-14));
        assert!(close(
            j.derivative_value(2).unwrap(),
            2.5 * 1.5 * x.powf(0.5),
            1e-14
        ));
        assert!(close(
            j.derivative_value(3).unwrap(),
            2.5 * 1.5 * 0.5 * x.powf(-0.5),
            1e-14
        ));
    }

    #[test]
    fn recip_and_powi() {
        let x = 1.7;
        let v = Jet::variable(x, 3).unwrap();
        let r = v.recip();
        assert!(close(
            r.derivative_value(2).unwrap(),
            2.0 / x.powi(3),
            1e-14
        ));
        let p = v.powi(-2);
        assert!(close(
            p.derivative_value(1).unwrap(),
            -2.0 / x.powi(3),
            1e-14
        ));
    }

    #[test]
    fn compose_matches_chain_rule() {
        // sin(x^2): d/dx = 2x cos(x^2), d2 = 2 cos(x^2) - 4x^2 sin(x^2)
        let x = 0.9;
        let v = Jet::variable(x, 2).unwrap();
        let inner = v.mul(&v);
        let u = x * x;
        let outer = [
            C64::new(u.sin(), 0.0),
            C64::new(u.cos(), 0.0),
            C64::new(-u.sin(), 0.0),
        ];
        let j = inner.compose(&outer).unwrap();
        assert!(close(
            j.derivative_value(1).unwrap(),
            2.0 * x * u.cos(),
            1e-14
        ));
        let d2 = 2.0 * u.cos() - 4.0 * x * x * u.sin();
        assert!(close(j.derivative_value(2).unwrap(), d2, 1e-14));
    }

    #[test]
    fn differentiate_drops_an_order_and_fails_at_zero() {
        let v = Jet::variable(0.3, 1).unwrap();
        let d = v.differentiate().unwrap();
        assert_eq!(d.order(), 0);
        assert!(matches!(
            d.differentiate(),
            Err(Error::InsufficientDerivativeOrder { .. })
        ));
        assert!(Jet::variable(0.3, MAX_ORDER + 1).is_err());
    }
}
