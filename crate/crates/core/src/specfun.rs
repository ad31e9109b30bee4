//! Hermite, associated Laguerre and Jacobi polynomials with complex
//! parameters and complex argument, evaluated by forward three-term
//! recurrence.
//!
//! Normalization is the standard one fixed by `P_0 = 1` and the usual
//! degree-one term; derivatives come from the exact index-shift rules
//!
//! * `H_n' = 2n H_{n-1}`
//! * `(L_n^a)' = -L_{n-1}^{a+1}`
//! * `(P_n^{(a,b)})' = (n+a+b+1)/2 * P_{n-1}^{(a+1,b+1)}`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolyKind {
    Hermite,
    LaguerreAssoc,
    JacobiGeneral,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyFamily {
    pub kind: PolyKind,
    pub degree: usize,
    pub alpha: C64,
    pub beta: C64,
}

impl PolyFamily {
    pub fn hermite(degree: usize) -> Self {
        Self {
            kind: PolyKind::Hermite,
            degree,
            alpha: C64::new(0.0, 0.0),
            beta: C64::new(0.0, 0.0),
        }
    }

    pub fn laguerre(degree: usize, alpha: f64) -> Self {
        Self {
            kind: PolyKind::LaguerreAssoc,
            degree,
            alpha: C64::new(alpha, 0.0),
            beta: C64::new(0.0, 0.0),
        }
    }

    pub fn jacobi(degree: usize, alpha: C64, beta: C64) -> Self {
        Self {
            kind: PolyKind::JacobiGeneral,
            degree,
            alpha,
            beta,
        }
    }

    /// `P(z)` by forward recurrence. Overflow shows up as a non-finite
    /// value; use [`PolyFamily::eval_checked`] to turn it into an error.
    pub fn eval(&self, z: C64) -> C64 {
        let one = C64::new(1.0, 0.0);
        let n = self.degree;
        if n == 0 {
            return one;
        }
        let (a, b) = (self.alpha, self.beta);
        match self.kind {
            PolyKind::Hermite => {
                let (mut prev, mut cur) = (one, z * 2.0);
                for k in 1..n {
                    let next = z * cur * 2.0 - prev * (2.0 * k as f64);
                    prev = cur;
                    cur = next;
                }
                cur
            }
            PolyKind::LaguerreAssoc => {
                let (mut prev, mut cur) = (one, one + a - z);
                for k in 1..n {
                    let kf = k as f64;
                    let next = ((a - z + (2.0 * kf + 1.0)) * cur - (a + kf) * prev) / (kf + 1.0);
                    prev = cur;
                    cur = next;
                }
                cur
            }
            PolyKind::JacobiGeneral => {
                let ab = a + b;
                let (mut prev, mut cur) = (one, (a + 1.0) + (ab + 2.0) * (z - 1.0) * 0.5);
                for k in 2..=n {
                    let kf = k as f64;
                    let s = ab + 2.0 * kf;
                    let a1 = (ab + kf) * (s - 2.0) * (2.0 * kf);
                    let a2 = (s - 1.0) * (a * a - b * b);
                    let a3 = (s - 2.0) * (s - 1.0) * s;
                    let a4 = (a + (kf - 1.0)) * (b + (kf - 1.0)) * s * 2.0;
                    if a1.norm() < 1e-300 {
                        return jacobi_explicit(n, a, b, z);
                    }
                    let next = ((a2 + a3 * z) * cur - a4 * prev) / a1;
                    prev = cur;
                    cur = next;
                }
                cur
            }
        }
    }

    /// `S^n P_n(C/S)` for a Jacobi family, with `S` and `C` given as jets.
    /// The homogeneous recurrence never forms `C/S`, so it stays accurate
    /// where that ratio is huge. `None` if the recurrence degenerates.
    pub fn jacobi_homogeneous(&self, s: &Jet, c: &Jet) -> Option<Jet> {
        if self.kind != PolyKind::JacobiGeneral {
            return None;
        }
        let order = s.order().min(c.order());
        let one = Jet::real(1.0, order).ok()?;
        if self.degree == 0 {
            return Some(one);
        }
        let (a, b) = (self.alpha, self.beta);
        let ab = a + b;
        let s2 = s.mul(s);
        let mut prev = one;
        let mut cur = s.scale(a + 1.0).add(&c.sub(s).scale((ab + 2.0) * 0.5));
        for k in 2..=self.degree {
            let kf = k as f64;
            let t = ab + 2.0 * kf;
            let a1 = (ab + kf) * (t - 2.0) * (2.0 * kf);
            let a2 = (t - 1.0) * (a * a - b * b);
            let a3 = (t - 2.0) * (t - 1.0) * t;
            let a4 = (a + (kf - 1.0)) * (b + (kf - 1.0)) * t * 2.0;
            if a1.norm() < 1e-300 {
                return None;
            }
            let lead = s.scale(a2).add(&c.scale(a3));
            let next = lead.mul(&cur).sub(&s2.mul(&prev).scale(a4)).scale(a1.inv());
            prev = cur;
            cur = next;
        }
        Some(cur)
    }

    pub fn eval_checked(&self, z: C64) -> Result<C64> {
        let v = self.eval(z);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// One application of the shift rule: `P' = factor * Q`.
    fn shifted(&self) -> Option<(C64, PolyFamily)> {
        if self.degree == 0 {
            return None;
        }
        let n = self.degree as f64;
        let lower = self.degree - 1;
        Some(match self.kind {
            PolyKind::Hermite => (C64::new(2.0 * n, 0.0), Self::hermite(lower)),
            PolyKind::LaguerreAssoc => (
                C64::new(-1.0, 0.0),
                Self {
                    degree: lower,
                    alpha: self.alpha + 1.0,
                    ..*self
                },
            ),
            PolyKind::JacobiGeneral => (
                (self.alpha + self.beta + (n + 1.0)) * 0.5,
                Self::jacobi(lower, self.alpha + 1.0, self.beta + 1.0),
            ),
        })
    }

    /// `d^order P / dz^order`, obtained by iterating the shift rule.
    pub fn eval_deriv(&self, z: C64, order: usize) -> C64 {
        let mut factor = C64::new(1.0, 0.0);
        let mut fam = *self;
        for _ in 0..order {
            match fam.shifted() {
                Some((f, lower)) => {
                    factor *= f;
                    fam = lower;
                }
                None => return C64::new(0.0, 0.0),
            }
        }
        factor * fam.eval(z)
    }

    /// `[P(z), P'(z), ..., P^(max_order)(z)]`.
    pub fn derivatives(&self, z: C64, max_order: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(max_order + 1);
        let mut factor = C64::new(1.0, 0.0);
        let mut fam = Some(*self);
        for _ in 0..=max_order {
            match fam {
                Some(f) => {
                    out.push(factor * f.eval(z));
                    fam = f.shifted().map(|(s, lower)| {
                        factor *= s;
                        lower
                    });
                }
                None => out.push(C64::new(0.0, 0.0)),
            }
        }
        out
    }
}

/// Binomial-sum form, used only where the recurrence has a vanishing
/// leading coefficient (e.g. `a + b = -2k + 2`).
fn jacobi_explicit(n: usize, a: C64, b: C64, z: C64) -> C64 {
    let lo = (z - 1.0) * 0.5;
    let hi = (z + 1.0) * 0.5;
    (0..=n)
        .map(|s| {
            binomial(a + n as f64, n - s)
                * binomial(b + n as f64, s)
                * lo.powu(s as u32)
                * hi.powu((n - s) as u32)
        })
        .sum()
}

fn binomial(top: C64, k: usize) -> C64 {
    (0..k).fold(C64::new(1.0, 0.0), |acc, j| {
        acc * (top - j as f64) / (j + 1) as f64
    })
}

/// Evaluates a polynomial family at `z`.
pub fn eval_poly(fam: &PolyFamily, z: C64) -> C64 {
    fam.eval(z)
}

/// First or higher derivative of a polynomial family at `z`.
pub fn eval_poly_deriv(fam: &PolyFamily, z: C64, order: usize) -> C64 {
    fam.eval_deriv(z, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn degree_zero_is_one_and_has_zero_derivative() {
        let f = PolyFamily::jacobi(0, C64::new(0.3, 2.0), C64::new(0.3, -2.0));
        assert_eq!(f.eval(C64::new(5.0, -1.0)), c(1.0));
        for fam in [PolyFamily::hermite(0), PolyFamily::laguerre(0, 2.0), f] {
            assert_eq!(fam.eval_deriv(c(0.4), 1), c(0.0));
        }
    }

    #[test]
    fn low_degree_values() {
        assert!((PolyFamily::hermite(2).eval(c(1.0)) - c(2.0)).norm() < 1e-15);
        assert!(PolyFamily::laguerre(1, 2.0).eval(c(3.0)).norm() < 1e-15);
        assert!((PolyFamily::hermite(2).eval_deriv(c(1.0), 1) - c(8.0)).norm() < 1e-15);
        let p1 = PolyFamily::jacobi(1, c(0.0), c(0.0));
        for z in [-2.0, 0.3, 7.0] {
            assert!((p1.eval_deriv(c(z), 1) - c(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn derivatives_vector_matches_single_calls() {
        // spherical Rosen-Morse indices at n=5, l=0.5, g=2
        let f = PolyFamily::jacobi(5, C64::new(-6.5, 2.0 / 6.5), C64::new(-6.5, -2.0 / 6.5));
        let z = C64::new(0.0, 1.3);
        let all = f.derivatives(z, 7);
        for (k, d) in all.iter().enumerate() {
            assert!((d - f.eval_deriv(z, k)).norm() <= 1e-12 * (1.0 + d.norm()));
        }
        assert_eq!(all[6], c(0.0));
    }

    #[test]
    fn degenerate_recurrence_falls_back_to_explicit_sum() {
        // a + b = -6 zeroes the k=4 recurrence denominator
        let (a, b) = (C64::new(-3.0, 0.7), C64::new(-3.0, -0.7));
        let f = PolyFamily::jacobi(5, a, b);
        let z = C64::new(0.2, 1.3);
        let v = f.eval(z);
        assert!(v.re.is_finite() && v.im.is_finite());
        assert!((v - jacobi_explicit(5, a, b, z)).norm() < 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn homogeneous_form_matches_direct_evaluation() {
        let f = PolyFamily::jacobi(6, C64::new(-7.5, 0.3), C64::new(-7.5, -0.3));
        let x = Jet::variable(0.9, 2).unwrap();
        let (s, c) = x.sin_cos();
        let hom = f
            .jacobi_homogeneous(&s, &c.scale(C64::new(0.0, 1.0)))
            .unwrap();
        let z = C64::new(0.0, 0.9f64.cos() / 0.9f64.sin());
        let direct = f.eval(z) * 0.9f64.sin().powi(6);
        assert!((hom.value() - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn overflow_is_reported() {
        let f = PolyFamily::hermite(12);
        assert_eq!(f.eval_checked(c(1e300)), Err(Error::NonFinite));
    }
}
