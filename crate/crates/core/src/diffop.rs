//! Linear differential operators with elementary-function coefficients,
//! applied exactly through jets.
//!
//! Every operator acts on a [`Func`], something that can produce a jet of
//! itself at any interior point. Composition is lazy: `A∘B` applied to `f`
//! asks `B f` for a jet one (or two) orders higher than `A` needs, so the
//! derivative budget is propagated and checked rather than approximated.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, C64, MAX_ORDER};

/// Something that can be differentiated analytically at interior points.
pub trait Func: Send + Sync {
    /// Jet of the function at `x` carrying derivatives up to `order`.
    fn jet(&self, x: f64, order: usize) -> Result<Jet>;

    fn value(&self, x: f64) -> Result<C64> {
        Ok(self.jet(x, 0)?.value())
    }
}

impl<T: Func + ?Sized> Func for Arc<T> {
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        (**self).jet(x, order)
    }
}

impl<T: Func + ?Sized> Func for &T {
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        (**self).jet(x, order)
    }
}

/// A function given by jet arithmetic on the coordinate, e.g.
/// `Analytic::new(|x| x.mul(x).scale_re(-0.5).exp())` for a Gaussian.
pub struct Analytic<F> {
    body: F,
}

impl<F> Analytic<F>
where
    F: Fn(&Jet) -> Jet + Send + Sync,
{
    pub fn new(body: F) -> Self {
        Self { body }
    }
}

impl<F> Func for Analytic<F>
where
    F: Fn(&Jet) -> Jet + Send + Sync,
{
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        let v = Jet::variable(x, order)?;
        Ok((self.body)(&v))
    }
}

/// Identically zero.
pub struct Zero;

impl Func for Zero {
    fn jet(&self, _x: f64, order: usize) -> Result<Jet> {
        Jet::zero(order)
    }
}

/// Linear combination `sum c_i f_i`.
pub struct Combination {
    pub terms: Vec<(f64, Arc<dyn Func>)>,
}

impl Func for Combination {
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        let mut acc = Jet::zero(order)?;
        for (c, f) in &self.terms {
            acc = acc.add(&f.jet(x, order)?.scale_re(*c));
        }
        Ok(acc)
    }
}

/// Elementary coefficient functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Basis {
    One,
    Pow(i32),
    Sin,
    Cos,
    Sinh,
    Cosh,
    Cot,
    Coth,
    /// `1 / sin^2 x`
    CscSq,
    /// `1 / sinh^2 x`
    CschSq,
}

impl Basis {
    fn jet(self, x: &Jet) -> Jet {
        match self {
            Basis::One => Jet::real(1.0, x.order()).expect("order validated by caller"),
            Basis::Pow(p) => x.powi(p),
            Basis::Sin => x.sin_cos().0,
            Basis::Cos => x.sin_cos().1,
            Basis::Sinh => x.sinh_cosh().0,
            Basis::Cosh => x.sinh_cosh().1,
            Basis::Cot => {
                let (s, c) = x.sin_cos();
                c.div(&s)
            }
            Basis::Coth => x.hyperbolic_logs().2.recip(),
            Basis::CscSq => x.sin_cos().0.powi(-2),
            Basis::CschSq => x.hyperbolic_logs().0.scale_re(-2.0).exp(),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::One => write!(f, "1"),
            Basis::Pow(1) => write!(f, "x"),
            Basis::Pow(p) => write!(f, "x^{p}"),
            Basis::Sin => write!(f, "sin x"),
            Basis::Cos => write!(f, "cos x"),
            Basis::Sinh => write!(f, "sinh x"),
            Basis::Cosh => write!(f, "cosh x"),
            Basis::Cot => write!(f, "cot x"),
            Basis::Coth => write!(f, "coth x"),
            Basis::CscSq => write!(f, "csc^2 x"),
            Basis::CschSq => write!(f, "csch^2 x"),
        }
    }
}

/// Coefficient function `sum_i c_i * basis_i(x)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Coef {
    pub terms: Vec<(f64, Basis)>,
}

impl Coef {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::term(c, Basis::One)
    }

    pub fn term(c: f64, b: Basis) -> Self {
        Self {
            terms: vec![(c, b)],
        }
    }

    pub fn with(mut self, c: f64, b: Basis) -> Self {
        self.terms.push((c, b));
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for (c, _) in &mut self.terms {
            *c *= s;
        }
        self
    }

    pub fn plus(mut self, other: &Coef) -> Self {
        self.terms.extend(other.terms.iter().copied());
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == 0.0)
    }

    pub fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        let v = Jet::variable(x, order)?;
        let mut acc = Jet::zero(order)?;
        for (c, b) in &self.terms {
            if *c != 0.0 {
                acc = acc.add(&b.jet(&v).scale_re(*c));
            }
        }
        if !acc.is_finite() {
            return Err(Error::EvaluationAtSingularity(x));
        }
        Ok(acc)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x, 0)?.value().re)
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, b)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{b}")?;
        }
        Ok(())
    }
}

/// `a(x) d/dx + b(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstOrderOp {
    pub a: Coef,
    pub b: Coef,
    pub label: String,
}

impl FirstOrderOp {
    pub fn new(a: Coef, b: Coef, label: impl Into<String>) -> Self {
        Self {
            a,
            b,
            label: label.into(),
        }
    }

    pub fn apply_at(&self, f: &dyn Func, x: f64, order: usize) -> Result<Jet> {
        let fj = f.jet(x, order + 1)?;
        let a = self.a.jet(x, order)?;
        let b = self.b.jet(x, order)?;
        Ok(a.mul(&fj.differentiate()?).add(&b.mul(&fj)).truncate(order))
    }

    /// Sum of two first-order operators.
    pub fn plus(&self, other: &FirstOrderOp) -> Self {
        Self {
            a: self.a.clone().plus(&other.a),
            b: self.b.clone().plus(&other.b),
            label: format!("{} + {}", self.label, other.label),
        }
    }

    /// Number of scalar coefficients (for mutation tests).
    pub fn coefficient_count(&self) -> usize {
        self.a.terms.len() + self.b.terms.len()
    }

    /// Copy with the `index`-th scalar coefficient shifted by `delta`;
    /// `a` terms come first, then `b` terms.
    pub fn perturbed(&self, index: usize, delta: f64) -> Self {
        let mut out = self.clone();
        let na = out.a.terms.len();
        if index < na {
            out.a.terms[index].0 += delta;
        } else {
            out.b.terms[index - na].0 += delta;
        }
        out.label = format!("{} (coef {index} {delta:+e})", self.label);
        out
    }
}

/// `c2(x) d²/dx² + c1(x) d/dx + c0(x)`; used for Hamiltonians.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondOrderOp {
    pub c2: Coef,
    pub c1: Coef,
    pub c0: Coef,
    pub label: String,
}

impl SecondOrderOp {
    pub fn apply_at(&self, f: &dyn Func, x: f64, order: usize) -> Result<Jet> {
        let fj = f.jet(x, order + 2)?;
        let d1 = fj.differentiate()?;
        let d2 = d1.differentiate()?;
        let mut out = self.c0.jet(x, order)?.mul(&fj);
        if !self.c1.is_zero() {
            out = out.add(&self.c1.jet(x, order)?.mul(&d1));
        }
        out = out.add(&self.c2.jet(x, order)?.mul(&d2));
        Ok(out.truncate(order))
    }
}

/// Coordinate rescaling `(S(alpha) f)(x) = f(alpha x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingOp {
    pub alpha: f64,
}

impl ScalingOp {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self { alpha })
        } else {
            Err(Error::InvalidParameters(format!(
                "scaling factor must be positive, got {alpha}"
            )))
        }
    }

    pub fn apply_at(&self, f: &dyn Func, x: f64, order: usize) -> Result<Jet> {
        Ok(f.jet(self.alpha * x, order)?.rescale_argument(self.alpha))
    }
}

/// Operator expression tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Op {
    Identity,
    /// Multiplication by a function.
    Mul(Coef),
    First(FirstOrderOp),
    Second(SecondOrderOp),
    Scale(ScalingOp),
    /// `ops[0] ∘ ops[1] ∘ ...`; the last entry acts first.
    Compose(Vec<Op>),
    /// `sum_i c_i op_i`.
    Sum(Vec<(f64, Op)>),
}

impl Op {
    pub fn constant(c: f64) -> Self {
        Op::Sum(vec![(c, Op::Identity)])
    }

    /// `self ∘ inner`.
    pub fn after(self, inner: Op) -> Self {
        match self {
            Op::Compose(mut v) => {
                v.push(inner);
                Op::Compose(v)
            }
            other => Op::Compose(vec![other, inner]),
        }
    }

    pub fn plus(self, other: Op) -> Self {
        self.plus_scaled(1.0, other)
    }

    pub fn minus(self, other: Op) -> Self {
        self.plus_scaled(-1.0, other)
    }

    pub fn plus_scaled(self, c: f64, other: Op) -> Self {
        match self {
            Op::Sum(mut v) => {
                v.push((c, other));
                Op::Sum(v)
            }
            first => Op::Sum(vec![(1.0, first), (c, other)]),
        }
    }

    /// `self + c·1`.
    pub fn shifted(self, c: f64) -> Self {
        self.plus_scaled(c, Op::Identity)
    }

    /// `[self, other] = self∘other − other∘self`.
    pub fn commutator(self, other: Op) -> Self {
        let ab = self.clone().after(other.clone());
        let ba = other.after(self);
        ab.minus(ba)
    }

    /// Derivative orders of the input consumed by this operator.
    pub fn derivative_order(&self) -> usize {
        match self {
            Op::Identity | Op::Mul(_) | Op::Scale(_) => 0,
            Op::First(_) => 1,
            Op::Second(_) => 2,
            Op::Compose(v) => v.iter().map(Op::derivative_order).sum(),
            Op::Sum(v) => v
                .iter()
                .map(|(_, o)| o.derivative_order())
                .max()
                .unwrap_or(0),
        }
    }

    /// Jet of `(self f)` at `x` up to `order`.
    pub fn apply_at(&self, f: &dyn Func, x: f64, order: usize) -> Result<Jet> {
        let need = order + self.derivative_order();
        if need > MAX_ORDER {
            return Err(Error::InsufficientDerivativeOrder {
                requested: need,
                available: MAX_ORDER,
            });
        }
        match self {
            Op::Identity => f.jet(x, order),
            Op::Mul(c) => Ok(c.jet(x, order)?.mul(&f.jet(x, order)?)),
            Op::First(op) => op.apply_at(f, x, order),
            Op::Second(op) => op.apply_at(f, x, order),
            Op::Scale(op) => op.apply_at(f, x, order),
            Op::Compose(ops) => apply_chain(ops, f, x, order),
            Op::Sum(terms) => {
                let mut acc = Jet::zero(order)?;
                for (c, op) in terms {
                    acc = acc.add(&op.apply_at(f, x, order)?.scale_re(*c));
                }
                Ok(acc)
            }
        }
    }

    /// Lazily applied operator, itself a [`Func`].
    pub fn apply<'a>(&'a self, f: &'a dyn Func) -> Applied<'a> {
        Applied { op: self, f }
    }
}

fn apply_chain(ops: &[Op], f: &dyn Func, x: f64, order: usize) -> Result<Jet> {
    match ops.split_first() {
        None => f.jet(x, order),
        Some((head, rest)) => head.apply_at(&Chain { ops: rest, f }, x, order),
    }
}

struct Chain<'a> {
    ops: &'a [Op],
    f: &'a dyn Func,
}

impl Func for Chain<'_> {
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        apply_chain(self.ops, self.f, x, order)
    }
}

impl From<FirstOrderOp> for Op {
    fn from(op: FirstOrderOp) -> Self {
        Op::First(op)
    }
}

impl From<SecondOrderOp> for Op {
    fn from(op: SecondOrderOp) -> Self {
        Op::Second(op)
    }
}

impl From<ScalingOp> for Op {
    fn from(op: ScalingOp) -> Self {
        Op::Scale(op)
    }
}

pub struct Applied<'a> {
    op: &'a Op,
    f: &'a dyn Func,
}

impl Func for Applied<'_> {
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        self.op.apply_at(self.f, x, order)
    }
}

/// Owned counterpart of [`Applied`], for building chains that outlive
/// their inputs.
pub struct OwnedApplied {
    pub op: Op,
    pub f: Arc<dyn Func>,
}

impl Func for OwnedApplied {
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        self.op.apply_at(self.f.as_ref(), x, order)
    }
}

/// Applies an operator (or composition) to `f` at `x`, returning the value.
pub fn apply_op(op: &Op, f: &dyn Func, x: f64) -> Result<C64> {
    Ok(op.apply_at(f, x, 0)?.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> Analytic<impl Fn(&Jet) -> Jet + Send + Sync> {
        Analytic::new(|x: &Jet| x.mul(x).scale_re(-0.5).exp())
    }

    #[test]
    fn first_order_op_on_constant_gives_b() {
        let op = FirstOrderOp::new(
            Coef::term(1.0, Basis::Pow(1)),
            Coef::term(-0.5, Basis::Pow(1)).with(2.0, Basis::One),
            "D",
        );
        let one = Analytic::new(|x: &Jet| Jet::real(1.0, x.order()).unwrap());
        for x in [0.1, 1.0, 3.0] {
            let v = apply_op(&Op::First(op.clone()), &one, x).unwrap();
            assert!((v.re - (2.0 - 0.5 * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_composition_leaves_function_unchanged() {
        let f = gaussian();
        let op = Op::Identity.after(Op::Identity);
        let x = 0.37;
        let a = op.apply_at(&f, x, 3).unwrap();
        let b = f.jet(x, 3).unwrap();
        for k in 0..=3 {
            assert!((a.coefficient(k) - b.coefficient(k)).norm() < 1e-16);
        }
    }

    #[test]
    fn scaling_group_property() {
        let f = gaussian();
        let s =
            Op::Scale(ScalingOp::new(2.5).unwrap()).after(Op::Scale(ScalingOp::new(0.4).unwrap()));
        let st =
            Op::Scale(ScalingOp::new(1.7).unwrap()).after(Op::Scale(ScalingOp::new(0.3).unwrap()));
        let direct = Op::Scale(ScalingOp::new(1.7 * 0.3).unwrap());
        for x in [-1.0, 0.2, 1.4] {
            let a = s.apply_at(&f, x, 2).unwrap();
            let b = f.jet(x, 2).unwrap();
            let c = st.apply_at(&f, x, 2).unwrap();
            let d = direct.apply_at(&f, x, 2).unwrap();
            for k in 0..=2 {
                assert!((a.coefficient(k) - b.coefficient(k)).norm() < 1e-14);
                assert!((c.coefficient(k) - d.coefficient(k)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn second_order_op_matches_hand_derivative() {
        // -f'' + x^2 f on a Gaussian = (1 - x^2 + x^2) e^{-x^2/2} = e^{-x^2/2}
        let h = SecondOrderOp {
            c2: Coef::constant(-1.0),
            c1: Coef::zero(),
            c0: Coef::term(1.0, Basis::Pow(2)),
            label: "H".into(),
        };
        let f = gaussian();
        for x in [-2.0, 0.0, 0.9] {
            let v = apply_op(&Op::Second(h.clone()), &f, x).unwrap();
            assert!((v.re - (-0.5 * x * x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_budget_is_enforced() {
        let d = Op::First(FirstOrderOp::new(Coef::constant(1.0), Coef::zero(), "d"));
        let deep = Op::Compose(vec![d; MAX_ORDER + 1]);
        let f = gaussian();
        assert!(matches!(
            deep.apply_at(&f, 0.1, 0),
            Err(Error::InsufficientDerivativeOrder { .. })
        ));
    }

    #[test]
    fn singular_coefficient_is_reported() {
        let c = Coef::term(1.0, Basis::CscSq);
        assert_eq!(c.jet(0.0, 1), Err(Error::EvaluationAtSingularity(0.0)));
    }
}
