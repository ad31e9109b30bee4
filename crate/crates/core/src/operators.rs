//! Concrete operators of the solvable models: level-dependent intertwiners,
//! the coordinate rescaling and its composite, oscillator ladders, ladders
//! built from a sinusoidal coordinate, and Calogero–Sutherland supercharges.
//!
//! Also declares the operator identities that `verify` certifies, as
//! [`RelationSpec`] values pairing two operator trees.

use serde::Serialize;

use crate::diffop::{Basis, Coef, FirstOrderOp, Op, ScalingOp};
use crate::error::{Error, Result};
use crate::models::{rosen_morse_hyperbolic_indices, rosen_morse_spherical_indices, Model};

pub use crate::diffop::apply_op;

/// Direction of a ladder step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// Which Rosen–Morse variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RosenMorseKind {
    Spherical,
    Hyperbolic,
}

fn x() -> Basis {
    Basis::Pow(1)
}

/// `r d/dr − g r/(n+l+2) + (n+l+2)`.
pub fn hydrogen_d(model: &Model, n: usize) -> Result<FirstOrderOp> {
    let Model::HydrogenRadial { g, l, .. } = *model else {
        return Err(Error::UnsupportedModel(model.id().to_string()));
    };
    let k = n as f64 + l as f64 + 2.0;
    Ok(FirstOrderOp::new(
        Coef::term(1.0, x()),
        Coef::term(-g / k, x()).with(k, Basis::One),
        format!("intertwiner[hydrogen n={n}]"),
    ))
}

/// Scale factor `(n+l+1)/(n+l+2)` relating the coupling flow to a
/// coordinate rescaling.
pub fn hydrogen_scale_factor(model: &Model, n: usize) -> Result<f64> {
    let Model::HydrogenRadial { l, .. } = *model else {
        return Err(Error::UnsupportedModel(model.id().to_string()));
    };
    let nn = n as f64 + l as f64 + 1.0;
    Ok(nn / (nn + 1.0))
}

/// `D_n ∘ S(α_n)`: rescale first, then apply the intertwiner.
pub fn hydrogen_d_tilde(model: &Model, n: usize) -> Result<Op> {
    let d = hydrogen_d(model, n)?;
    let s = ScalingOp::new(hydrogen_scale_factor(model, n)?)?;
    Ok(Op::Compose(vec![d.into(), s.into()]))
}

/// Rosen–Morse intertwiner, assembled from the Jacobi indices at the
/// flowed coupling.
pub fn rosen_morse_d(kind: RosenMorseKind, model: &Model, n: usize) -> Result<FirstOrderOp> {
    let (g, l) = match (kind, *model) {
        (RosenMorseKind::Spherical, Model::RosenMorseSpherical { g, l })
        | (RosenMorseKind::Hyperbolic, Model::RosenMorseHyperbolic { g, l }) => (g, l),
        _ => {
            return Err(Error::UnsupportedModel(format!(
                "{} is not {kind:?} Rosen-Morse",
                model.id()
            )))
        }
    };
    let nn = n as f64 + l + 1.0;
    let g_flow = g * nn / (nn + 1.0);
    match kind {
        RosenMorseKind::Spherical => {
            let (ap, am) = rosen_morse_spherical_indices(g_flow, nn);
            let sin_c = (ap - am) / crate::jet::C64::new(0.0, 2.0);
            let cos_c = (ap + am) * 0.5;
            let tol = 1e-12 * (1.0 + sin_c.norm() + cos_c.norm());
            if sin_c.im.abs() > tol || cos_c.im.abs() > tol {
                return Err(Error::InvalidLevel(format!(
                    "complex intertwiner coefficients at n={n}"
                )));
            }
            Ok(FirstOrderOp::new(
                Coef::term(-1.0, Basis::Sin),
                Coef::term(sin_c.re, Basis::Sin).with(cos_c.re, Basis::Cos),
                format!("intertwiner[rm-sph n={n}]"),
            ))
        }
        RosenMorseKind::Hyperbolic => {
            let shifted = Model::RosenMorseHyperbolic { g: g_flow, l };
            if shifted.validated().is_err() || !shifted.bound_state_count().contains(n) {
                return Err(Error::InvalidLevel(format!(
                    "n={n} is not bound at the flowed coupling {g_flow}"
                )));
            }
            let (bp, bm) = rosen_morse_hyperbolic_indices(g_flow, nn);
            Ok(FirstOrderOp::new(
                Coef::term(-1.0, Basis::Sinh),
                Coef::term(0.5 * (bp - bm), Basis::Sinh).with(0.5 * (bp + bm), Basis::Cosh),
                format!("intertwiner[rm-hyp n={n}]"),
            ))
        }
    }
}

/// Level-`n` intertwiner of any model with a parameter flow.
pub fn intertwiner(model: &Model, n: usize) -> Result<FirstOrderOp> {
    match model {
        Model::HydrogenRadial { .. } => hydrogen_d(model, n),
        Model::RosenMorseSpherical { .. } => rosen_morse_d(RosenMorseKind::Spherical, model, n),
        Model::RosenMorseHyperbolic { .. } => rosen_morse_d(RosenMorseKind::Hyperbolic, model, n),
        other => Err(Error::UnsupportedModel(other.id().to_string())),
    }
}

fn oscillator(model: &Model) -> Result<(f64, f64)> {
    match *model {
        Model::HarmonicOscillator { m, omega } => Ok((m, omega)),
        other => Err(Error::UnsupportedModel(other.id().to_string())),
    }
}

/// `a± = ∓(2mω)^{-1/2} (d/dx ∓ mωx)`.
pub fn ho_ladder(sign: Sign, model: &Model) -> Result<FirstOrderOp> {
    let (m, omega) = oscillator(model)?;
    let c = (2.0 * m * omega).sqrt().recip();
    Ok(FirstOrderOp::new(
        Coef::constant(-sign.value() * c),
        Coef::term(c * m * omega, x()),
        format!("a{}", sign.symbol()),
    ))
}

/// `x d/dx ∓ mωx² ± (n+½) + ½`, the two-step oscillator ladder at level `n`.
pub fn ho_dn(sign: Sign, model: &Model, n: usize) -> Result<FirstOrderOp> {
    let (m, omega) = oscillator(model)?;
    let s = sign.value();
    Ok(FirstOrderOp::new(
        Coef::term(1.0, x()),
        Coef::term(-s * m * omega, Basis::Pow(2)).with(s * (n as f64 + 0.5) + 0.5, Basis::One),
        format!("two-step{}[n={n}]", sign.symbol()),
    ))
}

/// `x d/dx ∓ mωx² ± H/ω + ½`, the level-independent second-order form.
pub fn ho_dhat(sign: Sign, model: &Model) -> Result<Op> {
    let (m, omega) = oscillator(model)?;
    let s = sign.value();
    let first = FirstOrderOp::new(
        Coef::term(1.0, x()),
        Coef::term(-s * m * omega, Basis::Pow(2)).with(0.5, Basis::One),
        "x d - mwx^2 + 1/2",
    );
    Ok(Op::from(first).plus_scaled(s / omega, model.hamiltonian().into()))
}

/// Evaluates `sum_k c[k] E^k`.
fn poly_at(c: &[f64], e: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * e + ck)
}

/// Roots `(α+, α−)` of `t² − R1 t − R0 = 0`.
pub fn ladder_shifts(r1: &[f64], r0: &[f64], energy: f64) -> Result<(f64, f64)> {
    let p = poly_at(r1, energy);
    let q = poly_at(r0, energy);
    let disc = p * p + 4.0 * q;
    if disc < 0.0 {
        return Err(Error::InvalidParameters(format!(
            "ladder shifts are complex at E={energy}"
        )));
    }
    let root = disc.sqrt();
    Ok((0.5 * (p + root), 0.5 * (p - root)))
}

/// `D±(E) = [H,η] − η α∓(E) + R_{-1}(E)/α±(E)`, given the commutator
/// `[H,η]` as a first-order operator.
pub fn sinusoidal_ladder(
    commutator: &FirstOrderOp,
    eta: &Coef,
    r1: &[f64],
    r0: &[f64],
    r_minus1: &[f64],
    energy: f64,
    sign: Sign,
) -> Result<FirstOrderOp> {
    let (ap, am) = ladder_shifts(r1, r0, energy)?;
    let (this, other) = match sign {
        Sign::Plus => (ap, am),
        Sign::Minus => (am, ap),
    };
    let rm = poly_at(r_minus1, energy);
    let mut b = commutator.b.clone().plus(&eta.clone().scaled(-other));
    if rm != 0.0 {
        if this.abs() <= f64::EPSILON * (1.0 + ap.abs().max(am.abs())) {
            return Err(Error::DivisionByZeroAlpha);
        }
        b = b.with(rm / this, Basis::One);
    }
    Ok(FirstOrderOp::new(
        commutator.a.clone(),
        b,
        format!("ladder{}[E={energy}]", sign.symbol()),
    ))
}

/// `[H_CS, cos x] = sin x d/dx + cos x / 2`.
pub fn cs_cos_commutator() -> FirstOrderOp {
    FirstOrderOp::new(
        Coef::term(1.0, Basis::Sin),
        Coef::term(0.5, Basis::Cos),
        "[H,cos]",
    )
}

/// Closure polynomials `(R1, R0, R_{-1})` of the Calogero–Sutherland
/// sinusoidal coordinate, as coefficient lists in `E`.
pub fn cs_closure_polynomials() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (vec![1.0], vec![-0.25, 2.0], vec![])
}

/// Calogero–Sutherland ladder `D±(E_n) = sin x d/dx ± (n+g) cos x`.
pub fn cs_ladder(model: &Model, n: usize, sign: Sign) -> Result<FirstOrderOp> {
    let Model::CalogeroSutherland { .. } = model else {
        return Err(Error::UnsupportedModel(model.id().to_string()));
    };
    let (r1, r0, rm) = cs_closure_polynomials();
    let mut op = sinusoidal_ladder(
        &cs_cos_commutator(),
        &Coef::term(1.0, Basis::Cos),
        &r1,
        &r0,
        &rm,
        model.energy_formula(n),
        sign,
    )?;
    op.label = format!("cs-ladder{}[n={n}]", sign.symbol());
    Ok(op)
}

/// `(A, A†) = (d/dx − g cot x, −d/dx − g cot x)`.
pub fn cs_supercharges(g: f64) -> Result<(FirstOrderOp, FirstOrderOp)> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameters(format!(
            "supercharges need g > 0, got {g}"
        )));
    }
    let cot = Coef::term(-g, Basis::Cot);
    Ok((
        FirstOrderOp::new(Coef::constant(1.0), cot.clone(), format!("A[g={g}]")),
        FirstOrderOp::new(Coef::constant(-1.0), cot, format!("A+[g={g}]")),
    ))
}

/// `½ A†A + g²/2` (`lower = false`) or `½ A A† + g²/2` (`lower = true`).
pub fn cs_partner_hamiltonian(g: f64, lower: bool) -> Result<Op> {
    let (a, ad) = cs_supercharges(g)?;
    let product = if lower {
        Op::Compose(vec![a.into(), ad.into()])
    } else {
        Op::Compose(vec![ad.into(), a.into()])
    };
    Ok(Op::Sum(vec![(0.5, product), (0.5 * g * g, Op::Identity)]))
}

/// A declared identity `lhs ≡ rhs` at concrete parameters and level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationSpec {
    pub id: String,
    pub model: Model,
    pub n: usize,
    pub lhs: Op,
    pub rhs: Op,
    /// Model whose eigenstates are the natural test functions.
    pub test_model: Model,
    /// Typical energy magnitude, used to scale residuals.
    pub energy_scale: f64,
}

fn ham(model: &Model) -> Op {
    model.hamiltonian().into()
}

impl RelationSpec {
    pub fn derivative_order(&self) -> usize {
        self.lhs.derivative_order().max(self.rhs.derivative_order())
    }

    /// `H(ν) D = D (H(ν_n) + ε) + Q (H(ν_n) − E_n(ν_n))` with the model's
    /// own intertwiner.
    pub fn spectral(model: &Model, n: usize) -> Result<Self> {
        Self::spectral_with(model, n, intertwiner(model, n)?)
    }

    /// Same relation with a caller-supplied intertwiner (used for mutation
    /// tests).
    pub fn spectral_with(model: &Model, n: usize, d: FirstOrderOp) -> Result<Self> {
        let flow = model.parameter_flow(n)?;
        let h_shift = ham(&flow.shifted);
        let d: Op = d.into();
        let lhs = ham(model).after(d.clone());
        let rhs = d
            .after(h_shift.clone().shifted(flow.epsilon))
            .plus(Op::Mul(flow.q.clone()).after(h_shift.shifted(-flow.energy_at_shifted)));
        let energy_scale = flow
            .energy_at_shifted
            .abs()
            .max(model.energy_formula(n + 1).abs())
            .max(flow.epsilon.abs());
        Ok(Self {
            id: format!("{}.spectral-intertwining", model.id()),
            model: *model,
            n,
            lhs,
            rhs,
            test_model: flow.shifted,
            energy_scale,
        })
    }

    /// `H(m,g) D̃ = D̃ H(m/α², g) + 2 S(α) (H(m/α², g) − E)`.
    pub fn hydrogen_composite(model: &Model, n: usize) -> Result<Self> {
        let Model::HydrogenRadial { m, g, l } = *model else {
            return Err(Error::UnsupportedModel(model.id().to_string()));
        };
        let alpha = hydrogen_scale_factor(model, n)?;
        let heavy = Model::HydrogenRadial {
            m: m / (alpha * alpha),
            g,
            l,
        };
        let e = heavy.energy_formula(n);
        let dt = hydrogen_d_tilde(model, n)?;
        let lhs = ham(model).after(dt.clone());
        let s: Op = ScalingOp::new(alpha)?.into();
        let rhs = dt
            .after(ham(&heavy))
            .plus_scaled(2.0, s.after(ham(&heavy).shifted(-e)));
        Ok(Self {
            id: "hydrogen.composite-intertwining".into(),
            model: *model,
            n,
            lhs,
            rhs,
            test_model: heavy,
            energy_scale: e.abs().max(model.energy_formula(n + 1).abs()),
        })
    }

    /// `[H, a±] = ±ω a±`.
    pub fn ho_ladder(model: &Model, sign: Sign) -> Result<Self> {
        let (_, omega) = oscillator(model)?;
        let a: Op = ho_ladder(sign, model)?.into();
        Ok(Self {
            id: format!("ho.ladder-commutator{}", sign.symbol()),
            model: *model,
            n: 0,
            lhs: ham(model).commutator(a.clone()),
            rhs: Op::Sum(vec![(sign.value() * omega, a)]),
            test_model: *model,
            energy_scale: omega,
        })
    }

    /// `[H, D_n^{(±)}] = ±2ω D_n^{(±)} + 2 (H − E_n)`.
    pub fn ho_two_step(model: &Model, n: usize, sign: Sign) -> Result<Self> {
        let (_, omega) = oscillator(model)?;
        let d: Op = ho_dn(sign, model, n)?.into();
        let e = model.energy_formula(n);
        Ok(Self {
            id: format!("ho.two-step-commutator{}", sign.symbol()),
            model: *model,
            n,
            lhs: ham(model).commutator(d.clone()),
            rhs: Op::Sum(vec![
                (2.0 * sign.value() * omega, d),
                (2.0, ham(model).shifted(-e)),
            ]),
            test_model: *model,
            energy_scale: e.abs().max(omega),
        })
    }

    /// `[H,[H,cos]] = [H,cos] + cos (2H − ¼)`.
    pub fn cs_closure(model: &Model) -> Result<Self> {
        let Model::CalogeroSutherland { g } = *model else {
            return Err(Error::UnsupportedModel(model.id().to_string()));
        };
        let cos = Op::Mul(Coef::term(1.0, Basis::Cos));
        let inner = ham(model).commutator(cos.clone());
        let lhs = ham(model).commutator(inner.clone());
        let rhs = inner.plus(cos.after(Op::Sum(vec![(2.0, ham(model)), (-0.25, Op::Identity)])));
        Ok(Self {
            id: "cs.closure".into(),
            model: *model,
            n: 0,
            lhs,
            rhs,
            test_model: *model,
            energy_scale: 0.5 * g * g,
        })
    }

    /// `[H, D±(E_n)] = α±(E_n) D±(E_n) + 2 cos x (H − E_n)`.
    pub fn cs_ladder(model: &Model, n: usize, sign: Sign) -> Result<Self> {
        let d = cs_ladder(model, n, sign)?;
        let (r1, r0, _) = cs_closure_polynomials();
        let e = model.energy_formula(n);
        let (ap, am) = ladder_shifts(&r1, &r0, e)?;
        let alpha = if sign == Sign::Plus { ap } else { am };
        let d: Op = d.into();
        let rhs = Op::Sum(vec![(alpha, d.clone())])
            .plus(Op::Mul(Coef::term(2.0, Basis::Cos)).after(ham(model).shifted(-e)));
        Ok(Self {
            id: format!("cs.ladder-commutator{}", sign.symbol()),
            model: *model,
            n,
            lhs: ham(model).commutator(d),
            rhs,
            test_model: *model,
            energy_scale: e.abs().max(1.0),
        })
    }

    /// `H_−(g) ≡ H_+(g+1)`; the energy offset is fitted by the checker.
    pub fn cs_shape_invariance(model: &Model) -> Result<Self> {
        let Model::CalogeroSutherland { g } = *model else {
            return Err(Error::UnsupportedModel(model.id().to_string()));
        };
        Ok(Self {
            id: "cs.shape-invariance".into(),
            model: *model,
            n: 0,
            lhs: cs_partner_hamiltonian(g, true)?,
            rhs: cs_partner_hamiltonian(g + 1.0, false)?,
            test_model: Model::CalogeroSutherland { g: g + 1.0 },
            energy_scale: 0.5 * (g + 1.0).powi(2),
        })
    }
}
