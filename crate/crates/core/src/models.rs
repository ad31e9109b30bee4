//! The exactly solvable systems: harmonic oscillator, single-particle
//! Calogero–Sutherland, radial hydrogen, and the spherical/hyperbolic
//! Rosen–Morse potentials.
//!
//! Eigenfunctions are assembled as `exp(log-prefactor) * P(ξ(x))` on jets,
//! so `ψ, ψ', ψ'', ...` are exact up to rounding. Normalization constants
//! are computed numerically on a truncated, endpoint-graded quadrature.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffop::{Basis, Coef, Func, SecondOrderOp};
use crate::error::{Error, Result};
use crate::jet::{Jet, C64};
use crate::quadrature::{PanelSpec, Quadrature};
use crate::specfun::PolyFamily;

/// Relative interior margin kept away from singular endpoints.
pub const INTERIOR_MARGIN: f64 = 1e-8;

/// Largest coordinate used for the hyperbolic well.
pub const HYPERBOLIC_X_MAX: f64 = 700.0;

/// Tails are cut where the envelope drops below this fraction of its peak.
pub const TAIL_CUTOFF: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "ho")]
    HarmonicOscillator,
    #[serde(rename = "cs")]
    CalogeroSutherland,
    #[serde(rename = "hydrogen")]
    HydrogenRadial,
    #[serde(rename = "rm-sph")]
    RosenMorseSpherical,
    #[serde(rename = "rm-hyp")]
    RosenMorseHyperbolic,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::HarmonicOscillator,
        ModelId::CalogeroSutherland,
        ModelId::HydrogenRadial,
        ModelId::RosenMorseSpherical,
        ModelId::RosenMorseHyperbolic,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ModelId::HarmonicOscillator => "ho",
            ModelId::CalogeroSutherland => "cs",
            ModelId::HydrogenRadial => "hydrogen",
            ModelId::RosenMorseSpherical => "rm-sph",
            ModelId::RosenMorseHyperbolic => "rm-hyp",
        }
    }

    /// Whether the model carries a level-dependent parameter flow.
    pub fn has_parameter_flow(self) -> bool {
        matches!(
            self,
            ModelId::HydrogenRadial | ModelId::RosenMorseSpherical | ModelId::RosenMorseHyperbolic
        )
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ho" | "harmonic-oscillator" => ModelId::HarmonicOscillator,
            "cs" | "calogero-sutherland" => ModelId::CalogeroSutherland,
            "hydrogen" => ModelId::HydrogenRadial,
            "rm-sph" | "rosen-morse-spherical" => ModelId::RosenMorseSpherical,
            "rm-hyp" | "rosen-morse-hyperbolic" => ModelId::RosenMorseHyperbolic,
            other => {
                return Err(Error::InvalidParameters(format!("unknown model '{other}'")));
            }
        })
    }
}

/// A model together with its parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum Model {
    #[serde(rename = "ho")]
    HarmonicOscillator { m: f64, omega: f64 },
    #[serde(rename = "cs")]
    CalogeroSutherland { g: f64 },
    #[serde(rename = "hydrogen")]
    HydrogenRadial { m: f64, g: f64, l: u32 },
    #[serde(rename = "rm-sph")]
    RosenMorseSpherical { g: f64, l: f64 },
    #[serde(rename = "rm-hyp")]
    RosenMorseHyperbolic { g: f64, l: f64 },
}

/// Number of discrete levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundStates {
    Finite(usize),
    Unbounded,
}

impl BoundStates {
    pub fn contains(self, n: usize) -> bool {
        match self {
            BoundStates::Finite(c) => n < c,
            BoundStates::Unbounded => true,
        }
    }

    /// Largest admissible level not exceeding `n_max`, if any.
    pub fn clamp(self, n_max: usize) -> Option<usize> {
        match self {
            BoundStates::Finite(0) => None,
            BoundStates::Finite(c) => Some(n_max.min(c - 1)),
            BoundStates::Unbounded => Some(n_max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Weight {
    Unit,
    /// `r^2 dr`, the three-dimensional radial measure.
    RadialSquare,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainSpec {
    pub lo: f64,
    pub hi: f64,
    pub weight: Weight,
}

impl DomainSpec {
    pub fn weight_at(&self, x: f64) -> f64 {
        match self.weight {
            Weight::Unit => 1.0,
            Weight::RadialSquare => x * x,
        }
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

/// Level-dependent parameter shift and the constants entering the
/// spectral intertwining relation at level `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterFlow {
    pub shifted: Model,
    pub epsilon: f64,
    pub energy_at_shifted: f64,
    /// Multiplication operator paired with `(H(shifted) - E)`.
    pub q: Coef,
}

impl Model {
    pub fn harmonic_oscillator(m: f64, omega: f64) -> Result<Self> {
        Self::HarmonicOscillator { m, omega }.validated()
    }

    pub fn calogero_sutherland(g: f64) -> Result<Self> {
        Self::CalogeroSutherland { g }.validated()
    }

    pub fn hydrogen(m: f64, g: f64, l: u32) -> Result<Self> {
        Self::HydrogenRadial { m, g, l }.validated()
    }

    pub fn rosen_morse_spherical(g: f64, l: f64) -> Result<Self> {
        Self::RosenMorseSpherical { g, l }.validated()
    }

    pub fn rosen_morse_hyperbolic(g: f64, l: f64) -> Result<Self> {
        Self::RosenMorseHyperbolic { g, l }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        let finite = self.params().iter().all(|(_, v)| v.is_finite());
        if !finite {
            return bad(format!("non-finite parameter in {self:?}"));
        }
        match self {
            Model::HarmonicOscillator { m, omega } if m <= 0.0 || omega <= 0.0 => bad(format!(
                "oscillator needs m > 0 and omega > 0, got m={m}, omega={omega}"
            )),
            Model::CalogeroSutherland { g } if g <= 0.0 => {
                bad(format!("Calogero-Sutherland needs g > 0, got {g}"))
            }
            Model::HydrogenRadial { m, g, .. } if m <= 0.0 || g <= 0.0 => {
                bad(format!("hydrogen needs m > 0 and g > 0, got m={m}, g={g}"))
            }
            Model::RosenMorseSpherical { g, l } if g < 0.0 || l < 0.0 => bad(format!(
                "spherical Rosen-Morse needs g >= 0 and l >= 0, got g={g}, l={l}"
            )),
            Model::RosenMorseHyperbolic { g, l } if l < 0.0 || g < (l + 1.0).powi(2) => bad(
                format!("hyperbolic Rosen-Morse needs l >= 0 and g >= (l+1)^2, got g={g}, l={l}"),
            ),
            ok => Ok(ok),
        }
    }

    pub fn id(&self) -> ModelId {
        match self {
            Model::HarmonicOscillator { .. } => ModelId::HarmonicOscillator,
            Model::CalogeroSutherland { .. } => ModelId::CalogeroSutherland,
            Model::HydrogenRadial { .. } => ModelId::HydrogenRadial,
            Model::RosenMorseSpherical { .. } => ModelId::RosenMorseSpherical,
            Model::RosenMorseHyperbolic { .. } => ModelId::RosenMorseHyperbolic,
        }
    }

    /// Named parameter values, in a fixed order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Model::HarmonicOscillator { m, omega } => vec![("m", m), ("omega", omega)],
            Model::CalogeroSutherland { g } => vec![("g", g)],
            Model::HydrogenRadial { m, g, l } => vec![("m", m), ("g", g), ("l", l as f64)],
            Model::RosenMorseSpherical { g, l } | Model::RosenMorseHyperbolic { g, l } => {
                vec![("g", g), ("l", l)]
            }
        }
    }

    /// Coupling `g` (not defined for the oscillator).
    pub fn coupling(&self) -> Option<f64> {
        match *self {
            Model::HarmonicOscillator { .. } => None,
            Model::CalogeroSutherland { g }
            | Model::HydrogenRadial { g, .. }
            | Model::RosenMorseSpherical { g, .. }
            | Model::RosenMorseHyperbolic { g, .. } => Some(g),
        }
    }

    /// Same model with coupling replaced.
    pub fn with_coupling(&self, g: f64) -> Self {
        match *self {
            Model::HarmonicOscillator { .. } => *self,
            Model::CalogeroSutherland { .. } => Model::CalogeroSutherland { g },
            Model::HydrogenRadial { m, l, .. } => Model::HydrogenRadial { m, g, l },
            Model::RosenMorseSpherical { l, .. } => Model::RosenMorseSpherical { g, l },
            Model::RosenMorseHyperbolic { l, .. } => Model::RosenMorseHyperbolic { g, l },
        }
    }

    /// `n + l + 1` for the models where it appears.
    fn principal(&self, n: usize) -> f64 {
        match *self {
            Model::HydrogenRadial { l, .. } => n as f64 + l as f64 + 1.0,
            Model::RosenMorseSpherical { l, .. } | Model::RosenMorseHyperbolic { l, .. } => {
                n as f64 + l + 1.0
            }
            _ => n as f64 + 1.0,
        }
    }

    /// The eigenvalue formula evaluated without checking admissibility.
    pub fn energy_formula(&self, n: usize) -> f64 {
        let nn = self.principal(n);
        match *self {
            Model::HarmonicOscillator { omega, .. } => (n as f64 + 0.5) * omega,
            Model::CalogeroSutherland { g } => 0.5 * (n as f64 + g).powi(2),
            Model::HydrogenRadial { m, g, .. } => -g * g / (2.0 * m * nn * nn),
            Model::RosenMorseSpherical { g, .. } => nn * nn - (g / nn).powi(2),
            Model::RosenMorseHyperbolic { g, .. } => -nn * nn - (g / nn).powi(2),
        }
    }

    pub fn eigenvalue(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        Ok(self.energy_formula(n))
    }

    pub fn bound_state_count(&self) -> BoundStates {
        match *self {
            Model::RosenMorseHyperbolic { g, l } => {
                let s = g.sqrt() - l - 1.0;
                if s <= 0.0 {
                    BoundStates::Finite(0)
                } else {
                    BoundStates::Finite(s.ceil() as usize)
                }
            }
            _ => BoundStates::Unbounded,
        }
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        match self.bound_state_count() {
            BoundStates::Finite(count) if n >= count => Err(Error::IndexOutOfSpectrum { n, count }),
            _ => Ok(()),
        }
    }

    pub fn domain(&self) -> DomainSpec {
        use std::f64::consts::PI;
        let (lo, hi, weight) = match self {
            Model::HarmonicOscillator { .. } => (f64::NEG_INFINITY, f64::INFINITY, Weight::Unit),
            Model::CalogeroSutherland { .. } | Model::RosenMorseSpherical { .. } => {
                (0.0, PI, Weight::Unit)
            }
            Model::HydrogenRadial { .. } => (0.0, f64::INFINITY, Weight::RadialSquare),
            Model::RosenMorseHyperbolic { .. } => (0.0, f64::INFINITY, Weight::Unit),
        };
        DomainSpec { lo, hi, weight }
    }

    /// The Hamiltonian as a second-order differential operator.
    pub fn hamiltonian(&self) -> SecondOrderOp {
        let (c2, c1, c0) = match *self {
            Model::HarmonicOscillator { m, omega } => (
                Coef::constant(-0.5 / m),
                Coef::zero(),
                Coef::term(0.5 * m * omega * omega, Basis::Pow(2)),
            ),
            Model::CalogeroSutherland { g } => (
                Coef::constant(-0.5),
                Coef::zero(),
                Coef::term(0.5 * g * (g - 1.0), Basis::CscSq),
            ),
            Model::HydrogenRadial { m, g, l } => {
                let l = l as f64;
                (
                    Coef::constant(-0.5 / m),
                    Coef::term(-1.0 / m, Basis::Pow(-1)),
                    Coef::term(l * (l + 1.0) / (2.0 * m), Basis::Pow(-2))
                        .with(-g / m, Basis::Pow(-1)),
                )
            }
            Model::RosenMorseSpherical { g, l } => (
                Coef::constant(-1.0),
                Coef::zero(),
                Coef::term(l * (l + 1.0), Basis::CscSq).with(-2.0 * g, Basis::Cot),
            ),
            Model::RosenMorseHyperbolic { g, l } => (
                Coef::constant(-1.0),
                Coef::zero(),
                Coef::term(l * (l + 1.0), Basis::CschSq).with(-2.0 * g, Basis::Coth),
            ),
        };
        SecondOrderOp {
            c2,
            c1,
            c0,
            label: format!("H[{}]", self.label()),
        }
    }

    /// `(H f)(x)`; rejects points outside the open domain.
    pub fn apply_hamiltonian(&self, f: &dyn Func, x: f64) -> Result<C64> {
        if !self.domain().contains_open(x) {
            return Err(Error::EvaluationAtSingularity(x));
        }
        Ok(self.hamiltonian().apply_at(f, x, 0)?.value())
    }

    /// Potential `V(x)` in the normalization of the Hamiltonian (kinetic
    /// term `-(1/2m) d²` for the oscillator and hydrogen, `-½ d²` for
    /// Calogero–Sutherland, `-d²` for Rosen–Morse). For hydrogen this is the
    /// effective potential of `u = r ψ`.
    pub fn potential(&self, x: f64) -> f64 {
        match *self {
            Model::HarmonicOscillator { m, omega } => 0.5 * m * omega * omega * x * x,
            Model::CalogeroSutherland { g } => 0.5 * g * (g - 1.0) / x.sin().powi(2),
            Model::HydrogenRadial { m, g, l } => {
                let l = l as f64;
                l * (l + 1.0) / (2.0 * m * x * x) - g / (m * x)
            }
            Model::RosenMorseSpherical { g, l } => {
                l * (l + 1.0) / x.sin().powi(2) - 2.0 * g / x.tan()
            }
            Model::RosenMorseHyperbolic { g, l } => {
                l * (l + 1.0) / x.sinh().powi(2) - 2.0 * g / x.tanh()
            }
        }
    }

    /// Coefficient of `-d²/dx²` in the Hamiltonian.
    pub fn kinetic_factor(&self) -> f64 {
        match *self {
            Model::HarmonicOscillator { m, .. } | Model::HydrogenRadial { m, .. } => 0.5 / m,
            Model::CalogeroSutherland { .. } => 0.5,
            _ => 1.0,
        }
    }

    pub fn label(&self) -> String {
        let ps: Vec<String> = self
            .params()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("{} {}", self.id(), ps.join(","))
    }

    /// Level flow `ν -> ν_n(ν)` and the constants of the intertwining
    /// relation at level `n`.
    pub fn parameter_flow(&self, n: usize) -> Result<ParameterFlow> {
        let nn = self.principal(n);
        let ratio = nn / (nn + 1.0);
        let (epsilon, q) = match self {
            Model::HydrogenRadial { .. } => (0.0, Coef::constant(2.0)),
            Model::RosenMorseSpherical { .. } => (2.0 * nn + 1.0, Coef::term(-2.0, Basis::Cos)),
            Model::RosenMorseHyperbolic { .. } => (-2.0 * nn - 1.0, Coef::term(-2.0, Basis::Cosh)),
            other => return Err(Error::UnsupportedModel(other.id().to_string())),
        };
        let g = self.coupling().expect("flow models carry a coupling");
        let shifted = self.with_coupling(g * ratio);
        Ok(ParameterFlow {
            shifted,
            epsilon,
            energy_at_shifted: shifted.energy_formula(n),
            q,
        })
    }

    /// Unnormalized closed-form eigenfunction jet at `x`.
    pub fn closed_form(&self, n: usize, x: f64, order: usize) -> Result<Jet> {
        let v = Jet::variable(x, order)?;
        let nn = self.principal(n);
        let (log_prefactor, poly, xi) = match *self {
            Model::HarmonicOscillator { m, omega } => (
                v.mul(&v).scale_re(-0.5 * m * omega),
                PolyFamily::hermite(n),
                v.scale_re((m * omega).sqrt()),
            ),
            Model::CalogeroSutherland { g } => {
                let (s, c) = v.sin_cos();
                let a = C64::new(g - 0.5, 0.0);
                (s.ln().scale_re(g), PolyFamily::jacobi(n, a, a), c)
            }
            Model::HydrogenRadial { g, l, .. } => {
                let mut lp = v.scale_re(-g / nn);
                if l > 0 {
                    lp = lp.add(&v.ln().scale_re(l as f64));
                }
                (
                    lp,
                    PolyFamily::laguerre(n, 2.0 * l as f64 + 1.0),
                    v.scale_re(2.0 * g / nn),
                )
            }
            Model::RosenMorseSpherical { g, .. } => {
                let (s, c) = v.sin_cos();
                let (ap, am) = rosen_morse_spherical_indices(g, nn);
                let poly = PolyFamily::jacobi(n, ap, am);
                let q = poly.jacobi_homogeneous(&s, &c.scale(C64::new(0.0, 1.0)));
                match q {
                    Some(q) => {
                        let pre = s.powf(nn - n as f64).mul(&v.scale_re(-g / nn).exp());
                        return finite_or_singular(pre.mul(&q), x);
                    }
                    None => {
                        let lp = s.ln().scale_re(nn).sub(&v.scale_re(g / nn));
                        (lp, poly, c.div(&s).scale(C64::new(0.0, 1.0)))
                    }
                }
            }
            Model::RosenMorseHyperbolic { g, .. } => {
                let (ls, lc, t) = v.hyperbolic_logs();
                let (bp, bm) = rosen_morse_hyperbolic_indices(g, nn);
                let poly = PolyFamily::jacobi(n, C64::new(bp, 0.0), C64::new(bm, 0.0));
                let nf = n as f64;
                let one = Jet::real(1.0, order)?;
                match poly.jacobi_homogeneous(&t, &one) {
                    Some(q) => {
                        // power form near the origin, log form where sinh^p overflows
                        let tail = lc.scale_re(nf).sub(&v.scale_re(g / nn));
                        let pre = if x < 1.0 {
                            v.sinh_cosh().0.powf(nn - nf).mul(&tail.exp())
                        } else {
                            ls.scale_re(nn - nf).add(&tail).exp()
                        };
                        return finite_or_singular(pre.mul(&q), x);
                    }
                    None => {
                        let lp = ls.scale_re(nn).sub(&v.scale_re(g / nn));
                        (lp, poly, t.recip())
                    }
                }
            }
        };
        let p = xi.compose(&poly.derivatives(xi.value(), order))?;
        finite_or_singular(log_prefactor.exp().mul(&p), x)
    }

    /// Log of a node-free envelope of `|ψ_n|`, used to place tail cutoffs.
    fn log_envelope(&self, n: usize, x: f64) -> f64 {
        let nf = n as f64;
        let nn = self.principal(n);
        match *self {
            Model::HarmonicOscillator { m, omega } => {
                -0.5 * m * omega * x * x + nf * (1.0 + 2.0 * (m * omega).sqrt() * x.abs()).ln()
            }
            Model::HydrogenRadial { g, l, .. } => {
                let lr = if l > 0 { l as f64 * x.ln() } else { 0.0 };
                lr - g * x / nn + nf * (1.0 + 2.0 * g * x / nn).ln()
            }
            Model::RosenMorseHyperbolic { g, .. } => nn * log_sinh(x) - g * x / nn,
            _ => 0.0,
        }
    }

    /// Truncated interval `[lo, hi]` used for level `n` (and all lower
    /// levels), with the interior margin applied at singular endpoints.
    pub fn support(&self, n: usize) -> (f64, f64) {
        self.truncated(n, TAIL_CUTOFF, INTERIOR_MARGIN)
    }

    /// Interval where the envelope of level `n` stays above `ratio` of its
    /// peak; finite domain endpoints are returned exactly.
    pub fn envelope_interval(&self, n: usize, ratio: f64) -> (f64, f64) {
        self.truncated(n, ratio, 0.0)
    }

    fn truncated(&self, n: usize, ratio: f64, margin: f64) -> (f64, f64) {
        use std::f64::consts::PI;
        match *self {
            Model::CalogeroSutherland { .. } | Model::RosenMorseSpherical { .. } => {
                let m = margin * PI;
                (m, PI - m)
            }
            Model::HarmonicOscillator { m, omega } => {
                let l = self.tail_cutoff(n, ratio, 0.0, 1.0 / (m * omega).sqrt());
                (-l, l)
            }
            Model::HydrogenRadial { g, .. } => {
                let hi = self.tail_cutoff(n, ratio, 1e-12, self.principal(n) / g);
                (margin * hi, hi)
            }
            Model::RosenMorseHyperbolic { g, .. } => {
                let n = match self.bound_state_count() {
                    BoundStates::Finite(c) if c > 0 => n.min(c - 1),
                    _ => n,
                };
                let nn = self.principal(n);
                let kappa = (g / nn - nn).max(1e-3);
                // sinh and cosh overflow just past 709
                let hi = self
                    .tail_cutoff(n, ratio, 1e-12, 1.0 / kappa)
                    .min(HYPERBOLIC_X_MAX);
                (margin * hi, hi)
            }
        }
    }

    fn tail_cutoff(&self, n: usize, ratio: f64, start: f64, length: f64) -> f64 {
        let step = length / 64.0;
        let drop = ratio.ln();
        let mut x = start.max(step * 1e-3);
        let mut peak = f64::NEG_INFINITY;
        for _ in 0..10_000_000 {
            let e = self.log_envelope(n, x);
            if e > peak {
                peak = e;
            } else if e < peak + drop {
                return x;
            }
            x += step;
        }
        x
    }

    /// Quadrature covering levels `0..=n_max`.
    pub fn quadrature(&self, n_max: usize) -> Quadrature {
        self.quadrature_with(n_max, 1.0)
    }

    fn quadrature_with(&self, n_max: usize, refine: f64) -> Quadrature {
        let (lo, hi) = self.support(n_max);
        let singular_lo = !matches!(self, Model::HarmonicOscillator { .. });
        let singular_hi = matches!(
            self,
            Model::CalogeroSutherland { .. } | Model::RosenMorseSpherical { .. }
        );
        let mut panels = (40 + 6 * n_max) as f64;
        if let Model::RosenMorseHyperbolic { .. } = self {
            // long tails of weakly bound levels
            panels = panels.max((hi - lo) / 2.0);
        }
        let spec = PanelSpec {
            panels: (panels * refine).round() as usize,
            grade_lo: singular_lo,
            grade_hi: singular_hi,
            ..PanelSpec::default()
        };
        Quadrature::composite(lo, hi, spec)
    }

    /// Normalized eigenstate `ψ_n`.
    pub fn eigenfunction(&self, n: usize) -> Result<EigenState> {
        self.check_level(n)?;
        let energy = self.energy_formula(n);
        let dom = self.domain();
        let quad = self.quadrature(n);
        let raw: Vec<C64> = quad
            .nodes
            .iter()
            .map(|&x| self.closed_form(n, x, 0).map(|j| j.value()))
            .collect::<Result<_>>()?;
        let dens: Vec<f64> = raw
            .iter()
            .zip(&quad.nodes)
            .map(|(v, &x)| v.norm_sqr() * dom.weight_at(x))
            .collect();
        let integral = quad.integrate_samples(&dens);
        let check = self
            .quadrature_with(n, 1.5)
            .integrate(|x| match self.closed_form(n, x, 0) {
                Ok(j) => j.value().norm_sqr() * dom.weight_at(x),
                Err(_) => f64::NAN,
            });
        if !(integral.is_finite() && integral > 0.0) {
            return Err(Error::NormalizationFailure(format!(
                "{} n={n}: integral {integral}",
                self.label()
            )));
        }
        if !check.is_finite() || ((integral - check) / integral).abs() > 1e-9 {
            return Err(Error::NormalizationFailure(format!(
                "{} n={n}: refined rule disagrees ({integral} vs {check})",
                self.label()
            )));
        }
        let norm_const = integral.sqrt().recip();

        let vmax = raw
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("quadrature is non-empty");
        let phase = vmax / vmax.norm();
        let threshold = 1e-6 * vmax.norm();
        let first = raw
            .iter()
            .find(|v| v.norm() > threshold)
            .expect("peak exceeds threshold");
        let sign = if (first / phase).re < 0.0 { -1.0 } else { 1.0 };
        let discarded_phase = phase * sign;
        Ok(EigenState {
            model: *self,
            n,
            energy,
            norm_const,
            discarded_phase,
            support: self.support(n),
            scale: discarded_phase.inv() * norm_const,
        })
    }
}

fn finite_or_singular(j: Jet, x: f64) -> Result<Jet> {
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::EvaluationAtSingularity(x))
    }
}

fn log_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2
    } else {
        x.sinh().ln()
    }
}

/// Jacobi indices `a±(g, l, n) = -(n+l+1) ± i g/(n+l+1)`, given `n+l+1`.
pub fn rosen_morse_spherical_indices(g: f64, principal: f64) -> (C64, C64) {
    (
        C64::new(-principal, g / principal),
        C64::new(-principal, -g / principal),
    )
}

/// Jacobi indices `b±(g, l, n) = -(n+l+1) ± g/(n+l+1)`, given `n+l+1`.
pub fn rosen_morse_hyperbolic_indices(g: f64, principal: f64) -> (f64, f64) {
    (-principal + g / principal, -principal - g / principal)
}

/// A normalized closed-form eigenstate. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenState {
    pub model: Model,
    pub n: usize,
    pub energy: f64,
    pub norm_const: f64,
    /// Unit phase (times sign) divided out so that the state is real and
    /// its first lobe is positive.
    pub discarded_phase: C64,
    /// Truncated interval the normalization was computed on.
    pub support: (f64, f64),
    #[serde(skip)]
    scale: C64,
}

impl EigenState {
    /// `(ψ, ψ', ψ'')` at `x`.
    pub fn evaluate(&self, x: f64) -> Result<[C64; 3]> {
        let j = self.jet(x, 2)?;
        Ok([
            j.derivative_value(0)?,
            j.derivative_value(1)?,
            j.derivative_value(2)?,
        ])
    }

    pub fn quadrature(&self) -> Quadrature {
        self.model.quadrature(self.n)
    }
}

impl Func for EigenState {
    fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        Ok(self.model.closed_form(self.n, x, order)?.scale(self.scale))
    }
}

/// Model and level -> normalized state.
pub fn eigenfunction(model: &Model, n: usize) -> Result<EigenState> {
    model.eigenfunction(n)
}

/// Five representative parameter sets per model.
pub fn reference_parameter_sets(id: ModelId) -> Vec<Model> {
    match id {
        ModelId::HarmonicOscillator => vec![
            Model::HarmonicOscillator { m: 1.0, omega: 1.0 },
            Model::HarmonicOscillator { m: 0.5, omega: 2.0 },
            Model::HarmonicOscillator { m: 2.0, omega: 0.7 },
            Model::HarmonicOscillator { m: 1.3, omega: 1.7 },
            Model::HarmonicOscillator {
                m: 0.8,
                omega: 0.45,
            },
        ],
        ModelId::CalogeroSutherland => vec![
            Model::CalogeroSutherland { g: 2.0 },
            Model::CalogeroSutherland { g: 1.0 },
            Model::CalogeroSutherland { g: 0.7 },
            Model::CalogeroSutherland { g: 1.5 },
            Model::CalogeroSutherland { g: 3.3 },
        ],
        ModelId::HydrogenRadial => vec![
            Model::HydrogenRadial {
                m: 1.0,
                g: 1.0,
                l: 0,
            },
            Model::HydrogenRadial {
                m: 1.0,
                g: 1.0,
                l: 1,
            },
            Model::HydrogenRadial {
                m: 0.5,
                g: 2.0,
                l: 2,
            },
            Model::HydrogenRadial {
                m: 2.0,
                g: 0.7,
                l: 0,
            },
            Model::HydrogenRadial {
                m: 1.5,
                g: 1.2,
                l: 3,
            },
        ],
        ModelId::RosenMorseSpherical => vec![
            Model::RosenMorseSpherical { g: 2.0, l: 0.0 },
            Model::RosenMorseSpherical { g: 0.0, l: 0.0 },
            Model::RosenMorseSpherical { g: 1.3, l: 0.5 },
            Model::RosenMorseSpherical { g: 3.0, l: 1.0 },
            Model::RosenMorseSpherical { g: 5.0, l: 2.5 },
        ],
        ModelId::RosenMorseHyperbolic => vec![
            Model::RosenMorseHyperbolic { g: 9.0, l: 0.0 },
            Model::RosenMorseHyperbolic { g: 20.0, l: 0.5 },
            Model::RosenMorseHyperbolic { g: 30.0, l: 1.0 },
            Model::RosenMorseHyperbolic { g: 60.0, l: 2.0 },
            Model::RosenMorseHyperbolic { g: 200.0, l: 0.0 },
        ],
    }
}
