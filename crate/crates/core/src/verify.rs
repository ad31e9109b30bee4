//! Numerical certification of the operator identities, mapping statements,
//! energy identities, closure relation, shape invariance and ladder-built
//! spectra.
//!
//! Identities are asserted pointwise on a family of test functions
//! (eigenstates plus seeded random combinations of them); mapping
//! statements are asserted in the weighted `L²` norm on the target's
//! quadrature.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffop::{Combination, Func, Op, OwnedApplied, ScalingOp};
use crate::error::{Error, Result};
use crate::jet::C64;
use crate::models::{EigenState, Model, ModelId};
use crate::operators::{
    cs_closure_polynomials, cs_ladder, cs_supercharges, ho_dhat, ho_dn, ho_ladder,
    hydrogen_d_tilde, hydrogen_scale_factor, intertwiner, ladder_shifts, RelationSpec, Sign,
};
use crate::quadrature::Quadrature;

/// Pass thresholds, one per kind of check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eigenpair: f64,
    pub eigenstate: f64,
    pub orthogonality: f64,
    pub relation: f64,
    pub mapping: f64,
    pub scaling: f64,
    pub arithmetic: f64,
    pub annihilation: f64,
    pub closure: f64,
    pub shape: f64,
    pub epsilon_spread: f64,
    pub gap: f64,
    pub overlap: f64,
    pub oracle: f64,
    /// Allowed distance of the observed finite-difference order from 2.
    pub order_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigenpair: 1e-9,
            eigenstate: 1e-10,
            orthogonality: 1e-8,
            relation: 1e-8,
            mapping: 1e-8,
            scaling: 1e-9,
            arithmetic: 1e-13,
            annihilation: 1e-10,
            closure: 1e-7,
            shape: 1e-9,
            epsilon_spread: 1e-8,
            gap: 1e-10,
            overlap: 1e-7,
            oracle: 1e-5,
            order_band: 0.3,
        }
    }
}

impl Tolerances {
    pub fn validated(self) -> Result<Self> {
        let all = [
            self.eigenpair,
            self.eigenstate,
            self.orthogonality,
            self.relation,
            self.mapping,
            self.scaling,
            self.arithmetic,
            self.annihilation,
            self.closure,
            self.shape,
            self.epsilon_spread,
            self.gap,
            self.overlap,
            self.oracle,
            self.order_band,
        ];
        if all.iter().all(|t| *t > 0.0 && t.is_finite()) {
            Ok(self)
        } else {
            Err(Error::InvalidParameters(
                "tolerances must be positive".into(),
            ))
        }
    }
}

/// One row of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub relation_id: String,
    pub model: ModelId,
    pub params: BTreeMap<String, f64>,
    pub n: Option<usize>,
    /// Quantities compared against `tolerances` under the same key.
    pub residuals: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    /// Informational values (fitted constants, energies, per-member data).
    pub values: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(relation_id: impl Into<String>, model: &Model, n: Option<usize>) -> Self {
        Self {
            relation_id: relation_id.into(),
            model: model.id(),
            params: model
                .params()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            n,
            residuals: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            values: BTreeMap::new(),
            pass: false,
            note: None,
        }
    }

    pub fn residual(mut self, key: &str, value: f64, tol: f64) -> Self {
        self.residuals.insert(key.to_string(), value);
        self.tolerances.insert(key.to_string(), tol);
        self
    }

    pub fn value(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Sets `pass` from the residuals; NaN never passes.
    pub fn finish(mut self) -> Self {
        self.pass = !self.residuals.is_empty()
            && self
                .residuals
                .iter()
                .all(|(k, v)| v.is_finite() && *v <= self.tolerances[k]);
        self
    }

    /// A failing row carrying an error message.
    pub fn failed(
        relation_id: impl Into<String>,
        model: &Model,
        n: Option<usize>,
        err: &Error,
    ) -> Self {
        let mut r = Self::new(relation_id, model, n).note(err.to_string());
        r.pass = false;
        r
    }

    /// Largest residual-to-tolerance ratio.
    pub fn worst_ratio(&self) -> f64 {
        self.residuals
            .iter()
            .map(|(k, v)| v / self.tolerances[k])
            .fold(0.0, f64::max)
    }

    fn sort_key(&self) -> (String, ModelId, String, Option<usize>) {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v:e}"))
            .collect();
        (
            self.relation_id.clone(),
            self.model,
            params.join(","),
            self.n,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub notes: Vec<String>,
}

/// Merged, deterministically ordered results of a verification run.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub results: Vec<CheckRecord>,
    pub summary: Summary,
    /// Wall-clock seconds; kept apart from `results` so they stay
    /// reproducible.
    pub wall_time_s: f64,
}

impl VerificationReport {
    pub fn from_records(
        mut results: Vec<CheckRecord>,
        notes: Vec<String>,
        wall_time_s: f64,
    ) -> Self {
        results.sort_by_key(|r| r.sort_key());
        let passed = results.iter().filter(|r| r.pass).count();
        Self {
            summary: Summary {
                total: results.len(),
                passed,
                failed: results.len() - passed,
                notes,
            },
            results,
            wall_time_s,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Default relative distance kept from singular endpoints by test grids.
pub const GRID_MARGIN: f64 = 1e-6;

/// Grid margin for a relation. Fourth-order compositions lose about
/// `eps / x^4` near singular endpoints, so they are kept further away.
pub fn relation_margin(spec: &RelationSpec) -> f64 {
    if spec.derivative_order() >= 4 {
        2e-3
    } else {
        GRID_MARGIN
    }
}

/// Sample points for pointwise checks: uniform in the truncated support,
/// refined geometrically toward finite (singular) endpoints, never closer
/// than `margin × length`.
pub fn interior_grid(model: &Model, n_max: usize, margin: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = model.support(n_max);
    let dom = model.domain();
    let len = hi - lo;
    let a = if dom.lo.is_finite() {
        dom.lo + margin * len
    } else {
        lo
    };
    let b = if dom.hi.is_finite() {
        dom.hi - margin * len
    } else {
        hi
    };
    let mut grid: Vec<f64> = (0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect();
    let mut step = margin * len;
    while step < 0.05 * len {
        if dom.lo.is_finite() {
            grid.push(dom.lo + step);
        }
        if dom.hi.is_finite() {
            grid.push(dom.hi - step);
        }
        step *= 2.0;
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Members with exact derivatives plus the sample grid they are checked on.
pub struct TestFamily {
    pub members: Vec<(String, Arc<dyn Func>)>,
    pub grid: Vec<f64>,
}

impl TestFamily {
    /// Eigenstates `0..levels` of `model` (clipped to the discrete
    /// spectrum) followed by `random` seeded combinations of them.
    pub fn build(
        model: &Model,
        levels: usize,
        random: usize,
        seed: u64,
        margin: f64,
    ) -> Result<Self> {
        let top = model
            .bound_state_count()
            .clamp(levels.saturating_sub(1))
            .ok_or_else(|| {
                Error::TargetOutOfSpectrum(format!("{} has no bound states", model.label()))
            })?;
        let states: Vec<Arc<dyn Func>> = (0..=top)
            .map(|n| model.eigenfunction(n).map(|s| Arc::new(s) as Arc<dyn Func>))
            .collect::<Result<_>>()?;
        let mut members: Vec<(String, Arc<dyn Func>)> = states
            .iter()
            .enumerate()
            .map(|(n, s)| (format!("psi_{n}"), Arc::clone(s)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..random {
            let terms = states
                .iter()
                .map(|s| (rng.gen_range(-1.0..1.0), Arc::clone(s)))
                .collect();
            members.push((format!("mix_{k}"), Arc::new(Combination { terms })));
        }
        Ok(Self {
            members,
            grid: interior_grid(model, top, margin, 241),
        })
    }

    pub fn from_members(members: Vec<(String, Arc<dyn Func>)>, grid: Vec<f64>) -> Self {
        Self { members, grid }
    }

    /// The family a relation is naturally checked on.
    pub fn for_relation(spec: &RelationSpec, random: usize, seed: u64) -> Result<Self> {
        Self::build(&spec.test_model, 6, random, seed, relation_margin(spec))
    }

    /// Keeps only the members whose names start with `prefix`.
    pub fn filtered(&self, prefix: &str) -> Self {
        Self {
            members: self
                .members
                .iter()
                .filter(|(name, _)| name.starts_with(prefix))
                .map(|(n, f)| (n.clone(), Arc::clone(f)))
                .collect(),
            grid: self.grid.clone(),
        }
    }
}

fn sample(op: &Op, f: &dyn Func, grid: &[f64]) -> Result<Vec<C64>> {
    grid.iter()
        .map(|&x| Ok(op.apply_at(f, x, 0)?.value()))
        .collect()
}

fn sup(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |L f − R f| / max(max |L f|, ‖f‖∞ · E)` for one member.
fn identity_residual(spec: &RelationSpec, f: &dyn Func, grid: &[f64]) -> Result<f64> {
    let l = sample(&spec.lhs, f, grid)?;
    let r = sample(&spec.rhs, f, grid)?;
    let fv = sample(&Op::Identity, f, grid)?;
    let diff = l
        .iter()
        .zip(&r)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = sup(&l).max(sup(&fv) * spec.energy_scale);
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Pointwise residual of `spec` over every member of `tf`.
pub fn check_relation_identity(
    spec: &RelationSpec,
    tf: &TestFamily,
    tol: f64,
) -> Result<CheckRecord> {
    let per_member: Vec<(String, f64)> = tf
        .members
        .iter()
        .map(|(name, f)| Ok((name.clone(), identity_residual(spec, f.as_ref(), &tf.grid)?)))
        .collect::<Result<_>>()?;
    let worst = per_member.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let mut rec = CheckRecord::new(spec.id.clone(), &spec.model, Some(spec.n))
        .residual("identity", worst, tol)
        .value("members", per_member.len() as f64)
        .value("grid_points", tf.grid.len() as f64);
    for (name, r) in per_member {
        rec = rec.value(&name, r);
    }
    Ok(rec.finish())
}

/// Weighted inner products on the quadrature of `model`.
struct Weighted<'a> {
    model: &'a Model,
    quad: Quadrature,
}

impl<'a> Weighted<'a> {
    fn new(model: &'a Model, level: usize) -> Self {
        Self {
            model,
            quad: model.quadrature(level),
        }
    }

    fn samples(&self, f: &dyn Func) -> Result<Vec<C64>> {
        self.quad.nodes.iter().map(|&x| f.value(x)).collect()
    }

    fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        let dom = self.model.domain();
        self.quad
            .nodes
            .iter()
            .zip(&self.quad.weights)
            .zip(a.iter().zip(b))
            .map(|((&x, &w), (u, v))| u.conj() * v * (w * dom.weight_at(x)))
            .sum()
    }

    fn norm(&self, a: &[C64]) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }
}

/// Fit of `image ≈ c · target` in the weighted norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub c: C64,
    pub rel_residual: f64,
    /// `|⟨image, target⟩| / (‖image‖ ‖target‖)`.
    pub overlap: f64,
    pub image_norm: f64,
}

fn fit(w: &Weighted, image: &[C64], target: &[C64]) -> Fit {
    let tt = w.inner(target, target).re;
    let ti = w.inner(target, image);
    let c = ti / tt;
    let resid: Vec<C64> = image.iter().zip(target).map(|(a, b)| a - c * b).collect();
    let image_norm = w.norm(image);
    Fit {
        c,
        rel_residual: w.norm(&resid) / (c.norm() * tt.sqrt()),
        overlap: ti.norm() / (image_norm * tt.sqrt()),
        image_norm,
    }
}

/// Result of a mapping statement `op ψ_source ∝ ψ_target`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MappingCheck {
    pub c: f64,
    pub c_imag: f64,
    pub rel_residual: f64,
    /// Detected level shift relative to the source level; `None` if the
    /// image energy matches no level.
    pub m: Option<i64>,
    pub image_energy: f64,
    pub image_norm: f64,
}

/// A mapping statement ready to be checked.
pub struct MappingCase {
    pub id: String,
    pub op: Op,
    pub source: Arc<dyn Func>,
    pub source_level: usize,
    pub target_model: Model,
    pub expected_shift: i64,
}

impl MappingCase {
    fn target_level(&self) -> Result<usize> {
        let t = self.source_level as i64 + self.expected_shift;
        if t < 0 || !self.target_model.bound_state_count().contains(t as usize) {
            return Err(Error::TargetOutOfSpectrum(format!(
                "level {t} of {}",
                self.target_model.label()
            )));
        }
        Ok(t as usize)
    }
}

/// Fits the image against the expected target and detects the level shift
/// from the image's energy.
pub fn run_mapping(case: &MappingCase) -> Result<MappingCheck> {
    let target_level = case.target_level()?;
    let target = case.target_model.eigenfunction(target_level)?;
    let w = Weighted::new(&case.target_model, target_level + 1);
    let applied = OwnedApplied {
        op: case.op.clone(),
        f: Arc::clone(&case.source),
    };
    let image = w.samples(&applied)?;
    let source_norm = w.norm(&w.samples(case.source.as_ref())?);
    let image_norm = w.norm(&image);
    if !(image_norm >= 1e-12 * source_norm.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateImage(image_norm));
    }
    let h: Op = case.target_model.hamiltonian().into();
    let h_image = w.samples(&OwnedApplied {
        op: h.after(case.op.clone()),
        f: Arc::clone(&case.source),
    })?;
    let energy = (w.inner(&image, &h_image) / w.inner(&image, &image)).re;
    let m = detect_level(&case.target_model, energy, target_level + 3)
        .map(|k| k as i64 - case.source_level as i64);
    let f = fit(&w, &image, &w.samples(&target)?);
    Ok(MappingCheck {
        c: f.c.re,
        c_imag: f.c.im,
        rel_residual: f.rel_residual,
        m,
        image_energy: energy,
        image_norm,
    })
}

/// Level whose energy matches `energy` to 1e-6 relative, searching
/// `0..=n_max`.
fn detect_level(model: &Model, energy: f64, n_max: usize) -> Option<usize> {
    let top = model.bound_state_count().clamp(n_max)?;
    (0..=top)
        .map(|k| (k, (model.energy_formula(k) - energy).abs()))
        .filter(|(k, d)| *d <= 1e-6 * model.energy_formula(*k).abs().max(1.0))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

/// Which mapping statement to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MappingKind {
    /// `D_n ψ_n(ν_n) ∝ ψ_{n+1}(ν)`.
    Intertwining,
    /// Hydrogen `D̃_n ψ_n ∝ ψ_{n+1}` at fixed coupling.
    Composite,
    /// Hydrogen `ψ_n(g; α r) ∝ ψ_n(α g; r)`.
    Scaling,
    /// Oscillator `a± ψ_n ∝ ψ_{n±1}`.
    OscillatorLadder(Sign),
    /// Oscillator `D_n^{(±)} ψ_n ∝ ψ_{n±2}`.
    OscillatorTwoStep(Sign),
    /// Calogero–Sutherland `D±(E_n) ψ_n ∝ ψ_{n±1}`.
    SinusoidalLadder(Sign),
    /// Calogero–Sutherland `A†(g) ψ_n(g+1) ∝ ψ_{n+1}(g)`.
    Supercharge,
}

impl MappingKind {
    pub fn id(self, model: &Model) -> String {
        let base = match self {
            MappingKind::Intertwining => "mapping".to_string(),
            MappingKind::Composite => "composite-mapping".to_string(),
            MappingKind::Scaling => "scaling".to_string(),
            MappingKind::OscillatorLadder(s) => format!("ladder-mapping{}", s.symbol()),
            MappingKind::OscillatorTwoStep(s) => format!("two-step-mapping{}", s.symbol()),
            MappingKind::SinusoidalLadder(s) => format!("ladder-mapping{}", s.symbol()),
            MappingKind::Supercharge => "supercharge-mapping".to_string(),
        };
        format!("{}.{base}", model.id())
    }
}

fn state(model: &Model, n: usize) -> Result<Arc<dyn Func>> {
    Ok(Arc::new(model.eigenfunction(n)?))
}

/// Assembles the mapping statement of `kind` for `model` at level `n`.
pub fn mapping_case(kind: MappingKind, model: &Model, n: usize) -> Result<MappingCase> {
    let id = kind.id(model);
    let unsupported = || {
        Err(Error::UnsupportedModel(format!(
            "{} for {}",
            id,
            model.id()
        )))
    };
    let case = |op: Op, source: Arc<dyn Func>, target_model: Model, shift: i64| MappingCase {
        id: id.clone(),
        op,
        source,
        source_level: n,
        target_model,
        expected_shift: shift,
    };
    Ok(match (kind, *model) {
        (MappingKind::Intertwining, _) if model.id().has_parameter_flow() => {
            if !model.bound_state_count().contains(n + 1) {
                return Err(Error::TargetOutOfSpectrum(format!(
                    "level {} of {}",
                    n + 1,
                    model.label()
                )));
            }
            let flow = model.parameter_flow(n)?;
            case(
                intertwiner(model, n)?.into(),
                state(&flow.shifted, n)?,
                *model,
                1,
            )
        }
        (MappingKind::Composite, Model::HydrogenRadial { .. }) => {
            case(hydrogen_d_tilde(model, n)?, state(model, n)?, *model, 1)
        }
        (MappingKind::Scaling, Model::HydrogenRadial { m, g, l }) => {
            let alpha = hydrogen_scale_factor(model, n)?;
            let target = Model::HydrogenRadial { m, g: alpha * g, l };
            case(ScalingOp::new(alpha)?.into(), state(model, n)?, target, 0)
        }
        (MappingKind::OscillatorLadder(s), Model::HarmonicOscillator { .. }) => case(
            ho_ladder(s, model)?.into(),
            state(model, n)?,
            *model,
            s.value() as i64,
        ),
        (MappingKind::OscillatorTwoStep(s), Model::HarmonicOscillator { .. }) => case(
            ho_dn(s, model, n)?.into(),
            state(model, n)?,
            *model,
            2 * s.value() as i64,
        ),
        (MappingKind::SinusoidalLadder(s), Model::CalogeroSutherland { .. }) => case(
            cs_ladder(model, n, s)?.into(),
            state(model, n)?,
            *model,
            s.value() as i64,
        ),
        (MappingKind::Supercharge, Model::CalogeroSutherland { g }) => {
            let (_, adag) = cs_supercharges(g)?;
            let source = state(&Model::CalogeroSutherland { g: g + 1.0 }, n)?;
            case(adag.into(), source, *model, 1)
        }
        _ => return unsupported(),
    })
}

/// The flow-model mapping `D_n ψ_n(ν_n) ∝ ψ_{n+1}(ν)`.
pub fn check_mapping(model: &Model, n: usize) -> Result<MappingCheck> {
    run_mapping(&mapping_case(MappingKind::Intertwining, model, n)?)
}

/// Mapping check as a report row.
pub fn mapping_record(
    kind: MappingKind,
    model: &Model,
    n: usize,
    tol: &Tolerances,
) -> Result<CheckRecord> {
    let case = mapping_case(kind, model, n)?;
    let check = run_mapping(&case)?;
    let limit = if kind == MappingKind::Scaling {
        tol.scaling
    } else {
        tol.mapping
    };
    let shift_error = match check.m {
        Some(m) => (m - case.expected_shift).abs() as f64,
        None => f64::INFINITY,
    };
    let mut rec = CheckRecord::new(case.id.clone(), model, Some(n))
        .residual("mapping", check.rel_residual, limit)
        .residual("level_shift", shift_error, 0.0)
        .value("c", check.c)
        .value("c_imag", check.c_imag)
        .value("image_energy", check.image_energy)
        .value("m", check.m.map_or(f64::NAN, |m| m as f64));
    if let MappingKind::SinusoidalLadder(s) = kind {
        let (r1, r0, _) = cs_closure_polynomials();
        let e_n = model.energy_formula(n);
        let (ap, am) = ladder_shifts(&r1, &r0, e_n)?;
        let alpha = if s == Sign::Plus { ap } else { am };
        let gap = match check.m {
            Some(m) => (model.energy_formula((n as i64 + m) as usize) - e_n - alpha).abs(),
            None => f64::INFINITY,
        };
        rec = rec.residual("gap", gap, tol.gap).value("alpha", alpha);
    }
    Ok(rec.finish())
}

/// `E_{n+1}(ν) = E_n(ν_n) + ε_n` for `n = 0..=n_max`; pure arithmetic.
pub fn check_energy_chain(model: &Model, n_max: usize, tol: f64) -> Result<Vec<CheckRecord>> {
    (0..=n_max)
        .map(|n| {
            let flow = model.parameter_flow(n)?;
            let lhs = model.energy_formula(n + 1);
            let rhs = flow.energy_at_shifted + flow.epsilon;
            let abs = (lhs - rhs).abs();
            let scale = lhs
                .abs()
                .max(flow.energy_at_shifted.abs())
                .max(flow.epsilon.abs());
            Ok(
                CheckRecord::new(format!("{}.energy-chain", model.id()), model, Some(n))
                    .residual("relative", abs / scale, tol)
                    .value("absolute", abs)
                    .value("e_next", lhs)
                    .value("e_flowed_plus_shift", rhs)
                    .finish(),
            )
        })
        .collect()
}

/// Double-commutator closure relation of the Calogero–Sutherland model.
pub fn check_closure(model: &Model, tf: &TestFamily, tol: f64) -> Result<CheckRecord> {
    check_relation_identity(&RelationSpec::cs_closure(model)?, tf, tol)
}

/// Two-step oscillator relation on `tf`, plus agreement of the
/// second-order form with the first-order one on `ψ_n`.
pub fn check_ho_commutation(
    model: &Model,
    n: usize,
    sign: Sign,
    tf: &TestFamily,
    tol: f64,
) -> Result<CheckRecord> {
    let spec = RelationSpec::ho_two_step(model, n, sign)?;
    let rec = check_relation_identity(&spec, tf, tol)?;
    let psi = model.eigenfunction(n)?;
    let hat = sample(&ho_dhat(sign, model)?, &psi, &tf.grid)?;
    let first = sample(&ho_dn(sign, model, n)?.into(), &psi, &tf.grid)?;
    let diff = hat
        .iter()
        .zip(&first)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = sup(&first).max(sup(&sample(&Op::Identity, &psi, &tf.grid)?));
    Ok(rec
        .residual("second_order_form", diff / scale, tol)
        .finish())
}

/// `max |a₋ ψ₀| / max |ψ₀|` on the grid.
pub fn check_annihilation(model: &Model, tf_grid: &[f64], tol: f64) -> Result<CheckRecord> {
    let psi = model.eigenfunction(0)?;
    let image = sample(&ho_ladder(Sign::Minus, model)?.into(), &psi, tf_grid)?;
    let base = sample(&Op::Identity, &psi, tf_grid)?;
    Ok(
        CheckRecord::new(format!("{}.annihilation", model.id()), model, Some(0))
            .residual("annihilation", sup(&image) / sup(&base), tol)
            .finish(),
    )
}

/// `H_−(ν) f = H_+(f(ν)) f + ε f`, with `ε` fitted per member and required
/// to agree across members.
pub fn check_shape_invariance(
    spec: &RelationSpec,
    tf: &TestFamily,
    tol: f64,
    spread_tol: f64,
) -> Result<CheckRecord> {
    let mut eps = Vec::new();
    let mut worst: f64 = 0.0;
    let mut rec = CheckRecord::new(spec.id.clone(), &spec.model, None);
    for (name, f) in &tf.members {
        let l = sample(&spec.lhs, f.as_ref(), &tf.grid)?;
        let r = sample(&spec.rhs, f.as_ref(), &tf.grid)?;
        let fv = sample(&Op::Identity, f.as_ref(), &tf.grid)?;
        let num: C64 = fv
            .iter()
            .zip(l.iter().zip(&r))
            .map(|(f, (a, b))| f.conj() * (a - b))
            .sum();
        let den: f64 = fv.iter().map(|z| z.norm_sqr()).sum();
        let e = (num / den).re;
        let diff = l
            .iter()
            .zip(&r)
            .zip(&fv)
            .map(|((a, b), f)| (a - b - f * e).norm())
            .fold(0.0, f64::max);
        let scale = sup(&l).max(sup(&fv) * spec.energy_scale);
        let res = diff / scale;
        worst = worst.max(res);
        eps.push(e);
        rec = rec.value(name, res).value(&format!("epsilon:{name}"), e);
    }
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    if spread > spread_tol {
        return Err(Error::NonConstantEpsilon(spread));
    }
    let mean = eps.iter().sum::<f64>() / eps.len() as f64;
    Ok(rec
        .residual("identity", worst, tol)
        .residual("epsilon_spread", spread, spread_tol)
        .value("epsilon", mean)
        .finish())
}

/// One ladder step `ψ_k(ν) ∝ step_op ψ_{k−1}(inner)` with energy shift.
struct Step {
    op: Op,
    inner: Model,
    shift: f64,
}

fn ladder_step(model: &Model, k: usize) -> Result<Step> {
    match *model {
        Model::HarmonicOscillator { omega, .. } => Ok(Step {
            op: ho_ladder(Sign::Plus, model)?.into(),
            inner: *model,
            shift: omega,
        }),
        Model::CalogeroSutherland { g } => Ok(Step {
            op: cs_supercharges(g)?.1.into(),
            inner: Model::CalogeroSutherland { g: g + 1.0 },
            shift: 0.0,
        }),
        _ => {
            let flow = model.parameter_flow(k - 1)?;
            Ok(Step {
                op: intertwiner(model, k - 1)?.into(),
                inner: flow.shifted,
                shift: flow.epsilon,
            })
        }
    }
}

/// One level of a ladder-built spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LadderLevel {
    pub n: usize,
    pub e_direct: f64,
    pub e_chain: f64,
    pub overlap: f64,
    pub rel_residual: f64,
}

fn chain(model: &Model, k: usize, tol: f64) -> Result<(Arc<dyn Func>, f64)> {
    if k == 0 {
        let s = model.eigenfunction(0)?;
        let e = s.energy;
        return Ok((Arc::new(s), e));
    }
    let step = ladder_step(model, k)?;
    let (inner, e_inner) = chain(&step.inner, k - 1, tol)?;
    let f: Arc<dyn Func> = Arc::new(OwnedApplied {
        op: step.op,
        f: inner,
    });
    let direct = model.eigenfunction(k)?;
    let w = Weighted::new(model, k + 1);
    let fit = fit(&w, &w.samples(f.as_ref())?, &w.samples(&direct)?);
    if !(fit.rel_residual <= tol) {
        return Err(Error::ChainBreak {
            level: k,
            residual: fit.rel_residual,
        });
    }
    Ok((f, e_inner + step.shift))
}

/// Builds `ψ_1 … ψ_N` by operator chains from ground states at flowed
/// parameters and compares with the closed forms.
pub fn ladder_construct_spectrum(
    model: &Model,
    n_top: usize,
    tol: &Tolerances,
) -> Result<Vec<LadderLevel>> {
    if !model.bound_state_count().contains(n_top) {
        return Err(Error::TargetOutOfSpectrum(format!(
            "level {n_top} of {}",
            model.label()
        )));
    }
    (0..=n_top)
        .map(|k| {
            let (f, e_chain) = chain(model, k, tol.mapping)?;
            let direct = model.eigenfunction(k)?;
            let w = Weighted::new(model, k + 1);
            let fit = fit(&w, &w.samples(f.as_ref())?, &w.samples(&direct)?);
            Ok(LadderLevel {
                n: k,
                e_direct: direct.energy,
                e_chain,
                overlap: fit.overlap,
                rel_residual: fit.rel_residual,
            })
        })
        .collect()
}

/// Ladder levels as report rows.
pub fn ladder_records(model: &Model, n_top: usize, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    Ok(ladder_construct_spectrum(model, n_top, tol)?
        .into_iter()
        .map(|lv| {
            let scale = lv.e_direct.abs().max(1e-300);
            CheckRecord::new(format!("{}.ladder-spectrum", model.id()), model, Some(lv.n))
                .residual("overlap_defect", (1.0 - lv.overlap).abs(), tol.overlap)
                .residual(
                    "energy",
                    (lv.e_chain - lv.e_direct).abs() / scale,
                    tol.arithmetic,
                )
                .value("e_direct", lv.e_direct)
                .value("e_chain", lv.e_chain)
                .value("overlap", lv.overlap)
                .finish()
        })
        .collect())
}

/// Normalization, realness, node count and eigen-residual of `ψ_n`.
pub fn eigenstate_record(model: &Model, n: usize, tol: &Tolerances) -> Result<CheckRecord> {
    let s: EigenState = model.eigenfunction(n)?;
    let w = Weighted::new(model, n);
    let v = w.samples(&s)?;
    let h: Op = model.hamiltonian().into();
    let hv = w.samples(&OwnedApplied {
        op: h.shifted(-s.energy),
        f: Arc::new(s.clone()),
    })?;
    let norm = w.norm(&v);
    let peak = sup(&v);
    let imag = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / peak;
    let nodes = sign_changes(&v, 1e-10 * peak);
    Ok(
        CheckRecord::new(format!("{}.eigenpair", model.id()), model, Some(n))
            .residual("eigenpair", w.norm(&hv) / norm, tol.eigenpair)
            .residual("norm", (norm * norm - 1.0).abs(), tol.eigenstate)
            .residual("imag", imag, tol.eigenstate)
            .residual("nodes", (nodes as f64 - n as f64).abs(), 0.0)
            .value("energy", s.energy)
            .value("norm_const", s.norm_const)
            .value("phase_re", s.discarded_phase.re)
            .value("phase_im", s.discarded_phase.im)
            .finish(),
    )
}

fn sign_changes(v: &[C64], floor: f64) -> usize {
    let mut last = 0.0;
    let mut count = 0;
    for z in v {
        if z.re.abs() <= floor {
            continue;
        }
        if last != 0.0 && z.re.signum() != last {
            count += 1;
        }
        last = z.re.signum();
    }
    count
}

/// Largest `|⟨ψ_j, ψ_k⟩|`, `j ≠ k ≤ n_max`.
pub fn orthogonality_record(model: &Model, n_max: usize, tol: &Tolerances) -> Result<CheckRecord> {
    let w = Weighted::new(model, n_max);
    let samples: Vec<Vec<C64>> = (0..=n_max)
        .map(|n| w.samples(&model.eigenfunction(n)?))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for j in 0..samples.len() {
        for k in 0..j {
            worst = worst.max(w.inner(&samples[j], &samples[k]).norm());
        }
    }
    Ok(
        CheckRecord::new(format!("{}.orthogonality", model.id()), model, Some(n_max))
            .residual("orthogonality", worst, tol.orthogonality)
            .finish(),
    )
}

/// What to run for a set of models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub models: Vec<Model>,
    pub n_max: usize,
    /// Random combinations per test family.
    pub random: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl VerifyConfig {
    pub fn new(models: Vec<Model>) -> Self {
        Self {
            models,
            n_max: 8,
            random: 4,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

type Job = Box<dyn Fn() -> Vec<CheckRecord> + Send + Sync>;

fn guarded<F>(id: String, model: Model, n: Option<usize>, body: F) -> Job
where
    F: Fn() -> Result<Vec<CheckRecord>> + Send + Sync + 'static,
{
    Box::new(move || {
        body().unwrap_or_else(|e| vec![CheckRecord::failed(id.clone(), &model, n, &e)])
    })
}

fn one(r: Result<CheckRecord>) -> Result<Vec<CheckRecord>> {
    r.map(|x| vec![x])
}

/// Highest level whose upward image is still bound, capped at `n_max`.
fn mapped_top(model: &Model, n_max: usize) -> Option<usize> {
    match model.bound_state_count().clamp(n_max + 1)? {
        0 => None,
        t => Some(t - 1),
    }
}

fn model_jobs(model: Model, cfg: &VerifyConfig, notes: &mut Vec<String>) -> Vec<Job> {
    let tol = cfg.tolerances;
    let (k, seed) = (cfg.random, cfg.seed);
    let mut jobs: Vec<Job> = Vec::new();
    let slug = model.id().slug();

    let Some(top) = model.bound_state_count().clamp(cfg.n_max) else {
        notes.push(format!("{}: no bound states", model.label()));
        return jobs;
    };
    if top < cfg.n_max {
        notes.push(format!("{}: spectrum truncated at n={top}", model.label()));
    }
    for n in 0..=top {
        jobs.push(guarded(
            format!("{slug}.eigenpair"),
            model,
            Some(n),
            move || one(eigenstate_record(&model, n, &tol)),
        ));
    }
    if top > 0 {
        jobs.push(guarded(
            format!("{slug}.orthogonality"),
            model,
            Some(top),
            move || one(orthogonality_record(&model, top, &tol)),
        ));
    }
    let ladder_top = top.min(5);
    jobs.push(guarded(
        format!("{slug}.ladder-spectrum"),
        model,
        Some(ladder_top),
        move || ladder_records(&model, ladder_top, &tol),
    ));

    let relation = move |spec: Result<RelationSpec>, limit: f64| -> Result<Vec<CheckRecord>> {
        let spec = spec?;
        let tf = TestFamily::for_relation(&spec, k, seed)?;
        one(check_relation_identity(&spec, &tf, limit))
    };
    let mapping = |kind: MappingKind, n: usize| -> Job {
        guarded(kind.id(&model), model, Some(n), move || {
            one(mapping_record(kind, &model, n, &tol))
        })
    };

    match model {
        Model::HydrogenRadial { .. }
        | Model::RosenMorseSpherical { .. }
        | Model::RosenMorseHyperbolic { .. } => {
            let Some(mtop) = mapped_top(&model, cfg.n_max) else {
                notes.push(format!("{}: no level maps to a bound state", model.label()));
                return jobs;
            };
            jobs.push(guarded(
                format!("{slug}.energy-chain"),
                model,
                None,
                move || check_energy_chain(&model, mtop, tol.arithmetic),
            ));
            for n in 0..=mtop {
                jobs.push(guarded(
                    format!("{slug}.spectral-intertwining"),
                    model,
                    Some(n),
                    move || relation(RelationSpec::spectral(&model, n), tol.relation),
                ));
                jobs.push(mapping(MappingKind::Intertwining, n));
                if let Model::HydrogenRadial { .. } = model {
                    jobs.push(guarded(
                        format!("{slug}.composite-intertwining"),
                        model,
                        Some(n),
                        move || relation(RelationSpec::hydrogen_composite(&model, n), tol.relation),
                    ));
                    jobs.push(mapping(MappingKind::Composite, n));
                    jobs.push(mapping(MappingKind::Scaling, n));
                }
            }
        }
        Model::HarmonicOscillator { .. } => {
            for sign in [Sign::Plus, Sign::Minus] {
                jobs.push(guarded(
                    format!("ho.ladder-commutator{}", sign.symbol()),
                    model,
                    Some(0),
                    move || relation(RelationSpec::ho_ladder(&model, sign), tol.relation),
                ));
            }
            jobs.push(guarded(
                "ho.annihilation".into(),
                model,
                Some(0),
                move || {
                    let grid = interior_grid(&model, 0, GRID_MARGIN, 241);
                    one(check_annihilation(&model, &grid, tol.annihilation))
                },
            ));
            for n in 0..=top {
                for sign in [Sign::Plus, Sign::Minus] {
                    jobs.push(guarded(
                        format!("ho.two-step-commutator{}", sign.symbol()),
                        model,
                        Some(n),
                        move || {
                            let spec = RelationSpec::ho_two_step(&model, n, sign)?;
                            let tf = TestFamily::for_relation(&spec, k, seed)?;
                            one(check_ho_commutation(&model, n, sign, &tf, tol.relation))
                        },
                    ));
                }
                jobs.push(mapping(MappingKind::OscillatorLadder(Sign::Plus), n));
                jobs.push(mapping(MappingKind::OscillatorTwoStep(Sign::Plus), n));
                if n >= 1 {
                    jobs.push(mapping(MappingKind::OscillatorLadder(Sign::Minus), n));
                }
                if n >= 2 {
                    jobs.push(mapping(MappingKind::OscillatorTwoStep(Sign::Minus), n));
                }
            }
        }
        Model::CalogeroSutherland { .. } => {
            jobs.push(guarded("cs.closure".into(), model, Some(0), move || {
                relation(RelationSpec::cs_closure(&model), tol.closure)
            }));
            jobs.push(guarded(
                "cs.shape-invariance".into(),
                model,
                None,
                move || {
                    let spec = RelationSpec::cs_shape_invariance(&model)?;
                    let tf = TestFamily::for_relation(&spec, k, seed)?;
                    one(check_shape_invariance(
                        &spec,
                        &tf,
                        tol.shape,
                        tol.epsilon_spread,
                    ))
                },
            ));
            for n in 0..=top {
                for sign in [Sign::Plus, Sign::Minus] {
                    jobs.push(guarded(
                        format!("cs.ladder-commutator{}", sign.symbol()),
                        model,
                        Some(n),
                        move || relation(RelationSpec::cs_ladder(&model, n, sign), tol.relation),
                    ));
                }
                jobs.push(mapping(MappingKind::SinusoidalLadder(Sign::Plus), n));
                if n >= 1 {
                    jobs.push(mapping(MappingKind::SinusoidalLadder(Sign::Minus), n));
                }
                jobs.push(mapping(MappingKind::Supercharge, n));
            }
        }
    }
    jobs
}

/// Runs every applicable check for every configured model, in parallel,
/// and merges the rows in a fixed order.
pub fn run_verification(cfg: &VerifyConfig) -> VerificationReport {
    let start = std::time::Instant::now();
    let mut notes = Vec::new();
    let jobs: Vec<Job> = cfg
        .models
        .iter()
        .flat_map(|m| model_jobs(*m, cfg, &mut notes))
        .collect();
    let records: Vec<CheckRecord> = jobs.par_iter().flat_map_iter(|job| job()).collect();
    VerificationReport::from_records(records, notes, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_chain_examples() {
        let h = Model::hydrogen(1.0, 1.0, 0).unwrap();
        let r = &check_energy_chain(&h, 0, 1e-13).unwrap()[0];
        assert!(r.pass);
        assert_eq!(r.values["e_next"], -0.125);
        let s = Model::rosen_morse_spherical(2.0, 0.0).unwrap();
        let r = &check_energy_chain(&s, 0, 1e-13).unwrap()[0];
        assert!(r.pass && r.values["e_next"] == 3.0);
        let y = Model::rosen_morse_hyperbolic(9.0, 0.0).unwrap();
        let r = &check_energy_chain(&y, 0, 1e-13).unwrap()[0];
        assert!(r.pass && r.values["e_next"] == -24.25);
    }

    #[test]
    fn hydrogen_relation_on_eigenstates() {
        let h = Model::hydrogen(1.0, 1.0, 0).unwrap();
        let spec = RelationSpec::spectral(&h, 0).unwrap();
        let tf = TestFamily::for_relation(&spec, 0, 0).unwrap();
        let rec = check_relation_identity(&spec, &tf, 1e-8).unwrap();
        assert!(rec.pass, "{rec:?}");
    }

    #[test]
    fn zero_member_has_zero_residual() {
        let h = Model::hydrogen(1.0, 1.0, 0).unwrap();
        let spec = RelationSpec::spectral(&h, 0).unwrap();
        let tf = TestFamily::from_members(
            vec![("zero".into(), Arc::new(crate::diffop::Zero))],
            vec![0.5, 1.0, 2.0],
        );
        let rec = check_relation_identity(&spec, &tf, 1e-8).unwrap();
        assert_eq!(rec.residuals["identity"], 0.0);
    }

    #[test]
    fn hydrogen_mapping_example() {
        let h = Model::hydrogen(1.0, 1.0, 0).unwrap();
        let m = check_mapping(&h, 0).unwrap();
        assert!(m.rel_residual < 1e-8, "{m:?}");
        assert_eq!(m.m, Some(1));
        assert!(m.c.abs() > 0.0);
    }

    #[test]
    fn oscillator_lowering_of_ground_state_is_degenerate() {
        let o = Model::harmonic_oscillator(1.0, 1.0).unwrap();
        let case = mapping_case(MappingKind::OscillatorLadder(Sign::Minus), &o, 0).unwrap();
        assert!(matches!(
            run_mapping(&case),
            Err(Error::TargetOutOfSpectrum(_))
        ));
        let case = MappingCase {
            expected_shift: 0,
            ..case
        };
        assert!(matches!(run_mapping(&case), Err(Error::DegenerateImage(_))));
    }

    #[test]
    fn record_with_nan_fails() {
        let h = Model::hydrogen(1.0, 1.0, 0).unwrap();
        let r = CheckRecord::new("x", &h, None)
            .residual("a", f64::NAN, 1.0)
            .finish();
        assert!(!r.pass);
        let r = CheckRecord::new("x", &h, None)
            .residual("a", 0.5, 1.0)
            .finish();
        assert!(r.pass);
    }
}
