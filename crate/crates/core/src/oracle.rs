//! Finite-difference Sturm–Liouville eigensolver.
//!
//! Works only from the potential and kinetic factor of a model: the
//! Hamiltonian is discretized with second-order central differences on a
//! truncated interval with Dirichlet ends, the lowest eigenvalues are found
//! by Sturm-count bisection on the symmetric tridiagonal matrix, and two
//! grid levels are combined by Richardson extrapolation. Hydrogen is solved
//! for `u = r ψ`, whose effective potential `Model::potential` returns.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{reference_parameter_sets, BoundStates, Model, ModelId};
use crate::verify::{CheckRecord, Tolerances, VerificationReport};

/// Smallest interior point count accepted on any grid level.
pub const MIN_POINTS: usize = 64;

/// Fraction of the interval next to a truncated end where boundary mass is measured.
const EDGE_FRACTION: f64 = 0.02;
const EDGE_MASS_LIMIT: f64 = 1e-6;
const COUNT_DOUBLINGS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    /// Interior point counts, coarse to fine. The two finest are
    /// extrapolated; three or more also give an observed order.
    pub levels: Vec<usize>,
    /// Explicit interval; by default finite domain ends are used as they
    /// are and infinite ones are cut where the envelope of the highest
    /// requested state drops below `cutoff` of its peak.
    pub bounds: Option<(f64, f64)>,
    pub cutoff: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            levels: vec![1000, 2000, 4000],
            bounds: None,
            cutoff: 1e-12,
        }
    }
}

impl GridConfig {
    pub fn with_levels(levels: Vec<usize>) -> Self {
        Self {
            levels,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::InvalidGrid(
                "at least two grid levels are needed".into(),
            ));
        }
        if let Some(&n) = self.levels.iter().find(|&&n| n < MIN_POINTS) {
            return Err(Error::InvalidGrid(format!(
                "{n} points is below the minimum {MIN_POINTS}"
            )));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "levels must be strictly increasing".into(),
            ));
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(Error::InvalidGrid(format!(
                "cutoff {} outside (0, 1)",
                self.cutoff
            )));
        }
        Ok(())
    }

    fn interval(&self, model: &Model, top: usize) -> Result<(f64, f64)> {
        let dom = model.domain();
        let (lo, hi) = match self.bounds {
            Some(b) => b,
            None => model.envelope_interval(top, self.cutoff),
        };
        if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= dom.lo && hi <= dom.hi) {
            return Err(Error::InvalidGrid(format!(
                "bounds ({lo}, {hi}) not inside the domain ({}, {})",
                dom.lo, dom.hi
            )));
        }
        Ok((lo, hi))
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let e2 = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1]
            };
            q = self.diag[i] - x - e2 / q;
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            (lo.min(self.diag[i] - r), hi.max(self.diag[i] + r))
        })
    }

    /// The `j`-th smallest eigenvalue by bisection.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `k` smallest eigenvalues, ascending.
    pub fn lowest(&self, k: usize) -> Vec<f64> {
        (0..k.min(self.dim())).map(|j| self.eigenvalue(j)).collect()
    }

    /// Solves `(T - shift) x = rhs` by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let tiny = f64::EPSILON * self.gershgorin().1.abs().max(1.0);
        let nonzero = |p: f64| if p == 0.0 { tiny } else { p };
        let (mut u0, mut u1, mut u2, mut z) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut cb = self.diag[0] - shift;
        let mut cc = if n > 1 { self.off[0] } else { 0.0 };
        let mut cy = rhs[0];
        for i in 0..n.saturating_sub(1) {
            let a = self.off[i];
            let nb = self.diag[i + 1] - shift;
            let nc = if i + 2 < n { self.off[i + 1] } else { 0.0 };
            let ny = rhs[i + 1];
            if a.abs() > cb.abs() {
                (u0[i], u1[i], u2[i], z[i]) = (a, nb, nc, ny);
                let m = cb / a;
                (cb, cc, cy) = (cc - m * nb, -m * nc, cy - m * ny);
            } else {
                let p = nonzero(cb);
                (u0[i], u1[i], u2[i], z[i]) = (p, cc, 0.0, cy);
                let m = a / p;
                (cb, cc, cy) = (nb - m * cc, nc, ny - m * cy);
            }
        }
        u0[n - 1] = nonzero(cb);
        z[n - 1] = cy;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = z[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        x
    }

    /// Unit eigenvector for an accurate eigenvalue, by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.dim();
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64)
            .collect();
        for _ in 0..4 {
            v = self.solve_shifted(lambda, &v);
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            v.iter_mut().for_each(|t| *t /= norm);
        }
        v
    }
}

/// Central-difference Hamiltonian with Dirichlet ends at `lo` and `hi`.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub grid: Vec<f64>,
    pub spacing: f64,
    pub matrix: Tridiagonal,
}

pub fn discretize(model: &Model, lo: f64, hi: f64, points: usize) -> Discretization {
    let h = (hi - lo) / (points + 1) as f64;
    let c = model.kinetic_factor() / (h * h);
    let grid: Vec<f64> = (1..=points).map(|i| lo + i as f64 * h).collect();
    let diag = grid.iter().map(|&x| 2.0 * c + model.potential(x)).collect();
    Discretization {
        grid,
        spacing: h,
        matrix: Tridiagonal::new(diag, vec![-c; points - 1]),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    /// Richardson-extrapolated eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// `|finest - extrapolated|` per eigenvalue.
    pub error_estimates: Vec<f64>,
    /// Raw eigenvalues and grid spacings, one row per grid level and one
    /// column per eigenvalue.
    pub level_eigenvalues: Vec<Vec<f64>>,
    pub spacings: Vec<Vec<f64>>,
    /// Interval each eigenvalue was solved on.
    pub bounds: Vec<(f64, f64)>,
    /// Finest grid of each eigenvalue and its eigenvector, normalized so
    /// `Σ v² h = 1`.
    pub grids: Vec<Vec<f64>>,
    pub eigenvectors: Vec<Vec<f64>>,
}

fn check_count(model: &Model, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameters("k must be at least 1".into()));
    }
    model.check_level(k - 1)
}

/// Lowest `k` eigenvalues and eigenvectors of the discretized Hamiltonian.
/// Unless bounds are given, level `n` is solved on its own interval, cut
/// where the envelope of that level drops below the cutoff, so compact low
/// states are not under-resolved on a box sized for the highest one.
pub fn fd_eigensolve(model: &Model, k: usize, cfg: &GridConfig) -> Result<OracleResult> {
    cfg.validate()?;
    check_count(model, k)?;
    let levels = cfg.levels.len();
    let mut out = OracleResult {
        eigenvalues: Vec::with_capacity(k),
        error_estimates: Vec::with_capacity(k),
        level_eigenvalues: vec![Vec::with_capacity(k); levels],
        spacings: vec![Vec::with_capacity(k); levels],
        bounds: Vec::with_capacity(k),
        grids: Vec::with_capacity(k),
        eigenvectors: Vec::with_capacity(k),
    };
    for n in 0..k {
        let bounds = cfg.interval(model, n)?;
        let discs: Vec<Discretization> = cfg
            .levels
            .iter()
            .map(|&pts| discretize(model, bounds.0, bounds.1, pts))
            .collect();
        let raw: Vec<f64> = discs.iter().map(|d| d.matrix.eigenvalue(n)).collect();
        let fine = &discs[levels - 1];
        let (hc, hf) = (discs[levels - 2].spacing, fine.spacing);
        let (ec, ef) = (raw[levels - 2], raw[levels - 1]);
        let extrapolated = ef + (ef - ec) * hf * hf / (hc * hc - hf * hf);

        let mut v = fine.matrix.eigenvector(ef);
        let lead = v.iter().copied().find(|t| t.abs() > 1e-8).unwrap_or(1.0);
        let sign = lead.signum() / fine.spacing.sqrt();
        v.iter_mut().for_each(|t| *t *= sign);
        if n == 0 {
            let mass = edge_mass(model, bounds, &fine.grid, &v, fine.spacing);
            if mass > EDGE_MASS_LIMIT {
                return Err(Error::TruncationTooTight(mass));
            }
        }

        out.eigenvalues.push(extrapolated);
        out.error_estimates.push((ef - extrapolated).abs());
        for (lvl, d) in discs.iter().enumerate() {
            out.level_eigenvalues[lvl].push(raw[lvl]);
            out.spacings[lvl].push(d.spacing);
        }
        out.bounds.push(bounds);
        out.grids.push(fine.grid.clone());
        out.eigenvectors.push(v);
    }
    if out.eigenvalues.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidGrid(
            "eigenvalues not separated on this grid".into(),
        ));
    }
    Ok(out)
}

/// Probability mass within `EDGE_FRACTION` of a truncated (artificial) end.
fn edge_mass(model: &Model, (lo, hi): (f64, f64), grid: &[f64], v: &[f64], h: f64) -> f64 {
    let dom = model.domain();
    let band = EDGE_FRACTION * (hi - lo);
    let cut_lo = lo > dom.lo;
    let cut_hi = hi < dom.hi;
    grid.iter()
        .zip(v)
        .filter(|(&x, _)| (cut_lo && x < lo + band) || (cut_hi && x > hi - band))
        .map(|(_, t)| t * t * h)
        .sum()
}

/// Limit of the potential at the far end of an unbounded domain.
pub fn continuum_threshold(model: &Model) -> Option<f64> {
    match *model {
        Model::RosenMorseHyperbolic { g, .. } => Some(-2.0 * g),
        Model::HydrogenRadial { .. } => Some(0.0),
        _ => None,
    }
}

/// Eigenvalues below the continuum threshold, starting from the finest
/// level and doubling the grid until two successive counts agree.
/// The interval defaults to the envelope of the highest bound state, or to
/// the ground-state envelope when the closed forms predict none.
pub fn count_below_threshold(model: &Model, cfg: &GridConfig) -> Result<usize> {
    cfg.validate()?;
    let threshold = continuum_threshold(model).ok_or_else(|| {
        Error::UnsupportedModel(format!("{} has no continuum threshold", model.id()))
    })?;
    let top = match model.bound_state_count() {
        BoundStates::Finite(c) => c.saturating_sub(1),
        BoundStates::Unbounded => {
            return Err(Error::UnsupportedModel(format!(
                "{} has infinitely many bound states",
                model.id()
            )))
        }
    };
    let (lo, hi) = cfg.interval(model, top)?;
    let mut n = *cfg.levels.last().expect("validated");
    let mut count = discretize(model, lo, hi, n).matrix.count_below(threshold);
    // coarse grids shift levels upward and can lose one just below threshold
    for _ in 0..COUNT_DOUBLINGS {
        n *= 2;
        let next = discretize(model, lo, hi, n).matrix.count_below(threshold);
        if next == count {
            return Ok(count);
        }
        count = next;
    }
    Err(Error::InvalidGrid(format!(
        "bound-state count still changing at {n} points"
    )))
}

/// Least-squares slope of `ln|error|` against `ln h`.
pub fn observed_order(spacings: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = spacings
        .iter()
        .zip(errors)
        .map(|(h, e)| (h.ln(), e.abs().max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Closed-form state on the finite-difference grid, in the same
/// (unweighted) representation as the oracle eigenvectors.
fn closed_form_on_grid(model: &Model, n: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let psi = model.eigenfunction(n)?;
    let radial = matches!(model, Model::HydrogenRadial { .. });
    grid.iter()
        .map(|&x| {
            let v = crate::diffop::Func::value(&psi, x)?.re;
            Ok(if radial { x * v } else { v })
        })
        .collect()
}

/// Per-level comparison of the oracle against the closed forms.
pub fn compare_with_closed_form(
    model: &Model,
    k: usize,
    cfg: &GridConfig,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let res = fd_eigensolve(model, k, cfg)?;
    let mut out = Vec::with_capacity(k + 1);
    for n in 0..k {
        let exact = model.eigenvalue(n)?;
        let scale = exact.abs().max(f64::MIN_POSITIVE);
        let rel = (res.eigenvalues[n] - exact).abs() / scale;
        let phi = closed_form_on_grid(model, n, &res.grids[n])?;
        let v = &res.eigenvectors[n];
        let dot: f64 = v.iter().zip(&phi).map(|(a, b)| a * b).sum();
        let nv: f64 = v.iter().map(|a| a * a).sum();
        let np: f64 = phi.iter().map(|b| b * b).sum();
        let overlap = dot.abs() / (nv * np).sqrt();
        let bracketed = (res.eigenvalues[n] - exact).abs() <= res.error_estimates[n];
        let mut rec = CheckRecord::new(format!("{}.oracle", model.id().slug()), model, Some(n))
            .residual("eigenvalue", rel, tol.oracle)
            .residual("overlap_defect", (1.0 - overlap).abs(), tol.oracle)
            .value("e_exact", exact)
            .value("e_oracle", res.eigenvalues[n])
            .value("error_estimate", res.error_estimates[n])
            .value("bracketed", if bracketed { 1.0 } else { 0.0 });
        if res.spacings.len() >= 3 {
            let errors: Vec<f64> = res
                .level_eigenvalues
                .iter()
                .map(|row| row[n] - exact)
                .collect();
            let spacings: Vec<f64> = res.spacings.iter().map(|row| row[n]).collect();
            let p = observed_order(&spacings, &errors);
            rec = rec
                .residual("order", (p - 2.0).abs(), tol.order_band)
                .value("observed_order", p);
        }
        out.push(rec.finish());
    }
    if let Some(BoundStates::Finite(expected)) =
        continuum_threshold(model).map(|_| model.bound_state_count())
    {
        let counted = count_below_threshold(model, cfg)?;
        out.push(
            CheckRecord::new(
                format!("{}.oracle-bound-count", model.id().slug()),
                model,
                None,
            )
            .residual("count", (counted as f64 - expected as f64).abs(), 0.0)
            .value("counted", counted as f64)
            .value("expected", expected as f64)
            .finish(),
        );
    }
    Ok(out)
}

/// Whether second-order differences plus Richardson reach full accuracy.
/// Near a singular endpoint `ψ ~ x^γ`; for Calogero–Sutherland with
/// `g < 1` the order drops to `2g - 1`, at `g = 1.5` the endpoint term
/// has the same power of `h` as the leading error, and for the hyperbolic well a
/// non-integer `ℓ` leaves a non-analytic remainder that extrapolation with
/// exponent 2 does not remove.
pub fn oracle_regular(model: &Model) -> bool {
    match *model {
        Model::CalogeroSutherland { g } => g >= 1.0 && g != 1.5,
        Model::RosenMorseHyperbolic { l, .. } => l.fract() == 0.0,
        _ => true,
    }
}

/// First three reference parameter sets of each model that are
/// [`oracle_regular`].
pub fn default_oracle_models() -> Vec<Model> {
    ModelId::ALL
        .iter()
        .flat_map(|id| {
            reference_parameter_sets(*id)
                .into_iter()
                .filter(oracle_regular)
                .take(3)
        })
        .collect()
}

/// Oracle comparison over several models; `k` is clipped to each model's
/// discrete spectrum (with a note).
pub fn run_oracle_matrix(
    models: &[Model],
    k: usize,
    cfg: &GridConfig,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if k == 0 {
        return Err(Error::InvalidParameters("k must be at least 1".into()));
    }
    cfg.validate()?;
    let start = std::time::Instant::now();
    let mut notes = Vec::new();
    let jobs: Vec<(Model, usize)> = models
        .iter()
        .filter_map(|m| {
            let kk = match m.bound_state_count() {
                BoundStates::Finite(c) if c < k => {
                    notes.push(format!("{}: oracle limited to k={c}", m.label()));
                    c
                }
                _ => k,
            };
            (kk > 0).then_some((*m, kk))
        })
        .collect();
    let records: Vec<CheckRecord> = jobs
        .par_iter()
        .flat_map_iter(|(m, kk)| match compare_with_closed_form(m, *kk, cfg, tol) {
            Ok(r) => r,
            Err(e) => vec![CheckRecord::failed(
                format!("{}.oracle", m.id().slug()),
                m,
                None,
                &e,
            )],
        })
        .collect();
    Ok(VerificationReport::from_records(
        records,
        notes,
        start.elapsed().as_secs_f64(),
    ))
}
