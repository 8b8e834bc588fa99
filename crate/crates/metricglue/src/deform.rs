//! The boundary deformation family and its smooth ingredients.
//!
//! Given a background metric `g` and a model metric `g̃` that agrees with `g`
//! on the boundary (same induced metric, Fermi charts), the family is built
//! from the *collar strain*
//!
//! ```text
//!     S(u, s) = ζ(s/d) · (g̃ − g)(u, s) / s ,
//! ```
//!
//! a bounded tensor field because `g̃ − g` vanishes on the boundary.  The
//! deformed metric has two branches, glued at the inner radius
//! `ρ* = exp(−λ²)`:
//!
//! ```text
//!     ĝ_λ = g + λ⁻¹ χ(λ s) S              for s ≥ ρ*          (outer)
//!     ĝ_λ = g̃ − λ s² β(λ⁻² log s) S       for s < ρ*          (inner)
//! ```
//!
//! with `ĝ_λ = g̃` exactly once `s ≤ exp(−2λ²)` (where `β` vanishes), and
//! `ĝ_λ = g` exactly once `s ≥ ⅔ d` (where `ζ` vanishes).  At `s = ρ*` both
//! branches reduce to `g + s S − ½ λ s² S` because `χ(a) = a − a²/2` below
//! `a = ½` and `β ≡ ½` there; [`interface_residual`] measures how well the
//! floating-point evaluation honours that identity.
//!
//! The smaller cutoff scale makes the deformation *structurally* valid only
//! for `λ` above a threshold: the interface must sit inside the flat part of
//! `ζ`, i.e. `exp(−λ²) ≤ d/3`.  Constructors enforce this.

use std::sync::Arc;

use ndarray::{Array2, Array3, Array4};

use crate::fields::{CollarChart, MetricField, MetricJet, TensorField, TensorJet};
use crate::tensor::SymForm;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Smooth step and Gauss–Legendre quadrature
// ---------------------------------------------------------------------------

/// The standard smooth step `σ(t) = E(t) / (E(t) + E(1-t))` with
/// `E(t) = exp(-1/t)`: identically `0` for `t ≤ 0`, identically `1` for
/// `t ≥ 1`, strictly increasing in between, with all derivatives vanishing at
/// both ends.  Returns `(σ, σ', σ'')`; graceful under `exp` underflow near
/// the endpoints (the flats are reached exactly).
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    // E and its derivatives; E(t) underflows to exactly 0 for t < ~1/745,
    // which lands on the correct flat value.
    fn e_jet(t: f64) -> (f64, f64, f64) {
        let e = (-1.0 / t).exp();
        if e == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let t2 = t * t;
        let de = e / t2;
        let dde = e * (1.0 / (t2 * t2) - 2.0 / (t2 * t));
        (e, de, dde)
    }
    let (a, da, dda) = e_jet(t);
    let (b, db_inner, ddb_inner) = e_jet(1.0 - t);
    let db = -db_inner;
    let ddb = ddb_inner;
    let d = a + b;
    if d == 0.0 {
        // Both factors underflow only in a region excluded by the guards
        // above; keep a defensive midpoint value.
        return (0.5, 0.0, 0.0);
    }
    let sigma = a / d;
    let dd = da + db;
    let num1 = da * b - a * db;
    let dsigma = num1 / (d * d);
    let num2 = dda * b - a * ddb;
    let ddsigma = (num2 * d - 2.0 * num1 * dd) / (d * d * d);
    (sigma, dsigma, ddsigma)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed at runtime by
/// Newton iteration on the Legendre recurrence (no hard-coded tables).
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2, "quadrature order must be at least 2");
        let k = order;
        let mut nodes = vec![0.0; k];
        let mut weights = vec![0.0; k];
        for i in 0..k {
            // Tricomi-style initial guess for the i-th root (descending).
            let mut x =
                (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence: P_0 = 1, P_1 = x.
                let mut p0 = 1.0;
                let mut p1 = x;
                for j in 2..=k {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() <= 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    /// Composite quadrature of `f` over `[a, b]` with `panels` equal panels.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let p = panels.max(1);
        let width = (b - a) / p as f64;
        let mut total = 0.0;
        for panel in 0..p {
            let lo = a + width * panel as f64;
            let mid = lo + 0.5 * width;
            let half = 0.5 * width;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
                acc += w * f(mid + half * x);
            }
            total += acc * half;
        }
        total
    }
}

// ---------------------------------------------------------------------------
// The outer cutoff χ
// ---------------------------------------------------------------------------

const CHI_PANELS: usize = 8;
const CHI_ORDER: usize = 20;

/// The outer cutoff: a concave `C²` function with
///
/// * `χ(a) = a − a²/2` exactly for `a ∈ [0, ½]` (so `χ(½) = 3/8`, `χ'(½) = ½`),
/// * `χ'' = −g < 0` on `[½, 1)` for an explicit smooth density `g ≥ 0`,
/// * `χ'(1) = 0` **by construction** (the density is normalised through the
///   same quadrature operator used for evaluation, so the tail integral at 1
///   is the empty integral), and
/// * `χ` constant (`= χ(1) ∈ (3/8, 5/8)`) for `a ≥ 1`.
///
/// On `[½, 1]` the derivative is the tail integral `χ'(a) = ∫_a^1 g`, kept
/// nonnegative because the quadrature weights and the density are; the value
/// uses the exchanged double integral
/// `χ(a) = 3/8 + ∫_½^a (v−½) g(v) dv + (a−½) χ'(a)`.
#[derive(Debug, Clone)]
pub struct CutoffChi {
    gl: GaussLegendre,
    /// Amplitude of the interior bump in the density.
    bump_amplitude: f64,
    /// The constant value for `a ≥ 1`.
    limit: f64,
}

/// The interior bump of the χ density: supported on `(0.55, 0.95)`,
/// `exp(-1/(u(1-u)))` in the normalised variable.
fn chi_bump(s: f64) -> f64 {
    let u = (s - 0.55) / 0.4;
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    (-1.0 / (u * (1.0 - u))).exp()
}

impl CutoffChi {
    pub fn new() -> Self {
        let gl = GaussLegendre::new(CHI_ORDER);
        // Normalise the density so that ∫_{1/2}^1 g = 1/2 *under this exact
        // quadrature*, making χ'(½⁺) = ½ and χ'(1) = 0 to machine precision.
        let base = gl.integrate(0.5, 1.0, CHI_PANELS, |s| {
            1.0 - smoothstep((s - 0.5) / 0.52).0
        });
        let bump = gl.integrate(0.5, 1.0, CHI_PANELS, chi_bump);
        let bump_amplitude = (0.5 - base) / bump;
        let mut chi = Self {
            gl,
            bump_amplitude,
            limit: 0.0,
        };
        let moment = chi.moment_integral(1.0);
        chi.limit = 0.375 + moment + 0.5 * chi.tail_integral(1.0);
        chi
    }

    /// The density `g(s) = (1 − σ((s−½)/0.52)) + amplitude · bump(s)` on `[½, 1]`.
    ///
    /// The complement argument is `(s−½)/0.52` rather than the naive `2s−1`:
    /// `σ` rounds to exactly 1 in `f64` once its argument passes ≈ 0.973,
    /// which would zero the density (and χ'') on a neighbourhood of 1.  The
    /// 0.52 scaling keeps the argument ≤ 0.962 on `[½, 1]`, so the density
    /// stays strictly positive and χ strictly concave through `s = 1 − 10⁻³`.
    fn density(&self, s: f64) -> f64 {
        (1.0 - smoothstep((s - 0.5) / 0.52).0) + self.bump_amplitude * chi_bump(s)
    }

    fn tail_integral(&self, s: f64) -> f64 {
        self.gl.integrate(s, 1.0, CHI_PANELS, |v| self.density(v))
    }

    fn moment_integral(&self, s: f64) -> f64 {
        self.gl
            .integrate(0.5, s, CHI_PANELS, |v| (v - 0.5) * self.density(v))
    }

    /// The constant value of `χ` on `[1, ∞)`.
    pub fn limit(&self) -> f64 {
        self.limit
    }

    /// `(χ(a), χ'(a), χ''(a))` for `a ≥ 0`.
    pub fn eval(&self, a: f64) -> (f64, f64, f64) {
        if a <= 0.5 {
            return (a - 0.5 * a * a, 1.0 - a, -1.0);
        }
        if a >= 1.0 {
            return (self.limit, 0.0, 0.0);
        }
        let dchi = self.tail_integral(a);
        let chi = 0.375 + self.moment_integral(a) + (a - 0.5) * dchi;
        (chi, dchi, -self.density(a))
    }
}

impl Default for CutoffChi {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// The inner cutoff β
// ---------------------------------------------------------------------------

/// The inner cutoff on the logarithmic variable `t = λ⁻² log s ≤ 0`:
/// identically `0` for `t ≤ −2`, identically `½` for `t ≥ −1`, and
/// `½ σ(t+2)` in between.  The flats are exact, so the deformed metric equals
/// the model metric exactly below `s = exp(−2λ²)` and matches the outer
/// branch identity at `s = exp(−λ²)`.
#[derive(Debug, Clone, Default)]
pub struct CutoffBeta;

impl CutoffBeta {
    pub fn new() -> Self {
        Self
    }

    /// `(β(t), β'(t), β''(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t >= -1.0 {
            return (0.5, 0.0, 0.0);
        }
        if t <= -2.0 {
            return (0.0, 0.0, 0.0);
        }
        let (s, ds, dds) = smoothstep(t + 2.0);
        (0.5 * s, 0.5 * ds, 0.5 * dds)
    }
}

/// The strain support cutoff: `ζ(u) = 1 − σ(3u − 1)`, identically `1` on
/// `[0, ⅓]` and identically `0` on `[⅔, ∞)`.  Returns `(ζ, ζ', ζ'')`.
pub fn zeta(u: f64) -> (f64, f64, f64) {
    let (s, ds, dds) = smoothstep(3.0 * u - 1.0);
    (1.0 - s, -3.0 * ds, -9.0 * dds)
}

// ---------------------------------------------------------------------------
// Strain field
// ---------------------------------------------------------------------------

/// Normal depth below which the strain switches from the direct quotient
/// `ζ·(g̃−g)/s` to the boundary Taylor form.  Chosen where the two error
/// curves cross: quotient cancellation grows like `ε/s`, Taylor truncation
/// like `s`.
const TAYLOR_SWITCH: f64 = 1e-5;

/// The collar strain `S(u, s) = ζ(s/d) (g̃ − g)(u, s) / s`, exposed as a
/// tensor field with exact jets.
///
/// Near the boundary the quotient is evaluated from the boundary jets of
/// `g̃ − g` instead (the difference vanishes at `s = 0`, so the direct
/// quotient loses all significant digits as `s → 0`):
///
/// * `S = ∂_s Δ(u,0) + (s/2) ∂²_s Δ(u,0)`,
/// * `∂_s S = ½ ∂²_s Δ(u,0)`,  `∂_a S = ∂_a ∂_s Δ(u,0)`,
/// * second derivatives `0` (their influence on downstream curvature is
///   weighted by the deformation size, itself `O(s)` there).
///
/// At `s = 0` the strain is `2(A_g − A_g̃)` on boundary directions — twice
/// the gap between the second fundamental forms.
pub struct StrainField {
    g: Arc<dyn MetricField>,
    tilde: Arc<dyn MetricField>,
    /// Support width `d`: the strain vanishes identically for `s ≥ ⅔ d`.
    support: f64,
    dim: usize,
}

/// Builds the collar strain for a background/model pair, validating that the
/// charts are compatible Fermi charts over the same boundary patch and that
/// the two metrics agree on the boundary itself (sampled).
pub fn build_strain(
    g: Arc<dyn MetricField>,
    tilde: Arc<dyn MetricField>,
    delta: f64,
) -> Result<StrainField> {
    let cg = g.chart();
    let ct = tilde.chart();
    if cg.dim != ct.dim {
        return Err(Error::DimensionMismatch {
            expected: cg.dim,
            found: ct.dim,
        });
    }
    if !cg.fermi || !ct.fermi {
        return Err(Error::InvalidParameter(
            "strain construction needs Fermi charts on both metrics".into(),
        ));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "collar width must be positive, got {delta}"
        )));
    }
    let support = delta.min(0.999 * cg.max_s.min(ct.max_s));
    if support < 1e-3 {
        return Err(Error::InvalidParameter(format!(
            "strain support {support:.3e} is too thin (charts: {:.3e}, {:.3e})",
            cg.max_s, ct.max_s
        )));
    }
    // Boundary agreement: sample a tensor grid of boundary points.
    let hw = cg.boundary_halfwidth.min(ct.boundary_halfwidth);
    let n = cg.dim;
    let mut max_diff = 0.0f64;
    for trial in 0..17 {
        let mut x = vec![0.0; n];
        for (k, c) in x.iter_mut().enumerate().take(n - 1) {
            let t = (((trial + 1) * (k + 2) * 2654435761usize) % 1999) as f64 / 999.5 - 1.0;
            *c = 0.9 * hw * t;
        }
        let jg = g.jet(&x)?;
        let jt = tilde.jet(&x)?;
        for i in 0..n {
            for j in 0..n {
                max_diff = max_diff.max((jg.g.get(i, j) - jt.g.get(i, j)).abs());
            }
        }
    }
    if max_diff > 1e-9 {
        return Err(Error::BoundaryMismatch { max_diff });
    }
    Ok(StrainField {
        g,
        tilde,
        support,
        dim: cg.dim,
    })
}

impl StrainField {
    /// Support width `d`; the field vanishes for `s ≥ ⅔ d`.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// Strain at the boundary point `u` itself: `2(A_g − A_g̃)` padded with
    /// zero normal components.
    pub fn boundary_value(&self, u: &[f64]) -> Result<Array2<f64>> {
        let mut x = u.to_vec();
        x.push(0.0);
        Ok(self.jet(&x)?.value)
    }
}

impl TensorField for StrainField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Result<TensorJet> {
        let n = self.dim;
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        let s = x[n - 1];
        if !(s >= 0.0) {
            return Err(Error::PointOutsideChart {
                s,
                max_s: self.support,
            });
        }
        // Outside the support: identically zero, and the model metric is
        // never evaluated (its chart may end sooner than the background's).
        if s >= 2.0 / 3.0 * self.support {
            return Ok(TensorJet::zeros(n));
        }

        if s < TAYLOR_SWITCH {
            // Boundary-jet Taylor form.
            let mut x0 = x.to_vec();
            x0[n - 1] = 0.0;
            let d0 = TensorJet::difference(&self.tilde.jet(&x0)?, &self.g.jet(&x0)?);
            let mut jet = TensorJet::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    jet.value[[i, j]] =
                        d0.d[[n - 1, i, j]] + 0.5 * s * d0.dd[[n - 1, n - 1, i, j]];
                    jet.d[[n - 1, i, j]] = 0.5 * d0.dd[[n - 1, n - 1, i, j]];
                    for a in 0..n - 1 {
                        jet.d[[a, i, j]] = d0.dd[[a, n - 1, i, j]];
                    }
                }
            }
            return Ok(jet);
        }

        // Direct quotient with the support cutoff.
        let delta = TensorJet::difference(&self.tilde.jet(x)?, &self.g.jet(x)?);
        let d = self.support;
        let (z, dz_u, ddz_u) = zeta(s / d);
        let z1 = dz_u / d;
        let z2 = ddz_u / (d * d);
        let w = z / s;
        let w1 = z1 / s - z / (s * s);
        let w2 = z2 / s - 2.0 * z1 / (s * s) + 2.0 * z / (s * s * s);

        let mut jet = TensorJet::zeros(n);
        let nn = n - 1;
        for i in 0..n {
            for j in 0..n {
                let v = delta.value[[i, j]];
                jet.value[[i, j]] = w * v;
                for m in 0..n {
                    jet.d[[m, i, j]] = w * delta.d[[m, i, j]];
                    for p in 0..n {
                        jet.dd[[m, p, i, j]] = w * delta.dd[[m, p, i, j]];
                    }
                }
                jet.d[[nn, i, j]] += w1 * v;
                for p in 0..n {
                    jet.dd[[nn, p, i, j]] += w1 * delta.d[[p, i, j]];
                    jet.dd[[p, nn, i, j]] += w1 * delta.d[[p, i, j]];
                }
                jet.dd[[nn, nn, i, j]] += w2 * v;
            }
        }
        Ok(jet)
    }
}

// ---------------------------------------------------------------------------
// The deformation family
// ---------------------------------------------------------------------------

/// Which branch of the family applies at a given normal depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `s ≤ exp(−2λ²)`: the metric is the model metric exactly.
    Model,
    /// `exp(−2λ²) < s < exp(−λ²)`: the logarithmic bridge
    /// `g̃ − λ s² β(λ⁻² log s) S`.
    Inner,
    /// `s ≥ exp(−λ²)`: the collar branch `g + λ⁻¹ χ(λ s) S`.
    Outer,
}

/// One member `ĝ_λ` of the deformation family, usable anywhere a metric
/// field is.
pub struct DeformationData {
    g: Arc<dyn MetricField>,
    tilde: Arc<dyn MetricField>,
    strain: StrainField,
    chi: CutoffChi,
    beta: CutoffBeta,
    /// Requested collar width (the strain support is `min(delta, charts)`).
    pub delta: f64,
    /// Deformation strength.
    pub lambda: f64,
    chart: CollarChart,
}

/// The smallest `λ` for which the construction is structurally valid over a
/// strain support `d`: the branch interface `exp(−λ²)` must sit inside the
/// flat region of the support cutoff, `exp(−λ²) ≤ d/3`.
pub fn structural_threshold(support: f64) -> f64 {
    (3.0 / support).ln().max(1.0).sqrt().max(1.0)
}

impl DeformationData {
    pub fn new(
        g: Arc<dyn MetricField>,
        tilde: Arc<dyn MetricField>,
        delta: f64,
        lambda: f64,
    ) -> Result<Self> {
        let strain = build_strain(g.clone(), tilde.clone(), delta)?;
        let required = structural_threshold(strain.support());
        if !(lambda >= required) {
            return Err(Error::LambdaBelowThreshold { lambda, required });
        }
        let cg = g.chart();
        let ct = tilde.chart();
        let chart = CollarChart {
            dim: cg.dim,
            max_s: cg.max_s,
            boundary_halfwidth: cg.boundary_halfwidth.min(ct.boundary_halfwidth),
            fermi: true,
        };
        Ok(Self {
            g,
            tilde,
            strain,
            chi: CutoffChi::new(),
            beta: CutoffBeta::new(),
            delta,
            lambda,
            chart,
        })
    }

    /// The branch interface `ρ* = exp(−λ²)` (may underflow to zero for very
    /// large `λ`, in which case the inner branch is empty in floating point).
    pub fn inner_radius(&self) -> f64 {
        (-self.lambda * self.lambda).exp()
    }

    /// The radius `exp(−2λ²)` below which the metric is the model metric
    /// exactly.
    pub fn model_radius(&self) -> f64 {
        (-2.0 * self.lambda * self.lambda).exp()
    }

    /// Strain support width `d`.
    pub fn support(&self) -> f64 {
        self.strain.support()
    }

    pub fn strain(&self) -> &StrainField {
        &self.strain
    }

    pub fn background(&self) -> &Arc<dyn MetricField> {
        &self.g
    }

    pub fn model(&self) -> &Arc<dyn MetricField> {
        &self.tilde
    }

    /// The branch that applies at normal depth `s`.
    pub fn branch_at(&self, s: f64) -> Branch {
        if s <= self.model_radius() {
            Branch::Model
        } else if s < self.inner_radius() {
            Branch::Inner
        } else {
            Branch::Outer
        }
    }

    /// Evaluates the jet through a *specific* branch formula (used for
    /// interface diagnostics; [`MetricField::jet`] picks the branch from the
    /// depth).
    pub fn branch_jet(&self, x: &[f64], branch: Branch) -> Result<MetricJet> {
        self.chart.check_point(x)?;
        let n = self.chart.dim;
        let s = x[n - 1];
        match branch {
            Branch::Model => self.tilde.jet(x),
            Branch::Inner => {
                if s <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "inner branch needs s > 0".into(),
                    ));
                }
                let lam = self.lambda;
                let t = s.ln() / (lam * lam);
                let (b0, b1, b2) = self.beta.eval(t);
                // b(s) = −λ s² β(t(s)),  t = λ⁻² log s.
                let b = -lam * s * s * b0;
                let db = -2.0 * lam * s * b0 - (s / lam) * b1;
                let ddb = -2.0 * lam * b0 - 3.0 / lam * b1 - b2 / (lam * lam * lam);
                let base = self.tilde.jet(x)?;
                let strain = self.strain.jet(x)?;
                Ok(combine(&base, &strain, b, db, ddb, n))
            }
            Branch::Outer => {
                let lam = self.lambda;
                let (c0, c1, c2) = self.chi.eval(lam * s);
                let c = c0 / lam;
                let dc = c1;
                let ddc = lam * c2;
                let base = self.g.jet(x)?;
                let strain = self.strain.jet(x)?;
                Ok(combine(&base, &strain, c, dc, ddc, n))
            }
        }
    }
}

/// `base + f(s)·S` as a metric jet, for a scalar profile with two
/// derivatives in the normal direction.
fn combine(
    base: &MetricJet,
    strain: &TensorJet,
    f: f64,
    df: f64,
    ddf: f64,
    n: usize,
) -> MetricJet {
    let nn = n - 1;
    let g = SymForm::from_fn(n, |i, j| base.g.get(i, j) + f * strain.value[[i, j]]);
    let mut dg = Array3::zeros((n, n, n));
    let mut ddg = Array4::zeros((n, n, n, n));
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                dg[[m, i, j]] = base.dg[[m, i, j]] + f * strain.d[[m, i, j]];
                for p in 0..n {
                    ddg[[m, p, i, j]] = base.ddg[[m, p, i, j]] + f * strain.dd[[m, p, i, j]];
                }
            }
            dg[[nn, i, j]] += df * strain.value[[i, j]];
            for p in 0..n {
                ddg[[nn, p, i, j]] += df * strain.d[[p, i, j]];
                ddg[[p, nn, i, j]] += df * strain.d[[p, i, j]];
            }
            ddg[[nn, nn, i, j]] += ddf * strain.value[[i, j]];
        }
    }
    MetricJet { g, dg, ddg }
}

impl MetricField for DeformationData {
    fn chart(&self) -> CollarChart {
        self.chart.clone()
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.chart.check_point(x)?;
        let s = x[self.chart.dim - 1];
        self.branch_jet(x, self.branch_at(s))
    }
}

/// Componentwise agreement of the two branch formulas at the interface
/// `s = ρ*`, maximised over sampled boundary points: the largest absolute
/// difference in the metric components, their first derivatives, and their
/// second derivatives.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InterfaceResidual {
    /// The interface depth the residual was evaluated at.
    pub location: f64,
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Evaluates both branch formulas exactly at the interface and reports their
/// disagreement, maximised over the supplied boundary points.  Errors if the
/// interface has underflowed to zero (no interface exists in floating point).
pub fn interface_residual(
    data: &DeformationData,
    boundary_points: &[Vec<f64>],
) -> Result<InterfaceResidual> {
    let rho = data.inner_radius();
    if rho <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "interface exp(-lambda^2) underflows for lambda = {}",
            data.lambda
        )));
    }
    let n = data.chart().dim;
    let mut out = InterfaceResidual {
        location: rho,
        value: 0.0,
        first: 0.0,
        second: 0.0,
    };
    for u in boundary_points {
        if u.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: u.len(),
            });
        }
        let mut x = u.clone();
        x.push(rho);
        let outer = data.branch_jet(&x, Branch::Outer)?;
        let inner = data.branch_jet(&x, Branch::Inner)?;
        for i in 0..n {
            for j in 0..n {
                out.value = out
                    .value
                    .max((outer.g.get(i, j) - inner.g.get(i, j)).abs());
                for m in 0..n {
                    out.first = out
                        .first
                        .max((outer.dg[[m, i, j]] - inner.dg[[m, i, j]]).abs());
                    for p in 0..n {
                        out.second = out
                            .second
                            .max((outer.ddg[[m, p, i, j]] - inner.ddg[[m, p, i, j]]).abs());
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::second_fundamental_form;
    use crate::fields::{RoundCylinder, SphericalCap, WarpedCollar};

    fn fd2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
        // Richardson-extrapolated first and second central differences.
        let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let dd = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        (
            (4.0 * d(h / 2.0) - d(h)) / 3.0,
            (4.0 * dd(h / 2.0) - dd(h)) / 3.0,
        )
    }

    #[test]
    fn smoothstep_endpoints_flats_and_symmetry() {
        assert_eq!(smoothstep(-1.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep(0.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep(1.0), (1.0, 0.0, 0.0));
        assert_eq!(smoothstep(7.0), (1.0, 0.0, 0.0));
        let (half, _, _) = smoothstep(0.5);
        assert!((half - 0.5).abs() <= 1e-15);
        for k in 1..40 {
            let t = k as f64 / 40.0;
            let (a, da, _) = smoothstep(t);
            let (b, _, _) = smoothstep(1.0 - t);
            assert!((a + b - 1.0).abs() <= 1e-14);
            assert!(da >= 0.0);
        }
        // Graceful underflow very close to the flats.
        let (v, dv, ddv) = smoothstep(1e-4);
        assert_eq!((v, dv, ddv), (0.0, 0.0, 0.0), "exp(-10000) underflows to the flat");
    }

    #[test]
    fn smoothstep_derivatives_match_finite_differences() {
        for k in 1..20 {
            let t = 0.04 + 0.92 * k as f64 / 20.0;
            let (_, da, dda) = smoothstep(t);
            let (fd1, fd2v) = fd2(|x| smoothstep(x).0, t, 1e-4);
            assert!((da - fd1).abs() <= 1e-7 * (1.0 + da.abs()), "t={t}");
            assert!((dda - fd2v).abs() <= 1e-5 * (1.0 + dda.abs()), "t={t}");
        }
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let gl = GaussLegendre::new(20);
        // Exact for degree <= 39; try x^7 and x^20 on [0.3, 1.7].
        let i7 = gl.integrate(0.3, 1.7, 1, |x| x.powi(7));
        let want7 = (1.7f64.powi(8) - 0.3f64.powi(8)) / 8.0;
        assert!((i7 - want7).abs() <= 1e-13 * want7.abs());
        let i20 = gl.integrate(0.3, 1.7, 4, |x| x.powi(20));
        let want20 = (1.7f64.powi(21) - 0.3f64.powi(21)) / 21.0;
        assert!((i20 - want20).abs() <= 1e-13 * want20.abs());
        // And a transcendental sanity value.
        let isin = gl.integrate(0.0, std::f64::consts::PI, 8, f64::sin);
        assert!((isin - 2.0).abs() <= 1e-14);
    }

    #[test]
    fn chi_certificates() {
        let chi = CutoffChi::new();
        // Exact closed form below 1/2.
        assert_eq!(chi.eval(0.5).0, 0.375);
        assert_eq!(chi.eval(0.25), (0.25 - 0.03125, 0.75, -1.0));
        // Derivative vanishes at 1 exactly (empty tail integral).
        assert_eq!(chi.eval(1.0).1, 0.0);
        // Constant beyond 1, with the documented bounds.
        let limit = chi.limit();
        assert!(limit > 0.375 && limit < 0.625, "chi limit {limit}");
        assert_eq!(chi.eval(3.0), (limit, 0.0, 0.0));
        // Concavity on [0, 1 - 1e-3].
        for k in 0..2000 {
            let a = (1.0 - 1e-3) * k as f64 / 1999.0;
            let (_, da, dda) = chi.eval(a);
            assert!(dda < 0.0, "chi'' at {a} is {dda}");
            assert!(da > 0.0, "chi' at {a} is {da}");
        }
        // Branch continuity at 1/2 and 1.  The probes straddle a 2ε window, so
        // the value itself moves by ≈ 2ε·χ' (χ' = ½ at ½) on top of any
        // branch mismatch.
        let eps = 1e-9;
        let left = chi.eval(0.5 - eps);
        let right = chi.eval(0.5 + eps);
        assert!((left.0 - right.0).abs() <= 2.0 * eps);
        assert!((left.1 - right.1).abs() <= 1e-8);
        assert!((left.2 - right.2).abs() <= 1e-6);
        let left = chi.eval(1.0 - eps);
        let right = chi.eval(1.0 + eps);
        assert!((left.0 - right.0).abs() <= 1e-12);
        assert!((left.1 - right.1).abs() <= 1e-12);
        assert!((left.2 - right.2).abs() <= 1e-9);
    }

    #[test]
    fn chi_derivatives_match_finite_differences() {
        let chi = CutoffChi::new();
        for k in 0..25 {
            let a = 0.52 + 0.46 * k as f64 / 24.0;
            let (_, da, dda) = chi.eval(a);
            let (fd1, fd2v) = fd2(|x| chi.eval(x).0, a, 1e-4);
            assert!((da - fd1).abs() <= 1e-8 * (1.0 + da.abs()), "a={a}: {da} vs {fd1}");
            assert!((dda - fd2v).abs() <= 1e-5 * (1.0 + dda.abs()), "a={a}");
        }
    }

    #[test]
    fn beta_flats_are_exact() {
        let beta = CutoffBeta::new();
        assert_eq!(beta.eval(-1.0), (0.5, 0.0, 0.0));
        assert_eq!(beta.eval(-0.2), (0.5, 0.0, 0.0));
        assert_eq!(beta.eval(0.0), (0.5, 0.0, 0.0));
        assert_eq!(beta.eval(-2.0), (0.0, 0.0, 0.0));
        assert_eq!(beta.eval(-5.0), (0.0, 0.0, 0.0));
        let mid = beta.eval(-1.5);
        assert!((mid.0 - 0.25).abs() <= 1e-15, "odd symmetry of the step");
        for k in 1..30 {
            let t = -2.0 + k as f64 / 15.0;
            let (_, d1, d2) = beta.eval(t);
            let (fd1, fd2v) = fd2(|x| beta.eval(x).0, t, 1e-4);
            assert!((d1 - fd1).abs() <= 1e-7);
            assert!((d2 - fd2v).abs() <= 1e-5);
        }
    }

    #[test]
    fn zeta_flats() {
        assert_eq!(zeta(0.0), (1.0, 0.0, 0.0));
        assert_eq!(zeta(1.0 / 3.0), (1.0, 0.0, 0.0));
        assert_eq!(zeta(2.0 / 3.0).0, 0.0);
        assert_eq!(zeta(1.0), (0.0, 0.0, 0.0));
        assert!(zeta(0.5).0 > 0.0 && zeta(0.5).0 < 1.0);
    }

    fn cap_pair(theta: f64) -> (Arc<dyn MetricField>, Arc<dyn MetricField>) {
        let cap = Arc::new(SphericalCap::new(4, std::f64::consts::FRAC_PI_3).unwrap());
        let bent = Arc::new(WarpedCollar::new(cap.clone(), theta).unwrap());
        (cap, bent)
    }

    #[test]
    fn strain_at_boundary_is_twice_the_shape_gap() {
        let (cap, bent) = cap_pair(1.02);
        let strain = build_strain(cap.clone(), bent.clone(), 0.9).unwrap();
        let u = [0.25, -0.4, 0.1];
        let s_val = strain.boundary_value(&u).unwrap();
        let shape_g = second_fundamental_form(cap.as_ref(), &u).unwrap();
        let shape_t = second_fundamental_form(bent.as_ref(), &u).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want = 2.0 * (shape_g.second_form.get(a, b) - shape_t.second_form.get(a, b));
                assert!(
                    (s_val[[a, b]] - want).abs() <= 1e-10 * (1.0 + want.abs()),
                    "S(0) should be 2(A_g - A_tilde)"
                );
            }
        }
        // Normal components vanish (both charts are Fermi).
        for i in 0..4 {
            assert_eq!(s_val[[i, 3]], 0.0);
            assert_eq!(s_val[[3, i]], 0.0);
        }
    }

    #[test]
    fn strain_seam_is_continuous() {
        let (cap, bent) = cap_pair(1.02);
        let strain = build_strain(cap, bent, 0.9).unwrap();
        let below = strain.jet(&[0.2, 0.1, -0.3, TAYLOR_SWITCH * 0.999]).unwrap();
        let above = strain.jet(&[0.2, 0.1, -0.3, TAYLOR_SWITCH * 1.001]).unwrap();
        let dv = (&below.value - &above.value)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let dd = (&below.d - &above.d)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(dv <= 1e-7, "strain value seam jump {dv:.3e}");
        assert!(dd <= 1e-3, "strain derivative seam jump {dd:.3e}");
    }

    #[test]
    fn strain_vanishes_outside_support_without_touching_the_model_chart() {
        // At theta = 2 the warped chart ends at 0.999·(π/2)/θ ≈ 0.785 (the
        // warp factor must stay positive), *before* the background chart:
        // evaluating the strain beyond the support must not error.
        let (cap, bent) = cap_pair(2.0);
        let strain = build_strain(cap, bent.clone(), 0.9).unwrap();
        let d = strain.support();
        assert!(d < 0.9, "shorter model chart shrinks the support");
        let jet = strain.jet(&[0.0, 0.0, 0.0, 0.7 * d]).unwrap();
        assert!(jet.value.iter().all(|&v| v == 0.0));
        let jet = strain.jet(&[0.0, 0.0, 0.0, 0.99 * 0.95 * std::f64::consts::FRAC_PI_3])
            .unwrap();
        assert!(jet.value.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_mismatch_is_rejected() {
        let cap = Arc::new(SphericalCap::new(4, 1.0).unwrap());
        let cyl = Arc::new(RoundCylinder::new(4, 1.0, 1.0).unwrap());
        // Boundary spheres have different radii (sin 1 vs 1): must fail.
        let err = build_strain(cap, cyl, 0.5);
        assert!(matches!(err, Err(Error::BoundaryMismatch { .. })));
    }

    #[test]
    fn lambda_threshold_is_enforced() {
        let (cap, bent) = cap_pair(1.02);
        let err = DeformationData::new(cap.clone(), bent.clone(), 0.9, 0.8);
        assert!(matches!(err, Err(Error::LambdaBelowThreshold { .. })));
        assert!(DeformationData::new(cap, bent, 0.9, 4.0).is_ok());
    }

    #[test]
    fn exact_regions_of_the_family() {
        let (cap, bent) = cap_pair(1.02);
        let data = DeformationData::new(cap.clone(), bent.clone(), 0.9, 3.0).unwrap();
        let u = [0.3, -0.2, 0.15];

        // Deep zone: the model metric exactly.
        let s_deep = 0.5 * data.model_radius();
        let x = [u[0], u[1], u[2], s_deep];
        let jd = data.jet(&x).unwrap();
        let jt = bent.jet(&x).unwrap();
        assert_eq!(jd.g.matrix(), jt.g.matrix());
        assert!(jd.dg.iter().zip(jt.dg.iter()).all(|(a, b)| a == b));

        // At the boundary itself (s = 0) the family inherits the model's
        // vanishing second fundamental form.
        let shape = second_fundamental_form(&data, &u).unwrap();
        for e in &shape.eigenvalues {
            assert!(e.abs() <= 1e-12, "A_hat at the boundary: {e:.3e}");
        }

        // Far zone: the background exactly.
        let x = [u[0], u[1], u[2], 0.8];
        let jd = data.jet(&x).unwrap();
        let jg = cap.jet(&x).unwrap();
        assert_eq!(jd.g.matrix(), jg.g.matrix());
        assert!(jd.ddg.iter().zip(jg.ddg.iter()).all(|(a, b)| a == b));
    }

    #[test]
    fn interface_residual_value_and_first_jets_are_tiny() {
        let (cap, bent) = cap_pair(1.02);
        let points = vec![vec![0.0, 0.0, 0.0], vec![0.4, -0.3, 0.2], vec![-0.5, 0.5, 0.45]];
        for lambda in [3.0, 5.0, 8.0] {
            let data = DeformationData::new(cap.clone(), bent.clone(), 0.9, lambda).unwrap();
            let res = interface_residual(&data, &points).unwrap();
            assert!(res.value <= 1e-10, "lambda={lambda}: value {:.3e}", res.value);
            assert!(res.first <= 1e-10, "lambda={lambda}: first {:.3e}", res.first);
            // Second jets are *not* certified to 1e-10: the inner interface
            // sits at depths where second-derivative quotients genuinely
            // lose digits; keep an honest loose bound instead.
            assert!(res.second <= 1e-4, "lambda={lambda}: second {:.3e}", res.second);
        }
    }

    #[test]
    fn interface_underflows_for_huge_lambda() {
        let (cap, bent) = cap_pair(1.02);
        let data = DeformationData::new(cap, bent, 0.9, 30.0).unwrap();
        assert_eq!(data.inner_radius(), 0.0);
        assert!(interface_residual(&data, &[vec![0.0, 0.0, 0.0]]).is_err());
        // The family itself stays evaluable: every positive depth takes the
        // outer branch, s = 0 the model branch.
        assert_eq!(data.branch_at(0.0), Branch::Model);
        assert_eq!(data.branch_at(1e-300), Branch::Outer);
        assert!(data.jet(&[0.1, 0.0, 0.0, 1e-300]).is_ok());
        assert!(data.jet(&[0.1, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn deviation_shrinks_as_lambda_doubles() {
        let (cap, bent) = cap_pair(1.02);
        let sup_dev = |lambda: f64| {
            let data =
                DeformationData::new(cap.clone(), bent.clone(), 0.9, lambda).unwrap();
            let mut sup = 0.0f64;
            for k in 1..60 {
                let s = 0.85 * k as f64 / 60.0;
                let x = [0.2, -0.1, 0.3, s];
                let jd = data.jet(&x).unwrap();
                let jg = cap.jet(&x).unwrap();
                let diff = Array2::from_shape_fn((4, 4), |(i, j)| {
                    jd.g.get(i, j) - jg.g.get(i, j)
                });
                sup = sup.max(jg.g.tensor_norm(&diff).unwrap());
            }
            sup
        };
        let d4 = sup_dev(4.0);
        let d8 = sup_dev(8.0);
        let d16 = sup_dev(16.0);
        assert!(d4 > 0.0);
        let r1 = d4 / d8;
        let r2 = d8 / d16;
        assert!((r1 - 2.0).abs() <= 0.4, "halving ratio {r1}");
        assert!((r2 - 2.0).abs() <= 0.4, "halving ratio {r2}");
    }
}
