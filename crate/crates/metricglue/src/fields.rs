//! Metric and tensor fields on a boundary collar, with exact second-order
//! jets.
//!
//! All geometry in this crate lives on a collar chart `∂M × [0, s_max)` with
//! coordinates `(u¹, …, u^{n-1}, s)`: the first `n-1` coordinates parametrise
//! the boundary patch, the last is the inward normal distance.  The normal
//! coordinate is always index `n-1`.  Charts are *Fermi* when
//! `g_{nn} = 1` and `g_{an} = 0` identically, so that `s` is arclength along
//! geodesics leaving the boundary orthogonally; every built-in field is Fermi.
//!
//! A field does not return pointwise values but full second-order jets
//! (value, gradient, Hessian of every component).  Curvature needs exactly
//! two derivatives of the metric, and demanding the jet analytically keeps
//! the whole pipeline free of finite-difference noise.  The jet checker in
//! [`crate::jetcheck`] verifies internal consistency of any field's
//! derivatives by Richardson-extrapolated differencing.

use std::sync::Arc;

use ndarray::{Array2, Array3, Array4};
use rand::Rng;

use crate::tensor::SymForm;
use crate::{Error, Result};

/// Description of the collar domain a field is defined on.
#[derive(Debug, Clone)]
pub struct CollarChart {
    /// Total space dimension `n` (boundary dimension plus one).
    pub dim: usize,
    /// Largest admissible normal coordinate; jets are only valid for
    /// `0 <= s < max_s`.
    pub max_s: f64,
    /// Half-width of the boundary coordinate box: boundary points must have
    /// `|u_a| <= boundary_halfwidth`.
    pub boundary_halfwidth: f64,
    /// Whether the chart is Fermi (`g_{nn} ≡ 1`, `g_{an} ≡ 0`).
    pub fermi: bool,
}

impl CollarChart {
    pub fn normal_index(&self) -> usize {
        self.dim - 1
    }

    /// Validates a point against the chart domain.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let s = x[self.normal_index()];
        if !(0.0..self.max_s).contains(&s) || !s.is_finite() {
            return Err(Error::PointOutsideChart {
                s,
                max_s: self.max_s,
            });
        }
        for &u in &x[..self.dim - 1] {
            if !u.is_finite() || u.abs() > self.boundary_halfwidth {
                return Err(Error::PointOutsideChart {
                    s: u,
                    max_s: self.boundary_halfwidth,
                });
            }
        }
        Ok(())
    }
}

/// Second-order jet of a metric at a point: components, first and second
/// coordinate derivatives.
///
/// Index layout: `dg[[m, i, j]] = ∂_m g_{ij}` and
/// `ddg[[m, p, i, j]] = ∂_m ∂_p g_{ij}`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: SymForm,
    pub dg: Array3<f64>,
    pub ddg: Array4<f64>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Flat space in Cartesian coordinates.
    pub fn euclidean(n: usize) -> Self {
        Self {
            g: SymForm::identity(n),
            dg: Array3::zeros((n, n, n)),
            ddg: Array4::zeros((n, n, n, n)),
        }
    }
}

/// Second-order jet of a symmetric (0,2) tensor field, same layout as
/// [`MetricJet`] but without the positivity connotation.
#[derive(Debug, Clone)]
pub struct TensorJet {
    pub value: Array2<f64>,
    pub d: Array3<f64>,
    pub dd: Array4<f64>,
}

impl TensorJet {
    pub fn zeros(n: usize) -> Self {
        Self {
            value: Array2::zeros((n, n)),
            d: Array3::zeros((n, n, n)),
            dd: Array4::zeros((n, n, n, n)),
        }
    }

    pub fn dim(&self) -> usize {
        self.value.nrows()
    }

    /// Pointwise linear combination `self + c · other`.
    pub fn axpy(&self, c: f64, other: &TensorJet) -> TensorJet {
        TensorJet {
            value: &self.value + &(&other.value * c),
            d: &self.d + &(&other.d * c),
            dd: &self.dd + &(&other.dd * c),
        }
    }

    pub fn scale(&self, c: f64) -> TensorJet {
        TensorJet {
            value: &self.value * c,
            d: &self.d * c,
            dd: &self.dd * c,
        }
    }

    /// Jet of the difference of two metric jets.
    pub fn difference(a: &MetricJet, b: &MetricJet) -> TensorJet {
        let n = a.dim();
        let value = Array2::from_shape_fn((n, n), |(i, j)| a.g.get(i, j) - b.g.get(i, j));
        TensorJet {
            value,
            d: &a.dg - &b.dg,
            dd: &a.ddg - &b.ddg,
        }
    }
}

/// A metric field on a collar chart that can produce exact second-order jets
/// at any interior point.
pub trait MetricField: Send + Sync {
    fn chart(&self) -> CollarChart;

    /// Full second-order jet at `x = (u, s)`.  Implementations may assume the
    /// point has been validated against [`CollarChart::check_point`]; the
    /// provided implementations validate internally and return
    /// [`Error::PointOutsideChart`] otherwise.
    fn jet(&self, x: &[f64]) -> Result<MetricJet>;
}

/// A symmetric (0,2) tensor field with exact second-order jets; used for
/// metric perturbations.
pub trait TensorField: Send + Sync {
    fn dim(&self) -> usize;
    fn jet(&self, x: &[f64]) -> Result<TensorJet>;
}

/// Wraps a closure as a [`MetricField`]; handy for tests and one-off
/// constructions.
pub struct FnField<F>
where
    F: Fn(&[f64]) -> Result<MetricJet> + Send + Sync,
{
    chart: CollarChart,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> Result<MetricJet> + Send + Sync,
{
    pub fn new(chart: CollarChart, f: F) -> Self {
        Self { chart, f }
    }
}

impl<F> MetricField for FnField<F>
where
    F: Fn(&[f64]) -> Result<MetricJet> + Send + Sync,
{
    fn chart(&self) -> CollarChart {
        self.chart.clone()
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.chart.check_point(x)?;
        (self.f)(x)
    }
}

// ---------------------------------------------------------------------------
// Shared boundary model: the round sphere S^{n-1} in stereographic
// coordinates.  σ(u) = 4 / (1 + |u|²)² is the conformal factor of the unit
// round metric σ(u) δ_ab.
// ---------------------------------------------------------------------------

/// Value, gradient, and Hessian of the stereographic conformal factor
/// `σ(u) = 4 (1 + |u|²)^{-2}` on the unit sphere.
fn stereographic_factor(u: &[f64]) -> (f64, Vec<f64>, Array2<f64>) {
    let m = u.len();
    let p = 1.0 + u.iter().map(|x| x * x).sum::<f64>();
    let p3 = p * p * p;
    let p4 = p3 * p;
    let sigma = 4.0 / (p * p);
    let mut grad = vec![0.0; m];
    for a in 0..m {
        grad[a] = -16.0 * u[a] / p3;
    }
    let mut hess = Array2::zeros((m, m));
    for a in 0..m {
        for b in 0..m {
            let mut v = 96.0 * u[a] * u[b] / p4;
            if a == b {
                v -= 16.0 / p3;
            }
            hess[[a, b]] = v;
        }
    }
    (sigma, grad, hess)
}

/// Scalar warp profile `w(s)` with two derivatives.
#[derive(Debug, Clone, Copy)]
struct Warp {
    w: f64,
    dw: f64,
    ddw: f64,
}

/// Metric `g = w(s)² σ(u) δ_ab ⊕ ds²` on a collar over the round sphere:
/// the shared skeleton of the cap, cylinder, and ball examples.
fn warped_sphere_jet(n: usize, x: &[f64], warp: Warp) -> MetricJet {
    let m = n - 1;
    let (sigma, dsig, ddsig) = stereographic_factor(&x[..m]);
    let w2 = warp.w * warp.w;
    let dw2 = 2.0 * warp.w * warp.dw;
    let ddw2 = 2.0 * (warp.dw * warp.dw + warp.w * warp.ddw);

    let mut g = SymForm::zeros(n);
    for a in 0..m {
        g.set(a, a, w2 * sigma);
    }
    g.set(m, m, 1.0);

    let mut dg = Array3::zeros((n, n, n));
    for a in 0..m {
        for b in 0..m {
            dg[[b, a, a]] = w2 * dsig[b];
        }
        dg[[m, a, a]] = dw2 * sigma;
    }

    let mut ddg = Array4::zeros((n, n, n, n));
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                ddg[[b, c, a, a]] = w2 * ddsig[[b, c]];
            }
            ddg[[b, m, a, a]] = dw2 * dsig[b];
            ddg[[m, b, a, a]] = dw2 * dsig[b];
        }
        ddg[[m, m, a, a]] = ddw2 * sigma;
    }

    MetricJet { g, dg, ddg }
}

/// Geodesic ball of radius `r0 < π` in the unit round `n`-sphere, as a collar
/// over its boundary (a round sphere of radius `sin r0`): warp
/// `w(s) = sin(r0 - s)`.  Curvature operator is `2·I` everywhere; the second
/// fundamental form of the boundary is `cot(r0) g_∂ > 0` for `r0 < π/2`.
#[derive(Debug, Clone)]
pub struct SphericalCap {
    pub dim: usize,
    pub r0: f64,
    max_s: f64,
}

impl SphericalCap {
    pub fn new(dim: usize, r0: f64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if !(0.0..std::f64::consts::PI).contains(&r0) || r0 == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cap radius must lie in (0, π), got {r0}"
            )));
        }
        // Stay strictly inside the smooth region (w > 0).
        Ok(Self {
            dim,
            r0,
            max_s: 0.95 * r0,
        })
    }
}

impl MetricField for SphericalCap {
    fn chart(&self) -> CollarChart {
        CollarChart {
            dim: self.dim,
            max_s: self.max_s,
            boundary_halfwidth: 1.5,
            fermi: true,
        }
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.chart().check_point(x)?;
        let s = x[self.dim - 1];
        let t = self.r0 - s;
        Ok(warped_sphere_jet(
            self.dim,
            x,
            Warp {
                w: t.sin(),
                dw: -t.cos(),
                ddw: -t.sin(),
            },
        ))
    }
}

/// Product collar `S^{n-1}(radius) × [0, len)`: warp `w(s) = radius`.
/// Totally geodesic boundary (`A = 0`); scalar curvature
/// `(n-1)(n-2)/radius²`.
#[derive(Debug, Clone)]
pub struct RoundCylinder {
    pub dim: usize,
    pub radius: f64,
    pub len: f64,
}

impl RoundCylinder {
    pub fn new(dim: usize, radius: f64, len: f64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if radius <= 0.0 || len <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cylinder radius and length must be positive, got {radius}, {len}"
            )));
        }
        Ok(Self { dim, radius, len })
    }
}

impl MetricField for RoundCylinder {
    fn chart(&self) -> CollarChart {
        CollarChart {
            dim: self.dim,
            max_s: self.len,
            boundary_halfwidth: 1.5,
            fermi: true,
        }
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.chart().check_point(x)?;
        Ok(warped_sphere_jet(
            self.dim,
            x,
            Warp {
                w: self.radius,
                dw: 0.0,
                ddw: 0.0,
            },
        ))
    }
}

/// Unit Euclidean ball as a collar over its boundary sphere: warp
/// `w(s) = 1 - s`.  Flat (`R = 0`), boundary second fundamental form
/// `A = g_∂ > 0`.
#[derive(Debug, Clone)]
pub struct EuclideanBall {
    pub dim: usize,
}

impl EuclideanBall {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Self { dim })
    }
}

impl MetricField for EuclideanBall {
    fn chart(&self) -> CollarChart {
        CollarChart {
            dim: self.dim,
            max_s: 0.95,
            boundary_halfwidth: 1.5,
            fermi: true,
        }
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.chart().check_point(x)?;
        let s = x[self.dim - 1];
        Ok(warped_sphere_jet(
            self.dim,
            x,
            Warp {
                w: 1.0 - s,
                dw: -1.0,
                ddw: 0.0,
            },
        ))
    }
}

/// Polynomial perturbation of the flat metric:
/// `g_ij = δ_ij + m (A_ij + B_ijk x^k + C_ijkl x^k x^l)` with coefficients
/// drawn uniformly from `[-1, 1]` and symmetrised in `(i, j)`.  Positive
/// definiteness on the chart is checked at construction by sampling; the
/// magnitude `m` keeps the perturbation small.  This chart is *not* Fermi.
#[derive(Debug, Clone)]
pub struct PolyRandom {
    dim: usize,
    magnitude: f64,
    a: Array2<f64>,
    b: Array3<f64>,
    c: Array4<f64>,
    chart: CollarChart,
}

impl PolyRandom {
    pub fn new<R: Rng>(rng: &mut R, dim: usize, magnitude: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if !(0.0..0.5).contains(&magnitude) {
            return Err(Error::InvalidParameter(format!(
                "perturbation magnitude must lie in [0, 0.5), got {magnitude}"
            )));
        }
        let mut a = Array2::zeros((dim, dim));
        let mut b = Array3::zeros((dim, dim, dim));
        let mut c = Array4::zeros((dim, dim, dim, dim));
        for i in 0..dim {
            for j in i..dim {
                let v: f64 = rng.gen_range(-1.0..=1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
                for k in 0..dim {
                    let v: f64 = rng.gen_range(-1.0..=1.0);
                    b[[i, j, k]] = v;
                    b[[j, i, k]] = v;
                    for l in 0..dim {
                        let v: f64 = rng.gen_range(-1.0..=1.0);
                        c[[i, j, k, l]] = v;
                        c[[j, i, k, l]] = v;
                    }
                }
            }
        }
        let chart = CollarChart {
            dim,
            max_s: 1.0,
            boundary_halfwidth: 1.0,
            fermi: false,
        };
        let field = Self {
            dim,
            magnitude,
            a,
            b,
            c,
            chart,
        };
        // Sample the chart corners and a few interior points for positive
        // definiteness.
        let mut probe = vec![0.0; dim];
        for trial in 0..200 {
            for (k, p) in probe.iter_mut().enumerate() {
                let t = ((trial * (k + 3) * 2654435761usize) % 2000) as f64 / 1000.0 - 1.0;
                *p = if k + 1 == dim { t.abs() * 0.999 } else { t };
            }
            let jet = field.jet(&probe)?;
            if !jet.g.is_positive_definite() {
                return Err(Error::NotPositiveDefinite);
            }
        }
        Ok(field)
    }
}

impl MetricField for PolyRandom {
    fn chart(&self) -> CollarChart {
        self.chart.clone()
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.chart.check_point(x)?;
        let n = self.dim;
        let m = self.magnitude;
        let mut g = SymForm::identity(n);
        let mut dg = Array3::zeros((n, n, n));
        let mut ddg = Array4::zeros((n, n, n, n));
        for i in 0..n {
            for j in 0..n {
                let mut v = self.a[[i, j]];
                for k in 0..n {
                    v += self.b[[i, j, k]] * x[k];
                    for l in 0..n {
                        v += self.c[[i, j, k, l]] * x[k] * x[l];
                    }
                }
                if i <= j {
                    g.set(i, j, g.get(i, j) + m * v);
                }
                for k in 0..n {
                    let mut dv = self.b[[i, j, k]];
                    for l in 0..n {
                        dv += (self.c[[i, j, k, l]] + self.c[[i, j, l, k]]) * x[l];
                    }
                    dg[[k, i, j]] = m * dv;
                    for l in 0..n {
                        ddg[[k, l, i, j]] =
                            m * (self.c[[i, j, k, l]] + self.c[[i, j, l, k]]);
                    }
                }
            }
        }
        Ok(MetricJet { g, dg, ddg })
    }
}

/// Polynomial symmetric tensor field (same shape as [`PolyRandom`] without
/// the identity part); used as a random metric perturbation `h`.
#[derive(Debug, Clone)]
pub struct PolyTensor {
    dim: usize,
    magnitude: f64,
    a: Array2<f64>,
    b: Array3<f64>,
    c: Array4<f64>,
}

impl PolyTensor {
    pub fn new<R: Rng>(rng: &mut R, dim: usize, magnitude: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let mut a = Array2::zeros((dim, dim));
        let mut b = Array3::zeros((dim, dim, dim));
        let mut c = Array4::zeros((dim, dim, dim, dim));
        for i in 0..dim {
            for j in i..dim {
                let v: f64 = rng.gen_range(-1.0..=1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
                for k in 0..dim {
                    let v: f64 = rng.gen_range(-1.0..=1.0);
                    b[[i, j, k]] = v;
                    b[[j, i, k]] = v;
                    for l in 0..dim {
                        let v: f64 = rng.gen_range(-1.0..=1.0);
                        c[[i, j, k, l]] = v;
                        c[[j, i, k, l]] = v;
                    }
                }
            }
        }
        Ok(Self {
            dim,
            magnitude,
            a,
            b,
            c,
        })
    }
}

impl TensorField for PolyTensor {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Result<TensorJet> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let n = self.dim;
        let m = self.magnitude;
        let mut jet = TensorJet::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut v = self.a[[i, j]];
                for k in 0..n {
                    v += self.b[[i, j, k]] * x[k];
                    for l in 0..n {
                        v += self.c[[i, j, k, l]] * x[k] * x[l];
                    }
                }
                jet.value[[i, j]] = m * v;
                for k in 0..n {
                    let mut dv = self.b[[i, j, k]];
                    for l in 0..n {
                        dv += (self.c[[i, j, k, l]] + self.c[[i, j, l, k]]) * x[l];
                    }
                    jet.d[[k, i, j]] = m * dv;
                    for l in 0..n {
                        jet.dd[[k, l, i, j]] =
                            m * (self.c[[i, j, k, l]] + self.c[[i, j, l, k]]);
                    }
                }
            }
        }
        Ok(jet)
    }
}

/// Bending profile `f(s) = cos(θ s)` with two derivatives.
fn bend(theta: f64, s: f64) -> Warp {
    Warp {
        w: (theta * s).cos(),
        dw: -theta * (theta * s).sin(),
        ddw: -theta * theta * (theta * s).cos(),
    }
}

/// The bent collar over a base field's boundary: given a field `g` with
/// boundary metric `g_∂(u) = g(u, 0)` restricted to the boundary directions,
/// builds
///
/// ```text
///     g̃ = ds² + cos²(θ s) g_∂(u)     on  { s < min(base collar, δ_θ) }
/// ```
///
/// where `δ_θ = min(base max_s, 0.999 · (π/2)/θ)` keeps `cos(θ s)` positive.
/// The boundary second fundamental form vanishes (`∂_s cos²(θs)|₀ = 0`), and
/// larger `θ` trades interior normal-direction curvature `θ² cos²(θs) g_∂`
/// against tangential curvature loss — the knob the deformation family
/// exploits.
pub struct WarpedCollar {
    base: Arc<dyn MetricField>,
    pub theta: f64,
    chart: CollarChart,
}

impl WarpedCollar {
    pub fn new(base: Arc<dyn MetricField>, theta: f64) -> Result<Self> {
        let base_chart = base.chart();
        if !base_chart.fermi {
            return Err(Error::InvalidParameter(
                "bent collar needs a Fermi base chart".into(),
            ));
        }
        if theta <= 0.0 || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bending rate must be positive, got {theta}"
            )));
        }
        let max_s = base_chart
            .max_s
            .min(0.999 * std::f64::consts::FRAC_PI_2 / theta);
        let chart = CollarChart {
            dim: base_chart.dim,
            max_s,
            boundary_halfwidth: base_chart.boundary_halfwidth,
            fermi: true,
        };
        Ok(Self { base, theta, chart })
    }
}

impl MetricField for WarpedCollar {
    fn chart(&self) -> CollarChart {
        self.chart.clone()
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.chart.check_point(x)?;
        let n = self.chart.dim;
        let nn = n - 1;
        let s = x[nn];
        // Boundary jet of the base field at (u, 0): tangential block only.
        let mut x0 = x.to_vec();
        x0[nn] = 0.0;
        let base = self.base.jet(&x0)?;
        let f = bend(self.theta, s);
        let f2 = f.w * f.w;
        let df2 = 2.0 * f.w * f.dw;
        let ddf2 = 2.0 * (f.dw * f.dw + f.w * f.ddw);

        let mut g = SymForm::zeros(n);
        let mut dg = Array3::zeros((n, n, n));
        let mut ddg = Array4::zeros((n, n, n, n));
        g.set(nn, nn, 1.0);
        for a in 0..nn {
            for b in a..nn {
                g.set(a, b, f2 * base.g.get(a, b));
            }
        }
        for a in 0..nn {
            for b in 0..nn {
                let gb = base.g.get(a, b);
                for c in 0..nn {
                    dg[[c, a, b]] = f2 * base.dg[[c, a, b]];
                    for d in 0..nn {
                        ddg[[c, d, a, b]] = f2 * base.ddg[[c, d, a, b]];
                    }
                    ddg[[c, nn, a, b]] = df2 * base.dg[[c, a, b]];
                    ddg[[nn, c, a, b]] = df2 * base.dg[[c, a, b]];
                }
                dg[[nn, a, b]] = df2 * gb;
                ddg[[nn, nn, a, b]] = ddf2 * gb;
            }
        }
        Ok(MetricJet { g, dg, ddg })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chart_rejects_bad_points() {
        let cap = SphericalCap::new(4, 1.0).unwrap();
        let chart = cap.chart();
        assert!(chart.check_point(&[0.0, 0.0, 0.0, 0.1]).is_ok());
        assert!(matches!(
            chart.check_point(&[0.0, 0.0, 0.0, -0.1]),
            Err(Error::PointOutsideChart { .. })
        ));
        assert!(matches!(
            chart.check_point(&[0.0, 0.0, 0.0, 10.0]),
            Err(Error::PointOutsideChart { .. })
        ));
        assert!(matches!(
            chart.check_point(&[9.0, 0.0, 0.0, 0.1]),
            Err(Error::PointOutsideChart { .. })
        ));
        assert!(matches!(
            chart.check_point(&[0.0, 0.0, 0.1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stereographic_factor_at_origin_and_symmetry() {
        let (sigma, grad, hess) = stereographic_factor(&[0.0, 0.0, 0.0]);
        assert_eq!(sigma, 4.0);
        assert!(grad.iter().all(|&v| v == 0.0));
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { -16.0 } else { 0.0 };
                assert_eq!(hess[[a, b]], want);
            }
        }
    }

    #[test]
    fn built_in_fields_are_fermi_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fields: Vec<Box<dyn MetricField>> = vec![
            Box::new(SphericalCap::new(4, std::f64::consts::FRAC_PI_3).unwrap()),
            Box::new(RoundCylinder::new(5, 1.0, 2.0).unwrap()),
            Box::new(EuclideanBall::new(4).unwrap()),
        ];
        for f in &fields {
            let chart = f.chart();
            assert!(chart.fermi);
            let n = chart.dim;
            for _ in 0..20 {
                let mut x: Vec<f64> = (0..n)
                    .map(|_| rng.gen_range(-0.9..0.9f64))
                    .collect();
                x[n - 1] = rng.gen_range(0.0..chart.max_s * 0.99);
                let jet = f.jet(&x).unwrap();
                assert!(jet.g.is_positive_definite());
                // Fermi: unit normal, no mixing; and exactly so in the jet.
                assert_eq!(jet.g.get(n - 1, n - 1), 1.0);
                for a in 0..n - 1 {
                    assert_eq!(jet.g.get(a, n - 1), 0.0);
                    for m in 0..n {
                        assert_eq!(jet.dg[[m, a, n - 1]], 0.0);
                    }
                }
                for m in 0..n {
                    assert_eq!(jet.dg[[m, n - 1, n - 1]], 0.0);
                }
            }
        }
    }

    #[test]
    fn cylinder_metric_is_s_independent() {
        let cyl = RoundCylinder::new(4, 1.3, 2.0).unwrap();
        let j1 = cyl.jet(&[0.2, -0.4, 0.3, 0.1]).unwrap();
        let j2 = cyl.jet(&[0.2, -0.4, 0.3, 1.7]).unwrap();
        assert_eq!(j1.g.matrix(), j2.g.matrix());
        assert!(j1.dg.iter().zip(j2.dg.iter()).all(|(a, b)| a == b));
        let n = 4;
        for a in 0..n {
            for b in 0..n {
                assert_eq!(j1.dg[[n - 1, a, b]], 0.0);
            }
        }
    }

    #[test]
    fn ball_second_fundamental_form_is_boundary_metric() {
        // A_ab = -½ ∂_s g_ab at s = 0; for w = 1 - s this equals
        // w(0)·(-w'(0))·σδ = σδ = g_∂.
        let ball = EuclideanBall::new(4).unwrap();
        let u = [0.3, -0.2, 0.0];
        let jet = ball.jet(&[u[0], u[1], u[2], 0.0]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let a_ab = -0.5 * jet.dg[[3, a, b]];
                assert!((a_ab - jet.g.get(a, b) * 1.0).abs() <= 1e-14 * (1.0 + jet.g.get(a, b).abs()),
                    "A should equal g_∂ for the unit ball");
            }
        }
    }

    #[test]
    fn cap_second_fundamental_form_is_cot_r0() {
        let r0 = std::f64::consts::FRAC_PI_3;
        let cap = SphericalCap::new(5, r0).unwrap();
        let jet = cap.jet(&[0.1, 0.2, -0.3, 0.4, 0.0]).unwrap();
        let cot = r0.cos() / r0.sin();
        for a in 0..4 {
            for b in 0..4 {
                let a_ab = -0.5 * jet.dg[[4, a, b]];
                let want = cot * jet.g.get(a, b);
                assert!((a_ab - want).abs() <= 1e-13 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn warped_collar_matches_flat_boundary_at_zero_and_has_zero_a() {
        let base = Arc::new(RoundCylinder::new(4, 2.0, 1.0).unwrap());
        let bent = WarpedCollar::new(base.clone(), 5.0).unwrap();
        assert!(bent.chart().max_s <= 0.999 * std::f64::consts::FRAC_PI_2 / 5.0);
        let x0 = [0.3, 0.1, -0.2, 0.0];
        let jb = bent.jet(&x0).unwrap();
        let j0 = base.jet(&x0).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(jb.g.get(a, b), j0.g.get(a, b), "same boundary metric");
                assert_eq!(jb.dg[[3, a, b]], 0.0, "A vanishes: cos² has no linear term");
            }
        }
    }

    #[test]
    fn poly_random_is_positive_definite_and_polynomially_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let field = PolyRandom::new(&mut rng, 3, 0.05).unwrap();
        // Keep x[2] (the normal coordinate, s < 1) clear of the chart edge so
        // the ±h finite-difference probes below stay inside.
        let x = [0.3, -0.5, 0.6];
        let jet = field.jet(&x).unwrap();
        assert!(jet.g.is_positive_definite());
        // Second derivatives of a quadratic are constant in x: compare at two
        // points.
        let jet2 = field.jet(&[0.0, 0.0, 0.1]).unwrap();
        assert!(jet
            .ddg
            .iter()
            .zip(jet2.ddg.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-15));
        // ∂ of a quadratic is affine: check the jet's gradient by exact
        // finite difference of the quadratic (h = 0.5 cancels exactly for
        // central differences on quadratics).
        let h = 0.25;
        for k in 0..3 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let jp = field.jet(&xp).unwrap();
            let jm = field.jet(&xm).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let fd = (jp.g.get(i, j) - jm.g.get(i, j)) / (2.0 * h);
                    assert!((fd - jet.dg[[k, i, j]]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn poly_tensor_jets_are_polynomially_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let field = PolyTensor::new(&mut rng, 4, 0.1).unwrap();
        let x = [0.2, 0.4, -0.1, 0.3];
        let jet = field.jet(&x).unwrap();
        let h = 0.5;
        for k in 0..4 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let jp = field.jet(&xp).unwrap();
            let jm = field.jet(&xm).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let fd = (jp.value[[i, j]] - jm.value[[i, j]]) / (2.0 * h);
                    assert!((fd - jet.d[[k, i, j]]).abs() <= 1e-12);
                    let fd2 = (jp.value[[i, j]] - 2.0 * jet.value[[i, j]]
                        + jm.value[[i, j]])
                        / (h * h);
                    assert!((fd2 - jet.dd[[k, k, i, j]]).abs() <= 1e-11);
                }
            }
        }
    }
}
