//! Dense tensor algebra for curvature work in low dimensions.
//!
//! Conventions used throughout the crate:
//!
//! * An algebraic curvature tensor `R` is stored with all four indices down,
//!   `R[i][j][k][l]`, antisymmetric in `(i,j)` and `(k,l)`, symmetric under
//!   swapping the pairs, and satisfying the first Bianchi identity.  The sign
//!   is fixed so that the **unit round sphere** has `R_ijij = +1` in any
//!   orthonormal frame.
//! * A complex 2-vector `φ` is an antisymmetric complex matrix `φ^{ij}`; its
//!   curvature value is the full double contraction
//!   `Q(φ) = φ^{ij} conj(φ^{kl}) R_{ijkl}` (sum over *all* index pairs).
//!   With this pairing the unit sphere satisfies `Q(φ) = 2|φ|²_g`, and the
//!   2-vector built from an isotropic frame `z = e₁ + iμe₂`, `w = e₃ + iλe₄`
//!   satisfies `Q(φ) = R(z,w,z̄,w̄)`.
//! * The curvature operator matrix is expressed in the `|φ|_g`-orthonormal
//!   basis of 2-vectors, so its eigenvalues are exactly the extreme values of
//!   `Q(φ)/|φ|²_g`; for the unit sphere it is `2·I`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Array4};
use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// A symmetric bilinear form (metric, second fundamental form, strain, ...)
/// on an `n`-dimensional space, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct SymForm {
    mat: DMatrix<f64>,
}

impl SymForm {
    /// Wraps a square matrix, requiring symmetry up to roundoff (`1e-12`
    /// relative to the largest entry); the stored matrix is symmetrised
    /// exactly.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let scale = mat.amax().max(1.0);
        let mut defect = 0.0f64;
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                defect = defect.max((mat[(i, j)] - mat[(j, i)]).abs());
            }
        }
        if defect > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "matrix is not symmetric: defect {defect:.3e}"
            )));
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        Ok(Self { mat: sym })
    }

    /// Builds the form entry-wise from `f(i, j)`; only `i <= j` is queried.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut mat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        Self { mat }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            mat: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.mat[(i, j)] = v;
        self.mat[(j, i)] = v;
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Inverse via LU; fails when the form is singular.
    pub fn inverse(&self) -> Result<SymForm> {
        self.mat
            .clone()
            .try_inverse()
            .map(|m| SymForm { mat: (&m + m.transpose()) * 0.5 })
            .ok_or(Error::NotPositiveDefinite)
    }

    /// Cholesky-based positive definiteness test.
    pub fn is_positive_definite(&self) -> bool {
        self.mat.clone().cholesky().is_some()
    }

    /// Columns of the returned matrix form a basis orthonormal with respect
    /// to this form (requires positive definiteness).  Built as `L^{-T}` from
    /// the Cholesky factorisation `g = L Lᵀ`.
    pub fn orthonormal_basis(&self) -> Result<DMatrix<f64>> {
        let chol = self
            .mat
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let n = self.dim();
        // Solve Lᵀ B = I  =>  B = L^{-T}.
        let lt = chol.l().transpose();
        let b = lt
            .solve_upper_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(b)
    }

    /// Norm of a (0,2) tensor `h` with both indices raised by this form:
    /// `|h|² = g^{ik} g^{jl} h_{ij} h_{kl}`.
    pub fn tensor_norm(&self, h: &Array2<f64>) -> Result<f64> {
        let n = self.dim();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: h.nrows(),
            });
        }
        let inv = self.inverse()?;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        acc += inv.get(i, k) * inv.get(j, l) * h[[i, j]] * h[[k, l]];
                    }
                }
            }
        }
        Ok(acc.max(0.0).sqrt())
    }
}

/// An algebraic curvature tensor on an `n`-dimensional space.
#[derive(Debug, Clone)]
pub struct Curv4 {
    n: usize,
    a: Array4<f64>,
}

impl Curv4 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: Array4::zeros((n, n, n, n)),
        }
    }

    /// Wraps a raw component array.  The pair symmetries must hold within
    /// `1e-10` (relative to the largest component); the stored tensor is then
    /// symmetrised exactly, so downstream algebra can rely on the symmetries
    /// to machine precision.  The first Bianchi identity is *not* enforced —
    /// geometric constructors satisfy it automatically and tests assert it.
    pub fn new(a: Array4<f64>) -> Result<Self> {
        let n = a.shape()[0];
        if a.shape() != [n, n, n, n] {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.shape()[1],
            });
        }
        let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let defect = symmetry_defect(&a);
        if defect > 1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "curvature symmetries violated: defect {defect:.3e} (scale {scale:.3e})"
            )));
        }
        Ok(Self::symmetrized(a))
    }

    /// Projects onto the subspace with the pair (anti)symmetries by averaging
    /// over the dihedral symmetry group of the index square.
    pub fn symmetrized(a: Array4<f64>) -> Self {
        // One evaluation per symmetry orbit, written to all eight images, so
        // the projected tensor carries the dihedral symmetries *exactly* —
        // per-entry re-evaluation would differ between images by rounding
        // order.  Entries with a repeated index inside a pair stay zero.
        let n = a.shape()[0];
        let mut out = Array4::zeros((n, n, n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    for l in (k + 1)..n {
                        if (k, l) < (i, j) {
                            continue;
                        }
                        let v = 0.125
                            * (a[[i, j, k, l]] - a[[j, i, k, l]] - a[[i, j, l, k]]
                                + a[[j, i, l, k]]
                                + a[[k, l, i, j]]
                                - a[[l, k, i, j]]
                                - a[[k, l, j, i]]
                                + a[[l, k, j, i]]);
                        out[[i, j, k, l]] = v;
                        out[[j, i, k, l]] = -v;
                        out[[i, j, l, k]] = -v;
                        out[[j, i, l, k]] = v;
                        out[[k, l, i, j]] = v;
                        out[[l, k, i, j]] = -v;
                        out[[k, l, j, i]] = -v;
                        out[[l, k, j, i]] = v;
                    }
                }
            }
        }
        Self { n, a: out }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.a[[i, j, k, l]]
    }

    pub fn components(&self) -> &Array4<f64> {
        &self.a
    }

    /// Largest violation of the first Bianchi identity
    /// `R_{ijkl} + R_{jkil} + R_{kijl}`.
    pub fn bianchi_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    for l in 0..self.n {
                        let c = self.a[[i, j, k, l]]
                            + self.a[[j, k, i, l]]
                            + self.a[[k, i, j, l]];
                        worst = worst.max(c.abs());
                    }
                }
            }
        }
        worst
    }

    /// `R(x, y, z, w)` for real vectors, by full contraction.
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if y[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        acc += self.a[[i, j, k, l]] * x[i] * y[j] * z[k] * w[l];
                    }
                }
            }
        }
        acc
    }

    /// Changes basis: `R'_{abcd} = R_{ijkl} B^i_a B^j_b B^k_c B^l_d` where the
    /// columns of `basis` are the new basis vectors in old coordinates.
    pub fn change_basis(&self, basis: &DMatrix<f64>) -> Curv4 {
        let n = self.n;
        let m = basis.ncols();
        // Contract one index at a time: O(n^4 · m).
        let mut t1 = Array4::zeros((m, n, n, n));
        for a in 0..m {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for i in 0..n {
                            acc += self.a[[i, j, k, l]] * basis[(i, a)];
                        }
                        t1[[a, j, k, l]] = acc;
                    }
                }
            }
        }
        let mut t2 = Array4::zeros((m, m, n, n));
        for a in 0..m {
            for b in 0..m {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += t1[[a, j, k, l]] * basis[(j, b)];
                        }
                        t2[[a, b, k, l]] = acc;
                    }
                }
            }
        }
        let mut t3 = Array4::zeros((m, m, m, n));
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += t2[[a, b, k, l]] * basis[(k, c)];
                        }
                        t3[[a, b, c, l]] = acc;
                    }
                }
            }
        }
        let mut out = Array4::zeros((m, m, m, m));
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let mut acc = 0.0;
                        for l in 0..n {
                            acc += t3[[a, b, c, l]] * basis[(l, d)];
                        }
                        out[[a, b, c, d]] = acc;
                    }
                }
            }
        }
        Curv4 { n: m, a: out }
    }
}

/// Largest violation of the pair (anti)symmetries of a raw component array.
pub fn symmetry_defect(a: &Array4<f64>) -> f64 {
    let n = a.shape()[0];
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = a[[i, j, k, l]];
                    worst = worst.max((v + a[[j, i, k, l]]).abs());
                    worst = worst.max((v + a[[i, j, l, k]]).abs());
                    worst = worst.max((v - a[[k, l, i, j]]).abs());
                }
            }
        }
    }
    worst
}

/// A complex 2-vector: an antisymmetric complex matrix `φ^{ij}`.
#[derive(Debug, Clone)]
pub struct TwoVectorC {
    coeff: Array2<Complex64>,
}

impl TwoVectorC {
    /// Wraps raw coefficients; antisymmetry must hold within `1e-12` and is
    /// then enforced exactly.
    pub fn new(coeff: Array2<Complex64>) -> Result<Self> {
        let n = coeff.nrows();
        if coeff.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: coeff.ncols(),
            });
        }
        let scale = coeff.iter().fold(1.0f64, |m, v| m.max(v.norm()));
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                defect = defect.max((coeff[[i, j]] + coeff[[j, i]]).norm());
            }
        }
        if defect > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "2-vector is not antisymmetric: defect {defect:.3e}"
            )));
        }
        let mut anti = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                anti[[i, j]] = (coeff[[i, j]] - coeff[[j, i]]) * Complex64::new(0.5, 0.0);
            }
        }
        Ok(Self { coeff: anti })
    }

    /// The raw wedge `x ∧ y`, i.e. `φ^{ij} = x^i y^j - x^j y^i`.
    /// For `g`-orthonormal `x, y` this has `|φ|²_g = 2`.
    pub fn wedge(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut coeff = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                coeff[[i, j]] = Complex64::new(x[i] * y[j] - x[j] * y[i], 0.0);
            }
        }
        Self { coeff }
    }

    /// The 2-vector of an isotropic frame: with `z = e₁ + iμe₂` and
    /// `w = e₃ + iλe₄`, returns `φ^{ij} = (z^i w^j - z^j w^i)/2`, so that
    /// `Q(φ) = R(z, w, z̄, w̄)`.
    pub fn from_frame(frame: &Frame4) -> Self {
        let n = frame.dim();
        let (e1, e2, e3, e4) = frame.vectors();
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            z[i] = Complex64::new(e1[i], frame.mu * e2[i]);
            w[i] = Complex64::new(e3[i], frame.lam * e4[i]);
        }
        let mut coeff = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                coeff[[i, j]] = (z[i] * w[j] - z[j] * w[i]) * Complex64::new(0.5, 0.0);
            }
        }
        Self { coeff }
    }

    pub fn dim(&self) -> usize {
        self.coeff.nrows()
    }

    pub fn coefficients(&self) -> &Array2<Complex64> {
        &self.coeff
    }

    /// `|φ|²_g = φ^{ij} conj(φ^{kl}) g_{ik} g_{jl}` — real and nonnegative.
    pub fn norm_sq(&self, g: &SymForm) -> Result<f64> {
        let n = self.dim();
        if g.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.dim(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        acc += self.coeff[[i, j]]
                            * self.coeff[[k, l]].conj()
                            * Complex64::new(g.get(i, k) * g.get(j, l), 0.0);
                    }
                }
            }
        }
        Ok(acc.re.max(0.0))
    }

    /// Rescales to `|φ|_g = 1`.
    pub fn normalized(&self, g: &SymForm) -> Result<Self> {
        let n2 = self.norm_sq(g)?;
        if n2 <= 0.0 {
            return Err(Error::InvalidParameter("cannot normalize a zero 2-vector".into()));
        }
        let inv = Complex64::new(1.0 / n2.sqrt(), 0.0);
        Ok(Self {
            coeff: self.coeff.mapv(|c| c * inv),
        })
    }

    /// Random complex 2-vector with standard-normal real and imaginary parts.
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        let mut coeff = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let c = Complex64::new(gauss(rng), gauss(rng));
                coeff[[i, j]] = c;
                coeff[[j, i]] = -c;
            }
        }
        Self { coeff }
    }
}

/// An ordered 4-tuple of `g`-orthonormal vectors together with the isotropic
/// weights `(λ, μ) ∈ [0,1]²`.  The associated complex plane is spanned by
/// `z = e₁ + iμe₂` and `w = e₃ + iλe₄`.
#[derive(Debug, Clone)]
pub struct Frame4 {
    vectors: [Vec<f64>; 4],
    pub lam: f64,
    pub mu: f64,
}

impl Frame4 {
    /// Validates `g`-orthonormality within `1e-10` and the weight ranges.
    pub fn new(vectors: [Vec<f64>; 4], lam: f64, mu: f64, g: &SymForm) -> Result<Self> {
        let n = g.dim();
        if n < 4 {
            return Err(Error::DimensionTooSmall(n));
        }
        for v in &vectors {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        if !(0.0..=1.0).contains(&lam) || !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParameter(format!(
                "isotropic weights must lie in [0,1]: lam = {lam}, mu = {mu}"
            )));
        }
        let f = Self { vectors, lam, mu };
        let defect = f.orthonormality_defect(g);
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "frame is not g-orthonormal: defect {defect:.3e}"
            )));
        }
        Ok(f)
    }

    /// Orthonormalises four i.i.d. Gaussian vectors against `g` (rejection
    /// sampling on near-degenerate draws) with the given weights.
    pub fn random<R: Rng>(rng: &mut R, g: &SymForm, lam: f64, mu: f64) -> Result<Self> {
        let n = g.dim();
        if n < 4 {
            return Err(Error::DimensionTooSmall(n));
        }
        loop {
            let raw: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..n).map(|_| gauss(rng)).collect())
                .collect();
            if let Some(vectors) = gram_schmidt(&raw, g) {
                return Ok(Self {
                    vectors,
                    lam,
                    mu,
                });
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        (
            &self.vectors[0],
            &self.vectors[1],
            &self.vectors[2],
            &self.vectors[3],
        )
    }

    pub fn vector(&self, a: usize) -> &[f64] {
        &self.vectors[a]
    }

    pub fn vectors_mut(&mut self) -> &mut [Vec<f64>; 4] {
        &mut self.vectors
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self, g: &SymForm) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((inner(g, &self.vectors[a], &self.vectors[b]) - want).abs());
            }
        }
        worst
    }

    /// Re-orthonormalises the stored vectors against `g` (used after rotation
    /// steps during frame search to stop drift).  Fails on degenerate spans.
    pub fn reorthonormalize(&mut self, g: &SymForm) -> Result<()> {
        let raw: Vec<Vec<f64>> = self.vectors.iter().cloned().collect();
        match gram_schmidt(&raw, g) {
            Some(v) => {
                self.vectors = v;
                Ok(())
            }
            None => Err(Error::InvalidParameter(
                "frame vectors became linearly dependent".into(),
            )),
        }
    }
}

pub(crate) fn inner(g: &SymForm, x: &[f64], y: &[f64]) -> f64 {
    let n = g.dim();
    let mut acc = 0.0;
    for i in 0..n {
        if x[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            acc += g.get(i, j) * x[i] * y[j];
        }
    }
    acc
}

fn gram_schmidt(raw: &[Vec<f64>], g: &SymForm) -> Option<[Vec<f64>; 4]> {
    let n = g.dim();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(4);
    for v in raw.iter().take(4) {
        let mut w = v.clone();
        // Two rounds of projection for numerical stability.
        for _ in 0..2 {
            for u in &out {
                let c = inner(g, &w, u);
                for i in 0..n {
                    w[i] -= c * u[i];
                }
            }
        }
        let norm = inner(g, &w, &w).sqrt();
        if norm < 1e-8 {
            return None;
        }
        for x in &mut w {
            *x /= norm;
        }
        out.push(w);
    }
    out.try_into().ok()
}

pub(crate) fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; cheap and RNG-portable.
    loop {
        let u: f64 = rng.gen::<f64>();
        let v: f64 = rng.gen::<f64>();
        if u > f64::MIN_POSITIVE {
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}

/// Kulkarni–Nomizu product of two symmetric forms:
/// `(S ⊼ T)_{ijkl} = S_{ik} T_{jl} + S_{jl} T_{ik} - S_{il} T_{jk} - S_{jk} T_{il}`.
///
/// The result has all algebraic curvature symmetries (including the first
/// Bianchi identity) exactly.  `g ⊼ g` gives twice the constant-curvature
/// tensor: `(g ⊼ g)_{ijij} = 2` on orthonormal pairs.
pub fn kulkarni_nomizu(s: &SymForm, t: &SymForm) -> Result<Curv4> {
    let n = s.dim();
    if t.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: t.dim(),
        });
    }
    // Each independent entry is computed once and written to all eight
    // dihedral images, so the curvature symmetries hold *exactly* in
    // floating point (re-evaluating the formula per entry would leave
    // rounding-order mismatches of a few ulp).
    let mut a = Array4::zeros((n, n, n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                for l in (k + 1)..n {
                    if (k, l) < (i, j) {
                        continue;
                    }
                    let v = s.get(i, k) * t.get(j, l) + s.get(j, l) * t.get(i, k)
                        - s.get(i, l) * t.get(j, k)
                        - s.get(j, k) * t.get(i, l);
                    a[[i, j, k, l]] = v;
                    a[[j, i, k, l]] = -v;
                    a[[i, j, l, k]] = -v;
                    a[[j, i, l, k]] = v;
                    a[[k, l, i, j]] = v;
                    a[[l, k, i, j]] = -v;
                    a[[k, l, j, i]] = -v;
                    a[[l, k, j, i]] = v;
                }
            }
        }
    }
    Ok(Curv4 { n, a })
}

/// The curvature quadratic form `Q(φ) = φ^{ij} conj(φ^{kl}) R_{ijkl}`,
/// summed over all index pairs.  The value is real for any tensor with the
/// pair symmetry; the imaginary part is asserted to vanish within `1e-10`
/// relative to the magnitude.  `g` is used only for dimension checking — the
/// contraction itself is metric-free.
pub fn quadratic_form(r: &Curv4, phi: &TwoVectorC, g: &SymForm) -> Result<f64> {
    let n = r.dim();
    if phi.dim() != n || g.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: phi.dim(),
        });
    }
    let c = phi.coefficients();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let cij = c[[i, j]];
            if cij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    let rv = r.get(i, j, k, l);
                    if rv != 0.0 {
                        acc += cij * c[[k, l]].conj() * rv;
                    }
                }
            }
        }
    }
    debug_assert!(
        acc.im.abs() <= 1e-10 * (1.0 + acc.norm()),
        "quadratic form acquired an imaginary part: {:?}",
        acc
    );
    Ok(acc.re)
}

/// Enumerates the 2-vector index pairs `(i, j)` with `i < j` in
/// lexicographic order.
pub fn pair_basis(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// The curvature operator as a symmetric matrix on 2-vectors, expressed in a
/// `g`-orthonormal frame and normalised against the 2-vector norm `|φ|_g`:
/// `M_{(ij),(kl)} = 2 R'_{ijkl}` over pairs `i < j`, where `R'` are the
/// orthonormal-frame components.
///
/// Eigenvalues of the result are exactly the critical values of
/// `Q(φ)/|φ|²_g`; the unit round sphere gives `2·I`.
pub fn curvature_operator_matrix(r: &Curv4, g: &SymForm) -> Result<DMatrix<f64>> {
    let n = r.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.dim(),
        });
    }
    let basis = g.orthonormal_basis()?;
    let ron = r.change_basis(&basis);
    let pairs = pair_basis(n);
    let m = pairs.len();
    let mut mat = DMatrix::zeros(m, m);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        for (q, &(k, l)) in pairs.iter().enumerate() {
            mat[(p, q)] = 2.0 * ron.get(i, j, k, l);
        }
    }
    // Symmetrise away roundoff from the basis change.
    let sym = (&mat + mat.transpose()) * 0.5;
    Ok(sym)
}

/// Eigenvalues (ascending) of a symmetric form `S` relative to a positive
/// form `g`, i.e. solutions of `det(S - x g) = 0`.  The sum of the first two
/// is the 2-positivity functional used for boundary classification.
pub fn sym_eigen(s: &SymForm, g: &SymForm) -> Result<Vec<f64>> {
    let n = s.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.dim(),
        });
    }
    let basis = g.orthonormal_basis()?;
    // S in the g-orthonormal basis: Bᵀ S B.
    let reduced = basis.transpose() * s.matrix() * &basis;
    let sym = (&reduced + reduced.transpose()) * 0.5;
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.total_cmp(b));
    Ok(eigs)
}

/// Sorted eigenvalues of an explicitly symmetric matrix (ascending).
pub fn symmetric_matrix_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.total_cmp(b));
    eigs
}

/// Random symmetric form with entries uniform in `[-scale, scale]`.
pub fn random_sym<R: Rng>(rng: &mut R, n: usize, scale: f64) -> SymForm {
    SymForm::from_fn(n, |_, _| rng.gen_range(-scale..=scale))
}

/// Random symmetric positive semidefinite form `AᵀA`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> SymForm {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    let m = a.transpose() * &a;
    SymForm::new((&m + m.transpose()) * 0.5).expect("AᵀA is symmetric")
}

/// Random symmetric positive definite form, uniformly well conditioned
/// (eigenvalues bounded away from zero by the ridge term).
pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> SymForm {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    let m = a.transpose() * &a + DMatrix::identity(n, n) * 0.5;
    SymForm::new((&m + m.transpose()) * 0.5).expect("AᵀA + ridge is symmetric")
}

/// Random symmetric form whose eigenvalue list is 2-positive (the two
/// smallest eigenvalues have positive sum), built by sampling eigenvalues in
/// `[-0.3, 1]` until the constraint holds, with a Haar-ish random frame.
pub fn random_two_positive<R: Rng>(rng: &mut R, n: usize) -> SymForm {
    loop {
        let eigs: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..=1.0)).collect();
        let mut sorted = eigs.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        if sorted[0] + sorted[1] <= 1e-3 {
            continue;
        }
        // Random orthogonal frame via Gram–Schmidt on Gaussian columns.
        let raw = DMatrix::from_fn(n, n, |_, _| gauss(rng));
        let qr = raw.qr();
        let q = qr.q();
        let d = DMatrix::from_diagonal(&DVector::from_vec(eigs));
        let m = &q * d * q.transpose();
        return SymForm::new((&m + m.transpose()) * 0.5).expect("QDQᵀ is symmetric");
    }
}

/// Random algebraic curvature tensor: a signed sum of `terms` Kulkarni–Nomizu
/// products of random symmetric forms.  Satisfies all curvature symmetries
/// *and* the first Bianchi identity exactly, which makes it a valid input for
/// the isotropic-curvature identities.
pub fn random_algebraic_curvature<R: Rng>(rng: &mut R, n: usize, terms: usize) -> Curv4 {
    let mut total = Curv4::zeros(n);
    for _ in 0..terms.max(1) {
        let s = random_sym(rng, n, 1.0);
        let t = random_sym(rng, n, 1.0);
        let kn = kulkarni_nomizu(&s, &t).expect("dimensions match");
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        total.a += &(&kn.a * sign);
    }
    total
}
