//! Curvature from metric jets: Christoffel symbols, the Riemann tensor,
//! scalar curvature, boundary shape operators, covariant derivatives, and the
//! exact perturbed-curvature expansion.
//!
//! Sign convention, fixed once for the whole crate: the Riemann tensor with
//! all indices down is
//!
//! ```text
//! R_{iklm} = ½ (∂_k∂_l g_im + ∂_i∂_m g_kl − ∂_k∂_m g_il − ∂_i∂_l g_km)
//!          + g_{np} (Γ^n_{kl} Γ^p_{im} − Γ^n_{km} Γ^p_{il})
//! ```
//!
//! which makes sectional curvatures of the unit round sphere equal `+1`
//! (`R_{ijij} = +1` in orthonormal frames).  The scalar curvature of the unit
//! `n`-sphere is then `n(n-1)`.

use ndarray::{Array2, Array3, Array4};

use crate::fields::{MetricField, MetricJet, TensorJet};
use crate::tensor::{Curv4, SymForm};
use crate::{Error, Result};

/// Christoffel symbols `Γ^n_{kl}`, layout `gamma[[n, k, l]]` (upper index
/// first).
pub fn christoffel(jet: &MetricJet) -> Result<Array3<f64>> {
    let n = jet.dim();
    let inv = jet.g.inverse()?;
    let mut gamma = Array3::zeros((n, n, n));
    for k in 0..n {
        for l in k..n {
            // Symmetric in (k, l): compute once.
            for up in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += inv.get(up, m)
                        * 0.5
                        * (jet.dg[[k, m, l]] + jet.dg[[l, m, k]] - jet.dg[[m, k, l]]);
                }
                gamma[[up, k, l]] = acc;
                gamma[[up, l, k]] = acc;
            }
        }
    }
    Ok(gamma)
}

/// Christoffel symbols together with their coordinate derivatives,
/// `dgamma[[p, n, k, l]] = ∂_p Γ^n_{kl}`.  Uses
/// `∂_p g^{nm} = -g^{na} (∂_p g_{ab}) g^{bm}`.
pub fn christoffel_with_derivs(jet: &MetricJet) -> Result<(Array3<f64>, Array4<f64>)> {
    let n = jet.dim();
    let inv = jet.g.inverse()?;
    let gamma = christoffel(jet)?;

    // dinv[[p, n, m]] = ∂_p g^{nm}
    let mut dinv = Array3::zeros((n, n, n));
    for p in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc -= inv.get(i, a) * jet.dg[[p, a, b]] * inv.get(b, j);
                    }
                }
                dinv[[p, i, j]] = acc;
            }
        }
    }

    let mut dgamma = Array4::zeros((n, n, n, n));
    for p in 0..n {
        for k in 0..n {
            for l in k..n {
                for up in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        let bracket =
                            jet.dg[[k, m, l]] + jet.dg[[l, m, k]] - jet.dg[[m, k, l]];
                        let dbracket = jet.ddg[[p, k, m, l]] + jet.ddg[[p, l, m, k]]
                            - jet.ddg[[p, m, k, l]];
                        acc += 0.5 * (dinv[[p, up, m]] * bracket + inv.get(up, m) * dbracket);
                    }
                    dgamma[[p, up, k, l]] = acc;
                    dgamma[[p, up, l, k]] = acc;
                }
            }
        }
    }
    Ok((gamma, dgamma))
}

/// The Riemann tensor with all indices down, from a second-order metric jet.
pub fn riemann(jet: &MetricJet) -> Result<Curv4> {
    let n = jet.dim();
    let gamma = christoffel(jet)?;
    let mut a = Array4::zeros((n, n, n, n));
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let second = 0.5
                        * (jet.ddg[[k, l, i, m]] + jet.ddg[[i, m, k, l]]
                            - jet.ddg[[k, m, i, l]]
                            - jet.ddg[[i, l, k, m]]);
                    let mut quad = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            quad += jet.g.get(p, q)
                                * (gamma[[p, k, l]] * gamma[[q, i, m]]
                                    - gamma[[p, k, m]] * gamma[[q, i, l]]);
                        }
                    }
                    a[[i, k, l, m]] = second + quad;
                }
            }
        }
    }
    // The formula has the pair symmetries identically; symmetrising removes
    // the last bits of roundoff asymmetry from summation order.
    Ok(Curv4::symmetrized(a))
}

/// Scalar curvature `R = g^{il} g^{km} R_{iklm}`.
pub fn scalar_curvature(r: &Curv4, g: &SymForm) -> Result<f64> {
    let n = r.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.dim(),
        });
    }
    let inv = g.inverse()?;
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    acc += inv.get(i, l) * inv.get(k, m) * r.get(i, k, l, m);
                }
            }
        }
    }
    Ok(acc)
}

/// The boundary shape data of a Fermi collar field at the boundary point `u`:
/// induced metric, second fundamental form, and its eigenvalue summaries.
#[derive(Debug, Clone)]
pub struct BoundaryShape {
    /// Induced boundary metric `g_∂` (dimension `n-1`).
    pub induced: SymForm,
    /// Second fundamental form `A_{ab} = -½ ∂_s g_{ab}|_{s=0}` with respect
    /// to the inward normal; positive for the boundary sphere of a convex
    /// body.
    pub second_form: SymForm,
    /// Eigenvalues of `A` relative to `g_∂`, ascending (the principal
    /// curvatures).
    pub eigenvalues: Vec<f64>,
    /// Mean curvature `tr_{g_∂} A`.
    pub mean: f64,
    /// Sum of the two smallest principal curvatures; the boundary is
    /// two-convex when this is positive.
    pub two_convexity: f64,
}

/// Computes the boundary shape of a Fermi field at boundary point `u`
/// (length `n-1`).
pub fn second_fundamental_form(field: &dyn MetricField, u: &[f64]) -> Result<BoundaryShape> {
    let chart = field.chart();
    if !chart.fermi {
        return Err(Error::InvalidParameter(
            "second fundamental form needs a Fermi chart (g_nn = 1, g_an = 0)".into(),
        ));
    }
    let n = chart.dim;
    if u.len() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: u.len(),
        });
    }
    let mut x = u.to_vec();
    x.push(0.0);
    let jet = field.jet(&x)?;
    let nn = n - 1;
    let induced = SymForm::from_fn(n - 1, |a, b| jet.g.get(a, b));
    let second_form = SymForm::from_fn(n - 1, |a, b| -0.5 * jet.dg[[nn, a, b]]);
    let eigenvalues = crate::tensor::sym_eigen(&second_form, &induced)?;
    let inv = induced.inverse()?;
    let mut mean = 0.0;
    for a in 0..n - 1 {
        for b in 0..n - 1 {
            mean += inv.get(a, b) * second_form.get(a, b);
        }
    }
    let two_convexity = eigenvalues[0] + eigenvalues.get(1).copied().unwrap_or(0.0);
    Ok(BoundaryShape {
        induced,
        second_form,
        eigenvalues,
        mean,
        two_convexity,
    })
}

/// First and second covariant derivatives of a symmetric 2-tensor with
/// respect to the Levi-Civita connection of `gjet`:
///
/// * `∇h[[m, i, j]] = (∇_m h)_{ij}`
/// * `∇²h[[i, k, j, l]] = (∇_i (∇h))_{k, jl}` — the **first** slot is the
///   outer derivative.
pub fn covariant_derivative(
    h: &TensorJet,
    gjet: &MetricJet,
) -> Result<(Array3<f64>, Array4<f64>)> {
    let n = gjet.dim();
    if h.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.dim(),
        });
    }
    let (gamma, dgamma) = christoffel_with_derivs(gjet)?;

    let mut nh = Array3::zeros((n, n, n));
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = h.d[[m, i, j]];
                for p in 0..n {
                    acc -= gamma[[p, m, i]] * h.value[[p, j]];
                    acc -= gamma[[p, m, j]] * h.value[[i, p]];
                }
                nh[[m, i, j]] = acc;
            }
        }
    }

    // Coordinate derivative of ∇h:
    // ∂_i (∇h)_{k,jl} = ∂_i∂_k h_jl − (∂_iΓ^p_{kj}) h_pl − Γ^p_{kj} ∂_i h_pl
    //                 − (∂_iΓ^p_{kl}) h_jp − Γ^p_{kl} ∂_i h_jp
    let mut dnh = Array4::zeros((n, n, n, n));
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut acc = h.dd[[i, k, j, l]];
                    for p in 0..n {
                        acc -= dgamma[[i, p, k, j]] * h.value[[p, l]]
                            + gamma[[p, k, j]] * h.d[[i, p, l]];
                        acc -= dgamma[[i, p, k, l]] * h.value[[j, p]]
                            + gamma[[p, k, l]] * h.d[[i, j, p]];
                    }
                    dnh[[i, k, j, l]] = acc;
                }
            }
        }
    }

    // Full second covariant derivative of the (0,3) tensor ∇h.
    let mut nnh = Array4::zeros((n, n, n, n));
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut acc = dnh[[i, k, j, l]];
                    for p in 0..n {
                        acc -= gamma[[p, i, k]] * nh[[p, j, l]];
                        acc -= gamma[[p, i, j]] * nh[[k, p, l]];
                        acc -= gamma[[p, i, l]] * nh[[k, j, p]];
                    }
                    nnh[[i, k, j, l]] = acc;
                }
            }
        }
    }
    Ok((nh, nnh))
}

/// Which form of the Hessian block to use in [`perturbed_riemann`].
///
/// The expansion is exact only with the antisymmetrised block; the unbalanced
/// variant (with the second term's last index repeated instead of swapped) is
/// kept so tests can demonstrate that it fails the cross-check — a cheap
/// guard against silently reintroducing the broken form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianTerm {
    /// `E_{ijkl} = ½(−∇²_{i,k}h_{jl} + ∇²_{i,l}h_{jk} + ∇²_{j,k}h_{il} − ∇²_{j,l}h_{ik})`.
    Antisymmetrized,
    /// The broken bookkeeping variant with `∇²_{i,l}h_{jl}` in the second
    /// term.  Fails the identity at first order in `∇²h`.
    Unbalanced,
}

/// The curvature of the perturbed metric `ĝ = g + h`, computed **exactly**
/// (no truncation) from the curvature of `g` and the covariant derivatives of
/// `h` with respect to `g`:
///
/// ```text
/// R̂_{ijkl} = R_{ijkl} + ½ g^{pq} (R_{ijkp} h_{ql} − R_{ijlp} h_{kq})
///          + E_{ijkl} + F_{ijkl}
/// ```
///
/// where `E` is the antisymmetrised Hessian block (see [`HessianTerm`]) and
/// `F` is quadratic in `∇h` with the *perturbed* inverse metric:
///
/// ```text
/// F_{ijkl} = ¼ ĝ^{pq} (T_{jkp} T_{ilq} − T_{ikp} T_{jlq}),
/// T_{jkp}  = (∇_j h)_{kp} + (∇_k h)_{jp} − (∇_p h)_{jk}.
/// ```
///
/// Requires `|h|_g <= 1/2` (so `ĝ` stays comparable to `g`); returns
/// [`Error::PerturbationTooLarge`] otherwise.
pub fn perturbed_riemann(
    r_g: &Curv4,
    g: &SymForm,
    h: &Array2<f64>,
    nabla_h: &Array3<f64>,
    nabla2_h: &Array4<f64>,
    variant: HessianTerm,
) -> Result<Curv4> {
    let n = g.dim();
    if r_g.dim() != n || h.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r_g.dim(),
        });
    }
    let norm = g.tensor_norm(h)?;
    if norm > 0.5 {
        return Err(Error::PerturbationTooLarge { norm });
    }
    let ghat = SymForm::from_fn(n, |i, j| g.get(i, j) + h[[i, j]]);
    let ghat_inv = ghat.inverse()?;
    let ginv = g.inverse()?;

    // T_{jkp} = (∇_j h)_{kp} + (∇_k h)_{jp} − (∇_p h)_{jk}
    let mut t = Array3::zeros((n, n, n));
    for j in 0..n {
        for k in 0..n {
            for p in 0..n {
                t[[j, k, p]] =
                    nabla_h[[j, k, p]] + nabla_h[[k, j, p]] - nabla_h[[p, j, k]];
            }
        }
    }

    let mut a = Array4::zeros((n, n, n, n));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = r_g.get(i, j, k, l);

                    for p in 0..n {
                        for q in 0..n {
                            v += 0.5
                                * ginv.get(p, q)
                                * (r_g.get(i, j, k, p) * h[[q, l]]
                                    - r_g.get(i, j, l, p) * h[[k, q]]);
                        }
                    }

                    let e = match variant {
                        HessianTerm::Antisymmetrized => {
                            0.5 * (-nabla2_h[[i, k, j, l]] + nabla2_h[[i, l, j, k]]
                                + nabla2_h[[j, k, i, l]]
                                - nabla2_h[[j, l, i, k]])
                        }
                        HessianTerm::Unbalanced => {
                            0.5 * (-nabla2_h[[i, k, j, l]] + nabla2_h[[i, l, j, l]]
                                + nabla2_h[[j, k, i, l]]
                                - nabla2_h[[j, l, i, k]])
                        }
                    };
                    v += e;

                    let mut f = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            f += ghat_inv.get(p, q)
                                * (t[[j, k, p]] * t[[i, l, q]]
                                    - t[[i, k, p]] * t[[j, l, q]]);
                        }
                    }
                    v += 0.25 * f;

                    a[[i, j, k, l]] = v;
                }
            }
        }
    }
    Ok(Curv4::symmetrized(a))
}

/// Convenience: metric jet and Riemann tensor of a field at a point.
pub fn curvature_at(field: &dyn MetricField, x: &[f64]) -> Result<(MetricJet, Curv4)> {
    let jet = field.jet(x)?;
    let r = riemann(&jet)?;
    Ok((jet, r))
}
