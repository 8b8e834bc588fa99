//! Finite-difference verification of analytic jets.
//!
//! Every curvature quantity in this crate is computed from exact
//! second-order jets, so a field whose stated derivatives disagree with
//! difference quotients of its own values is broken at the source.  This
//! module provides the independent cross-check: Richardson-extrapolated
//! central differences of the field values against the first jet, and of
//! the first jet against the second.  Differencing the *analytic* first jet
//! for the second-order check keeps the two comparisons independent and
//! avoids the precision collapse of double numerical differentiation.
//!
//! The default step `1e-4` with one Richardson level gives `O(h⁴) ≈ 1e-16`
//! truncation, so smooth fields agree to roughly `1e-10` absolute — the
//! residual is rounding noise amplified by `1/h`.
//!
//! The difference stencil reaches `±h` along every coordinate, so the base
//! point must sit at least `h` inside the chart (in particular `s ≥ h`).

use crate::fields::{MetricField, TensorField};
use crate::Result;

/// Worst-case disagreement between analytic and finite-difference jets.
#[derive(Debug, Clone, Copy)]
pub struct JetDeviation {
    /// `max |Δ_m g_ij − dg[m][i][j]|` over all entries and directions.
    pub first: f64,
    /// `max |Δ_m dg[p][i][j] − ddg[m][p][i][j]|` likewise.
    pub second: f64,
}

impl JetDeviation {
    pub fn max(&self) -> f64 {
        self.first.max(self.second)
    }
}

/// Richardson-extrapolated central difference: combines steps `h` and `h/2`
/// for an `O(h⁴)` derivative estimate from four evaluations.
fn richardson(mut f: impl FnMut(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let coarse = (f(h)? - f(-h)?) / (2.0 * h);
    let fine = (f(0.5 * h)? - f(-0.5 * h)?) / h;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Compares a metric field's jets against finite differences at `x`.
pub fn verify_metric_jets(field: &dyn MetricField, x: &[f64], h: f64) -> Result<JetDeviation> {
    let jet = field.jet(x)?;
    let n = jet.dim();
    let mut dev = JetDeviation {
        first: 0.0,
        second: 0.0,
    };
    for m in 0..n {
        for i in 0..n {
            for j in i..n {
                let fd = richardson(
                    |t| {
                        let mut y = x.to_vec();
                        y[m] += t;
                        Ok(field.jet(&y)?.g.get(i, j))
                    },
                    h,
                )?;
                dev.first = dev.first.max((fd - jet.dg[[m, i, j]]).abs());
                for p in 0..n {
                    let fd2 = richardson(
                        |t| {
                            let mut y = x.to_vec();
                            y[p] += t;
                            Ok(field.jet(&y)?.dg[[m, i, j]])
                        },
                        h,
                    )?;
                    dev.second = dev.second.max((fd2 - jet.ddg[[p, m, i, j]]).abs());
                }
            }
        }
    }
    Ok(dev)
}

/// Compares a tensor field's jets against finite differences at `x`.
pub fn verify_tensor_jets(field: &dyn TensorField, x: &[f64], h: f64) -> Result<JetDeviation> {
    let jet = field.jet(x)?;
    let n = field.dim();
    let mut dev = JetDeviation {
        first: 0.0,
        second: 0.0,
    };
    for m in 0..n {
        for i in 0..n {
            for j in i..n {
                let fd = richardson(
                    |t| {
                        let mut y = x.to_vec();
                        y[m] += t;
                        Ok(field.jet(&y)?.value[[i, j]])
                    },
                    h,
                )?;
                dev.first = dev.first.max((fd - jet.d[[m, i, j]]).abs());
                for p in 0..n {
                    let fd2 = richardson(
                        |t| {
                            let mut y = x.to_vec();
                            y[p] += t;
                            Ok(field.jet(&y)?.d[[m, i, j]])
                        },
                        h,
                    )?;
                    dev.second = dev.second.max((fd2 - jet.dd[[p, m, i, j]]).abs());
                }
            }
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{EuclideanBall, PolyRandom, RoundCylinder, SphericalCap, WarpedCollar};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn builtin_fields_have_consistent_jets() {
        let x = [0.21, -0.33, 0.4, 0.17];
        let cap = SphericalCap::new(4, 1.1).unwrap();
        assert!(verify_metric_jets(&cap, &x, 1e-4).unwrap().max() < 1e-9);
        let ball = EuclideanBall::new(4).unwrap();
        assert!(verify_metric_jets(&ball, &x, 1e-4).unwrap().max() < 1e-9);
        let cyl = RoundCylinder::new(4, 1.3, 1.0).unwrap();
        assert!(verify_metric_jets(&cyl, &x, 1e-4).unwrap().max() < 1e-9);
    }

    #[test]
    fn random_polynomial_field_has_consistent_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // Magnitude 0.1 keeps this seed's draw positive definite across the
        // whole chart (the constructor probes for that and rejects otherwise).
        let field = PolyRandom::new(&mut rng, 4, 0.1).unwrap();
        let x = [0.11, 0.42, -0.3, 0.5];
        assert!(verify_metric_jets(&field, &x, 1e-4).unwrap().max() < 1e-9);
    }

    #[test]
    fn warped_collar_has_consistent_jets() {
        let base: Arc<dyn MetricField> = Arc::new(SphericalCap::new(4, 1.1).unwrap());
        let collar = WarpedCollar::new(base, 1.7).unwrap();
        let x = [0.21, -0.33, 0.4, 0.3];
        assert!(verify_metric_jets(&collar, &x, 1e-4).unwrap().max() < 1e-9);
    }

    #[test]
    fn deformed_metric_has_consistent_jets_in_the_direct_zone() {
        // The deformation switches between exact branch formulas; away from
        // the interface and the Taylor window its jets must agree with
        // difference quotients like any other field.
        let base: Arc<dyn MetricField> = Arc::new(SphericalCap::new(4, 1.1).unwrap());
        let model: Arc<dyn MetricField> =
            Arc::new(WarpedCollar::new(base.clone(), 1.3).unwrap());
        let data =
            crate::deform::DeformationData::new(base, model, 0.8, 4.0).unwrap();
        let x = [0.21, -0.33, 0.4, 0.2];
        assert!(verify_metric_jets(&data, &x, 1e-5).unwrap().max() < 2e-8);
    }

    #[test]
    fn strain_field_jets_match_difference_quotients() {
        let base: Arc<dyn MetricField> = Arc::new(SphericalCap::new(4, 1.1).unwrap());
        let model: Arc<dyn MetricField> =
            Arc::new(WarpedCollar::new(base.clone(), 1.3).unwrap());
        let strain = crate::deform::build_strain(base, model, 0.8).unwrap();
        let x = [0.21, -0.33, 0.4, 0.2];
        assert!(verify_tensor_jets(&strain, &x, 1e-5).unwrap().max() < 2e-8);
    }
}
