//! Benchmark problems with manufactured exact solutions.
//!
//! Both problems live on the unit square with a homogeneous medium and the
//! linear anisotropic phase function `a0 + a1 s'. s`, and both prescribe
//! their exact intensity as inflow data, so the computed radiation density
//! can be compared against a closed form.
//!
//! Problem 1 manufactures the direction-independent intensity
//!
//! ```text
//! I(x) = 1 + sin(2 pi kappa x1) sin(2 pi sigma_s x2),
//! ```
//!
//! whose zeroth moment equals the intensity and whose first moments vanish.
//! Problem 2 manufactures the anisotropic intensity
//!
//! ```text
//! I(x, s) = (1 + s1) exp(-kappa x1 - sigma_s x2),
//! ```
//!
//! with moments `psi0 = exp(...)`, `psi1 = psi0 / 3`, `psi2 = 0`; its source
//! balances the scattering operator only for `a0 = 1`, `a1 = 1/2`, which is
//! exactly what `residual_check` verifies.

use std::sync::Arc;

use crate::directions::Direction;
use crate::error::{Error, Result};
use crate::transport::{Medium, PhaseCoefficients};

/// A scalar function of position and direction.
pub type AngularFn = Arc<dyn Fn(f64, f64, [f64; 3]) -> f64 + Send + Sync>;
/// A scalar function of position only.
pub type SpatialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// The spatial gradient of an angular function.
pub type AngularGradFn = Arc<dyn Fn(f64, f64, [f64; 3]) -> (f64, f64) + Send + Sync>;

/// Exact fields attached to a manufactured problem.
pub struct ExactSolution {
    pub intensity: AngularFn,
    pub intensity_gradient: AngularGradFn,
    pub psi0: SpatialFn,
    pub psi1: SpatialFn,
    pub psi2: SpatialFn,
    /// Domain means of the exact moments, in closed form.
    pub mean_psi0: f64,
    pub mean_psi1: f64,
    pub mean_psi2: f64,
}

/// A complete problem statement: geometry, medium, phase function, volume
/// source `kappa I_b`, inflow data, and (optionally) the exact solution.
pub struct ProblemSpec {
    pub name: String,
    /// Domain `[a, b] x [c, d]`.
    pub bounds: (f64, f64, f64, f64),
    pub medium: Medium,
    pub phase: PhaseCoefficients,
    /// Volumetric source `kappa I_b(x, s)`.
    pub emission: AngularFn,
    /// Prescribed boundary intensity `I_in(x, s)`.
    pub inflow: AngularFn,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("medium", &self.medium)
            .field("phase", &self.phase)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

/// Names accepted by the problem catalog.
pub const PROBLEM_NAMES: [&str; 2] = ["problem1", "problem2"];

/// Problem 1 with its canonical scattering coefficient `sigma_s = 2 kappa`.
pub fn problem1(kappa: f64) -> Result<ProblemSpec> {
    problem1_with_scattering(kappa, 2.0 * kappa)
}

/// Problem 1 with an independently chosen scattering coefficient. The
/// manufactured balance holds for any positive pair.
pub fn problem1_with_scattering(kappa: f64, sigma_s: f64) -> Result<ProblemSpec> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "problem1 needs kappa > 0, got {kappa}"
        )));
    }
    let medium = Medium::new(kappa, sigma_s)?;
    let tau = std::f64::consts::TAU;
    let wx = tau * kappa;
    let wy = tau * sigma_s;

    let density = move |x1: f64, x2: f64| 1.0 + (wx * x1).sin() * (wy * x2).sin();
    let intensity: AngularFn = Arc::new(move |x1, x2, _s| density(x1, x2));
    let gradient: AngularGradFn = Arc::new(move |x1, x2, _s| {
        (
            wx * (wx * x1).cos() * (wy * x2).sin(),
            wy * (wx * x1).sin() * (wy * x2).cos(),
        )
    });
    let emission: AngularFn = Arc::new(move |x1, x2, s| {
        wx * s[0] * (wx * x1).cos() * (wy * x2).sin()
            + wy * s[1] * (wx * x1).sin() * (wy * x2).cos()
            + kappa * density(x1, x2)
    });
    let inflow: AngularFn = Arc::new(move |x1, x2, _s| density(x1, x2));

    // Mean of sin(w t) over [0, 1]; zero at the canonical integer
    // frequencies.
    let sine_mean = |w: f64| (1.0 - w.cos()) / w;
    let mean_psi0 = 1.0 + sine_mean(wx) * sine_mean(wy);

    Ok(ProblemSpec {
        name: "problem1".into(),
        bounds: (0.0, 1.0, 0.0, 1.0),
        medium,
        phase: PhaseCoefficients::new(1.0, 0.5)?,
        emission,
        inflow,
        exact: Some(ExactSolution {
            intensity,
            intensity_gradient: gradient,
            psi0: Arc::new(density),
            psi1: Arc::new(|_, _| 0.0),
            psi2: Arc::new(|_, _| 0.0),
            mean_psi0,
            mean_psi1: 0.0,
            mean_psi2: 0.0,
        }),
    })
}

/// Problem 2: anisotropic exponential intensity.
pub fn problem2(kappa: f64, sigma_s: f64) -> Result<ProblemSpec> {
    if !(kappa > 0.0 && sigma_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "problem2 needs kappa > 0 and sigma_s > 0, got ({kappa}, {sigma_s})"
        )));
    }
    let medium = Medium::new(kappa, sigma_s)?;
    let envelope = move |x1: f64, x2: f64| (-kappa * x1 - sigma_s * x2).exp();

    let intensity: AngularFn = Arc::new(move |x1, x2, s| (1.0 + s[0]) * envelope(x1, x2));
    let gradient: AngularGradFn = Arc::new(move |x1, x2, s| {
        let v = (1.0 + s[0]) * envelope(x1, x2);
        (-kappa * v, -sigma_s * v)
    });
    // The 5/6 weight is what the scattering operator leaves of the first
    // angular moment under a0 = 1, a1 = 1/2.
    let emission: AngularFn = Arc::new(move |x1, x2, s| {
        ((kappa - kappa * s[0] - sigma_s * s[1]) * (1.0 + s[0]) + (5.0 / 6.0) * sigma_s * s[0])
            * envelope(x1, x2)
    });
    let inflow: AngularFn = Arc::new(move |x1, x2, s| (1.0 + s[0]) * envelope(x1, x2));

    let decay_mean = |t: f64| (1.0 - (-t).exp()) / t;
    let mean_psi0 = decay_mean(kappa) * decay_mean(sigma_s);

    Ok(ProblemSpec {
        name: "problem2".into(),
        bounds: (0.0, 1.0, 0.0, 1.0),
        medium,
        phase: PhaseCoefficients::new(1.0, 0.5)?,
        emission,
        inflow,
        exact: Some(ExactSolution {
            intensity,
            intensity_gradient: gradient,
            psi0: Arc::new(envelope),
            psi1: Arc::new(move |x1, x2| envelope(x1, x2) / 3.0),
            psi2: Arc::new(|_, _| 0.0),
            mean_psi0,
            mean_psi1: mean_psi0 / 3.0,
            mean_psi2: 0.0,
        }),
    })
}

/// Evaluates the transfer equation residual of the exact solution at one
/// point and direction:
///
/// ```text
/// r = s . grad I + sigma_t I - sigma_s (a0 psi0 + a1 (s1 psi1 + s2 psi2))
///     - kappa I_b .
/// ```
///
/// A manufactured problem whose source and moments belong together returns
/// roundoff; any tampering with the coefficients shows up as an O(1)
/// residual.
pub fn residual_check(spec: &ProblemSpec, d: &Direction, x1: f64, x2: f64) -> Result<f64> {
    let exact = spec
        .exact
        .as_ref()
        .ok_or_else(|| Error::MissingExactSolution(spec.name.clone()))?;
    let s = d.components();
    let intensity = (exact.intensity)(x1, x2, s);
    let (gx, gy) = (exact.intensity_gradient)(x1, x2, s);
    let scattered = spec.phase.a0() * (exact.psi0)(x1, x2)
        + spec.phase.a1() * (d.s1 * (exact.psi1)(x1, x2) + d.s2 * (exact.psi2)(x1, x2));
    Ok(d.s1 * gx + d.s2 * gy + spec.medium.sigma_t() * intensity
        - spec.medium.sigma_s() * scattered
        - (spec.emission)(x1, x2, s))
}
