//! Curvature, two independent ways.
//!
//! Closed forms for the symmetric metric classes (this module) and a
//! finite-difference Christoffel assembly on embedded meshes that knows
//! nothing about the symmetry ([`oracle`]).
//!
//! Profile metrics `phi_g^2 dx^2 + psi^2 * round S^n` (arclength s):
//! the mixed sectional curvature is `-psi_ss / psi`, the fiber sectional
//! curvature `(1 - psi_s^2) / psi^2`, and everything else is built from
//! those two numbers. At a smooth cap pole both limits equal
//! `-psi_sss / psi_s`.
//!
//! Twisted products `k + e^{2u} dtheta^2` with `k = ds^2 + h^2 dphi^2`:
//! the three coordinate-plane sectional curvatures are `-h_ss / h`,
//! `-(u_ss + u_s^2)` and `-(h_s / h) u_s`; Ricci and scalar curvature are
//! their pair sums.

mod oracle;

pub use oracle::{embedded_curvature, EmbeddedCurvature};

use crate::error::{HookError, Result};
use crate::hookgen::{EmbeddedMesh, ProfileMetric, Topology, TwistedMetric};
use crate::num::trapezoid;

/// Pointwise curvature of a symmetric metric, one entry per grid node.
///
/// `ricci` holds the distinct Ricci eigenvalues, `sectional` the distinct
/// sectional curvatures of coordinate planes; their meaning per metric class
/// is documented on the constructing function.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub scalar: Vec<f64>,
    pub ricci: Vec<Vec<f64>>,
    pub sectional: Vec<Vec<f64>>,
    /// max |sectional| per node, the curvature scale used by step control
    /// and classification.
    pub rm_norm: Vec<f64>,
}

impl CurvatureField {
    pub fn max_rm(&self) -> f64 {
        self.rm_norm.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_scalar(&self) -> f64 {
        self.scalar.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn min_sectional(&self) -> f64 {
        self.sectional
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// First and second arclength derivatives of a channel on a profile grid.
///
/// `odd` marks channels that extend oddly through TwoCaps poles (psi, h);
/// even channels (u) reflect. Periodic topologies wrap; FixedEnds uses
/// one-sided second-order stencils.
pub(crate) fn arclength_derivs(
    values: &[f64],
    gauge: &[f64],
    spacing: f64,
    topology: Topology,
    odd: bool,
) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    let at = |i: isize| -> f64 {
        if i >= 0 && (i as usize) < n {
            return values[i as usize];
        }
        match topology {
            Topology::Periodic => values[i.rem_euclid(n as isize) as usize],
            Topology::TwoCaps => {
                // Ghost through the pole: odd or even reflection about the
                // pole value.
                let (j, pole) = if i < 0 {
                    ((-i) as usize, 0)
                } else {
                    (2 * (n - 1) - i as usize, n - 1)
                };
                if odd {
                    2.0 * values[pole] - values[j]
                } else {
                    values[j]
                }
            }
            Topology::FixedEnds => f64::NAN,
        }
    };
    for i in 0..n {
        let (vm, v0, vp) = (at(i as isize - 1), values[i], at(i as isize + 1));
        let g = gauge[i];
        if vm.is_nan() || vp.is_nan() {
            // fall through to the one-sided branch below
        } else {
            // Fourth-order first derivative where the 5-point stencil fits;
            // (1 - psi_s^2) / psi^2 near a pole cancels catastrophically with
            // a second-order slope.
            let (vm2, vp2) = (at(i as isize - 2), at(i as isize + 2));
            if !vm2.is_nan() && !vp2.is_nan() {
                d1[i] = (vm2 - 8.0 * vm + 8.0 * vp - vp2) / (12.0 * spacing * g);
                d2[i] = (vp - 2.0 * v0 + vm) / (spacing * spacing * g * g);
                continue;
            }
        }
        if vm.is_nan() || vp.is_nan() {
            // One-sided second-order stencils at held ends.
            if i == 0 {
                d1[i] = (-1.5 * values[0] + 2.0 * values[1] - 0.5 * values[2]) / (spacing * gauge[0]);
                d2[i] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3])
                    / (spacing * spacing * gauge[0] * gauge[0]);
            } else {
                d1[i] = (1.5 * values[n - 1] - 2.0 * values[n - 2] + 0.5 * values[n - 3])
                    / (spacing * gauge[n - 1]);
                d2[i] = (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3]
                    - values[n - 4])
                    / (spacing * spacing * gauge[n - 1] * gauge[n - 1]);
            }
            continue;
        }
        d1[i] = (vp - vm) / (2.0 * spacing * g);
        d2[i] = (vp - 2.0 * v0 + vm) / (spacing * spacing * g * g);
    }
    d2_gauge_correction(values, gauge, spacing, topology, &mut d2);
    (d1, d2)
}

/// Second-derivative correction for a non-constant gauge:
/// f_ss = f_xx / phi^2 - f_x phi_x / phi^3.
fn d2_gauge_correction(
    values: &[f64],
    gauge: &[f64],
    spacing: f64,
    topology: Topology,
    d2: &mut [f64],
) {
    let n = values.len();
    let constant = gauge.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15 * w[0].abs());
    if constant {
        return;
    }
    for i in 1..n - 1 {
        let gx = (gauge[i + 1] - gauge[i - 1]) / (2.0 * spacing);
        let fx = (values[i + 1] - values[i - 1]) / (2.0 * spacing);
        d2[i] -= fx * gx / (gauge[i] * gauge[i] * gauge[i]);
    }
    if topology == Topology::Periodic {
        for i in [0, n - 1] {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let gx = (gauge[ip] - gauge[im]) / (2.0 * spacing);
            let fx = (values[ip] - values[im]) / (2.0 * spacing);
            d2[i] -= fx * gx / (gauge[i] * gauge[i] * gauge[i]);
        }
    }
}

/// Closed-form curvature of a profile metric.
///
/// `ricci[i] = [Ric(s, s), Ric(fiber unit)]`,
/// `sectional[i] = [K_mixed, K_fiber]` (the fiber entry is absent for n = 1).
pub fn profile_curvature(m: &ProfileMetric) -> Result<CurvatureField> {
    m.validate()?;
    let count = m.x.len();
    let h = m.spacing();
    let nf = m.n as f64;
    let (psi_s, psi_ss) = arclength_derivs(&m.radius, &m.gauge, h, m.topology, true);
    let mut out = CurvatureField {
        scalar: vec![0.0; count],
        ricci: vec![Vec::new(); count],
        sectional: vec![Vec::new(); count],
        rm_norm: vec![0.0; count],
    };
    for i in 0..count {
        let interior = !(m.topology == Topology::TwoCaps && (i == 0 || i == count - 1));
        let (k_mixed, k_fiber) = if interior {
            let psi = m.radius[i];
            (
                -psi_ss[i] / psi,
                (1.0 - psi_s[i] * psi_s[i]) / (psi * psi),
            )
        } else {
            // Smooth pole: both limits are -psi_sss / psi_s, taken from the
            // cubic odd extension through the first two interior nodes.
            let hs = h * m.gauge[i];
            let (p1, p2) = if i == 0 {
                (m.radius[1], m.radius[2])
            } else {
                (m.radius[count - 2], m.radius[count - 3])
            };
            let b6 = (p2 - 2.0 * p1) / (hs * hs * hs);
            let a = (8.0 * p1 - p2) / (6.0 * hs);
            let k = -b6 / a;
            (k, k)
        };
        let ric_s = nf * k_mixed;
        let ric_f = k_mixed + (nf - 1.0) * k_fiber;
        out.scalar[i] = 2.0 * nf * k_mixed + nf * (nf - 1.0) * k_fiber;
        out.ricci[i] = vec![ric_s, ric_f];
        out.sectional[i] = if m.n == 1 {
            vec![k_mixed]
        } else {
            vec![k_mixed, k_fiber]
        };
        out.rm_norm[i] = out.sectional[i].iter().fold(0.0, |a: f64, &b| a.max(b.abs()));
    }
    Ok(out)
}

/// Closed-form curvature of a twisted product metric.
///
/// `ricci[i] = [Ric(s, s), Ric(phi unit), Ric(theta unit)]`,
/// `sectional[i] = [K(s, phi), K(s, theta), K(phi, theta)]`.
pub fn twisted_curvature(m: &TwistedMetric) -> Result<CurvatureField> {
    m.validate()?;
    let count = m.x.len();
    let h = m.spacing();
    let (h_s, h_ss) = arclength_derivs(&m.warp, &m.gauge, h, Topology::TwoCaps, true);
    let (u_s, u_ss) = arclength_derivs(&m.twist, &m.gauge, h, Topology::TwoCaps, false);
    let mut out = CurvatureField {
        scalar: vec![0.0; count],
        ricci: vec![Vec::new(); count],
        sectional: vec![Vec::new(); count],
        rm_norm: vec![0.0; count],
    };
    for i in 0..count {
        let (k_sp, k_st, k_pt) = if i > 0 && i < count - 1 {
            (
                -h_ss[i] / m.warp[i],
                -(u_ss[i] + u_s[i] * u_s[i]),
                -(h_s[i] / m.warp[i]) * u_s[i],
            )
        } else {
            // Pole limits: h_s/h -> 1/rho and u_s -> rho u_ss, so the cross
            // plane tends to -u_ss; the (s, phi) plane to -h_sss / h_s.
            let hs = h * m.gauge[i];
            let (p1, p2, q0, q1) = if i == 0 {
                (m.warp[1], m.warp[2], m.twist[0], m.twist[1])
            } else {
                (m.warp[count - 2], m.warp[count - 3], m.twist[count - 1], m.twist[count - 2])
            };
            let b6 = (p2 - 2.0 * p1) / (hs * hs * hs);
            let a = (8.0 * p1 - p2) / (6.0 * hs);
            let upp = 2.0 * (q1 - q0) / (hs * hs);
            (-b6 / a, -upp, -upp)
        };
        out.scalar[i] = 2.0 * (k_sp + k_st + k_pt);
        out.ricci[i] = vec![k_sp + k_st, k_sp + k_pt, k_st + k_pt];
        out.sectional[i] = vec![k_sp, k_st, k_pt];
        out.rm_norm[i] = out.sectional[i].iter().fold(0.0, |a: f64, &b| a.max(b.abs()));
    }
    Ok(out)
}

/// Area-decay flux of a fiber slice: the integral of `R - Ric(nu, nu)` over
/// the slice, `nu` the unit slice normal. Under the flow the slice area obeys
/// `dA/dt = -flux` (for a slice held at a critical point of the radius).
#[derive(Debug, Clone, Copy)]
pub struct SliceFlux {
    pub value: f64,
    /// Richardson half-grid error estimate (zero when the integrand is
    /// constant on the slice).
    pub error_est: f64,
}

/// Flux through the round fiber slice at node `i` of a profile metric. The
/// integrand is constant on the slice, so the only error is the one of the
/// pointwise curvature.
pub fn profile_slice_flux(m: &ProfileMetric, i: usize) -> Result<SliceFlux> {
    let field = profile_curvature(m)?;
    if i >= m.x.len() {
        return Err(HookError::Parameter(format!(
            "slice index {i} out of range (grid has {} nodes)",
            m.x.len()
        )));
    }
    let integrand = field.scalar[i] - field.ricci[i][0];
    Ok(SliceFlux {
        value: integrand * m.slice_area(i),
        error_est: 0.0,
    })
}

/// Flux through the S^2 base slice of a twisted product, with a Richardson
/// error estimate from a half-resolution evaluation. Equals
/// `8 pi - integral of |grad u|^2` up to discretization error.
pub fn twisted_slice_flux(m: &TwistedMetric) -> Result<SliceFlux> {
    let full = twisted_flux_once(m, 1)?;
    let half = twisted_flux_once(m, 2)?;
    Ok(SliceFlux {
        value: full,
        error_est: (full - half).abs() / 3.0,
    })
}

fn twisted_flux_once(m: &TwistedMetric, stride: usize) -> Result<f64> {
    let field = twisted_curvature(m)?;
    let h = m.spacing() * stride as f64;
    let idx: Vec<usize> = (0..m.x.len()).step_by(stride).collect();
    if *idx.last().unwrap() != m.x.len() - 1 {
        return Err(HookError::Resolution(
            "grid size must be divisible by the flux stride".into(),
        ));
    }
    let tau = 2.0 * std::f64::consts::PI;
    // integrand (R - Ric(theta, theta)) with area element 2 pi h(s) ds.
    let vals: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let integrand = field.scalar[i] - field.ricci[i][2];
            integrand * tau * m.warp[i] * m.gauge[i]
        })
        .collect();
    Ok(trapezoid(&vals, h))
}

/// Flux through the fiber slice of an embedded tube mesh nearest to spine
/// parameter `a`.
///
/// On a constant-radius stretch the tube metric is the warped product
/// `f_w^2 ds^2 + r^2 * round fiber` with `f_w = 1 - r kappa <omega, N>`, so
/// the integrand is `R - Ric(nu, nu) = n(n-1)/r^2 - (Delta f_w)/f_w` and the
/// quadrature uses the exact sphere measure (for `n = 2` the warp component
/// `u = <omega, N>` is an area-uniform coordinate, so the slice integral
/// reduces to a 1-D trapezoid in `u`). `error_est` is a Richardson estimate
/// from a half-resolution quadrature.
///
/// Slices on a sloped or twisted stretch are rejected: there the slice normal
/// is not the warped-product direction and the closed form does not apply.
pub fn mesh_slice_flux(mesh: &EmbeddedMesh, a: f64) -> Result<SliceFlux> {
    let (mut best, mut best_i) = (f64::INFINITY, 0usize);
    for (i, &si) in mesh.s.iter().enumerate() {
        if (si - a).abs() < best {
            best = (si - a).abs();
            best_i = i;
        }
    }
    // Slices are uniform in arclength, so the construction-parameter spacing
    // varies; tolerate up to the local gap around the nearest slice.
    let h = {
        let lo = if best_i > 0 { mesh.s[best_i] - mesh.s[best_i - 1] } else { 0.0 };
        let hi = if best_i + 1 < mesh.s.len() { mesh.s[best_i + 1] - mesh.s[best_i] } else { 0.0 };
        lo.max(hi)
    };
    if best > 0.5 * h + 1e-12 {
        return Err(HookError::Parameter(format!(
            "slice label {a} outside the meshed spine range"
        )));
    }
    let i = best_i;
    let r = mesh.radius[i];
    if !(r > 0.0) {
        return Err(HookError::Unavailable(
            "slice lies in a cap region (zero radius, no slice normal)".into(),
        ));
    }
    if mesh.radius_d1[i].abs() > 1e-8 * (1.0 + r) {
        return Err(HookError::Unavailable(format!(
            "slice at s = {:.6} sits on a sloped profile stretch; the flux \
             closed form needs a constant-radius tube",
            mesh.s[i]
        )));
    }
    if mesh.twist[i].abs() > 1e-12 {
        return Err(HookError::Unavailable(
            "slice carries a twist term; the round warped form does not apply".into(),
        ));
    }
    let kappa = mesh.spine[i].kappa;
    let quad = |steps: usize| -> f64 {
        if mesh.fiber.n == 2 {
            // integrand(u) = 2/r^2 - (2 kappa / r) u / (1 - r kappa u),
            // slice measure 2 pi r^2 du over u in [-1, 1].
            let vals: Vec<f64> = (0..=steps)
                .map(|j| {
                    let u = -1.0 + 2.0 * j as f64 / steps as f64;
                    2.0 / (r * r) - (2.0 * kappa / r) * u / (1.0 - r * kappa * u)
                })
                .collect();
            2.0 * std::f64::consts::PI * r * r * trapezoid(&vals, 2.0 / steps as f64)
        } else {
            // Circle fiber: integrand = K = -kappa cos(theta) / (r f_w),
            // measure r dtheta; periodic trapezoid.
            let dth = 2.0 * std::f64::consts::PI / steps as f64;
            (0..steps)
                .map(|j| {
                    let c = (j as f64 * dth).cos();
                    -kappa * c / (1.0 - r * kappa * c) * dth
                })
                .sum()
        }
    };
    let steps = 4 * mesh.fiber.theta.len().max(mesh.fiber.phi.len()).max(128);
    let full = quad(steps);
    let half = quad(steps / 2);
    Ok(SliceFlux {
        value: full,
        error_est: (full - half).abs() / 3.0,
    })
}

/// The twist-energy integral over the base sphere.
pub fn twist_energy(m: &TwistedMetric) -> Result<f64> {
    let h = m.spacing();
    let (u_s, _) = arclength_derivs(&m.twist, &m.gauge, h, Topology::TwoCaps, false);
    let tau = 2.0 * std::f64::consts::PI;
    let vals: Vec<f64> = (0..m.x.len())
        .map(|i| u_s[i] * u_s[i] * tau * m.warp[i] * m.gauge[i])
        .collect();
    Ok(trapezoid(&vals, h))
}

/// Pointwise positivity summary of a curvature field.
#[derive(Debug, Clone, Copy)]
pub struct PositivityReport {
    pub min_scalar: f64,
    pub min_sectional: f64,
    pub min_ricci: f64,
    pub negative_scalar_nodes: usize,
    pub scalar_positive: bool,
}

pub fn positivity_report(field: &CurvatureField) -> PositivityReport {
    let min_scalar = field.min_scalar();
    PositivityReport {
        min_scalar,
        min_sectional: field.min_sectional(),
        min_ricci: field
            .ricci
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min),
        negative_scalar_nodes: field.scalar.iter().filter(|&&r| r < 0.0).count(),
        scalar_positive: min_scalar > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hookgen::{build_twisted_neck, ProfileMetric, Topology, TwistShape};
    use approx::assert_relative_eq;

    #[test]
    fn round_sphere_curvature() {
        // S^3 of radius r: every sectional curvature 1/r^2, R = 6/r^2.
        let r = 0.8;
        let m = ProfileMetric::round_sphere(r, 2, 512).unwrap();
        let f = profile_curvature(&m).unwrap();
        let k = 1.0 / (r * r);
        for i in 0..m.x.len() {
            for &sec in &f.sectional[i] {
                assert_relative_eq!(sec, k, max_relative = 2e-3);
            }
            assert_relative_eq!(f.scalar[i], 6.0 * k, max_relative = 2e-3);
        }
    }

    #[test]
    fn round_circle_sphere_n1() {
        // Profile metric of a round S^2 (n = 1 fiber): K = 1/r^2, R = 2/r^2.
        let r = 1.3;
        let m = ProfileMetric::round_sphere(r, 1, 512).unwrap();
        let f = profile_curvature(&m).unwrap();
        for i in 0..m.x.len() {
            assert_relative_eq!(f.scalar[i], 2.0 / (r * r), max_relative = 2e-3);
        }
    }

    #[test]
    fn cylinder_curvature_and_flux() {
        // S^2 x interval neck of radius d0: K_mixed = 0, K_fiber = 1/d0^2,
        // R = 2/d0^2, flux = 8 pi independent of d0.
        for d0 in [0.2, 0.45] {
            let m = ProfileMetric::cylinder(d0, 3.0, 2, Topology::FixedEnds, 128).unwrap();
            let f = profile_curvature(&m).unwrap();
            let mid = 64;
            assert_relative_eq!(f.sectional[mid][0], 0.0, epsilon = 1e-10);
            assert_relative_eq!(f.sectional[mid][1], 1.0 / (d0 * d0), max_relative = 1e-10);
            let flux = profile_slice_flux(&m, mid).unwrap();
            assert_relative_eq!(flux.value, 8.0 * std::f64::consts::PI, max_relative = 1e-10);
        }
    }

    #[test]
    fn periodic_cylinder_is_flat_in_the_mixed_plane() {
        let m = ProfileMetric::cylinder(0.3, 2.0, 1, Topology::Periodic, 64).unwrap();
        let f = profile_curvature(&m).unwrap();
        for i in 0..m.x.len() {
            assert_relative_eq!(f.sectional[i][0], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn untwisted_neck_is_a_round_product() {
        let d0 = 0.6;
        let m = build_twisted_neck(d0, 0.0, TwistShape::Cosine, 1.0, 512).unwrap();
        let f = twisted_curvature(&m).unwrap();
        let k = 1.0 / (d0 * d0);
        for i in 0..m.x.len() {
            assert_relative_eq!(f.sectional[i][0], k, max_relative = 5e-3);
            assert_relative_eq!(f.sectional[i][1], 0.0, epsilon = 1e-8);
            assert_relative_eq!(f.sectional[i][2], 0.0, epsilon = 1e-8);
            assert_relative_eq!(f.scalar[i], 2.0 * k, max_relative = 5e-3);
        }
        let flux = twisted_slice_flux(&m).unwrap();
        assert_relative_eq!(flux.value, 8.0 * std::f64::consts::PI, max_relative = 1e-4);
    }

    #[test]
    fn cosine_twist_energy_matches_closed_form() {
        // u = A cos(rho / d0) on the round d0-sphere:
        // integral of |grad u|^2 = (8 pi / 3) A^2.
        let d0 = 0.5;
        for amp in [0.3, 1.0] {
            let m = build_twisted_neck(d0, amp, TwistShape::Cosine, 1.0, 1024).unwrap();
            let e = twist_energy(&m).unwrap();
            assert_relative_eq!(
                e,
                8.0 * std::f64::consts::PI / 3.0 * amp * amp,
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn twisted_flux_identity() {
        // flux = 8 pi - twist energy, by Gauss-Bonnet plus integration by
        // parts; checked here at the discrete level.
        let m = build_twisted_neck(0.7, 0.9, TwistShape::Cosine, 1.0, 1024).unwrap();
        let flux = twisted_slice_flux(&m).unwrap();
        let e = twist_energy(&m).unwrap();
        assert_relative_eq!(
            flux.value,
            8.0 * std::f64::consts::PI - e,
            max_relative = 1e-3
        );
        assert!(flux.error_est < 1e-2);
    }

    #[test]
    fn mesh_flux_product_and_bend_slices() {
        use crate::hookgen::{build_hook_mesh, HookSpec};
        let pi = std::f64::consts::PI;
        let spec = HookSpec::new(3.0, 0.1, 0.0, 0.2, 0.0, 2).unwrap();
        let mesh = build_hook_mesh(&spec, 256, 16, 24).unwrap();
        // Straight product stretch: exactly 8 pi (constant integrand).
        let straight = mesh_slice_flux(&mesh, 0.5).unwrap();
        assert_relative_eq!(straight.value, 8.0 * pi, max_relative = 1e-12);
        assert!(straight.error_est < 1e-10);
        // Bend apex (|kappa| = 1): 8 pi minus the closed-form warp deficit
        // 4 pi r kappa (log((1+a)/(1-a))/a^2 - 2/a), a = r kappa.
        let bend = mesh_slice_flux(&mesh, 2.5).unwrap();
        let (r, k) = (spec.d0, 1.0);
        let a = r * k;
        let deficit = 4.0 * pi * r * k * (((1.0 + a) / (1.0 - a)).ln() / (a * a) - 2.0 / a);
        assert_relative_eq!(bend.value, 8.0 * pi - deficit, max_relative = 1e-6);
        assert!(bend.value < straight.value);
    }

    #[test]
    fn mesh_flux_circle_fiber_matches_closed_form() {
        use crate::hookgen::{build_hook_mesh, HookSpec};
        let pi = std::f64::consts::PI;
        let spec = HookSpec::new(3.0, 0.1, 0.0, 0.2, 0.0, 1).unwrap();
        let mesh = build_hook_mesh(&spec, 256, 24, 0).unwrap();
        // Straight stretch of a flat tube: zero flux.
        let straight = mesh_slice_flux(&mesh, 0.5).unwrap();
        assert_relative_eq!(straight.value, 0.0, epsilon = 1e-12);
        // Bend: -kappa * (2 pi / a)(1/sqrt(1-a^2) - 1), a = r kappa.
        let bend = mesh_slice_flux(&mesh, 2.5).unwrap();
        let a = spec.d0;
        let expect = -(2.0 * pi / a) * (1.0 / (1.0 - a * a).sqrt() - 1.0) * 1.0;
        assert_relative_eq!(bend.value, expect, max_relative = 1e-10);
    }

    #[test]
    fn mesh_flux_rejects_sloped_and_twisted_slices() {
        use crate::hookgen::{build_hook_mesh, HookSpec};
        let spec = HookSpec::new(3.0, 0.1, 0.0, 0.2, 0.0, 2).unwrap();
        let mesh = build_hook_mesh(&spec, 256, 16, 24).unwrap();
        // Bump shoulder: sloped radius.
        assert!(mesh_slice_flux(&mesh, 1.25).is_err());
        // Out of range label.
        assert!(mesh_slice_flux(&mesh, 5.0).is_err());
        // Twisted stretch.
        let tw = HookSpec::new(3.0, 0.1, 0.0, 0.2, 0.5, 2).unwrap();
        let mesh_tw = build_hook_mesh(&tw, 256, 16, 24).unwrap();
        assert!(mesh_slice_flux(&mesh_tw, 2.5).is_err());
    }

    #[test]
    fn positivity_flags_sign() {
        let m = ProfileMetric::round_sphere(1.0, 2, 256).unwrap();
        let rep = positivity_report(&profile_curvature(&m).unwrap());
        assert!(rep.scalar_positive);
        assert_eq!(rep.negative_scalar_nodes, 0);
    }
}
