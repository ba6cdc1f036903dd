//! Minimal slices and closed geodesics: location, stability, area tracking
//! and the foliation-width surrogate.
//!
//! For the rotationally symmetric profile classes every critical point of
//! the radius profile psi is a totally geodesic slice; its Jacobi operator
//! on symmetric perturbations reduces to the scalar -Delta + n psi_ss/psi,
//! so the lowest eigenvalue is n psi_ss(s0)/psi(s0) and stability is the
//! sign of psi_ss at the critical point. The closed-form verdict is cross-
//! checked against a direct second difference of the discrete slice-area
//! function, which is an independent path to the same sign.
//!
//! The geodesic audit is a falsification harness, not a proof: it runs
//! discrete curve shortening from many seed circles on an n = 1 tube
//! surface and reports, per seed, whether the curve escaped, kept drifting,
//! or converged to a closed geodesic, together with the geodesic residual
//! and a second-variation stability index.

use crate::curvature::arclength_derivs;
use crate::error::{HookError, Result};
use crate::hookgen::{EmbeddedMesh, ProfileMetric, Topology};
use crate::num::{cubic_interp, linear_fit};
use crate::ricci::Trajectory;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Slice area convention: omega_n * psi^n with omega_1 = 2 pi (circle
/// circumference) and omega_2 = 4 pi (unit-sphere area).
pub fn slice_area(radius: f64, n: usize) -> f64 {
    let pi = std::f64::consts::PI;
    match n {
        1 => 2.0 * pi * radius,
        _ => 4.0 * pi * radius * radius,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Degenerate,
}

/// A critical point of the slice-area function.
#[derive(Debug, Clone, Copy)]
pub struct MinimalSlice {
    /// Arclength location of the critical point.
    pub s: f64,
    /// Nearest grid node.
    pub node: usize,
    /// Radius psi(s).
    pub radius: f64,
    /// Slice area (see [`slice_area`] for the convention).
    pub area: f64,
    pub verdict: StabilityVerdict,
    /// Lowest Jacobi eigenvalue estimate n psi_ss / psi.
    pub eigenvalue: f64,
}

/// Degeneracy tolerance on the Jacobi eigenvalue, at the curvature scale of
/// the slice: |eigenvalue| <= 1e-6 / psi^2 counts as degenerate.
fn eigen_tol(radius: f64) -> f64 {
    1e-6 / (radius * radius)
}

fn verdict_of(eigenvalue: f64, radius: f64) -> StabilityVerdict {
    let tol = eigen_tol(radius);
    if eigenvalue.abs() <= tol {
        StabilityVerdict::Degenerate
    } else if eigenvalue > 0.0 {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Unstable
    }
}

/// All interior critical points of the radius profile, located by sign
/// changes of psi_s between grid nodes and refined by bisection on the
/// interpolated derivative; each labeled with its stability verdict.
pub fn find_minimal_slices(m: &ProfileMetric) -> Result<Vec<MinimalSlice>> {
    m.validate()?;
    let count = m.radius.len();
    let h = m.spacing();
    let (psi_s, psi_ss) = arclength_derivs(&m.radius, &m.gauge, h, m.topology, true);
    let s = m.arclength();
    let interior = match m.topology {
        // Capped poles are not slices (the fiber degenerates there) and
        // their neighbors carry the pole stencil; start one node in.
        Topology::TwoCaps => 1..count - 2,
        Topology::FixedEnds => 0..count - 1,
        Topology::Periodic => 0..count - 1,
    };
    let mut out = Vec::new();
    for i in interior {
        let (a, b) = (psi_s[i], psi_s[i + 1]);
        if a == 0.0 && b == 0.0 {
            continue; // flat stretch (e.g. exact cylinder): no isolated root
        }
        let root_at_node = a == 0.0;
        if !(root_at_node || a * b < 0.0) {
            continue;
        }
        // Bisection on the cubic interpolant of psi_s in index space.
        let f = |t: f64| cubic_interp(&psi_s, 1.0, t);
        let mut lo = i as f64;
        let mut hi = (i + 1) as f64;
        let t_root = if root_at_node {
            lo
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let node = t_root.round() as usize;
        // Reject sub-grid interpolation wiggles: a resolved critical point
        // must show as a node-scale extremum of the raw radius at one of
        // the two bracketing nodes.
        let is_extremum = |j: usize| {
            j > 0
                && j + 1 < count
                && ((m.radius[j] <= m.radius[j - 1] && m.radius[j] <= m.radius[j + 1])
                    || (m.radius[j] >= m.radius[j - 1] && m.radius[j] >= m.radius[j + 1]))
        };
        if !is_extremum(t_root.floor() as usize)
            && !is_extremum((t_root.ceil() as usize).min(count - 1))
        {
            continue;
        }
        let radius = cubic_interp(&m.radius, 1.0, t_root);
        let d2 = cubic_interp(&psi_ss, 1.0, t_root);
        let eigenvalue = m.n as f64 * d2 / radius;
        let frac = t_root - t_root.floor();
        let s_root = s[t_root.floor() as usize]
            + frac * (s[(t_root.floor() as usize + 1).min(count - 1)] - s[t_root.floor() as usize]);
        out.push(MinimalSlice {
            s: s_root,
            node,
            radius,
            area: slice_area(radius, m.n),
            verdict: verdict_of(eigenvalue, radius),
            eigenvalue,
        });
    }
    Ok(out)
}

/// Stability of the slice at arclength `s0`, which must be a critical point
/// of psi within the root tolerance: returns the verdict and the lowest
/// Jacobi eigenvalue n psi_ss(s0) / psi(s0).
pub fn slice_stability(m: &ProfileMetric, s0: f64) -> Result<(StabilityVerdict, f64)> {
    let (t, psi_s, psi_ss) = locate(m, s0)?;
    let radius = cubic_interp(&m.radius, 1.0, t);
    let slope = cubic_interp(&psi_s, 1.0, t);
    // Root tolerance: |psi_s| small against the O(1) pole-compatible scale.
    if slope.abs() > 1e-4 {
        return Err(HookError::Parameter(format!(
            "s0 = {s0} is not a critical point of the radius (psi_s = {slope:.3e})"
        )));
    }
    let eigenvalue = m.n as f64 * cubic_interp(&psi_ss, 1.0, t) / radius;
    Ok((verdict_of(eigenvalue, radius), eigenvalue))
}

/// Independent second-variation estimate at a critical point: the second
/// difference of the discrete slice-area function along arclength, scaled
/// to the Jacobi eigenvalue convention (A''/(omega_n psi^n) equals
/// n psi_ss / psi at a critical point). Used as the brute-force cross-check
/// for [`slice_stability`].
pub fn slice_area_second_variation(m: &ProfileMetric, s0: f64) -> Result<f64> {
    let (t, _, _) = locate(m, s0)?;
    let i = (t.round() as usize).clamp(1, m.radius.len() - 2);
    let hs = m.spacing() * 0.5 * (m.gauge[i - 1] + m.gauge[i + 1]);
    let a = |j: usize| slice_area(m.radius[j], m.n);
    let app = (a(i + 1) - 2.0 * a(i) + a(i - 1)) / (hs * hs);
    Ok(app / slice_area(m.radius[i], m.n))
}

fn locate(m: &ProfileMetric, s0: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    m.validate()?;
    let s = m.arclength();
    let total = *s.last().unwrap();
    if !(0.0..=total).contains(&s0) {
        return Err(HookError::Parameter(format!(
            "s0 = {s0} outside the arclength range [0, {total}]"
        )));
    }
    let h = m.spacing();
    let (psi_s, psi_ss) = arclength_derivs(&m.radius, &m.gauge, h, m.topology, true);
    // Invert the monotone arclength map to fractional index.
    let mut i = 0;
    while i + 1 < s.len() && s[i + 1] < s0 {
        i += 1;
    }
    let t = if i + 1 < s.len() && s[i + 1] > s[i] {
        i as f64 + (s0 - s[i]) / (s[i + 1] - s[i])
    } else {
        i as f64
    };
    Ok((t, psi_s, psi_ss))
}

/// Linear area-decay fit for the tracked stable neck slice of a trajectory.
#[derive(Debug, Clone)]
pub struct AreaDecay {
    /// Estimated singular time used for the (T - t) axis.
    pub t_hat: f64,
    /// Fitted d area / d (T - t) over the final decade.
    pub slope: f64,
    /// Smallest and largest value of area / (T - t) over the final decade.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Samples in the final decade.
    pub samples: usize,
}

/// Tracks the least-area stable slice (the tightest neck) along a
/// trajectory and fits its area against (T_hat - t) on the final decade of
/// area decay. `n` is the fiber dimension of the evolved metric.
pub fn area_decay_tracker(traj: &Trajectory, n: usize) -> Result<AreaDecay> {
    let areas: Vec<f64> = traj
        .neck_radius
        .iter()
        .map(|&r| if r.is_finite() { slice_area(r, n) } else { f64::INFINITY })
        .collect();
    let finite: Vec<usize> = (0..areas.len()).filter(|&i| areas[i].is_finite()).collect();
    if finite.len() < 5 {
        return Err(HookError::Unavailable(
            "trajectory has no persistent stable slice to track".into(),
        ));
    }
    let t_hat = match traj.singular_time_estimate() {
        Ok(t) => t,
        // Fall back to the root of the linear area fit (exact for product
        // necks, where the area is exactly linear in t).
        Err(_) => {
            let xs: Vec<f64> = finite.iter().map(|&i| traj.t[i]).collect();
            let ys: Vec<f64> = finite.iter().map(|&i| areas[i]).collect();
            let (slope, intercept, _) = linear_fit(&xs, &ys);
            if !(slope < 0.0) {
                return Err(HookError::Unavailable(
                    "tracked slice area is not decaying".into(),
                ));
            }
            -intercept / slope
        }
    };
    let a_final = areas[*finite.last().unwrap()];
    let cut = a_final * 10.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let (mut ratio_min, mut ratio_max) = (f64::INFINITY, 0.0f64);
    for &i in &finite {
        if areas[i] <= cut && t_hat > traj.t[i] {
            let gap = t_hat - traj.t[i];
            xs.push(gap);
            ys.push(areas[i]);
            let ratio = areas[i] / gap;
            ratio_min = ratio_min.min(ratio);
            ratio_max = ratio_max.max(ratio);
        }
    }
    if xs.len() < 3 {
        return Err(HookError::Unavailable(
            "fewer than 3 samples in the final area decade".into(),
        ));
    }
    let (slope, _, _) = linear_fit(&xs, &ys);
    Ok(AreaDecay {
        t_hat,
        slope,
        ratio_min,
        ratio_max,
        samples: xs.len(),
    })
}

/// Foliation-width surrogate over a parameter region: the maximum slice
/// area over the foliation slices in the region, compared against the area
/// of the designated boundary slice. This replaces the min-max width over
/// all sweepouts with its foliation upper bound.
#[derive(Debug, Clone, Copy)]
pub struct WidthSurrogate {
    pub s_lo: f64,
    pub s_hi: f64,
    /// max over foliation slices of the slice area (includes the boundary
    /// slice, so value >= boundary_area always).
    pub value: f64,
    /// Area of the designated boundary slice.
    pub boundary_area: f64,
    /// value > boundary_area + margin.
    pub strict: bool,
}

/// Computes the width surrogate on the arclength interval `[s_lo, s_hi]`;
/// the boundary slice sits at `s_hi` when `boundary_at_hi`, else at `s_lo`.
pub fn width_surrogate(
    m: &ProfileMetric,
    s_lo: f64,
    s_hi: f64,
    boundary_at_hi: bool,
    margin: f64,
) -> Result<WidthSurrogate> {
    m.validate()?;
    if !(s_hi > s_lo) {
        return Err(HookError::Parameter(format!(
            "empty width region [{s_lo}, {s_hi}]"
        )));
    }
    let s = m.arclength();
    let radius_at = |s0: f64| -> Result<f64> {
        let (t, _, _) = locate(m, s0)?;
        Ok(cubic_interp(&m.radius, 1.0, t))
    };
    let boundary_s = if boundary_at_hi { s_hi } else { s_lo };
    let boundary_area = slice_area(radius_at(boundary_s)?, m.n);
    let mut value = slice_area(radius_at(s_lo)?, m.n).max(slice_area(radius_at(s_hi)?, m.n));
    for i in 0..s.len() {
        if s[i] >= s_lo && s[i] <= s_hi {
            value = value.max(slice_area(m.radius[i], m.n));
        }
    }
    Ok(WidthSurrogate {
        s_lo,
        s_hi,
        value,
        boundary_area,
        strict: value > boundary_area + margin,
    })
}

/// Outcome of one curve-shortening seed.
#[derive(Debug, Clone)]
pub enum AuditOutcome {
    /// The curve left the parameter domain of the tube.
    Escaped,
    /// The sweep cap was reached while the curve was still moving.
    Drifting { residual: f64 },
    /// The curve settled; residual is the remaining discrete
    /// Euler-Lagrange defect, index the lowest second-variation eigenvalue
    /// over the trial basis (negative = unstable geodesic).
    Converged { residual: f64, index: f64 },
}

/// One audited seed curve on the tube surface, parameterized as s(theta)
/// over the uniform fiber angles; the s coordinate is spine arclength
/// (the mesh's `arc` channel).
#[derive(Debug, Clone)]
pub struct AuditedCurve {
    pub seed_index: usize,
    /// s-value per theta node (final state).
    pub s_values: Vec<f64>,
    pub mean_s: f64,
    pub length: f64,
    pub outcome: AuditOutcome,
}

#[derive(Debug, Clone)]
pub struct GeodesicAuditReport {
    pub curves: Vec<AuditedCurve>,
    /// Converged geodesics with nonnegative stability index.
    pub stable_count: usize,
    pub escaped_count: usize,
    pub unstable_count: usize,
    pub drifting_count: usize,
}

/// Intrinsic metric of an n = 1 tube surface in the (arclength, theta)
/// chart (the spine coordinate is the mesh's uniform `arc` channel, so the
/// unit-speed tube formula applies exactly):
/// E = (1 - r kappa cos theta)^2 + r'^2 along the spine and
/// G = (r (1 + twist))^2 along the fiber, with no cross term. Channels are
/// interpolated linearly between slices.
struct TubeChart<'a> {
    mesh: &'a EmbeddedMesh,
    s0: f64,
    ds: f64,
}

impl<'a> TubeChart<'a> {
    fn new(mesh: &'a EmbeddedMesh) -> Result<Self> {
        if mesh.fiber.n != 1 {
            return Err(HookError::Parameter(
                "the geodesic audit needs a circle-fiber (n = 1) tube".into(),
            ));
        }
        Ok(TubeChart {
            mesh,
            s0: mesh.arc[0],
            ds: mesh.arc[1] - mesh.arc[0],
        })
    }

    fn channels(&self, s: f64) -> (f64, f64, f64, f64) {
        let n = self.mesh.s.len();
        let t = ((s - self.s0) / self.ds).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        let lerp = |v: &[f64]| v[i] * (1.0 - f) + v[i + 1] * f;
        let k = self.mesh.spine[i].kappa * (1.0 - f) + self.mesh.spine[i + 1].kappa * f;
        (
            lerp(&self.mesh.radius),
            lerp(&self.mesh.radius_d1),
            k,
            lerp(&self.mesh.twist),
        )
    }

    fn metric(&self, s: f64, theta: f64) -> (f64, f64) {
        let (r, dr, k, tw) = self.channels(s);
        let a = 1.0 - r * k * theta.cos();
        let e = a * a + dr * dr;
        let g = r * (1.0 + tw);
        (e, g * g)
    }

    /// Gauss curvature by the Brioschi formula for an orthogonal metric,
    /// with nested central differences at the chart scale.
    fn gauss(&self, s: f64, theta: f64) -> f64 {
        let hs = self.ds;
        let ht = 1e-3;
        let p_s = |s: f64, th: f64| {
            let (e, g) = self.metric(s, th);
            let gp = (self.metric(s + hs, th).1 - self.metric(s - hs, th).1) / (2.0 * hs);
            gp / (e * g).sqrt()
        };
        let p_t = |s: f64, th: f64| {
            let (e, g) = self.metric(s, th);
            let ep = (self.metric(s, th + ht).0 - self.metric(s, th - ht).0) / (2.0 * ht);
            ep / (e * g).sqrt()
        };
        let (e, g) = self.metric(s, theta);
        let div = (p_s(s + hs, theta) - p_s(s - hs, theta)) / (2.0 * hs)
            + (p_t(s, theta + ht) - p_t(s, theta - ht)) / (2.0 * ht);
        -div / (2.0 * (e * g).sqrt())
    }
}

fn curve_length(chart: &TubeChart, s: &[f64], theta: &[f64]) -> f64 {
    let m = s.len();
    let mut len = 0.0;
    for j in 0..m {
        let jn = (j + 1) % m;
        let dth = theta[1] - theta[0];
        let smid = 0.5 * (s[j] + s[jn]);
        let tmid = theta[j] + 0.5 * dth;
        let (e, g) = chart.metric(smid, tmid);
        let dsj = s[jn] - s[j];
        len += (e * dsj * dsj + g * dth * dth).sqrt();
    }
    len
}

/// Local length contribution of node j (its two adjacent segments) as a
/// function of a trial value for s[j].
fn local_length(chart: &TubeChart, s: &[f64], theta: &[f64], j: usize, sj: f64) -> f64 {
    let m = s.len();
    let dth = theta[1] - theta[0];
    let jp = (j + m - 1) % m;
    let jn = (j + 1) % m;
    let mut len = 0.0;
    for (sa, sb, ta) in [(s[jp], sj, theta[jp]), (sj, s[jn], theta[j])] {
        let (e, g) = chart.metric(0.5 * (sa + sb), ta + 0.5 * dth);
        let d = sb - sa;
        len += (e * d * d + g * dth * dth).sqrt();
    }
    len
}

/// Runs Birkhoff-style curve shortening from `seeds` seed circles on an
/// n = 1 tube surface and reports each outcome. Seeds are fiber circles at
/// evenly sampled spine positions plus seeded random cosine perturbations;
/// the run is deterministic for a fixed `rng_seed`.
pub fn geodesic_audit(
    mesh: &EmbeddedMesh,
    seeds: usize,
    rng_seed: u64,
) -> Result<GeodesicAuditReport> {
    let chart = TubeChart::new(mesh)?;
    if seeds == 0 {
        return Err(HookError::Parameter("need at least one seed".into()));
    }
    let m_nodes = 64usize;
    let tau = 2.0 * std::f64::consts::PI;
    let theta: Vec<f64> = (0..m_nodes).map(|j| j as f64 * tau / m_nodes as f64).collect();
    let s_min = mesh.arc[0];
    let s_max = *mesh.arc.last().unwrap();
    let span = s_max - s_min;
    let margin = chart.ds;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut report = GeodesicAuditReport {
        curves: Vec::with_capacity(seeds),
        stable_count: 0,
        escaped_count: 0,
        unstable_count: 0,
        drifting_count: 0,
    };
    for seed_index in 0..seeds {
        // Even coverage of the spine interior, with a seeded perturbation.
        let frac = (seed_index as f64 + 0.5) / seeds as f64;
        let a = s_min + span * (0.1 + 0.8 * frac);
        let amp = rng.gen_range(0.0..0.25 * span.min(1.0));
        let mode = rng.gen_range(1..=3) as f64;
        let phase = rng.gen_range(0.0..tau);
        let mut s: Vec<f64> = theta
            .iter()
            .map(|&th| a + amp * (mode * th + phase).cos())
            .collect();
        let outcome = shorten(&chart, &mut s, &theta, s_min + margin, s_max - margin);
        match &outcome {
            AuditOutcome::Escaped => report.escaped_count += 1,
            AuditOutcome::Drifting { .. } => report.drifting_count += 1,
            AuditOutcome::Converged { index, .. } => {
                if *index >= 0.0 {
                    report.stable_count += 1;
                } else {
                    report.unstable_count += 1;
                }
            }
        }
        let mean_s = s.iter().sum::<f64>() / s.len() as f64;
        report.curves.push(AuditedCurve {
            seed_index,
            length: curve_length(&chart, &s, &theta),
            s_values: s,
            mean_s,
            outcome,
        });
    }
    Ok(report)
}

fn shorten(
    chart: &TubeChart,
    s: &mut [f64],
    theta: &[f64],
    lo: f64,
    hi: f64,
) -> AuditOutcome {
    let m = s.len();
    let delta = 0.25 * chart.ds;
    let move_tol = 1e-12 * (hi - lo);
    let max_sweeps = 4000;
    for _ in 0..max_sweeps {
        let mut max_move = 0.0f64;
        for j in 0..m {
            let f0 = local_length(chart, s, theta, j, s[j]);
            let fp = local_length(chart, s, theta, j, s[j] + delta);
            let fm = local_length(chart, s, theta, j, s[j] - delta);
            let denom = fp - 2.0 * f0 + fm;
            let step = if denom > 1e-300 {
                (-0.5 * delta * (fp - fm) / denom).clamp(-delta, delta)
            } else {
                // Locally concave: move downhill a full trial step.
                if fp < fm {
                    delta
                } else {
                    -delta
                }
            };
            s[j] += step;
            max_move = max_move.max(step.abs());
            if s[j] < lo || s[j] > hi {
                return AuditOutcome::Escaped;
            }
        }
        // Point relaxation is stiff against the soft whole-curve
        // translation mode; damp it with a global Newton step on the
        // constant shift.
        let shift = |c: f64| {
            let trial: Vec<f64> = s.iter().map(|&v| v + c).collect();
            curve_length(chart, &trial, theta)
        };
        let f0 = shift(0.0);
        let fp = shift(delta);
        let fm = shift(-delta);
        let denom = fp - 2.0 * f0 + fm;
        let step = if denom > 1e-300 {
            (-0.5 * delta * (fp - fm) / denom).clamp(-delta, delta)
        } else if fp < fm {
            delta
        } else {
            -delta
        };
        for v in s.iter_mut() {
            *v += step;
            if *v < lo || *v > hi {
                return AuditOutcome::Escaped;
            }
        }
        max_move = max_move.max(step.abs());
        if max_move < move_tol {
            let residual = residual(chart, s, theta, delta);
            let index = stability_index(chart, s, theta);
            return AuditOutcome::Converged { residual, index };
        }
    }
    AuditOutcome::Drifting {
        residual: residual(chart, s, theta, delta),
    }
}

/// Largest discrete Euler-Lagrange defect |d length / d s_j|.
fn residual(chart: &TubeChart, s: &[f64], theta: &[f64], delta: f64) -> f64 {
    let d = 0.1 * delta;
    (0..s.len())
        .map(|j| {
            let fp = local_length(chart, s, theta, j, s[j] + d);
            let fm = local_length(chart, s, theta, j, s[j] - d);
            ((fp - fm) / (2.0 * d)).abs()
        })
        .fold(0.0, f64::max)
}

/// Lowest eigenvalue of the second variation of length for normal
/// perturbations phi along the curve: the quadratic form
/// integral(|phi'|^2 - K phi^2) d tau over a 9-function Fourier trial
/// basis, solved as a small generalized symmetric eigenproblem.
fn stability_index(chart: &TubeChart, s: &[f64], theta: &[f64]) -> f64 {
    let m = s.len();
    let dth = theta[1] - theta[0];
    // Segment arclengths and midpoint Gauss curvature.
    let mut dtau = vec![0.0; m];
    let mut kmid = vec![0.0; m];
    for j in 0..m {
        let jn = (j + 1) % m;
        let smid = 0.5 * (s[j] + s[jn]);
        let tmid = theta[j] + 0.5 * dth;
        let (e, g) = chart.metric(smid, tmid);
        let d = s[jn] - s[j];
        dtau[j] = (e * d * d + g * dth * dth).sqrt();
        kmid[j] = chart.gauss(smid, tmid);
    }
    let total: f64 = dtau.iter().sum();
    // Normalized phase per node.
    let mut phase = vec![0.0; m + 1];
    for j in 0..m {
        phase[j + 1] = phase[j] + dtau[j] / total;
    }
    let tau2 = 2.0 * std::f64::consts::PI;
    let n_basis = 9;
    let basis = |a: usize, p: f64| -> f64 {
        if a == 0 {
            1.0
        } else {
            let k = a.div_ceil(2) as f64;
            if a % 2 == 1 {
                (k * tau2 * p).cos()
            } else {
                (k * tau2 * p).sin()
            }
        }
    };
    let mut form = nalgebra::DMatrix::<f64>::zeros(n_basis, n_basis);
    let mut mass = nalgebra::DMatrix::<f64>::zeros(n_basis, n_basis);
    for j in 0..m {
        for a in 0..n_basis {
            let ba0 = basis(a, phase[j]);
            let ba1 = basis(a, phase[j + 1]);
            let bam = 0.5 * (ba0 + ba1);
            let bad = (ba1 - ba0) / dtau[j];
            for b in a..n_basis {
                let bb0 = basis(b, phase[j]);
                let bb1 = basis(b, phase[j + 1]);
                let bbm = 0.5 * (bb0 + bb1);
                let bbd = (bb1 - bb0) / dtau[j];
                let q = (bad * bbd - kmid[j] * bam * bbm) * dtau[j];
                let mm = bam * bbm * dtau[j];
                form[(a, b)] += q;
                form[(b, a)] = form[(a, b)];
                mass[(a, b)] += mm;
                mass[(b, a)] = mass[(a, b)];
            }
        }
    }
    // Generalized symmetric eigenproblem via Cholesky reduction.
    let chol = match nalgebra::Cholesky::new(mass) {
        Some(c) => c,
        None => return f64::NAN,
    };
    let l = chol.l();
    let y = l.clone().solve_lower_triangular(&form).unwrap();
    let c = l.solve_lower_triangular(&y.transpose()).unwrap();
    let sym = 0.5 * (&c + c.transpose());
    let eig = nalgebra::SymmetricEigen::new(sym);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hookgen::{build_dumbbell_profile, build_straight_tube_mesh};
    use crate::ricci::{run_profile_flow, FlowConfig};
    use approx::assert_relative_eq;

    #[test]
    fn round_sphere_has_one_unstable_equator() {
        let m = ProfileMetric::round_sphere(0.8, 2, 128).unwrap();
        let slices = find_minimal_slices(&m).unwrap();
        assert_eq!(slices.len(), 1);
        let eq = &slices[0];
        assert_eq!(eq.verdict, StabilityVerdict::Unstable);
        // Equator of radius r: eigenvalue 2 psi_ss / psi = -2 / r^2.
        assert_relative_eq!(eq.eigenvalue, -2.0 / (0.8f64 * 0.8), max_relative = 1e-2);
        assert_relative_eq!(eq.radius, 0.8, max_relative = 1e-3);
        assert_relative_eq!(eq.area, slice_area(0.8, 2), max_relative = 2e-3);
    }

    #[test]
    fn dumbbell_has_two_maxima_and_a_stable_neck() {
        let m = build_dumbbell_profile((1.0, 1.0), 0.2, 2.0, 512).unwrap();
        let slices = find_minimal_slices(&m).unwrap();
        assert_eq!(slices.len(), 3, "slices: {slices:?}");
        assert_eq!(slices[0].verdict, StabilityVerdict::Unstable);
        assert_eq!(slices[1].verdict, StabilityVerdict::Stable);
        assert_eq!(slices[2].verdict, StabilityVerdict::Unstable);
        assert_relative_eq!(slices[1].radius, 0.2, max_relative = 1e-2);
    }

    #[test]
    fn monotone_profile_has_no_slices() {
        let nodes = 128;
        let m = ProfileMetric {
            x: (0..=nodes).map(|i| i as f64 / nodes as f64).collect(),
            gauge: vec![2.0; nodes + 1],
            radius: (0..=nodes)
                .map(|i| 0.3 + 0.2 * i as f64 / nodes as f64)
                .collect(),
            n: 2,
            topology: Topology::FixedEnds,
        };
        assert!(find_minimal_slices(&m).unwrap().is_empty());
    }

    #[test]
    fn stability_agrees_with_discrete_second_variation() {
        let m = build_dumbbell_profile((1.0, 0.9), 0.25, 1.8, 512).unwrap();
        for slice in find_minimal_slices(&m).unwrap() {
            let (verdict, eig) = slice_stability(&m, slice.s).unwrap();
            assert_eq!(verdict, slice.verdict);
            let brute = slice_area_second_variation(&m, slice.s).unwrap();
            assert_eq!(
                brute > 0.0,
                eig > 0.0,
                "sign mismatch at s = {}: brute {brute}, jacobi {eig}",
                slice.s
            );
            assert_relative_eq!(brute, eig, max_relative = 5e-2);
        }
    }

    #[test]
    fn stability_rejects_non_critical_point() {
        let m = ProfileMetric::round_sphere(1.0, 2, 128).unwrap();
        // Quarter arc: psi_s is near 0.7 there.
        assert!(slice_stability(&m, 0.25 * m.length()).is_err());
    }

    #[test]
    fn cylinder_area_decay_has_slope_8pi() {
        let d0 = 0.5;
        let m = ProfileMetric::cylinder(d0, 2.0, 2, Topology::Periodic, 64).unwrap();
        let config = FlowConfig {
            t_max: 0.45 * d0 * d0,
            record_every: 20,
            ..FlowConfig::default()
        };
        let (traj, _) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        let decay = area_decay_tracker(&traj, 2).unwrap();
        let pi8 = 8.0 * std::f64::consts::PI;
        assert_relative_eq!(decay.slope, pi8, max_relative = 5e-3);
        assert_relative_eq!(decay.ratio_min, pi8, max_relative = 5e-3);
        assert_relative_eq!(decay.ratio_max, pi8, max_relative = 5e-3);
        assert_relative_eq!(decay.t_hat, d0 * d0 / 2.0, max_relative = 5e-3);
    }

    #[test]
    fn sphere_trajectory_has_no_stable_slice_to_track() {
        let m = ProfileMetric::round_sphere(0.6, 2, 96).unwrap();
        let config = FlowConfig {
            rm_stop: 1e3,
            ..FlowConfig::default()
        };
        let (traj, _) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        assert!(area_decay_tracker(&traj, 2).is_err());
    }

    #[test]
    fn width_flag_follows_interior_bump() {
        let nodes = 256;
        let bumped = |has_bump: bool| ProfileMetric {
            x: (0..=nodes).map(|i| i as f64 / nodes as f64).collect(),
            gauge: vec![2.0; nodes + 1],
            radius: (0..=nodes)
                .map(|i| {
                    let x = i as f64 / nodes as f64;
                    let bump = if has_bump {
                        0.2 * (-((x - 0.5) / 0.1).powi(2)).exp()
                    } else {
                        0.0
                    };
                    0.3 + 0.1 * x + bump
                })
                .collect(),
            n: 2,
            topology: Topology::FixedEnds,
        };
        // Monotone profile, boundary at the max end: flag false.
        let w = width_surrogate(&bumped(false), 0.2, 1.8, true, 1e-9).unwrap();
        assert!(!w.strict);
        assert!(w.value >= w.boundary_area);
        assert_relative_eq!(w.value, w.boundary_area, max_relative = 1e-6);
        // Interior bump above the boundary level: flag true.
        let w = width_surrogate(&bumped(true), 0.2, 1.8, true, 1e-9).unwrap();
        assert!(w.strict);
    }

    #[test]
    fn width_is_monotone_under_profile_domination() {
        let nodes = 128;
        let make = |scale: f64| ProfileMetric {
            x: (0..=nodes).map(|i| i as f64 / nodes as f64).collect(),
            gauge: vec![1.5; nodes + 1],
            radius: (0..=nodes)
                .map(|i| {
                    let x = i as f64 / nodes as f64;
                    scale * (0.3 + 0.1 * (3.0 * x).sin().abs())
                })
                .collect(),
            n: 2,
            topology: Topology::FixedEnds,
        };
        let w1 = width_surrogate(&make(1.0), 0.1, 1.3, false, 0.0).unwrap();
        let w2 = width_surrogate(&make(1.2), 0.1, 1.3, false, 0.0).unwrap();
        assert!(w1.value <= w2.value);
    }

    #[test]
    fn waist_circle_is_a_stable_geodesic() {
        // Straight tube with a waist at s = 1: the fiber circle there is a
        // geodesic (Clairaut), and K < 0 near the waist makes it stable.
        let rf = |s: f64| (0.3 + 0.1 * (s - 1.0) * (s - 1.0), 0.2 * (s - 1.0));
        let mesh = build_straight_tube_mesh(rf, 2.0, 1, 128, 16, 0).unwrap();
        let report = geodesic_audit(&mesh, 8, 7).unwrap();
        assert!(report.stable_count > 0, "report: {:?}", summarize(&report));
        // Every converged curve should sit at the waist.
        for c in &report.curves {
            if let AuditOutcome::Converged { residual, index } = c.outcome {
                assert!(residual < 1e-6, "residual {residual}");
                assert!(index >= 0.0);
                assert_relative_eq!(c.mean_s, 1.0, epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn concave_profile_gives_no_converged_geodesic() {
        // Strictly concave radius: fiber circles drift toward the ends and
        // escape; nothing converges.
        let rf = |s: f64| (0.5 - 0.05 * (s - 1.0) * (s - 1.0), -0.1 * (s - 1.0));
        let mesh = build_straight_tube_mesh(rf, 2.0, 1, 128, 16, 0).unwrap();
        let report = geodesic_audit(&mesh, 8, 11).unwrap();
        assert_eq!(report.stable_count, 0, "{:?}", summarize(&report));
        assert!(report.escaped_count > 0);
    }

    #[test]
    fn audit_is_deterministic_under_fixed_seed() {
        let rf = |s: f64| (0.3 + 0.1 * (s - 1.0) * (s - 1.0), 0.2 * (s - 1.0));
        let mesh = build_straight_tube_mesh(rf, 2.0, 1, 96, 16, 0).unwrap();
        let a = geodesic_audit(&mesh, 6, 42).unwrap();
        let b = geodesic_audit(&mesh, 6, 42).unwrap();
        for (ca, cb) in a.curves.iter().zip(&b.curves) {
            assert_eq!(ca.s_values, cb.s_values);
            assert_eq!(ca.length, cb.length);
        }
    }

    fn summarize(r: &GeodesicAuditReport) -> (usize, usize, usize, usize) {
        (
            r.stable_count,
            r.unstable_count,
            r.escaped_count,
            r.drifting_count,
        )
    }
}
