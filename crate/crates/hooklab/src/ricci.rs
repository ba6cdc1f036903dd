//! Ricci flow solvers for the two symmetric metric classes.
//!
//! Both reductions evolve a small set of radial channels with explicit
//! two-stage (Heun) stepping:
//!
//! profile metrics `phi_g^2 dx^2 + psi^2 * round S^n`:
//!   d psi / dt   = psi_ss - (n - 1)(1 - psi_s^2) / psi
//!   d phi_g / dt = n phi_g psi_ss / psi
//!
//! twisted products `ds^2 + h^2 dphi^2 + e^{2u} dtheta^2`:
//!   d h / dt     = h_ss + h_s u_s
//!   d u / dt     = u_ss + (h_s / h) u_s + u_s^2
//!   d phi_k / dt = phi_k (h_ss / h + u_ss + u_s^2)
//!
//! Integrating the pointwise gauge equation is numerically unstable near
//! capped poles (the 1/psi feedback between gauge and radius grows grid
//! noise, no matter how the stretch rate is estimated), so the two capped
//! classes are stepped in a gauge fixed against a frozen background metric
//! instead (see [`step_profile_deturck`] and [`step_twisted_flow`]): the
//! modified flow is strictly parabolic in every channel and differs from
//! the plain flow by a time-dependent reparameterization only, which leaves
//! all recorded diagnostics unchanged. Periodic and fixed-end profiles have
//! no poles and use the uniform-arclength gauge: each node sits at a fixed
//! arclength fraction sigma, the single scalar L(t) (total length) replaces
//! the gauge channel, and the radial channels gain the reparameterization
//! advection term `(sigma dL/dt - I(s)) f_s` with `I(s)` the cumulative
//! integral of the gauge stretch rate n psi_ss / psi.
//!
//! The time step obeys both the curvature scale and the grid diffusion
//! limit: dt = cfl * min(1 / max|Rm|, h^2 / 4).

use crate::curvature::{
    arclength_derivs, profile_curvature, twisted_curvature, CurvatureField,
};
use crate::error::{HookError, Result};
use crate::hookgen::{ProfileMetric, Topology, TwistedMetric};
use crate::num::{cubic_interp, linear_fit};

/// Parameters of a flow run.
#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    /// Safety factor on the stability-limited step.
    pub cfl: f64,
    /// Hard time horizon; `run` stops there with `StopReason::TimeLimit`.
    pub t_max: f64,
    pub max_steps: usize,
    /// Stop once max |Rm| exceeds this (curvature blow-up).
    pub rm_stop: f64,
    /// Stop once the smallest interior radius falls below this fraction of
    /// the smallest initial interior maximum ("bulb") radius.
    pub pinch_floor_frac: f64,
    /// Record one trajectory sample every this many steps.
    pub record_every: usize,
    /// Regrid to uniform arclength when max/min arclength spacing exceeds
    /// this ratio.
    pub regrid_distortion: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            cfl: 0.1,
            t_max: f64::INFINITY,
            max_steps: 2_000_000,
            rm_stop: 1e6,
            pinch_floor_frac: 1e-3,
            record_every: 50,
            regrid_distortion: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    CurvatureBlowup,
    PinchFloor,
    /// The whole metric collapsed (largest radius under the pinch floor).
    Extinct,
    TimeLimit,
    StepLimit,
}

/// Scalar time series recorded along a flow run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub dt: Vec<f64>,
    pub max_rm: Vec<f64>,
    /// Smallest interior radius (psi or h).
    pub min_radius: Vec<f64>,
    /// Radius of the tightest neck (smallest interior local minimum);
    /// infinity when the profile has no neck.
    pub neck_radius: Vec<f64>,
    /// Largest radius.
    pub max_radius: Vec<f64>,
    pub min_scalar: Vec<f64>,
    /// Tracked slice area: the smallest interior fiber slice for profile
    /// metrics, the whole base sphere for twisted products.
    pub area: Vec<f64>,
    pub total_length: Vec<f64>,
    pub stop: StopReason,
    /// Number of regrids performed.
    pub regrids: usize,
    /// Nodes violating the pinching monitors at any record time.
    pub pinching_violations: usize,
}

impl Trajectory {
    fn new() -> Self {
        Trajectory {
            t: Vec::new(),
            dt: Vec::new(),
            max_rm: Vec::new(),
            min_radius: Vec::new(),
            neck_radius: Vec::new(),
            max_radius: Vec::new(),
            min_scalar: Vec::new(),
            area: Vec::new(),
            total_length: Vec::new(),
            stop: StopReason::StepLimit,
            regrids: 0,
            pinching_violations: 0,
        }
    }

    /// Singular-time estimate: linear fit of 1 / max|Rm| against t over the
    /// final decade of curvature growth, extrapolated to zero.
    pub fn singular_time_estimate(&self) -> Result<f64> {
        let rm_final = *self.max_rm.last().ok_or_else(|| {
            HookError::Unavailable("empty trajectory".into())
        })?;
        let cut = rm_final / 10.0;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (i, &rm) in self.max_rm.iter().enumerate() {
            if rm >= cut {
                xs.push(self.t[i]);
                ys.push(1.0 / rm);
            }
        }
        if xs.len() < 5 {
            return Err(HookError::Unavailable(
                "fewer than 5 samples in the final curvature decade".into(),
            ));
        }
        let (slope, intercept, _) = linear_fit(&xs, &ys);
        if !(slope < 0.0) {
            return Err(HookError::Unavailable(
                "curvature is not blowing up; no singular time to fit".into(),
            ));
        }
        Ok(-intercept / slope)
    }

    /// Extinction-time estimate: linear fit of the tracked area against t
    /// over its final decade, extrapolated to zero.
    pub fn extinction_estimate(&self) -> Result<f64> {
        let a_final = *self.area.last().ok_or_else(|| {
            HookError::Unavailable("empty trajectory".into())
        })?;
        let a0 = self.area[0];
        let cut = (a_final * 10.0).min(a0);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (i, &a) in self.area.iter().enumerate() {
            if a <= cut {
                xs.push(self.t[i]);
                ys.push(a);
            }
        }
        if xs.len() < 5 {
            return Err(HookError::Unavailable(
                "fewer than 5 samples in the final area decade".into(),
            ));
        }
        let (slope, intercept, _) = linear_fit(&xs, &ys);
        if !(slope < 0.0) {
            return Err(HookError::Unavailable(
                "tracked area is not decaying; no extinction time to fit".into(),
            ));
        }
        Ok(-intercept / slope)
    }
}

/// One explicit Heun step of the profile flow in the uniform-arclength
/// gauge; returns the step actually taken. The gauge must be uniform (use
/// [`regrid_profile`] first if it is not).
///
/// Sphere fibers are advanced in the squared radius z = psi^2, which obeys
/// the linear equation z_t = z_ss - 2 (plus the gauge advection); the raw
/// psi equation is numerically unstable near capped poles. Circle fibers
/// evolve psi directly (pure heat).
pub fn step_profile_flow(m: &mut ProfileMetric, cfl: f64, max_rm: f64) -> Result<f64> {
    if m.topology == Topology::TwoCaps {
        return step_profile_deturck(m, cfl, max_rm);
    }
    require_uniform_gauge(&m.gauge)?;
    let dt = stable_dt(cfl, max_rm, m.spacing(), &m.gauge);
    let squared = m.n == 2;
    let pack = |m: &ProfileMetric| -> Vec<f64> {
        if squared {
            m.radius.iter().map(|&r| r * r).collect()
        } else {
            m.radius.clone()
        }
    };
    let unpack = |z: &[f64], m: &mut ProfileMetric| {
        for (r, &v) in m.radius.iter_mut().zip(z) {
            *r = if squared { v.max(0.0).sqrt() } else { v };
        }
    };
    let mut z = pack(m);
    let (dz1, dl1) = profile_rhs(m)?;
    let mut mid = m.clone();
    let mut zmid = z.clone();
    apply(&mut zmid, &dz1, dt);
    unpack(&zmid, &mut mid);
    for g in &mut mid.gauge {
        *g += dt * dl1;
    }
    check_positive(&mid)?;
    let (dz2, dl2) = profile_rhs(&mid)?;
    for i in 0..z.len() {
        z[i] += 0.5 * dt * (dz1[i] + dz2[i]);
    }
    unpack(&z, m);
    for g in &mut m.gauge {
        *g += 0.5 * dt * (dl1 + dl2);
    }
    check_positive(m)?;
    Ok(dt)
}

/// One explicit Heun step of the gauge-fixed (DeTurck) profile flow for
/// capped topologies.
///
/// Near a capped pole the free gauge motion of the plain flow amplifies any
/// violation of the pole compatibility |psi_s| = 1 through the 1/psi terms,
/// no matter how the stretch rate is estimated. The classical cure is to
/// fix the gauge against a background metric of the same topology: with
/// U = psi / psibar and V = phi / c (background psibar as built by
/// [`gauge_background`], constant background gauge c = total length), the
/// modified flow is the strictly parabolic system
///
///   U_t = lambda [ (U'' - U'^2/U)/V^2 + n k U'/U^2 + mu U/V^2
///                  + k^2 (1/U - U/V^2) - (n - 1) F / U ]
///   V_t = lambda [ V''/V^2 - 2 V'^2/V^3 + n k V'/U^2 + n U'^2/(U^2 V)
///                  + 2 n k U' (U^2 - V^2)/(U^3 V)
///                  + n mu V/U^2 + n k^2 (1/V - V/U^2) ]
///
/// with k = psibar'/psibar, mu = psibar''/psibar,
/// F = (c^2 - psibar'^2)/psibar^2 and lambda = 1/c^2. The singular k^2
/// terms vanish exactly when U = V (the compatibility condition at the
/// poles) and act as a stiff restoring force otherwise, so pole noise is
/// damped instead of amplified. The solution differs from the plain flow by
/// a time-dependent reparameterization only, which leaves every recorded
/// diagnostic (curvature, lengths, slice areas) unchanged. The background
/// is refreshed from the current state at each step; any per-step gauge
/// vector field yields the same geometry.
fn step_profile_deturck(m: &mut ProfileMetric, cfl: f64, max_rm: f64) -> Result<f64> {
    let count = m.radius.len();
    if count < 8 {
        return Err(HookError::Resolution(
            "capped profile flow needs at least 8 nodes".into(),
        ));
    }
    let dx = m.spacing();
    let c0 = m.length();
    let lambda = 1.0 / (c0 * c0);
    let bg = gauge_background(&m.radius, c0, dx);
    let mut u: Vec<f64> = (0..count)
        .map(|i| {
            if i == 0 || i == count - 1 {
                0.0 // filled from the even extrapolation below
            } else {
                m.radius[i] / bg.psibar[i]
            }
        })
        .collect();
    u[0] = (4.0 * u[1] - u[2]) / 3.0;
    u[count - 1] = (4.0 * u[count - 2] - u[count - 3]) / 3.0;
    let mut v: Vec<f64> = m.gauge.iter().map(|&g| g / c0).collect();
    let dt = stable_dt(cfl, max_rm, dx, &m.gauge);

    let nf = m.n as f64;
    let (du1, dv1) = deturck_profile_rhs(&u, &v, nf, lambda, dx, &bg);
    let mut umid = u.clone();
    let mut vmid = v.clone();
    apply(&mut umid, &du1, dt);
    apply(&mut vmid, &dv1, dt);
    check_deturck_positive(&umid, &vmid)?;
    let (du2, dv2) = deturck_profile_rhs(&umid, &vmid, nf, lambda, dx, &bg);
    for i in 0..count {
        u[i] += 0.5 * dt * (du1[i] + du2[i]);
        v[i] += 0.5 * dt * (dv1[i] + dv2[i]);
    }
    check_deturck_positive(&u, &v)?;
    for i in 0..count {
        m.radius[i] = u[i] * bg.psibar[i];
        m.gauge[i] = v[i] * c0;
    }
    Ok(dt)
}

/// Frozen gauge background for a capped radial channel: the reference
/// radius `psibar(x) = (c/pi) sin(pi x) exp(q(x))` together with the
/// coefficient arrays the gauge-fixed flow needs. The modulation q is a
/// windowed log-ratio against the current channel values: identically zero
/// in a band around each pole (so the pole coefficients are those of the
/// round reference, known in closed form) and equal to the measured
/// log-ratio in the middle of the domain (so the ratio U = psi/psibar stays
/// near 1 even across a thin neck, keeping every coefficient of the
/// evolution O(max |Rm|)).
struct GaugeBackground {
    /// Background radius, exactly zero at both ends.
    psibar: Vec<f64>,
    /// psibar'/psibar (interior nodes; pole entries unused).
    kappa: Vec<f64>,
    /// kappa^2, the stiff restoring coefficient (pole entries unused).
    kappa2: Vec<f64>,
    /// psibar''/psibar, finite up to the poles (-pi^2 there).
    mu: Vec<f64>,
    /// (c^2 - psibar'^2)/psibar^2, the background fiber-curvature
    /// combination, finite up to the poles (+pi^2 there).
    fib: Vec<f64>,
}

fn gauge_background(radius: &[f64], c: f64, dx: f64) -> GaugeBackground {
    let count = radius.len();
    let pi = std::f64::consts::PI;
    let pi2 = pi * pi;
    let rho = c / pi;
    // Windowed log-ratio modulation: zero within 5% of either pole, full
    // strength beyond 15%, smooth-step in between.
    let mut q = vec![0.0; count];
    for i in 1..count - 1 {
        let x = i as f64 * dx;
        let edge = x.min(1.0 - x);
        let w = crate::num::smooth_step((edge - 0.05) / 0.10);
        if w > 0.0 {
            q[i] = w * (radius[i] / (rho * (pi * x).sin())).ln();
        }
    }
    let mut bg = GaugeBackground {
        psibar: vec![0.0; count],
        kappa: vec![0.0; count],
        kappa2: vec![0.0; count],
        mu: vec![-pi2; count],
        fib: vec![pi2; count],
    };
    for i in 1..count - 1 {
        let x = i as f64 * dx;
        let sn = (pi * x).sin();
        let s = pi2 / (sn * sn);
        let qp = (q[i + 1] - q[i - 1]) / (2.0 * dx);
        let qpp = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (dx * dx);
        let k = pi * (pi * x).cos() / sn + qp;
        bg.psibar[i] = rho * sn * q[i].exp();
        bg.kappa[i] = k;
        bg.kappa2[i] = k * k;
        bg.mu[i] = (qpp - s) + k * k;
        bg.fib[i] = s * (-2.0 * q[i]).exp() - k * k;
    }
    bg
}

fn check_deturck_positive(u: &[f64], v: &[f64]) -> Result<()> {
    if u.iter().any(|&x| !(x > 0.0)) || v.iter().any(|&x| !(x > 0.0)) {
        return Err(HookError::Invariant(
            "radius or gauge lost positivity during a step; lower the cfl number".into(),
        ));
    }
    Ok(())
}

fn deturck_profile_rhs(
    u: &[f64],
    v: &[f64],
    nf: f64,
    lambda: f64,
    dx: f64,
    bg: &GaugeBackground,
) -> (Vec<f64>, Vec<f64>) {
    let count = u.len();
    let pi = std::f64::consts::PI;
    let pi2 = pi * pi;
    let mut du = vec![0.0; count];
    let mut dv = vec![0.0; count];
    for i in 0..count {
        if i == 0 || i == count - 1 {
            // Pole node: k U' -> U''(pole) via the even ghost, and the
            // indeterminate 0 * inf group k^2 (1/U - U/V^2) is read off one
            // node in, where both factors are finite. The background is
            // round near the poles, so mu = -pi^2 and F = pi^2 there.
            let q = if i == 0 { 1 } else { count - 2 };
            let (u0, v0) = (u[i], v[i]);
            let upp = 2.0 * (u[q] - u0) / (dx * dx);
            let vpp = 2.0 * (v[q] - v0) / (dx * dx);
            let kq2 = bg.kappa2[q];
            du[i] = lambda
                * (upp / (v0 * v0) + nf * upp / (u0 * u0)
                    + kq2 * (1.0 / u[q] - u[q] / (v[q] * v[q]))
                    - pi2 * u0 / (v0 * v0)
                    - (nf - 1.0) * pi2 / u0);
            dv[i] = lambda
                * (vpp / (v0 * v0) + nf * vpp / (u0 * u0)
                    + 2.0 * nf * upp * (u0 * u0 - v0 * v0) / (u0 * u0 * u0 * v0)
                    + nf * kq2 * (1.0 / v[q] - v[q] / (u[q] * u[q]))
                    - nf * pi2 * v0 / (u0 * u0));
            continue;
        }
        let k = bg.kappa[i];
        let k2 = bg.kappa2[i];
        let mu = bg.mu[i];
        let fib = bg.fib[i];
        let (u0, v0) = (u[i], v[i]);
        let up = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        let upp = (u[i + 1] - 2.0 * u0 + u[i - 1]) / (dx * dx);
        let vp = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        let vpp = (v[i + 1] - 2.0 * v0 + v[i - 1]) / (dx * dx);
        du[i] = lambda
            * ((upp - up * up / u0) / (v0 * v0) + nf * k * up / (u0 * u0)
                + mu * u0 / (v0 * v0)
                + k2 * (1.0 / u0 - u0 / (v0 * v0))
                - (nf - 1.0) * fib / u0);
        dv[i] = lambda
            * (vpp / (v0 * v0) - 2.0 * vp * vp / (v0 * v0 * v0)
                + nf * k * vp / (u0 * u0)
                + nf * up * up / (u0 * u0 * v0)
                + 2.0 * nf * k * up * (u0 * u0 - v0 * v0) / (u0 * u0 * u0 * v0)
                + nf * mu * v0 / (u0 * u0)
                + nf * k2 * (1.0 / v0 - v0 / (u0 * u0)));
    }
    (du, dv)
}

fn require_uniform_gauge(gauge: &[f64]) -> Result<()> {
    if distortion(gauge) > 1.0 + 1e-9 {
        return Err(HookError::Invariant(
            "the stepper requires a uniform gauge; regrid first".into(),
        ));
    }
    Ok(())
}

fn stable_dt(cfl: f64, max_rm: f64, spacing: f64, gauge: &[f64]) -> f64 {
    let h_min = gauge.iter().cloned().fold(f64::INFINITY, f64::min) * spacing;
    cfl * (1.0 / max_rm.max(1e-300)).min(0.25 * h_min * h_min)
}

fn apply(values: &mut [f64], rhs: &[f64], dt: f64) {
    for (v, r) in values.iter_mut().zip(rhs) {
        *v += dt * r;
    }
}

fn check_positive(m: &ProfileMetric) -> Result<()> {
    let n = m.radius.len();
    let interior = match m.topology {
        Topology::TwoCaps => &m.radius[1..n - 1],
        _ => &m.radius[..],
    };
    if interior.iter().any(|&r| !(r > 0.0)) || m.gauge.iter().any(|&g| !(g > 0.0)) {
        return Err(HookError::Invariant(
            "radius or gauge lost positivity during a step; lower the cfl number".into(),
        ));
    }
    Ok(())
}

/// Time derivatives in the uniform-arclength gauge: per-node radius rate
/// (including the reparameterization advection) and the total-length rate.
fn profile_rhs(m: &ProfileMetric) -> Result<(Vec<f64>, f64)> {
    let count = m.radius.len();
    let nf = m.n as f64;
    let h = m.spacing();
    let hs = h * m.gauge[0];
    let (psi_s, psi_ss) = arclength_derivs(&m.radius, &m.gauge, h, m.topology, true);
    // Gauge stretch rate q = n psi_ss / psi. Capped topologies are stepped
    // by the gauge-fixed scheme instead (see step_profile_deturck); here
    // the radius is bounded away from zero, so the pointwise ratio is
    // well conditioned.
    let squared = m.n == 2;
    let mut q = vec![0.0; count];
    for i in 0..count {
        let end = i == 0 || i == count - 1;
        match m.topology {
            Topology::FixedEnds if end => {
                let j = if i == 0 { 1 } else { count - 2 };
                q[i] = nf * psi_ss[j] / m.radius[j];
            }
            _ => {
                q[i] = nf * psi_ss[i] / m.radius[i];
            }
        }
    }
    // Cumulative material stretch I(s) and the total-length rate.
    let mut stretch = vec![0.0; count];
    for i in 1..count {
        stretch[i] = stretch[i - 1] + 0.5 * (q[i - 1] + q[i]) * hs;
    }
    let dl = match m.topology {
        Topology::Periodic => stretch[count - 1] + 0.5 * (q[count - 1] + q[0]) * hs,
        _ => stretch[count - 1],
    };
    let denom = match m.topology {
        Topology::Periodic => count as f64,
        _ => (count - 1) as f64,
    };
    // For sphere fibers advance z = psi^2, which satisfies the linear
    // z_t = z_ss - 2 with no pole-singular coefficients; circle fibers
    // evolve psi directly (pure heat). z is even across a pole.
    let (field_s, field_ss) = if squared {
        let z: Vec<f64> = m.radius.iter().map(|&r| r * r).collect();
        arclength_derivs(&z, &m.gauge, h, m.topology, false)
    } else {
        (psi_s.clone(), psi_ss.clone())
    };
    let mut dfield = vec![0.0; count];
    for i in 0..count {
        let end = i == 0 || i == count - 1;
        let held = end && matches!(m.topology, Topology::TwoCaps | Topology::FixedEnds);
        if held {
            continue;
        }
        let sigma = i as f64 / denom;
        let adv = sigma * dl - stretch[i];
        dfield[i] = if squared {
            field_ss[i] - 2.0 + adv * field_s[i]
        } else {
            field_ss[i] + adv * field_s[i]
        };
    }
    Ok((dfield, dl))
}

/// One explicit Heun step of the gauge-fixed (DeTurck) twisted flow.
///
/// Same construction as [`step_profile_deturck`]: the base sphere warp is
/// measured against the background of [`gauge_background`], H = h / hbar,
/// V = phi / c, and the log circle length u is already a ratio against the
/// product background. The modified flow is the n = 1 profile system plus
/// the twist channel:
///
///   H_t = lambda [ (H'' - H'^2/H)/V^2 + k H'/H^2 + mu H/V^2
///                  + k^2 (1/H - H/V^2) ]
///   u_t = lambda [ u''/V^2 + k u'/H^2 ]
///   V_t = lambda [ V''/V^2 - 2 V'^2/V^3 + k V'/H^2 + H'^2/(H^2 V)
///                  + 2 k H' (H^2 - V^2)/(H^3 V) + u'^2/V
///                  + mu V/H^2 + k^2 (1/V - V/H^2) ]
///
/// with k = hbar'/hbar, mu = hbar''/hbar and lambda = 1/c^2.
pub fn step_twisted_flow(m: &mut TwistedMetric, cfl: f64, max_rm: f64) -> Result<f64> {
    let count = m.warp.len();
    if count < 8 {
        return Err(HookError::Resolution(
            "twisted flow needs at least 8 nodes".into(),
        ));
    }
    let dx = m.spacing();
    let c0 = crate::num::trapezoid(&m.gauge, dx);
    let lambda = 1.0 / (c0 * c0);
    let bg = gauge_background(&m.warp, c0, dx);
    let mut hh: Vec<f64> = (0..count)
        .map(|i| {
            if i == 0 || i == count - 1 {
                0.0
            } else {
                m.warp[i] / bg.psibar[i]
            }
        })
        .collect();
    hh[0] = (4.0 * hh[1] - hh[2]) / 3.0;
    hh[count - 1] = (4.0 * hh[count - 2] - hh[count - 3]) / 3.0;
    let mut v: Vec<f64> = m.gauge.iter().map(|&g| g / c0).collect();
    let mut u = m.twist.clone();
    let dt = stable_dt(cfl, max_rm, dx, &m.gauge);

    let (dh1, du1, dv1) = deturck_twisted_rhs(&hh, &u, &v, lambda, dx, &bg);
    let mut hmid = hh.clone();
    let mut umid = u.clone();
    let mut vmid = v.clone();
    apply(&mut hmid, &dh1, dt);
    apply(&mut umid, &du1, dt);
    apply(&mut vmid, &dv1, dt);
    check_deturck_positive(&hmid, &vmid)?;
    let (dh2, du2, dv2) = deturck_twisted_rhs(&hmid, &umid, &vmid, lambda, dx, &bg);
    for i in 0..count {
        hh[i] += 0.5 * dt * (dh1[i] + dh2[i]);
        u[i] += 0.5 * dt * (du1[i] + du2[i]);
        v[i] += 0.5 * dt * (dv1[i] + dv2[i]);
    }
    check_deturck_positive(&hh, &v)?;
    for i in 0..count {
        m.warp[i] = hh[i] * bg.psibar[i];
        m.gauge[i] = v[i] * c0;
        m.twist[i] = u[i];
    }
    Ok(dt)
}

fn deturck_twisted_rhs(
    hh: &[f64],
    u: &[f64],
    v: &[f64],
    lambda: f64,
    dx: f64,
    bg: &GaugeBackground,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let count = hh.len();
    let pi = std::f64::consts::PI;
    let pi2 = pi * pi;
    let mut dh = vec![0.0; count];
    let mut du = vec![0.0; count];
    let mut dv = vec![0.0; count];
    for i in 0..count {
        if i == 0 || i == count - 1 {
            // Pole limits as in [`deturck_profile_rhs`]; the background is
            // round near the poles, so mu = -pi^2 there.
            let q = if i == 0 { 1 } else { count - 2 };
            let (h0, v0) = (hh[i], v[i]);
            let hpp = 2.0 * (hh[q] - h0) / (dx * dx);
            let upp = 2.0 * (u[q] - u[i]) / (dx * dx);
            let vpp = 2.0 * (v[q] - v0) / (dx * dx);
            let kq2 = bg.kappa2[q];
            dh[i] = lambda
                * (hpp / (v0 * v0) + hpp / (h0 * h0)
                    + kq2 * (1.0 / hh[q] - hh[q] / (v[q] * v[q]))
                    - pi2 * h0 / (v0 * v0));
            du[i] = lambda * upp * (1.0 / (v0 * v0) + 1.0 / (h0 * h0));
            dv[i] = lambda
                * (vpp / (v0 * v0) + vpp / (h0 * h0)
                    + 2.0 * hpp * (h0 * h0 - v0 * v0) / (h0 * h0 * h0 * v0)
                    + kq2 * (1.0 / v[q] - v[q] / (hh[q] * hh[q]))
                    - pi2 * v0 / (h0 * h0));
            continue;
        }
        let k = bg.kappa[i];
        let k2 = bg.kappa2[i];
        let mu = bg.mu[i];
        let (h0, v0) = (hh[i], v[i]);
        let hp = (hh[i + 1] - hh[i - 1]) / (2.0 * dx);
        let hpp = (hh[i + 1] - 2.0 * h0 + hh[i - 1]) / (dx * dx);
        let up = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        let upp = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
        let vp = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        let vpp = (v[i + 1] - 2.0 * v0 + v[i - 1]) / (dx * dx);
        dh[i] = lambda
            * ((hpp - hp * hp / h0) / (v0 * v0) + k * hp / (h0 * h0)
                + mu * h0 / (v0 * v0)
                + k2 * (1.0 / h0 - h0 / (v0 * v0)));
        du[i] = lambda * (upp / (v0 * v0) + k * up / (h0 * h0));
        dv[i] = lambda
            * (vpp / (v0 * v0) - 2.0 * vp * vp / (v0 * v0 * v0)
                + k * vp / (h0 * h0)
                + hp * hp / (h0 * h0 * v0)
                + 2.0 * k * hp * (h0 * h0 - v0 * v0) / (h0 * h0 * h0 * v0)
                + up * up / v0
                + mu * v0 / (h0 * h0)
                + k2 * (1.0 / v0 - v0 / (h0 * h0)));
    }
    (dh, du, dv)
}

/// Resamples `values` (given at cumulative arclengths `s`) onto `n_out`
/// uniform arclength nodes via cubic interpolation in index space.
fn resample_by_arclength(values: &[f64], s: &[f64], n_out: usize) -> Vec<f64> {
    let total = *s.last().unwrap();
    let n = s.len();
    let mut out = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let target = total * j as f64 / (n_out - 1) as f64;
        // Monotone inversion of s.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if s[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = if s[hi] > s[lo] {
            (target - s[lo]) / (s[hi] - s[lo])
        } else {
            0.0
        };
        out.push(cubic_interp(values, 1.0, lo as f64 + u));
    }
    out
}

/// Resamples a profile metric to uniform arclength; the total length is
/// preserved exactly and the gauge becomes the constant total length.
pub fn regrid_profile(m: &ProfileMetric) -> Result<ProfileMetric> {
    if m.topology == Topology::Periodic {
        return Err(HookError::Unavailable(
            "periodic regridding is not implemented; periodic runs keep a \
             uniform gauge by symmetry"
                .into(),
        ));
    }
    let s = m.arclength();
    let n = m.x.len();
    let mut radius = resample_by_arclength(&m.radius, &s, n);
    if m.topology == Topology::TwoCaps {
        radius[0] = 0.0;
        radius[n - 1] = 0.0;
        for r in radius[1..n - 1].iter_mut() {
            *r = r.max(1e-300);
        }
    }
    let total = *s.last().unwrap();
    let out = ProfileMetric {
        x: m.x.clone(),
        gauge: vec![total; n],
        radius,
        n: m.n,
        topology: m.topology,
    };
    out.validate()?;
    Ok(out)
}

/// Twisted-product analogue of [`regrid_profile`].
pub fn regrid_twisted(m: &TwistedMetric) -> Result<TwistedMetric> {
    let n = m.x.len();
    let h = m.spacing();
    let mut s = vec![0.0; n];
    for i in 1..n {
        s[i] = s[i - 1] + 0.5 * (m.gauge[i - 1] + m.gauge[i]) * h;
    }
    let mut warp = resample_by_arclength(&m.warp, &s, n);
    warp[0] = 0.0;
    warp[n - 1] = 0.0;
    let twist = resample_by_arclength(&m.twist, &s, n);
    let total = *s.last().unwrap();
    let out = TwistedMetric {
        x: m.x.clone(),
        gauge: vec![total; n],
        warp,
        twist,
        circle_len: m.circle_len,
    };
    out.validate()?;
    Ok(out)
}

fn distortion(gauge: &[f64]) -> f64 {
    let max = gauge.iter().cloned().fold(0.0, f64::max);
    let min = gauge.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Pinching baselines captured from the initial data; they gate which
/// monitors are active.
#[derive(Debug, Clone, Copy)]
pub struct PinchingBaseline {
    pub min_scalar0: f64,
    pub min_sectional0: f64,
}

impl PinchingBaseline {
    pub fn of(field: &CurvatureField) -> Self {
        PinchingBaseline {
            min_scalar0: field.min_scalar(),
            min_sectional0: field.min_sectional(),
        }
    }
}

/// Number of nodes violating the active pinching bounds at time `t`:
/// the scalar floor `R >= -6 / (4 t + 1)` (active when R >= -6 initially)
/// and the 3d pinching bound `R >= 2 X (log X + log(1 + t) - 3)` with
/// `X = max(-nu_min, 0)` (active when sectional >= -1 initially).
pub fn pinching_violations(
    field: &CurvatureField,
    t: f64,
    base: &PinchingBaseline,
    rel_tol: f64,
) -> usize {
    let mut bad = 0;
    let scalar_active = base.min_scalar0 >= -6.0;
    let hi_active = base.min_sectional0 >= -1.0;
    for i in 0..field.scalar.len() {
        let r = field.scalar[i];
        let scale = field.rm_norm[i].max(1.0);
        if scalar_active && r < -6.0 / (4.0 * t + 1.0) - rel_tol * scale {
            bad += 1;
            continue;
        }
        if hi_active {
            let nu_min = field.sectional[i]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let x = (-nu_min).max(0.0);
            if x > 0.0 && r < 2.0 * x * (x.ln() + (1.0 + t).ln() - 3.0) - rel_tol * scale {
                bad += 1;
            }
        }
    }
    bad
}

/// Evolved metric class, for the shared runner.
pub enum FlowState {
    Profile(ProfileMetric),
    Twisted(TwistedMetric),
}

impl FlowState {
    fn curvature(&self) -> Result<CurvatureField> {
        match self {
            FlowState::Profile(m) => profile_curvature(m),
            FlowState::Twisted(m) => twisted_curvature(m),
        }
    }

    fn radii(&self) -> &[f64] {
        match self {
            FlowState::Profile(m) => &m.radius,
            FlowState::Twisted(m) => &m.warp,
        }
    }

    fn interior_radius_range(&self) -> (f64, f64) {
        let r = self.radii();
        let capped = match self {
            FlowState::Profile(m) => m.topology == Topology::TwoCaps,
            FlowState::Twisted(_) => true,
        };
        let interior = if capped { &r[1..r.len() - 1] } else { r };
        let min = interior.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = interior.iter().cloned().fold(0.0, f64::max);
        (min, max)
    }

    /// Radius of the tightest neck: the smallest interior local minimum of
    /// the radius channel. Monotone decay into a capped pole is the normal
    /// shape of a cap, not a neck, so capped ends never count; if there is
    /// no interior local minimum there is no neck.
    fn neck_radius(&self) -> f64 {
        let r = self.radii();
        let n = r.len();
        let mut neck = f64::INFINITY;
        for i in 1..n - 1 {
            if r[i] <= r[i - 1] && r[i] <= r[i + 1] {
                neck = neck.min(r[i]);
            }
        }
        if let FlowState::Profile(m) = self {
            if m.topology == Topology::Periodic {
                let last = n - 1;
                if r[0] <= r[last] && r[0] <= r[1] {
                    neck = neck.min(r[0]);
                }
                if r[last] <= r[last - 1] && r[last] <= r[0] {
                    neck = neck.min(r[last]);
                }
            }
        }
        neck
    }

    fn tracked_area(&self) -> f64 {
        match self {
            FlowState::Profile(m) => {
                let (min, _) = self.interior_radius_range();
                match m.n {
                    1 => 2.0 * std::f64::consts::PI * min,
                    _ => 4.0 * std::f64::consts::PI * min * min,
                }
            }
            FlowState::Twisted(m) => m.slice_area(),
        }
    }

    fn total_length(&self) -> f64 {
        match self {
            FlowState::Profile(m) => m.length(),
            FlowState::Twisted(m) => crate::num::trapezoid(&m.gauge, m.spacing()),
        }
    }

    fn gauge(&self) -> &[f64] {
        match self {
            FlowState::Profile(m) => &m.gauge,
            FlowState::Twisted(m) => &m.gauge,
        }
    }

    fn step(&mut self, cfl: f64, max_rm: f64) -> Result<f64> {
        match self {
            FlowState::Profile(m) => step_profile_flow(m, cfl, max_rm),
            FlowState::Twisted(m) => step_twisted_flow(m, cfl, max_rm),
        }
    }

    fn regrid(&mut self) -> Result<bool> {
        match self {
            FlowState::Profile(m) => {
                if m.topology == Topology::Periodic {
                    return Ok(false);
                }
                *m = regrid_profile(m)?;
                Ok(true)
            }
            FlowState::Twisted(m) => {
                *m = regrid_twisted(m)?;
                Ok(true)
            }
        }
    }
}

/// Runs a flow until a stopping condition fires. The observer is invoked at
/// every record point with the current time and state (after the initial
/// record, before the first step).
pub fn run_flow<F: FnMut(f64, &FlowState)>(
    mut state: FlowState,
    config: &FlowConfig,
    mut observer: F,
) -> Result<(Trajectory, FlowState)> {
    let mut traj = Trajectory::new();
    if distortion(state.gauge()) > 1.0 + 1e-9 && state.regrid()? {
        traj.regrids += 1;
    }
    let field0 = state.curvature()?;
    let base = PinchingBaseline::of(&field0);
    let (_, max_r0) = state.interior_radius_range();
    let floor = config.pinch_floor_frac * max_r0;
    let mut t = 0.0;
    let mut last_dt = 0.0;
    let mut steps = 0usize;
    loop {
        let field = state.curvature()?;
        let max_rm = field.max_rm();
        let (min_r, max_r) = state.interior_radius_range();
        let record = steps % config.record_every == 0;
        if record {
            traj.t.push(t);
            traj.dt.push(last_dt);
            traj.max_rm.push(max_rm);
            traj.min_radius.push(min_r);
            traj.neck_radius.push(state.neck_radius());
            traj.max_radius.push(max_r);
            traj.min_scalar.push(field.min_scalar());
            traj.area.push(state.tracked_area());
            traj.total_length.push(state.total_length());
            traj.pinching_violations += pinching_violations(&field, t, &base, 1e-2);
            observer(t, &state);
        }
        if max_rm >= config.rm_stop {
            traj.stop = StopReason::CurvatureBlowup;
            break;
        }
        if max_r < floor {
            traj.stop = StopReason::Extinct;
            break;
        }
        if state.neck_radius() < floor {
            traj.stop = StopReason::PinchFloor;
            break;
        }
        if t >= config.t_max {
            traj.stop = StopReason::TimeLimit;
            break;
        }
        if steps >= config.max_steps {
            traj.stop = StopReason::StepLimit;
            break;
        }
        if distortion(state.gauge()) > config.regrid_distortion && state.regrid()? {
            traj.regrids += 1;
        }
        last_dt = state.step(config.cfl, max_rm)?;
        t += last_dt;
        steps += 1;
    }
    // Always record the final state.
    if traj.t.last() != Some(&t) {
        let field = state.curvature()?;
        let (min_r, max_r) = state.interior_radius_range();
        traj.t.push(t);
        traj.dt.push(last_dt);
        traj.max_rm.push(field.max_rm());
        traj.min_radius.push(min_r);
        traj.neck_radius.push(state.neck_radius());
        traj.max_radius.push(max_r);
        traj.min_scalar.push(field.min_scalar());
        traj.area.push(state.tracked_area());
        traj.total_length.push(state.total_length());
        observer(t, &state);
    }
    Ok((traj, state))
}

/// Convenience wrapper: profile metric in, trajectory and final metric out.
pub fn run_profile_flow<F: FnMut(f64, &ProfileMetric)>(
    m: ProfileMetric,
    config: &FlowConfig,
    mut observer: F,
) -> Result<(Trajectory, ProfileMetric)> {
    let (traj, state) = run_flow(FlowState::Profile(m), config, |t, s| {
        if let FlowState::Profile(p) = s {
            observer(t, p);
        }
    })?;
    match state {
        FlowState::Profile(p) => Ok((traj, p)),
        FlowState::Twisted(_) => unreachable!(),
    }
}

/// Convenience wrapper for twisted products.
pub fn run_twisted_flow<F: FnMut(f64, &TwistedMetric)>(
    m: TwistedMetric,
    config: &FlowConfig,
    mut observer: F,
) -> Result<(Trajectory, TwistedMetric)> {
    let (traj, state) = run_flow(FlowState::Twisted(m), config, |t, s| {
        if let FlowState::Twisted(w) = s {
            observer(t, w);
        }
    })?;
    match state {
        FlowState::Twisted(w) => Ok((traj, w)),
        FlowState::Profile(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hookgen::{build_twisted_neck, TwistShape};
    use approx::assert_relative_eq;

    #[test]
    fn shrinking_cylinder_matches_exact_solution() {
        // psi^2 = d0^2 - 2 t on the periodic product.
        let d0 = 0.5;
        let m = ProfileMetric::cylinder(d0, 2.0, 2, Topology::Periodic, 64).unwrap();
        let t_stop = 0.3 * d0 * d0 / 2.0;
        let config = FlowConfig {
            t_max: t_stop,
            ..FlowConfig::default()
        };
        let (traj, final_m) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        assert_eq!(traj.stop, StopReason::TimeLimit);
        let t = *traj.t.last().unwrap();
        let exact = (d0 * d0 - 2.0 * t).sqrt();
        for &r in &final_m.radius {
            assert_relative_eq!(r, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn round_sphere_shrinks_self_similarly() {
        // r^2 = r0^2 - 4 t; run into the final decade and fit the singular
        // time.
        let r0 = 0.7;
        let m = ProfileMetric::round_sphere(r0, 2, 128).unwrap();
        let config = FlowConfig {
            rm_stop: 2e3,
            ..FlowConfig::default()
        };
        let (traj, final_m) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        assert_eq!(traj.stop, StopReason::CurvatureBlowup);
        let t = *traj.t.last().unwrap();
        let r_exact = (r0 * r0 - 4.0 * t).sqrt();
        // The profile should still be a round sphere of radius r_exact.
        let s = final_m.arclength();
        let total = final_m.length();
        assert_relative_eq!(total, std::f64::consts::PI * r_exact, max_relative = 2e-2);
        let mid = s.len() / 2;
        assert_relative_eq!(final_m.radius[mid], r_exact, max_relative = 1e-2);
        let t_hat = traj.singular_time_estimate().unwrap();
        assert_relative_eq!(t_hat, r0 * r0 / 4.0, max_relative = 2e-2);
    }

    #[test]
    fn untwisted_neck_area_decays_at_8pi() {
        let d0 = 0.6;
        let m = build_twisted_neck(d0, 0.0, TwistShape::Cosine, 1.0, 128).unwrap();
        let t_stop = 0.2 * d0 * d0 / 2.0;
        let config = FlowConfig {
            t_max: t_stop,
            ..FlowConfig::default()
        };
        let (traj, _) = run_twisted_flow(m, &config, |_, _| {}).unwrap();
        let n = traj.t.len();
        let slope = (traj.area[n - 1] - traj.area[0]) / (traj.t[n - 1] - traj.t[0]);
        assert_relative_eq!(slope, -8.0 * std::f64::consts::PI, max_relative = 1e-3);
    }

    #[test]
    fn twist_slows_area_decay() {
        // dA/dt = -8 pi + twist energy; with u = cos(rho/d0) the initial
        // energy is 8 pi / 3.
        let d0 = 0.6;
        let m = build_twisted_neck(d0, 1.0, TwistShape::Cosine, 1.0, 256).unwrap();
        let a0 = m.slice_area();
        let config = FlowConfig {
            t_max: 2e-4,
            record_every: 10,
            ..FlowConfig::default()
        };
        let (traj, _) = run_twisted_flow(m, &config, |_, _| {}).unwrap();
        let n = traj.t.len();
        let slope = (traj.area[n - 1] - traj.area[0]) / (traj.t[n - 1] - traj.t[0]);
        let expected = -8.0 * std::f64::consts::PI * (1.0 - 1.0 / 3.0);
        assert_relative_eq!(slope, expected, max_relative = 2e-2);
        assert!(traj.area[0] <= a0 + 1e-12);
    }

    #[test]
    fn dumbbell_develops_type_one_neckpinch() {
        // Symmetric dumbbell: the neck pinches while the bulbs stay at
        // order-one curvature, the neck radius tracks psi^2 = 2 (T - t),
        // and the blow-up is Type I (max|Rm| * (T - t) bounded).
        let m = crate::hookgen::build_dumbbell_profile((1.0, 1.0), 0.25, 1.6, 512)
            .unwrap();
        let config = FlowConfig {
            rm_stop: 1e4,
            record_every: 5,
            ..FlowConfig::default()
        };
        let (traj, final_m) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        assert_eq!(traj.stop, StopReason::CurvatureBlowup);
        let t_hat = traj.singular_time_estimate().unwrap();
        let rm_end = *traj.max_rm.last().unwrap();
        // Non-trivial: the largest radius is still order one at the end.
        assert!(*traj.max_radius.last().unwrap() > 0.5);
        // Neck area law on the final decade of curvature growth.
        for (i, &rm) in traj.max_rm.iter().enumerate() {
            if rm >= rm_end / 10.0 && t_hat > traj.t[i] {
                let psi = traj.neck_radius[i];
                let ratio = psi * psi / (2.0 * (t_hat - traj.t[i]));
                assert_relative_eq!(ratio, 1.0, max_relative = 0.1);
            }
        }
        // Type I: the normalized curvature stays bounded.
        assert!(rm_end * (t_hat - traj.t.last().unwrap()) < 5.0);
    }

    #[test]
    fn regrid_preserves_length_and_profile() {
        let r = 0.9;
        let mut m = ProfileMetric::round_sphere(r, 2, 128).unwrap();
        // Distort the gauge, keeping the same underlying geometry poorly
        // sampled.
        for (i, g) in m.gauge.iter_mut().enumerate() {
            *g *= 1.0 + 0.5 * (i as f64 / 128.0);
        }
        let len_before = m.length();
        let rg = regrid_profile(&m).unwrap();
        assert_relative_eq!(rg.length(), len_before, max_relative = 1e-12);
        assert!(distortion(&rg.gauge) < 1.0 + 1e-12);
    }

    #[test]
    fn pinching_monitors_accept_positive_curvature() {
        let m = ProfileMetric::round_sphere(1.0, 2, 128).unwrap();
        let field = profile_curvature(&m).unwrap();
        let base = PinchingBaseline::of(&field);
        assert_eq!(pinching_violations(&field, 0.1, &base, 1e-2), 0);
    }
}
