//! The two symmetric metric classes evolved by the solvers:
//!
//! - [`ProfileMetric`]: rotationally symmetric tube metrics
//!   `g = phi_g^2 dx^2 + psi^2 * (round S^n)` on a coordinate interval,
//!   with capped, periodic or held ends;
//! - [`TwistedMetric`]: warped products `g = k + e^{2u} dtheta^2` on
//!   S^2 x S^1 with rotationally symmetric `k = ds^2 + h^2 dphi^2`.

use crate::error::{HookError, Result};
use crate::num::{trapezoid, QuinticJoin};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// psi = 0 exactly at both ends, |psi_s| = 1 there (smooth caps).
    TwoCaps,
    /// All channels periodic in x; the seam node is not duplicated.
    Periodic,
    /// psi > 0 everywhere; end values held by a Dirichlet condition.
    FixedEnds,
}

/// Rotationally symmetric tube metric on the coordinate interval [0, 1].
#[derive(Debug, Clone)]
pub struct ProfileMetric {
    /// Uniform coordinate grid. For `Periodic` the last node is the one
    /// before the seam (spacing 1/n, n nodes); otherwise n+1 nodes on [0, 1].
    pub x: Vec<f64>,
    /// Gauge factor phi_g > 0; arclength element ds = phi_g dx.
    pub gauge: Vec<f64>,
    /// Fiber radius psi >= 0.
    pub radius: Vec<f64>,
    /// Fiber dimension, 1 or 2.
    pub n: usize,
    pub topology: Topology,
}

impl ProfileMetric {
    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::Periodic => 1.0 / self.x.len() as f64,
            _ => 1.0 / (self.x.len() - 1) as f64,
        }
    }

    /// Total arclength of the interval.
    pub fn length(&self) -> f64 {
        match self.topology {
            Topology::Periodic => {
                self.gauge.iter().sum::<f64>() * self.spacing()
            }
            _ => trapezoid(&self.gauge, self.spacing()),
        }
    }

    /// Cumulative arclength at every node.
    pub fn arclength(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut s = vec![0.0; self.x.len()];
        for i in 1..self.x.len() {
            s[i] = s[i - 1] + 0.5 * (self.gauge[i - 1] + self.gauge[i]) * h;
        }
        s
    }

    /// Area of the fiber slice at node `i` (circumference for n = 1).
    pub fn slice_area(&self, i: usize) -> f64 {
        match self.n {
            1 => 2.0 * std::f64::consts::PI * self.radius[i],
            _ => 4.0 * std::f64::consts::PI * self.radius[i] * self.radius[i],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.gauge.len() || self.x.len() != self.radius.len() {
            return Err(HookError::Invariant("channel lengths differ".into()));
        }
        if self.gauge.iter().any(|&g| !(g > 0.0)) {
            return Err(HookError::Invariant("gauge factor must stay positive".into()));
        }
        match self.topology {
            Topology::TwoCaps => {
                let n = self.radius.len();
                if self.radius[0] != 0.0 || self.radius[n - 1] != 0.0 {
                    return Err(HookError::Invariant(
                        "TwoCaps requires psi = 0 exactly at both ends".into(),
                    ));
                }
                if self.radius[1..n - 1].iter().any(|&r| !(r > 0.0)) {
                    return Err(HookError::Invariant(
                        "TwoCaps requires psi > 0 in the interior".into(),
                    ));
                }
            }
            Topology::Periodic | Topology::FixedEnds => {
                if self.radius.iter().any(|&r| !(r > 0.0)) {
                    return Err(HookError::Invariant("psi must stay positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Round n+1 sphere of radius `r`: psi = r sin(s/r) over s in [0, pi r].
    pub fn round_sphere(r: f64, n: usize, nodes: usize) -> Result<Self> {
        if !(r > 0.0) {
            return Err(HookError::Parameter(format!("radius must be > 0, got {r}")));
        }
        let len = std::f64::consts::PI * r;
        let m = Self::from_arclength_profile(
            |s| r * (s / r).sin(),
            len,
            n,
            Topology::TwoCaps,
            nodes,
        );
        Ok(m)
    }

    /// Product neck psi = d0 over a circle (periodic) or an interval
    /// (fixed ends) of the given length.
    pub fn cylinder(d0: f64, len: f64, n: usize, topology: Topology, nodes: usize) -> Result<Self> {
        if !(d0 > 0.0) || !(len > 0.0) {
            return Err(HookError::Parameter(
                "cylinder radius and length must be > 0".into(),
            ));
        }
        if topology == Topology::TwoCaps {
            return Err(HookError::Parameter(
                "a cylinder cannot carry TwoCaps ends".into(),
            ));
        }
        let count = if topology == Topology::Periodic {
            nodes
        } else {
            nodes + 1
        };
        Ok(ProfileMetric {
            x: (0..count).map(|i| i as f64 / nodes as f64).collect(),
            gauge: vec![len; count],
            radius: vec![d0; count],
            n,
            topology,
        })
    }

    /// Samples an arclength profile `psi(s)` on a uniform grid; the gauge is
    /// the constant total length.
    pub fn from_arclength_profile<F: Fn(f64) -> f64>(
        psi: F,
        total_len: f64,
        n: usize,
        topology: Topology,
        nodes: usize,
    ) -> Self {
        let count = if topology == Topology::Periodic {
            nodes
        } else {
            nodes + 1
        };
        let mut x = Vec::with_capacity(count);
        let mut radius = Vec::with_capacity(count);
        for i in 0..count {
            let xi = i as f64 / nodes as f64;
            x.push(xi);
            let mut r = psi(xi * total_len);
            if topology == Topology::TwoCaps && (i == 0 || i == nodes) {
                r = 0.0;
            }
            radius.push(r);
        }
        ProfileMetric {
            x,
            gauge: vec![total_len; count],
            radius,
            n,
            topology,
        }
    }
}

/// Arclength profile assembled from segments (caps, joins, neck pieces).
struct PiecewiseProfile {
    breaks: Vec<f64>,
    pieces: Vec<Box<dyn Fn(f64) -> f64>>,
}

impl PiecewiseProfile {
    fn total(&self) -> f64 {
        *self.breaks.last().unwrap()
    }
    fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total());
        for (k, piece) in self.pieces.iter().enumerate() {
            if s <= self.breaks[k + 1] || k + 1 == self.pieces.len() {
                return piece(s - self.breaks[k]);
            }
        }
        unreachable!()
    }
}

/// Two spherical bulbs joined to a thin cylindrical neck by C^2 quintic
/// transitions; the classic neckpinch initial datum.
///
/// Degenerate case: equal bulb and neck radii with a zero-length neck give
/// the exact round-sphere profile.
pub fn build_dumbbell_profile(
    bulb_radii: (f64, f64),
    neck_radius: f64,
    neck_length: f64,
    resolution: usize,
) -> Result<ProfileMetric> {
    build_dumbbell_like(bulb_radii, neck_radius, neck_length, 0.0, resolution)
}

fn build_dumbbell_like(
    (r1, r2): (f64, f64),
    rn: f64,
    neck_len: f64,
    tilt: f64,
    resolution: usize,
) -> Result<ProfileMetric> {
    for (v, name) in [(r1, "bulb radius 1"), (r2, "bulb radius 2"), (rn, "neck radius")] {
        if !(v > 0.0) {
            return Err(HookError::Parameter(format!("{name} must be > 0, got {v}")));
        }
    }
    if neck_len < 0.0 {
        return Err(HookError::Parameter("neck length must be >= 0".into()));
    }
    let rmin = r1.min(r2);
    if rn > rmin {
        return Err(HookError::Parameter(
            "neck radius must not exceed the smallest bulb radius".into(),
        ));
    }
    if (rn - rmin).abs() < 1e-12 && neck_len > 1e-12 {
        return Err(HookError::Infeasible(
            "a positive-length neck needs a neck radius strictly below the bulbs".into(),
        ));
    }
    let half = std::f64::consts::FRAC_PI_2;
    // Degenerate sweep: neck at bulb level, zero length -> plain sphere join.
    if (rn - r1).abs() < 1e-12 && (rn - r2).abs() < 1e-12 && neck_len <= 1e-12 {
        return ProfileMetric::round_sphere(r1, 2, resolution);
    }

    // Neck piece: shallow parabola psi = rn + q (s - mid)^2 + tilt (mid - s).
    let rise = (0.25 * (rmin - rn)).min(0.25 * rn);
    let (q, edge_rise, edge_slope) = if neck_len > 1e-12 {
        let q = rise / (0.5 * neck_len * 0.5 * neck_len);
        (q, rise, q * neck_len)
    } else {
        // Point neck; curvature inferred from the join geometry below.
        (0.0, 0.0, 0.0)
    };
    let j1 = r1;
    let j2 = r2;
    let neck_dd = if neck_len > 1e-12 {
        2.0 * q
    } else {
        2.0 * (rmin - rn) / (j1.min(j2) * j1.min(j2))
    };
    if tilt.abs() > 0.0 && neck_len > 1e-12 && tilt.abs() <= edge_slope {
        return Err(HookError::Parameter(
            "tilt must exceed q * neck_length so the neck has no interior critical point"
                .into(),
        ));
    }

    let left_edge = [
        rn + edge_rise + 0.5 * tilt * neck_len,
        -edge_slope - tilt,
        neck_dd,
    ];
    let right_edge = [
        rn + edge_rise - 0.5 * tilt * neck_len,
        edge_slope - tilt,
        neck_dd,
    ];
    if left_edge[0] >= r1 || right_edge[0] >= r2 {
        return Err(HookError::Infeasible(
            "neck (including tilt) reaches bulb level; no C^2 join exists".into(),
        ));
    }

    let mut breaks = vec![0.0];
    let mut pieces: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    let mut push = |len: f64, f: Box<dyn Fn(f64) -> f64>, breaks: &mut Vec<f64>| {
        let last = *breaks.last().unwrap();
        breaks.push(last + len);
        pieces.push(f);
    };

    // Cap 1 up to its equator.
    push(half * r1, Box::new(move |s| r1 * (s / r1).sin()), &mut breaks);
    // Join 1: equator -> left neck edge.
    let join1 = QuinticJoin::new(j1, [r1, 0.0, -1.0 / r1], left_edge);
    push(j1, Box::new(move |s| join1.eval(s)[0]), &mut breaks);
    // Neck.
    if neck_len > 1e-12 {
        let mid = 0.5 * neck_len;
        push(
            neck_len,
            Box::new(move |s| rn + q * (s - mid) * (s - mid) + tilt * (mid - s)),
            &mut breaks,
        );
    }
    // Join 2: right neck edge -> cap 2 equator.
    let join2 = QuinticJoin::new(j2, right_edge, [r2, 0.0, -1.0 / r2]);
    push(j2, Box::new(move |s| join2.eval(s)[0]), &mut breaks);
    // Cap 2 down to the far pole.
    push(half * r2, Box::new(move |s| r2 * (s / r2).cos()), &mut breaks);

    let profile = PiecewiseProfile { breaks, pieces };
    let total = profile.total();
    let m = ProfileMetric::from_arclength_profile(
        |s| profile.eval(s),
        total,
        2,
        Topology::TwoCaps,
        resolution,
    );
    m.validate()?;
    // The joins must be monotone so the critical-point inventory is exactly
    // the advertised one (checked on a fine sub-sampling).
    for (k, range) in [(1usize, (r1, left_edge[0])), (pieces_join2_index(neck_len), (right_edge[0], r2))] {
        let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
        let a = profile.breaks[k];
        let b = profile.breaks[k + 1];
        let mut prev = profile.eval(a);
        let fine = 512;
        let increasing = profile.eval(b) > profile.eval(a);
        for j in 1..=fine {
            let v = profile.eval(a + (b - a) * j as f64 / fine as f64);
            let ok = if increasing { v >= prev - 1e-12 } else { v <= prev + 1e-12 };
            if !ok || v < lo - 0.05 * (hi - lo) - 1e-12 || v > hi + 0.05 * (hi - lo) + 1e-12 {
                return Err(HookError::Infeasible(
                    "C^2 neck join is not monotone for these parameters".into(),
                ));
            }
            prev = v;
        }
    }
    Ok(m)
}

fn pieces_join2_index(neck_len: f64) -> usize {
    if neck_len > 1e-12 {
        3
    } else {
        2
    }
}

/// One spherical bulb tapering monotonically through a tilted shallow neck
/// into a steeper partial cap: a profile with a single interior critical
/// point (the bulb equator) whose flow can grow a new minimum on the neck.
///
/// The sphere continuation past the equator is blended onto the neck line at
/// their transversal crossing, and the neck line onto the tip cap at the
/// second crossing; on each blend window both functions decrease and their
/// difference has one sign, so monotonicity holds by construction.
pub fn build_taper_neck_profile(
    bulb_radius: f64,
    neck_radius: f64,
    neck_length: f64,
    tilt: f64,
    tip_radius: f64,
    resolution: usize,
) -> Result<ProfileMetric> {
    for (v, name) in [
        (bulb_radius, "bulb radius"),
        (neck_radius, "neck radius"),
        (neck_length, "neck length"),
        (tilt, "tilt"),
        (tip_radius, "tip radius"),
    ] {
        if !(v > 0.0) {
            return Err(HookError::Parameter(format!("{name} must be > 0, got {v}")));
        }
    }
    if neck_radius >= bulb_radius {
        return Err(HookError::Parameter(
            "neck radius must be below the bulb radius".into(),
        ));
    }
    let r1 = bulb_radius;
    let half_len = 0.5 * neck_length;
    let rise = (0.25 * (r1 - neck_radius)).min(0.25 * neck_radius);
    let q = rise / (half_len * half_len);
    let edge_slope = q * neck_length;
    if tilt <= edge_slope {
        return Err(HookError::Parameter(format!(
            "tilt must exceed q * neck_length = {edge_slope:.3e} so the neck stays monotone"
        )));
    }
    let v_left = neck_radius + rise + tilt * half_len;
    let v_right = neck_radius + rise - tilt * half_len;
    if v_left >= r1 {
        return Err(HookError::Infeasible(
            "tilted neck reaches bulb level; lower the tilt or the neck".into(),
        ));
    }
    if v_right <= 0.0 {
        return Err(HookError::Infeasible(
            "tilt drives the neck through zero; shorten the neck".into(),
        ));
    }
    if tip_radius <= v_right {
        return Err(HookError::Parameter(
            "tip radius must exceed the neck value at its right end".into(),
        ));
    }
    // First crossing: descending sphere branch meets the neck's left end.
    let s_c1 = r1 * (std::f64::consts::PI - (v_left / r1).asin());
    let mid = s_c1 + half_len;
    let neck = move |s: f64| neck_radius + q * (s - mid) * (s - mid) + tilt * (mid - s);
    // Second crossing: neck's right end meets the tip cap.
    let s_c2 = mid + half_len;
    let alpha = (v_right / tip_radius).asin();
    if alpha.cos() <= tilt - edge_slope {
        return Err(HookError::Infeasible(
            "tip cap is shallower than the neck at the hand-off; shrink the tip radius"
                .into(),
        ));
    }
    let s_pole = s_c2 + tip_radius * alpha;
    let rt = tip_radius;
    let cap = move |s: f64| {
        if s >= s_pole {
            0.0
        } else {
            rt * ((s_pole - s) / rt).sin()
        }
    };
    let sphere = move |s: f64| r1 * (s / r1).sin();
    // Blend windows, kept clear of the equator, the neck vertex and the pole.
    let w1 = (0.3 * half_len).min(0.5 * (s_c1 - std::f64::consts::FRAC_PI_2 * r1));
    let vertex = mid + 0.5 * tilt / q;
    let w2 = (0.3 * (s_pole - s_c2)).min(0.5 * (vertex - s_c2));
    if !(w1 > 0.0) || !(w2 > 0.0) {
        return Err(HookError::Infeasible(
            "blend windows collapse for these parameters".into(),
        ));
    }
    let psi = move |s: f64| -> f64 {
        if s <= s_c1 - w1 {
            sphere(s)
        } else if s < s_c1 {
            let sig = crate::num::smooth_step((s - (s_c1 - w1)) / w1);
            sphere(s) + sig * (neck(s) - sphere(s))
        } else if s <= s_c2 {
            neck(s)
        } else if s < s_c2 + w2 {
            let sig = crate::num::smooth_step((s - s_c2) / w2);
            neck(s) + sig * (cap(s) - neck(s))
        } else {
            cap(s)
        }
    };
    let m = ProfileMetric::from_arclength_profile(psi, s_pole, 2, Topology::TwoCaps, resolution);
    m.validate()?;
    // Everything after the bulb equator must be nonincreasing.
    let i_eq = (std::f64::consts::FRAC_PI_2 * r1 / s_pole * resolution as f64).ceil() as usize;
    for i in i_eq + 1..m.radius.len() {
        if m.radius[i] > m.radius[i - 1] + 1e-10 {
            return Err(HookError::Infeasible(
                "taper profile is not monotone past the bulb; adjust tilt or joins".into(),
            ));
        }
    }
    Ok(m)
}

/// Radial twist shapes with vanishing derivative at both poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwistShape {
    /// u proportional to cos(rho / d0) (the first polar harmonic).
    Cosine,
    /// u proportional to cos(2 rho / d0); sign-balanced across the equator.
    CosineDouble,
}

/// Warped product metric on S^2 x S^1: `k + e^{2u} dtheta^2` with
/// `k = ds^2 + h^2 dphi^2` reduced to a radial grid.
#[derive(Debug, Clone)]
pub struct TwistedMetric {
    /// Uniform coordinate grid on [0, 1], n+1 nodes.
    pub x: Vec<f64>,
    /// Gauge factor: d rho = gauge dx.
    pub gauge: Vec<f64>,
    /// S^2 warp h >= 0, zero exactly at both poles.
    pub warp: Vec<f64>,
    /// Twist potential u.
    pub twist: Vec<f64>,
    /// Circle length parameter for theta (bookkeeping only; the reduced
    /// equations do not involve it).
    pub circle_len: f64,
}

impl TwistedMetric {
    pub fn spacing(&self) -> f64 {
        1.0 / (self.x.len() - 1) as f64
    }

    /// Area of the S^2 slice.
    pub fn slice_area(&self) -> f64 {
        let h = self.spacing();
        let vals: Vec<f64> = self
            .warp
            .iter()
            .zip(&self.gauge)
            .map(|(w, g)| 2.0 * std::f64::consts::PI * w * g)
            .collect();
        trapezoid(&vals, h)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.warp.len();
        if self.warp[0] != 0.0 || self.warp[n - 1] != 0.0 {
            return Err(HookError::Invariant("h must vanish exactly at the poles".into()));
        }
        if self.warp[1..n - 1].iter().any(|&w| !(w > 0.0)) {
            return Err(HookError::Invariant("h must be positive between the poles".into()));
        }
        if self.gauge.iter().any(|&g| !(g > 0.0)) {
            return Err(HookError::Invariant("gauge factor must stay positive".into()));
        }
        Ok(())
    }
}

/// Round S^2 of radius d0 (slice area 4 pi d0^2 independent of the twist)
/// with twist potential u = amplitude * shape.
pub fn build_twisted_neck(
    d0: f64,
    amplitude: f64,
    shape: TwistShape,
    circle_len: f64,
    resolution: usize,
) -> Result<TwistedMetric> {
    if !(d0 > 0.0) {
        return Err(HookError::Parameter(format!("d0 must be > 0, got {d0}")));
    }
    if amplitude < 0.0 {
        return Err(HookError::Parameter("twist amplitude must be >= 0".into()));
    }
    if !(circle_len > 0.0) {
        return Err(HookError::Parameter("circle length must be > 0".into()));
    }
    if resolution < 16 {
        return Err(HookError::Resolution(
            "twisted neck needs at least 16 intervals".into(),
        ));
    }
    let total = std::f64::consts::PI * d0;
    let n = resolution;
    let mut x = Vec::with_capacity(n + 1);
    let mut warp = Vec::with_capacity(n + 1);
    let mut twist = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let xi = i as f64 / n as f64;
        x.push(xi);
        let rho = xi * total;
        let mut h = d0 * (rho / d0).sin();
        if i == 0 || i == n {
            h = 0.0;
        }
        warp.push(h);
        let s = match shape {
            TwistShape::Cosine => (rho / d0).cos(),
            TwistShape::CosineDouble => (2.0 * rho / d0).cos(),
        };
        twist.push(amplitude * s);
    }
    let m = TwistedMetric {
        x,
        gauge: vec![total; n + 1],
        warp,
        twist,
        circle_len,
    };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_profile_poles_are_smooth() {
        let m = ProfileMetric::round_sphere(1.0, 2, 200).unwrap();
        m.validate().unwrap();
        let h = m.spacing() * m.gauge[0];
        // |psi_s| = 1 at the poles via one-sided differences.
        let slope0 = (m.radius[1] - m.radius[0]) / h;
        let slope1 = (m.radius[m.radius.len() - 1] - m.radius[m.radius.len() - 2]) / h;
        assert_relative_eq!(slope0, 1.0, epsilon = 1e-2);
        assert_relative_eq!(slope1, -1.0, epsilon = 1e-2);
    }

    #[test]
    fn dumbbell_critical_points() {
        let m = build_dumbbell_profile((1.0, 1.0), 0.2, 2.0, 1024).unwrap();
        m.validate().unwrap();
        // Exactly two interior maxima and one interior minimum.
        let mut maxima = 0;
        let mut minima = Vec::new();
        for i in 1..m.radius.len() - 1 {
            if m.radius[i] > m.radius[i - 1] && m.radius[i] > m.radius[i + 1] {
                maxima += 1;
            }
            if m.radius[i] < m.radius[i - 1] && m.radius[i] < m.radius[i + 1] {
                minima.push(i);
            }
        }
        assert_eq!(maxima, 2);
        assert_eq!(minima.len(), 1);
        // Neck min of value 0.2 at the arclength midpoint.
        let imin = minima[0];
        assert_relative_eq!(m.radius[imin], 0.2, epsilon = 1e-3);
        let s = m.arclength();
        assert_relative_eq!(s[imin], 0.5 * m.length(), epsilon = 2.0 * m.length() * m.spacing());
    }

    #[test]
    fn asymmetric_dumbbell_peak_heights() {
        let m = build_dumbbell_profile((1.0, 0.5), 0.1, 1.0, 1024).unwrap();
        let mut peaks = Vec::new();
        for i in 1..m.radius.len() - 1 {
            if m.radius[i] > m.radius[i - 1] && m.radius[i] > m.radius[i + 1] {
                peaks.push(m.radius[i]);
            }
        }
        assert_eq!(peaks.len(), 2);
        assert_relative_eq!(peaks[0], 1.0, epsilon = 1e-2);
        assert_relative_eq!(peaks[1], 0.5, epsilon = 1e-2);
    }

    #[test]
    fn degenerate_dumbbell_is_a_round_sphere() {
        let m = build_dumbbell_profile((0.7, 0.7), 0.7, 0.0, 256).unwrap();
        let r = 0.7;
        let s = m.arclength();
        for (i, &si) in s.iter().enumerate() {
            assert_relative_eq!(m.radius[i], r * (si / r).sin(), epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetric_dumbbell_is_mirror_symmetric() {
        let m = build_dumbbell_profile((0.8, 0.8), 0.3, 1.5, 512).unwrap();
        let n = m.radius.len();
        for i in 0..n {
            assert_relative_eq!(m.radius[i], m.radius[n - 1 - i], epsilon = 1e-12);
        }
    }

    #[test]
    fn taper_profile_has_no_interior_minimum() {
        let m = build_taper_neck_profile(1.0, 0.3, 1.5, 0.25, 0.25, 1024).unwrap();
        for i in 1..m.radius.len() - 1 {
            let is_min = m.radius[i] < m.radius[i - 1] && m.radius[i] < m.radius[i + 1];
            assert!(!is_min, "unexpected interior minimum at node {i}");
        }
    }

    #[test]
    fn twisted_neck_area_is_normalized() {
        for amp in [0.0, 0.5, 1.3] {
            let m = build_twisted_neck(0.7, amp, TwistShape::Cosine, 1.0, 512).unwrap();
            assert_relative_eq!(
                m.slice_area(),
                4.0 * std::f64::consts::PI * 0.49,
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_dumbbell_profile((1.0, 1.0), 1.5, 1.0, 256).is_err());
        assert!(build_twisted_neck(-1.0, 0.0, TwistShape::Cosine, 1.0, 64).is_err());
        assert!(ProfileMetric::cylinder(1.0, 1.0, 2, Topology::TwoCaps, 64).is_err());
    }
}
