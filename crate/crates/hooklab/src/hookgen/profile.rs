//! The tube radius profile: a compactly supported smooth bump on the swollen
//! branch, anchored to 1 at s = 1/L and s = 4 - 1/L, increasing up to the bump
//! center and decreasing after it, strictly concave on the first branch.
//!
//! Outside the window where the bump formula applies, the profile is a small
//! concave quadratic deviation (scaled so it vanishes in the eps2 -> 0
//! limit) whose vertex sits at s = 1 and which is held constant past it,
//! joined to the bump by C^2 smooth-step blends.

use super::HookSpec;
use crate::error::{HookError, Result};
use crate::num::{smooth_step, smooth_step_derivs};

/// Compactly supported bump `exp(1 + 1/(4x^2 - 1))` on [-1/2, 1/2].
pub fn bump_f(x: f64) -> Result<f64> {
    if x.abs() > 0.5 {
        return Err(HookError::Domain(format!(
            "bump argument must satisfy |x| <= 1/2, got {x}"
        )));
    }
    Ok(bump_f_unchecked(x))
}

fn bump_f_unchecked(x: f64) -> f64 {
    let d = 4.0 * x * x - 1.0;
    if d >= -1e-300 {
        0.0
    } else {
        (1.0 + 1.0 / d).exp()
    }
}

/// First and second derivative of the bump (zero outside the open support).
fn bump_derivs(x: f64) -> [f64; 3] {
    let d = 4.0 * x * x - 1.0;
    if d >= -1e-12 {
        return [0.0, 0.0, 0.0];
    }
    let f = (1.0 + 1.0 / d).exp();
    let w = -8.0 * x / (d * d);
    let wp = -8.0 / (d * d) + 128.0 * x * x / (d * d * d);
    [f, f * w, f * (w * w + wp)]
}

/// Smooth bump used for the twist/stretch term on the bend: zero near a = 2
/// and a = 3, one on [2 + 1/12, 3 - 1/12].
pub fn twist_bump(a: f64) -> f64 {
    if !(2.0..=3.0).contains(&a) {
        return 0.0;
    }
    smooth_step((a - 2.0) * 12.0) * smooth_step((3.0 - a) * 12.0)
}

/// Analytic radius-profile evaluator (value, first, second derivative).
#[derive(Debug, Clone)]
pub struct ProfileFn {
    pub l: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Amplitude of the outer concave deviation; vanishes with eps2.
    delta_out: f64,
    /// Blend windows: outer piece ends and bump begins over `(s*, 1 + eps2)`;
    /// mirror story on `(2 - eps2, s**)`. Absent when eps2 = 0 (the bump
    /// formula already extends smoothly).
    window_left: Option<(f64, f64)>,
    window_right: Option<(f64, f64)>,
}

impl ProfileFn {
    pub fn new(spec: &HookSpec) -> Result<Self> {
        spec.validate()?;
        let (l, eps1, eps2) = (spec.l, spec.eps1, spec.eps2);
        // Foot value of the bump at the transition points s = 1 + eps2 and
        // s = 2 - eps2; scaling the outer deviation by it makes the eps2 -> 0
        // limit the flat profile the bump formula extends continuously.
        let foot = bump_f_unchecked(0.5 - eps2);
        let delta_out = 0.25 * eps1 * foot;
        let mut p = ProfileFn {
            l,
            eps1,
            eps2,
            delta_out,
            window_left: None,
            window_right: None,
        };
        if eps2 > 0.0 {
            // Blend over [s*, 1 + eps2] where s* is the crossing point at
            // which the bump formula overtakes the outer piece; past s* both
            // blended functions increase and their difference is positive, so
            // the blend is monotone by construction (mirrored on the right).
            let gap_l = |s: f64| p.bump_piece(s)[0] - p.outer_left(s)[0];
            if !(gap_l(1.0 + eps2) > 0.0) {
                return Err(HookError::Infeasible(
                    "outer deviation exceeds the bump at the transition point".into(),
                ));
            }
            let s_star = bisect(&gap_l, 1.0, 1.0 + eps2)?;
            p.window_left = Some((s_star, 1.0 + eps2));
            let gap_r = |s: f64| p.bump_piece(s)[0] - p.outer_right(s)[0];
            if !(gap_r(2.0 - eps2) > 0.0) {
                return Err(HookError::Infeasible(
                    "outer deviation exceeds the bump at the transition point".into(),
                ));
            }
            let s_star2 = bisect(&|s| -gap_r(s), 2.0 - eps2, 2.0)?;
            p.window_right = Some((2.0 - eps2, s_star2));
        }
        Ok(p)
    }

    /// Transition windows (left, right) where the blend is active; `None`
    /// when eps2 = 0.
    pub fn transition_windows(&self) -> Option<[(f64, f64); 2]> {
        Some([self.window_left?, self.window_right?])
    }

    /// Outer deviation on the first branch: concave quadratic through the
    /// anchor phi(1/L) = 1 with its vertex exactly at s = 1, held constant
    /// past the vertex. The spine parameterization changes speed at s = 1,
    /// so a nonzero profile slope there would put a geometric corner into
    /// the tube radius as a function of arclength; the flat vertex keeps
    /// the radius C^1 in arclength across the speed jump.
    fn outer_left(&self, s: f64) -> [f64; 3] {
        let u1 = 1.0 - 1.0 / self.l;
        let a = 2.0 * self.delta_out / u1;
        let u = s - 1.0 / self.l;
        if u >= u1 {
            [1.0 + self.delta_out, 0.0, 0.0]
        } else {
            [
                1.0 + a * (u - 0.5 * u * u / u1),
                a * (1.0 - u / u1),
                -a / u1,
            ]
        }
    }

    fn outer_right(&self, s: f64) -> [f64; 3] {
        // Mirror of the left outer piece in s -> 4 - s.
        let m = self.outer_left(4.0 - s);
        [m[0], -m[1], m[2]]
    }

    fn bump_piece(&self, s: f64) -> [f64; 3] {
        let b = bump_derivs(s - 1.5);
        [1.0 + self.eps1 * b[0], self.eps1 * b[1], self.eps1 * b[2]]
    }

    /// C-infinity blend from `from` to `to` across the window `(a, b)`.
    fn blend(&self, s: f64, a: f64, b: f64, from: [f64; 3], to: [f64; 3]) -> [f64; 3] {
        let w = b - a;
        let sig = smooth_step_derivs((s - a) / w);
        let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
        [
            from[0] + sig[0] * d[0],
            from[1] + sig[0] * d[1] + sig[1] / w * d[0],
            from[2] + sig[0] * d[2] + 2.0 * sig[1] / w * d[1] + sig[2] / (w * w) * d[0],
        ]
    }

    /// Value and first two derivatives of phi at `s` in [0, 4].
    pub fn eval(&self, s: f64) -> [f64; 3] {
        if let Some((a, b)) = self.window_left {
            if s > a && s < b {
                return self.blend(s, a, b, self.outer_left(s), self.bump_piece(s));
            }
            if s <= a {
                return self.outer_left(s);
            }
        }
        if let Some((a, b)) = self.window_right {
            if s > a && s < b {
                return self.blend(s, a, b, self.bump_piece(s), self.outer_right(s));
            }
            if s >= b {
                return self.outer_right(s);
            }
        }
        if self.eps2 == 0.0 {
            // delta_out = 0: the outer pieces coincide with the constant 1
            // the bump formula extends, so the bump piece covers everything.
            if (1.0..=2.0).contains(&s) {
                return self.bump_piece(s);
            }
            return if s < 1.5 {
                self.outer_left(s)
            } else {
                self.outer_right(s)
            };
        }
        self.bump_piece(s)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s)[0]
    }
}

/// Bisection for a continuous sign change f(lo) < 0 < f(hi).
fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> Result<f64> {
    if !(f(lo) < 0.0) || !(f(hi) > 0.0) {
        return Err(HookError::Infeasible(
            "no sign change in the transition window".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The radius profile sampled on a uniform grid over [0, 4], with derivative
/// channels.
#[derive(Debug, Clone)]
pub struct RadiusProfile {
    pub s: Vec<f64>,
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub eps2: f64,
}

impl RadiusProfile {
    /// Independent discrete re-check of the construction constraints:
    /// anchors, monotonicity, concavity on [0, 1] and positivity.
    /// Returns the violated bullets, empty when all hold.
    pub fn check_constraints(&self, l: f64) -> Vec<String> {
        let mut bad = Vec::new();
        let at = |target: f64| {
            let mut best = (f64::INFINITY, 0usize);
            for (i, &si) in self.s.iter().enumerate() {
                let d = (si - target).abs();
                if d < best.0 {
                    best = (d, i);
                }
            }
            best.1
        };
        let i1 = at(1.0 / l);
        let i2 = at(4.0 - 1.0 / l);
        let h = self.s[1] - self.s[0];
        // Anchor check up to the local slope times the grid offset.
        for (i, name) in [(i1, "phi(1/L) = 1"), (i2, "phi(4-1/L) = 1")] {
            let tol = self.d1[i].abs() * h + 1e-10;
            if (self.value[i] - 1.0).abs() > tol {
                bad.push(name.to_string());
            }
        }
        let mono_tol = 1e-12;
        for i in 1..self.s.len() {
            let (a, b) = (self.value[i - 1], self.value[i]);
            if self.s[i] <= 1.5 && b < a - mono_tol {
                bad.push("nondecreasing on [0, 1.5]".to_string());
                break;
            }
        }
        for i in 1..self.s.len() {
            if self.s[i - 1] >= 1.5 && self.value[i] > self.value[i - 1] + mono_tol {
                bad.push("nonincreasing on [1.5, 4]".to_string());
                break;
            }
        }
        // Concavity on [0, 1] via second differences; strict for eps2 > 0.
        for i in 1..self.s.len() - 1 {
            if self.s[i + 1] <= 1.0 {
                let dd = (self.value[i + 1] - 2.0 * self.value[i] + self.value[i - 1]) / (h * h);
                let limit = if self.eps2 > 0.0 { 0.0 } else { 1e-10 };
                if dd >= limit + 1e-14 && self.eps2 > 0.0 {
                    bad.push("strictly concave on [0, 1]".to_string());
                    break;
                }
                if dd > 1e-8 {
                    bad.push("concave on [0, 1]".to_string());
                    break;
                }
            }
        }
        if self.value.iter().any(|&v| v <= 0.0) {
            bad.push("positive values".to_string());
        }
        bad
    }
}

/// Builds the radius profile on `resolution + 1` uniform nodes over [0, 4].
pub fn build_radius_profile(spec: &HookSpec, resolution: usize) -> Result<RadiusProfile> {
    if resolution < 16 {
        return Err(HookError::Resolution(format!(
            "profile resolution must be at least 16 intervals, got {resolution}"
        )));
    }
    let h = 4.0 / resolution as f64;
    let f = ProfileFn::new(spec)?;
    if let Some(windows) = f.transition_windows() {
        let w_min = windows.iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
        if h > 0.5 * w_min {
            return Err(HookError::Resolution(format!(
                "grid spacing {h:.3e} cannot resolve the {w_min:.3e}-wide profile \
                 transition window; need at least {} intervals",
                (8.0 / w_min).ceil() as usize
            )));
        }
    }
    let mut s = Vec::with_capacity(resolution + 1);
    let mut value = Vec::with_capacity(resolution + 1);
    let mut d1 = Vec::with_capacity(resolution + 1);
    let mut d2 = Vec::with_capacity(resolution + 1);
    for i in 0..=resolution {
        let si = i as f64 * h;
        let e = f.eval(si);
        s.push(si);
        value.push(e[0]);
        d1.push(e[1]);
        d2.push(e[2]);
    }
    let prof = RadiusProfile {
        s,
        value,
        d1,
        d2,
        eps2: spec.eps2,
    };
    let bad = prof.check_constraints(spec.l);
    if !bad.is_empty() {
        return Err(HookError::Infeasible(format!(
            "profile constraints violated: {}",
            bad.join("; ")
        )));
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(eps1: f64, eps2: f64) -> HookSpec {
        HookSpec::new(4.0, eps1, eps2, 0.2, 0.0, 2).unwrap()
    }

    #[test]
    fn bump_values() {
        assert_relative_eq!(bump_f(0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(bump_f(0.5).unwrap(), 0.0);
        assert_eq!(bump_f(-0.5).unwrap(), 0.0);
        // Direct evaluation at x = 1/4: exp(-1/3).
        assert_relative_eq!(
            bump_f(0.25).unwrap(),
            (-1.0f64 / 3.0).exp(),
            epsilon = 1e-12
        );
        assert!(bump_f(0.6).is_err());
    }

    #[test]
    fn bump_derivatives_vanish_at_support_edge() {
        for x in [0.499, 0.4999] {
            let d = bump_derivs(x);
            assert!(d[1].abs() < 1e-6);
            assert!(d[2].abs() < 1e-2);
        }
    }

    #[test]
    fn profile_center_and_anchors() {
        let sp = spec(0.1, 0.05);
        let f = ProfileFn::new(&sp).unwrap();
        assert_relative_eq!(f.value(1.5), 1.0 + sp.eps1, epsilon = 1e-12);
        assert_relative_eq!(f.value(0.25), 1.0, epsilon = 1e-12); // 1/L with L=4
        assert_relative_eq!(f.value(3.75), 1.0, epsilon = 1e-12);
        // Transition point matches the bump evaluated at 0.5 - eps2.
        assert_relative_eq!(
            f.value(2.0 - sp.eps2),
            1.0 + sp.eps1 * bump_f(0.5 - sp.eps2).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn profile_constraints_hold_on_grid() {
        for (eps2, res) in [(0.0, 1024), (0.05, 4096), (0.1, 1024)] {
            let sp = spec(0.05, eps2);
            let prof = build_radius_profile(&sp, res).unwrap();
            assert!(prof.check_constraints(sp.l).is_empty(), "eps2 = {eps2}");
        }
    }

    #[test]
    fn eps2_zero_is_the_flat_limit() {
        let sp = spec(0.05, 0.0);
        let f = ProfileFn::new(&sp).unwrap();
        for s in [0.0, 0.3, 0.9, 2.3, 3.1, 4.0] {
            assert_relative_eq!(f.value(s), 1.0, epsilon = 1e-14);
        }
        assert_relative_eq!(f.value(1.5), 1.0 + sp.eps1, epsilon = 1e-14);
    }

    #[test]
    fn coarse_grid_rejected_for_small_eps2() {
        let sp = spec(0.05, 0.01);
        assert!(matches!(
            build_radius_profile(&sp, 64),
            Err(HookError::Resolution(_))
        ));
    }

    #[test]
    fn twist_bump_plateau() {
        assert_eq!(twist_bump(2.0), 0.0);
        assert_eq!(twist_bump(3.0), 0.0);
        assert_relative_eq!(twist_bump(2.5), 1.0, epsilon = 1e-15);
        assert_relative_eq!(twist_bump(2.0 + 1.0 / 12.0), 1.0, epsilon = 1e-12);
    }
}
