//! The planar hook spine: a long straight branch, a radius-1 circular bend,
//! and a second straight branch, traversed by a parameter s in [0, 4].
//!
//! The two windows where the piecewise formula leaves the bend curve
//! unspecified are filled intrinsically: the tangent angle is integrated
//! against a C^1 curvature ramp, so the signed curvature runs from 0 (line)
//! to 1 (arc) without the spikes a position-space Hermite join produces
//! (such a join must cover ~1 unit of path in 1/6 of parameter between
//! endpoint speeds 1 and pi, so it overshoots and loops). The ramp shape
//!
//!   kappa(t) = S(t) + b1 sin^2(pi t) + b2 sin^2(pi t) cos(pi t)
//!
//! (S the cubic smooth step, t the arclength fraction) turns by exactly
//! pi/3 once its arclength is fixed from b1, and the free pair (b1, b2) is
//! solved by Newton iteration at construction time so the ramp lands
//! exactly on the start point of the pinned circular arc. A pure
//! kappa <= 1 ramp cannot close the turn (the width integral of
//! sin(theta)/kappa(theta) strictly exceeds the tangent-arc value), so the
//! solved shape overshoots 1 modestly; `max_kappa` reports the result and
//! the tube embeddability gate divides the focal bound by it.

use crate::error::{HookError, Result};
use crate::num::smooth_step;

/// One sample of the discretized spine.
#[derive(Debug, Clone, Copy)]
pub struct SpineSample {
    pub s: f64,
    pub point: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    /// Signed curvature with respect to the left-hand normal.
    pub kappa: f64,
}

/// The spine sampled on a uniform parameter grid.
#[derive(Debug, Clone)]
pub struct SpineCurve {
    pub l: f64,
    pub samples: Vec<SpineSample>,
}

/// Parameter width of each join window in the bend parameter sigma.
const JOIN_W: f64 = 1.0 / 6.0;
/// Integration nodes of the stored ramp table.
const RAMP_NODES: usize = 2048;
/// Turning angle of each join ramp: the 60 degrees between the vertical
/// branch line and the pinned arc start at angle pi/3 on the bend circle.
const RAMP_TURN: f64 = std::f64::consts::FRAC_PI_3;

/// Curvature of the join ramp at fraction `t` of its arclength: smooth-step
/// base (0 -> 1) plus two C^1 interior shape terms; the `b2` term has zero
/// mean, so the ramp arclength that produces a pi/3 turn depends on b1 only.
fn ramp_kappa(b: [f64; 2], t: f64) -> f64 {
    let (sin_t, cos_t) = (std::f64::consts::PI * t).sin_cos();
    smooth_step(t) + (b[0] + b[1] * cos_t) * sin_t * sin_t
}

/// Ramp arclength giving total turning pi/3: integral of kappa over the
/// ramp is len * (1/2 + b1/2).
fn ramp_len(b: [f64; 2]) -> f64 {
    2.0 * RAMP_TURN / (1.0 + b[0])
}

/// Planar state (x, y, tangent angle) integrated along the ramp.
#[derive(Debug, Clone, Copy)]
struct RampState {
    x: f64,
    y: f64,
    phi: f64,
}

fn rk4_step(b: [f64; 2], len: f64, a0: f64, h: f64, st: RampState) -> RampState {
    let f = |a: f64, s: RampState| -> [f64; 3] {
        [s.phi.cos(), s.phi.sin(), ramp_kappa(b, a / len)]
    };
    let add = |s: RampState, k: &[f64; 3], w: f64| RampState {
        x: s.x + w * k[0],
        y: s.y + w * k[1],
        phi: s.phi + w * k[2],
    };
    let k1 = f(a0, st);
    let k2 = f(a0 + 0.5 * h, add(st, &k1, 0.5 * h));
    let k3 = f(a0 + 0.5 * h, add(st, &k2, 0.5 * h));
    let k4 = f(a0 + h, add(st, &k3, h));
    RampState {
        x: st.x + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y: st.y + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        phi: st.phi + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    }
}

/// Integrates the ramp from the first branch line end (1, 1/6) heading up.
fn integrate_ramp(b: [f64; 2]) -> Vec<RampState> {
    let len = ramp_len(b);
    let h = len / RAMP_NODES as f64;
    let mut table = Vec::with_capacity(RAMP_NODES + 1);
    let mut st = RampState {
        x: 1.0,
        y: JOIN_W,
        phi: std::f64::consts::FRAC_PI_2,
    };
    table.push(st);
    for j in 0..RAMP_NODES {
        st = rk4_step(b, len, j as f64 * h, h, st);
        table.push(st);
    }
    table
}

/// Endpoint misfit of the ramp against the pinned arc start
/// (cos(pi/3), 1/6 + sin(pi/3)).
fn ramp_misfit(b: [f64; 2]) -> [f64; 2] {
    let end = *integrate_ramp(b).last().unwrap();
    [
        end.x - RAMP_TURN.cos(),
        end.y - (JOIN_W + RAMP_TURN.sin()),
    ]
}

/// Solves the 2x2 system ramp_misfit(b) = 0 by damped Newton iteration with
/// finite-difference Jacobian.
fn solve_ramp_shape() -> Result<[f64; 2]> {
    let mut b = [0.5, 0.0];
    let mut r = ramp_misfit(b);
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    for _ in 0..60 {
        if norm(r) < 1e-13 {
            return Ok(b);
        }
        let eps = 1e-7;
        let rx = ramp_misfit([b[0] + eps, b[1]]);
        let ry = ramp_misfit([b[0], b[1] + eps]);
        let j = [
            [(rx[0] - r[0]) / eps, (ry[0] - r[0]) / eps],
            [(rx[1] - r[1]) / eps, (ry[1] - r[1]) / eps],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            break;
        }
        let step = [
            (j[1][1] * r[0] - j[0][1] * r[1]) / det,
            (j[0][0] * r[1] - j[1][0] * r[0]) / det,
        ];
        let mut lambda = 1.0;
        loop {
            let trial = [b[0] - lambda * step[0], b[1] - lambda * step[1]];
            let rt = ramp_misfit(trial);
            if norm(rt) < norm(r) || lambda < 1e-4 {
                b = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    if norm(r) < 1e-10 {
        Ok(b)
    } else {
        Err(HookError::Invariant(format!(
            "bend join shape solve stalled at misfit {:.3e}",
            norm(r)
        )))
    }
}

/// Analytic evaluator for the spine curve of branch length `L`.
#[derive(Debug, Clone)]
pub struct SpineFn {
    pub l: f64,
    b: [f64; 2],
    ramp_len: f64,
    ramp: Vec<RampState>,
}

impl SpineFn {
    pub fn new(l: f64) -> Result<Self> {
        if !(l > 1.0) {
            return Err(HookError::Parameter(format!("L must be > 1, got {l}")));
        }
        let b = solve_ramp_shape()?;
        let ramp = integrate_ramp(b);
        Ok(SpineFn {
            l,
            b,
            ramp_len: ramp_len(b),
            ramp,
        })
    }

    /// Largest |kappa| anywhere on the spine (somewhat above 1, from the
    /// ramp surplus); the tube embeddability gate divides by this.
    pub fn max_kappa(&self) -> f64 {
        (0..=400)
            .map(|j| ramp_kappa(self.b, j as f64 / 400.0))
            .fold(1.0f64, f64::max)
    }

    /// Ramp state at arclength `a` in [0, ramp_len]: table node plus one
    /// RK4 substep, so the evaluation is smooth to integrator accuracy.
    fn ramp_at(&self, a: f64) -> (RampState, f64) {
        let h = self.ramp_len / RAMP_NODES as f64;
        let j = ((a / h) as usize).min(RAMP_NODES - 1);
        let a0 = j as f64 * h;
        let st = rk4_step(self.b, self.ramp_len, a0, a - a0, self.ramp[j]);
        (st, ramp_kappa(self.b, a / self.ramp_len))
    }

    /// Join-window piece of the bend in the bend parameter, with first and
    /// second parameter derivatives; `t` in [0, 1] spans the window.
    fn join(&self, t: f64) -> [[f64; 3]; 2] {
        let (st, kappa) = self.ramp_at(t * self.ramp_len);
        // d(a)/d(sigma) over the window: full ramp arclength per width JOIN_W.
        let v = self.ramp_len / JOIN_W;
        let (sin_p, cos_p) = st.phi.sin_cos();
        [
            [st.x, cos_p * v, -sin_p * kappa * v * v],
            [st.y, sin_p * v, cos_p * kappa * v * v],
        ]
    }

    /// Bend curve (the `mu` part), with first and second derivatives in the
    /// bend parameter.
    fn mu(&self, sg: f64) -> [[f64; 3]; 2] {
        if sg <= 1.0 / 6.0 {
            [[1.0, 0.0, 0.0], [sg, 1.0, 0.0]]
        } else if sg < 1.0 / 3.0 {
            self.join((sg - 1.0 / 6.0) / JOIN_W)
        } else if sg <= 2.0 / 3.0 {
            // Radius-1 arc about (0, y_c) spanning angles [alpha, pi-alpha].
            let omega = 3.0 * (std::f64::consts::PI - 2.0 * self.alpha);
            let th = self.alpha + (3.0 * sg - 1.0) / 3.0 * omega;
            let (s_, c_) = th.sin_cos();
            [
                [c_, -s_ * omega, -c_ * omega * omega],
                [self.y_c + s_, c_ * omega, -s_ * omega * omega],
            ]
        } else if sg < 5.0 / 6.0 {
            // Mirror of the first join: x -> -x, parameter reversed.
            let a = self.join((5.0 / 6.0 - sg) / JOIN_W);
            [
                [-a[0][0], a[0][1], -a[0][2]],
                [a[1][0], -a[1][1], a[1][2]],
            ]
        } else {
            [[-1.0, 0.0, 0.0], [1.0 - sg, -1.0, 0.0]]
        }
    }

    /// Point plus first and second parameter derivatives at `s` in [0, 4].
    pub fn eval_derivs(&self, s: f64) -> [[f64; 3]; 2] {
        let l = self.l;
        if s < 1.0 {
            [[1.0, 0.0, 0.0], [(s - 1.0) * l - 1.0, l, 0.0]]
        } else if s < 2.0 {
            [[1.0, 0.0, 0.0], [s - 2.0, 1.0, 0.0]]
        } else if s <= 3.0 {
            self.mu(s - 2.0)
        } else {
            [[-1.0, 0.0, 0.0], [(3.0 - s) * l, -l, 0.0]]
        }
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        let d = self.eval_derivs(s);
        [d[0][0], d[1][0]]
    }

    /// Unit tangent, left-hand unit normal and signed curvature at `s`.
    pub fn frame(&self, s: f64) -> ([f64; 2], [f64; 2], f64) {
        let d = self.eval_derivs(s);
        let (xp, yp) = (d[0][1], d[1][1]);
        let (xpp, ypp) = (d[0][2], d[1][2]);
        let speed = (xp * xp + yp * yp).sqrt();
        let tangent = [xp / speed, yp / speed];
        let normal = [-tangent[1], tangent[0]];
        let kappa = (xp * ypp - yp * xpp) / (speed * speed * speed);
        (tangent, normal, kappa)
    }

    pub fn sample(&self, s: f64) -> SpineSample {
        let (tangent, normal, kappa) = self.frame(s);
        SpineSample {
            s,
            point: self.point(s),
            tangent,
            normal,
            kappa,
        }
    }
}

/// Samples the spine on `resolution + 1` uniform parameter nodes over [0, 4].
pub fn build_spine(l: f64, resolution: usize) -> Result<SpineCurve> {
    if resolution < 16 {
        return Err(HookError::Resolution(format!(
            "spine resolution must be at least 16 intervals, got {resolution}"
        )));
    }
    let f = SpineFn::new(l)?;
    let h = 4.0 / resolution as f64;
    let samples = (0..=resolution).map(|i| f.sample(i as f64 * h)).collect();
    Ok(SpineCurve { l, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn anchor_points_match_formula() {
        let f = SpineFn::new(3.0).unwrap();
        // s = 0 -> (1, -L-1); s = 4 -> (-1, -L); the bend apex at s = 2.5
        // sits on the symmetry axis slightly above the tangent-circle height.
        let p0 = f.point(0.0);
        assert_relative_eq!(p0[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p0[1], -4.0, epsilon = 1e-14);
        let pm = f.point(2.5);
        assert_relative_eq!(pm[0], 0.0, epsilon = 1e-12);
        // Above the tangent-circle height 7/6 (the ramp lifts the circle),
        // but by less than the ramp arclength.
        assert!(
            pm[1] > 7.0 / 6.0 && pm[1] < 7.0 / 6.0 + 0.5,
            "apex height {}",
            pm[1]
        );
        let p4 = f.point(4.0);
        assert_relative_eq!(p4[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(p4[1], -3.0, epsilon = 1e-14);
    }

    #[test]
    fn bend_pieces_meet_continuously() {
        let f = SpineFn::new(3.0).unwrap();
        // Position and tangent direction are continuous across every piece
        // boundary of the bend (speeds may jump; the curve may not).
        for edge in [2.0, 2.0 + 1.0 / 6.0, 2.0 + 1.0 / 3.0, 2.0 + 2.0 / 3.0, 2.0 + 5.0 / 6.0, 3.0]
        {
            let d = 1e-9;
            let (pl, pr) = (f.point(edge - d), f.point(edge + d));
            assert!(
                (pl[0] - pr[0]).hypot(pl[1] - pr[1]) < 1e-7,
                "position jump at s = {edge}: {pl:?} vs {pr:?}"
            );
            let (tl, _, kl) = f.frame(edge - d);
            let (tr, _, kr) = f.frame(edge + d);
            let dot = tl[0] * tr[0] + tl[1] * tr[1];
            assert!(dot > 1.0 - 1e-7, "tangent jump at s = {edge}");
            assert!((kl - kr).abs() < 1e-6, "curvature jump at s = {edge}: {kl} vs {kr}");
        }
    }

    #[test]
    fn curvature_stays_near_the_bend_scale() {
        // The whole point of the intrinsic join: |kappa| <= max_kappa, and
        // the surplus above the arc curvature 1 is modest.
        let f = SpineFn::new(2.0).unwrap();
        let mk = f.max_kappa();
        assert!(mk < 1.5, "ramp curvature surplus too large: {mk}");
        for i in 0..=4000 {
            let s = 4.0 * i as f64 / 4000.0;
            let (_, _, k) = f.frame(s);
            assert!(k.abs() <= mk + 1e-9, "kappa {k} at s = {s} exceeds {mk}");
        }
    }

    #[test]
    fn frame_is_orthonormal_and_kappa_piecewise() {
        let c = build_spine(2.5, 512).unwrap();
        for s in &c.samples {
            let t = s.tangent;
            let n = s.normal;
            assert_relative_eq!(t[0] * t[0] + t[1] * t[1], 1.0, epsilon = 1e-12);
            assert_relative_eq!(t[0] * n[0] + t[1] * n[1], 0.0, epsilon = 1e-12);
            if s.s < 2.0 + 1.0 / 6.0 - 1e-9 || s.s > 3.0 - 1e-9 {
                // straight branches (including the straight lead-ins of the bend)
                if s.s <= 2.0 + 1.0 / 6.0 || s.s >= 2.0 + 5.0 / 6.0 {
                    assert_relative_eq!(s.kappa, 0.0, epsilon = 1e-10);
                }
            }
            if s.s >= 2.0 + 1.0 / 3.0 + 1e-9 && s.s <= 2.0 + 2.0 / 3.0 - 1e-9 {
                assert_relative_eq!(s.kappa.abs(), 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn stored_tangent_agrees_with_finite_differences() {
        let c = build_spine(4.0, 2048).unwrap();
        let h = 4.0 / 2048.0;
        for i in 1..c.samples.len() - 1 {
            let pm = c.samples[i - 1].point;
            let pp = c.samples[i + 1].point;
            let d = [(pp[0] - pm[0]) / (2.0 * h), (pp[1] - pm[1]) / (2.0 * h)];
            let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if norm < 1e-12 {
                continue;
            }
            let t = c.samples[i].tangent;
            let dot = (d[0] * t[0] + d[1] * t[1]) / norm;
            assert!(dot > 1.0 - 5e-4, "FD tangent deviates at s={}", c.samples[i].s);
        }
    }

    #[test]
    fn rejects_short_branch() {
        assert!(build_spine(1.0, 64).is_err());
    }
}
