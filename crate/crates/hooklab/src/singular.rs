//! Singular-event analysis: trivial vs non-trivial classification, the
//! Type I / Type II rate test, epsilon-neck detection and the thin-tube
//! separation predicate.
//!
//! The rate test works on the series q(t) = max|Rm|(t) * (T_hat - t): a
//! bounded q with flat trend over the final curvature decade is Type I
//! (curvature grows no faster than 1/(T_hat - t)); a q that grows past the
//! bound with a positive trend is Type II. A singularity is trivial when
//! the curvature blows up everywhere, which is surrogated by the smallest
//! nodal |Rm| at the final snapshot reaching a fixed fraction of the
//! largest.
//!
//! Neck detection is spatial only: an epsilon-neck is a maximal interval
//! where the scale-invariant cylinder monitors |psi_s| and |psi psi_ss|
//! stay under epsilon for an arclength of at least 2 psi / epsilon.

use crate::curvature::{arclength_derivs, profile_curvature, twisted_curvature};
use crate::error::{HookError, Result};
use crate::hookgen::{ProfileMetric, TwistedMetric};
use crate::num::linear_fit;
use crate::ricci::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeVerdict {
    TypeI,
    TypeII,
    /// No usable blow-up trend (stopped early, or the q-series fits
    /// neither rate pattern).
    Inconclusive,
}

/// Tunable thresholds of the classifier; the defaults are the documented
/// contract values.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierConfig {
    /// Trivial iff min |Rm| >= trivial_fraction * max |Rm| at the final
    /// snapshot.
    pub trivial_fraction: f64,
    /// Type I requires sup q <= q_bound over the final decade.
    pub q_bound: f64,
    /// Type I requires the q-trend (d ln q / d ln(1/(T_hat - t))) to stay
    /// within +/- trend_tol.
    pub trend_tol: f64,
    /// Epsilon for the final-snapshot neck inventory.
    pub neck_eps: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            trivial_fraction: 0.01,
            q_bound: 10.0,
            trend_tol: 0.1,
            // Cylinder-closeness at eps = 0.1 is only reached at pinch
            // depths beyond desk-scale resolution (the shoulder slope
            // decays like 1 / sqrt(log) toward the singular time); 0.2
            // fires robustly on every shipped neckpinch run while staying
            // empty on the round sphere.
            neck_eps: 0.2,
        }
    }
}

/// An epsilon-neck: a maximal node interval that is cylinder-close.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeckRegion {
    /// First and last node of the interval (inclusive).
    pub nodes: (usize, usize),
    /// Arclength bounds of the interval.
    pub s: (f64, f64),
    /// Smallest radius on the interval.
    pub min_radius: f64,
    /// Node attaining the smallest radius (the central slice).
    pub center: usize,
}

#[derive(Debug, Clone)]
pub struct SingularityReport {
    /// Estimated singular time; NaN when no blow-up trend was found.
    pub t_hat: f64,
    /// Curvature blew up everywhere (whole manifold disappears).
    pub trivial: bool,
    pub verdict: TypeVerdict,
    /// (t, q) pairs with q = max|Rm| * (T_hat - t); empty when t_hat is
    /// unavailable.
    pub q_series: Vec<(f64, f64)>,
    /// Largest q over the final curvature decade.
    pub q_sup: f64,
    /// Fitted d ln q / d ln(1/(T_hat - t)) over the final decade
    /// (positive = q still growing toward the singular time).
    pub q_trend: f64,
    /// Epsilon-necks at the final snapshot.
    pub necks: Vec<NeckRegion>,
}

/// Classifies the singular event of a profile-metric flow run; `final_m`
/// is the metric at the last recorded time of `traj`.
pub fn classify(traj: &Trajectory, final_m: &ProfileMetric) -> Result<SingularityReport> {
    classify_with(traj, final_m, &ClassifierConfig::default())
}

pub fn classify_with(
    traj: &Trajectory,
    final_m: &ProfileMetric,
    config: &ClassifierConfig,
) -> Result<SingularityReport> {
    let field = profile_curvature(final_m)?;
    let necks = detect_necks(final_m, config.neck_eps)?;
    classify_core(traj, &field.rm_norm, necks, config)
}

/// Classifies a twisted-product flow run. The twisted class has no radial
/// profile to inventory, so the neck list is empty by construction.
pub fn classify_twisted(traj: &Trajectory, final_m: &TwistedMetric) -> Result<SingularityReport> {
    let field = twisted_curvature(final_m)?;
    classify_core(traj, &field.rm_norm, Vec::new(), &ClassifierConfig::default())
}

fn classify_core(
    traj: &Trajectory,
    rm_final_nodes: &[f64],
    necks: Vec<NeckRegion>,
    config: &ClassifierConfig,
) -> Result<SingularityReport> {
    if traj.t.is_empty() {
        return Err(HookError::Unavailable("empty trajectory".into()));
    }
    let rm_min = rm_final_nodes.iter().cloned().fold(f64::INFINITY, f64::min);
    let rm_max = rm_final_nodes.iter().cloned().fold(0.0f64, f64::max);
    let trivial = rm_min >= config.trivial_fraction * rm_max;

    let t_hat = match traj.singular_time_estimate() {
        Ok(t) => t,
        Err(_) => {
            return Ok(SingularityReport {
                t_hat: f64::NAN,
                trivial,
                verdict: TypeVerdict::Inconclusive,
                q_series: Vec::new(),
                q_sup: f64::NAN,
                q_trend: f64::NAN,
                necks,
            });
        }
    };
    let mut q_series = Vec::new();
    for (i, &t) in traj.t.iter().enumerate() {
        if t_hat > t {
            q_series.push((t, traj.max_rm[i] * (t_hat - t)));
        }
    }
    // Final decade of curvature growth.
    let rm_end = *traj.max_rm.last().unwrap();
    let cut = rm_end / 10.0;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut q_sup = 0.0f64;
    for (i, &t) in traj.t.iter().enumerate() {
        if traj.max_rm[i] >= cut && t_hat > t {
            let q = traj.max_rm[i] * (t_hat - t);
            q_sup = q_sup.max(q);
            lx.push(-(t_hat - t).ln());
            ly.push(q.ln());
        }
    }
    let verdict = if lx.len() < 3 {
        TypeVerdict::Inconclusive
    } else {
        let (q_trend, _, _) = linear_fit(&lx, &ly);
        if q_sup <= config.q_bound && q_trend.abs() <= config.trend_tol {
            TypeVerdict::TypeI
        } else if q_sup > config.q_bound && q_trend > config.trend_tol {
            TypeVerdict::TypeII
        } else {
            TypeVerdict::Inconclusive
        }
    };
    let q_trend = if lx.len() < 3 {
        f64::NAN
    } else {
        linear_fit(&lx, &ly).0
    };
    Ok(SingularityReport {
        t_hat,
        trivial,
        verdict,
        q_series,
        q_sup,
        q_trend,
        necks,
    })
}

/// Finds every maximal epsilon-neck of a profile snapshot: node intervals
/// where |psi_s| <= eps and |psi psi_ss| <= eps (both scale-invariant)
/// whose arclength is at least 2 psi / eps with psi the smallest radius on
/// the interval. Returns the empty list when nothing qualifies.
pub fn detect_necks(m: &ProfileMetric, eps: f64) -> Result<Vec<NeckRegion>> {
    m.validate()?;
    if !(eps > 0.0) {
        return Err(HookError::Parameter(format!("eps must be > 0, got {eps}")));
    }
    let h = m.spacing();
    let (psi_s, psi_ss) = arclength_derivs(&m.radius, &m.gauge, h, m.topology, true);
    let count = m.radius.len();
    let cylinder_close: Vec<bool> = (0..count)
        .map(|i| psi_s[i].abs() <= eps && (m.radius[i] * psi_ss[i]).abs() <= eps)
        .collect();
    let s = m.arclength();
    let mut out = Vec::new();
    let mut i = 0;
    while i < count {
        if !cylinder_close[i] {
            i += 1;
            continue;
        }
        let lo = i;
        while i + 1 < count && cylinder_close[i + 1] {
            i += 1;
        }
        let hi = i;
        i += 1;
        let (mut min_radius, mut center) = (f64::INFINITY, lo);
        for j in lo..=hi {
            if m.radius[j] < min_radius {
                min_radius = m.radius[j];
                center = j;
            }
        }
        let arclen = s[hi] - s[lo];
        if arclen >= 2.0 * min_radius / eps {
            out.push(NeckRegion {
                nodes: (lo, hi),
                s: (s[lo], s[hi]),
                min_radius,
                center,
            });
        }
    }
    Ok(out)
}

/// Thin-tube separation test at a snapshot: `x` must lie inside a detected
/// epsilon-neck (eps = 0.2, the classifier default) and `x1 < x < x2` must sit on opposite sides of
/// the neck's central slice, all in the grid coordinate. Returns whether
/// the scalar curvature at `x` dominates both reference points:
/// R(x) > c_hat * (1 + |R(x_i)|) for i = 1, 2.
pub fn thin_tube_predicate(
    m: &ProfileMetric,
    x: f64,
    x1: f64,
    x2: f64,
    c_hat: f64,
) -> Result<bool> {
    if !(c_hat > 0.0) {
        return Err(HookError::Parameter(format!(
            "c_hat must be > 0, got {c_hat}"
        )));
    }
    let necks = detect_necks(m, ClassifierConfig::default().neck_eps)?;
    let node_of = |x: f64| -> Result<usize> {
        let span = m.x.last().unwrap() - m.x[0];
        if !(m.x[0]..=*m.x.last().unwrap()).contains(&x) {
            return Err(HookError::Parameter(format!(
                "coordinate {x} outside the grid range"
            )));
        }
        Ok(((x - m.x[0]) / span * (m.x.len() - 1) as f64).round() as usize)
    };
    let nx = node_of(x)?;
    let n1 = node_of(x1)?;
    let n2 = node_of(x2)?;
    let neck = necks
        .iter()
        .find(|r| r.nodes.0 <= nx && nx <= r.nodes.1)
        .ok_or_else(|| {
            HookError::Parameter(format!("x = {x} does not lie in any detected neck"))
        })?;
    if !(n1 < neck.center && neck.center < n2) {
        return Err(HookError::Parameter(format!(
            "x1 = {x1} and x2 = {x2} do not lie on opposite sides of the neck's central slice"
        )));
    }
    let field = profile_curvature(m)?;
    let r = |i: usize| field.scalar[i];
    Ok(r(nx) > c_hat * (1.0 + r(n1).abs()) && r(nx) > c_hat * (1.0 + r(n2).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hookgen::{build_dumbbell_profile, build_twisted_neck, Topology, TwistShape};
    use crate::ricci::{run_profile_flow, run_twisted_flow, FlowConfig, StopReason};
    use approx::assert_relative_eq;

    #[test]
    fn exact_cylinder_is_one_full_neck() {
        // The arclength gate is 2 d0 / eps = 4, well under the length 6.
        let m = ProfileMetric::cylinder(0.2, 6.0, 2, Topology::Periodic, 128).unwrap();
        let necks = detect_necks(&m, 0.1).unwrap();
        assert_eq!(necks.len(), 1);
        let neck = necks[0];
        assert_eq!(neck.nodes, (0, 127));
        assert_relative_eq!(neck.min_radius, 0.2);
    }

    #[test]
    fn round_sphere_has_no_neck() {
        let m = ProfileMetric::round_sphere(1.0, 2, 256).unwrap();
        assert!(detect_necks(&m, 0.1).unwrap().is_empty());
        assert!(detect_necks(&m, 0.2).unwrap().is_empty());
    }

    #[test]
    fn dumbbell_neck_contains_the_radius_minimum() {
        let m = build_dumbbell_profile((1.0, 1.0), 0.1, 2.0, 512).unwrap();
        let necks = detect_necks(&m, 0.1).unwrap();
        assert_eq!(necks.len(), 1, "necks: {necks:?}");
        // The psi-minimum of interest is the neck (the smallest interior
        // local minimum), not the pole-adjacent nodes where psi -> 0 by
        // construction.
        let argmin = (1..m.radius.len() - 1)
            .filter(|&i| m.radius[i] <= m.radius[i - 1] && m.radius[i] <= m.radius[i + 1])
            .min_by(|&a, &b| m.radius[a].total_cmp(&m.radius[b]))
            .unwrap();
        assert!(necks[0].nodes.0 <= argmin && argmin <= necks[0].nodes.1);
        assert_relative_eq!(necks[0].min_radius, 0.1, max_relative = 1e-6);
    }

    #[test]
    fn neck_intervals_are_scale_invariant() {
        let m = build_dumbbell_profile((1.0, 0.9), 0.12, 1.8, 384).unwrap();
        let lambda = 3.7;
        let scaled = ProfileMetric {
            x: m.x.clone(),
            gauge: m.gauge.iter().map(|g| g * lambda).collect(),
            radius: m.radius.iter().map(|r| r * lambda).collect(),
            n: m.n,
            topology: m.topology,
        };
        let a = detect_necks(&m, 0.1).unwrap();
        let b = detect_necks(&scaled, 0.1).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.nodes, y.nodes);
            assert_eq!(x.center, y.center);
        }
    }

    #[test]
    fn round_sphere_flow_is_trivial_type_one() {
        let m = ProfileMetric::round_sphere(1.0, 2, 128).unwrap();
        let config = FlowConfig {
            rm_stop: 1e4,
            record_every: 10,
            ..FlowConfig::default()
        };
        let (traj, final_m) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        let report = classify(&traj, &final_m).unwrap();
        assert!(report.trivial);
        assert_eq!(report.verdict, TypeVerdict::TypeI);
        // The exact shrinker has q identically equal to its constant value.
        assert!(report.q_trend.abs() < 0.05, "trend {}", report.q_trend);
        assert!(report.necks.is_empty());
    }

    #[test]
    fn dumbbell_flow_is_nontrivial_type_one_with_thin_tube() {
        let m = build_dumbbell_profile((1.0, 1.0), 0.2, 2.0, 512).unwrap();
        let config = FlowConfig {
            rm_stop: 1e5,
            record_every: 2,
            ..FlowConfig::default()
        };
        let (traj, final_m) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        assert_eq!(traj.stop, StopReason::CurvatureBlowup);
        let report = classify(&traj, &final_m).unwrap();
        assert!(!report.trivial);
        assert_eq!(report.verdict, TypeVerdict::TypeI);
        assert!(!report.necks.is_empty());

        // Late snapshot: neck curvature dwarfs the bulbs.
        let center_x = final_m.x[report.necks[0].center];
        assert!(thin_tube_predicate(&final_m, center_x, 0.1, 0.9, 10.0).unwrap());
        // Initial snapshot of a thinner dumbbell: a neck exists but the
        // curvature ratio is too small for a large threshold.
        let early = build_dumbbell_profile((1.0, 1.0), 0.1, 2.0, 512).unwrap();
        let necks0 = detect_necks(&early, 0.1).unwrap();
        let x0 = early.x[necks0[0].center];
        assert!(!thin_tube_predicate(&early, x0, 0.1, 0.9, 1e4).unwrap());
        // Monotone in the threshold.
        assert!(thin_tube_predicate(&final_m, center_x, 0.1, 0.9, 1.0).unwrap());
    }

    #[test]
    fn thin_tube_rejects_points_outside_necks() {
        let m = ProfileMetric::round_sphere(1.0, 2, 128).unwrap();
        assert!(thin_tube_predicate(&m, 0.5, 0.1, 0.9, 10.0).is_err());
        let d = build_dumbbell_profile((1.0, 1.0), 0.1, 2.0, 512).unwrap();
        let necks = detect_necks(&d, 0.1).unwrap();
        let xc = d.x[necks[0].center];
        // Both reference points on the same side of the central slice.
        assert!(thin_tube_predicate(&d, xc, 0.01, 0.02, 10.0).is_err());
    }

    #[test]
    fn early_stop_without_blowup_is_inconclusive() {
        let m = ProfileMetric::round_sphere(1.0, 2, 96).unwrap();
        // Stop after a sliver of the lifetime: curvature has not moved a
        // decade, so no trend is fittable.
        let config = FlowConfig {
            t_max: 1e-4,
            record_every: 1000,
            ..FlowConfig::default()
        };
        let (traj, final_m) = run_profile_flow(m, &config, |_, _| {}).unwrap();
        let report = classify(&traj, &final_m).unwrap();
        assert_eq!(report.verdict, TypeVerdict::Inconclusive);
        assert!(report.t_hat.is_nan());
    }

    #[test]
    fn classify_is_invariant_under_parabolic_rescaling() {
        // The exact cylinder at scale lambda * d0 runs the same singularity
        // in rescaled time; every q value and both verdict inputs match.
        let run = |d0: f64| {
            let m = ProfileMetric::cylinder(d0, 2.0, 2, Topology::Periodic, 64).unwrap();
            let config = FlowConfig {
                rm_stop: 1e4 / (d0 * d0),
                record_every: 2,
                ..FlowConfig::default()
            };
            let (traj, final_m) = run_profile_flow(m, &config, |_, _| {}).unwrap();
            classify(&traj, &final_m).unwrap()
        };
        let a = run(0.4);
        let b = run(0.4 * 1.9);
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.trivial, b.trivial);
        assert_relative_eq!(a.q_sup, b.q_sup, max_relative = 2e-2);
        assert_relative_eq!(
            a.t_hat / (0.4f64 * 0.4),
            b.t_hat / (0.4f64 * 1.9 * 0.4 * 1.9),
            max_relative = 2e-2
        );
    }

    #[test]
    fn twisted_extinction_is_trivial() {
        let m = build_twisted_neck(0.6, 0.3, TwistShape::Cosine, 1.0, 192).unwrap();
        let config = FlowConfig {
            rm_stop: 1e4,
            record_every: 10,
            ..FlowConfig::default()
        };
        let (traj, final_m) = run_twisted_flow(m, &config, |_, _| {}).unwrap();
        let report = classify_twisted(&traj, &final_m).unwrap();
        assert!(report.trivial);
    }
}
