//! Embedded tube meshes: the hook tube around the planar spine and a straight
//! reference tube, both sampled on a structured (parameter x fiber) grid in
//! flat R^4 (the last coordinate is unused for circle fibers).
//!
//! Fiber conventions: theta is uniform and periodic without a duplicated seam
//! node; for sphere fibers the polar angle is sampled at cell centers so no
//! grid node sits on a fiber pole.

use super::profile::{twist_bump, ProfileFn};
use super::spine::{SpineFn, SpineSample};
use super::HookSpec;
use crate::error::{HookError, Result};

/// Angular grid on the fiber: `theta` periodic, `phi` cell-centered polar
/// angles (empty for circle fibers).
#[derive(Debug, Clone)]
pub struct FiberGrid {
    pub n: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl FiberGrid {
    pub fn new(n: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(HookError::Parameter(format!(
                "fiber dimension must be 1 or 2, got {n}"
            )));
        }
        if n_theta < 8 {
            return Err(HookError::Resolution(format!(
                "need at least 8 theta nodes, got {n_theta}"
            )));
        }
        if n == 2 && n_phi < 4 {
            return Err(HookError::Resolution(format!(
                "need at least 4 phi cells, got {n_phi}"
            )));
        }
        let tau = 2.0 * std::f64::consts::PI;
        let theta = (0..n_theta).map(|j| j as f64 * tau / n_theta as f64).collect();
        let phi = if n == 2 {
            (0..n_phi)
                .map(|j| (j as f64 + 0.5) * std::f64::consts::PI / n_phi as f64)
                .collect()
        } else {
            Vec::new()
        };
        Ok(FiberGrid { n, theta, phi })
    }

    /// Nodes per fiber slice.
    pub fn count(&self) -> usize {
        if self.n == 1 {
            self.theta.len()
        } else {
            self.theta.len() * self.phi.len()
        }
    }

    /// Flat index of the fiber node; `j_phi` is ignored for circle fibers.
    pub fn index(&self, j_phi: usize, j_theta: usize) -> usize {
        if self.n == 1 {
            j_theta
        } else {
            j_phi * self.theta.len() + j_theta
        }
    }

    /// Unit fiber direction for a given planar normal, as a vector in R^4
    /// with basis (normal, e3, e4).
    pub fn direction(&self, normal: [f64; 2], j_phi: usize, j_theta: usize) -> [f64; 4] {
        let th = self.theta[j_theta];
        let (sin_t, cos_t) = th.sin_cos();
        let (a, b, c) = if self.n == 1 {
            (cos_t, sin_t, 0.0)
        } else {
            let (sin_p, cos_p) = self.phi[j_phi].sin_cos();
            (sin_p * cos_t, sin_p * sin_t, cos_p)
        };
        [a * normal[0], a * normal[1], b, c]
    }
}

/// Structured embedded tube mesh with per-node positions and per-slice
/// analytic channels (spine sample, tube radius, twist factor).
#[derive(Debug, Clone)]
pub struct EmbeddedMesh {
    pub spec: Option<HookSpec>,
    /// Construction parameter at every slice (the coordinate the profile,
    /// twist and slice labels are defined in). Not uniformly spaced for hook
    /// meshes: slices are placed uniformly in arclength.
    pub s: Vec<f64>,
    /// Spine arclength at every slice; uniformly spaced, the chart
    /// coordinate every finite-difference consumer must use. The raw spine
    /// parameterization changes speed between segments, so differencing in
    /// `s` would see spurious metric kinks.
    pub arc: Vec<f64>,
    pub fiber: FiberGrid,
    /// Position of node `(i, j)` at `i * fiber.count() + j` in R^4.
    pub positions: Vec<[f64; 4]>,
    /// Spine sample at every slice (straight tubes carry a trivial frame).
    pub spine: Vec<SpineSample>,
    /// Tube radius r at every slice.
    pub radius: Vec<f64>,
    /// Radius derivative dr per unit spine arclength at every slice.
    pub radius_d1: Vec<f64>,
    /// Twist factor t(s) = beta(s) * L_st augmenting the theta component.
    pub twist: Vec<f64>,
}

impl EmbeddedMesh {
    pub fn slice_count(&self) -> usize {
        self.s.len()
    }

    pub fn index(&self, i: usize, j_phi: usize, j_theta: usize) -> usize {
        i * self.fiber.count() + self.fiber.index(j_phi, j_theta)
    }

    /// Positions of the fiber nodes on slice `i`.
    pub fn slice_positions(&self, i: usize) -> &[[f64; 4]] {
        let c = self.fiber.count();
        &self.positions[i * c..(i + 1) * c]
    }

    /// Centroid of slice `i` in R^4.
    pub fn slice_centroid(&self, i: usize) -> [f64; 4] {
        let nodes = self.slice_positions(i);
        let mut c = [0.0; 4];
        for p in nodes {
            for k in 0..4 {
                c[k] += p[k];
            }
        }
        for v in &mut c {
            *v /= nodes.len() as f64;
        }
        c
    }

    /// Largest deviation, over all nodes, between the stored analytic slice
    /// data (spine point, tube radius) and the same quantities recomputed
    /// from the raw positions. Near machine precision for a valid mesh.
    pub fn reconstruction_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.slice_count() {
            let c = self.slice_centroid(i);
            let p = self.spine[i].point;
            let center_err = ((c[0] - p[0]).powi(2)
                + (c[1] - p[1]).powi(2)
                + c[2] * c[2]
                + c[3] * c[3])
                .sqrt();
            worst = worst.max(center_err);
            for q in self.slice_positions(i) {
                let d = ((q[0] - p[0]).powi(2)
                    + (q[1] - p[1]).powi(2)
                    + q[2] * q[2]
                    + q[3] * q[3])
                    .sqrt();
                worst = worst.max((d - self.radius[i]).abs());
            }
        }
        worst
    }

    /// Construction parameter at spine arclength `a`, by linear
    /// interpolation of the per-slice channels.
    pub fn param_of_arc(&self, a: f64) -> f64 {
        interp_channel(&self.arc, &self.s, a)
    }

    /// Spine arclength at construction parameter `p`.
    pub fn arc_of_param(&self, p: f64) -> f64 {
        interp_channel(&self.s, &self.arc, p)
    }

    /// Shortest ambient distance between nodes of two slices; used by the
    /// self-intersection guard and the separation predicate.
    pub fn slice_distance(&self, i: usize, j: usize) -> f64 {
        let mut best = f64::INFINITY;
        for p in self.slice_positions(i) {
            for q in self.slice_positions(j) {
                let d2 = (0..4).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>();
                best = best.min(d2);
            }
        }
        best.sqrt()
    }
}

/// Piecewise-linear interpolation of channel `ys` against strictly
/// increasing abscissae `xs`, clamped to the channel range.
fn interp_channel(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let k = xs.partition_point(|&v| v < x).max(1);
    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + w * (ys[k] - ys[k - 1])
}

/// Builds the hook tube mesh: nodes at spine(s) + r(s) * fiber direction with
/// r = d0 * phi, over `n_s + 1` slices placed uniformly in spine arclength.
pub fn build_hook_mesh(
    spec: &HookSpec,
    n_s: usize,
    n_theta: usize,
    n_phi: usize,
) -> Result<EmbeddedMesh> {
    spec.validate()?;
    if n_s < 16 {
        return Err(HookError::Resolution(format!(
            "need at least 16 slices along the spine, got {n_s}"
        )));
    }
    let fiber = FiberGrid::new(spec.n, n_theta, n_phi)?;
    let spine_fn = SpineFn::new(spec.l)?;
    let prof = ProfileFn::new(spec)?;
    // Embeddedness inside the bend: tube radius (including the bump
    // amplitude) must stay below the focal radius 1/max|kappa| of the spine.
    let r_max = spec.d0 * (1.0 + spec.eps1);
    let focal = 1.0 / spine_fn.max_kappa();
    if r_max >= 0.95 * focal {
        return Err(HookError::Infeasible(format!(
            "maximal tube radius {r_max:.3} reaches the bend focal radius {focal:.3}"
        )));
    }

    // Arclength table over a fine uniform parameter grid. The spine speed
    // jumps at the segment boundaries s = 1, 3 and at the bend-piece edges
    // (multiples of 1/6 in the bend parameter); with `fine` divisible by 24
    // those all sit on cell edges, so midpoint-rule speeds never sample a
    // jump and each cell integrates a smooth integrand.
    let fine = (8 * n_s).max(4096).next_multiple_of(24);
    let speed_at = |s: f64| {
        let d = spine_fn.eval_derivs(s);
        d[0][1].hypot(d[1][1])
    };
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    let h_fine = 4.0 / fine as f64;
    for j in 1..=fine {
        let mid = (j as f64 - 0.5) * h_fine;
        cum.push(cum[j - 1] + speed_at(mid) * h_fine);
    }
    let total = cum[fine];

    let count = (n_s + 1) * fiber.count();
    let mut mesh = EmbeddedMesh {
        spec: Some(*spec),
        s: Vec::with_capacity(n_s + 1),
        arc: Vec::with_capacity(n_s + 1),
        fiber,
        positions: Vec::with_capacity(count),
        spine: Vec::with_capacity(n_s + 1),
        radius: Vec::with_capacity(n_s + 1),
        radius_d1: Vec::with_capacity(n_s + 1),
        twist: Vec::with_capacity(n_s + 1),
    };
    let mut ptr = 0usize;
    for i in 0..=n_s {
        let target = total * i as f64 / n_s as f64;
        while ptr + 1 < fine && cum[ptr + 1] < target {
            ptr += 1;
        }
        let s = if i == 0 {
            0.0
        } else if i == n_s {
            4.0
        } else {
            let w = (target - cum[ptr]) / (cum[ptr + 1] - cum[ptr]);
            (ptr as f64 + w) * h_fine
        };
        let sample = spine_fn.sample(s);
        let p = prof.eval(s);
        let r = spec.d0 * p[0];
        mesh.s.push(s);
        mesh.arc.push(target);
        mesh.spine.push(sample);
        mesh.radius.push(r);
        mesh.radius_d1.push(spec.d0 * p[1] / speed_at(s));
        mesh.twist.push(spec.l_st * twist_bump(s));
        let n_phi_eff = mesh.fiber.phi.len().max(1);
        for j_phi in 0..n_phi_eff {
            for j_theta in 0..mesh.fiber.theta.len() {
                let w = mesh.fiber.direction(sample.normal, j_phi, j_theta);
                mesh.positions.push([
                    sample.point[0] + r * w[0],
                    sample.point[1] + r * w[1],
                    r * w[2],
                    r * w[3],
                ]);
            }
        }
    }
    Ok(mesh)
}

/// Builds a straight tube along the y-axis with a user radius profile sampled
/// at `n_s + 1` uniform slices over a spine of the given length.
pub fn build_straight_tube_mesh<F: Fn(f64) -> (f64, f64)>(
    radius: F,
    length: f64,
    n: usize,
    n_s: usize,
    n_theta: usize,
    n_phi: usize,
) -> Result<EmbeddedMesh> {
    if !(length > 0.0) {
        return Err(HookError::Parameter(format!(
            "tube length must be > 0, got {length}"
        )));
    }
    if n_s < 16 {
        return Err(HookError::Resolution(format!(
            "need at least 16 slices along the tube, got {n_s}"
        )));
    }
    let fiber = FiberGrid::new(n, n_theta, n_phi)?;
    let count = (n_s + 1) * fiber.count();
    let mut mesh = EmbeddedMesh {
        spec: None,
        s: Vec::with_capacity(n_s + 1),
        arc: Vec::with_capacity(n_s + 1),
        fiber,
        positions: Vec::with_capacity(count),
        spine: Vec::with_capacity(n_s + 1),
        radius: Vec::with_capacity(n_s + 1),
        radius_d1: Vec::with_capacity(n_s + 1),
        twist: Vec::with_capacity(n_s + 1),
    };
    for i in 0..=n_s {
        let s = length * i as f64 / n_s as f64;
        let (r, dr) = radius(s);
        if !(r > 0.0) {
            return Err(HookError::Parameter(format!(
                "tube radius must stay positive, got {r} at s = {s}"
            )));
        }
        let sample = SpineSample {
            s,
            point: [0.0, s],
            tangent: [0.0, 1.0],
            normal: [-1.0, 0.0],
            kappa: 0.0,
        };
        mesh.s.push(s);
        mesh.arc.push(s);
        mesh.spine.push(sample);
        mesh.radius.push(r);
        mesh.radius_d1.push(dr);
        mesh.twist.push(0.0);
        let n_phi_eff = mesh.fiber.phi.len().max(1);
        for j_phi in 0..n_phi_eff {
            for j_theta in 0..mesh.fiber.theta.len() {
                let w = mesh.fiber.direction(sample.normal, j_phi, j_theta);
                mesh.positions.push([
                    sample.point[0] + r * w[0],
                    sample.point[1] + r * w[1],
                    r * w[2],
                    r * w[3],
                ]);
            }
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(n: usize) -> HookSpec {
        HookSpec::new(3.0, 0.1, 0.05, 0.2, 0.0, n).unwrap()
    }

    #[test]
    fn hook_mesh_reconstruction_is_exact() {
        for n in [1usize, 2] {
            let m = build_hook_mesh(&spec(n), 128, 16, 8).unwrap();
            assert!(m.reconstruction_residual() < 1e-12, "n = {n}");
        }
    }

    fn nearest_slice(m: &EmbeddedMesh, s: f64) -> usize {
        m.s.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - s).abs().partial_cmp(&(b.1 - s).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap()
    }

    #[test]
    fn hook_mesh_radius_tracks_profile() {
        let sp = spec(2);
        let m = build_hook_mesh(&sp, 256, 16, 8).unwrap();
        // Nearest slice to the bump center s = 1.5 -> radius d0 (1 + eps1)
        // (the bump is flat at its top, so the half-spacing offset of the
        // nearest arclength-placed slice costs O(ds^2)).
        let i = nearest_slice(&m, 1.5);
        assert_relative_eq!(m.radius[i], sp.d0 * (1.0 + sp.eps1), epsilon = 1e-4);
        // Anchor s = 1/L -> radius d0.
        let j = nearest_slice(&m, 1.0 / sp.l);
        assert_relative_eq!(m.radius[j], sp.d0, epsilon = 1e-3);
    }

    #[test]
    fn hook_mesh_slices_are_uniform_in_arclength() {
        let m = build_hook_mesh(&spec(1), 256, 16, 0).unwrap();
        let h = m.arc[1] - m.arc[0];
        for w in m.arc.windows(2) {
            assert_relative_eq!(w[1] - w[0], h, epsilon = 1e-12);
        }
        // Arclength increments match the embedded centroid path closely.
        for i in 1..m.slice_count() {
            let a = m.spine[i - 1].point;
            let b = m.spine[i].point;
            let chord = (b[0] - a[0]).hypot(b[1] - a[1]);
            assert!(chord <= h * (1.0 + 1e-3), "slice {i}: chord {chord} vs h {h}");
            assert!(chord >= h * 0.99, "slice {i}: chord {chord} vs h {h}");
        }
        // Round trip of the parameter/arclength maps.
        for &p in &[0.3, 1.2, 2.5, 3.7] {
            assert_relative_eq!(m.param_of_arc(m.arc_of_param(p)), p, epsilon = 1e-9);
        }
    }

    #[test]
    fn twist_channel_is_supported_on_the_bend() {
        let sp = HookSpec::new(3.0, 0.1, 0.05, 0.2, 0.7, 1).unwrap();
        let m = build_hook_mesh(&sp, 256, 16, 0).unwrap();
        for (i, &s) in m.s.iter().enumerate() {
            if !(2.0..=3.0).contains(&s) {
                assert_eq!(m.twist[i], 0.0, "twist leaks outside the bend at s = {s}");
            }
            if (2.2..=2.8).contains(&s) {
                assert_relative_eq!(m.twist[i], 0.7, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn straight_tube_positions() {
        let m = build_straight_tube_mesh(|_| (0.3, 0.0), 2.0, 1, 32, 16, 0).unwrap();
        assert!(m.reconstruction_residual() < 1e-13);
        // First slice node at theta = 0 sits at center + 0.3 * normal.
        let p = m.positions[0];
        assert_relative_eq!(p[0], -0.3, epsilon = 1e-14);
        assert_relative_eq!(p[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn branch_separation_scales_with_branch_gap() {
        let sp = spec(1);
        let m = build_hook_mesh(&sp, 512, 16, 0).unwrap();
        // Slices near s = 0.5 and s = 3.5 sit on opposite branches, two units
        // of spine distance apart minus two tube radii.
        let i = nearest_slice(&m, 0.5);
        let j = nearest_slice(&m, 3.5);
        let d = m.slice_distance(i, j);
        assert!(d > 2.0 - 2.0 * sp.d0 * (1.0 + sp.eps1) - 0.2, "d = {d}");
    }

    #[test]
    fn rejects_fat_tube() {
        // d0 close to the cap with a large bump would graze the focal radius,
        // but the parameter gate fires first.
        assert!(HookSpec::new(3.0, 0.1, 0.05, 0.5, 0.0, 1).is_err());
    }
}
