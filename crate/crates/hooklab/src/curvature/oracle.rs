//! Independent curvature oracle for embedded tube meshes.
//!
//! Knows nothing about rotational symmetry: it differences the raw node
//! positions to get the induced metric in the (s, phi, theta) chart, applies
//! the twist augmentation to the theta leg, and assembles Christoffel
//! symbols, the Riemann tensor, Ricci and scalar curvature by further finite
//! differencing of the metric grid.
//!
//! Circle-fiber meshes are treated as a flat product with a dummy middle
//! coordinate, which leaves every reported curvature unchanged.

use crate::error::{HookError, Result};
use crate::hookgen::EmbeddedMesh;

/// Intrinsic curvature of an embedded mesh per grid node.
#[derive(Debug, Clone)]
pub struct EmbeddedCurvature {
    pub ns: usize,
    pub nphi: usize,
    pub ntheta: usize,
    pub scalar: Vec<f64>,
    /// Unit-frame diagonal Ricci entries (s, phi, theta).
    pub ricci: Vec<[f64; 3]>,
    /// Coordinate-plane sectional curvatures: (s,phi), (s,theta),
    /// (phi,theta). The phi entries are zero for circle fibers.
    pub sectional: Vec<[f64; 3]>,
    /// max |sectional| over the genuine planes of the mesh.
    pub rm_norm: Vec<f64>,
    /// s-slices at each end where one-sided stencils degrade the order.
    pub margin_s: usize,
    /// phi cells skipped at each fiber pole: the chart degenerates there and
    /// the stencil error grows like h^2 / phi^4, so a fixed polar angle
    /// (not a fixed cell count) must be excluded.
    pub margin_phi: usize,
}

impl EmbeddedCurvature {
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nphi + j) * self.ntheta + k
    }

    /// Iterator over node indices away from the one-sided boundary stencils.
    pub fn interior_nodes(&self) -> Vec<usize> {
        let m = self.margin_s;
        let jlo = if self.nphi > 1 { self.margin_phi } else { 0 };
        let jhi = if self.nphi > 1 { self.nphi - self.margin_phi } else { 1 };
        let mut out = Vec::new();
        for i in m..self.ns - m {
            for j in jlo..jhi {
                for k in 0..self.ntheta {
                    out.push(self.idx(i, j, k));
                }
            }
        }
        out
    }

    pub fn interior_max_rm(&self) -> f64 {
        self.interior_nodes()
            .into_iter()
            .map(|p| self.rm_norm[p])
            .fold(0.0, f64::max)
    }

    pub fn interior_min_scalar(&self) -> f64 {
        self.interior_nodes()
            .into_iter()
            .map(|p| self.scalar[p])
            .fold(f64::INFINITY, f64::min)
    }
}

const DIM: usize = 3;

struct Grid {
    ns: usize,
    nphi: usize,
    ntheta: usize,
    h: [f64; 3],
}

impl Grid {
    fn count(&self) -> usize {
        self.ns * self.nphi * self.ntheta
    }
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nphi + j) * self.ntheta + k
    }

    /// Derivative of a channel along dimension `d` at (i, j, k): central in
    /// the interior, one-sided second order at s/phi ends, periodic in theta.
    fn diff(&self, c: &[f64], d: usize, i: usize, j: usize, k: usize) -> f64 {
        let h = self.h[d];
        let at = |i: usize, j: usize, k: usize| c[self.idx(i, j, k)];
        match d {
            0 => {
                if i == 0 {
                    (-1.5 * at(0, j, k) + 2.0 * at(1, j, k) - 0.5 * at(2, j, k)) / h
                } else if i == self.ns - 1 {
                    (1.5 * at(i, j, k) - 2.0 * at(i - 1, j, k) + 0.5 * at(i - 2, j, k)) / h
                } else {
                    (at(i + 1, j, k) - at(i - 1, j, k)) / (2.0 * h)
                }
            }
            1 => {
                if self.nphi == 1 {
                    0.0
                } else if j == 0 {
                    (-1.5 * at(i, 0, k) + 2.0 * at(i, 1, k) - 0.5 * at(i, 2, k)) / h
                } else if j == self.nphi - 1 {
                    (1.5 * at(i, j, k) - 2.0 * at(i, j - 1, k) + 0.5 * at(i, j - 2, k)) / h
                } else {
                    (at(i, j + 1, k) - at(i, j - 1, k)) / (2.0 * h)
                }
            }
            _ => {
                let kp = (k + 1) % self.ntheta;
                let km = (k + self.ntheta - 1) % self.ntheta;
                (at(i, j, kp) - at(i, j, km)) / (2.0 * h)
            }
        }
    }
}

fn sym_index(a: usize, b: usize) -> usize {
    // (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

fn invert_sym3(g: [f64; 6]) -> Result<[f64; 6]> {
    let m = [
        [g[0], g[1], g[2]],
        [g[1], g[3], g[4]],
        [g[2], g[4], g[5]],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return Err(HookError::Invariant("degenerate induced metric".into()));
    }
    let inv = |r: usize, c: usize| -> f64 {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        (m[c1][r1] * m[c2][r2] - m[c1][r2] * m[c2][r1]) / det
    };
    Ok([
        inv(0, 0),
        inv(0, 1),
        inv(0, 2),
        inv(1, 1),
        inv(1, 2),
        inv(2, 2),
    ])
}

/// Runs the full finite-difference curvature assembly on a mesh.
pub fn embedded_curvature(mesh: &EmbeddedMesh) -> Result<EmbeddedCurvature> {
    let n = mesh.fiber.n;
    let ns = mesh.slice_count();
    let nphi = if n == 2 { mesh.fiber.phi.len() } else { 1 };
    let ntheta = mesh.fiber.theta.len();
    if ns < 5 || ntheta < 5 || (n == 2 && nphi < 5) {
        return Err(HookError::Resolution(
            "curvature assembly needs at least 5 nodes per mesh dimension".into(),
        ));
    }
    let grid = Grid {
        ns,
        nphi,
        ntheta,
        h: [
            mesh.arc[1] - mesh.arc[0],
            if n == 2 {
                std::f64::consts::PI / nphi as f64
            } else {
                1.0
            },
            2.0 * std::f64::consts::PI / ntheta as f64,
        ],
    };
    let count = grid.count();

    // Stage 1: induced metric from position differences, plus twist.
    let pos = |i: usize, j: usize, k: usize| mesh.positions[mesh.index(i, j, k)];
    let mut metric = vec![[0.0; 6]; count];
    // Position channels for differencing.
    let mut xyz = [vec![0.0; count], vec![0.0; count], vec![0.0; count], vec![0.0; count]];
    for i in 0..ns {
        for j in 0..nphi {
            for k in 0..ntheta {
                let p = pos(i, j, k);
                let idx = grid.idx(i, j, k);
                for c in 0..4 {
                    xyz[c][idx] = p[c];
                }
            }
        }
    }
    for i in 0..ns {
        for j in 0..nphi {
            for k in 0..ntheta {
                let idx = grid.idx(i, j, k);
                let mut tangents = [[0.0; 4]; DIM];
                for d in 0..DIM {
                    for c in 0..4 {
                        tangents[d][c] = grid.diff(&xyz[c], d, i, j, k);
                    }
                }
                let tw = 1.0 + mesh.twist[i];
                for a in 0..DIM {
                    for b in a..DIM {
                        let mut dot = (0..4).map(|c| tangents[a][c] * tangents[b][c]).sum::<f64>();
                        // Dummy middle coordinate for circle fibers.
                        if n == 1 && a == 1 && b == 1 {
                            dot = 1.0;
                        } else if n == 1 && (a == 1 || b == 1) {
                            dot = 0.0;
                        }
                        // Twist scales the theta leg.
                        if b == 2 {
                            dot *= tw;
                            if a == 2 {
                                dot *= tw;
                            }
                        }
                        metric[idx][sym_index(a, b)] = dot;
                    }
                }
            }
        }
    }

    // Stage 2: metric derivatives and Christoffel symbols.
    let mut gch: Vec<Vec<f64>> = (0..6).map(|_| vec![0.0; count]).collect();
    for idx in 0..count {
        for c in 0..6 {
            gch[c][idx] = metric[idx][c];
        }
    }
    // gamma[k][sym(i,j)] flattened as k * 6 + sym.
    let mut gamma = vec![[0.0; 18]; count];
    for i in 0..ns {
        for j in 0..nphi {
            for k in 0..ntheta {
                let idx = grid.idx(i, j, k);
                let ginv = invert_sym3(metric[idx])?;
                let dg = {
                    let mut dg = [[0.0; 6]; DIM];
                    for (d, row) in dg.iter_mut().enumerate() {
                        for (c, slot) in row.iter_mut().enumerate() {
                            *slot = grid.diff(&gch[c], d, i, j, k);
                        }
                    }
                    dg
                };
                for kk in 0..DIM {
                    for a in 0..DIM {
                        for b in a..DIM {
                            let mut sum = 0.0;
                            for l in 0..DIM {
                                let term = dg[a][sym_index(b, l)] + dg[b][sym_index(a, l)]
                                    - dg[l][sym_index(a, b)];
                                sum += ginv[sym_index(kk, l)] * term;
                            }
                            gamma[idx][kk * 6 + sym_index(a, b)] = 0.5 * sum;
                        }
                    }
                }
            }
        }
    }

    // Stage 3: Riemann, Ricci, scalar, coordinate-plane sectionals.
    let mut gammach: Vec<Vec<f64>> = (0..18).map(|_| vec![0.0; count]).collect();
    for idx in 0..count {
        for c in 0..18 {
            gammach[c][idx] = gamma[idx][c];
        }
    }
    let mut out = EmbeddedCurvature {
        ns,
        nphi,
        ntheta,
        scalar: vec![0.0; count],
        ricci: vec![[0.0; 3]; count],
        sectional: vec![[0.0; 3]; count],
        rm_norm: vec![0.0; count],
        margin_s: 3,
        margin_phi: 3.max(nphi.div_ceil(5)),
    };
    for i in 0..ns {
        for j in 0..nphi {
            for k in 0..ntheta {
                let idx = grid.idx(i, j, k);
                let g = metric[idx];
                let ginv = invert_sym3(g)?;
                let gm = &gamma[idx];
                // dgamma[d][r][sym(a,b)]
                let mut dgamma = [[[0.0; 6]; DIM]; DIM];
                for (d, slab) in dgamma.iter_mut().enumerate() {
                    for (r, row) in slab.iter_mut().enumerate() {
                        for (c, slot) in row.iter_mut().enumerate() {
                            *slot = grid.diff(&gammach[r * 6 + c], d, i, j, k);
                        }
                    }
                }
                let gam = |r: usize, a: usize, b: usize| gm[r * 6 + sym_index(a, b)];
                // R^r_{s m n}
                let riem_up = |r: usize, s: usize, m: usize, n2: usize| -> f64 {
                    let mut v = dgamma[m][r][sym_index(n2, s)] - dgamma[n2][r][sym_index(m, s)];
                    for l in 0..DIM {
                        v += gam(r, m, l) * gam(l, n2, s) - gam(r, n2, l) * gam(l, m, s);
                    }
                    v
                };
                let mut ricci = [[0.0; 3]; 3];
                for s in 0..DIM {
                    for n2 in 0..DIM {
                        let mut v = 0.0;
                        for m in 0..DIM {
                            v += riem_up(m, s, m, n2);
                        }
                        ricci[s][n2] = v;
                    }
                }
                let mut scal = 0.0;
                for s in 0..DIM {
                    for n2 in 0..DIM {
                        scal += ginv[sym_index(s, n2)] * ricci[s][n2];
                    }
                }
                out.scalar[idx] = scal;
                for d in 0..DIM {
                    out.ricci[idx][d] = ricci[d][d] / g[sym_index(d, d)];
                }
                // R_{abab} = g_{ar} R^r_{bab}
                let planes = [(0usize, 1usize), (0, 2), (1, 2)];
                for (p, &(a, b)) in planes.iter().enumerate() {
                    let mut low = 0.0;
                    for r in 0..DIM {
                        low += g[sym_index(a, r)] * riem_up(r, b, a, b);
                    }
                    let denom = g[sym_index(a, a)] * g[sym_index(b, b)]
                        - g[sym_index(a, b)] * g[sym_index(a, b)];
                    out.sectional[idx][p] = low / denom;
                }
                out.rm_norm[idx] = if n == 1 {
                    out.sectional[idx][1].abs()
                } else {
                    out.sectional[idx]
                        .iter()
                        .fold(0.0, |acc: f64, &v| acc.max(v.abs()))
                };
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::profile_curvature;
    use crate::hookgen::{build_hook_mesh, build_straight_tube_mesh, HookSpec, ProfileMetric, Topology};
    use approx::assert_relative_eq;

    #[test]
    fn constant_circle_tube_is_flat() {
        let m = build_straight_tube_mesh(|_| (0.3, 0.0), 2.0, 1, 48, 24, 0).unwrap();
        let c = embedded_curvature(&m).unwrap();
        for idx in c.interior_nodes() {
            assert!(c.scalar[idx].abs() < 1e-8, "scalar = {}", c.scalar[idx]);
            assert!(c.rm_norm[idx] < 1e-8);
        }
    }

    #[test]
    fn constant_sphere_tube_matches_product() {
        let r = 0.4;
        let k = 1.0 / (r * r);
        let mut errs = Vec::new();
        for nphi in [16usize, 32] {
            let m = build_straight_tube_mesh(|_| (r, 0.0), 2.0, 2, 32, 24, nphi).unwrap();
            let c = embedded_curvature(&m).unwrap();
            let mut worst: f64 = 0.0;
            for idx in c.interior_nodes() {
                worst = worst.max((c.scalar[idx] - 2.0 * k).abs() / (2.0 * k));
                worst = worst.max((c.sectional[idx][2] - k).abs() / k);
                worst = worst.max(c.sectional[idx][0].abs() / k);
                worst = worst.max(c.sectional[idx][1].abs() / k);
            }
            errs.push(worst);
        }
        // Second-order convergence in the polar spacing.
        assert!(errs[1] < 5e-2, "err at nphi=32: {}", errs[1]);
        assert!(errs[1] < 0.4 * errs[0], "no convergence: {errs:?}");
    }

    #[test]
    fn varying_tube_matches_closed_form() {
        // Surface of revolution: K = -r_ss / r in generator arclength; the
        // closed-form side is a profile metric with gauge sqrt(1 + r'^2).
        let rf = |s: f64| (0.3 + 0.05 * (s).sin(), 0.05 * s.cos());
        let len = 4.0;
        let nodes = 256;
        let m = build_straight_tube_mesh(rf, len, 1, nodes, 32, 0).unwrap();
        let c = embedded_curvature(&m).unwrap();
        let prof = ProfileMetric {
            x: (0..=nodes).map(|i| i as f64 / nodes as f64).collect(),
            gauge: (0..=nodes)
                .map(|i| {
                    let (_, dr) = rf(len * i as f64 / nodes as f64);
                    len * (1.0 + dr * dr).sqrt()
                })
                .collect(),
            radius: (0..=nodes)
                .map(|i| rf(len * i as f64 / nodes as f64).0)
                .collect(),
            n: 1,
            topology: Topology::FixedEnds,
        };
        let f = profile_curvature(&prof).unwrap();
        for i in 5..nodes - 5 {
            let idx = (i * 1) * 32; // theta = 0 node of slice i
            assert_relative_eq!(
                c.sectional[idx][1],
                f.sectional[i][0],
                max_relative = 2e-2,
                epsilon = 1e-4
            );
        }
    }

    #[test]
    fn bend_tube_matches_tube_formula() {
        // Constant-radius tube around a unit-curvature arc:
        // K = -kappa cos(theta) / (r (1 - r kappa cos(theta))).
        let spec = HookSpec::new(3.0, 0.1, 0.0, 0.2, 0.0, 1).unwrap();
        let n_s = 1024;
        let m = build_hook_mesh(&spec, n_s, 32, 0).unwrap();
        let c = embedded_curvature(&m).unwrap();
        let i = m
            .s
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 2.5).abs().partial_cmp(&(b.1 - 2.5).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let r = spec.d0;
        for (k, &th) in m.fiber.theta.iter().enumerate() {
            let idx = i * 32 + k;
            // kappa = +1 with the left normal convention on the arc.
            let expect = -th.cos() / (r * (1.0 - r * th.cos()));
            assert_relative_eq!(c.sectional[idx][1], expect, max_relative = 0.05, epsilon = 0.05);
        }
    }

    #[test]
    fn hook_sphere_tube_branch_is_a_round_product() {
        // eps2 = 0 makes the profile constant outside the bump: on the far
        // branch the n = 2 tube is locally S^2 x line of radius d0.
        let spec = HookSpec::new(3.0, 0.1, 0.0, 0.2, 0.0, 2).unwrap();
        let m = build_hook_mesh(&spec, 256, 16, 24).unwrap();
        let c = embedded_curvature(&m).unwrap();
        let i = m
            .s
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 0.5).abs().partial_cmp(&(b.1 - 0.5).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let k = 1.0 / (spec.d0 * spec.d0);
        for j in 8..24 - 8 {
            for t in 0..16 {
                let idx = (i * 24 + j) * 16 + t;
                assert_relative_eq!(c.scalar[idx], 2.0 * k, max_relative = 4e-2);
            }
        }
    }
}
