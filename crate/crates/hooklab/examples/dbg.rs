use hooklab::curvature::embedded_curvature;
use hooklab::hookgen::{build_hook_mesh, HookSpec};
fn main() {
    for n_s in [256usize, 512, 1024] {
        let spec = HookSpec::new(3.0, 0.05, 0.05, 0.1, 0.0, 2).unwrap();
        let mesh = build_hook_mesh(&spec, n_s, 16, 24).unwrap();
        let c = embedded_curvature(&mesh).unwrap();
        let mut min_sec = f64::INFINITY;
        let mut at = 0usize;
        for idx in c.interior_nodes() {
            let p = mesh.positions[idx];
            if p[0] > 0.0 && p[1] < -1.0 {
                for v in &c.sectional[idx] {
                    if *v < min_sec {
                        min_sec = *v;
                        at = idx;
                    }
                }
            }
        }
        let i = at / (24 * 16);
        println!(
            "n_s {n_s}: min sectional {min_sec:.4e} at slice {i} s={:.5} r={:.6} r'={:.4e}",
            mesh.s[i], mesh.radius[i], mesh.radius_d1[i]
        );
    }
}
