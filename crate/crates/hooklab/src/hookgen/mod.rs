//! Constructors for the explicit curves, radius profiles, tube meshes and the
//! symmetric surrogate metrics used by the solvers.

mod mesh;
mod metrics;
mod profile;
mod spine;

pub use mesh::{build_hook_mesh, build_straight_tube_mesh, EmbeddedMesh, FiberGrid};
pub use metrics::{
    build_dumbbell_profile, build_taper_neck_profile, build_twisted_neck, ProfileMetric,
    Topology, TwistShape, TwistedMetric,
};
pub use profile::{build_radius_profile, bump_f, twist_bump, ProfileFn, RadiusProfile};
pub use spine::{build_spine, SpineCurve, SpineFn, SpineSample};

use crate::error::{HookError, Result};

/// Parameters of a hook construction: branch length `L`, bump amplitude
/// `eps1`, profile transition width `eps2`, tube radius `d0`, stretch/twist
/// factor `l_st` and fiber dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HookSpec {
    pub l: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub d0: f64,
    pub l_st: f64,
    pub n: usize,
}

/// The tube stays embedded only strictly inside the focal radius of the bend
/// arc (radius 1); d0 is capped with margin.
pub const D0_MAX: f64 = 0.45;

impl HookSpec {
    pub fn new(l: f64, eps1: f64, eps2: f64, d0: f64, l_st: f64, n: usize) -> Result<Self> {
        let spec = HookSpec {
            l,
            eps1,
            eps2,
            d0,
            l_st,
            n,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every documented range; the error names the failing field.
    pub fn validate(&self) -> Result<()> {
        if !(self.l > 1.0) {
            return Err(HookError::Parameter(format!("L must be > 1, got {}", self.l)));
        }
        if !(self.eps1 > 0.0 && self.eps1 < 0.25) {
            return Err(HookError::Parameter(format!(
                "eps1 must lie in (0, 1/4), got {}",
                self.eps1
            )));
        }
        if !(self.eps2 >= 0.0 && self.eps2 < 0.25) {
            return Err(HookError::Parameter(format!(
                "eps2 must lie in [0, 1/4), got {}",
                self.eps2
            )));
        }
        if !(self.d0 > 0.0 && self.d0 < D0_MAX) {
            return Err(HookError::Parameter(format!(
                "d0 must lie in (0, {D0_MAX}) (inside the focal radius of the bend), got {}",
                self.d0
            )));
        }
        if !(self.l_st >= 0.0) {
            return Err(HookError::Parameter(format!(
                "L_st must be >= 0, got {}",
                self.l_st
            )));
        }
        if self.n != 1 && self.n != 2 {
            return Err(HookError::Parameter(format!(
                "fiber dimension n must be 1 or 2, got {}",
                self.n
            )));
        }
        Ok(())
    }
}
