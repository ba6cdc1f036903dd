//! Small finite-difference, quadrature and fitting helpers shared by the
//! geometry and flow modules. Everything here is second order on uniform grids.

/// Second-order first derivative on a uniform grid (one-sided 3-point stencils
/// at the ends).
pub fn deriv(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "need at least 3 nodes");
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    out
}

/// Periodic second-order first derivative; `values[n-1]` and `values[0]` are
/// distinct nodes (the grid does not repeat the seam node).
pub fn deriv_periodic(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        out[i] = (values[ip] - values[im]) / (2.0 * h);
    }
    out
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.5 * (values[0] + values[n - 1]);
    for v in &values[1..n - 1] {
        s += v;
    }
    s * h
}

/// Trapezoid rule with a per-node weight (e.g. a gauge factor).
pub fn trapezoid_weighted(values: &[f64], weights: &[f64], h: f64) -> f64 {
    let prod: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    trapezoid(&prod, h)
}

/// Least-squares line fit `y = slope * x + intercept`.
/// Returns (slope, intercept, rms residual).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(n >= 2.0, "need at least 2 points to fit a line");
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - (slope * xi + intercept);
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

/// Quintic Hermite interpolant matching value, first and second derivative at
/// both ends of `[0, len]`. Returns value and first two derivatives at `t`.
#[derive(Debug, Clone, Copy)]
pub struct QuinticJoin {
    coeff: [f64; 6],
    len: f64,
}

impl QuinticJoin {
    pub fn new(len: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        assert!(len > 0.0);
        // Work on the unit interval with scaled derivatives.
        let (p0, v0, a0) = (left[0], left[1] * len, left[2] * len * len);
        let (p1, v1, a1) = (right[0], right[1] * len, right[2] * len * len);
        let c0 = p0;
        let c1 = v0;
        let c2 = 0.5 * a0;
        // Solve for c3..c5 from the right-end conditions.
        let r0 = p1 - (c0 + c1 + c2);
        let r1 = v1 - (c1 + 2.0 * c2);
        let r2 = a1 - 2.0 * c2;
        let c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let c4 = -15.0 * r0 + 7.0 * r1 - r2;
        let c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        QuinticJoin {
            coeff: [c0, c1, c2, c3, c4, c5],
            len,
        }
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        let u = (t / self.len).clamp(0.0, 1.0);
        let c = &self.coeff;
        let val = c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * (c[4] + u * c[5]))));
        let d1 = c[1]
            + u * (2.0 * c[2] + u * (3.0 * c[3] + u * (4.0 * c[4] + u * 5.0 * c[5])));
        let d2 = 2.0 * c[2] + u * (6.0 * c[3] + u * (12.0 * c[4] + u * 20.0 * c[5]));
        [val, d1 / self.len, d2 / (self.len * self.len)]
    }
}

/// Smooth transition equal to 0 for `x <= 0` and 1 for `x >= 1`, C^infinity.
pub fn smooth_step(x: f64) -> f64 {
    fn g(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    let a = g(x);
    let b = g(1.0 - x);
    a / (a + b)
}

/// Value and first two derivatives of [`smooth_step`].
pub fn smooth_step_derivs(x: f64) -> [f64; 3] {
    if x <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if x >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    let y = 1.0 - x;
    let ap = a / (x * x);
    let bp = -b / (y * y);
    let app = a / x.powi(4) - 2.0 * a / x.powi(3);
    let bpp = b / y.powi(4) - 2.0 * b / y.powi(3);
    let d = a + b;
    let dp = ap + bp;
    let dpp = app + bpp;
    let v = a / d;
    let v1 = (ap * d - a * dp) / (d * d);
    let v2 = (app * d - a * dpp) / (d * d) - 2.0 * dp * (ap * d - a * dp) / (d * d * d);
    [v, v1, v2]
}

/// Monotone-ready cubic (Catmull-Rom) interpolation of `y` sampled on the
/// uniform grid `[0, 1, ..., n-1] * h`, evaluated at `t` (clamped).
pub fn cubic_interp(y: &[f64], h: f64, t: f64) -> f64 {
    let n = y.len();
    assert!(n >= 2);
    let s = (t / h).clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n - 2);
    let u = s - i as f64;
    let y0 = if i == 0 { 2.0 * y[0] - y[1] } else { y[i - 1] };
    let y1 = y[i];
    let y2 = y[i + 1];
    let y3 = if i + 2 < n {
        y[i + 2]
    } else {
        2.0 * y[n - 1] - y[n - 2]
    };
    let a = -0.5 * y0 + 1.5 * y1 - 1.5 * y2 + 0.5 * y3;
    let b = y0 - 2.5 * y1 + 2.0 * y2 - 0.5 * y3;
    let c = -0.5 * y0 + 0.5 * y2;
    ((a * u + b) * u + c) * u + y1
}

/// Observed convergence order from three errors on a grid ladder with
/// refinement factor 2: log2(e1/e2) averaged with log2(e2/e3) when available.
pub fn observed_order(errors: &[f64]) -> f64 {
    assert!(errors.len() >= 2);
    let mut orders = Vec::new();
    for w in errors.windows(2) {
        if w[0] > 0.0 && w[1] > 0.0 {
            orders.push((w[0] / w[1]).log2());
        }
    }
    if orders.is_empty() {
        0.0
    } else {
        orders.iter().sum::<f64>() / orders.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deriv_is_second_order_on_sine() {
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let h = 1.0 / n as f64;
            let vals: Vec<f64> = (0..=n).map(|i| (i as f64 * h).sin()).collect();
            let d = deriv(&vals, h);
            let err: f64 = (0..=n)
                .map(|i| (d[i] - (i as f64 * h).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(observed_order(&errs) > 1.7);
    }

    #[test]
    fn quintic_join_matches_endpoints() {
        let j = QuinticJoin::new(0.7, [1.0, 0.2, -0.3], [2.0, -0.1, 0.4]);
        let l = j.eval(0.0);
        let r = j.eval(0.7);
        assert_relative_eq!(l[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(l[1], 0.2, epsilon = 1e-10);
        assert_relative_eq!(l[2], -0.3, epsilon = 1e-9);
        assert_relative_eq!(r[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(r[1], -0.1, epsilon = 1e-9);
        assert_relative_eq!(r[2], 0.4, epsilon = 1e-8);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let (s, b, r) = linear_fit(&x, &y);
        assert_relative_eq!(s, 3.0, epsilon = 1e-12);
        assert_relative_eq!(b, -1.0, epsilon = 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn smooth_step_plateaus() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.1), 1.0);
        assert!(smooth_step(0.5) > 0.0 && smooth_step(0.5) < 1.0);
    }
}
