//! Composite Gauss-Legendre quadrature with dyadic panel refinement.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::Tolerance;
use crate::error::{Error, Result};

/// Refinement stops after 2^MAX_LEVEL panels per axis.
const MAX_LEVEL: u32 = 12;

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Golub-Welsch is overkill here; Newton on P_n from the Chebyshev guess
    /// converges to machine precision in a handful of steps for n <= 256.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one quadrature point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 32-point rule.
    pub fn default_rule() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel estimate of the integral over [a, b], plus the same sum of |f|.
    fn panel<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut s = 0.0;
        let mut s_abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = w * f(mid + half * x);
            s += v;
            s_abs += v.abs();
        }
        (s * half, s_abs * half.abs())
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Quadrature controls: points per panel and the refinement tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub points: usize,
    pub tol: Tolerance,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            points: 32,
            tol: Tolerance::default(),
        }
    }
}

impl QuadOptions {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    fn rule(&self) -> std::borrow::Cow<'static, GaussLegendre> {
        if self.points == 32 {
            std::borrow::Cow::Borrowed(GaussLegendre::default_rule())
        } else {
            std::borrow::Cow::Owned(GaussLegendre::new(self.points))
        }
    }
}

fn converged(prev: f64, cur: f64, magnitude: f64, tol: &Tolerance) -> bool {
    let diff = (cur - prev).abs();
    diff <= tol.rel_tol * cur.abs() || diff <= tol.abs_tol * tol.rel_tol * magnitude
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a > b {
        return Err(Error::domain(format!("integration limits out of order: [{a}, {b}]")));
    }
    Ok(())
}

/// `integral_a^b f(r) dr` with default options.
pub fn integrate_radial<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_radial_with(f, a, b, &QuadOptions::default())
}

/// Composite Gauss-Legendre over 1, 2, 4, ... equal panels until two
/// successive levels agree to `rel_tol`.
pub fn integrate_radial_with<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    check_interval(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let rule = opts.rule();
    let mut prev = f64::NAN;
    for level in 0..=MAX_LEVEL {
        let panels = 1usize << level;
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        let mut magnitude = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            let (s, m) = rule.panel(&mut f, lo, hi);
            total += s;
            magnitude += m;
        }
        if !total.is_finite() {
            return Err(Error::domain("integrand is not finite on the interval"));
        }
        if level > 0 && converged(prev, total, magnitude, &opts.tol) {
            return Ok(total);
        }
        prev = total;
        if level == MAX_LEVEL {
            return Err(Error::Quadrature {
                previous: prev,
                current: total,
            });
        }
    }
    unreachable!()
}

/// `integral_0^phi integral_{r_in}^{r_out} f(r, az) r dr d(az)` with default options.
pub fn integrate_polar_sector<F: FnMut(f64, f64) -> f64>(
    f: F,
    r_in: f64,
    r_out: f64,
    phi: f64,
) -> Result<f64> {
    integrate_polar_sector_with(f, r_in, r_out, phi, &QuadOptions::default())
}

/// Tensor-product Gauss-Legendre over an annulus sector. The polar Jacobian
/// `r` is applied here; callers pass the bare integrand.
pub fn integrate_polar_sector_with<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    r_in: f64,
    r_out: f64,
    phi: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    check_interval(r_in, r_out)?;
    if r_in < 0.0 {
        return Err(Error::domain(format!("inner radius must be >= 0, got {r_in}")));
    }
    if !(phi > 0.0 && phi <= 2.0 * std::f64::consts::PI * (1.0 + 1e-12)) {
        return Err(Error::domain(format!("sector angle must lie in (0, 2pi], got {phi}")));
    }
    if r_in == r_out {
        return Ok(0.0);
    }
    let rule = opts.rule();
    let n = rule.order();
    let mut prev = f64::NAN;
    for level in 0..=MAX_LEVEL {
        let panels = 1usize << level;
        let hr = (r_out - r_in) / panels as f64;
        let ha = phi / panels as f64;
        // node abscissae and weights along each axis for this level
        let mut rs = Vec::with_capacity(panels * n);
        let mut as_ = Vec::with_capacity(panels * n);
        for k in 0..panels {
            let r0 = r_in + hr * k as f64;
            let a0 = ha * k as f64;
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                let r = r0 + 0.5 * hr * (x + 1.0);
                rs.push((r, 0.5 * hr * w * r));
                as_.push((a0 + 0.5 * ha * (x + 1.0), 0.5 * ha * w));
            }
        }
        let mut total = 0.0;
        let mut magnitude = 0.0;
        for &(r, wr) in &rs {
            let mut row = 0.0;
            let mut row_abs = 0.0;
            for &(az, wa) in &as_ {
                let v = wa * f(r, az);
                row += v;
                row_abs += v.abs();
            }
            total += wr * row;
            magnitude += wr.abs() * row_abs;
        }
        if !total.is_finite() {
            return Err(Error::domain("integrand is not finite on the sector"));
        }
        if level > 0 && converged(prev, total, magnitude, &opts.tol) {
            return Ok(total);
        }
        prev = total;
        if level == MAX_LEVEL {
            return Err(Error::Quadrature {
                previous: prev,
                current: total,
            });
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 32, 64] {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let g = GaussLegendre::new(8);
        let mut f = |x: f64| x.powi(15) + 3.0 * x.powi(14) - x.powi(3) + 2.0;
        let (s, _) = g.panel(&mut f, -1.0, 1.0);
        let exact = 3.0 * 2.0 / 15.0 + 4.0;
        assert!((s - exact).abs() < 1e-13);
    }

    #[test]
    fn radial_trivial_cases() {
        assert!((integrate_radial(|r| r, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-14);
        let c = 3.7;
        assert!((integrate_radial(|_| c, 1.5, 4.0).unwrap() - c * 2.5).abs() < 1e-13);
        assert_eq!(integrate_radial(|r| r, 3.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn radial_power_law_antiderivative() {
        let (h, big_r) = (10.0_f64, 250.0_f64);
        let got = integrate_radial(|r| (r * r + h * h).powf(1.5) * r, 0.0, big_r).unwrap();
        let exact = ((big_r * big_r + h * h).powf(2.5) - h.powi(5)) / 5.0;
        assert!(((got - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn radial_errors() {
        assert!(integrate_radial(|r| r, 2.0, 1.0).is_err());
        assert!(integrate_radial(|r| r, 0.0, f64::INFINITY).is_err());
        assert!(integrate_radial(|r| 1.0 / r, 0.0, 1.0).is_err());
    }

    #[test]
    fn sector_area_and_moments() {
        let big_r = 3.0;
        let a = integrate_polar_sector(|_, _| 1.0, 0.0, big_r, 2.0 * PI).unwrap();
        assert!((a - PI * big_r * big_r).abs() < 1e-12);
        let (ri, ro, phi) = (1.0, 2.5, 0.7);
        let a = integrate_polar_sector(|_, _| 1.0, ri, ro, phi).unwrap();
        assert!((a - phi * (ro * ro - ri * ri) / 2.0).abs() < 1e-13);
        let m = integrate_polar_sector(|r, _| r, ri, ro, phi).unwrap();
        assert!((m - phi * (ro.powi(3) - ri.powi(3)) / 3.0).abs() < 1e-13);
    }

    #[test]
    fn sector_angular_integrand() {
        // integral of cos over [0, phi] times annulus radial mass
        let (ri, ro, phi) = (0.5, 1.5, 1.2);
        let got = integrate_polar_sector(|_, az| az.cos(), ri, ro, phi).unwrap();
        let exact = phi.sin() * (ro * ro - ri * ri) / 2.0;
        assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn sector_rejects_bad_angle() {
        assert!(integrate_polar_sector(|_, _| 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(integrate_polar_sector(|_, _| 1.0, 0.0, 1.0, 7.0).is_err());
        assert!(integrate_polar_sector(|_, _| 1.0, -1.0, 1.0, 1.0).is_err());
    }
}
