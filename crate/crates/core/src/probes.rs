//! Oscillating boundary probe families.
//!
//! A probe concentrates at a boundary anchor `P`: in chart coordinates its
//! trace is `amp * eta(M |x'|) exp(i N xi' x')`, a bump of width `1/M`
//! oscillating at frequency `N |xi'|`. Two normalizations are used: the
//! point-value family (`gamma` mode, `M = N^{1/(1+theta)}`) whose paired
//! measurement converges to `gamma(P)`, and the derivative family (`grad`
//! mode, `M = sqrt(N)`, unit-size norms) whose filtered average produces the
//! boundary derivative combination.

use crate::boundary::{BoundaryFunction, SupportHint};
use crate::geometry::{BoundaryChart, FrameAtP, Vec2};
use crate::{CoreError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Smooth plateau cutoff: `eta = 1` on `|t| <= 1/2`, `0` on `|t| >= 1`,
/// strictly monotone in between, all derivatives vanishing at the seams.
pub fn eta(t: f64) -> f64 {
    let t = t.abs();
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        ramp(2.0 * t - 1.0)
    }
}

/// Derivative of [`eta`].
pub fn eta_deriv(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 || a >= 1.0 {
        0.0
    } else {
        2.0 * t.signum() * ramp_deriv(2.0 * a - 1.0)
    }
}

/// Transition sharpness of the cutoff ramp; the gentle slope concentrates
/// the spectral band (tail mass drops below 1e-3 about `13 M` modes past a
/// probe's carrier).
const RAMP_BETA: f64 = 0.5;

/// `s(beta (1/(1-x) - 1/x))` with the logistic `s`: a smooth descent from 1
/// at `x = 0` to 0 at `x = 1` with flat seams.
fn ramp(x: f64) -> f64 {
    let z = RAMP_BETA * (1.0 / (1.0 - x) - 1.0 / x);
    1.0 / (1.0 + z.exp())
}

fn ramp_deriv(x: f64) -> f64 {
    let z = RAMP_BETA * (1.0 / (1.0 - x) - 1.0 / x);
    let s = 1.0 / (1.0 + z.exp());
    let dz = RAMP_BETA * (1.0 / ((1.0 - x) * (1.0 - x)) + 1.0 / (x * x));
    // d/dx 1/(1+e^z) = -e^z/(1+e^z)^2 dz = -s(1-s) dz.
    -s * (1.0 - s) * dz
}

/// The plateau cutoff with its squared integral `I_eta = int eta(|x|)^2 dx`
/// precomputed to 1e-12 by adaptive Simpson quadrature.
#[derive(Debug, Clone, Copy)]
pub struct CutoffEta {
    integral_sq: f64,
}

impl Default for CutoffEta {
    fn default() -> Self {
        Self::new()
    }
}

impl CutoffEta {
    pub fn new() -> Self {
        static I_ETA: OnceLock<f64> = OnceLock::new();
        let integral_sq = *I_ETA.get_or_init(|| {
            // eta^2 = 1 on [-1/2, 1/2]; the transition is integrated
            // adaptively on each side.
            1.0 + 2.0 * adaptive_simpson(&|t| eta(t) * eta(t), 0.5, 1.0, 1e-13, 40)
        });
        CutoffEta { integral_sq }
    }

    pub fn eval(&self, t: f64) -> f64 {
        eta(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        eta_deriv(t)
    }

    /// `I_eta` in dimension two (a one-dimensional integral).
    pub fn integral_sq(&self) -> f64 {
        self.integral_sq
    }
}

pub(crate) fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    let whole = simpson(f, a, b);
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, tol / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, tol / 2.0, depth - 1)
    }
}

/// Concentration rule tying `M` to `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MRule {
    /// `M = N^{1/(1+theta)}` — the point-value recovery family.
    Gamma { theta: f64 },
    /// `M = sqrt(N)` — the derivative recovery family.
    Grad,
}

/// Boundary grid sizing for probe sampling.
#[derive(Debug, Clone, Copy)]
pub struct GridRule {
    /// Lower bound on the resolved basis size (from the noise truncation).
    pub k_floor: usize,
    /// Oversampling factor relative to the larger of `k_floor` and the
    /// probe's mode count.
    pub oversample: usize,
}

impl Default for GridRule {
    fn default() -> Self {
        GridRule {
            k_floor: 0,
            oversample: 8,
        }
    }
}

/// Everything needed to construct probes at one anchor.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    pub chart: BoundaryChart,
    pub frame: FrameAtP,
    pub m_rule: MRule,
    pub eta: CutoffEta,
    pub grid: GridRule,
}

impl ProbeSpec {
    pub fn new(chart: BoundaryChart, frame: FrameAtP, m_rule: MRule) -> Self {
        ProbeSpec {
            chart,
            frame,
            m_rule,
            eta: CutoffEta::new(),
            grid: GridRule::default(),
        }
    }

    pub fn with_grid(mut self, grid: GridRule) -> Self {
        self.grid = grid;
        self
    }

    /// Concentration `M` for oscillation index `N`.
    pub fn m_of(&self, n: f64) -> f64 {
        match self.m_rule {
            MRule::Gamma { theta } => n.powf(1.0 / (1.0 + theta)),
            MRule::Grad => n.sqrt(),
        }
    }

    /// Point-value normalization `C_P = ((1 + phi'(p')^2) I_eta)^{-1/2}`.
    pub fn c_p(&self) -> f64 {
        let s = self.chart.slope_at_anchor;
        1.0 / ((1.0 + s * s) * self.eta.integral_sq()).sqrt()
    }

    /// Derivative normalization
    /// `C'_P = sqrt(2) (1 + phi'(p')^2)^{-1/4} I_eta^{-1/2}`.
    pub fn c_p_prime(&self) -> f64 {
        let s = self.chart.slope_at_anchor;
        2.0f64.sqrt() * (1.0 + s * s).powf(-0.25) / self.eta.integral_sq().sqrt()
    }

    /// Boundary grid size for a probe at oscillation index `N`.
    pub fn grid_size(&self, n: f64) -> usize {
        let l = self.chart.domain().total_length();
        let modes = (n * self.frame.xi_tangential_norm() * l / (2.0 * PI)).ceil() as usize;
        let base = self.grid.k_floor.max(modes).max(16);
        let nb = self.grid.oversample * base;
        nb + nb % 2
    }
}

/// Probe amplitude prefactor for each family (dimension two).
fn amplitude(spec: &ProbeSpec, n: f64) -> f64 {
    let m = spec.m_of(n);
    let half_dm1 = ((crate::DIM - 1) as f64) / 2.0;
    match spec.m_rule {
        MRule::Gamma { .. } => n.powf(-0.5) * m.powf(half_dm1) * spec.c_p(),
        MRule::Grad => m.powf(half_dm1) * spec.c_p_prime(),
    }
}

fn build_probe(spec: &ProbeSpec, n: f64) -> Result<BoundaryFunction> {
    let m = spec.m_of(n);
    let support = 1.0 / m;
    if support > spec.chart.radius {
        return Err(CoreError::ProbeSupport {
            support,
            radius: spec.chart.radius,
        });
    }
    let amp = amplitude(spec, n);
    let xi_t = spec.frame.xi[0];
    let chart = spec.chart.clone();
    let domain = chart.domain().clone();
    let l = domain.total_length();
    let s_anchor = domain.arclength_of(chart.theta_anchor);

    // Arclength half width of the support: |x'| <= 1/M stretched by
    // ds/dx' = sqrt(1 + phi'^2), padded slightly.
    let stretch = (0..9)
        .map(|k| chart.arclength_stretch(-support + 2.0 * support * k as f64 / 8.0))
        .fold(1.0f64, f64::max);
    let s_half = support * stretch * 1.05;

    let trace = move |s: f64| -> Complex64 {
        let mut ds = (s - s_anchor).rem_euclid(l);
        if ds > l / 2.0 {
            ds -= l;
        }
        if ds.abs() > s_half {
            return Complex64::new(0.0, 0.0);
        }
        let theta = domain.theta_of_arclength(s);
        let x1 = chart.chart_coord_of_theta(theta);
        if x1.abs() >= support {
            return Complex64::new(0.0, 0.0);
        }
        let phase = n * xi_t * x1;
        amp * eta(m * x1.abs()) * Complex64::new(0.0, phase).exp()
    };

    let nb = spec.grid_size(n);
    let f = BoundaryFunction::from_fn(spec.chart.domain(), nb, trace).with_support(SupportHint {
        s_center: s_anchor,
        s_halfwidth: s_half,
        freq: n * xi_t.abs(),
    });
    Ok(f)
}

/// Point-value probe `f_N` (gamma mode).
pub fn probe_gamma(spec: &ProbeSpec, n: f64) -> Result<BoundaryFunction> {
    debug_assert!(matches!(spec.m_rule, MRule::Gamma { .. }));
    if n < 1.0 {
        return Err(CoreError::InvalidParameter(
            "probe index must be >= 1".into(),
        ));
    }
    build_probe(spec, n)
}

/// Derivative probe `f_{t^2}` (grad mode): `N = t^2`, `M = t`.
pub fn probe_grad(spec: &ProbeSpec, t: f64) -> Result<BoundaryFunction> {
    debug_assert!(matches!(spec.m_rule, MRule::Grad));
    if t < 1.0 {
        return Err(CoreError::InvalidParameter(
            "probe parameter must be >= 1".into(),
        ));
    }
    build_probe(spec, t * t)
}

/// Interior extension value and gradient of the normalized probe envelope
/// `amp * eta(M|x'|) eta(M x_d) exp(N (i xi - e_d) . x)` at a global point,
/// expressed in global coordinates. Zero outside the chart box.
pub fn probe_interior(spec: &ProbeSpec, n: f64, y: Vec2) -> (Complex64, [Complex64; 2]) {
    let zero = (Complex64::new(0.0, 0.0), [Complex64::new(0.0, 0.0); 2]);
    let m = spec.m_of(n);
    let chart = &spec.chart;
    let c = chart.to_chart(y);
    if c[0].abs() >= chart.radius.min(1.0 / m) {
        return zero;
    }
    let x1 = c[0];
    let x2 = c[1] - chart.phi(x1);
    if !(-1e-12..1.0 / m).contains(&x2) {
        return zero;
    }
    let x2 = x2.max(0.0);
    let amp = amplitude(spec, n);
    let (xi1, xi2) = (spec.frame.xi[0], spec.frame.xi[1]);

    let a1 = eta(m * x1);
    let a2 = eta(m * x2);
    let e = Complex64::new(-n * x2, n * (xi1 * x1 + xi2 * x2)).exp();
    let val = amp * a1 * a2 * e;

    // Flattened-coordinate partials.
    let d1_env = m * eta_deriv(m * x1) * a2;
    let d2_env = a1 * m * eta_deriv(m * x2);
    let dx1 = amp * e * (d1_env + a1 * a2 * Complex64::new(0.0, n * xi1));
    let dx2 = amp * e * (d2_env + a1 * a2 * Complex64::new(-n, n * xi2));

    // Chain rule through the flattening, then the chart rotation.
    let slope = chart.phi_prime(x1);
    let dc1 = dx1 - slope * dx2;
    let dc2 = dx2;
    let gx = dc1 * chart.e1[0] + dc2 * chart.e2[0];
    let gy = dc1 * chart.e1[1] + dc2 * chart.e2[1];
    (val, [gx, gy])
}

/// Truncation large enough that probes of this spec resolve at indices up
/// to `n_max`: the baseline truncation rule padded to cover the cutoff's
/// spectral band (`carrier + 14 M` modes).
pub fn probe_truncation(spec: &ProbeSpec, n_max: f64) -> usize {
    let l = spec.chart.domain().total_length();
    let xi = spec.frame.xi_tangential_norm();
    let rule = crate::noise::truncation_rule(n_max, xi, l);
    let band = (n_max * xi * l / (2.0 * PI) + 14.0 * spec.m_of(n_max)).ceil() as usize + 32;
    rule.max(crate::boundary::BoundaryBasis::truncation_covering(band))
}

/// Result of the oscillation decay check between two derivative probes.
#[derive(Debug, Clone, Copy)]
pub struct PairDecay {
    /// `|inner(f_{t^2}, f_{s^2})|`.
    pub inner_abs: f64,
    /// Reference envelope `(t + s + 1) / |t^2 - s^2|` (absent when `t = s`).
    pub bound: Option<f64>,
    /// `inner_abs / bound`.
    pub ratio: Option<f64>,
}

/// Measures how fast probes at distinct parameters decorrelate.
pub fn pair_decay_check(spec: &ProbeSpec, t: f64, s: f64) -> Result<PairDecay> {
    // Both probes must live on one grid fine enough for the larger index.
    let n_max = (t.max(s)) * (t.max(s));
    let mut wide = spec.clone();
    wide.grid.k_floor = wide
        .grid
        .k_floor
        .max((n_max * spec.frame.xi_tangential_norm()) as usize + 16);
    let ft = probe_grad(&wide, t)?;
    let fs = probe_grad(&wide, s)?;
    let p = crate::boundary::inner(&ft, &fs)?;
    if t == s {
        return Ok(PairDecay {
            inner_abs: p.norm(),
            bound: None,
            ratio: None,
        });
    }
    let bound = (t + s + 1.0) / (t * t - s * s).abs();
    Ok(PairDecay {
        inner_abs: p.norm(),
        bound: Some(bound),
        ratio: Some(p.norm() / bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_chart, select_xi, DomainGeometry, Orientation};

    fn disk_spec(m_rule: MRule) -> ProbeSpec {
        let dom = DomainGeometry::unit_disk();
        let chart = build_chart(&dom, 0.0).unwrap();
        let frame = select_xi(&chart, Orientation::CounterClockwise);
        ProbeSpec::new(chart, frame, m_rule)
    }

    #[test]
    fn cutoff_profile_shape() {
        let c = CutoffEta::new();
        assert_eq!(c.eval(0.0), 1.0);
        assert_eq!(c.eval(0.499), 1.0);
        assert_eq!(c.eval(1.0), 0.0);
        assert_eq!(c.eval(1.5), 0.0);
        let mut prev = 1.0;
        for k in 0..=100 {
            let t = 0.5 + 0.5 * k as f64 / 100.0;
            let v = c.eval(t);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!(c.eval(0.5 + 1e-9) > 1.0 - 1e-6);
        assert!(c.eval(1.0 - 1e-9) < 1e-6);
        assert!(c.integral_sq() > 1.0 && c.integral_sq() < 2.0);
    }

    #[test]
    fn cutoff_is_smooth_through_order_four() {
        // Finite-difference derivatives of orders 1..4 stay bounded across
        // the seams; a kink would blow up by orders of magnitude.
        let h = 1e-3;
        let caps = [0.0, 10.0, 300.0, 2.0e4, 2.0e6];
        for order in 1..=4usize {
            let mut max_d = 0.0f64;
            for k in 0..400 {
                let t = 0.3 + 0.9 * k as f64 / 399.0;
                let stencil: &[(f64, f64)] = match order {
                    1 => &[(-0.5, -1.0), (0.5, 1.0)],
                    2 => &[(1.0, -1.0), (-2.0, 0.0), (1.0, 1.0)],
                    3 => &[(-0.5, -2.0), (1.0, -1.0), (-1.0, 1.0), (0.5, 2.0)],
                    _ => &[(1.0, -2.0), (-4.0, -1.0), (6.0, 0.0), (-4.0, 1.0), (1.0, 2.0)],
                };
                let acc: f64 = stencil.iter().map(|&(c, o)| c * eta(t + o * h)).sum();
                max_d = max_d.max((acc / h.powi(order as i32)).abs());
            }
            assert!(max_d < caps[order], "order {order} derivative ~ {max_d}");
        }
    }

    #[test]
    fn eta_deriv_matches_finite_differences() {
        let h = 1e-7;
        for k in 0..200 {
            let t = -1.2 + 2.4 * k as f64 / 199.0;
            if (t.abs() - 0.5).abs() < 1e-3 || (t.abs() - 1.0).abs() < 1e-3 {
                continue;
            }
            let fd = (eta(t + h) - eta(t - h)) / (2.0 * h);
            assert!(
                (fd - eta_deriv(t)).abs() < 1e-5,
                "t = {t}: {fd} vs {}",
                eta_deriv(t)
            );
        }
    }

    #[test]
    fn gamma_probe_norm_decays_like_inverse_n() {
        let spec = disk_spec(MRule::Gamma { theta: 0.5 });
        let mut consts = Vec::new();
        for n in [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0] {
            let f = probe_gamma(&spec, n).unwrap();
            consts.push(f.norm_sqr() * n);
        }
        let c_max = consts.iter().cloned().fold(0.0f64, f64::max);
        let c_min = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(c_max < 1.3 && c_min > 0.7, "constants {consts:?}");
    }

    #[test]
    fn grad_probe_norm_is_order_one() {
        let spec = disk_spec(MRule::Grad);
        let mut norms = Vec::new();
        for t in [4.0, 8.0, 16.0, 32.0, 64.0] {
            let f = probe_grad(&spec, t).unwrap();
            norms.push(f.norm_sqr());
        }
        let max = norms.iter().cloned().fold(0.0f64, f64::max);
        let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min <= 1.5, "norms {norms:?}");
        // The flat-chart normalization gives exactly 2; the disk chart only
        // adds curvature wiggle that fades as the support shrinks.
        assert!((norms[4] - 2.0).abs() < 0.1, "norm {}", norms[4]);
    }

    #[test]
    fn flat_chart_normalization_identities() {
        // Quadrature identities behind the two normalizations on a flat
        // chart (slope zero): the gamma-family squared norm times N is 1 and
        // the grad-family squared norm is 2, for every M.
        let c = CutoffEta::new();
        let i_eta = c.integral_sq();
        for m in [2.0, 7.0, 31.0] {
            let scaled =
                2.0 * adaptive_simpson(&|x: f64| eta(m * x).powi(2), 0.0, 1.0, 1e-13, 40);
            assert!((scaled - i_eta / m).abs() < 1e-11);
            let c_p = 1.0 / i_eta.sqrt();
            assert!((m * c_p * c_p * scaled - 1.0).abs() < 1e-10);
            let c_pp = 2.0f64.sqrt() / i_eta.sqrt();
            assert!((m * c_pp * c_pp * scaled - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn probe_trace_identity() {
        // Probe samples equal the chart formula evaluated at x' = chart
        // abscissa of the boundary point; no leakage from the depth factor.
        let spec = disk_spec(MRule::Gamma { theta: 0.5 });
        let n = 64.0;
        let m = spec.m_of(n);
        let f = probe_gamma(&spec, n).unwrap();
        let dom = spec.chart.domain().clone();
        let l = dom.total_length();
        let amp = n.powf(-0.5) * m.sqrt() * spec.c_p();
        for k in 0..400 {
            let s = l * k as f64 / 400.0;
            let mut ds = s.min(l - s);
            ds = ds.abs();
            let expected = if ds < 0.45 {
                let theta = dom.theta_of_arclength(s);
                let x1 = spec.chart.chart_coord_of_theta(theta);
                if x1.abs() < 1.0 / m {
                    amp * eta(m * x1.abs()) * Complex64::new(0.0, n * spec.frame.xi[0] * x1).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!(
                (f.eval(s) - expected).norm() < 1e-12,
                "trace mismatch at s = {s}"
            );
        }
        // Support diameter 2/M in chart coordinates.
        let hint = f.support().unwrap();
        assert!(hint.s_halfwidth >= 1.0 / m && hint.s_halfwidth < 1.2 / m);
    }

    #[test]
    fn probe_support_exceeding_chart_is_rejected() {
        let spec = disk_spec(MRule::Grad);
        assert!(matches!(
            probe_grad(&spec, 1.0),
            Err(CoreError::ProbeSupport { .. })
        ));
    }

    #[test]
    fn dominant_mode_grows_linearly_in_n() {
        let base = disk_spec(MRule::Gamma { theta: 0.5 });
        let l = base.chart.domain().total_length();
        for n in [32.0, 64.0, 128.0] {
            let k = 8 * (n as usize) + 1;
            let spec = base.clone().with_grid(GridRule {
                k_floor: k,
                oversample: 8,
            });
            let f = probe_gamma(&spec, n).unwrap();
            let coeffs = f.coefficients(k).unwrap();
            let (argmax, _) = coeffs
                .values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm_sqr().partial_cmp(&b.1.norm_sqr()).unwrap())
                .unwrap();
            let mode = crate::boundary::BoundaryBasis::mode_of(argmax);
            let predicted = n * spec.frame.xi[0] * l / (2.0 * PI);
            assert!(
                (mode as f64 - predicted).abs() <= 0.1 * predicted.abs().max(8.0),
                "N = {n}: mode {mode} vs predicted {predicted}"
            );
        }
    }

    #[test]
    fn probe_coefficients_capture_mass_at_probe_truncation() {
        // The padded probe truncation captures at least 99.9% of the
        // squared norm for both families across the desk range.
        for (m_rule, ns) in [
            (MRule::Grad, [16.0, 144.0, 625.0]),
            (MRule::Gamma { theta: 0.5 }, [16.0, 64.0, 256.0]),
        ] {
            let base = disk_spec(m_rule);
            for n in ns {
                let k = probe_truncation(&base, n);
                let spec = base.clone().with_grid(GridRule {
                    k_floor: k,
                    oversample: 8,
                });
                let f = match m_rule {
                    MRule::Grad => probe_grad(&spec, n.sqrt()).unwrap(),
                    MRule::Gamma { .. } => probe_gamma(&spec, n).unwrap(),
                };
                let c = f.coefficients(k).unwrap();
                let mass: f64 = c.values.iter().map(|v| v.norm_sqr()).sum();
                assert!(
                    mass / f.norm_sqr() >= 0.999,
                    "{m_rule:?} N = {n}: captured {}",
                    mass / f.norm_sqr()
                );
            }
        }
    }

    #[test]
    fn pair_decay() {
        let spec = disk_spec(MRule::Grad);
        let same = pair_decay_check(&spec, 8.0, 8.0).unwrap();
        assert!(same.bound.is_none());
        assert!((same.inner_abs - 2.0).abs() < 0.1);

        // One fitted constant bounds a grid of pairs and holds on held-out
        // pairs.
        let mut ratios = Vec::new();
        for i in 0..10 {
            for j in 0..5 {
                let t = 4.0 + 3.0 * i as f64;
                let s = t + 1.0 + 2.0 * j as f64;
                if s > 64.0 {
                    continue;
                }
                let d = pair_decay_check(&spec, t, s).unwrap();
                ratios.push(d.ratio.unwrap());
            }
        }
        assert!(ratios.len() >= 40);
        let fitted = ratios.iter().cloned().fold(0.0f64, f64::max);
        for (t, s) in [(5.5, 9.0), (11.0, 17.0), (23.0, 31.0)] {
            let d = pair_decay_check(&spec, t, s).unwrap();
            assert!(d.ratio.unwrap() <= fitted * 1.2 + 1e-9);
        }

        // |inner| decays as |t - s| grows at fixed t + s.
        let mut prev = f64::INFINITY;
        for (t, s) in [(19.0, 21.0), (17.0, 23.0), (14.0, 26.0), (10.0, 30.0)] {
            let d = pair_decay_check(&spec, t, s).unwrap();
            assert!(d.inner_abs <= prev * 1.1 + 1e-12);
            prev = d.inner_abs;
        }
    }

    #[test]
    fn interior_extension_matches_trace_on_boundary() {
        let spec = disk_spec(MRule::Grad);
        let t = 6.0;
        let f = probe_grad(&spec, t).unwrap();
        let dom = spec.chart.domain().clone();
        let l = dom.total_length();
        for k in 0..100 {
            let s = (-0.15 + 0.3 * k as f64 / 99.0).rem_euclid(l);
            let theta = dom.theta_of_arclength(s);
            let y = dom.boundary_point(theta);
            let (val, _) = probe_interior(&spec, t * t, y);
            let trace = f.eval(s);
            assert!(
                (val - trace).norm() < 1e-10,
                "mismatch at s = {s}: {val} vs {trace}"
            );
        }
    }

    #[test]
    fn interior_gradient_matches_finite_differences() {
        let spec = disk_spec(MRule::Grad);
        let n = 36.0;
        let h = 1e-7;
        let mut checked = 0;
        for k in 0..80 {
            let (u, v) = crate::rng::halton2(k + 5);
            let y = [1.0 - 0.12 * v - 2.0 * h, (u - 0.5) * 0.3];
            if (y[0] * y[0] + y[1] * y[1]).sqrt() >= 1.0 - 2.0 * h {
                continue;
            }
            let (val, g) = probe_interior(&spec, n, y);
            if val.norm() < 1e-14 {
                continue;
            }
            let (vx1, _) = probe_interior(&spec, n, [y[0] + h, y[1]]);
            let (vx0, _) = probe_interior(&spec, n, [y[0] - h, y[1]]);
            let (vy1, _) = probe_interior(&spec, n, [y[0], y[1] + h]);
            let (vy0, _) = probe_interior(&spec, n, [y[0], y[1] - h]);
            let fdx = (vx1 - vx0) / (2.0 * h);
            let fdy = (vy1 - vy0) / (2.0 * h);
            let scale = 1.0 + g[0].norm() + g[1].norm();
            assert!(
                (fdx - g[0]).norm() / scale < 1e-4 && (fdy - g[1]).norm() / scale < 1e-4,
                "gradient mismatch at {y:?}"
            );
            checked += 1;
        }
        assert!(checked > 20);
    }
}
