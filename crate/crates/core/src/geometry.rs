//! Domains, boundary charts and the probe direction.
//!
//! Supported domains are star-shaped perturbations of the unit disk,
//! parameterized by the polar angle. Around any boundary point `P` the
//! boundary is the graph of a function `phi` in a rotated coordinate system
//! whose second axis points into the domain; the flattening map
//! `F(x) = (x', x_d + phi(x'))` then sends the upper half plane locally onto
//! the domain. All probe constructions happen in these chart coordinates.

use crate::{CoreError, Result};
use std::f64::consts::PI;
use std::sync::Arc;

/// Number of table intervals used for the arclength map.
const ARCLENGTH_TABLE: usize = 8192;

/// Relative floor for the chart radius, as a fraction of the diameter.
const CHART_RADIUS_FLOOR: f64 = 1e-3;

/// Maximum admissible graph slope inside a chart.
const MAX_CHART_SLOPE: f64 = 4.0;

/// 2-D point or vector.
pub type Vec2 = [f64; 2];

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

/// Domain shape selector.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    UnitDisk,
    /// `r(theta) = 1 + sum_k (cos_coeffs[k-1] cos(k theta) + sin_coeffs[k-1] sin(k theta))`,
    /// with the perturbation bounded away from `1/2` in magnitude.
    PerturbedDisk {
        cos_coeffs: Vec<f64>,
        sin_coeffs: Vec<f64>,
    },
}

/// A 2-D domain whose boundary is a smooth closed curve given in polar form.
#[derive(Debug, Clone)]
pub struct DomainGeometry {
    kind: DomainKind,
    /// Cumulative arclength at `theta_i = 2 pi i / ARCLENGTH_TABLE`.
    arclength: Vec<f64>,
    total_length: f64,
}

impl DomainGeometry {
    pub fn unit_disk() -> Arc<Self> {
        Self::new(DomainKind::UnitDisk).expect("unit disk is always valid")
    }

    pub fn perturbed_disk(cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Result<Arc<Self>> {
        Self::new(DomainKind::PerturbedDisk {
            cos_coeffs,
            sin_coeffs,
        })
    }

    pub fn new(kind: DomainKind) -> Result<Arc<Self>> {
        if let DomainKind::PerturbedDisk {
            cos_coeffs,
            sin_coeffs,
        } = &kind
        {
            let mass: f64 = cos_coeffs.iter().chain(sin_coeffs).map(|c| c.abs()).sum();
            if mass >= 0.5 {
                return Err(CoreError::InvalidParameter(format!(
                    "perturbation amplitude {mass} must stay below 1/2"
                )));
            }
        }
        let mut dom = DomainGeometry {
            kind,
            arclength: Vec::new(),
            total_length: 0.0,
        };
        dom.build_arclength_table();
        Ok(Arc::new(dom))
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn is_unit_disk(&self) -> bool {
        self.kind == DomainKind::UnitDisk
    }

    /// Polar radius `r(theta)`.
    pub fn radius(&self, theta: f64) -> f64 {
        match &self.kind {
            DomainKind::UnitDisk => 1.0,
            DomainKind::PerturbedDisk {
                cos_coeffs,
                sin_coeffs,
            } => {
                let mut r = 1.0;
                for (k, c) in cos_coeffs.iter().enumerate() {
                    r += c * ((k + 1) as f64 * theta).cos();
                }
                for (k, s) in sin_coeffs.iter().enumerate() {
                    r += s * ((k + 1) as f64 * theta).sin();
                }
                r
            }
        }
    }

    /// `dr/dtheta`.
    pub fn radius_deriv(&self, theta: f64) -> f64 {
        match &self.kind {
            DomainKind::UnitDisk => 0.0,
            DomainKind::PerturbedDisk {
                cos_coeffs,
                sin_coeffs,
            } => {
                let mut dr = 0.0;
                for (k, c) in cos_coeffs.iter().enumerate() {
                    let k = (k + 1) as f64;
                    dr -= c * k * (k * theta).sin();
                }
                for (k, s) in sin_coeffs.iter().enumerate() {
                    let k = (k + 1) as f64;
                    dr += s * k * (k * theta).cos();
                }
                dr
            }
        }
    }

    /// Boundary point at parameter `theta`.
    pub fn boundary_point(&self, theta: f64) -> Vec2 {
        let r = self.radius(theta);
        [r * theta.cos(), r * theta.sin()]
    }

    /// Velocity of the boundary parameterization (not normalized).
    pub fn boundary_velocity(&self, theta: f64) -> Vec2 {
        let r = self.radius(theta);
        let dr = self.radius_deriv(theta);
        [
            dr * theta.cos() - r * theta.sin(),
            dr * theta.sin() + r * theta.cos(),
        ]
    }

    /// Speed `|B'(theta)|` of the parameterization.
    pub fn boundary_speed(&self, theta: f64) -> f64 {
        norm(self.boundary_velocity(theta))
    }

    /// Counter-clockwise unit tangent at `theta`.
    pub fn unit_tangent(&self, theta: f64) -> Vec2 {
        let v = self.boundary_velocity(theta);
        let n = norm(v);
        [v[0] / n, v[1] / n]
    }

    /// Outward unit normal at `theta`.
    pub fn outward_normal(&self, theta: f64) -> Vec2 {
        let t = self.unit_tangent(theta);
        [t[1], -t[0]]
    }

    /// Total boundary length `L`.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Diameter bound of the domain (twice the maximal radius).
    pub fn diameter(&self) -> f64 {
        let max_r = (0..256)
            .map(|i| self.radius(2.0 * PI * i as f64 / 256.0))
            .fold(0.0f64, f64::max);
        2.0 * max_r
    }

    /// Largest polar radius over the boundary.
    pub fn max_radius(&self) -> f64 {
        self.diameter() / 2.0
    }

    /// Smallest polar radius over the boundary.
    pub fn min_radius(&self) -> f64 {
        (0..256)
            .map(|i| self.radius(2.0 * PI * i as f64 / 256.0))
            .fold(f64::INFINITY, f64::min)
    }

    fn build_arclength_table(&mut self) {
        let n = ARCLENGTH_TABLE;
        let h = 2.0 * PI / n as f64;
        let mut s = Vec::with_capacity(n + 1);
        s.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            let a = i as f64 * h;
            acc += self.gauss5_speed(a, a + h);
            s.push(acc);
        }
        self.total_length = acc;
        self.arclength = s;
    }

    /// 5-point Gauss-Legendre integral of the boundary speed over `[a, b]`.
    fn gauss5_speed(&self, a: f64, b: f64) -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let c = 0.5 * (a + b);
        let hh = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in X.iter().zip(W.iter()) {
            acc += w * self.boundary_speed(c + hh * x);
        }
        acc * hh
    }

    /// Arclength from parameter 0 to `theta` (monotone increasing).
    pub fn arclength_of(&self, theta: f64) -> f64 {
        let n = ARCLENGTH_TABLE as f64;
        let wraps = (theta / (2.0 * PI)).floor();
        let t = theta - wraps * 2.0 * PI;
        let pos = t / (2.0 * PI) * n;
        let i = (pos.floor() as usize).min(ARCLENGTH_TABLE - 1);
        let a = i as f64 * 2.0 * PI / n;
        self.arclength[i] + self.gauss5_speed(a, t) + wraps * self.total_length
    }

    /// Inverse of the arclength map: parameter at arclength `s in [0, L)`.
    pub fn theta_of_arclength(&self, s: f64) -> f64 {
        let l = self.total_length;
        let s = s.rem_euclid(l);
        // Bracket from the table, then Newton.
        let idx = match self
            .arclength
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let h = 2.0 * PI / ARCLENGTH_TABLE as f64;
        let mut theta = idx as f64 * h;
        for _ in 0..50 {
            let f = self.arclength_of(theta) - s;
            let df = self.boundary_speed(theta);
            let step = f / df;
            theta -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        theta.rem_euclid(2.0 * PI)
    }
}

/// Local graph chart of the boundary at an anchor point.
///
/// Chart coordinates are `c(y) = (e1 . (y - P), e2 . (y - P))` where `e1` is
/// the counter-clockwise unit tangent at `P` and `e2` the inward unit normal,
/// so the domain lies above the graph `x_d = phi(x')` and the anchor sits at
/// the origin (`p' = 0`, `phi(0) = 0`, `phi'(0) = 0`).
#[derive(Debug, Clone)]
pub struct BoundaryChart {
    domain: Arc<DomainGeometry>,
    /// Anchor parameter on the boundary.
    pub theta_anchor: f64,
    /// Anchor point in global coordinates.
    pub anchor: Vec2,
    /// Chart x-axis (counter-clockwise tangent at the anchor), global coords.
    pub e1: Vec2,
    /// Chart y-axis (inward normal at the anchor), global coords.
    pub e2: Vec2,
    /// Chart radius: `phi` is evaluable for `|x'| <= radius`.
    pub radius: f64,
    /// Graph slope at the anchor (zero up to round-off by construction).
    pub slope_at_anchor: f64,
    /// Monotone parameter window `[theta_lo, theta_hi]` realizing the graph.
    window: (f64, f64),
    /// Estimated bound on `phi''` over the chart (Lipschitz constant of the
    /// slope), available because supported boundaries are smooth.
    pub slope_lipschitz: f64,
}

impl BoundaryChart {
    /// Chart coordinates of a global point.
    pub fn to_chart(&self, y: Vec2) -> Vec2 {
        let d = [y[0] - self.anchor[0], y[1] - self.anchor[1]];
        [dot(self.e1, d), dot(self.e2, d)]
    }

    /// Global coordinates of a chart point.
    pub fn to_global(&self, x: Vec2) -> Vec2 {
        [
            self.anchor[0] + x[0] * self.e1[0] + x[1] * self.e2[0],
            self.anchor[1] + x[0] * self.e1[1] + x[1] * self.e2[1],
        ]
    }

    /// First chart coordinate of the boundary point at parameter `theta`.
    pub fn chart_coord_of_theta(&self, theta: f64) -> f64 {
        let p = self.domain.boundary_point(theta);
        self.to_chart(p)[0]
    }

    fn chart_coords_of_theta(&self, theta: f64) -> (f64, f64) {
        let p = self.domain.boundary_point(theta);
        let c = self.to_chart(p);
        (c[0], c[1])
    }

    fn chart_velocity(&self, theta: f64) -> (f64, f64) {
        let v = self.domain.boundary_velocity(theta);
        (dot(self.e1, v), dot(self.e2, v))
    }

    /// Boundary parameter with chart abscissa `x1` (defined for `|x1| <= radius`).
    pub fn theta_of_chart_coord(&self, x1: f64) -> Result<f64> {
        if x1.abs() > self.radius * (1.0 + 1e-12) {
            return Err(CoreError::InvalidParameter(format!(
                "chart abscissa {x1} outside chart radius {}",
                self.radius
            )));
        }
        let (mut lo, mut hi) = self.window;
        let mut theta = 0.5 * (lo + hi);
        // Bisection bracket refined by Newton; c1 is strictly monotone
        // increasing on the window.
        for _ in 0..100 {
            let (c1, _) = self.chart_coords_of_theta(theta);
            let f = c1 - x1;
            if f.abs() < 1e-14 {
                return Ok(theta);
            }
            if f > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let (dc1, _) = self.chart_velocity(theta);
            let newton = theta - f / dc1;
            theta = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(theta)
    }

    /// Graph value `phi(x1)`.
    pub fn phi(&self, x1: f64) -> f64 {
        let theta = self
            .theta_of_chart_coord(x1)
            .expect("phi evaluated outside chart radius");
        self.chart_coords_of_theta(theta).1
    }

    /// Graph slope `phi'(x1)`.
    pub fn phi_prime(&self, x1: f64) -> f64 {
        let theta = self
            .theta_of_chart_coord(x1)
            .expect("phi' evaluated outside chart radius");
        let (dc1, dc2) = self.chart_velocity(theta);
        dc2 / dc1
    }

    /// Flattening map `F(x) = (x', x_d + phi(x'))` in chart coordinates.
    pub fn flatten_map(&self, x: Vec2) -> Vec2 {
        [x[0], x[1] + self.phi(x[0])]
    }

    /// Inverse flattening `F^{-1}(c) = (c', c_d - phi(c'))`.
    pub fn flatten_inv(&self, c: Vec2) -> Vec2 {
        [c[0], c[1] - self.phi(c[0])]
    }

    /// Arclength stretch `ds/dx' = sqrt(1 + phi'(x1)^2)` along the boundary.
    pub fn arclength_stretch(&self, x1: f64) -> f64 {
        let p = self.phi_prime(x1);
        (1.0 + p * p).sqrt()
    }

    pub fn domain(&self) -> &Arc<DomainGeometry> {
        &self.domain
    }
}

/// Builds the boundary chart at parameter `theta_anchor`.
///
/// The rotation puts the inward normal along `+e_d`; the chart radius is the
/// largest value at most `0.5` for which the boundary is a monotone graph
/// with slope at most 4 inside the chart box, shrinking by 0.7 on failure
/// down to a floor of `1e-3` times the diameter.
pub fn build_chart(domain: &Arc<DomainGeometry>, theta_anchor: f64) -> Result<BoundaryChart> {
    let anchor = domain.boundary_point(theta_anchor);
    let e1 = domain.unit_tangent(theta_anchor);
    let outward = domain.outward_normal(theta_anchor);
    let e2 = [-outward[0], -outward[1]];

    let floor = CHART_RADIUS_FLOOR * domain.diameter();
    let mut radius = 0.5f64.min(0.45 * domain.diameter());
    loop {
        match try_chart(domain, theta_anchor, anchor, e1, e2, radius) {
            Ok(chart) => return Ok(chart),
            Err(_) if radius * 0.7 >= floor => radius *= 0.7,
            Err(e) => {
                return Err(CoreError::Chart {
                    theta: theta_anchor,
                    reason: format!("no admissible chart radius above floor {floor:.3e}: {e}"),
                })
            }
        }
    }
}

fn try_chart(
    domain: &Arc<DomainGeometry>,
    theta_anchor: f64,
    anchor: Vec2,
    e1: Vec2,
    e2: Vec2,
    radius: f64,
) -> std::result::Result<BoundaryChart, String> {
    let mut chart = BoundaryChart {
        domain: Arc::clone(domain),
        theta_anchor,
        anchor,
        e1,
        e2,
        radius,
        slope_at_anchor: 0.0,
        window: (theta_anchor, theta_anchor),
        slope_lipschitz: 0.0,
    };

    // Expand a parameter window around the anchor until the chart abscissa
    // covers [-radius, radius], verifying monotonicity sample by sample.
    let max_half_window = PI * 0.9;
    let steps = 512;
    let dt = max_half_window / steps as f64;
    let mut lo = theta_anchor;
    let mut hi = theta_anchor;
    let mut c_lo = 0.0;
    let mut c_hi = 0.0;
    for k in 1..=steps {
        if c_hi < radius {
            let t = theta_anchor + k as f64 * dt;
            let c = chart.chart_coords_of_theta(t).0;
            if c <= c_hi {
                return Err(format!("chart abscissa not increasing at +{k}"));
            }
            c_hi = c;
            hi = t;
        }
        if c_lo > -radius {
            let t = theta_anchor - k as f64 * dt;
            let c = chart.chart_coords_of_theta(t).0;
            if c >= c_lo {
                return Err(format!("chart abscissa not decreasing at -{k}"));
            }
            c_lo = c;
            lo = t;
        }
        if c_hi >= radius && c_lo <= -radius {
            break;
        }
    }
    if c_hi < radius || c_lo > -radius {
        return Err("window exhausted before covering the chart radius".into());
    }
    chart.window = (lo, hi);

    // Slope bound and smoothness data on a dense sweep of the chart.
    let n = 201;
    let mut max_slope = 0.0f64;
    let mut max_curv = 0.0f64;
    let mut prev_slope: Option<(f64, f64)> = None;
    for i in 0..n {
        let x1 = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
        let theta = chart
            .theta_of_chart_coord(x1)
            .map_err(|e| format!("{e}"))?;
        let (dc1, dc2) = chart.chart_velocity(theta);
        if dc1 <= 0.0 {
            return Err("graph property fails inside chart".into());
        }
        let slope = dc2 / dc1;
        max_slope = max_slope.max(slope.abs());
        if let Some((px, ps)) = prev_slope {
            max_curv = max_curv.max(((slope - ps) / (x1 - px)).abs());
        }
        prev_slope = Some((x1, slope));
    }
    if max_slope > MAX_CHART_SLOPE {
        return Err(format!("slope {max_slope} exceeds bound"));
    }

    // No remote part of the boundary may re-enter the chart box. Parameter
    // offsets are reduced modulo 2 pi so the wrap-around arc is not
    // misclassified as remote.
    let remote = 1024;
    let (off_lo, off_hi) = (lo - theta_anchor, hi - theta_anchor);
    for i in 0..remote {
        let off = 2.0 * PI * i as f64 / remote as f64;
        let off = if off > PI { off - 2.0 * PI } else { off };
        if off > off_lo && off < off_hi {
            continue;
        }
        let (c1, c2) = chart.chart_coords_of_theta(theta_anchor + off);
        if c1.abs() <= radius && c2.abs() <= radius {
            return Err("remote boundary arc intersects chart box".into());
        }
    }

    chart.slope_at_anchor = chart.phi_prime(0.0);
    chart.slope_lipschitz = max_curv;
    Ok(chart)
}

/// Pullback metric `A(x) = grad F^{-1} (grad F^{-1})^t` of the flattening
/// map, evaluated at the chart point `x`; depends on `x` through `phi'(x1)`.
pub fn pullback_metric(chart: &BoundaryChart, x: Vec2) -> [[f64; 2]; 2] {
    metric_for_slope(chart.phi_prime(x[0]))
}

/// The pullback metric for a given graph slope.
pub fn metric_for_slope(slope: f64) -> [[f64; 2]; 2] {
    [[1.0, -slope], [-slope, 1.0 + slope * slope]]
}

/// Orientation request for the tangential direction of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Tangent along increasing boundary parameter.
    #[default]
    CounterClockwise,
    Clockwise,
}

/// Orthogonality/normalization data of the probe direction at an anchor.
#[derive(Debug, Clone)]
pub struct FrameAtP {
    /// Outward unit normal at the anchor, global coordinates.
    pub normal_out: Vec2,
    /// Unit tangent at the anchor, global coordinates, with the requested
    /// orientation.
    pub tangent: Vec2,
    /// Probe direction `xi = (xi', xi_d)` in chart coordinates.
    pub xi: Vec2,
    /// Requested tangential orientation.
    pub orientation: Orientation,
}

impl FrameAtP {
    /// `|xi'|` (the tangential oscillation frequency scale).
    pub fn xi_tangential_norm(&self) -> f64 {
        self.xi[0].abs()
    }
}

/// Chart-coordinate candidate `xi = sign (1 + slope^2, slope)`; both metric
/// conditions hold in closed form in two dimensions.
pub fn xi_for_slope(slope: f64, sign: f64) -> Vec2 {
    [sign * (1.0 + slope * slope), sign * slope]
}

/// Tangent vector `-(grad F^{-1})^t xi / sqrt(1 + slope^2)` in chart
/// coordinates, for a chart with graph slope `slope` at the anchor.
pub fn chart_tangent_of_xi(xi: Vec2, slope: f64) -> Vec2 {
    // (grad F^{-1})^t = [[1, -slope], [0, 1]].
    let t = [xi[0] - slope * xi[1], xi[1]];
    let s = (1.0 + slope * slope).sqrt();
    [-t[0] / s, -t[1] / s]
}

/// Selects the probe direction at the chart anchor.
///
/// Returns the frame whose tangent matches the requested orientation; the
/// sign of `xi` is determined by the tangent convention.
pub fn select_xi(chart: &BoundaryChart, orientation: Orientation) -> FrameAtP {
    let slope = chart.slope_at_anchor;
    let tangent_ccw = chart.domain.unit_tangent(chart.theta_anchor);
    let normal_out = chart.domain.outward_normal(chart.theta_anchor);
    let tangent = match orientation {
        Orientation::CounterClockwise => tangent_ccw,
        Orientation::Clockwise => [-tangent_ccw[0], -tangent_ccw[1]],
    };

    // Pick the xi sign whose induced tangent agrees with the request.
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for sign in [1.0, -1.0] {
        let xi = xi_for_slope(slope, sign);
        let tc = chart_tangent_of_xi(xi, slope);
        let tg = [
            tc[0] * chart.e1[0] + tc[1] * chart.e2[0],
            tc[0] * chart.e1[1] + tc[1] * chart.e2[1],
        ];
        let err = (tg[0] - tangent[0]).powi(2) + (tg[1] - tangent[1]).powi(2);
        if err < best.0 {
            best = (err, xi);
        }
    }

    FrameAtP {
        normal_out,
        tangent,
        xi: best.1,
        orientation,
    }
}

/// Residuals of the two metric conditions `xi . A xi = e_d . A e_d` and
/// `xi . A e_d = 0` for the metric of the given slope.
pub fn xi_condition_residuals(xi: Vec2, slope: f64) -> (f64, f64) {
    let a = metric_for_slope(slope);
    let axi = [a[0][0] * xi[0] + a[0][1] * xi[1], a[1][0] * xi[0] + a[1][1] * xi[1]];
    let aed = [a[0][1], a[1][1]];
    let r1 = dot(xi, axi) - aed[1];
    let r2 = dot(xi, aed);
    (r1, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn unit_disk_chart_formula() {
        let disk = DomainGeometry::unit_disk();
        let chart = build_chart(&disk, 0.0).unwrap();
        assert!((chart.anchor[0] - 1.0).abs() < 1e-14);
        assert!(chart.anchor[1].abs() < 1e-14);
        for i in 0..50 {
            let x1 = -0.45 + 0.9 * i as f64 / 49.0;
            let expected = 1.0 - (1.0 - x1 * x1).sqrt();
            assert!(
                (chart.phi(x1) - expected).abs() < 1e-12,
                "phi({x1}) = {} vs {}",
                chart.phi(x1),
                expected
            );
        }
        assert!(chart.slope_at_anchor.abs() < 1e-12);
    }

    #[test]
    fn anchor_is_critical_point_everywhere() {
        let disk = DomainGeometry::unit_disk();
        let wavy = DomainGeometry::perturbed_disk(vec![0.0, 0.0, 0.1], vec![]).unwrap();
        for dom in [&disk, &wavy] {
            for i in 0..12 {
                let theta = 2.0 * PI * i as f64 / 12.0 + 0.13;
                let chart = build_chart(dom, theta).unwrap();
                assert!(
                    chart.slope_at_anchor.abs() < 1e-10,
                    "slope {} at theta {}",
                    chart.slope_at_anchor,
                    theta
                );
            }
        }
    }

    #[test]
    fn flatten_map_is_volume_preserving() {
        // |det grad F| = 1 checked by finite differences at 100 random chart
        // points of a perturbed disk.
        let dom = DomainGeometry::perturbed_disk(vec![0.0, 0.0, 0.1], vec![]).unwrap();
        let chart = build_chart(&dom, 0.4).unwrap();
        let h = 1e-6;
        for k in 0..100 {
            let (u, v) = rng::halton2(k + 1);
            let x = [
                (u - 0.5) * 1.2 * chart.radius,
                v * 0.3 * chart.radius + 0.01,
            ];
            let x = [x[0].clamp(-0.9 * chart.radius, 0.9 * chart.radius), x[1]];
            let fpx = chart.flatten_map([x[0] + h, x[1]]);
            let fmx = chart.flatten_map([x[0] - h, x[1]]);
            let fpy = chart.flatten_map([x[0], x[1] + h]);
            let fmy = chart.flatten_map([x[0], x[1] - h]);
            let j00 = (fpx[0] - fmx[0]) / (2.0 * h);
            let j01 = (fpy[0] - fmy[0]) / (2.0 * h);
            let j10 = (fpx[1] - fmx[1]) / (2.0 * h);
            let j11 = (fpy[1] - fmy[1]) / (2.0 * h);
            let det = j00 * j11 - j01 * j10;
            assert!((det.abs() - 1.0).abs() < 1e-8, "det {} at {:?}", det, x);
        }
    }

    #[test]
    fn chart_round_trip() {
        let dom = DomainGeometry::perturbed_disk(vec![0.05], vec![0.0, 0.07]).unwrap();
        let chart = build_chart(&dom, 1.1).unwrap();
        for k in 0..100 {
            let (u, v) = rng::halton2(k + 7);
            let c = [
                (u - 0.5) * 1.8 * chart.radius,
                (v - 0.5) * 1.8 * chart.radius,
            ];
            let y = chart.to_global(c);
            let back = chart.to_chart(y);
            let err = ((back[0] - c[0]).powi(2) + (back[1] - c[1]).powi(2)).sqrt();
            assert!(err < 1e-10);
            // Flatten round trip within the graph window.
            let x1 = (u - 0.5) * 1.8 * chart.radius;
            let x = [x1, v * 0.2];
            let f = chart.flatten_map(x);
            let xb = chart.flatten_inv(f);
            assert!((xb[0] - x[0]).abs() < 1e-12 && (xb[1] - x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_examples() {
        // Flat boundary.
        let xi = xi_for_slope(0.0, 1.0);
        assert_eq!(xi, [1.0, 0.0]);
        // Slope one.
        let xi = xi_for_slope(1.0, 1.0);
        assert_eq!(xi, [2.0, 1.0]);
        let (r1, r2) = xi_condition_residuals(xi, 1.0);
        assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
        // Grid of 41 slopes.
        for i in 0..41 {
            let s = -2.0 + 4.0 * i as f64 / 40.0;
            for sign in [1.0, -1.0] {
                let xi = xi_for_slope(s, sign);
                let (r1, r2) = xi_condition_residuals(xi, s);
                assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12, "slope {s}");
                assert!(xi[0].abs() > 0.0);
            }
        }
    }

    #[test]
    fn xi_invariant_under_conductivity_scaling() {
        // The metric conditions use A_gamma(0) = gamma(P) A; the scalar
        // cancels, so residuals vanish for c A as well.
        for i in 0..10 {
            let s = -1.5 + 3.0 * i as f64 / 9.0;
            let xi = xi_for_slope(s, 1.0);
            let a = metric_for_slope(s);
            for c in [0.3, 2.0, 17.0] {
                let ca = [[c * a[0][0], c * a[0][1]], [c * a[1][0], c * a[1][1]]];
                let axi = [
                    ca[0][0] * xi[0] + ca[0][1] * xi[1],
                    ca[1][0] * xi[0] + ca[1][1] * xi[1],
                ];
                let aed = [ca[0][1], ca[1][1]];
                let r1 = xi[0] * axi[0] + xi[1] * axi[1] - aed[1];
                let r2 = xi[0] * aed[0] + xi[1] * aed[1];
                assert!(r1.abs() < 1e-10 && r2.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pullback_metric_examples() {
        assert_eq!(metric_for_slope(0.0), [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(metric_for_slope(1.0), [[1.0, -1.0], [-1.0, 2.0]]);
        for k in 0..100 {
            let (u, _) = rng::halton2(k + 3);
            let s = (u - 0.5) * 8.0;
            let a = metric_for_slope(s);
            // Positive definiteness via trace/determinant.
            let tr = a[0][0] + a[1][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            assert!(tr > 0.0 && det > 1e-12);
        }
    }

    #[test]
    fn frame_matches_direct_differentiation() {
        let dom = DomainGeometry::perturbed_disk(vec![0.0, 0.08], vec![0.03]).unwrap();
        for i in 0..8 {
            let theta = 0.3 + 2.0 * PI * i as f64 / 8.0;
            let chart = build_chart(&dom, theta).unwrap();
            let frame = select_xi(&chart, Orientation::CounterClockwise);
            // Direct differentiation of the parameterization.
            let h = 1e-6;
            let p1 = dom.boundary_point(theta + h);
            let m1 = dom.boundary_point(theta - h);
            let t = [(p1[0] - m1[0]) / (2.0 * h), (p1[1] - m1[1]) / (2.0 * h)];
            let tn = norm(t);
            let t = [t[0] / tn, t[1] / tn];
            assert!((t[0] - frame.tangent[0]).abs() < 1e-8);
            assert!((t[1] - frame.tangent[1]).abs() < 1e-8);
            let n_out = [t[1], -t[0]];
            assert!((n_out[0] - frame.normal_out[0]).abs() < 1e-8);
            assert!((n_out[1] - frame.normal_out[1]).abs() < 1e-8);
            // Orthonormality.
            assert!((norm(frame.tangent) - 1.0).abs() < 1e-12);
            assert!((norm(frame.normal_out) - 1.0).abs() < 1e-12);
            assert!(dot(frame.tangent, frame.normal_out).abs() < 1e-12);
        }
    }

    #[test]
    fn clockwise_orientation_flips_xi_sign() {
        let disk = DomainGeometry::unit_disk();
        let chart = build_chart(&disk, 0.0).unwrap();
        let ccw = select_xi(&chart, Orientation::CounterClockwise);
        let cw = select_xi(&chart, Orientation::Clockwise);
        assert!((ccw.xi[0] + cw.xi[0]).abs() < 1e-12);
        // At P=(1,0) the CCW tangent is (0,1); the induced chart tangent of
        // xi=-(1,0) maps to it.
        assert!((ccw.tangent[0]).abs() < 1e-12 && (ccw.tangent[1] - 1.0).abs() < 1e-12);
        assert_eq!(ccw.xi, [-1.0, 0.0]);
    }

    #[test]
    fn arclength_map_is_consistent() {
        let dom = DomainGeometry::perturbed_disk(vec![0.1], vec![]).unwrap();
        let l = dom.total_length();
        assert!(l > 2.0 * PI * 0.5 && l < 2.0 * PI * 1.6);
        for i in 0..20 {
            let theta = 2.0 * PI * i as f64 / 20.0;
            let s = dom.arclength_of(theta);
            let back = dom.theta_of_arclength(s);
            assert!((back - theta).rem_euclid(2.0 * PI).min(
                (theta - back).rem_euclid(2.0 * PI)
            ) < 1e-10);
        }
        // s(2 pi) = L and monotone.
        assert!((dom.arclength_of(2.0 * PI) - l).abs() < 1e-10);
        let mut prev = -1.0;
        for i in 0..200 {
            let s = dom.arclength_of(2.0 * PI * i as f64 / 200.0);
            assert!(s > prev);
            prev = s;
        }
    }
}
