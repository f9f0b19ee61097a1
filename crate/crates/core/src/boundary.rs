//! Complex functions on the boundary: quadrature, inner products, Fourier
//! coefficients against the arclength basis, pointwise algebra.
//!
//! Functions are held as samples on a uniform arclength grid. The basis is
//! `e_n(s) = L^{-1/2} exp(2 pi i n s / L)` with the interleaved ordering
//! `0, +1, -1, +2, -2, ...`; periodic trapezoid quadrature makes the
//! discrete basis orthonormal to round-off once the grid oversamples the
//! truncation by a factor of four.

use crate::geometry::DomainGeometry;
use crate::{CoreError, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::{Arc, Mutex, OnceLock};

/// Tail mass above which `coefficients` raises a warning flag.
pub const TAIL_WARN: f64 = 1e-6;
/// Tail mass above which `coefficients` errors out.
pub const TAIL_ERROR: f64 = 1e-2;

type Trace = dyn Fn(f64) -> Complex64 + Send + Sync;

/// Support / oscillation metadata carried by probe traces; lets the solver
/// size meshes and the noise model size truncations without re-analyzing
/// samples.
#[derive(Debug, Clone, Copy)]
pub struct SupportHint {
    /// Arclength of the support center.
    pub s_center: f64,
    /// Half width of the support in arclength.
    pub s_halfwidth: f64,
    /// Dominant oscillation frequency in radians per unit arclength.
    pub freq: f64,
}

/// A complex function on the boundary of a domain.
#[derive(Clone)]
pub struct BoundaryFunction {
    domain: Arc<DomainGeometry>,
    values: Vec<Complex64>,
    analytic: Option<Arc<Trace>>,
    support: Option<SupportHint>,
    spectrum: Arc<OnceLock<Arc<Vec<Complex64>>>>,
}

impl std::fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryFunction")
            .field("n_grid", &self.values.len())
            .field("analytic", &self.analytic.is_some())
            .field("support", &self.support)
            .finish()
    }
}

impl BoundaryFunction {
    /// Samples a closure of the arclength on a uniform grid of size `n`,
    /// keeping the closure for exact trace evaluation.
    pub fn from_fn<F>(domain: &Arc<DomainGeometry>, n: usize, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        let l = domain.total_length();
        let values = (0..n)
            .map(|j| f(l * j as f64 / n as f64))
            .collect();
        BoundaryFunction {
            domain: Arc::clone(domain),
            values,
            analytic: Some(Arc::new(f)),
            support: None,
            spectrum: Arc::new(OnceLock::new()),
        }
    }

    pub fn from_samples(domain: &Arc<DomainGeometry>, values: Vec<Complex64>) -> Self {
        BoundaryFunction {
            domain: Arc::clone(domain),
            values,
            analytic: None,
            support: None,
            spectrum: Arc::new(OnceLock::new()),
        }
    }

    /// Attaches support metadata (builder style).
    pub fn with_support(mut self, hint: SupportHint) -> Self {
        self.support = Some(hint);
        self
    }

    pub fn support(&self) -> Option<SupportHint> {
        self.support
    }

    pub fn domain(&self) -> &Arc<DomainGeometry> {
        &self.domain
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.values
    }

    pub fn has_analytic_trace(&self) -> bool {
        self.analytic.is_some()
    }

    /// Value at arclength `s`: exact when an analytic trace is attached,
    /// periodic cubic interpolation of the samples otherwise.
    pub fn eval(&self, s: f64) -> Complex64 {
        if let Some(f) = &self.analytic {
            return f(s);
        }
        let n = self.values.len();
        let l = self.domain.total_length();
        let x = (s / l * n as f64).rem_euclid(n as f64);
        let j = x.floor() as usize % n;
        let t = x - x.floor();
        let idx = |k: isize| -> Complex64 {
            self.values[((j as isize + k).rem_euclid(n as isize)) as usize]
        };
        let (p0, p1, p2, p3) = (idx(-1), idx(0), idx(1), idx(2));
        // Catmull-Rom on the uniform periodic grid.
        0.5 * (2.0 * p1
            + (p2 - p0) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
            + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
    }

    /// Complex conjugate (the drivers pair probes with their conjugates).
    pub fn conj(&self) -> Self {
        let analytic = self.analytic.as_ref().map(|f| {
            let f = Arc::clone(f);
            Arc::new(move |s: f64| f(s).conj()) as Arc<Trace>
        });
        BoundaryFunction {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(|v| v.conj()).collect(),
            analytic,
            support: self.support,
            spectrum: Arc::new(OnceLock::new()),
        }
    }

    /// `L^2(boundary)` squared norm from the quadrature.
    pub fn norm_sqr(&self) -> f64 {
        let w = self.domain.total_length() / self.values.len() as f64;
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w
    }

    /// Sobolev `H^{1/2}` squared norm through the spectral multiplier
    /// `(1 + n^2)^{1/2}` on resolved modes.
    pub fn h_half_norm_sqr(&self) -> f64 {
        let spec = self.spectrum();
        let n = self.values.len() as isize;
        let mut acc = 0.0;
        for (idx, c) in spec.iter().enumerate() {
            let m = signed_mode(idx as isize, n);
            acc += (1.0 + (m * m) as f64).sqrt() * c.norm_sqr();
        }
        acc
    }

    /// Full discrete spectrum `(f | e_m)` for the `n_b` resolved modes,
    /// computed once per function.
    fn spectrum(&self) -> Arc<Vec<Complex64>> {
        Arc::clone(self.spectrum.get_or_init(|| {
            let n = self.values.len();
            let l = self.domain.total_length();
            let mut buf = self.values.clone();
            fft_forward(&mut buf);
            let scale = l.sqrt() / n as f64;
            for v in &mut buf {
                *v *= scale;
            }
            Arc::new(buf)
        }))
    }

    /// Smallest symmetric mode window containing all but 1e-9 of the
    /// squared norm; sizes background meshes for non-probe data.
    pub fn effective_bandwidth(&self) -> usize {
        let spec = self.spectrum();
        let n = self.values.len() as i64;
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 1;
        }
        let mut cum = spec[0].norm_sqr();
        let mut m = 0i64;
        while cum < (1.0 - 1e-9) * total && 2 * (m + 1) < n {
            m += 1;
            cum += spec[m.rem_euclid(n) as usize].norm_sqr();
            cum += spec[(-m).rem_euclid(n) as usize].norm_sqr();
        }
        (m as usize).max(1)
    }

    /// Coefficient `(f | e_m)` for a signed mode `m`.
    pub fn coefficient(&self, m: i64) -> Complex64 {
        let spec = self.spectrum();
        let n = self.values.len() as i64;
        if 2 * m.abs() >= n {
            return Complex64::new(0.0, 0.0);
        }
        spec[m.rem_euclid(n) as usize]
    }

    /// Truncated coefficient vector in the interleaved basis ordering, with
    /// the unresolved tail mass relative to the squared norm.
    pub fn coefficients(&self, k: usize) -> Result<CoefficientVec> {
        let n = self.values.len();
        let max_mode = BoundaryBasis::max_mode(k);
        if n < 4 * k.max(1) {
            return Err(CoreError::UnderResolved { tail: 1.0 });
        }
        let spec = self.spectrum();
        let mut values = Vec::with_capacity(k);
        let mut captured = 0.0;
        for idx in 0..k {
            let m = BoundaryBasis::mode_of(idx);
            debug_assert!(m.unsigned_abs() as usize <= max_mode);
            let c = spec[(m.rem_euclid(n as i64)) as usize];
            captured += c.norm_sqr();
            values.push(c);
        }
        let total = self.norm_sqr();
        let tail = if total > 0.0 {
            ((total - captured) / total).max(0.0)
        } else {
            0.0
        };
        if tail > TAIL_ERROR {
            return Err(CoreError::UnderResolved { tail });
        }
        Ok(CoefficientVec {
            values,
            tail_mass: tail,
            tail_warning: tail > TAIL_WARN,
        })
    }
}

/// Result of a coefficient expansion.
#[derive(Debug, Clone)]
pub struct CoefficientVec {
    /// Coefficients in the interleaved ordering.
    pub values: Vec<Complex64>,
    /// Fraction of the squared norm beyond the truncation.
    pub tail_mass: f64,
    /// Set when the tail exceeds the warning threshold.
    pub tail_warning: bool,
}

/// Periodic trapezoid inner product `(f | g) = int f conj(g) ds`.
pub fn inner(f: &BoundaryFunction, g: &BoundaryFunction) -> Result<Complex64> {
    if f.values.len() != g.values.len() {
        return Err(CoreError::GridMismatch {
            left: f.values.len(),
            right: g.values.len(),
        });
    }
    let w = f.domain.total_length() / f.values.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.values.iter().zip(&g.values) {
        acc += a * b.conj();
    }
    Ok(acc * w)
}

/// Strictly positive real factor on the boundary, used for pointwise
/// division of traces.
#[derive(Clone)]
pub struct BoundaryScalar {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl BoundaryScalar {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        BoundaryScalar {
            eval: Arc::new(eval),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    /// Restriction of a conductivity to the boundary of a domain, as a
    /// function of arclength.
    pub fn from_conductivity(
        field: &crate::conductivity::ConductivityField,
        domain: &Arc<DomainGeometry>,
    ) -> Self {
        let field = field.clone();
        let domain = Arc::clone(domain);
        Self::new(move |s| {
            let theta = domain.theta_of_arclength(s);
            field.value(domain.boundary_point(theta))
        })
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }
}

/// Pointwise quotient `f / gamma`; errors when the divisor is not strictly
/// positive on the grid.
pub fn pointwise_div(f: &BoundaryFunction, gamma: &BoundaryScalar) -> Result<BoundaryFunction> {
    let n = f.values.len();
    let l = f.domain.total_length();
    let mut min_g = f64::INFINITY;
    let mut values = Vec::with_capacity(n);
    for (j, v) in f.values.iter().enumerate() {
        let g = gamma.eval(l * j as f64 / n as f64);
        min_g = min_g.min(g);
        values.push(v / g);
    }
    if min_g <= 0.0 {
        return Err(CoreError::NonpositiveDivisor(min_g));
    }
    let analytic = f.analytic.as_ref().map(|tr| {
        let tr = Arc::clone(tr);
        let gamma = gamma.clone();
        Arc::new(move |s: f64| tr(s) / gamma.eval(s)) as Arc<Trace>
    });
    Ok(BoundaryFunction {
        domain: Arc::clone(&f.domain),
        values,
        analytic,
        support: f.support,
        spectrum: Arc::new(OnceLock::new()),
    })
}

/// The arclength Fourier basis with the interleaved ordering.
#[derive(Debug, Clone)]
pub struct BoundaryBasis {
    pub truncation: usize,
}

impl BoundaryBasis {
    pub fn new(truncation: usize) -> Self {
        BoundaryBasis { truncation }
    }

    /// Signed mode of a basis index: `0, +1, -1, +2, -2, ...`.
    pub fn mode_of(index: usize) -> i64 {
        if index == 0 {
            0
        } else if index % 2 == 1 {
            ((index + 1) / 2) as i64
        } else {
            -((index / 2) as i64)
        }
    }

    /// Basis index of a signed mode.
    pub fn index_of(mode: i64) -> usize {
        if mode == 0 {
            0
        } else if mode > 0 {
            (2 * mode - 1) as usize
        } else {
            (-2 * mode) as usize
        }
    }

    /// Largest |mode| present among the first `k` indices.
    pub fn max_mode(k: usize) -> usize {
        k / 2
    }

    /// Smallest truncation whose index range covers all |mode| <= m.
    pub fn truncation_covering(m: usize) -> usize {
        2 * m + 1
    }

    /// Basis element as a sampled boundary function.
    pub fn element(domain: &Arc<DomainGeometry>, mode: i64, n_grid: usize) -> BoundaryFunction {
        let l = domain.total_length();
        let scale = 1.0 / l.sqrt();
        BoundaryFunction::from_fn(domain, n_grid, move |s| {
            let phase = 2.0 * std::f64::consts::PI * mode as f64 * s / l;
            Complex64::new(0.0, phase).exp() * scale
        })
    }
}

fn signed_mode(idx: isize, n: isize) -> i64 {
    if 2 * idx < n {
        idx as i64
    } else {
        (idx - n) as i64
    }
}

/// Process-wide FFT planner; plans are reused across calls.
fn fft_forward(buf: &mut [Complex64]) {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let fft = planner.lock().unwrap().plan_fft_forward(buf.len());
    fft.process(buf);
}
