//! Conductivity fields with evaluable gradients and regularity metadata.
//!
//! Fields are defined on all of the plane; restriction to the closed domain
//! is implicit, which keeps chart pullbacks free of extension logic. Every
//! builtin carries exact gradient formulas so boundary targets such as
//! `gamma(P)` and its normal/tangential derivatives are available in closed
//! form for tests and experiments.

use crate::geometry::Vec2;
use crate::{CoreError, Result};
use std::fmt;
use std::sync::Arc;

type Scalar = dyn Fn(f64, f64) -> f64 + Send + Sync;
type Grad = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

/// A scalar conductivity with gradient and regularity bounds.
#[derive(Clone)]
pub struct ConductivityField {
    eval: Arc<Scalar>,
    grad: Arc<Grad>,
    /// Positive lower bound over the reference ball `|x| <= REF_RADIUS`.
    pub gamma0: f64,
    /// Lipschitz bound `sup |grad gamma|` over the reference ball.
    pub lipschitz: f64,
    /// Bound on second derivatives when the field is C^{1,1}.
    pub c11_bound: Option<f64>,
    /// Provenance tag (builtin name with parameters).
    pub tag: String,
}

/// Radius of the ball on which regularity constants are reported; all
/// supported domains fit inside it.
pub const REF_RADIUS: f64 = 1.6;

impl fmt::Debug for ConductivityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConductivityField")
            .field("tag", &self.tag)
            .field("gamma0", &self.gamma0)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl ConductivityField {
    pub fn value(&self, p: Vec2) -> f64 {
        (self.eval)(p[0], p[1])
    }

    pub fn gradient(&self, p: Vec2) -> Vec2 {
        let (gx, gy) = (self.grad)(p[0], p[1]);
        [gx, gy]
    }

    /// Directional derivative at `p`.
    pub fn directional(&self, p: Vec2, dir: Vec2) -> f64 {
        let g = self.gradient(p);
        g[0] * dir[0] + g[1] * dir[1]
    }

    pub fn is_constant(&self) -> bool {
        self.lipschitz == 0.0
    }
}

/// Builds one of the builtin analytic fields.
///
/// Names and parameters:
/// * `constant` — `params[0] = c`.
/// * `affine` — `c + b . x` with `params = [c, b1, b2]`.
/// * `exponential` — `exp(a . x)` with `params = [a1, a2]`.
/// * `radial-bump` — `base + amp * exp(1 - 1/(1 - (r/R)^2))` centered at
///   `(cx, cy)`, `params = [base, amp, cx, cy, R]`.
/// * `trigonometric` — `a + b sin(k x) cos(l y)`, `params = [a, b, k, l]`.
pub fn builtin_field(name: &str, params: &[f64]) -> Result<ConductivityField> {
    let field = match name {
        "constant" => {
            let c = *params.first().unwrap_or(&1.0);
            ConductivityField {
                eval: Arc::new(move |_, _| c),
                grad: Arc::new(|_, _| (0.0, 0.0)),
                gamma0: c,
                lipschitz: 0.0,
                c11_bound: Some(0.0),
                tag: format!("constant({c})"),
            }
        }
        "affine" => {
            let (c, b1, b2) = (param(params, 0, 2.0), param(params, 1, 1.0), param(params, 2, 0.0));
            let bn = (b1 * b1 + b2 * b2).sqrt();
            ConductivityField {
                eval: Arc::new(move |x, y| c + b1 * x + b2 * y),
                grad: Arc::new(move |_, _| (b1, b2)),
                gamma0: c - bn * REF_RADIUS,
                lipschitz: bn,
                c11_bound: Some(0.0),
                tag: format!("affine({c},{b1},{b2})"),
            }
        }
        "exponential" => {
            let (a1, a2) = (param(params, 0, 0.5), param(params, 1, 0.0));
            let an = (a1 * a1 + a2 * a2).sqrt();
            ConductivityField {
                eval: Arc::new(move |x, y| (a1 * x + a2 * y).exp()),
                grad: Arc::new(move |x, y| {
                    let e = (a1 * x + a2 * y).exp();
                    (a1 * e, a2 * e)
                }),
                gamma0: (-an * REF_RADIUS).exp(),
                lipschitz: an * (an * REF_RADIUS).exp(),
                c11_bound: Some(an * an * (an * REF_RADIUS).exp()),
                tag: format!("exponential({a1},{a2})"),
            }
        }
        "radial-bump" => {
            let base = param(params, 0, 1.0);
            let amp = param(params, 1, 1.0);
            let cx = param(params, 2, 0.0);
            let cy = param(params, 3, 0.0);
            let rad = param(params, 4, 0.5);
            if rad <= 0.0 {
                return Err(CoreError::InvalidParameter("bump radius must be positive".into()));
            }
            let profile = move |x: f64, y: f64| {
                let q = ((x - cx).powi(2) + (y - cy).powi(2)) / (rad * rad);
                if q >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - q)).exp()
                }
            };
            let eval = move |x: f64, y: f64| base + amp * profile(x, y);
            let grad = move |x: f64, y: f64| {
                let q = ((x - cx).powi(2) + (y - cy).powi(2)) / (rad * rad);
                if q >= 1.0 {
                    (0.0, 0.0)
                } else {
                    // d/dq exp(1 - 1/(1-q)) = -exp(..)/(1-q)^2, dq/dx = 2(x-cx)/R^2.
                    let e = (1.0 - 1.0 / (1.0 - q)).exp();
                    let dq = -e / ((1.0 - q) * (1.0 - q));
                    (
                        amp * dq * 2.0 * (x - cx) / (rad * rad),
                        amp * dq * 2.0 * (y - cy) / (rad * rad),
                    )
                }
            };
            // The radial profile derivative peaks near r/R ~ 0.78 with
            // magnitude ~ 2.09/R.
            let lip = amp.abs() * 2.1 / rad;
            ConductivityField {
                eval: Arc::new(eval),
                grad: Arc::new(grad),
                gamma0: base + if amp < 0.0 { amp } else { 0.0 },
                lipschitz: lip,
                c11_bound: Some(amp.abs() * 15.0 / (rad * rad)),
                tag: format!("radial-bump({base},{amp},{cx},{cy},{rad})"),
            }
        }
        "trigonometric" => {
            let a = param(params, 0, 2.0);
            let b = param(params, 1, 0.5);
            let k = param(params, 2, 1.0);
            let l = param(params, 3, 1.0);
            ConductivityField {
                eval: Arc::new(move |x, y| a + b * (k * x).sin() * (l * y).cos()),
                grad: Arc::new(move |x, y| {
                    (
                        b * k * (k * x).cos() * (l * y).cos(),
                        -b * l * (k * x).sin() * (l * y).sin(),
                    )
                }),
                gamma0: a - b.abs(),
                lipschitz: b.abs() * (k * k + l * l).sqrt(),
                c11_bound: Some(b.abs() * (k * k + l * l)),
                tag: format!("trigonometric({a},{b},{k},{l})"),
            }
        }
        other => return Err(CoreError::UnknownField(other.to_string())),
    };
    if field.gamma0 <= 0.0 {
        return Err(CoreError::NonpositiveLowerBound(field.gamma0));
    }
    Ok(field)
}

fn param(params: &[f64], i: usize, default: f64) -> f64 {
    params.get(i).copied().unwrap_or(default)
}
