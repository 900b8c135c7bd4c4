//! Named real test functions with growth metadata.
//!
//! Every experiment that evaluates `E[φ(·)]` takes a [`TestFunction`]. The
//! metadata (`growth_order`, `support_radius`) is what the PDE solver and the
//! limit experiments use to pick domains and to reject functions whose growth
//! exceeds the available moments.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ineq::smooth_indicator;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function `φ: ℝ → ℝ` together with its polynomial growth order.
#[derive(Clone)]
pub struct TestFunction {
    tag: String,
    eval: Evaluator,
    growth_order: u32,
    lipschitz_like: bool,
    support_radius: Option<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("tag", &self.tag)
            .field("growth_order", &self.growth_order)
            .field("lipschitz_like", &self.lipschitz_like)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl TestFunction {
    pub fn new<F>(tag: impl Into<String>, growth_order: u32, lipschitz_like: bool, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            tag: tag.into(),
            eval: Arc::new(f),
            growth_order,
            lipschitz_like,
            support_radius: None,
        }
    }

    /// Declares that `φ` is constant outside `[-radius, radius]`.
    pub fn with_support(mut self, radius: f64) -> Self {
        self.support_radius = Some(radius);
        self
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn growth_order(&self) -> u32 {
        self.growth_order
    }

    pub fn lipschitz_like(&self) -> bool {
        self.lipschitz_like
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Evaluates and rejects non-finite images.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("{}({x}) = {v}", self.tag)))
        }
    }

    /// `x ↦ φ(x / t)`; the support radius scales with `t`.
    pub fn rescaled(&self, t: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            tag: format!("{}(x/{t})", self.tag),
            eval: Arc::new(move |x| inner(x / t)),
            growth_order: self.growth_order,
            lipschitz_like: self.lipschitz_like,
            support_radius: self.support_radius.map(|r| r * t),
        }
    }

    /// `x ↦ λ φ(x)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            tag: format!("{lambda}*{}", self.tag),
            eval: Arc::new(move |x| lambda * inner(x)),
            ..self.clone()
        }
    }

    /// `x ↦ φ(x) + ψ(x)`.
    pub fn sum(&self, other: &TestFunction) -> Self {
        let a = self.eval.clone();
        let b = other.eval.clone();
        Self {
            tag: format!("{}+{}", self.tag, other.tag),
            eval: Arc::new(move |x| a(x) + b(x)),
            growth_order: self.growth_order.max(other.growth_order),
            lipschitz_like: self.lipschitz_like && other.lipschitz_like,
            support_radius: match (self.support_radius, other.support_radius) {
                (Some(r), Some(s)) => Some(r.max(s)),
                _ => None,
            },
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), 0, true, move |_| c).with_support(0.0)
    }

    pub fn identity() -> Self {
        Self::new("identity", 1, true, |x| x)
    }

    pub fn square() -> Self {
        Self::new("sq", 2, true, |x| x * x)
    }

    pub fn neg_square() -> Self {
        Self::new("neg_sq", 2, true, |x| -x * x)
    }

    pub fn abs() -> Self {
        Self::new("abs", 1, true, f64::abs)
    }

    /// `x ↦ clamp(x, -1, 1)`, bounded and Lipschitz.
    pub fn clipped_ramp() -> Self {
        Self::new("ramp", 0, true, |x| x.clamp(-1.0, 1.0)).with_support(1.0)
    }

    /// `x ↦ 1 - g_{1/2}(|x| / radius)`: a smooth bump equal to 1 on
    /// `|x| ≤ radius/2` and 0 for `|x| ≥ radius`.
    pub fn small_ball(radius: f64) -> Self {
        Self::new(format!("ball({radius})"), 0, true, move |x| {
            1.0 - smooth_indicator(x.abs() / radius, 0.5)
        })
        .with_support(radius)
    }

    /// Looks a function up by tag. Parametric tags use `name:arg`, e.g. `ball:2`.
    pub fn from_tag(tag: &str) -> Result<Self> {
        let (name, arg) = match tag.split_once(':') {
            Some((n, a)) => {
                let v: f64 = a.trim().parse().map_err(|_| {
                    Error::Config(format!("bad argument in test function tag `{tag}`"))
                })?;
                (n.trim(), Some(v))
            }
            None => (tag.trim(), None),
        };
        let f = match (name, arg) {
            ("identity" | "id", None) => Self::identity(),
            ("sq", None) => Self::square(),
            ("neg_sq", None) => Self::neg_square(),
            ("abs", None) => Self::abs(),
            ("neg_abs", None) => Self::new("neg_abs", 1, true, |x: f64| -x.abs()),
            ("ramp", None) => Self::clipped_ramp(),
            ("pos", None) => Self::new("pos", 1, true, |x: f64| x.max(0.0)),
            ("tanh", None) => Self::new("tanh", 0, true, f64::tanh),
            ("cos", None) => Self::new("cos", 0, true, f64::cos),
            ("cube", None) => Self::new("cube", 3, true, |x: f64| x * x * x),
            ("quartic", None) => Self::new("quartic", 4, true, |x: f64| x.powi(4)),
            ("const", Some(c)) => Self::constant(c),
            ("ball", Some(r)) if r > 0.0 => Self::small_ball(r),
            ("call", Some(k)) => Self::new(tag, 1, true, move |x: f64| (x - k).max(0.0)),
            ("sq_shift", Some(m)) => Self::new(tag, 2, true, move |x: f64| (x - m) * (x - m)),
            _ => return Err(Error::Config(format!("unknown test function `{tag}`"))),
        };
        Ok(f)
    }

    /// Tags accepted by [`TestFunction::from_tag`].
    pub const REGISTRY: &'static [&'static str] = &[
        "identity",
        "sq",
        "neg_sq",
        "abs",
        "neg_abs",
        "ramp",
        "pos",
        "tanh",
        "cos",
        "cube",
        "quartic",
        "const:<c>",
        "ball:<radius>",
        "call:<strike>",
        "sq_shift:<m>",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        assert_eq!(TestFunction::from_tag("sq").unwrap().eval(3.0), 9.0);
        assert_eq!(TestFunction::from_tag("const:2.5").unwrap().eval(-7.0), 2.5);
        assert_eq!(TestFunction::from_tag("call:1").unwrap().eval(3.0), 2.0);
        assert!(TestFunction::from_tag("nope").is_err());
        assert!(TestFunction::from_tag("ball:x").is_err());
    }

    #[test]
    fn small_ball_shape() {
        let b = TestFunction::small_ball(2.0);
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(1.0), 1.0);
        assert_eq!(b.eval(2.0), 0.0);
        assert_eq!(b.eval(-5.0), 0.0);
        let mid = b.eval(1.5);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn rescale_scales_support() {
        let b = TestFunction::small_ball(1.0).rescaled(3.0);
        assert_eq!(b.support_radius(), Some(3.0));
        assert_eq!(b.eval(1.5), 1.0);
        assert_eq!(b.eval(3.0), 0.0);
    }
}
