use crate::error::CoreError;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type FallibleFn = Arc<dyn Fn(f64) -> Result<f64, CoreError> + Send + Sync>;

/// Real-valued function of the comoving coordinate, carrying a printable
/// formula for reports. Cloning is cheap (shared closure).
#[derive(Clone)]
pub struct Profile {
    f: ScalarFn,
    formula: String,
}

impl Profile {
    pub fn new(formula: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile {
            f: Arc::new(f),
            formula: formula.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Profile::new(format!("{c}"), move |_| c)
    }

    pub fn zero() -> Self {
        Profile::new("0", |_| 0.0)
    }

    pub fn eval(&self, q: f64) -> f64 {
        (self.f)(q)
    }

    pub fn formula(&self) -> &str {
        &self.formula
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "Profile({})", self.formula)
    }
}

/// How an envelope's derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DerivativeScheme {
    Analytic,
    CenteredFd { h: f64 },
}

/// Default step for finite-difference derivatives of smooth order-one
/// envelopes; balances truncation against rounding.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Real envelope together with its first two derivatives.
#[derive(Clone, Debug)]
pub struct EnvelopeProfile {
    value: Profile,
    d1: Profile,
    d2: Profile,
    scheme: DerivativeScheme,
}

impl EnvelopeProfile {
    pub fn analytic(value: Profile, d1: Profile, d2: Profile) -> Self {
        EnvelopeProfile {
            value,
            d1,
            d2,
            scheme: DerivativeScheme::Analytic,
        }
    }

    /// Derivatives by centered differences of `value`; adequate when only
    /// 1e-6 level residuals are required of the result.
    pub fn from_value_fd(value: Profile, h: f64) -> Self {
        let v1 = value.clone();
        let v2 = value.clone();
        let d1 = Profile::new(
            format!("d/dq[{}] (centered, h={h})", value.formula()),
            move |q| (v1.eval(q + h) - v1.eval(q - h)) / (2.0 * h),
        );
        let d2 = Profile::new(
            format!("d2/dq2[{}] (centered, h={h})", value.formula()),
            move |q| (v2.eval(q + h) - 2.0 * v2.eval(q) + v2.eval(q - h)) / (h * h),
        );
        EnvelopeProfile {
            value,
            d1,
            d2,
            scheme: DerivativeScheme::CenteredFd { h },
        }
    }

    pub fn psi(&self, q: f64) -> f64 {
        self.value.eval(q)
    }

    pub fn dpsi(&self, q: f64) -> f64 {
        self.d1.eval(q)
    }

    pub fn d2psi(&self, q: f64) -> f64 {
        self.d2.eval(q)
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn formula(&self) -> &str {
        self.value.formula()
    }
}

/// Auxiliary current `G(q)` with its derivative. Evaluation is fallible
/// because synthesised currents are square roots that stop existing where
/// their radicand turns negative.
#[derive(Clone)]
pub struct AuxiliaryG {
    value: FallibleFn,
    d1: FallibleFn,
    formula: String,
}

impl AuxiliaryG {
    pub fn analytic(
        formula: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AuxiliaryG {
            value: Arc::new(move |q| Ok(value(q))),
            d1: Arc::new(move |q| Ok(d1(q))),
            formula: formula.into(),
        }
    }

    pub fn fallible(
        formula: impl Into<String>,
        value: impl Fn(f64) -> Result<f64, CoreError> + Send + Sync + 'static,
        d1: impl Fn(f64) -> Result<f64, CoreError> + Send + Sync + 'static,
    ) -> Self {
        AuxiliaryG {
            value: Arc::new(value),
            d1: Arc::new(d1),
            formula: formula.into(),
        }
    }

    pub fn g(&self, q: f64) -> Result<f64, CoreError> {
        (self.value)(q)
    }

    pub fn dg(&self, q: f64) -> Result<f64, CoreError> {
        (self.d1)(q)
    }

    pub fn formula(&self) -> &str {
        &self.formula
    }
}

impl fmt::Debug for AuxiliaryG {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "AuxiliaryG({})", self.formula)
    }
}
