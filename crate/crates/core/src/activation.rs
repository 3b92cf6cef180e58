//! Scalar nonlinearities with their Lipschitz constant and sup norm.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
enum Kind<T> {
    Tanh,
    PwlSigmoid,
    Identity,
    Custom(ScalarFn<T>),
}

/// A named activation `φ: R → R` with `φ(0) = 0`.
///
/// The Lipschitz constant `L` and sup norm `M` are kept apart: for
/// unbounded maps such as the identity `M = ∞` while `L = 1`.
#[derive(Clone)]
pub struct Activation<T> {
    name: String,
    kind: Kind<T>,
    lipschitz: T,
    sup_norm: T,
}

impl<T: Real> Activation<T> {
    pub fn tanh() -> Self {
        Self { name: "tanh".into(), kind: Kind::Tanh, lipschitz: T::one(), sup_norm: T::one() }
    }

    /// `φ(s) = (|s + 1| - |s - 1|) / 2`, the saturating linear sigmoid.
    pub fn pwl_sigmoid() -> Self {
        Self {
            name: "pwl_sigmoid".into(),
            kind: Kind::PwlSigmoid,
            lipschitz: T::one(),
            sup_norm: T::one(),
        }
    }

    pub fn identity() -> Self {
        Self {
            name: "identity".into(),
            kind: Kind::Identity,
            lipschitz: T::one(),
            sup_norm: T::infinity(),
        }
    }

    /// Looks up a built-in activation.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Self::tanh()),
            "pwl_sigmoid" | "pwl-sigmoid" => Ok(Self::pwl_sigmoid()),
            "identity" | "linear" => Ok(Self::identity()),
            other => Err(Error::UnknownActivation(other.to_string())),
        }
    }

    /// A user-defined activation. The declared constants are trusted, but
    /// `φ(0) = 0` and the Lipschitz bound are spot-checked on random pairs.
    pub fn custom<F>(name: &str, f: F, lipschitz: T, sup_norm: T) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        if !(lipschitz > T::zero()) || !lipschitz.is_finite() {
            return Err(Error::Domain(format!("activation `{name}`: Lipschitz constant must be finite and positive")));
        }
        if !(sup_norm > T::zero()) {
            return Err(Error::Domain(format!("activation `{name}`: sup norm must be positive")));
        }
        if f(T::zero()) != T::zero() {
            return Err(Error::Domain(format!("activation `{name}` does not vanish at 0")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let slack = T::of(1e-9);
        for _ in 0..256 {
            let s = T::of(rng.random_range(-10.0..10.0));
            let t = T::of(rng.random_range(-10.0..10.0));
            let (fs, ft) = (f(s), f(t));
            if (fs - ft).abs() > lipschitz * (s - t).abs() + slack {
                return Err(Error::Domain(format!(
                    "activation `{name}` violates its declared Lipschitz constant at ({s}, {t})"
                )));
            }
            if sup_norm.is_finite() && (fs.abs() > sup_norm + slack) {
                return Err(Error::Domain(format!("activation `{name}` exceeds its declared sup norm at {s}")));
            }
        }
        Ok(Self { name: name.to_string(), kind: Kind::Custom(Arc::new(f)), lipschitz, sup_norm })
    }

    #[inline]
    pub fn eval(&self, s: T) -> T {
        match &self.kind {
            Kind::Tanh => s.tanh(),
            Kind::PwlSigmoid => {
                let one = T::one();
                ((s + one).abs() - (s - one).abs()) / (one + one)
            }
            Kind::Identity => s,
            Kind::Custom(f) => f(s),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    /// `‖φ‖_∞`; infinite for unbounded activations.
    pub fn sup_norm(&self) -> T {
        self.sup_norm
    }

    pub fn is_bounded(&self) -> bool {
        self.sup_norm.is_finite()
    }
}

impl<T> fmt::Debug for Activation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Activation({})", self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_vanish_at_zero() {
        for name in ["tanh", "pwl_sigmoid", "identity"] {
            let a = Activation::<f64>::by_name(name).unwrap();
            assert_eq!(a.eval(0.0), 0.0);
            assert_eq!(a.lipschitz(), 1.0);
        }
        assert!(!Activation::<f64>::identity().is_bounded());
        assert!(Activation::<f64>::by_name("relu").is_err());
    }

    #[test]
    fn pwl_sigmoid_branches() {
        let a = Activation::<f64>::pwl_sigmoid();
        assert_eq!(a.eval(-3.0), -1.0);
        assert_eq!(a.eval(0.5), 0.5);
        assert_eq!(a.eval(3.0), 1.0);
        assert_eq!(a.eval(1.0), 1.0);
        assert_eq!(a.eval(-1.0), -1.0);
    }

    #[test]
    fn custom_checks() {
        let ok = Activation::<f64>::custom("half_tanh", |s: f64| 0.5 * s.tanh(), 0.5, 0.5).unwrap();
        assert_eq!(ok.eval(0.0), 0.0);
        assert!(Activation::<f64>::custom("shift", |s: f64| s + 1.0, 1.0, f64::INFINITY).is_err());
        assert!(Activation::<f64>::custom("steep", |s: f64| (3.0 * s).tanh(), 1.0, 1.0).is_err());
        assert!(Activation::<f64>::custom("zero_l", |s: f64| s, 0.0, 1.0).is_err());
    }

    #[test]
    fn lipschitz_spot_check_f32() {
        let a = Activation::<f32>::tanh();
        for k in -50..50 {
            let s = k as f32 * 0.1;
            let t = s + 0.05;
            assert!((a.eval(s) - a.eval(t)).abs() <= 0.05 + 1e-6);
        }
    }
}
