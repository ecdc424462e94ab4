use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::Scalar;

/// Elementwise activation applied after a layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(T::zero()),
        }
    }

    /// First derivative at pre-activation `z`. ReLU uses 0 at the kink.
    #[inline]
    pub fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Tanh => {
                let t = z.tanh();
                T::one() - t * t
            }
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// First derivative expressed through the post-activation value `a = f(z)`.
    #[inline]
    pub(crate) fn derivative_from_output<T: Scalar>(self, z: T, a: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Tanh => T::one() - a * a,
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Second derivative at `z`; only meaningful for C² activations.
    #[inline]
    pub fn second_derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Identity | Activation::Relu => T::zero(),
            Activation::Tanh => {
                let t = z.tanh();
                -T::lit(2.0) * t * (T::one() - t * t)
            }
        }
    }

    /// Continuously differentiable (and C²) everywhere.
    pub fn is_smooth(self) -> bool {
        !matches!(self, Activation::Relu)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "linear" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::InvalidArgument(format!("unknown activation '{other}'"))),
        }
    }
}
