//! Versioned JSON document for network parameters.
//!
//! Values are written with shortest round-trip decimal formatting, so every
//! `f64` (and widened `f32`) reloads bit-exactly.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::params::{Layer, NetworkParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NETWORK_FORMAT: &str = "deepfactor-network";
pub const NETWORK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub activation: Activation,
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major, `out_dim × in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerDocument>,
}

impl<T: Scalar> NetworkParams<T> {
    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            format: NETWORK_FORMAT.into(),
            version: NETWORK_VERSION,
            layers: self
                .layers()
                .iter()
                .map(|l| LayerDocument {
                    activation: l.activation,
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    weights: l.weights.iter().map(|v| v.as_f64()).collect(),
                    bias: l.bias.iter().map(|v| v.as_f64()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &NetworkDocument) -> Result<Self> {
        if doc.format != NETWORK_FORMAT {
            return Err(Error::InvalidArgument(format!("unknown network format '{}'", doc.format)));
        }
        if doc.version != NETWORK_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported network version {} (expected {NETWORK_VERSION})",
                doc.version
            )));
        }
        let layers = doc
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let weights = Array2::from_shape_vec(
                    (l.out_dim, l.in_dim),
                    l.weights.iter().map(|&v| T::lit(v)).collect(),
                )
                .map_err(|e| Error::InvalidNetwork(format!("layer {i} weights: {e}")))?;
                let bias = Array1::from_iter(l.bias.iter().map(|&v| T::lit(v)));
                Layer::new(weights, bias, l.activation)
            })
            .collect::<Result<Vec<_>>>()?;
        NetworkParams::new(layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("network document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
