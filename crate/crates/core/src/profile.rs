//! Per-layer model profiles.
//!
//! A [`LayerProfile`] holds, for an `L`-layer model, the cumulative forward
//! and backward workloads of the first `j` layers (in FLOPs per sample) and
//! the activation size emitted at cut layer `j` (in bits per sample). Layers
//! are indexed from 1 in the public API, matching cut indices.
//!
//! Workloads are FLOPs, never cycles: the compute intensity of the executing
//! device converts them to cycles at evaluation time.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk profile schema. All arrays are per-layer marginal values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub layers: usize,
    pub fp_flops: Vec<f64>,
    pub bp_flops: Vec<f64>,
    pub activation_bits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile", into = "ProfileFile")]
pub struct LayerProfile {
    fp_layer: Vec<f64>,
    bp_layer: Vec<f64>,
    fp_cumulative: Vec<f64>,
    bp_cumulative: Vec<f64>,
    activation_bits: Vec<f64>,
}

impl LayerProfile {
    /// Builds a profile from per-layer marginal workloads.
    pub fn build(per_layer_fp: &[f64], per_layer_bp: &[f64], activation_bits: &[f64]) -> Result<Self> {
        let layers = per_layer_fp.len();
        if per_layer_bp.len() != layers || activation_bits.len() != layers {
            return Err(Error::LengthMismatch(format!(
                "fp has {}, bp has {}, activation_bits has {} entries",
                layers,
                per_layer_bp.len(),
                activation_bits.len()
            )));
        }
        if layers < 2 {
            return Err(Error::LengthMismatch(format!(
                "a split model needs at least 2 layers, got {layers}"
            )));
        }
        for (field, values) in [
            ("fp_flops", per_layer_fp),
            ("bp_flops", per_layer_bp),
            ("activation_bits", activation_bits),
        ] {
            if let Some((index, &value)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > 0.0))
            {
                return Err(Error::NonPositiveEntry { field, index, value });
            }
        }
        Ok(Self::from_validated(per_layer_fp, per_layer_bp, activation_bits))
    }

    fn from_validated(fp: &[f64], bp: &[f64], act: &[f64]) -> Self {
        LayerProfile {
            fp_layer: fp.to_vec(),
            bp_layer: bp.to_vec(),
            fp_cumulative: prefix_sums(fp),
            bp_cumulative: prefix_sums(bp),
            activation_bits: act.to_vec(),
        }
    }

    pub fn layer_count(&self) -> usize {
        self.fp_layer.len()
    }

    /// `rho_j` for `j = 1..=L`, stored 0-based.
    pub fn fp_cumulative(&self) -> &[f64] {
        &self.fp_cumulative
    }

    /// `omega_j` for `j = 1..=L`, stored 0-based.
    pub fn bp_cumulative(&self) -> &[f64] {
        &self.bp_cumulative
    }

    pub fn activation_bits(&self) -> &[f64] {
        &self.activation_bits
    }

    pub fn fp_per_layer(&self) -> &[f64] {
        &self.fp_layer
    }

    pub fn bp_per_layer(&self) -> &[f64] {
        &self.bp_layer
    }

    /// Forward workload of the first `j` layers (1-based).
    pub fn rho(&self, j: usize) -> f64 {
        self.fp_cumulative[j - 1]
    }

    /// Backward workload of the first `j` layers (1-based).
    pub fn omega(&self, j: usize) -> f64 {
        self.bp_cumulative[j - 1]
    }

    /// Activation size at cut layer `j` (1-based).
    pub fn psi(&self, j: usize) -> f64 {
        self.activation_bits[j - 1]
    }

    pub fn total_fp(&self) -> f64 {
        *self.fp_cumulative.last().expect("profile has >= 2 layers")
    }

    pub fn total_bp(&self) -> f64 {
        *self.bp_cumulative.last().expect("profile has >= 2 layers")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ProfileFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        LayerProfile::try_from(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&ProfileFile::from(self.clone()))
            .expect("profile serialization is infallible");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn prefix_sums(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

impl TryFrom<ProfileFile> for LayerProfile {
    type Error = Error;

    /// Validates a profile read from disk, naming the violated invariant.
    fn try_from(file: ProfileFile) -> Result<Self> {
        let l = file.layers;
        if l < 2 {
            return Err(Error::InvariantViolation(format!("layers >= 2 (got {l})")));
        }
        for (name, len) in [
            ("fp_flops", file.fp_flops.len()),
            ("bp_flops", file.bp_flops.len()),
            ("activation_bits", file.activation_bits.len()),
        ] {
            if len != l {
                return Err(Error::InvariantViolation(format!(
                    "{name} has exactly L entries (L = {l}, got {len})"
                )));
            }
        }
        for (name, values) in [("fp_cumulative", &file.fp_flops), ("bp_cumulative", &file.bp_flops)] {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvariantViolation(format!("{name} finite")));
            }
            if values.iter().any(|&v| v < 0.0) {
                return Err(Error::InvariantViolation(format!("{name} non-decreasing")));
            }
            if values.contains(&0.0) {
                return Err(Error::InvariantViolation(format!(
                    "{name} strictly increasing (zero-work layer)"
                )));
            }
        }
        if file.activation_bits.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvariantViolation("activation_bits positive".into()));
        }
        Ok(Self::from_validated(&file.fp_flops, &file.bp_flops, &file.activation_bits))
    }
}

impl From<LayerProfile> for ProfileFile {
    fn from(p: LayerProfile) -> Self {
        ProfileFile {
            layers: p.layer_count(),
            fp_flops: p.fp_layer,
            bp_flops: p.bp_layer,
            activation_bits: p.activation_bits,
        }
    }
}

/// Four-layer profile used throughout the tests and docs:
/// `rho = [100, 300, 600, 1000]`, `omega = [200, 600, 1200, 2000]`,
/// `psi = [8000, 4000, 2000, 1000]`.
pub fn toy_profile() -> LayerProfile {
    LayerProfile::build(
        &[100.0, 200.0, 300.0, 400.0],
        &[200.0, 400.0, 600.0, 800.0],
        &[8000.0, 4000.0, 2000.0, 1000.0],
    )
    .expect("toy profile is valid")
}

pub const RESNET18_INPUT: (usize, usize, usize) = (224, 224, 3);
const BITS_PER_ELEMENT: f64 = 32.0;

/// Output shape of a feature map: (height, width, channels).
type Shape = (usize, usize, usize);

fn conv_out(len: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (len + 2 * pad - kernel) / stride + 1
}

/// FLOPs of a 2-D convolution (2 per multiply-accumulate) and its output shape.
fn conv2d(input: Shape, out_channels: usize, kernel: usize, stride: usize, pad: usize) -> (f64, Shape) {
    let (h, w, c) = input;
    let (ho, wo) = (conv_out(h, kernel, stride, pad), conv_out(w, kernel, stride, pad));
    let macs = kernel * kernel * c * out_channels * ho * wo;
    (2.0 * macs as f64, (ho, wo, out_channels))
}

fn basic_block(input: Shape, out_channels: usize, stride: usize) -> (f64, Shape) {
    let (f1, mid) = conv2d(input, out_channels, 3, stride, 1);
    let (f2, out) = conv2d(mid, out_channels, 3, 1, 1);
    let projection = if stride != 1 || input.2 != out_channels {
        conv2d(input, out_channels, 1, stride, 0).0
    } else {
        0.0
    };
    (f1 + f2 + projection, out)
}

/// ResNet-18 at 224x224x3, profiled at residual-block granularity.
///
/// Layer 1 is the stem (7x7/2 conv + 3x3/2 max-pool), layers 2..=9 are the
/// eight basic blocks (each cut sits after the skip connection), and layer
/// 10 is global average pooling plus the 1000-way classifier. Only conv and
/// linear layers are counted, at 2 FLOPs per MAC; backward work is twice the
/// forward work; activations are 32-bit floats.
pub fn resnet18_profile() -> LayerProfile {
    let mut fp = Vec::with_capacity(10);
    let mut act = Vec::with_capacity(10);
    let bits = |s: Shape| (s.0 * s.1 * s.2) as f64 * BITS_PER_ELEMENT;

    let (stem, conv1) = conv2d(RESNET18_INPUT, 64, 7, 2, 3);
    let pooled = (conv_out(conv1.0, 3, 2, 1), conv_out(conv1.1, 3, 2, 1), conv1.2);
    fp.push(stem);
    act.push(bits(pooled));

    let mut shape = pooled;
    for (channels, stride) in [(64, 1), (128, 2), (256, 2), (512, 2)] {
        for block in 0..2 {
            let (flops, out) = basic_block(shape, channels, if block == 0 { stride } else { 1 });
            fp.push(flops);
            act.push(bits(out));
            shape = out;
        }
    }

    fp.push(2.0 * (shape.2 * 1000) as f64);
    act.push(1000.0 * BITS_PER_ELEMENT);

    let bp: Vec<f64> = fp.iter().map(|f| 2.0 * f).collect();
    LayerProfile::build(&fp, &bp, &act).expect("resnet-18 profile is valid")
}
