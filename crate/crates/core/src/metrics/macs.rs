use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn one() -> usize {
    1
}

/// One convolution in a chain.
///
/// `concat_ch` counts extra channels concatenated onto the previous layer's
/// output before this layer (skip connections); `upsample` scales the
/// incoming spatial dims before the convolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    #[serde(default)]
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub concat_ch: usize,
    #[serde(default = "one")]
    pub upsample: usize,
}

impl LayerSpec {
    pub fn conv(name: impl Into<String>, in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> Self {
        Self { name: name.into(), in_ch, out_ch, kernel, stride, concat_ch: 0, upsample: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub layers: Vec<LayerSpec>,
}

impl NetworkConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerMacs {
    pub name: String,
    pub out_h: usize,
    pub out_w: usize,
    pub macs: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacReport {
    pub total: u64,
    pub layers: Vec<LayerMacs>,
}

/// Per-layer `out_h·out_w·in_ch·out_ch·k²` with `out = ceil(in / stride)`.
pub fn mac_table(config: &NetworkConfig, input_h: usize, input_w: usize) -> Result<MacReport> {
    if input_h == 0 || input_w == 0 {
        return Err(Error::Config("input dims must be positive".into()));
    }
    let (mut h, mut w) = (input_h, input_w);
    let mut prev_out: Option<usize> = None;
    let mut layers = Vec::with_capacity(config.layers.len());
    let mut total: u64 = 0;
    for (i, l) in config.layers.iter().enumerate() {
        if l.in_ch == 0 || l.out_ch == 0 || l.kernel == 0 || l.stride == 0 || l.upsample == 0 {
            return Err(Error::Config(format!("layer {i} has a zero-sized field")));
        }
        if let Some(p) = prev_out {
            if l.in_ch != p + l.concat_ch {
                return Err(Error::Config(format!(
                    "layer {i} expects {} input channels but receives {p} + {} concatenated",
                    l.in_ch, l.concat_ch
                )));
            }
        }
        h *= l.upsample;
        w *= l.upsample;
        h = h.div_ceil(l.stride);
        w = w.div_ceil(l.stride);
        let macs = (h * w) as u64 * l.in_ch as u64 * l.out_ch as u64 * (l.kernel * l.kernel) as u64;
        total += macs;
        let name = if l.name.is_empty() { format!("layer{i}") } else { l.name.clone() };
        layers.push(LayerMacs { name, out_h: h, out_w: w, macs });
        prev_out = Some(l.out_ch);
    }
    Ok(MacReport { total, layers })
}

pub fn count_macs(config: &NetworkConfig, input_h: usize, input_w: usize) -> Result<u64> {
    Ok(mac_table(config, input_h, input_w)?.total)
}
