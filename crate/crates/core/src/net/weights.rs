use super::ToyNetConfig;
use crate::attention::AttentionParams;
use crate::error::{shape, Result};
use crate::grid::{conv2d, Grid, Kernel, Padding};
use crate::named::NamedArrays;
use crate::rng::XorShift64;

/// 3×3 convolution with per-output-channel bias and reflect padding.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub kernel: Kernel,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    fn zeros(in_ch: usize, out_ch: usize) -> Result<Self> {
        Ok(Self { kernel: Kernel::zeros(out_ch, in_ch, 3, 3)?, bias: vec![0.0; out_ch] })
    }

    /// Uniform `±1/√fan_in` weights and biases.
    fn seeded(in_ch: usize, out_ch: usize, rng: &mut XorShift64) -> Result<Self> {
        let fan_in = in_ch * 9;
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weights = (0..out_ch * fan_in).map(|_| rng.uniform(-bound, bound)).collect();
        let bias = (0..out_ch).map(|_| rng.uniform(-bound, bound)).collect();
        Ok(Self { kernel: Kernel::new(out_ch, in_ch, 3, 3, weights)?, bias })
    }

    pub fn apply(&self, input: &Grid, stride: usize) -> Result<Grid> {
        let z = conv2d(input, &self.kernel, stride, Padding::Reflect)?;
        let (h, w, c) = z.dims();
        let mut data = z.into_data();
        for (i, v) in data.iter_mut().enumerate() {
            *v += self.bias[i % c];
        }
        Grid::new(h, w, c, data)
    }

    pub fn apply_relu(&self, input: &Grid, stride: usize) -> Result<Grid> {
        self.apply(input, stride)?.map(|v| v.max(0.0))
    }

    fn append_named(&self, prefix: &str, out: &mut NamedArrays) {
        let (kh, kw) = self.kernel.size();
        out.push(
            format!("{prefix}.weight"),
            vec![self.kernel.out_channels(), self.kernel.in_channels(), kh, kw],
            self.kernel.weights().to_vec(),
        );
        out.push(format!("{prefix}.bias"), vec![self.bias.len()], self.bias.clone());
    }

    fn from_named(arrays: &NamedArrays, prefix: &str, in_ch: usize, out_ch: usize) -> Result<Self> {
        let w = arrays.get(&format!("{prefix}.weight"))?;
        let b = arrays.get(&format!("{prefix}.bias"))?;
        if w.shape != [out_ch, in_ch, 3, 3] || b.shape != [out_ch] {
            return Err(shape(format!("{prefix} has shapes {:?}/{:?}", w.shape, b.shape)));
        }
        Ok(Self { kernel: Kernel::new(out_ch, in_ch, 3, 3, w.values.clone())?, bias: b.values.clone() })
    }
}

/// Per-channel `γ·(x − μ)/√(σ² + ε) + β` with frozen statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl AffineNorm {
    pub const EPS: f64 = 1e-5;

    /// Unit statistics: `γ = 1`, `β = 0`, `μ = 0`, `σ² = 1`.
    pub fn identity(ch: usize) -> Self {
        Self { gamma: vec![1.0; ch], beta: vec![0.0; ch], mean: vec![0.0; ch], var: vec![1.0; ch] }
    }

    pub fn apply(&self, x: &Grid) -> Result<Grid> {
        let (h, w, c) = x.dims();
        if c != self.gamma.len() {
            return Err(shape(format!("norm has {} channels, input has {c}", self.gamma.len())));
        }
        let scale: Vec<f64> = (0..c).map(|i| self.gamma[i] / (self.var[i] + Self::EPS).sqrt()).collect();
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = i % c;
                (v - self.mean[k]) * scale[k] + self.beta[k]
            })
            .collect();
        Grid::new(h, w, c, data)
    }

    fn append_named(&self, prefix: &str, out: &mut NamedArrays) {
        for (name, v) in [("gamma", &self.gamma), ("beta", &self.beta), ("mean", &self.mean), ("var", &self.var)] {
            out.push(format!("{prefix}.{name}"), vec![v.len()], v.clone());
        }
    }

    fn from_named(arrays: &NamedArrays, prefix: &str, ch: usize) -> Result<Self> {
        let get = |name: &str| -> Result<Vec<f64>> {
            let a = arrays.get(&format!("{prefix}.{name}"))?;
            if a.shape != [ch] {
                return Err(shape(format!("{prefix}.{name} has shape {:?}, expected [{ch}]", a.shape)));
            }
            Ok(a.values.clone())
        };
        let norm = Self { gamma: get("gamma")?, beta: get("beta")?, mean: get("mean")?, var: get("var")? };
        if norm.var.iter().any(|v| *v < 0.0) {
            return Err(shape(format!("{prefix}.var must be non-negative")));
        }
        Ok(norm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpBlock {
    pub conv_in: ConvLayer,
    pub conv_res: ConvLayer,
}

/// All network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyNetWeights {
    pub encoder: [ConvLayer; 4],
    pub up1: [UpBlock; 3],
    pub up2: UpBlock,
    pub out_conv1: ConvLayer,
    pub out_norm1: AffineNorm,
    pub out_conv2: ConvLayer,
    pub out_norm2: AffineNorm,
    pub memory: AttentionParams,
}

/// `(in, out)` channel counts for every conv, in construction order.
fn conv_shapes(config: &ToyNetConfig) -> Vec<(String, usize, usize)> {
    let [w1, w2, w4, w8] = config.widths;
    let mut v = Vec::new();
    let mut prev = 3;
    for (k, w) in config.widths.into_iter().enumerate() {
        v.push((format!("enc{}", k + 1), prev, w));
        prev = w;
    }
    let mut prev = w8;
    for (name, skip) in [("up1_8", w4), ("up1_4", w2), ("up1_2", w1)] {
        v.push((format!("{name}.in"), prev + skip + 3, skip));
        v.push((format!("{name}.res"), skip, skip));
        prev = skip;
    }
    v.push(("up2.in".into(), prev + 3, w1));
    v.push(("up2.res".into(), w1, w1));
    v.push(("out1".into(), w1, w1));
    v.push(("out2".into(), w1, 4));
    v
}

impl ToyNetWeights {
    fn build(config: &ToyNetConfig, mut conv: impl FnMut(usize, usize) -> Result<ConvLayer>, memory: AttentionParams) -> Result<Self> {
        config.validate()?;
        let shapes = conv_shapes(config);
        let mut layers = shapes.iter().map(|(_, i, o)| conv(*i, *o)).collect::<Result<Vec<_>>>()?.into_iter();
        let mut next = || layers.next().expect("layer count");
        let encoder = [next(), next(), next(), next()];
        let mut up = || UpBlock { conv_in: next(), conv_res: next() };
        let up1 = [up(), up(), up()];
        let up2 = up();
        let w1 = config.widths[0];
        Ok(Self {
            encoder,
            up1,
            up2,
            out_conv1: next(),
            out_norm1: AffineNorm::identity(w1),
            out_conv2: next(),
            out_norm2: AffineNorm::identity(4),
            memory,
        })
    }

    pub fn zeros(config: &ToyNetConfig) -> Result<Self> {
        Self::build(config, ConvLayer::zeros, AttentionParams::zeros(config.c_f(), config.d_k, config.d_v))
    }

    /// Convolutions are drawn from one [`XorShift64`] stream seeded with
    /// `config.seed`, in layer order; the memory block is seeded with the
    /// next value of that stream after all convolutions.
    pub fn seeded(config: &ToyNetConfig) -> Result<Self> {
        let mut rng = XorShift64::new(config.seed);
        let mut me = Self::build(config, |i, o| ConvLayer::seeded(i, o, &mut rng), AttentionParams::zeros(1, 1, 1))?;
        me.memory = AttentionParams::seeded(config.c_f(), config.d_k, config.d_v, rng.next_u64());
        Ok(me)
    }

    fn convs(&self) -> Vec<&ConvLayer> {
        let mut v: Vec<&ConvLayer> = self.encoder.iter().collect();
        for b in self.up1.iter().chain(std::iter::once(&self.up2)) {
            v.push(&b.conv_in);
            v.push(&b.conv_res);
        }
        v.push(&self.out_conv1);
        v.push(&self.out_conv2);
        v
    }

    pub(crate) fn check_config(&self, config: &ToyNetConfig) -> Result<()> {
        let shapes = conv_shapes(config);
        for ((name, i, o), layer) in shapes.iter().zip(self.convs()) {
            if (layer.kernel.in_channels(), layer.kernel.out_channels()) != (*i, *o) {
                return Err(shape(format!("{name} weights do not match the configured widths")));
            }
        }
        let m = &self.memory;
        if (m.c_f(), m.d_k(), m.d_v()) != (config.c_f(), config.d_k, config.d_v) {
            return Err(shape("memory block dims do not match the config"));
        }
        Ok(())
    }

    /// Names follow `enc1.weight`, `up1_8.in.bias`, `out_norm1.gamma`,
    /// `memory.w_q`, …
    pub fn to_named(&self, config: &ToyNetConfig) -> NamedArrays {
        let mut out = NamedArrays::default();
        for ((name, _, _), layer) in conv_shapes(config).iter().zip(self.convs()) {
            layer.append_named(name, &mut out);
        }
        self.out_norm1.append_named("out_norm1", &mut out);
        self.out_norm2.append_named("out_norm2", &mut out);
        self.memory.append_named("memory.", &mut out);
        out
    }

    pub fn from_named(arrays: &NamedArrays, config: &ToyNetConfig) -> Result<Self> {
        let shapes = conv_shapes(config);
        let mut idx = 0;
        let me = Self::build(
            config,
            |_, _| {
                let (name, i, o) = &shapes[idx];
                idx += 1;
                ConvLayer::from_named(arrays, name, *i, *o)
            },
            AttentionParams::from_named_prefixed(arrays, "memory.")?,
        )?;
        let me = Self {
            out_norm1: AffineNorm::from_named(arrays, "out_norm1", config.widths[0])?,
            out_norm2: AffineNorm::from_named(arrays, "out_norm2", 4)?,
            ..me
        };
        me.check_config(config)?;
        Ok(me)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_roundtrip() {
        let cfg = ToyNetConfig { widths: [2, 3, 4, 5], d_k: 2, d_v: 3, seed: 4 };
        let w = ToyNetWeights::seeded(&cfg).unwrap();
        let json = w.to_named(&cfg).to_json().unwrap();
        let back = ToyNetWeights::from_named(&NamedArrays::from_json(&json).unwrap(), &cfg).unwrap();
        assert_eq!(back, w);
        let other = ToyNetConfig { widths: [2, 3, 4, 6], ..cfg };
        assert!(ToyNetWeights::from_named(&NamedArrays::from_json(&json).unwrap(), &other).is_err());
    }

    #[test]
    fn seeding_is_deterministic() {
        let cfg = ToyNetConfig::demo(3);
        assert_eq!(ToyNetWeights::seeded(&cfg).unwrap(), ToyNetWeights::seeded(&cfg).unwrap());
        assert_ne!(ToyNetWeights::seeded(&cfg).unwrap(), ToyNetWeights::seeded(&ToyNetConfig::demo(4)).unwrap());
    }
}
