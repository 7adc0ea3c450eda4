use crate::error::{argument, shape, Result};
use crate::grid::Matrix;
use crate::named::NamedArrays;
use crate::rng::XorShift64;

/// Serialised names, in field order.
pub const PARAM_NAMES: [&str; 8] =
    ["w_q", "w_k", "w_v", "w_o", "head_alpha_w", "head_alpha_b", "head_fg_w", "head_fg_b"];

/// Projections and heads of the memory block.
///
/// Shapes: `w_q`, `w_k`: `C_f×d_k`; `w_v`: `C_f×d_v`; `w_o`: `d_v×C_f`;
/// `head_alpha_w`: `C_f×1`, `head_alpha_b`: `1×1`; `head_fg_w`: `C_f×3`,
/// `head_fg_b`: `1×3`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
    pub head_alpha_w: Matrix,
    pub head_alpha_b: Matrix,
    pub head_fg_w: Matrix,
    pub head_fg_b: Matrix,
}

/// Gradient of a scalar objective, one block per [`AttentionParams`] field.
#[derive(Clone, Debug, PartialEq)]
pub struct AttnGradients {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
    pub head_alpha_w: Matrix,
    pub head_alpha_b: Matrix,
    pub head_fg_w: Matrix,
    pub head_fg_b: Matrix,
}

impl AttentionParams {
    pub fn zeros(c_f: usize, d_k: usize, d_v: usize) -> Self {
        Self {
            w_q: Matrix::zeros(c_f, d_k),
            w_k: Matrix::zeros(c_f, d_k),
            w_v: Matrix::zeros(c_f, d_v),
            w_o: Matrix::zeros(d_v, c_f),
            head_alpha_w: Matrix::zeros(c_f, 1),
            head_alpha_b: Matrix::zeros(1, 1),
            head_fg_w: Matrix::zeros(c_f, 3),
            head_fg_b: Matrix::zeros(1, 3),
        }
    }

    /// Uniform `±1/√fan_in` weights drawn from [`XorShift64`] in field order; biases zero.
    pub fn seeded(c_f: usize, d_k: usize, d_v: usize, seed: u64) -> Self {
        let mut rng = XorShift64::new(seed);
        let mut draw = |rows: usize, cols: usize, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            Matrix::from_fn(rows, cols, |_, _| rng.uniform(-bound, bound))
        };
        Self {
            w_q: draw(c_f, d_k, c_f),
            w_k: draw(c_f, d_k, c_f),
            w_v: draw(c_f, d_v, c_f),
            w_o: draw(d_v, c_f, d_v),
            head_alpha_w: draw(c_f, 1, c_f),
            head_alpha_b: Matrix::zeros(1, 1),
            head_fg_w: draw(c_f, 3, c_f),
            head_fg_b: Matrix::zeros(1, 3),
        }
    }

    pub fn c_f(&self) -> usize {
        self.w_q.rows()
    }

    pub fn d_k(&self) -> usize {
        self.w_q.cols()
    }

    pub fn d_v(&self) -> usize {
        self.w_v.cols()
    }

    pub fn blocks(&self) -> [&Matrix; 8] {
        [
            &self.w_q,
            &self.w_k,
            &self.w_v,
            &self.w_o,
            &self.head_alpha_w,
            &self.head_alpha_b,
            &self.head_fg_w,
            &self.head_fg_b,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.w_q,
            &mut self.w_k,
            &mut self.w_v,
            &mut self.w_o,
            &mut self.head_alpha_w,
            &mut self.head_alpha_b,
            &mut self.head_fg_w,
            &mut self.head_fg_b,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let (c_f, d_k, d_v) = (self.c_f(), self.d_k(), self.d_v());
        if c_f == 0 || d_k == 0 || d_v == 0 {
            return Err(argument("C_f, d_k and d_v must be positive"));
        }
        let want = [(c_f, d_k), (c_f, d_k), (c_f, d_v), (d_v, c_f), (c_f, 1), (1, 1), (c_f, 3), (1, 3)];
        for ((name, m), w) in PARAM_NAMES.iter().zip(self.blocks()).zip(want) {
            if m.shape() != w {
                return Err(shape(format!("{name} is {:?}, expected {w:?}", m.shape())));
            }
            if m.data().iter().any(|v| !v.is_finite()) {
                return Err(argument(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// In-place `θ ← θ − step·g`.
    pub fn apply_step(&mut self, grads: &AttnGradients, step: f64) {
        for (p, g) in self.blocks_mut().into_iter().zip(grads.blocks()) {
            for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                *pv -= step * gv;
            }
        }
    }

    pub fn to_named(&self) -> NamedArrays {
        let mut out = NamedArrays::default();
        self.append_named("", &mut out);
        out
    }

    pub(crate) fn append_named(&self, prefix: &str, out: &mut NamedArrays) {
        for (name, m) in PARAM_NAMES.iter().zip(self.blocks()) {
            out.push_matrix(format!("{prefix}{name}"), m);
        }
    }

    pub fn from_named(arrays: &NamedArrays) -> Result<Self> {
        Self::from_named_prefixed(arrays, "")
    }

    pub(crate) fn from_named_prefixed(arrays: &NamedArrays, prefix: &str) -> Result<Self> {
        let m = |n: &str| arrays.matrix(&format!("{prefix}{n}"));
        let p = Self {
            w_q: m("w_q")?,
            w_k: m("w_k")?,
            w_v: m("w_v")?,
            w_o: m("w_o")?,
            head_alpha_w: m("head_alpha_w")?,
            head_alpha_b: m("head_alpha_b")?,
            head_fg_w: m("head_fg_w")?,
            head_fg_b: m("head_fg_b")?,
        };
        p.validate()?;
        Ok(p)
    }
}

impl AttnGradients {
    pub fn zeros_like(p: &AttentionParams) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Self {
            w_q: z(&p.w_q),
            w_k: z(&p.w_k),
            w_v: z(&p.w_v),
            w_o: z(&p.w_o),
            head_alpha_w: z(&p.head_alpha_w),
            head_alpha_b: z(&p.head_alpha_b),
            head_fg_w: z(&p.head_fg_w),
            head_fg_b: z(&p.head_fg_b),
        }
    }

    pub fn blocks(&self) -> [&Matrix; 8] {
        [
            &self.w_q,
            &self.w_k,
            &self.w_v,
            &self.w_o,
            &self.head_alpha_w,
            &self.head_alpha_b,
            &self.head_fg_w,
            &self.head_fg_b,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.w_q,
            &mut self.w_k,
            &mut self.w_v,
            &mut self.w_o,
            &mut self.head_alpha_w,
            &mut self.head_alpha_b,
            &mut self.head_fg_w,
            &mut self.head_fg_b,
        ]
    }

    /// `self += s·other`
    pub fn accumulate(&mut self, other: &AttnGradients, s: f64) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += s * y;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks().iter().fold(0.0, |m, b| m.max(b.max_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_roundtrip_and_shapes() {
        let p = AttentionParams::seeded(6, 4, 5, 3);
        p.validate().unwrap();
        let json = p.to_named().to_json().unwrap();
        let back = AttentionParams::from_named(&NamedArrays::from_json(&json).unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!((p.c_f(), p.d_k(), p.d_v()), (6, 4, 5));
    }

    #[test]
    fn validate_catches_bad_shape() {
        let mut p = AttentionParams::zeros(4, 2, 2);
        p.w_o = Matrix::zeros(3, 4);
        assert!(p.validate().is_err());
    }

    #[test]
    fn apply_step_moves_against_gradient() {
        let mut p = AttentionParams::zeros(2, 1, 1);
        let mut g = AttnGradients::zeros_like(&p);
        g.head_alpha_b.set(0, 0, 2.0);
        p.apply_step(&g, 0.5);
        assert_eq!(p.head_alpha_b.get(0, 0), -1.0);
    }
}
