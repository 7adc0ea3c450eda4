//! Flat named-array container used to serialise parameters and weights.
//!
//! JSON layout: `{"arrays": [{"name": "...", "shape": [r, c], "values": [...]}, ...]}`
//! with values in row-major order.

use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::grid::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedArrays {
    pub arrays: Vec<NamedArray>,
}

impl NamedArrays {
    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) {
        self.arrays.push(NamedArray { name: name.into(), shape, values });
    }

    pub fn push_matrix(&mut self, name: impl Into<String>, m: &Matrix) {
        self.push(name, vec![m.rows(), m.cols()], m.data().to_vec());
    }

    pub fn get(&self, name: &str) -> Result<&NamedArray> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Argument(format!("missing array `{name}`")))
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        let a = self.get(name)?;
        match a.shape.as_slice() {
            [r, c] => Matrix::from_vec(*r, *c, a.values.clone()),
            other => Err(shape(format!("array `{name}` has shape {other:?}, expected 2-D"))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let parsed: NamedArrays = serde_json::from_str(s)?;
        for a in &parsed.arrays {
            let n: usize = a.shape.iter().product();
            if n != a.values.len() {
                return Err(shape(format!(
                    "array `{}` shape {:?} holds {} values, found {}",
                    a.name,
                    a.shape,
                    n,
                    a.values.len()
                )));
            }
        }
        Ok(parsed)
    }
}
