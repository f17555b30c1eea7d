//! JSON channel documents.
//!
//! ```text
//! {"version":1, "dim_in":2, "dim_out":2, "repr":"unitary",
//!  "data":[[[1,0],[0,0]],[[0,0],[1,0]]], "label":"id"}
//! ```
//! Every complex scalar is a two-element `[re, im]` array.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use super::{to_choi, Channel, ChannelRepr};
use crate::error::{Error, Result};
use crate::linalg::CMat;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReprTag {
    Kraus,
    Choi,
    Unitary,
    Cq,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub version: u32,
    pub dim_in: usize,
    pub dim_out: usize,
    pub repr: ReprTag,
    pub data: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

pub(crate) fn matrix_to_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| scalar_to_json(m[(i, j)])).collect())).collect())
}

fn scalar_to_json(z: Complex64) -> Value {
    serde_json::json!([z.re, z.im])
}

fn scalar_from_json(v: &Value) -> Result<Complex64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => {
            let re = re.as_f64().ok_or_else(|| Error::Format("real part is not a number".into()))?;
            let im = im.as_f64().ok_or_else(|| Error::Format("imaginary part is not a number".into()))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(Error::Format(format!("expected [re, im], got {v}"))),
    }
}

pub(crate) fn matrix_from_json(v: &Value, rows: usize, cols: usize) -> Result<CMat> {
    let row_vals = v.as_array().ok_or_else(|| Error::Format("matrix must be an array of rows".into()))?;
    if row_vals.len() != rows {
        return Err(Error::DimensionMismatch(format!("expected {rows} rows, found {}", row_vals.len())));
    }
    let mut m = CMat::zeros(rows, cols);
    for (i, row) in row_vals.iter().enumerate() {
        let entries = row.as_array().ok_or_else(|| Error::Format("matrix row must be an array".into()))?;
        if entries.len() != cols {
            return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {cols}", entries.len())));
        }
        for (j, e) in entries.iter().enumerate() {
            m[(i, j)] = scalar_from_json(e)?;
        }
    }
    Ok(m)
}

/// Square matrix whose size is read from the document.
pub(crate) fn square_matrix_from_json(v: &Value) -> Result<CMat> {
    let n = v.as_array().map(|a| a.len()).ok_or_else(|| Error::Format("matrix must be an array of rows".into()))?;
    matrix_from_json(v, n, n)
}

/// `#[serde(with = "...")]` adaptor for square complex matrices.
pub(crate) mod cmat_json {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{matrix_to_json, square_matrix_from_json};
    use crate::linalg::CMat;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&matrix_to_json(m), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        square_matrix_from_json(&v).map_err(D::Error::custom)
    }
}

/// Optional variant of [`cmat_json`].
pub(crate) mod opt_cmat_json {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::linalg::CMat;

    pub fn serialize<S: Serializer>(m: &Option<CMat>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::cmat_json::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMat>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::cmat_json")] CMat);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

fn matrix_list_from_json(v: &Value, rows: usize, cols: usize) -> Result<Vec<CMat>> {
    v.as_array()
        .ok_or_else(|| Error::Format("expected a list of matrices".into()))?
        .iter()
        .map(|m| matrix_from_json(m, rows, cols))
        .collect()
}

impl ChannelDocument {
    /// Canonical Choi-form document.
    pub fn from_channel(ch: &Channel) -> Self {
        Self {
            version: FORMAT_VERSION,
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            repr: ReprTag::Choi,
            data: matrix_to_json(ch.choi()),
            label: ch.label().map(str::to_owned),
        }
    }

    pub fn from_repr(repr: &ChannelRepr, label: Option<String>) -> Self {
        let (dim_in, dim_out, tag, data) = match repr {
            ChannelRepr::Kraus { dim_in, dim_out, operators } => {
                (*dim_in, *dim_out, ReprTag::Kraus, Value::Array(operators.iter().map(matrix_to_json).collect()))
            }
            ChannelRepr::Choi { dim_in, dim_out, matrix } => (*dim_in, *dim_out, ReprTag::Choi, matrix_to_json(matrix)),
            ChannelRepr::Unitary(u) => (u.nrows(), u.nrows(), ReprTag::Unitary, matrix_to_json(u)),
            ChannelRepr::Cq { states } => (
                states.len(),
                states.first().map_or(0, |s| s.nrows()),
                ReprTag::Cq,
                Value::Array(states.iter().map(matrix_to_json).collect()),
            ),
        };
        Self { version: FORMAT_VERSION, dim_in, dim_out, repr: tag, data, label }
    }

    pub fn to_repr(&self) -> Result<ChannelRepr> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        let (din, dout) = (self.dim_in, self.dim_out);
        Ok(match self.repr {
            ReprTag::Kraus => ChannelRepr::Kraus { dim_in: din, dim_out: dout, operators: matrix_list_from_json(&self.data, dout, din)? },
            ReprTag::Choi => {
                ChannelRepr::Choi { dim_in: din, dim_out: dout, matrix: matrix_from_json(&self.data, din * dout, din * dout)? }
            }
            ReprTag::Unitary => {
                if din != dout {
                    return Err(Error::DimensionMismatch("unitary channel needs dim_in = dim_out".into()));
                }
                ChannelRepr::Unitary(matrix_from_json(&self.data, din, din)?)
            }
            ReprTag::Cq => {
                let states = matrix_list_from_json(&self.data, dout, dout)?;
                if states.len() != din {
                    return Err(Error::DimensionMismatch(format!("{} cq states for dim_in {din}", states.len())));
                }
                ChannelRepr::Cq { states }
            }
        })
    }

    pub fn to_channel(&self) -> Result<Channel> {
        let ch = to_choi(&self.to_repr()?)?;
        Ok(match &self.label {
            Some(l) => ch.with_label(l.clone()),
            None => ch,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel documents always serialise")
    }
}

/// Channels serialise as canonical Choi documents.
impl Serialize for Channel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelDocument::from_channel(self).serialize(s)
    }
}

/// States serialise as `[re, im]` matrices.
impl Serialize for super::DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(self.matrix()).serialize(s)
    }
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<Channel> {
    let text = std::fs::read_to_string(path)?;
    ChannelDocument::parse(&text)?.to_channel()
}

pub fn save_channel(path: impl AsRef<Path>, ch: &Channel) -> Result<()> {
    std::fs::write(path, ChannelDocument::from_channel(ch).to_json_string())?;
    Ok(())
}
