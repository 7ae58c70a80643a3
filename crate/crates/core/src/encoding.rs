//! Canonical byte encodings and serde helpers.
//!
//! Every multi-field hash input goes through [`Encoder`], which length-prefixes
//! each field so that concatenations are unambiguous. Scalars are fixed-width
//! big-endian; group elements use the backend's compressed form.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use ark_ff::{BigInteger, PrimeField};
use thiserror::Error;

/// Failure to decode a serialized value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("invalid length: expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("scalar is not a canonical residue")]
    NonCanonicalScalar,
    #[error("bytes do not encode a valid group element")]
    InvalidElement,
    #[error("invalid hex: {0}")]
    Hex(String),
    #[error("invalid decimal scalar: {0}")]
    Decimal(String),
}

/// Length-prefixed field concatenation.
#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(mut self, field: &[u8]) -> Self {
        self.buf.extend_from_slice(&(field.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(field);
        self
    }

    pub fn str(self, field: &str) -> Self {
        self.bytes(field.as_bytes())
    }

    pub fn u64(self, v: u64) -> Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u32(self, v: u32) -> Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn scalar<F: PrimeField>(self, s: &F) -> Self {
        self.bytes(&scalar_to_bytes(s))
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Serialized width of a scalar of field `F`.
pub fn scalar_width<F: PrimeField>() -> usize {
    (F::MODULUS_BIT_SIZE as usize).div_ceil(8)
}

/// Fixed-width big-endian encoding.
pub fn scalar_to_bytes<F: PrimeField>(s: &F) -> Vec<u8> {
    let width = scalar_width::<F>();
    let full = s.into_bigint().to_bytes_be();
    full[full.len() - width..].to_vec()
}

/// Strict decoding: rejects wrong widths and values `>= q`.
pub fn scalar_from_bytes<F: PrimeField>(bytes: &[u8]) -> Result<F, EncodingError> {
    let width = scalar_width::<F>();
    if bytes.len() != width {
        return Err(EncodingError::Length { expected: width, got: bytes.len() });
    }
    let s = F::from_be_bytes_mod_order(bytes);
    if scalar_to_bytes(&s) != bytes {
        return Err(EncodingError::NonCanonicalScalar);
    }
    Ok(s)
}

pub fn scalar_to_decimal<F: PrimeField>(s: &F) -> String {
    s.into_bigint().to_string()
}

pub fn scalar_from_decimal<F: PrimeField>(text: &str) -> Result<F, EncodingError> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(EncodingError::Decimal(text.to_string()));
    }
    let s = F::from_str(text).map_err(|_| EncodingError::Decimal(text.to_string()))?;
    let normalized = match text.trim_start_matches('0') {
        "" => "0",
        t => t,
    };
    if scalar_to_decimal(&s) != normalized {
        return Err(EncodingError::NonCanonicalScalar);
    }
    Ok(s)
}

pub fn from_hex(text: &str) -> Result<Vec<u8>, EncodingError> {
    hex::decode(text).map_err(|e| EncodingError::Hex(e.to_string()))
}

/// Serde adapter: byte strings as lowercase hex.
pub mod hex_bytes {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        from_hex(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: 32-byte digests as hex.
pub mod hex_digest {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        let raw = from_hex(&text).map_err(serde::de::Error::custom)?;
        raw.try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))
    }
}

/// Serde adapter: scalars as fixed-width hex.
pub mod scalar_hex {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<F: PrimeField, S: Serializer>(v: &F, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(scalar_to_bytes(v)))
    }

    pub fn deserialize<'de, F: PrimeField, D: Deserializer<'de>>(d: D) -> Result<F, D::Error> {
        let text = String::deserialize(d)?;
        let raw = from_hex(&text).map_err(serde::de::Error::custom)?;
        scalar_from_bytes(&raw).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: scalars as decimal strings.
pub mod scalar_dec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<F: PrimeField, S: Serializer>(v: &F, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&scalar_to_decimal(v))
    }

    pub fn deserialize<'de, F: PrimeField, D: Deserializer<'de>>(d: D) -> Result<F, D::Error> {
        let text = String::deserialize(d)?;
        scalar_from_decimal(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: sequences of scalars as decimal strings.
pub mod scalar_dec_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<F: PrimeField, S: Serializer>(v: &[F], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&scalar_to_decimal(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, F: PrimeField, D: Deserializer<'de>>(d: D) -> Result<Vec<F>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| scalar_from_decimal(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter: matrices of scalars as nested decimal strings.
pub mod scalar_dec_matrix {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<F: PrimeField, S: Serializer>(v: &[Vec<F>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = v
            .iter()
            .map(|row| row.iter().map(scalar_to_decimal).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, F: PrimeField, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<Vec<F>>, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        rows.iter()
            .map(|row| {
                row.iter()
                    .map(|t| scalar_from_decimal(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}
