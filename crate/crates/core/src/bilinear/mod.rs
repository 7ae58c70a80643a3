//! Asymmetric bilinear groups behind a single trait surface.
//!
//! Two backends implement [`Backend`]:
//!
//! * [`Bls12`]: BLS12-381, a Type-III pairing curve with a 381-bit base field.
//! * [`Mock`]: every element is stored as its discrete logarithm, so group
//!   operations are field operations and the pairing is multiplication of
//!   exponents. It is insecure by construction and exists so tests can check
//!   exponent identities directly.
//!
//! Group notation is multiplicative to match the protocol equations:
//! `mul` is the group operation and `pow` is exponentiation by a scalar.

mod hashing;
mod mock;
mod real;

pub use hashing::{
    attribute_input, column_input, digest256, gk_mask, h1, h2, h2_mask, hmsg, random_nonzero,
    DST_GK, DST_H1, DST_H2, DST_H2_MASK, DST_HMSG,
};
pub use mock::{F101, F65537, F7919, Mock, MockBls, MockElement, SideG, SideGt, SideH};
pub use real::{Bls12, G1Element, G2Element, GtElement};

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Debug;
use core::str::FromStr;

use ark_ff::PrimeField;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::EncodingError;

/// An element of one of the three groups `G`, `H`, `G_T`.
pub trait GroupElement:
    Clone + PartialEq + Eq + Debug + Send + Sync + Serialize + DeserializeOwned + 'static
{
    type Scalar: PrimeField;

    fn identity() -> Self;
    fn is_identity(&self) -> bool;
    fn mul(&self, rhs: &Self) -> Self;
    fn inv(&self) -> Self;
    fn pow(&self, e: &Self::Scalar) -> Self;
    fn to_bytes(&self) -> Vec<u8>;
    fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError>;

    fn div(&self, rhs: &Self) -> Self {
        self.mul(&rhs.inv())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    RealCurve,
    Mock,
}

impl FromStr for BackendKind {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" | "real-curve" => Ok(Self::RealCurve),
            "mock" => Ok(Self::Mock),
            other => Err(GroupError::UnknownBackend(other.to_string())),
        }
    }
}

impl core::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::RealCurve => f.write_str("real"),
            Self::Mock => f.write_str("mock"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("unknown backend {0:?} (expected real or mock)")]
    UnknownBackend(String),
    #[error("backend {backend} offers at most {supported}-bit security, {requested} requested")]
    UnsupportedSecurityLevel { backend: &'static str, supported: u32, requested: u32 },
}

/// A pairing `e: G x H -> G_T` on prime-order groups.
pub trait Backend: Clone + Debug + Default + Send + Sync + 'static {
    type Scalar: PrimeField;
    type G: GroupElement<Scalar = Self::Scalar>;
    type H: GroupElement<Scalar = Self::Scalar>;
    type Gt: GroupElement<Scalar = Self::Scalar>;

    const KIND: BackendKind;

    /// Curve identifier reported by benchmarks.
    fn curve_name() -> &'static str;
    /// Approximate security level in bits; zero for the mock backend.
    fn security_bits() -> u32;
    fn g() -> Self::G;
    fn h() -> Self::H;
    fn pairing(p: &Self::G, q: &Self::H) -> Self::Gt;
    /// Hash arbitrary bytes into `G` (the `H1` oracle).
    fn hash_to_g(input: &[u8]) -> Self::G;

    fn multi_pairing(pairs: &[(Self::G, Self::H)]) -> Self::Gt {
        pairs
            .iter()
            .fold(Self::Gt::identity(), |acc, (p, q)| acc.mul(&Self::pairing(p, q)))
    }

    /// `e(g, h)`.
    fn gt_generator() -> Self::Gt {
        Self::pairing(&Self::g(), &Self::h())
    }
}

/// Public description of the bilinear group in use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GroupParams<B: Backend> {
    pub backend: BackendKind,
    pub curve: String,
    /// Group order `q`, decimal.
    pub order: String,
    pub security_bits: u32,
    pub g: B::G,
    pub h: B::H,
}

impl<B: Backend> GroupParams<B> {
    pub fn pairing(&self, p: &B::G, q: &B::H) -> B::Gt {
        B::pairing(p, q)
    }
}

/// Instantiate backend `B` at the requested security level.
///
/// The mock backend accepts any request; it offers no security and is only
/// meant for exponent bookkeeping in tests.
pub fn group_setup<B: Backend>(security_bits: u32) -> Result<GroupParams<B>, GroupError> {
    if B::KIND == BackendKind::RealCurve && security_bits > B::security_bits() {
        return Err(GroupError::UnsupportedSecurityLevel {
            backend: B::curve_name(),
            supported: B::security_bits(),
            requested: security_bits,
        });
    }
    Ok(GroupParams {
        backend: B::KIND,
        curve: B::curve_name().to_string(),
        order: <B::Scalar as PrimeField>::MODULUS.to_string(),
        security_bits: B::security_bits(),
        g: B::g(),
        h: B::h(),
    })
}
