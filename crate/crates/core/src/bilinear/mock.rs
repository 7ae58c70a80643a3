use alloc::vec::Vec;
use core::fmt::Debug;
use core::marker::PhantomData;

use ark_ff::fields::{Fp64, MontBackend, MontConfig};
use ark_ff::PrimeField;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{h2, Backend, BackendKind, GroupElement};
use crate::encoding::{from_hex, scalar_from_bytes, scalar_to_bytes, EncodingError};

#[derive(MontConfig)]
#[modulus = "101"]
#[generator = "2"]
pub struct F101Config;
/// Toy field of order 101.
pub type F101 = Fp64<MontBackend<F101Config, 1>>;

#[derive(MontConfig)]
#[modulus = "7919"]
#[generator = "7"]
pub struct F7919Config;
pub type F7919 = Fp64<MontBackend<F7919Config, 1>>;

#[derive(MontConfig)]
#[modulus = "65537"]
#[generator = "3"]
pub struct F65537Config;
pub type F65537 = Fp64<MontBackend<F65537Config, 1>>;

/// Transparent exponent backend over the prime field `F`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Mock<F>(PhantomData<F>);

/// Mock backend sharing the BLS12-381 scalar field, so mask widths and
/// failure probabilities match the real backend.
pub type MockBls = Mock<ark_bls12_381::Fr>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SideG;
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SideH;
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SideGt;

/// A group element represented by its discrete logarithm to the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockElement<F, S> {
    pub log: F,
    side: PhantomData<S>,
}

impl<F, S> MockElement<F, S> {
    pub fn from_log(log: F) -> Self {
        Self { log, side: PhantomData }
    }
}

impl<F, S> GroupElement for MockElement<F, S>
where
    F: PrimeField,
    S: Debug + Clone + PartialEq + Eq + Send + Sync + 'static,
{
    type Scalar = F;

    fn identity() -> Self {
        Self::from_log(F::zero())
    }

    fn is_identity(&self) -> bool {
        self.log.is_zero()
    }

    fn mul(&self, rhs: &Self) -> Self {
        Self::from_log(self.log + rhs.log)
    }

    fn inv(&self) -> Self {
        Self::from_log(-self.log)
    }

    fn pow(&self, e: &F) -> Self {
        Self::from_log(self.log * e)
    }

    fn to_bytes(&self) -> Vec<u8> {
        scalar_to_bytes(&self.log)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
        scalar_from_bytes(bytes).map(Self::from_log)
    }
}

impl<F: PrimeField, S> Serialize for MockElement<F, S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        s.serialize_str(&hex::encode(scalar_to_bytes(&self.log)))
    }
}

impl<'de, F: PrimeField, S> Deserialize<'de> for MockElement<F, S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = alloc::string::String::deserialize(d)?;
        let raw = from_hex(&text).map_err(serde::de::Error::custom)?;
        scalar_from_bytes(&raw)
            .map(Self::from_log)
            .map_err(serde::de::Error::custom)
    }
}

impl<F: PrimeField> Backend for Mock<F> {
    type Scalar = F;
    type G = MockElement<F, SideG>;
    type H = MockElement<F, SideH>;
    type Gt = MockElement<F, SideGt>;

    const KIND: BackendKind = BackendKind::Mock;

    fn curve_name() -> &'static str {
        "mock-exponent"
    }

    fn security_bits() -> u32 {
        0
    }

    fn g() -> Self::G {
        MockElement::from_log(F::one())
    }

    fn h() -> Self::H {
        MockElement::from_log(F::one())
    }

    fn pairing(p: &Self::G, q: &Self::H) -> Self::Gt {
        MockElement::from_log(p.log * q.log)
    }

    fn hash_to_g(input: &[u8]) -> Self::G {
        MockElement::from_log(h2::<F>(input))
    }
}
