use alloc::vec::Vec;

use ark_bls12_381::{g1, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::{CurveGroup, PrimeGroup};
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;

use super::{Backend, BackendKind, GroupElement, DST_H1};
use crate::encoding::{from_hex, EncodingError};

/// BLS12-381 pairing backend.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bls12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct G1Element(pub G1Projective);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct G2Element(pub G2Projective);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GtElement(pub PairingOutput<Bls12_381>);

macro_rules! curve_element {
    ($name:ident, $proj:ty, $affine:ty) => {
        impl GroupElement for $name {
            type Scalar = Fr;

            fn identity() -> Self {
                Self(<$proj>::default())
            }

            fn is_identity(&self) -> bool {
                self.0 == <$proj>::default()
            }

            fn mul(&self, rhs: &Self) -> Self {
                Self(self.0 + rhs.0)
            }

            fn inv(&self) -> Self {
                Self(-self.0)
            }

            fn pow(&self, e: &Fr) -> Self {
                Self(self.0 * e)
            }

            fn to_bytes(&self) -> Vec<u8> {
                let mut out = Vec::new();
                self.0
                    .into_affine()
                    .serialize_compressed(&mut out)
                    .expect("serializing into a Vec cannot fail");
                out
            }

            fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
                <$affine>::deserialize_compressed(bytes)
                    .map(|p| Self(p.into()))
                    .map_err(|_| EncodingError::InvalidElement)
            }
        }
    };
}

curve_element!(G1Element, G1Projective, G1Affine);
curve_element!(G2Element, G2Projective, G2Affine);

impl GroupElement for GtElement {
    type Scalar = Fr;

    fn identity() -> Self {
        Self(PairingOutput::default())
    }

    fn is_identity(&self) -> bool {
        self.0 == PairingOutput::default()
    }

    fn mul(&self, rhs: &Self) -> Self {
        Self(self.0 + rhs.0)
    }

    fn inv(&self) -> Self {
        Self(-self.0)
    }

    fn pow(&self, e: &Fr) -> Self {
        Self(self.0 * e)
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.0
            .serialize_compressed(&mut out)
            .expect("serializing into a Vec cannot fail");
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
        PairingOutput::<Bls12_381>::deserialize_compressed(bytes)
            .map(Self)
            .map_err(|_| EncodingError::InvalidElement)
    }
}

macro_rules! hex_serde {
    ($name:ident) => {
        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(self.to_bytes()))
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = alloc::string::String::deserialize(d)?;
                let raw = from_hex(&text).map_err(serde::de::Error::custom)?;
                Self::from_bytes(&raw).map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_serde!(G1Element);
hex_serde!(G2Element);
hex_serde!(GtElement);

type G1Hasher = MapToCurveBasedHasher<G1Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g1::Config>>;

impl Backend for Bls12 {
    type Scalar = Fr;
    type G = G1Element;
    type H = G2Element;
    type Gt = GtElement;

    const KIND: BackendKind = BackendKind::RealCurve;

    fn curve_name() -> &'static str {
        "BLS12-381"
    }

    fn security_bits() -> u32 {
        117
    }

    fn g() -> G1Element {
        G1Element(G1Projective::generator())
    }

    fn h() -> G2Element {
        G2Element(G2Projective::generator())
    }

    fn pairing(p: &G1Element, q: &G2Element) -> GtElement {
        GtElement(Bls12_381::pairing(p.0, q.0))
    }

    fn multi_pairing(pairs: &[(G1Element, G2Element)]) -> GtElement {
        let (ps, qs): (Vec<_>, Vec<_>) = pairs.iter().map(|(p, q)| (p.0, q.0)).unzip();
        GtElement(Bls12_381::multi_pairing(ps, qs))
    }

    fn hash_to_g(input: &[u8]) -> G1Element {
        let hasher = G1Hasher::new(DST_H1).expect("static hash-to-curve parameters are valid");
        let point = hasher.hash(input).expect("hash-to-curve is total on BLS12-381 G1");
        G1Element(point.into())
    }
}
