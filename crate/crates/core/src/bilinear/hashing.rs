//! Domain-separated hash functions used across the protocol.
//!
//! | name      | signature               | use                                   |
//! |-----------|-------------------------|---------------------------------------|
//! | `h1`      | bytes -> G              | attribute and column hashing in ABE   |
//! | `h2`      | bytes -> Z_q            | trapdoor derivation, signature challenges |
//! | `gk_mask` | bytes -> scalar-width mask | blinding the randomness `r`        |
//! | `h2_mask` | bytes -> scalar-width mask | blinding the trapdoor seed `R`     |
//! | `hmsg`    | bytes -> Z_q            | message digest before exponentiation  |

use alloc::vec::Vec;

use ark_ff::field_hashers::{DefaultFieldHasher, HashToField};
use ark_ff::PrimeField;
use rand_core::RngCore;
use sha2::{Digest, Sha256};

use super::Backend;

pub const DST_H1: &[u8] = b"CDEDIT-V1-H1-G1";
pub const DST_H2: &[u8] = b"CDEDIT-V1-H2";
pub const DST_HMSG: &[u8] = b"CDEDIT-V1-HMSG";
pub const DST_GK: &[u8] = b"CDEDIT-V1-GK";
pub const DST_H2_MASK: &[u8] = b"CDEDIT-V1-H2-MASK";

pub fn h1<B: Backend>(input: &[u8]) -> B::G {
    B::hash_to_g(input)
}

pub fn h2<F: PrimeField>(input: &[u8]) -> F {
    let hasher = <DefaultFieldHasher<Sha256, 128> as HashToField<F>>::new(DST_H2);
    hasher.hash_to_field::<1>(input)[0]
}

pub fn hmsg<F: PrimeField>(message: &[u8]) -> F {
    let hasher = <DefaultFieldHasher<Sha256, 128> as HashToField<F>>::new(DST_HMSG);
    hasher.hash_to_field::<1>(message)[0]
}

fn expand(tag: &[u8], input: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut counter: u32 = 0;
    while out.len() < len {
        let block = Sha256::new()
            .chain_update((tag.len() as u32).to_be_bytes())
            .chain_update(tag)
            .chain_update(counter.to_be_bytes())
            .chain_update(input)
            .finalize();
        out.extend_from_slice(&block);
        counter += 1;
    }
    out.truncate(len);
    out
}

pub fn gk_mask(input: &[u8], len: usize) -> Vec<u8> {
    expand(DST_GK, input, len)
}

pub fn h2_mask(input: &[u8], len: usize) -> Vec<u8> {
    expand(DST_H2_MASK, input, len)
}

/// SHA-256 of `tag || input` with the tag length-prefixed.
pub fn digest256(tag: &[u8], input: &[u8]) -> [u8; 32] {
    Sha256::new()
        .chain_update((tag.len() as u32).to_be_bytes())
        .chain_update(tag)
        .chain_update(input)
        .finalize()
        .into()
}

/// Encoding of the attribute input `(x, l, t)`.
///
/// The leading byte distinguishes attribute inputs (1) from column inputs (0),
/// so the two families never collide.
pub fn attribute_input(attribute: &str, l: u8, t: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(attribute.len() + 7);
    out.push(1);
    out.extend_from_slice(&(attribute.len() as u32).to_be_bytes());
    out.extend_from_slice(attribute.as_bytes());
    out.push(l);
    out.push(t);
    out
}

/// Encoding of the column input `(0, v, l, t)`.
pub fn column_input(v: u32, l: u8, t: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(7);
    out.push(0);
    out.extend_from_slice(&v.to_be_bytes());
    out.push(l);
    out.push(t);
    out
}

/// Uniform sample from `Z_q^*`.
pub fn random_nonzero<F: PrimeField, R: RngCore + ?Sized>(rng: &mut R) -> F {
    loop {
        let s = F::rand(rng);
        if !s.is_zero() {
            return s;
        }
    }
}
