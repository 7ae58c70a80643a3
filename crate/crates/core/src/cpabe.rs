//! FAME-style ciphertext-policy ABE over span programs, with identity binding.
//!
//! The scheme only ever encrypts the pair `(r, R)` of chameleon randomness and
//! trapdoor seed. Both are masked with keys derived from the blind
//! `B = T1^s1 * T2^s2`, which any holder of a satisfying key recovers as
//! `den / num`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use ark_ff::{Field, One, PrimeField, UniformRand, Zero};
use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bilinear::{
    attribute_input, column_input, gk_mask, h1, h2, h2_mask, random_nonzero, Backend,
    GroupElement,
};
use crate::encoding::{
    hex_bytes, scalar_dec, scalar_dec_vec, scalar_to_bytes, scalar_width, Encoder,
};
use crate::policy::{reconstruction_coeffs, Msp};

/// Largest supported credential ladder.
pub const MAX_LADDER: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CpAbeError {
    #[error("ladder size {0} out of range (3..={MAX_LADDER})")]
    LadderOutOfRange(usize),
    #[error("identity of length {len} needs a ladder of at least {needed}, have {ladder}")]
    IdentityTooLong { len: usize, ladder: usize, needed: usize },
    #[error("identity vector is empty")]
    EmptyIdentity,
    #[error("attribute set is empty")]
    EmptyAttributeSet,
    #[error("attribute set does not satisfy the ciphertext policy")]
    Unauthorized,
    #[error("ciphertext is malformed: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MasterPublicKey<B: Backend> {
    /// `h^a1`
    pub h_a1: B::H,
    /// `h^a2`
    pub h_a2: B::H,
    /// `e(g,h)^(d1*a1 + d3)`
    pub t1: B::Gt,
    /// `e(g,h)^(d2*a2 + d3)`
    pub t2: B::Gt,
    /// `g_i = g^z_i`, i = 1..k
    pub g_ladder: Vec<B::G>,
    /// `h_i = h^z_i`, i = 1..k
    pub h_ladder: Vec<B::H>,
}

impl<B: Backend> MasterPublicKey<B> {
    pub fn ladder_size(&self) -> usize {
        self.g_ladder.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MasterSecretKey<B: Backend> {
    #[serde(with = "scalar_dec")]
    pub a1: B::Scalar,
    #[serde(with = "scalar_dec")]
    pub a2: B::Scalar,
    #[serde(with = "scalar_dec")]
    pub b1: B::Scalar,
    #[serde(with = "scalar_dec")]
    pub b2: B::Scalar,
    pub g_d1: B::G,
    pub g_d2: B::G,
    pub g_d3: B::G,
    #[serde(with = "scalar_dec_vec")]
    pub z: Vec<B::Scalar>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MasterKeys<B: Backend> {
    pub public: MasterPublicKey<B>,
    pub secret: MasterSecretKey<B>,
}

/// Identity vector `(I_1, .., I_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Identity<F: PrimeField> {
    #[serde(with = "scalar_dec_vec")]
    pub components: Vec<F>,
}

impl<F: PrimeField> Identity<F> {
    pub fn new(components: Vec<F>) -> Self {
        Self { components }
    }

    /// Deterministic identity of the given depth derived from a name.
    pub fn derive(name: &str, depth: usize) -> Self {
        let components = (1..=depth)
            .map(|i| h2::<F>(&Encoder::new().str("identity").str(name).u64(i as u64).finish()))
            .collect();
        Self { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    fn check<B: Backend<Scalar = F>>(&self, mpk: &MasterPublicKey<B>) -> Result<(), CpAbeError> {
        if self.components.is_empty() {
            return Err(CpAbeError::EmptyIdentity);
        }
        let needed = self.components.len() + 2;
        if mpk.ladder_size() < needed {
            return Err(CpAbeError::IdentityTooLong {
                len: self.components.len(),
                ladder: mpk.ladder_size(),
                needed,
            });
        }
        Ok(())
    }

    /// Credential in `H`: `prod_i h * h_{k-i-1}^{I_i}`.
    pub fn credential_h<B: Backend<Scalar = F>>(
        &self,
        mpk: &MasterPublicKey<B>,
    ) -> Result<B::H, CpAbeError> {
        self.check(mpk)?;
        let k = mpk.ladder_size();
        let h = B::h();
        Ok(self.components.iter().enumerate().fold(B::H::identity(), |acc, (i, c)| {
            // ladder element h_{k-i-1} for 1-based i lives at index k-i-2
            let rung = &mpk.h_ladder[k - (i + 1) - 2];
            acc.mul(&h).mul(&rung.pow(c))
        }))
    }

    /// Credential in `G`: `prod_i g * g_{k-i-1}^{I_i}`.
    pub fn credential_g<B: Backend<Scalar = F>>(
        &self,
        mpk: &MasterPublicKey<B>,
    ) -> Result<B::G, CpAbeError> {
        self.check(mpk)?;
        let k = mpk.ladder_size();
        let g = B::g();
        Ok(self.components.iter().enumerate().fold(B::G::identity(), |acc, (i, c)| {
            let rung = &mpk.g_ladder[k - (i + 1) - 2];
            acc.mul(&g).mul(&rung.pow(c))
        }))
    }
}

/// Key material bound to one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttributeComponent<B: Backend> {
    pub k1: B::G,
    pub k2: B::G,
    /// `g^-sigma_y`
    pub k3: B::G,
}

/// Decryption key for an attribute set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttributeKey<B: Backend> {
    /// `(h^(b1 r1), h^(b2 r2), h^(r1+r2))`
    pub sk0: [B::H; 3],
    /// `g^R_k`
    pub sk0_g: B::G,
    pub attributes: BTreeMap<String, AttributeComponent<B>>,
    /// `(sk'_1, sk'_2, g^d3, g^-sigma')`
    pub sk_prime: [B::G; 4],
    /// `g^d * level^r * g^R_k`
    pub sk1: B::G,
    /// `g_{i-1}^r, .., g_1^r`; stored for completeness, not used by decryption.
    pub sk2: Vec<B::G>,
    pub identity: Identity<B::Scalar>,
}

impl<B: Backend> AttributeKey<B> {
    pub fn attribute_set(&self) -> BTreeSet<String> {
        self.attributes.keys().cloned().collect()
    }

    /// Number of group elements in the key.
    pub fn component_count(&self) -> usize {
        self.sk0.len() + 1 + 3 * self.attributes.len() + self.sk_prime.len() + 1 + self.sk2.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ciphertext<B: Backend> {
    /// Human-readable policy the span program was built from.
    pub policy: String,
    pub msp: Msp<B::Scalar>,
    /// `(H1^s1, H2^s2, h^s)`
    pub ct0: [B::H; 3],
    /// `ct_{i,l}` for each span-program row.
    pub rows: Vec<[B::G; 3]>,
    /// `r` masked under `Gk(B)`
    #[serde(with = "hex_bytes")]
    pub ct: Vec<u8>,
    /// `R` masked under the second KDF of `B`
    #[serde(with = "hex_bytes")]
    pub ct_prime: Vec<u8>,
    /// `ID^s`; also the verification key of the accompanying signature.
    pub ct1: B::H,
    pub ct2: B::H,
    /// `ct1^s`
    pub ct3: B::H,
}

/// Encryption exponents `(s1, s2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncryptionRandomness<F> {
    pub s1: F,
    pub s2: F,
}

impl<F: PrimeField> EncryptionRandomness<F> {
    pub fn sample<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Self { s1: random_nonzero(rng), s2: random_nonzero(rng) }
    }

    pub fn sum(&self) -> F {
        self.s1 + self.s2
    }
}

pub fn abe_setup<B: Backend, R: RngCore + ?Sized>(
    ladder: usize,
    rng: &mut R,
) -> Result<MasterKeys<B>, CpAbeError> {
    if !(3..=MAX_LADDER).contains(&ladder) {
        return Err(CpAbeError::LadderOutOfRange(ladder));
    }
    let (g, h) = (B::g(), B::h());
    let a1: B::Scalar = random_nonzero(rng);
    let a2: B::Scalar = random_nonzero(rng);
    let b1: B::Scalar = random_nonzero(rng);
    let b2: B::Scalar = random_nonzero(rng);
    let d1 = B::Scalar::rand(rng);
    let d2 = B::Scalar::rand(rng);
    let d3 = B::Scalar::rand(rng);
    let z: Vec<B::Scalar> = (0..ladder).map(|_| B::Scalar::rand(rng)).collect();
    let egh = B::gt_generator();
    let public = MasterPublicKey {
        h_a1: h.pow(&a1),
        h_a2: h.pow(&a2),
        t1: egh.pow(&(d1 * a1 + d3)),
        t2: egh.pow(&(d2 * a2 + d3)),
        g_ladder: z.iter().map(|zi| g.pow(zi)).collect(),
        h_ladder: z.iter().map(|zi| h.pow(zi)).collect(),
    };
    let secret = MasterSecretKey {
        a1,
        a2,
        b1,
        b2,
        g_d1: g.pow(&d1),
        g_d2: g.pow(&d2),
        g_d3: g.pow(&d3),
        z,
    };
    Ok(MasterKeys { public, secret })
}

/// `H1(x l 1)^e1 * H1(x l 2)^e2 * H1(x l 3)^e3` for key component `t`.
fn key_hash_term<B: Backend>(inputs: [Vec<u8>; 3], exps: [B::Scalar; 3]) -> B::G {
    inputs
        .iter()
        .zip(exps.iter())
        .fold(B::G::identity(), |acc, (input, e)| acc.mul(&h1::<B>(input).pow(e)))
}

pub fn abe_keygen<B: Backend, R: RngCore + ?Sized>(
    keys: &MasterKeys<B>,
    attributes: &BTreeSet<String>,
    identity: &Identity<B::Scalar>,
    rng: &mut R,
) -> Result<AttributeKey<B>, CpAbeError> {
    if attributes.is_empty() {
        return Err(CpAbeError::EmptyAttributeSet);
    }
    let (mpk, msk) = (&keys.public, &keys.secret);
    let level = identity.credential_g(mpk)?;
    let (g, h) = (B::g(), B::h());
    let r1: B::Scalar = random_nonzero(rng);
    let r2: B::Scalar = random_nonzero(rng);
    let r = r1 + r2;
    let rk = B::Scalar::rand(rng);
    let a_inv = [
        msk.a1.inverse().expect("a1 is sampled nonzero"),
        msk.a2.inverse().expect("a2 is sampled nonzero"),
    ];
    let (br1, br2) = (msk.b1 * r1, msk.b2 * r2);

    let mut parts = BTreeMap::new();
    for y in attributes {
        let sigma_y = B::Scalar::rand(rng);
        let component = |t: u8| {
            let ai = a_inv[(t - 1) as usize];
            key_hash_term::<B>(
                [attribute_input(y, 1, t), attribute_input(y, 2, t), attribute_input(y, 3, t)],
                [br1 * ai, br2 * ai, r * ai],
            )
            .mul(&g.pow(&(sigma_y * ai)))
        };
        parts.insert(
            y.clone(),
            AttributeComponent { k1: component(1), k2: component(2), k3: g.pow(&-sigma_y) },
        );
    }

    let sigma_prime = B::Scalar::rand(rng);
    let g_d = [&msk.g_d1, &msk.g_d2];
    let prime = |t: u8| {
        let ai = a_inv[(t - 1) as usize];
        g_d[(t - 1) as usize]
            .mul(&key_hash_term::<B>(
                [column_input(1, 1, t), column_input(1, 2, t), column_input(1, 3, t)],
                [br1 * ai, br2 * ai, r * ai],
            ))
            .mul(&g.pow(&(sigma_prime * ai)))
    };
    let sk_prime = [prime(1), prime(2), msk.g_d3.clone(), g.pow(&-sigma_prime)];

    let g_rk = g.pow(&rk);
    let g_d_total = msk.g_d1.mul(&msk.g_d2).mul(&msk.g_d3);
    let sk1 = g_d_total.mul(&level.pow(&r)).mul(&g_rk);
    let sk2 = mpk.g_ladder[..identity.len() - 1].iter().rev().map(|gi| gi.pow(&r)).collect();

    Ok(AttributeKey {
        sk0: [h.pow(&br1), h.pow(&br2), h.pow(&r)],
        sk0_g: g_rk,
        attributes: parts,
        sk_prime,
        sk1,
        sk2,
        identity: identity.clone(),
    })
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// Raise `base` to a span-program entry, short-cutting the common 0 and +-1.
fn pow_entry<G: GroupElement>(base: &G, e: &G::Scalar) -> Option<G> {
    if e.is_zero() {
        None
    } else if e.is_one() {
        Some(base.clone())
    } else if (-*e).is_one() {
        Some(base.inv())
    } else {
        Some(base.pow(e))
    }
}

/// Encrypt `(r, R)` with caller-chosen exponents `(s1, s2)`.
pub fn abe_encrypt_with<B: Backend>(
    mpk: &MasterPublicKey<B>,
    payload: (B::Scalar, B::Scalar),
    msp: &Msp<B::Scalar>,
    policy: &str,
    credential: &B::H,
    randomness: EncryptionRandomness<B::Scalar>,
) -> Ciphertext<B> {
    let EncryptionRandomness { s1, s2 } = randomness;
    let s = s1 + s2;
    let ct0 = [mpk.h_a1.pow(&s1), mpk.h_a2.pow(&s2), B::h().pow(&s)];

    // H1(0 j l 1)^s1 * H1(0 j l 2)^s2 for every column j and l in 1..=3
    let columns: Vec<[B::G; 3]> = (1..=msp.cols() as u32)
        .map(|j| {
            [1u8, 2, 3].map(|l| {
                h1::<B>(&column_input(j, l, 1))
                    .pow(&s1)
                    .mul(&h1::<B>(&column_input(j, l, 2)).pow(&s2))
            })
        })
        .collect();

    let mut attribute_terms: BTreeMap<&str, [B::G; 3]> = BTreeMap::new();
    let rows = msp
        .matrix
        .iter()
        .zip(&msp.labels)
        .map(|(row, label)| {
            let base = attribute_terms.entry(label.as_str()).or_insert_with(|| {
                [1u8, 2, 3].map(|l| {
                    h1::<B>(&attribute_input(label, l, 1))
                        .pow(&s1)
                        .mul(&h1::<B>(&attribute_input(label, l, 2)).pow(&s2))
                })
            });
            let mut out = base.clone();
            for (entry, col) in row.iter().zip(&columns) {
                for l in 0..3 {
                    if let Some(term) = pow_entry(&col[l], entry) {
                        out[l] = out[l].mul(&term);
                    }
                }
            }
            out
        })
        .collect();

    let blind = mpk.t1.pow(&s1).mul(&mpk.t2.pow(&s2)).to_bytes();
    let width = scalar_width::<B::Scalar>();
    let ct1 = credential.pow(&s);
    Ciphertext {
        policy: policy.to_string(),
        msp: msp.clone(),
        ct0,
        rows,
        ct: xor(&scalar_to_bytes(&payload.0), &gk_mask(&blind, width)),
        ct_prime: xor(&scalar_to_bytes(&payload.1), &h2_mask(&blind, width)),
        ct3: ct1.pow(&s),
        ct2: ct1.clone(),
        ct1,
    }
}

/// Encrypt `(r, R)` under `msp`; returns the ciphertext and the exponents used.
pub fn abe_encrypt<B: Backend, R: RngCore + ?Sized>(
    mpk: &MasterPublicKey<B>,
    payload: (B::Scalar, B::Scalar),
    msp: &Msp<B::Scalar>,
    policy: &str,
    credential: &B::H,
    rng: &mut R,
) -> (Ciphertext<B>, EncryptionRandomness<B::Scalar>) {
    let randomness = EncryptionRandomness::sample(rng);
    (abe_encrypt_with(mpk, payload, msp, policy, credential, randomness), randomness)
}

/// Recover the blind `B = den / num`.
pub fn recover_blind<B: Backend>(
    key: &AttributeKey<B>,
    ciphertext: &Ciphertext<B>,
) -> Result<B::Gt, CpAbeError> {
    let msp = &ciphertext.msp;
    if ciphertext.rows.len() != msp.rows() || msp.labels.len() != msp.rows() {
        return Err(CpAbeError::Malformed("row count does not match span program"));
    }
    let gamma = reconstruction_coeffs(msp, &key.attribute_set())
        .map_err(|_| CpAbeError::Unauthorized)?;

    let mut ct_acc = [B::G::identity(), B::G::identity(), B::G::identity()];
    let mut key_acc = [B::G::identity(), B::G::identity(), B::G::identity()];
    for (&row, coeff) in &gamma {
        let part = &key.attributes[&msp.labels[row]];
        for (l, acc) in ct_acc.iter_mut().enumerate() {
            if let Some(t) = pow_entry(&ciphertext.rows[row][l], coeff) {
                *acc = acc.mul(&t);
            }
        }
        for (acc, k) in key_acc.iter_mut().zip([&part.k1, &part.k2, &part.k3]) {
            if let Some(t) = pow_entry(k, coeff) {
                *acc = acc.mul(&t);
            }
        }
    }
    let sk_prime3 = key.sk_prime[2].mul(&key.sk_prime[3]);
    let den_left = [
        key.sk_prime[0].mul(&key_acc[0]),
        key.sk_prime[1].mul(&key_acc[1]),
        sk_prime3.mul(&key_acc[2]),
    ];
    let mut pairs = Vec::with_capacity(6);
    for (left, right) in den_left.into_iter().zip(ciphertext.ct0.iter()) {
        pairs.push((left, right.clone()));
    }
    for (left, right) in ct_acc.iter().zip(key.sk0.iter()) {
        pairs.push((left.inv(), right.clone()));
    }
    Ok(B::multi_pairing(&pairs))
}

/// Decrypt to `(r, R)`.
pub fn abe_decrypt<B: Backend>(
    key: &AttributeKey<B>,
    ciphertext: &Ciphertext<B>,
) -> Result<(B::Scalar, B::Scalar), CpAbeError> {
    let width = scalar_width::<B::Scalar>();
    if ciphertext.ct.len() != width || ciphertext.ct_prime.len() != width {
        return Err(CpAbeError::Malformed("mask width does not match scalar width"));
    }
    let blind = recover_blind(key, ciphertext)?.to_bytes();
    let r = B::Scalar::from_be_bytes_mod_order(&xor(&ciphertext.ct, &gk_mask(&blind, width)));
    let big_r =
        B::Scalar::from_be_bytes_mod_order(&xor(&ciphertext.ct_prime, &h2_mask(&blind, width)));
    Ok((r, big_r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::{hmsg, Bls12, Mock, MockBls, F7919};
    use crate::policy::{parse_policy, AccessTree};
    use ark_bls12_381::Fr;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn set(attrs: &[&str]) -> BTreeSet<String> {
        attrs.iter().map(|a| a.to_string()).collect()
    }

    fn round_trip<B: Backend>(policy: &str, theta: &[&str], seed: u64) -> Result<(), CpAbeError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let keys = abe_setup::<B, _>(6, &mut rng)?;
        let owner = Identity::<B::Scalar>::derive("owner", 1);
        let modifier = Identity::<B::Scalar>::derive("modifier", 2);
        let tree = parse_policy(policy).unwrap();
        let msp = Msp::from_tree(&tree);
        let payload = (random_nonzero(&mut rng), random_nonzero(&mut rng));
        let cred = owner.credential_h(&keys.public)?;
        let (ct, _) = abe_encrypt(&keys.public, payload, &msp, policy, &cred, &mut rng);
        let key = abe_keygen(&keys, &set(theta), &modifier, &mut rng)?;
        let out = abe_decrypt(&key, &ct)?;
        assert_eq!(out, payload);
        Ok(())
    }

    #[test]
    fn trivial_policy_round_trip() {
        round_trip::<MockBls>("A", &["A"], 1).unwrap();
        round_trip::<Bls12>("A", &["A"], 1).unwrap();
    }

    #[test]
    fn compound_policies_round_trip() {
        for (policy, theta) in [
            ("A AND B OR C", &["A", "B"][..]),
            ("A AND B OR C", &["C"][..]),
            ("(A OR B) AND (C OR D) AND E", &["B", "C", "E", "Z"][..]),
            ("(A AND B) OR (A AND C)", &["A", "C"][..]),
        ] {
            round_trip::<MockBls>(policy, theta, 2).unwrap();
            round_trip::<Mock<F7919>>(policy, theta, 2).unwrap();
        }
        round_trip::<Bls12>("(A OR B) AND C", &["B", "C"], 3).unwrap();
    }

    #[test]
    fn unsatisfying_set_is_unauthorized() {
        assert_eq!(round_trip::<MockBls>("A AND B", &["C"], 4), Err(CpAbeError::Unauthorized));
        assert_eq!(round_trip::<Bls12>("A AND B", &["A"], 4), Err(CpAbeError::Unauthorized));
    }

    #[test]
    fn setup_rejects_bad_ladder() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        assert_eq!(abe_setup::<MockBls, _>(2, &mut rng), Err(CpAbeError::LadderOutOfRange(2)));
        let keys = abe_setup::<MockBls, _>(4, &mut rng).unwrap();
        // k = 4 admits identities of length 2: indices k-i-1 stay within 1..=k.
        assert!(Identity::<Fr>::derive("m", 2).credential_g(&keys.public).is_ok());
        assert!(matches!(
            Identity::<Fr>::derive("m", 3).credential_h(&keys.public),
            Err(CpAbeError::IdentityTooLong { needed: 5, .. })
        ));
        let again = abe_setup::<MockBls, _>(4, &mut ChaCha20Rng::seed_from_u64(6)).unwrap();
        assert_ne!(keys.public, again.public);
    }

    #[test]
    fn mock_setup_publishes_consistent_exponents() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let keys = abe_setup::<MockBls, _>(5, &mut rng).unwrap();
        let (mpk, msk) = (&keys.public, &keys.secret);
        let (d1, d2, d3) = (msk.g_d1.log, msk.g_d2.log, msk.g_d3.log);
        assert_eq!(mpk.t1.log, d1 * msk.a1 + d3);
        assert_eq!(mpk.t2.log, d2 * msk.a2 + d3);
        assert_eq!(mpk.h_a1.log, msk.a1);
        for (i, z) in msk.z.iter().enumerate() {
            assert_eq!(mpk.g_ladder[i].log, *z);
            assert_eq!(mpk.h_ladder[i].log, *z);
        }
    }

    #[test]
    fn mock_ciphertext_rows_follow_affine_form() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let keys = abe_setup::<MockBls, _>(5, &mut rng).unwrap();
        let tree = parse_policy("A AND B OR C").unwrap();
        let msp = Msp::<Fr>::from_tree(&tree);
        let cred = Identity::derive("o", 1).credential_h(&keys.public).unwrap();
        let rnd = EncryptionRandomness { s1: Fr::from(17u64), s2: Fr::from(23u64) };
        let ct = abe_encrypt_with(&keys.public, (Fr::from(1u64), Fr::from(2u64)), &msp, "p", &cred, rnd);
        for (i, row) in ct.rows.iter().enumerate() {
            for l in 1..=3u8 {
                let mut expect = h2::<Fr>(&attribute_input(&msp.labels[i], l, 1)) * rnd.s1
                    + h2::<Fr>(&attribute_input(&msp.labels[i], l, 2)) * rnd.s2;
                for (j, m) in msp.matrix[i].iter().enumerate() {
                    let col = h2::<Fr>(&column_input(j as u32 + 1, l, 1)) * rnd.s1
                        + h2::<Fr>(&column_input(j as u32 + 1, l, 2)) * rnd.s2;
                    expect += col * m;
                }
                assert_eq!(row[(l - 1) as usize].log, expect);
            }
        }
        assert_eq!(ct.ct1, ct.ct2);
        assert_eq!(ct.ct3.log, ct.ct1.log * rnd.sum());
        assert_eq!(ct.ct0[2].log, rnd.sum());
    }

    #[test]
    fn single_column_rows_collapse() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let keys = abe_setup::<MockBls, _>(5, &mut rng).unwrap();
        let msp = Msp::<Fr>::from_tree(&AccessTree::leaf("A"));
        let cred = Identity::derive("o", 1).credential_h(&keys.public).unwrap();
        let rnd = EncryptionRandomness { s1: Fr::from(3u64), s2: Fr::from(4u64) };
        let ct = abe_encrypt_with(&keys.public, (Fr::from(1u64), Fr::from(2u64)), &msp, "A", &cred, rnd);
        for l in 1..=3u8 {
            let attr = h2::<Fr>(&attribute_input("A", l, 1)) * rnd.s1
                + h2::<Fr>(&attribute_input("A", l, 2)) * rnd.s2;
            let col = h2::<Fr>(&column_input(1, l, 1)) * rnd.s1
                + h2::<Fr>(&column_input(1, l, 2)) * rnd.s2;
            assert_eq!(ct.rows[0][(l - 1) as usize].log, attr + col);
        }
    }

    #[test]
    fn mock_blind_matches_fame_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let keys = abe_setup::<MockBls, _>(5, &mut rng).unwrap();
        let msp = Msp::<Fr>::from_tree(&parse_policy("A AND B OR C").unwrap());
        let cred = Identity::derive("o", 1).credential_h(&keys.public).unwrap();
        let (ct, rnd) = abe_encrypt(&keys.public, (Fr::from(9u64), Fr::from(10u64)), &msp, "p", &cred, &mut rng);
        let key = abe_keygen(&keys, &set(&["A", "B"]), &Identity::derive("m", 2), &mut rng).unwrap();
        let blind = recover_blind(&key, &ct).unwrap();
        let msk = &keys.secret;
        let (d1, d2, d3) = (msk.g_d1.log, msk.g_d2.log, msk.g_d3.log);
        let expected = d1 * msk.a1 * rnd.s1 + d2 * msk.a2 * rnd.s2 + d3 * rnd.sum();
        assert_eq!(blind.log, expected);
    }

    #[test]
    fn key_component_count() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let keys = abe_setup::<MockBls, _>(6, &mut rng).unwrap();
        let theta: BTreeSet<String> = (0..100).map(|i| alloc::format!("attr{i}")).collect();
        let identity = Identity::derive("m", 2);
        let key = abe_keygen(&keys, &theta, &identity, &mut rng).unwrap();
        // sk0 (4) + sk' (4) + sk1 (1) + sk2 (depth - 1)
        assert_eq!(key.component_count(), 3 * 100 + 4 + 4 + 1 + 1);
        assert_eq!(
            abe_keygen(&keys, &BTreeSet::new(), &identity, &mut rng),
            Err(CpAbeError::EmptyAttributeSet)
        );
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let keys = abe_setup::<Bls12, _>(4, &mut rng).unwrap();
        let msp = Msp::<Fr>::from_tree(&parse_policy("A OR B").unwrap());
        let cred = Identity::derive("o", 1).credential_h(&keys.public).unwrap();
        let payload = (hmsg::<Fr>(b"r"), hmsg::<Fr>(b"R"));
        let (ct, _) = abe_encrypt(&keys.public, payload, &msp, "A OR B", &cred, &mut rng);
        let text = serde_json::to_string(&ct).unwrap();
        let back: Ciphertext<Bls12> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ct);
        let key = abe_keygen(&keys, &set(&["B"]), &Identity::derive("m", 2), &mut rng).unwrap();
        let key_back: AttributeKey<Bls12> =
            serde_json::from_str(&serde_json::to_string(&key).unwrap()).unwrap();
        assert_eq!(abe_decrypt(&key_back, &back).unwrap(), payload);
        let msk_back: MasterKeys<Bls12> =
            serde_json::from_str(&serde_json::to_string(&keys).unwrap()).unwrap();
        assert_eq!(msk_back, keys);
    }
}
