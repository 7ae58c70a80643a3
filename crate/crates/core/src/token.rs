//! Privilege token service: request intake, deposits, Schnorr-style token
//! issuance and verification, and n-times usage accounting.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use ark_ff::PrimeField;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::CredibilityLevel;
use crate::bilinear::{h2, random_nonzero, Backend, GroupElement};
use crate::encoding::{scalar_dec, Encoder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditType {
    Tx,
    Bl,
}

impl fmt::Display for EditType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tx => "tx",
            Self::Bl => "bl",
        })
    }
}

impl core::str::FromStr for EditType {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tx" | "Tx" | "TX" => Ok(Self::Tx),
            "bl" | "Bl" | "BL" => Ok(Self::Bl),
            _ => Err(TokenError::InvalidRequest("edit type must be tx or bl")),
        }
    }
}

/// `req_tk = type || n || ID || index`, plus the offered deposit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRequest {
    #[serde(rename = "type")]
    pub edit_type: EditType,
    pub n: u32,
    pub requester: String,
    /// Target transaction id (Tx) or block height (Bl).
    pub index: u64,
    pub deposit: u64,
}

impl EditRequest {
    pub fn encode(&self) -> Vec<u8> {
        Encoder::new()
            .u32(self.edit_type as u32)
            .u32(self.n)
            .str(&self.requester)
            .u64(self.index)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    #[serde(rename = "T_1tk")]
    TxOnce,
    #[serde(rename = "T_ntk")]
    TxMany,
    #[serde(rename = "B_1tk")]
    BlockOnce,
    #[serde(rename = "B_ntk")]
    BlockMany,
}

impl TokenKind {
    pub fn for_request(edit_type: EditType, n: u32) -> Self {
        match (edit_type, n > 1) {
            (EditType::Tx, false) => Self::TxOnce,
            (EditType::Tx, true) => Self::TxMany,
            (EditType::Bl, false) => Self::BlockOnce,
            (EditType::Bl, true) => Self::BlockMany,
        }
    }

    /// Block-level tokens also authorize transaction edits; not the reverse.
    pub fn covers(self, target: EditType) -> bool {
        match self {
            Self::TxOnce | Self::TxMany => target == EditType::Tx,
            Self::BlockOnce | Self::BlockMany => true,
        }
    }

    pub fn is_block_level(self) -> bool {
        matches!(self, Self::BlockOnce | Self::BlockMany)
    }

    /// Lowest credibility level a modifier needs to receive this token.
    pub fn required_level(self) -> CredibilityLevel {
        match self {
            Self::TxOnce => CredibilityLevel::OneTx,
            Self::TxMany => CredibilityLevel::ManyTx,
            Self::BlockOnce => CredibilityLevel::OneBlock,
            Self::BlockMany => CredibilityLevel::ManyBlock,
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TxOnce => "T_1tk",
            Self::TxMany => "T_ntk",
            Self::BlockOnce => "B_1tk",
            Self::BlockMany => "B_ntk",
        })
    }
}

/// `pri_tk`: the request, validity window, and the PTS signature `(kg, sigma)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PrivilegeToken<B: Backend> {
    pub id: u64,
    pub request: EditRequest,
    pub kind: TokenKind,
    pub time: u64,
    pub expire: u64,
    pub kg: B::G,
    #[serde(with = "scalar_dec")]
    pub sigma: B::Scalar,
    /// Display copy of the PTS-side counter; not covered by the signature.
    pub uses_remaining: u32,
}

impl<B: Backend> PrivilegeToken<B> {
    fn signed_fields_eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.request == other.request
            && self.kind == other.kind
            && self.time == other.time
            && self.expire == other.expire
            && self.kg == other.kg
            && self.sigma == other.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
    #[error("deposit {offered} below required {required}")]
    InsufficientDeposit { required: u64, offered: u64 },
    #[error("requester balance {balance} cannot cover deposit {deposit}")]
    InsufficientBalance { balance: u64, deposit: u64 },
    #[error("edit target does not exist")]
    UnknownTarget,
    #[error("requester is not registered")]
    UnknownRequester,
    #[error("requester was ejected")]
    RequesterEjected,
    #[error("requester level {actual:?} below {required:?} needed for this token")]
    InsufficientLevel { required: CredibilityLevel, actual: CredibilityLevel },
    #[error("unknown token {0}")]
    UnknownToken(u64),
    #[error("token {0} is exhausted")]
    Exhausted(u64),
    #[error("token {0} has expired")]
    Expired(u64),
}

/// `H2(pk_pts || req_tk || kg || deposit || id || time || expire)`.
pub fn token_challenge<B: Backend>(
    pk_pts: &B::G,
    id: u64,
    request: &EditRequest,
    kg: &B::G,
    time: u64,
    expire: u64,
) -> B::Scalar {
    h2(&Encoder::new()
        .bytes(&pk_pts.to_bytes())
        .bytes(&request.encode())
        .bytes(&kg.to_bytes())
        .u64(request.deposit)
        .u64(id)
        .u64(time)
        .u64(expire)
        .finish())
}

/// Sign a token: `sigma = k + sk_pts * H2(..)`, `kg = g^k`.
pub fn sign_token<B: Backend, R: RngCore + ?Sized>(
    sk_pts: &B::Scalar,
    id: u64,
    request: EditRequest,
    time: u64,
    expire: u64,
    rng: &mut R,
) -> PrivilegeToken<B> {
    let pk_pts = B::g().pow(sk_pts);
    let k: B::Scalar = random_nonzero(rng);
    let kg = B::g().pow(&k);
    let e = token_challenge::<B>(&pk_pts, id, &request, &kg, time, expire);
    PrivilegeToken {
        id,
        kind: TokenKind::for_request(request.edit_type, request.n),
        uses_remaining: request.n,
        request,
        time,
        expire,
        kg,
        sigma: k + *sk_pts * e,
    }
}

/// Accepts iff `g^sigma = kg * pk_pts^H2(..)`, the kind matches `(type, n)`,
/// the token has not expired and has uses left.
pub fn verify_token<B: Backend>(token: &PrivilegeToken<B>, pk_pts: &B::G, now: u64) -> bool {
    let req = &token.request;
    if req.n == 0
        || token.kind != TokenKind::for_request(req.edit_type, req.n)
        || token.uses_remaining == 0
        || token.uses_remaining > req.n
        || now >= token.expire
    {
        return false;
    }
    let e = token_challenge::<B>(pk_pts, token.id, req, &token.kg, token.time, token.expire);
    B::g().pow(&token.sigma) == token.kg.mul(&pk_pts.pow(&e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PtsConfig {
    pub base_tx: u64,
    pub base_bl: u64,
    pub validity_secs: u64,
}

impl Default for PtsConfig {
    fn default() -> Self {
        Self { base_tx: 1, base_bl: 10, validity_secs: 24 * 60 * 60 }
    }
}

impl PtsConfig {
    /// `base(type) * n`.
    pub fn cost(&self, edit_type: EditType, n: u32) -> u64 {
        let base = match edit_type {
            EditType::Tx => self.base_tx,
            EditType::Bl => self.base_bl,
        };
        base.saturating_mul(u64::from(n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Escrow {
    pub holder: String,
    pub amount: u64,
}

/// Simulated deposit accounts.
///
/// Conservation: `sum(balances) + sum(escrow) + burned == minted`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositLedger {
    pub balances: BTreeMap<String, u64>,
    pub escrow: BTreeMap<u64, Escrow>,
    pub burned: u64,
    pub minted: u64,
}

impl DepositLedger {
    pub fn credit(&mut self, who: &str, amount: u64) {
        *self.balances.entry(who.into()).or_default() += amount;
        self.minted += amount;
    }

    pub fn balance(&self, who: &str) -> u64 {
        self.balances.get(who).copied().unwrap_or(0)
    }

    pub fn lock(&mut self, token: u64, who: &str, amount: u64) -> Result<(), TokenError> {
        let balance = self.balance(who);
        if balance < amount {
            return Err(TokenError::InsufficientBalance { balance, deposit: amount });
        }
        self.balances.insert(who.into(), balance - amount);
        self.escrow.insert(token, Escrow { holder: who.into(), amount });
        Ok(())
    }

    /// Return an escrow to its holder.
    pub fn release(&mut self, token: u64) -> Option<Escrow> {
        let escrow = self.escrow.remove(&token)?;
        *self.balances.entry(escrow.holder.clone()).or_default() += escrow.amount;
        Some(escrow)
    }

    /// Split an escrow: half (rounded down) to `reporter`, the rest burned.
    pub fn slash(&mut self, token: u64, reporter: &str) -> Option<(u64, u64)> {
        let escrow = self.escrow.remove(&token)?;
        let to_reporter = escrow.amount / 2;
        let burned = escrow.amount - to_reporter;
        *self.balances.entry(reporter.into()).or_default() += to_reporter;
        self.burned += burned;
        Some((to_reporter, burned))
    }

    pub fn is_conserved(&self) -> bool {
        let held: u64 = self.balances.values().sum::<u64>() + self.escrow.values().map(|e| e.amount).sum::<u64>();
        held + self.burned == self.minted
    }
}

/// What the PTS knows about a requester when deciding whether to issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequesterStanding {
    Unknown,
    Ejected,
    Active(CredibilityLevel),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TokenRecord<B: Backend> {
    pub token: PrivilegeToken<B>,
    pub uses_remaining: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PtsKeys<B: Backend> {
    #[serde(with = "scalar_dec")]
    pub sk: B::Scalar,
    pub pk: B::G,
}

impl<B: Backend> PtsKeys<B> {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let sk: B::Scalar = random_nonzero(rng);
        Self { pk: B::g().pow(&sk), sk }
    }
}

/// Single-writer PTS state: keys, deposits and authoritative use counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Pts<B: Backend> {
    pub keys: PtsKeys<B>,
    pub config: PtsConfig,
    pub ledger: DepositLedger,
    pub tokens: BTreeMap<u64, TokenRecord<B>>,
    next_id: u64,
}

impl<B: Backend> Pts<B> {
    pub fn new(keys: PtsKeys<B>, config: PtsConfig) -> Self {
        Self { keys, config, ledger: DepositLedger::default(), tokens: BTreeMap::new(), next_id: 1 }
    }

    pub fn public_key(&self) -> &B::G {
        &self.keys.pk
    }

    /// Check the request, move the deposit into escrow and issue a token.
    pub fn tkgen<R: RngCore + ?Sized>(
        &mut self,
        request: EditRequest,
        standing: RequesterStanding,
        target_exists: bool,
        now: u64,
        rng: &mut R,
    ) -> Result<PrivilegeToken<B>, TokenError> {
        if request.n == 0 {
            return Err(TokenError::InvalidRequest("n must be at least 1"));
        }
        let kind = TokenKind::for_request(request.edit_type, request.n);
        match standing {
            RequesterStanding::Unknown => return Err(TokenError::UnknownRequester),
            RequesterStanding::Ejected => return Err(TokenError::RequesterEjected),
            RequesterStanding::Active(level) if level < kind.required_level() => {
                return Err(TokenError::InsufficientLevel {
                    required: kind.required_level(),
                    actual: level,
                })
            }
            RequesterStanding::Active(_) => {}
        }
        if !target_exists {
            return Err(TokenError::UnknownTarget);
        }
        let required = self.config.cost(request.edit_type, request.n);
        if request.deposit < required {
            return Err(TokenError::InsufficientDeposit { required, offered: request.deposit });
        }
        let id = self.next_id;
        self.ledger.lock(id, &request.requester, request.deposit)?;
        self.next_id += 1;
        let expire = now.saturating_add(self.config.validity_secs);
        let token = sign_token::<B, R>(&self.keys.sk, id, request, now, expire, rng);
        self.tokens.insert(id, TokenRecord { token: token.clone(), uses_remaining: token.request.n });
        Ok(token)
    }

    /// Verify against the PTS public key and the authoritative counter.
    pub fn verify(&self, token: &PrivilegeToken<B>, now: u64) -> bool {
        let Some(record) = self.tokens.get(&token.id) else {
            return false;
        };
        record.token.signed_fields_eq(token)
            && record.uses_remaining > 0
            && verify_token(&self.current(token.id).expect("record exists"), &self.keys.pk, now)
    }

    /// The token with its display counter refreshed.
    pub fn current(&self, id: u64) -> Option<PrivilegeToken<B>> {
        self.tokens.get(&id).map(|r| PrivilegeToken { uses_remaining: r.uses_remaining, ..r.token.clone() })
    }

    pub fn uses_remaining(&self, id: u64) -> Option<u32> {
        self.tokens.get(&id).map(|r| r.uses_remaining)
    }

    /// Decrement the use counter.
    pub fn consume_use(&mut self, id: u64, now: u64) -> Result<u32, TokenError> {
        let record = self.tokens.get_mut(&id).ok_or(TokenError::UnknownToken(id))?;
        if now >= record.token.expire {
            return Err(TokenError::Expired(id));
        }
        if record.uses_remaining == 0 {
            return Err(TokenError::Exhausted(id));
        }
        record.uses_remaining -= 1;
        Ok(record.uses_remaining)
    }
}

/// Scalars carried as decimal strings in token files.
pub fn parse_scalar<F: PrimeField>(text: &str) -> Option<F> {
    crate::encoding::scalar_from_decimal(text).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::{Bls12, MockBls};
    use ark_bls12_381::Fr;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn request(edit_type: EditType, n: u32, deposit: u64) -> EditRequest {
        EditRequest { edit_type, n, requester: "mod-1".into(), index: 3, deposit }
    }

    fn pts<B: Backend>(rng: &mut ChaCha20Rng) -> Pts<B> {
        let mut pts = Pts::new(PtsKeys::generate(rng), PtsConfig::default());
        pts.ledger.credit("mod-1", 1_000);
        pts
    }

    const TOP: RequesterStanding = RequesterStanding::Active(CredibilityLevel::ManyBlock);

    #[test]
    fn issue_and_verify() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut pts = pts::<Bls12>(&mut rng);
        let token = pts.tkgen(request(EditType::Tx, 1, 1), TOP, true, 100, &mut rng).unwrap();
        assert_eq!(token.kind, TokenKind::TxOnce);
        assert!(verify_token(&token, pts.public_key(), 101));
        assert!(pts.verify(&token, 101));
        assert_eq!(pts.ledger.balance("mod-1"), 999);
        assert!(pts.ledger.is_conserved());
    }

    #[test]
    fn kinds_follow_type_and_count() {
        assert_eq!(TokenKind::for_request(EditType::Tx, 1), TokenKind::TxOnce);
        assert_eq!(TokenKind::for_request(EditType::Tx, 2), TokenKind::TxMany);
        assert_eq!(TokenKind::for_request(EditType::Bl, 1), TokenKind::BlockOnce);
        assert_eq!(TokenKind::for_request(EditType::Bl, 8), TokenKind::BlockMany);
        assert!(TokenKind::BlockOnce.covers(EditType::Tx));
        assert!(TokenKind::TxMany.covers(EditType::Tx));
        assert!(!TokenKind::TxMany.covers(EditType::Bl));
        assert!(!TokenKind::TxOnce.covers(EditType::Bl));
    }

    #[test]
    fn deposit_boundary() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut pts = pts::<MockBls>(&mut rng);
        let cost = pts.config.cost(EditType::Bl, 8);
        assert_eq!(cost, 80);
        assert_eq!(
            pts.tkgen(request(EditType::Bl, 8, cost - 1), TOP, true, 0, &mut rng),
            Err(TokenError::InsufficientDeposit { required: 80, offered: 79 })
        );
        assert!(pts.tkgen(request(EditType::Bl, 8, cost), TOP, true, 0, &mut rng).is_ok());
        assert_eq!(
            pts.tkgen(request(EditType::Bl, 1, 5_000), TOP, true, 0, &mut rng),
            Err(TokenError::InsufficientBalance { balance: 920, deposit: 5_000 })
        );
    }

    #[test]
    fn issuance_preconditions() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut pts = pts::<MockBls>(&mut rng);
        let req = request(EditType::Tx, 1, 1);
        assert_eq!(
            pts.tkgen(req.clone(), RequesterStanding::Unknown, true, 0, &mut rng),
            Err(TokenError::UnknownRequester)
        );
        assert_eq!(
            pts.tkgen(req.clone(), RequesterStanding::Ejected, true, 0, &mut rng),
            Err(TokenError::RequesterEjected)
        );
        assert_eq!(pts.tkgen(req.clone(), TOP, false, 0, &mut rng), Err(TokenError::UnknownTarget));
        assert_eq!(
            pts.tkgen(
                request(EditType::Bl, 1, 10),
                RequesterStanding::Active(CredibilityLevel::ManyTx),
                true,
                0,
                &mut rng
            ),
            Err(TokenError::InsufficientLevel {
                required: CredibilityLevel::OneBlock,
                actual: CredibilityLevel::ManyTx
            })
        );
        assert!(matches!(
            pts.tkgen(request(EditType::Tx, 0, 1), TOP, true, 0, &mut rng),
            Err(TokenError::InvalidRequest(_))
        ));
        assert!(pts.ledger.escrow.is_empty());
    }

    #[test]
    fn schnorr_relation_two_ways() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut pts = pts::<MockBls>(&mut rng);
        let token = pts.tkgen(request(EditType::Tx, 1, 1), TOP, true, 0, &mut rng).unwrap();
        let y = pts.keys.sk;
        let e = token_challenge::<MockBls>(&pts.keys.pk, token.id, &token.request, &token.kg, token.time, token.expire);
        // scalar side: (k + y e) g; group side: kg + (y g) e
        let k = token.kg.log;
        assert_eq!(token.sigma, k + y * e);
        assert_eq!(MockBls::g().pow(&token.sigma), token.kg.mul(&pts.keys.pk.pow(&e)));
    }

    #[test]
    fn expiry_and_counters() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut pts = pts::<MockBls>(&mut rng);
        let token = pts.tkgen(request(EditType::Tx, 3, 3), TOP, true, 10, &mut rng).unwrap();
        assert!(!verify_token(&token, pts.public_key(), token.expire));
        assert_eq!(pts.consume_use(token.id, 11), Ok(2));
        assert_eq!(pts.consume_use(token.id, 11), Ok(1));
        assert_eq!(pts.consume_use(token.id, 11), Ok(0));
        assert_eq!(pts.consume_use(token.id, 11), Err(TokenError::Exhausted(token.id)));
        assert!(!pts.verify(&token, 11));
        assert!(!verify_token(&pts.current(token.id).unwrap(), pts.public_key(), 11));
        assert_eq!(pts.consume_use(99, 11), Err(TokenError::UnknownToken(99)));

        let fresh = pts.tkgen(request(EditType::Tx, 3, 3), TOP, true, 10, &mut rng).unwrap();
        assert_eq!(pts.consume_use(fresh.id, fresh.expire + 1), Err(TokenError::Expired(fresh.id)));
        assert_eq!(pts.uses_remaining(fresh.id), Some(3));
    }

    #[test]
    fn perturbed_tokens_fail() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut pts = pts::<MockBls>(&mut rng);
        let token = pts.tkgen(request(EditType::Bl, 2, 20), TOP, true, 0, &mut rng).unwrap();
        let pk = *pts.public_key();
        let mut t = token.clone();
        t.sigma += Fr::from(1u64);
        assert!(!verify_token(&t, &pk, 1));
        let mut t = token.clone();
        t.kg = t.kg.mul(&MockBls::g());
        assert!(!verify_token(&t, &pk, 1));
        let mut t = token.clone();
        t.request.deposit ^= 1;
        assert!(!verify_token(&t, &pk, 1));
        let mut t = token.clone();
        t.expire += 1;
        assert!(!verify_token(&t, &pk, 1));
        let mut t = token.clone();
        t.kind = TokenKind::BlockOnce;
        assert!(!verify_token(&t, &pk, 1));
        // a token signed by another key
        let other = sign_token::<MockBls, _>(&Fr::from(42u64), token.id, token.request.clone(), 0, token.expire, &mut rng);
        assert!(!verify_token(&other, &pk, 1));
    }

    #[test]
    fn slash_and_release_conserve() {
        let mut ledger = DepositLedger::default();
        ledger.credit("a", 100);
        ledger.lock(1, "a", 31).unwrap();
        ledger.lock(2, "a", 10).unwrap();
        assert!(ledger.is_conserved());
        assert_eq!(ledger.slash(1, "owner"), Some((15, 16)));
        assert_eq!(ledger.release(2).map(|e| e.amount), Some(10));
        assert_eq!(ledger.release(2), None);
        assert_eq!(ledger.balance("owner"), 15);
        assert_eq!(ledger.balance("a"), 69);
        assert!(ledger.is_conserved());
    }

    #[test]
    fn token_json_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut pts = pts::<Bls12>(&mut rng);
        let token = pts.tkgen(request(EditType::Tx, 2, 2), TOP, true, 0, &mut rng).unwrap();
        let json = serde_json::to_value(&token).unwrap();
        assert_eq!(json["kind"], "T_ntk");
        assert_eq!(json["request"]["type"], "tx");
        assert!(json["sigma"].as_str().unwrap().bytes().all(|b| b.is_ascii_digit()));
        let back: PrivilegeToken<Bls12> = serde_json::from_value(json).unwrap();
        assert!(verify_token(&back, pts.public_key(), 1));
        assert_eq!(parse_scalar::<Fr>("12"), Some(Fr::from(12u64)));
    }
}
