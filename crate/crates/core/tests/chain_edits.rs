use std::collections::BTreeSet;

use cdedit_core::audit::CredibilityLevel;
use cdedit_core::bilinear::{Backend, Bls12, MockBls};
use cdedit_core::chain::{BlockData, ChainConfig, ChainError, EditTarget, Seal, Target, Transaction};
use cdedit_core::policy::{parse_policy, AccessTree};
use cdedit_core::system::{SystemConfig, SystemError, SystemState};
use cdedit_core::token::{EditRequest, EditType, PrivilegeToken};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

struct World<B: Backend> {
    sys: SystemState<B>,
    rng: ChaCha20Rng,
    policy: AccessTree,
}

fn theta(attrs: &[&str]) -> BTreeSet<String> {
    attrs.iter().map(|a| a.to_string()).collect()
}

fn world<B: Backend>(seed: u64) -> World<B> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sys = SystemState::<B>::setup(SystemConfig::default(), &mut rng).unwrap();
    sys.register_owner("alice");
    sys.register_modifier("bob", theta(&["A", "B"]), CredibilityLevel::ManyBlock);
    sys.keygen_for("bob", &theta(&["A", "B"]), &mut rng).unwrap();
    World { sys, rng, policy: parse_policy("A AND (B OR C)").unwrap() }
}

impl<B: Backend> World<B> {
    /// One mutable tx in an immutable block; returns the tx id.
    fn mutable_tx(&mut self, payload: &str) -> u64 {
        let id = self.sys.add_mutable_tx("alice", payload.as_bytes(), &self.policy, &mut self.rng).unwrap();
        self.sys.mine(None, 10, &mut self.rng).unwrap();
        id
    }

    /// A mutable block holding one immutable tx; returns its height.
    fn mutable_block(&mut self, payload: &str) -> u64 {
        self.sys.add_immutable_tx(payload.as_bytes());
        let policy = self.policy.clone();
        self.sys.mine(Some(("alice", &policy)), 10, &mut self.rng).unwrap()
    }

    fn token(&mut self, edit_type: EditType, n: u32, index: u64) -> PrivilegeToken<B> {
        let deposit = self.sys.pts.config.cost(edit_type, n);
        let request = EditRequest { edit_type, n, requester: "bob".into(), index, deposit };
        self.sys.request_token(request, 20, &mut self.rng).unwrap()
    }

    fn redacted(&self, height: u64, text: &str) -> BlockData<B> {
        let block = self.sys.chain.block(height).unwrap();
        let mut txs = block.data.txs.clone();
        txs[0] = Transaction::immutable(txs[0].id, text.as_bytes().to_vec());
        BlockData::new(txs, block.data.timestamp).unwrap()
    }
}

fn chain_err<T: std::fmt::Debug>(r: Result<T, SystemError>) -> ChainError {
    match r {
        Err(SystemError::Chain(e)) => e,
        other => panic!("expected a chain error, got {other:?}"),
    }
}

#[test]
fn block_token_covers_transaction_edits() {
    let mut w = world::<MockBls>(1);
    let tx = w.mutable_tx("v1");
    let tk = w.token(EditType::Bl, 1, 1);
    let links = w.sys.chain.links();
    w.sys.edit_tx("bob", tx, b"v2", &tk, 30, &mut w.rng).unwrap();
    assert_eq!(w.sys.chain.tx(tx).unwrap().payload(), b"v2");
    assert_eq!(w.sys.chain.links(), links);
    assert!(w.sys.chain.validate());
}

#[test]
fn transaction_token_cannot_edit_blocks() {
    let mut w = world::<MockBls>(2);
    let height = w.mutable_block("filler");
    let tx = w.mutable_tx("v1");
    let tk = w.token(EditType::Tx, 4, tx);
    let data = w.redacted(height, "gone");
    let err = chain_err(w.sys.edit_block("bob", height, data, &tk, 30, &mut w.rng));
    assert_eq!(err, ChainError::TokenKindMismatch);
    assert_eq!(w.sys.pts.uses_remaining(tk.id), Some(4));
}

#[test]
fn immutable_targets_are_refused() {
    let mut w = world::<MockBls>(3);
    let fixed = w.sys.add_immutable_tx(b"fixed");
    w.sys.mine(None, 10, &mut w.rng).unwrap();
    let tk = w.token(EditType::Tx, 1, fixed);
    let err = chain_err(w.sys.edit_tx("bob", fixed, b"x", &tk, 30, &mut w.rng));
    assert_eq!(err, ChainError::ImmutableTarget);

    let tk = w.token(EditType::Bl, 1, 1);
    let data = w.redacted(1, "x");
    let err = chain_err(w.sys.edit_block("bob", 1, data, &tk, 30, &mut w.rng));
    assert_eq!(err, ChainError::ImmutableTarget);
}

#[test]
fn one_time_token_is_bound_to_its_index() {
    let mut w = world::<MockBls>(4);
    let a = w.mutable_tx("a");
    let b = w.mutable_tx("b");
    let tk = w.token(EditType::Tx, 1, a);
    let err = chain_err(w.sys.edit_tx("bob", b, b"x", &tk, 30, &mut w.rng));
    assert_eq!(err, ChainError::TargetMismatch { issued: a, requested: b });
    w.sys.edit_tx("bob", a, b"x", &tk, 30, &mut w.rng).unwrap();
    let err = chain_err(w.sys.edit_tx("bob", a, b"y", &tk, 31, &mut w.rng));
    assert_eq!(err, ChainError::Exhausted);
}

#[test]
fn many_use_block_token_edits_four_blocks() {
    let mut w = world::<MockBls>(5);
    let heights: Vec<u64> = (0..4).map(|i| w.mutable_block(&format!("block {i}"))).collect();
    let tk = w.token(EditType::Bl, 4, heights[0]);
    let hashes: Vec<_> = w.sys.chain.blocks.iter().map(|b| b.hash()).collect();
    for (i, &h) in heights.iter().enumerate() {
        let data = w.redacted(h, &format!("redacted {i}"));
        w.sys.edit_block("bob", h, data, &tk, 30 + i as u64, &mut w.rng).unwrap();
        assert!(w.sys.chain.validate());
    }
    assert_eq!(w.sys.chain.log.for_token(tk.id).count(), 4);
    assert_eq!(w.sys.pts.uses_remaining(tk.id), Some(0));
    let after: Vec<_> = w.sys.chain.blocks.iter().map(|b| b.hash()).collect();
    assert_eq!(after, hashes);
    for (i, &h) in heights.iter().enumerate() {
        let block = w.sys.chain.block(h).unwrap();
        assert_eq!(block.data.txs[0].payload(), format!("redacted {i}").as_bytes());
        let entry = w.sys.chain.log.entries.iter().find(|e| e.target == EditTarget::Bl { height: h }).unwrap();
        let Seal::Mutable { tuple } = &block.seal else { panic!("mutable block") };
        assert_eq!(entry.new_digest, <[u8; 32]>::from(Sha256::digest(&tuple.m)));
    }
    let data = w.redacted(heights[0], "once more");
    let err = chain_err(w.sys.edit_block("bob", heights[0], data, &tk, 40, &mut w.rng));
    assert_eq!(err, ChainError::Exhausted);
}

#[test]
fn block_edit_with_inconsistent_root_is_refused() {
    let mut w = world::<MockBls>(6);
    let h = w.mutable_block("filler");
    let tk = w.token(EditType::Bl, 1, h);
    let mut data = w.redacted(h, "new");
    data.tx_root = [7; 32];
    let err = chain_err(w.sys.edit_block("bob", h, data, &tk, 30, &mut w.rng));
    assert_eq!(err, ChainError::InconsistentTxRoot);
}

#[test]
fn real_backend_mixed_edits_keep_chain_valid() {
    let mut w = world::<Bls12>(7);
    let tx = w.mutable_tx("v1");
    let h = w.mutable_block("filler");
    let links = w.sys.chain.links();
    let tk = w.token(EditType::Bl, 2, h);
    w.sys.edit_tx("bob", tx, b"v2", &tk, 30, &mut w.rng).unwrap();
    assert!(w.sys.chain.validate());
    let data = w.redacted(h, "redacted");
    w.sys.edit_block("bob", h, data, &tk, 31, &mut w.rng).unwrap();
    assert!(w.sys.chain.validate());
    assert_eq!(w.sys.chain.links(), links);
    let ids: Vec<u64> = w.sys.chain.log.entries.iter().map(|e| e.id).collect();
    for id in ids {
        let record = w.sys.audit_report("alice", id).unwrap();
        assert!(record.verdict.is_clean());
    }
}

#[test]
fn mining_cost_tracks_difficulty() {
    // At 2^248 a hash passes with probability 2^-8, so ~256 queries per block.
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let config = SystemConfig {
        chain: ChainConfig { target: Target::pow2(248), max_hash_queries: 1 << 20 },
        ..SystemConfig::default()
    };
    let mut sys = SystemState::<MockBls>::setup(config, &mut rng).unwrap();
    let blocks = 100;
    for i in 0..blocks {
        sys.add_immutable_tx(format!("tx {i}").as_bytes());
        sys.mine(None, i, &mut rng).unwrap();
    }
    let queries: u64 = sys.chain.blocks[1..].iter().map(|b| b.ctr + 1).sum();
    let mean = queries as f64 / blocks as f64;
    assert!((256.0 / 3.0..=256.0 * 3.0).contains(&mean), "mean {mean}");
    assert!(sys.chain.blocks.iter().all(|b| b.hash()[0] == 0));
    assert!(sys.chain.validate());
}

#[test]
fn exhausted_nonce_space_fails() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let config = SystemConfig {
        chain: ChainConfig { target: Target::pow2(200), max_hash_queries: 4 },
        ..SystemConfig::default()
    };
    assert!(matches!(
        SystemState::<MockBls>::setup(config, &mut rng),
        Err(SystemError::Chain(ChainError::NonceExhausted(4)))
    ));
}
