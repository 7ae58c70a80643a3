//! Timing harness: per-algorithm scaling series and end-to-end edit-cost runs.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use cdedit_core::audit::{check_entry, CredibilityLevel};
use cdedit_core::bilinear::{Backend, BackendKind};
use cdedit_core::chain::{BlockData, ChainConfig, Seal, Target, Transaction};
use cdedit_core::pch::{pch_adapt, pch_hash, pch_verify};
use cdedit_core::policy::AccessTree;
use cdedit_core::system::{SystemConfig, SystemError, SystemState};
use cdedit_core::token::{verify_token, EditRequest, EditType, RequesterStanding};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub const OWNER: &str = "owner";
pub const EDITOR: &str = "editor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Devices,
    Attributes,
    Edits,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Devices => "devices",
            Self::Attributes => "attributes",
            Self::Edits => "edits",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    Setup,
    TkGen,
    KeyGen,
    Hash,
    Verify,
    VerifyM,
    Adapt,
    Audit,
}

impl Algorithm {
    pub const ATTRIBUTE_SERIES: [Self; 7] =
        [Self::KeyGen, Self::Hash, Self::Adapt, Self::Verify, Self::VerifyM, Self::Audit, Self::TkGen];

    pub fn name(self) -> &'static str {
        match self {
            Self::Setup => "Setup",
            Self::TkGen => "TkGen",
            Self::KeyGen => "KeyGen",
            Self::Hash => "Hash",
            Self::Verify => "Verify",
            Self::VerifyM => "Verify_m",
            Self::Adapt => "Adapt",
            Self::Audit => "Audit",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measured point of one series. Raw samples are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub axis: Axis,
    pub value: u64,
    pub algorithm: String,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub reps: usize,
    pub backend: String,
    pub samples_ms: Vec<f64>,
}

impl BenchResult {
    pub fn new(axis: Axis, value: u64, algorithm: impl Into<String>, backend: &str, samples_ms: Vec<f64>) -> Self {
        let (mean_ms, std_ms) = mean_std(&samples_ms);
        Self {
            axis,
            value,
            algorithm: algorithm.into(),
            mean_ms,
            std_ms,
            reps: samples_ms.len(),
            backend: backend.into(),
            samples_ms,
        }
    }
}

pub const CSV_HEADER: &str = "axis,value,algorithm,mean_ms,std_ms,reps,backend";

pub fn write_csv<W: Write>(results: &[BenchResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{}",
            r.axis, r.value, r.algorithm, r.mean_ms, r.std_ms, r.reps, r.backend
        )?;
    }
    Ok(())
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - (intercept + slope * p.0)).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    LinearFit { slope, intercept, r2 }
}

/// Fit of one algorithm's series along its axis.
pub fn series_fit(results: &[BenchResult], axis: Axis, algorithm: &str) -> Option<LinearFit> {
    let points: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.axis == axis && r.algorithm == algorithm)
        .map(|r| (r.value as f64, r.mean_ms))
        .collect();
    (points.len() >= 2).then(|| linear_fit(&points))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { reps: 10, warmup: 3, seed: 7 }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Run `f` `warmup` times untimed, then `reps` times timed.
pub fn sample<T>(options: &BenchOptions, mut f: impl FnMut() -> T) -> Vec<f64> {
    for _ in 0..options.warmup {
        std::hint::black_box(f());
    }
    (0..options.reps)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(f());
            elapsed_ms(start)
        })
        .collect()
}

pub fn backend_label<B: Backend>() -> String {
    match B::KIND {
        BackendKind::RealCurve => B::curve_name().to_string(),
        BackendKind::Mock => format!("mock-{}", B::curve_name()),
    }
}

pub fn attribute_names(n: usize) -> BTreeSet<String> {
    (1..=n).map(|i| format!("attr{i:03}")).collect()
}

/// Conjunction over all of `attributes`.
pub fn conjunction(attributes: &BTreeSet<String>) -> AccessTree {
    let names: Vec<&String> = attributes.iter().collect();
    AccessTree::all_of(&names).expect("non-empty attribute set")
}

pub fn bench_config() -> SystemConfig {
    SystemConfig {
        chain: ChainConfig { target: Target::trivial(), max_hash_queries: 1 },
        initial_balance: 1_000_000,
        ..SystemConfig::default()
    }
}

/// System setup followed by registering `devices` devices, each as owner and
/// modifier with its own attribute key.
pub fn setup_with_devices<B: Backend>(
    config: SystemConfig,
    devices: usize,
    rng: &mut ChaCha20Rng,
) -> Result<SystemState<B>, SystemError> {
    let mut sys = SystemState::<B>::setup(config, rng)?;
    for i in 0..devices {
        let name = format!("device-{i:04}");
        let theta: BTreeSet<String> = ["iot-device".to_string(), format!("zone-{}", i % 8)].into();
        sys.register_owner(&name);
        sys.register_modifier(&name, theta.clone(), CredibilityLevel::OneTx);
        sys.keygen_for(&name, &theta, rng)?;
    }
    Ok(sys)
}

/// A system with one owner, one top-level editor holding `attributes`, and a
/// mined mutable transaction under their conjunction.
pub struct AttributeFixture<B: Backend> {
    pub sys: SystemState<B>,
    pub theta: BTreeSet<String>,
    pub policy: AccessTree,
    pub tx_id: u64,
    pub rng: ChaCha20Rng,
}

impl<B: Backend> AttributeFixture<B> {
    pub fn new(attributes: usize, seed: u64) -> Result<Self, SystemError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut sys = SystemState::<B>::setup(bench_config(), &mut rng)?;
        let theta = attribute_names(attributes);
        let policy = conjunction(&theta);
        sys.register_owner(OWNER);
        sys.register_modifier(EDITOR, theta.clone(), CredibilityLevel::ManyBlock);
        sys.keygen_for(EDITOR, &theta, &mut rng)?;
        let tx_id = sys.add_mutable_tx(OWNER, b"fixture payload", &policy, &mut rng)?;
        sys.mine(None, 1, &mut rng)?;
        Ok(Self { sys, theta, policy, tx_id, rng })
    }
}

/// Time every attribute-axis algorithm at each attribute count.
///
/// Points are sampled round-robin, one timing of each algorithm per point per
/// pass, so slow drift on the host spreads over the whole series.
pub fn bench_attributes<B: Backend>(points: &[usize], options: &BenchOptions) -> Result<Vec<BenchResult>, SystemError> {
    let backend = backend_label::<B>();
    let mut benches = points
        .iter()
        .map(|&n| AttributeBench::<B>::new(n, options.seed ^ n as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let samples = interleave(&mut benches, options, AttributeBench::time_once);
    let mut out = Vec::new();
    for (&n, per_alg) in points.iter().zip(samples) {
        for (alg, samples) in ATTRIBUTE_ALGORITHMS.iter().zip(per_alg) {
            out.push(BenchResult::new(Axis::Attributes, n as u64, alg.name(), &backend, samples));
        }
    }
    Ok(out)
}

/// Samples for every algorithm except Setup at `attributes` attributes.
pub fn measure_algorithms<B: Backend>(
    attributes: usize,
    options: &BenchOptions,
) -> Result<Vec<(Algorithm, Vec<f64>)>, SystemError> {
    let mut bench = AttributeBench::<B>::new(attributes, options.seed ^ attributes as u64)?;
    let mut per_alg = interleave(std::slice::from_mut(&mut bench), options, AttributeBench::time_once);
    Ok(ATTRIBUTE_ALGORITHMS.iter().copied().zip(per_alg.remove(0)).collect())
}

/// Warm up every item, then take `reps` passes over all of them. Returns
/// `samples[item][series][rep]`.
fn interleave<T, const K: usize>(
    items: &mut [T],
    options: &BenchOptions,
    mut once: impl FnMut(&mut T) -> [f64; K],
) -> Vec<Vec<Vec<f64>>> {
    for item in items.iter_mut() {
        for _ in 0..options.warmup {
            once(item);
        }
    }
    let mut out = vec![vec![Vec::with_capacity(options.reps); K]; items.len()];
    for _ in 0..options.reps {
        for (item, series) in items.iter_mut().zip(out.iter_mut()) {
            for (s, t) in series.iter_mut().zip(once(item)) {
                s.push(t);
            }
        }
    }
    out
}

const ATTRIBUTE_ALGORITHMS: [Algorithm; 7] = [
    Algorithm::KeyGen,
    Algorithm::Hash,
    Algorithm::Adapt,
    Algorithm::Verify,
    Algorithm::TkGen,
    Algorithm::VerifyM,
    Algorithm::Audit,
];

fn time<T>(f: impl FnOnce() -> T) -> f64 {
    let start = Instant::now();
    std::hint::black_box(f());
    elapsed_ms(start)
}

/// Everything needed to time one round of the attribute-axis algorithms.
struct AttributeBench<B: Backend> {
    fixture: AttributeFixture<B>,
    owner: cdedit_core::cpabe::Identity<B::Scalar>,
    editor: cdedit_core::system::ModifierRecord<B>,
    key: cdedit_core::pch::ModifierKey<B>,
    tuple: cdedit_core::pch::PchTuple<B>,
    token: cdedit_core::token::PrivilegeToken<B>,
    spent: cdedit_core::token::PrivilegeToken<B>,
    entry: cdedit_core::chain::EditLogEntry<B>,
    counter: u64,
}

impl<B: Backend> AttributeBench<B> {
    fn new(attributes: usize, seed: u64) -> Result<Self, SystemError> {
        let mut fixture = AttributeFixture::<B>::new(attributes, seed)?;
        let sys = &mut fixture.sys;
        let owner = sys.owner(OWNER)?.clone();
        let editor = sys.modifier(EDITOR)?.clone();
        let key = editor.key.clone().expect("fixture issued a key");
        let tuple = match &sys.chain.tx(fixture.tx_id).expect("fixture tx exists").body {
            cdedit_core::chain::TxBody::Mutable { tuple } => tuple.clone(),
            _ => unreachable!("fixture tx is mutable"),
        };
        let token = sys.request_token(tx_request(1, fixture.tx_id), 10, &mut fixture.rng)?;
        let entry = sys.edit_tx(EDITOR, fixture.tx_id, b"audited", &token, 12, &mut fixture.rng)?;
        let entry = sys.chain.log.get(entry).expect("edit logged").clone();
        let spent = sys.pts.current(token.id).expect("issued");
        Ok(Self { fixture, owner, editor, key, tuple, token, spent, entry, counter: 0 })
    }

    /// One timing per algorithm, in `ATTRIBUTE_ALGORITHMS` order.
    fn time_once(&mut self) -> [f64; 7] {
        let AttributeFixture { sys, theta, policy, tx_id, rng } = &mut self.fixture;
        let identity = &self.editor.identity;
        self.counter += 1;
        let m = format!("adapted {}", self.counter);
        let standing = RequesterStanding::Active(CredibilityLevel::ManyBlock);
        let pk = sys.pts.public_key().clone();
        [
            time(|| cdedit_core::cpabe::abe_keygen(&sys.master, theta, identity, rng).unwrap()),
            time(|| pch_hash(&sys.pp, b"bench message", policy, &self.owner, rng).unwrap()),
            time(|| pch_adapt(&sys.pp, &self.key, &self.tuple, m.as_bytes(), identity, rng).unwrap()),
            time(|| assert!(pch_verify(&self.tuple))),
            time(|| sys.pts.tkgen(tx_request(1, *tx_id), standing, true, 10, rng).unwrap()),
            time(|| assert!(verify_token(&self.token, &pk, 11))),
            time(|| assert!(check_entry(&self.entry, &sys.chain.log, &self.spent).is_clean())),
        ]
    }
}

fn tx_request(n: u32, index: u64) -> EditRequest {
    EditRequest { edit_type: EditType::Tx, n, requester: EDITOR.into(), index, deposit: u64::from(n) }
}

/// Setup time against the number of registered devices, sampled round-robin
/// across points.
pub fn bench_devices<B: Backend>(points: &[usize], options: &BenchOptions) -> Result<Vec<BenchResult>, SystemError> {
    let backend = backend_label::<B>();
    let mut rng = ChaCha20Rng::seed_from_u64(options.seed);
    let mut failure = None;
    let mut items: Vec<usize> = points.to_vec();
    let samples = interleave(&mut items, options, |&mut d| {
        [time(|| {
            if let Err(e) = setup_with_devices::<B>(bench_config(), d, &mut rng) {
                failure.get_or_insert(e);
            }
        })]
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(points
        .iter()
        .zip(samples)
        .map(|(&d, mut s)| BenchResult::new(Axis::Devices, d as u64, Algorithm::Setup.name(), &backend, s.remove(0)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EditMode {
    /// `n` separate single-use tokens, each with its own key.
    OneTime,
    /// One `n`-use token and one key.
    NTimes,
}

impl fmt::Display for EditMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OneTime => "n-one-time",
            Self::NTimes => "n-times",
        })
    }
}

/// Mean per-algorithm times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Components {
    pub set: f64,
    pub tk: f64,
    pub key: f64,
    pub h: f64,
    pub ver: f64,
    pub ver_m: f64,
    pub ad: f64,
    pub au: f64,
}

impl Components {
    /// Cost of one round under a one-time token.
    pub fn one_time_round(&self, edit_type: EditType) -> f64 {
        match edit_type {
            EditType::Tx => self.tk + self.key + self.h + self.ver + self.ver_m + self.ad + self.au,
            EditType::Bl => self.tk + self.key + self.ver_m + self.ad + self.au,
        }
    }

    /// Cost of each round after the first under an `n`-use token.
    pub fn repeat_round(&self, edit_type: EditType) -> f64 {
        match edit_type {
            EditType::Tx => self.h + 2.0 * self.ver + self.ad + self.au,
            EditType::Bl => self.ver + self.ad + self.au,
        }
    }

    /// Field-wise mean.
    pub fn mean(all: &[Components]) -> Components {
        let k = all.len().max(1) as f64;
        let avg = |f: fn(&Components) -> f64| all.iter().map(f).sum::<f64>() / k;
        Components {
            set: avg(|c| c.set),
            tk: avg(|c| c.tk),
            key: avg(|c| c.key),
            h: avg(|c| c.h),
            ver: avg(|c| c.ver),
            ver_m: avg(|c| c.ver_m),
            ad: avg(|c| c.ad),
            au: avg(|c| c.au),
        }
    }

    /// Predicted total for `n` edits.
    pub fn predict(&self, edit_type: EditType, mode: EditMode, n: u32) -> f64 {
        let first = self.set + self.one_time_round(edit_type);
        let rest = f64::from(n.saturating_sub(1));
        match mode {
            EditMode::OneTime => first + rest * self.one_time_round(edit_type),
            EditMode::NTimes => first + rest * self.repeat_round(edit_type),
        }
    }
}

/// Mean time of each cost component.
pub fn measure_components<B: Backend>(
    attributes: usize,
    devices: usize,
    options: &BenchOptions,
) -> Result<Components, SystemError> {
    let mean = |s: &[f64]| mean_std(s).0;
    let setup = bench_devices::<B>(&[devices], options)?;
    let algs = measure_algorithms::<B>(attributes, options)?;
    let get = |a: Algorithm| algs.iter().find(|(x, _)| *x == a).map(|(_, s)| mean(s)).unwrap_or(0.0);
    Ok(Components {
        set: setup[0].mean_ms,
        tk: get(Algorithm::TkGen),
        key: get(Algorithm::KeyGen),
        h: get(Algorithm::Hash),
        ver: get(Algorithm::Verify),
        ver_m: get(Algorithm::VerifyM),
        ad: get(Algorithm::Adapt),
        au: get(Algorithm::Audit),
    })
}

fn mutable_tuple<B: Backend>(sys: &SystemState<B>, tx_id: u64) -> cdedit_core::pch::PchTuple<B> {
    match &sys.chain.tx(tx_id).expect("tx exists").body {
        cdedit_core::chain::TxBody::Mutable { tuple } => tuple.clone(),
        _ => unreachable!("edited txs are mutable"),
    }
}

fn block_tuple<B: Backend>(sys: &SystemState<B>, height: u64) -> cdedit_core::pch::PchTuple<B> {
    match &sys.chain.block(height).expect("block exists").seal {
        Seal::Mutable { tuple } => tuple.clone(),
        Seal::Immutable => unreachable!("edited blocks are mutable"),
    }
}

/// Run the whole `n`-edit workflow and return its wall time in ms.
///
/// Block-level runs build their mutable blocks after setup with the clock
/// stopped; only setup and the edit rounds are timed.
pub fn run_edit_workflow<B: Backend>(
    edit_type: EditType,
    mode: EditMode,
    n: u32,
    attributes: usize,
    devices: usize,
    seed: u64,
) -> Result<f64, SystemError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let theta = attribute_names(attributes);
    let policy = conjunction(&theta);

    let start = Instant::now();
    let mut sys = setup_with_devices::<B>(bench_config(), devices, &mut rng)?;
    sys.register_owner(OWNER);
    sys.register_modifier(EDITOR, theta.clone(), CredibilityLevel::ManyBlock);
    let mut total = elapsed_ms(start);

    let mut heights = Vec::new();
    if edit_type == EditType::Bl {
        for i in 0..n {
            sys.add_immutable_tx(format!("block {i} filler").as_bytes());
            heights.push(sys.mine(Some((OWNER, &policy)), u64::from(i) + 1, &mut rng)?);
        }
    }

    let now = 1_000;
    let start = Instant::now();
    let mut token = None;
    let mut last_entry = 0;
    for round in 0..n {
        let fresh_token = mode == EditMode::OneTime || round == 0;
        let (target, index) = match edit_type {
            EditType::Tx => {
                // Hash: the owner publishes the transaction to be edited
                let id = sys.add_mutable_tx(OWNER, format!("tx {round}").as_bytes(), &policy, &mut rng)?;
                sys.mine(None, now, &mut rng)?;
                (id, id)
            }
            EditType::Bl => (heights[round as usize], heights[round as usize]),
        };
        if fresh_token {
            let uses = if mode == EditMode::OneTime { 1 } else { n };
            let cost = sys.pts.config.cost(edit_type, uses);
            let request = EditRequest { edit_type, n: uses, requester: EDITOR.into(), index, deposit: cost };
            token = Some(sys.request_token(request, now, &mut rng)?);
            sys.keygen_for(EDITOR, &theta, &mut rng)?;
        }
        let token_ref = token.as_ref().expect("token issued in first round");
        let before = match edit_type {
            EditType::Tx => mutable_tuple(&sys, target),
            EditType::Bl => block_tuple(&sys, target),
        };
        let check_old = edit_type == EditType::Tx || !fresh_token;
        if check_old {
            assert!(pch_verify(&before));
        }
        if fresh_token {
            assert!(verify_token(token_ref, sys.pts.public_key(), now));
        }
        last_entry = match edit_type {
            EditType::Tx => sys.edit_tx(EDITOR, target, format!("edited {round}").as_bytes(), token_ref, now, &mut rng)?,
            EditType::Bl => {
                let block = sys.chain.block(target).expect("mined");
                let mut txs = block.data.txs.clone();
                let id = txs[0].id;
                txs[0] = Transaction::immutable(id, format!("redacted {round}").into_bytes());
                let data = BlockData::new(txs, block.data.timestamp)?;
                sys.edit_block(EDITOR, target, data, token_ref, now, &mut rng)?
            }
        };
        if edit_type == EditType::Tx && !fresh_token {
            assert!(pch_verify(&mutable_tuple(&sys, target)));
        }
        let record = sys.audit_report(OWNER, last_entry)?;
        assert!(record.verdict.is_clean(), "honest edit audited as {:?}", record.verdict);
    }
    total += elapsed_ms(start);
    debug_assert!(last_entry as usize == sys.chain.log.entries.len());
    debug_assert!(sys.chain.validate());
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditCostRow {
    pub edit_type: EditType,
    pub n: u32,
    pub one_time_ms: f64,
    pub n_times_ms: f64,
    pub predicted_one_time_ms: f64,
    pub predicted_n_times_ms: f64,
}

impl EditCostRow {
    pub fn gap_ms(&self) -> f64 {
        self.one_time_ms - self.n_times_ms
    }

    /// Largest relative deviation of a measured total from its prediction.
    pub fn prediction_error(&self) -> f64 {
        let a = (self.one_time_ms - self.predicted_one_time_ms).abs() / self.predicted_one_time_ms;
        let b = (self.n_times_ms - self.predicted_n_times_ms).abs() / self.predicted_n_times_ms;
        a.max(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditCostReport {
    pub backend: String,
    pub attributes: usize,
    pub devices: usize,
    pub components: Components,
    pub rows: Vec<EditCostRow>,
}

impl EditCostReport {
    /// Flatten to CSV rows on the edit-count axis.
    pub fn results(&self) -> Vec<BenchResult> {
        let mut out = Vec::new();
        for row in &self.rows {
            let t = match row.edit_type {
                EditType::Tx => "Tx",
                EditType::Bl => "Bl",
            };
            for (label, v) in [
                ("n-one-time", row.one_time_ms),
                ("n-times", row.n_times_ms),
                ("n-one-time-predicted", row.predicted_one_time_ms),
                ("n-times-predicted", row.predicted_n_times_ms),
            ] {
                out.push(BenchResult::new(Axis::Edits, u64::from(row.n), format!("{t}/{label}"), &self.backend, vec![v]));
            }
        }
        out
    }
}

/// Measured n one-time vs n-times totals next to their predictions from
/// independently measured components.
///
/// Each of the `repeats` passes measures the components and then runs every
/// workflow once, alternating which mode goes first; rows report means over
/// the passes.
pub fn bench_edit_cost<B: Backend>(
    n_values: &[u32],
    edit_types: &[EditType],
    attributes: usize,
    devices: usize,
    repeats: usize,
    options: &BenchOptions,
) -> Result<EditCostReport, SystemError> {
    let repeats = repeats.max(1);
    let cells: Vec<(EditType, u32)> =
        edit_types.iter().flat_map(|&t| n_values.iter().map(move |&n| (t, n))).collect();
    let mut passes = Vec::with_capacity(repeats);
    let mut totals = vec![(Vec::new(), Vec::new()); cells.len()];
    for pass in 0..repeats {
        let pass_options = BenchOptions { seed: options.seed.wrapping_add(pass as u64 * 1_000), ..*options };
        passes.push(measure_components::<B>(attributes, devices, &pass_options)?);
        for (&(edit_type, n), (one_time, n_times)) in cells.iter().zip(totals.iter_mut()) {
            let seed = pass_options.seed.wrapping_add(u64::from(n));
            let run = |mode| run_edit_workflow::<B>(edit_type, mode, n, attributes, devices, seed);
            if pass % 2 == 0 {
                one_time.push(run(EditMode::OneTime)?);
                n_times.push(run(EditMode::NTimes)?);
            } else {
                n_times.push(run(EditMode::NTimes)?);
                one_time.push(run(EditMode::OneTime)?);
            }
        }
    }
    let components = Components::mean(&passes);
    let rows = cells
        .iter()
        .zip(totals)
        .map(|(&(edit_type, n), (one_time, n_times))| EditCostRow {
            edit_type,
            n,
            one_time_ms: mean_std(&one_time).0,
            n_times_ms: mean_std(&n_times).0,
            predicted_one_time_ms: components.predict(edit_type, EditMode::OneTime, n),
            predicted_n_times_ms: components.predict(edit_type, EditMode::NTimes, n),
        })
        .collect();
    Ok(EditCostReport { backend: backend_label::<B>(), attributes, devices, components, rows })
}
