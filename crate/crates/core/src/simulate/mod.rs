//! Round-by-round simulation of a protocol over `Λ^n × Λ^n` by a parallel
//! decision tree that queries `z`.
//!
//! The tree keeps a rectangle `X × Y` of inputs consistent with the transcript
//! so far, with `X`, `Y` uniform over their sets. In each round the speaker's
//! values that are dangerous for the listener are discarded, a message is
//! chosen (heavy in the deterministic mode, sampled in the randomized one),
//! density is restored on the speaker's side by fixing some blocks `I`, the
//! tree queries `z_I` and the listener is conditioned on `g^I(x_I, Y_I) = z_I`.

mod params;

pub mod ledger;

pub use params::{regime_hypotheses, Hypothesis, LiftingParams, Mode, TruncationReading};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::dist::{BlockDist, Distribution};
use crate::error::{ProtocolError, SimError};
use crate::gadget::{BooleanGadget, Gadget};
use crate::protocol::{
    complexity, kraft_heavy_message, message_distribution, run_protocol, Complexity, Party, ProtocolNode,
    ProtocolTree, RandomizedProtocol, Transcript,
};
use crate::rational::{to_common_integers, Rational};
use crate::space::{BlockSpace, Coords};
use crate::structure::is_dangerous;
use crate::structure::{density_restoring_fix, density_restoring_partition, is_dense, max_density, Restriction};

/// Size limits for simulation runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimBudget {
    pub max_n: u32,
    pub max_b: u32,
    /// Maximum number of branches explored by exact enumeration.
    pub branches: u64,
}

impl Default for SimBudget {
    fn default() -> Self {
        SimBudget { max_n: 3, max_b: 2, branches: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum HaltKind {
    /// `K > C + b`.
    K,
    /// `p_{>=j}` below the truncation threshold.
    Truncation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Done,
    ErrorHalt(HaltKind),
    /// A rectangle side became empty; `step` is the step that emptied it.
    Violation { step: u8, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    RoundStart,
    Discard,
    Message,
    Restore,
    Query,
    Condition,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::RoundStart => "start",
            Step::Discard => "discard",
            Step::Message => "message",
            Step::Restore => "restore",
            Step::Query => "query",
            Step::Condition => "condition",
        }
    }
}

/// The rectangle at a step boundary. `max_x`, `max_y` are the max-probabilities
/// of `X_free(ρ)` and `Y_free(ρ)`, so the deficiency is
/// `2·b·|free(ρ)| + log max_x + log max_y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub step: Step,
    pub rho: Restriction,
    pub pi_len: usize,
    pub xset: Vec<u32>,
    pub yset: Vec<u32>,
    pub max_x: Rational,
    pub max_y: Rational,
}

/// The partition class chosen in a randomized round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassRecord {
    /// 0-based index in the partition.
    pub j: usize,
    pub parts: usize,
    pub p_geq: Rational,
    pub mass: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub index: usize,
    pub speaker: Party,
    pub free: Coords,
    /// Density of the listener's free part used to classify dangerous values (lower bracket).
    pub listener_delta: Rational,
    /// The speaker's free part is `(δ−ε)`-dense at the round start.
    pub speaker_dense: bool,
    /// The listener's free part is `δ`-dense at the round start.
    pub listener_dense: bool,
    pub dangerous_values: usize,
    pub discarded: usize,
    pub discarded_mass: Rational,
    pub message: Vec<bool>,
    pub p_m: Rational,
    /// `Π p_M` after this round's message (randomized mode).
    pub k_product: Option<Rational>,
    pub class: Option<ClassRecord>,
    pub query: Coords,
    /// `x_I` as a point of `Λ^|I|`.
    pub x_value: u32,
    /// `z_I` as a pattern over `I`.
    pub z_value: u32,
    /// `Pr[g^I(x_I, Y_I) = z_I]` for the listener before conditioning.
    pub y_event: Rational,
    pub snapshots: Vec<Snapshot>,
}

impl RoundRecord {
    pub fn snapshot(&self, step: Step) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.step == step)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimTrace {
    pub params: LiftingParams,
    pub comm: Complexity,
    pub hypotheses: Vec<Hypothesis>,
    pub rounds: Vec<RoundRecord>,
}

impl SimTrace {
    /// Names of regime hypotheses that were evaluated and failed.
    pub fn failed_hypotheses(&self) -> Vec<&str> {
        self.hypotheses.iter().filter(|h| h.holds == Some(false)).map(|h| h.name.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub status: Status,
    pub transcript: Transcript,
    /// Leaf label when the run completed.
    pub output: Option<String>,
    pub rho: Restriction,
    pub xset: Vec<u32>,
    pub yset: Vec<u32>,
    /// Query set of each simulated round.
    pub queries: Vec<Coords>,
    /// Number of rounds simulated.
    pub depth: usize,
    pub trace: SimTrace,
}

impl SimResult {
    pub fn total_queries(&self) -> u32 {
        self.queries.iter().map(|q| q.len()).sum()
    }

    pub fn completed(&self) -> bool {
        self.status == Status::Done
    }
}

fn idx(p: Party) -> usize {
    match p {
        Party::Alice => 0,
        Party::Bob => 1,
    }
}

/// Bits of `z` on `coords` (first coordinate most significant).
fn z_pattern(z: u32, n: u32, coords: Coords) -> u32 {
    coords.iter().fold(0, |acc, i| (acc << 1) | (z >> (n - 1 - i) & 1))
}

fn max_free_prob(space: BlockSpace, set: &[u32], free: Coords) -> Rational {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for &x in set {
        *counts.entry(space.project(x, free)).or_insert(0) += 1;
    }
    let m = counts.values().copied().max().unwrap_or(0);
    Rational::new(m.into(), (set.len() as u64).max(1).into())
}

#[derive(Clone)]
struct State {
    rho: Restriction,
    sets: [Vec<u32>; 2],
    node: usize,
    transcript: Transcript,
    k_product: Rational,
    queries: Vec<Coords>,
    rounds: Vec<RoundRecord>,
    cur: Option<RoundRecord>,
}

struct Engine<'a> {
    p: &'a ProtocolTree,
    /// The gadget oriented as `(speaker block, listener block)`, indexed by speaker.
    g: [Gadget; 2],
    z: u32,
    params: &'a LiftingParams,
    comm: Complexity,
    hypotheses: Vec<Hypothesis>,
}

impl<'a> Engine<'a> {
    fn new(p: &'a ProtocolTree, g: &Gadget, z: u32, params: &'a LiftingParams, budget: SimBudget) -> Result<Self, SimError> {
        let space = p.space();
        if space != BlockSpace::new(params.n, params.b) || g.b() != params.b {
            return Err(SimError::Shape(format!(
                "protocol on (n, b) = ({}, {}), gadget b = {}, params (n, b) = ({}, {})",
                space.n,
                space.b,
                g.b(),
                params.n,
                params.b
            )));
        }
        if params.n > budget.max_n || params.b > budget.max_b {
            return Err(SimError::Budget(format!(
                "n = {}, b = {} (limits {}, {})",
                params.n, params.b, budget.max_n, budget.max_b
            )));
        }
        if params.n < 32 && z >> params.n != 0 {
            return Err(SimError::Shape(format!("z has more than {} bits", params.n)));
        }
        let comm = complexity(p);
        Ok(Engine {
            p,
            g: [g.clone(), g.transpose()],
            z,
            params,
            comm,
            hypotheses: regime_hypotheses(params, g, comm),
        })
    }

    fn space(&self) -> BlockSpace {
        self.p.space()
    }

    fn start(&self) -> State {
        let all: Vec<u32> = self.space().points().collect();
        State {
            rho: Restriction::free_all(self.space().n),
            sets: [all.clone(), all],
            node: self.p.root(),
            transcript: Transcript::default(),
            k_product: Rational::one(),
            queries: Vec::new(),
            rounds: Vec::new(),
            cur: None,
        }
    }

    fn snap(&self, st: &mut State, step: Step) {
        let free = st.rho.free();
        let s = Snapshot {
            step,
            rho: st.rho.clone(),
            pi_len: st.transcript.bits.len(),
            xset: st.sets[0].clone(),
            yset: st.sets[1].clone(),
            max_x: max_free_prob(self.space(), &st.sets[0], free),
            max_y: max_free_prob(self.space(), &st.sets[1], free),
        };
        st.cur.as_mut().expect("round in progress").snapshots.push(s);
    }

    fn free_marginal(&self, set: &[u32], free: Coords) -> BlockDist {
        BlockDist::uniform_on(self.space(), set).expect("non-empty set").project(free)
    }

    fn violation(&self, step: u8, what: &str) -> Status {
        let failed = self.hypotheses.iter().filter(|h| h.holds == Some(false)).map(|h| h.name.as_str()).collect::<Vec<_>>();
        let reason = if failed.is_empty() {
            format!("{what}; no regime hypothesis was found violated")
        } else {
            format!("{what}; violated hypotheses: {}", failed.join(", "))
        };
        Status::Violation { step, reason }
    }

    /// Round start and step 1. Returns the speaker, or `None` at a leaf.
    fn begin_round(&self, st: &mut State) -> Result<Option<Party>, Status> {
        let Some(speaker) = self.p.speaker(st.node) else {
            return Ok(None);
        };
        let (s, l) = (idx(speaker), idx(speaker.other()));
        let free = st.rho.free();
        let prm = self.params;
        let xf = self.free_marginal(&st.sets[s], free);
        let yf = self.free_marginal(&st.sets[l], free);
        let listener_delta = max_density(&yf).lo;
        st.cur = Some(RoundRecord {
            index: st.rounds.len(),
            speaker,
            free,
            listener_delta: listener_delta.clone(),
            speaker_dense: is_dense(&xf, &(&prm.delta - &prm.eps)).is_dense(),
            listener_dense: is_dense(&yf, &prm.delta).is_dense(),
            dangerous_values: 0,
            discarded: 0,
            discarded_mass: Rational::zero(),
            message: Vec::new(),
            p_m: Rational::one(),
            k_product: None,
            class: None,
            query: Coords::EMPTY,
            x_value: 0,
            z_value: 0,
            y_event: Rational::one(),
            snapshots: Vec::new(),
        });
        self.snap(st, Step::RoundStart);

        let space = self.space();
        let mut verdicts: BTreeMap<u32, bool> = BTreeMap::new();
        for &x in &st.sets[s] {
            let v = space.project(x, free);
            verdicts.entry(v).or_insert_with(|| is_dangerous(v, &yf, &self.g[s], &listener_delta, &prm.eps));
        }
        let before = st.sets[s].len();
        st.sets[s].retain(|&x| !verdicts[&space.project(x, free)]);
        let after = st.sets[s].len();
        let rec = st.cur.as_mut().expect("round in progress");
        rec.dangerous_values = verdicts.values().filter(|&&d| d).count();
        rec.discarded = before - after;
        rec.discarded_mass = Rational::new(((before - after) as u64).into(), (before as u64).into());
        if after == 0 {
            return Err(self.violation(1, &format!("every value of {:?}'s side is eps-dangerous", speaker)));
        }
        self.snap(st, Step::Discard);
        Ok(Some(speaker))
    }

    fn message_options(&self, st: &State, speaker: Party) -> Distribution<Vec<bool>> {
        let d = Distribution::uniform(st.sets[idx(speaker)].iter().copied()).expect("non-empty set");
        message_distribution(self.p, st.node, &d).expect("protocol messages are prefix-free")
    }

    /// Step 2 (and the K check of the randomized mode).
    fn apply_message(&self, st: &mut State, speaker: Party, msg: &[bool], p_m: &Rational) -> Result<(), Status> {
        let s = idx(speaker);
        let node = st.node;
        st.sets[s].retain(|&x| self.p.message_from(node, x).0 == msg);
        st.node = self.p.follow(node, msg);
        st.transcript.push_round(msg);
        let randomized = self.params.mode == Mode::Randomized;
        if randomized {
            st.k_product = &st.k_product * p_m;
        }
        {
            let rec = st.cur.as_mut().expect("round in progress");
            rec.message = msg.to_vec();
            rec.p_m = p_m.clone();
            if randomized {
                rec.k_product = Some(st.k_product.clone());
            }
        }
        self.snap(st, Step::Message);
        if randomized && self.params.k_exceeded(&st.k_product, self.comm.c) {
            return Err(Status::ErrorHalt(HaltKind::K));
        }
        Ok(())
    }

    /// Deterministic step 3: fix a maximal violating set to its heaviest value.
    fn restore_fix(&self, st: &mut State, speaker: Party) -> (Coords, u32) {
        let s = idx(speaker);
        let free = st.rho.free();
        let xf = self.free_marginal(&st.sets[s], free);
        let fix = density_restoring_fix(&xf, &self.params.delta);
        let i = free.globalize(fix.fixed);
        let space = self.space();
        st.sets[s].retain(|&x| space.project(x, i) == fix.value);
        self.snap(st, Step::Restore);
        (i, fix.value)
    }

    /// Randomized step 4 and the truncation check of step 5.
    fn restore_class(&self, st: &mut State, speaker: Party, part: &crate::structure::DensityPartition, j: usize) -> Result<(Coords, u32), Status> {
        let s = idx(speaker);
        let free = st.rho.free();
        let space = self.space();
        let class = &part.parts[j];
        st.sets[s].retain(|&x| class.points.binary_search(&space.project(x, free)).is_ok());
        st.cur.as_mut().expect("round in progress").class =
            Some(ClassRecord { j, parts: part.parts.len(), p_geq: class.p_geq.clone(), mass: class.mass.clone() });
        self.snap(st, Step::Restore);
        if self.params.truncates(&class.p_geq) {
            return Err(Status::ErrorHalt(HaltKind::Truncation));
        }
        Ok((free.globalize(class.fixed), class.value))
    }

    fn partition(&self, st: &State, speaker: Party) -> crate::structure::DensityPartition {
        let xf = self.free_marginal(&st.sets[idx(speaker)], st.rho.free());
        density_restoring_partition(&xf, &self.params.delta)
    }

    /// Query `z_I` and condition the listener on `g^I(x_I, Y_I) = z_I`.
    fn query_and_condition(&self, st: &mut State, speaker: Party, i: Coords, value: u32) -> Result<(), Status> {
        let space = self.space();
        let zi = z_pattern(self.z, space.n, i);
        st.rho.fix(i, zi);
        {
            let rec = st.cur.as_mut().expect("round in progress");
            rec.query = i;
            rec.x_value = value;
            rec.z_value = zi;
        }
        self.snap(st, Step::Query);
        let (s, l) = (idx(speaker), idx(speaker.other()));
        let anchor = space.embed(0, i, value);
        let before = st.sets[l].len();
        let g = &self.g[s];
        st.sets[l].retain(|&y| g.pattern(space, anchor, y, i) == zi);
        let after = st.sets[l].len();
        st.cur.as_mut().expect("round in progress").y_event =
            Rational::new((after as u64).into(), (before as u64).into());
        if after == 0 {
            return Err(self.violation(5, &format!("conditioning {:?}'s side on the queried bits emptied it", speaker.other())));
        }
        self.snap(st, Step::Condition);
        let rec = st.cur.take().expect("round in progress");
        st.rounds.push(rec);
        st.queries.push(i);
        debug_assert!(st.sets[s].iter().all(|&x| space.project(x, i) == value));
        Ok(())
    }

    fn finish(&self, mut st: State, status: Status) -> SimResult {
        if let Some(rec) = st.cur.take() {
            st.rounds.push(rec);
        }
        let output = match (&status, self.p.node(st.node)) {
            (Status::Done, ProtocolNode::Leaf(label)) => Some(label.clone()),
            _ => None,
        };
        SimResult {
            status,
            transcript: st.transcript,
            output,
            rho: st.rho,
            xset: st.sets[0].clone(),
            yset: st.sets[1].clone(),
            queries: st.queries,
            depth: st.rounds.len(),
            trace: SimTrace {
                params: self.params.clone(),
                comm: self.comm,
                hypotheses: self.hypotheses.clone(),
                rounds: st.rounds,
            },
        }
    }

    fn run_deterministic(&self) -> SimResult {
        let mut st = self.start();
        loop {
            let speaker = match self.begin_round(&mut st) {
                Ok(Some(s)) => s,
                Ok(None) => return self.finish(st, Status::Done),
                Err(status) => return self.finish(st, status),
            };
            let md = self.message_options(&st, speaker);
            let msg = kraft_heavy_message(&md).expect("a heavy message exists for prefix-free messages");
            let p_m = md.mass(&msg);
            if let Err(status) = self.apply_message(&mut st, speaker, &msg, &p_m) {
                return self.finish(st, status);
            }
            let (i, v) = self.restore_fix(&mut st, speaker);
            if let Err(status) = self.query_and_condition(&mut st, speaker, i, v) {
                return self.finish(st, status);
            }
        }
    }

    fn run_sampled<R: RngCore + ?Sized>(&self, rng: &mut R) -> SimResult {
        let mut st = self.start();
        loop {
            let speaker = match self.begin_round(&mut st) {
                Ok(Some(s)) => s,
                Ok(None) => return self.finish(st, Status::Done),
                Err(status) => return self.finish(st, status),
            };
            let md = self.message_options(&st, speaker);
            let options: Vec<(&Vec<bool>, &Rational)> = md.iter().filter(|(_, p)| !p.is_zero()).collect();
            let weights: Vec<Rational> = options.iter().map(|(_, p)| (*p).clone()).collect();
            let k = sample_index(rng, &weights);
            let (msg, p_m) = (options[k].0.clone(), weights[k].clone());
            if let Err(status) = self.apply_message(&mut st, speaker, &msg, &p_m) {
                return self.finish(st, status);
            }
            let part = self.partition(&st, speaker);
            let masses: Vec<Rational> = part.parts.iter().map(|p| p.mass.clone()).collect();
            let j = sample_index(rng, &masses);
            let (i, v) = match self.restore_class(&mut st, speaker, &part, j) {
                Ok(r) => r,
                Err(status) => return self.finish(st, status),
            };
            if let Err(status) = self.query_and_condition(&mut st, speaker, i, v) {
                return self.finish(st, status);
            }
        }
    }

    fn explore(&self, mut st: State, prob: Rational, out: &mut Vec<(Rational, SimResult)>, count: &mut u64, budget: u64) -> Result<(), SimError> {
        *count += 1;
        if *count > budget {
            return Err(SimError::Budget(format!("enumeration exceeded {budget} branches")));
        }
        let speaker = match self.begin_round(&mut st) {
            Ok(Some(s)) => s,
            Ok(None) => {
                out.push((prob, self.finish(st, Status::Done)));
                return Ok(());
            }
            Err(status) => {
                out.push((prob, self.finish(st, status)));
                return Ok(());
            }
        };
        let md = self.message_options(&st, speaker);
        for (msg, p_m) in md.iter().filter(|(_, p)| !p.is_zero()) {
            let mut st2 = st.clone();
            let pm = &prob * p_m;
            if let Err(status) = self.apply_message(&mut st2, speaker, msg, p_m) {
                out.push((pm, self.finish(st2, status)));
                continue;
            }
            let part = self.partition(&st2, speaker);
            for j in 0..part.parts.len() {
                let mut st3 = st2.clone();
                let pj = &pm * &part.parts[j].mass;
                let step = self
                    .restore_class(&mut st3, speaker, &part, j)
                    .and_then(|(i, v)| self.query_and_condition(&mut st3, speaker, i, v));
                match step {
                    Ok(()) => self.explore(st3, pj, out, count, budget)?,
                    Err(status) => out.push((pj, self.finish(st3, status))),
                }
            }
        }
        Ok(())
    }
}

/// Index `k` with probability `weights[k] / Σ weights`, exactly.
pub fn sample_index<R: RngCore + ?Sized>(rng: &mut R, weights: &[Rational]) -> usize {
    assert!(!weights.is_empty(), "sampling from an empty list");
    if weights.len() == 1 {
        return 0;
    }
    let (nums, _) = to_common_integers(weights);
    let total: BigUint = nums.iter().sum();
    let r = uniform_below(rng, &total);
    let mut acc = BigUint::zero();
    for (k, w) in nums.iter().enumerate() {
        acc += w;
        if r < acc {
            return k;
        }
    }
    unreachable!("r < total")
}

/// Uniform integer in `[0, bound)` by rejection.
fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero());
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = alloc::vec![0u8; bytes];
    loop {
        rng.fill_bytes(&mut buf);
        let extra = (bytes as u64) * 8 - bits;
        if let Some(last) = buf.last_mut() {
            *last &= 0xffu8 >> extra;
        }
        let v = BigUint::from_bytes_le(&buf);
        if &v < bound {
            return v;
        }
    }
}

fn require_mode(params: &LiftingParams, mode: Mode) -> Result<(), SimError> {
    if params.mode == mode {
        Ok(())
    } else {
        Err(SimError::Params(format!("expected {mode:?} parameters, got {:?}", params.mode)))
    }
}

pub fn lift_deterministic(p: &ProtocolTree, g: &Gadget, z: u32, params: &LiftingParams) -> Result<SimResult, SimError> {
    lift_deterministic_with_budget(p, g, z, params, SimBudget::default())
}

pub fn lift_deterministic_with_budget(
    p: &ProtocolTree,
    g: &Gadget,
    z: u32,
    params: &LiftingParams,
    budget: SimBudget,
) -> Result<SimResult, SimError> {
    require_mode(params, Mode::Deterministic)?;
    Ok(Engine::new(p, g, z, params, budget)?.run_deterministic())
}

/// One sampled run of the randomized simulation.
pub fn lift_randomized<R: RngCore + ?Sized>(
    p: &ProtocolTree,
    g: &Gadget,
    z: u32,
    params: &LiftingParams,
    rng: &mut R,
) -> Result<SimResult, SimError> {
    lift_randomized_with_budget(p, g, z, params, SimBudget::default(), rng)
}

pub fn lift_randomized_with_budget<R: RngCore + ?Sized>(
    p: &ProtocolTree,
    g: &Gadget,
    z: u32,
    params: &LiftingParams,
    budget: SimBudget,
    rng: &mut R,
) -> Result<SimResult, SimError> {
    require_mode(params, Mode::Randomized)?;
    Ok(Engine::new(p, g, z, params, budget)?.run_sampled(rng))
}

/// Sample a component of `rp` by its weight, then run [`lift_randomized`] on it.
pub fn lift_randomized_protocol<R: RngCore + ?Sized>(
    rp: &RandomizedProtocol,
    g: &Gadget,
    z: u32,
    params: &LiftingParams,
    rng: &mut R,
) -> Result<SimResult, SimError> {
    let weights: Vec<Rational> = rp.components().iter().map(|(_, w)| w.clone()).collect();
    let k = sample_index(rng, &weights);
    lift_randomized(&rp.components()[k].0, g, z, params, rng)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Transcript(Transcript),
    Error,
    Violation,
}

/// Exact output distribution of the randomized simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputTable {
    pub dist: Distribution<Outcome>,
    /// Mass of `K > C + b` halts.
    pub k_halt: Rational,
    pub truncation_halt: Rational,
    pub violation: Rational,
    /// Every leaf of the enumeration with its probability, in exploration order.
    pub runs: Vec<(Rational, SimResult)>,
}

impl OutputTable {
    /// Total mass of error halts of both kinds.
    pub fn error_mass(&self) -> Rational {
        &self.k_halt + &self.truncation_halt
    }

    fn from_runs(runs: Vec<(Rational, SimResult)>) -> OutputTable {
        let mut masses: BTreeMap<Outcome, Rational> = BTreeMap::new();
        let (mut k_halt, mut truncation_halt, mut violation) = (Rational::zero(), Rational::zero(), Rational::zero());
        for (p, r) in &runs {
            let o = match &r.status {
                Status::Done => Outcome::Transcript(r.transcript.clone()),
                Status::ErrorHalt(HaltKind::K) => {
                    k_halt += p;
                    Outcome::Error
                }
                Status::ErrorHalt(HaltKind::Truncation) => {
                    truncation_halt += p;
                    Outcome::Error
                }
                Status::Violation { .. } => {
                    violation += p;
                    Outcome::Violation
                }
            };
            *masses.entry(o).or_insert_with(Rational::zero) += p;
        }
        let dist = Distribution::new(masses).expect("branch probabilities sum to 1");
        OutputTable { dist, k_halt, truncation_halt, violation, runs }
    }
}

pub fn enumerate_output_distribution(p: &ProtocolTree, g: &Gadget, z: u32, params: &LiftingParams) -> Result<OutputTable, SimError> {
    enumerate_output_distribution_with_budget(p, g, z, params, SimBudget::default())
}

pub fn enumerate_output_distribution_with_budget(
    p: &ProtocolTree,
    g: &Gadget,
    z: u32,
    params: &LiftingParams,
    budget: SimBudget,
) -> Result<OutputTable, SimError> {
    require_mode(params, Mode::Randomized)?;
    let e = Engine::new(p, g, z, params, budget)?;
    let mut runs = Vec::new();
    let mut count = 0;
    e.explore(e.start(), Rational::one(), &mut runs, &mut count, budget.branches)?;
    Ok(OutputTable::from_runs(runs))
}

/// Weighted mixture of the component tables of a randomized protocol.
pub fn enumerate_randomized_protocol(rp: &RandomizedProtocol, g: &Gadget, z: u32, params: &LiftingParams) -> Result<OutputTable, SimError> {
    enumerate_randomized_protocol_with_budget(rp, g, z, params, SimBudget::default())
}

pub fn enumerate_randomized_protocol_with_budget(
    rp: &RandomizedProtocol,
    g: &Gadget,
    z: u32,
    params: &LiftingParams,
    budget: SimBudget,
) -> Result<OutputTable, SimError> {
    let mut runs = Vec::new();
    for (p, w) in rp.components() {
        let t = enumerate_output_distribution_with_budget(p, g, z, params, budget)?;
        runs.extend(t.runs.into_iter().map(|(q, r)| (q * w, r)));
    }
    Ok(OutputTable::from_runs(runs))
}

/// Transcript distribution of `p` on inputs uniform over `G^{-1}(z)`.
pub fn reference_distribution(p: &ProtocolTree, g: &Gadget, z: u32) -> Result<Distribution<Transcript>, SimError> {
    let space = p.space();
    if space.n * space.b > 12 {
        return Err(SimError::Budget(format!("|Λ^n|^2 = 2^{} inputs", 2 * space.n * space.b)));
    }
    let mut masses: BTreeMap<Transcript, Rational> = BTreeMap::new();
    for x in space.points() {
        for y in space.points() {
            if g.lift(space, x, y) == z {
                *masses.entry(run_protocol(p, x, y).transcript).or_insert_with(Rational::zero) += Rational::one();
            }
        }
    }
    if masses.is_empty() {
        return Err(SimError::Protocol(ProtocolError::EmptyFiber));
    }
    Ok(Distribution::from_weights(masses)?)
}

/// Statistical distance between the simulation output and the reference transcripts.
pub fn distance_to_reference(table: &OutputTable, reference: &Distribution<Transcript>) -> Rational {
    let r = reference.map(|t| Outcome::Transcript(t.clone()));
    let (a, b) = table.dist.align(&r);
    a.statistical_distance(&b).expect("aligned domains")
}

/// First `(x, y)` in the final rectangle with `g^n(x, y) = z` whose run reproduces the transcript.
pub fn certify_transcript(result: &SimResult, p: &ProtocolTree, g: &Gadget, z: u32) -> Option<(u32, u32)> {
    if !result.completed() {
        return None;
    }
    let space = p.space();
    for &x in &result.xset {
        for &y in &result.yset {
            if g.lift(space, x, y) == z && run_protocol(p, x, y).transcript == result.transcript {
                return Some((x, y));
            }
        }
    }
    None
}

/// Recheck that a snapshot's rectangle is consistent with the transcript prefix
/// and with the fixed blocks of its restriction.
pub fn check_rectangle(p: &ProtocolTree, g: &Gadget, transcript: &Transcript, snap: &Snapshot) -> bool {
    let space = p.space();
    let bits = &transcript.bits[..snap.pi_len];
    let mut node = p.root();
    let mut owners = Vec::new();
    for &b in bits {
        let Some(s) = p.speaker(node) else { return false };
        owners.push((node, s, b));
        node = p.child(node, b);
    }
    let consistent = |set: &[u32], who: Party| {
        set.iter().all(|&v| owners.iter().filter(|(_, s, _)| *s == who).all(|&(id, _, b)| p.bit(id, v) == b))
    };
    if !consistent(&snap.xset, Party::Alice) || !consistent(&snap.yset, Party::Bob) {
        return false;
    }
    // Between the query and the conditioning step the listener has not caught up with ρ yet.
    if snap.step == Step::Query {
        return true;
    }
    snap.rho.fixed().iter().all(|i| {
        let want = snap.rho.cells[i as usize] == Some(true);
        let xs: alloc::collections::BTreeSet<u32> = snap.xset.iter().map(|&x| space.block(x, i)).collect();
        let ys: alloc::collections::BTreeSet<u32> = snap.yset.iter().map(|&y| space.block(y, i)).collect();
        xs.iter().all(|&a| ys.iter().all(|&b| g.value(a, b) == want))
    })
}

#[cfg(test)]
mod tests;
