//! Seeded corpus sweeps over every checker.
//!
//! A spec is split into independent tasks. Each task seeds its own generator
//! from the corpus seed and its label, so results do not depend on the order
//! or the thread the tasks run on. [`merge`] folds task outputs in plan order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lemmas::*;
use super::{Bound, Instance, LemmaReport};
use crate::dist::{BlockDist, Distribution};
use crate::dtree::{brute_force_ddt, SearchProblem};
use crate::fourier::{fourier_bias_identity_holds, vazirani_minentropy_check, vazirani_uniformity_check};
use crate::gadget::{check_xor_lemma, check_xor_lemma_with, extractor_check, sampling_check, xor_extractor_check, xor_sampling_check, BooleanGadget, Gadget, DEFAULT_SIDE_BUDGET};
use crate::logcmp::cmp_pow2;
use crate::protocol::{canonical_protocol, complexity, kraft_heavy_index, kraft_heavy_message};
use crate::rational::{format_rational, int, Rational};
use crate::simulate::ledger::ledger_assertions;
use crate::simulate::{
    certify_transcript, distance_to_reference, enumerate_output_distribution_with_budget, lift_deterministic_with_budget,
    reference_distribution, LiftingParams, Mode, SimBudget, SimResult, Status,
};
use crate::space::{BlockSpace, Coords};
use crate::structure::{check_fix, check_partition, density_restoring_fix, density_restoring_partition, flat, Restriction, ScanBudget};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierSpec {
    pub samples: u32,
    pub max_m: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VaziraniSpec {
    pub samples: u32,
    pub max_m: u32,
    pub eps: Vec<Rational>,
    pub t: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorSpec {
    pub gadget: Gadget,
    pub m: Vec<u32>,
    /// Replaces the constant of the upper bound; used to plant violations.
    pub upper_constant: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractorSpec {
    pub gadgets: Vec<Gadget>,
    /// Gadgets with `b` up to this are swept over all flat pairs.
    pub exhaustive_max_b: u32,
    /// Sampled flat pairs per width for larger gadgets.
    pub samples: u32,
    /// Values taken by `λ` and `γ`.
    pub grid: Vec<Rational>,
    pub etas: Vec<Rational>,
    /// Widths `|S|` for the XOR corollaries, subject to `|S|·b <= 4`.
    pub max_width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KraftSpec {
    pub max_depth: u32,
    pub assignments: u32,
    /// Every this-many codes, the rational message chooser is run as well.
    pub rational_stride: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensitySpec {
    pub samples: u32,
    pub max_n: u32,
    pub max_b: u32,
    pub deltas: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimSpec {
    pub gadgets: Vec<Gadget>,
    pub n: u32,
    pub supports: u32,
    pub eps: Vec<Rational>,
    pub c: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuredSpec {
    pub gadgets: Vec<Gadget>,
    pub n: Vec<u32>,
    /// Random instances per `(gadget, n)`, after the all-uniform one.
    pub instances: u32,
    pub gammas: Vec<Rational>,
    pub etas: Vec<Rational>,
    pub c: Rational,
    pub h_uniformity: Rational,
    pub h_marginals: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MainLemmaSpec {
    pub gadgets: Vec<Gadget>,
    pub n: Vec<u32>,
    pub instances: u32,
    pub gammas: Vec<Rational>,
    pub eps: Vec<Rational>,
    pub etas: Vec<Rational>,
    pub c: Rational,
    pub h: Rational,
    pub scan: ScanBudget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationSpec {
    pub gadget: Gadget,
    pub problems: Vec<SearchProblem>,
    pub eta: Rational,
    pub c: Rational,
    pub h: Rational,
    pub budget: SimBudget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSpec {
    /// Problems with their expected `D^dt`.
    pub expectations: Vec<(SearchProblem, u32)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusSpec {
    pub seed: u64,
    pub fourier: Option<FourierSpec>,
    pub vazirani: Option<VaziraniSpec>,
    pub xor_lemma: Vec<XorSpec>,
    pub extractor: Option<ExtractorSpec>,
    pub kraft: Option<KraftSpec>,
    pub density: Option<DensitySpec>,
    pub claims: Option<ClaimSpec>,
    pub structured: Option<StructuredSpec>,
    pub main_lemma: Option<MainLemmaSpec>,
    pub simulation: Option<SimulationSpec>,
    pub oracle: Option<OracleSpec>,
}

fn gadget(name: &str) -> Gadget {
    Gadget::builtin(name).expect("builtin gadget")
}

fn problem(name: &str) -> SearchProblem {
    SearchProblem::builtin(name).expect("builtin problem")
}

fn rats(v: &[(i64, i64)]) -> Vec<Rational> {
    v.iter().map(|&(a, b)| crate::rational::ratio(a, b)).collect()
}

impl CorpusSpec {
    /// The desk-scale corpus behind the acceptance suite.
    pub fn desk(seed: u64) -> CorpusSpec {
        let quarter_half = rats(&[(1, 4), (1, 2)]);
        let basic = ["and1", "or1", "xor1", "ip1"];
        let mut xor_lemma: Vec<XorSpec> =
            basic.iter().map(|g| XorSpec { gadget: gadget(g), m: vec![1, 2, 3], upper_constant: None }).collect();
        xor_lemma.push(XorSpec { gadget: gadget("ip2"), m: vec![1], upper_constant: None });
        CorpusSpec {
            seed,
            fourier: Some(FourierSpec { samples: 1000, max_m: 4 }),
            vazirani: Some(VaziraniSpec { samples: 1000, max_m: 4, eps: rats(&[(1, 4), (1, 2), (1, 1)]), t: vec![1, 2] }),
            xor_lemma,
            extractor: Some(ExtractorSpec {
                gadgets: ["and1", "or1", "xor1", "ip1", "ip2", "rand:2:7"].iter().map(|g| gadget(g)).collect(),
                exhaustive_max_b: 1,
                samples: 200,
                grid: quarter_half.clone(),
                etas: rats(&[(1, 4), (1, 2), (1, 1), (2, 1)]),
                max_width: 2,
            }),
            kraft: Some(KraftSpec { max_depth: 4, assignments: 100, rational_stride: 97 }),
            density: Some(DensitySpec { samples: 200, max_n: 3, max_b: 2, deltas: rats(&[(1, 2), (3, 4), (1, 1)]) }),
            claims: Some(ClaimSpec {
                gadgets: ["xor1", "and1", "ip1", "ip2"].iter().map(|g| gadget(g)).collect(),
                n: 2,
                supports: 20,
                eps: quarter_half.clone(),
                c: int(64),
            }),
            structured: Some(StructuredSpec {
                gadgets: ["xor1", "and1", "ip2"].iter().map(|g| gadget(g)).collect(),
                n: vec![1, 2],
                instances: 20,
                gammas: quarter_half.clone(),
                etas: rats(&[(1, 4), (1, 2), (1, 1), (2, 1)]),
                c: int(64),
                h_uniformity: int(8),
                h_marginals: int(10),
            }),
            main_lemma: Some(MainLemmaSpec {
                gadgets: ["ip2", "ip4"].iter().map(|g| gadget(g)).collect(),
                n: vec![1],
                instances: 20,
                gammas: quarter_half.clone(),
                eps: rats(&[(1, 2), (1, 1)]),
                etas: quarter_half,
                c: int(64),
                h: int(8),
                scan: ScanBudget { max_free: 1, max_b: 4 },
            }),
            simulation: Some(SimulationSpec {
                gadget: gadget("ip2"),
                problems: ["parity2", "const2", "dictator2", "index2", "findone2"].iter().map(|p| problem(p)).collect(),
                eta: crate::rational::ratio(1, 2),
                c: int(64),
                h: int(1),
                budget: SimBudget::default(),
            }),
            oracle: Some(OracleSpec {
                expectations: vec![(problem("parity3"), 3), (problem("const3"), 0), (problem("dictator3"), 1)],
            }),
        }
    }

    /// The smallest corpus carrying a wrong XOR-lemma bound.
    pub fn planted(seed: u64) -> CorpusSpec {
        CorpusSpec {
            seed,
            xor_lemma: vec![XorSpec { gadget: gadget("xor1"), m: vec![2], upper_constant: Some(crate::rational::ratio(1, 2)) }],
            ..CorpusSpec::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Fourier,
    Vazirani,
    Xor(usize),
    Extractor(usize),
    Kraft,
    Density,
    Claims(usize),
    Structured(usize),
    MainLemma(usize),
    Simulation(usize),
    Oracle,
}

impl Task {
    pub fn label(self) -> String {
        match self {
            Task::Fourier => String::from("fourier"),
            Task::Vazirani => String::from("vazirani"),
            Task::Xor(i) => format!("xor/{i}"),
            Task::Extractor(i) => format!("extractor/{i}"),
            Task::Kraft => String::from("kraft"),
            Task::Density => String::from("density"),
            Task::Claims(i) => format!("claims/{i}"),
            Task::Structured(i) => format!("structured/{i}"),
            Task::MainLemma(i) => format!("main/{i}"),
            Task::Simulation(i) => format!("simulation/{i}"),
            Task::Oracle => String::from("oracle"),
        }
    }
}

/// One simulation run (or enumeration) in summary form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimSummary {
    pub id: String,
    pub mode: Mode,
    pub status: String,
    pub queries: u32,
    pub depth: usize,
    pub rounds_bound: u32,
    pub comm: u32,
    pub certified: Option<bool>,
    pub k_halt: Option<Rational>,
    pub truncation_halt: Option<Rational>,
    pub violation: Option<Rational>,
    pub tv: Option<Rational>,
    pub ledger_mismatches: usize,
    pub ledger_flagged: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaskOutput {
    pub lemmas: Vec<LemmaReport>,
    pub simulations: Vec<SimSummary>,
    pub refusals: Vec<String>,
}

impl TaskOutput {
    fn lemma(&mut self, id: &str) -> &mut LemmaReport {
        let pos = match self.lemmas.iter().position(|l| l.lemma == id) {
            Some(p) => p,
            None => {
                self.lemmas.push(LemmaReport::new(id));
                self.lemmas.len() - 1
            }
        };
        &mut self.lemmas[pos]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusReport {
    pub seed: u64,
    pub lemmas: Vec<LemmaReport>,
    pub simulations: Vec<SimSummary>,
    pub refusals: Vec<String>,
}

impl CorpusReport {
    pub fn counterexamples(&self) -> usize {
        self.lemmas.iter().map(|l| l.counterexamples.len()).sum()
    }

    pub fn lemma(&self, id: &str) -> Option<&LemmaReport> {
        self.lemmas.iter().find(|l| l.lemma == id)
    }

    /// Lemmas with instances, none of which met the hypothesis.
    pub fn all_vacuous(&self) -> Vec<&str> {
        self.lemmas.iter().filter(|l| l.all_vacuous()).map(|l| l.lemma.as_str()).collect()
    }

    pub fn success(&self) -> bool {
        self.counterexamples() == 0
    }
}

pub fn plan(spec: &CorpusSpec) -> Vec<Task> {
    let mut t = Vec::new();
    if spec.fourier.is_some() {
        t.push(Task::Fourier);
    }
    if spec.vazirani.is_some() {
        t.push(Task::Vazirani);
    }
    t.extend((0..spec.xor_lemma.len()).map(Task::Xor));
    if let Some(e) = &spec.extractor {
        t.extend((0..e.gadgets.len()).map(Task::Extractor));
    }
    if spec.kraft.is_some() {
        t.push(Task::Kraft);
    }
    if spec.density.is_some() {
        t.push(Task::Density);
    }
    if let Some(c) = &spec.claims {
        t.extend((0..c.gadgets.len()).map(Task::Claims));
    }
    if let Some(s) = &spec.structured {
        t.extend((0..s.gadgets.len()).map(Task::Structured));
    }
    if let Some(s) = &spec.main_lemma {
        t.extend((0..s.gadgets.len()).map(Task::MainLemma));
    }
    if let Some(s) = &spec.simulation {
        t.extend((0..s.problems.len()).map(Task::Simulation));
    }
    if spec.oracle.is_some() {
        t.push(Task::Oracle);
    }
    t
}

/// FNV-1a of the label, mixed into the corpus seed.
fn task_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

pub fn run_task(spec: &CorpusSpec, task: Task) -> TaskOutput {
    let mut out = TaskOutput::default();
    let mut rng = task_rng(spec.seed, &task.label());
    match task {
        Task::Fourier => fourier_task(spec.fourier.as_ref().expect("planned"), &mut rng, &mut out),
        Task::Vazirani => vazirani_task(spec.vazirani.as_ref().expect("planned"), &mut rng, &mut out),
        Task::Xor(i) => xor_task(&spec.xor_lemma[i], &mut out),
        Task::Extractor(i) => extractor_task(spec.extractor.as_ref().expect("planned"), i, &mut rng, &mut out),
        Task::Kraft => kraft_task(spec.kraft.as_ref().expect("planned"), &mut rng, &mut out),
        Task::Density => density_task(spec.density.as_ref().expect("planned"), &mut rng, &mut out),
        Task::Claims(i) => claims_task(spec.claims.as_ref().expect("planned"), i, &mut rng, &mut out),
        Task::Structured(i) => structured_task(spec.structured.as_ref().expect("planned"), i, &mut rng, &mut out),
        Task::MainLemma(i) => main_lemma_task(spec.main_lemma.as_ref().expect("planned"), i, &mut rng, &mut out),
        Task::Simulation(i) => simulation_task(spec.simulation.as_ref().expect("planned"), i, &mut out),
        Task::Oracle => oracle_task(spec.oracle.as_ref().expect("planned"), &mut out),
    }
    out
}

/// Fold task outputs, given in plan order, into one report.
pub fn merge(seed: u64, outputs: Vec<TaskOutput>) -> CorpusReport {
    let mut r = CorpusReport { seed, ..CorpusReport::default() };
    for o in outputs {
        for l in o.lemmas {
            match r.lemmas.iter_mut().find(|m| m.lemma == l.lemma) {
                Some(m) => m.merge(l),
                None => r.lemmas.push(l),
            }
        }
        r.simulations.extend(o.simulations);
        r.refusals.extend(o.refusals);
    }
    r
}

/// Every task in order on the current thread.
pub fn run_corpus(spec: &CorpusSpec) -> CorpusReport {
    merge(spec.seed, plan(spec).into_iter().map(|t| run_task(spec, t)).collect())
}

fn random_dist(rng: &mut ChaCha8Rng, m: u32, hi: u32) -> Distribution<u32> {
    let mut w: Vec<u32> = (0..1u32 << m).map(|_| rng.gen_range(0..hi)).collect();
    if w.iter().all(|&v| v == 0) {
        w[0] = 1;
    }
    Distribution::from_weights(w.into_iter().enumerate().map(|(z, v)| (z as u32, int(i64::from(v))))).expect("positive total")
}

/// Near-uniform and arbitrary distributions on `{0,1}^m`, cycling by index.
fn vazirani_dist(rng: &mut ChaCha8Rng, i: u32, m: u32) -> Distribution<u32> {
    let size = 1u32 << m;
    let w: Vec<u32> = match i % 4 {
        0 => vec![1; size as usize],
        1 => (0..size).map(|_| 4096 + rng.gen_range(0..2)).collect(),
        2 => (0..size).map(|_| 64 + rng.gen_range(0..8)).collect(),
        _ => return random_dist(rng, m, 16),
    };
    Distribution::from_weights(w.into_iter().enumerate().map(|(z, v)| (z as u32, int(i64::from(v))))).expect("positive total")
}

fn dist_text(d: &Distribution<u32>) -> String {
    let v: Vec<String> = d.iter().map(|(z, p)| format!("{z}:{}", format_rational(p))).collect();
    v.join(" ")
}

fn fourier_task(s: &FourierSpec, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    let r = out.lemma("fourier-bias-identity");
    for i in 0..s.samples {
        let m = 1 + i % s.max_m;
        let d = random_dist(rng, m, 16);
        r.record(false, || dist_text(&d), || vec![Instance::implication(format!("{i}"), fourier_bias_identity_holds(&d, m), String::new())]);
    }
}

fn vazirani_task(s: &VaziraniSpec, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    for i in 0..s.samples {
        let m = 1 + i % s.max_m;
        let d = vazirani_dist(rng, i, m);
        for eps in &s.eps {
            let check = || {
                let v = vazirani_uniformity_check(&d, m, eps);
                vec![Instance {
                    id: format!("{i}/eps={}", format_rational(eps)),
                    hypothesis: v.hypothesis,
                    measured: None,
                    bound: None,
                    conclusion: v.conclusion,
                    note: format!("worst set {}, worst point {}", v.worst_set.display(), v.worst_point),
                }]
            };
            out.lemma("vazirani").record(false, || dist_text(&d), check);
        }
        for &t in &s.t {
            let check = || {
                let v = vazirani_minentropy_check(&d, m, t);
                vec![Instance {
                    id: format!("{i}/t={t}"),
                    hypothesis: v.hypothesis,
                    measured: None,
                    bound: None,
                    conclusion: v.conclusion,
                    note: String::new(),
                }]
            };
            out.lemma("vazirani-min-entropy").record(false, || dist_text(&d), check);
        }
    }
}

fn xor_task(s: &XorSpec, out: &mut TaskOutput) {
    let name = gadget_name(&s.gadget);
    for &m in &s.m {
        let run = || match &s.upper_constant {
            Some(c) => check_xor_lemma_with(&s.gadget, m, c, DEFAULT_SIDE_BUDGET),
            None => check_xor_lemma(&s.gadget, m),
        };
        match run() {
            Ok(_) => {
                let check = || {
                    let r = run().expect("checked above");
                    let id = format!("{name}/m={m}");
                    let note = format!(
                        "disc(g)={} lower={} value={} upper={}",
                        format_rational(&r.disc_g),
                        format_rational(&r.lower),
                        format_rational(&r.value),
                        format_rational(&r.upper)
                    );
                    let lower_ok = r.lower <= r.value;
                    let mut inst = Instance::measured(id, true, r.value.clone(), Bound::AtMost(r.upper.clone()), note);
                    inst.conclusion = inst.conclusion && lower_ok && r.sandwich_holds;
                    vec![inst]
                };
                out.lemma("xor-lemma").record(true, || format!("g={name} m={m}"), check);
            }
            Err(e) => out.refusals.push(format!("xor-lemma {name} m={m}: {e}")),
        }
    }
}

/// All non-empty subsets of `0..size`, as sorted point lists.
fn all_subsets(size: u32) -> Vec<Vec<u32>> {
    (1u64..1 << size).map(|mask| (0..size).filter(|&i| mask >> i & 1 == 1).collect()).collect()
}

fn random_subset(rng: &mut ChaCha8Rng, size: u32) -> Vec<u32> {
    loop {
        let s: Vec<u32> = (0..size).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn extractor_task(s: &ExtractorSpec, i: usize, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    let g = &s.gadgets[i];
    let b = g.b();
    let name = gadget_name(g);
    for width in 1..=s.max_width {
        if width * b > 4 {
            break;
        }
        let size = 1u32 << (width * b);
        let pairs: Vec<(Vec<u32>, Vec<u32>)> = if b <= s.exhaustive_max_b {
            let subs = all_subsets(size);
            subs.iter().flat_map(|a| subs.iter().map(move |c| (a.clone(), c.clone()))).collect()
        } else {
            (0..s.samples).map(|_| (random_subset(rng, size), random_subset(rng, size))).collect()
        };
        for (k, (xs, ys)) in pairs.iter().enumerate() {
            let x = Distribution::uniform(xs.iter().copied()).expect("non-empty");
            let y = Distribution::uniform(ys.iter().copied()).expect("non-empty");
            let input = || format!("g={name} width={width} X={xs:?} Y={ys:?}");
            for eta in &s.etas {
                for lambda in &s.grid {
                    let id = |lemma: &str, gamma: Option<&Rational>| {
                        let g = gamma.map_or_else(String::new, |v| format!(" gamma={}", format_rational(v)));
                        format!("{name}/{lemma}/w={width}/{k} eta={} lambda={}{g}", format_rational(eta), format_rational(lambda))
                    };
                    if width == 1 {
                        let check = || match extractor_check(g, &x, &y, eta, lambda) {
                            Ok(r) => vec![extractor_instance(id("extractor", None), r.hypothesis, &r.bias, &r.bound_exponent, false)],
                            Err(_) => Vec::new(),
                        };
                        out.lemma("extractor").record(false, input, check);
                    }
                    let check = || match xor_extractor_check(g, width, &x, &y, eta, lambda) {
                        Ok(r) => vec![extractor_instance(id("xor-extractor", None), r.hypothesis, &r.bias, &r.bound_exponent, false)],
                        Err(_) => Vec::new(),
                    };
                    out.lemma("xor-extractor").record(false, input, check);
                    for gamma in &s.grid {
                        if width == 1 {
                            let check = || match sampling_check(g, &x, &y, gamma, lambda, eta) {
                                Ok(r) => vec![extractor_instance(id("sampling", Some(gamma)), r.hypothesis, &r.bad_mass, &r.bound_exponent, true)],
                                Err(_) => Vec::new(),
                            };
                            out.lemma("sampling").record(false, input, check);
                        }
                        let check = || match xor_sampling_check(g, width, &x, &y, gamma, lambda, eta) {
                            Ok(r) => vec![extractor_instance(id("xor-sampling", Some(gamma)), r.hypothesis, &r.bad_mass, &r.bound_exponent, true)],
                            Err(_) => Vec::new(),
                        };
                        out.lemma("xor-sampling").record(false, input, check);
                    }
                }
            }
        }
    }
}

fn extractor_instance(id: String, hypothesis: bool, measured: &Rational, exp: &Rational, strict: bool) -> Instance {
    let bound = if strict { Bound::BelowPow2(exp.clone()) } else { Bound::AtMostPow2(exp.clone()) };
    Instance::measured(id, hypothesis, measured.clone(), bound, String::new())
}

/// Calls `f` with every non-empty prefix-free code whose words have length at most `max`.
/// Words are `(length, bits)`.
pub fn for_each_prefix_free_code<F: FnMut(&[(u32, u32)])>(max: u32, mut f: F) {
    fn walk<F: FnMut(&[(u32, u32)])>(pending: &mut Vec<(u32, u32)>, words: &mut Vec<(u32, u32)>, max: u32, f: &mut F) {
        let Some(node) = pending.pop() else {
            if !words.is_empty() {
                f(words);
            }
            return;
        };
        words.push(node);
        walk(pending, words, max, f);
        words.pop();
        if node.0 < max {
            pending.push((node.0 + 1, node.1 << 1 | 1));
            pending.push((node.0 + 1, node.1 << 1));
            walk(pending, words, max, f);
            pending.truncate(pending.len() - 2);
        } else {
            walk(pending, words, max, f);
        }
        pending.push(node);
    }
    walk(&mut vec![(0, 0)], &mut Vec::new(), max, &mut f);
}

fn word_bits(len: u32, bits: u32) -> Vec<bool> {
    (0..len).rev().map(|i| bits >> i & 1 == 1).collect()
}

fn kraft_task(s: &KraftSpec, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    let mut heavy = LemmaReport::new("kraft");
    let mut exact = LemmaReport::new("kraft-rational");
    let mut count = 0u64;
    let mut weights: Vec<u64> = Vec::new();
    for_each_prefix_free_code(s.max_depth, |code| {
        let lens: Vec<u32> = code.iter().map(|w| w.0).collect();
        let mut failures = 0u32;
        let mut first: Option<Vec<u64>> = None;
        for _ in 0..s.assignments {
            weights.clear();
            weights.extend(code.iter().map(|_| rng.gen_range(0..16u64)));
            if weights.iter().all(|&w| w == 0) {
                weights[0] = 1;
            }
            if kraft_heavy_index(&lens, &weights).is_none() {
                failures += 1;
            }
            first.get_or_insert_with(|| weights.clone());
        }
        let id = format!("{count}");
        let input = || format!("code={:?}", code.iter().map(|&(l, b)| crate::space::format_bits(b, l)).collect::<Vec<_>>());
        heavy.record(false, input, || vec![Instance::implication(id.clone(), failures == 0, format!("{failures} failures"))]);
        if s.rational_stride > 0 && count % u64::from(s.rational_stride) == 0 {
            let w = first.unwrap_or_default();
            let check = || {
                let d = Distribution::from_weights(
                    code.iter().zip(&w).filter(|(_, &m)| m > 0).map(|(&(l, b), &m)| (word_bits(l, b), int(m as i64))),
                )
                .expect("positive total");
                let ok = kraft_heavy_message(&d).is_ok_and(|m| cmp_pow2(&d.mass(&m), &int(-(m.len() as i64))) != Ordering::Less);
                vec![Instance::implication(id.clone(), ok, String::new())]
            };
            exact.record(false, input, check);
        }
        count += 1;
    });
    out.lemmas.push(heavy);
    out.lemmas.push(exact);
}

fn density_task(s: &DensitySpec, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    for i in 0..s.samples {
        let n = 1 + i % s.max_n;
        let b = 1 + (i / s.max_n) % s.max_b;
        let space = BlockSpace::new(n, b);
        let x = if i % 2 == 0 {
            flat(space, &random_subset(rng, space.size()))
        } else {
            let d = random_dist(rng, n * b, 8);
            BlockDist::new(space, d).expect("in range")
        };
        let input = || format!("n={n} b={b} X=[{}]", dist_text(&x.dist));
        for delta in &s.deltas {
            let id = format!("{i}/delta={}", format_rational(delta));
            let fix = || {
                let f = density_restoring_fix(&x, delta);
                vec![Instance::implication(id.clone(), check_fix(&x, delta, &f), format!("fixed {}", f.fixed.display()))]
            };
            out.lemma("density-restoring-fix").record(false, input, fix);
            let part = || {
                let p = density_restoring_partition(&x, delta);
                let c = check_partition(&x, &p);
                vec![Instance::implication(id.clone(), c.all(), format!("{} parts, {c:?}", p.parts.len()))]
            };
            out.lemma("density-restoring-partition").record(false, input, part);
        }
    }
}

fn claims_task(s: &ClaimSpec, i: usize, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    let g = &s.gadgets[i];
    let name = gadget_name(g);
    let space = BlockSpace::new(s.n, g.b());
    for k in 0..s.supports {
        let y = flat(space, &random_subset(rng, space.size()));
        for eps in &s.eps {
            for x in space.points() {
                let input = || format!("g={name} x={x} Y={:?} eps={}", y.dist.support().collect::<Vec<_>>(), format_rational(eps));
                let id = |claim: &str| format!("{name}/{k}/eps={}/x={}/{claim}", format_rational(eps), space.format_point(x));
                let check = |j: usize| {
                    let mut inst = claim_instances(x, &y, g, eps, &s.c, s.n)[j].clone();
                    inst.id = id(&inst.id);
                    vec![inst]
                };
                out.lemma("claim-skewing").record(false, input, || check(0));
                out.lemma("claim-biasing").record(false, input, || check(1));
            }
        }
    }
}

/// A support for `X` and one for `Y` on `Λ^n` such that every fixed block of `rho`
/// is a monochromatic rectangle of the right colour.
fn structured_instance(rng: &mut ChaCha8Rng, g: &Gadget, n: u32) -> (Restriction, Vec<u32>, Vec<u32>) {
    let b = g.b();
    let side = 1u32 << b;
    let mut rho = Restriction::free_all(n);
    let mut allowed_x: Vec<Vec<u32>> = Vec::new();
    let mut allowed_y: Vec<Vec<u32>> = Vec::new();
    for i in 0..n {
        if rng.gen_bool(0.3) {
            let a = rng.gen_range(0..side);
            let want = rng.gen_bool(0.5);
            let mut ys: Vec<u32> = (0..side).filter(|&y| g.value(a, y) == want).collect();
            let bit = if ys.is_empty() {
                ys = (0..side).collect();
                !want
            } else {
                want
            };
            rho.fix(Coords::singleton(i), u32::from(bit));
            allowed_x.push(vec![a]);
            allowed_y.push(ys);
        } else {
            allowed_x.push((0..side).collect());
            allowed_y.push((0..side).collect());
        }
    }
    let space = BlockSpace::new(n, b);
    let pick = |rng: &mut ChaCha8Rng, allowed: &[Vec<u32>]| loop {
        let pts: Vec<u32> = space
            .points()
            .filter(|&p| (0..n).all(|i| allowed[i as usize].contains(&space.block(p, i))))
            .filter(|_| rng.gen_bool(0.7))
            .collect();
        if !pts.is_empty() {
            return pts;
        }
    };
    let xs = pick(rng, &allowed_x);
    let ys = pick(rng, &allowed_y);
    (rho, xs, ys)
}

fn structured_task(s: &StructuredSpec, i: usize, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    let g = &s.gadgets[i];
    let name = gadget_name(g);
    for &n in &s.n {
        let space = BlockSpace::new(n, g.b());
        let all: Vec<u32> = space.points().collect();
        let mut instances = vec![(Restriction::free_all(n), all.clone(), all)];
        instances.extend((0..s.instances).map(|_| structured_instance(rng, g, n)));
        for (k, (rho, xs, ys)) in instances.iter().enumerate() {
            let (x, y) = (flat(space, xs), flat(space, ys));
            for gamma in &s.gammas {
                for eta in &s.etas {
                    let prefix = format!("{name}/n={n}/{k}/gamma={}/eta={}", format_rational(gamma), format_rational(eta));
                    let input = || describe(&x, &y, Some(rho), g, gamma);
                    let ku = LemmaConstants { eta: eta.clone(), c: s.c.clone(), h: s.h_uniformity.clone() };
                    let check = || {
                        let mut v = multiplicative_uniformity_instances(&x, &y, rho, g, gamma, &ku);
                        v.iter_mut().for_each(|inst| inst.id = format!("{prefix}/{}", inst.id));
                        v
                    };
                    out.lemma("multiplicative-uniformity").record(true, input, check);

                    let km = LemmaConstants { eta: eta.clone(), c: s.c.clone(), h: s.h_marginals.clone() };
                    for z in space_patterns(n).filter(|&z| rho.consistent_with(z)) {
                        let check = || match uniform_marginals_instances(&x, &y, rho, g, z, gamma, &km) {
                            Ok(mut v) => {
                                v.iter_mut().for_each(|inst| inst.id = format!("{prefix}/{}", inst.id));
                                v
                            }
                            Err(_) => {
                                let failed = uniform_marginals_hypothesis(&x, &y, rho, g, gamma, &km);
                                vec![Instance {
                                    id: format!("{prefix}/z={}", crate::space::format_bits(z, n)),
                                    hypothesis: failed.is_empty(),
                                    measured: None,
                                    bound: None,
                                    conclusion: false,
                                    note: String::from("empty fiber"),
                                }]
                            }
                        };
                        out.lemma("uniform-marginals").record(true, input, check);
                    }
                }
            }
        }
    }
}

fn space_patterns(n: u32) -> core::ops::Range<u32> {
    0..1u32 << n
}

fn main_lemma_task(s: &MainLemmaSpec, i: usize, rng: &mut ChaCha8Rng, out: &mut TaskOutput) {
    let g = &s.gadgets[i];
    let name = gadget_name(g);
    for &n in &s.n {
        let space = BlockSpace::new(n, g.b());
        let all: Vec<u32> = space.points().collect();
        let mut instances = vec![(Restriction::free_all(n), all.clone(), all)];
        instances.extend((0..s.instances).map(|_| structured_instance(rng, g, n)));
        for (k, (rho, xs, ys)) in instances.iter().enumerate() {
            let (x, y) = (flat(space, xs), flat(space, ys));
            for gamma in &s.gammas {
                for eps in &s.eps {
                    for eta in &s.etas {
                        let kc = LemmaConstants { eta: eta.clone(), c: s.c.clone(), h: s.h.clone() };
                        let prefix = format!(
                            "{name}/n={n}/{k}/gamma={}/eps={}/eta={}",
                            format_rational(gamma),
                            format_rational(eps),
                            format_rational(eta)
                        );
                        match main_lemma_instances(&x, &y, rho, g, eps, gamma, &kc, s.scan) {
                            Ok(_) => {
                                let check = || {
                                    let mut v = main_lemma_instances(&x, &y, rho, g, eps, gamma, &kc, s.scan).unwrap_or_default();
                                    v.iter_mut().for_each(|inst| inst.id = format!("{prefix}/{}", inst.id));
                                    v
                                };
                                out.lemma("main-lemma").record(true, || describe(&x, &y, Some(rho), g, gamma), check);
                            }
                            Err(e) => out.refusals.push(format!("main-lemma {prefix}: {e}")),
                        }
                    }
                }
            }
        }
    }
}

/// One-line rendering of a run status.
pub fn status_text(s: &Status) -> String {
    match s {
        Status::Done => String::from("done"),
        Status::ErrorHalt(k) => format!("error-halt ({k:?})"),
        Status::Violation { step, reason } => format!("violation at step {step}: {reason}"),
    }
}

fn summary(id: String, r: &SimResult, rounds_bound: u32, comm: u32, certified: Option<bool>) -> SimSummary {
    SimSummary {
        id,
        mode: r.trace.params.mode,
        status: status_text(&r.status),
        queries: r.total_queries(),
        depth: r.depth,
        rounds_bound,
        comm,
        certified,
        k_halt: None,
        truncation_halt: None,
        violation: None,
        tv: None,
        ledger_mismatches: 0,
        ledger_flagged: 0,
    }
}

fn simulation_task(s: &SimulationSpec, i: usize, out: &mut TaskOutput) {
    let prob = &s.problems[i];
    let g = &s.gadget;
    let b = g.b();
    let ddt = match brute_force_ddt(prob) {
        Ok(d) => d,
        Err(e) => {
            out.refusals.push(format!("simulation {}: {e}", prob.name));
            return;
        }
    };
    let p = canonical_protocol(&ddt.tree, g);
    let comm = complexity(&p);
    let cost_bound = ddt.value * (b + 1);
    out.lemma("canonical-cost").record(
        true,
        || format!("problem={}", prob.name),
        || vec![Instance::measured(prob.name.clone(), true, int(i64::from(comm.c)), Bound::AtMost(int(i64::from(cost_bound))), format!("D^dt={}", ddt.value))],
    );

    let det_params = LiftingParams::new(Mode::Deterministic, s.eta.clone(), s.c.clone(), s.h.clone(), b, prob.n);
    let rand_params = LiftingParams::new(Mode::Randomized, s.eta.clone(), s.c.clone(), s.h.clone(), b, prob.n);
    for z in 0..1u32 << prob.n {
        let zs = crate::space::format_bits(z, prob.n);
        let id = format!("{}/z={zs}", prob.name);
        let input = || format!("problem={} gadget={} z={zs}", prob.name, gadget_name(g));

        match &det_params {
            Ok(params) => match lift_deterministic_with_budget(&p, g, z, params, s.budget) {
                Ok(r) => {
                    let cert = certify_transcript(&r, &p, g, z);
                    let ok = match &r.status {
                        Status::Done => cert.is_some() && r.output.as_deref().is_some_and(|o| prob.allows(z, o)),
                        Status::Violation { reason, .. } => !r.trace.failed_hypotheses().is_empty() && reason.contains("violated hypotheses"),
                        Status::ErrorHalt(_) => false,
                    };
                    let note = format!("{}; certificate {:?}", status_text(&r.status), cert);
                    out.lemma("det-certification").record(true, input, || vec![Instance::implication(id.clone(), ok, note.clone())]);
                    out.lemma("det-depth").record(true, input, || {
                        vec![Instance::measured(id.clone(), true, int(r.depth as i64), Bound::AtMost(int(i64::from(comm.r))), String::new())]
                    });
                    let ledger = ledger_assertions(&r, &p, g);
                    out.lemma("ledger").record(true, input, || {
                        let l = ledger_assertions(&r, &p, g);
                        vec![Instance::measured(format!("{id}/det"), true, int(l.mismatches() as i64), Bound::AtMost(Rational::zero()), format!("{} flagged", l.flagged()))]
                    });
                    let mut sum = summary(format!("{id}/det"), &r, comm.r, comm.c, Some(cert.is_some()));
                    sum.ledger_mismatches = ledger.mismatches();
                    sum.ledger_flagged = ledger.flagged();
                    out.simulations.push(sum);
                }
                Err(e) => out.refusals.push(format!("det {id}: {e}")),
            },
            Err(e) => out.refusals.push(format!("det {id}: {e}")),
        }

        match &rand_params {
            Ok(params) => match enumerate_output_distribution_with_budget(&p, g, z, params, s.budget) {
                Ok(t) => {
                    out.lemma("error-halt").record(true, input, || {
                        vec![Instance::measured(
                            id.clone(),
                            true,
                            t.k_halt.clone(),
                            Bound::BelowPow2(int(i64::from(b))),
                            format!("error mass {}", format_rational(&t.error_mass())),
                        )]
                    });
                    let mut mismatches = 0;
                    let mut flagged = 0;
                    for (k, (_, r)) in t.runs.iter().enumerate() {
                        let l = ledger_assertions(r, &p, g);
                        mismatches += l.mismatches();
                        flagged += l.flagged();
                        out.lemma("ledger").record(true, input, || {
                            let l = ledger_assertions(r, &p, g);
                            vec![Instance::measured(format!("{id}/rand/{k}"), true, int(l.mismatches() as i64), Bound::AtMost(Rational::zero()), format!("{} flagged", l.flagged()))]
                        });
                    }
                    let max_depth = t.runs.iter().map(|(_, r)| r.depth).max().unwrap_or(0);
                    let max_q = t.runs.iter().map(|(_, r)| r.total_queries()).max().unwrap_or(0);
                    let mut sum = SimSummary {
                        id: format!("{id}/rand"),
                        mode: Mode::Randomized,
                        status: format!("{} branches", t.runs.len()),
                        queries: max_q,
                        depth: max_depth,
                        rounds_bound: comm.r,
                        comm: comm.c,
                        certified: None,
                        k_halt: Some(t.k_halt.clone()),
                        truncation_halt: Some(t.truncation_halt.clone()),
                        violation: Some(t.violation.clone()),
                        tv: reference_distribution(&p, g, z).ok().map(|r| distance_to_reference(&t, &r)),
                        ledger_mismatches: mismatches,
                        ledger_flagged: flagged,
                    };
                    if t.runs.is_empty() {
                        sum.status = String::from("no branches");
                    }
                    out.simulations.push(sum);
                }
                Err(e) => out.refusals.push(format!("rand {id}: {e}")),
            },
            Err(e) => out.refusals.push(format!("rand {id}: {e}")),
        }
    }
}

fn oracle_task(s: &OracleSpec, out: &mut TaskOutput) {
    for (prob, want) in &s.expectations {
        match brute_force_ddt(prob) {
            Ok(_) => out.lemma("oracle").record(
                true,
                || format!("problem={}", prob.name),
                || {
                    let d = brute_force_ddt(prob).expect("checked above");
                    let ok = d.value == *want && crate::dtree::solves(&d.tree, prob).is_ok() && d.tree.query_complexity() == d.value;
                    vec![Instance::implication(prob.name.clone(), ok, format!("D^dt={} expected {want}", d.value))]
                },
            ),
            Err(e) => out.refusals.push(format!("oracle {}: {e}", prob.name)),
        }
    }
}
