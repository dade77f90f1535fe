use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use super::{Bound, Instance, LemmaReport};
use crate::dist::BlockDist;
use crate::error::VerifyError;
use crate::gadget::{discrepancy, Gadget};
use crate::logcmp::{cmp_pow2, LogForm};
use crate::rational::{format_rational, int, Rational};
use crate::space::format_bits;
use crate::structure::{classify, dangerous_probability, free_marginal, is_structured, max_density, DangerParams, Restriction, ScanBudget};

/// The theorem-level constants a lemma's hypothesis is stated in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaConstants {
    pub eta: Rational,
    pub c: Rational,
    pub h: Rational,
}

/// Standing assumptions: `disc(g) <= 2^{-η·b}` and `b >= c·log n`. Returns the failed ones.
fn standing(g: &Gadget, n: u32, k: &LemmaConstants, failed: &mut Vec<String>) {
    let b = int(i64::from(g.b()));
    match discrepancy(g) {
        Ok(d) if cmp_pow2(&d.value, &-(&k.eta * &b)) != Ordering::Greater => {}
        Ok(_) => failed.push(String::from("disc(g) <= 2^(-eta*b)")),
        Err(_) => failed.push(String::from("disc(g) out of budget")),
    }
    let f = LogForm::constant(b).add_log2(&-k.c.clone(), &int(i64::from(n.max(1))));
    if f.sign() == Ordering::Less {
        failed.push(String::from("b >= c*log n"));
    }
}

fn structured(x: &BlockDist, y: &BlockDist, rho: &Restriction, tau: &Rational, g: &Gadget, failed: &mut Vec<String>) {
    if let Err(r) = is_structured(x, y, rho, tau, g) {
        failed.push(format!("(rho, {})-structured: {}", format_rational(tau), r.clause()));
    }
}

fn note(failed: &[String]) -> String {
    if failed.is_empty() {
        String::new()
    } else {
        format!("failed: {}", failed.join("; "))
    }
}

/// `τ = 2 + h/c − η + γ`.
pub fn uniformity_tau(k: &LemmaConstants, gamma: &Rational) -> Rational {
    int(2) + &k.h / &k.c - &k.eta + gamma
}

/// `τ = 2 + h/(c·ε) − η − γ`.
pub fn main_lemma_tau(k: &LemmaConstants, eps: &Rational, gamma: &Rational) -> Rational {
    int(2) + &k.h / (&k.c * eps) - &k.eta - gamma
}

pub(crate) fn multiplicative_uniformity_instances(
    x: &BlockDist,
    y: &BlockDist,
    rho: &Restriction,
    g: &Gadget,
    gamma: &Rational,
    k: &LemmaConstants,
) -> Vec<Instance> {
    let space = x.space;
    let mut failed = Vec::new();
    standing(g, space.n, k, &mut failed);
    structured(x, y, rho, &uniformity_tau(k, gamma), g, &mut failed);
    let hypothesis = failed.is_empty();

    let free = rho.free();
    let mut mass: Vec<Rational> = (0..1u32 << free.len()).map(|_| Rational::zero()).collect();
    for (&a, pa) in x.dist.iter() {
        for (&b, pb) in y.dist.iter() {
            mass[g.pattern(space, a, b, free) as usize] += pa * pb;
        }
    }
    let scale = int(1i64 << free.len());
    let bound = gamma * int(i64::from(g.b()));
    mass.into_iter()
        .enumerate()
        .map(|(z, p)| {
            let dev = (p * &scale - Rational::one()).abs();
            Instance::measured(
                format!("z_I={}", format_bits(z as u32, free.len())),
                hypothesis,
                dev,
                Bound::AtMostPow2(bound.clone()),
                note(&failed),
            )
        })
        .collect()
}

/// `Pr[g^I(X_I,Y_I) = z_I] ∈ (1 ± 2^{-γ·b})·2^{-|I|}` for every `z_I`, `I = free(ρ)`.
/// The measured value is `|Pr·2^{|I|} − 1|`.
pub fn check_multiplicative_uniformity(
    x: &BlockDist,
    y: &BlockDist,
    rho: &Restriction,
    g: &Gadget,
    gamma: &Rational,
    k: &LemmaConstants,
) -> LemmaReport {
    let mut r = LemmaReport::new("multiplicative-uniformity");
    r.record(true, || describe(x, y, Some(rho), g, gamma), || multiplicative_uniformity_instances(x, y, rho, g, gamma, k));
    r
}

pub(crate) fn uniform_marginals_hypothesis(x: &BlockDist, y: &BlockDist, rho: &Restriction, g: &Gadget, gamma: &Rational, k: &LemmaConstants) -> Vec<String> {
    let mut failed = Vec::new();
    standing(g, x.space.n, k, &mut failed);
    structured(x, y, rho, &uniformity_tau(k, gamma), g, &mut failed);
    failed
}

fn distance(p: &BTreeMap<u32, Rational>, d: &BlockDist) -> Rational {
    let mut keys: Vec<u32> = p.keys().copied().chain(d.dist.support().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let zero = Rational::zero();
    let sum: Rational = keys.iter().map(|k| (p.get(k).unwrap_or(&zero) - d.dist.mass(k)).abs()).sum();
    sum / int(2)
}

pub(crate) fn uniform_marginals_instances(
    x: &BlockDist,
    y: &BlockDist,
    rho: &Restriction,
    g: &Gadget,
    z: u32,
    gamma: &Rational,
    k: &LemmaConstants,
) -> Result<Vec<Instance>, VerifyError> {
    let space = x.space;
    let failed = uniform_marginals_hypothesis(x, y, rho, g, gamma, k);
    let mut fx: BTreeMap<u32, Rational> = BTreeMap::new();
    let mut fy: BTreeMap<u32, Rational> = BTreeMap::new();
    let mut count = 0i64;
    for &a in x.dist.support() {
        for &b in y.dist.support() {
            if g.lift(space, a, b) == z {
                *fx.entry(a).or_insert_with(Rational::zero) += Rational::one();
                *fy.entry(b).or_insert_with(Rational::zero) += Rational::one();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(VerifyError::EmptyFiber);
    }
    let total = int(count);
    for v in fx.values_mut().chain(fy.values_mut()) {
        *v /= &total;
    }
    let (dx, dy) = (distance(&fx, x), distance(&fy, y));
    let mut text = format!("SD(X,X')={}, SD(Y,Y')={}", format_rational(&dx), format_rational(&dy));
    if !failed.is_empty() {
        text = format!("{text}; {}", note(&failed));
    }
    let measured = if dx >= dy { dx } else { dy };
    Ok(alloc::vec![Instance::measured(
        format!("z={}", format_bits(z, space.n)),
        failed.is_empty(),
        measured,
        Bound::AtMostPow2(gamma * int(i64::from(g.b()))),
        text,
    )])
}

/// Both marginals of the uniform distribution on `G^{-1}(z) ∩ (supp X × supp Y)`
/// are `2^{-γ·b}`-close to `X` and `Y`. The measured value is the larger distance.
pub fn check_uniform_marginals(
    x: &BlockDist,
    y: &BlockDist,
    rho: &Restriction,
    g: &Gadget,
    z: u32,
    gamma: &Rational,
    k: &LemmaConstants,
) -> Result<LemmaReport, VerifyError> {
    uniform_marginals_instances(x, y, rho, g, z, gamma, k)?;
    let mut r = LemmaReport::new("uniform-marginals");
    r.record(
        true,
        || describe(x, y, Some(rho), g, gamma),
        || uniform_marginals_instances(x, y, rho, g, z, gamma, k).unwrap_or_default(),
    );
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn main_lemma_instances(
    x: &BlockDist,
    y: &BlockDist,
    rho: &Restriction,
    g: &Gadget,
    eps: &Rational,
    gamma: &Rational,
    k: &LemmaConstants,
    budget: ScanBudget,
) -> Result<Vec<Instance>, VerifyError> {
    let b = int(i64::from(g.b()));
    let mut failed = Vec::new();
    standing(g, x.space.n, k, &mut failed);
    let one = Rational::one();
    if !(gamma.is_positive() && *gamma <= one && eps.is_positive() && *eps <= one) {
        failed.push(String::from("0 < gamma, eps <= 1"));
    }
    if *eps < int(4) / &b {
        failed.push(String::from("eps >= 4/b"));
    }
    structured(x, y, rho, &main_lemma_tau(k, eps, gamma), g, &mut failed);

    let (xf, yf) = (free_marginal(x, rho), free_marginal(y, rho));
    let delta_y = max_density(&yf).lo;
    let p = dangerous_probability(&xf, &yf, g, &delta_y, eps, budget)?;
    let text = format!("delta_Y={}; {}", format_rational(&delta_y), note(&failed));
    Ok(alloc::vec![Instance::measured(String::from("dangerous"), failed.is_empty(), p, Bound::AtMostPow2(gamma * &b), text)])
}

/// `Pr[X_free(ρ) is dangerous for Y_free(ρ)] <= 2^{-γ·b}` under the lemma's structure hypothesis.
#[allow(clippy::too_many_arguments)]
pub fn check_main_lemma(
    x: &BlockDist,
    y: &BlockDist,
    rho: &Restriction,
    g: &Gadget,
    eps: &Rational,
    gamma: &Rational,
    k: &LemmaConstants,
    budget: ScanBudget,
) -> Result<LemmaReport, VerifyError> {
    main_lemma_instances(x, y, rho, g, eps, gamma, k, budget)?;
    let mut r = LemmaReport::new("main-lemma");
    r.record(
        true,
        || describe(x, y, Some(rho), g, gamma),
        || main_lemma_instances(x, y, rho, g, eps, gamma, k, budget).unwrap_or_default(),
    );
    Ok(r)
}

fn flags(x: u32, y: &BlockDist, g: &Gadget, eps: &Rational, c: &Rational, n: u32) -> (bool, bool, bool, bool, Rational) {
    let delta_y = max_density(y).lo;
    let v = classify(x, y, g, &DangerParams { delta_y: delta_y.clone(), eps: eps.clone(), c: c.clone(), n });
    (v.leaking.is_some(), v.sparsifying.is_some(), v.skewing.is_some(), v.biasing.is_some(), delta_y)
}

pub(crate) fn claim_instances(x: u32, y: &BlockDist, g: &Gadget, eps: &Rational, c: &Rational, n: u32) -> [Instance; 2] {
    let (leak, sparse, skew, bias, delta_y) = flags(x, y, g, eps, c, n);
    let dangerous = leak || sparse;
    let text = format!(
        "x={} delta_Y={} leaking={leak} sparsifying={sparse} skewing={skew} biasing={bias}",
        y.space.format_point(x),
        format_rational(&delta_y)
    );
    [
        Instance::implication(String::from("skewing"), !(dangerous && !leak) || skew, text.clone()),
        Instance::implication(String::from("biasing"), bias || !dangerous, text),
    ]
}

/// Dangerous and not leaking implies skewing; not biasing implies not dangerous.
/// `δ_Y` is the certified density of `Y`.
pub fn check_claims(x: u32, y: &BlockDist, g: &Gadget, eps: &Rational, c: &Rational, n: u32) -> [LemmaReport; 2] {
    let mut skew = LemmaReport::new("claim-skewing");
    let mut bias = LemmaReport::new("claim-biasing");
    let input = || format!("x={} g={} Y={:?} eps={}", x, gadget_name(g), y.dist.support().collect::<Vec<_>>(), format_rational(eps));
    skew.record(true, input, || alloc::vec![claim_instances(x, y, g, eps, c, n)[0].clone()]);
    bias.record(true, input, || alloc::vec![claim_instances(x, y, g, eps, c, n)[1].clone()]);
    [skew, bias]
}

pub(crate) fn describe(x: &BlockDist, y: &BlockDist, rho: Option<&Restriction>, g: &Gadget, gamma: &Rational) -> String {
    let sx: Vec<String> = x.dist.iter().map(|(v, p)| format!("{}:{}", x.space.format_point(*v), format_rational(p))).collect();
    let sy: Vec<String> = y.dist.iter().map(|(v, p)| format!("{}:{}", y.space.format_point(*v), format_rational(p))).collect();
    let rho = rho.map_or_else(String::new, |r| format!(" rho={r}"));
    format!("g={}{rho} gamma={} X=[{}] Y=[{}]", gadget_name(g), format_rational(gamma), sx.join(" "), sy.join(" "))
}

pub(crate) fn gadget_name(g: &Gadget) -> String {
    String::from(g.name().unwrap_or("custom"))
}
