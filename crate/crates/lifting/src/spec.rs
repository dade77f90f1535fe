//! The corpus spec file read by `verify`.
//!
//! Gadgets and problems are named by builtin name or by a path relative to the
//! spec file. Rationals are strings such as `"1/4"`.

use std::path::Path;

use lifting_core::simulate::SimBudget;
use lifting_core::structure::ScanBudget;
use lifting_core::verify::{
    ClaimSpec, CorpusSpec, DensitySpec, ExtractorSpec, FourierSpec, KraftSpec, MainLemmaSpec, OracleSpec, SimulationSpec, StructuredSpec,
    VaziraniSpec, XorSpec,
};
use lifting_core::{Gadget, Rational};
use serde::{Deserialize, Serialize};

use crate::formats::{from_json, resolve_gadget, resolve_problem, FormatError, Rat};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSection {
    pub samples: u32,
    pub max_m: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaziraniSection {
    pub samples: u32,
    pub max_m: u32,
    pub eps: Vec<Rat>,
    pub t: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XorSection {
    pub gadget: String,
    pub m: Vec<u32>,
    /// Replaces the constant of the upper bound (used to plant a violation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_constant: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractorSection {
    pub gadgets: Vec<String>,
    pub exhaustive_max_b: u32,
    pub samples: u32,
    /// Values of λ and γ.
    pub grid: Vec<Rat>,
    pub etas: Vec<Rat>,
    pub max_width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KraftSection {
    pub max_depth: u32,
    pub assignments: u32,
    pub rational_stride: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub samples: u32,
    pub max_n: u32,
    pub max_b: u32,
    pub deltas: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSection {
    pub gadgets: Vec<String>,
    pub n: u32,
    pub supports: u32,
    pub eps: Vec<Rat>,
    pub c: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredSection {
    pub gadgets: Vec<String>,
    pub n: Vec<u32>,
    pub instances: u32,
    pub gammas: Vec<Rat>,
    pub etas: Vec<Rat>,
    pub c: Rat,
    pub h_uniformity: Rat,
    pub h_marginals: Rat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub max_free: u32,
    pub max_b: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MainLemmaSection {
    pub gadgets: Vec<String>,
    pub n: Vec<u32>,
    pub instances: u32,
    pub gammas: Vec<Rat>,
    pub eps: Vec<Rat>,
    pub etas: Vec<Rat>,
    pub c: Rat,
    pub h: Rat,
    pub scan: ScanSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub max_n: u32,
    pub max_b: u32,
    pub branches: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub gadget: String,
    pub problems: Vec<String>,
    pub eta: Rat,
    pub c: Rat,
    pub h: Rat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSection>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub problem: String,
    pub value: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub expectations: Vec<Expectation>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vazirani: Option<VaziraniSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xor_lemma: Vec<XorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<ExtractorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraft: Option<KraftSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claims: Option<ClaimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured: Option<StructuredSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main_lemma: Option<MainLemmaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

fn rats(v: &[Rat]) -> Vec<Rational> {
    v.iter().map(|r| r.0.clone()).collect()
}

fn wrap(v: &[Rational]) -> Vec<Rat> {
    v.iter().map(Rat::from).collect()
}

fn name_of(g: &Gadget) -> String {
    g.name().unwrap_or("unnamed").to_string()
}

impl SpecFile {
    /// Resolve names and paths (relative to `base`) into a corpus spec.
    pub fn resolve(&self, base: &Path) -> Result<CorpusSpec, FormatError> {
        let gadgets = |names: &[String]| names.iter().map(|g| resolve_gadget(g, base)).collect::<Result<Vec<_>, _>>();
        let mut spec = CorpusSpec { seed: self.seed, ..CorpusSpec::default() };
        spec.fourier = self.fourier.as_ref().map(|s| FourierSpec { samples: s.samples, max_m: s.max_m });
        spec.vazirani = self.vazirani.as_ref().map(|s| VaziraniSpec { samples: s.samples, max_m: s.max_m, eps: rats(&s.eps), t: s.t.clone() });
        for x in &self.xor_lemma {
            spec.xor_lemma.push(XorSpec {
                gadget: resolve_gadget(&x.gadget, base)?,
                m: x.m.clone(),
                upper_constant: x.upper_constant.as_ref().map(|r| r.0.clone()),
            });
        }
        if let Some(s) = &self.extractor {
            spec.extractor = Some(ExtractorSpec {
                gadgets: gadgets(&s.gadgets)?,
                exhaustive_max_b: s.exhaustive_max_b,
                samples: s.samples,
                grid: rats(&s.grid),
                etas: rats(&s.etas),
                max_width: s.max_width,
            });
        }
        spec.kraft =
            self.kraft.as_ref().map(|s| KraftSpec { max_depth: s.max_depth, assignments: s.assignments, rational_stride: s.rational_stride });
        spec.density =
            self.density.as_ref().map(|s| DensitySpec { samples: s.samples, max_n: s.max_n, max_b: s.max_b, deltas: rats(&s.deltas) });
        if let Some(s) = &self.claims {
            spec.claims = Some(ClaimSpec { gadgets: gadgets(&s.gadgets)?, n: s.n, supports: s.supports, eps: rats(&s.eps), c: s.c.0.clone() });
        }
        if let Some(s) = &self.structured {
            spec.structured = Some(StructuredSpec {
                gadgets: gadgets(&s.gadgets)?,
                n: s.n.clone(),
                instances: s.instances,
                gammas: rats(&s.gammas),
                etas: rats(&s.etas),
                c: s.c.0.clone(),
                h_uniformity: s.h_uniformity.0.clone(),
                h_marginals: s.h_marginals.0.clone(),
            });
        }
        if let Some(s) = &self.main_lemma {
            spec.main_lemma = Some(MainLemmaSpec {
                gadgets: gadgets(&s.gadgets)?,
                n: s.n.clone(),
                instances: s.instances,
                gammas: rats(&s.gammas),
                eps: rats(&s.eps),
                etas: rats(&s.etas),
                c: s.c.0.clone(),
                h: s.h.0.clone(),
                scan: ScanBudget { max_free: s.scan.max_free, max_b: s.scan.max_b },
            });
        }
        if let Some(s) = &self.simulation {
            spec.simulation = Some(SimulationSpec {
                gadget: resolve_gadget(&s.gadget, base)?,
                problems: s.problems.iter().map(|p| resolve_problem(p, base)).collect::<Result<_, _>>()?,
                eta: s.eta.0.clone(),
                c: s.c.0.clone(),
                h: s.h.0.clone(),
                budget: s.budget.map_or_else(SimBudget::default, |b| SimBudget { max_n: b.max_n, max_b: b.max_b, branches: b.branches }),
            });
        }
        if let Some(s) = &self.oracle {
            spec.oracle = Some(OracleSpec {
                expectations: s.expectations.iter().map(|e| Ok((resolve_problem(&e.problem, base)?, e.value))).collect::<Result<_, FormatError>>()?,
            });
        }
        Ok(spec)
    }

    /// The file form of a corpus spec; gadgets and problems are written by name.
    pub fn from_spec(spec: &CorpusSpec) -> SpecFile {
        let names = |gs: &[Gadget]| gs.iter().map(name_of).collect::<Vec<_>>();
        SpecFile {
            seed: spec.seed,
            fourier: spec.fourier.as_ref().map(|s| FourierSection { samples: s.samples, max_m: s.max_m }),
            vazirani: spec.vazirani.as_ref().map(|s| VaziraniSection { samples: s.samples, max_m: s.max_m, eps: wrap(&s.eps), t: s.t.clone() }),
            xor_lemma: spec
                .xor_lemma
                .iter()
                .map(|x| XorSection { gadget: name_of(&x.gadget), m: x.m.clone(), upper_constant: x.upper_constant.as_ref().map(Rat::from) })
                .collect(),
            extractor: spec.extractor.as_ref().map(|s| ExtractorSection {
                gadgets: names(&s.gadgets),
                exhaustive_max_b: s.exhaustive_max_b,
                samples: s.samples,
                grid: wrap(&s.grid),
                etas: wrap(&s.etas),
                max_width: s.max_width,
            }),
            kraft: spec.kraft.as_ref().map(|s| KraftSection { max_depth: s.max_depth, assignments: s.assignments, rational_stride: s.rational_stride }),
            density: spec.density.as_ref().map(|s| DensitySection { samples: s.samples, max_n: s.max_n, max_b: s.max_b, deltas: wrap(&s.deltas) }),
            claims: spec.claims.as_ref().map(|s| ClaimSection {
                gadgets: names(&s.gadgets),
                n: s.n,
                supports: s.supports,
                eps: wrap(&s.eps),
                c: Rat::from(&s.c),
            }),
            structured: spec.structured.as_ref().map(|s| StructuredSection {
                gadgets: names(&s.gadgets),
                n: s.n.clone(),
                instances: s.instances,
                gammas: wrap(&s.gammas),
                etas: wrap(&s.etas),
                c: Rat::from(&s.c),
                h_uniformity: Rat::from(&s.h_uniformity),
                h_marginals: Rat::from(&s.h_marginals),
            }),
            main_lemma: spec.main_lemma.as_ref().map(|s| MainLemmaSection {
                gadgets: names(&s.gadgets),
                n: s.n.clone(),
                instances: s.instances,
                gammas: wrap(&s.gammas),
                eps: wrap(&s.eps),
                etas: wrap(&s.etas),
                c: Rat::from(&s.c),
                h: Rat::from(&s.h),
                scan: ScanSection { max_free: s.scan.max_free, max_b: s.scan.max_b },
            }),
            simulation: spec.simulation.as_ref().map(|s| SimulationSection {
                gadget: name_of(&s.gadget),
                problems: s.problems.iter().map(|p| p.name.clone()).collect(),
                eta: Rat::from(&s.eta),
                c: Rat::from(&s.c),
                h: Rat::from(&s.h),
                budget: Some(BudgetSection { max_n: s.budget.max_n, max_b: s.budget.max_b, branches: s.budget.branches }),
            }),
            oracle: spec.oracle.as_ref().map(|s| OracleSection {
                expectations: s.expectations.iter().map(|(p, v)| Expectation { problem: p.name.clone(), value: *v }).collect(),
            }),
        }
    }
}

pub fn parse_spec(text: &str, base: &Path) -> Result<CorpusSpec, FormatError> {
    from_json::<SpecFile>(text)?.resolve(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::to_json;

    #[test]
    fn desk_spec_round_trips() {
        let desk = CorpusSpec::desk(7);
        let text = to_json(&SpecFile::from_spec(&desk));
        assert_eq!(parse_spec(&text, Path::new(".")).unwrap(), desk);
        let file: SpecFile = from_json(&text).unwrap();
        assert_eq!(to_json(&file), text);
    }

    #[test]
    fn empty_and_unknown() {
        assert_eq!(parse_spec("{}", Path::new(".")).unwrap(), CorpusSpec::default());
        assert!(parse_spec(r#"{"fourrier": {}}"#, Path::new(".")).is_err());
        let e = parse_spec(r#"{"xor_lemma": [{"gadget": "nand7", "m": [1]}]}"#, Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("nand7"), "{e}");
    }
}
