use std::path::{Path, PathBuf};

use lifting::formats::{from_json, parse_problem, parse_protocol, read_text, to_json, ProblemFile, ProtocolFile};
use lifting::spec::{parse_spec, SpecFile};
use lifting_core::dtree::{brute_force_ddt, SearchProblem};
use lifting_core::protocol::canonical_protocol;
use lifting_core::verify::CorpusSpec;
use lifting_core::Gadget;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn spec(rel: &str) -> CorpusSpec {
    let p = data(rel);
    parse_spec(&read_text(&p).unwrap(), p.parent().unwrap()).unwrap()
}

#[test]
fn default_corpus_is_the_desk_corpus() {
    assert_eq!(spec("corpus/default.json"), CorpusSpec::desk(1));
    assert_eq!(spec("corpus/planted.json"), CorpusSpec::planted(1));
    assert_eq!(spec("corpus/empty.json"), CorpusSpec::default());
}

#[test]
fn spec_files_round_trip() {
    for f in ["corpus/default.json", "corpus/planted.json", "corpus/empty.json"] {
        let file: SpecFile = from_json(&read_text(&data(f)).unwrap()).unwrap();
        let text = to_json(&file);
        assert_eq!(from_json::<SpecFile>(&text).unwrap(), file, "{f}");
    }
}

#[test]
fn demo_protocol_is_canonical_parity() {
    let text = read_text(&data("protocols/demo.json")).unwrap();
    let p = parse_protocol(&text).unwrap();
    let tree = brute_force_ddt(&SearchProblem::parity(2)).unwrap().tree;
    let canonical = canonical_protocol(&tree, &Gadget::builtin("ip2").unwrap());
    assert_eq!(to_json(&ProtocolFile::from_protocol(&canonical)), text);
    assert_eq!(to_json(&ProtocolFile::from_protocol(&p)), text);
}

#[test]
fn problem_files_match_builtins_and_round_trip() {
    for name in ["parity2", "index2", "findone2"] {
        let text = read_text(&data(&format!("problems/{name}.json"))).unwrap();
        let p = parse_problem(&text).unwrap();
        assert_eq!(p, SearchProblem::builtin(name).unwrap(), "{name}");
        assert_eq!(to_json(&ProblemFile::from_problem(&p)), text, "{name}");
    }
    let m = parse_problem(&read_text(&data("problems/majority3.json")).unwrap()).unwrap();
    assert!((0..8u32).all(|z| m.allows(z, if z.count_ones() >= 2 { "1" } else { "0" })));
}
