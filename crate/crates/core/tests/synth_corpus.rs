mod common;

use std::collections::BTreeMap;
use std::path::Path;

use tenk_core::synth::{generate_corpus, validate_corpus, DEFAULT_SEED};

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn committed_corpus_regenerates_byte_for_byte() {
    let work = tempfile::tempdir().unwrap();
    generate_corpus(work.path(), DEFAULT_SEED).unwrap();
    let fresh = tree(work.path());
    let committed = tree(&common::corpus());
    assert_eq!(fresh.keys().collect::<Vec<_>>(), committed.keys().collect::<Vec<_>>());
    for (name, bytes) in &fresh {
        assert!(bytes == &committed[name], "{name} differs from the committed fixture");
    }
}

#[test]
fn committed_corpus_validates() {
    validate_corpus(&common::corpus()).unwrap();
}

#[test]
fn other_seeds_change_content_not_shape() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = generate_corpus(a.path(), 1).unwrap();
    let sb = generate_corpus(b.path(), 2).unwrap();
    assert_eq!(sa.companies, sb.companies);
    assert_eq!(sa.filings.len(), sb.filings.len());
    assert_ne!(tree(a.path()), tree(b.path()));
    validate_corpus(a.path()).unwrap();
}
