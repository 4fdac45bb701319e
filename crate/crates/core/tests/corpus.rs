mod common;

use std::collections::BTreeSet;

use lyricvec::corpus::{
    dedup, read_corpus, sample_to_size, split, undersample, write_jsonl, Corpus, Document,
};
use lyricvec::seed;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn planted_duplicates_match_brute_force() {
    let planted = common::planted_dedup(900, 100, 0, 11);
    let (kept, report) = dedup(&planted.corpus, 0.8).unwrap();
    let removed: BTreeSet<String> = report.removed_ids.iter().cloned().collect();
    assert_eq!(removed, common::dedup_oracle(&planted.corpus, 0.8));
    assert_eq!(removed, planted.exact.iter().cloned().collect());
    assert_eq!(kept.len(), 900);
    for id in &planted.exact {
        assert!(report.kept_for.contains_key(id));
    }
}

#[test]
fn jsonl_round_trip_through_file() {
    let docs = vec![
        Document::new("a", "Hello [Chorus] world").with_label("rock").with_rating(4),
        Document::new("b", "Nothing else").with_label("pop"),
        Document::new("c", "no metadata"),
    ];
    let corpus = Corpus::new(docs, "mem").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let mut buf = Vec::new();
    write_jsonl(&corpus, &mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    let back = read_corpus(&path).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back.documents()[0].tokens, vec!["hello", "world"]);
    assert_eq!(back.documents()[0].rating, Some(4));
    assert_eq!(back.documents()[1].label.as_deref(), Some("pop"));
    assert_eq!(back.documents()[2].label, None);
}

/// Small corpus of near-copies so that random thresholds produce a mix of
/// merges and survivors.
fn mutated_corpus(seed_value: u64, n: usize) -> Corpus {
    let mut rng = seed::rng(seed_value);
    let bases: Vec<Vec<String>> = (0..4)
        .map(|_| (0..rng.random_range(0..20)).map(|_| format!("t{}", rng.random_range(0..30))).collect())
        .collect();
    let docs = (0..n)
        .map(|i| {
            let mut t = bases[rng.random_range(0..bases.len())].clone();
            for x in t.iter_mut() {
                if rng.random_bool(0.15) {
                    *x = format!("t{}", rng.random_range(0..30));
                }
            }
            Document::new(format!("d{i:03}"), t.join(" ")).tokenized()
        })
        .collect();
    Corpus::new(docs, "mutated").unwrap()
}

fn labeled(seed_value: u64, classes: usize, per: usize) -> Corpus {
    let mut rng = seed::rng(seed_value);
    let docs = (0..classes * per)
        .map(|i| {
            let words: Vec<String> = (0..rng.random_range(1..8)).map(|_| format!("w{}", rng.random_range(0..50))).collect();
            Document::new(format!("d{i}"), words.join(" "))
                .with_label(format!("c{}", i % classes))
                .tokenized()
        })
        .collect();
    Corpus::new(docs, "labeled").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dedup_matches_all_pairs_oracle(s in any::<u64>(), n in 1usize..60, t in 0.05f64..1.0) {
        let corpus = mutated_corpus(s, n);
        let (kept, report) = dedup(&corpus, t).unwrap();
        let removed: BTreeSet<String> = report.removed_ids.iter().cloned().collect();
        prop_assert_eq!(&removed, &common::dedup_oracle(&corpus, t));
        prop_assert_eq!(kept.len() + removed.len(), corpus.len());
    }

    #[test]
    fn dedup_is_idempotent(s in any::<u64>(), n in 1usize..40) {
        let corpus = mutated_corpus(s, n);
        let (once, _) = dedup(&corpus, 0.8).unwrap();
        let (twice, report) = dedup(&once, 0.8).unwrap();
        prop_assert!(report.removed_ids.is_empty());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn seeded_sampling_reproducible(s in any::<u64>(), classes in 2usize..5, per in 3usize..12) {
        let corpus = labeled(s, classes, per);
        let k = per - 1;
        prop_assert_eq!(undersample(&corpus, k, s).unwrap(), undersample(&corpus, k, s).unwrap());
        let v = split(&corpus, 0.8, s).unwrap();
        prop_assert_eq!(&v, &split(&corpus, 0.8, s).unwrap());
        let train: BTreeSet<&String> = v.train.iter().collect();
        prop_assert!(v.test.iter().all(|id| !train.contains(id)));
        prop_assert_eq!(v.train.len() + v.test.len(), corpus.len());
        let bytes = corpus.text_bytes() / 2;
        prop_assert_eq!(sample_to_size(&corpus, bytes, s).unwrap(), sample_to_size(&corpus, bytes, s).unwrap());
    }
}
