mod common;

use lyricvec::corpus::{Corpus, Document};
use lyricvec::embed::{
    cosine, decode_model, encode_model, infer_doc_vector, load_model, read_word2vec_text,
    save_model, train_doc2vec, train_word2vec, write_word2vec_text, EmbeddingModel, Hyperparams,
    Inferrer, Matrix, Mode, WordVectors, FORMAT_VERSION,
};
use lyricvec::seed;
use lyricvec::synth::{gen_synthetic, SynthConfig};
use lyricvec::Error;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

fn small_synth(classes: usize, docs: usize, seed_value: u64) -> Corpus {
    gen_synthetic(&SynthConfig {
        classes,
        docs_per_class: docs,
        vocab_per_class: 120,
        min_len: 30,
        max_len: 60,
        seed: seed_value,
        ..Default::default()
    })
    .unwrap()
    .corpus
}

/// Subsampling is disabled: at these corpus sizes a 1e-4 threshold discards
/// most tokens and training barely moves.
fn small_hyper(mode: Mode) -> Hyperparams {
    Hyperparams {
        dim: 16,
        epochs: 5,
        min_count: 1,
        subsample_t: 0.0,
        mode,
        ..Default::default()
    }
}

/// Sentences over frames `l1 l2 _ r1 r2`; "cat" and "dog" fill the slot of
/// the same frames, every other filler word has frames of its own.
fn template_corpus() -> Corpus {
    let mut rng = seed::rng(42);
    let words: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
    let frame = |rng: &mut seed::Rng| -> Vec<String> {
        (0..4).map(|_| words.choose(rng).unwrap().clone()).collect()
    };
    let pet_frames: Vec<Vec<String>> = (0..8).map(|_| frame(&mut rng)).collect();
    let mut docs = Vec::new();
    for i in 0..1500 {
        let (f, slot) = if i % 3 == 0 {
            (
                pet_frames.choose(&mut rng).unwrap().clone(),
                if rng.random_bool(0.5) { "cat" } else { "dog" }.to_string(),
            )
        } else {
            (frame(&mut rng), words.choose(&mut rng).unwrap().clone())
        };
        let text = format!("{} {} {} {} {}", f[0], f[1], slot, f[2], f[3]);
        docs.push(Document::new(format!("s{i}"), text).tokenized());
    }
    Corpus::new(docs, "templates").unwrap()
}

#[test]
fn shared_contexts_give_similar_vectors() {
    let corpus = template_corpus();
    let hyper = Hyperparams {
        dim: 20,
        window: 2,
        epochs: 10,
        min_count: 1,
        subsample_t: 0.0,
        mode: Mode::SkipGram,
        ..Default::default()
    };
    let (model, _) = train_word2vec(&corpus, &hyper).unwrap();
    let cat = model.word_vector("cat").unwrap();
    let dog = model.word_vector("dog").unwrap();
    let pair = cosine(cat, dog);
    let mut others: Vec<f64> = model
        .vocab
        .tokens()
        .iter()
        .filter(|t| *t != "cat" && *t != "dog")
        .map(|t| cosine(cat, model.word_vector(t).unwrap()))
        .collect();
    others.sort_by(f64::total_cmp);
    let p95 = others[(others.len() as f64 * 0.95) as usize];
    assert!(pair > p95, "cos(cat, dog) = {pair}, 95th percentile {p95}");
}

#[test]
fn word_training_is_deterministic() {
    let corpus = small_synth(2, 30, 1);
    for mode in [Mode::SkipGram, Mode::Cbow] {
        let a = train_word2vec(&corpus, &small_hyper(mode)).unwrap().0;
        let b = train_word2vec(&corpus, &small_hyper(mode)).unwrap().0;
        assert_eq!(encode_model(&a).unwrap(), encode_model(&b).unwrap());
    }
}

#[test]
fn word_modes_rejected_by_doc_training_and_back() {
    let corpus = small_synth(2, 10, 1);
    assert!(train_doc2vec(&corpus, &small_hyper(Mode::SkipGram)).is_err());
    assert!(train_word2vec(&corpus, &small_hyper(Mode::Pvdm)).is_err());
}

#[test]
fn corpus_shorter_than_window_rejected() {
    let corpus = Corpus::new(vec![Document::new("a", "one two three").tokenized()], "t").unwrap();
    let err = train_word2vec(&corpus, &small_hyper(Mode::SkipGram)).unwrap_err();
    assert!(matches!(err, Error::CorpusTooSmall(_)));
}

#[test]
fn one_label_row_per_class() {
    let corpus = small_synth(8, 10, 2);
    let model = train_doc2vec(&corpus, &small_hyper(Mode::Pvdm)).unwrap().0;
    assert_eq!(model.labels.as_ref().unwrap().vectors.rows(), 8);
    assert_eq!(model.docs.as_ref().unwrap().vectors.rows(), 80);

    let docs: Vec<Document> = corpus
        .documents()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut d = d.clone();
            d.label = Some(if i % 2 == 0 { "high" } else { "low" }.into());
            d
        })
        .collect();
    let binary = Corpus::new(docs, "binary").unwrap();
    let model = train_doc2vec(&binary, &small_hyper(Mode::Pvdbow)).unwrap().0;
    assert_eq!(model.labels.unwrap().names, vec!["high", "low"]);
}

#[test]
fn unlabeled_document_rejected() {
    let mut docs = small_synth(2, 5, 3).into_documents();
    docs[3].label = None;
    let corpus = Corpus::new(docs, "t").unwrap();
    assert!(matches!(
        train_doc2vec(&corpus, &small_hyper(Mode::Pvdm)),
        Err(Error::Unlabeled(_))
    ));
}

#[test]
fn doc_training_loss_decreases() {
    let corpus = small_synth(4, 50, 4);
    assert_eq!(corpus.len(), 200);
    for mode in [Mode::Pvdm, Mode::Pvdbow] {
        let (_, stats) = train_doc2vec(&corpus, &small_hyper(mode)).unwrap();
        let first = stats.epoch_loss[0];
        let last = *stats.epoch_loss.last().unwrap();
        assert!(last < first, "{mode}: {first} -> {last}");
    }
}

#[test]
fn multiple_workers_train_finite_models() {
    let corpus = small_synth(2, 40, 5);
    let hyper = Hyperparams {
        workers: 3,
        ..small_hyper(Mode::Pvdm)
    };
    let (model, stats) = train_doc2vec(&corpus, &hyper).unwrap();
    assert!(model.is_finite());
    assert!(stats.epoch_loss.last().unwrap() < &stats.epoch_loss[0]);
}

fn trained_doc_model() -> (Corpus, EmbeddingModel) {
    let corpus = small_synth(4, 25, 6);
    let hyper = Hyperparams {
        dim: 24,
        epochs: 20,
        min_count: 1,
        subsample_t: 0.0,
        ..Default::default()
    };
    let model = train_doc2vec(&corpus, &hyper).unwrap().0;
    (corpus, model)
}

#[test]
fn zero_steps_returns_initialization() {
    let (corpus, model) = trained_doc_model();
    let v = infer_doc_vector(&model, &corpus.documents()[0].tokens, 0, 99).unwrap();
    let init: Matrix = Matrix::uniform(1, model.dim(), &mut seed::rng(99));
    assert_eq!(v, init.row(0));
}

#[test]
fn inference_is_deterministic_and_label_free() {
    let (corpus, model) = trained_doc_model();
    let tokens = &corpus.documents()[5].tokens;
    let a = infer_doc_vector(&model, tokens, 30, 3).unwrap();
    let b = infer_doc_vector(&model, tokens, 30, 3).unwrap();
    assert_eq!(a, b);

    let mut poisoned = model.clone();
    poisoned
        .labels
        .as_mut()
        .unwrap()
        .vectors
        .as_mut_slice()
        .fill(f32::NAN);
    let c = infer_doc_vector(&poisoned, tokens, 30, 3).unwrap();
    assert_eq!(a, c);
}

#[test]
fn all_oov_document_rejected() {
    let (_, model) = trained_doc_model();
    let tokens = vec!["zzzz".to_string(), "qqqq".to_string()];
    assert!(matches!(
        infer_doc_vector(&model, &tokens, 5, 1),
        Err(Error::AllOutOfVocabulary)
    ));
}

#[test]
fn inference_needs_doc_model() {
    let corpus = small_synth(2, 20, 1);
    let model = train_word2vec(&corpus, &small_hyper(Mode::SkipGram)).unwrap().0;
    assert!(Inferrer::new(&model).is_err());
}

#[test]
fn inferred_training_documents_retrieve_themselves() {
    let (corpus, model) = trained_doc_model();
    let docs = model.docs.as_ref().unwrap();
    let inferrer = Inferrer::new(&model).unwrap();
    let mut hits = 0;
    let checked = 40;
    for i in 0..checked {
        let v = inferrer
            .infer(&corpus.documents()[i].tokens, 50, 1000 + i as u64)
            .unwrap();
        let own = cosine(&v, docs.vectors.row(i));
        let mut others: Vec<f64> = (0..docs.vectors.rows())
            .filter(|&j| j != i)
            .map(|j| cosine(&v, docs.vectors.row(j)))
            .collect();
        others.sort_by(f64::total_cmp);
        if own > others[others.len() / 2] {
            hits += 1;
        }
    }
    assert_eq!(hits, checked, "{hits} of {checked} above the median");
}

#[test]
fn binary_round_trip() {
    let (_, model) = trained_doc_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.lvec");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(encode_model(&loaded).unwrap(), encode_model(&model).unwrap());

    let words = train_word2vec(&small_synth(2, 20, 1), &small_hyper(Mode::Cbow)).unwrap().0;
    let bytes = encode_model(&words).unwrap();
    assert_eq!(decode_model(&bytes).unwrap(), words);
}

#[test]
fn damaged_files_rejected() {
    let words = train_word2vec(&small_synth(1, 10, 1), &small_hyper(Mode::SkipGram)).unwrap().0;
    let bytes = encode_model(&words).unwrap();
    for cut in 0..bytes.len() {
        assert!(decode_model(&bytes[..cut]).is_err(), "prefix of {cut} bytes accepted");
    }
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(decode_model(&bad_magic).is_err());
    let mut bad_version = bytes.clone();
    bad_version[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    assert!(matches!(decode_model(&bad_version), Err(Error::Format(_))));
    let mut trailing = bytes;
    trailing.push(0);
    assert!(decode_model(&trailing).is_err());
}

#[test]
fn text_export_format() {
    let (_, model) = trained_doc_model();
    let wv = WordVectors::from_model(&model);
    let mut out = Vec::new();
    write_word2vec_text(&wv, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("{} {}", wv.len(), wv.dim()));
    for (line, token) in lines.zip(wv.tokens()) {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields[0], token);
        assert_eq!(fields.len(), wv.dim() + 1);
        for f in &fields[1..] {
            f.parse::<f32>().unwrap();
        }
    }
    let back = read_word2vec_text(std::io::Cursor::new(text)).unwrap();
    assert_eq!(back.vectors(), wv.vectors());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradients_match_finite_differences(s in any::<u64>(), m in 0usize..4) {
        let mode = [Mode::SkipGram, Mode::Cbow, Mode::Pvdm, Mode::Pvdbow][m];
        let err = common::grad_check_mode(mode, s);
        prop_assert!(err < 1e-4, "{mode}: {err}");
    }

    #[test]
    fn softmax_gradient_matches_finite_differences(s in any::<u64>()) {
        prop_assert!(common::grad_check_softmax(s) < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn final_epoch_objective_not_above_first(s in 0u64..1000, m in 0usize..4) {
        let mode = [Mode::SkipGram, Mode::Cbow, Mode::Pvdm, Mode::Pvdbow][m];
        let corpus = small_synth(3, 80, s);
        prop_assume!(corpus.total_tokens() >= 10_000);
        let hyper = small_hyper(mode);
        let stats = if mode.is_doc_mode() {
            train_doc2vec(&corpus, &hyper).unwrap().1
        } else {
            train_word2vec(&corpus, &hyper).unwrap().1
        };
        prop_assert!(stats.epoch_loss.last().unwrap() <= &stats.epoch_loss[0]);
    }
}
