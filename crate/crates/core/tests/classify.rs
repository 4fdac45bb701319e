use std::collections::BTreeMap;

use lyricvec::classify::{
    label_vector_classify, run_genre_pipeline, run_genre_version, run_popularity_pipeline,
    KnnIndex, PipelineConfig, Stage, GENRE_VECTOR, KNN, POPULARITY_VECTOR, SOFTMAX,
};
use lyricvec::embed::{cosine, train_doc2vec, Hyperparams, Matrix};
use lyricvec::seed;
use lyricvec::synth::{gen_synthetic, SynthConfig};
use proptest::prelude::*;
use rand::Rng;

/// Independent KNN: full sort by similarity (index order on ties), majority
/// vote, then larger summed similarity, then smaller label.
fn brute_force_knn(points: &[Vec<f32>], labels: &[String], q: &[f32], k: usize) -> String {
    let mut order: Vec<(f64, usize)> = points.iter().map(|p| cosine(q, p)).zip(0..).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut tally: BTreeMap<&String, (usize, f64)> = BTreeMap::new();
    for &(s, i) in &order[..k] {
        let e = tally.entry(&labels[i]).or_default();
        e.0 += 1;
        e.1 += s;
    }
    let mut best: Option<(&String, (usize, f64))> = None;
    for (l, t) in tally {
        let better = match best {
            None => true,
            Some((_, b)) => t.0 > b.0 || (t.0 == b.0 && t.1 > b.1),
        };
        if better {
            best = Some((l, t));
        }
    }
    best.unwrap().0.clone()
}

fn random_points(seed_value: u64, n: usize, dim: usize, classes: usize) -> (Vec<Vec<f32>>, Vec<String>) {
    let mut rng = seed::rng(seed_value);
    let points = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0f32)).collect())
        .collect();
    let labels = (0..n).map(|_| format!("l{}", rng.random_range(0..classes))).collect();
    (points, labels)
}

#[test]
fn knn_matches_brute_force_on_200_points() {
    let (points, labels) = random_points(5, 200, 6, 4);
    let index = KnnIndex::new(Matrix::from_rows(&points), labels.clone()).unwrap();
    let mut rng = seed::rng(6);
    for k in [1, 10, 25, 50] {
        for _ in 0..50 {
            let q: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0..1.0f32)).collect();
            assert_eq!(
                index.classify("q", &q, k).unwrap().predicted_label,
                brute_force_knn(&points, &labels, &q, k)
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn knn_oracle_equivalence(s in any::<u64>(), n in 1usize..=500, dim in 1usize..6, k_frac in 0.0f64..1.0) {
        let (points, labels) = random_points(s, n, dim, 3);
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let index = KnnIndex::new(Matrix::from_rows(&points), labels.clone()).unwrap();
        let q = points[0].iter().map(|x| x + 0.1).collect::<Vec<_>>();
        let a = index.classify("q", &q, k).unwrap();
        prop_assert_eq!(&a.predicted_label, &brute_force_knn(&points, &labels, &q, k));
        prop_assert_eq!(a, index.classify("q", &q, k).unwrap());
    }
}

fn synth(classes: usize, docs: usize, high_only: usize) -> lyricvec::corpus::Corpus {
    gen_synthetic(&SynthConfig {
        classes,
        docs_per_class: docs,
        vocab_per_class: 150,
        min_len: 40,
        max_len: 80,
        high_only_classes: high_only,
        ..Default::default()
    })
    .unwrap()
    .corpus
}

fn quick_config(versions: usize) -> PipelineConfig {
    PipelineConfig {
        versions,
        per_class: 40,
        hyper: Hyperparams {
            dim: 24,
            epochs: 8,
            infer_steps: 20,
            min_count: 1,
            subsample_t: 0.0,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn genre_pipeline_report_shape() {
    let corpus = synth(8, 50, 0);
    let report = run_genre_pipeline(&corpus, &quick_config(3)).unwrap();
    assert_eq!(report.versions.len(), 3);
    assert_eq!(report.aggregates.len(), 3);
    let models: Vec<&str> = report.aggregates.iter().map(|a| a.model.as_str()).collect();
    assert_eq!(models, vec![GENRE_VECTOR, KNN, SOFTMAX]);
    for a in &report.aggregates {
        assert_eq!(a.mean_per_class_f1.len(), 8);
        assert_eq!(a.std_per_class_f1.len(), 8);
        assert!(a.std_average_f1 >= 0.0);
        assert_eq!(a.confusion.total(), 3 * 8 * 8);
    }
    for v in &report.versions {
        assert_eq!(v.reports.len(), 3);
        for r in &v.reports {
            assert_eq!(r.per_class_f1.len(), 8);
            assert_eq!(r.confusion.total(), 64);
        }
        let preds = &v.predictions[GENRE_VECTOR];
        assert_eq!(preds.len(), 64);
        assert!(preds.iter().all(|p| p.scores.len() == 8));
        for (stage, n) in &v.label_reads {
            if *stage != Stage::Evaluate {
                assert_eq!(*n, 0, "{stage:?}");
            }
        }
        assert_eq!(v.label_reads[&Stage::Evaluate], 64);
    }
    let seeds: std::collections::BTreeSet<u64> = report.versions.iter().map(|v| v.seed).collect();
    assert_eq!(seeds.len(), 3);
}

#[test]
fn genre_version_is_deterministic() {
    let corpus = synth(3, 50, 0);
    let a = run_genre_version(&corpus, &quick_config(1), 0).unwrap().0;
    let b = run_genre_version(&corpus, &quick_config(1), 0).unwrap().0;
    assert_eq!(a, b);
}

#[test]
fn genre_pipeline_needs_two_classes() {
    let corpus = synth(1, 50, 0);
    assert!(run_genre_pipeline(&corpus, &quick_config(1)).is_err());
}

#[test]
fn popularity_skips_high_only_genres() {
    let corpus = synth(8, 60, 2);
    let report = run_popularity_pipeline(&corpus, &quick_config(1)).unwrap();
    assert_eq!(report.genres.len(), 6);
    assert_eq!(report.skipped, vec!["genre6", "genre7"]);
    for v in report.genres.values() {
        let r = v.report(POPULARITY_VECTOR).unwrap();
        assert_eq!(r.confusion.classes, vec!["high", "low"]);
        assert_eq!(r.per_class_f1.len(), 2);
    }
}

#[test]
fn popularity_without_usable_genre_is_error() {
    let corpus = synth(2, 30, 2);
    assert!(run_popularity_pipeline(&corpus, &quick_config(1)).is_err());
}

#[test]
fn label_vectors_classify_training_model() {
    let corpus = synth(3, 30, 0);
    let model = train_doc2vec(&corpus, &quick_config(1).hyper).unwrap().0;
    let labels = model.labels.as_ref().unwrap();
    let p = label_vector_classify(&model, labels.vectors.row(1)).unwrap();
    assert_eq!(p.predicted_label, labels.names[1]);
    assert!((p.scores[&labels.names[1]] - 1.0).abs() < 1e-6);
    assert!(label_vector_classify(&model, &vec![0.0; model.dim()]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn label_vector_argmax_scale_invariant(s in any::<u64>(), alpha in 1e-3f32..1e3) {
        let (points, _) = random_points(s, 5, 4, 5);
        let names: Vec<String> = (0..5).map(|i| format!("g{i}")).collect();
        let m = Matrix::from_rows(&points);
        let q: Vec<f32> = points[0].iter().rev().cloned().collect();
        let scaled: Vec<f32> = q.iter().map(|x| x * alpha).collect();
        let a = lyricvec::classify::label_vectors_classify("d", &names, &m, &q).unwrap();
        let b = lyricvec::classify::label_vectors_classify("d", &names, &m, &scaled).unwrap();
        prop_assert_eq!(a.predicted_label, b.predicted_label);
    }
}
