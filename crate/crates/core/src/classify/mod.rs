//! Document classifiers and the genre and popularity experiment pipelines.

mod knn;
mod linear;
mod pipeline;
mod predict;

pub use knn::{knn_classify, KnnIndex, DEFAULT_K};
pub use linear::{train_linear, LinearConfig, LinearData, LinearModel};
pub use pipeline::{
    aggregate, popularity_corpus, run_genre_pipeline, run_genre_version, run_popularity_genre,
    run_popularity_pipeline, run_version, version_seed, AggregateReport, GenreReport, LabelAudit,
    ModelSet, PipelineConfig, PopularityReport, PredictionRecord, Stage, VersionResult,
    GENRE_VECTOR, KNN, POPULARITY_VECTOR, SOFTMAX,
};
pub use predict::{label_vector_classify, label_vectors_classify, Prediction};
