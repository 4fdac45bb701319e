//! Classification metrics and the word-analogy benchmark.

mod analogy;
mod asymmetry;
mod metrics;

pub use analogy::{
    analogy_eval, load_analogies, parse_analogies, AnalogyOptions, AnalogyReport, AnalogySet,
    Category, CategoryResult, Question,
};
pub use asymmetry::{asymmetry_report, AsymmetricPair, AsymmetryReport, ClassConfusions, Confusion};
pub use metrics::{
    class_scores, confusion, f1_scores, format_pct, macro_mean, ClassScores, ConfusionMatrix,
    EvalReport,
};
