use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lyricvec::classify::{LinearConfig, DEFAULT_K};
use lyricvec::corpus::{Format, DEFAULT_THRESHOLD};
use lyricvec::embed::{Hyperparams, Mode};
use lyricvec::synth::SynthConfig;

#[derive(Debug, Parser)]
#[command(name = "lyricvec", version, about = "Document, word and label embeddings for lyrics corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run directory for artifacts and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Flat `key = value` file of option defaults; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Skip stages whose recorded outputs match the current inputs and
    /// configuration.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = Hyperparams::default().dim)]
    pub dim: usize,
    #[arg(long, default_value_t = Hyperparams::default().window)]
    pub window: usize,
    #[arg(long, default_value_t = Hyperparams::default().negatives)]
    pub negatives: usize,
    #[arg(long, default_value_t = Hyperparams::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = Hyperparams::default().lr_initial)]
    pub lr_initial: f64,
    #[arg(long, default_value_t = Hyperparams::default().lr_final)]
    pub lr_final: f64,
    /// Frequent-word subsampling threshold; 0 disables it.
    #[arg(long, default_value_t = Hyperparams::default().subsample_t)]
    pub subsample_t: f64,
    #[arg(long, default_value_t = Hyperparams::default().min_count)]
    pub min_count: u64,
    /// skipgram, cbow, pvdm or pvdbow. The default depends on the command.
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long, default_value_t = Hyperparams::default().seed)]
    pub seed: u64,
    /// Training threads; capped by LYRICVEC_THREADS.
    #[arg(long, default_value_t = Hyperparams::default().workers)]
    pub workers: usize,
    #[arg(long, default_value_t = Hyperparams::default().infer_steps)]
    pub infer_steps: usize,
}

impl HyperArgs {
    pub fn to_hyper(&self, default_mode: Mode, max_workers: Option<usize>) -> Hyperparams {
        Hyperparams {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            lr_initial: self.lr_initial,
            lr_final: self.lr_final,
            subsample_t: self.subsample_t,
            min_count: self.min_count,
            mode: self.mode.unwrap_or(default_mode),
            seed: self.seed,
            workers: max_workers.map_or(self.workers, |m| self.workers.min(m).max(1)),
            infer_steps: self.infer_steps,
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub versions: usize,
    #[arg(long, default_value_t = 1000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// KNN neighbourhood size; 0 disables the KNN baseline.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Softmax-regression epochs; 0 disables the baseline.
    #[arg(long, default_value_t = LinearConfig::default().epochs)]
    pub softmax_epochs: usize,
    #[arg(long, default_value_t = LinearConfig::default().lr)]
    pub softmax_lr: f64,
    #[arg(long, default_value_t = LinearConfig::default().l2)]
    pub softmax_l2: f64,
    /// Re-infer training documents for the baselines instead of using their
    /// trained vectors.
    #[arg(long)]
    pub reinfer_train: bool,
    /// Popularity classes smaller than this skip the genre.
    #[arg(long, default_value_t = 2)]
    pub min_per_class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    LabelVector,
    Knn,
    Softmax,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a CSV or JSONL corpus and write it as normalized JSONL.
    Ingest {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        input: PathBuf,
        /// jsonl or csv; guessed from the extension when omitted.
        #[arg(long)]
        format: Option<Format>,
    },
    /// Remove near-duplicate documents by shingle Jaccard similarity.
    Dedup {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Draw a seeded subset: balanced per class, by text size, or
    /// binarized by rating.
    Sample {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Keep this many documents of every class.
        #[arg(long, conflicts_with_all = ["target_bytes", "popularity"])]
        per_class: Option<usize>,
        /// Keep random documents up to this many bytes of text.
        #[arg(long, conflicts_with = "popularity")]
        target_bytes: Option<usize>,
        /// Relabel by rating as low (1-3) or high (4-5) and balance.
        #[arg(long)]
        popularity: bool,
    },
    /// Train word vectors (skip-gram by default).
    TrainWords {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Train paragraph and label vectors (PV-DM by default).
    TrainDocs {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Infer vectors for documents with a frozen paragraph-vector model.
    Infer {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Gradient passes per document; the model's setting when omitted.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Infer and classify documents with a paragraph-vector model.
    Classify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::LabelVector)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Repeated balanced genre experiment with baselines and aggregate F1.
    GenrePipeline {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// One binary low/high popularity model per genre.
    PopularityPipeline {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Word-analogy accuracy of a model or a word2vec text file.
    Analogy {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, required_unless_present = "vectors", conflicts_with = "vectors")]
        model: Option<PathBuf>,
        /// word2vec text vectors instead of a model file.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long)]
        questions: PathBuf,
        /// Only the first N vocabulary entries take part.
        #[arg(long)]
        restrict_vocab: Option<usize>,
    },
    /// Generate a seeded synthetic labeled and rated corpus.
    GenSynthetic {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = SynthConfig::default().classes)]
        classes: usize,
        #[arg(long, default_value_t = SynthConfig::default().docs_per_class)]
        docs_per_class: usize,
        #[arg(long, default_value_t = SynthConfig::default().vocab_per_class)]
        vocab_per_class: usize,
        #[arg(long, default_value_t = SynthConfig::default().overlap_fraction)]
        overlap_fraction: f64,
        #[arg(long, default_value_t = SynthConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SynthConfig::default().min_len)]
        min_len: usize,
        #[arg(long, default_value_t = SynthConfig::default().max_len)]
        max_len: usize,
        #[arg(long, default_value_t = SynthConfig::default().marker_vocab)]
        marker_vocab: usize,
        #[arg(long, default_value_t = SynthConfig::default().marker_rate)]
        marker_rate: f64,
        #[arg(long, default_value_t = SynthConfig::default().high_only_classes)]
        high_only_classes: usize,
    },
    /// Summarize the report.json of an earlier run as plain text.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Run directory to summarize.
        #[arg(long)]
        from: PathBuf,
        /// Confusion ranks considered when flagging asymmetric pairs.
        #[arg(long, default_value_t = 2)]
        top_k: usize,
    },
}

impl Command {
    pub fn run_args(&self) -> &RunArgs {
        match self {
            Command::Ingest { run, .. }
            | Command::Dedup { run, .. }
            | Command::Sample { run, .. }
            | Command::TrainWords { run, .. }
            | Command::TrainDocs { run, .. }
            | Command::Infer { run, .. }
            | Command::Classify { run, .. }
            | Command::GenrePipeline { run, .. }
            | Command::PopularityPipeline { run, .. }
            | Command::Analogy { run, .. }
            | Command::GenSynthetic { run, .. }
            | Command::Report { run, .. } => run,
        }
    }
}
