use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_mips::dense::DenseIndexConfig;
use hybrid_mips::pipeline::{HybridIndexConfig, PruneSpec};
use hybrid_mips::{SynthConfig, ValueLaw};

#[derive(Debug, Parser)]
#[command(name = "hybrid-mips", version, about = "Hybrid sparse + dense maximum inner product search")]
pub struct Cli {
    /// Worker threads for parallel stages; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub output_format: OutputFormat,

    /// key=value file; each key is a long flag name. Flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic hybrid dataset and query set.
    Gen(GenArgs),
    /// Turn "user item rating" triplets into a hybrid dataset via truncated SVD.
    PrepRatings(PrepArgs),
    /// Build a hybrid index from a dataset file.
    Build(BuildArgs),
    /// Search a built index; prints id,score lines.
    Search(SearchArgs),
    /// Compare the hybrid index against the baseline methods.
    Bench(BenchArgs),
    /// Monte-Carlo checks of the accuracy bounds.
    Verify(VerifyArgs),
    /// Per-dimension accumulator cache-line cost, model and measurement.
    Cost(CostArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawKind {
    Uniform,
    PowerTail,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub n_queries: usize,
    #[arg(long, default_value_t = 10_000)]
    pub d_sparse: usize,
    #[arg(long, default_value_t = 64)]
    pub d_dense: usize,
    #[arg(long, default_value_t = 1.0)]
    pub zipf_alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub nnz_scale: f64,
    /// Query activity exponent; queries follow the data law when unset.
    #[arg(long)]
    pub query_zipf_alpha: Option<f64>,
    #[arg(long)]
    pub query_nnz_scale: Option<f64>,
    #[arg(long, value_enum, default_value_t = LawKind::Uniform)]
    pub value_law: LawKind,
    #[arg(long, default_value_t = 1.0)]
    pub value_max: f32,
    #[arg(long, default_value_t = 2.0)]
    pub value_shape: f32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SynthArgs {
    pub fn to_config(&self) -> SynthConfig {
        let custom_query = self.query_zipf_alpha.is_some() || self.query_nnz_scale.is_some();
        SynthConfig {
            n: self.n,
            n_queries: self.n_queries,
            d_sparse: self.d_sparse,
            d_dense: self.d_dense,
            zipf_alpha: self.zipf_alpha,
            nnz_scale: self.nnz_scale,
            query_same_law: !custom_query,
            query_zipf_alpha: self.query_zipf_alpha.unwrap_or(self.zipf_alpha),
            query_nnz_scale: self.query_nnz_scale.unwrap_or(self.nnz_scale),
            value_law: match self.value_law {
                LawKind::Uniform => ValueLaw::Uniform { max: self.value_max },
                LawKind::PowerTail => ValueLaw::PowerTail {
                    max: self.value_max,
                    shape: self.value_shape,
                },
            },
            seed: self.seed,
            ..SynthConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Dataset output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Query set output file.
    #[arg(long)]
    pub queries_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Ratings text file, one "user item rating" triplet per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub rank: usize,
    /// Dense-part multiplier; by default it equalizes mean dense and sparse norms.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Users held out as queries.
    #[arg(long, default_value_t = 0)]
    pub n_queries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub power_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub queries_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    /// Postings kept per dimension in the sparse data index.
    #[arg(long, default_value_t = 128)]
    pub top_t: usize,
    /// Smaller magnitudes are discarded instead of moved to the residual.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f32,
    /// Index every sparse entry; no residual.
    #[arg(long)]
    pub keep_all: bool,
    #[arg(long, default_value_t = 2)]
    pub subspace_width: usize,
    /// Codewords per subspace (16 or 256).
    #[arg(long, default_value_t = 16)]
    pub codewords: usize,
    #[arg(long, default_value_t = 25)]
    pub kmeans_iters: usize,
    #[arg(long)]
    pub no_whitening: bool,
    #[arg(long)]
    pub no_residual: bool,
    #[arg(long, default_value_t = 100_000)]
    pub train_sample: usize,
    #[arg(long, default_value_t = 0)]
    pub train_seed: u64,
    /// Final stage rescoring with exact inner products; stores the raw data.
    #[arg(long)]
    pub exact_rerank: bool,
    #[arg(long, default_value_t = 1.0)]
    pub sparse_weight: f32,
    #[arg(long, default_value_t = 1.0)]
    pub dense_weight: f32,
}

impl IndexArgs {
    pub fn to_config(&self) -> HybridIndexConfig {
        HybridIndexConfig {
            alpha: self.alpha,
            beta: self.beta,
            prune: if self.keep_all {
                PruneSpec::KeepAll
            } else {
                PruneSpec::TopT {
                    top_t: self.top_t,
                    epsilon: self.epsilon,
                }
            },
            dense: DenseIndexConfig {
                subspace_width: self.subspace_width,
                l: self.codewords,
                kmeans_iters: self.kmeans_iters,
                whitening: !self.no_whitening,
                residual: !self.no_residual,
                train_sample: self.train_sample,
                seed: self.train_seed,
            },
            exact_final_rerank: self.exact_rerank,
            sparse_weight: self.sparse_weight,
            dense_weight: self.dense_weight,
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub index: IndexArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Query dataset file.
    #[arg(long)]
    pub queries: PathBuf,
    /// Search only this row of the query file.
    #[arg(long)]
    pub query: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub h: usize,
    /// Override the stored overfetch factor.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub h: usize,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Comma-separated method names; the full roster when unset.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, default_value = "dataset")]
    pub dataset_name: String,
    /// Blank the timing columns so output is byte-for-byte reproducible.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub index: IndexArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Prop1,
    Prop2,
    Prop3,
    Prop4,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Queries checked by the prop4 suite.
    #[arg(long, default_value_t = 100)]
    pub gap_queries: usize,
    /// Training points for the prop1 suite.
    #[arg(long, default_value_t = 50_000)]
    pub kmeans_n: usize,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Accumulator slots per cache-line.
    #[arg(long, default_value_t = 16)]
    pub line_capacity: usize,
    /// Generate data and report measured counts next to the model.
    #[arg(long)]
    pub measure: bool,
    /// Per-dimension rows to print.
    #[arg(long, default_value_t = 100)]
    pub dims: usize,
}
