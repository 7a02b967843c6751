//! Command-line front end for the staged mentorship-analysis pipeline.
//!
//! Each subcommand reads the previous stage's artifact directory and writes
//! its own, with content-digest manifests chaining the stages together.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use mentorlens::analysis::{Grouping, IndependentVariable};
use mentorlens::corpus::CorpusConfig;
use mentorlens::dyads::DyadParams;
use mentorlens::pipeline::{
    stage_analyze, stage_dyads, stage_ingest, stage_match, stage_metrics, stage_profiles,
    stage_report, stage_synth, AnalysisKind, AnalyzeOptions, MatchOptions, ProfileStageConfig,
};
use mentorlens::report::significance_stars;
use mentorlens::synth::SynthConfig;

#[derive(Parser)]
#[command(
    name = "mentorlens",
    version,
    about = "Mentorship analytics over publication corpora",
    long_about = "Staged pipeline: ingest a corpus, derive scholar profiles, extract \
mentor-protege dyads, compute per-protege metrics, and estimate effects with \
coarsened exact matching. See docs/FORMATS.md for file formats."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with optional planted effects
    Synth(SynthArgs),
    /// Load and validate a corpus, build indices, write the canonical form
    Ingest(IngestArgs),
    /// Derive per-scholar career profiles
    Profiles(ProfilesArgs),
    /// Extract mentor-protege dyads under the eligibility rules
    Dyads(DyadsArgs),
    /// Compute per-protege metrics and assemble matching units
    Metrics(MetricsArgs),
    /// Run a single adjacent-quantile matching for inspection
    Match(MatchArgs),
    /// Run a full experiment (quintile, grouped, or gender analyses)
    Analyze(AnalyzeArgs),
    /// Render CSV tables and SVG charts from an analysis directory
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// TOML file overriding the default generator config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Scholar-count override
    #[arg(long)]
    scholars: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Line-delimited publication records (JSON per line)
    #[arg(long)]
    publications: PathBuf,
    /// Citation edges, one `citing<TAB>cited` per line
    #[arg(long)]
    citations: PathBuf,
    /// TOML corpus config (horizon_year, min_year, max_malformed_fraction)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProfilesArgs {
    /// Ingest stage directory
    #[arg(long)]
    corpus: PathBuf,
    /// `scholar_id,gender,confidence` lines
    #[arg(long)]
    gender: PathBuf,
    /// `affiliation_id,rank` lines (blank rank = unranked)
    #[arg(long)]
    ranks: PathBuf,
    /// `keyword,discipline` lines
    #[arg(long)]
    taxonomy: PathBuf,
    /// Gender attributions below this confidence are treated as unknown
    #[arg(long, default_value_t = 0.95)]
    gender_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DyadsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    /// TOML dyad params (junior_max, gap_years, region_allow,
    /// admitted_disciplines)
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long)]
    dyads: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum IvArg {
    Bigshot,
    Hub,
}

impl From<IvArg> for IndependentVariable {
    fn from(iv: IvArg) -> Self {
        match iv {
            IvArg::Bigshot => IndependentVariable::BigShot,
            IvArg::Hub => IndependentVariable::Hub,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupByArg {
    None,
    Year,
    MentorAge,
    MentorCount,
    Rank,
    Gender,
    Discipline,
}

impl From<GroupByArg> for Grouping {
    fn from(g: GroupByArg) -> Self {
        match g {
            GroupByArg::None => Grouping::None,
            GroupByArg::Year => Grouping::YearBin,
            GroupByArg::MentorAge => Grouping::MentorAgeBin,
            GroupByArg::MentorCount => Grouping::MentorCountBin,
            GroupByArg::Rank => Grouping::RankBin,
            GroupByArg::Gender => Grouping::Gender,
            GroupByArg::Discipline => Grouping::Discipline,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalysisArg {
    Quintiles,
    FemaleMentors,
    MentorGain,
}

#[derive(Args)]
struct MatchArgs {
    /// Metrics stage directory
    #[arg(long)]
    units: PathBuf,
    #[arg(long, value_enum)]
    iv: IvArg,
    /// Adjacent pair to match (1 = lowest two quantile groups)
    #[arg(long, default_value_t = 1)]
    pair: usize,
    #[arg(long)]
    weighted: bool,
    /// JSON coarsening-spec override
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Metrics stage directory
    #[arg(long)]
    units: PathBuf,
    #[arg(long, value_enum, default_value = "bigshot")]
    iv: IvArg,
    #[arg(long = "group-by", value_enum, default_value = "none")]
    group_by: GroupByArg,
    /// Apply matching weights to the control-group mean
    #[arg(long)]
    weighted: bool,
    /// JSON coarsening-spec override
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// Which experiment family to run
    #[arg(long, value_enum, default_value = "quintiles")]
    analysis: AnalysisArg,
    /// Matched sides smaller than this are flagged
    #[arg(long, default_value_t = 20)]
    min_group: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Analyze (or match) stage directory
    #[arg(long)]
    analysis: PathBuf,
    /// Synth stage directory with ground_truth.json, for estimate scoring
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &PathBuf) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => {
            let mut config: SynthConfig = match &args.config {
                Some(path) => read_toml(path)?,
                None => SynthConfig::default(),
            };
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(scholars) = args.scholars {
                config.n_scholars = scholars;
            }
            stage_synth(&config, &args.out)?;
            eprintln!("synth: wrote corpus to {}", args.out.display());
        }
        Command::Ingest(args) => {
            let config: CorpusConfig = match &args.config {
                Some(path) => read_toml(path)?,
                None => CorpusConfig::default(),
            };
            let corpus = stage_ingest(&args.publications, &args.citations, config, &args.out)?;
            let report = corpus.report();
            eprintln!(
                "ingest: {} publications, {} edges ({} malformed lines, {} dangling edges dropped)",
                corpus.n_papers(),
                corpus.n_edges(),
                report.publications_malformed + report.citation_malformed,
                report.dangling_edges_dropped,
            );
        }
        Command::Profiles(args) => {
            stage_profiles(
                &args.corpus,
                &args.gender,
                &args.ranks,
                &args.taxonomy,
                ProfileStageConfig {
                    gender_confidence_threshold: args.gender_threshold,
                },
                &args.out,
            )?;
            eprintln!("profiles: wrote {}", args.out.display());
        }
        Command::Dyads(args) => {
            let params: DyadParams = match &args.params {
                Some(path) => read_toml(path)?,
                None => DyadParams::default(),
            };
            stage_dyads(&args.corpus, &args.profiles, params, &args.out)?;
            eprintln!("dyads: wrote {}", args.out.display());
        }
        Command::Metrics(args) => {
            stage_metrics(&args.corpus, &args.profiles, &args.dyads, &args.out)?;
            eprintln!("metrics: wrote {}", args.out.display());
        }
        Command::Match(args) => {
            let options = MatchOptions {
                iv: args.iv.into(),
                pair: args.pair,
                weighted: args.weighted,
                spec_path: args.spec.clone(),
            };
            let row = stage_match(&args.units, &options, &args.out)?;
            eprintln!(
                "match {}: |T'|={} |C'|={} delta={} p={}",
                row.label,
                row.n_matched_treated,
                row.n_matched_control,
                row.delta_pct
                    .map(|d| format!("{d:.2}%"))
                    .unwrap_or_else(|| "n/a".into()),
                row.p_t
                    .map(|p| format!("{p:.3e}"))
                    .unwrap_or_else(|| "n/a".into()),
            );
        }
        Command::Analyze(args) => {
            let options = AnalyzeOptions {
                kind: match args.analysis {
                    AnalysisArg::Quintiles => AnalysisKind::Quintiles,
                    AnalysisArg::FemaleMentors => AnalysisKind::FemaleMentors,
                    AnalysisArg::MentorGain => AnalysisKind::MentorGain,
                },
                iv: args.iv.into(),
                grouping: args.group_by.into(),
                weighted: args.weighted,
                min_group: args.min_group,
                spec_path: args.spec.clone(),
                jobs: args.jobs,
            };
            let output = stage_analyze(&args.units, &options, &args.out)?;
            for row in &output.comparisons {
                let stars = row.p_t.map(significance_stars).unwrap_or("");
                eprintln!(
                    "{}{}: delta={}{}",
                    row.group
                        .as_deref()
                        .map(|g| format!("[{g}] "))
                        .unwrap_or_default(),
                    row.label,
                    row.delta_pct
                        .map(|d| format!("{d:.2}%"))
                        .unwrap_or_else(|| "n/a".into()),
                    if stars.is_empty() {
                        String::new()
                    } else {
                        format!(" {stars}")
                    },
                );
            }
        }
        Command::Report(args) => {
            stage_report(&args.analysis, args.ground_truth.as_deref(), &args.out)?;
            eprintln!("report: wrote {}", args.out.display());
        }
    }
    Ok(())
}
