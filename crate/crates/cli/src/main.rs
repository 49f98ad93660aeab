//! `brownkit` wires the pipeline: ingest a corpus into a dataset file,
//! cluster it, train a class bigram language model and evaluate it.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input or
//! configuration.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use brownkit_core::algorithms::{run_allsame, run_brown, run_brown_nw, run_resort};
use brownkit_core::corpus::tokenize;
use brownkit_core::langmodel::DEFAULT_FLOOR;
use brownkit_core::{Algorithm, ClassLanguageModel, ClusteringResult, Dataset, Error};

#[derive(Parser)]
#[command(name = "brownkit", version, about = "Brown clustering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a text corpus and persist its dataset (vocabulary, tokens,
    /// bigram counts)
    Ingest {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Cluster a dataset into C word classes
    Cluster {
        dataset: PathBuf,
        /// brown, brown-nw, allsame or resort
        #[arg(long)]
        algo: Algorithm,
        /// number of clusters
        #[arg(short = 'C', long = "clusters")]
        clusters: usize,
        /// resort interval (resort only)
        #[arg(short = 'R', long = "resort-interval")]
        resort_interval: Option<usize>,
        /// worker threads; BROWNKIT_THREADS overrides, default machine
        /// parallelism
        #[arg(long)]
        threads: Option<usize>,
        /// clusters TSV output
        #[arg(short, long)]
        output: PathBuf,
        /// per-merge AMI progression CSV
        #[arg(long)]
        progression: PathBuf,
    },
    /// Train a class bigram language model from a clusters TSV and the
    /// dataset it was produced from
    TrainLm {
        clusters: PathBuf,
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a model on a test text: class prediction accuracy and
    /// perplexity without the Nth root
    Eval {
        model: PathBuf,
        test: PathBuf,
        /// probability floor applied inside perplexity
        #[arg(long)]
        floor: Option<f64>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 for anything a user can cause with bad files or flags, 1 for
/// violations of internal invariants.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::SelfMerge(_)
        | Error::NothingToMerge(_)
        | Error::StaleCandidate
        | Error::WordAlreadyIncluded(_)
        | Error::InconsistentMarginals(_, _) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest { corpus, output } => ingest(&corpus, &output),
        Command::Cluster {
            dataset,
            algo,
            clusters,
            resort_interval,
            threads,
            output,
            progression,
        } => cluster(
            &dataset,
            algo,
            clusters,
            resort_interval,
            threads,
            &output,
            &progression,
        ),
        Command::TrainLm {
            clusters,
            dataset,
            output,
        } => train_lm(&clusters, &dataset, &output),
        Command::Eval { model, test, floor } => eval(&model, &test, floor),
    }
}

fn ingest(corpus: &Path, output: &Path) -> Result<(), Error> {
    let text = fs::read_to_string(corpus)?;
    let ds = Dataset::from_text(&text, &corpus.to_string_lossy())?;
    ds.save(output)?;
    println!("tokens {}", ds.token_count());
    println!("vocabulary {}", ds.vocab.len());
    println!("bigrams {}", ds.bigrams.n_bigrams());
    Ok(())
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if let Ok(value) = std::env::var("BROWNKIT_THREADS") {
        let n: usize = value
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("BROWNKIT_THREADS={value:?} is not a thread count")))?;
        if n == 0 {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        return Ok(Some(n));
    }
    if flag == Some(0) {
        return Err(Error::InvalidConfig("thread count must be positive".into()));
    }
    Ok(flag)
}

fn cluster(
    dataset: &Path,
    algo: Algorithm,
    clusters: usize,
    resort_interval: Option<usize>,
    threads: Option<usize>,
    output: &Path,
    progression: &Path,
) -> Result<(), Error> {
    if let Some(n) = thread_count(threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    if algo != Algorithm::Resort && resort_interval.is_some() {
        return Err(Error::InvalidConfig(format!(
            "-R only applies to resort, not {algo}"
        )));
    }
    let ds = Dataset::load(dataset)?;
    let (result, log) = match algo {
        Algorithm::Brown => run_brown(&ds, clusters)?,
        Algorithm::BrownNw => run_brown_nw(&ds, clusters)?,
        Algorithm::Allsame => run_allsame(&ds, clusters)?,
        Algorithm::Resort => {
            let interval = resort_interval.ok_or_else(|| {
                Error::InvalidConfig("resort needs a resort interval (-R)".into())
            })?;
            run_resort(&ds, clusters, interval)?
        }
    };
    let mut tsv = BufWriter::new(File::create(output)?);
    result.write_clusters_tsv(&ds, &mut tsv)?;
    tsv.flush()?;
    let mut csv = BufWriter::new(File::create(progression)?);
    log.write_csv(&mut csv)?;
    csv.flush()?;
    println!("AMI {:.4}", result.final_ami);
    Ok(())
}

fn train_lm(clusters: &Path, dataset: &Path, output: &Path) -> Result<(), Error> {
    let ds = Dataset::load(dataset)?;
    let mut tsv = BufReader::new(File::open(clusters)?);
    let clustering = ClusteringResult::read_clusters_tsv(&ds, &mut tsv)?;
    let model = ClassLanguageModel::train(&clustering, &ds)?;
    model.save(output)?;
    println!("classes {}", model.num_classes());
    println!("vocabulary {}", model.vocab_len());
    Ok(())
}

fn eval(model: &Path, test: &Path, floor: Option<f64>) -> Result<(), Error> {
    let model = ClassLanguageModel::load(model)?;
    let floor = floor.unwrap_or(DEFAULT_FLOOR);
    let text = fs::read_to_string(test)?;
    let (stream, vocab) = tokenize(&text, &test.to_string_lossy())?;
    let report = model.evaluate(&stream, &vocab, floor)?;

    println!("CPA (%)          {:.2}", report.cpa * 100.0);
    println!("log2 Perplexity^N {}", report.log2_perplexity_n);
    match report.perplexity_n {
        Some(pp) => println!("Perplexity^N     {pp}"),
        None => println!("Perplexity^N     overflow (use the log2 value)"),
    }
    println!("scored           {}", report.scored);
    println!("skipped (OOV)    {}", report.skipped_oov);

    println!("cpa_percent={:.2}", report.cpa * 100.0);
    println!("log2_perplexity_n={}", report.log2_perplexity_n);
    if let Some(pp) = report.perplexity_n {
        println!("perplexity_n={pp}");
    }
    println!("scored={}", report.scored);
    println!("skipped_oov={}", report.skipped_oov);
    Ok(())
}
