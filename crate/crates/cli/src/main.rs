use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod io;

#[derive(Parser)]
#[command(name = "replimit", version, about = "Caption generality, replication scoring and dual-fusion training")]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Lexicon TSV (defaults to the small bundled demo lexicon).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Output file; standard output when omitted and the output is text.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a lexicon TSV from a WordNet database directory.
    ImportLexicon(commands::ImportLexiconArgs),
    /// Score caption generality for a JSONL corpus.
    Score(commands::ScoreArgs),
    /// Generalize captions through a chat endpoint or the offline mock.
    Generalize(commands::GeneralizeArgs),
    /// Extract toy features from an image tensor.
    Features(commands::FeaturesArgs),
    /// Replication score of generated features against training features.
    Repscore(commands::RepscoreArgs),
    /// Fréchet distance between two feature sets.
    Fd(commands::FdArgs),
    /// Generate a synthetic duplicated shape dataset.
    Synth(commands::SynthArgs),
    /// Train a toy diffusion model.
    Train(Box<commands::TrainArgs>),
    /// Sample images from a trained model.
    Sample(commands::SampleArgs),
    /// Run a replication experiment from a JSON config.
    Experiment(commands::ExperimentArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let global = commands::Global {
        seed: cli.seed,
        lexicon: cli.lexicon,
        output: cli.output,
    };
    let result = match cli.command {
        Command::ImportLexicon(a) => commands::import_lexicon(&global, a),
        Command::Score(a) => commands::score(&global, a),
        Command::Generalize(a) => commands::generalize(&global, a),
        Command::Features(a) => commands::features(&global, a),
        Command::Repscore(a) => commands::repscore(&global, a),
        Command::Fd(a) => commands::fd(&global, a),
        Command::Synth(a) => commands::synth(&global, a),
        Command::Train(a) => commands::train(&global, *a),
        Command::Sample(a) => commands::sample(&global, a),
        Command::Experiment(a) => commands::experiment(&global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
