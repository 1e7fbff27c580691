use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use replimit::diffusion::experiment::{
    default_fusion_set, derive_seed, encode_samples, run_experiment, tail_mean, train_model, ExperimentConfig,
    ModelSpec, RunOptions,
};
use replimit::diffusion::net::DEFAULT_HIDDEN;
use replimit::diffusion::schedule::DEFAULT_T_MAX;
use replimit::diffusion::strategy::{DEFAULT_GN_SIGMA, DEFAULT_MC_ALTERNATES};
use replimit::diffusion::{
    gen_synth_dataset, sample_batch, CaptionStyle, DiffusionModel, FusionConfig, FusionMode, MitigationStrategy,
    SynthSpec, TrainConfig,
};
use replimit::generalize::{batch_generalize, ChatClient, Level, MockChatClient, ResponseCache, DEFAULT_MODEL};
use replimit::genmetrics::{score_corpus, CaptionRecord};
use replimit::image::{images_to_tensor, ToyImage};
use replimit::json::to_sorted_string;
use replimit::lexicon::wordnet::import_wordnet_top_k;
use replimit::lexicon::{render_lexicon, DEFAULT_TOP_K};
use replimit::replication::{
    features_to_bytes, fit_gaussian, frechet_distance, replication_from_features, replication_score,
    similarity_scores, FeatureMatrix, DEFAULT_QUANTILE,
};

use crate::io;

pub struct Global {
    pub seed: Option<u64>,
    pub lexicon: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Global {
    fn output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

// ---- import-lexicon ----

#[derive(Args)]
pub struct ImportLexiconArgs {
    /// Directory holding data.noun and index.noun.
    #[arg(long)]
    wordnet: PathBuf,
    /// Number of most frequent nouns the global averages are taken over.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
}

pub fn import_lexicon(g: &Global, a: ImportLexiconArgs) -> Result<()> {
    let lexicon = import_wordnet_top_k(&a.wordnet, a.top_k)
        .with_context(|| format!("importing WordNet from {}", a.wordnet.display()))?;
    io::emit(g.output(), render_lexicon(&lexicon).as_bytes())
}

// ---- score ----

#[derive(Args)]
pub struct ScoreArgs {
    /// Caption JSONL, one {id, caption, image?} object per line.
    #[arg(long)]
    captions: PathBuf,
    /// Include one report object per caption.
    #[arg(long)]
    per_caption: bool,
}

pub fn score(g: &Global, a: ScoreArgs) -> Result<()> {
    let records = io::read_captions(&a.captions)?;
    let (lexicon, lexicon_name) = io::lexicon(g.lexicon.as_deref())?;
    let report = score_corpus(&records, &lexicon)?;
    let mut out = json!({
        "config": {
            "captions": a.captions.display().to_string(),
            "lexicon": lexicon_name,
            "per_caption": a.per_caption,
        },
        "summary": report.summary,
    });
    if a.per_caption {
        out["captions"] = serde_json::to_value(&report.captions)?;
    }
    io::emit_json(g.output(), &out)
}

// ---- generalize ----

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    General,
    FiveWord,
}

#[derive(Args)]
pub struct GeneralizeArgs {
    #[arg(long)]
    captions: PathBuf,
    #[arg(long, value_enum)]
    level: LevelArg,
    /// Use the deterministic offline generalizer instead of the endpoint.
    #[arg(long)]
    mock: bool,
    #[arg(long, default_value = DEFAULT_MODEL)]
    model: String,
    /// Append-only JSONL response cache.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Extra requests when a five-word reply runs long.
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
}

fn chat_client(mock: bool, lexicon: Option<&Path>) -> Result<Box<dyn ChatClient>> {
    if mock {
        return Ok(Box::new(MockChatClient::new(io::lexicon(lexicon)?.0)));
    }
    http_client()
}

#[cfg(feature = "http")]
fn http_client() -> Result<Box<dyn ChatClient>> {
    use replimit::generalize::{HttpChatClient, HttpConfig};
    Ok(Box::new(HttpChatClient::new(HttpConfig::from_env()?)))
}

#[cfg(not(feature = "http"))]
fn http_client() -> Result<Box<dyn ChatClient>> {
    bail!("built without HTTP support; pass --mock")
}

pub fn generalize(g: &Global, a: GeneralizeArgs) -> Result<()> {
    let level = match a.level {
        LevelArg::General => Level::General,
        LevelArg::FiveWord => Level::FiveWord,
    };
    let records = io::read_captions(&a.captions)?;
    let mut client = chat_client(a.mock, g.lexicon.as_deref())?;
    let mut cache = a
        .cache
        .as_deref()
        .map(ResponseCache::open)
        .transpose()
        .context("opening response cache")?;
    let model = if a.mock { "mock" } else { a.model.as_str() };
    let out = batch_generalize(&records, level, model, a.max_retries, client.as_mut(), cache.as_mut());
    let mut text = String::new();
    for record in &out {
        text.push_str(&to_sorted_string(record)?);
        text.push('\n');
    }
    io::emit(g.output(), text.as_bytes())?;
    if let Some(path) = g.output() {
        let config = json!({
            "captions": a.captions.display().to_string(),
            "level": level,
            "mock": a.mock,
            "model": model,
            "max_retries": a.max_retries,
            "cache": a.cache.as_ref().map(|p| p.display().to_string()),
            "lexicon": a.mock.then(|| io::lexicon(g.lexicon.as_deref()).map(|l| l.1)).transpose()?,
        });
        io::emit_json(Some(&io::sidecar_path(path)), &config)?;
    }
    Ok(())
}

// ---- features / repscore / fd ----

#[derive(Args)]
pub struct FeaturesArgs {
    /// Image tensor (RLTN, n x h x w).
    #[arg(long)]
    images: PathBuf,
}

pub fn features(g: &Global, a: FeaturesArgs) -> Result<()> {
    let out = io::require_output(g.output(), "the feature file")?;
    let features = io::image_features(&io::load_images(&a.images)?)?;
    io::emit(Some(out), &features_to_bytes(&features))
}

#[derive(Args)]
pub struct FeatureSource {
    /// Feature file (RLFT).
    #[arg(long)]
    train_features: Option<PathBuf>,
    #[arg(long)]
    gen_features: Option<PathBuf>,
    /// Image tensors; requires --toy-features.
    #[arg(long)]
    train_images: Option<PathBuf>,
    #[arg(long)]
    gen_images: Option<PathBuf>,
    /// Extract toy features from the image tensors.
    #[arg(long)]
    toy_features: bool,
}

fn load_side(features: Option<&Path>, images: Option<&Path>, toy: bool, name: &str) -> Result<(FeatureMatrix, String)> {
    match (features, images) {
        (Some(f), None) => Ok((io::load_feature_file(f)?, f.display().to_string())),
        (None, Some(i)) => {
            if !toy {
                bail!("--{name}-images needs --toy-features");
            }
            Ok((io::image_features(&io::load_images(i)?)?, i.display().to_string()))
        }
        (Some(_), Some(_)) => bail!("give either --{name}-features or --{name}-images, not both"),
        (None, None) => bail!("missing --{name}-features (or --{name}-images with --toy-features)"),
    }
}

fn check_dims(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<()> {
    if a.d() != b.d() {
        bail!("feature dimensions differ: {} vs {}", a.d(), b.d());
    }
    Ok(())
}

#[derive(Args)]
pub struct RepscoreArgs {
    #[command(flatten)]
    source: FeatureSource,
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    quantile: f64,
}

pub fn repscore(g: &Global, a: RepscoreArgs) -> Result<()> {
    let s = &a.source;
    let (train, train_name) = load_side(s.train_features.as_deref(), s.train_images.as_deref(), s.toy_features, "train")?;
    let (gen, gen_name) = load_side(s.gen_features.as_deref(), s.gen_images.as_deref(), s.toy_features, "gen")?;
    check_dims(&train, &gen)?;
    let result = if a.quantile == DEFAULT_QUANTILE {
        replication_from_features(&train, &gen)?
    } else {
        let mut r = replication_score(&similarity_scores(&train, &gen)?, a.quantile)?;
        r.n_train = train.n();
        r
    };
    io::emit_json(
        g.output(),
        &json!({
            "R": result.r,
            "n_gen": result.n_gen,
            "n_train": result.n_train,
            "quantile": result.quantile,
            "config": {"train": train_name, "gen": gen_name, "quantile": a.quantile, "toy_features": s.toy_features},
        }),
    )
}

#[derive(Args)]
pub struct FdArgs {
    /// First feature file (RLFT).
    #[arg(long)]
    a: PathBuf,
    /// Second feature file (RLFT).
    #[arg(long)]
    b: PathBuf,
}

pub fn fd(g: &Global, args: FdArgs) -> Result<()> {
    let a = io::load_feature_file(&args.a)?;
    let b = io::load_feature_file(&args.b)?;
    check_dims(&a, &b)?;
    let fd = frechet_distance(&fit_gaussian(&a)?, &fit_gaussian(&b)?)?;
    io::emit_json(
        g.output(),
        &json!({
            "fd": fd,
            "n_a": a.n(),
            "n_b": b.n(),
            "config": {"a": args.a.display().to_string(), "b": args.b.display().to_string()},
        }),
    )
}

// ---- synth ----

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Specific,
    General,
}

#[derive(Args)]
pub struct SynthArgs {
    /// JSON file with any of the synthetic-spec keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_base: Option<usize>,
    #[arg(long)]
    dup_factor: Option<usize>,
    #[arg(long)]
    dup_fraction: Option<f64>,
    #[arg(long, value_enum)]
    style: Option<StyleArg>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    n_base: Option<usize>,
    dup_factor: Option<usize>,
    dup_fraction: Option<f64>,
    caption_style: Option<CaptionStyle>,
    height: Option<usize>,
    width: Option<usize>,
    seed: Option<u64>,
}

pub const IMAGES_FILE: &str = "images.rltn";
pub const BASE_IMAGES_FILE: &str = "base_images.rltn";
pub const CAPTIONS_FILE: &str = "captions.jsonl";
pub const SYNTH_CONFIG_FILE: &str = "synth.json";

pub fn synth(g: &Global, a: SynthArgs) -> Result<()> {
    let dir = g
        .output()
        .ok_or_else(|| anyhow!("--output is required: synth writes a dataset directory"))?;
    let file: SynthFile = match &a.config {
        Some(p) => io::read_json_file(p)?,
        None => SynthFile::default(),
    };
    let spec = SynthSpec {
        n_base: a.n_base.or(file.n_base).unwrap_or(64),
        dup_factor: a.dup_factor.or(file.dup_factor).unwrap_or(8),
        dup_fraction: a.dup_fraction.or(file.dup_fraction).unwrap_or(0.5),
        caption_style: a
            .style
            .map(|s| match s {
                StyleArg::Specific => CaptionStyle::Specific,
                StyleArg::General => CaptionStyle::General,
            })
            .or(file.caption_style)
            .unwrap_or(CaptionStyle::Specific),
        height: a.height.or(file.height).unwrap_or(16),
        width: a.width.or(file.width).unwrap_or(16),
        seed: g.seed.or(file.seed).unwrap_or(0),
    };
    let data = gen_synth_dataset(&spec)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let images: Vec<ToyImage> = data.samples.iter().map(|s| s.image.clone()).collect();
    images_to_tensor(&images)?.save(dir.join(IMAGES_FILE))?;
    images_to_tensor(&data.base_images)?.save(dir.join(BASE_IMAGES_FILE))?;
    let mut captions = String::new();
    for (i, s) in data.samples.iter().enumerate() {
        let record = CaptionRecord {
            id: format!("{i:05}"),
            caption: s.caption.clone(),
            image: Some(i.to_string()),
        };
        captions.push_str(&to_sorted_string(&record)?);
        captions.push('\n');
    }
    std::fs::write(dir.join(CAPTIONS_FILE), captions)?;
    io::emit_json(
        Some(&dir.join(SYNTH_CONFIG_FILE)),
        &json!({"config": spec, "size": data.samples.len(), "n_base": data.base_images.len()}),
    )
}

// ---- train ----

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Token,
    Embedding,
}

#[derive(Args)]
pub struct TrainArgs {
    /// JSON file with any of the training keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory written by `synth`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Image tensor, used with --captions instead of --data.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    captions: Option<PathBuf>,
    /// none, dual_fusion, gaussian_noise, random_caption, caption_word_repeat or multiple_captions.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, value_enum)]
    fusion_mode: Option<ModeArg>,
    #[arg(long)]
    w_lat: Option<f64>,
    #[arg(long)]
    w_emb: Option<f64>,
    /// Fusion set; a synthetic one is generated when omitted.
    #[arg(long)]
    fusion_images: Option<PathBuf>,
    #[arg(long)]
    fusion_captions: Option<PathBuf>,
    #[arg(long)]
    fusion_size: Option<usize>,
    #[arg(long)]
    gn_sigma: Option<f64>,
    #[arg(long)]
    mc_alternates: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    pool: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    data: Option<PathBuf>,
    images: Option<PathBuf>,
    captions: Option<PathBuf>,
    strategy: Option<String>,
    fusion_mode: Option<ModeArg>,
    w_lat: Option<f64>,
    w_emb: Option<f64>,
    fusion_images: Option<PathBuf>,
    fusion_captions: Option<PathBuf>,
    fusion_size: Option<usize>,
    gn_sigma: Option<f64>,
    mc_alternates: Option<usize>,
    steps: Option<usize>,
    lr: Option<f64>,
    batch: Option<usize>,
    hidden: Option<usize>,
    t_max: Option<usize>,
    pool: Option<usize>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct TrainResolved {
    images: PathBuf,
    captions: PathBuf,
    strategy: MitigationStrategy,
    fusion_images: Option<PathBuf>,
    fusion_captions: Option<PathBuf>,
    fusion_size: usize,
    mc_alternates: usize,
    model: ModelSpec,
    train: TrainConfig,
    seed: u64,
}

/// Images paired with captions; a record's `image` field, when present,
/// is the row index into the tensor.
fn load_pairs(images: &Path, captions: &Path) -> Result<(Vec<ToyImage>, Vec<CaptionRecord>)> {
    let imgs = io::load_images(images)?;
    let records = io::read_captions(captions)?;
    let mut ordered = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let row = match &r.image {
            Some(s) => s
                .parse::<usize>()
                .with_context(|| format!("{}: record {:?}: image must be a row index", captions.display(), r.id))?,
            None => i,
        };
        let img = imgs
            .get(row)
            .ok_or_else(|| anyhow!("{}: record {:?} points at row {row}, tensor has {}", captions.display(), r.id, imgs.len()))?;
        ordered.push(img.clone());
    }
    Ok((ordered, records))
}

pub fn train(g: &Global, a: TrainArgs) -> Result<()> {
    let out = g
        .output()
        .ok_or_else(|| anyhow!("--output is required: train writes a model file"))?;
    let f: TrainFile = match &a.config {
        Some(p) => io::read_json_file(p)?,
        None => TrainFile::default(),
    };
    let data = a.data.or(f.data);
    let (images, captions) = match (a.images.or(f.images), a.captions.or(f.captions), data) {
        (Some(i), Some(c), _) => (i, c),
        (None, None, Some(d)) => (d.join(IMAGES_FILE), d.join(CAPTIONS_FILE)),
        _ => bail!("give --data DIR or both --images and --captions"),
    };
    let fusion_config = FusionConfig::new(
        match a.fusion_mode.or(f.fusion_mode).unwrap_or(ModeArg::Embedding) {
            ModeArg::Token => FusionMode::Token,
            ModeArg::Embedding => FusionMode::Embedding,
        },
        a.w_lat.or(f.w_lat).unwrap_or(0.1),
        a.w_emb.or(f.w_emb).unwrap_or(0.5),
    );
    let strategy_name = a.strategy.or(f.strategy).unwrap_or_else(|| "none".into());
    let strategy = MitigationStrategy::parse(
        &strategy_name,
        fusion_config,
        a.gn_sigma.or(f.gn_sigma).unwrap_or(DEFAULT_GN_SIGMA),
    )
    .context("strategy")?;
    let (imgs, records) = load_pairs(&images, &captions)?;
    let first = imgs.first().ok_or_else(|| anyhow!("{}: no training records", captions.display()))?;
    let defaults = TrainConfig::default();
    let resolved = TrainResolved {
        images,
        captions,
        strategy,
        fusion_images: a.fusion_images.or(f.fusion_images),
        fusion_captions: a.fusion_captions.or(f.fusion_captions),
        fusion_size: a.fusion_size.or(f.fusion_size).unwrap_or(64),
        mc_alternates: a.mc_alternates.or(f.mc_alternates).unwrap_or(DEFAULT_MC_ALTERNATES),
        model: ModelSpec {
            height: first.height(),
            width: first.width(),
            pool: a.pool.or(f.pool).unwrap_or(2),
            hidden: a.hidden.or(f.hidden).unwrap_or(DEFAULT_HIDDEN),
            t_max: a.t_max.or(f.t_max).unwrap_or(DEFAULT_T_MAX),
        },
        train: TrainConfig {
            steps: a.steps.or(f.steps).unwrap_or(defaults.steps),
            lr: a.lr.or(f.lr).unwrap_or(defaults.lr),
            batch: a.batch.or(f.batch).unwrap_or(defaults.batch),
        },
        seed: g.seed.or(f.seed).unwrap_or(0),
    };
    let alternates = if strategy == MitigationStrategy::MultipleCaptions {
        resolved.mc_alternates
    } else {
        0
    };
    let train_set = encode_samples(
        imgs.iter().zip(&records).map(|(i, r)| (i, r.caption.as_str())),
        resolved.model.pool,
        alternates,
    )?;
    let fusion = if !strategy.needs_fusion_set() {
        Vec::new()
    } else {
        match (&resolved.fusion_images, &resolved.fusion_captions) {
            (Some(i), Some(c)) => {
                let (fi, fr) = load_pairs(i, c)?;
                encode_samples(fi.iter().zip(&fr).map(|(i, r)| (i, r.caption.as_str())), resolved.model.pool, 0)?
            }
            (None, None) => default_fusion_set(resolved.fusion_size, &resolved.model, resolved.seed)?,
            _ => bail!("give both --fusion-images and --fusion-captions, or neither"),
        }
    };
    let (model, losses) = train_model(&resolved.model, &resolved.train, resolved.seed, &train_set, &fusion, &strategy)?;
    io::emit_json(
        Some(out),
        &json!({"config": resolved, "final_loss": tail_mean(&losses), "model": model}),
    )
}

// ---- sample ----

#[derive(Args)]
pub struct SampleArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Caption to condition on; repeatable.
    #[arg(long)]
    caption: Vec<String>,
    /// Caption JSONL to condition on, in file order.
    #[arg(long)]
    captions: Option<PathBuf>,
    /// Images per caption.
    #[arg(long, default_value_t = 1)]
    count: usize,
}

#[derive(Deserialize)]
struct ModelFile {
    model: DiffusionModel,
}

pub fn sample(g: &Global, a: SampleArgs) -> Result<()> {
    let out = io::require_output(g.output(), "the image tensor")?;
    let model = io::read_json_file::<ModelFile>(&a.model)?.model;
    let mut prompts = a.caption.clone();
    if let Some(p) = &a.captions {
        prompts.extend(io::read_captions(p)?.into_iter().map(|r| r.caption));
    }
    if prompts.is_empty() {
        bail!("give at least one --caption or --captions");
    }
    if a.count == 0 {
        bail!("--count must be at least 1");
    }
    let seed = g.seed.unwrap_or(0);
    let captions: Vec<String> = prompts
        .iter()
        .flat_map(|c| std::iter::repeat_n(c.clone(), a.count))
        .collect();
    let seeds: Vec<u64> = (0..captions.len() as u64).map(|i| derive_seed(seed, i)).collect();
    let images = sample_batch(&model, &captions, &seeds)?;
    images_to_tensor(&images)?.save(out)?;
    let summary = json!({
        "n": images.len(),
        "output": out.display().to_string(),
        "config": {
            "model": a.model.display().to_string(),
            "captions": captions,
            "count": a.count,
            "seed": seed,
        },
    });
    let mut text = serde_json::to_string_pretty(&replimit::json::to_sorted_value(&summary)?)?;
    text.push('\n');
    io::emit(None, text.as_bytes())
}

// ---- experiment ----

#[derive(Args)]
pub struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Write each run's generated images here as RLTN tensors.
    #[arg(long)]
    samples_dir: Option<PathBuf>,
    /// Record wall time per run (the report is then no longer byte-stable).
    #[arg(long)]
    timings: bool,
}

fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() || c == '.' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

pub fn experiment(g: &Global, a: ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut config =
        ExperimentConfig::from_json(&text).with_context(|| format!("invalid config {}", a.config.display()))?;
    if let Some(seed) = g.seed {
        config.seeds = vec![seed];
    }
    let run = run_experiment(
        &config,
        RunOptions {
            timings: a.timings,
            keep_samples: a.samples_dir.is_some(),
        },
    )?;
    if let Some(dir) = &a.samples_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, grid) in run.samples.iter().enumerate() {
            let name = format!("{i:02}_{}_seed{}.rltn", slug(&grid.label), grid.seed);
            images_to_tensor(&grid.images)?.save(dir.join(name))?;
        }
    }
    io::emit_json(g.output(), &run.report)
}
