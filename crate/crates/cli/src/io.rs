use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use replimit::genmetrics::{read_caption_records, CaptionRecord};
use replimit::image::{tensor_to_images, ToyImage};
use replimit::json::to_sorted_string_pretty;
use replimit::lexicon::{demo_lexicon, load_lexicon, Lexicon};
use replimit::replication::{features_from_bytes, toy_features, FeatureMatrix};
use replimit::tensor::Tensor;

/// Writes to `output`, or to standard output when it is `None`.
pub fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize>(output: Option<&Path>, value: &T) -> Result<()> {
    let mut text = to_sorted_string_pretty(value)?;
    text.push('\n');
    emit(output, text.as_bytes())
}

pub fn require_output<'a>(output: Option<&'a Path>, what: &str) -> Result<&'a Path> {
    output.ok_or_else(|| anyhow!("--output is required: {what} is binary"))
}

/// `<output>.config.json`, for outputs whose format leaves no room for the
/// resolved configuration.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

pub fn read_captions(path: &Path) -> Result<Vec<CaptionRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_caption_records(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn load_images(path: &Path) -> Result<Vec<ToyImage>> {
    let tensor = Tensor::load(path).with_context(|| format!("reading {}", path.display()))?;
    tensor_to_images(&tensor).with_context(|| format!("decoding images in {}", path.display()))
}

pub fn load_feature_file(path: &Path) -> Result<FeatureMatrix> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    features_from_bytes(&bytes).with_context(|| format!("decoding features in {}", path.display()))
}

pub fn image_features(images: &[ToyImage]) -> Result<FeatureMatrix> {
    let rows = images
        .iter()
        .map(toy_features)
        .collect::<replimit::Result<Vec<_>>>()?;
    Ok(FeatureMatrix::from_rows(&rows)?)
}

/// The lexicon and how it was chosen, for the resolved-config echo.
pub fn lexicon(path: Option<&Path>) -> Result<(Lexicon, String)> {
    match path {
        Some(p) => Ok((
            load_lexicon(p).with_context(|| format!("loading lexicon {}", p.display()))?,
            p.display().to_string(),
        )),
        None => Ok((demo_lexicon(), "<bundled demo lexicon>".to_string())),
    }
}

pub fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
