//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export has a plain Rust twin returning [`replimit::Result`] so the
//! logic is testable without a JS host.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use replimit::annotate::annotate;
use replimit::diffusion::train::{from_diffusion_space, to_diffusion_space};
use replimit::diffusion::{
    forward_sample, fuse_latents, gen_fusion_dataset, gen_synth_dataset, make_schedule,
    visual_decode, visual_encode, CaptionStyle, SynthSpec,
};
use replimit::genmetrics::score_annotated;
use replimit::lexicon::demo_lexicon;
use replimit::replication::{nearest_rank, replication_score, SimilarityDistribution};
use replimit::{Error, Result};

pub const SIDE: usize = 16;
pub const POOL: usize = 2;
pub const T_MAX: usize = 100;
const N_BASE: usize = 8;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Generality report and per-token tags for one caption, scored against the
/// bundled demo lexicon.
pub fn score_json(caption: &str) -> Result<Value> {
    let lexicon = demo_lexicon();
    let ann = annotate(caption, &lexicon);
    if ann.n_word == 0 {
        return Err(Error::EmptyCaption);
    }
    let report = score_annotated(&ann, &lexicon)?;
    let tokens: Vec<Value> = ann
        .tokens
        .iter()
        .map(|t| {
            json!({
                "text": t.text,
                "lemma": t.lemma,
                "pos": t.pos,
                "entity": t.is_entity,
                "numeric": t.is_numeric,
                "verb_form": t.verb_form,
            })
        })
        .collect();
    Ok(json!({ "report": report, "tokens": tokens }))
}

#[wasm_bindgen(js_name = scoreCaption)]
pub fn score_caption(caption: &str) -> std::result::Result<String, JsError> {
    score_json(caption).map(|v| v.to_string()).map_err(js)
}

/// Three `SIDE x SIDE` images, row-major and concatenated: training image
/// `base`, its latent fused with fusion image `fusion` at `w_lat`, and that
/// fused latent pushed through the forward process to step `t`.
pub fn fusion_frames(base: usize, fusion: usize, w_lat: f64, t: usize, seed: u64) -> Result<Vec<f32>> {
    let spec = SynthSpec {
        n_base: N_BASE,
        dup_factor: 1,
        dup_fraction: 0.0,
        caption_style: CaptionStyle::Specific,
        height: SIDE,
        width: SIDE,
        seed,
    };
    let data = gen_synth_dataset(&spec)?;
    let fusion_set = gen_fusion_dataset(N_BASE, SIDE, SIDE, seed ^ 0x9e37_79b9)?;
    let image = &data.base_images[base % N_BASE];
    let (fusion_image, _) = &fusion_set[fusion % N_BASE];

    let lat = visual_encode(image, POOL)?;
    let fused = fuse_latents(&lat, &visual_encode(fusion_image, POOL)?, w_lat.clamp(0.0, 1.0))?;
    let schedule = make_schedule(T_MAX, 1e-4, 0.02)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
    let eps: Vec<f64> = (0..fused.len()).map(|_| rng.sample(StandardNormal)).collect();
    let noised = forward_sample(&to_diffusion_space(&fused), t.clamp(1, T_MAX), &eps, &schedule)?;

    let side = SIDE / POOL;
    let mut out = image.pixels().to_vec();
    out.extend_from_slice(visual_decode(&fused, side, side, POOL)?.pixels());
    out.extend_from_slice(visual_decode(&from_diffusion_space(&noised), side, side, POOL)?.pixels());
    Ok(out)
}

#[wasm_bindgen(js_name = fusionFrames)]
pub fn fusion_frames_js(
    base: usize,
    fusion: usize,
    w_lat: f64,
    t: usize,
    seed: u64,
) -> std::result::Result<Vec<f32>, JsError> {
    fusion_frames(base, fusion, w_lat, t, seed).map_err(js)
}

/// Nearest-rank quantile of a list of top-1 similarities.
pub fn quantile_json(values: Vec<f64>, quantile: f64) -> Result<Value> {
    let n = values.len();
    let dist = SimilarityDistribution::new(values)?;
    let r = replication_score(&dist, quantile)?;
    Ok(json!({
        "r": r.r,
        "rank": nearest_rank(quantile, n),
        "n": n,
        "sorted": dist.values(),
    }))
}

#[wasm_bindgen(js_name = replicationQuantile)]
pub fn replication_quantile(values: Vec<f64>, quantile: f64) -> std::result::Result<String, JsError> {
    quantile_json(values, quantile).map(|v| v.to_string()).map_err(js)
}
