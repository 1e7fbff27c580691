//! Caption generality metrics and the aggregate generality score.
//!
//! | metric | raw value |
//! |---|---|
//! | SI | `1 - (ent + num) / n_word` |
//! | BT | `min(sum hypo(noun) / (n_word * 2 * avg_global_hypo), 1)` |
//! | TM | `count_pres_ind / v_total`, or `0.5` without verbs |
//! | DA | `min(mean depth(noun) / (2 * da_global), 1)` |
//!
//! Each raw value lies in `[0, 1]` and is scaled by 10; GS is the mean of
//! the four scaled values. DA follows the table literally: deeper (usually
//! more specific) nouns raise the score.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::annotate::{annotate, AnnotatedCaption};
use crate::lexicon::Lexicon;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralityReport {
    pub si: f64,
    pub bt: f64,
    pub tm: f64,
    pub da: f64,
    pub si10: f64,
    pub bt10: f64,
    pub tm10: f64,
    pub da10: f64,
    pub gs: f64,
}

impl GeneralityReport {
    pub fn from_raw(si: f64, bt: f64, tm: f64, da: f64) -> Result<Self> {
        let (si10, bt10, tm10, da10) = (si * 10.0, bt * 10.0, tm * 10.0, da * 10.0);
        let gs = aggregate(si10, bt10, tm10, da10)?;
        Ok(GeneralityReport {
            si,
            bt,
            tm,
            da,
            si10,
            bt10,
            tm10,
            da10,
            gs,
        })
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn si_score(ann: &AnnotatedCaption) -> Result<f64> {
    if ann.n_word == 0 {
        return Err(Error::EmptyCaption);
    }
    Ok(clamp01(1.0 - (ann.ent + ann.num) as f64 / ann.n_word as f64))
}

/// Nouns missing from the lexicon contribute zero hyponyms.
pub fn bt_score(ann: &AnnotatedCaption, lexicon: &Lexicon) -> Result<f64> {
    if ann.n_word == 0 {
        return Err(Error::EmptyCaption);
    }
    let hypo: f64 = ann
        .nouns
        .iter()
        .filter_map(|n| lexicon.lookup(n))
        .map(|e| e.hyponym_count as f64)
        .sum();
    let denom = ann.n_word as f64 * 2.0 * lexicon.avg_global_hypo();
    Ok(clamp01((hypo / denom).min(1.0)))
}

pub fn tm_score(ann: &AnnotatedCaption) -> f64 {
    if ann.v_total == 0 {
        0.5
    } else {
        clamp01(ann.count_pres_ind as f64 / ann.v_total as f64)
    }
}

/// Mean depth of the nouns the lexicon resolves (0 when none resolve),
/// relative to twice the global mean depth.
pub fn da_score(ann: &AnnotatedCaption, lexicon: &Lexicon) -> f64 {
    let depths: Vec<f64> = ann
        .nouns
        .iter()
        .filter_map(|n| lexicon.lookup(n))
        .map(|e| e.depth)
        .collect();
    let da_caption = if depths.is_empty() {
        0.0
    } else {
        depths.iter().sum::<f64>() / depths.len() as f64
    };
    clamp01((da_caption / (2.0 * lexicon.da_global())).min(1.0))
}

/// Mean of the four `[0, 10]`-scaled scores.
pub fn aggregate(si10: f64, bt10: f64, tm10: f64, da10: f64) -> Result<f64> {
    for (name, v) in [("si10", si10), ("bt10", bt10), ("tm10", tm10), ("da10", da10)] {
        if !(0.0..=10.0).contains(&v) {
            return Err(Error::contract(format!("{name} = {v} is outside [0, 10]")));
        }
    }
    Ok((si10 + bt10 + tm10 + da10) / 4.0)
}

pub fn score_annotated(ann: &AnnotatedCaption, lexicon: &Lexicon) -> Result<GeneralityReport> {
    GeneralityReport::from_raw(
        si_score(ann)?,
        bt_score(ann, lexicon)?,
        tm_score(ann),
        da_score(ann, lexicon),
    )
}

pub fn score_caption(text: &str, lexicon: &Lexicon) -> Result<GeneralityReport> {
    let ann = annotate(text, lexicon);
    if ann.n_word == 0 {
        return Err(Error::EmptyCaption);
    }
    score_annotated(&ann, lexicon)
}

/// Half-up rounding to two decimals for display.
pub fn round2(x: f64) -> f64 {
    // The 1e-9 nudge keeps values like 7.325 (stored as 7.32499...) rounding up.
    ((x * 100.0) + 0.5 + 1e-9).floor() / 100.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub id: String,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaptionScore {
    pub id: String,
    pub caption: String,
    #[serde(flatten)]
    pub report: GeneralityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub count: usize,
    pub skipped: usize,
    pub mean_si: f64,
    pub mean_bt: f64,
    pub mean_tm: f64,
    pub mean_da: f64,
    pub mean_gs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusReport {
    pub captions: Vec<CaptionScore>,
    pub summary: CorpusSummary,
}

/// Neumaier-compensated mean.
fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut n = 0usize;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        n += 1;
    }
    (sum + comp) / n as f64
}

pub fn read_caption_records(reader: impl BufRead) -> Result<Vec<CaptionRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CaptionRecord = serde_json::from_str(&line).map_err(|e| Error::Line {
            path: "<captions>".into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Scores every record; empty captions are counted as skipped.
pub fn score_corpus(records: &[CaptionRecord], lexicon: &Lexicon) -> Result<CorpusReport> {
    let mut captions = Vec::with_capacity(records.len());
    let mut skipped = 0;
    for r in records {
        match score_caption(&r.caption, lexicon) {
            Ok(report) => captions.push(CaptionScore {
                id: r.id.clone(),
                caption: r.caption.clone(),
                report,
            }),
            Err(Error::EmptyCaption) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if captions.is_empty() {
        return Err(Error::contract("corpus contains no scorable captions"));
    }
    let summary = CorpusSummary {
        count: captions.len(),
        skipped,
        mean_si: mean(captions.iter().map(|c| c.report.si)),
        mean_bt: mean(captions.iter().map(|c| c.report.bt)),
        mean_tm: mean(captions.iter().map(|c| c.report.tm)),
        mean_da: mean(captions.iter().map(|c| c.report.da)),
        mean_gs: mean(captions.iter().map(|c| c.report.gs)),
    };
    Ok(CorpusReport { captions, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::LexEntry;

    fn mini_lexicon() -> Lexicon {
        Lexicon::new(
            [
                LexEntry::new("dog", 18, 8.0).unwrap(),
                LexEntry::new("entity", 0, 4.0).unwrap(),
            ],
            36.0,
            4.0,
            "mini",
        )
        .unwrap()
    }

    fn ann(n_word: usize, ent: usize, num: usize) -> AnnotatedCaption {
        AnnotatedCaption {
            tokens: Vec::new(),
            n_word,
            ent,
            num,
            v_total: 0,
            count_pres_ind: 0,
            nouns: Vec::new(),
        }
    }

    #[test]
    fn si_examples() {
        assert!((si_score(&ann(7, 2, 1)).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(si_score(&ann(5, 0, 0)).unwrap(), 1.0);
        assert_eq!(si_score(&ann(3, 2, 1)).unwrap(), 0.0);
        assert!(matches!(si_score(&ann(0, 0, 0)), Err(Error::EmptyCaption)));
    }

    #[test]
    fn bt_examples() {
        let lex = mini_lexicon();
        let a = annotate("a dog", &lex);
        assert_eq!(a.n_word, 2);
        assert_eq!(bt_score(&a, &lex).unwrap(), 0.125);
        assert_eq!(bt_score(&annotate("of the and", &lex), &lex).unwrap(), 0.0);
        let tiny = Lexicon::new([LexEntry::new("dog", 18, 8.0).unwrap()], 1.0, 4.0, "t").unwrap();
        assert_eq!(bt_score(&annotate("dog", &tiny), &tiny).unwrap(), 1.0);
    }

    #[test]
    fn tm_examples() {
        let lex = mini_lexicon();
        assert_eq!(tm_score(&annotate("Birds can fly", &lex)), 1.0);
        assert_eq!(tm_score(&annotate("The bird was flying", &lex)), 0.0);
        assert_eq!(tm_score(&annotate("a dog", &lex)), 0.5);
    }

    #[test]
    fn da_examples() {
        let lex = mini_lexicon();
        assert_eq!(da_score(&annotate("entity", &lex), &lex), 0.5);
        assert_eq!(da_score(&annotate("dog", &lex), &lex), 1.0);
        assert_eq!(da_score(&annotate("of the", &lex), &lex), 0.0);
    }

    #[test]
    fn aggregate_table_rows() {
        assert!((aggregate(8.18, 3.67, 5.0, 5.15).unwrap() - 5.50).abs() <= 0.005);
        assert!((aggregate(10.0, 3.96, 10.0, 5.34).unwrap() - 7.33).abs() <= 0.005);
        assert!((aggregate(10.0, 10.0, 10.0, 4.61).unwrap() - 8.65).abs() <= 0.005);
        assert_eq!(aggregate(0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(aggregate(10.5, 0.0, 0.0, 0.0).is_err());
        assert!(aggregate(0.0, -0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn display_rounding() {
        assert_eq!(round2(aggregate(10.0, 3.96, 10.0, 5.34).unwrap()), 7.33);
        assert_eq!(round2(aggregate(10.0, 10.0, 10.0, 4.61).unwrap()), 8.65);
        assert_eq!(round2(5.5), 5.5);
        assert_eq!(round2(7.325), 7.33);
    }

    #[test]
    fn stopword_caption() {
        let r = score_caption("of the and", &mini_lexicon()).unwrap();
        assert_eq!((r.si, r.bt, r.tm, r.da), (1.0, 0.0, 0.5, 0.0));
        assert_eq!(r.gs, 3.75);
    }

    #[test]
    fn single_noun_at_global_depth() {
        // "entity": si 1, 0 hyponyms -> bt 0, no verb -> tm 0.5, depth 4 = da_global -> da 0.5
        let r = score_caption("entity", &mini_lexicon()).unwrap();
        assert_eq!(r.gs, (10.0 + 0.0 + 5.0 + 5.0) / 4.0);
    }

    #[test]
    fn gs_is_consistent_with_raw_scores() {
        let r = score_caption("Johnson walks a dog in Paris", &mini_lexicon()).unwrap();
        let gs = (r.si * 10.0 + r.bt * 10.0 + r.tm * 10.0 + r.da * 10.0) / 4.0;
        assert_eq!(gs, r.gs);
    }

    #[test]
    fn empty_caption_errors() {
        assert!(matches!(score_caption("", &mini_lexicon()), Err(Error::EmptyCaption)));
        assert!(matches!(score_caption(" ... ", &mini_lexicon()), Err(Error::EmptyCaption)));
    }

    fn records(caps: &[&str]) -> Vec<CaptionRecord> {
        caps.iter()
            .enumerate()
            .map(|(i, c)| CaptionRecord {
                id: format!("c{i}"),
                caption: c.to_string(),
                image: None,
            })
            .collect()
    }

    #[test]
    fn corpus_means() {
        let lex = mini_lexicon();
        let a = score_caption("of the and", &lex).unwrap().gs;
        let b = score_caption("entity", &lex).unwrap().gs;
        let report = score_corpus(&records(&["of the and", "entity", ""]), &lex).unwrap();
        assert_eq!(report.summary.count, 2);
        assert_eq!(report.summary.skipped, 1);
        assert_eq!(report.summary.mean_gs, (a + b) / 2.0);

        let same = score_corpus(&records(&["entity", "entity", "entity"]), &lex).unwrap();
        assert_eq!(same.summary.mean_gs, b);
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(score_corpus(&[], &mini_lexicon()).is_err());
    }

    #[test]
    fn malformed_jsonl_reports_line() {
        let text = "{\"id\":\"a\",\"caption\":\"x\"}\n\nnot json\n";
        match read_caption_records(text.as_bytes()).unwrap_err() {
            Error::Line { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
