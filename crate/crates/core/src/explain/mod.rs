//! Shapley attribution of a prediction to criteria sentences, or to the
//! words of one sentence, by masking.

mod render;
mod shapley;

use serde::{Deserialize, Serialize};

pub use render::{render_html, render_text, write_rendering};
pub use shapley::{shapley_exact, shapley_sampled, CoalitionGame, SampledShapley, MAX_EXACT_PLAYERS};

use crate::embed::{build_features, slot_layout, EmbeddedTrial, EmbeddingProvider, Segment};
use crate::encoder::HierNet;
use crate::error::{Error, Result};
use crate::ingest::TrialRecord;

pub const ATTRIBUTION_FORMAT: &str = "tdattr-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Sentence,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Sampled { n_perms: usize, seed: u64 },
}

/// What a keep-set refers to.
pub enum Target<'a> {
    /// Indices into the trial's active slots, in slot order.
    Sentences,
    /// Indices into `words`, the whitespace tokens of the sentence in `slot`.
    Words {
        slot: usize,
        words: &'a [String],
        provider: &'a EmbeddingProvider,
    },
}

/// Copy of `trial` with only the items in `keep` present.
///
/// Dropped sentences are zeroed and masked, like padding. For words, the
/// sentence is re-embedded from the kept words in their original order; with
/// no words kept the sentence is masked.
pub fn mask_subset(trial: &EmbeddedTrial, keep: &[usize], target: &Target) -> Result<EmbeddedTrial> {
    let n = match target {
        Target::Sentences => trial.active_slots().len(),
        Target::Words { words, .. } => words.len(),
    };
    let mut flags = vec![false; n];
    for &k in keep {
        *flags
            .get_mut(k)
            .ok_or_else(|| Error::Invalid(format!("item index {k} out of range for {n} items")))? = true;
    }
    mask_flags(trial, &flags, target)
}

fn mask_flags(trial: &EmbeddedTrial, keep: &[bool], target: &Target) -> Result<EmbeddedTrial> {
    let mut out = trial.clone();
    match target {
        Target::Sentences => {
            for (slot, k) in trial.active_slots().into_iter().zip(keep) {
                if !k {
                    out.mask_slot(slot);
                }
            }
        }
        Target::Words { slot, words, provider } => {
            let kept: Vec<&str> = words
                .iter()
                .zip(keep)
                .filter(|(_, k)| **k)
                .map(|(w, _)| w.as_str())
                .collect();
            if kept.is_empty() {
                out.mask_slot(*slot);
            } else {
                let v = provider.embed(&kept.join(" "))?;
                out.sentence_mut(*slot).copy_from_slice(&v);
            }
        }
    }
    Ok(out)
}

/// The model's prediction as a function of which items are present.
pub struct MaskGame<'a> {
    pub net: &'a HierNet,
    pub params: &'a [f64],
    pub trial: &'a EmbeddedTrial,
    pub target: Target<'a>,
    pub players: usize,
}

impl CoalitionGame for MaskGame<'_> {
    fn players(&self) -> usize {
        self.players
    }

    fn value(&self, keep: &[bool]) -> Result<f64> {
        let t = mask_flags(self.trial, keep, &self.target)?;
        self.net.forward_masked(self.params, &t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionItem {
    pub text: String,
    pub slot: usize,
    pub segment: Segment,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub format: String,
    pub nct_id: String,
    pub unit: Unit,
    #[serde(flatten)]
    pub mode: Mode,
    /// Prediction with every item masked, in years.
    pub base_value: f64,
    /// Unmasked prediction, in years.
    pub full_value: f64,
    pub items: Vec<AttributionItem>,
}

impl Attribution {
    /// `Σφ − (full − base)`; zero up to rounding in exact mode.
    pub fn efficiency_gap(&self) -> f64 {
        self.items.iter().map(|i| i.value).sum::<f64>() - (self.full_value - self.base_value)
    }
}

fn solve<G: CoalitionGame>(game: &G, mode: Mode) -> Result<(Vec<f64>, Vec<Option<f64>>)> {
    match mode {
        Mode::Exact => Ok((shapley_exact(game)?, vec![None; game.players()])),
        Mode::Sampled { n_perms, seed } => {
            let s = shapley_sampled(game, n_perms, seed)?;
            Ok((s.values, s.std_errors))
        }
    }
}

/// Attribution over the criteria sentences of `record`.
pub fn explain_sentences(
    net: &HierNet,
    params: &[f64],
    provider: &EmbeddingProvider,
    record: &TrialRecord,
    mode: Mode,
) -> Result<Attribution> {
    let trial = build_features(provider, record)?;
    let criteria: Vec<&str> = record.criteria().collect();
    let layout = slot_layout(record);
    let game = MaskGame {
        net,
        params,
        trial: &trial,
        target: Target::Sentences,
        players: layout.len(),
    };
    let (values, errors) = solve(&game, mode)?;
    let n = layout.len();
    let items = layout
        .iter()
        .zip(values.into_iter().zip(errors))
        .map(|(&(slot, idx), (value, std_error))| AttributionItem {
            text: criteria[idx].to_string(),
            slot,
            segment: Segment::of_slot(slot),
            value,
            std_error,
        })
        .collect();
    Ok(Attribution {
        format: ATTRIBUTION_FORMAT.into(),
        nct_id: record.nct_id.clone(),
        unit: Unit::Sentence,
        mode,
        base_value: game.value(&vec![false; n])?,
        full_value: game.value(&vec![true; n])?,
        items,
    })
}

/// Attribution over the words of one criteria sentence; `sentence` indexes
/// `record.criteria()`. The other sentences stay present throughout.
pub fn explain_words(
    net: &HierNet,
    params: &[f64],
    provider: &EmbeddingProvider,
    record: &TrialRecord,
    sentence: usize,
    mode: Mode,
) -> Result<Attribution> {
    let trial = build_features(provider, record)?;
    let criteria: Vec<&str> = record.criteria().collect();
    let (slot, _) = *slot_layout(record)
        .iter()
        .find(|(_, idx)| *idx == sentence)
        .ok_or_else(|| Error::Invalid(format!("sentence {sentence} is not among the embedded criteria")))?;
    let words: Vec<String> = criteria[sentence].split_whitespace().map(str::to_string).collect();
    let game = MaskGame {
        net,
        params,
        trial: &trial,
        target: Target::Words {
            slot,
            words: &words,
            provider,
        },
        players: words.len(),
    };
    let (values, errors) = solve(&game, mode)?;
    let n = words.len();
    let items = words
        .iter()
        .zip(values.into_iter().zip(errors))
        .map(|(w, (value, std_error))| AttributionItem {
            text: w.clone(),
            slot,
            segment: Segment::of_slot(slot),
            value,
            std_error,
        })
        .collect();
    Ok(Attribution {
        format: ATTRIBUTION_FORMAT.into(),
        nct_id: record.nct_id.clone(),
        unit: Unit::Word,
        mode,
        base_value: game.value(&vec![false; n])?,
        full_value: game.value(&vec![true; n])?,
        items,
    })
}
