//! Ternary bag-of-words intent classifier: hashed features → ternary
//! `1024 → 128` layer (int8 activations, STE training) → ReLU → full-precision
//! softmax head over intent kinds.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{featurize_text, parse_command, CorpusEntry, IntentError, Lexicon, FEATURE_DIM};
use crate::agent::{Adam, Linear, LinearGrad};
use crate::ternary::{ste_gradient, LatentLayer};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntentKind {
    TurnOn,
    TurnOff,
    SetBrightness,
    SetColorTemp,
    ActivateScene,
    QueryState,
}

impl IntentKind {
    pub const ALL: [IntentKind; 6] = [
        IntentKind::TurnOn,
        IntentKind::TurnOff,
        IntentKind::SetBrightness,
        IntentKind::SetColorTemp,
        IntentKind::ActivateScene,
        IntentKind::QueryState,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            IntentKind::TurnOn => "TurnOn",
            IntentKind::TurnOff => "TurnOff",
            IntentKind::SetBrightness => "SetBrightness",
            IntentKind::SetColorTemp => "SetColorTemp",
            IntentKind::ActivateScene => "ActivateScene",
            IntentKind::QueryState => "QueryState",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            epochs: 4,
            batch_size: 32,
            learning_rate: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntentClassifier {
    hidden: LatentLayer,
    head: Linear,
}

impl IntentClassifier {
    pub fn hidden_layer(&self) -> &LatentLayer {
        &self.hidden
    }

    pub fn head(&self) -> &Linear {
        &self.head
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), IntentError> {
        let (z, xq) = self.hidden.forward(x)?;
        let a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let logits = self.head.forward(&a);
        Ok((z, xq, logits))
    }

    pub fn probabilities(&self, text: &str) -> Result<Vec<f64>, IntentError> {
        Ok(softmax(&self.forward(&featurize_text(text))?.2))
    }

    pub fn predict(&self, text: &str) -> Result<IntentKind, IntentError> {
        let p = self.probabilities(text)?;
        let best = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        Ok(IntentKind::ALL[best])
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn train_intent_classifier(
    corpus: &[CorpusEntry],
    seed: u64,
) -> Result<IntentClassifier, IntentError> {
    train_intent_classifier_with(corpus, seed, &ClassifierConfig::default())
}

/// Mini-batch Adam on softmax cross-entropy; deterministic per seed.
pub fn train_intent_classifier_with(
    corpus: &[CorpusEntry],
    seed: u64,
    config: &ClassifierConfig,
) -> Result<IntentClassifier, IntentError> {
    if corpus.is_empty() {
        return Err(IntentError::EmptyCorpus);
    }
    for kind in IntentKind::ALL {
        if !corpus.iter().any(|e| e.intent.kind() == kind) {
            return Err(IntentError::MissingClass(kind.name().into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = IntentKind::ALL.len();
    let hidden_bound = (6.0 / FEATURE_DIM as f64).sqrt();
    let head_bound = (6.0 / (config.hidden + classes) as f64).sqrt();
    let latent = Linear::random(FEATURE_DIM, config.hidden, hidden_bound, &mut rng);
    let mut model = IntentClassifier {
        hidden: LatentLayer::new(latent.weight, Some(vec![0.0; config.hidden]))?,
        head: Linear::random(config.hidden, classes, head_bound, &mut rng),
    };
    let mut adam = Adam::new(config.learning_rate);
    let data: Vec<(Vec<f64>, usize)> = corpus
        .iter()
        .map(|e| (featurize_text(&e.text), e.intent.kind().index()))
        .collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = config.batch_size.max(1);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut gw = Matrix::zeros(config.hidden, FEATURE_DIM);
            let mut gb = vec![0.0; config.hidden];
            let mut gh = LinearGrad::zeros_like(&model.head);
            let n = chunk.len() as f64;
            for &i in chunk {
                let (x, y) = &data[i];
                let (z, xq, logits) = model.forward(x)?;
                let mut d = softmax(&logits);
                d[*y] -= 1.0;
                d.iter_mut().for_each(|v| *v /= n);
                let a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
                let da = model.head.backward(&a, &d, &mut gh);
                let nonzero: Vec<(usize, f64)> = xq
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, *v))
                    .collect();
                for r in 0..config.hidden {
                    if z[r] <= 0.0 || da[r] == 0.0 {
                        continue;
                    }
                    gb[r] += da[r];
                    let row = gw.row_mut(r);
                    for &(c, v) in &nonzero {
                        row[c] += da[r] * v;
                    }
                }
            }
            let gw = ste_gradient(&gw, &model.hidden)?;
            {
                let (w, b) = model.hidden.params_mut();
                let b = b.expect("hidden layer has a bias");
                adam.step(
                    vec![
                        &mut w.data,
                        b,
                        &mut model.head.weight.data,
                        &mut model.head.bias,
                    ],
                    vec![&gw.data, &gb, &gh.weight.data, &gh.bias],
                );
            }
            model.hidden.refresh()?;
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub per_class: BTreeMap<String, ClassAccuracy>,
}

fn report(outcomes: impl Iterator<Item = (IntentKind, bool)>) -> ClassifierReport {
    let mut per: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut correct, mut total) = (0, 0);
    for (kind, ok) in outcomes {
        let e = per.entry(kind.name().to_string()).or_default();
        e.1 += 1;
        total += 1;
        if ok {
            e.0 += 1;
            correct += 1;
        }
    }
    let ratio = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    ClassifierReport {
        correct,
        total,
        accuracy: ratio(correct, total),
        per_class: per
            .into_iter()
            .map(|(k, (c, t))| {
                (
                    k,
                    ClassAccuracy {
                        correct: c,
                        total: t,
                        accuracy: ratio(c, t),
                    },
                )
            })
            .collect(),
    }
}

/// Intent-kind accuracy of the classifier on `held_out`.
pub fn eval_classifier(
    model: &IntentClassifier,
    held_out: &[CorpusEntry],
) -> Result<ClassifierReport, IntentError> {
    let outcomes = held_out
        .iter()
        .map(|e| Ok((e.intent.kind(), model.predict(&e.text)? == e.intent.kind())))
        .collect::<Result<Vec<_>, IntentError>>()?;
    Ok(report(outcomes.into_iter()))
}

/// Exact-intent accuracy of the grammar parser on `held_out`.
pub fn eval_parser(lexicon: &Lexicon, held_out: &[CorpusEntry]) -> ClassifierReport {
    report(held_out.iter().map(|e| {
        (
            e.intent.kind(),
            parse_command(&e.text, lexicon).as_ref() == Ok(&e.intent),
        )
    }))
}
