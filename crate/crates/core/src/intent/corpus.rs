//! Deterministic template corpus of lighting commands.
//!
//! Each entry draws an intent, renders it through a template and applies
//! `noise_level` distinct noise operators: synonym swap, filler words, case
//! jitter and digit-to-word numbers. Noise level 0 text is canonical and
//! always parses back to its label.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Intent, IntentError, IntentKind, Lexicon, ALL_ZONES};
use crate::home::{nearest_cct_bin, CCT_BINS};

/// Entries per independently seeded chunk (chunk `i` uses `seed + i`).
pub const CHUNK_SIZE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub text: String,
    pub intent: Intent,
    pub noise_level: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Noise {
    Synonym,
    Filler,
    Case,
    Words,
}

const ALL_SYNONYMS: [&str; 3] = ["every room", "whole house", "everywhere"];
const PREFIXES: [&str; 6] = [
    "please",
    "hey",
    "could you",
    "can you",
    "okay google",
    "hey google",
];
const SUFFIXES: [&str; 4] = ["please", "now", "thanks", "thank you"];

/// Generates `count` entries; byte-identical output for a given seed.
pub fn generate_corpus(count: usize, lexicon: &Lexicon, seed: u64) -> Vec<CorpusEntry> {
    let zones: Vec<&str> = lexicon.zone_names().collect();
    let scenes: Vec<&str> = lexicon.scene_names().collect();
    let synonyms: Vec<Vec<String>> = zones.iter().map(|z| lexicon.synonyms(z)).collect();
    let mut out = Vec::with_capacity(count);
    for chunk in 0..count.div_ceil(CHUNK_SIZE) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(chunk as u64));
        let n = CHUNK_SIZE.min(count - chunk * CHUNK_SIZE);
        for _ in 0..n {
            out.push(entry(&mut rng, &zones, &synonyms, &scenes));
        }
    }
    out
}

fn entry(
    rng: &mut ChaCha8Rng,
    zones: &[&str],
    synonyms: &[Vec<String>],
    scenes: &[&str],
) -> CorpusEntry {
    let noise_level = rng.gen_range(0..=3u8);
    let mut ops = [Noise::Synonym, Noise::Filler, Noise::Case, Noise::Words];
    ops.shuffle(rng);
    let ops = &ops[..usize::from(noise_level)];
    let has = |n: Noise| ops.contains(&n);

    let kinds: &[IntentKind] = if scenes.is_empty() {
        &[
            IntentKind::TurnOn,
            IntentKind::TurnOff,
            IntentKind::SetBrightness,
            IntentKind::SetColorTemp,
            IntentKind::QueryState,
        ]
    } else {
        &IntentKind::ALL
    };
    let kind = *kinds.choose(rng).expect("non-empty");

    // Target zone and its surface form.
    let all = rng.gen_bool(0.15);
    let (zone, room) = if all {
        let surface = if has(Noise::Synonym) {
            ALL_SYNONYMS.choose(rng).expect("non-empty").to_string()
        } else {
            ALL_ZONES.to_string()
        };
        (ALL_ZONES.to_string(), surface)
    } else {
        let z = rng.gen_range(0..zones.len());
        let surface = match synonyms[z].choose(rng) {
            Some(s) if has(Noise::Synonym) => s.clone(),
            _ => zones[z].to_string(),
        };
        (zones[z].to_string(), surface)
    };
    let words = has(Noise::Words);

    let (text, intent) = match kind {
        IntentKind::TurnOn | IntentKind::TurnOff => {
            let on = kind == IntentKind::TurnOn;
            let state = if on { "on" } else { "off" };
            let t = match rng.gen_range(0..4) {
                0 => format!("turn {state} {room} lights"),
                1 => format!("turn {state} the {room} lights"),
                2 => format!("switch {state} the {room} light"),
                _ => format!("turn the {room} lights {state}"),
            };
            let intent = if on {
                Intent::TurnOn { zone }
            } else {
                Intent::TurnOff { zone }
            };
            (t, intent)
        }
        IntentKind::SetBrightness => {
            let n: u64 = rng.gen_range(0..=100);
            let v = if words {
                format!("{} percent", number_words(n))
            } else if rng.gen_bool(0.5) {
                format!("{n}%")
            } else {
                format!("{n} percent")
            };
            let roomless = all && rng.gen_bool(0.5);
            let t = match (roomless, rng.gen_range(0..6)) {
                (true, k) if k % 2 == 0 => format!("dim to {v}"),
                (true, _) => format!("brighten to {v}"),
                (false, 0) => format!("dim {room} to {v}"),
                (false, 1) => format!("dim the {room} lights to {v}"),
                (false, 2) => format!("brighten {room} to {v}"),
                (false, 3) => format!("brighten the {room} lights to {v}"),
                (false, 4) => format!("set {room} brightness to {v}"),
                _ => format!("set the {room} lights to {v}"),
            };
            let pct = (((n + 5) / 10) * 10) as u8;
            (t, Intent::SetBrightness { zone, pct })
        }
        IntentKind::SetColorTemp => {
            if rng.gen_bool(0.3) {
                let warm = rng.gen_bool(0.5);
                let dir = if warm { "warmer" } else { "cooler" };
                let t = if all && rng.gen_bool(0.5) {
                    format!("make it {dir}")
                } else {
                    match rng.gen_range(0..3) {
                        0 => format!("make the {room} {dir}"),
                        1 => format!("make {room} lights {dir}"),
                        _ => format!("set {room} {dir}"),
                    }
                };
                let kelvin = if warm { CCT_BINS[0] } else { CCT_BINS[4] };
                (t, Intent::SetColorTemp { zone, kelvin })
            } else {
                let n: u64 = 2700 + 100 * rng.gen_range(0..=38);
                let v = if words {
                    format!("{} kelvin", number_words(n))
                } else if rng.gen_bool(0.5) {
                    format!("{n}k")
                } else {
                    format!("{n} kelvin")
                };
                let t = match rng.gen_range(0..3) {
                    0 => format!("set {room} to {v}"),
                    1 => format!("set the {room} color temperature to {v}"),
                    _ => format!("set {room} lights to {v}"),
                };
                let kelvin = CCT_BINS[nearest_cct_bin(n as f64) as usize];
                (t, Intent::SetColorTemp { zone, kelvin })
            }
        }
        IntentKind::ActivateScene => {
            let scene = scenes.choose(rng).expect("non-empty").to_string();
            let t = match rng.gen_range(0..4) {
                0 => format!("activate {scene}"),
                1 => format!("activate {scene} scene"),
                2 => format!("activate the {scene} mode"),
                _ => format!("activate the {scene} scene"),
            };
            (t, Intent::ActivateScene { scene })
        }
        IntentKind::QueryState => {
            if rng.gen_bool(0.4) {
                let t = ["status", "what is the status", "lights status"]
                    .choose(rng)
                    .expect("non-empty");
                (t.to_string(), Intent::QueryState { zone: None })
            } else {
                let t = match rng.gen_range(0..3) {
                    0 => format!("status of {room}"),
                    1 => format!("what is the {room} status"),
                    _ => format!("{room} status"),
                };
                (t, Intent::QueryState { zone: Some(zone) })
            }
        }
    };

    let mut text = text;
    if has(Noise::Filler) {
        let r: f64 = rng.gen();
        if r < 0.7 {
            text = format!("{} {text}", PREFIXES.choose(rng).expect("non-empty"));
        }
        if r >= 0.4 {
            text = format!("{text} {}", SUFFIXES.choose(rng).expect("non-empty"));
        }
    }
    if has(Noise::Case) {
        text = text
            .split(' ')
            .map(|w| match rng.gen_range(0..3) {
                0 => w.to_uppercase(),
                1 => capitalize(w),
                _ => w.to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ");
    }
    CorpusEntry {
        text,
        intent,
        noise_level,
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// English words for `0..=9999`, e.g. 4600 → "four thousand six hundred".
pub(crate) fn number_words(n: u64) -> String {
    const ONES: [&str; 20] = [
        "zero",
        "one",
        "two",
        "three",
        "four",
        "five",
        "six",
        "seven",
        "eight",
        "nine",
        "ten",
        "eleven",
        "twelve",
        "thirteen",
        "fourteen",
        "fifteen",
        "sixteen",
        "seventeen",
        "eighteen",
        "nineteen",
    ];
    const TENS: [&str; 10] = [
        "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
    ];
    fn below_100(n: u64, out: &mut Vec<&'static str>) {
        if n < 20 {
            out.push(ONES[n as usize]);
        } else {
            out.push(TENS[(n / 10) as usize]);
            if n % 10 != 0 {
                out.push(ONES[(n % 10) as usize]);
            }
        }
    }
    if n == 0 {
        return "zero".into();
    }
    let mut out = Vec::new();
    if n >= 1000 {
        below_100(n / 1000, &mut out);
        out.push("thousand");
    }
    let rest = n % 1000;
    if rest >= 100 {
        out.push(ONES[(rest / 100) as usize]);
        out.push("hundred");
    }
    if rest % 100 != 0 {
        below_100(rest % 100, &mut out);
    }
    out.join(" ")
}

/// Count of entries per intent kind.
pub fn label_distribution(entries: &[CorpusEntry]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for e in entries {
        *counts
            .entry(e.intent.kind().name().to_string())
            .or_insert(0) += 1;
    }
    counts
}

/// Writes one JSON object per line.
pub fn write_corpus<W: Write>(mut out: W, entries: &[CorpusEntry]) -> Result<(), IntentError> {
    for e in entries {
        serde_json::to_writer(&mut out, e).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<CorpusEntry>, IntentError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| IntentError::Corpus {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::home::HomeConfig;
    use crate::intent::parse_command;

    fn lexicon() -> Lexicon {
        let cfg = HomeConfig::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/configs/family_4zone.json"
        ))
        .unwrap();
        Lexicon::from_config(&cfg)
    }

    #[test]
    fn empty_and_deterministic() {
        let lex = lexicon();
        assert!(generate_corpus(0, &lex, 1).is_empty());
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_corpus(&mut a, &generate_corpus(500, &lex, 9)).unwrap();
        write_corpus(&mut b, &generate_corpus(500, &lex, 9)).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        write_corpus(&mut c, &generate_corpus(500, &lex, 10)).unwrap();
        assert_ne!(a, c);
        assert_eq!(read_corpus(&a[..]).unwrap(), generate_corpus(500, &lex, 9));
    }

    #[test]
    fn prefix_stable_across_counts() {
        let lex = lexicon();
        let long = generate_corpus(CHUNK_SIZE + 10, &lex, 3);
        assert_eq!(&long[..100], &generate_corpus(100, &lex, 3)[..]);
        assert_eq!(long.len(), CHUNK_SIZE + 10);
    }

    #[test]
    fn noise_zero_round_trips() {
        let lex = lexicon();
        let corpus = generate_corpus(3000, &lex, 5);
        let clean: Vec<_> = corpus.iter().filter(|e| e.noise_level == 0).collect();
        assert!(clean.len() > 500);
        for e in clean {
            assert_eq!(
                parse_command(&e.text, &lex).as_ref(),
                Ok(&e.intent),
                "{}",
                e.text
            );
        }
        let dist = label_distribution(&corpus);
        assert_eq!(dist.len(), 6);
        assert_eq!(dist.values().sum::<usize>(), 3000);
    }

    #[test]
    fn words_for_numbers() {
        assert_eq!(number_words(0), "zero");
        assert_eq!(number_words(45), "forty five");
        assert_eq!(number_words(100), "one hundred");
        assert_eq!(number_words(4600), "four thousand six hundred");
        assert_eq!(number_words(6500), "six thousand five hundred");
        assert_eq!(number_words(2017), "two thousand seventeen");
    }

    #[test]
    fn bad_line_reports_position() {
        let err = read_corpus(&b"{\"text\":\"x\"}\n"[..]).unwrap_err();
        assert!(matches!(err, IntentError::Corpus { line: 1, .. }));
    }
}
