//! Rule-based command grammar.
//!
//! Text is lowercased, punctuation other than `%` becomes whitespace and
//! digit/letter runs are split (`2700k` → `2700 k`). Number words are folded
//! into values, and a following `%`/`percent` or `k`/`kelvin` sets the unit.
//! The first verb keyword picks the intent; rooms are resolved by longest
//! lexicon match. Any word left over that is neither grammar nor filler is
//! reported as an unknown room (or scene).

use super::lexicon::ALL_ZONES;
use super::{Intent, Lexicon, ParseError};
use crate::home::{nearest_cct_bin, CCT_BINS};

const STOP: &[&str] = &[
    "a",
    "an",
    "and",
    "at",
    "be",
    "bit",
    "brightness",
    "can",
    "color",
    "colour",
    "could",
    "down",
    "for",
    "google",
    "hey",
    "hi",
    "in",
    "is",
    "it",
    "just",
    "kindly",
    "level",
    "light",
    "lighting",
    "lights",
    "lamp",
    "lamps",
    "little",
    "make",
    "me",
    "mode",
    "more",
    "my",
    "now",
    "of",
    "off",
    "ok",
    "okay",
    "on",
    "our",
    "please",
    "room",
    "rooms",
    "scene",
    "temp",
    "temperature",
    "thank",
    "thanks",
    "the",
    "there",
    "to",
    "up",
    "what",
    "whats",
    "will",
    "would",
    "you",
];

const VERBS: &[&str] = &[
    "turn", "switch", "dim", "brighten", "set", "activate", "warmer", "cooler", "status",
];

const UNITS: [(&str, u16); 19] = [
    ("zero", 0),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
    ("thirteen", 13),
    ("fourteen", 14),
    ("fifteen", 15),
    ("sixteen", 16),
    ("seventeen", 17),
    ("eighteen", 18),
];
const TENS: [(&str, u16); 9] = [
    ("nineteen", 19),
    ("twenty", 20),
    ("thirty", 30),
    ("forty", 40),
    ("fifty", 50),
    ("sixty", 60),
    ("seventy", 70),
    ("eighty", 80),
    ("ninety", 90),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Percent,
    Kelvin,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num { value: u64, unit: Option<Unit> },
}

/// Lowercase, strip punctuation (keeping `%`), split digit/letter runs.
pub(crate) fn normalize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut cur_digit = false;
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.is_empty() {
            out.push(std::mem::take(cur));
        }
    };
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch == '%' {
            flush(&mut cur, &mut out);
            out.push("%".into());
        } else if ch.is_alphanumeric() {
            let digit = ch.is_ascii_digit();
            if !cur.is_empty() && digit != cur_digit {
                flush(&mut cur, &mut out);
            }
            cur_digit = digit;
            cur.push(ch);
        } else {
            flush(&mut cur, &mut out);
        }
    }
    flush(&mut cur, &mut out);
    out
}

fn word_value(w: &str) -> Option<u16> {
    UNITS
        .iter()
        .chain(&TENS)
        .find(|(n, _)| *n == w)
        .map(|(_, v)| *v)
}

fn lex(text: &str) -> Vec<Tok> {
    let words = normalize(text);
    let mut toks = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let w = &words[i];
        let value = if w.bytes().all(|b| b.is_ascii_digit()) {
            i += 1;
            Some(w.parse::<u64>().unwrap_or(u64::MAX))
        } else if word_value(w).is_some() {
            // Fold a run like "six thousand five hundred".
            let (mut total, mut current) = (0u64, 0u64);
            while i < words.len() {
                match words[i].as_str() {
                    "hundred" => current = current.max(1).saturating_mul(100),
                    "thousand" => {
                        total = total.saturating_add(current.max(1).saturating_mul(1000));
                        current = 0;
                    }
                    w => match word_value(w) {
                        Some(v) => current = current.saturating_add(u64::from(v)),
                        None => break,
                    },
                }
                i += 1;
            }
            Some(total.saturating_add(current))
        } else {
            None
        };
        match value {
            Some(value) => {
                let unit = match words.get(i).map(String::as_str) {
                    Some("%" | "percent" | "pct") => Some(Unit::Percent),
                    Some("k" | "kelvin") => Some(Unit::Kelvin),
                    _ => None,
                };
                if unit.is_some() {
                    i += 1;
                }
                toks.push(Tok::Num { value, unit });
            }
            None => {
                toks.push(Tok::Word(w.clone()));
                i += 1;
            }
        }
    }
    toks
}

fn missing(slot: &str) -> ParseError {
    ParseError::MissingSlot { slot: slot.into() }
}

fn round_pct(value: u64) -> Result<u8, ParseError> {
    if value > 100 {
        return Err(ParseError::OutOfRange {
            slot: "brightness".into(),
            value,
        });
    }
    Ok((((value + 5) / 10) * 10) as u8)
}

fn snap_kelvin(value: u64) -> Result<u16, ParseError> {
    let (lo, hi) = (
        u64::from(CCT_BINS[0]),
        u64::from(CCT_BINS[CCT_BINS.len() - 1]),
    );
    if !(lo..=hi).contains(&value) {
        return Err(ParseError::OutOfRange {
            slot: "color_temp".into(),
            value,
        });
    }
    Ok(CCT_BINS[nearest_cct_bin(value as f64) as usize])
}

/// Parses one lighting command against `lexicon`. Total: every input yields
/// an [`Intent`] or a [`ParseError`].
pub fn parse_command(text: &str, lexicon: &Lexicon) -> Result<Intent, ParseError> {
    let toks = lex(text);
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let words: Vec<&str> = toks
        .iter()
        .map(|t| match t {
            Tok::Word(w) => w.as_str(),
            Tok::Num { .. } => "#",
        })
        .collect();
    let mut used = vec![false; toks.len()];

    let verb_at = words.iter().position(|w| VERBS.contains(w));
    let verb = verb_at.map(|i| words[i]);
    if let Some(i) = verb_at {
        used[i] = true;
    }

    let mut scene = None;
    if verb == Some("activate") {
        let mut i = 0;
        while i < words.len() {
            match lexicon.match_scene(&words, i) {
                Some((name, len)) if !used[i] => {
                    scene.get_or_insert_with(|| name.to_string());
                    used[i..i + len].fill(true);
                    i += len;
                }
                _ => i += 1,
            }
        }
    }
    let mut zone = None;
    let mut i = 0;
    while i < words.len() {
        match lexicon.match_zone(&words, i) {
            Some((name, len)) if !used[i..i + len].contains(&true) => {
                zone.get_or_insert_with(|| name.to_string());
                used[i..i + len].fill(true);
                i += len;
            }
            _ => i += 1,
        }
    }

    let leftover: Vec<&str> = words
        .iter()
        .zip(&used)
        .filter(|(w, u)| !**u && **w != "#" && !STOP.contains(*w) && !VERBS.contains(*w))
        .filter(|(w, _)| {
            !matches!(
                **w,
                "%" | "percent" | "pct" | "k" | "kelvin" | "hundred" | "thousand"
            )
        })
        .map(|(w, _)| *w)
        .collect();
    let unknown_room = || ParseError::UnknownRoom {
        name: leftover.join(" "),
    };
    let target = || zone.clone().unwrap_or_else(|| ALL_ZONES.to_string());
    let number = toks.iter().find_map(|t| match t {
        Tok::Num { value, unit } => Some((*value, *unit)),
        Tok::Word(_) => None,
    });

    let Some(verb) = verb else {
        return Err(missing("verb"));
    };
    if verb == "activate" {
        if !leftover.is_empty() {
            return Err(ParseError::UnknownScene {
                name: leftover.join(" "),
            });
        }
        return scene
            .map(|scene| Intent::ActivateScene { scene })
            .ok_or_else(|| missing("scene"));
    }
    if !leftover.is_empty() {
        return Err(unknown_room());
    }
    let after = &words[verb_at.unwrap_or(0)..];
    match verb {
        "turn" | "switch" => {
            let on = words.iter().position(|w| *w == "on");
            let off = words.iter().position(|w| *w == "off");
            let zone = target();
            match (on, off) {
                (Some(a), Some(b)) if b < a => Ok(Intent::TurnOff { zone }),
                (Some(_), _) => Ok(Intent::TurnOn { zone }),
                (None, Some(_)) => Ok(Intent::TurnOff { zone }),
                (None, None) => Err(missing("on_off")),
            }
        }
        "dim" | "brighten" => match number {
            Some((value, None | Some(Unit::Percent))) => Ok(Intent::SetBrightness {
                zone: target(),
                pct: round_pct(value)?,
            }),
            _ => Err(missing("brightness")),
        },
        "set" => {
            if after.contains(&"warmer") || after.contains(&"cooler") {
                let kelvin = if after.contains(&"warmer") {
                    CCT_BINS[0]
                } else {
                    CCT_BINS[4]
                };
                return Ok(Intent::SetColorTemp {
                    zone: target(),
                    kelvin,
                });
            }
            match number {
                Some((value, Some(Unit::Kelvin))) => Ok(Intent::SetColorTemp {
                    zone: target(),
                    kelvin: snap_kelvin(value)?,
                }),
                Some((value, None)) if value > 100 => Ok(Intent::SetColorTemp {
                    zone: target(),
                    kelvin: snap_kelvin(value)?,
                }),
                Some((value, _)) => Ok(Intent::SetBrightness {
                    zone: target(),
                    pct: round_pct(value)?,
                }),
                None => Err(missing("value")),
            }
        }
        "warmer" | "cooler" => Ok(Intent::SetColorTemp {
            zone: target(),
            kelvin: if verb == "warmer" {
                CCT_BINS[0]
            } else {
                CCT_BINS[4]
            },
        }),
        _ => Ok(Intent::QueryState { zone }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::home::HomeConfig;
    use proptest::prelude::*;

    fn lex_family() -> Lexicon {
        let cfg = HomeConfig::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/configs/family_4zone.json"
        ))
        .unwrap();
        Lexicon::from_config(&cfg)
    }

    fn p(text: &str) -> Result<Intent, ParseError> {
        parse_command(text, &lex_family())
    }

    fn z(name: &str) -> String {
        name.to_string()
    }

    #[test]
    fn command_patterns() {
        assert_eq!(
            p("Turn on kitchen lights"),
            Ok(Intent::TurnOn { zone: z("kitchen") })
        );
        assert_eq!(
            p("Dim to 40%"),
            Ok(Intent::SetBrightness {
                zone: z("all"),
                pct: 40
            })
        );
        assert_eq!(
            p("dim to 37%"),
            Ok(Intent::SetBrightness {
                zone: z("all"),
                pct: 40
            })
        );
        assert_eq!(
            p("Activate movie"),
            Ok(Intent::ActivateScene { scene: z("movie") })
        );
        assert_eq!(
            p("turn the lounge lights off"),
            Ok(Intent::TurnOff {
                zone: z("living room")
            })
        );
        assert_eq!(
            p("set the master bedroom to 3000K"),
            Ok(Intent::SetColorTemp {
                zone: z("bedroom"),
                kelvin: 2700
            })
        );
        assert_eq!(
            p("please set bathroom brightness to seventy percent"),
            Ok(Intent::SetBrightness {
                zone: z("bathroom"),
                pct: 70
            })
        );
        assert_eq!(
            p("set kitchen to six thousand five hundred kelvin"),
            Ok(Intent::SetColorTemp {
                zone: z("kitchen"),
                kelvin: 6500
            })
        );
        assert_eq!(
            p("make the kitchen warmer"),
            Ok(Intent::SetColorTemp {
                zone: z("kitchen"),
                kelvin: 2700
            })
        );
        assert_eq!(
            p("cooler"),
            Ok(Intent::SetColorTemp {
                zone: z("all"),
                kelvin: 6500
            })
        );
        assert_eq!(p("status"), Ok(Intent::QueryState { zone: None }));
        assert_eq!(
            p("what is the bedroom status?"),
            Ok(Intent::QueryState {
                zone: Some(z("bedroom"))
            })
        );
        assert_eq!(
            p("Turn off all lights"),
            Ok(Intent::TurnOff { zone: z("all") })
        );
    }

    #[test]
    fn structured_errors() {
        assert_eq!(
            p("Turn on spaceship lights"),
            Err(ParseError::UnknownRoom {
                name: z("spaceship")
            })
        );
        assert_eq!(p("do the thing").unwrap_err().slot(), "verb");
        assert_eq!(p("dim the kitchen").unwrap_err().slot(), "brightness");
        assert_eq!(p("activate").unwrap_err().slot(), "scene");
        assert_eq!(
            p("activate disco").unwrap_err(),
            ParseError::UnknownScene { name: z("disco") }
        );
        assert_eq!(
            p("dim to 140%"),
            Err(ParseError::OutOfRange {
                slot: z("brightness"),
                value: 140
            })
        );
        assert_eq!(p("set kitchen to 9000k").unwrap_err().slot(), "color_temp");
        assert_eq!(p("turn kitchen").unwrap_err().slot(), "on_off");
        assert_eq!(p("  ?!  "), Err(ParseError::Empty));
        assert_eq!(
            p("set kitchen to 99999999999999999999999%")
                .unwrap_err()
                .slot(),
            "brightness"
        );
    }

    #[test]
    fn normalization() {
        assert_eq!(
            normalize("Set 2700K, now!"),
            vec!["set", "2700", "k", "now"]
        );
        assert_eq!(normalize("40%"), vec!["40", "%"]);
        assert_eq!(
            lex("twenty seven hundred kelvin"),
            vec![Tok::Num {
                value: 2700,
                unit: Some(Unit::Kelvin)
            }]
        );
        assert_eq!(
            lex("forty five"),
            vec![Tok::Num {
                value: 45,
                unit: None
            }]
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn never_panics_on_arbitrary_text(s in any::<String>()) {
            let lex = lex_family();
            let a = parse_command(&s, &lex);
            prop_assert_eq!(a, parse_command(&s, &lex));
        }

        #[test]
        fn never_panics_on_grammar_soup(words in proptest::collection::vec(
            prop_oneof![
                Just("turn"), Just("on"), Just("off"), Just("dim"), Just("to"), Just("set"),
                Just("activate"), Just("kitchen"), Just("%"), Just("k"), Just("thousand"),
                Just("hundred"), Just("99999999999999999999"), Just("40"), Just("status"),
                Just("warmer"), Just("all"), Just("movie"), Just("zzz")
            ], 0..12)) {
            let _ = parse_command(&words.join(" "), &lex_family());
        }

        #[test]
        fn brightness_rounds_to_grid(v in 0u64..=100) {
            match p(&format!("dim kitchen to {v}%")) {
                Ok(Intent::SetBrightness { pct, .. }) => {
                    prop_assert_eq!(pct % 10, 0);
                    prop_assert!((i64::from(pct) - v as i64).abs() <= 5);
                }
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }
}
