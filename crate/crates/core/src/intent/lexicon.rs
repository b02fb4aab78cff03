use crate::home::HomeConfig;

/// Zone value addressing every zone.
pub const ALL_ZONES: &str = "all";

const ALL_PHRASES: [&str; 6] = [
    "all",
    "everywhere",
    "every room",
    "whole house",
    "entire house",
    "all rooms",
];

/// Room and scene vocabulary of one home: canonical zone names with their
/// synonyms, and scene names. Phrases are stored normalized and tokenized.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    zones: Vec<(String, Vec<Vec<String>>)>,
    scenes: Vec<(String, Vec<String>)>,
    all: Vec<Vec<String>>,
}

pub(crate) fn words(text: &str) -> Vec<String> {
    super::parse::normalize(text)
}

impl Lexicon {
    pub fn from_config(cfg: &HomeConfig) -> Self {
        let zones = cfg
            .zones
            .iter()
            .map(|z| {
                let mut phrases = vec![words(&z.name)];
                phrases.extend(z.synonyms.iter().map(|s| words(s)));
                phrases.retain(|p| !p.is_empty());
                (z.name.clone(), phrases)
            })
            .collect();
        let scenes = cfg.scenes.keys().map(|s| (s.clone(), words(s))).collect();
        Self {
            zones,
            scenes,
            all: ALL_PHRASES.iter().map(|p| words(p)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zone_names(&self) -> impl Iterator<Item = &str> {
        self.zones.iter().map(|(n, _)| n.as_str())
    }

    /// Surface forms of a zone other than its canonical name.
    pub fn synonyms(&self, zone: &str) -> Vec<String> {
        self.zones
            .iter()
            .find(|(n, _)| n == zone)
            .map(|(_, p)| p.iter().skip(1).map(|w| w.join(" ")).collect())
            .unwrap_or_default()
    }

    pub fn scene_names(&self) -> impl Iterator<Item = &str> {
        self.scenes.iter().map(|(n, _)| n.as_str())
    }

    /// Longest zone phrase starting at `tokens[at]`: `(canonical or "all", length)`.
    pub(crate) fn match_zone(&self, tokens: &[&str], at: usize) -> Option<(&str, usize)> {
        let mut best: Option<(&str, usize)> = None;
        let all = self.all.iter().map(|p| (ALL_ZONES, p));
        let named = self
            .zones
            .iter()
            .flat_map(|(n, ps)| ps.iter().map(move |p| (n.as_str(), p)));
        for (name, phrase) in all.chain(named) {
            if phrase_at(tokens, at, phrase) && best.map_or(true, |b| phrase.len() > b.1) {
                best = Some((name, phrase.len()));
            }
        }
        best
    }

    pub(crate) fn match_scene(&self, tokens: &[&str], at: usize) -> Option<(&str, usize)> {
        self.scenes
            .iter()
            .filter(|(_, p)| !p.is_empty() && phrase_at(tokens, at, p))
            .max_by_key(|(_, p)| p.len())
            .map(|(n, p)| (n.as_str(), p.len()))
    }
}

fn phrase_at(tokens: &[&str], at: usize, phrase: &[String]) -> bool {
    tokens.len() >= at + phrase.len() && phrase.iter().zip(&tokens[at..]).all(|(p, t)| p == t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_match_wins() {
        let cfg = HomeConfig::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/configs/family_4zone.json"
        ))
        .unwrap();
        let lex = Lexicon::from_config(&cfg);
        let t = ["master", "bedroom", "lights"];
        assert_eq!(lex.match_zone(&t, 0), Some(("bedroom", 2)));
        assert_eq!(lex.match_zone(&t, 1), Some(("bedroom", 1)));
        assert_eq!(lex.match_zone(&["every", "room"], 0), Some((ALL_ZONES, 2)));
        assert_eq!(lex.match_zone(&["garage"], 0), None);
        assert_eq!(lex.synonyms("living room"), vec!["lounge", "family room"]);
        assert!(lex.scene_names().any(|s| s == "movie"));
    }
}
