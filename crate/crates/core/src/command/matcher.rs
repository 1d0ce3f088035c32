use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::vocabulary::normalize;
use super::{CommandError, Verb, Vocabulary};

/// Candidates scoring below this are dropped.
pub const DEFAULT_MIN_SCORE: f64 = 0.5;

/// Edit distance over Unicode scalar values (insert, delete, substitute).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 − lev(a, b) / max(|a|, |b|)`; two empty strings are identical.
pub fn similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Operator input as an ordered token list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Utterance {
    pub tokens: Vec<String>,
}

impl Utterance {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            tokens: tokens
                .into_iter()
                .map(|t| normalize(t.as_ref()))
                .filter(|t| !t.is_empty())
                .collect(),
        }
    }

    /// Splits on whitespace, lowercases and strips surrounding punctuation
    /// (ASCII and CJK full-width).
    pub fn from_text(text: &str) -> Self {
        let strip = |c: char| c.is_ascii_punctuation() || "，。！？、；：“”‘’（）".contains(c);
        Self::new(text.split_whitespace().map(|t| t.trim_matches(strip)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionRequest {
    pub verb: Verb,
    pub target_class: Option<String>,
    pub drop_zone: Option<String>,
}

impl ActionRequest {
    pub fn new(verb: Verb, target_class: Option<&str>) -> Self {
        Self {
            verb,
            target_class: target_class.map(str::to_string),
            drop_zone: None,
        }
    }

    /// Pick and place carry a target; home and stop carry none.
    pub fn is_well_formed(&self) -> bool {
        self.verb.needs_target() == self.target_class.is_some()
    }
}

/// One n-best entry together with the vocabulary forms that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandMatch {
    pub action: ActionRequest,
    pub score: f64,
    pub verb_form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_form: Option<String>,
}

impl CommandMatch {
    fn surface_key(&self) -> (&str, Option<&str>, Option<&str>) {
        (&self.verb_form, self.object_form.as_deref(), self.zone_form.as_deref())
    }
}

/// Best token for `form`, skipping `exclude`: `(similarity, token index)`.
/// Ties go to the earliest token.
fn best_token(tokens: &[&str], form: &str, exclude: &[usize]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, tok) in tokens.iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        let s = similarity(tok, form);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, i));
        }
    }
    best
}

/// [`match_utterance_with`] at [`DEFAULT_MIN_SCORE`].
pub fn match_utterance(
    vocab: &Vocabulary,
    utterance: &Utterance,
    n: usize,
) -> Result<Vec<CommandMatch>, CommandError> {
    match_utterance_with(vocab, utterance, n, DEFAULT_MIN_SCORE)
}

/// Returns up to `n` candidate actions, best first.
///
/// Each verb surface form is paired with its most similar token; targeted
/// verbs then pair every object form with its most similar remaining token,
/// and the score is the product of the two similarities. A zone form whose
/// best unused token clears `min_score` is attached and multiplied in. Each
/// distinct action keeps its best-scoring derivation. Ties are ordered by
/// the surface forms involved.
pub fn match_utterance_with(
    vocab: &Vocabulary,
    utterance: &Utterance,
    n: usize,
    min_score: f64,
) -> Result<Vec<CommandMatch>, CommandError> {
    if n == 0 {
        return Err(CommandError::InvalidCount);
    }
    let tokens: Vec<&str> = utterance
        .tokens
        .iter()
        .map(String::as_str)
        .filter(|t| !vocab.stop_words.contains(*t))
        .collect();
    let text = utterance.tokens.join(" ");

    let mut candidates: Vec<CommandMatch> = Vec::new();
    let mut any_verb = false;
    for (verb_form, &verb) in &vocab.verbs {
        let Some((verb_sim, verb_tok)) = best_token(&tokens, verb_form, &[]) else {
            continue;
        };
        if verb_sim < min_score {
            continue;
        }
        any_verb = true;
        if !verb.needs_target() {
            candidates.push(CommandMatch {
                action: ActionRequest::new(verb, None),
                score: verb_sim,
                verb_form: verb_form.clone(),
                object_form: None,
                zone_form: None,
            });
            continue;
        }
        for (object_form, class) in &vocab.objects {
            let Some((obj_sim, obj_tok)) = best_token(&tokens, object_form, &[verb_tok]) else {
                continue;
            };
            let mut m = CommandMatch {
                action: ActionRequest::new(verb, Some(class)),
                score: verb_sim * obj_sim,
                verb_form: verb_form.clone(),
                object_form: Some(object_form.clone()),
                zone_form: None,
            };
            let mut zone: Option<(f64, &String, &String)> = None;
            for (zone_form, zone_id) in &vocab.zones {
                if let Some((s, _)) = best_token(&tokens, zone_form, &[verb_tok, obj_tok]) {
                    if s >= min_score && zone.is_none_or(|(b, _, _)| s > b) {
                        zone = Some((s, zone_form, zone_id));
                    }
                }
            }
            if let Some((s, form, id)) = zone {
                m.score *= s;
                m.action.drop_zone = Some(id.clone());
                m.zone_form = Some(form.clone());
            }
            candidates.push(m);
        }
    }
    if !any_verb {
        return Err(CommandError::NoVerbFound(text));
    }

    candidates.retain(|m| m.score >= min_score);
    let rank = |a: &CommandMatch, b: &CommandMatch| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.surface_key().cmp(&b.surface_key()))
    };
    candidates.sort_by(rank);
    let mut seen = BTreeSet::new();
    candidates.retain(|m| seen.insert(m.action.clone()));
    if candidates.is_empty() {
        return Err(CommandError::NoMatch(text));
    }
    candidates.truncate(n);
    Ok(candidates)
}

/// Validates a matched action against the classes currently in the scene.
pub fn map_to_action(
    m: &CommandMatch,
    scene_classes: &BTreeSet<String>,
) -> Result<ActionRequest, CommandError> {
    if let Some(class) = &m.action.target_class {
        if !scene_classes.contains(class) {
            return Err(CommandError::TargetAbsent(class.clone()));
        }
    }
    Ok(m.action.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::load_vocabulary;
    use proptest::prelude::*;

    fn default_vocab() -> Vocabulary {
        Vocabulary::default_vocabulary()
    }

    fn top(text: &str) -> CommandMatch {
        match_utterance(&default_vocab(), &Utterance::from_text(text), 3).unwrap()[0].clone()
    }

    /// Full-matrix textbook recurrence.
    fn lev_oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("orange", "oranje"), 1);
        assert_eq!(levenshtein("橙子", "橘子"), 1);
        assert_eq!(similarity("", ""), 1.0);
        assert_eq!(similarity("orange", "oranje"), 5.0 / 6.0);
    }

    #[test]
    fn exact_command() {
        let m = top("pick the orange");
        assert_eq!(m.action, ActionRequest::new(Verb::Pick, Some("orange")));
        assert_eq!(m.score, 1.0);
    }

    #[test]
    fn misrecognized_object() {
        let m = top("pick the oranje");
        assert_eq!(m.action, ActionRequest::new(Verb::Pick, Some("orange")));
        assert!((m.score - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn no_verb() {
        let err = match_utterance(&default_vocab(), &Utterance::from_text("hello world"), 3).unwrap_err();
        assert_eq!(err.name(), "NoVerbFound");
        let err = match_utterance(&default_vocab(), &Utterance::from_text("the the"), 3).unwrap_err();
        assert_eq!(err.name(), "NoVerbFound");
    }

    #[test]
    fn verb_without_object_is_no_match() {
        let err = match_utterance(&default_vocab(), &Utterance::from_text("pick"), 3).unwrap_err();
        assert_eq!(err.name(), "NoMatch");
        let err = match_utterance(&default_vocab(), &Utterance::from_text("pick durian"), 3).unwrap_err();
        assert_eq!(err.name(), "NoMatch");
    }

    #[test]
    fn targetless_verbs() {
        assert_eq!(top("home").action, ActionRequest::new(Verb::Home, None));
        assert_eq!(top("Stop!").action, ActionRequest::new(Verb::Stop, None));
        assert_eq!(top("please reset").action, ActionRequest::new(Verb::Home, None));
    }

    #[test]
    fn token_order_is_free() {
        assert_eq!(top("orange pick").action, top("pick orange").action);
    }

    #[test]
    fn plurals_and_synonyms() {
        assert_eq!(top("grab two apples").action, ActionRequest::new(Verb::Pick, Some("apple")));
        assert_eq!(top("take a banana").score, 1.0);
    }

    #[test]
    fn drop_zone_attaches() {
        let m = top("put the seed into the tray");
        assert_eq!(m.action.verb, Verb::Place);
        assert_eq!(m.action.target_class.as_deref(), Some("seed"));
        assert_eq!(m.action.drop_zone.as_deref(), Some("tray"));
        assert_eq!(m.score, 1.0);
    }

    #[test]
    fn mandarin_aliases() {
        let m = top("请 拿起 橙子");
        assert_eq!(m.action, ActionRequest::new(Verb::Pick, Some("orange")));
        assert_eq!(m.score, 1.0);
        assert_eq!(top("停止").action.verb, Verb::Stop);
    }

    #[test]
    fn n_best_is_sorted_and_bounded() {
        let v = default_vocab();
        let u = Utterance::from_text("pick the aple");
        let list = match_utterance(&v, &u, 10).unwrap();
        assert!(list.len() <= 10);
        for w in list.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        assert_eq!(list[0].action.target_class.as_deref(), Some("apple"));
        assert_eq!(match_utterance(&v, &u, 1).unwrap().len(), 1);
        assert_eq!(match_utterance(&v, &u, 0).unwrap_err(), CommandError::InvalidCount);
    }

    #[test]
    fn min_score_is_configurable() {
        let v = default_vocab();
        let u = Utterance::from_text("pick the oranje");
        assert!(match_utterance_with(&v, &u, 3, 0.9).is_err());
        assert!(match_utterance_with(&v, &u, 3, 0.8).is_ok());
    }

    #[test]
    fn mapping_against_scene() {
        let scene: BTreeSet<String> = ["orange", "apple"].map(String::from).into();
        assert_eq!(
            map_to_action(&top("pick the orange"), &scene).unwrap(),
            ActionRequest::new(Verb::Pick, Some("orange"))
        );
        assert_eq!(
            map_to_action(&top("pick the banana"), &scene).unwrap_err(),
            CommandError::TargetAbsent("banana".into())
        );
        assert_eq!(
            map_to_action(&top("home"), &BTreeSet::new()).unwrap(),
            ActionRequest::new(Verb::Home, None)
        );
    }

    #[test]
    fn matches_are_well_formed() {
        for text in ["pick the orange", "home", "put seeds in bin", "stop", "grab banan"] {
            for m in match_utterance(&default_vocab(), &Utterance::from_text(text), 5).unwrap() {
                assert!(m.action.is_well_formed(), "{m:?}");
                assert!((0.0..=1.0).contains(&m.score));
            }
        }
    }

    #[test]
    fn custom_vocabulary() {
        let v = load_vocabulary("[verbs]\nfetch = pick\n[objects]\ntomato = tomato\n").unwrap();
        let m = &match_utterance(&v, &Utterance::from_text("fetch tomato"), 1).unwrap()[0];
        assert_eq!(m.action, ActionRequest::new(Verb::Pick, Some("tomato")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn levenshtein_matches_oracle(a in "[a-d橙子]{0,12}", b in "[a-d橙子]{0,12}") {
            prop_assert_eq!(levenshtein(&a, &b), lev_oracle(&a, &b));
        }
    }

    proptest! {
        #[test]
        fn stop_words_never_change_matches(
            base in proptest::sample::select(vec!["pick the orange", "grab aple", "home", "put seed in tray", "hello", "stop"]),
            extra in proptest::collection::vec(proptest::sample::select(vec!["the", "a", "please", "up", "了"]), 1..5),
        ) {
            let v = default_vocab();
            let u = Utterance::from_text(base);
            let mut longer = u.clone();
            longer.tokens.extend(extra.iter().map(|s| s.to_string()));
            let a = match_utterance(&v, &u, 5);
            let b = match_utterance(&v, &longer, 5);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(a), Err(b)) => prop_assert_eq!(a.name(), b.name()),
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }

        #[test]
        fn matching_is_deterministic(text in "[a-z ]{0,24}") {
            let v = default_vocab();
            let u = Utterance::from_text(&text);
            let a = match_utterance(&v, &u, 4).map_err(|e| e.name());
            let b = match_utterance(&v, &u, 4).map_err(|e| e.name());
            prop_assert_eq!(a, b);
        }
    }
}
