use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CommandError;

/// The shipped vocabulary: English forms plus Mandarin aliases.
pub const DEFAULT_VOCABULARY: &str = include_str!("../../assets/default.vocab");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Pick,
    Place,
    Home,
    Stop,
}

impl Verb {
    pub fn needs_target(self) -> bool {
        matches!(self, Verb::Pick | Verb::Place)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Pick => "pick",
            Verb::Place => "place",
            Verb::Home => "home",
            Verb::Stop => "stop",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pick" => Ok(Verb::Pick),
            "place" => Ok(Verb::Place),
            "home" => Ok(Verb::Home),
            "stop" => Ok(Verb::Stop),
            other => Err(format!("unknown verb id {other:?}")),
        }
    }
}

/// Surface forms the matcher compares operator tokens against.
///
/// All forms are stored lowercased. Aliases are folded into the verb, object
/// or zone table of their canonical id at load time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    pub verbs: BTreeMap<String, Verb>,
    pub objects: BTreeMap<String, String>,
    pub zones: BTreeMap<String, String>,
    pub stop_words: BTreeSet<String>,
    /// Alias surface form → canonical id, as written in the file.
    pub aliases: BTreeMap<String, String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Verbs,
    Objects,
    Stop,
    Aliases,
    Zones,
}

pub(crate) fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

impl Vocabulary {
    pub fn default_vocabulary() -> Self {
        load_vocabulary(DEFAULT_VOCABULARY).expect("shipped vocabulary is valid")
    }

    pub fn object_classes(&self) -> BTreeSet<&str> {
        self.objects.values().map(String::as_str).collect()
    }

    fn is_taken(&self, form: &str) -> bool {
        self.verbs.contains_key(form)
            || self.objects.contains_key(form)
            || self.zones.contains_key(form)
            || self.stop_words.contains(form)
    }
}

/// Parses the sectioned vocabulary format:
///
/// ```text
/// [verbs]          surface = pick|place|home|stop
/// [objects]        surface = class name
/// [stop]           bare tokens, one per line
/// [aliases]        surface = any verb id, class name or zone id
/// [zones]          surface = drop zone name (optional section)
/// ```
///
/// `#` starts a comment line. `[verbs]` and `[objects]` must be nonempty.
pub fn load_vocabulary(text: &str) -> Result<Vocabulary, CommandError> {
    let mut vocab = Vocabulary::default();
    let mut section: Option<Section> = None;
    let mut pending_aliases: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| CommandError::MalformedLine {
            line: line_no,
            reason: reason.to_string(),
        };
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let s = match name.trim() {
                "verbs" => Section::Verbs,
                "objects" => Section::Objects,
                "stop" => Section::Stop,
                "aliases" => Section::Aliases,
                "zones" => Section::Zones,
                other => return Err(malformed(&format!("unknown section [{other}]"))),
            };
            section = Some(s);
            continue;
        }
        let Some(section) = section else {
            return Err(malformed("entry before any section header"));
        };
        if section == Section::Stop {
            if line.contains('=') || line.split_whitespace().count() != 1 {
                return Err(malformed("stop section takes one bare token per line"));
            }
            let form = normalize(line);
            if vocab.is_taken(&form) {
                return Err(CommandError::DuplicateSurfaceForm(form));
            }
            vocab.stop_words.insert(form);
            continue;
        }
        let Some((lhs, rhs)) = line.split_once('=') else {
            return Err(malformed("expected `surface_form = canonical_id`"));
        };
        let form = normalize(lhs);
        let id = rhs.trim().to_string();
        if form.is_empty() || id.is_empty() || form.split_whitespace().count() != 1 {
            return Err(malformed("surface form must be a single token and id nonempty"));
        }
        match section {
            Section::Aliases => {
                pending_aliases.push((line_no, form, id));
                continue;
            }
            _ if vocab.is_taken(&form) => return Err(CommandError::DuplicateSurfaceForm(form)),
            Section::Verbs => {
                let verb = id.parse::<Verb>().map_err(|e| malformed(&e))?;
                vocab.verbs.insert(form, verb);
            }
            Section::Objects => {
                vocab.objects.insert(form, id);
            }
            Section::Zones => {
                vocab.zones.insert(form, id);
            }
            Section::Stop => unreachable!("handled above"),
        }
    }

    if vocab.verbs.is_empty() {
        return Err(CommandError::EmptySection("verbs".into()));
    }
    if vocab.objects.is_empty() {
        return Err(CommandError::EmptySection("objects".into()));
    }

    for (line, form, id) in pending_aliases {
        if vocab.is_taken(&form) || vocab.aliases.contains_key(&form) {
            return Err(CommandError::DuplicateSurfaceForm(form));
        }
        if let Ok(verb) = id.parse::<Verb>() {
            if vocab.verbs.values().any(|v| *v == verb) {
                vocab.verbs.insert(form.clone(), verb);
                vocab.aliases.insert(form, id);
                continue;
            }
        }
        if vocab.objects.values().any(|c| *c == id) {
            vocab.objects.insert(form.clone(), id.clone());
        } else if vocab.zones.values().any(|z| *z == id) {
            vocab.zones.insert(form.clone(), id.clone());
        } else {
            return Err(CommandError::MalformedLine {
                line,
                reason: format!("alias target {id:?} is not a known verb, class or zone"),
            });
        }
        vocab.aliases.insert(form, id);
    }
    Ok(vocab)
}
