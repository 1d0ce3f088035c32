//! Fuzzy matching of operator utterances against the command vocabulary.

use agrobot::command::{match_utterance, Utterance, Vocabulary};

fn main() {
    let vocab = Vocabulary::default_vocabulary();
    for text in ["pick the orange", "pick the oranje", "put the bananas on the tray", "grab seedling", "home", "hello there"] {
        match match_utterance(&vocab, &Utterance::from_text(text), 3) {
            Ok(candidates) => {
                println!("{text:?}");
                for c in candidates {
                    println!("  {:.3}  {:?}", c.score, c.action);
                }
            }
            Err(e) => println!("{text:?}: {}", e.name()),
        }
    }
}
