use std::collections::HashMap;

/// Words never used as (or inside) an entity phrase.
pub const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as",
    "at", "be", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could",
    "did", "do", "does", "doing", "down", "during", "each", "even", "few", "for", "from",
    "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how",
    "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
    "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "out",
    "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "them", "then", "there", "these", "they", "this", "those", "through", "to", "too", "under",
    "until", "up", "very", "was", "we", "well", "were", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "would", "you", "your",
];

const MAX_PHRASE_TOKENS: usize = 3;

fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.binary_search(&token).is_ok()
}

/// Runs of consecutive content tokens; punctuation and stop words split runs.
fn segments(document: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut token = String::new();

    let flush_token = |token: &mut String, current: &mut Vec<String>, out: &mut Vec<Vec<String>>| {
        if token.is_empty() {
            return;
        }
        let t = std::mem::take(token);
        if t.chars().count() < 2 || is_stop_word(&t) {
            if !current.is_empty() {
                out.push(std::mem::take(current));
            }
        } else {
            current.push(t);
        }
    };

    for c in document.chars() {
        if c.is_alphanumeric() {
            token.extend(c.to_lowercase());
        } else {
            flush_token(&mut token, &mut current, &mut out);
            if !c.is_whitespace() && !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        }
    }
    flush_token(&mut token, &mut current, &mut out);
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Frequency-based stand-in for an entity linker.
///
/// Candidates are 1–3 token phrases of consecutive non-stop-word tokens
/// (tokens shorter than two characters count as stop words). A phrase's
/// score is its count divided by the count of the most frequent phrase, so
/// the top phrase scores 1.0. Results with `score >= threshold` are returned
/// by descending score, then phrase.
pub fn heuristic_entities(document: &str, threshold: f64) -> Vec<(String, f64)> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for seg in segments(document) {
        for n in 1..=MAX_PHRASE_TOKENS.min(seg.len()) {
            for window in seg.windows(n) {
                *counts.entry(window.join(" ")).or_default() += 1;
            }
        }
    }
    let Some(&max) = counts.values().max() else {
        return Vec::new();
    };
    let mut scored: Vec<(String, f64)> = counts
        .into_iter()
        .map(|(phrase, c)| (phrase, c as f64 / max as f64))
        .filter(|(_, s)| *s >= threshold)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Applies [`heuristic_entities`] to every document, producing
/// `(item_id, entity, score)` annotations ready for ingestion.
pub fn extract_corpus_entities<'a>(
    documents: impl IntoIterator<Item = (&'a str, &'a str)>,
    threshold: f64,
) -> Vec<(String, String, f64)> {
    documents
        .into_iter()
        .flat_map(|(item_id, doc)| {
            heuristic_entities(doc, threshold)
                .into_iter()
                .map(move |(e, s)| (item_id.to_string(), e, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_words_are_sorted_for_binary_search() {
        assert!(STOP_WORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn frequent_phrase_scores_higher() {
        let scored = heuristic_entities("soft cotton towel, cotton blend", 0.0);
        let score = |p: &str| scored.iter().find(|(e, _)| e == p).unwrap().1;
        assert_eq!(score("cotton"), 1.0);
        assert!(score("cotton") > score("towel"));
        assert_eq!(score("soft cotton towel"), 0.5);
        // punctuation splits phrases
        assert!(scored.iter().all(|(e, _)| e != "towel cotton"));
    }

    #[test]
    fn only_stop_words_yields_nothing() {
        assert!(heuristic_entities("the and of it is a", 0.1).is_empty());
        assert!(heuristic_entities("", 0.1).is_empty());
    }

    #[test]
    fn deterministic() {
        let doc = "Stainless steel pan. Steel handle, steel lid, glass lid.";
        assert_eq!(heuristic_entities(doc, 0.1), heuristic_entities(doc, 0.1));
    }

    // Hand-tallied phrase counts for a fixed five-document toy corpus.
    #[test]
    fn toy_corpus_matches_hand_counts() {
        let docs = [
            ("d1", "Cotton towel. Soft cotton."),
            ("d2", "Beach towel for the beach"),
            ("d3", "Dog bowl, dog leash, dog toy"),
            ("d4", "Non-stick pan"),
            ("d5", "The and of"),
        ];
        // d1 segments: [cotton towel] [soft cotton]
        //   cotton 2, towel 1, cotton towel 1, soft 1, soft cotton 1
        let d1 = heuristic_entities(docs[0].1, 0.0);
        assert_eq!(
            d1,
            vec![
                ("cotton".to_string(), 1.0),
                ("cotton towel".to_string(), 0.5),
                ("soft".to_string(), 0.5),
                ("soft cotton".to_string(), 0.5),
                ("towel".to_string(), 0.5),
            ]
        );
        // d2 segments: [beach towel] [beach]  ("for", "the" are stop words)
        let d2 = heuristic_entities(docs[1].1, 0.0);
        assert_eq!(
            d2,
            vec![
                ("beach".to_string(), 1.0),
                ("beach towel".to_string(), 0.5),
                ("towel".to_string(), 0.5),
            ]
        );
        // d3: dog 3, bowl 1, leash 1, toy 1, dog bowl/leash/toy 1 each
        let d3 = heuristic_entities(docs[2].1, 0.34);
        assert_eq!(d3, vec![("dog".to_string(), 1.0)]);
        // d4: "-" splits "non" and "stick"
        let d4 = heuristic_entities(docs[3].1, 0.0);
        assert_eq!(
            d4,
            vec![
                ("non".to_string(), 1.0),
                ("pan".to_string(), 1.0),
                ("stick".to_string(), 1.0),
                ("stick pan".to_string(), 1.0),
            ]
        );
        assert!(heuristic_entities(docs[4].1, 0.0).is_empty());

        let all = extract_corpus_entities(docs.iter().copied(), 0.6);
        let ids: Vec<(&str, &str)> = all.iter().map(|(i, e, _)| (i.as_str(), e.as_str())).collect();
        assert_eq!(
            ids,
            vec![
                ("d1", "cotton"),
                ("d2", "beach"),
                ("d3", "dog"),
                ("d4", "non"),
                ("d4", "pan"),
                ("d4", "stick"),
                ("d4", "stick pan"),
            ]
        );
    }
}
