//! Turns raw product text into a question corpus: extracts candidate
//! entities from each document, writes the three input files, ingests them
//! and prints what questions could be asked about each item.
//!
//! cargo run -p qrec --example ingest_corpus

use std::fmt::Write as _;
use std::fs;

use qrec::corpus::extract_corpus_entities;
use qrec::dataset::IngestOptions;
use qrec::Dataset;

const ITEMS: [(&str, &str, &str); 4] = [
    ("towel", "Bath towel", "Soft cotton bath towel. Cotton loops dry fast; machine washable cotton."),
    ("pan", "Frying pan", "Nonstick frying pan with a stainless handle. Nonstick coating, oven safe pan."),
    ("mug", "Coffee mug", "Ceramic coffee mug, dishwasher safe. Ceramic glaze keeps coffee warm."),
    ("kettle", "Tea kettle", "Stainless kettle for tea. Stainless body, whistling kettle, induction ready."),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("qrec-ingest-example");
    fs::create_dir_all(&dir)?;

    let mut items = String::new();
    for (id, title, doc) in ITEMS {
        writeln!(items, "{id}\t{title}\t{doc}")?;
    }
    let annotations = extract_corpus_entities(ITEMS.iter().map(|(id, _, doc)| (*id, *doc)), 0.5);
    let mut entities = String::new();
    for (id, entity, score) in &annotations {
        writeln!(entities, "{id}\t{entity}\t{score}")?;
    }
    let mut ratings = String::new();
    for (user, liked) in [("ann", [0, 2]), ("bo", [1, 3]), ("cy", [0, 3])] {
        for d in liked {
            writeln!(ratings, "{user}\t{}\t5", ITEMS[d].0)?;
        }
    }
    fs::write(dir.join("items.tsv"), items)?;
    fs::write(dir.join("entities.tsv"), entities)?;
    fs::write(dir.join("ratings.tsv"), ratings)?;

    let options = IngestOptions {
        min_transactions: 0,
        ..Default::default()
    };
    let data = Dataset::ingest(&dir.join("items.tsv"), &dir.join("entities.tsv"), &dir.join("ratings.tsv"), options)?;
    println!("{}", data.summary());
    for (d, item) in data.corpus.items().iter().enumerate() {
        let names: Vec<&str> = data
            .corpus
            .entities_of(d)
            .iter()
            .filter_map(|&e| data.corpus.entity_name(e))
            .collect();
        println!("{:<10} {}", item.title, names.join(", "));
    }
    if let Some(e) = data.corpus.entity_name(0) {
        println!("\nfirst question in the pool: {}", qrec::render_question(e));
    }
    Ok(())
}
