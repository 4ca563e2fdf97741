//! The on-disk interchange formats: a JSON manifest pointing at PPM images
//! or binary patch-feature files, and the JSON template store. Everything
//! written is byte-stable, so re-running a seeded pipeline reproduces
//! identical artifacts.
//!
//! Run with: `cargo run -p gct --example dataset_io`

use gct::eval::training_pairs;
use gct::io::gctf::{read_gctf, write_gctf};
use gct::io::manifest::{Manifest, ManifestEntry};
use gct::io::store::{load_store, save_store};
use gct::synth::{generate_dataset, SynthOptions};
use gct::transfer::build_template_store;
use gct::{Config, Dataset};

fn main() -> gct::Result<()> {
    let cfg = Config::default();
    let dir = std::env::temp_dir().join("gct_dataset_io_example");
    std::fs::create_dir_all(&dir)?;

    // Synthesize a small dataset on disk: images/*.ppm + manifest.json.
    let opts = SynthOptions { n_identities: 4, shift_max: 24, seed: 3 };
    let manifest_path = generate_dataset(&dir, &opts)?;
    let ds = Dataset::load(&manifest_path, &cfg)?;
    println!("loaded {} images of {} identities", ds.len(), ds.identities().len());

    // Export one image's patch features to the binary format and read
    // them back; a manifest entry can reference such a file directly in
    // place of pixels (image_size then provides the grid geometry). The
    // format stores 32-bit floats, so the round trip quantizes slightly.
    let entry = &ds.entries[0];
    let feat_path = dir.join("probe.gctf");
    write_gctf(&entry.graph.features, &feat_path)?;
    let features = read_gctf(&feat_path)?;
    let max_err = features
        .iter()
        .zip(&entry.graph.features)
        .map(|(a, b)| (a - b).abs().max())
        .fold(0.0, f64::max);
    println!(
        "feature file: {} patches x {} dims, max round-trip error {max_err:.2e}",
        features.len(),
        features[0].len(),
    );
    let feature_entry = ManifestEntry {
        image_id: "probe_features".into(),
        identity: entry.identity.clone(),
        camera: 0,
        pixels_path: None,
        features_path: Some("probe.gctf".into()),
        image_size: Some([entry.graph.layout.image_w, entry.graph.layout.image_h]),
        joints: None,
    };
    let manifest = Manifest { entries: vec![feature_entry] };
    manifest.save(&dir.join("features_manifest.json"))?;
    let fds = Dataset::load(&dir.join("features_manifest.json"), &cfg)?;
    println!(
        "feature-backed manifest lays out the same grid: {}",
        fds.entries[0].graph.layout.same_grid(&entry.graph.layout)
    );

    // Template stores persist as JSON and reload byte-identically.
    let ids: Vec<String> = ds.identities().iter().map(|s| s.to_string()).collect();
    let store = build_template_store(&training_pairs(&ds, &ids)?, &cfg, 0)?;
    let store_path = dir.join("store.json");
    save_store(&store, &store_path)?;
    let reloaded = load_store(&store_path)?;
    let again = dir.join("store2.json");
    save_store(&reloaded, &again)?;
    println!(
        "store save/load/save is byte-identical: {}",
        std::fs::read(&store_path)? == std::fs::read(&again)?
    );
    Ok(())
}
