//! Build a correspondence-template store from synthetic training pairs,
//! then score a positive and a negative test pair two ways: transferring
//! every selected reference template in full, and collapsing the
//! references into a cheap voted ensemble. The ensemble needs a fraction
//! of the patch-metric evaluations.
//!
//! Run with: `cargo run -p gct --example template_ensemble`

use gct::eval::training_pairs;
use gct::synth::{in_memory_dataset, SynthOptions};
use gct::transfer::{
    build_template_store, distance_ensemble, distance_full, ensemble_templates,
    select_references,
};
use gct::Config;

fn main() -> gct::Result<()> {
    let cfg = Config::default();
    let opts = SynthOptions { n_identities: 10, shift_max: 24, seed: 21 };
    let ds = in_memory_dataset(&opts, &cfg)?;

    // Train templates on the first six identities.
    let train_ids: Vec<String> =
        ds.identities().iter().take(6).map(|s| s.to_string()).collect();
    let pairs = training_pairs(&ds, &train_ids)?;
    let store = build_template_store(&pairs, &cfg, 7)?;
    println!(
        "store: {} templates over {} patches",
        store.templates.len(),
        store.n_patches()
    );

    // Score a held-out positive pair (two views of identity 7) and a
    // negative pair (identity 7 against identity 8).
    let probe = &ds.entries[ds.entries_of("id007")[0]];
    let same = &ds.entries[ds.entries_of("id007")[1]];
    let other = &ds.entries[ds.entries_of("id008")[1]];

    let (r, k) = (4, cfg.transfer.k);
    for (label, gallery) in [("same person", same), ("different person", other)] {
        let refs = select_references(
            &store,
            probe.pose.as_ref().unwrap(),
            gallery.pose.as_ref().unwrap(),
            r,
        )?;
        let chosen: Vec<_> = refs.iter().map(|&i| &store.templates[i]).collect();
        let full = distance_full(&probe.graph, &gallery.graph, &chosen, &store.metric)?;
        let compact =
            ensemble_templates(&chosen, &probe.graph.layout, &gallery.graph.layout, k)?;
        let voted = distance_ensemble(&probe.graph, &gallery.graph, &compact, &store.metric)?;
        println!(
            "{label:>16}: full {:8.2} ({} evals)  ensemble {:8.2} ({} evals)",
            full.distance, full.delta_evals, voted.distance, voted.delta_evals
        );
    }

    // Peek at what the vote produced for the positive pair.
    let refs = select_references(
        &store,
        probe.pose.as_ref().unwrap(),
        same.pose.as_ref().unwrap(),
        r,
    )?;
    let chosen: Vec<_> = refs.iter().map(|&i| &store.templates[i]).collect();
    let compact =
        ensemble_templates(&chosen, &probe.graph.layout, &same.graph.layout, k)?;
    println!(
        "voted candidates for probe patches 0..4: {:?}",
        &compact.indices[0..4]
    );
    Ok(())
}
