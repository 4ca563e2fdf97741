//! Solve the spatially constrained patch matching between two views of the
//! same synthetic person and show how the recovered correspondences track
//! the vertical shift between the views.
//!
//! Run with: `cargo run -p gct --example pair_matching`

use gct::graph::AttributedGraph;
use gct::synth::{render_view, IdentityParams, SynthOptions};
use gct::{match_image_pair, Config, PatchLayout};

fn main() -> gct::Result<()> {
    let cfg = Config::default();
    let opts = SynthOptions { n_identities: 2, shift_max: 24, seed: 4 };
    let params = IdentityParams::seeded(opts.seed, 0, opts.shift_max);
    let probe_view = render_view(&params, 0, &opts, 0);
    let gallery_view = render_view(&params, 1, &opts, 0);
    println!(
        "gallery view is shifted down {} px (stride rows are {} px)",
        params.shift, cfg.patch.stride_h
    );

    let layout = PatchLayout::from_config(
        &cfg.patch,
        probe_view.image.width,
        probe_view.image.height,
    )?;
    let probe = AttributedGraph::from_image(
        &probe_view.image,
        layout.clone(),
        cfg.features.bins_per_channel,
    )?;
    let gallery = AttributedGraph::from_image(
        &gallery_view.image,
        layout.clone(),
        cfg.features.bins_per_channel,
    )?;

    let matches = match_image_pair(&probe, &gallery, &cfg)?;
    println!("{} correspondences (one per probe patch):", matches.len());
    let mut row_offsets = std::collections::BTreeMap::<i64, usize>::new();
    for m in &matches {
        let dr = layout.row_of(m.gallery) as i64 - layout.row_of(m.probe) as i64;
        *row_offsets.entry(dr).or_default() += 1;
    }
    for (dr, count) in &row_offsets {
        println!("  {count:>2} probe patches map {dr:+} grid rows");
    }
    println!("first few pairs (probe -> gallery node):");
    for m in matches.iter().take(6) {
        println!(
            "  {:>2} (r{} c{}) -> {:>2} (r{} c{})",
            m.probe,
            layout.row_of(m.probe),
            layout.col_of(m.probe),
            m.gallery,
            layout.row_of(m.gallery),
            layout.col_of(m.gallery),
        );
    }
    Ok(())
}
