//! Decompose an image into its dense patch grid and inspect the resulting
//! attributed graph: node count, stripe spans, normalized centers, and
//! feature dimensionality.
//!
//! Run with: `cargo run -p gct --example patch_grid`

use gct::graph::AttributedGraph;
use gct::synth::{render_view, IdentityParams, SynthOptions};
use gct::{Config, PatchLayout};

fn main() -> gct::Result<()> {
    let cfg = Config::default();

    // Render one deterministic synthetic pedestrian (48x128 RGB).
    let opts = SynthOptions { n_identities: 2, shift_max: 24, seed: 11 };
    let params = IdentityParams::seeded(opts.seed, 0, opts.shift_max);
    let view = render_view(&params, 0, &opts, 0);
    let img = &view.image;
    println!("image: {}x{} pixels", img.width, img.height);

    let layout = PatchLayout::from_config(&cfg.patch, img.width, img.height)?;
    println!(
        "patch grid: {} rows x {} cols = {} patches ({}x{} px, stride {}x{})",
        layout.n_rows,
        layout.n_cols,
        layout.n_patches(),
        layout.patch_w,
        layout.patch_h,
        layout.stride_w,
        layout.stride_h,
    );
    for s in 0..layout.n_stripes {
        let (first, last) = layout.stripe_rows(s)?;
        println!("  stripe {s}: patch rows {first}..={last}");
    }

    let graph = AttributedGraph::from_image(img, layout, cfg.features.bins_per_channel)?;
    println!(
        "graph: {} nodes, {}-dim unit features",
        graph.n_nodes(),
        graph.feature_dim()
    );
    for i in [0, graph.n_nodes() / 2, graph.n_nodes() - 1] {
        let (x, y) = graph.positions[i];
        let norm = graph.features[i].norm();
        println!("  node {i:>2}: center ({x:.3}, {y:.3}) |feature| = {norm:.3}");
    }
    Ok(())
}
