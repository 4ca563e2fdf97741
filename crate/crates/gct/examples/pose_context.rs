//! Build body-configuration descriptors from 14-joint skeletons and compare
//! them: the descriptor is invariant to translation and uniform scale but
//! responds to actual articulation changes.
//!
//! Run with: `cargo run -p gct --example pose_context`

use gct::pose::{
    compute_pose_context, pose_similarity, pose_similarity_parts, JointSet, N_JOINTS,
};
use gct::synth::{render_view, IdentityParams, SynthOptions};

fn translated(js: &JointSet, dx: f64, dy: f64) -> JointSet {
    let mut out = js.clone();
    for c in out.coords.iter_mut() {
        c.0 += dx;
        c.1 += dy;
    }
    out
}

fn scaled(js: &JointSet, s: f64) -> JointSet {
    let mut out = js.clone();
    for c in out.coords.iter_mut() {
        c.0 *= s;
        c.1 *= s;
    }
    out
}

fn main() -> gct::Result<()> {
    let opts = SynthOptions { n_identities: 2, shift_max: 24, seed: 9 };
    let a = IdentityParams::seeded(opts.seed, 0, opts.shift_max);
    let b = IdentityParams::seeded(opts.seed, 1, opts.shift_max);
    let pose_a = render_view(&a, 0, &opts, 0).joints;
    let pose_a2 = render_view(&a, 1, &opts, 0).joints;
    let pose_b = render_view(&b, 1, &opts, 1).joints;
    println!("skeletons carry {N_JOINTS} joints");

    let bins = 8;
    let ctx_a = compute_pose_context(&pose_a, bins)?;
    let ctx_a2 = compute_pose_context(&pose_a2, bins)?;
    let ctx_b = compute_pose_context(&pose_b, bins)?;

    let (s_mag, s_ang) = pose_similarity_parts(&ctx_a, &ctx_a2)?;
    println!("same person, two views: magnitude {s_mag:.4}, angle {s_ang:.4}");
    println!("  combined similarity {:.4}", pose_similarity(&ctx_a, &ctx_a2)?);
    println!(
        "different people:      combined similarity {:.4}",
        pose_similarity(&ctx_a, &ctx_b)?
    );

    // The descriptor ignores where the body stands and how large it is.
    let moved = compute_pose_context(&translated(&pose_a, 37.0, -12.0), bins)?;
    let zoomed = compute_pose_context(&scaled(&pose_a, 2.5), bins)?;
    println!(
        "translation invariance: {} / scale invariance: {}",
        pose_similarity(&ctx_a, &moved)? == 1.0,
        pose_similarity(&ctx_a, &zoomed)? == 1.0,
    );
    Ok(())
}
