//! Synthetic cross-view dataset generator.
//!
//! Each identity gets a distinctive appearance (horizontal color bands
//! modulated by vertical column tints) rendered in two views: view 0 as-is
//! and view 1 with the content pushed down by a seeded vertical shift, the
//! classic cross-camera misalignment. Per-pixel color jitter differs
//! between views so the two images are never byte-equal.
//!
//! Joints come from a simple articulated skeleton whose geometry co-varies
//! with the shift — the body compresses into the remaining rows, the arms
//! swing outward, and the legs splay as the shift grows. The shift is
//! therefore readable from the body configuration alone, which is what
//! lets configuration-based reference selection find training pairs with a
//! similar misalignment.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::image::ImageBuf;
use crate::io::manifest::{Manifest, ManifestEntry};
use crate::io::ppm;
use crate::pose::{JointSet, N_JOINTS};
use crate::seed;

/// Generated image width in pixels.
pub const SYNTH_W: u32 = 48;
/// Generated image height in pixels.
pub const SYNTH_H: u32 = 128;
const BAND_H: u32 = 16;
const N_BANDS: usize = (SYNTH_H / BAND_H) as usize;
const COLUMN_W: u32 = 16;
const N_COLUMNS: usize = (SYNTH_W / COLUMN_W) as usize;
/// Per-view uniform pixel noise amplitude.
const JITTER: i32 = 8;
/// Total arm swing across the full shift range, in degrees.
const ARM_SWEEP_DEG: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub n_identities: usize,
    /// Largest vertical shift of view 1, in pixels.
    pub shift_max: u32,
    pub seed: u64,
}

/// The seeded appearance and body parameters of one identity.
#[derive(Debug, Clone)]
pub struct IdentityParams {
    band_colors: [[u8; 3]; N_BANDS],
    column_tints: [[i32; 3]; N_COLUMNS],
    /// Resting arm angle offset, degrees.
    base_arm_deg: f64,
    /// This identity's view-1 shift in pixels.
    pub shift: u32,
}

impl IdentityParams {
    /// Derive one identity's parameters from the master seed. Identical
    /// inputs give identical parameters.
    pub fn seeded(master: u64, index: u64, shift_max: u32) -> Self {
        let mut rng = seed::stream(master, "synth.identity", index);
        let band_colors =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(30..=225)));
        let column_tints =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-25..=25)));
        let base_arm_deg = rng.gen_range(-4.0..=4.0);
        let shift = if shift_max == 0 { 0 } else { rng.gen_range(0..=shift_max) };
        IdentityParams { band_colors, column_tints, base_arm_deg, shift }
    }
}

fn clamp_u8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

/// The identity's appearance with no shift and no noise.
fn render_canvas(params: &IdentityParams) -> ImageBuf {
    let mut img = ImageBuf::new(SYNTH_W, SYNTH_H).expect("constant dims are valid");
    for y in 0..SYNTH_H {
        let band = params.band_colors[(y / BAND_H) as usize];
        for x in 0..SYNTH_W {
            let tint = params.column_tints[(x / COLUMN_W) as usize];
            img.set_rgb(
                x,
                y,
                std::array::from_fn(|c| clamp_u8(band[c] as i32 + tint[c])),
            );
        }
    }
    img
}

/// Push image content down by `shift` rows, filling vacated top rows with
/// a dark backdrop. `shift == 0` returns the image unchanged.
pub fn shift_image_down(img: &ImageBuf, shift: u32, fill: [u8; 3]) -> ImageBuf {
    let mut out = ImageBuf::filled(img.width, img.height, fill).expect("same dims");
    for y in shift.min(img.height)..img.height {
        for x in 0..img.width {
            out.set_rgb(x, y, img.rgb(x, y - shift));
        }
    }
    out
}

fn apply_jitter(img: &mut ImageBuf, rng: &mut ChaCha12Rng) {
    for b in img.data.iter_mut() {
        *b = clamp_u8(*b as i32 + rng.gen_range(-JITTER..=JITTER));
    }
}

/// The skeleton for a given shift: the body occupies rows `[shift, H)`,
/// the arms rotate outward with the shift, the legs splay with it.
fn skeleton(params: &IdentityParams, shift: u32, shift_max: u32) -> [(f64, f64); N_JOINTS] {
    let t = if shift_max == 0 { 0.0 } else { shift as f64 / shift_max as f64 };
    let arm = (params.base_arm_deg + t * ARM_SWEEP_DEG) * PI / 180.0;
    let fore = arm + 0.3;
    let splay = 1.0 + 6.0 * t;
    let upper = 14.0;
    let lower = 14.0;

    // Angles are measured from straight down (+y), opening outward.
    let l_sh = (15.0, 30.0);
    let r_sh = (33.0, 30.0);
    let l_el = (l_sh.0 - upper * arm.sin(), l_sh.1 + upper * arm.cos());
    let r_el = (r_sh.0 + upper * arm.sin(), r_sh.1 + upper * arm.cos());
    let l_wr = (l_el.0 - lower * fore.sin(), l_el.1 + lower * fore.cos());
    let r_wr = (r_el.0 + lower * fore.sin(), r_el.1 + lower * fore.cos());
    let l_cx = (19.0, 68.0);
    let r_cx = (29.0, 68.0);
    let l_kn = (l_cx.0 - splay, l_cx.1 + 24.0);
    let r_kn = (r_cx.0 + splay, r_cx.1 + 24.0);
    let l_an = (l_kn.0 - splay, l_kn.1 + 26.0);
    let r_an = (r_kn.0 + splay, r_kn.1 + 26.0);

    let base = [
        (24.0, 10.0), // head
        (24.0, 24.0), // neck
        l_sh,
        r_sh,
        l_el,
        r_el,
        l_wr,
        r_wr,
        l_cx,
        r_cx,
        l_kn,
        r_kn,
        l_an,
        r_an,
    ];
    // Compress the full-height pose into the rows below the shift line.
    let squeeze = (SYNTH_H - shift) as f64 / SYNTH_H as f64;
    base.map(|(x, y)| (x, shift as f64 + y * squeeze))
}

fn noisy_joints(
    pts: [(f64, f64); N_JOINTS],
    rng: &mut ChaCha12Rng,
) -> JointSet {
    let coords = pts.map(|(x, y)| {
        (
            (x + rng.gen_range(-1.5..=1.5)).clamp(1.0, SYNTH_W as f64 - 1.0),
            (y + rng.gen_range(-1.5..=1.5)).clamp(1.0, SYNTH_H as f64 - 1.0),
        )
    });
    JointSet { coords, valid: [true; N_JOINTS] }
}

/// One rendered view: pixels plus joint annotations.
#[derive(Debug, Clone)]
pub struct SynthView {
    pub image: ImageBuf,
    pub joints: JointSet,
}

/// Render one identity's view. View 0 is unshifted; view 1 applies the
/// identity's shift. Both get view-specific pixel and joint noise.
pub fn render_view(
    params: &IdentityParams,
    view: u32,
    opts: &SynthOptions,
    identity_index: u64,
) -> SynthView {
    let shift = if view == 0 { 0 } else { params.shift };
    let mut img = render_canvas(params);
    if shift > 0 {
        img = shift_image_down(&img, shift, [15, 15, 18]);
    }
    let mut rng = seed::stream(opts.seed, "synth.view", identity_index * 2 + view as u64);
    apply_jitter(&mut img, &mut rng);
    let joints = noisy_joints(skeleton(params, shift, opts.shift_max), &mut rng);
    SynthView { image: img, joints }
}

/// Render the whole dataset in memory: per identity, `(params, view 0,
/// view 1)` in index order.
pub fn render_dataset(opts: &SynthOptions) -> Result<Vec<(IdentityParams, SynthView, SynthView)>> {
    if opts.n_identities < 2 {
        return Err(Error::InvalidArgument(format!(
            "need >= 2 identities, got {}",
            opts.n_identities
        )));
    }
    if opts.shift_max >= SYNTH_H / 2 {
        return Err(Error::InvalidArgument(format!(
            "shift_max {} would push the body out of frame (max {})",
            opts.shift_max,
            SYNTH_H / 2 - 1
        )));
    }
    let mut out = Vec::with_capacity(opts.n_identities);
    for i in 0..opts.n_identities {
        let params = IdentityParams::seeded(opts.seed, i as u64, opts.shift_max);
        let v0 = render_view(&params, 0, opts, i as u64);
        let v1 = render_view(&params, 1, opts, i as u64);
        out.push((params, v0, v1));
    }
    Ok(out)
}

/// Render the dataset straight into memory — same content as
/// [`generate_dataset`] without touching the filesystem.
pub fn in_memory_dataset(
    opts: &SynthOptions,
    cfg: &crate::config::Config,
) -> Result<crate::dataset::Dataset> {
    use crate::dataset::{Dataset, DatasetEntry};
    use crate::graph::{AttributedGraph, PatchLayout};
    use crate::pose::compute_pose_context;

    let rendered = render_dataset(opts)?;
    let mut entries = Vec::with_capacity(2 * rendered.len());
    for (i, (_, v0, v1)) in rendered.iter().enumerate() {
        let identity = format!("id{i:03}");
        for (cam, view) in [(0u32, v0), (1u32, v1)] {
            let layout = PatchLayout::from_config(&cfg.patch, SYNTH_W, SYNTH_H)?;
            let graph =
                AttributedGraph::from_image(&view.image, layout, cfg.features.bins_per_channel)?;
            let pose = compute_pose_context(&view.joints, cfg.pose.n_bins)?;
            entries.push(DatasetEntry {
                image_id: format!("{identity}_cam{cam}"),
                identity: identity.clone(),
                camera: cam,
                graph,
                joints: Some(view.joints.clone()),
                pose: Some(pose),
            });
        }
    }
    Dataset::from_entries(entries)
}

/// Generate and write the dataset: PPM images under `images/` and a
/// `manifest.json` with inline joints. Returns the manifest path.
pub fn generate_dataset(out_dir: &Path, opts: &SynthOptions) -> Result<std::path::PathBuf> {
    let rendered = render_dataset(opts)?;
    let image_dir = out_dir.join("images");
    std::fs::create_dir_all(&image_dir)?;
    let mut entries = Vec::with_capacity(2 * rendered.len());
    for (i, (_, v0, v1)) in rendered.iter().enumerate() {
        let identity = format!("id{i:03}");
        for (cam, view) in [(0u32, v0), (1u32, v1)] {
            let image_id = format!("{identity}_cam{cam}");
            let rel = format!("images/{image_id}.ppm");
            ppm::write_ppm(&view.image, &out_dir.join(&rel))?;
            entries.push(ManifestEntry {
                image_id,
                identity: identity.clone(),
                camera: cam,
                pixels_path: Some(rel),
                features_path: None,
                image_size: None,
                joints: Some(std::array::from_fn(|j| {
                    [view.joints.coords[j].0, view.joints.coords[j].1]
                })),
            });
        }
    }
    let manifest = Manifest { entries };
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::dataset::Dataset;
    use crate::pose::{compute_pose_context, pose_similarity};

    fn opts(n: usize, shift_max: u32, seed: u64) -> SynthOptions {
        SynthOptions { n_identities: n, shift_max, seed }
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render_dataset(&opts(3, 24, 7)).unwrap();
        let b = render_dataset(&opts(3, 24, 7)).unwrap();
        for ((_, a0, a1), (_, b0, b1)) in a.iter().zip(&b) {
            assert_eq!(a0.image, b0.image);
            assert_eq!(a1.image, b1.image);
            assert_eq!(a0.joints, b0.joints);
            assert_eq!(a1.joints, b1.joints);
        }
        let c = render_dataset(&opts(3, 24, 8)).unwrap();
        assert_ne!(a[0].1.image, c[0].1.image);
    }

    #[test]
    fn zero_shift_views_differ_only_by_jitter() {
        let rendered = render_dataset(&opts(2, 0, 3)).unwrap();
        let (_, v0, v1) = &rendered[0];
        let max_diff = v0
            .image
            .data
            .iter()
            .zip(&v1.image.data)
            .map(|(a, b)| (*a as i32 - *b as i32).abs())
            .max()
            .unwrap();
        assert!(max_diff <= 2 * JITTER, "views differ by more than the jitter budget");
    }

    #[test]
    fn shift_moves_content_down() {
        let params = IdentityParams::seeded(11, 0, 24);
        let canvas = render_canvas(&params);
        let shifted = shift_image_down(&canvas, 24, [0, 0, 0]);
        assert_eq!(shifted.rgb(10, 24 + 5), canvas.rgb(10, 5));
        assert_eq!(shifted.rgb(10, 3), [0, 0, 0]);
        // Shift 0 is the identity.
        assert_eq!(shift_image_down(&canvas, 0, [0, 0, 0]), canvas);
    }

    #[test]
    fn pose_reflects_the_shift_more_than_the_identity() {
        // Two different identities at the same shift should look more alike
        // (in configuration space) than the same identity at very different
        // shifts, otherwise references cannot be selected by misalignment.
        let a = IdentityParams::seeded(5, 0, 24);
        let b = IdentityParams::seeded(5, 1, 24);
        let ctx = |p: &IdentityParams, shift: u32| {
            let pts = skeleton(p, shift, 24);
            let js = JointSet { coords: pts, valid: [true; N_JOINTS] };
            compute_pose_context(&js, 8).unwrap()
        };
        let same_shift = pose_similarity(&ctx(&a, 20), &ctx(&b, 20)).unwrap();
        let far_shift = pose_similarity(&ctx(&a, 20), &ctx(&a, 0)).unwrap();
        assert!(
            same_shift > far_shift,
            "same-shift similarity {same_shift} should beat far-shift {far_shift}"
        );
    }

    #[test]
    fn joints_stay_inside_the_frame() {
        for (_, v0, v1) in render_dataset(&opts(5, 40, 9)).unwrap() {
            for js in [&v0.joints, &v1.joints] {
                for &(x, y) in &js.coords {
                    assert!(x >= 0.0 && x < SYNTH_W as f64);
                    assert!(y >= 0.0 && y < SYNTH_H as f64);
                }
            }
        }
    }

    #[test]
    fn written_dataset_loads_and_counts_match() {
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = generate_dataset(dir.path(), &opts(4, 24, 13)).unwrap();
        let ds = Dataset::load(&manifest_path, &Config::default()).unwrap();
        assert_eq!(ds.len(), 8);
        assert_eq!(ds.identities().len(), 4);
        ds.common_layout().unwrap();
        assert!(ds.entries.iter().all(|e| e.pose.is_some()));
        // Regenerating with the same seed writes byte-identical files.
        let dir2 = tempfile::tempdir().unwrap();
        let m2 = generate_dataset(dir2.path(), &opts(4, 24, 13)).unwrap();
        assert_eq!(
            std::fs::read(&manifest_path).unwrap(),
            std::fs::read(&m2).unwrap()
        );
        let img = |d: &Path| std::fs::read(d.join("images/id002_cam1.ppm")).unwrap();
        assert_eq!(img(dir.path()), img(dir2.path()));

        assert!(render_dataset(&opts(1, 0, 1)).is_err());
        assert!(render_dataset(&opts(2, 64, 1)).is_err());
    }
}
