//! Command-line front end: template building, protocol evaluation,
//! single-pair matching, synthetic data generation, and pose similarity.
//!
//! Error classes map to stable exit codes: malformed manifest 2, missing
//! data file 3, invalid config 4, layout mismatch 5, anything else 1. The
//! `GCT_THREADS` environment variable caps evaluation parallelism.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gct::dataset::{materialize_entry, Dataset};
use gct::error::{Error, Result};
use gct::eval::{self, Scoring};
use gct::io::manifest::{Manifest, ManifestEntry};
use gct::io::store::{load_store, save_store};
use gct::pose::{compute_pose_context, pose_similarity_parts};
use gct::synth::{generate_dataset, SynthOptions};
use gct::transfer::{build_template_store, TemplateStore};
use gct::Config;

#[derive(Parser)]
#[command(
    name = "gct",
    version,
    about = "Patch-correspondence transfer for person re-identification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config source plus the overrides shared by training and evaluation.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON config file; built-in defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed; every random draw in the run derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Reference templates consulted per test pair.
    #[arg(long = "R", value_name = "N")]
    r: Option<usize>,
    /// Candidate gallery patches kept per probe patch after voting.
    #[arg(long)]
    k: Option<usize>,
    /// Number of seeded evaluation trials.
    #[arg(long)]
    trials: Option<usize>,
}

impl ConfigArgs {
    fn resolve_from(&self, base: Config) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::from_json_file(p)?,
            None => base,
        };
        if let Some(s) = self.seed {
            cfg.protocol.seed = s;
        }
        if let Some(r) = self.r {
            cfg.transfer.r = r;
        }
        if let Some(k) = self.k {
            cfg.transfer.k = k;
        }
        if let Some(t) = self.trials {
            cfg.protocol.trials = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&self) -> Result<Config> {
        self.resolve_from(Config::default())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a correspondence-template store from a training manifest.
    ///
    /// One positive pair is formed per identity (lowest camera on the
    /// probe side); identities seen by a single camera are skipped.
    BuildTemplates {
        /// Training manifest.
        manifest: PathBuf,
        /// Where to write the store JSON.
        #[arg(long, default_value = "store.json")]
        out: PathBuf,
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Run the repeated-trial evaluation protocol and report CMC ranks.
    ///
    /// The store sets the layout and feature-dimension contract the
    /// dataset must satisfy; each trial re-splits identities and trains
    /// its own templates from the training half.
    Evaluate {
        /// Evaluation manifest.
        manifest: PathBuf,
        /// Template store the dataset must be compatible with.
        store: PathBuf,
        /// Where to write the mean CMC curve as CSV.
        #[arg(long, default_value = "cmc.csv")]
        out: PathBuf,
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Match one probe/gallery pair and print patch correspondences.
    ///
    /// Solves the constrained matching directly and reports one CSV row
    /// per probe patch with its matched gallery patch and the learned
    /// patch distance. Defaults to the store's own config.
    MatchPair {
        /// Manifest listing both images.
        manifest: PathBuf,
        /// Template store providing the learned patch metric.
        store: PathBuf,
        /// Probe image_id.
        probe: String,
        /// Gallery image_id.
        gallery: String,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON config file overriding the store's config.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
    /// Generate a deterministic synthetic dataset.
    ///
    /// Writes `images/*.ppm` and a `manifest.json` with inline joints;
    /// the same seed reproduces the dataset byte for byte.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of identities (two views each).
        #[arg(long, default_value_t = 16)]
        identities: usize,
        /// Largest vertical shift of the second view, in pixels.
        #[arg(long, default_value_t = 24)]
        shift_max: u32,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print body-configuration similarity for two manifest entries.
    PoseSim {
        /// Manifest listing both images (with joints).
        manifest: PathBuf,
        /// First image_id.
        a: String,
        /// Second image_id.
        b: String,
        /// JSON config file; built-in defaults apply when omitted.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::BuildTemplates { manifest, out, common } => {
            build_templates(&manifest, &out, &common)
        }
        Command::Evaluate { manifest, store, out, common } => {
            evaluate(&manifest, &store, &out, &common)
        }
        Command::MatchPair { manifest, store, probe, gallery, out, config } => {
            match_pair(&manifest, &store, &probe, &gallery, out.as_deref(), config.as_deref())
        }
        Command::Synth { out, identities, shift_max, seed } => {
            let opts = SynthOptions { n_identities: identities, shift_max, seed };
            let manifest_path = generate_dataset(&out, &opts)?;
            println!(
                "wrote {} ({} identities, {} images)",
                manifest_path.display(),
                identities,
                2 * identities
            );
            Ok(())
        }
        Command::PoseSim { manifest, a, b, config } => {
            pose_sim(&manifest, &a, &b, config.as_deref())
        }
    }
}

fn build_templates(manifest: &Path, out: &Path, common: &ConfigArgs) -> Result<()> {
    let cfg = common.resolve()?;
    let ds = Dataset::load(manifest, &cfg)?;
    let ids: Vec<String> = ds.identities().iter().map(|s| s.to_string()).collect();
    let pairs = eval::training_pairs(&ds, &ids)?;
    let store = build_template_store(&pairs, &cfg, cfg.protocol.seed)?;
    save_store(&store, out)?;
    println!(
        "wrote {} ({} templates over {} patches, metric {} -> {} dims)",
        out.display(),
        store.templates.len(),
        store.n_patches(),
        store.metric.input_dim(),
        store.metric.reduced_dim()
    );
    Ok(())
}

/// The store must agree with the dataset on patch grid and feature
/// dimension before any evaluation runs.
fn check_contract(store: &TemplateStore, ds: &Dataset) -> Result<()> {
    let layout = ds.common_layout()?;
    if !layout.same_grid(&store.layout) {
        return Err(Error::LayoutMismatch(format!(
            "store lays out {}x{} patches but the dataset {}x{}",
            store.layout.n_rows, store.layout.n_cols, layout.n_rows, layout.n_cols
        )));
    }
    let dim = ds.entries[0].graph.feature_dim();
    if dim != store.metric.input_dim() {
        return Err(Error::LayoutMismatch(format!(
            "store metric expects {}-dim features but the dataset provides {}-dim",
            store.metric.input_dim(),
            dim
        )));
    }
    Ok(())
}

fn evaluate(manifest: &Path, store_path: &Path, out: &Path, common: &ConfigArgs) -> Result<()> {
    let store = load_store(store_path)?;
    let cfg = common.resolve_from(store.config.clone())?;
    let ds = Dataset::load(manifest, &cfg)?;
    check_contract(&store, &ds)?;
    let report = eval::run_protocol(&ds, &cfg, Scoring::Transfer)?;
    println!(
        "{} identities, {} images, {} trials (seed {}, R={}, k={})",
        ds.identities().len(),
        ds.len(),
        cfg.protocol.trials,
        cfg.protocol.seed,
        cfg.transfer.r,
        cfg.transfer.k
    );
    println!("{}", report.mean.summary());
    println!(
        "patch-metric evaluations: {} over {} scored pairs ({:.1} per pair)",
        report.total_delta_evals,
        report.n_scored_pairs,
        report.evals_per_pair()
    );
    std::fs::write(out, report.mean.to_csv())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn find_entry<'m>(manifest: &'m Manifest, image_id: &str) -> Result<&'m ManifestEntry> {
    manifest
        .entries
        .iter()
        .find(|e| e.image_id == image_id)
        .ok_or_else(|| Error::InvalidArgument(format!("image_id {image_id:?} not in manifest")))
}

fn match_pair(
    manifest_path: &Path,
    store_path: &Path,
    probe: &str,
    gallery: &str,
    out: Option<&Path>,
    config: Option<&Path>,
) -> Result<()> {
    let store = load_store(store_path)?;
    let cfg = match config {
        Some(p) => Config::from_json_file(p)?,
        None => store.config.clone(),
    };
    let (manifest, base) = Manifest::load(manifest_path)?;
    let pe = materialize_entry(find_entry(&manifest, probe)?, &base, &cfg)?;
    let ge = materialize_entry(find_entry(&manifest, gallery)?, &base, &cfg)?;
    for e in [&pe, &ge] {
        if !e.graph.layout.same_grid(&store.layout) {
            return Err(Error::LayoutMismatch(format!(
                "{} lays out {}x{} patches but the store {}x{}",
                e.image_id,
                e.graph.layout.n_rows,
                e.graph.layout.n_cols,
                store.layout.n_rows,
                store.layout.n_cols
            )));
        }
        if e.graph.feature_dim() != store.metric.input_dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} has {}-dim features but the store metric expects {}-dim",
                e.image_id,
                e.graph.feature_dim(),
                store.metric.input_dim()
            )));
        }
    }
    let matches = gct::match_image_pair(&pe.graph, &ge.graph, &cfg)?;
    let mut text = String::from("probe_patch,gallery_patch,delta\n");
    for m in &matches {
        let d = store
            .metric
            .distance(&pe.graph.features[m.probe], &ge.graph.features[m.gallery])?;
        text.push_str(&format!("{},{},{:.6}\n", m.probe, m.gallery, d));
    }
    match out {
        Some(p) => {
            std::fs::write(p, text)?;
            println!("wrote {} ({} correspondences)", p.display(), matches.len());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn joints_of(entry: &ManifestEntry) -> Result<gct::JointSet> {
    entry.joint_set()?.ok_or_else(|| {
        Error::InsufficientData(format!("{} has no joints in the manifest", entry.image_id))
    })
}

fn pose_sim(manifest_path: &Path, a: &str, b: &str, config: Option<&Path>) -> Result<()> {
    let cfg = match config {
        Some(p) => Config::from_json_file(p)?,
        None => Config::default(),
    };
    let (manifest, _) = Manifest::load(manifest_path)?;
    let ja = joints_of(find_entry(&manifest, a)?)?;
    let jb = joints_of(find_entry(&manifest, b)?)?;
    let pa = compute_pose_context(&ja, cfg.pose.n_bins)?;
    let pb = compute_pose_context(&jb, cfg.pose.n_bins)?;
    let (s_mag, s_ang) = pose_similarity_parts(&pa, &pb)?;
    println!("magnitude_similarity,{:.6}", s_mag);
    println!("angle_similarity,{:.6}", s_ang);
    println!("similarity,{:.6}", s_mag * s_ang);
    Ok(())
}
