//! Evaluation harness: identity splits, test-pair draws, distance
//! matrices, CMC curves, and the repeated-trial protocol.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::config::Config;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::LearnedMetric;
use crate::seed;
use crate::transfer::{build_template_store, TemplateStore, TrainingPair};

/// Cumulative matching characteristic: `rates[r-1]` is the percentage of
/// probes whose true match ranks within the top `r` gallery entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    pub rates: Vec<f64>,
}

impl CmcCurve {
    /// Match rate at a 1-based rank, clamped to the curve's length (a
    /// gallery smaller than `rank` is already fully enumerated).
    pub fn rate_at(&self, rank: usize) -> f64 {
        let r = rank.clamp(1, self.rates.len());
        self.rates[r - 1]
    }

    /// Machine-readable form: a `rank,match_rate` CSV with fixed 4-decimal
    /// rates, identical bytes for identical curves.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,match_rate\n");
        for (i, r) in self.rates.iter().enumerate() {
            out.push_str(&format!("{},{:.4}\n", i + 1, r));
        }
        out
    }

    /// Human-readable rank-1/5/10/20 summary.
    pub fn summary(&self) -> String {
        [1, 5, 10, 20]
            .iter()
            .map(|&r| format!("rank-{:<2} {:6.2}%", r, self.rate_at(r)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Shuffle identities with the given seed and split them in half, the odd
/// identity going to the training side. Both halves come back sorted.
pub fn split_dataset(ds: &Dataset, split_seed: u64) -> Result<(Vec<String>, Vec<String>)> {
    let mut ids: Vec<String> = ds.identities().iter().map(|s| s.to_string()).collect();
    if ids.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need >= 2 identities to split, got {}",
            ids.len()
        )));
    }
    let mut rng = seed::stream(split_seed, "protocol.split", 0);
    ids.shuffle(&mut rng);
    let cut = ids.len().div_ceil(2);
    let mut train = ids[..cut].to_vec();
    let mut test = ids[cut..].to_vec();
    train.sort();
    test.sort();
    Ok((train, test))
}

/// One positive pair per training identity: the first image of the lowest
/// camera is the probe side, the first image of the next camera the
/// gallery side. Identities seen by a single camera are skipped.
pub fn training_pairs(ds: &Dataset, train_ids: &[String]) -> Result<Vec<TrainingPair>> {
    let mut pairs = Vec::new();
    for id in train_ids {
        let mut idxs: Vec<usize> = ds.entries_of(id).to_vec();
        if idxs.is_empty() {
            return Err(Error::InvalidArgument(format!("unknown identity {id}")));
        }
        idxs.sort_by(|&a, &b| {
            let (ea, eb) = (&ds.entries[a], &ds.entries[b]);
            ea.camera.cmp(&eb.camera).then(ea.image_id.cmp(&eb.image_id))
        });
        let probe = idxs[0];
        let Some(gallery) = idxs
            .iter()
            .copied()
            .find(|&i| ds.entries[i].camera != ds.entries[probe].camera)
        else {
            continue;
        };
        let (pe, ge) = (&ds.entries[probe], &ds.entries[gallery]);
        let (Some(pj), Some(gj)) = (&pe.joints, &ge.joints) else {
            return Err(Error::InsufficientData(format!(
                "training pair {}|{} is missing joint annotations",
                pe.image_id, ge.image_id
            )));
        };
        pairs.push(TrainingPair {
            pair_id: format!("{}|{}", pe.image_id, ge.image_id),
            probe: pe.graph.clone(),
            gallery: ge.graph.clone(),
            probe_joints: pj.clone(),
            gallery_joints: gj.clone(),
        });
    }
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} training identities span two cameras; need >= 2",
            pairs.len()
        )));
    }
    Ok(pairs)
}

/// Seeded test draw: per identity, one probe from its lowest camera and —
/// single-shot — one gallery image from the other cameras, or — multi-shot
/// — all of them.
pub fn test_draws(
    ds: &Dataset,
    test_ids: &[String],
    rng: &mut ChaCha12Rng,
    single_shot: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut probes = Vec::with_capacity(test_ids.len());
    let mut gallery = Vec::new();
    for id in test_ids {
        let mut idxs: Vec<usize> = ds.entries_of(id).to_vec();
        if idxs.is_empty() {
            return Err(Error::InvalidArgument(format!("unknown identity {id}")));
        }
        idxs.sort_by(|&a, &b| {
            let (ea, eb) = (&ds.entries[a], &ds.entries[b]);
            ea.camera.cmp(&eb.camera).then(ea.image_id.cmp(&eb.image_id))
        });
        let low_cam = ds.entries[idxs[0]].camera;
        let probe_side: Vec<usize> =
            idxs.iter().copied().filter(|&i| ds.entries[i].camera == low_cam).collect();
        let gallery_side: Vec<usize> =
            idxs.iter().copied().filter(|&i| ds.entries[i].camera != low_cam).collect();
        if gallery_side.is_empty() {
            return Err(Error::InsufficientData(format!(
                "test identity {id} appears in a single camera"
            )));
        }
        probes.push(probe_side[rng.gen_range(0..probe_side.len())]);
        if single_shot {
            gallery.push(gallery_side[rng.gen_range(0..gallery_side.len())]);
        } else {
            gallery.extend(gallery_side);
        }
    }
    for &i in probes.iter().chain(&gallery) {
        if ds.entries[i].pose.is_none() {
            return Err(Error::InsufficientData(format!(
                "test image {} has no joints, required for reference selection",
                ds.entries[i].image_id
            )));
        }
    }
    Ok((probes, gallery))
}

/// How a test pair is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scoring {
    /// The full pipeline: reference selection, offset voting, compact
    /// correspondences.
    Transfer,
    /// Baseline: the same features and learned metric, but every patch
    /// compared to the patch at its own grid position.
    Aligned,
}

/// Mean patch distance under the identity correspondence.
fn aligned_distance(
    metric: &LearnedMetric,
    probe: &crate::graph::AttributedGraph,
    gallery: &crate::graph::AttributedGraph,
) -> Result<f64> {
    let mut sum = 0.0;
    for (p, g) in probe.features.iter().zip(&gallery.features) {
        sum += metric.distance(p, g)?;
    }
    Ok(sum / probe.n_nodes() as f64)
}

/// Probe-by-gallery distance matrix plus the total number of patch-metric
/// evaluations spent. Rows are computed in parallel; each row is
/// sequential, so results do not depend on the worker count.
pub fn distance_matrix(
    store: &TemplateStore,
    ds: &Dataset,
    probes: &[usize],
    gallery: &[usize],
    scoring: Scoring,
    r: usize,
    k: usize,
) -> Result<(DMatrix<f64>, usize)> {
    let rows: Vec<(Vec<f64>, usize)> = probes
        .par_iter()
        .map(|&pi| -> Result<(Vec<f64>, usize)> {
            let pe = &ds.entries[pi];
            let mut row = Vec::with_capacity(gallery.len());
            let mut evals = 0usize;
            for &gi in gallery {
                let ge = &ds.entries[gi];
                let d = match scoring {
                    Scoring::Transfer => {
                        let (Some(pp), Some(gp)) = (&pe.pose, &ge.pose) else {
                            return Err(Error::InsufficientData(format!(
                                "pair {}|{} lacks joints",
                                pe.image_id, ge.image_id
                            )));
                        };
                        let out = store.score_pair(&pe.graph, &ge.graph, pp, gp, r, k)?;
                        evals += out.delta_evals;
                        out.distance
                    }
                    Scoring::Aligned => {
                        evals += pe.graph.n_nodes();
                        aligned_distance(&store.metric, &pe.graph, &ge.graph)?
                    }
                };
                row.push(d);
            }
            Ok((row, evals))
        })
        .collect::<Result<_>>()?;
    let total = rows.iter().map(|(_, e)| e).sum();
    let dm = DMatrix::from_fn(probes.len(), gallery.len(), |i, j| rows[i].0[j]);
    Ok((dm, total))
}

/// Collapse multi-shot galleries: one column per identity holding the
/// minimum distance over that identity's gallery images. Identity order
/// follows first occurrence.
pub fn aggregate_gallery_min(
    distances: &DMatrix<f64>,
    gallery_identities: &[String],
) -> (DMatrix<f64>, Vec<String>) {
    let mut unique: Vec<String> = Vec::new();
    for id in gallery_identities {
        if !unique.contains(id) {
            unique.push(id.clone());
        }
    }
    let out = DMatrix::from_fn(distances.nrows(), unique.len(), |i, u| {
        gallery_identities
            .iter()
            .enumerate()
            .filter(|(_, id)| **id == unique[u])
            .map(|(j, _)| distances[(i, j)])
            .fold(f64::INFINITY, f64::min)
    });
    (out, unique)
}

/// Rank every probe's true match and accumulate the cumulative curve.
/// Ties in distance resolve by gallery index, and the best-ranked true
/// match counts when an identity has several gallery entries.
pub fn cmc_curve(
    distances: &DMatrix<f64>,
    probe_identities: &[String],
    gallery_identities: &[String],
) -> Result<CmcCurve> {
    let (np, ng) = (distances.nrows(), distances.ncols());
    if probe_identities.len() != np || gallery_identities.len() != ng {
        return Err(Error::Dimension(format!(
            "distance matrix is {np}x{ng} but id lists have {}/{} entries",
            probe_identities.len(),
            gallery_identities.len()
        )));
    }
    if np == 0 || ng == 0 {
        return Err(Error::InsufficientData("empty distance matrix".into()));
    }
    let mut counts = vec![0usize; ng];
    for p in 0..np {
        let best = (0..ng)
            .filter(|&j| gallery_identities[j] == probe_identities[p])
            .min_by(|&a, &b| {
                distances[(p, a)]
                    .partial_cmp(&distances[(p, b)])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            })
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "probe {} has no true match in the gallery",
                    probe_identities[p]
                ))
            })?;
        let d_true = distances[(p, best)];
        let rank = 1 + (0..ng)
            .filter(|&j| {
                let d = distances[(p, j)];
                d < d_true || (d == d_true && j < best)
            })
            .count();
        counts[rank - 1] += 1;
    }
    let mut rates = Vec::with_capacity(ng);
    let mut cum = 0usize;
    for c in counts {
        cum += c;
        rates.push(100.0 * cum as f64 / np as f64);
    }
    Ok(CmcCurve { rates })
}

/// Element-wise mean of equally long curves.
pub fn mean_curves(curves: &[CmcCurve]) -> Result<CmcCurve> {
    let Some(first) = curves.first() else {
        return Err(Error::InsufficientData("no curves to average".into()));
    };
    let len = first.rates.len();
    if curves.iter().any(|c| c.rates.len() != len) {
        return Err(Error::Dimension("curves have different lengths".into()));
    }
    let rates = (0..len)
        .map(|i| curves.iter().map(|c| c.rates[i]).sum::<f64>() / curves.len() as f64)
        .collect();
    Ok(CmcCurve { rates })
}

/// The averaged result of a repeated-trial run, plus the instrumented cost
/// of scoring: how many patch-metric evaluations were spent over how many
/// probe/gallery pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub mean: CmcCurve,
    pub per_trial: Vec<CmcCurve>,
    pub total_delta_evals: usize,
    pub n_scored_pairs: usize,
}

impl ProtocolReport {
    /// Mean patch-metric evaluations per scored probe/gallery pair.
    pub fn evals_per_pair(&self) -> f64 {
        if self.n_scored_pairs == 0 {
            0.0
        } else {
            self.total_delta_evals as f64 / self.n_scored_pairs as f64
        }
    }
}

/// Respect the `GCT_THREADS` cap if set; `None` means use the global pool.
pub fn thread_pool_from_env() -> Result<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var("GCT_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("GCT_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(Error::Config("GCT_THREADS must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {n}-thread pool: {e}")))?;
    Ok(Some(pool))
}

/// The repeated-trial protocol: per trial, split identities in half, build
/// a template store from the training positives, draw test probe/gallery
/// images, score every pair, and compute the CMC; the report averages the
/// trials element-wise. Fully determined by `cfg.protocol.seed`.
pub fn run_protocol(ds: &Dataset, cfg: &Config, scoring: Scoring) -> Result<ProtocolReport> {
    cfg.validate()?;
    if cfg.protocol.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    ds.common_layout()?;
    let pool = thread_pool_from_env()?;
    let body = || -> Result<ProtocolReport> {
        let mut per_trial = Vec::with_capacity(cfg.protocol.trials);
        let mut total_delta_evals = 0usize;
        let mut n_scored_pairs = 0usize;
        for t in 0..cfg.protocol.trials {
            let trial_seed = seed::derive(cfg.protocol.seed, "protocol.trial", t as u64);
            let (train, test) = split_dataset(ds, trial_seed)?;
            let pairs = training_pairs(ds, &train)?;
            let store = build_template_store(&pairs, cfg, trial_seed)?;
            let mut rng = seed::stream(trial_seed, "protocol.draw", 0);
            let (probes, gallery) =
                test_draws(ds, &test, &mut rng, cfg.protocol.single_shot)?;
            let (dm, evals) = distance_matrix(
                &store,
                ds,
                &probes,
                &gallery,
                scoring,
                cfg.transfer.r,
                cfg.transfer.k,
            )?;
            total_delta_evals += evals;
            n_scored_pairs += probes.len() * gallery.len();
            let probe_ids: Vec<String> =
                probes.iter().map(|&i| ds.entries[i].identity.clone()).collect();
            let gallery_ids: Vec<String> =
                gallery.iter().map(|&i| ds.entries[i].identity.clone()).collect();
            let (dm, gallery_ids) = aggregate_gallery_min(&dm, &gallery_ids);
            per_trial.push(cmc_curve(&dm, &probe_ids, &gallery_ids)?);
        }
        Ok(ProtocolReport {
            mean: mean_curves(&per_trial)?,
            per_trial,
            total_delta_evals,
            n_scored_pairs,
        })
    };
    match pool {
        Some(p) => p.install(body),
        None => body(),
    }
}
