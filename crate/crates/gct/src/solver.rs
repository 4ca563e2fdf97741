//! Relaxed candidate assignment and discretization.
//!
//! The matcher maximizes `x' K x` over one-to-one candidate indicator
//! vectors. [`solve_relaxed`] runs a power-iteration-style relaxation with
//! exponent reweighting and bistochastic normalization; [`discretize`] turns
//! the soft result into hard matches (greedy seeding plus deterministic
//! local refinement); [`brute_force_matching`] is the exhaustive oracle for
//! small problems; [`match_image_pair`] glues the per-stripe steps into a
//! full image-to-image correspondence list.

use nalgebra::{DMatrix, DVector};

use crate::affinity::{build_affinity_matrix, stripe_search_space, AffinityMatrix};
use crate::config::{Config, SolverConfig};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

/// Strictly greater than zero; `false` for NaN.
fn strictly_positive(v: f64) -> bool {
    v > 0.0
}

/// Relaxed assignment weights, one row per probe slot, one column per
/// gallery slot of the match problem.
#[derive(Debug, Clone)]
pub struct SoftAssignment {
    pub weights: DMatrix<f64>,
}

/// Hard one-to-one assignment over local problem slots, with the matching
/// objective `x' K x` of its indicator vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(probe_slot, gallery_slot)` pairs sorted by probe slot.
    pub matches: Vec<(usize, usize)>,
    pub objective: f64,
}

/// One probe-to-gallery patch correspondence in graph node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchMatch {
    pub probe: usize,
    pub gallery: usize,
}

/// Ten alternating row/column normalization sweeps over the reshaped
/// iterate. When the gallery side is larger, a virtual slack row with mass
/// target `n2 - n1` absorbs the surplus column mass, so gallery slots can
/// stay unmatched while every probe row still sums to one.
fn bistochastic_normalize(x: &mut DVector<f64>, n1: usize, n2: usize) {
    const SWEEPS: usize = 10;
    let slack = n2 > n1;
    let rows = n1 + usize::from(slack);
    let mut m = DMatrix::zeros(rows, n2);
    for i in 0..n1 {
        for j in 0..n2 {
            m[(i, j)] = x[i * n2 + j];
        }
    }
    if slack {
        let fill = x.mean();
        for j in 0..n2 {
            m[(n1, j)] = fill;
        }
    }
    for _ in 0..SWEEPS {
        for i in 0..rows {
            let target = if slack && i == n1 { (n2 - n1) as f64 } else { 1.0 };
            let sum: f64 = m.row(i).sum();
            if sum > 0.0 {
                let scale = target / sum;
                for j in 0..n2 {
                    m[(i, j)] *= scale;
                }
            }
        }
        for j in 0..n2 {
            let sum: f64 = m.column(j).sum();
            if sum > 0.0 {
                for i in 0..rows {
                    m[(i, j)] /= sum;
                }
            }
        }
    }
    for i in 0..n1 {
        for j in 0..n2 {
            x[i * n2 + j] = m[(i, j)];
        }
    }
}

/// Relax the one-to-one matching objective.
///
/// Starting from the uniform vector, each iteration propagates scores
/// through the affinity matrix (`x <- Kx`), rescales to max 1, sharpens
/// elementwise (`x <- x^beta`), applies bistochastic normalization, and
/// L1-normalizes. Stops when the max-norm change drops below `tol` or after
/// `max_iters` iterations. Fully deterministic.
pub fn solve_relaxed(aff: &AffinityMatrix, cfg: &SolverConfig) -> Result<SoftAssignment> {
    let n1 = aff.n1;
    let n2 = aff.n2;
    let n = aff.order();
    if aff.k.nrows() != n || aff.k.ncols() != n {
        return Err(Error::Dimension(format!(
            "affinity matrix is {}x{}, expected {n}x{n}",
            aff.k.nrows(),
            aff.k.ncols()
        )));
    }
    if aff.k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("affinity matrix contains a non-finite entry".into()));
    }
    if !strictly_positive(cfg.tol) || cfg.max_iters == 0 || !strictly_positive(cfg.beta) {
        return Err(Error::InvalidArgument(
            "solver needs tol > 0, beta > 0 and max_iters >= 1".into(),
        ));
    }

    let mut x = DVector::repeat(n, 1.0 / n as f64);
    for _ in 0..cfg.max_iters {
        let mut y = &aff.k * &x;
        let max = y.max();
        if !strictly_positive(max) {
            return Err(Error::Numerical(
                "propagation annihilated the iterate (affinity matrix has a zero diagonal?)".into(),
            ));
        }
        y /= max;
        for v in y.iter_mut() {
            *v = v.powf(cfg.beta);
        }
        bistochastic_normalize(&mut y, n1, n2);
        let sum = y.sum();
        if !strictly_positive(sum) {
            return Err(Error::Numerical("normalization produced an all-zero iterate".into()));
        }
        y /= sum;
        let delta = (&y - &x).amax();
        x = y;
        if delta < cfg.tol {
            break;
        }
    }
    let mut weights = DMatrix::zeros(n1, n2);
    for i in 0..n1 {
        for j in 0..n2 {
            weights[(i, j)] = x[i * n2 + j];
        }
    }
    Ok(SoftAssignment { weights })
}

/// Objective `x' K x` of a hard assignment given as `probe slot -> gallery
/// slot` over local candidate indices.
fn assignment_objective(assign: &[usize], aff: &AffinityMatrix) -> f64 {
    let n2 = aff.n2;
    let mut obj = 0.0;
    for (i, &ji) in assign.iter().enumerate() {
        let a = i * n2 + ji;
        for (l, &jl) in assign.iter().enumerate() {
            let b = l * n2 + jl;
            obj += aff.k[(a, b)];
        }
    }
    obj
}

/// Turn a soft assignment into hard one-to-one matches.
///
/// Greedy seeding picks the largest remaining weight (ties to the lowest
/// `(probe, gallery)` slot pair) and eliminates its row and column until
/// every probe slot is matched. A deterministic best-improvement refinement
/// then walks pairwise swaps, 3-cycles, and single reassignments to unused
/// gallery slots while any of them raises the objective; plain greedy alone
/// strands too much of the relaxation's headroom on hard instances.
pub fn discretize(soft: &SoftAssignment, aff: &AffinityMatrix) -> Result<Assignment> {
    let n1 = aff.n1;
    let n2 = aff.n2;
    if soft.weights.nrows() != n1 || soft.weights.ncols() != n2 {
        return Err(Error::Dimension(format!(
            "soft assignment is {}x{}, affinity expects {n1}x{n2}",
            soft.weights.nrows(),
            soft.weights.ncols()
        )));
    }
    if n2 < n1 {
        return Err(Error::InvalidArgument(format!(
            "{n2} gallery slots cannot cover {n1} probe slots"
        )));
    }

    // Greedy peel-off.
    let mut assigned: Vec<Option<usize>> = vec![None; n1];
    let mut col_used = vec![false; n2];
    for _ in 0..n1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, slot) in assigned.iter().enumerate() {
            if slot.is_some() {
                continue;
            }
            for (j, used) in col_used.iter().enumerate() {
                if *used {
                    continue;
                }
                let w = soft.weights[(i, j)];
                if best.is_none_or(|(bw, _, _)| w > bw) {
                    best = Some((w, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("n2 >= n1 guarantees a free cell");
        assigned[i] = Some(j);
        col_used[j] = true;
    }
    let mut assign: Vec<usize> = assigned.into_iter().map(|j| j.unwrap()).collect();

    // Local refinement. Candidate moves are enumerated in a fixed order and
    // the single best strictly-improving move is applied per pass.
    const MAX_PASSES: usize = 1000;
    let mut objective = assignment_objective(&assign, aff);
    for _ in 0..MAX_PASSES {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let consider = |cand: Vec<usize>, best: &mut Option<(f64, Vec<usize>)>| {
            let obj = assignment_objective(&cand, aff);
            if obj > objective + 1e-12 && best.as_ref().is_none_or(|(b, _)| obj > *b) {
                *best = Some((obj, cand));
            }
        };
        for i in 0..n1 {
            for l in (i + 1)..n1 {
                let mut cand = assign.clone();
                cand.swap(i, l);
                consider(cand, &mut best);
            }
        }
        for i in 0..n1 {
            for l in (i + 1)..n1 {
                for m in (l + 1)..n1 {
                    let mut fwd = assign.clone();
                    fwd[i] = assign[l];
                    fwd[l] = assign[m];
                    fwd[m] = assign[i];
                    consider(fwd, &mut best);
                    let mut bwd = assign.clone();
                    bwd[i] = assign[m];
                    bwd[l] = assign[i];
                    bwd[m] = assign[l];
                    consider(bwd, &mut best);
                }
            }
        }
        if n2 > n1 {
            let mut free: Vec<usize> = (0..n2).filter(|j| !assign.contains(j)).collect();
            free.sort_unstable();
            for i in 0..n1 {
                for &j in &free {
                    let mut cand = assign.clone();
                    cand[i] = j;
                    consider(cand, &mut best);
                }
            }
        }
        match best {
            Some((obj, cand)) => {
                assign = cand;
                objective = obj;
            }
            None => break,
        }
    }

    let matches = assign.iter().copied().enumerate().collect();
    Ok(Assignment { matches, objective })
}

/// Exhaustive one-to-one matching oracle.
///
/// Enumerates every injection of probe slots into gallery slots in
/// lexicographic order and returns the objective maximizer; exact ties keep
/// the lexicographically smallest assignment. Only sensible for tiny
/// problems, so both sides are capped at 8 slots.
pub fn brute_force_matching(aff: &AffinityMatrix) -> Result<Assignment> {
    let n1 = aff.n1;
    let n2 = aff.n2;
    if n1 > 8 || n2 > 8 {
        return Err(Error::InvalidArgument(format!(
            "brute force is capped at 8x8 slots, got {n1}x{n2}"
        )));
    }
    if n2 < n1 {
        return Err(Error::InvalidArgument(format!(
            "{n2} gallery slots cannot cover {n1} probe slots"
        )));
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut assign = vec![0usize; n1];
    let mut used = vec![false; n2];
    fn recurse(
        i: usize,
        n1: usize,
        n2: usize,
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
        aff: &AffinityMatrix,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if i == n1 {
            let obj = assignment_objective(assign, aff);
            if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                *best = Some((obj, assign.clone()));
            }
            return;
        }
        for j in 0..n2 {
            if used[j] {
                continue;
            }
            used[j] = true;
            assign[i] = j;
            recurse(i + 1, n1, n2, assign, used, aff, best);
            used[j] = false;
        }
    }
    recurse(0, n1, n2, &mut assign, &mut used, aff, &mut best);
    let (objective, assign) = best.expect("at least one injection exists");
    Ok(Assignment {
        matches: assign.into_iter().enumerate().collect(),
        objective,
    })
}

/// Match every patch of the probe image to a gallery patch, stripe by
/// stripe. Returns exactly one correspondence per probe patch, sorted by
/// probe index; the mapping is one-to-one within each stripe.
pub fn match_image_pair(
    probe: &AttributedGraph,
    gallery: &AttributedGraph,
    cfg: &Config,
) -> Result<Vec<PatchMatch>> {
    if !probe.layout.same_grid(&gallery.layout) {
        return Err(Error::LayoutMismatch(
            "probe and gallery must share the same patch grid".into(),
        ));
    }
    let mut out = Vec::with_capacity(probe.n_nodes());
    for stripe in 0..probe.layout.n_stripes {
        let problem = stripe_search_space(
            &probe.layout,
            &gallery.layout,
            stripe,
            cfg.patch.expand_rows,
        )?;
        let aff = build_affinity_matrix(
            probe,
            gallery,
            &problem,
            cfg.affinity.sigma_pos,
            cfg.affinity.sigma_feat,
        )?;
        let soft = solve_relaxed(&aff, &cfg.solver)?;
        let hard = discretize(&soft, &aff)?;
        for (i, j) in hard.matches {
            out.push(PatchMatch {
                probe: problem.probe_nodes[i],
                gallery: problem.gallery_nodes[j],
            });
        }
    }
    out.sort_by_key(|m| m.probe);
    debug_assert!(out.iter().enumerate().all(|(i, m)| m.probe == i));
    Ok(out)
}
