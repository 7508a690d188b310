//! Two-stage placement optimization: breadth-first prefix-tree dictionary
//! construction with shape-signature pruning, weighted-cost selection over
//! normalized objectives, and iterative local refinement on an oversampled
//! sub-grid.
//!
//! Layer growth is parallel over parents; the prune step is a sequential
//! reservoir pass in a fixed enumeration order, so results are identical for
//! any thread count given the same seed.

use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::beampattern::{BeamAttributes, PatternScorer};
use crate::error::{Error, Result};
use crate::geometry::{
    shape_signature, vacancy_search, DesignGrid, ElementLayout, PoseSet, SuperArrayConfig,
};

/// Weights of the normalized beamwidth, MSLL and eccentricity objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ObjectiveWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<ObjectiveWeights> {
        let w = ObjectiveWeights { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::invalid("objective weights must be non-negative"));
        }
        if self.alpha == 0.0 && self.beta == 0.0 && self.gamma == 0.0 {
            return Err(Error::invalid(
                "at least one objective weight must be positive",
            ));
        }
        Ok(())
    }
}

/// Per-objective `(min, max)` extrema over a dictionary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveRanges {
    pub bw_deg: (f64, f64),
    pub msll_db: (f64, f64),
    pub ecc: (f64, f64),
}

/// The pruned configuration dictionary with frozen normalization ranges.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub configs: Vec<SuperArrayConfig>,
    pub attrs: Vec<BeamAttributes>,
    pub ranges: ObjectiveRanges,
    pub tau: [f64; 3],
    pub seed: u64,
    pub grid: DesignGrid,
    pub layout: ElementLayout,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

/// Min-max normalization of a raw objective value, clamped to `[0, 1]` for
/// out-of-dictionary values.
pub fn normalize_objective(raw: f64, range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = range;
    if !(hi > lo) {
        return Err(Error::invalid(format!(
            "degenerate objective range [{lo}, {hi}]"
        )));
    }
    Ok(((raw - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Weighted cost `α BW + β MSLL + γ ecc` over normalized objectives.
/// Directivity is intentionally not part of the cost.
pub fn weighted_cost(
    attrs: &BeamAttributes,
    weights: &ObjectiveWeights,
    ranges: &ObjectiveRanges,
) -> Result<f64> {
    weights.validate()?;
    let bw = normalize_objective(attrs.bw_doa_deg, ranges.bw_deg)?;
    let msll = normalize_objective(attrs.msll_db, ranges.msll_db)?;
    let ecc = normalize_objective(attrs.ecc, ranges.ecc)?;
    Ok(weights.alpha * bw + weights.beta * msll + weights.gamma * ecc)
}

/// Search parameters for [`build_dictionary`].
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Number of random root placements.
    pub n_init: usize,
    /// Bin resolution for `(λ1, λ2, ψ)`; `None` selects the perturbation-bound default.
    pub tau: Option<[f64; 3]>,
    /// EBP grid resolution used while scoring dictionary attributes.
    pub scorer_n: usize,
    pub eps_cells: usize,
    pub theta_max_deg: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            n_init: 16,
            tau: None,
            scorer_n: 256,
            eps_cells: 2,
            theta_max_deg: 30.0,
        }
    }
}

/// Bin-size guideline from the eigenvalue perturbation bound at the aperture
/// half-diagonal: one grid-cell moves cannot straddle more than two bins.
pub fn default_tau(grid: &DesignGrid, n_s: usize) -> [f64; 3] {
    let r_max = grid.extent.width().hypot(grid.extent.height()) / 2.0;
    let bound = (2.0 * r_max + 1.0) * 2f64.sqrt() * grid.pitch / n_s as f64;
    [bound, bound, bound]
}

fn bin_key(sig: &crate::geometry::ShapeSignature, tau: &[f64; 3]) -> (i64, i64, i64) {
    (
        (sig.lambda1 / tau[0]).floor() as i64,
        (sig.lambda2 / tau[1]).floor() as i64,
        (sig.psi / tau[2]).floor() as i64,
    )
}

/// Breadth-first prefix-tree search: initialize `n_init` random roots, then
/// per layer list vacancies, append children, and keep one uniformly random
/// representative per `(λ1, λ2, ψ)` bin until every configuration holds
/// `n_s` subarrays. Attribute ranges are computed in a final scoring pass.
pub fn build_dictionary(
    grid: &DesignGrid,
    layout: &ElementLayout,
    n_s: usize,
    opts: &SearchOptions,
    seed: u64,
) -> Result<Dictionary> {
    if n_s < 2 {
        return Err(Error::invalid("dictionary needs at least two subarrays"));
    }
    if opts.n_init < 1 {
        return Err(Error::invalid("need at least one root placement"));
    }
    if grid.points.is_empty() {
        return Err(Error::InfeasibleInstance(
            "design grid has no points".into(),
        ));
    }
    let tau = opts.tau.unwrap_or_else(|| default_tau(grid, n_s));
    if tau.iter().any(|t| *t <= 0.0) {
        return Err(Error::invalid("bin resolution must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Roots: distinct random grid points, all free-pose (resolved Up).
    let mut idx: Vec<usize> = (0..grid.points.len()).collect();
    idx.shuffle(&mut rng);
    let mut layer: Vec<SuperArrayConfig> = idx
        .iter()
        .take(opts.n_init.min(grid.points.len()))
        .map(|&i| {
            let mut c = SuperArrayConfig::all_up(vec![grid.points[i]]).unwrap();
            c.grid_id = Some(grid.id.clone());
            c
        })
        .collect();

    for _depth in 2..=n_s {
        // Reservoir per bin: (stream count, representative).
        let mut bins: HashMap<(i64, i64, i64), (u64, SuperArrayConfig)> = HashMap::new();

        // Parents processed in chunks: children generated in parallel, merged
        // sequentially in enumeration order.
        const CHUNK: usize = 256;
        for chunk in layer.chunks(CHUNK) {
            let produced: Vec<Vec<((i64, i64, i64), [f64; 2], PoseSet)>> = chunk
                .par_iter()
                .map(|parent| {
                    vacancy_search(parent, grid, layout)
                        .into_iter()
                        .map(|vac| {
                            let child = parent.with_module(vac.point, vac.poses);
                            let sig = shape_signature(&child).expect("child has >= 2 modules");
                            (bin_key(&sig, &tau), vac.point, vac.poses)
                        })
                        .collect()
                })
                .collect();
            for (parent, children) in chunk.iter().zip(produced) {
                for (key, point, poses) in children {
                    let entry = bins.entry(key).or_insert_with(|| (0, parent.clone()));
                    entry.0 += 1;
                    // Uniform reservoir pick within the bin.
                    if entry.0 == 1 || rng.gen_range(0..entry.0) == 0 {
                        entry.1 = parent.with_module(point, poses);
                    }
                }
            }
        }

        if bins.is_empty() {
            return Err(Error::InfeasibleInstance(format!(
                "no feasible placement when growing to {} subarrays",
                _depth
            )));
        }
        let mut keyed: Vec<((i64, i64, i64), SuperArrayConfig)> =
            bins.into_iter().map(|(k, (_, c))| (k, c)).collect();
        keyed.sort_by_key(|(k, _)| *k);
        layer = keyed.into_iter().map(|(_, c)| c).collect();
    }

    // Final pass: attributes and normalization ranges.
    let scorer = PatternScorer::new(
        layout,
        opts.scorer_n,
        crate::beampattern::rho_for_roi(opts.theta_max_deg),
        opts.eps_cells,
    )?;
    let attrs: Vec<BeamAttributes> = layer
        .par_iter()
        .map(|c| scorer.attributes(&c.centers))
        .collect::<Result<_>>()?;

    let ranges = compute_ranges(&attrs)?;
    Ok(Dictionary {
        configs: layer,
        attrs,
        ranges,
        tau,
        seed,
        grid: grid.clone(),
        layout: layout.clone(),
    })
}

fn compute_ranges(attrs: &[BeamAttributes]) -> Result<ObjectiveRanges> {
    if attrs.is_empty() {
        return Err(Error::InfeasibleInstance("empty dictionary".into()));
    }
    let mut bw = (f64::INFINITY, f64::NEG_INFINITY);
    let mut msll = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ecc = (f64::INFINITY, f64::NEG_INFINITY);
    for a in attrs {
        bw = (bw.0.min(a.bw_doa_deg), bw.1.max(a.bw_doa_deg));
        if a.msll_db.is_finite() {
            msll = (msll.0.min(a.msll_db), msll.1.max(a.msll_db));
        }
        ecc = (ecc.0.min(a.ecc), ecc.1.max(a.ecc));
    }
    Ok(ObjectiveRanges {
        bw_deg: bw,
        msll_db: msll,
        ecc,
    })
}

/// Configuration minimizing the weighted cost. Ties break towards lower
/// MSLL, then lower eccentricity, then lexicographically smaller centers.
pub fn select_optimum(dict: &Dictionary, weights: &ObjectiveWeights) -> Result<usize> {
    weights.validate()?;
    if dict.is_empty() {
        return Err(Error::InfeasibleInstance("empty dictionary".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, attrs) in dict.attrs.iter().enumerate() {
        let cost = weighted_cost(attrs, weights, &dict.ranges)?;
        let better = match best {
            None => true,
            Some((j, c)) => match cost.total_cmp(&c) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => tie_break(dict, i, j),
            },
        };
        if better {
            best = Some((i, cost));
        }
    }
    Ok(best.unwrap().0)
}

fn tie_break(dict: &Dictionary, i: usize, j: usize) -> bool {
    let (a, b) = (&dict.attrs[i], &dict.attrs[j]);
    match a.msll_db.total_cmp(&b.msll_db) {
        std::cmp::Ordering::Less => return true,
        std::cmp::Ordering::Greater => return false,
        std::cmp::Ordering::Equal => {}
    }
    match a.ecc.total_cmp(&b.ecc) {
        std::cmp::Ordering::Less => return true,
        std::cmp::Ordering::Greater => return false,
        std::cmp::Ordering::Equal => {}
    }
    let flat = |c: &SuperArrayConfig| -> Vec<f64> { c.centers.iter().flatten().copied().collect() };
    let fa = flat(&dict.configs[i]);
    let fb = flat(&dict.configs[j]);
    for (x, y) in fa.iter().zip(&fb) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Parameters of the local refinement stage.
#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    /// Full cyclic rounds over all modules.
    pub rounds: usize,
    /// Candidate offsets per axis inside one grid cell (a 5x5 sub-grid at
    /// pitch `Δg/4` spans the cell).
    pub steps_per_axis: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            rounds: 3,
            steps_per_axis: 5,
        }
    }
}

/// One accepted (or retained) refinement state, for cost-trace logging.
#[derive(Debug, Clone, Copy)]
pub struct RefineStep {
    pub round: usize,
    pub module: usize,
    pub cost: f64,
    pub attrs: BeamAttributes,
}

/// Cyclic coordinate descent over module positions within one grid cell,
/// at sub-grid resolution. The weighted cost is non-increasing across
/// accepted moves; the input is returned unchanged when no move improves it.
pub fn local_refine(
    config: &SuperArrayConfig,
    weights: &ObjectiveWeights,
    ranges: &ObjectiveRanges,
    scorer: &PatternScorer,
    grid: &DesignGrid,
    layout: &ElementLayout,
    opts: &RefineOptions,
) -> Result<(SuperArrayConfig, Vec<RefineStep>)> {
    weights.validate()?;
    if !config.satisfies_aos(layout) {
        return Err(Error::ConstraintViolation(
            "refinement input violates the no-overlap constraint".into(),
        ));
    }
    let m = opts.steps_per_axis.max(1);
    let sub_pitch = grid.pitch / 4.0;
    let offsets: Vec<f64> = (0..m)
        .map(|i| (i as f64 - (m as f64 - 1.0) / 2.0) * sub_pitch)
        .collect();

    let mut current = config.clone();
    let mut cur_attrs = scorer.attributes(&current.centers)?;
    let mut cur_cost = weighted_cost(&cur_attrs, weights, ranges)?;
    let mut trace = vec![RefineStep {
        round: 0,
        module: usize::MAX,
        cost: cur_cost,
        attrs: cur_attrs,
    }];

    for round in 0..opts.rounds {
        for i in 0..current.n_subarrays() {
            let base = current.centers[i];
            // Candidate positions, evaluated in parallel in a fixed order.
            let mut candidates = Vec::with_capacity(m * m);
            for &dy in &offsets {
                for &dx in &offsets {
                    if dx == 0.0 && dy == 0.0 {
                        continue;
                    }
                    candidates.push([base[0] + dx, base[1] + dy]);
                }
            }
            let scored: Vec<Option<(f64, BeamAttributes, [f64; 2])>> = candidates
                .par_iter()
                .map(|&cand| {
                    let mut trial = current.clone();
                    trial.centers[i] = cand;
                    let rect = layout.footprint.rect_at(cand, trial.poses[i]);
                    if !grid.extent.contains_rect(&rect) || !trial.satisfies_aos(layout) {
                        return None;
                    }
                    let attrs = scorer.attributes(&trial.centers).ok()?;
                    let cost = weighted_cost(&attrs, weights, ranges).ok()?;
                    Some((cost, attrs, cand))
                })
                .collect();
            let mut best: Option<(f64, BeamAttributes, [f64; 2])> = None;
            for s in scored.into_iter().flatten() {
                let better = match &best {
                    None => s.0 < cur_cost,
                    Some(b) => s.0 < b.0,
                };
                if better {
                    best = Some(s);
                }
            }
            if let Some((cost, attrs, cand)) = best {
                current.centers[i] = cand;
                current.grid_id = None;
                cur_cost = cost;
                cur_attrs = attrs;
                trace.push(RefineStep {
                    round,
                    module: i,
                    cost,
                    attrs,
                });
            }
        }
    }
    let _ = cur_attrs;
    Ok((current, trace))
}
