//! Signal synthesis, maximum-likelihood and Newtonized-OMP DoA estimation,
//! Monte-Carlo scenario generation and error metrics.
//!
//! The estimator machinery is generic over a [`Sensing`] front end so the
//! compressive pipeline reuses the identical detection/refinement code with
//! steering responses mapped through the measurement matrix. The plain
//! full-measurement path is the [`FullSensing`] pass-through.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::Sym2;
use crate::WAVENUMBER;

/// One far-field source: DoA in directional cosines and complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub u: [f64; 2],
    pub gain: Complex64,
}

/// One received snapshot plus the ground truth that generated it.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub x: Vec<Complex64>,
    pub truth: Vec<Source>,
    pub sigma2: f64,
}

/// Array response `s_i(u) = exp(j k u^T d_i)`.
pub fn steering_vector(positions: &[[f64; 2]], u: [f64; 2]) -> Vec<Complex64> {
    positions
        .iter()
        .map(|p| Complex64::from_polar(1.0, WAVENUMBER * (u[0] * p[0] + u[1] * p[1])))
        .collect()
}

/// Standard normal pair via Box-Muller (keeps the RNG dependency minimal and
/// the draw count per trial fixed).
fn gaussian_pair(rng: &mut impl Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = std::f64::consts::TAU * u2;
    (r * th.cos(), r * th.sin())
}

/// Synthesize `x = Σ α_j s(u_j) + z` with circularly-symmetric complex white
/// noise of variance `sigma2` per element.
pub fn synthesize(
    truth: &[Source],
    sigma2: f64,
    positions: &[[f64; 2]],
    rng: &mut impl Rng,
) -> Snapshot {
    let mut x = vec![Complex64::new(0.0, 0.0); positions.len()];
    for src in truth {
        let s = steering_vector(positions, src.u);
        for (xi, si) in x.iter_mut().zip(s) {
            *xi += src.gain * si;
        }
    }
    if sigma2 > 0.0 {
        let scale = (sigma2 / 2.0).sqrt();
        for xi in x.iter_mut() {
            let (g1, g2) = gaussian_pair(rng);
            *xi += Complex64::new(scale * g1, scale * g2);
        }
    }
    Snapshot {
        x,
        truth: truth.to_vec(),
        sigma2,
    }
}

/// Precomputed steering responses on a DoA grid covering the region of
/// interest.
#[derive(Debug, Clone)]
pub struct SteeringDictionary {
    pub doas: Vec<[f64; 2]>,
    pub n_elements: usize,
    cols: Vec<Complex64>, // column-major, n_elements per column
}

impl SteeringDictionary {
    /// Rectangular-lattice DoAs covering the disc of the given radius.
    pub fn covering_disc(positions: &[[f64; 2]], radius: f64, pitch: f64) -> Result<Self> {
        if radius <= 0.0 || pitch <= 0.0 {
            return Err(Error::invalid(
                "dictionary radius and pitch must be positive",
            ));
        }
        let steps = (radius / pitch).floor() as i64;
        let mut doas = Vec::new();
        for iy in -steps..=steps {
            for ix in -steps..=steps {
                let u = [ix as f64 * pitch, iy as f64 * pitch];
                if u[0].hypot(u[1]) <= radius {
                    doas.push(u);
                }
            }
        }
        let mut cols = Vec::with_capacity(doas.len() * positions.len());
        for &u in &doas {
            cols.extend(steering_vector(positions, u));
        }
        Ok(SteeringDictionary {
            doas,
            n_elements: positions.len(),
            cols,
        })
    }

    pub fn len(&self) -> usize {
        self.doas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doas.is_empty()
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.cols[j * self.n_elements..(j + 1) * self.n_elements]
    }
}

/// Measurement front end applied to element-space vectors.
pub trait Sensing: Sync {
    fn project(&self, v: Vec<Complex64>) -> Vec<Complex64>;
    /// Squared norm of a projected steering vector; the pass-through yields
    /// the exact element count.
    fn steering_norm2(&self, resp: &[Complex64]) -> f64;
}

/// Identity front end: the estimator sees the raw element samples.
pub struct FullSensing;

impl Sensing for FullSensing {
    fn project(&self, v: Vec<Complex64>) -> Vec<Complex64> {
        v
    }

    fn steering_norm2(&self, resp: &[Complex64]) -> f64 {
        resp.len() as f64
    }
}

/// Dictionary columns mapped through a sensing front end, with norms.
#[derive(Debug, Clone)]
pub struct ProjectedDictionary {
    pub doas: Vec<[f64; 2]>,
    pub dim: usize,
    cols: Vec<Complex64>,
    norms2: Vec<f64>,
}

impl ProjectedDictionary {
    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.cols[j * self.dim..(j + 1) * self.dim]
    }
}

pub fn prepare_dictionary<S: Sensing>(
    sensing: &S,
    dict: &SteeringDictionary,
) -> ProjectedDictionary {
    let mut cols = Vec::new();
    let mut norms2 = Vec::with_capacity(dict.len());
    let mut dim = dict.n_elements;
    for j in 0..dict.len() {
        let projected = sensing.project(dict.column(j).to_vec());
        dim = projected.len();
        norms2.push(sensing.steering_norm2(&projected));
        cols.extend(projected);
    }
    ProjectedDictionary {
        doas: dict.doas.clone(),
        dim,
        cols,
        norms2,
    }
}

/// Estimates plus residual diagnostics from one NOMP run.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub estimates: Vec<(/* u */ [f64; 2], /* gain */ Complex64)>,
    pub residual_power: f64,
    /// Residual power after each detection round (non-increasing).
    pub residual_history: Vec<f64>,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Gradient and Hessian of `T(u, α) = ||x - α q(u)||^2` with respect to `u`
/// at fixed gain, where `q(u)` is the (projected) steering response.
pub fn t_gradient_hessian<S: Sensing>(
    sensing: &S,
    positions: &[[f64; 2]],
    x_target: &[Complex64],
    u: [f64; 2],
    alpha: Complex64,
) -> ([f64; 2], Sym2) {
    let s = steering_vector(positions, u);
    let k = WAVENUMBER;
    let jk = Complex64::new(0.0, k);
    let dx: Vec<Complex64> = s
        .iter()
        .zip(positions)
        .map(|(si, p)| jk * p[0] * si)
        .collect();
    let dy: Vec<Complex64> = s
        .iter()
        .zip(positions)
        .map(|(si, p)| jk * p[1] * si)
        .collect();
    let dxx: Vec<Complex64> = s
        .iter()
        .zip(positions)
        .map(|(si, p)| -k * k * p[0] * p[0] * si)
        .collect();
    let dxy: Vec<Complex64> = s
        .iter()
        .zip(positions)
        .map(|(si, p)| -k * k * p[0] * p[1] * si)
        .collect();
    let dyy: Vec<Complex64> = s
        .iter()
        .zip(positions)
        .map(|(si, p)| -k * k * p[1] * p[1] * si)
        .collect();

    let q = sensing.project(s);
    let qx = sensing.project(dx);
    let qy = sensing.project(dy);
    let qxx = sensing.project(dxx);
    let qxy = sensing.project(dxy);
    let qyy = sensing.project(dyy);

    let mut resid: Vec<Complex64> = x_target.to_vec();
    for (r, qi) in resid.iter_mut().zip(&q) {
        *r -= alpha * qi;
    }

    let g = [
        -2.0 * (alpha * inner(&resid, &qx)).re,
        -2.0 * (alpha * inner(&resid, &qy)).re,
    ];
    let a2 = alpha.norm_sqr();
    let h = Sym2 {
        xx: 2.0 * (a2 * inner(&qx, &qx).re - (alpha * inner(&resid, &qxx)).re),
        xy: 2.0 * (a2 * inner(&qx, &qy).re - (alpha * inner(&resid, &qxy)).re),
        yy: 2.0 * (a2 * inner(&qy, &qy).re - (alpha * inner(&resid, &qyy)).re),
    };
    (g, h)
}

fn matched_filter_score<S: Sensing>(
    sensing: &S,
    positions: &[[f64; 2]],
    x_target: &[Complex64],
    u: [f64; 2],
) -> (f64, Vec<Complex64>, f64) {
    let q = sensing.project(steering_vector(positions, u));
    let nu = sensing.steering_norm2(&q);
    let score = inner(&q, x_target).norm_sqr() / nu;
    (score, q, nu)
}

/// One damped Newton step on `T(u, α)`, falling back to a backtracked
/// gradient step; the move is kept only if the residual cost decreases with
/// the gain re-solved in closed form. Returns the (possibly unchanged)
/// estimate.
pub fn newton_refine<S: Sensing>(
    sensing: &S,
    positions: &[[f64; 2]],
    x_target: &[Complex64],
    u: [f64; 2],
    alpha: Complex64,
) -> ([f64; 2], Complex64) {
    let (score0, _, _) = matched_filter_score(sensing, positions, x_target, u);
    let (g, h) = t_gradient_hessian(sensing, positions, x_target, u, alpha);

    let mut candidates: Vec<[f64; 2]> = Vec::new();
    if h.is_positive_definite() {
        if let Some(step) = h.solve([-g[0], -g[1]]) {
            let mut damp = 1.0;
            for _ in 0..8 {
                candidates.push([u[0] + damp * step[0], u[1] + damp * step[1]]);
                damp *= 0.5;
            }
        }
    }
    // Gradient fallback, scaled by the Hessian trace as a curvature estimate.
    let curv = h.trace().abs().max(1e-12);
    let mut mu = 2.0 / curv;
    for _ in 0..8 {
        candidates.push([u[0] - mu * g[0], u[1] - mu * g[1]]);
        mu *= 0.5;
    }

    for cand in candidates {
        let norm = cand[0].hypot(cand[1]);
        let cand = if norm >= 0.9999 {
            [cand[0] * 0.9999 / norm, cand[1] * 0.9999 / norm]
        } else {
            cand
        };
        let (score, q, nu) = matched_filter_score(sensing, positions, x_target, cand);
        if score > score0 {
            let gain = inner(&q, x_target) / nu;
            return (cand, gain);
        }
    }
    // No improvement: keep the position, re-solve the gain.
    let q = sensing.project(steering_vector(positions, u));
    let nu = sensing.steering_norm2(&q);
    (u, inner(&q, x_target) / nu)
}

/// Newtonized orthogonal matching pursuit with a known source count: `k`
/// detect/refine iterations on the running residual, re-refining every
/// current estimate cyclically after each detection.
pub fn nomp_with<S: Sensing>(
    sensing: &S,
    pdict: &ProjectedDictionary,
    positions: &[[f64; 2]],
    y: &[Complex64],
    k: usize,
    rounds: usize,
) -> Result<EstimationResult> {
    if k < 1 {
        return Err(Error::invalid("source count must be at least one"));
    }
    if k > y.len() {
        return Err(Error::invalid(format!(
            "cannot estimate {k} sources from {} measurements",
            y.len()
        )));
    }
    if y.len() != pdict.dim {
        return Err(Error::invalid(
            "measurement length does not match the projected dictionary",
        ));
    }

    let mut residual = y.to_vec();
    let mut estimates: Vec<([f64; 2], Complex64)> = Vec::with_capacity(k);
    let mut history = vec![norm2(&residual)];

    for _ in 0..k {
        // Coarse detection over the grid.
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..pdict.doas.len() {
            let c = pdict.column(j);
            let score = inner(c, &residual).norm_sqr() / pdict.norms2[j];
            if score > best.1 {
                best = (j, score);
            }
        }
        let j = best.0;
        let col = pdict.column(j);
        let gain = inner(col, &residual) / pdict.norms2[j];
        for (r, c) in residual.iter_mut().zip(col) {
            *r -= gain * c;
        }
        estimates.push((pdict.doas[j], gain));

        // Cyclic refinement of all current estimates.
        for _ in 0..rounds {
            for i in 0..estimates.len() {
                let (u_i, a_i) = estimates[i];
                let q_i = sensing.project(steering_vector(positions, u_i));
                // Add the component back, refine against the lifted target.
                let mut x_t = residual.clone();
                for (xt, qi) in x_t.iter_mut().zip(&q_i) {
                    *xt += a_i * qi;
                }
                let (u_new, a_new) = newton_refine(sensing, positions, &x_t, u_i, a_i);
                let q_new = sensing.project(steering_vector(positions, u_new));
                for ((r, xt), qn) in residual.iter_mut().zip(&x_t).zip(&q_new) {
                    *r = xt - a_new * qn;
                }
                estimates[i] = (u_new, a_new);
            }
        }
        history.push(norm2(&residual));
    }

    Ok(EstimationResult {
        estimates,
        residual_power: *history.last().unwrap(),
        residual_history: history,
    })
}

/// NOMP with an unknown source count: keep detecting until the residual
/// power falls below `residual_fraction` of the input power or `max_k`
/// sources have been extracted. Evaluation campaigns use the known-count
/// [`nomp`] instead; this variant exists for exploratory use.
pub fn nomp_adaptive<S: Sensing>(
    sensing: &S,
    pdict: &ProjectedDictionary,
    positions: &[[f64; 2]],
    y: &[Complex64],
    max_k: usize,
    rounds: usize,
    residual_fraction: f64,
) -> Result<EstimationResult> {
    if !(0.0..1.0).contains(&residual_fraction) {
        return Err(Error::invalid("residual fraction must lie in [0, 1)"));
    }
    let total = norm2(y);
    let mut best: Option<EstimationResult> = None;
    for k in 1..=max_k.min(y.len()) {
        let res = nomp_with(sensing, pdict, positions, y, k, rounds)?;
        let done = res.residual_power <= residual_fraction * total;
        best = Some(res);
        if done {
            break;
        }
    }
    best.ok_or_else(|| Error::invalid("max_k must be at least one"))
}

/// Full-measurement NOMP.
pub fn nomp(
    x: &[Complex64],
    positions: &[[f64; 2]],
    dict: &SteeringDictionary,
    k: usize,
    rounds: usize,
) -> Result<EstimationResult> {
    let pdict = prepare_dictionary(&FullSensing, dict);
    nomp_with(&FullSensing, &pdict, positions, x, k, rounds)
}

/// Single-source ML estimate: grid argmax of the noncoherent statistic
/// followed by one Newton polish.
pub fn mle_single(
    x: &[Complex64],
    positions: &[[f64; 2]],
    dict: &SteeringDictionary,
) -> Result<[f64; 2]> {
    let r = nomp(x, positions, dict, 1, 1)?;
    Ok(r.estimates[0].0)
}

/// Random multi-source scene: a primary source (optionally pinned at
/// broadside) plus interferers rejection-sampled to keep a minimum
/// separation from the primary, at the given relative level in dB.
pub fn make_scenario(
    k: usize,
    primary_broadside: bool,
    min_sep: f64,
    interferer_level_db: f64,
    roi_radius: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Source>> {
    if k < 1 {
        return Err(Error::invalid("scenario needs at least one source"));
    }
    if min_sep > 2.0 * roi_radius {
        return Err(Error::InfeasibleScenario(
            "separation exceeds the ROI diameter".into(),
        ));
    }
    let uniform_disc = |rng: &mut dyn RngCore| -> [f64; 2] {
        let r = roi_radius * rng.gen::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.gen::<f64>();
        [r * th.cos(), r * th.sin()]
    };
    let primary_u = if primary_broadside {
        [0.0, 0.0]
    } else {
        uniform_disc(rng)
    };
    let mut sources = vec![Source {
        u: primary_u,
        gain: Complex64::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>()),
    }];
    let level = 10f64.powf(interferer_level_db / 20.0);
    for _ in 1..k {
        let mut placed = false;
        for _ in 0..10_000 {
            let u = uniform_disc(rng);
            let d = (u[0] - primary_u[0]).hypot(u[1] - primary_u[1]);
            if d >= min_sep && sources.iter().all(|s| s.u != u) {
                sources.push(Source {
                    u,
                    gain: Complex64::from_polar(level, std::f64::consts::TAU * rng.gen::<f64>()),
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InfeasibleScenario(format!(
                "could not place an interferer {min_sep} away within the ROI"
            )));
        }
    }
    Ok(sources)
}

/// Per-truth matched DoA errors under the minimum-cost assignment between
/// truth and estimates (brute force over permutations; source counts here
/// are small).
pub fn matched_errors(truth: &[[f64; 2]], estimates: &[[f64; 2]]) -> Vec<f64> {
    assert_eq!(truth.len(), estimates.len());
    let k = truth.len();
    assert!(k <= 9, "assignment is brute-force over permutations");
    let dist = |a: [f64; 2], b: [f64; 2]| -> f64 { (a[0] - b[0]).hypot(a[1] - b[1]) };

    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_perm = perm.clone();
    let mut best_cost = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let cost: f64 = (0..k)
            .map(|i| dist(truth[i], estimates[p[i]]).powi(2))
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best_perm = p.to_vec();
        }
    });
    (0..k)
        .map(|i| dist(truth[i], estimates[best_perm[i]]))
        .collect()
}

fn permute(v: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}

/// RMSE (trace-convention: `sqrt(mean(e^2)/2)`) and the complementary CDF of
/// error magnitudes at log-spaced thresholds.
#[derive(Debug, Clone)]
pub struct Metrics {
    pub rmse: f64,
    /// `(threshold in error units, P(error > threshold))`, thresholds from
    /// -40 dB to 0 dB in 1 dB steps.
    pub ccdf: Vec<(f64, f64)>,
}

pub fn metrics(errors: &[f64]) -> Result<Metrics> {
    if errors.is_empty() {
        return Err(Error::invalid("metrics need at least one trial"));
    }
    let n = errors.len() as f64;
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n / 2.0).sqrt();
    let ccdf = (-40..=0)
        .map(|db| {
            let thr = 10f64.powf(db as f64 / 20.0);
            let p = errors.iter().filter(|&&e| e > thr).count() as f64 / n;
            (thr, p)
        })
        .collect();
    Ok(Metrics { rmse, ccdf })
}

/// Scene parameters of one Monte-Carlo campaign.
#[derive(Debug, Clone, Copy)]
pub struct TrialSettings {
    pub k: usize,
    pub primary_broadside: bool,
    pub min_sep: f64,
    pub interferer_level_db: f64,
    pub roi_radius: f64,
    pub refine_rounds: usize,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings {
            k: 1,
            primary_broadside: true,
            min_sep: 0.16,
            interferer_level_db: 0.0,
            roi_radius: 0.5,
            refine_rounds: 3,
        }
    }
}

/// Deterministic per-trial RNG stream.
pub fn trial_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Run independent trials at one SNR and return the matched error of the
/// primary source per trial. Trials are parallel; every trial derives its
/// own RNG stream from `(master_seed, stream_tag, trial index)`, so results
/// do not depend on scheduling or thread count.
pub fn run_trials<S: Sensing>(
    sensing: &S,
    pdict: &ProjectedDictionary,
    positions: &[[f64; 2]],
    settings: &TrialSettings,
    snr_db: f64,
    trials: usize,
    master_seed: u64,
    stream_tag: u64,
) -> Result<Vec<f64>> {
    let sigma2 = 10f64.powf(-snr_db / 10.0);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, (stream_tag << 32) | t as u64);
            let truth = make_scenario(
                settings.k,
                settings.primary_broadside,
                settings.min_sep,
                settings.interferer_level_db,
                settings.roi_radius,
                &mut rng,
            )?;
            let snap = synthesize(&truth, sigma2, positions, &mut rng);
            let y = sensing.project(snap.x);
            let result = nomp_with(
                sensing,
                pdict,
                positions,
                &y,
                settings.k,
                settings.refine_rounds,
            )?;
            let truth_u: Vec<[f64; 2]> = truth.iter().map(|s| s.u).collect();
            let est_u: Vec<[f64; 2]> = result.estimates.iter().map(|e| e.0).collect();
            Ok(matched_errors(&truth_u, &est_u)[0])
        })
        .collect()
}
