//! Block-diagonal compressive measurements per subarray, the empirical
//! 2K-isometry diagnostic, and compressive NOMP.
//!
//! Each subarray takes `M_i` compressive measurements through an independent
//! `M_i x N_e` matrix with entries drawn uniformly from the QPSK alphabet
//! `{±1, ±j}/sqrt(M_i)`; columns are explicitly re-normalized to unit norm
//! afterwards, which preserves the steering-vector norm on average while
//! scaling the effective noise variance by `N/M`.

use num_complex::Complex64;
use rand::prelude::*;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{
    nomp_with, prepare_dictionary, EstimationResult, FullSensing, ProjectedDictionary, Sensing,
    SteeringDictionary,
};

/// One per-subarray sensing block (`rows x n_e`, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub rows: usize,
    pub entries: Vec<Complex64>,
}

/// Block-diagonal measurement matrix `Φ = diag(Φ_1, ..., Φ_{N_s})`. The
/// block structure is the representation, so off-block entries are exactly
/// zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub blocks: Vec<Block>,
    pub n_e: usize,
    /// Set only by [`identity_measurement`]: the debug pass-through mode in
    /// which every compressive operation reduces exactly to its
    /// full-measurement counterpart.
    pub identity: bool,
}

impl MeasurementMatrix {
    pub fn n_total(&self) -> usize {
        self.blocks.len() * self.n_e
    }

    pub fn m_total(&self) -> usize {
        self.blocks.iter().map(|b| b.rows).sum()
    }

    /// `y = Φ x` over the block-diagonal structure.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_total(), "input length mismatch");
        if self.identity {
            return x.to_vec();
        }
        let mut y = Vec::with_capacity(self.m_total());
        for (s, block) in self.blocks.iter().enumerate() {
            let seg = &x[s * self.n_e..(s + 1) * self.n_e];
            for r in 0..block.rows {
                let row = &block.entries[r * self.n_e..(r + 1) * self.n_e];
                let mut acc = Complex64::new(0.0, 0.0);
                for (w, xi) in row.iter().zip(seg) {
                    acc += w * xi;
                }
                y.push(acc);
            }
        }
        y
    }
}

/// Draw a block-diagonal QPSK measurement matrix with unit-norm columns.
pub fn draw_measurement(
    n_s: usize,
    n_e: usize,
    m_list: &[usize],
    rng: &mut impl Rng,
) -> Result<MeasurementMatrix> {
    if m_list.len() != n_s {
        return Err(Error::invalid(format!(
            "need one measurement count per subarray: got {} for {n_s}",
            m_list.len()
        )));
    }
    let mut blocks = Vec::with_capacity(n_s);
    for &m in m_list {
        if m < 1 || m > n_e {
            return Err(Error::invalid(format!(
                "per-subarray measurements must satisfy 1 <= M_i <= {n_e}, got {m}"
            )));
        }
        let amp = 1.0 / (m as f64).sqrt();
        let mut entries = Vec::with_capacity(m * n_e);
        for _ in 0..m * n_e {
            let e = match rng.gen_range(0..4u8) {
                0 => Complex64::new(amp, 0.0),
                1 => Complex64::new(-amp, 0.0),
                2 => Complex64::new(0.0, amp),
                _ => Complex64::new(0.0, -amp),
            };
            entries.push(e);
        }
        // Explicit unit-column normalization pass.
        for c in 0..n_e {
            let norm = (0..m)
                .map(|r| entries[r * n_e + c].norm_sqr())
                .sum::<f64>()
                .sqrt();
            for r in 0..m {
                entries[r * n_e + c] /= norm;
            }
        }
        blocks.push(Block { rows: m, entries });
    }
    Ok(MeasurementMatrix {
        blocks,
        n_e,
        identity: false,
    })
}

/// Debug identity sensing: `M_i = N_e` with `Φ_i = I`.
pub fn identity_measurement(n_s: usize, n_e: usize) -> MeasurementMatrix {
    let mut entries = vec![Complex64::new(0.0, 0.0); n_e * n_e];
    for i in 0..n_e {
        entries[i * n_e + i] = Complex64::new(1.0, 0.0);
    }
    MeasurementMatrix {
        blocks: vec![Block { rows: n_e, entries }; n_s],
        n_e,
        identity: true,
    }
}

impl Sensing for MeasurementMatrix {
    fn project(&self, v: Vec<Complex64>) -> Vec<Complex64> {
        if self.identity {
            return v;
        }
        self.apply(&v)
    }

    fn steering_norm2(&self, resp: &[Complex64]) -> f64 {
        if self.identity {
            return resp.len() as f64;
        }
        resp.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Empirical 2K-isometry bracket: extremes of
/// `10 log10(||Φ S b||^2 / ||S b||^2)` over random sparse combinations of
/// steering columns (`sparsity` random support atoms with complex Gaussian
/// coefficients).
pub fn isometry_ratio(
    phi: &MeasurementMatrix,
    dict: &SteeringDictionary,
    sparsity: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if sparsity < 1 || sparsity > dict.len() {
        return Err(Error::invalid(format!(
            "sparsity must lie in [1, {}], got {sparsity}",
            dict.len()
        )));
    }
    if trials < 1 {
        return Err(Error::invalid("need at least one trial"));
    }
    let n = dict.n_elements;
    let (lo, hi) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::estimation::trial_rng(seed, t as u64);
            // Random support without replacement.
            let mut support = Vec::with_capacity(sparsity);
            while support.len() < sparsity {
                let j = rng.gen_range(0..dict.len());
                if !support.contains(&j) {
                    support.push(j);
                }
            }
            let mut combo = vec![Complex64::new(0.0, 0.0); n];
            for &j in &support {
                // Unit-variance complex Gaussian coefficient via Box-Muller.
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                let r = (-2.0 * u1.ln()).sqrt();
                let b = Complex64::new(
                    r * (std::f64::consts::TAU * u2).cos(),
                    r * (std::f64::consts::TAU * u2).sin(),
                ) / 2f64.sqrt();
                for (ci, si) in combo.iter_mut().zip(dict.column(j)) {
                    *ci += b * si;
                }
            }
            let den: f64 = combo.iter().map(|z| z.norm_sqr()).sum();
            let num: f64 = phi.apply(&combo).iter().map(|z| z.norm_sqr()).sum();
            let ratio_db = 10.0 * (num / den).log10();
            (ratio_db, ratio_db)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    Ok((lo, hi))
}

/// Project a steering dictionary through the measurement matrix once, for
/// reuse across trials.
pub fn compress_dictionary(
    phi: &MeasurementMatrix,
    dict: &SteeringDictionary,
) -> ProjectedDictionary {
    if phi.identity {
        prepare_dictionary(&FullSensing, dict)
    } else {
        prepare_dictionary(phi, dict)
    }
}

/// NOMP on compressive measurements `y = Φ x`: identical algorithm with
/// steering responses mapped through `Φ` in detection, gradient and Hessian.
/// With the identity sensing this is bit-for-bit the full-measurement
/// estimator.
pub fn compressive_nomp(
    y: &[Complex64],
    phi: &MeasurementMatrix,
    positions: &[[f64; 2]],
    pdict: &ProjectedDictionary,
    k: usize,
    rounds: usize,
) -> Result<EstimationResult> {
    if phi.identity {
        nomp_with(&FullSensing, pdict, positions, y, k, rounds)
    } else {
        nomp_with(phi, pdict, positions, y, k, rounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{
        make_scenario, nomp, synthesize, trial_rng, Source, SteeringDictionary,
    };
    use approx::assert_relative_eq;

    fn two_subarray_positions() -> Vec<[f64; 2]> {
        let layout = crate::geometry::ElementLayout::rectangular(4, 4, 0.5, 0.6).unwrap();
        let cfg = crate::geometry::SuperArrayConfig::all_up(vec![[-3.0, 0.0], [3.0, 0.0]]).unwrap();
        crate::geometry::expand_super_array(&cfg, &layout).unwrap()
    }

    #[test]
    fn draw_rejects_bad_measurement_counts() {
        let mut rng = trial_rng(1, 0);
        assert!(draw_measurement(2, 16, &[4], &mut rng).is_err());
        assert!(draw_measurement(2, 16, &[4, 17], &mut rng).is_err());
        assert!(draw_measurement(2, 16, &[4, 0], &mut rng).is_err());
    }

    #[test]
    fn drawn_blocks_have_unit_columns_and_qpsk_structure() {
        let mut rng = trial_rng(2, 0);
        let phi = draw_measurement(8, 16, &[4; 8], &mut rng).unwrap();
        assert_eq!(phi.m_total(), 32);
        assert_eq!(phi.n_total(), 128);
        for b in &phi.blocks {
            for c in 0..16 {
                let n2: f64 = (0..b.rows).map(|r| b.entries[r * 16 + c].norm_sqr()).sum();
                assert_relative_eq!(n2, 1.0, epsilon = 1e-12);
            }
            for e in &b.entries {
                // Every entry is a scaled QPSK symbol: one component zero.
                assert!(e.re == 0.0 || e.im == 0.0);
                assert!(e.norm() > 0.0);
            }
        }
    }

    #[test]
    fn apply_matches_dense_multiplication() {
        let mut rng = trial_rng(3, 0);
        let phi = draw_measurement(3, 4, &[2, 3, 1], &mut rng).unwrap();
        let x: Vec<Complex64> = (0..12)
            .map(|i| Complex64::new(i as f64 * 0.3 - 1.0, 0.1 * i as f64))
            .collect();
        let y = phi.apply(&x);
        assert_eq!(y.len(), 6);
        // Dense oracle with explicit zero off-blocks.
        let (m, n) = (6, 12);
        let mut dense = vec![Complex64::new(0.0, 0.0); m * n];
        let mut row0 = 0;
        for (s, b) in phi.blocks.iter().enumerate() {
            for r in 0..b.rows {
                for c in 0..4 {
                    dense[(row0 + r) * n + s * 4 + c] = b.entries[r * 4 + c];
                }
            }
            row0 += b.rows;
        }
        for r in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                acc += dense[r * n + c] * x[c];
            }
            assert!((acc - y[r]).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_preserved_on_average() {
        let pos = two_subarray_positions();
        let mut acc = 0.0;
        let draws = 1000;
        for t in 0..draws {
            let mut rng = trial_rng(4, t);
            let phi = draw_measurement(2, 16, &[4, 4], &mut rng).unwrap();
            let u = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let s = crate::estimation::steering_vector(&pos, u);
            let num: f64 = phi.apply(&s).iter().map(|z| z.norm_sqr()).sum();
            let den: f64 = s.iter().map(|z| z.norm_sqr()).sum();
            acc += num / den;
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean ratio {mean}");
    }

    #[test]
    fn identity_sensing_reduces_to_full_pipeline_bit_exactly() {
        let pos = two_subarray_positions();
        let dict = SteeringDictionary::covering_disc(&pos, 0.5, 0.05).unwrap();
        let phi = identity_measurement(2, 16);
        let pdict = compress_dictionary(&phi, &dict);

        let mut rng = trial_rng(5, 0);
        let truth = make_scenario(2, true, 0.16, 0.0, 0.5, &mut rng).unwrap();
        let snap = synthesize(&truth, 0.1, &pos, &mut rng);
        let y = phi.apply(&snap.x);
        assert_eq!(y, snap.x);

        let full = nomp(&snap.x, &pos, &dict, 2, 3).unwrap();
        let comp = compressive_nomp(&y, &phi, &pos, &pdict, 2, 3).unwrap();
        assert_eq!(full.estimates.len(), comp.estimates.len());
        for (a, b) in full.estimates.iter().zip(&comp.estimates) {
            assert_eq!(a.0[0].to_bits(), b.0[0].to_bits());
            assert_eq!(a.0[1].to_bits(), b.0[1].to_bits());
            assert_eq!(a.1.re.to_bits(), b.1.re.to_bits());
            assert_eq!(a.1.im.to_bits(), b.1.im.to_bits());
        }
        assert_eq!(full.residual_power.to_bits(), comp.residual_power.to_bits());
    }

    #[test]
    fn identity_isometry_ratio_is_zero_db() {
        let pos = two_subarray_positions();
        let dict = SteeringDictionary::covering_disc(&pos, 0.5, 0.1).unwrap();
        let phi = identity_measurement(2, 16);
        let (lo, hi) = isometry_ratio(&phi, &dict, 4, 200, 7).unwrap();
        assert!(lo.abs() < 1e-9, "lo {lo}");
        assert!(hi.abs() < 1e-9, "hi {hi}");
    }

    #[test]
    fn fewer_measurements_widen_the_isometry_spread() {
        let pos = two_subarray_positions();
        let dict = SteeringDictionary::covering_disc(&pos, 0.5, 0.1).unwrap();
        let mut rng = trial_rng(8, 0);
        let phi_m8 = draw_measurement(2, 16, &[4, 4], &mut rng).unwrap();
        let phi_m2 = draw_measurement(2, 16, &[1, 1], &mut rng).unwrap();
        let (lo8, hi8) = isometry_ratio(&phi_m8, &dict, 4, 3000, 9).unwrap();
        let (lo2, hi2) = isometry_ratio(&phi_m2, &dict, 4, 3000, 9).unwrap();
        assert!(hi2 - lo2 > hi8 - lo8, "[{lo2},{hi2}] vs [{lo8},{hi8}]");
    }

    #[test]
    fn compressive_recovery_of_noiseless_source() {
        let pos = two_subarray_positions();
        let dict = SteeringDictionary::covering_disc(&pos, 0.5, 0.05).unwrap();
        let mut rng = trial_rng(10, 0);
        let phi = draw_measurement(2, 16, &[8, 8], &mut rng).unwrap();
        let pdict = compress_dictionary(&phi, &dict);
        let truth = vec![Source {
            u: [0.15, -0.1],
            gain: Complex64::new(1.0, 0.2),
        }];
        let snap = synthesize(&truth, 0.0, &pos, &mut rng);
        let y = phi.apply(&snap.x);
        let res = compressive_nomp(&y, &phi, &pos, &pdict, 1, 5).unwrap();
        let (u, _) = res.estimates[0];
        let err = (u[0] - 0.15).hypot(u[1] + 0.1);
        assert!(err < 1e-6, "err {err}");
        assert!(res.residual_power < 1e-12);
    }
}
