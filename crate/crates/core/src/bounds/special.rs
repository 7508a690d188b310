//! Modified Bessel functions and the first-order Marcum Q function.
//!
//! Everything works with exponentially scaled Bessel values
//! `Ĩ_k(x) = e^{-x} I_k(x)` so that detection-probability formulas stay
//! finite for the large `γN` products seen in SNR sweeps. Target accuracy is
//! 1e-10 relative over the working range, verified in tests against direct
//! quadrature of the defining integrals.

/// `e^{-x} I_0(x)` for `x >= 0`.
///
/// Power series below `x = 30`, asymptotic expansion above; the asymptotic
/// truncation error at the crossover is far below the 1e-10 target.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 30.0 {
        // sum_k (x^2/4)^k / (k!)^2, then scale.
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut acc = 1.0;
        let mut k = 1.0;
        while term > 1e-18 * acc {
            term *= q / (k * k);
            acc += term;
            k += 1.0;
        }
        acc * (-x).exp()
    } else {
        // 1/sqrt(2 pi x) * sum_k a_k, a_k = ((2k-1)!!)^2 / (k! (8x)^k).
        let mut term = 1.0;
        let mut acc = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * 8.0 * x);
            acc += next;
            if next >= term || next < 1e-18 * acc {
                break;
            }
            term = next;
            k += 1.0;
        }
        acc / (std::f64::consts::TAU * x).sqrt()
    }
}

/// `I_0(x)`; overflows to infinity above `x ~ 713`.
pub fn bessel_i0(x: f64) -> f64 {
    bessel_i0_scaled(x) * x.exp()
}

/// Scaled sequence `Ĩ_0(x) ..= Ĩ_kmax(x)` by Miller's downward recurrence,
/// normalized with `Ĩ_0 + 2 Σ_{k>=1} Ĩ_k = 1`.
pub fn bessel_i_scaled_seq(x: f64, kmax: usize) -> Vec<f64> {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    // Orders beyond ~7.5 sqrt(x) carry mass below e^{-28}; the extra margin
    // absorbs the arbitrary seed of the downward recurrence.
    let start = (kmax + 30).max((7.5 * x.sqrt()) as usize + 30);
    let mut out = vec![0.0; kmax + 1];
    let mut above = 0.0_f64; // trial I_{k+1}
    let mut cur = 1e-280_f64; // trial I_k, k = start
    let mut norm = 2.0 * cur; // I_start contributes with weight 2 (start >= 1)
    if start <= kmax {
        out[start] = cur;
    }
    for k in (1..=start).rev() {
        let below = above + (2.0 * k as f64 / x) * cur;
        above = cur;
        cur = below;
        if k - 1 <= kmax {
            out[k - 1] = cur;
        }
        norm += if k - 1 >= 1 { 2.0 * cur } else { cur };
        if cur > 1e270 {
            let s = 1e-270;
            cur *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// First-order Marcum Q function `Q_1(a, b)`.
///
/// Branches: the total-probability series of the noncentral chi-square for
/// small `ab`, and geometric sums of scaled Bessel terms above the `ab = 30`
/// crossover (`Q_1 = e^{-(b-a)^2/2} Σ_k (a/b)^k Ĩ_k(ab)` for `b > a`, and
/// the complement for `a > b`).
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0);
    if b == 0.0 {
        return 1.0;
    }
    if a == 0.0 {
        return (-b * b / 2.0).exp();
    }
    if a == b {
        return 0.5 * (1.0 + bessel_i0_scaled(a * b));
    }
    let prod = a * b;
    if a < b {
        if prod <= 30.0 {
            marcum_chi2_series(a, b)
        } else {
            let scale = (-(b - a) * (b - a) / 2.0).exp();
            (scale * bessel_tail_sum(a / b, prod, 0)).clamp(0.0, 1.0)
        }
    } else {
        let scale = (-(a - b) * (a - b) / 2.0).exp();
        (1.0 - scale * bessel_tail_sum(b / a, prod, 1)).clamp(0.0, 1.0)
    }
}

/// `Σ_{k >= k0} q^k Ĩ_k(x)` with `0 < q < 1`.
fn bessel_tail_sum(q: f64, x: f64, k0: usize) -> f64 {
    let kmax = (7.5 * x.sqrt()) as usize + 40;
    let seq = bessel_i_scaled_seq(x, kmax);
    let mut acc = 0.0;
    let mut w = q.powi(k0 as i32);
    for (k, &ik) in seq.iter().enumerate().skip(k0) {
        let term = w * ik;
        acc += term;
        if term < 1e-18 * acc && (k as f64) > x.sqrt() {
            break;
        }
        w *= q;
    }
    acc
}

/// Noncentral-chi-square total probability series; needs `a^2/2` moderate,
/// which holds whenever `a <= b` and `ab <= 30`.
fn marcum_chi2_series(a: f64, b: f64) -> f64 {
    let x = a * a / 2.0;
    let y = b * b / 2.0;
    let mut pois = (-x).exp();
    let mut gam_term = (-y).exp();
    let mut gam_sum = gam_term;
    let mut acc = pois * gam_sum;
    let n_max = (x + 40.0 * (x + 1.0).sqrt() + 40.0) as usize;
    for n in 1..=n_max {
        pois *= x / n as f64;
        gam_term *= y / n as f64;
        gam_sum += gam_term;
        acc += pois * gam_sum;
        if pois < 1e-18 && (n as f64) > x {
            break;
        }
    }
    acc.clamp(0.0, 1.0)
}

/// Error probability of the optimal noncoherent binary detector for two
/// equal-energy signals with amplitude correlation `r`, at post-integration
/// SNR `gamma_n = γ N`:
/// `P = Q_1(a, b) - 1/2 exp(-(a^2+b^2)/2) I_0(ab)`.
pub fn noncoherent_pe(gamma_n: f64, r: f64) -> f64 {
    debug_assert!(gamma_n >= 0.0);
    let r = r.clamp(0.0, 1.0);
    if gamma_n == 0.0 {
        return 0.5;
    }
    // s = sqrt(1 - r^2), with 1 - s computed cancellation-free.
    let s = ((1.0 - r) * (1.0 + r)).sqrt();
    let one_minus_s = r * r / (1.0 + s);
    let a = (gamma_n / 2.0 * one_minus_s).sqrt();
    let b = (gamma_n / 2.0 * (1.0 + s)).sqrt();
    // exp(-(a^2+b^2)/2) I0(ab) = exp(-(b-a)^2/2) Ĩ0(ab)
    let cross = (-(b - a) * (b - a) / 2.0).exp() * bessel_i0_scaled(a * b);
    (marcum_q1(a, b) - 0.5 * cross).clamp(0.0, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Quadrature oracle: Ĩ_k(x) = (1/π) ∫_0^π e^{x(cosθ-1)} cos(kθ) dθ.
    fn bessel_oracle(x: f64, k: usize) -> f64 {
        let n = 40_000;
        let h = std::f64::consts::PI / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let th = i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * (x * (th.cos() - 1.0)).exp() * (k as f64 * th).cos();
        }
        acc * h / 3.0 / std::f64::consts::PI
    }

    /// Quadrature oracle: Q1(a,b) = ∫_b^∞ t e^{-(t-a)^2/2} Ĩ0(at) dt, using
    /// the separately-validated scaled I0 in the integrand.
    fn marcum_oracle(a: f64, b: f64) -> f64 {
        let hi = (a + 42.0).max(b + 42.0);
        let n = 400_000;
        let h = (hi - b) / n as f64;
        let g = |t: f64| t * (-(t - a) * (t - a) / 2.0).exp() * bessel_i0_scaled(a * t);
        let mut acc = 0.0;
        for i in 0..=n {
            let t = b + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * g(t);
        }
        acc * h / 3.0
    }

    #[test]
    fn i0_matches_quadrature() {
        for &x in &[0.0, 0.1, 1.0, 5.0, 15.0, 29.9, 30.1, 100.0, 1000.0, 6400.0] {
            let got = bessel_i0_scaled(x);
            let want = bessel_oracle(x, 0);
            assert!(
                (got - want).abs() <= 1e-11 * want.abs().max(1e-30),
                "x={x}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn i0_known_value() {
        let got = bessel_i0_scaled(1.0) * 1f64.exp();
        assert!((got - 1.2660658777520084).abs() < 1e-12);
    }

    #[test]
    fn bessel_sequence_matches_quadrature() {
        for &x in &[0.5, 4.0, 35.0, 200.0, 3000.0] {
            let seq = bessel_i_scaled_seq(x, 12);
            for k in 0..=12 {
                let want = bessel_oracle(x, k);
                assert!(
                    (seq[k] - want).abs() <= 1e-10 * want.abs() + 1e-14,
                    "x={x} k={k}: got {}, want {want}",
                    seq[k]
                );
            }
        }
    }

    #[test]
    fn marcum_matches_quadrature() {
        let cases = [
            (0.5, 3.0),
            (3.0, 0.5),
            (1.0, 1.5),
            (5.0, 5.2),
            (5.2, 5.0),
            (10.0, 11.0),
            (2.0, 20.0),
            (20.0, 2.0),
            (30.0, 31.0),
            (60.0, 61.0),
            (40.0, 47.0),
        ];
        for &(a, b) in &cases {
            let got = marcum_q1(a, b);
            let want = marcum_oracle(a, b);
            assert!(
                (got - want).abs() <= 1e-10 * want.max(1e-12) + 1e-13,
                "a={a} b={b}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn marcum_boundary_continuity() {
        // Across the ab = 30 branch switch.
        for &a in &[2.0f64, 4.0, 5.0] {
            let b_lo = 30.0 / a * (1.0 - 1e-12);
            let b_hi = 30.0 / a * (1.0 + 1e-12);
            let lo = marcum_q1(a, b_lo);
            let hi = marcum_q1(a, b_hi);
            assert!((lo - hi).abs() < 1e-9, "a={a}: {lo} vs {hi}");
        }
    }

    #[test]
    fn marcum_degenerate_arguments() {
        assert_eq!(marcum_q1(3.0, 0.0), 1.0);
        assert!((marcum_q1(0.0, 2.0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn pe_equal_signals_is_half() {
        for &gn in &[0.0, 1.0, 10.0, 100.0, 10_000.0] {
            let pe = noncoherent_pe(gn, 1.0);
            assert!((pe - 0.5).abs() <= 1e-10, "gammaN={gn}: {pe}");
        }
    }

    #[test]
    fn pe_orthogonal_signals_closed_form() {
        for &gn in &[0.0, 0.5, 1.0, 4.0, 40.0, 400.0, 1200.0] {
            let pe = noncoherent_pe(gn, 0.0);
            let want = 0.5 * (-gn / 2.0).exp();
            assert!(
                (pe - want).abs() <= 1e-10 * want.max(1e-12),
                "gammaN={gn}: got {pe}, want {want}"
            );
        }
    }

    #[test]
    fn pe_zero_snr_is_half_for_all_r() {
        for i in 0..=10 {
            let r = i as f64 / 10.0;
            assert_eq!(noncoherent_pe(0.0, r), 0.5);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn marcum_symmetry_identity(a in 0.05f64..60.0, b in 0.05f64..60.0) {
            // Q1(a,b) + Q1(b,a) = 1 + e^{-(a-b)^2/2} Ĩ0(ab)
            let lhs = marcum_q1(a, b) + marcum_q1(b, a);
            let rhs = 1.0 + (-(a - b) * (a - b) / 2.0).exp() * bessel_i0_scaled(a * b);
            prop_assert!((lhs - rhs).abs() < 1e-9, "a={a} b={b}: {lhs} vs {rhs}");
        }

        #[test]
        fn pe_monotone_in_r(gn in 0.1f64..2000.0, i in 0usize..40) {
            let r1 = i as f64 / 41.0;
            let r2 = (i + 1) as f64 / 41.0;
            let p1 = noncoherent_pe(gn, r1);
            let p2 = noncoherent_pe(gn, r2);
            prop_assert!(p2 >= p1 - 1e-12, "Pe({gn},{r2})={p2} < Pe({gn},{r1})={p1}");
        }

        #[test]
        fn pe_monotone_in_snr(r in 0.0f64..0.999, g in 0.1f64..500.0) {
            let p1 = noncoherent_pe(g, r);
            let p2 = noncoherent_pe(g * 1.3, r);
            prop_assert!(p2 <= p1 + 1e-12);
        }
    }
}
