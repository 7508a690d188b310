//! Small dense 2x2 symmetric-matrix helpers used across the crate.
//!
//! DoA estimation in directional cosines only ever needs 2x2 systems
//! (position covariance, Fisher information, Newton steps), so a closed-form
//! type is simpler and faster than pulling in a linear-algebra crate.

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Eigen-decomposition of a [`Sym2`], with `lo <= hi`.
#[derive(Debug, Clone, Copy)]
pub struct Eigen2 {
    pub lo: f64,
    pub hi: f64,
    /// Unit eigenvector for `lo`.
    pub axis_lo: [f64; 2],
    /// Unit eigenvector for `hi`.
    pub axis_hi: [f64; 2],
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub fn scaled_identity(c: f64) -> Sym2 {
        Sym2 {
            xx: c,
            xy: 0.0,
            yy: c,
        }
    }

    /// Sum of outer products `p p^T` over the given points.
    pub fn outer_sum(points: &[[f64; 2]]) -> Sym2 {
        let mut m = Sym2::ZERO;
        for p in points {
            m.xx += p[0] * p[0];
            m.xy += p[0] * p[1];
            m.yy += p[1] * p[1];
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2 {
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            yy: self.yy + o.yy,
        }
    }

    pub fn scale(&self, c: f64) -> Sym2 {
        Sym2 {
            xx: self.xx * c,
            xy: self.xy * c,
            yy: self.yy * c,
        }
    }

    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        self.xx * v[0] * v[0] + 2.0 * self.xy * v[0] * v[1] + self.yy * v[1] * v[1]
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2 {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        })
    }

    /// `M v`.
    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.xx * v[0] + self.xy * v[1],
            self.xy * v[0] + self.yy * v[1],
        ]
    }

    /// Solve `M x = b`; `None` when singular.
    pub fn solve(&self, b: [f64; 2]) -> Option<[f64; 2]> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some([
            (self.yy * b[0] - self.xy * b[1]) / d,
            (self.xx * b[1] - self.xy * b[0]) / d,
        ])
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    /// Closed-form eigenvalues and unit eigenvectors, sorted ascending.
    pub fn eigen(&self) -> Eigen2 {
        let half_tr = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let disc = (half_diff * half_diff + self.xy * self.xy).sqrt();
        let lo = half_tr - disc;
        let hi = half_tr + disc;

        let axis_hi = if self.xy.abs() > 1e-300 {
            normalize([self.xy, hi - self.xx])
        } else if self.xx >= self.yy {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        // Perpendicular by construction.
        let axis_lo = [-axis_hi[1], axis_hi[0]];
        Eigen2 {
            lo,
            hi,
            axis_lo,
            axis_hi,
        }
    }
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / n, v[1] / n]
    }
}

/// FNV-1a 64-bit hash; stable across runs, used for output provenance headers.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
