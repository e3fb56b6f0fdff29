//! Vertical Littlewood–Paley blocks.
//!
//! ψ is a smooth non-increasing cutoff equal to 1 on [0, 3/4] and 0 on
//! [4/3, ∞). With χ = ψ and φ(t) = ψ(t/2) − ψ(t) the blocks telescope, so
//! χ(t) + Σ_{q≥0} φ(2^{-q} t) = 1 exactly.

use crate::field::{SpectralField4, ZERO4};

const INNER: f64 = 0.75;
const OUTER: f64 = 4.0 / 3.0;

fn h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: 0 for x ≤ 0, 1 for x ≥ 1.
fn smooth_step(x: f64) -> f64 {
    let a = h(x);
    let b = h(1.0 - x);
    a / (a + b)
}

pub fn psi(t: f64) -> f64 {
    let t = t.abs();
    if t <= INNER {
        1.0
    } else if t >= OUTER {
        0.0
    } else {
        smooth_step((OUTER - t) / (OUTER - INNER))
    }
}

/// Low-frequency cutoff, supported in B(0, 4/3).
pub fn chi(t: f64) -> f64 {
    psi(t)
}

/// Annulus cutoff, supported in [3/4, 8/3].
pub fn phi(t: f64) -> f64 {
    psi(t / 2.0) - psi(t)
}

/// Multiplier of Δ_q^v at vertical frequency |ň₃| = t.
pub fn block_weight(q: i32, t: f64) -> f64 {
    match q {
        q if q <= -2 => 0.0,
        -1 => chi(t),
        q => phi(t / 2f64.powi(q)),
    }
}

/// Δ_q^v f.
pub fn dyadic_block(f: &SpectralField4, q: i32) -> SpectralField4 {
    let lat = f.lattice.clone();
    f.map_indexed(|i, c| {
        let w = block_weight(q, lat.checked(i)[2].abs());
        if w == 0.0 {
            ZERO4
        } else {
            c.map(|z| z * w)
        }
    })
}

/// Largest q for which Δ_q^v can be nonzero on the lattice of `f`.
pub fn max_block(f: &SpectralField4) -> i32 {
    let top = (0..f.len()).map(|i| f.lattice.checked(i)[2].abs()).fold(0.0, f64::max);
    let mut q = 0;
    while INNER * 2f64.powi(q) <= top {
        q += 1;
    }
    q
}

/// ∂₃f, acting as multiplication by iň₃.
pub fn d3(f: &SpectralField4) -> SpectralField4 {
    let lat = f.lattice.clone();
    f.map_indexed(|i, c| {
        let k3 = lat.checked(i)[2];
        c.map(|z| z * num_complex::Complex64::new(0.0, k3))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_profile() {
        assert_eq!(psi(0.0), 1.0);
        assert_eq!(psi(0.75), 1.0);
        assert_eq!(psi(4.0 / 3.0), 0.0);
        assert!((psi(1.0) - 0.5).abs() < 0.5);
        for i in 0..400 {
            let t = i as f64 * 0.01;
            assert!(psi(t + 0.01) <= psi(t));
            assert!(phi(t) >= 0.0);
            if !(0.75..=8.0 / 3.0).contains(&t) {
                assert_eq!(phi(t), 0.0);
            }
        }
    }

    #[test]
    fn partition_of_unity_pointwise() {
        for i in 0..2000 {
            let t = i as f64 * 0.037;
            let total: f64 = (-1..12).map(|q| block_weight(q, t)).sum();
            assert!((total - 1.0).abs() < 1e-15, "t={t} total={total}");
        }
    }
}
