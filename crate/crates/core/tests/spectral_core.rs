use std::sync::Arc;

use gsp_core::dyadic::{d3, dyadic_block, max_block};
use gsp_core::transform::Grid;
use gsp_core::{make_field, FreqLattice, Mode, SpectralField4, TorusSpec};
use num_complex::Complex64;

fn lattice(a: [f64; 3], n: usize) -> Arc<FreqLattice> {
    Arc::new(FreqLattice::new(&TorusSpec::new(a, 2.0, 1.0, 1.0).unwrap(), n))
}

// Cheap deterministic noise, decaying so the field is smooth.
fn noisy(lat: &Arc<FreqLattice>, seed: f64) -> SpectralField4 {
    make_field(lat, |n: Mode| {
        let w = 1.0 / (1.0 + (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) as f64);
        std::array::from_fn(|j| {
            let t = seed + 12.9898 * n[0] as f64 + 78.233 * n[1] as f64 + 37.719 * n[2] as f64 + 4.1 * j as f64;
            Complex64::new((t.sin() * 43758.5453).fract(), (t.cos() * 24634.6345).fract()) * w
        })
    })
}

#[test]
fn round_trip_and_plancherel() {
    for n in [4, 9, 16] {
        let lat = lattice([1.0, 1.3, 0.7], n);
        let grid = Grid::dealiased(&lat);
        let f = noisy(&lat, n as f64);
        let phys = grid.transform_to_physical(&f).unwrap();
        let back = grid.transform_to_spectral(&phys);
        assert!(back.sub(&f).l2_norm() <= 1e-12 * f.l2_norm());
        let points = phys[0].len() as f64;
        let quad: f64 = phys.iter().flat_map(|c| c.iter()).map(|x| x * x).sum::<f64>() / points;
        assert!((quad.sqrt() - f.anisotropic_norm(0.0, 0.0)).abs() <= 1e-10 * f.l2_norm());
    }
}

#[test]
fn zero_field_transforms_to_zero() {
    let lat = lattice([1.0, 1.0, 1.0], 3);
    let phys = Grid::dealiased(&lat).transform_to_physical(&SpectralField4::zeros(&lat)).unwrap();
    assert!(phys.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn dyadic_blocks_partition_and_localize() {
    let lat = lattice([1.0, 1.0, 0.25], 12);
    let f = noisy(&lat, 0.5);
    let top = max_block(&f);
    let blocks: Vec<SpectralField4> = (-1..=top).map(|q| dyadic_block(&f, q)).collect();
    let sum = blocks.iter().skip(1).fold(blocks[0].clone(), |acc, b| acc.add(b));
    assert!(sum.sub(&f).l2_norm() <= 1e-12 * f.l2_norm());
    for (i, bi) in blocks.iter().enumerate() {
        for (j, bj) in blocks.iter().enumerate().skip(i + 2) {
            assert_eq!(dyadic_block(bi, j as i32 - 1).l2_norm(), 0.0);
            assert_eq!(bi.inner(bj).norm(), 0.0);
        }
    }
    for (q, b) in blocks.iter().enumerate().skip(1).map(|(i, b)| (i as i32 - 1, b)) {
        let (norm, grad) = (b.l2_norm(), d3(b).l2_norm());
        let scale = 2f64.powi(q);
        assert!(0.75 * scale * norm <= grad * (1.0 + 1e-14) && grad <= 8.0 / 3.0 * scale * norm * (1.0 + 1e-14));
    }
}

#[test]
fn anisotropic_norm_is_monotone() {
    let lat = lattice([1.0, 1.3, 0.7], 5);
    let f = noisy(&lat, 2.0);
    assert_eq!(SpectralField4::zeros(&lat).anisotropic_norm(1.0, 1.0), 0.0);
    let grid = [-1.0, 0.0, 0.5, 1.0, 2.0];
    for w in grid.windows(2) {
        for &other in &grid {
            assert!(f.anisotropic_norm(w[0], other) <= f.anisotropic_norm(w[1], other));
            assert!(f.anisotropic_norm(other, w[0]) <= f.anisotropic_norm(other, w[1]));
        }
    }
}
