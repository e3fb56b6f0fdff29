use gsp_core::limit::Operators;
use gsp_core::linear::horizontal_average;
use gsp_core::solvers::{make_initial_data, InitialKind};
use gsp_core::{potential_vorticity, SpectralField4, TorusSpec};
use num_complex::Complex64;

fn ops() -> Operators {
    Operators::new(&TorusSpec::new([1.0, 1.3, 0.7], 2.0, 1.0, 1.0).unwrap(), 5)
}

fn single(ops: &Operators, n: [i32; 3], v: [Complex64; 4]) -> SpectralField4 {
    let mut f = SpectralField4::zeros(&ops.lattice);
    let i = ops.lattice.index(n).unwrap();
    f.coeffs[i] = v;
    f.coeffs[ops.lattice.neg_index(i)] = v.map(|z| z.conj());
    f
}

#[test]
fn frequency_oracle() {
    let ops = Operators::new(&TorusSpec::unit(2.0), 2);
    let i = ops.lattice.index([1, 0, 1]).unwrap();
    assert!((ops.basis.freq(i, 1) - 10f64.sqrt() / 4.0).abs() < 1e-15);
    assert!((ops.basis.freq(i, 2) + 10f64.sqrt() / 4.0).abs() < 1e-15);
}

#[test]
fn potential_vorticity_of_basis_vectors() {
    let ops = ops();
    let f2 = 4.0;
    for n in [[1, 0, 1], [2, -1, 3], [0, 1, 0]] {
        let i = ops.lattice.index(n).unwrap();
        let k = ops.lattice.checked(i);
        let norm_f = (k[0] * k[0] + k[1] * k[1] + f2 * k[2] * k[2]).sqrt();
        let pv = potential_vorticity(&single(&ops, n, ops.basis.e0[i]), 2.0);
        assert!((pv.coeffs[i] - Complex64::new(0.0, norm_f)).norm() < 1e-14);
        for e in [ops.basis.e_plus[i], ops.basis.e_minus[i]] {
            assert!(potential_vorticity(&single(&ops, n, e), 2.0).coeffs[i].norm() < 1e-14);
        }
    }
    assert_eq!(potential_vorticity(&SpectralField4::zeros(&ops.lattice), 2.0).norm_sq(), 0.0);
}

#[test]
fn propagator_is_an_isometry_fixing_qg() {
    let ops = ops();
    let f = make_initial_data(InitialKind::RandomDivFree, 4, 1.0, 1.0, &ops);
    assert!(ops.basis.apply_propagator(&f, 0.0).unwrap().sub(&f).l2_norm() <= 1e-14);
    let pv = potential_vorticity(&f, 2.0);
    let qg = ops.basis.qg_projection(&f);
    for tau in [0.3, -2.0, 1e4] {
        let g = ops.basis.apply_propagator(&f, tau).unwrap();
        assert!((g.l2_norm() - f.l2_norm()).abs() <= 1e-12);
        assert!(ops.basis.qg_projection(&g).sub(&qg).l2_norm() <= 1e-12);
        assert!(potential_vorticity(&g, 2.0).sub(&pv).l2_norm() <= 1e-12);
    }
}

#[test]
fn projections_split_orthogonally() {
    let ops = ops();
    let f = make_initial_data(InitialKind::RandomDivFree, 7, 1.0, 1.0, &ops);
    let (qg, osc) = (ops.basis.qg_projection(&f), ops.basis.osc_projection(&f));
    assert!((f.norm_sq() - qg.norm_sq() - osc.norm_sq()).abs() <= 1e-12);
    assert!(qg.add(&osc).sub(&f).l2_norm() <= 1e-14);
    assert!(ops.basis.qg_projection(&qg).sub(&qg).l2_norm() <= 1e-14);
    assert!(ops.basis.qg_projection(&osc).l2_norm() <= 1e-14);
    let biot_savart = ops.tables.qg_from_pv(&potential_vorticity(&f, 2.0));
    assert!(biot_savart.sub(&qg).l2_norm() <= 1e-12);
}

#[test]
fn horizontal_average_examples() {
    let ops = ops();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let f = single(&ops, [0, 0, 1], [one, zero, zero, zero]);
    let profile = horizontal_average(&f);
    let hits: Vec<i32> = profile.n3.iter().zip(&profile.coeffs).filter(|(_, c)| c[0].norm() > 0.0).map(|(n, _)| *n).collect();
    assert_eq!(hits, vec![-1, 1]);
    let g = single(&ops, [1, 2, 1], [one, one, zero, zero]);
    assert_eq!(horizontal_average(&g).max_abs(), 0.0);
    let h = ops.basis.qg_projection(&make_initial_data(InitialKind::RandomDivFree, 2, 1.0, 1.0, &ops)).add(&f);
    for (s, sp) in [(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)] {
        assert!(horizontal_average(&h).norm(sp) <= h.anisotropic_norm(s, sp));
    }
}
