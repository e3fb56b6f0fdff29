//! Per-mode linear algebra of the penalized operator ℙ𝒜.
//!
//! For each mode n ≠ 0 the divergence-free subspace is spanned by the
//! orthonormal eigenvectors e⁰ (kernel) and e^± (eigenvalues ±iω(n)).
//! Eigen-coordinates are stored in the order [0, +, −].

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::field::{dot4, norm_sq4, ScalarField, SpectralField4, Vec4, ZERO4};
use crate::lattice::{FreqLattice, TorusSpec};

pub type Eigen3 = [Complex64; 3];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    Zero,
    /// n_h = 0
    Vertical,
    /// n₃ = 0
    Horizontal,
    Generic,
}

/// The penalty matrix 𝒜.
pub fn penalty_matrix(froude: f64) -> [[f64; 4]; 4] {
    let f = 1.0 / froude;
    [[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, f], [0.0, 0.0, -f, 0.0]]
}

/// Leray projector ℙ_n acting on the velocity components.
pub fn leray_matrix(k: [f64; 3]) -> [[f64; 4]; 4] {
    let mut p = [[0.0; 4]; 4];
    for (i, row) in p.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 > 0.0 {
        for i in 0..3 {
            for j in 0..3 {
                p[i][j] -= k[i] * k[j] / k2;
            }
        }
    }
    p
}

pub fn matmul4(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn apply4(m: &[[f64; 4]; 4], v: &Vec4) -> Vec4 {
    std::array::from_fn(|i| (0..4).map(|k| v[k] * m[i][k]).sum())
}

/// ω^+(n) = (1/F)·√(|ň_h|² + F²ň₃²)/|ň|.
pub fn omega(k: [f64; 3], froude: f64) -> f64 {
    let h2 = k[0] * k[0] + k[1] * k[1];
    let k2 = h2 + k[2] * k[2];
    if k2 == 0.0 {
        return 0.0;
    }
    (h2 + froude * froude * k[2] * k[2]).sqrt() / (froude * k2.sqrt())
}

fn normalize(v: Vec4) -> Vec4 {
    let n = norm_sq4(&v).sqrt();
    v.map(|z| z / n)
}

/// Eigen-system of ℙ_n𝒜 for every lattice mode.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    pub lattice: Arc<FreqLattice>,
    pub froude: f64,
    pub omega: Vec<f64>,
    pub e0: Vec<Vec4>,
    pub e_plus: Vec<Vec4>,
    pub e_minus: Vec<Vec4>,
    pub kind: Vec<ModeKind>,
    /// Dissipation symbols [a_QG, a_+, a_−], each −(𝐃e|e).
    pub damping: Vec<[f64; 3]>,
}

pub fn build_mode_basis(spec: &TorusSpec, lattice: &Arc<FreqLattice>) -> ModeBasis {
    let f = spec.froude;
    let per_mode: Vec<_> = (0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let n = lattice.mode(i);
            let k = lattice.checked(i);
            let h2 = k[0] * k[0] + k[1] * k[1];
            let kind = match (n[0] == 0 && n[1] == 0, n[2] == 0) {
                (true, true) => ModeKind::Zero,
                (true, false) => ModeKind::Vertical,
                (false, true) => ModeKind::Horizontal,
                (false, false) => ModeKind::Generic,
            };
            let w = omega(k, f);
            let (e0, ep, em) = match kind {
                ModeKind::Zero => (ZERO4, ZERO4, ZERO4),
                _ => {
                    let e0 = normalize([c(-k[1]), c(k[0]), c(0.0), c(-f * k[2])]);
                    let s = std::f64::consts::FRAC_1_SQRT_2;
                    let (ep, em) = match kind {
                        ModeKind::Vertical => ([I * s, c(s), c(0.0), c(0.0)], [-I * s, c(s), c(0.0), c(0.0)]),
                        ModeKind::Horizontal => ([c(0.0), c(0.0), -I * s, c(s)], [c(0.0), c(0.0), I * s, c(s)]),
                        _ => {
                            let gen = |sg: f64| {
                                normalize([
                                    -f * k[2] * (k[1] - sg * I * k[0] * w),
                                    f * k[2] * (k[0] + sg * I * k[1] * w),
                                    -sg * I * f * w * h2,
                                    c(h2),
                                ])
                            };
                            (gen(1.0), gen(-1.0))
                        }
                    };
                    (e0, ep, em)
                }
            };
            let damp =
                |e: &Vec4| h2 * (spec.nu_h * (e[0].norm_sqr() + e[1].norm_sqr() + e[2].norm_sqr()) + spec.nu_h_prime * e[3].norm_sqr());
            let damping = [damp(&e0), damp(&ep), damp(&em)];
            (w, e0, ep, em, kind, damping)
        })
        .collect();
    let mut b = ModeBasis {
        lattice: lattice.clone(),
        froude: f,
        omega: Vec::with_capacity(per_mode.len()),
        e0: Vec::with_capacity(per_mode.len()),
        e_plus: Vec::with_capacity(per_mode.len()),
        e_minus: Vec::with_capacity(per_mode.len()),
        kind: Vec::with_capacity(per_mode.len()),
        damping: Vec::with_capacity(per_mode.len()),
    };
    for (w, e0, ep, em, kind, d) in per_mode {
        b.omega.push(w);
        b.e0.push(e0);
        b.e_plus.push(ep);
        b.e_minus.push(em);
        b.kind.push(kind);
        b.damping.push(d);
    }
    b
}

impl ModeBasis {
    /// Eigenvector e^a(n) with a ∈ {0, 1 (+), 2 (−)}.
    pub fn vector(&self, i: usize, a: usize) -> &Vec4 {
        match a {
            0 => &self.e0[i],
            1 => &self.e_plus[i],
            _ => &self.e_minus[i],
        }
    }

    /// Eigenfrequency ω^a(n): 0, +ω, −ω.
    pub fn freq(&self, i: usize, a: usize) -> f64 {
        match a {
            0 => 0.0,
            1 => self.omega[i],
            _ => -self.omega[i],
        }
    }

    pub fn to_eigen_mode(&self, i: usize, v: &Vec4) -> Eigen3 {
        [dot4(v, &self.e0[i]), dot4(v, &self.e_plus[i]), dot4(v, &self.e_minus[i])]
    }

    pub fn from_eigen_mode(&self, i: usize, a: &Eigen3) -> Vec4 {
        let (e0, ep, em) = (&self.e0[i], &self.e_plus[i], &self.e_minus[i]);
        std::array::from_fn(|j| a[0] * e0[j] + a[1] * ep[j] + a[2] * em[j])
    }

    pub fn to_eigen(&self, f: &SpectralField4) -> Vec<Eigen3> {
        f.coeffs.iter().enumerate().map(|(i, v)| self.to_eigen_mode(i, v)).collect()
    }

    pub fn from_eigen(&self, a: &[Eigen3]) -> SpectralField4 {
        SpectralField4 { lattice: self.lattice.clone(), coeffs: a.iter().enumerate().map(|(i, x)| self.from_eigen_mode(i, x)).collect() }
    }

    /// ℒ(τ) without the divergence check.
    pub fn propagate(&self, f: &SpectralField4, tau: f64) -> SpectralField4 {
        f.map_indexed(|i, v| {
            let a = self.to_eigen_mode(i, v);
            let ph = Complex64::from_polar(1.0, -self.omega[i] * tau);
            self.from_eigen_mode(i, &[a[0], a[1] * ph, a[2] * ph.conj()])
        })
    }

    /// ℒ(τ) = e^{−τℙ𝒜} applied mode by mode through the eigen-decomposition.
    pub fn apply_propagator(&self, f: &SpectralField4, tau: f64) -> Result<SpectralField4> {
        f.require_divergence_free()?;
        Ok(self.propagate(f, tau))
    }

    /// Projection onto span{e⁰}.
    pub fn qg_projection(&self, f: &SpectralField4) -> SpectralField4 {
        f.map_indexed(|i, v| {
            let a = dot4(v, &self.e0[i]);
            self.e0[i].map(|z| z * a)
        })
    }

    /// Projection onto span{e⁺, e⁻}.
    pub fn osc_projection(&self, f: &SpectralField4) -> SpectralField4 {
        f.map_indexed(|i, v| {
            let a = self.to_eigen_mode(i, v);
            self.from_eigen_mode(i, &[Complex64::new(0.0, 0.0), a[1], a[2]])
        })
    }

    /// Limit dissipation a(D)U, diagonal in the eigenbasis.
    pub fn d_limit(&self, f: &SpectralField4) -> SpectralField4 {
        f.map_indexed(|i, v| {
            let a = self.to_eigen_mode(i, v);
            let d = self.damping[i];
            self.from_eigen_mode(i, &[a[0] * d[0], a[1] * d[1], a[2] * d[2]])
        })
    }

    /// a_QG(n) = (ν_h|ň_h|² + ν'_h F² ň₃²)/|ň|_F² · |ň_h|².
    pub fn a_qg(&self, i: usize) -> f64 {
        self.damping[i][0]
    }
}

/// Per-mode projector, ℙ_n𝒜 and Δ_F⁻¹ symbol.
#[derive(Clone, Debug)]
pub struct LinearTables {
    pub lattice: Arc<FreqLattice>,
    pub leray: Vec<[[f64; 4]; 4]>,
    pub pa: Vec<[[f64; 4]; 4]>,
    /// 1/(ň₁² + ň₂² + F²ň₃²), zero at n = 0.
    pub delta_f_inv: Vec<f64>,
    pub froude: f64,
}

impl LinearTables {
    pub fn new(spec: &TorusSpec, lattice: &Arc<FreqLattice>) -> Self {
        let a = penalty_matrix(spec.froude);
        let f2 = spec.froude_sq();
        let mut leray = Vec::with_capacity(lattice.len());
        let mut pa = Vec::with_capacity(lattice.len());
        let mut delta_f_inv = Vec::with_capacity(lattice.len());
        for i in 0..lattice.len() {
            let k = lattice.checked(i);
            let p = leray_matrix(k);
            pa.push(matmul4(&p, &a));
            leray.push(p);
            let d = k[0] * k[0] + k[1] * k[1] + f2 * k[2] * k[2];
            delta_f_inv.push(if d > 0.0 { 1.0 / d } else { 0.0 });
        }
        LinearTables { lattice: lattice.clone(), leray, pa, delta_f_inv, froude: spec.froude }
    }

    pub fn leray_project(&self, f: &SpectralField4) -> SpectralField4 {
        f.map_indexed(|i, v| apply4(&self.leray[i], v))
    }

    /// Velocity reconstructed from Ω by the Biot–Savart law
    /// (−∂₂, ∂₁, 0, −F∂₃)ᵀ Δ_F⁻¹ Ω.
    pub fn qg_from_pv(&self, omega: &ScalarField) -> SpectralField4 {
        let f = self.froude;
        let mut out = SpectralField4::zeros(&self.lattice);
        for (i, v) in out.coeffs.iter_mut().enumerate() {
            let k = self.lattice.checked(i);
            let s = -omega.coeffs[i] * self.delta_f_inv[i];
            *v = [-I * k[1] * s, I * k[0] * s, Complex64::new(0.0, 0.0), -I * f * k[2] * s];
        }
        out
    }
}

/// Ω̂(n) = i(−ň₂ f̂¹ + ň₁ f̂² − F ň₃ f̂⁴).
pub fn potential_vorticity(f: &SpectralField4, froude: f64) -> ScalarField {
    let lat = &f.lattice;
    ScalarField {
        lattice: lat.clone(),
        coeffs: f
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = lat.checked(i);
                I * (v[1] * k[0] - v[0] * k[1] - v[3] * (froude * k[2]))
            })
            .collect(),
    }
}

/// Coefficients on the n_h = 0 fiber, indexed by n₃ from −N to N.
#[derive(Clone, Debug, PartialEq)]
pub struct VerticalProfile {
    pub a3: f64,
    pub n3: Vec<i32>,
    pub coeffs: Vec<Vec4>,
}

impl VerticalProfile {
    /// ‖·‖_{H^{s'}_v} with weight (1 + ň₃²)^{s'}.
    pub fn norm(&self, s_prime: f64) -> f64 {
        self.n3.iter().zip(&self.coeffs).map(|(&n, c)| (1.0 + (n as f64 / self.a3).powi(2)).powf(s_prime) * norm_sq4(c)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| norm_sq4(c).sqrt()).fold(0.0, f64::max)
    }
}

/// The horizontal average, i.e. the restriction to the fiber n_h = 0.
pub fn horizontal_average(f: &SpectralField4) -> VerticalProfile {
    let lat = &f.lattice;
    let nm = lat.n_max() as i32;
    let n3: Vec<i32> = (-nm..=nm).collect();
    let coeffs = n3.iter().map(|&z| f.at([0, 0, z])).collect();
    VerticalProfile { a3: lat.half_periods()[2], n3, coeffs }
}
