//! Spectral representation of real 4-component fields (v¹, v², v³, T).
//!
//! Inner products use the normalized measure, so ‖u‖² = Σ_n |û_n|².

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{FreqLattice, Mode};

pub type Vec4 = [Complex64; 4];

pub const ZERO4: Vec4 = [Complex64 { re: 0.0, im: 0.0 }; 4];

pub fn dot4(x: &Vec4, y: &Vec4) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sq4(x: &Vec4) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum()
}

pub fn conj4(x: &Vec4) -> Vec4 {
    x.map(|c| c.conj())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField4 {
    pub lattice: Arc<FreqLattice>,
    pub coeffs: Vec<Vec4>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub lattice: Arc<FreqLattice>,
    pub coeffs: Vec<Complex64>,
}

/// Builds a real field from a per-mode rule, enforcing Hermitian symmetry by
/// averaging `rule(n)` with `conj(rule(-n))` and pinning the zero mode.
pub fn make_field<F>(lattice: &Arc<FreqLattice>, rule: F) -> SpectralField4
where
    F: Fn(Mode) -> Vec4,
{
    let raw: Vec<Vec4> = lattice.modes().map(|(_, n)| rule(n)).collect();
    let mut f = SpectralField4 { lattice: lattice.clone(), coeffs: raw };
    f.enforce_hermitian();
    f
}

impl SpectralField4 {
    pub fn zeros(lattice: &Arc<FreqLattice>) -> Self {
        SpectralField4 { lattice: lattice.clone(), coeffs: vec![ZERO4; lattice.len()] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn at(&self, n: Mode) -> Vec4 {
        self.lattice.index(n).map_or(ZERO4, |i| self.coeffs[i])
    }

    pub fn enforce_hermitian(&mut self) {
        let len = self.coeffs.len();
        for i in 0..len / 2 {
            let j = len - 1 - i;
            let mut avg = ZERO4;
            for c in 0..4 {
                avg[c] = 0.5 * (self.coeffs[i][c] + self.coeffs[j][c].conj());
            }
            self.coeffs[i] = avg;
            self.coeffs[j] = conj4(&avg);
        }
        self.coeffs[len / 2] = ZERO4;
    }

    /// Largest |coeffs(-n) - conj(coeffs(n))| over the lattice.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.coeffs.len();
        let mut d: f64 = 0.0;
        for i in 0..len {
            let j = len - 1 - i;
            for c in 0..4 {
                d = d.max((self.coeffs[j][c] - self.coeffs[i][c].conj()).norm());
            }
        }
        d
    }

    pub fn check_compatible(&self, other: &SpectralField4) -> Result<()> {
        if Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice.compatible(&other.lattice) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch("fields live on different lattices".into()))
        }
    }

    pub fn inner(&self, other: &SpectralField4) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| dot4(a, b)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(norm_sq4).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// ‖∇_h u‖² = Σ |ň_h|² |û_n|².
    pub fn grad_h_norm_sq(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, c)| self.lattice.checked_h_sq(i) * norm_sq4(c)).sum()
    }

    /// ‖u‖_{H^{s,s'}} with weights (1+|ň_h|²)^s (1+ň₃²)^{s'}.
    pub fn anisotropic_norm(&self, s: f64, s_prime: f64) -> f64 {
        let lat = &self.lattice;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = lat.checked(i);
                let w = (1.0 + k[0] * k[0] + k[1] * k[1]).powf(s) * (1.0 + k[2] * k[2]).powf(s_prime);
                w * norm_sq4(c)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// max_n |Σ_j ň_j v̂ʲ(n)|.
    pub fn divergence_residual(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.lattice.checked(i);
                (c[0] * k[0] + c[1] * k[1] + c[2] * k[2]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Rejects fields whose divergence exceeds 1e-12 relative to the field norm.
    pub fn require_divergence_free(&self) -> Result<()> {
        let residual = self.divergence_residual();
        let kmax = self.lattice.n_max() as f64 / self.lattice.half_periods().iter().cloned().fold(f64::MAX, f64::min);
        let tolerance = 1e-12 * self.l2_norm().max(f64::MIN_POSITIVE) * kmax.max(1.0) * 10.0;
        if residual > tolerance {
            return Err(Error::NotDivergenceFree { residual, tolerance });
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> SpectralField4 {
        self.map(|c| c.map(|z| z * s))
    }

    pub fn map<F: Fn(&Vec4) -> Vec4>(&self, f: F) -> SpectralField4 {
        SpectralField4 { lattice: self.lattice.clone(), coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn map_indexed<F: Fn(usize, &Vec4) -> Vec4>(&self, f: F) -> SpectralField4 {
        SpectralField4 { lattice: self.lattice.clone(), coeffs: self.coeffs.iter().enumerate().map(|(i, c)| f(i, c)).collect() }
    }

    pub fn add(&self, other: &SpectralField4) -> SpectralField4 {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField4) -> SpectralField4 {
        self.axpy(-1.0, other)
    }

    /// self + s·other.
    pub fn axpy(&self, s: f64, other: &SpectralField4) -> SpectralField4 {
        SpectralField4 {
            lattice: self.lattice.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| std::array::from_fn(|c| a[c] + b[c] * s)).collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().flat_map(|c| c.iter().map(|z| z.norm())).fold(0.0, f64::max)
    }
}

impl ScalarField {
    pub fn zeros(lattice: &Arc<FreqLattice>) -> Self {
        ScalarField { lattice: lattice.clone(), coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()] }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn grad_h_norm_sq(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, c)| self.lattice.checked_h_sq(i) * c.norm_sqr()).sum()
    }

    pub fn anisotropic_norm(&self, s: f64, s_prime: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.lattice.checked(i);
                (1.0 + k[0] * k[0] + k[1] * k[1]).powf(s) * (1.0 + k[2] * k[2]).powf(s_prime) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        ScalarField { lattice: self.lattice.clone(), coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn hermitian_defect(&self) -> f64 {
        let len = self.coeffs.len();
        (0..len).map(|i| (self.coeffs[len - 1 - i] - self.coeffs[i].conj()).norm()).fold(0.0, f64::max)
    }
}
