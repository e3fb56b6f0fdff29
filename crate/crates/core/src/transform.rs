//! Spectral/physical transforms on uniform grids and pseudo-spectral products.
//!
//! Grids have M points per direction at x_i = 2π a_i j / M. Two real fields are
//! packed into each complex FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpectralField4, ZERO4};
use crate::lattice::FreqLattice;

/// Smallest 2^a 3^b 5^c integer ≥ n.
pub fn smooth_size(n: usize) -> usize {
    (n.max(1)..)
        .find(|&k| {
            let mut r = k;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("unbounded search")
}

/// Grid size that makes quadratic products alias-free on a lattice of radius N.
pub fn dealias_size(n_max: usize) -> usize {
    smooth_size(3 * n_max + 1)
}

pub struct Grid {
    lattice: Arc<FreqLattice>,
    m: usize,
    bins: Vec<usize>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("m", &self.m).field("n_max", &self.lattice.n_max()).finish()
    }
}

impl Grid {
    /// Grid of size `m`; needs m ≥ 2N+1 so that every lattice mode has its own bin.
    pub fn new(lattice: &Arc<FreqLattice>, m: usize) -> Result<Self> {
        let required = 2 * lattice.n_max() + 1;
        if m < required {
            return Err(Error::GridTooSmall { grid: m, n_max: lattice.n_max(), required });
        }
        let mi = m as i32;
        let bins = lattice
            .modes()
            .map(|(_, n)| {
                let [a, b, c] = n.map(|x| x.rem_euclid(mi) as usize);
                (a * m + b) * m + c
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Grid { lattice: lattice.clone(), m, bins, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) })
    }

    /// Alias-free grid for quadratic nonlinearities.
    pub fn dealiased(lattice: &Arc<FreqLattice>) -> Self {
        Self::new(lattice, dealias_size(lattice.n_max())).expect("dealiased size is always large enough")
    }

    /// Grid of size `m` that must also be alias-free for quadratic products.
    pub fn dealiased_with(lattice: &Arc<FreqLattice>, m: usize) -> Result<Self> {
        let required = 3 * lattice.n_max() + 1;
        if m < required {
            return Err(Error::GridTooSmall { grid: m, n_max: lattice.n_max(), required });
        }
        Self::new(lattice, m)
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn lattice(&self) -> &Arc<FreqLattice> {
        &self.lattice
    }

    /// Grid spacing in the finest direction.
    pub fn min_spacing(&self) -> f64 {
        let a = self.lattice.half_periods();
        2.0 * std::f64::consts::PI * a.iter().cloned().fold(f64::MAX, f64::min) / self.m as f64
    }

    fn fft3(&self, buf: &mut [Complex64], forward: bool) {
        let m = self.m;
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut tmp = vec![Complex64::new(0.0, 0.0); buf.len()];
        for _ in 0..3 {
            buf.par_chunks_mut(m * m).for_each(|plane| plan.process(plane));
            // (i1, i2, i3) -> (i3, i1, i2) so the next axis becomes contiguous
            tmp.par_chunks_mut(m * m).enumerate().for_each(|(i3, plane)| {
                for i1 in 0..m {
                    for i2 in 0..m {
                        plane[i1 * m + i2] = buf[(i1 * m + i2) * m + i3];
                    }
                }
            });
            buf.copy_from_slice(&tmp);
        }
    }

    /// Real grid values of two Hermitian coefficient arrays.
    pub fn to_physical_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m.pow(3)];
        let i = Complex64::new(0.0, 1.0);
        for (k, &bin) in self.bins.iter().enumerate() {
            buf[bin] = a[k] + i * b[k];
        }
        self.fft3(&mut buf, false);
        (buf.iter().map(|z| z.re).collect(), buf.iter().map(|z| z.im).collect())
    }

    /// Lattice coefficients of two real grids; modes outside the lattice are dropped.
    pub fn to_spectral_pair(&self, u: &[f64], v: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf: Vec<Complex64> = u.iter().zip(v).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.fft3(&mut buf, true);
        let scale = 1.0 / (self.m.pow(3) as f64);
        let len = self.bins.len();
        let mut a = vec![Complex64::new(0.0, 0.0); len];
        let mut b = vec![Complex64::new(0.0, 0.0); len];
        for k in 0..len {
            let z = buf[self.bins[k]];
            let zc = buf[self.bins[len - 1 - k]].conj();
            a[k] = 0.5 * (z + zc) * scale;
            b[k] = Complex64::new(0.0, -0.5) * (z - zc) * scale;
        }
        (a, b)
    }

    /// Inverse transforms of any number of Hermitian arrays.
    pub fn to_physical_many(&self, arrays: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        let zero = vec![Complex64::new(0.0, 0.0); self.bins.len()];
        let mut out = Vec::with_capacity(arrays.len());
        for pair in arrays.chunks(2) {
            let (x, y) = self.to_physical_pair(&pair[0], pair.get(1).unwrap_or(&zero));
            out.push(x);
            if pair.len() == 2 {
                out.push(y);
            }
        }
        out
    }

    pub fn to_spectral_many(&self, grids: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        let zero = vec![0.0; self.m.pow(3)];
        let mut out = Vec::with_capacity(grids.len());
        for pair in grids.chunks(2) {
            let (x, y) = self.to_spectral_pair(&pair[0], pair.get(1).unwrap_or(&zero));
            out.push(x);
            if pair.len() == 2 {
                out.push(y);
            }
        }
        out
    }

    /// The four components of a field on the grid.
    pub fn transform_to_physical(&self, f: &SpectralField4) -> Result<[Vec<f64>; 4]> {
        self.require_lattice(&f.lattice)?;
        let comps = components(f);
        let mut g = self.to_physical_many(&comps).into_iter();
        Ok(std::array::from_fn(|_| g.next().expect("four components")))
    }

    pub fn transform_to_spectral(&self, grids: &[Vec<f64>; 4]) -> SpectralField4 {
        let s = self.to_spectral_many(grids);
        let mut out = SpectralField4::zeros(&self.lattice);
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            *c = std::array::from_fn(|j| s[j][k]);
        }
        out.coeffs[self.lattice.zero_index()] = ZERO4;
        out
    }

    fn require_lattice(&self, lat: &Arc<FreqLattice>) -> Result<()> {
        if Arc::ptr_eq(lat, &self.lattice) || lat.compatible(&self.lattice) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch("grid built for a different lattice".into()))
        }
    }

    fn gradient_arrays(&self, coeffs: &[Complex64]) -> [Vec<Complex64>; 3] {
        let lat = &self.lattice;
        std::array::from_fn(|j| coeffs.iter().enumerate().map(|(k, c)| Complex64::new(0.0, lat.checked(k)[j]) * c).collect())
    }

    /// (u·∇)V with u the velocity part of `u`, truncated to the lattice.
    ///
    /// Exact (alias-free) when the grid was built with `dealiased`.
    pub fn transport(&self, u: &SpectralField4, v: &SpectralField4) -> Result<SpectralField4> {
        self.require_lattice(&u.lattice)?;
        self.require_lattice(&v.lattice)?;
        let uc = components(u);
        let vc = components(v);
        let mut arrays: Vec<Vec<Complex64>> = uc[..3].to_vec();
        for comp in &vc {
            arrays.extend(self.gradient_arrays(comp));
        }
        let phys = self.to_physical_many(&arrays);
        let npts = self.m.pow(3);
        let products: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                let g = &phys[3 + 3 * c..6 + 3 * c];
                (0..npts).map(|p| phys[0][p] * g[0][p] + phys[1][p] * g[1][p] + phys[2][p] * g[2][p]).collect()
            })
            .collect();
        let grids: [Vec<f64>; 4] = products.try_into().expect("four products");
        Ok(self.transform_to_spectral(&grids))
    }

    /// u_h·∇_h ω for a horizontal velocity (u¹, u²) and scalar ω.
    pub fn scalar_transport_h(&self, u1: &[Complex64], u2: &[Complex64], omega: &ScalarField) -> ScalarField {
        let [g1, g2, _] = self.gradient_arrays(&omega.coeffs);
        let phys = self.to_physical_many(&[u1.to_vec(), u2.to_vec(), g1, g2]);
        let prod: Vec<f64> = (0..self.m.pow(3)).map(|p| phys[0][p] * phys[2][p] + phys[1][p] * phys[3][p]).collect();
        let zero = vec![0.0; prod.len()];
        let (mut c, _) = self.to_spectral_pair(&prod, &zero);
        c[self.lattice.zero_index()] = Complex64::new(0.0, 0.0);
        ScalarField { lattice: self.lattice.clone(), coeffs: c }
    }

    /// max over grid points of the Euclidean velocity magnitude.
    pub fn max_velocity(&self, f: &SpectralField4) -> f64 {
        let comps = components(f);
        let phys = self.to_physical_many(&comps[..3]);
        (0..self.m.pow(3)).map(|p| (phys[0][p].powi(2) + phys[1][p].powi(2) + phys[2][p].powi(2)).sqrt()).fold(0.0, f64::max)
    }
}

/// Splits a 4-vector field into four scalar coefficient arrays.
pub fn components(f: &SpectralField4) -> [Vec<Complex64>; 4] {
    std::array::from_fn(|j| f.coeffs.iter().map(|c| c[j]).collect())
}
