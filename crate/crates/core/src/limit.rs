//! Filtered forms Q^ε, 𝔻^ε and their resonant limits.
//!
//! In eigen-coordinates U(n) = Σ_a α_a(n) e^a(n) the transport term couples
//! (k, a) and (m, b) into (n, c) with weight i(e^a(k)·m̌)(e^b(m)|e^c(n)) and
//! phase e^{−iθ(ω^a(k)+ω^b(m)−ω^c(n))}. The limit keeps the zero-phase terms.
//! The dense QG⊗QG→QG channel is evaluated pseudo-spectrally; every other
//! resonant channel is sparse and lives in a [`LimitStencil`].

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{dot4, ScalarField, SpectralField4, ZERO4};
use crate::lattice::{FreqLattice, TorusSpec};
use crate::linear::{build_mode_basis, potential_vorticity, Eigen3, LinearTables, ModeBasis};
use crate::resonance::TAU_RES;
use crate::transform::Grid;

/// Everything needed to evaluate the nonlinear and linear operators on one lattice.
#[derive(Debug)]
pub struct Operators {
    pub spec: TorusSpec,
    pub lattice: Arc<FreqLattice>,
    pub basis: ModeBasis,
    pub tables: LinearTables,
    pub grid: Grid,
}

impl Operators {
    pub fn new(spec: &TorusSpec, n_max: usize) -> Self {
        let lattice = Arc::new(FreqLattice::new(spec, n_max));
        Self::on_lattice(spec, &lattice)
    }

    pub fn on_lattice(spec: &TorusSpec, lattice: &Arc<FreqLattice>) -> Self {
        Operators {
            spec: spec.clone(),
            lattice: lattice.clone(),
            basis: build_mode_basis(spec, lattice),
            tables: LinearTables::new(spec, lattice),
            grid: Grid::dealiased(lattice),
        }
    }

    /// Uses a caller-chosen grid size, which must still be alias-free.
    pub fn with_grid_size(spec: &TorusSpec, n_max: usize, m: usize) -> Result<Self> {
        let lattice = Arc::new(FreqLattice::new(spec, n_max));
        let grid = Grid::dealiased_with(&lattice, m)?;
        Ok(Operators {
            spec: spec.clone(),
            basis: build_mode_basis(spec, &lattice),
            tables: LinearTables::new(spec, &lattice),
            lattice,
            grid,
        })
    }

    pub fn pv(&self, f: &SpectralField4) -> ScalarField {
        potential_vorticity(f, self.spec.froude)
    }

    /// ℙ(u·∇V) without any filtering.
    pub fn projected_transport(&self, u: &SpectralField4, v: &SpectralField4) -> Result<SpectralField4> {
        Ok(self.tables.leray_project(&self.grid.transport(u, v)?))
    }

    /// 𝐃V = −|ň_h|² diag(ν_h, ν_h, ν_h, ν'_h) V.
    pub fn apply_d(&self, f: &SpectralField4) -> SpectralField4 {
        let (nu, nup) = (self.spec.nu_h, self.spec.nu_h_prime);
        let lat = self.lattice.clone();
        f.map_indexed(|i, v| {
            let h2 = lat.checked_h_sq(i);
            [v[0] * (-nu * h2), v[1] * (-nu * h2), v[2] * (-nu * h2), v[3] * (-nup * h2)]
        })
    }
}

/// Q^ε(U, V) at θ = t/ε: ℒ(−θ)ℙ[(ℒ(θ)U)·∇(ℒ(θ)V)], evaluated pseudo-spectrally.
pub fn q_eps(u: &SpectralField4, v: &SpectralField4, theta: f64, ops: &Operators) -> Result<SpectralField4> {
    u.check_compatible(v)?;
    u.require_divergence_free()?;
    v.require_divergence_free()?;
    q_eps_unchecked(u, v, theta, ops)
}

pub(crate) fn q_eps_unchecked(u: &SpectralField4, v: &SpectralField4, theta: f64, ops: &Operators) -> Result<SpectralField4> {
    if theta == 0.0 {
        return ops.projected_transport(u, v);
    }
    let lu = ops.basis.propagate(u, theta);
    let same = std::ptr::eq(u, v);
    let lv = if same { lu.clone() } else { ops.basis.propagate(v, theta) };
    let t = ops.projected_transport(&lu, &lv)?;
    Ok(ops.basis.propagate(&t, -theta))
}

/// 𝔻^ε(θ)U = ℒ(−θ)𝐃ℒ(θ)U.
pub fn d_eps(u: &SpectralField4, theta: f64, ops: &Operators) -> SpectralField4 {
    if theta == 0.0 {
        return ops.apply_d(u);
    }
    ops.basis.propagate(&ops.apply_d(&ops.basis.propagate(u, theta)), -theta)
}

/// One sparse interaction (k, a) ⊗ (m, b) → (n, c).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilEntry {
    pub k: u32,
    pub m: u32,
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub weight: Complex64,
}

/// Interaction channels kept in the stencil, named by eigen-index triples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChannelCounts {
    /// (±, ∓) → 0 with ω(k) = ω(m).
    pub osc_osc_to_qg: usize,
    /// (0, b) → b with ω(m) = ω(n).
    pub qg_osc_to_osc: usize,
    /// (a, 0) → a with ω(k) = ω(n).
    pub osc_qg_to_osc: usize,
    /// Fully oscillating triads of the resonant set.
    pub triads: usize,
}

/// Resonant stencil, stored row-wise by output mode.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitStencil {
    pub n_max: usize,
    pub a: [f64; 3],
    pub froude: f64,
    pub tol: f64,
    pub offsets: Vec<usize>,
    pub entries: Vec<StencilEntry>,
    pub counts: ChannelCounts,
}

const STENCIL_MAGIC: &[u8; 4] = b"GSPS";
const STENCIL_VERSION: u32 = 1;

impl LimitStencil {
    /// Builds the stencil with the default resonance tolerance.
    pub fn build(ops: &Operators) -> Self {
        Self::build_with_tol(ops, TAU_RES)
    }

    pub fn build_with_tol(ops: &Operators, tol: f64) -> Self {
        let lat = &ops.lattice;
        let basis = &ops.basis;
        let nm = lat.n_max() as i32;
        let zero = lat.zero_index();
        let rows: Vec<(Vec<StencilEntry>, ChannelCounts)> = (0..lat.len())
            .into_par_iter()
            .map(|ni| {
                let mut row = Vec::new();
                let mut cnt = ChannelCounts::default();
                if ni == zero {
                    return (row, cnt);
                }
                let n = lat.mode(ni);
                let wn = basis.omega[ni];
                for ki in 0..lat.len() {
                    if ki == zero {
                        continue;
                    }
                    let k = lat.mode(ki);
                    let m = [n[0] - k[0], n[1] - k[1], n[2] - k[2]];
                    if m.iter().any(|c| c.abs() > nm) || m == [0, 0, 0] {
                        continue;
                    }
                    let mi = lat.index(m).expect("inside cube");
                    let (wk, wm) = (basis.omega[ki], basis.omega[mi]);
                    let mut push = |a: usize, b: usize, c: usize| {
                        let ea = basis.vector(ki, a);
                        let mc = lat.checked(mi);
                        let adv = ea[0] * mc[0] + ea[1] * mc[1] + ea[2] * mc[2];
                        let weight = Complex64::new(0.0, 1.0) * adv * dot4(basis.vector(mi, b), basis.vector(ni, c));
                        row.push(StencilEntry { k: ki as u32, m: mi as u32, a: a as u8, b: b as u8, c: c as u8, weight });
                    };
                    if (wk - wm).abs() < tol {
                        push(1, 2, 0);
                        push(2, 1, 0);
                        cnt.osc_osc_to_qg += 2;
                    }
                    if (wm - wn).abs() < tol {
                        push(0, 1, 1);
                        push(0, 2, 2);
                        cnt.qg_osc_to_osc += 2;
                    }
                    if (wk - wn).abs() < tol {
                        push(1, 0, 1);
                        push(2, 0, 2);
                        cnt.osc_qg_to_osc += 2;
                    }
                    for a in 1..3 {
                        for b in 1..3 {
                            for c in 1..3 {
                                let d = basis.freq(ki, a) + basis.freq(mi, b) - basis.freq(ni, c);
                                if d.abs() < tol {
                                    push(a, b, c);
                                    cnt.triads += 1;
                                }
                            }
                        }
                    }
                }
                (row, cnt)
            })
            .collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut entries = Vec::with_capacity(rows.iter().map(|r| r.0.len()).sum());
        let mut counts = ChannelCounts::default();
        offsets.push(0);
        for (row, c) in rows {
            entries.extend(row);
            offsets.push(entries.len());
            counts.osc_osc_to_qg += c.osc_osc_to_qg;
            counts.qg_osc_to_osc += c.qg_osc_to_osc;
            counts.osc_qg_to_osc += c.osc_qg_to_osc;
            counts.triads += c.triads;
        }
        LimitStencil { n_max: lat.n_max(), a: lat.half_periods(), froude: ops.spec.froude, tol, offsets, entries, counts }
    }

    pub fn matches(&self, ops: &Operators) -> bool {
        self.n_max == ops.lattice.n_max() && self.a == ops.lattice.half_periods() && self.froude == ops.spec.froude
    }

    fn require(&self, ops: &Operators) -> Result<()> {
        if self.matches(ops) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch("stencil built for a different torus or truncation".into()))
        }
    }

    /// Applies the sparse channels, returning output eigen-coordinates.
    pub fn apply(&self, alpha: &[Eigen3], beta: &[Eigen3], osc_only: bool) -> Vec<Eigen3> {
        let zero = Complex64::new(0.0, 0.0);
        (0..self.offsets.len() - 1)
            .into_par_iter()
            .map(|ni| {
                let mut g = [zero; 3];
                for e in &self.entries[self.offsets[ni]..self.offsets[ni + 1]] {
                    if osc_only && e.c == 0 {
                        continue;
                    }
                    g[e.c as usize] += e.weight * alpha[e.k as usize][e.a as usize] * beta[e.m as usize][e.b as usize];
                }
                g
            })
            .collect()
    }

    /// Cache key derived from torus geometry, truncation and tolerance.
    pub fn cache_key(spec: &TorusSpec, n_max: usize, tol: f64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(STENCIL_MAGIC);
        h.update(STENCIL_VERSION.to_le_bytes());
        h.update((n_max as u64).to_le_bytes());
        for a in spec.a {
            h.update(a.to_bits().to_le_bytes());
        }
        h.update(spec.froude.to_bits().to_le_bytes());
        h.update(tol.to_bits().to_le_bytes());
        h.finalize().into()
    }

    pub fn write_to<W: Write>(&self, mut w: W, key: &[u8; 32]) -> Result<()> {
        w.write_all(STENCIL_MAGIC)?;
        w.write_all(&STENCIL_VERSION.to_le_bytes())?;
        w.write_all(key)?;
        w.write_all(&(self.n_max as u64).to_le_bytes())?;
        for a in self.a {
            w.write_all(&a.to_le_bytes())?;
        }
        w.write_all(&self.froude.to_le_bytes())?;
        w.write_all(&self.tol.to_le_bytes())?;
        let c = self.counts;
        for x in [c.osc_osc_to_qg, c.qg_osc_to_osc, c.osc_qg_to_osc, c.triads, self.offsets.len(), self.entries.len()] {
            w.write_all(&(x as u64).to_le_bytes())?;
        }
        for o in &self.offsets {
            w.write_all(&(*o as u64).to_le_bytes())?;
        }
        for e in &self.entries {
            w.write_all(&e.k.to_le_bytes())?;
            w.write_all(&e.m.to_le_bytes())?;
            w.write_all(&[e.a, e.b, e.c])?;
            w.write_all(&e.weight.re.to_le_bytes())?;
            w.write_all(&e.weight.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R, key: &[u8; 32]) -> Result<Self> {
        fn u64_<R: Read>(r: &mut R) -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        }
        fn f64_<R: Read>(r: &mut R) -> Result<f64> {
            Ok(f64::from_bits(u64_(r)?))
        }
        fn u32_<R: Read>(r: &mut R) -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        }
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != STENCIL_MAGIC || u32_(&mut r)? != STENCIL_VERSION {
            return Err(Error::Format("not a stencil cache of this version".into()));
        }
        let mut stored = [0u8; 32];
        r.read_exact(&mut stored)?;
        if &stored != key {
            return Err(Error::Format("stencil cache key mismatch".into()));
        }
        let n_max = u64_(&mut r)? as usize;
        let a = [f64_(&mut r)?, f64_(&mut r)?, f64_(&mut r)?];
        let froude = f64_(&mut r)?;
        let tol = f64_(&mut r)?;
        let mut c = [0usize; 6];
        for x in c.iter_mut() {
            *x = u64_(&mut r)? as usize;
        }
        let offsets = (0..c[4]).map(|_| u64_(&mut r).map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let mut entries = Vec::with_capacity(c[5]);
        for _ in 0..c[5] {
            let k = u32_(&mut r)?;
            let m = u32_(&mut r)?;
            let mut abc = [0u8; 3];
            r.read_exact(&mut abc)?;
            let re = f64_(&mut r)?;
            let im = f64_(&mut r)?;
            entries.push(StencilEntry { k, m, a: abc[0], b: abc[1], c: abc[2], weight: Complex64::new(re, im) });
        }
        Ok(LimitStencil {
            n_max,
            a,
            froude,
            tol,
            offsets,
            entries,
            counts: ChannelCounts { osc_osc_to_qg: c[0], qg_osc_to_osc: c[1], osc_qg_to_osc: c[2], triads: c[3] },
        })
    }

    /// Loads a cached stencil from `dir`, building and saving it on a miss.
    pub fn load_or_build(dir: &Path, ops: &Operators) -> Result<Self> {
        let key = Self::cache_key(&ops.spec, ops.lattice.n_max(), TAU_RES);
        let hex: String = key.iter().take(8).map(|b| format!("{b:02x}")).collect();
        let path = dir.join(format!("stencil-{hex}.bin"));
        if let Ok(file) = std::fs::File::open(&path) {
            if let Ok(s) = Self::read_from(std::io::BufReader::new(file), &key) {
                return Ok(s);
            }
        }
        let s = Self::build(ops);
        std::fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        s.write_to(std::io::BufWriter::new(std::fs::File::create(&tmp)?), &key)?;
        std::fs::rename(&tmp, &path)?;
        Ok(s)
    }
}

/// The QG⊗QG→QG channel: Π_QG((U_QG·∇)V_QG), evaluated on the dealiased grid.
pub fn q_limit_qg_dense(u: &SpectralField4, v: &SpectralField4, ops: &Operators) -> Result<SpectralField4> {
    let uq = ops.basis.qg_projection(u);
    let vq = ops.basis.qg_projection(v);
    Ok(ops.basis.qg_projection(&ops.grid.transport(&uq, &vq)?))
}

/// The limit bilinear form Q(U, V).
pub fn q_limit(u: &SpectralField4, v: &SpectralField4, stencil: &LimitStencil, ops: &Operators) -> Result<SpectralField4> {
    stencil.require(ops)?;
    u.check_compatible(v)?;
    let alpha = ops.basis.to_eigen(u);
    let beta = ops.basis.to_eigen(v);
    let sparse = ops.basis.from_eigen(&stencil.apply(&alpha, &beta, false));
    Ok(sparse.add(&q_limit_qg_dense(u, v, ops)?))
}

/// Limit dissipation a(D)U; the limit system reads ∂_tU + Q(U,U) + a(D)U = 0.
pub fn d_limit(u: &SpectralField4, basis: &ModeBasis) -> Result<SpectralField4> {
    u.require_divergence_free()?;
    Ok(basis.d_limit(u))
}

/// J_n: zeroes every mode with Euclidean integer norm above `n_cut`.
pub fn galerkin_truncate(u: &SpectralField4, n_cut: f64) -> SpectralField4 {
    let lat = u.lattice.clone();
    let cut2 = n_cut * n_cut;
    u.map_indexed(|i, v| {
        let n = lat.mode(i);
        let r2 = (n[0] as f64).powi(2) + (n[1] as f64).powi(2) + (n[2] as f64).powi(2);
        if r2 > cut2 {
            ZERO4
        } else {
            *v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_cache_roundtrip() {
        let spec = TorusSpec::unit(2.0);
        let ops = Operators::new(&spec, 3);
        let s = LimitStencil::build(&ops);
        assert!(!s.entries.is_empty());
        let key = LimitStencil::cache_key(&spec, 3, TAU_RES);
        let mut buf = Vec::new();
        s.write_to(&mut buf, &key).unwrap();
        let back = LimitStencil::read_from(buf.as_slice(), &key).unwrap();
        assert_eq!(back, s);
        assert!(LimitStencil::read_from(buf.as_slice(), &[0u8; 32]).is_err());
    }

    #[test]
    fn galerkin_edge_cases() {
        let spec = TorusSpec::unit(2.0);
        let lat = Arc::new(FreqLattice::new(&spec, 2));
        let f = crate::field::make_field(&lat, |n| [Complex64::new(n[0] as f64, 1.0); 4]);
        assert_eq!(galerkin_truncate(&f, 4.0).coeffs, f.coeffs);
        assert_eq!(galerkin_truncate(&f, 0.0).norm_sq(), 0.0);
        let j = galerkin_truncate(&f, 1.5);
        assert_eq!(galerkin_truncate(&j, 1.5).coeffs, j.coeffs);
    }
}
