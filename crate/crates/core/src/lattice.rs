//! Torus parameters and the truncated frequency lattice.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exact::AlgebraicInput;

/// Exact values of a_i² and F², when known.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExactCarriers {
    pub a_sq: [Option<AlgebraicInput>; 3],
    pub froude_sq: Option<AlgebraicInput>,
}

/// The anisotropic torus ∏[0, 2πa_i) together with Froude number and viscosities.
///
/// Vertical viscosities are identically zero and have no field.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusSpec {
    pub a: [f64; 3],
    pub froude: f64,
    pub nu_h: f64,
    pub nu_h_prime: f64,
    pub exact: Option<ExactCarriers>,
}

impl TorusSpec {
    pub fn new(a: [f64; 3], froude: f64, nu_h: f64, nu_h_prime: f64) -> Result<Self> {
        let spec = TorusSpec { a, froude, nu_h, nu_h_prime, exact: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit torus with unit viscosities.
    pub fn unit(froude: f64) -> Self {
        TorusSpec { a: [1.0; 3], froude, nu_h: 1.0, nu_h_prime: 1.0, exact: None }
    }

    /// Unit torus with F² = num/den carried exactly.
    pub fn unit_rational(f2_num: i64, f2_den: i64) -> Self {
        let f2 = f2_num as f64 / f2_den as f64;
        let one = || Some(AlgebraicInput::rational(1, 1));
        TorusSpec {
            exact: Some(ExactCarriers { a_sq: [one(), one(), one()], froude_sq: Some(AlgebraicInput::rational(f2_num, f2_den)) }),
            ..TorusSpec::unit(f2.sqrt())
        }
    }

    pub fn with_viscosity(mut self, nu_h: f64, nu_h_prime: f64) -> Self {
        self.nu_h = nu_h;
        self.nu_h_prime = nu_h_prime;
        self
    }

    /// Attaches exact carriers after checking them against the float values.
    pub fn with_exact(mut self, exact: ExactCarriers) -> Result<Self> {
        for alg in exact.a_sq.iter().chain(std::iter::once(&exact.froude_sq)).flatten() {
            alg.validate()?;
        }
        self.exact = Some(exact);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidTorus(format!("half-periods must be positive, got {:?}", self.a)));
        }
        if !(self.froude > 0.0 && self.froude.is_finite()) {
            return Err(Error::InvalidTorus(format!("Froude number must be positive, got {}", self.froude)));
        }
        if !(self.nu_h > 0.0 && self.nu_h_prime > 0.0) {
            return Err(Error::InvalidTorus("viscosities must be positive".into()));
        }
        if let Some(ex) = &self.exact {
            let check = |name: &str, alg: &Option<AlgebraicInput>, float: f64| -> Result<()> {
                if let Some(alg) = alg {
                    let v = alg.to_f64();
                    if ((v - float) / float).abs() > 1e-12 {
                        return Err(Error::InvalidTorus(format!("exact {name} = {v} inconsistent with float value {float}")));
                    }
                }
                Ok(())
            };
            for i in 0..3 {
                check(&format!("a{}^2", i + 1), &ex.a_sq[i], self.a[i] * self.a[i])?;
            }
            check("F^2", &ex.froude_sq, self.froude * self.froude)?;
        }
        Ok(())
    }

    pub fn froude_sq(&self) -> f64 {
        self.froude * self.froude
    }

    pub fn nu_min(&self) -> f64 {
        self.nu_h.min(self.nu_h_prime)
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_h.max(self.nu_h_prime)
    }

    /// Exact rational a_i² and F², when all four are rational.
    pub fn rational_params(&self) -> Option<([BigRational; 3], BigRational)> {
        let ex = self.exact.as_ref()?;
        let a0 = ex.a_sq[0].as_ref()?.as_rational()?;
        let a1 = ex.a_sq[1].as_ref()?.as_rational()?;
        let a2 = ex.a_sq[2].as_ref()?.as_rational()?;
        let f2 = ex.froude_sq.as_ref()?.as_rational()?;
        Some(([a0, a1, a2], f2))
    }
}

/// Integer triple labelling a Fourier mode.
pub type Mode = [i32; 3];

/// All modes with |n_i| ≤ N, in lexicographic order.
///
/// The ordering makes `index(-n) = len - 1 - index(n)`, and the zero mode
/// sits exactly in the middle.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqLattice {
    n_max: usize,
    a: [f64; 3],
    checked: Vec<[f64; 3]>,
}

impl FreqLattice {
    pub fn new(spec: &TorusSpec, n_max: usize) -> Self {
        assert!(n_max >= 1, "truncation radius must be positive");
        let side = 2 * n_max + 1;
        let mut checked = Vec::with_capacity(side * side * side);
        let nm = n_max as i32;
        for n1 in -nm..=nm {
            for n2 in -nm..=nm {
                for n3 in -nm..=nm {
                    checked.push([n1 as f64 / spec.a[0], n2 as f64 / spec.a[1], n3 as f64 / spec.a[2]]);
                }
            }
        }
        FreqLattice { n_max, a: spec.a, checked }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn side(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn len(&self) -> usize {
        self.checked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checked.is_empty()
    }

    pub fn half_periods(&self) -> [f64; 3] {
        self.a
    }

    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    pub fn contains(&self, n: Mode) -> bool {
        let nm = self.n_max as i32;
        n.iter().all(|&c| c.abs() <= nm)
    }

    pub fn index(&self, n: Mode) -> Option<usize> {
        if !self.contains(n) {
            return None;
        }
        let s = self.side();
        let nm = self.n_max as i32;
        let [a, b, c] = n.map(|x| (x + nm) as usize);
        Some((a * s + b) * s + c)
    }

    pub fn mode(&self, idx: usize) -> Mode {
        let s = self.side();
        let nm = self.n_max as i32;
        [(idx / (s * s)) as i32 - nm, ((idx / s) % s) as i32 - nm, (idx % s) as i32 - nm]
    }

    pub fn neg_index(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    /// Scaled wavenumber ň = (n₁/a₁, n₂/a₂, n₃/a₃).
    pub fn checked(&self, idx: usize) -> [f64; 3] {
        self.checked[idx]
    }

    pub fn checked_h_sq(&self, idx: usize) -> f64 {
        let k = self.checked[idx];
        k[0] * k[0] + k[1] * k[1]
    }

    pub fn modes(&self) -> impl Iterator<Item = (usize, Mode)> + '_ {
        (0..self.len()).map(move |i| (i, self.mode(i)))
    }

    /// Same torus geometry and truncation.
    pub fn compatible(&self, other: &FreqLattice) -> bool {
        self.n_max == other.n_max && self.a == other.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_negation() {
        let spec = TorusSpec::new([1.0, 2.0, 0.5], 2.0, 1.0, 1.0).unwrap();
        let lat = FreqLattice::new(&spec, 3);
        assert_eq!(lat.len(), 343);
        assert_eq!(lat.mode(lat.zero_index()), [0, 0, 0]);
        for (i, n) in lat.modes() {
            assert_eq!(lat.index(n), Some(i));
            let j = lat.neg_index(i);
            assert_eq!(lat.mode(j), [-n[0], -n[1], -n[2]]);
            let (k, mk) = (lat.checked(i), lat.checked(j));
            assert_eq!(k.map(|x| -x), mk);
        }
        assert_eq!(lat.checked(lat.index([1, 2, 3]).unwrap()), [1.0, 1.0, 6.0]);
        assert_eq!(lat.index([4, 0, 0]), None);
    }

    #[test]
    fn torus_validation() {
        assert!(TorusSpec::new([1.0, 0.0, 1.0], 1.0, 1.0, 1.0).is_err());
        assert!(TorusSpec::new([1.0, 1.0, 1.0], -1.0, 1.0, 1.0).is_err());
        assert!(TorusSpec::new([1.0, 1.0, 1.0], 1.0, 0.0, 1.0).is_err());
        let t = TorusSpec::unit_rational(9, 4);
        t.validate().unwrap();
        assert!(t.rational_params().is_some());
        let bad = TorusSpec::unit(1.5).with_exact(ExactCarriers { froude_sq: Some(AlgebraicInput::rational(2, 1)), ..Default::default() });
        assert!(bad.is_err());
    }
}
