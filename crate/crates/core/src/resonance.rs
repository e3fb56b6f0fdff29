//! Resonant triads ω^a(k) + ω^b(m) = ω^c(n), k + m = n, among oscillating modes.
//!
//! Two enumerators are provided: a floating-point scan with tolerance and an
//! exact one for rational a_i² and F² that finds integer roots k₃ of a degree-8
//! polynomial by exact evaluation inside the Fujiwara bound.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{AlgebraicInput, IntPoly, RatPoly};
use crate::lattice::{Mode, TorusSpec};
use crate::linear::omega;

/// Default float certification tolerance.
pub const TAU_RES: f64 = 1e-9;

/// Tolerance used to re-verify exact roots against the unsquared equation.
pub const VERIFY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResonantTriple {
    pub k: Mode,
    pub m: Mode,
    pub n: Mode,
    /// Signs of (a, b, c), each ±1.
    pub signs: [i8; 3],
}

impl ResonantTriple {
    fn sort_key(&self) -> (Mode, Mode, [i8; 3]) {
        (self.n, self.k, self.signs)
    }

    /// The same interaction with the roles of k and m exchanged.
    pub fn swapped(&self) -> ResonantTriple {
        ResonantTriple { k: self.m, m: self.k, n: self.n, signs: [self.signs[1], self.signs[0], self.signs[2]] }
    }

    /// |ω^a(k) + ω^b(m) − ω^c(n)| in floating point.
    pub fn defect(&self, spec: &TorusSpec) -> f64 {
        let w = |n: Mode| omega(checked(spec, n), spec.froude);
        let s = self.signs.map(f64::from);
        (s[0] * w(self.k) + s[1] * w(self.m) - s[2] * w(self.n)).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Certification {
    ExactRational,
    FloatTolerance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonantSet {
    pub n_max: usize,
    pub torus: TorusSpec,
    pub triples: Vec<ResonantTriple>,
    pub certification: Certification,
}

impl ResonantSet {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// True if the set is closed under the (k, a) ↔ (m, b) exchange.
    pub fn is_swap_symmetric(&self) -> bool {
        self.triples.iter().all(|t| self.triples.binary_search_by(|x| x.sort_key().cmp(&t.swapped().sort_key())).is_ok())
    }

    /// Same triples, ignoring certification.
    pub fn same_triples(&self, other: &ResonantSet) -> bool {
        self.triples == other.triples
    }

    /// Line-oriented text: header comments, then `k1 k2 k3 m1 m2 m3 n1 n2 n3 a b c`.
    pub fn to_text(&self) -> String {
        let t = &self.torus;
        let mut s = String::new();
        let _ = writeln!(s, "# resonant set");
        let _ = writeln!(s, "# torus a1={} a2={} a3={} F={} nu_h={} nu_h_prime={}", t.a[0], t.a[1], t.a[2], t.froude, t.nu_h, t.nu_h_prime);
        let _ = writeln!(s, "# N={}", self.n_max);
        match self.certification {
            Certification::ExactRational => {
                let _ = writeln!(s, "# certification exact-rational");
            }
            Certification::FloatTolerance(tol) => {
                let _ = writeln!(s, "# certification float-tolerance {tol:e}");
            }
        }
        let _ = writeln!(s, "# count {}", self.triples.len());
        let sg = |x: i8| if x > 0 { '+' } else { '-' };
        for r in &self.triples {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {} {} {} {} {} {}",
                r.k[0],
                r.k[1],
                r.k[2],
                r.m[0],
                r.m[1],
                r.m[2],
                r.n[0],
                r.n[1],
                r.n[2],
                sg(r.signs[0]),
                sg(r.signs[1]),
                sg(r.signs[2])
            );
        }
        s
    }
}

fn checked(spec: &TorusSpec, n: Mode) -> [f64; 3] {
    [n[0] as f64 / spec.a[0], n[1] as f64 / spec.a[1], n[2] as f64 / spec.a[2]]
}

fn cube(n_max: usize) -> impl Iterator<Item = Mode> + Clone {
    let nm = n_max as i32;
    (-nm..=nm).flat_map(move |a| (-nm..=nm).flat_map(move |b| (-nm..=nm).map(move |c| [a, b, c])))
}

fn in_cube(n: Mode, nm: i32) -> bool {
    n.iter().all(|c| c.abs() <= nm)
}

const SIGN_PATTERNS: [[i8; 3]; 8] = [[-1, -1, -1], [-1, -1, 1], [-1, 1, -1], [-1, 1, 1], [1, -1, -1], [1, -1, 1], [1, 1, -1], [1, 1, 1]];

/// Brute-force scan keeping triples with |ω^a(k)+ω^b(m)−ω^c(n)| < tol.
pub fn enumerate_resonances_float(spec: &TorusSpec, n_max: usize, tol: f64) -> Result<ResonantSet> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let nm = n_max as i32;
    let outputs: Vec<Mode> = cube(n_max).filter(|&n| n != [0, 0, 0]).collect();
    let mut triples: Vec<ResonantTriple> = outputs
        .par_iter()
        .flat_map_iter(|&n| {
            let wn = omega(checked(spec, n), spec.froude);
            let mut local = Vec::new();
            for k in cube(n_max) {
                let m = [n[0] - k[0], n[1] - k[1], n[2] - k[2]];
                if k == [0, 0, 0] || m == [0, 0, 0] || !in_cube(m, nm) {
                    continue;
                }
                let wk = omega(checked(spec, k), spec.froude);
                let wm = omega(checked(spec, m), spec.froude);
                for s in SIGN_PATTERNS {
                    let d = f64::from(s[0]) * wk + f64::from(s[1]) * wm - f64::from(s[2]) * wn;
                    if d.abs() < tol {
                        local.push(ResonantTriple { k, m, n, signs: s });
                    }
                }
            }
            local
        })
        .collect();
    triples.sort_by_key(ResonantTriple::sort_key);
    Ok(ResonantSet { n_max, torus: spec.clone(), triples, certification: Certification::FloatTolerance(tol) })
}

/// The coefficients A_0..A_8 of ℘(k₃) = Σ A_i k₃^i in the classical expanded
/// form (index i holds A_i).
///
/// `kh2` and `mh2` stand for |ǩ_h|² and |m̌_h|². This polynomial is kept for
/// reference and for root-bound experiments; the exact enumerator uses
/// [`resonance_poly_general`], which is valid on every torus.
pub fn resonance_poly_coeffs(kh2: &BigRational, mh2: &BigRational, n3: i64, f2: &BigRational) -> [BigRational; 9] {
    let r = |x: i64| BigRational::from_integer(BigInt::from(x));
    let n = r(n3);
    let n2 = &n * &n;
    let n4 = &n2 * &n2;
    let f4 = f2 * f2;
    let k4 = kh2 * kh2;
    let m4 = mh2 * mh2;
    let q = r(-1) + r(4) * f2; // −1 + 4F²
    let p = f2 * (r(-4) + f2); // F²(−4 + F²)
    let c = r(3) + r(2) * f2 + &f4; // 3 + 2F² + F⁴
    let two_f = r(2) + f2; // 2 + F²

    let a8 = r(1) - r(4) * f2;
    let a7 = r(4) * &q * &n;
    let a6 = r(-6) * (f2 * kh2 + f2 * mh2 + &q * &n2);
    let a5 = r(4) * &n * (r(6) * f2 * kh2 + r(3) * f2 * mh2 + &q * &n2);
    let a4 = -(&p * &k4 + &p * &m4 - r(6) * f2 * mh2 * &n2 + (r(1) - r(4) * f2) * &n4 - r(2) * kh2 * (&c * mh2 + r(18) * f2 * &n2));
    let a3 = r(4) * kh2 * &n * (-(&p) * kh2 + &c * mh2 + r(6) * f2 * &n2);
    let a2 = r(-2) * kh2 * (&two_f * &m4 + &c * mh2 * &n2 + r(3) * f2 * &n4 + kh2 * (&two_f * mh2 - r(3) * &p * &n2));
    let a1 = r(4) * &k4 * &n * (&two_f * mh2 - &p * &n2);
    let a0 = -(&k4) * (r(3) * &m4 + r(2) * &two_f * mh2 * &n2 - &p * &n4);
    [a0, a1, a2, a3, a4, a5, a6, a7, a8]
}

/// Fujiwara bound 2·max_k |a_{n−k}/a_n|^{1/k} on the moduli of all complex roots.
///
/// Coefficients are ordered from the constant term upward.
pub fn fujiwara_bound(coeffs: &[f64]) -> Result<f64> {
    let lead = *coeffs.last().ok_or(Error::ZeroLeadingCoefficient)?;
    if lead == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }
    let n = coeffs.len() - 1;
    let mut best: f64 = 0.0;
    for k in 1..=n {
        let ratio = (coeffs[n - k] / lead).abs();
        best = best.max(ratio.powf(1.0 / k as f64));
    }
    Ok(2.0 * best)
}

/// Fujiwara bound of an integer polynomial, rounded up to a safe integer.
pub fn fujiwara_bound_int(p: &IntPoly) -> Result<u64> {
    if p.leading().is_zero() {
        return Err(Error::ZeroLeadingCoefficient);
    }
    // Work with ratios as exact rationals converted late, so huge coefficients do not overflow f64.
    let n = p.degree();
    let lead = BigRational::from_integer(p.leading().clone());
    let mut best: f64 = 0.0;
    for k in 1..=n {
        let ratio = (BigRational::from_integer(p.0[n - k].clone()) / &lead).abs();
        let v = ratio.to_f64().unwrap_or(f64::INFINITY);
        best = best.max(v.powf(1.0 / k as f64));
    }
    let b = 2.0 * best;
    if !b.is_finite() {
        return Ok(u64::MAX);
    }
    Ok((b * (1.0 + 1e-9)).ceil() as u64 + 1)
}

/// Minimal checked ring used to build the resonance polynomial in i128 with a BigInt fallback.
trait Ring: Clone + Sized {
    fn from_i128(x: i128) -> Self;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
}

impl Ring for i128 {
    fn from_i128(x: i128) -> Self {
        x
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
}

impl Ring for BigInt {
    fn from_i128(x: i128) -> Self {
        BigInt::from(x)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
}

fn pmul<T: Ring>(a: &[T], b: &[T]) -> Option<Vec<T>> {
    let mut out = vec![T::from_i128(0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&x.mul(y)?)?;
        }
    }
    Some(out)
}

fn padd<T: Ring>(a: &[T], b: &[T], sub: bool) -> Option<Vec<T>> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or(T::from_i128(0));
            let y = b.get(i).cloned().unwrap_or(T::from_i128(0));
            if sub {
                x.sub(&y)
            } else {
                x.add(&y)
            }
        })
        .collect()
}

fn peval<T: Ring>(p: &[T], x: i128) -> Option<T> {
    let xv = T::from_i128(x);
    p.iter().rev().try_fold(T::from_i128(0), |acc, c| acc.mul(&xv)?.add(c))
}

/// Integer data of a torus with rational a_i² = p_i/q_i and F² = r/s.
#[derive(Clone, Debug)]
struct IntegerTorus {
    /// Weights w_j = q_j L / p_j with L = lcm(p_j), so L|ǩ|² = Σ w_j k_j².
    w: [i128; 3],
    r: i128,
    s: i128,
}

impl IntegerTorus {
    fn new(a_sq: &[BigRational; 3], f2: &BigRational) -> Result<Self> {
        let l = a_sq.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.numer()));
        let to_i = |x: BigInt| x.to_i128().ok_or_else(|| Error::CostGuard("torus integers exceed 128 bits".into()));
        let mut w = [0i128; 3];
        for j in 0..3 {
            w[j] = to_i(a_sq[j].denom() * &l / a_sq[j].numer())?;
        }
        Ok(IntegerTorus { w, r: to_i(f2.numer().clone())?, s: to_i(f2.denom().clone())? })
    }

    fn horiz(&self, n: Mode) -> i128 {
        self.w[0] * (n[0] as i128).pow(2) + self.w[1] * (n[1] as i128).pow(2)
    }

    /// (L|ň|², sL(|ň_h|² + F²ň₃²)).
    fn pair(&self, n: Mode) -> (i128, i128) {
        let h = self.horiz(n);
        let v = self.w[2] * (n[2] as i128).pow(2);
        (h + v, self.s * h + self.r * v)
    }
}

/// The squared resonance condition for fixed (k_h, m_h, n) as a polynomial in k₃.
///
/// With x = ω(k)², y = ω(m)², z = ω(n)², some sign choice satisfies
/// ±√x ± √y = ±√z exactly when (z − x − y)² = 4xy; after clearing the positive
/// denominators this is the degree-8 integer polynomial returned here.
fn general_poly<T: Ring>(t: &IntegerTorus, kh: [i32; 2], mh: [i32; 2], n: Mode) -> Option<Vec<T>> {
    let c = |x: i128| T::from_i128(x);
    let kh2 = t.horiz([kh[0], kh[1], 0]);
    let mh2 = t.horiz([mh[0], mh[1], 0]);
    let w3 = t.w[2];
    let n3 = n[2] as i128;
    let kk = vec![c(kh2), c(0), c(w3)];
    let kf = vec![c(t.s * kh2), c(0), c(t.r * w3)];
    let mm = vec![c(mh2 + w3 * n3 * n3), c(-2 * w3 * n3), c(w3)];
    let mf = vec![c(t.s * mh2 + t.r * w3 * n3 * n3), c(-2 * t.r * w3 * n3), c(t.r * w3)];
    let (nn, nf) = t.pair(n);
    let (nn, nf) = (vec![c(nn)], vec![c(nf)]);
    let km = pmul(&kk, &mm)?;
    let e = padd(&padd(&pmul(&nf, &km)?, &pmul(&pmul(&kf, &mm)?, &nn)?, true)?, &pmul(&pmul(&mf, &kk)?, &nn)?, true)?;
    let four = vec![c(4)];
    let rhs = pmul(&pmul(&pmul(&four, &pmul(&kf, &mf)?)?, &km)?, &pmul(&nn, &nn)?)?;
    padd(&pmul(&e, &e)?, &rhs, true)
}

/// The exact resonance polynomial in k₃ (constant term first) for rational a_i², F².
pub fn resonance_poly_general(a_sq: &[BigRational; 3], f2: &BigRational, kh: [i32; 2], mh: [i32; 2], n: Mode) -> Result<IntPoly> {
    let t = IntegerTorus::new(a_sq, f2)?;
    let p: Vec<BigInt> = general_poly::<BigInt>(&t, kh, mh, n).expect("BigInt arithmetic is total");
    Ok(IntPoly::new(p))
}

/// Statistics collected by the exact enumerator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactStats {
    pub polynomials: u64,
    pub candidates: u64,
    pub integer_roots: u64,
    pub rejected: u64,
    pub bigint_fallbacks: u64,
}

/// Exact enumeration for tori with rational a_i² and F².
pub fn enumerate_resonances_exact(spec: &TorusSpec, n_max: usize) -> Result<ResonantSet> {
    enumerate_resonances_exact_with_stats(spec, n_max).map(|(s, _)| s)
}

pub fn enumerate_resonances_exact_with_stats(spec: &TorusSpec, n_max: usize) -> Result<(ResonantSet, ExactStats)> {
    let (a_sq, f2) =
        spec.rational_params().ok_or_else(|| Error::MissingExact("exact enumeration needs rational a1^2, a2^2, a3^2 and F^2".into()))?;
    let t = IntegerTorus::new(&a_sq, &f2)?;
    let nm = n_max as i32;
    let outputs: Vec<Mode> = cube(n_max).filter(|&n| n != [0, 0, 0]).collect();
    let results: Vec<(Vec<ResonantTriple>, ExactStats)> = outputs
        .par_iter()
        .map(|&n| {
            let mut stats = ExactStats::default();
            let mut local = Vec::new();
            for k1 in -nm..=nm {
                for k2 in -nm..=nm {
                    let mh = [n[0] - k1, n[1] - k2];
                    if mh[0].abs() > nm || mh[1].abs() > nm {
                        continue;
                    }
                    solve_fiber(spec, &t, [k1, k2], mh, n, nm, &mut local, &mut stats);
                }
            }
            (local, stats)
        })
        .collect();
    let mut triples = Vec::new();
    let mut stats = ExactStats::default();
    for (tr, st) in results {
        triples.extend(tr);
        stats.polynomials += st.polynomials;
        stats.candidates += st.candidates;
        stats.integer_roots += st.integer_roots;
        stats.rejected += st.rejected;
        stats.bigint_fallbacks += st.bigint_fallbacks;
    }
    triples.sort_by_key(ResonantTriple::sort_key);
    Ok((ResonantSet { n_max, torus: spec.clone(), triples, certification: Certification::ExactRational }, stats))
}

#[allow(clippy::too_many_arguments)]
fn solve_fiber(
    spec: &TorusSpec,
    t: &IntegerTorus,
    kh: [i32; 2],
    mh: [i32; 2],
    n: Mode,
    nm: i32,
    out: &mut Vec<ResonantTriple>,
    stats: &mut ExactStats,
) {
    stats.polynomials += 1;
    // k₃ must keep both k and m = n − k inside the cube
    let lo = (-nm).max(n[2] - nm);
    let hi = nm.min(n[2] + nm);
    let poly_small = general_poly::<i128>(t, kh, mh, n);
    let big = IntPoly::new(match &poly_small {
        Some(p) => p.iter().map(|&c| BigInt::from(c)).collect(),
        None => {
            stats.bigint_fallbacks += 1;
            general_poly::<BigInt>(t, kh, mh, n).expect("BigInt arithmetic is total")
        }
    });
    let (lo, hi) = if big.is_zero() {
        (lo, hi)
    } else if big.degree() == 0 {
        return;
    } else {
        let b = fujiwara_bound_int(&big).unwrap_or(u64::MAX).min(i32::MAX as u64) as i32;
        (lo.max(-b), hi.min(b))
    };
    for k3 in lo..=hi {
        let k = [kh[0], kh[1], k3];
        let m = [mh[0], mh[1], n[2] - k3];
        if k == [0, 0, 0] || m == [0, 0, 0] {
            continue;
        }
        stats.candidates += 1;
        let root = match &poly_small {
            Some(p) => match peval(p, k3 as i128) {
                Some(v) => v == 0,
                None => big.eval_int(&BigInt::from(k3)).is_zero(),
            },
            None => big.eval_int(&BigInt::from(k3)).is_zero(),
        };
        if !root {
            continue;
        }
        stats.integer_roots += 1;
        for signs in exact_signs(t, k, m, n) {
            let tr = ResonantTriple { k, m, n, signs };
            if tr.defect(spec) < VERIFY_TOL {
                out.push(tr);
            } else {
                stats.rejected += 1;
            }
        }
    }
}

/// Sign patterns realizing a root of the squared equation, decided exactly.
fn exact_signs(t: &IntegerTorus, k: Mode, m: Mode, n: Mode) -> Vec<[i8; 3]> {
    let big = |x: i128| BigInt::from(x);
    let (kk, kf) = t.pair(k);
    let (mm, mf) = t.pair(m);
    let (nn, nf) = t.pair(n);
    // sign of z − x − y with x = kf/(r kk) etc.
    let e = big(nf) * big(kk) * big(mm) - big(kf) * big(mm) * big(nn) - big(mf) * big(kk) * big(nn);
    if !e.is_negative() {
        vec![[1, 1, 1], [-1, -1, -1]]
    } else {
        let xy = big(kf) * big(mm) - big(mf) * big(kk);
        if xy.is_positive() {
            vec![[1, -1, 1], [-1, 1, -1]]
        } else if xy.is_negative() {
            vec![[-1, 1, 1], [1, -1, -1]]
        } else {
            Vec::new()
        }
    }
}

/// P(μ²) = LHS − RHS of the classical squared fiber equation, with
/// denominators of F² cleared. It does not vanish at every fiber resonance;
/// use [`fiber_resonance_poly`] to test for them. Coefficients are in powers
/// of t = μ².
pub fn horizontal_avg_resonance_poly(k3: i64, m3: i64, f2: &BigRational) -> IntPoly {
    let r = |x: i64| BigRational::from_integer(BigInt::from(x));
    let (k2, m2) = (r(k3 * k3), r(m3 * m3));
    // t² + F² t m₃² + k₃²(−(F² − 2)t + m₃²)
    let inner = RatPoly::new(vec![&k2 * &m2, f2 * &m2 - &k2 * (f2 - r(2)), r(1)]);
    let lhs = rmul(&inner, &inner);
    let tk = RatPoly::new(vec![k2.clone(), r(1)]);
    let rhs = rmul(
        &rmul(&rmul(&RatPoly::new(vec![r(4)]), &rmul(&tk, &tk)), &RatPoly::new(vec![m2.clone(), r(1)])),
        &RatPoly::new(vec![f2 * &m2, r(1)]),
    );
    rat_to_int_keep_scale(&rsub(&lhs, &rhs))
}

/// Fiber resonance condition for n_h = 0 rewritten without extraneous factors:
/// with A = t + F²k₃², A_k = t + k₃², B = t + F²m₃², B_m = t + m₃²,
/// (A·B_m + B·A_k − F²·A_k·B_m)² − 4·A·A_k·B·B_m, in powers of t = μ².
pub fn fiber_resonance_poly(k3: i64, m3: i64, f2: &BigRational) -> IntPoly {
    let r = |x: i64| BigRational::from_integer(BigInt::from(x));
    let (k2, m2) = (r(k3 * k3), r(m3 * m3));
    let a = RatPoly::new(vec![f2 * &k2, r(1)]);
    let ak = RatPoly::new(vec![k2.clone(), r(1)]);
    let b = RatPoly::new(vec![f2 * &m2, r(1)]);
    let bm = RatPoly::new(vec![m2.clone(), r(1)]);
    let f2p = RatPoly::new(vec![f2.clone()]);
    let e = rsub(&radd(&rmul(&a, &bm), &rmul(&b, &ak)), &rmul(&f2p, &rmul(&ak, &bm)));
    let four = RatPoly::new(vec![r(4)]);
    let rhs = rmul(&four, &rmul(&rmul(&a, &ak), &rmul(&b, &bm)));
    rat_to_int_keep_scale(&rsub(&rmul(&e, &e), &rhs))
}

fn rmul(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let mut out = vec![BigRational::zero(); a.0.len() + b.0.len() - 1];
    for (i, x) in a.0.iter().enumerate() {
        for (j, y) in b.0.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    RatPoly::new(out)
}

fn radd(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let len = a.0.len().max(b.0.len());
    RatPoly::new(
        (0..len)
            .map(|i| a.0.get(i).cloned().unwrap_or_else(BigRational::zero) + b.0.get(i).cloned().unwrap_or_else(BigRational::zero))
            .collect(),
    )
}

fn rsub(a: &RatPoly, b: &RatPoly) -> RatPoly {
    radd(a, &RatPoly::new(b.0.iter().map(|c| -c).collect()))
}

/// Multiplies by the lcm of denominators only (no content division, sign kept).
fn rat_to_int_keep_scale(p: &RatPoly) -> IntPoly {
    let lcm = p.0.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    IntPoly::new(p.0.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect())
}

/// Outcome of the condition-(P) check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PVerdict {
    HoldsByPart2,
    ResonanceFreeUpToN,
    FailsPart2AndResonantBelowN,
    Undetermined,
}

impl PVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PVerdict::HoldsByPart2 => "holds-by-part-2",
            PVerdict::ResonanceFreeUpToN => "resonance-free-up-to-N",
            PVerdict::FailsPart2AndResonantBelowN => "fails-part-2-and-resonant-below-N",
            PVerdict::Undetermined => "undetermined",
        }
    }

    /// Verdicts under which the horizontal-average results apply at the checked scale.
    pub fn admits_limit(&self) -> bool {
        matches!(self, PVerdict::HoldsByPart2 | PVerdict::ResonanceFreeUpToN)
    }
}

impl std::fmt::Display for PVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Algebraic part of condition (P): F² rational, and one of a₃²/a₁², a₃²/a₂²
/// rational while the other has algebraic degree above four.
///
/// Returns `None` when an input is missing.
pub fn part2_holds(f2: Option<&AlgebraicInput>, mu1: Option<&AlgebraicInput>, mu2: Option<&AlgebraicInput>) -> Option<bool> {
    let (f2, mu1, mu2) = (f2?, mu1?, mu2?);
    let rational = |x: &AlgebraicInput| x.as_rational().is_some();
    Some(rational(f2) && ((rational(mu1) && mu2.degree() > 4) || (rational(mu2) && mu1.degree() > 4)))
}

/// The ratios (a₃²/a₁², a₃²/a₂²) from the exact carriers, when computable.
pub fn side_ratios(spec: &TorusSpec) -> (Option<AlgebraicInput>, Option<AlgebraicInput>) {
    let Some(ex) = &spec.exact else { return (None, None) };
    let ratio = |i: usize| -> Option<AlgebraicInput> {
        let a3 = ex.a_sq[2].as_ref()?;
        let ai = ex.a_sq[i].as_ref()?;
        a3.ratio(ai)
    };
    (ratio(0), ratio(1))
}

/// Checks condition (P): the algebraic clause exactly, non-resonance by float
/// enumeration up to `n_cert`.
pub fn check_condition_p(spec: &TorusSpec, n_cert: usize) -> Result<PVerdict> {
    if let Some(ex) = &spec.exact {
        for alg in ex.a_sq.iter().chain(std::iter::once(&ex.froude_sq)).flatten() {
            alg.validate()?;
        }
    }
    let (mu1, mu2) = side_ratios(spec);
    let f2 = spec.exact.as_ref().and_then(|e| e.froude_sq.clone());
    let part2 = part2_holds(f2.as_ref(), mu1.as_ref(), mu2.as_ref());
    if part2 == Some(true) {
        return Ok(PVerdict::HoldsByPart2);
    }
    let set = enumerate_resonances_float(spec, n_cert, TAU_RES)?;
    Ok(match (set.is_empty(), part2) {
        (true, _) => PVerdict::ResonanceFreeUpToN,
        (false, Some(false)) => PVerdict::FailsPart2AndResonantBelowN,
        (false, None) => PVerdict::Undetermined,
        (false, Some(true)) => unreachable!("handled above"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn expanded_coefficients_examples() {
        let c = resonance_poly_coeffs(&q(1, 1), &q(1, 1), 1, &q(1, 1));
        assert_eq!(c[8], q(-3, 1));
        assert_eq!(c[7], q(12, 1));
        let c = resonance_poly_coeffs(&q(1, 1), &q(1, 1), 0, &q(4, 1));
        assert_eq!(c[0], q(-3, 1));
    }

    #[test]
    fn fujiwara_examples() {
        assert_eq!(fujiwara_bound(&[2.0, -3.0, 1.0]).unwrap(), 6.0);
        assert_eq!(fujiwara_bound(&[0.0, 0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(fujiwara_bound(&[1.0, 0.0]), Err(Error::ZeroLeadingCoefficient)));
        assert!(fujiwara_bound_int(&IntPoly::from_i64(&[2, -3, 1])).unwrap() >= 6);
    }

    #[test]
    fn froude_one_is_resonance_free() {
        let spec = TorusSpec::unit_rational(1, 1);
        assert!(enumerate_resonances_float(&spec, 4, TAU_RES).unwrap().is_empty());
        assert!(enumerate_resonances_exact(&spec, 4).unwrap().is_empty());
    }

    #[test]
    fn horizontal_poly_at_zero_vertical_modes() {
        let p = horizontal_avg_resonance_poly(0, 0, &q(4, 1));
        assert_eq!(p, IntPoly::from_i64(&[0, 0, 0, 0, -3]));
        let p = horizontal_avg_resonance_poly(1, 2, &q(1, 2));
        assert!(p.0.len() == 5);
    }

    #[test]
    fn exact_matches_float_on_resonant_torus() {
        let spec = TorusSpec::unit_rational(16, 1);
        let f = enumerate_resonances_float(&spec, 3, TAU_RES).unwrap();
        let (e, stats) = enumerate_resonances_exact_with_stats(&spec, 3).unwrap();
        assert!(!f.is_empty());
        assert!(f.same_triples(&e), "float {} exact {}", f.len(), e.len());
        assert!(e.is_swap_symmetric());
        assert_eq!(stats.rejected, 0);
    }

    #[test]
    fn part2_logic() {
        let r = |n, d| AlgebraicInput::rational(n, d);
        let quintic: AlgebraicInput = "algebraic:x^5-x-1:[1.16,1.17]".parse().unwrap();
        let quad: AlgebraicInput = "algebraic:x^2-2:[1,2]".parse().unwrap();
        assert_eq!(part2_holds(Some(&r(1, 2)), Some(&r(2, 1)), Some(&quintic)), Some(true));
        assert_eq!(part2_holds(Some(&r(1, 2)), Some(&quintic), Some(&r(2, 1))), Some(true));
        assert_eq!(part2_holds(Some(&r(1, 2)), Some(&r(2, 1)), Some(&quad)), Some(false));
        assert_eq!(part2_holds(Some(&quad), Some(&r(2, 1)), Some(&quintic)), Some(false));
        assert_eq!(part2_holds(None, Some(&r(2, 1)), Some(&quintic)), None);
    }
}
