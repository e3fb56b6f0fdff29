//! Exact rational and algebraic carriers for torus parameters.
//!
//! Algebraic numbers are given by an integer minimal polynomial plus a
//! rational isolating interval. Irreducibility is certified by Kronecker's
//! method and root isolation by Sturm sequences, both in exact arithmetic.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Integer polynomial, coefficients ordered from the constant term upward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly(pub Vec<BigInt>);

impl IntPoly {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntPoly(coeffs);
        p.trim();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    fn trim(&mut self) {
        while self.0.len() > 1 && self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(BigInt::zero());
        }
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_zero()
    }

    pub fn leading(&self) -> &BigInt {
        self.0.last().expect("non-empty")
    }

    pub fn content(&self) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Divides out the content and makes the leading coefficient positive.
    pub fn primitive(&self) -> IntPoly {
        let g = self.content();
        if g.is_zero() {
            return self.clone();
        }
        let sign = if self.leading().is_negative() { -BigInt::one() } else { BigInt::one() };
        IntPoly::new(self.0.iter().map(|c| c / &g * &sign).collect())
    }

    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        self.0.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + BigRational::from_integer(c.clone()))
    }

    pub fn to_rational(&self) -> RatPoly {
        RatPoly::new(self.0.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    /// Coefficients of x^d p(1/x).
    pub fn reversed(&self) -> IntPoly {
        let mut c = self.0.clone();
        c.reverse();
        IntPoly::new(c)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() && !(self.is_zero() && i == 0) {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { "-" } else { "+" })?;
            }
            first = false;
            let show_coeff = i == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for IntPoly {
    type Err = Error;

    /// Parses sums of terms such as `x^5-x-1`, `3x^2+2`, `-2*x+7`.
    fn from_str(s: &str) -> Result<Self> {
        let src: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if src.is_empty() {
            return Err(Error::MalformedAlgebraic("empty polynomial".into()));
        }
        let bad = || Error::MalformedAlgebraic(format!("cannot parse polynomial '{s}'"));
        let mut terms = Vec::new();
        let mut start = 0;
        let bytes = src.as_bytes();
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'^' {
                terms.push(&src[start..i]);
                start = i;
            }
        }
        terms.push(&src[start..]);

        let mut coeffs: Vec<BigInt> = Vec::new();
        for term in terms {
            let (sign, body) = match term.as_bytes().first() {
                Some(b'-') => (-1, &term[1..]),
                Some(b'+') => (1, &term[1..]),
                _ => (1, term),
            };
            if body.is_empty() {
                return Err(bad());
            }
            let (coeff, power) = match body.find('x') {
                None => (body.parse::<BigInt>().map_err(|_| bad())?, 0usize),
                Some(pos) => {
                    let c = body[..pos].trim_end_matches('*');
                    let c = if c.is_empty() { BigInt::one() } else { c.parse::<BigInt>().map_err(|_| bad())? };
                    let rest = &body[pos + 1..];
                    let p = if rest.is_empty() {
                        1
                    } else if let Some(e) = rest.strip_prefix('^') {
                        e.parse::<usize>().map_err(|_| bad())?
                    } else {
                        return Err(bad());
                    };
                    (c, p)
                }
            };
            if coeffs.len() <= power {
                coeffs.resize(power + 1, BigInt::zero());
            }
            coeffs[power] += coeff * sign;
        }
        Ok(IntPoly::new(coeffs))
    }
}

/// Rational polynomial, constant term first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly(pub Vec<BigRational>);

impl RatPoly {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        let mut c = coeffs;
        while c.len() > 1 && c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        if c.is_empty() {
            c.push(BigRational::zero());
        }
        RatPoly(c)
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_zero()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> RatPoly {
        if self.0.len() <= 1 {
            return RatPoly::new(vec![BigRational::zero()]);
        }
        RatPoly::new(self.0.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect())
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.0.clone();
        let dd = d.degree();
        let lead = d.0[dd].clone();
        if self.degree() < dd || self.is_zero() {
            return (RatPoly::new(vec![BigRational::zero()]), self.clone());
        }
        let mut quot = vec![BigRational::zero(); self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd.max(1));
        (RatPoly::new(quot), RatPoly::new(rem))
    }

    /// Integer polynomial with the same roots (denominators cleared, primitive).
    pub fn to_integer(&self) -> IntPoly {
        let lcm = self.0.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        IntPoly::new(self.0.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect()).primitive()
    }
}

fn sign_of(x: &BigRational) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Sturm chain of a square-free-agnostic polynomial.
pub struct SturmChain(Vec<RatPoly>);

impl SturmChain {
    pub fn new(p: &RatPoly) -> Self {
        let mut chain = vec![p.clone(), p.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(RatPoly::new(r.0.into_iter().map(|c| -c).collect()));
        }
        SturmChain(chain)
    }

    fn variations(&self, x: &BigRational) -> usize {
        let mut last = 0;
        let mut v = 0;
        for p in &self.0 {
            let s = sign_of(&p.eval(x));
            if s != 0 {
                if last != 0 && s != last {
                    v += 1;
                }
                last = s;
            }
        }
        v
    }

    /// Number of distinct real roots in the half-open interval (lo, hi].
    pub fn count_roots(&self, lo: &BigRational, hi: &BigRational) -> usize {
        self.variations(lo).saturating_sub(self.variations(hi))
    }
}

fn divisors(v: &BigInt, cap: usize) -> Option<Vec<BigInt>> {
    let n = v.abs().to_u64()?;
    if n == 0 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d != n / d {
                out.push(BigInt::from(n / d));
            }
            if out.len() > cap {
                return None;
            }
        }
        d += 1;
    }
    let mut signed: Vec<BigInt> = out.iter().flat_map(|d| [d.clone(), -d.clone()]).collect();
    signed.sort();
    Some(signed)
}

fn interpolate(xs: &[BigInt], ys: &[BigInt]) -> RatPoly {
    let mut acc = vec![BigRational::zero(); xs.len()];
    for i in 0..xs.len() {
        // basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut basis = vec![BigRational::one()];
        let mut denom = BigRational::one();
        for j in 0..xs.len() {
            if i == j {
                continue;
            }
            let xj = BigRational::from_integer(xs[j].clone());
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (k, b) in basis.iter().enumerate() {
                next[k + 1] += b;
                next[k] -= b * &xj;
            }
            basis = next;
            denom *= BigRational::from_integer(&xs[i] - &xs[j]);
        }
        let scale = BigRational::from_integer(ys[i].clone()) / denom;
        for (k, b) in basis.iter().enumerate() {
            acc[k] += b * &scale;
        }
    }
    RatPoly::new(acc)
}

/// Certifies irreducibility over the rationals by Kronecker's method.
///
/// Returns `Ok(true)` for irreducible, `Ok(false)` for reducible, and an error
/// when the search space exceeds the built-in cost guard.
pub fn is_irreducible(p: &IntPoly) -> Result<bool> {
    let p = p.primitive();
    let deg = p.degree();
    if deg == 0 {
        return Ok(false);
    }
    if deg == 1 {
        return Ok(true);
    }
    if deg > 12 {
        return Err(Error::CostGuard(format!("irreducibility test limited to degree 12, got {deg}")));
    }
    let prat = p.to_rational();
    // sample points with few divisors first
    let mut samples: Vec<(BigInt, BigInt)> = Vec::new();
    for x in -12i64..=12 {
        let xb = BigInt::from(x);
        let v = p.eval_int(&xb);
        if v.is_zero() {
            return Ok(false);
        }
        samples.push((xb, v));
    }
    samples.sort_by_key(|(x, v)| (v.abs(), x.abs()));

    const COMBO_CAP: u128 = 2_000_000;
    for d in 1..=deg / 2 {
        let pts = &samples[..d + 1];
        let xs: Vec<BigInt> = pts.iter().map(|(x, _)| x.clone()).collect();
        let mut divs = Vec::with_capacity(d + 1);
        for (_, v) in pts {
            divs.push(divisors(v, 4096).ok_or_else(|| Error::CostGuard("sample value too large for divisor enumeration".into()))?);
        }
        let total: u128 = divs.iter().map(|v| v.len() as u128).product();
        if total > COMBO_CAP {
            return Err(Error::CostGuard(format!("Kronecker search needs {total} candidates")));
        }
        let mut idx = vec![0usize; d + 1];
        loop {
            let ys: Vec<BigInt> = idx.iter().zip(&divs).map(|(&i, dv)| dv[i].clone()).collect();
            let g = interpolate(&xs, &ys);
            if g.degree() == d && g.0.iter().all(|c| c.is_integer()) {
                let (_, r) = prat.div_rem(&g);
                if r.is_zero() {
                    return Ok(false);
                }
            }
            let mut k = 0;
            loop {
                if k > d {
                    break;
                }
                idx[k] += 1;
                if idx[k] < divs[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k > d {
                break;
            }
        }
    }
    Ok(true)
}

/// A real number carried exactly: a rational, or an algebraic number given by
/// its minimal polynomial together with an isolating interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlgebraicInput {
    Rational(BigRational),
    Algebraic { min_poly: IntPoly, lo: BigRational, hi: BigRational },
}

/// Parses a decimal or fraction literal (`0.25`, `-3/4`, `2`, `1e-3`) exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::MalformedAlgebraic(format!("cannot parse rational '{s}'"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(num);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

impl FromStr for AlgebraicInput {
    type Err = Error;

    /// Accepts `rational:1/2`, `rational:0.5`, or `algebraic:x^5-x-1:[1.16,1.17]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_matches('"');
        if let Some(r) = s.strip_prefix("rational:") {
            return Ok(AlgebraicInput::Rational(parse_rational(r)?));
        }
        if let Some(rest) = s.strip_prefix("algebraic:") {
            let (poly, interval) = rest.rsplit_once(':').ok_or_else(|| Error::MalformedAlgebraic(format!("missing interval in '{s}'")))?;
            let interval = interval.trim();
            let inner = interval
                .strip_prefix('[')
                .and_then(|x| x.strip_suffix(']'))
                .ok_or_else(|| Error::MalformedAlgebraic(format!("interval must be [lo,hi] in '{s}'")))?;
            let (lo, hi) = inner.split_once(',').ok_or_else(|| Error::MalformedAlgebraic(format!("interval must be [lo,hi] in '{s}'")))?;
            let a = AlgebraicInput::Algebraic { min_poly: poly.parse()?, lo: parse_rational(lo)?, hi: parse_rational(hi)? };
            a.validate()?;
            return Ok(a);
        }
        // bare literal: treat as rational
        Ok(AlgebraicInput::Rational(parse_rational(s)?))
    }
}

impl fmt::Display for AlgebraicInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraicInput::Rational(r) => write!(f, "rational:{r}"),
            AlgebraicInput::Algebraic { min_poly, lo, hi } => write!(f, "algebraic:{min_poly}:[{lo},{hi}]"),
        }
    }
}

impl AlgebraicInput {
    pub fn rational(num: i64, den: i64) -> Self {
        AlgebraicInput::Rational(BigRational::new(num.into(), den.into()))
    }

    /// Checks irreducibility and that the interval isolates exactly one root.
    pub fn validate(&self) -> Result<()> {
        let AlgebraicInput::Algebraic { min_poly, lo, hi } = self else {
            return Ok(());
        };
        if min_poly.degree() == 0 {
            return Err(Error::MalformedAlgebraic("constant minimal polynomial".into()));
        }
        if lo > hi {
            return Err(Error::MalformedAlgebraic(format!("empty interval [{lo},{hi}]")));
        }
        if !is_irreducible(min_poly)? {
            return Err(Error::MalformedAlgebraic(format!("{min_poly} is reducible over Q")));
        }
        let roots = root_count_closed(min_poly, lo, hi);
        if roots != 1 {
            return Err(Error::MalformedAlgebraic(format!(
                "interval [{lo},{hi}] contains {roots} roots of {min_poly}, expected exactly one"
            )));
        }
        Ok(())
    }

    /// Algebraic degree over Q.
    pub fn degree(&self) -> usize {
        match self {
            AlgebraicInput::Rational(_) => 1,
            AlgebraicInput::Algebraic { min_poly, .. } => min_poly.degree(),
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            AlgebraicInput::Rational(r) => Some(r.clone()),
            AlgebraicInput::Algebraic { min_poly, .. } if min_poly.degree() == 1 => {
                Some(BigRational::new(-min_poly.0[0].clone(), min_poly.0[1].clone()))
            }
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            AlgebraicInput::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            AlgebraicInput::Algebraic { min_poly, lo, hi } => {
                let (lo, hi) = refine(min_poly, lo, hi, 80);
                ((lo + hi) / BigRational::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
            }
        }
    }

    /// The number r * self for a nonzero rational r.
    pub fn scale(&self, r: &BigRational) -> AlgebraicInput {
        match self {
            AlgebraicInput::Rational(x) => AlgebraicInput::Rational(x * r),
            AlgebraicInput::Algebraic { min_poly, lo, hi } => {
                let d = min_poly.degree();
                let coeffs: Vec<BigRational> = min_poly
                    .0
                    .iter()
                    .enumerate()
                    .map(|(i, c)| BigRational::from_integer(c.clone()) * num_traits::pow(r.clone(), d - i))
                    .collect();
                let (a, b) = if r.is_positive() { (lo * r, hi * r) } else { (hi * r, lo * r) };
                AlgebraicInput::Algebraic { min_poly: RatPoly::new(coeffs).to_integer(), lo: a, hi: b }
            }
        }
    }

    /// The number 1 / self; self must be nonzero.
    pub fn inverse(&self) -> AlgebraicInput {
        match self {
            AlgebraicInput::Rational(x) => AlgebraicInput::Rational(x.recip()),
            AlgebraicInput::Algebraic { min_poly, lo, hi } => {
                let (mut lo, mut hi) = (lo.clone(), hi.clone());
                while !(lo.is_positive() || hi.is_negative()) {
                    let (a, b) = refine(min_poly, &lo, &hi, 1);
                    lo = a;
                    hi = b;
                }
                AlgebraicInput::Algebraic { min_poly: min_poly.reversed().primitive(), lo: hi.recip(), hi: lo.recip() }
            }
        }
    }

    /// Quotient self / other, available when at least one side is rational.
    pub fn ratio(&self, other: &AlgebraicInput) -> Option<AlgebraicInput> {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => Some(AlgebraicInput::Rational(a / b)),
            (None, Some(b)) => Some(self.scale(&b.recip())),
            (Some(a), None) => Some(other.inverse().scale(&a)),
            (None, None) => None,
        }
    }
}

fn root_count_closed(p: &IntPoly, lo: &BigRational, hi: &BigRational) -> usize {
    let chain = SturmChain::new(&p.to_rational());
    let at_lo = usize::from(p.eval(lo).is_zero());
    chain.count_roots(lo, hi) + at_lo
}

/// Bisects an isolating interval `iters` times, keeping exactly one root inside.
fn refine(p: &IntPoly, lo: &BigRational, hi: &BigRational, iters: usize) -> (BigRational, BigRational) {
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    let chain = SturmChain::new(&p.to_rational());
    let two = BigRational::from_integer(2.into());
    for _ in 0..iters {
        if p.eval(&lo).is_zero() {
            return (lo.clone(), lo);
        }
        let mid = (&lo + &hi) / &two;
        if chain.count_roots(&lo, &mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}
