//! Norms, per-step records, run reports, convergence tables and resonance gap histograms.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpectralField4};
use crate::lattice::TorusSpec;
use crate::limit::Operators;
use crate::linear::{horizontal_average, omega as eigenfrequency, potential_vorticity};
use crate::resonance::TAU_RES;
use crate::solvers::ConvergenceRow;

/// Tolerances behind the report flags.
pub const DIVERGENCE_TOL: f64 = 1e-11;
pub const ENERGY_TOL: f64 = 1e-8;
pub const AVERAGE_DRIFT_TOL: f64 = 1e-8;

/// Cost guard for the gap histogram, which scans every pair of modes.
pub const GAP_HISTOGRAM_MAX_N: usize = 10;

/// One row of the per-step time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub energy: f64,
    pub grad_h_sq: f64,
    pub omega_norm: f64,
    pub osc_norm: f64,
    pub horizontal_average: f64,
    pub divergence_residual: f64,
}

pub const STEP_COLUMNS: &str = "t,energy,grad_h_sq,omega_h0s,osc_h0s,horizontal_average,divergence_residual";

/// Measures `u` at time `t`; the vertical regularity index of the H^{0,s} norms is `s`.
pub fn record_step(t: f64, u: &SpectralField4, s: f64, ops: &Operators) -> StepRecord {
    let omega = potential_vorticity(u, ops.spec.froude);
    StepRecord {
        t,
        energy: u.norm_sq(),
        grad_h_sq: u.grad_h_norm_sq(),
        omega_norm: omega.anisotropic_norm(0.0, s),
        osc_norm: ops.basis.osc_projection(u).anisotropic_norm(0.0, s),
        horizontal_average: horizontal_average(u).norm(0.0),
        divergence_residual: u.divergence_residual(),
    }
}

fn header<W: Write>(w: &mut W, schema: &str, columns: &str) -> Result<()> {
    writeln!(w, "# gsp-csv v1 {schema}")?;
    writeln!(w, "{columns}")?;
    Ok(())
}

fn row<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let line: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(w, "{}", line.join(","))?;
    Ok(())
}

pub fn write_series_csv<W: Write>(mut w: W, series: &[StepRecord]) -> Result<()> {
    header(&mut w, "timeseries", STEP_COLUMNS)?;
    for r in series {
        row(&mut w, &[r.t, r.energy, r.grad_h_sq, r.omega_norm, r.osc_norm, r.horizontal_average, r.divergence_residual])?;
    }
    Ok(())
}

/// Summary of a run, with every flag tied to a named invariant.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: Vec<(String, String)>,
    pub series: Vec<StepRecord>,
    pub max_divergence_residual: f64,
    /// max_t (‖U(t)‖² + 2c∫‖∇_hU‖²)/‖U₀‖² − 1, when a dissipation ledger was kept.
    pub energy_defect: Option<f64>,
    pub horizontal_average_drift: f64,
    pub final_energy: f64,
    pub final_omega_norm: f64,
    pub final_osc_norm: f64,
    pub flags: Vec<(String, bool)>,
}

impl RunReport {
    /// Builds the report; `ledger` holds, per record, the accumulated 2c∫‖∇_hU‖².
    pub fn summarize(config: Vec<(String, String)>, series: Vec<StepRecord>, ledger: Option<&[f64]>) -> Result<Self> {
        let first = *series.first().ok_or_else(|| Error::Precondition("empty time series".into()))?;
        let last = *series.last().expect("non-empty");
        let max_div = series.iter().map(|r| r.divergence_residual).fold(0.0, f64::max);
        let drift = series.iter().map(|r| (r.horizontal_average - first.horizontal_average).abs()).fold(0.0, f64::max);
        let energy_defect = ledger.map(|d| {
            series.iter().zip(d).map(|(r, d)| (r.energy + d) / first.energy.max(f64::MIN_POSITIVE) - 1.0).fold(f64::NEG_INFINITY, f64::max)
        });
        let mut flags = vec![
            ("divergence_free".to_string(), max_div <= DIVERGENCE_TOL),
            ("horizontal_average_conserved".to_string(), drift <= AVERAGE_DRIFT_TOL),
            ("finite".to_string(), series.iter().all(|r| r.energy.is_finite())),
        ];
        if let Some(e) = energy_defect {
            flags.push(("energy_inequality".to_string(), e <= ENERGY_TOL));
        }
        Ok(RunReport {
            config,
            series,
            max_divergence_residual: max_div,
            energy_defect,
            horizontal_average_drift: drift,
            final_energy: last.energy,
            final_omega_norm: last.omega_norm,
            final_osc_norm: last.osc_norm,
            flags,
        })
    }

    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|f| f.1)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("config:\n");
        for (k, v) in &self.config {
            s += &format!("  {k} = {v}\n");
        }
        s += &format!("max divergence residual: {:.3e}\n", self.max_divergence_residual);
        if let Some(e) = self.energy_defect {
            s += &format!("energy defect: {e:.3e}\n");
        }
        s += &format!("horizontal average drift: {:.3e}\n", self.horizontal_average_drift);
        s += &format!(
            "final energy {:.6e}, |Omega|_H0s {:.6e}, |U_osc|_H0s {:.6e}\n",
            self.final_energy, self.final_omega_norm, self.final_osc_norm
        );
        for (name, ok) in &self.flags {
            s += &format!("{name}: {}\n", if *ok { "pass" } else { "FAIL" });
        }
        s
    }
}

/// Outcome of [`regularity_transfer_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Sup over the lattice of the per-mode symbol quotient.
    pub bound: f64,
}

/// Per-mode quotient |v̂_QG|·|ň_h|^σ|ň₃|^{1−σ} / |Ω̂| = |ň_h|^{1+σ}|ň₃|^{1−σ}/|ň|_F², with 0⁰ = 1.
pub fn transfer_symbol(k: [f64; 3], froude: f64, sigma: f64) -> f64 {
    let h = k[0].hypot(k[1]);
    let v = k[2].abs();
    let nf2 = h * h + froude * froude * v * v;
    if nf2 == 0.0 {
        return 0.0;
    }
    h.powf(1.0 + sigma) * pow0(v, 1.0 - sigma) / nf2
}

fn pow0(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

/// Compares ‖Λ_h^{s+σ}Λ_v^{s'+1−σ}v_QG‖ with ‖Λ_h^sΛ_v^{s'}Ω‖, v_QG = (∇_h^⊥Δ_F⁻¹Ω, 0).
pub fn regularity_transfer_check(omega: &ScalarField, sigma: f64, s: f64, s_prime: f64, froude: f64) -> Result<RegularityReport> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Precondition(format!("sigma={sigma} outside [0, 1]")));
    }
    let lat = &omega.lattice;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut bound: f64 = 0.0;
    for (i, c) in omega.coeffs.iter().enumerate() {
        let k = lat.checked(i);
        let h = k[0].hypot(k[1]);
        let v = k[2].abs();
        let base = pow0(h, s) * pow0(v, s_prime);
        let w = base * c.norm();
        let q = transfer_symbol(k, froude, sigma);
        bound = bound.max(q);
        rhs += w * w;
        lhs += (q * w).powi(2);
    }
    if rhs == 0.0 {
        return Err(Error::Precondition("regularity transfer needs a nonzero potential vorticity".into()));
    }
    let (lhs, rhs) = (lhs.sqrt(), rhs.sqrt());
    Ok(RegularityReport { lhs, rhs, ratio: lhs / rhs, bound })
}

/// Convergence table sorted by ε descending, with the monotone-decrease flag.
#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub sigma: f64,
    pub rows: Vec<ConvergenceRow>,
    pub monotone: bool,
}

impl ConvergenceTable {
    pub fn new(mut rows: Vec<ConvergenceRow>, sigma: f64) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Precondition("a convergence table needs at least two eps values".into()));
        }
        rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let monotone = rows.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap);
        Ok(ConvergenceTable { sigma, rows, monotone })
    }

    /// g(ε_b)/g(ε_a) for two tabulated ε values.
    pub fn gap_ratio(&self, eps_a: f64, eps_b: f64) -> Option<f64> {
        let find = |e: f64| self.rows.iter().find(|r| (r.eps - e).abs() <= 1e-12 * e).map(|r| r.sup_gap);
        Some(find(eps_b)? / find(eps_a)?)
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{:>10} {:>14} {:>14}\n", "eps", "sup gap", "grad gap");
        for r in &self.rows {
            s += &format!("{:>10.3e} {:>14.6e} {:>14.6e}\n", r.eps, r.sup_gap, r.grad_gap);
        }
        s += &format!("monotone decrease: {}\n", if self.monotone { "yes" } else { "no" });
        s
    }
}

/// Writes the table as CSV and returns it; the caller reads `monotone`.
pub fn emit_convergence_table<W: Write>(mut w: W, rows: Vec<ConvergenceRow>, sigma: f64) -> Result<ConvergenceTable> {
    let table = ConvergenceTable::new(rows, sigma)?;
    header(&mut w, &format!("convergence sigma={sigma} monotone={}", table.monotone), "eps,sup_gap,grad_gap,dt")?;
    for r in &table.rows {
        row(&mut w, &[r.eps, r.sup_gap, r.grad_gap, r.dt_used])?;
    }
    Ok(table)
}

/// Distribution of |ω^a(k)+ω^b(m)−ω^c(n)| over every oscillating sign triple with k+m=n.
#[derive(Clone, Debug, PartialEq)]
pub struct GapHistogram {
    /// Non-resonant gaps binned by ⌊log₁₀ gap⌋.
    pub bins: BTreeMap<i32, u64>,
    /// Triples with gap below the resonance tolerance.
    pub resonant: u64,
    pub total: u64,
    pub min_nonzero_gap: f64,
    pub max_gap: f64,
}

pub fn resonance_gap_histogram(spec: &TorusSpec, n_max: usize) -> Result<GapHistogram> {
    if n_max > GAP_HISTOGRAM_MAX_N {
        return Err(Error::CostGuard(format!("gap histogram limited to N <= {GAP_HISTOGRAM_MAX_N}, got {n_max}")));
    }
    let lat = crate::lattice::FreqLattice::new(spec, n_max);
    let nm = n_max as i32;
    let zero = lat.zero_index();
    let freq: Vec<f64> = (0..lat.len()).map(|i| eigenfrequency(lat.checked(i), spec.froude)).collect();
    let mut h = GapHistogram { bins: BTreeMap::new(), resonant: 0, total: 0, min_nonzero_gap: f64::INFINITY, max_gap: 0.0 };
    for ki in (0..lat.len()).filter(|&i| i != zero) {
        let k = lat.mode(ki);
        for mi in (0..lat.len()).filter(|&i| i != zero) {
            let m = lat.mode(mi);
            let n = [k[0] + m[0], k[1] + m[1], k[2] + m[2]];
            if n.iter().any(|c| c.abs() > nm) || n == [0, 0, 0] {
                continue;
            }
            let ni = lat.index(n).expect("inside cube");
            for sa in [1.0, -1.0] {
                for sb in [1.0, -1.0] {
                    for sc in [1.0, -1.0] {
                        let gap = (sa * freq[ki] + sb * freq[mi] - sc * freq[ni]).abs();
                        h.total += 1;
                        h.max_gap = h.max_gap.max(gap);
                        if gap < TAU_RES {
                            h.resonant += 1;
                        } else {
                            h.min_nonzero_gap = h.min_nonzero_gap.min(gap);
                            *h.bins.entry(gap.log10().floor() as i32).or_insert(0) += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(h)
}

pub fn write_histogram_csv<W: Write>(mut w: W, hist: &GapHistogram) -> Result<()> {
    header(
        &mut w,
        &format!("gap-histogram total={} resonant={} min_nonzero_gap={:.16e}", hist.total, hist.resonant, hist.min_nonzero_gap),
        "log10_gap_floor,count",
    )?;
    for (k, c) in &hist.bins {
        writeln!(w, "{k},{c}")?;
    }
    Ok(())
}

/// Relative distance between a field and a reference.
pub fn relative_gap(a: &SpectralField4, b: &SpectralField4) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_closed_form() {
        assert!((transfer_symbol([1.0, 0.0, 1.0], 2.0, 0.0) - 0.2).abs() < 1e-15);
        assert!((transfer_symbol([1.0, 0.0, 1.0], 2.0, 1.0) - 0.2).abs() < 1e-15);
        assert_eq!(transfer_symbol([0.0, 0.0, 0.0], 2.0, 0.5), 0.0);
        // σ = 1 on a horizontal mode: |ň_h|²/|ň_h|² = 1
        assert!((transfer_symbol([3.0, 4.0, 0.0], 2.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_needs_two_rows() {
        let r = ConvergenceRow { eps: 0.1, sup_gap: 1.0, grad_gap: 1.0, dt_used: 1e-3 };
        assert!(ConvergenceTable::new(vec![r.clone()], 1.0).is_err());
        let mut r2 = r.clone();
        r2.eps = 0.01;
        r2.sup_gap = 0.5;
        let t = ConvergenceTable::new(vec![r2, r], 1.0).unwrap();
        assert_eq!(t.rows[0].eps, 0.1);
        assert!(t.monotone);
        assert_eq!(t.gap_ratio(0.1, 0.01), Some(0.5));
    }
}
