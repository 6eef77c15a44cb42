//! Correlation test on completely crossed 2×2 sub-designs.
//!
//! For inputs `k < k'` with levels `i, i'` and `j, j'`, let `rho_ab` be the
//! correlation of `A^k` and `A^k'` at the treatment setting the `a`-th level
//! of `k` and the `b`-th level of `k'`. Selective influences require
//! `|rho11 rho12 - rho21 rho22| <= s11 s12 + s21 s22` with
//! `s = sqrt(1 - rho^2)`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{inapplicable, Error, Result};
use crate::model::System;
use crate::pmf::JointPmf;
use crate::report::{Evidence, TestKind, TestReport, Verdict};

/// Default tolerance for the cosphericity inequality.
pub const EPS_COSPH: f64 = 1e-6;

/// Pearson correlation of a two-variable pmf with payloads `xs`, `ys`.
pub fn correlation(pmf: &JointPmf, xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (mut mx, mut my) = (0.0, 0.0);
    for (t, m) in pmf.iter() {
        mx += m * xs[t[0]];
        my += m * ys[t[1]];
    }
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    let (mut sx, mut sy) = (0.0, 0.0);
    for (t, m) in pmf.iter() {
        let (dx, dy) = (xs[t[0]] - mx, ys[t[1]] - my);
        vx += m * dx * dx;
        vy += m * dy * dy;
        cov += m * dx * dy;
        sx += m * xs[t[0]] * xs[t[0]];
        sy += m * ys[t[1]] * ys[t[1]];
    }
    if vx <= 1e-14 * (1.0 + sx) || vy <= 1e-14 * (1.0 + sy) {
        return Err(inapplicable("an output has zero variance"));
    }
    Ok((cov / libm::sqrt(vx * vy)).clamp(-1.0, 1.0))
}

/// Inputs `(k, k')` and their chosen levels `(i, i')`, `(j, j')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subdesign {
    pub k: usize,
    pub k2: usize,
    pub i: usize,
    pub i2: usize,
    pub j: usize,
    pub j2: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosphericityResult {
    pub subdesign: Subdesign,
    /// `[rho11, rho12, rho21, rho22]`.
    pub rho: [f64; 4],
    /// Treatments behind each correlation, same order as `rho`.
    pub treatments: [usize; 4],
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `lhs` and `rhs` are within the tolerance of each other.
    pub boundary: bool,
}

/// Sides of the inequality for four correlations.
pub fn cosphericity_sides(rho: [f64; 4]) -> (f64, f64) {
    let s = |r: f64| libm::sqrt((1.0 - r * r).max(0.0));
    let lhs = libm::fabs(rho[0] * rho[1] - rho[2] * rho[3]);
    let rhs = s(rho[0]) * s(rho[1]) + s(rho[2]) * s(rho[3]);
    (lhs, rhs)
}

/// Evaluates every eligible sub-design. Sub-designs with a zero-variance
/// output are skipped; if none remain the test is inapplicable.
pub fn run_cosphericity(system: &System, eps_test: f64) -> Result<Vec<CosphericityResult>> {
    let d = &system.design;
    let m = d.level_counts();
    let n = d.n();
    let payloads: Vec<Option<Vec<f64>>> = d.outputs.iter().map(|o| o.payloads()).collect();
    let mut results = Vec::new();
    let mut missing_payloads = false;
    let mut crossed = 0usize;
    for k in 0..n {
        for k2 in k + 1..n {
            for i in 0..m[k] {
                for i2 in i + 1..m[k] {
                    for j in 0..m[k2] {
                        'sub: for j2 in j + 1..m[k2] {
                            let mut treatments = [0usize; 4];
                            for (slot, (a, b)) in treatments.iter_mut().zip([(i, j), (i, j2), (i2, j), (i2, j2)]) {
                                match d.treatments_containing(&[(k, a), (k2, b)]).next() {
                                    Some(t) => *slot = t,
                                    None => continue 'sub,
                                }
                            }
                            crossed += 1;
                            let (Some(xs), Some(ys)) = (&payloads[k], &payloads[k2]) else {
                                missing_payloads = true;
                                continue;
                            };
                            let mut rho = [0.0; 4];
                            let mut defined = true;
                            for (r, &t) in rho.iter_mut().zip(&treatments) {
                                let pmf2 = system.pmf(t).marginalize(&[k, k2])?;
                                match correlation(&pmf2, xs, ys) {
                                    Ok(v) => *r = v,
                                    Err(Error::Inapplicable(_)) => {
                                        defined = false;
                                        break;
                                    }
                                    Err(e) => return Err(e),
                                }
                            }
                            if !defined {
                                continue;
                            }
                            let (lhs, rhs) = cosphericity_sides(rho);
                            results.push(CosphericityResult {
                                subdesign: Subdesign { k, k2, i, i2, j, j2 },
                                rho,
                                treatments,
                                lhs,
                                rhs,
                                pass: lhs <= rhs + eps_test,
                                boundary: libm::fabs(lhs - rhs) <= eps_test,
                            });
                        }
                    }
                }
            }
        }
    }
    if results.is_empty() {
        let why = if crossed == 0 {
            "no completely crossed 2x2 sub-design among the allowable treatments"
        } else if missing_payloads {
            "outputs of the crossed sub-designs lack numeric payloads"
        } else {
            "every crossed sub-design has an output with zero variance"
        };
        return Err(inapplicable(why));
    }
    Ok(results)
}

pub fn cosphericity_test(system: &System, eps_test: f64) -> Result<TestReport> {
    let results = match run_cosphericity(system, eps_test) {
        Ok(r) => r,
        Err(Error::Inapplicable(why)) => return Ok(TestReport::inapplicable(TestKind::Cosphericity, why)),
        Err(e) => return Err(e),
    };
    let worst = results
        .iter()
        .filter(|r| !r.pass)
        .fold(None::<&CosphericityResult>, |w, r| match w {
            Some(w) if w.lhs - w.rhs >= r.lhs - r.rhs => Some(w),
            _ => Some(r),
        });
    let boundary = results.iter().filter(|r| r.pass && r.boundary).count();
    let mut report = match worst {
        None => TestReport::new(
            TestKind::Cosphericity,
            Verdict::Consistent,
            format!("inequality holds on all {} sub-designs", results.len()),
            Evidence::None,
        ),
        Some(w) => {
            let s = w.subdesign;
            TestReport::new(
                TestKind::Cosphericity,
                Verdict::RuledOut,
                format!(
                    "sub-design {}/{} x {}/{}: {} > {}",
                    system.design.level_label(s.k, s.i),
                    system.design.inputs[s.k].levels[s.i2],
                    system.design.level_label(s.k2, s.j),
                    system.design.inputs[s.k2].levels[s.j2],
                    w.lhs,
                    w.rhs
                ),
                Evidence::None,
            )
        }
    };
    if boundary > 0 {
        report = report.with_note(format!("{} sub-design(s) pass within tolerance of the bound", boundary));
    }
    report.evidence = Evidence::Cosphericity(results);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn diagonal_pmf_is_perfectly_correlated() {
        let pmf = JointPmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((correlation(&pmf, &[0.0, 1.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_is_inapplicable() {
        let pmf = JointPmf::new(vec![2, 2], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(correlation(&pmf, &[0.0, 1.0], &[0.0, 1.0]), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn equal_correlations_always_pass() {
        for r in [-0.9, -0.3, 0.0, 0.4, 0.99] {
            let (lhs, rhs) = cosphericity_sides([r; 4]);
            assert_eq!(lhs, 0.0);
            assert!(rhs >= 0.0);
        }
    }
}
