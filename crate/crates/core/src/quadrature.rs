//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the 7-point rule, attached to XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub subintervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&node, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * node;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]` to the absolute tolerance `abs_tol`.
///
/// Panels with the largest error estimate are bisected until the summed
/// estimate drops below the tolerance or `max_panels` is reached, in which
/// case a [`Error::Numeric`] carrying the last estimate is returned.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Domain(format!(
            "quadrature interval [{lo}, {hi}] must be finite and ordered"
        )));
    }
    if hi == lo {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            subintervals: 0,
        });
    }
    let mut panels = vec![gk15(&f, lo, hi)];
    let mut evaluations = 15;
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let value: f64 = panels.iter().map(|p| p.value).sum();
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "quadrature on [{lo}, {hi}] produced a non-finite value after {evaluations} evaluations"
            )));
        }
        if total_err <= abs_tol {
            return Ok(Quadrature {
                value,
                error_estimate: total_err,
                evaluations,
                subintervals: panels.len(),
            });
        }
        if panels.len() >= max_panels {
            return Err(Error::Numeric(format!(
                "quadrature on [{lo}, {hi}] did not converge: estimate {value:e}, \
                 error {total_err:e} > tol {abs_tol:e} with {} panels, {evaluations} evaluations",
                panels.len()
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            return Err(Error::Numeric(format!(
                "quadrature panel [{}, {}] cannot be split further (error {:e})",
                p.lo, p.hi, p.error
            )));
        }
        panels.push(gk15(&f, p.lo, mid));
        panels.push(gk15(&f, mid, p.hi));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-13, 10).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((q.value - exact).abs() < 1e-12);
        assert_eq!(q.subintervals, 1);
    }

    #[test]
    fn adapts_to_endpoint_singularity() {
        let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-11, 500).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-10);
        assert!(q.subintervals > 1);
    }

    #[test]
    fn reports_failure_with_diagnostics() {
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-9, 1.0, 1e-14, 4).unwrap_err();
        assert!(matches!(err, Error::Numeric(ref m) if m.contains("did not converge")));
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-8, 10).is_err());
    }
}
