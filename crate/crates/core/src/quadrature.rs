//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! Panels live in a priority queue keyed by their error estimate; the worst
//! panel is bisected until the summed error meets the tolerance. Initial
//! panels honour caller breakpoints and an optional maximum width, which is
//! how oscillatory integrands get a minimum number of nodes per period.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values an integrand may return.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Default
{
    fn magnitude(self) -> f64;
    fn real(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn real(self) -> f64 {
        self
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn real(self) -> f64 {
        self.re
    }
}

// Kronrod abscissae (positive half, descending) and weights; Gauss weights
// on the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Initial panels are split until no wider than this.
    pub max_panel_width: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
            max_panel_width: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    frozen: bool,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod panel with a QUADPACK-style error estimate.
fn gk21<T: Scalar>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> Panel<T> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[10];
    let mut g = T::default();
    let mut vals = [(T::default(), T::default()); 10];
    for n in 0..10 {
        let dx = h * XGK[n];
        let (f1, f2) = (f(c - dx), f(c + dx));
        vals[n] = (f1, f2);
        k = k + (f1 + f2) * WGK[n];
        if n % 2 == 1 {
            g = g + (f1 + f2) * WG[n / 2];
        }
    }
    let mean = k * 0.5;
    let mut resasc = WGK[10] * (fc - mean).magnitude();
    let mut resabs = WGK[10] * fc.magnitude();
    for n in 0..10 {
        let (f1, f2) = vals[n];
        resasc += WGK[n] * ((f1 - mean).magnitude() + (f2 - mean).magnitude());
        resabs += WGK[n] * (f1.magnitude() + f2.magnitude());
    }
    let habs = h.abs();
    resasc *= habs;
    resabs *= habs;
    let mut err = ((k - g) * h).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    let frozen =
        err <= floor || habs <= 64.0 * f64::EPSILON * c.abs().max(f64::MIN_POSITIVE.sqrt());
    Panel {
        a,
        b,
        value: k * h,
        error: err.max(floor),
        frozen,
    }
}

/// Neumaier-compensated sum of panel values.
fn compensated_sum<T: Scalar>(items: impl Iterator<Item = T>) -> T {
    let mut sum = T::default();
    let mut comp = T::default();
    for x in items {
        let t = sum + x;
        let big = if sum.magnitude() >= x.magnitude() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        comp = comp + big;
        sum = t;
    }
    sum + comp
}

/// Split `[a, b]` at the interior breakpoints and then to `max_width`.
pub fn initial_partition(a: f64, b: f64, points: &[f64], max_width: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = points
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 4.0 * f64::EPSILON * x.abs().max(y.abs()));
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let n = if max_width.is_finite() && max_width > 0.0 {
            (((hi - lo) / max_width).ceil() as usize).max(1)
        } else {
            1
        };
        for m in 0..n {
            let x0 = lo + (hi - lo) * m as f64 / n as f64;
            let x1 = if m + 1 == n {
                hi
            } else {
                lo + (hi - lo) * (m + 1) as f64 / n as f64
            };
            out.push((x0, x1));
        }
    }
    out
}

/// Integrate `f` over `[a, b]` (a < b, both finite).
pub fn integrate<T: Scalar>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    points: &[f64],
    opts: &AdaptiveOptions,
) -> Result<Estimate<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(
            "integration limits must be finite".into(),
        ));
    }
    if a == b {
        return Ok(Estimate {
            value: T::default(),
            error: 0.0,
            evaluations: 0,
        });
    }
    if a > b {
        let est = integrate(f, b, a, points, opts)?;
        return Ok(Estimate {
            value: est.value * -1.0,
            ..est
        });
    }
    let mut heap: BinaryHeap<Panel<T>> = BinaryHeap::new();
    let mut done: Vec<Panel<T>> = Vec::new();
    let mut evals = 0usize;
    for (x0, x1) in initial_partition(a, b, points, opts.max_panel_width) {
        let p = gk21(&mut f, x0, x1);
        evals += 21;
        if p.frozen {
            done.push(p);
        } else {
            heap.push(p);
        }
    }
    let mut splits = 0usize;
    loop {
        let value = compensated_sum(heap.iter().chain(done.iter()).map(|p| p.value));
        let error: f64 = heap.iter().chain(done.iter()).map(|p| p.error).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * value.magnitude());
        if error <= tol || heap.is_empty() {
            return Ok(Estimate {
                value,
                error,
                evaluations: evals,
            });
        }
        if splits >= opts.max_subdivisions {
            return Err(Error::Convergence {
                estimate: value.real(),
                error,
            });
        }
        // Bisect a batch of the worst panels before re-summing.
        let batch = (heap.len() / 4).clamp(1, 32);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            let m = 0.5 * (worst.a + worst.b);
            for (x0, x1) in [(worst.a, m), (m, worst.b)] {
                let p = gk21(&mut f, x0, x1);
                evals += 21;
                if p.frozen {
                    done.push(p);
                } else {
                    heap.push(p);
                }
            }
            splits += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let est = integrate(
            |x: f64| x.powi(7) - 3.0 * x * x,
            -1.0,
            2.0,
            &[],
            &AdaptiveOptions::default(),
        )
        .unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((est.value - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        let opts = AdaptiveOptions {
            max_panel_width: 0.5,
            ..Default::default()
        };
        let om = 30.0;
        let est = integrate(
            |x: f64| Complex64::new(0.0, -om * x).exp(),
            0.0,
            10.0,
            &[],
            &opts,
        )
        .unwrap();
        let exact = (Complex64::new(0.0, -om * 10.0).exp() - 1.0) / Complex64::new(0.0, -om);
        assert!((est.value - exact).norm() < 1e-12);
    }

    #[test]
    fn lorentzian_peak_with_breakpoint() {
        let e = 1e-4;
        let opts = AdaptiveOptions::default();
        let est = integrate(|x: f64| e / (x * x + e * e), -1.0, 1.0, &[0.0], &opts).unwrap();
        let exact = 2.0 * (1.0 / e).atan();
        assert!((est.value - exact).abs() < 1e-9, "{}", est.value - exact);
    }

    #[test]
    fn reversed_limits() {
        let est = integrate(|x: f64| x, 1.0, 0.0, &[], &AdaptiveOptions::default()).unwrap();
        assert!((est.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn reports_nonconvergence() {
        let opts = AdaptiveOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_subdivisions: 3,
            ..Default::default()
        };
        let r = integrate(
            |x: f64| x.powf(-0.9) * (50.0 * x).cos(),
            0.0,
            1.0,
            &[],
            &opts,
        );
        assert!(matches!(r, Err(Error::Convergence { .. })));
    }

    #[test]
    fn partition_respects_width() {
        let parts = initial_partition(0.0, 10.0, &[2.5, 2.5, 11.0], 1.0);
        assert!(parts.iter().all(|(a, b)| b - a <= 1.0 + 1e-12));
        assert!(parts.iter().any(|(_, b)| *b == 2.5));
        assert_eq!(parts.first().unwrap().0, 0.0);
        assert_eq!(parts.last().unwrap().1, 10.0);
    }
}
