//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals, half-lines and
//! small boxes.
//!
//! The error estimate follows QUADPACK's `qk15`. Intervals are bisected in
//! order of decreasing error estimate until the global estimate meets
//! `max(abs_tol, rel_tol * |I|)`.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and limits shared by every numerical integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Half-width of the integration window, in units of the integrand's
    /// standard-deviation scale.
    pub truncation_radius: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            truncation_radius: 12.0,
        }
    }
}

impl QuadratureConfig {
    /// A tighter configuration used where residuals are compared at 1e-10 or below.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
            truncation_radius: 14.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if !(self.truncation_radius > 0.0) {
            return Err(Error::Domain("truncation radius must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value of an integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    /// Magnitude of the last tail segment for half-line integrals; 0 otherwise.
    pub tail_bound: f64,
    pub subdivisions: usize,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// One 15-point Gauss-Kronrod panel: `(value, error estimate)`.
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let s = gk15(&mut f, a, b);
    (s.value, s.error)
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error }
}

/// Adaptive integral of `f` over `[a, b]`, with optional interior breakpoints.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    cfg.validate()?;
    if points.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1]));
        } else if w[1] < w[0] {
            return Err(Error::Domain("breakpoints must be nondecreasing".into()));
        }
    }
    let mut evaluations = 15 * heap.len();
    let mut subdivisions = 0usize;
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if error <= cfg.target(value) || heap.is_empty() {
            return Ok(finish(heap, evaluations, subdivisions));
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::NonConvergence {
                estimate: value,
                error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval at machine resolution; keep its estimate and stop refining it.
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&mut f, worst.a, mid));
        heap.push(gk15(&mut f, mid, worst.b));
        evaluations += 30;
        subdivisions += 1;
    }
}

fn finish(heap: BinaryHeap<Segment>, evaluations: usize, subdivisions: usize) -> Integral {
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum();
    let abs_error = segs.iter().map(|s| s.error).sum();
    Integral {
        value,
        abs_error,
        tail_bound: 0.0,
        subdivisions,
        evaluations,
    }
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral> {
    if b < a {
        return integrate(f, b, a, cfg).map(|i| Integral { value: -i.value, ..i });
    }
    integrate_with_breaks(f, &[a, b], cfg)
}

/// Integral over `[0, ∞)` for integrands whose mass sits near the origin on a unit scale.
pub fn integrate_halfline<F: FnMut(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<Integral> {
    integrate_halfline_around(f, 0.0, 1.0, cfg)
}

/// Integral over `[0, ∞)` for an integrand concentrated around `center` with
/// standard-deviation scale `scale`.
///
/// The window `center ± truncation_radius * scale` is integrated first; tail
/// segments of doubling length are appended until one contributes less than a
/// thousandth of the tolerance. The last tail segment is reported as `tail_bound`.
pub fn integrate_halfline_around<F: FnMut(f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    integrate_halfline_hinted(f, &[center], scale, cfg)
}

/// As [`integrate_halfline_around`] with several mass locations, each of which
/// becomes a breakpoint; the window spans all of them.
pub fn integrate_halfline_hinted<F: FnMut(f64) -> f64>(
    mut f: F,
    centers: &[f64],
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    cfg.validate()?;
    if !(scale > 0.0 && scale.is_finite()) || centers.is_empty() || centers.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("integration scale must be positive and finite".into()));
    }
    let width = cfg.truncation_radius * scale;
    let lo_c = centers.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let hi_c = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let mut points = vec![0.0, (lo_c - width).max(0.0)];
    points.extend(centers.iter().map(|c| c.max(0.0)));
    let hi = hi_c + width;
    points.push(hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut total = integrate_with_breaks(&mut f, &points, cfg)?;
    let mut start = hi;
    let mut len = width.max(scale);
    for _ in 0..64 {
        let seg = integrate_with_breaks(&mut f, &[start, start + len], cfg)?;
        total.value += seg.value;
        total.abs_error += seg.abs_error;
        total.evaluations += seg.evaluations;
        total.subdivisions += seg.subdivisions;
        total.tail_bound = seg.value.abs();
        if seg.value.abs() <= 1e-3 * cfg.target(total.value) {
            return Ok(total);
        }
        start += len;
        len *= 2.0;
    }
    Err(Error::NonConvergence {
        estimate: total.value,
        error: total.abs_error + total.tail_bound,
        subdivisions: total.subdivisions,
    })
}

/// Iterated adaptive integral of `f` over a box (tensor-product nesting, one
/// adaptive rule per axis). Intended for dimensions up to three.
pub fn integrate_box<F: Fn(&[f64]) -> f64>(f: F, bounds: &[(f64, f64)], cfg: &QuadratureConfig) -> Result<Integral> {
    let axes: Vec<Vec<f64>> = bounds.iter().map(|&(a, b)| vec![a, b]).collect();
    integrate_box_with_breaks(f, &axes, cfg)
}

/// As [`integrate_box`], with each axis given as a nondecreasing list of breakpoints.
pub fn integrate_box_with_breaks<F: Fn(&[f64]) -> f64>(
    f: F,
    axes: &[Vec<f64>],
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    cfg.validate()?;
    if axes.is_empty() {
        return Err(Error::Domain("box must have at least one axis".into()));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let point = vec![0.0; axes.len()];
    let out = nested(&f, axes, 0, &point, cfg, &failure);
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    out
}

fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    axes: &[Vec<f64>],
    axis: usize,
    point: &[f64],
    cfg: &QuadratureConfig,
    failure: &RefCell<Option<Error>>,
) -> Result<Integral> {
    let breaks = &axes[axis];
    if axis + 1 == axes.len() {
        let mut p = point.to_vec();
        return integrate_with_breaks(
            |x| {
                p[axis] = x;
                f(&p)
            },
            breaks,
            cfg,
        );
    }
    let mut p = point.to_vec();
    integrate_with_breaks(
        |x| {
            p[axis] = x;
            match nested(f, axes, axis + 1, &p, cfg, failure) {
                Ok(inner) => inner.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        breaks,
        cfg,
    )
}
