//! Globally adaptive 15-point Gauss–Kronrod quadrature for smooth, possibly
//! oscillatory, complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
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
// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 2_000_000;
/// Error floor relative to `∫|f|`, below which round-off dominates.
const L1_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    l1: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
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
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut l1 = fc.norm() * WGK[7];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let (lo, hi) = (f(center - dx), f(center + dx));
        let pair = lo + hi;
        kronrod += pair * w;
        l1 += (lo.norm() + hi.norm()) * w;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
        l1: l1 * half.abs(),
    }
}

/// Integrate `f` over `[a, b]`, starting from `initial_segments` equal pieces
/// and bisecting the worst piece until the summed error estimate is below
/// `rel_tol·|I|`, or below `1e-12·∫|f|` when `I` itself is tiny.
pub fn integrate_complex<F>(f: F, a: f64, b: f64, rel_tol: f64, initial_segments: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let n = initial_segments.clamp(1, MAX_SEGMENTS / 2);
    let width = (b - a) / n as f64;
    let mut heap = BinaryHeap::with_capacity(2 * n);
    for i in 0..n {
        let lo = a + width * i as f64;
        let hi = if i + 1 == n { b } else { lo + width };
        heap.push(gk15(&f, lo, hi));
    }
    let mut total: Complex64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    let mut l1: f64 = heap.iter().map(|s| s.l1).sum();
    while error > (rel_tol * total.norm()).max(L1_FLOOR * l1) && heap.len() < MAX_SEGMENTS {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        l1 += left.l1 + right.l1 - worst.l1;
        heap.push(left);
        heap.push(right);
        // refresh the running sums now and then to stop round-off creeping in
        if heap.len() % 4096 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
            l1 = heap.iter().map(|s| s.l1).sum();
        }
    }
    total
}

/// Real-valued convenience wrapper around [`integrate_complex`].
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    integrate_complex(|t| Complex64::new(f(t), 0.0), a, b, rel_tol, 16).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate_real(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-14);
        assert!((v - 13.5).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let v = integrate_real(|x| (-x * x).exp(), -12.0, 12.0, 1e-14);
        assert!((v - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_gaussian_transform() {
        // ∫ e^{−x²/2} e^{iωx} dx = √(2π) e^{−ω²/2}
        let w = 3.0;
        let v = integrate_complex(|x| Complex64::from_polar((-0.5 * x * x).exp(), w * x), -12.0, 12.0, 1e-13, 40);
        assert!((v.re - (2.0 * PI).sqrt() * (-0.5 * w * w).exp()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn cancelling_integrand_terminates() {
        // ∫ sin over whole periods is zero; only the L1 floor can stop this
        let v = integrate_complex(|x| Complex64::new(x.sin(), 0.0), 0.0, 200.0 * PI, 1e-12, 4);
        assert!(v.norm() < 1e-10);
        let v = integrate_real(|_| 0.0, 0.0, 1.0, 1e-12);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        assert_eq!(integrate_real(|x| x, 1.0, 1.0, 1e-12), 0.0);
        let v = integrate_real(|x| x, 2.0, 0.0, 1e-12);
        assert!((v + 2.0).abs() < 1e-14);
    }
}
