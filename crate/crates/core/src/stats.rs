//! Descriptive statistics over slices.

use crate::num::Real;

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_count(xs.len() - 1)
}

pub fn std_dev<T: Real>(xs: &[T]) -> T {
    variance(xs).sqrt()
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of an already sorted slice.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 0 {
        return T::nan();
    }
    if n == 1 {
        return sorted[0];
    }
    let q = q.max(T::zero()).min(T::one());
    let h = q * T::from_count(n - 1);
    let lo = h.floor();
    let lo_idx = lo.to_usize().unwrap_or(0).min(n - 1);
    let hi_idx = (lo_idx + 1).min(n - 1);
    let frac = h - lo;
    sorted[lo_idx] + frac * (sorted[hi_idx] - sorted[lo_idx])
}

/// Sorts a copy of the finite values in `xs`; NaNs are dropped.
pub fn sorted_finite<T: Real>(xs: &[T]) -> Vec<T> {
    let mut v: Vec<T> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered"));
    v
}

pub fn quantile<T: Real>(xs: &[T], q: T) -> T {
    quantile_sorted(&sorted_finite(xs), q)
}

pub fn median<T: Real>(xs: &[T]) -> T {
    quantile(xs, T::lit(0.5))
}

/// Interquartile range `q75 - q25`.
pub fn iqr<T: Real>(xs: &[T]) -> T {
    let s = sorted_finite(xs);
    quantile_sorted(&s, T::lit(0.75)) - quantile_sorted(&s, T::lit(0.25))
}

/// Pearson correlation; zero when either side is constant.
pub fn correlation<T: Real>(xs: &[T], ys: &[T]) -> T {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return T::zero();
    }
    sxy / (sxx * syy).sqrt()
}

/// Split-chain potential scale reduction factor.
///
/// Each chain is cut in half and the halves are treated as separate chains.
/// Returns 1 when every half is constant.
pub fn split_rhat<T: Real>(chains: &[&[T]]) -> T {
    let halves: Vec<&[T]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .filter(|h| !h.is_empty())
        .collect();
    let n = halves.iter().map(|h| h.len()).min().unwrap_or(0);
    if halves.len() < 2 || n < 2 {
        return T::nan();
    }
    let means: Vec<T> = halves.iter().map(|h| mean(&h[..n])).collect();
    let w = mean(&halves.iter().map(|h| variance(&h[..n])).collect::<Vec<_>>());
    let nf = T::from_count(n);
    let b = nf * variance(&means);
    if w <= T::zero() {
        return if b <= T::zero() {
            T::one()
        } else {
            T::infinity()
        };
    }
    let var_plus = (nf - T::one()) / nf * w + b / nf;
    (var_plus / w).sqrt()
}

/// Mean, standard deviation and a central interval of a sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Summary {
    /// Summarizes `xs` with the central `level` interval (e.g. 0.95).
    pub fn of(xs: &[f64], level: f64) -> Self {
        let s = sorted_finite(xs);
        let tail = (1.0 - level) / 2.0;
        Summary {
            mean: mean(xs),
            sd: std_dev(xs),
            lo: quantile_sorted(&s, tail),
            hi: quantile_sorted(&s, 1.0 - tail),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_of_three_points() {
        let xs = [10.0, 20.0, 30.0];
        assert_eq!(median(&xs), 20.0);
        assert_eq!(iqr(&xs), 10.0);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0_f64, 2.0, 3.0, 4.0];
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-12);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn works_in_single_precision() {
        let xs = [1.0_f32, 2.0, 3.0, 100.0];
        assert_eq!(median(&xs), 2.5_f32);
        assert!((mean(&xs) - 26.5).abs() < 1e-5);
    }

    #[test]
    fn constant_sample_has_zero_spread() {
        let s = Summary::of(&[-2.0, -2.0, -2.0], 0.95);
        assert_eq!(
            s,
            Summary {
                mean: -2.0,
                sd: 0.0,
                lo: -2.0,
                hi: -2.0
            }
        );
    }

    #[test]
    fn rhat_flags_disagreeing_chains() {
        let a: Vec<f64> = (0..100).map(|i| ((i * 37) % 17) as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| ((i * 53) % 17) as f64).collect();
        assert!((split_rhat(&[&a, &b]) - 1.0).abs() < 0.05);
        let c: Vec<f64> = a.iter().map(|x| x + 50.0).collect();
        assert!(split_rhat(&[&a, &c]) > 2.0);
        assert_eq!(split_rhat(&[&[1.0; 10][..], &[1.0; 10][..]]), 1.0);
    }

    #[test]
    fn correlation_of_linear_pair_is_one() {
        let xs = [1.0_f64, 2.0, 3.0, 4.0];
        let ys = [3.0_f64, 5.0, 7.0, 9.0];
        assert!((correlation(&xs, &ys) - 1.0).abs() < 1e-12);
        assert_eq!(correlation(&xs, &[1.0; 4]), 0.0);
    }
}
