//! Shared statistical primitives: normal tails and the exact one-sample
//! Kolmogorov-Smirnov distribution.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(z)
}

/// Two-sided p-value of a standard normal statistic.
pub fn two_sided_p(z: f64) -> f64 {
    if !z.is_finite() {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    (2.0 * normal_cdf(-z.abs())).min(1.0)
}

/// Two-sided KS distance between a sample and the Uniform[0,1] CDF.
pub fn ks_distance_uniform(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Inference("KS distance of an empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in xs.iter().enumerate() {
        let cdf = x.clamp(0.0, 1.0);
        let hi = (i as f64 + 1.0) / n - cdf;
        let lo = cdf - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    Ok(d)
}

/// Exact `P(D_n <= d)` for the one-sample two-sided KS statistic, via the
/// Marsaglia-Tsang-Wang matrix method for `n <= 200`, with the asymptotic
/// Kolmogorov distribution beyond.
pub fn ks_cdf(n: usize, d: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Inference("KS distribution needs n >= 1".into()));
    }
    if d <= 0.0 {
        return Ok(0.0);
    }
    if d >= 1.0 {
        return Ok(1.0);
    }
    if n > 200 {
        return Ok(kolmogorov_cdf((n as f64).sqrt() * d));
    }
    Ok(mtw_cdf(n, d))
}

/// Exact p-value `P(D_n >= d)`.
pub fn ks_p_value(n: usize, d: f64) -> Result<f64> {
    Ok((1.0 - ks_cdf(n, d)?).clamp(0.0, 1.0))
}

/// Critical value `d` with `P(D_n <= d) = 1 - alpha` (bisection; exact for
/// `n <= 200`, asymptotic beyond).
pub fn ks_critical_value(n: usize, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::Inference(format!("alpha {alpha} outside (0,1)")));
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ks_cdf(n, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Asymptotic Kolmogorov distribution `K(x) = 1 - 2 Σ (-1)^{k-1} e^{-2k²x²}`.
fn kolmogorov_cdf(x: f64) -> f64 {
    if x < 1e-6 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// Marsaglia-Tsang-Wang evaluation of the exact KS CDF.
fn mtw_cdf(n: usize, d: f64) -> f64 {
    let nf = n as f64;
    let k = (nf * d).ceil() as usize;
    let h = k as f64 - nf * d;
    let m = 2 * k - 1;

    let mut hm = vec![vec![0.0_f64; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i as i64 - j as i64 + 1 >= 0 {
                hm[i][j] = 1.0;
            }
        }
    }
    for i in 0..m {
        hm[i][0] -= h.powi(i as i32 + 1);
        hm[m - 1][i] -= h.powi((m - i) as i32);
    }
    hm[m - 1][0] += if 2.0 * h - 1.0 > 0.0 { (2.0 * h - 1.0).powi(m as i32) } else { 0.0 };
    for i in 0..m {
        for j in 0..m {
            let e = i as i64 - j as i64 + 1;
            if e > 0 {
                for g in 1..=e {
                    hm[i][j] /= g as f64;
                }
            }
        }
    }

    // H^n with power-of-ten rescaling to avoid overflow.
    let (hn, mut e_q) = mat_pow(&hm, n);
    let mut s = hn[k - 1][k - 1];
    for i in 1..=n {
        s *= i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            e_q -= 140;
        }
    }
    (s * 10f64.powi(e_q)).clamp(0.0, 1.0)
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut c = vec![vec![0.0; m]; m];
    for i in 0..m {
        for l in 0..m {
            let ail = a[i][l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i][j] += ail * b[l][j];
            }
        }
    }
    c
}

/// `(H^n, exponent)` with the matrix rescaled whenever its central entry
/// grows past 1e140; the true matrix is `H^n * 10^exponent`.
fn mat_pow(h: &[Vec<f64>], n: usize) -> (Vec<Vec<f64>>, i32) {
    let m = h.len();
    if n == 1 {
        return (h.to_vec(), 0);
    }
    let (half, mut e) = mat_pow(h, n / 2);
    let mut v = mat_mul(&half, &half);
    e *= 2;
    if n % 2 == 1 {
        v = mat_mul(&v, h);
    }
    let center = v[m / 2][m / 2];
    if center > 1e140 {
        for row in &mut v {
            for x in row.iter_mut() {
                *x *= 1e-140;
            }
        }
        e += 140;
    }
    (v, e)
}
