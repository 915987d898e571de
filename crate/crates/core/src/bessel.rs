//! Bessel functions of the first kind and integer order.
//!
//! Small arguments (`x²/4 <= m + 1`, where the ascending series has no
//! cancellation) use the power series; everything else uses Miller's
//! backward recurrence normalized by `J_0 + 2 Σ J_{2k} = 1`.

/// Rescaling threshold for the backward recurrence.
const BIG: f64 = 1e250;

/// `J_m(x)` for integer `m >= 0` and real `x`.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let v = bessel_j(m, -x);
        return if m % 2 == 0 { v } else { -v };
    }
    if x * x / 4.0 <= m as f64 + 1.0 {
        return ascending_series(m, x);
    }
    bessel_j_sequence(m as usize, x)[m as usize]
}

fn ascending_series(m: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let mut sum = term;
    let y = -half * half;
    for k in 1..200 {
        term *= y / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Starting order for the backward recurrence: far enough beyond both the
/// requested order and the turning point `m ≈ x` that the neglected
/// solution is below double precision.
fn miller_start(m_max: usize, x: f64) -> usize {
    let scale = (m_max as f64).max(x);
    let start = scale + 15.0 * scale.cbrt() + 30.0;
    let start = start.ceil() as usize;
    start + start % 2
}

/// `J_0(x), ..., J_{m_max}(x)` by Miller's backward recurrence.
pub fn bessel_j_sequence(m_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = miller_start(m_max, ax);
    let two_over_x = 2.0 / ax;

    // Run J_{k-1} = (2k/x) J_k - J_{k+1} from J_{start+1} = 0, J_start = tiny.
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k <= m_max {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > BIG {
            cur /= BIG;
            next /= BIG;
            norm /= BIG;
            for v in out.iter_mut().skip(k.min(m_max + 1)) {
                *v /= BIG;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `(1/π) ∫_0^π cos(mθ - x sin θ) dθ` by the trapezoid rule, which is
    /// spectrally accurate for this periodic integrand.
    fn integral_oracle(m: u32, x: f64) -> f64 {
        let p = 4096;
        let h = PI / p as f64;
        let f = |t: f64| (m as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for j in 1..p {
            s += f(j as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        for m in 1..5 {
            assert_eq!(bessel_j(m, 0.0), 0.0);
        }
    }

    #[test]
    fn j1_of_two_against_integral() {
        let v = bessel_j(1, 2.0);
        assert!((v - integral_oracle(1, 2.0)).abs() < 1e-14);
        assert!((v - 0.5767248077568734).abs() < 1e-15);
    }

    #[test]
    fn against_integral_representation() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 12.0, 30.0, 150.0, 400.0] {
            for m in [0u32, 1, 2, 5, 13, 40, 90] {
                let v = bessel_j(m, x);
                let o = integral_oracle(m, x);
                assert!((v - o).abs() < 2e-14, "J_{m}({x}) = {v}, oracle {o}");
            }
        }
    }

    #[test]
    fn sequence_matches_single_values() {
        let seq = bessel_j_sequence(60, 25.0);
        for (m, v) in seq.iter().enumerate() {
            assert!((v - integral_oracle(m as u32, 25.0)).abs() < 2e-14);
        }
    }

    #[test]
    fn negative_argument_parity() {
        for m in 0..6 {
            assert_eq!(bessel_j(m, -3.7), if m % 2 == 0 { 1.0 } else { -1.0 } * bessel_j(m, 3.7));
        }
        let s = bessel_j_sequence(5, -3.7);
        for m in 0..6 {
            assert!((s[m] - bessel_j(m as u32, -3.7)).abs() < 1e-15);
        }
    }

    #[test]
    fn large_argument_and_order() {
        let x = 950.0;
        let seq = bessel_j_sequence(1100, x);
        for m in [0usize, 500, 900, 940, 960, 1000, 1100] {
            let o = integral_oracle(m as u32, x);
            assert!((seq[m] - o).abs() < 1e-13, "m={m}: {} vs {o}", seq[m]);
        }
    }
}
