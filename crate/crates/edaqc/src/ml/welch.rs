//! Welch's unequal-variance t-test with a two-sided p-value from the
//! regularized incomplete beta function.

use crate::error::{Error, Result};

/// Lanczos approximation of ln Γ(x) for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_7e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000_000_000_190_015;
    for g in G {
        y += 1.0;
        ser += g / y;
    }
    -tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Continued-fraction kernel of the incomplete beta (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        let m2 = 2.0 * m_f;
        let aa = m_f * (b - m_f) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m_f) * (qab + m_f) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Two-sided p-value of a t statistic with `dof` degrees of freedom.
fn t_two_sided_p(t: f64, dof: f64) -> f64 {
    beta_inc(dof / 2.0, 0.5, dof / (dof + t * t))
}

/// Welch's t statistic, Welch-Satterthwaite degrees of freedom, and the
/// two-sided p-value. Degenerate pairs (both constant at the same value)
/// return `(0, 1)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::rejected(format!(
            "each sample needs at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    // sample (n-1) variances
    let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / (na - 1.0);
    let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / (nb - 1.0);
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    if se2 < 1e-300 {
        return Ok(if (ma - mb).abs() < 1e-300 {
            (0.0, 1.0)
        } else {
            ((ma - mb).signum() * f64::INFINITY, 0.0)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = t_two_sided_p(t, dof);
    Ok((t, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_samples_give_t0_p1() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let (t, p) = welch_t_test(&a, &a).unwrap();
        assert_eq!(t, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn both_constant_and_equal_is_degenerate() {
        let (t, p) = welch_t_test(&[2.0; 5], &[2.0; 7]).unwrap();
        assert_eq!((t, p), (0.0, 1.0));
    }

    #[test]
    fn statistic_matches_direct_formula_oracle() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 3.0, 4.0, 5.0, 6.0];
        let (t, _) = welch_t_test(&a, &b).unwrap();
        // direct: means 3 and 4, sample variances 2.5 each, n = 5
        let expect = (3.0f64 - 4.0) / (2.5f64 / 5.0 + 2.5 / 5.0).sqrt();
        assert!((t - expect).abs() < 1e-9, "{t} vs {expect}");

        let mut rng = crate::seeds::unit_rng(241, "welch", 0);
        for _ in 0..100 {
            let xs: Vec<f64> = (0..13).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ys: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..5.0)).collect();
            let (t, _) = welch_t_test(&xs, &ys).unwrap();
            let na = xs.len() as f64;
            let nb = ys.len() as f64;
            let ma = xs.iter().sum::<f64>() / na;
            let mb = ys.iter().sum::<f64>() / nb;
            let va = xs.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / (na - 1.0);
            let vb = ys.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / (nb - 1.0);
            let expect = (ma - mb) / (va / na + vb / nb).sqrt();
            assert!((t - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn p_value_matches_closed_form_student_cdfs() {
        // dof = 1 (Cauchy): two-sided p = 1 - (2/pi) atan(|t|)
        for t in [0.3, 1.0, 2.5, 7.0] {
            let p = t_two_sided_p(t, 1.0);
            let expect = 1.0 - 2.0 / std::f64::consts::PI * t.atan();
            assert!((p - expect).abs() < 1e-12, "dof 1, t {t}: {p} vs {expect}");
        }
        // dof = 2: two-sided p = 1 - t/sqrt(2 + t^2)
        for t in [0.5, 1.3, 4.0, 11.0] {
            let p = t_two_sided_p(t, 2.0);
            let expect = 1.0 - t / (2.0 + t * t).sqrt();
            assert!((p - expect).abs() < 1e-12, "dof 2, t {t}: {p} vs {expect}");
        }
    }

    #[test]
    fn well_separated_normals_are_significant() {
        let mut rng = crate::seeds::unit_rng(251, "sep", 0);
        let a: Vec<f64> = (0..100)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let b: Vec<f64> = (0..100)
            .map(|_| 5.0 + rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let (_, p) = welch_t_test(&a, &b).unwrap();
        assert!(p < 1e-10, "p {p}");
    }

    #[test]
    fn rejects_short_samples() {
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }
}
