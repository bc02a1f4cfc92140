use statrs::function::beta::beta_reg;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anova {
    pub f: f64,
    pub df_num: f64,
    pub df_den: f64,
    pub p: f64,
}

/// Upper tail of the F distribution, via the regularized incomplete beta.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    if f <= 0.0 {
        return 1.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

/// One-way repeated-measures ANOVA; `data[participant][condition]`.
pub fn rm_anova_oneway(data: &[Vec<f64>]) -> Result<Anova, HarnessError> {
    let n = data.len();
    if n < 2 {
        return Err(HarnessError::InvalidArgument("need at least 2 participants".into()));
    }
    let k = data[0].len();
    if k < 2 {
        return Err(HarnessError::InvalidArgument("need at least 2 conditions".into()));
    }
    if data.iter().any(|row| row.len() != k) {
        return Err(HarnessError::InvalidArgument("incomplete matrix: ragged rows".into()));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HarnessError::InvalidArgument("incomplete matrix: non-finite entry".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = data.iter().flatten().sum::<f64>() / (nf * kf);
    let ss_total: f64 = data.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_subjects: f64 = data
        .iter()
        .map(|row| kf * (row.iter().sum::<f64>() / kf - grand).powi(2))
        .sum();
    let ss_conditions: f64 = (0..k)
        .map(|j| {
            let m = data.iter().map(|row| row[j]).sum::<f64>() / nf;
            nf * (m - grand).powi(2)
        })
        .sum();
    let ss_error = (ss_total - ss_subjects - ss_conditions).max(0.0);
    let df_num = kf - 1.0;
    let df_den = (kf - 1.0) * (nf - 1.0);

    // Relative floor so rounding noise on exact data does not read as error variance.
    let scale = ss_total.max(f64::MIN_POSITIVE);
    let f = if ss_conditions <= 1e-12 * scale {
        0.0
    } else if ss_error <= 1e-12 * scale {
        f64::INFINITY
    } else {
        (ss_conditions / df_num) / (ss_error / df_den)
    };
    Ok(Anova {
        f,
        df_num,
        df_den,
        p: f_survival(f, df_num, df_den),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_p_values() {
        // reference values from an independent implementation
        let cases = [
            (27.7, 1.0, 14.0, 0.00011995572568277037),
            (38.7, 1.0, 14.0, 2.2336917212188302e-05),
            (1.0, 2.0, 10.0, 0.401877572016461),
            (4.49, 5.0, 45.0, 0.0021016726028186806),
            (41.96, 2.0, 26.0, 7.255313239406468e-09),
            (0.5, 3.0, 6.0, 0.6958947550600287),
        ];
        for (f, d1, d2, p) in cases {
            let got = f_survival(f, d1, d2);
            assert!((got - p).abs() <= 1e-10 * p.max(1e-3), "F({d1},{d2})={f}: {got} vs {p}");
        }
    }

    #[test]
    fn small_matrix() {
        let data = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 5.0], vec![3.0, 3.0, 7.0], vec![4.0, 6.0, 6.0]];
        let a = rm_anova_oneway(&data).unwrap();
        assert!((a.f - 9.41379310344828).abs() < 1e-10);
        assert_eq!((a.df_num, a.df_den), (2.0, 6.0));
        assert!((a.p - 0.014114004629629615).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cases() {
        let same = vec![vec![1.0, 1.0], vec![3.0, 3.0], vec![2.0, 2.0]];
        let a = rm_anova_oneway(&same).unwrap();
        assert_eq!((a.f, a.p), (0.0, 1.0));
        let shifted = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let a = rm_anova_oneway(&shifted).unwrap();
        assert_eq!((a.f, a.p), (f64::INFINITY, 0.0));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(rm_anova_oneway(&[vec![1.0, 2.0]]).is_err());
        assert!(rm_anova_oneway(&[vec![1.0], vec![2.0]]).is_err());
        assert!(rm_anova_oneway(&[vec![1.0, 2.0], vec![2.0]]).is_err());
        assert!(rm_anova_oneway(&[vec![1.0, f64::NAN], vec![2.0, 1.0]]).is_err());
    }
}
