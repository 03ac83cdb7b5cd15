use crate::error::{Error, Result};

/// `mean_i (μ̂_i − μ_i)² / Var_i(Y)`.
pub fn prmse(estimates: &[f64], truths: &[f64], variances: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() || truths.len() != variances.len() {
        return Err(Error::LengthMismatch(format!(
            "{} estimates, {} truths, {} variances",
            estimates.len(),
            truths.len(),
            variances.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no regimes to score".into()));
    }
    let s: f64 = estimates
        .iter()
        .zip(truths)
        .zip(variances)
        .map(|((e, t), v)| (e - t).powi(2) / v)
        .sum();
    Ok(s / estimates.len() as f64)
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of average ranks. A constant vector has
/// no ranking and scores 0.
pub fn rcor(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch(format!(
            "{} estimates, {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    if estimates.len() < 2 {
        return Err(Error::InsufficientData(
            "rank correlation needs at least 2 regimes".into(),
        ));
    }
    let (a, b) = (average_ranks(estimates), average_ranks(truths));
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(&b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Median of a non-empty slice; `None` when empty.
pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_reversed() {
        let t = [0.1, 0.5, -0.2, 0.9];
        assert_eq!(prmse(&t, &t, &[1.0; 4]).unwrap(), 0.0);
        assert_eq!(rcor(&t, &t).unwrap(), 1.0);
        let r: Vec<f64> = t.iter().map(|v| -v).collect();
        assert_eq!(rcor(&r, &t).unwrap(), -1.0);
    }

    #[test]
    fn hand_computed_spearman() {
        // ranks (1,2,3) vs (2,1,3): 1 − 6·2 / (3·8) = 0.5
        let r = rcor(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            prmse(&[1.0], &[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch(_))
        ));
        assert!(rcor(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn prmse_by_hand() {
        let p = prmse(&[1.0, 0.0], &[0.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn metric_ranges(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.1f64..3.0), 2..12)) {
            let e: Vec<f64> = v.iter().map(|t| t.0).collect();
            let t: Vec<f64> = v.iter().map(|t| t.1).collect();
            let s: Vec<f64> = v.iter().map(|t| t.2).collect();
            prop_assert!(prmse(&e, &t, &s).unwrap() >= 0.0);
            let r = rcor(&e, &t).unwrap();
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((rcor(&t, &e).unwrap() - r).abs() < 1e-12);
        }
    }
}
