//! Small statistics helpers shared by tests and the experiment harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson goodness-of-fit result against the uniform distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Chi-square test of `counts` against equal expected frequencies.
///
/// Needs at least two cells and one observation.
pub fn chi_square_uniform(counts: &[u64]) -> Option<ChiSquare> {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return None;
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&o| {
            let diff = o as f64 - expected;
            diff * diff / expected
        })
        .sum::<f64>();
    let dof = counts.len() as u64 - 1;
    let dist = ChiSquared::new(dof as f64).ok()?;
    Some(ChiSquare { statistic, dof, p_value: dist.sf(statistic) })
}

/// Standard deviation of an empirical rate under the binomial model.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / trials as f64).sqrt()
}

/// Formats a float with six significant digits, without exponent for the
/// magnitudes that occur in practice and without trailing zeros.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&magnitude) {
        return format!("{:.5e}", x);
    }
    if magnitude > 5 {
        let unit = 10f64.powi(magnitude - 5);
        return format!("{:.0}", (x / unit).round() * unit);
    }
    let s = format!("{:.*}", (5 - magnitude) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
