//! Goodness of fit of sampled production counts against the grammar.

use karel_core::dsl::{ExpansionStats, GrammarProbs, StmtRule};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyFit {
    pub family: &'static str,
    pub draws: u64,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson's chi-square test of `observed` against `probs`.
/// Categories with zero probability must have zero counts and are skipped.
pub fn chi_square(family: &'static str, observed: &[u64], probs: &[f64]) -> FamilyFit {
    let draws: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0;
    for (&o, &p) in observed.iter().zip(probs) {
        if p > 0.0 {
            let e = p * draws as f64;
            statistic += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else if o > 0 {
            statistic = f64::INFINITY;
        }
    }
    let df = cells.max(2) - 1;
    let p_value = if statistic.is_finite() {
        1.0 - ChiSquared::new(df as f64).expect("df >= 1").cdf(statistic)
    } else {
        0.0
    };
    FamilyFit { family, draws, statistic, df, p_value }
}

/// One fit per production family.
pub fn grammar_fit(stats: &ExpansionStats, probs: &GrammarProbs) -> Vec<FamilyFit> {
    debug_assert_eq!(StmtRule::ALL.len(), probs.stmt.len());
    vec![
        chi_square("first_statement", &stats.first_stmt, &probs.stmt),
        chi_square("statement", &stats.stmt, &probs.stmt),
        chi_square("condition", &stats.cond, &probs.cond),
        chi_square("percept", &stats.percept, &probs.percept),
        chi_square("action", &stats.action, &probs.action),
        chi_square("repeat_count", &stats.count, &probs.count()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_statistic() {
        // (60-50)^2/50 + (40-50)^2/50 = 4, df 1, p = 0.0455.
        let f = chi_square("coin", &[60, 40], &[0.5, 0.5]);
        assert!((f.statistic - 4.0).abs() < 1e-12);
        assert_eq!(f.df, 1);
        assert!((f.p_value - 0.0455).abs() < 1e-3, "{}", f.p_value);
    }

    #[test]
    fn impossible_category_fails() {
        assert_eq!(chi_square("x", &[5, 1], &[1.0, 0.0]).p_value, 0.0);
        assert!(chi_square("x", &[5, 0], &[1.0, 0.0]).p_value > 0.99);
    }
}
