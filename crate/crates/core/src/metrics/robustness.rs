use alloc::vec::Vec;

/// Noise means of the robustness sweep.
pub const DEFAULT_SWEEP: [f64; 6] = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9];

/// Scores of one sweep level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelScore {
    pub mu: f64,
    pub dsc: f64,
    pub ece: f64,
}

/// `metric(mu_hi) - metric(mu_lo)` for one pair of levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreDelta {
    pub mu_hi: f64,
    pub mu_lo: f64,
    pub d_dsc: f64,
    pub d_ece: f64,
}

/// All pairwise deltas, later level minus earlier level, in sweep order.
/// Fewer than two levels give an empty table.
pub fn robustness_deltas(levels: &[LevelScore]) -> Vec<ScoreDelta> {
    let mut out = Vec::new();
    for j in 0..levels.len() {
        for i in j + 1..levels.len() {
            out.push(ScoreDelta {
                mu_hi: levels[i].mu,
                mu_lo: levels[j].mu,
                d_dsc: levels[i].dsc - levels[j].dsc,
                d_ece: levels[i].ece - levels[j].ece,
            });
        }
    }
    out
}

/// Mean absolute value; 0 for an empty slice.
pub fn mean_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + libm::fabs(v), n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_scores_give_zero_deltas() {
        let levels: Vec<LevelScore> = DEFAULT_SWEEP.iter().map(|&mu| LevelScore { mu, dsc: 0.8, ece: 0.1 }).collect();
        let d = robustness_deltas(&levels);
        assert_eq!(d.len(), 15);
        assert!(d.iter().all(|x| x.d_dsc == 0.0 && x.d_ece == 0.0));
    }

    #[test]
    fn simple_subtraction() {
        let d = robustness_deltas(&[
            LevelScore { mu: 0.1, dsc: 0.90, ece: 0.02 },
            LevelScore { mu: 0.3, dsc: 0.85, ece: 0.05 },
        ]);
        assert_eq!((d[0].mu_hi, d[0].mu_lo), (0.3, 0.1));
        assert!((d[0].d_dsc + 0.05).abs() < 1e-15);
    }

    #[test]
    fn single_level_has_no_deltas() {
        assert!(robustness_deltas(&[LevelScore { mu: 0.0, dsc: 1.0, ece: 0.0 }]).is_empty());
    }
}
