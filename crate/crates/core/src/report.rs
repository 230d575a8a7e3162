use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Metrics of one evaluation (one image, or an average over a split).
///
/// Quantities that can be undefined on a given input (HD95 with an empty
/// predicted class, UCC with zero rank variance) are `None` and a short note
/// is pushed to `flags`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dsc: f64,
    pub dsc_per_class: Vec<f64>,
    pub hd95: Option<f64>,
    pub ece: f64,
    pub ueo: f64,
    pub ucc_g: Option<f64>,
    pub ucc_mu: Option<f64>,
    pub ur_g: Option<f64>,
    pub ur_mu: Option<f64>,
    /// Share of boundary pairs tied in gradient or uncertainty.
    pub ur_g_ties: Option<f64>,
    pub flags: Vec<String>,
}

impl MetricsReport {
    /// Check the documented value ranges.
    pub fn in_range(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let corr = |v: f64| (-1.0..=1.0).contains(&v);
        unit(self.dsc)
            && unit(self.ece)
            && unit(self.ueo)
            && self.hd95.is_none_or(|v| v >= 0.0)
            && self.ucc_g.is_none_or(corr)
            && self.ucc_mu.is_none_or(corr)
            && self.ur_g.is_none_or(unit)
            && self.ur_mu.is_none_or(unit)
    }
}

/// Mean of the present values; `None` when nothing is present.
pub fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.into_iter().flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricsReport {
    /// Average per-image reports into a split-level report.
    pub fn average(reports: &[MetricsReport]) -> MetricsReport {
        let n = reports.len().max(1) as f64;
        let classes = reports.first().map_or(0, |r| r.dsc_per_class.len());
        let mut dsc_per_class = alloc::vec![0.0; classes];
        for r in reports {
            for (acc, v) in dsc_per_class.iter_mut().zip(&r.dsc_per_class) {
                *acc += v / n;
            }
        }
        let mut flags = Vec::new();
        let count = |f: fn(&MetricsReport) -> Option<f64>| reports.iter().filter(|r| f(r).is_none()).count();
        for (name, missing) in
            [("hd95", count(|r| r.hd95)), ("ucc_g", count(|r| r.ucc_g)), ("ucc_mu", count(|r| r.ucc_mu))]
        {
            if missing > 0 {
                flags.push(alloc::format!("{name} undefined on {missing} image(s)"));
            }
        }
        MetricsReport {
            dsc: reports.iter().map(|r| r.dsc).sum::<f64>() / n,
            dsc_per_class,
            hd95: mean_present(reports.iter().map(|r| r.hd95)),
            ece: reports.iter().map(|r| r.ece).sum::<f64>() / n,
            ueo: reports.iter().map(|r| r.ueo).sum::<f64>() / n,
            ucc_g: mean_present(reports.iter().map(|r| r.ucc_g)),
            ucc_mu: mean_present(reports.iter().map(|r| r.ucc_mu)),
            ur_g: mean_present(reports.iter().map(|r| r.ur_g)),
            ur_mu: mean_present(reports.iter().map(|r| r.ur_mu)),
            ur_g_ties: mean_present(reports.iter().map(|r| r.ur_g_ties)),
            flags,
        }
    }
}
