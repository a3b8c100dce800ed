use serde::{Deserialize, Serialize};

/// Outcome of one verified inequality or fitted scaling law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_exponent: Option<f64>,
    pub pass: bool,
    /// Conventions the numbers depend on (e.g. which tensor norm was used).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, pass: bool) -> Self {
        let ratio = if rhs != 0.0 { lhs / rhs } else { f64::INFINITY };
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio,
            fitted_exponent: None,
            reference_exponent: None,
            pass,
            notes: None,
        }
    }

    pub fn with_exponents(mut self, fitted: f64, reference: f64) -> Self {
        self.fitted_exponent = Some(fitted);
        self.reference_exponent = Some(reference);
        self
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = Some(notes.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Metric values recorded along a monotone parameter sweep, with an optional
/// fitted log-log rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub parameter_name: String,
    pub parameter_values: Vec<f64>,
    pub metric_name: String,
    pub metric_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_rate: Option<f64>,
}

impl ConvergenceTrace {
    pub fn new(
        parameter_name: impl Into<String>,
        parameter_values: Vec<f64>,
        metric_name: impl Into<String>,
        metric_values: Vec<f64>,
    ) -> Self {
        assert_eq!(parameter_values.len(), metric_values.len());
        assert!(
            parameter_values.windows(2).all(|w| w[1] > w[0])
                || parameter_values.windows(2).all(|w| w[1] < w[0]),
            "parameter sweep must be strictly monotone"
        );
        Self {
            parameter_name: parameter_name.into(),
            parameter_values,
            metric_name: metric_name.into(),
            metric_values,
            fitted_rate: None,
        }
    }

    pub fn with_loglog_fit(mut self) -> Self {
        self.fitted_rate = Some(fit_loglog_slope(&self.parameter_values, &self.metric_values));
        self
    }

    /// CSV with one row per parameter value; floats printed in shortest
    /// round-trip decimal.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.parameter_name, self.metric_name);
        for (p, m) in self.parameter_values.iter().zip(&self.metric_values) {
            out.push_str(&format!("{p},{m}\n"));
        }
        out
    }
}

/// Least-squares slope of log(y) against log(x).
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    fit_slope(&pts)
}

/// Least-squares slope of y against x.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_fit_recovers_power_law() {
        let xs: Vec<f64> = (1..=20).map(|i| 0.01 * 1.5_f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.7 * x.powf(-0.625)).collect();
        let slope = fit_loglog_slope(&xs, &ys);
        assert!((slope + 0.625).abs() < 1e-12, "slope {slope}");
    }

    #[test]
    fn report_json_has_schema_fields() {
        let r = EstimateReport::new("demo", 1.0, 2.0, true).with_exponents(-0.5, -0.5);
        let json = r.to_json();
        for key in ["name", "lhs", "rhs", "ratio", "fitted_exponent", "reference_exponent", "pass"] {
            assert!(json.contains(key), "missing {key}");
        }
    }
}
