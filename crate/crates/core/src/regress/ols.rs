use super::special::student_t_two_sided_p;
use super::FitError;
use crate::numfmt::{de_f64, ser_f64};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Lower edge of the approximately linear band; slopes below it are sublinear.
pub const SUBLINEAR_BELOW: f64 = 0.98;
/// Upper edge of the approximately linear band; slopes above it are superlinear.
pub const SUPERLINEAR_ABOVE: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingRegime {
    Sublinear,
    Linear,
    Superlinear,
}

impl fmt::Display for ScalingRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingRegime::Sublinear => "sublinear",
            ScalingRegime::Linear => "linear",
            ScalingRegime::Superlinear => "superlinear",
        })
    }
}

/// Classifies a scaling exponent. Both band edges belong to the linear regime.
pub fn classify_regime(beta: f64) -> ScalingRegime {
    if beta < SUBLINEAR_BELOW {
        ScalingRegime::Sublinear
    } else if beta > SUPERLINEAR_ABOVE {
        ScalingRegime::Superlinear
    } else {
        ScalingRegime::Linear
    }
}

/// Significance marker: `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Standard-error estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeKind {
    /// Homoskedastic OLS standard errors.
    #[default]
    Classical,
    /// White heteroskedasticity-consistent errors with the n/(n−2) correction.
    Hc1,
}

/// A fitted log-log regression `ln impact = intercept_ln + beta · ln size`.
///
/// `intercept_ln` is in natural-log units. `residual_sd` is the residual
/// standard error sqrt(SSE / (n − 2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub n: usize,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub beta: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub intercept_ln: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub se_beta: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub se_intercept: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub t_beta: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub p_beta: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub r2: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub adj_r2: f64,
    #[serde(serialize_with = "ser_f64", deserialize_with = "de_f64")]
    pub residual_sd: f64,
    pub regime: ScalingRegime,
}

impl FitResult {
    /// Fitted log-space value at `ln_size`.
    pub fn predict_ln(&self, ln_size: f64) -> f64 {
        self.intercept_ln + self.beta * ln_size
    }

    /// Log-space residuals of raw (size, impact) pairs.
    pub fn residuals(&self, points: &[(f64, f64)]) -> Vec<f64> {
        points
            .iter()
            .map(|&(x, y)| y.ln() - self.predict_ln(x.ln()))
            .collect()
    }
}

/// Validates raw pairs and returns their natural logs.
pub(crate) fn log_points(points: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>), FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for (index, &(x, y)) in points.iter().enumerate() {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(x) || !ok(y) {
            return Err(FitError::NonPositiveValue { index });
        }
        xs.push(x.ln());
        ys.push(y.ln());
    }
    Ok((xs, ys))
}

/// Least-squares power-law fit with classical standard errors.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    fit_loglog_with(points, SeKind::Classical)
}

pub fn fit_loglog_with(points: &[(f64, f64)], se: SeKind) -> Result<FitResult, FitError> {
    let (xs, ys) = log_points(points)?;
    fit_log_space(&xs, &ys, se)
}

/// OLS on already log-transformed data, using centered sums.
///
/// Sums run over the points in sorted order, so the result does not depend on
/// input order down to the last bit.
pub fn fit_log_space(xs: &[f64], ys: &[f64], se: SeKind) -> Result<FitResult, FitError> {
    let n = xs.len();
    assert_eq!(n, ys.len(), "xs and ys must have equal length");
    if n < 3 {
        return Err(FitError::TooFewPoints(n));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(FitError::DegenerateInput);
    }
    let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let nf = n as f64;
    let x_mean = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(FitError::DegenerateInput);
    }
    let beta = sxy / sxx;
    let intercept_ln = y_mean - beta * x_mean;

    let mut sse = 0.0;
    // HC1 meat terms in the centered basis.
    let (mut m_aa, mut m_ab, mut m_bb) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        let dx = x - x_mean;
        let e = (y - y_mean) - beta * dx;
        let e2 = e * e;
        sse += e2;
        m_aa += e2;
        m_ab += e2 * dx;
        m_bb += e2 * dx * dx;
    }
    let df = nf - 2.0;
    let (se_beta, se_intercept) = match se {
        SeKind::Classical => {
            let s2 = sse / df;
            (
                (s2 / sxx).sqrt(),
                (s2 * (1.0 / nf + x_mean * x_mean / sxx)).sqrt(),
            )
        }
        SeKind::Hc1 => {
            let scale = nf / df;
            let var_b = scale * m_bb / (sxx * sxx);
            let var_centered = scale * m_aa / (nf * nf);
            let cov = scale * m_ab / (nf * sxx);
            let var_a = var_centered + x_mean * x_mean * var_b - 2.0 * x_mean * cov;
            (var_b.sqrt(), var_a.max(0.0).sqrt())
        }
    };

    // Explained fraction Sxy²/(Sxx·Syy); avoids the cancellation in 1 − SSE/SST near zero.
    let r2 = if syy > 0.0 {
        (beta * sxy / syy).clamp(0.0, 1.0)
    } else {
        // Constant response: the fitted line reproduces it exactly.
        1.0
    };
    let adj_r2 = 1.0 - (1.0 - r2) * (nf - 1.0) / df;
    let (t_beta, p_beta) = if se_beta > 0.0 {
        let t = beta / se_beta;
        (t, student_t_two_sided_p(t, df)?)
    } else if beta == 0.0 {
        (0.0, 1.0)
    } else {
        (beta.signum() * f64::INFINITY, 0.0)
    };

    Ok(FitResult {
        n,
        beta,
        intercept_ln,
        se_beta,
        se_intercept,
        t_beta,
        p_beta,
        r2,
        adj_r2,
        residual_sd: (sse / df).sqrt(),
        regime: classify_regime(beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn exact_line() {
        let fit = fit_loglog(&[(1.0, 1.0), (E, E), (E * E, E * E)]).unwrap();
        assert!((fit.beta - 1.0).abs() < 1e-14);
        assert!(fit.intercept_ln.abs() < 1e-14);
        assert!((fit.r2 - 1.0).abs() < 1e-14);
        assert_eq!(fit.regime, ScalingRegime::Linear);
    }

    #[test]
    fn three_point_normal_equations() {
        // Log-space points (0,0), (1,2), (2,3): beta = 3/2, intercept = 1/6, R² = 27/28.
        let fit = fit_loglog(&[(1.0, 1.0), (E, E * E), (E * E, E.powi(3))]).unwrap();
        assert!((fit.beta - 1.5).abs() < 1e-14);
        assert!((fit.intercept_ln - 1.0 / 6.0).abs() < 1e-14);
        assert!((fit.r2 - 27.0 / 28.0).abs() < 1e-14);
        // SSE = 1/6, s² = 1/6, Sxx = 2
        assert!((fit.se_beta - (1.0f64 / 12.0).sqrt()).abs() < 1e-14);
        assert!((fit.se_intercept - (1.0f64 / 6.0 * (1.0 / 3.0 + 0.5)).sqrt()).abs() < 1e-14);
        assert!((fit.adj_r2 - (1.0 - (1.0 / 28.0) * 2.0)).abs() < 1e-14);
        assert_eq!(fit.regime, ScalingRegime::Superlinear);
    }

    #[test]
    fn error_paths() {
        assert_eq!(fit_loglog(&[(1.0, 1.0), (2.0, 2.0)]), Err(FitError::TooFewPoints(2)));
        assert_eq!(
            fit_loglog(&[(1.0, 1.0), (2.0, 0.0), (3.0, 2.0)]),
            Err(FitError::NonPositiveValue { index: 1 })
        );
        assert_eq!(
            fit_loglog(&[(1.0, 1.0), (2.0, f64::NAN), (3.0, 2.0)]),
            Err(FitError::NonPositiveValue { index: 1 })
        );
        assert_eq!(
            fit_loglog(&[(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)]),
            Err(FitError::DegenerateInput)
        );
    }

    #[test]
    fn constant_response() {
        let fit = fit_loglog(&[(1.0, 4.0), (2.0, 4.0), (3.0, 4.0)]).unwrap();
        assert_eq!(fit.beta, 0.0);
        assert_eq!(fit.p_beta, 1.0);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn regimes_and_stars() {
        assert_eq!(classify_regime(0.944), ScalingRegime::Sublinear);
        assert_eq!(classify_regime(0.98), ScalingRegime::Linear);
        assert_eq!(classify_regime(1.00), ScalingRegime::Linear);
        assert_eq!(classify_regime(1.02), ScalingRegime::Linear);
        assert_eq!(classify_regime(1.144), ScalingRegime::Superlinear);
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.001), "**");
        assert_eq!(significance_stars(0.005), "**");
        assert_eq!(significance_stars(0.01), "*");
        assert_eq!(significance_stars(0.03), "*");
        assert_eq!(significance_stars(0.05), "");
        assert_eq!(significance_stars(1.0), "");
    }

    #[test]
    fn hc1_matches_hand_sandwich() {
        // Log-space (0,0), (1,2), (2,3): residuals -1/6, 1/3, -1/6; dx = -1, 0, 1.
        let fit = fit_loglog_with(&[(1.0, 1.0), (E, E * E), (E * E, E.powi(3))], SeKind::Hc1).unwrap();
        let e2: [f64; 3] = [1.0 / 36.0, 1.0 / 9.0, 1.0 / 36.0];
        let var_b: f64 = 3.0 * (e2[0] + e2[2]) / 4.0;
        assert!((fit.se_beta - var_b.sqrt()).abs() < 1e-14);
        // x_mean = 1: var_a = var_alpha + var_b − 2 cov, cov = 3·(−e2[0] + e2[2])/(3·2) = 0
        let var_alpha: f64 = 3.0 * (e2[0] + e2[1] + e2[2]) / 9.0;
        assert!((fit.se_intercept - (var_alpha + var_b).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn json_field_names() {
        let fit = fit_loglog(&[(1.0, 1.0), (E, E * E), (E * E, E.powi(3))]).unwrap();
        let text = serde_json::to_string(&fit).unwrap();
        let keys = ["n", "beta", "intercept_ln", "se_beta", "se_intercept", "t_beta", "p_beta", "r2", "adj_r2", "residual_sd", "regime"];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\":")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert!(text.contains("\"beta\":1.5000000000000000e+0"), "{text}");
        let back: FitResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, fit);
    }
}
