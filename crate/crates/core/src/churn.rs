//! Forward-window churn labels and the L1-regularized logistic churn model
//! with a one-period price lag:
//!
//! ```text
//! z = θ0 + θ1·price + θ2·prev_price + θ3ᵀx + θ4·tenure
//! P(churn) = 1 / (1 + exp(-z))
//! ```

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::num::{sigmoid, softplus};
use crate::panel::SubscriptionPanel;

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Fitted (or ground-truth) churn coefficients.
///
/// JSON form: `{theta0, theta1, theta2, theta3:{name:value}, theta4, lambda}`,
/// with `theta3` keys in feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnModel {
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    #[serde(serialize_with = "ser_ordered", deserialize_with = "de_ordered")]
    pub theta3: Vec<(String, f64)>,
    pub theta4: f64,
    #[serde(rename = "lambda")]
    pub l1_lambda: f64,
}

fn ser_ordered<S: Serializer>(
    pairs: &[(String, f64)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut m = s.serialize_map(Some(pairs.len()))?;
    for (k, v) in pairs {
        m.serialize_entry(k, v)?;
    }
    m.end()
}

fn de_ordered<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<(String, f64)>, D::Error> {
    struct Ordered;
    impl<'de> Visitor<'de> for Ordered {
        type Value = Vec<(String, f64)>;
        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a map of feature name to coefficient")
        }
        fn visit_map<A: MapAccess<'de>>(
            self,
            mut map: A,
        ) -> std::result::Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some((k, v)) = map.next_entry::<String, f64>()? {
                out.push((k, v));
            }
            Ok(out)
        }
    }
    d.deserialize_map(Ordered)
}

impl ChurnModel {
    pub fn feature_names(&self) -> Vec<&str> {
        self.theta3.iter().map(|(k, _)| k.as_str()).collect()
    }

    /// Coefficients in design order `[θ0, θ1, θ2, θ3.., θ4]`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = vec![self.theta0, self.theta1, self.theta2];
        v.extend(self.theta3.iter().map(|(_, c)| *c));
        v.push(self.theta4);
        v
    }

    pub fn from_coefficients(names: &[String], coef: &[f64], l1_lambda: f64) -> Self {
        let k = names.len();
        ChurnModel {
            theta0: coef[0],
            theta1: coef[1],
            theta2: coef[2],
            theta3: names
                .iter()
                .cloned()
                .zip(coef[3..3 + k].iter().copied())
                .collect(),
            theta4: coef[3 + k],
            l1_lambda,
        }
    }

    /// Linear score `z`.
    pub fn logit(&self, price: f64, prev_price: f64, features: &[f64], tenure: f64) -> Result<f64> {
        if features.len() != self.theta3.len() {
            return Err(Error::SchemaMismatch(format!(
                "churn model expects {} features, got {}",
                self.theta3.len(),
                features.len()
            )));
        }
        let behavioral: f64 = self
            .theta3
            .iter()
            .zip(features)
            .map(|((_, c), x)| c * x)
            .sum();
        Ok(self.theta0
            + self.theta1 * price
            + self.theta2 * prev_price
            + behavioral
            + self.theta4 * tenure)
    }

    /// `∂P/∂price` holding the lagged price fixed.
    pub fn price_derivative(
        &self,
        price: f64,
        prev_price: f64,
        features: &[f64],
        tenure: f64,
    ) -> Result<f64> {
        let s = sigmoid(self.logit(price, prev_price, features, tenure)?);
        Ok(s * (1.0 - s) * self.theta1)
    }

    pub fn nonzero_penalized(&self) -> usize {
        self.coefficients()[1..]
            .iter()
            .filter(|c| **c != 0.0)
            .count()
    }
}

/// Churn probability for one observation.
pub fn predict_churn(
    model: &ChurnModel,
    price: f64,
    prev_price: f64,
    features: &[f64],
    tenure: f64,
) -> Result<f64> {
    Ok(sigmoid(model.logit(price, prev_price, features, tenure)?))
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnRow {
    pub price: f64,
    pub prev_price: f64,
    pub features: Vec<f64>,
    pub tenure: f64,
    pub label: bool,
    /// Number of customers this row stands for.
    pub weight: f64,
}

impl ChurnRow {
    fn design(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.features.len() + 3);
        v.push(self.price);
        v.push(self.prev_price);
        v.extend_from_slice(&self.features);
        v.push(self.tenure);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<ChurnRow>,
    pub window: usize,
}

/// Builds forward-window labels from a panel.
///
/// For the cohort of `quantity` customers active at period `t`, the
/// cancellations recorded in `(t, t + window]` (capped at the cohort size)
/// form a row labeled 1 and the remaining customers a row labeled 0, each
/// weighted by its head count. Periods closer than `window` to the end of
/// their segment produce no rows. `prev_price` is the price at `t - 1`, or
/// the current price for a segment's first period.
///
/// `features` selects the behavioral covariates (default: every numeric
/// covariate); their values must be present.
pub fn build_churn_labels(
    panel: &SubscriptionPanel,
    window: usize,
    features: Option<&[String]>,
) -> Result<ChurnDataset> {
    if window == 0 {
        return Err(Error::config("churn window must be positive"));
    }
    let span = panel.period_span();
    if window >= span {
        return Err(Error::WindowTooLong { window, span });
    }
    let names: Vec<String> = match features {
        Some(f) => f.to_vec(),
        None => panel.schema().numeric_names(),
    };
    let mut rows = Vec::new();
    for (seg, recs) in panel.iter_segments() {
        for (i, r) in recs.iter().enumerate() {
            let horizon_end = r.period + window as i64;
            if recs.last().is_none_or(|l| l.period < horizon_end) {
                continue;
            }
            if r.quantity == 0 {
                continue;
            }
            let churned: u64 = recs[i + 1..]
                .iter()
                .take_while(|x| x.period <= horizon_end)
                .map(|x| x.churned)
                .sum();
            let prev_price = if i > 0 && recs[i - 1].period == r.period - 1 {
                recs[i - 1].price
            } else {
                r.price
            };
            let mut x = Vec::with_capacity(names.len());
            for n in &names {
                let v = r
                    .covariates
                    .get(n)
                    .and_then(|v| v.as_num())
                    .ok_or_else(|| {
                        Error::SchemaMismatch(format!(
                            "segment `{seg}` period {}: feature `{n}` missing or non-numeric",
                            r.period
                        ))
                    })?;
                x.push(v);
            }
            let k = churned.min(r.quantity);
            let mut push = |label: bool, w: u64| {
                if w > 0 {
                    rows.push(ChurnRow {
                        price: r.price,
                        prev_price,
                        features: x.clone(),
                        tenure: r.tenure,
                        label,
                        weight: w as f64,
                    });
                }
            };
            push(true, k);
            push(false, r.quantity - k);
        }
    }
    Ok(ChurnDataset {
        feature_names: names,
        rows,
        window,
    })
}

impl ChurnDataset {
    fn n_coef(&self) -> usize {
        self.feature_names.len() + 4
    }

    /// Weighted log-likelihood at `theta` (design order `[θ0, θ1, θ2, θ3.., θ4]`).
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let z = theta[0]
                    + r.design()
                        .iter()
                        .zip(&theta[1..])
                        .map(|(x, c)| x * c)
                        .sum::<f64>();
                let y = if r.label { 1.0 } else { 0.0 };
                r.weight * (y * z - softplus(z))
            })
            .sum()
    }

    /// Gradient of [`Self::log_likelihood`].
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; theta.len()];
        for r in &self.rows {
            let d = r.design();
            let z = theta[0] + d.iter().zip(&theta[1..]).map(|(x, c)| x * c).sum::<f64>();
            let y = if r.label { 1.0 } else { 0.0 };
            let resid = r.weight * (y - sigmoid(z));
            g[0] += resid;
            for (gj, x) in g[1..].iter_mut().zip(&d) {
                *gj += resid * x;
            }
        }
        g
    }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnFitConfig {
    pub l1_lambda: f64,
    pub max_iter: usize,
    /// Tolerance on the minimum-norm subgradient of the penalized objective,
    /// divided by the total row weight.
    pub tol: f64,
}

impl Default for ChurnFitConfig {
    fn default() -> Self {
        ChurnFitConfig {
            l1_lambda: 0.001,
            max_iter: 20_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    /// The classes are perfectly separated; the unpenalized MLE is unbounded.
    SeparableData,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnFit {
    pub model: ChurnModel,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<FitWarning>,
}

/// Standardized design: column `j` is `(x_j - center_j) / scale_j`.
struct Standardized {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    w: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardized {
    fn new(data: &ChurnDataset) -> Self {
        let p = data.n_coef() - 1;
        let total: f64 = data.rows.iter().map(|r| r.weight).sum();
        let raw: Vec<Vec<f64>> = data.rows.iter().map(ChurnRow::design).collect();
        let mut center = vec![0.0; p];
        for (r, row) in data.rows.iter().zip(&raw) {
            for j in 0..p {
                center[j] += r.weight * row[j] / total;
            }
        }
        let mut var = vec![0.0; p];
        for (r, row) in data.rows.iter().zip(&raw) {
            for j in 0..p {
                var[j] += r.weight * (row[j] - center[j]).powi(2) / total;
            }
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|v| if *v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        let x = raw
            .iter()
            .map(|row| (0..p).map(|j| (row[j] - center[j]) / scale[j]).collect())
            .collect();
        Standardized {
            x,
            y: data
                .rows
                .iter()
                .map(|r| if r.label { 1.0 } else { 0.0 })
                .collect(),
            w: data.rows.iter().map(|r| r.weight).collect(),
            center,
            scale,
        }
    }

    /// Negative log-likelihood and its gradient at `(b, u)` packed as `v`.
    fn nll(&self, v: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut f = 0.0;
        let mut g_local = grad;
        if let Some(g) = g_local.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        for ((row, &y), &w) in self.x.iter().zip(&self.y).zip(&self.w) {
            let z = v[0] + row.iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>();
            f += w * (softplus(z) - y * z);
            if let Some(g) = g_local.as_deref_mut() {
                let r = w * (sigmoid(z) - y);
                g[0] += r;
                for (gj, xj) in g[1..].iter_mut().zip(row) {
                    *gj += r * xj;
                }
            }
        }
        f
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Fits the penalized churn model by accelerated proximal gradient with
/// backtracking, maximizing `Σ w·[y log σ(z) + (1-y) log(1-σ(z))] - λ Σ_{j≥1} |θ_j|`.
///
/// Columns are centered and scaled internally. Centering only moves the
/// unpenalized intercept and the penalty is rescaled per column, so the
/// solution is that of the original problem.
pub fn fit_churn(data: &ChurnDataset, cfg: &ChurnFitConfig) -> Result<ChurnFit> {
    if !(cfg.l1_lambda >= 0.0 && cfg.l1_lambda.is_finite()) || cfg.tol <= 0.0 || cfg.max_iter == 0 {
        return Err(Error::config(
            "churn fit needs lambda >= 0, tol > 0, max_iter > 0",
        ));
    }
    for r in &data.rows {
        if r.features.len() != data.feature_names.len() {
            return Err(Error::SchemaMismatch(
                "row feature count differs from feature_names".into(),
            ));
        }
        let finite = r.price.is_finite()
            && r.prev_price.is_finite()
            && r.tenure.is_finite()
            && r.features.iter().all(|x| x.is_finite());
        if !finite || !(r.weight > 0.0) {
            return Err(Error::InvalidRecord(
                "churn rows need finite features and positive weight".into(),
            ));
        }
    }
    let pos: f64 = data.rows.iter().filter(|r| r.label).map(|r| r.weight).sum();
    let neg: f64 = data
        .rows
        .iter()
        .filter(|r| !r.label)
        .map(|r| r.weight)
        .sum();
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::SingleClass);
    }
    let total = pos + neg;
    let st = Standardized::new(data);
    let n = data.n_coef();
    let lam: Vec<f64> = (0..n)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                cfg.l1_lambda / st.scale[j - 1]
            }
        })
        .collect();

    let penalty = |v: &[f64]| v.iter().zip(&lam).map(|(x, l)| l * x.abs()).sum::<f64>();
    let optimality = |v: &[f64], g: &[f64]| -> f64 {
        v.iter()
            .zip(g)
            .zip(&lam)
            .map(|((&x, &gj), &l)| {
                if x != 0.0 {
                    (gj + l * x.signum()).abs()
                } else {
                    (gj.abs() - l).max(0.0)
                }
            })
            .fold(0.0, f64::max)
            / total
    };

    let mut x = vec![0.0; n];
    x[0] = (pos / neg).ln();
    let mut y = x.clone();
    let mut t_acc: f64 = 1.0;
    let mut step = 4.0 / total;
    let mut grad = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut f_prev = st.nll(&x, None) + penalty(&x);

    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let fy = st.nll(&y, Some(&mut grad));
        // Backtracking on the smooth part at the extrapolated point.
        let mut cand;
        loop {
            cand = (0..n)
                .map(|j| soft_threshold(y[j] - step * grad[j], step * lam[j]))
                .collect::<Vec<_>>();
            let diff: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let quad = fy
                + diff.iter().zip(&grad).map(|(d, g)| d * g).sum::<f64>()
                + diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if st.nll(&cand, None) <= quad + 1e-12 * quad.abs() || step < 1e-300 {
                break;
            }
            step *= 0.5;
        }
        let f_cand = st.nll(&cand, None) + penalty(&cand);
        // Adaptive restart keeps the accelerated iteration monotone.
        let (next, restarted) = if f_cand > f_prev {
            (x.clone(), true)
        } else {
            (cand, false)
        };
        let t_next = if restarted {
            1.0
        } else {
            (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt()) / 2.0
        };
        let momentum = if restarted {
            0.0
        } else {
            (t_acc - 1.0) / t_next
        };
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        x = next;
        t_acc = t_next;
        f_prev = f_prev.min(f_cand);
        if restarted {
            step *= 0.5;
            continue;
        }
        step *= 1.2;
        st.nll(&x, Some(&mut grad));
        if optimality(&x, &grad) <= cfg.tol {
            converged = true;
            break;
        }
    }

    // Back to original coordinates.
    let mut coef = vec![0.0; n];
    let mut intercept = x[0];
    for j in 1..n {
        coef[j] = x[j] / st.scale[j - 1];
        intercept -= coef[j] * st.center[j - 1];
    }
    coef[0] = intercept;
    let model = ChurnModel::from_coefficients(&data.feature_names, &coef, cfg.l1_lambda);

    let mut warnings = Vec::new();
    if cfg.l1_lambda == 0.0 && separates(data, &coef) {
        warnings.push(FitWarning::SeparableData);
    }
    if !converged {
        warnings.push(FitWarning::NotConverged);
    }
    Ok(ChurnFit {
        model,
        iterations,
        converged,
        warnings,
    })
}

fn separates(data: &ChurnDataset, coef: &[f64]) -> bool {
    data.rows.iter().all(|r| {
        let z = coef[0]
            + r.design()
                .iter()
                .zip(&coef[1..])
                .map(|(x, c)| x * c)
                .sum::<f64>();
        if r.label {
            z > 0.0
        } else {
            z < 0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{build_panel, FeatureKind, FeatureSchema, FeatureValue, SubscriptionRecord};

    fn model(t0: f64, t1: f64) -> ChurnModel {
        ChurnModel {
            theta0: t0,
            theta1: t1,
            theta2: 0.0,
            theta3: vec![("usage".into(), 0.0)],
            theta4: 0.0,
            l1_lambda: 0.0,
        }
    }

    #[test]
    fn zero_coefficients_give_one_half() {
        assert_eq!(
            predict_churn(&model(0.0, 0.0), 30.0, 30.0, &[1.0], 4.0).unwrap(),
            0.5
        );
    }

    #[test]
    fn intercept_only_probability() {
        let p = predict_churn(&model(-2.0, 0.0), 30.0, 30.0, &[1.0], 4.0).unwrap();
        assert!((p - 0.119_202_922_022_117_6).abs() < 1e-12);
    }

    #[test]
    fn schema_mismatch_on_feature_count() {
        assert!(matches!(
            predict_churn(&model(0.0, 0.0), 1.0, 1.0, &[], 0.0),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn positive_price_coefficient_is_monotone() {
        let m = model(-3.0, 0.05);
        let ps: Vec<f64> = (1..50)
            .map(|p| predict_churn(&m, p as f64, 10.0, &[0.0], 0.0).unwrap())
            .collect();
        assert!(ps.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn extreme_scores_stay_in_open_interval() {
        let m = model(0.0, 1.0);
        let hi = predict_churn(&m, 700.0, 0.0, &[0.0], 0.0).unwrap();
        let lo = predict_churn(&m, -700.0, 0.0, &[0.0], 0.0).unwrap();
        assert!(hi <= 1.0 && lo > 0.0 && lo.is_finite());
    }

    #[test]
    fn json_keeps_feature_order() {
        let m = ChurnModel {
            theta0: -3.0,
            theta1: 0.02,
            theta2: 0.01,
            theta3: vec![("zeta".into(), 0.1), ("alpha".into(), -0.2)],
            theta4: -0.05,
            l1_lambda: 0.001,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(
            s,
            r#"{"theta0":-3.0,"theta1":0.02,"theta2":0.01,"theta3":{"zeta":0.1,"alpha":-0.2},"theta4":-0.05,"lambda":0.001}"#
        );
        assert_eq!(serde_json::from_str::<ChurnModel>(&s).unwrap(), m);
    }

    fn panel(churned: &[u64]) -> SubscriptionPanel {
        let recs = churned
            .iter()
            .enumerate()
            .map(|(t, &c)| SubscriptionRecord {
                segment_id: "s".into(),
                period: t as i64,
                price: 10.0 + t as f64,
                quantity: 100,
                unit_cost: 1.0,
                churned: c,
                tenure: 2.0,
                covariates: [("usage".to_string(), FeatureValue::Num(0.5))].into(),
            })
            .collect();
        build_panel(recs, FeatureSchema::new([("usage", FeatureKind::Numeric)])).unwrap()
    }

    #[test]
    fn labels_exclude_truncated_windows() {
        let d = build_churn_labels(&panel(&[0, 0, 0, 0, 0, 0]), 3, None).unwrap();
        // periods 0..=2 have a full window; 3..=5 do not.
        assert_eq!(d.rows.len(), 3);
        assert!(d.rows.iter().all(|r| !r.label && r.weight == 100.0));
        assert_eq!(d.rows[0].prev_price, 10.0);
        assert_eq!(d.rows[1].prev_price, 10.0);
    }

    #[test]
    fn labels_split_cohort_by_window_churn() {
        let d = build_churn_labels(&panel(&[5, 1, 2, 0]), 2, None).unwrap();
        // Row at period 0 sees churn at periods 1 and 2.
        assert_eq!(
            d.rows[0],
            ChurnRow {
                price: 10.0,
                prev_price: 10.0,
                features: vec![0.5],
                tenure: 2.0,
                label: true,
                weight: 3.0
            }
        );
        assert_eq!(d.rows[1].weight, 97.0);
        assert!(!d.rows[1].label);
    }

    #[test]
    fn window_longer_than_panel_is_rejected() {
        assert!(matches!(
            build_churn_labels(&panel(&[0, 0, 0]), 3, None),
            Err(Error::WindowTooLong { .. })
        ));
    }

    fn tiny() -> ChurnDataset {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let ys = [false, false, true, false, true, false, true, true];
        ChurnDataset {
            feature_names: vec![],
            rows: xs
                .iter()
                .zip(ys)
                .map(|(&x, y)| ChurnRow {
                    price: x,
                    prev_price: 0.0,
                    features: vec![],
                    tenure: 0.0,
                    label: y,
                    weight: 1.0,
                })
                .collect(),
            window: 1,
        }
    }

    #[test]
    fn huge_lambda_zeroes_everything_but_intercept() {
        let fit = fit_churn(
            &tiny(),
            &ChurnFitConfig {
                l1_lambda: 1e6,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fit.model.nonzero_penalized(), 0);
        assert!((fit.model.theta0 - 0.0).abs() < 1e-9, "base rate is 1/2");
        assert!(fit.converged);
    }

    #[test]
    fn single_class_is_rejected() {
        let mut d = tiny();
        d.rows.iter_mut().for_each(|r| r.label = true);
        assert!(matches!(
            fit_churn(&d, &ChurnFitConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn separable_data_warns() {
        let mut d = tiny();
        for r in &mut d.rows {
            r.label = r.price > 4.5;
        }
        let fit = fit_churn(
            &d,
            &ChurnFitConfig {
                l1_lambda: 0.0,
                max_iter: 2000,
                tol: 1e-9,
            },
        )
        .unwrap();
        assert!(fit.warnings.contains(&FitWarning::SeparableData));
    }

    #[test]
    fn fit_is_deterministic() {
        let cfg = ChurnFitConfig {
            l1_lambda: 0.01,
            ..Default::default()
        };
        assert_eq!(
            fit_churn(&tiny(), &cfg).unwrap(),
            fit_churn(&tiny(), &cfg).unwrap()
        );
    }
}
