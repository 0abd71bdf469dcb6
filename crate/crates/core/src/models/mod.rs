//! Classical classifiers over sparse TF-IDF rows: linear SVM, logistic
//! regression, CART decision tree, random forest, multinomial naive Bayes and
//! k-nearest neighbours.

mod knn;
mod linear_svm;
mod logistic;
mod naive_bayes;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSpace;
use crate::error::{Error, Result};
use crate::features::SparseMatrix;
use crate::rng::derive;

pub use knn::KnnModel;
pub use linear_svm::LinearSvmModel;
pub use logistic::LogisticModel;
pub use naive_bayes::NaiveBayesModel;
pub use tree::{DecisionTree, FeatureSubsample, RandomForest};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LinearSvm,
    LogisticRegression,
    DecisionTree,
    RandomForest,
    MultinomialNb,
    Knn,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::LinearSvm,
        Family::LogisticRegression,
        Family::DecisionTree,
        Family::RandomForest,
        Family::MultinomialNb,
        Family::Knn,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Family::LinearSvm => "SVM",
            Family::LogisticRegression => "LR",
            Family::DecisionTree => "DT",
            Family::RandomForest => "RF",
            Family::MultinomialNb => "NB",
            Family::Knn => "KNN",
        }
    }

    /// Families that accept `class_weight = balanced`.
    pub fn supports_class_weight(self) -> bool {
        !matches!(self, Family::MultinomialNb | Family::Knn)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "svm" | "linear-svm" => Ok(Family::LinearSvm),
            "lr" | "logistic-regression" => Ok(Family::LogisticRegression),
            "dt" | "decision-tree" => Ok(Family::DecisionTree),
            "rf" | "random-forest" => Ok(Family::RandomForest),
            "nb" | "multinomial-nb" => Ok(Family::MultinomialNb),
            "knn" => Ok(Family::Knn),
            other => Err(Error::Config(format!("unknown classifier family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    #[default]
    None,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

fn default_true() -> bool {
    true
}

/// Family-specific hyperparameters. Each variant only carries the parameters
/// that family accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyParams {
    LinearSvm {
        c: f64,
        max_iter: usize,
    },
    LogisticRegression {
        c: f64,
        max_iter: usize,
    },
    DecisionTree {
        max_depth: usize,
        #[serde(default)]
        max_features: FeatureSubsample,
    },
    RandomForest {
        n_estimators: usize,
        max_depth: usize,
        #[serde(default = "default_true")]
        bootstrap: bool,
        #[serde(default = "FeatureSubsample::sqrt")]
        max_features: FeatureSubsample,
    },
    MultinomialNb {
        alpha: f64,
    },
    Knn {
        n_neighbors: usize,
        weights: KnnWeights,
    },
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::LinearSvm { .. } => Family::LinearSvm,
            FamilyParams::LogisticRegression { .. } => Family::LogisticRegression,
            FamilyParams::DecisionTree { .. } => Family::DecisionTree,
            FamilyParams::RandomForest { .. } => Family::RandomForest,
            FamilyParams::MultinomialNb { .. } => Family::MultinomialNb,
            FamilyParams::Knn { .. } => Family::Knn,
        }
    }

    /// Reasonable defaults, each drawn from the tuning grid.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::LinearSvm => FamilyParams::LinearSvm { c: 1.0, max_iter: 1000 },
            Family::LogisticRegression => FamilyParams::LogisticRegression { c: 10.0, max_iter: 1000 },
            Family::DecisionTree => FamilyParams::DecisionTree {
                max_depth: 100,
                max_features: FeatureSubsample::All,
            },
            Family::RandomForest => FamilyParams::RandomForest {
                n_estimators: 100,
                max_depth: 100,
                bootstrap: true,
                max_features: FeatureSubsample::Sqrt,
            },
            Family::MultinomialNb => FamilyParams::MultinomialNb { alpha: 0.1 },
            Family::Knn => FamilyParams::Knn {
                n_neighbors: 5,
                weights: KnnWeights::Distance,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Map<String, serde_json::Value>")]
pub struct ClassifierConfig {
    #[serde(flatten)]
    pub params: FamilyParams,
    #[serde(default)]
    pub class_weight: ClassWeight,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Deserialize)]
struct RawConfig {
    #[serde(flatten)]
    params: FamilyParams,
    #[serde(default)]
    class_weight: ClassWeight,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<serde_json::Map<String, serde_json::Value>> for ClassifierConfig {
    type Error = String;

    fn try_from(map: serde_json::Map<String, serde_json::Value>) -> std::result::Result<Self, String> {
        let family = map
            .get("family")
            .and_then(|f| f.as_str())
            .ok_or("classifier config needs a `family`")?;
        let allowed: &[&str] = match family {
            "linear-svm" | "logistic-regression" => &["c", "max_iter"],
            "decision-tree" => &["max_depth", "max_features"],
            "random-forest" => &["n_estimators", "max_depth", "bootstrap", "max_features"],
            "multinomial-nb" => &["alpha"],
            "knn" => &["n_neighbors", "weights"],
            other => return Err(format!("unknown classifier family `{other}`")),
        };
        if let Some(bad) = map
            .keys()
            .find(|k| !["family", "class_weight", "seed"].contains(&k.as_str()) && !allowed.contains(&k.as_str()))
        {
            return Err(format!("`{bad}` is not a parameter of {family}"));
        }
        let raw: RawConfig = serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| e.to_string())?;
        Ok(ClassifierConfig {
            params: raw.params,
            class_weight: raw.class_weight,
            seed: raw.seed,
        })
    }
}

impl ClassifierConfig {
    /// Defaults for a family; balanced class weights where the family supports them.
    pub fn new(family: Family, seed: u64) -> Self {
        ClassifierConfig {
            params: FamilyParams::default_for(family),
            class_weight: if family.supports_class_weight() {
                ClassWeight::Balanced
            } else {
                ClassWeight::None
            },
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.class_weight == ClassWeight::Balanced && !self.family().supports_class_weight() {
            return bad("class_weight is not a parameter of this family");
        }
        match self.params {
            FamilyParams::LinearSvm { c, max_iter } | FamilyParams::LogisticRegression { c, max_iter } => {
                if c.is_nan() || c <= 0.0 || max_iter == 0 {
                    return bad("C must be positive and max_iter >= 1");
                }
            }
            FamilyParams::DecisionTree { max_depth, .. } => {
                if max_depth == 0 {
                    return bad("max_depth must be >= 1");
                }
            }
            FamilyParams::RandomForest {
                n_estimators,
                max_depth,
                ..
            } => {
                if n_estimators == 0 || max_depth == 0 {
                    return bad("n_estimators and max_depth must be >= 1");
                }
            }
            FamilyParams::MultinomialNb { alpha } => {
                if alpha.is_nan() || alpha <= 0.0 {
                    return bad("alpha must be positive");
                }
            }
            FamilyParams::Knn { n_neighbors, .. } => {
                if n_neighbors == 0 {
                    return bad("n_neighbors must be >= 1");
                }
            }
        }
        Ok(())
    }
}

/// `n_samples / (n_classes * count(c))` for every class of the space.
pub fn class_weights_balanced(space: &LabelSpace) -> BTreeMap<String, f64> {
    let n = space.total() as f64;
    let k = space.len() as f64;
    space
        .counts
        .iter()
        .map(|(c, &count)| (c.clone(), n / (k * count as f64)))
        .collect()
}

/// Per-class weights indexed like `labels`.
pub(crate) fn class_weight_vector(y: &[usize], n_classes: usize, mode: ClassWeight) -> Vec<f64> {
    match mode {
        ClassWeight::None => vec![1.0; n_classes],
        ClassWeight::Balanced => {
            let mut counts = vec![0usize; n_classes];
            for &c in y {
                counts[c] += 1;
            }
            let n = y.len() as f64;
            counts
                .iter()
                .map(|&c| if c == 0 { 0.0 } else { n / (n_classes as f64 * c as f64) })
                .collect()
        }
    }
}

/// Lowest index among the maxima.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnedParams {
    LinearSvm(LinearSvmModel),
    LogisticRegression(LogisticModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    MultinomialNb(NaiveBayesModel),
    Knn(KnnModel),
}

/// A trained classifier for one label category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format_version: u32,
    pub config: ClassifierConfig,
    /// Sorted class labels; predictions index into this list.
    pub labels: Vec<String>,
    pub n_features: usize,
    pub params: LearnedParams,
}

pub fn train<S: AsRef<str>>(
    config: &ClassifierConfig,
    x: &SparseMatrix,
    y: &[S],
) -> Result<ClassifierModel> {
    config.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            actual: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Training("no training rows".into()));
    }
    let mut labels: Vec<String> = y.iter().map(|s| s.as_ref().to_string()).collect();
    labels.sort();
    labels.dedup();
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let yi: Vec<usize> = y.iter().map(|s| index[s.as_ref()]).collect();
    let k = labels.len();
    let cw = class_weight_vector(&yi, k, config.class_weight);
    let family = config.family();
    if k < 2 && matches!(family, Family::LinearSvm | Family::LogisticRegression) {
        return Err(Error::Training(format!(
            "{family} needs at least two distinct labels, got {k}"
        )));
    }

    let params = match config.params {
        FamilyParams::LinearSvm { c, max_iter } => LearnedParams::LinearSvm(
            linear_svm::fit(x, &yi, k, &cw, c, max_iter, config.seed),
        ),
        FamilyParams::LogisticRegression { c, max_iter } => {
            LearnedParams::LogisticRegression(logistic::fit(x, &yi, k, &cw, c, max_iter))
        }
        FamilyParams::DecisionTree {
            max_depth,
            max_features,
        } => {
            let weights: Vec<f64> = yi.iter().map(|&c| cw[c]).collect();
            LearnedParams::DecisionTree(DecisionTree::fit(
                x,
                &yi,
                &weights,
                k,
                max_depth,
                max_features,
                derive(config.seed, 0),
            ))
        }
        FamilyParams::RandomForest {
            n_estimators,
            max_depth,
            bootstrap,
            max_features,
        } => LearnedParams::RandomForest(RandomForest::fit(
            x,
            &yi,
            &cw,
            k,
            n_estimators,
            max_depth,
            bootstrap,
            max_features,
            config.seed,
        )),
        FamilyParams::MultinomialNb { alpha } => {
            LearnedParams::MultinomialNb(NaiveBayesModel::fit(x, &yi, k, alpha))
        }
        FamilyParams::Knn {
            n_neighbors,
            weights,
        } => LearnedParams::Knn(KnnModel::fit(x, &yi, n_neighbors, weights)),
    };
    Ok(ClassifierModel {
        format_version: MODEL_FORMAT_VERSION,
        config: config.clone(),
        labels,
        n_features: x.n_cols(),
        params,
    })
}

impl ClassifierModel {
    pub fn family(&self) -> Family {
        self.config.family()
    }

    /// Predicted label index per row.
    pub fn predict_indices(&self, x: &SparseMatrix) -> Result<Vec<usize>> {
        let tolerant = matches!(
            self.params,
            LearnedParams::DecisionTree(_) | LearnedParams::RandomForest(_)
        );
        if x.n_cols() != self.n_features && !(tolerant && x.n_cols() > self.n_features) {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.n_cols(),
            });
        }
        Ok(match &self.params {
            LearnedParams::LinearSvm(m) => m.predict(x),
            LearnedParams::LogisticRegression(m) => m.predict(x),
            LearnedParams::DecisionTree(m) => x.rows().map(|r| m.predict_row(&r)).collect(),
            LearnedParams::RandomForest(m) => x.rows().map(|r| m.predict_row(&r)).collect(),
            LearnedParams::MultinomialNb(m) => m.predict(x),
            LearnedParams::Knn(m) => m.predict(x),
        })
    }

    pub fn predict(&self, x: &SparseMatrix) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(x)?
            .into_iter()
            .map(|i| self.labels[i].clone())
            .collect())
    }

    /// Class probabilities, available for naive Bayes and logistic regression.
    pub fn predict_proba(&self, x: &SparseMatrix) -> Result<Option<Vec<Vec<f64>>>> {
        if x.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.n_cols(),
            });
        }
        Ok(match &self.params {
            LearnedParams::MultinomialNb(m) => Some(x.rows().map(|r| m.proba_row(&r)).collect()),
            LearnedParams::LogisticRegression(m) => Some(x.rows().map(|r| m.proba_row(&r)).collect()),
            _ => None,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(s)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion(header.format_version));
        }
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
pub(crate) mod testdata {
    use crate::features::SparseMatrix;
    use crate::rng::seeded;
    use rand::Rng;

    /// `per_class` rows for each of `k` classes; class `c` puts its mass on a
    /// disjoint block of 4 columns plus a little shared noise.
    pub fn separable(k: usize, per_class: usize, seed: u64) -> (SparseMatrix, Vec<String>) {
        let mut rng = seeded(seed);
        let n_cols = 4 * k + 4;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for c in 0..k {
            for _ in 0..per_class {
                let mut row: Vec<(usize, f64)> = Vec::new();
                for j in 0..4 {
                    if rng.random_bool(0.7) {
                        row.push((4 * c + j, rng.random_range(0.5..1.0)));
                    }
                }
                if row.is_empty() {
                    row.push((4 * c, 1.0));
                }
                row.push((4 * k + rng.random_range(0..4), rng.random_range(0.0..0.2)));
                let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
                row.iter_mut().for_each(|(_, v)| *v /= norm);
                rows.push(row);
                y.push(format!("class{c}"));
            }
        }
        (SparseMatrix::from_rows(n_cols, rows), y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{compute_label_space, record, Category};
    use approx::assert_abs_diff_eq;

    fn accuracy(pred: &[String], y: &[String]) -> f64 {
        pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    #[test]
    fn balanced_weights() {
        let recs: Vec<_> = ["A", "A", "A", "B"]
            .iter()
            .enumerate()
            .map(|(i, l)| record(&i.to_string(), "", "", [l, l, l, l]))
            .collect();
        let w = class_weights_balanced(&compute_label_space(&recs, Category::Hazard));
        assert_abs_diff_eq!(w["A"], 4.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w["B"], 2.0, epsilon = 1e-12);

        let recs: Vec<_> = ["A", "A", "B", "B"]
            .iter()
            .enumerate()
            .map(|(i, l)| record(&i.to_string(), "", "", [l, l, l, l]))
            .collect();
        let w = class_weights_balanced(&compute_label_space(&recs, Category::Hazard));
        assert_eq!((w["A"], w["B"]), (1.0, 1.0));

        let recs = vec![record("0", "", "", ["A"; 4]); 5];
        let w = class_weights_balanced(&compute_label_space(&recs, Category::Hazard));
        assert_eq!(w["A"], 1.0);
    }

    #[test]
    fn every_family_fits_separable_clusters() {
        let (x, y) = testdata::separable(2, 40, 5);
        for family in Family::ALL {
            let cfg = ClassifierConfig::new(family, 7);
            let model = train(&cfg, &x, &y).unwrap();
            let acc = accuracy(&model.predict(&x).unwrap(), &y);
            assert!(acc >= 0.99, "{family}: training accuracy {acc}");
        }
    }

    #[test]
    fn deterministic_predictions() {
        let (x, y) = testdata::separable(3, 20, 1);
        for family in Family::ALL {
            let cfg = ClassifierConfig::new(family, 3);
            let a = train(&cfg, &x, &y).unwrap();
            let b = train(&cfg, &x, &y).unwrap();
            assert_eq!(a, b, "{family}");
        }
    }

    #[test]
    fn single_class_rejected_for_discriminative() {
        let x = SparseMatrix::from_dense(&[vec![1.0], vec![0.5]]);
        let y = ["A", "A"];
        for family in [Family::LinearSvm, Family::LogisticRegression] {
            let err = train(&ClassifierConfig::new(family, 0), &x, &y).unwrap_err();
            assert!(err.to_string().contains("two distinct labels"), "{err}");
        }
        let nb = train(&ClassifierConfig::new(Family::MultinomialNb, 0), &x, &y).unwrap();
        assert_eq!(nb.predict(&x).unwrap(), ["A", "A"]);
    }

    #[test]
    fn dimension_mismatch() {
        let x = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            train(&ClassifierConfig::new(Family::Knn, 0), &x, &["A"]),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = train(&ClassifierConfig::new(Family::Knn, 0), &x, &["A", "B"]).unwrap();
        let wide = SparseMatrix::from_dense(&[vec![1.0, 0.0, 3.0]]);
        assert!(m.predict(&wide).is_err());
        let t = train(&ClassifierConfig::new(Family::DecisionTree, 0), &x, &["A", "B"]).unwrap();
        assert_eq!(t.predict(&wide).unwrap(), ["A"]);
    }

    #[test]
    fn empty_input_predicts_nothing() {
        let (x, y) = testdata::separable(2, 5, 0);
        let m = train(&ClassifierConfig::new(Family::LogisticRegression, 0), &x, &y).unwrap();
        assert!(m.predict(&SparseMatrix::empty(x.n_cols())).unwrap().is_empty());
    }

    #[test]
    fn closed_world_labels() {
        let (x, y) = testdata::separable(2, 10, 2);
        let probe = SparseMatrix::from_rows(x.n_cols(), vec![vec![(x.n_cols() - 1, 1.0)], vec![]]);
        for family in Family::ALL {
            let m = train(&ClassifierConfig::new(family, 0), &x, &y).unwrap();
            for p in m.predict(&probe).unwrap() {
                assert!(m.labels.contains(&p));
            }
        }
    }

    #[test]
    fn invalid_parameter_combinations() {
        let mut cfg = ClassifierConfig::new(Family::MultinomialNb, 0);
        cfg.class_weight = ClassWeight::Balanced;
        assert!(cfg.validate().is_err());
        let cfg = ClassifierConfig {
            params: FamilyParams::LinearSvm { c: 0.0, max_iter: 10 },
            class_weight: ClassWeight::None,
            seed: 0,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let (x, y) = testdata::separable(2, 10, 4);
        for family in Family::ALL {
            let m = train(&ClassifierConfig::new(family, 1), &x, &y).unwrap();
            let back = ClassifierModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        }
        let m = train(&ClassifierConfig::new(Family::MultinomialNb, 1), &x, &y).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["format_version"] = 99.into();
        assert!(matches!(
            ClassifierModel::from_json(&v.to_string()),
            Err(Error::FormatVersion(99))
        ));
    }

    #[test]
    fn config_json_shape() {
        let cfg = ClassifierConfig::new(Family::LinearSvm, 2025);
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(s, r#"{"family":"linear-svm","c":1.0,"max_iter":1000,"class_weight":"balanced","seed":2025}"#);
        let back: ClassifierConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let foreign = r#"{"family":"multinomial-nb","alpha":1.0,"n_neighbors":3}"#;
        let err = serde_json::from_str::<ClassifierConfig>(foreign).unwrap_err();
        assert!(err.to_string().contains("n_neighbors"), "{err}");
    }

    #[test]
    fn balanced_weights_do_not_change_equal_support_decision() {
        let (x, y) = testdata::separable(3, 15, 9);
        for family in [Family::LinearSvm, Family::LogisticRegression, Family::DecisionTree] {
            let mut a = ClassifierConfig::new(family, 4);
            a.class_weight = ClassWeight::Balanced;
            let mut b = a.clone();
            b.class_weight = ClassWeight::None;
            let pa = train(&a, &x, &y).unwrap().predict(&x).unwrap();
            let pb = train(&b, &x, &y).unwrap().predict(&x).unwrap();
            assert_eq!(pa, pb, "{family}");
        }
    }
}
