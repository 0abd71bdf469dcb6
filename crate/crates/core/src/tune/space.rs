use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Analyzer, TfidfConfig, TokenizerKind};
use crate::models::{ClassWeight, ClassifierConfig, Family, FamilyParams, FeatureSubsample, KnnWeights};

/// One value of a search dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
    Pair([usize; 2]),
}

impl ParamValue {
    pub fn as_usize(&self) -> Option<usize> {
        match *self {
            ParamValue::Int(v) if v >= 0 => Some(v as usize),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(v) => Some(v as f64),
            ParamValue::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
            ParamValue::Pair([a, b]) => write!(f, "({a}, {b})"),
        }
    }
}

/// A sampled configuration: dimension name to value.
pub type TrialPoint = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub values: Vec<ParamValue>,
}

impl Dimension {
    pub fn new(name: &str, values: Vec<ParamValue>) -> Self {
        Dimension {
            name: name.to_string(),
            values,
        }
    }

    fn ints(name: &str, values: &[i64]) -> Self {
        Self::new(name, values.iter().map(|&v| ParamValue::Int(v)).collect())
    }

    fn floats(name: &str, values: &[f64]) -> Self {
        Self::new(name, values.iter().map(|&v| ParamValue::Float(v)).collect())
    }

    fn texts(name: &str, values: &[&str]) -> Self {
        Self::new(name, values.iter().map(|v| ParamValue::Text(v.to_string())).collect())
    }
}

/// Finite grid of named dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("search space has no dimensions".into()));
        }
        if let Some(d) = dims.iter().find(|d| d.values.is_empty()) {
            return Err(Error::Config(format!("dimension `{}` has no values", d.name)));
        }
        let mut names: Vec<&str> = dims.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate dimension name".into()));
        }
        Ok(SearchSpace { dims })
    }

    /// TF-IDF vectorizer dimensions.
    pub fn vectorizer_dims() -> Vec<Dimension> {
        let ngrams = [(1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5), (3, 5)];
        vec![
            Dimension::texts("analyzer", &["word", "char"]),
            Dimension::texts("tokenizer", &["default", "stopword-filtering"]),
            Dimension::ints("min_df", &[1, 2, 5]),
            Dimension::floats("max_df", &[0.1, 0.3, 0.5]),
            Dimension::ints("max_features", &[1000, 5000, 10000, 50000]),
            Dimension::new(
                "ngram_range",
                ngrams.iter().map(|&(a, b)| ParamValue::Pair([a, b])).collect(),
            ),
        ]
    }

    /// Classifier dimensions of one family.
    pub fn classifier_dims(family: Family) -> Vec<Dimension> {
        match family {
            Family::LinearSvm | Family::LogisticRegression => vec![
                Dimension::floats("c", &[0.1, 1.0, 5.0, 10.0]),
                Dimension::ints("max_iter", &[100, 1000, 5000]),
            ],
            Family::DecisionTree => vec![Dimension::ints("max_depth", &[100, 200, 300])],
            Family::RandomForest => vec![
                Dimension::ints("n_estimators", &[100, 200, 300]),
                Dimension::ints("max_depth", &[100, 1000, 5000]),
            ],
            Family::MultinomialNb => vec![Dimension::floats("alpha", &[0.01, 0.1, 1.0, 5.0])],
            Family::Knn => vec![
                Dimension::ints("n_neighbors", &[3, 5, 7, 9, 11]),
                Dimension::texts("weights", &["uniform", "distance"]),
            ],
        }
    }

    /// Vectorizer plus classifier grid for one family.
    pub fn for_family(family: Family) -> Self {
        let mut dims = Self::vectorizer_dims();
        dims.extend(Self::classifier_dims(family));
        SearchSpace { dims }
    }

    /// Fine-tuning grid for externally trained transformer models.
    pub fn transformer() -> Self {
        SearchSpace {
            dims: vec![
                Dimension::ints("batch_size", &[8, 16, 32]),
                Dimension::ints("epochs", &[3, 5, 10]),
                Dimension::texts("lr_scheduler", &["lin", "cos", "cosRestarts"]),
            ],
        }
    }

    pub fn size(&self) -> usize {
        self.dims.iter().map(|d| d.values.len()).product()
    }

    pub fn point(&self, choice: &[usize]) -> TrialPoint {
        self.dims
            .iter()
            .zip(choice)
            .map(|(d, &i)| (d.name.clone(), d.values[i].clone()))
            .collect()
    }

    pub fn contains(&self, point: &TrialPoint) -> bool {
        point.len() == self.dims.len()
            && self
                .dims
                .iter()
                .all(|d| point.get(&d.name).is_some_and(|v| d.values.contains(v)))
    }
}

fn get<'a>(point: &'a TrialPoint, name: &str) -> Result<&'a ParamValue> {
    point
        .get(name)
        .ok_or_else(|| Error::Config(format!("trial point lacks `{name}`")))
}

fn get_usize(point: &TrialPoint, name: &str) -> Result<usize> {
    get(point, name)?
        .as_usize()
        .ok_or_else(|| Error::Config(format!("`{name}` must be a non-negative integer")))
}

fn get_f64(point: &TrialPoint, name: &str) -> Result<f64> {
    get(point, name)?
        .as_f64()
        .ok_or_else(|| Error::Config(format!("`{name}` must be numeric")))
}

fn get_str<'a>(point: &'a TrialPoint, name: &str) -> Result<&'a str> {
    get(point, name)?
        .as_str()
        .ok_or_else(|| Error::Config(format!("`{name}` must be a string")))
}

/// Vectorizer settings of a point; missing dimensions keep their defaults.
pub fn tfidf_from_point(point: &TrialPoint) -> Result<TfidfConfig> {
    let mut cfg = TfidfConfig::default();
    if point.contains_key("analyzer") {
        cfg.analyzer = match get_str(point, "analyzer")? {
            "word" => Analyzer::Word,
            "char" => Analyzer::Char,
            other => return Err(Error::Config(format!("unknown analyzer `{other}`"))),
        };
    }
    if point.contains_key("tokenizer") {
        cfg.tokenizer = match get_str(point, "tokenizer")? {
            "default" => TokenizerKind::Default,
            "stopword-filtering" => TokenizerKind::StopwordFiltering,
            other => return Err(Error::Config(format!("unknown tokenizer `{other}`"))),
        };
    }
    if point.contains_key("min_df") {
        cfg.min_df = get_usize(point, "min_df")?;
    }
    if point.contains_key("max_df") {
        cfg.max_df = get_f64(point, "max_df")?;
    }
    if point.contains_key("max_features") {
        cfg.max_features = Some(get_usize(point, "max_features")?);
    }
    if let Some(v) = point.get("ngram_range") {
        let ParamValue::Pair([a, b]) = v else {
            return Err(Error::Config("`ngram_range` must be a pair".into()));
        };
        cfg.ngram_range = (*a, *b);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Classifier settings of a point for `family`.
pub fn classifier_from_point(
    point: &TrialPoint,
    family: Family,
    class_weight: ClassWeight,
    seed: u64,
) -> Result<ClassifierConfig> {
    let params = match family {
        Family::LinearSvm => FamilyParams::LinearSvm {
            c: get_f64(point, "c")?,
            max_iter: get_usize(point, "max_iter")?,
        },
        Family::LogisticRegression => FamilyParams::LogisticRegression {
            c: get_f64(point, "c")?,
            max_iter: get_usize(point, "max_iter")?,
        },
        Family::DecisionTree => FamilyParams::DecisionTree {
            max_depth: get_usize(point, "max_depth")?,
            max_features: FeatureSubsample::All,
        },
        Family::RandomForest => FamilyParams::RandomForest {
            n_estimators: get_usize(point, "n_estimators")?,
            max_depth: get_usize(point, "max_depth")?,
            bootstrap: true,
            max_features: FeatureSubsample::Sqrt,
        },
        Family::MultinomialNb => FamilyParams::MultinomialNb {
            alpha: get_f64(point, "alpha")?,
        },
        Family::Knn => FamilyParams::Knn {
            n_neighbors: get_usize(point, "n_neighbors")?,
            weights: match get_str(point, "weights")? {
                "uniform" => KnnWeights::Uniform,
                "distance" => KnnWeights::Distance,
                other => return Err(Error::Config(format!("unknown knn weights `{other}`"))),
            },
        },
    };
    let class_weight = if family.supports_class_weight() {
        class_weight
    } else {
        ClassWeight::None
    };
    let cfg = ClassifierConfig {
        params,
        class_weight,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Fine-tuning configuration for an external transformer run. Learning rate
/// and maximum token length are fixed.
pub fn external_model_config(point: &TrialPoint, model: &str, seed: u64) -> serde_json::Value {
    let mut obj = serde_json::Map::new();
    obj.insert("model".into(), model.into());
    obj.insert("seed".into(), seed.into());
    obj.insert("learning_rate".into(), 5.0e-5.into());
    obj.insert("max_length".into(), 128.into());
    for (k, v) in point {
        obj.insert(k.clone(), serde_json::to_value(v).expect("param values serialize"));
    }
    serde_json::Value::Object(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(SearchSpace::new(SearchSpace::vectorizer_dims()).unwrap().size(), 2 * 2 * 3 * 3 * 4 * 9);
        assert_eq!(SearchSpace::transformer().size(), 27);
        assert_eq!(SearchSpace::for_family(Family::Knn).dims.len(), 8);
    }

    #[test]
    fn every_grid_point_converts() {
        for family in Family::ALL {
            let space = SearchSpace::for_family(family);
            let n = space.dims.len();
            // walk the corners and a diagonal of the grid
            for offset in 0..12 {
                let choice: Vec<usize> = space
                    .dims
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (offset + i) % d.values.len())
                    .collect();
                assert_eq!(choice.len(), n);
                let p = space.point(&choice);
                assert!(space.contains(&p));
                tfidf_from_point(&p).unwrap();
                let c = classifier_from_point(&p, family, ClassWeight::Balanced, 1).unwrap();
                assert_eq!(c.family(), family);
            }
        }
    }

    #[test]
    fn param_value_json() {
        let p: TrialPoint = [
            ("c".to_string(), ParamValue::Float(1.0)),
            ("max_iter".to_string(), ParamValue::Int(100)),
            ("ngram_range".to_string(), ParamValue::Pair([1, 3])),
        ]
        .into_iter()
        .collect();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"c":1.0,"max_iter":100,"ngram_range":[1,3]}"#);
        assert_eq!(serde_json::from_str::<TrialPoint>(&s).unwrap(), p);
    }

    #[test]
    fn external_config_records_fixed_values() {
        let space = SearchSpace::transformer();
        let v = external_model_config(&space.point(&[1, 2, 0]), "roberta-base", 2024);
        assert_eq!(v["learning_rate"], 5.0e-5);
        assert_eq!(v["max_length"], 128);
        assert_eq!(v["batch_size"], 16);
        assert_eq!(v["epochs"], 10);
        assert_eq!(v["lr_scheduler"], "lin");
    }

    #[test]
    fn invalid_spaces() {
        assert!(SearchSpace::new(vec![]).is_err());
        assert!(SearchSpace::new(vec![Dimension::new("a", vec![])]).is_err());
        assert!(SearchSpace::new(vec![Dimension::ints("a", &[1]), Dimension::ints("a", &[2])]).is_err());
    }
}
