use serde::{Deserialize, Serialize};

use crate::corpus::LabelSpace;

/// Summary of class supports in the layout of a pandas `describe()`:
/// sample standard deviation and linearly interpolated quartiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
    pub total: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn class_stats(space: &LabelSpace) -> ClassStats {
    let mut v: Vec<f64> = space.counts.values().map(|&c| c as f64).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return ClassStats {
            count: 0,
            mean: 0.0,
            std: 0.0,
            min: 0.0,
            q25: 0.0,
            q50: 0.0,
            q75: 0.0,
            max: 0.0,
            total: 0,
        };
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    ClassStats {
        count: n,
        mean,
        std,
        min: v[0],
        q25: quantile(&v, 0.25),
        q50: quantile(&v, 0.5),
        q75: quantile(&v, 0.75),
        max: v[n - 1],
        total: space.total(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Category;
    use approx::assert_abs_diff_eq;

    #[test]
    fn describe_like() {
        let counts = [("a", 1), ("b", 2), ("c", 3), ("d", 10)];
        let space = LabelSpace {
            category: Category::Hazard,
            classes: counts.iter().map(|c| c.0.to_string()).collect(),
            counts: counts.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        };
        let s = class_stats(&space);
        assert_eq!(s.count, 4);
        assert_eq!(s.total, 16);
        assert_eq!(s.mean, 4.0);
        // numpy: np.std([1,2,3,10], ddof=1)
        assert_abs_diff_eq!(s.std, 4.082_482_904_638_63, epsilon = 1e-12);
        assert_eq!(s.q25, 1.75);
        assert_eq!(s.q50, 2.5);
        assert_eq!(s.q75, 4.75);
    }
}
