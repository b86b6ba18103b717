use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Constant,
    MonotoneIncreasing,
    MonotoneDecreasing,
    /// Nondecreasing, then nonincreasing.
    Unimodal,
    Irregular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub shape: Shape,
    /// 1-based index of the first maximum.
    pub peak: usize,
    /// 1-based indices where the direction of change flips.
    pub change_points: Vec<usize>,
}

/// Classifies a sequence by the signs of its consecutive differences.
pub fn check_local_monotonicity(values: &[f64]) -> ShapeReport {
    let peak = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) })
        .0
        + 1;
    let mut change_points = Vec::new();
    let mut dir = 0i8;
    for (i, w) in values.windows(2).enumerate() {
        let s = if w[1] > w[0] {
            1
        } else if w[1] < w[0] {
            -1
        } else {
            0
        };
        if s != 0 {
            if dir != 0 && s != dir {
                change_points.push(i + 1);
            }
            dir = s;
        }
    }
    let rises = values.windows(2).any(|w| w[1] > w[0]);
    let falls = values.windows(2).any(|w| w[1] < w[0]);
    let shape = match (rises, falls, change_points.len()) {
        (false, false, _) => Shape::Constant,
        (true, false, _) => Shape::MonotoneIncreasing,
        (false, true, _) => Shape::MonotoneDecreasing,
        (true, true, 1) if values.windows(2).take(change_points[0] - 1).all(|w| w[1] >= w[0]) => Shape::Unimodal,
        _ => Shape::Irregular,
    };
    ShapeReport {
        shape,
        peak,
        change_points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer_select::log_over_sqrt;

    #[test]
    fn examples() {
        assert_eq!(check_local_monotonicity(&[1.0, 2.0, 3.0]).shape, Shape::MonotoneIncreasing);
        let r = check_local_monotonicity(&[1.0, 3.0, 2.0, 1.0]);
        assert_eq!((r.shape, r.peak), (Shape::Unimodal, 2));
        let r = check_local_monotonicity(&log_over_sqrt(1000));
        assert_eq!((r.shape, r.peak), (Shape::Unimodal, 7));
        assert_eq!(check_local_monotonicity(&[1.0, 3.0, 2.0, 4.0]).shape, Shape::Irregular);
        assert_eq!(check_local_monotonicity(&[2.0, 2.0]).shape, Shape::Constant);
        assert_eq!(check_local_monotonicity(&[3.0, 1.0]).shape, Shape::MonotoneDecreasing);
        // Valley first: falls then rises.
        assert_eq!(check_local_monotonicity(&[3.0, 1.0, 2.0]).shape, Shape::Irregular);
    }
}
