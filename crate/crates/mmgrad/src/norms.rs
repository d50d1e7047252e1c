//! Function-norm objects over a space's measure: L^p and Morrey norms,
//! with the lattice property as a testable contract.

use thiserror::Error;

use crate::space::MetricMeasureSpace;

#[derive(Debug, Error)]
pub enum NormError {
    #[error("L^p exponent {0} outside [1, inf]")]
    LpRange(f64),
    #[error("Morrey parameters p={p}, q={q} outside 1 < p <= q < inf")]
    MorreyRange { p: f64, q: f64 },
    #[error("field has {got} values but the space has {want} points")]
    FieldLength { got: usize, want: usize },
}

/// An extended-real function on the points of a space. Values may be
/// `+inf` for gradient-type fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn constant(space: &MetricMeasureSpace, c: f64) -> Self {
        ScalarField { values: vec![c; space.len()] }
    }

    pub fn zeros(space: &MetricMeasureSpace) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_on(&self, space: &MetricMeasureSpace) -> Result<(), NormError> {
        if self.values.len() != space.len() {
            return Err(NormError::FieldLength { got: self.values.len(), want: space.len() });
        }
        Ok(())
    }

    /// Restriction to a subset of points, in subset order.
    pub fn restrict(&self, points: &[usize]) -> ScalarField {
        ScalarField { values: points.iter().map(|&x| self.values[x]).collect() }
    }
}

/// `a * b` under the convention `0 * inf = 0`.
pub fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Ratio `num / den` under the conventions `0/0 -> 0` and `pos/0 -> inf`.
pub fn ratio0(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// A lattice norm bound to a space's measure: either L^p or Morrey M^q_p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionNorm {
    Lp { p: f64 },
    Morrey { p: f64, q: f64 },
}

impl FunctionNorm {
    pub fn lp(p: f64) -> Result<Self, NormError> {
        if p.is_nan() || p < 1.0 {
            return Err(NormError::LpRange(p));
        }
        Ok(FunctionNorm::Lp { p })
    }

    pub fn morrey(p: f64, q: f64) -> Result<Self, NormError> {
        if !(p > 1.0 && p <= q && q < f64::INFINITY) {
            return Err(NormError::MorreyRange { p, q });
        }
        Ok(FunctionNorm::Morrey { p, q })
    }

    /// Parses the CLI norm spec string `lp:p` or `morrey:p:q`.
    /// `lp:inf` selects the essential supremum.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let parts: Vec<&str> = spec.split(':').collect();
        let parse_num = |s: &str| -> Result<f64, String> {
            if s == "inf" {
                Ok(f64::INFINITY)
            } else {
                s.parse::<f64>().map_err(|e| format!("bad exponent {s:?}: {e}"))
            }
        };
        match parts.as_slice() {
            ["lp", p] => FunctionNorm::lp(parse_num(p)?).map_err(|e| e.to_string()),
            ["morrey", p, q] => {
                FunctionNorm::morrey(parse_num(p)?, parse_num(q)?).map_err(|e| e.to_string())
            }
            _ => Err(format!("bad norm spec {spec:?}; expected lp:p or morrey:p:q")),
        }
    }

    pub fn evaluate(&self, space: &MetricMeasureSpace, field: &ScalarField) -> f64 {
        match *self {
            FunctionNorm::Lp { p } => lp_norm(space, field, p),
            FunctionNorm::Morrey { p, q } => morrey_norm(space, field, p, q),
        }
    }
}

/// Weighted p-th power sum over the given points, `0 * inf = 0`.
fn power_sum(space: &MetricMeasureSpace, field: &ScalarField, points: &[usize], p: f64) -> f64 {
    points
        .iter()
        .map(|&x| {
            let m = space.measure(x);
            if m == 0.0 {
                0.0
            } else {
                m * field.get(x).abs().powf(p)
            }
        })
        .sum()
}

/// The L^p norm with respect to the vertex measure. For `p = inf` the
/// essential supremum: the largest absolute value at a positive-measure
/// point. A `+inf` field value at a null point contributes nothing.
pub fn lp_norm(space: &MetricMeasureSpace, field: &ScalarField, p: f64) -> f64 {
    assert!(p >= 1.0, "L^p exponent must be at least 1");
    if p.is_infinite() {
        return (0..space.len())
            .filter(|&x| space.measure(x) > 0.0)
            .map(|x| field.get(x).abs())
            .fold(0.0, f64::max);
    }
    power_sum(space, field, &(0..space.len()).collect::<Vec<_>>(), p).powf(1.0 / p)
}

/// The Morrey norm: supremum over candidate balls of
/// `mu(B)^(1/q - 1/p) * (sum_B mu |f|^p)^(1/p)`. Balls of zero measure
/// contribute zero.
pub fn morrey_norm(space: &MetricMeasureSpace, field: &ScalarField, p: f64, q: f64) -> f64 {
    assert!(p > 1.0 && p <= q && q.is_finite(), "Morrey exponents need 1 < p <= q < inf");
    let mut best = 0.0f64;
    for ball in space.candidate_balls() {
        let mass = space.set_measure(&ball.members);
        if mass == 0.0 {
            continue;
        }
        let inner = power_sum(space, field, &ball.members, p).powf(1.0 / p);
        let weight = mass.powf(1.0 / q - 1.0 / p);
        best = best.max(mul0(weight, inner));
    }
    best
}

/// The lattice property on one pair: if `|g| <= |f|` at every
/// positive-measure point then `||g|| <= ||f||` must hold.
pub fn lattice_check(
    norm: &FunctionNorm,
    space: &MetricMeasureSpace,
    f: &ScalarField,
    g: &ScalarField,
) -> bool {
    let dominated = (0..space.len())
        .filter(|&x| space.measure(x) > 0.0)
        .all(|x| g.get(x).abs() <= f.get(x).abs());
    if !dominated {
        return true;
    }
    norm.evaluate(space, g) <= norm.evaluate(space, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricMeasureSpace;

    fn two_points(mu: [f64; 2]) -> MetricMeasureSpace {
        MetricMeasureSpace::build_explicit(
            vec!["x".into(), "y".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            mu.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn lp_norm_zero_field() {
        let s = two_points([1.0, 1.0]);
        assert_eq!(lp_norm(&s, &ScalarField::zeros(&s), 2.0), 0.0);
    }

    #[test]
    fn lp_norm_three_four_five() {
        let s = two_points([1.0, 1.0]);
        let f = ScalarField::new(vec![3.0, 4.0]);
        assert!((lp_norm(&s, &f, 2.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_ignores_infinite_value_on_null_set() {
        let s = two_points([1.0, 0.0]);
        let f = ScalarField::new(vec![0.0, f64::INFINITY]);
        assert_eq!(lp_norm(&s, &f, 1.0), 0.0);
        assert_eq!(lp_norm(&s, &f, f64::INFINITY), 0.0);
    }

    #[test]
    fn morrey_equals_lp_when_q_is_p() {
        let s = two_points([1.0, 2.0]);
        let f = ScalarField::new(vec![1.5, 0.25]);
        let lhs = morrey_norm(&s, &f, 2.0, 2.0);
        let rhs = lp_norm(&s, &f, 2.0);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn morrey_constant_field() {
        // For f == 1 and p < q the supremum is mu(B)^(1/q) over balls.
        let s = two_points([1.0, 2.0]);
        let f = ScalarField::constant(&s, 1.0);
        let want = 3.0f64.powf(1.0 / 3.0);
        assert!((morrey_norm(&s, &f, 2.0, 3.0) - want).abs() < 1e-12);
    }

    #[test]
    fn morrey_zero_field() {
        let s = two_points([1.0, 1.0]);
        assert_eq!(morrey_norm(&s, &ScalarField::zeros(&s), 2.0, 3.0), 0.0);
    }

    #[test]
    fn lattice_property_on_halved_field() {
        let s = two_points([1.0, 1.0]);
        let f = ScalarField::new(vec![2.0, 3.0]);
        let g = ScalarField::new(vec![1.0, 1.5]);
        for norm in [FunctionNorm::lp(2.0).unwrap(), FunctionNorm::morrey(2.0, 3.0).unwrap()] {
            assert!(lattice_check(&norm, &s, &f, &g));
            assert!(lattice_check(&norm, &s, &f, &f));
        }
    }

    #[test]
    fn norm_spec_parsing() {
        assert_eq!(FunctionNorm::parse("lp:2").unwrap(), FunctionNorm::Lp { p: 2.0 });
        assert_eq!(
            FunctionNorm::parse("morrey:2:3").unwrap(),
            FunctionNorm::Morrey { p: 2.0, q: 3.0 }
        );
        assert!(FunctionNorm::parse("lp:0.5").is_err());
        assert!(FunctionNorm::parse("morrey:3:2").is_err());
    }
}
