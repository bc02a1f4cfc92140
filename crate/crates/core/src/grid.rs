//! Rectilinear 2-D lookup with hull clamping.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

impl FromStr for Interpolation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bilinear" => Ok(Interpolation::Bilinear),
            "nearest" => Ok(Interpolation::Nearest),
            _ => Err(format!("unknown interpolation `{s}`")),
        }
    }
}

/// Bracketing indices and the weight of the upper one, clamped to the axis.
pub(crate) fn bracket(axis: &[f64], v: f64) -> (usize, usize, f64) {
    debug_assert!(!axis.is_empty());
    let last = axis.len() - 1;
    if v <= axis[0] {
        return (0, 0, 0.0);
    }
    if v >= axis[last] {
        return (last, last, 0.0);
    }
    let hi = axis.partition_point(|&a| a <= v);
    let lo = hi - 1;
    let w = (v - axis[lo]) / (axis[hi] - axis[lo]);
    (lo, hi, w)
}

/// Cell weights `(row, col, weight)` for a query against `rows` × `cols`.
pub(crate) fn weights(
    rows: &[f64],
    cols: &[f64],
    r: f64,
    c: f64,
    mode: Interpolation,
) -> Vec<(usize, usize, f64)> {
    let (r0, r1, wr) = bracket(rows, r);
    let (c0, c1, wc) = bracket(cols, c);
    match mode {
        Interpolation::Nearest => {
            let ri = if wr > 0.5 { r1 } else { r0 };
            let ci = if wc > 0.5 { c1 } else { c0 };
            vec![(ri, ci, 1.0)]
        }
        Interpolation::Bilinear => vec![
            (r0, c0, (1.0 - wr) * (1.0 - wc)),
            (r0, c1, (1.0 - wr) * wc),
            (r1, c0, wr * (1.0 - wc)),
            (r1, c1, wr * wc),
        ],
    }
}

pub(crate) fn strictly_increasing(axis: &[f64]) -> bool {
    !axis.is_empty() && axis.iter().all(|v| v.is_finite()) && axis.windows(2).all(|w| w[0] < w[1])
}

/// Sorted distinct values, preserving exact floats from the input.
pub(crate) fn axis_from(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_clamps() {
        let axis = [1.0, 2.0, 4.0];
        assert_eq!(bracket(&axis, 0.0), (0, 0, 0.0));
        assert_eq!(bracket(&axis, 9.0), (2, 2, 0.0));
        assert_eq!(bracket(&axis, 3.0), (1, 2, 0.5));
        assert_eq!(bracket(&axis, 2.0), (1, 2, 0.0));
    }

    #[test]
    fn weights_sum_to_one() {
        let w = weights(&[0.0, 1.0], &[0.0, 10.0], 0.3, 7.0, Interpolation::Bilinear);
        let s: f64 = w.iter().map(|x| x.2).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
}
