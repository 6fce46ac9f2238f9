use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("x values must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
}

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, SplineError> {
        let n = points.len();
        if n < 3 {
            return Err(SplineError::TooFewPoints(n));
        }
        if let Some(i) = points
            .iter()
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(SplineError::NonFinite(i));
        }
        if let Some(i) = points.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(SplineError::NotIncreasing(i + 1));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();

        // Thomas algorithm on the interior equations
        //   h[i-1] m[i-1] + 2 (h[i-1] + h[i]) m[i] + h[i] m[i+1] = 6 (s[i] - s[i-1])
        let interior = n - 2;
        let mut diag = vec![0.0; interior];
        let mut rhs = vec![0.0; interior];
        for j in 0..interior {
            let i = j + 1;
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            rhs[j] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        for j in 1..interior {
            let w = h[j] / diag[j - 1];
            diag[j] -= w * h[j];
            rhs[j] -= w * rhs[j - 1];
        }
        let mut m = vec![0.0; n];
        for j in (0..interior).rev() {
            let upper = if j + 1 < interior {
                h[j + 1] * m[j + 2]
            } else {
                0.0
            };
            m[j + 1] = (rhs[j] - upper) / diag[j];
        }
        Ok(Self { xs, ys, m })
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    /// Evaluates the spline; outside the knot range the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let seg = self.xs[1..n - 1].partition_point(|&k| k <= x);
        let (x0, x1) = (self.xs[seg], self.xs[seg + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[seg]
            + b * self.ys[seg + 1]
            + ((a * a * a - a) * self.m[seg] + (b * b * b - b) * self.m[seg + 1]) * h * h / 6.0
    }
}

/// Natural cubic spline through `points`, sampled at `resolution` evenly
/// spaced abscissae plus every knot.
pub fn cubic_trend(
    points: &[(f64, f64)],
    resolution: usize,
) -> Result<Vec<(f64, f64)>, SplineError> {
    let spline = NaturalCubicSpline::new(points)?;
    let (lo, hi) = (points[0].0, points[points.len() - 1].0);
    let mut xs: Vec<f64> = (0..resolution.max(2))
        .map(|i| lo + (hi - lo) * i as f64 / (resolution.max(2) - 1) as f64)
        .collect();
    xs.extend(points.iter().map(|p| p.0));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    Ok(xs
        .into_iter()
        .map(|x| match points.iter().find(|p| p.0 == x) {
            Some(&(_, y)) => (x, y),
            None => (x, spline.eval(x)),
        })
        .collect())
}
