//! Least-squares line fits used by growth and decay profiles.

/// `y ~ slope * x + intercept` with coefficient of determination `r2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares. Returns `None` for fewer than two points or when
/// all `x` coincide.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit { slope, intercept, r2 })
}

/// Fit of `ln y` against `ln x`.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let lx: alloc::vec::Vec<f64> = xs.iter().map(|&x| libm::log(x)).collect();
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    fit_line(&lx, &ly)
}

/// Fit of `ln y` against `x`.
pub fn fit_semi_log(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    fit_line(xs, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_slope() {
        let xs: alloc::vec::Vec<f64> = (1..=8).map(f64::from).collect();
        let ys: alloc::vec::Vec<f64> = xs.iter().map(|x| 5.0 * x * x * x).collect();
        let f = fit_log_log(&xs, &ys).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}
