//! One-dimensional maximization helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `width` relative to its location
/// (with an absolute floor tied to the initial bracket). The returned point
/// is the best evaluated one, endpoints included.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, width: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let floor = (b - a).abs() * 1e-15;
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if (b - a) <= width * (a.abs() + b.abs()) || (b - a) <= floor {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Scan abscissae on `[lo, hi]`, dense near both ends and log-spaced.
pub fn scan_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(8);
    let span = hi - lo;
    let half = n / 2;
    let mut pts = Vec::with_capacity(n + 2);
    pts.push(lo);
    for i in 0..half {
        let t = (i as f64) / ((half - 1) as f64);
        pts.push(lo + span * 1e-8f64.powf(1.0 - t) * 0.5);
    }
    for i in 0..half {
        let t = (i as f64) / ((half - 1) as f64);
        pts.push(hi - span * 1e-8f64.powf(t) * 0.5);
    }
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite scan points"));
    pts.dedup();
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_max() {
        let (x, v) = golden_max(|x| -(x - 2.0) * (x - 2.0), 0.0, 10.0, 1e-12);
        assert!((x - 2.0).abs() < 1e-6);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn golden_finds_boundary_max() {
        let (x, _) = golden_max(|x| -x, 1.0, 5.0, 1e-12);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn scan_is_sorted_and_spans() {
        let p = scan_points(1.0, 3.0, 128);
        assert_eq!(p[0], 1.0);
        assert_eq!(*p.last().unwrap(), 3.0);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }
}
