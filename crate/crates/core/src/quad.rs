//! Adaptive Simpson quadrature on finite intervals.

/// Integrates f on [a, b] to the requested relative tolerance by
/// recursive Simpson bisection with Richardson acceptance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    // Coarse composite pass sets the tolerance scale; a single 3-point
    // estimate can miss an interior bump entirely and drive the
    // recursion to its depth cap chasing a near-zero target.
    const PANELS: usize = 32;
    let h = (b - a) / PANELS as f64;
    let mut edges = [0.0f64; PANELS + 1];
    for (i, e) in edges.iter_mut().enumerate() {
        *e = a + i as f64 * h;
    }
    edges[PANELS] = b;
    let fe: Vec<f64> = edges.iter().map(|&x| f(x)).collect();
    let mids: Vec<f64> = (0..PANELS)
        .map(|i| f(0.5 * (edges[i] + edges[i + 1])))
        .collect();
    let panel = |i: usize| (edges[i + 1] - edges[i]) / 6.0 * (fe[i] + 4.0 * mids[i] + fe[i + 1]);
    // sum of |panel| guards against cancellation in the total
    let scale: f64 = (0..PANELS).map(|i| panel(i).abs()).sum::<f64>().max(1e-300);
    let tol = rel_tol * scale / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            simpson_rec(
                f,
                edges[i],
                edges[i + 1],
                fe[i],
                mids[i],
                fe[i + 1],
                panel(i),
                tol,
                32,
            )
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
