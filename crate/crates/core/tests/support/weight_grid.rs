//! Grid-search oracle for the weight step, shared with the acceptance suite.

/// Best `b·w` along the ray through the unit direction `u`, within `{‖w‖₂ ≤ 1, ‖w‖₁ ≤ s}`.
fn ray_value(b: &[f64], u: &[f64], s: f64) -> f64 {
    let l1: f64 = u.iter().sum();
    let rho = if l1 > 0.0 { (s / l1).min(1.0) } else { 1.0 };
    let dot: f64 = b.iter().zip(u).map(|(x, y)| x * y).sum();
    (rho * dot).max(0.0)
}

fn direction(angles: &[f64]) -> Vec<f64> {
    match angles {
        [t] => vec![t.cos(), t.sin()],
        [t, ph] => vec![t.cos() * ph.cos(), t.cos() * ph.sin(), t.sin()],
        _ => unreachable!(),
    }
}

/// 1-D grid search on `[0, π/2]` followed by repeated local zooms around the best few points.
fn zoom_max(f: &mut dyn FnMut(f64) -> f64, coarse: usize) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut cands: Vec<(f64, f64)> = (0..=coarse)
        .map(|i| {
            let t = half_pi * i as f64 / coarse as f64;
            (f(t), t)
        })
        .collect();
    let mut step = half_pi / coarse as f64;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..12 {
        cands.sort_by(|a, c| c.0.total_cmp(&a.0));
        cands.truncate(4);
        best = best.max(cands[0].0);
        let centres: Vec<f64> = cands.iter().map(|c| c.1).collect();
        for c in centres {
            for i in -10..=10 {
                let t = (c + i as f64 * step / 5.0).clamp(0.0, half_pi);
                cands.push((f(t), t));
            }
        }
        step /= 5.0;
    }
    cands.iter().map(|c| c.0).fold(best, f64::max)
}

/// Grid search over the nonnegative orthant of the unit sphere. The feasible set is
/// convex, so the ray value is unimodal along each angle and nested 1-D zooms converge.
pub fn grid_oracle(b: &[f64], s: f64) -> f64 {
    match b.len() {
        2 => zoom_max(&mut |t| ray_value(b, &direction(&[t]), s), 2000),
        3 => zoom_max(&mut |ph| zoom_max(&mut |t| ray_value(b, &direction(&[t, ph]), s), 200), 100),
        _ => unreachable!(),
    }
}
