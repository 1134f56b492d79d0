/// Max-min fair rates by progressive filling.
///
/// `users[i]` lists the resources entity `i` consumes, one unit of rate on
/// each. All unfrozen entities grow together until some resource runs out;
/// its users freeze and the rest keep growing. Entities without resources,
/// or touching a resource with no capacity, get zero.
pub fn progressive_fill(caps: &[f64], users: &[Vec<usize>]) -> Vec<f64> {
    let mut rate = vec![0.0; users.len()];
    let mut left: Vec<f64> = caps.iter().map(|c| c.max(0.0)).collect();
    let eps: Vec<f64> = caps.iter().map(|c| c.abs() * 1e-12).collect();
    let mut active: Vec<bool> =
        users.iter().map(|u| !u.is_empty() && u.iter().all(|&r| left[r] > eps[r])).collect();
    loop {
        let mut count = vec![0usize; caps.len()];
        for (i, u) in users.iter().enumerate() {
            if active[i] {
                for &r in u {
                    count[r] += 1;
                }
            }
        }
        let step = (0..caps.len())
            .filter(|&r| count[r] > 0)
            .map(|r| left[r] / count[r] as f64)
            .fold(f64::INFINITY, f64::min);
        if !step.is_finite() {
            break;
        }
        for (i, u) in users.iter().enumerate() {
            if active[i] {
                rate[i] += step;
                for &r in u {
                    left[r] -= step;
                }
            }
        }
        for (i, u) in users.iter().enumerate() {
            if active[i] && u.iter().any(|&r| left[r] <= eps[r]) {
                active[i] = false;
            }
        }
        for l in &mut left {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
    }
    rate
}
