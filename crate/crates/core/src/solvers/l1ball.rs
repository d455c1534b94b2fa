/// Euclidean projection onto `{u : ‖u‖₁ ≤ radius}` (sort-based, `O(n log n)`).
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius >= 0.0, "radius must be nonnegative");
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    if radius == 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &mag) in mags.iter().enumerate() {
        cumsum += mag;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if mag > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inside_ball_is_unchanged() {
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
    }

    #[test]
    fn known_projection() {
        let p = project_l1_ball(&[3.0, -1.0, 0.5], 2.0);
        // θ = 1: (2, 0, 0)
        assert!((p[0] - 2.0).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
        let p = project_l1_ball(&[1.0, 1.0], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_radius() {
        assert_eq!(project_l1_ball(&[1.0, -2.0], 0.0), vec![0.0, 0.0]);
    }
}
