//! Deterministic quadrature rules.

use crate::error::{invalid, Result};

/// Gauss-Hermite rule for the weight `exp(-x²)`: nodes ascending, weights sum to √π.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(invalid("n", "Gauss-Hermite rule needs at least one node"));
    }
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        // Initial guesses for the largest roots first.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            // Orthonormal Hermite recurrence.
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(invalid("n", format!("Gauss-Hermite root {i} did not converge")));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    Ok((x, w))
}

/// Gauss-Hermite rule for a normal distribution `N(mean, sigma²)`; weights sum to one.
pub fn normal_rule(n: usize, mean: f64, sigma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let (x, w) = gauss_hermite(n)?;
    let norm = std::f64::consts::PI.sqrt();
    let nodes = x.iter().map(|xi| mean + std::f64::consts::SQRT_2 * sigma * xi).collect();
    let weights = w.iter().map(|wi| wi / norm).collect();
    Ok((nodes, weights))
}
