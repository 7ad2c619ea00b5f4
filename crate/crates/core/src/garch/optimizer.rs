//! Quasi-Newton (BFGS) minimizer with Armijo backtracking.

/// Objective returning value and gradient, or `None` outside its domain.
pub trait Objective {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsSettings {
    pub max_iterations: usize,
    /// Relative objective change that ends the run.
    pub tolerance: f64,
    /// Gradient sup-norm that must also hold when stopping on `tolerance`.
    pub gradient_tolerance: f64,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-8,
            gradient_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Minimizes `objective` from `x0`. Returns `None` if `x0` is infeasible.
pub fn minimize<O: Objective>(objective: &O, x0: &[f64], settings: BfgsSettings) -> Option<BfgsOutcome> {
    let n = objective.dim();
    let mut x = x0.to_vec();
    let (mut f, mut g) = objective.eval(&x)?;
    let mut h = identity(n);
    let mut fresh = true;

    for iter in 1..=settings.max_iterations {
        if sup_norm(&g) < settings.gradient_tolerance * 1e-4 {
            return Some(BfgsOutcome { x, value: f, iterations: iter - 1, converged: true });
        }
        let mut dir: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            h = identity(n);
            fresh = true;
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((ft, gt)) = objective.eval(&trial) {
                if ft.is_finite() && ft <= f + ARMIJO * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if !fresh {
                h = identity(n);
                fresh = true;
                continue;
            }
            let converged = sup_norm(&g) < settings.gradient_tolerance;
            return Some(BfgsOutcome { x, value: f, iterations: iter, converged });
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let rel_change = (f - f_new).abs() / f_new.abs().max(1e-12);
        x = x_new;
        f = f_new;
        g = g_new;

        if rel_change < settings.tolerance && sup_norm(&g) < settings.gradient_tolerance {
            return Some(BfgsOutcome { x, value: f, iterations: iter, converged: true });
        }

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                // Rescale the identity before the first update.
                let scale = sy / dot(&y, &y);
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = scale;
                }
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    Some(BfgsOutcome {
        x,
        value: f,
        iterations: settings.max_iterations,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }

        fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Some((f + 1.0, g))
        }
    }

    struct Bowl;

    impl Objective for Bowl {
        fn dim(&self) -> usize {
            3
        }

        fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
            if x[0] < -5.0 {
                return None;
            }
            let w = [1.0, 10.0, 100.0];
            let f = 2.0 + x.iter().zip(w).map(|(v, w)| w * (v - 1.0).powi(2)).sum::<f64>();
            Some((f, x.iter().zip(w).map(|(v, w)| 2.0 * w * (v - 1.0)).collect()))
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], BfgsSettings::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-3, "{:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 2e-3, "{:?}", out.x);
    }

    #[test]
    fn solves_ill_conditioned_bowl() {
        let out = minimize(&Bowl, &[-4.0, 3.0, 0.0], BfgsSettings::default()).unwrap();
        assert!(out.converged);
        for v in &out.x {
            assert!((v - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn infeasible_start() {
        assert!(minimize(&Bowl, &[-6.0, 0.0, 0.0], BfgsSettings::default()).is_none());
    }

    #[test]
    fn reports_iteration_cap() {
        let settings = BfgsSettings {
            max_iterations: 2,
            ..BfgsSettings::default()
        };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], settings).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
    }
}
