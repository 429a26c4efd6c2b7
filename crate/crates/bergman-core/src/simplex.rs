//! Derivative-free Nelder--Mead minimization with a feasibility repair hook.
//!
//! Standard reflection/expansion/contraction/shrink coefficients
//! (1, 2, 0.5, 0.5).  Every trial point is passed through a caller-supplied
//! `repair` function before evaluation, which is how searches stay inside
//! their constraint region.  All tie-breaking is by insertion order, so runs
//! are deterministic.

use alloc::vec::Vec;

/// Stopping rules for [`minimize`].
#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_iters: usize,
    /// Stop when the spread of objective values over the simplex drops to
    /// this value (absolute).  Zero disables the test.
    pub f_tol: f64,
    /// Stop when the simplex diameter (infinity norm) drops to this value.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iters: 400,
            f_tol: 0.0,
            x_tol: 1e-10,
        }
    }
}

/// Result of a single Nelder--Mead run.
#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: u64,
    pub iterations: usize,
    /// True when a stopping rule fired before the iteration budget ran out.
    pub converged: bool,
}

/// NaN-tolerant comparison key: NaN sorts as +infinity.
fn key(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Minimizes `objective` starting from `start`, with initial simplex steps
/// `steps[k]` along coordinate `k`.  `repair` may mutate any candidate
/// point to restore feasibility before evaluation.
pub fn minimize<F, P>(
    mut objective: F,
    repair: P,
    start: &[f64],
    steps: &[f64],
    options: &SimplexOptions,
) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
    P: Fn(&mut [f64]),
{
    assert_eq!(start.len(), steps.len());
    let n = start.len();
    assert!(n >= 1, "cannot minimize over zero coordinates");
    let mut evaluations: u64 = 0;
    let mut eval = |x: &[f64], count: &mut u64| {
        *count += 1;
        objective(x)
    };

    // Initial simplex: the start plus one step along each coordinate.
    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    let mut base = start.to_vec();
    repair(&mut base);
    values.push(eval(&base, &mut evaluations));
    vertices.push(base.clone());
    for k in 0..n {
        let mut vertex = base.clone();
        vertex[k] += steps[k];
        repair(&mut vertex);
        values.push(eval(&vertex, &mut evaluations));
        vertices.push(vertex);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iters {
        // Order vertices best to worst; stable sort keeps ties deterministic.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| key(values[a]).partial_cmp(&key(values[b])).unwrap());
        let best = order[0];
        let second_worst = order[n - 1];
        let worst = order[n];

        // Convergence tests.
        let spread = key(values[worst]) - key(values[best]);
        let mut diameter = 0.0f64;
        for v in &vertices {
            for k in 0..n {
                diameter = diameter.max((v[k] - vertices[best][k]).abs());
            }
        }
        if (options.f_tol > 0.0 && spread <= options.f_tol) || diameter <= options.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        // Centroid of all vertices except the worst.
        let mut centroid = alloc::vec![0.0f64; n];
        for &i in order.iter().take(n) {
            for k in 0..n {
                centroid[k] += vertices[i][k];
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let blend = |from: &[f64], toward: &[f64], t: f64| -> Vec<f64> {
            from.iter()
                .zip(toward)
                .map(|(&a, &b)| a + t * (b - a))
                .collect()
        };

        // Reflection.
        let mut reflected = blend(&centroid, &vertices[worst], -1.0);
        repair(&mut reflected);
        let f_reflected = eval(&reflected, &mut evaluations);

        if key(f_reflected) < key(values[best]) {
            // Expansion.
            let mut expanded = blend(&centroid, &vertices[worst], -2.0);
            repair(&mut expanded);
            let f_expanded = eval(&expanded, &mut evaluations);
            if key(f_expanded) < key(f_reflected) {
                vertices[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                vertices[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if key(f_reflected) < key(values[second_worst]) {
            vertices[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }

        // Contraction: outside when the reflection improved on the worst
        // vertex, inside otherwise.
        let mut contracted = if key(f_reflected) < key(values[worst]) {
            blend(&centroid, &reflected, 0.5)
        } else {
            blend(&centroid, &vertices[worst], 0.5)
        };
        repair(&mut contracted);
        let f_contracted = eval(&contracted, &mut evaluations);
        if key(f_contracted) < key(f_reflected).min(key(values[worst])) {
            vertices[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }

        // Shrink toward the best vertex.
        let anchor = vertices[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            let mut shrunk = blend(&anchor, &vertices[i], 0.5);
            repair(&mut shrunk);
            values[i] = eval(&shrunk, &mut evaluations);
            vertices[i] = shrunk;
        }
    }

    let mut best = 0usize;
    for i in 1..=n {
        if key(values[i]) < key(values[best]) {
            best = i;
        }
    }
    SimplexOutcome {
        x: vertices[best].clone(),
        value: values[best],
        evaluations,
        iterations,
        converged,
    }
}
