//! Derivative-free simplex minimization inside a box.
//!
//! Classic Nelder-Mead (reflection 1, expansion 2, contraction 1/2,
//! shrink 1/2) where every trial vertex is projected onto the box. After the
//! first convergence the simplex is rebuilt around the best vertex and the
//! search continues once more, which recovers from premature collapse.

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, x: &mut [f64]) -> bool {
        let mut hit = false;
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            if *xi <= *lo {
                hit |= *xi < *lo;
                *xi = *lo;
            } else if *xi >= *hi {
                hit |= *xi > *hi;
                *xi = *hi;
            }
        }
        hit
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the objective spread across the simplex falls below this.
    pub f_tol: f64,
    /// ...and every vertex lies within this distance (per coordinate) of the best.
    pub x_tol: f64,
    /// Initial edge length per coordinate.
    pub initial_step: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn build<F: FnMut(&[f64]) -> f64>(
        f: &mut F,
        x0: &[f64],
        steps: &[f64],
        bounds: &Bounds,
        evals: &mut usize,
    ) -> Self {
        let n = x0.len();
        let mut points = Vec::with_capacity(n + 1);
        points.push(x0.to_vec());
        for i in 0..n {
            let mut p = x0.to_vec();
            let step = steps[i];
            // Step away from whichever bound is closer.
            if p[i] + step > bounds.upper[i] && p[i] - step >= bounds.lower[i] {
                p[i] -= step;
            } else {
                p[i] += step;
            }
            bounds.project(&mut p);
            if p[i] == x0[i] {
                // Degenerate box along this axis; nudge inward if possible.
                p[i] = (x0[i] - step).max(bounds.lower[i]);
            }
            points.push(p);
        }
        let values = points
            .iter()
            .map(|p| {
                *evals += 1;
                f(p)
            })
            .collect();
        Simplex { points, values }
    }

    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        // Stable on ties so the run is deterministic.
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn converged(&self, f_tol: f64, x_tol: f64) -> bool {
        let n = self.points.len() - 1;
        let spread = self.values[n] - self.values[0];
        if !(spread <= f_tol) {
            return false;
        }
        let best = &self.points[0];
        self.points[1..]
            .iter()
            .all(|p| p.iter().zip(best).all(|(a, b)| (a - b).abs() <= x_tol))
    }
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    bounds: &Bounds,
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    assert_eq!(bounds.dim(), n);
    assert_eq!(opts.initial_step.len(), n);

    let mut start = x0.to_vec();
    bounds.project(&mut start);
    let mut evals = 0usize;
    let mut simplex = Simplex::build(&mut f, &start, &opts.initial_step, bounds, &mut evals);
    let mut rebuilt = false;
    let mut converged = false;
    let mut iter = 0usize;

    let mut eval = |p: &mut Vec<f64>, evals: &mut usize| {
        bounds.project(p);
        *evals += 1;
        f(p)
    };

    while iter < opts.max_iter {
        simplex.order();
        if simplex.converged(opts.f_tol, opts.x_tol) {
            if rebuilt {
                converged = true;
                break;
            }
            rebuilt = true;
            let best = simplex.points[0].clone();
            let steps: Vec<f64> = opts.initial_step.iter().map(|s| s * 0.1).collect();
            simplex = Simplex::build(
                &mut |p: &[f64]| eval(&mut p.to_vec(), &mut 0),
                &best,
                &steps,
                bounds,
                &mut evals,
            );
            continue;
        }
        iter += 1;

        let worst = n;
        let mut centroid = vec![0.0; n];
        for p in &simplex.points[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex.points[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut reflected = along(1.0);
        let f_r = eval(&mut reflected, &mut evals);
        if f_r < simplex.values[0] {
            let mut expanded = along(2.0);
            let f_e = eval(&mut expanded, &mut evals);
            if f_e < f_r {
                simplex.points[worst] = expanded;
                simplex.values[worst] = f_e;
            } else {
                simplex.points[worst] = reflected;
                simplex.values[worst] = f_r;
            }
            continue;
        }
        if f_r < simplex.values[n - 1] {
            simplex.points[worst] = reflected;
            simplex.values[worst] = f_r;
            continue;
        }
        let (mut contracted, threshold) = if f_r < simplex.values[worst] {
            (along(0.5), f_r)
        } else {
            (along(-0.5), simplex.values[worst])
        };
        let f_c = eval(&mut contracted, &mut evals);
        if f_c < threshold {
            simplex.points[worst] = contracted;
            simplex.values[worst] = f_c;
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex.points[0].clone();
        for i in 1..=n {
            let mut p: Vec<f64> = simplex.points[i]
                .iter()
                .zip(&best)
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            simplex.values[i] = eval(&mut p, &mut evals);
            simplex.points[i] = p;
        }
    }

    simplex.order();
    NelderMeadResult {
        x: simplex.points[0].clone(),
        f: simplex.values[0],
        iterations: iter,
        evaluations: evals,
        converged,
    }
}
