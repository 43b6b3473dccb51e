//! Nelder–Mead simplex search with dimension-adapted coefficients
//! (Gao & Han), restarted from the incumbent until restarts stop helping.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<T> {
    pub max_evals: usize,
    /// Stop when every vertex is within `xatol` of the best one (max norm)...
    pub xatol: T,
    /// ...and the spread of values is below `fatol · max(1, |f_best|)`.
    pub fatol: T,
    /// Edge length of the initial simplex.
    pub step: T,
    pub restarts: usize,
}

impl<T: Scalar> Default for SimplexOptions<T> {
    fn default() -> Self {
        Self {
            max_evals: 40_000,
            xatol: T::lit(1e-9),
            fatol: T::lit(1e-14),
            step: T::lit(0.05),
            restarts: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome<T> {
    pub x: Vec<T>,
    pub f: T,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, best value)` each time the best value drops.
    pub history: Vec<(usize, T)>,
}

/// Minimizes `f` from `x0`. Infeasible points should return `+∞`.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], opts: &SimplexOptions<T>) -> SimplexOutcome<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_f = eval(&best_x, &mut evals);
    let mut history = vec![(0usize, best_f)];
    if n == 0 {
        return SimplexOutcome {
            x: best_x,
            f: best_f,
            evals,
            iterations: 0,
            converged: true,
            history,
        };
    }

    let nf = T::from_usize_lossy(n);
    let one = T::one();
    let half = T::lit(0.5);
    let rho = one;
    let chi = one + T::lit(2.0) / nf;
    let gamma = T::lit(0.75) - half / nf;
    let sigma = one - one / nf;

    let mut iterations = 0usize;
    let mut converged = false;
    for _round in 0..=opts.restarts {
        let start_f = best_f;
        let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
        let mut values: Vec<T> = Vec::with_capacity(n + 1);
        simplex.push(best_x.clone());
        values.push(best_f);
        for i in 0..n {
            let mut v = best_x.clone();
            v[i] = v[i] + opts.step;
            values.push(eval(&v, &mut evals));
            simplex.push(v);
        }

        let mut round_converged = false;
        while evals < opts.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
            iterations += 1;

            if values[0] < best_f {
                best_f = values[0];
                best_x.clone_from(&simplex[0]);
                history.push((iterations, best_f));
            }

            let spread = values[n] - values[0];
            let size = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(&a, &b)| (a - b).abs()))
                .fold(T::zero(), T::max);
            if size <= opts.xatol && spread <= opts.fatol * values[0].abs().max(one) {
                round_converged = true;
                break;
            }

            let mut centroid = vec![T::zero(); n];
            for v in &simplex[..n] {
                for (c, &x) in centroid.iter_mut().zip(v) {
                    *c = *c + x;
                }
            }
            for c in centroid.iter_mut() {
                *c = *c / nf;
            }
            let along = |t: T| -> Vec<T> {
                centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(&c, &w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(rho);
            let fr = eval(&xr, &mut evals);
            if fr < values[0] {
                let xe = along(rho * chi);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
                continue;
            }
            let (xc, fc, accept) = if fr < values[n] {
                let xc = along(rho * gamma);
                let fc = eval(&xc, &mut evals);
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = along(-gamma);
                let fc = eval(&xc, &mut evals);
                let ok = fc < values[n];
                (xc, fc, ok)
            };
            if accept {
                simplex[n] = xc;
                values[n] = fc;
                continue;
            }
            for i in 1..=n {
                let shrunk: Vec<T> = simplex[0]
                    .iter()
                    .zip(&simplex[i])
                    .map(|(&b, &v)| b + sigma * (v - b))
                    .collect();
                values[i] = eval(&shrunk, &mut evals);
                simplex[i] = shrunk;
            }
        }

        let best_round = (0..=n).fold(0, |b, i| if values[i] < values[b] { i } else { b });
        if values[best_round] < best_f {
            best_f = values[best_round];
            best_x.clone_from(&simplex[best_round]);
            history.push((iterations, best_f));
        }
        converged = round_converged;
        if !round_converged {
            break;
        }
        // A restart that gains nothing means the simplex had not collapsed early.
        if start_f - best_f <= opts.fatol * best_f.abs().max(one) {
            break;
        }
    }

    SimplexOutcome {
        x: best_x,
        f: best_f,
        evals,
        iterations,
        converged,
        history,
    }
}
