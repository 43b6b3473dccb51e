//! Steepest descent on central finite-difference gradients with Armijo
//! backtracking.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct DescentOptions<T> {
    pub max_iter: usize,
    /// Central difference step.
    pub fd_step: T,
    /// Stop once `|∇f|_∞` drops below this.
    pub gtol: T,
    pub armijo: T,
}

impl<T: Scalar> Default for DescentOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 5_000,
            fd_step: T::lit(1e-5),
            gtol: T::lit(1e-8),
            armijo: T::lit(1e-4),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DescentOutcome<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<(usize, T)>,
}

pub fn central_gradient<T: Scalar, F: FnMut(&[T]) -> T>(f: &mut F, x: &[T], h: T) -> Vec<T> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (h + h)
        })
        .collect()
}

pub fn gradient_descent<T, F>(mut f: F, x0: &[T], opts: &DescentOptions<T>) -> DescentOutcome<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut history = vec![(0, fx)];
    let mut step = T::one();
    let tiny = T::epsilon();
    for it in 1..=opts.max_iter {
        let g = central_gradient(&mut f, &x, opts.fd_step);
        let gmax = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !gmax.is_finite() {
            break;
        }
        if gmax <= opts.gtol {
            return DescentOutcome { x, f: fx, iterations: it - 1, converged: true, history };
        }
        let g2 = g.iter().fold(T::zero(), |acc, &v| acc + v * v);
        step = step * T::lit(2.0);
        loop {
            let trial: Vec<T> = x.iter().zip(&g).map(|(&xi, &gi)| xi - step * gi).collect();
            let ft = f(&trial);
            if ft <= fx - opts.armijo * step * g2 {
                x = trial;
                fx = ft;
                history.push((it, fx));
                break;
            }
            step = step * T::lit(0.5);
            if step * gmax <= tiny {
                // No descent at round-off scale; the gradient is noise.
                return DescentOutcome { x, f: fx, iterations: it, converged: true, history };
            }
        }
    }
    DescentOutcome { x, f: fx, iterations: opts.max_iter, converged: false, history }
}
