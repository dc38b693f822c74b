//! Box-constrained Nelder–Mead with deterministic restarts.
//!
//! Points are projected onto the box before every evaluation, so the
//! objective is only ever called with feasible arguments. The search keeps
//! the best point seen across all starts and never exceeds the evaluation
//! budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// The budget ran out while a simplex was still contracting.
    pub exhausted: bool,
}

struct Counted<'a, F> {
    f: F,
    lower: &'a [f64],
    upper: &'a [f64],
    evals: usize,
    budget: usize,
    best_x: Vec<f64>,
    best_v: f64,
}

impl<F: FnMut(&[f64]) -> f64> Counted<'_, F> {
    fn project(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(self.lower).zip(self.upper) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    fn left(&self) -> usize {
        self.budget - self.evals
    }

    /// `None` once the budget is spent.
    fn eval(&mut self, x: &mut [f64]) -> Option<f64> {
        if self.evals >= self.budget {
            return None;
        }
        self.project(x);
        self.evals += 1;
        let mut v = (self.f)(x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        if v < self.best_v {
            self.best_v = v;
            self.best_x = x.to_vec();
        }
        Some(v)
    }
}

enum NmEnd {
    Converged,
    OutOfBudget,
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    ctx: &mut Counted<'_, F>,
    start: &[f64],
    start_value: Option<f64>,
    step: &[f64],
) -> NmEnd {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    let v0 = match start_value {
        Some(v) => v,
        None => match ctx.eval(&mut x0) {
            Some(v) => v,
            None => return NmEnd::OutOfBudget,
        },
    };
    simplex.push((x0.clone(), v0));
    for i in 0..n {
        let mut xi = x0.clone();
        // Step inward when the start sits on the upper bound.
        xi[i] = if x0[i] + step[i] <= ctx.upper[i] { x0[i] + step[i] } else { x0[i] - step[i] };
        let Some(v) = ctx.eval(&mut xi) else { return NmEnd::OutOfBudget };
        simplex.push((xi, v));
    }

    let span: Vec<f64> = ctx.upper.iter().zip(ctx.lower).map(|(u, l)| (u - l).max(1e-12)).collect();
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let flat = (worst - best).abs() <= 1e-10 * (1.0 + best.abs());
        let small = (1..=n)
            .all(|j| simplex[j].0.iter().zip(&simplex[0].0).zip(&span).all(|((a, b), s)| (a - b).abs() <= 1e-7 * s));
        if (flat && small) || (best.is_infinite() && worst.is_infinite()) {
            return NmEnd::Converged;
        }
        if ctx.left() == 0 {
            return NmEnd::OutOfBudget;
        }

        let centroid: Vec<f64> =
            (0..n).map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect() };

        let mut xr = along(1.0);
        let Some(vr) = ctx.eval(&mut xr) else { return NmEnd::OutOfBudget };
        if vr < simplex[0].1 {
            let mut xe = along(2.0);
            let Some(ve) = ctx.eval(&mut xe) else { return NmEnd::OutOfBudget };
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr < simplex[n - 1].1 {
            simplex[n] = (xr, vr);
            continue;
        }
        let (mut xc, t) = if vr < simplex[n].1 { (along(0.5), vr) } else { (along(-0.5), simplex[n].1) };
        let Some(vc) = ctx.eval(&mut xc) else { return NmEnd::OutOfBudget };
        if vc < t {
            simplex[n] = (xc, vc);
            continue;
        }
        // Shrink toward the best vertex.
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut xs: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let Some(vs) = ctx.eval(&mut xs) else { return NmEnd::OutOfBudget };
            *vertex = (xs, vs);
        }
    }
}

/// Minimises `f` over the box `[lower, upper]` within `budget` evaluations.
///
/// Every start is evaluated first. Nelder–Mead then runs from the best start;
/// while budget remains it restarts, alternating between the incumbent with a
/// halved initial step and a seeded random point, and stops after two
/// consecutive restarts that fail to improve the incumbent.
pub fn minimize_in_box<F: FnMut(&[f64]) -> f64>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    starts: &[Vec<f64>],
    budget: usize,
    seed: u64,
) -> SearchOutcome {
    let n = lower.len();
    assert_eq!(upper.len(), n, "bound lengths differ");
    assert!(lower.iter().zip(upper).all(|(l, u)| l <= u), "empty box");
    let mut ctx = Counted {
        f,
        lower,
        upper,
        evals: 0,
        budget,
        best_x: lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
        best_v: f64::INFINITY,
    };
    let mut exhausted = false;
    for s in starts {
        let mut x = s.clone();
        if ctx.eval(&mut x).is_none() {
            exhausted = true;
            break;
        }
    }
    if ctx.best_v == f64::INFINITY && !exhausted {
        let mut mid = ctx.best_x.clone();
        exhausted = ctx.eval(&mut mid).is_none();
    }
    if n == 0 || exhausted {
        return SearchOutcome { x: ctx.best_x, value: ctx.best_v, evaluations: ctx.evals, exhausted };
    }

    let span: Vec<f64> = upper.iter().zip(lower).map(|(u, l)| u - l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scale = 0.25;
    let mut stale = 0;
    let mut restart = 0usize;
    while ctx.left() > n + 1 && stale < 2 {
        let before = ctx.best_v;
        let from_incumbent = restart.is_multiple_of(2);
        let (start, start_value) = if from_incumbent {
            (ctx.best_x.clone(), Some(ctx.best_v))
        } else {
            let x: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| rng.gen_range(*l..=*u)).collect();
            (x, None)
        };
        let step: Vec<f64> = span.iter().map(|s| (s * scale).max(1e-9)).collect();
        match nelder_mead(&mut ctx, &start, start_value, &step) {
            NmEnd::Converged => {}
            NmEnd::OutOfBudget => {
                exhausted = true;
                break;
            }
        }
        if from_incumbent {
            scale = (scale * 0.5).max(1e-4);
        }
        let improved = ctx.best_v < before - 1e-12 * (1.0 + before.abs());
        stale = if improved { 0 } else { stale + 1 };
        restart += 1;
    }
    SearchOutcome { x: ctx.best_x, value: ctx.best_v, evaluations: ctx.evals, exhausted }
}
