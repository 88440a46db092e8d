//! Box-constrained Nelder–Mead.
//!
//! Trial points are clamped onto the box, which keeps the simplex feasible
//! without penalty terms. Non-finite objective values are treated as +inf.

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once the spread of simplex values falls below
    /// `f_tol * (1 + |f_best|)`.
    pub f_tol: f64,
    /// Stop once every vertex is within `x_tol` (in units of the box width)
    /// of the best vertex.
    pub x_tol: f64,
    /// Initial simplex edge, as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 600,
            f_tol: 1e-9,
            x_tol: 1e-6,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

pub fn nelder_mead<F>(
    mut f: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..dim {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0);
    simplex.push(x0.clone());
    for i in 0..dim {
        let mut v = x0.clone();
        let step = opts.initial_step * (upper[i] - lower[i]);
        // step inward when the start sits on the upper face
        v[i] = if v[i] + step <= upper[i] {
            v[i] + step
        } else {
            v[i] - step
        };
        clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    let widths: Vec<f64> = (0..dim)
        .map(|i| (upper[i] - lower[i]).max(f64::MIN_POSITIVE))
        .collect();

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[dim];
        if best.is_finite() && worst.is_finite() {
            let spread = worst - best;
            let size = simplex[1..]
                .iter()
                .flat_map(|v| {
                    v.iter()
                        .zip(&simplex[0])
                        .zip(&widths)
                        .map(|((a, b), w)| (a - b).abs() / w)
                })
                .fold(0.0, f64::max);
            if spread <= opts.f_tol * (1.0 + best.abs()) && size <= opts.x_tol.max(1e-3) {
                break;
            }
            if size <= opts.x_tol {
                break;
            }
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + coef * (simplex[dim][j] - centroid[j]))
                .collect();
            clamp(&mut p);
            p
        };

        let reflected = toward(-1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < values[0] {
            let expanded = toward(-2.0);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = toward(-0.5);
            let v = eval(&c, &mut evals);
            (c, v)
        } else {
            let c = toward(0.5);
            let v = eval(&c, &mut evals);
            (c, v)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=dim {
            let mut v: Vec<f64> = (0..dim)
                .map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]))
                .collect();
            clamp(&mut v);
            values[i] = eval(&v, &mut evals);
            simplex[i] = v;
        }
    }

    let (bi, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex is never empty");
    Minimum {
        x: simplex[bi].clone(),
        value: values[bi],
        evaluations: evals,
    }
}
