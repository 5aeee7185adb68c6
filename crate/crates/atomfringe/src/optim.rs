//! Deterministic derivative-free optimizers used by the measure oracle, the
//! deviation scan and the tomography fits. Nothing here draws randomness of
//! its own; multistart seeds come from the callers.

/// Classic Nelder-Mead simplex minimization. Deterministic given `x0`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iter {
        // sort ascending by function value
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap());
        let sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let fsorted: Vec<f64> = order.iter().map(|&i| fv[i]).collect();
        simplex = sorted;
        fv = fsorted;

        if (fv[n] - fv[0]).abs() <= ftol * (1.0 + fv[0].abs()) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64)
            .collect();
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };

        let reflected = lerp(&centroid, &simplex[n], -1.0);
        let fr = f(&reflected);
        if fr < fv[0] {
            let expanded = lerp(&centroid, &simplex[n], -2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                fv[n] = fe;
            } else {
                simplex[n] = reflected;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = reflected;
            fv[n] = fr;
        } else {
            let contracted = if fr < fv[n] {
                lerp(&centroid, &simplex[n], -0.5)
            } else {
                lerp(&centroid, &simplex[n], 0.5)
            };
            let fc = f(&contracted);
            if fc < fv[n].min(fr) {
                simplex[n] = contracted;
                fv[n] = fc;
            } else {
                // shrink toward the best vertex
                let best = simplex[0].clone();
                for k in 1..=n {
                    simplex[k] = lerp(&best, &simplex[k], 0.5);
                    fv[k] = f(&simplex[k]);
                }
            }
        }
    }
    let mut best = 0;
    for k in 1..=n {
        if fv[k] < fv[best] {
            best = k;
        }
    }
    (simplex[best].clone(), fv[best])
}

/// Levenberg-Marquardt least squares with a forward-difference Jacobian.
/// Returns the parameter vector and the final sum of squared residuals.
pub fn levenberg_marquardt<F>(
    resid: F,
    x0: &[f64],
    max_iter: usize,
    gtol: f64,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    use nalgebra::{DMatrix, DVector};
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = resid(&x);
    let m = r.len();
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;

    for _ in 0..max_iter {
        // numerical Jacobian
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let rp = resid(&xp);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let rv = DVector::from_vec(r.clone());
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &rv;
        if g.amax() < gtol {
            break;
        }

        let mut improved = false;
        for _ in 0..25 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let xt: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi - s).collect();
            let rt = resid(&xt);
            let ct: f64 = rt.iter().map(|v| v * v).sum();
            if ct < cost {
                x = xt;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.3).max(1e-14);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || cost < 1e-30 {
            break;
        }
    }
    (x, cost)
}

/// Maximize a 2-D function over a rectangle by coarse grid search followed by
/// successive local grid refinement. Deterministic; returns (x, y, f(x,y)).
pub fn grid_refine_max_2d<F>(
    f: F,
    xlo: f64,
    xhi: f64,
    ylo: f64,
    yhi: f64,
    n_coarse: usize,
    rounds: usize,
) -> (f64, f64, f64)
where
    F: Fn(f64, f64) -> f64,
{
    let mut best = (xlo, ylo, f(xlo, ylo));
    let nx = n_coarse.max(2);
    for i in 0..nx {
        let x = xlo + (xhi - xlo) * i as f64 / (nx - 1) as f64;
        for j in 0..nx {
            let y = ylo + (yhi - ylo) * j as f64 / (nx - 1) as f64;
            let v = f(x, y);
            if v > best.2 {
                best = (x, y, v);
            }
        }
    }
    let mut hx = (xhi - xlo) / (nx - 1) as f64;
    let mut hy = (yhi - ylo) / (nx - 1) as f64;
    for _ in 0..rounds {
        let (cx, cy, _) = best;
        for i in -4i32..=4 {
            for j in -4i32..=4 {
                let x = (cx + i as f64 * hx / 4.0).clamp(xlo, xhi);
                let y = cy + j as f64 * hy / 4.0;
                let v = f(x, y);
                if v > best.2 {
                    best = (x, y, v);
                }
            }
        }
        hx /= 4.0;
        hy /= 4.0;
    }
    best
}

/// Vertex of the parabola through (x0-h, ym), (x0, y0), (x0+h, yp); used to
/// polish grid extrema. Falls back to the center when the points are collinear.
pub fn parabolic_vertex(x0: f64, h: f64, ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let denom = ym - 2.0 * y0 + yp;
    if denom.abs() < 1e-300 {
        return (x0, y0);
    }
    let dx = 0.5 * h * (ym - yp) / denom;
    let dx = dx.clamp(-h, h);
    // value of the fitted parabola at the vertex
    let a = denom / (2.0 * h * h);
    let b = (yp - ym) / (2.0 * h);
    (x0 + dx, y0 + b * dx + a * dx * dx)
}
