//! Nelder–Mead simplex search with dimension-adaptive coefficients and restarts.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Stop when the spread of simplex values drops below this.
    pub ftol: f64,
    /// Stop when the simplex diameter drops below this.
    pub xtol: f64,
    pub max_evals: usize,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            ftol: 1e-10,
            xtol: 1e-10,
            max_evals: 50_000,
            restarts: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

impl NelderMead {
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64) -> Minimum {
        let mut best = x0.to_vec();
        let mut best_val = f(&best);
        let mut evals = 1;
        let mut scale = step;
        for _ in 0..=self.restarts {
            if evals >= self.max_evals {
                break;
            }
            let budget = self.max_evals - evals;
            let (x, v, used) = self.run(&mut f, &best, best_val, scale, budget);
            evals += used;
            let improved = best_val - v;
            if v < best_val {
                best = x;
                best_val = v;
            }
            if improved <= self.ftol {
                break;
            }
            scale *= 0.5;
        }
        Minimum {
            x: best,
            value: best_val,
            evals,
        }
    }

    fn run(
        &self,
        f: &mut impl FnMut(&[f64]) -> f64,
        x0: &[f64],
        f0: f64,
        step: f64,
        budget: usize,
    ) -> (Vec<f64>, f64, usize) {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
        let (rho, sigma) = (0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut vals = Vec::with_capacity(n + 1);
        pts.push(x0.to_vec());
        vals.push(f0);
        let mut evals = 0;
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += step;
            vals.push(f(&p));
            pts.push(p);
            evals += 1;
        }
        let mut order: Vec<usize> = (0..=n).collect();
        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial2 = vec![0.0; n];
        while evals < budget {
            order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
            let (bi, wi, si) = (order[0], order[n], order[n - 1]);
            let spread = vals[wi] - vals[bi];
            let diam = pts
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&pts[bi])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread <= self.ftol && diam <= self.xtol.max(1e-4 * step) || diam <= self.xtol {
                break;
            }
            centroid.iter_mut().for_each(|c| *c = 0.0);
            for &k in &order[..n] {
                for (c, x) in centroid.iter_mut().zip(&pts[k]) {
                    *c += x / nf;
                }
            }
            let along = |coef: f64, out: &mut Vec<f64>, worst: &[f64], centroid: &[f64]| {
                for i in 0..out.len() {
                    out[i] = centroid[i] + coef * (centroid[i] - worst[i]);
                }
            };
            along(alpha, &mut trial, &pts[wi], &centroid);
            let fr = f(&trial);
            evals += 1;
            if fr < vals[bi] {
                along(gamma * alpha, &mut trial2, &pts[wi], &centroid);
                let fe = f(&trial2);
                evals += 1;
                if fe < fr {
                    pts[wi].copy_from_slice(&trial2);
                    vals[wi] = fe;
                } else {
                    pts[wi].copy_from_slice(&trial);
                    vals[wi] = fr;
                }
                continue;
            }
            if fr < vals[si] {
                pts[wi].copy_from_slice(&trial);
                vals[wi] = fr;
                continue;
            }
            let outside = fr < vals[wi];
            let coef = if outside { rho * alpha } else { -rho };
            along(coef, &mut trial2, &pts[wi], &centroid);
            let fc = f(&trial2);
            evals += 1;
            if fc < fr.min(vals[wi]) {
                pts[wi].copy_from_slice(&trial2);
                vals[wi] = fc;
                continue;
            }
            let best = pts[bi].clone();
            for &k in &order[1..] {
                for (x, b) in pts[k].iter_mut().zip(&best) {
                    *x = b + sigma * (*x - b);
                }
                vals[k] = f(&pts[k]);
                evals += 1;
            }
        }
        let bi = (0..=n)
            .min_by(|&i, &j| vals[i].total_cmp(&vals[j]))
            .unwrap_or(0);
        (pts[bi].clone(), vals[bi], evals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_evals: 20_000,
            ..Default::default()
        };
        let m = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            0.5,
        );
        assert!(m.value < 1e-10, "{m:?}");
    }

    #[test]
    fn quadratic_in_ten_dims() {
        let m = NelderMead::default().minimize(
            |x| {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| (i + 1) as f64 * (v - 0.3).powi(2))
                    .sum()
            },
            &[0.0; 10],
            0.5,
        );
        assert!(m.value < 1e-8, "{m:?}");
    }
}
