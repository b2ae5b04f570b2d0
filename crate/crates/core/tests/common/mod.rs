#![allow(dead_code, clippy::needless_range_loop)]

use kam_dea::analysis::dominance_ratio;
use kam_dea::lp::{LinearProgram, ObjectiveSense, RowSense};
use kam_dea::{Dataset, KamResult};
use rand::rngs::StdRng;
use rand::Rng;

pub fn firm_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("F{i}")).collect()
}

fn value(rng: &mut StdRng) -> f64 {
    // Log-uniform on [1, 1000], rounded to 3 significant-ish decimals.
    let v: f64 = 10f64.powf(rng.gen_range(0.0..3.0));
    (v * 1000.0).round() / 1000.0
}

/// Positive data with `n` firms, plus one firm dominated by a random peer.
pub fn random_dataset(rng: &mut StdRng, n: usize, m: usize, p: usize) -> Dataset {
    let mut x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| value(rng)).collect())
        .collect();
    let mut y: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| value(rng)).collect())
        .collect();
    let base = rng.gen_range(0..n);
    let mut dx = x[base].clone();
    let mut dy = y[base].clone();
    if rng.gen_bool(0.5) {
        let j = rng.gen_range(0..m);
        dx[j] *= rng.gen_range(1.05..2.0);
    } else {
        let k = rng.gen_range(0..p);
        dy[k] *= rng.gen_range(0.5..0.95);
    }
    x.push(dx);
    y.push(dy);
    Dataset::from_rows(firm_names(n + 1), x, y).unwrap()
}

/// `i` weakly dominates `l` with at least one strict coordinate.
pub fn whole_dominates(ds: &Dataset, i: usize, l: usize) -> bool {
    let xi = ds.input_row(i);
    let xl = ds.input_row(l);
    let yi = ds.output_row(i);
    let yl = ds.output_row(l);
    let weak = xi.iter().zip(xl).all(|(a, b)| a <= b) && yi.iter().zip(yl).all(|(a, b)| a >= b);
    let strict = xi.iter().zip(xl).any(|(a, b)| a < b) || yi.iter().zip(yl).any(|(a, b)| a > b);
    weak && strict
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Targets equal the intensity-weighted combination of observed firms.
pub fn reconstruction_holds(ds: &Dataset, r: &KamResult) -> bool {
    let n = ds.num_firms();
    (0..ds.num_inputs()).all(|j| {
        let combo: f64 = (0..n).map(|i| r.lambda[i] * ds.x(i, j)).sum();
        close(combo, r.target_in[j], 1e-6)
    }) && (0..ds.num_outputs()).all(|k| {
        let combo: f64 = (0..n).map(|i| r.lambda[i] * ds.y(i, k)).sum();
        close(combo, r.target_out[k], 1e-6)
    })
}

/// The projected point's weighted ratio is no worse than the firm's own.
pub fn target_dominance_holds(ds: &Dataset, r: &KamResult) -> bool {
    let w = &r.weights;
    let before = dominance_ratio(
        &w.w_in,
        &w.w_out,
        ds.input_row(r.firm),
        ds.output_row(r.firm),
    );
    let after = dominance_ratio(&w.w_in, &w.w_out, &r.target_in, &r.target_out);
    after >= before - 1e-9
}

/// Bounded LP with `x >= lb`, a budget row and a few random rows.
/// Most instances are built around a feasible point.
pub fn random_lp(rng: &mut StdRng) -> LinearProgram {
    let n = rng.gen_range(1..=8);
    let rows = rng.gen_range(1..=4);
    let sense = if rng.gen_bool(0.5) {
        ObjectiveSense::Min
    } else {
        ObjectiveSense::Max
    };
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let mut lp = LinearProgram::new(sense, c);
    let lb: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.7) {
                0.0
            } else {
                rng.gen_range(-2..=2) as f64
            }
        })
        .collect();
    for (v, &l) in lb.iter().enumerate() {
        lp.set_lower_bound(v, l);
    }
    let x0: Vec<f64> = lb.iter().map(|l| l + rng.gen_range(0..=3) as f64).collect();
    let planted = rng.gen_bool(0.85);
    for _ in 0..rows {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
        let ax: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let s = match rng.gen_range(0..3) {
            0 => RowSense::Eq,
            1 => RowSense::Le,
            _ => RowSense::Ge,
        };
        let gap = rng.gen_range(0..=3) as f64;
        let b = if !planted {
            rng.gen_range(-10..=10) as f64
        } else {
            match s {
                RowSense::Eq => ax,
                RowSense::Le => ax + gap,
                RowSense::Ge => ax - gap,
            }
        };
        lp.add_row(a, s, b);
    }
    let budget = x0.iter().sum::<f64>() + rng.gen_range(0..=5) as f64;
    lp.add_row(vec![1.0; n], RowSense::Le, budget);
    lp
}

/// Solve a square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Optimal objective by enumerating every vertex of a bounded LP, or `None`
/// when no vertex is feasible.
pub fn brute_force_optimum(lp: &LinearProgram) -> Option<f64> {
    let n = lp.c.len();
    // Every constraint as (a, b, sense); bounds become `x_v >= lb_v`.
    let mut cons: Vec<(Vec<f64>, f64, RowSense)> =
        lp.a.iter()
            .zip(&lp.b)
            .zip(&lp.row_sense)
            .map(|((a, &b), &s)| (a.clone(), b, s))
            .collect();
    for v in 0..n {
        let mut e = vec![0.0; n];
        e[v] = 1.0;
        cons.push((e, lp.lower_bounds[v], RowSense::Ge));
    }
    let feasible = |x: &[f64]| {
        cons.iter().all(|(a, b, s)| {
            let ax: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            let tol = 1e-7 * (1.0 + b.abs());
            match s {
                RowSense::Eq => (ax - b).abs() <= tol,
                RowSense::Le => ax <= b + tol,
                RowSense::Ge => ax >= b - tol,
            }
        })
    };
    let max = lp.objective_sense == ObjectiveSense::Max;
    let mut best: Option<f64> = None;
    combinations(cons.len(), n, &mut |idx| {
        let a = idx.iter().map(|&i| cons[i].0.clone()).collect();
        let b = idx.iter().map(|&i| cons[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let z: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(match best {
                    None => z,
                    Some(o) if max => o.max(z),
                    Some(o) => o.min(z),
                });
            }
        }
    });
    best
}
