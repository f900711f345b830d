//! Non-recursive reference evaluation of every statistic, straight from the
//! max-over-lower-limit definitions. Cost is cubic in the path length, so
//! keep paths short (hundreds of steps at most). Used to check the
//! recursive updates.

use super::LlrPath;

/// Statistic paths for `n = 1..=N`; index `n − 1` in every vector.
#[derive(Clone, Debug)]
pub struct OraclePaths {
    pub k: usize,
    /// `cusum[n−1][i] = Y_i(n)`
    pub cusum: Vec<Vec<f64>>,
    /// `matrix[n−1][i·K + j] = Y_ij(n)`
    pub matrix: Vec<Vec<f64>>,
    /// `adaptive[n−1][i·K + j] = Y'_ij(n)`
    pub adaptive: Vec<Vec<f64>>,
    /// `vector[n−1][i·K + j] = Y_i(n) − Y_j(n)`
    pub vector: Vec<Vec<f64>>,
    /// `reset[n−1][i] = R_i(n)`
    pub reset: Vec<Vec<u64>>,
    /// One entry per requested window: `(window, w[n−1][i] = W_i(n))`.
    pub generalized: Vec<(Option<usize>, Vec<Vec<f64>>)>,
}

fn partial_sum(values: impl Fn(usize) -> f64, from_t: usize, to_n: usize) -> f64 {
    // Σ_{u=t+1}^{n}, empty when t = n
    let mut s = 0.0;
    for u in (from_t + 1)..=to_n {
        s += values(u);
    }
    s
}

fn max_over_lower_limits(values: impl Fn(usize) -> f64 + Copy, lo: usize, n: usize) -> f64 {
    (lo..=n)
        .map(|t| partial_sum(values, t, n))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluates all statistics on `path` by direct maximisation.
pub fn batch_cusum_oracle(path: &LlrPath, windows: &[Option<usize>]) -> OraclePaths {
    let k = path.k;
    let steps = path.len();
    let l = |i: usize| move |u: usize| path.llr_at(u)[i];
    let lp = |i: usize, j: usize| move |u: usize| path.pair_at(u)[i * k + j];

    let mut cusum = Vec::with_capacity(steps);
    let mut matrix = Vec::with_capacity(steps);
    let mut vector = Vec::with_capacity(steps);
    for n in 1..=steps {
        let y: Vec<f64> = (0..k).map(|i| max_over_lower_limits(l(i), 0, n)).collect();
        let mut m = vec![0.0; k * k];
        let mut v = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    m[i * k + j] = max_over_lower_limits(lp(i, j), 0, n);
                    v[i * k + j] = y[i] - y[j];
                }
            }
        }
        cusum.push(y);
        matrix.push(m);
        vector.push(v);
    }

    // Y_i(0) = 0, so R_i(n) is the last t in 0..=n with Y_i(t) = 0.
    let y_at = |t: usize, i: usize| if t == 0 { 0.0 } else { cusum[t - 1][i] };
    let mut reset = Vec::with_capacity(steps);
    for n in 1..=steps {
        let r: Vec<u64> = (0..k)
            .map(|i| (0..=n).rev().find(|&t| y_at(t, i) == 0.0).unwrap_or(0) as u64)
            .collect();
        reset.push(r);
    }

    let mut adaptive = Vec::with_capacity(steps);
    for n in 1..=steps {
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            let lo = reset[n - 1][i] as usize;
            for j in 0..k {
                if i != j {
                    a[i * k + j] = max_over_lower_limits(lp(i, j), lo, n);
                }
            }
        }
        adaptive.push(a);
    }

    let generalized = windows
        .iter()
        .map(|&window| {
            let mut out = Vec::with_capacity(steps);
            for n in 1..=steps {
                let lo = window.map_or(0, |m| n.saturating_sub(m));
                let w: Vec<f64> = (0..k)
                    .map(|i| {
                        (lo..=n)
                            .map(|t| {
                                let mut v = partial_sum(l(i), t, n);
                                for j in (0..k).filter(|&j| j != i) {
                                    v = v.min(partial_sum(lp(i, j), t, n));
                                }
                                v
                            })
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
                out.push(w);
            }
            (window, out)
        })
        .collect();

    OraclePaths {
        k,
        cusum,
        matrix,
        adaptive,
        vector,
        reset,
        generalized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_llrs_give_zero_statistics() {
        let path = LlrPath::from_llrs(2, vec![0.0; 10]);
        let o = batch_cusum_oracle(&path, &[Some(2), None]);
        assert!(o.cusum.iter().flatten().all(|&v| v == 0.0));
        assert!(o.matrix.iter().flatten().all(|&v| v == 0.0));
        assert!(o.adaptive.iter().flatten().all(|&v| v == 0.0));
        for (_, w) in &o.generalized {
            assert!(w.iter().flatten().all(|&v| v == 0.0));
        }
        assert_eq!(o.reset[4], vec![5, 5]);
    }

    #[test]
    fn single_positive_llr() {
        let path = LlrPath::from_llrs(1, vec![0.8]);
        let o = batch_cusum_oracle(&path, &[]);
        assert_eq!(o.cusum[0][0], 0.8);
        assert_eq!(o.reset[0][0], 0);
    }
}
