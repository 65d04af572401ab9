use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Estimate, IntegrationConfig};
use crate::error::{Error, Result};
use crate::exec::map_slice;

const BATCH: usize = 32;

struct Rule {
    dim: usize,
    lambda2: f64,
    lambda3: f64,
    lambda5: f64,
    w7: [f64; 5],
    w5: [f64; 4],
    ratio: f64,
}

impl Rule {
    fn new(dim: usize) -> Self {
        let n = dim as f64;
        let lambda2 = (9.0f64 / 70.0).sqrt();
        let lambda3 = (9.0f64 / 10.0).sqrt();
        let lambda5 = (9.0f64 / 19.0).sqrt();
        let w7 = [
            (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0,
            980.0 / 6561.0,
            (1820.0 - 400.0 * n) / 19683.0,
            200.0 / 19683.0,
            6859.0 / 19683.0 / 2f64.powi(dim as i32),
        ];
        let w5 =
            [(729.0 - 950.0 * n + 50.0 * n * n) / 729.0, 245.0 / 486.0, (265.0 - 100.0 * n) / 1458.0, 25.0 / 729.0];
        Rule { dim, lambda2, lambda3, lambda5, w7, w5, ratio: (lambda2 * lambda2) / (lambda3 * lambda3) }
    }

    fn points(&self) -> u64 {
        let n = self.dim as u64;
        1 + 4 * n + 2 * n * (n - 1) + (1u64 << n)
    }

    fn apply<F: Fn(&[f64]) -> f64>(&self, f: &F, center: &[f64], half: &[f64]) -> Region {
        let n = self.dim;
        let mut x = center.to_vec();
        let f0 = f(&x);
        let mut s2 = 0.0;
        let mut s3 = 0.0;
        let mut best_axis = 0;
        let mut best_diff = -1.0;
        for i in 0..n {
            x[i] = center[i] - self.lambda2 * half[i];
            let a2 = f(&x);
            x[i] = center[i] + self.lambda2 * half[i];
            let b2 = f(&x);
            x[i] = center[i] - self.lambda3 * half[i];
            let a3 = f(&x);
            x[i] = center[i] + self.lambda3 * half[i];
            let b3 = f(&x);
            x[i] = center[i];
            s2 += a2 + b2;
            s3 += a3 + b3;
            let diff = (a2 + b2 - 2.0 * f0 - self.ratio * (a3 + b3 - 2.0 * f0)).abs();
            if diff > best_diff {
                best_diff = diff;
                best_axis = i;
            }
        }
        let mut s4 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                    x[i] = center[i] + si * self.lambda3 * half[i];
                    x[j] = center[j] + sj * self.lambda3 * half[j];
                    s4 += f(&x);
                }
                x[i] = center[i];
                x[j] = center[j];
            }
        }
        let mut s5 = 0.0;
        for mask in 0..(1usize << n) {
            for i in 0..n {
                let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                x[i] = center[i] + sign * self.lambda5 * half[i];
            }
            s5 += f(&x);
        }
        let volume: f64 = half.iter().map(|h| 2.0 * h).product();
        let r7 = self.w7[0] * f0 + self.w7[1] * s2 + self.w7[2] * s3 + self.w7[3] * s4 + self.w7[4] * s5;
        let r5 = self.w5[0] * f0 + self.w5[1] * s2 + self.w5[2] * s3 + self.w5[3] * s4;
        Region {
            center: center.to_vec(),
            half: half.to_vec(),
            value: volume * r7,
            error: (volume * (r7 - r5)).abs(),
            axis: best_axis,
            id: 0,
        }
    }
}

struct Region {
    center: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    axis: usize,
    id: u64,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.id.cmp(&self.id))
    }
}

fn initial_splits(dim: usize) -> usize {
    match dim {
        0..=3 => 4,
        4 => 2,
        _ => 1,
    }
}

pub(super) fn integrate<F>(f: &F, dim: usize, cfg: &IntegrationConfig) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rule = Rule::new(dim);
    let per_region = rule.points();

    let m = initial_splits(dim);
    let cells = m.pow(dim as u32);
    let h = 0.5 / m as f64;
    let starts: Vec<(Vec<f64>, Vec<f64>)> = (0..cells)
        .map(|mut c| {
            let mut center = vec![0.0; dim];
            for x in center.iter_mut() {
                *x = (2 * (c % m) + 1) as f64 * h;
                c /= m;
            }
            (center, vec![h; dim])
        })
        .collect();

    let mut evals = per_region * cells as u64;
    let mut next_id = 0u64;
    let mut heap = BinaryHeap::with_capacity(cells * 4);
    for mut r in map_slice(cfg.exec, &starts, |(c, hw)| rule.apply(f, c, hw)) {
        r.id = next_id;
        next_id += 1;
        heap.push(r);
    }

    let mut iteration = 0u64;
    let (mut value, mut error) = exact_totals(&heap);
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonFiniteIntegrand);
        }
        if error <= cfg.target(value) {
            let (v, e) = exact_totals(&heap);
            value = v;
            error = e;
            if error <= cfg.target(value) {
                return Ok(Estimate { value, error, evals });
            }
        }
        let batch = BATCH.min(heap.len());
        if evals + 2 * batch as u64 * per_region > cfg.max_evals {
            let (value, error) = exact_totals(&heap);
            return Err(Error::ToleranceNotReached(Estimate { value, error, evals }));
        }
        let mut children = Vec::with_capacity(2 * batch);
        for _ in 0..batch {
            let r = heap.pop().expect("heap holds at least `batch` regions");
            value -= r.value;
            error -= r.error;
            let mut half = r.half.clone();
            half[r.axis] *= 0.5;
            let mut lo = r.center.clone();
            lo[r.axis] -= half[r.axis];
            let mut hi = r.center;
            hi[r.axis] += half[r.axis];
            children.push((lo, half.clone()));
            children.push((hi, half));
        }
        evals += children.len() as u64 * per_region;
        for mut r in map_slice(cfg.exec, &children, |(c, hw)| rule.apply(f, c, hw)) {
            r.id = next_id;
            next_id += 1;
            value += r.value;
            error += r.error;
            heap.push(r);
        }
        iteration += 1;
        if iteration % 64 == 0 {
            let (v, e) = exact_totals(&heap);
            value = v;
            error = e;
        }
    }
}

fn exact_totals(heap: &BinaryHeap<Region>) -> (f64, f64) {
    let mut parts: Vec<(u64, f64, f64)> = heap.iter().map(|r| (r.id, r.value, r.error)).collect();
    parts.sort_unstable_by_key(|p| p.0);
    parts.iter().fold((0.0, 0.0), |(v, e), p| (v + p.1, e + p.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;

    fn exact_monomial(powers: &[u32]) -> f64 {
        powers.iter().map(|&p| 1.0 / (p as f64 + 1.0)).product()
    }

    #[test]
    fn single_rule_is_exact_to_degree_five() {
        for dim in 2..=4 {
            let rule = Rule::new(dim);
            let center = vec![0.5; dim];
            let half = vec![0.5; dim];
            // every monomial with total degree ≤ 5
            let mut powers = vec![0u32; dim];
            loop {
                let deg: u32 = powers.iter().sum();
                if deg <= 5 {
                    let p = powers.clone();
                    let f = move |x: &[f64]| x.iter().zip(&p).map(|(xi, &e)| xi.powi(e as i32)).product::<f64>();
                    let r = rule.apply(&f, &center, &half);
                    assert!((r.value - exact_monomial(&powers)).abs() < 1e-12, "dim {dim} powers {powers:?}");
                }
                let mut i = 0;
                loop {
                    if i == dim {
                        break;
                    }
                    powers[i] += 1;
                    if powers[i] <= 5 {
                        break;
                    }
                    powers[i] = 0;
                    i += 1;
                }
                if i == dim {
                    break;
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for dim in 2..=8 {
            let rule = Rule::new(dim);
            let r = rule.apply(&|_: &[f64]| 1.0, &vec![0.5; dim], &vec![0.5; dim]);
            assert!((r.value - 1.0).abs() < 1e-13);
            assert!(r.error < 1e-13);
        }
    }

    #[test]
    fn sequential_and_parallel_are_bit_identical() {
        let f = |u: &[f64]| (u[0] * u[1] * u[2]).sqrt() + u[0].min(u[2]);
        let cfg = IntegrationConfig::for_dim(3).with_abs_tol(1e-8);
        let a = integrate(&f, 3, &cfg.with_exec(Execution::Sequential)).unwrap();
        let b = integrate(&f, 3, &cfg.with_exec(Execution::Parallel)).unwrap();
        assert_eq!(a, b);
    }
}
