//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; the page parses it and draws.

use mtails::bounds::{bernstein_tail, BernsteinParams};
use mtails::rmm;
use mtails::rng;
use mtails::specmat::spectral_norm;
use mtails::tailfn::{phi, TailProbability};
use nalgebra::DMatrix;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, mtails::Error>;

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let k = points.max(2);
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if lo > 0.0 && hi > lo && hi.is_finite() {
        Ok(())
    } else {
        Err(mtails::Error::Domain(format!("need 0 < lo < hi, got [{lo}, {hi}]")))
    }
}

pub fn tail_curve_value(t_min: f64, t_max: f64, points: usize) -> Result<Value> {
    check_range(t_min, t_max)?;
    let t = grid(t_min, t_max, points);
    let phi_t = t.iter().map(|&x| phi(x)).collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "t": t,
        "phi": phi_t,
        "half_exp": t.iter().map(|x| (-x / 2.0).exp()).collect::<Vec<_>>(),
        "exp": t.iter().map(|x| (-x).exp()).collect::<Vec<_>>(),
    }))
}

pub fn bernstein_curve_value(n: u32, b: f64, sigma2: f64, k: f64, t_max: f64, points: usize) -> Result<Value> {
    check_range(0.05, t_max)?;
    let p = BernsteinParams::new(n as u64, b, sigma2, k)?;
    let certs = grid(0.05, t_max, points)
        .into_iter()
        .map(|t| bernstein_tail(&p, t))
        .collect::<Result<Vec<_>>>()?;
    // the ambient-dimension version of the same bound, for comparison
    let scalar: Vec<f64> = certs
        .iter()
        .map(|c| TailProbability::from_raw(k * (-c.t).exp()).value)
        .collect();
    Ok(json!({
        "t": certs.iter().map(|c| c.t).collect::<Vec<_>>(),
        "deviation": certs.iter().map(|c| c.deviation).collect::<Vec<_>>(),
        "probability": certs.iter().map(|c| c.probability.value).collect::<Vec<_>>(),
        "exp_probability": scalar,
    }))
}

/// `rows x m` matrix whose column `j` is scaled by `(j + 1)^(-decay)`.
fn decaying(rows: usize, m: usize, decay: f64, seed: u64, stream: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, stream);
    DMatrix::from_fn(rows, m, |_, j| (2.0 * rng::unit_f64(&mut r) - 1.0) * ((j + 1) as f64).powf(-decay))
}

pub fn rmm_experiment_value(rows: usize, m: usize, decay: f64, n_max: usize, runs: usize, seed: u64) -> Result<Value> {
    if rows == 0 || m == 0 || n_max == 0 || runs == 0 || rows > 64 || m > 4096 || runs > 200 || n_max > 20_000 {
        return Err(mtails::Error::Domain("sizes out of range".into()));
    }
    let a = decaying(rows, m, decay, seed, 0);
    let b = decaying(rows, m, decay, seed, 1);
    let plan = rmm::build_plan(&a, &b)?;
    let stats = rmm::ProductStats::compute(&a, &b)?;
    let exact = &a * b.transpose();
    let scale = stats.scale();
    let t = std::f64::consts::LN_10;

    let mut ns: Vec<usize> = Vec::new();
    let mut n = 4usize;
    while n < n_max {
        ns.push(n);
        n = (n as f64 * 1.6).ceil() as usize;
    }
    ns.push(n_max);

    let (mut mean_err, mut worst_err, mut precise, mut simplified) = (vec![], vec![], vec![], vec![]);
    for &n in &ns {
        let mut errs = Vec::with_capacity(runs);
        for run in 0..runs {
            let est = rmm::approx_product(&a, &b, &plan, n, seed.wrapping_add(1 + run as u64))?;
            errs.push(spectral_norm(&(est - &exact))? / scale);
        }
        mean_err.push(errs.iter().sum::<f64>() / runs as f64);
        worst_err.push(errs.iter().copied().fold(0.0, f64::max));
        precise.push(rmm::certificate_precise_from_stats(&stats, n as u64, t)?.relative_deviation());
        simplified.push(rmm::certificate_simplified(stats.stable_rank_a, stats.stable_rank_b, n as u64, t)?.deviation);
    }
    Ok(json!({
        "n": ns,
        "mean_error": mean_err,
        "max_error": worst_err,
        "precise": precise,
        "simplified": simplified,
        "stable_rank_a": stats.stable_rank_a,
        "stable_rank_b": stats.stable_rank_b,
        "sample_size_eps_half": rmm::sample_size(stats.stable_rank_a, stats.stable_rank_b, 0.5, 0.1)?,
    }))
}

fn out(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

/// `phi(t)`, `e^(-t/2)` and `e^(-t)` on a grid.
#[wasm_bindgen]
pub fn tail_curve(t_min: f64, t_max: f64, points: usize) -> std::result::Result<String, JsError> {
    out(tail_curve_value(t_min, t_max, points))
}

/// Bernstein deviation and probability as `t` varies.
#[wasm_bindgen]
pub fn bernstein_curve(n: u32, b: f64, sigma2: f64, k: f64, t_max: f64, points: usize) -> std::result::Result<String, JsError> {
    out(bernstein_curve_value(n, b, sigma2, k, t_max, points))
}

/// Observed relative error of the sampled product against both certificates.
#[wasm_bindgen]
pub fn rmm_experiment(rows: usize, m: usize, decay: f64, n_max: usize, runs: usize, seed: u32) -> std::result::Result<String, JsError> {
    out(rmm_experiment_value(rows, m, decay, n_max, runs, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_curve_crosses() {
        let v = tail_curve_value(1.0, 6.0, 501).unwrap();
        let phi_t = v["phi"].as_array().unwrap();
        let half = v["half_exp"].as_array().unwrap();
        assert_eq!(phi_t.len(), 501);
        // phi sits above e^{-t/2} at t = 1 and below it at t = 6
        assert!(phi_t[0].as_f64() > half[0].as_f64());
        assert!(phi_t[500].as_f64() < half[500].as_f64());
        assert!(tail_curve_value(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn bernstein_curve_monotone() {
        let v = bernstein_curve_value(100, 3.0, 3.0, 4.0, 10.0, 64).unwrap();
        let dev: Vec<f64> = v["deviation"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(dev.windows(2).all(|w| w[1] > w[0]));
        assert!(bernstein_curve_value(0, 3.0, 3.0, 4.0, 10.0, 64).is_err());
    }

    #[test]
    fn rmm_experiment_error_shrinks() {
        let v = rmm_experiment_value(8, 200, 1.0, 2000, 10, 4).unwrap();
        let mean: Vec<f64> = v["mean_error"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(mean.last().unwrap() < mean.first().unwrap());
        let precise: Vec<f64> = v["precise"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(precise.iter().zip(&mean).all(|(p, m)| p > m));
        assert_eq!(v, rmm_experiment_value(8, 200, 1.0, 2000, 10, 4).unwrap());
    }
}
