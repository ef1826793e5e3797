//! Browser bindings for three interactive views: the Gaussian-mean example
//! curves, a `ψ*⁻¹` explorer, and the noisy-GD information budget.
//!
//! Every export returns a flat `Float64Array` laid out as consecutive
//! records; the record width is documented per function. The plain-Rust
//! functions behind the exports are public so they can be tested natively.

use infotl::bounds::{
    gaussian_example_bound, gaussian_example_exact, gaussian_example_mi, gen_bound_beta0, noisy_gd_gen_bound,
    noisy_gd_info_budget, psi_star_inverse, psi_star_inverse_numeric, CgfEnvelope, NoiseKind, NoisyGdSchedule, Side,
};
use infotl::divergence::kl_scalar_gaussian;
use infotl::risk::RiskWeights;
use wasm_bindgen::prelude::*;

pub type DemoResult = Result<Vec<f64>, String>;

/// Log-spaced integers in `[lo, hi]`, deduplicated.
fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    if points < 2 || lo >= hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

/// Records of width 4: `n, exact gen, closed-form bound, envelope bound`.
/// The envelope bound inverts the example's CGF envelope at the exact MI.
pub fn gaussian_curves(variance: f64, mean_gap: f64, n_max: usize, points: usize) -> DemoResult {
    if n_max < 2 {
        return Err("n_max must be at least 2".into());
    }
    let kl = kl_scalar_gaussian(0.0, mean_gap, variance).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for n in log_grid(2, n_max, points) {
        let (exact, _) = gaussian_example_exact(n, variance, kl).map_err(|e| e.to_string())?;
        let closed = gaussian_example_bound(n, variance, kl).map_err(|e| e.to_string())?;
        let env = CgfEnvelope::gaussian_example(n, variance, mean_gap).map_err(|e| e.to_string())?;
        let mi = gaussian_example_mi(n).map_err(|e| e.to_string())?;
        // Every MI term is identical, so n copies average to one term.
        let (upper, _) = gen_bound_beta0(&env, &[mi], kl, 1).map_err(|e| e.to_string())?;
        out.extend([n as f64, exact, closed, upper]);
    }
    Ok(out)
}

/// Records of width 3: `x, ψ*⁻¹(x) numerically, √(2r²x)`, for the
/// sub-Gaussian envelope `ψ(λ) = r²λ²/2` on a linear grid over `[0, x_max]`.
pub fn psi_inverse_curve(r2: f64, x_max: f64, points: usize) -> DemoResult {
    if !(r2 > 0.0 && x_max > 0.0) || points < 2 {
        return Err("need r² > 0, x_max > 0 and at least two points".into());
    }
    let env = CgfEnvelope::subgaussian(r2).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let x = x_max * i as f64 / (points - 1) as f64;
        let numeric = psi_star_inverse_numeric(&env, x, Side::Plus).map_err(|e| e.to_string())?;
        let closed = psi_star_inverse(&env, x, Side::Plus).map_err(|e| e.to_string())?;
        out.extend([x, numeric, closed]);
    }
    Ok(out)
}

/// Parameters of the noisy-GD view, bundled to keep the export signature
/// manageable.
#[derive(Debug, Clone, Copy)]
pub struct NoisyGdView {
    pub t_max: usize,
    pub eta: f64,
    pub sigma: f64,
    pub d: usize,
    pub k_st: f64,
    pub r2: f64,
    pub kl: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
}

/// Records of width 3: `T, Î(S), bound`, for `T = 1..=t_max` under a
/// constant Gaussian-noise schedule.
pub fn noisy_gd_curve(v: NoisyGdView) -> DemoResult {
    let weights = RiskWeights::new(v.alpha, v.beta).map_err(|e| e.to_string())?;
    let full = NoisyGdSchedule::constant(v.t_max, v.eta, v.sigma, v.d, v.k_st, NoiseKind::Gaussian)
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * v.t_max);
    for t in 1..=v.t_max {
        let s = full.truncated(t).map_err(|e| e.to_string())?;
        let budget = noisy_gd_info_budget(&s).map_err(|e| e.to_string())?;
        let bound = noisy_gd_gen_bound(&s, v.r2, v.kl, &weights, v.n).map_err(|e| e.to_string())?;
        out.extend([t as f64, budget, bound]);
    }
    Ok(out)
}

fn js(r: DemoResult) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gaussianCurves)]
pub fn gaussian_curves_js(variance: f64, mean_gap: f64, n_max: usize, points: usize) -> Result<Vec<f64>, JsError> {
    js(gaussian_curves(variance, mean_gap, n_max, points))
}

#[wasm_bindgen(js_name = psiInverseCurve)]
pub fn psi_inverse_curve_js(r2: f64, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(psi_inverse_curve(r2, x_max, points))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = noisyGdCurve)]
pub fn noisy_gd_curve_js(
    t_max: usize,
    eta: f64,
    sigma: f64,
    d: usize,
    k_st: f64,
    r2: f64,
    kl: f64,
    alpha: f64,
    beta: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    js(noisy_gd_curve(NoisyGdView {
        t_max,
        eta,
        sigma,
        d,
        k_st,
        r2,
        kl,
        alpha,
        beta,
        n,
    }))
}
