//! Browser demo: prediction curves, the ψ profile of one X, and a small
//! variance scan. The `wasm_bindgen` wrappers are thin; the work happens in
//! plain functions that also run natively.

use gauss_sectors::ideal_stream::enumerate_weighted_terms;
use gauss_sectors::predictions::{
    compute_constants, ratio_curve, refined_ratio, rmt_ratio, ConstantsBundle, ConstantsMethod, ConstantsOptions,
    Normalization,
};
use gauss_sectors::spectral::{psi_eval, variance_direct, WeightedAngles};
use gauss_sectors::windows::{pair_by_name, WindowPair};
use wasm_bindgen::prelude::*;

/// Keeps the page responsive: sieving beyond this belongs to the CLI.
pub const MAX_X: u32 = 5_000_000;

fn bundle(pair: &WindowPair) -> Result<ConstantsBundle, String> {
    let opts = ConstantsOptions {
        method: ConstantsMethod::DirichletSeries,
        ..ConstantsOptions::default()
    };
    compute_constants(pair, &opts).map_err(|e| e.to_string())
}

/// Flat triples (λ, rmt, refined) for λ = step, 2·step, …, ≤ lambda_max;
/// refined is NaN at the bifurcation points.
pub fn curves(window: &str, x: f64, lambda_max: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(x > 1.0 && lambda_max > 0.0 && step > 0.0) || lambda_max / step > 1e5 {
        return Err("need X > 1, λ_max > 0 and a step giving at most 10⁵ points".into());
    }
    let pair = pair_by_name(window).map_err(|e| e.to_string())?;
    let b = bundle(&pair)?;
    let n = (lambda_max / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
    let cs = ratio_curve(&b, x, &grid, Normalization::Asymptotic).map_err(|e| e.to_string())?;
    let (rmt, refined) = (&cs[0].points, &cs[1].points);
    let mut out = Vec::with_capacity(3 * rmt.len());
    let mut j = 0;
    for &(l, r) in rmt {
        out.push(l);
        out.push(r);
        if j < refined.len() && refined[j].0 == l {
            out.push(refined[j].1);
            j += 1;
        } else {
            out.push(f64::NAN);
        }
    }
    Ok(out)
}

/// Prime-power ideals of norm ≤ X with their weights, kept for repeated queries.
#[wasm_bindgen]
pub struct Sample {
    x: f64,
    pair: WindowPair,
    angles: WeightedAngles,
    bundle: ConstantsBundle,
}

impl Sample {
    pub fn build(x: u32, window: &str) -> Result<Sample, String> {
        if !(1000..=MAX_X).contains(&x) {
            return Err(format!("X must lie in [1000, {MAX_X}]"));
        }
        let pair = pair_by_name(window).map_err(|e| e.to_string())?;
        let terms = enumerate_weighted_terms(x as u64, pair.phi.support_cap()).map_err(|e| e.to_string())?;
        let angles = WeightedAngles::from_terms(&terms, &pair.phi, x as f64).into_merged();
        let bundle = bundle(&pair)?;
        Ok(Sample {
            x: x as f64,
            pair,
            angles,
            bundle,
        })
    }

    /// ψ on `points` equally spaced angles in [0, π/2), then the mean f̂(0)S_0/K.
    pub fn psi_profile(&self, k: f64, points: u32) -> Result<Vec<f64>, String> {
        if !(k >= 2.0) || points == 0 || points > 100_000 {
            return Err("need K ≥ 2 and 1..=100000 points".into());
        }
        let h = std::f64::consts::FRAC_PI_2 / points as f64;
        let grid: Vec<f64> = (0..points).map(|i| i as f64 * h).collect();
        let mut out = psi_eval(&self.angles, &self.pair.f, k, &grid);
        out.push(self.pair.f.integral() * self.angles.total_weight() / k);
        Ok(out)
    }

    /// Per λ: (achieved λ, K, empirical ratio, rmt, refined) with K = round(X^λ)
    /// and the asymptotic mean; refined is NaN next to a bifurcation.
    pub fn scan(&self, lambdas: &[f64]) -> Result<Vec<f64>, String> {
        let mut out = Vec::with_capacity(5 * lambdas.len());
        for &l in lambdas {
            let k = self.x.powf(l).round().max(2.0);
            let v = variance_direct(&self.angles, &self.pair.f, k, self.x).map_err(|e| e.to_string())?;
            let norm = Normalization::Asymptotic;
            let achieved = k.ln() / self.x.ln();
            let refined = match refined_ratio(&self.bundle, self.x, k, norm, false) {
                Ok(r) => r,
                Err(gauss_sectors::Error::Bifurcation(_)) => f64::NAN,
                Err(e) => return Err(e.to_string()),
            };
            out.extend([
                achieved,
                k,
                v.value / norm.denominator(&self.bundle, self.x, k),
                rmt_ratio(&self.bundle, self.x, k, norm),
                refined,
            ]);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

#[wasm_bindgen]
impl Sample {
    #[wasm_bindgen(constructor)]
    pub fn new(x: u32, window: &str) -> Result<Sample, JsError> {
        Sample::build(x, window).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = psiProfile)]
    pub fn psi_profile_js(&self, k: f64, points: u32) -> Result<Vec<f64>, JsError> {
        self.psi_profile(k, points).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = varianceScan)]
    pub fn scan_js(&self, lambdas: Vec<f64>) -> Result<Vec<f64>, JsError> {
        self.scan(&lambdas).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = termCount)]
    pub fn term_count(&self) -> u32 {
        self.angles.len() as u32
    }
}

#[wasm_bindgen(js_name = predictionCurves)]
pub fn prediction_curves(window: &str, x: f64, lambda_max: f64, step: f64) -> Result<Vec<f64>, JsError> {
    curves(window, x, lambda_max, step).map_err(|e| JsError::new(&e))
}
