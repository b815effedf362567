use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Norm;
use crate::rng::{standard_normal, uniform_in_unit_ball, uniform_on_unit_sphere, RngStream, StreamRng};

/// Distribution of the perturbation direction `U` and weight `V`. Every scheme
/// satisfies `E[V Uᵀ] = I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationScheme {
    /// `U_i` iid ±1, `V_i = 1/U_i`.
    Spsa,
    /// `U` uniform on the sphere of radius `√d`, `V = U`.
    Rdsa,
    /// `U` standard Gaussian, `V = U`.
    Sf,
    /// `U` uniform on the unit sphere, `V = d·U` (surface sampling of the unit ball).
    Surface,
}

impl PerturbationScheme {
    pub fn sample_into(&self, rng: &mut StreamRng, u: &mut [f64], v: &mut [f64]) {
        let d = u.len();
        match self {
            PerturbationScheme::Spsa => {
                for (ui, vi) in u.iter_mut().zip(v.iter_mut()) {
                    let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    *ui = s;
                    *vi = 1.0 / s;
                }
            }
            PerturbationScheme::Rdsa => {
                let r = (d as f64).sqrt();
                let w = uniform_on_unit_sphere(d, rng);
                for ((ui, vi), wi) in u.iter_mut().zip(v.iter_mut()).zip(w) {
                    *ui = r * wi;
                    *vi = *ui;
                }
            }
            PerturbationScheme::Sf => {
                for (ui, vi) in u.iter_mut().zip(v.iter_mut()) {
                    *ui = standard_normal(rng);
                    *vi = *ui;
                }
            }
            PerturbationScheme::Surface => {
                let w = uniform_on_unit_sphere(d, rng);
                for ((ui, vi), wi) in u.iter_mut().zip(v.iter_mut()).zip(w) {
                    *ui = wi;
                    *vi = d as f64 * wi;
                }
            }
        }
    }

    pub fn sample(&self, d: usize, rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>) {
        let (mut u, mut v) = (vec![0.0; d], vec![0.0; d]);
        self.sample_into(rng, &mut u, &mut v);
        (u, v)
    }
}

/// Moments of `(‖U‖, ‖V‖_*)` entering the envelope constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeMoments {
    /// `E[‖V‖_* ‖U‖²]`
    pub v_u2: f64,
    /// `E[‖V‖_*²]`
    pub v2: f64,
    /// `E[‖V‖_* ‖U‖³]`
    pub v_u3: f64,
    /// `E[‖V‖_*² ‖U‖²]`
    pub v2_u2: f64,
    /// `E[‖V‖_*² ‖U‖⁴]`
    pub v2_u4: f64,
}

pub const MOMENT_SAMPLES: usize = 1_000_000;
const MOMENT_SEED: u64 = 0x6d6f_6d65_6e74;
const MOMENT_CHUNKS: usize = 64;

type MomentKey = (PerturbationScheme, usize, Norm);

fn cache() -> &'static Mutex<HashMap<MomentKey, SchemeMoments>> {
    static CACHE: OnceLock<Mutex<HashMap<MomentKey, SchemeMoments>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Monte Carlo moments from a fixed seed, memoized per `(scheme, d, norm)`.
pub fn scheme_moments(scheme: PerturbationScheme, d: usize, norm: Norm) -> SchemeMoments {
    let key = (scheme, d, norm);
    if let Some(m) = cache().lock().expect("moment cache poisoned").get(&key) {
        return *m;
    }
    let m = estimate_moments(scheme, d, norm);
    cache().lock().expect("moment cache poisoned").insert(key, m);
    m
}

fn estimate_moments(scheme: PerturbationScheme, d: usize, norm: Norm) -> SchemeMoments {
    let root = RngStream::new(MOMENT_SEED, d as u64);
    let per_chunk = MOMENT_SAMPLES / MOMENT_CHUNKS;
    let partial: Vec<[f64; 5]> = (0..MOMENT_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = root.derive_path(&[scheme as u64, norm as u64, c as u64]).rng();
            let (mut u, mut v) = (vec![0.0; d], vec![0.0; d]);
            let mut acc = [0.0; 5];
            for _ in 0..per_chunk {
                scheme.sample_into(&mut rng, &mut u, &mut v);
                let nu = norm.eval(&u);
                let nv = norm.dual_norm(&v);
                let (nu2, nv2) = (nu * nu, nv * nv);
                acc[0] += nv * nu2;
                acc[1] += nv2;
                acc[2] += nv * nu2 * nu;
                acc[3] += nv2 * nu2;
                acc[4] += nv2 * nu2 * nu2;
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 5];
    for p in &partial {
        for (t, x) in tot.iter_mut().zip(p) {
            *t += x;
        }
    }
    let n = (per_chunk * MOMENT_CHUNKS) as f64;
    SchemeMoments {
        v_u2: tot[0] / n,
        v2: tot[1] / n,
        v_u3: tot[2] / n,
        v2_u2: tot[3] / n,
        v2_u4: tot[4] / n,
    }
}

/// `E‖W‖²` for `W` uniform in the unit Euclidean ball, measured in `norm`.
pub fn ball_second_moment(d: usize, norm: Norm) -> f64 {
    if norm == Norm::Euclidean {
        return d as f64 / (d as f64 + 2.0);
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, Norm), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("moment cache poisoned").get(&(d, norm)) {
        return *v;
    }
    let mut rng = RngStream::new(MOMENT_SEED, 0xba11).derive(d as u64).rng();
    let mut acc = 0.0;
    for _ in 0..MOMENT_SAMPLES {
        let w = uniform_in_unit_ball(d, &mut rng);
        acc += norm.eval(&w).powi(2);
    }
    let m = acc / MOMENT_SAMPLES as f64;
    cache.lock().expect("moment cache poisoned").insert((d, norm), m);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [PerturbationScheme; 4] = [
        PerturbationScheme::Spsa,
        PerturbationScheme::Rdsa,
        PerturbationScheme::Sf,
        PerturbationScheme::Surface,
    ];

    #[test]
    fn identity_cross_moment_and_zero_mean() {
        let d = 3;
        let n = 1_000_000;
        for scheme in ALL {
            let mut rng = RngStream::new(21, scheme as u64).rng();
            let mut sum_vu = vec![0.0; d * d];
            let mut sum_vu_sq = vec![0.0; d * d];
            let mut sum_v = vec![0.0; d];
            let mut sum_v_sq = vec![0.0; d];
            let (mut u, mut v) = (vec![0.0; d], vec![0.0; d]);
            for _ in 0..n {
                scheme.sample_into(&mut rng, &mut u, &mut v);
                for i in 0..d {
                    sum_v[i] += v[i];
                    sum_v_sq[i] += v[i] * v[i];
                    for j in 0..d {
                        let x = v[i] * u[j];
                        sum_vu[i * d + j] += x;
                        sum_vu_sq[i * d + j] += x * x;
                    }
                }
            }
            let nf = n as f64;
            for i in 0..d {
                let m = sum_v[i] / nf;
                let se = ((sum_v_sq[i] / nf - m * m) / nf).sqrt();
                assert!(m.abs() <= 5.0 * se, "{scheme:?}: E[V_{i}] = {m} (se {se})");
                for j in 0..d {
                    let k = i * d + j;
                    let m = sum_vu[k] / nf;
                    let se = ((sum_vu_sq[k] / nf - m * m) / nf).sqrt();
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (m - target).abs() <= 5.0 * se + 1e-12,
                        "{scheme:?}: E[VU^T]_{i}{j} = {m} (se {se})"
                    );
                }
            }
        }
    }

    #[test]
    fn deterministic_norm_moments() {
        // SPSA: ‖U‖₂ = ‖V‖₂ = √d exactly; Surface: ‖U‖ = 1, ‖V‖ = d.
        let m = scheme_moments(PerturbationScheme::Spsa, 4, Norm::Euclidean);
        assert!((m.v_u2 - 8.0).abs() < 1e-9 && (m.v2 - 4.0).abs() < 1e-9);
        let m = scheme_moments(PerturbationScheme::Surface, 2, Norm::Euclidean);
        assert!((m.v_u2 - 2.0).abs() < 1e-9 && (m.v2_u4 - 4.0).abs() < 1e-9);
        // SPSA under the max norm: ‖U‖_∞ = 1, ‖V‖_1 = d.
        let m = scheme_moments(PerturbationScheme::Spsa, 4, Norm::Max);
        assert!((m.v_u3 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_moments_match_closed_form() {
        // E‖g‖⁴ = d(d+2) for g ~ N(0, I_d).
        let m = scheme_moments(PerturbationScheme::Sf, 2, Norm::Euclidean);
        assert!((m.v2_u2 - 8.0).abs() < 0.1, "{}", m.v2_u2);
        assert!((m.v2 - 2.0).abs() < 0.02);
        assert_eq!(m, scheme_moments(PerturbationScheme::Sf, 2, Norm::Euclidean));
    }

    #[test]
    fn ball_moment_closed_form() {
        assert!((ball_second_moment(1, Norm::Euclidean) - 1.0 / 3.0).abs() < 1e-15);
        let mx = ball_second_moment(1, Norm::Max);
        assert!((mx - 1.0 / 3.0).abs() < 2e-3);
    }
}
