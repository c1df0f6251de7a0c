//! Real spherical harmonics and equiangular quadrature on the sphere.
//!
//! [`SphericalAnalyzer`] turns samples of a function on a `2B x 2B`
//! equiangular grid into spherical-harmonic coefficients. The polar nodes sit
//! at `theta_j = pi (2j+1) / 4B` with quadrature weights that integrate
//! Legendre polynomials up to degree `2B - 1` exactly, and the azimuthal
//! direction is a uniform `2B`-point trapezoid rule. For a function
//! band-limited below `B` the recovered coefficients are exact up to
//! floating-point error.
//!
//! Per-degree energies `e_l = sqrt(sum_m a_lm^2)` are invariant under
//! rotation: a rotation mixes the order-`m` coefficients within one degree
//! through an orthogonal matrix and leaves the norm alone.

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarmonicsError {
    #[error("requested {bands} bands but the sampling bandwidth is {bandwidth}")]
    BandwidthExceeded { bands: u32, bandwidth: u32 },
    #[error("sample buffer holds {actual} values, expected {expected}")]
    SampleCountMismatch { expected: usize, actual: usize },
}

/// Normalized associated Legendre values `Pbar_l^m(cos theta)` for all
/// `0 <= m <= l <= l_max`, flattened as `l (l + 1) / 2 + m`.
///
/// Normalization is chosen so the real spherical harmonics built from these
/// are orthonormal over the sphere.
pub fn normalized_legendre(l_max: u32, cos_theta: f64) -> Vec<f64> {
    let lm = l_max as usize;
    let mut table = vec![0.0; (lm + 1) * (lm + 2) / 2];
    let at = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let x = cos_theta;
    let sin_theta = (1.0 - x * x).max(0.0).sqrt();

    table[at(0, 0)] = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    for m in 1..=lm {
        // Diagonal: Pbar_m^m from Pbar_{m-1}^{m-1}.
        let factor = -((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt();
        table[at(m, m)] = factor * sin_theta * table[at(m - 1, m - 1)];
    }
    for m in 0..lm {
        // First off-diagonal: Pbar_{m+1}^m.
        table[at(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * table[at(m, m)];
    }
    for m in 0..=lm {
        for l in (m + 2)..=lm {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            table[at(l, m)] = a * (x * table[at(l - 1, m)] - b * table[at(l - 2, m)]);
        }
    }
    table
}

/// Orthonormal real spherical harmonic `Y_{l,m}(theta, phi)`; negative `m`
/// selects the sine branch.
pub fn real_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> f64 {
    debug_assert!(m.unsigned_abs() <= l);
    let table = normalized_legendre(l, theta.cos());
    let at = |l: u32, m: u32| (l * (l + 1) / 2 + m) as usize;
    let pbar = table[at(l, m.unsigned_abs())];
    let sqrt2 = std::f64::consts::SQRT_2;
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => pbar,
        std::cmp::Ordering::Greater => sqrt2 * pbar * (m as f64 * phi).cos(),
        std::cmp::Ordering::Less => sqrt2 * pbar * (-m as f64 * phi).sin(),
    }
}

/// Coefficients of one degree: `a_{l,m}` for `m = -l..=l`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCoefficients {
    pub degree: u32,
    /// Index `i` holds `m = i as i32 - degree as i32`.
    pub values: Vec<f64>,
}

impl BandCoefficients {
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Spherical-harmonic analysis on the `2B x 2B` equiangular grid.
#[derive(Debug, Clone)]
pub struct SphericalAnalyzer {
    bandwidth: u32,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    /// Polar quadrature weights, `sum_j w_j P_l(cos theta_j) = 2 delta_l0`
    /// for `l < 2B`.
    weights: Vec<f64>,
    /// `legendre[j]` is the `normalized_legendre` table at `theta_j` up to
    /// `l = bandwidth`.
    legendre: Vec<Vec<f64>>,
}

impl SphericalAnalyzer {
    pub fn new(bandwidth: u32) -> Self {
        assert!(bandwidth >= 1, "bandwidth must be positive");
        let b = bandwidth as usize;
        let nodes = 2 * b;
        let mut thetas = Vec::with_capacity(nodes);
        let mut weights = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let theta = std::f64::consts::PI * (2.0 * j as f64 + 1.0) / (4.0 * b as f64);
            let mut series = 0.0;
            for p in 0..b {
                let odd = 2.0 * p as f64 + 1.0;
                series += (odd * theta).sin() / odd;
            }
            thetas.push(theta);
            weights.push((2.0 / b as f64) * theta.sin() * series);
        }
        let phis = (0..nodes)
            .map(|k| std::f64::consts::PI * k as f64 / b as f64)
            .collect();
        let legendre = thetas
            .iter()
            .map(|t| normalized_legendre(bandwidth, t.cos()))
            .collect();
        Self {
            bandwidth,
            thetas,
            phis,
            weights,
            legendre,
        }
    }

    pub fn bandwidth(&self) -> u32 {
        self.bandwidth
    }

    pub fn sample_count(&self) -> usize {
        let nodes = 2 * self.bandwidth as usize;
        nodes * nodes
    }

    /// Grid directions as unit vectors, row-major over `(j, k)`; the sample
    /// buffer passed to [`SphericalAnalyzer::analyze`] must follow this
    /// layout.
    pub fn directions(&self) -> Vec<Vector3<f64>> {
        let mut dirs = Vec::with_capacity(self.sample_count());
        for &theta in &self.thetas {
            let (sin_t, cos_t) = theta.sin_cos();
            for &phi in &self.phis {
                let (sin_p, cos_p) = phi.sin_cos();
                dirs.push(Vector3::new(sin_t * cos_p, sin_t * sin_p, cos_t));
            }
        }
        dirs
    }

    /// Recovers coefficients for degrees `l < bands` from grid samples.
    pub fn analyze(
        &self,
        samples: &[f64],
        bands: u32,
    ) -> Result<Vec<BandCoefficients>, HarmonicsError> {
        if bands > self.bandwidth {
            return Err(HarmonicsError::BandwidthExceeded {
                bands,
                bandwidth: self.bandwidth,
            });
        }
        if samples.len() != self.sample_count() {
            return Err(HarmonicsError::SampleCountMismatch {
                expected: self.sample_count(),
                actual: samples.len(),
            });
        }
        let nodes = 2 * self.bandwidth as usize;
        let max_m = bands.saturating_sub(1) as usize;

        // Separate the azimuthal sums: g_cos[j][m] = sum_k f_jk cos(m phi_k)
        // and likewise for sine, with the trig factors tabulated once.
        let mut cos_table = vec![0.0; (max_m + 1) * nodes];
        let mut sin_table = vec![0.0; (max_m + 1) * nodes];
        for m in 0..=max_m {
            for (k, &phi) in self.phis.iter().enumerate() {
                let (s, c) = (m as f64 * phi).sin_cos();
                cos_table[m * nodes + k] = c;
                sin_table[m * nodes + k] = s;
            }
        }
        let mut g_cos = vec![vec![0.0; max_m + 1]; nodes];
        let mut g_sin = vec![vec![0.0; max_m + 1]; nodes];
        for j in 0..nodes {
            let row = &samples[j * nodes..(j + 1) * nodes];
            for m in 0..=max_m {
                let cos_row = &cos_table[m * nodes..(m + 1) * nodes];
                let sin_row = &sin_table[m * nodes..(m + 1) * nodes];
                let mut c = 0.0;
                let mut s = 0.0;
                for ((&value, &cv), &sv) in row.iter().zip(cos_row).zip(sin_row) {
                    c += value * cv;
                    s += value * sv;
                }
                g_cos[j][m] = c;
                g_sin[j][m] = s;
            }
        }

        let delta_phi = std::f64::consts::PI / self.bandwidth as f64;
        let sqrt2 = std::f64::consts::SQRT_2;
        let at = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let mut out = Vec::with_capacity(bands as usize);
        for l in 0..bands as usize {
            let mut values = vec![0.0; 2 * l + 1];
            for m in 0..=l {
                let mut acc_cos = 0.0;
                let mut acc_sin = 0.0;
                for j in 0..nodes {
                    let base = self.weights[j] * self.legendre[j][at(l, m)];
                    acc_cos += base * g_cos[j][m];
                    acc_sin += base * g_sin[j][m];
                }
                if m == 0 {
                    values[l] = delta_phi * acc_cos;
                } else {
                    values[l + m] = delta_phi * sqrt2 * acc_cos;
                    values[l - m] = delta_phi * sqrt2 * acc_sin;
                }
            }
            out.push(BandCoefficients {
                degree: l as u32,
                values,
            });
        }
        Ok(out)
    }

    /// Per-degree energies of the sampled function for `l < bands`.
    pub fn band_energies(&self, samples: &[f64], bands: u32) -> Result<Vec<f64>, HarmonicsError> {
        Ok(self
            .analyze(samples, bands)?
            .iter()
            .map(BandCoefficients::energy)
            .collect())
    }

    /// Samples a closed-form function over the grid, in analysis layout.
    pub fn sample_function(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut samples = Vec::with_capacity(self.sample_count());
        for &theta in &self.thetas {
            for &phi in &self.phis {
                samples.push(f(theta, phi));
            }
        }
        samples
    }
}
