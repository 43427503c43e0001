//! Sampled warped-product profiles `dr² + ω(r)² g_can` with potential `f(r)`, and their file format.

use crate::fd;
use crate::phase_system::SolitonParams;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Schema tag written into every profile file.
pub const PROFILE_SCHEMA: &str = "rho-soliton-profile/1";

/// Whether a profile has been rescaled so that the scalar curvature at the tip equals one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "R_at_origin_one")]
    ROriginOne,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("malformed profile: {0}")]
    Malformed(String),
    #[error("profile file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Samples of `(r, ω, ω', ω'', f, f')` on an increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T> {
    pub params: SolitonParams<T>,
    pub r: Vec<T>,
    pub omega: Vec<T>,
    pub omega_p: Vec<T>,
    pub omega_pp: Vec<T>,
    pub f: Vec<T>,
    pub f_p: Vec<T>,
    /// Analytic `f''` when the producer knows it in closed form; never serialized.
    pub f_pp: Option<Vec<T>>,
    pub normalization: Normalization,
}

impl<T: Real> RadialProfile<T> {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Checks array lengths, finiteness and strict monotonicity of the grid.
    pub fn validate(&self) -> Result<(), ProfileError> {
        let n = self.r.len();
        if n < 5 {
            return Err(ProfileError::Malformed(format!("need at least 5 samples, got {n}")));
        }
        let cols = [&self.omega, &self.omega_p, &self.omega_pp, &self.f, &self.f_p];
        if cols.iter().any(|c| c.len() != n) || self.f_pp.as_ref().is_some_and(|c| c.len() != n) {
            return Err(ProfileError::Malformed("column lengths differ".into()));
        }
        if cols.iter().chain(std::iter::once(&&self.r)).any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(ProfileError::Malformed("non-finite sample".into()));
        }
        if self.r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ProfileError::Malformed("r grid is not strictly increasing".into()));
        }
        if self.omega.iter().any(|w| *w < T::zero()) {
            return Err(ProfileError::Malformed("negative warping factor".into()));
        }
        Ok(())
    }

    /// `f''` at every sample: the analytic values if carried, otherwise a 5-point finite difference of `f'`.
    pub fn f_pp_values(&self) -> Vec<T> {
        match &self.f_pp {
            Some(v) => v.clone(),
            None => fd::derivative(&self.r, &self.f_p, 1, 5),
        }
    }

    /// The homothety `g → c² g`, realized as `r → c r`, `ω → c ω`; `f` is unchanged and `λ → λ/c²`.
    pub fn scaled(&self, c: T) -> Self {
        let c2 = c * c;
        let mut params = self.params;
        params.lambda = params.lambda / c2;
        Self {
            params,
            r: self.r.iter().map(|v| *v * c).collect(),
            omega: self.omega.iter().map(|v| *v * c).collect(),
            omega_p: self.omega_p.clone(),
            omega_pp: self.omega_pp.iter().map(|v| *v / c).collect(),
            f: self.f.clone(),
            f_p: self.f_p.iter().map(|v| *v / c).collect(),
            f_pp: self.f_pp.as_ref().map(|v| v.iter().map(|x| *x / c2).collect()),
            normalization: self.normalization,
        }
    }

    /// Restriction to the samples with indices in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            params: self.params,
            r: self.r[range.clone()].to_vec(),
            omega: self.omega[range.clone()].to_vec(),
            omega_p: self.omega_p[range.clone()].to_vec(),
            omega_pp: self.omega_pp[range.clone()].to_vec(),
            f: self.f[range.clone()].to_vec(),
            f_p: self.f_p[range.clone()].to_vec(),
            f_pp: self.f_pp.as_ref().map(|v| v[range.clone()].to_vec()),
            normalization: self.normalization,
        }
    }
}

/// Formats a float as a decimal string with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64, ProfileError> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.trim().parse::<f64>().map_err(|_| ProfileError::Malformed(format!("{what}: cannot parse {s:?} as a number"))),
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    n: u32,
    rho: String,
    lambda: String,
    kappa: i8,
}

#[derive(Serialize, Deserialize)]
struct SampleFile {
    r: String,
    omega: String,
    omega_p: String,
    omega_pp: String,
    f: String,
    f_p: String,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    schema: String,
    params: ParamsFile,
    normalization: Normalization,
    samples: Vec<SampleFile>,
}

impl RadialProfile<f64> {
    /// Serializes to the profile JSON format (pretty-printed, stable key order).
    pub fn to_json(&self) -> String {
        let file = ProfileFile {
            schema: PROFILE_SCHEMA.to_string(),
            params: ParamsFile {
                n: self.params.n,
                rho: fmt17(self.params.rho),
                lambda: fmt17(self.params.lambda),
                kappa: self.params.kappa,
            },
            normalization: self.normalization,
            samples: (0..self.len())
                .map(|i| SampleFile {
                    r: fmt17(self.r[i]),
                    omega: fmt17(self.omega[i]),
                    omega_p: fmt17(self.omega_p[i]),
                    omega_pp: fmt17(self.omega_pp[i]),
                    f: fmt17(self.f[i]),
                    f_p: fmt17(self.f_p[i]),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("profile serializes");
        s.push('\n');
        s
    }

    /// Parses the profile JSON format.
    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let file: ProfileFile = serde_json::from_str(text)?;
        if file.schema != PROFILE_SCHEMA {
            return Err(ProfileError::Malformed(format!("unknown schema {:?}", file.schema)));
        }
        let params = SolitonParams::new(
            file.params.n,
            parse_f64(&file.params.rho, "rho")?,
            parse_f64(&file.params.lambda, "lambda")?,
            file.params.kappa,
        )
        .map_err(|e| ProfileError::Malformed(e.to_string()))?;
        let n = file.samples.len();
        let mut prof = RadialProfile {
            params,
            r: Vec::with_capacity(n),
            omega: Vec::with_capacity(n),
            omega_p: Vec::with_capacity(n),
            omega_pp: Vec::with_capacity(n),
            f: Vec::with_capacity(n),
            f_p: Vec::with_capacity(n),
            f_pp: None,
            normalization: file.normalization,
        };
        for s in &file.samples {
            prof.r.push(parse_f64(&s.r, "r")?);
            prof.omega.push(parse_f64(&s.omega, "omega")?);
            prof.omega_p.push(parse_f64(&s.omega_p, "omega_p")?);
            prof.omega_pp.push(parse_f64(&s.omega_pp, "omega_pp")?);
            prof.f.push(parse_f64(&s.f, "f")?);
            prof.f_p.push(parse_f64(&s.f_p, "f_p")?);
        }
        prof.validate()?;
        Ok(prof)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_profile() -> RadialProfile<f64> {
        let r: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 + 1.0 / 3.0).collect();
        RadialProfile {
            params: SolitonParams::new(4, -0.7, 0.25, 1).unwrap(),
            omega: r.iter().map(|v| v.sin()).collect(),
            omega_p: r.iter().map(|v| v.cos()).collect(),
            omega_pp: r.iter().map(|v| -v.sin()).collect(),
            f: r.iter().map(|v| v * v * std::f64::consts::PI).collect(),
            f_p: r.iter().map(|v| 2.0 * v * std::f64::consts::PI).collect(),
            r,
            f_pp: None,
            normalization: Normalization::ROriginOne,
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let p = sample_profile();
        let text = p.to_json();
        assert!(text.contains("\"schema\": \"rho-soliton-profile/1\""));
        assert!(text.contains("\"R_at_origin_one\""));
        let q = RadialProfile::from_json(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_json(), text);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
        assert_eq!(parse_f64(&fmt17(1.0 / 3.0), "x").unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn rejects_bad_files() {
        let p = sample_profile();
        let bad = p.to_json().replace("rho-soliton-profile/1", "other/2");
        assert!(RadialProfile::from_json(&bad).is_err());
        let mut q = sample_profile();
        q.r.swap(2, 3);
        assert!(q.validate().is_err());
    }

    #[test]
    fn homothety_rescales_lambda() {
        let p = sample_profile().scaled(2.0);
        assert_eq!(p.params.lambda, 0.0625);
        assert_eq!(p.omega_p, sample_profile().omega_p);
    }
}
