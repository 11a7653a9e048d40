//! Closed-form covariance and correlation functions for the process families,
//! plus numeric verifiers for the analytic inequalities they satisfy.
//!
//! Everything here is a pure function of its arguments and generic over
//! [`Scalar`].

mod covariance;
mod drift;
mod lemma2;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use covariance::{dual_fbm_corr, dual_fbs_corr, dual_ifbm_corr, fbm_cov, fbs_cov, ifbm_cov, sech_corr};
pub use drift::{eta_corr, eta_series_sum, f_drift, lemma1_bound, lemma1_modulus, phi_norm_sq, psi_drift};
pub use lemma2::{
    r_poly, verify_cosh_bound, verify_monotone, verify_r_nonneg, CoshBoundReport, MonotoneReport, RNonnegReport,
};

/// Hurst index, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Hurst<T>(T);

impl<T: Scalar> Hurst<T> {
    pub fn new(value: T) -> Result<Self> {
        if value > T::zero() && value < T::one() {
            Ok(Hurst(value))
        } else {
            Err(Error::InvalidHurst(value.to_f64().unwrap_or(f64::NAN)))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// `1 - H`.
    #[inline]
    pub fn complement(self) -> T {
        T::one() - self.0
    }

    /// `2H`, the exponent of the increment variance.
    #[inline]
    pub fn twice(self) -> T {
        self.0 + self.0
    }
}

impl<T: Scalar> fmt::Display for Hurst<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<T: Scalar + Serialize> Serialize for Hurst<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Hurst<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = T::deserialize(d)?;
        Hurst::new(v).map_err(serde::de::Error::custom)
    }
}

/// Process family a [`KernelSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    /// Fractional Brownian motion.
    Fbm,
    /// Fractional Brownian sheet on the plane.
    Fbs,
    /// Integrated fractional Brownian motion.
    Ifbm,
    /// Stationary Lamperti dual of fBm.
    DualFbm,
    /// Stationary Lamperti dual of integrated fBm.
    DualIfbm,
    /// Stationary dual of the sheet (product of two `DualFbm` factors).
    DualFbs,
    /// Stationary process with correlation `1/cosh(scale * t)`.
    Sech,
}

impl Family {
    pub const ALL: [Family; 7] =
        [Family::Fbm, Family::Fbs, Family::Ifbm, Family::DualFbm, Family::DualIfbm, Family::DualFbs, Family::Sech];

    /// Dimension of the parameter space.
    pub fn dim(self) -> usize {
        match self {
            Family::Fbs | Family::DualFbs => 2,
            _ => 1,
        }
    }

    pub fn is_stationary(self) -> bool {
        matches!(self, Family::DualFbm | Family::DualIfbm | Family::DualFbs | Family::Sech)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Fbm => "FBM",
            Family::Fbs => "FBS",
            Family::Ifbm => "IFBM",
            Family::DualFbm => "DUAL_FBM",
            Family::DualIfbm => "DUAL_IFBM",
            Family::DualFbs => "DUAL_FBS",
            Family::Sech => "SECH",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase().replace('-', "_");
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == up)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel family '{s}'")))
    }
}

/// Covariance descriptor for one process family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    family: Family,
    hurst: Option<Hurst<T>>,
    scale: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(family: Family, hurst: Option<Hurst<T>>, scale: Option<T>) -> Result<Self> {
        let scale = scale.unwrap_or_else(T::half);
        if family != Family::Sech && hurst.is_none() {
            return Err(Error::InvalidArgument(format!("kernel {family} requires a Hurst index")));
        }
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidArgument("kernel scale must be positive".into()));
        }
        Ok(KernelSpec { family, hurst, scale })
    }

    pub fn with_hurst(family: Family, h: Hurst<T>) -> Self {
        KernelSpec { family, hurst: Some(h), scale: T::half() }
    }

    pub fn fbm(h: Hurst<T>) -> Self {
        Self::with_hurst(Family::Fbm, h)
    }

    pub fn fbs(h: Hurst<T>) -> Self {
        Self::with_hurst(Family::Fbs, h)
    }

    pub fn ifbm(h: Hurst<T>) -> Self {
        Self::with_hurst(Family::Ifbm, h)
    }

    pub fn dual_fbm(h: Hurst<T>) -> Self {
        Self::with_hurst(Family::DualFbm, h)
    }

    pub fn dual_ifbm(h: Hurst<T>) -> Self {
        Self::with_hurst(Family::DualIfbm, h)
    }

    pub fn dual_fbs(h: Hurst<T>) -> Self {
        Self::with_hurst(Family::DualFbs, h)
    }

    pub fn sech(scale: T) -> Result<Self> {
        Self::new(Family::Sech, None, Some(scale))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn hurst(&self) -> Option<Hurst<T>> {
        self.hurst
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// Self-similarity index `kappa` with `x(l s) =d l^kappa x(s)`, if any.
    pub fn self_similarity_index(&self) -> Option<T> {
        let h = self.hurst?.value();
        match self.family {
            Family::Fbm => Some(h),
            Family::Ifbm => Some(h + T::one()),
            Family::Fbs => Some(h + h),
            _ => None,
        }
    }

    fn h(&self) -> Hurst<T> {
        self.hurst.expect("validated at construction")
    }

    /// Covariance between two points of a one-parameter family.
    pub fn cov_1d(&self, a: T, b: T) -> Result<T> {
        Ok(match self.family {
            Family::Fbm => fbm_cov(self.h(), a, b),
            Family::Ifbm => ifbm_cov(self.h(), a, b),
            Family::DualFbm => dual_fbm_corr(self.h(), (a - b).abs()),
            Family::DualIfbm => dual_ifbm_corr(self.h(), (a - b).abs()),
            Family::Sech => sech_corr(a - b, self.scale),
            Family::Fbs | Family::DualFbs => {
                return Err(Error::DimensionMismatch { kernel: self.family.to_string(), dim: 1 })
            }
        })
    }

    /// Covariance between two points of a two-parameter family.
    pub fn cov_2d(&self, s: [T; 2], t: [T; 2]) -> Result<T> {
        Ok(match self.family {
            Family::Fbs => fbs_cov(self.h(), s, t),
            Family::DualFbs => dual_fbs_corr(self.h(), s[0] - t[0], s[1] - t[1]),
            _ => return Err(Error::DimensionMismatch { kernel: self.family.to_string(), dim: 2 }),
        })
    }
}

impl<T: Scalar> fmt::Display for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.family, self.hurst) {
            (Family::Sech, _) => write!(f, "SECH(scale={})", self.scale),
            (fam, Some(h)) => write!(f, "{fam}(H={h})"),
            (fam, None) => write!(f, "{fam}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel<T> {
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hurst: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<T>,
}

impl<T: Scalar + Serialize> Serialize for KernelSpec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawKernel {
            family: self.family,
            hurst: self.hurst.map(Hurst::value),
            scale: (self.family == Family::Sech).then_some(self.scale),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for KernelSpec<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawKernel::<T>::deserialize(d)?;
        let hurst = match (raw.family, raw.hurst) {
            (Family::Sech, _) => None,
            (_, Some(v)) => Some(Hurst::new(v).map_err(D::Error::custom)?),
            (_, None) => None,
        };
        KernelSpec::new(raw.family, hurst, raw.scale).map_err(D::Error::custom)
    }
}
