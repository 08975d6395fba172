use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BoundedPart, Coulomb, PhaseSpaceField, Potential, SingularSet};
use crate::{Error, Result};

/// Field description as it appears in experiment configs: a family name and
/// named numeric parameters.
///
/// Families: `free`, `constant` (`v0`), `harmonic` (`omega`, default 1),
/// `coulomb` (`k`, optional `softening`; centers default to the origin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub family: String,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded: Option<BoundedSpec>,
}

/// `U_b` family: `zero`, `cosine` (`a`, `kappa` default 1) or
/// `smoothed_abs` (`a`, `width` default 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn one() -> usize {
    1
}

impl FieldSpec {
    pub fn new(family: &str) -> Self {
        Self { family: family.into(), n: 1, params: BTreeMap::new(), centers: None, bounded: None }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn with_bounded(mut self, family: &str, params: &[(&str, f64)]) -> Self {
        self.bounded = Some(BoundedSpec {
            family: family.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
        self
    }
}

fn get(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    params
        .get(key)
        .copied()
        .or(default)
        .ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{key}`")))
}

fn check_keys(params: &BTreeMap<String, f64>, allowed: &[&str], family: &str) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidParameter(format!("unknown parameter `{k}` for `{family}`"))),
        None => Ok(()),
    }
}

fn make_bounded(spec: &BoundedSpec) -> Result<BoundedPart> {
    let p = &spec.params;
    let part = match spec.family.as_str() {
        "zero" => {
            check_keys(p, &[], "zero")?;
            BoundedPart::Zero
        }
        "cosine" => {
            check_keys(p, &["a", "kappa"], "cosine")?;
            BoundedPart::Cosine { amplitude: get(p, "a", None)?, wavenumber: get(p, "kappa", Some(1.0))? }
        }
        "smoothed_abs" => {
            check_keys(p, &["a", "width"], "smoothed_abs")?;
            let width = get(p, "width", Some(1.0))?;
            if !(width > 0.0) {
                return Err(Error::InvalidParameter("smoothed_abs width must be positive".into()));
            }
            BoundedPart::SmoothedAbs { amplitude: get(p, "a", None)?, width }
        }
        other => return Err(Error::UnknownFamily(other.into())),
    };
    Ok(part)
}

/// Builds the field `b = (p, −∇U)` described by `spec`.
pub fn make_field(spec: &FieldSpec) -> Result<PhaseSpaceField> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidParameter("spatial dimension must be positive".into()));
    }
    let p = &spec.params;
    let mut potential = match spec.family.as_str() {
        "free" => {
            check_keys(p, &[], "free")?;
            Potential::zero(n)
        }
        "constant" => {
            check_keys(p, &["v0"], "constant")?;
            Potential::constant(n, get(p, "v0", None)?)
        }
        "harmonic" => {
            check_keys(p, &["omega"], "harmonic")?;
            Potential::harmonic(n, get(p, "omega", Some(1.0))?)
        }
        "coulomb" => {
            check_keys(p, &["k", "softening"], "coulomb")?;
            let centers = spec.centers.clone().unwrap_or_else(|| vec![vec![0.0; n]]);
            if let Some(c) = centers.iter().find(|c| c.len() != n) {
                return Err(Error::DimensionMismatch { expected: n, found: c.len() });
            }
            let coulomb = Coulomb::new(get(p, "k", None)?, SingularSet::points(centers)?)?
                .softened(get(p, "softening", Some(0.0))?)?;
            Potential::coulomb(n, coulomb)
        }
        other => return Err(Error::UnknownFamily(other.into())),
    };
    if let Some(b) = &spec.bounded {
        potential = potential.with_bounded(make_bounded(b)?);
    }
    Ok(PhaseSpaceField::new(potential))
}
