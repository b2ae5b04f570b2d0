//! Factor weights, their per-firm normalisation, and epsilon radii.
//!
//! Raw weights `W` price each factor. For the evaluated firm `l` they are
//! normalised so that the firm's weighted inputs and weighted outputs both
//! sum to one:
//!
//! ```text
//! V_in[j]  = W_in[j]  / Σ_j W_in[j]  · x[l][j]
//! V_out[k] = W_out[k] / Σ_k W_out[k] · y[l][k]
//! ```

use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// `W = 1 / own value` of the evaluated firm. Firm-specific.
    Sbm,
    /// `W = 1 / smallest nonzero value` of each column.
    Minimum,
    /// `W = 1 / arithmetic column mean`.
    Average,
    /// User-supplied prices.
    Custom { w_in: Vec<f64>, w_out: Vec<f64> },
}

impl WeightScheme {
    pub fn custom(w_in: Vec<f64>, w_out: Vec<f64>) -> Result<Self, SchemeError> {
        if let Some(w) = w_in
            .iter()
            .chain(&w_out)
            .find(|w| !(w.is_finite() && **w > 0.0))
        {
            return Err(SchemeError::NonPositiveWeight(*w));
        }
        Ok(Self::Custom { w_in, w_out })
    }

    /// Custom weights taken from the schema's `weight` fields.
    pub fn from_schema(ds: &Dataset) -> Result<Self, SchemeError> {
        let pick = |f: &crate::dataset::FactorSchema| {
            f.weight
                .ok_or_else(|| SchemeError::MissingWeight(f.name.clone()))
        };
        let w_in = ds.inputs().iter().map(pick).collect::<Result<_, _>>()?;
        let w_out = ds.outputs().iter().map(pick).collect::<Result<_, _>>()?;
        Self::custom(w_in, w_out)
    }

    /// True when the raw weights do not depend on the evaluated firm.
    pub fn is_shared(&self) -> bool {
        !matches!(self, Self::Sbm)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("SBM weights need strictly positive data; firm `{firm}` has zero `{factor}`")]
    ZeroDataUnderSbm { firm: String, factor: String },
    #[error("minimum weights need a nonzero entry in column `{0}`")]
    EmptyColumnUnderMinimum(String),
    #[error("weights must be finite and positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("custom weights have {got} entries for {expected} {side} factors")]
    WeightLength {
        side: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("no weight given for factor `{0}`")]
    MissingWeight(String),
    #[error("firm `{0}` has zero weighted {1}; cannot normalise")]
    ZeroNormalization(String, &'static str),
    #[error("firm index {0} out of range")]
    FirmOutOfRange(usize),
    #[error("epsilon must be finite and non-negative, got {0}")]
    InvalidEpsilon(f64),
    #[error("explicit epsilon has {got} entries for {expected} {side} factors")]
    EpsilonLength {
        side: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("no explicit epsilon given for factor `{0}`")]
    MissingEpsilon(String),
    #[error("weights were normalised for firm {weights} but epsilon requested for firm {firm}")]
    WeightsFirmMismatch { weights: usize, firm: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWeights {
    pub w_in: Vec<f64>,
    pub w_out: Vec<f64>,
    pub v_in: Vec<f64>,
    pub v_out: Vec<f64>,
    pub firm: usize,
}

fn recip_min_nonzero(col: impl Iterator<Item = f64>) -> Option<f64> {
    col.filter(|&v| v != 0.0)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        })
        .map(|v| 1.0 / v)
}

fn recip_mean(col: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = col.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    count as f64 / sum
}

/// Input and output weight vectors.
pub type WeightPair = (Vec<f64>, Vec<f64>);

/// Raw weights for schemes that do not depend on the evaluated firm.
/// `None` for `Sbm`.
pub fn shared_weights(
    ds: &Dataset,
    scheme: &WeightScheme,
) -> Result<Option<WeightPair>, SchemeError> {
    let (m, p) = (ds.num_inputs(), ds.num_outputs());
    Ok(match scheme {
        WeightScheme::Sbm => None,
        WeightScheme::Minimum => {
            let w_in = (0..m)
                .map(|j| {
                    recip_min_nonzero(ds.input_column(j)).ok_or_else(|| {
                        SchemeError::EmptyColumnUnderMinimum(ds.inputs()[j].name.clone())
                    })
                })
                .collect::<Result<_, _>>()?;
            let w_out = (0..p)
                .map(|k| {
                    recip_min_nonzero(ds.output_column(k)).ok_or_else(|| {
                        SchemeError::EmptyColumnUnderMinimum(ds.outputs()[k].name.clone())
                    })
                })
                .collect::<Result<_, _>>()?;
            Some((w_in, w_out))
        }
        WeightScheme::Average => Some((
            (0..m).map(|j| recip_mean(ds.input_column(j))).collect(),
            (0..p).map(|k| recip_mean(ds.output_column(k))).collect(),
        )),
        WeightScheme::Custom { w_in, w_out } => {
            if w_in.len() != m {
                return Err(SchemeError::WeightLength {
                    side: "input",
                    got: w_in.len(),
                    expected: m,
                });
            }
            if w_out.len() != p {
                return Err(SchemeError::WeightLength {
                    side: "output",
                    got: w_out.len(),
                    expected: p,
                });
            }
            Some((w_in.clone(), w_out.clone()))
        }
    })
}

/// Weights and their normalisation relative to `firm`.
pub fn make_weights(
    ds: &Dataset,
    scheme: &WeightScheme,
    firm: usize,
) -> Result<NormalizedWeights, SchemeError> {
    if firm >= ds.num_firms() {
        return Err(SchemeError::FirmOutOfRange(firm));
    }
    let (w_in, w_out) = match shared_weights(ds, scheme)? {
        Some(w) => w,
        None => {
            let zero = |name: &str| SchemeError::ZeroDataUnderSbm {
                firm: ds.firms()[firm].clone(),
                factor: name.to_owned(),
            };
            let w_in = ds
                .input_row(firm)
                .iter()
                .zip(ds.inputs())
                .map(|(&v, f)| {
                    if v > 0.0 {
                        Ok(1.0 / v)
                    } else {
                        Err(zero(&f.name))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let w_out = ds
                .output_row(firm)
                .iter()
                .zip(ds.outputs())
                .map(|(&v, f)| {
                    if v > 0.0 {
                        Ok(1.0 / v)
                    } else {
                        Err(zero(&f.name))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            (w_in, w_out)
        }
    };
    let dot = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let in_sum = dot(&w_in, ds.input_row(firm));
    let out_sum = dot(&w_out, ds.output_row(firm));
    if !(in_sum > 0.0) {
        return Err(SchemeError::ZeroNormalization(
            ds.firms()[firm].clone(),
            "inputs",
        ));
    }
    if !(out_sum > 0.0) {
        return Err(SchemeError::ZeroNormalization(
            ds.firms()[firm].clone(),
            "outputs",
        ));
    }
    Ok(NormalizedWeights {
        v_in: w_in.iter().map(|w| w / in_sum).collect(),
        v_out: w_out.iter().map(|w| w / out_sum).collect(),
        w_in,
        w_out,
        firm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonKind {
    /// `ε / W` per factor: the same relative meaning for every factor.
    PerWeight,
    /// `ε · own value` of the evaluated firm.
    PerFirm,
    /// `ε · column mean`; identical for every firm.
    PerAverage,
    /// Radii as given; the scalar `ε` is not applied.
    Explicit { eps_in: Vec<f64>, eps_out: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonScheme {
    pub kind: EpsilonKind,
    pub epsilon: f64,
    /// Components forced to zero after construction, `(inputs, outputs)`.
    pub zero_mask: Option<(Vec<bool>, Vec<bool>)>,
}

impl EpsilonScheme {
    pub fn new(kind: EpsilonKind, epsilon: f64) -> Self {
        Self {
            kind,
            epsilon,
            zero_mask: None,
        }
    }

    pub fn per_firm(epsilon: f64) -> Self {
        Self::new(EpsilonKind::PerFirm, epsilon)
    }

    pub fn with_zero_mask(mut self, inputs: Vec<bool>, outputs: Vec<bool>) -> Self {
        self.zero_mask = Some((inputs, outputs));
        self
    }

    /// Explicit radii and zero mask read from the schema's `epsilon` and
    /// `zero_epsilon` fields.
    pub fn explicit_from_schema(ds: &Dataset) -> Result<Self, SchemeError> {
        let pick = |f: &crate::dataset::FactorSchema| {
            f.epsilon
                .ok_or_else(|| SchemeError::MissingEpsilon(f.name.clone()))
        };
        let eps_in = ds.inputs().iter().map(pick).collect::<Result<_, _>>()?;
        let eps_out = ds.outputs().iter().map(pick).collect::<Result<_, _>>()?;
        Ok(Self::new(EpsilonKind::Explicit { eps_in, eps_out }, 0.0).with_schema_mask(ds))
    }

    /// Apply the schema's `zero_epsilon` flags, if any are set.
    pub fn with_schema_mask(self, ds: &Dataset) -> Self {
        let mi: Vec<bool> = ds.inputs().iter().map(|f| f.zero_epsilon).collect();
        let mo: Vec<bool> = ds.outputs().iter().map(|f| f.zero_epsilon).collect();
        if mi.iter().chain(&mo).any(|&z| z) {
            self.with_zero_mask(mi, mo)
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonVector {
    pub eps_in: Vec<f64>,
    pub eps_out: Vec<f64>,
}

impl EpsilonVector {
    pub fn is_zero(&self) -> bool {
        self.eps_in.iter().chain(&self.eps_out).all(|&e| e == 0.0)
    }
}

fn column_mean(col: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = col.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

pub fn make_epsilon(
    ds: &Dataset,
    weights: &NormalizedWeights,
    scheme: &EpsilonScheme,
    firm: usize,
) -> Result<EpsilonVector, SchemeError> {
    let eps = scheme.epsilon;
    if !eps.is_finite() || eps < 0.0 {
        return Err(SchemeError::InvalidEpsilon(eps));
    }
    if firm >= ds.num_firms() {
        return Err(SchemeError::FirmOutOfRange(firm));
    }
    let (m, p) = (ds.num_inputs(), ds.num_outputs());
    let (mut eps_in, mut eps_out) = match &scheme.kind {
        EpsilonKind::PerWeight => {
            if weights.firm != firm {
                return Err(SchemeError::WeightsFirmMismatch {
                    weights: weights.firm,
                    firm,
                });
            }
            (
                weights.w_in.iter().map(|w| eps / w).collect::<Vec<_>>(),
                weights.w_out.iter().map(|w| eps / w).collect::<Vec<_>>(),
            )
        }
        EpsilonKind::PerFirm => (
            ds.input_row(firm).iter().map(|v| eps * v).collect(),
            ds.output_row(firm).iter().map(|v| eps * v).collect(),
        ),
        EpsilonKind::PerAverage => (
            (0..m)
                .map(|j| eps * column_mean(ds.input_column(j)))
                .collect(),
            (0..p)
                .map(|k| eps * column_mean(ds.output_column(k)))
                .collect(),
        ),
        EpsilonKind::Explicit { eps_in, eps_out } => {
            if eps_in.len() != m {
                return Err(SchemeError::EpsilonLength {
                    side: "input",
                    got: eps_in.len(),
                    expected: m,
                });
            }
            if eps_out.len() != p {
                return Err(SchemeError::EpsilonLength {
                    side: "output",
                    got: eps_out.len(),
                    expected: p,
                });
            }
            if let Some(e) = eps_in
                .iter()
                .chain(eps_out)
                .find(|e| !(e.is_finite() && **e >= 0.0))
            {
                return Err(SchemeError::InvalidEpsilon(*e));
            }
            (eps_in.clone(), eps_out.clone())
        }
    };
    if let Some((mask_in, mask_out)) = &scheme.zero_mask {
        for (e, &z) in eps_in.iter_mut().zip(mask_in) {
            if z {
                *e = 0.0;
            }
        }
        for (e, &z) in eps_out.iter_mut().zip(mask_out) {
            if z {
                *e = 0.0;
            }
        }
    }
    Ok(EpsilonVector { eps_in, eps_out })
}
