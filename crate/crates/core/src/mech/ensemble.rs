//! Weight-space ensembling: `θ = Σ αᵢ θⁱ` over models sharing one schema.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::MechError;

/// Named flat parameter arrays, ordered by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    entries: BTreeMap<String, Vec<f64>>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces an entry.
    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<(), MechError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MechError::NonFinite(i));
        }
        self.entries.insert(name.into(), values);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.entries.get(name).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Total number of scalars.
    pub fn param_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Names and lengths, in order.
    pub fn schema(&self) -> Vec<(&str, usize)> {
        self.iter().map(|(k, v)| (k, v.len())).collect()
    }
}

/// Weighted average of `models` with weights `alpha` summing to one.
///
/// Each element is accumulated as `m + Σ αᵢ (θᵢ − m)` with `m = minᵢ θᵢ`
/// and the terms added in ascending order. Mathematically this equals
/// `Σ αᵢ θᵢ`, but it makes averaging identical models return the input bit
/// for bit. It also makes the result independent of model order and sends
/// `{θ, −θ}` with equal weights to exactly zero.
pub fn ensemble_params(models: &[ModelParams], alpha: &[f64]) -> Result<ModelParams, MechError> {
    let Some(first) = models.first() else {
        return Err(MechError::BadWeights("no models to average".into()));
    };
    if alpha.len() != models.len() {
        return Err(MechError::BadWeights(format!(
            "{} weights for {} models",
            alpha.len(),
            models.len()
        )));
    }
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(MechError::BadWeights("weights must be finite".into()));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(MechError::BadWeights(format!("weights sum to {total}, not 1")));
    }
    let schema = first.schema();
    for (i, m) in models.iter().enumerate().skip(1) {
        if m.schema() != schema {
            return Err(MechError::SchemaMismatch(format!("model {i} differs from model 0")));
        }
    }

    let mut out = ModelParams::new();
    let mut terms = Vec::with_capacity(models.len());
    for (name, len) in schema {
        let arrays: Vec<&[f64]> = models.iter().map(|m| m.get(name).expect("same schema")).collect();
        let mut merged = Vec::with_capacity(len);
        for k in 0..len {
            let anchor = arrays.iter().map(|a| a[k]).fold(f64::INFINITY, f64::min);
            terms.clear();
            terms.extend(arrays.iter().zip(alpha).map(|(a, w)| w * (a[k] - anchor)));
            terms.sort_by(f64::total_cmp);
            merged.push(anchor + terms.iter().sum::<f64>());
        }
        out.insert(name, merged)?;
    }
    Ok(out)
}

/// `1/n` for each of `n` models.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    alloc::vec![1.0 / n as f64; n]
}
