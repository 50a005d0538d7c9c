//! Named parameter storage, initialization and structural validation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::spec::ModelSpec;
use crate::tensor::Tensor;
use crate::Error;

/// Parameters in the spec's canonical order. Lookups are linear; parameter
/// counts here are tiny.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    entries: Vec<(String, Tensor)>,
}

impl Weights {
    pub fn from_entries(entries: Vec<(String, Tensor)>) -> Self {
        Weights { entries }
    }

    /// Fan-in scaled uniform init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    /// biases zero. One generator, tensors filled in canonical order, so a
    /// seed pins every parameter.
    pub fn init(spec: &ModelSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for (name, shape) in spec.tensor_layout() {
            let mut t = Tensor::zeros(&shape);
            if !name.ends_with(".bias") {
                // fan-in: everything but the leading output dimension
                let fan_in: usize = shape[1..].iter().product();
                let bound = 1.0 / (fan_in as f32).sqrt();
                for v in t.data_mut() {
                    *v = rng.gen_range(-bound..=bound);
                }
            }
            entries.push((name, t));
        }
        Weights { entries }
    }

    pub fn zeros(spec: &ModelSpec) -> Self {
        let entries = spec
            .tensor_layout()
            .into_iter()
            .map(|(name, shape)| (name, Tensor::zeros(&shape)))
            .collect();
        Weights { entries }
    }

    pub fn entries(&self) -> &[(String, Tensor)] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [(String, Tensor)] {
        &mut self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Checks that the stored tensors are exactly the spec's layout.
    pub fn validate(&self, spec: &ModelSpec) -> Result<(), Error> {
        let layout = spec.tensor_layout();
        if layout.len() != self.entries.len() {
            return Err(Error::BadWeights(format!(
                "expected {} tensors, found {}",
                layout.len(),
                self.entries.len()
            )));
        }
        for ((want_name, want_shape), (name, tensor)) in layout.iter().zip(&self.entries) {
            if want_name != name {
                return Err(Error::BadWeights(format!(
                    "expected tensor {want_name:?}, found {name:?}"
                )));
            }
            if tensor.shape() != want_shape.as_slice() {
                return Err(Error::BadWeights(format!(
                    "{name}: shape {:?} does not match {:?}",
                    tensor.shape(),
                    want_shape
                )));
            }
            if tensor.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::BadWeights(format!("{name}: non-finite value")));
            }
        }
        Ok(())
    }

    /// True when every dense-head weight is non-zero. Query-based critical
    /// set recovery is only guaranteed to match the structural one on such
    /// heads: a zero weight can hide a latent change from the output.
    pub fn head_weights_all_nonzero(&self, spec: &ModelSpec) -> bool {
        spec.head_weight_names().iter().all(|name| {
            self.get(name)
                .map(|t| t.data().iter().all(|&v| v != 0.0))
                .unwrap_or(false)
        })
    }

    pub fn bits_eq(&self, other: &Weights) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((an, at), (bn, bt))| an == bn && at.bits_eq(bt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_bounded() {
        let spec = ModelSpec::desk_point(5);
        let a = Weights::init(&spec, 9);
        let b = Weights::init(&spec, 9);
        assert!(a.bits_eq(&b));
        let c = Weights::init(&spec, 10);
        assert!(!a.bits_eq(&c));

        let w0 = a.get("point0.weight").unwrap();
        let bound = 1.0 / 3.0f32.sqrt();
        assert!(w0.data().iter().all(|v| v.abs() <= bound));
        let b0 = a.get("point0.bias").unwrap();
        assert!(b0.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn validate_catches_missing_and_misshapen() {
        let spec = ModelSpec::desk_point(5);
        let good = Weights::init(&spec, 1);
        good.validate(&spec).unwrap();

        let mut missing = good.clone();
        missing.entries.pop();
        assert!(missing.validate(&spec).is_err());

        let mut wrong = good.clone();
        wrong.entries[0].1 = Tensor::zeros(&[2, 2]);
        assert!(wrong.validate(&spec).is_err());
    }

    #[test]
    fn nonzero_head_check_spots_a_zero() {
        let spec = ModelSpec::desk_point(5);
        let mut w = Weights::init(&spec, 3);
        assert!(w.head_weights_all_nonzero(&spec));
        w.get_mut("fcn1.weight").unwrap().data_mut()[0] = 0.0;
        assert!(!w.head_weights_all_nonzero(&spec));
        // zeros in the per-point layers do not matter for this check
        let mut w2 = Weights::init(&spec, 4);
        w2.get_mut("point0.weight").unwrap().data_mut()[0] = 0.0;
        assert!(w2.head_weights_all_nonzero(&spec));
    }
}
