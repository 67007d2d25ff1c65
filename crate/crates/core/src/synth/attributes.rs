//! Attribute-level classification task: noisy vectors around per-class
//! hypercube centroids.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Bits needed to give every class a distinct hypercube vertex.
pub fn bits_for_classes(num_classes: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < num_classes {
        bits += 1;
    }
    bits.max(1)
}

/// Centroid of class `c`: dimension j carries ±separation according to bit
/// (j mod bits) of the class id, so the first `bits` dimensions already
/// identify the class and further dimensions cycle the same pattern.
pub fn class_centroid(c: usize, num_classes: usize, n_features: usize, separation: f64) -> Vec<f64> {
    let bits = bits_for_classes(num_classes);
    (0..n_features)
        .map(|j| {
            if (c >> (j % bits)) & 1 == 1 {
                separation
            } else {
                -separation
            }
        })
        .collect()
}

/// Generates `count_per_class` vectors per class: class centroid plus
/// standard-normal noise. Rows are class-major (all of class 0 first).
pub fn make_attribute_task<S: Scalar>(
    num_classes: usize,
    count_per_class: usize,
    n_features: usize,
    class_separation: f64,
    rng: &mut Rng,
) -> Result<(Tensor<S>, Vec<usize>)> {
    if num_classes == 0 || count_per_class == 0 {
        return Err(Error::InvalidInput(
            "attribute task needs at least one class and one vector".into(),
        ));
    }
    let bits = bits_for_classes(num_classes);
    if n_features < bits {
        return Err(Error::InvalidInput(format!(
            "{num_classes} classes need at least {bits} features, got {n_features}"
        )));
    }
    let mut vectors = Tensor::zeros(num_classes * count_per_class, n_features);
    let mut labels = Vec::with_capacity(num_classes * count_per_class);
    for c in 0..num_classes {
        let centroid = class_centroid(c, num_classes, n_features, class_separation);
        for i in 0..count_per_class {
            let row = vectors.row_mut(c * count_per_class + i);
            for (v, &mu) in row.iter_mut().zip(&centroid) {
                *v = S::from_f64_lossy(mu + rng.next_normal_f64());
            }
            labels.push(c);
        }
    }
    Ok((vectors, labels))
}
