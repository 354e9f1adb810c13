use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::elem::Elem;
use crate::tensor::Tensor;

/// He-uniform initialization: U(-b, b) with b = sqrt(6 / fan_in).
pub fn he_uniform<T: Elem>(t: &mut Tensor<T>, fan_in: usize, rng: &mut ChaCha8Rng) {
    let bound = (6.0 / fan_in as f64).sqrt();
    for v in t.data_mut() {
        *v = T::from_f64(rng.gen_range(-bound..bound));
    }
}
