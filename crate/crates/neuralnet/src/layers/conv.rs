use rayon::prelude::*;

use crate::elem::Elem;
use crate::error::NetError;
use crate::layers::{chunk_ranges, Layer, Parameter};
use crate::tensor::Tensor;

/// 2-D convolution over NCHW tensors via im2col + GEMM.
///
/// Weight layout is `[out_c, in_c * kh * kw]`; samples are processed
/// independently (parallel over the batch), and gradient reductions run in
/// fixed chunk order, so forward and backward are bit-deterministic.
pub struct Conv2d<T> {
    pub weight: Parameter<T>,
    pub bias: Option<Parameter<T>>,
    in_c: usize,
    out_c: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    cached_input: Option<Tensor<T>>,
}

impl<T: Elem> Conv2d<T> {
    pub fn new(
        name: &str,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        with_bias: bool,
    ) -> Self {
        assert!(stride == 1 || stride == 2, "conv stride must be 1 or 2");
        let weight = Parameter::new(
            format!("{name}.weight"),
            Tensor::zeros(&[out_c, in_c * kernel * kernel]),
        );
        let bias =
            with_bias.then(|| Parameter::new(format!("{name}.bias"), Tensor::zeros(&[out_c])));
        Conv2d { weight, bias, in_c, out_c, kernel, stride, pad, cached_input: None }
    }

    pub fn out_spatial(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.kernel) / self.stride + 1,
            (w + 2 * self.pad - self.kernel) / self.stride + 1,
        )
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(usize, usize, usize), NetError> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.in_c {
            return Err(NetError::shape(
                "conv2d",
                format!("expected [n, {}, h, w], got {:?}", self.in_c, s),
            ));
        }
        if s[2] + 2 * self.pad < self.kernel || s[3] + 2 * self.pad < self.kernel {
            return Err(NetError::shape(
                "conv2d",
                format!("input {:?} smaller than {}x{} kernel", s, self.kernel, self.kernel),
            ));
        }
        Ok((s[0], s[2], s[3]))
    }

    fn im2col(&self, x_n: &[T], h: usize, w: usize, oh: usize, ow: usize, col: &mut [T]) {
        let k = self.kernel;
        let l = oh * ow;
        for c in 0..self.in_c {
            let plane = &x_n[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let dst = &mut col[row * l..(row + 1) * l];
                    for oy in 0..oh {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        let seg = &mut dst[oy * ow..(oy + 1) * ow];
                        if iy < 0 || iy >= h as isize {
                            seg.iter_mut().for_each(|v| *v = T::ZERO);
                            continue;
                        }
                        let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                        for (ox, v) in seg.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            *v = if ix >= 0 && ix < w as isize {
                                src_row[ix as usize]
                            } else {
                                T::ZERO
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, col: &[T], h: usize, w: usize, oh: usize, ow: usize, dx_n: &mut [T]) {
        let k = self.kernel;
        let l = oh * ow;
        for c in 0..self.in_c {
            let plane = &mut dx_n[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k + ky) * k + kx;
                    let src = &col[row * l..(row + 1) * l];
                    for oy in 0..oh {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst_row = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                        for ox in 0..ow {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            if ix >= 0 && ix < w as isize {
                                dst_row[ix as usize] += src[oy * ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

impl<T: Elem> Layer<T> for Conv2d<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Result<Tensor<T>, NetError> {
        let (n, h, w) = self.check_input(x)?;
        let (oh, ow) = self.out_spatial(h, w);
        let kdim = self.in_c * self.kernel * self.kernel;
        let l = oh * ow;
        let mut out = Tensor::zeros(&[n, self.out_c, oh, ow]);

        let weight = self.weight.value.data();
        let bias = self.bias.as_ref().map(|b| b.value.data().to_vec());
        let in_per = self.in_c * h * w;
        let out_per = self.out_c * l;

        out.data_mut()
            .par_chunks_mut(out_per)
            .zip(x.data().par_chunks(in_per))
            .for_each(|(out_n, x_n)| {
                let mut col = vec![T::ZERO; kdim * l];
                self.im2col(x_n, h, w, oh, ow, &mut col);
                unsafe {
                    T::gemm(
                        self.out_c,
                        kdim,
                        l,
                        T::ONE,
                        weight.as_ptr(),
                        kdim as isize,
                        1,
                        col.as_ptr(),
                        l as isize,
                        1,
                        T::ZERO,
                        out_n.as_mut_ptr(),
                        l as isize,
                        1,
                    );
                }
                if let Some(b) = &bias {
                    for (c, &bv) in b.iter().enumerate() {
                        out_n[c * l..(c + 1) * l].iter_mut().for_each(|v| *v += bv);
                    }
                }
            });

        self.cached_input = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let x = self
            .cached_input
            .take()
            .expect("conv2d backward called without forward");
        let (n, h, w) = self.check_input(&x)?;
        let (oh, ow) = self.out_spatial(h, w);
        let kdim = self.in_c * self.kernel * self.kernel;
        let l = oh * ow;
        if grad_out.shape() != [n, self.out_c, oh, ow] {
            return Err(NetError::shape(
                "conv2d backward",
                format!("expected {:?}, got {:?}", [n, self.out_c, oh, ow], grad_out.shape()),
            ));
        }

        let weight = self.weight.value.data();
        let in_per = self.in_c * h * w;
        let out_per = self.out_c * l;
        let mut dx = Tensor::zeros(x.shape());
        let has_bias = self.bias.is_some();

        // Fixed chunks over the batch: per-chunk partial dW/db reduced in
        // chunk order afterwards keeps the float sums schedule-independent.
        let ranges = chunk_ranges(n);
        let dx_chunks: Vec<&mut [T]> = {
            let mut rest = dx.data_mut();
            let mut v = Vec::with_capacity(ranges.len());
            for &(s, e) in &ranges {
                let (head, tail) = rest.split_at_mut((e - s) * in_per);
                v.push(head);
                rest = tail;
            }
            v
        };

        let partials: Vec<(Vec<T>, Vec<T>)> = ranges
            .par_iter()
            .zip(dx_chunks)
            .map(|(&(start, end), dx_chunk)| {
                let mut dw = vec![T::ZERO; self.out_c * kdim];
                let mut db = vec![T::ZERO; self.out_c];
                let mut col = vec![T::ZERO; kdim * l];
                let mut dcol = vec![T::ZERO; kdim * l];
                for i in start..end {
                    let x_n = &x.data()[i * in_per..(i + 1) * in_per];
                    let g_n = &grad_out.data()[i * out_per..(i + 1) * out_per];
                    self.im2col(x_n, h, w, oh, ow, &mut col);
                    unsafe {
                        // dW += g_n [out_c, l] * col^T [l, kdim]
                        T::gemm(
                            self.out_c,
                            l,
                            kdim,
                            T::ONE,
                            g_n.as_ptr(),
                            l as isize,
                            1,
                            col.as_ptr(),
                            1,
                            l as isize,
                            T::ONE,
                            dw.as_mut_ptr(),
                            kdim as isize,
                            1,
                        );
                        // dcol = W^T [kdim, out_c] * g_n [out_c, l]
                        T::gemm(
                            kdim,
                            self.out_c,
                            l,
                            T::ONE,
                            weight.as_ptr(),
                            1,
                            kdim as isize,
                            g_n.as_ptr(),
                            l as isize,
                            1,
                            T::ZERO,
                            dcol.as_mut_ptr(),
                            l as isize,
                            1,
                        );
                    }
                    let dx_n = &mut dx_chunk[(i - start) * in_per..(i - start + 1) * in_per];
                    self.col2im(&dcol, h, w, oh, ow, dx_n);
                    if has_bias {
                        for c in 0..self.out_c {
                            let mut s = T::ZERO;
                            for &g in &g_n[c * l..(c + 1) * l] {
                                s += g;
                            }
                            db[c] += s;
                        }
                    }
                }
                (dw, db)
            })
            .collect();

        for (dw, db) in partials {
            for (acc, v) in self.weight.grad.data_mut().iter_mut().zip(dw) {
                *acc += v;
            }
            if let Some(b) = &mut self.bias {
                for (acc, v) in b.grad.data_mut().iter_mut().zip(db) {
                    *acc += v;
                }
            }
        }
        Ok(dx)
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        out.push(&mut self.weight);
        if let Some(b) = &mut self.bias {
            out.push(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_1x1_kernel_is_identity() {
        let mut conv = Conv2d::<f32>::new("c", 2, 2, 1, 1, 0, false);
        // weight [2, 2]: identity mapping between channels
        conv.weight.value.data_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        let x = Tensor::from_vec(&[1, 2, 2, 2], (0..8).map(|v| v as f32).collect()).unwrap();
        let y = conv.forward(&x, false).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn known_3x3_convolution() {
        let mut conv = Conv2d::<f32>::new("c", 1, 1, 3, 1, 1, false);
        // box filter
        conv.weight.value.fill(1.0);
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = conv.forward(&x, false).unwrap();
        // padded sums: every output cell sees all in-bounds neighbors
        assert_eq!(y.data(), &[10.0, 10.0, 10.0, 10.0]);
    }

    #[test]
    fn stride_two_halves_resolution() {
        let mut conv = Conv2d::<f32>::new("c", 1, 3, 3, 2, 1, true);
        let x = Tensor::zeros(&[2, 1, 8, 8]);
        let y = conv.forward(&x, false).unwrap();
        assert_eq!(y.shape(), &[2, 3, 4, 4]);
    }

    #[test]
    fn wrong_channel_count_is_shape_mismatch() {
        let mut conv = Conv2d::<f32>::new("c", 3, 4, 3, 1, 1, false);
        let x = Tensor::<f32>::zeros(&[1, 2, 8, 8]);
        assert!(matches!(conv.forward(&x, false), Err(NetError::ShapeMismatch { .. })));
    }
}
