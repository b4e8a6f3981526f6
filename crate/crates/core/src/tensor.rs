//! Dense row-major tensors. Feature maps use the (batch, channels, height,
//! width) layout; token matrices are (rows, cols).

use crate::error::{CatError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S: Scalar> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(CatError::shape("tensor", format!("zero dimension in {shape:?}")));
        }
        if n != data.len() {
            return Err(CatError::shape(
                "tensor",
                format!("shape {shape:?} needs {n} values, got {}", data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![S::ZERO; n] }
    }

    pub fn full(shape: Vec<usize>, value: S) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![value; n] }
    }

    pub fn scalar(value: S) -> Self {
        Tensor { shape: vec![1], data: vec![value] }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> S) -> Self {
        let n: usize = shape.iter().product();
        Tensor { shape, data: (0..n).map(&mut f).collect() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    /// Scalar value of a 1-element tensor.
    pub fn item(&self) -> S {
        debug_assert_eq!(self.data.len(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reinterpret the same row-major buffer under a new shape.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(CatError::shape(
                "reshape",
                format!("cannot view {:?} as {shape:?}", self.shape),
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Cast element type, through f64.
    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        }
    }

    /// (batch, channels, height, width) accessors for 4-D feature maps.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape.as_slice() {
            [b, c, h, w] => Ok((*b, *c, *h, *w)),
            other => Err(CatError::shape("dims4", format!("expected 4-D feature map, got {other:?}"))),
        }
    }

    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(CatError::shape("dims2", format!("expected 2-D matrix, got {other:?}"))),
        }
    }

    pub fn max_abs_diff(&self, other: &Tensor<S>) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max)
    }
}

/// Non-overlapping window partition of a single-sample feature map
/// (C, H, W) -> one (s*s, C) token matrix per window, windows in row-major
/// order, tokens row-major within each window.
pub fn window_partition<S: Scalar>(x: &Tensor<S>, s: usize) -> Result<Vec<Tensor<S>>> {
    let (c, h, w) = match x.shape() {
        [c, h, w] => (*c, *h, *w),
        other => {
            return Err(CatError::shape("window_partition", format!("expected (C,H,W), got {other:?}")))
        }
    };
    if s == 0 || h % s != 0 || w % s != 0 {
        return Err(CatError::shape(
            "window_partition",
            format!("window {s} does not divide spatial size {h}x{w}"),
        ));
    }
    let plane = h * w;
    let mut out = Vec::with_capacity((h / s) * (w / s));
    for wy in 0..h / s {
        for wx in 0..w / s {
            let mut tokens = vec![S::ZERO; s * s * c];
            for ty in 0..s {
                for tx in 0..s {
                    let (y, xx) = (wy * s + ty, wx * s + tx);
                    let tok = ty * s + tx;
                    for ch in 0..c {
                        tokens[tok * c + ch] = x.data()[ch * plane + y * w + xx];
                    }
                }
            }
            out.push(Tensor::new(vec![s * s, c], tokens)?);
        }
    }
    Ok(out)
}

/// Exact inverse of [`window_partition`].
pub fn window_merge<S: Scalar>(windows: &[Tensor<S>], c: usize, h: usize, w: usize, s: usize) -> Result<Tensor<S>> {
    if s == 0 || h % s != 0 || w % s != 0 {
        return Err(CatError::shape("window_merge", format!("window {s} vs {h}x{w}")));
    }
    let (ny, nx) = (h / s, w / s);
    if windows.len() != ny * nx {
        return Err(CatError::shape(
            "window_merge",
            format!("expected {} windows, got {}", ny * nx, windows.len()),
        ));
    }
    let plane = h * w;
    let mut data = vec![S::ZERO; c * plane];
    for (wi, win) in windows.iter().enumerate() {
        let (rows, cols) = win.dims2()?;
        if rows != s * s || cols != c {
            return Err(CatError::shape(
                "window_merge",
                format!("window {wi} is {rows}x{cols}, expected {}x{c}", s * s),
            ));
        }
        let (wy, wx) = (wi / nx, wi % nx);
        for ty in 0..s {
            for tx in 0..s {
                let (y, xx) = (wy * s + ty, wx * s + tx);
                let tok = ty * s + tx;
                for ch in 0..c {
                    data[ch * plane + y * w + xx] = win.data()[tok * c + ch];
                }
            }
        }
    }
    Tensor::new(vec![c, h, w], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use rand::Rng;

    #[test]
    fn shape_length_invariant() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::<f32>::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn whole_map_is_one_window() {
        let x = Tensor::<f32>::from_fn(vec![2, 4, 4], |i| i as f32);
        let wins = window_partition(&x, 4).unwrap();
        assert_eq!(wins.len(), 1);
        assert_eq!(wins[0].shape(), &[16, 2]);
        // token (y,x) channel c round-trips
        let back = window_merge(&wins, 2, 4, 4, 4).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn partition_merge_roundtrip_random() {
        let mut rng = stream(11, Domain::Test, 0);
        for &(c, h, w, s) in &[(3usize, 8usize, 8usize, 4usize), (5, 16, 8, 4), (2, 8, 16, 8)] {
            let x = Tensor::<f64>::from_fn(vec![c, h, w], |_| rng.gen::<f64>());
            let wins = window_partition(&x, s).unwrap();
            assert_eq!(wins.len(), (h / s) * (w / s));
            let back = window_merge(&wins, c, h, w, s).unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn window_counts_match_map_size() {
        // 16x16 map with window 8 -> 4 windows; the full-scale plan
        // 64/32/16 with window 8 gives 64/16/4.
        let x = Tensor::<f32>::zeros(vec![1, 16, 16]);
        assert_eq!(window_partition(&x, 8).unwrap().len(), 4);
        for (side, expect) in [(64usize, 64usize), (32, 16), (16, 4)] {
            let m = Tensor::<f32>::zeros(vec![1, side, side]);
            assert_eq!(window_partition(&m, 8).unwrap().len(), expect);
        }
    }

    #[test]
    fn indivisible_window_rejected() {
        let x = Tensor::<f32>::zeros(vec![1, 6, 6]);
        assert!(window_partition(&x, 4).is_err());
    }
}
