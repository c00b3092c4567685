//! Binary encoding of networks, optimizer state and normalizers.
//!
//! Everything is little-endian. Each record starts with a one-byte tag:
//!
//! ```text
//! MLP (tag 1):        u32 n, u32 sizes[n], u8 hidden_act, u8 output_act,
//!                     per layer: f64 weight[fan_in * fan_out] (row-major, [in][out]),
//!                                f64 bias[fan_out]
//! Adam (tag 2):       f64 lr, f64 beta1, f64 beta2, f64 eps, u64 step,
//!                     u64 n, f64 m[n], f64 v[n]
//! Normalizer (tag 3): u32 dim, u64 count, f64 mean[dim], f64 m2[dim]
//! ```
//!
//! Activation tags: 0 relu, 1 tanh, 2 linear.

use ndarray::{Array1, Array2};

use super::adam::{AdamConfig, AdamState};
use super::mlp::{Activation, Dense, Mlp, MlpSpec};
use super::normalize::Normalizer;
use crate::error::{Error, Result};

const TAG_MLP: u8 = 1;
const TAG_ADAM: u8 = 2;
const TAG_NORM: u8 = 3;

#[derive(Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for v in vs {
            self.f64(*v);
        }
    }

    pub fn mlp(&mut self, net: &Mlp) {
        let spec = net.spec();
        self.u8(TAG_MLP);
        self.u32(spec.layer_sizes.len() as u32);
        for &s in &spec.layer_sizes {
            self.u32(s as u32);
        }
        self.u8(spec.hidden_activation.tag());
        self.u8(spec.output_activation.tag());
        for l in net.layers() {
            self.f64s(l.weight.iter());
            self.f64s(l.bias.iter());
        }
    }

    pub fn adam(&mut self, st: &AdamState) {
        self.u8(TAG_ADAM);
        let c = st.config;
        for v in [c.learning_rate, c.beta1, c.beta2, c.epsilon] {
            self.f64(v);
        }
        self.u64(st.step);
        self.u64(st.m.len() as u64);
        self.f64s(&st.m);
        self.f64s(&st.v);
    }

    pub fn normalizer(&mut self, n: &Normalizer) {
        self.u8(TAG_NORM);
        self.u32(n.dim() as u32);
        self.u64(n.count);
        self.f64s(&n.mean);
        self.f64s(&n.m2);
    }
}

pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if n.saturating_mul(8) > self.buf.len() - self.pos {
            return Err(Error::Checkpoint(format!("array of {n} values runs past the end")));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn tag(&mut self, expect: u8, what: &str) -> Result<()> {
        let t = self.u8()?;
        if t != expect {
            return Err(Error::Checkpoint(format!("expected {what} record (tag {expect}), found tag {t}")));
        }
        Ok(())
    }

    pub fn mlp(&mut self) -> Result<Mlp> {
        self.tag(TAG_MLP, "network")?;
        let n = self.u32()? as usize;
        if n > 64 {
            return Err(Error::Checkpoint(format!("implausible layer count {n}")));
        }
        let sizes = (0..n).map(|_| self.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let act = |t: u8| Activation::from_tag(t).ok_or_else(|| Error::Checkpoint(format!("unknown activation tag {t}")));
        let hidden = act(self.u8()?)?;
        let output = act(self.u8()?)?;
        let spec = MlpSpec::new(sizes, hidden, output).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut layers = Vec::new();
        for w in spec.layer_sizes.windows(2) {
            let weight = Array2::from_shape_vec((w[0], w[1]), self.f64s(w[0] * w[1])?).expect("sized");
            let bias = Array1::from_vec(self.f64s(w[1])?);
            layers.push(Dense { weight, bias });
        }
        Mlp::from_layers(spec, layers)
    }

    pub fn adam(&mut self) -> Result<AdamState> {
        self.tag(TAG_ADAM, "optimizer")?;
        let config = AdamConfig {
            learning_rate: self.f64()?,
            beta1: self.f64()?,
            beta2: self.f64()?,
            epsilon: self.f64()?,
        };
        let step = self.u64()?;
        let n = self.u64()? as usize;
        let m = self.f64s(n)?;
        let v = self.f64s(n)?;
        Ok(AdamState { config, step, m, v })
    }

    pub fn normalizer(&mut self) -> Result<Normalizer> {
        self.tag(TAG_NORM, "normalizer")?;
        let dim = self.u32()? as usize;
        let count = self.u64()?;
        let mean = self.f64s(dim)?;
        let m2 = self.f64s(dim)?;
        Ok(Normalizer { count, mean, m2 })
    }
}
