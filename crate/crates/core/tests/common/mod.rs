#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use sclar::phy::{ChannelRealization, PowerProfile};

/// Random matched-filter instance with raw (re, im) channel entries, one
/// column of `k` antennas per UD and per jammer.
pub struct Instance {
    pub k: usize,
    pub h: Vec<(f64, f64)>,
    pub g: Vec<(f64, f64)>,
    pub p_ud: Vec<f64>,
    pub p_jam: Vec<f64>,
    pub active: Vec<bool>,
    pub jamming: Vec<bool>,
    pub noise: f64,
}

impl Instance {
    pub fn random<R: Rng>(rng: &mut R, max_k: usize, max_n: usize, max_m: usize) -> Self {
        let k = rng.random_range(1..=max_k);
        let n = rng.random_range(1..=max_n);
        let m = rng.random_range(0..=max_m);
        let mut cn = |count: usize| -> Vec<(f64, f64)> {
            (0..count)
                .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        };
        let (h, g) = (cn(n * k), cn(m * k));
        Self {
            k,
            h,
            g,
            p_ud: (0..n).map(|_| rng.random_range(0.1..320.0)).collect(),
            p_jam: (0..m).map(|_| rng.random_range(0.1..320.0)).collect(),
            active: (0..n).map(|_| rng.random_bool(0.7)).collect(),
            jamming: (0..m).map(|_| rng.random_bool(0.5)).collect(),
            noise: rng.random_range(0.5..4.0),
        }
    }

    pub fn n(&self) -> usize {
        self.p_ud.len()
    }

    pub fn channels(&self) -> ChannelRealization<f64> {
        let c = |v: &[(f64, f64)]| v.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        ChannelRealization::from_columns(self.k, c(&self.h), c(&self.g), self.noise).unwrap()
    }

    pub fn powers(&self) -> PowerProfile<f64> {
        PowerProfile {
            p_ud: self.p_ud.clone(),
            p_jam: self.p_jam.clone(),
        }
    }
}

/// Straight-line matched-filter SINR with explicit real arithmetic.
pub fn sinr_oracle(x: &Instance, n: usize) -> f64 {
    if !x.active[n] {
        return 0.0;
    }
    let col = |v: &[(f64, f64)], i: usize| v[i * x.k..(i + 1) * x.k].to_vec();
    let hn = col(&x.h, n);
    let mut norm2 = 0.0;
    for &(re, im) in &hn {
        norm2 += re * re + im * im;
    }
    // |a^H b|^2
    let cross = |b: &[(f64, f64)]| {
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..x.k {
            let (ar, ai) = hn[i];
            let (br, bi) = b[i];
            re += ar * br + ai * bi;
            im += ar * bi - ai * br;
        }
        re * re + im * im
    };
    let mut den = norm2 * x.noise;
    for o in 0..x.n() {
        if o != n && x.active[o] {
            den += x.p_ud[o] * cross(&col(&x.h, o));
        }
    }
    for m in 0..x.p_jam.len() {
        if x.jamming[m] {
            den += x.p_jam[m] * cross(&col(&x.g, m));
        }
    }
    x.p_ud[n] * norm2 * norm2 / den
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}
