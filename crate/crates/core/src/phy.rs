//! Uplink channel realizations, matched-filter SINR and Shannon rates.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::config::{DbmRange, NetworkConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Small-scale fading for one slot.
///
/// Channel vectors are stored column by column, so `h(n)` is a contiguous
/// slice of `antennas` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    antennas: usize,
    n_uds: usize,
    n_jammers: usize,
    h: Vec<Complex<T>>,
    g: Vec<Complex<T>>,
    /// Linear AWGN variance.
    pub noise_var: T,
}

impl<T: Scalar> ChannelRealization<T> {
    /// Builds a realization from column-major `h` (K x N) and `g` (K x M).
    pub fn from_columns(
        antennas: usize,
        h: Vec<Complex<T>>,
        g: Vec<Complex<T>>,
        noise_var: T,
    ) -> Result<Self> {
        if antennas == 0 || h.is_empty() || !h.len().is_multiple_of(antennas) || !g.len().is_multiple_of(antennas) {
            return Err(Error::Argument(format!(
                "channel matrices ({} and {} entries) do not split into {antennas}-antenna columns",
                h.len(),
                g.len()
            )));
        }
        if !(noise_var > T::zero()) {
            return Err(Error::Argument("noise variance must be positive".into()));
        }
        if h.iter().chain(&g).any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Argument("channel entries must be finite".into()));
        }
        Ok(Self {
            antennas,
            n_uds: h.len() / antennas,
            n_jammers: g.len() / antennas,
            h,
            g,
            noise_var,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn n_uds(&self) -> usize {
        self.n_uds
    }

    pub fn n_jammers(&self) -> usize {
        self.n_jammers
    }

    /// Channel vector of UD `n`.
    pub fn h(&self, n: usize) -> &[Complex<T>] {
        &self.h[n * self.antennas..(n + 1) * self.antennas]
    }

    /// Channel vector of jammer `m`.
    pub fn g(&self, m: usize) -> &[Complex<T>] {
        &self.g[m * self.antennas..(m + 1) * self.antennas]
    }
}

/// Linear transmit powers for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile<T> {
    pub p_ud: Vec<T>,
    pub p_jam: Vec<T>,
}

/// Converts dBm to linear milliwatts.
pub fn dbm_to_linear<T: Scalar>(p_dbm: T) -> T {
    T::of(10.0).powf(p_dbm / T::of(10.0))
}

fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(T::of(re * scale), T::of(im * scale))
}

fn uniform_dbm<R: Rng + ?Sized>(range: DbmRange, rng: &mut R) -> f64 {
    if range.lo == range.hi {
        return range.lo;
    }
    Uniform::new_inclusive(range.lo, range.hi)
        .expect("validated range")
        .sample(rng)
}

/// Draws CN(0, 1) entries for `H` and `G`, then the noise level.
pub fn sample_channels<T: Scalar, R: Rng + ?Sized>(
    config: &NetworkConfig,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    if config.antennas == 0 || config.n_uds == 0 {
        return Err(Error::Config(format!(
            "need at least one antenna and one UD, got K={} N={}",
            config.antennas, config.n_uds
        )));
    }
    let k = config.antennas;
    let h = (0..k * config.n_uds).map(|_| complex_gaussian(rng)).collect();
    let g = (0..k * config.n_jammers)
        .map(|_| complex_gaussian(rng))
        .collect();
    let noise_var = T::of(dbm_to_linear(uniform_dbm(config.noise_dbm, rng)));
    ChannelRealization::from_columns(k, h, g, noise_var)
}

/// Draws one transmit power per UD and per jammer.
pub fn sample_powers<T: Scalar, R: Rng + ?Sized>(
    config: &NetworkConfig,
    rng: &mut R,
) -> PowerProfile<T> {
    let mut draw = |range| T::of(dbm_to_linear(uniform_dbm(range, rng)));
    let p_ud = (0..config.n_uds).map(|_| draw(config.ud_power_dbm)).collect();
    let p_jam = (0..config.n_jammers)
        .map(|_| draw(config.jam_power_dbm))
        .collect();
    PowerProfile { p_ud, p_jam }
}

/// `u^H v`.
fn inner<T: Scalar>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    u.iter()
        .zip(v)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
            acc + a.conj() * b
        })
}

/// Matched-filter SINR of UD `n` given who transmits (`active`) and which
/// jammers are on (`jamming`).
///
/// Numerator `P_n ||h_n||^4`; denominator sums co-UD interference
/// `P_n' |h_n^H h_n'|^2`, jammer interference `P_m |h_n^H g_m|^2` and
/// `||h_n||^2 sigma^2`. Returns zero when UD `n` is silent.
pub fn compute_sinr_mf<T: Scalar>(
    ch: &ChannelRealization<T>,
    pw: &PowerProfile<T>,
    active: &[bool],
    jamming: &[bool],
    n: usize,
) -> Result<T> {
    sinr_mf(ch, pw, active, jamming, n, false)
}

/// Same as [`compute_sinr_mf`]; with `ideal_sic` the co-UD sum is dropped.
pub fn sinr_mf<T: Scalar>(
    ch: &ChannelRealization<T>,
    pw: &PowerProfile<T>,
    active: &[bool],
    jamming: &[bool],
    n: usize,
    ideal_sic: bool,
) -> Result<T> {
    let (nu, nj) = (ch.n_uds(), ch.n_jammers());
    if n >= nu {
        return Err(Error::Argument(format!("UD index {n} out of range 0..{nu}")));
    }
    for (len, want) in [(active.len(), nu), (pw.p_ud.len(), nu), (jamming.len(), nj), (pw.p_jam.len(), nj)] {
        if len != want {
            return Err(Error::Shape {
                expected: want,
                got: len,
            });
        }
    }
    if !active[n] {
        return Ok(T::zero());
    }
    let hn = ch.h(n);
    let gain = hn.iter().map(|c| c.norm_sqr()).sum::<T>();
    let mut interference = T::zero();
    if !ideal_sic {
        for other in (0..nu).filter(|&o| o != n && active[o]) {
            interference += pw.p_ud[other] * inner(hn, ch.h(other)).norm_sqr();
        }
    }
    for m in (0..nj).filter(|&m| jamming[m]) {
        interference += pw.p_jam[m] * inner(hn, ch.g(m)).norm_sqr();
    }
    Ok(pw.p_ud[n] * gain * gain / (interference + gain * ch.noise_var))
}

/// Shannon rate in bits per slot per hertz.
pub fn rate_per_slot<T: Scalar>(gamma: T) -> Result<T> {
    if gamma < T::zero() || gamma.is_nan() {
        return Err(Error::Argument(format!("SINR must be non-negative, got {gamma}")));
    }
    Ok((T::one() + gamma).log2())
}

/// Sum of per-slot rates over every UD (row) and slot (column).
pub fn frame_rate<T: Scalar>(slot_rates: &[Vec<T>]) -> T {
    slot_rates.iter().flatten().copied().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(k: usize, n: usize, m: usize) -> NetworkConfig {
        NetworkConfig {
            antennas: k,
            n_uds: n,
            n_jammers: m,
            ..NetworkConfig::default()
        }
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn dbm_reference_points() {
        assert_eq!(dbm_to_linear(0.0f64), 1.0);
        assert!((dbm_to_linear(20.0f64) - 100.0).abs() < 1e-12);
        assert!((dbm_to_linear(23.0f64) - 199.526_231_496_887_96).abs() < 1e-9);
        assert!((dbm_to_linear(-10.0f32) - 0.1).abs() < 1e-7);
    }

    #[test]
    fn shapes_follow_config() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch: ChannelRealization<f64> = sample_channels(&cfg(4, 3, 1), &mut rng).unwrap();
        assert_eq!((ch.antennas(), ch.n_uds(), ch.n_jammers()), (4, 3, 1));
        assert_eq!(ch.h(2).len(), 4);
        assert!(ch.noise_var > 0.0);
        let lo = dbm_to_linear(2.0);
        let hi = dbm_to_linear(5.0);
        assert!(ch.noise_var >= lo && ch.noise_var <= hi);
    }

    #[test]
    fn zero_jammers_is_allowed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let config = cfg(2, 2, 0);
        let ch: ChannelRealization<f64> = sample_channels(&config, &mut rng).unwrap();
        let pw = sample_powers(&config, &mut rng);
        assert_eq!(ch.n_jammers(), 0);
        assert!(pw.p_jam.is_empty());
        let s = compute_sinr_mf(&ch, &pw, &[true, false], &[], 0).unwrap();
        let g: f64 = ch.h(0).iter().map(|c| c.norm_sqr()).sum();
        assert!((s - pw.p_ud[0] * g / ch.noise_var).abs() <= 1e-12 * s);
    }

    #[test]
    fn invalid_dimensions_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_channels::<f64, _>(&cfg(0, 2, 1), &mut rng).is_err());
        assert!(sample_channels::<f64, _>(&cfg(2, 0, 1), &mut rng).is_err());
    }

    #[test]
    fn same_seed_same_channels() {
        let config = cfg(4, 3, 2);
        let a: ChannelRealization<f64> =
            sample_channels(&config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b: ChannelRealization<f64> =
            sample_channels(&config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn entry_power_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let config = cfg(1, 1, 0);
        let draws = 100_000;
        let mean = (0..draws)
            .map(|_| sample_channels::<f64, _>(&config, &mut rng).unwrap().h(0)[0].norm_sqr())
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean |h|^2 = {mean}");
    }

    #[test]
    fn single_user_unit_channel() {
        let ch = ChannelRealization::from_columns(1, vec![c(1.0, 0.0)], vec![], 1.0).unwrap();
        let pw = PowerProfile { p_ud: vec![1.0], p_jam: vec![] };
        assert_eq!(compute_sinr_mf(&ch, &pw, &[true], &[], 0).unwrap(), 1.0);
    }

    #[test]
    fn orthogonal_users_do_not_interfere() {
        let h = vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 3.0)];
        let ch = ChannelRealization::from_columns(2, h, vec![], 0.5).unwrap();
        let pw = PowerProfile { p_ud: vec![2.0, 7.0], p_jam: vec![] };
        let s = compute_sinr_mf(&ch, &pw, &[true, true], &[], 0).unwrap();
        assert_eq!(s, 2.0 * 4.0 / 0.5);
    }

    #[test]
    fn silent_user_has_zero_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = cfg(3, 3, 1);
        let ch: ChannelRealization<f64> = sample_channels(&config, &mut rng).unwrap();
        let pw = sample_powers(&config, &mut rng);
        assert_eq!(compute_sinr_mf(&ch, &pw, &[false, true, true], &[true], 0).unwrap(), 0.0);
    }

    #[test]
    fn argument_errors() {
        let ch = ChannelRealization::from_columns(1, vec![c(1.0, 0.0)], vec![], 1.0).unwrap();
        let pw = PowerProfile { p_ud: vec![1.0], p_jam: vec![] };
        assert!(matches!(
            compute_sinr_mf(&ch, &pw, &[true], &[], 1),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            compute_sinr_mf(&ch, &pw, &[true, false], &[], 0),
            Err(Error::Shape { .. })
        ));
        assert!(ChannelRealization::<f64>::from_columns(1, vec![c(1.0, 0.0)], vec![], 0.0).is_err());
        assert!(ChannelRealization::from_columns(1, vec![c(f64::NAN, 0.0)], vec![], 1.0).is_err());
    }

    #[test]
    fn ideal_sic_drops_co_user_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let config = cfg(4, 3, 0);
        let ch: ChannelRealization<f64> = sample_channels(&config, &mut rng).unwrap();
        let pw = sample_powers(&config, &mut rng);
        let all = [true, true, true];
        let alone = [true, false, false];
        let sic = sinr_mf(&ch, &pw, &all, &[], 0, true).unwrap();
        let solo = compute_sinr_mf(&ch, &pw, &alone, &[], 0).unwrap();
        assert_eq!(sic, solo);
        assert!(compute_sinr_mf(&ch, &pw, &all, &[], 0).unwrap() < solo);
    }

    #[test]
    fn rates() {
        assert_eq!(rate_per_slot(0.0f64).unwrap(), 0.0);
        assert_eq!(rate_per_slot(1.0f64).unwrap(), 1.0);
        assert_eq!(rate_per_slot(3.0f64).unwrap(), 2.0);
        assert!(rate_per_slot(-0.1f64).is_err());
        assert_eq!(frame_rate::<f64>(&[vec![0.0; 4], vec![0.0; 4]]), 0.0);
        assert_eq!(frame_rate(&[vec![1.0, 2.0, 3.0]]), 6.0);
    }

    #[test]
    fn works_in_single_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let config = cfg(4, 3, 1);
        let ch: ChannelRealization<f32> = sample_channels(&config, &mut rng).unwrap();
        let pw = sample_powers(&config, &mut rng);
        let s = compute_sinr_mf(&ch, &pw, &[true, true, false], &[true], 1).unwrap();
        assert!(s.is_finite() && s > 0.0);
    }
}
