//! Geometric uplink channel: path loss, directional antenna gain, wall
//! attenuation, propagation delay, AWGN and co-channel mixing.
//!
//! The model is deliberately minimal: log-distance path loss with a
//! configurable exponent, deterministic per-wall attenuation on the
//! straight-line path, an optional seeded log-normal shadowing term per
//! UE-site path, and a cardioid-like antenna pattern with a fixed
//! front-to-back ratio. Everything is deterministic given the scenario and
//! its seed; independent transmissions may be propagated concurrently.

use crate::geom::{Point, Polygon, Segment};
use crate::iq::IqStream;
use crate::phy::CellConfig;
use crate::SPEED_OF_LIGHT;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Attenuating wall segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub segment: Segment,
    pub attenuation_db: f64,
}

/// Cardioid-like directional antenna pattern with a hard floor.
///
/// `gain_db(theta) = max(20 log10((1 + cos theta)/2), -front_to_back_db)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub front_to_back_db: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self { front_to_back_db: 25.0 }
    }
}

impl AntennaPattern {
    /// Gain in dB at `theta` radians off boresight.
    pub fn gain_db(&self, theta: f64) -> f64 {
        let lobe = (1.0 + theta.cos()) / 2.0;
        if lobe <= 0.0 {
            return -self.front_to_back_db;
        }
        (20.0 * lobe.log10()).max(-self.front_to_back_db)
    }
}

/// One uplink receiver site with two opposite-facing antenna ports.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSite {
    pub id: u16,
    pub position: Point,
    /// Boresight of port 0 in radians; port 1 faces the opposite way.
    pub port0_azimuth: f64,
    pub antenna: AntennaPattern,
    /// Simulated clock synchronization error in seconds.
    pub clock_offset_s: f64,
    /// Physical offset of each antenna from the site center along its own
    /// boresight, in meters. Lets a boundary wall sit between the ports.
    pub port_offset_m: f64,
}

impl ReceiverSite {
    pub fn port_azimuth(&self, port: usize) -> f64 {
        debug_assert!(port < 2);
        if port == 0 {
            self.port0_azimuth
        } else {
            self.port0_azimuth + PI
        }
    }

    /// Physical position of an antenna port.
    pub fn port_position(&self, port: usize) -> Point {
        let az = self.port_azimuth(port);
        Point::new(
            self.position.x + self.port_offset_m * az.cos(),
            self.position.y + self.port_offset_m * az.sin(),
        )
    }
}

/// Ground-truth UE placement for one connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UePosition {
    pub position: Point,
    pub inside_label: bool,
    /// Transmit power as dB relative to the unit-amplitude grid.
    pub tx_power_db: f64,
}

impl UePosition {
    /// Label from the scenario boundary via point-in-polygon.
    pub fn labeled(position: Point, boundary: &Polygon, tx_power_db: f64) -> Self {
        Self { position, inside_label: boundary.contains(position), tx_power_db }
    }
}

/// A cell paired with its eNodeB position.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSite {
    pub config: CellConfig,
    pub position: Point,
}

/// Propagation model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Log-distance path loss exponent (urban NLoS default 3.0).
    pub path_loss_exponent: f64,
    /// Link gain at 1 m in dB; calibrates digital full scale.
    pub ref_gain_db: f64,
    /// Log-normal shadowing sigma in dB per UE-site path (0 disables).
    pub shadowing_sigma_db: f64,
    /// Receiver noise power per resource element in dB full scale.
    pub noise_re_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            path_loss_exponent: 3.0,
            ref_gain_db: 0.0,
            shadowing_sigma_db: 4.0,
            noise_re_db: -104.0,
        }
    }
}

/// Full deployment geometry plus channel parameters.
#[derive(Debug, Clone)]
pub struct DeploymentScenario {
    pub boundary: Polygon,
    pub walls: Vec<Wall>,
    pub receivers: Vec<ReceiverSite>,
    pub cells: Vec<CellSite>,
    pub rng_seed: u64,
    pub channel: ChannelParams,
}

impl DeploymentScenario {
    /// Structural invariants: simple boundary, unique (EARFCN, PCI) pairs.
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !self.boundary.is_simple() {
            return Err(ChannelError::InvalidParameter(
                "boundary polygon is self-intersecting".into(),
            ));
        }
        for (i, a) in self.cells.iter().enumerate() {
            for b in &self.cells[i + 1..] {
                if a.config.earfcn == b.config.earfcn && a.config.pci == b.config.pci {
                    return Err(ChannelError::InvalidParameter(format!(
                        "duplicate cell identity (earfcn={}, pci={})",
                        a.config.earfcn, a.config.pci
                    )));
                }
            }
        }
        Ok(())
    }

    /// Summed attenuation of every wall crossed by the straight path.
    pub fn wall_loss_db(&self, from: Point, to: Point) -> f64 {
        let path = Segment::new(from, to);
        self.walls
            .iter()
            .filter(|w| w.segment.intersects(&path))
            .map(|w| w.attenuation_db)
            .sum()
    }

    /// Shadowing draw for the UE-site path, shared by both ports.
    pub fn shadowing_db(&self, ue: Point, site_id: u16) -> f64 {
        if self.channel.shadowing_sigma_db == 0.0 {
            return 0.0;
        }
        let pos_bits = ue.x.to_bits() ^ ue.y.to_bits().rotate_left(17);
        let h = splitmix(
            self.rng_seed ^ splitmix(pos_bits ^ (site_id as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        );
        self.channel.shadowing_sigma_db * standard_normal_from(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn standard_normal_from(h: u64) -> f64 {
    let u1 = ((splitmix(h) >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = ((splitmix(h ^ 0xdead_beef) >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Link budget of one UE-to-port path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Total amplitude gain applied to the unit grid, linear.
    pub gain: f64,
    /// One-way propagation delay in seconds.
    pub delay_s: f64,
}

/// Compute gain and delay from a UE to one antenna port.
pub fn link_budget(
    ue: &UePosition,
    site: &ReceiverSite,
    port: usize,
    scenario: &DeploymentScenario,
) -> Result<LinkBudget, ChannelError> {
    let port_pos = site.port_position(port);
    let d = ue.position.distance(&port_pos);
    if d < 1e-6 {
        return Err(ChannelError::DegenerateGeometry(
            "UE coincides with receiver port position".into(),
        ));
    }
    let bearing = port_pos.bearing_to(&ue.position);
    let theta = wrap_angle(bearing - site.port_azimuth(port));
    let gain_db = ue.tx_power_db + scenario.channel.ref_gain_db
        - 10.0 * scenario.channel.path_loss_exponent * d.max(1.0).log10()
        + site.antenna.gain_db(theta)
        - scenario.wall_loss_db(ue.position, port_pos)
        + scenario.shadowing_db(ue.position, site.id);
    Ok(LinkBudget { gain: 10f64.powf(gain_db / 20.0), delay_s: d / SPEED_OF_LIGHT })
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x < -PI {
        x += 2.0 * PI;
    }
    x
}

/// Propagate a waveform to one antenna port: scale by the link gain and
/// delay by distance over c. The integer part of the delay moves the
/// stream's timeline position; the fractional part is applied as a
/// frequency-domain phase ramp.
pub fn propagate(
    waveform: &IqStream,
    ue: &UePosition,
    site: &ReceiverSite,
    port: usize,
    scenario: &DeploymentScenario,
) -> Result<IqStream, ChannelError> {
    if waveform.is_empty() {
        return Err(ChannelError::InvalidParameter("empty waveform".into()));
    }
    let budget = link_budget(ue, site, port, scenario)?;
    let delay_samples = budget.delay_s * waveform.sample_rate;
    let int_delay = delay_samples.floor() as i64;
    let frac = delay_samples - int_delay as f64;

    let mut out = fractional_delay(&waveform.samples, frac);
    for s in &mut out {
        *s *= budget.gain;
    }
    Ok(IqStream::new(waveform.sample_rate, waveform.start_sample + int_delay, out))
}

/// Sub-sample delay via an FFT phase ramp. The input is zero-padded so the
/// circular wrap lands in the padding.
pub fn fractional_delay(samples: &[Complex64], frac: f64) -> Vec<Complex64> {
    if frac == 0.0 {
        return samples.to_vec();
    }
    let pad = 64usize;
    let n = (samples.len() + pad).next_multiple_of(4096);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..samples.len()].copy_from_slice(samples);

    let fwd = crate::phy::fft_for(n, FftDirection::Forward);
    let inv = crate::phy::fft_for(n, FftDirection::Inverse);
    fwd.process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        // Signed frequency index.
        let f = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        *v *= Complex64::from_polar(1.0, -2.0 * PI * f * frac / n as f64);
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.truncate(samples.len());
    for s in &mut buf {
        *s *= scale;
    }
    buf
}

/// Add complex white Gaussian noise such that signal power over the
/// occupied samples divided by the noise power equals `snr_db` in
/// expectation. `snr_db = +inf` disables the noise.
pub fn add_awgn<R: Rng>(waveform: &IqStream, snr_db: f64, rng: &mut R) -> IqStream {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return waveform.clone();
    }
    let p_sig = waveform.occupied_power();
    let var = p_sig / 10f64.powf(snr_db / 10.0);
    add_noise_psd(waveform, var, rng)
}

/// Add complex white Gaussian noise with the given per-sample variance.
pub fn add_noise_psd<R: Rng>(waveform: &IqStream, var: f64, rng: &mut R) -> IqStream {
    if var <= 0.0 {
        return waveform.clone();
    }
    let sigma = (var / 2.0).sqrt();
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let mut out = waveform.clone();
    for s in &mut out.samples {
        *s += Complex64::new(normal.sample(rng), normal.sample(rng));
    }
    out
}

/// Sample-wise sum of transmissions after applying per-stream extra sample
/// offsets and frequency offsets. Phase rotation uses the absolute sample
/// index so streams mixed in any split remain coherent.
pub fn mix_band(transmissions: &[(IqStream, i64, f64)]) -> Result<IqStream, ChannelError> {
    if transmissions.is_empty() {
        return Err(ChannelError::InvalidParameter("nothing to mix".into()));
    }
    let rate = transmissions[0].0.sample_rate;
    for (s, _, _) in transmissions {
        if s.sample_rate != rate {
            return Err(ChannelError::InvalidParameter(format!(
                "sample rate mismatch: {} vs {rate}",
                s.sample_rate
            )));
        }
    }
    let start = transmissions.iter().map(|(s, off, _)| s.start_sample + off).min().unwrap();
    let end = transmissions.iter().map(|(s, off, _)| s.end_sample() + off).max().unwrap();
    let mut out = IqStream::zeros(rate, start, (end - start) as usize);
    for (s, off, freq) in transmissions {
        mix_into(&mut out, s, *off, *freq);
    }
    Ok(out)
}

/// Accumulate `src` into `dst` (which must cover it) with an extra sample
/// offset and a frequency shift of `freq_hz`.
pub fn mix_into(dst: &mut IqStream, src: &IqStream, offset: i64, freq_hz: f64) {
    let base = src.start_sample + offset - dst.start_sample;
    debug_assert!(base >= 0 && base as usize + src.len() <= dst.len());
    if freq_hz == 0.0 {
        for (i, v) in src.samples.iter().enumerate() {
            dst.samples[base as usize + i] += v;
        }
        return;
    }
    let w = 2.0 * PI * freq_hz / dst.sample_rate;
    let abs0 = src.start_sample + offset;
    // Incremental rotation with periodic re-anchoring to limit drift.
    let mut phase = Complex64::from_polar(1.0, w * abs0 as f64);
    let step = Complex64::from_polar(1.0, w);
    for (i, v) in src.samples.iter().enumerate() {
        if i % 4096 == 0 {
            phase = Complex64::from_polar(1.0, w * (abs0 + i as i64) as f64);
        }
        dst.samples[base as usize + i] += v * phase;
        phase *= step;
    }
}
