//! Seeded synthetic sequences for tests and demos.
//!
//! Geometry is a height field over a `side x side` grid,
//! `z = 16 + round(6 sin(x/10) cos(y/13))`, shared by every frame. Colors are
//! produced directly in YCbCr: Luma is a gradient plus a sinusoid that
//! drifts with the frame index plus Gaussian noise; Chroma are smooth
//! sinusoids with a little noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cloud::{ColorTriple, PointCloud, VoxelPosition};
use crate::color::quantize_u8;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub frames: usize,
    pub side: u32,
    pub seed: u64,
    /// Luma offset added per frame.
    pub drift: f64,
    pub luma_noise: f64,
    pub chroma_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { frames: 8, side: 64, seed: 7, drift: 2.0, luma_noise: 1.5, chroma_noise: 0.75 }
    }
}

pub fn height(x: u32, y: u32) -> u32 {
    let h = 6.0 * (f64::from(x) / 10.0).sin() * (f64::from(y) / 13.0).cos();
    (16.0 + h).round() as u32
}

pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<PointCloud>> {
    if cfg.frames == 0 || cfg.side == 0 {
        return Err(Error::InvalidArgument("synthetic sequence needs at least one frame and a positive side".into()));
    }
    let noise = |sigma: f64| Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()));
    let (ny, nc) = (noise(cfg.luma_noise)?, noise(cfg.chroma_noise)?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut frames = Vec::with_capacity(cfg.frames);
    for t in 0..cfg.frames {
        let tf = t as f64;
        let mut points = Vec::with_capacity((cfg.side * cfg.side) as usize);
        for x in 0..cfg.side {
            for y in 0..cfg.side {
                let (xf, yf) = (f64::from(x), f64::from(y));
                let luma = 50.0 + 1.2 * xf + 0.9 * yf + 12.0 * ((xf + 2.0 * tf) / 7.0).sin() + cfg.drift * tf;
                let cb = 128.0 + 20.0 * (xf / 15.0 + tf / 10.0).sin() * (yf / 17.0).cos();
                let cr = 128.0 + 18.0 * (xf / 19.0).cos() * (yf / 11.0 + tf / 10.0).sin();
                let color = ColorTriple::new(
                    quantize_u8(luma + ny.sample(&mut rng)),
                    quantize_u8(cb + nc.sample(&mut rng)),
                    quantize_u8(cr + nc.sample(&mut rng)),
                );
                points.push((VoxelPosition::new(x, y, height(x, y))?, color));
            }
        }
        frames.push(PointCloud::from_points(points)?);
    }
    Ok(frames)
}
