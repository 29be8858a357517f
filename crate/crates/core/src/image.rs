//! Images, binary PGM/PPM I/O, and the two synthetic degradations.
//!
//! Pixel intensities are stored as `f64` in channel-planar, row-major
//! order and are nominally in `[0,255]`. Degraded images are kept in
//! unclamped real intensity space; clamping and quantization happen only
//! through [`clamp_quantize`], normally right before saving.
//!
//! Randomness contract: both degradations use the ChaCha12 stream cipher
//! generator seeded from a caller-supplied 64-bit seed, drawing one value
//! per sample in planar order. [`derive_seed`] (SplitMix64) turns one base
//! seed into independent per-run seeds.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A 1- or 3-channel image with real-valued intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from planar data (`channels * height * width` samples).
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions {width}x{height} must be positive"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "{channels} channels (only 1 or 3 supported)"
            )));
        }
        let expect = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::InvalidImage("dimension overflow".into()))?;
        if data.len() != expect {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    /// All samples in planar order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// One channel plane, row-major.
    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[channel * n..(channel + 1) * n]
    }

    /// Extracts one channel as a standalone single-channel image.
    pub fn extract_channel(&self, channel: usize) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.plane(channel).to_vec(),
        }
    }

    /// Reassembles channel planes into one image.
    pub fn from_channels(planes: &[Image]) -> Result<Image> {
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::InvalidImage(format!(
                "{} planes (only 1 or 3 supported)",
                planes.len()
            )));
        }
        let (w, h) = (planes[0].width, planes[0].height);
        let mut data = Vec::with_capacity(w * h * planes.len());
        for p in planes {
            if p.width != w || p.height != h || p.channels != 1 {
                return Err(Error::DimMismatch {
                    expected: (w, h, 1),
                    found: p.dims(),
                });
            }
            data.extend_from_slice(&p.data);
        }
        Image::new(w, h, planes.len(), data)
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[channel * self.width * self.height + row * self.width + col]
    }

    /// Applies `f` to every sample. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Per-pixel keep/drop mask for the missing-pixel degradation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    kept: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, kept: Vec<bool>) -> Result<Self> {
        if kept.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask length {} does not match {width}x{height}",
                kept.len()
            )));
        }
        Ok(Self {
            width,
            height,
            kept,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        self.kept[row * self.width + col]
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    /// Fraction of pixels actually dropped.
    pub fn drop_fraction(&self) -> f64 {
        1.0 - self.kept_count() as f64 / self.kept.len() as f64
    }

    /// Mask rendered as a PGM-compatible image: kept = 255, missing = 0.
    pub fn to_image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.kept.iter().map(|&k| if k { 255.0 } else { 0.0 }).collect(),
        }
    }

    /// Parses a mask image written by [`PixelMask::to_image`].
    pub fn from_image(img: &Image) -> Result<Self> {
        if img.channels != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                found: img.channels,
            });
        }
        let kept = img
            .data
            .iter()
            .map(|&v| {
                if v == 255.0 {
                    Ok(true)
                } else if v == 0.0 {
                    Ok(false)
                } else {
                    Err(Error::InvalidImage(format!(
                        "mask sample {v} is neither 0 nor 255"
                    )))
                }
            })
            .collect::<Result<Vec<bool>>>()?;
        PixelMask::new(img.width, img.height, kept)
    }

    /// Zeroes out the missing pixels of a single-channel image.
    pub fn apply(&self, img: &Image) -> Result<Image> {
        if img.channels != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                found: img.channels,
            });
        }
        if (img.width, img.height) != (self.width, self.height) {
            return Err(Error::DimMismatch {
                expected: (self.width, self.height, 1),
                found: img.dims(),
            });
        }
        let data = img
            .data
            .iter()
            .zip(&self.kept)
            .map(|(&v, &k)| if k { v } else { 0.0 })
            .collect();
        Ok(Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        })
    }
}

// ── PGM / PPM ────────────────────────────────────────────────────────

struct PnmParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> PnmParser<'a> {
    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::MalformedHeader {
            path: self.path.to_path_buf(),
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_space_and_comments(&mut self) -> Result<()> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => return Ok(()),
                None => return Err(self.malformed("unexpected end of header")),
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments()?;
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.malformed(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse::<u32>()
            .map_err(|_| {
                self.pos = start;
                self.malformed(format!("{what} out of range"))
            })
    }
}

/// Loads a binary PGM (`P5`) or PPM (`P6`) file with maxval 255.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut p = PnmParser {
        bytes: &bytes,
        pos: 0,
        path,
    };

    let channels = match bytes.get(0..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(p.malformed("magic is neither P5 nor P6")),
    };
    p.pos = 2;
    let width = p.number("width")? as usize;
    let height = p.number("height")? as usize;
    let maxval_at = {
        p.skip_space_and_comments()?;
        p.pos
    };
    let maxval = p.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval {
            path: path.to_path_buf(),
            offset: maxval_at,
            maxval,
        });
    }
    match bytes.get(p.pos) {
        Some(b) if b.is_ascii_whitespace() => p.pos += 1,
        _ => return Err(p.malformed("expected single whitespace after maxval")),
    }
    if width == 0 || height == 0 {
        return Err(p.malformed("zero image dimension"));
    }

    let expected = width * height * channels;
    let payload = &bytes[p.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            offset: bytes.len(),
            expected,
            found: payload.len(),
        });
    }

    // Interleaved on disk, planar in memory.
    let n = width * height;
    let mut data = vec![0.0f64; expected];
    for i in 0..n {
        for c in 0..channels {
            data[c * n + i] = payload[i * channels + c] as f64;
        }
    }
    Image::new(width, height, channels, data)
}

/// Saves as binary PGM/PPM with maxval 255. Samples must already be
/// integers in `[0,255]` (see [`clamp_quantize`]); output bytes are
/// canonical and deterministic.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for (index, &value) in img.data.iter().enumerate() {
        if !(0.0..=255.0).contains(&value) || value.fract() != 0.0 {
            return Err(Error::UnquantizedPixel { index, value });
        }
    }
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    let n = img.width * img.height;
    out.reserve(n * img.channels);
    for i in 0..n {
        for c in 0..img.channels {
            out.push(img.data[c * n + i] as u8);
        }
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ── degradations ─────────────────────────────────────────────────────

/// Adds i.i.d. Gaussian noise with standard deviation `sigma` to every
/// sample. The result is not clamped. Deterministic given `seed`.
pub fn add_gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if sigma < 0.0 {
        return Err(Error::NegativeSigma { sigma });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let data = img
        .data
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect();
    Ok(Image {
        width: img.width,
        height: img.height,
        channels: img.channels,
        data,
    })
}

/// Draws a random keep/drop mask: each pixel is dropped independently
/// with probability `missing_rate`. Deterministic given `seed`.
pub fn make_mask(width: usize, height: usize, missing_rate: f64, seed: u64) -> Result<PixelMask> {
    if !(0.0..=1.0).contains(&missing_rate) {
        return Err(Error::RateOutOfRange { rate: missing_rate });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let kept = (0..width * height)
        .map(|_| rng.random::<f64>() >= missing_rate)
        .collect();
    PixelMask::new(width, height, kept)
}

/// Clamps every sample to `[0,255]` and rounds half away from zero.
pub fn clamp_quantize(img: &Image) -> Image {
    img.map(|v| v.clamp(0.0, 255.0).round())
}

/// SplitMix64 seed derivation: one base seed, many independent streams.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir() -> tempdir::TempDirGuard {
        tempdir::guard()
    }

    // Minimal temp-dir helper so the crate does not need the tempfile dep.
    mod tempdir {
        use std::path::PathBuf;
        use std::sync::atomic::{AtomicU64, Ordering};

        static COUNTER: AtomicU64 = AtomicU64::new(0);

        pub struct TempDirGuard(pub PathBuf);

        impl Drop for TempDirGuard {
            fn drop(&mut self) {
                let _ = std::fs::remove_dir_all(&self.0);
            }
        }

        pub fn guard() -> TempDirGuard {
            let id = COUNTER.fetch_add(1, Ordering::Relaxed);
            let dir = std::env::temp_dir().join(format!(
                "stlr-image-test-{}-{id}",
                std::process::id()
            ));
            std::fs::create_dir_all(&dir).unwrap();
            TempDirGuard(dir)
        }
    }

    #[test]
    fn loads_p5_payload_bytes() {
        let d = tmpdir();
        let path = d.0.join("a.pgm");
        std::fs::write(&path, [b"P5\n2 2\n255\n".as_slice(), &[0, 128, 255, 64]].concat())
            .unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.dims(), (2, 2, 1));
        assert_eq!(img.data(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn loads_p6_as_planar() {
        let d = tmpdir();
        let path = d.0.join("a.ppm");
        // 3 pixels: (1,2,3) (4,5,6) (7,8,9)
        std::fs::write(
            &path,
            [b"P6\n3 1\n255\n".as_slice(), &[1, 2, 3, 4, 5, 6, 7, 8, 9]].concat(),
        )
        .unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.dims(), (3, 1, 3));
        assert_eq!(img.plane(0), &[1.0, 4.0, 7.0]);
        assert_eq!(img.plane(1), &[2.0, 5.0, 8.0]);
        assert_eq!(img.plane(2), &[3.0, 6.0, 9.0]);
    }

    #[test]
    fn save_then_load_round_trips_bit_exactly() {
        let d = tmpdir();
        let path = d.0.join("rt.ppm");
        let img = Image::new(
            3,
            2,
            3,
            (0..18).map(|i| ((i * 37) % 256) as f64).collect(),
        )
        .unwrap();
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(img, back);

        // Saving the reloaded image reproduces the same bytes.
        let path2 = d.0.join("rt2.ppm");
        save_image(&back, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn save_writes_expected_payload() {
        let d = tmpdir();
        let path = d.0.join("c.pgm");
        save_image(&Image::constant(4, 2, 1, 128.0).unwrap(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..11], b"P5\n4 2\n255\n");
        assert!(bytes[11..].iter().all(|&b| b == 128));

        let path = d.0.join("one.pgm");
        save_image(&Image::constant(1, 1, 1, 255.0).unwrap(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.last(), Some(&0xFFu8));
        assert_eq!(bytes.len(), b"P5\n1 1\n255\n".len() + 1);
    }

    #[test]
    fn save_rejects_unquantized_values() {
        let d = tmpdir();
        let img = Image::new(1, 1, 1, vec![13.5]).unwrap();
        assert!(matches!(
            save_image(&img, d.0.join("x.pgm")),
            Err(Error::UnquantizedPixel { index: 0, .. })
        ));
    }

    #[test]
    fn load_failures_name_byte_offsets() {
        let d = tmpdir();

        let path = d.0.join("bad_magic.pgm");
        std::fs::write(&path, b"P7\n1 1\n255\n\x00").unwrap();
        assert!(matches!(load_image(&path), Err(Error::MalformedHeader { .. })));

        let path = d.0.join("bad_maxval.pgm");
        std::fs::write(&path, b"P5\n1 1\n65535\n\x00\x00").unwrap();
        match load_image(&path) {
            Err(Error::UnsupportedMaxval { maxval, offset, .. }) => {
                assert_eq!(maxval, 65535);
                assert_eq!(offset, 7);
            }
            other => panic!("expected UnsupportedMaxval, got {other:?}"),
        }

        let path = d.0.join("short.pgm");
        std::fs::write(&path, b"P5\n2 2\n255\n\x01\x02").unwrap();
        match load_image(&path) {
            Err(Error::TruncatedPayload {
                expected, found, ..
            }) => {
                assert_eq!(expected, 4);
                assert_eq!(found, 2);
            }
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let img = Image::constant(8, 8, 1, 100.0).unwrap();
        let out = add_gaussian_noise(&img, 0.0, 1).unwrap();
        assert_eq!(img, out);
        assert!(matches!(
            add_gaussian_noise(&img, -1.0, 1),
            Err(Error::NegativeSigma { .. })
        ));
    }

    #[test]
    fn noise_matches_requested_sigma() {
        let img = Image::constant(256, 256, 1, 128.0).unwrap();
        let out = add_gaussian_noise(&img, 20.0, 99).unwrap();
        let n = out.data().len() as f64;
        let mean: f64 = out
            .data()
            .iter()
            .zip(img.data())
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / n;
        let var: f64 = out
            .data()
            .iter()
            .zip(img.data())
            .map(|(a, b)| (a - b - mean).powi(2))
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        assert!((sd - 20.0).abs() < 0.5, "sample sd {sd}");
        assert!(mean.abs() < 4.0 * 20.0 / n.sqrt(), "mean shift {mean}");
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let img = Image::constant(16, 16, 3, 50.0).unwrap();
        let a = add_gaussian_noise(&img, 5.0, 7).unwrap();
        let b = add_gaussian_noise(&img, 5.0, 7).unwrap();
        let c = add_gaussian_noise(&img, 5.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn mask_rate_extremes_and_concentration() {
        let all = make_mask(16, 16, 0.0, 3).unwrap();
        assert_eq!(all.kept_count(), 256);
        let none = make_mask(16, 16, 1.0, 3).unwrap();
        assert_eq!(none.kept_count(), 0);
        assert!(matches!(
            make_mask(4, 4, 1.5, 0),
            Err(Error::RateOutOfRange { .. })
        ));

        let m = make_mask(512, 512, 0.3, 11).unwrap();
        assert!((m.drop_fraction() - 0.3).abs() < 0.01);
        assert_eq!(m, make_mask(512, 512, 0.3, 11).unwrap());
    }

    #[test]
    fn mask_image_round_trip() {
        let m = make_mask(9, 5, 0.4, 2).unwrap();
        let back = PixelMask::from_image(&m.to_image()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn clamp_quantize_rules() {
        let img = Image::new(4, 1, 1, vec![-3.2, 270.0, 127.5, 42.0]).unwrap();
        let q = clamp_quantize(&img);
        assert_eq!(q.data(), &[0.0, 255.0, 128.0, 42.0]);
        // Already integral image is unchanged.
        assert_eq!(clamp_quantize(&q), q);
    }
}
