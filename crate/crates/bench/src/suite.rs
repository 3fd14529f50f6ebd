//! The bundled evaluation images, the fixed motion kernels and per-run seeds.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pdeconv::io::read_image;
use pdeconv::synth::make_trajectory_kernel;
use pdeconv::tune::KernelClass;
use pdeconv::{Image, Kernel};

pub const KERNELS_PER_CLASS: usize = 3;
pub const TRAJECTORY_STEPS: usize = 2000;
pub const TRAJECTORY_JITTER: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 20;

pub fn suite_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("suite")
}

/// Image files in `dir` with a supported extension, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("pgm" | "pfm")))
        .collect();
    paths.sort();
    Ok(paths)
}

/// File stem, used as the image id in reports.
pub fn image_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

#[derive(Clone, Debug)]
pub struct SuiteImage {
    pub id: String,
    pub image: Image,
}

pub fn load_images(paths: &[PathBuf]) -> Result<Vec<SuiteImage>> {
    paths
        .iter()
        .map(|p| {
            let image = read_image(p).with_context(|| format!("loading {}", p.display()))?;
            Ok(SuiteImage { id: image_id(p), image })
        })
        .collect()
}

pub fn load_suite() -> Result<Vec<SuiteImage>> {
    load_images(&list_images(&suite_dir())?)
}

/// Kernel `index` of a size class. Seeds are fixed so every run of the
/// harness sees the same blur.
pub fn suite_kernel(class: KernelClass, index: usize) -> Result<Kernel> {
    let size = class.size();
    let seed = 1000 + 10 * size as u64 + index as u64;
    Ok(make_trajectory_kernel(size, TRAJECTORY_STEPS, TRAJECTORY_JITTER, seed)?)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Degradation seed of one (image, kernel, ppp) cell. The solver is not part
/// of the key: every solver sees the same noisy observation.
pub fn run_seed(base: u64, image_id: &str, class: KernelClass, kernel_index: usize, ppp: f64) -> u64 {
    let mut h = splitmix(base);
    for part in [fnv1a(image_id.as_bytes()), class.size() as u64, kernel_index as u64, ppp.to_bits()] {
        h = splitmix(h ^ part);
    }
    h
}
