//! Dataset manifest.
//!
//! A TOML file listing the brightness frames and height maps of a sequence:
//!
//! ```toml
//! version = 1
//! width = 512
//! height = 512
//! h = 1.0                      # optional, default 1
//! dt = 1.0                     # optional, default 1
//! frames = ["f000.pfm", "f001.pfm"]
//! heights = ["z.pfm"]          # one per frame, or a single static surface
//! intensity_range = [0.0, 1.0] # optional raw brightness range, default [0, 1]
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Stored
//! brightness in `intensity_range` is mapped affinely onto `[0, 1]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pfm::read_float_image;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

pub const MANIFEST_VERSION: i64 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    version: i64,
    width: usize,
    height: usize,
    #[serde(default = "one")]
    h: f64,
    #[serde(default = "one")]
    dt: f64,
    frames: Vec<PathBuf>,
    heights: Vec<PathBuf>,
    #[serde(default = "unit_range")]
    intensity_range: [f64; 2],
}

fn one() -> f64 {
    1.0
}

fn unit_range() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: i64,
    pub spec: GridSpec,
    pub frame_paths: Vec<PathBuf>,
    /// Same length as `frame_paths`, or length 1 for a static surface.
    pub height_paths: Vec<PathBuf>,
    pub intensity_range: (f64, f64),
}

/// Frames and heights loaded from a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub spec: GridSpec,
    /// Manifest index of each loaded frame.
    pub indices: Vec<usize>,
    pub frames: Vec<ScalarField>,
    /// One per frame, or a single entry for a static surface.
    pub heights: Vec<ScalarField>,
}

impl Sequence {
    pub fn is_static(&self) -> bool {
        self.heights.len() == 1
    }

    /// Height map at position `k` of the loaded frames.
    pub fn height(&self, k: usize) -> &ScalarField {
        if self.is_static() {
            &self.heights[0]
        } else {
            &self.heights[k]
        }
    }
}

impl Manifest {
    pub fn is_static(&self) -> bool {
        self.height_paths.len() == 1
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let bad = |reason: String| Error::Manifest {
            path: path.to_path_buf(),
            reason,
        };
        if self.version != MANIFEST_VERSION {
            return Err(bad(format!("unsupported version {}", self.version)));
        }
        self.spec.validate().map_err(|e| bad(e.to_string()))?;
        if self.frame_paths.is_empty() {
            return Err(bad("no frames listed".into()));
        }
        let (nf, nh) = (self.frame_paths.len(), self.height_paths.len());
        if nh != 1 && nh != nf {
            return Err(bad(format!("{nh} height maps for {nf} frames")));
        }
        let (lo, hi) = self.intensity_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(bad(format!(
                "intensity_range [{lo}, {hi}] must be increasing"
            )));
        }
        Ok(())
    }

    /// Serialises with paths relative to `path`'s directory where possible.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.validate(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rel = |p: &PathBuf| {
            p.strip_prefix(base)
                .map(Path::to_path_buf)
                .unwrap_or_else(|_| p.clone())
        };
        let raw = RawManifest {
            version: self.version,
            width: self.spec.width,
            height: self.spec.height,
            h: self.spec.h,
            dt: self.spec.dt,
            frames: self.frame_paths.iter().map(rel).collect(),
            heights: self.height_paths.iter().map(rel).collect(),
            intensity_range: [self.intensity_range.0, self.intensity_range.1],
        };
        let text = toml::to_string(&raw).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        super::write_bytes(path, text.as_bytes())
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    let bad = |reason: String| Error::Manifest {
        path: path.to_path_buf(),
        reason,
    };
    let text = String::from_utf8(bytes).map_err(|_| bad("not UTF-8".into()))?;
    let raw: RawManifest = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
    let m = Manifest {
        version: raw.version,
        spec: GridSpec {
            width: raw.width,
            height: raw.height,
            h: raw.h,
            dt: raw.dt,
        },
        frame_paths: raw.frames.into_iter().map(resolve).collect(),
        height_paths: raw.heights.into_iter().map(resolve).collect(),
        intensity_range: (raw.intensity_range[0], raw.intensity_range[1]),
    };
    m.validate(path)?;
    Ok(m)
}

fn load_image(path: &Path, spec: GridSpec) -> Result<ScalarField> {
    let img = read_float_image(path)?;
    if (img.width, img.height) != (spec.width, spec.height) {
        return Err(Error::DimensionMismatch {
            path: path.to_path_buf(),
            expected: format!("{}x{}", spec.width, spec.height),
            found: format!("{}x{}", img.width, img.height),
        });
    }
    img.to_field(spec)
}

/// Loads every frame and height map.
pub fn load_sequence(manifest: &Manifest) -> Result<Sequence> {
    let all: Vec<usize> = (0..manifest.frame_paths.len()).collect();
    load_frames(manifest, &all)
}

/// Loads the listed frames with their height maps.
pub fn load_frames(manifest: &Manifest, indices: &[usize]) -> Result<Sequence> {
    let n = manifest.frame_paths.len();
    if let Some(&k) = indices.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidParameter(format!(
            "frame index {k} out of range for {n} frames"
        )));
    }
    let spec = manifest.spec;
    let (lo, hi) = manifest.intensity_range;
    let scale = 1.0 / (hi - lo);
    let frames = indices
        .iter()
        .map(|&k| Ok(load_image(&manifest.frame_paths[k], spec)?.map(|v| (v - lo) * scale)))
        .collect::<Result<Vec<_>>>()?;
    let heights = if manifest.is_static() {
        vec![load_image(&manifest.height_paths[0], spec)?]
    } else {
        indices
            .iter()
            .map(|&k| load_image(&manifest.height_paths[k], spec))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(Sequence {
        spec,
        indices: indices.to_vec(),
        frames,
        heights,
    })
}

#[cfg(test)]
mod tests {
    use super::super::pfm::write_float_image;
    use super::*;

    fn write_set(
        dir: &Path,
        spec: GridSpec,
        frames: usize,
        heights: usize,
        extra: &str,
    ) -> PathBuf {
        let list = |prefix: &str, n: usize| {
            (0..n)
                .map(|k| {
                    let name = format!("{prefix}{k:03}.pfm");
                    let f = ScalarField::constant(spec, k as f64);
                    write_float_image(dir.join(&name), &f).unwrap();
                    format!("\"{name}\"")
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let text = format!(
            "version = 1\nwidth = {}\nheight = {}\nframes = [{}]\nheights = [{}]\n{extra}",
            spec.width,
            spec.height,
            list("f", frames),
            list("z", heights)
        );
        let path = dir.join("seq.toml");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn loads_two_full_size_frames() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(512, 512, 1.0, 1.0).unwrap();
        let m = read_manifest(write_set(dir.path(), spec, 2, 2, "")).unwrap();
        let seq = load_sequence(&m).unwrap();
        assert_eq!(seq.frames.len(), 2);
        assert_eq!(seq.frames[0].spec().width, 512);
        assert_eq!(seq.frames[1].at(100, 200), 1.0);
    }

    #[test]
    fn static_surface_is_broadcast() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(8, 8, 1.0, 1.0).unwrap();
        let m = read_manifest(write_set(dir.path(), spec, 77, 1, "")).unwrap();
        assert!(m.is_static());
        let seq = load_sequence(&m).unwrap();
        assert_eq!(seq.frames.len(), 77);
        assert_eq!(seq.height(76), &seq.heights[0]);
        let pair = load_frames(&m, &[57, 58]).unwrap();
        assert_eq!(pair.frames[0].at(0, 0), 57.0);
        assert!(load_frames(&m, &[77]).is_err());
    }

    #[test]
    fn intensity_range_is_normalised() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(4, 4, 1.0, 1.0).unwrap();
        let m = read_manifest(write_set(
            dir.path(),
            spec,
            3,
            1,
            "intensity_range = [0.0, 2.0]\n",
        ))
        .unwrap();
        let seq = load_sequence(&m).unwrap();
        assert_eq!(seq.frames[1].at(0, 0), 0.5);
    }

    #[test]
    fn wrong_pixel_count_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(6, 6, 1.0, 1.0).unwrap();
        let path = write_set(dir.path(), spec, 2, 1, "");
        let small = GridSpec::new(5, 6, 1.0, 1.0).unwrap();
        write_float_image(dir.path().join("f001.pfm"), &ScalarField::zeros(small)).unwrap();
        let err = load_sequence(&read_manifest(&path).unwrap()).unwrap_err();
        match err {
            Error::DimensionMismatch { path, .. } => assert!(path.ends_with("f001.pfm")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_and_non_finite_files_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(4, 4, 1.0, 1.0).unwrap();
        let path = write_set(dir.path(), spec, 2, 1, "");
        let m = read_manifest(&path).unwrap();

        let mut bytes = std::fs::read(dir.path().join("f000.pfm")).unwrap();
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        std::fs::write(dir.path().join("f000.pfm"), bytes).unwrap();
        assert!(matches!(
            load_sequence(&m),
            Err(Error::NonFiniteSample { index: 15, .. })
        ));

        std::fs::remove_file(dir.path().join("z000.pfm")).unwrap();
        match load_frames(&m, &[1]) {
            Err(Error::MissingFile { path }) => assert!(path.ends_with("z000.pfm")),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn invalid_manifests_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        let base = "version = 1\nwidth = 4\nheight = 4\n";
        for body in [
            "frames = [\"a\", \"b\"]\nheights = [\"a\", \"b\", \"c\"]\n",
            "frames = []\nheights = [\"a\"]\n",
            "frames = [\"a\"]\nheights = [\"a\"]\nintensity_range = [1.0, 1.0]\n",
            "frames = [\"a\"]\nheights = [\"a\"]\ncolour = 3\n",
        ] {
            std::fs::write(&path, format!("{base}{body}")).unwrap();
            assert!(
                matches!(read_manifest(&path), Err(Error::Manifest { .. })),
                "{body}"
            );
        }
        std::fs::write(
            &path,
            "version = 2\nwidth = 4\nheight = 4\nframes = [\"a\"]\nheights = [\"a\"]\n",
        )
        .unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Manifest { .. })));
        assert!(matches!(
            read_manifest(dir.path().join("none.toml")),
            Err(Error::MissingFile { .. })
        ));
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::new(4, 5, 0.5, 2.0).unwrap();
        let m = Manifest {
            version: 1,
            spec,
            frame_paths: vec![dir.path().join("a.pfm"), dir.path().join("b.pfm")],
            height_paths: vec![dir.path().join("z.pfm")],
            intensity_range: (0.0, 255.0),
        };
        let path = dir.path().join("m.toml");
        m.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"a.pfm\""));
        assert_eq!(read_manifest(&path).unwrap(), m);
    }
}
