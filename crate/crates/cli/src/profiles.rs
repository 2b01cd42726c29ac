//! Initial-profile presets and their projection onto the Galerkin span.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinfilm_core::{uniform_grid, SpectralBasis};

use crate::error::{CliError, CliResult};

/// Negativity below this magnitude, left over after projection, is accepted.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Flat {
        mean: f64,
    },
    /// `mean + amp cos(mode π x / L)`
    CosineBump {
        mean: f64,
        amp: f64,
        mode: usize,
    },
    /// `mean + height (1 - r²)²` for `|r| < 1`, `r = (x - center) / width`.
    CompactDroplet {
        mean: f64,
        height: f64,
        center: f64,
        width: f64,
    },
    /// `mean + amp Σ_{k=1}^{modes} u_k k⁻² cos(kπx/L)` with `u_k` uniform in
    /// `[-1, 1]` drawn from the scenario seed.
    RandomModes {
        mean: f64,
        amp: f64,
        modes: usize,
    },
    /// Nodal samples: one value per line on a uniform grid including both
    /// endpoints, or `x value` pairs.
    File(PathBuf),
    /// Taken from the checkpoint the run resumes from.
    Checkpoint,
}

impl Profile {
    pub(crate) fn from_parts(
        name: &str,
        param: &dyn Fn(&str) -> CliResult<Option<f64>>,
        resolve: impl Fn(&str) -> PathBuf,
    ) -> Result<Self, String> {
        let get = |key: &str, default: Option<f64>| -> Result<f64, String> {
            match param(key).map_err(|e| e.to_string())? {
                Some(v) => Ok(v),
                None => default.ok_or_else(|| format!("preset `{name}` requires `.{key}`")),
            }
        };
        let count = |key: &str, default: f64| -> Result<usize, String> {
            let v = get(key, Some(default))?;
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("`.{key}` must be a non-negative integer, got {v}"))
            }
        };
        if let Some(path) = name.strip_prefix("file:") {
            return Ok(Profile::File(resolve(path.trim())));
        }
        match name {
            "flat" => Ok(Profile::Flat {
                mean: get("mean", None)?,
            }),
            "cosine-bump" => Ok(Profile::CosineBump {
                mean: get("mean", None)?,
                amp: get("amp", None)?,
                mode: count("mode", 1.0)?,
            }),
            "compact-droplet" => {
                let width = get("width", None)?;
                if !(width > 0.0) {
                    return Err(format!("`.width` must be positive, got {width}"));
                }
                Ok(Profile::CompactDroplet {
                    mean: get("mean", Some(0.05))?,
                    height: get("height", None)?,
                    center: get("center", None)?,
                    width,
                })
            }
            "random-modes" => Ok(Profile::RandomModes {
                mean: get("mean", None)?,
                amp: get("amp", None)?,
                modes: count("modes", 4.0)?,
            }),
            other => Err(format!(
                "unknown preset `{other}` (flat, cosine-bump, compact-droplet, random-modes, file:<path>)"
            )),
        }
    }

    pub(crate) fn render(&self, field: &str, s: &mut String) {
        let _ = match self {
            Profile::Flat { mean } => writeln!(s, "{field} = flat\n{field}.mean = {mean:?}"),
            Profile::CosineBump { mean, amp, mode } => writeln!(
                s,
                "{field} = cosine-bump\n{field}.mean = {mean:?}\n{field}.amp = {amp:?}\n{field}.mode = {mode}"
            ),
            Profile::CompactDroplet {
                mean,
                height,
                center,
                width,
            } => writeln!(
                s,
                "{field} = compact-droplet\n{field}.mean = {mean:?}\n{field}.height = {height:?}\n\
                 {field}.center = {center:?}\n{field}.width = {width:?}"
            ),
            Profile::RandomModes { mean, amp, modes } => writeln!(
                s,
                "{field} = random-modes\n{field}.mean = {mean:?}\n{field}.amp = {amp:?}\n{field}.modes = {modes}"
            ),
            Profile::File(path) => writeln!(s, "{field} = file:{}", path.display()),
            Profile::Checkpoint => writeln!(s, "{field} = checkpoint"),
        };
    }

    /// Samples the profile at `xs`. `stream` separates the random streams of
    /// the two fields.
    pub fn sample(&self, xs: &[f64], length: f64, seed: u64, stream: u64) -> CliResult<Vec<f64>> {
        Ok(match self {
            Profile::Flat { mean } => vec![*mean; xs.len()],
            Profile::CosineBump { mean, amp, mode } => xs
                .iter()
                .map(|x| mean + amp * (*mode as f64 * PI * x / length).cos())
                .collect(),
            Profile::CompactDroplet {
                mean,
                height,
                center,
                width,
            } => xs
                .iter()
                .map(|x| {
                    let r = (x - center) / width;
                    let bump = if r.abs() < 1.0 { (1.0 - r * r).powi(2) } else { 0.0 };
                    mean + height * bump
                })
                .collect(),
            Profile::RandomModes { mean, amp, modes } => {
                let u = random_amplitudes(*modes, seed, stream);
                xs.iter()
                    .map(|x| {
                        mean + amp
                            * u.iter()
                                .enumerate()
                                .map(|(i, ui)| {
                                    let k = (i + 1) as f64;
                                    ui / (k * k) * (k * PI * x / length).cos()
                                })
                                .sum::<f64>()
                    })
                    .collect()
            }
            Profile::File(path) => {
                let table = read_samples(path, length)?;
                xs.iter().map(|&x| interpolate(&table, x)).collect()
            }
            Profile::Checkpoint => {
                return Err(CliError::Config(
                    "profile is taken from a checkpoint and cannot be sampled".into(),
                ))
            }
        })
    }
    /// Exact Galerkin coefficients for presets that are finite cosine sums;
    /// `None` for profiles that need quadrature.
    pub fn coefficients(&self, modes: usize, length: f64, seed: u64, stream: u64) -> Option<Vec<f64>> {
        let mut c = vec![0.0; modes + 1];
        let (root, half) = (length.sqrt(), (0.5 * length).sqrt());
        match self {
            Profile::Flat { mean } => c[0] = mean * root,
            Profile::CosineBump { mean, amp, mode } => {
                c[0] = mean * root;
                if *mode == 0 {
                    c[0] += amp * root;
                } else if *mode <= modes {
                    c[*mode] = amp * half;
                }
            }
            Profile::RandomModes { mean, amp, modes: count } => {
                c[0] = mean * root;
                for (i, u) in random_amplitudes(*count, seed, stream).iter().enumerate().take(modes) {
                    let k = (i + 1) as f64;
                    c[i + 1] = amp * u / (k * k) * half;
                }
            }
            _ => return None,
        }
        Some(c)
    }
}

fn random_amplitudes(count: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn read_samples(path: &Path, length: f64) -> CliResult<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read profile file {}: {e}", path.display()))
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| {
                CliError::Config(format!("{}:{}: malformed sample `{line}`", path.display(), i + 1))
            })?;
        rows.push(row);
    }
    let bad = |msg: &str| CliError::Config(format!("{}: {msg}", path.display()));
    if rows.len() < 2 {
        return Err(bad("need at least two samples"));
    }
    let width = rows[0].len();
    if !(1..=2).contains(&width) || rows.iter().any(|r| r.len() != width) {
        return Err(bad("expected one column of values or two columns `x value`"));
    }
    let table: Vec<(f64, f64)> = if width == 1 {
        let xs = uniform_grid(length, rows.len());
        xs.into_iter().zip(rows.iter().map(|r| r[0])).collect()
    } else {
        rows.iter().map(|r| (r[0], r[1])).collect()
    };
    if table.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(bad("sample abscissae must be strictly increasing"));
    }
    let tol = 1e-12 * length;
    if table[0].0 > tol || table[table.len() - 1].0 < length - tol {
        return Err(bad("samples must cover the whole interval [0, L]"));
    }
    Ok(table)
}

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let i = table.partition_point(|(xi, _)| *xi <= x);
    if i == 0 {
        return table[0].1;
    }
    if i == table.len() {
        return table[i - 1].1;
    }
    let ((x0, y0), (x1, y1)) = (table[i - 1], table[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Coefficients of the projected profile, after rejecting negative samples
/// and, for compactly supported data, one clip-and-reproject pass.
pub fn project_profile(
    profile: &Profile,
    field: &'static str,
    basis: &SpectralBasis,
    seed: u64,
    check_points: usize,
) -> CliResult<Vec<f64>> {
    let length = basis.length();
    let stream = if field == "f" { 0 } else { 1 };
    let nodes = basis.quadrature().nodes();
    let grid = uniform_grid(length, check_points);

    for xs in [nodes, grid.as_slice()] {
        let raw = profile.sample(xs, length, seed, stream)?;
        if let Some((x, v)) = most_negative(xs, &raw).filter(|(_, v)| *v < 0.0) {
            return Err(CliError::NegativeInitial { field, x, value: v });
        }
    }

    let mut coeffs = match profile.coefficients(basis.modes(), length, seed, stream) {
        Some(c) => c,
        None => basis.project(&profile.sample(nodes, length, seed, stream)?)?,
    };
    if matches!(profile, Profile::CompactDroplet { .. }) {
        let clipped: Vec<f64> = basis.synthesize(&coeffs, 0)?.iter().map(|v| v.max(0.0)).collect();
        coeffs = basis.project(&clipped)?;
    }

    let mut worst: Option<(f64, f64)> = None;
    for xs in [nodes, grid.as_slice()] {
        let values = basis.evaluate(&coeffs, xs, 0)?;
        if let Some(m) = most_negative(xs, &values) {
            if worst.is_none_or(|w| m.1 < w.1) {
                worst = Some(m);
            }
        }
    }
    if let Some((x, v)) = worst.filter(|(_, v)| *v < 0.0) {
        if v < -NEGATIVITY_TOLERANCE {
            return Err(CliError::NegativeInitial { field, x, value: v });
        }
        log::info!("projected {field} has residual negativity {v:e} at x = {x}; accepted");
    }
    Ok(coeffs)
}

fn most_negative(xs: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    xs.iter()
        .zip(values)
        .map(|(x, v)| (*x, *v))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}
