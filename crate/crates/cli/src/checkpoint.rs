//! Versioned text checkpoints.
//!
//! ```text
//! thinfilm-checkpoint 1
//! modes = 16
//! L = 1.0000000000000000e0
//! eps = 1.0000000000000000e-2
//! R = ...
//! mu = ...
//! t = ...
//! dt_next = ...
//! energy_slack = ...
//! config_sha256 = <hex>
//! F 0 <value>
//! ...
//! F 16 <value>
//! G 0 <value>
//! ...
//! end
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly. The trailing `end` line makes truncation detectable.

use std::fmt::Write as _;
use std::path::Path;

use thinfilm_core::{GalerkinState, SystemParams};

use crate::output::fmt_real;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "thinfilm-checkpoint";

/// A saved state together with the controller state needed to resume.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: GalerkinState,
    pub params: SystemParams,
    pub dt_next: f64,
    pub energy_slack: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported checkpoint format version {found} (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("cannot promote a checkpoint with {from} modes to {to} modes")]
    Demotion { from: usize, to: usize },
    #[error("{0}")]
    Io(String),
}

impl Checkpoint {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "modes = {}", self.state.modes());
        for (key, v) in [
            ("L", p.length),
            ("eps", p.eps),
            ("R", p.r),
            ("mu", p.mu),
            ("t", self.state.t),
            ("dt_next", self.dt_next),
            ("energy_slack", self.energy_slack),
        ] {
            let _ = writeln!(s, "{key} = {}", fmt_real(v));
        }
        let _ = writeln!(s, "config_sha256 = {}", self.config_hash);
        for (name, coeffs) in [("F", &self.state.f), ("G", &self.state.g)] {
            for (k, v) in coeffs.iter().enumerate() {
                let _ = writeln!(s, "{name} {k} {}", fmt_real(*v));
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self, CheckpointError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let mut last_line = 0;
        let mut next = |what: &str| -> Result<(usize, &str), CheckpointError> {
            match lines.next() {
                Some((n, l)) => {
                    last_line = n;
                    Ok((n, l))
                }
                None => Err(CheckpointError::Malformed {
                    line: last_line + 1,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let malformed = |line, message: String| CheckpointError::Malformed { line, message };

        let (n, header) = next("the format header")?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| malformed(n, format!("expected `{MAGIC} <version>`, found `{header}`")))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(CheckpointError::Version {
                found: version.to_string(),
            });
        }

        let mut field = |key: &str| -> Result<(usize, String), CheckpointError> {
            let (n, line) = next(&format!("`{key} = ...`"))?;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| malformed(n, format!("expected `{key} = ...`, found `{line}`")))?;
            if k.trim() != key {
                return Err(malformed(n, format!("expected key `{key}`, found `{}`", k.trim())));
            }
            Ok((n, v.trim().to_string()))
        };
        let real = |(n, v): (usize, String)| -> Result<f64, CheckpointError> {
            v.parse::<f64>()
                .map_err(|_| malformed(n, format!("`{v}` is not a number")))
        };

        let (n, modes) = field("modes")?;
        let modes: usize = modes
            .parse()
            .map_err(|_| malformed(n, format!("`{modes}` is not a mode count")))?;
        let length = real(field("L")?)?;
        let eps = real(field("eps")?)?;
        let r = real(field("R")?)?;
        let mu = real(field("mu")?)?;
        let t = real(field("t")?)?;
        let dt_next = real(field("dt_next")?)?;
        let energy_slack = real(field("energy_slack")?)?;
        let (_, config_hash) = field("config_sha256")?;
        let params = SystemParams::new(r, mu, length, eps)
            .map_err(|e| malformed(n, format!("invalid parameters: {e}")))?;

        let mut read = |name: &str| -> Result<Vec<f64>, CheckpointError> {
            let mut out = Vec::with_capacity(modes + 1);
            for k in 0..=modes {
                let (n, line) = next(&format!("coefficient `{name} {k}`"))?;
                let mut parts = line.split_whitespace();
                let ok = parts.next() == Some(name) && parts.next() == Some(&k.to_string());
                let value = parts.next().and_then(|v| v.parse::<f64>().ok());
                match (ok, value, parts.next()) {
                    (true, Some(v), None) => out.push(v),
                    _ => {
                        return Err(malformed(
                            n,
                            format!("expected coefficient `{name} {k} <value>`, found `{line}`"),
                        ))
                    }
                }
            }
            Ok(out)
        };
        let f = read("F")?;
        let g = read("G")?;
        let (n, end) = next("`end`")?;
        if end != "end" {
            return Err(malformed(n, format!("expected `end`, found `{end}`")));
        }
        Ok(Self {
            state: GalerkinState { f, g, t },
            params,
            dt_next,
            energy_slack,
            config_hash,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.render())
            .map_err(|e| CheckpointError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CheckpointError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Embeds the state into a basis with `modes ≥ n` by zero padding; the
    /// represented functions are unchanged.
    pub fn promote(&self, modes: usize) -> Result<Self, CheckpointError> {
        let from = self.state.modes();
        if modes < from {
            return Err(CheckpointError::Demotion { from, to: modes });
        }
        let pad = |c: &[f64]| {
            let mut v = c.to_vec();
            v.resize(modes + 1, 0.0);
            v
        };
        Ok(Self {
            state: GalerkinState {
                f: pad(&self.state.f),
                g: pad(&self.state.g),
                t: self.state.t,
            },
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            state: GalerkinState {
                f: vec![0.5, -1.0 / 3.0, f64::MIN_POSITIVE, 1e300],
                g: vec![0.7, 0.1 + 0.2, -0.0, 5e-324],
                t: 0.05,
            },
            params: SystemParams::new(1.0, 2.0, 3.0, 0.01).unwrap(),
            dt_next: 1.234_567_890_123_456_7e-4,
            energy_slack: 1e-10,
            config_hash: "ab".repeat(32),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = Checkpoint::parse(&c.render()).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.state.f), bits(&c.state.f));
        assert_eq!(bits(&back.state.g), bits(&c.state.g));
        assert_eq!(back, c);
    }

    #[test]
    fn truncation_names_the_missing_line() {
        let text = sample().render();
        let lines: Vec<&str> = text.lines().collect();
        for keep in [1, 5, 12, lines.len() - 1] {
            let cut = lines[..keep].join("\n");
            match Checkpoint::parse(&cut) {
                Err(CheckpointError::Malformed { line, .. }) => assert_eq!(line, keep + 1),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn corrupt_lines_are_reported() {
        let text = sample().render().replace("F 2 ", "F 3 ");
        let Err(CheckpointError::Malformed { line, message }) = Checkpoint::parse(&text) else {
            panic!("expected a malformed-line error");
        };
        assert_eq!(line, 13);
        assert!(message.contains("F 2"));
        let text = sample().render().replace("eps = ", "eps = x");
        assert!(matches!(Checkpoint::parse(&text), Err(CheckpointError::Malformed { line: 4, .. })));
    }

    #[test]
    fn version_mismatch_is_its_own_error() {
        let text = sample().render().replacen(&format!("{MAGIC} 1"), &format!("{MAGIC} 7"), 1);
        assert_eq!(Checkpoint::parse(&text), Err(CheckpointError::Version { found: "7".into() }));
    }

    #[test]
    fn promotion_pads_and_demotion_fails() {
        let c = sample();
        let p = c.promote(6).unwrap();
        assert_eq!(p.state.f[..4], c.state.f[..]);
        assert_eq!(p.state.g[4..], [0.0, 0.0, 0.0]);
        assert_eq!(p.state.t, c.state.t);
        assert_eq!(c.promote(3).unwrap(), c);
        assert_eq!(c.promote(2), Err(CheckpointError::Demotion { from: 3, to: 2 }));
    }

    proptest::proptest! {
        #[test]
        fn any_finite_state_round_trips(
            f in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..20),
            t in 0.0f64..1e3,
            dt in proptest::num::f64::POSITIVE,
        ) {
            let c = Checkpoint {
                state: GalerkinState { g: f.iter().rev().copied().collect(), f, t },
                dt_next: dt,
                ..sample()
            };
            let back = Checkpoint::parse(&c.render()).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            proptest::prop_assert_eq!(bits(&back.state.f), bits(&c.state.f));
            proptest::prop_assert_eq!(bits(&back.state.g), bits(&c.state.g));
            proptest::prop_assert_eq!(back.dt_next.to_bits(), c.dt_next.to_bits());
        }
    }
}
