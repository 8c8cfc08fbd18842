//! Run configuration: optional key=value file merged under CLI flags
//! (flags win).

use anyhow::{anyhow, bail, Context, Result};
use std::path::{Path, PathBuf};

/// User-provided parameter overrides; `None` means "use the suite default".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub q: Option<f64>,
    pub mu: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub phi: Option<f64>,
    pub sites: Option<usize>,
    pub cutoff: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("config file {}", path.display()))?;
        let mut ov = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key=value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = || -> Result<f64> {
                value.parse().with_context(|| format!("config field `{key}`: bad number `{value}`"))
            };
            match key {
                "q" => ov.q = Some(parse_f64()?),
                "mu" => ov.mu = Some(parse_f64()?),
                "x" => ov.x = Some(parse_f64()?),
                "y" => ov.y = Some(parse_f64()?),
                "phi" => ov.phi = Some(parse_f64()?),
                "tol" => ov.tol = Some(parse_f64()?),
                "sites" => {
                    ov.sites =
                        Some(value.parse().with_context(|| {
                            format!("config field `sites`: bad integer `{value}`")
                        })?)
                }
                "cutoff" => {
                    ov.cutoff =
                        Some(value.parse().with_context(|| {
                            format!("config field `cutoff`: bad integer `{value}`")
                        })?)
                }
                "seed" => {
                    ov.seed =
                        Some(value.parse().with_context(|| {
                            format!("config field `seed`: bad integer `{value}`")
                        })?)
                }
                "out" => ov.out = Some(PathBuf::from(value)),
                other => bail!("config line {}: unknown field `{other}`", lineno + 1),
            }
        }
        Ok(ov)
    }

    /// Overlays `flags` on top of `self` (flags win).
    pub fn merged_under(mut self, flags: Overrides) -> Overrides {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(q, mu, x, y, phi, sites, cutoff, tol, seed, out);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.q {
            if q <= 0.0 {
                bail!("field `q` must be positive, got {q}");
            }
        }
        if let Some(tol) = self.tol {
            if !tol.is_finite() || tol <= 0.0 {
                bail!("field `tol` must be positive, got {tol}");
            }
        }
        if let Some(sites) = self.sites {
            if sites == 0 || sites > 6 {
                bail!("field `sites` must be in 1..=6, got {sites}");
            }
        }
        if let Some(cutoff) = self.cutoff {
            if cutoff < 4 {
                bail!("field `cutoff` must be at least 4, got {cutoff}");
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(7)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("qlop-out"))
    }
}
