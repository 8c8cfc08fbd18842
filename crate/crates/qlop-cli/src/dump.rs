//! Binary operator dumps plus the key=value sidecar.

use anyhow::{Context, Result};
use num_complex::Complex64 as C64;
use std::path::PathBuf;

use qlop::factor::build_o;
use qlop::lops::build_l;
use qlop::qnum::QParams;
use qlop::qops::{q_operator, t_operator, ChainSpec};
use qlop::reps::verma_rep;
use qlop::tensor::{write_dump, write_sidecar, Operator};
use qlop::OscKind;

use crate::config::Overrides;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DumpObject {
    T,
    Q1,
    Q2,
    L,
    O,
}

impl DumpObject {
    pub fn name(&self) -> &'static str {
        match self {
            DumpObject::T => "T",
            DumpObject::Q1 => "Q1",
            DumpObject::Q2 => "Q2",
            DumpObject::L => "L",
            DumpObject::O => "O",
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Builds the requested operator under the configured parameters and
/// writes `<out>/<name>.qlop` plus `<out>/<name>.meta`.
pub fn dump_object(object: DumpObject, ov: &Overrides) -> Result<(PathBuf, PathBuf)> {
    let out = ov.out_dir();
    std::fs::create_dir_all(&out)
        .with_context(|| format!("field `out`: cannot create {}", out.display()))?;

    let mu = ov.mu.unwrap_or(0.7321);
    let x = ov.x.unwrap_or(match object {
        DumpObject::T | DumpObject::Q1 | DumpObject::Q2 => 0.2,
        _ => 0.4,
    });
    let sites = ov.sites.unwrap_or(1);
    let phi = ov.phi.unwrap_or(sites as f64 + 2.0);
    let mut meta: Vec<(String, String)> = vec![
        ("object".into(), object.name().into()),
        ("format_version".into(), format!("{}", qlop::tensor::DUMP_VERSION)),
    ];

    let op: Operator = match object {
        DumpObject::L => {
            let d = ov.cutoff.unwrap_or(12);
            let p = QParams::real(ov.q.unwrap_or(1.3)).context("field `q`")?;
            meta.extend(kv(&p, Some(mu), Some(x), None, None, d));
            build_l(&verma_rep(c(mu), d, &p), c(x), &p)?.op
        }
        DumpObject::O => {
            let d = ov.cutoff.unwrap_or(12);
            let p = QParams::real(ov.q.unwrap_or(1.3)).context("field `q`")?;
            meta.extend(kv(&p, None, None, None, None, d));
            build_o(d, d, &p)?.op
        }
        DumpObject::T => {
            let d = ov.cutoff.unwrap_or(40);
            let p = QParams::real(ov.q.unwrap_or(1.25)).context("field `q`")?;
            let spec = ChainSpec::new(sites, c(x), phi, d).context("field `sites`")?;
            meta.extend(kv(&p, Some(mu), Some(x), Some(phi), Some(sites), d));
            t_operator(c(mu), &spec, &p)?
        }
        DumpObject::Q1 | DumpObject::Q2 => {
            let d = ov.cutoff.unwrap_or(40);
            let p = QParams::real(ov.q.unwrap_or(1.25)).context("field `q`")?;
            let spec = ChainSpec::new(sites, c(x), phi, d).context("field `sites`")?;
            meta.extend(kv(&p, None, Some(x), Some(phi), Some(sites), d));
            let kind = if object == DumpObject::Q1 { OscKind::Osc1 } else { OscKind::Osc2 };
            q_operator(kind, &spec, &p)?
        }
    };

    meta.push((
        "legs".into(),
        op.spaces().iter().map(|s| format!("{}:{}", s.label, s.dim)).collect::<Vec<_>>().join(","),
    ));
    let bin_path = out.join(format!("{}.qlop", object.name()));
    let meta_path = out.join(format!("{}.meta", object.name()));
    write_dump(&op, &bin_path)?;
    write_sidecar(&meta_path, &meta)?;
    Ok((bin_path, meta_path))
}

fn kv(
    p: &QParams,
    mu: Option<f64>,
    x: Option<f64>,
    phi: Option<f64>,
    sites: Option<usize>,
    cutoff: usize,
) -> Vec<(String, String)> {
    let mut v = vec![("q".into(), format!("{}", p.q().re))];
    if let Some(mu) = mu {
        v.push(("mu".into(), format!("{mu}")));
    }
    if let Some(x) = x {
        v.push(("x".into(), format!("{x}")));
    }
    if let Some(phi) = phi {
        v.push(("phi".into(), format!("{phi}")));
    }
    if let Some(sites) = sites {
        v.push(("sites".into(), format!("{sites}")));
    }
    v.push(("cutoff".into(), format!("{cutoff}")));
    v
}
