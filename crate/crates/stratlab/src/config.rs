//! Flat `key = value` run configuration files and `--set` overrides.
//!
//! Keys match the [`RunConfig`] field names:
//! `model`, `n1`, `n2`, `fd_order`, `cfl`, `t_end`, `sample_dt`, `ic_shape`
//! (`zero` | `sine`), `ic_kx`, `ic_epsilon`, `rho_s` (`linear` |
//! `poly:c0,c1,...`), `dealias`, `max_linf`, `nan_abort`, `sobolev_k`,
//! `experimental_general_rhos`. Lines starting with `#` are comments.

use crate::error::{Error, Result};
use crate::transport::{IcShape, RhoSpec, RunConfig};
use crate::Model;

/// Stand-alone default configuration (the quick porous-media setup).
pub fn default_config() -> RunConfig {
    RunConfig {
        model: Model::Ipm,
        n1: 64,
        n2: 65,
        fd_order: 4,
        cfl: 0.5,
        t_end: 2.0,
        sample_dt: 0.01,
        ic_shape: IcShape::Sine { kx: 1 },
        ic_epsilon: 0.01,
        rho_s: RhoSpec::Linear,
        dealias: true,
        max_linf: 1.0,
        nan_abort: true,
        sobolev_k: 3,
        experimental_general_rhos: false,
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(Error::Config(format!("cannot parse `{other}` as bool for `{key}`"))),
    }
}

/// Apply one `key = value` assignment.
pub fn apply(cfg: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    match key.trim() {
        "model" => cfg.model = value.parse()?,
        "n1" => cfg.n1 = parse(key, value)?,
        "n2" => cfg.n2 = parse(key, value)?,
        "fd_order" => cfg.fd_order = parse(key, value)?,
        "cfl" => cfg.cfl = parse(key, value)?,
        "t_end" => cfg.t_end = parse(key, value)?,
        "sample_dt" => cfg.sample_dt = parse(key, value)?,
        "ic_shape" => {
            let v = value.trim();
            cfg.ic_shape = if v == "zero" {
                IcShape::Zero
            } else if v == "sine" {
                match cfg.ic_shape {
                    IcShape::Sine { kx } => IcShape::Sine { kx },
                    _ => IcShape::Sine { kx: 1 },
                }
            } else if let Some(rest) = v.strip_prefix("mode:") {
                let (k, m) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Config("ic_shape mode needs `mode:kx,m`".into()))?;
                IcShape::Mode { kx: parse("ic_shape", k)?, m: parse("ic_shape", m)? }
            } else {
                return Err(Error::Config(format!("unknown ic_shape `{v}`")));
            };
        }
        "ic_kx" => {
            let kx = parse(key, value)?;
            cfg.ic_shape = IcShape::Sine { kx };
        }
        "ic_epsilon" => cfg.ic_epsilon = parse(key, value)?,
        "rho_s" => {
            let v = value.trim();
            cfg.rho_s = if v == "linear" {
                RhoSpec::Linear
            } else if let Some(list) = v.strip_prefix("poly:") {
                let coeffs = list
                    .split(',')
                    .map(|c| parse("rho_s", c))
                    .collect::<Result<Vec<f64>>>()?;
                if coeffs.is_empty() {
                    return Err(Error::Config("rho_s poly needs coefficients".into()));
                }
                RhoSpec::Poly(coeffs)
            } else {
                return Err(Error::Config(format!("unknown rho_s `{v}`")));
            };
        }
        "dealias" => cfg.dealias = parse_bool(key, value)?,
        "max_linf" => cfg.max_linf = parse(key, value)?,
        "nan_abort" => cfg.nan_abort = parse_bool(key, value)?,
        "sobolev_k" => cfg.sobolev_k = parse(key, value)?,
        "experimental_general_rhos" => cfg.experimental_general_rhos = parse_bool(key, value)?,
        other => return Err(Error::Config(format!("unknown config key `{other}`"))),
    }
    Ok(())
}

/// Parse a whole config file on top of a base configuration.
pub fn parse_config(text: &str, mut base: RunConfig) -> Result<RunConfig> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        apply(&mut base, key, value)?;
    }
    base.validate()?;
    Ok(base)
}

/// Parse one `--set key=value` argument.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{arg}` must be key=value")))?;
    Ok((key.trim().to_string(), value.trim().to_string()))
}
