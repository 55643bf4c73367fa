//! Flat key-value parameter files.
//!
//! Fitted parameters round-trip through plain text with 17 significant
//! digits, enough to reproduce the binary float exactly:
//!
//! ```text
//! family = t-vol
//! mu = 2.9517786595372045e-1
//! ...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use igasc::garch::GarchTheta;
use igasc::mv::{CorrMatrix, MvTheta};
use igasc::obs::{Family, Theta};
use igasc::state::ArSpec;

/// Any parameter set the CLI can carry between subcommands.
#[derive(Debug, Clone)]
pub enum ParamFile {
    Univariate { family: Family, theta: Theta },
    Multivariate { theta: MvTheta },
    Garch { theta: GarchTheta },
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

impl ParamFile {
    pub fn family_label(&self) -> String {
        match self {
            ParamFile::Univariate { family, .. } => family.label().to_string(),
            ParamFile::Multivariate { .. } => "mv-gauss-vol".to_string(),
            ParamFile::Garch { theta } => if theta.nu.is_some() {
                "garch-t"
            } else {
                "garch"
            }
            .to_string(),
        }
    }

    /// Serialize, optionally recording the fit-time log-likelihood.
    pub fn to_text(&self, loglik: Option<f64>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family = {}", self.family_label());
        match self {
            ParamFile::Univariate { family, theta } => {
                let ar = theta.state.as_ar().expect("AR(1) parameter files");
                let _ = writeln!(s, "mu = {}", fmt(ar.mu));
                let _ = writeln!(s, "phi = {}", fmt(ar.phi));
                let _ = writeln!(s, "psi = {}", fmt(ar.psi));
                if let (Some(name), Some(shape)) = (family.shape_name(), theta.shape) {
                    let _ = writeln!(s, "{name} = {}", fmt(shape));
                }
                let _ = writeln!(s, "offset = {}", fmt(theta.offset));
            }
            ParamFile::Multivariate { theta } => {
                let n = theta.dim();
                let _ = writeln!(s, "n_series = {n}");
                for (i, spec) in theta.series.iter().enumerate() {
                    let _ = writeln!(s, "mu_{} = {}", i + 1, fmt(spec.mu));
                    let _ = writeln!(s, "phi_{} = {}", i + 1, fmt(spec.phi));
                    let _ = writeln!(s, "psi_{} = {}", i + 1, fmt(spec.psi));
                }
                for i in 1..n {
                    for j in 0..i {
                        let _ =
                            writeln!(s, "rho_{}_{} = {}", i + 1, j + 1, fmt(theta.corr.get(i, j)));
                    }
                }
                let _ = writeln!(s, "offset = {}", fmt(theta.offset));
            }
            ParamFile::Garch { theta } => {
                let _ = writeln!(s, "omega = {}", fmt(theta.omega));
                let _ = writeln!(s, "alpha = {}", fmt(theta.alpha));
                let _ = writeln!(s, "beta = {}", fmt(theta.beta));
                if let Some(nu) = theta.nu {
                    let _ = writeln!(s, "nu = {}", fmt(nu));
                }
            }
        }
        if let Some(ll) = loglik {
            let _ = writeln!(s, "loglik = {}", fmt(ll));
        }
        s
    }

    pub fn parse(text: &str) -> Result<ParamFile> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected 'key = value'", lineno + 1))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let family = map
            .remove("family")
            .context("parameter file is missing 'family'")?;
        let get = |map: &BTreeMap<String, String>, key: &str| -> Result<f64> {
            map.get(key)
                .with_context(|| format!("missing '{key}'"))?
                .parse::<f64>()
                .with_context(|| format!("cannot parse '{key}'"))
        };
        match family.as_str() {
            "gauss-vol" | "t-vol" | "exp-dur" | "weibull-dur" => {
                let fam: Family = family.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
                let mut theta = Theta {
                    state: igasc::state::StateSpec::ar(
                        get(&map, "mu")?,
                        get(&map, "phi")?,
                        get(&map, "psi")?,
                    )
                    .map_err(|e| anyhow::anyhow!("{e}"))?,
                    shape: None,
                    offset: get(&map, "offset").unwrap_or(igasc::obs::DEFAULT_OFFSET),
                };
                if let Some(name) = fam.shape_name() {
                    theta.shape = Some(get(&map, name)?);
                }
                Ok(ParamFile::Univariate { family: fam, theta })
            }
            "mv-gauss-vol" => {
                let n: usize = map
                    .get("n_series")
                    .context("missing 'n_series'")?
                    .parse()
                    .context("cannot parse 'n_series'")?;
                let mut series = Vec::with_capacity(n);
                for i in 1..=n {
                    series.push(
                        ArSpec::new(
                            get(&map, &format!("mu_{i}"))?,
                            get(&map, &format!("phi_{i}"))?,
                            get(&map, &format!("psi_{i}"))?,
                        )
                        .map_err(|e| anyhow::anyhow!("{e}"))?,
                    );
                }
                let mut values = vec![0.0; n * n];
                for i in 0..n {
                    values[i * n + i] = 1.0;
                    for j in 0..i {
                        let rho = get(&map, &format!("rho_{}_{}", i + 1, j + 1))?;
                        values[i * n + j] = rho;
                        values[j * n + i] = rho;
                    }
                }
                let corr = CorrMatrix::new(n, values).map_err(|e| anyhow::anyhow!("{e}"))?;
                let offset = get(&map, "offset").unwrap_or(igasc::obs::DEFAULT_OFFSET);
                let theta = MvTheta::new(series, corr)
                    .map_err(|e| anyhow::anyhow!("{e}"))?
                    .with_offset(offset);
                Ok(ParamFile::Multivariate { theta })
            }
            "garch" | "garch-t" => {
                let nu = if family == "garch-t" {
                    Some(get(&map, "nu")?)
                } else {
                    None
                };
                let theta = GarchTheta::new(
                    get(&map, "omega")?,
                    get(&map, "alpha")?,
                    get(&map, "beta")?,
                    nu,
                )
                .map_err(|e| anyhow::anyhow!("{e}"))?;
                Ok(ParamFile::Garch { theta })
            }
            other => bail!("unknown family '{other}' in parameter file"),
        }
    }
}
