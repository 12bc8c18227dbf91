//! The shipped corpus of published parameter sets.

use std::path::Path;

use super::specfile::{self, SpecFile};
use crate::error::{Error, Result};

/// Environment variable naming a directory that replaces the shipped corpus.
pub const DATA_ENV: &str = "NOISEPULSE_DATA";

const SHIPPED: &[(&str, &str)] = &[
    ("fig1-am-pi", include_str!("../../data/fig1-am-pi.toml")),
    ("fig2-am-pi2", include_str!("../../data/fig2-am-pi2.toml")),
    ("fig3-am-continuous-pi", include_str!("../../data/fig3-am-continuous-pi.toml")),
    ("fig4-am-continuous-pi2", include_str!("../../data/fig4-am-continuous-pi2.toml")),
    ("table2-fm1-pi", include_str!("../../data/table2-fm1-pi.toml")),
    ("table2-fm1-pi2", include_str!("../../data/table2-fm1-pi2.toml")),
    ("table3-fm2-pi", include_str!("../../data/table3-fm2-pi.toml")),
    ("table3-fm2-pi-quantum", include_str!("../../data/table3-fm2-pi-quantum.toml")),
    ("table4-fm2-pi2", include_str!("../../data/table4-fm2-pi2.toml")),
    ("table4-fm2-pi2-quantum", include_str!("../../data/table4-fm2-pi2-quantum.toml")),
    ("table5-amfm1-pi", include_str!("../../data/table5-amfm1-pi.toml")),
    ("table5-amfm1-pi2", include_str!("../../data/table5-amfm1-pi2.toml")),
    ("table6-amfm2-pi", include_str!("../../data/table6-amfm2-pi.toml")),
    ("table6-amfm2-pi2", include_str!("../../data/table6-amfm2-pi2.toml")),
    ("table7-general2-pi", include_str!("../../data/table7-general2-pi.toml")),
    ("table7-general2-pi2", include_str!("../../data/table7-general2-pi2.toml")),
    ("table8-amfm1-pi-ts0.001", include_str!("../../data/table8-amfm1-pi-ts0.001.toml")),
    ("table8-amfm1-pi-ts0.01", include_str!("../../data/table8-amfm1-pi-ts0.01.toml")),
    ("table9-amfm2-pi-ts0.01", include_str!("../../data/table9-amfm2-pi-ts0.01.toml")),
    ("table9-amfm2-pi-ts0.1", include_str!("../../data/table9-amfm2-pi-ts0.1.toml")),
    ("unshaped-pi", include_str!("../../data/unshaped-pi.toml")),
];

/// Parsed shipped corpus, in name order.
pub fn shipped() -> Vec<(String, SpecFile)> {
    SHIPPED
        .iter()
        .map(|(n, text)| {
            let f = specfile::parse(text).unwrap_or_else(|e| panic!("shipped spec {n} is invalid: {e}"));
            (n.to_string(), f)
        })
        .collect()
}

/// Every `*.toml` spec in `dir`, in name order.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, SpecFile)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let f = specfile::read(&p).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", p.display()) },
                other => other,
            })?;
            Ok((name, f))
        })
        .collect()
}

/// The corpus from `NOISEPULSE_DATA` when set, otherwise the shipped one.
pub fn load() -> Result<Vec<(String, SpecFile)>> {
    match std::env::var_os(DATA_ENV) {
        Some(dir) => load_dir(Path::new(&dir)),
        None => Ok(shipped()),
    }
}

/// Looks up an entry by exact name.
pub fn find(name: &str) -> Result<SpecFile> {
    load()?
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, f)| f)
        .ok_or_else(|| Error::InvalidParameter(format!("no catalog entry named `{name}`")))
}
