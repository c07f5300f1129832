//! Golden reference files: symbolic commutator expansions, Hermite
//! coefficients and decay regimes. All are exact or closed-form, so they are
//! regenerated bit-for-bit.

use std::collections::BTreeMap;
use std::path::Path;

use heatlab::analysis::predict_regime;
use heatlab::commutator::build_r_alpha;
use heatlab::profiles::hermite_1d_exact;
use heatlab::MultiIndex;
use serde::Serialize;

use crate::artifacts::{json_bytes, write_file};
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct HermiteEntry {
    k: u32,
    /// Coefficients of `H_k` from the constant term up.
    coefficients: Vec<String>,
}

#[derive(Serialize)]
struct RegimeEntry {
    n: usize,
    p: f64,
    level: u32,
    sigma: f64,
    regime: String,
    predicted_exponent: f64,
}

/// File name to contents.
pub fn generate() -> CliResult<BTreeMap<&'static str, Vec<u8>>> {
    let mut out = BTreeMap::new();

    let mut expansions = Vec::new();
    for (n, m) in [(1, 4), (2, 3)] {
        for a in MultiIndex::up_to(n, m).into_iter().filter(|a| !a.is_zero()) {
            expansions.push(build_r_alpha(&a).map_err(|e| CliError::from_heat("golden", e))?);
        }
    }
    out.insert("commutator_expansions.json", json_bytes(&expansions)?);

    let hermite: Vec<HermiteEntry> = (0..=10)
        .map(|k| HermiteEntry {
            k,
            coefficients: hermite_1d_exact(k).iter().map(|c| c.to_string()).collect(),
        })
        .collect();
    out.insert("hermite.json", json_bytes(&hermite)?);

    let mut regimes = Vec::new();
    for (n, ps) in [(1, vec![3.5, 4.0, 5.0, 6.0]), (2, vec![2.5, 3.0, 4.0])] {
        for p in ps {
            for level in 1..=4 {
                let r = predict_regime(level, n, p).map_err(|e| CliError::from_heat("golden", e))?;
                regimes.push(RegimeEntry {
                    n,
                    p,
                    level,
                    sigma: r.sigma,
                    regime: r.label(),
                    predicted_exponent: r.predicted_exponent(),
                });
            }
        }
    }
    out.insert("regimes.json", json_bytes(&regimes)?);
    Ok(out)
}

/// Write the golden files into `dir`; existing files are kept unless `force`.
pub fn write_golden(dir: &Path, force: bool) -> CliResult<Vec<String>> {
    let files = generate()?;
    if !force && files.keys().any(|f| dir.join(f).exists()) {
        return Err(CliError::GoldenLocked);
    }
    for (name, bytes) in &files {
        write_file(&dir.join(name), bytes)?;
    }
    Ok(files.keys().map(|s| s.to_string()).collect())
}
