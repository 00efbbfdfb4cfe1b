use std::fs;
use std::path::Path;

use entcost::qcore::io::AnyStateFile;
use entcost::qcore::{ensemble_average, Repair};
use entcost::{Ensemble64, PureState64, QuantumState64};

use crate::report::CliError;

/// A validated input file.
#[derive(Debug, Clone)]
pub enum Loaded {
    Mixed(QuantumState64),
    Pure(PureState64),
    Ensemble(Ensemble64),
}

impl Loaded {
    pub fn density(&self) -> QuantumState64 {
        match self {
            Loaded::Mixed(rho) => rho.clone(),
            Loaded::Pure(psi) => psi.density(),
            Loaded::Ensemble(e) => ensemble_average(e),
        }
    }
}

/// Reads and validates a state, pure-state or ensemble file. PSD repairs are
/// logged; anything beyond the repair thresholds is an input error.
pub fn load_state(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let file: AnyStateFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "{}: not a state, pure-state or ensemble file: {e}",
            path.display()
        ))
    })?;
    let invalid = |e: entcost::Error| CliError::Input(format!("{}: {e}", path.display()));
    Ok(match file {
        AnyStateFile::Mixed(f) => {
            let (rho, repair) = f.to_state::<f64>().map_err(invalid)?;
            match repair {
                Repair::None => {}
                Repair::Clipped { min_eigenvalue } => log::info!(
                    "{}: clipped eigenvalue {min_eigenvalue:e} to zero",
                    path.display()
                ),
                Repair::Warned { min_eigenvalue } => log::warn!(
                    "{}: repaired negative eigenvalue {min_eigenvalue:e}",
                    path.display()
                ),
            }
            Loaded::Mixed(rho)
        }
        AnyStateFile::Pure(f) => Loaded::Pure(f.to_pure::<f64>().map_err(invalid)?),
        AnyStateFile::Ensemble(f) => Loaded::Ensemble(f.to_ensemble::<f64>().map_err(invalid)?),
    })
}
