//! On-disk model directories: a `manifest.json` plus one `CTEN1` file per
//! core, factor or weight vector.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{read_cten_file, write_cten_file, CMatrix, ComplexTensor};

use super::{CpdModel, TTModel};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "format")]
enum Manifest {
    #[serde(rename = "ttm1")]
    Tt { version: u32, ranks: Vec<usize>, dims: Vec<usize> },
    #[serde(rename = "cpd1")]
    Cpd {
        version: u32,
        #[serde(rename = "R")]
        r: usize,
        dims: Vec<usize>,
    },
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(m)?)?;
    Ok(())
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?)
}

pub fn save_tt(model: &TTModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_manifest(dir, &Manifest::Tt { version: 1, ranks: model.ranks(), dims: model.dims() })?;
    for (k, core) in model.cores().iter().enumerate() {
        write_cten_file(core, dir.join(format!("core_{k}.cten")))?;
    }
    Ok(())
}

pub fn load_tt(dir: impl AsRef<Path>) -> Result<TTModel> {
    let dir = dir.as_ref();
    let Manifest::Tt { version, ranks, dims } = read_manifest(dir)? else {
        return Err(Error::Format("manifest is not a TT model".into()));
    };
    if version != 1 || ranks.len() != dims.len() + 1 {
        return Err(Error::Format("inconsistent TT manifest".into()));
    }
    let cores = (0..dims.len())
        .map(|k| read_cten_file(dir.join(format!("core_{k}.cten"))))
        .collect::<Result<Vec<_>>>()?;
    let model = TTModel::new(cores)?;
    if model.ranks() != ranks || model.dims() != dims {
        return Err(Error::Format("cores disagree with the manifest".into()));
    }
    Ok(model)
}

pub fn save_cpd(model: &CpdModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_manifest(dir, &Manifest::Cpd { version: 1, r: model.rank(), dims: model.dims() })?;
    write_cten_file(&ComplexTensor::from_vector(model.weights().to_vec())?, dir.join("weights.cten"))?;
    for (k, f) in model.factors().iter().enumerate() {
        write_cten_file(&ComplexTensor::from_matrix(f), dir.join(format!("factor_{k}.cten")))?;
    }
    Ok(())
}

pub fn load_cpd(dir: impl AsRef<Path>) -> Result<CpdModel> {
    let dir = dir.as_ref();
    let Manifest::Cpd { version, r, dims } = read_manifest(dir)? else {
        return Err(Error::Format("manifest is not a CPD model".into()));
    };
    if version != 1 {
        return Err(Error::Format(format!("unsupported manifest version {version}")));
    }
    let weights = read_cten_file(dir.join("weights.cten"))?;
    if weights.dims() != [r] {
        return Err(Error::Format("weights disagree with the manifest".into()));
    }
    let mut factors = Vec::with_capacity(dims.len());
    for (k, &d) in dims.iter().enumerate() {
        let t = read_cten_file(dir.join(format!("factor_{k}.cten")))?;
        if t.dims() != [d, r] {
            return Err(Error::Format(format!("factor {k} disagrees with the manifest")));
        }
        factors.push(CMatrix::from_column_slice(d, r, t.data()));
    }
    CpdModel::new(weights.into_data(), factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_matrix, random_tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tt_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cores = vec![
            random_tensor(&mut rng, &[1, 3, 2]),
            random_tensor(&mut rng, &[2, 4, 2]),
            random_tensor(&mut rng, &[2, 2, 1]),
        ];
        let m = TTModel::new(cores).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_tt(&m, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(text.contains("\"format\": \"ttm1\""));
        assert_eq!(load_tt(dir.path()).unwrap(), m);
        assert!(load_cpd(dir.path()).is_err());
    }

    #[test]
    fn cpd_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = CpdModel::new(
            vec![crate::C64::new(1.0, 2.0), crate::C64::new(-0.5, 0.0)],
            vec![random_matrix(&mut rng, 3, 2), random_matrix(&mut rng, 4, 2)],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_cpd(&m, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(text.contains("\"R\": 2"));
        assert_eq!(load_cpd(dir.path()).unwrap(), m);
    }
}
