//! File formats: headerless CSV for numeric arrays, JSON for specs.
//!
//! Tensors are stored as their mode-1 matricization (`d_1` rows) with a
//! sidecar `<name>.json` holding `{"shape": [d_1, …, d_K]}`. Group indices in
//! norm specs are 1-based.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dematricize, matricize, DenseMatrix, TensorShape};
use crate::norms::{
    chain_groups, k_support, latent_group_lasso, latent_nuclear, polyhedral, theta_norm, Block,
    BlockOperator, InnerNorm, InterpolationNorm, LpExponent, OuterNorm, OverlappedNuclear,
};
use crate::solver::{format_real, Loss, ProblemSpec};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "{}: row {}: not a number: {field:?}",
                        path.display(),
                        line + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: no rows", path.display())));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// A vector stored either as one column or as one row.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.cols() == 1 || m.rows() == 1 {
        Ok(m.into_data())
    } else {
        Err(Error::Parse(format!(
            "{}: expected a vector, found a {}x{} matrix",
            path.display(),
            m.rows(),
            m.cols()
        )))
    }
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|&x| format_real(x)))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One value per line.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let m = DenseMatrix::new(v.len(), 1, v.to_vec())?;
    write_matrix(path, &m)
}

#[derive(Debug, Serialize, Deserialize)]
struct ShapeSidecar {
    shape: TensorShape,
}

pub fn tensor_sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Reads a tensor if a shape sidecar exists next to `path`.
pub fn read_tensor(path: &Path) -> Result<(Vec<f64>, TensorShape)> {
    let side = tensor_sidecar(path);
    let text = std::fs::read_to_string(&side).map_err(|e| io_err(&side, e))?;
    let ShapeSidecar { shape } =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", side.display())))?;
    let m = read_matrix(path)?;
    if m.rows() != shape.dims()[0] || m.cols() != shape.complement(0) {
        return Err(Error::InvalidShape(format!(
            "{}: a {}x{} matricization does not fit shape {:?}",
            path.display(),
            m.rows(),
            m.cols(),
            shape.dims()
        )));
    }
    Ok((dematricize(&m, &shape, 0)?, shape))
}

pub fn write_tensor(path: &Path, tensor: &[f64], shape: &TensorShape) -> Result<()> {
    write_matrix(path, &matricize(tensor, shape, 0)?)?;
    let side = tensor_sidecar(path);
    let text = serde_json::to_string(&ShapeSidecar { shape: shape.clone() })?;
    std::fs::write(&side, text).map_err(|e| io_err(&side, e))
}

/// Inner exponent as written in JSON: `1`, `2`, or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    Number(f64),
    Name(String),
}

impl Default for PSpec {
    fn default() -> Self {
        PSpec::Number(2.0)
    }
}

impl PSpec {
    pub fn exponent(&self) -> Result<LpExponent> {
        match self {
            PSpec::Number(p) => LpExponent::from_f64(*p),
            PSpec::Name(s) if s.eq_ignore_ascii_case("inf") => Ok(LpExponent::Inf),
            PSpec::Name(s) => Err(Error::Parse(format!("unknown exponent {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub length: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterSpec {
    #[default]
    L1,
    L2,
    Inf,
}

impl From<OuterSpec> for OuterNorm {
    fn from(o: OuterSpec) -> Self {
        match o {
            OuterSpec::L1 => OuterNorm::L1,
            OuterSpec::L2 => OuterNorm::L2,
            OuterSpec::Inf => OuterNorm::Linf,
        }
    }
}

/// JSON description of a norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormSpec {
    /// Latent group lasso; give either explicit 1-based `groups` or a `chain`.
    Lgl {
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        groups: Option<Vec<Vec<usize>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chain: Option<ChainSpec>,
        #[serde(default)]
        p: PSpec,
        #[serde(default)]
        outer: OuterSpec,
    },
    Ksupport {
        d: usize,
        k: usize,
        #[serde(default)]
        p: PSpec,
    },
    Theta {
        vertices: Vec<Vec<f64>>,
    },
    Polyhedral {
        atoms: Vec<Vec<f64>>,
    },
    LatentNuclear {
        shape: TensorShape,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphas: Option<Vec<f64>>,
    },
    OverlappedNuclear {
        shape: TensorShape,
    },
}

/// A norm ready for evaluation.
#[derive(Debug, Clone)]
pub enum BuiltNorm {
    Interpolation(InterpolationNorm),
    /// Sum of nuclear norms of every matricization; no interpolation form.
    Overlapped(OverlappedNuclear, TensorShape),
}

impl BuiltNorm {
    pub fn dim(&self) -> usize {
        match self {
            BuiltNorm::Interpolation(n) => n.dim(),
            BuiltNorm::Overlapped(_, s) => s.numel(),
        }
    }

    pub fn tensor_shape(&self) -> Option<&TensorShape> {
        match self {
            BuiltNorm::Interpolation(_) => None,
            BuiltNorm::Overlapped(_, s) => Some(s),
        }
    }
}

fn zero_based(groups: &[Vec<usize>], d: usize) -> Result<Vec<Vec<usize>>> {
    groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|&i| {
                    if i == 0 || i > d {
                        Err(Error::InvalidGroups(format!("index {i} outside 1..={d}")))
                    } else {
                        Ok(i - 1)
                    }
                })
                .collect()
        })
        .collect()
}

impl NormSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Tensor shape for norms defined on tensors.
    pub fn tensor_shape(&self) -> Option<&TensorShape> {
        match self {
            NormSpec::LatentNuclear { shape, .. } | NormSpec::OverlappedNuclear { shape } => Some(shape),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<BuiltNorm> {
        let norm = match self {
            NormSpec::Lgl {
                d,
                groups,
                chain,
                p,
                outer,
            } => {
                let groups = match (groups, chain) {
                    (Some(g), None) => zero_based(g, *d)?,
                    (None, Some(c)) => chain_groups(*d, c.length, c.overlap)?,
                    _ => {
                        return Err(Error::InvalidGroups(
                            "lgl needs exactly one of `groups` and `chain`".to_string(),
                        ))
                    }
                };
                let p = p.exponent()?;
                if *outer == OuterSpec::L1 {
                    latent_group_lasso(*d, &groups, p)?
                } else {
                    let inner = vec![InnerNorm::Lp(p); groups.len()];
                    let op = BlockOperator::new(*d, groups.into_iter().map(Block::group).collect())?;
                    InterpolationNorm::new(op, inner, (*outer).into())?
                }
            }
            NormSpec::Ksupport { d, k, p } => k_support(*d, *k, p.exponent()?)?,
            NormSpec::Theta { vertices } => theta_norm(vertices)?,
            NormSpec::Polyhedral { atoms } => polyhedral(atoms)?,
            NormSpec::LatentNuclear { shape, alphas } => {
                let alphas = alphas.clone().unwrap_or_else(|| vec![1.0; shape.order()]);
                latent_nuclear(shape, &alphas)?
            }
            NormSpec::OverlappedNuclear { shape } => {
                return Ok(BuiltNorm::Overlapped(
                    OverlappedNuclear::new(shape.clone())?,
                    shape.clone(),
                ))
            }
        };
        Ok(BuiltNorm::Interpolation(norm))
    }
}

/// Either an inline norm spec or a path to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormRef {
    Path(PathBuf),
    Inline(NormSpec),
}

/// JSON description of a problem; relative paths resolve against the
/// directory of the problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Design matrix CSV, `n × d`.
    pub data: PathBuf,
    /// Targets CSV, length `n`.
    pub targets: PathBuf,
    pub loss: Loss,
    pub lambda: f64,
    pub norm: NormRef,
}

/// A loaded problem and the files it was read from.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: ProblemSpec,
    pub inputs: Vec<PathBuf>,
}

impl ProblemFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn load(&self, base: &Path) -> Result<LoadedProblem> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let data_path = resolve(&self.data);
        let target_path = resolve(&self.targets);
        let mut inputs = vec![data_path.clone(), target_path.clone()];
        let spec = match &self.norm {
            NormRef::Inline(s) => s.clone(),
            NormRef::Path(p) => {
                let p = resolve(p);
                let s = NormSpec::from_path(&p)?;
                inputs.push(p);
                s
            }
        };
        let BuiltNorm::Interpolation(norm) = spec.build()? else {
            return Err(Error::Unsupported(
                "the overlapped nuclear norm has no block decomposition to solve over".to_string(),
            ));
        };
        let a = read_matrix(&data_path)?;
        let targets = read_vector(&target_path)?;
        let problem = ProblemSpec::new(a, targets, self.loss, self.lambda, norm)?;
        Ok(LoadedProblem { problem, inputs })
    }
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem> {
    let file = ProblemFile::from_path(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut loaded = file.load(base)?;
    loaded.inputs.insert(0, path.to_path_buf());
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DenseMatrix::from_rows(&[vec![1.0, -2.5], vec![1e-300, 1.0 / 3.0]]).unwrap();
        write_matrix(&path, &m).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), m);
        std::fs::write(&path, "1, 2\n3, x\n").unwrap();
        let err = read_matrix(&path).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
    }

    #[test]
    fn vectors_as_row_or_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        std::fs::write(&path, "1,2,3\n").unwrap();
        assert_eq!(read_vector(&path).unwrap(), vec![1.0, 2.0, 3.0]);
        write_vector(&path, &[4.0, 5.0]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "4.0\n5.0\n");
        assert_eq!(read_vector(&path).unwrap(), vec![4.0, 5.0]);
    }

    #[test]
    fn tensor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let shape = TensorShape::new(vec![2, 3, 4]).unwrap();
        let t: Vec<f64> = (0..24).map(|i| i as f64).collect();
        write_tensor(&path, &t, &shape).unwrap();
        assert_eq!(read_matrix(&path).unwrap().rows(), 2);
        let (back, s) = read_tensor(&path).unwrap();
        assert_eq!((back, s), (t, shape));
    }

    #[test]
    fn norm_specs_parse() {
        let s: NormSpec =
            serde_json::from_str(r#"{"type":"lgl","d":3,"groups":[[1,2],[2,3]],"p":"inf"}"#).unwrap();
        let BuiltNorm::Interpolation(n) = s.build().unwrap() else {
            panic!()
        };
        assert_eq!(n.num_blocks(), 2);
        let s: NormSpec =
            serde_json::from_str(r#"{"type":"lgl","d":200,"chain":{"length":10,"overlap":3}}"#).unwrap();
        let BuiltNorm::Interpolation(n) = s.build().unwrap() else {
            panic!()
        };
        assert_eq!(n.num_blocks(), 28);
        let s: NormSpec = serde_json::from_str(r#"{"type":"ksupport","d":15,"k":3}"#).unwrap();
        let BuiltNorm::Interpolation(n) = s.build().unwrap() else {
            panic!()
        };
        assert_eq!(n.num_blocks(), 455);
        let s: NormSpec = serde_json::from_str(r#"{"type":"overlapped_nuclear","shape":[2,3,4]}"#).unwrap();
        assert_eq!(s.build().unwrap().dim(), 24);
        let s: NormSpec =
            serde_json::from_str(r#"{"type":"lgl","d":2,"groups":[[1],[2]],"outer":"inf"}"#).unwrap();
        let BuiltNorm::Interpolation(n) = s.build().unwrap() else {
            panic!()
        };
        assert_eq!(n.outer(), OuterNorm::Linf);
    }

    #[test]
    fn bad_norm_specs() {
        let zero: NormSpec = serde_json::from_str(r#"{"type":"lgl","d":3,"groups":[[0,1]]}"#).unwrap();
        assert!(matches!(zero.build(), Err(Error::InvalidGroups(_))));
        let both: NormSpec = serde_json::from_str(
            r#"{"type":"lgl","d":3,"groups":[[1,2,3]],"chain":{"length":2,"overlap":1}}"#,
        )
        .unwrap();
        assert!(both.build().is_err());
        assert!(serde_json::from_str::<NormSpec>(r#"{"type":"lgl","d":3,"bogus":1}"#).is_err());
        assert!(serde_json::from_str::<NormSpec>(r#"{"type":"spline"}"#).is_err());
    }

    #[test]
    fn problem_file_loads_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        write_matrix(&dir.path().join("A.csv"), &DenseMatrix::identity(2)).unwrap();
        write_vector(&dir.path().join("b.csv"), &[1.0, -1.0]).unwrap();
        std::fs::write(
            dir.path().join("norm.json"),
            r#"{"type":"lgl","d":2,"groups":[[1],[2]]}"#,
        )
        .unwrap();
        let path = dir.path().join("problem.json");
        std::fs::write(
            &path,
            r#"{"data":"A.csv","targets":"b.csv","loss":"hinge","lambda":0.5,"norm":"norm.json"}"#,
        )
        .unwrap();
        let loaded = load_problem(&path).unwrap();
        assert_eq!(loaded.inputs.len(), 4);
        assert_eq!(loaded.problem.n(), 2);
        assert_eq!(loaded.problem.loss(), Loss::Hinge);
    }
}
