//! Dataset acquisition, embedding and kernel construction for the commands.

use std::collections::BTreeMap;
use std::path::Path;

use kernelscope::data::{
    content_hash, gen_quantum_dataset, EngineeredDataset, load_fashion_mnist_dir, pca_standardize, subsample, Dataset, DRESS, SHIRT,
};
use kernelscope::kernels::{
    classical_gamma_grid, normalize_trace, projected_linear_gram, shadow_gram, GramMatrix, KernelId,
    PauliFeatures, Provenance,
};
use kernelscope::pipeline::{classical_suite, fidelity_normalized, pauli_features, projected_gram, synthetic_inputs};
use kernelscope::rng::{derive_seed, stream};
use kernelscope::shadows::{collect, ShadowSet};
use kernelscope::statevec::MAX_QUBITS;
use kernelscope::{ClassicalKernel, EmbeddingSpec, StateVector};
use rayon::prelude::*;

use crate::args::{Common, ShadowArgs};
use crate::report::{usage, CliResult};

pub const DEFAULT_QUANTUM: [&str; 2] = ["fidelity", "projected_gaussian"];

/// Named seeds, all derived from `--seed`.
pub fn seeds(base: u64) -> BTreeMap<String, u64> {
    let mut s: BTreeMap<String, u64> = ["inputs", "e3_haar", "qnn", "shadows", "noise"]
        .iter()
        .map(|tag| (tag.to_string(), derive_seed(base, tag, 0)))
        .collect();
    for tag in ["subsample", "split", "cv"] {
        s.insert(tag.to_string(), base);
    }
    s
}

pub struct Inputs {
    pub ds: Dataset,
    /// True when `ds.y` are QNN expectations.
    pub qnn_labels: bool,
    pub dataset_hash: Option<String>,
}

/// Plain dataset CSV, or an engineered export read with its binary labels.
pub fn read_csv(path: &Path) -> CliResult<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| kernelscope::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let engineered = text.lines().next().is_some_and(|h| h.trim_end().ends_with(",y_real,y_class"));
    Ok(if engineered {
        EngineeredDataset::read(path)?.classification()
    } else {
        Dataset::read(path)?
    })
}

/// Default qubit count: the CSV feature count, otherwise 4.
pub fn resolve_n(common: &Common) -> CliResult<usize> {
    if let Some(n) = common.n {
        return Ok(n);
    }
    match &common.dataset {
        Some(p) if p.is_file() => {
            let ds = read_csv(p)?;
            Ok(ds.n_features().min(MAX_QUBITS - 1))
        }
        _ => Ok(4),
    }
}

fn reduce(ds: Dataset, n: usize, n_points: Option<usize>, seed: u64) -> CliResult<Dataset> {
    let ds = match ds.n_features() {
        d if d == n => ds,
        d if d > n => {
            let (_, x) = pca_standardize(&ds.x, n)?;
            let mut meta = ds.meta.clone();
            meta.params.insert("pca_components".into(), n.into());
            Dataset::new(x, ds.y, meta)?
        }
        d => return Err(usage(format!("dataset has {d} features, fewer than --n {n}"))),
    };
    match n_points {
        Some(count) => Ok(subsample(&ds, count, seed)?),
        None => Ok(ds),
    }
}

/// Load or synthesize `n_points` inputs of dimension `n`. Without a dataset
/// the inputs are standard normal and labeled by a random QNN.
pub fn load(common: &Common, spec: &EmbeddingSpec, n_points: usize, explicit_n_points: bool, relabel: bool) -> CliResult<Inputs> {
    let s = seeds(common.seed);
    let n = spec.n;
    let (ds, hash) = match &common.dataset {
        None => {
            let x = synthetic_inputs(n_points, n, s["inputs"])?;
            return Ok(Inputs {
                ds: gen_quantum_dataset(&x, spec, s["qnn"])?,
                qnn_labels: true,
                dataset_hash: None,
            });
        }
        Some(dir) if dir.is_dir() => {
            let images = load_fashion_mnist_dir(dir, "train")?;
            let raw = images.binary_task(DRESS, SHIRT);
            (reduce(raw, n, Some(n_points), s["subsample"])?, None)
        }
        Some(path) => {
            let raw = read_csv(path)?;
            let bytes = std::fs::read(path).map_err(|e| kernelscope::Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            let count = if explicit_n_points { n_points } else { n_points.min(raw.len()) };
            (reduce(raw, n, Some(count), s["subsample"])?, Some(content_hash(&bytes)))
        }
    };
    if relabel {
        let mut q = gen_quantum_dataset(&ds.x, spec, s["qnn"])?;
        q.meta.source = ds.meta.source.clone();
        q.meta.source_indices = ds.meta.source_indices.clone();
        return Ok(Inputs {
            ds: q,
            qnn_labels: true,
            dataset_hash: hash,
        });
    }
    Ok(Inputs {
        ds,
        qnn_labels: false,
        dataset_hash: hash,
    })
}

pub fn embedding_spec(common: &Common, n: usize) -> CliResult<EmbeddingSpec> {
    let spec = EmbeddingSpec::new(common.embedding, n, seeds(common.seed)["e3_haar"]);
    spec.validate()?;
    Ok(spec)
}

pub struct Embedded {
    pub states: Vec<StateVector>,
    pub features: Vec<PauliFeatures>,
}

pub fn embed(spec: &EmbeddingSpec, x: &[Vec<f64>]) -> CliResult<Embedded> {
    let states = spec.embed_all(x)?;
    let features = pauli_features(&states);
    Ok(Embedded { states, features })
}

pub fn parse_kernels(names: &[String]) -> CliResult<(Vec<KernelId>, Vec<KernelId>)> {
    let mut quantum = Vec::new();
    let mut classical = Vec::new();
    for name in names {
        let id: KernelId = name.trim().parse()?;
        match id {
            KernelId::Linear | KernelId::Rbf => classical.push(id),
            k if k.is_quantum() => quantum.push(id),
            k => return Err(usage(format!("kernel '{k}' is not available in this command"))),
        }
    }
    Ok((quantum, classical))
}

pub fn shadow_sets(states: &[StateVector], n_s: usize, seed: u64) -> CliResult<Vec<ShadowSet>> {
    if n_s < 2 {
        return Err(usage("--shadows must be at least 2"));
    }
    Ok(states
        .par_iter()
        .enumerate()
        .map(|(i, s)| collect(s, n_s, &mut stream(seed, "shadow-records", i as u64), seed))
        .collect::<kernelscope::Result<_>>()?)
}

pub fn quantum_gram(id: KernelId, emb: &Embedded, shadow: &ShadowArgs, seed: u64) -> CliResult<GramMatrix> {
    Ok(match id {
        KernelId::Fidelity => fidelity_normalized(&emb.states)?,
        KernelId::ProjectedGaussian => projected_gram(&emb.features, None)?,
        KernelId::ProjectedLinear => normalize_trace(&projected_linear_gram(&emb.features)?)?,
        KernelId::Shadow => {
            let sets = shadow_sets(&emb.states, shadow.shadows, seeds(seed)["shadows"])?;
            normalize_trace(&shadow_gram(&sets, shadow.shadow_gamma)?)?
        }
        other => return Err(usage(format!("'{other}' is not a quantum kernel"))),
    })
}

/// Classical Grams: linear and/or RBF over the γ grid. An empty selection
/// means the full default suite.
pub fn classical_grams(ids: &[KernelId], x: &[Vec<f64>], gammas: Option<&[f64]>) -> CliResult<Vec<GramMatrix>> {
    let suite = classical_suite(x, gammas)?;
    if ids.is_empty() {
        return Ok(suite);
    }
    Ok(suite.into_iter().filter(|k| ids.contains(&k.kernel)).collect())
}

pub fn rbf_gammas(x: &[Vec<f64>], gammas: Option<&[f64]>) -> CliResult<Vec<f64>> {
    Ok(match gammas {
        Some(g) => g.to_vec(),
        None => classical_gamma_grid(x)?,
    })
}

pub fn classical_kernel(id: KernelId, gamma: f64) -> ClassicalKernel {
    match id {
        KernelId::Rbf => ClassicalKernel::Rbf { gamma },
        _ => ClassicalKernel::Linear,
    }
}

pub fn provenance(hash: &Option<String>, seeds: &BTreeMap<String, u64>) -> Provenance {
    Provenance {
        dataset_hash: hash.clone(),
        seeds: seeds.clone(),
    }
}

/// File-name-safe form of a kernel label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

pub fn default_train(n_points: usize) -> usize {
    n_points - (n_points / 4).min(200)
}
