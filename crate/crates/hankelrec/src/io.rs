//! On-disk formats for signals, sample sets, solver results, and
//! multi-dimensional signals.
//!
//! Everything is JSON except large multi-dimensional signals, which switch to
//! a one-line JSON header followed by raw little-endian `f64` pairs once they
//! exceed [`ND_JSON_ENTRY_LIMIT`] entries; a desk-size volume stays readable
//! in a text editor while a full-size one loads without megabytes of float
//! parsing.  Loaders validate semantic consistency (lengths, index bounds,
//! finiteness) and report violations as [`Error::Format`], keeping serde
//! errors for actual syntax problems.

use crate::error::{Error, Result};
use crate::nd::{NdMode, NdSignal};
use crate::signal::{Mode, SampleSet, SpectralSignal};
use crate::solver::SolveResult;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Multi-dimensional signals with at most this many entries are written as
/// plain JSON; larger ones get the binary payload.
pub const ND_JSON_ENTRY_LIMIT: usize = 4096;

#[derive(Serialize, Deserialize)]
struct ModeDto {
    f: f64,
    tau: f64,
    d_re: f64,
    d_im: f64,
}

#[derive(Serialize, Deserialize)]
struct SignalDto {
    n: usize,
    modes: Vec<ModeDto>,
    samples: Vec<(f64, f64)>,
}

/// Writes a one-dimensional signal with its generating modes.
pub fn save_signal(path: &Path, sig: &SpectralSignal) -> Result<()> {
    let dto = SignalDto {
        n: sig.n,
        modes: sig
            .modes
            .iter()
            .map(|m| ModeDto {
                f: m.freq,
                tau: m.damping,
                d_re: m.amplitude.re,
                d_im: m.amplitude.im,
            })
            .collect(),
        samples: sig.samples.iter().map(|c| (c.re, c.im)).collect(),
    };
    fs::write(path, serde_json::to_vec_pretty(&dto)?)?;
    Ok(())
}

/// Reads a signal written by [`save_signal`]; stored samples are taken as-is,
/// not re-evaluated from the modes.
pub fn load_signal(path: &Path) -> Result<SpectralSignal> {
    let dto: SignalDto = serde_json::from_slice(&fs::read(path)?)?;
    if dto.n == 0 {
        return Err(Error::Format("signal length must be positive".into()));
    }
    if dto.samples.len() != dto.n {
        return Err(Error::Format(format!(
            "signal declares n = {} but carries {} samples",
            dto.n,
            dto.samples.len()
        )));
    }
    if dto.modes.is_empty() {
        return Err(Error::Format("signal carries no modes".into()));
    }
    let mut modes = Vec::with_capacity(dto.modes.len());
    for (k, m) in dto.modes.iter().enumerate() {
        let finite =
            m.f.is_finite() && m.tau.is_finite() && m.d_re.is_finite() && m.d_im.is_finite();
        if !finite || m.tau < 0.0 {
            return Err(Error::Format(format!("mode {k} has invalid parameters")));
        }
        modes.push(Mode {
            freq: m.f,
            damping: m.tau,
            amplitude: Complex64::new(m.d_re, m.d_im),
        });
    }
    let samples = dto
        .samples
        .iter()
        .map(|&(re, im)| Complex64::new(re, im))
        .collect();
    Ok(SpectralSignal {
        n: dto.n,
        modes,
        samples,
    })
}

#[derive(Serialize, Deserialize)]
struct SampleSetDto {
    n: usize,
    mode: String,
    indices: Vec<usize>,
}

/// Writes an observation set.
pub fn save_sample_set(path: &Path, set: &SampleSet) -> Result<()> {
    let dto = SampleSetDto {
        n: set.n,
        mode: if set.with_replacement { "with" } else { "without" }.into(),
        indices: set.indices.clone(),
    };
    fs::write(path, serde_json::to_vec_pretty(&dto)?)?;
    Ok(())
}

/// Reads an observation set, revalidating bounds and the duplicate rule.
pub fn load_sample_set(path: &Path) -> Result<SampleSet> {
    let dto: SampleSetDto = serde_json::from_slice(&fs::read(path)?)?;
    let with_replacement = match dto.mode.as_str() {
        "with" => true,
        "without" => false,
        other => {
            return Err(Error::Format(format!(
                "sampling mode must be \"with\" or \"without\", got \"{other}\""
            )))
        }
    };
    SampleSet::new(dto.n, dto.indices, with_replacement)
        .map_err(|e| Error::Format(format!("invalid sample set: {e}")))
}

/// Writes a solver result, trace included.
pub fn save_result(path: &Path, res: &SolveResult) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(res)?)?;
    Ok(())
}

pub fn load_result(path: &Path) -> Result<SolveResult> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[derive(Serialize, Deserialize)]
struct NdModeDto {
    f: Vec<f64>,
    tau: Vec<f64>,
    d_re: f64,
    d_im: f64,
}

#[derive(Serialize, Deserialize)]
struct NdSignalDto {
    dims: Vec<usize>,
    modes: Vec<NdModeDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    payload_len: Option<usize>,
}

fn nd_mode_dtos(sig: &NdSignal) -> Vec<NdModeDto> {
    sig.modes
        .iter()
        .map(|m| NdModeDto {
            f: m.freqs.clone(),
            tau: m.dampings.clone(),
            d_re: m.amplitude.re,
            d_im: m.amplitude.im,
        })
        .collect()
}

/// Writes a multi-dimensional signal; the entry payload goes binary past
/// [`ND_JSON_ENTRY_LIMIT`] entries.
pub fn save_nd_signal(path: &Path, sig: &NdSignal) -> Result<()> {
    if sig.entries.len() <= ND_JSON_ENTRY_LIMIT {
        let dto = NdSignalDto {
            dims: sig.dims.clone(),
            modes: nd_mode_dtos(sig),
            entries: Some(sig.entries.iter().map(|c| (c.re, c.im)).collect()),
            payload_len: None,
        };
        fs::write(path, serde_json::to_vec_pretty(&dto)?)?;
        return Ok(());
    }
    let header = NdSignalDto {
        dims: sig.dims.clone(),
        modes: nd_mode_dtos(sig),
        entries: None,
        payload_len: Some(sig.entries.len()),
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    bytes.reserve(16 * sig.entries.len());
    for e in &sig.entries {
        bytes.extend_from_slice(&e.re.to_le_bytes());
        bytes.extend_from_slice(&e.im.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads either flavor written by [`save_nd_signal`].
pub fn load_nd_signal(path: &Path) -> Result<NdSignal> {
    let bytes = fs::read(path)?;
    // The binary flavor has exactly one newline separating the header from
    // the payload; the JSON flavor parses whole.
    let (dto, payload): (NdSignalDto, &[u8]) =
        match serde_json::from_slice::<NdSignalDto>(&bytes) {
            Ok(dto) => (dto, &[][..]),
            Err(_) => {
                let split = bytes
                    .iter()
                    .position(|&b| b == b'\n')
                    .ok_or_else(|| Error::Format("unrecognized signal file".into()))?;
                let dto = serde_json::from_slice(&bytes[..split])?;
                (dto, &bytes[split + 1..])
            }
        };
    if dto.dims.is_empty() || dto.dims.iter().any(|&d| d == 0) {
        return Err(Error::Format("dimensions must be non-empty and positive".into()));
    }
    let total: usize = dto.dims.iter().product();
    let entries: Vec<Complex64> = match (&dto.entries, dto.payload_len) {
        (Some(list), None) => list.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
        (None, Some(len)) => {
            if payload.len() != 16 * len {
                return Err(Error::Format(format!(
                    "payload declares {len} entries ({} bytes) but carries {}",
                    16 * len,
                    payload.len()
                )));
            }
            payload
                .chunks_exact(16)
                .map(|chunk| {
                    let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
                    let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
                    Complex64::new(re, im)
                })
                .collect()
        }
        _ => {
            return Err(Error::Format(
                "signal must carry either inline entries or a payload length".into(),
            ))
        }
    };
    if entries.len() != total {
        return Err(Error::Format(format!(
            "dimensions {:?} imply {total} entries, file carries {}",
            dto.dims,
            entries.len()
        )));
    }
    let mut modes = Vec::with_capacity(dto.modes.len());
    for (k, m) in dto.modes.iter().enumerate() {
        if m.f.len() != dto.dims.len() || m.tau.len() != dto.dims.len() {
            return Err(Error::Format(format!(
                "mode {k} must carry one frequency and damping per axis"
            )));
        }
        let finite = m.f.iter().chain(&m.tau).all(|x| x.is_finite())
            && m.d_re.is_finite()
            && m.d_im.is_finite();
        if !finite || m.tau.iter().any(|&t| t < 0.0) {
            return Err(Error::Format(format!("mode {k} has invalid parameters")));
        }
        modes.push(NdMode {
            freqs: m.f.clone(),
            dampings: m.tau.clone(),
            amplitude: Complex64::new(m.d_re, m.d_im),
        });
    }
    if modes.is_empty() {
        return Err(Error::Format("signal carries no modes".into()));
    }
    Ok(NdSignal {
        dims: dto.dims,
        modes,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nd::{generate_nd_signal, NdSignalGenConfig};
    use crate::signal::{generate_signal, sample_indices, SignalGenConfig};
    use crate::solver::{fiht_solve, SolverConfig};
    use crate::hankel::{make_shape, project_samples};

    fn bits(v: &[Complex64]) -> Vec<(u64, u64)> {
        v.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect()
    }

    #[test]
    fn signal_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.json");
        let sig = generate_signal(&SignalGenConfig::new(64, 4, 7)).unwrap();
        save_signal(&path, &sig).unwrap();
        let back = load_signal(&path).unwrap();
        assert_eq!(back.n, sig.n);
        assert_eq!(back.modes, sig.modes);
        assert_eq!(bits(&back.samples), bits(&sig.samples));
    }

    #[test]
    fn signal_loader_rejects_inconsistent_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"n": 4, "modes": [{"f": 0.1, "tau": 0.0, "d_re": 1.0, "d_im": 0.0}],
                "samples": [[1.0, 0.0], [0.0, 1.0]]}"#,
        )
        .unwrap();
        match load_signal(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("samples")),
            other => panic!("expected Format error, got {other:?}"),
        }
        std::fs::write(
            &path,
            r#"{"n": 2, "modes": [{"f": 0.1, "tau": -1.0, "d_re": 1.0, "d_im": 0.0}],
                "samples": [[1.0, 0.0], [0.0, 1.0]]}"#,
        )
        .unwrap();
        assert!(matches!(load_signal(&path), Err(Error::Format(_))));
        assert!(matches!(
            load_signal(&dir.path().join("missing.json")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn sample_set_roundtrip_preserves_mode_and_indices() {
        let dir = tempfile::tempdir().unwrap();
        for with in [false, true] {
            let path = dir.path().join(format!("omega-{with}.json"));
            let set = sample_indices(50, 20, with, 3).unwrap();
            save_sample_set(&path, &set).unwrap();
            let back = load_sample_set(&path).unwrap();
            assert_eq!(back.n, set.n);
            assert_eq!(back.indices, set.indices);
            assert_eq!(back.with_replacement, set.with_replacement);
        }
    }

    #[test]
    fn sample_set_loader_rejects_bad_mode_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("omega.json");
        std::fs::write(&path, r#"{"n": 10, "mode": "maybe", "indices": [1, 2]}"#).unwrap();
        assert!(matches!(load_sample_set(&path), Err(Error::Format(_))));
        std::fs::write(&path, r#"{"n": 10, "mode": "without", "indices": [2, 2]}"#).unwrap();
        assert!(matches!(load_sample_set(&path), Err(Error::Format(_))));
        std::fs::write(&path, r#"{"n": 10, "mode": "with", "indices": [2, 2]}"#).unwrap();
        assert!(load_sample_set(&path).is_ok());
    }

    #[test]
    fn solve_result_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.json");
        let sig = generate_signal(&SignalGenConfig::new(63, 3, 11)).unwrap();
        let shape = make_shape(63, None).unwrap();
        let omega = sample_indices(63, 40, false, 12).unwrap();
        let observed = project_samples(&sig.samples, &omega).unwrap();
        let res = fiht_solve(&observed, &omega, &shape, &SolverConfig::new(3)).unwrap();
        save_result(&path, &res).unwrap();
        let back = load_result(&path).unwrap();
        assert_eq!(bits(&back.x_rec), bits(&res.x_rec));
        assert_eq!(back.iterations, res.iterations);
        assert_eq!(back.converged, res.converged);
        assert_eq!(back.stop, res.stop);
        assert_eq!(back.trace.len(), res.trace.len());
    }

    #[test]
    fn small_nd_signal_stays_readable_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nd.json");
        let sig = generate_nd_signal(&NdSignalGenConfig::new(vec![8, 9], 3, 5)).unwrap();
        save_nd_signal(&path, &sig).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.trim_start().starts_with('{'));
        assert!(text.contains("\"entries\""));
        let back = load_nd_signal(&path).unwrap();
        assert_eq!(back.dims, sig.dims);
        assert_eq!(back.modes.len(), sig.modes.len());
        assert_eq!(bits(&back.entries), bits(&sig.entries));
    }

    #[test]
    fn large_nd_signal_uses_binary_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nd.bin");
        let sig = generate_nd_signal(&NdSignalGenConfig::new(vec![20, 20, 20], 2, 6)).unwrap();
        assert!(sig.entries.len() > ND_JSON_ENTRY_LIMIT);
        save_nd_signal(&path, &sig).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let split = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(bytes.len(), split + 1 + 16 * sig.entries.len());
        let back = load_nd_signal(&path).unwrap();
        assert_eq!(back.dims, sig.dims);
        assert_eq!(bits(&back.entries), bits(&sig.entries));
    }

    #[test]
    fn nd_loader_rejects_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nd.bin");
        let sig = generate_nd_signal(&NdSignalGenConfig::new(vec![20, 20, 20], 2, 6)).unwrap();
        save_nd_signal(&path, &sig).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_nd_signal(&path), Err(Error::Format(_))));
    }

    #[test]
    fn nd_loader_rejects_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nd.json");
        std::fs::write(
            &path,
            r#"{"dims": [2, 3], "modes": [{"f": [0.1, 0.2], "tau": [0.0, 0.0],
                "d_re": 1.0, "d_im": 0.0}], "entries": [[1.0, 0.0]]}"#,
        )
        .unwrap();
        assert!(matches!(load_nd_signal(&path), Err(Error::Format(_))));
    }
}
