//! Python bindings: run games, read and write traces, referee transcripts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use numgame::cli::{self, check_ext_config};
use numgame::protocol::trace;
use numgame::referee::{self as core_referee, RefereeReport};
use numgame::strategies::OddEnumeration;
use numgame::{AdversarySpec, GameKind, Transcript, Window};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_window(s: &str) -> PyResult<Window> {
    s.parse().map_err(value_err)
}

/// A finished (truncated) play of one game.
#[pyclass(name = "Transcript", module = "numgame", frozen)]
struct PyTranscript {
    inner: Transcript,
}

#[pymethods]
impl PyTranscript {
    #[getter]
    fn game(&self) -> String {
        self.inner.kind.to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn stages(&self) -> u64 {
        self.inner.stages
    }

    /// Bob's account of each output row: `(table, row, provenance)`.
    fn provenance(&self) -> Vec<(String, u64, String)> {
        self.inner
            .provenance
            .iter()
            .map(|p| (self.inner.kind.table_label(p.table), p.row, p.kind.to_string()))
            .collect()
    }

    /// Cells of a table at the end of the run as `(row, col, val)`.
    /// `name` is `A`, `R`, `K` or an output table label such as `B` or `B2`.
    fn cells(&self, name: &str) -> PyResult<Vec<(u64, u64, u64)>> {
        let st = self.inner.replay().map_err(value_err)?;
        let table = match name {
            "A" => &st.a,
            "R" => &st.r,
            "K" => return Ok(st.k.iter().map(|row| (row, 0, 0)).collect()),
            label => {
                let idx = self
                    .inner
                    .kind
                    .parse_table_label(label)
                    .filter(|&i| i < st.out.len())
                    .ok_or_else(|| PyValueError::new_err(format!("no table `{label}`")))?;
                &st.out[idx]
            }
        };
        Ok(table
            .rows()
            .flat_map(|(r, cells)| cells.iter().map(move |(&c, &v)| (r, c, v)))
            .collect())
    }

    fn serialize(&self) -> String {
        trace::serialize(&self.inner)
    }

    #[pyo3(signature = (window = "64x32"))]
    fn referee(&self, window: &str) -> PyResult<PyReport> {
        let r = core_referee::referee(&self.inner, parse_window(window)?).map_err(value_err)?;
        Ok(PyReport { inner: r })
    }

    #[pyo3(signature = (window = "64x32"))]
    fn brute_force_referee(&self, window: &str) -> PyResult<PyReport> {
        let r = core_referee::brute_force_referee(&self.inner, parse_window(window)?).map_err(value_err)?;
        Ok(PyReport { inner: r })
    }

    fn __repr__(&self) -> String {
        format!("Transcript(game='{}', seed={}, stages={})", self.inner.kind, self.inner.seed, self.inner.stages)
    }
}

/// Verdicts of one referee on one transcript.
#[pyclass(name = "Report", module = "numgame", frozen)]
struct PyReport {
    inner: RefereeReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn stage(&self) -> u64 {
        self.inner.stage
    }

    #[getter]
    fn has_violation(&self) -> bool {
        self.inner.has_violation()
    }

    /// `(cond, scope, status, detail)` per verdict, in report order.
    fn verdicts(&self) -> Vec<(String, String, String, String)> {
        self.inner
            .verdicts
            .iter()
            .map(|v| (v.cond.clone(), v.scope.clone(), v.status.to_string(), v.detail.clone()))
            .collect()
    }

    fn lines(&self) -> Vec<String> {
        self.inner.lines()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __eq__(&self, other: &PyReport) -> bool {
        self.inner.verdict_set() == other.inner.verdict_set()
    }
}

/// Plays `stages` stages of `game` against `adversary` (same syntax as the
/// command line, e.g. `silent`, `random:rows=4`, `scripted:PATH`).
#[pyfunction]
#[pyo3(signature = (game, stages, adversary = "silent", seed = 0))]
fn run(game: &str, stages: u64, adversary: &str, seed: u64) -> PyResult<PyTranscript> {
    let kind: GameKind = game.parse().map_err(value_err)?;
    let spec = AdversarySpec::from_arg(adversary).map_err(value_err)?;
    check_ext_config(&kind, &spec, seed).map_err(PyValueError::new_err)?;
    let inner = cli::play(kind, &spec, stages, seed).map_err(value_err)?;
    Ok(PyTranscript { inner })
}

#[pyfunction]
fn parse_trace(text: &str) -> PyResult<PyTranscript> {
    let inner = trace::parse(text).map_err(value_err)?;
    Ok(PyTranscript { inner })
}

/// Replays a trace and runs both referees; returns `(exit_code, report)`.
#[pyfunction]
#[pyo3(signature = (text, window = "64x32"))]
fn verify(text: &str, window: &str) -> PyResult<(i32, String)> {
    let out = cli::verify_text(text, parse_window(window)?);
    Ok((out.code, if out.code == 0 { out.stdout } else { out.stderr }))
}

/// `(game, conditions, parameters)` for every game.
#[pyfunction]
fn catalog() -> Vec<(String, Vec<String>, String)> {
    core_referee::catalog()
        .into_iter()
        .map(|(name, conds, params)| {
            (name.to_string(), conds.into_iter().map(String::from).collect(), params.to_string())
        })
        .collect()
}

/// The first `n` odd finite functions in canonical order, as text.
#[pyfunction]
fn odd_functions(n: usize) -> Vec<String> {
    let mut e = OddEnumeration::new();
    (0..n).map(|i| e.get(i).to_string()).collect()
}

#[pymodule]
#[pyo3(name = "numgame")]
fn numgame_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTranscript>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(parse_trace, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(odd_functions, m)?)?;
    Ok(())
}
