//! C ABI over `qite-core`.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns a `QiteStatus`; on failure the message is
//! available from `qite_last_error` on the same thread. Outputs are written
//! only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qite_core::analysis::{failure_prob, FailureSpec};
use qite_core::graph::UnitDiskGraph;
use qite_core::hamiltonian::{DiagonalHamiltonian, DEFAULT_U};
use qite_core::ite::ite_state;
use qite_core::qite::{qite_evolve as evolve, DomainKind, DomainSet, QiteConfig};
use qite_core::runner::default_box_side;
use qite_core::sampler::solve_state;
use qite_core::state::{StateVector, MAX_DOMAIN_QUBITS};
use qite_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QiteStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeMismatch = 3,
    ResourceLimit = 4,
    Numerical = 5,
    Parse = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Domain recipe for `qite_evolve`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QiteDomain {
    /// Each term's own support.
    A = 0,
    /// Coupling supports widened to four qubits with random neighbours; needs the graph.
    B = 1,
    /// One domain covering every qubit.
    Full = 2,
}

/// Evolution parameters; start from `qite_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QiteOptions {
    pub tau: f64,
    pub n_max: usize,
    /// One of the `QITE_DOMAIN_*` values.
    pub domain: u32,
    pub regularization_lambda: f64,
    /// Seed for random domain choices.
    pub rng_seed: u64,
}

/// Outcome of `qite_solve`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QiteSolveResult {
    /// Basis index of the best shot; qubit 0 is the most significant bit.
    pub best_index: u64,
    pub best_energy: f64,
    pub succeeded: bool,
}

pub struct QiteGraph(UnitDiskGraph);
pub struct QiteHamiltonian(DiagonalHamiltonian);
pub struct QiteState(StateVector);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QiteStatus {
    match e {
        Error::InvalidArgument(_) => QiteStatus::InvalidArgument,
        Error::SizeMismatch { .. } => QiteStatus::SizeMismatch,
        Error::Resource { .. } => QiteStatus::ResourceLimit,
        Error::Numerical(_) => QiteStatus::Numerical,
        Error::Parse { .. } => QiteStatus::Parse,
        Error::Config(_) => QiteStatus::Config,
        Error::Io(_) => QiteStatus::Io,
    }
}

struct Fail(QiteStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QiteStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording failures and containing panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QiteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            QiteStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            QiteStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    let slot = unsafe { out.as_mut() }.ok_or_else(|| null(what))?;
    *slot = value;
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(QiteStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qite_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn qite_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default edge penalty `u`.
#[no_mangle]
pub extern "C" fn qite_default_u() -> f64 {
    DEFAULT_U
}

/// Defaults: `tau = 0.01`, `n_max = 100`, domain A, `lambda = 1e-6`, seed 0.
#[no_mangle]
pub extern "C" fn qite_options_default() -> QiteOptions {
    let cfg = QiteConfig::default();
    QiteOptions {
        tau: cfg.tau,
        n_max: cfg.n_max,
        domain: QiteDomain::A as u32,
        regularization_lambda: cfg.regularization_lambda,
        rng_seed: cfg.rng_seed,
    }
}

/// The 6-vertex benchmark graph.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qite_graph_paper6(out: *mut *mut QiteGraph) -> QiteStatus {
    guard(|| unsafe { write_out(out, boxed(QiteGraph(UnitDiskGraph::paper_graph_6q())), "out") })
}

/// Random unit-disk graph on `n` vertices in a square of side `box_side`
/// (`box_side <= 0` picks `0.6 sqrt(n)`).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qite_graph_random(
    n: usize,
    box_side: f64,
    rng_seed: u64,
    out: *mut *mut QiteGraph,
) -> QiteStatus {
    guard(|| {
        let side = if box_side > 0.0 { box_side } else { default_box_side(n) };
        let g = UnitDiskGraph::random_unit_disk(n, side, rng_seed)?;
        unsafe { write_out(out, boxed(QiteGraph(g)), "out") }
    })
}

/// Parses a graph in the text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qite_graph_from_text(text: *const c_char, out: *mut *mut QiteGraph) -> QiteStatus {
    guard(|| {
        let g = UnitDiskGraph::parse(unsafe { c_str(text, "text") }?)?;
        unsafe { write_out(out, boxed(QiteGraph(g)), "out") }
    })
}

/// Reads a graph file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qite_graph_from_file(path: *const c_char, out: *mut *mut QiteGraph) -> QiteStatus {
    guard(|| {
        let g = UnitDiskGraph::read_file(unsafe { c_str(path, "path") }?)?;
        unsafe { write_out(out, boxed(QiteGraph(g)), "out") }
    })
}

/// Releases a graph; null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qite_graph_free(g: *mut QiteGraph) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Vertex and edge counts.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_graph_counts(
    g: *const QiteGraph,
    n_vertices: *mut usize,
    n_edges: *mut usize,
) -> QiteStatus {
    guard(|| {
        let g = unsafe { borrow(g, "graph") }?;
        if n_edges.is_null() {
            return Err(null("n_edges"));
        }
        unsafe {
            write_out(n_vertices, g.0.n_vertices(), "n_vertices")?;
            write_out(n_edges, g.0.n_edges(), "n_edges")
        }
    })
}

/// Exhaustive maximum independent set: size and number of optimal sets.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_graph_mis(g: *const QiteGraph, size: *mut usize, n_witnesses: *mut usize) -> QiteStatus {
    guard(|| {
        let mis = unsafe { borrow(g, "graph") }?.0.brute_force_mis()?;
        if n_witnesses.is_null() {
            return Err(null("n_witnesses"));
        }
        unsafe {
            write_out(size, mis.size, "size")?;
            write_out(n_witnesses, mis.witnesses.len(), "n_witnesses")
        }
    })
}

/// UD-MIS Hamiltonian of `g` with edge penalty `u`.
///
/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qite_hamiltonian_from_udmis(
    g: *const QiteGraph,
    u: f64,
    out: *mut *mut QiteHamiltonian,
) -> QiteStatus {
    guard(|| {
        let h = DiagonalHamiltonian::from_udmis(&unsafe { borrow(g, "graph") }?.0, u)?;
        unsafe { write_out(out, boxed(QiteHamiltonian(h)), "out") }
    })
}

/// Releases a Hamiltonian; null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qite_hamiltonian_free(h: *mut QiteHamiltonian) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Energy of basis state `index`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_hamiltonian_energy(h: *const QiteHamiltonian, index: u64, out: *mut f64) -> QiteStatus {
    guard(|| {
        let h = unsafe { borrow(h, "hamiltonian") }?;
        let dim = 1u64 << h.0.n_qubits();
        if index >= dim {
            return Err(Fail(
                QiteStatus::InvalidArgument,
                format!("index {index} out of range for {dim} states"),
            ));
        }
        unsafe { write_out(out, h.0.energy_of_index(index as usize), "out") }
    })
}

/// Ground energy, its degeneracy and the spectral gap (0 when there is a single level).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_hamiltonian_ground(
    h: *const QiteHamiltonian,
    energy: *mut f64,
    degeneracy: *mut usize,
    gap: *mut f64,
) -> QiteStatus {
    guard(|| {
        let spectrum = unsafe { borrow(h, "hamiltonian") }?.0.spectrum()?;
        if degeneracy.is_null() || gap.is_null() {
            return Err(null("degeneracy or gap"));
        }
        unsafe {
            write_out(energy, spectrum.ground_energy(), "energy")?;
            write_out(degeneracy, spectrum.ground_degeneracy(), "degeneracy")?;
            write_out(gap, spectrum.gap().unwrap_or(0.0), "gap")
        }
    })
}

/// Runs QITE from `|+>^N` for `options->n_max` iterations. `g` may be null
/// unless the domain is `QITE_DOMAIN_B`; `options` may be null for defaults.
///
/// # Safety
/// Non-null pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_evolve(
    h: *const QiteHamiltonian,
    g: *const QiteGraph,
    options: *const QiteOptions,
    out: *mut *mut QiteState,
) -> QiteStatus {
    guard(|| {
        let h = &unsafe { borrow(h, "hamiltonian") }?.0;
        let g = unsafe { g.as_ref() }.map(|g| &g.0);
        let opts = unsafe { options.as_ref() }.copied().unwrap_or_else(|| qite_options_default());
        let domain_kind = match opts.domain {
            d if d == QiteDomain::A as u32 => DomainKind::A,
            d if d == QiteDomain::B as u32 => DomainKind::B,
            d if d == QiteDomain::Full as u32 => DomainKind::Full,
            d => return Err(Fail(QiteStatus::InvalidArgument, format!("unknown domain {d}"))),
        };
        let defaults = QiteConfig::default();
        let cfg = QiteConfig {
            tau: opts.tau,
            n_max: opts.n_max,
            domain_kind,
            regularization_lambda: opts.regularization_lambda,
            rng_seed: opts.rng_seed,
            record_every: opts.n_max.max(1),
            max_domain_qubits: if domain_kind == DomainKind::Full {
                h.n_qubits().clamp(defaults.max_domain_qubits, MAX_DOMAIN_QUBITS)
            } else {
                defaults.max_domain_qubits
            },
            ..defaults
        };
        let domains = DomainSet::for_kind(domain_kind, h, g, opts.rng_seed)?;
        let state = evolve(h, &domains, &cfg)?.final_state;
        unsafe { write_out(out, boxed(QiteState(state)), "out") }
    })
}

/// Exact normalized `exp(-t H)|+>^N`.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qite_ite_state(h: *const QiteHamiltonian, t: f64, out: *mut *mut QiteState) -> QiteStatus {
    guard(|| {
        let s = ite_state(&unsafe { borrow(h, "hamiltonian") }?.0, t)?;
        unsafe { write_out(out, boxed(QiteState(s)), "out") }
    })
}

/// Releases a state; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qite_state_free(s: *mut QiteState) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Number of qubits of a state.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_state_n_qubits(s: *const QiteState, out: *mut usize) -> QiteStatus {
    guard(|| unsafe { write_out(out, borrow(s, "state")?.0.n_qubits(), "out") })
}

/// Copies the `2^N` outcome probabilities into `buf`; `len` must equal `2^N`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qite_state_probabilities(s: *const QiteState, buf: *mut f64, len: usize) -> QiteStatus {
    guard(|| {
        let s = unsafe { borrow(s, "state") }?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != s.0.dim() {
            return Err(Error::SizeMismatch {
                expected: s.0.dim(),
                found: len,
            }
            .into());
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(buf, len) };
        dst.copy_from_slice(&s.0.probabilities());
        Ok(())
    })
}

/// `|<a|b>|^2`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_state_fidelity(a: *const QiteState, b: *const QiteState, out: *mut f64) -> QiteStatus {
    guard(|| {
        let f = unsafe { borrow(a, "a") }?.0.fidelity(&unsafe { borrow(b, "b") }?.0)?;
        unsafe { write_out(out, f, "out") }
    })
}

/// Probability that one shot lands above `E_0 + delta_e`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_failure_prob(
    s: *const QiteState,
    h: *const QiteHamiltonian,
    delta_e: f64,
    out: *mut f64,
) -> QiteStatus {
    guard(|| {
        let s = unsafe { borrow(s, "state") }?;
        let spectrum = unsafe { borrow(h, "hamiltonian") }?.0.spectrum()?;
        let pf = failure_prob(&s.0, &spectrum, delta_e)?;
        unsafe { write_out(out, pf, "out") }
    })
}

/// Measures `shots` times with `rng_seed` and reports the lowest-energy outcome.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qite_solve(
    s: *const QiteState,
    h: *const QiteHamiltonian,
    delta_e: f64,
    shots: usize,
    rng_seed: u64,
    out: *mut QiteSolveResult,
) -> QiteStatus {
    guard(|| {
        let s = unsafe { borrow(s, "state") }?;
        let h = unsafe { borrow(h, "hamiltonian") }?;
        let spec = FailureSpec::new(delta_e, shots)?;
        let res = solve_state(&s.0, &h.0, &spec, rng_seed)?;
        let result = QiteSolveResult {
            best_index: res.best_bitstring.to_index() as u64,
            best_energy: res.best_energy,
            succeeded: res.succeeded,
        };
        unsafe { write_out(out, result, "out") }
    })
}
