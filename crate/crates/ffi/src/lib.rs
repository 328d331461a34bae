//! C ABI for `steercert`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`-style constructors and
//! released with the matching `*_free`. Every fallible call returns a [`SteercertStatus`]; on
//! failure a message is available from [`steercert_last_error`] on the same thread.
//!
//! Complex matrices are passed as two `double` arrays (real and imaginary parts) in row-major
//! order. A measurement set of dimension `d` uses `9·d²` entries ordered `[x][a][row][col]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use steercert::certifier::{self, CertificationInput, CertificationReport};
use steercert::lhs::{self, OptimizerConfig, ProbabilityRule};
use steercert::linalg::{c, Complex, ComplexMatrix, Ket};
use steercert::povm::{self, MeasurementSet};
use steercert::robustness;
use steercert::scenario;
use steercert::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteercertStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    NotEntangled = 4,
    Panic = 5,
}

/// Three three-outcome POVMs on a common space.
pub struct SteercertMeasurementSet {
    inner: MeasurementSet,
}

/// Normalized pure state on `ℂ² ⊗ ℂ^d`.
pub struct SteercertState {
    inner: Ket,
    dim_b: usize,
}

/// Result of a certification run.
pub struct SteercertReport {
    inner: CertificationReport,
    dim_b: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SteercertStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotEntangled(_) => SteercertStatus::NotEntangled,
            Error::OutOfRange(_) | Error::DimensionMismatch(_) => SteercertStatus::InvalidArgument,
            _ => SteercertStatus::Validation,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SteercertStatus::NullPointer, format!("`{name}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SteercertStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SteercertStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            SteercertStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(out: *mut T, v: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

unsafe fn complex_slice(re: *const f64, im: *const f64, n: usize) -> Result<Vec<Complex>, Failure> {
    if re.is_null() {
        return Err(null("re"));
    }
    if im.is_null() {
        return Err(null("im"));
    }
    let re = std::slice::from_raw_parts(re, n);
    let im = std::slice::from_raw_parts(im, n);
    Ok(re.iter().zip(im).map(|(&r, &i)| c(r, i)).collect())
}

unsafe fn write_matrix(m: &ComplexMatrix, re: *mut f64, im: *mut f64) -> Result<(), Failure> {
    if re.is_null() {
        return Err(null("re_out"));
    }
    if im.is_null() {
        return Err(null("im_out"));
    }
    for (k, z) in m.data().iter().enumerate() {
        re.add(k).write(z.re);
        im.add(k).write(z.im);
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null if none. The pointer stays valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn steercert_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn steercert_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(s) => s,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}

// ---------------------------------------------------------------------------------------------
// Measurement sets

fn boxed_set(set: MeasurementSet) -> *mut SteercertMeasurementSet {
    Box::into_raw(Box::new(SteercertMeasurementSet { inner: set }))
}

/// Trusted trines `M_x^a = (2/3)|e_{a,x}⟩⟨e_{a,x}|`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_alice_ideal(
    out: *mut *mut SteercertMeasurementSet,
) -> SteercertStatus {
    guard(|| write(out, boxed_set(povm::alice_ideal()), "out"))
}

/// Ideal untrusted measurements `N_x^a = (2/3)|e*⊥_{a,x}⟩⟨e*⊥_{a,x}|`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_bob_ideal(
    out: *mut *mut SteercertMeasurementSet,
) -> SteercertStatus {
    guard(|| write(out, boxed_set(povm::bob_ideal()), "out"))
}

/// Ideal untrusted measurements mixed with white noise of weight `epsilon ∈ [0, 1]`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_noisy_bob(
    epsilon: f64,
    out: *mut *mut SteercertMeasurementSet,
) -> SteercertStatus {
    guard(|| {
        let set = robustness::noisy_bob(epsilon)?;
        write(out, boxed_set(set), "out")
    })
}

/// Builds and validates a measurement set of dimension `dim` from `9·dim²` entries per array,
/// ordered `[x][a][row][col]`.
///
/// # Safety
/// `re` and `im` must each point to `9·dim²` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_new(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SteercertMeasurementSet,
) -> SteercertStatus {
    guard(|| {
        if dim == 0 {
            return Err(Failure(
                SteercertStatus::InvalidArgument,
                "dim must be positive".into(),
            ));
        }
        let n = dim * dim;
        let data = complex_slice(re, im, 9 * n)?;
        let elements = (0..3)
            .map(|x| {
                (0..3)
                    .map(|a| {
                        let off = (3 * x + a) * n;
                        ComplexMatrix::from_fn(dim, dim, |i, j| data[off + i * dim + j])
                    })
                    .collect()
            })
            .collect();
        let set = MeasurementSet::from_elements(elements)?;
        write(out, boxed_set(set), "out")
    })
}

/// Dimension the measurements act on, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_dim(
    set: *const SteercertMeasurementSet,
) -> usize {
    set.as_ref().map_or(0, |s| s.inner.dim())
}

/// Copies element `(x, a)` into `dim²` entries of `re_out` and `im_out`.
///
/// # Safety
/// `set` must be a live handle; the output arrays must hold `dim²` doubles.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_element(
    set: *const SteercertMeasurementSet,
    x: usize,
    a: usize,
    re_out: *mut f64,
    im_out: *mut f64,
) -> SteercertStatus {
    guard(|| {
        let s = deref(set, "set")?;
        if x >= 3 || a >= 3 {
            return Err(Failure(
                SteercertStatus::InvalidArgument,
                format!("(x, a) = ({x}, {a}) out of range"),
            ));
        }
        write_matrix(s.inner.element(x, a), re_out, im_out)
    })
}

/// Releases a measurement set; null is ignored.
///
/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_free(set: *mut SteercertMeasurementSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Rank-one extremality of setting `x`: writes 1 (extremal), 0 (not extremal) or -1 (criterion
/// not applicable).
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_measurement_set_extremal(
    set: *const SteercertMeasurementSet,
    x: usize,
    out: *mut i32,
) -> SteercertStatus {
    guard(|| {
        let s = deref(set, "set")?;
        if x >= 3 {
            return Err(Failure(
                SteercertStatus::InvalidArgument,
                format!("x = {x} out of range"),
            ));
        }
        let r = povm::check_extremality(s.inner.setting(x));
        write(out, r.extremal.map_or(-1, i32::from), "out")
    })
}

// ---------------------------------------------------------------------------------------------
// States

fn boxed_state(inner: Ket, dim_b: usize) -> *mut SteercertState {
    Box::into_raw(Box::new(SteercertState { inner, dim_b }))
}

/// Pure state on `ℂ² ⊗ ℂ^{dim_b}` from `2·dim_b` amplitudes; the norm must be 1 within 1e-12.
///
/// # Safety
/// `re` and `im` must each point to `2·dim_b` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_state_new(
    dim_b: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SteercertState,
) -> SteercertStatus {
    guard(|| {
        if dim_b == 0 {
            return Err(Failure(
                SteercertStatus::InvalidArgument,
                "dim_b must be positive".into(),
            ));
        }
        let k = Ket::new(complex_slice(re, im, 2 * dim_b)?)?;
        write(out, boxed_state(k, dim_b), "out")
    })
}

/// `(|00⟩ + |11⟩)/√2` embedded in `ℂ² ⊗ ℂ^{dim_b}`, `dim_b ≥ 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_state_phi_plus(
    dim_b: usize,
    out: *mut *mut SteercertState,
) -> SteercertStatus {
    guard(|| {
        if dim_b < 2 {
            return Err(Failure(
                SteercertStatus::InvalidArgument,
                "dim_b must be at least 2".into(),
            ));
        }
        write(out, boxed_state(Ket::phi_plus(dim_b), dim_b), "out")
    })
}

/// `(|00⟩ + (1−δ)|11⟩) / √(1 + (1−δ)²)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_state_imbalanced(
    delta: f64,
    out: *mut *mut SteercertState,
) -> SteercertStatus {
    guard(|| {
        let k = robustness::imbalanced_ket(delta)?;
        write(out, boxed_state(k, 2), "out")
    })
}

/// Releases a state; null is ignored.
///
/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn steercert_state_free(state: *mut SteercertState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

// ---------------------------------------------------------------------------------------------
// Functional and bounds

/// `W = 3 − Σ p(a,a|x,x)` for the given state and measurement sets (`alice` on the qubit).
///
/// # Safety
/// All handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_steering_functional(
    state: *const SteercertState,
    alice: *const SteercertMeasurementSet,
    bob: *const SteercertMeasurementSet,
    out: *mut f64,
) -> SteercertStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let a = deref(alice, "alice")?;
        let b = deref(bob, "bob")?;
        if s.dim_b != b.inner.dim() {
            return Err(Failure(
                SteercertStatus::InvalidArgument,
                "state and bob dimensions differ".into(),
            ));
        }
        let d = scenario::distribution_from_ket(&s.inner, &a.inner, &b.inner)?;
        write(out, scenario::steering_functional(&d)?, "out")
    })
}

/// Local-hidden-state bound of the trusted trines by grid search (`grid` points per angle,
/// at least 2) and simplex refinement.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_lhs_bound(
    grid: usize,
    seed: u64,
    out: *mut f64,
) -> SteercertStatus {
    guard(|| {
        if grid < 2 {
            return Err(Failure(
                SteercertStatus::InvalidArgument,
                "grid must be at least 2".into(),
            ));
        }
        let cfg = OptimizerConfig {
            grid,
            seed,
            ..OptimizerConfig::default()
        };
        let r = lhs::optimize_bound(&povm::alice_ideal(), &cfg);
        write(out, r.beta_l, "out")
    })
}

/// Exact local-hidden-state bound from the 27 deterministic responses.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_lhs_bound_exact(out: *mut f64) -> SteercertStatus {
    guard(|| {
        let cc = lhs::deterministic_lhs_cross_check(&povm::alice_ideal(), ProbabilityRule::Born)?;
        write(out, cc.value, "out")
    })
}

// ---------------------------------------------------------------------------------------------
// Certification

/// Certifies `state` with untrusted measurements `bob` at tolerance `tolerance > 0`. A report
/// is produced for passing and failing inputs alike; non-entangled states return
/// `NOT_ENTANGLED` without a report.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_certify(
    state: *const SteercertState,
    bob: *const SteercertMeasurementSet,
    tolerance: f64,
    out: *mut *mut SteercertReport,
) -> SteercertStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let b = deref(bob, "bob")?;
        let input = CertificationInput::new(s.inner.clone(), b.inner.clone())?;
        let report = certifier::certify(&input, tolerance)?;
        let boxed = Box::into_raw(Box::new(SteercertReport {
            inner: report,
            dim_b: b.inner.dim(),
        }));
        write(out, boxed, "out")
    })
}

/// Whether the report passed; false for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_passed(report: *const SteercertReport) -> bool {
    report.as_ref().is_some_and(|r| r.inner.passed)
}

/// Largest `p(a,a|x,x)`; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_max_diagonal_probability(
    report: *const SteercertReport,
) -> f64 {
    report
        .as_ref()
        .map_or(f64::NAN, |r| r.inner.max_diagonal_probability)
}

/// `|⟨φ⁺|(𝟙 ⊗ U_B)|ψ⟩|²`; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_state_fidelity(report: *const SteercertReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.state_fidelity)
}

/// Largest operator-norm deviation of the transformed measurements; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_measurement_deviation(
    report: *const SteercertReport,
) -> f64 {
    report
        .as_ref()
        .map_or(f64::NAN, |r| r.inner.measurement_deviation)
}

/// Largest residual of the identity chain; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_identity_chain_max_residual(
    report: *const SteercertReport,
) -> f64 {
    report
        .as_ref()
        .map_or(f64::NAN, |r| r.inner.identity_chain.max_residual())
}

/// Dimension of the extracted unitary; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_dim_b(report: *const SteercertReport) -> usize {
    report.as_ref().map_or(0, |r| r.dim_b)
}

/// Copies the extracted unitary into `dim_b²` entries of each output array.
///
/// # Safety
/// `report` must be live; the outputs must hold `dim_b²` doubles.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_unitary(
    report: *const SteercertReport,
    re_out: *mut f64,
    im_out: *mut f64,
) -> SteercertStatus {
    guard(|| {
        write_matrix(
            &deref(report, "report")?.inner.extracted_unitary,
            re_out,
            im_out,
        )
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn steercert_report_free(report: *mut SteercertReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

// ---------------------------------------------------------------------------------------------
// Noise closed forms

/// `3 − 3ε + 2ε²`
#[no_mangle]
pub extern "C" fn steercert_w_closed_form_epsilon(epsilon: f64) -> f64 {
    robustness::w_closed_form_epsilon(epsilon)
}

/// Published closed form of `3 − W` for the imbalanced noisy family.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_f_closed_form(
    delta: f64,
    epsilon: f64,
    out: *mut f64,
) -> SteercertStatus {
    guard(|| write(out, robustness::f_closed_form(delta, epsilon)?, "out"))
}

/// `3 − W` of the imbalanced noisy family evaluated exactly.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_f_exact(
    delta: f64,
    epsilon: f64,
    out: *mut f64,
) -> SteercertStatus {
    guard(|| write(out, robustness::f_exact(delta, epsilon)?, "out"))
}

/// `W` of the noisy configuration by direct simulation.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_w_simulated(
    epsilon_s: f64,
    epsilon_b: f64,
    delta: f64,
    out: *mut f64,
) -> SteercertStatus {
    guard(|| {
        write(
            out,
            robustness::w_simulated(epsilon_s, epsilon_b, delta)?,
            "out",
        )
    })
}

/// Noise at which `3 − 3ε + 2ε²` equals `beta_l`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steercert_critical_epsilon(beta_l: f64, out: *mut f64) -> SteercertStatus {
    guard(|| match robustness::critical_epsilon(beta_l) {
        Some(e) => write(out, e, "out"),
        None => Err(Failure(
            SteercertStatus::InvalidArgument,
            format!("no crossing for β = {beta_l}"),
        )),
    })
}
