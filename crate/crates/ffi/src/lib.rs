//! C ABI for ppstat.
//!
//! Objects cross the boundary as opaque handles created by `*_new` style
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`PpsStatus`]; on failure the message is kept per thread and
//! can be read with [`pps_last_error`]. Output pointers are written only on
//! success.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use ppstat::detection::{bipartite_probs, CountRecord, DetectorPair, Layout};
use ppstat::estimator::{estimate, EstimateOptions, EstimateResult, LikelihoodModel, Objective, Setup};
use ppstat::jsd::{schmidt_number_analytic, schmidt_number_svd, synthesize_pnd, FilterProfile, JsdGrid, PumpGain};
use ppstat::metrics::{fidelity, rmsle, MetricConfig};
use ppstat::pnd::{CharacteristicSet, PndMatrix};
use ppstat::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Undefined = 3,
    Infeasible = 4,
    Mismatch = 5,
    NotConverged = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: PpsStatus, msg: impl Into<String>) -> PpsStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> PpsStatus {
    let status = match e {
        Error::InvalidInput(_) => PpsStatus::InvalidInput,
        Error::Undefined(_) => PpsStatus::Undefined,
        Error::Infeasible(_) => PpsStatus::Infeasible,
        Error::Mismatch(_) => PpsStatus::Mismatch,
        Error::NotConverged(_) => PpsStatus::NotConverged,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PpsStatus>) -> PpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpsStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PpsStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn status(self) -> Result<T, PpsStatus>;
}

impl<T> OrStatus<T> for ppstat::Result<T> {
    fn status(self) -> Result<T, PpsStatus> {
        self.map_err(from_error)
    }
}

unsafe fn read<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], PpsStatus> {
    if p.is_null() {
        if n == 0 {
            return Ok(&[]);
        }
        return Err(fail(PpsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, PpsStatus> {
    p.as_ref().ok_or_else(|| fail(PpsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, PpsStatus> {
    p.as_mut().ok_or_else(|| fail(PpsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn write<T>(p: *mut T, v: T, name: &str) -> Result<(), PpsStatus> {
    if p.is_null() {
        return Err(fail(PpsStatus::NullPointer, format!("{name} is null")));
    }
    p.write(v);
    Ok(())
}

unsafe fn write_slice(p: *mut f64, len: usize, v: &[f64], name: &str) -> Result<(), PpsStatus> {
    if p.is_null() {
        return Err(fail(PpsStatus::NullPointer, format!("{name} is null")));
    }
    if len < v.len() {
        return Err(fail(PpsStatus::InvalidInput, format!("{name} holds {len} values, {} needed", v.len())));
    }
    slice::from_raw_parts_mut(p, v.len()).copy_from_slice(v);
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pps_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            let out = slice::from_raw_parts_mut(buf as *mut u8, len);
            out[..n].copy_from_slice(&msg.as_bytes()[..n]);
            out[n] = 0;
        }
        msg.len()
    })
}

/// One detection arm: beam splitter transmittance `t`, the efficiencies and
/// noise probabilities of its transmitted and reflected detectors, and the
/// attenuator transmittance `gamma`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpsDetectorPair {
    pub t: f64,
    pub eta_t: f64,
    pub eta_r: f64,
    pub d_t: f64,
    pub d_r: f64,
    pub gamma: f64,
}

impl PpsDetectorPair {
    fn to_core(self) -> ppstat::Result<DetectorPair> {
        DetectorPair::new(self.t, self.eta_t, self.eta_r, self.d_t, self.d_r)?.with_gamma(self.gamma)
    }
}

/// Characteristics of a two-mode PND; NaN where undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpsCharacteristics {
    pub p_g: f64,
    pub eta_h_s: f64,
    pub eta_h_i: f64,
    pub g2_s: f64,
    pub g2_i: f64,
    pub gh2_s: f64,
    pub gh2_i: f64,
}

/// Opaque joint spectral amplitude.
pub struct PpsJsd(JsdGrid);

/// Opaque filter transmittance sampled on one axis of a JSD.
pub struct PpsFilter(FilterProfile);

/// Opaque set of detection setups keyed by setting id.
pub struct PpsModel {
    setups: Vec<(usize, Setup)>,
}

/// Opaque collection of count records.
pub struct PpsCounts(Vec<CountRecord>);

/// Opaque fit result.
pub struct PpsEstimate(EstimateResult);

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Correlated Gaussian JSD on an `n_s × n_i` grid spanning six marginal
/// standard deviations.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn pps_jsd_gaussian(
    sigma_plus: f64,
    sigma_minus: f64,
    theta: f64,
    n_s: usize,
    n_i: usize,
    out: *mut *mut PpsJsd,
) -> PpsStatus {
    guard(|| {
        let g = JsdGrid::gaussian(sigma_plus, sigma_minus, theta, n_s, n_i, None).status()?;
        write(out, boxed(PpsJsd(g)), "out")
    })
}

/// JSD from uniform axes and a row-major (signal index major) amplitude
/// grid of `n_s * n_i` complex values split into real and imaginary parts.
/// The grid is normalized on construction.
///
/// # Safety
/// Array pointers must reference the stated number of values.
#[no_mangle]
pub unsafe extern "C" fn pps_jsd_from_values(
    axis_s: *const f64,
    n_s: usize,
    axis_i: *const f64,
    n_i: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut PpsJsd,
) -> PpsStatus {
    guard(|| {
        let xs = read(axis_s, n_s, "axis_s")?.to_vec();
        let xi = read(axis_i, n_i, "axis_i")?.to_vec();
        let re = read(re, n_s * n_i, "re")?;
        let im = read(im, n_s * n_i, "im")?;
        let vals = nalgebra::DMatrix::from_fn(n_s, n_i, |r, c| {
            num_complex::Complex64::new(re[r * n_i + c], im[r * n_i + c])
        });
        let a = ppstat::jsd::Axis::new(xs).status()?;
        let b = ppstat::jsd::Axis::new(xi).status()?;
        let g = JsdGrid::new(a, b, vals).status()?;
        write(out, boxed(PpsJsd(g)), "out")
    })
}

/// # Safety
/// `jsd` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pps_jsd_free(jsd: *mut PpsJsd) {
    if !jsd.is_null() {
        drop(Box::from_raw(jsd));
    }
}

/// Mode number from the singular values of the grid.
///
/// # Safety
/// `jsd` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pps_schmidt_number_svd(jsd: *const PpsJsd, out: *mut f64) -> PpsStatus {
    guard(|| {
        let k = schmidt_number_svd(&handle(jsd, "jsd")?.0).status()?;
        write(out, k, "out")
    })
}

/// Mode number from the fourfold overlap integral.
///
/// # Safety
/// `jsd` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pps_schmidt_number_analytic(jsd: *const PpsJsd, out: *mut f64) -> PpsStatus {
    guard(|| {
        let k = schmidt_number_analytic(&handle(jsd, "jsd")?.0).status()?;
        write(out, k, "out")
    })
}

fn axis_of(jsd: &JsdGrid, idler: bool) -> ppstat::jsd::Axis {
    if idler {
        jsd.axis_i().clone()
    } else {
        jsd.axis_s().clone()
    }
}

/// Ideal rectangular filter on the signal (`idler = false`) or idler axis.
///
/// # Safety
/// `jsd` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn pps_filter_rect(
    jsd: *const PpsJsd,
    idler: bool,
    center: f64,
    width: f64,
    out: *mut *mut PpsFilter,
) -> PpsStatus {
    guard(|| {
        let axis = axis_of(&handle(jsd, "jsd")?.0, idler);
        let f = FilterProfile::rect(axis, center, width).status()?;
        write(out, boxed(PpsFilter(f)), "out")
    })
}

/// Filter from amplitude transmittance samples, one per axis point.
///
/// # Safety
/// `jsd` must be a live handle, `t` must hold `n` values and `out` must be
/// a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn pps_filter_from_amplitude(
    jsd: *const PpsJsd,
    idler: bool,
    t: *const f64,
    n: usize,
    out: *mut *mut PpsFilter,
) -> PpsStatus {
    guard(|| {
        let axis = axis_of(&handle(jsd, "jsd")?.0, idler);
        let f = FilterProfile::from_amplitude(axis, read(t, n, "t")?.to_vec()).status()?;
        write(out, boxed(PpsFilter(f)), "out")
    })
}

/// # Safety
/// `filter` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pps_filter_free(filter: *mut PpsFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Filtered PND up to two pairs, written row-major into `out[9]`
/// (`out[3*j + k] = P_jk`).
///
/// # Safety
/// Handles must be live and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn pps_synthesize_pnd(
    jsd: *const PpsJsd,
    filter_s: *const PpsFilter,
    filter_i: *const PpsFilter,
    xi_sq: f64,
    out: *mut f64,
    len: usize,
) -> PpsStatus {
    guard(|| {
        let p = synthesize_pnd(
            &handle(jsd, "jsd")?.0,
            &handle(filter_s, "filter_s")?.0,
            &handle(filter_i, "filter_i")?.0,
            PumpGain::new(xi_sq).status()?,
        )
        .status()?;
        write_slice(out, len, p.cells(), "out")
    })
}

unsafe fn pnd(cells: *const f64, n_cells: usize) -> Result<PndMatrix, PpsStatus> {
    let c = read(cells, n_cells, "cells")?;
    let dim = (n_cells as f64).sqrt().round() as usize;
    if dim < 2 || dim * dim != n_cells {
        return Err(fail(PpsStatus::InvalidInput, format!("{n_cells} cells do not form a square PND")));
    }
    PndMatrix::new(dim - 1, c.to_vec()).status()
}

/// Characteristics of a row-major square PND.
///
/// # Safety
/// `cells` must hold `n_cells` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pps_characteristics(
    cells: *const f64,
    n_cells: usize,
    out: *mut PpsCharacteristics,
) -> PpsStatus {
    guard(|| {
        let c = CharacteristicSet::from_pnd(&pnd(cells, n_cells)?).status()?;
        let v = PpsCharacteristics {
            p_g: c.p_g,
            eta_h_s: c.eta_h_s,
            eta_h_i: c.eta_h_i,
            g2_s: c.g2_s,
            g2_i: c.g2_i,
            gh2_s: c.gh2_s,
            gh2_i: c.gh2_i,
        };
        write(out, v, "out")
    })
}

/// Probabilities of the 16 click statuses, signal outcome major, written to
/// `out[16]`.
///
/// # Safety
/// `cells` must hold `n_cells` values, the arms must be readable and `out`
/// must hold 16 values.
#[no_mangle]
pub unsafe extern "C" fn pps_bipartite_probs(
    cells: *const f64,
    n_cells: usize,
    det_s: *const PpsDetectorPair,
    det_i: *const PpsDetectorPair,
    out: *mut f64,
) -> PpsStatus {
    guard(|| {
        let p = pnd(cells, n_cells)?;
        let s = handle(det_s, "det_s")?.to_core().status()?;
        let i = handle(det_i, "det_i")?.to_core().status()?;
        let w = bipartite_probs(&p, &s, &i).status()?;
        write_slice(out, 16, &w, "out")
    })
}

/// RMSLE between two distributions of `n` cells.
///
/// # Safety
/// `p` and `o` must hold `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pps_rmsle(p: *const f64, o: *const f64, n: usize, alpha: f64, out: *mut f64) -> PpsStatus {
    guard(|| {
        let v = rmsle(read(p, n, "p")?, read(o, n, "o")?, MetricConfig { alpha }).status()?;
        write(out, v, "out")
    })
}

/// Fidelity `Σ sqrt(P O)` between two distributions of `n` cells.
///
/// # Safety
/// `p` and `o` must hold `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pps_fidelity(p: *const f64, o: *const f64, n: usize, out: *mut f64) -> PpsStatus {
    guard(|| {
        let v = fidelity(read(p, n, "p")?, read(o, n, "o")?).status()?;
        write(out, v, "out")
    })
}

/// Empty detection model.
#[no_mangle]
pub extern "C" fn pps_model_new() -> *mut PpsModel {
    boxed(PpsModel { setups: Vec::new() })
}

/// Adds two-mode setting `nu`.
///
/// # Safety
/// `model` must be a live handle and the arms readable.
#[no_mangle]
pub unsafe extern "C" fn pps_model_add_bipartite(
    model: *mut PpsModel,
    nu: usize,
    det_s: *const PpsDetectorPair,
    det_i: *const PpsDetectorPair,
) -> PpsStatus {
    guard(|| {
        let s = handle(det_s, "det_s")?.to_core().status()?;
        let i = handle(det_i, "det_i")?.to_core().status()?;
        handle_mut(model, "model")?.setups.push((nu, Setup::Bipartite { s, i }));
        Ok(())
    })
}

/// Adds single-mode setting `nu`.
///
/// # Safety
/// `model` must be a live handle and `det` readable.
#[no_mangle]
pub unsafe extern "C" fn pps_model_add_single(model: *mut PpsModel, nu: usize, det: *const PpsDetectorPair) -> PpsStatus {
    guard(|| {
        let d = handle(det, "det")?.to_core().status()?;
        handle_mut(model, "model")?.setups.push((nu, Setup::Single(d)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pps_model_free(model: *mut PpsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Empty collection of count records.
#[no_mangle]
pub extern "C" fn pps_counts_new() -> *mut PpsCounts {
    boxed(PpsCounts(Vec::new()))
}

/// Adds the record of setting `nu`: 16 two-mode or 4 single-mode outcome
/// counts summing to `n_m`.
///
/// # Safety
/// `counts` must be a live handle and `f` must hold `n_f` values.
#[no_mangle]
pub unsafe extern "C" fn pps_counts_add(
    counts: *mut PpsCounts,
    nu: usize,
    n_m: f64,
    f: *const f64,
    n_f: usize,
) -> PpsStatus {
    guard(|| {
        let layout = match n_f {
            4 => Layout::Single,
            16 => Layout::Bipartite,
            _ => return Err(fail(PpsStatus::InvalidInput, format!("{n_f} outcome counts; expected 4 or 16"))),
        };
        let rec = CountRecord::new(layout, read(f, n_f, "f")?.to_vec(), n_m, nu).status()?;
        handle_mut(counts, "counts")?.0.push(rec);
        Ok(())
    })
}

/// # Safety
/// `counts` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pps_counts_free(counts: *mut PpsCounts) {
    if !counts.is_null() {
        drop(Box::from_raw(counts));
    }
}

/// Maximum-likelihood fit (`renormalized = false`) or the renormalized
/// fit over attenuator settings that ignores all-click events.
///
/// # Safety
/// Handles must be live and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn pps_estimate(
    model: *const PpsModel,
    counts: *const PpsCounts,
    renormalized: bool,
    seed: u64,
    out: *mut *mut PpsEstimate,
) -> PpsStatus {
    guard(|| {
        let m = LikelihoodModel::new(2, handle(model, "model")?.setups.iter().copied()).status()?;
        let objective = if renormalized { Objective::Eml } else { Objective::Ml };
        let opts = EstimateOptions { seed, ..EstimateOptions::default() };
        let est = estimate(objective, &handle(counts, "counts")?.0, &m, &opts).status()?;
        write(out, boxed(PpsEstimate(est)), "out")
    })
}

/// Number of fitted cells: 9 for two modes, 3 for one.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pps_estimate_len(est: *const PpsEstimate) -> usize {
    est.as_ref().map_or(0, |e| e.0.reconstruction.cells().len())
}

/// Copies the fitted cells, row-major for two modes.
///
/// # Safety
/// `est` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn pps_estimate_cells(est: *const PpsEstimate, out: *mut f64, len: usize) -> PpsStatus {
    guard(|| write_slice(out, len, handle(est, "est")?.0.reconstruction.cells(), "out"))
}

/// Maximized log-likelihood, iterations of the best start and whether it
/// converged. Any output pointer may be null.
///
/// # Safety
/// `est` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pps_estimate_summary(
    est: *const PpsEstimate,
    loglik: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
) -> PpsStatus {
    guard(|| {
        let e = &handle(est, "est")?.0;
        if !loglik.is_null() {
            loglik.write(e.loglik);
        }
        if !iterations.is_null() {
            iterations.write(e.iterations);
        }
        if !converged.is_null() {
            converged.write(e.converged);
        }
        Ok(())
    })
}

/// # Safety
/// `est` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn pps_estimate_free(est: *mut PpsEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}
