//! Characteristics computed directly from click counts, as commonly done in
//! experiments. They serve as the comparison baseline for the PND fit.

use crate::detection::{CountRecord, Layout};
use crate::error::{invalid, undefined, Result};
use crate::pnd::Mode;

/// Arm outcome indices `(XX, XO, OX, OO)`; `X` is no click.
fn t_clicks(o: usize) -> bool {
    o >= 2
}

fn r_clicks(o: usize) -> bool {
    o % 2 == 1
}

/// `C_tr / (S_t S_r)` over the two detectors of `mode`.
pub fn count_based_g2(rec: &CountRecord, mode: Mode) -> Result<f64> {
    let c = rec.mode_counts(mode);
    let n = rec.n_m();
    let s_t = (c[2] + c[3]) / n;
    let s_r = (c[1] + c[3]) / n;
    if s_t <= 0.0 || s_r <= 0.0 {
        return Err(undefined("count-based g2 needs clicks on both detectors"));
    }
    Ok((c[3] / n) / (s_t * s_r))
}

fn bipartite(rec: &CountRecord) -> Result<()> {
    if rec.layout() != Layout::Bipartite {
        return Err(invalid("this estimator needs a two-mode record"));
    }
    Ok(())
}

/// Splits a 16-status index into `(heralded arm outcome, heralding arm
/// outcome)`.
fn split(k: usize, heralded: Mode) -> (usize, usize) {
    match heralded {
        Mode::Signal => (k / 4, k % 4),
        Mode::Idler => (k % 4, k / 4),
    }
}

/// `C_tri S_i / (C_ti C_ri)`, with the heralding mode reduced to a click on
/// either of its detectors.
pub fn count_based_gh2(rec: &CountRecord, heralded: Mode) -> Result<f64> {
    bipartite(rec)?;
    let (mut c_tr_h, mut c_t_h, mut c_r_h, mut s_h) = (0.0, 0.0, 0.0, 0.0);
    for (k, f) in rec.counts().iter().enumerate() {
        let (a, h) = split(k, heralded);
        if h == 0 {
            continue;
        }
        s_h += f;
        if t_clicks(a) {
            c_t_h += f;
        }
        if r_clicks(a) {
            c_r_h += f;
        }
        if t_clicks(a) && r_clicks(a) {
            c_tr_h += f;
        }
    }
    if c_t_h <= 0.0 || c_r_h <= 0.0 {
        return Err(undefined("count-based heralded g2 needs heralded coincidences on both detectors"));
    }
    // the n_m factors cancel
    Ok(c_tr_h * s_h / (c_t_h * c_r_h))
}

/// Count-based pair probability and heralding efficiencies.
///
/// `etas` are the efficiencies of detectors 1..4 (signal t, signal r, idler
/// t, idler r). `p_g = Σ_{j∈s, k∈i} C_jk / (η_j η_k)` and
/// `η_H,s = p_g / Σ_{k∈i} S_k / η_k`.
pub fn count_based_pg_eta(rec: &CountRecord, etas: [f64; 4]) -> Result<(f64, f64, f64)> {
    bipartite(rec)?;
    if etas.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(invalid("detector efficiencies must lie in (0, 1]"));
    }
    let n = rec.n_m();
    // detector j clicks in status (a, b): j=0 t_s, 1 r_s, 2 t_i, 3 r_i
    let clicks = |k: usize, j: usize| {
        let (a, b) = (k / 4, k % 4);
        match j {
            0 => t_clicks(a),
            1 => r_clicks(a),
            2 => t_clicks(b),
            _ => r_clicks(b),
        }
    };
    let rate = |pred: &dyn Fn(usize) -> bool| -> f64 {
        rec.counts().iter().enumerate().filter(|(k, _)| pred(*k)).map(|(_, f)| f).sum::<f64>() / n
    };
    let mut p_g = 0.0;
    for j in 0..2 {
        for k in 2..4 {
            p_g += rate(&|s| clicks(s, j) && clicks(s, k)) / (etas[j] * etas[k]);
        }
    }
    let singles: Vec<f64> = (0..4).map(|j| rate(&|s| clicks(s, j)) / etas[j]).collect();
    let herald_i = singles[2] + singles[3];
    let herald_s = singles[0] + singles[1];
    if herald_i <= 0.0 || herald_s <= 0.0 {
        return Err(undefined("count-based heralding efficiency needs singles in both modes"));
    }
    Ok((p_g, p_g / herald_i, p_g / herald_s))
}
