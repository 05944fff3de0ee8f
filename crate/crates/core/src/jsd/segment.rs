use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::jsd::filter::FilterProfile;
use crate::jsd::grid::JsdGrid;
use crate::jsd::overlap::{complex_overlap, pair_overlap, OverlapAxis};
use crate::jsd::schmidt::schmidt_number_analytic;

/// Segments whose probability falls below this are treated as empty.
pub const EMPTY_SEGMENT: f64 = 1e-15;

/// A joint spectral amplitude split by a pair of bandpass filters.
///
/// Index 0..3 correspond to `F1 = t_x r_y f` (signal passes, idler
/// reflected), `F2 = r_x t_y f`, `F3 = t_x t_y f` (both pass) and
/// `F4 = r_x r_y f`.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub q: [f64; 4],
    pub parts: [Option<JsdGrid>; 4],
    pub kappa: [f64; 4],
    pub ox13: f64,
    pub ox24: f64,
    pub oy14: f64,
    pub oy23: f64,
    pub oc: Complex64,
}

impl Segmentation {
    pub fn part(&self, j: usize) -> Option<&JsdGrid> {
        self.parts[j].as_ref()
    }

    pub fn is_empty(&self, j: usize) -> bool {
        self.parts[j].is_none()
    }
}

pub fn segment(jsd: &JsdGrid, filt_s: &FilterProfile, filt_i: &FilterProfile) -> Result<Segmentation> {
    if !filt_s.axis().matches(jsd.axis_s()) {
        return Err(invalid("signal filter axis does not match the JSD signal axis"));
    }
    if !filt_i.axis().matches(jsd.axis_i()) {
        return Err(invalid("idler filter axis does not match the JSD idler axis"));
    }
    let tx = filt_s.transmission();
    let ty = filt_i.transmission();
    let rx = filt_s.reflection();
    let ry = filt_i.reflection();
    let w = jsd.weighted();
    let (ns, ni) = w.shape();

    let masks: [(&[f64], &[f64]); 4] = [(tx, &ry), (&rx, ty), (tx, ty), (&rx, &ry)];
    let mut q = [0.0; 4];
    let mut parts: [Option<JsdGrid>; 4] = Default::default();
    let mut kappa = [1.0; 4];
    for (j, (mx, my)) in masks.iter().enumerate() {
        let m = DMatrix::from_fn(ns, ni, |r, c| w[(r, c)] * (mx[r] * my[c]));
        let qj: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        if qj < EMPTY_SEGMENT {
            continue;
        }
        q[j] = qj;
        let part = JsdGrid::from_weighted(jsd.axis_s().clone(), jsd.axis_i().clone(), m / Complex64::new(qj.sqrt(), 0.0));
        kappa[j] = schmidt_number_analytic(&part)?;
        parts[j] = Some(part);
    }

    let ox13 = pair_overlap(parts[0].as_ref(), parts[2].as_ref(), OverlapAxis::X);
    let ox24 = pair_overlap(parts[1].as_ref(), parts[3].as_ref(), OverlapAxis::X);
    let oy14 = pair_overlap(parts[0].as_ref(), parts[3].as_ref(), OverlapAxis::Y);
    let oy23 = pair_overlap(parts[1].as_ref(), parts[2].as_ref(), OverlapAxis::Y);
    let oc = complex_overlap(parts[0].as_ref(), parts[1].as_ref(), parts[2].as_ref(), parts[3].as_ref());

    Ok(Segmentation { q, parts, kappa, ox13, ox24, oy14, oy23, oc })
}
