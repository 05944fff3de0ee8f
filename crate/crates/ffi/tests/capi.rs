use std::ffi::CStr;
use std::ptr;

use ppstat_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        pps_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn arm(gamma: f64) -> PpsDetectorPair {
    PpsDetectorPair { t: 0.5, eta_t: 0.6, eta_r: 0.55, d_t: 1e-6, d_r: 2e-6, gamma }
}

const PND: [f64; 9] = [0.97, 0.004, 0.0005, 0.003, 0.02, 0.0003, 0.0002, 0.0004, 0.0016];

#[test]
fn gaussian_jsd_mode_numbers_agree() {
    unsafe {
        let mut jsd = ptr::null_mut();
        assert_eq!(pps_jsd_gaussian(1.0, 0.2, -std::f64::consts::FRAC_PI_4, 64, 64, &mut jsd), PpsStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(pps_schmidt_number_svd(jsd, &mut a), PpsStatus::Ok);
        assert_eq!(pps_schmidt_number_analytic(jsd, &mut b), PpsStatus::Ok);
        // Separable only at sigma_plus == sigma_minus; here K = (s+/s- + s-/s+)/2.
        let k = (5.0 + 0.2) / 2.0;
        assert!((a - k).abs() / k < 1e-3, "{a}");
        assert!((a - b).abs() / a < 1e-9);

        let mut fs = ptr::null_mut();
        let mut fi = ptr::null_mut();
        assert_eq!(pps_filter_rect(jsd, false, 0.0, 100.0, &mut fs), PpsStatus::Ok);
        assert_eq!(pps_filter_rect(jsd, true, 0.0, 100.0, &mut fi), PpsStatus::Ok);
        let mut cells = [0.0; 9];
        assert_eq!(pps_synthesize_pnd(jsd, fs, fi, 1e-3, cells.as_mut_ptr(), 9), PpsStatus::Ok);
        assert!((cells.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Unfiltered pairs: photon numbers are perfectly correlated.
        assert!(cells[1].abs() < 1e-15 && cells[3].abs() < 1e-15);
        assert!((cells[4] - 1e-3).abs() < 1e-15);
        let mut c = PpsCharacteristics { p_g: 0.0, eta_h_s: 0.0, eta_h_i: 0.0, g2_s: 0.0, g2_i: 0.0, gh2_s: 0.0, gh2_i: 0.0 };
        assert_eq!(pps_characteristics(cells.as_ptr(), 9, &mut c), PpsStatus::Ok);
        assert!((c.eta_h_s - 1.0).abs() < 1e-12 && (c.eta_h_i - 1.0).abs() < 1e-12);

        pps_filter_free(fs);
        pps_filter_free(fi);
        pps_jsd_free(jsd);
    }
}

#[test]
fn jsd_from_values_is_normalized() {
    let axis = [0.0, 1.0, 2.0];
    let re = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0];
    let im = [0.0; 9];
    unsafe {
        let mut jsd = ptr::null_mut();
        assert_eq!(
            pps_jsd_from_values(axis.as_ptr(), 3, axis.as_ptr(), 3, re.as_ptr(), im.as_ptr(), &mut jsd),
            PpsStatus::Ok
        );
        let mut k = 0.0;
        assert_eq!(pps_schmidt_number_svd(jsd, &mut k), PpsStatus::Ok);
        // Schmidt weights 1/9, 4/9, 4/9.
        let expected = 1.0 / (1.0f64 / 81.0 + 32.0 / 81.0);
        assert!((k - expected).abs() < 1e-12);
        pps_jsd_free(jsd);
    }
}

#[test]
fn bipartite_probs_sum_to_one() {
    let mut out = [0.0; 16];
    let (s, i) = (arm(1.0), arm(0.5));
    unsafe {
        assert_eq!(pps_bipartite_probs(PND.as_ptr(), 9, &s, &i, out.as_mut_ptr()), PpsStatus::Ok);
    }
    assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(out.iter().all(|&v| v >= 0.0));
}

#[test]
fn errors_carry_status_and_message() {
    let mut out = [0.0; 16];
    let bad = PpsDetectorPair { eta_t: 1.5, ..arm(1.0) };
    unsafe {
        assert_eq!(pps_bipartite_probs(PND.as_ptr(), 9, &bad, &arm(1.0), out.as_mut_ptr()), PpsStatus::InvalidInput);
        assert!(!last_error().is_empty());
        assert_eq!(pps_bipartite_probs(PND.as_ptr(), 8, &arm(1.0), &arm(1.0), out.as_mut_ptr()), PpsStatus::InvalidInput);
        assert_eq!(pps_bipartite_probs(ptr::null(), 9, &arm(1.0), &arm(1.0), out.as_mut_ptr()), PpsStatus::NullPointer);
        assert!(last_error().contains("cells"));

        let mut r = 0.0;
        assert_eq!(pps_rmsle(PND.as_ptr(), PND.as_ptr(), 9, 1e-15, &mut r), PpsStatus::Ok);
        assert_eq!(r, 0.0);
        assert_eq!(pps_rmsle(PND.as_ptr(), PND.as_ptr(), 9, 0.0, &mut r), PpsStatus::InvalidInput);
        let mut f = 0.0;
        assert_eq!(pps_fidelity(PND.as_ptr(), PND.as_ptr(), 9, &mut f), PpsStatus::Ok);
        assert!((f - 1.0).abs() < 1e-12);

        // Truncated message keeps the terminator.
        let mut small = [1 as std::ffi::c_char; 4];
        let n = pps_last_error(small.as_mut_ptr(), small.len());
        assert!(n > 3);
        assert_eq!(small[3], 0);
        assert_eq!(pps_last_error(ptr::null_mut(), 0), n);

        // Null handles are ignored by the free functions.
        pps_jsd_free(ptr::null_mut());
        pps_model_free(ptr::null_mut());
        pps_counts_free(ptr::null_mut());
        pps_estimate_free(ptr::null_mut());
        assert_eq!(pps_estimate_len(ptr::null()), 0);
    }
}

#[test]
fn estimate_round_trip_from_expected_counts() {
    let n_m = 1e9;
    let gammas = [1.0, 0.5, 0.25];
    unsafe {
        let model = pps_model_new();
        let counts = pps_counts_new();
        for (nu, &g) in gammas.iter().enumerate() {
            let (s, i) = (arm(g), arm(g));
            assert_eq!(pps_model_add_bipartite(model, nu, &s, &i), PpsStatus::Ok);
            let mut w = [0.0; 16];
            assert_eq!(pps_bipartite_probs(PND.as_ptr(), 9, &s, &i, w.as_mut_ptr()), PpsStatus::Ok);
            let f: Vec<f64> = w.iter().map(|p| p * n_m).collect();
            assert_eq!(pps_counts_add(counts, nu, n_m, f.as_ptr(), 16), PpsStatus::Ok);
        }
        assert_eq!(pps_counts_add(counts, 9, n_m, PND.as_ptr(), 9), PpsStatus::InvalidInput);

        let mut est = ptr::null_mut();
        assert_eq!(pps_estimate(model, counts, false, 7, &mut est), PpsStatus::Ok);
        assert_eq!(pps_estimate_len(est), 9);
        let mut cells = [0.0; 9];
        assert_eq!(pps_estimate_cells(est, cells.as_mut_ptr(), 9), PpsStatus::Ok);
        for (a, b) in cells.iter().zip(PND) {
            assert!((a - b).abs() / b < 1e-6, "{a} vs {b}");
        }
        let mut conv = false;
        let mut ll = 0.0;
        assert_eq!(pps_estimate_summary(est, &mut ll, ptr::null_mut(), &mut conv), PpsStatus::Ok);
        assert!(conv && ll.is_finite());
        assert_eq!(pps_estimate_cells(est, cells.as_mut_ptr(), 3), PpsStatus::InvalidInput);

        pps_estimate_free(est);
        pps_counts_free(counts);
        pps_model_free(model);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ppstat.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let names: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(names.len() > 20);
    for n in names {
        let declared = header.contains(&format!(" {n}(")) || header.contains(&format!("*{n}("));
        assert!(declared, "{n} missing from header");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(cc.status.success());
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libppstat_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipped", lib.display());
        return;
    }
    let manifest = env!("CARGO_MANIFEST_DIR");
    let bin = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("ppstat_smoke");
    let status = std::process::Command::new("cc")
        .arg(format!("{manifest}/tests/c/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let run = std::process::Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok 1.25"));
}
