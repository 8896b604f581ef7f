use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use colorchain_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cc_last_error()) }.to_string_lossy().into_owned()
}

fn graph(spec: &str) -> *mut CcGraph {
    let spec = CString::new(spec).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { cc_graph_from_spec(spec.as_ptr(), &mut g) }, CcStatus::Ok);
    g
}

#[test]
fn graph_handles_report_their_shape() {
    let g = graph("grid:3:3");
    unsafe {
        assert_eq!(cc_graph_vertex_count(g), 9);
        assert_eq!(cc_graph_edge_count(g), 12);
        assert_eq!(cc_graph_max_degree(g), 4);
        assert_eq!(cc_graph_degeneracy(g), 2);
        cc_graph_free(g);
    }
    assert_eq!(unsafe { cc_graph_vertex_count(ptr::null()) }, 0);
}

#[test]
fn edge_lists_parse_and_errors_are_reported() {
    let text = CString::new("# vertices: 4\n0 1\n1 2\n").unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(cc_graph_from_edge_list(text.as_ptr(), &mut g), CcStatus::Ok);
        assert_eq!(cc_graph_vertex_count(g), 4);
        cc_graph_free(g);
    }
    assert_eq!(last_error(), "");

    let bad = CString::new("0 0\n").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cc_graph_from_edge_list(bad.as_ptr(), &mut h) }, CcStatus::Parse);
    assert!(h.is_null());
    assert!(last_error().contains("self-loop"), "{}", last_error());

    assert_eq!(unsafe { cc_graph_from_spec(ptr::null(), &mut h) }, CcStatus::NullPointer);
    assert!(last_error().contains("null"));
}

#[test]
fn chains_stay_proper_and_count_matches_the_oracle() {
    let g = graph("cycle:5");
    let mut chain = ptr::null_mut();
    let mut colors = [0u32; 5];
    let mut count = 0u64;
    unsafe {
        assert_eq!(cc_count_colorings(g, 3, &mut count), CcStatus::Ok);
        assert_eq!(count, 30);
        assert_eq!(cc_chain_new(g, 4, 7, &mut chain), CcStatus::Ok);
        cc_graph_free(g);
        assert_eq!(cc_chain_glauber(chain, 1000), CcStatus::Ok);
        assert_eq!(cc_chain_coloring(chain, colors.as_mut_ptr(), 5), CcStatus::Ok);
        assert_eq!(cc_chain_coloring(chain, colors.as_mut_ptr(), 4), CcStatus::InvalidArgument);
        cc_chain_free(chain);
    }
    for v in 0..5 {
        assert!((1..=4).contains(&colors[v]));
        assert_ne!(colors[v], colors[(v + 1) % 5]);
    }
}

#[test]
fn partitions_drive_set_dynamics() {
    let g = graph("star:8");
    let mut part = ptr::null_mut();
    let mut chain = ptr::null_mut();
    let mut levels = [0usize; 9];
    let mut colors = [0u32; 9];
    unsafe {
        assert_eq!(cc_partition_new(g, 0.0, 1, &mut part), CcStatus::Ok);
        assert!(cc_partition_level_count(part) >= 1);
        assert!(cc_partition_epsilon(part) > 0.0);
        assert_eq!(cc_partition_levels(part, levels.as_mut_ptr(), 9), CcStatus::Ok);
        assert_eq!(cc_chain_new(g, 6, 3, &mut chain), CcStatus::Ok);
        assert_eq!(cc_chain_set_dynamics(chain, part, 20), CcStatus::Ok);
        assert_eq!(cc_chain_coloring(chain, colors.as_mut_ptr(), 9), CcStatus::Ok);
        cc_chain_free(chain);
        cc_partition_free(part);
        cc_graph_free(g);
    }
    assert!(levels[0] > levels[1], "center sits above the leaves: {levels:?}");
    assert!(colors[1..].iter().all(|&c| c != colors[0]));
}

#[test]
fn regular_graphs_have_no_spectral_gap() {
    let g = graph("complete:5");
    let mut part = ptr::null_mut();
    unsafe {
        assert_eq!(cc_partition_new(g, 0.0, 1, &mut part), CcStatus::NoSpectralGap);
        assert!(part.is_null());
        cc_graph_free(g);
    }
    assert!(last_error().contains("spectral gap"));
}

#[test]
fn too_few_colors_is_an_error() {
    let g = graph("complete:4");
    let mut chain = ptr::null_mut();
    unsafe {
        assert_ne!(cc_chain_new(g, 3, 0, &mut chain), CcStatus::Ok);
        assert!(chain.is_null());
        cc_graph_free(g);
    }
    assert!(!last_error().is_empty());
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/colorchain.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["cc_graph_from_spec", "cc_chain_glauber", "cc_partition_new", "cc_last_error", "CC_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_program_links_against_the_static_library() {
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().and_then(|deps| deps.parent()).unwrap();
    let lib = target.join("libcolorchain_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("static library or C compiler unavailable; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let status = Command::new("cc")
        .arg(format!("{manifest}/tests/c/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("bogus"));
}
