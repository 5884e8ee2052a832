//! Compiles and runs a C program against the generated header and shared library.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // The test binary lives in <target>/<profile>/deps; the cdylib one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    assert!(
        lib_dir.join("libqite_ffi.so").exists() || lib_dir.join("libqite_ffi.dylib").exists(),
        "shared library not found in {}",
        lib_dir.display()
    );
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lqite_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("a C compiler named cc is required");
    assert!(status.success());
    let out = Command::new(&bin)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .env("DYLD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.starts_with(&format!("version {}", env!("CARGO_PKG_VERSION"))));
}
