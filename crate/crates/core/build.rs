use std::path::PathBuf;

// Debian-family systems ship the CBLAS interface inside the OpenBLAS/BLAS
// shared objects instead of a standalone libcblas.so, while the netlib
// system backend links `-lcblas`. Provide the alias when it is missing.
fn main() {
    let candidates = [
        "/usr/lib/x86_64-linux-gnu/libcblas.so",
        "/usr/lib/libcblas.so",
        "/usr/lib64/libcblas.so",
    ];
    if candidates.iter().any(|p| PathBuf::from(p).exists()) {
        return;
    }
    let providers = [
        "/usr/lib/x86_64-linux-gnu/openblas-pthread/libblas.so.3",
        "/usr/lib/x86_64-linux-gnu/libopenblas.so",
        "/usr/lib/x86_64-linux-gnu/libblas.so.3",
    ];
    let Some(provider) = providers.iter().find(|p| PathBuf::from(p).exists()) else {
        return;
    };
    let out = PathBuf::from(std::env::var("OUT_DIR").unwrap());
    let alias = out.join("libcblas.so");
    let _ = std::fs::remove_file(&alias);
    if std::os::unix::fs::symlink(provider, &alias).is_ok() {
        println!("cargo:rustc-link-search=native={}", out.display());
    }
}
