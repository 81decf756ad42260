fn main() {
    // System OpenBLAS carries the full LAPACK interface on this platform.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
